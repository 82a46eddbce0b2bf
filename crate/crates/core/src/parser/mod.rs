//! Lexer, parser and pretty-printer for the query language subset.

mod ast;
mod lexer;
mod printer;

use std::collections::HashSet;

use crate::error::{Error, ErrorCode, Pos, Result};
use crate::item::{ArithOp, AtomicKind, CmpOp, FunctionSignature, ItemType, Occurrence, SequenceType};

pub use ast::{Clause, Expr, ExprKind, FunctionDecl, Literal, Module, Param};
pub use lexer::{lex, Keyword, Tok, Token};
pub use printer::{print_expr, print_module, print_sequence_type};

/// Parses a complete module: prolog declarations followed by a body.
pub fn parse(text: &str) -> Result<Module> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, idx: 0 };
    let module = p.module()?;
    Ok(module)
}

/// Parses a single expression with no prolog.
pub fn parse_expr(text: &str) -> Result<Expr> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, idx: 0 };
    let e = p.expr()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    idx: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.idx].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.idx + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.idx].pos
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.idx].clone();
        if self.idx + 1 < self.tokens.len() {
            self.idx += 1;
        }
        t
    }

    fn at(&self, tok: &Tok) -> bool {
        self.peek() == tok
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        *self.peek() == Tok::Keyword(kw)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        self.eat(&Tok::Keyword(kw))
    }

    fn fail<T>(&self, expected: &str) -> Result<T> {
        Err(Error::at(
            ErrorCode::ParseError,
            self.pos(),
            format!("expected {expected}, found {}", self.peek()),
        ))
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<Token> {
        if self.at(&tok) {
            Ok(self.advance())
        } else {
            self.fail(expected)
        }
    }

    fn expect_kw(&mut self, kw: Keyword) -> Result<Token> {
        self.expect(Tok::Keyword(kw), &format!("one of {{{}}}", kw.as_str()))
    }

    fn var_name(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Var(name) => {
                self.advance();
                Ok(name)
            }
            _ => self.fail("a variable such as $name"),
        }
    }

    fn module(&mut self) -> Result<Module> {
        let mut functions: Vec<FunctionDecl> = Vec::new();
        while self.at_kw(Keyword::Declare) {
            let decl = self.function_decl()?;
            if functions
                .iter()
                .any(|f| f.name == decl.name && f.arity() == decl.arity())
            {
                return Err(Error::at(
                    ErrorCode::DuplicateFunction,
                    decl.pos,
                    format!("function {}#{} is declared twice", decl.name, decl.arity()),
                ));
            }
            functions.push(decl);
        }
        let body = self.expr()?;
        self.expect(Tok::Eof, "one of {\",\", end of input}")?;
        Ok(Module { functions, body })
    }

    fn function_decl(&mut self) -> Result<FunctionDecl> {
        let pos = self.expect_kw(Keyword::Declare)?.pos;
        self.expect_kw(Keyword::Function)?;
        let name = match self.peek().clone() {
            Tok::Name(n) => {
                self.advance();
                n
            }
            _ => return self.fail("a function name"),
        };
        self.expect(Tok::LParen, "(")?;
        let mut params = Vec::new();
        let mut seen = HashSet::new();
        if !self.at(&Tok::RParen) {
            loop {
                let ppos = self.pos();
                let pname = self.var_name()?;
                if !seen.insert(pname.clone()) {
                    return Err(Error::at(
                        ErrorCode::DuplicateParam,
                        ppos,
                        format!("parameter ${pname} is declared twice"),
                    ));
                }
                let ty = if self.eat_kw(Keyword::As) {
                    Some(self.sequence_type()?)
                } else {
                    None
                };
                params.push(Param { name: pname, ty });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "one of {\",\", \")\"}")?;
        let ret = if self.eat_kw(Keyword::As) {
            Some(self.sequence_type()?)
        } else {
            None
        };
        let body_pos = self.expect(Tok::LBrace, "{")?.pos;
        let body = if self.at(&Tok::RBrace) {
            Expr::new(ExprKind::Sequence(vec![]), body_pos)
        } else {
            self.expr()?
        };
        self.expect(Tok::RBrace, "}")?;
        self.expect(Tok::Semicolon, ";")?;
        Ok(FunctionDecl {
            name,
            params,
            ret,
            body,
            pos,
        })
    }

    fn sequence_type(&mut self) -> Result<SequenceType> {
        let item = self.item_type()?;
        let occurrence = match self.peek() {
            Tok::Question => Occurrence::Optional,
            Tok::Star => Occurrence::ZeroOrMore,
            Tok::Plus => Occurrence::OneOrMore,
            _ => Occurrence::One,
        };
        if occurrence != Occurrence::One {
            self.advance();
        }
        Ok(SequenceType { item, occurrence })
    }

    fn item_type(&mut self) -> Result<ItemType> {
        if self.eat(&Tok::LParen) {
            let t = self.item_type()?;
            self.expect(Tok::RParen, ")")?;
            return Ok(t);
        }
        if self.eat_kw(Keyword::Function) {
            self.expect(Tok::LParen, "(")?;
            if self.eat(&Tok::Star) {
                self.expect(Tok::RParen, ")")?;
                return Ok(ItemType::Function(None));
            }
            let mut params = Vec::new();
            if !self.at(&Tok::RParen) {
                loop {
                    params.push(self.sequence_type()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "one of {\",\", \")\"}")?;
            self.expect_kw(Keyword::As)?;
            let ret = self.sequence_type()?;
            return Ok(ItemType::Function(Some(Box::new(FunctionSignature { params, ret }))));
        }
        let Tok::Name(name) = self.peek().clone() else {
            return self.fail("a type name");
        };
        let t = match name.as_str() {
            "item" => ItemType::Item,
            "object" => ItemType::Object,
            "array" => ItemType::Array,
            "atomic" => ItemType::AnyAtomic,
            other => match AtomicKind::from_name(other) {
                Some(k) => ItemType::Atomic(k),
                None => return self.fail("a type name"),
            },
        };
        self.advance();
        if self.at(&Tok::LParen) && *self.peek_at(1) == Tok::RParen {
            self.advance();
            self.advance();
        }
        Ok(t)
    }

    fn expr(&mut self) -> Result<Expr> {
        let first = self.expr_single()?;
        if !self.at(&Tok::Comma) {
            return Ok(first);
        }
        let pos = first.pos;
        let mut items = vec![first];
        while self.eat(&Tok::Comma) {
            items.push(self.expr_single()?);
        }
        Ok(Expr::new(ExprKind::Sequence(items), pos))
    }

    fn expr_single(&mut self) -> Result<Expr> {
        match self.peek() {
            Tok::Keyword(Keyword::For | Keyword::Let) if matches!(self.peek_at(1), Tok::Var(_)) => self.flwor(),
            Tok::Keyword(Keyword::If) => self.if_expr(),
            _ => self.or_expr(),
        }
    }

    fn flwor(&mut self) -> Result<Expr> {
        let pos = self.pos();
        let mut clauses = Vec::new();
        loop {
            if self.at_kw(Keyword::For) {
                self.advance();
                loop {
                    let cpos = self.pos();
                    let var = self.var_name()?;
                    let at = if self.eat_kw(Keyword::At) {
                        Some(self.var_name()?)
                    } else {
                        None
                    };
                    self.expect(Tok::Keyword(Keyword::In), "one of {at, in}")?;
                    let expr = self.expr_single()?;
                    clauses.push(Clause::For { var, at, expr, pos: cpos });
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            } else if self.at_kw(Keyword::Let) {
                self.advance();
                loop {
                    let cpos = self.pos();
                    let var = self.var_name()?;
                    self.expect(Tok::Assign, ":=")?;
                    let expr = self.expr_single()?;
                    clauses.push(Clause::Let { var, expr, pos: cpos });
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
            } else {
                break;
            }
        }
        if self.eat_kw(Keyword::Where) {
            clauses.push(Clause::Where(self.expr_single()?));
        }
        if self.eat_kw(Keyword::Order) {
            self.expect_kw(Keyword::By)?;
            let key = self.expr_single()?;
            let descending = if self.eat_kw(Keyword::Descending) {
                true
            } else {
                self.eat_kw(Keyword::Ascending);
                false
            };
            clauses.push(Clause::OrderBy { key, descending });
        }
        if !self.at_kw(Keyword::Return) {
            return self.fail("one of {for, let, where, order, return}");
        }
        self.advance();
        let ret = self.expr_single()?;
        Ok(Expr::new(
            ExprKind::Flwor {
                clauses,
                ret: Box::new(ret),
            },
            pos,
        ))
    }

    fn if_expr(&mut self) -> Result<Expr> {
        let pos = self.expect_kw(Keyword::If)?.pos;
        self.expect(Tok::LParen, "(")?;
        let cond = self.expr()?;
        self.expect(Tok::RParen, ")")?;
        self.expect_kw(Keyword::Then)?;
        let then = self.expr_single()?;
        self.expect_kw(Keyword::Else)?;
        let otherwise = self.expr_single()?;
        Ok(Expr::new(
            ExprKind::If {
                cond: Box::new(cond),
                then: Box::new(then),
                otherwise: Box::new(otherwise),
            },
            pos,
        ))
    }

    fn or_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.and_expr()?;
        while self.at_kw(Keyword::Or) {
            let pos = self.advance().pos;
            let rhs = self.and_expr()?;
            lhs = Expr::new(ExprKind::Or(Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.not_expr()?;
        while self.at_kw(Keyword::And) {
            let pos = self.advance().pos;
            let rhs = self.not_expr()?;
            lhs = Expr::new(ExprKind::And(Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr> {
        if self.at_kw(Keyword::Not) {
            let pos = self.advance().pos;
            let inner = self.not_expr()?;
            return Ok(Expr::new(ExprKind::Not(Box::new(inner)), pos));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr> {
        let lhs = self.range()?;
        let op = match self.peek() {
            Tok::Keyword(Keyword::Eq) => CmpOp::Eq,
            Tok::Keyword(Keyword::Ne) => CmpOp::Ne,
            Tok::Keyword(Keyword::Lt) => CmpOp::Lt,
            Tok::Keyword(Keyword::Le) => CmpOp::Le,
            Tok::Keyword(Keyword::Gt) => CmpOp::Gt,
            Tok::Keyword(Keyword::Ge) => CmpOp::Ge,
            _ => return Ok(lhs),
        };
        let pos = self.advance().pos;
        let rhs = self.range()?;
        Ok(Expr::new(
            ExprKind::Comparison {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            pos,
        ))
    }

    fn range(&mut self) -> Result<Expr> {
        let from = self.additive()?;
        if !self.at_kw(Keyword::To) {
            return Ok(from);
        }
        let pos = self.advance().pos;
        let to = self.additive()?;
        Ok(Expr::new(
            ExprKind::Range {
                from: Box::new(from),
                to: Box::new(to),
            },
            pos,
        ))
    }

    fn additive(&mut self) -> Result<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            let pos = self.advance().pos;
            let rhs = self.multiplicative()?;
            lhs = Expr::new(
                ExprKind::Arithmetic {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                pos,
            );
        }
    }

    fn multiplicative(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Keyword(Keyword::Div) => ArithOp::Div,
                Tok::Keyword(Keyword::IDiv) => ArithOp::IDiv,
                Tok::Keyword(Keyword::Mod) => ArithOp::Mod,
                _ => return Ok(lhs),
            };
            let pos = self.advance().pos;
            let rhs = self.unary()?;
            lhs = Expr::new(
                ExprKind::Arithmetic {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                pos,
            );
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Tok::Minus => {
                let pos = self.advance().pos;
                let literal_follows = matches!(self.peek(), Tok::Int(_) | Tok::Dec(_) | Tok::Dbl(_))
                    && !matches!(self.peek_at(1), Tok::LBracket | Tok::Dot | Tok::LParen);
                if literal_follows {
                    let lit = match self.advance().tok {
                        Tok::Int(v) => Literal::Integer(-v),
                        Tok::Dec(v) => Literal::Decimal(-v),
                        Tok::Dbl(v) => Literal::Double(-v),
                        _ => unreachable!("checked above"),
                    };
                    return Ok(Expr::new(ExprKind::Literal(lit), pos));
                }
                let inner = self.unary()?;
                Ok(Expr::new(ExprKind::Negate(Box::new(inner)), pos))
            }
            Tok::Plus => {
                self.advance();
                self.unary()
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Expr> {
        let mut base = self.primary()?;
        loop {
            match self.peek() {
                Tok::LBracket => {
                    let pos = self.advance().pos;
                    let cond = self.expr()?;
                    self.expect(Tok::RBracket, "]")?;
                    base = Expr::new(
                        ExprKind::Predicate {
                            base: Box::new(base),
                            cond: Box::new(cond),
                        },
                        pos,
                    );
                }
                Tok::Dot => {
                    let pos = self.advance().pos;
                    let key = self.lookup_key()?;
                    base = Expr::new(
                        ExprKind::Lookup {
                            base: Box::new(base),
                            key: Box::new(key),
                        },
                        pos,
                    );
                }
                Tok::LParen => {
                    let pos = self.pos();
                    let args = self.arguments()?;
                    base = Expr::new(
                        ExprKind::DynamicCall {
                            target: Box::new(base),
                            args,
                        },
                        pos,
                    );
                }
                _ => return Ok(base),
            }
        }
    }

    fn lookup_key(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Name(n) => {
                self.advance();
                Ok(Expr::new(ExprKind::Literal(Literal::String(n)), pos))
            }
            Tok::Keyword(k) => {
                self.advance();
                Ok(Expr::new(ExprKind::Literal(Literal::String(k.as_str().into())), pos))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::new(ExprKind::Literal(Literal::String(s)), pos))
            }
            Tok::Var(v) => {
                self.advance();
                Ok(Expr::new(ExprKind::Var(v), pos))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen, ")")?;
                Ok(e)
            }
            _ => self.fail("an object key after '.'"),
        }
    }

    fn arguments(&mut self) -> Result<Vec<Expr>> {
        self.expect(Tok::LParen, "(")?;
        let mut args = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                args.push(self.expr_single()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "one of {\",\", \")\"}")?;
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr> {
        let pos = self.pos();
        let lit = |l| Ok(Expr::new(ExprKind::Literal(l), pos));
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                lit(Literal::Integer(v))
            }
            Tok::Dec(v) => {
                self.advance();
                lit(Literal::Decimal(v))
            }
            Tok::Dbl(v) => {
                self.advance();
                lit(Literal::Double(v))
            }
            Tok::Str(s) => {
                self.advance();
                lit(Literal::String(s))
            }
            Tok::Var(v) => {
                self.advance();
                Ok(Expr::new(ExprKind::Var(v), pos))
            }
            Tok::ContextItem => {
                self.advance();
                Ok(Expr::new(ExprKind::ContextItem, pos))
            }
            Tok::LParen => {
                self.advance();
                if self.eat(&Tok::RParen) {
                    return Ok(Expr::new(ExprKind::Sequence(vec![]), pos));
                }
                let e = self.expr()?;
                self.expect(Tok::RParen, "one of {\",\", \")\"}")?;
                Ok(e)
            }
            Tok::LBrace => {
                self.advance();
                let mut pairs = Vec::new();
                if !self.at(&Tok::RBrace) {
                    loop {
                        let k = self.expr_single()?;
                        self.expect(Tok::Colon, ":")?;
                        let v = self.expr_single()?;
                        pairs.push((k, v));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBrace, "one of {\",\", \"}\"}")?;
                Ok(Expr::new(ExprKind::ObjectCtor(pairs), pos))
            }
            Tok::LMerge => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RMerge, "|}")?;
                Ok(Expr::new(ExprKind::MergedObjectCtor(Box::new(e)), pos))
            }
            Tok::LBracket => {
                self.advance();
                if self.eat(&Tok::RBracket) {
                    return Ok(Expr::new(ExprKind::ArrayCtor(None), pos));
                }
                let e = self.expr()?;
                self.expect(Tok::RBracket, "one of {\",\", \"]\"}")?;
                Ok(Expr::new(ExprKind::ArrayCtor(Some(Box::new(e))), pos))
            }
            Tok::Keyword(Keyword::If) => self.if_expr(),
            Tok::Keyword(Keyword::For | Keyword::Let) if matches!(self.peek_at(1), Tok::Var(_)) => self.flwor(),
            Tok::Name(name) => match self.peek_at(1) {
                Tok::LParen => {
                    self.advance();
                    let args = self.arguments()?;
                    Ok(Expr::new(ExprKind::StaticCall { name, args }, pos))
                }
                Tok::Hash => {
                    self.advance();
                    self.advance();
                    let arity = match self.peek().clone() {
                        Tok::Int(v) => usize::try_from(v).ok(),
                        _ => None,
                    };
                    let Some(arity) = arity else {
                        return self.fail("an arity after '#'");
                    };
                    self.advance();
                    Ok(Expr::new(ExprKind::NamedFunctionRef { name, arity }, pos))
                }
                _ => {
                    let l = match name.as_str() {
                        "true" => Literal::Boolean(true),
                        "false" => Literal::Boolean(false),
                        "null" => Literal::Null,
                        _ => return self.fail("an expression"),
                    };
                    self.advance();
                    lit(l)
                }
            },
            _ => self.fail("an expression"),
        }
    }
}
