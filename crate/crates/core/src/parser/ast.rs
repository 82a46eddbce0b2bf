use bigdecimal::BigDecimal;
use num_bigint::BigInt;

use crate::error::Pos;
use crate::item::{ArithOp, CmpOp, SequenceType};

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub functions: Vec<FunctionDecl>,
    pub body: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Option<SequenceType>,
    pub body: Expr,
    pub pos: Pos,
}

impl FunctionDecl {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Option<SequenceType>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    String(String),
    Integer(BigInt),
    Decimal(BigDecimal),
    Double(f64),
    Boolean(bool),
    Null,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Clause {
    For {
        var: String,
        at: Option<String>,
        expr: Expr,
        pos: Pos,
    },
    Let {
        var: String,
        expr: Expr,
        pos: Pos,
    },
    Where(Expr),
    OrderBy {
        key: Expr,
        descending: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Literal(Literal),
    Var(String),
    ContextItem,
    /// Comma-separated sequence; `()` is the empty case.
    Sequence(Vec<Expr>),
    Flwor {
        clauses: Vec<Clause>,
        ret: Box<Expr>,
    },
    If {
        cond: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
    Or(Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Comparison {
        op: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Arithmetic {
        op: ArithOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Negate(Box<Expr>),
    Range {
        from: Box<Expr>,
        to: Box<Expr>,
    },
    ObjectCtor(Vec<(Expr, Expr)>),
    MergedObjectCtor(Box<Expr>),
    ArrayCtor(Option<Box<Expr>>),
    Predicate {
        base: Box<Expr>,
        cond: Box<Expr>,
    },
    Lookup {
        base: Box<Expr>,
        key: Box<Expr>,
    },
    StaticCall {
        name: String,
        args: Vec<Expr>,
    },
    DynamicCall {
        target: Box<Expr>,
        args: Vec<Expr>,
    },
    NamedFunctionRef {
        name: String,
        arity: usize,
    },
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Expr {
        Expr { kind, pos }
    }

    /// Direct subexpressions in source order.
    pub fn children(&self) -> Vec<&Expr> {
        use ExprKind::*;
        match &self.kind {
            Literal(_) | Var(_) | ContextItem | NamedFunctionRef { .. } => vec![],
            Sequence(items) => items.iter().collect(),
            Flwor { clauses, ret } => {
                let mut out: Vec<&Expr> = clauses
                    .iter()
                    .map(|c| match c {
                        Clause::For { expr, .. } | Clause::Let { expr, .. } => expr,
                        Clause::Where(e) => e,
                        Clause::OrderBy { key, .. } => key,
                    })
                    .collect();
                out.push(ret);
                out
            }
            If { cond, then, otherwise } => vec![cond, then, otherwise],
            Or(a, b) | And(a, b) => vec![a, b],
            Not(e) | Negate(e) | MergedObjectCtor(e) => vec![e],
            Comparison { lhs, rhs, .. } | Arithmetic { lhs, rhs, .. } => vec![lhs, rhs],
            Range { from, to } => vec![from, to],
            ObjectCtor(pairs) => pairs.iter().flat_map(|(k, v)| [k, v]).collect(),
            ArrayCtor(e) => e.iter().map(|b| &**b).collect(),
            Predicate { base, cond } => vec![base, cond],
            Lookup { base, key } => vec![base, key],
            StaticCall { args, .. } => args.iter().collect(),
            DynamicCall { target, args } => std::iter::once(&**target).chain(args).collect(),
        }
    }

    /// Calls `f` on this node and every descendant, parents first.
    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Copy with every position reset, for structural comparison.
    pub fn without_positions(&self) -> Expr {
        let mut e = self.clone();
        e.clear_positions();
        e
    }

    fn clear_positions(&mut self) {
        use ExprKind::*;
        self.pos = Pos::default();
        let clear = |e: &mut Expr| e.clear_positions();
        match &mut self.kind {
            Literal(_) | Var(_) | ContextItem | NamedFunctionRef { .. } => {}
            Sequence(items) | StaticCall { args: items, .. } => items.iter_mut().for_each(clear),
            Flwor { clauses, ret } => {
                for c in clauses {
                    match c {
                        Clause::For { expr, pos, .. } | Clause::Let { expr, pos, .. } => {
                            *pos = Pos::default();
                            expr.clear_positions();
                        }
                        Clause::Where(e) => e.clear_positions(),
                        Clause::OrderBy { key, .. } => key.clear_positions(),
                    }
                }
                ret.clear_positions();
            }
            If { cond, then, otherwise } => {
                cond.clear_positions();
                then.clear_positions();
                otherwise.clear_positions();
            }
            Or(a, b) | And(a, b) => {
                a.clear_positions();
                b.clear_positions();
            }
            Not(e) | Negate(e) | MergedObjectCtor(e) => e.clear_positions(),
            Comparison { lhs, rhs, .. } | Arithmetic { lhs, rhs, .. } => {
                lhs.clear_positions();
                rhs.clear_positions();
            }
            Range { from, to } => {
                from.clear_positions();
                to.clear_positions();
            }
            ObjectCtor(pairs) => {
                for (k, v) in pairs {
                    k.clear_positions();
                    v.clear_positions();
                }
            }
            ArrayCtor(e) => {
                if let Some(e) = e {
                    e.clear_positions();
                }
            }
            Predicate { base, cond: other } | Lookup { base, key: other } => {
                base.clear_positions();
                other.clear_positions();
            }
            DynamicCall { target, args } => {
                target.clear_positions();
                args.iter_mut().for_each(clear);
            }
        }
    }
}

impl Module {
    pub fn without_positions(&self) -> Module {
        Module {
            functions: self
                .functions
                .iter()
                .map(|f| FunctionDecl {
                    pos: Pos::default(),
                    body: f.body.without_positions(),
                    ..f.clone()
                })
                .collect(),
            body: self.body.without_positions(),
        }
    }
}
