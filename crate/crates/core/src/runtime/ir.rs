//! Resolved program tree. Every variable reference is bound to a binding
//! site and every call to a declaration or catalog entry.

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, ErrorCode, Pos, Result};
use crate::item::{ArithOp, CmpOp, Item, SequenceType};
use crate::parser::{Clause, Expr, ExprKind, Literal, Module};

use super::builtins::{self, BuiltinId};

pub type NodeId = usize;
pub type VarId = usize;
pub type FuncId = usize;

/// Reserved slot for the context item `$$`.
pub const CONTEXT_VAR: VarId = 0;

#[derive(Debug)]
pub struct Node {
    pub id: NodeId,
    pub pos: Pos,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FnTarget {
    User(FuncId),
    Builtin(BuiltinId),
}

#[derive(Debug)]
pub enum IrClause {
    For {
        var: VarId,
        at: Option<VarId>,
        expr: Arc<Node>,
    },
    Let {
        var: VarId,
        expr: Arc<Node>,
    },
    Where(Arc<Node>),
    OrderBy {
        key: Arc<Node>,
        descending: bool,
    },
}

#[derive(Debug)]
pub enum NodeKind {
    Literal(Item),
    Var(VarId),
    ContextItem,
    Sequence(Vec<Arc<Node>>),
    Flwor {
        clauses: Vec<IrClause>,
        ret: Arc<Node>,
    },
    If {
        cond: Arc<Node>,
        then: Arc<Node>,
        otherwise: Arc<Node>,
    },
    Or(Arc<Node>, Arc<Node>),
    And(Arc<Node>, Arc<Node>),
    Not(Arc<Node>),
    Comparison {
        op: CmpOp,
        lhs: Arc<Node>,
        rhs: Arc<Node>,
    },
    Arithmetic {
        op: ArithOp,
        lhs: Arc<Node>,
        rhs: Arc<Node>,
    },
    Negate(Arc<Node>),
    Range {
        from: Arc<Node>,
        to: Arc<Node>,
    },
    ObjectCtor(Vec<(Arc<Node>, Arc<Node>)>),
    MergedObjectCtor(Arc<Node>),
    ArrayCtor(Option<Arc<Node>>),
    Predicate {
        base: Arc<Node>,
        cond: Arc<Node>,
    },
    Lookup {
        base: Arc<Node>,
        key: Arc<Node>,
    },
    BuiltinCall {
        builtin: BuiltinId,
        args: Vec<Arc<Node>>,
    },
    UserCall {
        func: FuncId,
        args: Vec<Arc<Node>>,
    },
    DynamicCall {
        target: Arc<Node>,
        args: Vec<Arc<Node>>,
    },
    FunctionRef(FnTarget),
}

impl Node {
    /// Short description used in mode reports.
    pub fn label(&self, program: &Program) -> String {
        match &self.kind {
            NodeKind::Literal(_) => "literal".into(),
            NodeKind::Var(v) => format!("${}", program.var_names[*v]),
            NodeKind::ContextItem => "$$".into(),
            NodeKind::Sequence(_) => "sequence".into(),
            NodeKind::Flwor { .. } => "flwor".into(),
            NodeKind::If { .. } => "if".into(),
            NodeKind::Or(..) => "or".into(),
            NodeKind::And(..) => "and".into(),
            NodeKind::Not(_) => "not".into(),
            NodeKind::Comparison { op, .. } => op.keyword().into(),
            NodeKind::Arithmetic { op, .. } => op.symbol().into(),
            NodeKind::Negate(_) => "negate".into(),
            NodeKind::Range { .. } => "to".into(),
            NodeKind::ObjectCtor(_) => "object".into(),
            NodeKind::MergedObjectCtor(_) => "merged-object".into(),
            NodeKind::ArrayCtor(_) => "array".into(),
            NodeKind::Predicate { .. } => "predicate".into(),
            NodeKind::Lookup { .. } => "lookup".into(),
            NodeKind::BuiltinCall { builtin, .. } => {
                let b = builtins::get(*builtin);
                format!("{}#{}", b.name, b.arity)
            }
            NodeKind::UserCall { func, .. } => {
                let f = &program.functions[*func];
                format!("{}#{}", f.name, f.params.len())
            }
            NodeKind::DynamicCall { .. } => "dynamic-call".into(),
            NodeKind::FunctionRef(FnTarget::User(f)) => {
                let f = &program.functions[*f];
                format!("{}#{} ref", f.name, f.params.len())
            }
            NodeKind::FunctionRef(FnTarget::Builtin(b)) => {
                let b = builtins::get(*b);
                format!("{}#{} ref", b.name, b.arity)
            }
        }
    }

    pub fn children(&self) -> Vec<&Arc<Node>> {
        use NodeKind::*;
        match &self.kind {
            Literal(_) | Var(_) | ContextItem | FunctionRef(_) => vec![],
            Sequence(items) => items.iter().collect(),
            Flwor { clauses, ret } => {
                let mut out: Vec<&Arc<Node>> = clauses
                    .iter()
                    .map(|c| match c {
                        IrClause::For { expr, .. } | IrClause::Let { expr, .. } => expr,
                        IrClause::Where(e) => e,
                        IrClause::OrderBy { key, .. } => key,
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
            ArrayCtor(e) => e.iter().collect(),
            Predicate { base, cond } => vec![base, cond],
            Lookup { base, key } => vec![base, key],
            BuiltinCall { args, .. } | UserCall { args, .. } => args.iter().collect(),
            DynamicCall { target, args } => std::iter::once(target).chain(args).collect(),
        }
    }

    pub fn walk<'a>(self: &'a Arc<Node>, f: &mut dyn FnMut(&'a Arc<Node>)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }
}

#[derive(Debug)]
pub struct UserFunction {
    pub name: String,
    pub params: Vec<(VarId, Option<SequenceType>)>,
    pub ret: Option<SequenceType>,
    pub body: Arc<Node>,
    pub pos: Pos,
}

#[derive(Debug)]
pub struct Program {
    pub functions: Vec<UserFunction>,
    pub body: Arc<Node>,
    /// Free variables, bound from outside before evaluation.
    pub externals: Vec<(String, VarId)>,
    pub var_names: Vec<String>,
    pub node_count: usize,
}

impl Program {
    /// Every variable reference and call with what it resolved to, in tree
    /// order. Resolution is deterministic, so this is stable across runs.
    pub fn binding_table(&self) -> Vec<(Pos, String)> {
        let mut out = Vec::new();
        let mut visit = |n: &Arc<Node>| {
            let target = match &n.kind {
                NodeKind::Var(v) => Some(format!("var {} #{v}", self.var_names[*v])),
                NodeKind::BuiltinCall { .. } | NodeKind::UserCall { .. } | NodeKind::FunctionRef(_) => {
                    Some(n.label(self))
                }
                _ => None,
            };
            if let Some(t) = target {
                out.push((n.pos, t));
            }
        };
        for f in &self.functions {
            f.body.walk(&mut visit);
        }
        self.body.walk(&mut visit);
        out
    }

    pub fn user_signature(&self, f: FuncId) -> crate::item::FunctionSignature {
        let func = &self.functions[f];
        crate::item::FunctionSignature {
            params: func
                .params
                .iter()
                .map(|(_, t)| t.clone().unwrap_or_else(SequenceType::any))
                .collect(),
            ret: func.ret.clone().unwrap_or_else(SequenceType::any),
        }
    }
}

struct Resolver<'a> {
    module: &'a Module,
    scopes: Vec<(String, VarId)>,
    /// Names bound by the clauses of FLWORs currently being resolved.
    pending: Vec<HashSet<String>>,
    externals: Vec<(String, VarId)>,
    var_names: Vec<String>,
    next_node: NodeId,
}

impl<'a> Resolver<'a> {
    fn new_var(&mut self, name: &str) -> VarId {
        self.var_names.push(name.to_string());
        self.var_names.len() - 1
    }

    fn node(&mut self, pos: Pos, kind: NodeKind) -> Arc<Node> {
        let id = self.next_node;
        self.next_node += 1;
        Arc::new(Node { id, pos, kind })
    }

    fn lookup_var(&mut self, name: &str, pos: Pos) -> Result<VarId> {
        if let Some((_, id)) = self.scopes.iter().rev().find(|(n, _)| n == name) {
            return Ok(*id);
        }
        if self.pending.iter().any(|names| names.contains(name)) {
            return Err(Error::at(
                ErrorCode::UndefinedVariable,
                pos,
                format!("${name} is used before it is bound"),
            ));
        }
        if let Some((_, id)) = self.externals.iter().find(|(n, _)| n == name) {
            return Ok(*id);
        }
        let id = self.new_var(name);
        self.externals.push((name.to_string(), id));
        Ok(id)
    }

    fn resolve_function(&self, name: &str, arity: usize, pos: Pos) -> Result<FnTarget> {
        if let Some(i) = self
            .module
            .functions
            .iter()
            .position(|f| f.name == name && f.arity() == arity)
        {
            return Ok(FnTarget::User(i));
        }
        if let Some(b) = builtins::lookup(name, arity) {
            return Ok(FnTarget::Builtin(b));
        }
        Err(Error::at(
            ErrorCode::UnknownFunction,
            pos,
            format!("unknown function {name}#{arity}"),
        ))
    }

    fn exprs(&mut self, es: &[Expr]) -> Result<Vec<Arc<Node>>> {
        es.iter().map(|e| self.expr(e)).collect()
    }

    fn expr(&mut self, e: &Expr) -> Result<Arc<Node>> {
        let kind = match &e.kind {
            ExprKind::Literal(l) => NodeKind::Literal(match l {
                Literal::String(s) => Item::string(s.as_str()),
                Literal::Integer(v) => Item::big_integer(v.clone()),
                Literal::Decimal(v) => Item::decimal(v.clone()),
                Literal::Double(v) => Item::double(*v),
                Literal::Boolean(b) => Item::boolean(*b),
                Literal::Null => Item::null(),
            }),
            ExprKind::Var(name) => NodeKind::Var(self.lookup_var(name, e.pos)?),
            ExprKind::ContextItem => NodeKind::ContextItem,
            ExprKind::Sequence(items) => NodeKind::Sequence(self.exprs(items)?),
            ExprKind::Flwor { clauses, ret } => return self.flwor(e.pos, clauses, ret),
            ExprKind::If { cond, then, otherwise } => NodeKind::If {
                cond: self.expr(cond)?,
                then: self.expr(then)?,
                otherwise: self.expr(otherwise)?,
            },
            ExprKind::Or(a, b) => NodeKind::Or(self.expr(a)?, self.expr(b)?),
            ExprKind::And(a, b) => NodeKind::And(self.expr(a)?, self.expr(b)?),
            ExprKind::Not(a) => NodeKind::Not(self.expr(a)?),
            ExprKind::Comparison { op, lhs, rhs } => NodeKind::Comparison {
                op: *op,
                lhs: self.expr(lhs)?,
                rhs: self.expr(rhs)?,
            },
            ExprKind::Arithmetic { op, lhs, rhs } => NodeKind::Arithmetic {
                op: *op,
                lhs: self.expr(lhs)?,
                rhs: self.expr(rhs)?,
            },
            ExprKind::Negate(a) => NodeKind::Negate(self.expr(a)?),
            ExprKind::Range { from, to } => NodeKind::Range {
                from: self.expr(from)?,
                to: self.expr(to)?,
            },
            ExprKind::ObjectCtor(pairs) => NodeKind::ObjectCtor(
                pairs
                    .iter()
                    .map(|(k, v)| Ok((self.expr(k)?, self.expr(v)?)))
                    .collect::<Result<_>>()?,
            ),
            ExprKind::MergedObjectCtor(inner) => NodeKind::MergedObjectCtor(self.expr(inner)?),
            ExprKind::ArrayCtor(inner) => NodeKind::ArrayCtor(match inner {
                Some(i) => Some(self.expr(i)?),
                None => None,
            }),
            ExprKind::Predicate { base, cond } => NodeKind::Predicate {
                base: self.expr(base)?,
                cond: self.expr(cond)?,
            },
            ExprKind::Lookup { base, key } => NodeKind::Lookup {
                base: self.expr(base)?,
                key: self.expr(key)?,
            },
            ExprKind::StaticCall { name, args } => {
                let args = self.exprs(args)?;
                match self.resolve_function(name, args.len(), e.pos)? {
                    FnTarget::User(func) => NodeKind::UserCall { func, args },
                    FnTarget::Builtin(builtin) => NodeKind::BuiltinCall { builtin, args },
                }
            }
            ExprKind::DynamicCall { target, args } => NodeKind::DynamicCall {
                target: self.expr(target)?,
                args: self.exprs(args)?,
            },
            ExprKind::NamedFunctionRef { name, arity } => {
                NodeKind::FunctionRef(self.resolve_function(name, *arity, e.pos)?)
            }
        };
        Ok(self.node(e.pos, kind))
    }

    fn flwor(&mut self, pos: Pos, clauses: &[Clause], ret: &Expr) -> Result<Arc<Node>> {
        let bound: HashSet<String> = clauses
            .iter()
            .flat_map(|c| match c {
                Clause::For { var, at, .. } => vec![var.clone()].into_iter().chain(at.clone()).collect(),
                Clause::Let { var, .. } => vec![var.clone()],
                _ => vec![],
            })
            .collect();
        self.pending.push(bound);
        let depth = self.scopes.len();
        let mut out = Vec::with_capacity(clauses.len());
        let result = (|| {
            for c in clauses {
                match c {
                    Clause::For { var, at, expr, .. } => {
                        let expr = self.expr(expr)?;
                        let v = self.new_var(var);
                        let a = at.as_ref().map(|a| self.new_var(a));
                        self.scopes.push((var.clone(), v));
                        self.pending.last_mut().expect("pushed").remove(var);
                        if let (Some(name), Some(id)) = (at, a) {
                            self.scopes.push((name.clone(), id));
                            self.pending.last_mut().expect("pushed").remove(name);
                        }
                        out.push(IrClause::For { var: v, at: a, expr });
                    }
                    Clause::Let { var, expr, .. } => {
                        let expr = self.expr(expr)?;
                        let v = self.new_var(var);
                        self.scopes.push((var.clone(), v));
                        self.pending.last_mut().expect("pushed").remove(var);
                        out.push(IrClause::Let { var: v, expr });
                    }
                    Clause::Where(cond) => out.push(IrClause::Where(self.expr(cond)?)),
                    Clause::OrderBy { key, descending } => out.push(IrClause::OrderBy {
                        key: self.expr(key)?,
                        descending: *descending,
                    }),
                }
            }
            self.expr(ret)
        })();
        self.scopes.truncate(depth);
        self.pending.pop();
        let ret = result?;
        Ok(self.node(pos, NodeKind::Flwor { clauses: out, ret }))
    }
}

/// Binds names in a parsed module.
pub fn resolve(module: &Module) -> Result<Program> {
    let mut r = Resolver {
        module,
        scopes: Vec::new(),
        pending: Vec::new(),
        externals: Vec::new(),
        var_names: vec!["$".to_string()],
        next_node: 0,
    };
    let mut functions = Vec::with_capacity(module.functions.len());
    for f in &module.functions {
        let params: Vec<(VarId, Option<SequenceType>)> = f
            .params
            .iter()
            .map(|p| (r.new_var(&p.name), p.ty.clone()))
            .collect();
        r.scopes = f
            .params
            .iter()
            .zip(&params)
            .map(|(p, (id, _))| (p.name.clone(), *id))
            .collect();
        let body = r.expr(&f.body)?;
        r.scopes.clear();
        functions.push(UserFunction {
            name: f.name.clone(),
            params,
            ret: f.ret.clone(),
            body,
            pos: f.pos,
        });
    }
    let body = r.expr(&module.body)?;
    Ok(Program {
        functions,
        body,
        externals: r.externals,
        var_names: r.var_names,
        node_count: r.next_node,
    })
}

