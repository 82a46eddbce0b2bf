//! Pull-based evaluation of the resolved tree.

use std::cmp::Ordering;
use std::iter::once;
use std::sync::Arc;

use rayon::prelude::*;

use super::builtins::{self, BuiltinFunction};
use super::env::Env;
use super::ir::{FnTarget, FuncId, IrClause, Node, NodeKind, Program, VarId, CONTEXT_VAR};
use super::{ClosureBody, ExecutionMode, ModePolicy};
use crate::error::{bail, err, Error, Pos, Result};
use crate::frame::{Frame, BLOCK_ROWS};
use crate::item::{
    arithmetic, atomic_order, ebv_items, effective_boolean_value, value_compare, Atomic, CallContext,
    CmpOp, FunctionBody, FunctionItem, Item, ItemIter, Object, Sequence, Value,
};

/// Compiled query shared by every evaluation and closure.
pub(crate) struct Rt {
    pub program: Program,
    pub modes: Vec<ExecutionMode>,
    pub policy: ModePolicy,
}

type TupleIter = Box<dyn Iterator<Item = Result<Env>> + Send>;

#[derive(Clone)]
pub(crate) struct Ev {
    rt: Arc<Rt>,
    cx: Arc<CallContext>,
    globals: Env,
}

fn fail_iter<T: Send + 'static>(e: Error) -> Box<dyn Iterator<Item = Result<T>> + Send> {
    Box::new(once(Err(e)))
}

fn positioned(seq: Sequence, pos: Pos) -> Sequence {
    match seq {
        Sequence::Stream(it) => Sequence::Stream(Box::new(it.map(move |r| r.map_err(|e| e.with_pos(pos))))),
        other => other,
    }
}

impl Ev {
    pub(crate) fn new(rt: Arc<Rt>, cx: CallContext, globals: Env) -> Ev {
        Ev {
            rt,
            cx: Arc::new(cx),
            globals,
        }
    }

    fn mode(&self, node: &Node) -> ExecutionMode {
        self.rt.modes[node.id]
    }

    fn cap(&self) -> usize {
        self.cx.cap
    }

    pub(crate) fn eval(&self, node: &Arc<Node>, env: &Env) -> Result<Sequence> {
        match self.eval_inner(node, env) {
            Ok(seq) => Ok(positioned(seq, node.pos)),
            Err(e) => Err(e.with_pos(node.pos)),
        }
    }

    /// Binds a sequence to a variable or parameter. Frames stay columnar
    /// unless the policy forbids them.
    fn bind(&self, seq: Sequence) -> Result<Value> {
        match seq {
            Sequence::Frame(f) if self.rt.policy == ModePolicy::ForceLocal => {
                Ok(Value::from_items(Sequence::Frame(f).materialize(self.cap())?))
            }
            other => other.bind(self.cap()),
        }
    }

    fn ebv(&self, node: &Arc<Node>, env: &Env) -> Result<bool> {
        effective_boolean_value(self.eval(node, env)?).map_err(|e| e.with_pos(node.pos))
    }

    /// Predicate test: a single number selects by position, anything else
    /// by effective boolean value.
    fn test(&self, cond: &Arc<Node>, env: &Env, position: usize) -> Result<bool> {
        let items: Vec<Item> = self.eval(cond, env)?.into_iter().take(2).collect::<Result<_>>()?;
        if let [Item::Atomic(a)] = items.as_slice() {
            if a.is_numeric() {
                return Ok(a.to_f64() == Some(position as f64));
            }
        }
        ebv_items(&items).map_err(|e| e.with_pos(cond.pos))
    }

    fn atomic_operand(&self, node: &Arc<Node>, env: &Env, what: &str) -> Result<Option<Atomic>> {
        match self.eval(node, env)?.at_most_one(what)? {
            None => Ok(None),
            Some(Item::Atomic(a)) => Ok(Some(a)),
            Some(other) => bail!(TypeError, "{what} expects an atomic operand, got {}", other.type_name()),
        }
    }

    fn key_string(&self, node: &Arc<Node>, env: &Env, what: &str) -> Result<Arc<str>> {
        match self.eval(node, env)?.at_most_one(what)? {
            Some(Item::Atomic(Atomic::String(s))) => Ok(s),
            Some(Item::Atomic(a)) => Ok(Arc::from(a.lexical())),
            Some(other) => bail!(TypeError, "{what} must be atomic, got {}", other.type_name()),
            None => bail!(TypeError, "{what} must not be the empty sequence"),
        }
    }

    fn eval_inner(&self, node: &Arc<Node>, env: &Env) -> Result<Sequence> {
        match &node.kind {
            NodeKind::Literal(item) => Ok(Sequence::Single(item.clone())),
            NodeKind::Var(v) => match env.get(*v) {
                Some(value) => Ok(value.to_sequence()),
                None => bail!(UndefinedVariable, "${} has no value", self.rt.program.var_names[*v]),
            },
            NodeKind::ContextItem => match env.get(CONTEXT_VAR) {
                Some(value) => Ok(value.to_sequence()),
                None => bail!(UndefinedVariable, "$$ is not bound here"),
            },
            NodeKind::Sequence(items) => {
                if items.len() == 1 {
                    return self.eval(&items[0], env);
                }
                let ev = self.clone();
                let env = env.clone();
                let items = items.clone();
                Ok(Sequence::from_iter(items.into_iter().flat_map(move |n| match ev.eval(&n, &env) {
                    Ok(seq) => seq.into_iter(),
                    Err(e) => fail_iter(e),
                })))
            }
            NodeKind::Flwor { clauses, ret } => self.flwor(node, clauses, ret, env),
            NodeKind::If { cond, then, otherwise } => {
                if self.ebv(cond, env)? {
                    self.eval(then, env)
                } else {
                    self.eval(otherwise, env)
                }
            }
            NodeKind::Or(a, b) => Ok(Sequence::Single(Item::boolean(self.ebv(a, env)? || self.ebv(b, env)?))),
            NodeKind::And(a, b) => Ok(Sequence::Single(Item::boolean(self.ebv(a, env)? && self.ebv(b, env)?))),
            NodeKind::Not(a) => Ok(Sequence::Single(Item::boolean(!self.ebv(a, env)?))),
            NodeKind::Comparison { op, lhs, rhs } => {
                let a = self.atomic_operand(lhs, env, op.keyword())?;
                let b = self.atomic_operand(rhs, env, op.keyword())?;
                match (a, b) {
                    (Some(a), Some(b)) => Ok(Sequence::Single(Item::boolean(value_compare(*op, &a, &b)?))),
                    _ => Ok(Sequence::empty()),
                }
            }
            NodeKind::Arithmetic { op, lhs, rhs } => {
                let a = self.atomic_operand(lhs, env, op.symbol())?;
                let b = self.atomic_operand(rhs, env, op.symbol())?;
                match (a, b) {
                    (Some(a), Some(b)) => Ok(Sequence::Single(Item::Atomic(arithmetic(*op, &a, &b)?))),
                    _ => Ok(Sequence::empty()),
                }
            }
            NodeKind::Negate(a) => match self.atomic_operand(a, env, "unary minus")? {
                Some(a) => Ok(Sequence::Single(Item::Atomic(crate::item::negate(&a)?))),
                None => Ok(Sequence::empty()),
            },
            NodeKind::Range { from, to } => self.range(from, to, env),
            NodeKind::ObjectCtor(pairs) => {
                let mut obj = Object::with_capacity(pairs.len());
                for (k, v) in pairs {
                    let key = self.key_string(k, env, "object key")?;
                    let mut items = self.eval(v, env)?.materialize(self.cap())?;
                    let value = match items.len() {
                        0 => Item::null(),
                        1 => items.pop().expect("one item"),
                        _ => Item::array(items),
                    };
                    obj.insert(key, value).map_err(|e| e.with_pos(k.pos))?;
                }
                Ok(Sequence::Single(Item::object(obj)))
            }
            NodeKind::MergedObjectCtor(inner) => {
                let mut obj = Object::new();
                for item in self.eval(inner, env)?.into_iter() {
                    let item = item?;
                    let Item::Object(part) = item else {
                        bail!(TypeError, "merged object constructor expects objects, got {}", item.type_name());
                    };
                    for (k, v) in part.iter() {
                        if obj.get(k).is_some() {
                            bail!(DuplicateKeyInMerge, "key {k:?} appears in more than one merged object");
                        }
                        obj.insert(k, v.clone())?;
                    }
                }
                Ok(Sequence::Single(Item::object(obj)))
            }
            NodeKind::ArrayCtor(inner) => {
                let members = match inner {
                    Some(i) => self.eval(i, env)?.materialize(self.cap())?,
                    None => Vec::new(),
                };
                Ok(Sequence::Single(Item::array(members)))
            }
            NodeKind::Predicate { base, cond } => self.predicate(node, base, cond, env),
            NodeKind::Lookup { base, key } => self.lookup(base, key, env),
            NodeKind::BuiltinCall { builtin, args } => {
                let args = args.iter().map(|a| self.eval(a, env)).collect::<Result<Vec<_>>>()?;
                builtins::call(*builtin, args, &self.cx)
            }
            NodeKind::UserCall { func, args } => {
                let args = args
                    .iter()
                    .map(|a| self.bind(self.eval(a, env)?))
                    .collect::<Result<Vec<_>>>()?;
                self.call_user(*func, args)
            }
            NodeKind::DynamicCall { target, args } => self.dynamic_call(node, target, args, env),
            NodeKind::FunctionRef(target) => Ok(Sequence::Single(Item::function(self.function_item(*target)))),
        }
    }

    fn function_item(&self, target: FnTarget) -> FunctionItem {
        match target {
            FnTarget::User(f) => FunctionItem {
                name: Some(self.rt.program.functions[f].name.clone()),
                signature: self.rt.program.user_signature(f),
                body: FunctionBody::Closure(ClosureBody {
                    rt: self.rt.clone(),
                    globals: self.globals.clone(),
                    func: f,
                }),
            },
            FnTarget::Builtin(b) => FunctionItem::native(
                builtins::get(b).name,
                builtins::signature(b),
                Arc::new(BuiltinFunction(b)),
            ),
        }
    }

    pub(crate) fn call_user(&self, func: FuncId, args: Vec<Value>) -> Result<Sequence> {
        let f = &self.rt.program.functions[func];
        let mut env = self.globals.clone();
        for ((var, ty), value) in f.params.iter().zip(args) {
            if let Some(ty) = ty {
                if !ty.matches_value(&value) {
                    bail!(
                        TypeError,
                        "argument ${} of {}#{} does not match {ty}",
                        self.rt.program.var_names[*var],
                        f.name,
                        f.params.len()
                    );
                }
            }
            env = env.bind(*var, value);
        }
        self.eval(&f.body, &env)
    }

    fn dynamic_call(&self, node: &Arc<Node>, target: &Arc<Node>, args: &[Arc<Node>], env: &Env) -> Result<Sequence> {
        let f = match self.eval(target, env)?.at_most_one("dynamic call") {
            Ok(Some(Item::Function(f))) => f,
            Ok(Some(other)) => bail!(NotAFunction, "cannot call a {}", other.type_name()),
            Ok(None) => bail!(NotAFunction, "cannot call the empty sequence"),
            Err(_) => bail!(NotAFunction, "cannot call a sequence of several items"),
        };
        let args = args
            .iter()
            .map(|a| self.bind(self.eval(a, env)?))
            .collect::<Result<Vec<_>>>()?;
        let out = f.call(args, &self.cx)?;
        match self.mode(node) {
            ExecutionMode::LocalOne => {
                let items: Vec<Item> = out.into_iter().take(2).collect::<Result<_>>()?;
                if items.len() > 1 {
                    bail!(
                        ModeAssumptionViolated,
                        "{} was expected to return a single item but returned more",
                        f.display_name()
                    );
                }
                Ok(Sequence::from_items(items))
            }
            ExecutionMode::Frame if !out.is_frame() => bail!(
                ModeAssumptionViolated,
                "{} was expected to return a frame but returned a {} sequence",
                f.display_name(),
                out.representation()
            ),
            _ => Ok(out),
        }
    }

    fn range(&self, from: &Arc<Node>, to: &Arc<Node>, env: &Env) -> Result<Sequence> {
        let bound = |n: &Arc<Node>| -> Result<Option<i64>> {
            match self.atomic_operand(n, env, "to")? {
                None => Ok(None),
                Some(a) if a.kind().is_integer_family() => match a.to_i64() {
                    Some(v) => Ok(Some(v)),
                    None => bail!(RangeError, "range bound {} is out of range", a.lexical()),
                },
                Some(a) => bail!(TypeError, "range bounds must be integers, got {}", a.kind()),
            }
        };
        let (Some(a), Some(b)) = (bound(from)?, bound(to)?) else {
            return Ok(Sequence::empty());
        };
        Ok(Sequence::from_iter((a..=b).map(|i| Ok(Item::integer(i)))))
    }

    fn lookup(&self, base: &Arc<Node>, key: &Arc<Node>, env: &Env) -> Result<Sequence> {
        let key = self.key_string(key, env, "lookup key")?;
        let field = |item: &Item, key: &str| item.as_object().and_then(|o| o.get(key)).cloned();
        match self.eval(base, env)? {
            Sequence::Frame(f) => match f.position(&key) {
                Some(i) => {
                    let col = f.columns()[i].clone();
                    Ok(Sequence::from_iter((0..f.len()).map(move |r| Ok(col.item_at(r)))))
                }
                None => Ok(Sequence::empty()),
            },
            Sequence::Single(item) => Ok(Sequence::optional(field(&item, &key))),
            other => Ok(Sequence::from_iter(other.into_iter().filter_map(move |r| match r {
                Ok(item) => field(&item, &key).map(Ok),
                Err(e) => Some(Err(e)),
            }))),
        }
    }

    fn predicate(&self, node: &Arc<Node>, base: &Arc<Node>, cond: &Arc<Node>, env: &Env) -> Result<Sequence> {
        let base = self.eval(base, env)?;
        if let Sequence::Frame(f) = &base {
            if self.mode(node) == ExecutionMode::Frame {
                return Ok(Sequence::Frame(Arc::new(self.filter_frame(f, cond, env, None)?)));
            }
        }
        let ev = self.clone();
        let env = env.clone();
        let cond = cond.clone();
        let mut position = 0;
        Ok(Sequence::from_iter(base.into_iter().filter_map(move |r| {
            position += 1;
            let item = match r {
                Ok(item) => item,
                Err(e) => return Some(Err(e)),
            };
            match ev.test(&cond, &env.bind_item(CONTEXT_VAR, item.clone()), position) {
                Ok(true) => Some(Ok(item)),
                Ok(false) => None,
                Err(e) => Some(Err(e)),
            }
        })))
    }

    /// Row-parallel filter. The row is bound to `row_var`, or to the context
    /// item (with positional semantics) when `row_var` is `None`.
    fn filter_frame(&self, frame: &Frame, cond: &Arc<Node>, env: &Env, row_var: Option<VarId>) -> Result<Frame> {
        if let Some(out) = self.kernel(frame, cond, row_var)? {
            return Ok(out);
        }
        let results: Vec<Result<bool>> = (0..frame.len())
            .into_par_iter()
            .with_min_len(BLOCK_ROWS)
            .map(|i| {
                let row = frame.row(i);
                match row_var {
                    None => self.test(cond, &env.bind_item(CONTEXT_VAR, row), i + 1),
                    Some(v) => self.ebv(cond, &env.bind_item(v, row)),
                }
            })
            .collect();
        let mask = results.into_iter().collect::<Result<Vec<bool>>>()?;
        Ok(frame.filter_mask(&mask))
    }

    /// Column kernels for `row.a op row.b` and `row.a op literal`.
    fn kernel(&self, frame: &Frame, cond: &Arc<Node>, row_var: Option<VarId>) -> Result<Option<Frame>> {
        let NodeKind::Comparison { op, lhs, rhs } = &cond.kind else {
            return Ok(None);
        };
        let column = |n: &Arc<Node>| -> Option<Arc<str>> {
            let NodeKind::Lookup { base, key } = &n.kind else {
                return None;
            };
            let on_row = match (&base.kind, row_var) {
                (NodeKind::ContextItem, None) => true,
                (NodeKind::Var(v), Some(r)) => *v == r,
                _ => false,
            };
            let NodeKind::Literal(Item::Atomic(Atomic::String(name))) = &key.kind else {
                return None;
            };
            let i = frame.position(name)?;
            (on_row && frame.schema()[i].1.is_scalar()).then(|| name.clone())
        };
        let literal = |n: &Arc<Node>| match &n.kind {
            NodeKind::Literal(Item::Atomic(a)) => Some(a.clone()),
            _ => None,
        };
        let flipped = match op {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            other => *other,
        };
        let out = if let (Some(a), Some(b)) = (column(lhs), column(rhs)) {
            frame.compare_columns(&a, *op, &b)?
        } else if let (Some(a), Some(v)) = (column(lhs), literal(rhs)) {
            frame.compare_scalar(&a, *op, &v)?
        } else if let (Some(v), Some(b)) = (literal(lhs), column(rhs)) {
            frame.compare_scalar(&b, flipped, &v)?
        } else {
            return Ok(None);
        };
        Ok(Some(out))
    }

    fn flwor(&self, node: &Arc<Node>, clauses: &[IrClause], ret: &Arc<Node>, env: &Env) -> Result<Sequence> {
        if self.mode(node) == ExecutionMode::Frame {
            if let Some(IrClause::For { var, expr, .. }) = clauses.first() {
                let cond = match clauses.get(1) {
                    Some(IrClause::Where(c)) => Some(c.clone()),
                    _ => None,
                };
                return self.lowered_flwor(*var, expr, cond, env);
            }
        }
        if !clauses.iter().any(|c| matches!(c, IrClause::For { .. })) {
            // a single tuple keeps the return expression's representation
            let mut env = env.clone();
            for c in clauses {
                match c {
                    IrClause::Let { var, expr } => {
                        let value = self.bind(self.eval(expr, &env)?)?;
                        env = env.bind(*var, value);
                    }
                    IrClause::Where(cond) => {
                        if !self.ebv(cond, &env)? {
                            return Ok(Sequence::empty());
                        }
                    }
                    IrClause::OrderBy { key, .. } => {
                        self.sort_key(key, &env)?;
                    }
                    IrClause::For { .. } => unreachable!("checked above"),
                }
            }
            return self.eval(ret, &env);
        }
        let mut tuples: TupleIter = Box::new(once(Ok(env.clone())));
        for c in clauses {
            let ev = self.clone();
            tuples = match c {
                IrClause::For { var, at, expr } => {
                    let (var, at, expr) = (*var, *at, expr.clone());
                    Box::new(tuples.flat_map(move |t| -> TupleIter {
                        let env = match t {
                            Ok(env) => env,
                            Err(e) => return fail_iter(e),
                        };
                        match ev.eval(&expr, &env) {
                            Err(e) => fail_iter(e),
                            Ok(seq) => Box::new(seq.into_iter().enumerate().map(move |(i, item)| {
                                let mut bound = env.bind_item(var, item?);
                                if let Some(a) = at {
                                    bound = bound.bind_item(a, Item::integer(i as i64 + 1));
                                }
                                Ok(bound)
                            })),
                        }
                    }))
                }
                IrClause::Let { var, expr } => {
                    let (var, expr) = (*var, expr.clone());
                    Box::new(tuples.map(move |t| {
                        let env = t?;
                        let value = ev.bind(ev.eval(&expr, &env)?)?;
                        Ok(env.bind(var, value))
                    }))
                }
                IrClause::Where(cond) => {
                    let cond = cond.clone();
                    Box::new(tuples.filter_map(move |t| match t {
                        Err(e) => Some(Err(e)),
                        Ok(env) => match ev.ebv(&cond, &env) {
                            Ok(true) => Some(Ok(env)),
                            Ok(false) => None,
                            Err(e) => Some(Err(e)),
                        },
                    }))
                }
                IrClause::OrderBy { key, descending } => Box::new(self.order_by(tuples, key, *descending)?.into_iter().map(Ok)),
            };
        }
        let ev = self.clone();
        let ret = ret.clone();
        Ok(Sequence::from_iter(tuples.flat_map(move |t| -> ItemIter {
            match t.and_then(|env| ev.eval(&ret, &env)) {
                Ok(seq) => seq.into_iter(),
                Err(e) => fail_iter(e),
            }
        })))
    }

    fn lowered_flwor(&self, var: VarId, expr: &Arc<Node>, cond: Option<Arc<Node>>, env: &Env) -> Result<Sequence> {
        let input = self.eval(expr, env)?;
        if let Sequence::Frame(f) = &input {
            return Ok(match &cond {
                Some(c) => Sequence::Frame(Arc::new(self.filter_frame(f, c, env, Some(var))?)),
                None => input,
            });
        }
        let ev = self.clone();
        let env = env.clone();
        Ok(Sequence::from_iter(input.into_iter().filter_map(move |r| {
            let item = match r {
                Ok(item) => item,
                Err(e) => return Some(Err(e)),
            };
            let Some(c) = &cond else {
                return Some(Ok(item));
            };
            match ev.ebv(c, &env.bind_item(var, item.clone())) {
                Ok(true) => Some(Ok(item)),
                Ok(false) => None,
                Err(e) => Some(Err(e)),
            }
        })))
    }

    fn sort_key(&self, key: &Arc<Node>, env: &Env) -> Result<Option<Atomic>> {
        match self.eval(key, env)?.at_most_one("order by key")? {
            None => Ok(None),
            Some(Item::Atomic(a)) => Ok(Some(a)),
            Some(other) => Err(err!(TypeError, "order by keys must be atomic, got {}", other.type_name()).with_pos(key.pos)),
        }
    }

    /// Stable sort of the whole tuple stream. Empty keys sort first.
    fn order_by(&self, tuples: TupleIter, key: &Arc<Node>, descending: bool) -> Result<Vec<Env>> {
        let mut keyed = Vec::new();
        for t in tuples {
            if keyed.len() == self.cap() {
                bail!(
                    MaterializationCapExceeded,
                    "order by exceeds the materialization cap of {} tuples",
                    self.cap()
                );
            }
            let env = t?;
            let k = self.sort_key(key, &env)?;
            keyed.push((k, env));
        }
        if let Some(first) = keyed.iter().find_map(|(k, _)| k.as_ref()) {
            for (k, _) in &keyed {
                if let Some(k) = k {
                    atomic_order(first, k).map_err(|e| e.with_pos(key.pos))?;
                }
            }
        }
        let cmp = |a: &Option<Atomic>, b: &Option<Atomic>| match (a, b) {
            (None, None) => Ordering::Equal,
            (None, _) => Ordering::Less,
            (_, None) => Ordering::Greater,
            (Some(x), Some(y)) => atomic_order(x, y).unwrap_or(Ordering::Equal),
        };
        keyed.sort_by(|(a, _), (b, _)| {
            let o = cmp(a, b);
            if descending {
                o.reverse()
            } else {
                o
            }
        });
        Ok(keyed.into_iter().map(|(_, env)| env).collect())
    }
}

impl ClosureBody {
    pub(crate) fn invoke(&self, args: Vec<Value>, cx: &CallContext) -> Result<Sequence> {
        let mut cx = cx.clone();
        cx.policy = self.rt.policy;
        Ev::new(self.rt.clone(), cx, self.globals.clone()).call_user(self.func, args)
    }
}
