//! Static execution-mode inference.
//!
//! Modes live on a small lattice: `Unknown` below `One` and `Frame`, both
//! below `Seq`. Conflicting evidence joins toward `Seq`. User functions are
//! analyzed at their call sites with the joined modes of their actual
//! parameters; whole passes repeat until no function state changes.

use std::collections::HashMap;
use std::sync::Arc;

use super::builtins::{self, BuiltinMode};
use super::ir::{FnTarget, FuncId, IrClause, Node, NodeId, NodeKind, Program, VarId, CONTEXT_VAR};
use super::{ExecutionMode, ModePolicy};
use crate::item::{FunctionSignature, Occurrence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum M {
    Unknown,
    One,
    Frame,
    Seq,
}

impl M {
    fn join(self, other: M) -> M {
        match (self, other) {
            (M::Unknown, x) | (x, M::Unknown) => x,
            (a, b) if a == b => a,
            _ => M::Seq,
        }
    }

    fn finish(self) -> ExecutionMode {
        match self {
            M::One => ExecutionMode::LocalOne,
            M::Frame => ExecutionMode::Frame,
            M::Unknown | M::Seq => ExecutionMode::LocalSeq,
        }
    }
}

pub(crate) struct Inference {
    pub modes: Vec<ExecutionMode>,
    pub passes: usize,
    pub sigs: HashMap<NodeId, FunctionSignature>,
}

struct State<'p> {
    program: &'p Program,
    policy: ModePolicy,
    sigs: HashMap<NodeId, FunctionSignature>,
    nodes: Vec<M>,
    vars: Vec<M>,
    ret: Vec<M>,
    analyzed: Vec<bool>,
    in_progress: Vec<bool>,
    changed: bool,
}

pub(crate) fn infer(program: &Program, policy: ModePolicy) -> Inference {
    let nf = program.functions.len();
    let mut st = State {
        program,
        policy,
        sigs: static_signatures(program),
        nodes: vec![M::Unknown; program.node_count],
        vars: vec![M::Unknown; program.var_names.len()],
        ret: vec![M::Unknown; nf],
        analyzed: vec![false; nf],
        in_progress: vec![false; nf],
        changed: false,
    };
    st.vars[CONTEXT_VAR] = M::One;
    for (_, v) in &program.externals {
        st.vars[*v] = M::One;
    }
    let mut passes = 0;
    loop {
        passes += 1;
        st.changed = false;
        st.analyzed.iter_mut().for_each(|a| *a = false);
        st.visit(&program.body);
        for f in 0..nf {
            if !st.analyzed[f] {
                st.analyze(f);
            }
        }
        if !st.changed {
            break;
        }
    }
    Inference {
        modes: st.nodes.iter().map(|m| m.finish()).collect(),
        passes,
        sigs: st.sigs,
    }
}

impl State<'_> {
    fn analyze(&mut self, f: FuncId) {
        self.in_progress[f] = true;
        let body = self.program.functions[f].body.clone();
        let m = self.visit(&body);
        self.in_progress[f] = false;
        self.analyzed[f] = true;
        let joined = self.ret[f].join(m);
        if joined != self.ret[f] {
            self.ret[f] = joined;
            self.changed = true;
        }
    }

    fn join_param(&mut self, f: FuncId, i: usize, m: M) {
        let var = self.program.functions[f].params[i].0;
        let joined = self.vars[var].join(m);
        if joined != self.vars[var] {
            self.vars[var] = joined;
            self.changed = true;
            self.analyzed[f] = false;
        }
    }

    fn visit(&mut self, node: &Arc<Node>) -> M {
        let m = self.mode_of(node);
        self.nodes[node.id] = m;
        m
    }

    fn mode_of(&mut self, node: &Arc<Node>) -> M {
        match &node.kind {
            NodeKind::Literal(_) | NodeKind::ContextItem => M::One,
            NodeKind::Var(v) => self.vars[*v],
            NodeKind::FunctionRef(target) => {
                if let FnTarget::User(f) = target {
                    for i in 0..self.program.functions[*f].params.len() {
                        self.join_param(*f, i, M::Seq);
                    }
                }
                M::One
            }
            NodeKind::Sequence(items) => {
                let modes: Vec<M> = items.iter().map(|i| self.visit(i)).collect();
                match modes.as_slice() {
                    [] => M::One,
                    [m] => *m,
                    _ => M::Seq,
                }
            }
            NodeKind::If { cond, then, otherwise } => {
                self.visit(cond);
                let a = self.visit(then);
                let b = self.visit(otherwise);
                a.join(b)
            }
            NodeKind::Or(a, b)
            | NodeKind::And(a, b)
            | NodeKind::Comparison { lhs: a, rhs: b, .. }
            | NodeKind::Arithmetic { lhs: a, rhs: b, .. } => {
                self.visit(a);
                self.visit(b);
                M::One
            }
            NodeKind::Not(a) | NodeKind::Negate(a) | NodeKind::MergedObjectCtor(a) => {
                self.visit(a);
                M::One
            }
            NodeKind::ObjectCtor(pairs) => {
                for (k, v) in pairs {
                    self.visit(k);
                    self.visit(v);
                }
                M::One
            }
            NodeKind::ArrayCtor(inner) => {
                if let Some(i) = inner {
                    self.visit(i);
                }
                M::One
            }
            NodeKind::Range { from, to } => {
                self.visit(from);
                self.visit(to);
                M::Seq
            }
            NodeKind::Lookup { base, key } => {
                let b = self.visit(base);
                self.visit(key);
                if b == M::One {
                    M::One
                } else {
                    M::Seq
                }
            }
            NodeKind::Predicate { base, cond } => {
                let b = self.visit(base);
                self.visit(cond);
                if self.policy == ModePolicy::Auto && b == M::Frame && row_local(cond, &mut Vec::new(), true) {
                    M::Frame
                } else {
                    M::Seq
                }
            }
            NodeKind::BuiltinCall { builtin, args } => {
                for a in args {
                    self.visit(a);
                }
                match builtins::get(*builtin).mode {
                    BuiltinMode::One => M::One,
                    BuiltinMode::Seq => M::Seq,
                    BuiltinMode::Frame if self.policy == ModePolicy::ForceLocal => M::Seq,
                    BuiltinMode::Frame => M::Frame,
                }
            }
            NodeKind::UserCall { func, args } => {
                for (i, a) in args.iter().enumerate() {
                    let m = self.visit(a);
                    self.join_param(*func, i, m);
                }
                if !self.in_progress[*func] && !self.analyzed[*func] {
                    self.analyze(*func);
                }
                self.ret[*func]
            }
            NodeKind::DynamicCall { target, args } => {
                self.visit(target);
                let first = args.iter().map(|a| self.visit(a)).next();
                let sig = self.sigs.get(&target.id);
                if let Some(sig) = sig {
                    if sig.ret.occurrence == Occurrence::One {
                        return M::One;
                    }
                }
                let transformer_like = sig.is_none_or(FunctionSignature::is_transformer_shaped);
                if self.policy != ModePolicy::ForceLocal && first == Some(M::Frame) && transformer_like {
                    M::Frame
                } else {
                    M::Seq
                }
            }
            NodeKind::Flwor { clauses, ret } => self.flwor(clauses, ret),
        }
    }

    fn flwor(&mut self, clauses: &[IrClause], ret: &Arc<Node>) -> M {
        let mut has_for = false;
        let mut filtered = false;
        for c in clauses {
            match c {
                IrClause::For { var, at, expr } => {
                    self.visit(expr);
                    self.vars[*var] = M::One;
                    if let Some(a) = at {
                        self.vars[*a] = M::One;
                    }
                    has_for = true;
                }
                IrClause::Let { var, expr } => {
                    let m = self.visit(expr);
                    self.vars[*var] = m;
                }
                IrClause::Where(cond) => {
                    self.visit(cond);
                    filtered = true;
                }
                IrClause::OrderBy { key, .. } => {
                    self.visit(key);
                }
            }
        }
        let r = self.visit(ret);
        if self.lowerable(clauses, ret) {
            return M::Frame;
        }
        match (has_for, filtered, r) {
            (false, false, r) => r,
            (false, true, M::One) => M::One,
            _ => M::Seq,
        }
    }

    /// `for $r in <frame> [where <row-local>] return $r`
    fn lowerable(&self, clauses: &[IrClause], ret: &Arc<Node>) -> bool {
        if self.policy != ModePolicy::Auto {
            return false;
        }
        let Some((IrClause::For { var, at: None, expr }, rest)) = clauses.split_first() else {
            return false;
        };
        if self.nodes[expr.id] != M::Frame || !matches!(ret.kind, NodeKind::Var(v) if v == *var) {
            return false;
        }
        match rest {
            [] => true,
            [IrClause::Where(cond)] => row_local(cond, &mut vec![*var], false),
            _ => false,
        }
    }
}

/// Whether `node` depends only on the current row (bound to `allowed[0]` or
/// to the context item when `context` is set) and pure built-ins.
pub(crate) fn row_local(node: &Arc<Node>, allowed: &mut Vec<VarId>, context: bool) -> bool {
    match &node.kind {
        NodeKind::Literal(_) => true,
        NodeKind::ContextItem => context,
        NodeKind::Var(v) => allowed.contains(v),
        NodeKind::UserCall { .. } | NodeKind::DynamicCall { .. } | NodeKind::FunctionRef(_) => false,
        NodeKind::BuiltinCall { builtin, args } => {
            let b = builtins::get(*builtin);
            b.pure && b.mode != BuiltinMode::Frame && args.iter().all(|a| row_local(a, allowed, context))
        }
        NodeKind::Predicate { base, cond } => {
            row_local(base, allowed, context) && row_local(cond, allowed, true)
        }
        NodeKind::Flwor { clauses, ret } => {
            let depth = allowed.len();
            let mut ok = true;
            for c in clauses {
                ok = ok
                    && match c {
                        IrClause::For { var, at, expr } => {
                            let r = row_local(expr, allowed, context);
                            allowed.push(*var);
                            allowed.extend(at);
                            r
                        }
                        IrClause::Let { var, expr } => {
                            let r = row_local(expr, allowed, context);
                            allowed.push(*var);
                            r
                        }
                        IrClause::Where(e) | IrClause::OrderBy { key: e, .. } => row_local(e, allowed, context),
                    };
            }
            ok = ok && row_local(ret, allowed, context);
            allowed.truncate(depth);
            ok
        }
        _ => node.children().into_iter().all(|c| row_local(c, allowed, context)),
    }
}

/// Signatures of expressions statically known to yield one function item.
fn static_signatures(program: &Program) -> HashMap<NodeId, FunctionSignature> {
    struct Walk<'p> {
        program: &'p Program,
        vars: HashMap<VarId, FunctionSignature>,
        out: HashMap<NodeId, FunctionSignature>,
    }

    impl Walk<'_> {
        fn visit(&mut self, node: &Arc<Node>) -> Option<FunctionSignature> {
            let sig = match &node.kind {
                NodeKind::Flwor { clauses, ret } => {
                    for c in clauses {
                        match c {
                            IrClause::Let { var, expr } => {
                                if let Some(s) = self.visit(expr) {
                                    self.vars.insert(*var, s);
                                }
                            }
                            IrClause::For { expr, .. } => {
                                self.visit(expr);
                            }
                            IrClause::Where(e) | IrClause::OrderBy { key: e, .. } => {
                                self.visit(e);
                            }
                        }
                    }
                    let has_for = clauses.iter().any(|c| matches!(c, IrClause::For { .. }));
                    let r = self.visit(ret);
                    if has_for {
                        None
                    } else {
                        r
                    }
                }
                _ => {
                    let child_sigs: Vec<Option<FunctionSignature>> =
                        node.children().into_iter().map(|c| self.visit(c)).collect();
                    match &node.kind {
                        NodeKind::Var(v) => self.vars.get(v).cloned(),
                        NodeKind::FunctionRef(FnTarget::User(f)) => Some(self.program.user_signature(*f)),
                        NodeKind::FunctionRef(FnTarget::Builtin(b)) => Some(builtins::signature(*b)),
                        NodeKind::BuiltinCall { builtin, .. } => builtins::returned_signature(*builtin),
                        NodeKind::UserCall { func, .. } => self.program.functions[*func]
                            .ret
                            .as_ref()
                            .and_then(|t| t.function_signature().cloned()),
                        NodeKind::DynamicCall { .. } => child_sigs[0]
                            .as_ref()
                            .and_then(|s| s.ret.function_signature().cloned()),
                        NodeKind::If { .. } => match (&child_sigs[1], &child_sigs[2]) {
                            (Some(a), Some(b)) if a == b => Some(a.clone()),
                            _ => None,
                        },
                        NodeKind::Sequence(items) if items.len() == 1 => child_sigs[0].clone(),
                        _ => None,
                    }
                }
            };
            if let Some(s) = &sig {
                self.out.insert(node.id, s.clone());
            }
            sig
        }
    }

    let mut w = Walk {
        program,
        vars: HashMap::new(),
        out: HashMap::new(),
    };
    for f in &program.functions {
        for (var, ty) in &f.params {
            if let Some(sig) = ty.as_ref().and_then(|t| t.function_signature()) {
                w.vars.insert(*var, sig.clone());
            }
        }
    }
    for f in &program.functions {
        w.visit(&f.body);
    }
    w.visit(&program.body);
    w.out
}
