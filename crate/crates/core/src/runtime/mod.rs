//! Query compilation and execution: name resolution, execution-mode
//! inference, and evaluation.

mod builtins;
mod env;
mod eval;
mod infer;
mod ir;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use builtins::{Builtin, BuiltinMode};
pub use ir::{FnTarget, FuncId, IrClause, Node, NodeId, NodeKind, Program, UserFunction, VarId};

use crate::error::{bail, Pos, Result};
use crate::item::{CallContext, FunctionSignature, Item, Sequence, Value};
use env::Env;
use eval::{Ev, Rt};

pub const DEFAULT_CAP: usize = 1_000_000;

/// Which execution modes inference may assign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ModePolicy {
    /// Every optimization.
    #[default]
    Auto,
    /// No frames anywhere; everything runs as item streams.
    ForceLocal,
    /// Frames from `annotate` and transformer calls only; no lowering of
    /// predicates or FLWORs onto frames.
    Frame,
}

impl FromStr for ModePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(ModePolicy::Auto),
            "force-local" => Ok(ModePolicy::ForceLocal),
            "frame" => Ok(ModePolicy::Frame),
            other => Err(format!("unknown mode policy {other:?} (expected auto, force-local or frame)")),
        }
    }
}

impl fmt::Display for ModePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModePolicy::Auto => "auto",
            ModePolicy::ForceLocal => "force-local",
            ModePolicy::Frame => "frame",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecutionMode {
    LocalOne,
    LocalSeq,
    Frame,
}

impl fmt::Display for ExecutionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExecutionMode::LocalOne => "LOCAL_ONE",
            ExecutionMode::LocalSeq => "LOCAL_SEQ",
            ExecutionMode::Frame => "FRAME",
        })
    }
}

/// Body of a function item created from a named reference to a declared
/// function.
#[derive(Clone)]
pub struct ClosureBody {
    rt: Arc<Rt>,
    globals: Env,
    func: FuncId,
}

impl ClosureBody {
    pub fn call(&self, args: Vec<Value>, cx: &CallContext) -> Result<Sequence> {
        self.invoke(args, cx)
    }
}

/// One node of the annotated tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeInfo {
    pub id: NodeId,
    pub pos: Pos,
    pub label: String,
    pub mode: ExecutionMode,
    /// Declared function whose body holds the node; `None` for the main body.
    pub function: Option<String>,
}

/// A parsed, resolved and mode-annotated query.
pub struct Query {
    rt: Arc<Rt>,
    passes: usize,
    sigs: HashMap<NodeId, FunctionSignature>,
}

impl Query {
    pub fn compile(text: &str, policy: ModePolicy) -> Result<Query> {
        let module = crate::parser::parse(text)?;
        let program = ir::resolve(&module)?;
        let inf = infer::infer(&program, policy);
        Ok(Query {
            rt: Arc::new(Rt {
                program,
                modes: inf.modes,
                policy,
            }),
            passes: inf.passes,
            sigs: inf.sigs,
        })
    }

    pub fn program(&self) -> &Program {
        &self.rt.program
    }

    pub fn policy(&self) -> ModePolicy {
        self.rt.policy
    }

    /// Number of inference passes until no function state changed.
    pub fn inference_passes(&self) -> usize {
        self.passes
    }

    pub fn mode(&self, node: NodeId) -> ExecutionMode {
        self.rt.modes[node]
    }

    /// Statically known signature of the function item a node yields.
    pub fn static_signature(&self, node: NodeId) -> Option<&FunctionSignature> {
        self.sigs.get(&node)
    }

    /// Names of the free variables that must be bound before running.
    pub fn external_names(&self) -> Vec<&str> {
        self.rt.program.externals.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Every node with its assigned mode, declared functions first, each
    /// in pre-order.
    pub fn annotated(&self) -> Vec<NodeInfo> {
        let program = &self.rt.program;
        let mut out = Vec::with_capacity(program.node_count);
        let mut collect = |root: &Arc<Node>, function: Option<&str>| {
            root.walk(&mut |n| {
                out.push(NodeInfo {
                    id: n.id,
                    pos: n.pos,
                    label: n.label(program),
                    mode: self.rt.modes[n.id],
                    function: function.map(str::to_string),
                })
            });
        };
        for f in &program.functions {
            collect(&f.body, Some(&f.name));
        }
        collect(&program.body, None);
        out
    }

    /// Evaluates the query. Every external variable must be bound; the
    /// policy given at compile time overrides the one in `cx`.
    pub fn run(&self, externals: &[(String, Item)], cx: &CallContext) -> Result<Sequence> {
        let mut globals = Env::new();
        for (name, var) in &self.rt.program.externals {
            match externals.iter().rev().find(|(n, _)| n == name) {
                Some((_, item)) => globals = globals.bind_item(*var, item.clone()),
                None => bail!(UndefinedVariable, "external variable ${name} is not bound"),
            }
        }
        let mut cx = cx.clone();
        cx.policy = self.rt.policy;
        let ev = Ev::new(self.rt.clone(), cx, globals.clone());
        ev.eval(&self.rt.program.body, &globals)
    }
}

/// Names and arities of every built-in function.
pub fn builtin_catalog() -> Vec<(&'static str, usize, BuiltinMode)> {
    builtins::all().map(|b| (b.name, b.arity, b.mode)).collect()
}
