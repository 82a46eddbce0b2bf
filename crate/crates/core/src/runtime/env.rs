use std::sync::Arc;

use super::ir::VarId;
use crate::item::{Item, Value};

/// Persistent variable bindings. Extending an environment never affects
/// other holders of the parent, so tuples in a FLWOR stream share prefixes.
#[derive(Clone, Default)]
pub struct Env(Option<Arc<Binding>>);

struct Binding {
    var: VarId,
    value: Value,
    next: Env,
}

impl Env {
    pub fn new() -> Env {
        Env(None)
    }

    pub fn bind(&self, var: VarId, value: Value) -> Env {
        Env(Some(Arc::new(Binding {
            var,
            value,
            next: self.clone(),
        })))
    }

    pub fn bind_item(&self, var: VarId, item: Item) -> Env {
        self.bind(var, Value::single(item))
    }

    pub fn get(&self, var: VarId) -> Option<&Value> {
        let mut cur = &self.0;
        while let Some(b) = cur {
            if b.var == var {
                return Some(&b.value);
            }
            cur = &b.next.0;
        }
        None
    }
}

impl Drop for Binding {
    // Unlink iteratively so long chains do not overflow the stack.
    fn drop(&mut self) {
        let mut next = self.next.0.take();
        while let Some(b) = next {
            match Arc::try_unwrap(b) {
                Ok(mut binding) => next = binding.next.0.take(),
                Err(_) => break,
            }
        }
    }
}
