//! A JSONiq-subset query engine whose sequences of objects run either as
//! item streams or as columnar frames, with ML estimators and transformers
//! exposed as function items.

pub mod error;
pub mod frame;
pub mod item;
pub mod ml;
pub mod parser;
pub mod runtime;
pub mod schema;

pub use error::{Error, ErrorCategory, ErrorCode, Result};
pub use item::{CallContext, Item, Sequence, Value};
pub use runtime::{ExecutionMode, ModePolicy, Query, DEFAULT_CAP};
