//! Call-by-value evaluation with exact finite distributions.

pub mod dist;
pub mod eval;
pub mod prims;
pub mod value;

pub use dist::{dist_bind, dist_return, FinDist};
pub use eval::{apply, eval, eval_def, eval_globals, run_program, Env, EvalError};
pub use value::{parse_value, Value};
