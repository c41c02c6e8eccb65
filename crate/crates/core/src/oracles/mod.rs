//! Independent reference implementations and generators used to test the
//! checker.

pub mod generate;
pub mod infer;
pub mod top;

pub use infer::{hm_infer, mlrec_check, FixAnnotation, InferenceError};
pub use top::top_check;
