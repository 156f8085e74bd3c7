//! Minimal dense neural toolkit: two-layer MLP blocks with exact analytic
//! gradients, a rectified-Adam optimizer, a finite-difference gradient
//! checker, and a named-tensor checkpoint container.
//!
//! Everything is f64, single-threaded, and deterministic given a seed.

pub mod checkpoint;
pub mod gradcheck;
pub mod mlp;
pub mod radam;

pub use checkpoint::{Checkpoint, NamedTensor};
pub use gradcheck::{check_tensors, GradCheckReport, TensorCheck};
pub use mlp::{MlpBlock, MlpCache, MlpGrads};
pub use radam::RAdam;
