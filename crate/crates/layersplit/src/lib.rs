//! Decomposition of block-compressed images and videos into an intrinsic
//! layer (the content) and an artifact layer (the compression structure).
//!
//! The observation `C` is modeled as the sum of two layers whose gradients
//! behave differently: the intrinsic layer has sparse gradients, the
//! artifact layer carries the regular seam structure left by block
//! transforms, and the two avoid being active at the same locations. The
//! decomposition is found by an alternating-direction scheme whose layer
//! subproblems are circulant systems solved exactly with FFTs along the
//! gradient axes, so each iteration costs a few transforms of the input.
//!
//! ```
//! use layersplit::{blocking, pipeline, scenes};
//!
//! let clean = scenes::landscape(64, 64, 1);
//! let compressed = blocking::synthesize_blocking(&clean, 10).unwrap();
//! let spec = pipeline::PipelineSpec::new(pipeline::Variant::Dslp);
//! let out = pipeline::run(&compressed, &spec, Some(&clean)).unwrap();
//! let m = out.metrics.unwrap();
//! assert!(out.result.final_residual < 1e-6);
//! assert!(m.ssim > 0.0 && m.gc >= 0.0);
//! ```
//!
//! With the default `parallel` feature the elementwise and per-fiber work
//! runs on rayon; results are bit-identical at any thread count because
//! reductions are always summed sequentially.

pub mod blocking;
pub mod denoise;
pub mod error;
pub mod exec;
pub mod gradient;
pub mod metrics;
pub mod pipeline;
pub mod scenes;
pub mod shrinkage;
pub mod solver;
pub mod spectral;
pub mod tensor;

pub use error::{Error, Result};
pub use solver::{solve, SolveResult, SolverConfig};
pub use tensor::{DenseTensor, FlatVector};
