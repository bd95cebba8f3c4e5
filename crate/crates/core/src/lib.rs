//! Stochastic arithmetic over IEEE-754 binary32 and binary64.
//!
//! The crate provides probabilistic rounding modes (stochastic rounding,
//! Up-Down rounding, CESTAC and Monte Carlo Arithmetic random rounding) for
//! the operator set `{+, -, *, /, sqrt, fma}`, the error-free transformations
//! those modes are built on, a counter-based splittable random generator,
//! perturbable numerical kernels and the variability metrics used to study
//! their output.
//!
//! ```
//! use stochastic_arith::rng::RngStream;
//! use stochastic_arith::rounding::{OpContext, RoundingMode};
//!
//! let mut stream = RngStream::new(7, 0);
//! let mut ctx = OpContext::<f32>::new(RoundingMode::Stochastic, &mut stream).unwrap();
//! // Exact operations are preserved by stochastic rounding.
//! assert_eq!(ctx.add(0.25, 0.5), 0.75);
//! ```

pub mod cli;
pub mod eft;
pub mod error;
pub mod fpcore;
pub mod kernels;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod rounding;

pub use error::{Error, Result};
pub use fpcore::{FloatFormat, FormatName, IeeeFloat};
pub use rng::RngStream;
pub use rounding::{OpContext, RoundingMode};
