//! Data-driven rational approximation of sampled complex functions.
//!
//! Four fitting methods share one set of sampling, linear algebra and
//! diagnostics routines:
//!
//! * [`loewner`]: the Loewner framework (pencil, SVD truncation, poles/zeros,
//!   projected interpolation points),
//! * [`greedy`]: recursive Loewner that grows the data greedily,
//! * [`aaa`]: the AAA barycentric algorithm,
//! * [`vectorfit`]: Vector Fitting in pole-residue form.
//!
//! The benchmark target is `H(s) = 1/J0(s)` on `[0, 10] x [-1, 1]`
//! ([`special_fn::h_of_s`]), but every fitter accepts arbitrary samples.

pub mod aaa;
pub mod analysis;
pub mod error;
pub mod greedy;
pub mod io;
pub mod linalg;
pub mod loewner;
pub mod model;
pub mod sampling;
pub mod special_fn;
pub mod vectorfit;

pub use error::{Error, Result};
pub use num_complex::Complex64;
