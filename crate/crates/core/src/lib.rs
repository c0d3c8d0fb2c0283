//! Scattered-data interpolation with radial basis functions blended through a
//! partition of unity.
//!
//! The domain is covered by overlapping hyperspherical patches; each patch
//! carries its own local RBF interpolant, and a Shepard blend of the local
//! fits gives the global interpolant. Two fitting modes are provided:
//!
//! * [`pu::fit_classic`] — every patch uses the minimal covering radius and
//!   one fixed shape parameter;
//! * [`bloocv::fit_bloocv`] — each patch selects its own radius and shape
//!   parameter by minimizing a leave-one-out cross-validation estimate over a
//!   per-patch candidate grid.
//!
//! Patch membership queries run on an integer-based block partition
//! ([`partition::BlockGrid`]) that assigns points to uniform blocks in one
//! rounding per point and answers variable-radius ball queries exactly.
//!
//! ```
//! use rbf_pu::bloocv::{fit_bloocv, BloocvConfig, SearchGrid};
//! use rbf_pu::data::{halton, TestFunction};
//! use rbf_pu::kernels::KernelFamily;
//!
//! let data = halton(289, 2)
//!     .unwrap()
//!     .with_sampled(|p| TestFunction::F1.eval(p));
//! let config = BloocvConfig::new(KernelFamily::Imq, SearchGrid::standard());
//! let (model, _records, _summary) = fit_bloocv(&data, &config, None).unwrap();
//! let at_node = model.evaluate(data.point(0)).unwrap()[0];
//! assert!((at_node - data.values.as_ref().unwrap()[0]).abs() < 1e-6);
//! ```

pub mod bloocv;
pub mod data;
mod error;
pub mod kernels;
mod linalg;
pub mod partition;
pub mod pu;
pub mod testing;

pub use error::{Error, Result};
