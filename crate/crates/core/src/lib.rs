//! Structured Fourier sampling along Cartesian lines and anisotropic total
//! variation recovery of square complex images.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the experiment
//! harness and the command line live in the `tvls` companion crate.

#![no_std]

extern crate alloc;

pub mod certify;
pub mod error;
pub mod fft;
pub mod linalg;
pub mod ops;
pub mod phantom;
pub mod sampling;
pub mod solver;
pub mod structure;

pub use certify::{CertificateReport, CertifyConfig};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use ops::{ComplexImage, GradientPair, IndexSet2D};
pub use phantom::{make_phantom, Phantom, PhantomKind};
pub use sampling::SampleSet;
pub use structure::{StructureReport, Support2D};
