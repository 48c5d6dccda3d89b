//! Finite-mode laboratory for the quantization of a free scalar field on a circle.
//!
//! The crate is layered bottom-up: [`modespace`] discretizes the circle, [`kahler`]
//! builds the classical complex structures, [`gaussmeasure`] and [`poly`] provide the
//! exact Gaussian calculus, [`fock`] the truncated Fock space, [`staralgebra`] the
//! symbol products and kernel calculus, [`transforms`] the maps between pictures and
//! [`evolution`] the time-dependent dynamics.

pub mod evolution;
pub mod fock;
pub mod gaussmeasure;
pub mod kahler;
pub mod linalg;
pub mod modespace;
pub mod poly;
pub mod staralgebra;
pub mod transforms;

pub use num_complex::Complex64 as C64;

/// Real dense matrix.
pub type RMat = nalgebra::DMatrix<f64>;
/// Complex dense matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Complex dense vector.
pub type CVec = nalgebra::DVector<C64>;
