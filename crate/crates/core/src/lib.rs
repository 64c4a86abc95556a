//! Separation of vector fields sampled on a sphere into parts generated by
//! internal sources, external sources and currents crossing the sphere,
//! using regularized zonal kernels and a locally supported wavelet pyramid.

pub mod error;
pub mod geometry;
pub mod harmonics;
pub mod ingest;
pub mod io;
pub mod kernels;
pub mod multiscale;
pub mod quadrature;
pub mod scalar;
pub mod synthetic;

pub use error::{Error, Result};
pub use geometry::{Mat3, UnitVector, Vec3};
pub use scalar::Real;

pub use kernels::{KernelOrders, Part, RegularizationConfig, ScalingKernel, WaveletKernel, ZonalProfile};
pub use multiscale::{separate, SeparationConfig, SeparationResult, TransformOptions};
pub use quadrature::{build_grid, EquiangularGrid, GridField};
pub use synthetic::{make_field, spectral_oracle, SyntheticSpec, SyntheticTerm};

/// Double-precision aliases used by the file formats and the command line.
pub type Point = UnitVector<f64>;
pub type Vector = Vec3<f64>;
pub type Tensor = Mat3<f64>;
pub type Grid = EquiangularGrid<f64>;
pub type Field = GridField<f64>;
pub type Profile = ZonalProfile<f64>;
pub type Regularization = RegularizationConfig<f64>;
pub type Separation = SeparationResult<f64>;
