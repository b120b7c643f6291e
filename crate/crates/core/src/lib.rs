//! Phase sensitivity of distributed optical-gyroscope networks probed by
//! bright two-mode squeezed light.

pub mod error;
pub mod gaussian;
pub mod mc;
pub mod optimizer;
pub mod pipeline;
pub mod qcrb;
pub mod scalar;
pub mod sensitivity;

pub use error::{Error, Result};
pub use gaussian::{GaussianState, SymplecticForm, WilliamsonResult};
pub use mc::{McEstimate, McRun};
pub use optimizer::{OptimumPoint, RatioPeak};
pub use qcrb::{ParamPoint, QfiResult};
pub use scalar::Real;
pub use sensitivity::{
    GyroGeometry, NetworkConfig, ProbeParams, Seeding, SensitivityReport, Topology,
};

pub type GaussianState64 = GaussianState<f64>;
pub type GaussianState32 = GaussianState<f32>;
pub type NetworkConfig64 = NetworkConfig<f64>;
pub type NetworkConfig32 = NetworkConfig<f32>;
pub type ProbeParams64 = ProbeParams<f64>;
pub type ProbeParams32 = ProbeParams<f32>;
pub type OptimumPoint64 = OptimumPoint<f64>;
pub type OptimumPoint32 = OptimumPoint<f32>;
pub type ParamPoint64 = ParamPoint<f64>;
pub type ParamPoint32 = ParamPoint<f32>;
