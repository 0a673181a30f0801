//! Fine-grained power models for ultra-low-power multicore platforms.
//!
//! Power of a workload is predicted from platform constants (static, active
//! and per-operation dynamic power), the application's operational intensity
//! and the number of cores in use. The models are fitted from measurements,
//! blended across intensities, and used to decide whether racing to halt on
//! all cores saves energy compared with running on a single core.

// NaN must fail the range checks, hence `!(x > 0.0)` style comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fitting;
pub mod interpolation;
pub mod io;
pub mod power;
pub mod rth;

pub use error::{Error, Result};
pub use fitting::{
    calibrate_beta, compute_beta, fit_intensity_params, fit_static_active, improved_power,
    BetaFactor, FitBounds, FitOptions, FitResult, MeasurementRecord, StaticActiveFit,
};
pub use interpolation::{tsk_power, IntensityGrid};
pub use power::{
    app_power, comp_data_power, comp_power, data_power, operational_intensity, percentage_error,
    units_power, IntensityParams, OpMix, OperationKind, PlatformProfile, WorkloadCounts,
};
pub use rth::{
    amdahl_speedup, decide_from_energies, energy, energy_saving, power_up, predict_energy_curve,
    rth_decide, ApplicationMeta, IntensitySpec, RthDecision, Timing,
};
