//! Squeezing analysis: θ scans, the Wineland parameter, subsystem variances,
//! phase-noise injection, shot-noise subtraction and jackknife errors.

mod jackknife;
mod shots;
mod squeezing;

pub use jackknife::{jackknife, jackknife_sums, variance_from_sums, Jackknife};
pub use shots::{
    add_detection_noise, inject_phase_noise, project, shot_noise_subtract, subsystem_variance,
    NoiseMode, NormalizedVariance, ShotRecord, SpinShot,
};
pub use squeezing::{
    curve_from_moments, grid_scan, squeezing_parameter, theta_grid, variance_scan, xi_to_db,
    CurveOptions, MeasurementFrame, Squeezing, SqueezingCurve, SqueezingPoint, ThetaMode, VarianceScan,
    VarianceSource, YzCovariance,
};
