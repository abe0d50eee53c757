use std::f64::consts::PI;

use crate::dtwa::{EnsembleMoments, Group, MomentSummary};

/// Covariance of the collective `(Sy, Sz)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YzCovariance {
    pub yy: f64,
    pub zz: f64,
    pub yz: f64,
}

impl YzCovariance {
    pub fn from_summary(s: &MomentSummary, g: Group) -> Self {
        let (yy, zz, yz) = s.yz(g);
        YzCovariance { yy, zz, yz }
    }

    /// `Var[S^θ]` for `S^θ = cosθ Sz + sinθ Sy`.
    pub fn variance_at(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        c * c * self.zz + s * s * self.yy + 2.0 * s * c * self.yz
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.yy >= -tol && self.zz >= -tol && self.yy * self.zz - self.yz * self.yz >= -tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceScan {
    pub var_min: f64,
    pub var_max: f64,
    /// In `[0, π)`.
    pub theta_min: f64,
    pub theta_max: f64,
    /// Isotropic covariance; `theta_min` is then reported as 0.
    pub degenerate: bool,
}

fn wrap_pi(theta: f64) -> f64 {
    let w = theta.rem_euclid(PI);
    if w >= PI {
        0.0
    } else {
        w
    }
}

/// Closed-form extrema of `Var[S^θ]` over continuous θ.
///
/// `Var[S^θ] = m + d cos 2θ + c sin 2θ` with `m = (zz + yy)/2`,
/// `d = (zz - yy)/2`, `c = yz`.
pub fn variance_scan(cov: &YzCovariance) -> VarianceScan {
    let mid = 0.5 * (cov.zz + cov.yy);
    let d = 0.5 * (cov.zz - cov.yy);
    let c = cov.yz;
    let r = d.hypot(c);
    let scale = cov.zz.abs().max(cov.yy.abs()).max(f64::MIN_POSITIVE);
    if r <= 1e-12 * scale {
        return VarianceScan {
            var_min: mid,
            var_max: mid,
            theta_min: 0.0,
            theta_max: 0.0,
            degenerate: true,
        };
    }
    let theta_max = wrap_pi(0.5 * c.atan2(d));
    let theta_min = wrap_pi(theta_max + 0.5 * PI);
    VarianceScan {
        var_min: mid - r,
        var_max: mid + r,
        theta_min,
        theta_max,
        degenerate: false,
    }
}

/// Extrema over a supplied θ grid; ties resolve to the smaller angle.
pub fn grid_scan(cov: &YzCovariance, grid: &[f64]) -> VarianceScan {
    let mut best_min = (f64::INFINITY, 0.0);
    let mut best_max = (f64::NEG_INFINITY, 0.0);
    let mut sorted: Vec<f64> = grid.iter().map(|&t| wrap_pi(t)).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for th in sorted {
        let v = cov.variance_at(th);
        if v < best_min.0 {
            best_min = (v, th);
        }
        if v > best_max.0 {
            best_max = (v, th);
        }
    }
    VarianceScan {
        var_min: best_min.0,
        var_max: best_max.0,
        theta_min: best_min.1,
        theta_max: best_max.1,
        degenerate: (best_max.0 - best_min.0).abs() <= 1e-12 * best_max.0.abs().max(1e-300),
    }
}

/// Uniform grid of `n` angles over `[0, π)`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| PI * i as f64 / n as f64).collect()
}

/// Wineland squeezing parameter `ξ² = N Var_min / ⟨Sx⟩²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Squeezing {
    Finite { xi2: f64, db: f64 },
    /// `⟨Sx⟩ = 0`: ξ² is infinite and the dB value undefined.
    ZeroContrast,
}

impl Squeezing {
    pub fn xi2(&self) -> f64 {
        match *self {
            Squeezing::Finite { xi2, .. } => xi2,
            Squeezing::ZeroContrast => f64::INFINITY,
        }
    }

    pub fn db(&self) -> f64 {
        match *self {
            Squeezing::Finite { db, .. } => db,
            Squeezing::ZeroContrast => f64::NEG_INFINITY,
        }
    }
}

/// `var_min` is the raw (unnormalized) minimum variance.
pub fn squeezing_parameter(var_min: f64, mean_sx: f64, n: f64) -> Squeezing {
    if mean_sx == 0.0 || !mean_sx.is_finite() {
        return Squeezing::ZeroContrast;
    }
    let xi2 = n * var_min / (mean_sx * mean_sx);
    Squeezing::Finite {
        xi2,
        db: xi_to_db(xi2),
    }
}

pub fn xi_to_db(xi2: f64) -> f64 {
    -10.0 * xi2.log10()
}

/// One time point of a squeezing curve, normalized so a coherent state has
/// spin length and variance 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingPoint {
    pub t: f64,
    /// `2⟨Sx⟩/N`.
    pub spin_length: f64,
    pub spin_length_err: f64,
    /// `4 min_θ Var[S^θ] / N`.
    pub var_min: f64,
    pub var_min_err: f64,
    pub var_max: f64,
    pub theta_min: f64,
    pub xi2: f64,
    pub xi2_err: f64,
}

impl SqueezingPoint {
    pub fn db(&self) -> f64 {
        xi_to_db(self.xi2)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SqueezingCurve {
    pub points: Vec<SqueezingPoint>,
}

impl SqueezingCurve {
    pub fn at(&self, t: f64) -> &SqueezingPoint {
        self.points
            .iter()
            .min_by(|a, b| (a.t - t).abs().partial_cmp(&(b.t - t).abs()).unwrap())
            .expect("empty curve")
    }

    /// Point of maximal squeezing (minimal finite ξ²) within `[t0, t1]`.
    pub fn best_in(&self, t0: f64, t1: f64) -> Option<&SqueezingPoint> {
        self.points
            .iter()
            .filter(|p| p.t >= t0 && p.t <= t1 && p.xi2.is_finite())
            .min_by(|a, b| a.xi2.partial_cmp(&b.xi2).unwrap())
    }
}

/// Which variance feeds ξ².
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceSource {
    /// Full-system variance.
    Full,
    /// Subsystem difference `Var[S_a - S_b]`.
    Difference,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaMode {
    ClosedForm,
    Grid(Vec<f64>),
}

impl ThetaMode {
    pub fn scan(&self, cov: &YzCovariance) -> VarianceScan {
        match self {
            ThetaMode::ClosedForm => variance_scan(cov),
            ThetaMode::Grid(g) => grid_scan(cov, g),
        }
    }
}

/// Axes the moments are read in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementFrame {
    /// Spin length is `⟨Sx⟩`; `S^θ` mixes `Sz` and `Sy`.
    Lab,
    /// Axes rotated about `z` onto the azimuth of the mean spin, as when the
    /// readout rotation is referenced to the mean spin direction. A global
    /// precession then leaves all reported quantities unchanged.
    MeanSpin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveOptions {
    pub source: VarianceSource,
    pub theta: ThetaMode,
    pub frame: MeasurementFrame,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            source: VarianceSource::Full,
            theta: ThetaMode::ClosedForm,
            frame: MeasurementFrame::MeanSpin,
        }
    }
}

fn frame_angle(s: &MomentSummary, frame: MeasurementFrame) -> f64 {
    match frame {
        MeasurementFrame::Lab => 0.0,
        MeasurementFrame::MeanSpin => {
            let m = s.mean(Group::Full);
            m[1].atan2(m[0])
        }
    }
}

/// `(Sz, S⊥)` covariance with `S⊥ = -sinφ Sx + cosφ Sy`.
fn frame_covariance(s: &MomentSummary, g: Group, phi: f64) -> YzCovariance {
    let (sn, c) = phi.sin_cos();
    YzCovariance {
        yy: sn * sn * s.cov(g, 0, 0) - 2.0 * sn * c * s.cov(g, 0, 1) + c * c * s.cov(g, 1, 1),
        zz: s.cov(g, 2, 2),
        yz: -sn * s.cov(g, 0, 2) + c * s.cov(g, 1, 2),
    }
}

/// Mean spin projected on the frame's first axis and its standard error.
fn frame_length(s: &MomentSummary, phi: f64) -> (f64, f64) {
    let (sn, c) = phi.sin_cos();
    let m = s.mean(Group::Full);
    let g = Group::Full;
    let var = c * c * s.cov(g, 0, 0) + 2.0 * sn * c * s.cov(g, 0, 1) + sn * sn * s.cov(g, 1, 1);
    (c * m[0] + sn * m[1], (var.max(0.0) / s.count).sqrt())
}

struct PointEstimate {
    spin_length: f64,
    var_min: f64,
    xi2: f64,
}

fn estimate(s: &MomentSummary, n: f64, opts: &CurveOptions) -> (PointEstimate, VarianceScan) {
    let group = match opts.source {
        VarianceSource::Full => Group::Full,
        VarianceSource::Difference => Group::Diff,
    };
    let phi = frame_angle(s, opts.frame);
    let scan = opts.theta.scan(&frame_covariance(s, group, phi));
    let (sx, _) = frame_length(s, phi);
    let est = PointEstimate {
        spin_length: 2.0 * sx / n,
        var_min: 4.0 * scan.var_min / n,
        xi2: squeezing_parameter(scan.var_min, sx, n).xi2(),
    };
    (est, scan)
}

fn jackknife_sigma(values: &[f64]) -> f64 {
    let nb = values.len();
    if nb < 3 {
        return f64::NAN;
    }
    let mean = values.iter().sum::<f64>() / nb as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    ((nb as f64 - 1.0) / nb as f64 * ss).sqrt()
}

/// Squeezing curve from ensemble moments; errors on variance and ξ² come
/// from a leave-one-block-out jackknife.
pub fn curve_from_moments(m: &EnsembleMoments, opts: &CurveOptions) -> SqueezingCurve {
    let n = m.n_atoms as f64;
    let points = (0..m.n_times())
        .map(|t| {
            let s = m.summary(t);
            let (full, scan) = estimate(&s, n, opts);
            let mut var_loo = Vec::with_capacity(m.n_blocks());
            let mut xi_loo = Vec::with_capacity(m.n_blocks());
            for b in 0..m.n_blocks() {
                let (e, _) = estimate(&m.without_block(b, t), n, opts);
                var_loo.push(e.var_min);
                xi_loo.push(e.xi2);
            }
            SqueezingPoint {
                t: m.times[t],
                spin_length: full.spin_length,
                spin_length_err: 2.0 * frame_length(&s, frame_angle(&s, opts.frame)).1 / n,
                var_min: full.var_min,
                var_min_err: jackknife_sigma(&var_loo),
                var_max: 4.0 * scan.var_max / n,
                theta_min: scan.theta_min,
                xi2: full.xi2,
                xi2_err: jackknife_sigma(&xi_loo),
            }
        })
        .collect();
    SqueezingCurve { points }
}
