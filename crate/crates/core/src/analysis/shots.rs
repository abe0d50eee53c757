use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dtwa::CollectiveSample;
use crate::vec3::{add, mat_vec, rotation_matrix, sub, Axis, Vec3};
use crate::{Error, Result};

/// Projected collective spins of the two subsystems for one shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotRecord {
    pub t: f64,
    pub theta: f64,
    pub s_a: f64,
    pub s_b: f64,
    pub n_a: u32,
    pub n_b: u32,
}

impl ShotRecord {
    pub fn sum(&self) -> f64 {
        self.s_a + self.s_b
    }

    pub fn diff(&self) -> f64 {
        self.s_a - self.s_b
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_a + self.n_b
    }
}

/// Full collective vectors of both subsystems for one shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinShot {
    pub t: f64,
    pub a: Vec3,
    pub b: Vec3,
    pub n_a: u32,
    pub n_b: u32,
}

/// `S^θ = cosθ Sz + sinθ Sy`.
pub fn project(s: Vec3, theta: f64) -> f64 {
    let (sn, cs) = theta.sin_cos();
    cs * s[2] + sn * s[1]
}

impl SpinShot {
    pub fn from_sample(t: f64, s: &CollectiveSample) -> Self {
        SpinShot {
            t,
            a: s.a,
            b: s.b,
            n_a: s.n_a,
            n_b: s.n_b,
        }
    }

    pub fn full(&self) -> Vec3 {
        add(self.a, self.b)
    }

    pub fn diff(&self) -> Vec3 {
        sub(self.a, self.b)
    }

    pub fn record(&self, theta: f64) -> ShotRecord {
        ShotRecord {
            t: self.t,
            theta,
            s_a: project(self.a, theta),
            s_b: project(self.b, theta),
            n_a: self.n_a,
            n_b: self.n_b,
        }
    }

    /// Readout as done in the lab: rotate about x by θ, then measure Sz.
    pub fn record_via_rotation(&self, theta: f64) -> ShotRecord {
        let r = rotation_matrix(Axis::X.unit(), theta);
        ShotRecord {
            t: self.t,
            theta,
            s_a: mat_vec(&r, self.a)[2],
            s_b: mat_vec(&r, self.b)[2],
            n_a: self.n_a,
            n_b: self.n_b,
        }
    }

    pub fn rotated_z(&self, angle: f64) -> SpinShot {
        let r = rotation_matrix(Axis::Z.unit(), angle);
        SpinShot {
            a: mat_vec(&r, self.a),
            b: mat_vec(&r, self.b),
            ..*self
        }
    }
}

fn sample_variance(x: impl Iterator<Item = f64> + Clone) -> f64 {
    let (mut n, mut s) = (0.0, 0.0);
    for v in x.clone() {
        n += 1.0;
        s += v;
    }
    let mean = s / n;
    x.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Sample variances of `S_a + S_b` and `S_a - S_b` (unnormalized).
pub fn subsystem_variance(shots: &[ShotRecord]) -> Result<(f64, f64)> {
    if shots.len() < 2 {
        return Err(Error::domain("subsystem variance needs at least 2 shots"));
    }
    Ok((
        sample_variance(shots.iter().map(|s| s.sum())),
        sample_variance(shots.iter().map(|s| s.diff())),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// One phase per shot, split evenly across the two echo halves.
    QuasiStatic,
    /// Independent phases in each echo half.
    Fast,
}

/// Global phase noise about z. The collective rotation commutes with the
/// dynamics, so it can be applied to recorded vectors: the echo pulse negates
/// the phase picked up in the first half.
pub fn inject_phase_noise<R: Rng + ?Sized>(
    shots: &[SpinShot],
    rms: f64,
    mode: NoiseMode,
    echo: bool,
    rng: &mut R,
) -> Result<Vec<SpinShot>> {
    if !(rms >= 0.0 && rms.is_finite()) {
        return Err(Error::domain("phase noise rms must be non-negative"));
    }
    if rms == 0.0 {
        return Ok(shots.to_vec());
    }
    let sign = if echo { -1.0 } else { 1.0 };
    let (quasi, fast) = (
        Normal::new(0.0, rms).unwrap(),
        Normal::new(0.0, rms / 2f64.sqrt()).unwrap(),
    );
    Ok(shots
        .iter()
        .map(|s| {
            let (p1, p2) = match mode {
                NoiseMode::QuasiStatic => {
                    let p = quasi.sample(rng);
                    (0.5 * p, 0.5 * p)
                }
                NoiseMode::Fast => (fast.sample(rng), fast.sample(rng)),
            };
            s.rotated_z(p2 + sign * p1)
        })
        .collect())
}

/// Gaussian detection noise of standard deviation `sigma` added to each
/// subsystem readout.
pub fn add_detection_noise<R: Rng + ?Sized>(shots: &mut [ShotRecord], sigma: f64, rng: &mut R) {
    if sigma <= 0.0 {
        return;
    }
    let nd = Normal::new(0.0, sigma).unwrap();
    for s in shots {
        s.s_a += nd.sample(rng);
        s.s_b += nd.sample(rng);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedVariance {
    pub value: f64,
    /// Set when photon noise exceeded the measured variance.
    pub negative: bool,
}

/// `(4 var_atoms - 4 var_noatoms) / N`.
pub fn shot_noise_subtract(var_atoms: f64, var_noatoms: f64, n: f64) -> Result<NormalizedVariance> {
    if !(n > 0.0) {
        return Err(Error::domain("atom number must be positive"));
    }
    let value = 4.0 * (var_atoms - var_noatoms) / n;
    Ok(NormalizedVariance {
        value,
        negative: value < 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::jackknife::{jackknife_sums, variance_from_sums};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shot(a: Vec3, b: Vec3) -> SpinShot {
        SpinShot {
            t: 0.0,
            a,
            b,
            n_a: 10,
            n_b: 10,
        }
    }

    #[test]
    fn anticorrelated_halves() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let shots: Vec<ShotRecord> = (0..500)
            .map(|_| {
                let x: f64 = rng.random_range(-1.0..1.0);
                ShotRecord {
                    t: 0.0,
                    theta: 0.0,
                    s_a: x,
                    s_b: -x,
                    n_a: 4,
                    n_b: 4,
                }
            })
            .collect();
        let (vs, vd) = subsystem_variance(&shots).unwrap();
        let va = sample_variance(shots.iter().map(|s| s.s_a));
        assert!(vs.abs() < 1e-14);
        assert!((vd - 4.0 * va).abs() < 1e-12);
        assert!(subsystem_variance(&shots[..1]).is_err());
    }

    #[test]
    fn independent_halves_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let nd = Normal::new(0.0, 1.0).unwrap();
        let shots: Vec<ShotRecord> = (0..4000)
            .map(|_| ShotRecord {
                t: 0.0,
                theta: 0.0,
                s_a: nd.sample(&mut rng),
                s_b: nd.sample(&mut rng),
                n_a: 4,
                n_b: 4,
            })
            .collect();
        let f = |g: fn(&ShotRecord) -> f64| -> Vec<[f64; 2]> {
            shots.iter().map(|s| [g(s), g(s) * g(s)]).collect()
        };
        let js = jackknife_sums(&f(|s| s.sum()), variance_from_sums).unwrap();
        let jd = jackknife_sums(&f(|s| s.diff()), variance_from_sums).unwrap();
        let sigma = js.std_error.hypot(jd.std_error);
        assert!((js.estimate - jd.estimate).abs() < 4.0 * sigma);
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = vec![shot([1.0, 0.2, 0.3], [0.9, -0.1, 0.0])];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for mode in [NoiseMode::QuasiStatic, NoiseMode::Fast] {
            assert_eq!(inject_phase_noise(&s, 0.0, mode, true, &mut rng).unwrap(), s);
        }
        assert!(inject_phase_noise(&s, -1.0, NoiseMode::Fast, true, &mut rng).is_err());
    }

    #[test]
    fn echo_cancels_quasi_static_noise_exactly() {
        let s = vec![shot([3.0, 0.5, 0.1], [2.0, -0.4, 0.2]); 50];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = inject_phase_noise(&s, 0.3, NoiseMode::QuasiStatic, true, &mut rng).unwrap();
        for (o, i) in out.iter().zip(&s) {
            for c in 0..3 {
                assert!((o.a[c] - i.a[c]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn fast_noise_has_requested_rms() {
        // Coherent vector along x: Sy picks up (N/2) sin φ.
        let n = 1000.0;
        let s = vec![shot([n / 4.0, 0.0, 0.0], [n / 4.0, 0.0, 0.0]); 20_000];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rms = 0.1;
        for echo in [true, false] {
            let out = inject_phase_noise(&s, rms, NoiseMode::Fast, echo, &mut rng).unwrap();
            let v = sample_variance(out.iter().map(|o| o.full()[1]));
            let expect = (n / 2.0 * rms).powi(2);
            assert!((v / expect - 1.0).abs() < 0.05, "{v} vs {expect}");
            let vd = sample_variance(out.iter().map(|o| o.diff()[1]));
            assert!(vd < 1e-20);
        }
    }

    #[test]
    fn shot_noise_subtraction_examples() {
        let n = 400.0;
        let r = shot_noise_subtract(1.5 * n / 4.0, 0.5 * n / 4.0, n).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(!r.negative);
        let p = shot_noise_subtract(0.75, 0.0, 3.0).unwrap();
        assert_eq!(p.value, 1.0);
        assert!(shot_noise_subtract(0.1, 0.2, 1.0).unwrap().negative);
        assert!(shot_noise_subtract(1.0, 0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn rotation_readout_matches_projection(
            a in prop::array::uniform3(-5.0f64..5.0),
            b in prop::array::uniform3(-5.0f64..5.0),
            theta in 0.0f64..std::f64::consts::PI,
        ) {
            let s = shot(a, b);
            let (p, r) = (s.record(theta), s.record_via_rotation(theta));
            prop_assert!((p.s_a - r.s_a).abs() < 1e-10);
            prop_assert!((p.s_b - r.s_b).abs() < 1e-10);
        }
    }
}
