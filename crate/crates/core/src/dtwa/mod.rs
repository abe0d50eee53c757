//! Discrete truncated Wigner engine with mobile holes.
//!
//! A phase-space point is a set of classical spin vectors on the lattice
//! together with a hole mask. Occupied sites start from the discrete
//! Wigner points `(1/2, ±1/2, ±1/2)` and precess under the classical XXZ
//! field, `dS/dt = B × S` with `B = ∂H/∂S`. Holes move stochastically:
//! single hops at rate `t/J`, double hops at rate `2z - 1` that rotate the
//! hopped-over spin about a random in-plane axis, and an optional
//! `hz`-per-adjacent-hole z field that is frozen over each time step.
//!
//! Per time step the order is: refresh hole fields, precess for `dt`,
//! single hops, double hops, then the echo pulse if this is the midpoint.

mod ensemble;

pub use ensemble::{
    echo_applied, run_ensemble, run_ensemble_with_threads, run_trajectory, simulate, CollectiveSample,
    EnsembleMoments, Group, MomentSummary, Trajectory,
};

use std::f64::consts::PI;

use rand::Rng;

use crate::couplings::SpinCouplings;
use crate::error::{Error, Result};
use crate::lattice::LatticeGeometry;
use crate::vec3::{self, Axis, Vec3};

/// Which spin receives the random rotation after a double hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotateTarget {
    /// The vector that sat on the intermediate site before the hop,
    /// wherever the two exchanges moved it.
    MovedSpin,
    /// Whatever occupies the intermediate site after the hop.
    IntermediateSite,
}

/// How the x-polarized initial state is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preparation {
    /// Sample `(1/2, ±1/2, ±1/2)` directly.
    DirectX,
    /// Sample around `+z` and apply a global `π/2` pulse about `y`.
    PulseFromZ,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Time step in units of `ħ/J`.
    pub dt: f64,
    pub n_steps: usize,
    pub hole_density: f64,
    /// Single-hop rate per hole (`t/J`).
    pub hop_rate: f64,
    /// Double-hop rate per hole; `None` uses `2z - 1`.
    pub double_hop_rate: Option<f64>,
    /// Double-hop rotation angles are drawn from `[0, 2π α]`.
    pub alpha: f64,
    pub enable_hopping: bool,
    pub enable_double_hop: bool,
    pub enable_hz_field: bool,
    /// When off, double hops still move spins but apply no rotation.
    pub enable_spin_flip: bool,
    pub echo: bool,
    pub seed: u64,
    pub rotate_target: RotateTarget,
    pub preparation: Preparation,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            dt: 0.0176,
            n_steps: 200,
            hole_density: 0.0,
            hop_rate: 0.0,
            double_hop_rate: None,
            alpha: 1.0,
            enable_hopping: false,
            enable_double_hop: false,
            enable_hz_field: false,
            enable_spin_flip: false,
            echo: false,
            seed: 0,
            rotate_target: RotateTarget::MovedSpin,
            preparation: Preparation::DirectX,
        }
    }
}

impl EngineConfig {
    pub fn double_hop_rate_for(&self, geom: &LatticeGeometry) -> f64 {
        self.double_hop_rate
            .unwrap_or_else(|| geom.default_double_hop_rate())
    }

    pub fn validate(&self, geom: &LatticeGeometry) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain(format!("dt must be positive, got {}", self.dt)));
        }
        if !(0.0..1.0).contains(&self.hole_density) {
            return Err(Error::domain(format!(
                "hole density must lie in [0, 1), got {}",
                self.hole_density
            )));
        }
        if self.hop_rate < 0.0 || self.hop_rate * self.dt > 1.0 {
            return Err(Error::domain(format!(
                "hop probability {} per step is not in [0, 1]",
                self.hop_rate * self.dt
            )));
        }
        let dh = self.double_hop_rate_for(geom);
        if dh < 0.0 || dh * self.dt > 1.0 {
            return Err(Error::domain(format!(
                "double-hop probability {} per step is not in [0, 1]",
                dh * self.dt
            )));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::domain("alpha must be non-negative"));
        }
        Ok(())
    }
}

/// A DTWA phase-space point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConfig {
    pub spins: Vec<Vec3>,
    pub hole_mask: Vec<bool>,
    /// Hole positions; the order fixes the order holes are processed in.
    pub holes: Vec<usize>,
}

impl SpinConfig {
    /// Fully occupied lattice with every spin set to `s`.
    pub fn uniform(n_sites: usize, s: Vec3) -> Self {
        SpinConfig {
            spins: vec![s; n_sites],
            hole_mask: vec![false; n_sites],
            holes: Vec::new(),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.spins.len()
    }

    pub fn n_atoms(&self) -> usize {
        self.spins.len() - self.holes.len()
    }

    pub fn n_holes(&self) -> usize {
        self.holes.len()
    }

    /// Turns `site` into a hole.
    pub fn make_hole(&mut self, site: usize) {
        if !self.hole_mask[site] {
            self.hole_mask[site] = true;
            self.spins[site] = vec3::ZERO;
            self.holes.push(site);
        }
    }

    pub fn total(&self) -> Vec3 {
        self.spins.iter().fold(vec3::ZERO, |acc, &s| vec3::add(acc, s))
    }

    /// Exchanges the contents of a hole site with another site. No-op when
    /// `other` is also a hole.
    fn swap_hole(&mut self, hole_slot: usize, other: usize) -> bool {
        let h = self.holes[hole_slot];
        if self.hole_mask[other] {
            return false;
        }
        self.spins[h] = self.spins[other];
        self.spins[other] = vec3::ZERO;
        self.hole_mask[h] = false;
        self.hole_mask[other] = true;
        self.holes[hole_slot] = other;
        true
    }
}

/// Number of holes placed for density `rho` on `n_sites` sites.
pub fn hole_count(rho: f64, n_sites: usize) -> usize {
    (rho * n_sites as f64).round() as usize
}

/// Draws an x-polarized discrete Wigner point with `round(rho N)` holes
/// placed uniformly without replacement.
pub fn sample_initial<R: Rng + ?Sized>(geom: &LatticeGeometry, rho: f64, rng: &mut R) -> SpinConfig {
    let n = geom.n_sites();
    let mut spins = Vec::with_capacity(n);
    for _ in 0..n {
        let bits: u32 = rng.random();
        let sy = if bits & 1 == 0 { 0.5 } else { -0.5 };
        let sz = if bits & 2 == 0 { 0.5 } else { -0.5 };
        spins.push([0.5, sy, sz]);
    }
    let mut config = SpinConfig {
        spins,
        hole_mask: vec![false; n],
        holes: Vec::new(),
    };
    let n_holes = hole_count(rho, n);
    for site in rand::seq::index::sample(rng, n, n_holes).into_iter() {
        config.make_hole(site);
    }
    config.holes.sort_unstable();
    config
}

/// Same as [`sample_initial`] but polarized along `+z`
/// (`(±1/2, ±1/2, 1/2)`), for protocols that start with a `π/2` pulse.
pub fn sample_initial_z<R: Rng + ?Sized>(geom: &LatticeGeometry, rho: f64, rng: &mut R) -> SpinConfig {
    let mut c = sample_initial(geom, rho, rng);
    for (s, &hole) in c.spins.iter_mut().zip(&c.hole_mask) {
        if !hole {
            *s = [s[1], s[2], 0.5];
        }
    }
    c
}

/// Count of hole neighbors for every site.
pub fn adjacent_hole_counts(config: &SpinConfig, geom: &LatticeGeometry, out: &mut Vec<u32>) {
    out.clear();
    out.resize(config.n_sites(), 0);
    for &h in &config.holes {
        for &j in geom.nn_of(h) {
            out[j] += 1;
        }
    }
}

/// Classical field on an occupied site. Hole neighbors do not contribute
/// exchange; with `hz_active` each adjacent hole adds `hz` along z.
pub fn local_field(
    config: &SpinConfig,
    geom: &LatticeGeometry,
    site: usize,
    couplings: &SpinCouplings,
    hz_active: bool,
) -> Result<Vec3> {
    if config.hole_mask[site] {
        return Err(Error::domain(format!("site {site} is a hole")));
    }
    let mut b = vec3::ZERO;
    let mut holes = 0u32;
    for &j in geom.nn_of(site) {
        if config.hole_mask[j] {
            holes += 1;
            continue;
        }
        let s = config.spins[j];
        b[0] += couplings.j * s[0];
        b[1] += couplings.j * s[1];
        b[2] += couplings.jz * s[2];
    }
    if hz_active {
        b[2] += couplings.hz * holes as f64;
    }
    Ok(b)
}

/// RK4 integrator for `dS_i/dt = B_i × S_i` with scratch buffers reused
/// across steps.
#[derive(Debug, Default, Clone)]
pub struct Precessor {
    k: [Vec<Vec3>; 4],
    stage: Vec<Vec3>,
    field: Vec<Vec3>,
}

impl Precessor {
    pub fn new() -> Self {
        Self::default()
    }

    fn derivative(
        spins: &[Vec3],
        geom: &LatticeGeometry,
        couplings: &SpinCouplings,
        z_bias: Option<&[f64]>,
        field: &mut [Vec3],
        out: &mut [Vec3],
    ) {
        let (j, jz) = (couplings.j, couplings.jz);
        for i in 0..spins.len() {
            let mut b = vec3::ZERO;
            for &n in geom.nn_of(i) {
                let s = spins[n];
                b[0] += s[0];
                b[1] += s[1];
                b[2] += s[2];
            }
            b = [j * b[0], j * b[1], jz * b[2]];
            if let Some(bias) = z_bias {
                b[2] += bias[i];
            }
            field[i] = b;
            out[i] = vec3::cross(b, spins[i]);
        }
    }

    /// Advances all spins by `dt`. `z_bias` is a per-site static z field
    /// (the hole field); hole sites have zero spin and stay zero.
    pub fn step(
        &mut self,
        spins: &mut [Vec3],
        geom: &LatticeGeometry,
        couplings: &SpinCouplings,
        z_bias: Option<&[f64]>,
        dt: f64,
    ) {
        let n = spins.len();
        for buf in self.k.iter_mut().chain([&mut self.stage, &mut self.field]) {
            buf.resize(n, vec3::ZERO);
        }
        let [k1, k2, k3, k4] = &mut self.k;
        let stage = &mut self.stage;
        let field = &mut self.field;

        Self::derivative(spins, geom, couplings, z_bias, field, k1);
        for i in 0..n {
            stage[i] = vec3::add(spins[i], vec3::scale(k1[i], 0.5 * dt));
        }
        Self::derivative(stage, geom, couplings, z_bias, field, k2);
        for i in 0..n {
            stage[i] = vec3::add(spins[i], vec3::scale(k2[i], 0.5 * dt));
        }
        Self::derivative(stage, geom, couplings, z_bias, field, k3);
        for i in 0..n {
            stage[i] = vec3::add(spins[i], vec3::scale(k3[i], dt));
        }
        Self::derivative(stage, geom, couplings, z_bias, field, k4);
        let w = dt / 6.0;
        for i in 0..n {
            for c in 0..3 {
                spins[i][c] += w * (k1[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]);
            }
        }
    }
}

/// One RK4 precession step of the whole configuration, with the hole z
/// field applied when `hz_active`.
pub fn precess_step(
    config: &mut SpinConfig,
    geom: &LatticeGeometry,
    couplings: &SpinCouplings,
    hz_active: bool,
    dt: f64,
) {
    let bias = hz_active.then(|| {
        let mut counts = Vec::new();
        adjacent_hole_counts(config, geom, &mut counts);
        counts
            .iter()
            .map(|&c| couplings.hz * c as f64)
            .collect::<Vec<_>>()
    });
    Precessor::new().step(&mut config.spins, geom, couplings, bias.as_deref(), dt);
}

/// Each hole, with probability `hop_rate·dt`, swaps with a uniformly chosen
/// neighbor. Returns the number of successful moves.
pub fn hole_hop_step<R: Rng + ?Sized>(
    config: &mut SpinConfig,
    geom: &LatticeGeometry,
    dt: f64,
    hop_rate: f64,
    rng: &mut R,
) -> usize {
    let p = hop_rate * dt;
    if p <= 0.0 {
        return 0;
    }
    let mut moved = 0;
    for slot in 0..config.holes.len() {
        if rng.random::<f64>() >= p {
            continue;
        }
        let nn = geom.nn_of(config.holes[slot]);
        if nn.is_empty() {
            continue;
        }
        let target = nn[rng.random_range(0..nn.len())];
        if config.swap_hole(slot, target) {
            moved += 1;
        }
    }
    moved
}

/// Parameters of the spin-flip-assisted double hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleHop {
    pub rate: f64,
    pub alpha: f64,
    /// When false the hop moves spins without rotating them.
    pub rotate: bool,
    pub target: RotateTarget,
}

/// Rotates `s` by `angle` about the in-plane axis at azimuth `phi`.
pub fn rotate_about_xy_axis(s: Vec3, phi: f64, angle: f64) -> Vec3 {
    let m = vec3::rotation_matrix([phi.cos(), phi.sin(), 0.0], angle);
    vec3::mat_vec(&m, s)
}

/// Each hole, with probability `rate·dt`, hops through a neighbor `j` to a
/// site `k ≠ origin` adjacent to `j` (two sequential exchanges) and the
/// hopped-over spin is rotated by `θ ∈ [0, 2π α]` about a random in-plane
/// axis. Any hole on the path makes the move a no-op.
pub fn double_hop_step<R: Rng + ?Sized>(
    config: &mut SpinConfig,
    geom: &LatticeGeometry,
    dt: f64,
    hop: &DoubleHop,
    rng: &mut R,
) -> usize {
    let p = hop.rate * dt;
    if p <= 0.0 {
        return 0;
    }
    let mut moved = 0;
    for slot in 0..config.holes.len() {
        if rng.random::<f64>() >= p {
            continue;
        }
        let origin = config.holes[slot];
        let nn = geom.nn_of(origin);
        if nn.is_empty() {
            continue;
        }
        let j = nn[rng.random_range(0..nn.len())];
        let onward: Vec<_> = geom.nn_of(j).iter().copied().filter(|&k| k != origin).collect();
        if onward.is_empty() {
            continue;
        }
        let k = onward[rng.random_range(0..onward.len())];
        if config.hole_mask[j] || config.hole_mask[k] {
            continue;
        }
        // hole <-> j puts S_j on the origin, hole <-> k puts S_k on j.
        config.swap_hole(slot, j);
        config.swap_hole(slot, k);
        moved += 1;
        if hop.rotate {
            let phi = rng.random::<f64>() * 2.0 * PI;
            let angle = rng.random::<f64>() * 2.0 * PI * hop.alpha;
            let site = match hop.target {
                RotateTarget::MovedSpin => origin,
                RotateTarget::IntermediateSite => j,
            };
            config.spins[site] = rotate_about_xy_axis(config.spins[site], phi, angle);
        }
    }
    moved
}

/// Rotates every occupied spin by `angle` about a lab axis.
pub fn apply_global_rotation(config: &mut SpinConfig, axis: Axis, angle: f64) {
    let m = vec3::rotation_matrix(axis.unit(), angle);
    for (s, &hole) in config.spins.iter_mut().zip(&config.hole_mask) {
        if !hole {
            *s = vec3::mat_vec(&m, *s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn no_holes_means_all_x_half() {
        let g = LatticeGeometry::cube(4).unwrap();
        let c = sample_initial(&g, 0.0, &mut rng(1));
        assert_eq!(c.n_atoms(), 64);
        for s in &c.spins {
            assert_eq!(s[0], 0.5);
            assert_eq!(s[1].abs(), 0.5);
            assert_eq!(s[2].abs(), 0.5);
            assert_eq!(vec3::norm_sq(*s), 0.75);
        }
    }

    #[test]
    fn hole_count_is_rounded_density() {
        let g = LatticeGeometry::cube(10).unwrap();
        let c = sample_initial(&g, 0.11, &mut rng(2));
        assert_eq!(c.n_holes(), 110);
        assert_eq!(c.hole_mask.iter().filter(|&&h| h).count(), 110);
        for &h in &c.holes {
            assert_eq!(c.spins[h], vec3::ZERO);
        }
        assert_eq!(hole_count(0.05, 32), 2);
    }

    #[test]
    fn sy_mean_vanishes_over_samples() {
        let g = LatticeGeometry::chain(20).unwrap();
        let m = 4000;
        let totals: Vec<f64> = (0..m)
            .map(|i| sample_initial(&g, 0.0, &mut StreamKey::new(3, i).at(0)).total()[1])
            .collect();
        let mean = totals.iter().sum::<f64>() / m as f64;
        let var = totals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        let se = (var / m as f64).sqrt();
        assert!(mean.abs() < 4.0 * se, "mean {mean} se {se}");
        // Var[Sy_tot] = N/4 for independent ±1/2 components.
        assert!((var - 5.0).abs() < 4.0 * 5.0 * (2.0 / m as f64).sqrt());
    }

    #[test]
    fn field_examples() {
        let g = LatticeGeometry::chain(2).unwrap();
        let c = SpinConfig {
            spins: vec![[0.5, 0.5, 0.5], [0.5, 0.5, -0.5]],
            hole_mask: vec![false, false],
            holes: vec![],
        };
        let k = SpinCouplings::sim(-0.18, 0.0, 0.0);
        let b = local_field(&c, &g, 0, &k, true).unwrap();
        assert!((b[0] - 0.5).abs() < 1e-15);
        assert!((b[1] - 0.5).abs() < 1e-15);
        assert!((b[2] - 0.09).abs() < 1e-15);

        let mut c = SpinConfig::uniform(2, [0.5, 0.0, 0.0]);
        c.make_hole(1);
        let k = SpinCouplings::sim(-0.18, -1.1, 0.0);
        let b = local_field(&c, &g, 0, &k, true).unwrap();
        assert_eq!(b, [0.0, 0.0, -1.1]);
        let b = local_field(&c, &g, 0, &k, false).unwrap();
        assert_eq!(b, [0.0, 0.0, 0.0]);
        assert!(local_field(&c, &g, 1, &k, true).is_err());
    }

    #[test]
    fn isolated_site_feels_no_field() {
        let g = LatticeGeometry::chain(3).unwrap();
        let mut c = SpinConfig::uniform(3, [0.5, 0.5, 0.5]);
        c.make_hole(1);
        let k = SpinCouplings::sim(-0.18, -1.1, 0.0);
        // Site 0 has only the hole as neighbor; without hz there is nothing.
        assert_eq!(local_field(&c, &g, 0, &k, false).unwrap(), [0.0; 3]);
    }

    #[test]
    fn half_larmor_turn_in_static_field() {
        // Spin 0 in a z field from the hole bias only, site 1 a hole.
        let g = LatticeGeometry::chain(2).unwrap();
        let mut c = SpinConfig::uniform(2, [0.5, 0.0, 0.0]);
        c.make_hole(1);
        let k = SpinCouplings::sim(0.0, 1.0, 0.0);
        let steps = 2000;
        let dt = PI / steps as f64;
        let mut p = Precessor::new();
        let bias = vec![1.0, 0.0];
        for _ in 0..steps {
            p.step(&mut c.spins, &g, &k, Some(&bias), dt);
        }
        assert!((c.spins[0][0] + 0.5).abs() < 1e-10);
        assert!(c.spins[0][1].abs() < 1e-10);
        assert_eq!(c.spins[1], vec3::ZERO);
        let _ = k;
    }

    #[test]
    fn aligned_isotropic_spins_do_not_move() {
        let g = LatticeGeometry::cube(3).unwrap();
        let mut c = SpinConfig::uniform(27, [0.5, 0.5, 0.5]);
        let before = c.clone();
        let k = SpinCouplings::sim(1.0, 0.0, 0.0);
        for _ in 0..50 {
            precess_step(&mut c, &g, &k, false, 0.0176);
        }
        for (a, b) in c.spins.iter().zip(&before.spins) {
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn precession_conserves_norms() {
        let g = LatticeGeometry::cube(5).unwrap();
        let mut c = sample_initial(&g, 0.0, &mut rng(9));
        let k = SpinCouplings::sim(-0.18, 0.0, 0.0);
        let mut p = Precessor::new();
        let mut worst_step = 0.0f64;
        for _ in 0..200 {
            let before: Vec<f64> = c.spins.iter().map(|s| vec3::norm_sq(*s)).collect();
            p.step(&mut c.spins, &g, &k, None, 0.0176);
            for (s, b) in c.spins.iter().zip(&before) {
                worst_step = worst_step.max(((vec3::norm_sq(*s) - b) / b).abs());
            }
        }
        assert!(worst_step < 1e-6, "per-step relative drift {worst_step}");
        let worst = c
            .spins
            .iter()
            .map(|s| (vec3::norm_sq(*s) - 0.75).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-5, "norm drift {worst}");
    }

    #[test]
    fn zero_rate_hops_are_identity() {
        let g = LatticeGeometry::cube(4).unwrap();
        let mut c = sample_initial(&g, 0.2, &mut rng(4));
        let before = c.clone();
        assert_eq!(hole_hop_step(&mut c, &g, 0.0176, 0.0, &mut rng(5)), 0);
        let hop = DoubleHop {
            rate: 0.0,
            alpha: 1.0,
            rotate: true,
            target: RotateTarget::MovedSpin,
        };
        assert_eq!(double_hop_step(&mut c, &g, 0.0176, &hop, &mut rng(6)), 0);
        assert_eq!(c, before);
    }

    #[test]
    fn forced_single_hop_goes_left_or_right() {
        let g = LatticeGeometry::chain(5).unwrap();
        let trials = 4000;
        let mut left = 0;
        for t in 0..trials {
            let mut c = SpinConfig::uniform(5, [0.5, 0.0, 0.0]);
            c.spins[1] = [0.5, 0.5, 0.0];
            c.make_hole(2);
            hole_hop_step(&mut c, &g, 1.0, 1.0, &mut rng(100 + t));
            assert_eq!(c.n_holes(), 1);
            match c.holes[0] {
                1 => {
                    left += 1;
                    // the spin that was on site 1 now sits on site 2
                    assert_eq!(c.spins[2], [0.5, 0.5, 0.0]);
                }
                3 => {}
                other => panic!("hole ended on {other}"),
            }
        }
        let frac = left as f64 / trials as f64;
        assert!((frac - 0.5).abs() < 4.0 * (0.25 / trials as f64).sqrt());
    }

    #[test]
    fn hole_collisions_are_noops() {
        let g = LatticeGeometry::chain(2).unwrap();
        let mut c = SpinConfig::uniform(2, [0.5, 0.0, 0.0]);
        c.make_hole(0);
        c.make_hole(1);
        let before = c.clone();
        assert_eq!(hole_hop_step(&mut c, &g, 1.0, 1.0, &mut rng(1)), 0);
        assert_eq!(c, before);
    }

    #[test]
    fn double_hop_moves_and_rotates_the_intermediate_spin() {
        let g = LatticeGeometry::chain(3).unwrap();
        let base = {
            let mut c = SpinConfig::uniform(3, [0.0; 3]);
            c.spins[1] = [0.5, 0.1, 0.3];
            c.spins[2] = [0.2, -0.4, 0.1];
            c.make_hole(0);
            c
        };
        let hop = DoubleHop {
            rate: 1.0,
            alpha: 1.0,
            rotate: true,
            target: RotateTarget::MovedSpin,
        };
        let mut c = base.clone();
        assert_eq!(double_hop_step(&mut c, &g, 1.0, &hop, &mut rng(3)), 1);
        assert_eq!(c.holes, vec![2]);
        assert_eq!(c.spins[1], base.spins[2]);
        assert_eq!(c.spins[2], vec3::ZERO);
        let n0 = vec3::norm_sq(base.spins[1]);
        assert!((vec3::norm_sq(c.spins[0]) - n0).abs() < 1e-15);
        // Rotation about an in-plane axis perturbs the moved vector.
        assert_ne!(c.spins[0], base.spins[1]);

        let mut c = base.clone();
        let flag = DoubleHop {
            target: RotateTarget::IntermediateSite,
            ..hop
        };
        double_hop_step(&mut c, &g, 1.0, &flag, &mut rng(3));
        assert_eq!(c.spins[0], base.spins[1]);
        assert!((vec3::norm_sq(c.spins[1]) - vec3::norm_sq(base.spins[2])).abs() < 1e-15);

        let mut c = base.clone();
        let plain = DoubleHop { rotate: false, ..hop };
        double_hop_step(&mut c, &g, 1.0, &plain, &mut rng(3));
        assert_eq!(c.spins[0], base.spins[1]);
        assert_eq!(c.spins[1], base.spins[2]);
    }

    #[test]
    fn double_hop_blocked_at_chain_end() {
        // From site 1 of a 2-site chain there is no onward site.
        let g = LatticeGeometry::chain(2).unwrap();
        let mut c = SpinConfig::uniform(2, [0.5, 0.0, 0.0]);
        c.make_hole(1);
        let hop = DoubleHop {
            rate: 1.0,
            alpha: 1.0,
            rotate: true,
            target: RotateTarget::MovedSpin,
        };
        let before = c.clone();
        assert_eq!(double_hop_step(&mut c, &g, 1.0, &hop, &mut rng(8)), 0);
        assert_eq!(c, before);
    }

    #[test]
    fn global_rotations() {
        let mut c = SpinConfig::uniform(4, [0.0, 0.0, 0.5]);
        c.make_hole(3);
        apply_global_rotation(&mut c, Axis::Y, PI / 2.0);
        for s in &c.spins[..3] {
            assert!((s[0] - 0.5).abs() < 1e-15 && s[1].abs() < 1e-15 && s[2].abs() < 1e-15);
        }
        assert_eq!(c.spins[3], vec3::ZERO);

        let g = LatticeGeometry::chain(6).unwrap();
        let orig = sample_initial(&g, 0.0, &mut rng(2));
        let mut c = orig.clone();
        apply_global_rotation(&mut c, Axis::Y, PI);
        apply_global_rotation(&mut c, Axis::Y, PI);
        for (a, b) in c.spins.iter().zip(&orig.spins) {
            for i in 0..3 {
                assert!((a[i] - b[i]).abs() < 1e-15);
            }
        }
        let mut c = orig.clone();
        apply_global_rotation(&mut c, Axis::X, 0.0);
        assert_eq!(c, orig);
    }

    #[test]
    fn validation_rejects_bad_probabilities() {
        let g = LatticeGeometry::cube(3).unwrap();
        let mut cfg = EngineConfig::default();
        assert!(cfg.validate(&g).is_ok());
        cfg.hop_rate = 100.0;
        assert!(cfg.validate(&g).is_err());
        cfg.hop_rate = 1.0;
        cfg.hole_density = 1.0;
        assert!(cfg.validate(&g).is_err());
        cfg.hole_density = 0.1;
        cfg.double_hop_rate = Some(1000.0);
        assert!(cfg.validate(&g).is_err());
    }
}
