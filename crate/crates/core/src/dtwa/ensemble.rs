use std::f64::consts::PI;

use rayon::prelude::*;

use super::{
    adjacent_hole_counts, apply_global_rotation, double_hop_step, hole_count, hole_hop_step,
    sample_initial, sample_initial_z, DoubleHop, EngineConfig, Precessor, Preparation, SpinConfig,
};
use crate::couplings::SpinCouplings;
use crate::error::{Error, Result};
use crate::lattice::LatticeGeometry;
use crate::rng::{StreamKey, INITIAL_STEP};
use crate::vec3::{self, Axis, Vec3};

/// Collective spin of the two subsystems at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CollectiveSample {
    pub a: Vec3,
    pub b: Vec3,
    pub n_a: u32,
    pub n_b: u32,
}

impl CollectiveSample {
    pub fn full(&self) -> Vec3 {
        vec3::add(self.a, self.b)
    }

    pub fn diff(&self) -> Vec3 {
        vec3::sub(self.a, self.b)
    }
}

/// Per-step record of one trajectory (index 0 is the initial state).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub index: u64,
    pub samples: Vec<CollectiveSample>,
}

fn collect(config: &SpinConfig, geom: &LatticeGeometry, flipped: bool) -> CollectiveSample {
    let mut out = CollectiveSample::default();
    for (site, (s, &hole)) in config.spins.iter().zip(&config.hole_mask).enumerate() {
        if hole {
            continue;
        }
        if geom.in_subsystem_a(site) {
            out.a = vec3::add(out.a, *s);
            out.n_a += 1;
        } else {
            out.b = vec3::add(out.b, *s);
            out.n_b += 1;
        }
    }
    if flipped {
        // Report post-echo values in the frame rotated back by π about y.
        out.a = [-out.a[0], out.a[1], -out.a[2]];
        out.b = [-out.b[0], out.b[1], -out.b[2]];
    }
    out
}

/// Whether the echo pulse has been applied by the time `step` is recorded.
pub fn echo_applied(cfg: &EngineConfig, step: usize) -> bool {
    let echo_step = cfg.n_steps / 2;
    cfg.echo && echo_step >= 1 && step >= echo_step
}

/// Runs one trajectory and calls `observe(step, config, sample)` after the
/// initial preparation and after every step.
pub fn simulate<F>(
    geom: &LatticeGeometry,
    couplings: &SpinCouplings,
    cfg: &EngineConfig,
    index: u64,
    mut observe: F,
) -> SpinConfig
where
    F: FnMut(usize, &SpinConfig, CollectiveSample),
{
    let key = StreamKey::new(cfg.seed, index);
    let mut init_rng = key.at(INITIAL_STEP);
    let mut config = match cfg.preparation {
        Preparation::DirectX => sample_initial(geom, cfg.hole_density, &mut init_rng),
        Preparation::PulseFromZ => {
            let mut c = sample_initial_z(geom, cfg.hole_density, &mut init_rng);
            apply_global_rotation(&mut c, Axis::Y, PI / 2.0);
            c
        }
    };
    let mut flipped = false;
    observe(0, &config, collect(&config, geom, flipped));

    let hop = DoubleHop {
        rate: cfg.double_hop_rate_for(geom),
        alpha: cfg.alpha,
        rotate: cfg.enable_spin_flip,
        target: cfg.rotate_target,
    };
    let echo_step = cfg.n_steps / 2;
    let mut precessor = Precessor::new();
    let mut counts = Vec::new();
    let mut bias = Vec::new();
    let has_holes = !config.holes.is_empty();
    for step in 0..cfg.n_steps {
        let mut rng = key.at(step as u64 + 1);
        let z_bias = if cfg.enable_hz_field && has_holes {
            adjacent_hole_counts(&config, geom, &mut counts);
            bias.clear();
            bias.extend(counts.iter().map(|&c| couplings.hz * c as f64));
            Some(bias.as_slice())
        } else {
            None
        };
        precessor.step(&mut config.spins, geom, couplings, z_bias, cfg.dt);
        if has_holes {
            if cfg.enable_hopping {
                hole_hop_step(&mut config, geom, cfg.dt, cfg.hop_rate, &mut rng);
            }
            if cfg.enable_double_hop {
                double_hop_step(&mut config, geom, cfg.dt, &hop, &mut rng);
            }
        }
        if cfg.echo && step + 1 == echo_step {
            apply_global_rotation(&mut config, Axis::Y, PI);
            flipped = true;
        }
        observe(step + 1, &config, collect(&config, geom, flipped));
    }
    config
}

/// Runs trajectory `index` of the ensemble defined by `cfg.seed`.
pub fn run_trajectory(
    geom: &LatticeGeometry,
    couplings: &SpinCouplings,
    cfg: &EngineConfig,
    index: u64,
) -> Trajectory {
    let mut samples = Vec::with_capacity(cfg.n_steps + 1);
    simulate(geom, couplings, cfg, index, |_, _, s| samples.push(s));
    Trajectory { index, samples }
}

/// First- and second-moment groups tracked by the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Full,
    A,
    B,
    /// `a - b`.
    Diff,
}

impl Group {
    pub const ALL: [Group; 4] = [Group::Full, Group::A, Group::B, Group::Diff];

    fn slot(self) -> usize {
        self as usize
    }
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// Raw sums for one time point over a set of trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Sums {
    count: f64,
    s: [[f64; 3]; 4],
    ss: [[f64; 6]; 4],
    n_a: f64,
    n_b: f64,
}

impl Sums {
    fn push(&mut self, x: &CollectiveSample) {
        self.count += 1.0;
        let vs = [x.full(), x.a, x.b, x.diff()];
        for (g, v) in vs.iter().enumerate() {
            for c in 0..3 {
                self.s[g][c] += v[c];
            }
            for (p, &(i, j)) in PAIRS.iter().enumerate() {
                self.ss[g][p] += v[i] * v[j];
            }
        }
        self.n_a += x.n_a as f64;
        self.n_b += x.n_b as f64;
    }

    fn combine(&mut self, other: &Sums, sign: f64) {
        self.count += sign * other.count;
        for g in 0..4 {
            for c in 0..3 {
                self.s[g][c] += sign * other.s[g][c];
            }
            for p in 0..6 {
                self.ss[g][p] += sign * other.ss[g][p];
            }
        }
        self.n_a += sign * other.n_a;
        self.n_b += sign * other.n_b;
    }

    fn summary(&self) -> MomentSummary {
        let m = self.count;
        let mut mean = [[0.0; 3]; 4];
        let mut cov = [[0.0; 6]; 4];
        for g in 0..4 {
            for c in 0..3 {
                mean[g][c] = self.s[g][c] / m;
            }
            for (p, &(i, j)) in PAIRS.iter().enumerate() {
                // Unbiased sample covariance.
                cov[g][p] = if m > 1.0 {
                    (self.ss[g][p] - m * mean[g][i] * mean[g][j]) / (m - 1.0)
                } else {
                    0.0
                };
            }
        }
        MomentSummary {
            count: m,
            mean,
            cov,
            n_a: self.n_a / m,
            n_b: self.n_b / m,
        }
    }
}

/// Means and sample covariances at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary {
    pub count: f64,
    mean: [[f64; 3]; 4],
    /// xx, yy, zz, xy, xz, yz.
    cov: [[f64; 6]; 4],
    pub n_a: f64,
    pub n_b: f64,
}

impl MomentSummary {
    pub fn mean(&self, g: Group) -> Vec3 {
        self.mean[g.slot()]
    }

    /// Sample covariance between components `i` and `j` of group `g`.
    pub fn cov(&self, g: Group, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let p = PAIRS.iter().position(|&q| q == (i, j)).unwrap();
        self.cov[g.slot()][p]
    }

    /// `(Var[Sy], Var[Sz], Cov[Sy, Sz])`.
    pub fn yz(&self, g: Group) -> (f64, f64, f64) {
        let c = &self.cov[g.slot()];
        (c[1], c[2], c[5])
    }

    /// Standard error of the mean of component `c` of group `g`.
    pub fn std_error(&self, g: Group, c: usize) -> f64 {
        (self.cov(g, c, c).max(0.0) / self.count).sqrt()
    }
}

/// Ensemble moments over a time grid, kept as per-block sums so that
/// leave-one-block-out jackknife estimates are available.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMoments {
    pub times: Vec<f64>,
    pub n_sites: usize,
    pub n_atoms: usize,
    pub n_trajectories: usize,
    blocks: Vec<Vec<Sums>>,
    total: Vec<Sums>,
}

/// Fixed by the trajectory count alone so results never depend on threads.
pub const MAX_BLOCKS: usize = 64;

fn block_ranges(m: usize) -> Vec<(usize, usize)> {
    let nb = m.min(MAX_BLOCKS);
    (0..nb).map(|b| (b * m / nb, (b + 1) * m / nb)).collect()
}

impl EnsembleMoments {
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn summary(&self, t: usize) -> MomentSummary {
        self.total[t].summary()
    }

    /// Moments with block `b` removed.
    pub fn without_block(&self, b: usize, t: usize) -> MomentSummary {
        let mut s = self.total[t];
        s.combine(&self.blocks[b][t], -1.0);
        s.summary()
    }

    /// Index of the grid time closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &ti) in self.times.iter().enumerate() {
            if (ti - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    /// Builds moments from explicit trajectories (one block per
    /// trajectory when there are few of them).
    pub fn from_trajectories(
        trajectories: &[Trajectory],
        times: Vec<f64>,
        n_sites: usize,
        n_atoms: usize,
    ) -> Result<Self> {
        let m = trajectories.len();
        if m < 2 {
            return Err(Error::domain("need at least two trajectories"));
        }
        let nt = times.len();
        if trajectories.iter().any(|t| t.samples.len() != nt) {
            return Err(Error::domain("trajectory lengths do not match the time grid"));
        }
        let blocks: Vec<Vec<Sums>> = block_ranges(m)
            .into_iter()
            .map(|(lo, hi)| {
                let mut sums = vec![Sums::default(); nt];
                for tr in &trajectories[lo..hi] {
                    for (k, s) in tr.samples.iter().enumerate() {
                        sums[k].push(s);
                    }
                }
                sums
            })
            .collect();
        Ok(Self::assemble(blocks, times, n_sites, n_atoms, m))
    }

    fn assemble(
        blocks: Vec<Vec<Sums>>,
        times: Vec<f64>,
        n_sites: usize,
        n_atoms: usize,
        m: usize,
    ) -> Self {
        let mut total = vec![Sums::default(); times.len()];
        for b in &blocks {
            for (t, s) in total.iter_mut().zip(b) {
                t.combine(s, 1.0);
            }
        }
        EnsembleMoments {
            times,
            n_sites,
            n_atoms,
            n_trajectories: m,
            blocks,
            total,
        }
    }
}

/// Aggregates `m` trajectories (indices `0..m`) on the current rayon pool.
/// Blocks are reduced in index order, so the result is bit-identical for
/// any thread count.
pub fn run_ensemble(
    geom: &LatticeGeometry,
    couplings: &SpinCouplings,
    cfg: &EngineConfig,
    m: usize,
) -> Result<EnsembleMoments> {
    if m < 2 {
        return Err(Error::domain(format!("ensemble needs M >= 2, got {m}")));
    }
    cfg.validate(geom)?;
    let nt = cfg.n_steps + 1;
    let blocks: Vec<Vec<Sums>> = block_ranges(m)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut sums = vec![Sums::default(); nt];
            for i in lo..hi {
                simulate(geom, couplings, cfg, i as u64, |k, _, s| sums[k].push(&s));
            }
            sums
        })
        .collect();
    let times = (0..nt).map(|k| k as f64 * cfg.dt).collect();
    let n_atoms = geom.n_sites() - hole_count(cfg.hole_density, geom.n_sites());
    let out = EnsembleMoments::assemble(blocks, times, geom.n_sites(), n_atoms, m);
    if out
        .total
        .iter()
        .any(|s| s.s.iter().flatten().any(|v| !v.is_finite()))
    {
        return Err(Error::numeric("non-finite moments; reduce dt"));
    }
    Ok(out)
}

/// [`run_ensemble`] on a dedicated pool of `threads` workers.
pub fn run_ensemble_with_threads(
    geom: &LatticeGeometry,
    couplings: &SpinCouplings,
    cfg: &EngineConfig,
    m: usize,
    threads: usize,
) -> Result<EnsembleMoments> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::numeric(format!("thread pool: {e}")))?;
    pool.install(|| run_ensemble(geom, couplings, cfg, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal(n_steps: usize) -> EngineConfig {
        EngineConfig {
            dt: 0.02,
            n_steps,
            seed: 11,
            ..EngineConfig::default()
        }
    }

    #[test]
    fn free_spins_keep_their_length() {
        let g = LatticeGeometry::chain(8).unwrap();
        let k = SpinCouplings {
            j: 0.0,
            jz: 0.0,
            ..SpinCouplings::sim(0.0, 0.0, 0.0)
        };
        let tr = run_trajectory(&g, &k, &ideal(30), 0);
        for s in &tr.samples {
            assert!((s.full()[0] - 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let g = LatticeGeometry::cube(4).unwrap();
        let k = SpinCouplings::sim(-0.18, -1.1, 4.0);
        let cfg = EngineConfig {
            hole_density: 0.1,
            hop_rate: 4.0,
            enable_hopping: true,
            enable_double_hop: true,
            enable_spin_flip: true,
            enable_hz_field: true,
            ..ideal(20)
        };
        let a = run_trajectory(&g, &k, &cfg, 5);
        let b = run_trajectory(&g, &k, &cfg, 5);
        let c = run_trajectory(&g, &k, &cfg, 6);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn initial_moments_are_coherent_state() {
        let g = LatticeGeometry::chain(16).unwrap();
        let k = SpinCouplings::sim(-0.18, 0.0, 0.0);
        let m = 3000;
        let e = run_ensemble(&g, &k, &ideal(0), m).unwrap();
        let s = e.summary(0);
        assert_eq!(2.0 * s.mean(Group::Full)[0] / 16.0, 1.0);
        let (vy, vz, _) = s.yz(Group::Full);
        let tol = 4.0 * 4.0 * (2.0 / m as f64).sqrt();
        assert!((vy - 4.0).abs() < tol, "{vy}");
        assert!((vz - 4.0).abs() < tol, "{vz}");
    }

    #[test]
    fn echo_frame_and_pulse_preparation() {
        let g = LatticeGeometry::chain(6).unwrap();
        let k = SpinCouplings::sim(-0.18, 0.0, 0.0);
        let plain = run_trajectory(&g, &k, &ideal(10), 2);
        let echo = run_trajectory(
            &g,
            &k,
            &EngineConfig {
                echo: true,
                ..ideal(10)
            },
            2,
        );
        // The hole-free XXZ model is symmetric under the π_y pulse, so the
        // echoed record in the rotated-back frame matches the plain one.
        for (a, b) in plain.samples.iter().zip(&echo.samples) {
            for c in 0..3 {
                assert!((a.full()[c] - b.full()[c]).abs() < 1e-12);
            }
        }
        let pulsed = run_trajectory(
            &g,
            &k,
            &EngineConfig {
                preparation: Preparation::PulseFromZ,
                ..ideal(0)
            },
            2,
        );
        assert!((pulsed.samples[0].full()[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn block_jackknife_layout() {
        assert_eq!(block_ranges(10).len(), 10);
        let r = block_ranges(1000);
        assert_eq!(r.len(), MAX_BLOCKS);
        assert_eq!(r[0].0, 0);
        assert_eq!(r.last().unwrap().1, 1000);
        assert!(r.windows(2).all(|w| w[0].1 == w[1].0));
    }

    #[test]
    fn explicit_trajectories_match_streamed_ensemble() {
        let g = LatticeGeometry::chain(6).unwrap();
        let k = SpinCouplings::sim(-0.18, 0.0, 0.0);
        let cfg = ideal(5);
        let e = run_ensemble(&g, &k, &cfg, 20).unwrap();
        let trs: Vec<_> = (0..20).map(|i| run_trajectory(&g, &k, &cfg, i)).collect();
        let f = EnsembleMoments::from_trajectories(&trs, e.times.clone(), 6, 6).unwrap();
        assert_eq!(e, f);
    }

    #[test]
    fn rejects_single_trajectory() {
        let g = LatticeGeometry::chain(4).unwrap();
        let k = SpinCouplings::sim(-0.18, 0.0, 0.0);
        assert!(run_ensemble(&g, &k, &ideal(1), 1).is_err());
    }
}
