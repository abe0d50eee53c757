//! Exact evolution of the hole-free XXZ model on small lattices.
//!
//! Basis states are bit strings with bit `i` set when site `i` is up.
//! The Hamiltonian is real symmetric in this basis,
//! `H = Σ_bonds J/2 (S+S- + S-S+) + Jz SzSz`, and is applied
//! matrix-free. Evolution uses a short-iterative Lanczos propagator with
//! adaptive step size; lattices of up to 8 sites can also use a dense
//! eigendecomposition.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::analysis::{squeezing_parameter, SqueezingCurve, SqueezingPoint, ThetaMode, YzCovariance};
use crate::couplings::SpinCouplings;
use crate::error::{Error, Result};
use crate::lattice::LatticeGeometry;

pub const MAX_SITES: usize = 14;
pub const DENSE_MAX_SITES: usize = 8;

const KRYLOV_DIM: usize = 30;
const KRYLOV_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub amplitudes: Vec<Complex64>,
    pub n: usize,
}

impl QuantumState {
    /// `[(|↑⟩ + |↓⟩)/√2]^{⊗N}`.
    pub fn x_polarized(n: usize) -> Result<Self> {
        check_size(n)?;
        let dim = 1usize << n;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(QuantumState {
            amplitudes: vec![a; dim],
            n,
        })
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SITES {
        return Err(Error::domain(format!(
            "exact evolution supports 1..={MAX_SITES} sites, got {n}"
        )));
    }
    Ok(())
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Matrix-free XXZ Hamiltonian.
#[derive(Debug, Clone)]
pub struct XxzHamiltonian {
    n: usize,
    flip_masks: Vec<usize>,
    half_j: f64,
    diag: Vec<f64>,
}

impl XxzHamiltonian {
    pub fn new(geom: &LatticeGeometry, couplings: &SpinCouplings) -> Result<Self> {
        let n = geom.n_sites();
        check_size(n)?;
        let bonds = geom.bonds();
        let dim = 1usize << n;
        let diag = (0..dim)
            .map(|b| {
                bonds
                    .iter()
                    .map(|&(i, j)| {
                        let same = ((b >> i) & 1) == ((b >> j) & 1);
                        couplings.jz * if same { 0.25 } else { -0.25 }
                    })
                    .sum()
            })
            .collect();
        Ok(XxzHamiltonian {
            n,
            flip_masks: bonds.iter().map(|&(i, j)| (1 << i) | (1 << j)).collect(),
            half_j: 0.5 * couplings.j,
            diag,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (b, o) in out.iter_mut().enumerate() {
            let mut acc = v[b] * self.diag[b];
            for &m in &self.flip_masks {
                let bits = b & m;
                // exchange only connects antiparallel pairs
                if bits != 0 && bits != m {
                    acc += v[b ^ m] * self.half_j;
                }
            }
            *o = acc;
        }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut h = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            h[(b, b)] = self.diag[b];
            for &m in &self.flip_masks {
                let bits = b & m;
                if bits != 0 && bits != m {
                    h[(b ^ m, b)] += self.half_j;
                }
            }
        }
        h
    }
}

/// Lanczos propagation of `v` by `e^{-iHt}`.
pub fn evolve_krylov(h: &XxzHamiltonian, v: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    let mut psi = v.to_vec();
    let mut done = 0.0;
    let mut tau = t;
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(KRYLOV_DIM + 1);
    let mut w = vec![Complex64::new(0.0, 0.0); psi.len()];
    while done < t {
        tau = tau.min(t - done);
        let beta0 = norm(&psi);
        if beta0 == 0.0 {
            return Ok(psi);
        }
        basis.clear();
        basis.push(psi.iter().map(|a| a / beta0).collect());
        let mut alpha = Vec::with_capacity(KRYLOV_DIM);
        let mut beta = Vec::with_capacity(KRYLOV_DIM);
        let mut breakdown = false;
        for j in 0..KRYLOV_DIM.min(h.dim()) {
            h.apply(&basis[j], &mut w);
            let a = inner(&basis[j], &w).re;
            alpha.push(a);
            // full reorthogonalization
            for q in &basis {
                let c = inner(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
            let b = norm(&w);
            beta.push(b);
            if b < 1e-12 {
                breakdown = true;
                break;
            }
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let m = alpha.len();
        let mut tri = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            tri[(i, i)] = alpha[i];
            if i + 1 < m {
                tri[(i, i + 1)] = beta[i];
                tri[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(tri);
        let coeffs = |tau: f64| -> Vec<Complex64> {
            (0..m)
                .map(|r| {
                    (0..m)
                        .map(|k| {
                            let q = eig.eigenvectors[(r, k)] * eig.eigenvectors[(0, k)];
                            Complex64::from_polar(q, -eig.eigenvalues[k] * tau)
                        })
                        .sum()
                })
                .collect()
        };
        let mut c = coeffs(tau);
        if !breakdown {
            let mut err = beta0 * beta[m - 1] * c[m - 1].norm();
            let mut tries = 0;
            while err > KRYLOV_TOL {
                tau *= 0.5;
                tries += 1;
                if tries > 60 {
                    return Err(Error::numeric("Krylov step size underflow"));
                }
                c = coeffs(tau);
                err = beta0 * beta[m - 1] * c[m - 1].norm();
            }
        }
        for a in psi.iter_mut() {
            *a = Complex64::new(0.0, 0.0);
        }
        for (ck, q) in c.iter().zip(&basis) {
            let s = ck * beta0;
            for (p, qi) in psi.iter_mut().zip(q) {
                *p += s * qi;
            }
        }
        done += tau;
        // allow the step to grow again
        tau *= 2.0;
    }
    Ok(psi)
}

/// Exact propagator for the hole-free model: dense eigendecomposition up to
/// [`DENSE_MAX_SITES`] sites, Lanczos above.
#[derive(Debug, Clone)]
pub struct ExactEvolver {
    h: XxzHamiltonian,
    dense: Option<SymmetricEigen<f64, nalgebra::Dyn>>,
}

impl ExactEvolver {
    pub fn new(geom: &LatticeGeometry, couplings: &SpinCouplings) -> Result<Self> {
        let h = XxzHamiltonian::new(geom, couplings)?;
        let dense = (h.n_sites() <= DENSE_MAX_SITES).then(|| SymmetricEigen::new(h.dense()));
        Ok(ExactEvolver { h, dense })
    }

    /// Forces the Lanczos path regardless of size.
    pub fn krylov_only(geom: &LatticeGeometry, couplings: &SpinCouplings) -> Result<Self> {
        Ok(ExactEvolver {
            h: XxzHamiltonian::new(geom, couplings)?,
            dense: None,
        })
    }

    pub fn hamiltonian(&self) -> &XxzHamiltonian {
        &self.h
    }

    pub fn evolve(&self, state: &QuantumState, t: f64) -> Result<QuantumState> {
        if state.n != self.h.n_sites() {
            return Err(Error::domain("state and Hamiltonian sizes differ"));
        }
        if t == 0.0 {
            return Ok(state.clone());
        }
        let amplitudes = match &self.dense {
            Some(eig) => evolve_dense(eig, &state.amplitudes, t),
            None => evolve_krylov(&self.h, &state.amplitudes, t)?,
        };
        Ok(QuantumState {
            amplitudes,
            n: state.n,
        })
    }
}

fn evolve_dense(eig: &SymmetricEigen<f64, nalgebra::Dyn>, v: &[Complex64], t: f64) -> Vec<Complex64> {
    let q = &eig.eigenvectors;
    let dim = v.len();
    let proj: Vec<Complex64> = (0..dim)
        .map(|k| {
            let c: Complex64 = (0..dim).map(|b| v[b] * q[(b, k)]).sum();
            c * Complex64::from_polar(1.0, -eig.eigenvalues[k] * t)
        })
        .collect();
    (0..dim)
        .map(|b| (0..dim).map(|k| proj[k] * q[(b, k)]).sum())
        .collect()
}

/// Dense-matrix propagation regardless of the evolver's default path
/// (cross-check helper for at most [`DENSE_MAX_SITES`] sites).
pub fn evolve_dense_reference(
    geom: &LatticeGeometry,
    couplings: &SpinCouplings,
    state: &QuantumState,
    t: f64,
) -> Result<QuantumState> {
    let h = XxzHamiltonian::new(geom, couplings)?;
    if h.n_sites() > DENSE_MAX_SITES {
        return Err(Error::domain("dense reference limited to 8 sites"));
    }
    let eig = SymmetricEigen::new(h.dense());
    Ok(QuantumState {
        amplitudes: evolve_dense(&eig, &state.amplitudes, t),
        n: state.n,
    })
}

pub fn evolve_exact(
    state: &QuantumState,
    geom: &LatticeGeometry,
    couplings: &SpinCouplings,
    t: f64,
) -> Result<QuantumState> {
    ExactEvolver::new(geom, couplings)?.evolve(state, t)
}

/// Collective operators applied to a state.
pub fn apply_sx(state: &QuantumState) -> Vec<Complex64> {
    let a = &state.amplitudes;
    (0..a.len())
        .map(|b| {
            (0..state.n)
                .map(|i| a[b ^ (1 << i)])
                .sum::<Complex64>()
                * 0.5
        })
        .collect()
}

pub fn apply_sy(state: &QuantumState) -> Vec<Complex64> {
    let a = &state.amplitudes;
    let half_i = Complex64::new(0.0, 0.5);
    (0..a.len())
        .map(|b| {
            (0..state.n)
                .map(|i| {
                    // target down came from up (+i/2), target up from down (-i/2)
                    let src = a[b ^ (1 << i)];
                    if (b >> i) & 1 == 0 {
                        src * half_i
                    } else {
                        -src * half_i
                    }
                })
                .sum()
        })
        .collect()
}

pub fn apply_sz(state: &QuantumState) -> Vec<Complex64> {
    let n = state.n as f64;
    state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(b, a)| a * (b.count_ones() as f64 - 0.5 * n))
        .collect()
}

/// `(⟨Sx⟩, ⟨S^θ⟩, ⟨(S^θ)²⟩)` with `S^θ = cosθ Sz + sinθ Sy`.
pub fn collective_moments(state: &QuantumState, theta: f64) -> (f64, f64, f64) {
    let sx = inner(&state.amplitudes, &apply_sx(state)).re;
    let sy = apply_sy(state);
    let sz = apply_sz(state);
    let (s, c) = theta.sin_cos();
    let st: Vec<Complex64> = sz.iter().zip(&sy).map(|(z, y)| z * c + y * s).collect();
    let mean = inner(&state.amplitudes, &st).re;
    let sq = inner(&st, &st).re;
    (sx, mean, sq)
}

/// Exact first moments and symmetrized `(Sy, Sz)` covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactMoments {
    pub mean: [f64; 3],
    pub cov: YzCovariance,
}

pub fn exact_moments(state: &QuantumState) -> ExactMoments {
    let psi = &state.amplitudes;
    let sx = apply_sx(state);
    let sy = apply_sy(state);
    let sz = apply_sz(state);
    let mx = inner(psi, &sx).re;
    let my = inner(psi, &sy).re;
    let mz = inner(psi, &sz).re;
    let yy = inner(&sy, &sy).re - my * my;
    let zz = inner(&sz, &sz).re - mz * mz;
    // symmetrized: Re⟨Sy Sz⟩ since both are Hermitian
    let yz = inner(&sy, &sz).re - my * mz;
    ExactMoments {
        mean: [mx, my, mz],
        cov: YzCovariance { yy, zz, yz },
    }
}

/// Exact squeezing curve over `times` (ascending).
pub fn oracle_curves(
    geom: &LatticeGeometry,
    couplings: &SpinCouplings,
    times: &[f64],
    theta: &ThetaMode,
) -> Result<SqueezingCurve> {
    let evolver = ExactEvolver::new(geom, couplings)?;
    let n = geom.n_sites();
    let mut state = QuantumState::x_polarized(n)?;
    let mut now = 0.0;
    let mut points = Vec::with_capacity(times.len());
    for &t in times {
        if t < now {
            return Err(Error::domain("oracle time grid must be ascending"));
        }
        state = evolver.evolve(&state, t - now)?;
        now = t;
        let m = exact_moments(&state);
        let scan = theta.scan(&m.cov);
        let nf = n as f64;
        let sq = squeezing_parameter(scan.var_min, m.mean[0], nf);
        points.push(SqueezingPoint {
            t,
            spin_length: 2.0 * m.mean[0] / nf,
            spin_length_err: 0.0,
            var_min: 4.0 * scan.var_min / nf,
            var_max: 4.0 * scan.var_max / nf,
            theta_min: scan.theta_min,
            xi2: sq.xi2(),
            xi2_err: 0.0,
            var_min_err: 0.0,
        });
    }
    Ok(SqueezingCurve { points })
}
