//! End-to-end synthetic measurement: simulated shots are rendered as camera
//! frames, cleaned with PCA and reduced to quadrant spin signals.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::cloud::{gaussian_blur, phase_scale, CloudModel};
use super::fringe::{expected_counts, render_frame, FringeModel};
use super::frame::ImageFrame;
use super::pca::{disk_mask, pca_fit, MaskedBasis, PcaBasis};
use super::roi::{quadrant_signal, QuadrantSignal, RoiSpec, Side};
use crate::analysis::{jackknife_sums, shot_noise_subtract};
use crate::config::ImagingSpec;
use crate::couplings::SpinCouplings;
use crate::dtwa::{echo_applied, simulate, EngineConfig, SpinConfig};
use crate::lattice::LatticeGeometry;
use crate::rng::auxiliary;
use crate::{Error, Result};

const TAG_FRINGE: u64 = 0;
const TAG_POOL: u64 = 1;
const TAG_CAL: u64 = 2;
const TAG_ATOMS: u64 = 3;
const TAG_EMPTY: u64 = 4;
const TAG_CHECK: u64 = 5;
const TAG_STUDY: u64 = 6;

fn rng_for(seed: u64, kind: u64, i: u64) -> ChaCha8Rng {
    auxiliary(seed, (kind << 40) | i)
}

/// Margin between the ROI edge and the PCA exclusion mask, in pixels.
const MASK_MARGIN: f64 = 4.0;

/// Camera, fringe background and trained PCA basis shared by all shots.
#[derive(Debug, Clone)]
pub struct ImagingSetup {
    pub spec: ImagingSpec,
    pub fringe: FringeModel,
    pub basis: PcaBasis,
    pub masked: MaskedBasis,
    pub mask: Vec<bool>,
    pub roi: RoiSpec,
}

impl ImagingSetup {
    pub fn build(spec: &ImagingSpec, seed: u64) -> Result<Self> {
        let n = spec.size;
        let roi = RoiSpec {
            radius: spec.roi_radius,
            gap: spec.gap,
            center: (n as f64 / 2.0, n as f64 / 2.0),
        };
        roi.validate(n, n)?;
        let fringe = FringeModel::random(
            spec.fringe_modes,
            spec.fringe_amplitude,
            spec.fringe_drift,
            spec.intensity_jitter,
            &mut rng_for(seed, TAG_FRINGE, 0),
        );
        let empty = CloudModel::empty(n, n, spec.detuning, spec.cross_section);
        let pool = (0..spec.pool as u64)
            .into_par_iter()
            .map(|i| {
                render_frame(&empty, &fringe, spec.photons, spec.blur_fwhm, &mut rng_for(seed, TAG_POOL, i))
            })
            .collect::<Result<Vec<_>>>()?;
        let basis = pca_fit(&pool, spec.components)?;
        let mask = disk_mask(n, n, roi.center, roi.radius + MASK_MARGIN);
        let masked = basis.restrict(&mask)?;
        Ok(ImagingSetup {
            spec: spec.clone(),
            fringe,
            basis,
            masked,
            mask,
            roi,
        })
    }

    pub fn phase_scale(&self) -> f64 {
        phase_scale(self.spec.detuning, self.spec.cross_section)
    }

    pub fn empty_cloud(&self) -> CloudModel {
        CloudModel::empty(self.spec.size, self.spec.size, self.spec.detuning, self.spec.cross_section)
    }

    /// Renders, reconstructs and reduces one frame.
    pub fn measure(&self, cloud: &CloudModel, fringe: &FringeModel, rng: &mut ChaCha8Rng) -> Result<QuadrantSignal> {
        let frame = render_frame(cloud, fringe, self.spec.photons, self.spec.blur_fwhm, rng)?;
        let (bg, _) = self.masked.reconstruct(&frame);
        quadrant_signal(&frame, &bg, &self.roi, self.phase_scale())
    }

    /// Exact quadrant sums of a cloud's imbalance as seen through the optics.
    pub fn true_signal(&self, cloud: &CloudModel) -> QuadrantSignal {
        let n = self.spec.size;
        let imbalance: Vec<f64> = cloud.n_b.iter().zip(&cloud.n_c).map(|(b, c)| 0.5 * (b - c)).collect();
        let seen = gaussian_blur(&imbalance, n, n, self.spec.blur_fwhm);
        quadrant_sums(&seen, &self.roi, n)
    }
}

fn quadrant_sums(field: &[f64], roi: &RoiSpec, n: usize) -> QuadrantSignal {
    let mut q = QuadrantSignal {
        s_a: 0.0,
        s_b: 0.0,
        pixels_a: 0,
        pixels_b: 0,
    };
    for (i, side) in roi.sides(n, n).into_iter().enumerate() {
        match side {
            Some(Side::A) => {
                q.s_a += field[i];
                q.pixels_a += 1;
            }
            Some(Side::B) => {
                q.s_b += field[i];
                q.pixels_b += 1;
            }
            None => {}
        }
    }
    q
}

/// Residual statistics of PCA background removal on atom-free frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// rms residual over fit pixels, relative to the mean count.
    pub outside_rel_rms: f64,
    /// rms residual inside the atom mask, relative to the mean count.
    pub inside_rel_rms: f64,
    /// `1/sqrt(photons)`.
    pub shot_noise_floor: f64,
}

/// Reconstructs `frames` fresh atom-free frames drawn from `fringe`.
pub fn residual_check(setup: &ImagingSetup, fringe: &FringeModel, frames: usize, seed: u64) -> Result<ResidualReport> {
    let empty = setup.empty_cloud();
    let outside: Vec<bool> = setup.mask.iter().map(|m| !m).collect();
    let stats = (0..frames as u64)
        .into_par_iter()
        .map(|i| {
            let f = render_frame(&empty, fringe, setup.spec.photons, setup.spec.blur_fwhm, &mut rng_for(seed, TAG_CHECK, i))?;
            let (_, res) = setup.masked.reconstruct(&f);
            let mean = f.mean();
            let (_, ro) = res.masked_stats(&outside);
            let (_, ri) = res.masked_stats(&setup.mask);
            Ok((ro / mean, ri / mean))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = stats.len() as f64;
    Ok(ResidualReport {
        outside_rel_rms: (stats.iter().map(|s| s.0 * s.0).sum::<f64>() / k).sqrt(),
        inside_rel_rms: (stats.iter().map(|s| s.1 * s.1).sum::<f64>() / k).sqrt(),
        shot_noise_floor: 1.0 / setup.spec.photons.sqrt(),
    })
}

/// Maps lattice columns (summed along z) onto a block of pixels centred in
/// the frame, `site_pixels` pixels per site.
#[derive(Debug, Clone)]
pub struct ColumnLayout {
    pub lx: usize,
    pub ly: usize,
    pub site_pixels: usize,
    pub origin: (usize, usize),
    pub size: usize,
}

impl ColumnLayout {
    pub fn new(geom: &LatticeGeometry, spec: &ImagingSpec) -> Result<Self> {
        let [lx, ly, _] = geom.dims();
        let s = spec.site_pixels.max(1);
        if lx * s > spec.size || ly * s > spec.size {
            return Err(Error::domain("lattice does not fit on the camera"));
        }
        Ok(ColumnLayout {
            lx,
            ly,
            site_pixels: s,
            origin: ((spec.size - lx * s) / 2, (spec.size - ly * s) / 2),
            size: spec.size,
        })
    }

    /// Deposits per-column `(atoms, S^z)` onto a cloud.
    pub fn cloud(&self, columns: &[(f64, f64)], detuning: f64, cross_section: f64) -> CloudModel {
        let mut c = CloudModel::empty(self.size, self.size, detuning, cross_section);
        let area = (self.site_pixels * self.site_pixels) as f64;
        for cy in 0..self.ly {
            for cx in 0..self.lx {
                let (n, sz) = columns[cy * self.lx + cx];
                for py in 0..self.site_pixels {
                    for px in 0..self.site_pixels {
                        let x = self.origin.0 + cx * self.site_pixels + px;
                        let y = self.origin.1 + cy * self.site_pixels + py;
                        let i = y * self.size + x;
                        c.n_b[i] = (0.5 * n + sz) / area;
                        c.n_c[i] = (0.5 * n - sz) / area;
                    }
                }
            }
        }
        c
    }
}

/// Per-column atom count and `S^θ` after the readout rotation.
pub fn column_signal(geom: &LatticeGeometry, config: &SpinConfig, theta: f64, flipped: bool) -> Vec<(f64, f64)> {
    let [lx, ly, _] = geom.dims();
    let mut cols = vec![(0.0, 0.0); lx * ly];
    let (sn, cs) = theta.sin_cos();
    for (site, s) in config.spins.iter().enumerate() {
        if config.hole_mask[site] {
            continue;
        }
        let c = geom.coords(site);
        let z = if flipped { -s[2] } else { s[2] };
        let entry = &mut cols[c[1] * lx + c[0]];
        entry.0 += 1.0;
        entry.1 += cs * z + sn * s[1];
    }
    cols
}

/// One synthetic shot: true and measured subsystem signals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotRow {
    pub index: u64,
    pub truth: QuadrantSignal,
    pub atoms: QuadrantSignal,
    pub empty: QuadrantSignal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndToEndReport {
    pub shots: usize,
    pub n_true: f64,
    pub n_est: f64,
    /// `4 Var[S_a - S_b] / N` of the injected signal.
    pub injected: f64,
    pub injected_err: f64,
    /// Shot-noise-subtracted normalized variance from the frames.
    pub recovered: f64,
    pub recovered_err: f64,
    /// Jackknife σ of `recovered - injected` over paired shots.
    pub diff_err: f64,
    /// Photon-noise contribution in units of the SQL.
    pub photon_noise: f64,
}

const CAL_SHOTS: u64 = 16;

/// Runs `spec.shots` trajectories, images each one (an atom frame and an
/// atom-free frame) and recovers the normalized subsystem-difference
/// variance.
pub fn run_end_to_end(
    geom: &LatticeGeometry,
    couplings: &SpinCouplings,
    cfg: &EngineConfig,
    setup: &ImagingSetup,
) -> Result<(EndToEndReport, Vec<ShotRow>)> {
    let spec = &setup.spec;
    if spec.shots < 3 {
        return Err(Error::domain("need at least 3 shots"));
    }
    let layout = ColumnLayout::new(geom, spec)?;
    let flipped = echo_applied(cfg, cfg.n_steps);
    let seed = cfg.seed;

    // All-up calibration of the atom number.
    let full: Vec<(f64, f64)> = {
        let [lx, ly, lz] = geom.dims();
        vec![(lz as f64, 0.5 * lz as f64); lx * ly]
    };
    let cal_cloud = layout.cloud(&full, spec.detuning, spec.cross_section);
    let n_true = setup.true_signal(&cal_cloud).atom_number();
    let cal: Vec<f64> = (0..CAL_SHOTS)
        .into_par_iter()
        .map(|i| Ok(setup.measure(&cal_cloud, &setup.fringe, &mut rng_for(seed, TAG_CAL, i))?.atom_number()))
        .collect::<Result<Vec<_>>>()?;
    let n_est = cal.iter().sum::<f64>() / cal.len() as f64;

    let empty = setup.empty_cloud();
    let rows = (0..spec.shots as u64)
        .into_par_iter()
        .map(|i| {
            let final_state = simulate(geom, couplings, cfg, i, |_, _, _| {});
            let cols = column_signal(geom, &final_state, spec.theta, flipped);
            let cloud = layout.cloud(&cols, spec.detuning, spec.cross_section);
            Ok(ShotRow {
                index: i,
                truth: setup.true_signal(&cloud),
                atoms: setup.measure(&cloud, &setup.fringe, &mut rng_for(seed, TAG_ATOMS, i))?,
                empty: setup.measure(&empty, &setup.fringe, &mut rng_for(seed, TAG_EMPTY, i))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let feats: Vec<[f64; 6]> = rows
        .iter()
        .map(|r| {
            let (d, e, t) = (r.atoms.diff(), r.empty.diff(), r.truth.diff());
            [d, d * d, e, e * e, t, t * t]
        })
        .collect();
    let var = |s: f64, s2: f64, m: f64| (s2 - s * s / m) / (m - 1.0);
    let recovered_of = |s: &[f64; 6], m: f64| {
        shot_noise_subtract(var(s[0], s[1], m), var(s[2], s[3], m), n_est)
            .map(|v| v.value)
            .unwrap_or(f64::NAN)
    };
    let injected_of = |s: &[f64; 6], m: f64| 4.0 * var(s[4], s[5], m) / n_true;
    let rec = jackknife_sums(&feats, recovered_of)?;
    let inj = jackknife_sums(&feats, injected_of)?;
    let dif = jackknife_sums(&feats, |s, m| recovered_of(s, m) - injected_of(s, m))?;
    let photon = jackknife_sums(&feats, |s, m| 4.0 * var(s[2], s[3], m) / n_est)?;
    Ok((
        EndToEndReport {
            shots: rows.len(),
            n_true,
            n_est,
            injected: inj.estimate,
            injected_err: inj.std_error,
            recovered: rec.estimate,
            recovered_err: rec.std_error,
            diff_err: dif.std_error,
            photon_noise: photon.estimate,
        },
        rows,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapPoint {
    pub gap: f64,
    /// `4 Var[S_a - S_b] / N` with `N` calibrated at the same gap.
    pub normalized_variance: f64,
    pub err: f64,
}

/// Projection-noise cloud imaged through a finite resolution, analysed at
/// several quadrant gaps. Frames are noiseless so only the optics matter;
/// every gap sees the same shots.
pub fn gap_study(spec: &ImagingSpec, gaps: &[f64], shots: usize, n_atoms: f64, seed: u64) -> Result<Vec<GapPoint>> {
    let n = spec.size;
    let center = (n as f64 / 2.0, n as f64 / 2.0);
    let cloud = CloudModel::gaussian(n, n, center, 17.0, n_atoms, spec.detuning, spec.cross_section);
    let density = cloud.total_density();
    let flat = vec![1.0; n * n];
    let background = ImageFrame {
        data: vec![spec.photons; n * n],
        ..ImageFrame::zeros(n, n)
    };
    let k = cloud.phase_scale();
    let rois: Vec<RoiSpec> = gaps
        .iter()
        .map(|&g| {
            let r = RoiSpec {
                radius: spec.roi_radius,
                gap: g,
                center,
            };
            r.validate(n, n).map(|_| r)
        })
        .collect::<Result<_>>()?;
    let read = |c: &CloudModel, roi: &RoiSpec| -> Result<QuadrantSignal> {
        let frame = ImageFrame {
            data: expected_counts(c, &flat, spec.photons, spec.blur_fwhm),
            ..background.clone()
        };
        quadrant_signal(&frame, &background, roi, k)
    };
    let mut up = cloud.clone();
    for (b, (c, d)) in up.n_b.iter_mut().zip(up.n_c.iter_mut().zip(&density)) {
        *b = *d;
        *c = 0.0;
    }
    let n_cal: Vec<f64> = rois.iter().map(|r| read(&up, r).map(|q| q.atom_number())).collect::<Result<_>>()?;

    let diffs: Vec<Vec<f64>> = (0..shots as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, TAG_STUDY, i);
            let unit = Normal::new(0.0, 1.0).unwrap();
            let mut c = cloud.clone();
            for (p, &d) in density.iter().enumerate() {
                let sz = 0.5 * d.sqrt() * unit.sample(&mut rng);
                c.n_b[p] = 0.5 * d + sz;
                c.n_c[p] = 0.5 * d - sz;
            }
            rois.iter().map(|r| read(&c, r).map(|q| q.diff())).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    rois.iter()
        .enumerate()
        .map(|(g, roi)| {
            let feats: Vec<[f64; 2]> = diffs.iter().map(|d| [d[g], d[g] * d[g]]).collect();
            let nc = n_cal[g];
            let jk = jackknife_sums(&feats, |s, m| 4.0 * (s[1] - s[0] * s[0] / m) / (m - 1.0) / nc)?;
            Ok(GapPoint {
                gap: roi.gap,
                normalized_variance: jk.estimate,
                err: jk.std_error,
            })
        })
        .collect()
}
