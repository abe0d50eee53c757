use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::cloud::{gaussian_blur, CloudModel};
use super::frame::ImageFrame;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeMode {
    pub kx: f64,
    pub ky: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// Drifting interference background: a sum of sinusoids whose phases
/// wander from shot to shot, times a global intensity factor.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeModel {
    pub modes: Vec<FringeMode>,
    /// rms per-shot phase drift of every mode (rad).
    pub drift: f64,
    /// rms relative fluctuation of the overall intensity.
    pub intensity_jitter: f64,
}

impl FringeModel {
    pub fn none() -> Self {
        FringeModel {
            modes: Vec::new(),
            drift: 0.0,
            intensity_jitter: 0.0,
        }
    }

    /// `n_modes` modes with random orientation, wavelengths between 6 and
    /// 40 pixels and amplitudes uniform in `[0.5, 1] * amplitude`.
    pub fn random<R: Rng + ?Sized>(
        n_modes: usize,
        amplitude: f64,
        drift: f64,
        intensity_jitter: f64,
        rng: &mut R,
    ) -> Self {
        let modes = (0..n_modes)
            .map(|_| {
                let angle = rng.random_range(0.0..PI);
                let k = 2.0 * PI / rng.random_range(6.0..40.0);
                FringeMode {
                    kx: k * angle.cos(),
                    ky: k * angle.sin(),
                    amplitude: amplitude * rng.random_range(0.5..1.0),
                    phase: rng.random_range(0.0..2.0 * PI),
                }
            })
            .collect();
        FringeModel {
            modes,
            drift,
            intensity_jitter,
        }
    }

    pub fn with_mode(mut self, mode: FringeMode) -> Self {
        self.modes.push(mode);
        self
    }

    /// One shot of the multiplicative fringe field.
    pub fn sample<R: Rng + ?Sized>(&self, height: usize, width: usize, rng: &mut R) -> Vec<f64> {
        let gain = if self.intensity_jitter > 0.0 {
            1.0 + Normal::new(0.0, self.intensity_jitter).unwrap().sample(rng)
        } else {
            1.0
        };
        let phases: Vec<f64> = self
            .modes
            .iter()
            .map(|m| {
                if self.drift > 0.0 {
                    m.phase + Normal::new(0.0, self.drift).unwrap().sample(rng)
                } else {
                    m.phase
                }
            })
            .collect();
        (0..height * width)
            .map(|i| {
                let (x, y) = ((i % width) as f64, (i / width) as f64);
                let f: f64 = self
                    .modes
                    .iter()
                    .zip(&phases)
                    .map(|(m, p)| m.amplitude * (m.kx * x + m.ky * y + p).sin())
                    .sum();
                gain * (1.0 + f)
            })
            .collect()
    }
}

/// Expected counts: `base (1 - sin ϑ)/2` times the fringe field, with
/// `base = 2 * photons` so an empty, fringe-free pixel receives `photons`.
/// The phase map is blurred by the optical resolution first.
pub fn expected_counts(
    cloud: &CloudModel,
    fringe: &[f64],
    photons: f64,
    blur_fwhm: f64,
) -> Vec<f64> {
    let phase = gaussian_blur(&cloud.phase_map(), cloud.height, cloud.width, blur_fwhm);
    let base = 2.0 * photons;
    phase
        .iter()
        .zip(fringe)
        .map(|(p, f)| base * 0.5 * (1.0 - p.sin()) * f)
        .collect()
}

/// Renders one Poisson-sampled camera frame.
pub fn render_frame<R: Rng + ?Sized>(
    cloud: &CloudModel,
    fringe: &FringeModel,
    photons: f64,
    blur_fwhm: f64,
    rng: &mut R,
) -> Result<ImageFrame> {
    if !(photons > 0.0) {
        return Err(Error::domain("photons per pixel must be positive"));
    }
    let field = fringe.sample(cloud.height, cloud.width, rng);
    let mean = expected_counts(cloud, &field, photons, blur_fwhm);
    let data = mean
        .iter()
        .map(|&m| {
            if m > 0.0 {
                Poisson::new(m).unwrap().sample(rng)
            } else {
                0.0
            }
        })
        .collect();
    Ok(ImageFrame {
        height: cloud.height,
        width: cloud.width,
        data,
        photons,
        ..ImageFrame::zeros(0, 0)
    })
}
