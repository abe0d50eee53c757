use super::frame::ImageFrame;
use crate::{Error, Result};

/// Four-quadrant region of interest. Quadrants 1 and 3 form subsystem a,
/// 2 and 4 form subsystem b; pixels within `gap/2` of either axis are
/// dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiSpec {
    pub radius: f64,
    pub gap: f64,
    pub center: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

impl RoiSpec {
    /// Default radius 14 px and gap 2 px.
    pub fn centered(height: usize, width: usize) -> Self {
        RoiSpec {
            radius: 14.0,
            gap: 2.0,
            center: (width as f64 / 2.0, height as f64 / 2.0),
        }
    }

    pub fn validate(&self, height: usize, width: usize) -> Result<()> {
        if !(self.radius > self.gap && self.gap >= 0.0) {
            return Err(Error::domain(format!(
                "ROI needs radius > gap >= 0, got radius {} gap {}",
                self.radius, self.gap
            )));
        }
        let (cx, cy) = self.center;
        if cx - self.radius < 0.0
            || cy - self.radius < 0.0
            || cx + self.radius > width as f64
            || cy + self.radius > height as f64
        {
            return Err(Error::domain("ROI extends beyond the frame"));
        }
        Ok(())
    }

    /// Subsystem of pixel `(x, y)`, if it is used at all.
    pub fn side(&self, x: usize, y: usize) -> Option<Side> {
        let dx = x as f64 + 0.5 - self.center.0;
        let dy = y as f64 + 0.5 - self.center.1;
        let g = 0.5 * self.gap;
        if dx * dx + dy * dy > self.radius * self.radius || dx.abs() < g || dy.abs() < g {
            return None;
        }
        if dx == 0.0 || dy == 0.0 {
            return None;
        }
        if (dx > 0.0) == (dy > 0.0) {
            Some(Side::A)
        } else {
            Some(Side::B)
        }
    }

    pub fn sides(&self, height: usize, width: usize) -> Vec<Option<Side>> {
        (0..height * width)
            .map(|i| self.side(i % width, i / width))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrantSignal {
    /// Spin imbalance `S^z` summed over subsystem a.
    pub s_a: f64,
    pub s_b: f64,
    pub pixels_a: usize,
    pub pixels_b: usize,
}

impl QuadrantSignal {
    pub fn diff(&self) -> f64 {
        self.s_a - self.s_b
    }

    /// Atom number from an all-up calibration frame, where `S^z = N/2`.
    pub fn atom_number(&self) -> f64 {
        2.0 * (self.s_a + self.s_b)
    }
}

/// Converts a frame and its background into per-subsystem spin imbalance,
/// inverting `I = B (1 - sin ϑ)` pixel by pixel and dividing by the phase
/// per unit imbalance.
pub fn quadrant_signal(
    frame: &ImageFrame,
    background: &ImageFrame,
    roi: &RoiSpec,
    phase_scale: f64,
) -> Result<QuadrantSignal> {
    roi.validate(frame.height, frame.width)?;
    if phase_scale == 0.0 {
        return Err(Error::domain("zero phase scale cannot be inverted"));
    }
    let mut out = QuadrantSignal {
        s_a: 0.0,
        s_b: 0.0,
        pixels_a: 0,
        pixels_b: 0,
    };
    for y in 0..frame.height {
        for x in 0..frame.width {
            let Some(side) = roi.side(x, y) else { continue };
            let i = y * frame.width + x;
            let s = (1.0 - frame.data[i] / background.data[i]).clamp(-1.0, 1.0);
            let sz = s.asin() / phase_scale;
            match side {
                Side::A => {
                    out.s_a += sz;
                    out.pixels_a += 1;
                }
                Side::B => {
                    out.s_b += sz;
                    out.pixels_b += 1;
                }
            }
        }
    }
    Ok(out)
}
