/// Column densities of the two spin states on the camera grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudModel {
    pub height: usize,
    pub width: usize,
    /// Spin-up (`b` state) atoms per pixel.
    pub n_b: Vec<f64>,
    /// Spin-down (`c` state) atoms per pixel.
    pub n_c: Vec<f64>,
    /// Detuning in half-linewidths.
    pub detuning: f64,
    /// Resonant cross-section in pixel-area units.
    pub cross_section: f64,
}

impl CloudModel {
    pub fn empty(height: usize, width: usize, detuning: f64, cross_section: f64) -> Self {
        CloudModel {
            height,
            width,
            n_b: vec![0.0; height * width],
            n_c: vec![0.0; height * width],
            detuning,
            cross_section,
        }
    }

    /// Gaussian cloud with `n_atoms` split evenly between the states;
    /// `radius` is the 1/e² radius in pixels.
    pub fn gaussian(
        height: usize,
        width: usize,
        center: (f64, f64),
        radius: f64,
        n_atoms: f64,
        detuning: f64,
        cross_section: f64,
    ) -> Self {
        let mut c = CloudModel::empty(height, width, detuning, cross_section);
        let mut total = 0.0;
        let density: Vec<f64> = (0..height * width)
            .map(|i| {
                let (x, y) = ((i % width) as f64 + 0.5, (i / width) as f64 + 0.5);
                let r2 = (x - center.0).powi(2) + (y - center.1).powi(2);
                let d = (-2.0 * r2 / (radius * radius)).exp();
                total += d;
                d
            })
            .collect();
        for (i, d) in density.iter().enumerate() {
            c.n_b[i] = 0.5 * n_atoms * d / total;
            c.n_c[i] = c.n_b[i];
        }
        c
    }

    pub fn total_density(&self) -> Vec<f64> {
        self.n_b.iter().zip(&self.n_c).map(|(b, c)| b + c).collect()
    }

    /// Phase per unit of per-pixel spin imbalance `(n_b - n_c)/2`.
    pub fn phase_scale(&self) -> f64 {
        phase_scale(self.detuning, self.cross_section)
    }

    /// Per-pixel imprinted phase.
    pub fn phase_map(&self) -> Vec<f64> {
        let k = self.phase_scale();
        self.n_b
            .iter()
            .zip(&self.n_c)
            .map(|(b, c)| 0.5 * (b - c) * k)
            .collect()
    }
}

/// `(σ₀/2) δ / (1 + δ²)`.
pub fn phase_scale(detuning: f64, cross_section: f64) -> f64 {
    if detuning.is_infinite() {
        return 0.0;
    }
    0.5 * cross_section * detuning / (1.0 + detuning * detuning)
}

/// Separable Gaussian blur with the given FWHM (pixels), zero outside the
/// frame. A non-positive width returns the input.
pub fn gaussian_blur(field: &[f64], height: usize, width: usize, fwhm: f64) -> Vec<f64> {
    if fwhm <= 0.0 {
        return field.to_vec();
    }
    let sigma = fwhm / (8.0 * 2f64.ln()).sqrt();
    let half = (4.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-half..=half)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= norm);

    let mut tmp = vec![0.0; field.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (j, k) in kernel.iter().enumerate() {
                let xs = x as isize + j as isize - half;
                if xs >= 0 && (xs as usize) < width {
                    acc += k * field[y * width + xs as usize];
                }
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; field.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (j, k) in kernel.iter().enumerate() {
                let ys = y as isize + j as isize - half;
                if ys >= 0 && (ys as usize) < height {
                    acc += k * tmp[ys as usize * width + x];
                }
            }
            out[y * width + x] = acc;
        }
    }
    out
}
