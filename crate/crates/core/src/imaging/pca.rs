use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::frame::ImageFrame;
use crate::{Error, Result};

/// Principal components of a pool of atom-free frames.
#[derive(Debug, Clone)]
pub struct PcaBasis {
    pub height: usize,
    pub width: usize,
    pub mean: Vec<f64>,
    /// Unit-norm component images, strongest first.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

impl PcaBasis {
    /// Components with non-negligible weight.
    pub fn effective_rank(&self, rel_tol: f64) -> usize {
        let top = self.eigenvalues.first().copied().unwrap_or(0.0);
        self.eigenvalues.iter().filter(|&&l| l > rel_tol * top && l > 0.0).count()
    }
}

/// Centered PCA of `pool` keeping up to `k` components. Components with a
/// vanishing eigenvalue are dropped, so identical frames give an empty
/// component set and the mean alone.
pub fn pca_fit(pool: &[ImageFrame], k: usize) -> Result<PcaBasis> {
    if pool.len() < k || pool.is_empty() {
        return Err(Error::domain(format!(
            "PCA pool of {} frames is smaller than {} components",
            pool.len(),
            k
        )));
    }
    let (h, w) = (pool[0].height, pool[0].width);
    if pool.iter().any(|f| f.height != h || f.width != w) {
        return Err(Error::domain("PCA pool frames differ in size"));
    }
    let p = h * w;
    let m = pool.len();
    let mut mean = vec![0.0; p];
    for f in pool {
        for (a, v) in mean.iter_mut().zip(&f.data) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|a| *a /= m as f64);
    let centered: Vec<Vec<f64>> = pool
        .iter()
        .map(|f| f.data.iter().zip(&mean).map(|(v, a)| v - a).collect())
        .collect();

    // Snapshot method: eigenvectors of the m x m Gram matrix.
    let mut gram = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let g: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let top = eig.eigenvalues[order[0]].max(0.0);

    let mut components = Vec::new();
    let mut eigenvalues = Vec::new();
    for &idx in order.iter().take(k) {
        let lambda = eig.eigenvalues[idx];
        if !(lambda > 1e-10 * top) || top == 0.0 {
            break;
        }
        let v = eig.eigenvectors.column(idx);
        let mut comp = vec![0.0; p];
        for (i, c) in centered.iter().enumerate() {
            let vi = v[i];
            for (o, x) in comp.iter_mut().zip(c) {
                *o += vi * x;
            }
        }
        let norm = comp.iter().map(|x| x * x).sum::<f64>().sqrt();
        comp.iter_mut().for_each(|x| *x /= norm);
        components.push(comp);
        eigenvalues.push(lambda / (m as f64 - 1.0).max(1.0));
    }
    Ok(PcaBasis {
        height: h,
        width: w,
        mean,
        components,
        eigenvalues,
    })
}

/// A basis restricted to the fit pixels (outside the atom mask), ready for
/// repeated least-squares reconstruction.
#[derive(Debug, Clone)]
pub struct MaskedBasis {
    pub height: usize,
    pub width: usize,
    fit_pixels: Vec<usize>,
    /// Orthonormal over the fit pixels, one row per retained direction.
    fit_basis: DMatrix<f64>,
    /// Maps fit-basis coefficients to full-frame background.
    lift: DMatrix<f64>,
}

impl PcaBasis {
    /// Prepares masked reconstruction; `atom_mask[i] == true` marks pixels
    /// that must not influence the fit.
    pub fn restrict(&self, atom_mask: &[bool]) -> Result<MaskedBasis> {
        let p = self.height * self.width;
        if atom_mask.len() != p {
            return Err(Error::domain("mask size does not match the basis"));
        }
        let fit_pixels: Vec<usize> = (0..p).filter(|&i| !atom_mask[i]).collect();
        let ncols = self.components.len() + 1;
        if fit_pixels.len() < ncols {
            return Err(Error::domain("too few unmasked pixels for the basis size"));
        }
        let column = |c: usize, i: usize| {
            if c == 0 {
                self.mean[i]
            } else {
                self.components[c - 1][i]
            }
        };
        let full = DMatrix::from_fn(p, ncols, |i, c| column(c, i));
        let restricted = DMatrix::from_fn(fit_pixels.len(), ncols, |r, c| column(c, fit_pixels[r]));
        let svd = restricted.svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > 1e-10 * smax)
            .collect();
        let r = keep.len();
        let fit_basis = DMatrix::from_fn(r, fit_pixels.len(), |k, i| u[(i, keep[k])]);
        // lift = B V Σ⁻¹ restricted to the kept directions
        let vs = DMatrix::from_fn(ncols, r, |c, k| vt[(keep[k], c)] / svd.singular_values[keep[k]]);
        let lift = full * vs;
        Ok(MaskedBasis {
            height: self.height,
            width: self.width,
            fit_pixels,
            fit_basis,
            lift,
        })
    }
}

impl MaskedBasis {
    pub fn rank(&self) -> usize {
        self.fit_basis.nrows()
    }

    /// Fit-region inner products of the retained directions (identity up to
    /// rounding).
    pub fn fit_gram(&self) -> DMatrix<f64> {
        &self.fit_basis * self.fit_basis.transpose()
    }

    /// Least-squares background over the fit pixels; returns
    /// `(background, residual = frame - background)`.
    pub fn reconstruct(&self, frame: &ImageFrame) -> (ImageFrame, ImageFrame) {
        let y = DVector::from_iterator(
            self.fit_pixels.len(),
            self.fit_pixels.iter().map(|&i| frame.data[i]),
        );
        let z = &self.fit_basis * y;
        let bg = &self.lift * z;
        let background = ImageFrame {
            data: bg.iter().copied().collect(),
            ..frame.clone()
        };
        let residual = ImageFrame {
            data: frame.data.iter().zip(bg.iter()).map(|(a, b)| a - b).collect(),
            ..frame.clone()
        };
        (background, residual)
    }
}

/// One-shot masked reconstruction.
pub fn pca_reconstruct(
    frame: &ImageFrame,
    basis: &PcaBasis,
    atom_mask: &[bool],
) -> Result<(ImageFrame, ImageFrame)> {
    Ok(basis.restrict(atom_mask)?.reconstruct(frame))
}

/// Pixels within `radius` of `center` (pixel-centre coordinates).
pub fn disk_mask(height: usize, width: usize, center: (f64, f64), radius: f64) -> Vec<bool> {
    (0..height * width)
        .map(|i| {
            let (x, y) = ((i % width) as f64 + 0.5, (i / width) as f64 + 0.5);
            (x - center.0).powi(2) + (y - center.1).powi(2) <= radius * radius
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{render_frame, CloudModel, FringeModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame(data: Vec<f64>, h: usize, w: usize) -> ImageFrame {
        ImageFrame {
            data,
            ..ImageFrame::zeros(h, w)
        }
    }

    #[test]
    fn identical_pool_reconstructs_exactly() {
        let base: Vec<f64> = (0..100).map(|i| 100.0 + (i as f64 * 0.3).sin()).collect();
        let pool: Vec<ImageFrame> = (0..5).map(|_| frame(base.clone(), 10, 10)).collect();
        let b = pca_fit(&pool, 3).unwrap();
        assert_eq!(b.components.len(), 0);
        let mask = disk_mask(10, 10, (5.0, 5.0), 2.0);
        let (bg, res) = pca_reconstruct(&pool[0], &b, &mask).unwrap();
        for (a, e) in bg.data.iter().zip(&base) {
            assert!((a - e).abs() < 1e-9);
        }
        assert!(res.data.iter().all(|r| r.abs() < 1e-9));
        assert!(pca_fit(&pool, 6).is_err());
    }

    #[test]
    fn masked_pixels_do_not_influence_the_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fm = FringeModel::random(5, 0.05, 0.5, 0.02, &mut rng);
        let c = CloudModel::empty(24, 24, 1.0, 0.1);
        let pool: Vec<ImageFrame> = (0..40)
            .map(|_| render_frame(&c, &fm, 2000.0, 0.0, &mut rng).unwrap())
            .collect();
        let basis = pca_fit(&pool, 30).unwrap();
        let mask = disk_mask(24, 24, (12.0, 12.0), 6.0);
        let mb = basis.restrict(&mask).unwrap();
        let g = mb.fit_gram();
        for i in 0..mb.rank() {
            for j in 0..mb.rank() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - e).abs() < 1e-9);
            }
        }
        let f = render_frame(&c, &fm, 2000.0, 0.0, &mut rng).unwrap();
        let mut g2 = f.clone();
        for (v, &m) in g2.data.iter_mut().zip(&mask) {
            if m {
                *v += 1e4;
            }
        }
        let (b1, _) = mb.reconstruct(&f);
        let (b2, _) = mb.reconstruct(&g2);
        for (a, b) in b1.data.iter().zip(&b2.data) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
