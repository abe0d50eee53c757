use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jackknife {
    /// Estimator on the full sample.
    pub estimate: f64,
    /// Mean of the leave-one-out estimates.
    pub loo_mean: f64,
    pub std_error: f64,
}

fn summarize(estimate: f64, loo: &[f64]) -> Jackknife {
    let n = loo.len() as f64;
    let loo_mean = loo.iter().sum::<f64>() / n;
    let ss: f64 = loo.iter().map(|v| (v - loo_mean).powi(2)).sum();
    Jackknife {
        estimate,
        loo_mean,
        std_error: ((n - 1.0) / n * ss).sqrt(),
    }
}

/// Leave-one-out jackknife of an arbitrary estimator. Needs at least three
/// samples.
pub fn jackknife<T: Clone, F>(samples: &[T], estimator: F) -> Result<Jackknife>
where
    F: Fn(&[T]) -> f64,
{
    if samples.len() < 3 {
        return Err(Error::domain("jackknife needs at least 3 samples"));
    }
    let estimate = estimator(samples);
    let mut buf: Vec<T> = samples[1..].to_vec();
    let mut loo = Vec::with_capacity(samples.len());
    // buf holds every sample except index i
    for i in 0..samples.len() {
        if i > 0 {
            buf[i - 1] = samples[i - 1].clone();
        }
        loo.push(estimator(&buf));
    }
    Ok(summarize(estimate, &loo))
}

/// Jackknife for estimators that depend on the data only through the sums of
/// `K` per-sample features. Runs in `O(M K)`.
pub fn jackknife_sums<const K: usize, F>(features: &[[f64; K]], estimator: F) -> Result<Jackknife>
where
    F: Fn(&[f64; K], f64) -> f64,
{
    let m = features.len();
    if m < 3 {
        return Err(Error::domain("jackknife needs at least 3 samples"));
    }
    let mut total = [0.0; K];
    for f in features {
        for k in 0..K {
            total[k] += f[k];
        }
    }
    let estimate = estimator(&total, m as f64);
    let loo: Vec<f64> = features
        .iter()
        .map(|f| {
            let mut s = total;
            for k in 0..K {
                s[k] -= f[k];
            }
            estimator(&s, (m - 1) as f64)
        })
        .collect();
    Ok(summarize(estimate, &loo))
}

/// Unbiased variance from `[Σx, Σx²]`.
pub fn variance_from_sums(s: &[f64; 2], n: f64) -> f64 {
    (s[1] - s[0] * s[0] / n) / (n - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mean(x: &[f64]) -> f64 {
        x.iter().sum::<f64>() / x.len() as f64
    }

    #[test]
    fn too_few_samples() {
        assert!(jackknife(&[1.0, 2.0], mean).is_err());
        assert!(jackknife_sums(&[[1.0], [2.0]], |s, n| s[0] / n).is_err());
    }

    proptest! {
        #[test]
        fn mean_error_equals_standard_error(x in prop::collection::vec(-10.0f64..10.0, 3..60)) {
            let jk = jackknife(&x, mean).unwrap();
            let n = x.len() as f64;
            let m = mean(&x);
            let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
            let sem = (var / n).sqrt();
            prop_assert!((jk.std_error - sem).abs() <= 1e-9 * (1.0 + sem));
            prop_assert!((jk.estimate - m).abs() < 1e-12);
        }

        #[test]
        fn sums_path_matches_generic(x in prop::collection::vec(-5.0f64..5.0, 3..40)) {
            let var = |v: &[f64]| {
                let m = mean(v);
                v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
            };
            let a = jackknife(&x, var).unwrap();
            let f: Vec<[f64; 2]> = x.iter().map(|&v| [v, v * v]).collect();
            let b = jackknife_sums(&f, variance_from_sums).unwrap();
            prop_assert!((a.estimate - b.estimate).abs() < 1e-8);
            prop_assert!((a.std_error - b.std_error).abs() < 1e-7 * (1.0 + a.std_error));
        }
    }
}
