//! Univariate least squares, in-sample R², binned response curves and a
//! moving-block bootstrap for dependent samples.

use super::features::{future_return, FeatureScope, FeatureSeries};
use super::HorizonSpec;
use crate::error::{Error, Result};
use crate::util::quantile_sorted;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub alpha: f64,
    pub beta: f64,
    pub r2: f64,
    pub n: usize,
}

/// `1 - SS_res / SS_tot`. Returns 0 when `y` has no variance.
pub fn r2_score(y: &[f64], y_hat: &[f64]) -> f64 {
    assert_eq!(y.len(), y_hat.len());
    let m = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - m) * (v - m)).sum();
    let ss_res: f64 = y.iter().zip(y_hat).map(|(v, p)| (v - p) * (v - p)).sum();
    if ss_tot == 0.0 {
        return 0.0;
    }
    1.0 - ss_res / ss_tot
}

fn pairs(x: &[Option<f64>], y: &[Option<f64>]) -> (Vec<f64>, Vec<f64>) {
    x.iter()
        .zip(y)
        .filter_map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) if a.is_finite() && b.is_finite() => Some((*a, *b)),
            _ => None,
        })
        .unzip()
}

fn ols_dense(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, have: n });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if !(sxx > 0.0) || sxx <= 1e-300 {
        return Err(Error::DegenerateX);
    }
    let beta = sxy / sxx;
    let alpha = my - beta * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (a, b) in x.iter().zip(y) {
        let r = b - alpha - beta * a;
        ss_res += r * r;
        ss_tot += (b - my) * (b - my);
    }
    let r2 = if ss_tot == 0.0 { 0.0 } else { 1.0 - ss_res / ss_tot };
    Ok(OlsFit { alpha, beta, r2, n })
}

/// Fits `y = alpha + beta * x` over rows where both are present.
pub fn ols_fit(x: &[Option<f64>], y: &[Option<f64>]) -> Result<OlsFit> {
    let (xs, ys) = pairs(x, y);
    ols_dense(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinPoint {
    pub left: f64,
    pub right: f64,
    pub center: f64,
    pub count: usize,
    /// Mean future return in bps; `None` for an empty bin.
    pub mean_return_bps: Option<f64>,
}

/// Range of the equal-width bins of a response curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinRange {
    /// Fixed bounds; `[-1, 1]` for normalised factors.
    Fixed { lo: f64, hi: f64 },
    /// Symmetric bounds at the given quantile of `|x|`, for unbounded factors.
    AbsQuantile { q: f64 },
}

/// Equal-width bins over the range; values outside are clamped into the
/// edge bins.
pub fn bin_curve(x: &[Option<f64>], y: &[Option<f64>], n_bins: usize, range: BinRange) -> Vec<BinPoint> {
    let (xs, ys) = pairs(x, y);
    let (lo, hi) = match range {
        BinRange::Fixed { lo, hi } => (lo, hi),
        BinRange::AbsQuantile { q } => {
            if xs.is_empty() {
                (-1.0, 1.0)
            } else {
                let mut a: Vec<f64> = xs.iter().map(|v| v.abs()).collect();
                a.sort_by(|p, q| p.total_cmp(q));
                let b = quantile_sorted(&a, q);
                let b = if b > 0.0 { b } else { 1.0 };
                (-b, b)
            }
        }
    };
    let n_bins = n_bins.max(1);
    let width = (hi - lo) / n_bins as f64;
    let mut sum = vec![0.0; n_bins];
    let mut cnt = vec![0usize; n_bins];
    for (a, b) in xs.iter().zip(&ys) {
        let k = (((a - lo) / width).floor() as i64).clamp(0, n_bins as i64 - 1) as usize;
        sum[k] += b;
        cnt[k] += 1;
    }
    (0..n_bins)
        .map(|k| {
            let left = lo + k as f64 * width;
            BinPoint {
                left,
                right: left + width,
                center: left + 0.5 * width,
                count: cnt[k],
                mean_return_bps: (cnt[k] > 0).then(|| sum[k] / cnt[k] as f64),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonFit {
    pub horizon_ms: u64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub r2: Option<f64>,
    pub n: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub feature: String,
    pub scope: FeatureScope,
    pub target: String,
    pub horizons: Vec<HorizonFit>,
    pub bin_horizon_ms: u64,
    pub bins: Vec<BinPoint>,
}

impl RegressionReport {
    pub fn r2(&self) -> Vec<Option<f64>> {
        self.horizons.iter().map(|h| h.r2).collect()
    }
}

/// Regresses the future return of `target_mid` at every horizon on the
/// feature, and bins the feature against the return at `bin_horizon_ms`.
pub fn horizon_report(
    feature: &FeatureSeries,
    target_name: &str,
    target_mid: &[f64],
    horizons: &HorizonSpec,
    bin_horizon_ms: u64,
    n_bins: usize,
    range: BinRange,
) -> Result<RegressionReport> {
    horizons.validate()?;
    let step_ms = (crate::GRID_NS / 1_000_000) as u64;
    let fits = horizons
        .horizons_ms
        .iter()
        .zip(horizons.steps())
        .map(|(&ms, h)| {
            let y = future_return(target_mid, h);
            match ols_fit(&feature.values, &y) {
                Ok(f) => HorizonFit {
                    horizon_ms: ms,
                    alpha: Some(f.alpha),
                    beta: Some(f.beta),
                    r2: Some(f.r2),
                    n: f.n,
                    error: None,
                },
                Err(e) => HorizonFit {
                    horizon_ms: ms,
                    alpha: None,
                    beta: None,
                    r2: None,
                    n: 0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let y = future_return(target_mid, (bin_horizon_ms / step_ms) as usize);
    Ok(RegressionReport {
        feature: feature.name.clone(),
        scope: feature.scope.clone(),
        target: target_name.to_string(),
        horizons: fits,
        bin_horizon_ms,
        bins: bin_curve(&feature.values, &y, n_bins, range),
    })
}

/// Moving-block bootstrap of R² for several aligned `(x, y)` samples that
/// share row indices. Every replicate draws one set of blocks and applies
/// it to all samples, so replicate `r` of different samples is paired.
/// Returns `reps` rows of one R² per sample; degenerate draws yield NaN.
pub fn paired_block_bootstrap(samples: &[(&[f64], &[f64])], block_len: usize, reps: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = samples.first().map_or(0, |s| s.0.len());
    assert!(samples.iter().all(|(x, y)| x.len() == n && y.len() == n));
    let block_len = block_len.clamp(1, n.max(1));
    let n_blocks = n.div_ceil(block_len);
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let starts: Vec<usize> = (0..n_blocks).map(|_| rng.random_range(0..=n - block_len)).collect();
            samples
                .iter()
                .map(|(x, y)| {
                    let mut xs = Vec::with_capacity(n_blocks * block_len);
                    let mut ys = Vec::with_capacity(n_blocks * block_len);
                    for &s in &starts {
                        xs.extend_from_slice(&x[s..s + block_len]);
                        ys.extend_from_slice(&y[s..s + block_len]);
                    }
                    ols_dense(&xs, &ys).map(|f| f.r2).unwrap_or(f64::NAN)
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn some(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().copied().map(Some).collect()
    }

    #[test]
    fn r2_hand_examples() {
        assert_eq!(r2_score(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]), 0.5);
        assert_eq!(r2_score(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(r2_score(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]), 0.0);
    }

    #[test]
    fn perfectly_collinear_fit() {
        let f = ols_fit(&some(&[1.0, 2.0, 3.0, 4.0]), &some(&[3.0, 5.0, 7.0, 9.0])).unwrap();
        assert!((f.beta - 2.0).abs() < 1e-12 && (f.alpha - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uncorrelated_fit_predicts_the_mean() {
        // x symmetric around its mean, y even in x: covariance is exactly 0
        let f = ols_fit(&some(&[-1.0, 0.0, 1.0]), &some(&[1.0, 0.0, 1.0])).unwrap();
        assert_eq!(f.beta, 0.0);
        assert_eq!(f.r2, 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            ols_fit(&some(&[1.0, 1.0, 1.0]), &some(&[1.0, 2.0, 3.0])),
            Err(Error::DegenerateX)
        ));
        assert!(matches!(
            ols_fit(&[Some(1.0), None, Some(2.0)], &some(&[1.0, 2.0, 3.0])),
            Err(Error::TooFewPoints { have: 2, .. })
        ));
    }

    #[test]
    fn self_prediction_bins_are_identity() {
        let xs: Vec<f64> = (0..2000).map(|i| -1.0 + i as f64 / 1000.0).collect();
        let bins = bin_curve(&some(&xs), &some(&xs), 20, BinRange::Fixed { lo: -1.0, hi: 1.0 });
        let means: Vec<f64> = bins.iter().map(|b| b.mean_return_bps.unwrap()).collect();
        assert!(means.windows(2).all(|w| w[1] > w[0]));
        let slope = (means[19] - means[0]) / (bins[19].center - bins[0].center);
        assert!((slope - 1.0).abs() < 1e-2, "slope {slope}");
    }

    #[test]
    fn bin_counts_cover_all_points() {
        let xs = some(&[-5.0, -0.5, 0.0, 0.5, 5.0]);
        let bins = bin_curve(&xs, &xs, 4, BinRange::Fixed { lo: -1.0, hi: 1.0 });
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 5);
        // -5 clamps into the first bin, 5 into the last; -0.5 opens bin 1
        assert_eq!(bins[0].count, 1);
        assert_eq!(bins[1].count, 1);
        assert_eq!(bins[3].count, 2);
    }

    /// Normal-equation slope on raw sums, residuals in a separate pass.
    fn r2_oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let beta = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let alpha = (sy - beta * sx) / n;
        let my = sy / n;
        let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - alpha - beta * a).powi(2)).sum();
        let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        1.0 - ss_res / ss_tot
    }

    proptest! {
        #[test]
        fn r2_matches_two_pass_oracle(
            x in prop::collection::vec(-10.0f64..10.0, 20..200),
            noise in prop::collection::vec(-1.0f64..1.0, 200),
            slope in 0.5f64..3.0,
        ) {
            let y: Vec<f64> = x.iter().zip(&noise).map(|(a, e)| slope * a + 2.0 * e).collect();
            let fit = ols_fit(&some(&x), &some(&y)).unwrap();
            let oracle = r2_oracle(&x, &y);
            prop_assert!(((fit.r2 - oracle) / oracle).abs() < 1e-12, "{} vs {}", fit.r2, oracle);
            prop_assert!(fit.r2 <= 1.0);
        }
    }
}
