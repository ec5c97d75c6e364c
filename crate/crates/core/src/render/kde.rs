//! Gaussian kernel density curves for the density-fan plot.

use std::f64::consts::PI;

pub const EVAL_POINTS: usize = 512;

/// Kernel contributions beyond this many bandwidths are below 1e-14 and skipped.
const CUTOFF: f64 = 8.0;

/// Type-7 sample quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sample_sd(data: &[f64]) -> f64 {
    let n = data.len() as f64;
    if data.len() < 2 {
        return 0.0;
    }
    let mean = data.iter().sum::<f64>() / n;
    (data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Silverman's rule `0.9·min(sd, IQR/1.34)·n^(−1/5)`. Falls back to the
/// standard deviation when the IQR is zero; `None` when all draws coincide.
pub fn silverman_bandwidth(sorted: &[f64]) -> Option<f64> {
    if sorted.len() < 2 {
        return None;
    }
    let sd = sample_sd(sorted);
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let mut spread = sd.min(iqr / 1.34);
    if spread <= 0.0 {
        spread = sd;
    }
    if !(spread > 0.0) {
        return None;
    }
    Some(0.9 * spread * (sorted.len() as f64).powf(-0.2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub bandwidth: f64,
}

/// Density on 512 points spanning `[min − 3h, max + 3h]`.
pub fn gaussian_kde(draws: &[f64]) -> Option<DensityCurve> {
    let mut sorted: Vec<f64> = draws.iter().copied().filter(|x| x.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    let h = silverman_bandwidth(&sorted)?;
    let (lo, hi) = (sorted[0] - 3.0 * h, sorted[sorted.len() - 1] + 3.0 * h);
    let norm = 1.0 / (sorted.len() as f64 * h * (2.0 * PI).sqrt());
    let step = (hi - lo) / (EVAL_POINTS - 1) as f64;

    let xs: Vec<f64> = (0..EVAL_POINTS).map(|i| lo + step * i as f64).collect();
    let ys = xs
        .iter()
        .map(|&x| {
            let start = sorted.partition_point(|&d| d < x - CUTOFF * h);
            let end = sorted.partition_point(|&d| d <= x + CUTOFF * h);
            let sum: f64 = sorted[start..end]
                .iter()
                .map(|&d| {
                    let u = (x - d) / h;
                    (-0.5 * u * u).exp()
                })
                .sum();
            sum * norm
        })
        .collect();
    Some(DensityCurve {
        xs,
        ys,
        bandwidth: h,
    })
}
