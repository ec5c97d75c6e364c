//! Scalar kernels: conditional effects, their delta-method variances, normal
//! z/p statistics and the analytic two-way Johnson-Neyman boundaries.
//!
//! All conditional effects here are linear combinations `wᵀβ` of the
//! coefficients, so the delta-method variance is exactly `wᵀΣw`.
//! [`quadratic_form_var`] evaluates that form directly and serves as the
//! independent check on the expanded formulas.

use std::f64::consts::SQRT_2;

use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile: a rational initial guess refined by Newton
/// steps on `Φ(x) − p`, accurate to about 1e-15 in the central region.
pub fn normal_quantile(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return match p {
            0.0 => f64::NEG_INFINITY,
            1.0 => f64::INFINITY,
            _ => f64::NAN,
        };
    }
    if p > 0.5 {
        return -normal_quantile(1.0 - p);
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let mut x = if p < 0.02425 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    // p <= 0.5 here, so Φ(x) is evaluated on the accurate lower tail
    for _ in 0..3 {
        let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if density == 0.0 {
            break;
        }
        x -= (normal_cdf(x) - p) / density;
    }
    x
}

/// Two-sided p-value `2·(1 − Φ(|z|))`, evaluated through the upper tail.
pub fn two_sided_p(z: f64) -> f64 {
    if z.is_infinite() {
        return 0.0;
    }
    erfc(z.abs() / SQRT_2).min(1.0)
}

/// Significance level and the matching two-sided normal critical value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceConfig {
    alpha: f64,
    z_crit: f64,
}

impl SignificanceConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(Self {
            alpha,
            z_crit: -normal_quantile(0.5 * alpha),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn z_crit(&self) -> f64 {
        self.z_crit
    }
}

impl Default for SignificanceConfig {
    fn default() -> Self {
        Self::new(0.05).expect("0.05 is a valid alpha")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalEstimate {
    pub theta: f64,
    pub se: f64,
    pub z: f64,
    pub p: f64,
    pub significant: bool,
}

/// Simple slope `b_main + b_int·m`.
#[inline]
pub fn effect_2way(b_main: f64, b_int: f64, m: f64) -> f64 {
    b_main + b_int * m
}

/// `Var(b_main) + 2m·Cov(b_main, b_int) + m²·Var(b_int)`.
pub fn var_2way(v_main: f64, cov_main_int: f64, v_int: f64, m: f64) -> Result<f64> {
    let v = v_main + 2.0 * m * cov_main_int + m * m * v_int;
    if v < 0.0 {
        return Err(Error::NegativeVariance {
            at: format!("m = {m}"),
            variance: v,
        });
    }
    Ok(v)
}

/// Conditional effect of the focal variable at moderator values `(m, w)`.
#[inline]
pub fn effect_3way(b_main: f64, b_m: f64, b_w: f64, b_mw: f64, m: f64, w: f64) -> f64 {
    b_main + b_m * m + b_w * w + b_mw * m * w
}

/// Ten-term delta-method variance of [`effect_3way`]. `cov4` is ordered
/// (main, focal×m, focal×w, triple).
pub fn var_3way(cov4: &[[f64; 4]; 4], m: f64, w: f64) -> Result<f64> {
    let mw = m * w;
    let c = cov4;
    let v = c[0][0]
        + m * m * c[1][1]
        + w * w * c[2][2]
        + mw * mw * c[3][3]
        + 2.0 * m * c[0][1]
        + 2.0 * w * c[0][2]
        + 2.0 * mw * c[0][3]
        + 2.0 * mw * c[1][2]
        + 2.0 * m * m * w * c[1][3]
        + 2.0 * m * w * w * c[2][3];
    if v < 0.0 {
        return Err(Error::NegativeVariance {
            at: format!("(m, w) = ({m}, {w})"),
            variance: v,
        });
    }
    Ok(v)
}

/// `Σᵢⱼ wᵢ wⱼ covᵢⱼ` by direct double summation.
pub fn quadratic_form_var<R: AsRef<[f64]>>(cov: &[R], weights: &[f64]) -> Result<f64> {
    let k = weights.len();
    if cov.len() != k || cov.iter().any(|r| r.as_ref().len() != k) {
        return Err(Error::DimensionMismatch(format!(
            "quadratic form needs a {k}x{k} matrix"
        )));
    }
    let mut total = 0.0;
    for (i, row) in cov.iter().enumerate() {
        for (j, c) in row.as_ref().iter().enumerate() {
            total += weights[i] * weights[j] * c;
        }
    }
    Ok(total)
}

/// Wald z statistic and two-sided normal p-value. Significance is strict:
/// `p < alpha`.
pub fn z_p(theta: f64, se: f64, config: &SignificanceConfig) -> ConditionalEstimate {
    let (z, p) = if se > 0.0 {
        let z = theta / se;
        (z, two_sided_p(z))
    } else if theta != 0.0 {
        (f64::INFINITY.copysign(theta), 0.0)
    } else {
        (0.0, 1.0)
    };
    ConditionalEstimate {
        theta,
        se,
        z,
        p,
        significant: p < config.alpha,
    }
}

/// Moderator values where the two-way conditional effect sits exactly at
/// `|z| = z_crit`, sorted ascending.
///
/// Solves `A m² + B m + C = 0` with `A = b_int² − z²·v_int`,
/// `B = 2(b_main·b_int − z²·cov)`, `C = b_main² − z²·v_main`.
pub fn jn_boundaries_2way(
    b_main: f64,
    b_int: f64,
    v_main: f64,
    cov_main_int: f64,
    v_int: f64,
    config: &SignificanceConfig,
) -> Vec<f64> {
    let z2 = config.z_crit * config.z_crit;
    let a = b_int * b_int - z2 * v_int;
    let b = 2.0 * (b_main * b_int - z2 * cov_main_int);
    let c = b_main * b_main - z2 * v_main;

    if a.abs() < 1e-12 * b.abs().max(c.abs()).max(1.0) {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }

    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    // Citardauq form avoids cancellation between -b and sqrt(disc).
    let q = -0.5 * (b + disc.sqrt().copysign(b));
    let mut roots = if q == 0.0 {
        vec![0.0]
    } else {
        vec![q / a, c / q]
    };
    roots.sort_by(f64::total_cmp);
    if roots.len() == 2 && (roots[1] - roots[0]).abs() < 1e-10 {
        roots.truncate(1);
    }
    roots
}

/// Mean of the full three-way model,
/// `β₀ + β₁x + β₂m + β₃w + β₄xm + β₅xw + β₆mw + β₇xmw`.
pub fn linear_predictor_3way(coefs8: &[f64; 8], x: f64, m: f64, w: f64) -> f64 {
    let b = coefs8;
    b[0] + b[1] * x
        + b[2] * m
        + b[3] * w
        + b[4] * x * m
        + b[5] * x * w
        + b[6] * m * w
        + b[7] * x * m * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    /// Random symmetric PSD matrix as `L Lᵀ` of a random lower-triangular `L`.
    fn psd<const K: usize>(l: &[f64]) -> [[f64; K]; K] {
        let mut lower = [[0.0; K]; K];
        let mut it = l.iter();
        for (i, row) in lower.iter_mut().enumerate() {
            for cell in &mut row[..=i] {
                *cell = *it.next().unwrap();
            }
        }
        let mut out = [[0.0; K]; K];
        for i in 0..K {
            for j in 0..K {
                out[i][j] = (0..K).map(|k| lower[i][k] * lower[j][k]).sum();
            }
        }
        out
    }

    #[test]
    fn normal_constants() {
        let cfg = SignificanceConfig::new(0.05).unwrap();
        assert!((cfg.z_crit() - 1.959_963_984_540_054).abs() < 1e-12);
        let cfg = SignificanceConfig::new(0.01).unwrap();
        assert!((cfg.z_crit() - 2.575_829_303_548_901).abs() < 1e-12);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-14);
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-15);
        for p in [1e-10, 0.001, 0.0249, 0.3, 0.5, 0.8, 0.999] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-15_f64.max(p * 1e-13));
        }
        assert!(SignificanceConfig::new(0.0).is_err());
        assert!(SignificanceConfig::new(1.5).is_err());
    }

    #[test]
    fn two_way_examples() {
        assert_eq!(effect_2way(1.0, 0.5, 0.0), 1.0);
        assert_eq!(effect_2way(1.0, 0.5, 2.0), 2.0);
        assert_eq!(effect_2way(1.0, 0.5, -2.0), 0.0);

        assert!((var_2way(0.04, 0.0, 0.01, 2.0).unwrap() - 0.08).abs() < 1e-15);
        assert_eq!(var_2way(0.04, 123.0, 0.01, 0.0).unwrap(), 0.04);
        let v = var_2way(0.04, -0.01, 0.01, 1.0).unwrap();
        let oracle = quadratic_form_var(&[[0.04, -0.01], [-0.01, 0.01]], &[1.0, 1.0]).unwrap();
        assert!((v - 0.03).abs() < 1e-15 && (v - oracle).abs() < 1e-15);

        let err = var_2way(0.01, -1.0, 0.01, 1.0).unwrap_err();
        assert!(err
            .to_string()
            .contains("invalid covariance sub-matrix at m = 1"));
    }

    #[test]
    fn three_way_examples() {
        assert_eq!(effect_3way(1.0, 0.5, -0.5, 0.25, 2.0, 2.0), 2.0);
        assert_eq!(effect_3way(1.0, 0.5, -0.5, 0.25, 0.0, 0.0), 1.0);
        assert_eq!(effect_3way(0.0, 0.0, 0.0, 1.0, 3.0, -2.0), -6.0);

        let (a, b, c, d) = (0.3, 0.2, 0.5, 0.7);
        let diag = [
            [a, 0., 0., 0.],
            [0., b, 0., 0.],
            [0., 0., c, 0.],
            [0., 0., 0., d],
        ];
        let (m, w) = (1.5, -2.0);
        let expected = a + m * m * b + w * w * c + (m * w) * (m * w) * d;
        assert!(close(var_3way(&diag, m, w).unwrap(), expected, 1e-14));

        let full = psd::<4>(&[1.0, 0.2, 0.8, -0.3, 0.1, 0.9, 0.05, -0.4, 0.2, 0.6]);
        assert_eq!(var_3way(&full, 0.0, 0.0).unwrap(), full[0][0]);
        let (m, w) = (1.3, -0.7);
        let oracle = quadratic_form_var(&full, &[1.0, m, w, m * w]).unwrap();
        assert!(close(var_3way(&full, m, w).unwrap(), oracle, 1e-12));

        let bad = [
            [0.01, 0., 0., 0.],
            [0., 0.01, 0., 0.],
            [0., 0., 0., 0.],
            [0., 0., 0., -5.],
        ];
        let err = var_3way(&bad, 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("(m, w) = (1, 1)"), "{err}");
    }

    #[test]
    fn quadratic_form_examples() {
        assert_eq!(
            quadratic_form_var(&[[1.0, 0.0], [0.0, 1.0]], &[1.0, 1.0]).unwrap(),
            2.0
        );
        assert_eq!(
            quadratic_form_var(&[[4.0, 1.0], [1.0, 9.0]], &[0.0, 0.0]).unwrap(),
            0.0
        );
        assert_eq!(
            quadratic_form_var(&[[4.0, 1.0], [1.0, 9.0]], &[1.0, 2.0]).unwrap(),
            44.0
        );
        assert!(quadratic_form_var(&[[4.0, 1.0], [1.0, 9.0]], &[1.0]).is_err());
    }

    #[test]
    fn z_p_examples() {
        let cfg = SignificanceConfig::default();
        let est = z_p(0.392, 0.2, &cfg);
        assert!((est.z - 1.96).abs() < 1e-12);
        // 2·(1 − Φ(1.96)) = 0.04999579029644087
        assert!((est.p - 0.049_995_790_296_440_87).abs() < 1e-12);
        assert_eq!(est.significant, est.p < cfg.alpha());

        let est = z_p(0.0, 0.3, &cfg);
        assert_eq!((est.z, est.p, est.significant), (0.0, 1.0, false));
        let est = z_p(1.0, 0.0, &cfg);
        assert_eq!((est.z, est.p, est.significant), (f64::INFINITY, 0.0, true));
        let est = z_p(-1.0, 0.0, &cfg);
        assert_eq!(est.z, f64::NEG_INFINITY);
        let est = z_p(0.0, 0.0, &cfg);
        assert_eq!((est.z, est.p, est.significant), (0.0, 1.0, false));
    }

    #[test]
    fn significance_is_strict_at_alpha() {
        // choose alpha equal to the p-value itself: p < alpha is false
        let p = two_sided_p(2.0);
        let cfg = SignificanceConfig::new(p).unwrap();
        assert!(!z_p(2.0, 1.0, &cfg).significant);
    }

    #[test]
    fn boundaries_match_dense_scan() {
        let cfg = SignificanceConfig::default();
        let roots = jn_boundaries_2way(0.0, 1.0, 0.04, 0.0, 0.0, &cfg);
        // scan p(m) - alpha on [-1, 1] with step 1e-5, using theta/se directly
        let step = 1e-5;
        let sign = |m: f64| {
            let z = m / 0.2;
            (erfc(z.abs() / SQRT_2) - 0.05).signum()
        };
        let mut crossings = Vec::new();
        let mut prev = sign(-1.0);
        for i in 1..=200_000 {
            let m = -1.0 + i as f64 * step;
            let s = sign(m);
            if s != prev {
                crossings.push(m - step / 2.0);
            }
            prev = s;
        }
        assert_eq!(crossings.len(), 2);
        assert_eq!(roots.len(), 2);
        for (r, c) in roots.iter().zip(&crossings) {
            assert!((r - c).abs() <= step, "{r} vs {c}");
        }
        assert!((roots[1] - 0.391_992_796_908_010_8).abs() < 1e-12);
        assert!((roots[0] + 0.391_992_796_908_010_8).abs() < 1e-12);
    }

    #[test]
    fn boundaries_degenerate_cases() {
        let cfg = SignificanceConfig::default();
        // constant significant effect: no crossing
        assert!(jn_boundaries_2way(1.0, 0.0, 0.04, 0.0, 0.0, &cfg).is_empty());
        // linear case: A == 0 exactly
        let z = cfg.z_crit();
        let roots = jn_boundaries_2way(0.5, 0.1 * z, 0.04, 0.0, 0.01, &cfg);
        assert_eq!(roots.len(), 1);
        let p = z_p(
            effect_2way(0.5, 0.1 * z, roots[0]),
            var_2way(0.04, 0.0, 0.01, roots[0]).unwrap().sqrt(),
            &cfg,
        )
        .p;
        assert!((p - 0.05).abs() < 1e-8);
        // negative discriminant: never significant
        assert!(jn_boundaries_2way(0.0, 0.01, 1.0, 0.0, 1.0, &cfg).is_empty());
    }

    #[test]
    fn linear_predictor_examples() {
        let mut b = [0.0; 8];
        b[0] = 1.0;
        assert_eq!(linear_predictor_3way(&b, 3.0, -2.0, 7.0), 1.0);
        let b = [0.0, 1.0, 0.5, -0.5, 0.0, 0.0, 0.0, 0.5];
        assert_eq!(linear_predictor_3way(&b, 1.0, 1.0, 1.0), 1.5);
    }

    proptest! {
        #[test]
        fn var_2way_matches_quadratic_form(
            l in proptest::collection::vec(-2.0f64..2.0, 3),
            m in -10.0f64..10.0,
        ) {
            let c = psd::<2>(&l);
            let v = var_2way(c[0][0], c[0][1], c[1][1], m);
            let oracle = quadratic_form_var(&c, &[1.0, m]).unwrap();
            // rounding can push a singular form slightly below zero
            if let Ok(v) = v {
                prop_assert!((v - oracle).abs() <= 1e-12 * oracle.abs().max(c[0][0].abs() + m * m * c[1][1].abs()));
            }
        }

        #[test]
        fn var_3way_matches_quadratic_form(
            l in proptest::collection::vec(-2.0f64..2.0, 10),
            m in -10.0f64..10.0,
            w in -10.0f64..10.0,
        ) {
            let c = psd::<4>(&l);
            let weights = [1.0, m, w, m * w];
            let oracle = quadratic_form_var(&c, &weights).unwrap();
            let scale: f64 = (0..4).map(|i| weights[i].abs() * c[i][i].sqrt()).sum::<f64>().powi(2);
            if let Ok(v) = var_3way(&c, m, w) {
                prop_assert!((v - oracle).abs() <= 1e-12 * scale.max(1e-300));
            }
        }

        #[test]
        fn three_way_symmetric_in_moderators(
            l in proptest::collection::vec(-2.0f64..2.0, 10),
            b in proptest::collection::vec(-3.0f64..3.0, 4),
            m in -10.0f64..10.0,
            w in -10.0f64..10.0,
        ) {
            let c = psd::<4>(&l);
            let swap = [0usize, 2, 1, 3];
            let mut swapped = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    swapped[i][j] = c[swap[i]][swap[j]];
                }
            }
            let e1 = effect_3way(b[0], b[1], b[2], b[3], m, w);
            let e2 = effect_3way(b[0], b[2], b[1], b[3], w, m);
            prop_assert!((e1 - e2).abs() <= 1e-12 * (1.0 + e1.abs()));
            if let (Ok(v1), Ok(v2)) = (var_3way(&c, m, w), var_3way(&swapped, w, m)) {
                prop_assert!((v1 - v2).abs() <= 1e-10 * (1.0 + v1.abs()));
            }
        }

        #[test]
        fn p_values_bounded_and_monotone(a in 0.0f64..40.0, b in 0.0f64..40.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (p_lo, p_hi) = (two_sided_p(lo), two_sided_p(hi));
            prop_assert!((0.0..=1.0).contains(&p_lo) && (0.0..=1.0).contains(&p_hi));
            prop_assert!(p_hi <= p_lo);
        }

        #[test]
        fn finite_difference_matches_focal_effect(
            b in proptest::collection::vec(-5.0f64..5.0, 8),
            x in -10.0f64..10.0,
            m in -10.0f64..10.0,
            w in -10.0f64..10.0,
        ) {
            let coefs: [f64; 8] = b.clone().try_into().unwrap();
            let h = 1e-6 * x.abs().max(1.0);
            let fd = (linear_predictor_3way(&coefs, x + h, m, w)
                - linear_predictor_3way(&coefs, x - h, m, w)) / (2.0 * h);
            let analytic = effect_3way(b[1], b[4], b[5], b[7], m, w);
            // cancellation error in the difference scales with the predictor's magnitude
            let scale = coefs.iter().map(|c| c.abs()).sum::<f64>() * (1.0 + x.abs()) * (1.0 + m.abs()) * (1.0 + w.abs());
            prop_assert!((fd - analytic).abs() <= 1e-6 * analytic.abs().max(1e-3 * scale));
        }
    }
}
