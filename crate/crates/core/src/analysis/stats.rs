use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Trailing-window statistics, one point per full window.
#[derive(Debug, Clone, PartialEq)]
pub struct Rolling {
    pub mean: Vec<f64>,
    /// Population standard deviation of the window.
    pub std: Vec<f64>,
}

pub fn rolling(series: &[f64], window: usize) -> Result<Rolling> {
    if window == 0 || window > series.len() {
        return Err(Error::WindowTooLong {
            window,
            len: series.len(),
        });
    }
    let w = window as f64;
    let (mean, std) = series
        .windows(window)
        .map(|s| {
            let m = s.iter().sum::<f64>() / w;
            let v = s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / w;
            (m, v.sqrt())
        })
        .unzip();
    Ok(Rolling { mean, std })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub b0: f64,
    pub b1: f64,
    pub se0: f64,
    pub se1: f64,
    pub t0: f64,
    pub t1: f64,
    pub p0: f64,
    pub p1: f64,
    pub r2: f64,
    pub n: usize,
}

impl RegressionResult {
    pub fn stars0(&self) -> &'static str {
        stars(self.p0)
    }

    pub fn stars1(&self) -> &'static str {
        stars(self.p1)
    }
}

/// Significance marks at 1%, 5% and 10%.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    if t.is_nan() {
        return 1.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

/// OLS of `y` on an intercept and `x`.
pub fn simple_ols(y: &[f64], x: &[f64]) -> Result<RegressionResult> {
    if y.len() != x.len() {
        return Err(Error::InvalidInput(format!(
            "series lengths differ: {} and {}",
            y.len(),
            x.len()
        )));
    }
    let n = y.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!("{n} observations, need at least 3")));
    }
    if y.iter().chain(x).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression input"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateRegressor("regressor has zero variance"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let b1 = sxy / sxx;
    let b0 = my - b1 * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - b0 - b1 * a).powi(2)).sum();
    let df = nf - 2.0;
    let s2 = ssr / df;
    let se1 = (s2 / sxx).sqrt();
    let se0 = (s2 * (1.0 / nf + mx * mx / sxx)).sqrt();
    let t = |b: f64, se: f64| {
        if se > 0.0 {
            b / se
        } else if b == 0.0 {
            0.0
        } else {
            b.signum() * f64::INFINITY
        }
    };
    let (t0, t1) = (t(b0, se0), t(b1, se1));
    Ok(RegressionResult {
        b0,
        b1,
        se0,
        se1,
        t0,
        t1,
        p0: two_sided_p(t0, df),
        p1: two_sided_p(t1, df),
        r2: if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 },
        n,
    })
}

/// OLS of `y` on an intercept and `1 − η`: `b0` is the mean under η=1 and
/// `b0 + b1` the mean under η=0.
pub fn categorical_regression(y: &[f64], eta: &[u8]) -> Result<RegressionResult> {
    if eta.iter().any(|&e| e > 1) {
        return Err(Error::InvalidInput("eta must be 0 or 1".into()));
    }
    let has = |v| eta.contains(&v);
    if !(has(0) && has(1)) {
        return Err(Error::DegenerateRegressor("eta takes a single value"));
    }
    let x: Vec<f64> = eta.iter().map(|&e| 1.0 - e as f64).collect();
    simple_ols(y, &x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub d: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::NonFinite("sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult {
        d,
        p_value: kolmogorov_q(lambda),
    })
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let a2 = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 2.0;
    let mut prev = 0.0f64;
    for j in 1..=100 {
        let jf = j as f64;
        let term = sign * (a2 * jf * jf).exp();
        sum += term;
        if term.abs() <= 1e-3 * prev || term.abs() <= 1e-8 * sum.abs() {
            return sum.clamp(0.0, 1.0);
        }
        sign = -sign;
        prev = term.abs();
    }
    1.0
}

/// Pearson correlation; `None` when either series has no variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let (x, y) = (&x[..n], &y[..n]);
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagCorrelation {
    pub lag: i64,
    pub corr: Option<f64>,
    pub n: usize,
    /// Two-sided test of zero correlation rejects at 1%.
    pub significant: bool,
}

/// Correlation of `x_t` with `y_{t+τ}` for τ in `-max_lag..=max_lag`.
pub fn lagged_correlation(x: &[f64], y: &[f64], max_lag: usize) -> Result<Vec<LagCorrelation>> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "series lengths differ: {} and {}",
            x.len(),
            y.len()
        )));
    }
    let len = x.len();
    if len < max_lag + 3 {
        return Err(Error::InvalidInput(format!(
            "overlap below 3 at lag {max_lag} for length {len}"
        )));
    }
    let m = max_lag as i64;
    Ok((-m..=m)
        .map(|lag| {
            let k = lag.unsigned_abs() as usize;
            let (xs, ys) = if lag >= 0 {
                (&x[..len - k], &y[k..])
            } else {
                (&x[k..], &y[..len - k])
            };
            let n = xs.len();
            let corr = pearson(xs, ys);
            let significant = corr.is_some_and(|r| {
                let df = (n - 2) as f64;
                let t = if r.abs() >= 1.0 {
                    f64::INFINITY
                } else {
                    r * (df / (1.0 - r * r)).sqrt()
                };
                df > 0.0 && two_sided_p(t, df) < 0.01
            });
            LagCorrelation {
                lag,
                corr,
                n,
                significant,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rolling_examples() {
        let r = rolling(&[2.0; 10], 4).unwrap();
        assert!(r.mean.iter().all(|&m| m == 2.0));
        assert!(r.std.iter().all(|&s| s == 0.0));

        let r = rolling(&[1.0, 2.0, 3.0, 4.0, 5.0], 2).unwrap();
        assert_eq!(r.mean, vec![1.5, 2.5, 3.5, 4.5]);
        assert!(r.std.iter().all(|&s| (s - 0.5).abs() < 1e-15));

        let s = [3.0, 1.0, 4.0, 1.0, 5.0];
        let r = rolling(&s, 5).unwrap();
        assert_eq!(r.mean.len(), 1);
        assert!((r.mean[0] - 2.8).abs() < 1e-15);

        assert!(matches!(
            rolling(&s, 6),
            Err(Error::WindowTooLong { window: 6, len: 5 })
        ));
    }

    #[test]
    fn rolling_ramp_is_shifted() {
        let ramp: Vec<f64> = (0..300).map(|t| 0.5 * t as f64 + 1.0).collect();
        let w = 100;
        let r = rolling(&ramp, w).unwrap();
        for (k, m) in r.mean.iter().enumerate() {
            let t = (k + w - 1) as f64;
            let expect = 0.5 * (t - (w as f64 - 1.0) / 2.0) + 1.0;
            assert!((m - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn categorical_group_means() {
        let r = categorical_regression(&[1.0, 1.0, 3.0, 3.0], &[1, 1, 0, 0]).unwrap();
        assert!((r.b0 - 1.0).abs() < 1e-12);
        assert!((r.b1 - 2.0).abs() < 1e-12);
        assert_eq!(r.n, 4);

        let r = categorical_regression(&[1.0, 2.0, 1.0, 2.0], &[1, 1, 0, 0]).unwrap();
        assert!(r.b1.abs() < 1e-12);
        assert_eq!(r.stars1(), "");

        assert!(matches!(
            categorical_regression(&[1.0, 2.0, 3.0], &[1, 1, 1]),
            Err(Error::DegenerateRegressor(_))
        ));
    }

    #[test]
    fn ols_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let r = simple_ols(&y, &x).unwrap();
        assert!((r.b1 - 2.0).abs() < 1e-12);
        assert!(r.b0.abs() < 1e-12);
        assert!((r.r2 - 1.0).abs() < 1e-12);
        assert_eq!(r.stars1(), "***");

        let x = [-1.0, 0.0, 1.0, -1.0, 0.0, 1.0];
        let y = [1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let r = simple_ols(&y, &x).unwrap();
        assert!(r.b1.abs() < 1e-12);

        assert!(matches!(
            simple_ols(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]),
            Err(Error::DegenerateRegressor(_))
        ));
    }

    #[test]
    fn ols_standard_errors_match_textbook() {
        // Hand-worked: x = 1..5, y = [2, 4, 5, 4, 5].
        // b1 = 6/10, b0 = 2.2, SSR = 2.4, s² = 0.8,
        // se(b1) = sqrt(0.08), se(b0) = sqrt(0.8 (1/5 + 9/10)).
        let r = simple_ols(&[2.0, 4.0, 5.0, 4.0, 5.0], &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((r.b1 - 0.6).abs() < 1e-12);
        assert!((r.b0 - 2.2).abs() < 1e-12);
        assert!((r.se1 - 0.08f64.sqrt()).abs() < 1e-12);
        assert!((r.se0 - 0.88f64.sqrt()).abs() < 1e-12);
        assert!((r.r2 - 0.6).abs() < 1e-12);
        // t = 0.6 / 0.2828 = 2.1213 on 3 df: two-sided p ≈ 0.1240.
        assert!((r.p1 - 0.1240).abs() < 5e-4, "{}", r.p1);
    }

    #[test]
    fn stars_thresholds() {
        assert_eq!(stars(0.005), "***");
        assert_eq!(stars(0.02), "**");
        assert_eq!(stars(0.07), "*");
        assert_eq!(stars(0.5), "");
    }

    #[test]
    fn ks_examples() {
        let a = [0.3, 0.1, 0.7];
        assert_eq!(ks_two_sample(&a, &a).unwrap().d, 0.0);
        assert_eq!(ks_two_sample(&a, &a).unwrap().p_value, 1.0);
        assert_eq!(ks_two_sample(&[0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap().d, 1.0);
        let r = ks_two_sample(&[0.0, 0.0, 1.0, 1.0], &[0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!((r.d - 0.25).abs() < 1e-15);
        assert!(ks_two_sample(&[], &a).is_err());
    }

    #[test]
    fn ks_p_value_reference_points() {
        // Kolmogorov survival function Q(λ).
        assert!((kolmogorov_q(1.0) - 0.269_999_671_4).abs() < 1e-6);
        assert!((kolmogorov_q(1.358) - 0.050_07).abs() < 1e-4);
        assert!((kolmogorov_q(1.628) - 0.010_0).abs() < 1e-4);
        assert!(kolmogorov_q(0.2) > 0.999);
    }

    #[test]
    fn ks_separates_shifted_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..400).map(|_| rng.gen::<f64>()).collect();
        let b: Vec<f64> = (0..400).map(|_| rng.gen::<f64>() + 0.3).collect();
        let c: Vec<f64> = (0..400).map(|_| rng.gen::<f64>()).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value < 0.01);
        assert!(ks_two_sample(&a, &c).unwrap().p_value > 0.01);
    }

    #[test]
    fn lagged_shift_peaks_at_lag() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x: Vec<f64> = (0..200).map(|_| rng.gen::<f64>()).collect();
        let mut y: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
        y.extend_from_slice(&x[..197]);
        let lc = lagged_correlation(&x, &y, 21).unwrap();
        let best = lc
            .iter()
            .max_by(|a, b| a.corr.unwrap().total_cmp(&b.corr.unwrap()))
            .unwrap();
        assert_eq!(best.lag, 3);
        assert!((best.corr.unwrap() - 1.0).abs() < 1e-12);
        assert!(best.significant);
        let zero = lc.iter().find(|l| l.lag == 0).unwrap();
        assert_eq!(zero.corr, pearson(&x, &y));
    }

    #[test]
    fn lagged_white_noise_rarely_significant() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut hits = 0;
        let mut total = 0;
        for _ in 0..20 {
            let x: Vec<f64> = (0..500).map(|_| rng.gen::<f64>()).collect();
            let y: Vec<f64> = (0..500).map(|_| rng.gen::<f64>()).collect();
            let lc = lagged_correlation(&x, &y, 21).unwrap();
            assert_eq!(lc.len(), 43);
            hits += lc.iter().filter(|l| l.significant).count();
            total += lc.len();
        }
        // 1% nominal rate over 860 tests.
        assert!(hits as f64 / (total as f64) < 0.03, "{hits}/{total}");
    }

    #[test]
    fn lagged_degenerate_is_missing() {
        let x = vec![1.0; 50];
        let y: Vec<f64> = (0..50).map(|t| t as f64).collect();
        let lc = lagged_correlation(&x, &y, 5).unwrap();
        assert!(lc.iter().all(|l| l.corr.is_none() && !l.significant));
        assert!(lagged_correlation(&x[..6], &y[..6], 5).is_err());
    }

    proptest! {
        #[test]
        fn ks_properties(
            a in prop::collection::vec(-5.0f64..5.0, 1..40),
            b in prop::collection::vec(-5.0f64..5.0, 1..40),
        ) {
            let ab = ks_two_sample(&a, &b).unwrap();
            let ba = ks_two_sample(&b, &a).unwrap();
            prop_assert!((0.0..=1.0).contains(&ab.d));
            prop_assert_eq!(ab.d, ba.d);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
            prop_assert_eq!(ks_two_sample(&a, &a).unwrap().d, 0.0);
        }

        #[test]
        fn categorical_reproduces_group_means(
            y in prop::collection::vec(-100.0f64..100.0, 4..60),
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut eta: Vec<u8> = y.iter().map(|_| rng.gen_range(0..2)).collect();
            eta[0] = 0;
            eta[1] = 1;
            let r = categorical_regression(&y, &eta).unwrap();
            let mean = |v: u8| {
                let g: Vec<f64> = y.iter().zip(&eta).filter(|(_, &e)| e == v).map(|(a, _)| *a).collect();
                g.iter().sum::<f64>() / g.len() as f64
            };
            prop_assert!((r.b0 - mean(1)).abs() < 1e-8);
            prop_assert!((r.b0 + r.b1 - mean(0)).abs() < 1e-8);
        }
    }
}
