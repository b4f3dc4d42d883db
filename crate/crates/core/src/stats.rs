//! Small statistics toolkit shared by the Monte Carlo and fitting code.

use alloc::vec::Vec;
use num_traits::Float;

/// Pairwise (cascade) summation. Reduction order depends only on the length,
/// so results are bit-reproducible.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    (pairwise_sum(&dev) / (xs.len() - 1) as f64).sqrt()
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (0 for exactly two points).
    pub slope_stderr: f64,
    pub r_squared: f64,
}

impl LineFit {
    /// Half-width of the 95% confidence interval on the slope (normal approximation).
    pub fn slope_ci95(&self) -> f64 {
        1.96 * self.slope_stderr
    }
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: Vec<f64> = x.iter().map(|v| (v - mx) * (v - mx)).collect();
    let sxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let sxx = pairwise_sum(&sxx);
    if sxx == 0.0 {
        return None;
    }
    let slope = pairwise_sum(&sxy) / sxx;
    let intercept = my - slope * mx;
    let resid: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .collect();
    let ss_res = pairwise_sum(&resid);
    let tot: Vec<f64> = y.iter().map(|b| (b - my) * (b - my)).collect();
    let ss_tot = pairwise_sum(&tot);
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    let slope_stderr = if n > 2 {
        (ss_res / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
    })
}

/// Binomial standard error of a fraction estimate.
pub fn binomial_stderr(hits: u64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = hits as f64 / n as f64;
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsTest {
    let mut a: Vec<f64> = a.to_vec();
    let mut b: Vec<f64> = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return KsTest {
            statistic: 0.0,
            p_value: 1.0,
        };
    }
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < n && a[i] <= v {
            i += 1;
        }
        while j < m && b[j] <= v {
            j += 1;
        }
        let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        d = d.max(diff);
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    KsTest {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    }
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = sign * 2.0 * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
        sign = -sign;
    }
    sum.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = vec![0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 - 2.0 * v).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-14);
        assert!((f.intercept - 1.5).abs() < 1e-14);
        assert!(f.slope_stderr < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ks_identical_and_shifted() {
        let a: Vec<f64> = (0..200).map(|i| i as f64 / 200.0).collect();
        assert!(ks_two_sample(&a, &a).p_value > 0.99);
        let b: Vec<f64> = a.iter().map(|v| v + 0.5).collect();
        assert!(ks_two_sample(&a, &b).p_value < 1e-6);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }
}
