//! Summary statistics for sweep-level checks.

use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Number of adjacent pairs with `xs[i + 1] < xs[i]`.
pub fn strict_decreases(xs: &[f64]) -> usize {
    xs.windows(2).filter(|w| w[1] < w[0]).count()
}

/// Number of adjacent pairs with `xs[i + 1] > xs[i]`.
pub fn strict_increases(xs: &[f64]) -> usize {
    xs.windows(2).filter(|w| w[1] > w[0]).count()
}

/// Mann-Kendall statistic `S = sum_{i<j} sign(x_j - x_i)`.
pub fn kendall_s(xs: &[f64]) -> i64 {
    let mut s = 0i64;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            s += match xs[j].partial_cmp(&xs[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendTest {
    pub s: i64,
    /// One-sided p-value for an upward trend.
    pub p_up: f64,
    pub exact: bool,
}

const EXACT_MAX_LEN: usize = 8;

/// One-sided Mann-Kendall test for an upward trend. Series of up to eight
/// values use the exact permutation distribution (ties included); longer
/// ones the normal approximation with tie-corrected variance and continuity
/// correction.
pub fn mann_kendall_up(xs: &[f64]) -> TrendTest {
    let s = kendall_s(xs);
    let n = xs.len();
    if n < 2 {
        return TrendTest { s, p_up: 1.0, exact: true };
    }
    if n <= EXACT_MAX_LEN {
        let mut perm = xs.to_vec();
        let (mut total, mut at_least) = (0u64, 0u64);
        permute(&mut perm, 0, &mut |p| {
            total += 1;
            if kendall_s(p) >= s {
                at_least += 1;
            }
        });
        return TrendTest { s, p_up: at_least as f64 / total as f64, exact: true };
    }
    let nf = n as f64;
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * (t - 1.0) * (2.0 * t + 5.0);
        i = j + 1;
    }
    let var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - tie_term) / 18.0;
    let z = if s > 0 {
        (s as f64 - 1.0) / var.sqrt()
    } else if s < 0 {
        (s as f64 + 1.0) / var.sqrt()
    } else {
        0.0
    };
    let normal = Normal::standard();
    TrendTest { s, p_up: 1.0 - normal.cdf(z), exact: false }
}

fn permute(v: &mut [f64], k: usize, f: &mut impl FnMut(&[f64])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_summaries() {
        assert_eq!(mean(&[1.0, 2.0, 6.0]), 3.0);
        assert_eq!(median(&[5.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(variance(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(strict_decreases(&[3.0, 2.0, 2.0, 4.0, 1.0]), 2);
        assert_eq!(strict_increases(&[3.0, 2.0, 2.0, 4.0, 1.0]), 1);
    }

    #[test]
    fn exact_trend_p_values() {
        // Strictly increasing series of 6: only the identity permutation reaches S = 15.
        let t = mann_kendall_up(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(t.s, 15);
        assert!((t.p_up - 1.0 / 720.0).abs() < 1e-15);
        let down = mann_kendall_up(&[6.0, 5.0, 4.0, 3.0, 2.0, 1.0]);
        assert_eq!(down.p_up, 1.0);
        let flat = mann_kendall_up(&[1.0; 5]);
        assert_eq!((flat.s, flat.p_up), (0, 1.0));
    }

    #[test]
    fn normal_approximation_agrees_roughly() {
        let xs: Vec<f64> = (0..12).map(|i| ((i * 7) % 12) as f64).collect();
        let t = mann_kendall_up(&xs);
        assert!(!t.exact);
        assert!(t.p_up > 0.0 && t.p_up < 1.0);
        let inc: Vec<f64> = (0..20).map(f64::from).collect();
        assert!(mann_kendall_up(&inc).p_up < 1e-6);
    }
}
