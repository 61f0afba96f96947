//! Goodness-of-fit tests and summary statistics used by the experiments.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance (0 for a single value).
    pub variance: f64,
    /// Fourth central moment, used for the standard error of the variance.
    pub m4: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Summary {
        let count = xs.len();
        if count == 0 {
            return Summary {
                count,
                mean: f64::NAN,
                variance: f64::NAN,
                m4: f64::NAN,
            };
        }
        let n = count as f64;
        let mean = xs.iter().copied().collect::<CompensatedSum>().value() / n;
        let ss = xs.iter().map(|x| (x - mean).powi(2)).collect::<CompensatedSum>().value();
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).collect::<CompensatedSum>().value() / n;
        let variance = if count > 1 { ss / (n - 1.0) } else { 0.0 };
        Summary {
            count,
            mean,
            variance,
            m4,
        }
    }

    /// Standard error of the mean.
    pub fn mean_stderr(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }

    /// Large-sample standard error of the sample variance.
    pub fn variance_stderr(&self) -> f64 {
        let n = self.count as f64;
        ((self.m4 - self.variance * self.variance * (n - 3.0) / (n - 1.0)) / n)
            .max(0.0)
            .sqrt()
    }
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // P(K <= x) = sqrt(2π)/x Σ exp(-(2k-1)² π² / (8x²))
        let c = -PI * PI / (8.0 * x * x);
        let s: f64 = (1..=20).map(|k| (((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        (1.0 - (2.0 * PI).sqrt() / x * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let term = (-2.0 * (k as f64).powi(2) * x * x).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov-Smirnov test against the continuous CDF `cdf`.
/// The p-value uses the asymptotic law with Stephens' small-sample factor.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> TestOutcome {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    TestOutcome {
        statistic: d,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d),
    }
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestOutcome {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.total_cmp(q));
    ys.sort_by(|p, q| p.total_cmp(q));
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    TestOutcome {
        statistic: d,
        p_value: kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d),
    }
}

/// Chi-square homogeneity test for two samples of a discrete variable.
///
/// Categories whose pooled count is below `2 * min_expected` are merged
/// into one overflow category; if that category is itself too small it is
/// merged into the smallest regular category.
pub fn chi_square_two_sample<K: Ord + Clone>(a: &[K], b: &[K], min_expected: f64) -> ChiSquareOutcome {
    let mut table: BTreeMap<K, (f64, f64)> = BTreeMap::new();
    for k in a {
        table.entry(k.clone()).or_default().0 += 1.0;
    }
    for k in b {
        table.entry(k.clone()).or_default().1 += 1.0;
    }
    let floor = 2.0 * min_expected;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut overflow = (0.0, 0.0);
    for &(x, y) in table.values() {
        if x + y < floor {
            overflow.0 += x;
            overflow.1 += y;
        } else {
            cells.push((x, y));
        }
    }
    if overflow.0 + overflow.1 > 0.0 {
        if overflow.0 + overflow.1 >= floor || cells.is_empty() {
            cells.push(overflow);
        } else {
            let smallest = cells
                .iter_mut()
                .min_by(|p, q| (p.0 + p.1).total_cmp(&(q.0 + q.1)))
                .expect("non-empty");
            smallest.0 += overflow.0;
            smallest.1 += overflow.1;
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let statistic: f64 = cells
        .iter()
        .map(|&(x, y)| (ka * x - kb * y).powi(2) / (x + y))
        .sum();
    let dof = cells.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).expect("positive dof").sf(statistic)
    };
    ChiSquareOutcome {
        statistic,
        p_value,
        dof,
        cells: cells.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub dof: usize,
    pub cells: usize,
}

/// Two-sided p-value of a standard normal z score.
pub fn normal_two_sided_p(z: f64) -> f64 {
    use statrs::distribution::Normal;
    if !z.is_finite() {
        return 0.0;
    }
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * std.sf(z.abs())).min(1.0)
}
