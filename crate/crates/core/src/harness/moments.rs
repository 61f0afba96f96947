//! Limit moments of the per-branch event counts of the approximation.
//!
//! With `v = e^s / (1 + e^s)` (the logistic CDF) every ordering probability
//! of neighbouring `U`'s is a polynomial in `v`, `ds = dv / (v (1 - v))`,
//! and the limiting blue intensity `μ + r / (1 + e^{-s})` is `μ + r v`.
//! All integrals below are evaluated by adaptive quadrature in `v` and
//! compared to their closed forms.

use std::f64::consts::PI;

use crate::bdmath::RateParams;
use crate::harness::quadrature::{integrate, integrate_half_line, integrate_real_line, QuadOptions};
use crate::harness::report::TestReport;
use crate::{Error, Result};

/// Agreement required between quadrature and closed form.
pub const MOMENT_TOL: f64 = 1e-8;
pub const IDENTITY_TOL: f64 = 1e-10;

fn opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_intervals: 2000,
    }
}

/// `∫_0^1 f(v) dv / (v (1 - v))`, i.e. an integral over `s ∈ ℝ`.
fn over_s<F: Fn(f64) -> f64>(f: F) -> Result<f64> {
    Ok(integrate(|v| f(v) / (v * (1.0 - v)), 0.0, 1.0, opts())?.value)
}

/// `∫∫_{s2 < s1} f(v1, v2) ds2 ds1`, nested quadrature.
fn over_s_pairs<F: Fn(f64, f64) -> f64>(f: F) -> Result<f64> {
    let mut inner_err: Option<Error> = None;
    let outer = integrate(
        |v1| {
            let inner = integrate(|v2| f(v1, v2) / (v2 * (1.0 - v2)), 0.0, v1, opts());
            match inner {
                Ok(q) => q.value / (v1 * (1.0 - v1)),
                Err(e) => {
                    inner_err.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        1.0,
        opts(),
    );
    if let Some(e) = inner_err {
        return Err(e);
    }
    Ok(outer?.value)
}

/// Quadrature values of the limit moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitMoments {
    pub red_mean: f64,
    pub blue_mean: f64,
    pub blue_second: f64,
    pub red_red_next: f64,
    pub red_blue_next: f64,
    pub blue_red_next: f64,
    pub blue_blue_next: f64,
}

impl LimitMoments {
    pub fn mean(&self) -> f64 {
        self.red_mean + self.blue_mean
    }

    /// `Var R_i = E[red] + 2 E[red blue] + E[blue^2] - (E R_i)^2`; blue
    /// events only occur when the red indicator is 1, so `E[red blue] =
    /// E[blue]`.
    pub fn variance(&self) -> f64 {
        self.red_mean + 2.0 * self.blue_mean + self.blue_second - self.mean().powi(2)
    }

    pub fn covariance(&self) -> f64 {
        self.red_red_next + self.red_blue_next + self.blue_red_next + self.blue_blue_next - self.mean().powi(2)
    }

    pub fn per_leaf_variance(&self) -> f64 {
        self.variance() + 2.0 * self.covariance()
    }
}

pub fn limit_moments(params: &RateParams) -> Result<LimitMoments> {
    let (mu, r) = (params.mu(), params.r());
    let g = |v: f64| mu + r * v;
    // single branches: red_i = 1{U_i <= U_{i+1}}; blue on U_i <= s <= U_{i+1}
    let red_mean = over_s(|v| v * v * (1.0 - v))?; // ∫ F f ds, f = v(1-v)
    let blue_mean = over_s(|v| v * (1.0 - v) * g(v))? / r;
    // two blue points s2 < s1 both inside [U_i, U_{i+1}]: F(s2)(1 - F(s1))
    let blue_pairs = over_s_pairs(|v1, v2| v2 * (1.0 - v1) * g(v1) * g(v2))?;
    let blue_second = 2.0 * blue_pairs / (r * r) + blue_mean;
    // neighbouring branches
    let red_red_next = over_s(|v| v * (1.0 - v) * v * (1.0 - v))?; // ∫ F (1-F) f ds
    let red_blue_next = over_s(|v| 0.5 * v * v * (1.0 - v) * g(v))? / r;
    let blue_red_next = over_s(|v| 0.5 * v * (1.0 - v) * (1.0 - v) * g(v))? / r;
    // U_i <= s2 <= U_{i+1} <= s1 <= U_{i+2}
    let blue_blue_next = over_s_pairs(|v1, v2| v2 * (v1 - v2) * (1.0 - v1) * g(v1) * g(v2))? / (r * r);
    Ok(LimitMoments {
        red_mean,
        blue_mean,
        blue_second,
        red_red_next,
        red_blue_next,
        blue_red_next,
        blue_blue_next,
    })
}

/// Closed forms of the same constants, in the order of [`verify_moments`].
pub fn closed_forms(params: &RateParams) -> [(&'static str, f64); 8] {
    let (mu, r, lambda) = (params.mu(), params.r(), params.lambda());
    let z = PI * PI / 6.0;
    let m = mu / r;
    [
        ("blue_mean", m + 0.5),
        ("blue_second_moment", 2.0 / (r * r) * (z * mu * mu + z * mu * r + 0.5 * r * r) + m + 0.5),
        ("variance", (PI * PI / 3.0 - 1.0) * m * m + (PI * PI / 3.0 + 1.0) * m + 2.0),
        ("red_blue_next", mu / (4.0 * r) + 1.0 / 6.0),
        ("blue_red_next", mu / (4.0 * r) + 1.0 / 12.0),
        ("blue_blue_next", ((2.0 - z) * mu * mu + (2.0 - z) * mu * r + r * r / 12.0) / (r * r)),
        ("covariance", (1.0 - z) * m * m + (0.5 - z) * m - 0.5),
        ("per_leaf_variance", (lambda / r).powi(2)),
    ]
}

/// Quadrature against closed form for every limit constant of the
/// variance computation.
pub fn verify_moments(params: &RateParams) -> Result<Vec<TestReport>> {
    let q = limit_moments(params)?;
    let numeric = [
        q.blue_mean,
        q.blue_second,
        q.variance(),
        q.red_blue_next,
        q.blue_red_next,
        q.blue_blue_next,
        q.covariance(),
        q.per_leaf_variance(),
    ];
    Ok(closed_forms(params)
        .iter()
        .zip(numeric)
        .map(|(&(name, target), estimate)| {
            let diff = (estimate - target).abs();
            TestReport {
                experiment: "moments".into(),
                statistic: name.into(),
                estimate,
                target,
                stderr: diff,
                p_value: None,
                reps: 0,
                seed: 0,
                passed: diff <= MOMENT_TOL,
            }
        })
        .collect())
}

/// `Σ_{k=0}^m (-1)^{m-k} C(m,k) / (n-k-1)`
pub fn binomial_sum(m: usize, n: usize) -> f64 {
    let mut binom = 1.0;
    let mut total = 0.0;
    for k in 0..=m {
        let sign = if (m - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign * binom / (n - k - 1) as f64;
        binom = binom * (m - k) as f64 / (k + 1) as f64;
    }
    total
}

/// `ln(1 + e^s)` without overflow.
fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

/// Checks `∫_ℝ e^{(m+1)s} / (1+e^s)^n ds = ∫_0^∞ x^m / (1+x)^n dx` against
/// the alternating binomial sum. The report carries the larger deviation.
pub fn verify_calculus_identity(m: usize, n: usize) -> Result<TestReport> {
    if n < 2 || m > n - 2 {
        return Err(Error::invalid(format!("need 0 <= m <= n-2, got m={m}, n={n}")));
    }
    let tight = QuadOptions::with_abs_tol(1e-13);
    let s_form = integrate_real_line(|s| ((m + 1) as f64 * s - n as f64 * softplus(s)).exp(), tight)?.value;
    let x_form = integrate_half_line(|x| x.powi(m as i32) / (1.0 + x).powi(n as i32), tight)?.value;
    let target = binomial_sum(m, n);
    let dev = (s_form - target).abs().max((x_form - target).abs());
    Ok(TestReport {
        experiment: "identity".into(),
        statistic: format!("m={m},n={n}"),
        estimate: if (s_form - target).abs() >= (x_form - target).abs() { s_form } else { x_form },
        target,
        stderr: dev,
        p_value: None,
        reps: 0,
        seed: 0,
        passed: dev <= IDENTITY_TOL,
    })
}
