//! Closed-form quantities of the linear birth-death process and exact
//! inverse-transform samplers for the sampling probability and the branch
//! lengths of the sampled coalescent tree.
//!
//! Notation used in the docs: `λ` birth rate, `μ` death rate, `r = λ - μ`,
//! `δ_t = r / (λ e^{rt} - μ)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::streams::open_unit;
use crate::{Error, Result};

/// Birth rate, death rate and mean number of mutations per birth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    lambda: f64,
    mu: f64,
    nu: f64,
}

impl RateParams {
    /// Rejects anything but the supercritical regime `λ > μ ≥ 0` with `ν ≥ 0`.
    pub fn new(lambda: f64, mu: f64, nu: f64) -> Result<Self> {
        if !(lambda.is_finite() && mu.is_finite() && nu.is_finite()) {
            return Err(Error::invalid("rates must be finite"));
        }
        if mu < 0.0 {
            return Err(Error::invalid(format!("death rate must be >= 0, got {mu}")));
        }
        if lambda <= mu {
            return Err(Error::invalid(format!(
                "process must be supercritical (lambda > mu), got lambda={lambda}, mu={mu}"
            )));
        }
        if nu < 0.0 {
            return Err(Error::invalid(format!("mutation mean must be >= 0, got {nu}")));
        }
        Ok(RateParams { lambda, mu, nu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Net growth rate `λ - μ`.
    pub fn r(&self) -> f64 {
        self.lambda - self.mu
    }

    /// Same rates with a different mutation mean.
    pub fn with_nu(&self, nu: f64) -> Result<Self> {
        RateParams::new(self.lambda, self.mu, nu)
    }

    /// `ln δ_t`, evaluated without forming `e^{rt}`.
    pub(crate) fn ln_delta(&self, t: f64) -> f64 {
        let r = self.r();
        // λ e^{rt} - μ = λ e^{rt} (1 - (μ/λ) e^{-rt})
        let ln_denom = r * t + self.lambda.ln() + (-(self.mu / self.lambda) * (-r * t).exp()).ln_1p();
        r.ln() - ln_denom
    }

    pub(crate) fn delta_raw(&self, t: f64) -> f64 {
        self.ln_delta(t).exp()
    }

    /// `P(N_t > 0) = δ_t e^{rt} = r / (λ - μ e^{-rt})`.
    pub(crate) fn survival_raw(&self, t: f64) -> f64 {
        self.r() / (self.lambda - self.mu * (-self.r() * t).exp())
    }

    /// `q(y, t) = F_t(1 - y)` without argument checks.
    pub(crate) fn q_raw(&self, y: f64, t: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        let em = (-self.r() * t).exp();
        // P(N_t = 0) = 1 - δ_t e^{rt}, written to stay accurate as t → 0
        let extinct = self.mu * (-(-self.r() * t).exp_m1()) / (self.lambda - self.mu * em);
        let surv = self.survival_raw(t);
        let d = self.delta_raw(t);
        let tail = surv * d * (1.0 - y) / (d + y * (1.0 - d));
        clamp_probability(extinct + tail)
    }
}

/// Sample size and sampling time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingFrame {
    n: usize,
    horizon: f64,
}

impl SamplingFrame {
    pub fn new(n: usize, horizon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("sample size must be >= 1"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!("sampling time must be positive, got {horizon}")));
        }
        Ok(SamplingFrame { n, horizon })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sampling time `T`.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
}

const PROB_SLACK: f64 = 1e-12;

#[inline]
pub(crate) fn clamp_probability(p: f64) -> f64 {
    debug_assert!(
        p > -PROB_SLACK && p < 1.0 + PROB_SLACK,
        "probability {p} outside [0, 1] beyond rounding"
    );
    p.clamp(0.0, 1.0)
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn check_unit(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// `δ_t = r / (λ e^{rt} - μ)`: the probability that a single ancestor has
/// no second lineage by time `t`; strictly decreasing from `δ_0 = 1`.
pub fn delta(params: &RateParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(clamp_probability(params.delta_raw(t)))
}

/// Probability that a birth `t` time units before sampling leaves no
/// descendant in a Bernoulli(`y`) sample.
pub fn q_prob(params: &RateParams, y: f64, t: f64) -> Result<f64> {
    check_unit("y", y)?;
    check_time(t)?;
    Ok(params.q_raw(y, t))
}

/// Density of the sampling probability `Y_{n,T}`.
pub fn y_density(params: &RateParams, frame: &SamplingFrame, y: f64) -> f64 {
    if !(0.0..1.0).contains(&y) || y == 0.0 {
        return 0.0;
    }
    let a = params.delta_raw(frame.horizon);
    let n = frame.n as f64;
    let base = (1.0 - a) * y + a;
    n * a * y.powf(n - 1.0) / base.powf(n + 1.0)
}

/// CDF of `Y_{n,T}`: `(y / ((1-a) y + a))^n` with `a = δ_T`.
pub fn y_cdf(params: &RateParams, frame: &SamplingFrame, y: f64) -> Result<f64> {
    check_unit("y", y)?;
    let a = params.delta_raw(frame.horizon);
    let ratio = (y / ((1.0 - a) * y + a)).min(1.0);
    Ok(clamp_probability(ratio.powf(frame.n as f64)))
}

/// Inverse of [`y_cdf`] at `u ∈ (0, 1]`.
pub fn y_quantile(params: &RateParams, frame: &SamplingFrame, u: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::invalid(format!("u must lie in (0, 1], got {u}")));
    }
    let a = params.delta_raw(frame.horizon);
    let lu = u.ln() / frame.n as f64;
    let v = lu.exp();
    let one_minus_v = -lu.exp_m1();
    Ok(clamp_probability(a * v / (one_minus_v + a * v)))
}

pub fn sample_y<R: Rng + ?Sized>(params: &RateParams, frame: &SamplingFrame, rng: &mut R) -> f64 {
    y_quantile(params, frame, open_unit(rng)).expect("open_unit lies in (0, 1)")
}

/// Density of a branch length `H_{i,n,T}` given `Y_{n,T} = y`.
pub fn h_density(params: &RateParams, horizon: f64, y: f64, t: f64) -> f64 {
    if !(t > 0.0 && t < horizon) {
        return 0.0;
    }
    let r = params.r();
    let b = y * params.lambda;
    let c = r - b;
    let norm = (b + c * (-r * horizon).exp()) / (b * (-(-r * horizon).exp_m1()));
    let g = b + c * (-r * t).exp();
    norm * b * r * r * (-r * t).exp() / (g * g)
}

struct BranchLaw {
    r: f64,
    b: f64,
    c: f64,
    degenerate: bool,
    /// `1 - e^{-rT}`
    span: f64,
    /// `g(T) = b + c e^{-rT}`
    g_top: f64,
}

impl BranchLaw {
    fn new(params: &RateParams, horizon: f64, y: f64) -> Result<Self> {
        if !(y > 0.0 && y <= 1.0) {
            return Err(Error::invalid(format!("y must lie in (0, 1], got {y}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!("sampling time must be positive, got {horizon}")));
        }
        let r = params.r();
        let b = y * params.lambda;
        let c = r - b;
        let em = (-r * horizon).exp();
        Ok(BranchLaw {
            r,
            b,
            c,
            degenerate: c.abs() < 1e-9 * r,
            span: -(-r * horizon).exp_m1(),
            g_top: self_g(b, r, em),
        })
    }

    fn cdf(&self, t: f64) -> f64 {
        let em = (-self.r * t).exp();
        let rise = -(-self.r * t).exp_m1();
        if self.degenerate {
            return clamp_probability(rise / self.span);
        }
        clamp_probability(self.g_top * rise / (self.span * self_g(self.b, self.r, em)))
    }

    fn quantile(&self, u: f64) -> f64 {
        if self.degenerate {
            // truncated exponential
            return -(u * (-self.span)).ln_1p() / self.r;
        }
        // u = g(T)(1 - x) / (span (b + c x)) with x = e^{-rt}
        let k = u * self.span / self.g_top;
        -(-k * self.r / (1.0 + k * self.c)).ln_1p() / self.r
    }
}

/// `g(t) = b + c e^{-rt} = b (1 - e^{-rt}) + r e^{-rt}`, always positive.
#[inline]
fn self_g(b: f64, r: f64, em: f64) -> f64 {
    b * (1.0 - em) + r * em
}

/// CDF of `H_{i,n,T}` given `Y_{n,T} = y`, clamped to 0 below the support
/// and 1 above it.
pub fn h_cdf(params: &RateParams, horizon: f64, y: f64, t: f64) -> Result<f64> {
    let law = BranchLaw::new(params, horizon, y)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    if t >= horizon {
        return Ok(1.0);
    }
    Ok(law.cdf(t))
}

/// Inverse of [`h_cdf`] at `u ∈ [0, 1]`.
pub fn h_quantile(params: &RateParams, horizon: f64, y: f64, u: f64) -> Result<f64> {
    check_unit("u", u)?;
    let law = BranchLaw::new(params, horizon, y)?;
    Ok(law.quantile(u).clamp(0.0, horizon))
}

pub fn sample_h<R: Rng + ?Sized>(params: &RateParams, horizon: f64, y: f64, rng: &mut R) -> Result<f64> {
    let law = BranchLaw::new(params, horizon, y)?;
    Ok(law.quantile(open_unit(rng)).clamp(0.0, horizon))
}

/// Draws `count` i.i.d. branch lengths sharing one `y`.
pub fn sample_h_many<R: Rng + ?Sized>(
    params: &RateParams,
    horizon: f64,
    y: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let law = BranchLaw::new(params, horizon, y)?;
    Ok((0..count)
        .map(|_| law.quantile(open_unit(rng)).clamp(0.0, horizon))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::quadrature::{integrate, QuadOptions};
    use crate::harness::stats::ks_one_sample;
    use crate::streams::replicate_rng;
    use proptest::prelude::*;

    fn p21() -> RateParams {
        RateParams::new(2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn params_reject_non_supercritical() {
        assert!(RateParams::new(1.0, 1.0, 0.0).is_err());
        assert!(RateParams::new(1.0, 2.0, 0.0).is_err());
        assert!(RateParams::new(2.0, -0.1, 0.0).is_err());
        assert!(RateParams::new(2.0, 1.0, -1.0).is_err());
        assert!(RateParams::new(f64::NAN, 1.0, 0.0).is_err());
        assert!(SamplingFrame::new(0, 1.0).is_err());
        assert!(SamplingFrame::new(3, 0.0).is_err());
    }

    #[test]
    fn delta_values() {
        let p = p21();
        assert_eq!(delta(&p, 0.0).unwrap(), 1.0);
        assert!((delta(&p, 2f64.ln()).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(delta(&p, f64::INFINITY).is_err());
        assert!(delta(&p, f64::NAN).is_err());
        // e^{rt} overflows here; the log form does not
        let far = delta(&p, 800.0).unwrap();
        assert!(far >= 0.0 && far < 1e-300);
        assert!(p.ln_delta(800.0).is_finite());
    }

    #[test]
    fn delta_solves_its_integral_equation() {
        // δ_t = exp(-∫_0^t λ e^{rs} δ_s ds)
        let p = p21();
        let t = 50.0;
        let integral = integrate(
            |s| p.lambda() * (p.r() * s + p.ln_delta(s)).exp(),
            0.0,
            t,
            QuadOptions::with_abs_tol(1e-11),
        )
        .unwrap();
        assert!((p.ln_delta(t) + integral.value).abs() < 1e-9);
        let d = delta(&p, t).unwrap();
        assert!(((-integral.value).exp() - d).abs() <= 1e-9 * d);
    }

    #[test]
    fn q_prob_values() {
        let p = p21();
        for t in [0.0, 0.5, 3.0, 40.0] {
            assert_eq!(q_prob(&p, 0.0, t).unwrap(), 1.0);
        }
        assert!((q_prob(&p, 0.3, 0.0).unwrap() - 0.7).abs() < 1e-15);
        assert!((q_prob(&p, 0.3, 40.0).unwrap() - 0.5).abs() < 1e-6);
        assert!(q_prob(&p, 1.1, 1.0).is_err());
        assert!(q_prob(&p, -0.1, 1.0).is_err());
    }

    #[test]
    fn q_prob_matches_generating_function_series() {
        // F_t(s) = P(N_t=0) + Σ_k P(N_t=k) s^k with the geometric law of N_t
        let p = p21();
        for &(y, t) in &[(0.2f64, 0.7), (0.9, 2.0), (0.05, 5.0)] {
            let d = delta(&p, t).unwrap();
            let surv = d * (p.r() * t).exp();
            let mut series = 1.0 - surv;
            for k in 1..2000 {
                series += surv * d * (1.0 - d).powi(k - 1) * (1.0 - y).powi(k);
            }
            assert!((series - q_prob(&p, y, t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn y_cdf_total_mass_and_density() {
        let p = p21();
        let frame = SamplingFrame::new(7, 1.3).unwrap();
        assert!((y_cdf(&p, &frame, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((y_cdf(&p, &frame, 1.0 - 1e-12).unwrap() - 1.0).abs() < 1e-9);
        // central finite differences against the density, 100 grid points
        for i in 1..=100 {
            let y = i as f64 / 101.0;
            let h = 1e-6;
            let fd = (y_cdf(&p, &frame, y + h).unwrap() - y_cdf(&p, &frame, y - h).unwrap()) / (2.0 * h);
            let dens = y_density(&p, &frame, y);
            assert!((fd - dens).abs() < 1e-9 * dens.max(1.0), "y={y}: {fd} vs {dens}");
        }
    }

    #[test]
    fn y_density_integrates_to_one() {
        let p = p21();
        for (n, t) in [(1, 0.5), (5, 2.0), (40, 4.0)] {
            let frame = SamplingFrame::new(n, t).unwrap();
            let q = integrate(|y| y_density(&p, &frame, y), 0.0, 1.0, QuadOptions::with_abs_tol(1e-10)).unwrap();
            assert!((q.value - 1.0).abs() < 1e-8, "n={n}: {}", q.value);
        }
    }

    #[test]
    fn h_density_integrates_to_one_and_matches_cdf() {
        let p = p21();
        for &(horizon, y) in &[(2.0, 0.1), (1.0, 0.9), (6.0, 1e-3), (3.0, 0.5)] {
            let q = integrate(|t| h_density(&p, horizon, y, t), 0.0, horizon, QuadOptions::with_abs_tol(1e-11)).unwrap();
            assert!((q.value - 1.0).abs() < 1e-8);
            for frac in [0.1, 0.37, 0.8] {
                let t = frac * horizon;
                let part = integrate(|s| h_density(&p, horizon, y, s), 0.0, t, QuadOptions::with_abs_tol(1e-12)).unwrap();
                assert!((part.value - h_cdf(&p, horizon, y, t).unwrap()).abs() < 1e-10);
            }
            assert_eq!(h_cdf(&p, horizon, y, horizon).unwrap(), 1.0);
        }
    }

    #[test]
    fn h_degenerate_branch_is_truncated_exponential() {
        // yλ = r gives c = 0
        let p = p21();
        let horizon = 2.0;
        let y0 = p.r() / p.lambda();
        let r = p.r();
        for t in [0.1, 0.9, 1.7] {
            let trunc = r * (-r * t).exp() / (1.0 - (-r * horizon).exp());
            assert!((h_density(&p, horizon, y0, t) - trunc).abs() < 1e-12);
            let cdf = (1.0 - (-r * t).exp()) / (1.0 - (-r * horizon).exp());
            assert!((h_cdf(&p, horizon, y0, t).unwrap() - cdf).abs() < 1e-14);
        }
        // both sides of the switch agree with quadrature of the density
        for y in [y0 - 1e-6, y0 + 1e-6, y0 + 1e-10] {
            let t = 0.8;
            let part = integrate(|s| h_density(&p, horizon, y, s), 0.0, t, QuadOptions::with_abs_tol(1e-12)).unwrap();
            assert!((part.value - h_cdf(&p, horizon, y, t).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn inverse_transform_roundtrips() {
        let p = p21();
        let mut rng = replicate_rng(11, 0, 0);
        let frame = SamplingFrame::new(25, 3.0).unwrap();
        for _ in 0..10_000 {
            let u = open_unit(&mut rng);
            let y = y_quantile(&p, &frame, u).unwrap();
            assert!((y_cdf(&p, &frame, y).unwrap() - u).abs() < 1e-10);
            let t = h_quantile(&p, 3.0, 0.2, u).unwrap();
            assert!((h_cdf(&p, 3.0, 0.2, t).unwrap() - u).abs() < 1e-10);
        }
    }

    #[test]
    fn samplers_match_their_cdfs() {
        let p = p21();
        let mut rng = replicate_rng(12, 0, 0);
        let frame = SamplingFrame::new(4, 2.0).unwrap();
        let ys: Vec<f64> = (0..100_000).map(|_| sample_y(&p, &frame, &mut rng)).collect();
        let ks = ks_one_sample(&ys, |y| y_cdf(&p, &frame, y).unwrap());
        assert!(ks.statistic < 0.006, "{ks:?}");
        let hs: Vec<f64> = (0..100_000).map(|_| sample_h(&p, 2.0, 0.1, &mut rng).unwrap()).collect();
        let ks = ks_one_sample(&hs, |t| h_cdf(&p, 2.0, 0.1, t).unwrap());
        assert!(ks.statistic < 0.006, "{ks:?}");
    }

    proptest! {
        #[test]
        fn q_prob_is_a_probability_nonincreasing_in_y(
            lambda in 0.1f64..5.0, frac in 0.0f64..0.99, y1 in 0.0f64..1.0, y2 in 0.0f64..1.0, t in 0.0f64..60.0
        ) {
            let p = RateParams::new(lambda, lambda * frac, 0.0).unwrap();
            let (lo, hi) = if y1 <= y2 { (y1, y2) } else { (y2, y1) };
            let q_lo = q_prob(&p, lo, t).unwrap();
            let q_hi = q_prob(&p, hi, t).unwrap();
            prop_assert!((0.0..=1.0).contains(&q_lo));
            prop_assert!(q_hi <= q_lo + 1e-12);
        }

        #[test]
        fn delta_is_decreasing_probability(lambda in 0.1f64..5.0, frac in 0.0f64..0.99, t in 0.0f64..100.0, dt in 1e-3f64..5.0) {
            let p = RateParams::new(lambda, lambda * frac, 0.0).unwrap();
            let a = delta(&p, t).unwrap();
            let b = delta(&p, t + dt).unwrap();
            prop_assert!(a > 0.0 || t * p.r() > 700.0);
            prop_assert!(a <= 1.0);
            prop_assert!(b < a || a == 0.0);
            let surv = p.survival_raw(t);
            prop_assert!(surv > 0.0 && surv <= 1.0 + 1e-15);
        }
    }
}
