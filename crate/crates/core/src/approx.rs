//! Large-`n`, large-`T` approximation of the sampled tree.
//!
//! With `W ~ Exp(1)` and i.i.d. standard logistic `U_i`, the sampling
//! probability is replaced by `n δ_T / W` and the branch lengths by
//! `H_i = T - (ln n + ln(1/W) + U_i) / r`. Event counts are then sums of
//! local terms, each depending on a few neighbouring branches only.
//!
//! Only interior terms are summed: the root branch and, for `R^k`, the last
//! `k` branches are left out.

use std::collections::VecDeque;

use rand::Rng;

use crate::bdmath::{RateParams, SamplingFrame};
use crate::coalescent::thinned_blue_count;
use crate::streams::{exp_wait, open_unit};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxDraw {
    pub n: usize,
    pub horizon: f64,
    pub w: f64,
    /// `U_1..U_{n-1}`
    pub u: Vec<f64>,
    /// `n δ_T / W`, possibly above 1.
    pub y: f64,
    /// `H_0 = T, H_1, .., H_{n-1}`; entries may be negative.
    pub heights: Vec<f64>,
}

impl ApproxDraw {
    /// `y > 1`: the blue intensity is evaluated at `y = 1` instead.
    pub fn y_clamped(&self) -> bool {
        self.y > 1.0
    }
}

/// Standard logistic quantile.
#[inline]
pub fn logistic_quantile(u: f64) -> f64 {
    (u / (1.0 - u)).ln()
}

pub fn logistic_cdf(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn sample_approx<R: Rng + ?Sized>(params: &RateParams, frame: &SamplingFrame, rng: &mut R) -> Result<ApproxDraw> {
    let w = exp_wait(1.0, rng);
    sample_approx_given_w(params, frame, w, rng)
}

/// Same as [`sample_approx`] with `W` held at `w`.
pub fn sample_approx_given_w<R: Rng + ?Sized>(
    params: &RateParams,
    frame: &SamplingFrame,
    w: f64,
    rng: &mut R,
) -> Result<ApproxDraw> {
    let n = frame.n();
    if n < 2 {
        return Err(Error::invalid("the approximation needs n >= 2"));
    }
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::invalid(format!("W must be positive, got {w}")));
    }
    let horizon = frame.horizon();
    let r = params.r();
    let ln_n = (n as f64).ln();
    let y = (ln_n + params.ln_delta(horizon) - w.ln()).exp();
    let u: Vec<f64> = (1..n).map(|_| logistic_quantile(open_unit(rng))).collect();
    let shift = ln_n - w.ln();
    let mut heights = Vec::with_capacity(n);
    heights.push(horizon);
    heights.extend(u.iter().map(|ui| horizon - (shift + ui) / r));
    Ok(ApproxDraw {
        n,
        horizon,
        w,
        u,
        y,
        heights,
    })
}

/// Blue count on `[lo, hi] ∩ [0, T]`.
fn clipped_blue<R: Rng + ?Sized>(params: &RateParams, draw: &ApproxDraw, lo: f64, hi: f64, rng: &mut R) -> u64 {
    thinned_blue_count(params, draw.y.min(1.0), lo.max(0.0), hi.min(draw.horizon), rng)
}

/// Per-branch terms `R^{>=2}_i`, `i = 1..n-2`.
pub fn r_ge2_terms<R: Rng + ?Sized>(params: &RateParams, draw: &ApproxDraw, rng: &mut R) -> Vec<u64> {
    let h = &draw.heights;
    (1..draw.n.saturating_sub(1))
        .map(|i| {
            if h[i + 1] <= h[i] {
                clipped_blue(params, draw, h[i + 1], h[i], rng) + 1
            } else {
                0
            }
        })
        .collect()
}

/// Per-branch terms `R^k_i`, `i = 1..n-k-1`.
pub fn r_k_terms<R: Rng + ?Sized>(params: &RateParams, draw: &ApproxDraw, k: usize, rng: &mut R) -> Result<Vec<u64>> {
    if k < 2 || k >= draw.n {
        return Err(Error::invalid(format!("k must satisfy 2 <= k <= n-1, got k={k}, n={}", draw.n)));
    }
    let h = &draw.heights;
    let last = draw.n - k; // exclusive upper end of i
    let mut out = Vec::with_capacity(last.saturating_sub(1));
    // sliding maximum of H_{i+1}..H_{i+k-1}
    let mut window: VecDeque<usize> = VecDeque::new();
    let mut next = 1;
    for i in 1..last {
        while next < i + k {
            while window.back().is_some_and(|&j| h[j] <= h[next]) {
                window.pop_back();
            }
            window.push_back(next);
            next += 1;
        }
        while window.front().is_some_and(|&j| j <= i) {
            window.pop_front();
        }
        let inner = h[*window.front().expect("window holds k-1 >= 1 entries")];
        let blue = clipped_blue(params, draw, inner, h[i].min(h[i + k]), rng);
        let red = (inner <= h[i] && h[i] <= h[i + k]) as u64;
        out.push(blue + red);
    }
    Ok(out)
}

/// Approximate `R^{>=2}` (root branch excluded). Needs `n >= 3`.
pub fn approx_r_ge2<R: Rng + ?Sized>(params: &RateParams, frame: &SamplingFrame, rng: &mut R) -> Result<u64> {
    if frame.n() < 3 {
        return Err(Error::invalid("approx_r_ge2 needs n >= 3"));
    }
    let draw = sample_approx(params, frame, rng)?;
    Ok(r_ge2_terms(params, &draw, rng).iter().sum())
}

/// Approximate `R^k` (root and last `k` branches excluded).
pub fn approx_r_k<R: Rng + ?Sized>(params: &RateParams, frame: &SamplingFrame, k: usize, rng: &mut R) -> Result<u64> {
    if k < 2 || k >= frame.n() {
        return Err(Error::invalid(format!("k must satisfy 2 <= k <= n-1, got k={k}, n={}", frame.n())));
    }
    let draw = sample_approx(params, frame, rng)?;
    Ok(r_k_terms(params, &draw, k, rng)?.iter().sum())
}

/// One interior term `R^k_i` for sample size `n`: only the `k + 1`
/// branches it depends on are drawn.
pub fn r_k_single_term<R: Rng + ?Sized>(
    params: &RateParams,
    frame: &SamplingFrame,
    k: usize,
    rng: &mut R,
) -> Result<u64> {
    if k < 2 || k + 2 > frame.n() {
        return Err(Error::invalid("need 2 <= k <= n-2 for an interior term"));
    }
    let local = SamplingFrame::new(k + 3, frame.horizon())?;
    let mut draw = sample_approx(params, &local, rng)?;
    // re-centre on the true sample size
    let shift = ((frame.n() as f64) / (local.n() as f64)).ln() / params.r();
    for h in &mut draw.heights[1..] {
        *h -= shift;
    }
    draw.y *= frame.n() as f64 / local.n() as f64;
    draw.n = frame.n();
    // branches 1..=k+1 give exactly the term i = 1
    let h = &draw.heights;
    let inner = h[2..=k].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let blue = clipped_blue(params, &draw, inner, h[1].min(h[1 + k]), rng);
    Ok(blue + (inner <= h[1] && h[1] <= h[1 + k]) as u64)
}

/// Rearranges `ys` to have the same ranks as `xs`: the `j`-th smallest `x`
/// receives the `j`-th smallest `y`.
pub fn order_coupling(xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", xs.len(), ys.len())));
    }
    let mut sorted_y = ys.to_vec();
    sorted_y.sort_by(f64::total_cmp);
    if sorted_y.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DuplicateValues);
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    if order.windows(2).any(|w| xs[w[0]] == xs[w[1]]) {
        return Err(Error::DuplicateValues);
    }
    let mut out = vec![0.0; xs.len()];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = sorted_y[rank];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::stats::{ks_one_sample, Summary};
    use crate::streams::replicate_rng;
    use proptest::prelude::*;

    fn p() -> RateParams {
        RateParams::new(2.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn logistic_quantile_basics() {
        assert_eq!(logistic_quantile(0.5), 0.0);
        for u in [0.01, 0.3, 0.77, 0.999] {
            assert!((logistic_cdf(logistic_quantile(u)) - u).abs() < 1e-14);
        }
    }

    #[test]
    fn logistic_draws_fit_their_law() {
        let frame = SamplingFrame::new(100_001, 30.0).unwrap();
        let draw = sample_approx(&p(), &frame, &mut replicate_rng(1, 0, 0)).unwrap();
        let ks = ks_one_sample(&draw.u, logistic_cdf);
        assert!(ks.statistic < 0.006, "{ks:?}");
    }

    #[test]
    fn straddle_probability_is_a_quarter() {
        let frame = SamplingFrame::new(100_001, 30.0).unwrap();
        let draw = sample_approx(&p(), &frame, &mut replicate_rng(2, 0, 0)).unwrap();
        // disjoint pairs keep the trials independent
        let pairs: Vec<f64> = draw
            .u
            .chunks_exact(2)
            .map(|c| (c[1] >= 0.0 && 0.0 >= c[0]) as u8 as f64)
            .collect();
        let s = Summary::of(&pairs);
        assert!((s.mean - 0.25).abs() < 3.0 * s.mean_stderr(), "{s:?}");
    }

    #[test]
    fn red_indicator_frequencies() {
        let frame = SamplingFrame::new(300_001, 30.0).unwrap();
        let draw = sample_approx(&p(), &frame, &mut replicate_rng(3, 0, 0)).unwrap();
        let h = &draw.heights;
        let halves: Vec<f64> = (1..h.len() - 1).step_by(2).map(|i| (h[i + 1] <= h[i]) as u8 as f64).collect();
        let s = Summary::of(&halves);
        assert!((s.mean - 0.5).abs() < 3.0 * s.mean_stderr());
        let sixths: Vec<f64> = (1..h.len() - 2)
            .step_by(3)
            .map(|i| (h[i + 1] <= h[i] && h[i] <= h[i + 2]) as u8 as f64)
            .collect();
        let s = Summary::of(&sixths);
        assert!((s.mean - 1.0 / 6.0).abs() < 3.0 * s.mean_stderr(), "{s:?}");
    }

    #[test]
    fn single_term_mean_matches_limit() {
        let params = p();
        let n = 10_000;
        let horizon = 3.0 * (n as f64).ln() / params.r();
        let frame = SamplingFrame::new(n, horizon).unwrap();
        let mut rng = replicate_rng(4, 0, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| r_k_single_term(&params, &frame, 2, &mut rng).unwrap() as f64)
            .collect();
        let s = Summary::of(&xs);
        assert!((s.mean - 1.0).abs() < 0.02, "{s:?}");
    }

    #[test]
    fn single_term_agrees_with_full_draw_terms() {
        // a mid-sample term of a full draw has the same law as the local one
        let params = p();
        let n = 500;
        let frame = SamplingFrame::new(n, 2.0 * (n as f64).ln()).unwrap();
        let mut rng = replicate_rng(5, 0, 0);
        let full: Vec<f64> = (0..20_000)
            .map(|_| {
                let d = sample_approx(&params, &frame, &mut rng).unwrap();
                r_k_terms(&params, &d, 3, &mut rng).unwrap()[n / 2] as f64
            })
            .collect();
        let local: Vec<f64> = (0..20_000)
            .map(|_| r_k_single_term(&params, &frame, 3, &mut rng).unwrap() as f64)
            .collect();
        let (a, b) = (Summary::of(&full), Summary::of(&local));
        let se = (a.variance / a.count as f64 + b.variance / b.count as f64).sqrt();
        assert!((a.mean - b.mean).abs() < 4.0 * se, "{a:?} {b:?}");
    }

    #[test]
    fn r_ge2_mean_per_leaf() {
        let params = p();
        let n = 2000;
        let frame = SamplingFrame::new(n, 2.0 * (n as f64).ln() / params.r()).unwrap();
        let xs: Vec<f64> = (0..200)
            .map(|i| approx_r_ge2(&params, &frame, &mut replicate_rng(6, 0, i)).unwrap() as f64 / n as f64)
            .collect();
        let s = Summary::of(&xs);
        assert!((s.mean / 2.0 - 1.0).abs() < 0.02, "{s:?}");
    }

    #[test]
    fn counts_ignore_nu() {
        let frame = SamplingFrame::new(300, 12.0).unwrap();
        let a = approx_r_ge2(&p(), &frame, &mut replicate_rng(7, 0, 0)).unwrap();
        let b = approx_r_ge2(&p().with_nu(5.0).unwrap(), &frame, &mut replicate_rng(7, 0, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn index_ranges() {
        let frame = SamplingFrame::new(5, 3.0).unwrap();
        let mut rng = replicate_rng(8, 0, 0);
        assert_eq!(approx_r_k(&p(), &frame, 4, &mut rng).unwrap(), 0);
        assert!(approx_r_k(&p(), &frame, 5, &mut rng).is_err());
        assert!(approx_r_k(&p(), &frame, 1, &mut rng).is_err());
        assert!(approx_r_ge2(&p(), &SamplingFrame::new(2, 3.0).unwrap(), &mut rng).is_err());
        let d = sample_approx(&p(), &frame, &mut rng).unwrap();
        assert_eq!(r_ge2_terms(&p(), &d, &mut rng).len(), 3);
        assert_eq!(r_k_terms(&p(), &d, 2, &mut rng).unwrap().len(), 2);
    }

    #[test]
    fn sliding_maximum_matches_direct_window() {
        // the red indicators are deterministic given the heights
        let params = RateParams::new(1e-12, 0.0, 0.0).unwrap();
        let frame = SamplingFrame::new(200, 5.0).unwrap();
        let mut rng = replicate_rng(9, 0, 0);
        for _ in 0..20 {
            let d = sample_approx(&params, &frame, &mut rng).unwrap();
            let h = &d.heights;
            for k in 2..8 {
                let got = r_k_terms(&params, &d, k, &mut rng).unwrap();
                for (idx, &v) in got.iter().enumerate() {
                    let i = idx + 1;
                    let inner = h[i + 1..i + k].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    assert_eq!(v, (inner <= h[i] && h[i] <= h[i + k]) as u64);
                }
            }
        }
    }

    #[test]
    fn far_terms_are_uncorrelated_given_w() {
        let params = p();
        let n = 40;
        let frame = SamplingFrame::new(n, 2.0 * (n as f64).ln()).unwrap();
        let reps = 20_000;
        let mut rng = replicate_rng(10, 0, 0);
        let (mut a, mut b) = (Vec::with_capacity(reps), Vec::with_capacity(reps));
        for _ in 0..reps {
            let d = sample_approx_given_w(&params, &frame, 1.0, &mut rng).unwrap();
            let terms = r_ge2_terms(&params, &d, &mut rng);
            a.push(terms[10] as f64);
            b.push(terms[12] as f64);
        }
        let (sa, sb) = (Summary::of(&a), Summary::of(&b));
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - sa.mean) * (y - sb.mean)).sum::<f64>() / (reps as f64 - 1.0);
        let rho = cov / (sa.variance * sb.variance).sqrt();
        assert!(rho.abs() < 3.0 / (reps as f64).sqrt(), "{rho}");
    }

    #[test]
    fn clamp_is_flagged() {
        let frame = SamplingFrame::new(1000, 0.5).unwrap();
        let d = sample_approx_given_w(&p(), &frame, 1e-3, &mut replicate_rng(11, 0, 0)).unwrap();
        assert!(d.y_clamped());
        assert!(d.heights[1..].iter().all(|&h| h < 0.5));
    }

    #[test]
    fn coupling_hand_case() {
        assert_eq!(order_coupling(&[3.0, 1.0, 2.0], &[10.0, 30.0, 20.0]).unwrap(), vec![30.0, 10.0, 20.0]);
        assert_eq!(order_coupling(&[1.0, 2.0, 3.0], &[5.0, 4.0, 6.0]).unwrap(), vec![4.0, 5.0, 6.0]);
        assert!(matches!(order_coupling(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::DuplicateValues)));
        assert!(matches!(order_coupling(&[1.0, 2.0], &[3.0, 3.0]), Err(Error::DuplicateValues)));
        assert!(order_coupling(&[1.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn coupling_is_an_order_preserving_permutation(
            pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..50)
        ) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            match order_coupling(&xs, &ys) {
                Ok(out) => {
                    let (mut a, mut b) = (out.clone(), ys.clone());
                    a.sort_by(f64::total_cmp);
                    b.sort_by(f64::total_cmp);
                    prop_assert_eq!(a, b);
                    for i in 0..xs.len() {
                        for j in 0..xs.len() {
                            prop_assert_eq!(xs[i] <= xs[j], out[i] <= out[j]);
                        }
                    }
                    let l1 = |v: &[f64]| xs.iter().zip(v).map(|(x, y)| (x - y).abs()).sum::<f64>();
                    prop_assert!(l1(&out) <= l1(&ys) + 1e-9);
                }
                Err(Error::DuplicateValues) => {}
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
