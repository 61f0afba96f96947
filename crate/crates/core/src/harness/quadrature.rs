//! Globally adaptive Gauss-Kronrod (10/21 point) integration.
//!
//! Intervals are kept in a max-heap keyed by their error estimate; the worst
//! interval is bisected until the summed error meets the tolerance. The
//! rule never evaluates the endpoints, so integrable endpoint singularities
//! (log or algebraic) are handled by repeated bisection.

use std::collections::BinaryHeap;

use crate::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            rel_tol: 0.0,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_err: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Piece {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut gauss = 0.0;
    let mut kronrod = fc * WGK[10];
    for j in 0..10 {
        let x = half * XGK[j];
        let pair = f(center - x) + f(center + x);
        kronrod += WGK[j] * pair;
        // odd Kronrod nodes are the Gauss nodes
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    Piece { a, b, value, err }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<Quadrature> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("integration limits must be finite"));
    }
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            abs_err: 0.0,
            intervals: 0,
        });
    }
    let first = kronrod21(&mut f, a, b);
    let mut value = first.value;
    let mut err = first.err;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    let done = |v: f64, e: f64| e <= opts.abs_tol.max(opts.rel_tol * v.abs());
    while !done(value, err) {
        if heap.len() >= opts.max_intervals {
            break;
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // interval cannot be split further in binary64
            heap.push(worst);
            break;
        }
        let left = kronrod21(&mut f, worst.a, mid);
        let right = kronrod21(&mut f, mid, worst.b);
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }
    // re-sum to shed the drift of the running updates
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let err: f64 = heap.iter().map(|p| p.err).sum();
    if !value.is_finite() || !done(value, err) {
        return Err(Error::QuadratureNotConverged {
            estimate: value,
            abs_err: err,
        });
    }
    Ok(Quadrature {
        value,
        abs_err: err,
        intervals: heap.len(),
    })
}

/// Integrates `f` over the whole real line through the logistic map
/// `v = e^s / (1 + e^s)`, which sends ℝ onto (0, 1) with
/// `ds = dv / (v (1 - v))`.
pub fn integrate_real_line<F: FnMut(f64) -> f64>(mut f: F, opts: QuadOptions) -> Result<Quadrature> {
    integrate(
        |v| {
            let s = (v / (1.0 - v)).ln();
            f(s) / (v * (1.0 - v))
        },
        0.0,
        1.0,
        opts,
    )
}

/// Integrates `f` over `[0, ∞)` by splitting at 1 and folding the tail
/// with `x = 1/u`.
pub fn integrate_half_line<F: FnMut(f64) -> f64>(mut f: F, opts: QuadOptions) -> Result<Quadrature> {
    let half = QuadOptions {
        abs_tol: 0.5 * opts.abs_tol,
        ..opts
    };
    let head = integrate(&mut f, 0.0, 1.0, half)?;
    let tail = integrate(|u| f(1.0 / u) / (u * u), 0.0, 1.0, half)?;
    Ok(Quadrature {
        value: head.value + tail.value,
        abs_err: head.abs_err + tail.abs_err,
        intervals: head.intervals + tail.intervals,
    })
}
