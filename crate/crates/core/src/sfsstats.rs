//! Site frequency spectrum of a sampled genealogy and the asymptotic
//! constants of its law of large numbers and central limit theorem.

use serde::{Deserialize, Serialize};

use crate::bdmath::RateParams;
use crate::coalescent::{DescendantIndex, MarkedTree};
use crate::{Error, Result};

/// Reproduction-event and mutation counts by the number of sampled
/// descendants `k = 1..n-1`.
///
/// Events whose descendants cover the whole sample are not polymorphic and
/// are kept apart in `r_all` / `m_all`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SfsReport {
    pub n: usize,
    #[serde(rename = "R")]
    r: Vec<u64>,
    #[serde(rename = "M")]
    m: Vec<u64>,
    #[serde(rename = "R_ge2")]
    pub r_ge2: u64,
    #[serde(rename = "M_ge2")]
    pub m_ge2: u64,
    #[serde(rename = "R_all")]
    pub r_all: u64,
    #[serde(rename = "M_all")]
    pub m_all: u64,
}

impl SfsReport {
    pub fn empty(n: usize) -> SfsReport {
        SfsReport {
            n,
            r: vec![0; n.saturating_sub(1)],
            m: vec![0; n.saturating_sub(1)],
            r_ge2: 0,
            m_ge2: 0,
            r_all: 0,
            m_all: 0,
        }
    }

    /// Records one reproduction event with `k` sampled descendants carrying
    /// `multiplicity` mutations. `k = 0` (invisible in the sample) is ignored.
    pub fn record(&mut self, k: usize, multiplicity: u64) {
        debug_assert!(k <= self.n);
        if k == 0 {
            return;
        }
        if k >= self.n {
            self.r_all += 1;
            self.m_all += multiplicity;
            return;
        }
        self.r[k - 1] += 1;
        self.m[k - 1] += multiplicity;
        if k >= 2 {
            self.r_ge2 += 1;
            self.m_ge2 += multiplicity;
        }
    }

    /// `R^k`, zero outside `1..n-1`.
    pub fn r(&self, k: usize) -> u64 {
        if k == 0 {
            return 0;
        }
        self.r.get(k - 1).copied().unwrap_or(0)
    }

    /// `M^k`, zero outside `1..n-1`.
    pub fn m(&self, k: usize) -> u64 {
        if k == 0 {
            return 0;
        }
        self.m.get(k - 1).copied().unwrap_or(0)
    }

    /// `(R^1..R^{n-1})`
    pub fn r_spectrum(&self) -> &[u64] {
        &self.r
    }

    /// `(M^1..M^{n-1})`
    pub fn m_spectrum(&self) -> &[u64] {
        &self.m
    }

    /// CSV rows `k,R_k,M_k` followed by the aggregate row `ge2,R_ge2,M_ge2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,R_k,M_k\n");
        for k in 1..self.n {
            out.push_str(&format!("{k},{},{}\n", self.r(k), self.m(k)));
        }
        out.push_str(&format!("ge2,{},{}\n", self.r_ge2, self.m_ge2));
        out
    }
}

/// Spectrum of a marked coalescent tree: each event contributes to the
/// class of its descendant count.
pub fn sfs_from_marked_tree(marked: &MarkedTree) -> SfsReport {
    let tree = &marked.tree;
    let index = DescendantIndex::new(tree);
    let mut report = SfsReport::empty(tree.n());
    for ev in &marked.events {
        report.record(index.descendants(ev.branch, ev.t), ev.multiplicity);
    }
    report
}

/// `λ / (r k (k-1))`, the limit of `R^k / n`.
pub fn asymptotic_r_mean(params: &RateParams, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be >= 2, got {k}")));
    }
    let k = k as f64;
    Ok(params.lambda() / (params.r() * k * (k - 1.0)))
}

/// Per-leaf centring and variance constants of the central limit theorems
/// for `R^{>=2}` and `M^{>=2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CltConstants {
    pub mean_r: f64,
    pub var_r: f64,
    pub mean_m: f64,
    pub var_m: f64,
}

pub fn asymptotic_clt_params(params: &RateParams) -> CltConstants {
    let ratio = params.lambda() / params.r();
    let nu = params.nu();
    CltConstants {
        mean_r: ratio,
        var_r: ratio * ratio,
        mean_m: ratio * nu,
        var_m: ratio * ratio * nu * nu + ratio * nu,
    }
}
