//! Backward construction of the sampled genealogy.
//!
//! A tree of `n` sampled leaves is encoded by its branch lengths
//! `H_0 = T, H_1, .., H_{n-1}`: leaf `i` hangs off the closest branch to its
//! left that is taller than itself. Reproduction events are marked points on
//! the branches: one *red* event at every coalescence `H_i` (`i >= 1`) and
//! *blue* events, births whose offspring left no sampled descendant, along
//! each branch at rate `λ q(y, t)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bdmath::{sample_h_many, sample_y, RateParams, SamplingFrame};
use crate::streams::{exp_wait, open_unit, poisson_count};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CoalescentTree {
    horizon: f64,
    y: f64,
    heights: Vec<f64>,
}

impl CoalescentTree {
    /// `heights[0]` must equal `horizon`; the others lie strictly inside
    /// `(0, horizon)` and are pairwise distinct.
    pub fn from_heights(horizon: f64, y: f64, heights: Vec<f64>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!("sampling time must be positive, got {horizon}")));
        }
        if !(y > 0.0 && y <= 1.0) {
            return Err(Error::invalid(format!("y must lie in (0, 1], got {y}")));
        }
        match heights.first() {
            Some(&h0) if h0 == horizon => {}
            _ => return Err(Error::invalid("heights must start with H_0 = T")),
        }
        if let Some(h) = heights[1..].iter().find(|&&h| !(h > 0.0 && h < horizon)) {
            return Err(Error::invalid(format!("branch length {h} outside (0, T)")));
        }
        topology_from_heights(&heights)?;
        Ok(CoalescentTree { horizon, y, heights })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Realized sampling probability.
    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    /// Sample size.
    pub fn n(&self) -> usize {
        self.heights.len()
    }

    pub fn parents(&self) -> Vec<Option<usize>> {
        topology_from_heights(&self.heights).expect("validated on construction")
    }
}

/// Draws `Y` from its law, then `H_1..H_{n-1}` i.i.d. given `Y`.
pub fn sample_tree<R: Rng + ?Sized>(
    params: &RateParams,
    frame: &SamplingFrame,
    rng: &mut R,
) -> Result<CoalescentTree> {
    let horizon = frame.horizon();
    let y = sample_y(params, frame, rng);
    let mut heights = Vec::with_capacity(frame.n());
    heights.push(horizon);
    heights.extend(sample_h_many(params, horizon, y, frame.n() - 1, rng)?);
    CoalescentTree::from_heights(horizon, y, heights)
}

/// `parent(i) = max{j < i : H_j > H_i}` for `i >= 1`; `None` for the root
/// branch. One pass with a stack of strictly decreasing heights.
pub fn topology_from_heights(heights: &[f64]) -> Result<Vec<Option<usize>>> {
    let mut parents = Vec::with_capacity(heights.len());
    let mut stack: Vec<usize> = Vec::new();
    for (i, &h) in heights.iter().enumerate() {
        while let Some(&top) = stack.last() {
            if heights[top] > h {
                break;
            }
            if heights[top] == h {
                return Err(Error::HeightTie { first: top, second: i });
            }
            stack.pop();
        }
        parents.push(stack.last().copied());
        stack.push(i);
    }
    // ties with entries popped earlier are not seen by the stack
    let mut sorted: Vec<(f64, usize)> = heights.iter().copied().zip(0..).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
        let (a, b) = (w[0].1.min(w[1].1), w[0].1.max(w[1].1));
        return Err(Error::HeightTie { first: a, second: b });
    }
    Ok(parents)
}

/// Number of sampled leaves supported by a reproduction event at time `t`
/// before sampling on branch `branch`: `k = min{j >= 1 : i + j = n or
/// H_{i+j} > t}`. The event supports leaves `i..i+k-1`.
///
/// Linear scan; [`DescendantIndex`] answers the same query in `O(log n)`.
pub fn descendants_of_event(tree: &CoalescentTree, branch: usize, t: f64) -> usize {
    let h = tree.heights();
    let mut k = 1;
    while branch + k < h.len() && h[branch + k] <= t {
        k += 1;
    }
    k
}

/// Sparse table of range maxima over the heights.
#[derive(Debug, Clone)]
pub struct DescendantIndex {
    /// `levels[l][j] = max(H_j .. H_{j + 2^l - 1})`
    levels: Vec<Vec<f64>>,
    n: usize,
}

impl DescendantIndex {
    pub fn new(tree: &CoalescentTree) -> Self {
        let base = tree.heights().to_vec();
        let n = base.len();
        let mut levels = vec![base];
        let mut width = 1;
        while 2 * width <= n {
            let prev = levels.last().expect("non-empty");
            let next: Vec<f64> = (0..=n - 2 * width)
                .map(|j| prev[j].max(prev[j + width]))
                .collect();
            levels.push(next);
            width *= 2;
        }
        DescendantIndex { levels, n }
    }

    /// Same as [`descendants_of_event`].
    pub fn descendants(&self, branch: usize, t: f64) -> usize {
        // advance over maximal blocks whose heights all stay <= t
        let mut pos = branch + 1;
        for l in (0..self.levels.len()).rev() {
            let width = 1 << l;
            if pos + width <= self.n && self.levels[l][pos] <= t {
                pos += width;
            }
        }
        pos - branch
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Blue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationEvent {
    pub branch: usize,
    /// Time before sampling.
    pub t: f64,
    pub color: Color,
    #[serde(rename = "mult")]
    pub multiplicity: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkedTree {
    pub tree: CoalescentTree,
    pub events: Vec<MutationEvent>,
}

#[derive(Serialize)]
struct MarkedTreeJson<'a> {
    #[serde(rename = "T")]
    horizon: f64,
    n: usize,
    y: f64,
    heights: &'a [f64],
    events: &'a [MutationEvent],
}

impl MarkedTree {
    /// Checks every event against the tree.
    pub fn validate(&self) -> Result<()> {
        let h = self.tree.heights();
        for ev in &self.events {
            let ok = match ev.color {
                Color::Blue => ev.branch < h.len() && ev.t > 0.0 && ev.t < h[ev.branch],
                Color::Red => ev.branch >= 1 && ev.branch < h.len() && ev.t == h[ev.branch],
            };
            if !ok {
                return Err(Error::invalid(format!("event {ev:?} does not fit the tree")));
            }
        }
        Ok(())
    }

    /// `{T, n, y, heights, events: [{branch, t, color, mult}]}`
    pub fn to_json(&self) -> Result<String> {
        let doc = MarkedTreeJson {
            horizon: self.tree.horizon(),
            n: self.tree.n(),
            y: self.tree.y(),
            heights: self.tree.heights(),
            events: &self.events,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Newick string of the sample genealogy with branch lengths. Leaves are
    /// named `s<i>`; the mutation count carried by each edge is attached as
    /// a `[&mutations=m]` comment.
    pub fn to_newick(&self) -> String {
        let h = self.tree.heights();
        let n = h.len();
        let parents = self.tree.parents();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(i);
            }
        }
        let mut events: Vec<Vec<(f64, u64)>> = vec![Vec::new(); n];
        for ev in &self.events {
            events[ev.branch].push((ev.t, ev.multiplicity));
        }
        let carried = |branch: usize, lo: f64, hi: f64| -> u64 {
            events[branch]
                .iter()
                .filter(|&&(t, _)| t > lo && t <= hi)
                .map(|&(_, m)| m)
                .sum()
        };
        // children have larger indices, so a reverse sweep builds subtrees bottom-up
        let mut built: Vec<Option<(String, f64)>> = vec![None; n];
        for i in (0..n).rev() {
            let mut kids = std::mem::take(&mut children[i]);
            kids.sort_by(|&a, &b| h[a].total_cmp(&h[b]));
            let mut node = format!("s{i}");
            let mut top = 0.0;
            for c in kids {
                let (sub, sub_top) = built[c].take().expect("child built first");
                let at = h[c];
                node = format!(
                    "({node}[&mutations={}]:{},{sub}[&mutations={}]:{})",
                    carried(i, top, at),
                    at - top,
                    carried(c, sub_top, at),
                    at - sub_top,
                );
                top = at;
            }
            built[i] = Some((node, top));
        }
        let (root, top) = built[0].take().expect("root built");
        format!(
            "{root}[&mutations={}]:{};",
            carried(0, top, self.tree.horizon()),
            self.tree.horizon() - top
        )
    }
}

/// Accepted times of a rate-`λ` Poisson process on `(lo, hi)` thinned with
/// acceptance probability `q(y, t)`, in increasing order. `y` is clamped to
/// 1 (callers that can produce `y > 1` count that themselves).
pub fn thinned_blue_times<R: Rng + ?Sized>(
    params: &RateParams,
    y: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Vec<f64> {
    let mut out = Vec::new();
    if !(hi > lo) {
        return out;
    }
    let y = y.min(1.0);
    let mut t = lo;
    loop {
        t += exp_wait(params.lambda(), rng);
        if t >= hi {
            return out;
        }
        if open_unit(rng) < params.q_raw(y, t) {
            out.push(t);
        }
    }
}

/// Number of accepted points of [`thinned_blue_times`], without collecting
/// them.
pub(crate) fn thinned_blue_count<R: Rng + ?Sized>(
    params: &RateParams,
    y: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> u64 {
    let mut count = 0;
    if !(hi > lo) {
        return count;
    }
    let y = y.min(1.0);
    let mut t = lo;
    loop {
        t += exp_wait(params.lambda(), rng);
        if t >= hi {
            return count;
        }
        if open_unit(rng) < params.q_raw(y, t) {
            count += 1;
        }
    }
}

/// Blue events on every branch over `(0, H_i)`, a red event at each `H_i`
/// for `i >= 1`, each with a `Poisson(ν)` number of mutations.
pub fn place_mutations<R: Rng + ?Sized>(tree: &CoalescentTree, params: &RateParams, rng: &mut R) -> MarkedTree {
    let mut events = Vec::new();
    for (branch, &h) in tree.heights().iter().enumerate() {
        for t in thinned_blue_times(params, tree.y(), 0.0, h, rng) {
            events.push(MutationEvent {
                branch,
                t,
                color: Color::Blue,
                multiplicity: poisson_count(params.nu(), rng),
            });
        }
        if branch >= 1 {
            events.push(MutationEvent {
                branch,
                t: h,
                color: Color::Red,
                multiplicity: poisson_count(params.nu(), rng),
            });
        }
    }
    MarkedTree {
        tree: tree.clone(),
        events,
    }
}
