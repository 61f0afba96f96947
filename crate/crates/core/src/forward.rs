//! Exact forward simulation of the birth-death genealogy.
//!
//! The population starts from one individual at time 0. With `N` alive, the
//! next event comes after an `Exp((λ + μ) N)` wait; it is a birth with
//! probability `λ / (λ + μ)` (a uniformly chosen parent spawns a child
//! carrying `Poisson(ν)` fresh mutations) and otherwise the death of a
//! uniformly chosen individual. Mutation ids are globally unique.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bdmath::{RateParams, SamplingFrame};
use crate::sfsstats::SfsReport;
use crate::streams::{exp_wait, poisson_count};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub id: usize,
    pub parent: Option<usize>,
    #[serde(rename = "birth")]
    pub birth_time: f64,
    /// `None` when alive at the sampling time (or at extinction of the rest).
    #[serde(rename = "death")]
    pub death_time: Option<f64>,
    /// Mutations acquired at the individual's own birth.
    pub mutations: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genealogy {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub individuals: Vec<Individual>,
    #[serde(skip)]
    pub next_mutation_id: u64,
}

impl Genealogy {
    pub fn alive_at_horizon(&self) -> impl Iterator<Item = usize> + '_ {
        self.individuals
            .iter()
            .filter(|ind| ind.death_time.is_none())
            .map(|ind| ind.id)
    }

    pub fn population_at_horizon(&self) -> usize {
        self.alive_at_horizon().count()
    }

    /// JSON export `{T, individuals: [{id, parent, birth, death, mutations}]}`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleIds(Vec<usize>);

impl SampleIds {
    /// Validates distinctness and that every id is alive at the horizon.
    pub fn new(genealogy: &Genealogy, ids: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; genealogy.individuals.len()];
        for &id in &ids {
            let ind = genealogy
                .individuals
                .get(id)
                .ok_or_else(|| Error::invalid(format!("unknown individual {id}")))?;
            if ind.death_time.is_some() {
                return Err(Error::invalid(format!("individual {id} is not alive at T")));
            }
            if std::mem::replace(&mut seen[id], true) {
                return Err(Error::invalid(format!("individual {id} sampled twice")));
            }
        }
        Ok(SampleIds(ids))
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Safety limits for supercritical growth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForwardConfig {
    pub event_cap: u64,
    pub rejection_budget: u64,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig {
            event_cap: 10_000_000,
            rejection_budget: 100_000,
        }
    }
}

pub fn simulate_forward<R: Rng + ?Sized>(
    params: &RateParams,
    horizon: f64,
    config: &ForwardConfig,
    rng: &mut R,
) -> Result<Genealogy> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid(format!("sampling time must be positive, got {horizon}")));
    }
    let total_rate = params.lambda() + params.mu();
    let p_birth = params.lambda() / total_rate;

    let mut individuals = vec![Individual {
        id: 0,
        parent: None,
        birth_time: 0.0,
        death_time: None,
        mutations: Vec::new(),
    }];
    let mut alive: Vec<usize> = vec![0];
    let mut next_mutation_id = 0u64;
    let mut now = 0.0;
    let mut events = 0u64;

    while !alive.is_empty() {
        now += exp_wait(total_rate * alive.len() as f64, rng);
        if now >= horizon {
            break;
        }
        events += 1;
        if events > config.event_cap {
            return Err(Error::EventCapExceeded {
                cap: config.event_cap,
            });
        }
        let slot = rng.random_range(0..alive.len());
        if rng.random::<f64>() < p_birth {
            let id = individuals.len();
            let count = poisson_count(params.nu(), rng);
            let mutations = (next_mutation_id..next_mutation_id + count).collect();
            next_mutation_id += count;
            individuals.push(Individual {
                id,
                parent: Some(alive[slot]),
                birth_time: now,
                death_time: None,
                mutations,
            });
            alive.push(id);
        } else {
            individuals[alive[slot]].death_time = Some(now);
            alive.swap_remove(slot);
        }
    }

    Ok(Genealogy {
        horizon,
        individuals,
        next_mutation_id,
    })
}

#[derive(Debug, Clone)]
pub struct ConditionedSample {
    pub genealogy: Genealogy,
    pub sample: SampleIds,
    /// Number of trajectories simulated, the accepted one included.
    pub attempts: u64,
}

/// Resimulates until at least `n` individuals are alive at `T`, then draws
/// `n` of them uniformly without replacement.
pub fn conditioned_forward<R: Rng + ?Sized>(
    params: &RateParams,
    frame: &SamplingFrame,
    config: &ForwardConfig,
    rng: &mut R,
) -> Result<ConditionedSample> {
    for attempt in 1..=config.rejection_budget {
        let genealogy = simulate_forward(params, frame.horizon(), config, rng)?;
        let alive: Vec<usize> = genealogy.alive_at_horizon().collect();
        if alive.len() >= frame.n() {
            let ids = sample_indices(rng, alive.len(), frame.n())
                .into_iter()
                .map(|i| alive[i])
                .collect();
            return Ok(ConditionedSample {
                genealogy,
                sample: SampleIds(ids),
                attempts: attempt,
            });
        }
    }
    Err(Error::RejectionBudgetExceeded {
        n: frame.n(),
        attempts: config.rejection_budget,
    })
}

/// Spectrum of the sample under the child-gets-mutations convention: every
/// birth event is classified by the number of sampled individuals in the
/// clade of the child (the child itself included).
pub fn sfs_from_genealogy(genealogy: &Genealogy, sample: &SampleIds) -> SfsReport {
    let inds = &genealogy.individuals;
    let mut clade = vec![0usize; inds.len()];
    for &id in sample.ids() {
        clade[id] += 1;
    }
    // parents precede children, so one reverse sweep is a post-order pass
    for id in (1..inds.len()).rev() {
        if let Some(parent) = inds[id].parent {
            clade[parent] += clade[id];
        }
    }
    let mut report = SfsReport::empty(sample.len());
    for ind in inds.iter().skip(1) {
        report.record(clade[ind.id], ind.mutations.len() as u64);
    }
    report
}
