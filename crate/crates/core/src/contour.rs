//! Contour-process encoding of the genealogy truncated at time `T`.
//!
//! Walking the planar tree depth-first, the distance from the root drifts
//! down at unit speed and jumps up by the (truncated) lifespan of every
//! child met on the way. Births are met at rate `λ` per unit of exposure,
//! lifespans are `Exp(μ)`, and the walk stops when it returns to level 0.
//! Every jump is one individual; every visit to level `T` is one individual
//! alive at the sampling time.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bdmath::RateParams;
use crate::streams::exp_wait;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourJump {
    /// Exposure accumulated before the jump.
    pub search_length: f64,
    pub level_before: f64,
    pub size: f64,
    /// The jump was cut at `T`, i.e. the newborn is alive at the horizon.
    pub hits_horizon: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourPath {
    pub horizon: f64,
    pub start_level: f64,
    pub start_at_horizon: bool,
    pub jumps: Vec<ContourJump>,
    /// Total exposure when the path hits 0.
    pub absorbed_at: f64,
}

impl ContourPath {
    /// Individuals in the truncated tree (the root plus one per jump).
    pub fn individuals(&self) -> usize {
        self.jumps.len() + 1
    }

    /// `(search_length, level)` corners of the path, for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("search_length,level\n");
        out.push_str(&format!("0,{}\n", self.start_level));
        for j in &self.jumps {
            out.push_str(&format!("{},{}\n", j.search_length, j.level_before));
            out.push_str(&format!("{},{}\n", j.search_length, j.level_before + j.size));
        }
        out.push_str(&format!("{},0\n", self.absorbed_at));
        out
    }
}

/// Lifespan `min(room, ξ)` with `ξ ~ Exp(μ)`, and whether it was cut.
/// `μ = 0` means nobody dies.
pub fn truncated_lifespan<R: Rng + ?Sized>(mu: f64, room: f64, rng: &mut R) -> (f64, bool) {
    if mu <= 0.0 {
        return (room, true);
    }
    let xi = exp_wait(mu, rng);
    if xi >= room {
        (room, true)
    } else {
        (xi, false)
    }
}

pub fn simulate_contour<R: Rng + ?Sized>(
    params: &RateParams,
    horizon: f64,
    event_cap: u64,
    rng: &mut R,
) -> Result<ContourPath> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid(format!("sampling time must be positive, got {horizon}")));
    }
    let (start_level, start_at_horizon) = truncated_lifespan(params.mu(), horizon, rng);
    let mut level = start_level;
    let mut search = 0.0;
    let mut jumps = Vec::new();
    loop {
        let gap = exp_wait(params.lambda(), rng);
        if gap >= level {
            search += level;
            break;
        }
        search += gap;
        level -= gap;
        if jumps.len() as u64 >= event_cap {
            return Err(Error::EventCapExceeded { cap: event_cap });
        }
        let (size, hits_horizon) = truncated_lifespan(params.mu(), horizon - level, rng);
        jumps.push(ContourJump {
            search_length: search,
            level_before: level,
            size,
            hits_horizon,
        });
        // set exactly, never through accumulated rounding
        level = if hits_horizon { horizon } else { level + size };
    }
    Ok(ContourPath {
        horizon,
        start_level,
        start_at_horizon,
        jumps,
        absorbed_at: search,
    })
}

/// Number of visits to level `T`, which is the population alive at `T`.
pub fn contour_population_at_t(path: &ContourPath) -> usize {
    path.start_at_horizon as usize + path.jumps.iter().filter(|j| j.hits_horizon).count()
}
