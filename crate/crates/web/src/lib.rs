//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON document (or an error message) so the page
//! can draw it on a canvas without further bindings.

use bdsfs::coalescent::{place_mutations, sample_tree, Color};
use bdsfs::contour::{contour_population_at_t, simulate_contour};
use bdsfs::harness::coalescent_sfs;
use bdsfs::sfsstats::asymptotic_r_mean;
use bdsfs::streams::{domain, replicate_rng};
use bdsfs::{RateParams, SamplingFrame};
use serde_json::json;
use wasm_bindgen::prelude::*;

const CONTOUR_CAP: u64 = 200_000;
/// Keeps the page responsive.
const MAX_WORK: f64 = 5e6;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// One sampled tree: heights, parent links and mutational events.
pub fn tree_json(lambda: f64, mu: f64, nu: f64, n: usize, horizon: f64, seed: u64) -> Result<String, String> {
    let params = RateParams::new(lambda, mu, nu).map_err(err)?;
    let frame = SamplingFrame::new(n, horizon).map_err(err)?;
    if n > 2000 {
        return Err("n above 2000 is too large to draw".into());
    }
    let mut rng = replicate_rng(seed, domain::COALESCENT, 0);
    let tree = sample_tree(&params, &frame, &mut rng).map_err(err)?;
    let marked = place_mutations(&tree, &params, &mut rng);
    let events: Vec<_> = marked
        .events
        .iter()
        .map(|e| json!({"branch": e.branch, "t": e.t, "red": e.color == Color::Red, "mult": e.multiplicity}))
        .collect();
    Ok(json!({
        "T": horizon,
        "y": tree.y(),
        "heights": tree.heights(),
        "parents": tree.parents(),
        "events": events,
        "newick": marked.to_newick(),
    })
    .to_string())
}

/// Mean of `R^k / n` over `reps` trees next to its large-`n` limit.
pub fn spectrum_json(lambda: f64, mu: f64, n: usize, horizon: f64, reps: usize, seed: u64) -> Result<String, String> {
    let params = RateParams::new(lambda, mu, 0.0).map_err(err)?;
    let frame = SamplingFrame::new(n, horizon).map_err(err)?;
    if n < 3 || reps == 0 {
        return Err("need n >= 3 and at least one replicate".into());
    }
    if (n as f64) * (reps as f64) * lambda * horizon > MAX_WORK {
        return Err("n * reps * lambda * T is too large for the browser".into());
    }
    let mut sums = vec![0.0; n - 1];
    for i in 0..reps as u64 {
        let rep = coalescent_sfs(&params, &frame, &mut replicate_rng(seed, domain::COALESCENT, i)).map_err(err)?;
        for (k, s) in sums.iter_mut().enumerate() {
            *s += rep.r(k + 1) as f64;
        }
    }
    let kmax = (n - 1).min(30);
    let rows: Vec<_> = (2..=kmax)
        .map(|k| {
            json!({
                "k": k,
                "mean": sums[k - 1] / (reps as f64 * n as f64),
                "limit": asymptotic_r_mean(&params, k).unwrap_or(f64::NAN),
            })
        })
        .collect();
    Ok(json!({"n": n, "T": horizon, "reps": reps, "rows": rows}).to_string())
}

/// One contour path with its population count at `T`.
pub fn contour_json(lambda: f64, mu: f64, horizon: f64, seed: u64) -> Result<String, String> {
    let params = RateParams::new(lambda, mu, 0.0).map_err(err)?;
    let path = simulate_contour(&params, horizon, CONTOUR_CAP, &mut replicate_rng(seed, domain::CONTOUR, 0)).map_err(err)?;
    let mut points = vec![(0.0, path.start_level)];
    for j in &path.jumps {
        points.push((j.search_length, j.level_before));
        points.push((j.search_length, j.level_before + j.size));
    }
    points.push((path.absorbed_at, 0.0));
    Ok(json!({
        "T": horizon,
        "population": contour_population_at_t(&path),
        "individuals": path.individuals(),
        "points": points,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn sample_tree_json(lambda: f64, mu: f64, nu: f64, n: u32, horizon: f64, seed: u32) -> Result<String, JsValue> {
    tree_json(lambda, mu, nu, n as usize, horizon, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn mean_spectrum_json(lambda: f64, mu: f64, n: u32, horizon: f64, reps: u32, seed: u32) -> Result<String, JsValue> {
    spectrum_json(lambda, mu, n as usize, horizon, reps as usize, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn contour_path_json(lambda: f64, mu: f64, horizon: f64, seed: u32) -> Result<String, JsValue> {
    contour_json(lambda, mu, horizon, seed as u64).map_err(|e| JsValue::from_str(&e))
}
