//! Monte Carlo and quadrature experiments checking the limit laws of the
//! site frequency spectrum and the agreement of the three generators.
//!
//! Replicates run in parallel; replicate `i` always draws from
//! `replicate_rng(seed, domain, i)` and results are collected in index
//! order, so every report is a pure function of its configuration.

pub mod config;
pub mod moments;
pub mod quadrature;
pub mod report;
pub mod stats;

use rayon::prelude::*;

use crate::approx::{r_ge2_terms, r_k_terms, sample_approx};
use crate::bdmath::{delta, RateParams, SamplingFrame};
use crate::coalescent::{place_mutations, sample_tree};
use crate::contour::{contour_population_at_t, simulate_contour};
use crate::forward::{conditioned_forward, sfs_from_genealogy, simulate_forward, ForwardConfig};
use crate::sfsstats::{asymptotic_clt_params, asymptotic_r_mean, sfs_from_marked_tree, SfsReport};
use crate::streams::{domain, replicate_rng};
use crate::{Error, Result};

pub use config::{ExperimentConfig, Mode, TRule};
pub use moments::{verify_calculus_identity, verify_moments};
pub use report::{all_passed, reports_to_csv, reports_to_json, TestReport};

use stats::{chi_square_two_sample, ks_one_sample, normal_two_sided_p, Summary};

/// Significance level of every hypothesis test.
pub const ALPHA: f64 = 0.01;
/// Relative tolerance of the law-of-large-numbers check.
pub const LLN_REL_TOL: f64 = 0.02;
/// Relative tolerance of the variance checks of the central limit theorems.
pub const CLT_VAR_REL_TOL: f64 = 0.10;

fn par_reps<T, F>(reps: usize, seed: u64, dom: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut crate::streams::SimRng) -> Result<T> + Sync + Send,
{
    (0..reps as u64)
        .into_par_iter()
        .map(|i| f(&mut replicate_rng(seed, dom, i)))
        .collect()
}

/// Spectrum of one sampled genealogy drawn by the backward construction.
pub fn coalescent_sfs<R: rand::Rng + ?Sized>(params: &RateParams, frame: &SamplingFrame, rng: &mut R) -> Result<SfsReport> {
    let tree = sample_tree(params, frame, rng)?;
    Ok(sfs_from_marked_tree(&place_mutations(&tree, params, rng)))
}

/// Spectrum of one sampled genealogy drawn forward in time.
pub fn forward_sfs<R: rand::Rng + ?Sized>(params: &RateParams, frame: &SamplingFrame, rng: &mut R) -> Result<SfsReport> {
    let cs = conditioned_forward(params, frame, &ForwardConfig::default(), rng)?;
    Ok(sfs_from_genealogy(&cs.genealogy, &cs.sample))
}

/// Mean of `R^k / n` against `λ / (r k (k-1))`.
pub fn run_lln(config: &ExperimentConfig) -> Result<TestReport> {
    config.require_reps(1)?;
    config.check_lln_regime()?;
    let target = asymptotic_r_mean(&config.params, config.k)?;
    let frame = config.frame()?;
    let (n, k, params) = (config.n, config.k, config.params);
    if k >= n {
        return Err(Error::invalid(format!("k must be below n, got k={k}, n={n}")));
    }
    let values: Vec<f64> = match config.mode {
        Mode::Coalescent => par_reps(config.reps, config.seed, domain::COALESCENT, |rng| {
            Ok(coalescent_sfs(&params, &frame, rng)?.r(k) as f64 / n as f64)
        })?,
        Mode::Approx => par_reps(config.reps, config.seed, domain::APPROX, |rng| {
            let draw = sample_approx(&params, &frame, rng)?;
            Ok(r_k_terms(&params, &draw, k, rng)?.iter().sum::<u64>() as f64 / n as f64)
        })?,
        other => return Err(Error::UnsupportedMode(other.name().into())),
    };
    let s = Summary::of(&values);
    let stderr = s.mean_stderr();
    Ok(TestReport {
        experiment: "lln".into(),
        statistic: format!("mean_R{k}_over_n"),
        estimate: s.mean,
        target,
        stderr,
        p_value: (stderr > 0.0).then(|| normal_two_sided_p((s.mean - target) / stderr)),
        reps: config.reps,
        seed: config.seed,
        passed: (s.mean / target - 1.0).abs() < LLN_REL_TOL,
    })
}

/// Raw `R^{>=2}` and `M^{>=2}` per replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct CltSamples {
    pub n: usize,
    pub r_ge2: Vec<f64>,
    pub m_ge2: Vec<f64>,
}

pub fn clt_samples(config: &ExperimentConfig) -> Result<CltSamples> {
    config.require_reps(2)?;
    config.check_clt_regime()?;
    let frame = config.frame()?;
    let params = config.params;
    if config.n < 3 {
        return Err(Error::invalid("the central limit experiment needs n >= 3"));
    }
    let pairs: Vec<(f64, f64)> = match config.mode {
        Mode::Coalescent => par_reps(config.reps, config.seed, domain::COALESCENT, |rng| {
            let rep = coalescent_sfs(&params, &frame, rng)?;
            Ok((rep.r_ge2 as f64, rep.m_ge2 as f64))
        })?,
        Mode::Approx => par_reps(config.reps, config.seed, domain::APPROX, |rng| {
            let draw = sample_approx(&params, &frame, rng)?;
            let r: u64 = r_ge2_terms(&params, &draw, rng).iter().sum();
            // mutations are Poisson(ν) per event, so their total is Poisson(ν R)
            Ok((r as f64, crate::streams::poisson_count(params.nu() * r as f64, rng) as f64))
        })?,
        other => return Err(Error::UnsupportedMode(other.name().into())),
    };
    let (r_ge2, m_ge2) = pairs.into_iter().unzip();
    Ok(CltSamples {
        n: config.n,
        r_ge2,
        m_ge2,
    })
}

/// `(x - n c) / sqrt(n)` for every replicate.
pub fn standardize(raw: &[f64], n: usize, center_per_leaf: f64) -> Vec<f64> {
    let n = n as f64;
    raw.iter().map(|x| (x - n * center_per_leaf) / n.sqrt()).collect()
}

/// Kolmogorov-Smirnov test of standardized values against `N(0, var)`.
pub fn normal_ks(values: &[f64], var: f64) -> stats::TestOutcome {
    use statrs::distribution::{ContinuousCDF, Normal};
    let law = Normal::new(0.0, var.sqrt()).expect("positive variance");
    ks_one_sample(values, |x| law.cdf(x))
}

fn clt_pair(
    statistic: &str,
    values: &[f64],
    var: f64,
    config: &ExperimentConfig,
) -> [TestReport; 2] {
    let ks = normal_ks(values, var);
    let s = Summary::of(values);
    [
        TestReport {
            experiment: "clt".into(),
            statistic: format!("{statistic}_ks"),
            estimate: ks.statistic,
            target: 0.0,
            stderr: 1.0 / (values.len() as f64).sqrt(),
            p_value: Some(ks.p_value),
            reps: config.reps,
            seed: config.seed,
            passed: ks.p_value > ALPHA,
        },
        TestReport {
            experiment: "clt".into(),
            statistic: format!("{statistic}_var"),
            estimate: s.variance,
            target: var,
            stderr: s.variance_stderr(),
            p_value: None,
            reps: config.reps,
            seed: config.seed,
            passed: (s.variance / var - 1.0).abs() < CLT_VAR_REL_TOL,
        },
    ]
}

/// Normal limits of `R^{>=2}` and, when `ν > 0`, of `M^{>=2}`.
pub fn run_clt(config: &ExperimentConfig) -> Result<Vec<TestReport>> {
    let samples = clt_samples(config)?;
    let c = asymptotic_clt_params(&config.params);
    let mut reports = Vec::new();
    let r_std = standardize(&samples.r_ge2, samples.n, c.mean_r);
    reports.extend(clt_pair("R_ge2", &r_std, c.var_r, config));
    if config.params.nu() > 0.0 {
        let m_std = standardize(&samples.m_ge2, samples.n, c.mean_m);
        reports.extend(clt_pair("M_ge2", &m_std, c.var_m, config));
    }
    Ok(reports)
}

/// Two-sample chi-square on the joint law of `(R^{>=2}, M^{>=2})` from the
/// forward simulation and from the backward construction.
pub fn run_oracle_compare(config: &ExperimentConfig) -> Result<TestReport> {
    config.require_reps(1)?;
    let frame = config.frame()?;
    let params = config.params;
    let joint = |r: &SfsReport| (r.r_ge2, r.m_ge2);
    let forward = par_reps(config.reps, config.seed, domain::FORWARD, |rng| {
        forward_sfs(&params, &frame, rng).map(|r| joint(&r))
    })?;
    let backward = par_reps(config.reps, config.seed, domain::COALESCENT, |rng| {
        coalescent_sfs(&params, &frame, rng).map(|r| joint(&r))
    })?;
    Ok(chi_square_report("oracle", "joint_R_ge2_M_ge2", &forward, &backward, config))
}

/// Same comparison with both arms drawn from the backward construction on
/// independent streams; used to calibrate the test itself.
pub fn run_self_compare(config: &ExperimentConfig) -> Result<TestReport> {
    config.require_reps(1)?;
    let frame = config.frame()?;
    let params = config.params;
    let joint = |r: &SfsReport| (r.r_ge2, r.m_ge2);
    let a = par_reps(config.reps, config.seed, domain::COALESCENT, |rng| {
        coalescent_sfs(&params, &frame, rng).map(|r| joint(&r))
    })?;
    let b = par_reps(config.reps, config.seed, domain::SELF_TEST, |rng| {
        coalescent_sfs(&params, &frame, rng).map(|r| joint(&r))
    })?;
    Ok(chi_square_report("self", "joint_R_ge2_M_ge2", &a, &b, config))
}

fn chi_square_report<K: Ord + Clone>(
    experiment: &str,
    statistic: &str,
    a: &[K],
    b: &[K],
    config: &ExperimentConfig,
) -> TestReport {
    let chi = chi_square_two_sample(a, b, 5.0);
    TestReport {
        experiment: experiment.into(),
        statistic: statistic.into(),
        estimate: chi.statistic,
        target: chi.dof as f64,
        stderr: (2.0 * chi.dof as f64).sqrt(),
        p_value: Some(chi.p_value),
        reps: config.reps,
        seed: config.seed,
        passed: chi.p_value > ALPHA,
    }
}

/// Population at `T` from the contour process against forward simulation:
/// joint law, geometric ratios `P(N > k | N >= k) = 1 - δ_T` for
/// `k = 1..5`, and `E N_T = e^{rT}` for both simulators.
pub fn run_contour_check(params: &RateParams, horizon: f64, reps: usize, seed: u64) -> Result<Vec<TestReport>> {
    if reps == 0 {
        return Err(Error::EmptyExperiment { needed: 1, got: 0 });
    }
    let cap = ForwardConfig::default().event_cap;
    let contour: Vec<usize> = par_reps(reps, seed, domain::CONTOUR, |rng| {
        Ok(contour_population_at_t(&simulate_contour(params, horizon, cap, rng)?))
    })?;
    let forward: Vec<usize> = par_reps(reps, seed, domain::FORWARD, |rng| {
        Ok(simulate_forward(params, horizon, &ForwardConfig::default(), rng)?.population_at_horizon())
    })?;
    let base = |statistic: String| TestReport {
        experiment: "contour".into(),
        statistic,
        estimate: 0.0,
        target: 0.0,
        stderr: 0.0,
        p_value: None,
        reps,
        seed,
        passed: false,
    };
    let chi = chi_square_two_sample(&contour, &forward, 5.0);
    let mut reports = vec![TestReport {
        estimate: chi.statistic,
        target: chi.dof as f64,
        stderr: (2.0 * chi.dof as f64).sqrt(),
        p_value: Some(chi.p_value),
        passed: chi.p_value > ALPHA,
        ..base("population_chi2_vs_forward".into())
    }];

    let ratio_target = 1.0 - delta(params, horizon)?;
    for k in 1..=5usize {
        let at_least = contour.iter().filter(|&&s| s >= k).count() as f64;
        let more = contour.iter().filter(|&&s| s > k).count() as f64;
        let est = if at_least > 0.0 { more / at_least } else { f64::NAN };
        let se = (ratio_target * (1.0 - ratio_target) / at_least).sqrt();
        reports.push(TestReport {
            estimate: est,
            target: ratio_target,
            stderr: se,
            p_value: Some(normal_two_sided_p((est - ratio_target) / se)),
            passed: (est - ratio_target).abs() < 3.0 * se,
            ..base(format!("ratio_k{k}"))
        });
    }

    let mean_target = (params.r() * horizon).exp();
    for (name, sizes) in [("mean_population_contour", &contour), ("mean_population_forward", &forward)] {
        let xs: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
        let s = Summary::of(&xs);
        reports.push(TestReport {
            estimate: s.mean,
            target: mean_target,
            stderr: s.mean_stderr(),
            p_value: Some(normal_two_sided_p((s.mean - mean_target) / s.mean_stderr())),
            passed: (s.mean / mean_target - 1.0).abs() < LLN_REL_TOL,
            ..base(name.into())
        });
    }
    Ok(reports)
}
