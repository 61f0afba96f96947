//! End-to-end use of the public API: generators feeding the spectrum.

use bdsfs::approx::{r_k_terms, sample_approx};
use bdsfs::coalescent::{place_mutations, sample_tree, Color};
use bdsfs::contour::{contour_population_at_t, simulate_contour};
use bdsfs::forward::{conditioned_forward, sfs_from_genealogy, ForwardConfig};
use bdsfs::harness::stats::Summary;
use bdsfs::harness::{coalescent_sfs, forward_sfs};
use bdsfs::sfsstats::sfs_from_marked_tree;
use bdsfs::streams::{domain, replicate_rng};
use bdsfs::{RateParams, SamplingFrame};

#[test]
fn spectrum_totals_match_event_list() {
    let p = RateParams::new(3.0, 1.0, 1.5).unwrap();
    let frame = SamplingFrame::new(40, 6.0).unwrap();
    for i in 0..50 {
        let mut rng = replicate_rng(11, domain::COALESCENT, i);
        let tree = sample_tree(&p, &frame, &mut rng).unwrap();
        let marked = place_mutations(&tree, &p, &mut rng);
        marked.validate().unwrap();
        let sfs = sfs_from_marked_tree(&marked);
        let events = marked.events.len() as u64;
        let muts: u64 = marked.events.iter().map(|e| e.multiplicity).sum();
        // every event supports between 1 and n leaves
        assert_eq!(sfs.r_spectrum().iter().sum::<u64>() + sfs.r_all, events);
        assert_eq!(sfs.m_spectrum().iter().sum::<u64>() + sfs.m_all, muts);
        assert_eq!(sfs.r_spectrum().iter().skip(1).sum::<u64>(), sfs.r_ge2);
        let reds = marked.events.iter().filter(|e| e.color == Color::Red).count();
        assert_eq!(reds, 39);
    }
}

#[test]
fn forward_and_backward_agree_class_by_class() {
    // mean R^k for every k at n = 4 from both generators, 4 standard errors
    let p = RateParams::new(2.0, 1.0, 0.0).unwrap();
    let frame = SamplingFrame::new(4, 2.0).unwrap();
    let reps = 20_000;
    let fwd: Vec<_> = (0..reps)
        .map(|i| forward_sfs(&p, &frame, &mut replicate_rng(5, domain::FORWARD, i)).unwrap())
        .collect();
    let bwd: Vec<_> = (0..reps)
        .map(|i| coalescent_sfs(&p, &frame, &mut replicate_rng(5, domain::COALESCENT, i)).unwrap())
        .collect();
    for k in 1..4 {
        let a = Summary::of(&fwd.iter().map(|s| s.r(k) as f64).collect::<Vec<_>>());
        let b = Summary::of(&bwd.iter().map(|s| s.r(k) as f64).collect::<Vec<_>>());
        let se = (a.mean_stderr().powi(2) + b.mean_stderr().powi(2)).sqrt();
        assert!((a.mean - b.mean).abs() < 4.0 * se, "k={k}: {} vs {} (se {se})", a.mean, b.mean);
    }
}

#[test]
fn forward_sample_spectrum_is_consistent() {
    let p = RateParams::new(2.0, 0.5, 1.0).unwrap();
    let frame = SamplingFrame::new(6, 2.5).unwrap();
    let mut rng = replicate_rng(2, domain::FORWARD, 0);
    let cs = conditioned_forward(&p, &frame, &ForwardConfig::default(), &mut rng).unwrap();
    assert_eq!(cs.sample.len(), 6);
    assert!(cs.genealogy.population_at_horizon() >= 6);
    let sfs = sfs_from_genealogy(&cs.genealogy, &cs.sample);
    assert_eq!(sfs.r_spectrum().len(), 5);
    let v: serde_json::Value = serde_json::from_str(&cs.genealogy.to_json().unwrap()).unwrap();
    assert_eq!(v["T"], 2.5);
}

#[test]
fn approximation_and_exact_tree_share_the_limit() {
    let p = RateParams::new(2.0, 1.0, 0.0).unwrap();
    let n = 4000;
    let frame = SamplingFrame::new(n, 2.0 * (n as f64).ln()).unwrap();
    let exact: Vec<f64> = (0..10)
        .map(|i| coalescent_sfs(&p, &frame, &mut replicate_rng(8, domain::COALESCENT, i)).unwrap().r(2) as f64 / n as f64)
        .collect();
    let approx: Vec<f64> = (0..10)
        .map(|i| {
            let mut rng = replicate_rng(8, domain::APPROX, i);
            let draw = sample_approx(&p, &frame, &mut rng).unwrap();
            r_k_terms(&p, &draw, 2, &mut rng).unwrap().iter().sum::<u64>() as f64 / n as f64
        })
        .collect();
    let (a, b) = (Summary::of(&exact).mean, Summary::of(&approx).mean);
    assert!((a - 1.0).abs() < 0.05 && (b - 1.0).abs() < 0.05, "{a} {b}");
}

#[test]
fn immortal_contour_counts_every_individual() {
    // without deaths every individual is alive at T
    let p = RateParams::new(1.0, 0.0, 0.0).unwrap();
    for i in 0..200 {
        let path = simulate_contour(&p, 1.5, 1_000_000, &mut replicate_rng(4, domain::CONTOUR, i)).unwrap();
        assert_eq!(contour_population_at_t(&path), path.individuals());
    }
}
