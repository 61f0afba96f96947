use bdsfs_web::{contour_json, spectrum_json, tree_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn same_seed_same_document() {
    assert_eq!(tree_json(2.0, 1.0, 1.0, 20, 5.0, 7), tree_json(2.0, 1.0, 1.0, 20, 5.0, 7));
    assert_ne!(tree_json(2.0, 1.0, 1.0, 20, 5.0, 7), tree_json(2.0, 1.0, 1.0, 20, 5.0, 8));
}

#[test]
fn tree_parents_point_left_to_taller_branches() {
    let v = parse(tree_json(3.0, 1.0, 0.5, 30, 4.0, 1).unwrap());
    let h: Vec<f64> = v["heights"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (i, p) in v["parents"].as_array().unwrap().iter().enumerate().skip(1) {
        let p = p.as_u64().unwrap() as usize;
        assert!(p < i && h[p] > h[i]);
    }
    for e in v["events"].as_array().unwrap() {
        let b = e["branch"].as_u64().unwrap() as usize;
        assert!(e["t"].as_f64().unwrap() <= h[b]);
    }
}

#[test]
fn spectrum_means_approach_their_limits() {
    let v = parse(spectrum_json(2.0, 1.0, 400, 12.0, 40, 3).unwrap());
    for row in v["rows"].as_array().unwrap().iter().take(3) {
        let (mean, limit) = (row["mean"].as_f64().unwrap(), row["limit"].as_f64().unwrap());
        assert!((mean / limit - 1.0).abs() < 0.1, "{row}");
    }
}

#[test]
fn bad_input_is_reported_not_panicked() {
    assert!(spectrum_json(2.0, 1.0, 2, 5.0, 10, 1).is_err());
    assert!(contour_json(1.0, 1.0, 1.0, 1).is_err());
    assert!(tree_json(2.0, 1.0, 0.0, 0, 1.0, 1).is_err());
}
