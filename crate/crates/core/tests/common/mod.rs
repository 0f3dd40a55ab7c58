#![allow(dead_code)]

use std::path::PathBuf;

use mgplan::case::{load_case, NetworkCase};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{name}.json"))
}

pub fn fixture(name: &str) -> NetworkCase {
    let file = std::fs::File::open(fixture_path(name)).unwrap();
    load_case(file).unwrap()
}

/// Single-year cases with at most four nodes.
pub const SMALL: [&str; 6] = ["single", "pair", "triangle", "chain", "square", "heavy_pair"];

/// One node, one period, loads `p` / `q`, generator limit `p_max`, and a
/// unit-scale cost and voltage setup.
pub fn one_node(p: f64, q: f64, p_max: f64) -> NetworkCase {
    let text = format!(
        r#"{{
        "nodes": [{{"id": "n", "x": 0, "y": 0, "p_load": [{p}], "q_load": [{q}]}}],
        "costs": {{"c_cond": 1, "c_pole": 1, "c_gen": 10, "a": 1, "b": 0.1}},
        "electrical": {{"r": 0.3, "x": 0.3, "v_min": 0.95, "v_max": 1.05, "s_rating": 2,
            "p_gen_max": {p_max}, "p_gen_min": 0, "cos_phi_min": 0.8, "max_parallel": 1, "theta_delta": 0.5}},
        "horizon": {{"years": 1, "periods_per_day": 1}},
        "growth_rate": 0, "scale_factor_H": 1, "discount_rate": 0
    }}"#
    );
    load_case(text.as_bytes()).unwrap()
}

/// Residuals agree to 1e-6 (relative above one); two infinities agree.
pub fn same_residual(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0)
}
