mod common;

use common::oracle_p_max;
use sideband_qrng::entropy::{estimate_min_entropy, optimize_range, NoiseModel, QuantizerSpec};

const SIGMA_Q: [f64; 5] = [0.02, 0.05, 0.1, 0.2, 0.5];
const SIGMA_E: [f64; 5] = [0.0, 0.005, 0.02, 0.06, 0.15];
const RANGE: [f64; 3] = [0.5, 1.0, 2.0];

#[test]
fn estimator_matches_quadrature_on_grid() {
    let mut worst: f64 = 0.0;
    for &sq in &SIGMA_Q {
        for &r in &RANGE {
            let quant = QuantizerSpec::new(8, r).unwrap();
            let mut prev = f64::INFINITY;
            for &se in &SIGMA_E {
                let est = estimate_min_entropy(&NoiseModel::new(sq, se).unwrap(), &quant, 5.0).unwrap();
                let oracle = -oracle_p_max(8, r, sq, 5.0 * se).log2();
                let err = (est.h_min - oracle).abs();
                worst = worst.max(err);
                assert!(err <= 1e-6, "sq={sq} se={se} R={r}: {} vs {oracle}", est.h_min);
                assert!(est.h_min <= prev + 1e-12, "not monotone at sq={sq} se={se} R={r}");
                prev = est.h_min;
            }
        }
    }
    eprintln!("worst deviation {worst:.2e} bits");
}

#[test]
fn four_bit_example() {
    // n = 4, R = 4, sigma_q = 1, sigma_e = 0.1, k = 5: mean anywhere in [-0.5, 0.5]
    let est = estimate_min_entropy(
        &NoiseModel::new(1.0, 0.1).unwrap(),
        &QuantizerSpec::new(4, 4.0).unwrap(),
        5.0,
    )
    .unwrap();
    let oracle = -oracle_p_max(4, 4.0, 1.0, 0.5).log2();
    assert!((est.h_min - oracle).abs() <= 1e-6, "{} vs {oracle}", est.h_min);
    assert!((est.worst_case_shift - 0.5).abs() < 1e-15);
}

#[test]
fn optimize_range_is_grid_argmax() {
    let model = NoiseModel::new(0.1, 0.02).unwrap();
    let template = QuantizerSpec::new(8, 1.0).unwrap();
    let grid: Vec<f64> = (1..=60).map(|i| 0.05 * i as f64).collect();
    let (r, est) = optimize_range(&model, &template, &grid, 5.0).unwrap();
    let oracle: Vec<f64> = grid
        .iter()
        .map(|&g| -oracle_p_max(8, g, 0.1, 0.1).log2())
        .collect();
    let best = oracle.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!((est.h_min - best).abs() < 1e-6);
    let first = grid[oracle.iter().position(|&h| (h - best).abs() < 1e-9).unwrap()];
    assert!((r - first).abs() < 1e-12, "chose {r}, oracle argmax {first}");
    // the optimum is interior: too small clips, too large wastes codes
    assert!(r > grid[0] && r < grid[grid.len() - 1]);
}
