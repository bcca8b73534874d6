mod common;

use rustfft::FftPlanner;
use serde::Deserialize;

use common::SplitMix64;
use sideband_qrng::analysis::sts;

#[derive(Deserialize)]
struct Reference {
    block_bits: usize,
    serial_m: usize,
    apen_m: usize,
    block_freq_m: usize,
    blocks: Vec<Block>,
}

#[derive(Deserialize)]
struct Block {
    seed: u64,
    frequency: f64,
    block_frequency: f64,
    runs: f64,
    longest_run: f64,
    cusum_forward: f64,
    cusum_backward: f64,
    serial_1: f64,
    serial_2: f64,
    approximate_entropy: f64,
    dft: f64,
}

const TOL: f64 = 1e-4;

#[test]
fn p_values_match_independent_implementation() {
    let text = include_str!("data/sts_reference.json");
    let r: Reference = serde_json::from_str(text).unwrap();
    assert_eq!(sts::serial_m(r.block_bits), r.serial_m);
    assert_eq!(sts::apen_m(r.block_bits), r.apen_m);
    assert_eq!(r.blocks.len(), 10);
    let mut planner = FftPlanner::new();
    for b in &r.blocks {
        let e: Vec<u8> = SplitMix64::bits(b.seed, r.block_bits)
            .iter()
            .map(u8::from)
            .collect();
        let (s1, s2) = sts::serial(&e, r.serial_m);
        let got = [
            ("frequency", sts::frequency(&e), b.frequency),
            (
                "block_frequency",
                sts::block_frequency(&e, r.block_freq_m),
                b.block_frequency,
            ),
            ("runs", sts::runs(&e), b.runs),
            ("longest_run", sts::longest_run(&e), b.longest_run),
            ("cusum_forward", sts::cumulative_sums(&e, false), b.cusum_forward),
            ("cusum_backward", sts::cumulative_sums(&e, true), b.cusum_backward),
            ("serial_1", s1, b.serial_1),
            ("serial_2", s2, b.serial_2),
            (
                "approximate_entropy",
                sts::approximate_entropy(&e, r.apen_m),
                b.approximate_entropy,
            ),
            ("dft", sts::dft(&e, &mut planner), b.dft),
        ];
        for (name, ours, theirs) in got {
            assert!(
                (ours - theirs).abs() <= TOL,
                "seed {:#x} {name}: {ours} vs {theirs}",
                b.seed
            );
        }
        // the batch entry point agrees with the individual tests
        let all = sts::block_p_values(&e, &mut planner);
        for (i, (_, ours, _)) in got.iter().enumerate() {
            assert_eq!(all[i], *ours);
        }
    }
}
