//! `bench`: extractor kernel and end-to-end throughput.

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ResolvedChannel, RunConfig, Scale};
use super::run::run_channel;
use crate::bits::BitStream;
use crate::error::Result;
use crate::extractor::{multiply_naive, seeded_spec_from_config, ChunkWidth, ExtractorState, ToeplitzSpec};

/// Samples per channel for the end-to-end measurement.
pub const E2E_SAMPLES: usize = 1_000_000;
/// Required single-threaded chunked-kernel input rate, bits/s.
pub const KERNEL_FLOOR_BITS_PER_SEC: f64 = 100e6;
/// Required chunked/naive speed ratio.
pub const MIN_SPEEDUP: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub input_bits: usize,
    pub runs_seconds: Vec<f64>,
    pub best_seconds: f64,
    /// Input bits/s of every run.
    pub runs_bits_per_sec: Vec<f64>,
    pub best_bits_per_sec: f64,
    /// `max / min - 1` over the runs.
    pub spread: f64,
}

impl Measurement {
    fn from_runs(input_bits: usize, runs_seconds: Vec<f64>) -> Self {
        let best = runs_seconds.iter().copied().fold(f64::INFINITY, f64::min);
        let worst = runs_seconds.iter().copied().fold(0.0, f64::max);
        let rates = runs_seconds
            .iter()
            .map(|t| input_bits as f64 / t.max(1e-12))
            .collect();
        Self {
            input_bits,
            best_bits_per_sec: input_bits as f64 / best.max(1e-12),
            runs_bits_per_sec: rates,
            spread: worst / best.max(1e-12) - 1.0,
            best_seconds: best,
            runs_seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBench {
    pub id: u32,
    pub m: usize,
    pub n: usize,
    pub width: ChunkWidth,
    pub chunked: Measurement,
    pub naive: Measurement,
    pub speedup: f64,
    /// Chunked kernel on half the input, for the scaling check.
    pub half: Measurement,
    /// `best(full) / best(half)`; 2 for linear scaling.
    pub scaling_ratio: f64,
    pub meets_floor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndBench {
    pub id: u32,
    pub samples: usize,
    pub seconds: f64,
    pub output_bits_per_sec: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub scale: Scale,
    pub threads: usize,
    pub kernels: Vec<KernelBench>,
    pub end_to_end: Vec<EndToEndBench>,
}

fn random_input(bits: usize, seed: u64) -> BitStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = BitStream::with_capacity(bits);
    while b.len() + 64 <= bits {
        b.push_bits(rng.next_u64(), 64);
    }
    let rem = (bits - b.len()) as u32;
    if rem > 0 {
        b.push_bits(rng.next_u64() >> (64 - rem), rem);
    }
    b
}

/// Single-threaded chunked kernel over `input`, seconds.
pub fn time_chunked(spec: &ToeplitzSpec, width: ChunkWidth, input: &BitStream) -> f64 {
    let mut state = ExtractorState::with_width(std::sync::Arc::new(spec.clone()), width);
    let mut out = BitStream::with_capacity(input.len() / spec.n() * spec.m());
    let t = Instant::now();
    state.feed_into(input, &mut out);
    let s = t.elapsed().as_secs_f64();
    std::hint::black_box(&out);
    s
}

/// Naive GF(2) product block by block, seconds.
pub fn time_naive(spec: &ToeplitzSpec, input: &BitStream) -> Result<f64> {
    let n = spec.n();
    let t = Instant::now();
    let mut ones = 0usize;
    for b in 0..input.len() / n {
        ones += multiply_naive(spec, &input.slice(b * n, n))?.count_ones();
    }
    let s = t.elapsed().as_secs_f64();
    std::hint::black_box(ones);
    Ok(s)
}

pub fn bench_kernel(
    ch: &ResolvedChannel,
    width: ChunkWidth,
    bits: usize,
    naive_bits: usize,
    repeats: usize,
) -> Result<KernelBench> {
    let (spec, _) = seeded_spec_from_config(&ch.seed, ch.plan.n_out, ch.plan.n_in)?;
    let full = random_input(bits, 0xBE7C_0000 + u64::from(ch.spec.id));
    let half = full.slice(0, bits / 2);
    let naive_in = full.slice(0, naive_bits.min(bits));

    // one untimed pass to fault in the buffers
    time_chunked(&spec, width, &half);
    let chunked = Measurement::from_runs(
        bits,
        (0..repeats).map(|_| time_chunked(&spec, width, &full)).collect(),
    );
    let half_m = Measurement::from_runs(
        half.len(),
        (0..repeats).map(|_| time_chunked(&spec, width, &half)).collect(),
    );
    let naive = Measurement::from_runs(naive_in.len(), vec![time_naive(&spec, &naive_in)?]);
    Ok(KernelBench {
        id: ch.spec.id,
        m: spec.m(),
        n: spec.n(),
        width,
        speedup: chunked.best_bits_per_sec / naive.best_bits_per_sec,
        scaling_ratio: chunked.best_seconds / half_m.best_seconds,
        meets_floor: chunked.best_bits_per_sec >= KERNEL_FLOOR_BITS_PER_SEC,
        chunked,
        naive,
        half: half_m,
    })
}

pub fn cmd_bench(cfg: &RunConfig, scale: Scale) -> Result<BenchReport> {
    let resolved = cfg.resolve()?;
    let sc = cfg.scale(scale);
    let mut kernels = Vec::new();
    for ch in &resolved {
        kernels.push(bench_kernel(
            ch,
            cfg.global.chunk_width,
            sc.bench_bits,
            sc.bench_naive_bits,
            sc.bench_repeats,
        )?);
    }
    let mut end_to_end = Vec::new();
    for ch in &resolved {
        let t = Instant::now();
        let out = run_channel(cfg, ch, E2E_SAMPLES, cfg.global.format)?;
        let s = t.elapsed().as_secs_f64();
        end_to_end.push(EndToEndBench {
            id: ch.spec.id,
            samples: E2E_SAMPLES,
            seconds: s,
            output_bits_per_sec: out.bits.len() as f64 / s,
        });
    }
    Ok(BenchReport {
        scale,
        threads: rayon::current_num_threads(),
        kernels,
        end_to_end,
    })
}

impl BenchReport {
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<8}{:>10}{:>16}{:>10}{:>16}{:>10}{:>10}\n",
            "channel", "m x n", "chunked Mbit/s", "spread", "naive Mbit/s", "speedup", "2x time"
        );
        for k in &self.kernels {
            s.push_str(&format!(
                "{:<8}{:>10}{:>16.1}{:>9.1}%{:>16.3}{:>10.1}{:>10.2}{}\n",
                k.id,
                format!("{}x{}", k.m, k.n),
                k.chunked.best_bits_per_sec / 1e6,
                100.0 * k.chunked.spread,
                k.naive.best_bits_per_sec / 1e6,
                k.speedup,
                k.scaling_ratio,
                if k.meets_floor { "" } else { "  below floor" }
            ));
        }
        s.push_str(&format!(
            "end to end ({} samples per channel, {} threads):\n",
            E2E_SAMPLES, self.threads
        ));
        for e in &self.end_to_end {
            s.push_str(&format!(
                "  channel {}: {:.2} s, {:.1} Mbit/s out\n",
                e.id,
                e.seconds,
                e.output_bits_per_sec / 1e6
            ));
        }
        s
    }
}
