//! Native subset of the SP 800-22 randomness tests.
//!
//! Parameter choices for a block of `n` bits:
//!
//! | test                | parameter                                   |
//! |---------------------|---------------------------------------------|
//! | block frequency     | M = 128                                     |
//! | longest run of ones | M = 8 (n < 6272), 128 (n < 750000), else 10^4 |
//! | serial              | m = min(16, floor(log2 n) - 3)              |
//! | approximate entropy | m = min(10, floor(log2 n) - 6)              |
//! | DFT                 | threshold sqrt(ln(1/0.05) n), d scaled by n*0.95*0.05/4 |
//!
//! The longest-run class probabilities are the standard tables for those
//! three block sizes.

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::bits::BitStream;
use crate::entropy::phi;
use crate::error::{invalid, Error, Result};

pub const MIN_BLOCK_LEN: usize = 128;
pub const BLOCK_FREQUENCY_M: usize = 128;

/// Names in report order; cumulative sums and serial report two p-values each.
pub const TEST_NAMES: [&str; 10] = [
    "frequency",
    "block_frequency",
    "runs",
    "longest_run",
    "cumulative_sums_forward",
    "cumulative_sums_backward",
    "serial_1",
    "serial_2",
    "approximate_entropy",
    "dft",
];

fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(a, x)
    }
}

fn ones(e: &[u8]) -> usize {
    e.iter().map(|&b| b as usize).sum()
}

pub fn frequency(e: &[u8]) -> f64 {
    let n = e.len() as f64;
    let s = (2.0 * ones(e) as f64 - n).abs() / n.sqrt();
    erfc(s / std::f64::consts::SQRT_2)
}

pub fn block_frequency(e: &[u8], m: usize) -> f64 {
    let blocks = e.len() / m;
    let chi2: f64 = e
        .chunks_exact(m)
        .take(blocks)
        .map(|b| {
            let pi = ones(b) as f64 / m as f64;
            (pi - 0.5).powi(2)
        })
        .sum::<f64>()
        * 4.0
        * m as f64;
    igamc(blocks as f64 / 2.0, chi2 / 2.0)
}

pub fn runs(e: &[u8]) -> f64 {
    let n = e.len() as f64;
    let pi = ones(e) as f64 / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return 0.0;
    }
    let v = 1 + e.windows(2).filter(|w| w[0] != w[1]).count();
    let num = (v as f64 - 2.0 * n * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi);
    erfc(num / den)
}

struct LongestRunTable {
    m: usize,
    lo: usize,
    probs: &'static [f64],
}

fn longest_run_table(n: usize) -> LongestRunTable {
    if n < 6272 {
        LongestRunTable {
            m: 8,
            lo: 1,
            probs: &[0.2148, 0.3672, 0.2305, 0.1875],
        }
    } else if n < 750_000 {
        LongestRunTable {
            m: 128,
            lo: 4,
            probs: &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124],
        }
    } else {
        LongestRunTable {
            m: 10_000,
            lo: 10,
            probs: &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
        }
    }
}

pub fn longest_run(e: &[u8]) -> f64 {
    let t = longest_run_table(e.len());
    let k = t.probs.len() - 1;
    let blocks = e.len() / t.m;
    let mut nu = vec![0usize; k + 1];
    for b in e.chunks_exact(t.m).take(blocks) {
        let (mut best, mut cur) = (0usize, 0usize);
        for &bit in b {
            cur = if bit == 1 { cur + 1 } else { 0 };
            best = best.max(cur);
        }
        nu[best.clamp(t.lo, t.lo + k) - t.lo] += 1;
    }
    let nb = blocks as f64;
    let chi2: f64 = nu
        .iter()
        .zip(t.probs)
        .map(|(&v, &p)| (v as f64 - nb * p).powi(2) / (nb * p))
        .sum();
    igamc(k as f64 / 2.0, chi2 / 2.0)
}

pub fn cumulative_sums(e: &[u8], reverse: bool) -> f64 {
    let n = e.len() as i64;
    let mut s = 0i64;
    let mut z = 0i64;
    let mut step = |b: u8| {
        s += if b == 1 { 1 } else { -1 };
        z = z.max(s.abs());
    };
    if reverse {
        e.iter().rev().for_each(|&b| step(b));
    } else {
        e.iter().for_each(|&b| step(b));
    }
    let sq = (n as f64).sqrt();
    let zf = z as f64;
    // integer bounds truncate toward zero, as in the reference suite
    let mut sum1 = 0.0;
    for k in ((-n / z + 1) / 4)..=((n / z - 1) / 4) {
        let k = k as f64;
        sum1 += phi((4.0 * k + 1.0) * zf / sq) - phi((4.0 * k - 1.0) * zf / sq);
    }
    let mut sum2 = 0.0;
    for k in ((-n / z - 3) / 4)..=((n / z - 1) / 4) {
        let k = k as f64;
        sum2 += phi((4.0 * k + 3.0) * zf / sq) - phi((4.0 * k + 1.0) * zf / sq);
    }
    1.0 - sum1 + sum2
}

/// Counts of every overlapping `m`-bit pattern with wrap-around.
fn pattern_counts(e: &[u8], m: usize) -> Vec<u64> {
    let n = e.len();
    let mut counts = vec![0u64; 1 << m];
    if m == 0 {
        counts[0] = n as u64;
        return counts;
    }
    let mask = (1usize << m) - 1;
    let mut v = 0usize;
    for &b in &e[..m - 1] {
        v = (v << 1) | b as usize;
    }
    for i in 0..n {
        v = ((v << 1) | e[(i + m - 1) % n] as usize) & mask;
        counts[v] += 1;
    }
    counts
}

fn psi2(e: &[u8], m: isize) -> f64 {
    if m <= 0 {
        return 0.0;
    }
    let n = e.len() as f64;
    let sum: f64 = pattern_counts(e, m as usize)
        .iter()
        .map(|&c| (c as f64) * (c as f64))
        .sum();
    2f64.powi(m as i32) / n * sum - n
}

pub fn serial(e: &[u8], m: usize) -> (f64, f64) {
    let m = m as isize;
    let (p0, p1, p2) = (psi2(e, m), psi2(e, m - 1), psi2(e, m - 2));
    let d1 = p0 - p1;
    let d2 = p0 - 2.0 * p1 + p2;
    (
        igamc(2f64.powi(m as i32 - 2), d1 / 2.0),
        igamc(2f64.powi(m as i32 - 3), d2 / 2.0),
    )
}

pub fn approximate_entropy(e: &[u8], m: usize) -> f64 {
    let n = e.len() as f64;
    let phi_m = |mm: usize| -> f64 {
        pattern_counts(e, mm)
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                p * p.ln()
            })
            .sum()
    };
    let apen = phi_m(m) - phi_m(m + 1);
    let chi2 = 2.0 * n * (std::f64::consts::LN_2 - apen);
    igamc(2f64.powi(m as i32 - 1), chi2 / 2.0)
}

pub fn dft(e: &[u8], planner: &mut FftPlanner<f64>) -> f64 {
    let n = e.len();
    let mut buf: Vec<Complex<f64>> = e
        .iter()
        .map(|&b| Complex::new(if b == 1 { 1.0 } else { -1.0 }, 0.0))
        .collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let nf = n as f64;
    let threshold = ((1.0f64 / 0.05).ln() * nf).sqrt();
    let n1 = buf[..n / 2].iter().filter(|c| c.norm() < threshold).count() as f64;
    let n0 = 0.95 * nf / 2.0;
    let d = (n1 - n0) / (nf * 0.95 * 0.05 / 4.0).sqrt();
    erfc(d.abs() / std::f64::consts::SQRT_2)
}

pub fn serial_m(n: usize) -> usize {
    (n.ilog2() as usize - 3).min(16)
}

pub fn apen_m(n: usize) -> usize {
    (n.ilog2() as usize - 6).min(10)
}

/// All ten p-values for one block, in [`TEST_NAMES`] order.
pub fn block_p_values(e: &[u8], planner: &mut FftPlanner<f64>) -> [f64; 10] {
    let n = e.len();
    let (s1, s2) = serial(e, serial_m(n));
    [
        frequency(e),
        block_frequency(e, BLOCK_FREQUENCY_M),
        runs(e),
        longest_run(e),
        cumulative_sums(e, false),
        cumulative_sums(e, true),
        s1,
        s2,
        approximate_entropy(e, apen_m(n)),
        dft(e, planner),
    ]
}

/// `(1 - alpha) -/+ 3 sqrt((1 - alpha) alpha / n)`.
pub fn proportion_interval(alpha: f64, n_blocks: usize) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("must be in (0, 1), got {alpha}")));
    }
    if n_blocks == 0 {
        return Err(invalid("n_blocks", "must be >= 1"));
    }
    let p = 1.0 - alpha;
    let half = 3.0 * (p * alpha / n_blocks as f64).sqrt();
    Ok((p - half, p + half))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub name: String,
    pub p_values: Vec<f64>,
    pub pass_count: usize,
    pub proportion: f64,
    pub passed: bool,
    /// Chi-square uniformity of the p-values over ten equal bins.
    pub uniformity_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub alpha: f64,
    pub n_blocks: usize,
    pub block_len: usize,
    pub interval: (f64, f64),
    pub tests: Vec<TestResult>,
}

impl TestReport {
    pub fn all_passed(&self) -> bool {
        self.tests.iter().all(|t| t.passed)
    }

    pub fn get(&self, name: &str) -> Option<&TestResult> {
        self.tests.iter().find(|t| t.name == name)
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<26} {:>6} {:>10} {:>10}  result\n",
            "test", "pass", "proportion", "uniform-p"
        );
        for t in &self.tests {
            s.push_str(&format!(
                "{:<26} {:>6} {:>10.4} {:>10.4}  {}\n",
                t.name,
                format!("{}/{}", t.pass_count, self.n_blocks),
                t.proportion,
                t.uniformity_p,
                if t.passed { "PASS" } else { "FAIL" }
            ));
        }
        s.push_str(&format!(
            "alpha = {}, interval = [{:.5}, {:.5}]\n",
            self.alpha, self.interval.0, self.interval.1
        ));
        s
    }
}

fn uniformity_p(p_values: &[f64]) -> f64 {
    let mut bins = [0usize; 10];
    for &p in p_values {
        bins[((p * 10.0) as usize).min(9)] += 1;
    }
    let expected = p_values.len() as f64 / 10.0;
    let chi2: f64 = bins
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    igamc(4.5, chi2 / 2.0)
}

/// Runs every test on `n_blocks` consecutive blocks of `block_len` bits.
pub fn nist_subset(bits: &BitStream, block_len: usize, n_blocks: usize, alpha: f64) -> Result<TestReport> {
    if block_len < MIN_BLOCK_LEN {
        return Err(invalid(
            "block_len",
            format!("must be >= {MIN_BLOCK_LEN}, got {block_len}"),
        ));
    }
    let interval = proportion_interval(alpha, n_blocks)?;
    let required = block_len * n_blocks;
    if bits.len() < required {
        return Err(Error::InsufficientData {
            required,
            got: bits.len(),
        });
    }
    let per_block: Vec<[f64; 10]> = (0..n_blocks)
        .into_par_iter()
        .map_init(FftPlanner::new, |planner, b| {
            let e: Vec<u8> = bits
                .slice(b * block_len, block_len)
                .iter()
                .map(u8::from)
                .collect();
            block_p_values(&e, planner)
        })
        .collect();
    let tests = TEST_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let p_values: Vec<f64> = per_block.iter().map(|ps| ps[i]).collect();
            let pass_count = p_values.iter().filter(|&&p| p >= alpha).count();
            let proportion = pass_count as f64 / n_blocks as f64;
            TestResult {
                name: name.to_string(),
                pass_count,
                proportion,
                passed: proportion >= interval.0 && proportion <= interval.1,
                uniformity_p: uniformity_p(&p_values),
                p_values,
            }
        })
        .collect();
    Ok(TestReport {
        alpha,
        n_blocks,
        block_len,
        interval,
        tests,
    })
}
