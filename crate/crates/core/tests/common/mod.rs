//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

use sideband_qrng::BitStream;

pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn bits(seed: u64, n: usize) -> BitStream {
        let mut g = SplitMix64(seed);
        let mut b = BitStream::with_capacity(n);
        while b.len() + 64 <= n {
            b.push_bits(g.next(), 64);
        }
        let rem = (n - b.len()) as u32;
        if rem > 0 {
            b.push_bits(g.next() >> (64 - rem), rem);
        }
        b
    }
}

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Integral of the normal density over `[a, b]` by composite Gauss-Legendre
/// on panels no wider than `sigma / 8`.
pub fn normal_mass(a: f64, b: f64, mu: f64, sigma: f64) -> f64 {
    let a = a.max(mu - 14.0 * sigma);
    let b = b.min(mu + 14.0 * sigma);
    if b <= a {
        return 0.0;
    }
    let panels = (((b - a) / (sigma / 8.0)).ceil() as usize).max(1);
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        for (x, w) in GL_X.iter().zip(GL_W) {
            total += w * half * (pdf(mid - half * x, mu, sigma) + pdf(mid + half * x, mu, sigma));
        }
    }
    total
}

/// Largest single-code probability of an `n_bits` offset-binary ADC on
/// `[-range, range]` for a Gaussian of std `sigma_q` whose mean may be
/// anywhere in `[-shift, shift]`. Candidate means are a dense grid, both
/// endpoints and every bin center inside the interval; bin masses come
/// from quadrature, edge codes taking the tails.
pub fn oracle_p_max(n_bits: u32, range: f64, sigma_q: f64, shift: f64) -> f64 {
    let levels = 1usize << n_bits;
    let delta = 2.0 * range / levels as f64;
    let mut means = vec![-shift, shift, 0.0];
    let grid = 400;
    for i in 0..=grid {
        means.push(-shift + 2.0 * shift * i as f64 / grid as f64);
    }
    for k in 0..levels {
        let c = -range + (k as f64 + 0.5) * delta;
        if c.abs() <= shift {
            means.push(c);
        }
    }
    let mut best: f64 = 0.0;
    for &mu in &means {
        // only bins within reach of the density matter
        let lo_bin = (((mu - 14.0 * sigma_q + range) / delta).floor().max(0.0)) as usize;
        let hi_bin = (((mu + 14.0 * sigma_q + range) / delta).ceil().max(0.0) as usize).min(levels - 1);
        for k in lo_bin..=hi_bin {
            let a = if k == 0 {
                f64::NEG_INFINITY
            } else {
                -range + k as f64 * delta
            };
            let b = if k == levels - 1 {
                f64::INFINITY
            } else {
                -range + (k + 1) as f64 * delta
            };
            best = best.max(normal_mass(a, b, mu, sigma_q));
        }
    }
    best
}

/// Asymptotic Kolmogorov-Smirnov p-value for uniformity on [0, 1].
pub fn ks_uniform_p(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max);
    let en = n.sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    let mut q = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        q += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    q.clamp(0.0, 1.0)
}
