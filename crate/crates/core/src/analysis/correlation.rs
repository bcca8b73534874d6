//! Lagged dependence between two binary streams.

use serde::{Deserialize, Serialize};

use crate::bits::BitStream;
use crate::error::{invalid, Error, Result};

/// Values indexed by lag `-max_lag ..= max_lag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSeries {
    pub max_lag: usize,
    pub values: Vec<f64>,
}

impl LagSeries {
    pub fn get(&self, lag: i64) -> f64 {
        self.values[(lag + self.max_lag as i64) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i as i64 - self.max_lag as i64, v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn check_pair(x: &BitStream, y: &BitStream, max_lag: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 10 * max_lag.max(1) {
        return Err(invalid(
            "max_lag",
            format!(
                "streams of {} bits are shorter than 10 x max_lag = {}",
                x.len(),
                10 * max_lag
            ),
        ));
    }
    Ok(())
}

/// Aligned overlap for `x[t]` against `y[t + lag]`.
fn overlap(x: &BitStream, y: &BitStream, lag: i64) -> (BitStream, BitStream) {
    let n = x.len();
    let k = lag.unsigned_abs() as usize;
    let len = n - k;
    if lag >= 0 {
        (x.slice(0, len), y.slice(k, len))
    } else {
        (x.slice(k, len), y.slice(0, len))
    }
}

/// Mean and standard deviation of the stream mapped to ±1.
fn pm1_moments(s: &BitStream) -> (f64, f64) {
    let mean = 2.0 * s.count_ones() as f64 / s.len() as f64 - 1.0;
    (mean, (1.0 - mean * mean).max(0.0).sqrt())
}

/// `|sum_t x~[t] y~[t+k]| / (N - |k|)` for standardized ±1 streams.
pub fn cross_correlation(x: &BitStream, y: &BitStream, max_lag: usize) -> Result<LagSeries> {
    check_pair(x, y, max_lag)?;
    let (mx, sx) = pm1_moments(x);
    let (my, sy) = pm1_moments(y);
    if sx == 0.0 || sy == 0.0 {
        return Err(Error::Degenerate("constant stream has no correlation".into()));
    }
    let values = (-(max_lag as i64)..=max_lag as i64)
        .map(|lag| {
            let (a, b) = overlap(x, y, lag);
            let len = a.len() as f64;
            let disagree = a.xor(&b).expect("equal overlap").count_ones() as f64;
            let sum_xy = len - 2.0 * disagree;
            let sum_x = 2.0 * a.count_ones() as f64 - len;
            let sum_y = 2.0 * b.count_ones() as f64 - len;
            let centered = sum_xy - my * sum_x - mx * sum_y + len * mx * my;
            (centered / (sx * sy * len)).abs()
        })
        .collect();
    Ok(LagSeries { max_lag, values })
}

/// Plug-in mutual information, bits, of `(x[t], y[t + lag])`.
pub fn mutual_information(x: &BitStream, y: &BitStream, lag: i64) -> Result<f64> {
    check_pair(x, y, lag.unsigned_abs() as usize)?;
    let (a, b) = overlap(x, y, lag);
    let n = a.len() as f64;
    let n1x = a.count_ones() as f64;
    let n1y = b.count_ones() as f64;
    if n1x == 0.0 || n1x == n || n1y == 0.0 || n1y == n {
        return Err(Error::Degenerate(
            "constant marginal has no mutual information".into(),
        ));
    }
    let n11 = a.and(&b)?.count_ones() as f64;
    let n10 = n1x - n11;
    let n01 = n1y - n11;
    let n00 = n - n11 - n10 - n01;
    let px = [(n - n1x) / n, n1x / n];
    let py = [(n - n1y) / n, n1y / n];
    let joint = [[n00 / n, n01 / n], [n10 / n, n11 / n]];
    let mut mi = 0.0;
    for (i, row) in joint.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (px[i] * py[j])).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}

pub fn mutual_information_series(x: &BitStream, y: &BitStream, max_lag: usize) -> Result<LagSeries> {
    check_pair(x, y, max_lag)?;
    let values = (-(max_lag as i64)..=max_lag as i64)
        .map(|lag| mutual_information(x, y, lag))
        .collect::<Result<Vec<_>>>()?;
    Ok(LagSeries { max_lag, values })
}

/// `5 / sqrt(N)`.
pub fn rho_threshold(n: usize) -> f64 {
    5.0 / (n as f64).sqrt()
}

/// Plug-in bias of a 2x2 table, `1 / (2 N ln 2)` bits.
pub fn mi_bias(n: usize) -> f64 {
    1.0 / (2.0 * n as f64 * std::f64::consts::LN_2)
}

/// Three times the bias plus five standard errors. Under independence
/// `2 N ln2 I` is chi-square with one degree of freedom, so the standard
/// error is `sqrt(2)` times the bias and the bound sits at chi-square
/// `3 + 5 sqrt(2)`, about 10.07, per lag.
pub fn mi_threshold(n: usize) -> f64 {
    let b = mi_bias(n);
    3.0 * b + 5.0 * std::f64::consts::SQRT_2 * b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub channels: (String, String),
    pub n_bits_used: usize,
    pub rho: LagSeries,
    pub mi: LagSeries,
    pub rho_threshold: f64,
    pub mi_threshold: f64,
    /// Set when both inputs are the same stream; thresholds do not apply.
    pub expected_dependent: bool,
}

impl CorrelationReport {
    pub fn compute(
        names: (String, String),
        x: &BitStream,
        y: &BitStream,
        max_lag: usize,
        expected_dependent: bool,
    ) -> Result<Self> {
        let n = x.len().min(y.len());
        let (x, y) = (x.slice(0, n), y.slice(0, n));
        Ok(Self {
            channels: names,
            n_bits_used: n,
            rho: cross_correlation(&x, &y, max_lag)?,
            mi: mutual_information_series(&x, &y, max_lag)?,
            rho_threshold: rho_threshold(n),
            mi_threshold: mi_threshold(n),
            expected_dependent,
        })
    }

    pub fn independent(&self) -> bool {
        self.rho.max() < self.rho_threshold && self.mi.max() < self.mi_threshold
    }

    /// Independent, or dependent when dependence was expected.
    pub fn passed(&self) -> bool {
        self.expected_dependent || self.independent()
    }
}
