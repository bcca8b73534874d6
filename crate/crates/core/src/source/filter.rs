//! Windowed-sinc FIR low-pass design.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    Blackman,
    Hamming,
}

impl WindowKind {
    fn weight(&self, i: usize, len: usize) -> f64 {
        let x = 2.0 * PI * i as f64 / (len - 1) as f64;
        match self {
            WindowKind::Blackman => 0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos(),
            WindowKind::Hamming => 0.54 - 0.46 * x.cos(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub tap_count: usize,
    /// -6 dB point, Hz.
    pub cutoff_hz: f64,
    /// Required attenuation from 1.5x cutoff up to Nyquist, dB.
    pub stopband_atten_db: f64,
    #[serde(default)]
    pub window: WindowKind,
}

impl FilterSpec {
    pub fn blackman(cutoff_hz: f64) -> Self {
        Self {
            tap_count: 127,
            cutoff_hz,
            stopband_atten_db: 60.0,
            window: WindowKind::Blackman,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tap_count < 31 || self.tap_count.is_multiple_of(2) {
            return Err(invalid(
                "tap_count",
                format!("must be odd and >= 31, got {}", self.tap_count),
            ));
        }
        if !(self.cutoff_hz.is_finite() && self.cutoff_hz > 0.0) {
            return Err(invalid("cutoff", format!("must be > 0, got {}", self.cutoff_hz)));
        }
        Ok(())
    }

    /// Designs the taps for `sample_rate_hz` and checks the stopband target.
    pub fn design(&self, sample_rate_hz: f64) -> Result<FirFilter> {
        self.validate()?;
        if self.cutoff_hz * 1.5 >= sample_rate_hz / 2.0 {
            return Err(invalid(
                "cutoff",
                format!(
                    "1.5 x {} Hz leaves no stopband below Nyquist of {} Hz",
                    self.cutoff_hz,
                    sample_rate_hz / 2.0
                ),
            ));
        }
        let n = self.tap_count;
        let fc = self.cutoff_hz / sample_rate_hz;
        let mid = (n - 1) as f64 / 2.0;
        let mut taps: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 - mid;
                let sinc = if t == 0.0 {
                    2.0 * fc
                } else {
                    (2.0 * PI * fc * t).sin() / (PI * t)
                };
                sinc * self.window.weight(i, n)
            })
            .collect();
        let dc: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= dc);
        let filter = FirFilter { taps, sample_rate_hz };
        let atten = filter.stopband_attenuation_db(1.5 * self.cutoff_hz);
        if atten < self.stopband_atten_db {
            return Err(invalid(
                "tap_count",
                format!(
                    "{} taps reach only {atten:.1} dB stopband, {} dB required",
                    n, self.stopband_atten_db
                ),
            ));
        }
        Ok(filter)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
    sample_rate_hz: f64,
}

impl FirFilter {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// |H(f)| at frequency `f_hz`.
    pub fn magnitude(&self, f_hz: f64) -> f64 {
        let w = 2.0 * PI * f_hz / self.sample_rate_hz;
        let (re, im) = self
            .taps
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(re, im), (k, &h)| {
                let a = w * k as f64;
                (re + h * a.cos(), im - h * a.sin())
            });
        re.hypot(im)
    }

    pub fn magnitude_db(&self, f_hz: f64) -> f64 {
        20.0 * self.magnitude(f_hz).log10()
    }

    /// Worst-case attenuation over `[from_hz, Nyquist]`, sampled on a fine grid.
    pub fn stopband_attenuation_db(&self, from_hz: f64) -> f64 {
        let nyq = self.sample_rate_hz / 2.0;
        let steps = 8 * self.taps.len();
        let worst = (0..=steps)
            .map(|i| from_hz + (nyq - from_hz) * i as f64 / steps as f64)
            .map(|f| self.magnitude(f))
            .fold(0.0f64, f64::max);
        -20.0 * worst.log10()
    }

    /// Sum of squared taps; white-noise power gain of the filter.
    pub fn power_gain(&self) -> f64 {
        self.taps.iter().map(|h| h * h).sum()
    }
}
