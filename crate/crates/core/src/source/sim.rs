//! Per-channel front end: wideband noise, downconversion and ADC quantization.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::filter::{FilterSpec, FirFilter};
use super::prng::{PrngKind, StreamRng};
use crate::entropy::{NoiseModel, QuantizerSpec};
use crate::error::{invalid, Error, Result};

pub const REFERENCE_LPF_CUTOFF_HZ: u64 = 120_000_000;
pub const REFERENCE_SAMPLE_RATE_HZ: u64 = 240_000_000;
pub const INTERNAL_RATE_FACTOR: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub id: u32,
    pub center_freq_hz: u64,
    pub rf_freq_hz: u64,
    pub lpf_cutoff_hz: u64,
    pub f_s_out_hz: u64,
    pub internal_rate_hz: u64,
    /// Linear amplitude gain after the low-pass (per-path AC amplifier).
    pub gain: f64,
}

impl ChannelSpec {
    /// 120 MHz sideband at `center_freq_hz`, sampled at 240 MHz, simulated at 10x.
    pub fn sideband(id: u32, center_freq_hz: u64) -> Self {
        Self {
            id,
            center_freq_hz,
            rf_freq_hz: center_freq_hz,
            lpf_cutoff_hz: REFERENCE_LPF_CUTOFF_HZ,
            f_s_out_hz: REFERENCE_SAMPLE_RATE_HZ,
            internal_rate_hz: REFERENCE_SAMPLE_RATE_HZ * INTERNAL_RATE_FACTOR,
            gain: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lpf_cutoff_hz == 0 || self.f_s_out_hz != 2 * self.lpf_cutoff_hz {
            return Err(invalid(
                "f_s_out",
                format!(
                    "channel {}: output rate {} Hz must equal 2 x LPF cutoff {} Hz",
                    self.id, self.f_s_out_hz, self.lpf_cutoff_hz
                ),
            ));
        }
        if self.rf_freq_hz != self.center_freq_hz {
            return Err(invalid(
                "rf_freq",
                format!(
                    "channel {}: mix frequency {} Hz must equal center {} Hz",
                    self.id, self.rf_freq_hz, self.center_freq_hz
                ),
            ));
        }
        if !self.internal_rate_hz.is_multiple_of(self.f_s_out_hz) {
            return Err(invalid(
                "internal_rate",
                format!(
                    "channel {}: {} Hz is not a multiple of the output rate {} Hz",
                    self.id, self.internal_rate_hz, self.f_s_out_hz
                ),
            ));
        }
        if self.internal_rate_hz <= 2 * (self.center_freq_hz + self.lpf_cutoff_hz) {
            return Err(invalid(
                "internal_rate",
                format!(
                    "channel {}: {} Hz does not exceed 2 x (center + cutoff) = {} Hz",
                    self.id,
                    self.internal_rate_hz,
                    2 * (self.center_freq_hz + self.lpf_cutoff_hz)
                ),
            ));
        }
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(invalid(
                "gain",
                format!("channel {}: must be > 0, got {}", self.id, self.gain),
            ));
        }
        Ok(())
    }

    pub fn decimation(&self) -> usize {
        (self.internal_rate_hz / self.f_s_out_hz) as usize
    }

    /// Low-pass taps for this channel from `filter`, whose cutoff is overridden
    /// by the channel's own.
    pub fn design_filter(&self, filter: &FilterSpec) -> Result<FirFilter> {
        let spec = FilterSpec {
            cutoff_hz: self.lpf_cutoff_hz as f64,
            ..*filter
        };
        spec.design(self.internal_rate_hz as f64)
    }

    /// Noise model as seen at the ADC input.
    ///
    /// Mixing by a cosine and filtering white noise of variance `s^2` gives an
    /// output variance `gain^2 * sum_k h_k^2 cos^2(phase_k) * s^2`. The cosine
    /// phases repeat with a short period in output samples, so the average is
    /// taken exactly over one period.
    pub fn adc_noise_model(&self, fir: &FirFilter, model: &NoiseModel) -> NoiseModel {
        model.scaled(self.noise_amplitude_gain(fir))
    }

    pub fn noise_amplitude_gain(&self, fir: &FirFilter) -> f64 {
        let d = self.decimation() as u64;
        let fs = self.internal_rate_hz;
        let taps = fir.taps();
        let period = (fs / gcd(self.rf_freq_hz * d % fs, fs)).clamp(1, 100_000);
        let mut acc = 0.0;
        for j in 0..period {
            let p = (taps.len() as u64 - 1) + j * d + (d - 1);
            acc += taps
                .iter()
                .enumerate()
                .map(|(k, h)| {
                    let c = mix_phase(self.rf_freq_hz, p - k as u64, fs).cos();
                    h * h * c * c
                })
                .sum::<f64>();
        }
        self.gain * (acc / period as f64).sqrt()
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// `2 pi rf idx / fs` reduced exactly modulo one cycle.
fn mix_phase(rf: u64, idx: u64, fs: u64) -> f64 {
    let r = (u128::from(rf) * u128::from(idx) % u128::from(fs)) as f64;
    2.0 * PI * r / fs as f64
}

/// Separate quantum and classical tracks of wideband noise.
#[derive(Debug, Clone, PartialEq)]
pub struct WidebandSamples {
    pub quantum: Vec<f64>,
    pub classical: Vec<f64>,
}

impl WidebandSamples {
    pub fn total(&self) -> Vec<f64> {
        self.quantum
            .iter()
            .zip(&self.classical)
            .map(|(q, e)| q + e)
            .collect()
    }
}

/// Streaming generator of the two wideband tracks of one channel.
pub struct WidebandSource {
    model: NoiseModel,
    quantum_rng: StreamRng,
    classical_rng: StreamRng,
}

impl WidebandSource {
    pub fn new(model: NoiseModel, prng: PrngKind, seed: u64, channel_id: u32) -> Self {
        let base = u64::from(channel_id) * 2;
        Self {
            model,
            quantum_rng: StreamRng::new(prng, seed, base),
            classical_rng: StreamRng::new(prng, seed, base + 1),
        }
    }

    /// Fills `out` with quantum + classical samples.
    pub fn fill_total(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            let q: f64 = StandardNormal.sample(&mut self.quantum_rng);
            let e: f64 = StandardNormal.sample(&mut self.classical_rng);
            *v = self.model.sigma_q * q + self.model.sigma_e * e;
        }
    }

    pub fn take_tracks(&mut self, n: usize) -> WidebandSamples {
        let quantum = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut self.quantum_rng);
                self.model.sigma_q * z
            })
            .collect();
        let classical = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut self.classical_rng);
                self.model.sigma_e * z
            })
            .collect();
        WidebandSamples { quantum, classical }
    }
}

/// White Gaussian noise at `internal_rate_hz`, variance `sigma_q^2 + sigma_e^2`.
///
/// The rate is carried for the caller's bookkeeping; white samples do not
/// depend on it.
pub fn synth_wideband(
    model: &NoiseModel,
    duration_samples: usize,
    _internal_rate_hz: u64,
    prng_seed: u64,
) -> Result<WidebandSamples> {
    model.validate()?;
    if duration_samples == 0 {
        return Err(invalid("duration_samples", "must be > 0"));
    }
    let mut src = WidebandSource::new(*model, PrngKind::default(), prng_seed, 0);
    Ok(src.take_tracks(duration_samples))
}

/// Mixer, FIR low-pass, decimator and gain with state carried across chunks.
pub struct Downconverter {
    taps: Vec<f64>,
    decim: usize,
    gain: f64,
    cos_table: Vec<f64>,
    /// Mixed samples still needed; the last one is input index `next_index - 1`.
    history: Vec<f64>,
    next_index: u64,
    outputs: u64,
}

impl Downconverter {
    pub fn new(spec: &ChannelSpec, fir: &FirFilter) -> Result<Self> {
        spec.validate()?;
        let fs = spec.internal_rate_hz;
        let period = fs / gcd(spec.rf_freq_hz % fs, fs);
        let cos_table = (0..period)
            .map(|i| mix_phase(spec.rf_freq_hz, i, fs).cos())
            .collect();
        Ok(Self {
            taps: fir.taps().to_vec(),
            decim: spec.decimation(),
            gain: spec.gain,
            cos_table,
            history: Vec::new(),
            next_index: 0,
            outputs: 0,
        })
    }

    pub fn tap_count(&self) -> usize {
        self.taps.len()
    }

    pub fn decimation(&self) -> usize {
        self.decim
    }

    /// Pushes raw samples and appends any completed output samples to `out`.
    ///
    /// Output `k` covers input indices `[s, s + taps)` with `s = k*decim + decim - 1`.
    pub fn process(&mut self, input: &[f64], out: &mut Vec<f64>) {
        let period = self.cos_table.len();
        let start_phase = (self.next_index % period as u64) as usize;
        self.history.reserve(input.len());
        for (i, &x) in input.iter().enumerate() {
            self.history.push(x * self.cos_table[(start_phase + i) % period]);
        }
        self.next_index += input.len() as u64;

        let taps = self.taps.len();
        let decim = self.decim as u64;
        // history[0] holds input index `base`
        let base = self.next_index - self.history.len() as u64;
        loop {
            let start = self.outputs * decim + decim - 1;
            if start + taps as u64 > self.next_index {
                break;
            }
            let lo = (start - base) as usize;
            let acc: f64 = self.history[lo..lo + taps]
                .iter()
                .zip(self.taps.iter().rev())
                .map(|(x, h)| x * h)
                .sum();
            out.push(self.gain * acc);
            self.outputs += 1;
        }
        let next_start = self.outputs * decim + decim - 1;
        let drop = (next_start.saturating_sub(base) as usize).min(self.history.len());
        self.history.drain(..drop);
    }
}

/// Batch downconversion; output length is `floor((len - taps + 1) / decim)`.
pub fn downconvert(samples: &[f64], spec: &ChannelSpec, filter: &FilterSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let fir = spec.design_filter(filter)?;
    if samples.len() < fir.len() {
        return Err(Error::InputTooShort {
            got: samples.len(),
            taps: fir.len(),
        });
    }
    let mut dc = Downconverter::new(spec, &fir)?;
    let mut out = Vec::with_capacity((samples.len() - fir.len() + 1) / spec.decimation());
    dc.process(samples, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSampleBlock {
    pub codes: Vec<u32>,
    pub n_bits: u32,
    pub off_scale_count: u64,
    pub channel_id: u32,
    pub prng_seed: u64,
    pub f_s_out_hz: u64,
}

impl RawSampleBlock {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn off_scale_fraction(&self) -> f64 {
        self.off_scale_count as f64 / self.codes.len().max(1) as f64
    }
}

/// Offset-binary ADC with clipping; the count of clipped samples is kept.
#[derive(Debug, Clone)]
pub struct Quantizer {
    spec: QuantizerSpec,
    scale: f64,
    max_code: u32,
    pub off_scale: u64,
}

impl Quantizer {
    pub fn new(spec: QuantizerSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            scale: f64::from(spec.levels()) / (2.0 * spec.range_v),
            max_code: spec.max_code(),
            off_scale: 0,
        })
    }

    #[inline]
    pub fn code(&mut self, v: f64) -> u32 {
        let r = self.spec.range_v;
        if v <= -r {
            self.off_scale += 1;
            return 0;
        }
        if v >= r {
            self.off_scale += 1;
            return self.max_code;
        }
        (((v + r) * self.scale).floor() as u32).min(self.max_code)
    }

    pub fn push(&mut self, samples: &[f64], codes: &mut Vec<u32>, offset: usize) -> Result<()> {
        codes.reserve(samples.len());
        for (i, &v) in samples.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    index: offset + i,
                    value: v,
                });
            }
            codes.push(self.code(v));
        }
        Ok(())
    }
}

pub fn quantize(samples: &[f64], quant: &QuantizerSpec) -> Result<RawSampleBlock> {
    let mut q = Quantizer::new(*quant)?;
    let mut codes = Vec::with_capacity(samples.len());
    q.push(samples, &mut codes, 0)?;
    Ok(RawSampleBlock {
        codes,
        n_bits: quant.n_bits,
        off_scale_count: q.off_scale,
        channel_id: 0,
        prng_seed: 0,
        f_s_out_hz: 0,
    })
}

/// Full front end for one channel: noise -> downconvert -> quantize.
///
/// `model` is the detector-level wideband noise; see
/// [`ChannelSpec::adc_noise_model`] for its image at the ADC.
pub fn simulate_channel(
    spec: &ChannelSpec,
    model: &NoiseModel,
    quant: &QuantizerSpec,
    filter: &FilterSpec,
    n_samples: usize,
    prng: PrngKind,
    prng_seed: u64,
) -> Result<RawSampleBlock> {
    spec.validate()?;
    model.validate()?;
    quant.validate()?;
    let fir = spec.design_filter(filter)?;
    let mut dc = Downconverter::new(spec, &fir)?;
    let mut src = WidebandSource::new(*model, prng, prng_seed, spec.id);
    let mut q = Quantizer::new(*quant)?;

    let decim = spec.decimation();
    let mut remaining = fir.len() - 1 + n_samples * decim;
    let chunk_len = 8192 * decim;
    let mut raw = vec![0.0; chunk_len];
    let mut base = Vec::with_capacity(8192 + 1);
    let mut codes = Vec::with_capacity(n_samples);
    while remaining > 0 {
        let take = remaining.min(chunk_len);
        src.fill_total(&mut raw[..take]);
        base.clear();
        dc.process(&raw[..take], &mut base);
        let offset = codes.len();
        q.push(&base, &mut codes, offset)?;
        remaining -= take;
    }
    debug_assert_eq!(codes.len(), n_samples);
    Ok(RawSampleBlock {
        codes,
        n_bits: quant.n_bits,
        off_scale_count: q.off_scale,
        channel_id: spec.id,
        prng_seed,
        f_s_out_hz: spec.f_s_out_hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_channel() -> ChannelSpec {
        ChannelSpec::sideband(1, 200_000_000)
    }

    #[test]
    fn channel_invariants() {
        assert!(reference_channel().validate().is_ok());
        assert!(ChannelSpec::sideband(3, 1_000_000_000).validate().is_ok());
        let mut c = reference_channel();
        c.f_s_out_hz = 250_000_000;
        assert!(c.validate().is_err());
        let mut c = reference_channel();
        c.internal_rate_hz = 2_500_000_000;
        assert!(c.validate().is_err());
        let c = ChannelSpec::sideband(4, 1_100_000_000);
        assert!(
            c.validate().is_err(),
            "1.1 GHz + 120 MHz needs more than 2.4 GS/s"
        );
    }

    #[test]
    fn quantize_examples() {
        let q = QuantizerSpec::new(16, 1.0).unwrap();
        let b = quantize(&[0.0, 1.0, -1.0, 0.999_999_999, -0.999_999_999], &q).unwrap();
        assert_eq!(b.codes, vec![32768, 65535, 0, 65535, 0]);
        assert_eq!(b.off_scale_count, 2);
        assert!(matches!(
            quantize(&[0.0, f64::NAN], &q),
            Err(Error::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn downconvert_length_rule() {
        let spec = reference_channel();
        let f = FilterSpec::blackman(120e6);
        let x = vec![0.0; 127 + 10 * 7 + 3];
        let y = downconvert(&x, &spec, &f).unwrap();
        assert_eq!(y.len(), (x.len() - 127 + 1) / 10);
        assert!(matches!(
            downconvert(&x[..100], &spec, &f),
            Err(Error::InputTooShort { got: 100, taps: 127 })
        ));
    }

    #[test]
    fn streaming_matches_batch() {
        let spec = reference_channel();
        let fir = spec.design_filter(&FilterSpec::blackman(120e6)).unwrap();
        let model = NoiseModel::new(1.0, 0.3).unwrap();
        let x = synth_wideband(&model, 5000, spec.internal_rate_hz, 3)
            .unwrap()
            .total();
        let batch = downconvert(&x, &spec, &FilterSpec::blackman(120e6)).unwrap();
        let mut dc = Downconverter::new(&spec, &fir).unwrap();
        let mut streamed = Vec::new();
        for chunk in x.chunks(37) {
            dc.process(chunk, &mut streamed);
        }
        assert_eq!(streamed.len(), batch.len());
        for (a, b) in streamed.iter().zip(&batch) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn silence_maps_to_midpoint() {
        let spec = reference_channel();
        let model = NoiseModel::new(1e-15, 0.0).unwrap();
        let q = QuantizerSpec::new(16, 1.0).unwrap();
        let b = simulate_channel(
            &spec,
            &model,
            &q,
            &FilterSpec::blackman(120e6),
            1000,
            PrngKind::Chacha8,
            1,
        )
        .unwrap();
        assert_eq!(b.len(), 1000);
        assert!(b.codes.iter().all(|&c| c == 32768 || c == 32767));
        assert_eq!(b.off_scale_count, 0);
    }

    #[test]
    fn simulate_is_deterministic() {
        let spec = reference_channel();
        let model = NoiseModel::new(0.5, 0.05).unwrap();
        let q = QuantizerSpec::new(16, 1.0).unwrap();
        let f = FilterSpec::blackman(120e6);
        let a = simulate_channel(&spec, &model, &q, &f, 20_000, PrngKind::Chacha8, 9).unwrap();
        let b = simulate_channel(&spec, &model, &q, &f, 20_000, PrngKind::Chacha8, 9).unwrap();
        assert_eq!(a, b);
        let c = simulate_channel(&spec, &model, &q, &f, 20_000, PrngKind::Chacha8, 10).unwrap();
        assert_ne!(a.codes, c.codes);
    }
}
