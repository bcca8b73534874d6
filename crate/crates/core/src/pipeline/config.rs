//! Run configuration: TOML parsing, validation and resolution into the
//! per-channel objects the pipeline runs on.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::entropy::{
    estimate_min_entropy, plan_extraction, EntropyEstimate, ExtractionPlan, NoiseModel, QuantizerSpec,
    RateModel, DEFAULT_K_SIGMA,
};
use crate::error::{Error, Result};
use crate::extractor::{ChunkWidth, SeedSource};
use crate::source::{
    ChannelSpec, FilterSpec, FirFilter, PrngKind, WindowKind, INTERNAL_RATE_FACTOR, REFERENCE_LPF_CUTOFF_HZ,
};

/// A 64-bit seed written in TOML either as an integer or as a string
/// (`"0x..."` hex or decimal). TOML integers stop at `i64::MAX`, so large
/// seeds need the string form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "SeedRepr", into = "String")]
pub struct Seed64(pub u64);

#[derive(Deserialize)]
#[serde(untagged)]
enum SeedRepr {
    Int(i64),
    Text(String),
}

impl TryFrom<SeedRepr> for Seed64 {
    type Error = String;
    fn try_from(r: SeedRepr) -> std::result::Result<Self, String> {
        match r {
            SeedRepr::Int(v) if v >= 0 => Ok(Seed64(v as u64)),
            SeedRepr::Int(v) => Err(format!("seed {v} is negative")),
            SeedRepr::Text(s) => s.parse(),
        }
    }
}

impl std::str::FromStr for Seed64 {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let t = s.trim().replace('_', "");
        let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
            Some(hex) => u64::from_str_radix(hex, 16),
            None => t.parse::<u64>(),
        };
        parsed.map(Seed64).map_err(|e| format!("bad seed {s:?}: {e}"))
    }
}

impl From<Seed64> for String {
    fn from(s: Seed64) -> String {
        s.to_string()
    }
}

impl fmt::Display for Seed64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#018x}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    /// Packed bytes, MSB-first.
    #[default]
    Bin,
    /// One '0'/'1' character per bit.
    Ascii,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Bin => "bin",
            OutputFormat::Ascii => "txt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GlobalConfig {
    /// Security parameter as `log2(epsilon)`.
    pub epsilon_log2: f64,
    pub k_sigma: f64,
    /// Extractor input block length in bits.
    pub n_in: usize,
    /// Generator for the simulated noise.
    pub prng: PrngKind,
    /// Master simulation seed; channel `id` draws streams `2 id` and `2 id + 1`.
    pub seed: Seed64,
    pub chunk_width: ChunkWidth,
    pub format: OutputFormat,
    /// Also write the raw ADC sample files.
    pub write_raw: bool,
    pub alpha: f64,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self {
            epsilon_log2: -50.0,
            k_sigma: DEFAULT_K_SIGMA,
            n_in: 768,
            prng: PrngKind::Chacha8,
            seed: Seed64(0x5EED_0000_0000_0001),
            chunk_width: ChunkWidth::W64,
            format: OutputFormat::Bin,
            write_raw: true,
            alpha: 0.01,
        }
    }
}

impl GlobalConfig {
    pub fn epsilon(&self) -> f64 {
        self.epsilon_log2.exp2()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantizerConfig {
    pub n_bits: u32,
}

impl Default for QuantizerConfig {
    fn default() -> Self {
        Self { n_bits: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub taps: usize,
    pub window: WindowKind,
    pub stopband_atten_db: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        let f = FilterSpec::blackman(REFERENCE_LPF_CUTOFF_HZ as f64);
        Self {
            taps: f.tap_count,
            window: f.window,
            stopband_atten_db: f.stopband_atten_db,
        }
    }
}

/// Data volumes for one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleConfig {
    pub samples_per_channel: usize,
    pub sts_blocks: usize,
    pub sts_block_len: usize,
    pub correlation_bits: usize,
    pub max_lag: usize,
    pub bitmap_side: usize,
    /// Input bits for the chunked-kernel benchmark.
    pub bench_bits: usize,
    /// Input bits for the naive-kernel benchmark.
    pub bench_naive_bits: usize,
    pub bench_repeats: usize,
}

impl ScaleConfig {
    pub fn desk() -> Self {
        Self {
            samples_per_channel: 10_000_000,
            sts_blocks: 100,
            sts_block_len: 100_000,
            correlation_bits: 10_000_000,
            max_lag: 100,
            bitmap_side: 500,
            bench_bits: 100_000_000,
            bench_naive_bits: 1_536_000,
            bench_repeats: 3,
        }
    }

    pub fn paper() -> Self {
        Self {
            samples_per_channel: 100_000_000,
            sts_blocks: 1000,
            sts_block_len: 1_000_000,
            correlation_bits: 1_000_000_000,
            max_lag: 100,
            bitmap_side: 1000,
            bench_bits: 1_000_000_000,
            bench_naive_bits: 7_680_000,
            bench_repeats: 5,
        }
    }
}

fn desk_default() -> ScaleConfig {
    ScaleConfig::desk()
}

fn paper_default() -> ScaleConfig {
    ScaleConfig::paper()
}

/// Toeplitz seed material for one channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedConfig {
    File { path: PathBuf },
    Prng { prng: PrngKind, seed: Seed64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub id: u32,
    pub center_freq_hz: u64,
    #[serde(default = "default_cutoff")]
    pub lpf_cutoff_hz: u64,
    /// Defaults to twice the cutoff.
    #[serde(default)]
    pub f_s_out_hz: Option<u64>,
    /// Defaults to ten times the output rate.
    #[serde(default)]
    pub internal_rate_hz: Option<u64>,
    #[serde(default = "one")]
    pub gain: f64,
    /// Vacuum noise standard deviation at the detector, volts.
    pub sigma_q: f64,
    /// Electronic noise standard deviation at the detector; or give `qcnr_db`.
    #[serde(default)]
    pub sigma_e: Option<f64>,
    #[serde(default)]
    pub qcnr_db: Option<f64>,
    /// ADC half-range in volts; or give `range_sigma`.
    #[serde(default)]
    pub range_v: Option<f64>,
    /// ADC half-range as a multiple of the total noise sigma at the ADC.
    #[serde(default)]
    pub range_sigma: Option<f64>,
    /// Claimed min-entropy per sample; must not exceed the model estimate.
    #[serde(default)]
    pub h_min: Option<f64>,
    #[serde(default)]
    pub seed: Option<SeedConfig>,
}

fn default_cutoff() -> u64 {
    REFERENCE_LPF_CUTOFF_HZ
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub global: GlobalConfig,
    #[serde(default)]
    pub quantizer: QuantizerConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default = "desk_default")]
    pub desk: ScaleConfig,
    #[serde(default = "paper_default")]
    pub paper: ScaleConfig,
    #[serde(rename = "channel")]
    pub channels: Vec<ChannelConfig>,
}

/// Everything one channel needs, derived from the config.
#[derive(Debug, Clone)]
pub struct ResolvedChannel {
    pub spec: ChannelSpec,
    pub filter: FilterSpec,
    pub fir: FirFilter,
    /// Noise at the detector, as configured.
    pub detector: NoiseModel,
    /// Noise at the ADC input.
    pub adc: NoiseModel,
    pub quant: QuantizerSpec,
    pub estimate: EntropyEstimate,
    /// The value the extractor is sized with.
    pub h_min: f64,
    pub plan: ExtractionPlan,
    pub rate: RateModel,
    pub seed: SeedSource,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads a config file. Relative seed-file paths are taken relative to
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| cfg_err(format!("{}: {}", path.display(), strip_prefix(&e))))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for ch in &mut cfg.channels {
            if let Some(SeedConfig::File { path }) = &mut ch.seed {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        Ok(cfg)
    }

    pub fn scale(&self, scale: Scale) -> &ScaleConfig {
        match scale {
            Scale::Desk => &self.desk,
            Scale::Paper => &self.paper,
        }
    }

    /// Keeps only the listed channel ids, in config order.
    pub fn select_channels(&mut self, ids: &[u32]) -> Result<()> {
        for id in ids {
            if !self.channels.iter().any(|c| c.id == *id) {
                return Err(cfg_err(format!("--channels: no channel with id {id}")));
            }
        }
        self.channels.retain(|c| ids.contains(&c.id));
        Ok(())
    }

    /// Structural checks that do not need any filter design or estimation.
    pub fn validate(&self) -> Result<()> {
        let g = &self.global;
        if !(g.epsilon_log2.is_finite() && g.epsilon_log2 < 0.0) {
            return Err(cfg_err(format!(
                "global.epsilon_log2 must be negative, got {}",
                g.epsilon_log2
            )));
        }
        if !(g.k_sigma.is_finite() && g.k_sigma >= 0.0) {
            return Err(cfg_err(format!("global.k_sigma must be >= 0, got {}", g.k_sigma)));
        }
        if !(g.alpha > 0.0 && g.alpha < 1.0) {
            return Err(cfg_err(format!(
                "global.alpha must be in (0, 1), got {}",
                g.alpha
            )));
        }
        for (name, s) in [("desk", &self.desk), ("paper", &self.paper)] {
            if s.samples_per_channel == 0 || s.sts_block_len == 0 || s.bench_repeats == 0 {
                return Err(cfg_err(format!(
                    "{name}: samples_per_channel, sts_block_len and bench_repeats must be >= 1"
                )));
            }
        }
        if self.channels.is_empty() {
            return Err(cfg_err("no [[channel]] sections"));
        }
        let mut ids = BTreeSet::new();
        for ch in &self.channels {
            if !ids.insert(ch.id) {
                return Err(cfg_err(format!("channel id {} appears twice", ch.id)));
            }
            let who = format!("channel {}", ch.id);
            if ch.lpf_cutoff_hz == 0 {
                return Err(cfg_err(format!("{who}: lpf_cutoff_hz must be > 0")));
            }
            if ch.center_freq_hz < ch.lpf_cutoff_hz {
                return Err(cfg_err(format!(
                    "{who}: center_freq_hz {} is below the band half-width {}; the band would reach DC",
                    ch.center_freq_hz, ch.lpf_cutoff_hz
                )));
            }
            match (ch.sigma_e, ch.qcnr_db) {
                (Some(_), Some(_)) => {
                    return Err(cfg_err(format!("{who}: give sigma_e or qcnr_db, not both")))
                }
                (None, None) => return Err(cfg_err(format!("{who}: sigma_e or qcnr_db is required"))),
                _ => {}
            }
            match (ch.range_v, ch.range_sigma) {
                (Some(_), Some(_)) => {
                    return Err(cfg_err(format!("{who}: give range_v or range_sigma, not both")))
                }
                (None, None) => return Err(cfg_err(format!("{who}: range_v or range_sigma is required"))),
                _ => {}
            }
        }
        check_bands(&self.channels)
    }

    pub fn resolve(&self) -> Result<Vec<ResolvedChannel>> {
        self.validate()?;
        self.channels.iter().map(|c| self.resolve_channel(c)).collect()
    }

    fn resolve_channel(&self, ch: &ChannelConfig) -> Result<ResolvedChannel> {
        let who = format!("channel {}", ch.id);
        let tag = |e: Error| cfg_err(format!("{who}: {}", strip_prefix(&e)));
        let g = &self.global;

        let f_s_out = ch.f_s_out_hz.unwrap_or(2 * ch.lpf_cutoff_hz);
        let spec = ChannelSpec {
            id: ch.id,
            center_freq_hz: ch.center_freq_hz,
            rf_freq_hz: ch.center_freq_hz,
            lpf_cutoff_hz: ch.lpf_cutoff_hz,
            f_s_out_hz: f_s_out,
            internal_rate_hz: ch.internal_rate_hz.unwrap_or(INTERNAL_RATE_FACTOR * f_s_out),
            gain: ch.gain,
        };
        spec.validate().map_err(tag)?;

        let filter = FilterSpec {
            tap_count: self.filter.taps,
            cutoff_hz: ch.lpf_cutoff_hz as f64,
            stopband_atten_db: self.filter.stopband_atten_db,
            window: self.filter.window,
        };
        let fir = spec.design_filter(&filter).map_err(tag)?;

        let sigma_e = match (ch.sigma_e, ch.qcnr_db) {
            (Some(s), _) => s,
            (None, Some(db)) => ch.sigma_q * 10f64.powf(-db / 20.0),
            (None, None) => unreachable!("checked in validate"),
        };
        let detector = NoiseModel::new(ch.sigma_q, sigma_e).map_err(tag)?;
        let adc = spec.adc_noise_model(&fir, &detector);
        let range_v = match (ch.range_v, ch.range_sigma) {
            (Some(r), _) => r,
            (None, Some(k)) => k * adc.sigma_total(),
            (None, None) => unreachable!("checked in validate"),
        };
        let quant = QuantizerSpec::new(self.quantizer.n_bits, range_v).map_err(tag)?;
        let estimate = estimate_min_entropy(&adc, &quant, g.k_sigma).map_err(tag)?;

        let h_min = match ch.h_min {
            Some(claimed) if claimed > estimate.h_min => {
                return Err(cfg_err(format!(
                    "{who}: h_min {claimed} exceeds the model estimate {:.4} bits/sample \
                     (raise QCNR or adjust the ADC range)",
                    estimate.h_min
                )))
            }
            Some(claimed) => claimed,
            None => estimate.h_min,
        };
        let plan = plan_extraction(h_min, g.n_in, quant.n_bits, g.epsilon()).map_err(tag)?;
        let rate = RateModel::new(&quant, ch.lpf_cutoff_hz, &plan).map_err(tag)?;

        let seed = match &ch.seed {
            Some(SeedConfig::File { path }) => SeedSource::File { path: path.clone() },
            Some(SeedConfig::Prng { prng, seed }) => SeedSource::Prng {
                prng: *prng,
                seed: seed.0,
            },
            None => SeedSource::Prng {
                prng: PrngKind::Chacha20,
                seed: default_toeplitz_seed(g.seed.0, ch.id),
            },
        };

        Ok(ResolvedChannel {
            spec,
            filter,
            fir,
            detector,
            adc,
            quant,
            estimate,
            h_min,
            plan,
            rate,
            seed,
        })
    }
}

/// Toeplitz seed used when a channel does not name one: the master seed
/// mixed with the channel id (splitmix64 finalizer).
pub fn default_toeplitz_seed(master: u64, id: u32) -> u64 {
    let mut z = master ^ (u64::from(id) + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_bands(channels: &[ChannelConfig]) -> Result<()> {
    for (i, a) in channels.iter().enumerate() {
        for b in &channels[i + 1..] {
            let (a_lo, a_hi) = (
                a.center_freq_hz - a.lpf_cutoff_hz,
                a.center_freq_hz + a.lpf_cutoff_hz,
            );
            let (b_lo, b_hi) = (
                b.center_freq_hz - b.lpf_cutoff_hz,
                b.center_freq_hz + b.lpf_cutoff_hz,
            );
            if a.center_freq_hz == b.center_freq_hz || (a_lo < b_hi && b_lo < a_hi) {
                return Err(cfg_err(format!(
                    "center_freq_hz: bands overlap: channel {} covers [{a_lo}, {a_hi}] Hz and \
                     channel {} covers [{b_lo}, {b_hi}] Hz",
                    a.id, b.id
                )));
            }
        }
    }
    Ok(())
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(msg) => msg.clone(),
        other => other.to_string(),
    }
}

/// The annotated sample configuration shipped with the crate.
pub const SAMPLE_CONFIG: &str = include_str!("../../configs/sideband.toml");

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunConfig {
        RunConfig::from_toml(SAMPLE_CONFIG).unwrap()
    }

    #[test]
    fn sample_config_resolves_to_reference_plans() {
        let ch = sample().resolve().unwrap();
        let n_out: Vec<usize> = ch.iter().map(|c| c.plan.n_out).collect();
        assert_eq!(n_out, vec![581, 548, 519]);
        for c in &ch {
            assert!(c.estimate.h_min >= c.h_min);
        }
    }

    #[test]
    fn seeds_accept_int_and_hex() {
        assert_eq!("0xff".parse::<Seed64>().unwrap(), Seed64(255));
        assert_eq!("1_000".parse::<Seed64>().unwrap(), Seed64(1000));
        assert!("0xzz".parse::<Seed64>().is_err());
        let s: Seed64 = serde_json::from_str("\"0xFFFFFFFFFFFFFFFF\"").unwrap();
        assert_eq!(s.0, u64::MAX);
        assert_eq!(
            serde_json::to_string(&Seed64(255)).unwrap(),
            "\"0x00000000000000ff\""
        );
    }

    #[test]
    fn overlapping_bands_are_rejected() {
        let mut cfg = sample();
        cfg.channels[2].center_freq_hz = 650_000_000;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("overlap"), "{msg}");
        assert!(msg.contains("channel 2") && msg.contains("channel 3"), "{msg}");
        assert!(msg.contains("center_freq_hz"), "{msg}");
    }

    #[test]
    fn overclaimed_h_min_is_rejected() {
        let mut cfg = sample();
        cfg.channels[0].h_min = Some(15.9);
        let msg = cfg.resolve().unwrap_err().to_string();
        assert!(msg.contains("channel 1") && msg.contains("h_min"), "{msg}");
    }

    #[test]
    fn ambiguous_noise_and_range() {
        let mut cfg = sample();
        cfg.channels[1].sigma_e = Some(0.1);
        cfg.channels[1].qcnr_db = Some(10.0);
        assert!(cfg.validate().unwrap_err().to_string().contains("not both"));
        let mut cfg = sample();
        cfg.channels[0].range_v = None;
        cfg.channels[0].range_sigma = None;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{SAMPLE_CONFIG}\n[bogus]\nx = 1\n");
        assert!(RunConfig::from_toml(&text).is_err());
    }

    #[test]
    fn channel_selection() {
        let mut cfg = sample();
        cfg.select_channels(&[3, 1]).unwrap();
        let ids: Vec<u32> = cfg.channels.iter().map(|c| c.id).collect();
        assert_eq!(ids, vec![1, 3]);
        assert!(cfg.select_channels(&[7]).is_err());
    }
}
