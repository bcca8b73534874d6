//! End-to-end generation: simulate, quantize, extract, write.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{OutputFormat, ResolvedChannel, RunConfig, Scale, Seed64};
use super::io::{interleave, write_bits, write_raw_file};
use crate::bits::BitStream;
use crate::entropy::{phi, ExtractionPlan, NoiseModel};
use crate::error::Result;
use crate::extractor::{seeded_spec_from_config, ExtractorState, SeedRecord};
use crate::source::{simulate_channel, PrngKind, RawSampleBlock};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMING_FILE: &str = "timing.json";

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub scale: Scale,
    /// Overrides `global.format`.
    pub format: Option<OutputFormat>,
    /// Run channels one after another instead of concurrently.
    pub sequential: bool,
    /// How the simulation seed was chosen, for the manifest.
    pub seed_origin: SeedOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedOrigin {
    #[default]
    Config,
    CommandLine,
    /// Drawn from the operating system; the run is not reproducible without
    /// the manifest.
    Entropy,
}

/// Off-scale tally against the Gaussian tail expected for the ADC range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffScaleCheck {
    pub count: u64,
    pub fraction: f64,
    pub expected_fraction: f64,
    /// Expected count plus three binomial standard deviations.
    pub limit: f64,
    pub within_limit: bool,
}

impl OffScaleCheck {
    pub fn new(count: u64, samples: usize, range_v: f64, model: &NoiseModel) -> Self {
        let p = 2.0 * phi(-range_v / model.sigma_total());
        let n = samples as f64;
        let limit = n * p + 3.0 * (n * p * (1.0 - p)).sqrt();
        Self {
            count,
            fraction: count as f64 / n,
            expected_fraction: p,
            limit,
            within_limit: count as f64 <= limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub id: u32,
    pub center_freq_hz: u64,
    pub sim_prng: PrngKind,
    pub sim_seed: Seed64,
    /// Keystream ids of the vacuum and electronic noise tracks.
    pub sim_streams: [u64; 2],
    pub adc_noise: NoiseModel,
    pub range_v: f64,
    pub h_min_estimate: f64,
    pub plan: ExtractionPlan,
    pub planned_rate_gbps: String,
    pub toeplitz_seed: SeedRecord,
    pub samples: usize,
    pub off_scale: OffScaleCheck,
    pub blocks: u64,
    pub bits_in: u64,
    pub bits_out: u64,
    pub discarded_bits: usize,
    pub output_file: String,
    pub seed_file: String,
    pub raw_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeRecord {
    pub file: String,
    pub bits: u64,
    /// Channel ids in interleave order.
    pub order: Vec<u32>,
    pub block_bits: Vec<usize>,
    pub blocks: Vec<u64>,
}

/// Everything needed to reproduce a run byte for byte. Wall-clock data is
/// kept in the separate timing file so that identical runs give identical
/// manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scale: Scale,
    pub format: OutputFormat,
    pub seed_origin: SeedOrigin,
    pub config: RunConfig,
    pub channels: Vec<ChannelRecord>,
    pub cumulative: CumulativeRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTiming {
    pub id: u32,
    pub simulate_seconds: f64,
    pub extract_seconds: f64,
    pub output_bits_per_sec: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub started_unix: f64,
    pub finished_unix: f64,
    pub wall_seconds: f64,
    pub channels: Vec<ChannelTiming>,
}

/// One channel's products, in memory.
pub struct ChannelOutput {
    pub bits: BitStream,
    pub raw: RawSampleBlock,
    pub seed_bits: BitStream,
    pub record: ChannelRecord,
    pub timing: ChannelTiming,
}

pub struct RunOutcome {
    pub manifest: RunManifest,
    pub timing: RunTiming,
    pub outputs: Vec<ChannelOutput>,
}

impl RunOutcome {
    pub fn off_scale_ok(&self) -> bool {
        self.manifest.channels.iter().all(|c| c.off_scale.within_limit)
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn output_name(id: u32, format: OutputFormat) -> String {
    format!("ch{id}.{}", format.extension())
}

/// Simulates and extracts one channel.
pub fn run_channel(
    cfg: &RunConfig,
    ch: &ResolvedChannel,
    samples: usize,
    format: OutputFormat,
) -> Result<ChannelOutput> {
    let g = &cfg.global;
    let t0 = Instant::now();
    let raw = simulate_channel(
        &ch.spec,
        &ch.detector,
        &ch.quant,
        &ch.filter,
        samples,
        g.prng,
        g.seed.0,
    )?;
    let t1 = Instant::now();

    let (toeplitz, seed_record) = seeded_spec_from_config(&ch.seed, ch.plan.n_out, ch.plan.n_in)?;
    let seed_bits = toeplitz.seed().clone();
    let mut state = ExtractorState::for_plan(toeplitz.shared(), &ch.plan, g.chunk_width)?;
    let bits = state.feed_parallel(&BitStream::from_codes(raw.codes.iter().copied(), raw.n_bits));
    let report = state.finish();
    let t2 = Instant::now();

    let id = ch.spec.id;
    let record = ChannelRecord {
        id,
        center_freq_hz: ch.spec.center_freq_hz,
        sim_prng: g.prng,
        sim_seed: g.seed,
        sim_streams: [2 * u64::from(id), 2 * u64::from(id) + 1],
        adc_noise: ch.adc,
        range_v: ch.quant.range_v,
        h_min_estimate: ch.estimate.h_min,
        plan: ch.plan,
        planned_rate_gbps: ch.rate.real_time_rate.gbps_2dp(),
        toeplitz_seed: seed_record,
        samples: raw.codes.len(),
        off_scale: OffScaleCheck::new(raw.off_scale_count, raw.codes.len(), ch.quant.range_v, &ch.adc),
        blocks: report.counters.blocks,
        bits_in: report.counters.bits_in,
        bits_out: report.counters.bits_out,
        discarded_bits: report.discarded_bits,
        output_file: output_name(id, format),
        seed_file: format!("seed_ch{id}.bin"),
        raw_file: g.write_raw.then(|| format!("ch{id}.raw")),
    };
    let extract_seconds = (t2 - t1).as_secs_f64();
    let timing = ChannelTiming {
        id,
        simulate_seconds: (t1 - t0).as_secs_f64(),
        extract_seconds,
        output_bits_per_sec: bits.len() as f64 / (t2 - t0).as_secs_f64().max(1e-9),
    };
    Ok(ChannelOutput {
        bits,
        raw,
        seed_bits,
        record,
        timing,
    })
}

/// Runs every channel of `cfg` and assembles the manifest, without writing.
pub fn execute(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let started = unix_now();
    let clock = Instant::now();
    let resolved = cfg.resolve()?;
    let samples = cfg.scale(opts.scale).samples_per_channel;
    let format = opts.format.unwrap_or(cfg.global.format);

    // one worker per channel; results come back in config order either way
    let outputs: Vec<ChannelOutput> = if opts.sequential {
        resolved
            .iter()
            .map(|ch| run_channel(cfg, ch, samples, format))
            .collect::<Result<_>>()?
    } else {
        resolved
            .par_iter()
            .map(|ch| run_channel(cfg, ch, samples, format))
            .collect::<Result<_>>()?
    };

    let cumulative = CumulativeRecord {
        file: format!("cumulative.{}", format.extension()),
        bits: outputs.iter().map(|o| o.bits.len() as u64).sum(),
        order: outputs.iter().map(|o| o.record.id).collect(),
        block_bits: outputs.iter().map(|o| o.record.plan.n_out).collect(),
        blocks: outputs.iter().map(|o| o.record.blocks).collect(),
    };
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scale: opts.scale,
        format,
        seed_origin: opts.seed_origin,
        config: cfg.clone(),
        channels: outputs.iter().map(|o| o.record.clone()).collect(),
        cumulative,
    };
    let timing = RunTiming {
        started_unix: started,
        finished_unix: unix_now(),
        wall_seconds: clock.elapsed().as_secs_f64(),
        channels: outputs.iter().map(|o| o.timing.clone()).collect(),
    };
    Ok(RunOutcome {
        manifest,
        timing,
        outputs,
    })
}

pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let m = &outcome.manifest;
    for o in &outcome.outputs {
        write_bits(&dir.join(&o.record.output_file), &o.bits, m.format)?;
        std::fs::write(dir.join(&o.record.seed_file), o.seed_bits.to_bytes())?;
        if let Some(raw) = &o.record.raw_file {
            write_raw_file(&dir.join(raw), &o.raw)?;
        }
    }
    let streams: Vec<&BitStream> = outcome.outputs.iter().map(|o| &o.bits).collect();
    let cumulative = interleave(&streams, &m.cumulative.block_bits);
    write_bits(&dir.join(&m.cumulative.file), &cumulative, m.format)?;
    write_json(&dir.join(MANIFEST_FILE), m)?;
    write_json(&dir.join(TIMING_FILE), &outcome.timing)?;
    Ok(())
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
    serde_json::from_str(&text).map_err(|e| crate::error::Error::Format {
        offset: 0,
        reason: format!("{}: {e}", MANIFEST_FILE),
    })
}

/// `run`: generate and write every output file.
pub fn cmd_run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let outcome = execute(cfg, opts)?;
    write_outputs(&outcome, &opts.out_dir)?;
    Ok(outcome)
}

pub fn summary_table(outcome: &RunOutcome) -> String {
    let mut s = format!(
        "{:<8}{:>12}{:>10}{:>14}{:>16}{:>12}\n",
        "channel", "samples", "off-scale", "blocks", "bits out", "seconds"
    );
    for (r, t) in outcome.manifest.channels.iter().zip(&outcome.timing.channels) {
        s.push_str(&format!(
            "{:<8}{:>12}{:>10}{:>14}{:>16}{:>12.2}{}\n",
            r.id,
            r.samples,
            r.off_scale.count,
            r.blocks,
            r.bits_out,
            t.simulate_seconds + t.extract_seconds,
            if r.off_scale.within_limit {
                ""
            } else {
                "  off-scale above limit"
            }
        ));
    }
    s.push_str(&format!(
        "cumulative: {} bits -> {}\n",
        outcome.manifest.cumulative.bits, outcome.manifest.cumulative.file
    ));
    s
}
