//! `analyze`: randomness tests, pairwise independence, histograms and
//! bitmaps over bit files, raw sample files, or a run directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ScaleConfig;
use super::io::{is_raw_file, read_bits, read_raw_file};
use super::run::{read_manifest, write_json, MANIFEST_FILE};
use crate::analysis::{
    bitmap, code_histogram, empirical_min_entropy, nist_subset, xor_bitmap, ByteUniformity,
    CorrelationReport, Histogram, PbmFormat, TestReport,
};
use crate::bits::BitStream;
use crate::error::{Error, Result};
use crate::source::RawSampleBlock;

pub const REPORT_JSON: &str = "analysis.json";
pub const REPORT_TEXT: &str = "analysis.txt";
/// Bins of the coarse code histogram kept in the report.
pub const HISTOGRAM_BINS: usize = 1024;

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub scale: ScaleConfig,
    pub alpha: f64,
    /// Where reports and bitmaps go; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
}

pub enum Input {
    Bits {
        name: String,
        path: PathBuf,
        bits: BitStream,
    },
    Raw {
        name: String,
        path: PathBuf,
        block: RawSampleBlock,
        /// Model guessing probability, when a manifest provides it.
        model_p_max: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub name: String,
    pub path: PathBuf,
    pub bits: usize,
    pub ones_fraction: f64,
    pub sts: Option<TestReport>,
    /// Why the randomness tests did not run.
    pub sts_skipped: Option<String>,
    pub bytes: ByteUniformity,
    pub bitmap_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSummary {
    pub name: String,
    pub path: PathBuf,
    pub channel_id: u32,
    pub samples: usize,
    pub n_bits: u32,
    pub off_scale_fraction: f64,
    pub empirical_h_min: Option<f64>,
    pub model_h_min: Option<f64>,
    /// Counts over `HISTOGRAM_BINS` equal groups of adjacent codes.
    pub histogram: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub report: CorrelationReport,
    pub max_rho: f64,
    pub max_mi: f64,
    pub independent: bool,
    pub passed: bool,
    pub xor_bitmap_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub alpha: f64,
    pub streams: Vec<StreamSummary>,
    pub raw: Vec<RawSummary>,
    pub pairs: Vec<PairSummary>,
    pub passed: bool,
}

/// Loads a path; a directory is read through its run manifest.
pub fn load_inputs(path: &Path) -> Result<Vec<Input>> {
    if path.is_dir() {
        let m = read_manifest(path)?;
        let mut out = Vec::new();
        for c in &m.channels {
            let p = path.join(&c.output_file);
            out.push(Input::Bits {
                name: format!("ch{}", c.id),
                bits: read_bits(&p)?.slice(0, c.bits_out as usize),
                path: p,
            });
        }
        for c in &m.channels {
            if let Some(raw) = &c.raw_file {
                let p = path.join(raw);
                out.push(Input::Raw {
                    name: format!("ch{}_raw", c.id),
                    block: read_raw_file(&p)?,
                    path: p,
                    model_p_max: Some((-c.h_min_estimate).exp2()),
                });
            }
        }
        return Ok(out);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into());
    if is_raw_file(path)? {
        Ok(vec![Input::Raw {
            name,
            block: read_raw_file(path)?,
            path: path.to_path_buf(),
            model_p_max: None,
        }])
    } else {
        Ok(vec![Input::Bits {
            name,
            bits: read_bits(path)?,
            path: path.to_path_buf(),
        }])
    }
}

fn unique_names(inputs: &mut [Input]) {
    let mut seen = std::collections::HashMap::<String, usize>::new();
    for input in inputs.iter_mut() {
        let name = match input {
            Input::Bits { name, .. } | Input::Raw { name, .. } => name,
        };
        let n = seen.entry(name.clone()).or_insert(0);
        *n += 1;
        if *n > 1 {
            *name = format!("{name}_{n}");
        }
    }
}

fn same_source(a: &Path, b: &Path, x: &BitStream, y: &BitStream) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(p), Ok(q)) if p == q => true,
        _ => x == y,
    }
}

/// Largest square bitmap of at most `side` pixels a side that the stream fills.
fn bitmap_side(bits: usize, side: usize) -> usize {
    side.min((bits as f64).sqrt() as usize)
}

pub fn analyze(mut inputs: Vec<Input>, opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    unique_names(&mut inputs);
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let sc = &opts.scale;
    let mut streams = Vec::new();
    let mut raw = Vec::new();
    let mut bit_inputs: Vec<(&str, &Path, &BitStream)> = Vec::new();

    for input in &inputs {
        match input {
            Input::Bits { name, path, bits } => {
                bit_inputs.push((name, path, bits));
                streams.push(stream_summary(name, path, bits, opts)?);
            }
            Input::Raw {
                name,
                path,
                block,
                model_p_max,
            } => {
                let hist = Histogram::of_codes(&block.codes, block.n_bits);
                raw.push(RawSummary {
                    name: name.clone(),
                    path: path.clone(),
                    channel_id: block.channel_id,
                    samples: block.len(),
                    n_bits: block.n_bits,
                    off_scale_fraction: block.off_scale_fraction(),
                    empirical_h_min: empirical_min_entropy(block).ok(),
                    model_h_min: model_p_max.map(|p| -p.log2()),
                    histogram: hist.rebin(HISTOGRAM_BINS.min(hist.counts.len())),
                });
            }
        }
    }

    let mut pairs = Vec::new();
    for i in 0..bit_inputs.len() {
        for j in i + 1..bit_inputs.len() {
            let (na, pa, a) = bit_inputs[i];
            let (nb, pb, b) = bit_inputs[j];
            let n = a.len().min(b.len()).min(sc.correlation_bits);
            let (x, y) = (a.slice(0, n), b.slice(0, n));
            let dependent = same_source(pa, pb, a, b);
            let report = CorrelationReport::compute((na.into(), nb.into()), &x, &y, sc.max_lag, dependent)?;
            let mut xor_file = None;
            if let Some(dir) = &opts.out_dir {
                let side = bitmap_side(n, sc.bitmap_side);
                if side > 0 {
                    let img = xor_bitmap(&bitmap(&x, side, side)?, &bitmap(&y, side, side)?)?;
                    let f = format!("xor_{na}_{nb}.pbm");
                    std::fs::write(dir.join(&f), img.to_pbm(PbmFormat::P4))?;
                    xor_file = Some(f);
                }
            }
            pairs.push(PairSummary {
                max_rho: report.rho.max(),
                max_mi: report.mi.max(),
                independent: report.independent(),
                passed: report.passed(),
                report,
                xor_bitmap_file: xor_file,
            });
        }
    }

    let passed = streams
        .iter()
        .all(|s| s.sts.as_ref().is_none_or(|r| r.all_passed()))
        && pairs.iter().all(|p| p.passed);
    let report = AnalysisReport {
        alpha: opts.alpha,
        streams,
        raw,
        pairs,
        passed,
    };
    if let Some(dir) = &opts.out_dir {
        write_json(&dir.join(REPORT_JSON), &report)?;
        std::fs::write(dir.join(REPORT_TEXT), report.table())?;
    }
    Ok(report)
}

fn stream_summary(name: &str, path: &Path, bits: &BitStream, opts: &AnalyzeOptions) -> Result<StreamSummary> {
    let sc = &opts.scale;
    let blocks = sc.sts_blocks.min(bits.len() / sc.sts_block_len);
    let (sts, sts_skipped) = if blocks == 0 {
        (
            None,
            Some(format!(
                "{} bits are fewer than one {}-bit block",
                bits.len(),
                sc.sts_block_len
            )),
        )
    } else {
        match nist_subset(bits, sc.sts_block_len, blocks, opts.alpha) {
            Ok(r) => (Some(r), None),
            Err(e @ (Error::InsufficientData { .. } | Error::InvalidParameter { .. })) => {
                (None, Some(e.to_string()))
            }
            Err(e) => return Err(e),
        }
    };
    let (_, bytes) = code_histogram(bits, opts.alpha)?;
    let mut bitmap_file = None;
    if let Some(dir) = &opts.out_dir {
        let side = bitmap_side(bits.len(), sc.bitmap_side);
        if side > 0 {
            let f = format!("bitmap_{name}.pbm");
            std::fs::write(dir.join(&f), bitmap(bits, side, side)?.to_pbm(PbmFormat::P4))?;
            bitmap_file = Some(f);
        }
    }
    Ok(StreamSummary {
        name: name.into(),
        path: path.to_path_buf(),
        bits: bits.len(),
        ones_fraction: bits.count_ones() as f64 / bits.len().max(1) as f64,
        sts,
        sts_skipped,
        bytes,
        bitmap_file,
    })
}

impl AnalysisReport {
    pub fn table(&self) -> String {
        let mut s = String::new();
        for st in &self.streams {
            s.push_str(&format!(
                "== {} ({} bits, ones {:.5}, byte chi-square p {:.4})\n",
                st.name, st.bits, st.ones_fraction, st.bytes.p_value
            ));
            match (&st.sts, &st.sts_skipped) {
                (Some(r), _) => s.push_str(&r.table()),
                (None, Some(why)) => s.push_str(&format!("randomness tests skipped: {why}\n")),
                (None, None) => {}
            }
        }
        for r in &self.raw {
            s.push_str(&format!(
                "== {} (channel {}, {} samples, off-scale {:.3e}, empirical h_min {}, model h_min {})\n",
                r.name,
                r.channel_id,
                r.samples,
                r.off_scale_fraction,
                r.empirical_h_min.map_or("n/a".into(), |h| format!("{h:.4}")),
                r.model_h_min.map_or("n/a".into(), |h| format!("{h:.4}")),
            ));
        }
        if !self.pairs.is_empty() {
            s.push_str(&format!(
                "{:<20}{:>12}{:>12}{:>12}{:>12}  {}\n",
                "pair", "max |rho|", "rho bound", "max MI", "MI bound", "verdict"
            ));
        }
        for p in &self.pairs {
            let r = &p.report;
            let verdict = if r.expected_dependent {
                "same stream (expected dependent)"
            } else if p.independent {
                "independent"
            } else {
                "DEPENDENT"
            };
            s.push_str(&format!(
                "{:<20}{:>12.3e}{:>12.3e}{:>12.3e}{:>12.3e}  {}\n",
                format!("{} / {}", r.channels.0, r.channels.1),
                p.max_rho,
                r.rho_threshold,
                p.max_mi,
                r.mi_threshold,
                verdict
            ));
        }
        s.push_str(if self.passed {
            "overall: PASS\n"
        } else {
            "overall: FAIL\n"
        });
        s
    }
}

/// Run directories are recognized by their manifest.
pub fn is_run_dir(path: &Path) -> bool {
    path.join(MANIFEST_FILE).is_file()
}
