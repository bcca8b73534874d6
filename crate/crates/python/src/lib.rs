//! Python module `sideband_qrng`: planning, extraction, statistics and runs.
//!
//! Bit strings cross the boundary as `(bytes, n_bits)`, packed MSB-first like
//! the binary output files.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qrng::analysis::{nist_subset as sts_subset, proportion_interval as interval};
use qrng::entropy::{self, NoiseModel, QuantizerSpec};
use qrng::extractor::{build_toeplitz, ExtractorState};
use qrng::pipeline::{cmd_plan, cmd_run, RunConfig, RunOptions, Scale, Seed64, SeedOrigin, SAMPLE_CONFIG};
use qrng::{BitStream, Error};

fn py_err(e: Error) -> PyErr {
    match e.exit_code() {
        4 => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Serializable value to a Python object through `json.loads`.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn bits_from(data: &[u8], n_bits: Option<usize>) -> PyResult<BitStream> {
    BitStream::from_bytes(data, n_bits.unwrap_or(data.len() * 8)).map_err(py_err)
}

fn load_config(path: Option<PathBuf>) -> PyResult<RunConfig> {
    match path {
        Some(p) => RunConfig::load(&p),
        None => RunConfig::from_toml(SAMPLE_CONFIG),
    }
    .map_err(py_err)
}

/// Extractor sizing for one channel.
#[pyfunction]
#[pyo3(signature = (h_min, n_in = 768, n_bits = 16, epsilon = 2f64.powi(-50)))]
fn plan_extraction<'py>(
    py: Python<'py>,
    h_min: f64,
    n_in: usize,
    n_bits: u32,
    epsilon: f64,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(
        py,
        &entropy::plan_extraction(h_min, n_in, n_bits, epsilon).map_err(py_err)?,
    )
}

/// Conditional min-entropy per sample of an `n_bits` ADC on `[-range_v, range_v]`.
#[pyfunction]
#[pyo3(signature = (sigma_q, sigma_e, n_bits, range_v, k_sigma = 5.0))]
fn estimate_min_entropy<'py>(
    py: Python<'py>,
    sigma_q: f64,
    sigma_e: f64,
    n_bits: u32,
    range_v: f64,
    k_sigma: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let model = NoiseModel::new(sigma_q, sigma_e).map_err(py_err)?;
    let quant = QuantizerSpec::new(n_bits, range_v).map_err(py_err)?;
    to_py(
        py,
        &entropy::estimate_min_entropy(&model, &quant, k_sigma).map_err(py_err)?,
    )
}

/// Acceptable pass-proportion range for `n_blocks` blocks at level `alpha`.
#[pyfunction]
fn proportion_interval(alpha: f64, n_blocks: usize) -> PyResult<(f64, f64)> {
    interval(alpha, n_blocks).map_err(py_err)
}

/// Hash every whole `n`-bit block of `data` with the `m x n` Toeplitz matrix
/// built from the first `m + n - 1` bits of `seed`. Returns `(bytes, n_bits)`.
#[pyfunction]
#[pyo3(signature = (seed, m, n, data, n_bits = None))]
fn toeplitz_hash(
    py: Python<'_>,
    seed: &[u8],
    m: usize,
    n: usize,
    data: &[u8],
    n_bits: Option<usize>,
) -> PyResult<(Vec<u8>, usize)> {
    let need = m + n - 1;
    if seed.len() * 8 < need {
        return Err(PyValueError::new_err(format!(
            "seed has {} bits, need {need}",
            seed.len() * 8
        )));
    }
    let spec = build_toeplitz(bits_from(seed, Some(need))?, m, n).map_err(py_err)?;
    let input = bits_from(data, n_bits)?;
    let out = py.detach(|| ExtractorState::new(spec.shared()).feed_parallel(&input));
    Ok((out.to_bytes(), out.len()))
}

/// Statistical test battery over `n_blocks` blocks of `block_len` bits.
#[pyfunction]
#[pyo3(signature = (data, block_len, n_blocks, alpha = 0.01, n_bits = None))]
fn nist_subset<'py>(
    py: Python<'py>,
    data: &[u8],
    block_len: usize,
    n_blocks: usize,
    alpha: f64,
    n_bits: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let bits = bits_from(data, n_bits)?;
    let report = py
        .detach(|| sts_subset(&bits, block_len, n_blocks, alpha))
        .map_err(py_err)?;
    to_py(py, &report)
}

/// Extraction plan for every channel of a config (the built-in one by default).
#[pyfunction]
#[pyo3(signature = (config = None))]
fn plan(py: Python<'_>, config: Option<PathBuf>) -> PyResult<Bound<'_, PyAny>> {
    to_py(py, &cmd_plan(&load_config(config)?).map_err(py_err)?)
}

/// Simulate, extract and write a run to `out_dir`; returns the manifest.
#[pyfunction]
#[pyo3(signature = (out_dir, config = None, scale = "desk", seed = None, channels = None))]
fn run<'py>(
    py: Python<'py>,
    out_dir: PathBuf,
    config: Option<PathBuf>,
    scale: &str,
    seed: Option<u64>,
    channels: Option<Vec<u32>>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = load_config(config)?;
    if let Some(ids) = channels {
        cfg.select_channels(&ids).map_err(py_err)?;
    }
    let mut seed_origin = SeedOrigin::Config;
    if let Some(s) = seed {
        cfg.global.seed = Seed64(s);
        seed_origin = SeedOrigin::CommandLine;
    }
    cfg.validate().map_err(py_err)?;
    let scale = match scale {
        "desk" => Scale::Desk,
        "paper" => Scale::Paper,
        other => {
            return Err(PyValueError::new_err(format!(
                "scale must be 'desk' or 'paper', got {other:?}"
            )))
        }
    };
    let opts = RunOptions {
        out_dir,
        scale,
        format: None,
        sequential: false,
        seed_origin,
    };
    let outcome = py.detach(|| cmd_run(&cfg, &opts)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("manifest", to_py(py, &outcome.manifest)?)?;
    d.set_item("off_scale_ok", outcome.off_scale_ok())?;
    Ok(d.into_any())
}

/// The annotated reference configuration as TOML text.
#[pyfunction]
fn sample_config() -> &'static str {
    SAMPLE_CONFIG
}

#[pymodule]
fn sideband_qrng(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(plan_extraction, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_min_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(proportion_interval, m)?)?;
    m.add_function(wrap_pyfunction!(toeplitz_hash, m)?)?;
    m.add_function(wrap_pyfunction!(nist_subset, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(sample_config, m)?)?;
    Ok(())
}
