//! `plan`: extractor sizing and rates for every configured channel.

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::entropy::{BitRate, ExtractionPlan};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub id: u32,
    pub center_freq_hz: u64,
    pub h_min_estimate: f64,
    pub h_min: f64,
    pub plan: ExtractionPlan,
    /// Two-decimal Gbps.
    pub rate_gbps: String,
    pub rate_bits_per_sec: f64,
    /// Nyquist-limited bound, bits/s.
    pub c_max_bits_per_sec: f64,
    /// Exact rate as a reduced fraction of bits/s.
    pub rate: BitRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub channels: Vec<PlanRow>,
    /// Sum of the two-decimal channel rates.
    pub cumulative_gbps: String,
    /// The exact sum, rounded once.
    pub cumulative_exact_gbps: String,
}

pub fn cmd_plan(cfg: &RunConfig) -> Result<PlanReport> {
    let channels: Vec<PlanRow> = cfg
        .resolve()?
        .into_iter()
        .map(|c| PlanRow {
            id: c.spec.id,
            center_freq_hz: c.spec.center_freq_hz,
            h_min_estimate: c.estimate.h_min,
            h_min: c.h_min,
            plan: c.plan,
            rate_gbps: c.rate.real_time_rate.gbps_2dp(),
            rate_bits_per_sec: c.rate.real_time_rate.bits_per_sec(),
            c_max_bits_per_sec: c.rate.c_max,
            rate: c.rate.real_time_rate,
        })
        .collect();
    let centi: u64 = channels.iter().map(|r| r.rate.centi_gbps()).sum();
    let exact: BitRate = channels.iter().map(|r| r.rate).sum();
    Ok(PlanReport {
        cumulative_gbps: format!("{}.{:02}", centi / 100, centi % 100),
        cumulative_exact_gbps: exact.gbps_2dp(),
        channels,
    })
}

impl PlanReport {
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<8}{:>11}{:>10}{:>8}{:>6}{:>7}{:>8}{:>10}{:>12}{:>12}\n",
            "channel",
            "center MHz",
            "h_est",
            "h_min",
            "n_in",
            "n_out",
            "ratio",
            "seed bits",
            "rate Gbps",
            "C_max Gbps"
        );
        for r in &self.channels {
            s.push_str(&format!(
                "{:<8}{:>11}{:>10.4}{:>8.2}{:>6}{:>7}{:>7.1}%{:>10}{:>12}{:>12.2}\n",
                r.id,
                r.center_freq_hz / 1_000_000,
                r.h_min_estimate,
                r.h_min,
                r.plan.n_in,
                r.plan.n_out,
                100.0 * r.plan.ratio,
                r.plan.seed_len,
                r.rate_gbps,
                r.c_max_bits_per_sec / 1e9,
            ));
        }
        s.push_str(&format!(
            "cumulative {} Gbps (sum of channel rates; exact {} Gbps)\n",
            self.cumulative_gbps, self.cumulative_exact_gbps
        ));
        s
    }
}
