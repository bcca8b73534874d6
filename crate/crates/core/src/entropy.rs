//! Noise statistics, conditional min-entropy, extractor sizing and rate arithmetic.
//!
//! The min-entropy model treats each quantized sample as a Gaussian of width
//! `sigma_q` whose mean is displaced by classical noise the adversary knows.
//! The adversary may place that displacement anywhere in
//! `[-k_sigma * sigma_e, +k_sigma * sigma_e]`, so the guessing probability is
//! the largest single-code mass over that whole interval. The two extreme
//! codes absorb the clipped tails.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};

/// Default adversarial excursion, in units of `sigma_e`.
pub const DEFAULT_K_SIGMA: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Quantum (vacuum) noise standard deviation, volts.
    pub sigma_q: f64,
    /// Classical electronic noise standard deviation, volts.
    pub sigma_e: f64,
}

impl NoiseModel {
    pub fn new(sigma_q: f64, sigma_e: f64) -> Result<Self> {
        let m = Self { sigma_q, sigma_e };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_q.is_finite() && self.sigma_q > 0.0) {
            return Err(invalid(
                "sigma_q",
                format!("must be finite and > 0, got {}", self.sigma_q),
            ));
        }
        if !(self.sigma_e.is_finite() && self.sigma_e >= 0.0) {
            return Err(invalid(
                "sigma_e",
                format!("must be finite and >= 0, got {}", self.sigma_e),
            ));
        }
        Ok(())
    }

    pub fn sigma_total(&self) -> f64 {
        self.sigma_q.hypot(self.sigma_e)
    }

    /// Both tracks multiplied by the same linear factor.
    pub fn scaled(&self, factor: f64) -> NoiseModel {
        NoiseModel {
            sigma_q: self.sigma_q * factor,
            sigma_e: self.sigma_e * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeConvention {
    /// Code 0 at `-R`, code `2^n - 1` at `+R`, midpoint code `2^(n-1)` at 0 V.
    #[default]
    OffsetBinary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    pub n_bits: u32,
    /// Half-width of the symmetric input range `[-R, +R]`, volts.
    pub range_v: f64,
    #[serde(default)]
    pub convention: CodeConvention,
}

impl QuantizerSpec {
    pub fn new(n_bits: u32, range_v: f64) -> Result<Self> {
        let q = Self {
            n_bits,
            range_v,
            convention: CodeConvention::OffsetBinary,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=24).contains(&self.n_bits) {
            return Err(invalid(
                "n_bits",
                format!("must be in 2..=24, got {}", self.n_bits),
            ));
        }
        if !(self.range_v.is_finite() && self.range_v > 0.0) {
            return Err(invalid(
                "range_v",
                format!("must be finite and > 0, got {}", self.range_v),
            ));
        }
        if self.bin_width() <= 0.0 {
            return Err(invalid("range_v", "bin width underflows to zero"));
        }
        Ok(())
    }

    pub fn levels(&self) -> u32 {
        1 << self.n_bits
    }

    pub fn max_code(&self) -> u32 {
        self.levels() - 1
    }

    pub fn bin_width(&self) -> f64 {
        2.0 * self.range_v / f64::from(self.levels())
    }

    pub fn with_range(&self, range_v: f64) -> QuantizerSpec {
        QuantizerSpec { range_v, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Conditional min-entropy, bits per sample.
    pub h_min: f64,
    /// Largest classical excursion allowed to the adversary, volts.
    pub worst_case_shift: f64,
    /// Guessing probability behind `h_min`.
    pub p_max: f64,
}

/// Quantum-to-classical noise power ratio in dB.
pub fn qcnr_db(model: &NoiseModel) -> Result<f64> {
    model.validate()?;
    if model.sigma_e == 0.0 {
        return Err(Error::InfiniteQcnr);
    }
    Ok(10.0 * (model.sigma_q.powi(2) / model.sigma_e.powi(2)).log10())
}

/// Standard normal CDF.
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal mass on `[a, b]`, evaluated on whichever side keeps both
/// CDF values small so deep-tail differences do not cancel.
pub(crate) fn gauss_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        phi(-a) - phi(-b)
    } else if b <= 0.0 {
        phi(b) - phi(a)
    } else {
        1.0 - phi(a) - phi(-b)
    }
}

pub fn estimate_min_entropy(
    model: &NoiseModel,
    quant: &QuantizerSpec,
    k_sigma: f64,
) -> Result<EntropyEstimate> {
    model.validate()?;
    quant.validate()?;
    if !(k_sigma.is_finite() && k_sigma >= 0.0) {
        return Err(invalid(
            "k_sigma",
            format!("must be finite and >= 0, got {k_sigma}"),
        ));
    }
    let sigma = model.sigma_q;
    let delta = quant.bin_width();
    let shift = k_sigma * model.sigma_e;

    // Edge codes grow monotonically as the mean moves toward them, so the
    // extreme shift is worst. Both edges are mirror images.
    let edge = phi((-quant.range_v + delta + shift) / sigma);

    // An interior code's mass falls with the distance between its center and
    // the mean. Centers sit at odd multiples of delta/2, so the closest
    // reachable center is at distance max(0, delta/2 - shift).
    let gap = (0.5 * delta - shift).max(0.0);
    let interior = gauss_mass((gap - 0.5 * delta) / sigma, (gap + 0.5 * delta) / sigma);

    let p_max = edge.max(interior);
    if !p_max.is_finite() || p_max <= 0.0 {
        return Err(Error::Degenerate(format!(
            "guessing probability {p_max} is not a usable probability"
        )));
    }
    let h_min = (-p_max.log2()).clamp(0.0, f64::from(quant.n_bits));
    if !h_min.is_finite() {
        return Err(Error::Degenerate(format!("min-entropy {h_min} is not finite")));
    }
    Ok(EntropyEstimate {
        h_min,
        worst_case_shift: shift,
        p_max,
    })
}

/// Grid search over ADC ranges; ties go to the smaller range.
pub fn optimize_range(
    model: &NoiseModel,
    template: &QuantizerSpec,
    r_grid: &[f64],
    k_sigma: f64,
) -> Result<(f64, EntropyEstimate)> {
    if r_grid.is_empty() {
        return Err(invalid("r_grid", "range grid is empty"));
    }
    let mut best: Option<(f64, EntropyEstimate)> = None;
    for &r in r_grid {
        if !(r.is_finite() && r > 0.0) {
            return Err(invalid("r_grid", format!("range {r} is not positive")));
        }
        let est = estimate_min_entropy(model, &template.with_range(r), k_sigma)?;
        best = match best {
            Some((br, be)) if be.h_min > est.h_min || (be.h_min == est.h_min && br <= r) => Some((br, be)),
            _ => Some((r, est)),
        };
    }
    Ok(best.expect("grid is non-empty"))
}

/// Sizing of one Toeplitz extractor under the leftover hash lemma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionPlan {
    pub n_in: usize,
    pub n_out: usize,
    pub samples_per_block: usize,
    pub n_bits: u32,
    pub h_min: f64,
    pub epsilon: f64,
    pub seed_len: usize,
    pub ratio: f64,
}

impl ExtractionPlan {
    /// `2 * log2(1 / epsilon)`, the bits paid for the security parameter.
    pub fn security_penalty(&self) -> f64 {
        security_penalty(self.epsilon)
    }

    /// `N * h_min - log2(1/eps^2)`, the real-valued bound `n_out` is floored from.
    pub fn entropy_budget(&self) -> f64 {
        self.samples_per_block as f64 * self.h_min - self.security_penalty()
    }
}

fn security_penalty(epsilon: f64) -> f64 {
    -2.0 * epsilon.log2()
}

pub fn plan_extraction(h_min: f64, n_in: usize, n_bits: u32, epsilon: f64) -> Result<ExtractionPlan> {
    if !(1..=24).contains(&n_bits) {
        return Err(invalid("n_bits", format!("must be in 1..=24, got {n_bits}")));
    }
    if !(h_min.is_finite() && h_min > 0.0 && h_min <= f64::from(n_bits)) {
        return Err(invalid("h_min", format!("must be in (0, {n_bits}], got {h_min}")));
    }
    if n_in == 0 || !n_in.is_multiple_of(n_bits as usize) {
        return Err(invalid(
            "n_in",
            format!("{n_in} is not a positive multiple of n_bits = {n_bits}"),
        ));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid("epsilon", format!("must be in (0, 1), got {epsilon}")));
    }
    let samples = n_in / n_bits as usize;
    let penalty = security_penalty(epsilon);
    let budget = samples as f64 * h_min - penalty;
    if budget < 1.0 {
        return Err(Error::EntropyBudget {
            samples,
            h_min,
            penalty,
            budget,
            deficit: 1.0 - budget,
        });
    }
    let n_out = (budget.floor() as usize).min(n_in);
    Ok(ExtractionPlan {
        n_in,
        n_out,
        samples_per_block: samples,
        n_bits,
        h_min,
        epsilon,
        seed_len: n_in + n_out - 1,
        ratio: n_out as f64 / n_in as f64,
    })
}

/// An exact rational rate in bits per second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitRate {
    num: u128,
    den: u128,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl BitRate {
    pub const ZERO: BitRate = BitRate { num: 0, den: 1 };

    pub fn new(num: u128, den: u128) -> Self {
        assert!(den > 0, "zero denominator");
        let g = gcd(num, den).max(1);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    pub fn numer(&self) -> u128 {
        self.num
    }

    pub fn denom(&self) -> u128 {
        self.den
    }

    pub fn bits_per_sec(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Gbps in hundredths, rounded half-up from the exact value.
    pub fn centi_gbps(&self) -> u64 {
        let unit = self.den * 10_000_000;
        ((2 * self.num + unit) / (2 * unit)) as u64
    }

    /// Two-decimal Gbps string, e.g. `2.91`.
    pub fn gbps_2dp(&self) -> String {
        let c = self.centi_gbps();
        format!("{}.{:02}", c / 100, c % 100)
    }
}

impl std::ops::Add for BitRate {
    type Output = BitRate;
    fn add(self, rhs: BitRate) -> BitRate {
        BitRate::new(self.num * rhs.den + rhs.num * self.den, self.den * rhs.den)
    }
}

impl std::iter::Sum for BitRate {
    fn sum<I: Iterator<Item = BitRate>>(iter: I) -> BitRate {
        iter.fold(BitRate::ZERO, |a, b| a + b)
    }
}

/// Nyquist-limited extractable rate `(h_min / n) * n * 2 * W`.
pub fn max_rate(h_min: f64, quant: &QuantizerSpec, w_bw_hz: f64) -> Result<f64> {
    if !(w_bw_hz.is_finite() && w_bw_hz > 0.0) {
        return Err(invalid("w_bw", format!("must be > 0, got {w_bw_hz}")));
    }
    if !(h_min >= 0.0 && h_min <= f64::from(quant.n_bits)) {
        return Err(invalid(
            "h_min",
            format!("must be in [0, {}], got {h_min}", quant.n_bits),
        ));
    }
    let per_bit = h_min / f64::from(quant.n_bits);
    Ok(per_bit * f64::from(quant.n_bits) * 2.0 * w_bw_hz)
}

/// Output rate of a channel sampled at `f_s_hz` through `plan`.
pub fn real_time_rate(f_s_hz: u64, n_bits: u32, plan: &ExtractionPlan) -> Result<BitRate> {
    if f_s_hz == 0 {
        return Err(invalid("f_s", "sample rate must be > 0"));
    }
    if plan.n_out == 0 || plan.n_out > plan.n_in {
        return Err(invalid(
            "plan",
            format!("n_out {} outside 1..={}", plan.n_out, plan.n_in),
        ));
    }
    Ok(BitRate::new(
        u128::from(f_s_hz) * u128::from(n_bits) * plan.n_out as u128,
        plan.n_in as u128,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    pub w_bw_hz: u64,
    pub f_s_hz: u64,
    pub c_max: f64,
    pub real_time_rate: BitRate,
}

impl RateModel {
    pub fn new(quant: &QuantizerSpec, w_bw_hz: u64, plan: &ExtractionPlan) -> Result<Self> {
        let f_s_hz = 2 * w_bw_hz;
        let real = real_time_rate(f_s_hz, quant.n_bits, plan)?;
        Ok(Self {
            w_bw_hz,
            f_s_hz,
            c_max: max_rate(plan.h_min, quant, w_bw_hz as f64)?,
            real_time_rate: real,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn qcnr_examples() {
        assert_abs_diff_eq!(qcnr_db(&NoiseModel::new(1.0, 1.0).unwrap()).unwrap(), 0.0);
        let m = NoiseModel::new(10f64.sqrt(), 1.0).unwrap();
        assert_abs_diff_eq!(qcnr_db(&m).unwrap(), 10.0, epsilon = 1e-12);
        let m = NoiseModel::new(2.0, 1.0).unwrap();
        assert_abs_diff_eq!(qcnr_db(&m).unwrap(), 6.0206, epsilon = 1e-4);
        let m = NoiseModel::new(2.0, 0.0).unwrap();
        assert!(matches!(qcnr_db(&m), Err(Error::InfiniteQcnr)));
    }

    #[test]
    fn noise_model_rejects_bad_sigmas() {
        assert!(NoiseModel::new(0.0, 0.1).is_err());
        assert!(NoiseModel::new(1.0, -0.1).is_err());
        assert!(NoiseModel::new(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn quantizer_bounds() {
        assert!(QuantizerSpec::new(1, 1.0).is_err());
        assert!(QuantizerSpec::new(25, 1.0).is_err());
        assert!(QuantizerSpec::new(16, 0.0).is_err());
        let q = QuantizerSpec::new(16, 1.0).unwrap();
        assert_eq!(q.levels(), 65536);
        assert_abs_diff_eq!(q.bin_width(), 2.0 / 65536.0);
    }

    #[test]
    fn point_mass_has_no_entropy() {
        // the shift range covers a bin center, so the adversary lands on it
        let m = NoiseModel::new(1e-12, 1e-3).unwrap();
        let q = QuantizerSpec::new(16, 1.0).unwrap();
        let est = estimate_min_entropy(&m, &q, 5.0).unwrap();
        assert!(est.h_min < 1e-9, "{est:?}");
        // without classical noise the mean sits on the mid-scale code boundary
        let m = NoiseModel::new(1e-12, 0.0).unwrap();
        assert_abs_diff_eq!(
            estimate_min_entropy(&m, &q, 5.0).unwrap().h_min,
            1.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn huge_shift_collapses_to_edge() {
        let m = NoiseModel::new(0.1, 1.0).unwrap();
        let q = QuantizerSpec::new(8, 1.0).unwrap();
        let est = estimate_min_entropy(&m, &q, 5.0).unwrap();
        assert!(est.h_min < 1e-6);
        assert_abs_diff_eq!(est.worst_case_shift, 5.0);
    }

    #[test]
    fn negative_k_sigma_rejected() {
        let m = NoiseModel::new(1.0, 0.1).unwrap();
        let q = QuantizerSpec::new(8, 1.0).unwrap();
        assert!(estimate_min_entropy(&m, &q, -1.0).is_err());
    }

    #[test]
    fn optimize_range_edge_cases() {
        let m = NoiseModel::new(1.0, 0.1).unwrap();
        let q = QuantizerSpec::new(4, 1.0).unwrap();
        assert!(optimize_range(&m, &q, &[], 5.0).is_err());
        let (r, _) = optimize_range(&m, &q, &[3.0], 5.0).unwrap();
        assert_eq!(r, 3.0);
        // identical ranges tie; smaller index wins regardless of order
        let (r, _) = optimize_range(&m, &q, &[1e9, 2e9], 5.0).unwrap();
        assert_eq!(r, 1e9);
    }

    #[test]
    fn plan_perfect_source() {
        let p = plan_extraction(16.0, 768, 16, 2f64.powi(-50)).unwrap();
        assert_eq!(p.n_out, 668);
        assert_eq!(p.seed_len, 768 + 668 - 1);
        assert_eq!(p.samples_per_block, 48);
    }

    #[test]
    fn plan_reports_deficit() {
        let err = plan_extraction(2.0, 32, 16, 2f64.powi(-50)).unwrap_err();
        match err {
            Error::EntropyBudget { deficit, .. } => assert_abs_diff_eq!(deficit, 97.0),
            other => panic!("{other:?}"),
        }
        assert!(plan_extraction(14.0, 770, 16, 0.5).is_err());
        assert!(plan_extraction(17.0, 768, 16, 0.5).is_err());
        assert!(plan_extraction(14.0, 768, 16, 1.0).is_err());
    }

    #[test]
    fn rate_examples() {
        let q = QuantizerSpec::new(16, 1.0).unwrap();
        assert_abs_diff_eq!(max_rate(14.2, &q, 120e6).unwrap(), 3.408e9, epsilon = 1.0);
        assert_eq!(max_rate(0.0, &q, 120e6).unwrap(), 0.0);
        assert_eq!(max_rate(16.0, &q, 120e6).unwrap(), 16.0 * 240e6);

        let full = ExtractionPlan {
            n_out: 768,
            ..plan_extraction(16.0, 768, 16, 0.5).unwrap()
        };
        let r = real_time_rate(240_000_000, 16, &full).unwrap();
        assert_eq!(r, BitRate::new(240_000_000 * 16, 1));
    }

    #[test]
    fn centi_gbps_rounds_half_up() {
        assert_eq!(BitRate::new(2_905_000_000, 1).gbps_2dp(), "2.91");
        assert_eq!(BitRate::new(2_595_000_000, 1).gbps_2dp(), "2.60");
        assert_eq!(BitRate::new(2_594_999_999, 1).gbps_2dp(), "2.59");
    }
}
