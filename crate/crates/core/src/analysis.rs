//! Closed-form performance predictions for node selection.
//!
//! * phase difference statistics: `u = cos(Delta)` has density
//!   `1/(pi sqrt(1-u^2))`, mean 0, variance 1/2;
//! * per-BS approval probability `p' = 1 - exp(-eta_thr sigma_w^2 / (2 sigma_X^2))`,
//!   joint approval `p = prod_k p'_k`;
//! * trial count `T ~ NegBin(T0, p)`, `E{T} = T0 / p`;
//! * truncated component variance `sigma_I^2` and the Erlang CCDF of the
//!   total INR from `K` active clusters.
//!
//! `sigma_X^2 = gamma sigma_w^2 sigma_u^2 E{a^2}`: the interference component
//! of one node is `a x`, whose variance is `E{a^2} E{x^2}` because `x` has zero
//! mean. `E{a^2}` is the lognormal second moment `exp(2m + 2 s2)`.

use thiserror::Error;

use crate::scalar::Real;
use crate::scenario::Scenario;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },
    #[error("interference component variance is zero; INR is deterministic")]
    DegenerateChannel,
    #[error("approval probability is zero; expected trial count is infinite")]
    ZeroProbability,
}

/// `E{u}` for `u` the cosine (or sine) of a uniform phase difference.
pub const PHASE_DIFF_MEAN: f64 = 0.0;
/// `E{u^2}`, likewise.
pub const PHASE_DIFF_VARIANCE: f64 = 0.5;

/// Density of `u = cos(theta_1 - theta_2)` with `theta_i ~ U[-pi, pi]`.
pub fn phase_diff_pdf<T: Real>(u: T) -> Result<T, AnalysisError> {
    if !(u.abs() < T::one()) {
        return Err(AnalysisError::Domain {
            value: u.to_f64_lossy(),
            domain: "(-1, 1)",
        });
    }
    Ok(T::one() / (T::PI() * (T::one() - u * u).sqrt()))
}

/// Variance of one node's interference component before the `sqrt(P)`
/// scaling, `sigma_1^2 = sigma_u^2 E{a^2}`.
pub fn node_component_variance<T: Real>(scenario: &Scenario<T>) -> T {
    T::lit(PHASE_DIFF_VARIANCE) * scenario.shadowing.moments().second_moment()
}

/// `sigma_X^2 = gamma sigma_w^2 sigma_1^2`: variance of each of the real and
/// imaginary interference sums of a tested group.
pub fn component_variance<T: Real>(scenario: &Scenario<T>) -> T {
    scenario.target_snr * scenario.noise_power * node_component_variance(scenario)
}

/// `beta = sigma_w^2 eta_thr / (2 sigma_X^2)` for threshold `threshold`.
pub fn truncation_ratio<T: Real>(scenario: &Scenario<T>, threshold: T) -> Result<T, AnalysisError> {
    let sx2 = component_variance(scenario);
    if !(sx2 > T::zero()) {
        return Err(AnalysisError::DegenerateChannel);
    }
    Ok(scenario.noise_power * threshold / (T::lit(2.0) * sx2))
}

/// `1 - exp(-beta)`, computed without cancellation.
pub fn approval_from_ratio<T: Real>(beta: T) -> T {
    -(-beta).exp_m1()
}

/// Per-BS approval probability at the shared threshold, and the joint
/// probability over all `D` unintended BSs (per-BS thresholds honoured).
pub fn approval_probability<T: Real>(scenario: &Scenario<T>) -> Result<(T, T), AnalysisError> {
    let single = approval_from_ratio(truncation_ratio(scenario, scenario.inr_threshold)?);
    let mut joint = T::one();
    for bs in 0..scenario.num_unintended() {
        joint *= approval_from_ratio(truncation_ratio(scenario, scenario.threshold_for(bs))?);
    }
    Ok((single, joint))
}

/// `E{T} = T0 / p`.
pub fn expected_trials_for<T: Real>(t0: usize, p: T) -> Result<T, AnalysisError> {
    if !(p > T::zero()) {
        return Err(AnalysisError::ZeroProbability);
    }
    Ok(T::count(t0) / p)
}

/// `E{T} = ceil(N/L) / p`.
pub fn expected_trials<T: Real>(scenario: &Scenario<T>) -> Result<T, AnalysisError> {
    let (_, p) = approval_probability(scenario)?;
    expected_trials_for(scenario.groups_needed(), p)
}

/// Negative binomial pmf `C(t-1, T0-1) p^T0 (1-p)^(t-T0)`, evaluated in log
/// space. Zero for `t < T0`.
pub fn trial_count_pmf<T: Real>(t: usize, t0: usize, p: T) -> Result<T, AnalysisError> {
    if !(p > T::zero() && p <= T::one()) {
        return Err(AnalysisError::Domain {
            value: p.to_f64_lossy(),
            domain: "(0, 1]",
        });
    }
    if t0 == 0 {
        return Err(AnalysisError::Domain {
            value: 0.0,
            domain: "T0 >= 1",
        });
    }
    if t < t0 {
        return Ok(T::zero());
    }
    let failures = t - t0;
    if p == T::one() {
        return Ok(if failures == 0 { T::one() } else { T::zero() });
    }
    // ln C(t-1, T0-1) = sum_{k=1}^{T0-1} ln((failures + k) / k)
    let log_binom: T = (1..t0)
        .map(|k| (T::count(failures + k) / T::count(k)).ln())
        .sum();
    let log_pmf = log_binom + T::count(t0) * p.ln() + T::count(failures) * (-p).ln_1p();
    Ok(log_pmf.exp())
}

/// Gaussian tail `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function<T: Real>(x: T) -> T {
    T::lit(0.5) * (x / T::SQRT_2()).erfc()
}

/// Marginal density of one truncated component `U` (either `X` or `Y`) of an
/// approved group, conditioned on `X^2 + Y^2 <= sigma_w^2 eta_thr`. Zero
/// outside the support.
pub fn truncated_component_pdf<T: Real>(u: T, scenario: &Scenario<T>) -> Result<T, AnalysisError> {
    let sx2 = component_variance(scenario);
    if !(sx2 > T::zero()) {
        return Err(AnalysisError::DegenerateChannel);
    }
    let c = scenario.noise_power * scenario.inr_threshold;
    let rem = c - u * u;
    if rem < T::zero() {
        return Ok(T::zero());
    }
    let sx = sx2.sqrt();
    let beta = c / (T::lit(2.0) * sx2);
    let gauss = (-(u * u) / (T::lit(2.0) * sx2)).exp() / (T::TAU() * sx2).sqrt();
    let inner = T::one() - T::lit(2.0) * q_function(rem.sqrt() / sx);
    Ok(gauss * inner / approval_from_ratio(beta))
}

/// `sigma_I^2 / (sigma_X^2 / sigma_w^2)` as a function of `beta`:
/// `(1 - (1+beta) e^-beta) / (1 - e^-beta)`. Tends to 1 as `beta -> inf`
/// and to `beta / 2` as `beta -> 0`.
pub fn truncation_factor<T: Real>(beta: T) -> Result<T, AnalysisError> {
    if !(beta > T::zero()) {
        return Err(AnalysisError::Domain {
            value: beta.to_f64_lossy(),
            domain: "beta > 0",
        });
    }
    if beta.is_infinite() {
        return Ok(T::one());
    }
    // numerator = 1 - e^-b - b e^-b = -expm1(-b) - b e^-b
    let denom = -(-beta).exp_m1();
    let num = if beta < T::lit(1e-2) {
        // series b^2/2 - b^3/3 + b^4/8 - b^5/30
        let b2 = beta * beta;
        b2 * (T::lit(0.5) - beta / T::lit(3.0) + b2 / T::lit(8.0) - b2 * beta / T::lit(30.0))
    } else {
        denom - beta * (-beta).exp()
    };
    Ok(num / denom)
}

/// Variance `sigma_I^2` of each normalized interference component of one
/// selected cluster: `sigma_X^2 (1 - (1+beta) e^-beta) / (sigma_w^2 (1 - e^-beta))`.
pub fn truncated_variance<T: Real>(scenario: &Scenario<T>) -> Result<T, AnalysisError> {
    let beta = truncation_ratio(scenario, scenario.inr_threshold)?;
    Ok(component_variance(scenario) / scenario.noise_power * truncation_factor(beta)?)
}

/// Erlang rate `alpha = 1 / (2 sigma_I^2)`.
pub fn erlang_rate<T: Real>(scenario: &Scenario<T>) -> Result<T, AnalysisError> {
    Ok(T::one() / (T::lit(2.0) * truncated_variance(scenario)?))
}

/// Erlang density of the total INR from `k` clusters.
pub fn erlang_pdf<T: Real>(eta: T, k: usize, alpha: T) -> T {
    if eta < T::zero() || k == 0 {
        return T::zero();
    }
    let log_fact: T = (1..k).map(|i| T::count(i).ln()).sum();
    if eta == T::zero() {
        return if k == 1 { alpha } else { T::zero() };
    }
    (T::count(k) * alpha.ln() + T::count(k - 1) * eta.ln() - alpha * eta - log_fact).exp()
}

/// Erlang CCDF `Pr(eta >= eta0) = sum_{k<K} (alpha eta0)^k e^{-alpha eta0} / k!`.
///
/// Terms are formed in log space and accumulated with Neumaier summation.
pub fn erlang_ccdf<T: Real>(eta0: T, k: usize, alpha: T) -> Result<T, AnalysisError> {
    if k == 0 {
        return Err(AnalysisError::Domain {
            value: 0.0,
            domain: "K >= 1",
        });
    }
    if eta0.is_nan() || eta0 < T::zero() {
        return Err(AnalysisError::Domain {
            value: eta0.to_f64_lossy(),
            domain: "eta0 >= 0",
        });
    }
    let x = alpha * eta0;
    if x == T::zero() {
        return Ok(T::one());
    }
    let ln_x = x.ln();
    let mut log_fact = T::zero();
    let mut sum = T::zero();
    let mut comp = T::zero();
    for i in 0..k {
        if i > 0 {
            log_fact += T::count(i).ln();
        }
        let term = (T::count(i) * ln_x - x - log_fact).exp();
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    Ok((sum + comp).min(T::one()))
}

/// CCDF of the total INR at a victim BS from `k` selected clusters.
pub fn inr_ccdf<T: Real>(eta0: T, k: usize, scenario: &Scenario<T>) -> Result<T, AnalysisError> {
    erlang_ccdf(eta0, k, erlang_rate(scenario)?)
}

/// Mean total INR from `k` clusters, `2 sigma_I^2 k`.
pub fn average_inr<T: Real>(scenario: &Scenario<T>, k: usize) -> Result<T, AnalysisError> {
    Ok(T::lit(2.0) * truncated_variance(scenario)? * T::count(k))
}

/// Every closed-form quantity for one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticalPrediction<T> {
    pub phase_variance: T,
    pub node_variance: T,
    pub component_variance: T,
    pub approval_single: T,
    pub approval_all: T,
    pub expected_trials: T,
    pub beta: T,
    pub truncated_variance: T,
    pub erlang_rate: T,
    pub active_clusters: usize,
}

impl<T: Real> AnalyticalPrediction<T> {
    pub fn for_scenario(scenario: &Scenario<T>, active_clusters: usize) -> Result<Self, AnalysisError> {
        let (single, all) = approval_probability(scenario)?;
        let truncated = truncated_variance(scenario)?;
        Ok(Self {
            phase_variance: T::lit(PHASE_DIFF_VARIANCE),
            node_variance: node_component_variance(scenario),
            component_variance: component_variance(scenario),
            approval_single: single,
            approval_all: all,
            expected_trials: expected_trials_for(scenario.groups_needed(), all)?,
            beta: truncation_ratio(scenario, scenario.inr_threshold)?,
            truncated_variance: truncated,
            erlang_rate: T::one() / (T::lit(2.0) * truncated),
            active_clusters,
        })
    }

    pub fn ccdf(&self, eta0: T) -> Result<T, AnalysisError> {
        erlang_ccdf(eta0, self.active_clusters, self.erlang_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LognormalParams;
    use crate::scenario::{fixtures::base, ScenarioParams};
    use approx::assert_relative_eq;
    use std::f64::consts::{E, PI};

    fn scenario(edit: impl FnOnce(&mut ScenarioParams<f64>)) -> Scenario<f64> {
        let mut p = base();
        edit(&mut p);
        Scenario::new(p).unwrap()
    }

    /// Composite Simpson on `[a, b]` with `n` (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn phase_pdf_values_and_moments() {
        assert_relative_eq!(phase_diff_pdf(0.0_f64).unwrap(), 1.0 / PI, max_relative = 1e-15);
        assert!(phase_diff_pdf(1.0_f64).is_err());
        assert!(phase_diff_pdf(-1.5_f64).is_err());
        // u = sin(t) removes the endpoint singularities: du = cos t dt.
        let pdf_sub = |t: f64| phase_diff_pdf(t.sin()).unwrap() * t.cos();
        let mass = simpson(pdf_sub, -PI / 2.0 + 1e-7, PI / 2.0 - 1e-7, 2000);
        assert_relative_eq!(mass, 1.0, epsilon = 1e-6);
        let m2 = simpson(|t| t.sin().powi(2) * pdf_sub(t), -PI / 2.0 + 1e-7, PI / 2.0 - 1e-7, 2000);
        assert_relative_eq!(m2, PHASE_DIFF_VARIANCE, epsilon = 1e-6);
        let m1 = simpson(|t| t.sin() * pdf_sub(t), -PI / 2.0 + 1e-7, PI / 2.0 - 1e-7, 2000);
        assert!(m1.abs() < 1e-10);
    }

    #[test]
    fn component_variance_formula() {
        let s = scenario(|p| {
            p.target_snr = 100.0;
            p.noise_power = 0.05;
            p.shadowing = LognormalParams::new(0.0, 0.2);
        });
        assert_relative_eq!(component_variance(&s), 100.0 * 0.05 * 0.5 * 0.4_f64.exp(), max_relative = 1e-14);
        let doubled = s.with(|p| p.target_snr = 200.0).unwrap();
        assert_relative_eq!(component_variance(&doubled), 2.0 * component_variance(&s), max_relative = 1e-14);
        // Without shadowing the gain is exactly one and E{a^2} = 1.
        let flat = s.with(|p| p.shadowing = LognormalParams::new(0.0, 0.0)).unwrap();
        assert_relative_eq!(component_variance(&flat), 2.5, max_relative = 1e-14);
    }

    #[test]
    fn approval_probability_examples() {
        // Pick eta_thr so that eta_thr sigma_w^2 / (2 sigma_X^2) = 1.
        let s = scenario(|p| {
            p.unintended_directions.truncate(1);
            p.noise_power = 1.0;
            p.target_snr = 1.0;
            p.shadowing = LognormalParams::new(0.0, 0.0);
        });
        let s = s.with(|p| p.inr_threshold = 2.0 * 0.5).unwrap();
        let (single, all) = approval_probability(&s).unwrap();
        assert_relative_eq!(single, 1.0 - (-1.0_f64).exp(), max_relative = 1e-14);
        assert_eq!(single, all);

        let s2 = s
            .with(|p| {
                p.unintended_directions = vec![1.0, 2.0];
                p.inr_threshold = 2.0 * 0.5 * 2.0_f64.ln();
            })
            .unwrap();
        let (single, all) = approval_probability(&s2).unwrap();
        assert_relative_eq!(single, 0.5, max_relative = 1e-14);
        assert_relative_eq!(all, 0.25, max_relative = 1e-14);

        let inf = s.with(|p| p.inr_threshold = f64::INFINITY).unwrap();
        assert_eq!(approval_probability(&inf).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn per_bs_thresholds_multiply() {
        let s = scenario(|p| {
            p.unintended_directions = vec![1.0, 2.0];
            p.per_bs_thresholds = Some(vec![5.0, 20.0]);
        });
        let a = approval_from_ratio(truncation_ratio(&s, 5.0).unwrap());
        let b = approval_from_ratio(truncation_ratio(&s, 20.0).unwrap());
        assert_relative_eq!(approval_probability(&s).unwrap().1, a * b, max_relative = 1e-14);
    }

    #[test]
    fn approval_probability_matches_gaussian_sampling() {
        // sigma_X^2 = 0.5, sigma_w^2 = 1 -> beta = eta_thr; pick beta = 1.
        use crate::rng::{RngStream, Substream};
        let mut rng = RngStream::new(3, Substream::Custom(1));
        let n = 100_000;
        let sx = 0.5_f64.sqrt();
        let hits = (0..n)
            .filter(|_| {
                let x = sx * f64::sample_standard_normal(&mut rng);
                let y = sx * f64::sample_standard_normal(&mut rng);
                x * x + y * y <= 1.0
            })
            .count() as f64
            / n as f64;
        let p = 1.0 - (-1.0_f64).exp();
        assert!((hits - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt(), "{hits}");
    }

    #[test]
    fn degenerate_channel_rejected() {
        let s = scenario(|p| p.shadowing = LognormalParams::new(0.0, 0.0));
        // sigma^2 = 0 still gives E{a^2} = 1, so only a zero SNR-noise product
        // could make sigma_X^2 vanish; force it through a tiny gain instead.
        assert!(component_variance(&s) > 0.0);
        let tiny = s.with(|p| p.shadowing = LognormalParams::new(-400.0, 0.0)).unwrap();
        assert_eq!(component_variance(&tiny), 0.0);
        assert_eq!(approval_probability(&tiny), Err(AnalysisError::DegenerateChannel));
        assert_eq!(truncated_variance(&tiny), Err(AnalysisError::DegenerateChannel));
    }

    #[test]
    fn expected_trials_examples() {
        assert_eq!(expected_trials_for(8, 0.5_f64).unwrap(), 16.0);
        assert_eq!(expected_trials_for(8, 1.0_f64).unwrap(), 8.0);
        assert_eq!(expected_trials_for(8, 0.0_f64), Err(AnalysisError::ZeroProbability));
        let s = scenario(|p| p.inr_threshold = f64::INFINITY);
        assert_eq!(expected_trials(&s).unwrap(), 8.0);
    }

    #[test]
    fn pmf_reduces_to_geometric_and_normalizes() {
        for t in 1..20 {
            let p = 0.3_f64;
            assert_relative_eq!(
                trial_count_pmf(t, 1, p).unwrap(),
                (1.0 - p).powi(t as i32 - 1) * p,
                max_relative = 1e-12
            );
        }
        assert_eq!(trial_count_pmf(3, 5, 0.4_f64).unwrap(), 0.0);
        for &(t0, p) in &[(1usize, 0.1_f64), (8, 0.3), (8, 0.9), (20, 0.05)] {
            let mut total = 0.0;
            let mut mean = 0.0;
            let mut t = t0;
            loop {
                let v = trial_count_pmf(t, t0, p).unwrap();
                total += v;
                mean += v * t as f64;
                // Tail bound: remaining mass below 1e-12 once past the mode and tiny.
                if t > (t0 as f64 / p) as usize * 4 && v < 1e-14 {
                    break;
                }
                t += 1;
            }
            assert_relative_eq!(total, 1.0, epsilon = 1e-10);
            assert_relative_eq!(mean, t0 as f64 / p, max_relative = 1e-8);
        }
        assert_eq!(trial_count_pmf(8, 8, 1.0_f64).unwrap(), 1.0);
        assert_eq!(trial_count_pmf(9, 8, 1.0_f64).unwrap(), 0.0);
    }

    #[test]
    fn pmf_matches_binomial_coefficient() {
        // C(11, 7) p^8 (1-p)^4 at t = 12
        let p = 0.3_f64;
        let direct = 330.0 * p.powi(8) * (1.0 - p).powi(4);
        assert_relative_eq!(trial_count_pmf(12, 8, p).unwrap(), direct, max_relative = 1e-12);
    }

    #[test]
    fn q_function_values() {
        assert_relative_eq!(q_function(0.0_f64), 0.5, max_relative = 1e-15);
        assert_relative_eq!(q_function(1.0_f64), 0.158_655_253_931_457_05, max_relative = 1e-12);
        assert_relative_eq!(q_function(5.0_f64), 2.866_515_718_791_939e-7, max_relative = 1e-10);
        assert_relative_eq!(q_function(-1.0_f64) + q_function(1.0), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn truncated_pdf_normalizes_and_matches_variance() {
        for &eta_db in &[-5.0_f64, 0.0, 5.0, 10.0] {
            let s = scenario(|p| {
                p.noise_power = 0.05;
                p.target_snr = 1.0;
                p.inr_threshold = 10f64.powf(eta_db / 10.0);
            });
            let c = (s.noise_power * s.inr_threshold).sqrt();
            // Substitute u = c sin(t) to tame the square-root edge.
            let f = |t: f64| truncated_component_pdf(c * t.sin(), &s).unwrap() * c * t.cos();
            let mass = simpson(f, -PI / 2.0, PI / 2.0, 4000);
            assert_relative_eq!(mass, 1.0, epsilon = 1e-6);
            let m2 = simpson(|t| (c * t.sin()).powi(2) * f(t), -PI / 2.0, PI / 2.0, 4000);
            let expect = truncated_variance(&s).unwrap() * s.noise_power;
            assert_relative_eq!(m2, expect, max_relative = 1e-6);
            let u = 0.3 * c;
            assert_eq!(
                truncated_component_pdf(u, &s).unwrap(),
                truncated_component_pdf(-u, &s).unwrap()
            );
            assert_eq!(truncated_component_pdf(1.01 * c, &s).unwrap(), 0.0);
        }
    }

    #[test]
    fn truncation_factor_examples() {
        let expect = (1.0 - 2.0 / E) / (1.0 - 1.0 / E);
        assert_relative_eq!(truncation_factor(1.0_f64).unwrap(), expect, max_relative = 1e-14);
        assert_relative_eq!(expect, 0.418_023_293_130_673_6, max_relative = 1e-12);
        assert_relative_eq!(truncation_factor(60.0_f64).unwrap(), 1.0, max_relative = 1e-12);
        assert_eq!(truncation_factor(f64::INFINITY).unwrap(), 1.0);
        assert!(truncation_factor(0.0_f64).is_err());
        // series and closed-form branches agree near the switch point
        let lo = truncation_factor(0.009_999_f64).unwrap();
        let hi = truncation_factor(0.010_001_f64).unwrap();
        assert!((hi - lo).abs() < 1e-6);
        assert_relative_eq!(truncation_factor(1e-6_f64).unwrap(), 0.5e-6, max_relative = 1e-5);
    }

    #[test]
    fn truncation_factor_strictly_increasing() {
        let mut prev = 0.0;
        for i in 1..=1000 {
            let beta = 1e-4 * 1.015_f64.powi(i);
            let v = truncation_factor(beta).unwrap();
            // saturates to 1.0 in double precision past beta ~ 37
            if beta < 30.0 {
                assert!(v > prev, "not increasing at beta={beta}");
            } else {
                assert!(v >= prev);
            }
            assert!(v <= 1.0);
            prev = v;
        }
    }

    #[test]
    fn truncated_variance_matches_rejection_sampling() {
        use crate::rng::{RngStream, Substream};
        // sigma_X^2 / sigma_w^2 = 1 and beta = 1 -> sigma_w^2 eta_thr = 2.
        let mut rng = RngStream::new(4, Substream::Custom(2));
        let mut acc = Vec::new();
        while acc.len() < 200_000 {
            let x = f64::sample_standard_normal(&mut rng);
            let y = f64::sample_standard_normal(&mut rng);
            if x * x + y * y <= 2.0 {
                acc.push(x);
            }
        }
        let n = acc.len() as f64;
        let var = acc.iter().map(|x| x * x).sum::<f64>() / n;
        let expect = truncation_factor(1.0).unwrap();
        let se = (acc.iter().map(|x| (x * x - var).powi(2)).sum::<f64>() / n / n).sqrt();
        assert!((var - expect).abs() < 3.0 * se, "{var} vs {expect}");
    }

    #[test]
    fn ccdf_examples() {
        assert_eq!(erlang_ccdf(0.0_f64, 3, 2.0).unwrap(), 1.0);
        assert_relative_eq!(erlang_ccdf(1.5_f64, 1, 2.0).unwrap(), (-3.0_f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(erlang_ccdf(1.0_f64, 3, 2.0).unwrap(), 5.0 * (-2.0_f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(5.0 * (-2.0_f64).exp(), 0.676_676_416_183_063_9, max_relative = 1e-14);
        assert!(erlang_ccdf(-1.0_f64, 1, 1.0).is_err());
        assert!(erlang_ccdf(1.0_f64, 0, 1.0).is_err());
        // Large arguments stay finite and tiny.
        let v = erlang_ccdf(1000.0_f64, 50, 1.0).unwrap();
        assert!(v >= 0.0 && v < 1e-300);
    }

    #[test]
    fn ccdf_matches_pdf_integral() {
        let alpha = 1.7_f64;
        for k in 1..5 {
            for &eta0 in &[0.1, 0.8, 2.5] {
                let tail = simpson(|e| erlang_pdf(e, k, alpha), eta0, eta0 + 60.0, 20_000);
                assert_relative_eq!(erlang_ccdf(eta0, k, alpha).unwrap(), tail, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn ccdf_matches_exponential_sums() {
        use crate::rng::{RngStream, Substream};
        let mut rng = RngStream::new(5, Substream::Custom(3));
        let n = 1_000_000;
        let exceed = (0..n)
            .filter(|_| {
                let s: f64 = (0..3).map(|_| -(1.0 - f64::sample_unit(&mut rng)).ln()).sum();
                s >= 2.0
            })
            .count() as f64
            / n as f64;
        let p = 5.0 * (-2.0_f64).exp();
        assert!((exceed - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt(), "{exceed}");
    }

    #[test]
    fn ccdf_monotone() {
        for k in 1..6 {
            let mut prev = 1.0;
            for i in 0..200 {
                let v = erlang_ccdf(i as f64 * 0.05, k, 1.3).unwrap();
                assert!(v <= prev + 1e-15);
                prev = v;
                if k > 1 {
                    assert!(v >= erlang_ccdf(i as f64 * 0.05, k - 1, 1.3).unwrap() - 1e-15);
                }
            }
        }
    }

    #[test]
    fn prediction_invariants() {
        for &eta in &[0.03_f64, 1.0, 10.0] {
            let s = scenario(|p| {
                p.noise_power = 0.05;
                p.target_snr = 1.0;
                p.inr_threshold = eta;
            });
            let pred = AnalyticalPrediction::for_scenario(&s, 2).unwrap();
            assert_relative_eq!(pred.approval_all, pred.approval_single.powi(4), max_relative = 1e-12);
            assert!(pred.truncated_variance < pred.component_variance / s.noise_power);
            assert!(pred.beta > 0.0 && pred.erlang_rate > 0.0);
            assert_relative_eq!(pred.expected_trials, 8.0 / pred.approval_all, max_relative = 1e-12);
            assert_relative_eq!(
                average_inr(&s, 2).unwrap(),
                2.0 / pred.erlang_rate,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn f32_paths() {
        assert!((phase_diff_pdf(0.0_f32).unwrap() - 0.318_309_9).abs() < 1e-6);
        assert!((erlang_ccdf(1.0_f32, 3, 2.0).unwrap() - 0.676_676_4).abs() < 1e-6);
        assert!((truncation_factor(1.0_f32).unwrap() - 0.418_023_3).abs() < 1e-6);
    }
}
