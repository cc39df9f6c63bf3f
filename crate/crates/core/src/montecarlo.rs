//! Seeded Monte Carlo sweeps that pair estimates with closed-form predictions.
//!
//! Every run of every sweep point gets its own master seed
//! `derive_seed([seed_base, point_index, run_index])`, so points and runs are
//! independent yet a whole sweep is reproducible from one number. Runs execute
//! in parallel; results are collected in run order before any reduction, so
//! the output never depends on scheduling.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, AnalysisError};
use crate::beampattern::{
    sample_beampattern, synchronize, total_received_inr, BeamError, InterferingSet,
};
use crate::network::{sample_network, sample_positions, NetworkRealization};
use crate::rng::{derive_seed, RngStream, Substream};
use crate::scalar::Real;
use crate::scenario::{Scenario, ScenarioError};
use crate::selection::{run_selection, ChannelMode, SelectionError, SelectionOptions};

/// Share of non-converged runs above which a point is flagged.
pub const NONCONVERGENCE_FLAG_RATIO: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// INR threshold (linear).
    #[serde(rename = "eta_thr")]
    Threshold,
    /// Candidate group size.
    #[serde(rename = "L")]
    GroupSize,
    /// Number of unintended BSs; keeps the first `D` of the base list.
    #[serde(rename = "D")]
    Unintended,
    /// Number of simultaneously active clusters.
    #[serde(rename = "K")]
    Clusters,
    /// Number of nodes to select.
    #[serde(rename = "N")]
    Selected,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Threshold => "eta_thr",
            SweepAxis::GroupSize => "L",
            SweepAxis::Unintended => "D",
            SweepAxis::Clusters => "K",
            SweepAxis::Selected => "N",
        }
    }
}

/// How the total INR of several clusters is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InrModel {
    /// Sum of the per-cluster INRs: the received power averaged over the
    /// clusters' independent symbols. The Erlang prediction describes this.
    #[default]
    SymbolAveraged,
    /// `|sum_k z_k I_k|^2` with one uniform-phase symbol per cluster.
    Instantaneous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec<T> {
    pub base: Scenario<T>,
    pub axis: SweepAxis,
    /// Axis values; thresholds are linear, counts are whole numbers.
    pub values: Vec<T>,
    pub runs_per_point: usize,
    pub mode: ChannelMode,
    pub seed_base: u64,
    /// Active clusters when `K` is not the axis.
    pub clusters: usize,
    pub max_trials: Option<usize>,
    pub inr_model: InrModel,
}

impl<T: Real> SweepSpec<T> {
    pub fn new(base: Scenario<T>, axis: SweepAxis, values: Vec<T>) -> Self {
        Self {
            base,
            axis,
            values,
            runs_per_point: 1000,
            mode: ChannelMode::default(),
            seed_base: 0,
            clusters: 1,
            max_trials: None,
            inr_model: InrModel::default(),
        }
    }

    /// Scenario and active-cluster count at axis value `value`.
    pub fn point(&self, value: T) -> Result<(Scenario<T>, usize), MonteCarloError> {
        let mut clusters = self.clusters;
        let scenario = match self.axis {
            SweepAxis::Threshold => self.base.with(|p| {
                p.inr_threshold = value;
                p.per_bs_thresholds = None;
            })?,
            SweepAxis::GroupSize => {
                let l = count_value(self.axis, value)?;
                self.base.with(|p| p.group_size = l)?
            }
            SweepAxis::Unintended => {
                let d = count_value(self.axis, value)?;
                if d > self.base.num_unintended() {
                    return Err(MonteCarloError::Spec(format!(
                        "D = {d} exceeds the {} unintended directions of the base scenario",
                        self.base.num_unintended()
                    )));
                }
                self.base.with(|p| {
                    p.unintended_directions.truncate(d);
                    if let Some(t) = p.per_bs_thresholds.as_mut() {
                        t.truncate(d);
                    }
                })?
            }
            SweepAxis::Clusters => {
                clusters = count_value(self.axis, value)?;
                self.base.clone()
            }
            SweepAxis::Selected => {
                let n = count_value(self.axis, value)?;
                self.base.with(|p| p.num_selected = n)?
            }
        };
        Ok((scenario, clusters))
    }

    fn validate(&self, allowed: &[SweepAxis], op: &str) -> Result<(), MonteCarloError> {
        if !allowed.contains(&self.axis) {
            return Err(MonteCarloError::Spec(format!(
                "{op} does not support the {} axis",
                self.axis.name()
            )));
        }
        if self.values.is_empty() {
            return Err(MonteCarloError::Spec("sweep has no axis values".into()));
        }
        if self.runs_per_point == 0 {
            return Err(MonteCarloError::Spec("runs_per_point must be at least 1".into()));
        }
        if self.clusters == 0 && self.axis != SweepAxis::Clusters {
            return Err(MonteCarloError::Spec("clusters must be at least 1".into()));
        }
        for &v in &self.values {
            let (_, k) = self.point(v)?;
            if k == 0 {
                return Err(MonteCarloError::Spec("K must be at least 1".into()));
            }
        }
        Ok(())
    }

    fn selection_options(&self) -> SelectionOptions {
        SelectionOptions {
            max_trials: self.max_trials,
            channel_mode: self.mode,
            record_trials: false,
        }
    }

    fn run_seed(&self, point: usize, run: usize) -> u64 {
        derive_seed(&[self.seed_base, point as u64, run as u64])
    }
}

fn count_value<T: Real>(axis: SweepAxis, value: T) -> Result<usize, MonteCarloError> {
    let v = value.to_f64_lossy();
    if v >= 0.0 && v.fract() == 0.0 && v <= usize::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(MonteCarloError::Spec(format!(
            "{} axis value {v} is not a whole number",
            axis.name()
        )))
    }
}

#[derive(Debug, Error)]
pub enum MonteCarloError {
    #[error("invalid sweep: {0}")]
    Spec(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Beam(#[from] BeamError),
    #[error("selection failed: {0}")]
    Selection(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl<T: Real> From<SelectionError<T>> for MonteCarloError {
    fn from(e: SelectionError<T>) -> Self {
        MonteCarloError::Selection(e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateRow<T> {
    pub axis_value: T,
    /// CCDF abscissa; absent for mean estimates.
    pub grid_point: Option<T>,
    pub estimate: T,
    pub std_error: T,
    /// Closed-form value for the same point; absent when undefined.
    pub prediction: Option<T>,
    /// Converged runs the estimate is based on.
    pub n: usize,
    pub nonconverged: usize,
    /// More than 10% of the runs did not converge.
    pub flagged: bool,
}

/// Sample mean and its standard error (`s / sqrt(n)`, `s` with `n - 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<T> {
    pub mean: T,
    pub std_error: T,
    pub n: usize,
}

pub fn mean_estimate<T: Real>(values: &[T]) -> Estimate<T> {
    let n = values.len();
    if n == 0 {
        return Estimate {
            mean: T::nan(),
            std_error: T::nan(),
            n,
        };
    }
    let mean = values.iter().copied().sum::<T>() / T::count(n);
    let std_error = if n > 1 {
        let ss: T = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
        (ss / T::count(n - 1) / T::count(n)).sqrt()
    } else {
        T::zero()
    };
    Estimate { mean, std_error, n }
}

/// Per-run outcome before reduction; `None` marks non-convergence.
fn run_points<T: Real, F>(
    spec: &SweepSpec<T>,
    run: F,
) -> Result<Vec<(T, Scenario<T>, usize, Vec<Option<T>>)>, MonteCarloError>
where
    F: Fn(&Scenario<T>, usize, u64) -> Result<Option<T>, MonteCarloError> + Sync,
{
    spec.values
        .iter()
        .enumerate()
        .map(|(i, &value)| {
            let (scenario, clusters) = spec.point(value)?;
            let samples = (0..spec.runs_per_point)
                .into_par_iter()
                .map(|j| run(&scenario, clusters, spec.run_seed(i, j)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((value, scenario, clusters, samples))
        })
        .collect()
}

fn mean_row<T: Real>(value: T, samples: &[Option<T>], prediction: Option<T>) -> EstimateRow<T> {
    let converged: Vec<T> = samples.iter().flatten().copied().collect();
    let nonconverged = samples.len() - converged.len();
    let est = mean_estimate(&converged);
    EstimateRow {
        axis_value: value,
        grid_point: None,
        estimate: est.mean,
        std_error: est.std_error,
        prediction,
        n: est.n,
        nonconverged,
        flagged: is_flagged(nonconverged, samples.len()),
    }
}

fn is_flagged(nonconverged: usize, total: usize) -> bool {
    nonconverged as f64 > NONCONVERGENCE_FLAG_RATIO * total as f64
}

/// Trial count of one selection run on a fresh realization.
pub fn selection_trials<T: Real>(
    scenario: &Scenario<T>,
    seed: u64,
    options: &SelectionOptions,
) -> Result<Option<usize>, MonteCarloError> {
    let scenario = scenario.with(|p| p.seed = seed)?;
    let network = sample_network(&scenario);
    let mut stream = RngStream::new(seed, Substream::Selection);
    match run_selection(&network, &scenario, &mut stream, options) {
        Ok(outcome) => Ok(Some(outcome.trials)),
        Err(SelectionError::NonConvergence { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Mean number of trials per axis value, against `ceil(N/L) / p`.
pub fn sweep_expected_trials<T: Real>(spec: &SweepSpec<T>) -> Result<Vec<EstimateRow<T>>, MonteCarloError> {
    spec.validate(
        &[SweepAxis::Threshold, SweepAxis::GroupSize, SweepAxis::Unintended],
        "sweep_expected_trials",
    )?;
    let options = spec.selection_options();
    let points = run_points(spec, |scenario, _, seed| {
        Ok(selection_trials(scenario, seed, &options)?.map(T::count))
    })?;
    Ok(points
        .iter()
        .map(|(value, scenario, _, samples)| {
            mean_row(*value, samples, analysis::expected_trials(scenario).ok())
        })
        .collect())
}

/// Total INR at the first unintended BS from `clusters` independently
/// selected clusters, each on its own realization of `scenario`. `None` if any
/// cluster fails to converge.
pub fn cluster_total_inr<T: Real>(
    scenario: &Scenario<T>,
    clusters: usize,
    seed: u64,
    options: &SelectionOptions,
    model: InrModel,
) -> Result<Option<T>, MonteCarloError> {
    let mut networks: Vec<NetworkRealization<T>> = Vec::with_capacity(clusters);
    let mut selected: Vec<Vec<usize>> = Vec::with_capacity(clusters);
    for c in 0..clusters {
        let cluster_seed = derive_seed(&[seed, c as u64]);
        let local = scenario.with(|p| p.seed = cluster_seed)?;
        let network = sample_network(&local);
        let mut stream = RngStream::new(cluster_seed, Substream::Selection);
        match run_selection(&network, &local, &mut stream, options) {
            Ok(outcome) => {
                networks.push(outcome.effective_network(&network));
                selected.push(outcome.selected);
            }
            Err(SelectionError::NonConvergence { .. }) => return Ok(None),
            Err(e) => return Err(e.into()),
        }
    }
    let victim = scenario.unintended_directions[0];
    let sets: Vec<InterferingSet<'_, T>> = networks
        .iter()
        .zip(&selected)
        .map(|(network, nodes)| InterferingSet {
            network,
            nodes,
            target: scenario.intended_direction,
            victim_column: 1,
        })
        .collect();
    let n = scenario.num_selected;
    let total = match model {
        InrModel::SymbolAveraged => {
            let mut sum = T::zero();
            for set in &sets {
                sum += total_received_inr(
                    std::slice::from_ref(set),
                    &[Complex::new(T::one(), T::zero())],
                    victim,
                    n,
                    scenario.target_snr,
                    scenario.noise_power,
                )?;
            }
            sum
        }
        InrModel::Instantaneous => {
            let mut stream = RngStream::new(seed, Substream::Symbols);
            let symbols: Vec<Complex<T>> = (0..clusters)
                .map(|_| Complex::from_polar(T::one(), T::TAU() * T::sample_unit(&mut stream)))
                .collect();
            total_received_inr(
                &sets,
                &symbols,
                victim,
                n,
                scenario.target_snr,
                scenario.noise_power,
            )?
        }
    };
    Ok(Some(total))
}

/// Mean total INR of `K` selected clusters, against `2 sigma_I^2 K`.
pub fn sweep_average_inr<T: Real>(spec: &SweepSpec<T>) -> Result<Vec<EstimateRow<T>>, MonteCarloError> {
    spec.validate(&[SweepAxis::Threshold, SweepAxis::GroupSize], "sweep_average_inr")?;
    let options = spec.selection_options();
    let points = run_points(spec, |scenario, clusters, seed| {
        cluster_total_inr(scenario, clusters, seed, &options, spec.inr_model)
    })?;
    Ok(points
        .iter()
        .map(|(value, scenario, clusters, samples)| {
            mean_row(*value, samples, analysis::average_inr(scenario, *clusters).ok())
        })
        .collect())
}

/// Empirical `Pr(eta >= eta0)` over `grid` for each axis value, against the
/// Erlang CCDF.
pub fn empirical_ccdf<T: Real>(
    spec: &SweepSpec<T>,
    grid: &[T],
) -> Result<Vec<EstimateRow<T>>, MonteCarloError> {
    spec.validate(&[SweepAxis::Threshold, SweepAxis::Clusters], "empirical_ccdf")?;
    if grid.is_empty() {
        return Err(MonteCarloError::Spec("CCDF grid is empty".into()));
    }
    let options = spec.selection_options();
    let points = run_points(spec, |scenario, clusters, seed| {
        cluster_total_inr(scenario, clusters, seed, &options, spec.inr_model)
    })?;
    let mut rows = Vec::with_capacity(points.len() * grid.len());
    for (value, scenario, clusters, samples) in &points {
        let converged: Vec<T> = samples.iter().flatten().copied().collect();
        let nonconverged = samples.len() - converged.len();
        let n = converged.len();
        for &eta0 in grid {
            let (estimate, std_error) = if n == 0 {
                (T::nan(), T::nan())
            } else {
                let p = T::count(converged.iter().filter(|&&v| v >= eta0).count()) / T::count(n);
                (p, (p * (T::one() - p) / T::count(n)).sqrt())
            };
            rows.push(EstimateRow {
                axis_value: *value,
                grid_point: Some(eta0),
                estimate,
                std_error,
                prediction: analysis::inr_ccdf(eta0, *clusters, scenario).ok(),
                n,
                nonconverged,
                flagged: is_flagged(nonconverged, samples.len()),
            });
        }
    }
    Ok(rows)
}

#[derive(Serialize)]
struct CsvRow<'a, T> {
    axis: &'a str,
    axis_value: T,
    grid_point: Option<T>,
    estimate: T,
    std_error: T,
    prediction: Option<T>,
    n: usize,
    nonconverged: usize,
    flagged: bool,
}

/// Writes rows as CSV with a header and LF line endings.
pub fn write_rows_csv<T: Real, W: Write>(
    axis: SweepAxis,
    rows: &[EstimateRow<T>],
    writer: W,
) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    for r in rows {
        w.serialize(CsvRow {
            axis: axis.name(),
            axis_value: r.axis_value,
            grid_point: r.grid_point,
            estimate: r.estimate,
            std_error: r.std_error,
            prediction: r.prediction,
            n: r.n,
            nonconverged: r.nonconverged,
            flagged: r.flagged,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Sample moments of `cos` and `sin` of the difference of two independent
/// uniform phases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseMoments {
    pub samples: usize,
    pub mean_cos: f64,
    pub mean_sin: f64,
    pub var_cos: f64,
    pub var_sin: f64,
}

const CHUNKS: usize = 64;

fn chunk_bounds(total: usize, chunk: usize) -> (usize, usize) {
    (total * chunk / CHUNKS, total * (chunk + 1) / CHUNKS)
}

pub fn phase_difference_moments(samples: usize, seed: u64) -> PhaseMoments {
    let partial: Vec<[f64; 4]> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let (lo, hi) = chunk_bounds(samples, c);
            let mut stream = RngStream::new(seed, Substream::Custom(c as u64));
            let mut acc = [0.0; 4];
            for _ in lo..hi {
                let t1 = std::f64::consts::TAU * f64::sample_unit(&mut stream) - std::f64::consts::PI;
                let t2 = std::f64::consts::TAU * f64::sample_unit(&mut stream) - std::f64::consts::PI;
                let (s, co) = (t1 - t2).sin_cos();
                acc[0] += co;
                acc[1] += s;
                acc[2] += co * co;
                acc[3] += s * s;
            }
            acc
        })
        .collect();
    let mut acc = [0.0; 4];
    for p in &partial {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    let n = samples as f64;
    let mean_cos = acc[0] / n;
    let mean_sin = acc[1] / n;
    let unbias = n / (n - 1.0);
    PhaseMoments {
        samples,
        mean_cos,
        mean_sin,
        var_cos: (acc[2] / n - mean_cos * mean_cos) * unbias,
        var_sin: (acc[3] / n - mean_sin * mean_sin) * unbias,
    }
}

/// Trials needed for `t0` successes in independent Bernoulli(`p`) draws,
/// simulated `sequences` times.
pub fn simulate_trial_counts(t0: usize, p: f64, sequences: usize, seed: u64) -> Estimate<f64> {
    let counts: Vec<f64> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let (lo, hi) = chunk_bounds(sequences, c);
            let mut stream = RngStream::new(seed, Substream::Custom(c as u64));
            (lo..hi)
                .map(|_| {
                    let mut successes = 0;
                    let mut trials = 0usize;
                    while successes < t0 {
                        trials += 1;
                        if f64::sample_unit(&mut stream) < p {
                            successes += 1;
                        }
                    }
                    trials as f64
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect();
    mean_estimate(&counts)
}

/// Beampattern averaged over `realizations` independent placements of `N`
/// nodes, synchronized to the intended direction, without shadowing.
pub fn average_beampattern<T: Real>(
    scenario: &Scenario<T>,
    realizations: usize,
    angles: &[T],
    seed: u64,
) -> Result<Vec<T>, MonteCarloError> {
    let n = scenario.num_selected;
    let power = scenario.per_node_power(n);
    let nodes: Vec<usize> = (0..n).collect();
    let patterns = (0..realizations)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(derive_seed(&[seed, i as u64]), Substream::Positions);
            let positions = sample_positions(scenario.node_distribution, scenario.disk_radius, n, &mut stream);
            let network = NetworkRealization::with_unit_channel(positions, 1);
            let phases = synchronize(&network, &nodes, scenario.intended_direction)?;
            Ok(sample_beampattern(&network, &nodes, &phases, power, angles)?.power)
        })
        .collect::<Result<Vec<_>, MonteCarloError>>()?;
    let mut avg = vec![T::zero(); angles.len()];
    for p in &patterns {
        for (a, v) in avg.iter_mut().zip(p) {
            *a += *v;
        }
    }
    let scale = T::count(realizations.max(1));
    Ok(avg.into_iter().map(|v| v / scale).collect())
}
