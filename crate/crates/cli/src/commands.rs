use anyhow::anyhow;
use cbsel::beampattern::{expected_beampattern, sidelobe_peaks};
use cbsel::config::OutputFormat;
use cbsel::montecarlo::{
    average_beampattern, empirical_ccdf, phase_difference_moments, simulate_trial_counts,
    sweep_average_inr, sweep_expected_trials, PhaseMoments,
};
use cbsel::rng::derive_seed;
use cbsel::selection::{run_multi_cluster, ClusterPools, MessageTally};
use cbsel::units::{linear_to_db, rad_to_deg};
use cbsel::{
    angle_grid, group_interference, run_selection, sample_beampattern, sample_network, synchronize,
    verify_outcome, Config, EstimateRow, MonteCarloError, NetworkRealization, RngStream, Scenario,
    SelectionError, SelectionOutcome, Substream,
};
use rand::seq::index::sample;
use serde::Serialize;
use serde_json::{json, Value};

use crate::input::Experiment;
use crate::output::{to_db, to_deg, OutputDir};
use crate::Failure;

/// Number of sidelobe peaks used as victims by `case4`.
pub const CASE4_VICTIMS: usize = 4;

fn single(exp: &Experiment, command: &str) -> Result<Config, Failure> {
    if exp.family.is_some() {
        return Err(Failure::Config(anyhow!("`{command}` does not take a [family] table")));
    }
    Ok(exp.curves[0].config.clone())
}

#[derive(Serialize)]
struct SelectionReport<'a> {
    scenario: &'a Scenario<f64>,
    channel_mode: cbsel::ChannelMode,
    complete: bool,
    verified: bool,
    trials: usize,
    messages: MessageTally,
    /// Approved groups in approval order.
    groups: &'a [Vec<usize>],
    /// Per group, INR (dB) at each unintended BS.
    group_inr_db: Vec<Vec<f64>>,
    threshold_db: Vec<f64>,
}

fn selection_report<'a>(
    outcome: &'a SelectionOutcome<f64>,
    network: &NetworkRealization<f64>,
    scenario: &'a Scenario<f64>,
) -> Result<SelectionReport<'a>, Failure> {
    let inrs = outcome
        .group_inrs(network, scenario)
        .map_err(|e| Failure::Runtime(e.into()))?;
    Ok(SelectionReport {
        scenario,
        channel_mode: outcome.channel_mode,
        complete: outcome.complete,
        verified: verify_outcome(outcome, network, scenario),
        trials: outcome.trials,
        messages: outcome.state.messages,
        groups: &outcome.state.approved,
        group_inr_db: inrs.iter().map(|g| to_db(g)).collect(),
        threshold_db: thresholds_db(scenario),
    })
}

fn thresholds_db(s: &Scenario<f64>) -> Vec<f64> {
    (0..s.num_unintended()).map(|k| linear_to_db(s.threshold_for(k))).collect()
}

fn selection_failure(e: SelectionError<f64>) -> Failure {
    match e {
        SelectionError::BudgetTooSmall { .. } | SelectionError::Scenario(_) => Failure::Config(e.into()),
        other => Failure::Runtime(other.into()),
    }
}

fn nonconvergence(partial: &SelectionOutcome<f64>, needed: usize) -> Failure {
    Failure::NonConvergence(format!(
        "{} of {needed} groups approved after {} trials",
        partial.state.approved.len(),
        partial.trials
    ))
}

/// Runs the selection, writing `selection.json` and, when recorded,
/// `trials.csv`. Partial results are written before a non-convergence error.
fn select_and_record(
    config: &Config,
    network: &NetworkRealization<f64>,
    out: &mut OutputDir,
) -> Result<SelectionOutcome<f64>, Failure> {
    let s = &config.scenario;
    let mut stream = RngStream::new(s.seed, Substream::Selection);
    let (outcome, needed) = match run_selection(network, s, &mut stream, &config.selection) {
        Ok(o) => (o, None),
        Err(SelectionError::NonConvergence { partial, needed }) => (*partial, Some(needed)),
        Err(e) => return Err(selection_failure(e)),
    };
    let report = selection_report(&outcome, network, s)?;
    let verified = report.verified;
    out.json("selection.json", &report)?;
    if config.selection.record_trials {
        out.trial_log("trials.csv", &outcome.state.trial_log)?;
    }
    if let Some(needed) = needed {
        return Err(nonconvergence(&outcome, needed));
    }
    if !verified {
        return Err(Failure::Validation("approved groups failed independent verification".into()));
    }
    Ok(outcome)
}

pub fn select(exp: &Experiment, out: &mut OutputDir) -> Result<(), Failure> {
    let config = single(exp, "select")?;
    let network = sample_network(&config.scenario);
    select_and_record(&config, &network, out).map(|_| ())
}

/// INR at each unintended BS when every node of `nodes` transmits at the
/// full-set power `sigma_w^2 gamma / |nodes|`.
fn full_set_inr(network: &NetworkRealization<f64>, nodes: &[usize], s: &Scenario<f64>) -> Result<Vec<f64>, Failure> {
    let dirs = s.all_directions();
    let power = s.per_node_power(nodes.len());
    (1..dirs.len())
        .map(|k| {
            group_interference(network, nodes, &dirs, 0, k, power)
                .map(|c| linear_to_db(c.inr(s.noise_power)))
                .map_err(|e| Failure::Runtime(e.into()))
        })
        .collect()
}

fn pattern(
    network: &NetworkRealization<f64>,
    nodes: &[usize],
    target: f64,
    power: f64,
    angles: &[f64],
) -> Result<Vec<f64>, Failure> {
    let phases = synchronize(network, nodes, target).map_err(|e| Failure::Runtime(e.into()))?;
    sample_beampattern(network, nodes, &phases, power, angles)
        .map(|b| b.power)
        .map_err(|e| Failure::Runtime(e.into()))
}

fn peak(angles: &[f64], power: &[f64]) -> Value {
    let (i, p) = power
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, p)| if p > b.1 { (i, p) } else { b });
    json!({ "angle_deg": rad_to_deg(angles[i]), "power_db": linear_to_db(p) })
}

/// Selected-set sample, random-set sample and average beampatterns.
pub fn beampattern(exp: &Experiment, out: &mut OutputDir, command: &str) -> Result<(), Failure> {
    let config = single(exp, command)?;
    run_beampattern(&config, out, Value::Null)
}

/// Beampattern with the unintended BSs moved to the strongest sidelobe peaks
/// of the average beampattern.
pub fn case4(exp: &Experiment, out: &mut OutputDir) -> Result<(), Failure> {
    let mut config = single(exp, "case4")?;
    let s = &config.scenario;
    let angles = angle_grid::<f64>(config.output.grid_points);
    let n = s.num_selected;
    let avg = expected_beampattern(
        s.node_distribution,
        s.disk_radius,
        s.intended_direction,
        n,
        s.per_node_power(n),
        &angles,
    );
    let peaks = sidelobe_peaks(&angles, &avg, s.intended_direction, CASE4_VICTIMS);
    if peaks.is_empty() {
        return Err(Failure::Runtime(anyhow!("average beampattern has no sidelobe peaks")));
    }
    config.scenario = s
        .with(|p| {
            p.unintended_directions = peaks.clone();
            p.per_bs_thresholds = None;
        })
        .map_err(|e| Failure::Config(e.into()))?;
    run_beampattern(
        &config,
        out,
        json!({ "victims": "sidelobe peaks of the average beampattern", "peaks_deg": to_deg(&peaks) }),
    )
}

fn run_beampattern(config: &Config, out: &mut OutputDir, note: Value) -> Result<(), Failure> {
    if config.output.average_realizations == 0 {
        return Err(Failure::Config(anyhow!("output.average_realizations must be at least 1")));
    }
    let s = &config.scenario;
    let network = sample_network(s);
    let outcome = select_and_record(config, &network, out)?;
    let effective = outcome.effective_network(&network);
    let angles = angle_grid::<f64>(config.output.grid_points);
    let n = s.num_selected;
    let power = s.per_node_power(n);

    let selected = pattern(&effective, &outcome.selected, s.intended_direction, power, &angles)?;
    let mut pick = RngStream::new(s.seed, Substream::Custom(1));
    let random_set = sample(&mut pick, network.len(), n).into_vec();
    let unselected = pattern(&network, &random_set, s.intended_direction, power, &angles)?;
    let average = average_beampattern(s, config.output.average_realizations, &angles, derive_seed(&[s.seed, 2]))
        .map_err(|e| Failure::Runtime(e.into()))?;

    let curves = match config.output.format {
        OutputFormat::Csv => {
            out.curve("selected.csv", &angles, &selected)?;
            out.curve("unselected.csv", &angles, &unselected)?;
            out.curve("average.csv", &angles, &average)?;
            json!({ "selected": "selected.csv", "unselected": "unselected.csv", "average": "average.csv" })
        }
        OutputFormat::Json => json!({
            "angle_deg": to_deg(&angles),
            "selected_db": to_db(&selected),
            "unselected_db": to_db(&unselected),
            "average_db": to_db(&average),
        }),
    };
    let group_inr = outcome
        .group_inrs(&network, s)
        .map_err(|e| Failure::Runtime(e.into()))?;
    let max_group_inr: Vec<f64> = (0..s.num_unintended())
        .map(|k| group_inr.iter().map(|g| g[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let sidecar = json!({
        "scenario": s,
        "seed": s.seed,
        "trials": outcome.trials,
        "groups": outcome.state.approved.len(),
        "unintended_directions_deg": to_deg(&s.unintended_directions),
        "threshold_db": thresholds_db(s),
        "max_group_inr_db": to_db(&max_group_inr),
        "full_set_inr_db": full_set_inr(&effective, &outcome.selected, s)?,
        "random_set_inr_db": full_set_inr(&network, &random_set, s)?,
        "selected_peak": peak(&angles, &selected),
        "curves": curves,
        "note": note,
    });
    out.json("beampattern.json", &sidecar)
}

/// One cluster per BS, each selected on its own realization; cluster `c`
/// targets BS `c` and protects all others.
pub fn case2(exp: &Experiment, out: &mut OutputDir) -> Result<(), Failure> {
    let config = single(exp, "case2")?;
    let s = &config.scenario;
    let clusters = s.num_unintended() + 1;
    let networks: Vec<NetworkRealization<f64>> = (0..clusters)
        .map(|c| {
            s.with(|p| p.seed = derive_seed(&[s.seed, c as u64]))
                .map(|cs| sample_network(&cs))
                .map_err(|e| Failure::Config(e.into()))
        })
        .collect::<Result<_, _>>()?;
    let mut stream = RngStream::new(s.seed, Substream::Selection);
    let results = run_multi_cluster(
        ClusterPools::Independent(&networks),
        s,
        clusters,
        &mut stream,
        &config.selection,
    )
    .map_err(|e| Failure::Config(e.into()))?;
    let angles = angle_grid::<f64>(config.output.grid_points);
    let dirs = s.all_directions();
    let mut reports = Vec::new();
    let mut inline = Vec::new();
    let mut failure = None;
    for (c, result) in results.into_iter().enumerate() {
        let (local, columns) = s.retarget(c).map_err(|e| Failure::Config(e.into()))?;
        let net = networks[c].with_columns(&columns);
        let (outcome, needed) = match result {
            Ok(o) => (o, None),
            Err(SelectionError::NonConvergence { partial, needed }) => (*partial, Some(needed)),
            Err(e) => return Err(selection_failure(e)),
        };
        let report = selection_report(&outcome, &net, &local)?;
        if let Some(needed) = needed {
            failure.get_or_insert(nonconvergence(&outcome, needed));
        } else if !report.verified {
            failure.get_or_insert(Failure::Validation(format!("cluster {c} failed verification")));
        }
        let effective = outcome.effective_network(&net);
        let curve = if outcome.complete {
            pattern(&effective, &outcome.selected, dirs[c], local.per_node_power(local.num_selected), &angles)?
        } else {
            Vec::new()
        };
        if config.selection.record_trials {
            out.trial_log(&format!("cluster{c}-trials.csv"), &outcome.state.trial_log)?;
        }
        let curve_ref = match config.output.format {
            OutputFormat::Csv if !curve.is_empty() => {
                let name = format!("cluster{c}.csv");
                out.curve(&name, &angles, &curve)?;
                json!(name)
            }
            OutputFormat::Json if !curve.is_empty() => {
                inline.push(to_db(&curve));
                json!(inline.len() - 1)
            }
            _ => Value::Null,
        };
        reports.push(json!({
            "cluster": c,
            "intended_direction_deg": rad_to_deg(dirs[c]),
            "unintended_directions_deg": to_deg(&local.unintended_directions),
            "selection": report,
            "full_set_inr_db": if outcome.complete { json!(full_set_inr(&effective, &outcome.selected, &local)?) } else { Value::Null },
            "curve": curve_ref,
        }));
    }
    let mut doc = json!({ "seed": s.seed, "clusters": reports });
    if config.output.format == OutputFormat::Json {
        doc["angle_deg"] = json!(to_deg(&angles));
        doc["curves_db"] = json!(inline);
    }
    out.json("case2.json", &doc)?;
    failure.map_or(Ok(()), Err)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    Trials,
    Inr,
    Ccdf,
}

impl SweepKind {
    fn stem(self) -> &'static str {
        match self {
            SweepKind::Trials => "trials",
            SweepKind::Inr => "inr",
            SweepKind::Ccdf => "ccdf",
        }
    }
}

fn harness_failure(e: MonteCarloError) -> Failure {
    match e {
        MonteCarloError::Spec(_) | MonteCarloError::Scenario(_) => Failure::Config(e.into()),
        other => Failure::Runtime(other.into()),
    }
}

pub fn sweep(exp: &Experiment, out: &mut OutputDir, kind: SweepKind) -> Result<(), Failure> {
    let mut json_curves = Vec::new();
    let mut flagged = 0;
    for curve in &exp.curves {
        let config = &curve.config;
        let spec = config.sweep_spec().map_err(|e| Failure::Config(e.into()))?;
        let rows: Vec<EstimateRow<f64>> = match kind {
            SweepKind::Trials => sweep_expected_trials(&spec),
            SweepKind::Inr => sweep_average_inr(&spec),
            SweepKind::Ccdf => {
                let grid = config.sweep.as_ref().map(|w| w.ccdf_grid.clone()).unwrap_or_default();
                if grid.is_empty() {
                    return Err(Failure::Config(anyhow!(
                        "ccdf needs sweep.ccdf_grid_db or sweep.ccdf_grid_linear"
                    )));
                }
                empirical_ccdf(&spec, &grid)
            }
        }
        .map_err(harness_failure)?;
        flagged += rows.iter().filter(|r| r.flagged).count();
        let label = curve.label.as_deref();
        match config.output.format {
            OutputFormat::Csv => {
                let name = match label {
                    Some(l) => format!("{}-{l}.csv", kind.stem()),
                    None => format!("{}.csv", kind.stem()),
                };
                out.rows(&name, spec.axis, &rows)?;
            }
            OutputFormat::Json => json_curves.push(json!({ "label": label, "rows": rows })),
        }
    }
    if !json_curves.is_empty() {
        let axis = exp.curves[0].config.sweep.as_ref().map(|s| s.axis);
        out.json(
            &format!("{}.json", kind.stem()),
            &json!({ "axis": axis.map(|a| a.name()), "curves": json_curves }),
        )?;
    }
    if flagged > 0 {
        eprintln!(
            "warning: {flagged} sweep points flagged; over {:.0}% of their runs did not converge",
            100.0 * cbsel::montecarlo::NONCONVERGENCE_FLAG_RATIO
        );
    }
    Ok(())
}

pub struct AppendixSettings {
    pub samples: usize,
    pub sequences: usize,
    pub seed: u64,
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    low: f64,
    high: f64,
    pass: bool,
}

impl Check {
    fn new(name: &'static str, value: f64, low: f64, high: f64) -> Self {
        Self {
            name,
            value,
            low,
            high,
            pass: (low..=high).contains(&value),
        }
    }
}

/// Moments of the phase-difference cosine and sine, and the mean trial
/// count for `T0 = 8`, `p = 0.5`.
pub fn validate_appendix(settings: &AppendixSettings, out: &mut OutputDir) -> Result<(), Failure> {
    if settings.samples == 0 || settings.sequences == 0 {
        return Err(Failure::Config(anyhow!("sample counts must be positive")));
    }
    let m: PhaseMoments = phase_difference_moments(settings.samples, settings.seed);
    let (t0, p) = (8, 0.5);
    let trials = simulate_trial_counts(t0, p, settings.sequences, derive_seed(&[settings.seed, 1]));
    let checks = [
        Check::new("mean_cos", m.mean_cos, -0.005, 0.005),
        Check::new("mean_sin", m.mean_sin, -0.005, 0.005),
        Check::new("var_cos", m.var_cos, 0.495, 0.505),
        Check::new("var_sin", m.var_sin, 0.495, 0.505),
        Check::new("mean_trials_t0_8_p_0.5", trials.mean, 15.7, 16.3),
    ];
    let pass = checks.iter().all(|c| c.pass);
    out.json(
        "appendix.json",
        &json!({
            "seed": settings.seed,
            "samples": settings.samples,
            "sequences": settings.sequences,
            "trial_count_std_error": trials.std_error,
            "checks": checks,
            "pass": pass,
        }),
    )?;
    for c in &checks {
        println!(
            "{:<24} {:>10.5}  [{}, {}]  {}",
            c.name,
            c.value,
            c.low,
            c.high,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::Validation("appendix checks failed".into()))
    }
}
