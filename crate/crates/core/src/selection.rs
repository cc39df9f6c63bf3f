//! Iterative node selection with per-BS INR feedback.
//!
//! Each trial draws a candidate group uniformly at random from the pool,
//! synchronizes it toward the intended BS with per-node power
//! `sigma_w^2 gamma / |group|`, and lets every unintended BS compare its INR
//! against its threshold. Any reject returns the whole group to the pool;
//! otherwise the group is approved and its nodes leave the pool for good.
//! Selection ends after `ceil(N/L)` approvals or when the trial budget runs
//! out.
//!
//! The select/offer/approve handshake is collapsed into the random draw; only
//! message counts are kept.

use std::collections::HashSet;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beampattern::{group_interference, InterferenceComponents, PhasorTable};
use crate::channel::ShadowingMatrix;
use crate::network::{sample_positions, NetworkRealization, NodePosition};
use crate::rng::RngStream;
use crate::scalar::Real;
use crate::scenario::{Scenario, ScenarioError};

/// How shadowing behaves across trials of one selection run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelMode {
    /// Gains frozen for the whole realization.
    #[default]
    #[serde(alias = "fixed")]
    FixedChannelPerRealization,
    /// Placement and gains of the tested nodes are redrawn before every
    /// trial, so verdicts are i.i.d.; an approved group keeps the draw it was
    /// approved under.
    #[serde(alias = "redraw")]
    RedrawPerTrial,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectionOptions {
    /// Defaults to `10^4 * ceil(N/L)`.
    pub max_trials: Option<usize>,
    pub channel_mode: ChannelMode,
    /// Keep a [`TrialRecord`] per trial.
    pub record_trials: bool,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self {
            max_trials: None,
            channel_mode: ChannelMode::default(),
            record_trials: true,
        }
    }
}

impl SelectionOptions {
    pub fn trial_budget<T: Real>(&self, scenario: &Scenario<T>) -> usize {
        self.max_trials
            .unwrap_or(10_000 * scenario.groups_needed())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Approved,
    /// Index (among the `D` unintended BSs) of the first BS that rejected.
    Rejected { bs: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord<T> {
    pub group: Vec<usize>,
    pub per_bs_inr: Vec<T>,
    pub verdict: Verdict,
}

/// Control-plane message counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MessageTally {
    pub select: usize,
    pub test: usize,
    pub reject: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionState<T> {
    /// Candidates still available.
    pub pool: Vec<usize>,
    /// Approved groups in approval order.
    pub approved: Vec<Vec<usize>>,
    pub trial_log: Vec<TrialRecord<T>>,
    pub trials: usize,
    pub messages: MessageTally,
}

impl<T> SelectionState<T> {
    pub fn approved_count(&self) -> usize {
        self.approved.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionOutcome<T> {
    /// Union of the approved groups, in approval order.
    pub selected: Vec<usize>,
    pub trials: usize,
    pub state: SelectionState<T>,
    pub channel_mode: ChannelMode,
    /// Gains in force at the end of the run. Equal to the realization's
    /// shadowing unless redrawn per trial.
    pub channel: ShadowingMatrix<T>,
    /// Node positions in force at the end of the run, likewise.
    pub positions: Vec<NodePosition<T>>,
    /// Whether `ceil(N/L)` groups were approved.
    pub complete: bool,
}

impl<T: Real> SelectionOutcome<T> {
    /// INR of every approved group at every unintended BS, recomputed from the
    /// final channel.
    pub fn group_inrs(
        &self,
        network: &NetworkRealization<T>,
        scenario: &Scenario<T>,
    ) -> Result<Vec<Vec<T>>, crate::beampattern::BeamError> {
        let effective = self.effective_network(network);
        let dirs = scenario.all_directions();
        self.state
            .approved
            .iter()
            .map(|group| {
                let power = scenario.per_node_power(group.len());
                (1..dirs.len())
                    .map(|k| {
                        group_interference(&effective, group, &dirs, 0, k, power)
                            .map(|c| c.inr(scenario.noise_power))
                    })
                    .collect()
            })
            .collect()
    }

    /// The realization with the channel the approvals were made under.
    pub fn effective_network(&self, network: &NetworkRealization<T>) -> NetworkRealization<T> {
        match self.channel_mode {
            ChannelMode::FixedChannelPerRealization => network.clone(),
            ChannelMode::RedrawPerTrial => {
                NetworkRealization::new(self.positions.clone(), self.channel.clone())
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectionError<T: Real> {
    #[error("selection did not converge within {} trials ({} of {} groups approved)", .partial.trials, .partial.state.approved.len(), .needed)]
    NonConvergence {
        partial: Box<SelectionOutcome<T>>,
        needed: usize,
    },
    #[error("pool of {available} nodes cannot supply a group of {needed}")]
    PoolExhausted { available: usize, needed: usize },
    #[error("trial budget {max_trials} is below the minimum {minimum}")]
    BudgetTooSmall { max_trials: usize, minimum: usize },
    #[error("network has {nodes} nodes and {stations} stations, scenario needs {m} and {d}")]
    Dimensions {
        nodes: usize,
        stations: usize,
        m: usize,
        d: usize,
    },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

fn check_dimensions<T: Real>(
    network: &NetworkRealization<T>,
    scenario: &Scenario<T>,
) -> Result<(), SelectionError<T>> {
    let d = scenario.num_unintended() + 1;
    if network.len() != scenario.num_candidates || network.shadowing.stations() != d {
        return Err(SelectionError::Dimensions {
            nodes: network.len(),
            stations: network.shadowing.stations(),
            m: scenario.num_candidates,
            d,
        });
    }
    Ok(())
}

/// Runs the selection algorithm on one realization.
pub fn run_selection<T: Real>(
    network: &NetworkRealization<T>,
    scenario: &Scenario<T>,
    stream: &mut RngStream,
    options: &SelectionOptions,
) -> Result<SelectionOutcome<T>, SelectionError<T>> {
    check_dimensions(network, scenario)?;
    select_from_pool(network, scenario, (0..network.len()).collect(), stream, options)
}

fn select_from_pool<T: Real>(
    network: &NetworkRealization<T>,
    scenario: &Scenario<T>,
    mut pool: Vec<usize>,
    stream: &mut RngStream,
    options: &SelectionOptions,
) -> Result<SelectionOutcome<T>, SelectionError<T>> {
    let needed = scenario.groups_needed();
    let budget = options.trial_budget(scenario);
    if budget < needed {
        return Err(SelectionError::BudgetTooSmall {
            max_trials: budget,
            minimum: needed,
        });
    }
    // Forked unconditionally so the selection order does not depend on the
    // channel mode.
    let mut redraw_stream = stream.fork(0x5244);
    let dirs = scenario.all_directions();
    let mut table = PhasorTable::new(network, dirs[0], &dirs[1..]);
    let victims = dirs.len() - 1;
    let thresholds: Vec<T> = (0..victims).map(|k| scenario.threshold_for(k)).collect();
    let mut working = network.clone();

    let mut state = SelectionState {
        pool: Vec::new(),
        approved: Vec::with_capacity(needed),
        trial_log: Vec::new(),
        trials: 0,
        messages: MessageTally::default(),
    };
    let mut inrs = vec![T::zero(); victims];

    while state.approved.len() < needed && state.trials < budget {
        let size = scenario.group_size_at(state.approved.len());
        if pool.len() < size {
            return Err(SelectionError::PoolExhausted {
                available: pool.len(),
                needed: size,
            });
        }
        // Partial Fisher-Yates: the group is the first `size` pool entries.
        for i in 0..size {
            let j = i + stream.index(pool.len() - i);
            pool.swap(i, j);
        }
        let group = &pool[..size];
        if options.channel_mode == ChannelMode::RedrawPerTrial {
            for &r in group {
                working.positions[r] = sample_positions(
                    scenario.node_distribution,
                    scenario.disk_radius,
                    1,
                    &mut redraw_stream,
                )[0];
                working
                    .shadowing
                    .redraw_row(r, &scenario.shadowing, &mut redraw_stream);
                table.refresh(&working, r, dirs[0], &dirs[1..]);
            }
        }
        state.trials += 1;
        state.messages.select += 1;
        state.messages.test += 1;

        let power = scenario.per_node_power(size);
        let mut first_reject = None;
        for (k, inr) in inrs.iter_mut().enumerate() {
            let sum: Complex<T> = group
                .iter()
                .map(|&r| table.get(r, k) * working.shadowing.gain(r, k + 1))
                .sum();
            *inr = InterferenceComponents::from_sum(sum, power).inr(scenario.noise_power);
            if *inr > thresholds[k] {
                state.messages.reject += 1;
                first_reject.get_or_insert(k);
            }
        }
        let verdict = match first_reject {
            Some(bs) => Verdict::Rejected { bs },
            None => Verdict::Approved,
        };
        if options.record_trials {
            state.trial_log.push(TrialRecord {
                group: group.to_vec(),
                per_bs_inr: inrs.clone(),
                verdict,
            });
        }
        if verdict == Verdict::Approved {
            state.approved.push(pool.drain(..size).collect());
        }
    }

    let complete = state.approved.len() == needed;
    if complete {
        state.messages.end = 1;
    }
    state.pool = pool;
    let outcome = SelectionOutcome {
        selected: state.approved.iter().flatten().copied().collect(),
        trials: state.trials,
        state,
        channel_mode: options.channel_mode,
        channel: working.shadowing,
        positions: working.positions,
        complete,
    };
    if complete {
        Ok(outcome)
    } else {
        Err(SelectionError::NonConvergence {
            partial: Box::new(outcome),
            needed,
        })
    }
}

/// Replays an outcome against the raw realization: sizes, disjointness and
/// every approved group's INR at every unintended BS.
pub fn verify_outcome<T: Real>(
    outcome: &SelectionOutcome<T>,
    network: &NetworkRealization<T>,
    scenario: &Scenario<T>,
) -> bool {
    if !outcome.complete
        || check_dimensions(network, scenario).is_err()
        || outcome.selected.len() != scenario.num_selected
        || outcome.state.approved.len() != scenario.groups_needed()
    {
        return false;
    }
    for (i, group) in outcome.state.approved.iter().enumerate() {
        if group.len() != scenario.group_size_at(i) {
            return false;
        }
    }
    let flat: Vec<usize> = outcome.state.approved.iter().flatten().copied().collect();
    if flat != outcome.selected {
        return false;
    }
    let mut seen = HashSet::new();
    if !flat.iter().all(|&r| r < network.len() && seen.insert(r)) {
        return false;
    }
    if outcome.state.pool.iter().any(|r| seen.contains(r)) {
        return false;
    }
    match outcome.group_inrs(network, scenario) {
        Ok(per_group) => per_group.iter().all(|inrs| {
            inrs.iter()
                .enumerate()
                .all(|(k, &inr)| inr <= scenario.threshold_for(k))
        }),
        Err(_) => false,
    }
}

/// Where the clusters of a multi-destination run draw their nodes from.
#[derive(Clone, Copy, Debug)]
pub enum ClusterPools<'a, T> {
    /// One realization per cluster, sampled with the base scenario's column
    /// order.
    Independent(&'a [NetworkRealization<T>]),
    /// One realization shared by all clusters; nodes approved for one cluster
    /// are unavailable to the next.
    Shared(&'a NetworkRealization<T>),
}

/// Cluster `c` targets BS `c` of [`Scenario::all_directions`] and treats every
/// other BS as unintended. Clusters are selected one after another.
pub fn run_multi_cluster<T: Real>(
    pools: ClusterPools<'_, T>,
    scenario: &Scenario<T>,
    clusters: usize,
    stream: &mut RngStream,
    options: &SelectionOptions,
) -> Result<Vec<Result<SelectionOutcome<T>, SelectionError<T>>>, ScenarioError> {
    let mut results = Vec::with_capacity(clusters);
    let mut taken: HashSet<usize> = HashSet::new();
    for c in 0..clusters {
        let (local, columns) = scenario.retarget(c)?;
        let mut cluster_stream = stream.fork(c as u64);
        let result = match pools {
            ClusterPools::Independent(networks) => match networks.get(c) {
                Some(net) => {
                    let net = net.with_columns(&columns);
                    run_selection(&net, &local, &mut cluster_stream, options)
                }
                None => Err(SelectionError::PoolExhausted {
                    available: 0,
                    needed: local.group_size,
                }),
            },
            ClusterPools::Shared(net) => {
                let net = net.with_columns(&columns);
                let pool: Vec<usize> = (0..net.len()).filter(|r| !taken.contains(r)).collect();
                let result = check_dimensions(&net, &local).and_then(|_| {
                    if pool.len() < local.num_selected {
                        Err(SelectionError::NonConvergence {
                            partial: Box::new(empty_outcome(&net, options, pool.clone())),
                            needed: local.groups_needed(),
                        })
                    } else {
                        select_from_pool(&net, &local, pool, &mut cluster_stream, options)
                    }
                });
                if let Ok(outcome) = &result {
                    taken.extend(outcome.selected.iter().copied());
                }
                result
            }
        };
        results.push(result);
    }
    Ok(results)
}

fn empty_outcome<T: Real>(
    network: &NetworkRealization<T>,
    options: &SelectionOptions,
    pool: Vec<usize>,
) -> SelectionOutcome<T> {
    SelectionOutcome {
        selected: Vec::new(),
        trials: 0,
        state: SelectionState {
            pool,
            approved: Vec::new(),
            trial_log: Vec::new(),
            trials: 0,
            messages: MessageTally::default(),
        },
        channel_mode: options.channel_mode,
        channel: network.shadowing.clone(),
        positions: network.positions.clone(),
        complete: false,
    }
}

/// One line per trial: index, verdict, first rejecting BS and the INR (dB)
/// at every unintended BS.
pub fn write_trial_log_csv<T: Real, W: std::io::Write>(
    log: &[TrialRecord<T>],
    writer: W,
) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    let stations = log.first().map_or(0, |t| t.per_bs_inr.len());
    let mut header = vec!["trial_index".to_string(), "verdict".into(), "rejecting_bs".into()];
    header.extend((0..stations).map(|k| format!("inr_db_bs{k}")));
    w.write_record(&header)?;
    for (i, t) in log.iter().enumerate() {
        let (verdict, bs) = match t.verdict {
            Verdict::Approved => ("approved", String::new()),
            Verdict::Rejected { bs } => ("rejected", bs.to_string()),
        };
        let mut rec = vec![(i + 1).to_string(), verdict.to_string(), bs];
        rec.extend(
            t.per_bs_inr
                .iter()
                .map(|&v| crate::units::linear_to_db(v).to_f64_lossy().to_string()),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
