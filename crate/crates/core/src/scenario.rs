//! Experiment parameters.

use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::LognormalParams;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("group size L={group_size} must satisfy 1 <= L <= N={num_selected}")]
    GroupSize {
        group_size: usize,
        num_selected: usize,
    },
    #[error("N={num_selected} selected nodes exceeds M={num_candidates} candidates")]
    TooManySelected {
        num_selected: usize,
        num_candidates: usize,
    },
    #[error("at least one unintended direction is required")]
    NoUnintendedDirections,
    #[error("{name} must be {requirement}, got {value}")]
    OutOfRange {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("direction {value} rad is outside [-pi, pi)")]
    DirectionRange { value: f64 },
    #[error("intended direction {value} rad also listed as unintended")]
    IntendedIsUnintended { value: f64 },
    #[error("per-BS threshold list has {got} entries, expected D={expected}")]
    ThresholdCount { got: usize, expected: usize },
    #[error("cluster index {index} out of range for {available} base stations")]
    ClusterIndex { index: usize, available: usize },
}

/// Spatial distribution of the candidate nodes around the source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NodeDistribution {
    /// Uniform over a disk of radius `R`.
    #[default]
    UniformDisk,
    /// Isotropic Gaussian, standard deviation `R` per Cartesian axis.
    GaussianDisk,
}

/// Raw, unvalidated scenario fields. All powers linear, all angles radians,
/// all lengths in wavelengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ScenarioParams<T> {
    /// `M`
    pub num_candidates: usize,
    /// `N`
    pub num_selected: usize,
    /// `L`
    pub group_size: usize,
    pub disk_radius: T,
    pub intended_direction: T,
    pub unintended_directions: Vec<T>,
    pub inr_threshold: T,
    /// Optional per-BS override of `inr_threshold`, one entry per unintended BS.
    pub per_bs_thresholds: Option<Vec<T>>,
    /// `gamma`
    pub target_snr: T,
    /// `sigma_w^2`
    pub noise_power: T,
    pub shadowing: LognormalParams<T>,
    pub node_distribution: NodeDistribution,
    pub seed: u64,
}

/// A validated, immutable scenario.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
#[serde(transparent)]
pub struct Scenario<T> {
    params: ScenarioParams<T>,
}

impl<T: Real> Scenario<T> {
    pub fn new(params: ScenarioParams<T>) -> Result<Self, ScenarioError> {
        validate(&params)?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &ScenarioParams<T> {
        &self.params
    }

    pub fn into_params(self) -> ScenarioParams<T> {
        self.params
    }

    /// Applies `edit` to a copy of the parameters and revalidates.
    pub fn with(&self, edit: impl FnOnce(&mut ScenarioParams<T>)) -> Result<Self, ScenarioError> {
        let mut params = self.params.clone();
        edit(&mut params);
        Self::new(params)
    }

    /// `D`
    pub fn num_unintended(&self) -> usize {
        self.params.unintended_directions.len()
    }

    /// Intended direction followed by the unintended ones; index `k` here is
    /// the shadowing column for BS `k`.
    pub fn all_directions(&self) -> Vec<T> {
        std::iter::once(self.params.intended_direction)
            .chain(self.params.unintended_directions.iter().copied())
            .collect()
    }

    /// Threshold applied by unintended BS `bs` (0-based among the `D`).
    pub fn threshold_for(&self, bs: usize) -> T {
        match &self.params.per_bs_thresholds {
            Some(list) => list[bs],
            None => self.params.inr_threshold,
        }
    }

    /// Number of groups to approve, `ceil(N/L)`.
    pub fn groups_needed(&self) -> usize {
        self.params.num_selected.div_ceil(self.params.group_size)
    }

    /// Size of the `index`-th approved group; the last one carries the
    /// remainder of `N / L` when `L` does not divide `N`.
    pub fn group_size_at(&self, index: usize) -> usize {
        let l = self.params.group_size;
        let rem = self.params.num_selected % l;
        if rem != 0 && index + 1 == self.groups_needed() {
            rem
        } else {
            l
        }
    }

    /// Per-node transmit power when `size` nodes share the budget
    /// `sigma_w^2 * gamma`.
    pub fn per_node_power(&self, size: usize) -> T {
        self.params.noise_power * self.params.target_snr / T::count(size)
    }

    /// Scenario in which BS `index` of [`all_directions`](Self::all_directions)
    /// is the intended one and every other BS is unintended. The returned
    /// column map sends each BS of the new scenario to its column in the
    /// original ordering.
    pub fn retarget(&self, index: usize) -> Result<(Self, Vec<usize>), ScenarioError> {
        let dirs = self.all_directions();
        if index >= dirs.len() {
            return Err(ScenarioError::ClusterIndex {
                index,
                available: dirs.len(),
            });
        }
        let thresholds: Vec<T> = std::iter::once(self.params.inr_threshold)
            .chain((0..self.num_unintended()).map(|bs| self.threshold_for(bs)))
            .collect();
        let mut columns = vec![index];
        columns.extend((0..dirs.len()).filter(|&c| c != index));
        let scenario = self.with(|p| {
            p.intended_direction = dirs[index];
            p.unintended_directions = columns[1..].iter().map(|&c| dirs[c]).collect();
            if p.per_bs_thresholds.is_some() {
                p.per_bs_thresholds = Some(columns[1..].iter().map(|&c| thresholds[c]).collect());
            }
        })?;
        Ok((scenario, columns))
    }
}

impl<T> Deref for Scenario<T> {
    type Target = ScenarioParams<T>;

    fn deref(&self) -> &Self::Target {
        &self.params
    }
}

impl<'de, T: Real> Deserialize<'de> for Scenario<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let params = ScenarioParams::<T>::deserialize(d)?;
        Scenario::new(params).map_err(serde::de::Error::custom)
    }
}

fn check_positive<T: Real>(name: &'static str, v: T) -> Result<(), ScenarioError> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(ScenarioError::OutOfRange {
            name,
            requirement: "finite and > 0",
            value: v.to_f64_lossy(),
        })
    }
}

fn check_direction<T: Real>(v: T) -> Result<(), ScenarioError> {
    if v >= -T::PI() && v < T::PI() {
        Ok(())
    } else {
        Err(ScenarioError::DirectionRange {
            value: v.to_f64_lossy(),
        })
    }
}

fn validate<T: Real>(p: &ScenarioParams<T>) -> Result<(), ScenarioError> {
    if p.group_size == 0 || p.group_size > p.num_selected {
        return Err(ScenarioError::GroupSize {
            group_size: p.group_size,
            num_selected: p.num_selected,
        });
    }
    if p.num_selected > p.num_candidates {
        return Err(ScenarioError::TooManySelected {
            num_selected: p.num_selected,
            num_candidates: p.num_candidates,
        });
    }
    if p.unintended_directions.is_empty() {
        return Err(ScenarioError::NoUnintendedDirections);
    }
    check_positive("disk_radius", p.disk_radius)?;
    check_positive("noise_power", p.noise_power)?;
    check_positive("target_snr", p.target_snr)?;
    // Infinite threshold is allowed: it disables the test.
    if !(p.inr_threshold > T::zero()) {
        return Err(ScenarioError::OutOfRange {
            name: "inr_threshold",
            requirement: "> 0",
            value: p.inr_threshold.to_f64_lossy(),
        });
    }
    if let Some(list) = &p.per_bs_thresholds {
        if list.len() != p.unintended_directions.len() {
            return Err(ScenarioError::ThresholdCount {
                got: list.len(),
                expected: p.unintended_directions.len(),
            });
        }
        for &t in list {
            if !(t > T::zero()) {
                return Err(ScenarioError::OutOfRange {
                    name: "per_bs_thresholds",
                    requirement: "> 0",
                    value: t.to_f64_lossy(),
                });
            }
        }
    }
    p.shadowing.validate()?;
    check_direction(p.intended_direction)?;
    for &d in &p.unintended_directions {
        check_direction(d)?;
        if d == p.intended_direction {
            return Err(ScenarioError::IntendedIsUnintended {
                value: d.to_f64_lossy(),
            });
        }
    }
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::fixtures::base;
    use super::*;

    #[test]
    fn accepts_valid() {
        let s = Scenario::new(base()).unwrap();
        assert_eq!(s.num_unintended(), 4);
        assert_eq!(s.groups_needed(), 8);
        assert_eq!(s.group_size_at(7), 32);
        assert_eq!(s.all_directions().len(), 5);
    }

    #[test]
    fn rejects_bad_sizes() {
        let mut p = base();
        p.group_size = 0;
        assert!(matches!(Scenario::new(p), Err(ScenarioError::GroupSize { .. })));
        let mut p = base();
        p.group_size = 300;
        assert!(matches!(Scenario::new(p), Err(ScenarioError::GroupSize { .. })));
        let mut p = base();
        p.num_selected = 600;
        p.group_size = 10;
        assert!(matches!(
            Scenario::new(p),
            Err(ScenarioError::TooManySelected { .. })
        ));
    }

    #[test]
    fn rejects_bad_directions_and_powers() {
        let mut p = base();
        p.unintended_directions.clear();
        assert_eq!(
            Scenario::new(p),
            Err(ScenarioError::NoUnintendedDirections)
        );
        let mut p = base();
        p.unintended_directions.push(0.0);
        assert!(matches!(
            Scenario::new(p),
            Err(ScenarioError::IntendedIsUnintended { .. })
        ));
        let mut p = base();
        p.intended_direction = std::f64::consts::PI;
        assert!(matches!(
            Scenario::new(p),
            Err(ScenarioError::DirectionRange { .. })
        ));
        let mut p = base();
        p.noise_power = 0.0;
        assert!(matches!(Scenario::new(p), Err(ScenarioError::OutOfRange { .. })));
        let mut p = base();
        p.inr_threshold = -1.0;
        assert!(matches!(Scenario::new(p), Err(ScenarioError::OutOfRange { .. })));
        let mut p = base();
        p.shadowing = LognormalParams::new(0.0, -0.1);
        assert!(matches!(Scenario::new(p), Err(ScenarioError::OutOfRange { .. })));
        let mut p = base();
        p.per_bs_thresholds = Some(vec![1.0]);
        assert!(matches!(
            Scenario::new(p),
            Err(ScenarioError::ThresholdCount { .. })
        ));
    }

    #[test]
    fn infinite_threshold_allowed() {
        let mut p = base();
        p.inr_threshold = f64::INFINITY;
        assert!(Scenario::new(p).is_ok());
    }

    #[test]
    fn remainder_group() {
        let mut p = base();
        p.num_selected = 100;
        p.group_size = 32;
        let s = Scenario::new(p).unwrap();
        assert_eq!(s.groups_needed(), 4);
        let sizes: Vec<usize> = (0..4).map(|i| s.group_size_at(i)).collect();
        assert_eq!(sizes, vec![32, 32, 32, 4]);
        assert_eq!(sizes.iter().sum::<usize>(), 100);
    }

    #[test]
    fn retarget_rotates_roles() {
        let mut p = base();
        p.per_bs_thresholds = Some(vec![1.0, 2.0, 3.0, 4.0]);
        let s = Scenario::new(p).unwrap();
        let (r, cols) = s.retarget(2).unwrap();
        assert_eq!(cols, vec![2, 0, 1, 3, 4]);
        assert_eq!(r.intended_direction, s.unintended_directions[1]);
        assert_eq!(r.unintended_directions[0], 0.0);
        assert_eq!(r.threshold_for(0), 10.0);
        assert_eq!(r.threshold_for(1), 1.0);
        assert_eq!(r.threshold_for(2), 3.0);
        assert!(s.retarget(5).is_err());
    }

    #[test]
    fn deserialize_validates() {
        let mut p = base();
        p.group_size = 0;
        let text = toml::to_string(&p).unwrap();
        assert!(toml::from_str::<Scenario<f64>>(&text).is_err());
        let text = toml::to_string(&base()).unwrap();
        let s: Scenario<f64> = toml::from_str(&text).unwrap();
        assert_eq!(s.params(), &base());
    }
}
