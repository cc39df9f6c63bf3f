//! Lognormal shadowing.
//!
//! Each node/BS pair gets a multiplicative gain `a = exp(g)`, `g ~ N(m, s2)`.
//! The distance-dependent path loss is common to every node and BS and is
//! folded into the SNR target, so it does not appear here.

use serde::{Deserialize, Serialize};

use crate::rng::RngStream;
use crate::scalar::Real;
use crate::scenario::ScenarioError;

/// Parameters of the underlying Gaussian, in nepers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LognormalParams<T> {
    pub mean: T,
    pub variance: T,
}

/// Linear-domain moments of the lognormal gain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelMoments<T> {
    pub mean: T,
    pub variance: T,
}

impl<T: Real> ChannelMoments<T> {
    /// `E{a^2} = variance + mean^2 = exp(2m + 2 s2)`.
    pub fn second_moment(&self) -> T {
        self.variance + self.mean * self.mean
    }
}

impl<T: Real> LognormalParams<T> {
    pub fn new(mean: T, variance: T) -> Self {
        Self { mean, variance }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.variance >= T::zero() && self.variance.is_finite() && self.mean.is_finite() {
            Ok(())
        } else {
            Err(ScenarioError::OutOfRange {
                name: "lognormal variance",
                requirement: "finite and >= 0",
                value: self.variance.to_f64_lossy(),
            })
        }
    }

    pub fn moments(&self) -> ChannelMoments<T> {
        let two = T::lit(2.0);
        let mean = (self.mean + self.variance / two).exp();
        // exp_m1 keeps the variance exact (and exactly zero) for tiny s2.
        let variance = self.variance.exp_m1() * (two * self.mean + self.variance).exp();
        ChannelMoments { mean, variance }
    }

    pub fn sample(&self, stream: &mut RngStream) -> T {
        (self.mean + self.variance.sqrt() * T::sample_standard_normal(stream)).exp()
    }

    pub fn draw(&self, count: usize, stream: &mut RngStream) -> Vec<T> {
        (0..count).map(|_| self.sample(stream)).collect()
    }
}

/// i.i.d. lognormal gains.
pub fn draw_shadowing<T: Real>(
    params: &LognormalParams<T>,
    count: usize,
    stream: &mut RngStream,
) -> Vec<T> {
    params.draw(count, stream)
}

pub fn moments<T: Real>(params: &LognormalParams<T>) -> ChannelMoments<T> {
    params.moments()
}

/// Row-major `nodes x stations` gain matrix; column 0 is the intended BS.
#[derive(Clone, Debug, PartialEq)]
pub struct ShadowingMatrix<T> {
    gains: Vec<T>,
    stations: usize,
}

impl<T: Real> ShadowingMatrix<T> {
    pub fn sample(
        params: &LognormalParams<T>,
        nodes: usize,
        stations: usize,
        stream: &mut RngStream,
    ) -> Self {
        Self {
            gains: params.draw(nodes * stations, stream),
            stations,
        }
    }

    /// All gains equal to one.
    pub fn unit(nodes: usize, stations: usize) -> Self {
        Self {
            gains: vec![T::one(); nodes * stations],
            stations,
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let stations = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == stations), "ragged rows");
        Self {
            gains: rows.into_iter().flatten().collect(),
            stations,
        }
    }

    pub fn nodes(&self) -> usize {
        if self.stations == 0 {
            0
        } else {
            self.gains.len() / self.stations
        }
    }

    pub fn stations(&self) -> usize {
        self.stations
    }

    #[inline]
    pub fn gain(&self, node: usize, station: usize) -> T {
        self.gains[node * self.stations + station]
    }

    pub fn row(&self, node: usize) -> &[T] {
        &self.gains[node * self.stations..(node + 1) * self.stations]
    }

    pub fn redraw_row(&mut self, node: usize, params: &LognormalParams<T>, stream: &mut RngStream) {
        let s = self.stations;
        for g in &mut self.gains[node * s..(node + 1) * s] {
            *g = params.sample(stream);
        }
    }

    /// Matrix whose column `j` is column `columns[j]` of `self`.
    pub fn select_columns(&self, columns: &[usize]) -> Self {
        let nodes = self.nodes();
        let mut gains = Vec::with_capacity(nodes * columns.len());
        for n in 0..nodes {
            gains.extend(columns.iter().map(|&c| self.gain(n, c)));
        }
        Self {
            gains,
            stations: columns.len(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Substream;
    use approx::assert_relative_eq;

    fn sample_stats(params: LognormalParams<f64>, n: usize, seed: u64) -> (f64, f64, f64) {
        let mut s = RngStream::new(seed, Substream::Shadowing);
        let xs = draw_shadowing(&params, n, &mut s);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
        (mean, var, m4)
    }

    #[test]
    fn degenerate_is_one() {
        let mut s = RngStream::new(1, Substream::Shadowing);
        assert_eq!(draw_shadowing(&LognormalParams::new(0.0, 0.0), 5, &mut s), vec![1.0; 5]);
        let m = moments(&LognormalParams::new(0.0_f64, 0.0));
        assert_eq!((m.mean, m.variance), (1.0, 0.0));
        let m = moments(&LognormalParams::new(1.0_f64, 0.0));
        assert_relative_eq!(m.mean, std::f64::consts::E, max_relative = 1e-15);
        assert_eq!(m.variance, 0.0);
    }

    #[test]
    fn closed_form_values() {
        let m = moments(&LognormalParams::new(0.0_f64, 0.2));
        // e^{0.1} and (e^{0.2} - 1) e^{0.2}
        assert_relative_eq!(m.mean, 1.105_170_918_075_647_7, max_relative = 1e-14);
        assert_relative_eq!(m.variance, 0.270_421_939_481_100_5, max_relative = 1e-12);
        assert_relative_eq!(m.second_moment(), 0.4_f64.exp(), max_relative = 1e-14);
    }

    #[test]
    fn sampling_matches_moments() {
        let p = LognormalParams::new(0.0, 0.2);
        let n = 1_000_000;
        let (mean, var, m4) = sample_stats(p, n, 11);
        let m = p.moments();
        let se_mean = (m.variance / n as f64).sqrt();
        let se_var = ((m4 - var * var) / n as f64).sqrt();
        assert!((mean - m.mean).abs() < 3.0 * se_mean, "{mean} vs {}", m.mean);
        assert!((var - m.variance).abs() < 3.0 * se_var, "{var} vs {}", m.variance);
    }

    #[test]
    fn scaling_property() {
        for c in [-1.0_f64, 0.3, 2.0] {
            let base = LognormalParams::new(0.5, 0.7).moments().mean;
            let shifted = LognormalParams::new(0.5 + c, 0.7).moments().mean;
            assert_relative_eq!(shifted, c.exp() * base, max_relative = 1e-13);
        }
    }

    #[test]
    fn matrix_layout() {
        let m = ShadowingMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        assert_eq!((m.nodes(), m.stations()), (3, 2));
        assert_eq!(m.gain(2, 1), 6.0);
        let swapped = m.select_columns(&[1, 0]);
        assert_eq!(swapped.row(1), &[4.0, 3.0]);
    }

    #[test]
    fn f32_moments() {
        let m = LognormalParams::new(0.0_f32, 0.2).moments();
        assert!((m.mean - 1.105_171).abs() < 1e-6);
    }
}
