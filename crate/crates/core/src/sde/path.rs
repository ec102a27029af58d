use serde::{Deserialize, Serialize};

use crate::error::{Result, WishartError};
use crate::matrix::{GeneralMatrix, SymMatrix};

/// A simulated trajectory on a possibly irregular time mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub times: Vec<f64>,
    pub states: Vec<SymMatrix>,
    /// Smallest accepted step.
    pub min_step_used: f64,
    /// Number of step halvings performed.
    pub halving_events: usize,
    /// Whether the parameters lie in the regime with a known unique solution.
    pub existence_certified: bool,
}

impl PathRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, SymMatrix::dim)
    }

    pub fn terminal(&self) -> &SymMatrix {
        self.states.last().expect("path has at least one state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("path has at least one state")
    }

    /// `h_used` for every row: zero for the initial state, otherwise the step
    /// that produced it.
    pub fn step_sizes(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.times.windows(2).map(|w| w[1] - w[0]))
            .collect()
    }

    /// Entry `(0,0)` of every state, for one-dimensional paths.
    pub fn scalar_values(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.get(0, 0)).collect()
    }

    /// Trapezoidal `∫ S dt` over the whole mesh.
    pub fn integral(&self) -> SymMatrix {
        let p = self.dim();
        let mut acc = GeneralMatrix::zeros(p, p);
        for w in 0..self.len().saturating_sub(1) {
            let dt = self.times[w + 1] - self.times[w];
            acc += (self.states[w].as_matrix() + self.states[w + 1].as_matrix()) * (0.5 * dt);
        }
        SymMatrix::symmetrize(&acc)
    }

    /// Trapezoidal time average of `S` over `[from, to]`, with linear
    /// interpolation at the window edges.
    pub fn time_average(&self, from: f64, to: f64) -> Result<SymMatrix> {
        if !(from < to) || from < self.times[0] || to > self.final_time() {
            return Err(WishartError::InvalidParameter(format!(
                "averaging window [{from}, {to}] outside path [{}, {}]",
                self.times[0],
                self.final_time()
            )));
        }
        let p = self.dim();
        let mut acc = GeneralMatrix::zeros(p, p);
        for w in 0..self.len() - 1 {
            let (t0, t1) = (self.times[w], self.times[w + 1]);
            let (lo, hi) = (t0.max(from), t1.min(to));
            if hi <= lo {
                continue;
            }
            let at = |t: f64| {
                let u = (t - t0) / (t1 - t0);
                self.states[w].as_matrix() * (1.0 - u) + self.states[w + 1].as_matrix() * u
            };
            acc += (at(lo) + at(hi)) * (0.5 * (hi - lo));
        }
        Ok(SymMatrix::symmetrize(&(acc / (to - from))))
    }

    /// Piecewise-constant resampling on `0, dt, 2dt, ...` up to the final time.
    pub fn resample(&self, dt: f64) -> Result<PathRecord> {
        if !(dt > 0.0) {
            return Err(WishartError::NonPositiveStep(dt));
        }
        let end = self.final_time();
        let n = (end / dt).floor() as usize;
        let mut times = Vec::with_capacity(n + 2);
        let mut states = Vec::with_capacity(n + 2);
        let mut idx = 0;
        for i in 0..=n {
            let t = i as f64 * dt;
            while idx + 1 < self.len() && self.times[idx + 1] <= t {
                idx += 1;
            }
            times.push(t);
            states.push(self.states[idx].clone());
        }
        if *times.last().unwrap() < end {
            times.push(end);
            states.push(self.terminal().clone());
        }
        Ok(PathRecord {
            times,
            states,
            min_step_used: dt.min(self.min_step_used),
            halving_events: self.halving_events,
            existence_certified: self.existence_certified,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_path(times: &[f64], values: &[f64]) -> PathRecord {
        PathRecord {
            times: times.to_vec(),
            states: values.iter().map(|v| SymMatrix::from_diagonal(&[*v])).collect(),
            min_step_used: 0.5,
            halving_events: 0,
            existence_certified: true,
        }
    }

    #[test]
    fn trapezoid_of_linear_path_is_exact() {
        let p = scalar_path(&[0.0, 0.5, 2.0], &[0.0, 0.5, 2.0]);
        assert!((p.integral().get(0, 0) - 2.0).abs() < 1e-15);
        let avg = p.time_average(1.0, 2.0).unwrap();
        assert!((avg.get(0, 0) - 1.5).abs() < 1e-15);
        assert!(p.time_average(1.0, 3.0).is_err());
    }

    #[test]
    fn resample_is_piecewise_constant() {
        let p = scalar_path(&[0.0, 0.3, 1.0], &[1.0, 2.0, 3.0]);
        let r = p.resample(0.25).unwrap();
        assert_eq!(r.times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(r.scalar_values(), vec![1.0, 1.0, 2.0, 2.0, 3.0]);
        assert_eq!(p.step_sizes()[0], 0.0);
    }
}
