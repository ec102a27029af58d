//! Monte Carlo aggregation and path-parallel execution.
//!
//! Each path draws from its own child stream of a root [`RngStream`], and
//! per-path results are reduced in path order, so a run is reproducible
//! regardless of how rayon schedules the work.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WishartError};
use crate::rng::RngStream;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub estimate: f64,
    /// `s / √n`; `None` when a single sample leaves it undefined.
    pub std_error: Option<f64>,
    pub n_paths: usize,
}

impl McSummary {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let mut acc = McAccumulator::default();
        for &x in samples {
            acc.push(x)?;
        }
        acc.finish()
    }

    /// Standard error, or `0` for a single sample. Only meaningful for
    /// reporting; exact checks should use `std_error`.
    pub fn std_error_or_zero(&self) -> f64 {
        self.std_error.unwrap_or(0.0)
    }
}

/// Welford accumulator; partial accumulators merge associatively.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct McAccumulator {
    count: usize,
    mean: f64,
    m2: f64,
}

impl McAccumulator {
    pub fn push(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(WishartError::NonFiniteSample(self.count));
        }
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        Ok(())
    }

    pub fn merge(&mut self, other: &McAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * (self.count as f64) * (other.count as f64) / n;
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self) -> Result<McSummary> {
        match self.count {
            0 => Err(WishartError::EmptySample),
            1 => Ok(McSummary {
                estimate: self.mean,
                std_error: None,
                n_paths: 1,
            }),
            n => {
                let var = (self.m2 / (n as f64 - 1.0)).max(0.0);
                Ok(McSummary {
                    estimate: self.mean,
                    std_error: Some((var / n as f64).sqrt()),
                    n_paths: n,
                })
            }
        }
    }
}

/// Runs `f` for paths `0..n_paths` in parallel, path `i` on
/// `root.path_stream(i)`. Results come back in path order; the first failing
/// path (by index) determines the error.
pub fn par_paths<T, F>(root: &RngStream, n_paths: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut RngStream) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.path_stream(i as u64);
            f(i, &mut rng)
        })
        .collect();
    results.into_iter().collect()
}

/// [`par_paths`] followed by an ordered [`McSummary`] reduction.
pub fn par_summary<F>(root: &RngStream, n_paths: usize, f: F) -> Result<McSummary>
where
    F: Fn(usize, &mut RngStream) -> Result<f64> + Sync,
{
    McSummary::from_samples(&par_paths(root, n_paths, f)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_sample_is_exact() {
        let s = McSummary::from_samples(&[0.3; 1000]).unwrap();
        assert_eq!(s.estimate, 0.3);
        assert_eq!(s.std_error, Some(0.0));
        assert_eq!(s.n_paths, 1000);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(McSummary::from_samples(&[]), Err(WishartError::EmptySample));
        let one = McSummary::from_samples(&[2.5]).unwrap();
        assert_eq!((one.estimate, one.std_error), (2.5, None));
        assert_eq!(
            McSummary::from_samples(&[1.0, f64::NAN, 2.0]),
            Err(WishartError::NonFiniteSample(1))
        );
    }

    #[test]
    fn matches_textbook_formula() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let s = McSummary::from_samples(&xs).unwrap();
        let m = 4.0;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 4.0;
        assert!((s.estimate - m).abs() < 1e-15);
        assert!((s.std_error.unwrap() - (var / 5.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn par_paths_is_ordered_and_reproducible() {
        let root = RngStream::new(5, 2);
        let a = par_paths(&root, 200, |i, rng| Ok((i, rng.standard_normal()))).unwrap();
        let b = par_paths(&root, 200, |i, rng| Ok((i, rng.standard_normal()))).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, (j, _))| i == *j));
        let err = par_paths(&root, 50, |i, _| if i % 7 == 3 { Err(WishartError::EmptySample) } else { Ok(i) });
        assert_eq!(err, Err(WishartError::EmptySample));
    }

    proptest! {
        #[test]
        fn merge_equals_sequential(xs in prop::collection::vec(-1e3f64..1e3, 2..60), split in 0usize..60) {
            let split = split.min(xs.len());
            let mut whole = McAccumulator::default();
            xs.iter().for_each(|&x| whole.push(x).unwrap());
            let (mut left, mut right) = (McAccumulator::default(), McAccumulator::default());
            xs[..split].iter().for_each(|&x| left.push(x).unwrap());
            xs[split..].iter().for_each(|&x| right.push(x).unwrap());
            left.merge(&right);
            let (a, b) = (whole.finish().unwrap(), left.finish().unwrap());
            prop_assert_eq!(a.n_paths, b.n_paths);
            prop_assert!((a.estimate - b.estimate).abs() <= 1e-9 * (1.0 + a.estimate.abs()));
            let (sa, sb) = (a.std_error.unwrap(), b.std_error.unwrap());
            prop_assert!((sa - sb).abs() <= 1e-9 * (1.0 + sa));
        }
    }
}
