//! Execution strategy for data-parallel inner loops.
//!
//! Wigner grids, parameter sweeps, and Monte-Carlo batches all reduce to
//! mapping an index range through a pure function. With the `parallel`
//! feature (default) the work fans out over rayon; without it, or with
//! [`Strategy::Sequential`], everything runs on the calling thread. Results
//! are always collected in index order, so the outcome is identical for both
//! strategies.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    Sequential,
    /// Rayon work-stealing pool. Falls back to sequential execution when the
    /// crate is built without the `parallel` feature.
    #[default]
    Parallel,
}

/// Maps `0..n` through `f`, collecting results in index order.
pub fn map_indexed<T, F>(n: usize, strategy: Strategy, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match strategy {
        Strategy::Sequential => (0..n).map(f).collect(),
        Strategy::Parallel => {
            #[cfg(feature = "parallel")]
            {
                (0..n).into_par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..n).map(f).collect()
            }
        }
    }
}

/// Compensated (Kahan-Neumaier) sum; keeps aggregates stable against
/// cancellation regardless of the order results were produced in.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let seq = map_indexed(100, Strategy::Sequential, |i| i * i);
        let par = map_indexed(100, Strategy::Parallel, |i| i * i);
        assert_eq!(seq, par);
    }

    #[test]
    fn kahan_handles_cancellation() {
        let vals = vec![1e16, 1.0, -1e16];
        assert_eq!(kahan_sum(vals), 1.0);
    }
}
