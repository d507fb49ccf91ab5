//! Trajectory simulation, the chain observed on a subset, exact hitting
//! times, and escape counting.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{lu_solve, Distribution, SquareMatrix, StateSubset, StochasticMatrix};
use crate::rng::stream_rng;
use crate::{Error, Result};

/// A finite seeded sample path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    states: Vec<usize>,
    seed: u64,
    n: usize,
}

impl Trajectory {
    pub fn new(states: Vec<usize>, n: usize, seed: u64) -> Result<Self> {
        if let Some(&bad) = states.iter().find(|&&s| s >= n) {
            return Err(Error::InvalidParameter(format!(
                "state {bad} outside universe of size {n}"
            )));
        }
        Ok(Trajectory { states, seed, n })
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn universe_size(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

fn sample_from(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// A sample path extended on demand, standing in for an infinite word.
///
/// Reads past the configured cap fail with a distinct error instead of
/// silently truncating.
pub struct LazyTrajectory<'a> {
    chain: &'a StochasticMatrix,
    rng: ChaCha8Rng,
    states: Vec<usize>,
    cap: usize,
    seed: u64,
}

/// Default cap on lazily generated trajectory steps.
pub const DEFAULT_TRAJECTORY_CAP: usize = 10_000_000;

impl<'a> LazyTrajectory<'a> {
    pub fn new(
        chain: &'a StochasticMatrix,
        start: &Distribution,
        seed: u64,
        cap: usize,
    ) -> Result<Self> {
        if start.len() != chain.n() {
            return Err(Error::InvalidDistribution(format!(
                "start distribution over {} states, chain has {}",
                start.len(),
                chain.n()
            )));
        }
        let mut rng = stream_rng(seed, 0);
        let first = sample_from(&mut rng, start.probs());
        Ok(LazyTrajectory { chain, rng, states: vec![first], cap, seed })
    }

    /// State at position `idx`, extending the path as needed.
    pub fn get(&mut self, idx: usize) -> Result<usize> {
        if idx >= self.cap {
            return Err(Error::TrajectoryCapExceeded(self.cap));
        }
        while self.states.len() <= idx {
            let cur = *self.states.last().expect("nonempty path");
            let next = sample_from(&mut self.rng, self.chain.row(cur));
            self.states.push(next);
        }
        Ok(self.states[idx])
    }

    pub fn generated_len(&self) -> usize {
        self.states.len()
    }

    /// Freeze the first `length` states into a plain trajectory.
    pub fn take(&mut self, length: usize) -> Result<Trajectory> {
        if length == 0 {
            return Err(Error::InvalidParameter("length must be >= 1".into()));
        }
        self.get(length - 1)?;
        Trajectory::new(self.states[..length].to_vec(), self.chain.n(), self.seed)
    }
}

/// Simulate `length` steps of the chain from the start distribution.
/// Reproducible: the same `(p, start, length, seed)` yields the same path.
pub fn simulate(
    p: &StochasticMatrix,
    start: &Distribution,
    length: usize,
    seed: u64,
) -> Result<Trajectory> {
    let mut lazy = LazyTrajectory::new(p, start, seed, length.max(1))?;
    lazy.take(length)
}

/// The chain observed on `t`: transitions recorded only when the path visits
/// `t`, with excursions through the complement folded into one step.
///
/// Closed form `Q = P_T + P_{T,C} (I - P_C)^{-1} P_{C,T}` with `C` the
/// complement; the inverse is a dense LU solve. A singular `I - P_C` means
/// mass escapes `t` permanently and is reported as an error.
pub fn observed_chain(p: &StochasticMatrix, t: &StateSubset) -> Result<StochasticMatrix> {
    let n = p.n();
    if t.universe_size() != n {
        return Err(Error::DimensionMismatch(
            "subset universe must match the matrix".into(),
        ));
    }
    if t.is_empty() {
        return Err(Error::InvalidSubset("observed chain needs a nonempty subset".into()));
    }
    if t.is_full() {
        return Ok(p.clone());
    }
    let inside = t.members();
    let outside = t.complement();
    let c = outside.members();
    let k = inside.len();
    let m = c.len();

    // I - P_C
    let mut a = SquareMatrix::zeros(m);
    for (r, &i) in c.iter().enumerate() {
        for (s, &j) in c.iter().enumerate() {
            let v = if r == s { 1.0 } else { 0.0 } - p.get(i, j);
            a.set(r, s, v);
        }
    }
    // Right-hand sides: columns of P_{C,T}
    let rhs: Vec<Vec<f64>> = inside
        .iter()
        .map(|&j| c.iter().map(|&i| p.get(i, j)).collect())
        .collect();
    let x = lu_solve(&a, &rhs).map_err(|e| match e {
        Error::Singular(msg) => Error::Singular(format!(
            "mass escapes the observed subset permanently ({msg})"
        )),
        other => other,
    })?;

    let mut q = SquareMatrix::zeros(k);
    for (r, &i) in inside.iter().enumerate() {
        for (s, &j) in inside.iter().enumerate() {
            let mut v = p.get(i, j);
            for (idx, &cstate) in c.iter().enumerate() {
                v += p.get(i, cstate) * x[s][idx];
            }
            q.set(r, s, v);
        }
    }
    StochasticMatrix::new(q)
}

/// Subsequence of `w` consisting exactly of the entries in `t`, order
/// preserved, original state labels kept.
pub fn restrict_trajectory(w: &Trajectory, t: &StateSubset) -> Trajectory {
    let mask = t.mask();
    let states: Vec<usize> = w
        .states()
        .iter()
        .copied()
        .filter(|&s| s < mask.len() && mask[s])
        .collect();
    Trajectory { states, seed: w.seed, n: w.n }
}

/// Worst-case expected time to reach any state from any start:
/// `max_{i,j} E[time to hit j | start at i]`.
///
/// For each target `j` solves `h = 1 + P_{-j} h` over the remaining states.
pub fn hitting_time_exact(p: &StochasticMatrix) -> Result<f64> {
    let n = p.n();
    if n < 2 {
        return Ok(0.0);
    }
    let mut worst = 0.0_f64;
    for target in 0..n {
        let others: Vec<usize> = (0..n).filter(|&i| i != target).collect();
        let mut a = SquareMatrix::zeros(n - 1);
        for (r, &i) in others.iter().enumerate() {
            for (s, &j) in others.iter().enumerate() {
                let v = if r == s { 1.0 } else { 0.0 } - p.get(i, j);
                a.set(r, s, v);
            }
        }
        let rhs = vec![vec![1.0; n - 1]];
        let h = lu_solve(&a, &rhs).map_err(|e| match e {
            Error::Singular(msg) => {
                Error::Singular(format!("chain is reducible for target {target} ({msg})"))
            }
            other => other,
        })?;
        for &v in &h[0] {
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

/// Number of entries of `w` outside `t`.
pub fn escape_count(w: &Trajectory, t: &StateSubset) -> usize {
    let mask = t.mask();
    w.states()
        .iter()
        .filter(|&&s| s >= mask.len() || !mask[s])
        .count()
}
