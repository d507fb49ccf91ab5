//! Bourgain-style embedding of the relaxation metric into L1, decomposition
//! of L1 into weighted cut metrics, and the rounding step that turns the
//! decomposition into a low-cut-value subset.
//!
//! The embedding follows the Linial-London-Rabinovich construction: for scale
//! `t` and repetition `r`, sample a random subset by keeping each point with
//! probability `2^-t` and use the distance to that subset as a coordinate.
//! The theorem only promises the L1 lower bound up to a constant, so after
//! sampling we measure `s = min ||f(i)-f(j)||_1 / d(i,j)` and scale the
//! coordinates up when `s < 1`; that makes `d <= ||.||_1` hold exactly on
//! every run. A draw where some positive-distance pair collapses to identical
//! coordinates is redrawn with the next derived seed.

use rand::Rng;

use crate::config::Constants;
use crate::linalg::{cut_value, SquareMatrix, StateSubset};
use crate::lp::{solve_metric, Metric};
use crate::rng::{derive_seed, stream_rng};
use crate::{Error, Result};

/// An embedding of `n` points into `R^m` under the L1 norm.
#[derive(Debug, Clone)]
pub struct Embedding {
    n: usize,
    m: usize,
    /// row-major: coords[i * m + c]
    coords: Vec<f64>,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn coord(&self, point: usize, dim: usize) -> f64 {
        self.coords[point * self.m + dim]
    }

    pub fn l1_distance(&self, i: usize, j: usize) -> f64 {
        (0..self.m)
            .map(|c| (self.coord(i, c) - self.coord(j, c)).abs())
            .sum()
    }

    /// Largest ratio `||f(i)-f(j)||_1 / d(i,j)` over pairs with positive
    /// distance: the measured distortion constant of this run.
    pub fn distortion_upper(&self, d: &Metric) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let dij = d.get(i, j);
                if dij > 0.0 {
                    worst = worst.max(self.l1_distance(i, j) / dij);
                }
            }
        }
        worst
    }
}

/// One weighted cut metric: distance `alpha` across `(s, complement)`.
#[derive(Debug, Clone)]
pub struct WeightedCut {
    pub subset: StateSubset,
    pub alpha: f64,
}

/// A sum of weighted cut metrics reproducing an L1 embedding exactly.
#[derive(Debug, Clone)]
pub struct CutDecomposition {
    n: usize,
    pub cuts: Vec<WeightedCut>,
}

impl CutDecomposition {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Distance between `i` and `j` under the weighted sum of cut metrics.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.cuts
            .iter()
            .filter(|c| c.subset.contains(i) != c.subset.contains(j))
            .map(|c| c.alpha)
            .sum()
    }
}

/// Dimension cap used by the embedding invariant: `m <= 2 c_emb ceil(log2 n)^2`.
pub fn dimension_cap(n: usize, constants: &Constants) -> usize {
    let l2 = (n.max(2) as f64).log2().ceil() as usize;
    (2.0 * constants.c_emb).ceil() as usize * l2 * l2
}

const MAX_REDRAWS: u64 = 64;

/// Randomized embedding of `d` into L1 with the lower-bound contract
/// `d(i,j) <= ||f(i)-f(j)||_1` enforced exactly.
pub fn bourgain_embed(d: &Metric, seed: u64, constants: &Constants) -> Result<Embedding> {
    let n = d.n();
    if n <= 1 {
        return Ok(Embedding { n, m: 0, coords: Vec::new() });
    }
    let num_scales = ((n as f64).log2().ceil() as usize).max(1);
    let reps = ((constants.c_emb * (n as f64).ln()).ceil() as usize).max(1);
    let m = num_scales * reps;
    let max_d = d.max_value();

    // Degenerate all-zero metric: every point embeds at the origin.
    if max_d == 0.0 {
        return Ok(Embedding { n, m, coords: vec![0.0; n * m] });
    }

    for attempt in 0..MAX_REDRAWS {
        let mut rng = stream_rng(seed, attempt);
        let mut coords = vec![0.0_f64; n * m];
        let mut dim = 0usize;
        for t in 1..=num_scales {
            let p_keep = 0.5_f64.powi(t as i32);
            for _rep in 0..reps {
                let sample: Vec<usize> =
                    (0..n).filter(|_| rng.random::<f64>() < p_keep).collect();
                for i in 0..n {
                    // Distance to the empty set is pinned to the metric
                    // diameter so the coordinate stays defined.
                    let c = if sample.is_empty() {
                        max_d
                    } else {
                        sample
                            .iter()
                            .map(|&a| d.get(i, a))
                            .fold(f64::INFINITY, f64::min)
                    };
                    coords[i * m + dim] = c;
                }
                dim += 1;
            }
        }

        let emb = Embedding { n, m, coords };
        let mut scale = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                let dij = d.get(i, j);
                if dij > 0.0 {
                    scale = scale.min(emb.l1_distance(i, j) / dij);
                }
            }
        }
        if !scale.is_finite() {
            // No positive-distance pair at all.
            return Ok(emb);
        }
        if scale <= 1e-12 {
            continue; // a pair collapsed; redraw
        }
        if scale < 1.0 {
            let factor = 1.0 / scale;
            let mut coords = emb.coords;
            for v in coords.iter_mut() {
                *v *= factor;
            }
            return Ok(Embedding { n, m, coords });
        }
        return Ok(emb);
    }
    Err(Error::IterationLimit("embedding redraws".into()))
}

/// Exact decomposition of an L1 embedding into weighted threshold cuts.
///
/// Per dimension, points sorted by coordinate contribute one cut between each
/// pair of consecutive distinct values, weighted by the value gap. At most
/// `m * (n - 1)` cuts.
pub fn l1_to_cuts(e: &Embedding) -> CutDecomposition {
    let n = e.n();
    let mut cuts = Vec::new();
    for dim in 0..e.dim() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            e.coord(a, dim)
                .partial_cmp(&e.coord(b, dim))
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut prefix_end = 0;
        while prefix_end < n {
            // Extend over ties.
            let v = e.coord(order[prefix_end], dim);
            let mut next = prefix_end + 1;
            while next < n && e.coord(order[next], dim) == v {
                next += 1;
            }
            if next >= n {
                break;
            }
            let alpha = e.coord(order[next], dim) - v;
            if alpha > 0.0 {
                let members: Vec<usize> = order[..next].to_vec();
                cuts.push(WeightedCut {
                    subset: StateSubset::new(members, n).expect("threshold cut in range"),
                    alpha,
                });
            }
            prefix_end = next;
        }
    }
    CutDecomposition { n, cuts }
}

/// Rounding: solve the metric relaxation on `m` restricted to `universe`,
/// embed, decompose into cuts, and return the candidate with the smallest cut
/// value that avoids `t`. Every singleton outside `t` is also evaluated as a
/// safety net. Ties resolve to the lexicographically smallest member
/// sequence; the result is a nonempty proper subset of `universe` in global
/// indices.
pub fn find_comp(
    m: &SquareMatrix,
    universe: &StateSubset,
    t: &StateSubset,
    seed: u64,
    constants: &Constants,
) -> Result<StateSubset> {
    if universe.universe_size() != m.n() || t.universe_size() != m.n() {
        return Err(Error::DimensionMismatch(
            "subset universes must match the matrix".into(),
        ));
    }
    let k = universe.len();
    if k < 2 {
        return Err(Error::InvalidSubset("rounding needs at least two states".into()));
    }
    if t.minus(universe).len() > 0 {
        return Err(Error::InvalidSubset("pinned set must lie inside the universe".into()));
    }
    if t.len() >= k {
        return Err(Error::NoValidCut);
    }

    let local = m.submatrix(universe.members());
    let mut t_local_members = Vec::new();
    for (li, &gi) in universe.members().iter().enumerate() {
        if t.contains(gi) {
            t_local_members.push(li);
        }
    }
    let t_local = StateSubset::new(t_local_members, k)?;

    let (metric, _value) = solve_metric(&local, &t_local)?;
    let embedding = bourgain_embed(&metric, derive_seed(seed, 1), constants)?;
    let decomposition = l1_to_cuts(&embedding);

    let mut candidates: Vec<StateSubset> = Vec::new();
    for cut in &decomposition.cuts {
        let s = &cut.subset;
        if s.is_empty() || s.is_full() {
            continue;
        }
        if t_local.is_empty() {
            candidates.push(s.clone());
            candidates.push(s.complement());
        } else if !s.intersects(&t_local) {
            candidates.push(s.clone());
        } else {
            let comp = s.complement();
            if !comp.intersects(&t_local) {
                candidates.push(comp);
            }
            // A cut splitting t would contradict the tied coordinates of the
            // pinned block; skip it defensively if it ever appears.
        }
    }
    for v in 0..k {
        if !t_local.contains(v) {
            candidates.push(StateSubset::new(vec![v], k)?);
        }
    }

    let mut best: Option<(StateSubset, f64)> = None;
    for cand in candidates {
        let g = cut_value(&local, &cand)?;
        match &best {
            None => best = Some((cand, g)),
            Some((bs, bg)) => {
                if g < bg - 1e-12 || ((g - bg).abs() <= 1e-12 && cand.members() < bs.members())
                {
                    best = Some((cand, g));
                }
            }
        }
    }
    let (winner, _) = best.ok_or(Error::NoValidCut)?;
    let members: Vec<usize> = winner
        .members()
        .iter()
        .map(|&li| universe.members()[li])
        .collect();
    StateSubset::new(members, m.n())
}
