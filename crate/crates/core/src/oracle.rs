//! Brute-force reference implementations for every approximate or randomized
//! procedure in the crate. Exact at small state counts, loud about budget.
//!
//! Subsets are enumerated depth-first in lexicographic member order with the
//! boundary mass maintained incrementally, so the first optimum found is the
//! lexicographically smallest argmin and ties need no extra bookkeeping.

use crate::linalg::{SquareMatrix, StateSubset, StochasticMatrix};
use crate::{Error, Result};

/// Hard ceiling on the number of free elements a subset enumeration may cover.
pub const ENUM_BUDGET: usize = 24;

struct CutSearch<'a> {
    m: &'a SquareMatrix,
    /// candidate element pool, ascending
    pool: &'a [usize],
    universe_len: usize,
    members: Vec<usize>,
    best: Option<(Vec<usize>, f64)>,
    denom: fn(usize, usize) -> f64,
}

impl<'a> CutSearch<'a> {
    fn run(&mut self) {
        self.extend(0, 0.0);
    }

    /// `cross` is the single-orientation boundary mass of `self.members`.
    fn extend(&mut self, next_pool_idx: usize, cross: f64) {
        if let Some((_, best)) = &self.best {
            if *best == 0.0 {
                return;
            }
        }
        for idx in next_pool_idx..self.pool.len() {
            let v = self.pool[idx];
            // Adding v: pairs (i, v) with i inside become internal, pairs
            // (v, j) with j outside appear.
            let mut into_v = 0.0;
            let mut out_v = 0.0;
            let row_v = self.m.row(v);
            for &i in &self.members {
                into_v += self.m.get(i, v);
                out_v += row_v[i];
            }
            let row_total: f64 = row_v.iter().sum();
            let new_cross = cross - into_v + (row_total - row_v[v] - out_v);
            self.members.push(v);
            if self.members.len() < self.universe_len {
                let g = new_cross / (self.denom)(self.members.len(), self.universe_len);
                self.consider(g);
            }
            self.extend(idx + 1, new_cross);
            self.members.pop();
        }
    }

    fn consider(&mut self, g: f64) {
        match &self.best {
            None => self.best = Some((self.members.clone(), g)),
            Some((bm, bg)) => {
                if g < bg - 1e-12 {
                    self.best = Some((self.members.clone(), g));
                } else if g < bg + 1e-12 {
                    // Near-tie: recompute both canonically to kill drift from
                    // the incremental updates; earlier (lex-smaller) wins true
                    // ties.
                    let gc =
                        canonical_value(self.m, &self.members, self.universe_len, self.denom);
                    let bc = canonical_value(self.m, bm, self.universe_len, self.denom);
                    if gc < bc - 1e-15 {
                        self.best = Some((self.members.clone(), gc));
                    }
                }
            }
        }
    }
}

fn canonical_value(
    m: &SquareMatrix,
    members: &[usize],
    universe_len: usize,
    denom: fn(usize, usize) -> f64,
) -> f64 {
    let mut mask = vec![false; m.n()];
    for &i in members {
        mask[i] = true;
    }
    let mut cross = 0.0;
    for &i in members {
        let row = m.row(i);
        for (j, &v) in row.iter().enumerate() {
            if !mask[j] {
                cross += v;
            }
        }
    }
    cross / denom(members.len(), universe_len)
}

fn cut_denom(size: usize, universe: usize) -> f64 {
    (size * (universe - size)) as f64
}

fn expansion_denom(size: usize, universe: usize) -> f64 {
    size.min(universe - size) as f64
}

/// Exact sparsest cut over `universe` avoiding `t`: the argmin of
/// `g(S) = cross(S) / (|S| |universe \ S|)` over all nonempty proper subsets
/// of `universe` disjoint from `t`, measured in `m` restricted to `universe`.
///
/// Ties resolve to the lexicographically smallest member sequence. The
/// returned subset uses the same (global) universe as the inputs.
pub fn sparsest_cut_exact(
    m: &SquareMatrix,
    universe: &StateSubset,
    t: &StateSubset,
) -> Result<(StateSubset, f64)> {
    if universe.universe_size() != m.n() || t.universe_size() != m.n() {
        return Err(Error::DimensionMismatch(
            "subset universes must match the matrix".into(),
        ));
    }
    let local = m.submatrix(universe.members());
    let k = universe.len();
    let mut t_local = vec![false; k];
    for (li, &gi) in universe.members().iter().enumerate() {
        if t.contains(gi) {
            t_local[li] = true;
        }
    }
    let pool: Vec<usize> = (0..k).filter(|&i| !t_local[i]).collect();
    if pool.is_empty() {
        return Err(Error::NoValidCut);
    }
    if pool.len() > ENUM_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "{} free states exceeds {ENUM_BUDGET}",
            pool.len()
        )));
    }
    let mut search = CutSearch {
        m: &local,
        pool: &pool,
        universe_len: k,
        members: Vec::new(),
        best: None,
        denom: cut_denom,
    };
    search.run();
    let Some((members_local, value)) = search.best else {
        return Err(Error::NoValidCut);
    };
    let members: Vec<usize> = members_local
        .iter()
        .map(|&li| universe.members()[li])
        .collect();
    Ok((StateSubset::new(members, m.n())?, value))
}

/// Minimum expansion over all nontrivial subsets of the matrix's index space.
pub fn cheeger_exact(m: &SquareMatrix) -> Result<f64> {
    let n = m.n();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "Cheeger constant needs at least two states".into(),
        ));
    }
    if n > ENUM_BUDGET {
        return Err(Error::BudgetExceeded(format!("{n} states exceeds {ENUM_BUDGET}")));
    }
    let pool: Vec<usize> = (0..n).collect();
    let mut search = CutSearch {
        m,
        pool: &pool,
        universe_len: n,
        members: Vec::new(),
        best: None,
        denom: expansion_denom,
    };
    search.run();
    Ok(search.best.map(|(_, v)| v).unwrap_or(0.0))
}

/// Minimum expansion of any nontrivial `R` inside `s`, measured in the
/// submatrix of `m` restricted to `s`. Vacuously infinite when `|s| < 2`.
pub fn min_internal_expansion_exact(m: &SquareMatrix, s: &StateSubset) -> Result<f64> {
    if s.universe_size() != m.n() {
        return Err(Error::DimensionMismatch(
            "subset universe must match the matrix".into(),
        ));
    }
    if s.len() < 2 {
        return Ok(f64::INFINITY);
    }
    let local = m.submatrix(s.members());
    cheeger_exact(&local)
}

/// Exhaustively verify the low-information property of `t`: every nonempty
/// `R ⊆ t` satisfies `cross(R) / |R| >= floor`, with the boundary taken in
/// the full state space.
pub fn low_info_claim_check(m: &SquareMatrix, t: &StateSubset, floor: f64) -> Result<bool> {
    if t.universe_size() != m.n() {
        return Err(Error::DimensionMismatch(
            "subset universe must match the matrix".into(),
        ));
    }
    if t.len() > 20 {
        return Err(Error::BudgetExceeded(format!("|T| = {} exceeds 20", t.len())));
    }
    if t.is_empty() {
        return Ok(true);
    }
    fn extend(
        m: &SquareMatrix,
        pool: &[usize],
        members: &mut Vec<usize>,
        cross: f64,
        next: usize,
        floor: f64,
    ) -> bool {
        for idx in next..pool.len() {
            let v = pool[idx];
            let mut into_v = 0.0;
            let mut out_v = 0.0;
            let row_v = m.row(v);
            for &i in members.iter() {
                into_v += m.get(i, v);
                out_v += row_v[i];
            }
            let row_total: f64 = row_v.iter().sum();
            let new_cross = cross - into_v + (row_total - row_v[v] - out_v);
            members.push(v);
            if new_cross / (members.len() as f64) < floor {
                members.pop();
                return false;
            }
            if !extend(m, pool, members, new_cross, idx + 1, floor) {
                members.pop();
                return false;
            }
            members.pop();
        }
        true
    }
    let mut members = Vec::new();
    Ok(extend(m, t.members(), &mut members, 0.0, 0, floor))
}

/// Exact total variation and squared Hellinger distance between
/// `Dist(R, P)` and `Dist(R, Q)`, computed directly from the matrices.
pub fn edge_distribution_distance_exact(
    p: &StochasticMatrix,
    q: &StochasticMatrix,
    r: &StateSubset,
) -> Result<(f64, f64)> {
    let n = p.n();
    if q.n() != n {
        return Err(Error::DimensionMismatch(format!("{n} vs {}", q.n())));
    }
    if r.universe_size() != n {
        return Err(Error::DimensionMismatch(
            "subset universe must match the matrices".into(),
        ));
    }
    if r.is_empty() {
        return Err(Error::InvalidSubset("edge distribution of empty set".into()));
    }
    let size = r.len() as f64;
    let mut tv = 0.0;
    let mut bc = 0.0;
    let mut mass_p = 0.0;
    let mut mass_q = 0.0;
    for &i in r.members() {
        for &j in r.members() {
            let a = p.get(i, j) / size;
            let b = q.get(i, j) / size;
            tv += (a - b).abs();
            bc += (a * b).sqrt();
            mass_p += a;
            mass_q += b;
        }
    }
    let eta_p = (1.0 - mass_p).max(0.0);
    let eta_q = (1.0 - mass_q).max(0.0);
    tv += (eta_p - eta_q).abs();
    bc += (eta_p * eta_q).sqrt();
    Ok((0.5 * tv, (1.0 - bc).clamp(0.0, 1.0)))
}
