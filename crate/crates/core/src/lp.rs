//! Dense LP solver plus builders for the sparsest-cut metric relaxations.
//!
//! The solver is a two-phase tableau simplex. Entering variables follow
//! Dantzig's rule until the objective stalls, after which Bland's
//! anti-cycling rule takes over permanently, so every solve terminates.
//! All pivoting choices are index-deterministic: identical input produces
//! bit-identical output.
//!
//! The relaxation builders work on a collapsed node space: the pinned set `T`
//! becomes a single super-node, which enforces `d(i,j) = 0` inside `T` and
//! equal distances from `T` exactly while shrinking the variable count.
//! `solve_metric` generates triangle inequalities lazily, re-solving until the
//! returned metric is fully feasible.

use std::collections::HashSet;

use crate::linalg::{SquareMatrix, StateSubset};
use crate::{Error, Result};

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// `minimize objective . x` subject to sparse constraint rows and `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    /// (sparse row, relation, rhs)
    pub constraints: Vec<(Vec<(usize, f64)>, Relation, f64)>,
}

impl LinearProgram {
    pub fn new(num_vars: usize, objective: Vec<f64>) -> Result<Self> {
        if objective.len() != num_vars {
            return Err(Error::DimensionMismatch(format!(
                "objective length {} vs {} variables",
                objective.len(),
                num_vars
            )));
        }
        Ok(LinearProgram { num_vars, objective, constraints: Vec::new() })
    }

    pub fn add_constraint(
        &mut self,
        row: Vec<(usize, f64)>,
        rel: Relation,
        rhs: f64,
    ) -> Result<()> {
        if let Some(&(var, _)) = row.iter().find(|&&(v, _)| v >= self.num_vars) {
            return Err(Error::DimensionMismatch(format!(
                "constraint references variable {var} of {}",
                self.num_vars
            )));
        }
        self.constraints.push((row, rel, rhs));
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

struct Tableau {
    rows: usize,
    cols: usize, // structural + slack/surplus + artificial, plus rhs column
    data: Vec<f64>,
    basis: Vec<usize>,
    num_structural: usize,
    first_artificial: usize,
    pivots_left: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    fn rhs_col(&self) -> usize {
        self.cols - 1
    }

    fn pivot(&mut self, prow: usize, pcol: usize) {
        let cols = self.cols;
        let inv = 1.0 / self.at(prow, pcol);
        for c in 0..cols {
            *self.at_mut(prow, c) *= inv;
        }
        *self.at_mut(prow, pcol) = 1.0;
        for r in 0..=self.rows {
            if r == prow {
                continue;
            }
            let f = self.at(r, pcol);
            if f == 0.0 {
                continue;
            }
            for c in 0..cols {
                let v = self.at(r, c) - f * self.at(prow, c);
                *self.at_mut(r, c) = v;
            }
            *self.at_mut(r, pcol) = 0.0;
        }
        self.basis[prow] = pcol;
    }

    /// Ratio test; ties broken by the smallest basic variable index
    /// (the Bland-compatible choice).
    fn leaving_row(&self, pcol: usize) -> Option<usize> {
        let rhs = self.rhs_col();
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, pcol);
            if a > EPS {
                let ratio = self.at(r, rhs) / a;
                match best {
                    None => best = Some((r, ratio)),
                    Some((br, bratio)) => {
                        if ratio < bratio - 1e-12
                            || (ratio < bratio + 1e-12 && self.basis[r] < self.basis[br])
                        {
                            best = Some((r, ratio));
                        }
                    }
                }
            }
        }
        best.map(|(r, _)| r)
    }

    /// Run the pivot loop on the current objective row.
    ///
    /// `allow` filters entering columns. Returns Unbounded if an improving
    /// column has no positive entry.
    fn optimize(&mut self, allow: impl Fn(usize) -> bool) -> Result<()> {
        let rhs = self.rhs_col();
        let obj_row = self.rows;
        let mut use_bland = false;
        let mut stall = 0usize;
        let stall_limit = 2 * (self.rows + 16);
        let mut last_obj = self.at(obj_row, rhs);
        loop {
            let mut entering: Option<usize> = None;
            if use_bland {
                for c in 0..rhs {
                    if allow(c) && self.at(obj_row, c) < -EPS {
                        entering = Some(c);
                        break;
                    }
                }
            } else {
                let mut best = -EPS;
                for c in 0..rhs {
                    let v = self.at(obj_row, c);
                    if allow(c) && v < best {
                        best = v;
                        entering = Some(c);
                    }
                }
            }
            let Some(pcol) = entering else {
                return Ok(());
            };
            let Some(prow) = self.leaving_row(pcol) else {
                return Err(Error::Unbounded);
            };
            if self.pivots_left == 0 {
                return Err(Error::IterationLimit("simplex pivots".into()));
            }
            self.pivots_left -= 1;
            self.pivot(prow, pcol);
            let obj = self.at(obj_row, rhs);
            if obj < last_obj - 1e-12 {
                last_obj = obj;
                stall = 0;
            } else {
                stall += 1;
                if stall >= stall_limit {
                    use_bland = true;
                }
            }
        }
    }
}

/// Solve a linear program.
///
/// Distinguishes [`Error::Infeasible`] and [`Error::Unbounded`]; exceeding the
/// pivot cap of `50 * (rows + cols)` is [`Error::IterationLimit`], never a
/// silent approximate return.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.num_vars;
    let m = lp.constraints.len();

    // Count auxiliary columns. Rows are normalized to rhs >= 0 first.
    let mut slack_count = 0usize;
    let mut artificial_count = 0usize;
    let mut norm_rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = Vec::with_capacity(m);
    for (row, rel, rhs) in &lp.constraints {
        let (row, rel, rhs) = if *rhs < 0.0 {
            let flipped: Vec<(usize, f64)> = row.iter().map(|&(v, c)| (v, -c)).collect();
            let rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Eq => Relation::Eq,
                Relation::Ge => Relation::Le,
            };
            (flipped, rel, -rhs)
        } else {
            (row.clone(), *rel, *rhs)
        };
        match rel {
            Relation::Le => slack_count += 1,
            Relation::Ge => {
                slack_count += 1;
                artificial_count += 1;
            }
            Relation::Eq => artificial_count += 1,
        }
        norm_rows.push((row, rel, rhs));
    }

    let total = n + slack_count + artificial_count;
    let cols = total + 1;
    let first_artificial = n + slack_count;
    let mut t = Tableau {
        rows: m,
        cols,
        data: vec![0.0; (m + 1) * cols],
        basis: vec![0; m],
        num_structural: n,
        first_artificial,
        pivots_left: 50 * (m + cols),
    };

    let mut next_slack = n;
    let mut next_artificial = first_artificial;
    for (r, (row, rel, rhs)) in norm_rows.iter().enumerate() {
        for &(v, c) in row {
            *t.at_mut(r, v) += c;
        }
        *t.at_mut(r, cols - 1) = *rhs;
        match rel {
            Relation::Le => {
                *t.at_mut(r, next_slack) = 1.0;
                t.basis[r] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                *t.at_mut(r, next_slack) = -1.0;
                next_slack += 1;
                *t.at_mut(r, next_artificial) = 1.0;
                t.basis[r] = next_artificial;
                next_artificial += 1;
            }
            Relation::Eq => {
                *t.at_mut(r, next_artificial) = 1.0;
                t.basis[r] = next_artificial;
                next_artificial += 1;
            }
        }
    }

    // Phase 1: minimize the sum of artificials.
    if artificial_count > 0 {
        for c in first_artificial..total {
            *t.at_mut(m, c) = 1.0;
        }
        // Price out the artificial basis.
        for r in 0..m {
            if t.basis[r] >= first_artificial {
                for c in 0..cols {
                    let v = t.at(m, c) - t.at(r, c);
                    *t.at_mut(m, c) = v;
                }
            }
        }
        t.optimize(|_| true)?;
        let phase1 = -t.at(m, cols - 1);
        if phase1 > 1e-7 {
            return Err(Error::Infeasible);
        }
        // Drive leftover artificials out of the basis where possible.
        for r in 0..m {
            if t.basis[r] >= first_artificial {
                let pivot_col = (0..first_artificial).find(|&c| t.at(r, c).abs() > EPS);
                if let Some(c) = pivot_col {
                    if t.pivots_left == 0 {
                        return Err(Error::IterationLimit("simplex pivots".into()));
                    }
                    t.pivots_left -= 1;
                    t.pivot(r, c);
                }
                // A row with no structural entry is redundant; its artificial
                // stays basic at value zero and never re-enters.
            }
        }
    }

    // Phase 2: restore the real objective and price out the basis.
    for c in 0..cols {
        *t.at_mut(m, c) = 0.0;
    }
    for (v, &c) in lp.objective.iter().enumerate() {
        *t.at_mut(m, v) = c;
    }
    for r in 0..m {
        let b = t.basis[r];
        let f = t.at(m, b);
        if f != 0.0 {
            for c in 0..cols {
                let v = t.at(m, c) - f * t.at(r, c);
                *t.at_mut(m, c) = v;
            }
        }
    }
    let fa = t.first_artificial;
    t.optimize(|c| c < fa)?;

    let mut x = vec![0.0; n];
    for r in 0..m {
        if t.basis[r] < n {
            x[t.basis[r]] = t.at(r, cols - 1);
        }
    }
    let value = lp
        .objective
        .iter()
        .zip(&x)
        .map(|(&c, &v)| c * v)
        .sum::<f64>();
    let _ = t.num_structural;
    Ok(LpSolution { value, x })
}

/// An n-point semimetric: symmetric, zero diagonal, triangle inequality
/// within 1e-7 over every triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    n: usize,
    d: Vec<f64>,
}

impl Metric {
    pub fn new(n: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {n}x{n} metric",
                d.len()
            )));
        }
        let m = Metric { n, d };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            if self.get(i, i).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "metric has nonzero diagonal at {i}"
                )));
            }
            for j in 0..self.n {
                let v = self.get(i, j);
                if v < -1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "negative distance {v} at ({i},{j})"
                    )));
                }
                if (v - self.get(j, i)).abs() > 1e-12 {
                    return Err(Error::NotSymmetric { i, j, max_dev: (v - self.get(j, i)).abs() });
                }
            }
        }
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    if self.get(i, j) > self.get(i, k) + self.get(k, j) + 1e-7 {
                        return Err(Error::InvalidParameter(format!(
                            "triangle violated on ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn max_value(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }
}

/// Collapsed node space: each non-pinned state is its own block, the pinned
/// set `T` (if any) is the final block.
struct Collapsed {
    k: usize,
    sizes: Vec<usize>,
    /// block id per state of the input matrix
    block_of: Vec<usize>,
    /// objective coefficient per variable pair (both orientations of M)
    obj: Vec<f64>,
    /// normalization coefficient per variable pair: 2 |a| |b|
    norm: Vec<f64>,
}

#[inline]
fn pair_index(k: usize, a: usize, b: usize) -> usize {
    debug_assert!(a < b && b < k);
    a * (2 * k - a - 1) / 2 + (b - a - 1)
}

fn collapse(m: &SquareMatrix, t: &StateSubset) -> Result<Collapsed> {
    let n = m.n();
    if t.universe_size() != n {
        return Err(Error::DimensionMismatch(format!(
            "pinned set universe {} vs matrix size {n}",
            t.universe_size()
        )));
    }
    if t.is_full() {
        return Err(Error::InvalidSubset("pinned set covers the whole space".into()));
    }
    let t_mask = t.mask();
    let mut block_of = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for i in 0..n {
        if !t_mask[i] {
            block_of[i] = sizes.len();
            sizes.push(1);
        }
    }
    if !t.is_empty() {
        let super_id = sizes.len();
        for &i in t.members() {
            block_of[i] = super_id;
        }
        sizes.push(t.len());
    }
    let k = sizes.len();
    let num_pairs = k * (k - 1) / 2;
    let mut obj = vec![0.0; num_pairs];
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (block_of[i], block_of[j]);
            if a < b {
                obj[pair_index(k, a, b)] += m.get(i, j) + m.get(j, i);
            }
        }
    }
    let mut norm = vec![0.0; num_pairs];
    for a in 0..k {
        for b in (a + 1)..k {
            norm[pair_index(k, a, b)] = 2.0 * (sizes[a] * sizes[b]) as f64;
        }
    }
    Ok(Collapsed { k, sizes, block_of, obj, norm })
}

/// The metric relaxation of sparsest cut with the component constraint that
/// all of `t` stays on one side. With `t` empty this is the plain cut LP.
///
/// Variables are the pairwise distances of the collapsed node space (pinned
/// states share one super-node), so the `d = 0` and tied-distance constraints
/// hold by construction. The full triangle-inequality family is materialized;
/// suitable for small instances and for auditing `solve_metric`.
pub fn build_lpccc(m: &SquareMatrix, t: &StateSubset) -> Result<LinearProgram> {
    let col = collapse(m, t)?;
    let k = col.k;
    let mut lp = LinearProgram::new(col.obj.len(), col.obj.clone())?;
    let norm_row: Vec<(usize, f64)> = col.norm.iter().copied().enumerate().collect();
    lp.add_constraint(norm_row, Relation::Eq, 1.0)?;
    for a in 0..k {
        for b in (a + 1)..k {
            for c in 0..k {
                if c == a || c == b {
                    continue;
                }
                let (x, y) = if c < a { (c, a) } else { (a, c) };
                let (u, v) = if c < b { (c, b) } else { (b, c) };
                lp.add_constraint(
                    vec![
                        (pair_index(k, a, b), 1.0),
                        (pair_index(k, x, y), -1.0),
                        (pair_index(k, u, v), -1.0),
                    ],
                    Relation::Le,
                    0.0,
                )?;
            }
        }
    }
    Ok(lp)
}

const MAX_LAZY_ROUNDS: usize = 200;

/// Solve the component-constrained metric relaxation for `(m, t)`.
///
/// Returns the expanded n-point metric together with the optimal objective
/// value. Triangle inequalities are generated lazily: solve, scan all triples
/// for violations, add the worst offenders, repeat until feasible.
pub fn solve_metric(m: &SquareMatrix, t: &StateSubset) -> Result<(Metric, f64)> {
    let col = collapse(m, t)?;
    let k = col.k;
    let n = m.n();
    let num_pairs = col.obj.len();

    if num_pairs == 0 {
        return Err(Error::InvalidSubset("metric needs at least two nodes".into()));
    }

    let mut active: HashSet<(usize, usize, usize, u8)> = HashSet::new();
    let mut rows: Vec<(usize, usize, usize, u8)> = Vec::new();
    let mut solution: Option<LpSolution> = None;

    for _round in 0..MAX_LAZY_ROUNDS {
        let mut lp = LinearProgram::new(num_pairs, col.obj.clone())?;
        lp.add_constraint(
            col.norm.iter().copied().enumerate().collect(),
            Relation::Eq,
            1.0,
        )?;
        for &(a, b, c, orient) in &rows {
            let ab = pair_index(k, a, b);
            let ac = pair_index(k, a, c);
            let bc = pair_index(k, b, c);
            let (long, s1, s2) = match orient {
                0 => (ab, ac, bc),
                1 => (ac, ab, bc),
                _ => (bc, ab, ac),
            };
            lp.add_constraint(
                vec![(long, 1.0), (s1, -1.0), (s2, -1.0)],
                Relation::Le,
                0.0,
            )?;
        }
        let sol = solve_lp(&lp)?;

        // Scan all triples for violated triangle inequalities.
        let mut violations: Vec<(f64, (usize, usize, usize, u8))> = Vec::new();
        for a in 0..k {
            for b in (a + 1)..k {
                let dab = sol.x[pair_index(k, a, b)];
                for c in (b + 1)..k {
                    let dac = sol.x[pair_index(k, a, c)];
                    let dbc = sol.x[pair_index(k, b, c)];
                    let checks = [
                        (dab - dac - dbc, 0u8),
                        (dac - dab - dbc, 1u8),
                        (dbc - dab - dac, 2u8),
                    ];
                    for (viol, orient) in checks {
                        if viol > EPS {
                            let key = (a, b, c, orient);
                            if !active.contains(&key) {
                                violations.push((viol, key));
                            }
                        }
                    }
                }
            }
        }
        if violations.is_empty() {
            solution = Some(sol);
            break;
        }
        violations.sort_by(|x, y| {
            y.0.partial_cmp(&x.0).unwrap().then_with(|| x.1.cmp(&y.1))
        });
        let take = violations.len().min((4 * k).max(64));
        for &(_, key) in violations.iter().take(take) {
            active.insert(key);
            rows.push(key);
        }
    }

    let Some(sol) = solution else {
        return Err(Error::IterationLimit("lazy triangle generation".into()));
    };

    // Expand the collapsed solution to the full state space.
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (col.block_of[i], col.block_of[j]);
            if a != b {
                let (x, y) = if a < b { (a, b) } else { (b, a) };
                d[i * n + j] = sol.x[pair_index(k, x, y)].max(0.0);
            }
        }
    }
    let metric = Metric::new(n, d)?;
    let _ = &col.sizes;
    Ok((metric, sol.value))
}
