//! Dense symmetric matrices, spectral operations, and the scalar functionals
//! used throughout the tester: `Dist`, expansion, cut value, Hellinger and
//! total variation distances.
//!
//! Everything here is plain `f64` row-major storage. The chains of interest
//! live at desk scale (n up to a couple hundred), so dense O(n^2) storage and
//! O(n^3) eigensolves are the right trade.

use crate::{Error, Result};

/// Tolerance for row-sum and symmetry validation of stochastic matrices.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// A dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "expected {n} columns, got {}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.max_asymmetry().2 <= tol
    }

    /// Largest |M[i][j] - M[j][i]| together with its location.
    pub fn max_asymmetry(&self) -> (usize, usize, f64) {
        let mut worst = (0, 0, 0.0);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let dev = (self.get(i, j) - self.get(j, i)).abs();
                if dev > worst.2 {
                    worst = (i, j, dev);
                }
            }
        }
        worst
    }

    /// Restriction of the matrix to the rows and columns in `idx`, in order.
    pub fn submatrix(&self, idx: &[usize]) -> SquareMatrix {
        let k = idx.len();
        let mut out = SquareMatrix::zeros(k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out.set(a, b, self.get(i, j));
            }
        }
        out
    }

    /// Sum of all entries with both indices in `s`.
    pub fn mass_within(&self, s: &[usize]) -> f64 {
        let mut total = 0.0;
        for &i in s {
            let row = self.row(i);
            for &j in s {
                total += row[j];
            }
        }
        total
    }

    /// All eigenvalues in descending order, via cyclic Jacobi rotations.
    ///
    /// Requires symmetry; sweeps are capped at `10 * n * n` and running out of
    /// sweeps is an error rather than an approximate return.
    pub fn symmetric_eigenvalues(&self) -> Result<Vec<f64>> {
        let (i, j, dev) = self.max_asymmetry();
        if dev > 1e-8 {
            return Err(Error::NotSymmetric { i, j, max_dev: dev });
        }
        jacobi_eigenvalues(self)
    }

    /// Largest eigenvalue of a symmetric matrix, absolute accuracy ~1e-12.
    pub fn spectral_radius(&self) -> Result<f64> {
        let eig = self.symmetric_eigenvalues()?;
        Ok(eig.first().copied().unwrap_or(0.0))
    }
}

fn jacobi_eigenvalues(m: &SquareMatrix) -> Result<Vec<f64>> {
    let n = m.n;
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![m.get(0, 0)]);
    }
    let mut a = m.clone();
    let scale: f64 = a
        .data
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()))
        .max(1.0);
    let tol = 1e-14 * scale;
    let max_sweeps = 10 * n * n;
    for _sweep in 0..max_sweeps {
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a.get(i, j).abs());
            }
        }
        if off <= tol {
            let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
            eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
            return Ok(eig);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                // tan of the rotation angle, the root of t^2 + 2*theta*t - 1 = 0
                // with smaller magnitude.
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    Err(Error::EigenNoConvergence(max_sweeps))
}

/// Solve `A x = b` for several right-hand sides via LU with partial pivoting.
///
/// `b` is given column-wise; the returned matrix holds the solution columns in
/// the same layout. Near-zero pivots are reported as [`Error::Singular`].
pub fn lu_solve(a: &SquareMatrix, b: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.n;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = lu.get(col, col).abs();
        for r in (col + 1)..n {
            let v = lu.get(r, col).abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = r;
            }
        }
        if pivot_val < 1e-12 {
            return Err(Error::Singular(format!("pivot {pivot_val:.3e} in column {col}")));
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = lu.get(col, j);
                lu.set(col, j, lu.get(pivot_row, j));
                lu.set(pivot_row, j, tmp);
            }
            perm.swap(col, pivot_row);
        }
        let inv = 1.0 / lu.get(col, col);
        for r in (col + 1)..n {
            let f = lu.get(r, col) * inv;
            lu.set(r, col, f);
            for j in (col + 1)..n {
                let v = lu.get(r, j) - f * lu.get(col, j);
                lu.set(r, j, v);
            }
        }
    }
    let mut out = Vec::with_capacity(b.len());
    for rhs in b {
        if rhs.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "rhs length {} vs n={n}",
                rhs.len()
            )));
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = rhs[perm[i]];
            for j in 0..i {
                v -= lu.get(i, j) * y[j];
            }
            y[i] = v;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut v = y[i];
            for j in (i + 1)..n {
                v -= lu.get(i, j) * x[j];
            }
            x[i] = v / lu.get(i, i);
        }
        out.push(x);
    }
    Ok(out)
}

/// Symmetric row-stochastic transition matrix: the object under test.
///
/// Construction validates nonnegativity, row sums, and symmetry to 1e-9 and
/// rejects worse input instead of silently renormalizing; [`StochasticMatrix::normalize`]
/// is the explicit repair path.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    inner: SquareMatrix,
}

impl StochasticMatrix {
    pub fn new(m: SquareMatrix) -> Result<Self> {
        let n = m.n();
        for i in 0..n {
            for j in 0..n {
                let v = m.get(i, j);
                if v < 0.0 {
                    return Err(Error::NegativeEntry { i, j, value: v });
                }
            }
        }
        for i in 0..n {
            let sum: f64 = m.row(i).iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic { row: i, sum });
            }
        }
        let (i, j, dev) = m.max_asymmetry();
        if dev > STOCHASTIC_TOL {
            return Err(Error::NotSymmetric { i, j, max_dev: dev });
        }
        Ok(StochasticMatrix { inner: m })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SquareMatrix::from_rows(rows)?)
    }

    /// Symmetrize and rescale a nonnegative matrix into a valid chain.
    ///
    /// Averages `M` with its transpose, then applies symmetric Sinkhorn
    /// scaling until every row sums to 1 within 1e-12.
    pub fn normalize(m: &SquareMatrix) -> Result<Self> {
        let n = m.n();
        if n == 0 {
            return Err(Error::InvalidParameter("empty matrix".into()));
        }
        let mut a = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = 0.5 * (m.get(i, j) + m.get(j, i));
                if v < 0.0 {
                    return Err(Error::NegativeEntry { i, j, value: v });
                }
                a.set(i, j, v);
            }
        }
        // Symmetric Sinkhorn: scale by D A D with d_i updated from row sums.
        let mut d = vec![1.0_f64; n];
        for _ in 0..10_000 {
            let mut worst = 0.0_f64;
            for i in 0..n {
                let mut sum = 0.0;
                for j in 0..n {
                    sum += d[i] * a.get(i, j) * d[j];
                }
                if sum <= 0.0 {
                    return Err(Error::Singular(format!("row {i} has no mass")));
                }
                worst = worst.max((sum - 1.0).abs());
                d[i] /= sum.sqrt();
            }
            if worst < 1e-13 {
                break;
            }
        }
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, d[i] * a.get(i, j) * d[j]);
            }
        }
        // Exact row-sum cleanup on the diagonal; the residual is ~1e-13.
        for i in 0..n {
            let sum: f64 = out.row(i).iter().sum();
            let v = out.get(i, i) + (1.0 - sum);
            if v < 0.0 {
                return Err(Error::NotStochastic { row: i, sum });
            }
            out.set(i, i, v);
        }
        Self::new(out)
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.inner
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.inner.row(i)
    }
}

/// A strictly increasing set of state indices inside a declared universe.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct StateSubset {
    members: Vec<usize>,
    universe_size: usize,
}

impl StateSubset {
    pub fn new(mut members: Vec<usize>, universe_size: usize) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if let Some(&max) = members.last() {
            if max >= universe_size {
                return Err(Error::InvalidSubset(format!(
                    "state {max} outside universe of size {universe_size}"
                )));
            }
        }
        Ok(StateSubset { members, universe_size })
    }

    pub fn empty(universe_size: usize) -> Self {
        StateSubset { members: Vec::new(), universe_size }
    }

    pub fn full(universe_size: usize) -> Self {
        StateSubset { members: (0..universe_size).collect(), universe_size }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() == self.universe_size
    }

    pub fn contains(&self, state: usize) -> bool {
        self.members.binary_search(&state).is_ok()
    }

    /// Membership mask over the universe.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.universe_size];
        for &i in &self.members {
            mask[i] = true;
        }
        mask
    }

    pub fn complement(&self) -> StateSubset {
        let mask = self.mask();
        let members = (0..self.universe_size).filter(|&i| !mask[i]).collect();
        StateSubset { members, universe_size: self.universe_size }
    }

    pub fn union(&self, other: &StateSubset) -> Result<StateSubset> {
        if self.universe_size != other.universe_size {
            return Err(Error::InvalidSubset("universe mismatch in union".into()));
        }
        let mut members = self.members.clone();
        members.extend_from_slice(&other.members);
        StateSubset::new(members, self.universe_size)
    }

    pub fn minus(&self, other: &StateSubset) -> StateSubset {
        let mask = other.mask();
        let members = self.members.iter().copied().filter(|&i| !mask[i]).collect();
        StateSubset { members: members, universe_size: self.universe_size }
    }

    pub fn intersects(&self, other: &StateSubset) -> bool {
        let mask = other.mask();
        self.members.iter().any(|&i| mask[i])
    }
}

/// A probability vector over an abstract finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if let Some(&bad) = probs.iter().find(|&&p| p < 0.0) {
            return Err(Error::InvalidDistribution(format!("negative mass {bad}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidDistribution(format!("mass sums to {sum}")));
        }
        Ok(Distribution { probs })
    }

    /// Point mass on `state`.
    pub fn delta(state: usize, support: usize) -> Result<Self> {
        if state >= support {
            return Err(Error::InvalidDistribution(format!(
                "state {state} outside support {support}"
            )));
        }
        let mut probs = vec![0.0; support];
        probs[state] = 1.0;
        Ok(Distribution { probs })
    }

    pub fn uniform(support: usize) -> Result<Self> {
        if support == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        Ok(Distribution { probs: vec![1.0 / support as f64; support] })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Entrywise `sqrt(P_ij * Q_ij)`.
pub fn sq_matrix(p: &StochasticMatrix, q: &StochasticMatrix) -> Result<SquareMatrix> {
    let n = p.n();
    if q.n() != n {
        return Err(Error::DimensionMismatch(format!("{} vs {}", n, q.n())));
    }
    let mut out = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, (p.get(i, j) * q.get(i, j)).sqrt());
        }
    }
    Ok(out)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn spectral_radius(m: &SquareMatrix) -> Result<f64> {
    m.spectral_radius()
}

/// `Dist(P, Q) = 1 - rho(Sq(P, Q))`, clamped into [0, 1] against rounding.
pub fn chain_distance(p: &StochasticMatrix, q: &StochasticMatrix) -> Result<f64> {
    let rho = sq_matrix(p, q)?.spectral_radius()?;
    let d = 1.0 - rho;
    if d < -1e-9 {
        // rho > 1 by more than rounding would mean invalid inputs slipped in.
        return Err(Error::InvalidParameter(format!(
            "spectral radius {rho} exceeds 1 beyond tolerance"
        )));
    }
    Ok(d.clamp(0.0, 1.0))
}

fn check_subset_matrix(m: &SquareMatrix, s: &StateSubset) -> Result<()> {
    if s.universe_size() != m.n() {
        return Err(Error::DimensionMismatch(format!(
            "subset universe {} vs matrix size {}",
            s.universe_size(),
            m.n()
        )));
    }
    Ok(())
}

/// Boundary mass of `S`, single orientation: `sum_{i in S, j not in S} M_ij`.
pub fn boundary_mass(m: &SquareMatrix, s: &StateSubset) -> f64 {
    let mask = s.mask();
    let mut total = 0.0;
    for &i in s.members() {
        let row = m.row(i);
        for (j, &v) in row.iter().enumerate() {
            if !mask[j] {
                total += v;
            }
        }
    }
    total
}

/// Expansion `h_M(S)`: boundary mass over `min(|S|, |S̄|)`.
///
/// `m` may be a full transition matrix or any nonnegative submatrix; the
/// complement is taken within the matrix's own index space.
pub fn expansion(m: &SquareMatrix, s: &StateSubset) -> Result<f64> {
    check_subset_matrix(m, s)?;
    if s.is_empty() || s.is_full() {
        return Err(Error::InvalidSubset(
            "expansion needs a nonempty proper subset".into(),
        ));
    }
    let denom = s.len().min(m.n() - s.len()) as f64;
    Ok(boundary_mass(m, s) / denom)
}

/// Cut value `g_M(S)`: boundary mass over `|S| * |S̄|`.
pub fn cut_value(m: &SquareMatrix, s: &StateSubset) -> Result<f64> {
    check_subset_matrix(m, s)?;
    if s.is_empty() || s.is_full() {
        return Err(Error::InvalidSubset(
            "cut value needs a nonempty proper subset".into(),
        ));
    }
    let denom = (s.len() * (m.n() - s.len())) as f64;
    Ok(boundary_mass(m, s) / denom)
}

/// `sum_{i,j in S} M_ij / |S|`, the per-state mass kept inside `S`.
pub fn internal_mass_ratio(m: &SquareMatrix, s: &StateSubset) -> Result<f64> {
    check_subset_matrix(m, s)?;
    if s.is_empty() {
        return Err(Error::InvalidSubset("internal mass of empty set".into()));
    }
    Ok(m.mass_within(s.members()) / s.len() as f64)
}

fn check_same_support(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "support {} vs {}",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// Squared Hellinger distance `1 - sum_i sqrt(p_i q_i)`, clamped into [0, 1].
pub fn hellinger_sq(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_same_support(p, q)?;
    let bc: f64 = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(&a, &b)| (a * b).sqrt())
        .sum();
    Ok((1.0 - bc).clamp(0.0, 1.0))
}

/// Total variation distance `0.5 * sum_i |p_i - q_i|`.
pub fn total_variation(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_same_support(p, q)?;
    let sum: f64 = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(&a, &b)| (a - b).abs())
        .sum();
    Ok(0.5 * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_chain(n: usize) -> StochasticMatrix {
        let v = 1.0 / n as f64;
        StochasticMatrix::new(SquareMatrix::from_rows(&vec![vec![v; n]; n]).unwrap()).unwrap()
    }

    /// Two-block chain with constant in-block and cross-block entries.
    pub(crate) fn block_chain(n: usize, internal: f64) -> StochasticMatrix {
        assert!(n % 2 == 0);
        let half = n / 2;
        let a = internal * 2.0 / n as f64;
        let b = (1.0 - internal) * 2.0 / n as f64;
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let same = (i < half) == (j < half);
                m.set(i, j, if same { a } else { b });
            }
        }
        StochasticMatrix::new(m).unwrap()
    }

    pub(crate) fn random_chain(n: usize, seed: u64) -> StochasticMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, rng.random::<f64>() + 0.05);
            }
        }
        StochasticMatrix::normalize(&m).unwrap()
    }

    #[test]
    fn sq_matrix_of_identical_chains_is_identity_map() {
        let p = block_chain(4, 0.98);
        let sq = sq_matrix(&p, &p).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((sq.get(i, j) - p.get(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sq_matrix_disjoint_supports_is_zero() {
        let p = StochasticMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let q = StochasticMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let sq = sq_matrix(&p, &q).unwrap();
        assert_eq!(sq, SquareMatrix::zeros(2));
    }

    #[test]
    fn sq_matrix_entrywise() {
        let p = uniform_chain(2);
        let q = StochasticMatrix::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let sq = sq_matrix(&p, &q).unwrap();
        assert!((sq.get(0, 0) - 0.45_f64.sqrt()).abs() < 1e-15);
        assert!((sq.get(0, 1) - 0.05_f64.sqrt()).abs() < 1e-15);
        assert!((sq.get(1, 0) - 0.05_f64.sqrt()).abs() < 1e-15);
        assert!((sq.get(1, 1) - 0.45_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn spectral_radius_identity() {
        for n in [1, 2, 5, 9] {
            let mut m = SquareMatrix::zeros(n);
            for i in 0..n {
                m.set(i, i, 1.0);
            }
            assert!((m.spectral_radius().unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_radius_of_stochastic_is_one() {
        for seed in 0..5 {
            let p = random_chain(7, seed);
            assert!((p.matrix().spectral_radius().unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn spectral_radius_2x2_closed_form() {
        // [[a, b], [b, a]] has eigenvalues a ± b.
        let a = 0.45_f64.sqrt();
        let b = 0.05_f64.sqrt();
        let m = SquareMatrix::from_rows(&[vec![a, b], vec![b, a]]).unwrap();
        assert!((m.spectral_radius().unwrap() - (a + b)).abs() < 1e-12);
        assert!((m.spectral_radius().unwrap() - 0.8944271909).abs() < 1e-9);
    }

    #[test]
    fn spectral_radius_rejects_asymmetric() {
        let m = SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(m.spectral_radius(), Err(Error::NotSymmetric { .. })));
    }

    /// Largest root of the characteristic polynomial of a symmetric 3x3,
    /// solved in closed form (trigonometric method). Independent route used
    /// to cross-check the Jacobi sweep.
    fn top_eigenvalue_3x3_charpoly(m: &SquareMatrix) -> f64 {
        assert_eq!(m.n(), 3);
        let (a, b, c) = (m.get(0, 0), m.get(0, 1), m.get(0, 2));
        let (d, e) = (m.get(1, 1), m.get(1, 2));
        let f = m.get(2, 2);
        // det(M - xI) = -x^3 + c2 x^2 + c1 x + c0
        let c2 = a + d + f;
        let c1 = -(a * d + a * f + d * f - b * b - c * c - e * e);
        let c0 = a * d * f + 2.0 * b * e * c - a * e * e - d * c * c - f * b * b;
        // x^3 - c2 x^2 - c1 x - c0 = 0, all roots real by symmetry.
        let p = (-3.0 * (-c1) - c2 * c2) / 3.0; // actually: x = y + c2/3 reduction
        let q = (-2.0 * c2 * c2 * c2 - 9.0 * c2 * (-c1) * (-1.0) - 27.0 * (-c0) * (-1.0))
            / 27.0;
        // Reduced cubic y^3 + p y + q' = 0 with the substitution x = y + c2/3:
        let p_red = -c2 * c2 / 3.0 - c1;
        let q_red = -2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 - c0;
        let _ = (p, q);
        if p_red.abs() < 1e-15 {
            return c2 / 3.0 + (-q_red).cbrt();
        }
        let m2 = 2.0 * (-p_red / 3.0).sqrt();
        let arg = (3.0 * q_red / (p_red * m2)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| {
                c2 / 3.0 + m2 * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn spectral_radius_matches_charpoly_on_random_3x3() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let mut m = SquareMatrix::zeros(3);
            for i in 0..3 {
                for j in i..3 {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    m.set(i, j, v);
                    m.set(j, i, v);
                }
            }
            let jac = m.spectral_radius().unwrap();
            let poly = top_eigenvalue_3x3_charpoly(&m);
            assert!(
                (jac - poly).abs() < 1e-8,
                "jacobi {jac} vs charpoly {poly}"
            );
        }
    }

    #[test]
    fn chain_distance_self_is_zero() {
        for seed in 0..10 {
            let p = random_chain(6, seed);
            assert!(chain_distance(&p, &p).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn chain_distance_disjoint_is_one() {
        let p = StochasticMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let q = StochasticMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((chain_distance(&p, &q).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chain_distance_example_value() {
        let p = uniform_chain(2);
        let q = StochasticMatrix::from_rows(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let expect = 1.0 - (0.45_f64.sqrt() + 0.05_f64.sqrt());
        let got = chain_distance(&p, &q).unwrap();
        assert!((got - expect).abs() < 1e-10);
        assert!((got - 0.105573).abs() < 1e-6);
    }

    #[test]
    fn expansion_and_cut_value_examples() {
        let n = 4;
        let ident = {
            let mut m = SquareMatrix::zeros(n);
            for i in 0..n {
                m.set(i, i, 1.0);
            }
            StochasticMatrix::new(m).unwrap()
        };
        let s = StateSubset::new(vec![0, 1], n).unwrap();
        assert_eq!(expansion(ident.matrix(), &s).unwrap(), 0.0);
        assert_eq!(cut_value(ident.matrix(), &s).unwrap(), 0.0);

        let uni = uniform_chain(4);
        assert!((expansion(uni.matrix(), &s).unwrap() - 0.5).abs() < 1e-15);
        assert!((cut_value(uni.matrix(), &s).unwrap() - 0.25).abs() < 1e-15);

        let block = block_chain(4, 0.98);
        assert!((expansion(block.matrix(), &s).unwrap() - 0.02).abs() < 1e-12);
        assert!((cut_value(block.matrix(), &s).unwrap() - 0.01).abs() < 1e-12);
        assert!((internal_mass_ratio(block.matrix(), &s).unwrap() - 0.98).abs() < 1e-12);
    }

    #[test]
    fn expansion_rejects_trivial_subsets() {
        let p = uniform_chain(3);
        let empty = StateSubset::empty(3);
        let full = StateSubset::full(3);
        assert!(expansion(p.matrix(), &empty).is_err());
        assert!(expansion(p.matrix(), &full).is_err());
        assert!(cut_value(p.matrix(), &full).is_err());
        assert!(internal_mass_ratio(p.matrix(), &empty).is_err());
    }

    #[test]
    fn internal_mass_full_universe() {
        let p = random_chain(5, 3);
        let full = StateSubset::full(5);
        assert!((internal_mass_ratio(p.matrix(), &full).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hellinger_tv_examples() {
        let p = Distribution::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(hellinger_sq(&p, &p).unwrap(), 0.0);
        assert_eq!(total_variation(&p, &p).unwrap(), 0.0);

        let a = Distribution::new(vec![1.0, 0.0]).unwrap();
        let b = Distribution::new(vec![0.0, 1.0]).unwrap();
        assert!((hellinger_sq(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        assert!((total_variation(&a, &b).unwrap() - 1.0).abs() < 1e-15);

        let q = Distribution::new(vec![0.9, 0.1]).unwrap();
        assert!((total_variation(&p, &q).unwrap() - 0.4).abs() < 1e-15);
        let expect = 1.0 - (0.45_f64.sqrt() + 0.05_f64.sqrt());
        assert!((hellinger_sq(&p, &q).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn hellinger_rejects_support_mismatch() {
        let p = Distribution::new(vec![0.5, 0.5]).unwrap();
        let q = Distribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!(hellinger_sq(&p, &q).is_err());
        assert!(total_variation(&p, &q).is_err());
    }

    #[test]
    fn stochastic_constructor_rejects_bad_input() {
        assert!(StochasticMatrix::from_rows(&[vec![0.5, 0.4], vec![0.4, 0.6]]).is_err());
        assert!(StochasticMatrix::from_rows(&[vec![0.5, 0.5], vec![0.4, 0.6]]).is_err());
        assert!(StochasticMatrix::from_rows(&[vec![1.5, -0.5], vec![-0.5, 1.5]]).is_err());
    }

    #[test]
    fn expansion_cut_sandwich_exhaustive_small_n() {
        // (n/2) g <= h <= n g for every nontrivial subset, n <= 10.
        for n in 2..=10usize {
            let p = random_chain(n, 40 + n as u64);
            for bits in 1..((1usize << n) - 1) {
                let members: Vec<usize> = (0..n).filter(|&i| bits >> i & 1 == 1).collect();
                let s = StateSubset::new(members, n).unwrap();
                let h = expansion(p.matrix(), &s).unwrap();
                let g = cut_value(p.matrix(), &s).unwrap();
                let nf = n as f64;
                assert!(nf / 2.0 * g <= h + 1e-12);
                assert!(h <= nf * g + 1e-12);
            }
        }
    }

    #[test]
    fn lu_solve_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 6;
            let mut a = SquareMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    a.set(i, j, rng.random_range(-1.0..1.0));
                }
                a.set(i, i, a.get(i, i) + 3.0);
            }
            let x_true: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut b = vec![0.0; n];
            for i in 0..n {
                b[i] = (0..n).map(|j| a.get(i, j) * x_true[j]).sum();
            }
            let x = lu_solve(&a, &[b]).unwrap().pop().unwrap();
            for i in 0..n {
                assert!((x[i] - x_true[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lu_solve_detects_singular() {
        let a = SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(lu_solve(&a, &[vec![1.0, 1.0]]), Err(Error::Singular(_))));
    }

    #[test]
    fn subset_validation() {
        assert!(StateSubset::new(vec![0, 3], 3).is_err());
        let s = StateSubset::new(vec![2, 0, 2], 4).unwrap();
        assert_eq!(s.members(), &[0, 2]);
        assert_eq!(s.complement().members(), &[1, 3]);
    }

    proptest! {
        #[test]
        fn distance_sandwich(raw_p in proptest::collection::vec(1e-6..1.0f64, 2..20),
                             raw_q in proptest::collection::vec(1e-6..1.0f64, 2..20)) {
            let k = raw_p.len().min(raw_q.len());
            let sp: f64 = raw_p[..k].iter().sum();
            let sq: f64 = raw_q[..k].iter().sum();
            let p = Distribution::new(raw_p[..k].iter().map(|v| v / sp).collect()).unwrap();
            let q = Distribution::new(raw_q[..k].iter().map(|v| v / sq).collect()).unwrap();
            let h2 = hellinger_sq(&p, &q).unwrap();
            let tv = total_variation(&p, &q).unwrap();
            // sqrt(2) d_hel >= d_tv >= d_hel^2
            prop_assert!(2f64.sqrt() * h2.sqrt() >= tv - 1e-12);
            prop_assert!(tv >= h2 - 1e-12);
        }

        #[test]
        fn normalize_produces_valid_chain(seed in 0u64..500) {
            let p = random_chain(6, seed);
            for i in 0..6 {
                let sum: f64 = p.row(i).iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-9);
            }
            prop_assert!(p.matrix().is_symmetric(1e-9));
        }
    }
}
