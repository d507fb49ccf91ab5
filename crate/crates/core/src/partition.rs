//! Splitting the state space into high-information components plus one
//! low-information remainder.
//!
//! `extract_component` peels off a single subset that keeps at least `1 - beta`
//! of its transition mass per state and is well connected inside itself;
//! `partition_graph` repeats the extraction until nothing qualifies and
//! returns the accumulated components together with the leftover set, whose
//! every subset provably leaks mass outward fast.
//!
//! Thresholds use the natural log of the full state count, floored at 1. The
//! guarantees hidden behind asymptotics carry explicit floors here:
//! [`claim2_floor`], [`claim3_floor`], and [`no_component_expansion_floor`].

use serde::Serialize;

use crate::config::{ln_floored, Constants};
use crate::embed::find_comp;
use crate::linalg::{expansion, internal_mass_ratio, StateSubset, StochasticMatrix};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Output of the partitioning pass: disjoint high-information sets plus one
/// (possibly empty) low-information remainder covering the rest of `[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub high_info: Vec<StateSubset>,
    pub low_info: StateSubset,
    pub beta: f64,
}

#[derive(Serialize)]
struct PartitionDoc<'a> {
    beta: f64,
    high_info: Vec<&'a [usize]>,
    low_info: &'a [usize],
}

impl Partition {
    /// Structural invariants: parts disjoint, nonempty components, union = [n].
    pub fn validate(&self) -> Result<()> {
        let n = self.low_info.universe_size();
        let mut seen = vec![false; n];
        for s in &self.high_info {
            if s.is_empty() {
                return Err(Error::InvalidSubset("empty high-information set".into()));
            }
            if s.universe_size() != n {
                return Err(Error::InvalidSubset("universe mismatch in partition".into()));
            }
            for &v in s.members() {
                if seen[v] {
                    return Err(Error::InvalidSubset(format!("state {v} covered twice")));
                }
                seen[v] = true;
            }
        }
        for &v in self.low_info.members() {
            if seen[v] {
                return Err(Error::InvalidSubset(format!("state {v} covered twice")));
            }
            seen[v] = true;
        }
        if !seen.iter().all(|&b| b) {
            return Err(Error::InvalidSubset("partition does not cover [n]".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = PartitionDoc {
            beta: self.beta,
            high_info: self.high_info.iter().map(|s| s.members()).collect(),
            low_info: self.low_info.members(),
        };
        serde_json::to_string(&doc).expect("partition document serializes")
    }
}

/// Result of one extraction attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum Extraction {
    Component(StateSubset),
    /// Nothing extractable: every subset of `[n] \ T` is well connected to the
    /// rest of the space and the remainder keeps too little internal mass.
    NoComponent,
}

/// Internal-expansion floor guaranteed for every proper subset of a returned
/// component of size `s_size`.
pub fn claim2_floor(beta: f64, n: usize, s_size: usize, constants: &Constants) -> f64 {
    beta / (8.0 * constants.c_fc * ln_floored(n) * ln_floored(s_size))
}

/// Expansion floor certified for every subset of `[n] \ T` when extraction
/// reports `NoComponent` (min-side denominator).
pub fn no_component_expansion_floor(beta: f64, n: usize, constants: &Constants) -> f64 {
    beta / (8.0 * constants.c_fc * ln_floored(n))
}

/// Outward-leak floor for every subset `R` of the final low-information set,
/// with the boundary mass divided by `|R|` rather than the min side. The
/// extra factor 9 covers subsets larger than half the space, where the two
/// denominators diverge (the remainder never exceeds 8n/9 states).
pub fn claim3_floor(beta: f64, n: usize, constants: &Constants) -> f64 {
    no_component_expansion_floor(beta, n, constants) / 9.0
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in (0,1), got {beta}"
        )));
    }
    Ok(())
}

/// One pass of the component extraction.
///
/// Finds the best cut avoiding `t`; if even that cut is well connected, falls
/// back to the whole remainder and gives up when its internal mass is low.
/// Otherwise the candidate is repeatedly split with cut values measured in
/// the current submatrix until every internal cut is expanding enough.
pub fn extract_component(
    p: &StochasticMatrix,
    t: &StateSubset,
    beta: f64,
    seed: u64,
    constants: &Constants,
) -> Result<Extraction> {
    check_beta(beta)?;
    let n = p.n();
    if t.universe_size() != n {
        return Err(Error::DimensionMismatch(
            "extracted-set universe must match the matrix".into(),
        ));
    }
    if t.is_full() {
        // The rounding step has no candidate cut left.
        return Ok(Extraction::NoComponent);
    }
    let full = StateSubset::full(n);
    let ln_n = ln_floored(n);

    let mut current = if n - t.len() == 1 {
        // Only one free state: the cut search is degenerate, but the single
        // state is still a legal component candidate for the inner loop.
        full.minus(t)
    } else {
        let s0 = find_comp(p.matrix(), &full, t, derive_seed(seed, 0), constants)?;
        let v0 = expansion(p.matrix(), &s0)?;
        if v0 >= beta / 8.0 {
            let rest = full.minus(t);
            let mass = internal_mass_ratio(p.matrix(), &rest)?;
            if mass <= 1.0 - beta / 8.0 {
                return Ok(Extraction::NoComponent);
            }
            rest
        } else {
            s0
        }
    };

    let mut step = 1u64;
    while current.len() > 1 {
        let s_prime = find_comp(
            p.matrix(),
            &current,
            &StateSubset::empty(n),
            derive_seed(seed, step),
            constants,
        )?;
        // v_t is measured against the submatrix on the current set, not the
        // full matrix: mass leaving the current set must not count.
        let sub = p.matrix().submatrix(current.members());
        let local_members: Vec<usize> = current
            .members()
            .iter()
            .enumerate()
            .filter(|(_, &g)| s_prime.contains(g))
            .map(|(l, _)| l)
            .collect();
        let s_prime_local = StateSubset::new(local_members, current.len())?;
        let v = expansion(&sub, &s_prime_local)?;
        if v >= beta / (8.0 * ln_n) {
            break;
        }
        let rest = current.minus(&s_prime);
        let u_in = internal_mass_ratio(p.matrix(), &s_prime)?;
        let u_out = internal_mass_ratio(p.matrix(), &rest)?;
        // Keep the side with the larger per-state internal mass; the mass
        // lower bound survives splitting only on that side. Ties keep the
        // side the rounding step returned.
        current = if u_in >= u_out { s_prime } else { rest };
        step += 1;
    }
    Ok(Extraction::Component(current))
}

/// Repeated extraction until nothing qualifies; the leftover becomes the
/// low-information set.
pub fn partition_graph(
    p: &StochasticMatrix,
    beta: f64,
    seed: u64,
    constants: &Constants,
) -> Result<Partition> {
    check_beta(beta)?;
    let n = p.n();
    let mut high_info: Vec<StateSubset> = Vec::new();
    let mut extracted = StateSubset::empty(n);
    for round in 0..=n as u64 {
        match extract_component(p, &extracted, beta, derive_seed(seed, round), constants)? {
            Extraction::NoComponent => break,
            Extraction::Component(s) => {
                debug_assert!(!s.intersects(&extracted));
                debug_assert!(!s.is_empty());
                extracted = extracted.union(&s)?;
                high_info.push(s);
            }
        }
    }
    let partition = Partition {
        high_info,
        low_info: extracted.complement(),
        beta,
    };
    partition.validate()?;
    Ok(partition)
}
