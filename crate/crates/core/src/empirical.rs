//! Sample profiles: per-symbol counts and frequencies of frequencies.

use std::collections::BTreeMap;

use crate::distributions::{accurate_sum, DiscreteDistribution};
use crate::error::{invalid, Result};
use crate::gfunction::GFunction;

/// Counts `F_x` and frequencies of frequencies `phi_l`, `l >= 1`.
///
/// Profiles built from frequencies of frequencies alone carry no per-symbol
/// counts and cannot be paired with a distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleProfile {
    n: u64,
    counts: Option<BTreeMap<usize, u64>>,
    phi: BTreeMap<u64, u64>,
}

impl SampleProfile {
    pub fn from_symbols(seq: &[usize]) -> Self {
        let mut counts = BTreeMap::new();
        for &x in seq {
            *counts.entry(x).or_insert(0u64) += 1;
        }
        Self::from_count_map(counts)
    }

    /// Builds a profile from a dense count vector indexed by symbol.
    pub fn from_counts(counts: &[u64]) -> Self {
        let map = counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(x, c)| (x, *c))
            .collect();
        Self::from_count_map(map)
    }

    pub fn from_count_map(counts: BTreeMap<usize, u64>) -> Self {
        let counts: BTreeMap<usize, u64> = counts.into_iter().filter(|(_, c)| *c > 0).collect();
        let mut phi = BTreeMap::new();
        let mut n = 0;
        for &c in counts.values() {
            n += c;
            *phi.entry(c).or_insert(0u64) += 1;
        }
        SampleProfile { n, counts: Some(counts), phi }
    }

    /// Builds a profile from `phi_l` and `n`, checking `sum_l l phi_l = n`.
    pub fn from_phi(n: u64, phi: BTreeMap<u64, u64>) -> Result<Self> {
        if phi.contains_key(&0) {
            return Err(invalid("phi_0 is not observable and must not be given"));
        }
        let phi: BTreeMap<u64, u64> = phi.into_iter().filter(|(_, v)| *v > 0).collect();
        let total = phi
            .iter()
            .try_fold(0u64, |acc, (l, v)| l.checked_mul(*v).and_then(|t| acc.checked_add(t)))
            .ok_or_else(|| invalid("sum of l * phi_l overflows"))?;
        if total != n {
            return Err(invalid(format!(
                "inconsistent profile: sum of l * phi_l = {total} but n = {n}"
            )));
        }
        Ok(SampleProfile { n, counts: None, phi })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `phi_l`, zero when absent.
    pub fn phi(&self, l: u64) -> u64 {
        self.phi.get(&l).copied().unwrap_or(0)
    }

    pub fn phi_map(&self) -> &BTreeMap<u64, u64> {
        &self.phi
    }

    pub fn counts(&self) -> Option<&BTreeMap<usize, u64>> {
        self.counts.as_ref()
    }

    /// Number of distinct observed symbols.
    pub fn distinct(&self) -> u64 {
        self.phi.values().sum()
    }

    fn seen_mask(&self, dist: &DiscreteDistribution) -> Result<Vec<bool>> {
        let counts = self
            .counts
            .as_ref()
            .ok_or_else(|| invalid("profile has no per-symbol counts"))?;
        let k = dist.support_size();
        let mut seen = vec![false; k];
        for &x in counts.keys() {
            if x >= k {
                return Err(invalid(format!("symbol {x} outside support of size {k}")));
            }
            seen[x] = true;
        }
        Ok(seen)
    }

    /// `G_0`: sum of `g(p_x)` over unseen symbols with `p_x > 0`.
    pub fn realized_missing(&self, dist: &DiscreteDistribution, g: &GFunction) -> Result<f64> {
        self.realized(dist, g, false)
    }

    /// `G_{1+}`: sum of `g(p_x)` over seen symbols.
    pub fn realized_observed(&self, dist: &DiscreteDistribution, g: &GFunction) -> Result<f64> {
        self.realized(dist, g, true)
    }

    fn realized(&self, dist: &DiscreteDistribution, g: &GFunction, seen_side: bool) -> Result<f64> {
        let seen = self.seen_mask(dist)?;
        let mut terms = Vec::new();
        for (x, &p) in dist.probs().iter().enumerate() {
            if p > 0.0 && seen[x] == seen_side {
                terms.push(g.eval(p)?);
            }
        }
        Ok(accurate_sum(terms))
    }
}

/// `G_0` straight from a dense count vector, without building a profile.
pub(crate) fn missing_from_counts(
    dist: &DiscreteDistribution,
    counts: &[u64],
    g_values: &[f64],
) -> f64 {
    accurate_sum(
        dist.probs()
            .iter()
            .zip(counts)
            .zip(g_values)
            .filter(|((p, c), _)| **p > 0.0 && **c == 0)
            .map(|(_, gv)| *gv),
    )
}
