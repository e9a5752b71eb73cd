//! Finite discrete distributions, test families and iid sampling.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::gfunction::GFunction;

/// Absolute tolerance on `sum p_x = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Compensated (Neumaier) summation.
pub(crate) fn accurate_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A probability vector over symbols `0..K`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates and wraps an explicit probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("distribution must have at least one symbol"));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p >= 0.0))
        {
            return Err(invalid(format!("probability {i} is not a nonnegative number: {p}")));
        }
        let total = accurate_sum(probs.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(invalid(format!("probabilities sum to {total}, not 1")));
        }
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        Ok(DiscreteDistribution { probs, cdf })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let total = accurate_sum(weights.iter().copied());
        if !(total > 0.0) {
            return Err(invalid("weights must not all be zero"));
        }
        let mut probs: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        // Push the residual rounding error onto the largest entry.
        let residual = 1.0 - accurate_sum(probs.iter().copied());
        if let Some(max) = probs
            .iter_mut()
            .max_by(|a, b| a.partial_cmp(b).expect("finite"))
        {
            *max += residual;
        }
        Self::new(probs)
    }

    /// One probability per non-empty line.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut probs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let field = line.trim().trim_end_matches(',').trim();
            if field.is_empty() {
                continue;
            }
            let p: f64 = field
                .parse()
                .map_err(|_| invalid(format!("line {}: not a number: `{field}`", lineno + 1)))?;
            probs.push(p);
        }
        Self::new(probs)
    }

    /// A JSON array of reals.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let probs: Vec<f64> =
            serde_json::from_str(text).map_err(|e| invalid(format!("bad JSON distribution: {e}")))?;
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    /// Smallest strictly positive probability.
    pub fn min_positive(&self) -> f64 {
        self.probs
            .iter()
            .copied()
            .filter(|p| *p > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Draws `n` iid symbols with a generator seeded from `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    /// Draws `n` iid symbols and returns the per-symbol counts.
    pub fn sample_counts_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u64> {
        let mut counts = vec![0u64; self.probs.len()];
        for _ in 0..n {
            counts[self.draw(rng)] += 1;
        }
        counts
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().expect("non-empty");
        let u = rng.gen::<f64>() * total;
        let i = self.cdf.partition_point(|c| *c <= u);
        i.min(self.probs.len() - 1)
    }

    fn positive(&self) -> impl Iterator<Item = f64> + '_ {
        self.probs.iter().copied().filter(|p| *p > 0.0)
    }

    /// `sum_x p_x^alpha`.
    pub fn power_sum(&self, alpha: f64) -> f64 {
        accurate_sum(self.positive().map(|p| p.powf(alpha)))
    }

    /// `sum_x g(p_x)`.
    pub fn total_g(&self, g: &GFunction) -> Result<f64> {
        let terms: Result<Vec<f64>> = self.positive().map(|p| g.eval(p)).collect();
        Ok(accurate_sum(terms?))
    }

    /// `E[G_0] = sum_x g(p_x) (1 - p_x)^n`.
    pub fn expected_missing(&self, n: u64, g: &GFunction) -> Result<f64> {
        let terms: Result<Vec<f64>> = self
            .positive()
            .map(|p| Ok(g.eval(p)? * miss_prob(p, n)))
            .collect();
        Ok(accurate_sum(terms?))
    }

    /// `sum_x g(p_x)^2 (1-p_x)^n (1 - (1-p_x)^n)`, an upper bound on `Var(G_0)`.
    pub fn variance_sum_bound(&self, n: u64, g: &GFunction) -> Result<f64> {
        let terms: Result<Vec<f64>> = self
            .positive()
            .map(|p| {
                let gp = g.eval(p)?;
                let q = miss_prob(p, n);
                Ok(gp * gp * q * (1.0 - q))
            })
            .collect();
        Ok(accurate_sum(terms?))
    }
}

/// `(1 - p)^n`, stable for small `p` and large `n`.
pub(crate) fn miss_prob(p: f64, n: u64) -> f64 {
    if p >= 1.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (n as f64 * (-p).ln_1p()).exp()
}

/// Built-in test families.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Uniform { k: usize },
    /// `p_j` proportional to `j^{-s}`, `j = 1..=k`.
    Zipf { k: usize, s: f64 },
    /// `p_j` proportional to `q^j`, `j = 0..k`.
    Geometric { k: usize, q: f64 },
    Explicit(Vec<f64>),
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Uniform { k } => write!(f, "uniform:{k}"),
            Family::Zipf { k, s } => write!(f, "zipf:{k}:{s}"),
            Family::Geometric { k, q } => write!(f, "geometric:{k}:{q}"),
            Family::Explicit(p) => write!(f, "explicit:{}", p.len()),
        }
    }
}

pub fn make_family(family: &Family) -> Result<DiscreteDistribution> {
    match family {
        Family::Uniform { k } => {
            if *k == 0 {
                return Err(invalid("uniform support size must be >= 1"));
            }
            DiscreteDistribution::new(vec![1.0 / *k as f64; *k])
                .or_else(|_| DiscreteDistribution::from_weights(vec![1.0; *k]))
        }
        Family::Zipf { k, s } => {
            if *k == 0 {
                return Err(invalid("zipf support size must be >= 1"));
            }
            if !(s.is_finite() && *s > 0.0) {
                return Err(invalid(format!("zipf exponent must be > 0, got {s}")));
            }
            DiscreteDistribution::from_weights((1..=*k).map(|j| (j as f64).powf(-s)).collect())
        }
        Family::Geometric { k, q } => {
            if *k == 0 {
                return Err(invalid("geometric support size must be >= 1"));
            }
            if !(*q > 0.0 && *q < 1.0) {
                return Err(invalid(format!("geometric ratio must lie in (0,1), got {q}")));
            }
            DiscreteDistribution::from_weights((0..*k).map(|j| q.powi(j as i32)).collect())
        }
        Family::Explicit(p) => DiscreteDistribution::new(p.clone()),
    }
}

/// Finite stand-in for the infinite power law `p_j ∝ j^{-(1+tail)}`, `j >= 1`.
///
/// Returns the distribution truncated to `k` symbols together with an upper
/// bound on its total-variation distance to the untruncated law,
/// `k^{-tail} / (tail * sum_{j<=k} j^{-1-tail})`.
pub fn truncated_power_law(k: usize, tail: f64) -> Result<(DiscreteDistribution, f64)> {
    if !(tail.is_finite() && tail > 0.0) {
        return Err(invalid(format!("tail exponent must be > 0, got {tail}")));
    }
    if k == 0 {
        return Err(invalid("truncation size must be >= 1"));
    }
    let weights: Vec<f64> = (1..=k).map(|j| (j as f64).powf(-1.0 - tail)).collect();
    let head = accurate_sum(weights.iter().copied());
    let bound = (k as f64).powf(-tail) / (tail * head);
    Ok((DiscreteDistribution::from_weights(weights)?, bound.min(1.0)))
}
