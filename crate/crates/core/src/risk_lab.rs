//! Seeded Monte Carlo experiments: estimator risk, empirical tails against
//! the bounds, and the Dirichlet-prior variance behind the risk lower bound.
//!
//! Every trial draws from its own ChaCha stream derived from `(seed, block,
//! trial)`, and results are combined in trial order with pairwise summation,
//! so reports are bit-identical for a fixed seed whatever the thread count.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{accurate_sum, make_family, miss_prob, DiscreteDistribution, Family};
use crate::empirical::{missing_from_counts, SampleProfile};
use crate::error::{invalid, Error, Result};
use crate::estimators::{estimate, EstimatorKind};
use crate::gfunction::{GFunction, GKind};
use crate::tail_bounds::{
    build_spec, corollary_left_tail, corollary_right_tail, left_tail, theorem2_sub_gaussian_right,
    CorollaryKind, VarianceSource,
};

/// Generator for one trial.
pub fn trial_rng(seed: u64, block: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ block.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(trial);
    rng
}

/// Pairwise summation; the association order depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error of the mean.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let t = xs.len() as f64;
    let mean = pairwise_sum(xs) / t;
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = if xs.len() > 1 { pairwise_sum(&sq) / (t - 1.0) } else { 0.0 };
    (mean, (var / t).sqrt())
}

/// `g(p_x)` for every symbol, from the closed form so that distributions
/// violating an entropy floor can still be simulated; zero where `p_x = 0`.
fn g_values(dist: &DiscreteDistribution, g: &GFunction) -> Vec<f64> {
    dist.probs()
        .iter()
        .map(|&p| if p > 0.0 { g.formula(p) } else { 0.0 })
        .collect()
}

/// `E[G_0]` over the closed form of `g`.
pub fn expected_missing_formula(dist: &DiscreteDistribution, n: u64, g: &GFunction) -> f64 {
    accurate_sum(
        dist.probs()
            .iter()
            .filter(|p| **p > 0.0)
            .map(|&p| g.formula(p) * miss_prob(p, n)),
    )
}

/// Distribution used at each sample size of a risk experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionPlan {
    Fixed(Family),
    /// `uniform(K)` with `K = max(1, round(factor * n))`.
    ScaledUniform { factor: f64 },
}

impl DistributionPlan {
    pub fn at(&self, n: u64) -> Result<DiscreteDistribution> {
        match self {
            DistributionPlan::Fixed(f) => make_family(f),
            DistributionPlan::ScaledUniform { factor } => {
                if !(factor.is_finite() && *factor > 0.0) {
                    return Err(invalid(format!("uniform scale factor must be > 0, got {factor}")));
                }
                let k = ((factor * n as f64).round() as usize).max(1);
                make_family(&Family::Uniform { k })
            }
        }
    }
}

impl fmt::Display for DistributionPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionPlan::Fixed(family) => write!(f, "{family}"),
            DistributionPlan::ScaledUniform { factor } if *factor == 1.0 => write!(f, "uniform:n"),
            DistributionPlan::ScaledUniform { factor } => write!(f, "uniform:{factor}n"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskRow {
    pub n: u64,
    pub trials: usize,
    pub distribution: String,
    /// Mean of `(estimate - G_0)^2`.
    pub mse: f64,
    pub se: f64,
    /// Mean of `estimate - G_0`.
    pub bias: f64,
    pub bias_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub estimator: String,
    pub g: String,
    pub distribution: String,
    pub rows: Vec<RiskRow>,
    /// Log-log fit of MSE against `n`, when at least three rows have positive MSE.
    pub fit: Option<RateFit>,
}

/// Least squares on `(ln n, ln value)`.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(invalid(format!("rate fit needs >= 3 points, got {}", points.len())));
    }
    if let Some((x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(invalid(format!("rate fit needs positive coordinates, got ({x}, {y})")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("rate fit needs at least two distinct n"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(RateFit { slope, intercept, residual: (rss / m).sqrt() })
}

impl RiskReport {
    fn refit(&mut self) {
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.n as f64, r.mse)).collect();
        self.fit = rate_fit(&pts).ok();
    }
}

/// Squared-error risk of `kind` for the missing mass of `g`, one row per `n`.
pub fn mc_risk(
    plan: &DistributionPlan,
    kind: EstimatorKind,
    g: &GFunction,
    n_list: &[u64],
    trials: usize,
    seed: u64,
) -> Result<RiskReport> {
    if trials < 100 {
        return Err(invalid(format!("risk simulation needs >= 100 trials, got {trials}")));
    }
    if n_list.is_empty() {
        return Err(invalid("empty list of sample sizes"));
    }
    kind.check_target(g)?;
    let mut rows = Vec::with_capacity(n_list.len());
    for (block, &n) in n_list.iter().enumerate() {
        if let Some(a) = kind.order() {
            if n < a as u64 {
                return Err(Error::InsufficientSample { required: a as u64, actual: n });
            }
        }
        let dist = plan.at(n)?;
        let gv = g_values(&dist, g);
        let errors: Vec<f64> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, block as u64, t);
                let counts = dist.sample_counts_with(n as usize, &mut rng);
                let est = estimate(kind, &SampleProfile::from_counts(&counts))
                    .expect("sample size checked above");
                est - missing_from_counts(&dist, &counts, &gv)
            })
            .collect();
        let squares: Vec<f64> = errors.iter().map(|e| e * e).collect();
        let (mse, se) = mean_se(&squares);
        let (bias, bias_se) = mean_se(&errors);
        rows.push(RiskRow {
            n,
            trials,
            distribution: dist_label(plan, &dist),
            mse,
            se,
            bias,
            bias_se,
        });
    }
    let mut report = RiskReport {
        estimator: kind.to_string(),
        g: g.to_string(),
        distribution: plan.to_string(),
        rows,
        fit: None,
    };
    report.refit();
    Ok(report)
}

fn dist_label(plan: &DistributionPlan, dist: &DiscreteDistribution) -> String {
    match plan {
        DistributionPlan::Fixed(f) => f.to_string(),
        DistributionPlan::ScaledUniform { .. } => format!("uniform:{}", dist.support_size()),
    }
}

/// Largest risk over a grid of plans at each `n`; a lower estimate of the
/// worst-case risk over all distributions.
pub fn worst_case_risk(
    plans: &[DistributionPlan],
    kind: EstimatorKind,
    g: &GFunction,
    n_list: &[u64],
    trials: usize,
    seed: u64,
) -> Result<RiskReport> {
    if plans.is_empty() {
        return Err(invalid("empty family grid"));
    }
    let reports: Vec<RiskReport> = plans
        .iter()
        .enumerate()
        .map(|(i, p)| mc_risk(p, kind, g, n_list, trials, seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    let rows = (0..n_list.len())
        .map(|j| {
            reports
                .iter()
                .map(|r| r.rows[j].clone())
                .max_by(|a, b| a.mse.total_cmp(&b.mse))
                .expect("non-empty")
        })
        .collect();
    let names: Vec<String> = plans.iter().map(|p| p.to_string()).collect();
    let mut report = RiskReport {
        estimator: kind.to_string(),
        g: g.to_string(),
        distribution: format!("max[{}]", names.join(",")),
        rows,
        fit: None,
    };
    report.refit();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub eps: f64,
    /// Empirical `Pr(G_0 - E G_0 >= eps)`.
    pub right_freq: f64,
    pub right_se: f64,
    /// Empirical `Pr(G_0 - E G_0 <= -eps)`.
    pub left_freq: f64,
    pub left_se: f64,
    pub right_bounds: BTreeMap<String, f64>,
    pub left_bounds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub n: u64,
    pub g: String,
    pub distribution: String,
    pub trials: usize,
    pub mean: f64,
    pub rows: Vec<TailRow>,
}

/// Binomial standard error with a floor of `1/trials`.
pub fn binomial_se(freq: f64, trials: usize) -> f64 {
    let t = trials as f64;
    (freq * (1.0 - freq) / t).sqrt().max(1.0 / t)
}

/// Whether every `p_x > 0` respects the support floor of `g`.
fn floor_respected(dist: &DiscreteDistribution, g: &GFunction) -> bool {
    match g.kind() {
        GKind::EntropyLog2 { k_floor } => dist.min_positive() * *k_floor as f64 >= 1.0 - 1e-12,
        _ => true,
    }
}

/// Named bound functions applicable to `(dist, n, g)`; right tails first.
#[allow(clippy::type_complexity)]
fn applicable_bounds(
    dist: &DiscreteDistribution,
    n: u64,
    g: &GFunction,
) -> (Vec<(String, Box<dyn Fn(f64) -> f64 + Send + Sync>)>, Vec<(String, Box<dyn Fn(f64) -> f64 + Send + Sync>)>) {
    type Named = (String, Box<dyn Fn(f64) -> f64 + Send + Sync>);
    let mut right: Vec<Named> = Vec::new();
    let mut left: Vec<Named> = Vec::new();
    let floor_ok = floor_respected(dist, g);

    if floor_ok && g.ratio_sup().is_ok() {
        let gc = g.clone();
        let gl = g.clone();
        right.push(("subgauss".into(), Box::new(move |e| theorem2_sub_gaussian_right(n, &gc, e).unwrap_or(1.0))));
        left.push(("subgauss".into(), Box::new(move |e| theorem2_sub_gaussian_right(n, &gl, e).unwrap_or(1.0))));
    }
    for r in [1u32, 2, 5] {
        if let Ok(spec) = build_spec(n, g, r) {
            let name = if r == 1 { "ssg".to_string() } else { format!("poly:{r}") };
            right.push((name, Box::new(move |e| spec.evaluate(e).map(|p| p.bound).unwrap_or(1.0))));
        }
    }
    if left_tail(n, g, 0.0, VarianceSource::Exact).is_ok() {
        let gc = g.clone();
        left.push(("left".into(), Box::new(move |e| left_tail(n, &gc, e, VarianceSource::Exact).unwrap_or(1.0))));
    }
    if floor_ok {
        if let Ok(kind) = CorollaryKind::for_g(g) {
            if corollary_right_tail(kind, n, 0.0).is_ok() {
                right.push(("cor-right".into(), Box::new(move |e| corollary_right_tail(kind, n, e).unwrap_or(1.0))));
            }
            if corollary_left_tail(kind, n, 0.0).is_ok() {
                left.push(("cor-left".into(), Box::new(move |e| corollary_left_tail(kind, n, e).unwrap_or(1.0))));
            }
        }
    }
    (right, left)
}

/// Empirical two-sided deviation frequencies of `G_0` around its mean,
/// alongside every bound that applies to `(dist, n, g)`.
pub fn mc_tail(
    dist: &DiscreteDistribution,
    g: &GFunction,
    n: u64,
    trials: usize,
    eps_grid: &[f64],
    seed: u64,
) -> Result<TailReport> {
    if trials < 1000 {
        return Err(invalid(format!("tail simulation needs >= 1000 trials, got {trials}")));
    }
    if let Some(e) = eps_grid.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(invalid(format!("eps must be >= 0, got {e}")));
    }
    let gv = g_values(dist, g);
    let mean = expected_missing_formula(dist, n, g);
    let deviations: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, 0, t);
            let counts = dist.sample_counts_with(n as usize, &mut rng);
            missing_from_counts(dist, &counts, &gv) - mean
        })
        .collect();
    let (right, left) = applicable_bounds(dist, n, g);
    let rows = eps_grid
        .iter()
        .map(|&eps| {
            let hi = deviations.iter().filter(|d| **d >= eps).count() as f64 / trials as f64;
            let lo = deviations.iter().filter(|d| **d <= -eps).count() as f64 / trials as f64;
            TailRow {
                eps,
                right_freq: hi,
                right_se: binomial_se(hi, trials),
                left_freq: lo,
                left_se: binomial_se(lo, trials),
                right_bounds: right.iter().map(|(k, f)| (k.clone(), f(eps))).collect(),
                left_bounds: left.iter().map(|(k, f)| (k.clone(), f(eps))).collect(),
            }
        })
        .collect();
    Ok(TailReport {
        n,
        g: g.to_string(),
        distribution: format!("explicit:{}", dist.support_size()),
        trials,
        mean,
        rows,
    })
}

/// `tau(u, v) = Gamma(u + v) / Gamma(u)` for integer `v`, as a rising product.
pub fn tau_int(u: f64, v: u32) -> f64 {
    (0..v).map(|j| u + j as f64).product()
}

/// `ln tau(u, v)` through log-Gamma, for real `v`.
pub fn ln_tau(u: f64, v: f64) -> f64 {
    statrs::function::gamma::ln_gamma(u + v) - statrs::function::gamma::ln_gamma(u)
}

/// Parameters of the Dirichlet prior with `k = round(c n^2)` symbols and
/// concentration `1/n` each.
#[derive(Debug, Clone, Copy)]
struct DirichletSetup {
    n: u64,
    k: u64,
    beta: f64,
    total: f64,
    alpha: u32,
}

impl DirichletSetup {
    fn new(n: u64, c: f64, alpha: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InsufficientSample { required: 2, actual: n });
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(invalid(format!("prior size constant must be > 0, got {c}")));
        }
        if alpha < 1 {
            return Err(invalid("order must be >= 1"));
        }
        let k = (c * (n as f64).powi(2)).round();
        if k < 2.0 {
            return Err(invalid(format!("prior needs k = round(c n^2) >= 2, got {k}")));
        }
        let k = k as u64;
        let beta = 1.0 / n as f64;
        Ok(DirichletSetup { n, k, beta, total: k as f64 * beta, alpha })
    }

    /// Posterior mass sum `beta_0 + n`.
    fn post_total(&self) -> f64 {
        self.total + self.n as f64
    }

    /// `(A2 - A3, A5 (A6 - A7))`: variance of one unseen `p_x^alpha` and the
    /// covariance of two, under the posterior.
    fn posterior_moments(&self) -> (f64, f64) {
        let a = self.alpha;
        let big = self.post_total();
        let t_b1 = tau_int(self.beta, a);
        let t_b2 = tau_int(self.beta, 2 * a);
        let t_n1 = tau_int(big, a);
        let t_n2 = tau_int(big, 2 * a);
        let var = t_b2 / t_n2 - (t_b1 / t_n1).powi(2);
        // 1/tau(N,2a) - 1/tau(N,a)^2 = (1/tau(N,2a)) (1 - prod_j (1 + a/(N+j))).
        let log_ratio: f64 = (0..a).map(|j| (a as f64 / (big + j as f64)).ln_1p()).sum();
        let cov = t_b1 * t_b1 * (-log_ratio.exp_m1()) / t_n2;
        (var, cov)
    }

    /// `Pr(F_x = 0)` for `j = 1`, `Pr(F_x = F_y = 0)` for `j = 2`.
    fn unseen_prob(&self, j: u32) -> f64 {
        let n = self.n as f64;
        (0..self.n)
            .map(|l| (-(j as f64) / (n * (self.total + l as f64))).ln_1p())
            .sum::<f64>()
            .exp()
    }
}

/// Bayes risk `T` of the order-alpha missing mass under the Dirichlet prior:
/// `k A1 (A2 - A3) + k (k-1) A4 A5 (A6 - A7)`.
pub fn dirichlet_prior_variance(n: u64, c: f64, alpha: u32) -> Result<f64> {
    let s = DirichletSetup::new(n, c, alpha)?;
    let (var, cov) = s.posterior_moments();
    let k = s.k as f64;
    Ok(k * s.unseen_prob(1) * var + k * (k - 1.0) * s.unseen_prob(2) * cov)
}

/// Large-`n` form `(c/(c+1)) ((c+1) n)^{-(2 alpha - 1)} ((2 alpha - 1)! - c (alpha!)^2 / (c+1))`.
pub fn dirichlet_asymptotic(n: u64, c: f64, alpha: u32) -> f64 {
    let fact = |m: u32| (1..=m).map(f64::from).product::<f64>();
    let a = alpha as f64;
    (c / (c + 1.0)) / ((c + 1.0) * n as f64).powf(2.0 * a - 1.0)
        * (fact(2 * alpha - 1) - c * fact(alpha).powi(2) / (c + 1.0))
}

/// Monte Carlo estimate of the same Bayes risk: draw `P` from the prior,
/// `X^n` from `P`, and average the posterior variance given the number of
/// unseen symbols. Returns `(mean, standard error)`.
pub fn dirichlet_prior_variance_mc(
    n: u64,
    c: f64,
    alpha: u32,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let s = DirichletSetup::new(n, c, alpha)?;
    if trials < 2 {
        return Err(invalid("need at least 2 trials"));
    }
    let (var, cov) = s.posterior_moments();
    let gamma = Gamma::new(s.beta, 1.0).map_err(|e| invalid(e.to_string()))?;
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, 0, t);
            let weights: Vec<f64> = (0..s.k).map(|_| gamma.sample(&mut rng)).collect();
            let m = match DiscreteDistribution::from_weights(weights) {
                Ok(p) => {
                    let counts = p.sample_counts_with(s.n as usize, &mut rng);
                    counts.iter().filter(|c| **c == 0).count() as f64
                }
                // All weights underflowed: the draw is degenerate; treat one
                // symbol as carrying the mass.
                Err(_) => (s.k - 1) as f64,
            };
            m * var + m * (m - 1.0) * cov
        })
        .collect();
    Ok(mean_se(&values))
}
