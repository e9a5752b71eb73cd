//! Good-Turing type estimators of the order-alpha missing mass.

use std::fmt;
use std::str::FromStr;

use crate::distributions::{accurate_sum, miss_prob, DiscreteDistribution};
use crate::empirical::SampleProfile;
use crate::error::{invalid, regime, Error, Result};
use crate::gfunction::GFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// `phi_1 / n`.
    GoodTuring,
    /// `phi_alpha / C(n, alpha)`.
    GeneralizedGoodTuring(u32),
    /// Always 0.
    Plugin,
}

impl EstimatorKind {
    /// The estimator for `sum_{x unseen} p_x^alpha`: generalized Good-Turing
    /// for integral `alpha`, none otherwise.
    pub fn for_order(alpha: f64) -> Result<Self> {
        if alpha >= 1.0 && alpha.fract() == 0.0 && alpha <= u32::MAX as f64 {
            Ok(EstimatorKind::GeneralizedGoodTuring(alpha as u32))
        } else {
            Err(Error::Unsupported(format!(
                "no Good-Turing type estimator for non-integer order {alpha}; use plugin"
            )))
        }
    }

    /// The order it targets, if it is a Good-Turing variant.
    pub fn order(&self) -> Option<u32> {
        match self {
            EstimatorKind::GoodTuring => Some(1),
            EstimatorKind::GeneralizedGoodTuring(a) => Some(*a),
            EstimatorKind::Plugin => None,
        }
    }

    /// Checks that the estimator targets the missing mass of `g`.
    pub fn check_target(&self, g: &GFunction) -> Result<()> {
        match self.order() {
            None => Ok(()),
            Some(a) if g.integer_power() == Some(a) => Ok(()),
            Some(a) => Err(invalid(format!(
                "{self} estimates the order-{a} missing mass but g is {g}"
            ))),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::GoodTuring => write!(f, "gt"),
            EstimatorKind::GeneralizedGoodTuring(a) => write!(f, "ggt:{a}"),
            EstimatorKind::Plugin => write!(f, "plugin"),
        }
    }
}

/// Parses `gt`, `ggt:<alpha>` or `plugin`.
impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gt" | "goodturing" => Ok(EstimatorKind::GoodTuring),
            "plugin" => Ok(EstimatorKind::Plugin),
            other => {
                let arg = other
                    .strip_prefix("ggt:")
                    .ok_or_else(|| invalid(format!("unknown estimator `{other}`")))?;
                let a: u32 = arg
                    .parse()
                    .map_err(|_| invalid(format!("bad estimator order `{arg}`")))?;
                if a == 0 {
                    return Err(invalid("estimator order must be >= 1"));
                }
                Ok(EstimatorKind::GeneralizedGoodTuring(a))
            }
        }
    }
}

/// `C(n, k)` as a product of ratios, finite for `n` up to ~1e9 and small `k`.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 1..=k {
        acc *= (n - k + i) as f64 / i as f64;
    }
    acc
}

pub fn estimate(kind: EstimatorKind, profile: &SampleProfile) -> Result<f64> {
    let alpha = match kind {
        EstimatorKind::Plugin => return Ok(0.0),
        EstimatorKind::GoodTuring => 1,
        EstimatorKind::GeneralizedGoodTuring(0) => {
            return Err(invalid("estimator order must be >= 1"))
        }
        EstimatorKind::GeneralizedGoodTuring(a) => a,
    };
    let n = profile.n();
    if n < alpha as u64 {
        return Err(Error::InsufficientSample { required: alpha as u64, actual: n });
    }
    Ok(profile.phi(alpha as u64) as f64 / binomial(n, alpha as u64))
}

/// `alpha^{alpha+1} / n^alpha`, valid for `n > 2 alpha`.
pub fn gt_bias_bound(n: u64, alpha: u32) -> Result<f64> {
    if alpha == 0 {
        return Err(invalid("order must be >= 1"));
    }
    if n <= 2 * alpha as u64 {
        return Err(regime(format!("bias bound needs n > 2*alpha = {}, got n = {n}", 2 * alpha)));
    }
    let a = alpha as f64;
    Ok(a.powf(a + 1.0) / (n as f64).powf(a))
}

/// Exact signed bias `E[phi_alpha / C(n,alpha)] - E[M_{0,alpha}]`
/// `= sum_x p^alpha (1-p)^{n-alpha} (1 - (1-p)^alpha)`.
pub fn exact_bias(dist: &DiscreteDistribution, n: u64, alpha: u32) -> Result<f64> {
    if alpha == 0 {
        return Err(invalid("order must be >= 1"));
    }
    if n < alpha as u64 {
        return Err(Error::InsufficientSample { required: alpha as u64, actual: n });
    }
    let a = alpha as f64;
    Ok(accurate_sum(dist.probs().iter().filter(|p| **p > 0.0).map(|&p| {
        p.powf(a) * miss_prob(p, n - alpha as u64) * (1.0 - miss_prob(p, alpha as u64))
    })))
}
