//! The weighting function `g : [0,1] -> [0, inf)` whose missing mass is studied.
//!
//! Two families are built in: powers `p^alpha` (order-alpha missing mass, with
//! `alpha = 1` the classical missing mass) and the Shannon term
//! `p * log2(1/p)` restricted to `p >= 1/k`. Anything else can be supplied as a
//! [`UserDefined`] pair of closures together with an optional shape class.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Shape class of `g` that drives the choice of the scale parameter.
///
/// * `TypeA { mu }`: `0 < g'(p) <= mu * g(p) / p` on `(0,1)`.
/// * `TypeB { p_star }`: `g` increases on `(0, p_star)` no faster than
///   `(1/p - 1/p_star) g(p) / (1-p)` and decreases on `(p_star, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TypeClass {
    TypeA { mu: f64 },
    TypeB { p_star: f64 },
    Unclassified,
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A caller-supplied `g` with its derivative.
#[derive(Clone)]
pub struct UserDefined {
    name: String,
    eval: RealFn,
    deriv: RealFn,
    class: Option<TypeClass>,
}

impl UserDefined {
    pub fn new<F, D>(name: impl Into<String>, eval: F, deriv: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        UserDefined {
            name: name.into(),
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            class: None,
        }
    }

    /// Declares the Type A/B class. The caller is responsible for its truth.
    pub fn with_class(mut self, class: TypeClass) -> Self {
        self.class = Some(class);
        self
    }
}

impl fmt::Debug for UserDefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserDefined")
            .field("name", &self.name)
            .field("class", &self.class)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum GKind {
    Power { alpha: f64 },
    EntropyLog2 { k_floor: u64 },
    UserDefined(UserDefined),
}

/// An immutable, thread-safe description of `g`.
#[derive(Debug, Clone)]
pub struct GFunction {
    kind: GKind,
}

impl GFunction {
    /// `g(p) = p^alpha`, `alpha > 0`.
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(invalid(format!("power exponent must be > 0, got {alpha}")));
        }
        Ok(GFunction { kind: GKind::Power { alpha } })
    }

    /// `g(p) = p log2(1/p)` for `p >= 1/k_floor`, `k_floor >= 2`.
    pub fn entropy_log2(k_floor: u64) -> Result<Self> {
        if k_floor < 2 {
            return Err(invalid(format!("entropy floor k must be >= 2, got {k_floor}")));
        }
        Ok(GFunction { kind: GKind::EntropyLog2 { k_floor } })
    }

    pub fn user_defined(g: UserDefined) -> Self {
        GFunction { kind: GKind::UserDefined(g) }
    }

    pub fn kind(&self) -> &GKind {
        &self.kind
    }

    /// Smallest admissible probability. Zero for everything but the entropy
    /// term, whose support is cut at `1/k`.
    pub fn domain_floor(&self) -> f64 {
        match self.kind {
            GKind::EntropyLog2 { k_floor } => 1.0 / k_floor as f64,
            _ => 0.0,
        }
    }

    /// `g(p)` with the domain enforced.
    pub fn eval(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(invalid(format!("g evaluated outside (0,1]: p = {p}")));
        }
        if let GKind::EntropyLog2 { k_floor } = self.kind {
            // Tolerate the rounding in 1/k itself.
            if p * (k_floor as f64) < 1.0 - 1e-12 {
                return Err(invalid(format!(
                    "entropy term evaluated below its floor 1/{k_floor}: p = {p}"
                )));
            }
        }
        Ok(self.formula(p))
    }

    /// The closed form of `g` on `(0,1]`, ignoring any support floor.
    ///
    /// Maximizations that are defined over the whole open interval (the
    /// `u*_r` family) go through this.
    pub fn formula(&self, p: f64) -> f64 {
        match &self.kind {
            GKind::Power { alpha } => {
                if *alpha == 1.0 {
                    p
                } else {
                    p.powf(*alpha)
                }
            }
            GKind::EntropyLog2 { .. } => {
                if p >= 1.0 {
                    0.0
                } else {
                    -p * p.log2()
                }
            }
            GKind::UserDefined(u) => (u.eval)(p),
        }
    }

    /// `g'(p)`, closed form for the built-in kinds.
    pub fn derivative(&self, p: f64) -> f64 {
        match &self.kind {
            GKind::Power { alpha } => alpha * p.powf(alpha - 1.0),
            GKind::EntropyLog2 { .. } => (-p.ln() - 1.0) / std::f64::consts::LN_2,
            GKind::UserDefined(u) => (u.deriv)(p),
        }
    }

    pub fn classify(&self) -> TypeClass {
        match &self.kind {
            GKind::Power { alpha } => TypeClass::TypeA { mu: *alpha },
            GKind::EntropyLog2 { .. } => TypeClass::TypeB {
                p_star: (-1.0f64).exp(),
            },
            GKind::UserDefined(u) => u.class.unwrap_or(TypeClass::Unclassified),
        }
    }

    /// `sup g(p)/p` over the domain of `g`.
    pub fn ratio_sup(&self) -> Result<f64> {
        match &self.kind {
            GKind::Power { alpha } if *alpha >= 1.0 => Ok(1.0),
            GKind::Power { alpha } => Err(Error::Unsupported(format!(
                "g(p)/p = p^{} is unbounded near 0",
                alpha - 1.0
            ))),
            GKind::EntropyLog2 { k_floor } => Ok((*k_floor as f64).log2()),
            GKind::UserDefined(u) => user_ratio_sup(u),
        }
    }

    /// Whether `g(p)/p` is non-increasing; only asserted for built-in kinds.
    pub(crate) fn ratio_nonincreasing(&self) -> bool {
        match self.kind {
            GKind::Power { alpha } => alpha <= 1.0,
            GKind::EntropyLog2 { .. } => true,
            GKind::UserDefined(_) => false,
        }
    }

    /// The exponent when `g` is `p^alpha` with integral `alpha >= 1`.
    pub fn integer_power(&self) -> Option<u32> {
        match self.kind {
            GKind::Power { alpha } if alpha >= 1.0 && alpha.fract() == 0.0 && alpha < 1e6 => {
                Some(alpha as u32)
            }
            _ => None,
        }
    }
}

fn user_ratio_sup(u: &UserDefined) -> Result<f64> {
    // Log-spaced scan; a supremum pinned at the lower edge is treated as unbounded.
    let points = 4000;
    let (lo, hi) = (1e-12f64.ln(), 0.0f64);
    let mut best = f64::NEG_INFINITY;
    let mut best_idx = 0;
    for i in 0..=points {
        let p = (lo + (hi - lo) * i as f64 / points as f64).exp();
        let r = (u.eval)(p) / p;
        if !r.is_finite() {
            return Err(Error::Unsupported(format!("g(p)/p not finite at p = {p}")));
        }
        if r > best {
            best = r;
            best_idx = i;
        }
    }
    if best_idx == 0 {
        return Err(Error::Unsupported(
            "g(p)/p appears unbounded as p -> 0".to_string(),
        ));
    }
    Ok(best)
}

impl fmt::Display for GFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GKind::Power { alpha } => write!(f, "power:{alpha}"),
            GKind::EntropyLog2 { k_floor } => write!(f, "entropy:{k_floor}"),
            GKind::UserDefined(u) => write!(f, "user:{}", u.name),
        }
    }
}

/// Parses `power:<alpha>` or `entropy:<k>`.
impl FromStr for GFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = s
            .split_once(':')
            .ok_or_else(|| invalid(format!("expected power:<alpha> or entropy:<k>, got `{s}`")))?;
        match head.trim() {
            "power" => {
                let alpha: f64 = arg
                    .trim()
                    .parse()
                    .map_err(|_| invalid(format!("bad power exponent `{arg}`")))?;
                GFunction::power(alpha)
            }
            "entropy" => {
                let k: u64 = arg
                    .trim()
                    .parse()
                    .map_err(|_| invalid(format!("bad entropy floor `{arg}`")))?;
                GFunction::entropy_log2(k)
            }
            other => Err(invalid(format!("unknown g kind `{other}`"))),
        }
    }
}
