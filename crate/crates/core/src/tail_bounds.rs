//! Concentration bound families and the bound builders for the missing mass.
//!
//! Every tail function returns a probability bound in `(0, 1]`; the raw
//! exponent is available through [`BoundPoint`] for diagnostics.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{invalid, regime, Error, Result};
use crate::gfunction::{GFunction, GKind};
use crate::optimize::bisect_increasing;
use crate::ustar::{
    gamma_alpha, gamma_const, power_u2_threshold, scale_parameter, u2_closed_bound, u_star,
    DEFAULT_TOLERANCE, THEOREM2_VARIANCE_FACTOR,
};

/// One of the bound families, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ConcentrationSpec {
    SubGaussian { sigma2: f64 },
    SubGamma { v: f64, c: f64 },
    StronglySubGamma { v: f64, c: f64 },
    /// Gamma log-MGF plus the filter `sum_{r=2}^R a_r lambda^r / r`;
    /// `a[0]` holds `a_2`.
    PolyFiltered { r: u32, a: Vec<f64>, v: f64, c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundPoint {
    pub eps: f64,
    pub bound: f64,
    pub exponent: f64,
}

impl BoundPoint {
    fn from_exponent(eps: f64, exponent: f64) -> Self {
        BoundPoint { eps, bound: exponent.min(0.0).exp(), exponent }
    }
}

/// Outcome of the Chernoff minimization for a poly-filtered spec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffResult {
    pub bound: f64,
    pub exponent: f64,
    pub lambda: f64,
    /// `|f'(lambda) - eps|` at the returned `lambda`.
    pub residual: f64,
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and > 0, got {x}")))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("eps must be finite and >= 0, got {eps}")))
    }
}

/// `x - ln(1 + x)`, accurate for small `x`.
fn x_minus_log1p(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let mut term = -x;
        let mut acc = 0.0;
        for k in 2..=8 {
            term *= -x;
            acc += term / k as f64;
        }
        acc
    } else {
        x - x.ln_1p()
    }
}

fn sub_gaussian_exponent(sigma2: f64, eps: f64) -> f64 {
    -eps * eps / (2.0 * sigma2)
}

fn sub_gamma_exponent(v: f64, c: f64, eps: f64) -> f64 {
    let x = c * eps / v;
    -eps * eps / (v * (1.0 + x + (1.0 + 2.0 * x).sqrt()))
}

fn strongly_sub_gamma_exponent(v: f64, c: f64, eps: f64) -> f64 {
    -(v / (c * c)) * x_minus_log1p(c * eps / v)
}

/// `exp(-eps^2 / (2 sigma2))`.
pub fn sub_gaussian_tail(sigma2: f64, eps: f64) -> Result<f64> {
    check_positive("sigma2", sigma2)?;
    check_eps(eps)?;
    Ok(sub_gaussian_exponent(sigma2, eps).exp())
}

/// `exp{-(1 + c eps/v - sqrt(1 + 2 c eps/v)) v / c^2}`.
pub fn sub_gamma_tail(v: f64, c: f64, eps: f64) -> Result<f64> {
    check_positive("v", v)?;
    check_positive("c", c)?;
    check_eps(eps)?;
    Ok(sub_gamma_exponent(v, c, eps).exp())
}

/// `exp{-(1/c)(eps - (v/c) ln(1 + c eps / v))}`.
pub fn strongly_sub_gamma_tail(v: f64, c: f64, eps: f64) -> Result<f64> {
    check_positive("v", v)?;
    check_positive("c", c)?;
    check_eps(eps)?;
    Ok(strongly_sub_gamma_exponent(v, c, eps).exp())
}

fn poly_r2_exponent(a2: f64, v: f64, c: f64, eps: f64) -> Result<f64> {
    if eps == 0.0 {
        return Ok(0.0);
    }
    let s = a2 + v + c * eps;
    let d1 = s + (s * s - 4.0 * a2 * c * eps).max(0.0).sqrt();
    let d2 = a2 - (v + c * eps);
    if !(d1 > 2.0 * c * eps) {
        return Err(Error::Internal(format!(
            "analytic R=2 tail: d1 = {d1} does not exceed 2 c eps = {}",
            2.0 * c * eps
        )));
    }
    Ok(-((0.5 - d2 / d1) * eps + (v / c) * (-2.0 * c * eps / d1).ln_1p()) / c)
}

/// Closed form of the `R = 2` poly-filtered Chernoff bound:
/// `exp{-(1/c)((1/2 - d2/d1) eps + (v/c) ln(1 - 2 c eps / d1))}` with
/// `d1 = s + sqrt(s^2 - 4 a2 c eps)`, `s = a2 + v + c eps`, `d2 = a2 - v - c eps`.
pub fn poly_filtered_tail_r2(a2: f64, v: f64, c: f64, eps: f64) -> Result<f64> {
    if !(a2.is_finite() && a2 >= 0.0) {
        return Err(invalid(format!("a2 must be >= 0, got {a2}")));
    }
    check_positive("v", v)?;
    check_positive("c", c)?;
    check_eps(eps)?;
    Ok(poly_r2_exponent(a2, v, c, eps)?.min(0.0).exp())
}

/// `-y - ln(1 - y)`, the Gamma log-MGF shape, accurate for small `y`.
fn gamma_log_mgf_shape(y: f64) -> f64 {
    if y.abs() < 1e-3 {
        let mut term = 1.0;
        let mut acc = 0.0;
        for k in 2..=8 {
            term *= y;
            acc += term * y / k as f64;
        }
        acc
    } else {
        -y - (-y).ln_1p()
    }
}

/// Chernoff bound `exp(min_lambda f(lambda) - lambda eps)` for a poly-filtered spec.
pub fn poly_filtered_tail(spec: &ConcentrationSpec, eps: f64) -> Result<ChernoffResult> {
    let (a, v, c) = match spec {
        ConcentrationSpec::PolyFiltered { a, v, c, .. } => (a.as_slice(), *v, *c),
        ConcentrationSpec::StronglySubGamma { v, c } => (&[][..], *v, *c),
        other => return Err(invalid(format!("not a poly-filtered spec: {other:?}"))),
    };
    spec.validate()?;
    check_eps(eps)?;
    if eps == 0.0 {
        return Ok(ChernoffResult { bound: 1.0, exponent: 0.0, lambda: 0.0, residual: 0.0 });
    }
    // a[i] is the coefficient a_{i+2}.
    let fprime = |lam: f64| {
        let mut acc = v * lam / (1.0 - c * lam);
        let mut pow = lam;
        for ar in a {
            acc += ar * pow;
            pow *= lam;
        }
        acc
    };
    let lambda = bisect_increasing(|lam| fprime(lam) - eps, 0.0, 1.0 / c);
    let mut f = (v / (c * c)) * gamma_log_mgf_shape(c * lambda);
    let mut pow = lambda * lambda;
    for (i, ar) in a.iter().enumerate() {
        f += ar * pow / (i + 2) as f64;
        pow *= lambda;
    }
    let exponent = f - lambda * eps;
    Ok(ChernoffResult {
        bound: exponent.min(0.0).exp(),
        exponent,
        lambda,
        residual: (fprime(lambda) - eps).abs(),
    })
}

impl ConcentrationSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ConcentrationSpec::SubGaussian { sigma2 } => check_positive("sigma2", *sigma2),
            ConcentrationSpec::SubGamma { v, c } | ConcentrationSpec::StronglySubGamma { v, c } => {
                check_positive("v", *v)?;
                check_positive("c", *c)
            }
            ConcentrationSpec::PolyFiltered { r, a, v, c } => {
                check_positive("v", *v)?;
                check_positive("c", *c)?;
                if *r < 1 || a.len() != (*r as usize).saturating_sub(1) {
                    return Err(invalid(format!(
                        "poly-filtered spec with R = {r} needs {} filter coefficients, got {}",
                        r.saturating_sub(1),
                        a.len()
                    )));
                }
                if let Some(bad) = a.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                    return Err(invalid(format!("filter coefficients must be >= 0, got {bad}")));
                }
                Ok(())
            }
        }
    }

    /// Right-tail bound at `eps`.
    pub fn evaluate(&self, eps: f64) -> Result<BoundPoint> {
        self.validate()?;
        check_eps(eps)?;
        let exponent = match self {
            ConcentrationSpec::SubGaussian { sigma2 } => sub_gaussian_exponent(*sigma2, eps),
            ConcentrationSpec::SubGamma { v, c } => sub_gamma_exponent(*v, *c, eps),
            ConcentrationSpec::StronglySubGamma { v, c } => strongly_sub_gamma_exponent(*v, *c, eps),
            ConcentrationSpec::PolyFiltered { .. } => poly_filtered_tail(self, eps)?.exponent,
        };
        Ok(BoundPoint::from_exponent(eps, exponent))
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Poly-filtered spec of order `R` for `G_0` under `g` with exact `u*_r`:
/// `c` from [`scale_parameter`], `v = u*_{R+1} / (c^{R-1} R!)` and
/// `a_r = u*_r / (r-1)! - c^{r-2} v`.
pub fn build_spec(n: u64, g: &GFunction, r: u32) -> Result<ConcentrationSpec> {
    if r < 1 {
        return Err(invalid("filter order R must be >= 1"));
    }
    let c = scale_parameter(n, g)?;
    let us: Vec<f64> = (2..=r + 1)
        .map(|k| u_star(n, g, k, DEFAULT_TOLERANCE).map(|u| u.value))
        .collect::<Result<_>>()?;
    let u = |k: u32| us[(k - 2) as usize];
    let v = u(r + 1) / (c.powi(r as i32 - 1) * factorial(r));
    let mut a = Vec::with_capacity(r as usize - 1);
    for k in 2..=r {
        let lead = u(k) / factorial(k - 1);
        let ak = lead - c.powi(k as i32 - 2) * v;
        if ak < -1e-9 * lead {
            return Err(Error::Internal(format!(
                "a_{k} = {ak} < 0: scale parameter {c} violates the rate-of-fall condition"
            )));
        }
        a.push(ak.max(0.0));
    }
    let spec = ConcentrationSpec::PolyFiltered { r, a, v, c };
    spec.validate()?;
    Ok(spec)
}

/// Distribution-free sub-Gaussian bound with variance `0.519 sup(g(p)/p)^2 / n`.
/// It holds for both tails.
pub fn theorem2_sub_gaussian_right(n: u64, g: &GFunction, eps: f64) -> Result<f64> {
    theorem2_sub_gaussian_spec(n, g)?.evaluate(eps).map(|p| p.bound)
}

pub fn theorem2_sub_gaussian_spec(n: u64, g: &GFunction) -> Result<ConcentrationSpec> {
    if n < 1 {
        return Err(Error::InsufficientSample { required: 1, actual: n });
    }
    let ratio = g.ratio_sup()?;
    Ok(ConcentrationSpec::SubGaussian { sigma2: THEOREM2_VARIANCE_FACTOR * ratio * ratio / n as f64 })
}

/// Source of the left-tail variance `u*_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceSource {
    /// Numeric maximization.
    Exact,
    /// The closed-form upper bound.
    ClosedForm,
}

/// Left-tail bound `Pr(G_0 - E G_0 <= -eps) <= exp(-eps^2 / (2 u*_2))`.
pub fn left_tail(n: u64, g: &GFunction, eps: f64, variance: VarianceSource) -> Result<f64> {
    left_tail_spec(n, g, variance)?.evaluate(eps).map(|p| p.bound)
}

pub fn left_tail_spec(n: u64, g: &GFunction, variance: VarianceSource) -> Result<ConcentrationSpec> {
    let sigma2 = match variance {
        VarianceSource::Exact => u_star(n, g, 2, DEFAULT_TOLERANCE)?.value,
        VarianceSource::ClosedForm => u2_closed_bound(n, g)?,
    };
    Ok(ConcentrationSpec::SubGaussian { sigma2 })
}

/// The missing quantities with printed closed-form tails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorollaryKind {
    /// Classical missing mass, `g(p) = p`.
    M0,
    /// Order-alpha missing mass, `g(p) = p^alpha`.
    M0Alpha(f64),
    /// Missing Shannon entropy for distributions with `p_x >= 1/k`.
    Entropy(u64),
}

impl CorollaryKind {
    /// The kind matching a built-in `g`.
    pub fn for_g(g: &GFunction) -> Result<Self> {
        match g.kind() {
            GKind::Power { alpha } if *alpha == 1.0 => Ok(CorollaryKind::M0),
            GKind::Power { alpha } => Ok(CorollaryKind::M0Alpha(*alpha)),
            GKind::EntropyLog2 { k_floor } => Ok(CorollaryKind::Entropy(*k_floor)),
            GKind::UserDefined(_) => Err(Error::Unsupported(
                "closed-form tails exist only for built-in g".into(),
            )),
        }
    }
}

fn need_n(n: u64, required: u64) -> Result<()> {
    if n < required {
        Err(Error::InsufficientSample { required, actual: n })
    } else {
        Ok(())
    }
}

fn check_k(k: u64) -> Result<f64> {
    if k < 2 {
        return Err(invalid(format!("entropy floor k must be >= 2, got {k}")));
    }
    Ok((k as f64).log2())
}

/// Closed-form left tails: `exp(-n^{2 alpha - 1} eps^2 / (2 gamma_alpha))`
/// and `exp(-n eps^2 / (2 gamma (log2 k)^2))`.
pub fn corollary_left_tail(kind: CorollaryKind, n: u64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let exponent = match kind {
        CorollaryKind::M0 => return corollary_left_tail(CorollaryKind::M0Alpha(1.0), n, eps),
        CorollaryKind::M0Alpha(alpha) => {
            if !(alpha >= 1.0) {
                return Err(Error::Unsupported(format!("order {alpha} < 1 has no left-tail bound")));
            }
            let threshold = power_u2_threshold(alpha)?;
            if (n as f64) < threshold {
                return Err(regime(format!(
                    "order-{alpha} left tail needs n >= {threshold:.4}, got {n}"
                )));
            }
            -(n as f64).powf(2.0 * alpha - 1.0) * eps * eps / (2.0 * gamma_alpha(alpha)?)
        }
        CorollaryKind::Entropy(k) => {
            let lk = check_k(k)?;
            need_n(n, 3)?;
            -(n as f64) * eps * eps / (2.0 * gamma_const() * lk * lk)
        }
    };
    Ok(exponent.exp())
}

/// Closed-form right tails, evaluated exactly as printed.
pub fn corollary_right_tail(kind: CorollaryKind, n: u64, eps: f64) -> Result<f64> {
    Ok(corollary_right_point(kind, n, eps)?.bound)
}

pub fn corollary_right_point(kind: CorollaryKind, n: u64, eps: f64) -> Result<BoundPoint> {
    check_eps(eps)?;
    let nf = n as f64;
    let exponent = match kind {
        CorollaryKind::M0 => {
            need_n(n, 3)?;
            let gamma_n = gamma_const() * (1.0 + 2.0 / nf);
            let w = 2.0 * gamma_n / 3.0;
            -(2.0 * (nf + 2.0) / 3.0) * w * x_minus_log1p(eps / w)
        }
        CorollaryKind::M0Alpha(alpha) if alpha == 1.0 => {
            return corollary_right_point(CorollaryKind::M0, n, eps)
        }
        CorollaryKind::M0Alpha(alpha) => {
            if !(alpha > 1.0 && alpha.is_finite()) {
                return Err(Error::Unsupported(format!(
                    "order-alpha right tail needs alpha > 1, got {alpha}"
                )));
            }
            let threshold = 1.0 + 4.0 * alpha * alpha / ((1.0 - alpha) * (1.0 - alpha));
            if !(nf > threshold) {
                return Err(regime(format!(
                    "order-{alpha} right tail needs n > {threshold:.4}, got {n}"
                )));
            }
            let b = 1.0 + 2.0 * alpha / (alpha - 1.0);
            let a = (b - 1.0) * (2.0 * (alpha - 1.0) / (alpha + 1.0)).powf(alpha);
            let ga = gamma_alpha(alpha)?;
            let m = nf - b;
            -m * eps / a
                + (ga / (a * a))
                    * m.powf(3.0 - 2.0 * alpha)
                    * (a * nf.powf(2.0 * alpha - 1.0) * eps / (ga * m)).ln_1p()
        }
        CorollaryKind::Entropy(k) => {
            let lk = check_k(k)?;
            need_n(n, 3)?;
            let n0 = (nf - 1.0) / 3.0 + std::f64::consts::E;
            let l0 = n0.log2();
            let gk = 2.0 * gamma_const() * (1.0 / 3.0 + (std::f64::consts::E - 1.0 / 3.0) / nf) * lk * lk;
            let inner = eps - (gk / l0) * (eps * l0 / gk).ln_1p() / std::f64::consts::LN_2;
            -(2.0 * n0 / l0) * inner
        }
    };
    Ok(BoundPoint::from_exponent(eps, exponent))
}

/// Bound families that can be tabulated over an `eps` grid for given `(n, g)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundFamily {
    /// `exp(-n eps^2)`, the classical sub-Gaussian bound for `M_0`.
    SubGaussianUnit,
    /// Distribution-free sub-Gaussian bound with factor 0.519.
    SubGaussian,
    /// Sub-Gamma with `v = u*_2`, `c` the scale parameter.
    SubGamma,
    /// Strongly sub-Gamma with `v = u*_2`, `c` the scale parameter.
    StronglySubGamma,
    /// Poly-filtered of order `R`.
    PolyFiltered(u32),
    /// Left tail with variance `u*_2`.
    LeftTail(VarianceSource),
    CorollaryLeft,
    CorollaryRight,
}

impl fmt::Display for BoundFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundFamily::SubGaussianUnit => write!(f, "subgauss-unit"),
            BoundFamily::SubGaussian => write!(f, "subgauss"),
            BoundFamily::SubGamma => write!(f, "subgamma"),
            BoundFamily::StronglySubGamma => write!(f, "ssg"),
            BoundFamily::PolyFiltered(r) => write!(f, "poly:{r}"),
            BoundFamily::LeftTail(VarianceSource::Exact) => write!(f, "left"),
            BoundFamily::LeftTail(VarianceSource::ClosedForm) => write!(f, "left-closed"),
            BoundFamily::CorollaryLeft => write!(f, "cor-left"),
            BoundFamily::CorollaryRight => write!(f, "cor-right"),
        }
    }
}

impl FromStr for BoundFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "subgauss-unit" => BoundFamily::SubGaussianUnit,
            "subgauss" => BoundFamily::SubGaussian,
            "subgamma" => BoundFamily::SubGamma,
            "ssg" => BoundFamily::StronglySubGamma,
            "left" => BoundFamily::LeftTail(VarianceSource::Exact),
            "left-closed" => BoundFamily::LeftTail(VarianceSource::ClosedForm),
            "cor-left" => BoundFamily::CorollaryLeft,
            "cor-right" => BoundFamily::CorollaryRight,
            other => {
                let r = other
                    .strip_prefix("poly:")
                    .and_then(|r| r.parse::<u32>().ok())
                    .filter(|r| *r >= 1)
                    .ok_or_else(|| invalid(format!("unknown bound family `{other}`")))?;
                BoundFamily::PolyFiltered(r)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurve {
    pub n: u64,
    pub g: String,
    pub family: String,
    pub points: Vec<BoundPoint>,
}

/// Tabulates a bound family over `eps_grid`.
pub fn curve(family: BoundFamily, n: u64, g: &GFunction, eps_grid: &[f64]) -> Result<BoundCurve> {
    for &e in eps_grid {
        check_eps(e)?;
    }
    let spec = match family {
        BoundFamily::SubGaussianUnit => {
            need_n(n, 1)?;
            Some(ConcentrationSpec::SubGaussian { sigma2: 1.0 / (2.0 * n as f64) })
        }
        BoundFamily::SubGaussian => Some(theorem2_sub_gaussian_spec(n, g)?),
        BoundFamily::SubGamma | BoundFamily::StronglySubGamma => {
            let c = scale_parameter(n, g)?;
            let v = u_star(n, g, 2, DEFAULT_TOLERANCE)?.value;
            Some(if family == BoundFamily::SubGamma {
                ConcentrationSpec::SubGamma { v, c }
            } else {
                ConcentrationSpec::StronglySubGamma { v, c }
            })
        }
        BoundFamily::PolyFiltered(r) => Some(build_spec(n, g, r)?),
        BoundFamily::LeftTail(source) => Some(left_tail_spec(n, g, source)?),
        BoundFamily::CorollaryLeft | BoundFamily::CorollaryRight => None,
    };
    let points = match spec {
        Some(spec) => eps_grid.iter().map(|&e| spec.evaluate(e)).collect::<Result<Vec<_>>>()?,
        None => {
            let kind = CorollaryKind::for_g(g)?;
            eps_grid
                .iter()
                .map(|&e| {
                    if family == BoundFamily::CorollaryRight {
                        corollary_right_point(kind, n, e)
                    } else {
                        corollary_left_tail(kind, n, e)
                            .map(|b| BoundPoint { eps: e, bound: b, exponent: b.ln() })
                    }
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(BoundCurve { n, g: g.to_string(), family: family.to_string(), points })
}

/// `0, 0.05, ..., 0.7`.
pub fn figure_one_grid() -> Vec<f64> {
    (0..=14).map(|i| i as f64 * 0.05).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FigureOneRow {
    pub eps: f64,
    pub subgauss: f64,
    pub r2: f64,
    pub r5: f64,
}

/// Right-tail bounds for the classical missing mass at sample size `n`:
/// `exp(-n eps^2)` against the poly-filtered bounds with `R = 2` and `R = 5`.
pub fn figure_one(n: u64) -> Result<Vec<FigureOneRow>> {
    let g = GFunction::power(1.0)?;
    let grid = figure_one_grid();
    let sg = curve(BoundFamily::SubGaussianUnit, n, &g, &grid)?;
    let r2 = curve(BoundFamily::PolyFiltered(2), n, &g, &grid)?;
    let r5 = curve(BoundFamily::PolyFiltered(5), n, &g, &grid)?;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &eps)| FigureOneRow {
            eps,
            subgauss: sg.points[i].bound,
            r2: r2.points[i].bound,
            r5: r5.points[i].bound,
        })
        .collect())
}
