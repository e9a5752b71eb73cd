//! The maximizations behind the concentration bounds: `u*_r(n, g)`, the
//! constants `gamma`, `gamma_alpha`, `kappa`, and the scale parameter `c`.
//!
//! `u_r(p, n, g) = g(p)^r (1-p)^n (1 - (1-p)^n) / p` and `u*_r` is its maximum
//! over `0 < p < 1`.

use crate::error::{invalid, regime, Error, Result};
use crate::gfunction::{GFunction, GKind, TypeClass};
use crate::optimize::{golden_max, grid_refine_max};

/// Default absolute tolerance on `u*_r` values.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Variance factor of the distribution-free sub-Gaussian bound, as printed.
pub const THEOREM2_VARIANCE_FACTOR: f64 = 0.519;

const GRID_POINTS: usize = 40_000;
const P_EDGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct UStarResult {
    pub value: f64,
    pub argmax: f64,
    pub r: u32,
    pub n: u64,
    pub tolerance: f64,
}

/// `u_r(p, n, g)` for `p` in `(0,1)`.
pub fn u_r_eval(p: f64, n: u64, g: &GFunction, r: u32) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("u_r needs 0 < p < 1, got {p}")));
    }
    check_nr(n, r)?;
    let log_q = n as f64 * (-p).ln_1p();
    Ok(g.formula(p).powi(r as i32) * log_q.exp() * -log_q.exp_m1() / p)
}

fn check_nr(n: u64, r: u32) -> Result<()> {
    if n < 1 {
        return Err(invalid("u_r needs n >= 1"));
    }
    if r < 2 {
        return Err(invalid(format!("u_r needs r >= 2, got {r}")));
    }
    Ok(())
}

fn log_u_r(p: f64, n: u64, g: &GFunction, r: u32) -> f64 {
    let gp = g.formula(p);
    if !(gp > 0.0) || !(p > 0.0 && p < 1.0) {
        return f64::NEG_INFINITY;
    }
    let log_q = n as f64 * (-p).ln_1p();
    r as f64 * gp.ln() + log_q + (-log_q.exp_m1()).ln() - p.ln()
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `u*_r(n, g)` over the whole interval `(0,1)`, using the closed form of `g`
/// even below an entropy floor.
pub fn u_star(n: u64, g: &GFunction, r: u32, tolerance: f64) -> Result<UStarResult> {
    u_star_on(n, g, r, tolerance, P_EDGE, GRID_POINTS)
}

/// `u*_r(n, g)` restricted to the domain of `g` (`p >= 1/k` for the entropy term).
pub fn u_star_floored(n: u64, g: &GFunction, r: u32, tolerance: f64) -> Result<UStarResult> {
    u_star_on(n, g, r, tolerance, g.domain_floor().max(P_EDGE), GRID_POINTS)
}

/// Grid-then-refine maximization on `[p_lo, 1 - 1e-12]` in logit coordinates.
pub fn u_star_on(
    n: u64,
    g: &GFunction,
    r: u32,
    tolerance: f64,
    p_lo: f64,
    grid_points: usize,
) -> Result<UStarResult> {
    check_nr(n, r)?;
    if !(tolerance > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    if !(p_lo > 0.0 && p_lo < 1.0 - P_EDGE) {
        return Err(invalid(format!("lower search limit must lie in (0,1), got {p_lo}")));
    }
    let objective = |t: f64| log_u_r(logistic(t), n, g, r);
    let (t, log_v) = grid_refine_max(objective, logit(p_lo), logit(1.0 - P_EDGE), grid_points, 1e-13);
    if !log_v.is_finite() {
        return Err(Error::Internal(format!("u_{r} has no positive value for g = {g}")));
    }
    let argmax = logistic(t);
    Ok(UStarResult { value: log_v.exp(), argmax, r, n, tolerance })
}

/// `gamma = max_{t>0} t e^{-t} (1 - e^{-t}) = 0.26034...`.
pub fn gamma_const() -> f64 {
    gamma_alpha(1.0).expect("alpha = 1 is valid")
}

/// `gamma_alpha = max_{t>0} t^{2 alpha - 1} e^{-t} (1 - e^{-t})`, `alpha >= 1`.
pub fn gamma_alpha(alpha: f64) -> Result<f64> {
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(invalid(format!("gamma_alpha needs alpha >= 1, got {alpha}")));
    }
    let f = |t: f64| t.powf(2.0 * alpha - 1.0) * (-t).exp() * -(-t).exp_m1();
    Ok(golden_max(f, 1e-9, 50.0, 1e-12).1)
}

/// `(u/v^2) log(1 + e^{-u}(e^v - v - 1))`.
pub fn kappa_objective(u: f64, v: f64) -> f64 {
    (u / (v * v)) * ((-u).exp() * (v.exp_m1() - v)).ln_1p()
}

/// `kappa = max_{u,v>0} kappa_objective(u, v) = 0.2595...`; `2 kappa` is the
/// sub-Gaussian variance factor before rounding.
pub fn kappa_const() -> f64 {
    kappa_argmax().2
}

/// `(u, v, kappa)` from a nested grid search with golden-section refinement.
pub fn kappa_argmax() -> (f64, f64, f64) {
    let inner = |v: f64| grid_refine_max(|u| kappa_objective(u, v), 1e-6, 30.0, 300, 1e-12);
    let (v, k) = grid_refine_max(|v| inner(v).1, 1e-3, 30.0, 300, 1e-12);
    (inner(v).0, v, k)
}

/// Smallest `n` for which the closed-form `u*_2` bound of `p^alpha` holds:
/// `(2 alpha - 1) ln 2 / (2 alpha - 1 - ln 2)`.
pub fn power_u2_threshold(alpha: f64) -> Result<f64> {
    let m = 2.0 * alpha - 1.0;
    if !(alpha >= 1.0) || m <= std::f64::consts::LN_2 {
        return Err(Error::Unsupported(format!("no closed-form bound for order {alpha}")));
    }
    Ok(m * std::f64::consts::LN_2 / (m - std::f64::consts::LN_2))
}

/// Closed-form upper bound on `u*_2(n, g)`: `gamma_alpha / n^{2 alpha - 1}`
/// for `p^alpha`, `(log2 k)^2 gamma / n` for the entropy term.
pub fn u2_closed_bound(n: u64, g: &GFunction) -> Result<f64> {
    match g.kind() {
        GKind::Power { alpha } => {
            let threshold = power_u2_threshold(*alpha)?;
            if (n as f64) < threshold {
                return Err(regime(format!(
                    "closed-form u*_2 bound for power:{alpha} needs n >= {threshold:.4}, got {n}"
                )));
            }
            Ok(gamma_alpha(*alpha)? / (n as f64).powf(2.0 * alpha - 1.0))
        }
        GKind::EntropyLog2 { k_floor } => {
            if n < 3 {
                return Err(Error::InsufficientSample { required: 3, actual: n });
            }
            let l = (*k_floor as f64).log2();
            Ok(l * l * gamma_const() / n as f64)
        }
        GKind::UserDefined(_) => Err(Error::Unsupported(
            "no closed-form u*_2 bound for user-defined g".into(),
        )),
    }
}

/// The scale parameter `c` with `u*_r/(r-1)! <= c u*_{r-1}/(r-2)!` for all `r >= 3`.
pub fn scale_parameter(n: u64, g: &GFunction) -> Result<f64> {
    if n < 3 {
        return Err(Error::InsufficientSample { required: 3, actual: n });
    }
    let nf = n as f64;
    match g.classify() {
        TypeClass::TypeA { mu } => {
            let base = 0.5 * g.formula(3.0 * mu / (nf + 3.0 * mu - 1.0));
            if mu <= 1.0 || nf < 1.0 + 4.0 * mu * mu / ((mu - 1.0) * (mu - 1.0)) {
                return Ok(base);
            }
            let disc = 1.0 - 4.0 * mu * mu / ((nf - 1.0) * (mu - 1.0) * (mu - 1.0));
            let r2 = 0.5 * (nf - 1.0) * (1.0 - 1.0 / mu) * (1.0 + disc.max(0.0).sqrt());
            let second = g.formula(r2 * mu / (nf + r2 * mu - 1.0)) / (r2 - 1.0);
            Ok(base.max(second))
        }
        TypeClass::TypeB { p_star } => {
            let base = 0.5 * g.formula(3.0 / (nf + 3.0 / p_star - 1.0));
            let threshold = 1.0 + 4.0 / ((1.0 - p_star) * (1.0 - p_star));
            if g.ratio_nonincreasing() || nf < threshold {
                return Ok(base);
            }
            let disc = 1.0 - 4.0 / ((nf - 1.0) * (1.0 - p_star) * (1.0 - p_star));
            let r4 = 0.5 * (nf - 1.0) * (1.0 - p_star) * (1.0 + disc.max(0.0).sqrt());
            let second = g.formula(r4 / (nf + r4 / p_star - 1.0)) / (r4 - 1.0);
            Ok(base.max(second))
        }
        TypeClass::Unclassified => Err(Error::Unsupported(format!(
            "g = {g} has no Type A/B class; the scale parameter is undefined"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfunction::UserDefined;

    fn p(alpha: f64) -> GFunction {
        GFunction::power(alpha).unwrap()
    }

    #[test]
    fn u_r_examples() {
        assert!((u_r_eval(0.5, 1, &p(1.0), 2).unwrap() - 0.125).abs() < 1e-15);
        assert!((u_r_eval(0.5, 2, &p(2.0), 2).unwrap() - 0.0234375).abs() < 1e-15);
        for n in [1, 10, 1000] {
            assert!(u_r_eval(1.0 - 1e-12, n, &p(1.0), 2).unwrap() < 1e-11);
        }
        assert!(u_r_eval(0.0, 3, &p(1.0), 2).is_err());
        assert!(u_r_eval(1.0, 3, &p(1.0), 2).is_err());
        assert!(u_r_eval(0.5, 3, &p(1.0), 1).is_err());
    }

    #[test]
    fn u_r_is_stable_for_large_n() {
        let v = u_r_eval(1e-7, 1_000_000, &p(1.0), 2).unwrap();
        let q = (1.0f64 - 1e-7).powf(1e6);
        assert!((v / (1e-7 * q * (1.0 - q)) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn u_star_examples() {
        let gamma = gamma_const();
        let a = u_star(20, &p(1.0), 2, DEFAULT_TOLERANCE).unwrap();
        assert!(a.value <= gamma / 20.0);
        assert!((a.value - u_r_eval(a.argmax, 20, &p(1.0), 2).unwrap()).abs() <= a.tolerance);
        let b = u_star(3, &p(1.0), 2, DEFAULT_TOLERANCE).unwrap();
        assert!(b.argmax > 0.25);
        let c = u_star(50, &p(2.0), 2, DEFAULT_TOLERANCE).unwrap();
        assert!(c.value <= gamma_alpha(2.0).unwrap() / 50f64.powi(3));
    }

    #[test]
    fn u_star_beats_every_grid_point() {
        for (n, g, r) in [(20u64, p(1.0), 2u32), (100, p(2.0), 4), (50, GFunction::entropy_log2(64).unwrap(), 3)] {
            let res = u_star(n, &g, r, DEFAULT_TOLERANCE).unwrap();
            for i in 1..100_000 {
                let x = i as f64 / 100_000.0;
                assert!(u_r_eval(x, n, &g, r).unwrap() <= res.value + res.tolerance);
            }
        }
    }

    #[test]
    fn u_star_converges_under_refinement() {
        for (n, g) in [(10u64, p(1.0)), (1000, p(2.0)), (200, GFunction::entropy_log2(64).unwrap())] {
            for r in 2..=6 {
                let coarse = u_star(n, &g, r, DEFAULT_TOLERANCE).unwrap();
                let fine = u_star_on(n, &g, r, DEFAULT_TOLERANCE, 1e-12, 4 * 40_000).unwrap();
                assert!((coarse.value - fine.value).abs() < 10.0 * DEFAULT_TOLERANCE);
            }
        }
    }

    #[test]
    fn floored_search_respects_domain() {
        let h = GFunction::entropy_log2(64).unwrap();
        let free = u_star(200, &h, 2, DEFAULT_TOLERANCE).unwrap();
        let floored = u_star_floored(200, &h, 2, DEFAULT_TOLERANCE).unwrap();
        assert!(floored.argmax >= 1.0 / 64.0 - 1e-15);
        assert!(floored.value <= free.value);
    }

    #[test]
    fn constants() {
        let gamma = gamma_const();
        assert!((gamma - 0.2603454913).abs() < 1e-9);
        assert!((1.0 / (2.0 * gamma) - 1.92).abs() < 0.01);
        assert_eq!(gamma_alpha(1.0).unwrap(), gamma);
        assert!(gamma_alpha(0.5).is_err());
        let (u, v, k) = kappa_argmax();
        assert!((k - 0.2595472).abs() < 1e-6);
        assert!((u - 1.7088).abs() < 1e-3 && (v - 2.7965).abs() < 1e-3);
        assert!((2.0 * k - THEOREM2_VARIANCE_FACTOR).abs() < 1e-3);
        assert!((kappa_objective(1.0, 1.0) - 0.234_45).abs() < 1e-4);
    }

    #[test]
    fn gamma_alpha_matches_dense_grid() {
        for alpha in [1.0, 1.5, 2.0, 3.0] {
            let f = |t: f64| t.powf(2.0 * alpha - 1.0) * (-t).exp() * (1.0 - (-t).exp());
            let grid = (1..=2_000_000).map(|i| f(i as f64 * 25e-6)).fold(0.0, f64::max);
            let gs = gamma_alpha(alpha).unwrap();
            assert!((gs - grid).abs() <= 1e-6 * gs && gs >= grid);
        }
    }

    #[test]
    fn closed_bound_examples() {
        let gamma = gamma_const();
        assert!((u2_closed_bound(20, &p(1.0)).unwrap() - gamma / 20.0).abs() < 1e-15);
        assert!((u2_closed_bound(20, &p(2.0)).unwrap() - gamma_alpha(2.0).unwrap() / 8000.0).abs() < 1e-18);
        let h = GFunction::entropy_log2(8).unwrap();
        assert!((u2_closed_bound(100, &h).unwrap() - 9.0 * gamma / 100.0).abs() < 1e-15);
        assert!(matches!(u2_closed_bound(2, &p(1.0)), Err(Error::OutOfRegime(_))));
        assert!(u2_closed_bound(2, &h).is_err());
        assert!(u2_closed_bound(10, &p(0.7)).is_err());
    }

    #[test]
    fn closed_bound_dominates_numeric() {
        for n in [3u64, 5, 10, 20, 50, 200, 1000] {
            for g in [p(1.0), p(1.5), p(2.0), p(3.0), GFunction::entropy_log2(64).unwrap()] {
                if let Ok(bound) = u2_closed_bound(n, &g) {
                    let numeric = u_star_floored(n, &g, 2, DEFAULT_TOLERANCE).unwrap().value;
                    assert!(numeric <= bound, "n = {n}, g = {g}: {numeric} > {bound}");
                }
            }
        }
    }

    #[test]
    fn scale_parameter_examples() {
        assert!((scale_parameter(20, &p(1.0)).unwrap() - 3.0 / 44.0).abs() < 1e-15);
        let h = GFunction::entropy_log2(1024).unwrap();
        let n0 = 99.0 / 3.0 + std::f64::consts::E;
        assert!((scale_parameter(100, &h).unwrap() - 0.5 * n0.log2() / n0).abs() < 1e-14);

        let r2 = 0.5 * 999.0 * 0.5 * (1.0 + (1.0f64 - 16.0 / 999.0).sqrt());
        let oracle = (0.5 * (6.0f64 / 1005.0).powi(2)).max((2.0 * r2 / (1000.0 + 2.0 * r2 - 1.0)).powi(2) / (r2 - 1.0));
        assert!((scale_parameter(1000, &p(2.0)).unwrap() - oracle).abs() < 1e-15);

        assert!(scale_parameter(2, &p(1.0)).is_err());
        let u = GFunction::user_defined(UserDefined::new("sq", |x| x * x, |x| 2.0 * x));
        assert!(matches!(scale_parameter(20, &u), Err(Error::Unsupported(_))));
        let declared = GFunction::user_defined(
            UserDefined::new("sq", |x| x * x, |x| 2.0 * x).with_class(TypeClass::TypeA { mu: 2.0 }),
        );
        assert_eq!(scale_parameter(1000, &declared).unwrap(), scale_parameter(1000, &p(2.0)).unwrap());
    }

    #[test]
    fn ratio_chain_holds() {
        let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
        for g in [p(1.0), p(2.0), GFunction::entropy_log2(64).unwrap()] {
            for n in [10u64, 50, 200, 1000] {
                let c = scale_parameter(n, &g).unwrap();
                let us: Vec<f64> = (2..=8)
                    .map(|r| u_star(n, &g, r, DEFAULT_TOLERANCE).unwrap().value)
                    .collect();
                for r in 3..=8u32 {
                    let lhs = us[(r - 2) as usize] / fact(r - 1);
                    let rhs = c * us[(r - 3) as usize] / fact(r - 2);
                    assert!(lhs <= rhs * (1.0 + 1e-9), "g = {g}, n = {n}, r = {r}");
                }
            }
        }
    }
}
