//! Small one-dimensional search routines.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes a unimodal `f` on `[a, b]` by golden-section search.
///
/// Stops when the bracket is narrower than `x_tol`; returns `(argmax, max)`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, x_tol: f64) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..400 {
        if (b - a).abs() <= x_tol {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    let candidates = [(x1, f1), (x2, f2), (a, f(a)), (b, f(b))];
    candidates
        .into_iter()
        .filter(|(_, v)| !v.is_nan())
        .fold((x1, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

/// Global maximization over `[lo, hi]`: scan `points + 1` equally spaced
/// nodes, then refine by golden section in the two cells around the best node.
pub fn grid_refine_max<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    points: usize,
    x_tol: f64,
) -> (f64, f64) {
    let step = (hi - lo) / points as f64;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=points {
        let v = f(lo + step * i as f64);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    let (x, v) = golden_max(&f, a, b, x_tol);
    if v >= best_v {
        (x, v)
    } else {
        (lo + step * best_i as f64, best_v)
    }
}

/// Root of a nondecreasing `f` on `[lo, hi]` with `f(lo) <= 0 <= f(hi)`,
/// bisected until the bracket stops shrinking in floating point.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn grid_escapes_local_peak() {
        // Two bumps, the taller one on the right.
        let f = |x: f64| (-(x - 0.2f64).powi(2) * 400.0).exp() + 1.5 * (-(x - 0.8f64).powi(2) * 400.0).exp();
        let (x, _) = grid_refine_max(f, 0.0, 1.0, 1000, 1e-12);
        assert!((x - 0.8).abs() < 1e-6);
    }

    #[test]
    fn bisection_hits_sqrt_two() {
        let r = bisect_increasing(|x| x * x - 2.0, 0.0, 2.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }
}
