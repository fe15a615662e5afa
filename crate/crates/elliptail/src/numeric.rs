//! Scalar quadrature, root bracketing and golden-section minimization used
//! by the brute-force risk-measure oracles.

/// Adaptive Simpson quadrature of `f` on [a, b] with relative tolerance
/// `rel_tol` (falls back to a small absolute floor for near-zero integrals).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // The tolerance is re-expressed against the first whole-interval estimate
    // so deeply subdivided panels share one absolute budget.
    let eps = rel_tol * whole.abs().max(1e-300);
    simpson_rec(f, a, b, fa, fm, fb, whole, eps, 52)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, eps * 0.5, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, eps * 0.5, depth - 1)
    }
}

/// Finds a root of `f` on [lo, hi] where f(lo) and f(hi) have opposite signs.
/// Bisection with a secant acceleration step; tolerance on the bracket width.
pub fn bracketed_root<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        // Secant candidate, guarded to stay inside the bracket.
        let mut mid = if (fhi - flo).abs() > 0.0 {
            lo - flo * (hi - lo) / (fhi - flo)
        } else {
            0.5 * (lo + hi)
        };
        let width = hi - lo;
        if !(mid > lo + 0.01 * width && mid < hi - 0.01 * width) {
            mid = 0.5 * (lo + hi);
        }
        let fmid = f(mid);
        if fmid == 0.0 || width < tol * (1.0 + mid.abs()) {
            return Some(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
            fhi = fmid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Golden-section minimization of a unimodal `f` on [a, b].
pub fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_polynomial_and_gaussian() {
        // ∫_0^1 x^3 dx = 1/4 (Simpson is exact on cubics)
        let v = adaptive_simpson(&|x| x * x * x, 0.0, 1.0, 1e-12);
        assert_relative_eq!(v, 0.25, max_relative = 1e-12);
        // Standard normal mass on [-8, 8]
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = adaptive_simpson(&phi, -8.0, 8.0, 1e-10);
        assert_relative_eq!(v, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn root_and_minimum() {
        let r = bracketed_root(&|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_relative_eq!(r, std::f64::consts::SQRT_2, max_relative = 1e-10);
        let m = golden_section(&|x: f64| (x - 1.3).powi(2) + 0.5, -4.0, 6.0, 1e-10);
        assert_relative_eq!(m, 1.3, epsilon = 1e-8);
    }

    #[test]
    fn root_requires_sign_change() {
        assert!(bracketed_root(&|x| x * x + 1.0, -1.0, 1.0, 1e-10).is_none());
    }
}
