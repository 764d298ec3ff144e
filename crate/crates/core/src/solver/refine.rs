//! One-dimensional refinement along a traced level set.

use super::contour::{BoundaryEdge, Field};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Moves `(theta, phi)` onto `field = level` along the local gradient.
pub(crate) fn project(field: &Field, level: f64, theta: f64, phi: f64) -> (f64, f64) {
    let (gt, gp) = field.gradient(theta, phi);
    let norm = gt.hypot(gp);
    if norm < 1e-14 {
        return (theta, phi);
    }
    let (dt, dp) = (gt / norm, gp / norm);
    let mut s = 0.0;
    for _ in 0..50 {
        let (t, p) = (theta + s * dt, phi + s * dp);
        let r = field.value(t, p) - level;
        if r.abs() < 1e-15 {
            break;
        }
        let (gt, gp) = field.gradient(t, p);
        let slope = gt * dt + gp * dp;
        if slope.abs() < 1e-14 {
            break;
        }
        let step = (r / slope).clamp(-0.1, 0.1);
        s -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    (theta + s * dt, phi + s * dp)
}

/// Golden-section minimization of `f` over `[a, b]`. Returns the abscissa.
pub(crate) fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while (b - a) > tol && iterations < 200 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        iterations += 1;
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Exact crossing of `field = level` on a chart edge, by bisection between
/// the two lattice samples that bracket it.
pub(crate) fn boundary_root(field: &Field, level: f64, edge: BoundaryEdge) -> (f64, f64) {
    let eval = |x: f64| match edge {
        BoundaryEdge::PhiFixed { phi, .. } => field.value(x, phi) - level,
        BoundaryEdge::ThetaFixed { theta, .. } => field.value(theta, x) - level,
    };
    let (mut lo, mut hi) = match edge {
        BoundaryEdge::PhiFixed { lo, hi, .. } | BoundaryEdge::ThetaFixed { lo, hi, .. } => (lo, hi),
    };
    let mut f_lo = eval(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = eval(mid);
        if f_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    match edge {
        BoundaryEdge::PhiFixed { phi, .. } => (x, phi),
        BoundaryEdge::ThetaFixed { theta, .. } => (theta, x),
    }
}
