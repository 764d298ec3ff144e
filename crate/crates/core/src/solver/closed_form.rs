//! Closed-form route via circle geometry on the Bloch sphere.
//!
//! With `m` the state's Bloch vector, `n_i` the initial axis and
//! `c = n_i . m`, the constraint levels are the circles `n . m = c` (through
//! `n_i`, the zero-entropy point) and `n . m = -c`. On the retained circle
//! the overlap `(1 + n . n_i) / 2` peaks at
//!
//! ```text
//! n* = -c m + sqrt(1 - c^2) u,   u = (n_i - c m) / |n_i - c m|
//! ```
//!
//! with value `1 - c^2`; its minimum is `-n_i` (overlap 0). The chart shows
//! the part of the circle with `y > 0`, which is a single arc. `S_up` has an
//! interior minimum on it only at a visible `n*` with `1 - c^2 > 1/2`;
//! otherwise the best end of the arc on the `y = 0` seam is used.

use crate::bloch::{axis_to_bloch, state_to_bloch, Axis, BlochVector, SpinState};
use crate::error::Result;

use super::{constraint_levels, is_trivial, make_candidate, select, CollapseSolution, SolverConfig, Status};

pub fn solve_collapse_closed_form(i: &Axis, s: &SpinState, cfg: &SolverConfig) -> Result<CollapseSolution> {
    cfg.validate()?;
    let (p_same, _) = constraint_levels(i, s);
    if is_trivial(p_same, cfg) {
        return Ok(CollapseSolution::stationary(Status::Trivial, i, s, Vec::new(), Vec::new()));
    }

    let m = state_to_bloch(s);
    let n_i = axis_to_bloch(i);
    let c = n_i.dot(&m).clamp(-1.0, 1.0);
    let radius = (1.0 - c * c).max(0.0).sqrt();

    // Highest point of the retained circle; below the seam it is invisible.
    let max_y = -c * m.y + radius * (1.0 - m.y * m.y).max(0.0).sqrt();
    if max_y < 0.0 {
        return Ok(CollapseSolution::stationary(Status::DeathPoint, i, s, Vec::new(), Vec::new()));
    }

    let u = n_i.sub(&m.scale(c));
    let u_norm = u.norm();
    if u_norm < 1e-15 {
        return Ok(CollapseSolution::stationary(Status::DeathPoint, i, s, Vec::new(), Vec::new()));
    }
    let peak = m.scale(-c).add(&u.scale(radius / u_norm));

    // Seam crossings of the retained circle: n = (cos a, 0, sin a), n . m = -c.
    let seam = seam_points(&m, c);
    let mut candidates = Vec::new();
    let peak_visible = peak.y > 0.0;
    if peak_visible {
        let a = Axis::from_bloch(peak);
        // The peak minimizes S_up only when its overlap exceeds 1/2.
        candidates.push(make_candidate(a.theta(), a.phi(), i, 0, false, c * c >= 0.5, cfg));
    }
    for e in &seam {
        let a = Axis::from_bloch(*e);
        candidates.push(make_candidate(a.theta(), a.phi(), i, 0, true, false, cfg));
    }

    // Zero-entropy points visible on the arc discard it. The seam end with
    // x < 0 sits on the excluded phi = pi edge.
    let overlap_raw = |n: &BlochVector| 0.5 * (1.0 + n.dot(&n_i));
    let mut visible = Vec::new();
    if peak_visible {
        visible.push(overlap_raw(&peak));
    }
    visible.extend(seam.iter().filter(|e| e.x > 0.0).map(overlap_raw));
    if visible.iter().any(|&o| cfg.is_zero_entropy(o)) {
        for cand in &mut candidates {
            cand.admissible = false;
        }
        return Ok(CollapseSolution::stationary(Status::DeathPoint, i, s, candidates, Vec::new()));
    }

    match select(&candidates) {
        Some(best) => {
            let axis_f = best.axis;
            Ok(CollapseSolution::normal(i, s, axis_f, candidates, Vec::new()))
        }
        None => Ok(CollapseSolution::stationary(Status::DeathPoint, i, s, candidates, Vec::new())),
    }
}

fn seam_points(m: &BlochVector, c: f64) -> Vec<BlochVector> {
    let r = m.x.hypot(m.z);
    if r < 1e-15 {
        return Vec::new();
    }
    let arg = -c / r;
    if arg.abs() > 1.0 {
        return Vec::new();
    }
    let base = m.z.atan2(m.x);
    let spread = arg.acos();
    [base - spread, base + spread]
        .into_iter()
        .map(|a| BlochVector::new(a.cos(), 0.0, a.sin()))
        .collect()
}
