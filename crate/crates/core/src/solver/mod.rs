//! Post-measurement observer axis.
//!
//! Entropy conservation restricts the final axis to the two level sets
//! `|<up_f|psi>|^2 = p` and `= 1 - p`, where `p` is the up-probability along
//! the initial axis. On those curves the solver looks for minima of
//! `S_up = f(|<up_f|up_i>|^2)`, excluding the points where the overlap reaches
//! 0 or 1. A connected curve that passes through such a point is dropped as a
//! whole. If nothing remains, the observer is stuck at a death point.
//!
//! Two independent routes are provided: a lattice tracer with 1-D refinement
//! ([`solve_collapse`]) and closed-form circle geometry
//! ([`solve_collapse_closed_form`]). [`solve`] runs either or both.

mod closed_form;
mod contour;
mod refine;

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bloch::{
    axes_up_overlap, axis_to_bloch, canonicalize_axis, raw_bloch, up_overlap_prob, Axis, BlochVector, SpinState,
};
use crate::entropy::{entropy_of, Entropy};
use crate::error::{Error, Result};

pub use closed_form::solve_collapse_closed_form;
pub use contour::{trace_level_sets, CurveVertex, LevelSetCurve};

use contour::{raw_overlap, Field};

/// Maximum angle between grid and closed-form axes for them to agree, radians.
pub const AXIS_AGREEMENT_TOL: f64 = 1e-4;
/// Maximum `S_up` difference for the two routes to agree, nats.
pub const S_UP_AGREEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Grid,
    #[serde(alias = "closed_form")]
    Closed,
    Both,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Method::Grid),
            "closed" | "closed_form" => Ok(Method::Closed),
            "both" => Ok(Method::Both),
            _ => Err(Error::Domain(format!("unknown method `{s}`, expected grid, closed or both"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Lattice samples per chart dimension.
    pub grid_n: usize,
    /// Up-probabilities within this distance of 0 or 1 count as eigenstates.
    pub eps_trivial: f64,
    /// Overlaps within this distance of 0 or 1 count as zero-entropy points.
    pub eps_z: f64,
    /// Arc-length tolerance of the refinement along a curve, radians.
    pub refine_tol: f64,
    pub method: Method,
    /// Stitch arcs that meet across the `phi = 0 / pi` seam of the chart.
    pub identify_boundary: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid_n: 1024,
            eps_trivial: 1e-9,
            eps_z: 1e-6,
            refine_tol: 1e-7,
            method: Method::Both,
            identify_boundary: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 64 {
            return Err(Error::Domain(format!(
                "grid_n must be at least 64, got {}",
                self.grid_n
            )));
        }
        for (name, v) in [
            ("eps_trivial", self.eps_trivial),
            ("eps_z", self.eps_z),
            ("refine_tol", self.refine_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn is_zero_entropy(&self, overlap: f64) -> bool {
        overlap <= self.eps_z || overlap >= 1.0 - self.eps_z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Normal,
    DeathPoint,
    Trivial,
}

/// A refined overlap extremum (or clipped-arc endpoint) on a level set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub axis: Axis,
    /// `|<up_f|up_i>|^2` for the canonical `axis`.
    pub overlap: f64,
    pub s_up: f64,
    pub component_id: usize,
    pub is_boundary: bool,
    /// On a kept component, a local minimum of `S_up` along it, and not
    /// itself a zero-entropy point.
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseSolution {
    pub status: Status,
    pub axis_i: Axis,
    pub axis_f: Axis,
    pub s_i: Entropy,
    pub s_f: Entropy,
    pub s_up: Entropy,
    pub candidates: Vec<Candidate>,
    pub curves: Vec<LevelSetCurve>,
}

impl CollapseSolution {
    fn stationary(status: Status, i: &Axis, s: &SpinState, candidates: Vec<Candidate>, curves: Vec<LevelSetCurve>) -> Self {
        let s_i = Entropy::new(entropy_of(up_overlap_prob(i, s))).unwrap_or(Entropy::MAX);
        CollapseSolution {
            status,
            axis_i: *i,
            axis_f: *i,
            s_i,
            s_f: s_i,
            s_up: Entropy::ZERO,
            candidates,
            curves,
        }
    }

    fn normal(i: &Axis, s: &SpinState, axis_f: Axis, candidates: Vec<Candidate>, curves: Vec<LevelSetCurve>) -> Self {
        let ent = |p: f64| Entropy::new(entropy_of(p)).unwrap_or(Entropy::MAX);
        CollapseSolution {
            status: Status::Normal,
            axis_i: *i,
            axis_f,
            s_i: ent(up_overlap_prob(i, s)),
            s_f: ent(up_overlap_prob(&axis_f, s)),
            s_up: ent(axes_up_overlap(&axis_f, i)),
            candidates,
            curves,
        }
    }
}

/// The two admissible values `(p_same, p_flip)` of `|<up_f|psi>|^2`.
pub fn constraint_levels(i: &Axis, s: &SpinState) -> (f64, f64) {
    let p = up_overlap_prob(i, s);
    (p, 1.0 - p)
}

fn is_trivial(p_same: f64, cfg: &SolverConfig) -> bool {
    p_same <= cfg.eps_trivial || p_same >= 1.0 - cfg.eps_trivial
}

/// Orders admissible candidates: smallest `S_up`, then smallest theta, then phi.
fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    if (a.s_up - b.s_up).abs() > 1e-12 {
        return a.s_up.total_cmp(&b.s_up);
    }
    a.axis
        .theta()
        .total_cmp(&b.axis.theta())
        .then(a.axis.phi().total_cmp(&b.axis.phi()))
}

/// Picks the final axis: interior extrema first, clipped-arc endpoints only
/// when no interior extremum survives.
fn select(candidates: &[Candidate]) -> Option<&Candidate> {
    let best = |boundary: bool| {
        candidates
            .iter()
            .filter(|c| c.admissible && c.is_boundary == boundary)
            .min_by(|a, b| candidate_order(a, b))
    };
    best(false).or_else(|| best(true))
}

fn make_candidate(
    theta: f64,
    phi: f64,
    i: &Axis,
    component_id: usize,
    is_boundary: bool,
    rejected: bool,
    cfg: &SolverConfig,
) -> Candidate {
    let axis = canonicalize_axis(theta, phi).expect("refined angles are finite");
    let overlap = axes_up_overlap(&axis, i);
    Candidate {
        axis,
        overlap,
        s_up: entropy_of(overlap),
        component_id,
        is_boundary,
        admissible: !rejected && !cfg.is_zero_entropy(overlap),
    }
}

/// Inside the half-open chart; the `phi = pi` and `theta = pi` edges belong
/// to the antipodal copies.
fn in_chart(theta: f64, phi: f64) -> bool {
    theta < PI && phi < PI
}

struct RawPoint {
    theta: f64,
    phi: f64,
    overlap: f64,
    is_boundary: bool,
    entropy_min: bool,
}

/// Refined overlap extrema and boundary endpoints of one curve.
fn curve_extrema(curve: &LevelSetCurve, field: &Field, n_i: &BlochVector, cfg: &SolverConfig) -> Vec<RawPoint> {
    let level = curve.level;
    let overlap_at = |t: f64, p: f64| raw_overlap(t, p, n_i);
    let mut out: Vec<RawPoint> = Vec::new();
    let push = |pt: RawPoint, out: &mut Vec<RawPoint>| {
        let v = raw_bloch(pt.theta, pt.phi);
        let dup = out
            .iter()
            .any(|q| q.is_boundary == pt.is_boundary && raw_bloch(q.theta, q.phi).sub(&v).norm() < 1e-7);
        if !dup {
            out.push(pt);
        }
    };

    for chain in &curve.chains {
        let pts = &curve.vertices[chain.range.clone()];
        let len = pts.len();
        if len < 2 {
            continue;
        }
        let ov: Vec<f64> = pts.iter().map(|v| overlap_at(v.theta, v.phi)).collect();
        let prev = |k: usize| {
            if k > 0 {
                Some(k - 1)
            } else if chain.closed {
                Some(len - 1)
            } else {
                None
            }
        };
        let next = |k: usize| {
            if k + 1 < len {
                Some(k + 1)
            } else if chain.closed {
                Some(0)
            } else {
                None
            }
        };
        let walk = |from: usize, steps: usize, forward: bool| {
            let mut cur = from;
            let mut out = Vec::new();
            for _ in 0..steps {
                let nxt = if forward { next(cur) } else { prev(cur) };
                match nxt {
                    Some(q) if q != from => {
                        out.push(q);
                        cur = q;
                    }
                    _ => break,
                }
            }
            out
        };

        for k in 0..len {
            let (p, n) = (prev(k), next(k));
            if p.is_none() || n.is_none() {
                continue;
            }
            let (p, n) = (p.unwrap(), n.unwrap());
            let is_max = ov[k] >= ov[p] && ov[k] >= ov[n];
            let is_min = ov[k] <= ov[p] && ov[k] <= ov[n];
            for (want, sign) in [(is_max, -1.0), (is_min, 1.0)] {
                if !want {
                    continue;
                }
                // Start with two vertices on either side and widen whichever
                // end the optimum sticks to.
                let (mut back, mut ahead) = (2usize, 2usize);
                let found = loop {
                    let before = walk(k, back, false);
                    let after = walk(k, ahead, true);
                    if before.iter().any(|q| after.contains(q)) {
                        break None;
                    }
                    let idx: Vec<usize> = before.iter().rev().copied().chain([k]).chain(after.iter().copied()).collect();
                    let poly: Vec<(f64, f64)> = idx.iter().map(|&q| (pts[q].theta, pts[q].phi)).collect();
                    let mut cum = vec![0.0];
                    for w in poly.windows(2) {
                        let d = (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
                        cum.push(cum.last().unwrap() + d);
                    }
                    let total = *cum.last().unwrap();
                    if total <= 0.0 {
                        break None;
                    }
                    let at = |t: f64| {
                        let seg = cum.windows(2).position(|w| t <= w[1]).unwrap_or(poly.len() - 2);
                        let span = cum[seg + 1] - cum[seg];
                        let u = if span > 0.0 { (t - cum[seg]) / span } else { 0.0 };
                        let (a, b) = (poly[seg], poly[seg + 1]);
                        refine::project(field, level, a.0 + u * (b.0 - a.0), a.1 + u * (b.1 - a.1))
                    };
                    let t = refine::golden_section_min(
                        |t| {
                            let (a, b) = at(t);
                            sign * overlap_at(a, b)
                        },
                        0.0,
                        total,
                        cfg.refine_tol,
                    );
                    let margin = 4.0 * cfg.refine_tol;
                    let low = t <= margin;
                    let high = t >= total - margin;
                    if !low && !high {
                        break Some(at(t));
                    }
                    // Pinned where the chain itself ends: no interior extremum.
                    if (low && before.len() < back) || (high && after.len() < ahead) || back + ahead >= len {
                        break None;
                    }
                    if low {
                        back *= 2;
                    }
                    if high {
                        ahead *= 2;
                    }
                };
                if let Some((theta, phi)) = found {
                    let overlap = overlap_at(theta, phi);
                    // S_up = f(overlap) has a local minimum where the overlap
                    // is extremal on the far side of 1/2.
                    let entropy_min = if sign < 0.0 { overlap > 0.5 } else { overlap < 0.5 };
                    push(
                        RawPoint {
                            theta,
                            phi,
                            overlap,
                            is_boundary: false,
                            entropy_min,
                        },
                        &mut out,
                    );
                }
            }
        }

        if !chain.closed {
            for v in [&pts[0], &pts[len - 1]] {
                if let Some(edge) = v.edge {
                    let (theta, phi) = refine::boundary_root(field, level, edge);
                    push(
                        RawPoint {
                            theta,
                            phi,
                            overlap: overlap_at(theta, phi),
                            is_boundary: true,
                            entropy_min: true,
                        },
                        &mut out,
                    );
                }
            }
        }
    }
    out
}

/// Joins components whose clipped ends meet under the antipodal
/// identification `(theta, pi) ~ (pi - theta, 0)`.
fn stitch_across_seam(curves: Vec<LevelSetCurve>, tol: f64) -> Vec<LevelSetCurve> {
    let ends: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|c| {
            c.vertices
                .iter()
                .filter(|v| v.is_boundary)
                .map(|v| (v.theta, v.phi))
                .collect()
        })
        .collect();
    let matches = |a: &(f64, f64), b: &(f64, f64)| {
        let seam = (a.1 == PI && b.1 == 0.0) || (a.1 == 0.0 && b.1 == PI);
        seam && (a.0 - (PI - b.0)).abs() <= tol
    };
    let mut group: Vec<usize> = (0..curves.len()).collect();
    for a in 0..curves.len() {
        for b in (a + 1)..curves.len() {
            if ends[a].iter().any(|x| ends[b].iter().any(|y| matches(x, y))) {
                let (ga, gb) = (group[a], group[b]);
                let (lo, hi) = (ga.min(gb), ga.max(gb));
                for g in group.iter_mut() {
                    if *g == hi {
                        *g = lo;
                    }
                }
            }
        }
    }
    let mut merged: Vec<LevelSetCurve> = Vec::new();
    let mut slot_of = std::collections::HashMap::new();
    for (idx, curve) in curves.into_iter().enumerate() {
        match slot_of.get(&group[idx]) {
            Some(&slot) => {
                let target: &mut LevelSetCurve = &mut merged[slot];
                let offset = target.vertices.len();
                target.vertices.extend(curve.vertices);
                target.chains.extend(curve.chains.into_iter().map(|mut ch| {
                    ch.range = ch.range.start + offset..ch.range.end + offset;
                    ch
                }));
                target.touches_boundary |= curve.touches_boundary;
            }
            None => {
                slot_of.insert(group[idx], merged.len());
                let mut curve = curve;
                curve.component_id = merged.len();
                merged.push(curve);
            }
        }
    }
    merged
}

/// Lattice route: trace both constraint level sets, discard components that
/// pass through a zero-entropy point, and refine the surviving extrema.
pub fn solve_collapse(i: &Axis, s: &SpinState, cfg: &SolverConfig) -> Result<CollapseSolution> {
    cfg.validate()?;
    let (p_same, p_flip) = constraint_levels(i, s);
    if is_trivial(p_same, cfg) {
        return Ok(CollapseSolution::stationary(Status::Trivial, i, s, Vec::new(), Vec::new()));
    }

    let mut curves = trace_level_sets(s, &[p_same, p_flip], cfg)?;
    if cfg.identify_boundary {
        let h = PI / (cfg.grid_n - 1) as f64;
        curves = stitch_across_seam(curves, 2.0 * h);
    }
    if curves.is_empty() {
        return Err(Error::DegenerateGrid(format!(
            "no crossings of levels {p_same} / {p_flip} on a {n}x{n} lattice (state {s}, axis {i})",
            n = cfg.grid_n
        )));
    }

    let field = Field::new(s);
    let n_i = axis_to_bloch(i);
    let mut candidates = Vec::new();
    for curve in &mut curves {
        curve.annotate(i);
        let found = curve_extrema(curve, &field, &n_i, cfg);
        let zero_vertex = curve
            .vertices
            .iter()
            .any(|v| in_chart(v.theta, v.phi) && v.overlap.is_some_and(|o| cfg.is_zero_entropy(o)));
        let zero_refined = found
            .iter()
            .any(|r| in_chart(r.theta, r.phi) && cfg.is_zero_entropy(r.overlap));
        curve.contains_zero_entropy = zero_vertex || zero_refined;
        for r in &found {
            candidates.push(make_candidate(
                r.theta,
                r.phi,
                i,
                curve.component_id,
                r.is_boundary,
                curve.contains_zero_entropy || !r.entropy_min,
                cfg,
            ));
        }
    }

    log::debug!(
        "grid solve: {} components, {} candidates",
        curves.len(),
        candidates.len()
    );
    match select(&candidates) {
        Some(best) => {
            let axis_f = best.axis;
            Ok(CollapseSolution::normal(i, s, axis_f, candidates, curves))
        }
        None => Ok(CollapseSolution::stationary(Status::DeathPoint, i, s, candidates, curves)),
    }
}

/// Comparison of the two solver routes on one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agreement {
    pub agree: bool,
    pub status_match: bool,
    /// Angle between the two final axes (as lines), radians.
    pub axis_distance: f64,
    pub s_up_diff: f64,
}

impl Agreement {
    pub fn compare(a: &CollapseSolution, b: &CollapseSolution) -> Self {
        let status_match = a.status == b.status;
        let axis_distance = axis_distance(&a.axis_f, &b.axis_f);
        let s_up_diff = (a.s_up.value() - b.s_up.value()).abs();
        Agreement {
            agree: status_match && axis_distance <= AXIS_AGREEMENT_TOL && s_up_diff <= S_UP_AGREEMENT_TOL,
            status_match,
            axis_distance,
            s_up_diff,
        }
    }
}

/// Angle between two axes regarded as lines through the origin.
pub fn axis_distance(a: &Axis, b: &Axis) -> f64 {
    axis_to_bloch(a).line_angle(&axis_to_bloch(b))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    /// The lattice solution, or the closed-form one for `Method::Closed`.
    pub solution: CollapseSolution,
    pub closed_form: Option<CollapseSolution>,
    pub agreement: Option<Agreement>,
}

/// Runs the route(s) selected by `cfg.method`.
pub fn solve(i: &Axis, s: &SpinState, cfg: &SolverConfig) -> Result<SolveReport> {
    match cfg.method {
        Method::Grid => Ok(SolveReport {
            solution: solve_collapse(i, s, cfg)?,
            closed_form: None,
            agreement: None,
        }),
        Method::Closed => Ok(SolveReport {
            solution: solve_collapse_closed_form(i, s, cfg)?,
            closed_form: None,
            agreement: None,
        }),
        Method::Both => {
            let grid = solve_collapse(i, s, cfg)?;
            let closed = solve_collapse_closed_form(i, s, cfg)?;
            let agreement = Agreement::compare(&grid, &closed);
            Ok(SolveReport {
                solution: grid,
                closed_form: Some(closed),
                agreement: Some(agreement),
            })
        }
    }
}
