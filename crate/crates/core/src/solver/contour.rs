//! Level-set extraction of the up-probability field over the chart.
//!
//! The field `p(theta, phi) = (1 + n(theta, phi) . m) / 2` is sampled on an
//! `N x N` lattice covering the closed square `[0, pi] x [0, pi]`, so curves
//! clipped by the chart reach its edges exactly. Crossings are linearly
//! interpolated on lattice edges and stitched cell by cell into chains; chains
//! whose crossed cells touch (8-connectivity) form one component.
//!
//! Lattice layout: vertex `(j, k)` sits at `theta = j h`, `phi = k h` with
//! `h = pi / (N - 1)`. Cell `(j, k)` has corners
//!
//! ```text
//!   a (j, k) ---- top ---- b (j, k+1)
//!      |                      |
//!    left                   right
//!      |                      |
//!   d (j+1, k) -- bottom -- c (j+1, k+1)
//! ```

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::Range;

use serde::Serialize;

use crate::bloch::{raw_bloch, state_to_bloch, Axis, BlochVector, SpinState};
use crate::entropy::entropy_of;
use crate::error::{Error, Result};

use super::SolverConfig;

/// Which chart edge a boundary vertex lies on, with the lattice interval that
/// brackets the exact crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum BoundaryEdge {
    /// `phi` fixed at 0 or pi; the crossing lies between two theta samples.
    PhiFixed { phi: f64, lo: f64, hi: f64 },
    /// `theta` fixed at 0 or pi; the crossing lies between two phi samples.
    ThetaFixed { theta: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveVertex {
    pub theta: f64,
    pub phi: f64,
    /// `|<up_f|up_i>|^2` at this vertex, using the raw angles.
    pub overlap: Option<f64>,
    pub s_up: Option<f64>,
    pub is_boundary: bool,
    #[serde(skip)]
    pub(crate) edge: Option<BoundaryEdge>,
}

/// One connected piece of a constraint level set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetCurve {
    pub level: f64,
    pub component_id: usize,
    pub vertices: Vec<CurveVertex>,
    pub touches_boundary: bool,
    pub contains_zero_entropy: bool,
    /// Index ranges of the individual chains making up `vertices`.
    #[serde(skip)]
    pub(crate) chains: Vec<Chain>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Chain {
    pub range: Range<usize>,
    pub closed: bool,
}

impl LevelSetCurve {
    /// Fills in per-vertex overlap and `S_up` against the initial axis.
    pub fn annotate(&mut self, initial: &Axis) {
        let n_i = crate::bloch::axis_to_bloch(initial);
        for v in &mut self.vertices {
            let ov = raw_overlap(v.theta, v.phi, &n_i);
            v.overlap = Some(ov);
            v.s_up = Some(entropy_of(ov));
        }
    }
}

/// `(1 + n(theta, phi) . n_i) / 2`.
pub(crate) fn raw_overlap(theta: f64, phi: f64, n_i: &BlochVector) -> f64 {
    (0.5 * (1.0 + raw_bloch(theta, phi).dot(n_i))).clamp(0.0, 1.0)
}

/// The up-probability field and its gradient for a fixed state.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Field {
    pub m: BlochVector,
}

impl Field {
    pub fn new(s: &SpinState) -> Self {
        Field {
            m: state_to_bloch(s),
        }
    }

    pub fn value(&self, theta: f64, phi: f64) -> f64 {
        0.5 * (1.0 + raw_bloch(theta, phi).dot(&self.m))
    }

    pub fn gradient(&self, theta: f64, phi: f64) -> (f64, f64) {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let m = &self.m;
        let d_theta = 0.5 * (ct * (cp * m.x + sp * m.y) - st * m.z);
        let d_phi = 0.5 * st * (cp * m.y - sp * m.x);
        (d_theta, d_phi)
    }
}

pub(crate) struct Lattice {
    pub n: usize,
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
}

impl Lattice {
    pub fn sample(field: &Field, n: usize) -> Self {
        let h = PI / (n - 1) as f64;
        let coords: Vec<f64> = (0..n)
            .map(|j| if j == n - 1 { PI } else { j as f64 * h })
            .collect();
        let trig: Vec<(f64, f64)> = coords.iter().map(|c| c.sin_cos()).collect();
        let m = field.m;
        let mut values = Vec::with_capacity(n * n);
        for (j, &(st, ct)) in trig.iter().enumerate() {
            // Both poles are single points; keep their rows exactly constant.
            let st = if j == 0 || j == n - 1 { 0.0 } else { st };
            let z = ct * m.z;
            for &(sp, cp) in &trig {
                values.push(0.5 * (1.0 + st * (cp * m.x + sp * m.y) + z));
            }
        }
        Lattice { n, coords, values }
    }

    fn value(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.n + k]
    }

    fn h_edge(&self, j: usize, k: usize) -> u32 {
        (j * (self.n - 1) + k) as u32
    }

    fn v_edge(&self, j: usize, k: usize) -> u32 {
        (self.n * (self.n - 1) + j * self.n + k) as u32
    }

    /// Lattice endpoints `((j0, k0), (j1, k1))` of an edge id.
    fn edge_ends(&self, id: u32) -> ((usize, usize), (usize, usize)) {
        let n = self.n;
        let id = id as usize;
        let h_count = n * (n - 1);
        if id < h_count {
            let (j, k) = (id / (n - 1), id % (n - 1));
            ((j, k), (j, k + 1))
        } else {
            let r = id - h_count;
            let (j, k) = (r / n, r % n);
            ((j, k), (j + 1, k))
        }
    }

    fn crossing(&self, id: u32, level: f64) -> CurveVertex {
        let ((j0, k0), (j1, k1)) = self.edge_ends(id);
        let (f0, f1) = (self.value(j0, k0), self.value(j1, k1));
        let t = ((level - f0) / (f1 - f0)).clamp(0.0, 1.0);
        let (t0, p0) = (self.coords[j0], self.coords[k0]);
        let (t1, p1) = (self.coords[j1], self.coords[k1]);
        let theta = t0 + t * (t1 - t0);
        let phi = p0 + t * (p1 - p0);
        let last = self.n - 1;
        let edge = if j0 == j1 && (j0 == 0 || j0 == last) {
            Some(BoundaryEdge::ThetaFixed {
                theta: t0,
                lo: p0,
                hi: p1,
            })
        } else if k0 == k1 && (k0 == 0 || k0 == last) {
            Some(BoundaryEdge::PhiFixed {
                phi: p0,
                lo: t0,
                hi: t1,
            })
        } else {
            None
        };
        CurveVertex {
            theta,
            phi,
            overlap: None,
            s_up: None,
            is_boundary: edge.is_some(),
            edge,
        }
    }
}

struct RawChain {
    nodes: Vec<u32>,
    cells: Vec<u32>,
    closed: bool,
}

/// Marching squares for one level; returns chains of crossed lattice edges.
fn march(lattice: &Lattice, level: f64) -> Vec<RawChain> {
    let n = lattice.n;
    let inside = |j: usize, k: usize| lattice.value(j, k) >= level;

    // node -> up to two (neighbor, cell) links
    let mut adjacency: HashMap<u32, [Option<(u32, u32)>; 2]> = HashMap::new();
    let mut link = |a: u32, b: u32, cell: u32| {
        for (from, to) in [(a, b), (b, a)] {
            let slot = adjacency.entry(from).or_insert([None, None]);
            if slot[0].is_none() {
                slot[0] = Some((to, cell));
            } else {
                slot[1] = Some((to, cell));
            }
        }
    };

    for j in 0..n - 1 {
        for k in 0..n - 1 {
            let a = inside(j, k);
            let b = inside(j, k + 1);
            let c = inside(j + 1, k + 1);
            let d = inside(j + 1, k);
            if a == b && b == c && c == d {
                continue;
            }
            let cell = (j * (n - 1) + k) as u32;
            let top = lattice.h_edge(j, k);
            let bottom = lattice.h_edge(j + 1, k);
            let left = lattice.v_edge(j, k);
            let right = lattice.v_edge(j, k + 1);
            let crossed: Vec<u32> = [(a != b, top), (b != c, right), (d != c, bottom), (a != d, left)]
                .into_iter()
                .filter_map(|(x, e)| x.then_some(e))
                .collect();
            if crossed.len() == 2 {
                link(crossed[0], crossed[1], cell);
                continue;
            }
            // Saddle: resolve with the cell-centre average.
            let centre = 0.25
                * (lattice.value(j, k)
                    + lattice.value(j, k + 1)
                    + lattice.value(j + 1, k + 1)
                    + lattice.value(j + 1, k));
            let centre_inside = centre >= level;
            // `a` and `c` share a side; separate whichever pair is cut off.
            let cut_b_and_d = a == centre_inside;
            if cut_b_and_d {
                link(top, right, cell);
                link(left, bottom, cell);
            } else {
                link(top, left, cell);
                link(right, bottom, cell);
            }
        }
    }

    let degree = |slot: &[Option<(u32, u32)>; 2]| slot.iter().flatten().count();
    let mut starts: Vec<u32> = adjacency
        .iter()
        .filter(|(_, s)| degree(s) == 1)
        .map(|(&id, _)| id)
        .collect();
    starts.sort_unstable();
    let mut rest: Vec<u32> = adjacency.keys().copied().collect();
    rest.sort_unstable();

    let mut visited: HashMap<u32, bool> = HashMap::with_capacity(adjacency.len());
    let mut chains = Vec::new();
    for start in starts.into_iter().chain(rest) {
        if visited.contains_key(&start) {
            continue;
        }
        let mut nodes = vec![start];
        let mut cells = Vec::new();
        visited.insert(start, true);
        let mut prev: Option<u32> = None;
        let mut current = start;
        let mut closed = false;
        loop {
            let slot = adjacency[&current];
            let next = slot
                .iter()
                .flatten()
                .find(|(to, _)| Some(*to) != prev && !visited.contains_key(to))
                .copied();
            match next {
                Some((to, cell)) => {
                    cells.push(cell);
                    nodes.push(to);
                    visited.insert(to, true);
                    prev = Some(current);
                    current = to;
                }
                None => {
                    // A loop closes back onto its start.
                    if nodes.len() > 2 {
                        if let Some((_, cell)) = slot.iter().flatten().find(|(to, _)| *to == start) {
                            cells.push(*cell);
                            closed = true;
                        }
                    }
                    break;
                }
            }
        }
        chains.push(RawChain {
            nodes,
            cells,
            closed,
        });
    }
    chains
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        parent[hi] = lo;
    }
}

/// Groups chains whose crossed cells are 8-adjacent. Returned groups are
/// ordered by their first chain.
fn group_chains(chains: &[RawChain], n: usize) -> Vec<Vec<usize>> {
    let cols = (n - 1) as i64;
    let mut owner: HashMap<u32, Vec<usize>> = HashMap::new();
    for (ci, ch) in chains.iter().enumerate() {
        for &cell in &ch.cells {
            let e = owner.entry(cell).or_default();
            if !e.contains(&ci) {
                e.push(ci);
            }
        }
    }
    let mut parent: Vec<usize> = (0..chains.len()).collect();
    for (ci, ch) in chains.iter().enumerate() {
        for &cell in &ch.cells {
            let (r, c) = ((cell as i64) / cols, (cell as i64) % cols);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr < 0 || cc < 0 || rr >= cols || cc >= cols {
                        continue;
                    }
                    if let Some(others) = owner.get(&((rr * cols + cc) as u32)) {
                        for &o in others {
                            if o != ci {
                                union(&mut parent, ci, o);
                            }
                        }
                    }
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index_of_root: HashMap<usize, usize> = HashMap::new();
    for ci in 0..chains.len() {
        let root = find(&mut parent, ci);
        let gi = *index_of_root.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[gi].push(ci);
    }
    groups
}

/// Extracts the level sets `p(theta, phi) = level` of the up-probability of
/// `s` over the chart, one curve per connected component.
pub fn trace_level_sets(
    s: &SpinState,
    levels: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<LevelSetCurve>> {
    cfg.validate()?;
    for &level in levels {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Domain(format!(
                "level must lie strictly inside (0, 1), got {level}"
            )));
        }
    }
    let field = Field::new(s);
    let lattice = Lattice::sample(&field, cfg.grid_n);
    let mut curves = Vec::new();
    for &level in levels {
        let chains = march(&lattice, level);
        for group in group_chains(&chains, lattice.n) {
            let mut vertices = Vec::new();
            let mut ranges = Vec::new();
            for ci in group {
                let ch = &chains[ci];
                let start = vertices.len();
                vertices.extend(ch.nodes.iter().map(|&id| lattice.crossing(id, level)));
                ranges.push(Chain {
                    range: start..vertices.len(),
                    closed: ch.closed,
                });
            }
            let touches_boundary = vertices.iter().any(|v| v.is_boundary);
            curves.push(LevelSetCurve {
                level,
                component_id: curves.len(),
                vertices,
                touches_boundary,
                contains_zero_entropy: false,
                chains: ranges,
            });
        }
    }
    Ok(curves)
}
