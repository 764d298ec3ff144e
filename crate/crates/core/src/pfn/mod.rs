//! P functions: boolean outcome policies over projected angles and history.
//!
//! An axis `(theta, phi)` is projected to bits `xi = [cos theta > 0]` and
//! `eta = [cos phi > 0]`. A P function maps those bits, together with the
//! bits and outcomes of up to `n` previous measurements, to the outcome
//! (`1` is up, `0` is down).

mod expr;
mod table;

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bloch::{Axis, Outcome};
use crate::error::{Error, Result};

pub use expr::{and, not, or, parse_expr, var, xor, BoolExpr, Var};
pub use table::{arity, to_cnf, to_dnf, to_truth_table, TruthTable};

/// Largest supported memory depth; the table then has 2^14 rows.
pub const MAX_MEMORY_DEPTH: usize = 4;

/// `sigma(x) = 1` iff `x > 0`.
pub fn step(x: f64) -> bool {
    x > 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoolProjection {
    pub xi: bool,
    pub eta: bool,
}

/// Bits of the chart angles. On `[0, pi)` the sign of the cosine is read
/// off the angle itself, so `pi/2` maps to 0 even though `cos` of the
/// rounded `pi/2` is a tiny positive number.
fn angle_bit(angle: f64) -> bool {
    !(FRAC_PI_2..=3.0 * FRAC_PI_2).contains(&angle)
}

pub fn project_angles(theta: f64, phi: f64) -> BoolProjection {
    BoolProjection {
        xi: angle_bit(theta.rem_euclid(2.0 * PI)),
        eta: angle_bit(phi.rem_euclid(2.0 * PI)),
    }
}

pub fn project_axis(a: &Axis) -> BoolProjection {
    project_angles(a.theta(), a.phi())
}

/// One past measurement as seen by a P function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub projection: BoolProjection,
    pub outcome: Outcome,
}

impl HistoryEntry {
    pub fn new(xi: bool, eta: bool, outcome: Outcome) -> Self {
        HistoryEntry {
            projection: BoolProjection { xi, eta },
            outcome,
        }
    }
}

fn evaluate(e: &BoolExpr, current: BoolProjection, history: &[HistoryEntry]) -> bool {
    e.eval_with(&|v| match v {
        Var::X => current.xi,
        Var::Y => current.eta,
        Var::Xk(k) => history[k - 1].projection.xi,
        Var::Yk(k) => history[k - 1].projection.eta,
        Var::Sk(k) => history[k - 1].outcome.bit(),
    })
}

/// Outcome chosen by `e` for final axis `axis_f`. `history[0]` is the most
/// recent previous measurement.
pub fn decide_outcome(e: &BoolExpr, axis_f: &Axis, history: &[HistoryEntry]) -> Result<Outcome> {
    let needed = e.required_depth();
    if history.len() < needed {
        return Err(Error::History {
            needed,
            available: history.len(),
        });
    }
    Ok(Outcome::from_bit(evaluate(e, project_axis(axis_f), history)))
}

/// Probability measure on the chart used for geometric probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Uniform in `(theta, phi)`.
    #[default]
    ChartUniform,
    /// Uniform in surface area, `sin(theta) dtheta dphi`.
    SphereArea,
}

impl Measure {
    /// Mass of `{xi = bit}` under the `theta` marginal.
    fn theta_mass(self, bit: bool) -> f64 {
        let (lo, hi) = if bit { (0.0, FRAC_PI_2) } else { (FRAC_PI_2, PI) };
        match self {
            Measure::ChartUniform => (hi - lo) / PI,
            // (cos lo - cos hi) / 2 with the cosines of 0, pi/2, pi taken exactly.
            Measure::SphereArea => 0.5 * (exact_cos(lo) - exact_cos(hi)),
        }
    }

    /// Mass of either `eta` half; `phi` is uniform under both measures.
    fn phi_mass(self) -> f64 {
        0.5
    }

    fn sample_angles(self, rng: &mut impl Rng) -> (f64, f64) {
        let theta = match self {
            Measure::ChartUniform => rng.random::<f64>() * PI,
            Measure::SphereArea => (1.0 - 2.0 * rng.random::<f64>()).acos(),
        };
        (theta, rng.random::<f64>() * PI)
    }
}

fn exact_cos(a: f64) -> f64 {
    if a == 0.0 {
        1.0
    } else if a == PI {
        -1.0
    } else {
        0.0
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chart" | "chart_uniform" => Ok(Measure::ChartUniform),
            "sphere" | "sphere_area" => Ok(Measure::SphereArea),
            _ => Err(Error::Domain(format!("unknown measure `{s}`"))),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::ChartUniform => "chart_uniform",
            Measure::SphereArea => "sphere_area",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityMethod {
    Analytic,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityEstimate {
    pub probability: f64,
    pub measure: Measure,
    pub method: ProbabilityMethod,
    /// Binomial standard error, Monte Carlo only.
    pub std_error: Option<f64>,
}

/// Probability that `e` selects the up outcome for an axis drawn from
/// `measure`. Monte Carlo draws history bits uniformly.
pub fn outcome_probability(e: &BoolExpr, measure: Measure, method: ProbabilityMethod) -> Result<ProbabilityEstimate> {
    let depth = e.required_depth();
    let (probability, std_error) = match method {
        ProbabilityMethod::Analytic => {
            if depth > 0 {
                return Err(Error::Unsupported(format!(
                    "analytic probability needs a memoryless expression, got depth {depth}"
                )));
            }
            let p = [false, true]
                .iter()
                .flat_map(|&xi| [false, true].map(|eta| BoolProjection { xi, eta }))
                .filter(|&proj| evaluate(e, proj, &[]))
                .map(|proj| measure.theta_mass(proj.xi) * measure.phi_mass())
                .sum::<f64>();
            (p, None)
        }
        ProbabilityMethod::MonteCarlo { samples, seed } => {
            if samples < 1 {
                return Err(Error::Domain("Monte Carlo needs at least one sample".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut history = vec![HistoryEntry::new(false, false, Outcome::Down); depth];
            let mut ups = 0u64;
            for _ in 0..samples {
                let (theta, phi) = measure.sample_angles(&mut rng);
                for h in history.iter_mut() {
                    *h = HistoryEntry::new(rng.random(), rng.random(), Outcome::from_bit(rng.random()));
                }
                if evaluate(e, project_angles(theta, phi), &history) {
                    ups += 1;
                }
            }
            let p = ups as f64 / samples as f64;
            (p, Some((p * (1.0 - p) / samples as f64).sqrt()))
        }
    };
    Ok(ProbabilityEstimate {
        probability,
        measure,
        method,
        std_error,
    })
}
