//! Iterated measurement as a Mealy machine.
//!
//! The internal state is the observer axis. On each input state the solver
//! moves the axis (or reports that it cannot), and the P function picks the
//! outcome; the output is the eigenstate of the new axis for that outcome.
//! Once the solver reports a death point or a trivial configuration the
//! machine halts and echoes its input from then on.

use std::collections::VecDeque;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::bloch::{eigenstate_as_state, up_overlap_prob, Axis, Outcome, SpinState};
use crate::entropy::{entropy_of, Entropy};
use crate::error::{Error, Result};
use crate::pfn::{decide_outcome, project_axis, BoolExpr, HistoryEntry, MAX_MEMORY_DEPTH};
use crate::solver::{solve, SolverConfig, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    DeathPoint,
    Trivial,
    MaxSteps,
}

/// A replacement of the active P function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WorldEvent {
    /// Number of steps taken before the switch.
    pub after_step: usize,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub status: Status,
    pub axis_before: Axis,
    pub axis_after: Axis,
    pub outcome: Option<Outcome>,
    pub state_before: SpinState,
    pub state_after: SpinState,
    pub s_i: Entropy,
    pub s_up: Entropy,
    pub world_id: String,
}

#[derive(Serialize)]
struct TraceLine<'a> {
    step: usize,
    status: Status,
    theta_i: f64,
    phi_i: f64,
    theta_f: f64,
    phi_f: f64,
    outcome: Option<Outcome>,
    rho_before: f64,
    tau_before: f64,
    rho_after: f64,
    tau_after: f64,
    s_i: f64,
    s_up: f64,
    world_id: &'a str,
}

impl Serialize for StepRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        TraceLine {
            step: self.step,
            status: self.status,
            theta_i: self.axis_before.theta(),
            phi_i: self.axis_before.phi(),
            theta_f: self.axis_after.theta(),
            phi_f: self.axis_after.phi(),
            outcome: self.outcome,
            rho_before: self.state_before.rho(),
            tau_before: self.state_before.tau(),
            rho_after: self.state_after.rho(),
            tau_after: self.state_after.tau(),
            s_i: self.s_i.value(),
            s_up: self.s_up.value(),
            world_id: &self.world_id,
        }
        .serialize(serializer)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub records: Vec<StepRecord>,
    pub halted: bool,
    pub halt_reason: HaltReason,
    pub death_step: Option<usize>,
}

impl RunResult {
    /// One JSON object per record, newline-terminated.
    pub fn write_jsonl(&self, mut w: impl Write) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

/// `n` history entries drawn uniformly from a seeded generator.
pub fn random_history(n: usize, seed: u64) -> Vec<HistoryEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| HistoryEntry::new(rng.random(), rng.random(), Outcome::from_bit(rng.random())))
        .collect()
}

#[derive(Debug, Clone)]
pub struct ObserverAutomaton {
    axis: Axis,
    pfn: BoolExpr,
    memory_depth: usize,
    cfg: SolverConfig,
    /// Most recent first, at most `memory_depth` long.
    history: VecDeque<HistoryEntry>,
    world_id: String,
    halted: Option<HaltReason>,
    steps: usize,
    events: Vec<WorldEvent>,
}

fn check_pfn(pfn: &BoolExpr, memory_depth: usize) -> Result<()> {
    let needed = pfn.required_depth();
    if needed > memory_depth {
        return Err(Error::Arity {
            var: format!("depth {needed}"),
            depth: memory_depth,
        });
    }
    Ok(())
}

impl ObserverAutomaton {
    pub fn new(
        axis: Axis,
        pfn: BoolExpr,
        memory_depth: usize,
        cfg: SolverConfig,
        world_id: impl Into<String>,
    ) -> Result<Self> {
        if memory_depth > MAX_MEMORY_DEPTH {
            return Err(Error::Capacity(memory_depth));
        }
        check_pfn(&pfn, memory_depth)?;
        cfg.validate()?;
        Ok(ObserverAutomaton {
            axis,
            pfn,
            memory_depth,
            cfg,
            history: VecDeque::new(),
            world_id: world_id.into(),
            halted: None,
            steps: 0,
            events: Vec::new(),
        })
    }

    /// Seeds the history, most recent entry first.
    pub fn with_history(mut self, history: Vec<HistoryEntry>) -> Result<Self> {
        if history.len() > self.memory_depth {
            return Err(Error::Domain(format!(
                "history of {} entries exceeds memory depth {}",
                history.len(),
                self.memory_depth
            )));
        }
        self.history = history.into();
        Ok(self)
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn pfn(&self) -> &BoolExpr {
        &self.pfn
    }

    pub fn memory_depth(&self) -> usize {
        self.memory_depth
    }

    pub fn world_id(&self) -> &str {
        &self.world_id
    }

    pub fn history(&self) -> Vec<HistoryEntry> {
        self.history.iter().copied().collect()
    }

    pub fn halted(&self) -> Option<HaltReason> {
        self.halted
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn events(&self) -> &[WorldEvent] {
        &self.events
    }

    /// One transition. After a halt the input is echoed unchanged.
    pub fn step(&mut self, input: &SpinState) -> Result<(SpinState, StepRecord)> {
        let before = self.axis;
        if let Some(reason) = self.halted {
            let record = StepRecord {
                step: self.steps + 1,
                status: match reason {
                    HaltReason::Trivial => Status::Trivial,
                    _ => Status::DeathPoint,
                },
                axis_before: before,
                axis_after: before,
                outcome: None,
                state_before: *input,
                state_after: *input,
                s_i: Entropy::new(entropy_of(up_overlap_prob(&before, input))).unwrap_or(Entropy::MAX),
                s_up: Entropy::ZERO,
                world_id: self.world_id.clone(),
            };
            self.steps += 1;
            return Ok((*input, record));
        }

        let report = solve(&before, input, &self.cfg)?;
        if let Some(a) = report.agreement.filter(|a| !a.agree) {
            log::warn!(
                "step {}: grid and closed form disagree (axis {:.3e}, s_up {:.3e})",
                self.steps + 1,
                a.axis_distance,
                a.s_up_diff
            );
        }
        let sol = report.solution;
        let (outcome, output) = match sol.status {
            Status::Normal => {
                let history: Vec<HistoryEntry> = self.history.iter().copied().collect();
                let outcome = decide_outcome(&self.pfn, &sol.axis_f, &history)?;
                if self.memory_depth > 0 {
                    self.history.push_front(HistoryEntry {
                        projection: project_axis(&sol.axis_f),
                        outcome,
                    });
                    self.history.truncate(self.memory_depth);
                }
                self.axis = sol.axis_f;
                (Some(outcome), eigenstate_as_state(&sol.axis_f, outcome))
            }
            Status::DeathPoint => {
                self.halted = Some(HaltReason::DeathPoint);
                (None, *input)
            }
            Status::Trivial => {
                self.halted = Some(HaltReason::Trivial);
                (None, *input)
            }
        };
        self.steps += 1;
        let record = StepRecord {
            step: self.steps,
            status: sol.status,
            axis_before: before,
            axis_after: self.axis,
            outcome,
            state_before: *input,
            state_after: output,
            s_i: sol.s_i,
            s_up: sol.s_up,
            world_id: self.world_id.clone(),
        };
        log::debug!("step {}: {:?} {} -> {}", record.step, record.status, before, self.axis);
        Ok((output, record))
    }

    /// Feeds each output back as the next input until a halt or `max_steps`.
    pub fn run(&mut self, initial: SpinState, max_steps: usize) -> Result<RunResult> {
        if max_steps < 1 {
            return Err(Error::Domain("max_steps must be at least 1".into()));
        }
        let mut records = Vec::new();
        let mut state = initial;
        for _ in 0..max_steps {
            let (next, record) = self.step(&state)?;
            let stop = record.status != Status::Normal;
            records.push(record);
            state = next;
            if stop {
                break;
            }
        }
        let last = records.last().expect("at least one step ran");
        let (halted, halt_reason, death_step) = match last.status {
            Status::Normal => (false, HaltReason::MaxSteps, None),
            Status::DeathPoint => (true, HaltReason::DeathPoint, Some(last.step)),
            Status::Trivial => (true, HaltReason::Trivial, Some(last.step)),
        };
        Ok(RunResult {
            records,
            halted,
            halt_reason,
            death_step,
        })
    }

    /// Replaces the P function. History is kept; a halted machine stays
    /// halted since the transition does not depend on the P function.
    pub fn switch_world(&mut self, pfn: BoolExpr, world_id: impl Into<String>) -> Result<()> {
        check_pfn(&pfn, self.memory_depth)?;
        let event = WorldEvent {
            after_step: self.steps,
            from: std::mem::replace(&mut self.world_id, world_id.into()),
            to: self.world_id.clone(),
        };
        log::info!("world switch after step {}: {} -> {}", event.after_step, event.from, event.to);
        self.events.push(event);
        self.pfn = pfn;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::canonicalize_axis;
    use crate::pfn::parse_expr;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn automaton(expr: &str, axis: Axis) -> ObserverAutomaton {
        ObserverAutomaton::new(axis, parse_expr(expr, 0).unwrap(), 0, SolverConfig::default(), expr).unwrap()
    }

    fn two_branch_axis() -> Axis {
        canonicalize_axis(FRAC_PI_4, FRAC_PI_2).unwrap()
    }

    #[test]
    fn two_branch_step_collapses_up() {
        let mut a = automaton("x|y", two_branch_axis());
        let (out, rec) = a.step(&SpinState::new(0.4, 0.0).unwrap()).unwrap();
        assert_eq!(rec.status, Status::Normal);
        assert_eq!(rec.step, 1);
        assert!((rec.axis_after.theta() - 0.862).abs() < 1e-3);
        assert!((rec.axis_after.phi() - 1.197).abs() < 1e-3);
        assert_eq!(rec.outcome, Some(Outcome::Up));
        // cos^2(theta_f / 2), numpy at theta_f = 0.862: 0.8254602395871083
        assert!((out.rho() - 0.8254).abs() < 1e-3);
        assert_eq!(out.tau(), rec.axis_after.phi());
        assert!((rec.s_i.value() - 0.683_113_577_666_755).abs() < 1e-12);
    }

    #[test]
    fn death_step_is_death() {
        let axis = canonicalize_axis(0.862, 1.197).unwrap();
        let mut a = automaton("x|y", axis);
        let input = SpinState::new((PI / 8.0).cos().powi(2), FRAC_PI_2).unwrap();
        let (out, rec) = a.step(&input).unwrap();
        assert_eq!(rec.status, Status::DeathPoint);
        assert_eq!(out, input);
        assert_eq!(rec.outcome, None);
        assert_eq!(a.halted(), Some(HaltReason::DeathPoint));
        let (again, rec2) = a.step(&input).unwrap();
        assert_eq!(again, input);
        assert_eq!(rec2.step, 2);
        assert_eq!(rec2.axis_after, axis);
    }

    #[test]
    fn eigenstate_input_is_trivial() {
        let axis = two_branch_axis();
        let mut a = automaton("x&y", axis);
        let input = eigenstate_as_state(&axis, Outcome::Up);
        let run = a.run(input, 5).unwrap();
        assert_eq!(run.records.len(), 1);
        assert!(run.halted);
        assert_eq!(run.halt_reason, HaltReason::Trivial);
        assert_eq!(run.death_step, Some(1));
        assert_eq!(run.records[0].state_after, input);
    }

    #[test]
    fn two_branch_chain_halts_at_step_two() {
        let mut a = automaton("x|y", two_branch_axis());
        let run = a.run(SpinState::new(0.4, 0.0).unwrap(), 10).unwrap();
        assert_eq!(run.records.len(), 2);
        assert_eq!(run.records[0].status, Status::Normal);
        assert_eq!(run.records[1].status, Status::Trivial);
        assert_eq!(run.death_step, Some(2));
        assert!(run.halted);
    }

    #[test]
    fn max_steps_reached() {
        let mut a = automaton("x|y", two_branch_axis());
        let run = a.run(SpinState::new(0.4, 0.0).unwrap(), 1).unwrap();
        assert!(!run.halted);
        assert_eq!(run.halt_reason, HaltReason::MaxSteps);
        assert_eq!(run.death_step, None);
        assert!(a.run(SpinState::new(0.4, 0.0).unwrap(), 0).is_err());
    }

    #[test]
    fn memory_needs_seeded_history() {
        let e = parse_expr("s1|x", 1).unwrap();
        let mut a = ObserverAutomaton::new(two_branch_axis(), e.clone(), 1, SolverConfig::default(), "m").unwrap();
        assert_eq!(
            a.step(&SpinState::new(0.4, 0.0).unwrap()).unwrap_err(),
            Error::History { needed: 1, available: 0 }
        );
        let mut a = ObserverAutomaton::new(two_branch_axis(), e, 1, SolverConfig::default(), "m")
            .unwrap()
            .with_history(vec![HistoryEntry::new(false, false, Outcome::Down)])
            .unwrap();
        let (_, rec) = a.step(&SpinState::new(0.4, 0.0).unwrap()).unwrap();
        assert_eq!(rec.outcome, Some(Outcome::Up));
        assert_eq!(a.history().len(), 1);
        assert_eq!(a.history()[0].outcome, Outcome::Up);
        assert!(ObserverAutomaton::new(two_branch_axis(), parse_expr("s2", 2).unwrap(), 1, SolverConfig::default(), "m").is_err());
        assert!(matches!(
            ObserverAutomaton::new(two_branch_axis(), BoolExpr::Const(true), 5, SolverConfig::default(), "m"),
            Err(Error::Capacity(5))
        ));
    }

    #[test]
    fn world_switch_changes_outcomes_only() {
        // Collapses to (0.666, 2.430), which projects to (1, 0).
        let axis = canonicalize_axis(1.0, 0.5).unwrap();
        let state = SpinState::new(0.4, 0.0).unwrap();
        let mut or = automaton("x|y", axis);
        let mut and = automaton("x|y", axis);
        and.switch_world(parse_expr("x&y", 0).unwrap(), "and").unwrap();
        assert_eq!(and.events().len(), 1);
        assert_eq!(and.events()[0].from, "x|y");
        assert_eq!(and.events()[0].to, "and");
        let (out1, r1) = or.step(&state).unwrap();
        let (out2, r2) = and.step(&state).unwrap();
        assert_eq!(r1.status, Status::Normal);
        assert_eq!(r1.status, r2.status);
        assert_eq!(r1.axis_after, r2.axis_after);
        assert_eq!(project_axis(&r1.axis_after), crate::pfn::BoolProjection { xi: true, eta: false });
        assert_eq!(r1.outcome, Some(Outcome::Up));
        assert_eq!(r2.outcome, Some(Outcome::Down));
        assert_ne!(out1, out2);
        assert_eq!(r2.world_id, "and");
    }

    #[test]
    fn switching_does_not_revive() {
        let axis = canonicalize_axis(0.862, 1.197).unwrap();
        let input = SpinState::new((PI / 8.0).cos().powi(2), FRAC_PI_2).unwrap();
        let mut a = automaton("x|y", axis);
        a.step(&input).unwrap();
        a.switch_world(parse_expr("1", 0).unwrap(), "one").unwrap();
        let (out, rec) = a.step(&input).unwrap();
        assert_eq!(rec.status, Status::DeathPoint);
        assert_eq!(out, input);
    }

    #[test]
    fn jsonl_fields() {
        let mut a = automaton("x|y", two_branch_axis());
        let run = a.run(SpinState::new(0.4, 0.0).unwrap(), 10).unwrap();
        let text = run.to_jsonl();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        let mut expected = vec![
            "step", "status", "theta_i", "phi_i", "theta_f", "phi_f", "outcome", "rho_before", "tau_before",
            "rho_after", "tau_after", "s_i", "s_up", "world_id",
        ];
        expected.sort_unstable();
        let mut keys_sorted = keys.clone();
        keys_sorted.sort_unstable();
        assert_eq!(keys_sorted, expected);
        assert_eq!(v["status"], "Normal");
        assert_eq!(v["outcome"], 1);
        assert_eq!(v["world_id"], "x|y");
        let v2: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(v2["status"], "Trivial");
        assert!(v2["outcome"].is_null());
    }

    #[test]
    fn random_history_is_seeded() {
        assert_eq!(random_history(3, 9), random_history(3, 9));
        assert_eq!(random_history(4, 9).len(), 4);
    }
}
