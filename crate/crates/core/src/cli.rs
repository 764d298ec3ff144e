//! The `spin-collapse` command line.
//!
//! Exit codes: 0 on success (a death point is a successful answer), 1 on
//! usage or input errors, 2 when the grid and closed-form routes disagree.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::automaton::{random_history, HaltReason, ObserverAutomaton};
use crate::bloch::{canonicalize_axis, Axis, SpinState};
use crate::error::Error;
use crate::pfn::{
    outcome_probability, parse_expr, to_cnf, to_dnf, to_truth_table, HistoryEntry, Measure, ProbabilityMethod,
    TruthTable, MAX_MEMORY_DEPTH,
};
use crate::solver::{solve, solve_collapse, Candidate, Method, SolverConfig, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DISAGREE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "spin-collapse", version, about = "Entropy-constrained spin-1/2 collapse solver")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance and print the result as JSON.
    Solve(SolveArgs),
    /// Write the constraint level sets of one instance as CSV.
    Trace(TraceArgs),
    /// Run the observer automaton from a JSON config.
    Run {
        config: PathBuf,
    },
    /// Truth tables, normal forms and outcome probabilities.
    Pfn {
        #[command(subcommand)]
        command: PfnCommand,
    },
}

#[derive(Debug, Args)]
struct Instance {
    /// Initial axis polar angle, radians.
    #[arg(long, allow_negative_numbers = true)]
    theta_i: f64,
    /// Initial axis azimuth, radians.
    #[arg(long, allow_negative_numbers = true)]
    phi_i: f64,
    /// State weight |a|^2 on spin up along z.
    #[arg(long)]
    rho: f64,
    /// Relative phase of the state, radians.
    #[arg(long, allow_negative_numbers = true)]
    tau: f64,
}

impl Instance {
    fn resolve(&self) -> Result<(Axis, SpinState), Error> {
        Ok((canonicalize_axis(self.theta_i, self.phi_i)?, SpinState::new(self.rho, self.tau)?))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Grid,
    Closed,
    Both,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Grid => Method::Grid,
            MethodArg::Closed => Method::Closed,
            MethodArg::Both => Method::Both,
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: Instance,
    #[arg(long, value_enum, default_value = "both")]
    method: MethodArg,
    /// Lattice samples per chart dimension.
    #[arg(long = "grid", default_value_t = 1024)]
    grid_n: usize,
    /// Compact single-line JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[command(flatten)]
    instance: Instance,
    #[arg(long = "grid", default_value_t = 1024)]
    grid_n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MeasureArg {
    Chart,
    Sphere,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProbMethodArg {
    Analytic,
    Mc,
}

#[derive(Debug, Subcommand)]
enum PfnCommand {
    /// Print the truth table of an expression as hex.
    Table {
        #[arg(long)]
        expr: String,
        #[arg(long, default_value_t = 0)]
        n: usize,
    },
    /// Print the minterm expansion of a hex truth table.
    Dnf {
        #[arg(long)]
        table: String,
        #[arg(long, default_value_t = 0)]
        n: usize,
    },
    /// Print the maxterm expansion of a hex truth table.
    Cnf {
        #[arg(long)]
        table: String,
        #[arg(long, default_value_t = 0)]
        n: usize,
    },
    /// Probability of the up outcome for a random axis.
    Prob {
        #[arg(long)]
        expr: String,
        /// Memory depth the expression may use.
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, value_enum, default_value = "chart")]
        measure: MeasureArg,
        #[arg(long, value_enum, default_value = "analytic")]
        method: ProbMethodArg,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Configuration file of `spin-collapse run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub theta_i: f64,
    pub phi_i: f64,
    pub rho: f64,
    pub tau: f64,
    pub pfn: String,
    #[serde(default)]
    pub memory_depth: usize,
    pub max_steps: usize,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub eps_trivial: Option<f64>,
    #[serde(default)]
    pub eps_z: Option<f64>,
    #[serde(default)]
    pub refine_tol: Option<f64>,
    /// Seeds the initial history when `history` is absent.
    #[serde(default)]
    pub seed: u64,
    /// Explicit initial history, most recent first.
    #[serde(default)]
    pub history: Option<Vec<HistoryEntry>>,
    /// Trace path; relative paths are taken from the config file's folder.
    pub out: PathBuf,
}

fn default_grid_n() -> usize {
    SolverConfig::default().grid_n
}

fn default_method() -> Method {
    SolverConfig::default().method
}

impl RunConfig {
    pub fn solver_config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            grid_n: self.grid_n,
            eps_trivial: self.eps_trivial.unwrap_or(d.eps_trivial),
            eps_z: self.eps_z.unwrap_or(d.eps_z),
            refine_tol: self.refine_tol.unwrap_or(d.refine_tol),
            method: self.method,
            identify_boundary: false,
        }
    }
}

#[derive(Serialize)]
struct CandidateOut {
    theta: f64,
    phi: f64,
    overlap: f64,
    s_up: f64,
    component_id: usize,
    is_boundary: bool,
    admissible: bool,
}

impl From<&Candidate> for CandidateOut {
    fn from(c: &Candidate) -> Self {
        CandidateOut {
            theta: c.axis.theta(),
            phi: c.axis.phi(),
            overlap: c.overlap,
            s_up: c.s_up,
            component_id: c.component_id,
            is_boundary: c.is_boundary,
            admissible: c.admissible,
        }
    }
}

#[derive(Serialize)]
struct SolveOut {
    status: Status,
    theta_f: f64,
    phi_f: f64,
    s_up: f64,
    s_i: f64,
    candidates: Vec<CandidateOut>,
    method_agreement: Option<crate::solver::Agreement>,
}

#[derive(Serialize)]
struct TraceRow {
    theta: f64,
    phi: f64,
    level: f64,
    component: usize,
    overlap: f64,
    s_up: f64,
    is_boundary: bool,
}

#[derive(Serialize)]
struct RunSummary {
    steps: usize,
    halted: bool,
    halt_reason: HaltReason,
    death_step: Option<usize>,
}

/// Command-line failure: an exit code and a message for standard error.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: format!("error: {e}"),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    usage(format!("error: {}: {e}", path.display()))
}

/// Error message with a caret under the offending position of `text`.
fn caret(text: &str, e: &Error) -> String {
    match e {
        Error::Syntax { pos, .. } => {
            let col = text.get(..*pos).map_or(*pos, |p| p.chars().count());
            format!("error: {e}\n  {text}\n  {}^", " ".repeat(col))
        }
        _ => format!("error: {e}"),
    }
}

fn parse_for_cli(text: &str, n: usize) -> Result<crate::pfn::BoolExpr, Failure> {
    if n > MAX_MEMORY_DEPTH {
        return Err(Error::Capacity(n).into());
    }
    parse_expr(text, n).map_err(|e| usage(caret(text, &e)))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "{}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Solve(args) => cmd_solve(&args, out),
        Command::Trace(args) => cmd_trace(&args, out, err),
        Command::Run { config } => cmd_run(&config, out),
        Command::Pfn { command } => cmd_pfn(command, out),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    writeln!(out, "{text}").map_err(|e| usage(format!("error: writing output: {e}")))
}

fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (i, s) = args.instance.resolve()?;
    let cfg = SolverConfig {
        grid_n: args.grid_n,
        method: args.method.into(),
        ..SolverConfig::default()
    };
    let report = solve(&i, &s, &cfg)?;
    let sol = &report.solution;
    let doc = SolveOut {
        status: sol.status,
        theta_f: sol.axis_f.theta(),
        phi_f: sol.axis_f.phi(),
        s_up: sol.s_up.value(),
        s_i: sol.s_i.value(),
        candidates: sol.candidates.iter().map(CandidateOut::from).collect(),
        method_agreement: report.agreement.clone(),
    };
    let text = if args.json {
        serde_json::to_string(&doc)
    } else {
        serde_json::to_string_pretty(&doc)
    }
    .expect("solution serializes");
    write_out(out, &text)?;
    match report.agreement {
        Some(a) if !a.agree => {
            log::error!(
                "grid and closed form disagree: status match {}, axis {:.3e} rad, s_up {:.3e}",
                a.status_match,
                a.axis_distance,
                a.s_up_diff
            );
            Ok(EXIT_DISAGREE)
        }
        _ => Ok(EXIT_OK),
    }
}

fn cmd_trace(args: &TraceArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let (i, s) = args.instance.resolve()?;
    let cfg = SolverConfig {
        grid_n: args.grid_n,
        method: Method::Grid,
        ..SolverConfig::default()
    };
    let sol = solve_collapse(&i, &s, &cfg)?;
    let file = File::create(&args.out).map_err(|e| io_failure(&args.out, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    if sol.curves.is_empty() {
        // csv writes the header with the first record; emit it by hand.
        w.write_record(["theta", "phi", "level", "component", "overlap", "s_up", "is_boundary"])
            .map_err(|e| usage(format!("error: {}: {e}", args.out.display())))?;
        let _ = writeln!(err, "warning: {:?} instance has no level sets; wrote header only", sol.status);
    }
    let mut rows = 0usize;
    for curve in &sol.curves {
        for v in &curve.vertices {
            w.serialize(TraceRow {
                theta: v.theta,
                phi: v.phi,
                level: curve.level,
                component: curve.component_id,
                overlap: v.overlap.unwrap_or(f64::NAN),
                s_up: v.s_up.unwrap_or(f64::NAN),
                is_boundary: v.is_boundary,
            })
            .map_err(|e| usage(format!("error: {}: {e}", args.out.display())))?;
            rows += 1;
        }
    }
    w.flush().map_err(|e| io_failure(&args.out, e))?;
    log::info!("wrote {rows} rows in {} components to {}", sol.curves.len(), args.out.display());
    let summary = serde_json::json!({
        "status": sol.status,
        "components": sol.curves.len(),
        "rows": rows,
    });
    write_out(out, &summary.to_string())?;
    Ok(EXIT_OK)
}

/// Loads a run config, with line and column in parse errors.
pub fn load_run_config(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_run(path: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = load_run_config(path).map_err(|m| usage(format!("error: invalid config {m}")))?;
    if cfg.memory_depth > MAX_MEMORY_DEPTH {
        return Err(Error::Capacity(cfg.memory_depth).into());
    }
    let axis = canonicalize_axis(cfg.theta_i, cfg.phi_i)?;
    let state = SpinState::new(cfg.rho, cfg.tau)?;
    let pfn = parse_expr(&cfg.pfn, cfg.memory_depth).map_err(|e| usage(caret(&cfg.pfn, &e)))?;
    let history = cfg
        .history
        .clone()
        .unwrap_or_else(|| random_history(cfg.memory_depth, cfg.seed));
    let mut automaton = ObserverAutomaton::new(axis, pfn, cfg.memory_depth, cfg.solver_config(), cfg.pfn.clone())?
        .with_history(history)?;
    let result = automaton.run(state, cfg.max_steps)?;

    let trace_path = if cfg.out.is_relative() {
        path.parent().unwrap_or(Path::new(".")).join(&cfg.out)
    } else {
        cfg.out.clone()
    };
    let file = File::create(&trace_path).map_err(|e| io_failure(&trace_path, e))?;
    let mut w = BufWriter::new(file);
    result.write_jsonl(&mut w).map_err(|e| io_failure(&trace_path, e))?;
    w.flush().map_err(|e| io_failure(&trace_path, e))?;

    let summary = RunSummary {
        steps: result.records.len(),
        halted: result.halted,
        halt_reason: result.halt_reason,
        death_step: result.death_step,
    };
    write_out(out, &serde_json::to_string(&summary).expect("summary serializes"))?;
    Ok(EXIT_OK)
}

fn cmd_pfn(command: PfnCommand, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        PfnCommand::Table { expr, n } => {
            let e = parse_for_cli(&expr, n)?;
            write_out(out, &to_truth_table(&e, n)?.to_hex())?;
        }
        PfnCommand::Dnf { table, n } => {
            write_out(out, &to_dnf(&TruthTable::from_hex(n, &table)?).to_string())?;
        }
        PfnCommand::Cnf { table, n } => {
            write_out(out, &to_cnf(&TruthTable::from_hex(n, &table)?).to_string())?;
        }
        PfnCommand::Prob {
            expr,
            n,
            measure,
            method,
            samples,
            seed,
        } => {
            let e = parse_for_cli(&expr, n)?;
            let measure = match measure {
                MeasureArg::Chart => Measure::ChartUniform,
                MeasureArg::Sphere => Measure::SphereArea,
            };
            let method = match method {
                ProbMethodArg::Analytic => ProbabilityMethod::Analytic,
                ProbMethodArg::Mc => ProbabilityMethod::MonteCarlo { samples, seed },
            };
            let est = outcome_probability(&e, measure, method)?;
            write_out(out, &serde_json::to_string(&est).expect("estimate serializes"))?;
        }
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with(std::iter::once("spin-collapse").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn pfn_table() {
        let (code, out, _) = run(&["pfn", "table", "--expr", "x|y", "--n", "0"]);
        assert_eq!(code, 0);
        assert_eq!(out, "7\n");
    }

    #[test]
    fn caret_diagnostic() {
        let (code, _, err) = run(&["pfn", "table", "--expr", "x|&y"]);
        assert_eq!(code, 1);
        assert!(err.contains("position 2"), "{err}");
        assert!(err.contains("  x|&y\n    ^"), "{err}");
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(&["solve", "--theta-i", "0.1"]).0, 1);
        assert_eq!(run(&["bogus"]).0, 1);
        let (code, _, err) = run(&["solve", "--theta-i", "0", "--phi-i", "0", "--rho", "1.5", "--tau", "0"]);
        assert_eq!(code, 1);
        assert!(err.contains("rho"), "{err}");
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("solve"));
    }
}
