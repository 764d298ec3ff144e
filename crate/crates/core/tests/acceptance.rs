//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spin_collapse::automaton::ObserverAutomaton;
use spin_collapse::bloch::{axes_up_overlap, canonicalize_axis, raw_eigenvectors, raw_up_overlap_prob, SpinState};
use spin_collapse::entropy::{binary_entropy, collapse_entropies, entropy_pair_solutions};
use spin_collapse::pfn::{
    and, not, or, outcome_probability, parse_expr, to_cnf, to_dnf, to_truth_table, var, xor, BoolExpr, Measure,
    ProbabilityMethod, TruthTable, Var,
};
use spin_collapse::solver::{solve, solve_collapse, SolverConfig, Status, AXIS_AGREEMENT_TOL, S_UP_AGREEMENT_TOL};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn entropy(p: f64) -> f64 {
    binary_entropy(p.clamp(0.0, 1.0)).unwrap().value()
}

/// Angular distance in the chart, max over the two coordinates.
fn chart_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn normal_reference() -> Outcome {
    let i = canonicalize_axis(FRAC_PI_4, FRAC_PI_2).unwrap();
    let s = SpinState::new(0.4, 0.0).unwrap();
    let (report, dt) = timed(|| solve(&i, &s, &SolverConfig::default()).unwrap());
    let sol = &report.solution;
    let axis = (sol.axis_f.theta(), sol.axis_f.phi());
    let axis_ok = chart_dist(axis, (0.862, 1.197)) <= 1e-3;
    let s_ok = (sol.s_up.value() - 0.0980).abs() <= 1e-4;
    let mut z_dist = f64::INFINITY;
    for c in sol.curves.iter().filter(|c| c.contains_zero_entropy) {
        let vertices = c.vertices.iter().map(|v| (v.theta, v.phi));
        let refined = sol
            .candidates
            .iter()
            .filter(|k| k.component_id == c.component_id)
            .map(|k| (k.axis.theta(), k.axis.phi()));
        for p in vertices.chain(refined) {
            z_dist = z_dist.min(chart_dist(p, (0.785, 1.571)));
        }
    }
    let z_ok = z_dist <= 1e-3;
    let fast = dt < Duration::from_secs(1);
    outcome(
        sol.status == Status::Normal && axis_ok && s_ok && z_ok && fast,
        format!(
            "status {:?}, axis ({:.6}, {:.6}), S_up {:.6}, discarded curve within {:.2e} rad of Z, {:.0} ms",
            sol.status,
            axis.0,
            axis.1,
            sol.s_up.value(),
            z_dist,
            dt.as_secs_f64() * 1e3
        ),
    )
}

fn death_reference() -> Outcome {
    let i = canonicalize_axis(0.862, 1.197).unwrap();
    let s = SpinState::new((PI / 8.0).cos().powi(2), FRAC_PI_2).unwrap();
    let (report, dt) = timed(|| solve(&i, &s, &SolverConfig::default()).unwrap());
    let sol = &report.solution;
    let exact = sol.axis_f.theta() == 0.862 && sol.axis_f.phi() == 1.197;
    let fast = dt < Duration::from_secs(1);
    outcome(
        sol.status == Status::DeathPoint && exact && sol.curves.len() == 1 && fast,
        format!(
            "status {:?}, axis ({}, {}), {} component(s), {:.0} ms",
            sol.status,
            sol.axis_f.theta(),
            sol.axis_f.phi(),
            sol.curves.len(),
            dt.as_secs_f64() * 1e3
        ),
    )
}

struct OracleRun {
    agree: usize,
    total: usize,
    normals: Vec<(f64, f64, f64)>,
    worst_axis: f64,
    worst_s: f64,
    elapsed: Duration,
}

fn oracle_run() -> OracleRun {
    let cfg = SolverConfig::default();
    let instances = common::instances(common::ORACLE_SEED, 1000);
    let t = Instant::now();
    let mut run = OracleRun {
        agree: 0,
        total: instances.len(),
        normals: Vec::new(),
        worst_axis: 0.0,
        worst_s: 0.0,
        elapsed: Duration::ZERO,
    };
    for (i, s) in &instances {
        let report = solve(i, s, &cfg).unwrap();
        let a = report.agreement.unwrap();
        if a.status_match && a.axis_distance <= AXIS_AGREEMENT_TOL && a.s_up_diff <= S_UP_AGREEMENT_TOL {
            run.agree += 1;
        }
        run.worst_axis = run.worst_axis.max(a.axis_distance);
        run.worst_s = run.worst_s.max(a.s_up_diff);
        let sol = report.solution;
        if sol.status == Status::Normal {
            run.normals.push((sol.s_i.value(), sol.s_f.value(), axes_up_overlap(&sol.axis_f, i)));
        }
    }
    run.elapsed = t.elapsed();
    run
}

fn oracle_equivalence(run: &OracleRun) -> Outcome {
    outcome(
        run.agree == run.total && run.elapsed < Duration::from_secs(60),
        format!(
            "{}/{} agree, worst axis {:.2e} rad, worst S_up {:.2e}, {:.1} s",
            run.agree,
            run.total,
            run.worst_axis,
            run.worst_s,
            run.elapsed.as_secs_f64()
        ),
    )
}

fn axiom_one(run: &OracleRun) -> Outcome {
    let worst_gap = run.normals.iter().map(|&(si, sf, _)| (sf - si).abs()).fold(0.0, f64::max);
    let closest = run
        .normals
        .iter()
        .map(|&(_, _, o)| o.min(1.0 - o))
        .fold(f64::INFINITY, f64::min);
    outcome(
        !run.normals.is_empty() && worst_gap <= 1e-6 && closest >= 1e-6,
        format!(
            "{} normal solutions, max |S_f - S_i| {:.2e}, min distance of overlap from {{0,1}} {:.3e}",
            run.normals.len(),
            worst_gap,
            closest
        ),
    )
}

fn entropy_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut sym = 0.0f64;
    for _ in 0..10_000 {
        let p: f64 = rng.random();
        sym = sym.max((entropy(p) - entropy(1.0 - p)).abs());
    }
    let mut anti = 0.0f64;
    for _ in 0..1000 {
        let (ti, pi_, tf, pf) = (rng.random::<f64>() * PI, rng.random::<f64>() * PI, rng.random::<f64>() * PI, rng.random::<f64>() * PI);
        let s = common::random_state(&mut rng);
        let e = collapse_entropies(&canonicalize_axis(ti, pi_).unwrap(), &canonicalize_axis(tf, pf).unwrap(), &s);
        let s_i = entropy(raw_up_overlap_prob(PI - ti, pi_ + PI, &s));
        let s_f = entropy(raw_up_overlap_prob(PI - tf, pf + PI, &s));
        let (up_f, _) = raw_eigenvectors(PI - tf, pf + PI);
        let (up_i, _) = raw_eigenvectors(PI - ti, pi_ + PI);
        let s_up = entropy(up_f.inner(&up_i).norm_sqr());
        anti = anti
            .max((e.s_i.value() - s_i).abs())
            .max((e.s_f.value() - s_f).abs())
            .max((e.s_up.value() - s_up).abs());
    }
    // Points closer than 1e-6 to p = 1/2 are not invertible to 1e-9 in
    // double precision and are skipped.
    let mut inv = 0.0f64;
    let mut n = 0;
    while n < 10_000 {
        let p: f64 = rng.random();
        if (p - 0.5).abs() <= 1e-6 {
            continue;
        }
        let (lo, hi) = entropy_pair_solutions(binary_entropy(p).unwrap());
        inv = inv.max((if p <= 0.5 { lo } else { hi } - p).abs());
        n += 1;
    }
    outcome(
        sym <= 1e-14 && anti <= 1e-12 && inv <= 1e-9,
        format!("symmetry {sym:.1e} (10^4), antipodal {anti:.1e} (10^3), inverse {inv:.1e} (10^4)"),
    )
}

fn outcome_probabilities() -> Outcome {
    let or_e = parse_expr("x|y", 0).unwrap();
    let and_e = parse_expr("x&y", 0).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [Measure::ChartUniform, Measure::SphereArea] {
        for (e, name, want) in [(&or_e, "or", 0.75), (&and_e, "and", 0.25)] {
            let exact = outcome_probability(e, m, ProbabilityMethod::Analytic).unwrap().probability;
            let mc = outcome_probability(e, m, ProbabilityMethod::MonteCarlo { samples: 1_000_000, seed: 42 })
                .unwrap()
                .probability;
            pass &= exact == want && (mc - want).abs() <= 0.0015;
            parts.push(format!("{m}/{name}: {exact} vs mc {mc:.4}"));
        }
    }
    let p_up = outcome_probability(&or_e, Measure::ChartUniform, ProbabilityMethod::Analytic).unwrap().probability;
    pass &= p_up != 1.0 - p_up;
    outcome(pass, parts.join(", "))
}

fn random_expr(rng: &mut impl Rng, depth: usize, budget: usize) -> BoolExpr {
    if budget == 0 || rng.random_bool(0.3) {
        return match rng.random_range(0..4) {
            0 => var(Var::X),
            1 => var(Var::Y),
            2 => BoolExpr::Const(rng.random()),
            _ => {
                let k = rng.random_range(1..=depth);
                var([Var::Xk(k), Var::Yk(k), Var::Sk(k)][rng.random_range(0..3)])
            }
        };
    }
    match rng.random_range(0..4) {
        0 => not(random_expr(rng, depth, budget - 1)),
        1 => and(random_expr(rng, depth, budget - 1), random_expr(rng, depth, budget - 1)),
        2 => or(random_expr(rng, depth, budget - 1), random_expr(rng, depth, budget - 1)),
        _ => xor(random_expr(rng, depth, budget - 1), random_expr(rng, depth, budget - 1)),
    }
}

fn boolean_round_trips() -> Outcome {
    let (counts, dt) = timed(|| {
        let mut ok = [0usize; 3];
        for code in 0..16u32 {
            let t = TruthTable::from_hex(0, &format!("{code:x}")).unwrap();
            if to_truth_table(&to_dnf(&t), 0).unwrap() == t && to_truth_table(&to_cnf(&t), 0).unwrap() == t {
                ok[0] += 1;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let bits = (0..32).map(|_| rng.random()).collect();
            let t = TruthTable::from_bits(1, bits).unwrap();
            if to_truth_table(&to_dnf(&t), 1).unwrap() == t && to_truth_table(&to_cnf(&t), 1).unwrap() == t {
                ok[1] += 1;
            }
        }
        for _ in 0..500 {
            let e = random_expr(&mut rng, 2, 6);
            let back = parse_expr(&e.to_string(), 2).unwrap();
            if to_truth_table(&back, 2).unwrap() == to_truth_table(&e, 2).unwrap() {
                ok[2] += 1;
            }
        }
        ok
    });
    outcome(
        counts == [16, 200, 500] && dt < Duration::from_secs(10),
        format!(
            "memoryless {}/16, depth-1 {}/200, print/parse {}/500, {:.2} s",
            counts[0],
            counts[1],
            counts[2],
            dt.as_secs_f64()
        ),
    )
}

fn death_within_two_steps() -> Outcome {
    let run = || {
        let mut m = ObserverAutomaton::new(
            canonicalize_axis(FRAC_PI_4, FRAC_PI_2).unwrap(),
            parse_expr("x|y", 0).unwrap(),
            0,
            SolverConfig::default(),
            "x|y",
        )
        .unwrap();
        m.run(SpinState::new(0.4, 0.0).unwrap(), 10).unwrap()
    };
    let a = run();
    let b = run();
    let halted_at_two = a.halted && a.death_step == Some(2) && a.records.len() == 2 && a.records[0].status == Status::Normal;
    let replay = a.to_jsonl() == b.to_jsonl();
    outcome(
        halted_at_two && replay,
        format!(
            "halted {} ({:?}) at step {:?}, replay identical: {}",
            a.halted, a.halt_reason, a.death_step, replay
        ),
    )
}

fn main() {
    // Warm up so the timing criteria measure the solver, not page faults.
    let _ = solve_collapse(
        &canonicalize_axis(1.0, 1.0).unwrap(),
        &SpinState::new(0.3, 0.3).unwrap(),
        &SolverConfig::default(),
    );
    let oracle = oracle_run();
    let results = [
        ("1 normal collapse reference", normal_reference()),
        ("2 death point reference", death_reference()),
        ("3 grid vs closed form", oracle_equivalence(&oracle)),
        ("4 entropy conservation and exclusion", axiom_one(&oracle)),
        ("5 entropy identities", entropy_identities()),
        ("6 outcome probabilities", outcome_probabilities()),
        ("7 boolean round trips", boolean_round_trips()),
        ("8 death within two steps", death_within_two_steps()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        println!("{} {name}: {}", if r.pass { "PASS" } else { "FAIL" }, r.detail);
        if !r.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
