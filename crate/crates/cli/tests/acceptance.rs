//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_3, TAU};
use std::path::{Path, PathBuf};
use std::time::Instant;

use common::{adaptive_simpson, derivative_5pt};
use lowthrust_mga::ephemeris::{Elements, DAY};
use lowthrust_mga::flyby::{deflection_angle, v_inf_in, v_inf_out, FlybyParams, HP_MAX, HP_MIN, V_INF_MAX};
use lowthrust_mga::frames::cart_to_cyl;
use lowthrust_mga::rng::stream;
use lowthrust_mga::rtba::{
    blend, complexity, evaluate_sequence, run_rtba_with, tb_fitness, RtbaConfig, RtbaContext, SequenceEvaluator,
    SequenceRecord, SubTree, TbCandidate,
};
use lowthrust_mga::shaping::{
    additional_functions, base_functions, solve_coefficients, thrust_profile, Axis, FreeCoeffs, ShapeFn,
};
use lowthrust_mga::{Body, Planet, PlanetSet, Sequence, AU, SUN_MU};
use mga_cli::{parse_config, run, Mode, Overrides, RunConfig};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

// 1 ---------------------------------------------------------------------

fn enumerate_count(m: usize, n: usize) -> u64 {
    let mut level = vec![Vec::<usize>::new()];
    let mut total = 1;
    for _ in 0..n {
        level =
            level.iter().flat_map(|s| (0..m).map(move |c| s.iter().copied().chain([c]).collect::<Vec<_>>())).collect();
        total += level.len() as u64;
    }
    total
}

fn criterion_1() -> Outcome {
    let exact = complexity(8, 3).unwrap();
    let mut mismatches = Vec::new();
    for m in 1..=8 {
        for n in 0..=4 {
            if complexity(m as u64, n as u32).unwrap() != enumerate_count(m, n) {
                mismatches.push((m, n));
            }
        }
    }
    outcome(exact == 585 && mismatches.is_empty(), format!("C(8,3) = {exact}; enumeration mismatches {mismatches:?}"))
}

// 2 ---------------------------------------------------------------------

fn criterion_2() -> Outcome {
    let mut fns: Vec<ShapeFn> = Vec::new();
    for axis in Axis::ALL {
        for n in 0..=2 {
            fns.extend(base_functions(axis, n));
            fns.extend(additional_functions(axis, n, 2).unwrap());
        }
    }
    let mut worst_d: f64 = 0.0;
    let mut worst_i: f64 = 0.0;
    for f in &fns {
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let scale = grid.iter().map(|&s| f.derivative(s).abs()).fold(1.0, f64::max);
        for &s in &grid {
            let fd = derivative_5pt(&|x| f.value(x), s, 1e-4);
            worst_d = worst_d.max((f.derivative(s) - fd).abs() / scale);
        }
        for k in 1..=10 {
            let s = k as f64 / 10.0;
            let reference = adaptive_simpson(&|x| f.value(x), 0.0, s, 1e-15);
            worst_i = worst_i.max((f.integral(s) - reference).abs() / reference.abs().max(1e-3));
        }
    }

    let set = PlanetSet::builtin();
    let mut rng = stream(2024, "acceptance/legs", 0);
    let (mut legs, mut worst_v, mut worst_x, mut worst_a) = (0, 0.0f64, 0.0f64, 0.0f64);
    while legs < 1000 {
        let pick = |rng: &mut dyn rand::RngCore| set.bodies()[rng.random_range(0..5)].id;
        let t0 = rng.random_range(61400.0..63400.0);
        let tof_days: f64 = rng.random_range(100.0..4500.0);
        let dep = set.state_at(pick(&mut rng), t0).unwrap();
        let arr = set.state_at(pick(&mut rng), t0 + tof_days).unwrap();
        let flat: Vec<f64> = (0..6).map(|_| rng.random_range(-3e3..3e3)).collect();
        let n = rng.random_range(0..=2);
        let tof = tof_days * DAY;
        let Ok(leg) = solve_coefficients(&dep, &arr, tof, n, &FreeCoeffs::from_flat(&flat).unwrap(), SUN_MU) else {
            continue;
        };
        legs += 1;
        let (c0, c1) = (cart_to_cyl(&dep), cart_to_cyl(&arr));
        let (p0, p1) = (leg.point(0.0), leg.point(1.0));
        let dv0 = ((p0.vr - c0.vr).powi(2) + (p0.vtheta - c0.vtheta).powi(2) + (p0.vz - c0.vz).powi(2)).sqrt();
        let dv1 = ((p1.vr - c1.vr).powi(2) + (p1.vtheta - c1.vtheta).powi(2) + (p1.vz - c1.vz).powi(2)).sqrt();
        worst_v = worst_v.max(dv0 / dep.velocity.norm()).max(dv1 / arr.velocity.norm());
        worst_x = worst_x.max((p1.r - c1.r).abs() / c1.r).max((p1.z - c1.z).abs() / c1.r);
        let angle = adaptive_simpson(&|s| tof * leg.normal().velocity(s) / leg.point(s).r, 0.0, 1.0, 1e-12);
        worst_a = worst_a.max((angle - leg.swept_angle).abs() / (leg.swept_angle / TAU).max(1.0));
    }
    let pass = worst_v < 1e-6 && worst_x < 1e-6 && worst_a < 1e-6 && worst_d < 1e-7 && worst_i < 1e-8;
    outcome(
        pass,
        format!(
            "{legs} legs: velocity {worst_v:.1e}, distance {worst_x:.1e}, angle {worst_a:.1e} rad per rev (< 1e-6); \
             derivative {worst_d:.1e} (< 1e-7), antiderivative {worst_i:.1e} (< 1e-8) over {} functions",
            fns.len()
        ),
    )
}

// 3 ---------------------------------------------------------------------

fn criterion_3() -> Outcome {
    let body = Body {
        id: Planet::Earth,
        mu: 3.986e14,
        radius: 6.378e6,
        sun_mu: SUN_MU,
        elements: Elements { a: AU, e: 0.0, i: 0.0, raan: 0.0, argp: 0.0, m0: 0.0, t0_mjd: 61400.0 },
    };
    let dep = body.state_at(61400.0).unwrap();
    let arr = body.state_at(61650.0).unwrap();
    let leg = solve_coefficients(&dep, &arr, 250.0 * DAY, 0, &FreeCoeffs::zeros(1), SUN_MU).unwrap();
    let fmax = thrust_profile(&leg).unwrap().iter().map(|s| s.f.norm()).fold(0.0, f64::max);
    outcome(
        leg.delta_v < 1.0 && fmax < 1e-7,
        format!("ΔV {:.2e} m/s (< 1), max |f| {fmax:.2e} m/s² (< 1e-7)", leg.delta_v),
    )
}

// 4 ---------------------------------------------------------------------

fn criterion_4() -> Outcome {
    let set = PlanetSet::builtin();
    let mut rng = stream(4, "acceptance/flyby", 0);
    let (mut worst_mag, mut worst_angle) = (0.0f64, 0.0f64);
    for _ in 0..100_000 {
        let body = &set.bodies()[rng.random_range(0..8)];
        let state = body.state_at(rng.random_range(61000.0..64000.0)).unwrap();
        let p = FlybyParams {
            v_inf: rng.random_range(1.0..V_INF_MAX),
            h_p: rng.random_range(HP_MIN..HP_MAX),
            beta: rng.random_range(0.0..TAU),
            theta_g: rng.random_range(0.0..TAU),
            phi_g: rng.random_range(-1.5..1.5),
        };
        let vin = v_inf_in(&p, &state).unwrap();
        let delta = deflection_angle(p.v_inf, p.h_p, body).unwrap();
        let vout = v_inf_out(&vin, &state, delta, p.beta).unwrap();
        worst_mag = worst_mag.max((vout.norm() - vin.norm()).abs() / vin.norm());
        worst_angle = worst_angle.max((vin.cross(&vout).norm().atan2(vin.dot(&vout)) - delta).abs());
    }
    let mut b = *set.get(Planet::Earth).unwrap();
    b.radius = 1e6;
    let v: f64 = 4000.0;
    let h_p = b.mu / (v * v) - b.radius;
    let point = (deflection_angle(v, h_p, &b).unwrap() - FRAC_PI_3).abs();
    outcome(
        worst_mag < 1e-12 && worst_angle < 1e-10 && point < 1e-12,
        format!(
            "|v| {worst_mag:.1e} (< 1e-12), angle {worst_angle:.1e} rad (< 1e-10), δ(π/3 point) {point:.1e} (< 1e-12)"
        ),
    )
}

// 5 ---------------------------------------------------------------------

fn criterion_5() -> Outcome {
    // Worked example: min 10, mean 20 ⇒ 0.7·10 + 0.3·20 = 13.
    let rec = SequenceRecord::new("EMJ".parse().unwrap(), vec![10.0, 20.0, 30.0], 0.7, 0);
    let worked_s = (rec.f_s - 13.0).abs() < 1e-12;
    let members = vec![
        SequenceRecord::new("EMJ".parse().unwrap(), vec![4.0], 0.7, 0),
        SequenceRecord::new("EMMJ".parse().unwrap(), vec![8.0], 0.7, 0),
        SequenceRecord::new("EMEJ".parse().unwrap(), vec![12.0], 0.7, 0),
    ];
    // f_s = 4, 8, 12 ⇒ f_tb = 0.7·4 + 0.3·8 = 5.2.
    let tb = tb_fitness(vec![TbCandidate { body: Planet::Mars, member_records: members, f_tb: f64::NAN }], 0.7);
    let worked_tb = (tb[0].f_tb - 5.2).abs() < 1e-12;

    let mut rng = stream(5, "acceptance/blend", 0);
    let weights: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let mut violations = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(1..30);
        let spread: f64 = rng.random_range(1.0..1e6);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..spread)).collect();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = values.iter().sum::<f64>() / n as f64;
        for &w in &weights {
            let f = blend(&values, w);
            if !(min <= f && f <= mean) {
                violations += 1;
            }
        }
    }
    outcome(
        worked_s && worked_tb && violations == 0,
        format!(
            "f_s(10,20,30; χ=0.7) = {}, f_tb(4,8,12; ξ=0.7) = {}, min ≤ f ≤ mean violations {violations} / 110000",
            rec.f_s, tb[0].f_tb
        ),
    )
}

// 6 + 10 ----------------------------------------------------------------

fn toy_config(out: &Path) -> RunConfig {
    let overrides = Overrides {
        output_dir: Some(out.to_path_buf()),
        elements_file: Some(fixture("toy_system.csv")),
        ..Overrides::default()
    };
    parse_config(Some(&fixture("toy_rtba.toml")), &overrides).unwrap().1
}

struct ToyRuns {
    dirs: Vec<PathBuf>,
}

fn criterion_6(root: &Path) -> (Outcome, ToyRuns) {
    let base = toy_config(root);
    let system = PlanetSet::from_csv_path(&fixture("toy_system.csv")).unwrap();
    let tree = SubTree {
        departure: Planet::Earth,
        prefix: vec![],
        arrival: Planet::Jupiter,
        candidates: vec![Planet::Earth, Planet::Mars, Planet::Jupiter],
        depth: base.rtba.max_gas,
    };
    // Oracle: every sequence with the search's own budget.
    let oracle: Vec<SequenceRecord> =
        tree.all().iter().map(|s| evaluate_sequence(&system, s, &base.rtba, 0).unwrap()).collect();
    let best = oracle.iter().min_by(|a, b| a.f_s.total_cmp(&b.f_s)).unwrap();
    let planted: Sequence = "EMJ".parse().unwrap();

    let mut dirs = Vec::new();
    let mut problems = Vec::new();
    for (tag, workers) in [("w1", 1), ("w4", 4), ("w1-again", 1)] {
        let mut cfg = base.clone();
        cfg.output_dir = root.join(tag);
        run(&cfg, workers).unwrap();
        dirs.push(cfg.output_dir.clone());
    }
    let ranking = std::fs::read_to_string(dirs[0].join("ranking.csv")).unwrap();
    let first = ranking.lines().nth(1).and_then(|l| l.split(',').nth(1)).unwrap_or("").to_string();
    let journal: Vec<SequenceRecord> = std::fs::read_to_string(dirs[0].join("journal.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let unique: BTreeSet<&Sequence> = journal.iter().map(|r| &r.sequence).collect();
    if unique.len() != journal.len() {
        problems.push(format!("{} evaluations of {} sequences", journal.len(), unique.len()));
    }
    if journal.len() != oracle.len() {
        problems.push(format!("q=1 evaluated {} of {}", journal.len(), oracle.len()));
    }
    for r in &journal {
        let o = oracle.iter().find(|o| o.sequence == r.sequence).unwrap();
        if o.f_s != r.f_s {
            problems.push(format!("{}: f_s {} vs oracle {}", r.sequence, r.f_s, o.f_s));
        }
    }
    let identical = ["ranking.csv", "journal.jsonl"].iter().all(|f| {
        let a = std::fs::read(dirs[0].join(f)).unwrap();
        dirs[1..].iter().all(|d| std::fs::read(d.join(f)).unwrap() == a)
    });
    if !identical {
        problems.push("artifacts differ between runs".into());
    }
    let scores: Vec<String> = oracle.iter().map(|r| format!("{} {:.0}", r.sequence, r.f_s)).collect();
    let pass = best.sequence == planted && first == planted.to_string() && problems.is_empty();
    (
        outcome(
            pass,
            format!(
                "oracle f_s [{}] m/s, oracle best {}, ranked first {first}; no repeats, bit-identical over workers 1/4/1{}",
                scores.join(", "),
                best.sequence,
                if problems.is_empty() { String::new() } else { format!("; problems: {problems:?}") }
            ),
        ),
        ToyRuns { dirs },
    )
}

fn criterion_10(root: &Path, toy: &ToyRuns) -> Outcome {
    let tiny = |mode: Mode, dir: &Path| {
        let overrides = Overrides {
            mode: Some(mode),
            sequence: Some("EMJ".into()),
            output_dir: Some(dir.to_path_buf()),
            seed: Some(17),
            ..Overrides::default()
        };
        let file = root.join("tiny.toml");
        std::fs::write(
            &file,
            "population_size = 24\ngenerations = 6\np = 3\nwindow_start_mjd = 61400\nwindow_end_mjd = 61520\n",
        )
        .unwrap();
        parse_config(Some(&file), &overrides).unwrap().1
    };
    let mut compared = Vec::new();
    let mut same = true;
    for (mode, files) in [(Mode::Ltto, vec!["solution.json"]), (Mode::Grid, vec!["grid.csv", "solution.json"])] {
        let mut dirs = Vec::new();
        for (k, workers) in [1, 4, 1].into_iter().enumerate() {
            let dir = root.join(format!("{mode}-{k}"));
            run(&tiny(mode, &dir), workers).unwrap();
            dirs.push(dir);
        }
        let mut all = files.clone();
        let thrust: Vec<String> = std::fs::read_dir(&dirs[0])
            .unwrap()
            .filter_map(|e| e.ok()?.file_name().into_string().ok())
            .filter(|n| n.starts_with("thrust_"))
            .collect();
        all.extend(thrust.iter().map(String::as_str));
        for f in &all {
            let a = std::fs::read(dirs[0].join(f)).unwrap();
            same &= dirs[1..].iter().all(|d| std::fs::read(d.join(f)).ok().as_ref() == Some(&a));
        }
        compared.push(format!("{mode}: {} files", all.len()));
    }
    for f in ["ranking.csv", "journal.jsonl"] {
        let a = std::fs::read(toy.dirs[0].join(f)).unwrap();
        same &= toy.dirs[1..].iter().all(|d| std::fs::read(d.join(f)).unwrap() == a);
    }
    compared.push("rtba: ranking + journal (criterion 6 runs)".into());
    outcome(same, format!("byte-identical across two executions and workers {{1, 4}}: {}", compared.join("; ")))
}

// 7 ---------------------------------------------------------------------

fn single_run(root: &Path, mode: Mode, seed: u64, window_end: f64) -> RunConfig {
    let file = root.join(format!("{mode}-{seed}.toml"));
    std::fs::write(
        &file,
        format!("population_size = 200\ngenerations = 100\np = 4\nwindow_start_mjd = 61400\nwindow_end_mjd = {window_end}\n"),
    )
    .unwrap();
    let overrides = Overrides {
        mode: Some(mode),
        sequence: Some("EJ".into()),
        seed: Some(seed),
        output_dir: Some(root.join(format!("{mode}-{seed}"))),
        ..Overrides::default()
    };
    parse_config(Some(&file), &overrides).unwrap().1
}

fn criterion_7(root: &Path, workers: usize) -> Outcome {
    let mut hits = 0;
    let mut notes = Vec::new();
    for seed in [1, 2, 3] {
        let cfg = single_run(root, Mode::Ltto, seed, 61640.0);
        run(&cfg, workers).unwrap();
        let sol: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(cfg.output_dir.join("solution.json")).unwrap()).unwrap();
        let dv = sol["total_delta_v"].as_f64().unwrap();
        let feasible = sol["feasible"].as_bool().unwrap();
        if feasible && dv <= 25e3 {
            hits += 1;
        }
        notes.push(format!("seed {seed}: {:.2} km/s{}", dv / 1e3, if feasible { "" } else { " (infeasible)" }));
    }
    outcome(hits >= 2, format!("{} ; {hits}/3 feasible at ≤ 25 km/s (need 2)", notes.join(", ")))
}

// 8 ---------------------------------------------------------------------

fn criterion_8(root: &Path, workers: usize) -> Outcome {
    let cfg = single_run(root, Mode::Grid, 1, 61520.0);
    run(&cfg, workers).unwrap();
    let text = std::fs::read_to_string(cfg.output_dir.join("grid.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    let starts: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let improved = rows.iter().all(|r| r[2] <= r[1]);
    let detail: Vec<String> =
        rows.iter().map(|r| format!("{}: {:.2} → {:.2} km/s", r[0], r[1] / 1e3, r[2] / 1e3)).collect();
    outcome(
        improved && starts == [61400.0, 61460.0],
        format!("{} intervals (expected 2); {}", rows.len(), detail.join(", ")),
    )
}

// 9 ---------------------------------------------------------------------

struct Constant;

impl SequenceEvaluator for Constant {
    fn evaluate(&self, _: &Sequence) -> lowthrust_mga::Result<Vec<f64>> {
        Ok(vec![1.0e4; 14])
    }
}

fn criterion_9() -> Outcome {
    let system = PlanetSet::builtin();
    let cfg = RtbaConfig::default();
    let ctx = RtbaContext::new(&system, &cfg, &Constant).unwrap();
    let result = run_rtba_with(&ctx, &mut |_| Ok(())).unwrap();
    let budgets: Vec<String> =
        result.state.history.iter().map(|h| format!("{} of {}", h.evaluated, h.complexity)).collect();
    let q = result.q_total;
    outcome(
        (q - 0.58).abs() <= 0.02,
        format!(
            "Q = {}/{} = {q:.4} (target 0.58 ± 0.02); recursions [{}]",
            result.state.evaluated_set.len(),
            ctx.full_complexity().unwrap(),
            budgets.join(", ")
        ),
    )
}

fn main() {
    let root = tempfile::tempdir().unwrap();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(4);
    let mut failed = 0;
    let mut report = |id: u32, name: &str, limit_s: f64, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        let ok = o.pass && secs < limit_s;
        if !ok {
            failed += 1;
        }
        println!("{} [{id}] {name}: {} ({secs:.1} s, limit {limit_s} s)", if ok { "PASS" } else { "FAIL" }, o.detail);
    };
    report(1, "complexity", 1.0, &mut criterion_1);
    report(2, "shaping correctness", 30.0, &mut criterion_2);
    report(3, "Keplerian coast", 1.0, &mut criterion_3);
    report(4, "flyby contracts", 5.0, &mut criterion_4);
    report(5, "fitness algebra", 5.0, &mut criterion_5);
    let mut toy = None;
    report(6, "toy-system search", 600.0, &mut || {
        let (o, runs) = criterion_6(root.path());
        toy = Some(runs);
        o
    });
    report(7, "EJ smoke run", 900.0, &mut || criterion_7(root.path(), workers));
    report(8, "grid search", 600.0, &mut || criterion_8(root.path(), workers));
    report(9, "Q calibration", 60.0, &mut criterion_9);
    report(10, "determinism", 900.0, &mut || criterion_10(root.path(), toy.as_ref().expect("criterion 6 ran")));
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
