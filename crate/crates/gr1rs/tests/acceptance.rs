//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints its own verdict line.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use gr1_core::game::{counter_bits, step_counter, BuildMode, Game, DEFAULT_STATE_CAP};
use gr1_core::oracle::{
    brute_force_region, check_strategy_sound, closed_loop, random_game, RandomGameParams, Verdict,
};
use gr1_core::sim::{recovery_metric, simulate, Directive, EnvScript};
use gr1_core::solver::main_streett;
use gr1_core::stateset::StateSet;
use gr1_core::strategy::{extract_strategy, strategy_to_mealy, MealyMachine};
use gr1rs::bench::{bench_row, to_csv, BenchSpec};
use gr1rs::dump::machine_from_json;
use gr1rs::pipeline::{synthesize, Synthesis};
use gr1rs::spec_format::parse_spec;

const SEEDS: u64 = 500;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn synth_fixture(name: &str, mode: BuildMode) -> Synthesis {
    let text = fs::read_to_string(fixture(name)).unwrap();
    let spec = parse_spec(&text).unwrap();
    synthesize(&spec, mode, DEFAULT_STATE_CAP, "controller").unwrap()
}

fn machine_of(syn: &Synthesis) -> Result<&MealyMachine, String> {
    syn.emitted()
        .map(|e| &e.machine)
        .ok_or_else(|| "not realizable".to_string())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut nonempty = 0;
    for seed in 0..SEEDS {
        let g = random_game(seed, RandomGameParams::default());
        let solved = main_streett(&g).winning;
        let oracle = brute_force_region(&g).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(solved == oracle, || format!("seed {seed}: regions differ"))?;
        nonempty += usize::from(!solved.is_empty());
    }
    let dt = t.elapsed();
    ensure(dt < Duration::from_secs(300), || format!("took {dt:?}"))?;
    Ok(format!(
        "{SEEDS} games, 0 mismatches, {nonempty} nonempty regions, {:.1} s",
        dt.as_secs_f64()
    ))
}

/// Machine for `g` started in its initial state if winning, else in the
/// first winning state.
fn machine_from_some_winning_state(g: &Game) -> Option<(Game, MealyMachine)> {
    let rec = main_streett(g);
    let start = if rec.winning.contains(g.initial() as usize) {
        g.initial()
    } else {
        rec.winning.iter().next()? as u32
    };
    let g = g.with_initial(start);
    let rec = main_streett(&g);
    let st = extract_strategy(&g, &rec).unwrap();
    let m = strategy_to_mealy(&g, &st).unwrap();
    Some((g, m))
}

fn criterion_2() -> Outcome {
    let mut checked = 0;
    for seed in 0..SEEDS {
        let g = random_game(seed, RandomGameParams::default());
        if let Some((g, m)) = machine_from_some_winning_state(&g) {
            let v = check_strategy_sound(&g, &m).map_err(|e| format!("seed {seed}: {e}"))?;
            ensure(v.is_sound(), || format!("seed {seed}: {v:?}"))?;
            checked += 1;
        }
    }
    for name in ["arbiter2.spec", "handshake.spec"] {
        for mode in [BuildMode::Robust, BuildMode::Plain] {
            let syn = synth_fixture(name, mode);
            let m = machine_of(&syn)?;
            let v = check_strategy_sound(&syn.game, m).map_err(|e| e.to_string())?;
            ensure(v.is_sound(), || format!("{name} {mode}: {v:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} machines sound, 0 violations"))
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let syn = synth_fixture("arbiter2.spec", BuildMode::Robust);
    let m = machine_of(&syn)?;
    let mut worst = 0;
    for seed in 0..50 {
        let mut directives = vec![Directive::Legal; 20];
        directives.push(Directive::Input(0b11));
        directives.push(Directive::Legal);
        let script = EnvScript::new(directives, seed);
        let trace = simulate(m, &syn.game, &script, 80).map_err(|e| e.to_string())?;
        let r = recovery_metric(&trace);
        ensure(r.env_errors == 1, || {
            format!("seed {seed}: {} env errors", r.env_errors)
        })?;
        ensure(r.sys_errors <= m.num_states(), || {
            format!(
                "seed {seed}: {} sys errors exceed the hard bound",
                r.sys_errors
            )
        })?;
        ensure(r.sys_errors <= 1, || {
            format!("seed {seed}: {} sys errors", r.sys_errors)
        })?;
        worst = worst.max(r.sys_errors);
    }
    let dt = t.elapsed();
    ensure(dt < Duration::from_secs(10), || format!("took {dt:?}"))?;
    Ok(format!(
        "realizable, {} machine states, 50 runs with envErrors=1 and sysErrors<={worst}",
        m.num_states()
    ))
}

/// Reachable cycles of the closed loop that stay in `ok_e` states and pass
/// through a `!ok_s` state. Independent of the pair machinery.
fn has_trap_lasso(g: &Game, m: &MealyMachine) -> Result<bool, String> {
    let p = closed_loop(g, m).map_err(|e| e.to_string())?;
    let n = p.nodes.len();
    let kind = |v: usize| *g.kind(p.nodes[v].game as usize);
    let inside: Vec<bool> = (0..n).map(|v| kind(v).ok_e()).collect();
    for u in (0..n).filter(|&u| inside[u] && !kind(u).ok_s()) {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = vec![u];
        while let Some(v) = stack.pop() {
            for &(_, w) in &p.edges[v] {
                let w = w as usize;
                if w == u {
                    return Ok(true);
                }
                if inside[w] && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
    }
    Ok(false)
}

fn criterion_4() -> Outcome {
    let syn = synth_fixture("arbiter2.spec", BuildMode::Robust);
    let m = machine_of(&syn)?;
    let v = check_strategy_sound(&syn.game, m).map_err(|e| e.to_string())?;
    ensure(v.is_sound(), || format!("synthesized machine: {v:?}"))?;
    ensure(!has_trap_lasso(&syn.game, m)?, || {
        "synthesized machine has a trap lasso".into()
    })?;

    let trap =
        machine_from_json(&fs::read_to_string(fixture("arbiter2_trap.machine.json")).unwrap())
            .map_err(|e| e.to_string())?;
    let v = check_strategy_sound(&syn.game, &trap).map_err(|e| e.to_string())?;
    let Verdict::Violation { pair, cycle, .. } = v else {
        return Err("trap machine judged sound".into());
    };
    ensure(pair == 1, || format!("trap machine violates pair {pair}"))?;
    ensure(has_trap_lasso(&syn.game, &trap)?, || {
        "trap lasso not found".into()
    })?;
    Ok(format!(
        "synthesized machine has no trap lasso; trap fixture caught on pair 2 with a {}-step cycle",
        cycle.len()
    ))
}

fn criterion_5() -> Outcome {
    let syn = synth_fixture("handshake.spec", BuildMode::Robust);
    let g = &syn.game;
    let m = machine_of(&syn)?;
    ensure(g.pairs().len() == 2, || {
        format!("{} pairs", g.pairs().len())
    })?;
    let n = g.num_states();
    let reg = |s: usize| {
        *g.kind(s)
            .regular()
            .expect("robust games have regular states")
    };
    let set = |f: &dyn Fn(usize) -> bool| StateSet::from_fn(n, f);
    ensure(g.pairs()[0].a == set(&|s| reg(s).x == 0), || {
        "a_1 differs".into()
    })?;
    ensure(g.pairs()[0].b == set(&|s| reg(s).y == 0), || {
        "b_1 differs".into()
    })?;
    ensure(g.pairs()[1].a == set(&|s| !reg(s).ok_s), || {
        "a_2 differs".into()
    })?;
    ensure(g.pairs()[1].b == set(&|s| !reg(s).ok_e), || {
        "b_2 differs".into()
    })?;

    // {x=0} is entered exactly on letters meeting the assumption, {y=0} on
    // letters meeting the guarantee.
    let assumption = |r: bool, gr: bool| !(r && gr);
    let guarantee = |r: bool, gr: bool| (r && gr) || (!r && !gr);
    for s in 0..n {
        for i in 0..2u64 {
            for mv in g.moves(s, i) {
                let (from, to) = (reg(s), reg(mv.target as usize));
                let (r, gr) = (i & 1 == 1, mv.choice.output & 1 == 1);
                let want_x = from.x == 1 && assumption(r, gr);
                let want_y = from.y == 1 && guarantee(r, gr);
                ensure((to.x == 0) == want_x, || {
                    format!("x step at state {s} input {i}")
                })?;
                ensure((to.y == 0) == want_y, || {
                    format!("y step at state {s} input {i}")
                })?;
            }
        }
    }

    let bound = m.num_states();
    let mut worst = 0;
    for seed in 0..10 {
        let trace = simulate(m, g, &EnvScript::legal(seed), 1000).map_err(|e| e.to_string())?;
        let mut gap = 0usize;
        let mut hits = 0;
        for st in &trace.steps {
            ensure(st.ok_e && st.ok_s, || {
                format!("seed {seed}: error flag under a legal run")
            })?;
            gap += 1;
            if guarantee(st.input & 1 == 1, st.output & 1 == 1) {
                worst = worst.max(gap);
                gap = 0;
                hits += 1;
            }
        }
        worst = worst.max(gap);
        ensure(hits > 0, || format!("seed {seed}: guarantee never met"))?;
    }
    ensure(worst <= bound, || {
        format!("gap {worst} exceeds {bound} machine states")
    })?;
    Ok(format!(
        "realizable, pairs as expected, 10 x 1000 steps, worst gap {worst} <= {bound}"
    ))
}

fn criterion_6() -> Outcome {
    let bits: Vec<u32> = [(0, 0), (1, 1), (2, 3), (3, 7)]
        .iter()
        .map(|&(m, n)| counter_bits(m, n))
        .collect();
    ensure(bits == [0, 2, 4, 5], || format!("counter bits {bits:?}"))?;
    let mut rows = 0;
    for bound in 0..=8u32 {
        for c in 0..=bound {
            for sat in [false, true] {
                let want = if c == 0 || sat {
                    if c == bound {
                        0
                    } else {
                        c + 1
                    }
                } else {
                    c
                };
                let got = step_counter(c, bound, sat);
                ensure(got == want, || {
                    format!("step_counter({c}, {bound}, {sat}) = {got}")
                })?;
                rows += 1;
            }
        }
    }
    // frozen table for bound 2: (c, satisfied) -> next
    let table = [
        ((0, false), 1),
        ((0, true), 1),
        ((1, false), 1),
        ((1, true), 2),
        ((2, false), 2),
        ((2, true), 0),
    ];
    for ((c, sat), next) in table {
        ensure(step_counter(c, 2, sat) == next, || {
            format!("bound 2 row ({c}, {sat})")
        })?;
    }
    Ok(format!("bits {bits:?}, {rows} step_counter rows"))
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let mut rows = Vec::new();
    for n in 2..=5 {
        let plain = bench_row(
            BenchSpec::Arbiter(n),
            BuildMode::Plain,
            DEFAULT_STATE_CAP,
            5,
        )?;
        let robust = bench_row(
            BenchSpec::Arbiter(n),
            BuildMode::Robust,
            DEFAULT_STATE_CAP,
            5,
        )?;
        ensure(plain.realizable && robust.realizable, || {
            format!("N={n} unrealizable")
        })?;
        ensure(robust.verilog_lines >= plain.verilog_lines, || {
            format!(
                "N={n}: {} robust lines < {} plain",
                robust.verilog_lines, plain.verilog_lines
            )
        })?;
        ensure(robust.solve_ms >= plain.solve_ms, || {
            format!(
                "N={n}: robust solve {} ms < plain {} ms",
                robust.solve_ms, plain.solve_ms
            )
        })?;
        rows.push(plain);
        rows.push(robust);
    }
    let csv = to_csv(&rows);
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join("arbiter_bench.csv");
    fs::write(&path, &csv).map_err(|e| e.to_string())?;
    let dt = t.elapsed();
    ensure(dt < Duration::from_secs(120), || format!("took {dt:?}"))?;
    Ok(format!("N=2..5 trend holds, CSV at {}", path.display()))
}

fn criterion_8() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_gr1rs");
    let outputs = ["m.v", "m.dot", "m.json", "g.json", "r.json"];
    let mut compared = 0;
    for name in ["arbiter2.spec", "handshake.spec"] {
        for mode in ["--robust", "--plain"] {
            let mut runs = Vec::new();
            for _ in 0..2 {
                let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
                let d = |f: &str| dir.path().join(f);
                let status = Command::new(bin)
                    .arg("synth")
                    .arg(fixture(name))
                    .arg(mode)
                    .args(["-o".as_ref(), d("m.v").as_os_str()])
                    .args(["--dot".as_ref(), d("m.dot").as_os_str()])
                    .args(["--dump".as_ref(), d("m.json").as_os_str()])
                    .args(["--game-dump".as_ref(), d("g.json").as_os_str()])
                    .args(["--record-dump".as_ref(), d("r.json").as_os_str()])
                    .output()
                    .map_err(|e| e.to_string())?
                    .status;
                ensure(status.success(), || format!("{name} {mode}: {status}"))?;
                let files: Vec<Vec<u8>> = outputs.iter().map(|f| fs::read(d(f)).unwrap()).collect();
                runs.push(files);
            }
            for (k, f) in outputs.iter().enumerate() {
                ensure(runs[0][k] == runs[1][k], || {
                    format!("{name} {mode}: {f} differs")
                })?;
                compared += 1;
            }
        }
    }
    Ok(format!(
        "{compared} output files byte-identical across runs"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", criterion_1),
        ("strategy soundness", criterion_2),
        ("arbiter recovery", criterion_3),
        ("no trap lasso", criterion_4),
        ("handshake", criterion_5),
        ("counter arithmetic", criterion_6),
        ("bench trend", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {detail}", k + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
