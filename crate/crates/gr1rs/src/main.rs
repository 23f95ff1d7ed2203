use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gr1_core::emit::{emit_game_dot, is_verilog_identifier, line_count};
use gr1_core::expr::format_valuation;
use gr1_core::game::BuildMode;
use gr1_core::oracle::{check_strategy_sound, Verdict};
use gr1_core::sim::{recovery_metric, simulate};
use gr1_core::strategy::SynthesisError;
use gr1rs::bench::{bench_row, to_csv, BenchSpec};
use gr1rs::dump::{
    game_from_json, game_to_json, machine_from_json, machine_to_json, record_to_json,
    report_to_json, verdict_to_json,
};
use gr1rs::pipeline::{state_cap_from_env, synthesize};
use gr1rs::script::parse_script;
use gr1rs::spec_format::parse_spec;

const EXIT_UNREALIZABLE: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "gr1rs", version, about = "Robust GR(1) synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
#[group(multiple = false)]
struct ModeFlags {
    /// Complete the safety automata with error edges (default).
    #[arg(long)]
    robust: bool,
    /// Treat safety violations as absorbing.
    #[arg(long)]
    plain: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a controller from a specification file.
    Synth {
        spec: PathBuf,
        #[command(flatten)]
        mode: ModeFlags,
        /// Verilog output.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        /// Graphviz rendering of the machine.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// JSON dump of the machine.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// JSON dump of the game.
        #[arg(long)]
        game_dump: Option<PathBuf>,
        /// Graphviz rendering of the game, winning states highlighted.
        #[arg(long)]
        game_dot: Option<PathBuf>,
        /// JSON dump of the solver iterates.
        #[arg(long)]
        record_dump: Option<PathBuf>,
        /// Verilog module name; defaults to the file stem.
        #[arg(long)]
        name: Option<String>,
    },
    /// Print a generated benchmark specification.
    Gen {
        #[arg(
            long,
            conflicts_with = "handshake",
            required_unless_present = "handshake"
        )]
        arbiter: Option<usize>,
        #[arg(long)]
        handshake: bool,
    },
    /// Synthesize benchmark specifications and tabulate size and time.
    Bench {
        /// Number of clients, or a range such as `2..5`.
        #[arg(
            long,
            conflicts_with = "handshake",
            required_unless_present = "handshake"
        )]
        arbiter: Option<String>,
        #[arg(long)]
        handshake: bool,
        #[arg(long)]
        robust: bool,
        #[arg(long)]
        plain: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Repetitions per row; the fastest is reported.
        #[arg(long, default_value_t = 1)]
        reps: usize,
    },
    /// Run a machine against its game under an environment script.
    Simulate {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON report output.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Model-check a machine against every pair of its game.
    Verify {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

type CmdResult = Result<ExitCode, String>;

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn mode_of(flags: ModeFlags) -> BuildMode {
    if flags.plain {
        BuildMode::Plain
    } else {
        BuildMode::Robust
    }
}

fn module_name(spec: &Path, name: Option<String>) -> String {
    if let Some(n) = name {
        return n;
    }
    let stem: String = spec
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    if is_verilog_identifier(&stem) {
        stem
    } else {
        "controller".into()
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    spec_path: &Path,
    mode: BuildMode,
    output: Option<PathBuf>,
    dot: Option<PathBuf>,
    dump: Option<PathBuf>,
    game_dump: Option<PathBuf>,
    game_dot: Option<PathBuf>,
    record_dump: Option<PathBuf>,
    name: Option<String>,
) -> CmdResult {
    let text = read(spec_path)?;
    let spec = parse_spec(&text).map_err(|e| format!("{}:{e}", spec_path.display()))?;
    let cap = state_cap_from_env()?;
    let module = module_name(spec_path, name);
    let syn = synthesize(&spec, mode, cap, &module).map_err(|e| e.to_string())?;

    if let Some(p) = &game_dump {
        write(p, &game_to_json(&syn.game))?;
    }
    if let Some(p) = &game_dot {
        write(
            p,
            &emit_game_dot(&syn.game, &module, Some(&syn.record.winning)),
        )?;
    }
    if let Some(p) = &record_dump {
        write(p, &record_to_json(&syn.record))?;
    }
    println!("mode: {mode}");
    println!("game states: {}", syn.game.num_states());
    println!("winning states: {}", syn.record.winning.count());
    match &syn.outcome {
        Ok(e) => {
            println!("realizable: yes");
            println!("machine states: {}", e.machine.num_states());
            println!("verilog lines: {}", line_count(&e.verilog));
            if let Some(p) = &output {
                write(p, &e.verilog)?;
            }
            if let Some(p) = &dot {
                write(p, &e.dot)?;
            }
            if let Some(p) = &dump {
                write(p, &machine_to_json(&e.machine))?;
            }
        }
        Err(SynthesisError::Unrealizable { witness, .. }) => {
            println!("realizable: no");
            if let Some(i) = witness {
                println!(
                    "losing input at the initial state: {}",
                    format_valuation(*i, syn.game.inputs())
                );
            }
        }
        Err(e) => return Err(e.to_string()),
    }
    let t = syn.timings;
    println!(
        "time: build {:.3} ms, solve {:.3} ms, extract {:.3} ms, emit {:.3} ms",
        t.build.as_secs_f64() * 1e3,
        t.solve.as_secs_f64() * 1e3,
        t.extract.as_secs_f64() * 1e3,
        t.emit.as_secs_f64() * 1e3
    );
    Ok(if syn.realizable() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_UNREALIZABLE)
    })
}

fn parse_range(s: &str) -> Result<Vec<usize>, String> {
    let bad = || format!("invalid client count `{s}`, expected N or A..B");
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            )
        }
        None => {
            let n: usize = s.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

fn cmd_bench(
    arbiter: Option<String>,
    handshake: bool,
    robust: bool,
    plain: bool,
    csv: Option<PathBuf>,
    reps: usize,
) -> CmdResult {
    let specs: Vec<BenchSpec> = if handshake {
        vec![BenchSpec::Handshake]
    } else {
        let ns = parse_range(arbiter.as_deref().unwrap_or_default())?;
        if let Some(&n) = ns.iter().find(|&&n| n < 2) {
            return Err(format!("the arbiter needs at least 2 clients, got {n}"));
        }
        ns.into_iter().map(BenchSpec::Arbiter).collect()
    };
    let modes: Vec<BuildMode> = match (robust, plain) {
        (true, false) => vec![BuildMode::Robust],
        (false, true) => vec![BuildMode::Plain],
        _ => vec![BuildMode::Plain, BuildMode::Robust],
    };
    let cap = state_cap_from_env()?;
    let mut rows = Vec::new();
    for spec in specs {
        for &mode in &modes {
            rows.push(bench_row(spec, mode, cap, reps)?);
        }
    }
    let table = to_csv(&rows);
    match csv {
        Some(p) => write(&p, &table)?,
        None => print!("{table}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(
    machine: &Path,
    game: &Path,
    script: &Path,
    steps: usize,
    seed: u64,
    json: Option<PathBuf>,
) -> CmdResult {
    let m =
        machine_from_json(&read(machine)?).map_err(|e| format!("{}: {e}", machine.display()))?;
    let g = game_from_json(&read(game)?).map_err(|e| format!("{}: {e}", game.display()))?;
    let s = parse_script(&read(script)?, m.inputs(), seed)
        .map_err(|e| format!("{}: {e}", script.display()))?;
    let trace = simulate(&m, &g, &s, steps).map_err(|e| e.to_string())?;
    let report = recovery_metric(&trace);
    println!(
        "{:>6}  {:<24} {:<24} {:>4} {:>4}",
        "step", "input", "output", "okE", "okS"
    );
    for (k, st) in trace.steps.iter().enumerate() {
        println!(
            "{:>6}  {:<24} {:<24} {:>4} {:>4}",
            k,
            format_valuation(st.input, m.inputs()),
            format_valuation(st.output, m.outputs()),
            u8::from(st.ok_e),
            u8::from(st.ok_s)
        );
    }
    println!(
        "env errors: {}, sys errors: {}, worst recovery: {}, ratio: {:.3}",
        report.env_errors, report.sys_errors, report.worst_recovery, report.ratio
    );
    if let Some(p) = json {
        write(&p, &report_to_json(&report, &trace))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(machine: &Path, game: &Path, json: Option<PathBuf>) -> CmdResult {
    let m =
        machine_from_json(&read(machine)?).map_err(|e| format!("{}: {e}", machine.display()))?;
    let g = game_from_json(&read(game)?).map_err(|e| format!("{}: {e}", game.display()))?;
    let verdict = check_strategy_sound(&g, &m).map_err(|e| e.to_string())?;
    if let Some(p) = json {
        write(&p, &verdict_to_json(&verdict))?;
    }
    match &verdict {
        Verdict::Sound => {
            println!("sound");
            Ok(ExitCode::SUCCESS)
        }
        Verdict::Violation {
            pair,
            prefix,
            cycle,
        } => {
            println!("violation of pair {}", pair + 1);
            for (label, steps) in [("prefix", prefix), ("cycle", cycle)] {
                println!("{label}:");
                for st in steps.iter() {
                    let kind = g.kind(st.state.game as usize);
                    println!(
                        "  machine {} game {} okE={} okS={} input {}",
                        st.state.machine,
                        st.state.game,
                        u8::from(kind.ok_e()),
                        u8::from(kind.ok_s()),
                        format_valuation(st.input, g.inputs())
                    );
                }
            }
            Ok(ExitCode::from(EXIT_VIOLATION))
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Synth {
            spec,
            mode,
            output,
            dot,
            dump,
            game_dump,
            game_dot,
            record_dump,
            name,
        } => cmd_synth(
            &spec,
            mode_of(mode),
            output,
            dot,
            dump,
            game_dump,
            game_dot,
            record_dump,
            name,
        ),
        Command::Gen { arbiter, handshake } => {
            let spec = if handshake {
                BenchSpec::Handshake
            } else {
                BenchSpec::Arbiter(arbiter.unwrap_or_default())
            };
            print!("{}", spec.text()?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            arbiter,
            handshake,
            robust,
            plain,
            csv,
            reps,
        } => cmd_bench(arbiter, handshake, robust, plain, csv, reps),
        Command::Simulate {
            machine,
            game,
            script,
            steps,
            seed,
            json,
        } => cmd_simulate(&machine, &game, &script, steps, seed, json),
        Command::Verify {
            machine,
            game,
            json,
        } => cmd_verify(&machine, &game, json),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
