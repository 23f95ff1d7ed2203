//! Specification to machine: build, solve, extract, emit.

use std::fmt;
use std::time::{Duration, Instant};

use gr1_core::emit::{emit_dot, emit_verilog, EmitError};
use gr1_core::game::{build_game, BuildMode, BuildOptions, Game, GameError, DEFAULT_STATE_CAP};
use gr1_core::solver::{main_streett, IterateRecord};
use gr1_core::spec::Gr1Spec;
use gr1_core::strategy::{
    extract_strategy, strategy_to_mealy, MealyMachine, StrategyError, SynthesisError,
};

/// Environment variable overriding the game state cap.
pub const STATE_CAP_VAR: &str = "GR1RS_STATE_CAP";

/// The state cap from `GR1RS_STATE_CAP`, or the default.
pub fn state_cap_from_env() -> Result<usize, String> {
    match std::env::var(STATE_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| format!("{STATE_CAP_VAR} must be a positive integer, got `{v}`")),
        Err(_) => Ok(DEFAULT_STATE_CAP),
    }
}

#[derive(Debug)]
pub enum PipelineError {
    Game(GameError),
    Strategy(StrategyError),
    Emit(EmitError),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Game(e) => write!(f, "game construction failed: {e}"),
            PipelineError::Strategy(e) => write!(f, "strategy extraction failed: {e}"),
            PipelineError::Emit(e) => write!(f, "emission failed: {e}"),
        }
    }
}

impl std::error::Error for PipelineError {}

#[derive(Debug, Clone, Copy, Default)]
pub struct Timings {
    pub build: Duration,
    pub solve: Duration,
    pub extract: Duration,
    pub emit: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.build + self.solve + self.extract + self.emit
    }
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub game: Game,
    pub record: IterateRecord,
    /// `Ok` with the machine and its Verilog/DOT text, or the reason the
    /// initial state is losing.
    pub outcome: Result<Emitted, SynthesisError>,
    pub timings: Timings,
}

#[derive(Debug, Clone)]
pub struct Emitted {
    pub machine: MealyMachine,
    pub verilog: String,
    pub dot: String,
}

impl Synthesis {
    pub fn realizable(&self) -> bool {
        self.outcome.is_ok()
    }

    pub fn emitted(&self) -> Option<&Emitted> {
        self.outcome.as_ref().ok()
    }
}

pub fn synthesize(
    spec: &Gr1Spec,
    mode: BuildMode,
    state_cap: usize,
    module: &str,
) -> Result<Synthesis, PipelineError> {
    let mut timings = Timings::default();
    let t = Instant::now();
    let game = build_game(spec, BuildOptions { mode, state_cap }).map_err(PipelineError::Game)?;
    timings.build = t.elapsed();

    let t = Instant::now();
    let record = main_streett(&game);
    timings.solve = t.elapsed();

    let t = Instant::now();
    let machine = if record.winning.contains(game.initial() as usize) {
        let st = extract_strategy(&game, &record).map_err(PipelineError::Strategy)?;
        match strategy_to_mealy(&game, &st) {
            Ok(m) => Ok(m),
            Err(SynthesisError::Strategy(e)) => return Err(PipelineError::Strategy(e)),
            Err(e) => Err(e),
        }
    } else {
        let witness = gr1_core::expr::lex_valuations(game.inputs().len(), 0).find(|&i| {
            game.successors(game.initial() as usize, i)
                .iter()
                .all(|&s| !record.winning.contains(s as usize))
        });
        Err(SynthesisError::Unrealizable {
            initial: game.initial(),
            witness,
            winning: record.winning.clone(),
        })
    };
    timings.extract = t.elapsed();

    let t = Instant::now();
    let outcome = match machine {
        Ok(machine) => {
            let verilog = emit_verilog(&machine, module).map_err(PipelineError::Emit)?;
            let dot = emit_dot(&machine, module);
            Ok(Emitted {
                machine,
                verilog,
                dot,
            })
        }
        Err(e) => Err(e),
    };
    timings.emit = t.elapsed();
    Ok(Synthesis {
        game,
        record,
        outcome,
        timings,
    })
}
