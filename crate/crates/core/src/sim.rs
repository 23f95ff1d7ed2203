//! Closed-loop simulation of a machine against its game, with scripted
//! environment errors and recovery statistics.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::game::{Game, Move};
use crate::strategy::{MachineTransition, MealyMachine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Directive {
    /// A fixed input valuation, bit `j` = input `j`.
    Input(u64),
    /// Uniform over inputs that keep the environment automaton alive.
    Legal,
    /// Uniform over inputs that violate the environment automaton.
    Violate,
}

/// Per-step directives; the last one repeats for the rest of the run.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnvScript {
    pub directives: Vec<Directive>,
    pub seed: u64,
}

impl EnvScript {
    pub fn new(directives: Vec<Directive>, seed: u64) -> Self {
        EnvScript { directives, seed }
    }

    pub fn legal(seed: u64) -> Self {
        EnvScript::new(alloc::vec![Directive::Legal], seed)
    }

    fn at(&self, step: usize) -> Option<Directive> {
        self.directives
            .get(step)
            .or(self.directives.last())
            .copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceStep {
    pub input: u64,
    pub output: u64,
    /// Machine state before and after the step.
    pub from: u32,
    pub to: u32,
    /// Game state entered by the step.
    pub game_state: u32,
    pub ok_e: bool,
    pub ok_s: bool,
    pub x: u32,
    pub y: u32,
    pub row: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimError {
    ZeroSteps,
    EmptyScript,
    BadInput {
        step: usize,
        input: u64,
    },
    /// A `violate` directive where every input keeps the environment legal.
    ViolationImpossible {
        step: usize,
    },
    NoLegalInput {
        step: usize,
    },
    /// The machine and the game disagree on a state or move.
    ProductMismatch {
        step: usize,
        machine_state: u32,
        game_state: u32,
    },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::ZeroSteps => f.write_str("simulation needs at least one step"),
            SimError::EmptyScript => f.write_str("environment script has no directives"),
            SimError::BadInput { step, input } => {
                write!(f, "step {step}: input valuation {input} out of range")
            }
            SimError::ViolationImpossible { step } => write!(
                f,
                "step {step}: scripted violation impossible, every input is legal"
            ),
            SimError::NoLegalInput { step } => write!(f, "step {step}: no legal input exists"),
            SimError::ProductMismatch {
                step,
                machine_state,
                game_state,
            } => write!(
                f,
                "step {step}: machine state {machine_state} does not match game state {game_state}"
            ),
        }
    }
}

impl core::error::Error for SimError {}

/// Game moves a machine transition may correspond to. A transition that
/// names no recovery matches every move with its output when the game
/// requires one.
pub fn matching_moves<'g>(
    g: &'g Game,
    s: usize,
    input: u64,
    t: &MachineTransition,
) -> impl Iterator<Item = Move> + 'g {
    let choice = t.choice();
    let exact = g.moves(s, input).any(|m| m.choice == choice);
    let loose = choice.env_recover.is_none() && choice.sys_recover.is_none();
    g.moves(s, input).filter(move |m| {
        if exact {
            m.choice == choice
        } else {
            loose && m.choice.output == choice.output
        }
    })
}

/// Runs `mach` in closed loop with `g` for `steps` steps. Flags and counters
/// are those of the game state entered at each step.
pub fn simulate(
    mach: &MealyMachine,
    g: &Game,
    script: &EnvScript,
    steps: usize,
) -> Result<Trace, SimError> {
    if steps == 0 {
        return Err(SimError::ZeroSteps);
    }
    if script.directives.is_empty() {
        return Err(SimError::EmptyScript);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let ni = mach.num_inputs() as u64;
    let mut q = mach.initial();
    let mut s = g.initial();
    let mut trace = Trace::default();
    for step in 0..steps {
        let mismatch = |q: u32, s: u32| SimError::ProductMismatch {
            step,
            machine_state: q,
            game_state: s,
        };
        if mach.states()[q as usize]
            .game_state
            .is_some_and(|gs| gs != s)
            || ni != g.num_inputs() as u64
        {
            return Err(mismatch(q, s));
        }
        let succ = |input: u64| -> Result<u32, SimError> {
            let t = mach.transition(q as usize, input);
            matching_moves(g, s as usize, input, t)
                .next()
                .map(|m| m.target)
                .ok_or(mismatch(q, s))
        };
        let input = match script.at(step).expect("script is nonempty") {
            Directive::Input(i) => {
                if i >= ni {
                    return Err(SimError::BadInput { step, input: i });
                }
                i
            }
            d => {
                let want_legal = d == Directive::Legal;
                let mut pool = Vec::new();
                for i in 0..ni {
                    if g.kind(succ(i)? as usize).ok_e() == want_legal {
                        pool.push(i);
                    }
                }
                if pool.is_empty() {
                    return Err(if want_legal {
                        SimError::NoLegalInput { step }
                    } else {
                        SimError::ViolationImpossible { step }
                    });
                }
                pool[rng.gen_range(0..pool.len())]
            }
        };
        let t = *mach.transition(q as usize, input);
        let target = succ(input)?;
        let kind = g.kind(target as usize);
        let (x, y) = kind.regular().map_or((0, 0), |r| (r.x, r.y));
        trace.steps.push(TraceStep {
            input,
            output: t.output,
            from: q,
            to: t.next,
            game_state: target,
            ok_e: kind.ok_e(),
            ok_s: kind.ok_s(),
            x,
            y,
            row: t.row,
        });
        q = t.next;
        s = target;
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Injection {
    /// Step of the environment error.
    pub step: usize,
    /// `ok_s = false` steps from the injection up to the next one.
    pub sys_errors: usize,
    /// First step from which `ok_s` stays true up to the next injection or
    /// the horizon; `None` if the window ends in an error.
    pub recovered_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub env_errors: usize,
    pub sys_errors: usize,
    pub worst_recovery: usize,
    pub per_injection: Vec<Injection>,
    /// `sys_errors / max(1, env_errors)`.
    pub ratio: f64,
}

pub fn recovery_metric(t: &Trace) -> RecoveryReport {
    let env_errors = t.steps.iter().filter(|s| !s.ok_e).count();
    let sys_errors = t.steps.iter().filter(|s| !s.ok_s).count();
    let starts: Vec<usize> = (0..t.steps.len()).filter(|&k| !t.steps[k].ok_e).collect();
    let per_injection: Vec<Injection> = starts
        .iter()
        .enumerate()
        .map(|(n, &step)| {
            let end = starts.get(n + 1).copied().unwrap_or(t.steps.len());
            let window = &t.steps[step..end];
            let sys_errors = window.iter().filter(|s| !s.ok_s).count();
            let recovered_at = match window.iter().rposition(|s| !s.ok_s) {
                None => Some(step),
                Some(last) if step + last + 1 < end => Some(step + last + 1),
                Some(_) => None,
            };
            Injection {
                step,
                sys_errors,
                recovered_at,
            }
        })
        .collect();
    RecoveryReport {
        env_errors,
        sys_errors,
        worst_recovery: per_injection
            .iter()
            .map(|i| i.sys_errors)
            .max()
            .unwrap_or(0),
        per_injection,
        ratio: sys_errors as f64 / env_errors.max(1) as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn step(ok_e: bool, ok_s: bool) -> TraceStep {
        TraceStep {
            input: 0,
            output: 0,
            from: 0,
            to: 0,
            game_state: 0,
            ok_e,
            ok_s,
            x: 0,
            y: 0,
            row: None,
        }
    }

    #[test]
    fn clean_trace_reports_zero() {
        let t = Trace {
            steps: vec![step(true, true); 10],
        };
        let r = recovery_metric(&t);
        assert_eq!((r.env_errors, r.sys_errors, r.worst_recovery), (0, 0, 0));
        assert!(r.per_injection.is_empty());
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn one_error_each() {
        let mut steps = vec![step(true, true); 10];
        steps[5].ok_e = false;
        steps[6].ok_s = false;
        let r = recovery_metric(&Trace { steps });
        assert_eq!((r.env_errors, r.sys_errors, r.worst_recovery), (1, 1, 1));
        assert_eq!(
            r.per_injection,
            [Injection {
                step: 5,
                sys_errors: 1,
                recovered_at: Some(7)
            }]
        );
        assert_eq!(r.ratio, 1.0);
    }

    #[test]
    fn error_at_horizon_is_unrecovered() {
        let mut steps = vec![step(true, true); 4];
        steps[1].ok_e = false;
        steps[3].ok_s = false;
        let r = recovery_metric(&Trace { steps });
        assert_eq!(r.per_injection[0].recovered_at, None);
    }

    #[test]
    fn script_repeats_last_directive() {
        let s = EnvScript::new(vec![Directive::Violate, Directive::Legal], 0);
        assert_eq!(s.at(0), Some(Directive::Violate));
        assert_eq!(s.at(7), Some(Directive::Legal));
    }
}
