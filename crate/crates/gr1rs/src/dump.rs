//! JSON dumps of games, machines, solver records and recovery reports.
//!
//! Field order is fixed by the structs below and state sets are written as
//! ascending index arrays, so equal inputs produce identical bytes.

use std::fmt;

use gr1_core::game::{
    BuildMode, Game, GameState, Move, SpecInfo, StateKind, StreettPair, SysChoice,
};
use gr1_core::oracle::{LassoStep, Verdict};
use gr1_core::sim::{RecoveryReport, Trace};
use gr1_core::solver::{IterateRecord, SubRecord};
use gr1_core::stateset::StateSet;
use gr1_core::strategy::{Annotation, MachineState, MachineTransition, MealyMachine};
use serde::{Deserialize, Serialize};

pub const GAME_FORMAT: &str = "gr1rs-game";
pub const MACHINE_FORMAT: &str = "gr1rs-machine";

#[derive(Debug)]
pub enum DumpError {
    Json(serde_json::Error),
    Format {
        expected: &'static str,
        found: String,
    },
    Invalid(String),
}

impl fmt::Display for DumpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DumpError::Json(e) => write!(f, "malformed JSON: {e}"),
            DumpError::Format { expected, found } => {
                write!(f, "expected a `{expected}` dump, found `{found}`")
            }
            DumpError::Invalid(why) => write!(f, "invalid dump: {why}"),
        }
    }
}

impl std::error::Error for DumpError {}

impl From<serde_json::Error> for DumpError {
    fn from(e: serde_json::Error) -> Self {
        DumpError::Json(e)
    }
}

fn set_to_vec(s: &StateSet) -> Vec<u32> {
    s.iter().map(|k| k as u32).collect()
}

fn vec_to_set(v: &[u32], n: usize) -> Result<StateSet, DumpError> {
    if let Some(&bad) = v.iter().find(|&&k| k as usize >= n) {
        return Err(DumpError::Invalid(format!("state {bad} out of range")));
    }
    Ok(StateSet::from_indices(n, v.iter().map(|&k| k as usize)))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("dump types serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameDump {
    pub format: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SpecInfoDump>,
    pub initial: u32,
    pub states: Vec<GameStateDump>,
    pub pairs: Vec<PairDump>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecInfoDump {
    pub mode: String,
    pub m: u32,
    pub n: u32,
    pub env_states: Vec<String>,
    pub sys_states: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameStateDump {
    pub id: u32,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qe: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qs: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<u32>,
    pub ok_e: bool,
    pub ok_s: bool,
    pub moves: Vec<MoveDump>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveDump {
    pub input: u64,
    pub output: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env_recover: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sys_recover: Option<u32>,
    pub target: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDump {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
}

pub fn game_dump(g: &Game) -> GameDump {
    let states = (0..g.num_states())
        .map(|s| {
            let kind = g.kind(s);
            let reg = kind.regular();
            let moves = (0..g.num_inputs() as u64)
                .flat_map(|input| {
                    g.moves(s, input).map(move |m| MoveDump {
                        input,
                        output: m.choice.output,
                        env_recover: m.choice.env_recover,
                        sys_recover: m.choice.sys_recover,
                        target: m.target,
                    })
                })
                .collect();
            GameStateDump {
                id: s as u32,
                kind: match kind {
                    StateKind::Regular(_) => "regular",
                    StateKind::WinSink => "win",
                    StateKind::LoseSink => "lose",
                    StateKind::Abstract => "abstract",
                }
                .into(),
                qe: reg.map(|r| r.qe),
                qs: reg.map(|r| r.qs),
                x: reg.map(|r| r.x),
                y: reg.map(|r| r.y),
                ok_e: kind.ok_e(),
                ok_s: kind.ok_s(),
                moves,
            }
        })
        .collect();
    GameDump {
        format: GAME_FORMAT.into(),
        inputs: g.inputs().to_vec(),
        outputs: g.outputs().to_vec(),
        spec: g.info().map(|i| SpecInfoDump {
            mode: i.mode.to_string(),
            m: i.m,
            n: i.n,
            env_states: i.env_states.clone(),
            sys_states: i.sys_states.clone(),
        }),
        initial: g.initial(),
        states,
        pairs: g
            .pairs()
            .iter()
            .map(|p| PairDump {
                a: set_to_vec(&p.a),
                b: set_to_vec(&p.b),
            })
            .collect(),
    }
}

pub fn game_to_json(g: &Game) -> String {
    to_json(&game_dump(g))
}

pub fn game_from_dump(d: &GameDump) -> Result<Game, DumpError> {
    if d.format != GAME_FORMAT {
        return Err(DumpError::Format {
            expected: GAME_FORMAT,
            found: d.format.clone(),
        });
    }
    let n = d.states.len();
    let ni = 1usize
        .checked_shl(d.inputs.len() as u32)
        .ok_or_else(|| DumpError::Invalid("too many inputs".into()))?;
    let mut kinds = Vec::with_capacity(n);
    let mut moves: Vec<Vec<Move>> = vec![Vec::new(); n * ni];
    for (k, st) in d.states.iter().enumerate() {
        if st.id as usize != k {
            return Err(DumpError::Invalid(format!("state {k} has id {}", st.id)));
        }
        let kind = match st.kind.as_str() {
            "regular" => {
                let field = |v: Option<u32>, name: &str| {
                    v.ok_or_else(|| DumpError::Invalid(format!("state {k} lacks `{name}`")))
                };
                StateKind::Regular(GameState {
                    qe: field(st.qe, "qe")?,
                    qs: field(st.qs, "qs")?,
                    x: field(st.x, "x")?,
                    y: field(st.y, "y")?,
                    ok_e: st.ok_e,
                    ok_s: st.ok_s,
                })
            }
            "win" => StateKind::WinSink,
            "lose" => StateKind::LoseSink,
            "abstract" => StateKind::Abstract,
            other => return Err(DumpError::Invalid(format!("unknown state kind `{other}`"))),
        };
        kinds.push(kind);
        for m in &st.moves {
            if m.input as usize >= ni {
                return Err(DumpError::Invalid(format!(
                    "state {k}: input {} out of range",
                    m.input
                )));
            }
            moves[k * ni + m.input as usize].push(Move {
                choice: SysChoice {
                    output: m.output,
                    env_recover: m.env_recover,
                    sys_recover: m.sys_recover,
                },
                target: m.target,
            });
        }
    }
    let mut pairs = Vec::new();
    for p in &d.pairs {
        pairs.push(StreettPair {
            a: vec_to_set(&p.a, n)?,
            b: vec_to_set(&p.b, n)?,
        });
    }
    let info = match &d.spec {
        None => None,
        Some(i) => Some(SpecInfo {
            mode: match i.mode.as_str() {
                "plain" => BuildMode::Plain,
                "robust" => BuildMode::Robust,
                other => return Err(DumpError::Invalid(format!("unknown mode `{other}`"))),
            },
            m: i.m,
            n: i.n,
            env_states: i.env_states.clone(),
            sys_states: i.sys_states.clone(),
        }),
    };
    Game::from_parts(
        d.inputs.clone(),
        d.outputs.clone(),
        kinds,
        d.initial,
        moves,
        pairs,
    )
    .map(|g| g.with_info(info))
    .map_err(|e| DumpError::Invalid(e.to_string()))
}

pub fn game_from_json(text: &str) -> Result<Game, DumpError> {
    game_from_dump(&serde_json::from_str(text)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineDump {
    pub format: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub initial: u32,
    pub states: Vec<MachineStateDump>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineStateDump {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game_state: Option<u32>,
    #[serde(default)]
    pub memory: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ok_e: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ok_s: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<u32>,
    /// One entry per input valuation, in ascending valuation order.
    pub transitions: Vec<MachineTransitionDump>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineTransitionDump {
    pub input: u64,
    pub output: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env_recover: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sys_recover: Option<u32>,
    pub next: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<u8>,
}

pub fn machine_dump(m: &MealyMachine) -> MachineDump {
    let states = m
        .states()
        .iter()
        .enumerate()
        .map(|(q, st)| MachineStateDump {
            id: q as u32,
            game_state: st.game_state,
            memory: st.memory,
            ok_e: st.annotation.map(|a| a.ok_e),
            ok_s: st.annotation.map(|a| a.ok_s),
            x: st.annotation.map(|a| a.x),
            y: st.annotation.map(|a| a.y),
            transitions: (0..m.num_inputs() as u64)
                .map(|input| {
                    let t = m.transition(q, input);
                    MachineTransitionDump {
                        input,
                        output: t.output,
                        env_recover: t.env_recover,
                        sys_recover: t.sys_recover,
                        next: t.next,
                        row: t.row,
                    }
                })
                .collect(),
        })
        .collect();
    MachineDump {
        format: MACHINE_FORMAT.into(),
        inputs: m.inputs().to_vec(),
        outputs: m.outputs().to_vec(),
        initial: m.initial(),
        states,
    }
}

pub fn machine_to_json(m: &MealyMachine) -> String {
    to_json(&machine_dump(m))
}

pub fn machine_from_dump(d: &MachineDump) -> Result<MealyMachine, DumpError> {
    if d.format != MACHINE_FORMAT {
        return Err(DumpError::Format {
            expected: MACHINE_FORMAT,
            found: d.format.clone(),
        });
    }
    let ni = 1u64
        .checked_shl(d.inputs.len() as u32)
        .ok_or_else(|| DumpError::Invalid("too many inputs".into()))?;
    let mut states = Vec::new();
    let mut transitions = Vec::new();
    for (k, st) in d.states.iter().enumerate() {
        if st.id as usize != k {
            return Err(DumpError::Invalid(format!("state {k} has id {}", st.id)));
        }
        let annotation = match (st.ok_e, st.ok_s, st.x, st.y) {
            (Some(ok_e), Some(ok_s), Some(x), Some(y)) => Some(Annotation { ok_e, ok_s, x, y }),
            (None, None, None, None) => None,
            _ => {
                return Err(DumpError::Invalid(format!(
                    "state {k} has partial annotations"
                )))
            }
        };
        states.push(MachineState {
            game_state: st.game_state,
            memory: st.memory,
            annotation,
        });
        let inputs: Vec<u64> = st.transitions.iter().map(|t| t.input).collect();
        if inputs != (0..ni).collect::<Vec<_>>() {
            return Err(DumpError::Invalid(format!(
                "state {k} must list one transition per input valuation, in order"
            )));
        }
        transitions.extend(st.transitions.iter().map(|t| MachineTransition {
            output: t.output,
            env_recover: t.env_recover,
            sys_recover: t.sys_recover,
            next: t.next,
            row: t.row,
        }));
    }
    MealyMachine::new(
        d.inputs.clone(),
        d.outputs.clone(),
        states,
        d.initial,
        transitions,
    )
    .map_err(|e| DumpError::Invalid(e.to_string()))
}

pub fn machine_from_json(text: &str) -> Result<MealyMachine, DumpError> {
    machine_from_dump(&serde_json::from_str(text)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordDump {
    pub winning: Vec<u32>,
    pub root: SubDump,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SubDump {
    Str {
        sng: Vec<u32>,
        rt: Vec<u32>,
        z: Vec<u32>,
        pairs: Vec<PairRecordDump>,
    },
    Mstr {
        sng: Vec<u32>,
        rt: Vec<u32>,
        region: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairRecordDump {
    pub pair: usize,
    pub target: Vec<u32>,
    pub iterates: Vec<IterateDump>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IterateDump {
    pub set: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sub: Option<Box<SubDump>>,
}

fn sub_dump(r: &SubRecord) -> SubDump {
    match r {
        SubRecord::MStr(m) => SubDump::Mstr {
            sng: set_to_vec(&m.sng),
            rt: set_to_vec(&m.rt),
            region: set_to_vec(&m.region),
        },
        SubRecord::Str(s) => SubDump::Str {
            sng: set_to_vec(&s.sng),
            rt: set_to_vec(&s.rt),
            z: set_to_vec(&s.z),
            pairs: s
                .pairs
                .iter()
                .map(|p| PairRecordDump {
                    pair: p.pair,
                    target: set_to_vec(&p.target),
                    iterates: p
                        .iterates
                        .iter()
                        .map(|it| IterateDump {
                            set: set_to_vec(&it.set),
                            sub: it.sub.as_deref().map(|s| Box::new(sub_dump(s))),
                        })
                        .collect(),
                })
                .collect(),
        },
    }
}

pub fn record_to_json(r: &IterateRecord) -> String {
    to_json(&RecordDump {
        winning: set_to_vec(&r.winning),
        root: sub_dump(&r.root),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDump {
    pub env_errors: usize,
    pub sys_errors: usize,
    pub worst_recovery: usize,
    pub ratio: f64,
    pub per_injection: Vec<InjectionDump>,
    pub trace: Vec<StepDump>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InjectionDump {
    pub step: usize,
    pub sys_errors: usize,
    pub recovered_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepDump {
    pub step: usize,
    pub input: u64,
    pub output: u64,
    pub state: u32,
    pub ok_e: bool,
    pub ok_s: bool,
    pub x: u32,
    pub y: u32,
}

pub fn report_to_json(report: &RecoveryReport, trace: &Trace) -> String {
    to_json(&ReportDump {
        env_errors: report.env_errors,
        sys_errors: report.sys_errors,
        worst_recovery: report.worst_recovery,
        ratio: report.ratio,
        per_injection: report
            .per_injection
            .iter()
            .map(|i| InjectionDump {
                step: i.step,
                sys_errors: i.sys_errors,
                recovered_at: i.recovered_at,
            })
            .collect(),
        trace: trace
            .steps
            .iter()
            .enumerate()
            .map(|(k, s)| StepDump {
                step: k,
                input: s.input,
                output: s.output,
                state: s.to,
                ok_e: s.ok_e,
                ok_s: s.ok_s,
                x: s.x,
                y: s.y,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerdictDump {
    pub sound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<usize>,
    pub prefix: Vec<LassoStepDump>,
    pub cycle: Vec<LassoStepDump>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LassoStepDump {
    pub machine_state: u32,
    pub game_state: u32,
    pub input: u64,
}

pub fn verdict_to_json(v: &Verdict) -> String {
    let steps = |s: &[LassoStep]| {
        s.iter()
            .map(|st| LassoStepDump {
                machine_state: st.state.machine,
                game_state: st.state.game,
                input: st.input,
            })
            .collect()
    };
    to_json(&match v {
        Verdict::Sound => VerdictDump {
            sound: true,
            pair: None,
            prefix: Vec::new(),
            cycle: Vec::new(),
        },
        Verdict::Violation {
            pair,
            prefix,
            cycle,
        } => VerdictDump {
            sound: false,
            pair: Some(*pair),
            prefix: steps(prefix),
            cycle: steps(cycle),
        },
    })
}
