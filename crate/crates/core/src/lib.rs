//! Explicit-state synthesis of correct and robust controllers from GR(1)
//! specifications.
//!
//! The pipeline is [`spec::Gr1Spec`] → [`game::build_game`] →
//! [`solver::main_streett`] → [`strategy::extract_strategy`] →
//! [`strategy::strategy_to_mealy`], with [`emit`] rendering machines,
//! [`sim`] running them against scripted environments and [`oracle`]
//! providing independent ground truth for tests.
#![no_std]

extern crate alloc;

pub mod automaton;
pub mod emit;
pub mod expr;
pub mod game;
pub mod oracle;
pub mod sim;
pub mod solver;
pub mod spec;
pub mod stateset;
pub mod strategy;
