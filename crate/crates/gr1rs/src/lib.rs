//! File formats, dumps and the command-line pipeline around `gr1-core`.

pub mod bench;
pub mod dump;
pub mod pipeline;
pub mod script;
pub mod spec_format;
