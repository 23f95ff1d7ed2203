//! Environment scripts for the simulator.
//!
//! One directive per line: `in r1=1 r2=0`, `legal` or `violate`, optionally
//! followed by `xN` to repeat it `N` times. `#` starts a comment. The last
//! directive repeats until the run ends.

use std::fmt;

use gr1_core::sim::{Directive, EnvScript};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ScriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ScriptError {}

pub fn parse_script<S: AsRef<str>>(
    text: &str,
    inputs: &[S],
    seed: u64,
) -> Result<EnvScript, ScriptError> {
    let mut directives = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let fail = |message: String| Err(ScriptError { line, message });
        let body = raw.split('#').next().unwrap_or("");
        let mut words: Vec<&str> = body.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        let mut count = 1usize;
        if let Some(rep) = words.last().and_then(|w| w.strip_prefix('x')) {
            if let Ok(n) = rep.parse::<usize>() {
                if n == 0 {
                    return fail("repeat count must be positive".into());
                }
                count = n;
                words.pop();
            }
        }
        let directive = match words[0] {
            "legal" if words.len() == 1 => Directive::Legal,
            "violate" if words.len() == 1 => Directive::Violate,
            "legal" | "violate" => return fail(format!("`{}` takes no arguments", words[0])),
            "in" => {
                let mut value = 0u64;
                let mut seen = vec![false; inputs.len()];
                for w in &words[1..] {
                    let Some((name, bit)) = w.split_once('=') else {
                        return fail(format!("expected `signal=0|1`, found `{w}`"));
                    };
                    let Some(j) = inputs.iter().position(|s| s.as_ref() == name) else {
                        return fail(format!("unknown input `{name}`"));
                    };
                    if seen[j] {
                        return fail(format!("input `{name}` given twice"));
                    }
                    seen[j] = true;
                    match bit {
                        "1" => value |= 1 << j,
                        "0" => {}
                        _ => return fail(format!("value of `{name}` must be 0 or 1")),
                    }
                }
                if let Some(j) = seen.iter().position(|&s| !s) {
                    return fail(format!("input `{}` not given", inputs[j].as_ref()));
                }
                Directive::Input(value)
            }
            other => return fail(format!("unknown directive `{other}`")),
        };
        directives.extend(std::iter::repeat_n(directive, count));
    }
    if directives.is_empty() {
        return Err(ScriptError {
            line: text.lines().count().max(1),
            message: "script has no directives".into(),
        });
    }
    Ok(EnvScript::new(directives, seed))
}
