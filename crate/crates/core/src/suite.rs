//! Built-in scenarios.

use crate::lang::{Scenario, ScenarioError};

pub const NS: &str = include_str!("../scenarios/ns.tf");
pub const NSL: &str = include_str!("../scenarios/nsl.tf");
pub const NSL_REUSE: &str = include_str!("../scenarios/nsl-reuse.tf");
pub const DH: &str = include_str!("../scenarios/dh.tf");

/// Names accepted by [`builtin`].
pub const NAMES: [&str; 4] = ["ns", "nsl", "nsl-reuse", "dh"];

/// Source of a built-in scenario.
pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "ns" => Some(NS),
        "nsl" => Some(NSL),
        "nsl-reuse" => Some(NSL_REUSE),
        "dh" => Some(DH),
        _ => None,
    }
}

pub fn builtin(name: &str) -> Option<Result<Scenario, ScenarioError>> {
    source(name).map(Scenario::parse)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_load() {
        for n in NAMES {
            let s = builtin(n).unwrap().unwrap_or_else(|e| panic!("{n}: {e}"));
            assert_eq!(s.name, n);
        }
        assert!(builtin("tls").is_none());
    }
}
