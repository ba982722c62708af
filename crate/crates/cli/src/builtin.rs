//! Scenario files shipped with the binary.

use std::path::Path;

use crate::scenario::{load_scenario, ConfigError, Scenario};

pub const BUILTIN: &[(&str, &str)] = &[
    ("circle-limit", include_str!("../scenarios/circle-limit.toml")),
    ("circle-veff", include_str!("../scenarios/circle-veff.toml")),
    ("ellipse-veff", include_str!("../scenarios/ellipse-veff.toml")),
    ("ellipse-ambiguity", include_str!("../scenarios/ellipse-ambiguity.toml")),
    ("quartic-wkb", include_str!("../scenarios/quartic-wkb.toml")),
    ("harmonic-ramp", include_str!("../scenarios/harmonic-ramp.toml")),
    ("sphere-direct", include_str!("../scenarios/sphere-direct.toml")),
    ("ellipse-direct", include_str!("../scenarios/ellipse-direct.toml")),
    ("decoupling-smooth", include_str!("../scenarios/decoupling-smooth.toml")),
    ("decoupling-hardwall", include_str!("../scenarios/decoupling-hardwall.toml")),
];

pub fn builtin(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// A path on disk, or else the name of a built-in scenario.
pub fn resolve(arg: &str) -> Result<Scenario, ConfigError> {
    let path = Path::new(arg);
    if path.exists() {
        return load_scenario(path);
    }
    match builtin(arg) {
        Some(text) => Scenario::parse(text),
        None => Err(ConfigError::Io {
            path: arg.to_string(),
            message: "no such file or built-in scenario".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate_and_match_their_names() {
        for (name, text) in BUILTIN {
            let s = Scenario::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.name, *name);
        }
    }
}
