//! Built-in scenarios, embedded at compile time from `presets/*.toml`.

use crate::error::{Error, Result};

use super::scenario::{parse_scenario, Scenario};

const PRESETS: &[(&str, &str)] = &[
    ("static-a", include_str!("../../presets/static-a.toml")),
    ("static-b", include_str!("../../presets/static-b.toml")),
    (
        "dynamic-dry",
        include_str!("../../presets/dynamic-dry.toml"),
    ),
    (
        "dynamic-damp",
        include_str!("../../presets/dynamic-damp.toml"),
    ),
    (
        "dynamic-wet",
        include_str!("../../presets/dynamic-wet.toml"),
    ),
    (
        "navigate-avoid",
        include_str!("../../presets/navigate-avoid.toml"),
    ),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| *src)
}

pub fn preset(name: &str) -> Result<Scenario> {
    let src = preset_source(name).ok_or_else(|| {
        let known: Vec<_> = preset_names().collect();
        Error::Configuration(format!(
            "unknown preset {name:?}; known: {}",
            known.join(", ")
        ))
    })?;
    parse_scenario(src, &format!("preset {name}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate_and_match_names() {
        for name in preset_names() {
            let s = preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.name, name);
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("nope"), Err(Error::Configuration(_))));
    }
}
