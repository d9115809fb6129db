//! The flat sectioned key-value config format.
//!
//! Lines are `key = value` pairs, optionally grouped under `[instance]`,
//! `[algorithm]`, or `[graph]` headers. `#` starts a comment. Keys are
//! validated per scenario; unknown keys are rejected with their line number.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "config line {}: {}", line, self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

pub type ConfigResult<T> = Result<T, ConfigError>;

fn err<T>(line: Option<usize>, message: impl Into<String>) -> ConfigResult<T> {
    Err(ConfigError {
        line,
        message: message.into(),
    })
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub line: usize,
    pub value: String,
    pub consumed: std::cell::Cell<bool>,
}

/// Parsed but untyped config: per-section multimaps preserving line numbers.
#[derive(Debug, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, Vec<(String, Entry)>>,
}

pub const TOP: &str = "";

impl RawConfig {
    pub fn parse(text: &str) -> ConfigResult<RawConfig> {
        let mut out = RawConfig::default();
        let mut section = TOP.to_string();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return err(Some(line_no), "unterminated section header");
                }
                let name = line[1..line.len() - 1].trim();
                if !matches!(name, "instance" | "algorithm" | "graph") {
                    return err(Some(line_no), format!("unknown section '{name}'"));
                }
                section = name.to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(Some(line_no), "expected 'key = value'");
            };
            out.sections
                .entry(section.clone())
                .or_default()
                .push((
                    key.trim().to_string(),
                    Entry {
                        line: line_no,
                        value: value.trim().to_string(),
                        consumed: std::cell::Cell::new(false),
                    },
                ));
        }
        Ok(out)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        let entries = self.sections.get(section)?;
        let found = entries.iter().rev().find(|(k, _)| k == key)?;
        found.1.consumed.set(true);
        Some(&found.1)
    }

    pub fn get_all(&self, section: &str, key: &str) -> Vec<&Entry> {
        let Some(entries) = self.sections.get(section) else {
            return Vec::new();
        };
        entries
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, e)| {
                e.consumed.set(true);
                e
            })
            .collect()
    }

    pub fn require(&self, section: &str, key: &str) -> ConfigResult<&Entry> {
        self.get(section, key).map_or_else(
            || {
                let place = if section.is_empty() {
                    "top level".to_string()
                } else {
                    format!("[{section}]")
                };
                err(None, format!("missing required key '{key}' in {place}"))
            },
            Ok,
        )
    }

    pub fn f64_of(&self, section: &str, key: &str) -> ConfigResult<Option<f64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<f64>()
                .map(Some)
                .map_err(|_| ConfigError {
                    line: Some(e.line),
                    message: format!("'{key}' must be a number, got '{}'", e.value),
                }),
        }
    }

    pub fn f64_req(&self, section: &str, key: &str) -> ConfigResult<f64> {
        self.require(section, key)?;
        Ok(self.f64_of(section, key)?.unwrap())
    }

    pub fn usize_of(&self, section: &str, key: &str) -> ConfigResult<Option<usize>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<usize>()
                .map(Some)
                .map_err(|_| ConfigError {
                    line: Some(e.line),
                    message: format!("'{key}' must be a nonnegative integer, got '{}'", e.value),
                }),
        }
    }

    pub fn string_of(&self, section: &str, key: &str) -> Option<String> {
        self.get(section, key).map(|e| e.value.clone())
    }

    /// Whitespace- or comma-separated list of numbers.
    pub fn list_of(&self, section: &str, key: &str) -> ConfigResult<Option<Vec<f64>>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => {
                let parts: Result<Vec<f64>, _> = e
                    .value
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<f64>())
                    .collect();
                parts.map(Some).map_err(|_| ConfigError {
                    line: Some(e.line),
                    message: format!("'{key}' must be a list of numbers, got '{}'", e.value),
                })
            }
        }
    }

    pub fn seeds(&self) -> ConfigResult<Vec<u64>> {
        let e = self.require(TOP, "seeds")?;
        let parsed: Result<Vec<u64>, _> = e
            .value
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<u64>())
            .collect();
        let seeds = parsed.map_err(|_| ConfigError {
            line: Some(e.line),
            message: format!("'seeds' must be a list of integers, got '{}'", e.value),
        })?;
        if seeds.is_empty() {
            return err(Some(e.line), "'seeds' must not be empty");
        }
        Ok(seeds)
    }

    /// Every key must have been consumed by the scenario's schema.
    pub fn reject_unknown(&self) -> ConfigResult<()> {
        for (section, entries) in &self.sections {
            for (key, entry) in entries {
                if !entry.consumed.get() {
                    let place = if section.is_empty() {
                        "top level".to_string()
                    } else {
                        format!("[{section}]")
                    };
                    return err(
                        Some(entry.line),
                        format!("unknown key '{key}' in {place} for this scenario"),
                    );
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Pricing,
    PricingEllipsoid,
    StackelbergGeneral,
    RoutingTargetFlow,
    RoutingOptimalTolls,
    PrincipalAgent,
    BraessScan,
}

impl Scenario {
    pub fn parse(name: &str, line: usize) -> ConfigResult<Scenario> {
        Ok(match name {
            "pricing" => Scenario::Pricing,
            "pricing_ellipsoid" => Scenario::PricingEllipsoid,
            "stackelberg_general" => Scenario::StackelbergGeneral,
            "routing_target_flow" => Scenario::RoutingTargetFlow,
            "routing_optimal_tolls" => Scenario::RoutingOptimalTolls,
            "principal_agent" => Scenario::PrincipalAgent,
            "braess_scan" => Scenario::BraessScan,
            other => return err(Some(line), format!("unknown scenario '{other}'")),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Pricing => "pricing",
            Scenario::PricingEllipsoid => "pricing_ellipsoid",
            Scenario::StackelbergGeneral => "stackelberg_general",
            Scenario::RoutingTargetFlow => "routing_target_flow",
            Scenario::RoutingOptimalTolls => "routing_optimal_tolls",
            Scenario::PrincipalAgent => "principal_agent",
            Scenario::BraessScan => "braess_scan",
        }
    }
}
