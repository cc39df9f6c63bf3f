//! Turning `--config`/`--preset`/`--set` into resolved configurations.
//!
//! A config may carry a `[family]` table naming one config key and a list of
//! values for it. Each value yields one curve; the rest of the file is shared.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use cbsel::Config;
use serde::{Deserialize, Serialize};

use crate::{presets, Failure, Source};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    /// `section.key` in the config.
    pub key: String,
    pub values: Vec<toml::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
}

impl Family {
    pub fn label(&self, index: usize) -> String {
        self.labels
            .get(index)
            .cloned()
            .unwrap_or_else(|| sanitize(&self.values[index].to_string()))
    }
}

/// One curve of an experiment.
#[derive(Clone, Debug)]
pub struct Curve {
    pub label: Option<String>,
    pub config: Config,
}

#[derive(Clone, Debug)]
pub struct Experiment {
    /// Config shared by all curves, before the family key is applied.
    pub base: Config,
    pub family: Option<Family>,
    pub curves: Vec<Curve>,
}

impl Experiment {
    /// Canonical text that reproduces this experiment when passed back in
    /// with `--config`.
    pub fn manifest(&self, command: &str) -> Result<String, Failure> {
        let mut text = format!("# cbsel {command}\n");
        text.push_str(&self.base.to_canonical_toml().map_err(config_error)?);
        if let Some(family) = &self.family {
            #[derive(Serialize)]
            struct Wrapper<'a> {
                family: &'a Family,
            }
            let table = toml::to_string(&Wrapper { family })
                .map_err(|e| Failure::Runtime(anyhow!(e)))?;
            text.push('\n');
            text.push_str(&table);
        }
        Ok(text)
    }
}

fn config_error(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

pub fn read_source(source: &Source, fallback: Option<&str>) -> Result<String, Failure> {
    if let Some(path) = &source.config {
        return read_file(path);
    }
    let name = source.preset.as_deref().or(fallback).ok_or_else(|| {
        config_error(anyhow!("no configuration: pass --config FILE or --preset NAME"))
    })?;
    presets::lookup(name).map(str::to_owned).ok_or_else(|| {
        let known: Vec<_> = presets::names().collect();
        config_error(anyhow!("unknown preset `{name}` (known: {})", known.join(", ")))
    })
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Config)
}

/// Parses `text`, applies `overrides` and expands the family, if any.
pub fn resolve(text: &str, overrides: &[String]) -> Result<Experiment, Failure> {
    let mut table: toml::Table = text.parse().map_err(config_error)?;
    let family = match table.remove("family") {
        Some(v) => {
            let family: Family = v.try_into().map_err(config_error)?;
            if family.values.is_empty() {
                return Err(config_error(anyhow!("family.values is empty")));
            }
            if !family.labels.is_empty() && family.labels.len() != family.values.len() {
                return Err(config_error(anyhow!(
                    "family has {} labels for {} values",
                    family.labels.len(),
                    family.values.len()
                )));
            }
            Some(family)
        }
        None => None,
    };
    let shared = toml::to_string(&table).map_err(config_error)?;
    let base = Config::from_toml_with_overrides(&shared, overrides).map_err(config_error)?;
    let curves = match &family {
        None => vec![Curve {
            label: None,
            config: base.clone(),
        }],
        Some(f) => f
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut all = overrides.to_vec();
                all.push(format!("{}={}", f.key, v));
                let config = Config::from_toml_with_overrides(&shared, &all)
                    .with_context(|| format!("family value {v}"))
                    .map_err(Failure::Config)?;
                Ok(Curve {
                    label: Some(f.label(i)),
                    config,
                })
            })
            .collect::<Result<_, Failure>>()?,
    };
    Ok(Experiment {
        base,
        family,
        curves,
    })
}

/// File-name-safe version of a label.
pub fn sanitize(text: &str) -> String {
    let mapped: String = text
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect();
    let trimmed = mapped.trim_matches('_');
    let mut out = String::with_capacity(trimmed.len());
    for c in trimmed.chars() {
        if !(c == '_' && out.ends_with('_')) {
            out.push(c);
        }
    }
    out
}
