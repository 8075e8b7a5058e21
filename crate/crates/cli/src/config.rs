//! Analysis configuration from a TOML file plus `key.path=value` overrides.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use guidecue_core::analysis::AnalysisConfig;
use toml::{Table, Value};

/// Parses an override value as a TOML literal, falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn apply_override(root: &mut Table, assignment: &str) -> anyhow::Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("override {assignment:?} is not of the form key.path=value"))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        bail!("override key {path:?} has an empty segment");
    }
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut table = root;
    for key in parents {
        table = table
            .entry(key.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!("{key:?} in {path:?} is not a section"))?;
    }
    table.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Defaults, then the file, then each override in order.
pub fn load_config(file: Option<&Path>, overrides: &[String]) -> anyhow::Result<AnalysisConfig> {
    let mut root = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str::<Table>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => Table::new(),
    };
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    let cfg: AnalysisConfig = Value::Table(root).try_into().context("invalid configuration")?;
    cfg.scoring.validate().context("invalid [scoring] section")?;
    cfg.haptics.calibration_fallback().validate().context("invalid [haptics] section")?;
    Ok(cfg)
}

pub fn render_config(cfg: &AnalysisConfig) -> String {
    toml::to_string_pretty(cfg).expect("configuration serializes")
}
