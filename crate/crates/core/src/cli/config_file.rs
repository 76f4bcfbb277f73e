//! Flat `key = value` experiment configuration files.
//!
//! Blank lines and `#` comments are ignored. Every key may appear at most
//! once; keys left out keep their [`ExperimentConfig::default`] values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::config::{parse_gamma_kind, ExperimentConfig, Variant};

pub const KEYS: [&str; 24] = [
    "d",
    "m",
    "n",
    "sigma",
    "gamma_kind",
    "trials",
    "base_seed",
    "k_grid",
    "n_ps_list",
    "variant",
    "alpha",
    "test_convention",
    "test_target",
    "max_iters",
    "init_std",
    "step_init",
    "grad_stop",
    "move_tol",
    "stall_limit",
    "workers",
    "step_mode",
    "accept_rule",
    "subsample",
    "relax_dims",
];

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_value<V: FromStr>(key: &str, raw: &str) -> Result<V>
where
    V::Err: std::fmt::Display,
{
    raw.parse::<V>()
        .map_err(|e| config_error(key, format!("cannot parse `{raw}`: {e}")))
}

fn parse_list(key: &str, raw: &str) -> Result<Vec<usize>> {
    raw.split(',').map(|s| parse_value(key, s.trim())).collect()
}

/// A comma list, or an inclusive `start:step:end` range.
pub fn parse_k_grid(raw: &str) -> Result<Vec<usize>> {
    let key = "k_grid";
    if !raw.contains(':') {
        return parse_list(key, raw);
    }
    let parts: Vec<usize> = raw
        .split(':')
        .map(|s| parse_value(key, s.trim()))
        .collect::<Result<_>>()?;
    match parts[..] {
        [start, step, end] if step > 0 && start <= end => Ok((start..=end).step_by(step).collect()),
        [_, _, _] => Err(config_error(
            key,
            format!("range `{raw}` needs step > 0 and start <= end"),
        )),
        _ => Err(config_error(key, format!("range `{raw}` must be start:step:end"))),
    }
}

/// Splits the text into `key -> value`, rejecting unknown and repeated keys.
fn entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_error("<syntax>", format!("line {}: expected `key = value`", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(config_error(key, format!("line {}: unknown key", lineno + 1)));
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(config_error(key, format!("line {}: repeated key", lineno + 1)));
        }
    }
    Ok(out)
}

/// Parses file text into a config. Does not run [`ExperimentConfig::validate`].
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let map = entries(text)?;
    let mut cfg = ExperimentConfig::default();
    let gd = &mut cfg.gd;
    for (key, raw) in &map {
        let raw = raw.as_str();
        match key.as_str() {
            "d" => cfg.d = parse_value(key, raw)?,
            "m" => cfg.m = parse_value(key, raw)?,
            "n" => cfg.n = parse_value(key, raw)?,
            "sigma" => cfg.sigma = parse_value(key, raw)?,
            "gamma_kind" => cfg.gamma_kind = parse_gamma_kind(raw).map_err(|e| config_error(key, e.to_string()))?,
            "trials" => cfg.trials = parse_value(key, raw)?,
            "base_seed" => cfg.base_seed = parse_value(key, raw)?,
            "k_grid" => cfg.k_grid = Some(parse_k_grid(raw)?),
            "n_ps_list" => cfg.n_ps_list = parse_list(key, raw)?,
            "variant" | "alpha" => {}
            "test_convention" => cfg.test_convention = parse_value(key, raw)?,
            "test_target" => cfg.test_target = parse_value(key, raw)?,
            "max_iters" => gd.max_iters = parse_value(key, raw)?,
            "init_std" => gd.init_std = parse_value(key, raw)?,
            "step_init" => gd.step_init = parse_value(key, raw)?,
            "grad_stop" => gd.grad_stop = parse_value(key, raw)?,
            "move_tol" => gd.move_tol = parse_value(key, raw)?,
            "stall_limit" => gd.stall_limit = parse_value(key, raw)?,
            "workers" => cfg.workers = parse_value(key, raw)?,
            "step_mode" => gd.step_mode = parse_value(key, raw)?,
            "accept_rule" => gd.accept_rule = parse_value(key, raw)?,
            "subsample" => cfg.subsample = parse_value(key, raw)?,
            "relax_dims" => cfg.relax_dims = parse_value(key, raw)?,
            _ => unreachable!("key list and match arms agree"),
        }
    }
    if let Some(raw) = map.get("alpha") {
        cfg.alpha = parse_value("alpha", raw)?;
    }
    if let Some(raw) = map.get("variant") {
        cfg.variant = Variant::from_name(raw, cfg.alpha).map_err(|e| config_error("variant", e.to_string()))?;
    }
    Ok(cfg.with_alpha_synced())
}

/// Reads and parses a config file; an unreadable file is a config error.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| config_error("<file>", format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Applies a `WORKERS` override, if present.
pub fn apply_workers_override(cfg: &mut ExperimentConfig, value: Option<&str>) -> Result<()> {
    if let Some(raw) = value {
        cfg.workers = parse_value("workers", raw.trim())?;
    }
    Ok(())
}
