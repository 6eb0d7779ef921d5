//! Scenario configuration: a TOML document, validated into [`ScenarioConfig`].
//!
//! ```toml
//! seed = 7
//! outputs = ["overlap", "influence"]
//!
//! [params]
//! units = "natural"        # or "si" (default)
//! M = 1.0
//! Omega = 1.0
//! gamma = 0.1
//! Lambda = 20.0
//! T = 20.0
//!
//! [trajectory]
//! x = [1.0, 0.3]           # X(0), X(t)
//! x_prime = [0.0, 0.0]     # X'(0), X'(t); default [0, 0]
//! t = 2.0                  # single final time, or
//! # t_grid = { start = 0.2, stop = 2.0, points = 100 }
//! separation = 1e-9        # for `scales`; default |X(0) - X'(0)|
//!
//! [modes]                  # optional discrete environment
//! omega_min = 0.01
//! omega_max = 20.0
//! count = 256
//! # explicit = [[C, m, w], ...]
//!
//! [kernels]                # optional lag grid, in units of 1/Lambda
//! lambda_tau = { start = 0.01, stop = 30.0, points = 60, log = true }
//!
//! [sweep]
//! axis = "T"               # M, Omega, gamma, Lambda or T
//! values = [1.0, 2.0, 5.0]
//!
//! [tolerances]
//! matsubara_rel_tol = 1e-12
//! matsubara_max_terms = 2000000
//! ```

use std::fmt;

use infogap::overlap::{sample_modes_from_density, Mode, ModeSet};
use infogap::{Constants, MatsubaraConfig, PhysicalParams, SpectralDensity};
use thiserror::Error;
use toml::{Table, Value};

use crate::table::config_hash;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}, key `{key}`: {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },
    #[error("`{key}`: {reason}")]
    Validation { key: String, reason: String },
}

impl ConfigError {
    fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type ConfigResult<T> = Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Output {
    Kernels,
    Overlap,
    Influence,
    Scales,
    Verify,
}

impl Output {
    pub const ALL: [Output; 5] = [
        Output::Kernels,
        Output::Overlap,
        Output::Influence,
        Output::Scales,
        Output::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Output::Kernels => "kernels",
            Output::Overlap => "overlap",
            Output::Influence => "influence",
            Output::Scales => "scales",
            Output::Verify => "verify",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Output::ALL.into_iter().find(|o| o.name() == s)
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Mass,
    Omega,
    Gamma,
    Lambda,
    Temperature,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Mass => "M",
            SweepAxis::Omega => "Omega",
            SweepAxis::Gamma => "gamma",
            SweepAxis::Lambda => "Lambda",
            SweepAxis::Temperature => "T",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            SweepAxis::Mass,
            SweepAxis::Omega,
            SweepAxis::Gamma,
            SweepAxis::Lambda,
            SweepAxis::Temperature,
        ]
        .into_iter()
        .find(|a| a.name() == s)
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &PhysicalParams, value: f64) -> PhysicalParams {
        let mut p = *base;
        match self {
            SweepAxis::Mass => p.mass = value,
            SweepAxis::Omega => p.omega = value,
            SweepAxis::Gamma => p.gamma = value,
            SweepAxis::Lambda => p.lambda = value,
            SweepAxis::Temperature => p.temperature = value,
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec {
    /// (X(0), X(t))
    pub x: (f64, f64),
    pub x_prime: (f64, f64),
    pub times: Vec<f64>,
    pub separation: Option<f64>,
}

impl TrajectorySpec {
    /// The separation used by `scales`: explicit, else |X(0) - X'(0)|.
    pub fn separation(&self) -> f64 {
        self.separation.unwrap_or((self.x.0 - self.x_prime.0).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModeSampling {
    Density {
        omega_min: f64,
        omega_max: f64,
        count: usize,
    },
    Explicit(Vec<Mode>),
}

impl ModeSampling {
    pub fn build(&self, sd: &SpectralDensity) -> infogap::Result<ModeSet> {
        match self {
            ModeSampling::Density {
                omega_min,
                omega_max,
                count,
            } => sample_modes_from_density(sd, *omega_min, *omega_max, *count),
            ModeSampling::Explicit(modes) => ModeSet::explicit(modes.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub matsubara: MatsubaraConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub params: PhysicalParams,
    pub trajectory: TrajectorySpec,
    pub mode_sampling: Option<ModeSampling>,
    /// Lags in units of 1/Lambda.
    pub lambda_tau: Vec<f64>,
    pub sweep: Option<Sweep>,
    pub outputs: Vec<Output>,
    pub tolerances: Tolerances,
    pub seed: u64,
    /// SHA-256 of the source text.
    pub config_hash: String,
}

impl ScenarioConfig {
    pub fn with_natural_units(mut self) -> Self {
        self.params.constants = Constants::natural();
        self
    }

    pub fn with_outputs(mut self, outputs: Vec<Output>) -> Self {
        self.outputs = outputs;
        self
    }
}

/// Finds the line (1-based) where `key` is assigned inside `[section]`.
fn line_of(text: &str, section: Option<&str>, key: &str) -> usize {
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = Some(header.trim().to_string());
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else {
            continue;
        };
        if lhs.trim().trim_matches('"') == key && current.as_deref() == section {
            return i + 1;
        }
    }
    0
}

fn line_at_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Section<'a> {
    text: &'a str,
    name: Option<&'static str>,
    table: &'a Table,
}

impl<'a> Section<'a> {
    fn qualified(&self, key: &str) -> String {
        match self.name {
            Some(s) => format!("{s}.{key}"),
            None => key.to_string(),
        }
    }

    fn type_error(&self, key: &str, expected: &str) -> ConfigError {
        ConfigError::Parse {
            line: line_of(self.text, self.name, key),
            key: self.qualified(key),
            message: format!("expected {expected}"),
        }
    }

    fn reject_unknown(&self, known: &[&str]) -> ConfigResult<()> {
        match self.table.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(ConfigError::validation(self.qualified(k), "unknown key")),
            None => Ok(()),
        }
    }

    fn f64_value(&self, key: &str, v: &Value) -> ConfigResult<f64> {
        match v {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(self.type_error(key, "a number")),
        }
    }

    fn f64_opt(&self, key: &str) -> ConfigResult<Option<f64>> {
        self.table
            .get(key)
            .map(|v| self.f64_value(key, v))
            .transpose()
    }

    fn f64_req(&self, key: &str) -> ConfigResult<f64> {
        self.f64_opt(key)?
            .ok_or_else(|| ConfigError::validation(key, "required"))
    }

    fn usize_opt(&self, key: &str) -> ConfigResult<Option<usize>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(_) => Err(self.type_error(key, "a non-negative integer")),
        }
    }

    fn str_opt(&self, key: &str) -> ConfigResult<Option<&'a str>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(self.type_error(key, "a string")),
        }
    }

    fn f64_array(&self, key: &str, v: &Value) -> ConfigResult<Vec<f64>> {
        match v {
            Value::Array(items) => items.iter().map(|x| self.f64_value(key, x)).collect(),
            _ => Err(self.type_error(key, "an array of numbers")),
        }
    }

    fn pair(&self, key: &str) -> ConfigResult<Option<(f64, f64)>> {
        let Some(v) = self.table.get(key) else {
            return Ok(None);
        };
        match self.f64_array(key, v)?.as_slice() {
            [a, b] => Ok(Some((*a, *b))),
            _ => Err(self.type_error(key, "a two-element array")),
        }
    }

    fn sub(&self, key: &'static str) -> ConfigResult<Option<Section<'a>>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Table(table)) => Ok(Some(Section {
                text: self.text,
                name: Some(key),
                table,
            })),
            Some(_) => Err(self.type_error(key, "a table")),
        }
    }
}

/// { start, stop, points, log }
fn grid(section: &Section, key: &str) -> ConfigResult<Option<Vec<f64>>> {
    let Some(v) = section.table.get(key) else {
        return Ok(None);
    };
    let Value::Table(t) = v else {
        return Err(section.type_error(key, "an inline table { start, stop, points }"));
    };
    let inner = Section {
        text: section.text,
        name: section.name,
        table: t,
    };
    let field = |k: &str| {
        inner.f64_opt(k)?.ok_or_else(|| {
            ConfigError::validation(format!("{}.{k}", section.qualified(key)), "required")
        })
    };
    let (start, stop) = (field("start")?, field("stop")?);
    let points = inner.usize_opt("points")?.ok_or_else(|| {
        ConfigError::validation(format!("{}.points", section.qualified(key)), "required")
    })?;
    let log = match t.get("log") {
        None => false,
        Some(Value::Boolean(b)) => *b,
        Some(_) => return Err(section.type_error(key, "log to be a boolean")),
    };
    if points == 0 || !(stop >= start) || (log && !(start > 0.0)) {
        return Err(ConfigError::validation(
            section.qualified(key),
            "needs points >= 1, stop >= start and start > 0 on a log grid",
        ));
    }
    if points == 1 {
        return Ok(Some(vec![start]));
    }
    let step = |i: usize| i as f64 / (points - 1) as f64;
    let values = (0..points)
        .map(|i| {
            if log {
                start * (stop / start).powf(step(i))
            } else {
                start + (stop - start) * step(i)
            }
        })
        .collect();
    Ok(Some(values))
}

fn positive(key: &str, v: f64) -> ConfigResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::validation(
            key,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn default_lambda_tau() -> Vec<f64> {
    // 0.01 .. 30 on a log grid
    (0..60)
        .map(|i| 0.01 * 3000f64.powf(i as f64 / 59.0))
        .collect()
}

pub fn parse_config(text: &str) -> ConfigResult<ScenarioConfig> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map_or(0, |s| line_at_offset(text, s.start));
        let key = text
            .lines()
            .nth(line.saturating_sub(1))
            .and_then(|l| l.split_once('='))
            .map(|(k, _)| k.trim().to_string())
            .unwrap_or_default();
        ConfigError::Parse {
            line,
            key,
            message: e.message().to_string(),
        }
    })?;
    let top = Section {
        text,
        name: None,
        table: &root,
    };
    top.reject_unknown(&[
        "seed",
        "outputs",
        "params",
        "trajectory",
        "modes",
        "kernels",
        "sweep",
        "tolerances",
    ])?;

    let params_section = top
        .sub("params")?
        .ok_or_else(|| ConfigError::validation("params", "required"))?;
    let params = parse_params(&params_section)?;

    let trajectory = match top.sub("trajectory")? {
        Some(s) => parse_trajectory(&s)?,
        None => TrajectorySpec {
            x: (1.0, 0.0),
            x_prime: (0.0, 0.0),
            times: vec![1.0 / params.omega],
            separation: None,
        },
    };

    let mode_sampling = top.sub("modes")?.map(|s| parse_modes(&s)).transpose()?;

    let lambda_tau = match top.sub("kernels")? {
        Some(s) => {
            s.reject_unknown(&["lambda_tau"])?;
            grid(&s, "lambda_tau")?.unwrap_or_else(default_lambda_tau)
        }
        None => default_lambda_tau(),
    };
    if lambda_tau.iter().any(|x| !(*x > 0.0)) {
        return Err(ConfigError::validation(
            "kernels.lambda_tau",
            "lags must be positive",
        ));
    }

    let sweep = top.sub("sweep")?.map(|s| parse_sweep(&s)).transpose()?;

    let outputs = match root.get("outputs") {
        None => return Err(ConfigError::validation("outputs", "required")),
        Some(Value::Array(items)) => {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                let name = item
                    .as_str()
                    .ok_or_else(|| top.type_error("outputs", "an array of strings"))?;
                let o = Output::parse(name).ok_or_else(|| {
                    ConfigError::validation("outputs", format!("unknown output `{name}`"))
                })?;
                if !out.contains(&o) {
                    out.push(o);
                }
            }
            if out.is_empty() {
                return Err(ConfigError::validation(
                    "outputs",
                    "at least one output is required",
                ));
            }
            out
        }
        Some(_) => return Err(top.type_error("outputs", "an array of strings")),
    };

    let tolerances = match top.sub("tolerances")? {
        Some(s) => {
            s.reject_unknown(&["matsubara_rel_tol", "matsubara_max_terms"])?;
            let d = MatsubaraConfig::default();
            let rel = s.f64_opt("matsubara_rel_tol")?.unwrap_or(d.rel_tol);
            let max = s.usize_opt("matsubara_max_terms")?.unwrap_or(d.max_terms);
            let matsubara = MatsubaraConfig::new(rel, max)
                .map_err(|e| ConfigError::validation("tolerances", e.to_string()))?;
            Tolerances { matsubara }
        }
        None => Tolerances {
            matsubara: MatsubaraConfig::default(),
        },
    };

    let seed = match root.get("seed") {
        None => 0,
        Some(Value::Integer(i)) if *i >= 0 => *i as u64,
        Some(_) => return Err(top.type_error("seed", "a non-negative integer")),
    };

    Ok(ScenarioConfig {
        params,
        trajectory,
        mode_sampling,
        lambda_tau,
        sweep,
        outputs,
        tolerances,
        seed,
        config_hash: config_hash(text),
    })
}

fn parse_params(s: &Section) -> ConfigResult<PhysicalParams> {
    s.reject_unknown(&["units", "M", "Omega", "gamma", "Lambda", "T"])?;
    let constants = match s.str_opt("units")? {
        None | Some("si") => Constants::SI,
        Some("natural") => Constants::natural(),
        Some(other) => {
            return Err(ConfigError::validation(
                "units",
                format!("expected \"si\" or \"natural\", got \"{other}\""),
            ))
        }
    };
    Ok(PhysicalParams {
        mass: positive("M", s.f64_req("M")?)?,
        omega: positive("Omega", s.f64_req("Omega")?)?,
        gamma: positive("gamma", s.f64_req("gamma")?)?,
        lambda: positive("Lambda", s.f64_req("Lambda")?)?,
        temperature: positive("T", s.f64_req("T")?)?,
        constants,
    })
}

fn parse_trajectory(s: &Section) -> ConfigResult<TrajectorySpec> {
    s.reject_unknown(&["x", "x_prime", "t", "t_grid", "separation"])?;
    let x = s
        .pair("x")?
        .ok_or_else(|| ConfigError::validation("trajectory.x", "required"))?;
    let x_prime = s.pair("x_prime")?.unwrap_or((0.0, 0.0));
    let times = match (s.f64_opt("t")?, grid(s, "t_grid")?) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::validation(
                "trajectory.t",
                "give either t or t_grid, not both",
            ))
        }
        (Some(t), None) => vec![positive("trajectory.t", t)?],
        (None, Some(g)) => {
            if g[0] <= 0.0 {
                return Err(ConfigError::validation(
                    "trajectory.t_grid",
                    "times must be positive",
                ));
            }
            g
        }
        (None, None) => return Err(ConfigError::validation("trajectory.t", "required")),
    };
    let separation = s
        .f64_opt("separation")?
        .map(|d| positive("trajectory.separation", d))
        .transpose()?;
    Ok(TrajectorySpec {
        x,
        x_prime,
        times,
        separation,
    })
}

fn parse_modes(s: &Section) -> ConfigResult<ModeSampling> {
    s.reject_unknown(&["omega_min", "omega_max", "count", "explicit"])?;
    if let Some(v) = s.table.get("explicit") {
        if s.table.len() > 1 {
            return Err(ConfigError::validation(
                "modes",
                "explicit modes exclude omega_min/omega_max/count",
            ));
        }
        let Value::Array(rows) = v else {
            return Err(s.type_error("explicit", "an array of [C, m, w] triples"));
        };
        let modes = rows
            .iter()
            .map(|row| match s.f64_array("explicit", row)?.as_slice() {
                [c, m, w] => Mode::new(*c, *m, *w)
                    .map_err(|e| ConfigError::validation("modes.explicit", e.to_string())),
                _ => Err(s.type_error("explicit", "an array of [C, m, w] triples")),
            })
            .collect::<ConfigResult<Vec<_>>>()?;
        return Ok(ModeSampling::Explicit(modes));
    }
    let omega_min = s
        .f64_opt("omega_min")?
        .ok_or_else(|| ConfigError::validation("modes.omega_min", "required"))?;
    let omega_max = s
        .f64_opt("omega_max")?
        .ok_or_else(|| ConfigError::validation("modes.omega_max", "required"))?;
    let count = s
        .usize_opt("count")?
        .ok_or_else(|| ConfigError::validation("modes.count", "required"))?;
    if !(omega_min > 0.0 && omega_max > omega_min) || count == 0 {
        return Err(ConfigError::validation(
            "modes",
            "need 0 < omega_min < omega_max and count >= 1",
        ));
    }
    Ok(ModeSampling::Density {
        omega_min,
        omega_max,
        count,
    })
}

fn parse_sweep(s: &Section) -> ConfigResult<Sweep> {
    s.reject_unknown(&["axis", "values"])?;
    let name = s
        .str_opt("axis")?
        .ok_or_else(|| ConfigError::validation("sweep.axis", "required"))?;
    let axis = SweepAxis::parse(name).ok_or_else(|| {
        ConfigError::validation("sweep.axis", format!("unknown parameter `{name}`"))
    })?;
    let values = match s.table.get("values") {
        Some(v) => s.f64_array("values", v)?,
        None => return Err(ConfigError::validation("sweep.values", "required")),
    };
    if values.is_empty() {
        return Err(ConfigError::validation(
            "sweep.values",
            "at least one value is required",
        ));
    }
    for v in &values {
        positive(axis.name(), *v)?;
    }
    Ok(Sweep { axis, values })
}
