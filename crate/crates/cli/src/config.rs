//! Suite configuration: embedded defaults, a JSON file, and command-line
//! overrides, merged in that order.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SuiteName {
    Algebra,
    Group,
    Model,
    Toperator,
    Cfunction,
    Eisenstein,
    Gammas,
    Decay,
    Vanishing,
    Rates,
}

impl SuiteName {
    pub const ALL: [SuiteName; 10] = [
        SuiteName::Algebra,
        SuiteName::Group,
        SuiteName::Model,
        SuiteName::Toperator,
        SuiteName::Cfunction,
        SuiteName::Eisenstein,
        SuiteName::Gammas,
        SuiteName::Decay,
        SuiteName::Vanishing,
        SuiteName::Rates,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Algebra => "algebra",
            SuiteName::Group => "group",
            SuiteName::Model => "model",
            SuiteName::Toperator => "toperator",
            SuiteName::Cfunction => "cfunction",
            SuiteName::Eisenstein => "eisenstein",
            SuiteName::Gammas => "gammas",
            SuiteName::Decay => "decay",
            SuiteName::Vanishing => "vanishing",
            SuiteName::Rates => "rates",
        }
    }

    /// Dimension used when neither the file nor the flags set one.
    pub fn default_d(self) -> usize {
        match self {
            SuiteName::Decay | SuiteName::Gammas | SuiteName::Eisenstein | SuiteName::Cfunction => {
                1
            }
            _ => 2,
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Matcoef,
    Scalars,
    Cfun,
}

impl TableKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TableKind::Matcoef => "matcoef",
            TableKind::Scalars => "scalars",
            TableKind::Cfun => "cfun",
        }
    }
}

/// What a configuration is resolved for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Suite(SuiteName),
    Table(TableKind),
}

impl Target {
    pub fn default_d(self) -> usize {
        match self {
            Target::Suite(s) => s.default_d(),
            Target::Table(TableKind::Scalars) => 3,
            Target::Table(_) => 1,
        }
    }

    pub fn defaults(self, d: usize) -> SuiteConfig {
        match self {
            Target::Suite(s) => SuiteConfig::defaults(s, d),
            Target::Table(t) => SuiteConfig::table_defaults(t, d),
        }
    }

    pub fn validate(self, cfg: &SuiteConfig) -> Vec<String> {
        match self {
            Target::Suite(s) => cfg.validate(s),
            Target::Table(t) => cfg.validate_table(t),
        }
    }
}

/// Pass thresholds. Defaults depend on d where the checks do.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub iwasawa: f64,
    pub nbar_h: f64,
    pub schur: f64,
    pub t_adjoint: f64,
    pub t_diagonal: f64,
    pub t_norm: f64,
    pub t_vanishing: f64,
    pub cplus_value: f64,
    pub cplus_structure: f64,
    pub eisenstein: f64,
    pub gamma_recursion: f64,
    pub gamma_path: f64,
    pub first_order: f64,
    pub unitarity: f64,
    pub slope: f64,
    pub main_term_vanishing: f64,
    pub control_main_term: f64,
    pub rates: f64,
}

impl Tolerances {
    pub fn for_d(d: usize) -> Self {
        Tolerances {
            iwasawa: 1e-10,
            nbar_h: 1e-12,
            schur: if d == 1 { 1e-12 } else { 1e-10 },
            t_adjoint: 1e-10,
            t_diagonal: 1e-8,
            t_norm: 1e-8,
            t_vanishing: 1e-9,
            cplus_value: 1e-6,
            cplus_structure: 1e-8,
            eisenstein: if d == 1 { 1e-6 } else { 1e-5 },
            gamma_recursion: 1e-10,
            gamma_path: 1e-12,
            first_order: if d == 1 { 1e-5 } else { 1e-4 },
            unitarity: 1e-4,
            slope: if d == 1 { 0.05 } else { 0.1 },
            main_term_vanishing: 1e-8,
            control_main_term: 1e-3,
            rates: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub d: usize,
    pub upsilon: i64,
    /// One value or a grid; suites that need a single s use the first.
    pub s: Vec<f64>,
    pub cutoff: i64,
    /// Power-of-two level of the K quadrature.
    pub k_level: usize,
    pub t_grid: Vec<f64>,
    /// K-types (t1, t2) of the probe vectors.
    pub probe_ktypes: Vec<(i64, i64)>,
    /// Random samples (group words, rate inputs).
    pub samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub out: PathBuf,
}

fn grid(a: f64, b: f64, step: f64) -> Vec<f64> {
    let n = ((b - a) / step).round() as usize;
    (0..=n).map(|i| a + step * i as f64).collect()
}

impl SuiteConfig {
    pub fn defaults(suite: SuiteName, d: usize) -> Self {
        let df = d as f64;
        let mid = 0.75 * df;
        let (upsilon, s, cutoff, k_level, t_grid, probe_ktypes) = match suite {
            SuiteName::Algebra => (0, vec![mid], 6, 8, vec![], vec![]),
            SuiteName::Group => (0, vec![mid], 0, 8, vec![], vec![]),
            SuiteName::Model => {
                let (cut, level) = match d {
                    1 => (64, 256),
                    2 => (7, 32),
                    _ => (1, 8),
                };
                (0, vec![mid], cut, level, vec![], vec![])
            }
            SuiteName::Toperator => (1, vec![mid], 4, 8, vec![], vec![]),
            SuiteName::Cfunction => {
                let s = match d {
                    1 => vec![0.6, 0.75, 0.9],
                    2 => vec![1.2, 1.5, 1.8],
                    _ => vec![1.8, 2.25, 2.7],
                };
                (
                    0,
                    s,
                    if d == 3 { 1 } else { 4 },
                    if d == 1 { 64 } else { 16 },
                    vec![],
                    vec![],
                )
            }
            SuiteName::Eisenstein => {
                let t = if d == 1 { 1.0 } else { 0.5 };
                (
                    0,
                    vec![mid],
                    2,
                    if d == 1 { 256 } else { 32 },
                    vec![t],
                    vec![],
                )
            }
            SuiteName::Gammas => {
                let s = (1..=50)
                    .map(|i| df / 2.0 + df / 2.0 * i as f64 / 51.0)
                    .collect();
                (0, s, 20, if d == 1 { 64 } else { 16 }, vec![], vec![])
            }
            SuiteName::Decay => match d {
                1 => (
                    0,
                    vec![0.6, 0.75, 0.9],
                    32,
                    8,
                    grid(2.0, 8.0, 0.5),
                    vec![(0, 0)],
                ),
                _ => (
                    0,
                    vec![0.7 * df],
                    12,
                    8,
                    grid(1.0, 4.0, 0.25),
                    vec![(0, 0), (1, 0)],
                ),
            },
            SuiteName::Vanishing => (
                1,
                vec![1.2, 1.5],
                12,
                8,
                grid(4.0, 8.0, 0.25),
                vec![(1, 0), (2, 0), (3, 0)],
            ),
            SuiteName::Rates => (0, vec![mid], 0, 8, vec![], vec![]),
        };
        SuiteConfig {
            d,
            upsilon: if d == 1 { 0 } else { upsilon },
            s,
            cutoff,
            k_level: if d == 3 { k_level.min(8) } else { k_level },
            t_grid,
            probe_ktypes,
            samples: 1000,
            seed: 7,
            tolerances: Tolerances::for_d(d),
            out: PathBuf::from("out"),
        }
    }

    pub fn table_defaults(kind: TableKind, d: usize) -> Self {
        let df = d as f64;
        let mut cfg = SuiteConfig::defaults(SuiteName::Cfunction, d);
        match kind {
            TableKind::Matcoef => {
                cfg.s = vec![if d == 1 { 0.75 } else { 0.7 * df }];
                cfg.cutoff = 4;
                cfg.t_grid = grid(0.0, 8.0, 1.0);
                cfg.probe_ktypes = vec![(0, 0)];
            }
            TableKind::Scalars => {
                cfg.upsilon = if d == 3 { 1 } else { 0 };
                cfg.s = vec![if d == 3 { 1.7 } else { 0.75 * df }];
                cfg.cutoff = 6;
            }
            TableKind::Cfun => {}
        }
        cfg
    }

    pub fn validate_table(&self, kind: TableKind) -> Vec<String> {
        let suite = match kind {
            TableKind::Matcoef => SuiteName::Decay,
            TableKind::Scalars => SuiteName::Gammas,
            TableKind::Cfun => SuiteName::Cfunction,
        };
        let mut errs = self.validate(suite);
        if kind != TableKind::Matcoef {
            errs.retain(|e| {
                !e.starts_with("t_grid")
                    && !e.starts_with("probe_ktypes")
                    && !e.starts_with("d: decay")
            });
        }
        errs
    }

    /// Field-path messages for every violated precondition.
    pub fn validate(&self, suite: SuiteName) -> Vec<String> {
        let mut errs = Vec::new();
        if !(1..=3).contains(&self.d) {
            errs.push(format!("d: {} not in {{1, 2, 3}}", self.d));
            return errs;
        }
        let df = self.d as f64;
        if self.upsilon < 0 {
            errs.push(format!("upsilon: {} must be ≥ 0", self.upsilon));
        }
        if self.d == 1 && self.upsilon != 0 {
            errs.push("upsilon: d = 1 only has υ = 0".into());
        }
        if self.s.is_empty() {
            errs.push("s: at least one value required".into());
        }
        if suite != SuiteName::Rates && suite != SuiteName::Group && suite != SuiteName::Algebra {
            for (i, s) in self.s.iter().enumerate() {
                if !(s.is_finite() && *s > df / 2.0 && *s < df) {
                    errs.push(format!(
                        "s[{i}]: {s} outside (d/2, d) = ({}, {})",
                        df / 2.0,
                        df
                    ));
                } else if self.upsilon != 0
                    && self.d == 3
                    && suite == SuiteName::Gammas
                    && *s >= df - 1.0
                {
                    errs.push(format!("s[{i}]: {s} must be < d − 1 for υ ≠ 0"));
                }
            }
        }
        if self.cutoff < self.upsilon {
            errs.push(format!(
                "cutoff: {} below upsilon {}",
                self.cutoff, self.upsilon
            ));
        }
        if self.k_level < 2 || !self.k_level.is_power_of_two() {
            errs.push(format!(
                "k_level: {} is not a power of two ≥ 2",
                self.k_level
            ));
        }
        if self.d == 3 && self.k_level > 8 {
            errs.push(format!("k_level: {} exceeds 8 for d = 3", self.k_level));
        }
        for (i, t) in self.t_grid.iter().enumerate() {
            if !(t.is_finite() && *t >= 0.0) {
                errs.push(format!("t_grid[{i}]: {t} must be finite and ≥ 0"));
            }
        }
        match suite {
            SuiteName::Decay | SuiteName::Vanishing => {
                if self.t_grid.len() < 2 {
                    errs.push("t_grid: at least two points required".into());
                }
                if self.probe_ktypes.is_empty() {
                    errs.push("probe_ktypes: at least one K-type required".into());
                }
                if suite == SuiteName::Vanishing && self.upsilon == 0 {
                    errs.push("upsilon: the vanishing suite needs υ ≠ 0".into());
                }
                if suite == SuiteName::Vanishing && self.d == 3 {
                    errs.push("d: the vanishing suite runs for d ≤ 2".into());
                }
                if self.d == 3 {
                    errs.push("d: decay certification runs for d ≤ 2".into());
                }
            }
            SuiteName::Eisenstein => {
                if self.t_grid.len() != 1 {
                    errs.push(
                        "t_grid: the Eisenstein suite takes exactly one boost parameter".into(),
                    );
                }
                if self.d == 3 {
                    errs.push("d: the Eisenstein suite needs K quadrature beyond level 8, so it runs for d ≤ 2".into());
                }
            }
            _ => {}
        }
        for (i, (t1, t2)) in self.probe_ktypes.iter().enumerate() {
            if t1.abs() > self.cutoff {
                errs.push(format!(
                    "probe_ktypes[{i}]: ({t1}, {t2}) above cutoff {}",
                    self.cutoff
                ));
            }
        }
        if self.samples == 0 {
            errs.push("samples: must be ≥ 1".into());
        }
        let tol = serde_json::to_value(&self.tolerances).expect("tolerances serialize");
        for (k, v) in tol.as_object().expect("object") {
            if !(v.as_f64().is_some_and(|x| x > 0.0 && x.is_finite())) {
                errs.push(format!("tolerances.{k}: {v} must be positive"));
            }
        }
        errs
    }
}

/// Command-line values that override the file and the defaults.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub d: Option<usize>,
    pub s: Option<Vec<f64>>,
    pub upsilon: Option<i64>,
    pub cutoff: Option<i64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum ConfigError {
    Io(PathBuf, std::io::Error),
    Parse(PathBuf, String),
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            ConfigError::Parse(p, e) => write!(f, "{}: {e}", p.display()),
            ConfigError::Invalid(errs) => {
                write!(f, "invalid configuration:\n  {}", errs.join("\n  "))
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Defaults for the suite, overlaid by the JSON file (any subset of fields,
/// with `tolerances` merged key by key) and then by the flags.
pub fn resolve(
    target: Target,
    file: Option<&Path>,
    ov: &Overrides,
) -> Result<SuiteConfig, ConfigError> {
    let doc = match file {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| ConfigError::Io(p.to_path_buf(), e))?;
            let v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| ConfigError::Parse(p.to_path_buf(), e.to_string()))?;
            if !v.is_object() {
                return Err(ConfigError::Parse(
                    p.to_path_buf(),
                    "expected a JSON object".into(),
                ));
            }
            Some((p.to_path_buf(), v))
        }
        None => None,
    };
    let file_d = doc
        .as_ref()
        .and_then(|(_, v)| v.get("d"))
        .and_then(|x| x.as_u64())
        .map(|x| x as usize);
    let d = ov.d.or(file_d).unwrap_or_else(|| target.default_d());
    let mut base = serde_json::to_value(target.defaults(d)).expect("defaults serialize");
    if let Some((path, v)) = &doc {
        merge(&mut base, v);
        base["d"] = serde_json::json!(d);
        let cfg: SuiteConfig = serde_json::from_value(base.clone())
            .map_err(|e| ConfigError::Parse(path.clone(), e.to_string()))?;
        base = serde_json::to_value(cfg).expect("config serializes");
    }
    let mut cfg: SuiteConfig = serde_json::from_value(base).expect("merged config deserializes");
    if let Some(s) = &ov.s {
        cfg.s = s.clone();
    }
    if let Some(u) = ov.upsilon {
        cfg.upsilon = u;
    }
    if let Some(c) = ov.cutoff {
        cfg.cutoff = c;
    }
    if let Some(o) = &ov.out {
        cfg.out = o.clone();
    }
    let errs = target.validate(&cfg);
    if !errs.is_empty() {
        return Err(ConfigError::Invalid(errs));
    }
    Ok(cfg)
}

fn merge(base: &mut serde_json::Value, over: &serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}
