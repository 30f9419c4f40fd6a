//! Run configuration: a flat key-value file merged with command-line flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cgad::{Grid, ModeIndex, PotentialKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.to_string(), message: message.into() }
    }
}

pub type Raw = BTreeMap<String, String>;

pub const KEYS: &[&str] = &[
    "potential",
    "kappa",
    "dim",
    "domain",
    "grid_n",
    "beta",
    "index",
    "init",
    "perturb",
    "tau",
    "tol",
    "max_steps",
    "out",
    "jobs",
    "dump_fields",
    "certify",
    "preserve_symmetry",
];

/// One term `sign * mode` of an initial-data expression such as `10+01`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub sign: f64,
    pub mode: ModeIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// The analytic mode of each requested index, with the lower modes as
    /// ascent directions.
    Modes,
    /// `phi` as a signed sum of modes, optionally with explicit directions
    /// after a colon: `11:00;10;01`.
    Expression { phi: Vec<Term>, directions: Option<Vec<ModeIndex>> },
    /// `phi` read from a field file; directions are the lowest modes.
    File(PathBuf),
}

/// `7` in 1D; the compact `10` in 2D when every entry is one digit, else `1,12`.
pub fn mode_text(m: &ModeIndex) -> String {
    if m.dim() > 1 && m.0.iter().any(|j| *j > 9) {
        m.0.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(",")
    } else if m.dim() == 1 {
        m.0[0].to_string()
    } else {
        m.to_string()
    }
}

fn parse_mode(s: &str, dim: usize) -> Result<ModeIndex, ConfigError> {
    let s = s.trim();
    let mode = if dim == 1 {
        ModeIndex::new([s.parse::<usize>().map_err(|_| ConfigError::new("init", format!("invalid mode `{s}`")))?])
    } else {
        s.parse::<ModeIndex>().map_err(|e| ConfigError::new("init", e.to_string()))?
    };
    if mode.dim() != dim {
        return Err(ConfigError::new("init", format!("mode `{s}` is not {dim}D")));
    }
    Ok(mode)
}

impl InitSpec {
    pub fn label(&self) -> String {
        match self {
            InitSpec::Modes => "modes".into(),
            InitSpec::Expression { phi, .. } => {
                let mut s = String::new();
                for (i, t) in phi.iter().enumerate() {
                    if i > 0 || t.sign < 0.0 {
                        s.push(if t.sign < 0.0 { '-' } else { '+' });
                    }
                    s.push_str(&mode_text(&t.mode));
                }
                s
            }
            InitSpec::File(p) => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        }
    }

    /// `modes`, a field file path, or an expression like `10+01:00` whose
    /// modes are `dim`-dimensional.
    pub fn parse(s: &str, dim: usize) -> Result<Self, ConfigError> {
        let s = s.trim();
        if s.is_empty() || s == "modes" {
            return Ok(InitSpec::Modes);
        }
        if s.ends_with(".cgadfld") || Path::new(s).is_file() {
            return Ok(InitSpec::File(PathBuf::from(s)));
        }
        let (phi_part, dir_part) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        let mut phi = Vec::new();
        let mut sign = 1.0;
        let mut current = String::new();
        let mut push = |current: &mut String, sign: f64| -> Result<(), ConfigError> {
            if current.is_empty() {
                return Err(ConfigError::new("init", format!("empty mode in `{s}`")));
            }
            let mode = parse_mode(current, dim)?;
            phi.push(Term { sign, mode });
            current.clear();
            Ok(())
        };
        for (i, c) in phi_part.chars().enumerate() {
            match c {
                '+' | '-' if i == 0 => sign = if c == '-' { -1.0 } else { 1.0 },
                '+' | '-' => {
                    push(&mut current, sign)?;
                    sign = if c == '-' { -1.0 } else { 1.0 };
                }
                c if c.is_whitespace() => {}
                c => current.push(c),
            }
        }
        push(&mut current, sign)?;
        let directions = dir_part
            .map(|d| {
                d.split(';')
                    .filter(|x| !x.trim().is_empty())
                    .map(|x| parse_mode(x, dim))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;
        Ok(InitSpec::Expression { phi, directions })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub potential: PotentialKind,
    pub kappa: f64,
    pub dim: usize,
    pub domain: (f64, f64),
    pub grid_n: usize,
    pub betas: Vec<f64>,
    pub indices: Vec<usize>,
    pub init: InitSpec,
    pub perturb: Option<(f64, u64)>,
    pub tau: f64,
    pub tol: f64,
    pub max_steps: usize,
    pub out: PathBuf,
    pub jobs: usize,
    pub dump_fields: bool,
    pub certify: bool,
    pub preserve_symmetry: bool,
}

/// Reads a flat TOML file into raw string values. Arrays become comma lists.
pub fn read_config_file(path: &Path) -> Result<Raw, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<Raw, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::new("config", e.to_string()))?;
    let mut raw = Raw::new();
    for (key, value) in table {
        let key = key.replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::new(&key, "unknown key"));
        }
        raw.insert(key.clone(), scalar_string(&key, &value)?);
    }
    Ok(raw)
}

fn scalar_string(key: &str, value: &toml::Value) -> Result<String, ConfigError> {
    Ok(match value {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items
            .iter()
            .map(|v| scalar_string(key, v))
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        _ => return Err(ConfigError::new(key, "nested tables are not supported")),
    })
}

fn number<T: FromStr>(raw: &Raw, key: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.get(key)
        .map(|s| s.trim().parse::<T>().map_err(|e| ConfigError::new(key, format!("`{s}`: {e}"))))
        .transpose()
}

fn flag(raw: &Raw, key: &str) -> Result<bool, ConfigError> {
    match raw.get(key).map(|s| s.trim()) {
        None => Ok(false),
        Some("true") | Some("1") | Some("yes") | Some("") => Ok(true),
        Some("false") | Some("0") | Some("no") => Ok(false),
        Some(other) => Err(ConfigError::new(key, format!("expected true or false, got `{other}`"))),
    }
}

fn list<T: FromStr>(key: &str, s: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| ConfigError::new(key, format!("`{x}`: {e}"))))
        .collect()
}

fn parse_indices(s: &str) -> Result<Vec<usize>, ConfigError> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| if x == "g" { Ok(0) } else { x.parse().map_err(|e| ConfigError::new("index", format!("`{x}`: {e}"))) })
        .collect()
}

pub fn default_domain(kind: PotentialKind, dim: usize) -> (f64, f64) {
    match (kind, dim) {
        (PotentialKind::Box, _) => (0.0, 1.0),
        (_, 1) => (-16.0, 16.0),
        _ => (-10.0, 10.0),
    }
}

/// Mesh size used when `grid_n` is not given.
pub const DEFAULT_SPACING: f64 = 1.0 / 32.0;

impl RunConfig {
    /// Resolves raw values, applying defaults for missing keys.
    /// `default_indices` is used when `index` is absent.
    pub fn from_raw(raw: &Raw, default_indices: &[usize]) -> Result<Self, ConfigError> {
        let potential = match raw.get("potential") {
            Some(s) => s.parse::<PotentialKind>().map_err(|e| ConfigError::new("potential", e.to_string()))?,
            None => PotentialKind::Box,
        };
        let dim = number::<usize>(raw, "dim")?.unwrap_or(1);
        if !(1..=2).contains(&dim) {
            return Err(ConfigError::new("dim", format!("must be 1 or 2, got {dim}")));
        }
        let kappa = number::<f64>(raw, "kappa")?
            .unwrap_or(if potential == PotentialKind::HarmonicLattice { 25.0 } else { 0.0 });
        if !kappa.is_finite() {
            return Err(ConfigError::new("kappa", "must be finite"));
        }
        let domain = match raw.get("domain") {
            Some(s) => {
                let v: Vec<f64> = list("domain", s)?;
                if v.len() != 2 {
                    return Err(ConfigError::new("domain", format!("expected `a,b`, got `{s}`")));
                }
                (v[0], v[1])
            }
            None => default_domain(potential, dim),
        };
        if !(domain.0.is_finite() && domain.1.is_finite() && domain.0 < domain.1) {
            return Err(ConfigError::new("domain", format!("need a < b, got {},{}", domain.0, domain.1)));
        }
        if potential == PotentialKind::Box && domain.0 != 0.0 {
            return Err(ConfigError::new("domain", "the box potential needs a domain of the form 0,L"));
        }
        let grid_n = number::<usize>(raw, "grid_n")?
            .unwrap_or_else(|| Grid::nodes_for_spacing(domain.0, domain.1, DEFAULT_SPACING));
        if grid_n < 2 {
            return Err(ConfigError::new("grid_n", format!("need at least 2 nodes, got {grid_n}")));
        }
        let betas: Vec<f64> = list("beta", raw.get("beta").map(String::as_str).unwrap_or("0"))?;
        if betas.is_empty() || betas.iter().any(|b| !b.is_finite()) {
            return Err(ConfigError::new("beta", "need one or more finite values"));
        }
        let indices = match raw.get("index") {
            Some(s) => parse_indices(s)?,
            None => default_indices.to_vec(),
        };
        if indices.is_empty() {
            return Err(ConfigError::new("index", "need one or more indices"));
        }
        let init = raw.get("init").map(|s| InitSpec::parse(s, dim)).transpose()?.unwrap_or(InitSpec::Modes);
        if let InitSpec::Expression { directions, .. } = &init {
            if let Some(d) = directions {
                if indices.iter().any(|k| *k != d.len()) {
                    return Err(ConfigError::new("index", format!("init lists {} directions", d.len())));
                }
            }
        }
        let perturb = match raw.get("perturb") {
            Some(s) => {
                let parts: Vec<&str> = s.split(',').map(str::trim).collect();
                let magnitude: f64 = parts[0].parse().map_err(|e| ConfigError::new("perturb", format!("{e}")))?;
                let seed: u64 = match parts.get(1) {
                    Some(x) => x.parse().map_err(|e| ConfigError::new("perturb", format!("{e}")))?,
                    None => 0,
                };
                if parts.len() > 2 || !(magnitude >= 0.0 && magnitude.is_finite()) {
                    return Err(ConfigError::new("perturb", format!("expected `magnitude,seed`, got `{s}`")));
                }
                Some((magnitude, seed))
            }
            None => None,
        };
        let tau = number::<f64>(raw, "tau")?.unwrap_or(cgad::bec::DEFAULT_TAU);
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(ConfigError::new("tau", format!("must be positive, got {tau}")));
        }
        let tol = number::<f64>(raw, "tol")?.unwrap_or(cgad::bec::DEFAULT_EPSILON);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(ConfigError::new("tol", format!("must be positive, got {tol}")));
        }
        let max_steps = number::<usize>(raw, "max_steps")?.unwrap_or(cgad::bec::DEFAULT_MAX_STEPS);
        if max_steps == 0 {
            return Err(ConfigError::new("max_steps", "must be positive"));
        }
        let jobs = match number::<usize>(raw, "jobs")? {
            Some(0) => return Err(ConfigError::new("jobs", "must be positive")),
            Some(j) => j,
            None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        Ok(Self {
            potential,
            kappa,
            dim,
            domain,
            grid_n,
            betas,
            indices,
            init,
            perturb,
            tau,
            tol,
            max_steps,
            out: raw.get("out").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("cgad-out")),
            jobs,
            dump_fields: flag(raw, "dump_fields")?,
            certify: flag(raw, "certify")?,
            preserve_symmetry: flag(raw, "preserve_symmetry")?,
        })
    }

    /// Flat `key = "value"` text that [`parse_config_text`] reads back.
    pub fn echo(&self) -> String {
        let join = |v: &[String]| v.join(",");
        let init = match &self.init {
            InitSpec::Modes => "modes".to_string(),
            InitSpec::File(p) => p.display().to_string(),
            InitSpec::Expression { directions, .. } => {
                let mut s = self.init.label();
                if let Some(d) = directions {
                    s.push(':');
                    s.push_str(&d.iter().map(mode_text).collect::<Vec<_>>().join(";"));
                }
                s
            }
        };
        let mut entries: Vec<(&str, String)> = vec![
            ("potential", self.potential.name().to_string()),
            ("kappa", self.kappa.to_string()),
            ("dim", self.dim.to_string()),
            ("domain", format!("{},{}", self.domain.0, self.domain.1)),
            ("grid_n", self.grid_n.to_string()),
            ("beta", join(&self.betas.iter().map(|b| b.to_string()).collect::<Vec<_>>())),
            ("index", join(&self.indices.iter().map(|k| k.to_string()).collect::<Vec<_>>())),
            ("init", init),
            ("tau", self.tau.to_string()),
            ("tol", self.tol.to_string()),
            ("max_steps", self.max_steps.to_string()),
            ("out", self.out.display().to_string()),
            ("jobs", self.jobs.to_string()),
            ("dump_fields", self.dump_fields.to_string()),
            ("certify", self.certify.to_string()),
            ("preserve_symmetry", self.preserve_symmetry.to_string()),
        ];
        if let Some((m, s)) = self.perturb {
            entries.push(("perturb", format!("{m},{s}")));
        }
        let mut text = String::new();
        for (k, v) in entries {
            writeln!(text, "{k} = \"{}\"", v.replace('\\', "\\\\").replace('"', "\\\"")).unwrap();
        }
        text
    }
}
