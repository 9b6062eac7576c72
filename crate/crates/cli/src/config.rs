//! Experiment configuration: a line-oriented `key = value` format with
//! `[section]` headers and `#` comments.
//!
//! ```text
//! [model]
//! kind = continuum2d
//! Lx = 1
//! Ly = 1.8
//! d = 1
//!
//! [sweep]
//! quantity = omega
//! start = 1.001 pi
//! stop = 3 pi
//! points = 500
//! ```
//!
//! Parsing reports every problem it finds, each tagged with its line.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use cmt_core::chain::ChainLeads;
use cmt_core::GridSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// All problems found in one configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// How a separable continuum model evaluates its S-matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    /// Explicit truncated mode expansion of `H_eff`.
    Modes,
    /// Longitudinal (axial) mode sum done in closed form; S-matrix only.
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Chain {
        sites: usize,
        hopping: f64,
        leads: ChainLeads,
    },
    Lattice {
        n: usize,
        m: usize,
        p: usize,
        a0: f64,
    },
    Continuum {
        lx: f64,
        ly: f64,
        d: f64,
        n_max: usize,
        m_max: usize,
        p_max: usize,
        evaluation: Evaluation,
    },
    Cylinder {
        radius: f64,
        length: f64,
        a: f64,
        n_max: usize,
        m_max: usize,
        p_max: usize,
        evaluation: Evaluation,
    },
    CylinderMixed {
        radius: f64,
        length: f64,
        a: f64,
        slices: usize,
        m_max: usize,
        p_max: usize,
    },
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Chain { .. } => "chain1d",
            ModelSpec::Lattice { .. } => "lattice2d",
            ModelSpec::Continuum { .. } => "continuum2d",
            ModelSpec::Cylinder { .. } => "cylinder",
            ModelSpec::CylinderMixed { .. } => "cylinder-mixed",
        }
    }

    /// Tight-binding models take energies directly; acoustic ones use `E = omega^2`.
    pub fn is_acoustic(&self) -> bool {
        !matches!(self, ModelSpec::Chain { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Omega,
    Energy,
}

impl Quantity {
    pub fn to_energy(self, value: f64) -> f64 {
        match self {
            Quantity::Omega => value * value,
            Quantity::Energy => value,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Quantity::Omega => "omega",
            Quantity::Energy => "E",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub quantity: Quantity,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Sweep {
    /// Evenly spaced sweep values, endpoints included.
    pub fn values(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSettings {
    pub grid: GridSpec,
    /// Working point as `(quantity, value)`, overridable on the command line.
    pub at: Option<(Quantity, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outputs {
    pub spectrum: Option<PathBuf>,
    pub field: Option<PathBuf>,
    pub resonances: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub sweep: Option<Sweep>,
    /// Incoming transverse channel indices (left lead unless the chain only has a right lead).
    pub incoming: Vec<usize>,
    pub amplitude: f64,
    pub field: FieldSettings,
    /// Probe energies for resonance snapshots.
    pub probes: Vec<f64>,
    pub outputs: Outputs,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigErrors> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigErrors(vec![ConfigError {
                line: None,
                message: format!("cannot read {}: {e}", path.display()),
            }])
        })?;
        let mut cfg = parse_config(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.outputs.spectrum,
            &mut cfg.outputs.field,
            &mut cfg.outputs.resonances,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

const SECTIONS: [&str; 6] = [
    "model",
    "sweep",
    "incoming",
    "field",
    "resonances",
    "output",
];

struct Entry {
    line: usize,
    value: String,
}

/// Keys of one section, tracking which ones were read.
struct Section<'a> {
    name: &'static str,
    header: Option<usize>,
    entries: BTreeMap<String, Entry>,
    used: BTreeSet<String>,
    errors: &'a mut Vec<ConfigError>,
}

impl Section<'_> {
    fn present(&self) -> bool {
        self.header.is_some()
    }

    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.used.insert(key.to_string());
        self.entries.get(key).map(|e| (e.line, e.value.clone()))
    }

    fn error(&mut self, line: Option<usize>, message: String) {
        self.errors.push(ConfigError { line, message });
    }

    fn missing(&mut self, key: &str) {
        let message = format!("missing required key `{key}` in [{}]", self.name);
        self.error(self.header, message);
    }

    fn parse<T>(&mut self, key: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Option<T> {
        let (line, value) = self.raw(key)?;
        let parsed = f(&value);
        if parsed.is_none() {
            self.error(Some(line), format!("`{key}` expects {what}, got `{value}`"));
        }
        parsed
    }

    fn real(&mut self, key: &str) -> Option<f64> {
        self.parse(key, "a number", parse_real)
    }

    fn count(&mut self, key: &str) -> Option<usize> {
        self.parse(key, "a non-negative integer", |v| v.parse().ok())
    }

    fn reals(&mut self, key: &str) -> Option<Vec<f64>> {
        self.parse(key, "a comma-separated list of numbers", |v| {
            v.split(',').map(parse_real).collect()
        })
    }

    fn counts(&mut self, key: &str) -> Option<Vec<usize>> {
        self.parse(key, "a comma-separated list of integers", |v| {
            v.split(',').map(|s| s.trim().parse().ok()).collect()
        })
    }

    fn required_real(&mut self, key: &str) -> Option<f64> {
        let has = self.entries.contains_key(key);
        let v = self.real(key);
        if !has {
            self.missing(key);
        }
        v
    }

    fn required_count(&mut self, key: &str) -> Option<usize> {
        let has = self.entries.contains_key(key);
        let v = self.count(key);
        if !has {
            self.missing(key);
        }
        v
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line).or(self.header)
    }

    /// Reports every key that was never read.
    fn finish(self) {
        for (key, entry) in &self.entries {
            if !self.used.contains(key) {
                self.errors.push(ConfigError {
                    line: Some(entry.line),
                    message: format!("unknown key `{key}` in [{}]", self.name),
                });
            }
        }
    }
}

/// Parses a number, optionally scaled by `pi`: `2`, `1.5e-3`, `pi`, `1.5 pi`,
/// `1.5*pi`, `3pi/2`.
pub fn parse_real(text: &str) -> Option<f64> {
    let t = text.trim();
    let value = if let Some(pos) = t.find("pi") {
        let (head, tail) = (
            t[..pos].trim().trim_end_matches('*').trim(),
            t[pos + 2..].trim(),
        );
        let factor = if head.is_empty() {
            1.0
        } else {
            head.parse::<f64>().ok()?
        };
        let divisor = if tail.is_empty() {
            1.0
        } else {
            tail.strip_prefix('/')?.trim().parse::<f64>().ok()?
        };
        factor * std::f64::consts::PI / divisor
    } else {
        t.parse::<f64>().ok()?
    };
    value.is_finite().then_some(value)
}

/// Parses and validates a configuration, collecting every error.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let mut raw: BTreeMap<&'static str, (Option<usize>, BTreeMap<String, Entry>)> = SECTIONS
        .iter()
        .map(|s| (*s, (None, BTreeMap::new())))
        .collect();
    let mut current: Option<&'static str> = None;

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            match SECTIONS.iter().find(|s| **s == name) {
                Some(s) => {
                    let slot = raw.get_mut(s).expect("known section");
                    if slot.0.is_some() {
                        errors.push(ConfigError {
                            line: Some(lineno),
                            message: format!("section [{name}] appears twice"),
                        });
                    }
                    slot.0 = Some(lineno);
                    current = Some(s);
                }
                None => {
                    errors.push(ConfigError {
                        line: Some(lineno),
                        message: format!("unknown section [{name}]"),
                    });
                    current = None;
                }
            }
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(ConfigError {
                line: Some(lineno),
                message: format!("expected `key = value`, got `{content}`"),
            });
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(section) = current else {
            if raw.values().all(|s| s.0.is_none()) {
                errors.push(ConfigError {
                    line: Some(lineno),
                    message: format!("key `{key}` appears before any [section]"),
                });
            }
            continue;
        };
        let entries = &mut raw.get_mut(section).expect("known section").1;
        if entries.contains_key(key) {
            errors.push(ConfigError {
                line: Some(lineno),
                message: format!("duplicate key `{key}` in [{section}]"),
            });
        }
        entries.insert(
            key.to_string(),
            Entry {
                line: lineno,
                value: value.to_string(),
            },
        );
    }

    let mut take = |name: &'static str| raw.remove(name).expect("known section");

    // [model]
    let (header, entries) = take("model");
    let mut sec = Section {
        name: "model",
        header,
        entries,
        used: BTreeSet::new(),
        errors: &mut errors,
    };
    let model = if !sec.present() {
        sec.error(None, "missing [model] section".into());
        None
    } else {
        parse_model(&mut sec)
    };
    sec.finish();

    // [sweep]
    let (header, entries) = take("sweep");
    let mut sec = Section {
        name: "sweep",
        header,
        entries,
        used: BTreeSet::new(),
        errors: &mut errors,
    };
    let acoustic = model.as_ref().is_none_or(ModelSpec::is_acoustic);
    let sweep = if sec.present() {
        parse_sweep(&mut sec, acoustic)
    } else {
        None
    };
    sec.finish();

    // [incoming]
    let (header, entries) = take("incoming");
    let mut sec = Section {
        name: "incoming",
        header,
        entries,
        used: BTreeSet::new(),
        errors: &mut errors,
    };
    let incoming = sec.counts("channels").unwrap_or_else(|| vec![0]);
    if incoming.is_empty() {
        let line = sec.line_of("channels");
        sec.error(line, "`channels` must list at least one channel".into());
    }
    let amplitude = sec.real("amplitude").unwrap_or(1.0);
    if let Some(ModelSpec::Chain { .. }) = model {
        if incoming.iter().any(|&c| c != 0) {
            let line = sec.line_of("channels");
            sec.error(line, "a chain lead has a single channel 0".into());
        }
    }
    sec.finish();

    // [field]
    let (header, entries) = take("field");
    let mut sec = Section {
        name: "field",
        header,
        entries,
        used: BTreeSet::new(),
        errors: &mut errors,
    };
    let defaults = GridSpec::default();
    let grid = GridSpec {
        nx: sec.count("nx").unwrap_or(defaults.nx),
        ny: sec.count("ny").unwrap_or(defaults.ny),
        stub: sec.real("stub").unwrap_or(defaults.stub),
    };
    if grid.nx < 2 || grid.ny < 2 || grid.stub < 0.0 {
        let line = sec.header;
        sec.error(
            line,
            "field grid needs nx >= 2, ny >= 2 and stub >= 0".into(),
        );
    }
    let omega = sec.real("omega").map(|v| (Quantity::Omega, v));
    let energy = sec.real("E").map(|v| (Quantity::Energy, v));
    if omega.is_some() && energy.is_some() {
        let line = sec.line_of("E");
        sec.error(line, "give either `omega` or `E`, not both".into());
    }
    let field = FieldSettings {
        grid,
        at: omega.or(energy),
    };
    sec.finish();

    // [resonances]
    let (header, entries) = take("resonances");
    let mut sec = Section {
        name: "resonances",
        header,
        entries,
        used: BTreeSet::new(),
        errors: &mut errors,
    };
    let mut probes = sec.reals("energies").unwrap_or_default();
    probes.extend(
        sec.reals("omegas")
            .unwrap_or_default()
            .into_iter()
            .map(|w| w * w),
    );
    if sec.present() && probes.is_empty() {
        let line = sec.header;
        sec.error(line, "[resonances] needs `energies` or `omegas`".into());
    }
    if let Some(
        ModelSpec::Continuum {
            evaluation: Evaluation::ClosedForm,
            ..
        }
        | ModelSpec::Cylinder {
            evaluation: Evaluation::ClosedForm,
            ..
        },
    ) = model
    {
        if sec.present() {
            let line = sec.header;
            sec.error(line, "resonance snapshots need `evaluation = modes`".into());
        }
    }
    sec.finish();

    // [output]
    let (header, entries) = take("output");
    let mut sec = Section {
        name: "output",
        header,
        entries,
        used: BTreeSet::new(),
        errors: &mut errors,
    };
    let path = |sec: &mut Section, key: &str| sec.raw(key).map(|(_, v)| PathBuf::from(v));
    let outputs = Outputs {
        spectrum: path(&mut sec, "spectrum"),
        field: path(&mut sec, "field"),
        resonances: path(&mut sec, "resonances"),
    };
    sec.finish();

    match model {
        Some(model) if errors.is_empty() => Ok(ExperimentConfig {
            model,
            sweep,
            incoming,
            amplitude,
            field,
            probes,
            outputs,
        }),
        _ => {
            errors.sort_by_key(|e| e.line.unwrap_or(0));
            Err(ConfigErrors(errors))
        }
    }
}

fn parse_model(sec: &mut Section) -> Option<ModelSpec> {
    let kind = match sec.raw("kind") {
        Some((_, k)) => k,
        None => {
            sec.missing("kind");
            return None;
        }
    };
    let positive = |sec: &mut Section, key: &str, v: Option<f64>| -> Option<f64> {
        match v {
            Some(x) if x > 0.0 => Some(x),
            Some(x) => {
                let line = sec.line_of(key);
                sec.error(line, format!("`{key}` must be positive, got {x}"));
                None
            }
            None => None,
        }
    };
    let at_least_one = |sec: &mut Section, key: &str, v: Option<usize>| -> Option<usize> {
        match v {
            Some(0) => {
                let line = sec.line_of(key);
                sec.error(line, format!("`{key}` must be at least 1"));
                None
            }
            other => other,
        }
    };
    let evaluation = |sec: &mut Section| -> Option<Evaluation> {
        match sec.raw("evaluation") {
            None => Some(Evaluation::Modes),
            Some((_, v)) if v == "modes" => Some(Evaluation::Modes),
            Some((_, v)) if v == "closed-form" => Some(Evaluation::ClosedForm),
            Some((line, v)) => {
                sec.error(
                    Some(line),
                    format!("`evaluation` expects `modes` or `closed-form`, got `{v}`"),
                );
                None
            }
        }
    };

    match kind.as_str() {
        "chain1d" => {
            let sites = sec.required_count("N");
            let sites = at_least_one(sec, "N", sites);
            let hopping = sec.required_real("t");
            if let Some(t) = hopping {
                if t < 0.0 {
                    let line = sec.line_of("t");
                    sec.error(line, format!("`t` must be non-negative, got {t}"));
                }
            }
            let leads = match sec.raw("leads").as_ref().map(|(l, v)| (*l, v.as_str())) {
                None | Some((_, "both")) => Some(ChainLeads::Both),
                Some((_, "left")) => Some(ChainLeads::Left),
                Some((_, "right")) => Some(ChainLeads::Right),
                Some((line, v)) => {
                    sec.error(
                        Some(line),
                        format!("`leads` expects `both`, `left` or `right`, got `{v}`"),
                    );
                    None
                }
            };
            Some(ModelSpec::Chain {
                sites: sites?,
                hopping: hopping.filter(|t| *t >= 0.0)?,
                leads: leads?,
            })
        }
        "lattice2d" => {
            let n = sec.required_count("N");
            let m = sec.required_count("M");
            let p = sec.required_count("P");
            let a0 = sec.required_real("a0");
            let n = at_least_one(sec, "N", n);
            let m = at_least_one(sec, "M", m);
            let p = at_least_one(sec, "P", p);
            let a0 = positive(sec, "a0", a0);
            let (n, m, p, a0) = (n?, m?, p?, a0?);
            if p > m {
                let line = sec.line_of("P");
                sec.error(
                    line,
                    format!("waveguide width P = {p} exceeds resonator width M = {m}"),
                );
                return None;
            }
            if (m - p) % 2 != 0 {
                let line = sec.line_of("P");
                sec.error(
                    line,
                    format!("M - P = {} must be even for a centered waveguide", m - p),
                );
                return None;
            }
            Some(ModelSpec::Lattice { n, m, p, a0 })
        }
        "continuum2d" => {
            let lx = sec.required_real("Lx");
            let ly = sec.required_real("Ly");
            let d = sec.required_real("d");
            let lx = positive(sec, "Lx", lx);
            let ly = positive(sec, "Ly", ly);
            let d = positive(sec, "d", d);
            let n_max = sec.count("n_max").unwrap_or(20);
            let m_max = sec.count("m_max").unwrap_or(20);
            let p_max = sec.count("p_max").unwrap_or(20);
            let n_max = at_least_one(sec, "n_max", Some(n_max));
            let m_max = at_least_one(sec, "m_max", Some(m_max));
            let p_max = at_least_one(sec, "p_max", Some(p_max));
            let evaluation = evaluation(sec);
            let (lx, ly, d) = (lx?, ly?, d?);
            if d > ly {
                let line = sec.line_of("d");
                sec.error(
                    line,
                    format!("waveguide width d = {d} exceeds resonator width Ly = {ly}"),
                );
                return None;
            }
            Some(ModelSpec::Continuum {
                lx,
                ly,
                d,
                n_max: n_max?,
                m_max: m_max?,
                p_max: p_max?,
                evaluation: evaluation?,
            })
        }
        "cylinder" | "cylinder-mixed" => {
            let radius = sec.required_real("R");
            let length = sec.required_real("L");
            let radius = positive(sec, "R", radius);
            let length = positive(sec, "L", length);
            let a = sec.real("a").unwrap_or(1.0);
            let a = positive(sec, "a", Some(a));
            let m_max = sec.count("m_max").unwrap_or(20);
            let m_max = at_least_one(sec, "m_max", Some(m_max));
            let p_max = sec.count("p_max").unwrap_or(10);
            let p_max = at_least_one(sec, "p_max", Some(p_max));
            let (radius, length, a, m_max, p_max) = (radius?, length?, a?, m_max?, p_max?);
            if a > radius {
                let line = sec.line_of("a");
                sec.error(
                    line,
                    format!("waveguide radius a = {a} exceeds resonator radius R = {radius}"),
                );
                return None;
            }
            if kind == "cylinder" {
                let n_max = sec.count("n_max").unwrap_or(20);
                let n_max = at_least_one(sec, "n_max", Some(n_max))?;
                Some(ModelSpec::Cylinder {
                    radius,
                    length,
                    a,
                    n_max,
                    m_max,
                    p_max,
                    evaluation: evaluation(sec)?,
                })
            } else {
                let slices = sec.count("N").unwrap_or(20);
                if slices < 2 {
                    let line = sec.line_of("N");
                    sec.error(
                        line,
                        format!("mixed representation needs N >= 2 slices, got {slices}"),
                    );
                    return None;
                }
                Some(ModelSpec::CylinderMixed {
                    radius,
                    length,
                    a,
                    slices,
                    m_max,
                    p_max,
                })
            }
        }
        other => {
            let line = sec.line_of("kind");
            sec.error(
                line,
                format!("unknown model kind `{other}` (expected chain1d, lattice2d, continuum2d, cylinder or cylinder-mixed)"),
            );
            None
        }
    }
}

fn parse_sweep(sec: &mut Section, acoustic: bool) -> Option<Sweep> {
    let quantity = match sec.raw("quantity") {
        None => Some(if acoustic {
            Quantity::Omega
        } else {
            Quantity::Energy
        }),
        Some((_, q)) if q == "omega" => Some(Quantity::Omega),
        Some((_, q)) if q == "E" => Some(Quantity::Energy),
        Some((line, q)) => {
            sec.error(
                Some(line),
                format!("`quantity` expects `omega` or `E`, got `{q}`"),
            );
            None
        }
    };
    let start = sec.required_real("start");
    let stop = sec.required_real("stop");
    let points = sec.required_count("points");
    let (quantity, start, stop, points) = (quantity?, start?, stop?, points?);
    let mut ok = true;
    if start >= stop {
        let line = sec.line_of("stop");
        sec.error(
            line,
            format!("sweep needs start < stop, got {start} >= {stop}"),
        );
        ok = false;
    }
    if points < 2 {
        let line = sec.line_of("points");
        sec.error(line, format!("sweep needs at least 2 points, got {points}"));
        ok = false;
    }
    if quantity == Quantity::Omega && start < 0.0 {
        let line = sec.line_of("start");
        sec.error(
            line,
            format!("omega sweep must start at a non-negative value, got {start}"),
        );
        ok = false;
    }
    ok.then_some(Sweep {
        quantity,
        start,
        stop,
        points,
    })
}
