//! Scenario files: TOML with strict key checking.
//!
//! Every section rejects unknown keys, and family- or kind-specific keys are
//! rejected when they do not apply, so a misspelt physics parameter can never
//! fall back to a default silently.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: GridSection,
    pub window: WindowSection,
    pub hamiltonian: Option<HamiltonianSection>,
    pub run: Option<RunSection>,
    pub verify: Option<VerifySection>,
    pub spectrum: Option<SpectrumSection>,
    pub quantize: Option<QuantizeSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    /// `[lo, hi)` of every position axis.
    pub extent: [f64; 2],
    pub points: usize,
    #[serde(default = "one")]
    pub hbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// One-dimensional Hermite function, key `index`.
    Hermite,
    /// Planar winding profile, key `m`.
    Planar,
    /// Radial Gaussian times `Y_S^m`, keys `s` and `m`.
    Radial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub family: Family,
    pub lambda: f64,
    pub index: Option<usize>,
    pub m: Option<i32>,
    pub s: Option<usize>,
    /// Momentum samples of the frame; defaults to `grid.points`.
    pub momentum_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianKind {
    Free,
    Harmonic,
    Quartic,
    /// Polynomial potential given as a table of monomials.
    CustomPotential,
    Magnetic,
}

/// `coef · Π pᵢ^{p[i]} qᵢ^{q[i]}`; missing exponent lists are all zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    pub p: Option<Vec<u32>>,
    pub q: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSection {
    pub kind: HamiltonianKind,
    #[serde(default = "one")]
    pub mass: f64,
    /// Harmonic frequency.
    pub omega: Option<f64>,
    /// Quartic coupling `c` in `(c/4)Σqᵢ⁴`.
    pub coupling: Option<f64>,
    /// Custom potential terms (position exponents only).
    pub potential: Option<Vec<Monomial>>,
    /// Magnetic charge `e`, uniform field `B` and optional g-factor.
    pub charge: Option<f64>,
    pub field: Option<f64>,
    pub g: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorChoice {
    Yoshida4,
    Strang,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunOutput {
    /// `evolution.csv` (or `comparison.csv` for `compare`).
    Timeseries,
    /// `summary.json`.
    Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    Gaussian,
    /// Seeded random smooth state.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default = "gaussian")]
    pub kind: InitialKind,
    pub q0: Option<Vec<f64>>,
    pub p0: Option<Vec<f64>>,
    pub sigma: Option<f64>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { kind: InitialKind::Gaussian, q0: None, p0: None, sigma: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_final: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    #[serde(default = "default_integrator")]
    pub integrator: IntegratorChoice,
    #[serde(default = "one_usize")]
    pub husimi_stride: usize,
    pub seed: Option<u64>,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<RunOutput>,
    #[serde(default)]
    pub initial: InitialSection,
}

/// Per-suite tolerance overrides; each replaces every tolerance of its suite.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub commutators: Option<f64>,
    pub involutions: Option<f64>,
    pub isometries: Option<f64>,
    pub signs: Option<f64>,
    pub energy: Option<f64>,
    pub weak: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub suites: Option<Vec<String>>,
    /// Random states per randomized check.
    #[serde(default = "default_states")]
    pub states: usize,
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(default = "default_levels")]
    pub levels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolChoice {
    /// `f ≡ 1`.
    One,
    /// The configured Hamiltonian operator.
    Hamiltonian,
    /// A polynomial given by `terms`.
    Polynomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteChoice {
    Grid,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixFormat {
    Binary,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizeSection {
    pub symbol: SymbolChoice,
    pub terms: Option<Vec<Monomial>>,
    #[serde(default = "default_route")]
    pub route: RouteChoice,
    #[serde(default = "default_format")]
    pub format: MatrixFormat,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn gaussian() -> InitialKind {
    InitialKind::Gaussian
}
fn default_steps() -> usize {
    2000
}
fn default_integrator() -> IntegratorChoice {
    IntegratorChoice::Yoshida4
}
fn default_outputs() -> Vec<RunOutput> {
    vec![RunOutput::Timeseries, RunOutput::Summary]
}
fn default_states() -> usize {
    5
}
fn default_levels() -> usize {
    20
}
fn default_route() -> RouteChoice {
    RouteChoice::Grid
}
fn default_format() -> MatrixFormat {
    MatrixFormat::Binary
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn require_absent<T>(v: &Option<T>, key: &str, why: &str) -> Result<(), CliError> {
    match v {
        Some(_) => Err(invalid(format!("key `{key}` does not apply {why}"))),
        None => Ok(()),
    }
}

fn positive(v: f64, key: &str) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("`{key}` must be positive and finite, got {v}")))
    }
}

impl Monomial {
    pub(crate) fn validate(&self, dim: usize, key: &str, position_only: bool) -> Result<(), CliError> {
        if !self.coef.is_finite() {
            return Err(invalid(format!("`{key}.coef` must be finite")));
        }
        for (name, e) in [("p", &self.p), ("q", &self.q)] {
            if let Some(e) = e {
                if e.len() != dim {
                    return Err(invalid(format!("`{key}.{name}` needs {dim} exponents, got {}", e.len())));
                }
            }
        }
        if position_only && self.p.as_ref().is_some_and(|p| p.iter().any(|&e| e > 0)) {
            return Err(invalid(format!("`{key}` is a potential and cannot depend on p")));
        }
        Ok(())
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| invalid(format!("parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.grid;
        if !(1..=3).contains(&g.dim) {
            return Err(invalid(format!("`grid.dim` must be 1, 2 or 3, got {}", g.dim)));
        }
        if !(g.extent[0].is_finite() && g.extent[1].is_finite() && g.extent[1] > g.extent[0]) {
            return Err(invalid(format!("`grid.extent` must be an increasing finite pair, got {:?}", g.extent)));
        }
        positive(g.hbar, "grid.hbar")?;

        let w = &self.window;
        positive(w.lambda, "window.lambda")?;
        let family_dim = match w.family {
            Family::Hermite => {
                require_absent(&w.m, "window.m", "to the hermite family")?;
                require_absent(&w.s, "window.s", "to the hermite family")?;
                1
            }
            Family::Planar => {
                require_absent(&w.index, "window.index", "to the planar family")?;
                require_absent(&w.s, "window.s", "to the planar family")?;
                2
            }
            Family::Radial => {
                require_absent(&w.index, "window.index", "to the radial family")?;
                let s = w.s.unwrap_or(0) as i64;
                let m = w.m.unwrap_or(0) as i64;
                if m.abs() > s {
                    return Err(invalid(format!("`window.m` = {m} exceeds `window.s` = {s}")));
                }
                3
            }
        };
        if family_dim != g.dim {
            return Err(invalid(format!("window family {:?} lives in dimension {family_dim}, grid has {}", w.family, g.dim)));
        }

        if let Some(h) = &self.hamiltonian {
            h.validate(g.dim)?;
        }
        if let Some(r) = &self.run {
            r.validate(g.dim)?;
        }
        if let Some(v) = &self.verify {
            for t in [v.tolerances.commutators, v.tolerances.involutions, v.tolerances.isometries]
                .into_iter()
                .chain([v.tolerances.signs, v.tolerances.energy, v.tolerances.weak])
                .flatten()
            {
                if !(t >= 0.0) {
                    return Err(invalid(format!("tolerances must be non-negative, got {t}")));
                }
            }
            if v.states == 0 {
                return Err(invalid("`verify.states` must be at least 1"));
            }
        }
        if let Some(q) = &self.quantize {
            match (q.symbol, &q.terms) {
                (SymbolChoice::Polynomial, Some(terms)) => {
                    for t in terms {
                        t.validate(g.dim, "quantize.terms", false)?;
                    }
                }
                (SymbolChoice::Polynomial, None) => return Err(invalid("`quantize.symbol = \"polynomial\"` needs `terms`")),
                (_, Some(_)) => return Err(invalid("`quantize.terms` applies only to `symbol = \"polynomial\"`")),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn hamiltonian(&self) -> Result<&HamiltonianSection, CliError> {
        self.hamiltonian.as_ref().ok_or_else(|| invalid("missing section [hamiltonian]"))
    }

    pub fn run(&self) -> Result<&RunSection, CliError> {
        self.run.as_ref().ok_or_else(|| invalid("missing section [run]"))
    }

    pub fn momentum_points(&self) -> usize {
        self.window.momentum_points.unwrap_or(self.grid.points)
    }
}

impl HamiltonianSection {
    fn validate(&self, dim: usize) -> Result<(), CliError> {
        use HamiltonianKind::*;
        positive(self.mass, "hamiltonian.mass")?;
        let why = format!("to kind {:?}", self.kind);
        let allow = |key: &str, v: Option<f64>, kinds: &[HamiltonianKind]| -> Result<(), CliError> {
            if kinds.contains(&self.kind) {
                Ok(())
            } else {
                require_absent(&v, key, &why)
            }
        };
        allow("hamiltonian.omega", self.omega, &[Harmonic])?;
        allow("hamiltonian.coupling", self.coupling, &[Quartic])?;
        allow("hamiltonian.charge", self.charge, &[Magnetic])?;
        allow("hamiltonian.field", self.field, &[Magnetic])?;
        allow("hamiltonian.g", self.g, &[Magnetic])?;
        if self.kind != CustomPotential {
            require_absent(&self.potential, "hamiltonian.potential", &why)?;
        }
        match self.kind {
            Harmonic => positive(self.omega.ok_or_else(|| invalid("harmonic needs `omega`"))?, "hamiltonian.omega")?,
            Quartic => {
                let c = self.coupling.ok_or_else(|| invalid("quartic needs `coupling`"))?;
                if !c.is_finite() {
                    return Err(invalid("`hamiltonian.coupling` must be finite"));
                }
            }
            CustomPotential => {
                let terms = self.potential.as_ref().ok_or_else(|| invalid("custom-potential needs `potential` terms"))?;
                if terms.is_empty() {
                    return Err(invalid("`hamiltonian.potential` is empty"));
                }
                for t in terms {
                    t.validate(dim, "hamiltonian.potential", true)?;
                }
            }
            Magnetic => {
                if dim < 2 {
                    return Err(invalid("a magnetic Hamiltonian needs grid.dim ≥ 2"));
                }
                for (k, v) in [("charge", self.charge), ("field", self.field)] {
                    if !v.ok_or_else(|| invalid(format!("magnetic needs `{k}`")))?.is_finite() {
                        return Err(invalid(format!("`hamiltonian.{k}` must be finite")));
                    }
                }
            }
            Free => {}
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        self.omega.unwrap_or(0.0)
    }
}

impl RunSection {
    fn validate(&self, dim: usize) -> Result<(), CliError> {
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(invalid(format!("`run.t_final` must be non-negative and finite, got {}", self.t_final)));
        }
        if self.steps > 0 && self.t_final == 0.0 {
            return Err(invalid("`run.t_final` must be positive when `run.steps` > 0"));
        }
        if self.record_every == 0 || self.steps % self.record_every != 0 {
            return Err(invalid(format!(
                "`run.steps` ({}) must be a multiple of `run.record_every` ({})",
                self.steps, self.record_every
            )));
        }
        if self.husimi_stride == 0 {
            return Err(invalid("`run.husimi_stride` must be at least 1"));
        }
        let i = &self.initial;
        for (key, v) in [("q0", &i.q0), ("p0", &i.p0)] {
            if let Some(v) = v {
                if v.len() != dim {
                    return Err(invalid(format!("`run.initial.{key}` needs {dim} components, got {}", v.len())));
                }
            }
        }
        match i.kind {
            InitialKind::Gaussian => positive(i.sigma.ok_or_else(|| invalid("gaussian initial state needs `sigma`"))?, "run.initial.sigma")?,
            InitialKind::Random => {
                let why = "to a random initial state";
                require_absent(&i.q0, "run.initial.q0", why)?;
                require_absent(&i.p0, "run.initial.p0", why)?;
                require_absent(&i.sigma, "run.initial.sigma", why)?;
            }
        }
        Ok(())
    }

    pub fn wants(&self, o: RunOutput) -> bool {
        self.outputs.contains(&o)
    }
}
