//! Experiment configuration files.
//!
//! A file holds one or more `[[experiment]]` tables. Domain and variety
//! entries are either a path (relative to the config file) or an inline table.

use std::fmt;
use std::path::{Path, PathBuf};

use holoext_core::domain::{validate_rho, DomainFile};
use holoext_core::extension::WeightExponents;
use holoext_core::quadrature::{BoundaryWeight, UppskKind};
use holoext_core::variety::{PolynomialRows, VarietyFile, VarietySpec};
use holoext_core::{Domain, Polynomial, C64};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Smallest accepted Monte Carlo sample count.
pub const MIN_SAMPLES: usize = 1000;

/// Boundary samples used to validate a domain file.
const DOMAIN_CHECK_SAMPLES: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Reproduce,
    SharpConstant,
    TraumaSweep,
    #[serde(rename = "thmB-sweep")]
    ThmBSweep,
    Uppsk,
    NormEquivalence,
    Interpolation,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::Reproduce,
        Kind::SharpConstant,
        Kind::TraumaSweep,
        Kind::ThmBSweep,
        Kind::Uppsk,
        Kind::NormEquivalence,
        Kind::Interpolation,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Reproduce => "reproduce",
            Kind::SharpConstant => "sharp-constant",
            Kind::TraumaSweep => "trauma-sweep",
            Kind::ThmBSweep => "thmB-sweep",
            Kind::Uppsk => "uppsk",
            Kind::NormEquivalence => "norm-equivalence",
            Kind::Interpolation => "interpolation",
        }
    }

    fn default_weight(&self) -> BoundaryWeight {
        match self {
            Kind::SharpConstant => BoundaryWeight::DefiningFunction,
            _ => BoundaryWeight::Distance,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A file reference or an inline table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(PathBuf),
    Inline(T),
}

impl<T: Clone> Source<T> {
    fn resolve(&mut self, base: &Path, load: impl Fn(&Path) -> Result<T>) -> Result<()> {
        if let Source::Path(p) = self {
            let full = if p.is_absolute() {
                p.clone()
            } else {
                base.join(&*p)
            };
            *self = Source::Inline(load(&full)?);
        }
        Ok(())
    }

    fn inline(&self) -> Result<&T> {
        match self {
            Source::Inline(t) => Ok(t),
            Source::Path(p) => Err(HarnessError::Config(format!(
                "unresolved file reference {}",
                p.display()
            ))),
        }
    }
}

/// `(s, b)` exponents of the boundary lemma.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UppskExponents {
    pub s: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UppskParams {
    pub integral: UppskKind,
    pub exponents: Vec<UppskExponents>,
    pub ladder: Vec<f64>,
    /// Ray direction as `[re, im]` pairs, in the coordinates of the ladder region.
    pub direction: Vec<[f64; 2]>,
    /// Largest accepted max/min spread of `integral · δ^b` along the ladder.
    #[serde(default = "default_spread")]
    pub max_spread: f64,
}

fn default_spread() -> f64 {
    3.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Source<DomainFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variety: Option<Source<VarietyFile>>,
    /// Representatives `ψ` (functions on `D` for `reproduce`).
    #[serde(default)]
    pub psi: Vec<PolynomialRows>,
    /// Extra random representatives (norm-equivalence).
    #[serde(default)]
    pub random_psi: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub grid: Vec<WeightExponents>,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Evaluation points (reproduce, interpolation, norm-equivalence, thmB-sweep).
    #[serde(default = "default_points")]
    pub points: usize,
    /// Smallest boundary distance of evaluation points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_delta: Option<f64>,
    /// Kind-specific tolerance; see the README for defaults.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Largest stderr before a check is reported inconclusive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<BoundaryWeight>,
    /// Outer sample count of nested norms; the stability check quadruples it.
    #[serde(default = "default_outer")]
    pub outer: usize,
    /// Sampled `(ζ, z)` pairs for the kernel bound.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    /// Radius of the compact set in norm-equivalence.
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uppsk: Option<UppskParams>,
}

fn default_points() -> usize {
    10
}

fn default_outer() -> usize {
    250
}

fn default_pairs() -> usize {
    10_000
}

fn default_radius() -> f64 {
    0.9
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub experiment: Vec<ExperimentConfig>,
}

impl Suite {
    pub fn parse(text: &str, base: &Path) -> Result<Suite> {
        let mut suite: Suite =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        if suite.experiment.is_empty() {
            return Err(HarnessError::Config("no [[experiment]] tables".into()));
        }
        for (i, cfg) in suite.experiment.iter_mut().enumerate() {
            if cfg.name.is_empty() {
                cfg.name = format!("{}-{i}", cfg.kind);
            }
            if let Some(d) = &mut cfg.domain {
                d.resolve(base, |p| Ok(DomainFile::load(p)?))?;
            }
            if let Some(v) = &mut cfg.variety {
                v.resolve(base, |p| Ok(VarietyFile::load(p)?))?;
            }
            cfg.validate()?;
        }
        Ok(suite)
    }

    pub fn load(path: &Path) -> Result<Suite> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Suite::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Overrides seeds and sample counts of every experiment.
    pub fn with_overrides(mut self, seed: Option<u64>, samples: Option<usize>) -> Result<Suite> {
        for cfg in &mut self.experiment {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = samples {
                cfg.samples = n;
            }
            cfg.validate()?;
        }
        Ok(self)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(format!("{}: {msg}", self.name)));
        if self.samples < MIN_SAMPLES {
            return bad(format!("samples = {} is below {MIN_SAMPLES}", self.samples));
        }
        for g in &self.grid {
            if !(g.r > -1.0) {
                return bad(format!("r = {} must exceed -1", g.r));
            }
            if !(g.p >= 1.0) {
                return bad(format!("p = {} must be at least 1", g.p));
            }
        }
        if self.points == 0 || self.outer == 0 || self.pairs == 0 {
            return bad("points, outer and pairs must be positive".into());
        }
        let needs_domain = self.kind != Kind::NormEquivalence;
        if needs_domain && self.domain.is_none() {
            return bad("a domain is required".into());
        }
        let needs_variety = !matches!(self.kind, Kind::Reproduce | Kind::Uppsk);
        if needs_variety && self.variety.is_none() {
            return bad("a variety is required".into());
        }
        let needs_psi = !matches!(self.kind, Kind::Uppsk | Kind::NormEquivalence);
        if needs_psi && self.psi.is_empty() {
            return bad("at least one psi is required".into());
        }
        if self.kind == Kind::NormEquivalence && self.psi.is_empty() && self.random_psi == 0 {
            return bad("give psi rows or random_psi".into());
        }
        let needs_grid = matches!(
            self.kind,
            Kind::SharpConstant | Kind::TraumaSweep | Kind::ThmBSweep
        );
        if needs_grid && self.grid.is_empty() {
            return bad("an (r, p) grid is required".into());
        }
        if self.kind == Kind::Reproduce && self.alpha.is_none() {
            return bad("reproduce needs alpha".into());
        }
        if self.kind == Kind::Uppsk && self.uppsk.is_none() {
            return bad("uppsk needs an [experiment.uppsk] table".into());
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<Domain> {
        let file = self
            .domain
            .as_ref()
            .ok_or_else(|| HarnessError::Config(format!("{}: no domain", self.name)))?
            .inline()?;
        Ok(validate_rho(
            file.defining_function()?,
            DOMAIN_CHECK_SAMPLES,
            self.seed,
        )?)
    }

    pub fn variety(&self) -> Result<Option<VarietySpec>> {
        match &self.variety {
            Some(v) => Ok(Some(v.inline()?.spec()?)),
            None => Ok(None),
        }
    }

    pub fn require_variety(&self) -> Result<VarietySpec> {
        self.variety()?
            .ok_or_else(|| HarnessError::Config(format!("{}: no variety", self.name)))
    }

    pub fn representatives(&self, nvars: usize) -> Result<Vec<Polynomial>> {
        self.psi
            .iter()
            .map(|rows| Polynomial::from_rows(nvars, &rows.terms).map_err(HarnessError::Config))
            .collect()
    }

    pub fn weight(&self) -> BoundaryWeight {
        self.weight.unwrap_or_else(|| self.kind.default_weight())
    }

    pub fn direction(&self) -> Option<Vec<C64>> {
        self.uppsk.as_ref().map(|u| {
            u.direction
                .iter()
                .map(|&[re, im]| C64::new(re, im))
                .collect()
        })
    }
}
