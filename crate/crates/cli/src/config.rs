//! TOML experiment description.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use saddle_exit::dynsys::{
    find_fixed_point, registry, Domain, FixedPointOptions, Monomial, Polynomial, PolynomialField, VectorField,
    VectorFieldModel,
};
use saddle_exit::flow::StepControl;
use saddle_exit::mc::LemmaOptions;
use saddle_exit::sde::SdeOptions;
use saddle_exit::theory::AnalysisOptions;
use saddle_exit::Model;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    LinearSaddle {
        lambda: f64,
        mu: f64,
    },
    CubicSaddle {
        lambda: f64,
        mu: f64,
        #[serde(default = "one")]
        coupling: f64,
    },
    #[serde(rename = "spiral-stable-3d")]
    SpiralStable3d {
        lambda: f64,
        mu: f64,
        omega: f64,
    },
    /// `b_out(x) = Σ coef·Π x_j^{powers_j}`, degree at most 4.
    Polynomial {
        dim: usize,
        terms: Vec<Monomial<f64>>,
    },
}

/// A term `coef·Π x_j^{powers_j}` of a scalar polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarTerm {
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    Ball {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// `G = {g < 0}` inside a ball of radius `bound_radius`.
    LevelSet {
        terms: Vec<ScalarTerm>,
        bound_radius: f64,
    },
}

/// Numerical knobs; anything left out keeps the library default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjoint_rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjoint_horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_per_side: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub domain: DomainSpec,
    /// Start point; defaults to the saddle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Newton guess for a saddle away from the origin. Everything downstream
    /// runs in coordinates centred on the saddle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saddle_guess: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_cap: Option<f64>,
    /// Samples CSV for `compare`; when absent a batch of `n` is run inline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

fn one() -> f64 {
    1.0
}

fn default_n() -> usize {
    10_000
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    /// Linear saddle `λ = μ = 1` in the unit disc, started at the saddle.
    fn default() -> Self {
        Self {
            model: ModelSpec::LinearSaddle { lambda: 1.0, mu: 1.0 },
            domain: DomainSpec::Ball { radius: 1.0, center: None },
            x0: None,
            saddle_guess: None,
            eps: Some(1e-4),
            eps_list: Some(vec![1e-2, 1e-3, 1e-4, 1e-5]),
            n: default_n(),
            seed: 0,
            step: Some(1e-3),
            t_cap: None,
            samples: None,
            tolerances: Tolerances::default(),
            output_dir: default_out(),
        }
    }
}

/// The model in saddle-centred coordinates plus the start point.
pub struct Experiment {
    pub model: Model,
    pub x0: Vec<f64>,
    /// Saddle location in the original coordinates.
    pub saddle: Vec<f64>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::input(format!("{field}: {msg}"))
}

fn check_positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::input(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("config: cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    /// Field-level checks that need no model evaluation.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(eps) = self.eps {
            check_positive("eps", eps)?;
        }
        if let Some(list) = &self.eps_list {
            for (i, &e) in list.iter().enumerate() {
                check_positive(&format!("eps_list[{i}]"), e)?;
            }
        }
        if self.n == 0 {
            return Err(invalid("n", "must be at least 1"));
        }
        if let Some(h) = self.step {
            check_positive("step", h)?;
        }
        if let Some(t) = self.t_cap {
            check_positive("t_cap", t)?;
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.tol_gap", t.tol_gap),
            ("tolerances.flow_rtol", t.flow_rtol),
            ("tolerances.delta0", t.delta0),
            ("tolerances.adjoint_rtol", t.adjoint_rtol),
            ("tolerances.adjoint_horizon", t.adjoint_horizon),
        ] {
            if let Some(v) = v {
                check_positive(name, v)?;
            }
        }
        match &self.model {
            ModelSpec::LinearSaddle { lambda, mu } | ModelSpec::SpiralStable3d { lambda, mu, .. } => {
                check_positive("model.lambda", *lambda)?;
                check_positive("model.mu", *mu)?;
            }
            ModelSpec::CubicSaddle { lambda, mu, .. } => {
                check_positive("model.lambda", *lambda)?;
                check_positive("model.mu", *mu)?;
            }
            ModelSpec::Polynomial { dim, .. } => {
                if *dim == 0 {
                    return Err(invalid("model.dim", "must be at least 1"));
                }
            }
        }
        match &self.domain {
            DomainSpec::Ball { radius, .. } => check_positive("domain.radius", *radius)?,
            DomainSpec::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
                    return Err(invalid("domain", "box needs lo < hi componentwise"));
                }
            }
            DomainSpec::LevelSet { bound_radius, .. } => check_positive("domain.bound_radius", *bound_radius)?,
        }
        Ok(())
    }

    pub fn require_eps(&self) -> Result<f64, CliError> {
        self.eps.ok_or_else(|| invalid("eps", "required for this command"))
    }

    pub fn require_eps_list(&self) -> Result<&[f64], CliError> {
        self.eps_list.as_deref().ok_or_else(|| invalid("eps_list", "required for this command"))
    }

    fn field(&self) -> Result<PolynomialField<f64>, CliError> {
        let built = match &self.model {
            ModelSpec::LinearSaddle { lambda, mu } => registry::linear_saddle(*lambda, *mu),
            ModelSpec::CubicSaddle { lambda, mu, coupling } => registry::cubic_saddle(*lambda, *mu, *coupling),
            ModelSpec::SpiralStable3d { lambda, mu, omega } => registry::spiral_stable_3d(*lambda, *mu, *omega),
            ModelSpec::Polynomial { dim, terms } => PolynomialField::new(*dim, terms.clone()),
        };
        built.map_err(|e| invalid("model", e))
    }

    fn domain(&self, dim: usize) -> Result<Domain<f64>, CliError> {
        let built = match &self.domain {
            DomainSpec::Ball { radius, center: None } => Domain::ball(dim, *radius),
            DomainSpec::Ball { radius, center: Some(c) } => {
                if c.len() != dim {
                    return Err(invalid("domain.center", format!("expected {dim} coordinates, got {}", c.len())));
                }
                Domain::ball_at(c.clone(), *radius)
            }
            DomainSpec::Box { lo, hi } => {
                if lo.len() != dim {
                    return Err(invalid("domain.lo", format!("expected {dim} coordinates, got {}", lo.len())));
                }
                Domain::boxed(lo.clone(), hi.clone())
            }
            DomainSpec::LevelSet { terms, bound_radius } => {
                let monomials = terms
                    .iter()
                    .map(|t| Monomial { out: 0, coef: t.coef, powers: t.powers.clone() })
                    .collect();
                Polynomial::new(dim, 1, monomials).and_then(|p| Domain::level_set(p, *bound_radius))
            }
        };
        built.map_err(|e| invalid("domain", e))
    }

    /// Builds the saddle-centred model and checks `x0` against it.
    pub fn experiment(&self) -> Result<Experiment, CliError> {
        let field = self.field()?;
        let dim = VectorField::<f64>::dim(&field);
        let domain = self.domain(dim)?;
        let model = VectorFieldModel::with_default_enclosure(Arc::new(field), domain).map_err(CliError::from)?;
        let saddle = match &self.saddle_guess {
            None => vec![0.0; dim],
            Some(g) if g.len() != dim => {
                return Err(invalid("saddle_guess", format!("expected {dim} coordinates, got {}", g.len())))
            }
            Some(g) => find_fixed_point(&model, g, FixedPointOptions::default()).map_err(CliError::from)?,
        };
        let x0 = match &self.x0 {
            None => saddle.clone(),
            Some(x) if x.len() != dim => {
                return Err(invalid("x0", format!("expected {dim} coordinates, got {}", x.len())))
            }
            Some(x) => x.clone(),
        };
        if !model.domain().contains_interior(&x0) {
            return Err(invalid("x0", "must lie in the interior of the domain"));
        }
        let shifted = if saddle.iter().all(|&c| c == 0.0) { model } else { model.shifted(&saddle) };
        let x0 = x0.iter().zip(&saddle).map(|(a, b)| a - b).collect();
        Ok(Experiment { model: shifted, x0, saddle })
    }

    pub fn sde_options(&self) -> SdeOptions<f64> {
        SdeOptions { h: self.step, t_cap: self.t_cap }
    }

    pub fn analysis_options(&self) -> AnalysisOptions<f64> {
        let mut o = AnalysisOptions::default();
        let t = &self.tolerances;
        if let Some(v) = t.tol_gap {
            o.spectral.tol_gap = v;
        }
        if let Some(v) = t.flow_rtol {
            o.curve.flow.step = StepControl::adaptive(v);
        }
        if let Some(v) = t.delta0 {
            o.grid.delta0 = v;
            o.curve.delta_ref = v;
        }
        if let Some(v) = t.levels {
            o.grid.levels = v;
            o.curve.levels = v;
        }
        if let Some(v) = t.adjoint_rtol {
            o.adjoint.rtol = v;
        }
        o.adjoint.horizon = t.adjoint_horizon;
        o
    }

    pub fn lemma_options(&self) -> LemmaOptions<f64> {
        LemmaOptions { seed: self.seed, sde: self.sde_options(), ..LemmaOptions::default() }
    }
}
