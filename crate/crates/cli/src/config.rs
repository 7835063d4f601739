//! Experiment configuration: the JSON schema and its translation into the
//! core domain objects.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use hyerslab_core::{
    AdditiveCore, AlgebraContext, AlgebraKind, ControlFunction, Direction, Element, JensenParams,
    PerturbationSpec, Pivot, ProbeFunction, ResidualSign, Scalar,
};

/// A configuration error; surfaces as exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl From<hyerslab_core::Error> for ConfigError {
    fn from(e: hyerslab_core::Error) -> Self {
        ConfigError(e.to_string())
    }
}

pub type ConfigResult<T> = Result<T, ConfigError>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgebraSpec {
    Matrix { dim: usize },
    OddPolynomial,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamsSpec {
    pub r: u32,
    pub s: u32,
    pub t: u32,
    #[serde(default = "default_direction")]
    pub direction: String,
    #[serde(default = "default_pivot")]
    pub pivot: String,
}

fn default_direction() -> String {
    "forward".into()
}

fn default_pivot() -> String {
    "s".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoreSpec {
    Identity,
    MatrixLinear {
        seed: u64,
    },
    Similarity {
        matrix: Element,
    },
    Unitary {
        seed: u64,
    },
    PolyScale {
        multipliers: BTreeMap<String, Scalar>,
    },
    PolySign {
        sigma: f64,
        c: f64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub core: CoreSpec,
    #[serde(default)]
    pub perturbation: Option<PerturbationSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControlSpec {
    Power {
        eps: f64,
        p: f64,
    },
    Constant {
        eps: f64,
    },
    /// Derive `eps` empirically from the probe before running the suite.
    Calibrated {
        p: f64,
        #[serde(default)]
        budget: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Algebra,
    Series,
    Jensen,
    Homstab,
    Linearity,
    Generated,
    Full,
}

impl std::str::FromStr for Suite {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "algebra" => Ok(Suite::Algebra),
            "series" => Ok(Suite::Series),
            "jensen" => Ok(Suite::Jensen),
            "homstab" => Ok(Suite::Homstab),
            "linearity" => Ok(Suite::Linearity),
            "generated" => Ok(Suite::Generated),
            "full" => Ok(Suite::Full),
            other => Err(ConfigError(format!("unknown suite '{other}'"))),
        }
    }
}

/// The on-disk experiment configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algebra: AlgebraSpec,
    pub params: ParamsSpec,
    pub probe: ProbeSpec,
    pub control: ControlSpec,
    pub suite: Suite,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_n_cap")]
    pub n_cap: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Decay-chain probe depth for the homomorphism suite.
    #[serde(default = "default_n_probe")]
    pub n_probe: u32,
    /// Sign convention for the five-variable residual.
    #[serde(default)]
    pub residual_sign: SignSpec,
    /// Scalar grid for the linearity suite; a default 20-point grid is used
    /// when absent.
    #[serde(default)]
    pub scalars: Option<Vec<Scalar>>,
}

fn default_samples() -> usize {
    100
}
fn default_seed() -> u64 {
    42
}
fn default_tol() -> f64 {
    1e-6
}
fn default_n_cap() -> u32 {
    64
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_n_probe() -> u32 {
    20
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignSpec {
    #[default]
    BothMinus,
    PlusT,
}

impl From<SignSpec> for ResidualSign {
    fn from(s: SignSpec) -> ResidualSign {
        match s {
            SignSpec::BothMinus => ResidualSign::BothMinus,
            SignSpec::PlusT => ResidualSign::PlusT,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &std::path::Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| ConfigError(format!("bad JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> ConfigResult<()> {
        if self.samples < 1 {
            return Err(ConfigError("samples must be >= 1".into()));
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(ConfigError("tol must be positive".into()));
        }
        self.context()?;
        let params = self.jensen_params()?;
        // Surfacing a divergent regime is a configuration error for every
        // suite that iterates or sums the configured control.
        if self.suite != Suite::Algebra {
            let ratio = match &self.control {
                ControlSpec::Power { p, .. } | ControlSpec::Calibrated { p, .. } => {
                    ControlFunction::power_pair(1.0, *p)
                        .map_err(ConfigError::from)?
                        .term_ratio(params.ratio(), params.direction)
                }
                ControlSpec::Constant { .. } => ControlFunction::constant(1.0)
                    .map_err(ConfigError::from)?
                    .term_ratio(params.ratio(), params.direction),
            };
            if let Some(q) = ratio {
                if q >= 1.0 {
                    return Err(ConfigError(format!(
                        "divergent regime: series term ratio {q} >= 1 for this control and direction"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn context(&self) -> ConfigResult<AlgebraContext> {
        Ok(match &self.algebra {
            AlgebraSpec::Matrix { dim } => AlgebraContext::matrix_trivial(*dim)?,
            AlgebraSpec::OddPolynomial => AlgebraContext::odd_polynomial(),
        })
    }

    pub fn jensen_params(&self) -> ConfigResult<JensenParams> {
        let direction = match self.params.direction.as_str() {
            "forward" => Direction::Forward,
            "backward" => Direction::Backward,
            other => return Err(ConfigError(format!("unknown direction '{other}'"))),
        };
        let pivot = match self.params.pivot.as_str() {
            "s" => Pivot::PivotS,
            "t" => Pivot::PivotT,
            other => return Err(ConfigError(format!("unknown pivot '{other}'"))),
        };
        Ok(JensenParams::new(
            self.params.r,
            self.params.s,
            self.params.t,
            direction,
            pivot,
        )?
        .with_n_cap(self.n_cap))
    }

    pub fn additive_core(&self, ctx: &AlgebraContext) -> ConfigResult<AdditiveCore> {
        Ok(match &self.probe.core {
            CoreSpec::Identity => AdditiveCore::Identity,
            CoreSpec::MatrixLinear { seed } => {
                let dim = ctx.dim().ok_or_else(|| {
                    ConfigError("matrix_linear core requires a matrix algebra".into())
                })?;
                AdditiveCore::random_matrix_linear(dim, *seed)
            }
            CoreSpec::Similarity { matrix } => AdditiveCore::similarity(ctx, matrix.clone())?,
            CoreSpec::Unitary { seed } => {
                let dim = ctx
                    .dim()
                    .ok_or_else(|| ConfigError("unitary core requires a matrix algebra".into()))?;
                let u = hyerslab_core::random_unitary(dim, *seed)?;
                let u_star = u.conj_transpose().expect("matrix shape");
                AdditiveCore::Similarity {
                    s: u,
                    s_inv: u_star,
                }
            }
            CoreSpec::PolyScale { multipliers } => {
                if !matches!(ctx.kind(), AlgebraKind::OddPolynomial) {
                    return Err(ConfigError(
                        "poly_scale core requires the polynomial algebra".into(),
                    ));
                }
                let mut parsed = Vec::new();
                for (k, v) in multipliers {
                    let degree: u64 = k
                        .parse()
                        .map_err(|_| ConfigError(format!("bad degree key '{k}'")))?;
                    parsed.push((degree, *v));
                }
                AdditiveCore::poly_linear(parsed)
            }
            CoreSpec::PolySign { sigma, c } => {
                if !matches!(ctx.kind(), AlgebraKind::OddPolynomial) {
                    return Err(ConfigError(
                        "poly_sign core requires the polynomial algebra".into(),
                    ));
                }
                AdditiveCore::poly_sign(*sigma, *c)?
            }
        })
    }

    pub fn probe(&self, ctx: &AlgebraContext) -> ConfigResult<ProbeFunction> {
        let core = self.additive_core(ctx)?;
        Ok(hyerslab_core::make_probe(
            core,
            self.probe.perturbation,
            ctx,
        )?)
    }

    /// Instantiate the control function at the requested arity, calibrating
    /// `eps` against the probe when asked to.
    pub fn control(
        &self,
        ctx: &AlgebraContext,
        params: &JensenParams,
        f: &ProbeFunction,
        arity: usize,
    ) -> ConfigResult<ControlFunction> {
        Ok(match &self.control {
            ControlSpec::Power { eps, p } => ControlFunction::power(*eps, *p, arity)?,
            ControlSpec::Constant { eps } => ControlFunction::constant(*eps)?,
            ControlSpec::Calibrated { p, budget } => {
                let budget = budget.unwrap_or_else(|| 1000.max(10 * self.samples));
                let shape = if arity == 5 {
                    hyerslab_core::CalibrationShape::FiveSlotPower { p: *p }
                } else {
                    hyerslab_core::CalibrationShape::TwoSlotPower { p: *p }
                };
                let eps =
                    hyerslab_core::calibrate_epsilon(f, params, ctx, shape, budget, self.seed)?;
                ControlFunction::power(eps, *p, arity)?
            }
        })
    }

    /// The scalar grid for linearity checks: config override or the default
    /// 20-point mix of real, imaginary, and complex values.
    pub fn scalar_grid(&self) -> Vec<Scalar> {
        if let Some(grid) = &self.scalars {
            return grid.clone();
        }
        vec![
            Scalar::ZERO,
            Scalar::ONE,
            Scalar::real(-1.0),
            Scalar::I,
            Scalar::new(0.0, -1.0),
            Scalar::real(0.5),
            Scalar::real(-2.5),
            Scalar::real(10.0),
            Scalar::new(0.0, 0.25),
            Scalar::new(0.0, 5.0),
            Scalar::new(1.0, 1.0),
            Scalar::new(2.0, 3.0),
            Scalar::new(-2.0, 3.0),
            Scalar::new(2.0, -3.0),
            Scalar::new(-0.5, -0.75),
            Scalar::new(0.1, 0.2),
            Scalar::new(-4.0, 0.3),
            Scalar::new(3.0, -0.125),
            Scalar::new(-1.5, -2.5),
            Scalar::new(7.0, 6.0),
        ]
    }
}
