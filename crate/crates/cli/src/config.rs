//! Experiment configuration: a TOML document with documented keys, unknown
//! keys rejected, defaults filled per experiment kind.

use serde::{Deserialize, Serialize};
use slmc_core::linalg::{block_count, validate_probabilities};
use slmc_core::samplers::{SamplerKind, StepReference};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("config key `{path}`: {message}")]
    Invalid { path: String, message: String },
    #[error("config could not be serialized: {0}")]
    Serialize(String),
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// The 20-dimensional ill-conditioned Gaussian.
    Gaussian,
    /// Two-parameter Bayesian logistic regression on synthetic data.
    Logistic,
    /// Neal's funnel, optionally rotated.
    Funnel,
    /// A Gaussian with a user-supplied precision matrix.
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerName {
    Lmc,
    Plmc,
    Slmc,
    Rclmc,
}

impl From<SamplerName> for SamplerKind {
    fn from(s: SamplerName) -> Self {
        match s {
            SamplerName::Lmc => SamplerKind::Lmc,
            SamplerName::Plmc => SamplerKind::Plmc,
            SamplerName::Slmc => SamplerKind::Slmc,
            SamplerName::Rclmc => SamplerKind::Rclmc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepReferenceName {
    Base,
    MaxBlock,
}

impl From<StepReferenceName> for StepReference {
    fn from(s: StepReferenceName) -> Self {
        match s {
            StepReferenceName::Base => StepReference::Base,
            StepReferenceName::MaxBlock => StepReference::MaxBlock,
        }
    }
}

/// A fixed preconditioning matrix.
///
/// Payload-free variants are empty structs: serde only rejects unknown keys
/// next to an internal tag for struct variants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixSpec {
    Identity {},
    /// The target covariance (Gaussian targets only).
    Covariance {},
    /// The identity with eigenbasis `blkdiag(U, I₁₀)`, where `U` is the
    /// rotation used to build the Gaussian target. Blocks are then taken in
    /// the rotated coordinates.
    RotatedIdentity {},
    Diagonal { values: Vec<f64> },
    Dense { rows: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Fixed { matrix: MatrixSpec },
    /// Inverse of the ensemble-averaged Hessian, recomputed every step.
    AvgHessian {},
    /// Diagonal exponential average of squared gradients.
    Rmsprop {},
    /// Full-matrix exponential average of gradient outer products.
    Adagrad {},
}

impl ScheduleConfig {
    fn is_identity(&self) -> bool {
        matches!(
            self,
            Self::Fixed {
                matrix: MatrixSpec::Identity {}
            }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbabilitySpec {
    Uniform {},
    Explicit { values: Vec<f64> },
    /// Proportional to each block's smoothness under the target Hessian at
    /// the origin.
    SmoothnessProportional {},
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrMode {
    /// Error of the ensemble average at each recorded step.
    Ensemble,
    /// Error of the running average over all steps so far, pooled over the
    /// ensemble.
    Running,
}

/// Per-curve overrides of the top-level sampler settings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<ProbabilitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_reference: Option<StepReferenceName>,
}

/// A fully specified configuration. Fields whose default depends on the
/// experiment kind are optional in the document and always present after
/// [`parse_config`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerName,
    #[serde(default = "default_schedule")]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default = "one")]
    pub rank: usize,
    #[serde(default = "default_probabilities")]
    pub probabilities: ProbabilitySpec,
    #[serde(default = "default_step_reference")]
    pub step_reference: StepReferenceName,
    #[serde(default = "default_cap")]
    pub spectral_cap: f64,
    #[serde(default)]
    pub ensemble: Option<usize>,
    #[serde(default)]
    pub repetitions: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub thin: Option<usize>,
    #[serde(default = "default_err_mode")]
    pub err_mode: ErrMode,
    /// Run every curve to the same number of directional derivatives
    /// (`steps · d`) instead of the same number of steps.
    #[serde(default)]
    pub equal_budget: bool,
    #[serde(default = "default_funnel_sigma")]
    pub funnel_sigma: f64,
    #[serde(default)]
    pub rotate: bool,
    /// Number of observations for the logistic experiment.
    #[serde(default = "default_data_size")]
    pub data_size: usize,
    /// Precision matrix rows for the custom experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<CurveConfig>,
}

fn default_sampler() -> SamplerName {
    SamplerName::Slmc
}
fn default_schedule() -> ScheduleConfig {
    ScheduleConfig::Fixed {
        matrix: MatrixSpec::Identity {},
    }
}
fn one() -> usize {
    1
}
fn default_probabilities() -> ProbabilitySpec {
    ProbabilitySpec::Uniform {}
}
fn default_step_reference() -> StepReferenceName {
    StepReferenceName::Base
}
fn default_cap() -> f64 {
    slmc_core::preconditioners::DEFAULT_SPECTRAL_CAP
}
fn default_err_mode() -> ErrMode {
    ErrMode::Ensemble
}
fn default_funnel_sigma() -> f64 {
    slmc_core::targets::DEFAULT_FUNNEL_SIGMA
}
fn default_data_size() -> usize {
    100
}
fn default_out_dir() -> String {
    "out".to_string()
}

/// Dimension of the built-in Gaussian target.
pub const GAUSSIAN_DIM: usize = 20;

/// One sampler run within an experiment, with every override applied.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedCurve {
    pub label: String,
    pub sampler: SamplerName,
    pub h: f64,
    pub rank: usize,
    pub schedule: ScheduleConfig,
    pub probabilities: ProbabilitySpec,
    pub step_reference: StepReferenceName,
}

impl ExperimentConfig {
    /// A configuration of the given kind with every default filled.
    pub fn with_defaults(experiment: ExperimentKind) -> Self {
        let mut cfg = Self {
            experiment,
            sampler: default_sampler(),
            schedule: default_schedule(),
            h: None,
            steps: None,
            rank: 1,
            probabilities: default_probabilities(),
            step_reference: default_step_reference(),
            spectral_cap: default_cap(),
            ensemble: None,
            repetitions: None,
            seed: 0,
            thin: None,
            err_mode: default_err_mode(),
            equal_budget: false,
            funnel_sigma: default_funnel_sigma(),
            rotate: false,
            data_size: default_data_size(),
            precision: None,
            out_dir: default_out_dir(),
            curves: Vec::new(),
        };
        cfg.fill_defaults();
        cfg
    }

    fn fill_defaults(&mut self) {
        use ExperimentKind::*;
        let (h, steps, ensemble, repetitions, thin) = match self.experiment {
            Gaussian | Custom => (0.01, 20_000, 100, 1, 100),
            Logistic => (0.01, 100, 100, 20, 1),
            Funnel => (0.05, 4_000, 50, 20, 10),
        };
        self.h.get_or_insert(h);
        self.steps.get_or_insert(steps);
        self.ensemble.get_or_insert(ensemble);
        self.repetitions.get_or_insert(repetitions);
        self.thin.get_or_insert(thin);
    }

    pub fn h(&self) -> f64 {
        self.h.expect("filled by parse_config")
    }
    pub fn steps(&self) -> usize {
        self.steps.expect("filled by parse_config")
    }
    pub fn ensemble(&self) -> usize {
        self.ensemble.expect("filled by parse_config")
    }
    pub fn repetitions(&self) -> usize {
        self.repetitions.expect("filled by parse_config")
    }
    pub fn thin(&self) -> usize {
        self.thin.expect("filled by parse_config")
    }

    /// Dimension of the target.
    pub fn dim(&self) -> usize {
        match self.experiment {
            ExperimentKind::Gaussian => GAUSSIAN_DIM,
            ExperimentKind::Logistic | ExperimentKind::Funnel => 2,
            ExperimentKind::Custom => self.precision.as_ref().map_or(0, Vec::len),
        }
    }

    /// The curves to run: the `curves` list with top-level values filling
    /// unset fields, or a single curve from the top-level values.
    pub fn resolved_curves(&self) -> Vec<ResolvedCurve> {
        let base = CurveConfig::default();
        let curves: Vec<&CurveConfig> = if self.curves.is_empty() {
            vec![&base]
        } else {
            self.curves.iter().collect()
        };
        curves
            .into_iter()
            .map(|c| {
                let sampler = c.sampler.unwrap_or(self.sampler);
                let rank = c.rank.unwrap_or(self.rank);
                let schedule = c.schedule.clone().unwrap_or_else(|| self.schedule.clone());
                ResolvedCurve {
                    label: c.label.clone().unwrap_or_else(|| default_label(sampler, rank, &schedule)),
                    sampler,
                    h: c.h.unwrap_or(self.h()),
                    rank,
                    schedule,
                    probabilities: c.probabilities.clone().unwrap_or_else(|| self.probabilities.clone()),
                    step_reference: c.step_reference.unwrap_or(self.step_reference),
                }
            })
            .collect()
    }

    /// Serializes to TOML; [`parse_config`] of the output gives back `self`.
    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Serialize(e.to_string()))
    }

    fn validate(&self) -> Result<(), ConfigError> {
        use ExperimentKind::*;
        let finite_positive = |path: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(path, format!("must be positive and finite, got {v}")))
            }
        };
        finite_positive("h", self.h())?;
        finite_positive("spectral_cap", self.spectral_cap)?;
        finite_positive("funnel_sigma", self.funnel_sigma)?;
        for (path, v) in [
            ("ensemble", self.ensemble()),
            ("repetitions", self.repetitions()),
            ("thin", self.thin()),
        ] {
            if v == 0 {
                return Err(invalid(path, "must be at least 1"));
            }
        }
        if self.experiment == Logistic && self.data_size == 0 {
            return Err(invalid("data_size", "must be at least 1"));
        }
        match (&self.precision, self.experiment) {
            (None, Custom) => {
                return Err(invalid("precision", "the custom experiment needs a precision matrix"))
            }
            (Some(_), kind) if kind != Custom => {
                return Err(invalid("precision", "only the custom experiment takes a precision matrix"))
            }
            (Some(rows), _) => check_square("precision", rows)?,
            _ => {}
        }
        if self.rotate && self.experiment != Funnel {
            return Err(invalid("rotate", "only the funnel experiment can be rotated"));
        }
        if self.err_mode == ErrMode::Running && !matches!(self.experiment, Gaussian | Custom) {
            return Err(invalid(
                "err_mode",
                "running averages apply to the Gaussian error metric only",
            ));
        }
        let mut labels = std::collections::BTreeSet::new();
        for (i, c) in self.resolved_curves().iter().enumerate() {
            let path = |key: &str| {
                if self.curves.is_empty() {
                    key.to_string()
                } else {
                    format!("curves[{i}].{key}")
                }
            };
            self.validate_curve(c, &path)?;
            if !labels.insert(c.label.clone()) {
                return Err(invalid(path("label"), format!("duplicate curve label `{}`", c.label)));
            }
        }
        Ok(())
    }

    fn validate_curve(&self, c: &ResolvedCurve, path: &dyn Fn(&str) -> String) -> Result<(), ConfigError> {
        use ExperimentKind::*;
        let d = self.dim();
        if !(c.h.is_finite() && c.h > 0.0) {
            return Err(invalid(path("h"), format!("must be positive and finite, got {}", c.h)));
        }
        if c.rank == 0 || c.rank > d {
            return Err(invalid(path("rank"), format!("must be in 1..={d}, got {}", c.rank)));
        }
        if c.sampler == SamplerName::Rclmc && c.rank != 1 {
            return Err(invalid(
                path("rank"),
                format!("rclmc updates one coordinate per step, so rank must be 1, got {}", c.rank),
            ));
        }
        if matches!(c.sampler, SamplerName::Lmc | SamplerName::Rclmc) && !c.schedule.is_identity() {
            return Err(invalid(
                path("schedule"),
                "lmc and rclmc are unpreconditioned; use a fixed identity schedule",
            ));
        }
        if c.sampler == SamplerName::Rclmc && c.probabilities != (ProbabilitySpec::Uniform {}) {
            return Err(invalid(path("probabilities"), "rclmc picks coordinates uniformly"));
        }
        match &c.schedule {
            ScheduleConfig::Fixed { matrix } => match matrix {
                MatrixSpec::Identity {} => {}
                MatrixSpec::Covariance {} => {
                    if !matches!(self.experiment, Gaussian | Custom) {
                        return Err(invalid(
                            path("schedule.matrix"),
                            "the covariance preconditioner needs a Gaussian target",
                        ));
                    }
                }
                MatrixSpec::RotatedIdentity {} => {
                    if self.experiment != Gaussian {
                        return Err(invalid(
                            path("schedule.matrix"),
                            "the rotated basis is defined for the built-in Gaussian target",
                        ));
                    }
                }
                MatrixSpec::Diagonal { values } => {
                    if values.len() != d {
                        return Err(invalid(
                            path("schedule.matrix.values"),
                            format!("expected {d} entries, got {}", values.len()),
                        ));
                    }
                    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                        return Err(invalid(
                            path("schedule.matrix.values"),
                            format!("entries must be positive, got {v}"),
                        ));
                    }
                }
                MatrixSpec::Dense { rows } => {
                    check_square(&path("schedule.matrix.rows"), rows)?;
                    if rows.len() != d {
                        return Err(invalid(
                            path("schedule.matrix.rows"),
                            format!("expected a {d}x{d} matrix, got {}x{}", rows.len(), rows.len()),
                        ));
                    }
                }
            },
            ScheduleConfig::AvgHessian {} => {}
            ScheduleConfig::Rmsprop {} | ScheduleConfig::Adagrad {} => {}
        }
        if let ProbabilitySpec::Explicit { values } = &c.probabilities {
            let n = match c.sampler {
                SamplerName::Slmc => block_count(d, c.rank),
                _ => {
                    return Err(invalid(
                        path("probabilities"),
                        "explicit block probabilities apply to slmc only",
                    ))
                }
            };
            validate_probabilities(values, n)
                .map_err(|e| invalid(path("probabilities.values"), e.to_string()))?;
        }
        Ok(())
    }
}

fn check_square(path: &str, rows: &[Vec<f64>]) -> Result<(), ConfigError> {
    if rows.is_empty() {
        return Err(invalid(path, "matrix is empty"));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != rows.len()) {
        return Err(invalid(
            format!("{path}[{bad}]"),
            format!("expected {} entries, got {}", rows.len(), rows[bad].len()),
        ));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid(path, "entries must be finite"));
    }
    Ok(())
}

fn default_label(sampler: SamplerName, rank: usize, schedule: &ScheduleConfig) -> String {
    let base = match sampler {
        SamplerName::Lmc => "lmc".to_string(),
        SamplerName::Plmc => "plmc".to_string(),
        SamplerName::Rclmc => "rclmc".to_string(),
        SamplerName::Slmc => format!("slmc_r{rank}"),
    };
    match schedule {
        ScheduleConfig::Fixed {
            matrix: MatrixSpec::Identity {},
        } => base,
        ScheduleConfig::Fixed { matrix } => {
            let m = match matrix {
                MatrixSpec::Identity {} => unreachable!(),
                MatrixSpec::Covariance {} => "covariance",
                MatrixSpec::RotatedIdentity {} => "rotated",
                MatrixSpec::Diagonal { .. } => "diagonal",
                MatrixSpec::Dense { .. } => "dense",
            };
            format!("{base}_{m}")
        }
        ScheduleConfig::AvgHessian {} => format!("{base}_avg_hessian"),
        ScheduleConfig::Rmsprop {} => format!("{base}_rmsprop"),
        ScheduleConfig::Adagrad {} => format!("{base}_adagrad"),
    }
}

/// Parses and validates a TOML configuration, filling defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    cfg.fill_defaults();
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_gaussian_defaults() {
        let cfg = parse_config("experiment = \"gaussian\"").unwrap();
        assert_eq!(cfg.dim(), 20);
        assert_eq!(cfg.steps(), 20_000);
        assert_eq!(cfg.h(), 0.01);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.ensemble(), 100);
        assert_eq!(cfg.err_mode, ErrMode::Ensemble);
        assert_eq!(cfg.resolved_curves().len(), 1);
    }

    #[test]
    fn rclmc_needs_rank_one() {
        let err = parse_config("experiment = \"gaussian\"\nsampler = \"rclmc\"\nrank = 5").unwrap_err();
        assert!(err.to_string().contains("rank"), "{err}");
        let err = parse_config(
            "experiment = \"gaussian\"\n[[curves]]\nsampler = \"rclmc\"\nrank = 3",
        )
        .unwrap_err();
        assert!(err.to_string().contains("curves[0].rank"), "{err}");
        assert!(parse_config("experiment = \"gaussian\"\nsampler = \"rclmc\"").is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            "experiment = \"gaussian\"\nstep = 3",
            "experiment = \"gaussian\"\nstep = 3\n",
            "experiment = \"gaussian\"\n[schedule]\nkind = \"fixed\"\nmatrix = { type = \"identity\", x = 1 }",
            "experiment = \"gaussian\"\n[[curves]]\nsampler = \"lmc\"\nfoo = 1",
        ] {
            let err = parse_config(text).expect_err(text);
            assert!(matches!(err, ConfigError::Syntax(_)), "{text}: {err}");
        }
        let err = parse_config("experiment = \"gaussian\"\nstep = 3").unwrap_err();
        assert!(err.to_string().contains("step"), "{err}");
    }

    #[test]
    fn round_trip_is_identity() {
        let texts = [
            "experiment = \"gaussian\"",
            "experiment = \"logistic\"\nsampler = \"slmc\"\n[schedule]\nkind = \"avg_hessian\"",
            "experiment = \"funnel\"\nrotate = true\n[[curves]]\nlabel = \"a\"\n[curves.schedule]\nkind = \"adagrad\"\n[[curves]]\nlabel = \"b\"\nh = 0.1",
            "experiment = \"custom\"\nprecision = [[2.0, 0.5], [0.5, 1.0]]\nrank = 2\nprobabilities = { type = \"smoothness_proportional\" }",
            "experiment = \"gaussian\"\nrank = 5\nprobabilities = { type = \"explicit\", values = [0.1, 0.2, 0.3, 0.4] }\n[schedule]\nkind = \"fixed\"\nmatrix = { type = \"diagonal\", values = [1,1,1,1,1,1,1,1,1,1,10,10,10,10,10,10,10,10,10,10] }",
        ];
        for text in texts {
            let cfg = parse_config(text).unwrap();
            let again = parse_config(&cfg.to_toml().unwrap()).unwrap();
            assert_eq!(cfg, again, "{text}");
        }
    }

    #[test]
    fn inadmissible_combinations() {
        let cases = [
            ("experiment = \"funnel\"\nsampler = \"lmc\"\n[schedule]\nkind = \"rmsprop\"", "schedule"),
            ("experiment = \"funnel\"\n[schedule]\nkind = \"fixed\"\nmatrix = { type = \"covariance\" }", "schedule.matrix"),
            ("experiment = \"gaussian\"\nrotate = true", "rotate"),
            ("experiment = \"custom\"", "precision"),
            ("experiment = \"gaussian\"\nprecision = [[1.0]]", "precision"),
            ("experiment = \"gaussian\"\nh = -1.0", "h"),
            ("experiment = \"gaussian\"\nrank = 21", "rank"),
            ("experiment = \"gaussian\"\nthin = 0", "thin"),
            ("experiment = \"logistic\"\nerr_mode = \"running\"", "err_mode"),
            ("experiment = \"gaussian\"\nrank = 5\nprobabilities = { type = \"explicit\", values = [0.5, 0.5] }", "probabilities.values"),
            ("experiment = \"gaussian\"\n[schedule]\nkind = \"fixed\"\nmatrix = { type = \"diagonal\", values = [1.0] }", "schedule.matrix.values"),
            ("experiment = \"custom\"\nprecision = [[1.0, 0.0], [0.0]]", "precision[1]"),
            ("experiment = \"gaussian\"\n[[curves]]\nsampler = \"lmc\"\n[[curves]]\nsampler = \"lmc\"", "curves[1].label"),
        ];
        for (text, key) in cases {
            let err = parse_config(text).unwrap_err();
            assert!(
                err.to_string().contains(&format!("`{key}`")),
                "{text}: expected key {key}, got {err}"
            );
        }
    }

    #[test]
    fn curve_overrides_and_labels() {
        let cfg = parse_config(
            "experiment = \"gaussian\"\nh = 0.02\n[[curves]]\nsampler = \"lmc\"\n[[curves]]\nrank = 5\nh = 0.5\n[curves.schedule]\nkind = \"fixed\"\nmatrix = { type = \"covariance\" }\n[[curves]]\nsampler = \"rclmc\"",
        )
        .unwrap();
        let curves = cfg.resolved_curves();
        let labels: Vec<&str> = curves.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, ["lmc", "slmc_r5_covariance", "rclmc"]);
        assert_eq!(curves[0].h, 0.02);
        assert_eq!(curves[1].h, 0.5);
        assert_eq!(curves[2].rank, 1);
    }
}
