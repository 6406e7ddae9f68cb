//! Runners for the Gaussian, logistic-regression and funnel experiments.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use slmc_core::linalg::{Matrix, SpdMatrix, Vector};
use slmc_core::metrics::{abs_sum, abs_sum_gaussian_mean, ks_statistic_1d, ksd, KsdConfig, SampleSet};
use slmc_core::preconditioners::{relative_smoothness, AdaptiveKind, BlockProbabilities, ScheduleSpec};
use slmc_core::samplers::{Ensemble, SamplerConfig, SamplerKind};
use slmc_core::targets::{
    funnel_rotation, funnel_target, gaussian_target, generate_logistic_data, ill_conditioned_precision_with_rotation,
    logistic_posterior, rotate_target, LogisticPosterior, Potential,
};
use slmc_core::RandomStream;

use crate::config::{
    ErrMode, ExperimentConfig, ExperimentKind, MatrixSpec, ProbabilitySpec, ResolvedCurve, ScheduleConfig,
    StepReferenceName,
};
use crate::plot::{contour_segments, Plot, PlotKind, Segment};

/// One metric recorded over a run of one repetition.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSeries {
    pub metric: String,
    pub repetition: usize,
    pub seed: u64,
    pub ensemble_size: usize,
    pub steps: Vec<usize>,
    pub oracle_calls: Vec<u64>,
    pub values: Vec<f64>,
}

/// Mean over repetitions of one metric, aligned to the shared record grid.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateSeries {
    pub metric: String,
    pub steps: Vec<usize>,
    pub oracle_calls: Vec<u64>,
    pub mean: Vec<f64>,
}

impl AggregateSeries {
    pub fn last(&self) -> Option<f64> {
        self.mean.last().copied()
    }
}

/// Step and oracle totals of one curve in one repetition.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub repetition: usize,
    pub sampler: SamplerKind,
    pub rank: usize,
    pub dim: usize,
    pub steps: usize,
    /// Kernel directional derivatives per chain, smallest and largest over
    /// the chains that did not diverge.
    pub oracle_calls_min: u64,
    pub oracle_calls_max: u64,
    /// Gradients spent by adaptive schedules, per chain.
    pub schedule_calls: u64,
    pub diverged: usize,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub series: Vec<MetricSeries>,
    pub aggregate: Vec<AggregateSeries>,
    pub runs: Vec<RunSummary>,
    pub plots: Vec<Plot>,
    pub runtime: Duration,
}

impl ExperimentReport {
    pub fn aggregate(&self, metric: &str) -> Option<&AggregateSeries> {
        self.aggregate.iter().find(|a| a.metric == metric)
    }

    /// Final value of `metric` in every repetition, in repetition order.
    pub fn finals(&self, metric: &str) -> Vec<f64> {
        self.series
            .iter()
            .filter(|s| s.metric == metric)
            .filter_map(|s| s.values.last().copied())
            .collect()
    }
}

/// Runs the experiment selected by `cfg.experiment`.
pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    match cfg.experiment {
        ExperimentKind::Gaussian | ExperimentKind::Custom => run_gaussian_experiment(cfg),
        ExperimentKind::Logistic => run_logistic_experiment(cfg),
        ExperimentKind::Funnel => run_funnel_experiment(cfg),
    }
}

/// Steps at which a curve is recorded. The base grid is every `thin` steps
/// up to `steps`, plus the last step; with `equal_budget` each entry is
/// scaled by `d / cost` so that all curves share an oracle-call axis.
pub fn record_steps(cfg: &ExperimentConfig, curve: &ResolvedCurve, d: usize) -> Vec<usize> {
    let n = cfg.steps();
    let thin = cfg.thin();
    let mut base: Vec<usize> = (0..=n / thin).map(|j| j * thin).collect();
    if n % thin != 0 {
        base.push(n);
    }
    if !cfg.equal_budget {
        return base;
    }
    let cost = sampler_config(curve).cost_per_step(d, curve.rank);
    base.into_iter().map(|b| (b * d).div_ceil(cost)).collect()
}

fn sampler_config(curve: &ResolvedCurve) -> SamplerConfig {
    SamplerConfig::new(curve.sampler.into(), curve.h).with_reference(curve.step_reference.into())
}

/// Everything a schedule may refer to besides the curve itself.
struct TargetContext {
    potential: Arc<dyn Potential>,
    covariance: Option<SpdMatrix>,
    rotation: Option<Matrix>,
    cap: f64,
}

fn schedule_spec(curve: &ResolvedCurve, ctx: &TargetContext) -> anyhow::Result<ScheduleSpec> {
    let d = ctx.potential.dim();
    let rank = match SamplerKind::from(curve.sampler) {
        SamplerKind::Lmc | SamplerKind::Plmc => d,
        SamplerKind::Rclmc => 1,
        SamplerKind::Slmc => curve.rank,
    };
    let probabilities = match &curve.probabilities {
        ProbabilitySpec::Uniform {} => BlockProbabilities::Uniform,
        ProbabilitySpec::Explicit { values } => BlockProbabilities::Explicit(values.clone()),
        ProbabilitySpec::SmoothnessProportional {} => {
            let h = ctx
                .potential
                .hessian(&Vector::zeros(d))
                .ok_or_else(|| anyhow::anyhow!("smoothness-proportional probabilities need a Hessian"))?;
            BlockProbabilities::SmoothnessProportional(h)
        }
    };
    Ok(match &curve.schedule {
        ScheduleConfig::Fixed { matrix } => {
            let a = match matrix {
                MatrixSpec::Identity {} => SpdMatrix::identity(d),
                MatrixSpec::Covariance {} => ctx
                    .covariance
                    .clone()
                    .ok_or_else(|| anyhow::anyhow!("no covariance for this target"))?,
                MatrixSpec::RotatedIdentity {} => {
                    let q = ctx
                        .rotation
                        .as_ref()
                        .ok_or_else(|| anyhow::anyhow!("no rotation for this target"))?;
                    SpdMatrix::from_spectrum(&Vector::from_element(d, 1.0), q)?
                }
                MatrixSpec::Diagonal { values } => SpdMatrix::from_diagonal(values)?,
                MatrixSpec::Dense { rows } => SpdMatrix::from_matrix(rows_to_matrix(rows))?,
            };
            ScheduleSpec::fixed(a, rank, &probabilities, ctx.cap)?
        }
        ScheduleConfig::AvgHessian {} => ScheduleSpec::AvgHessian {
            potential: ctx.potential.clone(),
            rank,
            probabilities,
            cap: ctx.cap,
        },
        ScheduleConfig::Rmsprop {} | ScheduleConfig::Adagrad {} => ScheduleSpec::Adaptive {
            kind: if matches!(curve.schedule, ScheduleConfig::Rmsprop {}) {
                AdaptiveKind::RmsProp
            } else {
                AdaptiveKind::Adagrad
            },
            dim: d,
            rank,
            probabilities,
            cap: ctx.cap,
        },
    })
}

/// Largest step any single update of `curve` takes along one block.
pub fn largest_block_step(curve: &ResolvedCurve, min_phi: f64) -> f64 {
    match (SamplerKind::from(curve.sampler), curve.step_reference) {
        (SamplerKind::Lmc | SamplerKind::Plmc, _) | (_, StepReferenceName::MaxBlock) => curve.h,
        (_, StepReferenceName::Base) => curve.h / min_phi,
    }
}

/// On a quadratic with Hessian `H`, a block step above `2 / M` with
/// `M = λ_max(A^{1/2} H A^{1/2})` makes the chain blow up geometrically.
fn warn_if_unstable(curve: &ResolvedCurve, spec: &ScheduleSpec, ctx: &TargetContext, d: usize) -> anyhow::Result<()> {
    let ScheduleSpec::Fixed(pre) = spec else {
        return Ok(());
    };
    let Some(hessian) = ctx.potential.hessian(&Vector::zeros(d)) else {
        return Ok(());
    };
    let a = match SamplerKind::from(curve.sampler) {
        SamplerKind::Lmc | SamplerKind::Rclmc => SpdMatrix::identity(d),
        _ => pre.matrix().clone(),
    };
    let min_phi = match SamplerKind::from(curve.sampler) {
        SamplerKind::Rclmc => 1.0 / d as f64,
        _ => pre.partition().min_probability(),
    };
    let m = relative_smoothness(&a, &hessian)?;
    let step = largest_block_step(curve, min_phi);
    if step * m >= 2.0 {
        log::warn!(
            "curve `{}`: block step {step:e} is at or above the stability limit 2/M = {:.3e}; chains will diverge",
            curve.label,
            2.0 / m
        );
    }
    Ok(())
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Matrix {
    Matrix::from_fn(rows.len(), rows.len(), |i, j| rows[i][j])
}

fn summarize(label: &str, repetition: usize, curve: &ResolvedCurve, ens: &Ensemble, d: usize) -> RunSummary {
    let live: Vec<u64> = ens
        .live_states()
        .map(|s| s.oracle_calls.calls())
        .collect();
    RunSummary {
        label: label.to_string(),
        repetition,
        sampler: curve.sampler.into(),
        rank: curve.rank,
        dim: d,
        steps: ens.step(),
        oracle_calls_min: live.iter().copied().min().unwrap_or(0),
        oracle_calls_max: live.iter().copied().max().unwrap_or(0),
        schedule_calls: ens.schedule_calls(),
        diverged: ens.diverged(),
    }
}

/// Error of the test function `|1ᵀx|` against its exact mean.
#[derive(Clone, Debug)]
pub struct ErrTracker {
    true_mean: f64,
    mode: ErrMode,
    sum: f64,
    count: usize,
    value: f64,
}

impl ErrTracker {
    pub fn new(true_mean: f64, mode: ErrMode) -> Self {
        Self {
            true_mean,
            mode,
            sum: 0.0,
            count: 0,
            value: f64::NAN,
        }
    }

    /// Records the ensemble at the next step. In running mode the first
    /// observation is the initial state: it sets the value but is left out
    /// of the running average, which covers steps `1..=k`.
    pub fn observe(&mut self, points: &[Vector]) {
        let m = points.iter().map(abs_sum).sum::<f64>() / points.len() as f64;
        match self.mode {
            ErrMode::Ensemble => self.value = (m - self.true_mean).abs(),
            ErrMode::Running => {
                if self.value.is_nan() {
                    self.value = (m - self.true_mean).abs();
                } else {
                    self.sum += m;
                    self.count += 1;
                    self.value = (self.sum / self.count as f64 - self.true_mean).abs();
                }
            }
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

struct RepetitionOutput {
    series: Vec<MetricSeries>,
    runs: Vec<RunSummary>,
    plots: Vec<Plot>,
}

fn repetition_seed(cfg: &ExperimentConfig, repetition: usize) -> u64 {
    cfg.seed.wrapping_add(repetition as u64)
}

/// `n` draws from `N(mean·1, I_d)`.
fn gaussian_initial(d: usize, mean: f64, n: usize, rng: &mut RandomStream) -> Vec<Vector> {
    (0..n)
        .map(|_| Vector::from_fn(d, |_, _| mean + rng.standard_normal()))
        .collect()
}

/// Ill-conditioned (or custom) Gaussian target; records the error of the
/// test function `|1ᵀx|` against the oracle-call axis.
pub fn run_gaussian_experiment(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    let start = Instant::now();
    let (precision, rotation) = match cfg.experiment {
        ExperimentKind::Gaussian => {
            let (p, q) = ill_conditioned_precision_with_rotation(&mut RandomStream::new(cfg.seed).split_named("target"));
            (p, Some(q))
        }
        ExperimentKind::Custom => {
            let rows = cfg.precision.as_ref().expect("validated");
            (SpdMatrix::from_matrix(rows_to_matrix(rows))?, None)
        }
        other => anyhow::bail!("not a Gaussian experiment: {other:?}"),
    };
    let covariance = precision.inverse();
    let true_mean = abs_sum_gaussian_mean(&covariance);
    let d = precision.dim();
    let ctx = TargetContext {
        potential: Arc::new(gaussian_target(precision)),
        covariance: Some(covariance),
        rotation,
        cap: cfg.spectral_cap,
    };
    let curves = cfg.resolved_curves();
    let specs: Vec<ScheduleSpec> = curves.iter().map(|c| schedule_spec(c, &ctx)).collect::<anyhow::Result<_>>()?;
    for (curve, spec) in curves.iter().zip(&specs) {
        warn_if_unstable(curve, spec, &ctx, d)?;
    }

    let outputs: Vec<RepetitionOutput> = (0..cfg.repetitions())
        .into_par_iter()
        .map(|rep| -> anyhow::Result<RepetitionOutput> {
            let seed = repetition_seed(cfg, rep);
            let root = RandomStream::new(seed);
            let initial = gaussian_initial(d, 1.0, cfg.ensemble(), &mut root.split_named("initial"));
            let mut out = RepetitionOutput {
                series: Vec::new(),
                runs: Vec::new(),
                plots: Vec::new(),
            };
            for (curve, spec) in curves.iter().zip(&specs) {
                // Every curve sees the same initial points and noise streams.
                let mut ens = Ensemble::new(
                    ctx.potential.clone(),
                    sampler_config(curve),
                    spec,
                    initial.clone(),
                    &root.split_named("chains"),
                )?;
                let grid = record_steps(cfg, curve, d);
                let mut tracker = ErrTracker::new(true_mean, cfg.err_mode);
                let mut series = new_series(format!("err/{}", curve.label), rep, seed, cfg.ensemble());
                for &k in &grid {
                    match cfg.err_mode {
                        ErrMode::Ensemble => {
                            ens.advance(k - ens.step())?;
                            tracker.observe(&ens.positions());
                        }
                        ErrMode::Running => {
                            if ens.step() == 0 && series.steps.is_empty() {
                                tracker.observe(&ens.positions());
                            }
                            while ens.step() < k {
                                ens.advance(1)?;
                                tracker.observe(&ens.positions());
                            }
                        }
                    }
                    push_point(&mut series, &ens, tracker.value());
                }
                out.runs.push(summarize(&curve.label, rep, curve, &ens, d));
                out.series.push(series);
            }
            Ok(out)
        })
        .collect::<anyhow::Result<_>>()?;

    let mut report = assemble(cfg, outputs, start);
    report.plots.insert(
        0,
        line_plot(
            "err",
            "Error of the |1ᵀx| estimate",
            "directional derivatives",
            "Err",
            true,
            &report.aggregate,
        ),
    );
    Ok(report)
}

fn new_series(metric: String, repetition: usize, seed: u64, ensemble_size: usize) -> MetricSeries {
    MetricSeries {
        metric,
        repetition,
        seed,
        ensemble_size,
        steps: Vec::new(),
        oracle_calls: Vec::new(),
        values: Vec::new(),
    }
}

fn push_point(series: &mut MetricSeries, ens: &Ensemble, value: f64) {
    series.steps.push(ens.step());
    series.oracle_calls.push(ens.oracle_calls());
    series.values.push(value);
}

fn assemble(cfg: &ExperimentConfig, outputs: Vec<RepetitionOutput>, start: Instant) -> ExperimentReport {
    let mut series = Vec::new();
    let mut runs = Vec::new();
    let mut plots = Vec::new();
    for (rep, out) in outputs.into_iter().enumerate() {
        series.extend(out.series);
        runs.extend(out.runs);
        if rep == 0 {
            plots = out.plots;
        }
    }
    let aggregate = aggregate_series(&series);
    ExperimentReport {
        config: cfg.clone(),
        series,
        aggregate,
        runs,
        plots,
        runtime: start.elapsed(),
    }
}

/// Mean over repetitions per metric, in order of first appearance. The
/// oracle-call axis is taken from the first repetition.
pub fn aggregate_series(series: &[MetricSeries]) -> Vec<AggregateSeries> {
    let mut out: Vec<(AggregateSeries, usize)> = Vec::new();
    for s in series {
        match out.iter_mut().find(|(a, _)| a.metric == s.metric) {
            Some((a, n)) => {
                for (m, v) in a.mean.iter_mut().zip(&s.values) {
                    *m += v;
                }
                *n += 1;
            }
            None => out.push((
                AggregateSeries {
                    metric: s.metric.clone(),
                    steps: s.steps.clone(),
                    oracle_calls: s.oracle_calls.clone(),
                    mean: s.values.clone(),
                },
                1,
            )),
        }
    }
    out.into_iter()
        .map(|(mut a, n)| {
            for m in &mut a.mean {
                *m /= n as f64;
            }
            a
        })
        .collect()
}

fn line_plot(
    name: &str,
    title: &str,
    x_label: &str,
    y_label: &str,
    log_y: bool,
    aggregate: &[AggregateSeries],
) -> Plot {
    let use_oracle = x_label.starts_with("directional");
    Plot {
        name: name.to_string(),
        title: title.to_string(),
        kind: PlotKind::Lines {
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            log_y,
            curves: aggregate
                .iter()
                .map(|a| {
                    let label = a.metric.split_once('/').map_or(a.metric.as_str(), |(_, l)| l);
                    let points = a
                        .mean
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| {
                            let x = if use_oracle {
                                a.oracle_calls[i] as f64
                            } else {
                                a.steps[i] as f64
                            };
                            (x, v)
                        })
                        .collect();
                    (label.to_string(), points)
                })
                .collect(),
        },
    }
}

fn uniform_initial(n: usize, rng: &mut RandomStream) -> Vec<Vector> {
    (0..n)
        .map(|_| Vector::from_fn(2, |_, _| rng.uniform_range(-0.1, 0.1)))
        .collect()
}

fn ksd_of(points: Vec<Vector>, pot: &LogisticPosterior) -> anyhow::Result<f64> {
    let scores = points.iter().map(|p| pot.score(p)).collect();
    Ok(ksd(&SampleSet::with_scores(points, scores)?, &KsdConfig::default())?)
}

/// Bayesian logistic regression with freshly generated data per repetition;
/// records the kernelized Stein discrepancy of the ensemble.
pub fn run_logistic_experiment(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    anyhow::ensure!(cfg.experiment == ExperimentKind::Logistic, "not a logistic experiment");
    let start = Instant::now();
    let curves = cfg.resolved_curves();
    let outputs: Vec<RepetitionOutput> = (0..cfg.repetitions())
        .into_par_iter()
        .map(|rep| -> anyhow::Result<RepetitionOutput> {
            let seed = repetition_seed(cfg, rep);
            let root = RandomStream::new(seed);
            let data = generate_logistic_data(cfg.data_size, &mut root.split_named("data"))?;
            let pot = Arc::new(logistic_posterior(data));
            let ctx = TargetContext {
                potential: pot.clone(),
                covariance: None,
                rotation: None,
                cap: cfg.spectral_cap,
            };
            let initial = uniform_initial(cfg.ensemble(), &mut root.split_named("initial"));
            let mut out = RepetitionOutput {
                series: Vec::new(),
                runs: Vec::new(),
                plots: Vec::new(),
            };
            let mut finals = Vec::new();
            for curve in &curves {
                let spec = schedule_spec(curve, &ctx)?;
                let mut ens = Ensemble::new(
                    pot.clone(),
                    sampler_config(curve),
                    &spec,
                    initial.clone(),
                    &root.split_named("chains"),
                )?;
                let mut series = new_series(format!("ksd/{}", curve.label), rep, seed, cfg.ensemble());
                for k in record_steps(cfg, curve, 2) {
                    ens.advance(k - ens.step())?;
                    let value = ksd_of(ens.positions(), &pot)?;
                    push_point(&mut series, &ens, value);
                }
                out.runs.push(summarize(&curve.label, rep, curve, &ens, 2));
                out.series.push(series);
                finals.push((curve.label.clone(), ens.positions()));
            }
            if rep == 0 {
                out.plots = logistic_plots(&pot, &finals);
            }
            Ok(out)
        })
        .collect::<anyhow::Result<_>>()?;

    let mut report = assemble(cfg, outputs, start);
    report.plots.insert(
        0,
        line_plot("ksd", "Kernelized Stein discrepancy", "iteration", "KSD", true, &report.aggregate),
    );
    Ok(report)
}

/// Sample scatter with posterior log-density contours, one panel per curve.
fn logistic_plots(pot: &LogisticPosterior, finals: &[(String, Vec<Vector>)]) -> Vec<Plot> {
    let all: Vec<&Vector> = finals.iter().flat_map(|(_, p)| p.iter()).collect();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &all {
        for i in 0..2 {
            if p[i].is_finite() {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
    }
    if !(lo[0].is_finite() && lo[1].is_finite()) {
        (lo, hi) = ([-1.0, -1.0], [1.0, 1.0]);
    }
    for i in 0..2 {
        let pad = 0.15 * (hi[i] - lo[i]).max(1e-3);
        lo[i] -= pad;
        hi[i] += pad;
    }
    let contours = posterior_contours(pot, lo, hi);
    finals
        .iter()
        .map(|(label, points)| Plot {
            name: format!("samples_{label}"),
            title: format!("Posterior samples: {label}"),
            kind: PlotKind::Scatter {
                x_label: "θ₁".to_string(),
                y_label: "θ₂".to_string(),
                points: points.iter().map(|p| (p[0], p[1])).collect(),
                contours: contours.clone(),
                bounds: Some((lo, hi)),
            },
        })
        .collect()
}

/// Contours of the log posterior at 0.5, 2, 4.5 and 8 below its maximum on
/// the grid, the levels of the 1σ..4σ ellipses of a Gaussian.
fn posterior_contours(pot: &LogisticPosterior, lo: [f64; 2], hi: [f64; 2]) -> Vec<Segment> {
    const N: usize = 80;
    let grid: Vec<Vec<f64>> = (0..=N)
        .map(|j| {
            let y = lo[1] + (hi[1] - lo[1]) * j as f64 / N as f64;
            (0..=N)
                .map(|i| {
                    let x = lo[0] + (hi[0] - lo[0]) * i as f64 / N as f64;
                    -pot.value(&Vector::from_vec(vec![x, y]))
                })
                .collect()
        })
        .collect();
    let top = grid.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    [0.5, 2.0, 4.5, 8.0]
        .iter()
        .flat_map(|drop| contour_segments(&grid, lo, hi, top - drop))
        .collect()
}

/// SLMC on the funnel or rotated funnel; records the Kolmogorov–Smirnov
/// distance between the pooled `y` coordinates and their exact
/// `N(0, σ²)` marginal. At record step `k` the pool holds every thinned
/// iterate from steps `k/2..=k` of all chains.
pub fn run_funnel_experiment(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentReport> {
    anyhow::ensure!(cfg.experiment == ExperimentKind::Funnel, "not a funnel experiment");
    let start = Instant::now();
    let funnel = funnel_target(cfg.funnel_sigma)?;
    let rotation = cfg.rotate.then(funnel_rotation);
    let pot: Arc<dyn Potential> = match &rotation {
        Some(w) => Arc::new(rotate_target(Arc::new(funnel.clone()), w.clone())?),
        None => Arc::new(funnel.clone()),
    };
    let y_of = |z: &Vector| match &rotation {
        Some(w) => (w * z)[1],
        None => z[1],
    };
    let ctx = TargetContext {
        potential: pot.clone(),
        covariance: None,
        rotation: None,
        cap: cfg.spectral_cap,
    };
    let curves = cfg.resolved_curves();
    let specs: Vec<ScheduleSpec> = curves.iter().map(|c| schedule_spec(c, &ctx)).collect::<anyhow::Result<_>>()?;

    let outputs: Vec<RepetitionOutput> = (0..cfg.repetitions())
        .into_par_iter()
        .map(|rep| -> anyhow::Result<RepetitionOutput> {
            let seed = repetition_seed(cfg, rep);
            let root = RandomStream::new(seed);
            let initial = gaussian_initial(2, 0.0, cfg.ensemble(), &mut root.split_named("initial"));
            let mut out = RepetitionOutput {
                series: Vec::new(),
                runs: Vec::new(),
                plots: Vec::new(),
            };
            for (curve, spec) in curves.iter().zip(&specs) {
                let mut ens = Ensemble::new(
                    pot.clone(),
                    sampler_config(curve),
                    spec,
                    initial.clone(),
                    &root.split_named("chains"),
                )?;
                let mut series = new_series(format!("ks_y/{}", curve.label), rep, seed, cfg.ensemble());
                let mut pool: Vec<(usize, Vector)> = Vec::new();
                for k in record_steps(cfg, curve, 2) {
                    ens.advance(k - ens.step())?;
                    pool.extend(ens.positions().into_iter().map(|p| (k, p)));
                    let ys: Vec<f64> = pool.iter().filter(|(s, _)| 2 * s >= k).map(|(_, p)| y_of(p)).collect();
                    let value = if ys.is_empty() {
                        1.0
                    } else {
                        ks_statistic_1d(&ys, |y| funnel.y_marginal_cdf(y))?
                    };
                    push_point(&mut series, &ens, value);
                }
                out.runs.push(summarize(&curve.label, rep, curve, &ens, 2));
                out.series.push(series);
                if rep == 0 {
                    let last = pool.last().map_or(0, |(s, _)| *s);
                    let points: Vec<(f64, f64)> = pool
                        .iter()
                        .filter(|(s, _)| 2 * s >= last)
                        .map(|(_, p)| (p[0], p[1]))
                        .take(MAX_SCATTER)
                        .collect();
                    out.plots.push(Plot {
                        name: format!("samples_{}", curve.label),
                        title: format!("Funnel samples: {}", curve.label),
                        kind: PlotKind::Scatter {
                            x_label: "x".to_string(),
                            y_label: "y".to_string(),
                            points,
                            contours: Vec::new(),
                            bounds: None,
                        },
                    });
                }
            }
            Ok(out)
        })
        .collect::<anyhow::Result<_>>()?;

    let mut report = assemble(cfg, outputs, start);
    report.plots.insert(
        0,
        line_plot(
            "ks_y",
            "KS distance of the y marginal",
            "iteration",
            "KS statistic",
            false,
            &report.aggregate,
        ),
    );
    Ok(report)
}

const MAX_SCATTER: usize = 4000;
