//! Numerical checks of the samplers against exact identities, closed-form
//! oracles and rate statements. Every check is deterministic given its seed.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::Result;
use crate::linalg::{
    random_orthogonal, random_semi_orthogonal, sym_eigen, Matrix, SpdMatrix,
    SymmetricMatrix, Vector,
};
use crate::metrics::{gaussian_w2, GaussianMomentRecursion};
use crate::preconditioners::{relative_smoothness, BlockProbabilities, Preconditioner, ScheduleSpec};
use crate::rng::RandomStream;
use crate::samplers::{
    lmc_step, plmc_step, rclmc_step, run_coupled_pair, subspace_gd_step, ChainState, Ensemble,
    SamplerConfig, SamplerKind,
};
use crate::targets::{gaussian_target, ill_conditioned_precision, normal_cdf, OracleCounter, Potential};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    fn push(
        &mut self,
        name: impl Into<String>,
        passed: bool,
        measured: f64,
        tolerance: f64,
        seed: u64,
        detail: impl Into<String>,
    ) {
        self.checks.push(CheckResult {
            name: name.into(),
            passed,
            measured,
            tolerance,
            seed,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.checks.extend(other.checks);
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Human-readable pass/fail table.
    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:<6}  {:>14}  {:>14}  {:>6}  detail",
            "check", "result", "measured", "tolerance", "seed"
        );
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<width$}  {:<6}  {:>14.6e}  {:>14.6e}  {:>6}  {}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.measured,
                c.tolerance,
                c.seed,
                c.detail
            );
        }
        out
    }
}

fn random_vector(d: usize, rng: &mut RandomStream) -> Vector {
    Vector::from_fn(d, |_, _| rng.standard_normal())
}

/// The three reduction identities over 100 steps on a random 8-dimensional
/// Gaussian target: SLMC with one full-rank block against PLMC, PLMC with
/// `A = I` against LMC, and SLMC with `A = I`, `r = 1` against RCLMC.
pub fn check_reductions(seed: u64) -> Result<ValidationReport> {
    const D: usize = 8;
    const STEPS: usize = 100;
    let root = RandomStream::new(seed).split_named("reductions");
    let mut rng = root.split(0);
    let precision = crate::linalg::random_spd(D, 0.5, &mut rng);
    let a = crate::linalg::random_spd(D, 0.5, &mut rng);
    let x0 = random_vector(D, &mut rng);
    // Stable steps for the drawn target, so deviations stay on the scale of
    // the state rather than growing with a blown-up chain.
    let h = 0.5 / relative_smoothness(&a, precision.matrix())?;
    let h_plain = 0.5 / precision.max_eigenvalue();
    let pot = gaussian_target(precision);
    let mut report = ValidationReport::default();

    let full = Preconditioner::new(a.clone(), D, &BlockProbabilities::Uniform)?;
    let slmc = SamplerConfig::new(SamplerKind::Slmc, h);
    let mut s1 = ChainState::new(x0.clone(), root.split(1));
    let mut s2 = ChainState::new(x0.clone(), root.split(1));
    let mut worst: f64 = 0.0;
    let mut drift: f64 = 0.0;
    let mut free = ChainState::new(x0.clone(), root.split(1));
    for _ in 0..STEPS {
        // Both updates start from the same state so each step's deviation is
        // measured on its own; `free` runs PLMC unsynchronized for the drift.
        s2.position = s1.position.clone();
        slmc.step(&mut s1, &pot, &full)?;
        plmc_step(&mut s2, &pot, &a, full.noise_factor(), h)?;
        plmc_step(&mut free, &pot, &a, full.noise_factor(), h)?;
        worst = worst.max((&s1.position - &s2.position).amax());
        drift = drift.max((&s1.position - &free.position).amax());
    }
    report.push(
        "reduction/slmc_full_rank_vs_plmc",
        worst <= 1e-12,
        worst,
        1e-12,
        seed,
        format!("max per-step deviation; accumulated trajectory drift {drift:.1e}"),
    );

    let identity = Preconditioner::identity(D, D)?;
    let mut s1 = ChainState::new(x0.clone(), root.split(2));
    let mut s2 = ChainState::new(x0.clone(), root.split(2));
    let mut worst: f64 = 0.0;
    for _ in 0..STEPS {
        lmc_step(&mut s1, &pot, h_plain)?;
        plmc_step(&mut s2, &pot, identity.matrix(), identity.noise_factor(), h_plain)?;
        worst = worst.max((&s1.position - &s2.position).amax());
    }
    report.push(
        "reduction/plmc_identity_vs_lmc",
        worst == 0.0,
        worst,
        0.0,
        seed,
        "bitwise comparison",
    );

    let coords = Preconditioner::identity(D, 1)?;
    // Each coordinate update moves with `h d`.
    let h_coord = h_plain / D as f64;
    let coordinate = SamplerConfig::new(SamplerKind::Slmc, h_coord);
    let mut s1 = ChainState::new(x0.clone(), root.split(3));
    let mut s2 = ChainState::new(x0, root.split(3));
    let mut worst: f64 = 0.0;
    let mut single_coordinate = true;
    for _ in 0..STEPS {
        let before = s1.position.clone();
        coordinate.step(&mut s1, &pot, &coords)?;
        rclmc_step(&mut s2, &pot, h_coord)?;
        worst = worst.max((&s1.position - &s2.position).amax());
        single_coordinate &= (&s1.position - before).iter().filter(|v| **v != 0.0).count() == 1;
    }
    report.push(
        "reduction/slmc_coordinate_vs_rclmc",
        worst <= 1e-12 && single_coordinate,
        worst,
        1e-12,
        seed,
        if single_coordinate {
            "one coordinate per step"
        } else {
            "more than one coordinate moved in a step"
        },
    );
    Ok(report)
}

/// Parameters of [`check_moment_recursion`].
#[derive(Clone, Debug)]
pub struct MomentCheckParams {
    pub chains: usize,
    pub checkpoints: Vec<usize>,
    /// Comparisons are made at this many standard errors.
    pub z: f64,
}

impl Default for MomentCheckParams {
    fn default() -> Self {
        Self {
            chains: 10_000,
            checkpoints: vec![10, 100, 1000],
            z: 3.0,
        }
    }
}

/// Empirical mean and covariance of LMC, PLMC (`A = Σ`) and SLMC (`A = I`,
/// `r = 5`) ensembles on the 20-dimensional ill-conditioned Gaussian,
/// started from `N(1, I)`, compared entry by entry with the exact moment
/// recursions.
pub fn check_moment_recursion(seed: u64, params: &MomentCheckParams) -> Result<ValidationReport> {
    let root = RandomStream::new(seed).split_named("moments");
    let precision = ill_conditioned_precision(&mut root.split_named("target"));
    let sigma = precision.inverse();
    let d = precision.dim();
    let pot: Arc<dyn Potential> = Arc::new(gaussian_target(precision.clone()));
    let lambda_max = precision.max_eigenvalue();

    // Steps chosen so every update is a contraction: the stiffest direction
    // of the plain chains moves by a factor 1 − 0.4.
    let h_lmc = 0.4 / lambda_max;
    let cases: Vec<(&str, SamplerConfig, ScheduleSpec, GaussianMomentRecursion)> = vec![
        (
            "lmc",
            SamplerConfig::new(SamplerKind::Lmc, h_lmc),
            ScheduleSpec::fixed(SpdMatrix::identity(d), d, &BlockProbabilities::Uniform, f64::INFINITY)?,
            GaussianMomentRecursion::lmc(&precision, h_lmc),
        ),
        (
            "plmc",
            SamplerConfig::new(SamplerKind::Plmc, 0.05),
            ScheduleSpec::fixed(sigma.clone(), d, &BlockProbabilities::Uniform, f64::INFINITY)?,
            GaussianMomentRecursion::plmc(&precision, &sigma, 0.05),
        ),
        {
            let pre = Preconditioner::new(SpdMatrix::identity(d), 5, &BlockProbabilities::Uniform)?;
            let h = 0.1 / lambda_max;
            let rec = GaussianMomentRecursion::slmc(&precision, pre.partition(), h);
            (
                "slmc",
                SamplerConfig::new(SamplerKind::Slmc, h),
                ScheduleSpec::Fixed(Arc::new(pre)),
                rec,
            )
        },
    ];

    let mut report = ValidationReport::default();
    let mut init_rng = root.split_named("initial");
    let initial: Vec<Vector> = (0..params.chains)
        .map(|_| random_vector(d, &mut init_rng).add_scalar(1.0))
        .collect();
    let last = params.checkpoints.iter().copied().max().unwrap_or(0);
    let (mut all_exceed, mut all_total) = (0, 0);

    for (name, sampler, spec, rec) in cases {
        let (means, covs) = rec.series(&Vector::from_element(d, 1.0), &Matrix::identity(d, d), last);
        let mut ens = Ensemble::new(pot.clone(), sampler, &spec, initial.clone(), &root.split_named(name))?;
        for &k in &params.checkpoints {
            ens.advance(k - ens.step())?;
            let pts = ens.positions();
            let (worst, exceed, total) = compare_moments(&pts, &means[k], &covs[k], params.z);
            all_exceed += exceed;
            all_total += total;
            report.push(
                format!("moments/{name}/step_{k}"),
                exceed == 0 && ens.diverged() == 0,
                worst,
                params.z,
                seed,
                format!("{exceed} of {total} entries beyond {} SE", params.z),
            );
        }
    }
    // Under exact agreement each entry exceeds with probability
    // p = 2(1 − Φ(z)), so the pooled count is roughly Binomial(n, p).
    let p = 2.0 * (1.0 - normal_cdf(params.z));
    let bound = binomial_upper_quantile(all_total, p, 0.999);
    report.push(
        "moments/pooled_exceedances",
        all_exceed <= bound,
        all_exceed as f64,
        bound as f64,
        seed,
        format!(
            "{all_exceed} of {all_total} entries beyond {} SE; {:.1} expected by chance",
            params.z,
            all_total as f64 * p
        ),
    );
    Ok(report)
}

/// Smallest `k` with `P(Binomial(n, p) ≤ k) ≥ q`.
pub fn binomial_upper_quantile(n: usize, p: f64, q: f64) -> usize {
    let (ln_p, ln_1p) = (p.ln(), (-p).ln_1p());
    let mut ln_pmf = n as f64 * ln_1p;
    let mut cdf = ln_pmf.exp();
    let mut k = 0;
    while cdf < q && k < n {
        ln_pmf += ((n - k) as f64).ln() - ((k + 1) as f64).ln() + ln_p - ln_1p;
        k += 1;
        cdf += ln_pmf.exp();
    }
    k
}

/// Largest |z|-score over all mean and covariance entries, how many exceed
/// `z_max`, and how many entries were compared.
fn compare_moments(points: &[Vector], mean: &Vector, cov: &Matrix, z_max: f64) -> (f64, usize, usize) {
    let n = points.len() as f64;
    let d = mean.len();
    let mut xbar = Vector::zeros(d);
    for p in points {
        xbar += p;
    }
    xbar /= n;
    let centered: Vec<Vector> = points.iter().map(|p| p - &xbar).collect();
    let mut worst: f64 = 0.0;
    let mut exceed = 0;
    let mut total = 0;
    let mut tally = |z: f64| {
        worst = worst.max(z);
        total += 1;
        if z > z_max {
            exceed += 1;
        }
    };
    for j in 0..d {
        let var = centered.iter().map(|c| c[j] * c[j]).sum::<f64>() / (n - 1.0);
        tally((xbar[j] - mean[j]).abs() / (var / n).sqrt());
    }
    for j in 0..d {
        for k in j..d {
            let prods: Vec<f64> = centered.iter().map(|c| c[j] * c[k]).collect();
            let est = prods.iter().sum::<f64>() / (n - 1.0);
            let m = prods.iter().sum::<f64>() / n;
            let var = prods.iter().map(|p| (p - m) * (p - m)).sum::<f64>() / (n - 1.0);
            tally((est - cov[(j, k)]).abs() / (var / n).sqrt());
        }
    }
    (worst, exceed, total)
}

/// Stationary `W₂` between the chain's fixed-point Gaussian and the target,
/// from the exact recursions, at `h`, `h/4` and `h/16` for PLMC (`A = Σ`)
/// and SLMC (`A = Σ`, `r ∈ {5, 10}`). Each quartering of `h` should halve
/// the distance if the bias scales as `√h`.
pub fn check_bias_scaling(seed: u64) -> Result<ValidationReport> {
    let root = RandomStream::new(seed).split_named("bias");
    let precision = ill_conditioned_precision(&mut root.split_named("target"));
    let sigma = precision.inverse();
    let d = sigma.dim();
    let zero = Vector::zeros(d);
    let steps = [0.01, 0.0025, 0.000625];
    let mut report = ValidationReport::default();

    let mut cases: Vec<(String, Box<dyn Fn(f64) -> GaussianMomentRecursion>)> = vec![(
        "plmc".to_string(),
        Box::new(|h| GaussianMomentRecursion::plmc(&precision, &sigma, h)),
    )];
    for r in [5, 10] {
        let pre = Preconditioner::new(sigma.clone(), r, &BlockProbabilities::Uniform)?;
        let precision = precision.clone();
        cases.push((
            format!("slmc_r{r}"),
            Box::new(move |h| GaussianMomentRecursion::slmc(&precision, pre.partition(), h)),
        ));
    }

    for (name, make) in &cases {
        let w2: Vec<f64> = steps
            .iter()
            .map(|&h| {
                let c = make(h).stationary_covariance()?;
                gaussian_w2(&zero, &c, &zero, &sigma)
            })
            .collect::<Result<_>>()?;
        for i in 0..2 {
            let ratio = w2[i] / w2[i + 1];
            report.push(
                format!("bias/{name}/h{}_to_h{}", steps[i], steps[i + 1]),
                (1.9..=2.1).contains(&ratio),
                ratio,
                2.0,
                seed,
                format!("W2 {:.4e} -> {:.4e}; accepted ratio range [1.9, 2.1]", w2[i], w2[i + 1]),
            );
        }
        let monotone = w2.windows(2).all(|w| w[1] < w[0]);
        report.push(
            format!("bias/{name}/monotone"),
            monotone,
            w2[2],
            0.0,
            seed,
            "stationary W2 decreases with h",
        );
    }
    Ok(report)
}

/// Least-squares slope of `y` against `t`.
pub fn fit_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let num: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let den: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    num / den
}

/// Fitted decay rate per unit time of `‖Z_k − Z'_k‖²_{A⁻¹}` over the final
/// 80% of the steps.
pub fn contraction_rate(series: &[f64], h: f64) -> f64 {
    let start = series.len() / 5;
    let t: Vec<f64> = (start..series.len()).map(|k| k as f64 * h).collect();
    let y: Vec<f64> = series[start..].iter().map(|v| v.ln()).collect();
    fit_slope(&t, &y)
}

/// Synchronously coupled PLMC chains on the 20-dimensional ill-conditioned
/// Gaussian with `h = 1e-3` and 5000 steps, for `A = Σ` and `A = I`. The
/// fitted rate should be within 10% of `−2m`, where `m` is the smallest
/// eigenvalue of `A^{1/2} Σ⁻¹ A^{1/2}`.
pub fn check_contraction(seed: u64) -> Result<ValidationReport> {
    const H: f64 = 1e-3;
    const STEPS: usize = 5000;
    let root = RandomStream::new(seed).split_named("contraction");
    let precision = ill_conditioned_precision(&mut root.split_named("target"));
    let sigma = precision.inverse();
    let d = precision.dim();
    let pot = gaussian_target(precision.clone());
    let mut rng = root.split_named("initial");
    let z0 = random_vector(d, &mut rng).add_scalar(1.0);
    let z0p = random_vector(d, &mut rng);
    let mut report = ValidationReport::default();

    for (name, a) in [("sigma", sigma.clone()), ("identity", SpdMatrix::identity(d))] {
        let root_a = a.sqrt();
        let whitened = root_a.matrix() * precision.matrix() * root_a.matrix();
        let m = sym_eigen(&SymmetricMatrix::from_symmetrized(&whitened)?)?.eigenvalues[d - 1];
        let series = run_coupled_pair(z0.clone(), z0p.clone(), &pot, &a, H, STEPS, &root.split_named(name))?;
        let rate = contraction_rate(&series, H);
        let target = -2.0 * m;
        let rel = (rate - target).abs() / target.abs();
        report.push(
            format!("contraction/{name}"),
            rel <= 0.1,
            rate,
            target,
            seed,
            format!("m = {m:.6}, relative deviation {rel:.4}"),
        );
        if name == "sigma" {
            let exact = (1.0 - H).powi(2);
            let worst = series
                .windows(2)
                .map(|w| (w[1] / w[0] - exact).abs())
                .fold(0.0, f64::max);
            report.push(
                "contraction/sigma/per_step_factor",
                worst < 1e-9,
                worst,
                1e-9,
                seed,
                "deviation from (1 − h)² per step",
            );
        }
    }
    let same = run_coupled_pair(z0.clone(), z0, &pot, &sigma, H, 100, &root)?;
    report.push(
        "contraction/identical_start",
        same.iter().all(|v| *v == 0.0),
        same.iter().fold(0.0, |a: f64, b| a.max(*b)),
        0.0,
        seed,
        "coupled chains from one point stay together",
    );
    Ok(report)
}

/// Average per-step decay factor of the optimality gap of random-subspace
/// gradient descent on a quadratic with spectrum in `[α, β]`.
pub fn subspace_descent_factor(
    hessian: &SpdMatrix,
    r: usize,
    runs: usize,
    steps: usize,
    rng: &RandomStream,
) -> Result<f64> {
    let d = hessian.dim();
    let beta = hessian.max_eigenvalue();
    let pot = gaussian_target(hessian.clone());
    let h = r as f64 / (d as f64 * beta);
    let mut total = 0.0;
    for run in 0..runs {
        let mut stream = rng.split(run as u64);
        let mut x = random_vector(d, &mut stream);
        let gap0 = pot.value(&x);
        let mut counter = OracleCounter::new();
        for _ in 0..steps {
            let w = random_semi_orthogonal(d, r, &mut stream);
            x = subspace_gd_step(&x, &pot, &w, h, &mut counter)?;
        }
        total += pot.value(&x) / gap0;
    }
    Ok((total / runs as f64).powf(1.0 / steps as f64))
}

/// `d = 20`, `α = 0.1`, `β = 10`, `r ∈ {1, 5, 10}`, 500 runs: the measured
/// factor must not exceed `1 − rα/(dβ) + 0.02`. Also checks the isotropic
/// case, where the expected factor is exactly `1 − r/d`.
pub fn check_subspace_descent_rate(seed: u64) -> Result<ValidationReport> {
    const D: usize = 20;
    const ALPHA: f64 = 0.1;
    const BETA: f64 = 10.0;
    const RUNS: usize = 500;
    const STEPS: usize = 50;
    let root = RandomStream::new(seed).split_named("subspace_descent");
    let q = random_orthogonal(D, &mut root.split_named("basis"));
    let spectrum = Vector::from_fn(D, |i, _| ALPHA + (BETA - ALPHA) * i as f64 / (D - 1) as f64);
    let hessian = SpdMatrix::from_spectrum(&spectrum, &q)?;
    let mut report = ValidationReport::default();
    for r in [1, 5, 10] {
        let omega = 1.0 - r as f64 * ALPHA / (D as f64 * BETA);
        let factor = subspace_descent_factor(&hessian, r, RUNS, STEPS, &root.split(r as u64))?;
        report.push(
            format!("subspace_descent/r{r}"),
            factor <= omega + 0.02,
            factor,
            omega + 0.02,
            seed,
            format!("ω = {omega:.6}"),
        );
    }
    let iso = SpdMatrix::from_diagonal(&[BETA; D])?;
    for r in [1, 5, 10] {
        let expected = 1.0 - r as f64 / D as f64;
        let factor = subspace_descent_factor(&iso, r, RUNS, 1, &root.split(100 + r as u64))?;
        report.push(
            format!("subspace_descent/isotropic_r{r}"),
            (factor - expected).abs() <= 0.02,
            factor,
            expected,
            seed,
            "one step, expected factor 1 − r/d",
        );
    }
    Ok(report)
}

/// `E_π ‖W Wᵀ ∇V(Z)‖²_A` for `π = N(0, Σ)`, `A = Σ`:
/// `Tr(WᵀΣW · WᵀΣ⁻¹W)`.
pub fn block_gradient_expectation(sigma: &SpdMatrix, precision: &SpdMatrix, w: &Matrix) -> f64 {
    let c = w.transpose() * sigma.matrix() * w;
    let b = w.transpose() * precision.matrix() * w;
    (c * b).trace()
}

/// Smoothness of the potential restricted to `span(W)` relative to the
/// compressed preconditioner: `λ_max(C^{1/2} B C^{1/2})` with `C = WᵀΣW`,
/// `B = WᵀΣ⁻¹W`. Equals 1 for eigenblocks of Σ.
pub fn restricted_relative_smoothness(sigma: &SpdMatrix, precision: &SpdMatrix, w: &Matrix) -> Result<f64> {
    let c = SpdMatrix::new(SymmetricMatrix::from_symmetrized(&(w.transpose() * sigma.matrix() * w))?)?;
    let root = c.sqrt();
    let b = w.transpose() * precision.matrix() * w;
    let m = root.matrix() * b * root.matrix();
    Ok(sym_eigen(&SymmetricMatrix::from_symmetrized(&m)?)?.eigenvalues[0])
}

/// Monte-Carlo estimate of the expected squared block gradient with its standard error.
pub fn block_gradient_monte_carlo(
    sigma: &SpdMatrix,
    precision: &SpdMatrix,
    w: &Matrix,
    draws: usize,
    rng: &mut RandomStream,
) -> (f64, f64) {
    let root = sigma.sqrt();
    let compressed = w.transpose() * sigma.matrix() * w;
    let d = sigma.dim();
    let mut z = Vector::zeros(d);
    let mut values = Vec::with_capacity(draws);
    for _ in 0..draws {
        rng.fill_standard_normal(z.as_mut_slice());
        let x = root.matrix() * &z;
        let g = w.tr_mul(&(precision.matrix() * x));
        values.push(g.dot(&(&compressed * &g)));
    }
    let n = draws as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Equality `E = r` for eigenblocks of Σ (A = Σ), the bound `E ≤ M_W r` for
/// 100 random semi-orthogonal `W`, and Monte-Carlo agreement with the closed
/// form.
pub fn check_block_gradient_bound(seed: u64) -> Result<ValidationReport> {
    let root = RandomStream::new(seed).split_named("block_gradient");
    let precision = ill_conditioned_precision(&mut root.split_named("target"));
    let sigma = precision.inverse();
    let d = sigma.dim();
    let mut report = ValidationReport::default();

    let mut worst: f64 = 0.0;
    for r in [1, 2, 4, 5, 10, 20] {
        let pre = Preconditioner::new(sigma.clone(), r, &BlockProbabilities::Uniform)?;
        for b in pre.partition().blocks() {
            let e = block_gradient_expectation(&sigma, &precision, &b.basis);
            worst = worst.max((e - b.rank() as f64).abs());
        }
    }
    report.push(
        "block_gradient/eigenblock_equality",
        worst <= 1e-9,
        worst,
        1e-9,
        seed,
        "max |E − r| over eigenblocks with r ∈ {1,2,4,5,10,20}",
    );

    let mut rng = root.split_named("subspaces");
    let mut worst_slack = f64::NEG_INFINITY;
    let mut min_ratio = f64::INFINITY;
    for i in 0..100 {
        let r = [1, 5, 10][i % 3];
        let w = random_semi_orthogonal(d, r, &mut rng);
        let e = block_gradient_expectation(&sigma, &precision, &w);
        let m = restricted_relative_smoothness(&sigma, &precision, &w)?;
        worst_slack = worst_slack.max(e - m * r as f64);
        min_ratio = min_ratio.min(e / r as f64);
    }
    report.push(
        "block_gradient/random_subspace_bound",
        worst_slack <= 1e-9 * d as f64,
        worst_slack,
        0.0,
        seed,
        format!("max E − M_W·r over 100 subspaces; min E/r = {min_ratio:.4}"),
    );

    let identity = SpdMatrix::identity(d);
    let mut worst: f64 = 0.0;
    for r in [1, 5, 10] {
        let w = random_semi_orthogonal(d, r, &mut rng);
        worst = worst.max((block_gradient_expectation(&identity, &identity, &w) - r as f64).abs());
    }
    report.push(
        "block_gradient/isotropic_equality",
        worst <= 1e-12,
        worst,
        1e-12,
        seed,
        "Σ = I gives E = r for any W",
    );

    let mut mc_rng = root.split_named("monte_carlo");
    let eigen = Preconditioner::new(sigma.clone(), 5, &BlockProbabilities::Uniform)?;
    let subspaces = [
        ("eigenblock", eigen.partition().blocks()[0].basis.clone()),
        ("random", random_semi_orthogonal(d, 5, &mut rng)),
    ];
    for (name, w) in subspaces {
        let exact = block_gradient_expectation(&sigma, &precision, &w);
        let (mean, se) = block_gradient_monte_carlo(&sigma, &precision, &w, 100_000, &mut mc_rng);
        let z = (mean - exact).abs() / se;
        report.push(
            format!("block_gradient/monte_carlo_{name}"),
            z <= 3.0,
            z,
            3.0,
            seed,
            format!("closed form {exact:.6}, estimate {mean:.6} ± {se:.2e}"),
        );
    }
    Ok(report)
}

/// Runs every check except the moment-recursion ensemble, which is
/// parameterized separately.
pub fn run_core_checks(seed: u64) -> Result<ValidationReport> {
    let mut report = check_reductions(seed)?;
    report.extend(check_contraction(seed)?);
    report.extend(check_subspace_descent_rate(seed)?);
    report.extend(check_block_gradient_bound(seed)?);
    report.extend(check_bias_scaling(seed)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reductions_hold() {
        let r = check_reductions(0).unwrap();
        assert!(r.passed(), "{}", r.table());
    }

    #[test]
    fn contraction_matches_theory() {
        let r = check_contraction(1).unwrap();
        assert!(r.passed(), "{}", r.table());
    }

    #[test]
    fn block_gradient_checks() {
        let r = check_block_gradient_bound(2).unwrap();
        assert!(r.passed(), "{}", r.table());
    }

    #[test]
    fn random_subspaces_exceed_rank() {
        // E ≥ r always, by the Kantorovich-type inequality Tr(C C⁻¹) = r ≤
        // Tr(C B) when B ⪰ C⁻¹ on the subspace. The bound E ≤ r therefore
        // only holds with M = 1 for invariant subspaces.
        let root = RandomStream::new(3);
        let precision = ill_conditioned_precision(&mut root.split(0));
        let sigma = precision.inverse();
        let mut rng = root.split(1);
        for r in [1, 5, 10] {
            let w = random_semi_orthogonal(20, r, &mut rng);
            assert!(block_gradient_expectation(&sigma, &precision, &w) > r as f64);
        }
    }

    #[test]
    fn stationary_bias_is_linear_in_step_for_whitened_plmc() {
        // With A = Σ the fixed point is 2Σ/(2 − h), so W2 is proportional to
        // (√(2/(2−h)) − 1) ≈ h/4 and quartering h divides it by about 4.
        let r = check_bias_scaling(4).unwrap();
        let ratio = r
            .checks
            .iter()
            .find(|c| c.name.starts_with("bias/plmc/h0.01"))
            .unwrap()
            .measured;
        let expected = ((2.0f64 / 1.99).sqrt() - 1.0) / ((2.0f64 / (2.0 - 0.0025)).sqrt() - 1.0);
        assert!((ratio - expected).abs() < 1e-6, "{ratio} vs {expected}");
        assert!(r.checks.iter().filter(|c| c.name.ends_with("monotone")).all(|c| c.passed));
    }

    #[test]
    fn descent_factor_isotropic_and_full_rank() {
        let iso = SpdMatrix::from_diagonal(&[2.0; 6]).unwrap();
        let f = subspace_descent_factor(&iso, 6, 3, 1, &RandomStream::new(5)).unwrap();
        assert!(f.abs() < 1e-12);
    }

    #[test]
    fn binomial_quantile_matches_direct_sum() {
        // n = 10, p = 0.5: P(X ≤ 7) = 968/1024 < 0.95 ≤ P(X ≤ 8) = 1013/1024.
        assert_eq!(binomial_upper_quantile(10, 0.5, 0.95), 8);
        assert_eq!(binomial_upper_quantile(10, 0.5, 968.0 / 1024.0), 7);
        assert_eq!(binomial_upper_quantile(5, 1e-9, 0.999), 0);
    }

    #[test]
    fn slope_fit_recovers_line() {
        let t: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = t.iter().map(|v| 3.0 - 2.0 * v).collect();
        assert!((fit_slope(&t, &y) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn small_moment_check_runs() {
        let params = MomentCheckParams {
            chains: 2000,
            checkpoints: vec![5, 20],
            z: 3.0,
        };
        let r = check_moment_recursion(6, &params).unwrap();
        assert_eq!(r.checks.len(), 7);
        // Each entry is a 3-SE comparison, so isolated exceedances are
        // expected; the worst z-score must still be moderate and the pooled
        // count consistent with chance.
        let (pooled, per_step) = r.checks.split_last().unwrap();
        assert!(per_step.iter().all(|c| c.measured < 6.0), "{}", r.table());
        assert!(pooled.passed, "{}", r.table());
    }
}
