//! Sample-quality metrics and exact oracles for Gaussian targets.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{spd_sqrt, sym_eigen, EigenblockPartition, Matrix, SpdMatrix, SymmetricMatrix, Vector};

/// Points of uniform dimension, optionally paired with scores `∇ log π`.
#[derive(Clone, Debug)]
pub struct SampleSet {
    points: Vec<Vector>,
    scores: Option<Vec<Vector>>,
}

impl SampleSet {
    pub fn new(points: Vec<Vector>) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptySamples)?;
        let d = first.len();
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(Error::RaggedSamples);
        }
        if points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(Self { points, scores: None })
    }

    pub fn with_scores(points: Vec<Vector>, scores: Vec<Vector>) -> Result<Self> {
        let mut set = Self::new(points)?;
        if scores.len() != set.points.len() || scores.iter().any(|s| s.len() != set.dim()) {
            return Err(Error::RaggedSamples);
        }
        set.scores = Some(scores);
        Ok(set)
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn scores(&self) -> Option<&[Vector]> {
        self.scores.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}

/// `φ(x) = |1ᵀx|`.
pub fn abs_sum(x: &Vector) -> f64 {
    x.sum().abs()
}

/// `|mean φ(X_i) − E_π φ|` with `φ(x) = |1ᵀx|`.
pub fn test_error(samples: &SampleSet, true_mean: f64) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.points().iter().map(abs_sum).sum::<f64>() / n;
    (mean - true_mean).abs()
}

/// `E|1ᵀX|` for `X ~ N(0, Σ)`: the half-normal mean `√(2 s² / π)` with
/// `s² = 1ᵀ Σ 1`.
pub fn abs_sum_gaussian_mean(sigma: &SpdMatrix) -> f64 {
    let s2 = sigma.matrix().sum();
    (2.0 * s2 / PI).sqrt()
}

/// Median of the pairwise Euclidean distances; the lower middle element for
/// an even count.
pub fn median_heuristic(samples: &SampleSet) -> Result<f64> {
    let pts = samples.points();
    if pts.len() < 2 {
        return Err(Error::DegenerateBandwidth);
    }
    let mut dists = Vec::with_capacity(pts.len() * (pts.len() - 1) / 2);
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            dists.push((&pts[i] - &pts[j]).norm());
        }
    }
    let mid = (dists.len() - 1) / 2;
    let (_, median, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    let median = *median;
    if !(median > 0.0) {
        return Err(Error::DegenerateBandwidth);
    }
    Ok(median)
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum KsdBandwidth {
    #[default]
    Median,
    Fixed(f64),
}

/// KSD with the inverse multiquadric kernel `(c² + ‖x − y‖²)^{−1/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct KsdConfig {
    pub bandwidth: KsdBandwidth,
}

/// Square root of the V-statistic `(1/N²) Σ_{i,j} k₀(x_i, x_j)` of the Stein
/// kernel built from the IMQ kernel with exponent −1/2.
pub fn ksd(samples: &SampleSet, config: &KsdConfig) -> Result<f64> {
    let scores = samples.scores().ok_or(Error::MissingScores)?;
    let c = match config.bandwidth {
        KsdBandwidth::Median => median_heuristic(samples)?,
        KsdBandwidth::Fixed(c) => c,
    };
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::DegenerateBandwidth);
    }
    let c2 = c * c;
    let d = samples.dim() as f64;
    let pts = samples.points();
    let n = pts.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            let diff = &pts[i] - &pts[j];
            let r2 = diff.norm_squared();
            let q = c2 + r2;
            let q_half = q.sqrt();
            let k = 1.0 / q_half;
            let q32 = k / q;
            let q52 = q32 / q;
            let trace = d * q32 - 3.0 * r2 * q52;
            let cross = q32 * diff.dot(&(&scores[i] - &scores[j]));
            row += trace + cross + k * scores[i].dot(&scores[j]);
        }
        total += row;
    }
    Ok((total / (n * n) as f64).max(0.0).sqrt())
}

/// `W₂(N(m1, S1), N(m2, S2))`.
pub fn gaussian_w2(m1: &Vector, s1: &SpdMatrix, m2: &Vector, s2: &SpdMatrix) -> Result<f64> {
    let root = spd_sqrt(s2.symmetric())?;
    let inner = root.matrix() * s1.matrix() * root.matrix();
    let eig = sym_eigen(&SymmetricMatrix::from_symmetrized(&inner)?)?;
    let cross: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    let trace = (s1.matrix().trace() + s2.matrix().trace() - 2.0 * cross).max(0.0);
    Ok(((m1 - m2).norm_squared() + trace).sqrt())
}

/// `sup_x |F_n(x) − F(x)|`, checking both one-sided gaps at every sample.
pub fn ks_statistic_1d(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        worst = worst.max(above).max(below);
    }
    Ok(worst)
}

/// Exact mean and covariance propagation of a preconditioned Langevin chain
/// on `V(x) = ½ xᵀ Σ⁻¹ x`:
/// `μ' = Σ_i φ_i (I − h_i P_i Σ⁻¹) μ`,
/// `C' = Σ_i φ_i [(I − h_i P_i Σ⁻¹) C (·)ᵀ + 2 h_i P_i]`.
///
/// The block `P_k` is drawn independently of `X_k`, which makes the
/// mixture exact. PLMC and LMC are the single-block case with `φ = 1`.
#[derive(Clone, Debug)]
pub struct GaussianMomentRecursion {
    terms: Vec<RecursionTerm>,
    mean_map: Matrix,
    noise: Matrix,
}

#[derive(Clone, Debug)]
struct RecursionTerm {
    weight: f64,
    map: Matrix,
}

impl GaussianMomentRecursion {
    fn from_blocks(precision: &Matrix, blocks: Vec<(f64, f64, Matrix)>) -> Self {
        let d = precision.nrows();
        let mut mean_map = Matrix::zeros(d, d);
        let mut noise = Matrix::zeros(d, d);
        let terms = blocks
            .into_iter()
            .map(|(weight, step, p)| {
                let map = Matrix::identity(d, d) - &p * precision * step;
                mean_map += &map * weight;
                noise += &p * (2.0 * step * weight);
                RecursionTerm { weight, map }
            })
            .collect();
        Self {
            terms,
            mean_map,
            noise,
        }
    }

    pub fn lmc(precision: &SpdMatrix, h: f64) -> Self {
        let d = precision.dim();
        Self::from_blocks(precision.matrix(), vec![(1.0, h, Matrix::identity(d, d))])
    }

    pub fn plmc(precision: &SpdMatrix, a: &SpdMatrix, h: f64) -> Self {
        Self::from_blocks(precision.matrix(), vec![(1.0, h, a.matrix().clone())])
    }

    /// SLMC with base step `h`: block `i` moves with `h / φ_i`.
    pub fn slmc(precision: &SpdMatrix, partition: &EigenblockPartition, h: f64) -> Self {
        let blocks = partition
            .blocks()
            .iter()
            .zip(partition.probabilities())
            .map(|(b, &phi)| (phi, h / phi, b.dense()))
            .collect();
        Self::from_blocks(precision.matrix(), blocks)
    }

    pub fn step_mean(&self, mean: &Vector) -> Vector {
        &self.mean_map * mean
    }

    pub fn step_covariance(&self, cov: &Matrix) -> Matrix {
        let mut next = self.noise.clone();
        for t in &self.terms {
            next += &t.map * cov * t.map.transpose() * t.weight;
        }
        crate::linalg::symmetrize(&next)
    }

    /// Moments after each of `steps` iterations, index 0 being the start.
    pub fn series(&self, mean: &Vector, cov: &Matrix, steps: usize) -> (Vec<Vector>, Vec<Matrix>) {
        let mut means = vec![mean.clone()];
        let mut covs = vec![cov.clone()];
        for k in 0..steps {
            means.push(self.step_mean(&means[k]));
            covs.push(self.step_covariance(&covs[k]));
        }
        (means, covs)
    }

    /// Stationary covariance: the solution of
    /// `C = Σ_i φ_i M_i C M_iᵀ + N` via the vectorized linear system
    /// `(I − Σ_i φ_i M_i ⊗ M_i) vec C = vec N`.
    pub fn stationary_covariance(&self) -> Result<SpdMatrix> {
        let d = self.noise.nrows();
        let n = d * d;
        let mut system = Matrix::identity(n, n);
        for t in &self.terms {
            system -= t.map.kronecker(&t.map) * t.weight;
        }
        let rhs = Vector::from_column_slice(self.noise.as_slice());
        let sol = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidParameter("recursion has no stationary point".into()))?;
        let c = Matrix::from_column_slice(d, d, sol.as_slice());
        SpdMatrix::new(SymmetricMatrix::from_symmetrized(&c)?)
    }

    /// Spectral radius of the mean map; the recursion is stable when < 1.
    pub fn mean_contraction(&self) -> f64 {
        self.mean_map
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// [`GaussianMomentRecursion::slmc`] evaluated for `steps` steps.
pub fn slmc_gaussian_moment_recursion(
    precision: &SpdMatrix,
    partition: &EigenblockPartition,
    h: f64,
    mean: &Vector,
    cov: &Matrix,
    steps: usize,
) -> (Vec<Vector>, Vec<Matrix>) {
    GaussianMomentRecursion::slmc(precision, partition, h).series(mean, cov, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenblock_partition, random_spd, relative_frobenius};
    use crate::rng::RandomStream;
    use crate::targets::{ill_conditioned_precision, normal_cdf};

    fn vecs(rows: &[&[f64]]) -> Vec<Vector> {
        rows.iter().map(|r| Vector::from_column_slice(r)).collect()
    }

    #[test]
    fn test_error_examples() {
        let zeros = SampleSet::new(vecs(&[&[0.0, 0.0], &[0.0, 0.0]])).unwrap();
        assert_eq!(test_error(&zeros, 0.0), 0.0);
        let pm = SampleSet::new(vecs(&[&[1.0, 0.0], &[-1.0, 0.0]])).unwrap();
        assert_eq!(test_error(&pm, 0.0), 1.0);
        assert!(matches!(SampleSet::new(vec![]), Err(Error::EmptySamples)));
        assert!(matches!(
            SampleSet::new(vecs(&[&[1.0], &[1.0, 2.0]])),
            Err(Error::RaggedSamples)
        ));
    }

    #[test]
    fn abs_sum_mean_closed_form() {
        let one = SpdMatrix::identity(1);
        assert!((abs_sum_gaussian_mean(&one) - 0.797_884_560_802_865_4).abs() < 1e-15);
        let four = SpdMatrix::from_diagonal(&[4.0]).unwrap();
        assert!((abs_sum_gaussian_mean(&four) - 2.0 * (2.0 / PI).sqrt()).abs() < 1e-15);

        let mut rng = RandomStream::new(40);
        let n = 10_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v = rng.standard_normal().abs();
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let sd = (s2 / n as f64 - mean * mean).sqrt();
        assert!((mean - abs_sum_gaussian_mean(&one)).abs() < 3.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn abs_sum_mean_on_ill_conditioned_target() {
        let precision = ill_conditioned_precision(&mut RandomStream::new(41));
        let sigma = precision.inverse();
        let root = sigma.sqrt();
        let truth = abs_sum_gaussian_mean(&sigma);
        let mut rng = RandomStream::new(42);
        let n = 1_000_000;
        let mut values = Vec::with_capacity(n);
        let mut z = Vector::zeros(20);
        for _ in 0..n {
            rng.fill_standard_normal(z.as_mut_slice());
            values.push(abs_sum(&(root.matrix() * &z)));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((mean - truth).abs() < 3.0 * sd / (n as f64).sqrt());
        let points: Vec<Vector> = (0..n.min(1000))
            .map(|_| {
                rng.fill_standard_normal(z.as_mut_slice());
                root.matrix() * &z
            })
            .collect();
        let _ = SampleSet::new(points).unwrap();
    }

    #[test]
    fn median_examples() {
        let two = SampleSet::new(vecs(&[&[0.0], &[2.0]])).unwrap();
        assert_eq!(median_heuristic(&two).unwrap(), 2.0);
        let three = SampleSet::new(vecs(&[&[0.0], &[1.0], &[3.0]])).unwrap();
        assert_eq!(median_heuristic(&three).unwrap(), 2.0);
        let same = SampleSet::new(vecs(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert!(matches!(median_heuristic(&same), Err(Error::DegenerateBandwidth)));
    }

    #[test]
    fn median_matches_full_sort() {
        let mut rng = RandomStream::new(43);
        let pts: Vec<Vector> = (0..1000).map(|_| Vector::from_fn(2, |_, _| rng.standard_normal())).collect();
        let set = SampleSet::new(pts.clone()).unwrap();
        let mut all = Vec::new();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                all.push((&pts[i] - &pts[j]).norm());
            }
        }
        all.sort_by(f64::total_cmp);
        let brute = all[(all.len() - 1) / 2];
        assert!((median_heuristic(&set).unwrap() - brute).abs() < 1e-12);
    }

    #[test]
    fn ksd_single_point() {
        let set = SampleSet::with_scores(vecs(&[&[0.3, -1.0, 2.0]]), vecs(&[&[0.0, 0.0, 0.0]])).unwrap();
        let c = 1.7;
        let v = ksd(&set, &KsdConfig { bandwidth: KsdBandwidth::Fixed(c) }).unwrap();
        assert!((v * v - 3.0 / c.powi(3)).abs() < 1e-14);
        let no_scores = SampleSet::new(vecs(&[&[0.0]])).unwrap();
        assert!(matches!(ksd(&no_scores, &KsdConfig::default()), Err(Error::MissingScores)));
    }

    #[test]
    fn ksd_nonnegative_and_permutation_invariant() {
        let mut rng = RandomStream::new(44);
        for _ in 0..20 {
            let pts: Vec<Vector> = (0..15).map(|_| Vector::from_fn(3, |_, _| rng.standard_normal())).collect();
            let scores: Vec<Vector> = (0..15).map(|_| Vector::from_fn(3, |_, _| 3.0 * rng.standard_normal())).collect();
            let set = SampleSet::with_scores(pts.clone(), scores.clone()).unwrap();
            let a = ksd(&set, &KsdConfig::default()).unwrap();
            assert!(a >= 0.0);
            let mut pts_r = pts;
            let mut scores_r = scores;
            pts_r.reverse();
            scores_r.reverse();
            let b = ksd(&SampleSet::with_scores(pts_r, scores_r).unwrap(), &KsdConfig::default()).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ksd_detects_shift() {
        for seed in 0..20 {
            let mut rng = RandomStream::new(1000 + seed);
            let exact: Vec<Vector> = (0..500).map(|_| Vector::from_fn(2, |_, _| rng.standard_normal())).collect();
            let shifted: Vec<Vector> = exact.iter().map(|x| x + Vector::from_vec(vec![2.0, 0.0])).collect();
            let score = |x: &Vector| -x.clone();
            let a = SampleSet::with_scores(exact.clone(), exact.iter().map(score).collect()).unwrap();
            let b = SampleSet::with_scores(shifted.clone(), shifted.iter().map(score).collect()).unwrap();
            let ka = ksd(&a, &KsdConfig::default()).unwrap();
            let kb = ksd(&b, &KsdConfig::default()).unwrap();
            assert!(ka < kb, "seed {seed}: {ka} vs {kb}");
        }
    }

    #[test]
    fn w2_examples() {
        let i = SpdMatrix::identity(3);
        let z = Vector::zeros(3);
        assert!(gaussian_w2(&z, &i, &z, &i).unwrap() < 1e-7);
        let m = Vector::from_vec(vec![1.0, 2.0, 2.0]);
        assert!((gaussian_w2(&z, &i, &m, &i).unwrap() - 3.0).abs() < 1e-7);
        let a = SpdMatrix::from_diagonal(&[4.0; 3]).unwrap();
        let b = SpdMatrix::from_diagonal(&[0.25; 3]).unwrap();
        assert!((gaussian_w2(&z, &a, &z, &b).unwrap() - 3f64.sqrt() * 1.5).abs() < 1e-12);
    }

    #[test]
    fn w2_is_a_metric_on_random_triples() {
        let mut rng = RandomStream::new(45);
        for _ in 0..20 {
            let g: Vec<(Vector, SpdMatrix)> = (0..3)
                .map(|_| (Vector::from_fn(4, |_, _| rng.standard_normal()), random_spd(4, 0.2, &mut rng)))
                .collect();
            let w = |i: usize, j: usize| gaussian_w2(&g[i].0, &g[i].1, &g[j].0, &g[j].1).unwrap();
            assert!((w(0, 1) - w(1, 0)).abs() < 1e-10);
            assert!(w(0, 2) <= w(0, 1) + w(1, 2) + 1e-10);
        }
    }

    #[test]
    fn ks_examples() {
        let n = 99;
        let quantiles: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        let d = ks_statistic_1d(&quantiles, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(d <= 1.0 / (n + 1) as f64 + 1e-15);
        assert_eq!(ks_statistic_1d(&[0.0], normal_cdf).unwrap(), 0.5);
        assert!(ks_statistic_1d(&[], normal_cdf).is_err());

    }

    #[test]
    fn ks_exact_draws_respect_kolmogorov_quantile() {
        // 1.63/√n is the asymptotic 99% quantile, so about 1 in 100 exact
        // samples exceeds it. Over 200 samples, more than 8 exceedances has
        // probability below 0.2%.
        let mut exceed = 0;
        for seed in 0..200 {
            let mut rng = RandomStream::new(5000 + seed);
            let draws: Vec<f64> = (0..10_000).map(|_| 3.0 * rng.standard_normal()).collect();
            let d = ks_statistic_1d(&draws, |y| normal_cdf(y / 3.0)).unwrap();
            if d >= 1.63 / 100.0 {
                exceed += 1;
            }
        }
        assert!(exceed <= 8, "{exceed} exceedances");
    }

    #[test]
    fn recursion_single_block_is_plmc() {
        let mut rng = RandomStream::new(47);
        let precision = random_spd(5, 0.5, &mut rng);
        let a = random_spd(5, 1.0, &mut rng);
        let part = eigenblock_partition(a.eigen(), 5, &[1.0]).unwrap();
        let s = GaussianMomentRecursion::slmc(&precision, &part, 0.01);
        let p = GaussianMomentRecursion::plmc(&precision, &a, 0.01);
        let mean = Vector::from_element(5, 1.0);
        let cov = Matrix::identity(5, 5);
        let (ms, cs) = s.series(&mean, &cov, 20);
        let (mp, cp) = p.series(&mean, &cov, 20);
        assert!((&ms[20] - &mp[20]).amax() < 1e-12);
        assert!(relative_frobenius(&cs[20], &cp[20]) < 1e-10);
    }

    #[test]
    fn stationary_covariance_approaches_target() {
        let mut rng = RandomStream::new(48);
        let precision = random_spd(4, 0.5, &mut rng);
        let sigma = precision.inverse();
        let mut prev = f64::INFINITY;
        for h in [0.1, 0.01, 0.001] {
            let rec = GaussianMomentRecursion::plmc(&precision, &sigma, h);
            let c = rec.stationary_covariance().unwrap();
            // With A = Σ the fixed point is 2Σ/(2 − h).
            assert!(relative_frobenius(c.matrix(), &(sigma.matrix() * (2.0 / (2.0 - h)))) < 1e-9);
            let next = rec.step_covariance(c.matrix());
            assert!(relative_frobenius(&next, c.matrix()) < 1e-10);
            let err = relative_frobenius(c.matrix(), sigma.matrix());
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn slmc_recursion_mean_map_is_preconditioned_drift() {
        let mut rng = RandomStream::new(49);
        let precision = random_spd(6, 0.5, &mut rng);
        let a = random_spd(6, 1.0, &mut rng);
        let part = eigenblock_partition(a.eigen(), 2, &[0.2, 0.3, 0.5]).unwrap();
        let rec = GaussianMomentRecursion::slmc(&precision, &part, 0.003);
        let expected = Matrix::identity(6, 6) - a.matrix() * precision.matrix() * 0.003;
        assert!((&rec.mean_map - expected).amax() < 1e-12);
        assert!(rec.mean_contraction() < 1.0);
    }
}
