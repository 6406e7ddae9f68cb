//! Preconditioner schedules. Each query returns the matrix `A_k` together
//! with its eigenblock partition.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{
    block_count, eigenblock_partition, sym_eigen, uniform_probabilities, EigenblockPartition,
    Matrix, SpdMatrix, SymmetricMatrix, Vector, PHI_FLOOR,
};
use crate::targets::Potential;

/// Default bound `C` with `A_k ⪯ C·I`.
pub const DEFAULT_SPECTRAL_CAP: f64 = 1e6;
/// Regularizer added to the adaptive accumulator before the inverse root.
pub const ADAPTIVE_EPSILON: f64 = 1e-8;
pub const ADAPTIVE_DECAY: f64 = 0.99;
pub const ADAPTIVE_MIX: f64 = 0.01;
/// Relative floor on the eigenvalues of an averaged Hessian before inversion.
pub const HESSIAN_FLOOR: f64 = 1e-10;

/// How block probabilities are assigned.
#[derive(Clone, Debug, PartialEq)]
pub enum BlockProbabilities {
    Uniform,
    Explicit(Vec<f64>),
    /// `φ_i ∝ λ_max(D_i^{1/2} W_iᵀ H W_i D_i^{1/2})` for a reference Hessian `H`:
    /// blocks along which the potential is stiffer are visited more often.
    SmoothnessProportional(Matrix),
}

impl BlockProbabilities {
    fn resolve(&self, a: &SpdMatrix, rank: usize) -> Result<EigenblockPartition> {
        let n = block_count(a.dim(), rank);
        match self {
            Self::Uniform => eigenblock_partition(a.eigen(), rank, &uniform_probabilities(n)),
            Self::Explicit(phi) => eigenblock_partition(a.eigen(), rank, phi),
            Self::SmoothnessProportional(h) => {
                let base = eigenblock_partition(a.eigen(), rank, &uniform_probabilities(n))?;
                let raw: Vec<f64> = base
                    .blocks()
                    .iter()
                    .map(|b| {
                        let mut half = b.basis.clone();
                        for (j, mut col) in half.column_iter_mut().enumerate() {
                            col *= b.sqrt_eigenvalues()[j];
                        }
                        let m = half.transpose() * h * &half;
                        SymmetricMatrix::from_symmetrized(&m)
                            .and_then(|s| sym_eigen(&s))
                            .map(|e| e.eigenvalues[0].max(PHI_FLOOR))
                    })
                    .collect::<Result<_>>()?;
                base.with_probabilities(&normalize(&raw))
            }
        }
    }
}

/// Scales to unit sum, then moves the rounding residue onto the largest
/// entry so the sum is 1 to within one ulp.
pub fn normalize(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    let mut phi: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let residue = 1.0 - phi.iter().sum::<f64>();
    let argmax = phi
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    phi[argmax] += residue;
    phi
}

/// `A` with its eigenblock partition and a noise factor `L = Q D^{1/2}`
/// satisfying `L Lᵀ = A`.
#[derive(Clone, Debug)]
pub struct Preconditioner {
    matrix: SpdMatrix,
    partition: EigenblockPartition,
    noise_factor: Matrix,
}

impl Preconditioner {
    pub fn new(matrix: SpdMatrix, rank: usize, probabilities: &BlockProbabilities) -> Result<Self> {
        let partition = probabilities.resolve(&matrix, rank)?;
        let noise_factor = matrix.eigen_factor();
        Ok(Self {
            matrix,
            partition,
            noise_factor,
        })
    }

    pub fn identity(d: usize, rank: usize) -> Result<Self> {
        Self::new(SpdMatrix::identity(d), rank, &BlockProbabilities::Uniform)
    }

    pub fn matrix(&self) -> &SpdMatrix {
        &self.matrix
    }

    pub fn partition(&self) -> &EigenblockPartition {
        &self.partition
    }

    pub fn noise_factor(&self) -> &Matrix {
        &self.noise_factor
    }
}

/// Clips eigenvalues above `cap`.
pub fn cap_spectrum(a: SpdMatrix, cap: f64) -> Result<SpdMatrix> {
    if a.max_eigenvalue() <= cap {
        return Ok(a);
    }
    let eig = a.eigen();
    SpdMatrix::from_spectrum(&eig.eigenvalues.map(|l| l.min(cap)), &eig.eigenvectors)
}

/// `λ_max(A^{1/2} H A^{1/2})`, the smoothness of `V` relative to `A⁻¹` when
/// `H` bounds the Hessian.
pub fn relative_smoothness(a: &SpdMatrix, hessian: &Matrix) -> Result<f64> {
    let root = a.sqrt();
    let m = root.matrix() * hessian * root.matrix();
    Ok(sym_eigen(&SymmetricMatrix::from_symmetrized(&m)?)?.eigenvalues[0])
}

/// Tracks `‖A_k‖₂ / ‖A_{k−1}‖₂` as a drift diagnostic.
#[derive(Clone, Debug, Default)]
pub struct SpectralMonitor {
    last_norm: Option<f64>,
    max_ratio: f64,
    min_ratio: f64,
    updates: usize,
}

impl SpectralMonitor {
    pub fn record(&mut self, step: usize, norm: f64) {
        if let Some(last) = self.last_norm {
            let ratio = norm / last;
            if self.updates == 0 {
                self.max_ratio = ratio;
                self.min_ratio = ratio;
            } else {
                self.max_ratio = self.max_ratio.max(ratio);
                self.min_ratio = self.min_ratio.min(ratio);
            }
            self.updates += 1;
            log::trace!("step {step}: spectral norm ratio {ratio:.6}");
        }
        self.last_norm = Some(norm);
    }

    /// Extreme step-to-step ratios observed so far, `(min, max)`.
    pub fn ratio_range(&self) -> Option<(f64, f64)> {
        (self.updates > 0).then_some((self.min_ratio, self.max_ratio))
    }
}

/// A rule producing `A_k` at step `k`.
pub trait PreconditionerSchedule: Send {
    fn next(
        &mut self,
        step: usize,
        ensemble: Option<&[Vector]>,
        gradient: Option<&Vector>,
    ) -> Result<Arc<Preconditioner>>;

    fn uses_ensemble(&self) -> bool {
        false
    }

    fn uses_gradient(&self) -> bool {
        false
    }

    /// False for rules outside the convergence analysis, which assumes `A_k`
    /// depends on the particles only through their law.
    fn theory_covered(&self) -> bool {
        true
    }

    fn monitor(&self) -> &SpectralMonitor;
}

pub struct FixedSchedule {
    preconditioner: Arc<Preconditioner>,
    monitor: SpectralMonitor,
}

impl FixedSchedule {
    pub fn from_preconditioner(preconditioner: Arc<Preconditioner>) -> Self {
        Self {
            preconditioner,
            monitor: SpectralMonitor::default(),
        }
    }
}

pub fn fixed_schedule(
    a: SpdMatrix,
    rank: usize,
    probabilities: &BlockProbabilities,
) -> Result<FixedSchedule> {
    fixed_schedule_capped(a, rank, probabilities, DEFAULT_SPECTRAL_CAP)
}

pub fn fixed_schedule_capped(
    a: SpdMatrix,
    rank: usize,
    probabilities: &BlockProbabilities,
    cap: f64,
) -> Result<FixedSchedule> {
    let a = cap_spectrum(a, cap)?;
    Ok(FixedSchedule::from_preconditioner(Arc::new(Preconditioner::new(
        a,
        rank,
        probabilities,
    )?)))
}

impl PreconditionerSchedule for FixedSchedule {
    fn next(&mut self, step: usize, _: Option<&[Vector]>, _: Option<&Vector>) -> Result<Arc<Preconditioner>> {
        self.monitor
            .record(step, self.preconditioner.matrix().spectral_norm());
        Ok(self.preconditioner.clone())
    }

    fn monitor(&self) -> &SpectralMonitor {
        &self.monitor
    }
}

/// `A_k = [ (1/ℓ) Σ_j ∇²V(θ_j) ]⁻¹` over the current ensemble.
pub struct AvgHessianSchedule {
    potential: Arc<dyn Potential>,
    rank: usize,
    probabilities: BlockProbabilities,
    cap: f64,
    monitor: SpectralMonitor,
}

pub fn avg_hessian_schedule(
    potential: Arc<dyn Potential>,
    rank: usize,
    probabilities: BlockProbabilities,
) -> AvgHessianSchedule {
    AvgHessianSchedule {
        potential,
        rank,
        probabilities,
        cap: DEFAULT_SPECTRAL_CAP,
        monitor: SpectralMonitor::default(),
    }
}

impl AvgHessianSchedule {
    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = cap;
        self
    }

    pub fn matrix_for(&self, ensemble: &[Vector]) -> Result<SpdMatrix> {
        if ensemble.is_empty() {
            return Err(Error::EnsembleMissing);
        }
        let d = self.potential.dim();
        let mut sum = Matrix::zeros(d, d);
        for theta in ensemble {
            sum += self
                .potential
                .hessian(theta)
                .ok_or(Error::HessianUnavailable)?;
        }
        sum /= ensemble.len() as f64;
        let eig = sym_eigen(&SymmetricMatrix::from_symmetrized(&sum)?)?;
        let largest = eig.eigenvalues[0];
        if !(largest > 0.0) {
            return Err(Error::NotPositiveDefinite {
                eigenvalue: eig.eigenvalues[d - 1],
                largest,
            });
        }
        let floor = HESSIAN_FLOOR * largest;
        let inv = eig.eigenvalues.map(|l| (1.0 / l.max(floor)).min(self.cap));
        SpdMatrix::from_spectrum(&inv, &eig.eigenvectors)
    }
}

impl PreconditionerSchedule for AvgHessianSchedule {
    fn next(
        &mut self,
        step: usize,
        ensemble: Option<&[Vector]>,
        _: Option<&Vector>,
    ) -> Result<Arc<Preconditioner>> {
        let a = self.matrix_for(ensemble.ok_or(Error::EnsembleMissing)?)?;
        self.monitor.record(step, a.spectral_norm());
        Ok(Arc::new(Preconditioner::new(a, self.rank, &self.probabilities)?))
    }

    fn uses_ensemble(&self) -> bool {
        true
    }

    fn monitor(&self) -> &SpectralMonitor {
        &self.monitor
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdaptiveKind {
    /// Diagonal accumulator of squared gradients.
    RmsProp,
    /// Full outer-product accumulator.
    Adagrad,
}

/// Exponentially weighted gradient second moments, starting from zero.
#[derive(Clone, Debug)]
pub struct AdaptiveState {
    kind: AdaptiveKind,
    accumulator: Matrix,
}

impl AdaptiveState {
    pub fn new(kind: AdaptiveKind, d: usize) -> Self {
        Self {
            kind,
            accumulator: Matrix::zeros(d, d),
        }
    }

    pub fn accumulator(&self) -> &Matrix {
        &self.accumulator
    }

    pub fn update(&mut self, g: &Vector) {
        let d = g.len();
        self.accumulator *= ADAPTIVE_DECAY;
        match self.kind {
            AdaptiveKind::RmsProp => {
                for i in 0..d {
                    self.accumulator[(i, i)] += ADAPTIVE_MIX * (g[i] * g[i]);
                }
            }
            AdaptiveKind::Adagrad => {
                for j in 0..d {
                    for i in 0..d {
                        self.accumulator[(i, j)] += ADAPTIVE_MIX * (g[i] * g[j]);
                    }
                }
            }
        }
    }

    /// `(S + εI)^{−1/2}` with eigenvalues clipped at `cap`.
    pub fn emit(&self, cap: f64) -> Result<SpdMatrix> {
        let d = self.accumulator.nrows();
        let s = SymmetricMatrix::new(self.accumulator.clone())?;
        let root = |l: f64| (l.max(0.0) + ADAPTIVE_EPSILON).powf(-0.5).min(cap);
        match self.kind {
            AdaptiveKind::RmsProp => {
                let diag: Vec<f64> = (0..d).map(|i| root(self.accumulator[(i, i)])).collect();
                SpdMatrix::from_diagonal(&diag)
            }
            AdaptiveKind::Adagrad => {
                let eig = sym_eigen(&s)?;
                SpdMatrix::from_spectrum(&eig.eigenvalues.map(root), &eig.eigenvectors)
            }
        }
    }
}

/// RMSProp or Adagrad preconditioning driven by the chain's own gradients.
/// State is per chain.
pub struct AdaptiveSchedule {
    state: AdaptiveState,
    rank: usize,
    probabilities: BlockProbabilities,
    cap: f64,
    monitor: SpectralMonitor,
}

pub fn rmsprop_schedule(d: usize, rank: usize, probabilities: BlockProbabilities) -> AdaptiveSchedule {
    AdaptiveSchedule::new(AdaptiveKind::RmsProp, d, rank, probabilities)
}

pub fn adagrad_schedule(d: usize, rank: usize, probabilities: BlockProbabilities) -> AdaptiveSchedule {
    AdaptiveSchedule::new(AdaptiveKind::Adagrad, d, rank, probabilities)
}

impl AdaptiveSchedule {
    pub fn new(kind: AdaptiveKind, d: usize, rank: usize, probabilities: BlockProbabilities) -> Self {
        Self {
            state: AdaptiveState::new(kind, d),
            rank,
            probabilities,
            cap: DEFAULT_SPECTRAL_CAP,
            monitor: SpectralMonitor::default(),
        }
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = cap;
        self
    }

    pub fn state(&self) -> &AdaptiveState {
        &self.state
    }
}

impl PreconditionerSchedule for AdaptiveSchedule {
    fn next(
        &mut self,
        step: usize,
        _: Option<&[Vector]>,
        gradient: Option<&Vector>,
    ) -> Result<Arc<Preconditioner>> {
        self.state.update(gradient.ok_or(Error::GradientMissing)?);
        let a = self.state.emit(self.cap)?;
        self.monitor.record(step, a.spectral_norm());
        Ok(Arc::new(Preconditioner::new(a, self.rank, &self.probabilities)?))
    }

    fn uses_gradient(&self) -> bool {
        true
    }

    fn theory_covered(&self) -> bool {
        false
    }

    fn monitor(&self) -> &SpectralMonitor {
        &self.monitor
    }
}

/// A recipe for building schedules, one per chain where the schedule is
/// stateful.
#[derive(Clone)]
pub enum ScheduleSpec {
    Fixed(Arc<Preconditioner>),
    AvgHessian {
        potential: Arc<dyn Potential>,
        rank: usize,
        probabilities: BlockProbabilities,
        cap: f64,
    },
    Adaptive {
        kind: AdaptiveKind,
        dim: usize,
        rank: usize,
        probabilities: BlockProbabilities,
        cap: f64,
    },
}

impl ScheduleSpec {
    pub fn fixed(a: SpdMatrix, rank: usize, probabilities: &BlockProbabilities, cap: f64) -> Result<Self> {
        Ok(Self::Fixed(Arc::new(Preconditioner::new(
            cap_spectrum(a, cap)?,
            rank,
            probabilities,
        )?)))
    }

    pub fn build(&self) -> Box<dyn PreconditionerSchedule> {
        match self {
            Self::Fixed(p) => Box::new(FixedSchedule::from_preconditioner(p.clone())),
            Self::AvgHessian {
                potential,
                rank,
                probabilities,
                cap,
            } => Box::new(
                avg_hessian_schedule(potential.clone(), *rank, probabilities.clone()).with_cap(*cap),
            ),
            Self::Adaptive {
                kind,
                dim,
                rank,
                probabilities,
                cap,
            } => Box::new(
                AdaptiveSchedule::new(*kind, *dim, *rank, probabilities.clone()).with_cap(*cap),
            ),
        }
    }

    pub fn uses_ensemble(&self) -> bool {
        matches!(self, Self::AvgHessian { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_spd, relative_frobenius};
    use crate::rng::RandomStream;
    use crate::targets::{gaussian_target, generate_logistic_data, logistic_posterior};
    use proptest::prelude::*;

    #[test]
    fn fixed_identity_coordinate_blocks() {
        let mut s = fixed_schedule(SpdMatrix::identity(20), 10, &BlockProbabilities::Uniform).unwrap();
        let p0 = s.next(0, None, None).unwrap();
        let p5 = s.next(5, None, None).unwrap();
        assert!(Arc::ptr_eq(&p0, &p5));
        assert_eq!(p0.partition().len(), 2);
        assert_eq!(
            p0.partition().blocks()[0].basis,
            Matrix::identity(20, 20).columns(0, 10).into_owned()
        );
    }

    #[test]
    fn fixed_diagonal_preconditioner() {
        let mut diag = vec![1.0; 10];
        diag.extend(vec![10.0; 10]);
        let s = fixed_schedule(SpdMatrix::from_diagonal(&diag).unwrap(), 10, &BlockProbabilities::Uniform)
            .unwrap();
        let p = s.preconditioner.partition();
        assert_eq!(p.blocks()[0].eigenvalues.as_slice(), &[10.0; 10]);
        assert_eq!(p.blocks()[0].basis[(10, 0)], 1.0);
    }

    #[test]
    fn covariance_blocks_are_eigenspaces() {
        let mut rng = RandomStream::new(30);
        let sigma = random_spd(8, 0.5, &mut rng);
        let s = fixed_schedule(sigma.clone(), 4, &BlockProbabilities::Uniform).unwrap();
        for b in s.preconditioner.partition().blocks() {
            let lhs = sigma.matrix() * &b.basis;
            let mut rhs = b.basis.clone();
            for (j, mut col) in rhs.column_iter_mut().enumerate() {
                col *= b.eigenvalues[j];
            }
            assert!((lhs - rhs).amax() < 1e-9);
        }
    }

    #[test]
    fn avg_hessian_on_gaussian_is_covariance() {
        let mut rng = RandomStream::new(31);
        let precision = random_spd(5, 0.5, &mut rng);
        let cov = precision.inverse();
        let pot: Arc<dyn Potential> = Arc::new(gaussian_target(precision));
        let mut s = avg_hessian_schedule(pot, 1, BlockProbabilities::Uniform);
        let ensemble: Vec<Vector> = (0..3).map(|_| Vector::from_fn(5, |_, _| rng.standard_normal())).collect();
        let p = s.next(0, Some(&ensemble), None).unwrap();
        assert!(relative_frobenius(p.matrix().matrix(), cov.matrix()) < 1e-10);
        assert!(matches!(s.next(1, None, None), Err(Error::EnsembleMissing)));
    }

    #[test]
    fn avg_hessian_logistic_at_origin() {
        let data = generate_logistic_data(100, &mut RandomStream::new(32)).unwrap();
        let x = data.covariates.clone();
        let pot: Arc<dyn Potential> = Arc::new(logistic_posterior(data));
        let s = avg_hessian_schedule(pot, 1, BlockProbabilities::Uniform);
        let a = s.matrix_for(&[Vector::zeros(2)]).unwrap();
        let h = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 0.01])) + x.transpose() * &x * 0.25;
        let expected = h.try_inverse().unwrap();
        assert!(relative_frobenius(a.matrix(), &expected) < 1e-10);
    }

    #[test]
    fn avg_hessian_permutation_invariant() {
        let mut rng = RandomStream::new(33);
        let data = generate_logistic_data(50, &mut rng).unwrap();
        let pot: Arc<dyn Potential> = Arc::new(logistic_posterior(data));
        let s = avg_hessian_schedule(pot, 1, BlockProbabilities::Uniform);
        let mut ens: Vec<Vector> = (0..10).map(|_| Vector::from_fn(2, |_, _| rng.standard_normal())).collect();
        let a = s.matrix_for(&ens).unwrap();
        ens.reverse();
        ens.swap(0, 4);
        let b = s.matrix_for(&ens).unwrap();
        assert!((a.matrix() - b.matrix()).amax() <= 1e-12 * a.matrix().amax());
    }

    #[test]
    fn hessian_unavailable_is_reported() {
        struct Flat;
        impl Potential for Flat {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, _: &Vector) -> f64 {
                0.0
            }
            fn gradient_unmetered(&self, _: &Vector) -> Vector {
                Vector::zeros(1)
            }
        }
        let mut s = avg_hessian_schedule(Arc::new(Flat), 1, BlockProbabilities::Uniform);
        assert!(matches!(
            s.next(0, Some(&[Vector::zeros(1)]), None),
            Err(Error::HessianUnavailable)
        ));
    }

    #[test]
    fn zero_gradients_give_regularized_identity() {
        for kind in [AdaptiveKind::RmsProp, AdaptiveKind::Adagrad] {
            let mut s = AdaptiveSchedule::new(kind, 3, 1, BlockProbabilities::Uniform);
            for k in 0..5 {
                let p = s.next(k, None, Some(&Vector::zeros(3))).unwrap();
                let expected = Matrix::identity(3, 3) * ADAPTIVE_EPSILON.powf(-0.5);
                assert_eq!(p.matrix().matrix(), &expected);
            }
            assert!(matches!(s.next(9, None, None), Err(Error::GradientMissing)));
        }
    }

    #[test]
    fn rmsprop_single_step() {
        let mut s = rmsprop_schedule(2, 1, BlockProbabilities::Uniform);
        let p = s.next(0, None, Some(&Vector::from_vec(vec![1.0, 0.0]))).unwrap();
        assert_eq!(s.state().accumulator()[(0, 0)], 0.01);
        let a = p.matrix().matrix();
        assert_eq!(a[(0, 0)], (0.01 + ADAPTIVE_EPSILON).powf(-0.5));
        assert_eq!(a[(1, 1)], ADAPTIVE_EPSILON.powf(-0.5));
        assert_eq!(a[(0, 1)], 0.0);
        assert!(!s.theory_covered());
    }

    #[test]
    fn adagrad_with_axis_gradients_stays_diagonal() {
        let mut s = adagrad_schedule(2, 1, BlockProbabilities::Uniform);
        let e1 = Vector::from_vec(vec![1.0, 0.0]);
        let e2 = Vector::from_vec(vec![0.0, 1.0]);
        for k in 0..10 {
            let g = if k % 3 == 0 { &e2 } else { &e1 };
            let a = s.next(k, None, Some(g)).unwrap();
            assert_eq!(a.matrix().matrix()[(0, 1)], 0.0);
        }
    }

    #[test]
    fn spectral_cap_clips() {
        let a = SpdMatrix::from_diagonal(&[1e8, 1.0]).unwrap();
        let capped = cap_spectrum(a, 1e6).unwrap();
        assert_eq!(capped.max_eigenvalue(), 1e6);
        let mut s = rmsprop_schedule(2, 1, BlockProbabilities::Uniform).with_cap(100.0);
        let p = s.next(0, None, Some(&Vector::zeros(2))).unwrap();
        assert_eq!(p.matrix().max_eigenvalue(), 100.0);
    }

    #[test]
    fn monitor_tracks_ratios() {
        let mut s = rmsprop_schedule(1, 1, BlockProbabilities::Uniform);
        s.next(0, None, Some(&Vector::from_element(1, 1.0))).unwrap();
        s.next(1, None, Some(&Vector::from_element(1, 1.0))).unwrap();
        let (lo, hi) = s.monitor().ratio_range().unwrap();
        assert!(lo < 1.0 && hi < 1.0);
    }

    #[test]
    fn smoothness_probabilities_favor_stiff_blocks() {
        let h = Matrix::from_diagonal(&Vector::from_vec(vec![9.0, 1.0]));
        let p = Preconditioner::new(
            SpdMatrix::identity(2),
            1,
            &BlockProbabilities::SmoothnessProportional(h),
        )
        .unwrap();
        assert!((p.partition().probabilities()[0] - 0.9).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rmsprop_matches_adagrad_on_axis_streams(choices in proptest::collection::vec((0usize..3, -3.0f64..3.0), 1..30)) {
            let mut rms = rmsprop_schedule(3, 1, BlockProbabilities::Uniform);
            let mut ada = adagrad_schedule(3, 1, BlockProbabilities::Uniform);
            for (k, (axis, mag)) in choices.iter().enumerate() {
                let mut g = Vector::zeros(3);
                g[*axis] = *mag;
                let a = rms.next(k, None, Some(&g)).unwrap();
                let b = ada.next(k, None, Some(&g)).unwrap();
                prop_assert_eq!(a.matrix().matrix(), b.matrix().matrix());
            }
        }

        #[test]
        fn adaptive_emissions_are_spd(grads in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 2), 1..20)) {
            let mut ada = adagrad_schedule(2, 1, BlockProbabilities::Uniform);
            for (k, g) in grads.iter().enumerate() {
                let p = ada.next(k, None, Some(&Vector::from_column_slice(g))).unwrap();
                prop_assert!(p.matrix().min_eigenvalue() > 0.0);
                prop_assert!(relative_frobenius(&p.partition().reconstruct(), p.matrix().matrix()) < 1e-10);
            }
        }
    }
}
