//! Target distributions `π ∝ exp(−V)` and directional-derivative metering.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{
    block_diagonal, orthogonality_defect, random_orthogonal, Matrix, SpdMatrix, SymmetricMatrix,
    Vector,
};
use crate::rng::RandomStream;

/// Counts directional-derivative evaluations. A full gradient in `d`
/// dimensions costs `d`; a projection onto `r` directions costs `r`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OracleCounter {
    calls: u64,
}

impl OracleCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, n: usize) {
        self.calls += n as u64;
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }
}

/// A potential `V`. Implementors provide the unmetered gradient; callers that
/// account for cost go through [`Potential::gradient`] and
/// [`Potential::directional_gradient`].
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    fn gradient_unmetered(&self, x: &Vector) -> Vector;

    fn hessian(&self, _x: &Vector) -> Option<Matrix> {
        None
    }

    fn gradient(&self, x: &Vector, counter: &mut OracleCounter) -> Vector {
        counter.charge(self.dim());
        self.gradient_unmetered(x)
    }

    /// `Uᵀ ∇V(x)` for a d×r matrix `U`; charges `r` calls.
    fn directional_gradient(&self, x: &Vector, u: &Matrix, counter: &mut OracleCounter) -> Vector {
        counter.charge(u.ncols());
        u.tr_mul(&self.gradient_unmetered(x))
    }

    /// `∂V/∂x_i`; charges one call.
    fn partial(&self, x: &Vector, i: usize, counter: &mut OracleCounter) -> f64 {
        counter.charge(1);
        self.gradient_unmetered(x)[i]
    }

    /// Score `∇ log π = −∇V`, unmetered.
    fn score(&self, x: &Vector) -> Vector {
        -self.gradient_unmetered(x)
    }
}

/// Centered Gaussian with the given precision: `V(x) = ½ xᵀ P x`.
#[derive(Clone, Debug)]
pub struct GaussianTarget {
    precision: SpdMatrix,
}

impl GaussianTarget {
    pub fn new(precision: SpdMatrix) -> Self {
        Self { precision }
    }

    pub fn precision(&self) -> &SpdMatrix {
        &self.precision
    }

    pub fn covariance(&self) -> SpdMatrix {
        self.precision.inverse()
    }
}

pub fn gaussian_target(precision: SpdMatrix) -> GaussianTarget {
    GaussianTarget::new(precision)
}

impl Potential for GaussianTarget {
    fn dim(&self) -> usize {
        self.precision.dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(self.precision.matrix() * x))
    }

    fn gradient_unmetered(&self, x: &Vector) -> Vector {
        self.precision.matrix() * x
    }

    fn hessian(&self, _x: &Vector) -> Option<Matrix> {
        Some(self.precision.matrix().clone())
    }

    fn partial(&self, x: &Vector, i: usize, counter: &mut OracleCounter) -> f64 {
        counter.charge(1);
        self.precision.matrix().row(i).transpose().dot(x)
    }
}

/// The 20-dimensional ill-conditioned precision
/// `blkdiag(U · blkdiag((G + 10 I₅)(G + 10 I₅)ᵀ, I₅) · Uᵀ, I₁₀)`.
///
/// `G` (5×5 standard normal, row-major) is drawn first, then the Haar
/// orthogonal `U` (10×10).
pub fn ill_conditioned_precision(rng: &mut RandomStream) -> SpdMatrix {
    let (precision, _) = ill_conditioned_precision_with_rotation(rng);
    precision
}

/// As [`ill_conditioned_precision`], also returning `blkdiag(U, I₁₀)`.
pub fn ill_conditioned_precision_with_rotation(rng: &mut RandomStream) -> (SpdMatrix, Matrix) {
    let g = Matrix::from_row_iterator(5, 5, (0..25).map(|_| rng.standard_normal()));
    let u = random_orthogonal(10, rng);
    let shifted = g + Matrix::identity(5, 5) * 10.0;
    let gram = &shifted * shifted.transpose();
    let inner = block_diagonal(&[&gram, &Matrix::identity(5, 5)]);
    let rotated = &u * inner * u.transpose();
    let upper = SymmetricMatrix::from_symmetrized(&rotated)
        .expect("finite")
        .into_matrix();
    let full = block_diagonal(&[&upper, &Matrix::identity(10, 10)]);
    let precision = SpdMatrix::from_matrix(full).expect("Gram plus identity blocks are SPD");
    let rotation = block_diagonal(&[&u, &Matrix::identity(10, 10)]);
    (precision, rotation)
}

/// `1 / (1 + e^{−z})`, evaluated without overflow on either side.
pub fn ilogit(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

const LOGIT_ASYMPTOTE: f64 = 30.0;

/// `log(1 + e^z)`.
pub fn softplus(z: f64) -> f64 {
    if z > LOGIT_ASYMPTOTE {
        z + (-z).exp()
    } else if z < -LOGIT_ASYMPTOTE {
        z.exp()
    } else {
        z.exp().ln_1p()
    }
}

/// `σ(z)(1 − σ(z))`.
fn logistic_curvature(z: f64) -> f64 {
    if z.abs() > LOGIT_ASYMPTOTE {
        (-z.abs()).exp()
    } else {
        let s = ilogit(z);
        s * (1.0 - s)
    }
}

#[derive(Clone, Debug)]
pub struct LogisticDataset {
    /// n×p, one observation per row.
    pub covariates: Matrix,
    pub labels: Vec<u8>,
    pub prior_covariance: SpdMatrix,
}

impl LogisticDataset {
    pub fn new(covariates: Matrix, labels: Vec<u8>, prior_covariance: SpdMatrix) -> Result<Self> {
        if covariates.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: covariates.nrows(),
                got: labels.len(),
            });
        }
        if covariates.ncols() != prior_covariance.dim() {
            return Err(Error::DimensionMismatch {
                expected: prior_covariance.dim(),
                got: covariates.ncols(),
            });
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::InvalidParameter("labels must be 0 or 1".into()));
        }
        if covariates.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            covariates,
            labels,
            prior_covariance,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// CSV with header `x1,x2,...,y`. Floats are written in shortest
    /// round-trip form.
    pub fn to_csv(&self) -> String {
        let p = self.covariates.ncols();
        let mut out = String::new();
        let header: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
        let _ = writeln!(out, "{},y", header.join(","));
        for i in 0..self.len() {
            for j in 0..p {
                let _ = write!(out, "{},", self.covariates[(i, j)]);
            }
            let _ = writeln!(out, "{}", self.labels[i]);
        }
        out
    }

    pub fn from_csv(text: &str, prior_covariance: SpdMatrix) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidParameter("empty CSV".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let p = cols.len().saturating_sub(1);
        let expected: Vec<String> = (1..=p)
            .map(|j| format!("x{j}"))
            .chain(std::iter::once("y".to_string()))
            .collect();
        if p == 0 || cols != expected {
            return Err(Error::InvalidParameter(format!(
                "unexpected CSV header `{header}`"
            )));
        }
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != p + 1 {
                return Err(Error::InvalidParameter(format!(
                    "row {} has {} fields, expected {}",
                    lineno + 2,
                    fields.len(),
                    p + 1
                )));
            }
            for f in &fields[..p] {
                values.push(f.parse::<f64>().map_err(|e| {
                    Error::InvalidParameter(format!("row {}: {e}", lineno + 2))
                })?);
            }
            labels.push(match fields[p] {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "row {}: label `{other}` is not 0 or 1",
                        lineno + 2
                    )))
                }
            });
        }
        let covariates = Matrix::from_row_slice(labels.len(), p, &values);
        Self::new(covariates, labels, prior_covariance)
    }
}

/// `n` observations with `X ~ N(0, diag(10, 0.1))`,
/// `y ~ Bernoulli(ilogit((1, 1)·X))` and prior covariance `diag(1, 100)`.
/// Each observation draws its two covariates, then its label.
pub fn generate_logistic_data(n: usize, rng: &mut RandomStream) -> Result<LogisticDataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("dataset size must be ≥ 1".into()));
    }
    let scale = [10f64.sqrt(), 0.1f64.sqrt()];
    let mut values = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x1 = scale[0] * rng.standard_normal();
        let x2 = scale[1] * rng.standard_normal();
        values.push(x1);
        values.push(x2);
        labels.push(u8::from(rng.bernoulli(ilogit(x1 + x2))));
    }
    LogisticDataset::new(
        Matrix::from_row_slice(n, 2, &values),
        labels,
        SpdMatrix::from_diagonal(&[1.0, 100.0])?,
    )
}

/// Posterior of Bayesian logistic regression with a centered Gaussian prior.
#[derive(Clone, Debug)]
pub struct LogisticPosterior {
    data: LogisticDataset,
    prior_precision: SpdMatrix,
}

pub fn logistic_posterior(data: LogisticDataset) -> LogisticPosterior {
    let prior_precision = data.prior_covariance.inverse();
    LogisticPosterior {
        data,
        prior_precision,
    }
}

impl LogisticPosterior {
    pub fn data(&self) -> &LogisticDataset {
        &self.data
    }

    fn logits(&self, theta: &Vector) -> Vector {
        &self.data.covariates * theta
    }
}

impl Potential for LogisticPosterior {
    fn dim(&self) -> usize {
        self.prior_precision.dim()
    }

    fn value(&self, theta: &Vector) -> f64 {
        let prior = 0.5 * theta.dot(&(self.prior_precision.matrix() * theta));
        let z = self.logits(theta);
        let lik: f64 = z
            .iter()
            .zip(&self.data.labels)
            .map(|(&zi, &yi)| f64::from(yi) * zi - softplus(zi))
            .sum();
        prior - lik
    }

    fn gradient_unmetered(&self, theta: &Vector) -> Vector {
        let z = self.logits(theta);
        let resid = Vector::from_iterator(
            z.len(),
            z.iter()
                .zip(&self.data.labels)
                .map(|(&zi, &yi)| f64::from(yi) - ilogit(zi)),
        );
        self.prior_precision.matrix() * theta - self.data.covariates.tr_mul(&resid)
    }

    fn hessian(&self, theta: &Vector) -> Option<Matrix> {
        let z = self.logits(theta);
        let mut h = self.prior_precision.matrix().clone();
        let x = &self.data.covariates;
        for (i, &zi) in z.iter().enumerate() {
            let w = logistic_curvature(zi);
            let row = x.row(i);
            h += row.transpose() * row * w;
        }
        Some(h)
    }
}

/// Neal's funnel in two dimensions, coordinates `(x, y)`:
/// `y ~ N(0, σ²)`, `x | y ~ N(0, eʸ)`.
#[derive(Clone, Copy, Debug)]
pub struct FunnelTarget {
    sigma: f64,
}

pub const DEFAULT_FUNNEL_SIGMA: f64 = 3.0;

impl FunnelTarget {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "funnel scale must be positive, got {sigma}"
            )));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// One exact draw `(x, y)`.
    pub fn sample_exact(&self, rng: &mut RandomStream) -> Vector {
        let y = self.sigma * rng.standard_normal();
        let x = (0.5 * y).exp() * rng.standard_normal();
        Vector::from_vec(vec![x, y])
    }

    /// CDF of the `y` marginal.
    pub fn y_marginal_cdf(&self, y: f64) -> f64 {
        normal_cdf(y / self.sigma)
    }
}

pub fn funnel_target(sigma: f64) -> Result<FunnelTarget> {
    FunnelTarget::new(sigma)
}

impl Potential for FunnelTarget {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, p: &Vector) -> f64 {
        let (x, y) = (p[0], p[1]);
        y * y / (2.0 * self.sigma * self.sigma) + 0.5 * x * x * (-y).exp() + 0.5 * y
    }

    fn gradient_unmetered(&self, p: &Vector) -> Vector {
        let (x, y) = (p[0], p[1]);
        let e = (-y).exp();
        Vector::from_vec(vec![
            x * e,
            y / (self.sigma * self.sigma) - 0.5 * x * x * e + 0.5,
        ])
    }

    fn hessian(&self, p: &Vector) -> Option<Matrix> {
        let (x, y) = (p[0], p[1]);
        let e = (-y).exp();
        let off = -x * e;
        Some(Matrix::from_row_slice(
            2,
            2,
            &[e, off, off, 1.0 / (self.sigma * self.sigma) + 0.5 * x * x * e],
        ))
    }
}

/// The fixed planar rotation `[[√3/2, 1/2], [−1/2, √3/2]]` applied to the
/// funnel.
pub fn funnel_rotation() -> Matrix {
    let c = 3f64.sqrt() / 2.0;
    Matrix::from_row_slice(2, 2, &[c, 0.5, -0.5, c])
}

/// `V_rot(x) = V(W x)` for an orthogonal `W`.
#[derive(Clone)]
pub struct RotatedTarget {
    inner: Arc<dyn Potential>,
    rotation: Matrix,
}

pub fn rotate_target(inner: Arc<dyn Potential>, rotation: Matrix) -> Result<RotatedTarget> {
    let d = inner.dim();
    if rotation.nrows() != d || rotation.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rotation.nrows(),
        });
    }
    let deviation = orthogonality_defect(&rotation);
    if deviation > 1e-10 {
        return Err(Error::NotOrthogonal { deviation });
    }
    Ok(RotatedTarget { inner, rotation })
}

impl RotatedTarget {
    pub fn rotation(&self) -> &Matrix {
        &self.rotation
    }

    /// Maps a point of the rotated target to the inner target's coordinates.
    pub fn to_inner(&self, x: &Vector) -> Vector {
        &self.rotation * x
    }
}

impl Potential for RotatedTarget {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        self.inner.value(&self.to_inner(x))
    }

    fn gradient_unmetered(&self, x: &Vector) -> Vector {
        self.rotation.tr_mul(&self.inner.gradient_unmetered(&self.to_inner(x)))
    }

    fn hessian(&self, x: &Vector) -> Option<Matrix> {
        let h = self.inner.hessian(&self.to_inner(x))?;
        Some(self.rotation.transpose() * h * &self.rotation)
    }
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_semi_orthogonal, random_spd};

    fn fd_gradient(pot: &dyn Potential, x: &Vector) -> Vector {
        let d = x.len();
        Vector::from_iterator(
            d,
            (0..d).map(|i| {
                let step = 1e-6 * x[i].abs().max(1.0);
                let mut hi = x.clone();
                let mut lo = x.clone();
                hi[i] += step;
                lo[i] -= step;
                (pot.value(&hi) - pot.value(&lo)) / (2.0 * step)
            }),
        )
    }

    fn fd_hessian(pot: &dyn Potential, x: &Vector) -> Matrix {
        let d = x.len();
        let mut h = Matrix::zeros(d, d);
        for i in 0..d {
            let step = 1e-6 * x[i].abs().max(1.0);
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi[i] += step;
            lo[i] -= step;
            let col = (pot.gradient_unmetered(&hi) - pot.gradient_unmetered(&lo)) / (2.0 * step);
            h.set_column(i, &col);
        }
        h
    }

    fn check_fd(pot: &dyn Potential, points: &[Vector]) {
        for x in points {
            let g = pot.gradient_unmetered(x);
            let tol = 1e-5f64.max(1e-4 * g.norm());
            let err = (fd_gradient(pot, x) - &g).amax();
            assert!(err < tol, "gradient mismatch {err} at {x:?}");
        }
    }

    fn random_points(d: usize, n: usize, scale: f64, rng: &mut RandomStream) -> Vec<Vector> {
        (0..n)
            .map(|_| Vector::from_fn(d, |_, _| scale * rng.standard_normal()))
            .collect()
    }

    #[test]
    fn gaussian_examples() {
        let t = gaussian_target(SpdMatrix::identity(2));
        let x = Vector::from_vec(vec![1.0, 2.0]);
        assert_eq!(t.gradient_unmetered(&x).as_slice(), &[1.0, 2.0]);
        assert_eq!(t.value(&x), 2.5);
        let t = gaussian_target(SpdMatrix::from_diagonal(&[4.0, 1.0]).unwrap());
        let x = Vector::from_vec(vec![1.0, 1.0]);
        assert_eq!(t.gradient_unmetered(&x).as_slice(), &[4.0, 1.0]);
    }

    #[test]
    fn gaussian_finite_differences() {
        let mut rng = RandomStream::new(10);
        let t = gaussian_target(random_spd(6, 0.5, &mut rng));
        check_fd(&t, &random_points(6, 20, 1.0, &mut rng));
    }

    #[test]
    fn ill_conditioned_structure() {
        let mut rng = RandomStream::new(11);
        let p = ill_conditioned_precision(&mut rng);
        assert_eq!(p.dim(), 20);
        assert_eq!(
            p.matrix().view((10, 10), (10, 10)).into_owned(),
            Matrix::identity(10, 10)
        );
        assert_eq!(p.matrix().view((0, 10), (10, 10)).amax(), 0.0);
        assert!(p.min_eigenvalue() > 0.0);
        let upper = SymmetricMatrix::new(p.matrix().view((0, 0), (10, 10)).into_owned()).unwrap();
        let eig = crate::linalg::sym_eigen(&upper).unwrap();
        let ones = eig.eigenvalues.iter().filter(|l| (*l - 1.0).abs() < 1e-9).count();
        assert_eq!(ones, 5);
        assert!(eig.eigenvalues[0] > 10.0);
    }

    #[test]
    fn logistic_single_datum() {
        let data = LogisticDataset::new(
            Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
            vec![1],
            SpdMatrix::identity(2),
        )
        .unwrap();
        let pot = logistic_posterior(data);
        let g = pot.gradient_unmetered(&Vector::zeros(2));
        assert_eq!(g.as_slice(), &[-0.5, 0.0]);
    }

    #[test]
    fn logistic_without_data_is_prior() {
        let data =
            LogisticDataset::new(Matrix::zeros(0, 2), vec![], SpdMatrix::from_diagonal(&[1.0, 100.0]).unwrap())
                .unwrap();
        let pot = logistic_posterior(data);
        let prior = gaussian_target(SpdMatrix::from_diagonal(&[1.0, 0.01]).unwrap());
        let mut rng = RandomStream::new(12);
        for x in random_points(2, 10, 2.0, &mut rng) {
            assert!((pot.value(&x) - prior.value(&x)).abs() < 1e-14);
            assert!((pot.gradient_unmetered(&x) - prior.gradient_unmetered(&x)).amax() < 1e-14);
        }
    }

    #[test]
    fn logistic_finite_differences() {
        let mut rng = RandomStream::new(13);
        let data = generate_logistic_data(100, &mut rng).unwrap();
        let pot = logistic_posterior(data);
        let points = random_points(2, 20, 1.5, &mut rng);
        check_fd(&pot, &points);
        for x in &points {
            let h = pot.hessian(x).unwrap();
            let err = (fd_hessian(&pot, x) - &h).amax();
            assert!(err < 1e-4 * h.amax().max(1.0), "hessian mismatch {err}");
        }
    }

    #[test]
    fn logistic_extreme_logits_stay_finite() {
        let data = LogisticDataset::new(
            Matrix::from_row_slice(2, 2, &[500.0, 0.0, -800.0, 0.0]),
            vec![0, 1],
            SpdMatrix::identity(2),
        )
        .unwrap();
        let pot = logistic_posterior(data);
        let x = Vector::from_vec(vec![3.0, 0.0]);
        assert!(pot.value(&x).is_finite());
        assert!(pot.gradient_unmetered(&x).iter().all(|v| v.is_finite()));
        assert!(pot.hessian(&x).unwrap().iter().all(|v| v.is_finite()));
        // Both observations are misclassified by ~1500 and ~2400 nats.
        assert!((pot.value(&x) - (4.5 + 1500.0 + 2400.0)).abs() < 1e-9);
    }

    #[test]
    fn softplus_and_ilogit_match_direct_formulas() {
        for z in [-40.0, -30.5, -5.0, 0.0, 2.0, 29.0, 31.0, 45.0] {
            let direct = f64::exp(z).ln_1p();
            assert!((softplus(z) - direct).abs() <= 1e-12 * direct.max(1e-300), "{z}");
            let s = f64::exp(z) / (1.0 + f64::exp(z));
            assert!((ilogit(z) - s).abs() < 1e-15, "{z}");
        }
    }

    #[test]
    fn logistic_data_statistics() {
        let mut rng = RandomStream::new(14);
        let data = generate_logistic_data(100, &mut rng).unwrap();
        assert_eq!(data.len(), 100);
        let col = data.covariates.column(0);
        let mean = col.mean();
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 99.0;
        // sd of the sample variance of 100 normals with variance 10 is 10·√(2/99)
        assert!((var - 10.0).abs() < 3.0 * 10.0 * (2.0f64 / 99.0).sqrt());

        let again = generate_logistic_data(100, &mut RandomStream::new(14)).unwrap();
        assert_eq!(data.to_csv(), again.to_csv());
    }

    #[test]
    fn logistic_label_rate_matches_monte_carlo() {
        let n = 100_000;
        let data = generate_logistic_data(n, &mut RandomStream::new(15)).unwrap();
        let ones = data.labels.iter().filter(|&&y| y == 1).count() as f64 / n as f64;
        let mut rng = RandomStream::new(16);
        let m = 400_000;
        let mc = (0..m)
            .map(|_| ilogit(10f64.sqrt() * rng.standard_normal() + 0.1f64.sqrt() * rng.standard_normal()))
            .sum::<f64>()
            / m as f64;
        let se = (0.25 / n as f64 + 0.25 / m as f64).sqrt();
        assert!((ones - mc).abs() < 3.0 * se, "{ones} vs {mc}");
    }

    #[test]
    fn logistic_csv_round_trip() {
        let data = generate_logistic_data(7, &mut RandomStream::new(17)).unwrap();
        let csv = data.to_csv();
        assert!(csv.starts_with("x1,x2,y\n"));
        let back = LogisticDataset::from_csv(&csv, data.prior_covariance.clone()).unwrap();
        assert_eq!(back.covariates, data.covariates);
        assert_eq!(back.labels, data.labels);
        assert!(LogisticDataset::from_csv("a,b\n1,2\n", SpdMatrix::identity(2)).is_err());
        assert!(LogisticDataset::from_csv("x1,x2,y\n1,2,3\n", SpdMatrix::identity(2)).is_err());
    }

    #[test]
    fn funnel_origin_and_fd() {
        let f = funnel_target(3.0).unwrap();
        let o = Vector::zeros(2);
        assert_eq!(f.value(&o), 0.0);
        assert_eq!(f.gradient_unmetered(&o).as_slice(), &[0.0, 0.5]);
        let mut rng = RandomStream::new(18);
        let points = random_points(2, 20, 1.5, &mut rng);
        check_fd(&f, &points);
        for x in &points {
            let h = f.hessian(x).unwrap();
            assert!((fd_hessian(&f, x) - &h).amax() < 1e-4 * h.amax().max(1.0));
        }
        assert!(funnel_target(0.0).is_err());
    }

    #[test]
    fn funnel_exact_sampler_y_variance() {
        let f = funnel_target(3.0).unwrap();
        let mut rng = RandomStream::new(19);
        let n = 100_000;
        let ys: Vec<f64> = (0..n).map(|_| f.sample_exact(&mut rng)[1]).collect();
        let mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 9.0).abs() < 3.0 * 9.0 * (2.0 / (n as f64 - 1.0)).sqrt());
    }

    #[test]
    fn rotation_cases() {
        let f: Arc<dyn Potential> = Arc::new(funnel_target(3.0).unwrap());
        let same = rotate_target(f.clone(), Matrix::identity(2, 2)).unwrap();
        let mut rng = RandomStream::new(20);
        for x in random_points(2, 10, 1.0, &mut rng) {
            assert_eq!(same.value(&x), f.value(&x));
        }
        let rot = rotate_target(f, funnel_rotation()).unwrap();
        check_fd(&rot, &random_points(2, 20, 1.5, &mut rng));

        let p = random_spd(2, 0.5, &mut rng);
        let w = funnel_rotation();
        let g: Arc<dyn Potential> = Arc::new(gaussian_target(p.clone()));
        let rg = rotate_target(g, w.clone()).unwrap();
        let expected = w.transpose() * p.matrix() * &w;
        assert!((rg.hessian(&Vector::zeros(2)).unwrap() - expected).amax() < 1e-12);

        let bad = Matrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(
            rotate_target(Arc::new(funnel_target(3.0).unwrap()), bad),
            Err(Error::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn directional_gradient_and_metering() {
        let mut rng = RandomStream::new(21);
        let targets: Vec<Box<dyn Potential>> = vec![
            Box::new(gaussian_target(random_spd(5, 0.5, &mut rng))),
            Box::new(rotate_target(Arc::new(funnel_target(3.0).unwrap()), funnel_rotation()).unwrap()),
        ];
        for t in &targets {
            let d = t.dim();
            for r in 1..=d {
                let u = random_semi_orthogonal(d, r, &mut rng);
                let x = Vector::from_fn(d, |_, _| rng.standard_normal());
                let mut counter = OracleCounter::new();
                let dg = t.directional_gradient(&x, &u, &mut counter);
                assert_eq!(counter.calls(), r as u64);
                let full = t.gradient(&x, &mut counter);
                assert_eq!(counter.calls(), (r + d) as u64);
                assert!((dg - u.transpose() * full).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
    }
}
