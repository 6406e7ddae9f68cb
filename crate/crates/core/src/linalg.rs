//! Dense symmetric linear algebra: eigendecomposition, SPD square roots,
//! eigenblock partitions and the random block sampler used by SLMC.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Smallest admissible block probability. The effective step `h / φ_i`
/// diverges as `φ_i → 0`.
pub const PHI_FLOOR: f64 = 1e-12;

const PHI_SUM_TOL: f64 = 1e-12;
const SPD_REL_TOL: f64 = 1e-12;
const SIGN_THRESHOLD: f64 = 1e-12;

/// A square matrix whose storage is exactly symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix(Matrix);

impl SymmetricMatrix {
    /// Accepts `m` only if it is finite and `m[i][j] == m[j][i]` bitwise.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self(m))
    }

    /// Symmetrizes `(m + mᵀ) / 2`. Used for products that are symmetric in
    /// exact arithmetic but not after rounding.
    pub fn from_symmetrized(m: &Matrix) -> Result<Self> {
        let n = m.nrows();
        let mut out = m.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Self::new(out)
    }

    pub fn identity(d: usize) -> Self {
        Self(Matrix::identity(d, d))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| i == j || self.0[(i, j)] == 0.0))
    }
}

/// Eigenvalues in descending order with paired orthonormal eigenvectors
/// stored as matrix columns.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vector,
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Q · diag(f(λ)) · Qᵀ`, symmetrized.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.eigenvalues[j]);
        }
        let m = &scaled * q.transpose();
        symmetrize(&m)
    }

    pub fn reconstruct(&self) -> Matrix {
        self.map_spectrum(|l| l)
    }
}

/// Symmetric eigendecomposition with a deterministic output convention.
///
/// Eigenvalues are sorted descending (stable on ties, so diagonal inputs keep
/// coordinate order) and each eigenvector's first entry with magnitude above
/// 1e-12 is made nonnegative.
pub fn sym_eigen(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    let d = a.dim();
    let (values, vectors) = if a.is_diagonal() {
        (a.0.diagonal(), Matrix::identity(d, d))
    } else {
        let cap = 10 * d * d;
        let eig = a
            .0
            .clone()
            .try_symmetric_eigen(f64::EPSILON, cap)
            .ok_or(Error::EigenNoConvergence { dim: d, sweeps: cap })?;
        (eig.eigenvalues, eig.eigenvectors)
    };

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));

    let eigenvalues = Vector::from_iterator(d, order.iter().map(|&i| values[i]));
    let mut eigenvectors = Matrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = vectors.column(src).into_owned();
        if let Some(first) = col.iter().find(|v| v.abs() > SIGN_THRESHOLD) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        eigenvectors.set_column(dst, &col);
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// A symmetric positive-definite matrix together with its eigendecomposition.
#[derive(Clone, Debug)]
pub struct SpdMatrix {
    sym: SymmetricMatrix,
    eig: EigenDecomposition,
}

impl SpdMatrix {
    pub fn new(sym: SymmetricMatrix) -> Result<Self> {
        let eig = sym_eigen(&sym)?;
        check_positive(&eig)?;
        Ok(Self { sym, eig })
    }

    pub fn from_matrix(m: Matrix) -> Result<Self> {
        Self::new(SymmetricMatrix::new(m)?)
    }

    pub fn identity(d: usize) -> Self {
        Self::new(SymmetricMatrix::identity(d)).expect("identity is SPD")
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(SymmetricMatrix::from_diagonal(diag)?)
    }

    /// Builds `Q diag(λ) Qᵀ` from a known spectrum, keeping `Q` as the
    /// eigenbasis instead of re-decomposing the product. Eigenvalues must be
    /// positive; columns are re-sorted into the canonical order.
    pub fn from_spectrum(eigenvalues: &Vector, eigenvectors: &Matrix) -> Result<Self> {
        let d = eigenvalues.len();
        if eigenvectors.nrows() != d || eigenvectors.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: eigenvectors.ncols(),
            });
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| eigenvalues[j].total_cmp(&eigenvalues[i]));
        let mut vectors = Matrix::zeros(d, d);
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eigenvectors.column(src).into_owned();
            if let Some(first) = col.iter().find(|v| v.abs() > SIGN_THRESHOLD) {
                if *first < 0.0 {
                    col.neg_mut();
                }
            }
            vectors.set_column(dst, &col);
        }
        let eig = EigenDecomposition {
            eigenvalues: Vector::from_iterator(d, order.iter().map(|&i| eigenvalues[i])),
            eigenvectors: vectors,
        };
        check_positive(&eig)?;
        let sym = SymmetricMatrix::new(eig.reconstruct())?;
        Ok(Self { sym, eig })
    }

    pub fn dim(&self) -> usize {
        self.sym.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        self.sym.matrix()
    }

    pub fn symmetric(&self) -> &SymmetricMatrix {
        &self.sym
    }

    pub fn eigen(&self) -> &EigenDecomposition {
        &self.eig
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eig.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig.eigenvalues[self.dim() - 1]
    }

    pub fn inverse(&self) -> SpdMatrix {
        let inv = SymmetricMatrix(self.eig.map_spectrum(|l| 1.0 / l));
        let eig = EigenDecomposition {
            eigenvalues: Vector::from_iterator(
                self.dim(),
                self.eig.eigenvalues.iter().rev().map(|l| 1.0 / l),
            ),
            eigenvectors: reverse_columns(&self.eig.eigenvectors),
        };
        SpdMatrix { sym: inv, eig }
    }

    pub fn sqrt(&self) -> SpdMatrix {
        let root = SymmetricMatrix(self.eig.map_spectrum(f64::sqrt));
        let eig = EigenDecomposition {
            eigenvalues: self.eig.eigenvalues.map(f64::sqrt),
            eigenvectors: self.eig.eigenvectors.clone(),
        };
        SpdMatrix { sym: root, eig }
    }

    /// `Q · diag(√λ)`: a factor `L` with `L Lᵀ = A` whose columns follow the
    /// eigenbasis order. SLMC with a single full-rank block uses the same
    /// factor, which makes the two samplers agree pathwise.
    pub fn eigen_factor(&self) -> Matrix {
        let mut l = self.eig.eigenvectors.clone();
        for (j, mut col) in l.column_iter_mut().enumerate() {
            col *= self.eig.eigenvalues[j].sqrt();
        }
        l
    }

    pub fn spectral_norm(&self) -> f64 {
        self.max_eigenvalue()
    }
}

fn check_positive(eig: &EigenDecomposition) -> Result<()> {
    let largest = eig.eigenvalues[0];
    let smallest = eig.eigenvalues[eig.dim() - 1];
    if !(largest > 0.0) || !(smallest > SPD_REL_TOL * largest) {
        return Err(Error::NotPositiveDefinite {
            eigenvalue: smallest,
            largest,
        });
    }
    Ok(())
}

/// Symmetric positive-definite square root `Q diag(√λ) Qᵀ`.
pub fn spd_sqrt(a: &SymmetricMatrix) -> Result<SpdMatrix> {
    let eig = sym_eigen(a)?;
    if let Some(bad) = eig.eigenvalues.iter().find(|l| **l <= 0.0) {
        return Err(Error::NotPositiveDefinite {
            eigenvalue: *bad,
            largest: eig.eigenvalues[0],
        });
    }
    check_positive(&eig)?;
    Ok(SpdMatrix {
        sym: a.clone(),
        eig,
    }
    .sqrt())
}

/// One rank-r eigenblock `W D Wᵀ`.
#[derive(Clone, Debug)]
pub struct Eigenblock {
    /// d×r, orthonormal columns.
    pub basis: Matrix,
    /// Diagonal of D, positive.
    pub eigenvalues: Vector,
    sqrt_eigenvalues: Vector,
}

impl Eigenblock {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn sqrt_eigenvalues(&self) -> &Vector {
        &self.sqrt_eigenvalues
    }

    /// `W D Wᵀ` as a dense matrix.
    pub fn dense(&self) -> Matrix {
        let mut scaled = self.basis.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.eigenvalues[j];
        }
        symmetrize(&(&scaled * self.basis.transpose()))
    }
}

/// A positive-definite preconditioner split into eigenblocks, with the
/// probabilities used to pick a block at each step.
#[derive(Clone, Debug)]
pub struct EigenblockPartition {
    blocks: Vec<Eigenblock>,
    probabilities: Vec<f64>,
    cdf: Vec<f64>,
    rank: usize,
    dim: usize,
}

pub fn block_count(d: usize, r: usize) -> usize {
    d.div_ceil(r)
}

pub fn uniform_probabilities(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Splits the eigenbasis into contiguous column groups of size `r` in
/// descending-eigenvalue order; the last block is smaller when `r ∤ d`.
pub fn eigenblock_partition(
    eig: &EigenDecomposition,
    r: usize,
    phi: &[f64],
) -> Result<EigenblockPartition> {
    let d = eig.dim();
    if r == 0 || r > d {
        return Err(Error::InvalidRank { rank: r, dim: d });
    }
    check_positive(eig)?;
    let n = block_count(d, r);
    validate_probabilities(phi, n)?;

    let blocks = (0..n)
        .map(|i| {
            let start = i * r;
            let width = r.min(d - start);
            let eigenvalues = eig.eigenvalues.rows(start, width).into_owned();
            Eigenblock {
                basis: eig.eigenvectors.columns(start, width).into_owned(),
                sqrt_eigenvalues: eigenvalues.map(f64::sqrt),
                eigenvalues,
            }
        })
        .collect();

    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for p in phi {
        acc += p;
        cdf.push(acc);
    }
    Ok(EigenblockPartition {
        blocks,
        probabilities: phi.to_vec(),
        cdf,
        rank: r,
        dim: d,
    })
}

pub fn validate_probabilities(phi: &[f64], expected: usize) -> Result<()> {
    if phi.len() != expected {
        return Err(Error::ProbabilityLength {
            expected,
            got: phi.len(),
        });
    }
    for (index, &value) in phi.iter().enumerate() {
        if !(value >= PHI_FLOOR) {
            return Err(Error::ProbabilityTooSmall {
                index,
                value,
                floor: PHI_FLOOR,
            });
        }
    }
    let sum: f64 = phi.iter().sum();
    if (sum - 1.0).abs() > PHI_SUM_TOL {
        return Err(Error::ProbabilitySum { sum });
    }
    Ok(())
}

impl EigenblockPartition {
    pub fn blocks(&self) -> &[Eigenblock] {
        &self.blocks
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn min_probability(&self) -> f64 {
        self.probabilities.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Σ_i W_i D_i W_iᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let mut sum = Matrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            sum += b.dense();
        }
        sum
    }

    /// Draws block `i` with probability `φ_i` by inverse CDF on one uniform
    /// variate and pairs it with the reweighted step `h / φ_i`. A single-block
    /// partition consumes no variate.
    pub fn sample_block(&self, h: f64, rng: &mut RandomStream) -> Result<BlockDraw<'_>> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidStepSize(h));
        }
        let u = if self.blocks.len() == 1 { 0.0 } else { rng.uniform() };
        Ok(self.draw(u, h))
    }

    pub(crate) fn draw(&self, u: f64, h: f64) -> BlockDraw<'_> {
        let index = self
            .cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.blocks.len() - 1);
        BlockDraw {
            block_index: index,
            block: &self.blocks[index],
            effective_step: h / self.probabilities[index],
        }
    }

    /// Replaces the probabilities, keeping the blocks.
    pub fn with_probabilities(&self, phi: &[f64]) -> Result<Self> {
        validate_probabilities(phi, self.blocks.len())?;
        let mut cdf = Vec::with_capacity(phi.len());
        let mut acc = 0.0;
        for p in phi {
            acc += p;
            cdf.push(acc);
        }
        Ok(Self {
            blocks: self.blocks.clone(),
            probabilities: phi.to_vec(),
            cdf,
            rank: self.rank,
            dim: self.dim,
        })
    }
}

pub fn sample_block<'a>(
    partition: &'a EigenblockPartition,
    h: f64,
    rng: &mut RandomStream,
) -> Result<BlockDraw<'a>> {
    partition.sample_block(h, rng)
}

/// The block chosen at one SLMC step.
#[derive(Clone, Copy, Debug)]
pub struct BlockDraw<'a> {
    pub block_index: usize,
    pub block: &'a Eigenblock,
    pub effective_step: f64,
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// diagonal of R made positive.
pub fn random_orthogonal(d: usize, rng: &mut RandomStream) -> Matrix {
    let g = Matrix::from_fn(d, d, |_, _| rng.standard_normal());
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// d×r matrix with orthonormal columns, uniformly distributed.
pub fn random_semi_orthogonal(d: usize, r: usize, rng: &mut RandomStream) -> Matrix {
    random_orthogonal(d, rng).columns(0, r).into_owned()
}

/// Random SPD matrix `G Gᵀ + shift·I`.
pub fn random_spd(d: usize, shift: f64, rng: &mut RandomStream) -> SpdMatrix {
    let g = Matrix::from_fn(d, d, |_, _| rng.standard_normal());
    let m = &g * g.transpose() + Matrix::identity(d, d) * shift;
    SpdMatrix::new(SymmetricMatrix::from_symmetrized(&m).expect("finite"))
        .expect("Gram matrix plus positive shift is SPD")
}

/// max |WᵀW − I|.
pub fn orthogonality_defect(w: &Matrix) -> f64 {
    let g = w.transpose() * w;
    let n = g.nrows();
    (&g - Matrix::identity(n, n)).amax()
}

pub fn relative_frobenius(a: &Matrix, b: &Matrix) -> f64 {
    let scale = b.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / scale
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn block_diagonal(blocks: &[&Matrix]) -> Matrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(n, n);
    let mut offset = 0;
    for b in blocks {
        out.view_mut((offset, offset), (b.nrows(), b.ncols()))
            .copy_from(*b);
        offset += b.nrows();
    }
    out
}

fn reverse_columns(m: &Matrix) -> Matrix {
    let n = m.ncols();
    Matrix::from_fn(m.nrows(), n, |i, j| m[(i, n - 1 - j)])
}
