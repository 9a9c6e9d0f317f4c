//! Dense complex linear algebra substrate: density matrices, unitaries,
//! Hermitian eigendecomposition, tensor products, partial transpose, and
//! seeded random sampling.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::orbits::Spectrum;
use crate::{Error, Result};

/// Absolute tolerance for Hermiticity, trace, and unitarity checks.
pub const CHECK_TOL: f64 = 1e-9;
/// Tolerance for eigendecomposition reconstruction residuals.
pub const EIG_TOL: f64 = 1e-10;

pub type CMatrix = DMatrix<Complex64>;

/// Seedable, stream-splittable randomness. Identical (seed, stream) pairs
/// yield identical draw sequences across runs and platforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// A disjoint stream for parallel or repeated use.
    pub fn split(&self, offset: u64) -> Self {
        Self {
            seed: self.seed,
            stream: self.stream.wrapping_add(offset).wrapping_add(1),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Which tensor factor an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// A trace-one positive semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "expected square nonempty matrix, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let herm_dev = hermiticity_deviation(&mat);
        if herm_dev > CHECK_TOL {
            return Err(Error::NotHermitian { deviation: herm_dev });
        }
        let trace = mat.trace();
        if (trace.re - 1.0).abs() > CHECK_TOL || trace.im.abs() > CHECK_TOL {
            return Err(Error::InvalidState(format!(
                "trace = {} + {}i, expected 1",
                trace.re, trace.im
            )));
        }
        let (eigs, _) = eig_hermitian(&mat)?;
        if let Some(min) = eigs.iter().cloned().reduce(f64::min) {
            if min < -CHECK_TOL {
                return Err(Error::InvalidState(format!(
                    "negative eigenvalue {min:.3e}"
                )));
            }
        }
        Ok(Self { mat })
    }

    /// Wrap a matrix already known to be a valid state (e.g. the image of a
    /// valid state under unitary conjugation).
    pub(crate) fn from_valid(mat: CMatrix) -> Self {
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Pure state |psi><psi| from a (not necessarily normalized) vector.
    pub fn pure(psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = psi / Complex64::new(norm, 0.0);
        let mat = &v * v.adjoint();
        Ok(Self { mat })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let scale = Complex64::new(1.0 / dim as f64, 0.0);
        Self {
            mat: CMatrix::identity(dim, dim) * scale,
        }
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > CHECK_TOL || probs.iter().any(|&p| p < -CHECK_TOL) {
            return Err(Error::InvalidState(format!(
                "diagonal is not a probability vector (sum {sum})"
            )));
        }
        let diag = DVector::from_iterator(
            probs.len(),
            probs.iter().map(|&p| Complex64::new(p, 0.0)),
        );
        Ok(Self {
            mat: CMatrix::from_diagonal(&diag),
        })
    }
}

/// A matrix with U U^dag = I within tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    mat: CMatrix,
}

impl UnitaryMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        let dim = mat.nrows();
        if dim != mat.ncols() || dim == 0 {
            return Err(Error::InvalidState(format!(
                "expected square nonempty matrix, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let dev = (&mat * mat.adjoint() - CMatrix::identity(dim, dim)).norm();
        if dev > CHECK_TOL {
            return Err(Error::NotUnitary { deviation: dev });
        }
        Ok(Self { mat })
    }

    pub(crate) fn from_valid(mat: CMatrix) -> Self {
        Self { mat }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        Self {
            mat: self.mat.adjoint(),
        }
    }
}

pub fn hermiticity_deviation(mat: &CMatrix) -> f64 {
    let diff = mat - mat.adjoint();
    diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending
/// with eigenvector columns matching.
pub fn eig_hermitian(h: &CMatrix) -> Result<(Vec<f64>, UnitaryMatrix)> {
    let dev = hermiticity_deviation(h);
    if dev > CHECK_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let dim = h.nrows();
    // Symmetrize so residual roundoff does not leak into the decomposition.
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok((values, UnitaryMatrix::from_valid(vectors)))
}

fn ginibre(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * scale, im * scale)
    })
}

/// Haar-distributed random unitary: QR of a complex Gaussian matrix with the
/// diagonal of R phase-corrected.
pub fn haar_unitary(dim: usize, rs: RandomSource) -> Result<UnitaryMatrix> {
    if dim == 0 {
        return Err(Error::InvalidState("dim must be >= 1".into()));
    }
    let mut rng = rs.rng();
    let g = ginibre(dim, &mut rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / Complex64::new(rjj.norm(), 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Ok(UnitaryMatrix::from_valid(q))
}

/// Random density matrix from the Hilbert-Schmidt measure: G G^dag / tr(G G^dag).
pub fn random_density(dim: usize, rs: RandomSource) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(Error::InvalidState("dim must be >= 1".into()));
    }
    let mut rng = rs.rng();
    let g = ginibre(dim, &mut rng);
    let gg = &g * g.adjoint();
    let trace = gg.trace().re;
    Ok(DensityMatrix::from_valid(gg / Complex64::new(trace, 0.0)))
}

/// Random sorted spectrum from the flat Dirichlet measure on the simplex.
pub fn random_spectrum(dim: usize, rs: RandomSource) -> Result<Spectrum> {
    if dim == 0 {
        return Err(Error::InvalidState("dim must be >= 1".into()));
    }
    let mut rng = rs.rng();
    let mut entries: Vec<f64> = (0..dim)
        .map(|_| {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            -u.ln()
        })
        .collect();
    let total: f64 = entries.iter().sum();
    for e in &mut entries {
        *e /= total;
    }
    Spectrum::from_probabilities(&entries)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Transpose one tensor factor of a bipartite matrix.
pub fn partial_transpose(
    rho: &DensityMatrix,
    dims: (usize, usize),
    subsystem: Subsystem,
) -> Result<CMatrix> {
    partial_transpose_matrix(rho.matrix(), dims, subsystem)
}

/// Matrix-level partial transpose; the result of one application need not
/// be a state.
pub fn partial_transpose_matrix(
    m: &CMatrix,
    dims: (usize, usize),
    subsystem: Subsystem,
) -> Result<CMatrix> {
    let (da, db) = dims;
    let dim = m.nrows();
    if da * db != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: da * db,
        });
    }
    let mut out = CMatrix::zeros(dim, dim);
    for i1 in 0..da {
        for j1 in 0..db {
            for i2 in 0..da {
                for j2 in 0..db {
                    let (ri, rj) = match subsystem {
                        Subsystem::A => (i2 * db + j1, i1 * db + j2),
                        Subsystem::B => (i1 * db + j2, i2 * db + j1),
                    };
                    out[(i1 * db + j1, i2 * db + j2)] = m[(ri, rj)];
                }
            }
        }
    }
    Ok(out)
}

/// U rho U^dag; preserves the spectrum.
pub fn conjugate(rho: &DensityMatrix, u: &UnitaryMatrix) -> Result<DensityMatrix> {
    if rho.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: u.dim(),
        });
    }
    let mat = u.matrix() * rho.matrix() * u.matrix().adjoint();
    Ok(DensityMatrix::from_valid(mat))
}
