//! Every bipartite orbit contains a classically correlated state
//! (diagonal on A with conditional states on B). This module constructs
//! that state for any input, together with the connecting unitaries.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::density::{
    eig_hermitian, haar_unitary, CMatrix, DensityMatrix, RandomSource, UnitaryMatrix,
};
use crate::{Error, Result};

/// Eigenvalue grid factored as lambda_ij = a_i * b_j^(i): classical weights
/// a over A and one conditional distribution b^(i) over B per weight.
#[derive(Debug, Clone, Serialize)]
pub struct ClassicalFactorization {
    pub weights: Vec<f64>,
    pub conditionals: Vec<Vec<f64>>,
}

/// The classically correlated state on an orbit plus the unitaries
/// connecting it to the input: U_cd^dag W rho W^dag U_cd = classical_state.
#[derive(Debug, Clone)]
pub struct ClassicalizationResult {
    pub classical_state: DensityMatrix,
    pub w: UnitaryMatrix,
    pub u_cd: UnitaryMatrix,
    pub factorization: ClassicalFactorization,
}

/// Weights are row sums, conditionals are normalized rows; a zero-weight
/// row gets the uniform conditional.
pub fn factor_classical(grid: &[Vec<f64>]) -> Result<ClassicalFactorization> {
    if grid.is_empty() || grid[0].is_empty() {
        return Err(Error::InvalidState("empty grid".into()));
    }
    let db = grid[0].len();
    let mut total = 0.0;
    for row in grid {
        if row.len() != db {
            return Err(Error::InvalidState("ragged grid".into()));
        }
        for &v in row {
            if v < -1e-12 {
                return Err(Error::InvalidState(format!("negative entry {v:.3e}")));
            }
            total += v;
        }
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidState(format!("grid sums to {total}, expected 1")));
    }
    let weights: Vec<f64> = grid.iter().map(|row| row.iter().sum()).collect();
    let conditionals: Vec<Vec<f64>> = grid
        .iter()
        .zip(&weights)
        .map(|(row, &a)| {
            if a > 0.0 {
                row.iter().map(|&v| v / a).collect()
            } else {
                vec![1.0 / db as f64; db]
            }
        })
        .collect();
    Ok(ClassicalFactorization {
        weights,
        conditionals,
    })
}

/// Map a bipartite state to a classically correlated state on its orbit.
///
/// Eigenvalues are arranged in a descending row-major dA x dB grid; W takes
/// the eigenbasis to the computational basis; U_cd is a control-unitary
/// whose blocks are identity (no rng) or Haar-random (with rng).
pub fn classicalize(
    rho: &DensityMatrix,
    da: usize,
    db: usize,
    rs: Option<RandomSource>,
) -> Result<ClassicalizationResult> {
    if da * db != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: da * db,
        });
    }
    let (vals, v) = eig_hermitian(rho.matrix())?;
    if let Some(&min) = vals
        .iter()
        .min_by(|a, b| a.partial_cmp(b).unwrap())
    {
        if min < -1e-9 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
    }
    let clamped: Vec<f64> = vals.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    let grid: Vec<Vec<f64>> = (0..da)
        .map(|i| (0..db).map(|j| clamped[i * db + j] / total).collect())
        .collect();

    // Columns of v are the eigenvectors |v_ij> in row-major grid order, so
    // W = v^dag sends |v_ij> to |ij>.
    let w = v.adjoint();

    let mut u_cd = CMatrix::zeros(da * db, da * db);
    for i in 0..da {
        let block = match rs {
            Some(src) => haar_unitary(db, src.split(i as u64))?,
            None => UnitaryMatrix::identity(db),
        };
        for r in 0..db {
            for c in 0..db {
                u_cd[(i * db + r, i * db + c)] = block.matrix()[(r, c)];
            }
        }
    }
    let u_cd = UnitaryMatrix::from_valid(u_cd);

    let diag = CMatrix::from_diagonal(&DVector::from_iterator(
        da * db,
        grid.iter().flatten().map(|&x| Complex64::new(x, 0.0)),
    ));
    let classical_state = DensityMatrix::from_valid(
        u_cd.matrix().adjoint() * diag * u_cd.matrix(),
    );

    Ok(ClassicalizationResult {
        classical_state,
        w,
        u_cd,
        factorization: factor_classical(&grid)?,
    })
}

/// Whether rho has the classically correlated form in the computational
/// basis of A: all cross blocks <i| rho |k>, i != k, vanish within tol.
pub fn is_classically_correlated(
    rho: &DensityMatrix,
    da: usize,
    db: usize,
    tol: f64,
) -> Result<bool> {
    if da * db != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: da * db,
        });
    }
    let m = rho.matrix();
    for i in 0..da {
        for k in 0..da {
            if i == k {
                continue;
            }
            for j in 0..db {
                for j2 in 0..db {
                    if m[(i * db + j, k * db + j2)].norm() > tol {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{kron, random_density, Subsystem};
    use crate::orbits::same_orbit;

    #[test]
    fn factor_classical_generic() {
        let grid = vec![vec![0.42, 0.28], vec![0.18, 0.12]];
        let f = factor_classical(&grid).unwrap();
        assert!((f.weights[0] - 0.7).abs() < 1e-12);
        assert!((f.weights[1] - 0.3).abs() < 1e-12);
        assert!((f.conditionals[0][0] - 0.6).abs() < 1e-12);
        assert!((f.conditionals[1][0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn factor_classical_zero_weight_row() {
        let grid = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
        let f = factor_classical(&grid).unwrap();
        assert_eq!(f.weights, vec![1.0, 0.0]);
        assert_eq!(f.conditionals[0], vec![1.0, 0.0]);
        assert_eq!(f.conditionals[1], vec![0.5, 0.5]);
    }

    #[test]
    fn factor_classical_uniform() {
        let grid = vec![vec![0.25, 0.25], vec![0.25, 0.25]];
        let f = factor_classical(&grid).unwrap();
        assert_eq!(f.weights, vec![0.5, 0.5]);
        assert_eq!(f.conditionals[0], vec![0.5, 0.5]);
    }

    #[test]
    fn factor_classical_reconstructs_grid() {
        let grid = vec![vec![0.3, 0.1, 0.05], vec![0.0, 0.0, 0.0], vec![0.35, 0.15, 0.05]];
        let f = factor_classical(&grid).unwrap();
        for (i, row) in grid.iter().enumerate() {
            if f.weights[i] > 0.0 {
                for (j, &v) in row.iter().enumerate() {
                    assert!((f.weights[i] * f.conditionals[i][j] - v).abs() < 1e-12);
                }
            }
        }
        assert!((f.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for c in &f.conditionals {
            assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    fn bell() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = nalgebra::DVector::from_vec(vec![
            Complex64::new(s, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(s, 0.0),
        ]);
        DensityMatrix::pure(&psi).unwrap()
    }

    #[test]
    fn classicalize_bell_gives_pure_product() {
        let result = classicalize(&bell(), 2, 2, None).unwrap();
        let m = result.classical_state.matrix();
        assert!((m[(0, 0)].re - 1.0).abs() < 1e-9);
        for i in 1..4 {
            assert!(m[(i, i)].norm() < 1e-9);
        }
        assert_eq!(result.factorization.weights, vec![1.0, 0.0]);
    }

    #[test]
    fn classicalize_maximally_mixed_is_fixed() {
        let rho = DensityMatrix::maximally_mixed(4);
        let result = classicalize(&rho, 2, 2, Some(RandomSource::new(9))).unwrap();
        assert!((result.classical_state.matrix() - rho.matrix()).norm() < 1e-9);
    }

    #[test]
    fn classicalize_connecting_unitaries() {
        for (k, (da, db)) in [(2usize, 2usize), (2, 3), (3, 3)].iter().enumerate() {
            let rho = random_density(da * db, RandomSource::with_stream(31, k as u64)).unwrap();
            let result =
                classicalize(&rho, *da, *db, Some(RandomSource::with_stream(32, k as u64)))
                    .unwrap();
            assert!(same_orbit(&rho, &result.classical_state, 1e-9).unwrap());
            let lhs = result.u_cd.matrix().adjoint()
                * result.w.matrix()
                * rho.matrix()
                * result.w.matrix().adjoint()
                * result.u_cd.matrix();
            assert!((lhs - result.classical_state.matrix()).norm() < 1e-9);
            assert!(is_classically_correlated(&result.classical_state, *da, *db, 1e-9).unwrap());
        }
    }

    #[test]
    fn verifier_cases() {
        let ra = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        let rb = random_density(2, RandomSource::new(41)).unwrap();
        let prod = DensityMatrix::from_valid(kron(ra.matrix(), rb.matrix()));
        assert!(is_classically_correlated(&prod, 2, 2, 1e-9).unwrap());
        assert!(!is_classically_correlated(&bell(), 2, 2, 1e-9).unwrap());
    }

    #[test]
    fn swapped_roles_also_classicalize() {
        // Swapping A and B amounts to conjugating by the swap and
        // transposing the grid; the construction succeeds either way.
        let rho = random_density(4, RandomSource::new(51)).unwrap();
        let mut swap = CMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                swap[(j * 2 + i, i * 2 + j)] = Complex64::new(1.0, 0.0);
            }
        }
        let swap = UnitaryMatrix::new(swap).unwrap();
        let swapped = crate::density::conjugate(&rho, &swap).unwrap();
        let result = classicalize(&swapped, 2, 2, Some(RandomSource::new(52))).unwrap();
        assert!(same_orbit(&rho, &result.classical_state, 1e-9).unwrap());
        assert!(is_classically_correlated(&result.classical_state, 2, 2, 1e-9).unwrap());
        let _ = Subsystem::B;
    }
}
