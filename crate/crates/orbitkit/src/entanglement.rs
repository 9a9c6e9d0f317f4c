//! Negativity, two-qubit concurrence, maximal entanglement over a unitary
//! orbit by random-restart ascent on the unitary group, and equi-negativity
//! level sets in the tetrahedron.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::{
    eig_hermitian, haar_unitary, partial_transpose, CMatrix, DensityMatrix, RandomSource,
    Subsystem, UnitaryMatrix,
};
use crate::orbits::{inverse_coords_d4, OrbitCoords, Spectrum};
use crate::product::{GridSpec, SurfaceSample};
use crate::{Error, Result};

/// Absolute sum of the negative partial-transpose eigenvalues. Bell states
/// score 1/2 under this normalization.
pub fn negativity(rho: &DensityMatrix, da: usize, db: usize) -> Result<f64> {
    Ok(negativity_signed(rho, da, db)?.max(0.0))
}

/// Signed variant: equals negativity when positive, and the (negative)
/// smallest PT eigenvalue otherwise. Continuous across the separability
/// boundary, which gives ascent a slope on the zero plateau.
pub fn negativity_signed(rho: &DensityMatrix, da: usize, db: usize) -> Result<f64> {
    let pt = partial_transpose(rho, (da, db), Subsystem::B)?;
    let (vals, _) = eig_hermitian(&pt)?;
    let neg: f64 = vals.iter().map(|&v| (-v).max(0.0)).sum();
    if neg > 0.0 {
        Ok(neg)
    } else {
        Ok(-vals[vals.len() - 1])
    }
}

/// Wootters concurrence of a two-qubit state via the spin-flip spectrum.
pub fn concurrence_2q(rho: &DensityMatrix) -> Result<f64> {
    Ok(concurrence_signed_2q(rho)?.max(0.0))
}

/// Concurrence without the final clamp at zero; negative on most separable
/// states, which gives ascent a slope on the zero plateau.
pub fn concurrence_signed_2q(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    let m = rho.matrix();
    let yy = sigma_y_tensor_y();
    let conj = m.map(|z| z.conj());
    let flipped = &yy * conj * &yy;
    // Eigenvalues of rho * rho_tilde equal those of the Hermitian matrix
    // sqrt(rho) rho_tilde sqrt(rho).
    let (vals, v) = eig_hermitian(m)?;
    let sqrt_diag = CMatrix::from_diagonal(&DVector::from_iterator(
        4,
        vals.iter().map(|&x| Complex64::new(x.max(0.0).sqrt(), 0.0)),
    ));
    let sqrt_rho = v.matrix() * sqrt_diag * v.matrix().adjoint();
    let herm = &sqrt_rho * flipped * &sqrt_rho;
    let (mu, _) = eig_hermitian(&herm)?;
    // Floor roundoff dust: sqrt amplifies 1e-16 noise to 1e-8.
    let floor = 1e-13 * mu[0].max(0.0);
    let roots: Vec<f64> = mu
        .iter()
        .map(|&x| if x > floor { x.sqrt() } else { 0.0 })
        .collect();
    Ok(roots[0] - roots[1] - roots[2] - roots[3])
}

fn sigma_y_tensor_y() -> CMatrix {
    let i = Complex64::new(0.0, 1.0);
    let zero = Complex64::new(0.0, 0.0);
    let sy = CMatrix::from_row_slice(2, 2, &[zero, -i, i, zero]);
    sy.kronecker(&sy)
}

/// Candidate for the maximal concurrence on the orbit of a length-4
/// spectrum: max(0, l1 - l3 - 2 sqrt(l2 l4)). Validated against the
/// optimizer; not derived here.
pub fn max_concurrence_closed_form(s: &Spectrum) -> Result<f64> {
    if s.len() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: s.len(),
        });
    }
    let l = s.entries();
    Ok((l[0] - l[2] - 2.0 * (l[1] * l[3]).sqrt()).max(0.0))
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_init: f64,
    pub tol_value: f64,
    pub seed: RandomSource,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 500,
            step_init: 0.1,
            tol_value: 1e-8,
            seed: RandomSource::new(0),
        }
    }
}

impl OptimizerConfig {
    /// Cheaper settings for inner loops such as level-set scans.
    pub fn fast(seed: RandomSource) -> Self {
        Self {
            restarts: 4,
            max_iters: 150,
            step_init: 0.1,
            tol_value: 1e-7,
            seed,
        }
    }
}

/// Best value of an orbit functional found over restarts; a certified lower
/// bound on the orbit maximum.
#[derive(Debug, Clone)]
pub struct NegativityReport {
    pub best_negativity: f64,
    pub best_unitary: UnitaryMatrix,
    pub restarts_used: usize,
    pub converged: bool,
    pub trace_of_iterations: Option<Vec<(usize, f64)>>,
}

enum Rotation {
    /// exp(i eps (E_kl + E_lk))
    Sym(usize, usize),
    /// exp(i eps (-i E_kl + i E_lk)) = plane rotation
    Antisym(usize, usize),
    /// exp(i eps E_kk)
    Phase(usize),
}

fn generator_basis(dim: usize) -> Vec<Rotation> {
    let mut gens = Vec::new();
    for k in 0..dim {
        for l in k + 1..dim {
            gens.push(Rotation::Sym(k, l));
            gens.push(Rotation::Antisym(k, l));
        }
    }
    for k in 0..dim - 1 {
        gens.push(Rotation::Phase(k));
    }
    gens
}

/// Left-multiply U by the elementary rotation exp(i eps G); touches at most
/// two rows.
fn apply_rotation(u: &CMatrix, rot: &Rotation, eps: f64) -> CMatrix {
    let mut out = u.clone();
    let dim = u.ncols();
    match *rot {
        Rotation::Sym(k, l) => {
            let (c, s) = (eps.cos(), eps.sin());
            let is = Complex64::new(0.0, s);
            for j in 0..dim {
                let (uk, ul) = (u[(k, j)], u[(l, j)]);
                out[(k, j)] = uk * c + ul * is;
                out[(l, j)] = uk * is + ul * c;
            }
        }
        Rotation::Antisym(k, l) => {
            let (c, s) = (eps.cos(), eps.sin());
            for j in 0..dim {
                let (uk, ul) = (u[(k, j)], u[(l, j)]);
                out[(k, j)] = uk * c + ul * s;
                out[(l, j)] = ul * c - uk * s;
            }
        }
        Rotation::Phase(k) => {
            let phase = Complex64::new(0.0, eps).exp();
            for j in 0..dim {
                out[(k, j)] *= phase;
            }
        }
    }
    out
}

fn generator_matrix(dim: usize, coeffs: &[f64], gens: &[Rotation]) -> CMatrix {
    let mut g = CMatrix::zeros(dim, dim);
    let i = Complex64::new(0.0, 1.0);
    for (c, rot) in coeffs.iter().zip(gens) {
        let c = Complex64::new(*c, 0.0);
        match *rot {
            Rotation::Sym(k, l) => {
                g[(k, l)] += c;
                g[(l, k)] += c;
            }
            Rotation::Antisym(k, l) => {
                g[(k, l)] -= c * i;
                g[(l, k)] += c * i;
            }
            Rotation::Phase(k) => {
                g[(k, k)] += c;
            }
        }
    }
    g
}

/// exp(i t G) for Hermitian G, via eigendecomposition.
fn unitary_exp(g: &CMatrix, t: f64) -> CMatrix {
    let (vals, v) = eig_hermitian(g).expect("generator is Hermitian by construction");
    let diag = CMatrix::from_diagonal(&DVector::from_iterator(
        g.nrows(),
        vals.iter().map(|&l| Complex64::new(0.0, t * l).exp()),
    ));
    v.matrix() * diag * v.matrix().adjoint()
}

struct RestartOutcome {
    value: f64,
    unitary: CMatrix,
    trace: Vec<(usize, f64)>,
}

fn ascend(
    diag: &CMatrix,
    objective: &(impl Fn(&DensityMatrix) -> f64 + Sync),
    start: CMatrix,
    cfg: &OptimizerConfig,
) -> RestartOutcome {
    let dim = diag.nrows();
    let gens = generator_basis(dim);
    let eval = |u: &CMatrix| -> f64 {
        let rho = DensityMatrix::from_valid(u * diag * u.adjoint());
        objective(&rho)
    };
    let grad_eps = 1e-4;
    let mut u = start;
    let mut value = eval(&u);
    let mut step = cfg.step_init;
    let mut trace = vec![(0, value)];

    for iter in 1..=cfg.max_iters {
        // Finite-difference gradient over the Hermitian generator basis;
        // line search trusts function values only.
        let mut coeffs = Vec::with_capacity(gens.len());
        for rot in &gens {
            let fp = eval(&apply_rotation(&u, rot, grad_eps));
            let fm = eval(&apply_rotation(&u, rot, -grad_eps));
            coeffs.push((fp - fm) / (2.0 * grad_eps));
        }
        let g = generator_matrix(dim, &coeffs, &gens);
        let gnorm = g.norm();
        if gnorm < 1e-13 {
            break;
        }
        let g = g / Complex64::new(gnorm, 0.0);

        let mut t = step.max(1e-10);
        let mut best_t = 0.0;
        let mut best_val = value;
        let probe = |tt: f64, best_t: &mut f64, best_val: &mut f64| -> f64 {
            let cand = unitary_exp(&g, tt) * &u;
            let v = eval(&cand);
            if v > *best_val {
                *best_val = v;
                *best_t = tt;
            }
            v
        };
        let first = probe(t, &mut best_t, &mut best_val);
        if first > value {
            for _ in 0..8 {
                t *= 2.0;
                let v = probe(t, &mut best_t, &mut best_val);
                if v < best_val {
                    break;
                }
            }
        } else {
            for _ in 0..40 {
                t *= 0.5;
                if t < 1e-14 {
                    break;
                }
                if probe(t, &mut best_t, &mut best_val) > value {
                    break;
                }
            }
        }
        if best_t == 0.0 {
            break;
        }
        let improvement = best_val - value;
        u = unitary_exp(&g, best_t) * &u;
        value = best_val;
        step = (best_t * 2.0).clamp(1e-10, 1.0);
        trace.push((iter, value));
        if improvement < cfg.tol_value {
            break;
        }
    }

    RestartOutcome {
        value,
        unitary: u,
        trace,
    }
}

/// Maximize an orbit functional over the unitary orbit of `s` by
/// random-restart ascent. The result is a lower bound on the orbit maximum.
pub fn maximize_over_orbit(
    s: &Spectrum,
    objective: impl Fn(&DensityMatrix) -> f64 + Sync,
    cfg: &OptimizerConfig,
) -> Result<NegativityReport> {
    let dim = s.len();
    let diag = CMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        s.entries().iter().map(|&x| Complex64::new(x, 0.0)),
    ));
    let restarts = cfg.restarts.max(1);
    let outcomes: Vec<RestartOutcome> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                CMatrix::identity(dim, dim)
            } else {
                haar_unitary(dim, cfg.seed.split(r as u64))
                    .expect("dim >= 1")
                    .matrix()
                    .clone()
            };
            ascend(&diag, &objective, start, cfg)
        })
        .collect();

    let mut values: Vec<f64> = outcomes.iter().map(|o| o.value).collect();
    let best_idx = values
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.partial_cmp(b).unwrap().then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .unwrap();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let converged = if restarts >= 2 {
        (values[0] - values[1]).abs() <= 10.0 * cfg.tol_value
    } else {
        true
    };
    let best = &outcomes[best_idx];
    Ok(NegativityReport {
        best_negativity: best.value,
        best_unitary: UnitaryMatrix::from_valid(best.unitary.clone()),
        restarts_used: restarts,
        converged,
        trace_of_iterations: Some(best.trace.clone()),
    })
}

/// Maximal negativity over the unitary orbit of a two-qubit spectrum.
/// Ascent runs on the signed surrogate so it does not stall on the
/// separable plateau; the reported value is the true negativity of the
/// best state found.
pub fn max_negativity_orbit(s: &Spectrum, cfg: &OptimizerConfig) -> Result<NegativityReport> {
    if s.len() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: s.len(),
        });
    }
    let mut report =
        maximize_over_orbit(s, |rho| negativity_signed(rho, 2, 2).unwrap_or(0.0), cfg)?;
    report.best_negativity = report.best_negativity.max(0.0);
    if let Some(trace) = &mut report.trace_of_iterations {
        for (_, v) in trace.iter_mut() {
            *v = v.max(0.0);
        }
    }
    Ok(report)
}

/// A grid point where the checked z-scan monotonicity assumption failed.
#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityViolation {
    pub x: f64,
    pub y: f64,
    pub drop: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquiNegativitySurface {
    pub level: f64,
    pub samples: Vec<SurfaceSample>,
    pub monotonicity_violations: Vec<MonotonicityViolation>,
}

/// Tolerance slack when deciding whether an orbit reaches a negativity level.
const LEVEL_SLACK: f64 = 1e-4;

/// For each (x, y), the smallest z in the ordered chamber whose orbit
/// attains maximum negativity >= level (strictly positive when level = 0);
/// absent where the level is never reached.
pub fn equi_negativity_surface(
    level: f64,
    grid: &GridSpec,
    cfg: &OptimizerConfig,
) -> Result<EquiNegativitySurface> {
    if !(0.0..=0.5).contains(&level) {
        return Err(Error::InvalidState(format!(
            "level {level} outside [0, 1/2]"
        )));
    }
    if grid.nx < 2 || grid.ny < 2 {
        return Err(Error::InvalidGrid(format!(
            "need nx, ny >= 2, got {}x{}",
            grid.nx, grid.ny
        )));
    }
    let threshold = if level > 0.0 {
        level - LEVEL_SLACK
    } else {
        LEVEL_SLACK
    };

    let points = grid.points();
    let results: Vec<(SurfaceSample, Option<MonotonicityViolation>)> = points
        .par_iter()
        .map(|&(x, y)| {
            let absent = SurfaceSample {
                x,
                y,
                z: None,
                spectrum: None,
            };
            let z_hi = 1.0 / 3.0;
            let z_lo = (y * std::f64::consts::FRAC_1_SQRT_2).min(z_hi);
            let feasible = x >= -1e-12
                && 3.0 * std::f64::consts::SQRT_2 * y >= 6.0f64.sqrt() * x - 1e-9
                && y * std::f64::consts::FRAC_1_SQRT_2 <= z_hi + 1e-12;
            if !feasible {
                return (absent, None);
            }
            let max_neg = |z: f64| -> f64 {
                let c = OrbitCoords::new(x, y, z.clamp(z_lo, z_hi));
                match inverse_coords_d4(&c) {
                    Ok(s) => max_negativity_orbit(&s, cfg)
                        .map(|r| r.best_negativity)
                        .unwrap_or(0.0),
                    Err(_) => 0.0,
                }
            };
            // Check the scan assumption on a coarse ladder before bisecting.
            let mut violation = None;
            let ladder: Vec<f64> = (0..4)
                .map(|i| z_lo + (z_hi - z_lo) * i as f64 / 3.0)
                .map(max_neg)
                .collect();
            for w in ladder.windows(2) {
                if w[1] < w[0] - 1e-3 {
                    violation = Some(MonotonicityViolation {
                        x,
                        y,
                        drop: w[0] - w[1],
                    });
                }
            }
            let f_hi = ladder[3];
            if f_hi < threshold {
                return (absent, violation);
            }
            if ladder[0] >= threshold {
                let spectrum = inverse_coords_d4(&OrbitCoords::new(x, y, z_lo)).ok();
                return (
                    SurfaceSample {
                        x,
                        y,
                        z: Some(z_lo),
                        spectrum,
                    },
                    violation,
                );
            }
            let (mut lo, mut hi) = (z_lo, z_hi);
            while hi - lo > 1e-4 {
                let mid = 0.5 * (lo + hi);
                if max_neg(mid) >= threshold {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let z = hi;
            let spectrum = inverse_coords_d4(&OrbitCoords::new(x, y, z)).ok();
            (
                SurfaceSample {
                    x,
                    y,
                    z: Some(z),
                    spectrum,
                },
                violation,
            )
        })
        .collect();

    let mut samples = Vec::with_capacity(results.len());
    let mut monotonicity_violations = Vec::new();
    for (s, v) in results {
        samples.push(s);
        if let Some(v) = v {
            monotonicity_violations.push(v);
        }
    }
    Ok(EquiNegativitySurface {
        level,
        samples,
        monotonicity_violations,
    })
}
