//! Which orbits contain product states: the spectral factorization test,
//! the product surface in the two-qubit tetrahedron, and product-orbit
//! manifold dimensions with a numerical rank cross-check.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::density::RandomSource;
use crate::orbits::{inverse_coords_d4, OrbitCoords, Spectrum};
use crate::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;
const SQRT3: f64 = 1.7320508075688772;

/// Exhaustive-search bound on the composite dimension.
pub const CAPACITY: usize = 12;

/// Marginal spectra whose sorted outer product reproduces a composite
/// spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct Factorization {
    pub marginals: Vec<Spectrum>,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionReport {
    pub subsystem_dims: Vec<usize>,
    pub product_orbit_dim: usize,
    pub ambient_dim: usize,
}

/// One grid sample of an implicit surface in the tetrahedron. `z` is absent
/// where no valid surface point exists above (x, y).
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceSample {
    pub x: f64,
    pub y: f64,
    pub z: Option<f64>,
    pub spectrum: Option<Spectrum>,
}

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need nx, ny >= 2, got {}x{}",
                self.nx, self.ny
            )));
        }
        if self.x_range.1 <= self.x_range.0 || self.y_range.1 <= self.y_range.0 {
            return Err(Error::InvalidGrid("degenerate range".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(self.nx * self.ny);
        for iy in 0..self.ny {
            let y = self.y_range.0
                + (self.y_range.1 - self.y_range.0) * iy as f64 / (self.ny - 1) as f64;
            for ix in 0..self.nx {
                let x = self.x_range.0
                    + (self.x_range.1 - self.x_range.0) * ix as f64 / (self.nx - 1) as f64;
                pts.push((x, y));
            }
        }
        pts
    }
}

/// Enumerate partitions of 0..n into unordered groups of size `group`,
/// calling `f` on each. The group containing the smallest unused index is
/// always emitted next, so each partition appears exactly once.
fn for_each_partition(n: usize, group: usize, f: &mut impl FnMut(&[Vec<usize>])) {
    fn rec(
        remaining: &mut Vec<usize>,
        group: usize,
        acc: &mut Vec<Vec<usize>>,
        f: &mut impl FnMut(&[Vec<usize>]),
    ) {
        if remaining.is_empty() {
            f(acc);
            return;
        }
        let anchor = remaining[0];
        let rest: Vec<usize> = remaining[1..].to_vec();
        // Choose group-1 companions for the anchor.
        let mut combo = vec![0usize; group - 1];
        choose(&rest, group - 1, 0, &mut combo, 0, &mut |chosen| {
            let mut row = vec![anchor];
            row.extend_from_slice(chosen);
            let mut next: Vec<usize> = rest
                .iter()
                .cloned()
                .filter(|i| !chosen.contains(i))
                .collect();
            acc.push(row);
            rec(&mut next, group, acc, f);
            acc.pop();
        });
    }

    fn choose(
        pool: &[usize],
        k: usize,
        start: usize,
        buf: &mut Vec<usize>,
        depth: usize,
        f: &mut impl FnMut(&[usize]),
    ) {
        if depth == k {
            f(&buf[..k]);
            return;
        }
        for i in start..pool.len() {
            buf[depth] = pool[i];
            choose(pool, k, i + 1, buf, depth + 1, f);
        }
    }

    let mut remaining: Vec<usize> = (0..n).collect();
    rec(&mut remaining, group, &mut Vec::new(), f);
}

/// Rank-1 test of a candidate grid: rows sorted descending, marginals read
/// off as row/column sums, every entry checked against a_i * b_j with an
/// absolute 1e-12 floor on top of `tol` so exact zeros survive.
fn grid_residual(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>, f64) {
    let da = rows.len();
    let db = rows[0].len();
    let a: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    let mut b = vec![0.0; db];
    for row in rows {
        for (j, v) in row.iter().enumerate() {
            b[j] += v;
        }
    }
    let mut residual: f64 = 0.0;
    for i in 0..da {
        for j in 0..db {
            residual = residual.max((rows[i][j] - a[i] * b[j]).abs());
        }
    }
    (a, b, residual)
}

/// Decide whether a composite spectrum is the outer product of a dA- and a
/// dB-marginal; exhaustive over grid assignments up to permutation symmetry.
pub fn factor_bipartite(
    s: &Spectrum,
    da: usize,
    db: usize,
    tol: f64,
) -> Result<Option<Factorization>> {
    let n = da * db;
    if s.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s.len(),
        });
    }
    if n > CAPACITY {
        return Err(Error::CapacityExceeded {
            got: n,
            limit: CAPACITY,
        });
    }
    let entries = s.entries();
    let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    for_each_partition(n, db, &mut |groups| {
        // Entries are sorted descending, so ascending indices within a group
        // give a descending row; rows then sort descending by leading entry.
        let mut rows: Vec<Vec<f64>> = groups
            .iter()
            .map(|g| g.iter().map(|&i| entries[i]).collect())
            .collect();
        rows.sort_by(|r1, r2| r2[0].partial_cmp(&r1[0]).unwrap());
        let (a, b, residual) = grid_residual(&rows);
        if best.as_ref().map_or(true, |(_, _, r)| residual < *r) {
            best = Some((a, b, residual));
        }
    });
    let (a, b, residual) = best.expect("at least one partition");
    let floor = 1e-12f64.max(tol);
    if residual <= floor {
        Ok(Some(Factorization {
            marginals: vec![Spectrum::from_probabilities(&a)?, Spectrum::from_probabilities(&b)?],
            residual,
        }))
    } else {
        Ok(None)
    }
}

/// n-partite factorization by recursive bipartite splits: first factor
/// against the rest, then descend into the rest.
pub fn factor_multipartite(
    s: &Spectrum,
    dims: &[usize],
    tol: f64,
) -> Result<Option<Factorization>> {
    let n: usize = dims.iter().product();
    if dims.is_empty() || s.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n.max(1),
            got: s.len(),
        });
    }
    if n > CAPACITY {
        return Err(Error::CapacityExceeded {
            got: n,
            limit: CAPACITY,
        });
    }
    if dims.len() == 1 {
        return Ok(Some(Factorization {
            marginals: vec![s.clone()],
            residual: 0.0,
        }));
    }
    let rest: usize = dims[1..].iter().product();
    let Some(split) = factor_bipartite(s, dims[0], rest, tol)? else {
        return Ok(None);
    };
    let Some(tail) = factor_multipartite(&split.marginals[1], &dims[1..], tol)? else {
        return Ok(None);
    };
    let mut marginals = vec![split.marginals[0].clone()];
    marginals.extend(tail.marginals);
    Ok(Some(Factorization {
        marginals,
        residual: split.residual.max(tail.residual),
    }))
}

/// Height of the product surface above (x, y): the larger root of
/// z^2 + z + (1/sqrt2)(z - 1)(sqrt3 x + y) + sqrt3 x y - y^2 = 0,
/// accepted only when it lies in the ordered chamber and yields a valid
/// spectrum.
pub fn product_surface_z(x: f64, y: f64) -> Option<f64> {
    let s = (SQRT3 * x + y) / SQRT2;
    let b = 1.0 + s;
    let c = -s + SQRT3 * x * y - y * y;
    let disc = b * b - 4.0 * c;
    if disc < 0.0 {
        return None;
    }
    let z = (-b + disc.sqrt()) / 2.0;
    let coords = OrbitCoords::new(x, y, z);
    if !coords.in_chamber(1e-9) {
        return None;
    }
    inverse_coords_d4(&coords).ok().map(|_| z)
}

/// Residual of the surface constraint at (x, y, z); zero on the surface.
pub fn surface_constraint_residual(x: f64, y: f64, z: f64) -> f64 {
    z * z + z + (z - 1.0) * (SQRT3 * x + y) / SQRT2 + SQRT3 * x * y - y * y
}

pub fn sample_product_surface(grid: &GridSpec) -> Result<Vec<SurfaceSample>> {
    grid.validate()?;
    Ok(grid
        .points()
        .into_iter()
        .map(|(x, y)| {
            let z = product_surface_z(x, y);
            let spectrum =
                z.and_then(|z| inverse_coords_d4(&OrbitCoords::new(x, y, z)).ok());
            SurfaceSample { x, y, z, spectrum }
        })
        .collect())
}

/// The dimension-count formulas: product orbits form a (sum d_i - n)
/// dimensional surface in the (prod d_i - 1) dimensional orbit manifold.
pub fn product_orbit_dims(dims: &[usize]) -> Result<DimensionReport> {
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(Error::InvalidState(format!(
            "subsystem dims must all be >= 2, got {dims:?}"
        )));
    }
    Ok(DimensionReport {
        subsystem_dims: dims.to_vec(),
        product_orbit_dim: dims.iter().sum::<usize>() - dims.len(),
        ambient_dim: dims.iter().product::<usize>() - 1,
    })
}

/// Outer product of full marginal vectors, marginals given by their free
/// simplex parameters (last entry implied).
fn outer_from_params(dims: &[usize], theta: &[f64]) -> Vec<f64> {
    let mut marginals: Vec<Vec<f64>> = Vec::with_capacity(dims.len());
    let mut k = 0;
    for &d in dims {
        let head = &theta[k..k + d - 1];
        let mut v = head.to_vec();
        v.push(1.0 - head.iter().sum::<f64>());
        marginals.push(v);
        k += d - 1;
    }
    let mut out = vec![1.0];
    for m in &marginals {
        let mut next = Vec::with_capacity(out.len() * m.len());
        for &o in &out {
            for &e in m {
                next.push(o * e);
            }
        }
        out = next;
    }
    out
}

/// Numerical rank of the Jacobian of (marginal parameters) -> (outer-product
/// spectrum) at random interior points; returns the modal rank over trials.
pub fn estimate_dimension(dims: &[usize], rs: RandomSource, trials: usize) -> Result<usize> {
    let n: usize = dims.iter().product();
    if n > CAPACITY {
        return Err(Error::CapacityExceeded {
            got: n,
            limit: CAPACITY,
        });
    }
    product_orbit_dims(dims)?;
    let k: usize = dims.iter().map(|&d| d - 1).sum();
    let h = 1e-6;
    let mut counts = std::collections::HashMap::new();
    for t in 0..trials.max(1) {
        // Interior nondegenerate point: every marginal entry well away from
        // zero and from its neighbors.
        let theta = loop {
            let mut theta = Vec::with_capacity(k);
            let mut ok = true;
            for (i, &d) in dims.iter().enumerate() {
                let sub = crate::density::random_spectrum(
                    d,
                    rs.split((t * dims.len() + i) as u64),
                )?;
                let e = sub.entries();
                if e[d - 1] < 0.05 || e.windows(2).any(|w| w[0] - w[1] < 1e-3) {
                    ok = false;
                }
                theta.extend_from_slice(&e[..d - 1]);
            }
            if ok {
                break theta;
            }
            // Degenerate draw; perturb deterministically toward the interior.
            let mut fallback = Vec::with_capacity(k);
            let mut idx = 0usize;
            for &d in dims {
                for j in 0..d - 1 {
                    let base = 1.0 / d as f64;
                    fallback.push(base + 0.1 * base * (1.0 + idx as f64 + j as f64) / k as f64);
                }
                idx += 1;
            }
            break fallback;
        };
        let mut jac = DMatrix::zeros(n, k);
        for col in 0..k {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[col] += h;
            minus[col] -= h;
            let fp = outer_from_params(dims, &plus);
            let fm = outer_from_params(dims, &minus);
            for row in 0..n {
                jac[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        let svals = jac.svd(false, false).singular_values;
        let smax = svals.iter().cloned().fold(0.0, f64::max);
        let rank = svals.iter().filter(|&&s| s > 1e-8 * smax).count();
        *counts.entry(rank).or_insert(0usize) += 1;
    }
    Ok(counts
        .into_iter()
        .max_by_key(|&(rank, count)| (count, rank))
        .map(|(rank, _)| rank)
        .unwrap_or(0))
}
