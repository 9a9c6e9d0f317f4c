//! Orbit identification via spectra, scalar orbit invariants, and the
//! orbit-space coordinate charts for d = 2 (line), d = 3 (triangle), and
//! d = 4 (tetrahedron).

use serde::Serialize;

use crate::density::{eig_hermitian, DensityMatrix};
use crate::{Error, Result};

const SQRT6: f64 = 2.449489742783178;
const SQRT2: f64 = std::f64::consts::SQRT_2;
const SQRT3: f64 = 1.7320508075688772;

/// Boundary clamp for floating-point dust on spectrum entries.
const CLAMP_TOL: f64 = 1e-12;

/// Descending-sorted probability vector; the canonical label of a unitary
/// orbit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    /// Validate an already-sorted probability vector.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidSpectrum("empty".into()));
        }
        if entries.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidSpectrum("not sorted descending".into()));
        }
        Self::from_probabilities(&entries)
    }

    /// Sort descending, clamp entries within `1e-12` of the [0,1] boundary,
    /// and renormalize to unit sum.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidSpectrum("empty".into()));
        }
        let mut entries = probs.to_vec();
        for e in &mut entries {
            if *e < 0.0 {
                if *e < -1e-9 {
                    return Err(Error::InvalidSpectrum(format!("negative entry {e:.3e}")));
                }
                *e = 0.0;
            } else if (*e - 1.0).abs() < CLAMP_TOL {
                *e = 1.0;
            } else if *e < CLAMP_TOL {
                *e = 0.0;
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidSpectrum(format!("sum = {sum}, expected 1")));
        }
        for e in &mut entries {
            *e /= sum;
        }
        entries.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self(entries))
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn uniform(dim: usize) -> Self {
        Self(vec![1.0 / dim as f64; dim])
    }

    pub fn pure(dim: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[0] = 1.0;
        Self(v)
    }
}

/// Point (x, y, z) in the ordered two-qubit tetrahedron.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitCoords {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl OrbitCoords {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// The ordered-chamber inequalities, each equivalent to one step of the
    /// eigenvalue ordering lambda_1 >= lambda_2 >= lambda_3 >= lambda_4 >= 0:
    ///   lambda_1 >= lambda_2  <=>  x >= 0
    ///   lambda_2 >= lambda_3  <=>  3*sqrt(2)*y >= sqrt(6)*x
    ///   lambda_3 >= lambda_4  <=>  4*z >= 2*sqrt(2)*y
    ///   lambda_4 >= 0         <=>  z <= 1/3
    pub fn chamber_check(&self, tol: f64) -> Result<()> {
        if self.x < -tol {
            return Err(Error::OutOfChamber {
                inequality: format!("x >= 0 (x = {})", self.x),
            });
        }
        if 3.0 * SQRT2 * self.y < SQRT6 * self.x - tol {
            return Err(Error::OutOfChamber {
                inequality: format!(
                    "3*sqrt(2)*y >= sqrt(6)*x (x = {}, y = {})",
                    self.x, self.y
                ),
            });
        }
        if 4.0 * self.z < 2.0 * SQRT2 * self.y - tol {
            return Err(Error::OutOfChamber {
                inequality: format!("4*z >= 2*sqrt(2)*y (y = {}, z = {})", self.y, self.z),
            });
        }
        if self.z > 1.0 / 3.0 + tol {
            return Err(Error::OutOfChamber {
                inequality: format!("z <= 1/3 (z = {})", self.z),
            });
        }
        Ok(())
    }

    pub fn in_chamber(&self, tol: f64) -> bool {
        self.chamber_check(tol).is_ok()
    }
}

/// Scalar invariants of an orbit. They do not identify orbits: two distinct
/// orbits can share either value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarMeasures {
    pub von_neumann_entropy: f64,
    pub purity: f64,
}

/// Sorted eigenvalues of a state, clamped and renormalized.
pub fn spectrum_of(rho: &DensityMatrix) -> Result<Spectrum> {
    let (vals, _) = eig_hermitian(rho.matrix())?;
    Spectrum::from_probabilities(&vals)
}

/// Whether two states lie on the same unitary orbit, i.e. share a spectrum.
pub fn same_orbit(rho1: &DensityMatrix, rho2: &DensityMatrix, tol: f64) -> Result<bool> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho1.dim(),
            got: rho2.dim(),
        });
    }
    let s1 = spectrum_of(rho1)?;
    let s2 = spectrum_of(rho2)?;
    let max_diff = s1
        .entries()
        .iter()
        .zip(s2.entries())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(max_diff <= tol)
}

/// Von Neumann entropy in nats, with 0 ln 0 = 0.
pub fn entropy(s: &Spectrum) -> f64 {
    s.entries()
        .iter()
        .map(|&l| if l > 0.0 { -l * l.ln() } else { 0.0 })
        .sum()
}

pub fn purity(s: &Spectrum) -> f64 {
    s.entries().iter().map(|&l| l * l).sum()
}

pub fn scalar_measures(s: &Spectrum) -> ScalarMeasures {
    ScalarMeasures {
        von_neumann_entropy: entropy(s),
        purity: purity(s),
    }
}

/// d = 2 chart: the Bloch sphere collapses to the line r = lambda_1 - lambda_2,
/// with the fully mixed point at 0 and pure states at 1.
pub fn coords_d2(s: &Spectrum) -> Result<f64> {
    if s.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: s.len(),
        });
    }
    Ok(s.entries()[0] - s.entries()[1])
}

/// d = 3 chart: barycentric embedding into an equilateral triangle with unit
/// side, fully mixed at the centroid, pure vertex at the apex.
pub fn coords_d3(s: &Spectrum) -> Result<(f64, f64)> {
    if s.len() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: s.len(),
        });
    }
    // Vertices: apex (0, 1/sqrt(3)); base (-1/2, -1/(2 sqrt 3)), (1/2, -1/(2 sqrt 3)).
    let verts = [
        (0.0, 1.0 / SQRT3),
        (-0.5, -0.5 / SQRT3),
        (0.5, -0.5 / SQRT3),
    ];
    let l = s.entries();
    let u = l[0] * verts[0].0 + l[1] * verts[1].0 + l[2] * verts[2].0;
    let v = l[0] * verts[0].1 + l[1] * verts[1].1 + l[2] * verts[2].1;
    Ok((u, v))
}

/// d = 4 chart: the unique (x, y, z) with
///   lambda_1 = (1 + sqrt6 x + sqrt2 y + z) / 4
///   lambda_2 = (1 - sqrt6 x + sqrt2 y + z) / 4
///   lambda_3 = (1 - 2 sqrt2 y + z) / 4
///   lambda_4 = (1 - 3 z) / 4
pub fn coords_d4(s: &Spectrum) -> Result<OrbitCoords> {
    if s.len() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: s.len(),
        });
    }
    let l = s.entries();
    let z = (1.0 - 4.0 * l[3]) / 3.0;
    let y = (1.0 + z - 4.0 * l[2]) / (2.0 * SQRT2);
    let x = (4.0 * l[0] - 1.0 - SQRT2 * y - z) / SQRT6;
    Ok(OrbitCoords::new(x, y, z))
}

/// Inverse of the d = 4 chart; rejects points outside the ordered chamber.
pub fn inverse_coords_d4(c: &OrbitCoords) -> Result<Spectrum> {
    c.chamber_check(1e-9)?;
    let l1 = (1.0 + SQRT6 * c.x + SQRT2 * c.y + c.z) / 4.0;
    let l2 = (1.0 - SQRT6 * c.x + SQRT2 * c.y + c.z) / 4.0;
    let l3 = (1.0 - 2.0 * SQRT2 * c.y + c.z) / 4.0;
    let l4 = (1.0 - 3.0 * c.z) / 4.0;
    Spectrum::from_probabilities(&[l1, l2, l3, l4])
}
