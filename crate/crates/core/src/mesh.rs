//! Forward model of integrated interferometers: ordered beam-splitter and
//! phase-shifter elements composing an `m x m` unitary.
//!
//! A beam splitter on modes `(a, b)` with Euler angle `beta` applies
//!
//! ```text
//! [ cos(beta/2)    i sin(beta/2) ]
//! [ i sin(beta/2)  cos(beta/2)   ]
//! ```
//!
//! so its transmittivity is `eta = cos²(beta/2)`. A phase shifter multiplies
//! one mode by `e^{i alpha}`; two-mode phase pairs are represented as two
//! single-mode elements and global phase is not tracked.

use crate::matfunc::ComplexMatrix;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One optical element. Modes are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum MeshElement {
    #[serde(rename = "bs")]
    BeamSplitter { a: usize, b: usize, beta: f64 },
    #[serde(rename = "ps")]
    PhaseShifter { mode: usize, alpha: f64 },
}

impl MeshElement {
    fn check(&self, m: usize) -> Result<()> {
        match *self {
            MeshElement::BeamSplitter { a, b, beta } => {
                if a < 1 || a > m || b < 1 || b > m || a == b {
                    return Err(Error::InvalidValue(format!(
                        "beam splitter needs two distinct modes in 1..={m}, got ({a},{b})"
                    )));
                }
                if !beta.is_finite() {
                    return Err(Error::Numeric("beam splitter angle must be finite".into()));
                }
            }
            MeshElement::PhaseShifter { mode, alpha } => {
                if mode < 1 || mode > m {
                    return Err(Error::InvalidValue(format!(
                        "phase shifter mode must lie in 1..={m}, got {mode}"
                    )));
                }
                if !alpha.is_finite() {
                    return Err(Error::Numeric("phase must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

/// An ordered mesh; the first element acts first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferometerMesh {
    pub m: usize,
    pub elements: Vec<MeshElement>,
}

impl InterferometerMesh {
    pub fn new(m: usize, elements: Vec<MeshElement>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidValue("mesh needs at least one mode".into()));
        }
        for e in &elements {
            e.check(m)?;
        }
        Ok(Self { m, elements })
    }

    /// Number of beam splitters followed by number of phase shifters.
    pub fn element_counts(&self) -> (usize, usize) {
        let bs = self
            .elements
            .iter()
            .filter(|e| matches!(e, MeshElement::BeamSplitter { .. }))
            .count();
        (bs, self.elements.len() - bs)
    }
}

/// Unitary of a single element embedded in `m` modes.
pub fn element_unitary(e: &MeshElement, m: usize) -> Result<ComplexMatrix> {
    e.check(m)?;
    let mut u = ComplexMatrix::identity(m);
    match *e {
        MeshElement::BeamSplitter { a, b, beta } => {
            let (c, s) = ((beta / 2.0).cos(), (beta / 2.0).sin());
            let (a, b) = (a - 1, b - 1);
            u.set(a, a, Complex64::new(c, 0.0));
            u.set(a, b, Complex64::new(0.0, s));
            u.set(b, a, Complex64::new(0.0, s));
            u.set(b, b, Complex64::new(c, 0.0));
        }
        MeshElement::PhaseShifter { mode, alpha } => {
            u.set(mode - 1, mode - 1, Complex64::from_polar(1.0, alpha));
        }
    }
    Ok(u)
}

/// Composes a mesh into its `m x m` unitary: the ordered left-product of the
/// element unitaries, so `unitary(A ++ B) = unitary(B) · unitary(A)`.
pub fn mesh_to_unitary(mesh: &InterferometerMesh) -> Result<ComplexMatrix> {
    if mesh.elements.is_empty() {
        return Err(Error::InvalidValue("mesh has no elements".into()));
    }
    let mut u = ComplexMatrix::identity(mesh.m);
    for e in &mesh.elements {
        u = element_unitary(e, mesh.m)?.mul(&u);
    }
    let dev = u.unitarity_deviation();
    if dev > 1e-9 {
        return Err(Error::Numeric(format!(
            "accumulated non-unitarity {dev:.3e} exceeds 1e-9"
        )));
    }
    Ok(u)
}
