//! Atom positions, registers and the machine's geometric limits.
//!
//! All lengths are micrometres.

use serde::{Deserialize, Serialize};

use crate::program::ProgramError;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Position<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn offset(&self, dx: T, dy: T) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

/// Rectangular field of view `[0, field_width] × [0, field_height]` plus
/// spacing and capacity limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineConstraints<T> {
    pub field_width: T,
    pub field_height: T,
    pub min_spacing: T,
    pub max_atoms: usize,
}

impl<T: Real> MachineConstraints<T> {
    pub fn new(
        field_width: T,
        field_height: T,
        min_spacing: T,
        max_atoms: usize,
    ) -> Result<Self, ProgramError> {
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !(positive(field_width) && positive(field_height) && positive(min_spacing))
            || max_atoms == 0
        {
            return Err(ProgramError::InvalidConstraints);
        }
        Ok(Self {
            field_width,
            field_height,
            min_spacing,
            max_atoms,
        })
    }

    pub fn contains(&self, p: &Position<T>) -> bool {
        p.x >= T::zero() && p.y >= T::zero() && p.x <= self.field_width && p.y <= self.field_height
    }
}

impl<T: Real> Default for MachineConstraints<T> {
    fn default() -> Self {
        Self {
            field_width: T::lit(75.0),
            field_height: T::lit(76.0),
            min_spacing: T::lit(4.0),
            max_atoms: 256,
        }
    }
}

/// Ordered atom sites. Qubit `k` is `sites[k]` for the life of a program.
#[derive(Debug, Clone, PartialEq)]
pub struct Register<T> {
    sites: Vec<Position<T>>,
}

impl<T: Real> Register<T> {
    pub fn new(sites: Vec<Position<T>>) -> Result<Self, ProgramError> {
        if sites.is_empty() {
            return Err(ProgramError::EmptyRegister);
        }
        if let Some(site) = sites.iter().position(|p| !p.is_finite()) {
            return Err(ProgramError::NonFiniteSite { site });
        }
        Ok(Self { sites })
    }

    pub fn sites(&self) -> &[Position<T>] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn translated(&self, dx: T, dy: T) -> Self {
        Self {
            sites: self.sites.iter().map(|p| p.offset(dx, dy)).collect(),
        }
    }

    pub fn centroid(&self) -> Position<T> {
        let n = T::from_usize(self.sites.len()).expect("site count fits");
        let sx: T = self.sites.iter().map(|p| p.x).sum();
        let sy: T = self.sites.iter().map(|p| p.y).sum();
        Position::new(sx / n, sy / n)
    }

    /// Row-major `N × N` matrix of pairwise Euclidean distances.
    pub fn distance_matrix(&self) -> Vec<T> {
        let n = self.sites.len();
        let mut d = vec![T::zero(); n * n];
        for j in 0..n {
            for k in 0..n {
                d[j * n + k] = self.sites[j].distance(&self.sites[k]);
            }
        }
        d
    }

    /// Closest pair `(j, k, distance)` with `j < k`, or `None` for one site.
    pub fn closest_pair(&self) -> Option<(usize, usize, T)> {
        let mut best: Option<(usize, usize, T)> = None;
        for j in 0..self.sites.len() {
            for k in j + 1..self.sites.len() {
                let d = self.sites[j].distance(&self.sites[k]);
                if best.is_none_or(|(_, _, b)| d < b) {
                    best = Some((j, k, d));
                }
            }
        }
        best
    }

    /// Checks field of view, spacing and capacity.
    pub fn check(&self, constraints: &MachineConstraints<T>) -> Result<(), ProgramError> {
        if self.sites.len() > constraints.max_atoms {
            return Err(ProgramError::TooManyAtoms {
                atoms: self.sites.len(),
                max: constraints.max_atoms,
            });
        }
        if let Some(site) = self.sites.iter().position(|p| !constraints.contains(p)) {
            let p = self.sites[site];
            return Err(ProgramError::OutOfField {
                site,
                x: p.x.as_f64(),
                y: p.y.as_f64(),
            });
        }
        for j in 0..self.sites.len() {
            for k in j + 1..self.sites.len() {
                let d = self.sites[j].distance(&self.sites[k]);
                if d < constraints.min_spacing - T::lit(SPACING_SLACK_UM) {
                    return Err(ProgramError::SpacingViolation {
                        first: j,
                        second: k,
                        distance: d.as_f64(),
                        min_spacing: constraints.min_spacing.as_f64(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Equilateral triangle with one corner at `origin` and a flat base.
///
/// Sites are `origin`, `origin + (side, 0)` and the apex
/// `origin + (side/2, side·√3/2)`. The apex, index [`TRIANGLE_TOP`], is the
/// "top qubit".
pub fn make_triangle_register<T: Real>(
    side: T,
    origin: Position<T>,
) -> Result<Register<T>, ProgramError> {
    if !(side.is_finite() && side > T::zero()) {
        return Err(ProgramError::InvalidSide);
    }
    let half = side / T::lit(2.0);
    let height = side * T::lit(3.0).sqrt() / T::lit(2.0);
    Register::new(vec![
        origin,
        origin.offset(side, T::zero()),
        origin.offset(half, height),
    ])
}

/// Index of the apex of a register built by [`make_triangle_register`].
pub const TRIANGLE_TOP: usize = 2;

/// Rounding allowance on the spacing check, µm; layouts built at exactly the
/// minimum spacing land a few ulps short of it.
pub const SPACING_SLACK_UM: f64 = 1e-9;
