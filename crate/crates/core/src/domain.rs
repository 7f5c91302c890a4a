//! Axis-aligned bounding boxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The bounding set `B = [l_1, u_1] x ... x [l_n, u_n]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawBox> for BoxDomain {
    type Error = Error;

    fn try_from(raw: RawBox) -> Result<Self> {
        BoxDomain::new(raw.lower, raw.upper)
    }
}

impl From<BoxDomain> for RawBox {
    fn from(b: BoxDomain) -> Self {
        RawBox { lower: b.lower, upper: b.upper }
    }
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidBox("box must have at least one axis".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), found: upper.len() });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidBox(format!("axis {i} has a non-finite bound")));
            }
            if l >= u {
                return Err(Error::InvalidBox(format!("axis {i}: lower {l} is not below upper {u}")));
            }
        }
        Ok(BoxDomain { lower, upper })
    }

    /// The box `[lo, hi]^n`.
    pub fn cube(dimension: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dimension], vec![hi; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dimension()).map(|i| self.width(i)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// Scales every axis about its midpoint by `factor`.
    pub fn inflate(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidArgument(format!("inflation factor must be positive, got {factor}")));
        }
        if factor == 1.0 {
            return Ok(self.clone());
        }
        let (lower, upper) = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| {
                let mid = 0.5 * (l + u);
                let half = 0.5 * (u - l) * factor;
                (mid - half, mid + half)
            })
            .unzip();
        Self::new(lower, upper)
    }

    pub fn translate(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), found: shift.len() });
        }
        Self::new(
            self.lower.iter().zip(shift).map(|(l, t)| l + t).collect(),
            self.upper.iter().zip(shift).map(|(u, t)| u + t).collect(),
        )
    }

    /// Affine map of coordinate `x` on `axis` onto `[-1, 1]`.
    #[inline]
    pub fn to_unit(&self, axis: usize, x: f64) -> f64 {
        let (l, u) = (self.lower[axis], self.upper[axis]);
        (2.0 * x - (l + u)) / (u - l)
    }

    /// Inverse of [`BoxDomain::to_unit`].
    #[inline]
    pub fn from_unit(&self, axis: usize, t: f64) -> f64 {
        let (l, u) = (self.lower[axis], self.upper[axis]);
        0.5 * (l + u) + 0.5 * (u - l) * t
    }
}
