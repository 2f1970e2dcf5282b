//! Hyperboloid (Lorentz) model with curvature -1.
//!
//! Points are `n + 1` coordinate vectors `x` with `<x,x>_L = -1` and `x[0] > 0`.
//! Tangent vectors at the origin `o = (1, 0, ..., 0)` are exactly the vectors
//! whose first coordinate is zero, so [`TangentVector`] only stores the `n`
//! spatial coordinates.
//!
//! The free functions operating on raw slices (`*_into`, `*_slice`) are the
//! kernels used by the encoder and optimizer hot loops; the typed wrappers
//! validate their inputs.

use crate::error::{HrcfError, Result};

/// Maximum allowed `|<x,x>_L + 1|` for a point to count as on-sheet.
pub const SHEET_TOLERANCE: f64 = 1e-6;

/// Below this Euclidean norm a tangent vector maps to the origin exactly.
pub const EXP_ZERO_NORM: f64 = 1e-12;

/// Clamp applied to `-<x,y>_L` before differentiating arcosh.
pub const GRAD_ARCOSH_CLAMP: f64 = 1.0 + 1e-12;

/// A point on the upper sheet of the unit hyperboloid.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperbolicPoint {
    coords: Vec<f64>,
}

/// A tangent vector at the origin. The time coordinate is structurally zero.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    spatial: Vec<f64>,
}

impl HyperbolicPoint {
    /// Validates `coords` against the sheet constraint.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(HrcfError::Dimension {
                expected: 2,
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(HrcfError::Numeric("hyperbolic point coordinates".into()));
        }
        let inner = lorentz_inner_slice(&coords, &coords);
        if coords[0] <= 0.0 || (inner + 1.0).abs() > SHEET_TOLERANCE {
            return Err(HrcfError::Constraint { inner });
        }
        Ok(Self { coords })
    }

    /// Wraps coordinates that are on-sheet by construction.
    pub(crate) fn from_coords_unchecked(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    /// The origin `o = (1, 0, ..., 0)` of `H^n`.
    pub fn origin(n: usize) -> Self {
        let mut coords = vec![0.0; n + 1];
        coords[0] = 1.0;
        Self { coords }
    }

    /// Lifts spatial coordinates onto the sheet by solving for `x[0]`.
    pub fn from_spatial(spatial: &[f64]) -> Self {
        let sq: f64 = spatial.iter().map(|s| s * s).sum();
        let mut coords = Vec::with_capacity(spatial.len() + 1);
        coords.push((1.0 + sq).sqrt());
        coords.extend_from_slice(spatial);
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Manifold dimension `n` (one less than the coordinate count).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// `|<x,x>_L + 1|`.
    pub fn sheet_deviation(&self) -> f64 {
        (lorentz_inner_slice(&self.coords, &self.coords) + 1.0).abs()
    }
}

impl TangentVector {
    pub fn new(spatial: Vec<f64>) -> Self {
        Self { spatial }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            spatial: vec![0.0; n],
        }
    }

    /// Accepts full `n + 1` coordinates; the first must be exactly zero.
    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        if coords.len() < 2 {
            return Err(HrcfError::Dimension {
                expected: 2,
                got: coords.len(),
            });
        }
        if coords[0] != 0.0 {
            return Err(HrcfError::Constraint { inner: coords[0] });
        }
        Ok(Self {
            spatial: coords[1..].to_vec(),
        })
    }

    pub fn spatial(&self) -> &[f64] {
        &self.spatial
    }

    /// Full coordinates `(0, w)`.
    pub fn coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.spatial.len() + 1);
        out.push(0.0);
        out.extend_from_slice(&self.spatial);
        out
    }

    /// Euclidean norm, which equals the Lorentz norm for vectors at `o`.
    pub fn norm(&self) -> f64 {
        euclid_norm(&self.spatial)
    }

    pub fn dim(&self) -> usize {
        self.spatial.len()
    }
}

/// `<x,y>_L = -x0*y0 + sum_i xi*yi`.
pub fn lorentz_inner(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(HrcfError::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(HrcfError::Dimension {
            expected: 2,
            got: x.len(),
        });
    }
    Ok(lorentz_inner_slice(x, y))
}

#[inline]
pub(crate) fn lorentz_inner_slice(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let spatial: f64 = x[1..].iter().zip(&y[1..]).map(|(a, b)| a * b).sum();
    spatial - x[0] * y[0]
}

#[inline]
pub(crate) fn euclid_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Exponential map at the origin.
pub fn exp_origin(v: &TangentVector) -> Result<HyperbolicPoint> {
    if v.spatial.iter().any(|c| !c.is_finite()) {
        return Err(HrcfError::Numeric("tangent vector".into()));
    }
    let mut out = vec![0.0; v.dim() + 1];
    exp_origin_into(&v.spatial, &mut out);
    Ok(HyperbolicPoint::from_coords_unchecked(out))
}

/// `out = (cosh r, sinh r * w / r)` with `r = |w|`; `out.len() == w.len() + 1`.
#[inline]
pub fn exp_origin_into(w: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len(), w.len() + 1);
    let r = euclid_norm(w);
    if r < EXP_ZERO_NORM {
        out[0] = 1.0;
        out[1..].iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    out[0] = r.cosh();
    let scale = r.sinh() / r;
    for (o, wi) in out[1..].iter_mut().zip(w) {
        *o = scale * wi;
    }
}

/// Logarithmic map at the origin.
pub fn log_origin(x: &HyperbolicPoint) -> Result<TangentVector> {
    if x.coords.iter().any(|c| !c.is_finite()) {
        return Err(HrcfError::Numeric("hyperbolic point".into()));
    }
    let inner = lorentz_inner_slice(&x.coords, &x.coords);
    if x.coords[0] <= 0.0 || (inner + 1.0).abs() > SHEET_TOLERANCE {
        return Err(HrcfError::Constraint { inner });
    }
    let mut spatial = vec![0.0; x.dim()];
    log_origin_into(&x.coords, &mut spatial);
    Ok(TangentVector { spatial })
}

/// Spatial part of `log_o(x)`; `out.len() == x.len() - 1`.
///
/// The radius is taken as `asinh(|x_s|)`, which agrees with `arcosh(x0)` on
/// the sheet and stays well conditioned next to the origin.
#[inline]
pub fn log_origin_into(x: &[f64], out: &mut [f64]) {
    let s = euclid_norm(&x[1..]);
    if s == 0.0 {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    let scale = s.asinh() / s;
    for (o, xi) in out.iter_mut().zip(&x[1..]) {
        *o = scale * xi;
    }
}

/// `arcosh(-<x,y>_L)`, argument clamped at 1.
pub fn geodesic_distance(x: &HyperbolicPoint, y: &HyperbolicPoint) -> Result<f64> {
    if x.coords.len() != y.coords.len() {
        return Err(HrcfError::Dimension {
            expected: x.coords.len(),
            got: y.coords.len(),
        });
    }
    let d = distance_slice(&x.coords, &y.coords);
    if !d.is_finite() {
        return Err(HrcfError::Numeric("geodesic distance".into()));
    }
    Ok(d)
}

#[inline]
pub(crate) fn distance_slice(x: &[f64], y: &[f64]) -> f64 {
    (-lorentz_inner_slice(x, y)).max(1.0).acosh()
}

/// Exponential map at an arbitrary base point `x` for `v` tangent at `x`.
///
/// Returns the raw result without re-projection so callers can measure drift.
pub fn exp_at(x: &HyperbolicPoint, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != x.coords.len() {
        return Err(HrcfError::Dimension {
            expected: x.coords.len(),
            got: v.len(),
        });
    }
    let vv = lorentz_inner_slice(v, v);
    if !vv.is_finite() {
        return Err(HrcfError::Numeric("tangent step norm".into()));
    }
    let norm = vv.max(0.0).sqrt();
    if norm < EXP_ZERO_NORM {
        return Ok(x.coords.clone());
    }
    let (c, s) = (norm.cosh(), norm.sinh() / norm);
    Ok(x.coords.iter().zip(v).map(|(xi, vi)| c * xi + s * vi).collect())
}

/// Ratio `d(x,y) / (d(x,o) + d(y,o))` for two points at distance `a` from the
/// origin whose tangent directions at `o` differ by `separation_angle`.
pub fn distance_ratio_diagnostic(a: f64, separation_angle: f64) -> f64 {
    let x = exp_origin(&TangentVector::new(vec![a, 0.0])).expect("finite radius");
    let y = exp_origin(&TangentVector::new(vec![
        a * separation_angle.cos(),
        a * separation_angle.sin(),
    ]))
    .expect("finite radius");
    let o = HyperbolicPoint::origin(2);
    let dxy = distance_slice(x.coords(), y.coords());
    let dxo = distance_slice(x.coords(), o.coords());
    let dyo = distance_slice(y.coords(), o.coords());
    dxy / (dxo + dyo)
}
