//! Riemannian SGD for tangent-parameterized hyperboloid embeddings.
//!
//! Every parameter row `w` induces the point `x = exp_o((0, w))`. The default
//! update works directly on `w` (the RSGD step at base `o`); the full path
//! lifts the gradient to `x`, takes the exponential-map step at `x` and pulls
//! the result back with `log_o`. Both coincide at the origin.

use ndarray::Array2;

use crate::encoder::EmbeddingTable;
use crate::error::{HrcfError, Result};
use crate::manifold::{
    euclid_norm, exp_at, exp_origin_into, log_origin, log_origin_into, lorentz_inner_slice,
    HyperbolicPoint, TangentVector, SHEET_TOLERANCE,
};
use crate::objective::EmbeddingGrad;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub step_count: u64,
    /// Use the exponential map at each point instead of the tangent shortcut.
    pub full_rsgd: bool,
}

impl OptimizerState {
    pub fn new(learning_rate: f64, weight_decay: f64, full_rsgd: bool) -> Result<Self> {
        if !(learning_rate > 0.0) || !learning_rate.is_finite() {
            return Err(HrcfError::Config(format!("learning rate must be > 0, got {learning_rate}")));
        }
        if !(weight_decay >= 0.0) {
            return Err(HrcfError::Config(format!("weight decay must be >= 0, got {weight_decay}")));
        }
        Ok(Self {
            learning_rate,
            weight_decay,
            step_count: 0,
            full_rsgd,
        })
    }

    /// Applies one update to every parameter row.
    pub fn step(&mut self, table: &mut EmbeddingTable, grad: &EmbeddingGrad) -> Result<()> {
        if table.users.dim() != grad.users.dim() || table.items.dim() != grad.items.dim() {
            return Err(HrcfError::Dimension {
                expected: table.users.len() + table.items.len(),
                got: grad.users.len() + grad.items.len(),
            });
        }
        self.update_block(&mut table.users, &grad.users)?;
        self.update_block(&mut table.items, &grad.items)?;
        self.step_count += 1;
        Ok(())
    }

    fn update_block(&self, params: &mut Array2<f64>, grad: &Array2<f64>) -> Result<()> {
        let (lr, wd) = (self.learning_rate, self.weight_decay);
        if !self.full_rsgd {
            // w <- w - lr * (g + wd * w)
            params.zip_mut_with(grad, |w, g| *w -= lr * (g + wd * *w));
            return Ok(());
        }
        let n = params.ncols();
        let mut x = vec![0.0; n + 1];
        let mut g = vec![0.0; n];
        for (mut w, gr) in params.rows_mut().into_iter().zip(grad.rows()) {
            let w = w.as_slice_mut().expect("contiguous");
            for ((gi, gri), wi) in g.iter_mut().zip(gr).zip(w.iter()) {
                *gi = gri + wd * wi;
            }
            exp_origin_into(w, &mut x);
            let ambient = ambient_grad_from_tangent(w, &g);
            let point = HyperbolicPoint::from_coords_unchecked(x.clone());
            let h = riemannian_grad(&point, &ambient)?;
            let next = rsgd_step(&point, &h, lr)?;
            log_origin_into(next.coords(), w);
        }
        Ok(())
    }
}

/// Euclidean gradient in ambient coordinates of `L(log_o(x))`, given the
/// gradient `g` with respect to `w = log_o(x)`. Uses the extension
/// `w(x) = asinh(|x_s|) x_s / |x_s|`, which does not depend on `x0`.
pub(crate) fn ambient_grad_from_tangent(w: &[f64], g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; w.len() + 1];
    let r = euclid_norm(w);
    if r < 1e-12 {
        out[1..].copy_from_slice(g);
        return out;
    }
    let s = r.sinh();
    let ug: f64 = w.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / r;
    let radial = 1.0 / (1.0 + s * s).sqrt();
    let lateral = r / s;
    for ((o, wi), gi) in out[1..].iter_mut().zip(w).zip(g) {
        let u = wi / r;
        *o = lateral * (gi - ug * u) + radial * ug * u;
    }
    out
}

/// Riemannian gradient `h = Jg + <x, Jg>_L x`, tangent at `x`.
pub fn riemannian_grad(x: &HyperbolicPoint, euclid_grad: &[f64]) -> Result<Vec<f64>> {
    let xc = x.coords();
    if euclid_grad.len() != xc.len() {
        return Err(HrcfError::Dimension {
            expected: xc.len(),
            got: euclid_grad.len(),
        });
    }
    let dev = x.sheet_deviation();
    if !(dev <= SHEET_TOLERANCE * xc[0].max(1.0).powi(2)) || xc[0] <= 0.0 {
        return Err(HrcfError::Constraint {
            inner: lorentz_inner_slice(xc, xc),
        });
    }
    let mut h = euclid_grad.to_vec();
    h[0] = -h[0];
    let c = lorentz_inner_slice(xc, &h);
    for (hi, xi) in h.iter_mut().zip(xc) {
        *hi += c * xi;
    }
    Ok(h)
}

/// `exp_x(-lr * rgrad)` before re-projection.
pub fn rsgd_step_unprojected(x: &HyperbolicPoint, rgrad: &[f64], lr: f64) -> Result<Vec<f64>> {
    let v: Vec<f64> = rgrad.iter().map(|g| -lr * g).collect();
    exp_at(x, &v)
}

/// `exp_x(-lr * rgrad)`, with `x0` recomputed from the spatial part so the
/// result lies exactly on the sheet.
pub fn rsgd_step(x: &HyperbolicPoint, rgrad: &[f64], lr: f64) -> Result<HyperbolicPoint> {
    let raw = rsgd_step_unprojected(x, rgrad, lr)?;
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(HrcfError::Numeric("RSGD step".into()));
    }
    Ok(HyperbolicPoint::from_spatial(&raw[1..]))
}

/// Weight-decay contribution `wd * log_o(x)` to the gradient of the tangent
/// parameter that induces `x`.
pub fn apply_weight_decay(x: &HyperbolicPoint, wd: f64) -> Result<TangentVector> {
    let v = log_origin(x)?;
    Ok(TangentVector::new(v.spatial().iter().map(|c| wd * c).collect()))
}
