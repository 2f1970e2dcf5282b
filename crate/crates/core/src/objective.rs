//! Training objective: root alignment, origin-aware norm penalty, hyperbolic
//! margin ranking loss, and the analytic gradient of their combination with
//! respect to the layer-0 tangent parameters.

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{aggregate_transpose, tangent_sums, EmbeddingTable, EncoderOutput};
use crate::error::{HrcfError, Result};
use crate::graph::InteractionGraph;
use crate::manifold::{
    distance_slice, geodesic_distance, lorentz_inner_slice, HyperbolicPoint, GRAD_ARCOSH_CLAMP,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub user: usize,
    pub positive: usize,
    pub negative: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TripletBatch {
    pub triplets: Vec<Triplet>,
}

impl TripletBatch {
    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    /// Checks index ranges and that positives are train edges and negatives are not.
    pub fn validate(&self, graph: &InteractionGraph) -> Result<()> {
        for t in &self.triplets {
            check_index("user", t.user, graph.num_users())?;
            check_index("item", t.positive, graph.num_items())?;
            check_index("item", t.negative, graph.num_items())?;
            if !graph.user_adj().contains(t.user, t.positive) {
                return Err(HrcfError::Config(format!(
                    "({}, {}) is not a train edge",
                    t.user, t.positive
                )));
            }
            if graph.user_adj().contains(t.user, t.negative) {
                return Err(HrcfError::Config(format!(
                    "negative ({}, {}) is a train edge",
                    t.user, t.negative
                )));
            }
        }
        Ok(())
    }

    /// Splits into consecutive batches of at most `size` triplets.
    pub fn chunks(&self, size: usize) -> impl Iterator<Item = TripletBatch> + '_ {
        self.triplets.chunks(size.max(1)).map(|c| TripletBatch {
            triplets: c.to_vec(),
        })
    }
}

fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index >= len {
        Err(HrcfError::Index { what, index, len })
    } else {
        Ok(())
    }
}

/// One uniformly drawn negative per train positive, in shuffled order.
/// Users who interacted with every item contribute no triplets.
pub fn sample_triplets<R: Rng>(graph: &InteractionGraph, rng: &mut R) -> TripletBatch {
    let num_items = graph.num_items();
    let adj = graph.user_adj();
    let mut triplets = Vec::with_capacity(graph.train_edges().len());
    for &(user, positive) in graph.train_edges() {
        if adj.degree(user) >= num_items {
            continue;
        }
        let negative = loop {
            let j = rng.random_range(0..num_items);
            if !adj.contains(user, j) {
                break j;
            }
        };
        triplets.push(Triplet {
            user,
            positive,
            negative,
        });
    }
    triplets.shuffle(rng);
    TripletBatch { triplets }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub margin_loss: f64,
    pub reg_loss: f64,
    pub total: f64,
    /// Mean squared norm of the aligned tangent sums.
    pub mean_sq_norm: f64,
}

impl LossReport {
    pub fn is_finite(&self) -> bool {
        self.margin_loss.is_finite()
            && self.reg_loss.is_finite()
            && self.total.is_finite()
            && self.mean_sq_norm.is_finite()
    }
}

/// How per-triplet hinge losses are combined within a batch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    #[default]
    Mean,
    Sum,
}

impl std::str::FromStr for Reduction {
    type Err = HrcfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Reduction::Mean),
            "sum" => Ok(Reduction::Sum),
            other => Err(HrcfError::Config(format!("unknown loss reduction {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveParams {
    pub margin: f64,
    pub lambda: f64,
    pub layers: usize,
    pub include_layer0: bool,
    pub reduction: Reduction,
}

impl ObjectiveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0) {
            return Err(HrcfError::Config(format!("margin must be > 0, got {}", self.margin)));
        }
        if !(self.lambda >= 0.0) {
            return Err(HrcfError::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.layers == 0 {
            return Err(HrcfError::Config("layers must be >= 1".into()));
        }
        Ok(())
    }
}

/// Arithmetic mean of all rows.
pub fn compute_root(rows: ArrayView2<f64>) -> Result<Array1<f64>> {
    rows.mean_axis(Axis(0))
        .ok_or_else(|| HrcfError::EmptyDataset("cannot take the root of zero rows".into()))
}

/// Subtracts `root` from every row.
pub fn align_root(rows: ArrayView2<f64>, root: ArrayView1<f64>) -> Result<Array2<f64>> {
    if rows.ncols() != root.len() {
        return Err(HrcfError::Dimension {
            expected: rows.ncols(),
            got: root.len(),
        });
    }
    Ok(&rows - &root)
}

/// Returns `(mean squared row norm, its inverse square root)`.
pub fn reg_loss(aligned: ArrayView2<f64>) -> Result<(f64, f64)> {
    if aligned.nrows() == 0 {
        return Err(HrcfError::EmptyDataset("no rows for the norm penalty".into()));
    }
    let mean_sq = aligned.iter().map(|v| v * v).sum::<f64>() / aligned.nrows() as f64;
    if mean_sq == 0.0 {
        return Err(HrcfError::DegenerateEmbedding);
    }
    Ok((mean_sq, mean_sq.powf(-0.5)))
}

/// Preference score `-d^2(u, i)`.
pub fn score(user: &HyperbolicPoint, item: &HyperbolicPoint) -> Result<f64> {
    let d = geodesic_distance(user, item)?;
    Ok(-d * d)
}

#[inline]
fn squared_distance(x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
    let d = distance_slice(
        x.as_slice().expect("contiguous row"),
        y.as_slice().expect("contiguous row"),
    );
    d * d
}

/// Mean hinge `max(d^2(u,i) - d^2(u,j) + m, 0)` over the batch.
pub fn margin_loss(
    batch: &TripletBatch,
    users: ArrayView2<f64>,
    items: ArrayView2<f64>,
    margin: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for t in &batch.triplets {
        check_index("user", t.user, users.nrows())?;
        check_index("item", t.positive, items.nrows())?;
        check_index("item", t.negative, items.nrows())?;
        let u = users.row(t.user);
        let pos = squared_distance(u, items.row(t.positive));
        let neg = squared_distance(u, items.row(t.negative));
        total += (pos - neg + margin).max(0.0);
    }
    Ok(total / batch.len() as f64)
}

/// Encoder output after root alignment, plus the root and the stacked
/// aligned tangent sums (users first).
#[derive(Clone, Debug)]
pub struct AlignedForward {
    pub output: EncoderOutput,
    pub root: Array1<f64>,
}

impl AlignedForward {
    pub fn stacked_tangent(&self) -> Array2<f64> {
        concatenate![
            Axis(0),
            self.output.user_tangent_sum.view(),
            self.output.item_tangent_sum.view()
        ]
    }
}

/// encode -> root -> align -> exp. This is what both training and
/// evaluation see.
pub fn forward(
    graph: &InteractionGraph,
    table: &EmbeddingTable,
    layers: usize,
    include_layer0: bool,
) -> Result<AlignedForward> {
    let (us, is) = tangent_sums(graph, table, layers, include_layer0)?;
    let stacked = concatenate![Axis(0), us.view(), is.view()];
    let root = compute_root(stacked.view())?;
    let aligned = align_root(stacked.view(), root.view())?;
    let nu = graph.num_users();
    let users = aligned.slice(s![..nu, ..]).to_owned();
    let items = aligned.slice(s![nu.., ..]).to_owned();
    Ok(AlignedForward {
        output: EncoderOutput::from_tangent_sums(users, items),
        root,
    })
}

/// Gradient with respect to the layer-0 parameters of an [`EmbeddingTable`].
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingGrad {
    pub users: Array2<f64>,
    pub items: Array2<f64>,
}

impl EmbeddingGrad {
    pub fn is_finite(&self) -> bool {
        self.users.iter().chain(self.items.iter()).all(|v| v.is_finite())
    }
}

fn hinge_weight(batch: &TripletBatch, reduction: Reduction) -> f64 {
    match reduction {
        Reduction::Mean => 1.0 / batch.len().max(1) as f64,
        Reduction::Sum => 1.0,
    }
}

/// Loss only; see [`loss_and_grad`].
pub fn total_loss(
    graph: &InteractionGraph,
    table: &EmbeddingTable,
    batch: &TripletBatch,
    params: &ObjectiveParams,
) -> Result<LossReport> {
    params.validate()?;
    let fwd = forward(graph, table, params.layers, params.include_layer0)?;
    let hinge = margin_loss(
        batch,
        fwd.output.user_hyperbolic.view(),
        fwd.output.item_hyperbolic.view(),
        params.margin,
    )?;
    let margin = match params.reduction {
        Reduction::Mean => hinge,
        Reduction::Sum => hinge * batch.len() as f64,
    };
    let (mean_sq_norm, reg) = reg_loss(fwd.stacked_tangent().view())?;
    Ok(LossReport {
        margin_loss: margin,
        reg_loss: reg,
        total: margin + params.lambda * reg,
        mean_sq_norm,
    })
}

/// `d(d^2)/dq` for `q = <x,y>_L`, with `-q` clamped away from 1.
#[inline]
fn sq_distance_coeff(q: f64) -> f64 {
    let z = (-q).max(GRAD_ARCOSH_CLAMP);
    -2.0 * z.acosh() / (z * z - 1.0).sqrt()
}

/// `acc += scale * J y` with `J = diag(-1, 1, ..., 1)`.
#[inline]
fn add_metric_scaled(acc: &mut [f64], y: &[f64], scale: f64) {
    acc[0] -= scale * y[0];
    for (a, b) in acc[1..].iter_mut().zip(&y[1..]) {
        *a += scale * b;
    }
}

/// Backpropagates `g` (gradient w.r.t. `exp_o(w)` coordinates) to `w`.
#[inline]
pub(crate) fn exp_origin_backward(w: &[f64], g: &[f64], out: &mut [f64]) {
    let r2: f64 = w.iter().map(|v| v * v).sum();
    let r = r2.sqrt();
    // f = sinh r / r and h = (r cosh r - sinh r) / r^3, with series near 0
    let (f, h) = if r < 1e-3 {
        (1.0 + r2 / 6.0 + r2 * r2 / 120.0, 1.0 / 3.0 + r2 / 30.0 + r2 * r2 / 840.0)
    } else {
        let (sh, ch) = (r.sinh(), r.cosh());
        (sh / r, (r * ch - sh) / (r2 * r))
    };
    let wg: f64 = w.iter().zip(&g[1..]).map(|(a, b)| a * b).sum();
    let c = g[0] * f + h * wg;
    for ((o, wi), gi) in out.iter_mut().zip(w).zip(&g[1..]) {
        *o = c * wi + f * gi;
    }
}

/// Combined loss and its analytic gradient with respect to the layer-0
/// tangent parameters.
pub fn loss_and_grad(
    graph: &InteractionGraph,
    table: &EmbeddingTable,
    batch: &TripletBatch,
    params: &ObjectiveParams,
) -> Result<(LossReport, EmbeddingGrad)> {
    params.validate()?;
    let nu = graph.num_users();
    let n = table.dim();
    let fwd = forward(graph, table, params.layers, params.include_layer0)?;
    let aligned = fwd.stacked_tangent();
    let hyper = concatenate![
        Axis(0),
        fwd.output.user_hyperbolic.view(),
        fwd.output.item_hyperbolic.view()
    ];
    let total_rows = aligned.nrows();

    // margin part, gradient w.r.t. hyperboloid coordinates
    let w = hinge_weight(batch, params.reduction);
    let mut g_hyper = Array2::<f64>::zeros((total_rows, n + 1));
    let mut hinge_sum = 0.0;
    for t in &batch.triplets {
        check_index("user", t.user, nu)?;
        check_index("item", t.positive, graph.num_items())?;
        check_index("item", t.negative, graph.num_items())?;
        let (ru, rp, rn) = (t.user, nu + t.positive, nu + t.negative);
        let eu = hyper.row(ru).to_vec();
        let ep = hyper.row(rp).to_vec();
        let en = hyper.row(rn).to_vec();
        let qp = lorentz_inner_slice(&eu, &ep);
        let qn = lorentz_inner_slice(&eu, &en);
        let dp = (-qp).max(1.0).acosh();
        let dn = (-qn).max(1.0).acosh();
        let l = dp * dp - dn * dn + params.margin;
        if l <= 0.0 {
            continue;
        }
        hinge_sum += l;
        let cp = w * sq_distance_coeff(qp);
        let cn = w * sq_distance_coeff(qn);
        {
            let mut gu = g_hyper.row_mut(ru);
            let gu = gu.as_slice_mut().expect("contiguous");
            add_metric_scaled(gu, &ep, cp);
            add_metric_scaled(gu, &en, -cn);
        }
        add_metric_scaled(g_hyper.row_mut(rp).as_slice_mut().expect("contiguous"), &eu, cp);
        add_metric_scaled(g_hyper.row_mut(rn).as_slice_mut().expect("contiguous"), &eu, -cn);
    }
    let margin = hinge_sum * w;

    // through exp_o
    let mut g_aligned = Array2::<f64>::zeros((total_rows, n));
    for r in 0..total_rows {
        let gh = g_hyper.row(r);
        if gh.iter().all(|&v| v == 0.0) {
            continue;
        }
        let wrow = aligned.row(r).to_vec();
        exp_origin_backward(
            &wrow,
            gh.as_slice().expect("contiguous"),
            g_aligned.row_mut(r).as_slice_mut().expect("contiguous"),
        );
    }

    // norm penalty: d/dX of lambda * xbar^{-1/2}
    let (mean_sq_norm, reg) = reg_loss(aligned.view())?;
    if params.lambda != 0.0 {
        let c = -params.lambda * mean_sq_norm.powf(-1.5) / total_rows as f64;
        g_aligned.scaled_add(c, &aligned);
    }

    // alignment is the centering projection, which is self-adjoint
    let col_mean = g_aligned.mean_axis(Axis(0)).expect("non-empty");
    let g_sum = &g_aligned - &col_mean;

    // sum pooling + propagation: grad = sum_k (A^T)^k g (+ g for layer 0)
    let g_users = g_sum.slice(s![..nu, ..]);
    let g_items = g_sum.slice(s![nu.., ..]);
    let mut acc_u = g_users.to_owned();
    let mut acc_i = g_items.to_owned();
    for _ in 1..params.layers {
        let (tu, ti) = aggregate_transpose(graph, acc_u.view(), acc_i.view())?;
        acc_u = tu + &g_users;
        acc_i = ti + &g_items;
    }
    let (mut gu, mut gi) = aggregate_transpose(graph, acc_u.view(), acc_i.view())?;
    if params.include_layer0 {
        gu += &g_users;
        gi += &g_items;
    }

    let report = LossReport {
        margin_loss: margin,
        reg_loss: reg,
        total: margin + params.lambda * reg,
        mean_sq_norm,
    };
    Ok((report, EmbeddingGrad { users: gu, items: gi }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::init_embeddings;
    use crate::manifold::{exp_origin, TangentVector};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn root_examples() {
        assert_eq!(compute_root(array![[1.0, 0.0], [-1.0, 0.0]].view()).unwrap().to_vec(), vec![0.0, 0.0]);
        assert_eq!(compute_root(array![[2.0, 2.0], [4.0, 6.0]].view()).unwrap().to_vec(), vec![3.0, 4.0]);
    }

    #[test]
    fn root_minimizes_squared_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Array2::from_shape_simple_fn((30, 4), || rng.random::<f64>() * 2.0 - 1.0);
        let root = compute_root(x.view()).unwrap();
        let cost = |c: &Array1<f64>| (&x - c).iter().map(|v| v * v).sum::<f64>();
        let base = cost(&root);
        for k in 0..4 {
            for eps in [1e-3, -1e-3, 0.5] {
                let mut c = root.clone();
                c[k] += eps;
                assert!(cost(&c) > base);
            }
        }
    }

    #[test]
    fn align_examples() {
        let x = array![[2.0, 2.0], [4.0, 6.0]];
        let root = compute_root(x.view()).unwrap();
        let a = align_root(x.view(), root.view()).unwrap();
        assert_eq!(a, array![[-1.0, -2.0], [1.0, 2.0]]);
        let again = align_root(a.view(), compute_root(a.view()).unwrap().view()).unwrap();
        assert_eq!(again, a);
        assert!(align_root(x.view(), array![1.0].view()).is_err());
    }

    #[test]
    fn reg_examples() {
        let x = array![[2.0, 0.0], [0.0, -2.0], [0.0, 2.0]];
        assert_eq!(reg_loss(x.view()).unwrap(), (4.0, 0.5));
        let (_, r1) = reg_loss(x.view()).unwrap();
        let (_, r2) = reg_loss((&x * 2.0).view()).unwrap();
        assert!((r2 - r1 / 2.0).abs() < 1e-15);
        assert!(matches!(reg_loss(Array2::zeros((3, 2)).view()), Err(HrcfError::DegenerateEmbedding)));
    }

    #[test]
    fn centered_norm_matches_pairwise_sum() {
        // sum_r ||x_r||^2 = (1 / 2N) sum_{i,j} ||x_i - x_j||^2 for centered rows
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let raw = Array2::from_shape_simple_fn((20, 5), || rng.random::<f64>() * 4.0 - 2.0);
        let x = align_root(raw.view(), compute_root(raw.view()).unwrap().view()).unwrap();
        let n = x.nrows() as f64;
        let (mean_sq, _) = reg_loss(x.view()).unwrap();
        let mut pair = 0.0;
        for i in 0..x.nrows() {
            for j in 0..x.nrows() {
                pair += (&x.row(i) - &x.row(j)).iter().map(|v| v * v).sum::<f64>();
            }
        }
        let lhs = n * n * mean_sq;
        assert!((lhs - 0.5 * pair).abs() <= 1e-8 * lhs);
    }

    #[test]
    fn score_examples() {
        let o = HyperbolicPoint::origin(2);
        assert_eq!(score(&o, &o).unwrap(), 0.0);
        let x = exp_origin(&TangentVector::new(vec![2.0, 0.0])).unwrap();
        assert!((score(&o, &x).unwrap() + 4.0).abs() < 1e-12);
        let y = exp_origin(&TangentVector::new(vec![3.0, 0.0])).unwrap();
        assert!(score(&o, &y).unwrap() < score(&o, &x).unwrap());
    }

    fn points_at(dists: &[f64]) -> Array2<f64> {
        let mut out = Array2::zeros((dists.len(), 3));
        for (r, &d) in dists.iter().enumerate() {
            let p = exp_origin(&TangentVector::new(vec![d, 0.0])).unwrap();
            out.row_mut(r).assign(&ndarray::ArrayView1::from(p.coords()));
        }
        out
    }

    #[test]
    fn margin_examples() {
        let users = points_at(&[0.0]);
        let items = points_at(&[0.5f64.sqrt(), 1.0, 0.1f64.sqrt()]);
        let batch = |p, n| TripletBatch {
            triplets: vec![Triplet {
                user: 0,
                positive: p,
                negative: n,
            }],
        };
        // d^2 = 0.5 vs 1.0, m = 0.2
        assert_eq!(margin_loss(&batch(0, 1), users.view(), items.view(), 0.2).unwrap(), 0.0);
        // d^2 = 1.0 vs 0.5, m = 0.1
        let l = margin_loss(&batch(1, 0), users.view(), items.view(), 0.1).unwrap();
        assert!((l - 0.6).abs() < 1e-12);
        assert_eq!(margin_loss(&batch(2, 2), users.view(), items.view(), 0.15).unwrap(), 0.15);
        assert!(matches!(
            margin_loss(&batch(0, 7), users.view(), items.view(), 0.1),
            Err(HrcfError::Index { .. })
        ));
    }

    fn toy() -> (InteractionGraph, EmbeddingTable) {
        let train = vec![(0, 0), (0, 1), (1, 1), (1, 2), (2, 0), (2, 3)];
        let g = InteractionGraph::from_edges(3, 4, train, vec![(0, 2)]).unwrap();
        let t = init_embeddings(3, 4, 3, 0.3, 1).unwrap();
        (g, t)
    }

    fn params(lambda: f64) -> ObjectiveParams {
        ObjectiveParams {
            margin: 0.15,
            lambda,
            layers: 2,
            include_layer0: false,
            reduction: Reduction::Mean,
        }
    }

    #[test]
    fn total_loss_combines_terms() {
        let (g, t) = toy();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let batch = sample_triplets(&g, &mut rng);
        batch.validate(&g).unwrap();
        let r0 = total_loss(&g, &t, &batch, &params(0.0)).unwrap();
        assert_eq!(r0.total, r0.margin_loss);
        let r20 = total_loss(&g, &t, &batch, &params(20.0)).unwrap();
        assert_eq!(r20.total, r20.margin_loss + 20.0 * r20.reg_loss);
        let (rg, _) = loss_and_grad(&g, &t, &batch, &params(20.0)).unwrap();
        assert!((rg.total - r20.total).abs() < 1e-12);
    }

    #[test]
    fn reg_is_translation_invariant() {
        let (g, t) = toy();
        let base = forward(&g, &t, 2, true).unwrap();
        let (m0, _) = reg_loss(base.stacked_tangent().view()).unwrap();
        let shift = array![0.7, -1.3, 2.0];
        let mut moved = t.clone();
        moved.users += &shift;
        moved.items += &shift;
        let fwd = forward(&g, &moved, 2, true).unwrap();
        let (m1, _) = reg_loss(fwd.stacked_tangent().view()).unwrap();
        assert!((m0 - m1).abs() < 1e-12 * m0.max(1.0));
        let root_after = compute_root(fwd.stacked_tangent().view()).unwrap();
        assert!(root_after.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn sampled_negatives_avoid_train_items() {
        let (g, _) = toy();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let b = sample_triplets(&g, &mut rng);
            assert_eq!(b.len(), g.train_edges().len());
            b.validate(&g).unwrap();
        }
    }

    #[test]
    fn full_user_is_skipped() {
        let g = InteractionGraph::from_edges(2, 2, vec![(0, 0), (0, 1), (1, 0)], vec![]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = sample_triplets(&g, &mut rng);
        assert_eq!(b.len(), 1);
        assert_eq!(b.triplets[0].negative, 1);
    }

    #[test]
    fn exp_backward_matches_finite_difference() {
        for w in [vec![0.3, -0.2, 0.1], vec![1e-5, 2e-5, 0.0], vec![2.5, 1.0, -3.0]] {
            let g = [0.7, -0.3, 0.4, 1.1];
            let f = |w: &[f64]| {
                let mut out = vec![0.0; 4];
                crate::manifold::exp_origin_into(w, &mut out);
                out.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()
            };
            let mut an = vec![0.0; 3];
            exp_origin_backward(&w, &g, &mut an);
            for k in 0..3 {
                let h = 1e-6;
                let mut p = w.clone();
                p[k] += h;
                let mut m = w.clone();
                m[k] -= h;
                let fd = (f(&p) - f(&m)) / (2.0 * h);
                assert!((fd - an[k]).abs() <= 1e-6 * fd.abs().max(1.0), "w={w:?} k={k}");
            }
        }
    }
}
