//! Tangent-space graph encoder: Gaussian initialization at the origin,
//! mean-neighbor aggregation over the bipartite graph, multi-order sum
//! pooling and the exponential map back onto the hyperboloid.

use std::io::{BufRead, Write};

use ndarray::{Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{HrcfError, Result};
use crate::graph::{Csr, InteractionGraph};
use crate::manifold::exp_origin_into;

/// Trainable layer-0 tangent coordinates. Row `r` stands for the tangent
/// vector `(0, row)` at the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub users: Array2<f64>,
    pub items: Array2<f64>,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.users.ncols()
    }

    pub fn num_users(&self) -> usize {
        self.users.nrows()
    }

    pub fn num_items(&self) -> usize {
        self.items.nrows()
    }

    pub fn is_finite(&self) -> bool {
        self.users.iter().chain(self.items.iter()).all(|v| v.is_finite())
    }

    /// Writes the `HRCF-CKPT v1 U I n` text checkpoint.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "HRCF-CKPT v1 {} {} {}",
            self.num_users(),
            self.num_items(),
            self.dim()
        )?;
        for row in self.users.rows().into_iter().chain(self.items.rows()) {
            let mut first = true;
            for v in row {
                if !first {
                    w.write_all(b" ")?;
                }
                first = false;
                write!(w, "{v}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let bad = |line: usize, msg: String| HrcfError::Parse {
            path: "checkpoint".into(),
            line,
            msg,
        };
        let mut lines = reader.lines();
        let header = lines.next().ok_or_else(|| bad(1, "missing header".into()))??;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "HRCF-CKPT" || parts[1] != "v1" {
            return Err(bad(1, format!("bad header {header:?}")));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| bad(1, format!("bad count {s:?}")));
        let (nu, ni, n) = (parse(parts[2])?, parse(parts[3])?, parse(parts[4])?);
        let mut data = Vec::with_capacity((nu + ni) * n);
        for row in 0..nu + ni {
            let line = lines
                .next()
                .ok_or_else(|| bad(row + 2, "unexpected end of checkpoint".into()))??;
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(
                    tok.parse::<f64>()
                        .map_err(|_| bad(row + 2, format!("bad float {tok:?}")))?,
                );
            }
            if data.len() - before != n {
                return Err(bad(row + 2, format!("expected {n} values, got {}", data.len() - before)));
            }
        }
        let items = data.split_off(nu * n);
        Ok(Self {
            users: Array2::from_shape_vec((nu, n), data).expect("sized above"),
            items: Array2::from_shape_vec((ni, n), items).expect("sized above"),
        })
    }
}

/// Per-node tangent sums and their images on the hyperboloid.
#[derive(Clone, Debug)]
pub struct EncoderOutput {
    pub user_tangent_sum: Array2<f64>,
    pub item_tangent_sum: Array2<f64>,
    /// `U x (n + 1)` hyperboloid coordinates.
    pub user_hyperbolic: Array2<f64>,
    /// `I x (n + 1)` hyperboloid coordinates.
    pub item_hyperbolic: Array2<f64>,
}

impl EncoderOutput {
    /// Maps both tangent blocks through `exp_o` row by row.
    pub fn from_tangent_sums(user_tangent_sum: Array2<f64>, item_tangent_sum: Array2<f64>) -> Self {
        let user_hyperbolic = exp_rows(user_tangent_sum.view());
        let item_hyperbolic = exp_rows(item_tangent_sum.view());
        Self {
            user_tangent_sum,
            item_tangent_sum,
            user_hyperbolic,
            item_hyperbolic,
        }
    }
}

pub(crate) fn exp_rows(tangent: ArrayView2<f64>) -> Array2<f64> {
    let (rows, n) = tangent.dim();
    let mut out = Array2::zeros((rows, n + 1));
    out.axis_iter_mut(Axis(0))
        .zip(tangent.axis_iter(Axis(0)))
        .for_each(|(mut o, t)| {
            let t = t.to_vec();
            exp_origin_into(&t, o.as_slice_mut().expect("standard layout"));
        });
    out
}

/// i.i.d. `Normal(0, sigma^2)` tangent parameters, users first then items.
pub fn init_embeddings(
    num_users: usize,
    num_items: usize,
    dim: usize,
    sigma: f64,
    seed: u64,
) -> Result<EmbeddingTable> {
    if dim < 2 {
        return Err(HrcfError::Config(format!("embedding dimension must be >= 2, got {dim}")));
    }
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| HrcfError::Config(format!("init sigma {sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users = Array2::from_shape_simple_fn((num_users, dim), || normal.sample(&mut rng));
    let items = Array2::from_shape_simple_fn((num_items, dim), || normal.sample(&mut rng));
    Ok(EmbeddingTable { users, items })
}

fn check_shapes(graph: &InteractionGraph, users: &ArrayView2<f64>, items: &ArrayView2<f64>) -> Result<()> {
    if users.nrows() != graph.num_users() {
        return Err(HrcfError::Dimension {
            expected: graph.num_users(),
            got: users.nrows(),
        });
    }
    if items.nrows() != graph.num_items() {
        return Err(HrcfError::Dimension {
            expected: graph.num_items(),
            got: items.nrows(),
        });
    }
    if users.ncols() != items.ncols() {
        return Err(HrcfError::Dimension {
            expected: users.ncols(),
            got: items.ncols(),
        });
    }
    Ok(())
}

/// `out[r] = sum_{c in adj[r]} weight(c) * input[c]`, rows in parallel.
fn gather_rows(
    adj: &Csr,
    input: &ArrayView2<f64>,
    row_weight: impl Fn(usize) -> f64 + Sync,
    col_weight: impl Fn(usize) -> f64 + Sync,
) -> Array2<f64> {
    let n = input.ncols();
    let mut out = Array2::zeros((adj.num_rows(), n));
    if n == 0 {
        return out;
    }
    out.as_slice_mut()
        .expect("fresh array is contiguous")
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(r, dst)| {
            let nbrs = adj.neighbors(r);
            if nbrs.is_empty() {
                return;
            }
            for &c in nbrs {
                let w = col_weight(c);
                for (d, s) in dst.iter_mut().zip(input.row(c)) {
                    *d += w * s;
                }
            }
            let rw = row_weight(r);
            if rw != 1.0 {
                dst.iter_mut().for_each(|d| *d *= rw);
            }
        });
    out
}

/// One round of mean aggregation: users average their train items, items
/// average their train users. Nodes without neighbors get a zero row.
pub fn aggregate_once(
    graph: &InteractionGraph,
    user_in: ArrayView2<f64>,
    item_in: ArrayView2<f64>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_shapes(graph, &user_in, &item_in)?;
    let (ua, ia) = (graph.user_adj(), graph.item_adj());
    let inv = |deg: usize| if deg == 0 { 0.0 } else { 1.0 / deg as f64 };
    let user_out = gather_rows(ua, &item_in, |u| inv(ua.degree(u)), |_| 1.0);
    let item_out = gather_rows(ia, &user_in, |i| inv(ia.degree(i)), |_| 1.0);
    Ok((user_out, item_out))
}

/// Adjoint of [`aggregate_once`]: `user_out[u] = sum_{i in N_u} item_in[i] / |N_i|`
/// and symmetrically for items. Used to backpropagate through aggregation.
pub fn aggregate_transpose(
    graph: &InteractionGraph,
    user_in: ArrayView2<f64>,
    item_in: ArrayView2<f64>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_shapes(graph, &user_in, &item_in)?;
    let (ua, ia) = (graph.user_adj(), graph.item_adj());
    let user_out = gather_rows(ua, &item_in, |_| 1.0, |i| 1.0 / ia.degree(i) as f64);
    let item_out = gather_rows(ia, &user_in, |_| 1.0, |u| 1.0 / ua.degree(u) as f64);
    Ok((user_out, item_out))
}

/// Runs `layers` aggregation rounds from the layer-0 table and sum-pools
/// layers `1..=layers` (plus layer 0 when `include_layer0`), then maps the
/// pooled tangent vectors to the hyperboloid. No root alignment here.
pub fn encode(
    graph: &InteractionGraph,
    table: &EmbeddingTable,
    layers: usize,
    include_layer0: bool,
) -> Result<EncoderOutput> {
    let (us, is) = tangent_sums(graph, table, layers, include_layer0)?;
    Ok(EncoderOutput::from_tangent_sums(us, is))
}

/// Pooled tangent sums without the exponential map.
pub fn tangent_sums(
    graph: &InteractionGraph,
    table: &EmbeddingTable,
    layers: usize,
    include_layer0: bool,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if layers == 0 {
        return Err(HrcfError::Config("number of aggregation layers must be >= 1".into()));
    }
    check_shapes(graph, &table.users.view(), &table.items.view())?;
    let (mut user_sum, mut item_sum) = if include_layer0 {
        (table.users.clone(), table.items.clone())
    } else {
        (
            Array2::zeros(table.users.raw_dim()),
            Array2::zeros(table.items.raw_dim()),
        )
    };
    let (mut u, mut i) = aggregate_once(graph, table.users.view(), table.items.view())?;
    user_sum += &u;
    item_sum += &i;
    for _ in 1..layers {
        let next = aggregate_once(graph, u.view(), i.view())?;
        u = next.0;
        i = next.1;
        user_sum += &u;
        item_sum += &i;
    }
    Ok((user_sum, item_sum))
}

fn sq_dist(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `D(X) = sum over directed train edges (r, c) of ||X_r - X_c||^2 / deg(r)`.
pub fn pairwise_shrink_metric(
    graph: &InteractionGraph,
    users: ArrayView2<f64>,
    items: ArrayView2<f64>,
) -> Result<f64> {
    check_shapes(graph, &users, &items)?;
    let (ua, ia) = (graph.user_adj(), graph.item_adj());
    Ok(graph
        .train_edges()
        .iter()
        .map(|&(u, i)| {
            let w = 1.0 / ua.degree(u) as f64 + 1.0 / ia.degree(i) as f64;
            w * sq_dist(users.row(u), items.row(i))
        })
        .sum())
}

/// Unweighted edge energy `sum over directed train edges ||X_r - X_c||^2`.
///
/// Mean aggregation is self-adjoint with spectrum in `[-1, 1]` under the
/// degree-weighted inner product, so this quantity never increases across
/// [`aggregate_once`].
pub fn dirichlet_energy(
    graph: &InteractionGraph,
    users: ArrayView2<f64>,
    items: ArrayView2<f64>,
) -> Result<f64> {
    check_shapes(graph, &users, &items)?;
    Ok(graph
        .train_edges()
        .iter()
        .map(|&(u, i)| 2.0 * sq_dist(users.row(u), items.row(i)))
        .sum())
}
