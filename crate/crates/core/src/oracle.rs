//! Self-checks run by `hrcf verify`: manifold round trips, smoothing,
//! the centered pair identity, gradient finite differences, metric brute
//! force and the distance-ratio diagnostic.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::encoder::{aggregate_once, dirichlet_energy, init_embeddings, EmbeddingTable};
use crate::error::Result;
use crate::eval::{ndcg_at_k, rank_items, recall_at_k};
use crate::graph::InteractionGraph;
use crate::manifold::{distance_ratio_diagnostic, exp_origin_into, log_origin_into, lorentz_inner_slice};
use crate::objective::{align_root, compute_root, loss_and_grad, total_loss, ObjectiveParams, Reduction, Triplet, TripletBatch};

/// Signature of the origin exponential map, injectable so that a broken map
/// can be shown to trip the checks.
pub type ExpMap = fn(&[f64], &mut [f64]);

#[derive(Clone, Debug, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(OracleCheck::passed)
    }

    pub fn format(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{} {} worst={:.3e} tol={:.1e}\n",
                    if c.passed() { "PASS" } else { "FAIL" },
                    c.name,
                    c.worst,
                    c.tolerance
                )
            })
            .collect()
    }
}

fn random_tangent(rng: &mut impl Rng, n: usize, max_norm: f64) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let target = rng.random::<f64>() * max_norm;
    w.iter_mut().for_each(|v| *v *= target / norm);
    w
}

/// Worst sheet deviation `|<x,x>_L + 1|` and worst relative round-trip
/// error `||log(exp(v)) - v|| / max(1, ||v||)` over `count` vectors.
pub fn manifold_round_trip(exp: ExpMap, n: usize, count: usize, max_norm: f64, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n + 1];
    let mut back = vec![0.0; n];
    let (mut sheet, mut trip) = (0.0f64, 0.0f64);
    for _ in 0..count {
        let w = random_tangent(&mut rng, n, max_norm);
        exp(&w, &mut x);
        sheet = sheet.max((lorentz_inner_slice(&x, &x) + 1.0).abs());
        log_origin_into(&x, &mut back);
        let err = w.iter().zip(&back).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        trip = trip.max(err / norm.max(1.0));
    }
    (sheet, trip)
}

/// Random bipartite graph with at most `max_nodes` nodes; every edge goes to
/// the training split.
pub fn random_bipartite(rng: &mut impl Rng, max_nodes: usize) -> InteractionGraph {
    let max_nodes = max_nodes.max(4);
    let nu = rng.random_range(2..=max_nodes / 2);
    let ni = rng.random_range(2..=max_nodes - nu);
    let p: f64 = rng.random_range(0.02..0.5);
    let mut edges = Vec::new();
    for u in 0..nu {
        for i in 0..ni {
            if rng.random::<f64>() < p {
                edges.push((u, i));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 0));
    }
    InteractionGraph::from_edges(nu, ni, edges, Vec::new()).expect("edges are in range")
}

fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(rng))
}

/// Largest relative increase of the Dirichlet energy over `aggregations`
/// rounds on `graphs` random graphs. Zero when smoothing never increases it.
pub fn smoothing_violation(graphs: usize, aggregations: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..graphs {
        let g = random_bipartite(&mut rng, 200);
        let dim = rng.random_range(1..=4);
        let mut u = gaussian_matrix(&mut rng, g.num_users(), dim);
        let mut i = gaussian_matrix(&mut rng, g.num_items(), dim);
        let mut e = dirichlet_energy(&g, u.view(), i.view())?;
        for _ in 0..aggregations {
            (u, i) = aggregate_once(&g, u.view(), i.view())?;
            let next = dirichlet_energy(&g, u.view(), i.view())?;
            worst = worst.max((next - e) / e.max(1e-12));
            e = next;
        }
    }
    Ok(worst)
}

/// Worst relative gap in `N^2 * mean_sq_norm = 1/2 sum_{i,j} ||x_i - x_j||^2`
/// on centered random matrices.
pub fn centered_pair_identity(matrices: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..matrices {
        let rows = rng.random_range(2..=40);
        let cols = rng.random_range(1..=8);
        let x = gaussian_matrix(&mut rng, rows, cols);
        let c = align_root(x.view(), compute_root(x.view())?.view())?;
        let n = rows as f64;
        let mean_sq = c.rows().into_iter().map(|r| r.dot(&r)).sum::<f64>() / n;
        let mut pair = 0.0;
        for a in c.rows() {
            for b in c.rows() {
                pair += (&a - &b).mapv(|v| v * v).sum();
            }
        }
        let lhs = n * n * mean_sq;
        worst = worst.max((lhs - 0.5 * pair).abs() / (0.5 * pair).max(1e-300));
    }
    Ok(worst)
}

/// Small fixture for gradient checks: 6 users, 6 items, dimension 4.
pub fn gradient_fixture(seed: u64) -> (InteractionGraph, EmbeddingTable, TripletBatch) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = vec![];
    for u in 0..6 {
        let mut items: Vec<usize> = (0..6).collect();
        items.shuffle(&mut rng);
        let k = rng.random_range(1..=3);
        edges.extend(items[..k].iter().map(|&i| (u, i)));
    }
    let g = InteractionGraph::from_edges(6, 6, edges, Vec::new()).expect("valid fixture");
    let table = init_embeddings(6, 6, 4, 0.5, seed).expect("valid dims");
    let mut triplets = Vec::new();
    for &(u, i) in g.train_edges() {
        let neg = (0..6).find(|&j| !g.user_adj().contains(u, j)).expect("no user owns all items");
        triplets.push(Triplet { user: u, positive: i, negative: neg });
    }
    (g, table, TripletBatch { triplets })
}

/// Worst relative error between the analytic gradient and central finite
/// differences with step `h`, `|a - f| / max(|a|, |f|, floor)`.
pub fn gradient_check(
    graph: &InteractionGraph,
    table: &EmbeddingTable,
    batch: &TripletBatch,
    params: &ObjectiveParams,
    h: f64,
) -> Result<f64> {
    let (_, grad) = loss_and_grad(graph, table, batch, params)?;
    let mut worst = 0.0f64;
    let mut probe = table.clone();
    let floor = 1e-6;
    for block in 0..2 {
        let rows = if block == 0 { table.num_users() } else { table.num_items() };
        for r in 0..rows {
            for c in 0..table.dim() {
                let orig = *cell(&mut probe, block, r, c);
                *cell(&mut probe, block, r, c) = orig + h;
                let plus = total_loss(graph, &probe, batch, params)?.total;
                *cell(&mut probe, block, r, c) = orig - h;
                let minus = total_loss(graph, &probe, batch, params)?.total;
                *cell(&mut probe, block, r, c) = orig;
                let fd = (plus - minus) / (2.0 * h);
                let an = if block == 0 { grad.users[[r, c]] } else { grad.items[[r, c]] };
                worst = worst.max((an - fd).abs() / an.abs().max(fd.abs()).max(floor));
            }
        }
    }
    Ok(worst)
}

fn cell(t: &mut EmbeddingTable, block: usize, r: usize, c: usize) -> &mut f64 {
    if block == 0 {
        &mut t.users[[r, c]]
    } else {
        &mut t.items[[r, c]]
    }
}

/// Every ranking of a five-item catalog against every non-empty relevant
/// set: compares the library metrics with a direct position-by-position
/// computation. Items are placed at distance `rank + 1` from the origin
/// so the scoring path is exercised too.
pub fn metric_brute_force(ks: &[usize]) -> f64 {
    const N: usize = 5;
    let mut worst = 0.0f64;
    let mut perm: Vec<usize> = (0..N).collect();
    let user = Array1::from(vec![1.0, 0.0, 0.0]);
    for_each_permutation(&mut perm, 0, &mut |perm| {
        let mut items = Array2::zeros((N, 3));
        for (pos, &item) in perm.iter().enumerate() {
            let mut row = vec![0.0; 3];
            exp_origin_into(&[pos as f64 + 1.0, 0.0], &mut row);
            items.row_mut(item).assign(&Array1::from(row));
        }
        let ranked = rank_items(user.view(), items.view(), &[]);
        if ranked != perm {
            worst = f64::INFINITY;
            return;
        }
        for mask in 1u32..(1 << N) {
            let relevant: Vec<usize> = (0..N).filter(|i| mask & (1 << i) != 0).collect();
            for &k in ks {
                let mut hits = 0usize;
                let mut dcg = 0.0;
                for (p, item) in perm.iter().enumerate().take(k) {
                    if relevant.contains(item) {
                        hits += 1;
                        dcg += 1.0 / ((p + 2) as f64).log2();
                    }
                }
                let ideal: f64 = (0..k.min(relevant.len())).map(|p| 1.0 / ((p + 2) as f64).log2()).sum();
                let r = recall_at_k(&ranked, &relevant, k).unwrap_or(f64::NAN);
                let nd = ndcg_at_k(&ranked, &relevant, k).unwrap_or(f64::NAN);
                let dr = (r - hits as f64 / relevant.len() as f64).abs();
                let dn = (nd - dcg / ideal).abs();
                worst = worst.max(if dr.is_nan() || dn.is_nan() { f64::INFINITY } else { dr.max(dn) });
            }
        }
    });
    worst
}

fn for_each_permutation(perm: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize])) {
    if start == perm.len() {
        f(perm);
        return;
    }
    for i in start..perm.len() {
        perm.swap(start, i);
        for_each_permutation(perm, start + 1, f);
        perm.swap(start, i);
    }
}

/// Largest decrease between consecutive `a = 1..=10` values of the ratio at
/// angle pi/2 (zero when monotone), and the final ratio.
pub fn ratio_monotonicity() -> (f64, f64) {
    let angle = std::f64::consts::FRAC_PI_2;
    let vals: Vec<f64> = (1..=10).map(|a| distance_ratio_diagnostic(a as f64, angle)).collect();
    let drop = vals.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max);
    (drop, vals[9])
}

/// Runs every check with the library exponential map.
pub fn verify_oracles(seed: u64) -> Result<OracleReport> {
    verify_with(exp_origin_into, seed)
}

/// Runs every check; `exp` replaces the origin exponential map in the
/// manifold round-trip checks.
pub fn verify_with(exp: ExpMap, seed: u64) -> Result<OracleReport> {
    let mut checks = Vec::new();
    for n in [2usize, 8, 50] {
        let (sheet, trip) = manifold_round_trip(exp, n, 2000, 10.0, seed.wrapping_add(n as u64));
        checks.push(OracleCheck { name: manifold_name(n, true), worst: sheet, tolerance: 1e-6 });
        checks.push(OracleCheck { name: manifold_name(n, false), worst: trip, tolerance: 1e-8 });
    }
    checks.push(OracleCheck {
        name: "smoothing never increases edge energy",
        worst: smoothing_violation(30, 5, seed)?,
        tolerance: 1e-9,
    });
    checks.push(OracleCheck {
        name: "centered pair identity",
        worst: centered_pair_identity(30, seed)?,
        tolerance: 1e-8,
    });
    let (g, table, batch) = gradient_fixture(seed);
    let mut worst_grad = 0.0f64;
    for include_layer0 in [false, true] {
        let params = ObjectiveParams {
            margin: 2.0,
            lambda: 3.0,
            layers: 2,
            include_layer0,
            reduction: Reduction::Mean,
        };
        worst_grad = worst_grad.max(gradient_check(&g, &table, &batch, &params, 1e-5)?);
    }
    checks.push(OracleCheck { name: "gradient vs finite differences", worst: worst_grad, tolerance: 1e-4 });
    checks.push(OracleCheck { name: "ranking metrics brute force", worst: metric_brute_force(&[1, 2, 3, 5]), tolerance: 1e-12 });
    let (drop, _) = ratio_monotonicity();
    checks.push(OracleCheck { name: "distance ratio monotone in radius", worst: drop, tolerance: 0.0 });
    Ok(OracleReport { checks })
}

fn manifold_name(n: usize, sheet: bool) -> &'static str {
    match (n, sheet) {
        (2, true) => "exp stays on sheet (n=2)",
        (8, true) => "exp stays on sheet (n=8)",
        (_, true) => "exp stays on sheet (n=50)",
        (2, false) => "log inverts exp (n=2)",
        (8, false) => "log inverts exp (n=8)",
        (_, false) => "log inverts exp (n=50)",
    }
}
