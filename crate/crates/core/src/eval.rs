//! Full-catalog ranking evaluation with train-item masking.

use std::collections::BTreeMap;

use ndarray::{ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::EncoderOutput;
use crate::error::{HrcfError, Result};
use crate::graph::{head_tail_partition, InteractionGraph, ItemPartition};
use crate::manifold::distance_slice;

/// Averaged Recall@K and NDCG@K.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub recall_at: BTreeMap<usize, f64>,
    pub ndcg_at: BTreeMap<usize, f64>,
    pub num_users: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentMetrics {
    pub head: Metrics,
    pub tail: Metrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub recall_at: BTreeMap<usize, f64>,
    pub ndcg_at: BTreeMap<usize, f64>,
    pub per_segment: Option<SegmentMetrics>,
    pub num_evaluated_users: usize,
}

impl EvalResult {
    /// `epoch=<e> R@10=<v> ... N@20=<v>` followed by head/tail columns.
    pub fn format_line(&self, epoch: usize) -> String {
        let mut line = format!("epoch={epoch}");
        for (k, v) in &self.recall_at {
            line.push_str(&format!(" R@{k}={v:.6}"));
        }
        for (k, v) in &self.ndcg_at {
            line.push_str(&format!(" N@{k}={v:.6}"));
        }
        if let Some(seg) = &self.per_segment {
            for (name, m) in [("head", &seg.head), ("tail", &seg.tail)] {
                for (k, v) in &m.recall_at {
                    line.push_str(&format!(" {name}_R@{k}={v:.6}"));
                }
                for (k, v) in &m.ndcg_at {
                    line.push_str(&format!(" {name}_N@{k}={v:.6}"));
                }
            }
        }
        line
    }
}

/// Item indices by ascending distance to `user`, masked items removed, ties
/// broken by lower index. `mask` must be sorted.
pub fn rank_items(user: ArrayView1<f64>, items: ArrayView2<f64>, mask: &[usize]) -> Vec<usize> {
    let dists = distances(user, items);
    let mut order: Vec<usize> = (0..items.nrows())
        .filter(|i| mask.binary_search(i).is_err())
        .collect();
    order.sort_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(a.cmp(&b)));
    order
}

/// First `k` entries of [`rank_items`] without sorting the whole catalog.
pub fn top_k_items(user: ArrayView1<f64>, items: ArrayView2<f64>, mask: &[usize], k: usize) -> Vec<usize> {
    let dists = distances(user, items);
    let mut keyed: Vec<(f64, usize)> = (0..items.nrows())
        .filter(|i| mask.binary_search(i).is_err())
        .map(|i| (dists[i], i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < keyed.len() {
        keyed.select_nth_unstable_by(k, cmp);
        keyed.truncate(k);
    }
    keyed.sort_by(cmp);
    keyed.into_iter().map(|(_, i)| i).collect()
}

fn distances(user: ArrayView1<f64>, items: ArrayView2<f64>) -> Vec<f64> {
    let u = user.to_vec();
    items
        .rows()
        .into_iter()
        .map(|row| match row.as_slice() {
            Some(r) => distance_slice(&u, r),
            None => distance_slice(&u, &row.to_vec()),
        })
        .collect()
}

/// `|top-K ∩ relevant| / |relevant|`; `None` when nothing is relevant.
/// `relevant` must be sorted.
pub fn recall_at_k(ranked: &[usize], relevant: &[usize], k: usize) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let hits = ranked
        .iter()
        .take(k)
        .filter(|i| relevant.binary_search(i).is_ok())
        .count();
    Some(hits as f64 / relevant.len() as f64)
}

/// Binary-relevance NDCG with a `log2(p + 1)` discount on 1-based positions.
pub fn ndcg_at_k(ranked: &[usize], relevant: &[usize], k: usize) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| relevant.binary_search(i).is_ok())
        .map(|(p, _)| 1.0 / ((p + 2) as f64).log2())
        .sum();
    let idcg: f64 = (0..k.min(relevant.len()))
        .map(|p| 1.0 / ((p + 2) as f64).log2())
        .sum();
    Some(dcg / idcg)
}

#[derive(Default)]
struct Accum {
    recall: Vec<f64>,
    ndcg: Vec<f64>,
    users: usize,
}

impl Accum {
    fn new(nk: usize) -> Self {
        Self {
            recall: vec![0.0; nk],
            ndcg: vec![0.0; nk],
            users: 0,
        }
    }

    fn add(&mut self, ranked: &[usize], relevant: &[usize], ks: &[usize]) {
        if relevant.is_empty() {
            return;
        }
        for (j, &k) in ks.iter().enumerate() {
            self.recall[j] += recall_at_k(ranked, relevant, k).expect("non-empty");
            self.ndcg[j] += ndcg_at_k(ranked, relevant, k).expect("non-empty");
        }
        self.users += 1;
    }

    fn merge(&mut self, other: &Accum) {
        for j in 0..self.recall.len() {
            self.recall[j] += other.recall[j];
            self.ndcg[j] += other.ndcg[j];
        }
        self.users += other.users;
    }

    fn finish(&self, ks: &[usize]) -> Metrics {
        let denom = self.users.max(1) as f64;
        Metrics {
            recall_at: ks.iter().zip(&self.recall).map(|(&k, v)| (k, v / denom)).collect(),
            ndcg_at: ks.iter().zip(&self.ndcg).map(|(&k, v)| (k, v / denom)).collect(),
            num_users: self.users,
        }
    }
}

/// Macro-averaged metrics over users with held-out items. With
/// `head_fraction`, relevant sets are additionally intersected with the head
/// and tail item segments.
pub fn evaluate(
    graph: &InteractionGraph,
    output: &EncoderOutput,
    ks: &[usize],
    head_fraction: Option<f64>,
) -> Result<EvalResult> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(HrcfError::Config("evaluation cutoffs must be >= 1".into()));
    }
    if output.user_hyperbolic.nrows() != graph.num_users() {
        return Err(HrcfError::Dimension {
            expected: graph.num_users(),
            got: output.user_hyperbolic.nrows(),
        });
    }
    if output.item_hyperbolic.nrows() != graph.num_items() {
        return Err(HrcfError::Dimension {
            expected: graph.num_items(),
            got: output.item_hyperbolic.nrows(),
        });
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let max_k = *ks.last().expect("non-empty");
    let partition: Option<ItemPartition> = head_fraction
        .map(|f| head_tail_partition(graph, f))
        .transpose()?;

    let per_user: Vec<[Accum; 3]> = (0..graph.num_users())
        .into_par_iter()
        .map(|u| {
            let mut acc = [Accum::new(ks.len()), Accum::new(ks.len()), Accum::new(ks.len())];
            let relevant = graph.test_items(u);
            if relevant.is_empty() {
                return acc;
            }
            let ranked = top_k_items(
                output.user_hyperbolic.row(u),
                output.item_hyperbolic.view(),
                graph.user_adj().neighbors(u),
                max_k,
            );
            acc[0].add(&ranked, relevant, &ks);
            if let Some(p) = &partition {
                let (head, tail): (Vec<usize>, Vec<usize>) = relevant.iter().partition(|&&i| p.is_head(i));
                acc[1].add(&ranked, &head, &ks);
                acc[2].add(&ranked, &tail, &ks);
            }
            acc
        })
        .collect();

    let mut total = [Accum::new(ks.len()), Accum::new(ks.len()), Accum::new(ks.len())];
    for acc in &per_user {
        for (t, a) in total.iter_mut().zip(acc) {
            t.merge(a);
        }
    }
    let all = total[0].finish(&ks);
    Ok(EvalResult {
        recall_at: all.recall_at,
        ndcg_at: all.ndcg_at,
        per_segment: partition.map(|_| SegmentMetrics {
            head: total[1].finish(&ks),
            tail: total[2].finish(&ks),
        }),
        num_evaluated_users: all.num_users,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{exp_origin, TangentVector};
    use ndarray::Array2;

    fn items_at(dists: &[f64]) -> Array2<f64> {
        let mut out = Array2::zeros((dists.len(), 3));
        for (r, &d) in dists.iter().enumerate() {
            let p = exp_origin(&TangentVector::new(vec![d, 0.0])).unwrap();
            out.row_mut(r).assign(&ArrayView1::from(p.coords()));
        }
        out
    }

    fn origin_user() -> ndarray::Array1<f64> {
        ndarray::array![1.0, 0.0, 0.0]
    }

    #[test]
    fn rank_examples() {
        let items = items_at(&[3.0, 1.0, 2.0]);
        let u = origin_user();
        assert_eq!(rank_items(u.view(), items.view(), &[]), vec![1, 2, 0]);
        assert_eq!(rank_items(u.view(), items.view(), &[1]), vec![2, 0]);
        let tied = items_at(&[1.0, 1.0, 0.5, 1.0]);
        assert_eq!(rank_items(u.view(), tied.view(), &[]), vec![2, 0, 1, 3]);
        assert_eq!(top_k_items(u.view(), tied.view(), &[], 2), vec![2, 0]);
        assert_eq!(top_k_items(u.view(), tied.view(), &[0], 10), vec![2, 1, 3]);
    }

    #[test]
    fn recall_examples() {
        assert_eq!(recall_at_k(&[4, 1, 2], &[4], 10), Some(1.0));
        assert_eq!(recall_at_k(&[4, 1, 2], &[2, 4], 2), Some(0.5));
        assert_eq!(recall_at_k(&[4, 1, 2], &[], 2), None);
    }

    #[test]
    fn ndcg_examples() {
        assert_eq!(ndcg_at_k(&[7, 1], &[7], 10), Some(1.0));
        let v = ndcg_at_k(&[1, 7, 3], &[7], 2).unwrap();
        assert!((v - 1.0 / 3f64.log2()).abs() < 1e-15);
        assert!((v - 0.6309297535714574).abs() < 1e-15);
        assert_eq!(ndcg_at_k(&[2, 5, 9, 0], &[2, 5, 9], 3), Some(1.0));
        assert_eq!(ndcg_at_k(&[2], &[], 3), None);
    }

    #[test]
    fn tiny_fixture_by_hand() {
        // 3 users on the x-axis of H^2, 6 items along a line
        let items = items_at(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let users = items_at(&[0.1, 2.9, 5.2]);
        // user 0 ranks 0,1,2,...; user 1 ranks 3,2,4,1,5,0; user 2 ranks 5,4,3,...
        let train = vec![(0, 0), (1, 3), (2, 1)];
        let test = vec![(0, 1), (0, 4), (1, 0), (2, 4)];
        let g = InteractionGraph::from_edges(3, 6, train, test).unwrap();
        let out = EncoderOutput {
            user_tangent_sum: Array2::zeros((3, 2)),
            item_tangent_sum: Array2::zeros((6, 2)),
            user_hyperbolic: users,
            item_hyperbolic: items,
        };
        let r = evaluate(&g, &out, &[1, 2], None).unwrap();
        // user0 ranked [1,2,3,...]: R@1 = 1/2, R@2 = 1/2; N@1 = 1, N@2 = 1/(1 + 1/log2 3)
        // user1 ranked [2,4,1,5,0]: item 0 last -> 0
        // user2 ranked [5,4,...]: R@1 = 0, R@2 = 1; N@2 = (1/log2 3) / 1
        let l3 = 1.0 / 3f64.log2();
        assert_eq!(r.num_evaluated_users, 3);
        assert!((r.recall_at[&1] - (0.5 + 0.0 + 0.0) / 3.0).abs() < 1e-15);
        assert!((r.recall_at[&2] - (0.5 + 0.0 + 1.0) / 3.0).abs() < 1e-15);
        assert!((r.ndcg_at[&1] - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.ndcg_at[&2] - (1.0 / (1.0 + l3) + l3) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_model_scores_one() {
        let items = items_at(&[0.0, 1.0, 2.0, 3.0]);
        let users = items_at(&[0.0]);
        let g = InteractionGraph::from_edges(1, 4, vec![(0, 2)], vec![(0, 0), (0, 1)]).unwrap();
        let out = EncoderOutput {
            user_tangent_sum: Array2::zeros((1, 2)),
            item_tangent_sum: Array2::zeros((4, 2)),
            user_hyperbolic: users,
            item_hyperbolic: items,
        };
        let r = evaluate(&g, &out, &[2, 3], Some(0.5)).unwrap();
        assert!(r.recall_at.values().chain(r.ndcg_at.values()).all(|&v| v == 1.0));
        assert!(r.format_line(5).starts_with("epoch=5 R@2=1.000000 R@3=1.000000 N@2="));
        assert!(evaluate(&g, &out, &[0], None).is_err());
    }
}
