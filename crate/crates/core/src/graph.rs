//! User–item interaction data: loading, binarization, per-user train/test
//! split, CSR adjacency, synthetic power-law generation and head/tail item
//! partitioning.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{HrcfError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct InteractionRecord {
    pub user_id: String,
    pub item_id: String,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

/// Compressed sparse rows: `indices[offsets[r]..offsets[r + 1]]` are the
/// sorted neighbors of row `r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Csr {
    offsets: Vec<usize>,
    indices: Vec<usize>,
}

impl Csr {
    /// Builds from `(row, col)` pairs; pairs must be unique.
    pub fn from_pairs(num_rows: usize, pairs: impl Iterator<Item = (usize, usize)> + Clone) -> Self {
        let mut offsets = vec![0usize; num_rows + 1];
        for (r, _) in pairs.clone() {
            offsets[r + 1] += 1;
        }
        for r in 0..num_rows {
            offsets[r + 1] += offsets[r];
        }
        let mut cursor = offsets.clone();
        let mut indices = vec![0usize; offsets[num_rows]];
        for (r, c) in pairs {
            indices[cursor[r]] = c;
            cursor[r] += 1;
        }
        for r in 0..num_rows {
            indices[offsets[r]..offsets[r + 1]].sort_unstable();
        }
        Self { offsets, indices }
    }

    #[inline]
    pub fn neighbors(&self, row: usize) -> &[usize] {
        &self.indices[self.offsets[row]..self.offsets[row + 1]]
    }

    #[inline]
    pub fn degree(&self, row: usize) -> usize {
        self.offsets[row + 1] - self.offsets[row]
    }

    pub fn num_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.neighbors(row).binary_search(&col).is_ok()
    }
}

/// Bipartite interaction graph with adjacency built from training edges only.
#[derive(Clone, Debug)]
pub struct InteractionGraph {
    num_users: usize,
    num_items: usize,
    train_edges: Vec<(usize, usize)>,
    test_edges: Vec<(usize, usize)>,
    user_adj: Csr,
    item_adj: Csr,
    user_test: Csr,
}

impl InteractionGraph {
    /// Builds a graph from dense indices. Edge lists are deduplicated and sorted.
    pub fn from_edges(
        num_users: usize,
        num_items: usize,
        train: Vec<(usize, usize)>,
        test: Vec<(usize, usize)>,
    ) -> Result<Self> {
        if num_users == 0 || num_items == 0 {
            return Err(HrcfError::EmptyDataset("graph has no users or items".into()));
        }
        let check = |edges: &[(usize, usize)]| -> Result<()> {
            for &(u, i) in edges {
                if u >= num_users {
                    return Err(HrcfError::Index {
                        what: "user",
                        index: u,
                        len: num_users,
                    });
                }
                if i >= num_items {
                    return Err(HrcfError::Index {
                        what: "item",
                        index: i,
                        len: num_items,
                    });
                }
            }
            Ok(())
        };
        check(&train)?;
        check(&test)?;
        let mut train = train;
        train.sort_unstable();
        train.dedup();
        let mut test = test;
        test.sort_unstable();
        test.dedup();
        let train_set: HashSet<_> = train.iter().copied().collect();
        if let Some(e) = test.iter().find(|e| train_set.contains(e)) {
            return Err(HrcfError::Config(format!(
                "edge ({}, {}) is in both train and test",
                e.0, e.1
            )));
        }
        let user_adj = Csr::from_pairs(num_users, train.iter().copied());
        let item_adj = Csr::from_pairs(num_items, train.iter().map(|&(u, i)| (i, u)));
        let user_test = Csr::from_pairs(num_users, test.iter().copied());
        Ok(Self {
            num_users,
            num_items,
            train_edges: train,
            test_edges: test,
            user_adj,
            item_adj,
            user_test,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_nodes(&self) -> usize {
        self.num_users + self.num_items
    }

    pub fn train_edges(&self) -> &[(usize, usize)] {
        &self.train_edges
    }

    pub fn test_edges(&self) -> &[(usize, usize)] {
        &self.test_edges
    }

    pub fn user_adj(&self) -> &Csr {
        &self.user_adj
    }

    pub fn item_adj(&self) -> &Csr {
        &self.item_adj
    }

    /// Held-out items of a user, sorted.
    pub fn test_items(&self, user: usize) -> &[usize] {
        self.user_test.neighbors(user)
    }

    pub fn user_degrees(&self) -> Vec<usize> {
        (0..self.num_users).map(|u| self.user_adj.degree(u)).collect()
    }

    pub fn item_degrees(&self) -> Vec<usize> {
        (0..self.num_items).map(|i| self.item_adj.degree(i)).collect()
    }

    /// Writes `U I E_train E_test`, then the train pairs, then the test pairs.
    pub fn write_export<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{} {} {} {}",
            self.num_users,
            self.num_items,
            self.train_edges.len(),
            self.test_edges.len()
        )?;
        for (u, i) in self.train_edges.iter().chain(&self.test_edges) {
            writeln!(w, "{u} {i}")?;
        }
        Ok(())
    }
}

/// Reads a tab-separated interaction file and keeps rows with
/// `rating >= rating_threshold`, deduplicating `(user, item)` pairs.
pub fn load_interactions(path: &Path, rating_threshold: f64) -> Result<Vec<InteractionRecord>> {
    let file = File::open(path)?;
    parse_interactions(BufReader::new(file), path, rating_threshold)
}

pub fn parse_interactions<R: BufRead>(
    reader: R,
    path: &Path,
    rating_threshold: f64,
) -> Result<Vec<InteractionRecord>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| HrcfError::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(err(format!("expected 3 or 4 tab-separated fields, got {}", fields.len())));
        }
        let rating: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| err(format!("bad rating {:?}", fields[2])))?;
        if !rating.is_finite() {
            return Err(err(format!("non-finite rating {:?}", fields[2])));
        }
        let timestamp = match fields.get(3) {
            Some(t) => Some(
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| err(format!("bad timestamp {t:?}")))?,
            ),
            None => None,
        };
        if rating < rating_threshold {
            continue;
        }
        let (user_id, item_id) = (fields[0].to_string(), fields[1].to_string());
        if seen.insert((user_id.clone(), item_id.clone())) {
            out.push(InteractionRecord {
                user_id,
                item_id,
                rating,
                timestamp,
            });
        }
    }
    if out.is_empty() {
        return Err(HrcfError::EmptyDataset(format!(
            "no interactions with rating >= {rating_threshold} in {}",
            path.display()
        )));
    }
    Ok(out)
}

/// Writes records in the tab-separated interaction format.
pub fn write_interactions<W: Write>(records: &[InteractionRecord], mut w: W) -> Result<()> {
    for r in records {
        match r.timestamp {
            Some(t) => writeln!(w, "{}\t{}\t{}\t{}", r.user_id, r.item_id, r.rating, t)?,
            None => writeln!(w, "{}\t{}\t{}", r.user_id, r.item_id, r.rating)?,
        }
    }
    Ok(())
}

/// Number of a user's `k` interactions that go to training.
fn train_count(k: usize, train_fraction: f64) -> usize {
    if k < 2 {
        k
    } else {
        ((train_fraction * k as f64).round() as usize).clamp(1, k - 1)
    }
}

/// Indexes users and items by first appearance and splits each user's
/// interactions at random into train and test.
pub fn split_and_index(
    records: &[InteractionRecord],
    train_fraction: f64,
    seed: u64,
) -> Result<InteractionGraph> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(HrcfError::Config(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if records.is_empty() {
        return Err(HrcfError::EmptyDataset("no records to split".into()));
    }
    let mut users: HashMap<&str, usize> = HashMap::new();
    let mut items: HashMap<&str, usize> = HashMap::new();
    let mut per_user: Vec<Vec<usize>> = Vec::new();
    let mut seen = HashSet::new();
    for r in records {
        let next_u = users.len();
        let u = *users.entry(r.user_id.as_str()).or_insert(next_u);
        let next_i = items.len();
        let i = *items.entry(r.item_id.as_str()).or_insert(next_i);
        if u == per_user.len() {
            per_user.push(Vec::new());
        }
        if seen.insert((u, i)) {
            per_user[u].push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (u, its) in per_user.iter_mut().enumerate() {
        its.shuffle(&mut rng);
        let cut = train_count(its.len(), train_fraction);
        train.extend(its[..cut].iter().map(|&i| (u, i)));
        test.extend(its[cut..].iter().map(|&i| (u, i)));
    }
    InteractionGraph::from_edges(users.len(), items.len(), train, test)
}

/// Parameters of the synthetic power-law interaction generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticGraphSpec {
    pub num_users: usize,
    pub num_items: usize,
    pub power_law_exponent: f64,
    pub mean_degree: f64,
    pub seed: u64,
    /// Number of latent taste groups; 1 disables the grouping.
    pub communities: usize,
    /// Popularity multiplier for items in the user's own group.
    pub community_boost: f64,
}

impl SyntheticGraphSpec {
    pub fn new(num_users: usize, num_items: usize, power_law_exponent: f64, mean_degree: f64, seed: u64) -> Self {
        Self {
            num_users,
            num_items,
            power_law_exponent,
            mean_degree,
            seed,
            communities: 1,
            community_boost: 1.0,
        }
    }

    /// Parses `users=2000,items=1500,exponent=2.0,mean_degree=12,seed=7`
    /// with optional `communities=` and `boost=`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut spec = Self::new(0, 0, 2.0, 10.0, 0);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| HrcfError::Config(format!("bad synthetic spec entry {part:?}")))?;
            let bad = || HrcfError::Config(format!("bad value for {k}: {v:?}"));
            match k.trim() {
                "users" => spec.num_users = v.trim().parse().map_err(|_| bad())?,
                "items" => spec.num_items = v.trim().parse().map_err(|_| bad())?,
                "exponent" => spec.power_law_exponent = v.trim().parse().map_err(|_| bad())?,
                "mean_degree" => spec.mean_degree = v.trim().parse().map_err(|_| bad())?,
                "seed" => spec.seed = v.trim().parse().map_err(|_| bad())?,
                "communities" => spec.communities = v.trim().parse().map_err(|_| bad())?,
                "boost" => spec.community_boost = v.trim().parse().map_err(|_| bad())?,
                other => return Err(HrcfError::Config(format!("unknown synthetic spec key {other:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 || self.num_items == 0 {
            return Err(HrcfError::Config("synthetic spec needs at least one user and item".into()));
        }
        if !(self.power_law_exponent > 1.0) {
            return Err(HrcfError::Config("power_law_exponent must exceed 1".into()));
        }
        if !(self.mean_degree > 0.0) || self.mean_degree > self.num_items as f64 {
            return Err(HrcfError::Config(format!(
                "mean_degree {} must lie in (0, num_items = {}]",
                self.mean_degree, self.num_items
            )));
        }
        if self.communities == 0 || !(self.community_boost >= 1.0) {
            return Err(HrcfError::Config("communities must be >= 1 and boost >= 1".into()));
        }
        Ok(())
    }
}

/// Discrete power-law draw `k >= 1` with `P(k) ~ k^-alpha`, by rounding a
/// continuous Pareto sample with `x_min = 1/2`.
fn sample_discrete_power_law<R: Rng>(rng: &mut R, alpha: f64) -> f64 {
    let u: f64 = rng.random();
    (0.5 * (1.0 - u).powf(-1.0 / (alpha - 1.0)) + 0.5).floor()
}

/// Generates implicit-feedback records with power-law item popularity.
///
/// Each user draws a Poisson(`mean_degree`) number of distinct items (at
/// least one) with probability proportional to item popularity, boosted for
/// items sharing the user's group when `communities > 1`.
pub fn generate_synthetic(spec: &SyntheticGraphSpec) -> Result<Vec<InteractionRecord>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let popularity: Vec<f64> = (0..spec.num_items)
        .map(|_| sample_discrete_power_law(&mut rng, spec.power_law_exponent))
        .collect();
    let item_group: Vec<usize> = (0..spec.num_items)
        .map(|_| rng.random_range(0..spec.communities))
        .collect();
    let degree_dist = Poisson::new(spec.mean_degree)
        .map_err(|e| HrcfError::Config(format!("mean_degree: {e}")))?;

    let mut records = Vec::new();
    let mut keys: Vec<(f64, usize)> = Vec::with_capacity(spec.num_items);
    for u in 0..spec.num_users {
        let group = rng.random_range(0..spec.communities);
        let k = (degree_dist.sample(&mut rng) as usize).clamp(1, spec.num_items);
        // Efraimidis–Spirakis: the k largest ln(U)/w form a weighted sample
        // without replacement.
        keys.clear();
        for (i, &w) in popularity.iter().enumerate() {
            let w = if item_group[i] == group { w * spec.community_boost } else { w };
            let r: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            keys.push((r.ln() / w, i));
        }
        if k < keys.len() {
            keys.select_nth_unstable_by(k, |a, b| b.0.total_cmp(&a.0));
        }
        let mut chosen: Vec<usize> = keys[..k].iter().map(|&(_, i)| i).collect();
        chosen.sort_unstable();
        records.extend(chosen.into_iter().map(|i| InteractionRecord {
            user_id: format!("u{u}"),
            item_id: format!("i{i}"),
            rating: 5.0,
            timestamp: None,
        }));
    }
    Ok(records)
}

/// Items split by training degree into the most popular `head_fraction`
/// (rounded up) and the rest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ItemPartition {
    pub head: Vec<usize>,
    pub tail: Vec<usize>,
    is_head: Vec<bool>,
}

impl ItemPartition {
    pub fn is_head(&self, item: usize) -> bool {
        self.is_head[item]
    }
}

pub fn head_tail_partition(graph: &InteractionGraph, head_fraction: f64) -> Result<ItemPartition> {
    if !(head_fraction > 0.0 && head_fraction < 1.0) {
        return Err(HrcfError::Config(format!(
            "head_fraction must lie in (0, 1), got {head_fraction}"
        )));
    }
    let n = graph.num_items();
    let degrees = graph.item_degrees();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| degrees[b].cmp(&degrees[a]).then(a.cmp(&b)));
    let n_head = ((head_fraction * n as f64 - 1e-9).ceil() as usize).min(n);
    let mut head = order[..n_head].to_vec();
    let mut tail = order[n_head..].to_vec();
    head.sort_unstable();
    tail.sort_unstable();
    let mut is_head = vec![false; n];
    for &i in &head {
        is_head[i] = true;
    }
    Ok(ItemPartition { head, tail, is_head })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(u: &str, i: &str, r: f64) -> InteractionRecord {
        InteractionRecord {
            user_id: u.into(),
            item_id: i.into(),
            rating: r,
            timestamp: None,
        }
    }

    fn parse(text: &str, threshold: f64) -> Result<Vec<InteractionRecord>> {
        parse_interactions(text.as_bytes(), Path::new("mem"), threshold)
    }

    #[test]
    fn threshold_keeps_high_ratings() {
        let recs = parse("u1\ti1\t5\nu1\ti2\t4\nu1\ti3\t3\nu2\ti1\t2\n", 4.0).unwrap();
        assert_eq!(recs.len(), 2);
        let all = parse("u1\ti1\t5\nu1\ti2\t4\nu1\ti3\t3\nu2\ti1\t2\n", f64::NEG_INFINITY).unwrap();
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn duplicates_collapse_and_comments_skip() {
        let recs = parse("# header\nu1\ti1\t5\t100\nu1\ti1\t4\t200\n", 4.0).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].timestamp, Some(100));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse("u1\ti1\t5\nu2 i2 5\n", 4.0) {
            Err(HrcfError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("u1\ti1\tfive\n", 4.0), Err(HrcfError::Parse { line: 1, .. })));
        assert!(matches!(parse("u1\ti1\tNaN\n", 4.0), Err(HrcfError::Parse { .. })));
    }

    #[test]
    fn empty_after_filter_is_error() {
        assert!(matches!(parse("u1\ti1\t1\n", 4.0), Err(HrcfError::EmptyDataset(_))));
    }

    #[test]
    fn split_counts_per_user() {
        let mut recs: Vec<_> = (0..10).map(|i| rec("a", &format!("i{i}"), 5.0)).collect();
        recs.push(rec("b", "i0", 5.0));
        let g = split_and_index(&recs, 0.8, 3).unwrap();
        assert_eq!(g.user_adj().degree(0), 8);
        assert_eq!(g.test_items(0).len(), 2);
        assert_eq!(g.user_adj().degree(1), 1);
        assert!(g.test_items(1).is_empty());
    }

    #[test]
    fn two_interactions_still_get_a_test_item() {
        let recs = vec![rec("a", "x", 5.0), rec("a", "y", 5.0)];
        let g = split_and_index(&recs, 0.8, 0).unwrap();
        assert_eq!(g.train_edges().len(), 1);
        assert_eq!(g.test_edges().len(), 1);
    }

    #[test]
    fn split_is_deterministic() {
        let spec = SyntheticGraphSpec::new(50, 40, 2.0, 6.0, 1);
        let recs = generate_synthetic(&spec).unwrap();
        let a = split_and_index(&recs, 0.8, 9).unwrap();
        let b = split_and_index(&recs, 0.8, 9).unwrap();
        assert_eq!(a.train_edges(), b.train_edges());
        assert_eq!(a.test_edges(), b.test_edges());
        let mut ea = Vec::new();
        let mut eb = Vec::new();
        a.write_export(&mut ea).unwrap();
        b.write_export(&mut eb).unwrap();
        assert_eq!(ea, eb);
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let recs = vec![rec("a", "x", 5.0)];
        assert!(split_and_index(&recs, 1.0, 0).is_err());
        assert!(split_and_index(&recs, 0.0, 0).is_err());
        assert!(split_and_index(&[], 0.5, 0).is_err());
    }

    #[test]
    fn from_edges_rejects_overlap_and_range() {
        assert!(InteractionGraph::from_edges(2, 2, vec![(0, 0)], vec![(0, 0)]).is_err());
        assert!(matches!(
            InteractionGraph::from_edges(2, 2, vec![(0, 2)], vec![]),
            Err(HrcfError::Index { what: "item", .. })
        ));
    }

    #[test]
    fn export_format() {
        let g = InteractionGraph::from_edges(2, 3, vec![(0, 1), (1, 2)], vec![(0, 0)]).unwrap();
        let mut buf = Vec::new();
        g.write_export(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "2 3 2 1\n0 1\n1 2\n0 0\n");
    }

    #[test]
    fn synthetic_is_deterministic() {
        let spec = SyntheticGraphSpec::new(100, 80, 2.0, 5.0, 7);
        assert_eq!(generate_synthetic(&spec).unwrap(), generate_synthetic(&spec).unwrap());
    }

    #[test]
    fn synthetic_mean_degree() {
        let spec = SyntheticGraphSpec::new(2000, 500, 2.0, 5.0, 11);
        let recs = generate_synthetic(&spec).unwrap();
        let mean = recs.len() as f64 / 2000.0;
        assert!((4.0..=6.0).contains(&mean), "mean degree {mean}");
    }

    #[test]
    fn synthetic_rejects_infeasible() {
        let spec = SyntheticGraphSpec::new(10, 4, 2.0, 5.0, 0);
        assert!(matches!(generate_synthetic(&spec), Err(HrcfError::Config(_))));
        assert!(generate_synthetic(&SyntheticGraphSpec::new(10, 40, 1.0, 5.0, 0)).is_err());
    }

    #[test]
    fn synthetic_spec_parses() {
        let s = SyntheticGraphSpec::parse("users=20, items=30,exponent=2.5,mean_degree=4,seed=3,communities=4,boost=8").unwrap();
        assert_eq!((s.num_users, s.num_items, s.seed, s.communities), (20, 30, 3, 4));
        assert_eq!(s.community_boost, 8.0);
        assert!(SyntheticGraphSpec::parse("users=20,items=30,bogus=1").is_err());
    }

    /// Least-squares slope of log(degree) against log(rank).
    fn loglog_slope(degrees: &[usize], ranks: std::ops::Range<usize>) -> f64 {
        let pts: Vec<(f64, f64)> = ranks
            .map(|r| (((r + 1) as f64).ln(), (degrees[r] as f64).ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn synthetic_degree_rank_slope() {
        let alpha = 2.0;
        let spec = SyntheticGraphSpec::new(5000, 10_000, alpha, 20.0, 5);
        let recs = generate_synthetic(&spec).unwrap();
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for r in &recs {
            *counts.entry(r.item_id.as_str()).or_default() += 1;
        }
        let mut degrees: Vec<usize> = counts.into_values().collect();
        degrees.sort_unstable_by(|a, b| b.cmp(a));
        // skip the few items saturated at num_users and the sparsely sampled tail
        let slope = loglog_slope(&degrees, 10..1000);
        let target = -1.0 / (alpha - 1.0);
        assert!((slope - target).abs() <= 0.3, "slope {slope}");
    }

    #[test]
    fn head_tail_examples() {
        let train: Vec<_> = (0..10).map(|i| (0, i)).collect();
        let g = InteractionGraph::from_edges(1, 10, train, vec![]).unwrap();
        let p = head_tail_partition(&g, 0.2).unwrap();
        assert_eq!(p.head, vec![0, 1]);
        assert_eq!(p.tail.len(), 8);

        // item degrees [5, 4, 3, 2] with item 0 most popular
        let mut train = Vec::new();
        for (item, deg) in [(0usize, 5usize), (1, 4), (2, 3), (3, 2)] {
            train.extend((0..deg).map(|u| (u, item)));
        }
        let g = InteractionGraph::from_edges(5, 4, train, vec![]).unwrap();
        let p = head_tail_partition(&g, 0.5).unwrap();
        assert_eq!(p.head, vec![0, 1]);
        assert_eq!(p.tail, vec![2, 3]);
        assert!(p.is_head(1) && !p.is_head(2));
    }

    #[test]
    fn head_count_rounds_up_without_float_noise() {
        let train: Vec<_> = (0..10).map(|i| (0, i)).collect();
        let g = InteractionGraph::from_edges(1, 10, train, vec![]).unwrap();
        assert_eq!(head_tail_partition(&g, 0.7).unwrap().head.len(), 7);
        assert_eq!(head_tail_partition(&g, 0.15).unwrap().head.len(), 2);
    }
}
