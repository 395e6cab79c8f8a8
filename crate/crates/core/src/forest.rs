//! Bagged CART regression trees grown on the observed response, and the
//! local weights they induce.
//!
//! For a test point `x`, a tree gives weight `c_i / |leaf|` to row `i`, where
//! `c_i` is the number of times row `i` appears in the bag inside the leaf
//! that contains `x`. The forest weight is the mean of the tree weights, so it
//! is nonnegative and sums to one.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{check_tau, Dataset};
use crate::error::{Error, Result};
use crate::rng;

pub const MODEL_FORMAT: &str = "cqrf-forest";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    /// Number of trees `B`.
    pub n_trees: usize,
    /// Minimum leaf size `m`.
    pub min_node_size: usize,
    /// Features tried per split.
    pub mtry: usize,
    /// Each child keeps at least this fraction of its parent's rows.
    pub min_child_fraction: f64,
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestConfig {
    /// Defaults for `p` features: `mtry = ceil(p/3)`, `min_child_fraction = 0.05`,
    /// bootstrap on.
    pub fn new(p: usize, n_trees: usize, min_node_size: usize, seed: u64) -> Self {
        ForestConfig {
            n_trees,
            min_node_size,
            mtry: p.div_ceil(3).max(1),
            min_child_fraction: 0.05,
            bootstrap: true,
            seed,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
        }
        if self.min_node_size < 1 {
            return Err(Error::InvalidConfig("min_node_size must be at least 1".into()));
        }
        if self.mtry < 1 || self.mtry > p {
            return Err(Error::InvalidConfig(format!(
                "mtry must lie in [1, {p}], got {}",
                self.mtry
            )));
        }
        if !(self.min_child_fraction > 0.0 && self.min_child_fraction <= 0.5) {
            return Err(Error::InvalidConfig(
                "min_child_fraction must lie in (0, 0.5]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// `x` goes left iff `x[feature] <= threshold`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// In-bag rows of the leaf, with bootstrap multiplicity.
    Leaf { rows: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
    bag: Vec<usize>,
}

/// Sparse weights over training rows, sorted by row index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightVector {
    entries: Vec<(usize, f64)>,
}

impl WeightVector {
    /// Builds a weight vector from `(row, weight)` pairs; duplicate rows are
    /// summed and zero weights dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut entries: Vec<(usize, f64)> = pairs.into_iter().collect();
        if entries.iter().any(|&(_, w)| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidData("weights must be finite and nonnegative".into()));
        }
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, w) in entries {
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += w,
                _ => merged.push((i, w)),
            }
        }
        merged.retain(|&(_, w)| w > 0.0);
        Ok(WeightVector { entries: merged })
    }

    /// Weight `1/k` on each listed row.
    pub fn uniform(rows: &[usize]) -> Result<Self> {
        let w = 1.0 / rows.len() as f64;
        Self::from_pairs(rows.iter().map(|&i| (i, w)))
    }

    pub fn from_dense(w: &[f64]) -> Result<Self> {
        Self::from_pairs(w.iter().copied().enumerate())
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn get(&self, row: usize) -> f64 {
        self.entries
            .binary_search_by_key(&row, |&(i, _)| i)
            .map(|k| self.entries[k].1)
            .unwrap_or(0.0)
    }

    /// Number of rows with positive weight.
    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w).sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w).fold(0.0, f64::max)
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(i, w) in &self.entries {
            out[i] = w;
        }
        out
    }
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn bag(&self) -> &[usize] {
        &self.bag
    }

    /// Index of the leaf node containing `x`.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { .. } => return k,
            }
        }
    }

    /// In-bag rows of the leaf containing `x`.
    pub fn leaf_rows(&self, x: &[f64]) -> &[usize] {
        match &self.nodes[self.leaf_index(x)] {
            Node::Leaf { rows } => rows,
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &[usize]> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { rows } => Some(rows.as_slice()),
            Node::Split { .. } => None,
        })
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().count()
    }

    /// Single-tree weights `w(X_i, x; theta)`.
    pub fn weights(&self, x: &[f64]) -> WeightVector {
        let rows = self.leaf_rows(x);
        let mut counts: Vec<(usize, usize)> = Vec::new();
        let mut sorted = rows.to_vec();
        sorted.sort_unstable();
        for r in sorted {
            match counts.last_mut() {
                Some((i, c)) if *i == r => *c += 1,
                _ => counts.push((r, 1)),
            }
        }
        let size = rows.len() as f64;
        WeightVector {
            entries: counts
                .into_iter()
                .map(|(i, c)| (i, c as f64 / size))
                .collect(),
        }
    }

    fn grow(data: &Dataset, cfg: &ForestConfig, bag: Vec<usize>, rng: &mut rng::Rng) -> Tree {
        let y = data.response();
        let mut nodes = vec![Node::Leaf { rows: Vec::new() }];
        let mut stack = vec![(0usize, bag.clone())];
        while let Some((slot, rows)) = stack.pop() {
            match best_split(data, y, &rows, cfg, rng) {
                Some((feature, threshold)) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = rows
                        .into_iter()
                        .partition(|&i| data.feature(i, feature) <= threshold);
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(Node::Leaf { rows: Vec::new() });
                    nodes.push(Node::Leaf { rows: Vec::new() });
                    nodes[slot] = Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    };
                    stack.push((right, r));
                    stack.push((left, l));
                }
                None => nodes[slot] = Node::Leaf { rows },
            }
        }
        Tree { nodes, bag }
    }
}

/// Best variance-reduction split of `rows`, or `None` when the node must be
/// a leaf. Ties go to the lowest feature index, then the lowest threshold.
fn best_split(
    data: &Dataset,
    y: &[f64],
    rows: &[usize],
    cfg: &ForestConfig,
    rng: &mut rng::Rng,
) -> Option<(usize, f64)> {
    let size = rows.len();
    if size < 2 * cfg.min_node_size {
        return None;
    }
    let first = y[rows[0]];
    if rows.iter().all(|&i| y[i] == first) {
        return None;
    }
    let min_child = cfg
        .min_node_size
        .max((cfg.min_child_fraction * size as f64).ceil() as usize)
        .max(1);
    if 2 * min_child > size {
        return None;
    }

    let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / size as f64;
    let mut features = index::sample(rng, data.p(), cfg.mtry).into_vec();
    features.sort_unstable();

    let mut best: Option<(f64, usize, f64)> = None;
    let mut column: Vec<(f64, f64)> = Vec::with_capacity(size);
    for &f in &features {
        column.clear();
        column.extend(rows.iter().map(|&i| (data.feature(i, f), y[i] - mean)));
        column.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_sum = 0.0;
        for k in 1..size {
            left_sum += column[k - 1].1;
            let (lo, hi) = (column[k - 1].0, column[k].0);
            if lo == hi || k < min_child || size - k < min_child {
                continue;
            }
            let (nl, nr) = (k as f64, (size - k) as f64);
            // SSE reduction with centered responses: s_l^2 (1/n_l + 1/n_r).
            let gain = left_sum * left_sum * (1.0 / nl + 1.0 / nr);
            if gain > 0.0 && best.is_none_or(|(g, _, _)| gain > g) {
                let mut threshold = 0.5 * (lo + hi);
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some((gain, f, threshold));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// A fitted forest together with the training responses it was grown on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    config: ForestConfig,
    n_train: usize,
    p: usize,
    feature_names: Vec<String>,
    response: Vec<f64>,
    trees: Vec<Tree>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    forest: Forest,
}

impl Forest {
    /// Grows `cfg.n_trees` trees on `data`, ignoring the censoring flags.
    /// Tree `t` draws from stream `t` of `cfg.seed`, so the result does not
    /// depend on how trees are scheduled across threads.
    pub fn fit(data: &Dataset, cfg: &ForestConfig) -> Result<Forest> {
        cfg.validate(data.p())?;
        let n = data.n();
        let bags: Vec<Vec<usize>> = (0..cfg.n_trees)
            .map(|t| {
                if cfg.bootstrap {
                    let mut r = rng::stream(cfg.seed, 2 * t as u64 + 1);
                    (0..n).map(|_| r.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                }
            })
            .collect();
        Self::fit_with_bags(data, cfg, bags)
    }

    /// Grows one tree per supplied bag (rows with multiplicity).
    pub fn fit_with_bags(data: &Dataset, cfg: &ForestConfig, bags: Vec<Vec<usize>>) -> Result<Forest> {
        cfg.validate(data.p())?;
        if bags.is_empty() {
            return Err(Error::InvalidConfig("at least one bag is required".into()));
        }
        if bags.iter().any(|b| b.is_empty() || b.iter().any(|&i| i >= data.n())) {
            return Err(Error::InvalidConfig("bags must be nonempty lists of row indices".into()));
        }
        let trees: Vec<Tree> = bags
            .into_par_iter()
            .enumerate()
            .map(|(t, bag)| {
                let mut r = rng::stream(cfg.seed, 2 * t as u64 + 2);
                Tree::grow(data, cfg, bag, &mut r)
            })
            .collect();
        Ok(Forest {
            config: ForestConfig {
                n_trees: trees.len(),
                ..cfg.clone()
            },
            n_train: data.n(),
            p: data.p(),
            feature_names: data.feature_names().to_vec(),
            response: data.response().to_vec(),
            trees,
        })
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Responses of the training rows the forest was grown on.
    pub fn response(&self) -> &[f64] {
        &self.response
    }

    /// Smallest leaf size over all trees.
    pub fn min_leaf_size(&self) -> usize {
        self.trees
            .iter()
            .flat_map(|t| t.leaves().map(<[usize]>::len))
            .min()
            .unwrap_or(0)
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.p {
            return Err(Error::LengthMismatch {
                what: "feature vector vs forest dimension",
                left: x.len(),
                right: self.p,
            });
        }
        Ok(())
    }

    /// Random forest weights `w(X_i, x)`: the mean of the tree weights.
    pub fn weights(&self, x: &[f64]) -> Result<WeightVector> {
        self.check_x(x)?;
        let mut dense = vec![0.0; self.n_train];
        let mut touched = Vec::new();
        for tree in &self.trees {
            let rows = tree.leaf_rows(x);
            let share = 1.0 / rows.len() as f64;
            for &i in rows {
                if dense[i] == 0.0 {
                    touched.push(i);
                }
                dense[i] += share;
            }
        }
        touched.sort_unstable();
        let b = self.trees.len() as f64;
        Ok(WeightVector {
            entries: touched.into_iter().map(|i| (i, dense[i] / b)).collect(),
        })
    }

    /// Forest prediction of the conditional mean, `sum_i w_i Y_i`.
    pub fn weighted_mean(&self, x: &[f64]) -> Result<f64> {
        let w = self.weights(x)?;
        Ok(w.iter().map(|(i, wi)| wi * self.response[i]).sum())
    }

    /// Quantile regression forest prediction: the smallest training response
    /// at which the weighted CDF reaches `tau`.
    pub fn weighted_quantile(&self, x: &[f64], tau: f64) -> Result<f64> {
        check_tau(tau)?;
        let w = self.weights(x)?;
        weighted_quantile(&w, &self.response, tau)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(
            BufWriter::new(f),
            &ModelFile {
                format: MODEL_FORMAT.into(),
                version: MODEL_VERSION,
                forest: self.clone(),
            },
        )
        .map_err(|e| Error::Model(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Forest> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_reader(BufReader::new(f))
            .map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Model(format!("unexpected format `{}`", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                file.version
            )));
        }
        Ok(file.forest)
    }
}

/// `inf { y in {Y_i : w_i > 0} : sum_j w_j 1(Y_j <= y) >= tau }`.
///
/// A cumulative weight within `ROOT_TOL` of `tau` counts as reaching it, which
/// absorbs the rounding of weight sums.
pub fn weighted_quantile(w: &WeightVector, y: &[f64], tau: f64) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut pts: Vec<(f64, f64)> = w.iter().map(|(i, wi)| (y[i], wi)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cum = 0.0;
    let mut k = 0;
    while k < pts.len() {
        let v = pts[k].0;
        while k < pts.len() && pts[k].0 == v {
            cum += pts[k].1;
            k += 1;
        }
        if cum >= tau - crate::estimator::ROOT_TOL {
            return Ok(v);
        }
    }
    Ok(pts[pts.len() - 1].0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{simulate, SimConfig, SimModel};

    fn toy(y: Vec<f64>) -> Dataset {
        let n = y.len();
        let x = (0..n).map(|i| i as f64).collect();
        Dataset::new(x, 1, y, vec![true; n], None).unwrap()
    }

    #[test]
    fn single_row_is_a_single_leaf() {
        let d = toy(vec![3.0]);
        let cfg = ForestConfig::new(1, 5, 10, 1);
        let f = Forest::fit(&d, &cfg).unwrap();
        assert_eq!(f.trees().len(), 5);
        for t in f.trees() {
            assert_eq!(t.nodes(), &[Node::Leaf { rows: vec![0] }]);
        }
    }

    #[test]
    fn constant_response_never_splits() {
        let d = toy(vec![2.0; 100]);
        let f = Forest::fit(&d, &ForestConfig::new(1, 10, 5, 3)).unwrap();
        assert!(f.trees().iter().all(|t| t.nodes().len() == 1));
        assert!((f.weighted_mean(&[50.0]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_leaf_weights_are_uniform() {
        let d = toy((0..10).map(|i| i as f64).collect());
        let mut cfg = ForestConfig::new(1, 1, 10, 1);
        cfg.bootstrap = false;
        let f = Forest::fit(&d, &cfg).unwrap();
        let w = f.trees()[0].weights(&[3.3]);
        assert_eq!(w.support_len(), 10);
        assert!(w.iter().all(|(_, wi)| wi == 0.1));
        // without bootstrap, one single-leaf tree predicts the sample mean
        assert!((f.weighted_mean(&[0.0]).unwrap() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn leaf_weights_follow_leaf_membership() {
        let tree = Tree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { rows: vec![3, 7] },
                Node::Leaf {
                    rows: vec![1, 4, 4, 2],
                },
            ],
            bag: vec![3, 7, 1, 4, 4, 2],
        };
        let w = tree.weights(&[0.0]);
        assert_eq!(w.entries(), &[(3, 0.5), (7, 0.5)]);
        // row 4 twice in a 4-element leaf
        let w = tree.weights(&[1.0]);
        assert_eq!(w.get(4), 0.5);
        assert_eq!(w.get(1), 0.25);
        assert_eq!(w.get(7), 0.0);
    }

    #[test]
    fn forest_of_one_tree_matches_tree_weights() {
        let d = simulate(&SimConfig::new(SimModel::Aft1D, 200, 0.08, 4)).unwrap();
        let f = Forest::fit(&d, &ForestConfig::new(1, 1, 10, 9)).unwrap();
        for x in [0.1, 0.9, 1.7] {
            let a = f.weights(&[x]).unwrap();
            let b = f.trees()[0].weights(&[x]);
            assert_eq!(a.support_len(), b.support_len());
            for ((i, u), (j, v)) in a.iter().zip(b.iter()) {
                assert_eq!(i, j);
                assert!((u - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_trees_average() {
        let d = toy(vec![1.0, 2.0]);
        let mut cfg = ForestConfig::new(1, 2, 1, 0);
        cfg.bootstrap = false;
        let f = Forest::fit_with_bags(&d, &cfg, vec![vec![0], vec![1]]).unwrap();
        let w = f.weights(&[0.0]).unwrap();
        assert_eq!(w.entries(), &[(0, 0.5), (1, 0.5)]);
    }

    #[test]
    fn weighted_quantile_examples() {
        let y = [1.0, 2.0, 3.0, 4.0];
        let w = WeightVector::uniform(&[0, 1, 2, 3]).unwrap();
        assert_eq!(weighted_quantile(&w, &y, 0.5).unwrap(), 2.0);
        let point = WeightVector::from_pairs([(2, 1.0)]).unwrap();
        for tau in [0.01, 0.5, 0.99] {
            assert_eq!(weighted_quantile(&point, &y, tau).unwrap(), 3.0);
        }
        let y5 = [1.0, 2.0, 3.0, 4.0, 5.0];
        let w5 = WeightVector::uniform(&[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(weighted_quantile(&w5, &y5, 0.5).unwrap(), 3.0);
        assert!(weighted_quantile(&WeightVector::default(), &y, 0.5).is_err());
    }

    #[test]
    fn split_respects_leaf_and_child_constraints() {
        let d = simulate(&SimConfig::new(SimModel::AftMultiD, 400, 0.05, 8)).unwrap();
        let mut cfg = ForestConfig::new(5, 20, 7, 2);
        cfg.min_child_fraction = 0.2;
        let f = Forest::fit(&d, &cfg).unwrap();
        for tree in f.trees() {
            let mut leaf_rows: Vec<usize> = tree.leaves().flatten().copied().collect();
            let mut bag = tree.bag().to_vec();
            leaf_rows.sort_unstable();
            bag.sort_unstable();
            assert_eq!(leaf_rows, bag);
            check_node(&d, tree, 0, &cfg);
        }
    }

    fn subtree_rows(tree: &Tree, k: usize) -> Vec<usize> {
        match &tree.nodes()[k] {
            Node::Leaf { rows } => rows.clone(),
            Node::Split { left, right, .. } => {
                let mut r = subtree_rows(tree, *left);
                r.extend(subtree_rows(tree, *right));
                r
            }
        }
    }

    fn check_node(d: &Dataset, tree: &Tree, k: usize, cfg: &ForestConfig) {
        if let Node::Split {
            feature,
            threshold,
            left,
            right,
        } = &tree.nodes()[k]
        {
            let l = subtree_rows(tree, *left);
            let r = subtree_rows(tree, *right);
            let parent = (l.len() + r.len()) as f64;
            assert!(l.len() >= cfg.min_node_size && r.len() >= cfg.min_node_size);
            assert!(l.len() as f64 >= cfg.min_child_fraction * parent);
            assert!(r.len() as f64 >= cfg.min_child_fraction * parent);
            assert!(l.iter().all(|&i| d.feature(i, *feature) <= *threshold));
            assert!(r.iter().all(|&i| d.feature(i, *feature) > *threshold));
            check_node(d, tree, *left, cfg);
            check_node(d, tree, *right, cfg);
        }
    }

    #[test]
    fn fit_is_reproducible() {
        let d = simulate(&SimConfig::new(SimModel::Sine1D, 150, 0.2, 1)).unwrap();
        let cfg = ForestConfig::new(1, 30, 5, 77);
        assert_eq!(Forest::fit(&d, &cfg).unwrap(), Forest::fit(&d, &cfg).unwrap());
    }

    #[test]
    fn config_validation() {
        let d = toy(vec![1.0, 2.0, 3.0]);
        let mut cfg = ForestConfig::new(1, 1, 1, 0);
        cfg.mtry = 2;
        assert!(Forest::fit(&d, &cfg).is_err());
        cfg.mtry = 1;
        cfg.min_child_fraction = 0.6;
        assert!(Forest::fit(&d, &cfg).is_err());
        cfg.min_child_fraction = 0.1;
        cfg.n_trees = 0;
        assert!(Forest::fit(&d, &cfg).is_err());
        assert!(Forest::fit(&d, &ForestConfig::new(1, 2, 1, 0)).unwrap().weights(&[0.0, 1.0]).is_err());
    }
}
