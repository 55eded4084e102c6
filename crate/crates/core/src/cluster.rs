//! Term similarity from the concept set, feature standardization, Ward
//! hierarchical clustering, and flat cluster extraction.
//!
//! Term similarity is the Jaccard overlap of concept-intent membership: two
//! terms are similar when they appear in the intents of mostly the same
//! formal concepts. Each term's feature vector is its row of the similarity
//! matrix (a membership-indicator matrix is available as an alternative);
//! features are standardized column-wise before clustering, mirroring the
//! usual scale-then-link setup.
//!
//! Linkage maintains inter-cluster distances with the Lance-Williams update
//! for Ward's criterion. Ties are broken on the lexicographically smallest
//! cluster-index pair, so merge order is deterministic across runs and
//! platforms.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fca::ConceptSet;
use crate::scalar::Scalar;

/// Symmetric term×term similarity with unit diagonal, entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<F: Scalar = f64> {
    term_keys: Vec<String>,
    values: Vec<F>,
}

impl<F: Scalar> SimilarityMatrix<F> {
    pub fn term_keys(&self) -> &[String] {
        &self.term_keys
    }

    pub fn len(&self) -> usize {
        self.term_keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.term_keys.is_empty()
    }

    pub fn value(&self, i: usize, j: usize) -> F {
        self.values[i * self.term_keys.len() + j]
    }

    /// Writes the matrix as CSV with a leading `term` column.
    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["term".to_string()];
        header.extend(self.term_keys.iter().cloned());
        w.write_record(&header)?;
        for (i, key) in self.term_keys.iter().enumerate() {
            let mut record = vec![key.clone()];
            record.extend((0..self.len()).map(|j| format!("{}", self.value(i, j))));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Conceptual similarity over intent membership.
///
/// `C(t)` is the set of concepts whose intent contains `t`;
/// `sim(t, u) = |C(t) ∩ C(u)| / |C(t) ∪ C(u)|`, with `sim(t, t) = 1` by
/// convention and `0` when both membership sets are empty. `term_keys` must
/// name exactly the attributes the concept set was enumerated over.
pub fn conceptual_similarity<F: Scalar>(
    concepts: &ConceptSet,
    term_keys: &[String],
) -> Result<SimilarityMatrix<F>> {
    if term_keys.len() != concepts.n_attributes() {
        return Err(Error::unknown(
            "term set for concept collection",
            format!("{} keys vs {} attributes", term_keys.len(), concepts.n_attributes()),
        ));
    }
    let n = term_keys.len();
    // Concept membership per term, as a bitset over concept indices.
    let memberships: Vec<crate::fca::BitSet> = (0..n)
        .map(|t| {
            crate::fca::BitSet::from_indices(
                concepts.len(),
                concepts
                    .concepts()
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.intent.contains(t))
                    .map(|(i, _)| i),
            )
        })
        .collect();
    let rows: Vec<Vec<F>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        F::one()
                    } else {
                        let union = memberships[i].union_count(&memberships[j]);
                        if union == 0 {
                            F::zero()
                        } else {
                            F::from_count(memberships[i].intersection_count(&memberships[j]))
                                / F::from_count(union)
                        }
                    }
                })
                .collect()
        })
        .collect();
    let values = rows.into_iter().flatten().collect();
    Ok(SimilarityMatrix { term_keys: term_keys.to_vec(), values })
}

/// Row-per-item feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<F: Scalar = f64> {
    row_keys: Vec<String>,
    n_cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> FeatureMatrix<F> {
    pub fn new(row_keys: Vec<String>, n_cols: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != row_keys.len() * n_cols {
            return Err(Error::InvalidArgument(format!(
                "feature buffer has {} cells for a {}x{} matrix",
                data.len(),
                row_keys.len(),
                n_cols
            )));
        }
        Ok(Self { row_keys, n_cols, data })
    }

    pub fn row_keys(&self) -> &[String] {
        &self.row_keys
    }

    pub fn n_rows(&self) -> usize {
        self.row_keys.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// Euclidean distance between two rows.
    pub fn distance(&self, i: usize, j: usize) -> F {
        let (a, b) = (self.row(i), self.row(j));
        a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<F>().sqrt()
    }
}

/// Term×concept membership indicators, the documented alternative feature
/// source to similarity-matrix rows.
pub fn concept_membership_features<F: Scalar>(
    concepts: &ConceptSet,
    term_keys: &[String],
) -> Result<FeatureMatrix<F>> {
    if term_keys.len() != concepts.n_attributes() {
        return Err(Error::unknown(
            "term set for concept collection",
            format!("{} keys vs {} attributes", term_keys.len(), concepts.n_attributes()),
        ));
    }
    let n = term_keys.len();
    let k = concepts.len();
    let mut data = vec![F::zero(); n * k];
    for (c_idx, concept) in concepts.concepts().iter().enumerate() {
        for t in concept.intent.iter() {
            data[t * k + c_idx] = F::one();
        }
    }
    FeatureMatrix::new(term_keys.to_vec(), k, data)
}

/// Standardizes each column of the similarity matrix to mean 0 and population
/// variance 1; zero-variance columns become all zeros. Requires at least two
/// terms.
pub fn standardize_features<F: Scalar>(matrix: &SimilarityMatrix<F>) -> Result<FeatureMatrix<F>> {
    let n = matrix.len();
    let features = FeatureMatrix::new(matrix.term_keys.clone(), n, matrix.values.clone())?;
    standardize_columns(features)
}

/// Column standardization of an arbitrary feature matrix.
pub fn standardize_columns<F: Scalar>(matrix: FeatureMatrix<F>) -> Result<FeatureMatrix<F>> {
    let (n, m) = (matrix.n_rows(), matrix.n_cols());
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "standardization needs at least 2 rows, got {n}"
        )));
    }
    let mut data = matrix.data;
    let count = F::from_count(n);
    for col in 0..m {
        let mean = (0..n).map(|r| data[r * m + col]).sum::<F>() / count;
        let variance = (0..n)
            .map(|r| {
                let d = data[r * m + col] - mean;
                d * d
            })
            .sum::<F>()
            / count;
        let stddev = variance.sqrt();
        for r in 0..n {
            let cell = &mut data[r * m + col];
            *cell = if stddev > F::zero() { (*cell - mean) / stddev } else { F::zero() };
        }
    }
    FeatureMatrix::new(matrix.row_keys, m, data)
}

/// One agglomeration step: clusters `a` and `b` merge at `height` into a
/// cluster of `size` items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge<F: Scalar = f64> {
    pub a: usize,
    pub b: usize,
    pub height: F,
    pub size: usize,
}

/// Stepwise dendrogram over `n_items` leaves; the cluster created by merge
/// `step` gets id `n_items + step`, mirroring the usual stepwise encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram<F: Scalar = f64> {
    n_items: usize,
    merges: Vec<Merge<F>>,
}

impl<F: Scalar> Dendrogram<F> {
    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn merges(&self) -> &[Merge<F>] {
        &self.merges
    }

    /// Serializes the merge list as JSON.
    pub fn to_json<W: Write>(&self, writer: W) -> Result<()> {
        #[derive(Serialize)]
        struct Out<'a, F: Scalar> {
            n_items: usize,
            merges: &'a [Merge<F>],
        }
        serde_json::to_writer_pretty(writer, &Out { n_items: self.n_items, merges: &self.merges })?;
        Ok(())
    }
}

/// Ward agglomerative clustering over the rows of `features`.
///
/// Distances start as Euclidean row distances and are maintained with the
/// Lance-Williams update for Ward's criterion, so each merge minimizes the
/// increase in total within-cluster variance. Heights are non-decreasing.
pub fn ward_linkage<F: Scalar>(features: &FeatureMatrix<F>) -> Result<Dendrogram<F>> {
    let n = features.n_rows();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("clustering needs at least 2 rows, got {n}")));
    }
    // Ward's update is algebraic on squared distances; heights are square
    // roots of the merged values. Slots hold active clusters.
    let mut dist2: Vec<Vec<F>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = features.distance(i, j);
                    d * d
                })
                .collect()
        })
        .collect();
    let mut cluster_id: Vec<usize> = (0..n).collect();
    let mut sizes: Vec<usize> = vec![1; n];
    let mut active: Vec<bool> = vec![true; n];
    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..(n - 1) {
        // Smallest squared distance; ties resolved on the smallest ascending
        // (cluster_id, cluster_id) pair.
        let mut best: Option<(F, usize, usize, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                let (id_lo, id_hi) = if cluster_id[i] < cluster_id[j] {
                    (cluster_id[i], cluster_id[j])
                } else {
                    (cluster_id[j], cluster_id[i])
                };
                let better = match &best {
                    None => true,
                    Some((d, lo, hi, _, _)) => {
                        dist2[i][j] < *d || (dist2[i][j] == *d && (id_lo, id_hi) < (*lo, *hi))
                    }
                };
                if better {
                    best = Some((dist2[i][j], id_lo, id_hi, i, j));
                }
            }
        }
        let (d2, id_lo, id_hi, slot_a, slot_b) = best.expect("two active clusters remain");
        let size_a = sizes[slot_a];
        let size_b = sizes[slot_b];
        let merged_size = size_a + size_b;
        merges.push(Merge { a: id_lo, b: id_hi, height: d2.sqrt(), size: merged_size });
        // Fold cluster b into slot a, then refresh distances to the merge.
        for x in 0..n {
            if !active[x] || x == slot_a || x == slot_b {
                continue;
            }
            let size_x = F::from_count(sizes[x]);
            let fa = F::from_count(size_a) + size_x;
            let fb = F::from_count(size_b) + size_x;
            let total = F::from_count(merged_size + sizes[x]);
            let updated = (fa * dist2[slot_a][x] + fb * dist2[slot_b][x] - size_x * d2) / total;
            dist2[slot_a][x] = updated;
            dist2[x][slot_a] = updated;
        }
        active[slot_b] = false;
        sizes[slot_a] = merged_size;
        cluster_id[slot_a] = n + step;
    }
    Ok(Dendrogram { n_items: n, merges })
}

/// A flat clustering: one label in `1..=k` per item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
}

impl ClusterAssignment {
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("empty assignment".into()));
        }
        let k = labels.iter().copied().max().unwrap_or(0);
        if labels.contains(&0) {
            return Err(Error::InvalidArgument("labels are 1-based".into()));
        }
        for expected in 1..=k {
            if !labels.contains(&expected) {
                return Err(Error::InvalidArgument(format!(
                    "labels must be contiguous 1..=k, missing {expected}"
                )));
            }
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_items(&self) -> usize {
        self.labels.len()
    }

    /// Item indices of each cluster, by label.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (item, &label) in self.labels.iter().enumerate() {
            out[label - 1].push(item);
        }
        out
    }

    /// Cluster sizes indexed by `label - 1`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &label in &self.labels {
            sizes[label - 1] += 1;
        }
        sizes
    }

    /// Writes `term,cluster` rows.
    pub fn to_csv<W: Write>(&self, keys: &[String], writer: W) -> Result<()> {
        if keys.len() != self.labels.len() {
            return Err(Error::InvalidArgument("key count does not match assignment".into()));
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["term", "cluster"])?;
        for (key, label) in keys.iter().zip(&self.labels) {
            w.write_record([key.as_str(), &label.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Cuts the dendrogram at the lowest level yielding at most `k` clusters.
///
/// Merges are applied in recorded order until `k` clusters remain; merges
/// tied with the cut height are applied as well (no threshold can separate
/// them), so the result can have fewer than `k` clusters. Labels are assigned
/// in order of each cluster's smallest item index.
pub fn cut_maxclust<F: Scalar>(dendrogram: &Dendrogram<F>, k: usize) -> Result<ClusterAssignment> {
    let n = dendrogram.n_items();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k={k} outside 1..={n}")));
    }
    let mut parent: Vec<usize> = (0..(2 * n - 1)).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let prefix = n - k;
    let cut_height = if prefix == 0 { None } else { Some(dendrogram.merges()[prefix - 1].height) };
    for (step, merge) in dendrogram.merges().iter().enumerate() {
        let apply = match (step < prefix, cut_height) {
            (true, _) => true,
            // Ties at the cut height cannot be split by any threshold.
            (false, Some(h)) => merge.height == h,
            (false, None) => false,
        };
        if !apply {
            break;
        }
        let merged = n + step;
        let ra = find(&mut parent, merge.a);
        let rb = find(&mut parent, merge.b);
        parent[ra] = merged;
        parent[rb] = merged;
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut labels = vec![0usize; n];
    for (item, slot) in labels.iter_mut().enumerate() {
        let root = find(&mut parent, item);
        *slot = match roots.iter().position(|&r| r == root) {
            Some(pos) => pos + 1,
            None => {
                roots.push(root);
                roots.len()
            }
        };
    }
    ClusterAssignment::from_labels(labels)
}
