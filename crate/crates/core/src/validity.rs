//! Cluster-structure and internal-validity metrics, plus the strategy×β×k
//! sweep that evaluates whole pipeline configurations.
//!
//! All distances are Euclidean on the standardized feature rows, matching the
//! linkage metric. Degenerate perfect separations (zero within-cluster
//! scatter, coincident centroids, all-zero diameters) are reported as a
//! `+inf` sentinel and serialized as the string `inf`, so they stay
//! distinguishable from large finite scores.

use std::io::Write;

use rayon::prelude::*;

use crate::binarize::{binarize_matrix, BinarizationSpec};
use crate::cluster::{
    concept_membership_features, conceptual_similarity, cut_maxclust, standardize_columns,
    standardize_features, ward_linkage, ClusterAssignment, FeatureMatrix,
};
use crate::error::{Error, Result};
use crate::fca::enumerate_concepts;
use crate::scalar::Scalar;
use crate::terms::TermFrequencyMatrix;

/// Validity and structure metrics of one flat clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport<F: Scalar = f64> {
    /// Actual number of clusters in the assignment.
    pub k: usize,
    pub silhouette: F,
    pub calinski_harabasz: F,
    pub dunn: F,
    pub davies_bouldin: F,
    pub min_size: usize,
    pub max_size: usize,
    pub balance_ratio: F,
    pub largest_pct: F,
}

fn check_assignment<F: Scalar>(
    points: &FeatureMatrix<F>,
    assignment: &ClusterAssignment,
) -> Result<()> {
    if points.n_rows() != assignment.n_items() {
        return Err(Error::InvalidArgument(format!(
            "{} points vs {} labels",
            points.n_rows(),
            assignment.n_items()
        )));
    }
    if assignment.k() < 2 {
        return Err(Error::InvalidArgument(format!(
            "validity metrics need k >= 2, got {}",
            assignment.k()
        )));
    }
    Ok(())
}

/// Mean silhouette over all points: `(b - a) / max(a, b)` where `a` is the
/// mean distance to the own cluster and `b` the smallest mean distance to
/// another cluster. A singleton point, or a point with `a = b = 0`,
/// contributes 0.
pub fn silhouette<F: Scalar>(
    points: &FeatureMatrix<F>,
    assignment: &ClusterAssignment,
) -> Result<F> {
    check_assignment(points, assignment)?;
    let members = assignment.members();
    let n = points.n_rows();
    let mut total = F::zero();
    for i in 0..n {
        let own = assignment.labels()[i] - 1;
        if members[own].len() < 2 {
            continue; // singleton contributes 0
        }
        let mean_dist_to = |cluster: &[usize], exclude_self: bool| {
            let mut sum = F::zero();
            let mut count = 0usize;
            for &j in cluster {
                if exclude_self && j == i {
                    continue;
                }
                sum = sum + points.distance(i, j);
                count += 1;
            }
            sum / F::from_count(count)
        };
        let a = mean_dist_to(&members[own], true);
        let mut b = F::infinity();
        for (c, cluster) in members.iter().enumerate() {
            if c != own {
                let d = mean_dist_to(cluster, false);
                if d < b {
                    b = d;
                }
            }
        }
        let denom = a.max(b);
        if denom > F::zero() {
            total = total + (b - a) / denom;
        }
    }
    Ok(total / F::from_count(n))
}

fn centroid<F: Scalar>(points: &FeatureMatrix<F>, cluster: &[usize]) -> Vec<F> {
    let dims = points.n_cols();
    let mut c = vec![F::zero(); dims];
    for &i in cluster {
        for (d, &v) in points.row(i).iter().enumerate() {
            c[d] = c[d] + v;
        }
    }
    let size = F::from_count(cluster.len());
    for v in &mut c {
        *v = *v / size;
    }
    c
}

fn sq_dist<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Variance-ratio index: `(B / (k-1)) / (W / (n-k))` with `B` the weighted
/// between-cluster scatter and `W` the within-cluster scatter. Perfect
/// separation (`W = 0`) yields the `+inf` sentinel. Requires `2 <= k < n`.
pub fn calinski_harabasz<F: Scalar>(
    points: &FeatureMatrix<F>,
    assignment: &ClusterAssignment,
) -> Result<F> {
    check_assignment(points, assignment)?;
    let (n, k) = (points.n_rows(), assignment.k());
    if k >= n {
        return Err(Error::InvalidArgument(format!(
            "calinski-harabasz needs k < n, got k={k} n={n}"
        )));
    }
    let members = assignment.members();
    let everything: Vec<usize> = (0..n).collect();
    let global = centroid(points, &everything);
    let mut between = F::zero();
    let mut within = F::zero();
    for cluster in &members {
        let c = centroid(points, cluster);
        between = between + F::from_count(cluster.len()) * sq_dist(&c, &global);
        for &i in cluster {
            within = within + sq_dist(points.row(i), &c);
        }
    }
    if within == F::zero() {
        return Ok(F::infinity());
    }
    let k_f = F::from_count(k);
    let n_f = F::from_count(n);
    Ok((between / (k_f - F::one())) / (within / (n_f - k_f)))
}

/// Dunn index: the smallest single-linkage gap between clusters divided by
/// the largest cluster diameter. All-zero diameters yield the `+inf`
/// sentinel.
pub fn dunn_index<F: Scalar>(
    points: &FeatureMatrix<F>,
    assignment: &ClusterAssignment,
) -> Result<F> {
    check_assignment(points, assignment)?;
    let members = assignment.members();
    let mut min_gap = F::infinity();
    for (a, cluster_a) in members.iter().enumerate() {
        for cluster_b in members.iter().skip(a + 1) {
            for &i in cluster_a {
                for &j in cluster_b {
                    let d = points.distance(i, j);
                    if d < min_gap {
                        min_gap = d;
                    }
                }
            }
        }
    }
    let mut max_diameter = F::zero();
    for cluster in &members {
        for (idx, &i) in cluster.iter().enumerate() {
            for &j in &cluster[idx + 1..] {
                let d = points.distance(i, j);
                if d > max_diameter {
                    max_diameter = d;
                }
            }
        }
    }
    if max_diameter == F::zero() {
        return Ok(F::infinity());
    }
    Ok(min_gap / max_diameter)
}

/// Davies-Bouldin index: mean over clusters of the worst
/// `(s_i + s_j) / d_ij` ratio, where `s` is the mean distance to the cluster
/// centroid and `d` the centroid distance. Coincident centroids yield the
/// `+inf` sentinel.
pub fn davies_bouldin<F: Scalar>(
    points: &FeatureMatrix<F>,
    assignment: &ClusterAssignment,
) -> Result<F> {
    check_assignment(points, assignment)?;
    let members = assignment.members();
    let k = members.len();
    let centroids: Vec<Vec<F>> = members.iter().map(|c| centroid(points, c)).collect();
    let scatter: Vec<F> = members
        .iter()
        .zip(&centroids)
        .map(|(cluster, c)| {
            cluster.iter().map(|&i| sq_dist(points.row(i), c).sqrt()).sum::<F>()
                / F::from_count(cluster.len())
        })
        .collect();
    let mut total = F::zero();
    for i in 0..k {
        let mut worst = F::zero();
        for j in 0..k {
            if i == j {
                continue;
            }
            let d = sq_dist(&centroids[i], &centroids[j]).sqrt();
            let ratio = if d == F::zero() { F::infinity() } else { (scatter[i] + scatter[j]) / d };
            if ratio > worst {
                worst = ratio;
            }
        }
        total = total + worst;
    }
    Ok(total / F::from_count(k))
}

/// Cluster-size structure: `(min, max, min/max, 100*max/n)`.
pub fn structure_metrics<F: Scalar>(assignment: &ClusterAssignment) -> (usize, usize, F, F) {
    let sizes = assignment.sizes();
    let min = sizes.iter().copied().min().unwrap_or(0);
    let max = sizes.iter().copied().max().unwrap_or(0);
    let balance = if max == 0 { F::zero() } else { F::from_count(min) / F::from_count(max) };
    let largest_pct = if assignment.n_items() == 0 {
        F::zero()
    } else {
        F::from_count(100) * F::from_count(max) / F::from_count(assignment.n_items())
    };
    (min, max, balance, largest_pct)
}

/// Computes the full report for one clustering.
pub fn validity_report<F: Scalar>(
    points: &FeatureMatrix<F>,
    assignment: &ClusterAssignment,
) -> Result<ValidityReport<F>> {
    let (min_size, max_size, balance_ratio, largest_pct) = structure_metrics(assignment);
    Ok(ValidityReport {
        k: assignment.k(),
        silhouette: silhouette(points, assignment)?,
        calinski_harabasz: calinski_harabasz(points, assignment)?,
        dunn: dunn_index(points, assignment)?,
        davies_bouldin: davies_bouldin(points, assignment)?,
        min_size,
        max_size,
        balance_ratio,
        largest_pct,
    })
}

/// What the per-term feature vectors are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    /// Rows of the conceptual-similarity matrix (the default).
    #[default]
    SimilarityRows,
    /// Term×concept membership indicators.
    ConceptMembership,
}

/// Sweep-wide settings.
#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub concept_ceiling: usize,
    pub feature_source: FeatureSource,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            concept_ceiling: crate::fca::DEFAULT_CONCEPT_CEILING,
            feature_source: FeatureSource::default(),
        }
    }
}

/// One sweep cell: either a report or the failure that prevented it.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepOutcome<F: Scalar = f64> {
    Report(ValidityReport<F>),
    Failed(String),
}

/// A sweep cell identified by its configuration. `k` is the requested
/// cluster count; the report inside carries the count actually realized.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<F: Scalar = f64> {
    pub spec: BinarizationSpec<F>,
    pub k: usize,
    pub outcome: SweepOutcome<F>,
}

/// All sweep rows in deterministic `(spec, k)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable<F: Scalar = f64> {
    rows: Vec<SweepRow<F>>,
}

fn format_metric<F: Scalar>(value: F) -> String {
    if value.is_infinite() {
        "inf".to_string()
    } else {
        format!("{value}")
    }
}

fn format_metric_rounded<F: Scalar>(value: F) -> String {
    if value.is_infinite() {
        "inf".to_string()
    } else {
        format!("{:.2}", value.to_f64().unwrap_or(f64::NAN))
    }
}

impl<F: Scalar> SweepTable<F> {
    pub fn new(rows: Vec<SweepRow<F>>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[SweepRow<F>] {
        &self.rows
    }

    /// CSV with one row per `(strategy, beta, k)` cell. Failed cells leave
    /// the metric columns empty and carry the message in the `error` column.
    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "strategy",
            "beta",
            "k",
            "silhouette",
            "chi",
            "dunn",
            "dbi",
            "min",
            "max",
            "balance",
            "largest_pct",
            "error",
        ])?;
        for row in &self.rows {
            let prefix =
                [row.spec.strategy.to_string(), format!("{}", row.spec.beta), row.k.to_string()];
            match &row.outcome {
                SweepOutcome::Report(r) => {
                    let record = [
                        prefix[0].clone(),
                        prefix[1].clone(),
                        prefix[2].clone(),
                        format_metric(r.silhouette),
                        format_metric(r.calinski_harabasz),
                        format_metric(r.dunn),
                        format_metric(r.davies_bouldin),
                        r.min_size.to_string(),
                        r.max_size.to_string(),
                        format_metric(r.balance_ratio),
                        format_metric(r.largest_pct),
                        String::new(),
                    ];
                    w.write_record(&record)?;
                }
                SweepOutcome::Failed(message) => {
                    let mut record = prefix.to_vec();
                    record.extend(std::iter::repeat_n(String::new(), 8));
                    record.push(message.clone());
                    w.write_record(&record)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Markdown tables, one per `(strategy, beta)` group, with metric columns
    /// rounded to two decimals.
    pub fn to_markdown<W: Write>(&self, mut writer: W) -> Result<()> {
        let mut current: Option<(String, String)> = None;
        for row in &self.rows {
            let group = (row.spec.strategy.to_string(), format!("{}", row.spec.beta));
            if current.as_ref() != Some(&group) {
                if current.is_some() {
                    writeln!(writer)?;
                }
                writeln!(writer, "## Strategy: {} (beta = {})", group.0, group.1)?;
                writeln!(writer)?;
                writeln!(
                    writer,
                    "| k | Silh. | CHI | DI | DBI | min | max | BalanceRatio | Largest (%) |"
                )?;
                writeln!(
                    writer,
                    "|---|-------|-----|----|-----|-----|-----|--------------|-------------|"
                )?;
                current = Some(group);
            }
            match &row.outcome {
                SweepOutcome::Report(r) => writeln!(
                    writer,
                    "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                    row.k,
                    format_metric_rounded(r.silhouette),
                    format_metric_rounded(r.calinski_harabasz),
                    format_metric_rounded(r.dunn),
                    format_metric_rounded(r.davies_bouldin),
                    r.min_size,
                    r.max_size,
                    format_metric_rounded(r.balance_ratio),
                    format_metric_rounded(r.largest_pct),
                )?,
                SweepOutcome::Failed(message) => {
                    writeln!(writer, "| {} | error: {} | | | | | | | |", row.k, message)?
                }
            }
        }
        Ok(())
    }
}

/// Builds the standardized feature rows for one binarization of the matrix.
///
/// Returns the retained term keys alongside the features.
pub fn pipeline_features<F: Scalar>(
    matrix: &TermFrequencyMatrix,
    spec: &BinarizationSpec<F>,
    options: &SweepOptions,
) -> Result<(Vec<String>, FeatureMatrix<F>)> {
    let context = binarize_matrix(matrix, spec)?;
    let (retained, context) = context.retained_terms();
    if retained < 2 {
        return Err(Error::InvalidArgument(format!(
            "only {retained} retained term(s); clustering needs at least 2"
        )));
    }
    let concepts = enumerate_concepts(&context, options.concept_ceiling)?;
    let features = match options.feature_source {
        FeatureSource::SimilarityRows => {
            let sim = conceptual_similarity::<F>(&concepts, context.attributes())?;
            standardize_features(&sim)?
        }
        FeatureSource::ConceptMembership => {
            let indicators = concept_membership_features::<F>(&concepts, context.attributes())?;
            standardize_columns(indicators)?
        }
    };
    Ok((context.attributes().to_vec(), features))
}

/// Runs the full pipeline for every `(spec, k)` cell.
///
/// Cells are independent; specs are evaluated in parallel and each cell
/// failure is recorded in place while the sweep continues. Row order is the
/// order of `specs` crossed with the order of `ks`.
pub fn sweep<F: Scalar>(
    matrix: &TermFrequencyMatrix,
    specs: &[BinarizationSpec<F>],
    ks: &[usize],
    options: &SweepOptions,
) -> SweepTable<F> {
    let rows: Vec<Vec<SweepRow<F>>> = specs
        .par_iter()
        .map(|spec| {
            let prepared = pipeline_features(matrix, spec, options);
            let clustered = prepared
                .as_ref()
                .ok()
                .and_then(|(_, features)| ward_linkage(features).ok().map(|d| (features, d)));
            ks.iter()
                .map(|&k| {
                    let outcome = match (&prepared, &clustered) {
                        (Err(e), _) => SweepOutcome::Failed(e.to_string()),
                        (Ok(_), None) => SweepOutcome::Failed("linkage failed".into()),
                        (Ok(_), Some((features, dendrogram))) => {
                            match cut_maxclust(dendrogram, k)
                                .and_then(|assignment| validity_report(features, &assignment))
                            {
                                Ok(report) => SweepOutcome::Report(report),
                                Err(e) => SweepOutcome::Failed(e.to_string()),
                            }
                        }
                    };
                    SweepRow { spec: *spec, k, outcome }
                })
                .collect()
        })
        .collect();
    SweepTable { rows: rows.into_iter().flatten().collect() }
}
