//! Binarization strategies: from the frequency matrix to a formal context.
//!
//! Each strategy decides per cell whether a term frequency `f` becomes an
//! incidence, using the mean `μ` and population standard deviation `σ` of the
//! term's nonzero frequencies, scaled by a threshold factor `β ≥ 0`:
//!
//! * `Direct`:  `f > 0`
//! * `High`:    `f > μ + β·σ`
//! * `Low`:     `0 < f < μ − β·σ`
//! * `Medium`:  `f > 0` and `μ − β·σ ≤ f ≤ μ + β·σ`
//!
//! The boundaries are strict for `High`/`Low` and inclusive for `Medium`, so
//! at `β = 0` the three thresholded strategies partition the `Direct` cells
//! exactly (`f > μ`, `f < μ`, `f = μ`), a term whose nonzero frequencies are
//! all equal is never selected by `High` or `Low`, and `Medium` retains every
//! term once `β` is large enough. Statistics are computed over nonzero
//! entries only; zeros are absences, not observations.
//!
//! Other threshold rules can be swapped in behind [`BinarizationSpec`]
//! without touching the rest of the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fca::{BitSet, FormalContext};
use crate::scalar::Scalar;
use crate::terms::TermFrequencyMatrix;

/// The four binarization strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Direct,
    Low,
    High,
    Medium,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Strategy::Direct => "direct",
            Strategy::Low => "low",
            Strategy::High => "high",
            Strategy::Medium => "medium",
        };
        f.write_str(name)
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(Strategy::Direct),
            "low" => Ok(Strategy::Low),
            "high" => Ok(Strategy::High),
            "medium" => Ok(Strategy::Medium),
            other => Err(Error::InvalidArgument(format!("unknown strategy '{other}'"))),
        }
    }
}

/// A strategy plus its threshold factor. `beta` is ignored by `Direct` but
/// must still be finite and nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinarizationSpec<F: Scalar = f64> {
    pub strategy: Strategy,
    pub beta: F,
}

impl<F: Scalar> BinarizationSpec<F> {
    pub fn new(strategy: Strategy, beta: F) -> Result<Self> {
        if !beta.is_finite() || beta < F::zero() {
            return Err(Error::InvalidArgument(format!("beta must be finite and >= 0, got {beta}")));
        }
        Ok(Self { strategy, beta })
    }
}

/// Mean and population standard deviation of a term's nonzero frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermStats<F: Scalar = f64> {
    pub mean: F,
    pub stddev: F,
}

impl<F: Scalar> TermStats<F> {
    /// Statistics over the nonzero entries of a frequency column. A column
    /// with no nonzero entry is a domain error; single-occurrence and
    /// constant columns get `stddev = 0`.
    pub fn of_values(values: impl IntoIterator<Item = u32>) -> Result<Self> {
        let nonzero: Vec<F> =
            values.into_iter().filter(|&v| v > 0).map(|v| F::from_count(v as usize)).collect();
        if nonzero.is_empty() {
            return Err(Error::InvalidArgument("term column has no nonzero frequency".into()));
        }
        let n = F::from_count(nonzero.len());
        let mean = nonzero.iter().copied().sum::<F>() / n;
        let variance = nonzero.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() / n;
        Ok(Self { mean, stddev: variance.sqrt() })
    }
}

/// Statistics of one term column of the matrix.
pub fn term_value_stats<F: Scalar>(
    matrix: &TermFrequencyMatrix,
    term: usize,
) -> Result<TermStats<F>> {
    if term >= matrix.n_terms() {
        return Err(Error::unknown("term index", term.to_string()));
    }
    TermStats::of_values(matrix.column(term))
}

fn cell_selected<F: Scalar>(count: u32, stats: &TermStats<F>, spec: &BinarizationSpec<F>) -> bool {
    if count == 0 {
        return false;
    }
    let f = F::from_count(count as usize);
    let spread = spec.beta * stats.stddev;
    match spec.strategy {
        Strategy::Direct => true,
        Strategy::High => f > stats.mean + spread,
        Strategy::Low => f < stats.mean - spread,
        Strategy::Medium => f >= stats.mean - spread && f <= stats.mean + spread,
    }
}

/// Applies a strategy to the whole matrix, producing a formal context with
/// documents as objects and terms as attributes.
///
/// The context keeps every term column, including those the strategy left
/// empty; use [`FormalContext::retained_terms`] to count and drop them.
pub fn binarize_matrix<F: Scalar>(
    matrix: &TermFrequencyMatrix,
    spec: &BinarizationSpec<F>,
) -> Result<FormalContext> {
    BinarizationSpec::new(spec.strategy, spec.beta)?;
    if matrix.n_docs() == 0 || matrix.n_terms() == 0 {
        return Err(Error::InvalidArgument("cannot binarize an empty matrix".into()));
    }
    let stats: Vec<TermStats<F>> = (0..matrix.n_terms())
        .map(|t| term_value_stats(matrix, t))
        .collect::<Result<_>>()?;
    let mut rows = vec![BitSet::new(matrix.n_terms()); matrix.n_docs()];
    for (t, term_stats) in stats.iter().enumerate() {
        for (d, row) in rows.iter_mut().enumerate() {
            if cell_selected(matrix.count(d, t), term_stats, spec) {
                row.insert(t);
            }
        }
    }
    FormalContext::new(matrix.doc_ids().to_vec(), matrix.term_keys().to_vec(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn matrix(doc_count: usize, columns: &[(&str, Vec<u32>)]) -> TermFrequencyMatrix {
        let doc_ids = (0..doc_count).map(|i| format!("d{i}")).collect();
        let term_keys: Vec<String> = columns.iter().map(|(k, _)| k.to_string()).collect();
        let mut counts = vec![0u32; doc_count * columns.len()];
        for (t, (_, col)) in columns.iter().enumerate() {
            assert_eq!(col.len(), doc_count);
            for (d, &v) in col.iter().enumerate() {
                counts[d * columns.len() + t] = v;
            }
        }
        TermFrequencyMatrix::new(doc_ids, term_keys, counts).unwrap()
    }

    fn spec(strategy: Strategy, beta: f64) -> BinarizationSpec {
        BinarizationSpec::new(strategy, beta).unwrap()
    }

    #[test]
    fn stats_of_mixed_column() {
        let m = matrix(3, &[("t", vec![1, 2, 3])]);
        let stats: TermStats = term_value_stats(&m, 0).unwrap();
        assert!((stats.mean - 2.0).abs() < 1e-12);
        assert!((stats.stddev - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn stats_of_constant_column() {
        let m = matrix(3, &[("t", vec![5, 5, 5])]);
        let stats: TermStats = term_value_stats(&m, 0).unwrap();
        assert_eq!(stats.mean, 5.0);
        assert_eq!(stats.stddev, 0.0);
    }

    #[test]
    fn stats_exclude_zeros() {
        let m = matrix(3, &[("t", vec![0, 0, 4])]);
        let stats: TermStats = term_value_stats(&m, 0).unwrap();
        assert_eq!(stats.mean, 4.0);
        assert_eq!(stats.stddev, 0.0);
    }

    #[test]
    fn stats_all_zero_column_is_domain_error() {
        assert!(TermStats::<f64>::of_values([0, 0, 0]).is_err());
    }

    #[test]
    fn high_beta_one_selects_only_the_peak() {
        let m = matrix(3, &[("t", vec![1, 2, 3])]);
        let ctx = binarize_matrix(&m, &spec(Strategy::High, 1.0)).unwrap();
        // Threshold is 2 + 0.8165 ≈ 2.8165, so only f=3 passes.
        assert!(!ctx.incidence(0, 0));
        assert!(!ctx.incidence(1, 0));
        assert!(ctx.incidence(2, 0));
    }

    #[test]
    fn medium_beta_zero_selects_exactly_the_mean() {
        let m = matrix(3, &[("t", vec![1, 2, 3])]);
        let ctx = binarize_matrix(&m, &spec(Strategy::Medium, 0.0)).unwrap();
        assert!(!ctx.incidence(0, 0));
        assert!(ctx.incidence(1, 0));
        assert!(!ctx.incidence(2, 0));
    }

    #[test]
    fn direct_reproduces_the_support_pattern() {
        let m = matrix(3, &[("a", vec![0, 2, 1]), ("b", vec![4, 0, 0])]);
        let ctx = binarize_matrix(&m, &spec(Strategy::Direct, 0.0)).unwrap();
        for d in 0..3 {
            for t in 0..2 {
                assert_eq!(ctx.incidence(d, t), m.count(d, t) > 0);
            }
        }
    }

    #[test]
    fn negative_beta_is_rejected() {
        assert!(BinarizationSpec::new(Strategy::High, -0.5).is_err());
        assert!(BinarizationSpec::new(Strategy::High, f64::NAN).is_err());
    }

    #[test]
    fn direct_retains_every_column() {
        let m = matrix(2, &[("a", vec![1, 0]), ("b", vec![0, 3])]);
        let ctx = binarize_matrix(&m, &spec(Strategy::Direct, 0.0)).unwrap();
        let (count, _) = ctx.retained_terms();
        assert_eq!(count, 2);
    }

    fn random_matrix(seed: u64) -> TermFrequencyMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let docs = rng.random_range(2..8);
        let terms = rng.random_range(1..10);
        let columns: Vec<(String, Vec<u32>)> = (0..terms)
            .map(|t| {
                let mut col: Vec<u32> =
                    (0..docs).map(|_| if rng.random::<f64>() < 0.5 { rng.random_range(1..6) } else { 0 }).collect();
                if col.iter().all(|&v| v == 0) {
                    col[0] = rng.random_range(1..6);
                }
                (format!("t{t}"), col)
            })
            .collect();
        let borrowed: Vec<(&str, Vec<u32>)> =
            columns.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
        matrix(docs, &borrowed)
    }

    fn cells(ctx: &FormalContext) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for o in 0..ctx.n_objects() {
            for a in 0..ctx.n_attributes() {
                if ctx.incidence(o, a) {
                    out.push((o, a));
                }
            }
        }
        out
    }

    #[test]
    fn beta_zero_cells_partition_direct() {
        for seed in 0..40 {
            let m = random_matrix(seed);
            let direct = cells(&binarize_matrix(&m, &spec(Strategy::Direct, 0.0)).unwrap());
            let high = cells(&binarize_matrix(&m, &spec(Strategy::High, 0.0)).unwrap());
            let low = cells(&binarize_matrix(&m, &spec(Strategy::Low, 0.0)).unwrap());
            let medium = cells(&binarize_matrix(&m, &spec(Strategy::Medium, 0.0)).unwrap());
            let mut union = [high.clone(), low.clone(), medium.clone()].concat();
            union.sort();
            let total = high.len() + low.len() + medium.len();
            union.dedup();
            assert_eq!(union.len(), total, "strategies overlap at beta=0, seed {seed}");
            assert_eq!(union, direct, "strategies do not cover direct, seed {seed}");
        }
    }

    #[test]
    fn beta_zero_retained_terms_cover_direct() {
        for seed in 0..40 {
            let m = random_matrix(seed);
            let retained = |strategy| {
                let ctx = binarize_matrix(&m, &spec(strategy, 0.0)).unwrap();
                let (_, reduced) = ctx.retained_terms();
                reduced.attributes().to_vec()
            };
            let direct = retained(Strategy::Direct);
            let mut high_or_medium = retained(Strategy::High);
            high_or_medium.extend(retained(Strategy::Medium));
            high_or_medium.sort();
            high_or_medium.dedup();
            assert_eq!(high_or_medium, direct, "seed {seed}");
            // High and Low agree at beta=0: both select the non-constant terms.
            assert_eq!(retained(Strategy::High), retained(Strategy::Low), "seed {seed}");
        }
    }

    #[test]
    fn retained_counts_are_monotone_in_beta() {
        let betas = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0];
        for seed in 0..25 {
            let m = random_matrix(seed);
            let counts = |strategy: Strategy| -> Vec<usize> {
                betas
                    .iter()
                    .map(|&b| binarize_matrix(&m, &spec(strategy, b)).unwrap().retained_terms().0)
                    .collect()
            };
            let high = counts(Strategy::High);
            let low = counts(Strategy::Low);
            let medium = counts(Strategy::Medium);
            assert!(high.windows(2).all(|w| w[0] >= w[1]), "high not non-increasing, seed {seed}");
            assert!(low.windows(2).all(|w| w[0] >= w[1]), "low not non-increasing, seed {seed}");
            assert!(
                medium.windows(2).all(|w| w[0] <= w[1]),
                "medium not non-decreasing, seed {seed}"
            );
        }
    }

    #[test]
    fn medium_saturates_and_constant_terms_behave() {
        for seed in 0..25 {
            let m = random_matrix(seed);
            // Saturation threshold: beyond the largest standardized residual,
            // medium keeps everything.
            let mut saturation = 0.0f64;
            for t in 0..m.n_terms() {
                let stats: TermStats = term_value_stats(&m, t).unwrap();
                if stats.stddev > 0.0 {
                    for v in m.column(t).filter(|&v| v > 0) {
                        saturation = saturation.max((v as f64 - stats.mean).abs() / stats.stddev);
                    }
                }
            }
            let beta = saturation * (1.0 + 1e-9) + 1e-12;
            let ctx = binarize_matrix(&m, &spec(Strategy::Medium, beta)).unwrap();
            assert_eq!(ctx.retained_terms().0, m.n_terms(), "seed {seed}");

            for t in 0..m.n_terms() {
                let stats: TermStats = term_value_stats(&m, t).unwrap();
                if stats.stddev == 0.0 {
                    for b in [0.0, 0.5, 2.0] {
                        let high = binarize_matrix(&m, &spec(Strategy::High, b)).unwrap();
                        let low = binarize_matrix(&m, &spec(Strategy::Low, b)).unwrap();
                        let medium = binarize_matrix(&m, &spec(Strategy::Medium, b)).unwrap();
                        for d in 0..m.n_docs() {
                            assert!(!high.incidence(d, t));
                            assert!(!low.incidence(d, t));
                            assert_eq!(medium.incidence(d, t), m.count(d, t) > 0);
                        }
                    }
                }
            }
        }
    }
}
