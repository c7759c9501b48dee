//! Regression of change rates on word properties, and its shuffled-decade
//! control.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::correlation::{partial_correlation, CorrelationReport};
use super::regression::{multiple_regression, RegressionFit};
use crate::diachronic::{series_slope, PredictionMatrix, ScoreKind};
use crate::error::{Error, Result};
use crate::lexicon::NormEntry;

pub const FACTOR_FREQUENCY: &str = "log_frequency";
pub const FACTOR_LENGTH: &str = "length";
pub const FACTOR_CONCRETENESS: &str = "concreteness";

/// Frequency and concreteness per word; length comes from the word itself.
#[derive(Debug, Clone, Default)]
pub struct WordFactors {
    pub frequency: HashMap<String, f64>,
    pub concreteness: HashMap<String, f64>,
}

impl WordFactors {
    pub fn new(norms: &[NormEntry], frequencies: &[(String, f64)]) -> Self {
        WordFactors {
            frequency: frequencies.iter().cloned().collect(),
            concreteness: norms
                .iter()
                .filter_map(|n| n.concreteness.map(|c| (n.word.clone(), c)))
                .collect(),
        }
    }

    /// `(log frequency, character length, concreteness)`, or `None` when the
    /// word lacks a positive frequency or a concreteness rating.
    pub fn of(&self, word: &str) -> Option<[f64; 3]> {
        let f = *self.frequency.get(word)?;
        let c = *self.concreteness.get(word)?;
        (f > 0.0).then(|| [f.ln(), word.chars().count() as f64, c])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChangeRegression {
    pub fit: RegressionFit,
    /// Words in the sample, in matrix order.
    pub words: Vec<String>,
    pub slopes: Vec<f64>,
    /// Factor columns in the order of [`FACTORS`].
    #[serde(skip)]
    pub columns: [Vec<f64>; 3],
}

pub const FACTORS: [&str; 3] = [FACTOR_FREQUENCY, FACTOR_LENGTH, FACTOR_CONCRETENESS];

impl ChangeRegression {
    /// Partial correlation of the change rate with each factor, controlling
    /// for the other two.
    pub fn partial_correlations(&self) -> Result<Vec<(String, CorrelationReport)>> {
        (0..3)
            .map(|j| {
                let controls: Vec<(&str, &[f64])> = (0..3)
                    .filter(|&i| i != j)
                    .map(|i| (FACTORS[i], self.columns[i].as_slice()))
                    .collect();
                partial_correlation(&self.slopes, &self.columns[j], &controls)
                    .map(|r| (FACTORS[j].to_string(), r))
            })
            .collect()
    }
}

/// Fits `slope ~ log_frequency + length + concreteness` over the words whose
/// relevance class differs between their first and last scored decades.
pub fn change_regression(matrix: &PredictionMatrix, factors: &WordFactors) -> Result<ChangeRegression> {
    if matrix.kind != ScoreKind::Relevance {
        return Err(Error::Input("change regression needs a relevance matrix".into()));
    }
    let mut words = Vec::new();
    let mut slopes = Vec::new();
    let mut cols: [Vec<f64>; 3] = Default::default();
    for (word, row) in matrix.words.iter().zip(&matrix.values) {
        let Some(x) = factors.of(word) else { continue };
        let mut present = row.iter().flatten();
        let (Some(first), Some(last)) = (present.next(), present.next_back()) else {
            continue;
        };
        if ScoreKind::Relevance.predicts_target(*first) == ScoreKind::Relevance.predicts_target(*last) {
            continue;
        }
        let trend = match series_slope(row) {
            Ok(t) => t,
            Err(Error::InsufficientData { .. }) => continue,
            Err(e) => return Err(e),
        };
        words.push(word.clone());
        slopes.push(trend.slope);
        for (col, v) in cols.iter_mut().zip(x) {
            col.push(v);
        }
    }
    let named: Vec<(&str, &[f64])> = FACTORS.iter().copied().zip(cols.iter().map(Vec::as_slice)).collect();
    let fit = multiple_regression(&slopes, &named)?;
    Ok(ChangeRegression {
        fit,
        words,
        slopes,
        columns: cols,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorControl {
    pub name: String,
    pub diachronic_coefficient: f64,
    pub control_mean: f64,
    /// Sample standard deviation of the control coefficients.
    pub control_stdev: f64,
    pub empirical_p: f64,
}

impl FactorControl {
    /// Standard error of the control mean.
    pub fn control_stderr(&self, shuffles: usize) -> f64 {
        self.control_stdev / (shuffles as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermutationReport {
    /// Intercept first, then the factors.
    pub factors: Vec<FactorControl>,
    pub shuffles: usize,
    pub seed: u64,
    pub sample_size: usize,
}

impl PermutationReport {
    pub fn factor(&self, name: &str) -> Option<&FactorControl> {
        self.factors.iter().find(|f| f.name == name)
    }
}

/// Column order for shuffle `index`: a Fisher-Yates shuffle driven by its own
/// ChaCha stream, so any shuffle can be reproduced on its own.
pub fn shuffle_permutation(n_columns: usize, seed: u64, index: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut perm: Vec<usize> = (0..n_columns).collect();
    perm.shuffle(&mut rng);
    perm
}

/// Summarises the control fits obtained under the given column permutations.
pub fn control_from_permutations(
    matrix: &PredictionMatrix,
    factors: &WordFactors,
    perms: &[Vec<usize>],
    seed: u64,
) -> Result<PermutationReport> {
    if perms.is_empty() {
        return Err(Error::Parameter("at least one shuffle is required".into()));
    }
    let diachronic = change_regression(matrix, factors)?;
    let controls = perms
        .par_iter()
        .enumerate()
        .map(|(index, perm)| {
            matrix
                .permute_columns(perm)
                .and_then(|m| change_regression(&m, factors))
                .map(|c| c.fit)
                .map_err(|e| Error::Shuffle {
                    index,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = controls.len() as f64;
    let factors = diachronic
        .fit
        .coefficients
        .iter()
        .enumerate()
        .map(|(j, coef)| {
            let values: Vec<f64> = controls.iter().map(|f| f.coefficients[j].estimate).collect();
            let mean = values.iter().sum::<f64>() / n;
            let stdev = if values.len() > 1 {
                (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let extreme = values.iter().filter(|v| v.abs() >= coef.estimate.abs()).count();
            FactorControl {
                name: coef.name.clone(),
                diachronic_coefficient: coef.estimate,
                control_mean: mean,
                control_stdev: stdev,
                empirical_p: (1.0 + extreme as f64) / (n + 1.0),
            }
        })
        .collect();
    Ok(PermutationReport {
        factors,
        shuffles: perms.len(),
        seed,
        sample_size: diachronic.words.len(),
    })
}

/// Re-runs the whole change regression, including the change filter, on
/// `n_shuffles` random decade orders shared by all words.
pub fn permutation_control(
    matrix: &PredictionMatrix,
    factors: &WordFactors,
    n_shuffles: usize,
    seed: u64,
) -> Result<PermutationReport> {
    if matrix.decades.len() < 5 {
        return Err(Error::InsufficientData {
            needed: 5,
            got: matrix.decades.len(),
        });
    }
    let perms: Vec<Vec<usize>> = (0..n_shuffles)
        .map(|i| shuffle_permutation(matrix.decades.len(), seed, i))
        .collect();
    control_from_permutations(matrix, factors, &perms, seed)
}
