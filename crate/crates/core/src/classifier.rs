//! The four seed-based moral sentiment models.
//!
//! Each model turns a query vector into unnormalised class scores from the
//! seed vectors of one tier:
//!
//! * centroid: `exp(-||q - mean(S_c)||)`
//! * naive Bayes: product over dimensions of univariate normal densities with
//!   the per-class mean and (floored) variance of each dimension
//! * kNN: number of the `k` nearest seeds that belong to the class
//! * KDE: mean over `w in S_c` of an isotropic normal density centred on `w`
//!   with per-dimension variance `h`
//!
//! No class prior is applied. Density models are evaluated in log space and
//! normalised with log-sum-exp.

use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::embedding_store::QueryVector;
use crate::error::{Error, Result};
use crate::lexicon::{ClassVectors, Tier};

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_BANDWIDTH: f64 = 1.0;
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-8;

/// Posterior probabilities are clamped to `[LOG_ODDS_CLAMP, 1 - LOG_ODDS_CLAMP]`
/// before taking log odds.
pub const LOG_ODDS_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Centroid,
    NaiveBayes,
    Knn,
    Kde,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Centroid,
        ModelKind::NaiveBayes,
        ModelKind::Knn,
        ModelKind::Kde,
    ];
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centroid" => Ok(ModelKind::Centroid),
            "naive_bayes" | "naive-bayes" | "nb" => Ok(ModelKind::NaiveBayes),
            "knn" => Ok(ModelKind::Knn),
            "kde" => Ok(ModelKind::Kde),
            other => Err(Error::Input(format!("unknown model kind `{other}`"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Centroid => "centroid",
            ModelKind::NaiveBayes => "naive_bayes",
            ModelKind::Knn => "knn",
            ModelKind::Kde => "kde",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Neighbour count (kNN only).
    pub k: usize,
    /// Kernel variance per dimension (KDE only).
    pub bandwidth: f64,
    /// Lower bound on per-dimension variance (naive Bayes only).
    pub variance_floor: f64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            k: DEFAULT_K,
            bandwidth: DEFAULT_BANDWIDTH,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
        }
    }

    pub fn centroid() -> Self {
        Self::new(ModelKind::Centroid)
    }

    pub fn naive_bayes() -> Self {
        Self::new(ModelKind::NaiveBayes)
    }

    pub fn knn(k: usize) -> Self {
        ModelSpec {
            k,
            ..Self::new(ModelKind::Knn)
        }
    }

    pub fn kde(bandwidth: f64) -> Self {
        ModelSpec {
            bandwidth,
            ..Self::new(ModelKind::Kde)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Parameter("k must be at least 1".into()));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::Parameter(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        if !(self.variance_floor > 0.0 && self.variance_floor.is_finite()) {
            return Err(Error::Parameter(format!(
                "variance floor must be positive, got {}",
                self.variance_floor
            )));
        }
        Ok(())
    }
}

/// Normalised class probabilities for one query, in the classifier's class order.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDistribution {
    classes: Vec<String>,
    probs: Vec<f64>,
}

impl PosteriorDistribution {
    pub fn new(classes: Vec<String>, probs: Vec<f64>) -> Result<Self> {
        if classes.len() != probs.len() || classes.is_empty() {
            return Err(Error::Input("posterior needs one probability per class".into()));
        }
        Ok(PosteriorDistribution { classes, probs })
    }

    /// Normalises log scores; `-inf` entries become probability zero.
    pub(crate) fn from_log_scores(classes: Vec<String>, log_scores: &[f64]) -> Self {
        let max = log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = log_scores.iter().map(|&s| (s - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        PosteriorDistribution {
            classes,
            probs: weights.into_iter().map(|w| w / total).collect(),
        }
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, class: &str) -> Option<f64> {
        self.classes.iter().position(|c| c == class).map(|i| self.probs[i])
    }

    /// Index of the most probable class; ties go to the earliest class.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn top_class(&self) -> &str {
        &self.classes[self.argmax()]
    }
}

impl Serialize for PosteriorDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.classes.len()))?;
        for (c, p) in self.classes.iter().zip(&self.probs) {
            map.serialize_entry(c, p)?;
        }
        map.end()
    }
}

/// `ln(p_num / p_den)` with both probabilities clamped away from 0 and 1.
pub fn log_odds(p: &PosteriorDistribution, numerator: &str, denominator: &str) -> Result<f64> {
    let clamp = |x: f64| x.clamp(LOG_ODDS_CLAMP, 1.0 - LOG_ODDS_CLAMP);
    let num = p
        .get(numerator)
        .ok_or_else(|| Error::UnknownClass(numerator.to_string()))?;
    let den = p
        .get(denominator)
        .ok_or_else(|| Error::UnknownClass(denominator.to_string()))?;
    Ok((clamp(num) / clamp(den)).ln())
}

#[derive(Debug, Clone)]
enum Statistics {
    /// Per-class means.
    Centroid { means: Vec<Vec<f64>> },
    /// Per-class means and unfloored population variances.
    NaiveBayes {
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    },
    /// kNN and KDE keep the seeds themselves.
    Seeds,
}

/// A fitted model over one tier's seed vectors.
#[derive(Debug, Clone)]
pub struct Classifier {
    spec: ModelSpec,
    tier: Option<Tier>,
    classes: Vec<String>,
    dim: usize,
    seeds: Vec<Vec<Vec<f64>>>,
    stats: Statistics,
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean_and_variance(vectors: &[Vec<f64>], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = vectors.len() as f64;
    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for v in vectors {
        for ((s, x), m) in var.iter_mut().zip(v).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= n);
    (mean, var)
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Which seed, if any, to leave out when scoring.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HeldOut {
    pub class: usize,
    pub index: usize,
}

impl Classifier {
    /// Fits a model on per-class seed vectors. `classes` fixes the class
    /// order used for ties and output.
    pub fn fit(
        spec: ModelSpec,
        tier: Option<Tier>,
        classes: Vec<String>,
        seeds: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        spec.validate()?;
        if classes.len() < 2 || classes.len() != seeds.len() {
            return Err(Error::Fit(format!(
                "need at least two classes with one seed list each, got {} classes and {} lists",
                classes.len(),
                seeds.len()
            )));
        }
        let dim = seeds
            .iter()
            .flatten()
            .next()
            .map(Vec::len)
            .ok_or_else(|| Error::Fit("no seed vectors".into()))?;
        if dim == 0 {
            return Err(Error::Fit("seed vectors are empty".into()));
        }
        for (class, vectors) in classes.iter().zip(&seeds) {
            if vectors.is_empty() {
                return Err(Error::Fit(format!("class `{class}` has no seed vectors")));
            }
            for v in vectors {
                if v.len() != dim {
                    return Err(Error::Fit(format!(
                        "class `{class}` has a vector of length {}, expected {dim}",
                        v.len()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Fit(format!("class `{class}` has a non-finite seed")));
                }
            }
        }
        let total: usize = seeds.iter().map(Vec::len).sum();
        if spec.kind == ModelKind::Knn && spec.k > total {
            return Err(Error::Parameter(format!(
                "k = {} exceeds the {total} available seeds",
                spec.k
            )));
        }
        let stats = match spec.kind {
            ModelKind::Centroid => Statistics::Centroid {
                means: seeds.iter().map(|s| mean_and_variance(s, dim).0).collect(),
            },
            ModelKind::NaiveBayes => {
                let (means, variances) = seeds.iter().map(|s| mean_and_variance(s, dim)).unzip();
                Statistics::NaiveBayes { means, variances }
            }
            ModelKind::Knn | ModelKind::Kde => Statistics::Seeds,
        };
        Ok(Classifier {
            spec,
            tier,
            classes,
            dim,
            seeds,
            stats,
        })
    }

    /// Fits on the seed vectors of one tier and decade.
    pub fn fit_seeds(spec: ModelSpec, seeds: &ClassVectors) -> Result<Self> {
        Self::fit(
            spec,
            Some(seeds.tier),
            seeds.classes.clone(),
            seeds.vectors.clone(),
        )
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn tier(&self) -> Option<Tier> {
        self.tier
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seeds(&self) -> &[Vec<Vec<f64>>] {
        &self.seeds
    }

    /// Per-class centroid (centroid and naive Bayes models).
    pub fn means(&self) -> Option<&[Vec<f64>]> {
        match &self.stats {
            Statistics::Centroid { means } | Statistics::NaiveBayes { means, .. } => Some(means),
            Statistics::Seeds => None,
        }
    }

    /// Per-class variances after flooring (naive Bayes only).
    pub fn variances(&self) -> Option<Vec<Vec<f64>>> {
        match &self.stats {
            Statistics::NaiveBayes { variances, .. } => Some(
                variances
                    .iter()
                    .map(|v| v.iter().map(|&x| x.max(self.spec.variance_floor)).collect())
                    .collect(),
            ),
            _ => None,
        }
    }

    fn check_query(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dim {
            return Err(Error::Input(format!(
                "query has {} dimensions, model has {}",
                q.len(),
                self.dim
            )));
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("query vector has non-finite entries".into()));
        }
        Ok(())
    }

    pub fn posterior(&self, q: &QueryVector) -> Result<PosteriorDistribution> {
        self.posterior_values(&q.values)
    }

    pub fn posterior_values(&self, q: &[f64]) -> Result<PosteriorDistribution> {
        self.check_query(q)?;
        Ok(self.score(q, None))
    }

    /// Posterior with one seed removed from the training data, as if the model
    /// had been refitted without it. Centroid and naive Bayes statistics are
    /// downdated in closed form.
    pub(crate) fn posterior_held_out(&self, q: &[f64], held: HeldOut) -> Result<PosteriorDistribution> {
        self.check_query(q)?;
        if self.seeds[held.class].len() < 2 {
            return Err(Error::Evaluation(format!(
                "removing a seed empties class `{}`",
                self.classes[held.class]
            )));
        }
        if self.spec.kind == ModelKind::Knn {
            let total: usize = self.seeds.iter().map(Vec::len).sum();
            if self.spec.k > total - 1 {
                return Err(Error::Parameter(format!(
                    "k = {} exceeds the {} seeds left after holding one out",
                    self.spec.k,
                    total - 1
                )));
            }
        }
        Ok(self.score(q, Some(held)))
    }

    pub fn classify(&self, q: &QueryVector) -> Result<String> {
        let p = self.posterior(q)?;
        Ok(p.top_class().to_string())
    }

    fn score(&self, q: &[f64], held: Option<HeldOut>) -> PosteriorDistribution {
        match &self.stats {
            Statistics::Centroid { means } => {
                let logits: Vec<f64> = (0..self.classes.len())
                    .map(|c| {
                        let mean = self.downdated_mean(means, c, held);
                        -squared_distance(q, &mean).sqrt()
                    })
                    .collect();
                PosteriorDistribution::from_log_scores(self.classes.clone(), &logits)
            }
            Statistics::NaiveBayes { means, variances } => {
                let floor = self.spec.variance_floor;
                let logits: Vec<f64> = (0..self.classes.len())
                    .map(|c| {
                        let (mean, var) = self.downdated_moments(means, variances, c, held);
                        q.iter()
                            .zip(&mean)
                            .zip(&var)
                            .map(|((x, m), v)| {
                                let v = v.max(floor);
                                -0.5 * (LN_2PI + v.ln()) - (x - m) * (x - m) / (2.0 * v)
                            })
                            .sum()
                    })
                    .collect();
                PosteriorDistribution::from_log_scores(self.classes.clone(), &logits)
            }
            Statistics::Seeds if self.spec.kind == ModelKind::Knn => self.knn(q, held),
            Statistics::Seeds => self.kde(q, held),
        }
    }

    fn downdated_mean(&self, means: &[Vec<f64>], c: usize, held: Option<HeldOut>) -> Vec<f64> {
        match held {
            Some(h) if h.class == c => {
                let n = self.seeds[c].len() as f64;
                let x = &self.seeds[c][h.index];
                means[c]
                    .iter()
                    .zip(x)
                    .map(|(m, xi)| (n * m - xi) / (n - 1.0))
                    .collect()
            }
            _ => means[c].clone(),
        }
    }

    fn downdated_moments(
        &self,
        means: &[Vec<f64>],
        variances: &[Vec<f64>],
        c: usize,
        held: Option<HeldOut>,
    ) -> (Vec<f64>, Vec<f64>) {
        match held {
            Some(h) if h.class == c => {
                let n = self.seeds[c].len() as f64;
                let x = &self.seeds[c][h.index];
                let mean = self.downdated_mean(means, c, held);
                // M2' = M2 - (x - m)(x - m'), with M2 = n * var
                let var = variances[c]
                    .iter()
                    .zip(x)
                    .zip(means[c].iter().zip(&mean))
                    .map(|((v, xi), (m, m1))| ((n * v - (xi - m) * (xi - m1)) / (n - 1.0)).max(0.0))
                    .collect();
                (mean, var)
            }
            _ => (means[c].clone(), variances[c].clone()),
        }
    }

    fn live_seeds(&self, held: Option<HeldOut>) -> impl Iterator<Item = (usize, &Vec<f64>)> {
        self.seeds.iter().enumerate().flat_map(move |(c, vs)| {
            vs.iter()
                .enumerate()
                .filter(move |(i, _)| !matches!(held, Some(h) if h.class == c && h.index == *i))
                .map(move |(_, v)| (c, v))
        })
    }

    /// Counts among the `k` nearest seeds; every seed tied with the k-th
    /// distance is admitted.
    fn knn(&self, q: &[f64], held: Option<HeldOut>) -> PosteriorDistribution {
        let mut dists: Vec<(f64, usize)> = self
            .live_seeds(held)
            .map(|(c, v)| (squared_distance(q, v), c))
            .collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0));
        let cutoff = dists[self.spec.k - 1].0;
        let mut counts = vec![0usize; self.classes.len()];
        for &(_, c) in dists.iter().take_while(|(d, _)| *d <= cutoff) {
            counts[c] += 1;
        }
        let total: usize = counts.iter().sum();
        PosteriorDistribution {
            classes: self.classes.clone(),
            probs: counts.iter().map(|&n| n as f64 / total as f64).collect(),
        }
    }

    fn kde(&self, q: &[f64], held: Option<HeldOut>) -> PosteriorDistribution {
        let h = self.spec.bandwidth;
        let norm = -0.5 * self.dim as f64 * (LN_2PI + h.ln());
        let mut per_class: Vec<Vec<f64>> = vec![Vec::new(); self.classes.len()];
        for (c, v) in self.live_seeds(held) {
            per_class[c].push(norm - squared_distance(q, v) / (2.0 * h));
        }
        let logits: Vec<f64> = per_class
            .into_iter()
            .map(|terms| {
                let n = terms.len() as f64;
                log_sum_exp(terms.into_iter()) - n.ln()
            })
            .collect();
        PosteriorDistribution::from_log_scores(self.classes.clone(), &logits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    fn q(values: &[f64]) -> QueryVector {
        QueryVector::new(values.to_vec(), "q")
    }

    #[test]
    fn centroid_stores_mean() {
        let model = Classifier::fit(
            ModelSpec::centroid(),
            None,
            labels(2),
            vec![vec![vec![0.0, 0.0], vec![2.0, 0.0]], vec![vec![5.0, 5.0]]],
        )
        .unwrap();
        assert_eq!(model.means().unwrap()[0], vec![1.0, 0.0]);
    }

    #[test]
    fn naive_bayes_floors_constant_dimension() {
        let model = Classifier::fit(
            ModelSpec::naive_bayes(),
            None,
            labels(2),
            vec![vec![vec![1.0, 0.0], vec![1.0, 2.0]], vec![vec![3.0, 3.0]]],
        )
        .unwrap();
        let vars = model.variances().unwrap();
        assert_eq!(vars[0], vec![DEFAULT_VARIANCE_FLOOR, 1.0]);
        assert_eq!(vars[1], vec![DEFAULT_VARIANCE_FLOOR; 2]);
    }

    #[test]
    fn knn_rejects_large_k() {
        let err = Classifier::fit(
            ModelSpec::knn(5),
            None,
            labels(2),
            vec![vec![vec![0.0], vec![1.0]], vec![vec![2.0], vec![3.0]]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
    }

    #[test]
    fn fit_rejects_empty_class_and_single_class() {
        let err = Classifier::fit(ModelSpec::centroid(), None, labels(2), vec![vec![vec![0.0]], vec![]]);
        assert!(matches!(err, Err(Error::Fit(_))));
        let err = Classifier::fit(ModelSpec::centroid(), None, labels(1), vec![vec![vec![0.0]]]);
        assert!(matches!(err, Err(Error::Fit(_))));
    }

    #[test]
    fn centroid_softmax_over_negative_distance() {
        let model = Classifier::fit(
            ModelSpec::centroid(),
            None,
            labels(2),
            vec![vec![vec![0.0, 0.0]], vec![vec![2.0, 0.0]]],
        )
        .unwrap();
        let p = model.posterior(&q(&[0.0, 0.0])).unwrap();
        let e = (-2.0f64).exp();
        assert!((p.probs()[0] - 1.0 / (1.0 + e)).abs() < 1e-12);
        assert!((p.probs()[0] - 0.8808).abs() < 1e-4);
        assert!((p.probs()[1] - 0.1192).abs() < 1e-4);
        assert_eq!(model.classify(&q(&[0.0, 0.0])).unwrap(), "c0");
    }

    #[test]
    fn symmetric_query_gives_even_split() {
        let seeds = vec![vec![vec![-1.0, 0.0], vec![-2.0, 0.5]], vec![vec![1.0, 0.0], vec![2.0, 0.5]]];
        for spec in [
            ModelSpec::centroid(),
            ModelSpec::naive_bayes(),
            ModelSpec::knn(2),
            ModelSpec::kde(0.5),
        ] {
            let model = Classifier::fit(spec, None, labels(2), seeds.clone()).unwrap();
            let p = model.posterior(&q(&[0.0, 0.25])).unwrap();
            assert!((p.probs()[0] - 0.5).abs() < 1e-12, "{:?}: {:?}", spec.kind, p);
            assert_eq!(model.classify(&q(&[0.0, 0.25])).unwrap(), "c0");
        }
    }

    #[test]
    fn knn_vote_ratio() {
        let seeds = vec![
            vec![vec![1.0], vec![2.0], vec![3.0], vec![100.0]],
            vec![vec![1.5], vec![2.5], vec![200.0]],
        ];
        let model = Classifier::fit(ModelSpec::knn(5), None, labels(2), seeds).unwrap();
        let p = model.posterior(&q(&[2.0])).unwrap();
        assert_eq!(p.probs(), &[0.6, 0.4]);
    }

    #[test]
    fn knn_admits_ties_at_kth_rank() {
        let seeds = vec![vec![vec![1.0]], vec![vec![-1.0]]];
        let model = Classifier::fit(ModelSpec::knn(1), None, labels(2), seeds).unwrap();
        let p = model.posterior(&q(&[0.0])).unwrap();
        assert_eq!(p.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn rejects_bad_queries() {
        let model = Classifier::fit(
            ModelSpec::centroid(),
            None,
            labels(2),
            vec![vec![vec![0.0, 0.0]], vec![vec![1.0, 1.0]]],
        )
        .unwrap();
        assert!(matches!(model.posterior(&q(&[f64::NAN, 0.0])), Err(Error::Input(_))));
        assert!(matches!(model.posterior(&q(&[0.0])), Err(Error::Input(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::knn(0).validate().is_err());
        assert!(ModelSpec::kde(0.0).validate().is_err());
        let spec = ModelSpec {
            variance_floor: 0.0,
            ..ModelSpec::naive_bayes()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn log_odds_values() {
        let p = PosteriorDistribution::new(labels(2), vec![0.5, 0.5]).unwrap();
        assert_eq!(log_odds(&p, "c0", "c1").unwrap(), 0.0);
        let p = PosteriorDistribution::new(labels(2), vec![0.8808, 0.1192]).unwrap();
        assert!((log_odds(&p, "c0", "c1").unwrap() - (0.8808f64 / 0.1192).ln()).abs() < 1e-12);
        assert!((log_odds(&p, "c0", "c1").unwrap() - 2.0).abs() < 1e-3);
        let p = PosteriorDistribution::new(labels(2), vec![1.0, 0.0]).unwrap();
        let lo = log_odds(&p, "c0", "c1").unwrap();
        assert!((lo - 13.8155).abs() < 1e-4);
        assert!(matches!(log_odds(&p, "c0", "nope"), Err(Error::UnknownClass(_))));
    }

    #[test]
    fn argmax_tie_takes_first_class() {
        let p = PosteriorDistribution::new(labels(3), vec![0.25, 0.375, 0.375]).unwrap();
        assert_eq!(p.argmax(), 1);
    }

    #[test]
    fn held_out_matches_refit() {
        let seeds = vec![
            vec![vec![0.1, 0.7, -0.2], vec![0.4, 0.3, 0.0], vec![-0.5, 0.2, 0.9]],
            vec![vec![1.1, -0.7, 0.2], vec![0.9, -0.1, 0.5]],
        ];
        let query = [0.3, 0.1, 0.2];
        for spec in [
            ModelSpec::centroid(),
            ModelSpec::naive_bayes(),
            ModelSpec::knn(2),
            ModelSpec::kde(0.3),
        ] {
            let model = Classifier::fit(spec, None, labels(2), seeds.clone()).unwrap();
            for c in 0..2 {
                for i in 0..seeds[c].len() {
                    let mut reduced = seeds.clone();
                    reduced[c].remove(i);
                    let refit = Classifier::fit(spec, None, labels(2), reduced).unwrap();
                    let a = refit.posterior_values(&query).unwrap();
                    let b = model
                        .posterior_held_out(&query, HeldOut { class: c, index: i })
                        .unwrap();
                    for (x, y) in a.probs().iter().zip(b.probs()) {
                        assert!((x - y).abs() < 1e-9, "{:?} c{c} i{i}: {x} vs {y}", spec.kind);
                    }
                }
            }
        }
    }

    #[test]
    fn held_out_singleton_class_errors() {
        let model = Classifier::fit(
            ModelSpec::centroid(),
            None,
            labels(2),
            vec![vec![vec![0.0]], vec![vec![1.0], vec![2.0]]],
        )
        .unwrap();
        let err = model.posterior_held_out(&[0.0], HeldOut { class: 0, index: 0 }).unwrap_err();
        assert!(err.to_string().contains("c0"));
    }

    #[test]
    fn kde_wide_bandwidth_is_uniform() {
        let seeds = vec![
            vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![0.2, 0.9]],
            vec![vec![3.0, 3.0]],
        ];
        let model = Classifier::fit(ModelSpec::kde(1e6), None, labels(2), seeds).unwrap();
        let p = model.posterior(&q(&[0.1, 0.1])).unwrap();
        assert!((p.probs()[0] - 0.5).abs() < 1e-3);
    }
}
