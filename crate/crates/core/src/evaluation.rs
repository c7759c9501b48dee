//! Leave-one-out seed classification and correlations with human ratings.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, HeldOut, ModelKind, ModelSpec};
use crate::embedding_store::{DiachronicEmbeddings, EmbeddingSpace};
use crate::error::{Error, Result};
use crate::lexicon::{seed_vectors, ClassVectors, Coverage, NormEntry, SeedLexicon, Tier};
use crate::stats::{pearson, CorrelationReport};

/// Bandwidths tried when tuning the KDE model.
pub const BANDWIDTH_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub tier: Option<Tier>,
    pub spec: ModelSpec,
    pub decade: i32,
    pub classes: Vec<String>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub n: usize,
    pub accuracy: f64,
    /// Seeds found / listed per class; missing seeds are not evaluated.
    pub coverage: Vec<Coverage>,
}

/// Leave-one-out accuracy over the seeds of one tier in one space.
pub fn loo_accuracy(
    spec: ModelSpec,
    lexicon: &SeedLexicon,
    space: &EmbeddingSpace,
    tier: Tier,
) -> Result<AccuracyReport> {
    let seeds = seed_vectors(lexicon, space, tier)?;
    loo_accuracy_seeds(spec, &seeds)
}

/// Leave-one-out accuracy over already-resolved seed vectors.
pub fn loo_accuracy_seeds(spec: ModelSpec, seeds: &ClassVectors) -> Result<AccuracyReport> {
    let model = Classifier::fit_seeds(spec, seeds)?;
    if let Some(c) = seeds.vectors.iter().position(|v| v.len() < 2) {
        return Err(Error::Evaluation(format!(
            "class `{}` would be emptied by holding out its only seed",
            seeds.classes[c]
        )));
    }
    let items: Vec<HeldOut> = seeds
        .vectors
        .iter()
        .enumerate()
        .flat_map(|(class, vs)| (0..vs.len()).map(move |index| HeldOut { class, index }))
        .collect();
    let predictions = items
        .par_iter()
        .map(|&held| {
            model
                .posterior_held_out(&seeds.vectors[held.class][held.index], held)
                .map(|p| (held.class, p.argmax()))
        })
        .collect::<Result<Vec<_>>>()?;

    let k = seeds.classes.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for (truth, pred) in predictions {
        confusion[truth][pred] += 1;
    }
    let n = items.len();
    let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
    Ok(AccuracyReport {
        tier: Some(seeds.tier),
        spec,
        decade: seeds.decade,
        classes: seeds.classes.clone(),
        confusion,
        n,
        accuracy: correct as f64 / n as f64,
        coverage: seeds.coverage.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoricalAccuracy {
    pub reports: Vec<AccuracyReport>,
    pub mean: f64,
    /// Population standard deviation across decades.
    pub stdev: f64,
}

pub fn mean_and_stdev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    // shifted by the first value so a constant series has exactly zero spread
    let shift = values.first().copied().unwrap_or(0.0);
    let mean = shift + values.iter().map(|v| v - shift).sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Leave-one-out accuracy in every decade, with mean and spread.
pub fn loo_accuracy_historical(
    spec: ModelSpec,
    lexicon: &SeedLexicon,
    diachronic: &DiachronicEmbeddings,
    tier: Tier,
) -> Result<HistoricalAccuracy> {
    let reports = diachronic
        .spaces()
        .par_iter()
        .map(|space| {
            loo_accuracy(spec, lexicon, space, tier).map_err(|e| match e {
                e @ Error::Coverage { .. } => e,
                e => Error::Decade {
                    decade: space.decade(),
                    source: Box::new(e),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let accs: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
    let (mean, stdev) = mean_and_stdev(&accs);
    Ok(HistoricalAccuracy {
        reports,
        mean,
        stdev,
    })
}

/// Picks the KDE bandwidth with the best leave-one-out accuracy on `seeds`;
/// ties go to the smaller bandwidth. Returns the choice and every score.
pub fn tune_bandwidth(seeds: &ClassVectors, grid: &[f64]) -> Result<(f64, Vec<(f64, f64)>)> {
    if grid.is_empty() {
        return Err(Error::Parameter("empty bandwidth grid".into()));
    }
    let scores = grid
        .iter()
        .map(|&h| loo_accuracy_seeds(ModelSpec::kde(h), seeds).map(|r| (h, r.accuracy)))
        .collect::<Result<Vec<_>>>()?;
    let best = scores
        .iter()
        .fold(None::<(f64, f64)>, |best, &(h, a)| match best {
            Some((_, ba)) if ba >= a => best,
            _ => Some((h, a)),
        })
        .map(|(h, _)| h)
        .expect("non-empty grid");
    Ok((best, scores))
}

/// Resolves a KDE spec's bandwidth by tuning on the polarity seeds of
/// `space` when `tune` is set; other specs pass through.
pub fn resolve_spec(
    spec: ModelSpec,
    tune: bool,
    lexicon: &SeedLexicon,
    space: &EmbeddingSpace,
) -> Result<ModelSpec> {
    if spec.kind != ModelKind::Kde || !tune {
        return Ok(spec);
    }
    let seeds = seed_vectors(lexicon, space, Tier::Polarity)?;
    let (h, scores) = tune_bandwidth(&seeds, &BANDWIDTH_GRID)?;
    log::info!("KDE bandwidth {h} chosen on decade {} ({scores:?})", space.decade());
    Ok(ModelSpec { bandwidth: h, ..spec })
}

fn class_probability(model: &Classifier, class: &str, role: &str) -> Result<()> {
    if model.classes().iter().any(|c| c == class) {
        Ok(())
    } else {
        Err(Error::Input(format!(
            "{role} model has no `{class}` class (classes: {:?})",
            model.classes()
        )))
    }
}

/// Pearson correlation between human valence and the model's probability of
/// the positive class, over norm words present in `space`.
pub fn valence_correlation(
    polarity_model: &Classifier,
    space: &EmbeddingSpace,
    norms: &[NormEntry],
) -> Result<CorrelationReport> {
    class_probability(polarity_model, "positive", "polarity")?;
    let mut valence = Vec::new();
    let mut predicted = Vec::new();
    for norm in norms {
        if let Some(q) = space.lookup(&norm.word) {
            let p = polarity_model.posterior(&q)?;
            valence.push(norm.valence);
            predicted.push(p.get("positive").expect("checked class"));
        }
    }
    if valence.len() < 3 {
        return Err(Error::SampleSize {
            needed: 3,
            got: valence.len(),
        });
    }
    pearson(&valence, &predicted)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyItem {
    /// One or more space-separated tokens.
    pub topic: String,
    pub frac_not_moral: f64,
    pub frac_acceptable: f64,
}

pub fn load_survey(path: impl AsRef<Path>) -> Result<Vec<SurveyItem>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["topic", "frac_not_moral", "frac_acceptable"] {
        return Err(Error::parse(
            path,
            1,
            "expected header `topic,frac_not_moral,frac_acceptable`",
        ));
    }
    let mut items = Vec::new();
    for (i, row) in rdr.deserialize::<SurveyItem>().enumerate() {
        let line = i + 2;
        let mut item = row.map_err(|e| Error::parse(path, line, e.to_string()))?;
        for v in [item.frac_not_moral, item.frac_acceptable] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::parse(path, line, format!("fraction {v} outside [0, 1]")));
            }
        }
        item.topic = item.topic.to_lowercase();
        items.push(item);
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyCorrelation {
    /// `frac_not_moral` against the probability of irrelevance.
    pub not_moral: CorrelationReport,
    /// `frac_acceptable` against the probability of positive polarity.
    pub acceptable: CorrelationReport,
    /// Topics with no token in the vocabulary.
    pub unresolved: Vec<String>,
}

pub fn survey_correlation(
    relevance_model: &Classifier,
    polarity_model: &Classifier,
    space: &EmbeddingSpace,
    survey: &[SurveyItem],
) -> Result<SurveyCorrelation> {
    class_probability(relevance_model, "irrelevant", "relevance")?;
    class_probability(polarity_model, "positive", "polarity")?;
    let mut unresolved = Vec::new();
    let mut cols: [Vec<f64>; 4] = Default::default();
    for item in survey {
        let tokens: Vec<&str> = item.topic.split_whitespace().collect();
        let avg = match space.average_vector(&tokens) {
            Ok(avg) => avg,
            Err(Error::EmptyQuery(_)) => {
                log::warn!("survey topic `{}` has no vector", item.topic);
                unresolved.push(item.topic.clone());
                continue;
            }
            Err(e) => return Err(e),
        };
        if !avg.skipped.is_empty() {
            log::warn!("survey topic `{}`: skipped {:?}", item.topic, avg.skipped);
        }
        let irrelevant = relevance_model.posterior(&avg.query)?.get("irrelevant");
        let positive = polarity_model.posterior(&avg.query)?.get("positive");
        cols[0].push(item.frac_not_moral);
        cols[1].push(irrelevant.expect("checked class"));
        cols[2].push(item.frac_acceptable);
        cols[3].push(positive.expect("checked class"));
    }
    if cols[0].len() < 3 {
        return Err(Error::SampleSize {
            needed: 3,
            got: cols[0].len(),
        });
    }
    Ok(SurveyCorrelation {
        not_moral: pearson(&cols[0], &cols[1])?,
        acceptable: pearson(&cols[2], &cols[3])?,
        unresolved,
    })
}
