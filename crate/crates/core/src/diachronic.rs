//! Time courses, prediction matrices, change slopes and retrieval of
//! concepts whose moral sentiment changed.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, ModelSpec, PosteriorDistribution};
use crate::embedding_store::DiachronicEmbeddings;
use crate::error::{Error, Result};
use crate::format::{fmt_f64, fmt_opt};
use crate::lexicon::{seed_vectors, SeedLexicon, Tier, CATEGORY_NAMES};
use crate::stats::{linear_trend, LinearTrend};

/// Fewest unmasked decades a slope is fitted on.
pub const MIN_SLOPE_POINTS: usize = 5;

/// Mean relevance a word needs to stay in a retrieval.
pub const RELEVANCE_THRESHOLD: f64 = 0.5;

/// Decades averaged for the modern category.
pub const MODERN_PERIOD: (i32, i32) = (1900, 1999);

/// Which binary score a matrix or time course holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    /// Probability of the morally relevant class.
    Relevance,
    /// Probability of the positive class.
    Polarity,
}

impl ScoreKind {
    pub fn tier(self) -> Tier {
        match self {
            ScoreKind::Relevance => Tier::Relevance,
            ScoreKind::Polarity => Tier::Polarity,
        }
    }

    /// Class whose probability is the score.
    pub fn target_class(self) -> &'static str {
        match self {
            ScoreKind::Relevance => "relevant",
            ScoreKind::Polarity => "positive",
        }
    }

    /// Whether the argmax decision picks the target class. Exact ties go to
    /// the tier's first class (irrelevant, positive).
    pub fn predicts_target(self, score: f64) -> bool {
        match self {
            ScoreKind::Relevance => score > 0.5,
            ScoreKind::Polarity => score >= 0.5,
        }
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relevance" => Ok(ScoreKind::Relevance),
            "polarity" => Ok(ScoreKind::Polarity),
            other => Err(Error::Input(format!("unknown score kind `{other}`"))),
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreKind::Relevance => "relevance",
            ScoreKind::Polarity => "polarity",
        })
    }
}

/// One classifier per decade for a tier. A decade without a model (seed
/// coverage failed there) yields no scores.
#[derive(Debug, Clone)]
pub struct TierModels {
    pub tier: Tier,
    pub decades: Vec<i32>,
    pub models: Vec<Option<Classifier>>,
}

impl TierModels {
    /// Fits every decade; any coverage failure is an error.
    pub fn fit(
        diachronic: &DiachronicEmbeddings,
        lexicon: &SeedLexicon,
        spec: ModelSpec,
        tier: Tier,
    ) -> Result<Self> {
        let models = diachronic
            .spaces()
            .par_iter()
            .map(|space| {
                let seeds = seed_vectors(lexicon, space, tier)?;
                Classifier::fit_seeds(spec, &seeds)
                    .map(Some)
                    .map_err(|e| Error::Decade {
                        decade: space.decade(),
                        source: Box::new(e),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TierModels {
            tier,
            decades: diachronic.decades(),
            models,
        })
    }

    /// Fits the decades where every class has seed coverage and skips the rest.
    pub fn fit_available(
        diachronic: &DiachronicEmbeddings,
        lexicon: &SeedLexicon,
        spec: ModelSpec,
        tier: Tier,
    ) -> Result<Self> {
        let models = diachronic
            .spaces()
            .par_iter()
            .map(|space| match seed_vectors(lexicon, space, tier) {
                Ok(seeds) => Classifier::fit_seeds(spec, &seeds).map(Some),
                Err(Error::Coverage { class, decade }) => {
                    log::warn!("{tier} tier: no model for decade {decade} (class `{class}` uncovered)");
                    Ok(None)
                }
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TierModels {
            tier,
            decades: diachronic.decades(),
            models,
        })
    }

    /// Posterior of `word` in each decade; `None` where the word has no
    /// vector or the decade has no model.
    pub fn posteriors(
        &self,
        diachronic: &DiachronicEmbeddings,
        word: &str,
    ) -> Result<Vec<Option<PosteriorDistribution>>> {
        diachronic
            .spaces()
            .iter()
            .zip(&self.models)
            .map(|(space, model)| match (model, space.lookup(word)) {
                (Some(model), Some(q)) => model.posterior(&q).map(Some),
                _ => Ok(None),
            })
            .collect()
    }

    pub fn time_course(&self, diachronic: &DiachronicEmbeddings, word: &str) -> Result<TimeCourse> {
        let scores = self.posteriors(diachronic, word)?;
        if scores.iter().all(Option::is_none) {
            return Err(Error::WordCoverage(word.to_string()));
        }
        Ok(TimeCourse {
            word: word.to_string(),
            tier: self.tier,
            decades: self.decades.clone(),
            scores,
        })
    }
}

/// Per-decade posteriors of one word at one tier.
#[derive(Debug, Clone, Serialize)]
pub struct TimeCourse {
    pub word: String,
    pub tier: Tier,
    pub decades: Vec<i32>,
    /// `None` marks a decade without a score.
    pub scores: Vec<Option<PosteriorDistribution>>,
}

impl TimeCourse {
    pub fn mask(&self) -> Vec<bool> {
        self.scores.iter().map(Option::is_none).collect()
    }

    /// Probability of the tier's target class per decade (binary tiers only).
    pub fn binary_scores(&self) -> Result<Vec<Option<f64>>> {
        let kind = match self.tier {
            Tier::Relevance => ScoreKind::Relevance,
            Tier::Polarity => ScoreKind::Polarity,
            Tier::Category => {
                return Err(Error::Input(
                    "category time courses have no single binary score".into(),
                ))
            }
        };
        Ok(self
            .scores
            .iter()
            .map(|p| p.as_ref().and_then(|p| p.get(kind.target_class())))
            .collect())
    }

    /// Argmax class index per decade.
    pub fn predicted_classes(&self) -> Vec<Option<usize>> {
        self.scores.iter().map(|p| p.as_ref().map(|p| p.argmax())).collect()
    }
}

/// Fits the decade models for `tier` and scores `word` in each decade.
pub fn time_course(
    diachronic: &DiachronicEmbeddings,
    lexicon: &SeedLexicon,
    spec: ModelSpec,
    word: &str,
    tier: Tier,
) -> Result<TimeCourse> {
    TierModels::fit(diachronic, lexicon, spec, tier)?.time_course(diachronic, word)
}

/// Words x decades matrix of binary-tier scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionMatrix {
    pub kind: ScoreKind,
    pub decades: Vec<i32>,
    pub words: Vec<String>,
    /// `values[w][d]`; `None` (JSON `null`) where the word has no vector.
    pub values: Vec<Vec<Option<f64>>>,
}

impl PredictionMatrix {
    pub fn new(
        kind: ScoreKind,
        decades: Vec<i32>,
        words: Vec<String>,
        values: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        let m = PredictionMatrix {
            kind,
            decades,
            words,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.words.len() {
            return Err(Error::Input(format!(
                "matrix has {} rows for {} words",
                self.values.len(),
                self.words.len()
            )));
        }
        for (w, row) in self.words.iter().zip(&self.values) {
            if row.len() != self.decades.len() {
                return Err(Error::Input(format!(
                    "row `{w}` has {} values for {} decades",
                    row.len(),
                    self.decades.len()
                )));
            }
            if let Some(v) = row.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Input(format!("row `{w}` has out-of-range score {v}")));
            }
        }
        Ok(())
    }

    pub fn row(&self, word: &str) -> Option<&[Option<f64>]> {
        self.words
            .iter()
            .position(|w| w == word)
            .map(|i| self.values[i].as_slice())
    }

    /// Same matrix with columns reordered: new column `j` holds old column
    /// `perm[j]`. Decade labels keep their positions.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        let n = self.decades.len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&j| j >= n || std::mem::replace(&mut seen[j], true)) {
            return Err(Error::Input(format!("not a permutation of {n} columns: {perm:?}")));
        }
        Ok(PredictionMatrix {
            kind: self.kind,
            decades: self.decades.clone(),
            words: self.words.clone(),
            values: self
                .values
                .iter()
                .map(|row| perm.iter().map(|&j| row[j]).collect())
                .collect(),
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let m: PredictionMatrix = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s)
    }

    /// Long-form `word,decade,score` CSV; missing scores are empty fields.
    pub fn write_long_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "word,decade,score")?;
        for (word, row) in self.words.iter().zip(&self.values) {
            for (decade, v) in self.decades.iter().zip(row) {
                writeln!(w, "{word},{decade},{}", fmt_opt(*v))?;
            }
        }
        Ok(())
    }
}

/// Scores every word of `wordlist` in every decade at the tier of `kind`.
pub fn prediction_matrix(
    diachronic: &DiachronicEmbeddings,
    lexicon: &SeedLexicon,
    spec: ModelSpec,
    wordlist: &[String],
    kind: ScoreKind,
) -> Result<PredictionMatrix> {
    let models = TierModels::fit(diachronic, lexicon, spec, kind.tier())?;
    prediction_matrix_with(&models, diachronic, wordlist, kind)
}

pub fn prediction_matrix_with(
    models: &TierModels,
    diachronic: &DiachronicEmbeddings,
    wordlist: &[String],
    kind: ScoreKind,
) -> Result<PredictionMatrix> {
    if wordlist.is_empty() {
        return Err(Error::Input("word list is empty".into()));
    }
    if models.tier != kind.tier() {
        return Err(Error::Input(format!(
            "{kind} matrix needs {} models, got {}",
            kind.tier(),
            models.tier
        )));
    }
    let values = wordlist
        .par_iter()
        .map(|word| {
            models.posteriors(diachronic, word).map(|row| {
                row.into_iter()
                    .map(|p| p.and_then(|p| p.get(kind.target_class())))
                    .collect::<Vec<_>>()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let uncovered = values.iter().filter(|r| r.iter().all(Option::is_none)).count();
    if uncovered > 0 {
        log::warn!("{uncovered} of {} words have no vector in any decade", wordlist.len());
    }
    PredictionMatrix::new(kind, models.decades.clone(), wordlist.to_vec(), values)
}

/// OLS slope of the unmasked scores on decade index `T = 1..n`.
pub fn series_slope(scores: &[Option<f64>]) -> Result<LinearTrend> {
    let (t, y): (Vec<f64>, Vec<f64>) = scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| ((i + 1) as f64, s)))
        .unzip();
    if t.len() < MIN_SLOPE_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_SLOPE_POINTS,
            got: t.len(),
        });
    }
    linear_trend(&t, &y)
}

/// Per-decade slope and p-value of a binary-tier time course.
pub fn slope(tc: &TimeCourse) -> Result<LinearTrend> {
    series_slope(&tc.binary_scores()?)
}

/// Earliest decade from which every unmasked prediction equals the final
/// unmasked prediction. `None` for a fully masked course.
pub fn switching_decade<T: PartialEq>(decades: &[i32], classes: &[Option<T>]) -> Option<i32> {
    let mut present = decades
        .iter()
        .zip(classes)
        .rev()
        .filter_map(|(d, c)| c.as_ref().map(|c| (*d, c)));
    let (mut start, last) = present.next()?;
    for (d, c) in present {
        if c != last {
            break;
        }
        start = d;
    }
    Some(start)
}

pub fn switching_period(tc: &TimeCourse) -> Option<i32> {
    switching_decade(&tc.decades, &tc.predicted_classes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    TowardRelevance,
    TowardPositive,
    TowardNegative,
}

impl Direction {
    pub fn score_kind(self) -> ScoreKind {
        match self {
            Direction::TowardRelevance => ScoreKind::Relevance,
            _ => ScoreKind::Polarity,
        }
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toward-relevance" => Ok(Direction::TowardRelevance),
            "toward-positive" => Ok(Direction::TowardPositive),
            "toward-negative" => Ok(Direction::TowardNegative),
            other => Err(Error::Input(format!("unknown direction `{other}`"))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::TowardRelevance => "toward-relevance",
            Direction::TowardPositive => "toward-positive",
            Direction::TowardNegative => "toward-negative",
        })
    }
}

/// Size of the family a Bonferroni correction multiplies by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BonferroniFamily {
    /// Words that pass the relevance filter and have a slope.
    Filtered,
    /// Every word in the matrix.
    All,
}

impl FromStr for BonferroniFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "filtered" => Ok(BonferroniFamily::Filtered),
            "all" => Ok(BonferroniFamily::All),
            other => Err(Error::Input(format!("unknown Bonferroni family `{other}`"))),
        }
    }
}

impl fmt::Display for BonferroniFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BonferroniFamily::Filtered => "filtered",
            BonferroniFamily::All => "all",
        })
    }
}

pub fn bonferroni(p_raw: f64, m: usize) -> f64 {
    (p_raw * m as f64).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeRecord {
    pub word: String,
    pub slope: f64,
    pub p_raw: f64,
    pub p_bonferroni: f64,
    pub mean_relevance: f64,
    pub switching_decade: Option<i32>,
    pub early_category: Option<String>,
    pub modern_category: Option<String>,
}

pub const CHANGE_RECORD_HEADER: &str =
    "word,slope,p_raw,p_bonferroni,mean_relevance,switching_decade,early_category,modern_category";

impl ChangeRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.word,
            fmt_f64(self.slope),
            fmt_f64(self.p_raw),
            fmt_f64(self.p_bonferroni),
            fmt_f64(self.mean_relevance),
            self.switching_decade.map(|d| d.to_string()).unwrap_or_default(),
            self.early_category.as_deref().unwrap_or_default(),
            self.modern_category.as_deref().unwrap_or_default(),
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetrievalOptions {
    pub direction: Direction,
    pub top_n: usize,
    pub family: BonferroniFamily,
}

/// Category-tier models used to label retrieved words.
pub struct CategoryLabeler<'a> {
    pub diachronic: &'a DiachronicEmbeddings,
    pub models: TierModels,
}

impl<'a> CategoryLabeler<'a> {
    pub fn new(
        diachronic: &'a DiachronicEmbeddings,
        lexicon: &SeedLexicon,
        spec: ModelSpec,
    ) -> Result<Self> {
        Ok(CategoryLabeler {
            diachronic,
            models: TierModels::fit_available(diachronic, lexicon, spec, Tier::Category)?,
        })
    }

    /// Argmax category at the earliest decade where relevance exceeds the
    /// threshold, and argmax of the mean category distribution over the
    /// modern period.
    fn label(
        &self,
        word: &str,
        relevance: &[Option<f64>],
        decades: &[i32],
    ) -> Result<(Option<String>, Option<String>)> {
        let dists = self.models.posteriors(self.diachronic, word)?;
        let by_decade: HashMap<i32, &PosteriorDistribution> = self
            .models
            .decades
            .iter()
            .zip(&dists)
            .filter_map(|(d, p)| p.as_ref().map(|p| (*d, p)))
            .collect();

        let early = decades
            .iter()
            .zip(relevance)
            .filter(|(_, r)| r.is_some_and(|r| r > RELEVANCE_THRESHOLD))
            .find_map(|(d, _)| by_decade.get(d))
            .map(|p| p.top_class().to_string());

        let modern: Vec<&PosteriorDistribution> = self
            .models
            .decades
            .iter()
            .filter(|d| (MODERN_PERIOD.0..=MODERN_PERIOD.1).contains(*d))
            .filter_map(|d| by_decade.get(d).copied())
            .collect();
        let modern = if modern.is_empty() {
            None
        } else {
            let mut mean = vec![0.0; CATEGORY_NAMES.len()];
            for p in &modern {
                for (m, v) in mean.iter_mut().zip(p.probs()) {
                    *m += v / modern.len() as f64;
                }
            }
            let dist = PosteriorDistribution::new(modern[0].classes().to_vec(), mean)?;
            Some(dist.top_class().to_string())
        };
        Ok((early, modern))
    }
}

#[derive(Debug, Clone)]
pub struct Retrieval {
    pub records: Vec<ChangeRecord>,
    /// Bonferroni multiplier used.
    pub family_size: usize,
    /// Words that passed the relevance filter and had a slope.
    pub tested: usize,
    pub diagnostics: Vec<String>,
}

fn mean_present(row: &[Option<f64>]) -> Option<f64> {
    let present: Vec<f64> = row.iter().flatten().copied().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

/// Ranks words by the slope of their scores.
///
/// `matrix` holds the scores being ranked; `relevance` is the companion
/// relevance matrix used for the mean-relevance filter (ignored, and may be
/// `None`, when `matrix` is itself a relevance matrix).
pub fn retrieve_changing(
    matrix: &PredictionMatrix,
    relevance: Option<&PredictionMatrix>,
    labeler: Option<&CategoryLabeler<'_>>,
    opts: RetrievalOptions,
) -> Result<Retrieval> {
    let kind = opts.direction.score_kind();
    if matrix.kind != kind {
        return Err(Error::Input(format!(
            "{:?} retrieval needs a {kind} matrix, got {}",
            opts.direction, matrix.kind
        )));
    }
    let relevance = match matrix.kind {
        ScoreKind::Relevance => matrix,
        ScoreKind::Polarity => relevance.ok_or_else(|| {
            Error::Input("polarity retrieval needs a companion relevance matrix".into())
        })?,
    };
    if relevance.kind != ScoreKind::Relevance {
        return Err(Error::Input("companion matrix is not a relevance matrix".into()));
    }
    if relevance.decades != matrix.decades {
        return Err(Error::Input("matrices cover different decades".into()));
    }
    let rel_rows: HashMap<&str, &[Option<f64>]> = relevance
        .words
        .iter()
        .map(String::as_str)
        .zip(relevance.values.iter().map(Vec::as_slice))
        .collect();

    let mut diagnostics = Vec::new();
    let mut candidates = Vec::new();
    for (word, row) in matrix.words.iter().zip(&matrix.values) {
        let Some(rel_row) = rel_rows.get(word.as_str()) else {
            diagnostics.push(format!("{word}: not in relevance matrix"));
            continue;
        };
        let Some(mean_relevance) = mean_present(rel_row) else {
            diagnostics.push(format!("{word}: no scores"));
            continue;
        };
        if mean_relevance < RELEVANCE_THRESHOLD {
            continue;
        }
        match series_slope(row) {
            Ok(trend) => candidates.push((word, row, *rel_row, mean_relevance, trend)),
            Err(Error::InsufficientData { got, .. }) => {
                diagnostics.push(format!("{word}: only {got} scored decades"))
            }
            Err(e) => return Err(e),
        }
    }
    let tested = candidates.len();
    if tested == 0 {
        diagnostics.push("no word passed the relevance filter".into());
    }
    let family_size = match opts.family {
        BonferroniFamily::Filtered => tested,
        BonferroniFamily::All => matrix.words.len(),
    };

    match opts.direction {
        Direction::TowardNegative => candidates.sort_by(|a, b| {
            a.4.slope.total_cmp(&b.4.slope).then_with(|| a.0.cmp(b.0))
        }),
        _ => candidates.sort_by(|a, b| {
            b.4.slope.total_cmp(&a.4.slope).then_with(|| a.0.cmp(b.0))
        }),
    }
    candidates.truncate(opts.top_n);

    let records = candidates
        .into_iter()
        .map(|(word, row, rel_row, mean_relevance, trend)| {
            let classes: Vec<Option<bool>> =
                row.iter().map(|s| s.map(|s| kind.predicts_target(s))).collect();
            let (early_category, modern_category) = match labeler {
                Some(l) => l.label(word, rel_row, &matrix.decades)?,
                None => (None, None),
            };
            Ok(ChangeRecord {
                word: word.clone(),
                slope: trend.slope,
                p_raw: trend.p,
                p_bonferroni: bonferroni(trend.p, family_size),
                mean_relevance,
                switching_decade: switching_decade(&matrix.decades, &classes),
                early_category,
                modern_category,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Retrieval {
        records,
        family_size,
        tested,
        diagnostics,
    })
}

/// Reads a `word,frequency` list (header required). Rows keep file order.
pub fn load_wordlist(path: impl AsRef<Path>) -> Result<Vec<(String, f64)>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if out.is_empty() && seen.is_empty() && line.starts_with("word") {
            if line.replace(' ', "") != "word,frequency" {
                return Err(Error::parse(path, lineno, "expected header `word,frequency`"));
            }
            seen.insert(String::new());
            continue;
        }
        let (word, freq) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(path, lineno, "expected `word,frequency`"))?;
        let word = word.trim().to_lowercase();
        let freq: f64 = freq
            .trim()
            .parse()
            .map_err(|e| Error::parse(path, lineno, format!("bad frequency: {e}")))?;
        if word.is_empty() || !freq.is_finite() || freq < 0.0 {
            return Err(Error::parse(path, lineno, "empty word or invalid frequency"));
        }
        if !seen.insert(word.clone()) {
            return Err(Error::parse(path, lineno, format!("duplicate word `{word}`")));
        }
        out.push((word, freq));
    }
    Ok(out)
}
