//! Seed-word resources and the three tier views built from them.
//!
//! The moral dictionary CSV assigns each word a category number 1..10. Odd
//! numbers are virtues (positive pole), even numbers vices (negative pole):
//!
//! | id | category     | id | category      |
//! |----|--------------|----|---------------|
//! | 1  | care+        | 2  | harm-         |
//! | 3  | fairness+    | 4  | cheating-     |
//! | 5  | loyalty+     | 6  | betrayal-     |
//! | 7  | authority+   | 8  | subversion-   |
//! | 9  | sanctity+    | 10 | degradation-  |
//!
//! Morally irrelevant seeds are the non-dictionary words whose valence
//! rating is closest to the neutral midpoint of the 1..9 scale.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding_store::EmbeddingSpace;
use crate::error::{Error, Result};

pub const CATEGORY_NAMES: [&str; 10] = [
    "care+",
    "harm-",
    "fairness+",
    "cheating-",
    "loyalty+",
    "betrayal-",
    "authority+",
    "subversion-",
    "sanctity+",
    "degradation-",
];

pub const RELEVANCE_CLASSES: [&str; 2] = ["irrelevant", "relevant"];
pub const POLARITY_CLASSES: [&str; 2] = ["positive", "negative"];

/// Valence treated as perfectly neutral.
pub const NEUTRAL_VALENCE: f64 = 5.0;

/// Name of a category id in 1..=10.
pub fn category_name(id: u8) -> Option<&'static str> {
    CATEGORY_NAMES.get(usize::from(id).checked_sub(1)?).copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Relevance,
    Polarity,
    Category,
}

impl Tier {
    /// Class labels in their fixed order. The order decides argmax ties.
    pub fn classes(self) -> Vec<String> {
        let names: &[&str] = match self {
            Tier::Relevance => &RELEVANCE_CLASSES,
            Tier::Polarity => &POLARITY_CLASSES,
            Tier::Category => &CATEGORY_NAMES,
        };
        names.iter().map(|s| s.to_string()).collect()
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relevance" => Ok(Tier::Relevance),
            "polarity" => Ok(Tier::Polarity),
            "category" => Ok(Tier::Category),
            other => Err(Error::Input(format!("unknown tier `{other}`"))),
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Relevance => "relevance",
            Tier::Polarity => "polarity",
            Tier::Category => "category",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedEntry {
    pub word: String,
    pub category: u8,
}

impl SeedEntry {
    pub fn new(word: impl Into<String>, category: u8) -> Result<Self> {
        let word = word.into().to_lowercase();
        if word.is_empty() {
            return Err(Error::Input("empty seed word".into()));
        }
        if !(1..=10).contains(&category) {
            return Err(Error::Input(format!(
                "category {category} for `{word}` is outside 1..10"
            )));
        }
        Ok(SeedEntry { word, category })
    }

    pub fn is_positive(&self) -> bool {
        self.category % 2 == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormEntry {
    pub word: String,
    pub valence: f64,
    pub concreteness: Option<f64>,
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(file))
}

fn check_header(reader: &mut csv::Reader<File>, path: &Path, expected: &[&str]) -> Result<()> {
    let headers = reader.headers()?;
    let got: Vec<&str> = headers.iter().collect();
    if got.len() < expected.len() || got[..expected.len()] != *expected {
        return Err(Error::parse(
            path,
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(0)
}

/// Reads the `word,category` seed CSV. Words are lowercased; multi-word
/// entries are skipped, and a word listed twice keeps its first category.
pub fn load_mfd(path: impl AsRef<Path>) -> Result<Vec<SeedEntry>> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    check_header(&mut reader, path, &["word", "category"])?;
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() < 2 {
            return Err(Error::parse(path, line, "expected `word,category`"));
        }
        let word = record[0].to_lowercase();
        if word.is_empty() {
            return Err(Error::parse(path, line, "empty word"));
        }
        let category: u8 = record[1]
            .parse()
            .ok()
            .filter(|c| (1..=10).contains(c))
            .ok_or_else(|| {
                Error::parse(path, line, format!("category `{}` is not in 1..10", &record[1]))
            })?;
        if word.split_whitespace().count() > 1 {
            log::warn!("{}:{line}: skipping multi-word seed `{word}`", path.display());
            continue;
        }
        if !seen.insert(word.clone()) {
            log::warn!(
                "{}:{line}: seed `{word}` already listed; keeping its first category",
                path.display()
            );
            continue;
        }
        entries.push(SeedEntry { word, category });
    }
    Ok(entries)
}

/// Reads the `word,valence[,concreteness]` norms CSV.
pub fn load_norms(path: impl AsRef<Path>) -> Result<Vec<NormEntry>> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    check_header(&mut reader, path, &["word", "valence"])?;
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() < 2 {
            return Err(Error::parse(path, line, "expected `word,valence[,concreteness]`"));
        }
        let word = record[0].to_lowercase();
        if word.is_empty() {
            return Err(Error::parse(path, line, "empty word"));
        }
        let valence: f64 = record[1]
            .parse()
            .map_err(|e| Error::parse(path, line, format!("bad valence `{}`: {e}", &record[1])))?;
        if !(1.0..=9.0).contains(&valence) {
            return Err(Error::parse(path, line, format!("valence {valence} outside [1, 9]")));
        }
        let concreteness = match record.get(2).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => {
                let c: f64 = s
                    .parse()
                    .map_err(|e| Error::parse(path, line, format!("bad concreteness `{s}`: {e}")))?;
                if !(1.0..=5.0).contains(&c) {
                    return Err(Error::parse(path, line, format!("concreteness {c} outside [1, 5]")));
                }
                Some(c)
            }
        };
        if !seen.insert(word.clone()) {
            return Err(Error::parse(path, line, format!("duplicate norms entry for `{word}`")));
        }
        entries.push(NormEntry {
            word,
            valence,
            concreteness,
        });
    }
    Ok(entries)
}

/// Picks the `count` non-dictionary norm words with valence nearest the
/// neutral midpoint, ties broken lexicographically. When `vocabulary` is
/// given, only words with a vector in it are candidates.
pub fn build_irrelevant_seeds(
    norms: &[NormEntry],
    mfd_words: &BTreeSet<String>,
    count: usize,
    vocabulary: Option<&EmbeddingSpace>,
) -> Result<BTreeSet<String>> {
    let mut candidates: Vec<(f64, &str)> = norms
        .iter()
        .filter(|n| !mfd_words.contains(&n.word))
        .filter(|n| vocabulary.is_none_or(|v| v.contains(&n.word)))
        .map(|n| ((n.valence - NEUTRAL_VALENCE).abs(), n.word.as_str()))
        .collect();
    if count > candidates.len() {
        return Err(Error::Capacity {
            requested: count,
            available: candidates.len(),
        });
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    Ok(candidates[..count].iter().map(|(_, w)| w.to_string()).collect())
}

/// Seed sets for all three tiers.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedLexicon {
    pub relevant: BTreeSet<String>,
    pub irrelevant: BTreeSet<String>,
    pub positive: BTreeSet<String>,
    pub negative: BTreeSet<String>,
    /// Category id (1..10) to its words; categories without words are absent.
    pub categories: BTreeMap<u8, BTreeSet<String>>,
}

pub fn build_tiers(mfd: &[SeedEntry], irrelevant: BTreeSet<String>) -> Result<SeedLexicon> {
    let mut lexicon = SeedLexicon {
        relevant: BTreeSet::new(),
        irrelevant: BTreeSet::new(),
        positive: BTreeSet::new(),
        negative: BTreeSet::new(),
        categories: BTreeMap::new(),
    };
    for entry in mfd {
        if !(1..=10).contains(&entry.category) {
            return Err(Error::Input(format!(
                "category {} for `{}` is outside 1..10",
                entry.category, entry.word
            )));
        }
        if !lexicon.relevant.insert(entry.word.clone()) {
            continue;
        }
        if entry.is_positive() {
            lexicon.positive.insert(entry.word.clone());
        } else {
            lexicon.negative.insert(entry.word.clone());
        }
        lexicon
            .categories
            .entry(entry.category)
            .or_default()
            .insert(entry.word.clone());
    }
    let overlap: Vec<&String> = irrelevant.intersection(&lexicon.relevant).collect();
    if !overlap.is_empty() {
        return Err(Error::Consistency(format!(
            "irrelevant seeds overlap the moral dictionary: {overlap:?}"
        )));
    }
    if irrelevant.len() != lexicon.relevant.len() {
        log::warn!(
            "{} irrelevant seeds vs {} relevant seeds",
            irrelevant.len(),
            lexicon.relevant.len()
        );
    }
    lexicon.irrelevant = irrelevant;
    Ok(lexicon)
}

impl SeedLexicon {
    /// Seed words of each class of `tier`, in the tier's class order.
    pub fn class_words(&self, tier: Tier) -> Vec<(String, &BTreeSet<String>)> {
        static EMPTY: BTreeSet<String> = BTreeSet::new();
        match tier {
            Tier::Relevance => vec![
                (RELEVANCE_CLASSES[0].to_string(), &self.irrelevant),
                (RELEVANCE_CLASSES[1].to_string(), &self.relevant),
            ],
            Tier::Polarity => vec![
                (POLARITY_CLASSES[0].to_string(), &self.positive),
                (POLARITY_CLASSES[1].to_string(), &self.negative),
            ],
            Tier::Category => (1..=10u8)
                .map(|id| {
                    (
                        CATEGORY_NAMES[usize::from(id) - 1].to_string(),
                        self.categories.get(&id).unwrap_or(&EMPTY),
                    )
                })
                .collect(),
        }
    }

    /// Every word that takes part in any tier.
    pub fn all_words(&self) -> BTreeSet<&String> {
        self.relevant.iter().chain(self.irrelevant.iter()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Coverage {
    pub found: usize,
    pub total: usize,
}

/// One tier's seed vectors in one decade.
#[derive(Debug, Clone)]
pub struct ClassVectors {
    pub tier: Tier,
    pub decade: i32,
    pub classes: Vec<String>,
    /// Seed words with an embedding, per class, sorted.
    pub words: Vec<Vec<String>>,
    pub vectors: Vec<Vec<Vec<f64>>>,
    pub coverage: Vec<Coverage>,
}

impl ClassVectors {
    pub fn total(&self) -> usize {
        self.vectors.iter().map(Vec::len).sum()
    }
}

/// Looks up every seed of `tier` in `space`. Seeds without a vector are
/// left out and counted in [`ClassVectors::coverage`]; a class left with no
/// vectors at all is a coverage error.
pub fn seed_vectors(lexicon: &SeedLexicon, space: &EmbeddingSpace, tier: Tier) -> Result<ClassVectors> {
    let mut out = ClassVectors {
        tier,
        decade: space.decade(),
        classes: Vec::new(),
        words: Vec::new(),
        vectors: Vec::new(),
        coverage: Vec::new(),
    };
    for (class, words) in lexicon.class_words(tier) {
        let mut found_words = Vec::new();
        let mut vectors = Vec::new();
        for word in words {
            if let Some(q) = space.lookup(word) {
                found_words.push(word.clone());
                vectors.push(q.values);
            }
        }
        if vectors.is_empty() {
            return Err(Error::Coverage {
                class,
                decade: space.decade(),
            });
        }
        if vectors.len() < words.len() {
            log::debug!(
                "decade {}: class {class} has {}/{} seeds embedded",
                space.decade(),
                vectors.len(),
                words.len()
            );
        }
        out.coverage.push(Coverage {
            found: vectors.len(),
            total: words.len(),
        });
        out.classes.push(class);
        out.words.push(found_words);
        out.vectors.push(vectors);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use proptest::prelude::*;

    use super::*;

    fn csv_file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn norm(word: &str, valence: f64) -> NormEntry {
        NormEntry {
            word: word.into(),
            valence,
            concreteness: None,
        }
    }

    fn set(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn loads_mfd_rows() {
        let f = csv_file("word,category\nempathy,1\nharm,2\nfair,3\n");
        let entries = load_mfd(f.path()).unwrap();
        assert_eq!(entries.len(), 3);
        assert_eq!(entries[0], SeedEntry::new("empathy", 1).unwrap());
        assert_eq!(category_name(entries[0].category), Some("care+"));
    }

    #[test]
    fn mfd_rejects_out_of_range_category() {
        let f = csv_file("word,category\nempathy,1\nbetray,11\n");
        match load_mfd(f.path()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn mfd_skips_multiword_and_duplicates() {
        let f = csv_file("word,category\nEmpathy,1\nfair play,3\nempathy,2\n");
        let entries = load_mfd(f.path()).unwrap();
        assert_eq!(entries, vec![SeedEntry::new("empathy", 1).unwrap()]);
    }

    #[test]
    fn loads_norms_with_optional_concreteness() {
        let f = csv_file("word,valence,concreteness\ncalm,5.0,3.1\njoy,8.2,\nmurder,1.5,2.0\n");
        let norms = load_norms(f.path()).unwrap();
        assert_eq!(norms.len(), 3);
        assert_eq!(norms[0].valence, 5.0);
        assert_eq!(norms[0].concreteness, Some(3.1));
        assert_eq!(norms[1].concreteness, None);

        let f = csv_file("word,valence\ncalm,5.0\n");
        assert_eq!(load_norms(f.path()).unwrap()[0].concreteness, None);
    }

    #[test]
    fn norms_reject_duplicates_and_bad_valence() {
        let f = csv_file("word,valence\ncalm,5.0\ncalm,4.0\n");
        let err = load_norms(f.path()).unwrap_err().to_string();
        assert!(err.contains("calm"), "{err}");
        let f = csv_file("word,valence\ncalm,9.5\n");
        assert!(matches!(load_norms(f.path()).unwrap_err(), Error::Parse { line: 2, .. }));
    }

    #[test]
    fn irrelevant_seeds_by_neutrality() {
        let norms = vec![norm("calm", 5.0), norm("joy", 8.2), norm("murder", 1.5)];
        let picked = build_irrelevant_seeds(&norms, &BTreeSet::new(), 2, None).unwrap();
        assert_eq!(picked, set(&["calm", "joy"]));
    }

    #[test]
    fn irrelevant_seeds_exclude_mfd_and_check_capacity() {
        let norms = vec![norm("care", 5.0), norm("table", 5.5), norm("chair", 4.5)];
        let picked = build_irrelevant_seeds(&norms, &set(&["care"]), 1, None).unwrap();
        // table and chair tie at 0.5; lexicographic order wins
        assert_eq!(picked, set(&["chair"]));
        let err = build_irrelevant_seeds(&norms, &set(&["care"]), 3, None).unwrap_err();
        assert!(matches!(err, Error::Capacity { requested: 3, available: 2 }));
    }

    #[test]
    fn irrelevant_seeds_vocabulary_filter() {
        let norms = vec![norm("calm", 5.0), norm("table", 5.5)];
        let space = EmbeddingSpace::from_rows(1990, 1, vec![("table", vec![1.0])]).unwrap();
        let picked = build_irrelevant_seeds(&norms, &BTreeSet::new(), 1, Some(&space)).unwrap();
        assert_eq!(picked, set(&["table"]));
    }

    #[test]
    fn tiers_from_two_entries() {
        let mfd = vec![SeedEntry::new("a", 1).unwrap(), SeedEntry::new("b", 2).unwrap()];
        let lex = build_tiers(&mfd, set(&["x", "y"])).unwrap();
        assert_eq!(lex.positive, set(&["a"]));
        assert_eq!(lex.negative, set(&["b"]));
        assert_eq!(lex.relevant, set(&["a", "b"]));
        assert_eq!(lex.class_words(Tier::Relevance).len(), 2);
    }

    #[test]
    fn tiers_cover_all_categories() {
        let mfd: Vec<SeedEntry> = (1..=10u8)
            .map(|c| SeedEntry::new(format!("w{c}"), c).unwrap())
            .collect();
        let lex = build_tiers(&mfd, BTreeSet::new()).unwrap();
        assert_eq!(lex.categories.len(), 10);
        assert!(lex.categories.values().all(|s| !s.is_empty()));
    }

    #[test]
    fn tiers_reject_overlap() {
        let mfd = vec![SeedEntry::new("a", 1).unwrap()];
        assert!(matches!(build_tiers(&mfd, set(&["a"])), Err(Error::Consistency(_))));
    }

    fn lexicon_and_space() -> (SeedLexicon, EmbeddingSpace) {
        let mfd = vec![
            SeedEntry::new("kind", 1).unwrap(),
            SeedEntry::new("cruel", 2).unwrap(),
            SeedEntry::new("just", 3).unwrap(),
        ];
        let lex = build_tiers(&mfd, set(&["chair", "lamp", "road"])).unwrap();
        let space = EmbeddingSpace::from_rows(
            1800,
            2,
            ["kind", "cruel", "just", "chair", "lamp", "road"]
                .iter()
                .enumerate()
                .map(|(i, w)| (*w, vec![i as f64, 1.0])),
        )
        .unwrap();
        (lex, space)
    }

    #[test]
    fn seed_vectors_for_binary_tiers() {
        let (lex, space) = lexicon_and_space();
        let pol = seed_vectors(&lex, &space, Tier::Polarity).unwrap();
        assert_eq!(pol.classes, vec!["positive", "negative"]);
        assert_eq!(pol.vectors[0].len(), 2);
        assert_eq!(pol.vectors[1].len(), 1);
        let rel = seed_vectors(&lex, &space, Tier::Relevance).unwrap();
        assert_eq!(rel.vectors.len(), 2);
        assert_eq!(rel.vectors[0].len(), rel.vectors[1].len());
    }

    #[test]
    fn seed_vectors_missing_category_is_coverage_error() {
        let (lex, space) = lexicon_and_space();
        match seed_vectors(&lex, &space, Tier::Category).unwrap_err() {
            Error::Coverage { class, decade } => {
                assert_eq!(class, "cheating-");
                assert_eq!(decade, 1800);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn seed_vectors_report_partial_coverage() {
        let (lex, _) = lexicon_and_space();
        let space = EmbeddingSpace::from_rows(
            1800,
            1,
            vec![("kind", vec![1.0]), ("cruel", vec![0.0])],
        )
        .unwrap();
        let pol = seed_vectors(&lex, &space, Tier::Polarity).unwrap();
        assert_eq!(pol.coverage[0], Coverage { found: 1, total: 2 });
    }

    proptest! {
        #[test]
        fn tier_partition_invariants(cats in proptest::collection::vec(1u8..=10, 1..60)) {
            let mfd: Vec<SeedEntry> = cats
                .iter()
                .enumerate()
                .map(|(i, &c)| SeedEntry::new(format!("w{}", i % 40), c).unwrap())
                .collect();
            let lex = build_tiers(&mfd, BTreeSet::new()).unwrap();
            let union: BTreeSet<String> = lex.positive.union(&lex.negative).cloned().collect();
            prop_assert_eq!(&union, &lex.relevant);
            prop_assert!(lex.positive.is_disjoint(&lex.negative));
            let cat_union: BTreeSet<String> = lex.categories.values().flatten().cloned().collect();
            prop_assert_eq!(&cat_union, &lex.relevant);
        }

        #[test]
        fn irrelevant_selection_is_most_neutral(
            valences in proptest::collection::vec(1.0f64..=9.0, 1..40),
            frac in 0.0f64..=1.0,
        ) {
            let norms: Vec<NormEntry> = valences
                .iter()
                .enumerate()
                .map(|(i, &v)| norm(&format!("n{i:02}"), v))
                .collect();
            let count = (frac * norms.len() as f64).floor() as usize;
            let picked = build_irrelevant_seeds(&norms, &BTreeSet::new(), count, None).unwrap();
            let again = build_irrelevant_seeds(&norms, &BTreeSet::new(), count, None).unwrap();
            prop_assert_eq!(&picked, &again);
            prop_assert_eq!(picked.len(), count);
            let dev = |n: &NormEntry| (n.valence - NEUTRAL_VALENCE).abs();
            for sel in norms.iter().filter(|n| picked.contains(&n.word)) {
                for other in norms.iter().filter(|n| !picked.contains(&n.word)) {
                    prop_assert!(dev(sel) <= dev(other));
                }
            }
        }
    }
}
