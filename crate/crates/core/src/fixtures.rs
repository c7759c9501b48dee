//! Deterministic synthetic corpus: per-decade embeddings with planted moral
//! geometry, a seed dictionary, norms, a word list and a survey.
//!
//! Axis 0 separates relevant from irrelevant words, axis 1 positive from
//! negative, and axes 2..7 carry the five foundations. Concept words drift
//! along these axes over the decades.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding_store::{DiachronicEmbeddings, EmbeddingSpace};
use crate::error::{Error, Result};
use crate::evaluation::SurveyItem;
use crate::format::fmt_f64;
use crate::lexicon::{NormEntry, SeedEntry};

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ren", "tas", "vo", "bel", "su", "dri", "om", "pra", "en", "gul", "ti", "nor", "ve",
];

#[derive(Debug, Clone)]
pub struct FixtureConfig {
    pub seed: u64,
    pub dim: usize,
    pub first_decade: i32,
    pub decades: usize,
    pub seeds_per_category: usize,
    pub neutral_words: usize,
    pub valenced_words: usize,
    pub concepts: usize,
    /// Spread of each coordinate around its planted value.
    pub noise: f64,
    /// Rotate every decade after the first by a random orthogonal matrix.
    pub rotate: bool,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            seed: 7,
            dim: 12,
            first_decade: 1800,
            decades: 20,
            seeds_per_category: 4,
            neutral_words: 60,
            valenced_words: 40,
            concepts: 300,
            noise: 0.3,
            rotate: true,
        }
    }
}

/// Planted trajectory of a concept word.
#[derive(Debug, Clone)]
pub struct Concept {
    pub word: String,
    pub relevance: (f64, f64),
    pub polarity: (f64, f64),
    pub foundation: usize,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub diachronic: DiachronicEmbeddings,
    pub mfd: Vec<SeedEntry>,
    pub norms: Vec<NormEntry>,
    pub wordlist: Vec<(String, f64)>,
    pub survey: Vec<SurveyItem>,
    pub concepts: Vec<Concept>,
}

#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub manifest: PathBuf,
    pub mfd: PathBuf,
    pub norms: PathBuf,
    pub wordlist: PathBuf,
    pub survey: PathBuf,
    pub config: PathBuf,
}

struct Namer {
    used: BTreeSet<String>,
}

impl Namer {
    fn next(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let n = rng.random_range(2..=4);
            let w: String = (0..n).map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())]).collect();
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn random_rotation(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    m.qr().q()
}

fn interpolate(span: (f64, f64), t: usize, n: usize) -> f64 {
    span.0 + (span.1 - span.0) * t as f64 / (n - 1).max(1) as f64
}

pub fn generate(config: &FixtureConfig) -> Result<Fixture> {
    if config.dim < 7 {
        return Err(Error::Parameter("fixture needs at least 7 dimensions".into()));
    }
    if config.decades < 2 || config.seeds_per_category < 2 {
        return Err(Error::Parameter("fixture needs 2+ decades and 2+ seeds per category".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut namer = Namer {
        used: BTreeSet::new(),
    };

    // (word, planted centre) for words that do not move
    let mut stable: Vec<(String, Vec<f64>)> = Vec::new();
    let mut mfd = Vec::new();
    let mut norms = Vec::new();
    let centre = |rel: f64, pol: f64, foundation: Option<usize>, mag: f64| {
        let mut v = vec![0.0; config.dim];
        v[0] = rel;
        v[1] = pol;
        if let Some(f) = foundation {
            v[2 + f] = mag;
        }
        v
    };

    for category in 1..=10u8 {
        let positive = category % 2 == 1;
        let foundation = usize::from((category - 1) / 2);
        for _ in 0..config.seeds_per_category {
            let word = namer.next(&mut rng);
            let pol = if positive { 2.0 } else { -2.0 };
            stable.push((word.clone(), centre(2.0, pol, Some(foundation), 2.0)));
            mfd.push(SeedEntry::new(word.clone(), category)?);
            let valence = if positive {
                rng.random_range(6.5..8.5)
            } else {
                rng.random_range(1.5..3.5)
            };
            norms.push(NormEntry {
                word,
                valence,
                concreteness: Some(rng.random_range(1.0..5.0)),
            });
        }
    }
    for _ in 0..config.neutral_words {
        let word = namer.next(&mut rng);
        stable.push((word.clone(), centre(-2.0, 0.0, None, 0.0)));
        norms.push(NormEntry {
            word,
            valence: rng.random_range(4.6..5.4),
            concreteness: Some(rng.random_range(1.0..5.0)),
        });
    }
    for _ in 0..config.valenced_words {
        let word = namer.next(&mut rng);
        let pol = rng.random_range(-2.0..2.0);
        stable.push((word.clone(), centre(rng.random_range(-1.0..1.0), pol, None, 0.0)));
        norms.push(NormEntry {
            word,
            valence: (5.0 + 1.5 * pol + 0.5 * gaussian(&mut rng)).clamp(1.0, 9.0),
            concreteness: Some(rng.random_range(1.0..5.0)),
        });
    }

    let mut concepts = Vec::new();
    let mut wordlist = Vec::new();
    for _ in 0..config.concepts {
        let word = namer.next(&mut rng);
        let concreteness: f64 = rng.random_range(1.0..5.0);
        // abstract concepts tend to gain relevance
        let start = rng.random_range(-2.5..2.5);
        let drift = rng.random_range(-2.0..2.0) + 0.6 * (3.0 - concreteness);
        let pol_start = rng.random_range(-2.0..2.0);
        let pol_drift = rng.random_range(-2.0..2.0);
        concepts.push(Concept {
            word: word.clone(),
            relevance: (start, (start + drift).clamp(-3.0, 3.0)),
            polarity: (pol_start, (pol_start + pol_drift).clamp(-3.0, 3.0)),
            foundation: rng.random_range(0..5),
        });
        norms.push(NormEntry {
            word: word.clone(),
            valence: (5.0 + 1.5 * (pol_start + pol_drift)).clamp(1.0, 9.0),
            concreteness: Some(concreteness),
        });
        let freq = (rng.random_range(2.0f64..11.0)).exp().round();
        wordlist.push((word, freq));
    }
    // a few seeds in the list as well, as in a real frequency-ranked list
    for entry in mfd.iter().step_by(5) {
        wordlist.push((entry.word.clone(), rng.random_range(100.0..10_000.0f64).round()));
    }

    let mut spaces = Vec::with_capacity(config.decades);
    for t in 0..config.decades {
        let decade = config.first_decade + 10 * t as i32;
        let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
        let mut push = |word: &str, c: &[f64], rng: &mut ChaCha8Rng| {
            let v: Vec<f64> = c.iter().map(|x| x + config.noise * gaussian(rng)).collect();
            rows.push((word.to_string(), v));
        };
        for (word, c) in &stable {
            push(word, c, &mut rng);
        }
        for concept in &concepts {
            let rel = interpolate(concept.relevance, t, config.decades);
            let pol = interpolate(concept.polarity, t, config.decades);
            let mag = rel.max(0.0);
            let c = centre(rel, pol * mag.min(2.0) / 2.0, Some(concept.foundation), mag);
            push(&concept.word, &c, &mut rng);
        }
        if config.rotate && t > 0 {
            let q = random_rotation(&mut rng, config.dim);
            for (_, v) in rows.iter_mut() {
                let y = &q * nalgebra::DVector::from_column_slice(v);
                *v = y.as_slice().to_vec();
            }
        }
        spaces.push(EmbeddingSpace::from_rows(decade, config.dim, rows)?);
    }
    let diachronic = DiachronicEmbeddings::new(spaces)?;

    let mut survey = Vec::new();
    for (i, concept) in concepts.iter().take(8).enumerate() {
        let topic = if i >= 6 {
            format!("{} {}", concept.word, concepts[concepts.len() - 1 - i].word)
        } else {
            concept.word.clone()
        };
        let rel = concept.relevance.1;
        let pol = concept.polarity.1;
        survey.push(SurveyItem {
            topic,
            frac_not_moral: (0.5 - 0.12 * rel + 0.03 * gaussian(&mut rng)).clamp(0.0, 1.0),
            frac_acceptable: (0.5 + 0.12 * pol + 0.03 * gaussian(&mut rng)).clamp(0.0, 1.0),
        });
    }

    Ok(Fixture {
        diachronic,
        mfd,
        norms,
        wordlist,
        survey,
        concepts,
    })
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}

impl Fixture {
    /// Writes the corpus and a `run.conf` pointing at it.
    pub fn write(&self, dir: &Path) -> Result<FixturePaths> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = self.diachronic.save(&dir.join("embeddings"))?;

        let mut body = String::from("word,category\n");
        for e in &self.mfd {
            body.push_str(&format!("{},{}\n", e.word, e.category));
        }
        let mfd = dir.join("mfd.csv");
        write_file(&mfd, &body)?;

        let mut body = String::from("word,valence,concreteness\n");
        for n in &self.norms {
            let c = n.concreteness.map(fmt_f64).unwrap_or_default();
            body.push_str(&format!("{},{},{}\n", n.word, fmt_f64(n.valence), c));
        }
        let norms = dir.join("norms.csv");
        write_file(&norms, &body)?;

        let mut body = String::from("word,frequency\n");
        for (w, f) in &self.wordlist {
            body.push_str(&format!("{w},{}\n", fmt_f64(*f)));
        }
        let wordlist = dir.join("wordlist.csv");
        write_file(&wordlist, &body)?;

        let mut body = String::from("topic,frac_not_moral,frac_acceptable\n");
        for s in &self.survey {
            body.push_str(&format!(
                "{},{},{}\n",
                s.topic,
                fmt_f64(s.frac_not_moral),
                fmt_f64(s.frac_acceptable)
            ));
        }
        let survey = dir.join("survey.csv");
        write_file(&survey, &body)?;

        let config = dir.join("run.conf");
        write_file(
            &config,
            "# synthetic fixture\n\
             manifest = embeddings/manifest.csv\n\
             mfd = mfd.csv\n\
             norms = norms.csv\n\
             wordlist = wordlist.csv\n\
             align = forward\n\
             model = centroid\n\
             out = out\n\
             seed = 1\n",
        )?;
        Ok(FixturePaths {
            manifest,
            mfd,
            norms,
            wordlist,
            survey,
            config,
        })
    }
}
