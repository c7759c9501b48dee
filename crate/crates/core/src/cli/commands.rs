use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;
use super::output::Output;
use super::Command;
use crate::classifier::{log_odds, Classifier, ModelKind, ModelSpec};
use crate::diachronic::{
    load_wordlist, prediction_matrix_with, retrieve_changing, CategoryLabeler, PredictionMatrix,
    RetrievalOptions, ScoreKind, TierModels, CHANGE_RECORD_HEADER,
};
use crate::embedding_store::{load_diachronic, DiachronicEmbeddings, EmbeddingSpace};
use crate::error::{Error, Result};
use crate::evaluation::{
    load_survey, loo_accuracy, loo_accuracy_historical, survey_correlation, tune_bandwidth,
    valence_correlation, BANDWIDTH_GRID,
};
use crate::fixtures::{generate, FixtureConfig};
use crate::format::{fmt_f64, fmt_opt};
use crate::lexicon::{
    build_irrelevant_seeds, build_tiers, category_name, load_mfd, load_norms, seed_vectors,
    NormEntry, SeedLexicon, Tier,
};
use crate::stats::{change_regression, fisher_projection, permutation_control, WordFactors};

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Align => "align",
        Command::Classify { .. } => "classify",
        Command::Timecourse { .. } => "timecourse",
        Command::Matrix { .. } => "matrix",
        Command::Evaluate { .. } => "evaluate",
        Command::ValenceCorr { .. } => "valence-corr",
        Command::SurveyCorr { .. } => "survey-corr",
        Command::Retrieve { .. } => "retrieve",
        Command::Regress { .. } => "regress",
        Command::Permute { .. } => "permute",
        Command::Project { .. } => "project",
        Command::Fixture { .. } => "fixture",
    }
}

struct Ctx {
    config: RunConfig,
    out: Output,
}

impl Ctx {
    fn diachronic(&self) -> Result<DiachronicEmbeddings> {
        let manifest = self.config.require(&self.config.manifest, "manifest")?;
        let mut d = load_diachronic(manifest)?;
        if let Some(mode) = self.config.align {
            d = d.align(mode)?.0;
        }
        if self.config.normalize {
            d = d.normalized();
        }
        Ok(d)
    }

    fn norms(&self) -> Result<Vec<NormEntry>> {
        load_norms(self.config.require(&self.config.norms, "norms")?)
    }

    /// Seed lexicon with irrelevance seeds drawn from words that have a
    /// vector in `vocabulary`.
    fn lexicon(&self, norms: &[NormEntry], vocabulary: &EmbeddingSpace) -> Result<SeedLexicon> {
        let mfd = load_mfd(self.config.require(&self.config.mfd, "mfd")?)?;
        let mfd_words: BTreeSet<String> = mfd.iter().map(|e| e.word.clone()).collect();
        let count = self.config.irrelevant_count.unwrap_or(mfd_words.len());
        let irrelevant = build_irrelevant_seeds(norms, &mfd_words, count, Some(vocabulary))?;
        build_tiers(&mfd, irrelevant)
    }

    /// Model spec; a KDE bandwidth left unset is tuned on the polarity seeds
    /// of `space`.
    fn spec(&self, lexicon: &SeedLexicon, space: &EmbeddingSpace) -> Result<ModelSpec> {
        match (self.config.model, self.config.bandwidth) {
            (ModelKind::Kde, None) => {
                let seeds = seed_vectors(lexicon, space, Tier::Polarity)?;
                let (h, scores) = tune_bandwidth(&seeds, &BANDWIDTH_GRID)?;
                log::info!("tuned KDE bandwidth {h} on decade {}: {scores:?}", space.decade());
                Ok(self.config.spec_with(h))
            }
            (_, h) => Ok(self.config.spec_with(h.unwrap_or(1.0))),
        }
    }

    fn wordlist(&self) -> Result<Vec<(String, f64)>> {
        let list = load_wordlist(self.config.require(&self.config.wordlist, "wordlist")?)?;
        if list.is_empty() {
            return Err(Error::Input("word list is empty".into()));
        }
        Ok(list)
    }

    fn matrix(&self, path: Option<&Path>, kind: ScoreKind) -> Result<PredictionMatrix> {
        if let Some(path) = path {
            let m = PredictionMatrix::load_json(path)?;
            if m.kind != kind {
                return Err(Error::Input(format!(
                    "{} holds a {} matrix, expected {kind}",
                    path.display(),
                    m.kind
                )));
            }
            return Ok(m);
        }
        let d = self.diachronic()?;
        let latest = latest(&d)?;
        let norms = self.norms()?;
        let lexicon = self.lexicon(&norms, latest)?;
        let spec = self.spec(&lexicon, latest)?;
        let models = TierModels::fit(&d, &lexicon, spec, kind.tier())?;
        let words: Vec<String> = self.wordlist()?.into_iter().map(|(w, _)| w).collect();
        prediction_matrix_with(&models, &d, &words, kind)
    }
}

fn latest(d: &DiachronicEmbeddings) -> Result<&EmbeddingSpace> {
    d.spaces()
        .last()
        .ok_or_else(|| Error::Input("no decades loaded".into()))
}

fn decade_space(d: &DiachronicEmbeddings, decade: Option<i32>) -> Result<&EmbeddingSpace> {
    match decade {
        Some(dec) => d.space(dec).ok_or_else(|| {
            Error::Input(format!("decade {dec} not loaded (have {:?})", d.decades()))
        }),
        None => latest(d),
    }
}

fn print_json<T: Serialize>(out: &Output, value: &T) -> Result<()> {
    print!("{}", out.json_string(value)?);
    Ok(())
}

pub fn execute(config: RunConfig, command: Command) -> Result<()> {
    let name = command_name(&command);
    let hash = config.hash(&format!("{command:?}"));
    let out = Output::new(&config.out, name, hash);
    let ctx = Ctx { config, out };
    match command {
        Command::Align => align(&ctx),
        Command::Classify { word, decade } => classify(&ctx, &word, decade),
        Command::Timecourse { word } => timecourse(&ctx, &word),
        Command::Matrix { kind } => matrix(&ctx, kind),
        Command::Evaluate { decade, historical } => evaluate(&ctx, decade, historical),
        Command::ValenceCorr { decade } => valence(&ctx, decade),
        Command::SurveyCorr { decade, .. } => survey(&ctx, decade),
        Command::Retrieve {
            direction,
            top,
            matrix,
            relevance_matrix,
            no_categories,
        } => {
            let kind = direction.score_kind();
            let m = ctx.matrix(matrix.as_deref(), kind)?;
            let rel = match kind {
                ScoreKind::Polarity => Some(ctx.matrix(relevance_matrix.as_deref(), ScoreKind::Relevance)?),
                ScoreKind::Relevance => None,
            };
            let opts = RetrievalOptions {
                direction,
                top_n: top,
                family: ctx.config.bonferroni,
            };
            let labeler_data = if no_categories || ctx.config.manifest.is_none() {
                None
            } else {
                let d = ctx.diachronic()?;
                let norms = ctx.norms()?;
                let lexicon = ctx.lexicon(&norms, latest(&d)?)?;
                let spec = ctx.spec(&lexicon, latest(&d)?)?;
                Some((d, lexicon, spec))
            };
            let labeler = match &labeler_data {
                Some((d, lexicon, spec)) => Some(CategoryLabeler::new(d, lexicon, *spec)?),
                None => None,
            };
            let r = retrieve_changing(&m, rel.as_ref(), labeler.as_ref(), opts)?;
            for note in &r.diagnostics {
                log::warn!("{note}");
            }
            let mut body = format!("{CHANGE_RECORD_HEADER}\n");
            for rec in &r.records {
                body.push_str(&rec.csv_row());
                body.push('\n');
            }
            let path = ctx.out.write_csv(&format!("retrieve_{direction}.csv"), &body)?;
            eprintln!(
                "{} records ({} words tested, Bonferroni m = {}) -> {}",
                r.records.len(),
                r.tested,
                r.family_size,
                path.display()
            );
            Ok(())
        }
        Command::Regress { matrix } => regress(&ctx, matrix.as_deref()),
        Command::Permute { matrix, shuffles } => permute(&ctx, matrix.as_deref(), shuffles),
        Command::Project { word, decade } => project(&ctx, &word, decade),
        Command::Fixture { dir } => {
            let fixture = generate(&FixtureConfig {
                seed: ctx.config.seed,
                ..FixtureConfig::default()
            })?;
            let paths = fixture.write(&dir)?;
            eprintln!("fixture written; run with --config {}", paths.config.display());
            Ok(())
        }
    }
}

fn align(ctx: &Ctx) -> Result<()> {
    let manifest = ctx.config.require(&ctx.config.manifest, "manifest")?;
    let d = load_diachronic(manifest)?;
    let mode = ctx.config.align.unwrap_or(crate::embedding_store::AlignmentMode::Forward);
    let (aligned, rotations) = d.align(mode)?;
    let aligned = if ctx.config.normalize { aligned.normalized() } else { aligned };
    let path = aligned.save(&ctx.out.dir.join("aligned"))?;

    #[derive(Serialize)]
    struct Report {
        mode: String,
        decades: Vec<i32>,
        manifest: String,
        orthogonality_residual: Vec<f64>,
    }
    let report = Report {
        mode: mode.to_string(),
        decades: aligned.decades(),
        manifest: "aligned/manifest.csv".into(),
        orthogonality_residual: rotations
            .iter()
            .map(|r| {
                let n = r.nrows();
                (r.transpose() * r - nalgebra::DMatrix::<f64>::identity(n, n)).norm()
            })
            .collect(),
    };
    ctx.out.write_json("alignment.json", &report)?;
    eprintln!("aligned {} decades -> {}", report.decades.len(), path.display());
    Ok(())
}

fn classify(ctx: &Ctx, words: &[String], decade: Option<i32>) -> Result<()> {
    let d = ctx.diachronic()?;
    let space = decade_space(&d, decade)?;
    let norms = ctx.norms()?;
    let lexicon = ctx.lexicon(&norms, latest(&d)?)?;
    let spec = ctx.spec(&lexicon, space)?;
    let seeds = seed_vectors(&lexicon, space, ctx.config.tier)?;
    let model = Classifier::fit_seeds(spec, &seeds)?;
    let words: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let avg = space.average_vector(&words)?;
    let posterior = model.posterior(&avg.query)?;

    #[derive(Serialize)]
    struct Report<'a> {
        query: &'a str,
        skipped: &'a [String],
        decade: i32,
        tier: Tier,
        model: ModelSpec,
        prediction: &'a str,
        posterior: &'a crate::classifier::PosteriorDistribution,
    }
    print_json(
        &ctx.out,
        &Report {
            query: &avg.query.source,
            skipped: &avg.skipped,
            decade: space.decade(),
            tier: ctx.config.tier,
            model: spec,
            prediction: posterior.top_class(),
            posterior: &posterior,
        },
    )
}

fn timecourse(ctx: &Ctx, word: &str) -> Result<()> {
    let d = ctx.diachronic()?;
    let norms = ctx.norms()?;
    let lexicon = ctx.lexicon(&norms, latest(&d)?)?;
    let spec = ctx.spec(&lexicon, latest(&d)?)?;
    let tier = ctx.config.tier;
    let word = word.to_lowercase();
    let tc = TierModels::fit(&d, &lexicon, spec, tier)?.time_course(&d, &word)?;
    let classes = tier.classes();
    let odds = match tier {
        Tier::Relevance => Some(("relevant", "irrelevant")),
        Tier::Polarity => Some(("positive", "negative")),
        Tier::Category => None,
    };
    let mut body = format!("decade,{}", classes.join(","));
    if odds.is_some() {
        body.push_str(",log_odds");
    }
    body.push('\n');
    for (decade, p) in tc.decades.iter().zip(&tc.scores) {
        body.push_str(&decade.to_string());
        for c in &classes {
            body.push(',');
            body.push_str(&fmt_opt(p.as_ref().and_then(|p| p.get(c))));
        }
        if let Some((num, den)) = odds {
            body.push(',');
            if let Some(p) = p {
                body.push_str(&fmt_f64(log_odds(p, num, den)?));
            }
        }
        body.push('\n');
    }
    let path = ctx.out.write_csv(&format!("timecourse_{word}_{tier}.csv"), &body)?;
    eprintln!("{} decades -> {}", tc.decades.len(), path.display());
    Ok(())
}

fn matrix(ctx: &Ctx, kind: ScoreKind) -> Result<()> {
    let m = ctx.matrix(None, kind)?;
    ctx.out.write_json(&format!("matrix_{kind}.json"), &m)?;
    let mut body = Vec::new();
    m.write_long_csv(&mut body).map_err(|e| Error::io(&ctx.out.dir, e))?;
    let path = ctx
        .out
        .write_csv(&format!("matrix_{kind}.csv"), &String::from_utf8_lossy(&body))?;
    eprintln!("{} words x {} decades -> {}", m.words.len(), m.decades.len(), path.display());
    Ok(())
}

fn evaluate(ctx: &Ctx, decade: Option<i32>, historical: bool) -> Result<()> {
    let d = ctx.diachronic()?;
    let norms = ctx.norms()?;
    let lexicon = ctx.lexicon(&norms, latest(&d)?)?;
    let tier = ctx.config.tier;
    let model = ctx.config.model;
    if historical {
        let spec = ctx.spec(&lexicon, latest(&d)?)?;
        let h = loo_accuracy_historical(spec, &lexicon, &d, tier)?;
        ctx.out.write_json(&format!("accuracy_historical_{tier}_{model}.json"), &h)?;
        print_json(&ctx.out, &h)
    } else {
        let space = decade_space(&d, decade)?;
        let spec = ctx.spec(&lexicon, space)?;
        let report = loo_accuracy(spec, &lexicon, space, tier)?;
        ctx.out.write_json(&format!("accuracy_{tier}_{model}_{}.json", space.decade()), &report)?;
        print_json(&ctx.out, &report)
    }
}

fn valence(ctx: &Ctx, decade: Option<i32>) -> Result<()> {
    let d = ctx.diachronic()?;
    let space = decade_space(&d, decade)?;
    let norms = ctx.norms()?;
    let lexicon = ctx.lexicon(&norms, latest(&d)?)?;
    let spec = ctx.spec(&lexicon, space)?;
    let model = Classifier::fit_seeds(spec, &seed_vectors(&lexicon, space, Tier::Polarity)?)?;
    let report = valence_correlation(&model, space, &norms)?;
    ctx.out.write_json("valence_corr.json", &report)?;
    print_json(&ctx.out, &report)
}

fn survey(ctx: &Ctx, decade: Option<i32>) -> Result<()> {
    let items = load_survey(ctx.config.require(&ctx.config.survey, "survey")?)?;
    let d = ctx.diachronic()?;
    let space = decade_space(&d, decade)?;
    let norms = ctx.norms()?;
    let lexicon = ctx.lexicon(&norms, latest(&d)?)?;
    let spec = ctx.spec(&lexicon, space)?;
    let rel = Classifier::fit_seeds(spec, &seed_vectors(&lexicon, space, Tier::Relevance)?)?;
    let pol = Classifier::fit_seeds(spec, &seed_vectors(&lexicon, space, Tier::Polarity)?)?;
    let report = survey_correlation(&rel, &pol, space, &items)?;
    ctx.out.write_json("survey_corr.json", &report)?;
    print_json(&ctx.out, &report)
}

fn factors(ctx: &Ctx) -> Result<WordFactors> {
    Ok(WordFactors::new(&ctx.norms()?, &ctx.wordlist()?))
}

fn regress(ctx: &Ctx, matrix: Option<&Path>) -> Result<()> {
    let m = ctx.matrix(matrix, ScoreKind::Relevance)?;
    let reg = change_regression(&m, &factors(ctx)?)?;
    let partial = reg.partial_correlations()?;

    #[derive(Serialize)]
    struct Partial {
        factor: String,
        r: f64,
        p: f64,
        n: usize,
    }
    #[derive(Serialize)]
    struct Report<'a> {
        regression: &'a crate::stats::RegressionFit,
        words: &'a [String],
        partial_correlations: Vec<Partial>,
    }
    let report = Report {
        regression: &reg.fit,
        words: &reg.words,
        partial_correlations: partial
            .into_iter()
            .map(|(factor, c)| Partial {
                factor,
                r: c.r,
                p: c.p,
                n: c.n,
            })
            .collect(),
    };
    ctx.out.write_json("regression.json", &report)?;
    let mut body = String::from("term,estimate,std_error,t_stat,p_value\n");
    for c in &reg.fit.coefficients {
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            c.name,
            fmt_f64(c.estimate),
            fmt_f64(c.std_error),
            fmt_f64(c.t_stat),
            fmt_f64(c.p_value)
        ));
    }
    ctx.out.write_csv("regression.csv", &body)?;
    print_json(&ctx.out, &report)
}

fn permute(ctx: &Ctx, matrix: Option<&Path>, shuffles: usize) -> Result<()> {
    let m = ctx.matrix(matrix, ScoreKind::Relevance)?;
    let report = permutation_control(&m, &factors(ctx)?, shuffles, ctx.config.seed)?;
    ctx.out.write_json("permutation.json", &report)?;
    let mut body =
        String::from("factor,diachronic_coefficient,control_mean,control_stdev,empirical_p\n");
    for f in &report.factors {
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            f.name,
            fmt_f64(f.diachronic_coefficient),
            fmt_f64(f.control_mean),
            fmt_f64(f.control_stdev),
            fmt_f64(f.empirical_p)
        ));
    }
    let path = ctx.out.write_csv("permutation.csv", &body)?;
    eprintln!("{} shuffles, {} words -> {}", report.shuffles, report.sample_size, path.display());
    Ok(())
}

fn project(ctx: &Ctx, words: &[String], decade: Option<i32>) -> Result<()> {
    let d = ctx.diachronic()?;
    let space = decade_space(&d, decade)?;
    let norms = ctx.norms()?;
    let lexicon = ctx.lexicon(&norms, latest(&d)?)?;
    let vectors = |set: &BTreeSet<String>| -> Vec<Vec<f64>> {
        set.iter()
            .filter_map(|w| space.lookup(w))
            .map(|q| q.values)
            .collect()
    };
    let classes = vec![
        ("virtue".to_string(), vectors(&lexicon.positive)),
        ("vice".to_string(), vectors(&lexicon.negative)),
        ("irrelevance".to_string(), vectors(&lexicon.irrelevant)),
    ];
    let anchors: Vec<(String, Vec<Vec<f64>>)> = lexicon
        .categories
        .iter()
        .map(|(id, set)| (category_name(*id).unwrap_or("?").to_string(), vectors(set)))
        .collect();
    let mut queries = Vec::new();
    for w in words {
        match space.lookup(&w.to_lowercase()) {
            Some(q) => queries.push(q),
            None => log::warn!("`{w}` has no vector in decade {}", space.decade()),
        }
    }
    let proj = fisher_projection(&classes, &queries, &anchors)?;
    let mut body = String::from("kind,label,x,y\n");
    for (kind, points) in [
        ("query", &proj.queries),
        ("class", &proj.class_centroids),
        ("anchor", &proj.anchors),
    ] {
        for p in points {
            body.push_str(&format!("{kind},{},{},{}\n", p.label, fmt_f64(p.x), fmt_f64(p.y)));
        }
    }
    let path = ctx.out.write_csv(&format!("projection_{}.csv", space.decade()), &body)?;
    eprintln!("{} queries projected -> {}", proj.queries.len(), path.display());
    Ok(())
}
