use proptest::prelude::*;

use moral_sentiment::classifier::{Classifier, ModelKind, ModelSpec};
use moral_sentiment::diachronic::{
    retrieve_changing, series_slope, switching_decade, BonferroniFamily, Direction, PredictionMatrix,
    RetrievalOptions, ScoreKind,
};
use moral_sentiment::embedding_store::{align_procrustes, read_text, write_text, EmbeddingSpace};
use moral_sentiment::evaluation::loo_accuracy_seeds;
use moral_sentiment::lexicon::{ClassVectors, Coverage, Tier};
use moral_sentiment::stats::{linear_trend, pearson};

fn seeds_strategy(dim: usize) -> impl Strategy<Value = Vec<Vec<Vec<f64>>>> {
    prop::collection::vec(
        prop::collection::vec(prop::collection::vec(-5.0f64..5.0, dim), 2..8),
        2..5,
    )
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|c| format!("c{c}")).collect()
}

fn class_vectors(vectors: Vec<Vec<Vec<f64>>>) -> ClassVectors {
    ClassVectors {
        tier: Tier::Category,
        decade: 1990,
        classes: names(vectors.len()),
        words: vectors
            .iter()
            .enumerate()
            .map(|(c, vs)| (0..vs.len()).map(|i| format!("w{c}_{i}")).collect())
            .collect(),
        coverage: vectors
            .iter()
            .map(|vs| Coverage {
                found: vs.len(),
                total: vs.len(),
            })
            .collect(),
        vectors,
    }
}

fn matrix(kind: ScoreKind, values: Vec<Vec<Option<f64>>>) -> PredictionMatrix {
    let n_dec = values[0].len();
    let words = (0..values.len()).map(|i| format!("w{i:03}")).collect();
    PredictionMatrix::new(kind, (0..n_dec as i32).map(|i| 1800 + 10 * i).collect(), words, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posteriors_normalized(seeds in seeds_strategy(3), q in prop::collection::vec(-50.0f64..50.0, 3), kind in 0usize..4) {
        let total: usize = seeds.iter().map(Vec::len).sum();
        let spec = match ModelKind::ALL[kind] {
            ModelKind::Knn => ModelSpec::knn(total.min(5)),
            ModelKind::Kde => ModelSpec::kde(0.5),
            k => ModelSpec::new(k),
        };
        let model = Classifier::fit(spec, None, names(seeds.len()), seeds).unwrap();
        let p = model.posterior_values(&q).unwrap();
        prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.probs().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn centroid_translation_invariant(seeds in seeds_strategy(4), q in prop::collection::vec(-5.0f64..5.0, 4), shift in prop::collection::vec(-100.0f64..100.0, 4)) {
        let moved: Vec<Vec<Vec<f64>>> = seeds
            .iter()
            .map(|c| c.iter().map(|s| s.iter().zip(&shift).map(|(a, b)| a + b).collect()).collect())
            .collect();
        let mq: Vec<f64> = q.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let a = Classifier::fit(ModelSpec::centroid(), None, names(seeds.len()), seeds.clone()).unwrap();
        let b = Classifier::fit(ModelSpec::centroid(), None, names(seeds.len()), moved).unwrap();
        let (pa, pb) = (a.posterior_values(&q).unwrap(), b.posterior_values(&mq).unwrap());
        prop_assert_eq!(pa.argmax(), pb.argmax());
        for (x, y) in pa.probs().iter().zip(pb.probs()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn loo_accuracy_ignores_seed_order(seeds in seeds_strategy(3), rot in 0usize..7, kind in 0usize..4) {
        let spec = match ModelKind::ALL[kind] {
            ModelKind::Knn => ModelSpec::knn(1),
            ModelKind::Kde => ModelSpec::kde(0.5),
            k => ModelSpec::new(k),
        };
        let reordered: Vec<Vec<Vec<f64>>> = seeds
            .iter()
            .map(|c| {
                let mut c = c.clone();
                let r = rot % c.len();
                c.rotate_left(r);
                c.reverse();
                c
            })
            .collect();
        let a = loo_accuracy_seeds(spec, &class_vectors(seeds)).unwrap();
        let b = loo_accuracy_seeds(spec, &class_vectors(reordered)).unwrap();
        prop_assert_eq!(a.accuracy, b.accuracy);
        prop_assert_eq!(a.confusion, b.confusion);
    }

    #[test]
    fn slope_ignores_point_order_and_offsets(ys in prop::collection::vec(0.0f64..1.0, 5..25), c in -0.4f64..0.4, seed in any::<u64>()) {
        let scores: Vec<Option<f64>> = ys.iter().copied().map(Some).collect();
        let base = series_slope(&scores).unwrap();
        let shifted: Vec<Option<f64>> = ys.iter().map(|y| Some(y + c)).collect();
        prop_assert!((series_slope(&shifted).unwrap().slope - base.slope).abs() < 1e-12);

        let mut pairs: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, y)| ((i + 1) as f64, *y)).collect();
        let n = pairs.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            pairs.swap(i, (s >> 33) as usize % (i + 1));
        }
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assert!((linear_trend(&x, &y).unwrap().slope - base.slope).abs() < 1e-12);
    }

    #[test]
    fn switching_decade_class_is_final_class(classes in prop::collection::vec(prop::option::of(0usize..3), 1..20)) {
        let decades: Vec<i32> = (0..classes.len() as i32).map(|i| 1800 + 10 * i).collect();
        let last = classes.iter().rev().flatten().next().copied();
        match switching_decade(&decades, &classes) {
            Some(d) => {
                let i = decades.iter().position(|x| *x == d).unwrap();
                prop_assert_eq!(classes[i], last);
            }
            None => prop_assert!(last.is_none()),
        }
    }

    #[test]
    fn retrieval_filter_and_direction_split(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 8), 3..30),
        rel in prop::collection::vec(prop::collection::vec(0.3f64..1.0, 8), 30),
    ) {
        let n = rows.len();
        let pol = matrix(ScoreKind::Polarity, rows.into_iter().map(|r| r.into_iter().map(Some).collect()).collect());
        let relm = matrix(ScoreKind::Relevance, rel.into_iter().take(n).map(|r| r.into_iter().map(Some).collect()).collect());
        let opts = |direction| RetrievalOptions { direction, top_n: 5, family: BonferroniFamily::Filtered };
        let pos = retrieve_changing(&pol, Some(&relm), None, opts(Direction::TowardPositive)).unwrap();
        let neg = retrieve_changing(&pol, Some(&relm), None, opts(Direction::TowardNegative)).unwrap();
        for r in pos.records.iter().chain(&neg.records) {
            prop_assert!(r.mean_relevance >= 0.5);
            prop_assert_eq!(r.p_bonferroni, (r.p_raw * pos.family_size as f64).min(1.0));
        }
        // random real-valued slopes are distinct and nonzero
        if pos.tested > 0 && 2 * 5 <= pos.tested {
            for r in &pos.records {
                prop_assert!(neg.records.iter().all(|s| s.word != r.word));
            }
        }
    }

    #[test]
    fn pearson_affine_invariant(
        xy in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 4..40),
        a in 0.1f64..10.0, b in -5.0f64..5.0, c in 0.1f64..10.0, d in -5.0f64..5.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        let Ok(base) = pearson(&x, &y) else { return Ok(()); };
        let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let y2: Vec<f64> = y.iter().map(|v| c * v + d).collect();
        prop_assert!((pearson(&x2, &y2).unwrap().r - base.r).abs() < 1e-12);
    }

    #[test]
    fn procrustes_rotation_orthogonal(rows in prop::collection::vec((prop::collection::vec(-3.0f64..3.0, 5), prop::collection::vec(-3.0f64..3.0, 5)), 6..40)) {
        let src = EmbeddingSpace::from_rows(1800, 5, rows.iter().enumerate().map(|(i, (a, _))| (format!("w{i}"), a.clone()))).unwrap();
        let dst = EmbeddingSpace::from_rows(1810, 5, rows.iter().enumerate().map(|(i, (_, b))| (format!("w{i}"), b.clone()))).unwrap();
        let r = align_procrustes(&src, &dst).unwrap().rotation;
        let dev = (r.transpose() * &r - nalgebra::DMatrix::<f64>::identity(5, 5)).abs().max();
        prop_assert!(dev < 1e-8);
    }

    #[test]
    fn text_round_trip_is_exact(rows in prop::collection::vec(prop::collection::vec(-1e3f32..1e3, 4), 1..20)) {
        let space = EmbeddingSpace::from_rows(
            1850,
            4,
            rows.iter().enumerate().map(|(i, r)| (format!("w{i}"), r.iter().map(|v| f64::from(*v)).collect::<Vec<f64>>())),
        ).unwrap();
        let mut buf = Vec::new();
        write_text(&space, &mut buf).unwrap();
        let back = read_text(&mut buf.as_slice(), std::path::Path::new("mem"), 1850).unwrap();
        prop_assert_eq!(back.words(), space.words());
        for w in space.words() {
            prop_assert_eq!(back.row(w).unwrap(), space.row(w).unwrap());
        }
        let mut again = Vec::new();
        write_text(&back, &mut again).unwrap();
        prop_assert_eq!(again, buf);
    }
}
