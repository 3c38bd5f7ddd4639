mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::{fixture, load_fixture};
use kbqa_core::eval::{
    aggregate, exact_match, f1, hit, load_dataset, parse_dataset, results_jsonl, run_eval, EvalOptions, Level,
    QuestionResult,
};
use kbqa_core::kb::{Literal, Value};
use kbqa_core::pipeline::{Pipeline, PipelineConfig};
use kbqa_core::scoring::LexicalScorer;
use kbqa_core::training::{emit_training_pairs, write_jsonl, PairKind, TrainingOptions, TrainingPair};

fn set(xs: &[&str]) -> BTreeSet<Value> {
    xs.iter().map(|x| Value::Entity((*x).into())).collect()
}

#[test]
fn f1_and_hit_conventions() {
    assert_eq!(f1(&set(&["a", "b"]), &set(&["b", "c"])), 0.5);
    assert_eq!(f1(&set(&[]), &set(&[])), 1.0);
    assert_eq!(f1(&set(&[]), &set(&["a"])), 0.0);
    assert_eq!(f1(&set(&["a"]), &set(&[])), 0.0);
    assert_eq!(f1(&set(&["a", "b", "c"]), &set(&["a"])), 0.5);
    assert!(hit(&set(&["a", "z"]), &set(&["a"])));
    assert!(!hit(&set(&[]), &set(&[])));
    assert!(!hit(&set(&["z"]), &set(&["a"])));
    let one = BTreeSet::from([Value::Literal(Literal::integer(1))]);
    let one_f = BTreeSet::from([Value::Literal(Literal::float(1.0))]);
    assert_eq!(f1(&one, &one), 1.0);
    assert_eq!(f1(&one, &set(&["1"])), 0.0);
    assert_eq!(f1(&one_f, &one_f), 1.0);
}

#[test]
fn exact_match_by_structure_or_execution() {
    let kb = load_fixture("toy");
    let gold = "(AND book.written_work (JOIN (R book.author.works_written) m.jkr))";
    let swapped = "(AND (JOIN (R book.author.works_written) m.jkr) book.written_work)";
    let em = exact_match(swapped, gold, &kb).unwrap();
    assert!(em.ast && em.execution && em.matched());

    let untyped = "(JOIN (R book.author.works_written) m.jkr)";
    let em = exact_match(untyped, gold, &kb).unwrap();
    assert!(!em.ast && em.execution && em.matched());

    let em = exact_match("(JOIN oops", gold, &kb).unwrap();
    assert!(!em.ast && !em.execution);
    assert!(exact_match(gold, "(JOIN oops", &kb).is_err());
    let em = exact_match("(COUNT book.written_work)", gold, &kb).unwrap();
    assert!(!em.matched());
}

#[test]
fn dataset_rows_parse() {
    let rows = load_dataset(fixture("toy").join("dataset.jsonl")).unwrap();
    assert_eq!(rows.len(), 25);
    let levels: BTreeSet<Level> = rows.iter().map(|r| r.level).collect();
    assert_eq!(levels.len(), 4);
    let bare = parse_dataset(r#"{"qid":"x","question":"q","answers":[]}"#).unwrap();
    assert_eq!((bare[0].level, bare[0].s_expression.clone()), (Level::Unknown, None));
    assert!(parse_dataset("{not json").is_err());
}

fn toy_eval(workers: usize) -> (kbqa_core::eval::EvalReport, Vec<QuestionResult>) {
    let kb = load_fixture("toy");
    let rows = load_dataset(fixture("toy").join("dataset.jsonl")).unwrap();
    let pipeline = Pipeline::builtin(&kb, PipelineConfig { workers, ..PipelineConfig::default() });
    run_eval(&rows, &pipeline, EvalOptions::default()).unwrap()
}

#[test]
fn toy_benchmark_thresholds() {
    let (report, _) = toy_eval(1);
    assert!(report.overall.f1 >= 0.90, "{:?}", report.overall);
    assert!(report.overall.em.unwrap() >= 0.80);
    assert!(report.levels[&Level::Compositional].f1 >= 0.75);
    assert!(report.levels[&Level::ZeroShot].f1 >= 0.75);
}

#[test]
fn eval_output_is_identical_across_worker_counts() {
    let (r1, a) = toy_eval(1);
    let (_, b) = toy_eval(4);
    let (_, c) = toy_eval(1);
    assert_eq!(results_jsonl(&a), results_jsonl(&b));
    assert_eq!(results_jsonl(&a), results_jsonl(&c));
    assert!(a.iter().all(|r| r.timing_ms.is_none()));
    let weighted: f64 = r1.levels.values().map(|m| m.count as f64 * m.f1).sum::<f64>() / r1.overall.count as f64;
    assert!((weighted - r1.overall.f1).abs() <= 1e-12);
}

#[test]
fn unparseable_gold_is_a_dataset_error() {
    let kb = load_fixture("toy");
    let rows = parse_dataset(r#"{"qid":"x","question":"q","s_expression":"(JOIN","answers":[]}"#).unwrap();
    assert!(run_eval(&rows, &Pipeline::builtin(&kb, PipelineConfig::default()), EvalOptions::default()).is_err());
}

#[test]
fn traces_are_reproducible() {
    let kb = load_fixture("toy");
    let pipeline = Pipeline::builtin(&kb, PipelineConfig::default());
    let q = "Who is the author of the Harry Potter series?";
    let a = pipeline.answer(q).unwrap();
    let b = pipeline.answer_with_workers(q, 4).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let json = serde_json::to_value(&a).unwrap();
    for key in ["relations", "sketches", "candidates", "selected", "contexts", "prompt", "generation", "final"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(a.final_answer.unwrap().answers.values(), set(&["m.jkr"]));
}

#[test]
fn no_fallback_and_no_generator_gives_no_answer() {
    let kb = load_fixture("toy");
    let cfg = PipelineConfig {
        generator: "none".into(),
        fallback_enabled: false,
        ..PipelineConfig::default()
    };
    let pipeline = Pipeline::new(&kb, cfg.clone(), kbqa_core::pipeline::Models::from_config(&cfg, Default::default()).unwrap());
    let t = pipeline.answer("Who is the author of the Harry Potter series?").unwrap();
    assert!(t.final_answer.is_none() && !t.used_fallback);
}

fn emit(kind: PairKind, seed: u64) -> Vec<TrainingPair> {
    let kb = load_fixture("toy");
    let rows = load_dataset(fixture("toy").join("dataset.jsonl")).unwrap();
    let options = TrainingOptions {
        negatives: 5,
        seed,
        scorer: &LexicalScorer,
        k_relations: 10,
    };
    emit_training_pairs(&rows, &kb, kind, options).unwrap().pairs
}

#[test]
fn training_pairs_are_seeded() {
    for kind in [PairKind::RelationScorer, PairKind::Generator, PairKind::FallbackRanker] {
        let (a, b) = (emit(kind, 7), emit(kind, 7));
        assert_eq!(a, b);
        assert!(!a.is_empty());
        let mut buf = Vec::new();
        write_jsonl(&a, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), a.len());
    }
    assert_ne!(emit(PairKind::RelationScorer, 7), emit(PairKind::RelationScorer, 8));
    let pairs = emit(PairKind::RelationScorer, 7);
    let positives = pairs.iter().filter(|p| matches!(p, TrainingPair::Relation { label: 1, .. })).count();
    assert!(positives > 0 && positives < pairs.len());
    for p in emit(PairKind::FallbackRanker, 7) {
        if let TrainingPair::Ranking { negatives, positive, .. } = p {
            assert!(negatives.len() <= 5 && !negatives.contains(&positive));
        }
    }
}

fn result(level: Level, f1: f64, em: Option<bool>, fallback: bool) -> QuestionResult {
    QuestionResult {
        qid: String::new(),
        level,
        pred_sexpr: None,
        pred_answers: Vec::new(),
        em,
        em_ast: em,
        em_execution: em,
        f1,
        hit: f1 > 0.0,
        used_fallback: fallback,
        tie_affected: false,
        error: None,
        model_failure: false,
        timing_ms: None,
    }
}

proptest! {
    #[test]
    fn overall_is_the_count_weighted_mean_of_levels(
        rows in proptest::collection::vec((0usize..4, 0.0f64..=1.0, proptest::option::of(any::<bool>()), any::<bool>()), 1..60)
    ) {
        let results: Vec<QuestionResult> = rows.iter().map(|(l, f, em, fb)| result(Level::ALL[*l], *f, *em, *fb)).collect();
        let report = aggregate(&results, &PipelineConfig::default());
        let n = report.overall.count as f64;
        let w = |g: &dyn Fn(&kbqa_core::eval::LevelMetrics) -> f64| -> f64 {
            report.levels.values().map(|m| m.count as f64 * g(m)).sum::<f64>() / n
        };
        prop_assert!((w(&|m| m.f1) - report.overall.f1).abs() <= 1e-12);
        prop_assert!((w(&|m| m.hit) - report.overall.hit).abs() <= 1e-12);
        prop_assert!((w(&|m| m.fallback_rate) - report.overall.fallback_rate).abs() <= 1e-12);
        prop_assert_eq!(report.levels.values().map(|m| m.count).sum::<usize>(), results.len());
        if let Some(em) = report.overall.em {
            let weighted: f64 = report.levels.values().filter_map(|m| m.em.map(|e| e * m.em_count as f64)).sum();
            prop_assert!((weighted / report.overall.em_count as f64 - em).abs() <= 1e-12);
        }
    }
}
