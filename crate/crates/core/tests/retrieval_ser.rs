mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{load_fixture, pruning_scenario, random_scenario, read_fixture, ScenarioSpec};
use kbqa_core::kb::{word_tokens, EntityId, RelationName};
use kbqa_core::relations::{relation_recall, retrieve_relations, RankedRelations, ScoredRelation};
use kbqa_core::scoring::{LexicalScorer, Scorer};
use kbqa_core::ser::{
    alias_spans, build_sketch_input, detect_mentions, rank_entities, retrieve_candidates, select_entities,
    AlignedSketcher, CandidateSource,
};

fn question(name: &str) -> String {
    read_fixture(name, "question.txt").trim().to_string()
}

fn names(xs: &[&str]) -> Vec<RelationName> {
    xs.iter().map(|x| (*x).into()).collect()
}

#[test]
fn rating_relations_outrank_book_relations() {
    let kb = load_fixture("ratings");
    let ranked = retrieve_relations(&question("ratings"), &kb, &LexicalScorer, 8, false).unwrap();
    let order: Vec<&str> = ranked.items.iter().map(|s| s.relation.as_str()).collect();
    let last_cvg = order.iter().rposition(|r| r.starts_with("cvg.")).unwrap();
    let first_book = order.iter().position(|r| r.starts_with("book.")).unwrap();
    assert!(last_cvg < first_book, "{order:?}");
    assert!(ranked.items.windows(2).all(|w| w[0].score >= w[1].score));
}

#[test]
fn recall_counts_distinct_gold_relations() {
    let ranked = RankedRelations {
        items: ["a.b", "c.d"]
            .iter()
            .map(|r| ScoredRelation {
                relation: (*r).into(),
                score: 0.0,
            })
            .collect(),
    };
    assert_eq!(relation_recall(&ranked, &names(&["a.b", "x.y", "a.b"])).unwrap(), 0.5);
    assert!(relation_recall(&ranked, &[]).is_err());
}

#[test]
fn prefilter_keeps_word_sharing_relations() {
    let kb = load_fixture("toy");
    let ranked = retrieve_relations("who is the author of the series", &kb, &LexicalScorer, 50, true).unwrap();
    let q: BTreeSet<String> = word_tokens("who is the author of the series").into_iter().collect();
    assert!(!ranked.is_empty());
    for s in &ranked.items {
        assert!(word_tokens(s.relation.as_str()).iter().any(|t| q.contains(t)), "{}", s.relation);
    }
    let none = retrieve_relations("zzz qqq", &kb, &LexicalScorer, 50, true).unwrap();
    assert_eq!(none.len(), kb.relations().len());
}

#[test]
fn sketch_input_layout() {
    assert_eq!(build_sketch_input("q?", &names(&["a.b", "c.d"])), "q? <relation> a.b;c.d");
}

#[test]
fn guidance_keeps_atomic_units_and_drops_length() {
    let kb = load_fixture("atomic_units");
    let q = question("atomic_units");
    let guided = detect_mentions(
        &q,
        &names(&["measurement_unit.measurement_system.length_units"]),
        &AlignedSketcher,
        &kb,
        3,
    )
    .unwrap();
    assert!(guided.mentions.iter().any(|m| m.eq_ignore_ascii_case("atomic units")), "{guided:?}");
    assert!(!guided.mentions.iter().any(|m| m.eq_ignore_ascii_case("length")), "{guided:?}");

    let unguided = detect_mentions(&q, &[], &AlignedSketcher, &kb, 3).unwrap();
    assert!(unguided.mentions.iter().any(|m| m.eq_ignore_ascii_case("length")), "{unguided:?}");
}

#[test]
fn alias_spans_prefer_longer_matches() {
    let kb = load_fixture("toy");
    let spans = alias_spans("Who wrote Harry Potter?", &kb);
    assert!(spans.iter().any(|s| s.alias == "harry potter"), "{spans:?}");
    assert!(spans.iter().all(|s| s.alias != "harry"));
}

#[test]
fn harry_potter_candidates_are_ranked_by_question_fit() {
    let kb = load_fixture("toy");
    let q = "Who is the author of the Harry Potter series?";
    let relations = names(&["book.literary_series.author"]);
    let mut c = retrieve_candidates(&["Harry Potter".into()], &kb, &relations, 1, 9);
    assert_eq!(c[0].candidates[0].entity.as_str(), "m.hp_series");
    assert_eq!(c[0].candidates[0].source, CandidateSource::Popularity);
    rank_entities(q, &mut c, &kb, &LexicalScorer).unwrap();
    let selected = select_entities(&c, 2);
    assert_eq!(selected.top1(), [EntityId::from("m.hp_series")]);
    let unknown = retrieve_candidates(&["Voldemort".into()], &kb, &relations, 1, 9);
    assert!(unknown[0].unmatched && unknown[0].candidates.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pruning_keeps_every_budgeted_connected_entity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = pruning_scenario(&mut rng, 9);
        let rel: Vec<RelationName> = s.relations.iter().map(|r| r.as_str().into()).collect();
        let c = retrieve_candidates(std::slice::from_ref(&s.mention), &s.kb, &rel, 1, 9);
        prop_assert!(c[0].candidates.iter().any(|x| x.entity.as_str() == s.gold));
        prop_assert!(c[0].candidates.len() <= 10);
        let ids: BTreeSet<&str> = c[0].candidates.iter().map(|x| x.entity.as_str()).collect();
        prop_assert_eq!(ids.len(), c[0].candidates.len());
    }

    #[test]
    fn recall_is_monotone_in_k(seed in any::<u64>(), words in "[a-z]{1,6}( [a-z]{1,6}){0,4}") {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scenario(&mut rng, &ScenarioSpec::default());
        let gold: Vec<RelationName> = s.relations.iter().take(2).map(|r| r.0.as_str().into()).collect();
        let full = retrieve_relations(&words, &s.kb, &LexicalScorer, usize::MAX, false).unwrap();
        let mut last = 0.0;
        for k in 1..=full.len() {
            let top = full.truncated(k);
            prop_assert_eq!(&top, &retrieve_relations(&words, &s.kb, &LexicalScorer, k, false).unwrap());
            let r = relation_recall(&top, &gold).unwrap();
            prop_assert!(r >= last);
            last = r;
        }
        prop_assert_eq!(last, 1.0);
    }

    #[test]
    fn selection_is_a_subset_of_the_candidates(seed in any::<u64>(), k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scenario(&mut rng, &ScenarioSpec::default());
        let mentions: Vec<String> = s.names.values().take(3).cloned().collect();
        let rel: Vec<RelationName> = s.relations.iter().map(|r| r.0.as_str().into()).collect();
        let mut c = retrieve_candidates(&mentions, &s.kb, &rel, 1, 9);
        rank_entities("which one", &mut c, &s.kb, &LexicalScorer).unwrap();
        let selected = select_entities(&c, k);
        for m in &selected.mentions {
            let pool = &c.iter().find(|x| x.mention == m.mention).unwrap().candidates;
            prop_assert!(m.entities.len() <= k);
            prop_assert!(m.entities.iter().all(|e| pool.iter().any(|p| &p.entity == e)));
        }
        let ranked_scores: Vec<f64> = c.iter().flat_map(|m| m.candidates.iter().map(|x| x.rank_score.unwrap())).collect();
        prop_assert!(ranked_scores.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn guided_mentions_are_never_pure_relation_words(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scenario(&mut rng, &ScenarioSpec::default());
        let names: Vec<&String> = s.names.values().take(4).collect();
        let q = format!("what about {} and {}", names[0], names[names.len() - 1]);
        let rel: Vec<RelationName> = s.relations.iter().map(|r| r.0.as_str().into()).collect();
        let rel_tokens: BTreeSet<String> = rel.iter().flat_map(|r| word_tokens(r.as_str())).collect();
        let d = detect_mentions(&q, &rel, &AlignedSketcher, &s.kb, 3).unwrap();
        for m in &d.mentions {
            prop_assert!(!word_tokens(m).iter().all(|t| rel_tokens.contains(t)), "{}", m);
        }
        prop_assert!(d.sketches.len() <= 3);
    }

    #[test]
    fn lexical_scores_are_bounded_and_symmetric(a in ".{0,30}", b in ".{0,30}") {
        let s = LexicalScorer.score(&a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&s));
        prop_assert!((s - LexicalScorer.score(&b, &a).unwrap()).abs() < 1e-12);
    }
}
