//! Shared fixtures and reference oracles for integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore};

use kbqa_core::kb::{load_kb_dir, KnowledgeBase, Literal, LoadMode, Value};
use kbqa_core::sexpr::{CmpOp, Expr};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn load_fixture(name: &str) -> KnowledgeBase {
    load_kb_dir(fixture(name), LoadMode::Strict).expect("fixture loads")
}

pub fn read_fixture(name: &str, file: &str) -> String {
    std::fs::read_to_string(fixture(name).join(file)).expect("fixture file")
}

const WORDS: &[&str] = &[
    "amber", "birch", "cobalt", "dune", "ember", "fjord", "garnet", "harbor", "indigo", "juniper", "kestrel",
    "lagoon", "meadow", "nimbus", "onyx", "prairie", "quartz", "raven", "sierra", "tundra", "umber", "violet",
    "willow", "xenon", "yarrow", "zephyr",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Range {
    Class(usize),
    Int,
    Float,
    Date,
    Text,
}

impl Range {
    pub fn class_name(self) -> String {
        match self {
            Range::Class(i) => format!("t.c{i}"),
            Range::Int => "type.int".into(),
            Range::Float => "type.float".into(),
            Range::Date => "type.datetime".into(),
            Range::Text => "type.text".into(),
        }
    }

    pub fn comparable(self) -> bool {
        matches!(self, Range::Int | Range::Float | Range::Date)
    }
}

/// A random KB together with the raw rows it was built from.
pub struct Scenario {
    pub kb: KnowledgeBase,
    pub entities: Vec<String>,
    pub names: BTreeMap<String, String>,
    /// Class name to members.
    pub classes: BTreeMap<String, BTreeSet<String>>,
    /// (relation, domain class index, range)
    pub relations: Vec<(String, usize, Range)>,
    pub facts: Vec<(String, String, Value)>,
}

pub struct ScenarioSpec {
    pub max_entities: usize,
    pub max_relations: usize,
    pub max_facts_per_relation: usize,
    pub classes: usize,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            max_entities: 50,
            max_relations: 8,
            max_facts_per_relation: 30,
            classes: 4,
        }
    }
}

pub fn random_literal(rng: &mut impl RngCore, range: Range) -> Literal {
    match range {
        Range::Int => Literal::integer(rng.random_range(-5..20)),
        Range::Float => Literal::float(rng.random_range(-10..40) as f64 / 2.0),
        Range::Date => {
            let text = match rng.random_range(0..3) {
                0 => format!("{}", rng.random_range(1990..2000)),
                1 => format!("{}-{:02}", rng.random_range(1990..2000), rng.random_range(1..13)),
                _ => format!(
                    "{}-{:02}-{:02}",
                    rng.random_range(1990..2000),
                    rng.random_range(1..13),
                    rng.random_range(1..29)
                ),
            };
            Literal::parse_typed(&format!("{text}^^date")).unwrap()
        }
        Range::Text => Literal::string(*WORDS.choose(rng).unwrap()),
        Range::Class(_) => unreachable!("class ranges hold entities"),
    }
}

/// Ontology-respecting random KB: subjects are drawn from the domain class
/// and entity objects from the range class.
pub fn random_scenario(rng: &mut impl RngCore, spec: &ScenarioSpec) -> Scenario {
    let n = rng.random_range(3..=spec.max_entities);
    let entities: Vec<String> = (0..n).map(|i| format!("m.e{i}")).collect();
    let mut names = BTreeMap::new();
    for (i, e) in entities.iter().enumerate() {
        let w = WORDS[i % WORDS.len()];
        let name = if i < WORDS.len() { w.to_string() } else { format!("{w} {}", i / WORDS.len()) };
        let name = if rng.random_bool(0.5) { name.to_uppercase() } else { name };
        names.insert(e.clone(), name);
    }
    let mut classes: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for c in 0..spec.classes {
        classes.insert(Range::Class(c).class_name(), BTreeSet::new());
    }
    for e in &entities {
        let first = rng.random_range(0..spec.classes);
        classes.get_mut(&Range::Class(first).class_name()).unwrap().insert(e.clone());
        if rng.random_bool(0.3) {
            let second = rng.random_range(0..spec.classes);
            classes.get_mut(&Range::Class(second).class_name()).unwrap().insert(e.clone());
        }
    }
    let k = rng.random_range(1..=spec.max_relations);
    let mut relations = Vec::new();
    for i in 0..k {
        let domain = rng.random_range(0..spec.classes);
        let range = match rng.random_range(0..10) {
            0..=4 => Range::Class(rng.random_range(0..spec.classes)),
            5 | 6 => Range::Int,
            7 => Range::Float,
            8 => Range::Date,
            _ => Range::Text,
        };
        relations.push((format!("t.r{i}"), domain, range));
    }
    let mut facts = Vec::new();
    let mut seen = BTreeSet::new();
    for (r, domain, range) in &relations {
        let subjects: Vec<&String> = classes[&Range::Class(*domain).class_name()].iter().collect();
        if subjects.is_empty() {
            continue;
        }
        for _ in 0..rng.random_range(0..=spec.max_facts_per_relation) {
            let s = (*subjects.choose(rng).unwrap()).clone();
            let o = match range {
                Range::Class(c) => {
                    let objects: Vec<&String> = classes[&Range::Class(*c).class_name()].iter().collect();
                    match objects.choose(rng) {
                        Some(o) => Value::Entity((*o).as_str().into()),
                        None => continue,
                    }
                }
                other => Value::Literal(random_literal(rng, *other)),
            };
            if seen.insert((s.clone(), r.clone(), o.clone())) {
                facts.push((s, r.clone(), o));
            }
        }
    }
    let mut b = KnowledgeBase::builder();
    for (r, d, rg) in &relations {
        b.triple(&Range::Class(*d).class_name(), r, &rg.class_name());
    }
    for (s, r, o) in &facts {
        b.fact(s, r, o.clone());
    }
    for (c, members) in &classes {
        for m in members {
            b.class(m, c);
        }
    }
    for (e, name) in &names {
        b.name(e, name);
        b.alias(&name.to_lowercase(), e, 0.5);
    }
    let kb = b.build(LoadMode::Strict).expect("random scenario is valid");
    Scenario {
        kb,
        entities,
        names,
        classes,
        relations,
        facts,
    }
}

/// Random well-typed expressions over a scenario, at most `depth` levels
/// of operators deep.
pub struct AstGen<'a> {
    pub s: &'a Scenario,
}

impl AstGen<'_> {
    fn relation(&self, rng: &mut impl RngCore) -> &(String, usize, Range) {
        self.s.relations.choose(rng).unwrap()
    }

    fn comparable_relation(&self, rng: &mut impl RngCore) -> Option<&(String, usize, Range)> {
        let c: Vec<_> = self.s.relations.iter().filter(|r| r.2.comparable()).collect();
        c.choose(rng).copied()
    }

    fn literal_leaf(&self, rng: &mut impl RngCore) -> Literal {
        let lits: Vec<&Literal> = self.s.facts.iter().filter_map(|f| f.2.as_literal()).collect();
        match lits.choose(rng) {
            Some(l) => (*l).clone(),
            None => Literal::integer(1),
        }
    }

    pub fn unary(&self, rng: &mut impl RngCore, depth: usize) -> Expr {
        if depth == 0 || rng.random_bool(0.25) {
            return match rng.random_range(0..10) {
                0..=5 => Expr::entity(self.s.entities.choose(rng).unwrap()),
                6..=8 => Expr::class(&Range::Class(rng.random_range(0..self.s.classes.len())).class_name()),
                _ => Expr::Literal(self.literal_leaf(rng)),
            };
        }
        match rng.random_range(0..10) {
            0 | 1 => Expr::and(self.unary(rng, depth - 1), self.unary(rng, depth - 1)),
            2..=6 => Expr::join(self.binary(rng, depth - 1), self.unary(rng, depth - 1)),
            7 => {
                let b = match self.comparable_relation(rng) {
                    Some(r) if rng.random_bool(0.85) => Expr::relation(&r.0),
                    _ => self.binary(rng, depth - 1),
                };
                let u = self.unary(rng, depth - 1);
                if rng.random_bool(0.5) {
                    Expr::argmax(u, b)
                } else {
                    Expr::argmin(u, b)
                }
            }
            _ => {
                let op = *CmpOp::ALL.choose(rng).unwrap();
                match self.comparable_relation(rng) {
                    Some((r, _, range)) => {
                        let range = if *range == Range::Float && rng.random_bool(0.5) { Range::Int } else { *range };
                        Expr::compare(op, Expr::relation(r), random_literal(rng, range))
                    }
                    None => Expr::compare(op, self.binary(rng, depth - 1), Literal::integer(3)),
                }
            }
        }
    }

    pub fn binary(&self, rng: &mut impl RngCore, depth: usize) -> Expr {
        let leaf = Expr::relation(&self.relation(rng).0);
        if depth == 0 {
            return leaf;
        }
        match rng.random_range(0..10) {
            0..=5 => leaf,
            6..=8 => Expr::reverse(self.binary(rng, depth - 1)),
            _ => Expr::join(self.binary(rng, depth - 1), self.binary(rng, depth - 1)),
        }
    }

    /// A top-level form: occasionally a COUNT.
    pub fn form(&self, rng: &mut impl RngCore, depth: usize) -> Expr {
        if depth > 0 && rng.random_bool(0.15) {
            Expr::count(self.unary(rng, depth - 1))
        } else {
            self.unary(rng, depth)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Naive {
    Set(BTreeSet<Value>),
    Pairs(BTreeSet<(Value, Value)>),
    Count(u64),
}

/// Failure of the reference evaluator: an ordering over values that have
/// none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveTypeError;

fn numeric(l: &Literal) -> Option<f64> {
    match l.to_typed_string().rsplit_once("^^") {
        Some((v, "int" | "float")) => v.parse().ok(),
        _ => None,
    }
}

/// Three-way comparison following the value conventions: numbers compare
/// numerically across int and float, dates compare with dates, anything
/// else is a type error.
pub fn naive_compare(a: &Value, b: &Literal) -> Result<std::cmp::Ordering, NaiveTypeError> {
    let Value::Literal(a) = a else { return Err(NaiveTypeError) };
    match (numeric(a), numeric(b)) {
        (Some(x), Some(y)) => return Ok(x.total_cmp(&y)),
        (None, None) => {}
        _ => return Err(NaiveTypeError),
    }
    let date = |l: &Literal| -> Option<(i64, i64, i64)> {
        let t = l.to_typed_string();
        let v = t.strip_suffix("^^date")?;
        let mut parts = v.split('-').map(|p| p.parse::<i64>().ok());
        let y = parts.next()??;
        let m = parts.next().map(|p| p.unwrap_or(0)).unwrap_or(0);
        let d = parts.next().map(|p| p.unwrap_or(0)).unwrap_or(0);
        Some((y, m, d))
    };
    match (date(a), date(b)) {
        (Some(x), Some(y)) => Ok(x.cmp(&y)),
        _ => Err(NaiveTypeError),
    }
}

/// Reference evaluator: materializes every sub-expression by scanning the
/// raw fact list.
pub fn naive_eval(e: &Expr, s: &Scenario) -> Result<Naive, NaiveTypeError> {
    use std::cmp::Ordering;
    let set = |e: &Expr| -> Result<BTreeSet<Value>, NaiveTypeError> {
        match naive_eval(e, s)? {
            Naive::Set(x) => Ok(x),
            _ => Err(NaiveTypeError),
        }
    };
    let pairs = |e: &Expr| -> Result<BTreeSet<(Value, Value)>, NaiveTypeError> {
        match naive_eval(e, s)? {
            Naive::Pairs(x) => Ok(x),
            _ => Err(NaiveTypeError),
        }
    };
    Ok(match e {
        Expr::Entity(id) => Naive::Set(BTreeSet::from([Value::Entity(id.clone())])),
        Expr::Literal(l) => Naive::Set(BTreeSet::from([Value::Literal(l.clone())])),
        Expr::Class(c) => Naive::Set(
            s.classes
                .get(c.as_str())
                .map(|m| m.iter().map(|e| Value::Entity(e.as_str().into())).collect())
                .unwrap_or_default(),
        ),
        Expr::Relation(r) => Naive::Pairs(
            s.facts
                .iter()
                .filter(|f| f.1 == r.as_str())
                .map(|f| (Value::Entity(f.0.as_str().into()), f.2.clone()))
                .collect(),
        ),
        Expr::Reverse(b) => Naive::Pairs(pairs(b)?.into_iter().map(|(x, y)| (y, x)).collect()),
        Expr::And(a, b) => {
            let (a, b) = (set(a)?, set(b)?);
            Naive::Set(a.intersection(&b).cloned().collect())
        }
        Expr::Count(u) => Naive::Count(set(u)?.len() as u64),
        Expr::Join(b, rhs) => {
            let left = pairs(b)?;
            match naive_eval(rhs, s)? {
                Naive::Set(u) => Naive::Set(left.into_iter().filter(|(_, y)| u.contains(y)).map(|(x, _)| x).collect()),
                Naive::Pairs(right) => {
                    let mut out = BTreeSet::new();
                    for (x, y) in &left {
                        for (y2, z) in &right {
                            if y == y2 {
                                out.insert((x.clone(), z.clone()));
                            }
                        }
                    }
                    Naive::Pairs(out)
                }
                Naive::Count(_) => return Err(NaiveTypeError),
            }
        }
        Expr::ArgMax(u, b) | Expr::ArgMin(u, b) => {
            let want = if matches!(e, Expr::ArgMax(..)) { Ordering::Greater } else { Ordering::Less };
            let members = set(u)?;
            let candidates: Vec<(Value, Value)> = pairs(b)?.into_iter().filter(|(x, _)| members.contains(x)).collect();
            let mut winners = BTreeSet::new();
            for (x, y) in &candidates {
                let Value::Literal(ly) = y else { return Err(NaiveTypeError) };
                let mut beaten = false;
                for (_, other) in &candidates {
                    if naive_compare(other, ly)? == want {
                        beaten = true;
                    }
                }
                if !beaten {
                    winners.insert(x.clone());
                }
            }
            Naive::Set(winners)
        }
        Expr::Compare(op, b, n) => {
            let mut out = BTreeSet::new();
            for (x, y) in pairs(b)? {
                let ord = naive_compare(&y, n)?;
                let keep = match op {
                    CmpOp::Lt => ord == Ordering::Less,
                    CmpOp::Le => ord != Ordering::Greater,
                    CmpOp::Gt => ord == Ordering::Greater,
                    CmpOp::Ge => ord != Ordering::Less,
                };
                if keep {
                    out.insert(x);
                }
            }
            Naive::Set(out)
        }
    })
}

/// Every distinct 1- and 2-hop join chain rooted at `entity` with a
/// non-empty answer, excluding a second hop that reverses the first, by
/// exhaustive scan of the fact list.
pub fn path_oracle(entity: &str, facts: &[(String, String, Value)]) -> BTreeSet<String> {
    let start = Value::Entity(entity.into());
    let step = |from: &BTreeSet<Value>, r: &str, out: bool| -> BTreeSet<Value> {
        facts
            .iter()
            .filter(|f| f.1 == r)
            .filter_map(|f| {
                let s = Value::Entity(f.0.as_str().into());
                if out && from.contains(&s) {
                    Some(f.2.clone())
                } else if !out && from.contains(&f.2) {
                    Some(s)
                } else {
                    None
                }
            })
            .collect()
    };
    let relations: BTreeSet<&str> = facts.iter().map(|f| f.1.as_str()).collect();
    let render = |r: &str, out: bool, inner: &str| {
        if out {
            format!("(JOIN (R {r}) {inner})")
        } else {
            format!("(JOIN {r} {inner})")
        }
    };
    let mut forms = BTreeSet::new();
    let from = BTreeSet::from([start]);
    for r1 in &relations {
        for d1 in [true, false] {
            let mid = step(&from, r1, d1);
            if mid.is_empty() {
                continue;
            }
            let first = render(r1, d1, entity);
            forms.insert(first.clone());
            for r2 in &relations {
                for d2 in [true, false] {
                    if r2 == r1 && d2 != d1 {
                        continue;
                    }
                    if !step(&mid, r2, d2).is_empty() {
                        forms.insert(render(r2, d2, &first));
                    }
                }
            }
        }
    }
    forms
}

/// Many entities sharing one alias, some wired to the question's relations.
pub struct PruningScenario {
    pub kb: KnowledgeBase,
    pub mention: String,
    pub relations: Vec<String>,
    pub gold: String,
}

/// Draws scenarios until one has an entity that is alias matched, connected
/// to a question relation, and either the most popular match or among the
/// first `k_e2` connected matches after it.
pub fn pruning_scenario(rng: &mut impl RngCore, k_e2: usize) -> PruningScenario {
    loop {
        let n = rng.random_range(2..=30);
        let relations: Vec<String> = (0..6).map(|i| format!("p.r{i}")).collect();
        let in_question: Vec<String> = relations.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
        let mut b = KnowledgeBase::builder();
        for r in &relations {
            b.triple("p.thing", r, "p.thing");
        }
        let mut members: Vec<(String, u32, bool)> = Vec::new();
        for i in 0..n {
            let id = format!("m.e{i:02}");
            let pop = rng.random_range(0..20u32);
            b.alias("shared name", &id, f64::from(pop) / 20.0);
            b.class(&id, "p.thing");
            let mut connected = false;
            for r in &relations {
                if rng.random_bool(0.15) {
                    b.fact(&id, r, Value::Entity("m.hub".into()));
                    connected |= in_question.contains(r);
                }
            }
            members.push((id, pop, connected));
        }
        b.class("m.hub", "p.thing");
        members.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut eligible: Vec<&str> = Vec::new();
        if members[0].2 {
            eligible.push(&members[0].0);
        }
        eligible.extend(members[1..].iter().filter(|m| m.2).take(k_e2).map(|m| m.0.as_str()));
        let Some(gold) = eligible.choose(rng).map(|g| g.to_string()) else { continue };
        return PruningScenario {
            kb: b.build(LoadMode::Strict).unwrap(),
            mention: "Shared Name".into(),
            relations: in_question,
            gold,
        };
    }
}
