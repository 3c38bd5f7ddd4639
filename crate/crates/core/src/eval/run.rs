//! Running the pipeline over a question set and aggregating metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::kb::Value;
use crate::par;
use crate::pipeline::{Pipeline, PipelineConfig};
use crate::sexpr::{parse, AnswerItem, AnswerSet, Expr};

use super::dataset::{DatasetError, DatasetRow, Level};
use super::metrics::{exact_match, f1, hit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub qid: String,
    pub level: Level,
    pub pred_sexpr: Option<String>,
    pub pred_answers: Vec<AnswerItem>,
    /// `None` when the row has no gold form.
    pub em: Option<bool>,
    pub em_ast: Option<bool>,
    pub em_execution: Option<bool>,
    pub f1: f64,
    pub hit: bool,
    pub used_fallback: bool,
    /// A superlative returned several tied answers.
    pub tie_affected: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub model_failure: bool,
    pub timing_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub count: usize,
    /// Questions with a gold form.
    pub em_count: usize,
    pub em: Option<f64>,
    pub f1: f64,
    pub hit: f64,
    pub fallback_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: PipelineConfig,
    pub overall: LevelMetrics,
    pub levels: BTreeMap<Level, LevelMetrics>,
    pub tie_affected: Vec<String>,
    pub failures: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub record_timing: bool,
}

/// Rejects rows whose gold form does not parse against the KB.
pub fn check_gold(rows: &[DatasetRow], pipeline: &Pipeline<'_>) -> Result<(), DatasetError> {
    for (i, row) in rows.iter().enumerate() {
        if let Some(gold) = &row.s_expression {
            parse(gold, pipeline.kb()).map_err(|e| DatasetError::Line {
                line: i + 1,
                message: format!("gold form of `{}` does not parse: {e}", row.qid),
            })?;
        }
    }
    Ok(())
}

fn has_superlative(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |n| found |= matches!(n, Expr::ArgMax(..) | Expr::ArgMin(..)));
    found
}

pub fn evaluate_row(row: &DatasetRow, pipeline: &Pipeline<'_>, options: EvalOptions) -> QuestionResult {
    let started = Instant::now();
    let kb = pipeline.kb();
    let gold: BTreeSet<Value> = row.gold_values().unwrap_or_default();
    let mut result = QuestionResult {
        qid: row.qid.clone(),
        level: row.level,
        pred_sexpr: None,
        pred_answers: Vec::new(),
        em: row.s_expression.as_ref().map(|_| false),
        em_ast: row.s_expression.as_ref().map(|_| false),
        em_execution: row.s_expression.as_ref().map(|_| false),
        f1: 0.0,
        hit: false,
        used_fallback: false,
        tie_affected: false,
        error: None,
        model_failure: false,
        timing_ms: None,
    };
    match pipeline.answer_with_workers(&row.question, 1) {
        Ok(trace) => {
            result.used_fallback = trace.used_fallback;
            let pred = trace.final_answer.as_ref();
            let answers = pred.map(|f| f.answers.clone()).unwrap_or_else(AnswerSet::empty);
            let values = answers.values();
            result.pred_answers = answers.items();
            result.f1 = f1(&values, &gold);
            result.hit = hit(&values, &gold);
            if let Some(p) = pred {
                result.pred_sexpr = Some(p.sexpr.clone());
                let superlative = parse(&p.sexpr, kb).is_ok_and(|lf| has_superlative(lf.root()));
                result.tie_affected = superlative && answers.len() > 1;
            }
            if let Some(g) = &row.s_expression {
                let em = pred
                    .map(|p| exact_match(&p.sexpr, g, kb))
                    .transpose()
                    .ok()
                    .flatten();
                if let Some(em) = em {
                    result.em = Some(em.matched());
                    result.em_ast = Some(em.ast);
                    result.em_execution = Some(em.execution);
                }
                if parse(g, kb).is_ok_and(|lf| has_superlative(lf.root())) && gold.len() > 1 {
                    result.tie_affected = true;
                }
            }
            if pred.is_none() {
                result.error = Some("no executable logical form".into());
            }
        }
        Err(e) => {
            result.error = Some(e.to_string());
            result.model_failure = true;
        }
    }
    if options.record_timing {
        result.timing_ms = Some(started.elapsed().as_millis() as u64);
    }
    result
}

fn metrics<'a>(results: impl Iterator<Item = &'a QuestionResult>) -> LevelMetrics {
    let (mut count, mut em_count, mut em, mut f, mut h, mut fb) = (0usize, 0usize, 0usize, 0.0, 0usize, 0usize);
    for r in results {
        count += 1;
        if let Some(m) = r.em {
            em_count += 1;
            em += m as usize;
        }
        f += r.f1;
        h += r.hit as usize;
        fb += r.used_fallback as usize;
    }
    let rate = |x: f64| if count == 0 { 0.0 } else { x / count as f64 };
    LevelMetrics {
        count,
        em_count,
        em: (em_count > 0).then(|| em as f64 / em_count as f64),
        f1: rate(f),
        hit: rate(h as f64),
        fallback_rate: rate(fb as f64),
    }
}

pub fn aggregate(results: &[QuestionResult], config: &PipelineConfig) -> EvalReport {
    let levels = Level::ALL
        .iter()
        .filter(|l| results.iter().any(|r| r.level == **l))
        .map(|l| (*l, metrics(results.iter().filter(|r| r.level == *l))))
        .collect();
    EvalReport {
        config: config.clone(),
        overall: metrics(results.iter()),
        levels,
        tie_affected: results.iter().filter(|r| r.tie_affected).map(|r| r.qid.clone()).collect(),
        failures: results.iter().filter(|r| r.error.is_some()).count(),
    }
}

/// Answers every row on `config.workers` threads. Results keep dataset
/// order regardless of the worker count.
pub fn run_eval(
    rows: &[DatasetRow],
    pipeline: &Pipeline<'_>,
    options: EvalOptions,
) -> Result<(EvalReport, Vec<QuestionResult>), DatasetError> {
    check_gold(rows, pipeline)?;
    let results = par::map(rows, pipeline.config().workers, |row| evaluate_row(row, pipeline, options));
    Ok((aggregate(&results, pipeline.config()), results))
}

pub fn results_jsonl(results: &[QuestionResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&serde_json::to_string(r).expect("results serialize"));
        out.push('\n');
    }
    out
}

/// Writes `report.json` and `results.jsonl` into `dir`.
pub fn write_outputs(dir: &Path, report: &EvalReport, results: &[QuestionResult]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut f = fs::File::create(dir.join("report.json"))?;
    serde_json::to_writer_pretty(&mut f, report)?;
    writeln!(f)?;
    fs::write(dir.join("results.jsonl"), results_jsonl(results))
}
