//! Deterministic model server for exercising the external JSON protocol.
//!
//! Speaks newline-delimited JSON on stdin/stdout, or HTTP with `--http`.
//! Scores come from the lexical scorer; generation proposes one-hop joins
//! over the relations and entities listed in the prompt; sketches bracket
//! runs of capitalized question words, then single words, longest first.

use std::io::{self, BufRead, Write};

use clap::{Parser, ValueEnum};
use serde_json::{json, Value as Json};

use kbqa_core::scoring::{LexicalScorer, Scorer};
use kbqa_core::sexpr::{CLASS_SLOT, RELATION_SLOT};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Well-formed, deterministic replies.
    Ok,
    /// Replies that violate the protocol.
    Malformed,
    /// Well-formed replies whose generated forms do not parse.
    Garbage,
}

#[derive(Parser)]
#[command(name = "kbqa-mock-model")]
struct Args {
    #[arg(long, value_enum, default_value = "ok")]
    mode: Mode,
    /// Serve HTTP on this address (e.g. 127.0.0.1:0) instead of stdio. The
    /// bound URL is printed on the first stdout line.
    #[arg(long)]
    http: Option<String>,
}

fn score(question: &str, candidates: &[String]) -> Vec<f64> {
    LexicalScorer
        .score_batch(question, candidates)
        .expect("lexical scoring is infallible")
}

fn prompt_items(prompt: &str, tag: &str) -> Vec<String> {
    prompt
        .lines()
        .filter_map(|l| l.split(tag).nth(1))
        .filter_map(|rest| rest.split_whitespace().next())
        .map(|s| s.trim_end_matches(';').to_string())
        .collect()
}

fn generate(prompt: &str, beam: usize) -> Vec<Json> {
    let relations = prompt_items(prompt, "[N] ");
    let entities = prompt_items(prompt, "[ID] ");
    let mut out = Vec::new();
    for e in &entities {
        for r in &relations {
            out.push(format!("(JOIN (R {r}) {e})"));
            out.push(format!("(JOIN {r} {e})"));
        }
    }
    out.truncate(beam);
    let n = out.len();
    out.into_iter()
        .enumerate()
        .map(|(i, text)| json!({"text": text, "score": (n - i) as f64 / n as f64}))
        .collect()
}

fn sketch(input: &str, beam: usize) -> Vec<String> {
    let question = input.split(RELATION_SLOT).next().unwrap_or_default();
    let words: Vec<&str> = question
        .split(|c: char| !c.is_alphanumeric() && c != '.')
        .map(|w| w.trim_end_matches('.'))
        .filter(|w| !w.is_empty())
        .collect();
    let capital = |w: &str| w.chars().next().is_some_and(char::is_uppercase);
    let mut spans: Vec<String> = Vec::new();
    let mut i = 1;
    while i < words.len() {
        if capital(words[i]) {
            let start = i;
            while i < words.len() && capital(words[i]) {
                i += 1;
            }
            spans.push(words[start..i].join(" "));
        } else {
            i += 1;
        }
    }
    let mut rest: Vec<&str> = words.iter().copied().filter(|w| !capital(w)).collect();
    rest.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    rest.dedup();
    spans.extend(rest.into_iter().map(str::to_string));
    spans
        .into_iter()
        .take(beam)
        .map(|w| format!("(AND {CLASS_SLOT} (JOIN {RELATION_SLOT} [ {w} ]))"))
        .collect()
}

fn str_field<'a>(req: &'a Json, key: &str) -> &'a str {
    req.get(key).and_then(Json::as_str).unwrap_or_default()
}

fn beam(req: &Json) -> usize {
    req.get("beam").and_then(Json::as_u64).unwrap_or(1) as usize
}

fn reply(mode: Mode, line: &str) -> String {
    let req: Json = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return json!({"error": e.to_string()}).to_string(),
    };
    let op = str_field(&req, "op");
    if mode == Mode::Malformed {
        return match op {
            "score" => json!({"scores": [0.5]}).to_string(),
            "generate" => json!({"candidates": [{"txt": "(JOIN"}]}).to_string(),
            _ => "not json".to_string(),
        };
    }
    match op {
        "score" => {
            let candidates: Vec<String> = req
                .get("candidates")
                .and_then(|c| serde_json::from_value(c.clone()).ok())
                .unwrap_or_default();
            json!({"scores": score(str_field(&req, "question"), &candidates)})
        }
        "generate" if mode == Mode::Garbage => {
            let k = beam(&req);
            let candidates: Vec<Json> = (0..k)
                .map(|i| json!({"text": format!("(JOIN garbage {i}"), "score": 1.0 / (i + 1) as f64}))
                .collect();
            json!({ "candidates": candidates })
        }
        "generate" => json!({"candidates": generate(str_field(&req, "prompt"), beam(&req))}),
        "sketch" => json!({"candidates": sketch(str_field(&req, "input"), beam(&req))}),
        other => json!({"error": format!("unknown op `{other}`")}),
    }
    .to_string()
}

fn serve_stdio(mode: Mode) -> io::Result<()> {
    let stdin = io::stdin();
    let mut stdout = io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(stdout, "{}", reply(mode, &line))?;
        stdout.flush()?;
    }
    Ok(())
}

fn serve_http(mode: Mode, addr: &str) -> io::Result<()> {
    let server = tiny_http::Server::http(addr).map_err(io::Error::other)?;
    let bound = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| io::Error::other("not an ip listener"))?;
    {
        let mut stdout = io::stdout().lock();
        writeln!(stdout, "http://{bound}")?;
        stdout.flush()?;
    }
    for mut request in server.incoming_requests() {
        let mut body = String::new();
        request.as_reader().read_to_string(&mut body)?;
        let header = tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
            .expect("static header");
        let response = tiny_http::Response::from_string(reply(mode, &body)).with_header(header);
        if let Err(e) = request.respond(response) {
            log::warn!("failed to respond: {e}");
        }
    }
    Ok(())
}

fn main() -> io::Result<()> {
    env_logger::init();
    let args = Args::parse();
    match &args.http {
        Some(addr) => serve_http(args.mode, addr),
        None => serve_stdio(args.mode),
    }
}
