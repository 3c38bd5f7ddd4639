//! Client for models served over the JSON protocol, either by an HTTP
//! endpoint or by a child process speaking newline-delimited JSON on its
//! standard streams.
//!
//! ```text
//! {"op":"score","question":q,"candidates":[..]}  -> {"scores":[..]}
//! {"op":"generate","prompt":p,"beam":k}          -> {"candidates":[{"text":..,"score":..}]}
//! {"op":"sketch","input":s,"beam":k}             -> {"candidates":[..]}
//! ```

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value as Json};

use super::{
    GenerationRequest, Generator, ModelError, ScoredText, Scorer, SketchGenerator, SketchRequest,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Http(String),
    /// Program and arguments, from `cmd:<program> [args...]`.
    Command(Vec<String>),
}

impl Endpoint {
    pub fn parse(spec: &str) -> Result<Endpoint, ModelError> {
        if let Some(rest) = spec.strip_prefix("cmd:") {
            let argv: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
            if argv.is_empty() {
                return Err(ModelError::BadEndpoint(spec.to_string()));
            }
            Ok(Endpoint::Command(argv))
        } else if spec.starts_with("http://") || spec.starts_with("https://") {
            Ok(Endpoint::Http(spec.to_string()))
        } else {
            Err(ModelError::BadEndpoint(spec.to_string()))
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Http(url) => f.write_str(url),
            Endpoint::Command(argv) => write!(f, "cmd:{}", argv.join(" ")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExternalConfig {
    pub timeout: Duration,
    pub retries: u32,
    /// Maximum concurrent in-flight requests (HTTP connections or child
    /// processes).
    pub pool_size: usize,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        ExternalConfig {
            timeout: Duration::from_secs(30),
            retries: 2,
            pool_size: 4,
        }
    }
}

pub struct ExternalModel {
    endpoint: Endpoint,
    label: String,
    config: ExternalConfig,
    transport: Transport,
}

enum Transport {
    Http(ureq::Agent),
    Process(ProcessPool),
}

impl ExternalModel {
    pub fn new(endpoint: Endpoint, config: ExternalConfig) -> ExternalModel {
        let transport = match &endpoint {
            Endpoint::Http(_) => {
                let agent: ureq::Agent = ureq::Agent::config_builder()
                    .timeout_global(Some(config.timeout))
                    .max_idle_connections_per_host(config.pool_size.max(1))
                    .build()
                    .into();
                Transport::Http(agent)
            }
            Endpoint::Command(_) => Transport::Process(ProcessPool::new(config.pool_size.max(1))),
        };
        ExternalModel {
            label: endpoint.to_string(),
            endpoint,
            config,
            transport,
        }
    }

    pub fn from_spec(spec: &str, config: ExternalConfig) -> Result<ExternalModel, ModelError> {
        Ok(ExternalModel::new(Endpoint::parse(spec)?, config))
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    /// Sends one request and returns the raw response line or body,
    /// retrying transport failures.
    fn roundtrip(&self, request: &Json) -> Result<String, ModelError> {
        let body = request.to_string();
        let mut attempt = 0;
        loop {
            let result = match &self.transport {
                Transport::Http(agent) => self.http(agent, &body),
                Transport::Process(pool) => pool.call(self, &body),
            };
            match result {
                Err(e) if e.is_transient() && attempt < self.config.retries => {
                    attempt += 1;
                    log::warn!("{e}; retrying ({attempt}/{})", self.config.retries);
                }
                other => return other,
            }
        }
    }

    fn http(&self, agent: &ureq::Agent, body: &str) -> Result<String, ModelError> {
        let Endpoint::Http(url) = &self.endpoint else { unreachable!() };
        let response = agent
            .post(url)
            .header("content-type", "application/json")
            .send(body);
        match response {
            Ok(mut r) => r.body_mut().read_to_string().map_err(|e| self.unreachable(e)),
            Err(ureq::Error::Timeout(_)) => Err(self.timeout()),
            Err(ureq::Error::StatusCode(code)) if code < 500 => Err(self.protocol(format!("HTTP status {code}"), "")),
            Err(e) => Err(self.unreachable(e)),
        }
    }

    fn call<T: DeserializeOwned>(&self, request: Json) -> Result<T, ModelError> {
        let raw = self.roundtrip(&request)?;
        serde_json::from_str(&raw).map_err(|e| self.protocol(e.to_string(), &raw))
    }

    fn unreachable(&self, cause: impl fmt::Display) -> ModelError {
        ModelError::Unreachable {
            endpoint: self.label.clone(),
            cause: cause.to_string(),
        }
    }

    fn timeout(&self) -> ModelError {
        ModelError::Timeout {
            endpoint: self.label.clone(),
            ms: self.config.timeout.as_millis(),
        }
    }

    fn protocol(&self, message: impl Into<String>, payload: &str) -> ModelError {
        ModelError::Protocol {
            endpoint: self.label.clone(),
            message: message.into(),
            payload: payload.to_string(),
        }
    }

    pub fn score_raw(&self, question: &str, candidates: &[String]) -> Result<Vec<f64>, ModelError> {
        #[derive(Deserialize)]
        struct Reply {
            scores: Vec<f64>,
        }
        let request = json!({"op": "score", "question": question, "candidates": candidates});
        let reply: Reply = self.call(request)?;
        if reply.scores.len() != candidates.len() {
            return Err(self.protocol(
                format!("expected {} scores, got {}", candidates.len(), reply.scores.len()),
                &json!({"scores": reply.scores}).to_string(),
            ));
        }
        Ok(reply.scores)
    }

    pub fn generate_raw(&self, prompt: &str, beam: usize) -> Result<Vec<ScoredText>, ModelError> {
        #[derive(Deserialize)]
        struct Reply {
            candidates: Vec<ScoredText>,
        }
        let reply: Reply = self.call(json!({"op": "generate", "prompt": prompt, "beam": beam}))?;
        if reply.candidates.len() > beam {
            return Err(self.protocol(
                format!("beam is {beam}, got {} candidates", reply.candidates.len()),
                &serde_json::to_string(&reply.candidates).unwrap_or_default(),
            ));
        }
        Ok(reply.candidates)
    }

    pub fn sketch_raw(&self, input: &str, beam: usize) -> Result<Vec<String>, ModelError> {
        #[derive(Deserialize)]
        struct Reply {
            candidates: Vec<String>,
        }
        let reply: Reply = self.call(json!({"op": "sketch", "input": input, "beam": beam}))?;
        if reply.candidates.len() > beam {
            return Err(self.protocol(
                format!("beam is {beam}, got {} candidates", reply.candidates.len()),
                &json!(reply.candidates).to_string(),
            ));
        }
        Ok(reply.candidates)
    }
}

impl Scorer for ExternalModel {
    /// Scores are clamped into `[0, 1]`.
    fn score_batch(&self, question: &str, candidates: &[String]) -> Result<Vec<f64>, ModelError> {
        if candidates.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self
            .score_raw(question, candidates)?
            .into_iter()
            .map(|s| s.clamp(0.0, 1.0))
            .collect())
    }
}

impl Generator for ExternalModel {
    fn generate(&self, request: &GenerationRequest<'_>, beam: usize) -> Result<Vec<ScoredText>, ModelError> {
        self.generate_raw(request.prompt, beam)
    }
}

impl SketchGenerator for ExternalModel {
    fn sketch(&self, request: &SketchRequest<'_>, beam: usize) -> Result<Vec<String>, ModelError> {
        self.sketch_raw(request.input, beam)
    }
}

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Worker {
    fn spawn(argv: &[String]) -> std::io::Result<Worker> {
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped");
        let stdout = child.stdout.take().expect("piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Worker { child, stdin, lines })
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

struct PoolState {
    idle: Vec<Worker>,
    live: usize,
}

/// Child processes handed out one request at a time, spawned lazily up to
/// `size`.
struct ProcessPool {
    size: usize,
    state: Mutex<PoolState>,
    freed: Condvar,
}

impl ProcessPool {
    fn new(size: usize) -> ProcessPool {
        ProcessPool {
            size,
            state: Mutex::new(PoolState { idle: Vec::new(), live: 0 }),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self, model: &ExternalModel) -> Result<Worker, ModelError> {
        let mut state = self.state.lock().expect("pool lock");
        loop {
            if let Some(w) = state.idle.pop() {
                return Ok(w);
            }
            if state.live < self.size {
                state.live += 1;
                drop(state);
                let Endpoint::Command(argv) = &model.endpoint else { unreachable!() };
                return Worker::spawn(argv).map_err(|e| {
                    self.retire();
                    model.unreachable(e)
                });
            }
            state = self.freed.wait(state).expect("pool lock");
        }
    }

    fn release(&self, worker: Worker) {
        self.state.lock().expect("pool lock").idle.push(worker);
        self.freed.notify_one();
    }

    fn retire(&self) {
        self.state.lock().expect("pool lock").live -= 1;
        self.freed.notify_one();
    }

    fn call(&self, model: &ExternalModel, body: &str) -> Result<String, ModelError> {
        let mut worker = self.acquire(model)?;
        if let Err(e) = writeln!(worker.stdin, "{body}").and_then(|_| worker.stdin.flush()) {
            drop(worker);
            self.retire();
            return Err(model.unreachable(e));
        }
        match worker.lines.recv_timeout(model.config.timeout) {
            Ok(Ok(line)) => {
                self.release(worker);
                Ok(line)
            }
            Ok(Err(e)) => {
                drop(worker);
                self.retire();
                Err(model.unreachable(e))
            }
            Err(RecvTimeoutError::Timeout) => {
                drop(worker);
                self.retire();
                Err(model.timeout())
            }
            Err(RecvTimeoutError::Disconnected) => {
                drop(worker);
                self.retire();
                Err(model.unreachable("model process exited"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_specs() {
        assert_eq!(Endpoint::parse("http://localhost:9/x").unwrap(), Endpoint::Http("http://localhost:9/x".into()));
        assert_eq!(
            Endpoint::parse("cmd:/bin/model --fast").unwrap(),
            Endpoint::Command(vec!["/bin/model".into(), "--fast".into()])
        );
        assert!(Endpoint::parse("cmd:").is_err());
        assert!(Endpoint::parse("builtin").is_err());
    }

    #[test]
    fn unreachable_http_is_error_with_endpoint() {
        let cfg = ExternalConfig {
            timeout: Duration::from_millis(500),
            retries: 0,
            pool_size: 1,
        };
        let m = ExternalModel::from_spec("http://127.0.0.1:9/score", cfg).unwrap();
        let err = m.score_batch("q", &["a".into()]).unwrap_err();
        assert!(err.to_string().contains("127.0.0.1:9"), "{err}");
    }

    #[test]
    fn subprocess_echo_protocol() {
        let cfg = ExternalConfig {
            timeout: Duration::from_secs(5),
            retries: 0,
            pool_size: 1,
        };
        let script = r#"while read line; do echo '{"scores":[0.25,2.0]}'; done"#;
        let m = ExternalModel::new(Endpoint::Command(vec!["sh".into(), "-c".into(), script.into()]), cfg);
        assert_eq!(m.score_batch("q", &["a".into(), "b".into()]).unwrap(), [0.25, 1.0]);
        let err = m.score_batch("q", &["a".into()]).unwrap_err();
        assert!(matches!(err, ModelError::Protocol { .. }), "{err}");
    }
}
