use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;

use super::protocol::{encode, Request, RequestBody, Response, Status, PROTO_VERSION};
use super::{Capabilities, Scorer};
use crate::error::{Error, Result};
use crate::tokens::{AttackInstance, TokenId};

struct Session {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    next_id: u64,
    child: Option<Child>,
    closed: bool,
}

impl Session {
    fn call(&mut self, body: RequestBody) -> Result<Response> {
        if self.closed {
            return Err(Error::Protocol("session already shut down".into()));
        }
        let id = self.next_id;
        self.next_id += 1;
        let line = encode(&Request { id, body });
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;

        let mut buf = String::new();
        if self.reader.read_line(&mut buf)? == 0 {
            self.closed = true;
            return Err(Error::Protocol(format!(
                "bridge closed the stream before answering request {id}"
            )));
        }
        let resp: Response = serde_json::from_str(buf.trim_end())
            .map_err(|e| Error::Protocol(format!("bad response to request {id}: {e}")))?;
        if resp.id != id {
            return Err(Error::Protocol(format!(
                "response id {} does not match request id {id}",
                resp.id
            )));
        }
        Ok(resp)
    }

    fn shutdown(&mut self) {
        if !self.closed {
            let _ = self.call(RequestBody::Shutdown);
            self.closed = true;
        }
        if let Some(mut child) = self.child.take() {
            let _ = child.wait();
        }
    }
}

/// Client side of the JSON-lines scorer protocol
/// (see [`protocol`](super::protocol)).
///
/// One session handles one request at a time, so the scorer is reported as
/// not concurrency safe; open a second session for the draft model.
pub struct BridgeScorer {
    label: String,
    supports_gradient: bool,
    vocab_size: usize,
    flops_per_token: f64,
    session: Mutex<Session>,
}

impl BridgeScorer {
    /// Handshake over an existing byte stream pair.
    pub fn connect(
        label: impl Into<String>,
        reader: impl BufRead + Send + 'static,
        writer: impl Write + Send + 'static,
    ) -> Result<Self> {
        Self::start(
            label.into(),
            Session {
                reader: Box::new(reader),
                writer: Box::new(writer),
                next_id: 1,
                child: None,
                closed: false,
            },
        )
    }

    /// Launch `command` (whitespace separated program and arguments) and talk
    /// to it over its stdin/stdout.
    pub fn spawn(label: impl Into<String>, command: &str) -> Result<Self> {
        let mut parts = command.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| Error::Config("empty bridge command".into()))?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Io(format!("cannot launch `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Self::start(
            label.into(),
            Session {
                reader: Box::new(BufReader::new(stdout)),
                writer: Box::new(stdin),
                next_id: 1,
                child: Some(child),
                closed: false,
            },
        )
    }

    fn start(label: String, mut session: Session) -> Result<Self> {
        let resp = session.call(RequestBody::Hello {
            proto_version: PROTO_VERSION,
        })?;
        if resp.status != Status::Ok {
            return Err(Error::Protocol(format!(
                "hello rejected: {}",
                resp.message.unwrap_or_default()
            )));
        }
        match resp.proto_version {
            Some(PROTO_VERSION) => {}
            other => {
                return Err(Error::Protocol(format!(
                    "unsupported proto_version {other:?}, expected {PROTO_VERSION}"
                )))
            }
        }
        let vocab_size = resp
            .vocab_size
            .ok_or_else(|| Error::Protocol("hello response lacks vocab_size".into()))?;
        Ok(Self {
            label,
            supports_gradient: resp.supports_gradient.unwrap_or(false),
            vocab_size,
            flops_per_token: resp.flops_per_token.unwrap_or(0.0),
            session: Mutex::new(session),
        })
    }

    /// Replace the reported per-token cost with a configured constant.
    pub fn with_flops_per_token(mut self, flops: f64) -> Self {
        self.flops_per_token = flops;
        self
    }

    /// Send `shutdown` and wait for a spawned child to exit.
    pub fn shutdown(&self) {
        self.lock().shutdown();
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn failure(&self, resp: Response) -> Error {
        Error::Scorer {
            scorer: self.label.clone(),
            index: resp.index,
            message: resp.message.unwrap_or_else(|| "unspecified bridge error".into()),
        }
    }
}

impl Drop for BridgeScorer {
    fn drop(&mut self) {
        self.lock().shutdown();
    }
}

impl Scorer for BridgeScorer {
    fn label(&self) -> &str {
        &self.label
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            supports_gradient: self.supports_gradient,
            concurrent_safe: false,
        }
    }

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn flops_per_token(&self) -> f64 {
        self.flops_per_token
    }

    fn losses(&self, inst: &AttackInstance, suffixes: &[&[TokenId]]) -> Result<Vec<f64>> {
        let resp = self.lock().call(RequestBody::LossBatch {
            prompt: inst.prompt().tokens().to_vec(),
            target: inst.target().tokens().to_vec(),
            suffixes: suffixes.iter().map(|s| s.to_vec()).collect(),
        })?;
        if resp.status != Status::Ok {
            return Err(self.failure(resp));
        }
        resp.losses
            .ok_or_else(|| Error::Protocol("loss_batch response lacks losses".into()))
    }

    fn gradient_topk(&self, inst: &AttackInstance, k: usize) -> Result<Vec<Vec<TokenId>>> {
        if !self.supports_gradient {
            return Err(Error::NoGradient {
                scorer: self.label.clone(),
            });
        }
        let resp = self.lock().call(RequestBody::GradientTopk {
            prompt: inst.prompt().tokens().to_vec(),
            suffix: inst.suffix().tokens().to_vec(),
            target: inst.target().tokens().to_vec(),
            k,
        })?;
        if resp.status != Status::Ok {
            return Err(self.failure(resp));
        }
        resp.topk
            .ok_or_else(|| Error::Protocol("gradient_topk response lacks topk".into()))
    }
}
