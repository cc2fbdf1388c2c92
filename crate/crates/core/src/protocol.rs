//! Line-delimited JSON protocol for external evaluators.
//!
//! ```text
//! -> {"type":"init"}
//! <- {"type":"init_ok","players":N,"metric_min":0.0,"metric_max":1.0}
//! -> {"type":"eval","id":k,"mask":[0,1,...]}
//! <- {"type":"eval_ok","id":k,"metric":x}
//! -> {"type":"close"}
//! ```
//!
//! Responses must echo the request id; anything else is a protocol
//! violation. [`EvaluatorClient`] is the toolkit side, [`serve`] the
//! evaluator side.

use std::io::{BufRead, BufReader, Read, Write};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::MetricRange;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Request {
    Init,
    Eval { id: u64, mask: Vec<u8> },
    Close,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Response {
    InitOk {
        players: usize,
        metric_min: f64,
        metric_max: f64,
    },
    EvalOk {
        id: u64,
        metric: f64,
    },
    Error {
        #[serde(default)]
        id: Option<u64>,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluatorInfo {
    pub players: usize,
    pub range: MetricRange,
}

fn violation(id: Option<u64>, message: impl Into<String>) -> Error {
    Error::Evaluator {
        id,
        message: message.into(),
    }
}

/// Toolkit side of the protocol, over any byte transport.
pub struct EvaluatorClient {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    next_id: u64,
}

impl EvaluatorClient {
    /// Lines from `reader` are pumped by a background thread so that every
    /// response wait can time out.
    pub fn new(reader: impl Read + Send + 'static, writer: impl Write + Send + 'static, timeout: Duration) -> Self {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Self {
            writer: Box::new(writer),
            lines: rx,
            timeout,
            next_id: 0,
        }
    }

    fn send(&mut self, req: &Request) -> Result<()> {
        let id = match req {
            Request::Eval { id, .. } => Some(*id),
            _ => None,
        };
        let mut line = serde_json::to_string(req)?;
        line.push('\n');
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.flush())
            .map_err(|e| violation(id, format!("write failed: {e}")))
    }

    fn receive(&mut self, id: Option<u64>) -> Result<Response> {
        loop {
            let line = match self.lines.recv_timeout(self.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => return Err(violation(id, format!("read failed: {e}"))),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(violation(id, format!("no response within {:?}", self.timeout)))
                }
                Err(RecvTimeoutError::Disconnected) => return Err(violation(id, "evaluator closed its output")),
            };
            if line.trim().is_empty() {
                continue;
            }
            return serde_json::from_str(&line).map_err(|e| violation(id, format!("malformed response {line:?}: {e}")));
        }
    }

    pub fn handshake(&mut self) -> Result<EvaluatorInfo> {
        self.send(&Request::Init)?;
        match self.receive(None)? {
            Response::InitOk {
                players,
                metric_min,
                metric_max,
            } => {
                let range = MetricRange::new(metric_min, metric_max)
                    .map_err(|e| violation(None, format!("bad declared range: {e}")))?;
                Ok(EvaluatorInfo { players, range })
            }
            Response::Error { message, .. } => Err(violation(None, format!("init failed: {message}"))),
            other => Err(violation(None, format!("expected init_ok, got {other:?}"))),
        }
    }

    /// Id that the next `evaluate` call will use.
    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    /// Raw metric for `mask`; range checks are left to the caller.
    pub fn evaluate(&mut self, mask: &[bool]) -> Result<f64> {
        let id = self.next_id;
        self.next_id += 1;
        self.send(&Request::Eval {
            id,
            mask: mask.iter().map(|&b| u8::from(b)).collect(),
        })?;
        match self.receive(Some(id))? {
            Response::EvalOk { id: got, metric } if got == id => Ok(metric),
            Response::EvalOk { id: got, .. } => Err(violation(Some(id), format!("response carries id {got}"))),
            Response::Error { message, .. } => Err(violation(Some(id), message)),
            other => Err(violation(Some(id), format!("expected eval_ok, got {other:?}"))),
        }
    }

    pub fn close(&mut self) -> Result<()> {
        self.send(&Request::Close)
    }
}

/// Evaluator side: answers requests from `input` until `close` or EOF.
///
/// `metric` receives the decoded mask and returns the raw metric.
pub fn serve<R, W, F>(input: R, mut output: W, players: usize, range: MetricRange, mut metric: F) -> Result<()>
where
    R: BufRead,
    W: Write,
    F: FnMut(&[bool]) -> f64,
{
    let reply = |out: &mut W, resp: &Response| -> Result<()> {
        let mut line = serde_json::to_string(resp)?;
        line.push('\n');
        out.write_all(line.as_bytes())?;
        out.flush()?;
        Ok(())
    };
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let req: Request = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                reply(
                    &mut output,
                    &Response::Error {
                        id: None,
                        message: format!("malformed request: {e}"),
                    },
                )?;
                return Err(Error::Format(format!("malformed request {line:?}")));
            }
        };
        match req {
            Request::Init => reply(
                &mut output,
                &Response::InitOk {
                    players,
                    metric_min: range.min,
                    metric_max: range.max,
                },
            )?,
            Request::Eval { id, mask } => {
                if mask.len() != players || mask.iter().any(|&b| b > 1) {
                    reply(
                        &mut output,
                        &Response::Error {
                            id: Some(id),
                            message: format!("mask must be {players} zeros/ones"),
                        },
                    )?;
                    return Err(Error::Format(format!("bad mask in request {id}")));
                }
                let bits: Vec<bool> = mask.iter().map(|&b| b == 1).collect();
                reply(
                    &mut output,
                    &Response::EvalOk {
                        id,
                        metric: metric(&bits),
                    },
                )?;
            }
            Request::Close => return Ok(()),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::os::unix::net::UnixStream;

    #[test]
    fn wire_format_is_exact() {
        assert_eq!(serde_json::to_string(&Request::Init).unwrap(), r#"{"type":"init"}"#);
        assert_eq!(
            serde_json::to_string(&Request::Eval { id: 3, mask: vec![0, 1] }).unwrap(),
            r#"{"type":"eval","id":3,"mask":[0,1]}"#
        );
        assert_eq!(serde_json::to_string(&Request::Close).unwrap(), r#"{"type":"close"}"#);
        let r: Response = serde_json::from_str(r#"{"type":"init_ok","players":3,"metric_min":0.0,"metric_max":1.0}"#).unwrap();
        assert_eq!(
            r,
            Response::InitOk {
                players: 3,
                metric_min: 0.0,
                metric_max: 1.0
            }
        );
        let r: Response = serde_json::from_str(r#"{"type":"eval_ok","id":7,"metric":0.9}"#).unwrap();
        assert_eq!(r, Response::EvalOk { id: 7, metric: 0.9 });
    }

    fn spawn_server<F>(metric: F) -> EvaluatorClient
    where
        F: FnMut(&[bool]) -> f64 + Send + 'static,
    {
        let (client_end, server_end) = UnixStream::pair().unwrap();
        let server_read = server_end.try_clone().unwrap();
        thread::spawn(move || {
            let _ = serve(BufReader::new(server_read), server_end, 3, MetricRange::UNIT, metric);
        });
        let reader = client_end.try_clone().unwrap();
        EvaluatorClient::new(reader, client_end, Duration::from_secs(5))
    }

    #[test]
    fn in_process_session() {
        let w = [0.2, -0.1, 0.3];
        let mut client = spawn_server(move |m| 0.5 + m.iter().zip(&w).filter(|(b, _)| **b).map(|(_, w)| w).sum::<f64>());
        let info = client.handshake().unwrap();
        assert_eq!(info.players, 3);
        assert!((client.evaluate(&[true, true, true]).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(client.evaluate(&[false, false, false]).unwrap(), 0.5);
        client.close().unwrap();
    }

    #[test]
    fn mismatched_id_is_a_violation() {
        let (client_end, mut server_end) = UnixStream::pair().unwrap();
        let server_read = server_end.try_clone().unwrap();
        thread::spawn(move || {
            let mut lines = BufReader::new(server_read).lines();
            let _ = lines.next();
            writeln!(server_end, r#"{{"type":"init_ok","players":1,"metric_min":0.0,"metric_max":1.0}}"#).unwrap();
            let _ = lines.next();
            writeln!(server_end, r#"{{"type":"eval_ok","id":99,"metric":0.5}}"#).unwrap();
        });
        let reader = client_end.try_clone().unwrap();
        let mut client = EvaluatorClient::new(reader, client_end, Duration::from_secs(5));
        client.handshake().unwrap();
        let err = client.evaluate(&[true]).unwrap_err();
        assert!(matches!(err, Error::Evaluator { id: Some(0), .. }), "{err}");
    }

    #[test]
    fn silent_evaluator_times_out() {
        let (client_end, _server_end) = UnixStream::pair().unwrap();
        let reader = client_end.try_clone().unwrap();
        let mut client = EvaluatorClient::new(reader, client_end, Duration::from_millis(50));
        let err = client.handshake().unwrap_err();
        assert!(err.to_string().contains("no response"), "{err}");
    }
}
