//! Newline-delimited JSON client for an external scorer.
//!
//! Request: `{"id": 7, "context": [3, 1]}`
//! Response: `{"id": 7, "logprobs": [...]}` with one entry per subword plus
//! eos last, or `{"id": 7, "error": "..."}`. Responses may come back in any
//! order; unmatched ones are kept until asked for. A `null` log probability
//! stands for probability zero.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;

use serde::Serialize;
use serde_json::Value;

use super::{normalisation_error, ConditionalLM, LmError, REMOTE_TOLERANCE};
use crate::logprob::LogProb;
use crate::vocab::Id;

#[derive(Serialize)]
struct Request<'a> {
    id: u64,
    context: &'a [Id],
}

type Reply = Result<Vec<LogProb>, String>;

struct Connection {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    stash: HashMap<u64, Reply>,
    next_id: u64,
    child: Option<Child>,
}

/// One connection; concurrent callers are serialised.
pub struct RemoteLM {
    conn: Mutex<Connection>,
    support_len: usize,
}

impl RemoteLM {
    pub fn from_streams(
        reader: impl Read + Send + 'static,
        writer: impl Write + Send + 'static,
        support_len: usize,
    ) -> Self {
        RemoteLM {
            conn: Mutex::new(Connection {
                reader: Box::new(BufReader::new(reader)),
                writer: Box::new(writer),
                stash: HashMap::new(),
                next_id: 0,
                child: None,
            }),
            support_len,
        }
    }

    pub fn connect(addr: &str, support_len: usize) -> Result<Self, LmError> {
        let stream = TcpStream::connect(addr).map_err(|e| LmError::BackendUnavailable(format!("{addr}: {e}")))?;
        let reader = stream.try_clone().map_err(|e| LmError::BackendUnavailable(e.to_string()))?;
        Ok(Self::from_streams(reader, stream, support_len))
    }

    /// Starts `program args...` and speaks the protocol over its stdin/stdout.
    pub fn spawn(program: &str, args: &[String], support_len: usize) -> Result<Self, LmError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| LmError::BackendUnavailable(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let lm = Self::from_streams(stdout, stdin, support_len);
        lm.conn.lock().expect("fresh lock").child = Some(child);
        Ok(lm)
    }

    fn request(&self, context: &[Id]) -> Result<Vec<LogProb>, LmError> {
        let mut conn = self.conn.lock().map_err(|_| LmError::BackendUnavailable("connection poisoned".into()))?;
        let id = conn.next_id;
        conn.next_id += 1;
        let line = serde_json::to_string(&Request { id, context }).expect("request serialises");
        let unavailable = |e: std::io::Error| LmError::BackendUnavailable(e.to_string());
        writeln!(conn.writer, "{line}").map_err(unavailable)?;
        conn.writer.flush().map_err(unavailable)?;
        loop {
            if let Some(reply) = conn.stash.remove(&id) {
                return reply.map_err(|msg| LmError::BackendUnavailable(format!("request {id}: {msg}")));
            }
            let mut buf = String::new();
            let n = conn.reader.read_line(&mut buf).map_err(unavailable)?;
            if n == 0 {
                return Err(LmError::BackendUnavailable("connection closed".into()));
            }
            if buf.trim().is_empty() {
                continue;
            }
            let (rid, reply) = parse_reply(&buf)?;
            conn.stash.insert(rid, reply);
        }
    }
}

fn parse_reply(line: &str) -> Result<(u64, Reply), LmError> {
    let bad = |msg: &str| LmError::MalformedResponse(format!("{msg}: {}", line.trim()));
    let value: Value = serde_json::from_str(line).map_err(|e| bad(&e.to_string()))?;
    let id = value.get("id").and_then(Value::as_u64).ok_or_else(|| bad("missing integer id"))?;
    if let Some(err) = value.get("error") {
        return Ok((id, Err(err.as_str().unwrap_or("unspecified error").to_string())));
    }
    let arr = value.get("logprobs").and_then(Value::as_array).ok_or_else(|| bad("missing logprobs"))?;
    let mut out = Vec::with_capacity(arr.len());
    for v in arr {
        let lp = match v {
            Value::Null => LogProb::ZERO,
            Value::Number(n) => {
                let x = n.as_f64().ok_or_else(|| bad("non-numeric log probability"))?;
                LogProb::new(x)
            }
            _ => return Err(bad("non-numeric log probability")),
        };
        out.push(lp);
    }
    Ok((id, Ok(out)))
}

impl ConditionalLM for RemoteLM {
    fn support_len(&self) -> usize {
        self.support_len
    }

    fn next_distribution(&self, context: &[Id]) -> Result<Vec<LogProb>, LmError> {
        let dist = self.request(context)?;
        if dist.len() != self.support_len {
            return Err(LmError::MalformedResponse(format!(
                "expected {} log probabilities, got {}",
                self.support_len,
                dist.len()
            )));
        }
        let deviation = normalisation_error(&dist);
        if deviation.abs() > REMOTE_TOLERANCE {
            return Err(LmError::NotNormalised { context: context.to_vec(), deviation });
        }
        Ok(dist)
    }
}

impl Drop for RemoteLM {
    fn drop(&mut self) {
        if let Ok(conn) = self.conn.get_mut() {
            if let Some(child) = conn.child.as_mut() {
                let _ = child.kill();
                let _ = child.wait();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::BufReader;
    use std::net::TcpListener;
    use std::thread;

    /// Answers pairs of requests in reverse order, so every other reply
    /// arrives before the one the client is waiting for.
    fn serve_swapped(listener: TcpListener, table: Vec<f64>) {
        thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut writer = stream;
            let mut held: Option<u64> = None;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 {
                    return;
                }
                let v: Value = serde_json::from_str(&line).unwrap();
                let id = v["id"].as_u64().unwrap();
                let ctx_len = v["context"].as_array().unwrap().len();
                let reply = |id: u64, ctx_len: usize| {
                    if ctx_len == 9 {
                        format!("{{\"id\":{id},\"error\":\"context too long\"}}\n")
                    } else {
                        let lps: Vec<f64> = table.iter().map(|p| p.ln()).collect();
                        serde_json::json!({"id": id, "logprobs": lps}).to_string() + "\n"
                    }
                };
                match held.take() {
                    None if id.is_multiple_of(2) => {
                        // Reply to the even request only after the odd one is answered.
                        held = Some(id);
                        writer.write_all(reply(id + 1, 0).as_bytes()).unwrap();
                        writer.write_all(reply(id, ctx_len).as_bytes()).unwrap();
                    }
                    _ => {}
                }
            }
        });
    }

    #[test]
    fn out_of_order_replies_are_matched_by_id() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        serve_swapped(listener, vec![0.25, 0.25, 0.5]);
        let lm = RemoteLM::connect(&addr, 3).unwrap();
        let a = lm.next_distribution(&[0]).unwrap();
        let b = lm.next_distribution(&[1]).unwrap();
        assert_eq!(a, b);
        assert!((a[2].prob() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn error_replies_surface() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        serve_swapped(listener, vec![0.25, 0.25, 0.5]);
        let lm = RemoteLM::connect(&addr, 3).unwrap();
        assert!(matches!(lm.next_distribution(&[0; 9]), Err(LmError::BackendUnavailable(_))));
    }

    #[test]
    fn wrong_length_is_malformed() {
        let input = b"{\"id\":0,\"logprobs\":[-0.69314718056,-0.69314718056]}\n".to_vec();
        let lm = RemoteLM::from_streams(std::io::Cursor::new(input), Vec::new(), 3);
        assert!(matches!(lm.next_distribution(&[]), Err(LmError::MalformedResponse(_))));
    }

    #[test]
    fn unnormalised_reply() {
        let input = b"{\"id\":0,\"logprobs\":[-0.69314718056,-0.69314718056,-0.69314718056]}\n".to_vec();
        let lm = RemoteLM::from_streams(std::io::Cursor::new(input), Vec::new(), 3);
        assert!(matches!(lm.next_distribution(&[]), Err(LmError::NotNormalised { .. })));
    }

    #[test]
    fn null_is_zero_probability() {
        let input = b"{\"id\":0,\"logprobs\":[null,-0.69314718056,-0.69314718056]}\n".to_vec();
        let lm = RemoteLM::from_streams(std::io::Cursor::new(input), Vec::new(), 3);
        assert!(lm.next_distribution(&[]).unwrap()[0].is_zero());
    }

    #[test]
    fn garbage_is_malformed() {
        let lm = RemoteLM::from_streams(std::io::Cursor::new(b"not json\n".to_vec()), Vec::new(), 3);
        assert!(matches!(lm.next_distribution(&[]), Err(LmError::MalformedResponse(_))));
    }

    #[test]
    fn unreachable_backend() {
        assert!(matches!(RemoteLM::connect("127.0.0.1:1", 3), Err(LmError::BackendUnavailable(_))));
    }
}
