//! Newline-delimited JSON protocol for out-of-process backends.
//!
//! ```text
//! -> {"id": 1, "prompt": ["cats", "purr"], "max_tokens": 60, "temperature": 1.0, "seed": 7}
//! <- {"id": 1, "tokens": ["they", "do", "<eos>"]}
//! <- {"id": 1, "error": "model not loaded"}
//! ```
//!
//! A backend is anything that reads request lines on a byte stream and
//! writes one response line per request: a child process speaking over its
//! standard streams, or a TCP server.

use std::fmt;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{finish_response, GenerationError, GenerationRequest, GeneratorBackend};
use crate::corpus::entities::EntityTagger;
use crate::corpus::EOS;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Serialize, Deserialize)]
pub struct WireRequest {
    pub id: u64,
    pub prompt: Vec<String>,
    pub max_tokens: usize,
    pub temperature: f64,
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WireResponse {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Where an external backend lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// Spawned child; requests on its stdin, responses on its stdout.
    Process { program: String, args: Vec<String> },
    Tcp(String),
}

impl Endpoint {
    pub fn process<I, S>(program: &str, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Endpoint::Process { program: program.to_string(), args: args.into_iter().map(Into::into).collect() }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Process { program, args } => {
                write!(f, "cmd:{program}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                Ok(())
            }
            Endpoint::Tcp(addr) => write!(f, "tcp:{addr}"),
        }
    }
}

/// `cmd:<program> [args...]` (whitespace-split, no quoting) or `tcp:<host:port>`.
impl FromStr for Endpoint {
    type Err = GenerationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("cmd:") {
            let mut parts = rest.split_whitespace().map(str::to_string);
            let program = parts.next().ok_or_else(|| GenerationError::Load("empty command".into()))?;
            Ok(Endpoint::Process { program, args: parts.collect() })
        } else if let Some(addr) = s.strip_prefix("tcp:") {
            if addr.is_empty() {
                return Err(GenerationError::Load("empty tcp address".into()));
            }
            Ok(Endpoint::Tcp(addr.to_string()))
        } else {
            Err(GenerationError::Load(format!("endpoint must start with cmd: or tcp:, got {s:?}")))
        }
    }
}

struct Connection {
    writer: Box<dyn Write + Send>,
    /// `None` marks end of stream.
    lines: Receiver<io::Result<Option<String>>>,
    child: Option<Child>,
    tcp: Option<TcpStream>,
    next_id: u64,
}

impl Connection {
    fn open(endpoint: &Endpoint) -> Result<Self, GenerationError> {
        match endpoint {
            Endpoint::Process { program, args } => {
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| GenerationError::Load(format!("cannot start {program}: {e}")))?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Ok(Connection {
                    writer: Box::new(stdin),
                    lines: spawn_reader(stdout),
                    child: Some(child),
                    tcp: None,
                    next_id: 1,
                })
            }
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr)
                    .map_err(|e| GenerationError::Load(format!("cannot connect to {addr}: {e}")))?;
                let _ = stream.set_nodelay(true);
                let reader = stream.try_clone().map_err(|e| GenerationError::Load(e.to_string()))?;
                let writer = stream.try_clone().map_err(|e| GenerationError::Load(e.to_string()))?;
                Ok(Connection {
                    writer: Box::new(writer),
                    lines: spawn_reader(reader),
                    child: None,
                    tcp: Some(stream),
                    next_id: 1,
                })
            }
        }
    }

    fn exit_reason(&mut self, fallback: &str) -> String {
        if let Some(child) = &mut self.child {
            // give the process a moment to finish dying so the status is available
            for _ in 0..10 {
                if let Ok(Some(status)) = child.try_wait() {
                    return format!("backend process {status}");
                }
                thread::sleep(Duration::from_millis(5));
            }
        }
        fallback.to_string()
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
        if let Some(s) = &self.tcp {
            let _ = s.shutdown(Shutdown::Both);
        }
    }
}

fn spawn_reader<R: io::Read + Send + 'static>(source: R) -> Receiver<io::Result<Option<String>>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut reader = BufReader::new(source);
        loop {
            let mut line = String::new();
            let item = match reader.read_line(&mut line) {
                Ok(0) => Ok(None),
                Ok(_) => Ok(Some(line)),
                Err(e) => Err(e),
            };
            let done = !matches!(item, Ok(Some(_)));
            if tx.send(item).is_err() || done {
                break;
            }
        }
    });
    rx
}

/// A backend reached over the wire protocol. The connection is opened
/// lazily and reopened after any transport or protocol failure; one request
/// is in flight at a time.
pub struct ExternalBackend {
    endpoint: Endpoint,
    timeout: Duration,
    deterministic: bool,
    conn: Mutex<Option<Connection>>,
}

impl fmt::Debug for ExternalBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExternalBackend")
            .field("endpoint", &self.endpoint)
            .field("timeout", &self.timeout)
            .field("deterministic", &self.deterministic)
            .finish()
    }
}

impl ExternalBackend {
    pub fn new(endpoint: Endpoint) -> Self {
        ExternalBackend { endpoint, timeout: DEFAULT_TIMEOUT, deterministic: false, conn: Mutex::new(None) }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Declare that the backend honours the seed.
    pub fn with_deterministic(mut self, deterministic: bool) -> Self {
        self.deterministic = deterministic;
        self
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    /// Opens the connection now instead of on first use.
    pub fn connect(&self) -> Result<(), GenerationError> {
        let mut guard = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        if guard.is_none() {
            *guard = Some(Connection::open(&self.endpoint)?);
        }
        Ok(())
    }

    fn call(&self, conn: &mut Connection, req: &GenerationRequest) -> Result<Vec<String>, GenerationError> {
        let id = conn.next_id;
        conn.next_id += 1;
        let wire = WireRequest {
            id,
            prompt: req.prompt.clone(),
            max_tokens: req.max_tokens,
            temperature: req.temperature,
            seed: req.seed,
        };
        let mut line = serde_json::to_string(&wire).expect("request serializes");
        line.push('\n');
        if let Err(e) = conn.writer.write_all(line.as_bytes()).and_then(|_| conn.writer.flush()) {
            return Err(GenerationError::BackendExit(conn.exit_reason(&format!("write failed: {e}"))));
        }
        let text = loop {
            match conn.lines.recv_timeout(self.timeout) {
                Ok(Ok(Some(l))) if l.trim().is_empty() => continue,
                Ok(Ok(Some(l))) => break l,
                Ok(Ok(None)) | Err(RecvTimeoutError::Disconnected) => {
                    return Err(GenerationError::BackendExit(conn.exit_reason("stream closed")));
                }
                Ok(Err(e)) => return Err(GenerationError::BackendExit(format!("read failed: {e}"))),
                Err(RecvTimeoutError::Timeout) => return Err(GenerationError::Timeout(self.timeout)),
            }
        };
        let resp: WireResponse = serde_json::from_str(text.trim_end())
            .map_err(|e| GenerationError::Protocol(format!("malformed response line: {e}")))?;
        if resp.id != id {
            return Err(GenerationError::Protocol(format!("expected id {id}, got {}", resp.id)));
        }
        match (resp.tokens, resp.error) {
            (_, Some(err)) => Err(GenerationError::Backend(err)),
            (Some(tokens), None) => Ok(finish_response(tokens, req.max_tokens)),
            (None, None) => Err(GenerationError::Protocol("response has neither tokens nor error".into())),
        }
    }
}

impl GeneratorBackend for ExternalBackend {
    fn generate(&self, req: &GenerationRequest) -> Result<Vec<String>, GenerationError> {
        req.validate()?;
        let mut guard = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        if guard.is_none() {
            *guard = Some(Connection::open(&self.endpoint)?);
        }
        let result = self.call(guard.as_mut().expect("connected"), req);
        // the stream may be out of step now; start over next time
        if let Err(GenerationError::Timeout(_) | GenerationError::Protocol(_) | GenerationError::BackendExit(_)) = &result {
            *guard = None;
        }
        result
    }

    fn is_deterministic(&self) -> bool {
        self.deterministic
    }
}

/// One request over a fresh connection, with the default timeout.
pub fn call_external_backend(endpoint: &Endpoint, req: &GenerationRequest) -> Result<Vec<String>, GenerationError> {
    ExternalBackend::new(endpoint.clone()).generate(req)
}

/// Answers wire requests read from `input` until end of stream. Returns the
/// number of lines answered.
pub fn serve_backend<B, R, W>(backend: &B, input: R, mut output: W) -> io::Result<u64>
where
    B: GeneratorBackend + ?Sized,
    R: BufRead,
    W: Write,
{
    let mut served = 0;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let resp = match serde_json::from_str::<WireRequest>(&line) {
            Ok(wire) => {
                let req = GenerationRequest {
                    prompt: wire.prompt,
                    max_tokens: wire.max_tokens,
                    temperature: wire.temperature,
                    seed: wire.seed,
                };
                match backend.generate(&req) {
                    Ok(tokens) => WireResponse { id: wire.id, tokens: Some(tokens), error: None },
                    Err(e) => WireResponse { id: wire.id, tokens: None, error: Some(e.to_string()) },
                }
            }
            Err(e) => {
                let id = serde_json::from_str::<serde_json::Value>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(|i| i.as_u64()))
                    .unwrap_or(0);
                WireResponse { id, tokens: None, error: Some(format!("bad request: {e}")) }
            }
        };
        serde_json::to_writer(&mut output, &resp)?;
        output.write_all(b"\n")?;
        output.flush()?;
        served += 1;
    }
    Ok(served)
}

/// Accepts connections forever, one thread per client.
pub fn serve_backend_tcp(backend: Arc<dyn GeneratorBackend>, listener: TcpListener) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let backend = Arc::clone(&backend);
        thread::spawn(move || {
            let Ok(reader) = stream.try_clone() else { return };
            let _ = serve_backend(backend.as_ref(), BufReader::new(reader), stream);
        });
    }
    Ok(())
}

/// Entity tagging delegated to an external process: the token sequence goes
/// out as the prompt and the tagged sequence comes back as the response.
/// Failures leave the input untouched and are counted.
#[derive(Debug)]
pub struct ExternalTagger {
    backend: ExternalBackend,
    failures: AtomicUsize,
}

impl ExternalTagger {
    pub fn new(backend: ExternalBackend) -> Self {
        ExternalTagger { backend, failures: AtomicUsize::new(0) }
    }

    pub fn failures(&self) -> usize {
        self.failures.load(Ordering::Relaxed)
    }
}

impl EntityTagger for ExternalTagger {
    fn tag(&self, tokens: &[String]) -> Vec<String> {
        if tokens.is_empty() {
            return Vec::new();
        }
        let req = GenerationRequest::new(tokens.to_vec()).with_max_tokens(usize::MAX).with_temperature(0.0);
        match self.backend.generate(&req) {
            Ok(mut out) => {
                if out.last().map(String::as_str) == Some(EOS) {
                    out.pop();
                }
                out
            }
            Err(_) => {
                self.failures.fetch_add(1, Ordering::Relaxed);
                tokens.to_vec()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::EchoBackend;

    fn v(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn echo_server() -> Endpoint {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        thread::spawn(move || serve_backend_tcp(Arc::new(EchoBackend), listener));
        Endpoint::Tcp(addr)
    }

    /// Reads one request, then answers with whatever `reply` produces.
    fn scripted_server(reply: fn(u64) -> Option<String>) -> Endpoint {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap().to_string();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let mut stream = stream.unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut line = String::new();
                while reader.read_line(&mut line).unwrap_or(0) > 0 {
                    let req: WireRequest = serde_json::from_str(&line).unwrap();
                    match reply(req.id) {
                        Some(out) => writeln!(stream, "{out}").unwrap(),
                        None => thread::sleep(Duration::from_secs(2)),
                    }
                    line.clear();
                }
            }
        });
        Endpoint::Tcp(addr)
    }

    #[test]
    fn serve_answers_each_line() {
        let input = concat!(
            r#"{"id":3,"prompt":["a","b"],"max_tokens":5,"temperature":1.0,"seed":0}"#,
            "\n\n",
            r#"{"id":4,"prompt":[],"max_tokens":5,"temperature":1.0,"seed":0}"#,
            "\n",
            r#"{"id":5,"prompt":"oops"}"#,
            "\n"
        );
        let mut out = Vec::new();
        assert_eq!(serve_backend(&EchoBackend, input.as_bytes(), &mut out).unwrap(), 3);
        let lines: Vec<WireResponse> =
            String::from_utf8(out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines[0].id, 3);
        assert_eq!(lines[0].tokens.as_deref(), Some(&v("a b <eos>")[..]));
        assert!(lines[1].error.is_some());
        assert_eq!(lines[2].id, 5);
        assert!(lines[2].error.is_some());
    }

    #[test]
    fn tcp_echo_round_trip() {
        let backend = ExternalBackend::new(echo_server());
        for i in 0..20 {
            let prompt = v(&format!("turn {i}"));
            let out = backend.generate(&GenerationRequest::new(prompt.clone())).unwrap();
            assert_eq!(out[..2], prompt[..]);
            assert_eq!(out.last().unwrap(), EOS);
        }
    }

    #[test]
    fn wrong_id_is_protocol_error() {
        let endpoint = scripted_server(|id| Some(format!(r#"{{"id":{},"tokens":["x"]}}"#, id + 100)));
        let err = call_external_backend(&endpoint, &GenerationRequest::new(v("hi"))).unwrap_err();
        assert!(matches!(err, GenerationError::Protocol(_)), "{err}");
    }

    #[test]
    fn malformed_line_is_protocol_error() {
        let endpoint = scripted_server(|_| Some("not json".into()));
        let err = call_external_backend(&endpoint, &GenerationRequest::new(v("hi"))).unwrap_err();
        assert!(matches!(err, GenerationError::Protocol(_)), "{err}");
    }

    #[test]
    fn backend_error_is_reported() {
        let endpoint = scripted_server(|id| Some(format!(r#"{{"id":{id},"error":"no model"}}"#)));
        let err = call_external_backend(&endpoint, &GenerationRequest::new(v("hi"))).unwrap_err();
        assert!(matches!(err, GenerationError::Backend(ref m) if m == "no model"), "{err}");
    }

    #[test]
    fn silence_times_out() {
        let backend = ExternalBackend::new(scripted_server(|_| None)).with_timeout(Duration::from_millis(100));
        let err = backend.generate(&GenerationRequest::new(v("hi"))).unwrap_err();
        assert!(matches!(err, GenerationError::Timeout(_)), "{err}");
    }

    #[test]
    fn process_exit_and_garbage() {
        let gone = ExternalBackend::new(Endpoint::process("true", Vec::<String>::new()));
        let err = gone.generate(&GenerationRequest::new(v("hi"))).unwrap_err();
        assert!(matches!(err, GenerationError::BackendExit(_)), "{err}");

        // `cat` sends the request straight back: valid JSON, matching id, no tokens
        let cat = ExternalBackend::new(Endpoint::process("cat", Vec::<String>::new()));
        let err = cat.generate(&GenerationRequest::new(v("hi"))).unwrap_err();
        assert!(matches!(err, GenerationError::Protocol(_)), "{err}");
    }

    #[test]
    fn endpoint_strings() {
        assert_eq!("tcp:127.0.0.1:9000".parse::<Endpoint>().unwrap(), Endpoint::Tcp("127.0.0.1:9000".into()));
        let e: Endpoint = "cmd:python3 serve.py --fast".parse().unwrap();
        assert_eq!(e, Endpoint::process("python3", ["serve.py", "--fast"]));
        assert_eq!(e.to_string(), "cmd:python3 serve.py --fast");
        assert!("http://x".parse::<Endpoint>().is_err());
        assert!("cmd:".parse::<Endpoint>().is_err());
    }

    #[test]
    fn tagger_falls_back_on_failure() {
        let tagger = ExternalTagger::new(ExternalBackend::new(Endpoint::process("true", Vec::<String>::new())));
        assert_eq!(tagger.tag(&v("Alice said")), v("Alice said"));
        assert_eq!(tagger.failures(), 1);

        let echo = ExternalTagger::new(ExternalBackend::new(echo_server()));
        assert_eq!(echo.tag(&v("Alice said")), v("Alice said"));
        assert_eq!(echo.failures(), 0);
    }
}
