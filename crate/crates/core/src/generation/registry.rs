use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::wire::{Endpoint, ExternalBackend, DEFAULT_TIMEOUT};
use super::{EchoBackend, GenerationError, GeneratorBackend, NgramModel, RetrievalIndex};
use crate::corpus::read_corpus;

/// How to construct a backend. Deserializes from a tagged table such as
/// `{ kind = "ngram", path = "model.json" }` or parses from the short forms
/// `echo`, `ngram:<model.json>`, `retrieval:<corpus dir>`, `cmd:<program args>`
/// and `tcp:<host:port>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendSpec {
    Echo,
    Ngram {
        path: PathBuf,
    },
    Retrieval {
        corpus: PathBuf,
    },
    External {
        #[serde(default)]
        command: Option<Vec<String>>,
        #[serde(default)]
        tcp: Option<String>,
        #[serde(default)]
        timeout_secs: Option<f64>,
        #[serde(default)]
        deterministic: bool,
    },
}

impl BackendSpec {
    pub fn external(endpoint: &Endpoint) -> Self {
        match endpoint {
            Endpoint::Process { program, args } => BackendSpec::External {
                command: Some(std::iter::once(program.clone()).chain(args.iter().cloned()).collect()),
                tcp: None,
                timeout_secs: None,
                deterministic: false,
            },
            Endpoint::Tcp(addr) => BackendSpec::External {
                command: None,
                tcp: Some(addr.clone()),
                timeout_secs: None,
                deterministic: false,
            },
        }
    }

    pub fn build(&self) -> Result<Arc<dyn GeneratorBackend>, GenerationError> {
        Ok(match self {
            BackendSpec::Echo => Arc::new(EchoBackend),
            BackendSpec::Ngram { path } => Arc::new(NgramModel::load(path)?),
            BackendSpec::Retrieval { corpus } => {
                let corpus = read_corpus(corpus).map_err(|e| GenerationError::Load(e.to_string()))?;
                Arc::new(RetrievalIndex::from_pairs(&corpus.train)?)
            }
            BackendSpec::External { command, tcp, timeout_secs, deterministic } => {
                let endpoint = match (command, tcp) {
                    (Some(cmd), None) if !cmd.is_empty() => Endpoint::process(&cmd[0], cmd[1..].iter().cloned()),
                    (None, Some(addr)) => Endpoint::Tcp(addr.clone()),
                    _ => return Err(GenerationError::Load("external backend needs exactly one of command or tcp".into())),
                };
                let timeout = match timeout_secs {
                    Some(s) if s.is_finite() && *s > 0.0 => Duration::from_secs_f64(*s),
                    Some(s) => return Err(GenerationError::Load(format!("bad timeout {s}"))),
                    None => DEFAULT_TIMEOUT,
                };
                Arc::new(ExternalBackend::new(endpoint).with_timeout(timeout).with_deterministic(*deterministic))
            }
        })
    }
}

impl FromStr for BackendSpec {
    type Err = GenerationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "echo" {
            return Ok(BackendSpec::Echo);
        }
        if let Some(p) = s.strip_prefix("ngram:") {
            return Ok(BackendSpec::Ngram { path: p.into() });
        }
        if let Some(p) = s.strip_prefix("retrieval:") {
            return Ok(BackendSpec::Retrieval { corpus: p.into() });
        }
        if s.starts_with("cmd:") || s.starts_with("tcp:") {
            return Ok(BackendSpec::external(&s.parse()?));
        }
        Err(GenerationError::Load(format!("unknown backend {s:?}")))
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Echo => f.write_str("echo"),
            BackendSpec::Ngram { path } => write!(f, "ngram:{}", path.display()),
            BackendSpec::Retrieval { corpus } => write!(f, "retrieval:{}", corpus.display()),
            BackendSpec::External { command: Some(cmd), .. } => write!(f, "cmd:{}", cmd.join(" ")),
            BackendSpec::External { tcp: Some(addr), .. } => write!(f, "tcp:{addr}"),
            BackendSpec::External { .. } => f.write_str("external"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_forms() {
        assert_eq!("echo".parse::<BackendSpec>().unwrap(), BackendSpec::Echo);
        assert_eq!("ngram:m.json".parse::<BackendSpec>().unwrap(), BackendSpec::Ngram { path: "m.json".into() });
        let ext: BackendSpec = "cmd:python3 serve.py".parse().unwrap();
        assert_eq!(ext.to_string(), "cmd:python3 serve.py");
        assert!("gpt".parse::<BackendSpec>().is_err());
    }

    #[test]
    fn toml_tables() {
        #[derive(Deserialize)]
        struct Cfg {
            backends: std::collections::BTreeMap<String, BackendSpec>,
        }
        let cfg: Cfg = toml::from_str(
            r#"
            [backends.echo]
            kind = "echo"
            [backends.neural]
            kind = "external"
            tcp = "127.0.0.1:7000"
            timeout_secs = 5
            "#,
        )
        .unwrap();
        assert_eq!(cfg.backends["echo"], BackendSpec::Echo);
        assert!(matches!(&cfg.backends["neural"], BackendSpec::External { tcp: Some(a), .. } if a == "127.0.0.1:7000"));
    }

    #[test]
    fn build_errors() {
        assert!(BackendSpec::Ngram { path: "/nonexistent/model.json".into() }.build().is_err());
        let both = BackendSpec::External {
            command: Some(vec!["x".into()]),
            tcp: Some("y".into()),
            timeout_secs: None,
            deterministic: false,
        };
        assert!(both.build().is_err());
        assert!(BackendSpec::Echo.build().unwrap().is_deterministic());
    }
}
