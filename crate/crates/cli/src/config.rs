//! Resolved run configuration: flags over config file over defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use c2po::inference::DEFAULT_TIMEOUT;
use c2po::{ClusterStrategy, GraphParams, LinkScope, TemplateSet, WalkMode};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const TIMEOUT_ENV: &str = "C2PO_BACKEND_TIMEOUT_MS";

/// Where inferences come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Table(PathBuf),
    Http(String),
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(path) = s.strip_prefix("table:") {
            if !path.is_empty() {
                return Ok(Self::Table(PathBuf::from(path)));
            }
        }
        if let Some(url) = s.strip_prefix("http:") {
            // accept both "http:http://host" and "http://host"
            let url = if url.starts_with("//") {
                format!("http:{url}")
            } else {
                url.to_string()
            };
            if !url.is_empty() {
                return Ok(Self::Http(url));
            }
        }
        Err(format!("invalid backend {s:?} (expected table:<path> or http:<url>)"))
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Table(path) => write!(f, "table:{}", path.display()),
            Self::Http(url) => write!(f, "http:{url}"),
        }
    }
}

pub fn parse_link_scope(s: &str) -> Result<LinkScope, String> {
    match s {
        "frontier" => Ok(LinkScope::Frontier),
        "all-nodes" => Ok(LinkScope::AllNodes),
        _ => Err(format!("unknown link scope {s:?} (expected frontier or all-nodes)")),
    }
}

/// Serialize a field through its `Display`/`FromStr` pair.
mod text {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(value)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

mod scope_text {
    use c2po::LinkScope;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &LinkScope, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match value {
            LinkScope::Frontier => "frontier",
            LinkScope::AllNodes => "all-nodes",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<LinkScope, D::Error> {
        super::parse_link_scope(&String::deserialize(d)?).map_err(de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub k: usize,
    pub n: usize,
    /// Cluster draws use `seed`; story `j` walks with `seed + j` (wrapping).
    pub seed: u64,
    pub count: usize,
    #[serde(with = "text")]
    pub cluster: ClusterStrategy,
    #[serde(with = "text")]
    pub walk: WalkMode,
    #[serde(with = "scope_text")]
    pub link_scope: LinkScope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    pub templates: TemplateSet,
}

impl Default for RunConfig {
    fn default() -> Self {
        let params = GraphParams::default();
        Self {
            k: params.k,
            n: params.n,
            seed: 0,
            count: 3,
            cluster: ClusterStrategy::default(),
            walk: WalkMode::default(),
            link_scope: LinkScope::default(),
            backend: None,
            templates: TemplateSet::default(),
        }
    }
}

/// The config file: every key optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    k: Option<usize>,
    n: Option<usize>,
    seed: Option<u64>,
    count: Option<usize>,
    #[serde(default, deserialize_with = "optional_text")]
    cluster: Option<ClusterStrategy>,
    #[serde(default, deserialize_with = "optional_text")]
    walk: Option<WalkMode>,
    #[serde(default, deserialize_with = "optional_scope")]
    link_scope: Option<LinkScope>,
    backend: Option<String>,
    templates: Option<TemplateSet>,
}

fn optional_text<'de, T, D>(d: D) -> Result<Option<T>, D::Error>
where
    T: FromStr,
    T::Err: fmt::Display,
    D: serde::Deserializer<'de>,
{
    text::deserialize(d).map(Some)
}

fn optional_scope<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<LinkScope>, D::Error> {
    scope_text::deserialize(d).map(Some)
}

/// Values given on the command line.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub cluster: Option<ClusterStrategy>,
    pub walk: Option<WalkMode>,
    pub link_scope: Option<LinkScope>,
    pub backend: Option<BackendSpec>,
}

impl RunConfig {
    pub fn resolve(config_path: Option<&Path>, flags: &Overrides) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        if let Some(path) = config_path {
            let source = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
            let file: FileConfig =
                toml::from_str(&source).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
            macro_rules! take {
                ($($field:ident),*) => { $( if let Some(v) = file.$field { cfg.$field = v; } )* };
            }
            take!(k, n, seed, count, cluster, walk, link_scope, templates);
            if file.backend.is_some() {
                cfg.backend = file.backend;
            }
        }
        macro_rules! flag {
            ($($field:ident),*) => { $( if let Some(v) = flags.$field.clone() { cfg.$field = v; } )* };
        }
        flag!(k, n, seed, count, cluster, walk, link_scope);
        if let Some(b) = &flags.backend {
            cfg.backend = Some(b.to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params().validate().map_err(|e| CliError::usage(e.to_string()))?;
        if self.count == 0 {
            return Err(CliError::usage("count must be at least 1"));
        }
        self.templates.validate().map_err(CliError::usage)?;
        if let Some(b) = &self.backend {
            b.parse::<BackendSpec>().map_err(CliError::usage)?;
        }
        Ok(())
    }

    pub fn params(&self) -> GraphParams {
        GraphParams { k: self.k, n: self.n }
    }

    pub fn backend_spec(&self) -> Result<BackendSpec, CliError> {
        self.backend
            .as_deref()
            .ok_or_else(|| CliError::usage("no backend configured (use --backend table:<path> or http:<url>)"))?
            .parse()
            .map_err(CliError::usage)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization is infallible")
    }
}

pub fn backend_timeout() -> Result<Duration, CliError> {
    match std::env::var(TIMEOUT_ENV) {
        Err(_) => Ok(DEFAULT_TIMEOUT),
        Ok(raw) => raw
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&ms| ms > 0)
            .map(Duration::from_millis)
            .ok_or_else(|| CliError::usage(format!("{TIMEOUT_ENV} must be a positive integer, got {raw:?}"))),
    }
}
