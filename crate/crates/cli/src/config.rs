//! Run configuration: merging of flags and config files, hashing, and the
//! self-describing artifact headers.

use std::fs;
use std::path::{Path, PathBuf};

use iet_spectral::iet::{IetSpec, LengthValue};
use iet_spectral::sampling::{FunctionKind, FunctionSpec};
use iet_spectral::{Iet, SamplingFunction};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::commands::Command;
use crate::error::CliError;

pub const TOOL: &str = "iet";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// An IET given inline or as a path to a JSON spec file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IetSource {
    Inline(IetSpec),
    Path(PathBuf),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSource {
    Inline(FunctionSpec),
    Path(PathBuf),
}

/// Contents of a `--config` file. Every field is optional; flags win.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub iet: Option<IetSource>,
    pub function: Option<FunctionSource>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
}

/// A fully resolved run. Its JSON form is echoed into every artifact and is
/// enough to reproduce it; the thread count is deliberately absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iet: Option<IetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    pub command: Command,
}

impl RunConfig {
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configs serialize")
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn iet(&self) -> Result<Iet, CliError> {
        let spec = self
            .iet
            .as_ref()
            .ok_or_else(|| CliError::usage("this command needs an IET (--perm/--lengths, --rotation or a config file)"))?;
        spec.build().map_err(CliError::usage_from)
    }

    pub fn function(&self) -> Result<SamplingFunction, CliError> {
        let spec = self
            .function
            .as_ref()
            .ok_or_else(|| CliError::usage("this command needs a sampling function (--function)"))?;
        spec.build().map_err(CliError::usage_from)
    }

    pub fn function_or_default(&self) -> Result<SamplingFunction, CliError> {
        match &self.function {
            Some(_) => self.function(),
            None => Ok(SamplingFunction::cosine(1.0)),
        }
    }
}

pub fn read_config_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg: ConfigFile = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    if let Some(IetSource::Path(p)) = &cfg.iet {
        cfg.iet = Some(IetSource::Inline(read_json(&base.join(p))?));
    }
    if let Some(FunctionSource::Path(p)) = &cfg.function {
        cfg.function = Some(FunctionSource::Inline(read_json(&base.join(p))?));
    }
    Ok(cfg)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid {}: {e}", path.display())))
}

/// Builds an IET spec from `--perm` and `--lengths`.
pub fn iet_from_flags(perm: &str, lengths: &str, rational: bool) -> Result<IetSpec, CliError> {
    let perm = perm
        .parse::<iet_spectral::Permutation>()
        .map_err(CliError::usage_from)?;
    let lengths = lengths
        .split(',')
        .map(|s| LengthValue::Text(s.trim().to_string()))
        .collect();
    let spec = IetSpec {
        perm: perm.image().to_vec(),
        lengths,
        mode: if rational {
            iet_spectral::iet::ArithmeticMode::Rational
        } else {
            iet_spectral::iet::ArithmeticMode::Float
        },
    };
    spec.build().map_err(CliError::usage_from)?;
    Ok(spec)
}

/// `golden`, or a rotation number as a decimal or `p/q`.
pub fn iet_from_rotation(alpha: &str, rational: bool) -> Result<IetSpec, CliError> {
    if alpha == "golden" {
        if rational {
            return Err(CliError::usage("the golden rotation has no exact rational form"));
        }
        return Ok(Iet::golden_rotation().to_spec());
    }
    let q = iet_spectral::iet::parse_rational(alpha).map_err(CliError::usage_from)?;
    let t = if rational {
        Iet::rotation_exact(q)
    } else {
        Iet::rotation(iet_spectral::iet::rational_to_f64(&q))
    };
    Ok(t.map_err(CliError::usage_from)?.to_spec())
}

/// `constant:C`, `cosine:L`, `trig:C0;a1,a2;b1,b2`, or an inline JSON spec.
pub fn parse_function(text: &str) -> Result<FunctionSpec, CliError> {
    let text = text.trim();
    let spec = if text.starts_with('{') {
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("invalid function JSON: {e}")))?
    } else {
        let (name, params) = text.split_once(':').unwrap_or((text, ""));
        let kind = match name {
            "constant" => FunctionKind::Constant { c: parse_f64(params)? },
            "cosine" => FunctionKind::Cosine {
                lambda: parse_f64(params)?,
            },
            "trig" => {
                let parts: Vec<&str> = params.split(';').collect();
                if parts.len() != 3 {
                    return Err(CliError::usage("trig expects C0;a1,a2,...;b1,b2,..."));
                }
                FunctionKind::TrigPolynomial {
                    constant: parse_f64(parts[0])?,
                    cos: parse_list(parts[1])?,
                    sin: parse_list(parts[2])?,
                }
            }
            other => return Err(CliError::usage(format!("unknown function family {other:?}"))),
        };
        FunctionSpec {
            kind,
            metadata: Default::default(),
        }
    };
    spec.build().map_err(CliError::usage_from)?;
    Ok(spec)
}

pub fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::usage(format!("cannot read {s:?} as a number")))
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_f64).collect()
}

/// Writes the header and body of an artifact.
pub fn render(cfg: &RunConfig, body: &Body) -> String {
    let config = cfg.canonical_json();
    let hash = cfg.hash();
    match body {
        Body::Json(value) => {
            let doc = serde_json::json!({
                "tool": TOOL,
                "version": VERSION,
                "config_hash": hash,
                "config": serde_json::from_str::<serde_json::Value>(&config).expect("valid JSON"),
                "result": value,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("values serialize");
            s.push('\n');
            s
        }
        Body::Csv { header, rows } => {
            let mut s = format!("# tool: {TOOL} {VERSION}\n# config_hash: {hash}\n# config: {config}\n");
            s.push_str(&header.join(","));
            s.push('\n');
            for row in rows {
                s.push_str(&row.join(","));
                s.push('\n');
            }
            s
        }
        Body::Dot(dot) => format!("// tool: {TOOL} {VERSION}\n// config_hash: {hash}\n// config: {config}\n{dot}"),
    }
}

pub enum Body {
    Json(serde_json::Value),
    Csv {
        header: Vec<&'static str>,
        rows: Vec<Vec<String>>,
    },
    Dot(String),
}

/// Recovers the echoed config of an artifact written by [`render`].
pub fn config_of_artifact(text: &str) -> Result<RunConfig, CliError> {
    let bad = |e: String| CliError::usage(format!("cannot recover config from artifact: {e}"));
    if text.trim_start().starts_with('{') {
        let doc: serde_json::Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let config = doc.get("config").ok_or_else(|| bad("no \"config\" key".to_string()))?;
        return serde_json::from_value(config.clone()).map_err(|e| bad(e.to_string()));
    }
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix("# config: ").or_else(|| l.strip_prefix("// config: ")))
        .ok_or_else(|| bad("no config header line".to_string()))?;
    serde_json::from_str(line).map_err(|e| bad(e.to_string()))
}
