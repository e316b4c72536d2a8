//! Subcommands. Each one reads only its resolved [`RunConfig`] and returns
//! the artifact body, so a replay of the echoed config is the same run.

use clap::{Args, Subcommand};
use iet_spectral::cocycle::{
    ac_indicator, base_points, bulk_spectrum, lyapunov_grid, truncated_spectrum, uniform_grid, Potential,
    DEFAULT_AC_TAU, EDGE_LAYER, EDGE_MASS,
};
use iet_spectral::gordon::{
    build_liouville_rotation, find_return_times, gordon_certificate, ContinuedFraction, Growth,
    DEFAULT_QUOTIENT_BITS,
};
use iet_spectral::iet::{parse_rational, ArithmeticMode};
use iet_spectral::permutation::{classify, DiscontinuityGraph};
use iet_spectral::sampling::{kotani_pair_witness, scan_maincond, DEFAULT_TAU};
use iet_spectral::Permutation;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{parse_f64, Body, Format, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Combinatorics of a permutation: irreducibility, rotation class,
    /// discontinuity graph, Type W trace and classification.
    Perm(PermArgs),
    /// Orbit segment `Tⁿ(w)` for `n` in `from..=to`.
    Orbit(OrbitArgs),
    /// Searches endpoint orbits for a Keane violation.
    Keane(KeaneArgs),
    /// First discontinuity of `f ∘ Tⁿ` with a gap above `tau`.
    Scan(ScanArgs),
    /// Kotani pair sequences around a discontinuity of `f ∘ Tⁿ`.
    PairWitness(PairWitnessArgs),
    /// Lyapunov exponents on an energy grid (CSV: E, mean, stderr, n, m).
    Lyapunov(LyapunovArgs),
    /// Eigenvalues of a Dirichlet truncation (CSV: index, eigenvalue).
    Spectrum(SpectrumArgs),
    /// Share of the spectrum where the Lyapunov exponent is below `tau`.
    AcReport(AcArgs),
    /// Gordon certificate along near-periods of one orbit.
    Gordon(GordonArgs),
    /// Liouville rotation number from an approximation target.
    LiouvilleBuild(LiouvilleArgs),
    /// Shift `l` aligning the orbits of two points over `|m| ≤ n`.
    Align(AlignArgs),
    /// Reruns the config echoed in an artifact.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PermArgs {
    /// Permutation in one-line notation, e.g. "3 2 1".
    pub permutation: String,
    /// Emit the discontinuity graph in DOT instead of the JSON report.
    #[arg(long)]
    #[serde(default)]
    pub dot: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OrbitArgs {
    /// Base point, decimal or `p/q`.
    #[arg(long, allow_hyphen_values = true)]
    pub w: String,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub from: i64,
    #[arg(long, default_value_t = 20, allow_hyphen_values = true)]
    pub to: i64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct KeaneArgs {
    #[arg(long, default_value_t = 100_000)]
    pub horizon: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 10)]
    pub n_max: u64,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PairWitnessArgs {
    /// Power `n`; located by a scan when omitted.
    #[arg(long)]
    pub n: Option<u64>,
    /// Discontinuity `ω_d` of `f ∘ Tⁿ`; located by a scan when omitted.
    #[arg(long)]
    pub wd: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub depth: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [10u64, 20, 40, 80, 160, 320])]
    pub ks: Vec<u64>,
    /// Horizon of the locating scan.
    #[arg(long, default_value_t = 10)]
    pub n_max: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LyapunovArgs {
    /// `lo:hi:count` for a uniform grid, or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub energies: String,
    /// Orbit length per base point.
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    /// Number of base points.
    #[arg(long, default_value_t = 8)]
    pub m: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    /// Truncation size `M`.
    #[arg(long, default_value_t = 1000)]
    pub size: usize,
    /// Base point; drawn from the seed when omitted.
    #[arg(long)]
    pub w: Option<f64>,
    /// Drop eigenvalues whose eigenvectors live at the truncation edges.
    #[arg(long)]
    #[serde(default)]
    pub bulk: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AcArgs {
    #[arg(long, default_value_t = DEFAULT_AC_TAU)]
    pub tau: f64,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Truncation size used to locate the spectrum.
    #[arg(long, default_value_t = 1000)]
    pub size: usize,
    #[arg(long, default_value_t = 200)]
    pub grid_points: usize,
    /// Base point of the truncation; drawn from the seed when omitted.
    #[arg(long)]
    pub w: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GordonArgs {
    #[arg(long, default_value_t = 0.1)]
    pub w: f64,
    /// Comma-separated near-periods. Defaults to the convergent
    /// denominators of an exact rotation, else to detected return times.
    #[arg(long, value_delimiter = ',')]
    pub qs: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0f64])]
    pub cs: Vec<f64>,
    /// Search range for return times.
    #[arg(long, default_value_t = 1000)]
    pub q_max: u64,
    #[arg(long, default_value_t = 5)]
    pub top: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LiouvilleArgs {
    /// `exp:C` for `e^{−Cq}` or `power:P` for `q^{−P}`.
    #[arg(long, default_value = "exp:3")]
    pub growth: String,
    #[arg(long, default_value_t = 3)]
    pub k_max: usize,
    #[arg(long, default_value_t = DEFAULT_QUOTIENT_BITS)]
    pub max_bits: u64,
    /// Exact base point for the orbit check of the bounds.
    #[arg(long, default_value = "1/10")]
    pub verify_w: String,
    #[arg(long, default_value_t = 200)]
    pub verify_j: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AlignArgs {
    #[arg(long)]
    pub w: f64,
    #[arg(long)]
    pub w2: f64,
    #[arg(long, default_value_t = 5)]
    pub n: u64,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 100_000)]
    pub search_limit: u64,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Artifact whose embedded config is rerun.
    pub artifact: std::path::PathBuf,
}

impl Command {
    /// Output format when `--format` is not given.
    pub fn default_format(&self) -> Format {
        match self {
            Command::Orbit(_) | Command::Lyapunov(_) | Command::Spectrum(_) => Format::Csv,
            _ => Format::Json,
        }
    }

    fn supports_csv(&self) -> bool {
        self.default_format() == Format::Csv
    }
}

pub fn run(cfg: &RunConfig) -> Result<Body, CliError> {
    if cfg.format == Format::Csv && !cfg.command.supports_csv() {
        return Err(CliError::usage("this command only writes JSON reports"));
    }
    match &cfg.command {
        Command::Perm(a) => perm(cfg, a),
        Command::Orbit(a) => orbit(cfg, a),
        Command::Keane(a) => keane(cfg, a),
        Command::Scan(a) => scan(cfg, a),
        Command::PairWitness(a) => pair_witness(cfg, a),
        Command::Lyapunov(a) => lyapunov(cfg, a),
        Command::Spectrum(a) => spectrum(cfg, a),
        Command::AcReport(a) => ac_report(cfg, a),
        Command::Gordon(a) => gordon(cfg, a),
        Command::LiouvilleBuild(a) => liouville(a),
        Command::Align(a) => align(cfg, a),
        Command::Replay(_) => Err(CliError::usage("replay cannot be nested")),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn perm(cfg: &RunConfig, a: &PermArgs) -> Result<Body, CliError> {
    let p: Permutation = a.permutation.parse().map_err(CliError::usage_from)?;
    if !p.is_irreducible() {
        eprintln!("warning: permutation {p} is reducible; only the basic combinatorics are reported");
        if a.dot {
            return Err(CliError::usage("the discontinuity graph needs an irreducible permutation"));
        }
        return Ok(Body::Json(json!({
            "permutation": p.to_string(),
            "irreducible": false,
            "warning": "reducible permutation",
            "rotation_class": p.rotation_class(),
        })));
    }
    let graph = DiscontinuityGraph::new(&p)?;
    if a.dot {
        return Ok(Body::Dot(graph.to_dot()));
    }
    let f = cfg.function_or_default()?;
    let report = classify(&p, f.metadata())?;
    Ok(Body::Json(json!({
        "permutation": p.to_string(),
        "irreducible": true,
        "rotation_class": p.rotation_class(),
        "type_w": report.type_w.verdict,
        "graph": graph.to_json(),
        "classification": to_value(&report),
    })))
}

fn orbit(cfg: &RunConfig, a: &OrbitArgs) -> Result<Body, CliError> {
    let t = cfg.iet()?;
    if a.to < a.from {
        return Err(CliError::usage("--to must not be below --from"));
    }
    let f = cfg.function.as_ref().map(|_| cfg.function()).transpose()?;
    let points: Vec<(String, f64)> = match t.mode() {
        ArithmeticMode::Rational => {
            let w = parse_rational(&a.w).map_err(CliError::usage_from)?;
            t.orbit_exact(&w, a.from, a.to + 1)?
                .iter()
                .map(|x| (x.to_string(), iet_spectral::iet::rational_to_f64(x)))
                .collect()
        }
        ArithmeticMode::Float => t
            .orbit(parse_f64(&a.w)?, a.from, a.to + 1)?
            .into_iter()
            .map(|x| (x.to_string(), x))
            .collect(),
    };
    let rows: Vec<Vec<String>> = points
        .iter()
        .zip(a.from..)
        .map(|((text, x), n)| {
            let mut row = vec![n.to_string(), text.clone()];
            if let Some(f) = &f {
                row.push(f.value(*x).to_string());
            }
            row
        })
        .collect();
    let header = if f.is_some() {
        vec!["n", "point", "f"]
    } else {
        vec!["n", "point"]
    };
    Ok(table(cfg, header, rows))
}

fn table(cfg: &RunConfig, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Body {
    match cfg.format {
        Format::Csv => Body::Csv { header, rows },
        Format::Json => Body::Json(Value::Array(
            rows.into_iter()
                .map(|row| {
                    let obj = header
                        .iter()
                        .zip(row)
                        .map(|(k, v)| {
                            let v = if let Ok(i) = v.parse::<i64>() {
                                json!(i)
                            } else {
                                v.parse::<f64>()
                                    .ok()
                                    .and_then(|x| serde_json::Number::from_f64(x).map(Value::Number))
                                    .unwrap_or(Value::String(v))
                            };
                            (k.to_string(), v)
                        })
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )),
    }
}

fn keane(cfg: &RunConfig, a: &KeaneArgs) -> Result<Body, CliError> {
    let t = cfg.iet()?;
    let verdict = t.keane_falsify(a.horizon);
    let verified = verdict.witness.as_ref().map(|w| w.verify(&t));
    let mut v = to_value(&verdict);
    v["witness_verified"] = json!(verified);
    Ok(Body::Json(v))
}

fn scan(cfg: &RunConfig, a: &ScanArgs) -> Result<Body, CliError> {
    let t = cfg.iet()?;
    let f = cfg.function()?;
    let witness = scan_maincond(&t, &f, a.n_max, a.tau)?;
    let numeric = witness
        .as_ref()
        .map(|w| -> Result<Value, CliError> {
            let gaps: Vec<Value> = [1e-6, 1e-9]
                .iter()
                .map(|&h| Ok(json!({"h": h, "gap": w.numeric_gap(&t, &f, h)?})))
                .collect::<Result<_, CliError>>()?;
            Ok(Value::Array(gaps))
        })
        .transpose()?;
    Ok(Body::Json(json!({
        "n_max": a.n_max,
        "tau": a.tau,
        "witness": witness.as_ref().map(to_value),
        "numeric_gaps": numeric,
        "note": witness.is_none().then_some("no jump above tau up to n_max; this does not prove continuity"),
    })))
}

fn pair_witness(cfg: &RunConfig, a: &PairWitnessArgs) -> Result<Body, CliError> {
    let t = cfg.iet()?;
    let f = cfg.function()?;
    let (n, wd) = match (a.n, a.wd) {
        (Some(n), Some(wd)) => (n, wd),
        (None, None) => {
            let w = scan_maincond(&t, &f, a.n_max, DEFAULT_TAU)?
                .ok_or_else(|| CliError::numeric(format!("no discontinuity of f∘Tⁿ found up to n = {}", a.n_max)))?;
            (w.n, w.wd)
        }
        _ => return Err(CliError::usage("give both --n and --wd, or neither")),
    };
    let report = kotani_pair_witness(&t, &f, n, wd, a.depth, &a.ks)?;
    Ok(Body::Json(to_value(&report)))
}

fn energy_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [lo, hi, count] => {
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("bad grid size {count:?}")))?;
            let (lo, hi) = (parse_f64(lo)?, parse_f64(hi)?);
            if count < 1 || (count > 1 && hi <= lo) {
                return Err(CliError::usage("grid needs lo < hi and at least one point"));
            }
            Ok(if count == 1 { vec![lo] } else { uniform_grid(lo, hi, count) })
        }
        [list] => crate::config::parse_list(list),
        _ => Err(CliError::usage("energies must be lo:hi:count or a comma-separated list")),
    }
}

fn lyapunov(cfg: &RunConfig, a: &LyapunovArgs) -> Result<Body, CliError> {
    let t = cfg.iet()?;
    let f = cfg.function()?;
    let grid = energy_grid(&a.energies)?;
    let est = lyapunov_grid(&t, &f, &grid, a.n, a.m, cfg.seed)?;
    let rows = est
        .iter()
        .map(|e| {
            vec![
                e.energy.to_string(),
                e.mean.to_string(),
                e.stderr.to_string(),
                e.n.to_string(),
                e.m_samples.to_string(),
            ]
        })
        .collect();
    Ok(table(cfg, vec!["E", "mean", "stderr", "n", "m"], rows))
}

fn base_point(cfg: &RunConfig, w: Option<f64>) -> f64 {
    w.unwrap_or_else(|| base_points(cfg.seed, 1)[0])
}

fn spectrum(cfg: &RunConfig, a: &SpectrumArgs) -> Result<Body, CliError> {
    let t = cfg.iet()?;
    let f = cfg.function()?;
    let w = base_point(cfg, a.w);
    let v = Potential::sample(&t, &f, w, 0, a.size as i64)?;
    let spec = if a.bulk {
        bulk_spectrum(&v, a.size, EDGE_LAYER, EDGE_MASS)?
    } else {
        truncated_spectrum(&v, a.size)?
    };
    let rows = spec
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, e)| vec![k.to_string(), e.to_string()])
        .collect();
    Ok(table(cfg, vec!["index", "eigenvalue"], rows))
}

fn ac_report(cfg: &RunConfig, a: &AcArgs) -> Result<Body, CliError> {
    let t = cfg.iet()?;
    let f = cfg.function()?;
    let w = base_point(cfg, a.w);
    let v = Potential::sample(&t, &f, w, 0, a.size as i64)?;
    let spec = truncated_spectrum(&v, a.size)?;
    let e = &spec.eigenvalues;
    let grid = uniform_grid(e[0] - 0.1, e[e.len() - 1] + 0.1, a.grid_points.max(2));
    let est = lyapunov_grid(&t, &f, &grid, a.n, a.m, cfg.seed)?;
    let report = ac_indicator(&est, &spec, a.tau)?;
    let keane = t.keane_falsify(100_000);
    let mut value = to_value(&report);
    value["base_point"] = json!(w);
    value["keane_status"] = to_value(&keane.status);
    Ok(Body::Json(value))
}

fn gordon(cfg: &RunConfig, a: &GordonArgs) -> Result<Body, CliError> {
    let t = cfg.iet()?;
    let f = cfg.function()?;
    let qs: Vec<BigInt> = match &a.qs {
        Some(list) => list
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<BigInt>()
                    .map_err(|_| CliError::usage(format!("bad q value {s:?}")))
            })
            .collect::<Result<_, _>>()?,
        None => match (t.exact_lengths(), t.permutation().rotation_class()) {
            (Some(lengths), Some(_)) if t.r() == 2 => ContinuedFraction::from_rational(&lengths[1])
                .denominators()
                .into_iter()
                .filter(|q| *q > BigInt::from(1))
                .collect(),
            _ => {
                let mut qs: Vec<u64> = find_return_times(&t, a.w, a.q_max, a.top)?
                    .iter()
                    .map(|r| r.q)
                    .collect();
                qs.sort_unstable();
                qs.into_iter().map(BigInt::from).collect()
            }
        },
    };
    if qs.is_empty() {
        return Err(CliError::numeric("no near-periods to test"));
    }
    let cert = gordon_certificate(&t, &f, a.w, &qs, &a.cs)?;
    Ok(Body::Json(to_value(&cert)))
}

fn parse_growth(text: &str) -> Result<Growth, CliError> {
    let (kind, value) = text
        .split_once(':')
        .ok_or_else(|| CliError::usage("growth must be exp:C or power:P"))?;
    let v = parse_f64(value)?;
    match kind {
        "exp" => Ok(Growth::Exponential { c: v }),
        "power" => Ok(Growth::Power { p: v }),
        _ => Err(CliError::usage(format!("unknown growth {kind:?}"))),
    }
}

fn liouville(a: &LiouvilleArgs) -> Result<Body, CliError> {
    let growth = parse_growth(&a.growth)?;
    let l = build_liouville_rotation(growth, a.k_max, a.max_bits)?;
    let w = parse_rational(&a.verify_w).map_err(CliError::usage_from)?;
    let checks = l.verify_by_orbit(&w, a.verify_j)?;
    let mut value = to_value(&l);
    value["orbit_checks"] = json!(checks);
    value["iet"] = to_value(&l.iet()?.to_spec());
    Ok(Body::Json(value))
}

fn align(cfg: &RunConfig, a: &AlignArgs) -> Result<Body, CliError> {
    let t = cfg.iet()?;
    let found = t.find_alignment(a.w, a.w2, a.n, a.eps, a.search_limit)?;
    Ok(Body::Json(json!({
        "alignment": found.as_ref().map(to_value),
        "note": found.is_none().then_some("no alignment within the search limit"),
    })))
}
