//! Sampling functions `f: [0, 1) → ℝ` and the scans of `f ∘ Tⁿ` that feed
//! the absence-of-AC-spectrum criteria.

use std::f64::consts::PI;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iet::{rational_to_f64, Iet, FLOAT_TOL};

/// Grid size used to spot-check declared metadata.
pub const METADATA_GRID: usize = 10_000;
/// Grid size for the non-degenerate maximum check.
pub const MAX_CHECK_GRID: usize = 100_000;
/// Range spread below which a function counts as constant.
pub const CONSTANT_SPREAD: f64 = 1e-9;
/// Default discontinuity threshold for scans.
pub const DEFAULT_TAU: f64 = 1e-6;

/// The supported families of sampling functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FunctionKind {
    Constant {
        c: f64,
    },
    /// `λ cos(2πx)`.
    Cosine {
        lambda: f64,
    },
    /// `c₀ + Σ_k a_k cos(2πkx) + b_k sin(2πkx)`, `k = 1, 2, …`.
    TrigPolynomial {
        constant: f64,
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
    /// Linear interpolation of `values` at sorted `breakpoints`, which run
    /// from `0` to `1`.
    PiecewiseLinear {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// `values[i]` on `[breakpoints[i], breakpoints[i+1])`; breakpoints run
    /// from `0` to `1`.
    Step {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

/// Location and modulus table `(ε, δ(ε))` of a non-degenerate maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegMax {
    pub location: f64,
    #[serde(default)]
    pub modulus: Vec<(f64, f64)>,
}

/// Declared regularity of a sampling function.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FunctionMetadata {
    pub lipschitz_constant: Option<f64>,
    /// Upper bound on `#f⁻¹({y})` over all `y`.
    pub level_set_bound: Option<usize>,
    pub nondeg_max: Option<NondegMax>,
    pub is_constant: bool,
    pub continuous: bool,
    /// Continuous with a bounded continuous derivative.
    pub differentiable: bool,
    /// Continuous as a function on the circle: `f(1⁻) = f(0)`.
    pub circle_continuous: bool,
}

/// Optional overrides read from a function spec file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MetadataOverrides {
    pub lipschitz_constant: Option<f64>,
    pub level_set_bound: Option<usize>,
    pub nondeg_max: Option<NondegMax>,
}

/// On-disk function description: `{"kind": ..., "params": ..., "metadata": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    #[serde(flatten)]
    pub kind: FunctionKind,
    #[serde(default)]
    pub metadata: MetadataOverrides,
}

impl FunctionSpec {
    pub fn build(&self) -> Result<SamplingFunction> {
        let f = SamplingFunction::new(self.kind.clone())?;
        let mut meta = f.metadata.clone();
        if self.metadata.lipschitz_constant.is_some() {
            meta.lipschitz_constant = self.metadata.lipschitz_constant;
        }
        if self.metadata.level_set_bound.is_some() {
            meta.level_set_bound = self.metadata.level_set_bound;
        }
        if self.metadata.nondeg_max.is_some() {
            meta.nondeg_max = self.metadata.nondeg_max.clone();
        }
        f.with_metadata(meta)
    }
}

/// A sampling function with spot-checked metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingFunction {
    kind: FunctionKind,
    metadata: FunctionMetadata,
}

impl SamplingFunction {
    /// Builds `f` with metadata derived from its family.
    pub fn new(kind: FunctionKind) -> Result<Self> {
        validate_kind(&kind)?;
        let metadata = derived_metadata(&kind);
        let mut f = Self { kind, metadata };
        f.metadata.is_constant = f.grid_spread() <= CONSTANT_SPREAD;
        f.verify_metadata()?;
        Ok(f)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(FunctionKind::Constant { c }).expect("constants are valid")
    }

    /// `λ cos(2πx)`.
    pub fn cosine(lambda: f64) -> Self {
        Self::new(FunctionKind::Cosine { lambda }).expect("cosines are valid")
    }

    pub fn trig_polynomial(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        Self::new(FunctionKind::TrigPolynomial { constant, cos, sin })
    }

    pub fn piecewise_linear(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(FunctionKind::PiecewiseLinear { breakpoints, values })
    }

    pub fn step(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(FunctionKind::Step { breakpoints, values })
    }

    /// Replaces the metadata after spot-checking it on a grid.
    pub fn with_metadata(mut self, mut metadata: FunctionMetadata) -> Result<Self> {
        metadata.is_constant = self.grid_spread() <= CONSTANT_SPREAD;
        self.metadata = metadata;
        self.verify_metadata()?;
        Ok(self)
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn metadata(&self) -> &FunctionMetadata {
        &self.metadata
    }

    pub fn is_constant(&self) -> bool {
        self.metadata.is_constant
    }

    pub fn to_spec(&self) -> FunctionSpec {
        FunctionSpec {
            kind: self.kind.clone(),
            metadata: MetadataOverrides {
                lipschitz_constant: self.metadata.lipschitz_constant,
                level_set_bound: self.metadata.level_set_bound,
                nondeg_max: self.metadata.nondeg_max.clone(),
            },
        }
    }

    /// `f(x)` for `x ∈ [0, 1)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::Domain(x));
        }
        Ok(self.value(x))
    }

    /// Unchecked evaluation.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match &self.kind {
            FunctionKind::Constant { c } => *c,
            FunctionKind::Cosine { lambda } => lambda * (2.0 * PI * x).cos(),
            FunctionKind::TrigPolynomial { constant, cos, sin } => {
                trig_value(*constant, cos, sin, x)
            }
            FunctionKind::PiecewiseLinear { breakpoints, values } => {
                let i = piece(breakpoints, x);
                let t = (x - breakpoints[i]) / (breakpoints[i + 1] - breakpoints[i]);
                values[i] + t * (values[i + 1] - values[i])
            }
            FunctionKind::Step { breakpoints, values } => values[piece(breakpoints, x)],
        }
    }

    /// `lim_{y ↑ x} f(y)` for `x ∈ (0, 1]`.
    pub fn left_limit(&self, x: f64) -> f64 {
        match &self.kind {
            FunctionKind::Constant { c } => *c,
            FunctionKind::Cosine { lambda } if x >= 1.0 => *lambda,
            FunctionKind::TrigPolynomial { constant, cos, .. } if x >= 1.0 => {
                constant + cos.iter().sum::<f64>()
            }
            FunctionKind::Cosine { .. } | FunctionKind::TrigPolynomial { .. } => self.value(x),
            FunctionKind::PiecewiseLinear { values, .. } => {
                if x >= 1.0 {
                    *values.last().expect("validated")
                } else {
                    self.value(x)
                }
            }
            FunctionKind::Step { breakpoints, values } => {
                // cell whose closure contains x from the left
                let m = values.len();
                let i = breakpoints[1..m].partition_point(|b| *b < x);
                values[i]
            }
        }
    }

    /// `f(x) − f(y)` for exact arguments, without cancellation for close
    /// `x` and `y`.
    pub fn difference_exact(&self, x: &BigRational, y: &BigRational) -> f64 {
        let diff = x - y;
        let sum = x + y;
        match &self.kind {
            FunctionKind::Constant { .. } => 0.0,
            FunctionKind::Cosine { lambda } => {
                // cos a − cos b = −2 sin((a+b)/2) sin((a−b)/2)
                -2.0 * lambda * sin_pi(&sum) * sin_pi(&diff)
            }
            FunctionKind::TrigPolynomial { cos, sin, .. } => {
                let mut acc = 0.0;
                for k in 1..=cos.len().max(sin.len()) {
                    let kb = BigRational::from_integer(k.into());
                    let (s, d) = (&sum * &kb, &diff * &kb);
                    let a = cos.get(k - 1).copied().unwrap_or(0.0);
                    let b = sin.get(k - 1).copied().unwrap_or(0.0);
                    // sin a − sin b = 2 cos((a+b)/2) sin((a−b)/2)
                    acc += -2.0 * a * sin_pi(&s) * sin_pi(&d) + 2.0 * b * cos_pi(&s) * sin_pi(&d);
                }
                acc
            }
            FunctionKind::PiecewiseLinear { breakpoints, values } => {
                let (xf, yf) = (rational_to_f64(x), rational_to_f64(y));
                let (i, j) = (piece(breakpoints, xf), piece(breakpoints, yf));
                if i == j {
                    let slope = (values[i + 1] - values[i]) / (breakpoints[i + 1] - breakpoints[i]);
                    slope * rational_to_f64(&diff)
                } else {
                    self.value(xf) - self.value(yf)
                }
            }
            FunctionKind::Step { .. } => {
                self.value(rational_to_f64(x)) - self.value(rational_to_f64(y))
            }
        }
    }

    fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..METADATA_GRID).map(|i| self.value(i as f64 / METADATA_GRID as f64))
    }

    fn grid_spread(&self) -> f64 {
        let (lo, hi) = self
            .grid()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi - lo
    }

    /// Sup norm on the metadata grid.
    pub fn sup_norm(&self) -> f64 {
        self.grid().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Minimum and maximum on the metadata grid.
    pub fn range(&self) -> (f64, f64) {
        self.grid()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    fn verify_metadata(&self) -> Result<()> {
        let n = METADATA_GRID;
        let h = 1.0 / n as f64;
        let vals: Vec<f64> = self.grid().collect();
        if let Some(k) = self.metadata.lipschitz_constant {
            if !(k >= 0.0) {
                return Err(Error::Precondition(format!("Lipschitz constant {k} is negative")));
            }
            for (i, w) in vals.windows(2).enumerate() {
                let ratio = (w[1] - w[0]).abs() / h;
                if ratio > k * (1.0 + 1e-9) + 1e-9 {
                    return Err(Error::Precondition(format!(
                        "declared Lipschitz constant {k} violated near x = {}: ratio {ratio}",
                        i as f64 * h
                    )));
                }
            }
        }
        if let Some(bound) = self.metadata.level_set_bound {
            if let Some(i) = vals.windows(2).position(|w| w[0] == w[1]) {
                return Err(Error::Precondition(format!(
                    "f is flat near x = {}, so some level set is infinite (declared bound {bound})",
                    i as f64 * h
                )));
            }
            let (lo, hi) = self.range();
            let cyclic = self.metadata.circle_continuous;
            for i in 1..100 {
                let y = lo + (hi - lo) * (i as f64 + 0.5) / 100.0;
                let count = crossings(&vals, y, cyclic);
                if count > bound {
                    return Err(Error::Precondition(format!(
                        "level set at {y} has at least {count} points, declared bound is {bound}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn validate_kind(kind: &FunctionKind) -> Result<()> {
    let check_table = |bps: &[f64], n_values: usize, name: &str| -> Result<()> {
        if bps.len() < 2 || bps[0] != 0.0 || *bps.last().expect("len ≥ 2") != 1.0 {
            return Err(Error::Argument(format!(
                "{name} breakpoints must start at 0 and end at 1"
            )));
        }
        if bps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument(format!("{name} breakpoints must increase")));
        }
        if n_values != bps.len() {
            return Err(Error::Argument(format!(
                "{name} expects {} values, got {n_values}",
                bps.len()
            )));
        }
        Ok(())
    };
    match kind {
        FunctionKind::PiecewiseLinear { breakpoints, values } => {
            check_table(breakpoints, values.len(), "piecewise-linear")
        }
        FunctionKind::Step { breakpoints, values } => {
            check_table(breakpoints, values.len() + 1, "step")
        }
        _ => Ok(()),
    }
}

fn derived_metadata(kind: &FunctionKind) -> FunctionMetadata {
    match kind {
        FunctionKind::Constant { .. } => FunctionMetadata {
            lipschitz_constant: Some(0.0),
            is_constant: true,
            continuous: true,
            differentiable: true,
            circle_continuous: true,
            ..Default::default()
        },
        FunctionKind::Cosine { lambda } => FunctionMetadata {
            lipschitz_constant: Some(2.0 * PI * lambda.abs()),
            level_set_bound: (*lambda != 0.0).then_some(2),
            nondeg_max: (*lambda != 0.0).then(|| NondegMax {
                location: if *lambda > 0.0 { 0.0 } else { 0.5 },
                modulus: Vec::new(),
            }),
            continuous: true,
            differentiable: true,
            circle_continuous: true,
            ..Default::default()
        },
        FunctionKind::TrigPolynomial { cos, sin, .. } => {
            let lip: f64 = cos
                .iter()
                .enumerate()
                .chain(sin.iter().enumerate())
                .map(|(i, a)| 2.0 * PI * (i + 1) as f64 * a.abs())
                .sum();
            FunctionMetadata {
                lipschitz_constant: Some(lip),
                continuous: true,
                differentiable: true,
                circle_continuous: true,
                ..Default::default()
            }
        }
        FunctionKind::PiecewiseLinear { breakpoints, values } => {
            let lip = breakpoints
                .windows(2)
                .zip(values.windows(2))
                .map(|(b, v)| ((v[1] - v[0]) / (b[1] - b[0])).abs())
                .fold(0.0, f64::max);
            FunctionMetadata {
                lipschitz_constant: Some(lip),
                continuous: true,
                circle_continuous: values.first() == values.last(),
                ..Default::default()
            }
        }
        FunctionKind::Step { .. } => FunctionMetadata::default(),
    }
}

fn piece(breakpoints: &[f64], x: f64) -> usize {
    let m = breakpoints.len() - 1;
    breakpoints[1..m].partition_point(|b| *b <= x)
}

fn trig_value(constant: f64, cos: &[f64], sin: &[f64], x: f64) -> f64 {
    let mut acc = constant;
    for (k, a) in cos.iter().enumerate() {
        acc += a * (2.0 * PI * (k + 1) as f64 * x).cos();
    }
    for (k, b) in sin.iter().enumerate() {
        acc += b * (2.0 * PI * (k + 1) as f64 * x).sin();
    }
    acc
}

/// Reduces a rational modulo 2 into `[-1, 1)` before converting, so the
/// trigonometric argument keeps its relative precision.
fn reduce_mod_two(q: &BigRational) -> f64 {
    let two = BigRational::from_integer(2.into());
    let (n, d) = (q.numer(), q.denom());
    let period = d * 2u32;
    let r = n.mod_floor(&period);
    let mut red = BigRational::new(r, d.clone());
    if red >= BigRational::from_integer(1.into()) {
        red -= two;
    }
    rational_to_f64(&red)
}

/// `sin(π q)` accurate for tiny `q`.
fn sin_pi(q: &BigRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    let r = reduce_mod_two(q);
    if r.abs() < 1e-3 {
        // keep full relative precision for very small arguments
        let a = PI * r;
        return a - a * a * a / 6.0 + a.powi(5) / 120.0;
    }
    (PI * r).sin()
}

fn cos_pi(q: &BigRational) -> f64 {
    (PI * reduce_mod_two(q)).cos()
}

/// Number of crossings of level `y` along the sampled values.
fn crossings(vals: &[f64], y: f64, cyclic: bool) -> usize {
    let sign = |v: f64| v > y;
    let mut count = vals.windows(2).filter(|w| sign(w[0]) != sign(w[1])).count();
    if cyclic {
        if let (Some(a), Some(b)) = (vals.last(), vals.first()) {
            if sign(*a) != sign(*b) {
                count += 1;
            }
        }
    }
    count
}

/// `|lim_{ω ↑ wd} f(Tⁿω) − lim_{ω ↓ wd} f(Tⁿω)|`.
pub fn power_gap(t: &Iet, f: &SamplingFunction, n: u64, wd: f64) -> Result<f64> {
    if !(wd > 0.0 && wd < 1.0) {
        return Err(Error::Domain(wd));
    }
    let left = t.left_limit_power(wd, n)?;
    let right = t.power(wd, n as i64)?;
    Ok((f.left_limit(left) - f.value(right)).abs())
}

/// A point where `f ∘ Tⁿ` jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainCondWitness {
    pub n: u64,
    pub wd: f64,
    pub gap: f64,
}

impl MainCondWitness {
    /// `|f(Tⁿ(wd − h)) − f(Tⁿ(wd + h))|`, the two-sided numeric check.
    pub fn numeric_gap(&self, t: &Iet, f: &SamplingFunction, h: f64) -> Result<f64> {
        let a = t.power(self.wd - h, self.n as i64)?;
        let b = t.power(self.wd + h, self.n as i64)?;
        Ok((f.value(a) - f.value(b)).abs())
    }
}

/// First jump of `f ∘ Tⁿ` with gap above `tau`, in lexicographic
/// `(n, wd)` order. `None` does not prove that all powers are continuous.
pub fn scan_maincond(
    t: &Iet,
    f: &SamplingFunction,
    n_max: u64,
    tau: f64,
) -> Result<Option<MainCondWitness>> {
    if n_max < 1 {
        return Err(Error::Argument("n_max must be at least 1".to_string()));
    }
    if f.is_constant() {
        return Ok(None);
    }
    for n in 1..=n_max {
        for wd in t.discontinuities_of_power(n) {
            let gap = power_gap(t, f, n, wd)?;
            if gap > tau {
                return Ok(Some(MainCondWitness { n, wd, gap }));
            }
        }
    }
    Ok(None)
}

/// One row of a Kotani-pair witness: `ω_k = wd − 1/k`, `ω̂_k = wd + 1/k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRow {
    pub k: u64,
    /// `|f(Tⁿ ω_k) − f(Tⁿ ω̂_k)|`.
    pub forward_gap: f64,
    /// `max_{−depth ≤ m ≤ 0} |f(Tᵐ ω_k) − f(Tᵐ ω̂_k)|`.
    pub backward_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub n: u64,
    pub wd: f64,
    pub depth: u64,
    pub power_gap: f64,
    pub rows: Vec<WitnessRow>,
    pub forward_converges: bool,
    pub backward_shrinks: bool,
    pub verdict: bool,
}

/// Relative slack allowed in the monotone trends of a witness.
pub const WITNESS_SLACK: f64 = 0.10;

/// Builds the two sequences `ω_k ↑ wd`, `ω̂_k ↓ wd` and measures the forward
/// separation at step `n` against the backward separation over
/// `−depth..=0`.
pub fn kotani_pair_witness(
    t: &Iet,
    f: &SamplingFunction,
    n: u64,
    wd: f64,
    depth: u64,
    ks: &[u64],
) -> Result<WitnessReport> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::Argument("ks must be non-empty positive integers".to_string()));
    }
    let on_jump = t
        .discontinuities_of_power(n)
        .iter()
        .any(|d| (d - wd).abs() < FLOAT_TOL);
    if !on_jump {
        return Err(Error::Precondition(format!(
            "{wd} is not a discontinuity of T^{n}"
        )));
    }
    if let Some(m) = backward_discontinuity_step(t, wd, depth) {
        return Err(Error::Precondition(format!(
            "{wd} is a discontinuity of T^-{m}, backward step {m} <= depth {depth}"
        )));
    }
    let gap = power_gap(t, f, n, wd)?;
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let h = 1.0 / k as f64;
        let (lo, hi) = (wd - h, wd + h);
        if lo < 0.0 || hi >= 1.0 {
            return Err(Error::Argument(format!("1/{k} reaches outside [0, 1) around {wd}")));
        }
        let forward_gap = (f.value(t.power(lo, n as i64)?) - f.value(t.power(hi, n as i64)?)).abs();
        let (mut x, mut y) = (lo, hi);
        let mut backward_sup = (f.value(x) - f.value(y)).abs();
        for _ in 0..depth {
            x = t.step_inverse(x);
            y = t.step_inverse(y);
            backward_sup = backward_sup.max((f.value(x) - f.value(y)).abs());
        }
        rows.push(WitnessRow {
            k,
            forward_gap,
            backward_sup,
        });
    }
    let errors: Vec<f64> = rows.iter().map(|r| (r.forward_gap - gap).abs()).collect();
    let last = rows.last().expect("ks non-empty");
    let forward_converges = gap > 0.0
        && errors.last().copied().unwrap_or(f64::INFINITY) <= WITNESS_SLACK * gap
        && non_increasing(&errors);
    let backward: Vec<f64> = rows.iter().map(|r| r.backward_sup).collect();
    let backward_shrinks = non_increasing(&backward) && last.backward_sup < last.forward_gap;
    Ok(WitnessReport {
        n,
        wd,
        depth,
        power_gap: gap,
        forward_converges,
        backward_shrinks,
        verdict: forward_converges && backward_shrinks,
        rows,
    })
}

fn non_increasing(xs: &[f64]) -> bool {
    xs.windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + WITNESS_SLACK) + 1e-12)
}

/// Smallest `m ∈ 1..=depth` with `T^{-m}` discontinuous at `w`. The jumps
/// of `T^{-m}` are the forward images `Tⁱ(s)`, `i < m`, of the interior
/// slot boundaries `s`.
pub fn backward_discontinuity_step(t: &Iet, w: f64, depth: u64) -> Option<u64> {
    let mut first: Option<u64> = None;
    for s in t.inverse().breakpoints() {
        let mut x = s;
        for i in 0..depth {
            if first.is_some_and(|m| i + 1 >= m) {
                break;
            }
            if (x - w).abs() < FLOAT_TOL {
                first = Some(i + 1);
                break;
            }
            x = t.step(x);
        }
    }
    first
}

/// Empirical Lipschitz ratio `sup |f(Tⁿx) − f(Tⁿy)| / |x − y|` over seeded
/// random pairs with separations spread log-uniformly over `[1e-6, 1e-1]`.
pub fn lipschitz_propagation(
    t: &Iet,
    f: &SamplingFunction,
    n: u64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if f.metadata().lipschitz_constant.is_none() {
        return Err(Error::Precondition(
            "lipschitz_propagation needs a declared Lipschitz constant".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup = 0.0f64;
    for _ in 0..samples {
        let x: f64 = rng.gen();
        let d = 10f64.powf(rng.gen_range(-6.0..-1.0));
        let y = if x + d < 1.0 { x + d } else { x - d };
        let dist = (x - y).abs();
        let fx = f.value(t.power(x, n as i64)?);
        let fy = f.value(t.power(y, n as i64)?);
        sup = sup.max((fx - fy).abs() / dist);
    }
    Ok(sup)
}

/// `δ(ε)` table for a declared non-degenerate maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxModulusTable {
    pub location: f64,
    pub rows: Vec<(f64, f64)>,
    pub passes: bool,
}

/// For each `ε`, the largest grid-verified `δ` with
/// `f(ω) ≥ f(ω_max) − δ ⇒ |ω − ω_max| ≤ ε`. Distances are taken on the
/// circle when `f` is circle-continuous.
pub fn nondegenerate_max_check(f: &SamplingFunction, eps_grid: &[f64]) -> Result<MaxModulusTable> {
    let loc = f
        .metadata()
        .nondeg_max
        .as_ref()
        .ok_or_else(|| Error::Precondition("no non-degenerate maximum declared".to_string()))?
        .location;
    let fmax = f.value(loc);
    let circle = f.metadata().circle_continuous;
    let n = MAX_CHECK_GRID;
    let samples: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = i as f64 / n as f64;
            let d = (x - loc).abs();
            let d = if circle { d.min(1.0 - d) } else { d };
            (d, f.value(x))
        })
        .collect();
    let rows: Vec<(f64, f64)> = eps_grid
        .iter()
        .map(|&eps| {
            let outside = samples
                .iter()
                .filter(|(d, _)| *d > eps)
                .map(|(_, v)| *v)
                .fold(f64::NEG_INFINITY, f64::max);
            let delta = if outside.is_finite() {
                fmax - outside
            } else {
                f64::INFINITY
            };
            (eps, delta)
        })
        .collect();
    let passes = !rows.is_empty() && rows.iter().all(|(_, d)| *d > 0.0);
    Ok(MaxModulusTable {
        location: loc,
        rows,
        passes,
    })
}

/// Circle distance between two rationals in `[0, 1)`.
pub fn circle_distance_exact(x: &BigRational, y: &BigRational) -> f64 {
    let d = (x - y).abs();
    let one = BigRational::from_integer(1.into());
    let alt = &one - &d;
    rational_to_f64(if d < alt { &d } else { &alt })
}
