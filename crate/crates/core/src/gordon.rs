//! Continued fractions, Liouville rotations and Gordon certificates.
//!
//! Displacements `|Tʲω − Tʲ⁺ᑫω|` are measured on the circle `ℝ/ℤ`; for a
//! rotation the interval distance is close to one whenever the orbit wraps,
//! so only the circle metric sees the near-periods.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cocycle::Potential;
use crate::error::{Error, Result};
use crate::iet::{rational_to_f64, Iet};
use crate::sampling::{circle_distance_exact, SamplingFunction};

/// Threshold the last product `s_k·e^{C q_k}` must reach for a passing verdict.
pub const GORDON_TOL: f64 = 1e-6;
/// Largest `q` for which `s_q` is computed by enumerating the orbit.
pub const EXHAUSTIVE_LIMIT: u64 = 100_000;
/// Decimal digits reported for `α`.
pub const ALPHA_DIGITS: usize = 200;
/// Default cap on the bit length of a single partial quotient.
pub const DEFAULT_QUOTIENT_BITS: u64 = 1 << 14;
/// Largest `k_max` accepted by [`build_liouville_rotation`].
pub const MAX_K: usize = 8;

/// `ln x` for a positive big integer.
pub fn ln_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().map_or(f64::INFINITY, f64::ln);
    }
    let shift = bits - 64;
    let top: BigInt = x >> shift;
    top.to_f64().map_or(f64::INFINITY, f64::ln) + shift as f64 * std::f64::consts::LN_2
}

/// `log₁₀ |q|`, `-∞` for zero.
pub fn log10_rational(q: &BigRational) -> f64 {
    if q.is_zero() {
        return f64::NEG_INFINITY;
    }
    (ln_bigint(&q.numer().abs()) - ln_bigint(&q.denom().abs())) / std::f64::consts::LN_10
}

fn frac(q: &BigRational) -> BigRational {
    q - q.floor()
}

/// Decimal expansion of `q`, truncated after `digits` places.
pub fn decimal_digits(q: &BigRational, digits: usize) -> String {
    let sign = if q.is_negative() { "-" } else { "" };
    let q = q.abs();
    let int = q.floor().to_integer();
    let scaled = (frac(&q) * BigRational::from_integer(BigInt::from(10u32).pow(digits as u32)))
        .floor()
        .to_integer();
    format!("{sign}{int}.{:0>width$}", scaled.to_string(), width = digits)
}

/// A simple continued fraction `[a₀; a₁, a₂, …]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ContinuedFraction {
    pub a0: BigInt,
    /// `a₁, a₂, …`, all positive.
    pub quotients: Vec<BigInt>,
}

impl ContinuedFraction {
    pub fn new(a0: BigInt, quotients: Vec<BigInt>) -> Result<Self> {
        if let Some(bad) = quotients.iter().find(|a| !a.is_positive()) {
            return Err(Error::Argument(format!("partial quotient {bad} is not positive")));
        }
        Ok(Self { a0, quotients })
    }

    /// Expansion of a rational by the Euclidean algorithm.
    pub fn from_rational(x: &BigRational) -> Self {
        let a0 = x.floor().to_integer();
        let mut rest = x - BigRational::from_integer(a0.clone());
        let mut quotients = Vec::new();
        while !rest.is_zero() {
            let inv = rest.recip();
            let a = inv.floor().to_integer();
            rest = inv - BigRational::from_integer(a.clone());
            quotients.push(a);
        }
        Self { a0, quotients }
    }

    /// First `terms` partial quotients of a float.
    pub fn from_f64(x: f64, terms: usize) -> Result<Self> {
        let mut q = BigRational::from_float(x)
            .ok_or_else(|| Error::Argument(format!("{x} is not finite")))?;
        let a0 = q.floor().to_integer();
        q -= BigRational::from_integer(a0.clone());
        let mut quotients = Vec::new();
        while quotients.len() < terms && !q.is_zero() {
            let inv = q.recip();
            let a = inv.floor().to_integer();
            q = inv - BigRational::from_integer(a.clone());
            quotients.push(a);
        }
        Ok(Self { a0, quotients })
    }

    pub fn len(&self) -> usize {
        self.quotients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotients.is_empty()
    }

    /// `(p_k, q_k)` for `k = 0..=len()`, with `p₀/q₀ = a₀/1`.
    pub fn convergents(&self) -> Vec<(BigInt, BigInt)> {
        let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
        let (mut p, mut q) = (self.a0.clone(), BigInt::one());
        let mut out = vec![(p.clone(), q.clone())];
        for a in &self.quotients {
            let pn = a * &p + &p_prev;
            let qn = a * &q + &q_prev;
            p_prev = std::mem::replace(&mut p, pn);
            q_prev = std::mem::replace(&mut q, qn);
            out.push((p.clone(), q.clone()));
        }
        out
    }

    pub fn denominators(&self) -> Vec<BigInt> {
        self.convergents().into_iter().map(|(_, q)| q).collect()
    }

    pub fn value(&self) -> BigRational {
        let (p, q) = self.convergents().pop().expect("at least one convergent");
        BigRational::new(p, q)
    }
}

impl fmt::Display for ContinuedFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.a0)?;
        for (i, a) in self.quotients.iter().enumerate() {
            write!(f, "{}{a}", if i == 0 { "; " } else { ", " })?;
        }
        write!(f, "]")
    }
}

impl FromStr for ContinuedFraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_err = |position: usize, message: &str| Error::Parse {
            position,
            message: message.to_string(),
        };
        let t = s.trim();
        let inner = t
            .strip_prefix('[')
            .and_then(|x| x.strip_suffix(']'))
            .ok_or_else(|| parse_err(0, "expected \"[a0; a1, a2, ...]\""))?;
        let offset = s.find('[').unwrap_or(0) + 1;
        let (head, tail) = match inner.split_once(';') {
            Some((h, t)) => (h, Some(t)),
            None => (inner, None),
        };
        let number = |text: &str, at: usize| -> Result<BigInt> {
            text.trim()
                .parse::<BigInt>()
                .map_err(|_| parse_err(at, &format!("\"{}\" is not an integer", text.trim())))
        };
        let a0 = number(head, offset)?;
        let mut quotients = Vec::new();
        if let Some(tail) = tail {
            let mut at = offset + head.len() + 1;
            if !tail.trim().is_empty() {
                for item in tail.split(',') {
                    let a = number(item, at)?;
                    if !a.is_positive() {
                        return Err(parse_err(at, "partial quotients must be positive"));
                    }
                    quotients.push(a);
                    at += item.len() + 1;
                }
            }
        }
        Ok(Self { a0, quotients })
    }
}

impl TryFrom<String> for ContinuedFraction {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ContinuedFraction> for String {
    fn from(c: ContinuedFraction) -> String {
        c.to_string()
    }
}

/// A decreasing approximation target `f: ℕ → (0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Growth {
    /// `f(q) = exp(−c q)`.
    Exponential { c: f64 },
    /// `f(q) = q^{−p}`.
    Power { p: f64 },
}

impl Growth {
    fn validate(&self) -> Result<()> {
        let v = match *self {
            Growth::Exponential { c } => c,
            Growth::Power { p } => p,
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Argument(format!("growth parameter {v} must be positive")));
        }
        Ok(())
    }

    /// `−ln f(q)`.
    pub fn neg_ln(&self, q: &BigInt) -> f64 {
        match *self {
            Growth::Exponential { c } => c * q.to_f64().unwrap_or(f64::INFINITY),
            Growth::Power { p } => p * ln_bigint(q),
        }
    }

    pub fn log10_f(&self, q: &BigInt) -> f64 {
        -self.neg_ln(q) / std::f64::consts::LN_10
    }

    /// An integer `≥ q/f(q)`; exact when `f` is an integer power.
    fn target(&self, q: &BigInt) -> BigInt {
        if let Growth::Power { p } = *self {
            if p.fract() == 0.0 && p <= 64.0 {
                return q.pow(p as u32 + 1);
            }
        }
        exp_ceil(self.neg_ln(q)) * q
    }
}

/// An integer `≥ e^g`, within relative `1e-12` of it.
fn exp_ceil(g: f64) -> BigInt {
    const SAFETY: f64 = 1.0 + 1e-12;
    if g < 700.0 {
        return BigInt::from_f64((g.exp() * SAFETY).ceil()).expect("finite");
    }
    let x = g / std::f64::consts::LN_2;
    let int = x.floor();
    let mant = (2f64.powf(x - int) * SAFETY * 2f64.powi(52)).ceil();
    BigInt::from_f64(mant).expect("finite") << (int as u64 - 52)
}

/// One row of the approximation certificate `‖q_k α‖ ≤ f(q_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxBound {
    pub k: usize,
    pub q: String,
    /// `log₁₀ f(q_k)`.
    pub log10_target: f64,
    /// `log₁₀ (1/q_{k+1})`, the continued-fraction bound; `-∞` at the last `k`.
    pub log10_next_bound: f64,
    /// `log₁₀ ‖q_k α‖`, exact up to the final logarithm.
    pub log10_displacement: f64,
    pub holds: bool,
}

/// A rotation number built greedily so that its convergents satisfy the
/// approximation bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleRotation {
    pub growth: Growth,
    pub k_max: usize,
    pub fraction: ContinuedFraction,
    #[serde(skip)]
    pub alpha: BigRational,
    pub alpha_digits: String,
    pub bounds: Vec<ApproxBound>,
    /// Why fewer than `k_max` quotients were produced, if so.
    pub truncated: Option<String>,
    /// Set when the greedy quotients stay bounded by `2`, i.e. the growth
    /// never forced a large quotient.
    pub note: Option<String>,
}

/// Greedy construction `a_{k+1} = min{a : q_k/q_{k+1} ≤ f(q_k)}` from
/// `q₀ = 1`, stopping early if a quotient would exceed `max_bits` bits.
pub fn build_liouville_rotation(growth: Growth, k_max: usize, max_bits: u64) -> Result<LiouvilleRotation> {
    growth.validate()?;
    if !(1..=MAX_K).contains(&k_max) {
        return Err(Error::Argument(format!("k_max must lie in 1..={MAX_K}, got {k_max}")));
    }
    let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
    let mut quotients = Vec::new();
    let mut truncated = None;
    while quotients.len() < k_max {
        let bits = growth.neg_ln(&q) / std::f64::consts::LN_2;
        if !(bits.is_finite() && bits <= max_bits as f64) {
            truncated = Some(format!(
                "a_{} would need about {:.3e} bits (budget {max_bits}); stopped after {} quotients",
                quotients.len() + 1,
                bits,
                quotients.len()
            ));
            break;
        }
        let need = growth.target(&q) - &q_prev;
        let a = Integer::div_ceil(&need, &q).max(BigInt::one());
        let next = &a * &q + &q_prev;
        quotients.push(a);
        q_prev = std::mem::replace(&mut q, next);
    }
    let note = quotients
        .iter()
        .all(|a| a <= &BigInt::from(2))
        .then(|| "growth too slow to force large quotients; bounds still hold".to_string());
    let fraction = ContinuedFraction::new(BigInt::zero(), quotients)?;
    let alpha = fraction.value();
    let qs = fraction.denominators();
    let bounds = qs
        .iter()
        .enumerate()
        .map(|(k, qk)| {
            let d = circle_norm(&(BigRational::from_integer(qk.clone()) * &alpha));
            let log10_displacement = log10_rational(&d);
            let log10_target = growth.log10_f(qk);
            let log10_next_bound = qs
                .get(k + 1)
                .map_or(f64::NEG_INFINITY, |n| -ln_bigint(n) / std::f64::consts::LN_10);
            ApproxBound {
                k,
                q: qk.to_string(),
                log10_target,
                log10_next_bound,
                log10_displacement,
                holds: log_le(log10_displacement, log10_target)
                    && log_le(log10_displacement, log10_next_bound)
                    && log_le(log10_next_bound, log10_target),
            }
        })
        .collect();
    Ok(LiouvilleRotation {
        growth,
        k_max,
        alpha_digits: decimal_digits(&alpha, ALPHA_DIGITS),
        fraction,
        alpha,
        bounds,
        truncated,
        note,
    })
}

/// `a ≤ b` for base-10 logarithms with a relative slack for the final
/// float logarithm.
fn log_le(a: f64, b: f64) -> bool {
    a == f64::NEG_INFINITY || a <= b + 1e-12 * b.abs().max(1.0)
}

/// `‖x‖`, distance to the nearest integer.
fn circle_norm(x: &BigRational) -> BigRational {
    let f = frac(x);
    let alt = BigRational::one() - &f;
    if f < alt {
        f
    } else {
        alt
    }
}

impl LiouvilleRotation {
    /// The rotation `x ↦ x + α mod 1` as an exact exchange.
    pub fn iet(&self) -> Result<Iet> {
        Iet::rotation_exact(self.alpha.clone())
    }

    /// Re-checks every bound by walking the orbit of `w`: for
    /// `0 ≤ j < min(q_k, j_limit)` the circle displacements
    /// `‖Tʲw − Tʲ±ᑫw‖` are computed exactly and compared with `f(q_k)`.
    /// Small `q_k` iterate the exchange; large ones use `Tⁿw = {w + nα}`.
    pub fn verify_by_orbit(&self, w: &BigRational, j_limit: u64) -> Result<Vec<bool>> {
        let t = self.iet()?;
        let qs = self.fraction.denominators();
        qs.iter()
            .map(|q| {
                let target = self.growth.log10_f(q);
                let count = q.to_u64().map_or(j_limit, |v| v.min(j_limit)).max(1);
                let worst = match q.to_i64().filter(|&v| v as u64 <= EXHAUSTIVE_LIMIT) {
                    Some(qi) => {
                        let orbit = t.orbit_exact(w, -qi, count as i64 + qi - 1)?;
                        (0..count as usize)
                            .map(|j| {
                                let x = &orbit[j + qi as usize];
                                circle_norm(&(x - &orbit[j + 2 * qi as usize]))
                                    .max(circle_norm(&(x - &orbit[j])))
                            })
                            .max()
                            .unwrap_or_else(BigRational::zero)
                    }
                    None => {
                        let at = |n: BigInt| frac(&(w + BigRational::from_integer(n) * &self.alpha));
                        (0..count)
                            .map(|j| {
                                let j = BigInt::from(j);
                                let x = at(j.clone());
                                circle_norm(&(&x - at(&j + q))).max(circle_norm(&(&x - at(&j - q))))
                            })
                            .max()
                            .unwrap_or_else(BigRational::zero)
                    }
                };
                Ok(log_le(log10_rational(&worst), target))
            })
            .collect()
    }
}

/// `sup_{0≤j<q} max(|V(j) − V(j+q)|, |V(j) − V(j−q)|)`.
pub fn gordon_sup_diff(v: &Potential, q: usize) -> Result<f64> {
    let qi = q as i64;
    let window = v.slice(-qi, 2 * qi)?;
    Ok((0..q)
        .map(|j| {
            let x = window[j + q];
            (x - window[j + 2 * q]).abs().max((x - window[j]).abs())
        })
        .fold(0.0, f64::max))
}

/// A candidate near-period and its orbit displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnTime {
    pub q: u64,
    pub displacement: f64,
}

fn circle_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).abs();
    d.min(1.0 - d)
}

/// The `top` values `q ≤ q_max` with smallest circle displacement
/// `d(q) = sup_{0≤j<q} max(‖Tʲw − Tʲ⁺ᑫw‖, ‖Tʲw − Tʲ⁻ᑫw‖)`, sorted by
/// `(d, q)`.
pub fn find_return_times(t: &Iet, w: f64, q_max: u64, top: usize) -> Result<Vec<ReturnTime>> {
    if q_max < 2 {
        return Err(Error::Argument(format!("q_max must be at least 2, got {q_max}")));
    }
    let n = q_max as i64;
    let orbit = t.orbit(w, -n, 2 * n - 1)?;
    let at = |k: i64| orbit[(k + n) as usize];
    let mut found: Vec<ReturnTime> = (1..=q_max)
        .into_par_iter()
        .map(|q| {
            let qi = q as i64;
            let displacement = (0..qi)
                .map(|j| circle_distance(at(j), at(j + qi)).max(circle_distance(at(j), at(j - qi))))
                .fold(0.0, f64::max);
            ReturnTime { q, displacement }
        })
        .collect();
    found.sort_by(|a, b| a.displacement.total_cmp(&b.displacement).then(a.q.cmp(&b.q)));
    found.truncate(top);
    Ok(found)
}

/// How a row's `s_k` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupMethod {
    /// Enumerated over the orbit window.
    Exhaustive,
    /// `q β ∈ ℤ` for a rotation by `β`: every difference vanishes.
    Periodic,
    /// `q` too large to enumerate: `s_k` replaced by its upper bound
    /// `Lip(f)·d(q_k)`.
    LipschitzBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GordonRow {
    pub q: String,
    pub sup_diff: f64,
    pub log10_sup_diff: f64,
    pub method: SupMethod,
    /// `log₁₀ d(q_k)`; circle metric for circle-continuous `f`.
    pub log10_displacement: f64,
    /// `log₁₀ (Lip(f)·d(q_k))` when Lipschitz metadata is present.
    pub log10_chaining_bound: Option<f64>,
    pub chaining_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVerdict {
    pub c: f64,
    /// `log₁₀ (s_k·e^{C q_k})` per row.
    pub log10_products: Vec<f64>,
    pub verdict: bool,
}

/// Evidence for the Gordon condition `s_k e^{C q_k} → 0` at the tested
/// scales, for one base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GordonCertificate {
    /// Decimal digits of the rotation number when `t` is an exact rotation.
    pub alpha_digits: Option<String>,
    pub base_point: f64,
    pub qs: Vec<String>,
    pub sup_diffs: Vec<f64>,
    pub tested_c: Vec<f64>,
    #[serde(rename = "C_verdicts")]
    pub c_verdicts: Vec<CVerdict>,
    pub rows: Vec<GordonRow>,
}

/// Products `log₁₀(s_k e^{C q_k})` and the verdict: non-increasing in `k`
/// with the last product at most [`GORDON_TOL`].
pub fn gordon_verdict(qs: &[BigInt], log10_sups: &[f64], c: f64) -> CVerdict {
    let log10_products: Vec<f64> = qs
        .iter()
        .zip(log10_sups)
        .map(|(q, &s)| {
            if s == f64::NEG_INFINITY {
                s
            } else {
                s + c * q.to_f64().unwrap_or(f64::INFINITY) * std::f64::consts::LOG10_E
            }
        })
        .collect();
    let decreasing = log10_products.windows(2).all(|w| w[1] <= w[0]);
    let small = log10_products.last().is_some_and(|&p| p <= GORDON_TOL.log10());
    CVerdict {
        c,
        log10_products,
        verdict: decreasing && small,
    }
}

fn log10_f64(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        x.log10()
    }
}

/// Rotation amount `T(0)` of an exact rotation-class exchange.
fn exact_rotation_amount(t: &Iet) -> Option<BigRational> {
    t.exact_lengths()?;
    t.permutation().rotation_class()?;
    t.apply_exact(&BigRational::zero()).ok()
}

/// Computes `s_k` and `d(q_k)` for each `q_k` and the per-`C` verdicts.
pub fn gordon_certificate(
    t: &Iet,
    f: &SamplingFunction,
    w: f64,
    qs: &[BigInt],
    cs: &[f64],
) -> Result<GordonCertificate> {
    if qs.is_empty() {
        return Err(Error::Argument("no q values to test".to_string()));
    }
    if qs[0] < BigInt::one() || qs.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::Argument("qs must be positive and strictly increasing".to_string()));
    }
    t.apply(w)?;
    let meta = f.metadata();
    let circle = meta.circle_continuous;
    let lip = meta.lipschitz_constant;
    let rotation = exact_rotation_amount(t);
    let rows = qs
        .iter()
        .map(|q| gordon_row(t, f, w, q, circle, lip, rotation.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let log10_sups: Vec<f64> = rows.iter().map(|r| r.log10_sup_diff).collect();
    Ok(GordonCertificate {
        alpha_digits: rotation.as_ref().map(|b| decimal_digits(b, ALPHA_DIGITS)),
        base_point: w,
        qs: qs.iter().map(|q| q.to_string()).collect(),
        sup_diffs: rows.iter().map(|r| r.sup_diff).collect(),
        tested_c: cs.to_vec(),
        c_verdicts: cs.iter().map(|&c| gordon_verdict(qs, &log10_sups, c)).collect(),
        rows,
    })
}

fn gordon_row(
    t: &Iet,
    f: &SamplingFunction,
    w: f64,
    q: &BigInt,
    circle: bool,
    lip: Option<f64>,
    rotation: Option<&BigRational>,
) -> Result<GordonRow> {
    let small = q.to_u64().filter(|&v| v <= EXHAUSTIVE_LIMIT);
    let (sup_diff, log10_displacement, method) = match (small, t.exact_lengths()) {
        (Some(qu), Some(_)) => {
            let wq = BigRational::from_float(w).expect("finite base point");
            let qi = qu as i64;
            let orbit = t.orbit_exact(&wq, -qi, 2 * qi - 1)?;
            let q = qu as usize;
            let dist = |a: &BigRational, b: &BigRational| {
                if circle {
                    circle_distance_exact(a, b)
                } else {
                    rational_to_f64(&(a - b).abs())
                }
            };
            let mut s = 0.0f64;
            let mut d = BigRational::zero();
            for j in 0..q {
                let x = &orbit[j + q];
                for y in [&orbit[j], &orbit[j + 2 * q]] {
                    s = s.max(f.difference_exact(x, y).abs());
                    let gap = if circle { circle_norm(&(x - y)) } else { (x - y).abs() };
                    if gap > d {
                        d = gap;
                    }
                    debug_assert!(dist(x, y) >= 0.0);
                }
            }
            (s, log10_rational(&d), SupMethod::Exhaustive)
        }
        (Some(qu), None) => {
            let qi = qu as i64;
            let v = Potential::sample(t, f, w, -qi, 2 * qi)?;
            let s = gordon_sup_diff(&v, qu as usize)?;
            let orbit = t.orbit(w, -qi, 2 * qi - 1)?;
            let q = qu as usize;
            let dist = |a: f64, b: f64| if circle { circle_distance(a, b) } else { (a - b).abs() };
            let d = (0..q)
                .map(|j| dist(orbit[j + q], orbit[j]).max(dist(orbit[j + q], orbit[j + 2 * q])))
                .fold(0.0, f64::max);
            (s, log10_f64(d), SupMethod::Exhaustive)
        }
        (None, _) => {
            let beta = rotation.ok_or_else(|| {
                Error::Precondition(format!(
                    "q = {q} exceeds the enumeration limit {EXHAUSTIVE_LIMIT}; only exact rotations are supported beyond it"
                ))
            })?;
            if !circle {
                return Err(Error::Precondition(
                    "large-q certificates need a circle-continuous sampling function".to_string(),
                ));
            }
            let delta = circle_norm(&(BigRational::from_integer(q.clone()) * beta));
            if delta.is_zero() {
                (0.0, f64::NEG_INFINITY, SupMethod::Periodic)
            } else {
                let lip = lip.ok_or_else(|| {
                    Error::Precondition("large-q certificates need a Lipschitz constant".to_string())
                })?;
                let log_d = log10_rational(&delta);
                (lip * 10f64.powf(log_d), log_d, SupMethod::LipschitzBound)
            }
        }
    };
    let log10_chaining_bound = lip.map(|l| log10_f64(l) + log10_displacement);
    let mut log10_sup_diff = log10_f64(sup_diff);
    let mut method = method;
    if sup_diff == 0.0 && log10_displacement > f64::NEG_INFINITY {
        // differences underflowed f64 without the orbit being periodic
        if let Some(b) = log10_chaining_bound {
            log10_sup_diff = b;
            method = SupMethod::LipschitzBound;
        }
    }
    if method == SupMethod::LipschitzBound {
        log10_sup_diff = log10_chaining_bound.unwrap_or(log10_sup_diff);
    }
    let chaining_ok = log10_chaining_bound.map(|b| {
        log10_sup_diff == f64::NEG_INFINITY || log10_sup_diff <= b + 1e-9 || sup_diff <= 1e-13
    });
    Ok(GordonRow {
        q: q.to_string(),
        sup_diff,
        log10_sup_diff,
        method,
        log10_displacement,
        log10_chaining_bound,
        chaining_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iet::parse_rational;

    fn big(v: u64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn continued_fraction_text_round_trip() {
        let c: ContinuedFraction = "[0; 1, 2, 3]".parse().unwrap();
        assert_eq!(c.quotients, vec![big(1), big(2), big(3)]);
        assert_eq!(c.to_string(), "[0; 1, 2, 3]");
        assert_eq!(c.value(), parse_rational("10/7").unwrap().recip());
        let bare: ContinuedFraction = "[2]".parse().unwrap();
        assert!(bare.is_empty());
        assert_eq!(bare.to_string(), "[2]");
        assert!("[0; 1, 0]".parse::<ContinuedFraction>().is_err());
        assert!("0; 1".parse::<ContinuedFraction>().is_err());
        let e = "[0; 1, x]".parse::<ContinuedFraction>().unwrap_err();
        assert!(matches!(e, Error::Parse { position: 6, .. }), "{e:?}");
    }

    #[test]
    fn convergent_identity() {
        let c = ContinuedFraction::from_f64((5f64.sqrt() - 1.0) / 2.0, 20).unwrap();
        assert!(c.quotients.iter().take(20).all(|a| a == &big(1)));
        let conv = c.convergents();
        for k in 1..conv.len() {
            let (p1, q1) = &conv[k - 1];
            let (p2, q2) = &conv[k];
            assert_eq!((p2 * q1 - p1 * q2).abs(), BigInt::one());
        }
        let x = parse_rational("355/113").unwrap();
        assert_eq!(ContinuedFraction::from_rational(&x).value(), x);
    }

    #[test]
    fn liouville_examples() {
        let l = build_liouville_rotation(Growth::Exponential { c: 3.0 }, 1, DEFAULT_QUOTIENT_BITS).unwrap();
        assert_eq!(l.fraction.quotients, vec![big(21)]);
        assert_eq!(l.alpha, BigRational::new(big(1), big(21)));
        assert!(l.bounds.iter().all(|b| b.holds));

        let l = build_liouville_rotation(Growth::Exponential { c: 3.0 }, 3, DEFAULT_QUOTIENT_BITS).unwrap();
        assert_eq!(l.fraction.len(), 2);
        assert!(l.truncated.is_some());
        let q2 = &l.fraction.denominators()[2];
        // q₂ ≥ 21 e^{63}
        assert!(ln_bigint(q2) >= 21f64.ln() + 63.0 - 1e-9);
        assert!(l.bounds.iter().all(|b| b.holds));
        assert!(l.verify_by_orbit(&parse_rational("1/7").unwrap(), 64).unwrap().iter().all(|&b| b));
        assert!(l.alpha_digits.starts_with("0.0476"));
        assert_eq!(l.alpha_digits.len(), 2 + ALPHA_DIGITS);

        let p = build_liouville_rotation(Growth::Power { p: 2.0 }, 4, DEFAULT_QUOTIENT_BITS).unwrap();
        let qs = p.fraction.denominators();
        for k in 0..4 {
            assert!(qs[k + 1] >= qs[k].pow(3));
        }
        assert!(p.bounds.iter().all(|b| b.holds));
        assert!(build_liouville_rotation(Growth::Power { p: 2.0 }, 9, 64).is_err());
        assert!(build_liouville_rotation(Growth::Power { p: -1.0 }, 2, 64).is_err());
    }

    #[test]
    fn sup_diff_examples() {
        let v = Potential::new(-3, (0..9).map(|i| [0.5, -1.0, 2.0][i % 3]).collect());
        assert_eq!(gordon_sup_diff(&v, 3).unwrap(), 0.0);
        assert!(gordon_sup_diff(&v, 4).is_err());
        let t = Iet::rotation_exact(parse_rational("3/7").unwrap()).unwrap();
        let f = SamplingFunction::cosine(1.0);
        let cert = gordon_certificate(&t, &f, 0.1, &[big(7), big(14)], &[1.0]).unwrap();
        assert_eq!(cert.sup_diffs, vec![0.0, 0.0]);
        assert!(cert.c_verdicts[0].verdict);
    }

    #[test]
    fn return_times_of_golden_rotation() {
        let t = Iet::golden_rotation();
        let top = find_return_times(&t, 0.0, 100, 5).unwrap();
        let fib = [1, 2, 3, 5, 8, 13, 21, 34, 55, 89];
        assert!(top[..4].iter().all(|r| fib.contains(&r.q)), "{top:?}");
        assert!(top.windows(2).all(|w| w[0].displacement <= w[1].displacement));
        assert!(find_return_times(&t, 0.0, 1, 5).is_err());
        let r = Iet::rotation_exact(parse_rational("2/5").unwrap()).unwrap();
        let top = find_return_times(&r, 0.0, 12, 2).unwrap();
        assert_eq!(top[0].q, 5);
        assert!(top[0].displacement < 1e-12);
    }

    #[test]
    fn constant_function_always_passes() {
        let t = Iet::golden_rotation();
        let f = SamplingFunction::constant(1.0);
        let cert = gordon_certificate(&t, &f, 0.3, &[big(5), big(8), big(13)], &[1.0, 10.0]).unwrap();
        assert!(cert.sup_diffs.iter().all(|&s| s == 0.0));
        assert!(cert.c_verdicts.iter().all(|v| v.verdict));
        assert!(cert.alpha_digits.is_none());
    }

    #[test]
    fn certificate_json_keys() {
        let t = Iet::golden_rotation();
        let f = SamplingFunction::cosine(1.0);
        let cert = gordon_certificate(&t, &f, 0.0, &[big(8), big(13)], &[1.0]).unwrap();
        let json = serde_json::to_value(&cert).unwrap();
        for key in ["alpha_digits", "qs", "sup_diffs", "C_verdicts"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert!(gordon_certificate(&t, &f, 0.0, &[big(8), big(5)], &[1.0]).is_err());
    }
}
