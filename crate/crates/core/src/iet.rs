//! Interval exchange transformations.
//!
//! An [`Iet`] carries a float64 realisation of the exchange and, when the
//! lengths are rational, an exact one over `BigRational`. Numerics run on
//! the float side; statements that must be exact (Keane violations, orbit
//! periodicity, left-limit recursions on rational data) use the exact side.

use std::fmt;
use std::ops::{Add, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permutation::Permutation;

/// Float-mode tolerance on `Σ λ_j = 1` and on collisions.
pub const FLOAT_TOL: f64 = 1e-12;

/// Largest `f64` strictly below one.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithmeticMode {
    Float,
    Rational,
}

/// Piecewise-translation data over a scalar type: the partition points and
/// the image slots.
#[derive(Debug, Clone)]
struct Exchange<S> {
    /// `left[j]` is the left endpoint of `I_{j+1}`; `left[r] = 1`.
    left: Vec<S>,
    /// `slot[s]` is the left end of the `(s+1)`-th image slot; `slot[r] = 1`.
    slot: Vec<S>,
    /// Slot index (0-based) of interval `j` (0-based).
    slot_of: Vec<usize>,
    /// Interval index (0-based) occupying slot `s` (0-based).
    interval_of: Vec<usize>,
}

impl<S> Exchange<S>
where
    S: Clone + PartialOrd + Zero + for<'a> Add<&'a S, Output = S> + for<'a> Sub<&'a S, Output = S>,
    for<'a> &'a S: Sub<&'a S, Output = S>,
{
    fn new(perm: &Permutation, lengths: &[S], one: S) -> Self {
        let r = perm.len();
        let prefix = |order: &mut dyn Iterator<Item = usize>| {
            let mut acc = S::zero();
            let mut out = Vec::with_capacity(r + 1);
            for j in order {
                out.push(acc.clone());
                acc = acc + &lengths[j];
            }
            out.push(one.clone());
            out
        };
        let left = prefix(&mut (0..r));
        let slot_of: Vec<usize> = (1..=r).map(|j| perm.at(j) - 1).collect();
        let interval_of: Vec<usize> = (1..=r).map(|s| perm.inv(s) - 1).collect();
        let slot = prefix(&mut interval_of.iter().copied());
        Self {
            left,
            slot,
            slot_of,
            interval_of,
        }
    }

    fn r(&self) -> usize {
        self.slot_of.len()
    }

    /// Interval containing `x` under the right-continuous convention.
    fn locate(points: &[S], x: &S) -> usize {
        // points[0] = 0 ≤ x < points[r] = 1
        let r = points.len() - 1;
        points[1..r].partition_point(|p| p <= x)
    }

    /// Interval whose closure contains `x` from the left: `p_j < x ≤ p_{j+1}`.
    fn locate_left(points: &[S], x: &S) -> usize {
        let r = points.len() - 1;
        points[1..r].partition_point(|p| p < x)
    }

    fn apply(&self, x: &S) -> S {
        let j = Self::locate(&self.left, x);
        self.slot[self.slot_of[j]].clone() + &(x - &self.left[j])
    }

    fn apply_inverse(&self, y: &S) -> S {
        let s = Self::locate(&self.slot, y);
        let j = self.interval_of[s];
        self.left[j].clone() + &(y - &self.slot[s])
    }

    /// `T₋(x) = lim_{y ↑ x} T(y)` for `x ∈ (0, 1]`.
    fn apply_left(&self, x: &S) -> S {
        let j = Self::locate_left(&self.left, x);
        let s = self.slot_of[j];
        &self.slot[s + 1] - &(&self.left[j + 1] - x)
    }

    /// Interior partition points at which `T` actually jumps: `β_j` with
    /// `π(j + 1) ≠ π(j) + 1`.
    fn breakpoints(&self) -> Vec<S> {
        (1..self.r())
            .filter(|&j| self.slot_of[j] != self.slot_of[j - 1] + 1)
            .map(|j| self.left[j].clone())
            .collect()
    }
}

/// An interval exchange transformation `T: [0, 1) → [0, 1)`.
#[derive(Debug, Clone)]
pub struct Iet {
    perm: Permutation,
    lengths: Vec<f64>,
    float: Exchange<f64>,
    exact: Option<Exchange<BigRational>>,
    exact_lengths: Option<Vec<BigRational>>,
}

impl Iet {
    /// Float-mode exchange. Lengths must be positive and sum to one within
    /// `1e-12`; they are renormalised.
    pub fn new(perm: Permutation, lengths: Vec<f64>) -> Result<Self> {
        check_arity(&perm, lengths.len())?;
        if let Some(bad) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidLengths(format!(
                "length {bad} is not a positive finite number"
            )));
        }
        let total: f64 = lengths.iter().sum();
        if (total - 1.0).abs() > FLOAT_TOL {
            return Err(Error::InvalidLengths(format!(
                "lengths sum to {total}, expected 1"
            )));
        }
        let lengths: Vec<f64> = lengths.iter().map(|l| l / total).collect();
        let float = Exchange::new(&perm, &lengths, 1.0);
        Ok(Self {
            perm,
            lengths,
            float,
            exact: None,
            exact_lengths: None,
        })
    }

    /// Exact-mode exchange over rational lengths summing to exactly one.
    pub fn new_exact(perm: Permutation, lengths: Vec<BigRational>) -> Result<Self> {
        check_arity(&perm, lengths.len())?;
        if let Some(bad) = lengths.iter().find(|l| !l.is_positive()) {
            return Err(Error::InvalidLengths(format!("length {bad} is not positive")));
        }
        let total = lengths
            .iter()
            .fold(BigRational::zero(), |acc, l| acc + l);
        if !total.is_one() {
            return Err(Error::InvalidLengths(format!(
                "lengths sum to {total}, expected exactly 1"
            )));
        }
        let exact = Exchange::new(&perm, &lengths, BigRational::one());
        let float_lengths: Vec<f64> = lengths.iter().map(rational_to_f64).collect();
        let sum: f64 = float_lengths.iter().sum();
        let float_lengths: Vec<f64> = float_lengths.iter().map(|l| l / sum).collect();
        let float = Exchange::new(&perm, &float_lengths, 1.0);
        Ok(Self {
            perm,
            lengths: float_lengths,
            float,
            exact: Some(exact),
            exact_lengths: Some(lengths),
        })
    }

    /// The two-interval swap `(2 1)` with lengths `(1 − α, α)`: rotation by `α`.
    pub fn rotation(alpha: f64) -> Result<Self> {
        Self::new(Permutation::new(vec![2, 1])?, vec![1.0 - alpha, alpha])
    }

    pub fn rotation_exact(alpha: BigRational) -> Result<Self> {
        let one = BigRational::one();
        Self::new_exact(Permutation::new(vec![2, 1])?, vec![&one - &alpha, alpha])
    }

    /// Rotation by the golden mean `g = (√5 − 1)/2`, lengths `(1 − g, g)`.
    pub fn golden_rotation() -> Self {
        Self::rotation((5f64.sqrt() - 1.0) / 2.0).expect("golden lengths are valid")
    }

    pub fn mode(&self) -> ArithmeticMode {
        if self.exact.is_some() {
            ArithmeticMode::Rational
        } else {
            ArithmeticMode::Float
        }
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    pub fn r(&self) -> usize {
        self.perm.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn exact_lengths(&self) -> Option<&[BigRational]> {
        self.exact_lengths.as_deref()
    }

    /// Left endpoints `0 = β₀ < β₁ < … < β_{r−1}` of the intervals.
    pub fn left_endpoints(&self) -> &[f64] {
        &self.float.left[..self.r()]
    }

    /// Right endpoints `ω_1 … ω_{r−1}` of `I_1 … I_{r−1}`.
    pub fn interior_endpoints(&self) -> &[f64] {
        &self.float.left[1..self.r()]
    }

    /// Per-interval translation amounts.
    pub fn offsets(&self) -> Vec<f64> {
        (0..self.r())
            .map(|j| self.float.slot[self.float.slot_of[j]] - self.float.left[j])
            .collect()
    }

    /// Interior points where `T` is discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.exact {
            Some(ex) => ex.breakpoints().iter().map(rational_to_f64).collect(),
            None => self.float.breakpoints(),
        }
    }

    /// The inverse exchange: permutation `π⁻¹`, with the image slots as
    /// its intervals.
    pub fn inverse(&self) -> Iet {
        let perm = self.perm.inverse();
        let permute = |ls: &[f64]| -> Vec<f64> {
            (1..=self.r()).map(|s| ls[self.perm.inv(s) - 1]).collect()
        };
        match &self.exact_lengths {
            Some(ex) => {
                let ls = (1..=self.r())
                    .map(|s| ex[self.perm.inv(s) - 1].clone())
                    .collect();
                Iet::new_exact(perm, ls).expect("inverse of a valid exchange is valid")
            }
            None => {
                let ls = permute(&self.lengths);
                let float = Exchange::new(&perm, &ls, 1.0);
                Iet {
                    perm,
                    lengths: ls,
                    float,
                    exact: None,
                    exact_lengths: None,
                }
            }
        }
    }

    /// `T(w)` for `w ∈ [0, 1)`.
    pub fn apply(&self, w: f64) -> Result<f64> {
        check_domain(w)?;
        Ok(self.step(w))
    }

    /// Unchecked float step, clamped to `[0, 1)`.
    #[inline]
    pub fn step(&self, w: f64) -> f64 {
        clamp_unit(self.float.apply(&w))
    }

    #[inline]
    pub fn step_inverse(&self, w: f64) -> f64 {
        clamp_unit(self.float.apply_inverse(&w))
    }

    pub fn apply_inverse(&self, w: f64) -> Result<f64> {
        check_domain(w)?;
        Ok(self.step_inverse(w))
    }

    pub fn apply_exact(&self, w: &BigRational) -> Result<BigRational> {
        let ex = self.require_exact()?;
        check_domain_exact(w)?;
        Ok(ex.apply(w))
    }

    pub fn apply_inverse_exact(&self, w: &BigRational) -> Result<BigRational> {
        let ex = self.require_exact()?;
        check_domain_exact(w)?;
        Ok(ex.apply_inverse(w))
    }

    /// `Tⁿ(w)` for any integer `n`; negative powers iterate the inverse.
    pub fn power(&self, w: f64, n: i64) -> Result<f64> {
        check_domain(w)?;
        Ok(self.power_unchecked(w, n))
    }

    fn power_unchecked(&self, mut w: f64, n: i64) -> f64 {
        if n >= 0 {
            for _ in 0..n {
                w = self.step(w);
            }
        } else {
            for _ in 0..(-n) {
                w = self.step_inverse(w);
            }
        }
        w
    }

    pub fn power_exact(&self, w: &BigRational, n: i64) -> Result<BigRational> {
        let ex = self.require_exact()?;
        check_domain_exact(w)?;
        let mut w = w.clone();
        if n >= 0 {
            for _ in 0..n {
                w = ex.apply(&w);
            }
        } else {
            for _ in 0..(-n) {
                w = ex.apply_inverse(&w);
            }
        }
        Ok(w)
    }

    /// `(Tⁿ w)` for `n_from ≤ n ≤ n_to`.
    pub fn orbit(&self, w: f64, n_from: i64, n_to: i64) -> Result<Vec<f64>> {
        check_domain(w)?;
        if n_from > n_to {
            return Err(Error::Argument(format!(
                "orbit range {n_from}..={n_to} is empty"
            )));
        }
        let mut x = self.power_unchecked(w, n_from);
        let mut out = Vec::with_capacity((n_to - n_from + 1) as usize);
        out.push(x);
        for _ in n_from..n_to {
            x = self.step(x);
            out.push(x);
        }
        Ok(out)
    }

    pub fn orbit_exact(&self, w: &BigRational, n_from: i64, n_to: i64) -> Result<Vec<BigRational>> {
        let ex = self.require_exact()?;
        if n_from > n_to {
            return Err(Error::Argument(format!(
                "orbit range {n_from}..={n_to} is empty"
            )));
        }
        let mut x = self.power_exact(w, n_from)?;
        let mut out = Vec::with_capacity((n_to - n_from + 1) as usize);
        out.push(x.clone());
        for _ in n_from..n_to {
            x = ex.apply(&x);
            out.push(x.clone());
        }
        Ok(out)
    }

    /// `Tⁿ₋(w) = lim_{y ↑ w} Tⁿ(y)` for `w ∈ (0, 1]`, by the recursion
    /// `L₁ = T₋(w)`, `L_{k+1} = T₋(L_k)`.
    pub fn left_limit_power(&self, w: f64, n: u64) -> Result<f64> {
        if !(w > 0.0 && w <= 1.0) {
            return Err(Error::Domain(w));
        }
        if n < 1 {
            return Err(Error::Argument("left limits need n >= 1".to_string()));
        }
        if let Some(ex) = &self.exact {
            let q = BigRational::from_float(w).ok_or(Error::Domain(w))?;
            let mut y = q;
            for _ in 0..n {
                y = ex.apply_left(&y);
            }
            return Ok(rational_to_f64(&y));
        }
        let mut y = w;
        for _ in 0..n {
            // a point within the collision tolerance of a partition point is
            // taken to be that point, so the limit is read off the left piece
            let left = &self.float.left;
            let i = left.partition_point(|p| *p < y);
            for j in [i.saturating_sub(1), i.min(left.len() - 1)] {
                if j > 0 && (left[j] - y).abs() <= FLOAT_TOL {
                    y = left[j];
                }
            }
            y = self.float.apply_left(&y).clamp(f64::MIN_POSITIVE, 1.0);
        }
        Ok(y)
    }

    pub fn left_limit_power_exact(&self, w: &BigRational, n: u64) -> Result<BigRational> {
        let ex = self.require_exact()?;
        if !(w.is_positive() && *w <= BigRational::one()) {
            return Err(Error::Domain(rational_to_f64(w)));
        }
        if n < 1 {
            return Err(Error::Argument("left limits need n >= 1".to_string()));
        }
        let mut y = w.clone();
        for _ in 0..n {
            y = ex.apply_left(&y);
        }
        Ok(y)
    }

    /// Candidate discontinuities `⋃_{m<n} T^{-m}(breakpoints)`, sorted.
    fn discontinuity_candidates(&self, n: u64) -> Vec<f64> {
        let mut pts = Vec::new();
        match &self.exact {
            Some(ex) => {
                let mut exact_pts = Vec::new();
                for b in ex.breakpoints() {
                    let mut x = b;
                    for _ in 0..n {
                        if !x.is_zero() {
                            exact_pts.push(x.clone());
                        }
                        x = ex.apply_inverse(&x);
                    }
                }
                exact_pts.sort();
                exact_pts.dedup();
                pts.extend(exact_pts.iter().map(rational_to_f64));
            }
            None => {
                for b in self.float.breakpoints() {
                    let mut x = b;
                    for _ in 0..n {
                        if x > 0.0 {
                            pts.push(x);
                        }
                        x = self.step_inverse(x);
                    }
                }
                pts.sort_by(f64::total_cmp);
                pts.dedup_by(|a, b| (*a - *b).abs() < FLOAT_TOL);
            }
        }
        pts
    }

    /// Points of `(0, 1)` at which `Tⁿ` jumps, sorted. Candidates are the
    /// pull-backs of the breakpoints of `T`; those where the one-sided
    /// limits of `Tⁿ` coincide are dropped.
    pub fn discontinuities_of_power(&self, n: u64) -> Vec<f64> {
        if n == 0 {
            return Vec::new();
        }
        match &self.exact {
            Some(_) => self
                .discontinuity_candidates_exact(n)
                .into_iter()
                .filter(|x| {
                    let left = self.left_limit_power_exact(x, n).expect("x in (0,1)");
                    let right = self.power_exact(x, n as i64).expect("x in (0,1)");
                    left != right
                })
                .map(|x| rational_to_f64(&x))
                .collect(),
            None => self
                .discontinuity_candidates(n)
                .into_iter()
                .filter(|&x| {
                    let left = self.left_limit_power(x, n).expect("x in (0,1)");
                    let right = self.power_unchecked(x, n as i64);
                    (left - right).abs() > FLOAT_TOL
                })
                .collect(),
        }
    }

    fn discontinuity_candidates_exact(&self, n: u64) -> Vec<BigRational> {
        let ex = self.exact.as_ref().expect("exact mode");
        let mut pts = Vec::new();
        for b in ex.breakpoints() {
            let mut x = b;
            for _ in 0..n {
                if !x.is_zero() {
                    pts.push(x.clone());
                }
                x = ex.apply_inverse(&x);
            }
        }
        pts.sort();
        pts.dedup();
        pts
    }

    /// Iterates the orbits of all left endpoints (including `0`) for
    /// `horizon` steps and looks for a hit on an interior endpoint.
    ///
    /// In exact mode a hit is a proof of violation. In float mode a
    /// distance below `1e-12` is only reported as suspected.
    pub fn keane_falsify(&self, horizon: u64) -> KeaneVerdict {
        match &self.exact {
            Some(ex) => self.keane_exact(ex, horizon),
            None => self.keane_float(horizon),
        }
    }

    fn keane_exact(&self, ex: &Exchange<BigRational>, horizon: u64) -> KeaneVerdict {
        let r = self.r();
        let targets = &ex.left[1..r];
        let mut points: Vec<BigRational> = ex.left[..r].to_vec();
        let mut min_sep = f64::INFINITY;
        for step in 1..=horizon {
            for (source, x) in points.iter_mut().enumerate() {
                *x = ex.apply(x);
                let idx = targets.partition_point(|t| t < x);
                for k in [idx.checked_sub(1), Some(idx)].into_iter().flatten() {
                    if let Some(t) = targets.get(k) {
                        if t == x {
                            return KeaneVerdict {
                                status: KeaneStatus::Violated,
                                witness: Some(KeaneWitness {
                                    source,
                                    target: k + 1,
                                    step,
                                    value: x.to_string(),
                                }),
                                horizon,
                                min_separation: 0.0,
                            };
                        }
                        min_sep = min_sep.min(rational_to_f64(&(t - &*x)).abs());
                    }
                }
            }
        }
        KeaneVerdict {
            status: KeaneStatus::NoViolationUpToHorizon,
            witness: None,
            horizon,
            min_separation: min_sep,
        }
    }

    fn keane_float(&self, horizon: u64) -> KeaneVerdict {
        let r = self.r();
        let targets = &self.float.left[1..r];
        let mut points: Vec<f64> = self.float.left[..r].to_vec();
        let mut min_sep = f64::INFINITY;
        for step in 1..=horizon {
            for (source, x) in points.iter_mut().enumerate() {
                *x = self.step(*x);
                let idx = targets.partition_point(|t| t < x);
                for k in [idx.checked_sub(1), Some(idx)].into_iter().flatten() {
                    if let Some(t) = targets.get(k) {
                        let d = (t - *x).abs();
                        if d < FLOAT_TOL {
                            return KeaneVerdict {
                                status: KeaneStatus::SuspectedViolation,
                                witness: Some(KeaneWitness {
                                    source,
                                    target: k + 1,
                                    step,
                                    value: format!("{x:e}"),
                                }),
                                horizon,
                                min_separation: d,
                            };
                        }
                        min_sep = min_sep.min(d);
                    }
                }
            }
        }
        KeaneVerdict {
            status: KeaneStatus::NoViolationUpToHorizon,
            witness: None,
            horizon,
            min_separation: min_sep,
        }
    }

    /// True iff `{Tᵏ w : 1 ≤ k ≤ n} ∪ {0, 1}` has all consecutive gaps
    /// below `eps`.
    pub fn minimality_probe(&self, w: f64, n: u64, eps: f64) -> Result<bool> {
        check_domain(w)?;
        let mut pts = Vec::with_capacity(n as usize + 2);
        pts.push(0.0);
        pts.push(1.0);
        let mut x = w;
        for _ in 0..n {
            x = self.step(x);
            pts.push(x);
        }
        pts.sort_by(f64::total_cmp);
        Ok(pts.windows(2).all(|p| p[1] - p[0] < eps))
    }

    /// The largest `[a, b) ∋ w` on which every `Tʲ`, `|j| ≤ n`, is a single
    /// translation.
    pub fn isometry_interval(&self, w: f64, n: u64) -> Result<(f64, f64)> {
        check_domain(w)?;
        let mut cuts = self.discontinuity_candidates(n);
        cuts.extend(self.inverse().discontinuity_candidates(n));
        let a = cuts.iter().copied().filter(|&c| c <= w).fold(0.0, f64::max);
        let b = cuts.iter().copied().filter(|&c| c > w).fold(1.0, f64::min);
        Ok((a, b))
    }

    /// Finds the first `l ∈ [0, search_limit]` with
    /// `|Tᵐ(w) − T^{m+l}(w2)| < eps` for all `−n ≤ m ≤ n`.
    ///
    /// `Tˡ(w2)` is sought inside the isometry interval of `w` cut down to
    /// `(w − eps, w + eps)`; every candidate is verified directly before it
    /// is returned. `None` means the search limit was too small, not that no
    /// such `l` exists.
    pub fn find_alignment(
        &self,
        w: f64,
        w2: f64,
        n: u64,
        eps: f64,
        search_limit: u64,
    ) -> Result<Option<Alignment>> {
        check_domain(w2)?;
        if eps <= 0.0 {
            return Err(Error::Argument(format!("eps must be positive, got {eps}")));
        }
        let (a, b) = self.isometry_interval(w, n)?;
        let lo = a.max(w - eps);
        let hi = b.min(w + eps);
        let mut x = w2;
        for l in 0..=search_limit {
            if x >= lo && x < hi && (x - w).abs() < eps {
                let max_displacement = self.alignment_displacement(w, w2, n, l);
                if max_displacement < eps {
                    return Ok(Some(Alignment {
                        l,
                        interval: (a, b),
                        max_displacement,
                    }));
                }
            }
            x = self.step(x);
        }
        Ok(None)
    }

    /// `max_{|m| ≤ n} |Tᵐ(w) − T^{m+l}(w2)|` by direct evaluation.
    pub fn alignment_displacement(&self, w: f64, w2: f64, n: u64, l: u64) -> f64 {
        let n = n as i64;
        let base = self.power_unchecked(w, -n);
        let other = self.power_unchecked(w2, l as i64 - n);
        let (mut x, mut y) = (base, other);
        let mut worst = (x - y).abs();
        for _ in -n..n {
            x = self.step(x);
            y = self.step(y);
            worst = worst.max((x - y).abs());
        }
        worst
    }

    fn require_exact(&self) -> Result<&Exchange<BigRational>> {
        self.exact.as_ref().ok_or_else(|| {
            Error::Argument("operation requires an exact-rational exchange".to_string())
        })
    }

    pub fn to_spec(&self) -> IetSpec {
        match &self.exact_lengths {
            Some(ex) => IetSpec {
                perm: self.perm.image().to_vec(),
                lengths: ex.iter().map(|q| LengthValue::Text(q.to_string())).collect(),
                mode: ArithmeticMode::Rational,
            },
            None => IetSpec {
                perm: self.perm.image().to_vec(),
                lengths: self.lengths.iter().map(|&l| LengthValue::Number(l)).collect(),
                mode: ArithmeticMode::Float,
            },
        }
    }
}

impl fmt::Display for Iet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "π = ({}), Λ = {:?}", self.perm, self.lengths)
    }
}

fn check_arity(perm: &Permutation, n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidLengths(format!(
            "permutation has {} symbols but {n} lengths were given",
            perm.len()
        )));
    }
    Ok(())
}

fn check_domain(w: f64) -> Result<()> {
    if (0.0..1.0).contains(&w) {
        Ok(())
    } else {
        Err(Error::Domain(w))
    }
}

fn check_domain_exact(w: &BigRational) -> Result<()> {
    if w.is_negative() || *w >= BigRational::one() {
        Err(Error::Domain(rational_to_f64(w)))
    } else {
        Ok(())
    }
}

#[inline]
fn clamp_unit(x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else if x >= 1.0 {
        BELOW_ONE
    } else {
        x
    }
}

/// Nearest `f64` to a rational, robust to numerators and denominators
/// beyond the `f64` range.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if let Some(v) = q.to_f64().filter(|v| v.is_finite()) {
        if v != 0.0 || q.is_zero() {
            return v;
        }
    }
    // Scale by a power of two so both parts fit.
    let (n, d) = (q.numer(), q.denom());
    let shift = d.bits() as i64 - n.bits() as i64;
    let scaled = if shift >= 0 {
        BigRational::new(n << (shift as usize + 64), d.clone())
    } else {
        BigRational::new(n.clone(), d << ((-shift) as usize))
    };
    let mantissa = scaled.to_integer().to_f64().unwrap_or(0.0);
    let exp = if shift >= 0 { -(shift + 64) } else { -shift };
    mantissa * 2f64.powi(exp.clamp(i32::MIN as i64, i32::MAX as i64) as i32)
}

/// Parses `"p/q"`, `"p"`, or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Ok(q) = s.parse::<BigRational>() {
        return Ok(q);
    }
    let bad = || Error::Parse {
        position: 0,
        message: format!("cannot read {s:?} as a rational number"),
    };
    // Decimal literal such as 0.25: read exactly, not through f64.
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').ok_or_else(bad)?;
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || int.len() + frac.len() == 0 {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let q = BigRational::new(digits, BigInt::from(10u32).pow(frac.len() as u32));
    Ok(if neg { -q } else { q })
}

/// Status of a Keane falsification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeaneStatus {
    /// Exact collision: the Keane condition provably fails.
    Violated,
    /// Float collision below `1e-12`; not a proof.
    SuspectedViolation,
    NoViolationUpToHorizon,
}

/// A collision `T^step(β_source) = β_target`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeaneWitness {
    /// Index of the left endpoint whose orbit collided (`0` is the point 0).
    pub source: usize,
    /// Index `k ∈ 1..r` of the interior endpoint `β_k` that was hit.
    pub target: usize,
    pub step: u64,
    pub value: String,
}

impl KeaneWitness {
    /// Recomputes the collision by direct orbit evaluation.
    pub fn verify(&self, t: &Iet) -> bool {
        match &t.exact {
            Some(ex) => {
                let start = ex.left[self.source].clone();
                t.power_exact(&start, self.step as i64)
                    .map(|x| x == ex.left[self.target])
                    .unwrap_or(false)
            }
            None => {
                let x = t.power_unchecked(t.float.left[self.source], self.step as i64);
                (x - t.float.left[self.target]).abs() < FLOAT_TOL
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeaneVerdict {
    pub status: KeaneStatus,
    pub witness: Option<KeaneWitness>,
    pub horizon: u64,
    /// Smallest distance seen between an endpoint orbit and an interior
    /// endpoint.
    pub min_separation: f64,
}

/// Result of [`Iet::find_alignment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub l: u64,
    /// Isometry interval of the base point.
    pub interval: (f64, f64),
    /// Verified `max_{|m| ≤ n} |Tᵐ(w) − T^{m+l}(w2)|`.
    pub max_displacement: f64,
}

/// A length entry in an IET spec file: a float or a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LengthValue {
    Number(f64),
    Text(String),
}

/// On-disk description of an IET:
/// `{"perm": [...], "lengths": [...], "mode": "float" | "rational"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IetSpec {
    pub perm: Vec<usize>,
    pub lengths: Vec<LengthValue>,
    #[serde(default = "default_mode")]
    pub mode: ArithmeticMode,
}

fn default_mode() -> ArithmeticMode {
    ArithmeticMode::Float
}

impl IetSpec {
    pub fn build(&self) -> Result<Iet> {
        let perm = Permutation::new(self.perm.clone())?;
        match self.mode {
            ArithmeticMode::Float => {
                let lengths = self
                    .lengths
                    .iter()
                    .map(|l| match l {
                        LengthValue::Number(x) => Ok(*x),
                        LengthValue::Text(s) => parse_rational(s).map(|q| rational_to_f64(&q)),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Iet::new(perm, lengths)
            }
            ArithmeticMode::Rational => {
                let lengths = self
                    .lengths
                    .iter()
                    .map(|l| match l {
                        LengthValue::Number(x) => parse_rational(&x.to_string()),
                        LengthValue::Text(s) => parse_rational(s),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Iet::new_exact(perm, lengths)
            }
        }
    }
}
