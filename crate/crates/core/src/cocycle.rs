//! Schrödinger operators `[Hψ](n) = ψ(n+1) + ψ(n−1) + V(n)ψ(n)` with
//! `V(n) = f(Tⁿω)`, their transfer-matrix cocycles, Lyapunov exponents and
//! Dirichlet truncations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iet::Iet;
use crate::sampling::SamplingFunction;

/// Steps between folding the running diagonal products into logarithms.
pub const RESCALE_CADENCE: usize = 16;
/// Absolute tolerance of the bisection eigensolver.
pub const EIGEN_TOL: f64 = 1e-10;
/// Default threshold on `L(E)` for the AC indicator.
pub const DEFAULT_AC_TAU: f64 = 0.01;
pub const AC_DISCLAIMER: &str = "numerical evidence only: finite-n Lyapunov exponents and finite-volume spectra cannot certify the absence of absolutely continuous spectrum";

/// `V(n) = f(Tⁿω)` on a half-open window `[from, from + len)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub from: i64,
    pub values: Vec<f64>,
}

impl Potential {
    pub fn new(from: i64, values: Vec<f64>) -> Self {
        Self { from, values }
    }

    /// Samples `f` along the orbit of `w` for `n_from ≤ n < n_to`.
    pub fn sample(t: &Iet, f: &SamplingFunction, w: f64, n_from: i64, n_to: i64) -> Result<Self> {
        if n_to < n_from {
            return Err(Error::Argument(format!("window [{n_from}, {n_to}) is reversed")));
        }
        if n_to == n_from {
            t.apply(w)?;
            return Ok(Self::new(n_from, Vec::new()));
        }
        let orbit = t.orbit(w, n_from, n_to - 1)?;
        Ok(Self::new(n_from, orbit.into_iter().map(|x| f.value(x)).collect()))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One past the last site.
    pub fn to(&self) -> i64 {
        self.from + self.values.len() as i64
    }

    pub fn get(&self, n: i64) -> Option<f64> {
        if n < self.from {
            return None;
        }
        self.values.get((n - self.from) as usize).copied()
    }

    pub fn covers(&self, from: i64, to: i64) -> bool {
        self.from <= from && to <= self.to()
    }

    /// The sub-window `[from, to)`.
    pub fn slice(&self, from: i64, to: i64) -> Result<&[f64]> {
        if !self.covers(from, to) || to < from {
            return Err(Error::Window {
                from: self.from,
                to: self.to(),
            });
        }
        let a = (from - self.from) as usize;
        Ok(&self.values[a..a + (to - from) as usize])
    }

    /// `(Hψ)(n)` on the window, with `ψ` zero outside it.
    pub fn apply_operator(&self, psi: &[f64]) -> Result<Vec<f64>> {
        if psi.len() != self.values.len() {
            return Err(Error::Window {
                from: self.from,
                to: self.from + psi.len() as i64,
            });
        }
        let n = psi.len();
        Ok((0..n)
            .map(|i| {
                let up = if i + 1 < n { psi[i + 1] } else { 0.0 };
                let down = if i > 0 { psi[i - 1] } else { 0.0 };
                up + down + self.values[i] * psi[i]
            })
            .collect())
    }
}

/// A 2×2 real matrix, row-major.
pub type Mat2 = [[f64; 2]; 2];

/// `A_E(v) = [[E − v, −1], [1, 0]]`.
pub fn transfer_step(energy: f64, v: f64) -> Mat2 {
    [[energy - v, -1.0], [1.0, 0.0]]
}

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Operator 2-norm (largest singular value).
pub fn norm2(m: &Mat2) -> f64 {
    let [[a, b], [c, d]] = *m;
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    ((s + disc) / 2.0).sqrt()
}

pub fn mul2(x: &Mat2, y: &Mat2) -> Mat2 {
    [
        [
            x[0][0] * y[0][0] + x[0][1] * y[1][0],
            x[0][0] * y[0][1] + x[0][1] * y[1][1],
        ],
        [
            x[1][0] * y[0][0] + x[1][1] * y[1][0],
            x[1][0] * y[0][1] + x[1][1] * y[1][1],
        ],
    ]
}

/// A cocycle product `A_E(V(n−1)) ⋯ A_E(V(0))`, stored as
/// `exp(log_norm) · unit_matrix` with `unit_matrix` of norm `O(1)`.
///
/// Internally the product is kept in QR form `Q · R` with `Q` a rotation
/// and `R = [[e^{s₁}, X], [0, e^{s₂}]]`; `log_norm = s₁`. The second
/// diagonal log `s₂` is tracked as well so the determinant `e^{s₁ + s₂}`
/// can be reconstructed without cancellation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleProduct {
    pub energy: f64,
    pub steps: usize,
    pub log_norm: f64,
    pub unit_matrix: Mat2,
    /// `s₂`, the log of the lower diagonal entry of `R`.
    pub log_minor: f64,
}

impl CocycleProduct {
    /// Finite-`n` Lyapunov quotient `(log_norm + ln‖unit_matrix‖) / n`.
    pub fn lyapunov_quotient(&self) -> f64 {
        if self.steps == 0 {
            return 0.0;
        }
        (self.log_norm + norm2(&self.unit_matrix).ln()) / self.steps as f64
    }

    /// `ln ‖product‖`.
    pub fn log_norm_total(&self) -> f64 {
        self.log_norm + norm2(&self.unit_matrix).ln()
    }

    /// Determinant of the represented product, `exp(s₁ + s₂)`.
    pub fn determinant(&self) -> f64 {
        (self.log_norm + self.log_minor).exp()
    }

    /// The full product; overflows for large `log_norm`.
    pub fn matrix(&self) -> Mat2 {
        let s = self.log_norm.exp();
        let u = &self.unit_matrix;
        [[s * u[0][0], s * u[0][1]], [s * u[1][0], s * u[1][1]]]
    }
}

/// Accumulates `A_E(v_{n−1}) ⋯ A_E(v_0)` for a stream of potential values.
#[derive(Debug, Clone)]
struct QrAccumulator {
    energy: f64,
    // Q = [[c, −s], [s, c]]
    c: f64,
    s: f64,
    log1: f64,
    log2: f64,
    // running products of the R diagonals since the last fold
    p1: f64,
    p2: f64,
    // X / e^{s₁} and e^{s₂ − s₁}, both O(1)
    x: f64,
    ratio: f64,
    steps: usize,
}

impl QrAccumulator {
    fn new(energy: f64) -> Self {
        Self {
            energy,
            c: 1.0,
            s: 0.0,
            log1: 0.0,
            log2: 0.0,
            p1: 1.0,
            p2: 1.0,
            x: 0.0,
            ratio: 1.0,
            steps: 0,
        }
    }

    #[inline]
    fn push(&mut self, v: f64) {
        let a = self.energy - v;
        let (c, s) = (self.c, self.s);
        // B = A · Q
        let b11 = a * c - s;
        let b21 = c;
        let b12 = -a * s - c;
        let b22 = -s;
        let r11 = b11.hypot(b21);
        let (cn, sn) = (b11 / r11, b21 / r11);
        let r12 = cn * b12 + sn * b22;
        let r22 = cn * b22 - sn * b12;
        self.c = cn;
        self.s = sn;
        self.x += r12 / r11 * self.ratio;
        self.ratio *= r22 / r11;
        self.p1 *= r11;
        self.p2 *= r22;
        self.steps += 1;
        if self.steps.is_multiple_of(RESCALE_CADENCE) {
            self.fold();
        }
    }

    fn fold(&mut self) {
        self.log1 += self.p1.ln();
        self.log2 += self.p2.abs().ln();
        self.p1 = 1.0;
        self.p2 = self.p2.signum();
    }

    fn finish(mut self) -> CocycleProduct {
        self.fold();
        let (c, s) = (self.c, self.s);
        // R / e^{s₁} = [[1, x], [0, ±ratio]]
        let r = [[1.0, self.x], [0.0, self.ratio]];
        let q = [[c, -s], [s, c]];
        CocycleProduct {
            energy: self.energy,
            steps: self.steps,
            log_norm: self.log1,
            unit_matrix: mul2(&q, &r),
            log_minor: self.log2,
        }
    }
}

/// Product of transfer matrices over a precomputed potential sequence.
pub fn cocycle_product_of(energy: f64, potential: &[f64]) -> CocycleProduct {
    let mut acc = QrAccumulator::new(energy);
    for &v in potential {
        acc.push(v);
    }
    acc.finish()
}

/// `A_E(T^{n−1}w) ⋯ A_E(w)`.
pub fn cocycle_product(
    t: &Iet,
    f: &SamplingFunction,
    w: f64,
    energy: f64,
    n: usize,
) -> Result<CocycleProduct> {
    if n < 1 {
        return Err(Error::Argument("cocycle products need n >= 1".to_string()));
    }
    t.apply(w)?;
    let mut acc = QrAccumulator::new(energy);
    let mut x = w;
    for _ in 0..n {
        acc.push(f.value(x));
        x = t.step(x);
    }
    Ok(acc.finish())
}

/// Mean and standard error of the finite-`n` Lyapunov quotient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub energy: f64,
    pub n: usize,
    pub m_samples: usize,
    pub mean: f64,
    pub stderr: f64,
    pub seed: u64,
}

/// Base points `ω_1 … ω_m`, uniform on `[0, 1)`, drawn from `seed`.
pub fn base_points(seed: u64, m: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| rng.gen::<f64>()).collect()
}

fn summarize(energy: f64, n: usize, seed: u64, quotients: &[f64]) -> LyapunovEstimate {
    let m = quotients.len();
    let mean = quotients.iter().sum::<f64>() / m as f64;
    let stderr = if m > 1 {
        let var = quotients.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        (var / m as f64).sqrt()
    } else {
        0.0
    };
    // quotients are ≥ 0 up to rounding; clamp the noise
    let mean = if mean < 0.0 && -mean <= 3.0 * stderr + 1e-6 {
        0.0
    } else {
        mean
    };
    LyapunovEstimate {
        energy,
        n,
        m_samples: m,
        mean,
        stderr,
        seed,
    }
}

/// Minimum orbit length accepted by [`lyapunov`] and [`lyapunov_grid`].
pub const MIN_LYAPUNOV_STEPS: usize = 1_000;

/// `L(E) ≈ mean over ω of (1/n) ln‖A_Eⁿ(ω)‖`, with `ω` drawn uniformly.
pub fn lyapunov(
    t: &Iet,
    f: &SamplingFunction,
    energy: f64,
    n: usize,
    m_samples: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    let mut out = lyapunov_grid(t, f, &[energy], n, m_samples, seed)?;
    Ok(out.remove(0))
}

/// Lyapunov estimates on an energy grid, in grid order.
///
/// All energies share the same `m_samples` base points, so each potential
/// sequence is generated once and every estimate depends only on
/// `(E, seed)`, not on its position in the grid or on the thread count.
/// Work is spread over the current rayon pool.
pub fn lyapunov_grid(
    t: &Iet,
    f: &SamplingFunction,
    energies: &[f64],
    n: usize,
    m_samples: usize,
    seed: u64,
) -> Result<Vec<LyapunovEstimate>> {
    if energies.is_empty() {
        return Err(Error::Argument("energy grid is empty".to_string()));
    }
    if n < MIN_LYAPUNOV_STEPS {
        return Err(Error::Argument(format!(
            "Lyapunov estimates need n >= {MIN_LYAPUNOV_STEPS}, got {n}"
        )));
    }
    if m_samples < 1 {
        return Err(Error::Argument("m_samples must be at least 1".to_string()));
    }
    let mut quotients = vec![Vec::with_capacity(m_samples); energies.len()];
    for w in base_points(seed, m_samples) {
        let potential = Potential::sample(t, f, w, 0, n as i64)?;
        let row: Vec<f64> = energies
            .par_iter()
            .map(|&e| cocycle_product_of(e, &potential.values).lyapunov_quotient())
            .collect();
        for (q, v) in quotients.iter_mut().zip(row) {
            q.push(v);
        }
    }
    Ok(energies
        .iter()
        .zip(&quotients)
        .map(|(&e, q)| summarize(e, n, seed, q))
        .collect())
}

/// Eigenvalues of a Dirichlet truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumApprox {
    pub size: usize,
    pub base_point: Option<f64>,
    pub eigenvalues: Vec<f64>,
}

/// Number of eigenvalues strictly below `x` of the Jacobi matrix with
/// diagonal `diag` and unit off-diagonal, by Sturm sequence.
pub fn sturm_count(diag: &[f64], x: f64) -> usize {
    let pivmin = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut d = 1.0;
    for (i, &a) in diag.iter().enumerate() {
        d = if i == 0 { a - x } else { a - x - 1.0 / d };
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn bisect_eigenvalue(diag: &[f64], k: usize, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    // invariant: count(lo) ≤ k < count(hi)
    loop {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return mid;
        }
        if sturm_count(diag, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// All eigenvalues of the truncation to sites `0..m` of `v`, by bisection
/// on Sturm counts to absolute tolerance `1e-10`.
pub fn truncated_spectrum(v: &Potential, m: usize) -> Result<SpectrumApprox> {
    if m < 1 {
        return Err(Error::Argument("truncation size must be at least 1".to_string()));
    }
    let diag = v.slice(0, m as i64)?;
    Ok(SpectrumApprox {
        size: m,
        base_point: None,
        eigenvalues: jacobi_eigenvalues(diag),
    })
}

/// Eigenvalues of the Jacobi matrix with the given diagonal and unit
/// off-diagonal, increasing.
pub fn jacobi_eigenvalues(diag: &[f64]) -> Vec<f64> {
    let m = diag.len();
    if m == 0 {
        return Vec::new();
    }
    let (vmin, vmax) = diag
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let (lo, hi) = (vmin - 2.0 - EIGEN_TOL, vmax + 2.0 + EIGEN_TOL);
    let mut eig: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|k| bisect_eigenvalue(diag, k, lo, hi, EIGEN_TOL))
        .collect();
    // Nearly degenerate pairs (tunnelling splittings below the tolerance)
    // are refined to machine precision.
    for k in 1..m {
        if eig[k] <= eig[k - 1] {
            eig[k - 1] = bisect_eigenvalue(diag, k - 1, lo, hi, 0.0);
            eig[k] = bisect_eigenvalue(diag, k, lo, hi, 0.0);
            if eig[k] <= eig[k - 1] {
                eig[k] = next_up(eig[k - 1]);
            }
        }
    }
    eig
}

/// Unit eigenvector of the Jacobi matrix for an eigenvalue `lambda`, by
/// twisted factorization: forward and backward pivots meet at the index
/// where the twist is smallest.
pub fn jacobi_eigenvector(diag: &[f64], lambda: f64) -> Vec<f64> {
    let m = diag.len();
    if m == 1 {
        return vec![1.0];
    }
    let pivmin = f64::MIN_POSITIVE.sqrt();
    let guard = |d: f64| if d.abs() < pivmin { -pivmin } else { d };
    let mut fwd = vec![0.0; m];
    let mut bwd = vec![0.0; m];
    fwd[0] = guard(diag[0] - lambda);
    for i in 1..m {
        fwd[i] = guard(diag[i] - lambda - 1.0 / fwd[i - 1]);
    }
    bwd[m - 1] = guard(diag[m - 1] - lambda);
    for i in (0..m - 1).rev() {
        bwd[i] = guard(diag[i] - lambda - 1.0 / bwd[i + 1]);
    }
    let k = (0..m)
        .min_by(|&a, &b| {
            let ga = (fwd[a] + bwd[a] - (diag[a] - lambda)).abs();
            let gb = (fwd[b] + bwd[b] - (diag[b] - lambda)).abs();
            ga.total_cmp(&gb)
        })
        .expect("non-empty");
    let mut z = vec![0.0; m];
    z[k] = 1.0;
    for i in (0..k).rev() {
        z[i] = -z[i + 1] / fwd[i];
    }
    for i in k + 1..m {
        z[i] = -z[i - 1] / bwd[i];
    }
    let scale = z.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let norm = z.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt() * scale;
    z.iter().map(|x| x / norm).collect()
}

/// Default share of the window, at each end, treated as boundary layer.
pub const EDGE_LAYER: f64 = 0.1;
/// Eigenvectors with more than this share of their mass in the boundary
/// layers are treated as edge states.
pub const EDGE_MASS: f64 = 0.5;

/// Truncated spectrum with Dirichlet edge states removed: eigenvalues whose
/// eigenvectors carry more than `max_edge_mass` of their ℓ² mass within
/// `edge_layer·m` sites of either end. Edge states sit in spectral gaps at
/// ω-dependent positions and do not disappear as `m` grows.
pub fn bulk_spectrum(v: &Potential, m: usize, edge_layer: f64, max_edge_mass: f64) -> Result<SpectrumApprox> {
    let full = truncated_spectrum(v, m)?;
    remove_edge_states(v, &full, edge_layer, max_edge_mass)
}

/// [`bulk_spectrum`] for an already computed truncation of `v`.
pub fn remove_edge_states(
    v: &Potential,
    full: &SpectrumApprox,
    edge_layer: f64,
    max_edge_mass: f64,
) -> Result<SpectrumApprox> {
    if !(0.0..0.5).contains(&edge_layer) || !(0.0..=1.0).contains(&max_edge_mass) {
        return Err(Error::Argument(format!(
            "edge layer {edge_layer} must lie in [0, 0.5) and edge mass {max_edge_mass} in [0, 1]"
        )));
    }
    let m = full.size;
    let diag = v.slice(0, m as i64)?;
    let width = (edge_layer * m as f64).round() as usize;
    let eigenvalues = full
        .eigenvalues
        .par_iter()
        .copied()
        .filter(|&e| {
            let z = jacobi_eigenvector(diag, e);
            let edge: f64 = z[..width].iter().chain(&z[m - width..]).map(|x| x * x).sum();
            edge <= max_edge_mass
        })
        .collect();
    Ok(SpectrumApprox {
        eigenvalues,
        ..full.clone()
    })
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

/// Distance from `x` to the nearest element of a sorted, non-empty slice.
pub fn distance_to_set(sorted: &[f64], x: f64) -> f64 {
    let i = sorted.partition_point(|&s| s < x);
    let mut best = f64::INFINITY;
    if i < sorted.len() {
        best = best.min((sorted[i] - x).abs());
    }
    if i > 0 {
        best = best.min((x - sorted[i - 1]).abs());
    }
    best
}

/// Hausdorff distance between two eigenvalue sets.
pub fn spectrum_hausdorff(a: &SpectrumApprox, b: &SpectrumApprox) -> Result<f64> {
    hausdorff(&a.eigenvalues, &b.eigenvalues)
}

/// Hausdorff distance between two sorted, non-empty sets of reals.
pub fn hausdorff(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument("Hausdorff distance of an empty set".to_string()));
    }
    let one_way = |x: &[f64], y: &[f64]| x.iter().map(|&p| distance_to_set(y, p)).fold(0.0, f64::max);
    Ok(one_way(a, b).max(one_way(b, a)))
}

/// Share of the energy grid near the truncated spectrum where the
/// Lyapunov estimate stays below `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcReport {
    pub tau: f64,
    pub truncation: usize,
    /// Grid points within this distance of an eigenvalue count as "on the
    /// spectrum".
    pub band: f64,
    pub grid_points: usize,
    pub points_near_spectrum: usize,
    pub points_below_tau: usize,
    /// Grid mass (trapezoid weights) near the spectrum with `L(E) < tau`,
    /// divided by the grid mass near the spectrum.
    pub fraction: f64,
    pub lyapunov_steps: usize,
    pub disclaimer: String,
}

/// Numerical proxy for the presence of absolutely continuous spectrum.
pub fn ac_indicator(
    estimates: &[LyapunovEstimate],
    spectrum: &SpectrumApprox,
    tau: f64,
) -> Result<AcReport> {
    let eig = &spectrum.eigenvalues;
    if estimates.is_empty() || eig.is_empty() {
        return Err(Error::Argument("AC indicator needs estimates and eigenvalues".to_string()));
    }
    if estimates.windows(2).any(|w| w[1].energy <= w[0].energy) {
        return Err(Error::Argument("energy grid must be strictly increasing".to_string()));
    }
    let (emin, emax) = (estimates[0].energy, estimates[estimates.len() - 1].energy);
    let (smin, smax) = (eig[0], eig[eig.len() - 1]);
    if emin > smin - 0.1 + 1e-12 || emax < smax + 0.1 - 1e-12 {
        return Err(Error::Precondition(format!(
            "grid [{emin}, {emax}] must cover the spectrum [{smin}, {smax}] padded by 0.1"
        )));
    }
    let band = 2.0 / spectrum.size as f64;
    let k = estimates.len();
    let weight = |i: usize| -> f64 {
        let left = if i > 0 { estimates[i].energy - estimates[i - 1].energy } else { 0.0 };
        let right = if i + 1 < k { estimates[i + 1].energy - estimates[i].energy } else { 0.0 };
        0.5 * (left + right)
    };
    let (mut near_mass, mut low_mass) = (0.0, 0.0);
    let (mut near, mut low) = (0, 0);
    for (i, est) in estimates.iter().enumerate() {
        if distance_to_set(eig, est.energy) <= band {
            near += 1;
            near_mass += weight(i);
            if est.mean < tau {
                low += 1;
                low_mass += weight(i);
            }
        }
    }
    let fraction = if near_mass > 0.0 { low_mass / near_mass } else { 0.0 };
    Ok(AcReport {
        tau,
        truncation: spectrum.size,
        band,
        grid_points: k,
        points_near_spectrum: near,
        points_below_tau: low,
        fraction,
        lyapunov_steps: estimates[0].n,
        disclaimer: AC_DISCLAIMER.to_string(),
    })
}

/// Uniform grid of `count` points on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
