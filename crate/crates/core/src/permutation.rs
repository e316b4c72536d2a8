//! Combinatorics of the permutation π of an interval exchange.
//!
//! Everything here is exact and depends on π alone: irreducibility, the
//! rotation class, the discontinuity graph `G` with its two special edges,
//! and the Type W recursion. Indices follow the usual convention for
//! interval exchanges and are 1-based: `π(j)` is the slot that the `j`-th
//! interval occupies after the exchange.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::FunctionMetadata;

/// A bijection of `{1, …, r}` with `r ≥ 2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    image: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    /// Builds a permutation from its one-line notation `(π(1), …, π(r))`.
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let r = image.len();
        if r < 2 {
            return Err(Error::InvalidPermutation(format!(
                "need at least 2 symbols, got {r}"
            )));
        }
        let mut inverse = vec![0usize; r];
        for (j, &v) in image.iter().enumerate() {
            if v == 0 || v > r {
                return Err(Error::InvalidPermutation(format!(
                    "value {v} at position {} is outside 1..={r}",
                    j + 1
                )));
            }
            if inverse[v - 1] != 0 {
                return Err(Error::InvalidPermutation(format!("value {v} repeats")));
            }
            inverse[v - 1] = j + 1;
        }
        Ok(Self { image, inverse })
    }

    pub fn identity(r: usize) -> Result<Self> {
        Self::new((1..=r).collect())
    }

    /// The order-reversing permutation `π(j) = r + 1 − j`.
    pub fn reversal(r: usize) -> Result<Self> {
        Self::new((1..=r).rev().collect())
    }

    /// The permutation of rotation class `k`: `π(j) − 1 ≡ j + k (mod r)`.
    pub fn from_rotation_class(r: usize, k: usize) -> Result<Self> {
        if k >= r {
            return Err(Error::Argument(format!("rotation class {k} must be < {r}")));
        }
        Self::new((1..=r).map(|j| (j + k) % r + 1).collect())
    }

    /// Number of exchanged intervals.
    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    /// `π(j)` for `1 ≤ j ≤ r`.
    pub fn at(&self, j: usize) -> usize {
        self.image[j - 1]
    }

    /// `π⁻¹(v)` for `1 ≤ v ≤ r`.
    pub fn inv(&self, v: usize) -> usize {
        self.inverse[v - 1]
    }

    /// One-line notation, 1-based.
    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn inverse(&self) -> Permutation {
        Permutation {
            image: self.inverse.clone(),
            inverse: self.image.clone(),
        }
    }

    /// `false` iff some `k < r` has `π({1..k}) = {1..k}`.
    pub fn is_irreducible(&self) -> bool {
        let r = self.len();
        let mut max_seen = 0;
        for k in 1..r {
            max_seen = max_seen.max(self.at(k));
            if max_seen == k {
                return false;
            }
        }
        true
    }

    /// The unique `k ∈ {0..r−1}` with `π(j) − 1 ≡ j + k (mod r)` for all
    /// `j`, if there is one.
    pub fn rotation_class(&self) -> Option<usize> {
        let r = self.len();
        let k = (self.at(1) - 1 + r - 1) % r;
        (1..=r)
            .all(|j| (self.at(j) - 1) % r == (j + k) % r)
            .then_some(k)
    }

    fn require_irreducible(&self) -> Result<()> {
        if self.is_irreducible() {
            Ok(())
        } else {
            Err(Error::Reducible(self.to_string()))
        }
    }

    /// Runs the Type W recursion `a₀ = 1`, `a_{k+1} = π⁻¹(π(a_k) − 1) + 1`,
    /// stopping at the first `a_s ∈ {π⁻¹(1), r + 1}`.
    pub fn type_w(&self) -> Result<TypeWTrace> {
        self.require_irreducible()?;
        let r = self.len();
        let target = self.inv(1);
        let mut a = vec![1usize];
        loop {
            let last = *a.last().expect("trace starts non-empty");
            if last == target || last == r + 1 {
                let s = a.len() - 1;
                return Ok(TypeWTrace {
                    verdict: last == target,
                    a,
                    s,
                });
            }
            if a.len() > r + 1 {
                // Cannot happen for irreducible π: the recursion walks the
                // cycle through vertex 0 of the discontinuity graph.
                return Err(Error::Precondition(format!(
                    "Type W recursion for {self} did not terminate"
                )));
            }
            a.push(self.inv(self.at(last) - 1) + 1);
        }
    }

    pub fn is_type_w(&self) -> Result<bool> {
        Ok(self.type_w()?.verdict)
    }

    /// Checks the recursion verdict against the graph: Type W iff the cycle
    /// of `G` through vertex `0` carries exactly one special edge.
    pub fn cross_check_type_w(&self) -> Result<bool> {
        let trace = self.type_w()?;
        let graph = DiscontinuityGraph::new(self)?;
        let through_zero = graph.cycle_of(Vertex::ZERO);
        Ok(trace.verdict == (through_zero.special_count == 1))
    }

    /// Iterates over all permutations of `r` symbols in lexicographic order.
    pub fn all(r: usize) -> impl Iterator<Item = Permutation> {
        let mut next: Option<Vec<usize>> = (r >= 2).then(|| (1..=r).collect());
        std::iter::from_fn(move || {
            let current = next.take()?;
            let mut succ = current.clone();
            if next_permutation(&mut succ) {
                next = Some(succ);
            }
            Some(Permutation::new(current).expect("enumeration yields bijections"))
        })
    }

    /// All irreducible permutations of `r` symbols.
    pub fn all_irreducible(r: usize) -> impl Iterator<Item = Permutation> {
        Self::all(r).filter(Permutation::is_irreducible)
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(image: Vec<usize>) -> Result<Self> {
        Permutation::new(image)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.image
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in &self.image {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    /// Parses one-line notation such as `"3 2 1"`; commas are accepted as
    /// separators too.
    fn from_str(s: &str) -> Result<Self> {
        let mut image = Vec::new();
        let mut start = None;
        let bytes = s.as_bytes();
        for i in 0..=bytes.len() {
            let sep = i == bytes.len() || bytes[i].is_ascii_whitespace() || bytes[i] == b',';
            match (sep, start) {
                (false, None) => start = Some(i),
                (true, Some(st)) => {
                    let token = &s[st..i];
                    let v = token.parse::<usize>().map_err(|_| Error::Parse {
                        position: st,
                        message: format!("expected a positive integer, found {token:?}"),
                    })?;
                    image.push(v);
                    start = None;
                }
                _ => {}
            }
        }
        Permutation::new(image)
    }
}

/// The stopped Type W sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeWTrace {
    pub a: Vec<usize>,
    pub s: usize,
    pub verdict: bool,
}

/// A vertex of the discontinuity graph, identified with the endpoint it
/// stands for: `0` is the left end of `[0, 1)`, `j ∈ 1..r` is the right
/// endpoint `ω_j` of `I_j`, and `r` is the right end `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex(pub usize);

impl Vertex {
    pub const ZERO: Vertex = Vertex(0);

    pub fn label(self, r: usize) -> String {
        match self.0 {
            0 => "0".to_string(),
            j if j == r => "1".to_string(),
            j => format!("w{j}"),
        }
    }

    pub fn is_discontinuity(self, r: usize) -> bool {
        self.0 != 0 && self.0 != r
    }
}

/// A cycle of `G`, listed from its smallest vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle {
    pub vertices: Vec<Vertex>,
    pub special_count: usize,
    pub omega_count: usize,
}

/// The discontinuity graph of an irreducible permutation.
///
/// Out- and in-degrees are exactly one, so `G` is a disjoint union of
/// cycles. The special edge `ẽ1` leaves `0`, and `ẽ2` enters `1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscontinuityGraph {
    r: usize,
    successor: Vec<Vertex>,
    cycles: Vec<Cycle>,
}

impl DiscontinuityGraph {
    pub fn new(p: &Permutation) -> Result<Self> {
        p.require_irreducible()?;
        let r = p.len();
        // The slot right after slot v starts at the left endpoint of the
        // interval π⁻¹(v + 1); that endpoint is vertex π⁻¹(v + 1) − 1.
        let after_slot = |v: usize| Vertex(p.inv(v + 1) - 1);

        let mut successor = vec![Vertex(0); r + 1];
        successor[0] = Vertex(p.inv(1) - 1);
        for j in 1..r {
            successor[j] = if p.at(j) == r {
                Vertex(r)
            } else {
                after_slot(p.at(j))
            };
        }
        // T₋(1) is the right end of slot π(r); π(r) < r by irreducibility.
        successor[r] = after_slot(p.at(r));

        let cycles = Self::find_cycles(r, &successor);
        Ok(Self {
            r,
            successor,
            cycles,
        })
    }

    fn find_cycles(r: usize, successor: &[Vertex]) -> Vec<Cycle> {
        let mut seen = vec![false; r + 1];
        let mut cycles = Vec::new();
        for start in 0..=r {
            if seen[start] {
                continue;
            }
            let mut vertices = Vec::new();
            let mut special_count = 0;
            let mut v = Vertex(start);
            while !seen[v.0] {
                seen[v.0] = true;
                vertices.push(v);
                let next = successor[v.0];
                if v.0 == 0 || next.0 == r {
                    special_count += 1;
                }
                v = next;
            }
            let omega_count = vertices.iter().filter(|v| v.is_discontinuity(r)).count();
            cycles.push(Cycle {
                vertices,
                special_count,
                omega_count,
            });
        }
        cycles
    }

    /// Number of intervals `r` of the underlying permutation.
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> {
        (0..=self.r).map(Vertex)
    }

    pub fn successor(&self, v: Vertex) -> Vertex {
        self.successor[v.0]
    }

    /// Whether the edge leaving `from` is one of the two special edges.
    pub fn is_special(&self, from: Vertex) -> bool {
        from.0 == 0 || self.successor[from.0].0 == self.r
    }

    /// All edges as `(from, to, special)`, ordered by source vertex.
    pub fn edges(&self) -> Vec<(Vertex, Vertex, bool)> {
        self.vertices()
            .map(|v| (v, self.successor(v), self.is_special(v)))
            .collect()
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn cycle_of(&self, v: Vertex) -> &Cycle {
        self.cycles
            .iter()
            .find(|c| c.vertices.contains(&v))
            .expect("cycles partition the vertex set")
    }

    /// The largest number of distinct discontinuities `ω_j` on a directed
    /// path. `G` is a union of cycles, so this is the per-cycle maximum.
    pub fn max_distinct_discontinuity_path(&self) -> usize {
        self.cycles.iter().map(|c| c.omega_count).max().unwrap_or(0)
    }

    pub fn has_one_special_edge_cycle(&self) -> bool {
        self.cycles.iter().any(|c| c.special_count == 1)
    }

    pub fn to_doc(&self) -> GraphDoc {
        let label = |v: Vertex| v.label(self.r);
        GraphDoc {
            vertices: self.vertices().map(label).collect(),
            edges: self
                .edges()
                .into_iter()
                .map(|(from, to, special)| EdgeDoc {
                    from: label(from),
                    to: label(to),
                    special,
                })
                .collect(),
            cycles: self
                .cycles
                .iter()
                .map(|c| CycleDoc {
                    vertices: c.vertices.iter().map(|&v| label(v)).collect(),
                    special_count: c.special_count,
                    omega_count: c.omega_count,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_doc()).expect("graph documents serialize")
    }

    /// Graphviz rendering; special edges are drawn bold and labelled.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph G {\n  rankdir=LR;\n");
        for v in self.vertices() {
            out.push_str(&format!("  \"{}\";\n", v.label(self.r)));
        }
        for (from, to, special) in self.edges() {
            let attrs = match (special, from.0) {
                (true, 0) => " [style=bold, label=\"e1\"]",
                (true, _) => " [style=bold, label=\"e2\"]",
                (false, _) => "",
            };
            out.push_str(&format!(
                "  \"{}\" -> \"{}\"{attrs};\n",
                from.label(self.r),
                to.label(self.r)
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Serializable view of a [`DiscontinuityGraph`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeDoc>,
    pub cycles: Vec<CycleDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub from: String,
    pub to: String,
    pub special: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleDoc {
    pub vertices: Vec<String>,
    pub special_count: usize,
    pub omega_count: usize,
}

/// How a sufficient condition for empty absolutely continuous spectrum
/// relates to a given `(π, f)` pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum CriterionStatus {
    Applies(String),
    Conditional(String),
    NotApplicable(String),
}

impl CriterionStatus {
    pub fn applies(&self) -> bool {
        matches!(self, CriterionStatus::Applies(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub criterion: String,
    #[serde(flatten)]
    pub status: CriterionStatus,
}

/// Combinatorial classification of a permutation against the known
/// sufficient conditions for `σ_ac = ∅`, all of which assume Keane.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub permutation: String,
    pub rotation_class: Option<usize>,
    pub type_w: TypeWTrace,
    pub cycle_special_counts: Vec<usize>,
    pub max_distinct_discontinuities: usize,
    pub criteria: Vec<CriterionOutcome>,
    /// Keane + Type W ⇒ no continuous eigenfunctions.
    pub topologically_weakly_mixing: bool,
    /// Keane + Type W ⇒ no topological factors.
    pub topologically_prime: bool,
    pub verdict: String,
}

pub const CRITERION_ONE_SPECIAL_EDGE: &str = "one-special-edge-cycle";
pub const CRITERION_PREIMAGE: &str = "preimage-cardinality";
pub const CRITERION_LIPSCHITZ: &str = "lipschitz-weak-mixing";
pub const CRITERION_MAX: &str = "non-degenerate-maximum";

/// Decides which combinatorial criteria give `σ_ac(H_ω) = ∅` for `π` and a
/// sampling function described by `meta`.
pub fn classify(p: &Permutation, meta: &FunctionMetadata) -> Result<ClassificationReport> {
    let graph = DiscontinuityGraph::new(p)?;
    let type_w = p.type_w()?;
    let rotation_class = p.rotation_class();
    let ell = graph.max_distinct_discontinuity_path();
    let continuous = meta.continuous;
    let nonconstant = !meta.is_constant;

    let mut criteria = Vec::new();

    let one_special = if !graph.has_one_special_edge_cycle() {
        CriterionStatus::NotApplicable(
            "every cycle of G has zero or two special edges".to_string(),
        )
    } else if !continuous || !nonconstant {
        CriterionStatus::NotApplicable(
            "G has a one-special-edge cycle, but f is not continuous and non-constant".to_string(),
        )
    } else {
        CriterionStatus::Applies(
            "G has a cycle with exactly one special edge; every continuous non-constant f qualifies"
                .to_string(),
        )
    };
    criteria.push(CriterionOutcome {
        criterion: CRITERION_ONE_SPECIAL_EDGE.to_string(),
        status: one_special,
    });

    let preimage = match meta.level_set_bound {
        None => CriterionStatus::NotApplicable("no level-set bound declared".to_string()),
        Some(b) if continuous && ell >= 1 && b < ell => CriterionStatus::Applies(format!(
            "level sets have at most {b} points and G has a path through {ell} distinct discontinuities"
        )),
        Some(b) => CriterionStatus::NotApplicable(format!(
            "needs level sets of at most {} points (path with {ell} distinct discontinuities), declared bound is {b}",
            ell.saturating_sub(1)
        )),
    };
    criteria.push(CriterionOutcome {
        criterion: CRITERION_PREIMAGE.to_string(),
        status: preimage,
    });

    let lipschitz = match (meta.lipschitz_constant, rotation_class) {
        (None, _) => CriterionStatus::NotApplicable("no Lipschitz constant declared".to_string()),
        (Some(_), _) if !nonconstant => {
            CriterionStatus::NotApplicable("f is constant".to_string())
        }
        (Some(_), Some(k)) => CriterionStatus::NotApplicable(format!(
            "rotation class k={k}: the exchange is a circle rotation and never weakly mixing"
        )),
        (Some(k), None) => CriterionStatus::Conditional(format!(
            "f is {k}-Lipschitz; holds whenever T is weakly mixing, which is the case for Lebesgue-a.e. length vector"
        )),
    };
    criteria.push(CriterionOutcome {
        criterion: CRITERION_LIPSCHITZ.to_string(),
        status: lipschitz,
    });

    let max = match (&meta.nondeg_max, rotation_class) {
        (None, _) => CriterionStatus::NotApplicable("no non-degenerate maximum declared".to_string()),
        (Some(_), _) if !meta.differentiable => CriterionStatus::NotApplicable(
            "non-degenerate maximum declared but f is not C¹".to_string(),
        ),
        (Some(_), Some(k)) => CriterionStatus::NotApplicable(format!(
            "rotation class k={k}: criterion excluded for circle rotations"
        )),
        (Some(m), None) => CriterionStatus::Applies(format!(
            "C¹ function with a non-degenerate maximum at {}",
            m.location
        )),
    };
    criteria.push(CriterionOutcome {
        criterion: CRITERION_MAX.to_string(),
        status: max,
    });

    let verdict = match criteria.iter().find(|c| c.status.applies()) {
        Some(c) => format!(
            "sigma_ac = empty for every omega under the Keane condition, by the {} criterion",
            c.criterion
        ),
        None => "no combinatorial criterion applies; the spectral verdict requires a dynamics-level scan of f o T^n".to_string(),
    };

    Ok(ClassificationReport {
        permutation: p.to_string(),
        rotation_class,
        cycle_special_counts: graph.cycles().iter().map(|c| c.special_count).collect(),
        max_distinct_discontinuities: ell,
        criteria,
        topologically_weakly_mixing: type_w.verdict,
        topologically_prime: type_w.verdict,
        type_w,
        verdict,
    })
}
