use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use iet_spectral::cocycle::{
    cocycle_product_of, lyapunov, sturm_count, truncated_spectrum, Potential,
};
use iet_spectral::gordon::{gordon_certificate, gordon_sup_diff, ContinuedFraction};
use iet_spectral::permutation::Vertex;
use iet_spectral::sampling::{power_gap, scan_maincond, DEFAULT_TAU};
use iet_spectral::{DiscontinuityGraph, Iet, Permutation, SamplingFunction};

fn irreducible(max_r: usize) -> impl Strategy<Value = Permutation> {
    (2..=max_r).prop_flat_map(|r| {
        let all: Vec<Permutation> = Permutation::all_irreducible(r).collect();
        (0..all.len()).prop_map(move |i| all[i].clone())
    })
}

fn lengths(r: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, r).prop_map(|raw| {
        let s: f64 = raw.iter().sum();
        raw.iter().map(|x| x / s).collect()
    })
}

fn float_iet(max_r: usize) -> impl Strategy<Value = Iet> {
    irreducible(max_r).prop_flat_map(|p| {
        let r = p.len();
        lengths(r).prop_map(move |l| Iet::new(p.clone(), l).expect("valid"))
    })
}

fn exact_iet(max_r: usize) -> impl Strategy<Value = Iet> {
    irreducible(max_r).prop_flat_map(|p| {
        let r = p.len();
        prop::collection::vec(1u64..1000, r).prop_map(move |w| {
            let total: u64 = w.iter().sum();
            let l = w
                .iter()
                .map(|&x| BigRational::new(BigInt::from(x), BigInt::from(total)))
                .collect();
            Iet::new_exact(p.clone(), l).expect("valid")
        })
    })
}

/// Independent count of eigenvalues below `x`: sign changes of the
/// characteristic-polynomial sequence, rescaled to avoid overflow.
fn oracle_count_below(diag: &[f64], x: f64) -> usize {
    let (mut prev, mut cur) = (1.0f64, diag[0] - x);
    let mut count = usize::from(cur < 0.0);
    for &a in &diag[1..] {
        let next = (a - x) * cur - prev;
        let (p, c) = (cur, next);
        let s = p.abs().max(c.abs()).max(1e-300);
        prev = p / s;
        cur = c / s;
        // a sign change between consecutive terms, with zero taking the
        // sign opposite to its predecessor
        let flipped = (cur < 0.0) != (prev < 0.0) || cur == 0.0 && prev > 0.0;
        count += usize::from(flipped);
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_successor_is_a_bijection_with_two_special_edges(p in irreducible(7)) {
        let g = DiscontinuityGraph::new(&p).unwrap();
        let r = p.len();
        let mut hit = vec![false; r + 1];
        for v in g.vertices() {
            let s = g.successor(v);
            prop_assert!(!hit[s.0]);
            hit[s.0] = true;
        }
        let special: Vec<_> = g.edges().into_iter().filter(|e| e.2).collect();
        prop_assert_eq!(special.len(), 2);
        prop_assert!(g.is_special(Vertex::ZERO));
        prop_assert!(special.iter().any(|e| e.0 != Vertex::ZERO && e.1 == Vertex(r)));
    }

    #[test]
    fn type_w_trace_is_short_and_distinct(p in irreducible(7)) {
        let trace = p.type_w().unwrap();
        prop_assert!(trace.a.len() <= p.len() + 1);
        let mut seen = trace.a.clone();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), trace.a.len());
        prop_assert!(p.cross_check_type_w().unwrap());
    }

    #[test]
    fn permutation_text_round_trip(p in irreducible(7)) {
        let back: Permutation = p.to_string().parse().unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(p.inverse().inverse(), p);
    }

    #[test]
    fn apply_inverts(t in float_iet(6), xs in prop::collection::vec(0.0f64..1.0, 50)) {
        for x in xs {
            let y = t.apply_inverse(t.apply(x).unwrap()).unwrap();
            prop_assert!((y - x).abs() <= 1e-12);
        }
    }

    #[test]
    fn exact_apply_inverts(t in exact_iet(6), num in 0u64..10_000) {
        let x = BigRational::new(BigInt::from(num), BigInt::from(10_000u64));
        prop_assert_eq!(t.apply_inverse_exact(&t.apply_exact(&x).unwrap()).unwrap(), x);
    }

    #[test]
    fn exact_powers_preserve_length(t in exact_iet(5), n in 1i64..12, num in 1u64..9_999) {
        let w = BigRational::new(BigInt::from(num), BigInt::from(10_000u64));
        let d = BigRational::new(BigInt::from(1), BigInt::from(10_000_000u64));
        let w2 = &w + &d;
        let (lo, hi) = (iet_spectral::iet::rational_to_f64(&w), iet_spectral::iet::rational_to_f64(&w2));
        let jumps = t.discontinuities_of_power(n as u64);
        prop_assume!(!jumps.iter().any(|&j| j > lo && j <= hi));
        let a = t.power_exact(&w, n).unwrap();
        let b = t.power_exact(&w2, n).unwrap();
        prop_assert_eq!(b - a, d);
    }

    #[test]
    fn discontinuities_are_bounded_genuine_jumps(t in float_iet(5), n in 1u64..8) {
        let jumps = t.discontinuities_of_power(n);
        prop_assert!(jumps.len() as u64 <= n * (t.lengths().len() as u64 - 1));
        for &d in &jumps {
            let value = t.power(d, n as i64).unwrap();
            let limit = t.left_limit_power(d, n).unwrap();
            prop_assert!((value - limit).abs() > 1e-9, "{d}: {value} vs {limit}");
        }
    }

    #[test]
    fn left_limits_match_numeric_limits(t in float_iet(6), n in 1u64..10, w in 0.01f64..1.0) {
        let limit = t.left_limit_power(w, n).unwrap();
        for h in [1e-6, 1e-9] {
            let jumps = t.discontinuities_of_power(n);
            prop_assume!(!jumps.iter().any(|&j| j > w - h && j < w));
            let numeric = t.power(w - h, n as i64).unwrap();
            prop_assert!((limit - numeric).abs() <= 10.0 * h, "h={h}: {limit} vs {numeric}");
        }
    }

    #[test]
    fn alignments_verify(t in float_iet(4), w in 0.0f64..1.0, w2 in 0.0f64..1.0) {
        if let Some(a) = t.find_alignment(w, w2, 5, 0.05, 2_000).unwrap() {
            prop_assert!(t.alignment_displacement(w, w2, 5, a.l) < 0.05);
        }
    }

    #[test]
    fn gaps_vanish_off_discontinuities(t in float_iet(5), n in 1u64..6, wd in 0.01f64..0.99) {
        let jumps = t.discontinuities_of_power(n);
        prop_assume!(!jumps.iter().any(|&j| (j - wd).abs() < 1e-6));
        let f = SamplingFunction::cosine(1.0);
        prop_assert!(power_gap(&t, &f, n, wd).unwrap() <= 1e-9);
    }

    #[test]
    fn constant_functions_never_witness(t in float_iet(5), c in -3.0f64..3.0) {
        let f = SamplingFunction::constant(c);
        prop_assert!(scan_maincond(&t, &f, 10, DEFAULT_TAU).unwrap().is_none());
    }

    #[test]
    fn rotation_class_with_circle_continuous_f_has_no_witness(
        (r, k) in (2usize..=5).prop_flat_map(|r| (Just(r), 0..r - 1)),
        seed in prop::collection::vec(0.05f64..1.0, 5),
    ) {
        let p = Permutation::from_rotation_class(r, k).unwrap();
        prop_assume!(p.is_irreducible());
        let s: f64 = seed[..r].iter().sum();
        let t = Iet::new(p, seed[..r].iter().map(|x| x / s).collect()).unwrap();
        let f = SamplingFunction::cosine(1.3);
        prop_assert!(scan_maincond(&t, &f, 50, DEFAULT_TAU).unwrap().is_none());
    }

    #[test]
    fn cocycle_determinant_is_one(vs in prop::collection::vec(-5.0f64..5.0, 1..4000), e in -8.0f64..8.0) {
        let p = cocycle_product_of(e, &vs);
        prop_assert!((p.determinant() - 1.0).abs() <= 1e-9);
        prop_assert!(p.lyapunov_quotient() >= -1e-3);
    }

    #[test]
    fn sturm_counts_agree(diag in prop::collection::vec(-3.0f64..3.0, 1..300), xs in prop::collection::vec(-6.0f64..6.0, 100)) {
        let spec = truncated_spectrum(&Potential::new(0, diag.clone()), diag.len()).unwrap();
        for x in xs {
            let below = spec.eigenvalues.iter().filter(|&&e| e < x).count();
            let oracle = oracle_count_below(&diag, x);
            // eigenvalues within the solver tolerance of x may fall either way
            let near = spec.eigenvalues.iter().any(|e| (e - x).abs() < 1e-8);
            prop_assert!(near || below == oracle, "x={x}: {below} vs {oracle}");
            prop_assert!(near || sturm_count(&diag, x) == oracle);
        }
    }

    #[test]
    fn spectra_interlace_and_obey_gershgorin(diag in prop::collection::vec(-4.0f64..4.0, 2..=501)) {
        let m = diag.len() - 1;
        let v = Potential::new(0, diag.clone());
        let a = truncated_spectrum(&v, m).unwrap().eigenvalues;
        let b = truncated_spectrum(&v, m + 1).unwrap().eigenvalues;
        for i in 0..m {
            prop_assert!(b[i] <= a[i] + 1e-9 && a[i] <= b[i + 1] + 1e-9);
        }
        let (lo, hi) = diag.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
        prop_assert!(b.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(b[0] >= lo - 2.0 - 1e-9 && b[m] <= hi + 2.0 + 1e-9);
    }

    #[test]
    fn convergent_identity(a in prop::collection::vec(1u64..1_000_000, 1..30)) {
        let c = ContinuedFraction::new(BigInt::from(0), a.into_iter().map(BigInt::from).collect()).unwrap();
        let conv = c.convergents();
        for k in 1..conv.len() {
            let (p0, q0) = &conv[k - 1];
            let (p1, q1) = &conv[k];
            let det: BigInt = p1 * q0 - p0 * q1;
            prop_assert!(det == BigInt::from(1) || det == BigInt::from(-1));
        }
        let back: ContinuedFraction = c.to_string().parse().unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(ContinuedFraction::from_rational(&c.value()).value(), c.value());
    }

    #[test]
    fn rational_rotations_are_periodic(p in 1u64..50, q in 51u64..200, w in 0.0f64..1.0) {
        let t = Iet::rotation_exact(BigRational::new(BigInt::from(p), BigInt::from(q))).unwrap();
        let f = SamplingFunction::cosine(1.0);
        let cert = gordon_certificate(&t, &f, w, &[BigInt::from(q)], &[1.0]).unwrap();
        prop_assert_eq!(cert.sup_diffs[0], 0.0);
    }

    #[test]
    fn chaining_bound_holds(alpha in 0.01f64..0.99, w in 0.0f64..1.0) {
        let t = Iet::rotation(alpha).unwrap();
        let f = SamplingFunction::cosine(1.0);
        let qs: Vec<BigInt> = ContinuedFraction::from_f64(alpha, 8)
            .unwrap()
            .denominators()
            .into_iter()
            .skip(1)
            .filter(|q| q <= &BigInt::from(5_000))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        prop_assume!(!qs.is_empty());
        let cert = gordon_certificate(&t, &f, w, &qs, &[1.0]).unwrap();
        prop_assert!(cert.rows.iter().all(|r| r.chaining_ok == Some(true)));
    }
}

#[test]
fn periodic_potential_has_zero_sup_diff() {
    let t = Iet::rotation_exact(BigRational::new(BigInt::from(3), BigInt::from(11))).unwrap();
    let f = SamplingFunction::cosine(2.0);
    let v = Potential::sample(&t, &f, 0.25, -11, 22).unwrap();
    assert!(gordon_sup_diff(&v, 11).unwrap() < 1e-12);
}

#[test]
fn determinant_bookkeeping_at_a_million_steps() {
    let t = Iet::golden_rotation();
    let f = SamplingFunction::cosine(4.0);
    for e in [0.0, 1.0, 3.5, 7.0] {
        let p = iet_spectral::cocycle::cocycle_product(&t, &f, 0.1, e, 1_000_000).unwrap();
        assert!((p.determinant() - 1.0).abs() <= 1e-9, "E={e}: {}", p.determinant());
    }
}

#[test]
fn inverse_dynamics_share_the_exponent() {
    let t = Iet::new(Permutation::reversal(4).unwrap(), vec![0.13, 0.21, 0.27, 0.39]).unwrap();
    let f = SamplingFunction::cosine(2.5);
    for e in [-1.0, 0.5, 2.0] {
        let a = lyapunov(&t, &f, e, 100_000, 8, 3).unwrap();
        let b = lyapunov(&t.inverse(), &f, e, 100_000, 8, 3).unwrap();
        let slack = 3.0 * (a.stderr + b.stderr) + 1e-3;
        assert!((a.mean - b.mean).abs() <= slack, "E={e}: {a:?} vs {b:?}");
    }
}
