use exact_engine::green;
use graph_model::{fixtures, EnergyForm, GraphDocument, VertexSubset};
use loop_measure::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn load(d: GraphDocument) -> EnergyForm {
    d.to_energy_form().unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// All permutations of 0..k by Heap's algorithm.
fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..k).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0; k];
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn cycles(p: &[usize]) -> (usize, bool) {
    let mut seen = vec![false; p.len()];
    let mut count = 0;
    let mut fixed = false;
    for s in 0..p.len() {
        if seen[s] {
            continue;
        }
        count += 1;
        if p[s] == s {
            fixed = true;
        }
        let mut j = s;
        while !seen[j] {
            seen[j] = true;
            j = p[j];
        }
    }
    (count, fixed)
}

fn brute_permanent(m: &DMatrix<f64>, alpha: f64, fpf: bool) -> f64 {
    permutations(m.nrows())
        .iter()
        .filter_map(|p| {
            let (c, fixed) = cycles(p);
            if fpf && fixed {
                return None;
            }
            Some(alpha.powi(c as i32) * (0..p.len()).map(|i| m[(i, p[i])]).product::<f64>())
        })
        .sum()
}

#[test]
fn loop_canonical_form() {
    let l = DiscreteLoop::new(vec![2, 0, 1]).unwrap();
    assert_eq!(l.vertices(), &[0, 1, 2]);
    let l = DiscreteLoop::new(vec![1, 0, 1, 0]).unwrap();
    assert_eq!(l.vertices(), &[0, 1, 0, 1]);
    assert_eq!(l.minimal_period(), 2);
    assert_eq!(l.multiplicity(), 2);
    let l = DiscreteLoop::new(vec![1, 0, 0, 2, 0]).unwrap();
    assert_eq!(l.vertices(), &[0, 0, 2, 0, 1]);
    assert_eq!(l.multiplicity(), 1);
    assert_eq!(DiscreteLoop::new(vec![3]).unwrap().visits(4), vec![0; 4]);
    assert_eq!(DiscreteLoop::new(vec![0, 1, 0, 2]).unwrap().visits(3), vec![2, 1, 1]);
    let t = DiscreteLoop::new(vec![0, 1, 0, 2]).unwrap().traversals(3);
    assert_eq!((t[(0, 1)], t[(1, 0)], t[(0, 2)], t[(2, 0)], t[(1, 2)]), (1, 1, 1, 1, 0));
    assert!(DiscreteLoop::new(vec![]).is_err());
}

#[test]
fn mu_discrete_examples() {
    let p2 = load(fixtures::p2());
    assert!(close(mu_discrete(&p2, &DiscreteLoop::new(vec![0, 1]).unwrap()).unwrap(), 0.25, 1e-15));
    assert!(close(mu_discrete(&p2, &DiscreteLoop::new(vec![1, 0, 1, 0]).unwrap()).unwrap(), 1.0 / 32.0, 1e-15));
    assert_eq!(mu_discrete(&p2, &DiscreteLoop::new(vec![0]).unwrap()), Err(LoopError::Trivial));
    assert!(matches!(mu_discrete(&p2, &DiscreteLoop::new(vec![0, 0]).unwrap()), Err(LoopError::ZeroStep(_, _))));
    let k4 = load(fixtures::k4c1());
    assert!(close(mu_discrete(&k4, &DiscreteLoop::new(vec![0, 1, 2]).unwrap()).unwrap(), 1.0 / 64.0, 1e-15));
    // a loop and its reversal carry the same mass on a reversible chain
    let a = DiscreteLoop::new(vec![0, 1, 2, 3]).unwrap();
    let b = DiscreteLoop::new(vec![3, 2, 1, 0]).unwrap();
    assert_ne!(a, b);
    assert!(close(mu_discrete(&k4, &a).unwrap(), mu_discrete(&k4, &b).unwrap(), 1e-15));
}

#[test]
fn total_nontrivial_mass() {
    assert!(close(mu_nontrivial_total(&load(fixtures::p2())).unwrap(), (4.0f64 / 3.0).ln(), 1e-14));
    assert!(close(mu_nontrivial_total(&load(fixtures::k4c1())).unwrap(), (256.0f64 / 125.0).ln(), 1e-13));
    assert!(close(mu_nontrivial_total(&load(fixtures::v1())).unwrap(), 0.0, 1e-15));
    assert!(mu_nontrivial_total(&load(fixtures::k4_rooted())).is_err());
}

#[test]
fn enumeration_p2() {
    let p2 = load(fixtures::p2());
    let en = enumerate_loops(&p2, 6).unwrap();
    let got: Vec<(Vec<usize>, f64)> = en.loops.iter().map(|(l, m)| (l.vertices().to_vec(), *m)).collect();
    assert_eq!(got.len(), 3);
    assert_eq!(got[0].0, vec![0, 1]);
    assert_eq!(got[1].0, vec![0, 1, 0, 1]);
    assert_eq!(got[2].0, vec![0, 1, 0, 1, 0, 1]);
    for (m, (_, mass)) in got.iter().enumerate() {
        let k = (m + 1) as f64;
        assert!(close(*mass, 0.25f64.powf(k) / k, 1e-15));
    }
    let exact = (4.0f64 / 3.0).ln();
    assert!(en.total <= exact && exact <= en.total + en.tail);

    let v1 = enumerate_loops(&load(fixtures::v1()), 6).unwrap();
    assert!(v1.loops.is_empty());
    assert_eq!(v1.tail, 0.0);
}

fn trace_series(e: &EnergyForm, k_max: usize) -> Vec<f64> {
    let p = e.transition();
    let mut pow = DMatrix::identity(e.len(), e.len());
    let mut out = vec![0.0; k_max + 1];
    for k in 1..=k_max {
        pow = &pow * &p;
        out[k] = pow.trace() / k as f64;
    }
    out
}

#[test]
fn enumeration_brackets_log_det() {
    for (doc, k) in [(fixtures::p2(), 14), (fixtures::k4c1(), 12), (fixtures::k4c1(), 14), (fixtures::k3_wreath(), 14), (fixtures::v1(), 14)] {
        let e = load(doc);
        let en = enumerate_loops(&e, k).unwrap();
        let exact = mu_nontrivial_total(&e).unwrap();
        assert!(en.total <= exact + 1e-12, "{} > {}", en.total, exact);
        assert!(exact <= en.total + en.tail + 1e-12);
        let by_len = en.by_length();
        let tr = trace_series(&e, k);
        for j in 1..=k {
            assert!(close(by_len[j], tr[j], 1e-12), "length {j}: {} vs {}", by_len[j], tr[j]);
        }
    }
}

#[test]
fn enumeration_guards() {
    let e = load(fixtures::k4c1());
    assert!(matches!(enumerate_loops(&e, 15), Err(LoopError::GuardExceeded(_))));
    assert!(matches!(enumerate_loops(&load(fixtures::counterexample()), 4), Err(LoopError::GuardExceeded(_))));
    let g = EnumerationGuard { max_work: 10.0, ..Default::default() };
    assert!(enumerate_loops_with_guard(&e, 6, g).is_err());
}

#[test]
fn euler_product() {
    for doc in [fixtures::p2(), fixtures::k4c1(), fixtures::k3_wreath()] {
        let e = load(doc);
        let rho = exact_engine::spectral_radius(&e);
        let c = euler_product_check(&e, 0.5 / rho, 14).unwrap();
        assert!((c.log_exact - c.log_partial).abs() <= c.tail + 1e-12);
        assert!(c.log_partial <= c.log_exact + 1e-12);
    }
}

#[test]
fn wreath_identity() {
    let e = load(fixtures::k3_wreath());
    let w = wreath_check(&e, &[2, 2, 2], 14).unwrap();
    assert!(w.enumerated <= w.exact + 1e-12);
    assert!(w.exact - w.enumerated <= w.tail, "{} {} {}", w.exact, w.enumerated, w.tail);
    // unit fibres give back the plain mass
    let w1 = wreath_check(&e, &[1, 1, 1], 14).unwrap();
    assert!(close(w1.exact, mu_nontrivial_total(&e).unwrap(), 1e-12));
    // mixed fibres
    let w2 = wreath_check(&e, &[1, 2, 3], 14).unwrap();
    assert!(w2.exact - w2.enumerated <= w2.tail && w2.enumerated <= w2.exact + 1e-12);
}

#[test]
fn permanent_examples() {
    let g = DMatrix::from_element(1, 1, 0.7);
    assert!(close(alpha_permanent(&g, 2.5, false).unwrap(), 1.75, 1e-15));
    assert_eq!(alpha_permanent(&g, 2.5, true).unwrap(), 0.0);
    let (a, b, c, al) = (0.3, 0.7, 1.9, 1.7);
    let m = DMatrix::from_row_slice(2, 2, &[a, b, b, c]);
    assert!(close(alpha_permanent(&m, al, false).unwrap(), al * al * a * c + al * b * b, 1e-14));
    assert!(close(alpha_permanent(&m, al, true).unwrap(), al * b * b, 1e-14));
    for n in 1..=7 {
        let m = DMatrix::from_element(n, n, 0.6);
        let rising: f64 = (0..n).map(|i| 1.3 + i as f64).product();
        let want = 0.6f64.powi(n as i32) * rising;
        assert!(close(alpha_permanent(&m, 1.3, false).unwrap(), want, 1e-12 * want));
    }
    assert!(alpha_permanent(&DMatrix::zeros(11, 11), 1.0, false).is_err());
    assert_eq!(alpha_permanent(&DMatrix::zeros(0, 0), 1.0, false).unwrap(), 1.0);
}

#[test]
fn stirling_coefficients() {
    let mut prev: Vec<f64> = vec![0.0, 1.0];
    for n in 1..=6 {
        let d = alpha_permanent_coeffs(&DMatrix::from_element(n, n, 1.0), false).unwrap();
        assert_eq!(d.len(), n + 1);
        if n > 1 {
            for k in 0..=n {
                let expect = (n - 1) as f64 * prev.get(k).copied().unwrap_or(0.0) + if k > 0 { prev[k - 1] } else { 0.0 };
                assert_eq!(d[k], expect);
            }
        } else {
            assert_eq!(d, vec![0.0, 1.0]);
        }
        let total: f64 = d.iter().sum();
        assert_eq!(total, (1..=n).map(|i| i as f64).product::<f64>());
        prev = d;
    }
}

#[test]
fn occupation_moment_examples() {
    let p2 = load(fixtures::p2());
    let g = green(&p2).unwrap().g;
    let gxx = g[(0, 0)];
    for al in [0.5, 1.0, 2.0] {
        assert!(close(occupation_moment(&p2, al, &[0, 0]).unwrap(), gxx * gxx * al * (al + 1.0), 1e-14));
        assert!(close(centered_moment(&p2, al, &[0]).unwrap(), 0.0, 1e-15));
        assert!(close(occupation_moment(&p2, al, &[1]).unwrap(), al * gxx, 1e-15));
    }
    assert!(close(occupation_moment(&p2, 1.0, &[0, 1]).unwrap(), 5.0 / 9.0, 1e-15));
    assert!(close(cyclic_moment(&p2, &[0, 1]).unwrap(), 1.0 / 9.0, 1e-15));
    assert!(close(loop_product_moment(&p2, &[0, 1]).unwrap(), 1.0 / 9.0, 1e-15));
    assert!(close(loop_product_moment(&p2, &[0]).unwrap(), gxx, 1e-15));
}

#[test]
fn centered_moments_from_raw() {
    // inclusion–exclusion over which factors are centered
    let k4 = load(fixtures::k4c1());
    let g = green(&k4).unwrap().g;
    let al = 0.7;
    let pts = [0usize, 1, 1, 3];
    let k = pts.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << k) {
        let inside: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| pts[i]).collect();
        let outside: f64 = (0..k).filter(|i| mask & (1 << i) == 0).map(|i| -al * g[(pts[i], pts[i])]).product();
        total += outside * occupation_moment(&k4, al, &inside).unwrap();
    }
    assert!(close(centered_moment(&k4, al, &pts).unwrap(), total, 1e-12));
}

#[test]
fn loop_product_moment_matches_enumeration() {
    let e = load(fixtures::complete(3, 1.0, 4.0));
    let lam = e.lambda().clone();
    let en = enumerate_loops(&e, 14).unwrap();
    // E[l̂^x l̂^y | ξ] = N_x N_y / (λ_x λ_y), plus N_x/λ_x² on the diagonal
    let oracle = |x: usize, y: usize| -> f64 {
        let mut s = en.weighted_sum(|l| {
            let v = l.visits(3);
            let mut m = (v[x] * v[y]) as f64;
            if x == y {
                m += v[x] as f64;
            }
            m / (lam[x] * lam[y])
        });
        if x == y {
            s += 1.0 / (lam[x] * lam[x]);
        }
        s
    };
    for (x, y) in [(0, 1), (1, 1), (0, 2)] {
        assert!(close(loop_product_moment(&e, &[x, y]).unwrap(), oracle(x, y), 1e-6));
    }
    // first moment without the trivial loops
    let nt = en.weighted_sum(|l| l.visits(3)[0] as f64 / lam[0]);
    assert!(close(mu_occupation_nontrivial(&e, 0).unwrap(), nt, 1e-6));
}

#[test]
fn occupation_laplace_examples() {
    let p2 = load(fixtures::p2());
    assert_eq!(occupation_laplace(&p2, 1.3, &DVector::zeros(2)).unwrap(), 1.0);
    let gxx = 2.0 / 3.0;
    let t = 0.8;
    for al in [0.5, 1.0, 2.0] {
        let v = occupation_laplace(&p2, al, &DVector::from_vec(vec![t, 0.0])).unwrap();
        assert!(close(v, (1.0 + t * gxx).powf(-al), 1e-14));
    }
    assert!(close(occupation_laplace(&p2, 1.0, &DVector::from_element(2, 1.0)).unwrap(), 3.0 / 8.0, 1e-14));
    assert!(matches!(
        occupation_laplace(&p2, 1.0, &DVector::from_vec(vec![-0.1, 0.0])),
        Err(LoopError::NegativeMeasure(_))
    ));
    // the trivial loops account for the diagonal factor
    let v1 = load(fixtures::v1());
    let chi = DVector::from_element(1, 0.6);
    let full = occupation_laplace(&v1, 2.0, &chi).unwrap().ln();
    assert!(close(full, trivial_log_laplace(&v1, 2.0, &chi), 1e-14));
}

#[test]
fn edge_counts() {
    let p2 = load(fixtures::p2());
    assert!(close(edge_count_factorial_moment(&p2, 0, 1, 1).unwrap(), 1.0 / 3.0, 1e-15));
    assert!(close(edge_count_factorial_moment(&p2, 0, 1, 2).unwrap(), 1.0 / 9.0, 1e-15));
    assert!(close(mu_visits(&p2, 0).unwrap(), 1.0 / 3.0, 1e-15));
    assert!(edge_count_factorial_moment(&p2, 0, 0, 1).is_err());
    assert!(edge_count_factorial_moment(&p2, 0, 1, 0).is_err());

    // P2 loops are (x,y)^m with mass 4^{-m}/m and N_{x,y} = m
    for k in 1..=3usize {
        let series: f64 = (1..400).map(|m| 0.25f64.powi(m) / m as f64 * (0..k).map(|i| m as f64 - i as f64).product::<f64>()).sum();
        assert!(close(edge_count_factorial_moment(&p2, 0, 1, k).unwrap(), series, 1e-14));
    }
    for e in [load(fixtures::complete(3, 1.0, 4.0)), load(fixtures::complete(4, 1.0, 12.0))] {
        let n = e.len();
        let en = enumerate_loops(&e, 14).unwrap();
        for k in 1..=3usize {
            let oracle = en.weighted_sum(|l| {
                let c = l.traversals(n)[(0, 1)] as f64;
                (0..k).map(|i| c - i as f64).product()
            });
            let exact = edge_count_factorial_moment(&e, 0, 1, k).unwrap();
            assert!(close(exact, oracle, 3e-3 * exact), "k={k}: {exact} vs {oracle}");
        }
        let visits = en.weighted_sum(|l| l.visits(n)[0] as f64);
        assert!(close(mu_visits(&e, 0).unwrap(), visits, 1e-4));
    }
}

#[test]
fn hit_avoid_examples() {
    let p2 = load(fixtures::p2());
    let none = VertexSubset::empty(2);
    let h = mu_hit_avoid(&p2, &VertexSubset::singleton(2, 0), &none, 1.0).unwrap();
    assert!(close(h.probability, 0.75, 1e-14));
    let h = mu_hit_avoid(&p2, &none, &none, 1.0).unwrap();
    assert_eq!((h.mass, h.probability), (0.0, 1.0));
    assert!(matches!(
        mu_hit_avoid(&p2, &VertexSubset::singleton(2, 0), &VertexSubset::singleton(2, 0), 1.0),
        Err(LoopError::Overlap(_))
    ));

    let k4 = load(fixtures::k4c1());
    let g = green(&k4).unwrap().g;
    let both = mu_hit_avoid(&k4, &VertexSubset::new(4, [0, 2]).unwrap(), &VertexSubset::empty(4), 1.0).unwrap();
    let expect = 1.0 - g[(0, 2)].powi(2) / (g[(0, 0)] * g[(2, 2)]);
    assert!(close(both.probability, expect, 1e-13));
    // single point: (λ_x G^{xx})^{-α}
    let one = mu_hit_avoid(&k4, &VertexSubset::singleton(4, 1), &VertexSubset::empty(4), 2.5).unwrap();
    assert!(close(one.probability, (k4.lambda()[1] * g[(1, 1)]).powf(-2.5), 1e-13));
}

#[test]
fn hit_avoid_matches_enumeration() {
    let e = load(fixtures::complete(4, 1.0, 4.0));
    let en = enumerate_loops(&e, 14).unwrap();
    let cases: [(&[usize], &[usize]); 4] = [(&[0, 1], &[3]), (&[0], &[1, 2]), (&[0, 1, 2], &[]), (&[0, 1, 2, 3], &[])];
    for (hit, avoid) in cases {
        let h = mu_hit_avoid(&e, &VertexSubset::new(4, hit.iter().copied()).unwrap(), &VertexSubset::new(4, avoid.iter().copied()).unwrap(), 1.0)
            .unwrap();
        let oracle = en.weighted_sum(|l| {
            let v = l.visits(4);
            (hit.iter().all(|&x| v[x] > 0) && avoid.iter().all(|&x| v[x] == 0)) as u8 as f64
        });
        assert!(oracle <= h.mass + 1e-12 && h.mass <= oracle + en.tail, "{hit:?} {avoid:?}: {} vs {}", h.mass, oracle);
    }
    // meeting sets rather than points
    let fam = [VertexSubset::new(4, [0, 1]).unwrap(), VertexSubset::new(4, [2]).unwrap()];
    let m = mu_meet_all(&e, &fam, &VertexSubset::empty(4)).unwrap();
    let oracle = en.weighted_sum(|l| {
        let v = l.visits(4);
        ((v[0] + v[1] > 0) && v[2] > 0) as u8 as f64
    });
    assert!(oracle <= m + 1e-12 && m <= oracle + en.tail);
}

#[test]
fn cross_hitting_examples() {
    let p2 = load(fixtures::p2());
    let c = cross_hitting_series(&p2, &VertexSubset::singleton(2, 0), &VertexSubset::singleton(2, 1), 30).unwrap();
    assert!(close(c.exact, (4.0f64 / 3.0).ln(), 1e-14));
    assert!(close(c.terms[0], 0.25, 1e-15));
    assert!((c.exact - c.partial).abs() <= c.tail + 1e-15);
    let c1 = cross_hitting_series(&p2, &VertexSubset::singleton(2, 0), &VertexSubset::singleton(2, 1), 1).unwrap();
    assert!(c1.partial <= c.exact);

    let k4 = load(fixtures::k4c1());
    for (a, b) in [(0usize, 1usize), (2, 3)] {
        let f1 = VertexSubset::singleton(4, a);
        let f2 = VertexSubset::singleton(4, b);
        let c = cross_hitting_series(&k4, &f1, &f2, 40).unwrap();
        assert!((c.exact - c.partial).abs() <= c.tail + 1e-14);
        let m = mu_meet_all(&k4, &[f1.clone(), f2.clone()], &VertexSubset::empty(4)).unwrap();
        assert!(close(m, c.exact, 1e-12));
    }
    let f1 = VertexSubset::new(4, [0, 1]).unwrap();
    let f2 = VertexSubset::new(4, [3]).unwrap();
    let c = cross_hitting_series(&k4, &f1, &f2, 40).unwrap();
    assert!((c.exact - c.partial).abs() <= c.tail + 1e-14);
    assert!(close(mu_meet_all(&k4, &[f1.clone(), f2], &VertexSubset::empty(4)).unwrap(), c.exact, 1e-12));
    assert!(matches!(cross_hitting_series(&k4, &f1, &VertexSubset::singleton(4, 1), 5), Err(LoopError::Overlap(_))));
    assert!(cross_hitting_series(&k4, &f1, &VertexSubset::empty(4), 5).is_err());
}

#[test]
fn renormalized_polynomials() {
    let (s, al) = (0.8f64, 1.7f64);
    for u in [-1.0f64, 0.0, 0.35, 2.0] {
        let q2 = 0.5 * (u * u - 2.0 * s * u - al * s * s);
        let q3 = (u.powi(3) - 6.0 * s * u * u + 3.0 * u * s * s * (2.0 - al) + 4.0 * s.powi(3) * al) / 6.0;
        assert!(close(renorm_poly_recurrence(2, u, s, al), q2, 1e-13));
        assert!(close(renorm_poly_recurrence(3, u, s, al), q3, 1e-13));
        for k in 0..6 {
            assert!(close(renorm_poly_eval(k, u + al * s, s, al), renorm_poly_recurrence(k, u, s, al), 1e-11));
        }
    }
    assert!(close(renorm_poly_eval(1, 2.0, s, al), 2.0 - al * s, 1e-15));
}

#[test]
fn orthogonality_via_permanents() {
    let p2 = load(fixtures::p2());
    let g = green(&p2).unwrap().g;
    for al in [0.5, 1.0, 2.0] {
        for k in 0..=3 {
            for l in 0..=3 {
                let got = orth_from_moments(&p2, al, 0, 1, k, l).unwrap();
                let expect = if k == 0 && l == 0 { 1.0 } else { orth_exact(g[(0, 1)], al, k, l) };
                assert!(close(got, expect, 1e-11), "k={k} l={l}: {got} vs {expect}");
            }
        }
        // same point: variance σ^{2k} Γ(α+k)/(Γ(α) k!)
        let v = orth_from_moments(&p2, al, 0, 0, 2, 2).unwrap();
        assert!(close(v, orth_exact(g[(0, 0)], al, 2, 2), 1e-11));
    }
}

fn random_form() -> impl Strategy<Value = EnergyForm> {
    (2usize..6)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(0.1f64..3.0, n - 1),
                proptest::collection::vec(proptest::option::of(0.1f64..3.0), n * (n - 1) / 2),
                proptest::collection::vec(0.3f64..2.0, n),
            )
        })
        .prop_map(|(n, path, extra, kappa)| {
            let mut c = DMatrix::zeros(n, n);
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if let Some(w) = extra[k] {
                        c[(i, j)] = w;
                        c[(j, i)] = w;
                    }
                    k += 1;
                }
            }
            for i in 0..n - 1 {
                c[(i, i + 1)] = path[i];
                c[(i + 1, i)] = path[i];
            }
            EnergyForm::new((0..n).map(|i| format!("v{i}")).collect(), c, DVector::from_vec(kappa)).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permanent_matches_brute_force(vals in proptest::collection::vec(-2.0f64..2.0, 36), k in 1usize..6, al in 0.0f64..3.0) {
        let m = DMatrix::from_fn(k, k, |i, j| vals[i * 6 + j]);
        for fpf in [false, true] {
            let a = alpha_permanent(&m, al, fpf).unwrap();
            let b = brute_permanent(&m, al, fpf);
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn enumeration_by_length_is_trace(e in random_form()) {
        let en = enumerate_loops(&e, 7).unwrap();
        let tr = trace_series(&e, 7);
        let by = en.by_length();
        for k in 1..=7 {
            prop_assert!((by[k] - tr[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn hit_mass_monotone(e in random_form(), mask in proptest::collection::vec(any::<bool>(), 6)) {
        let n = e.len();
        let hit: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        let small = mu_hit_avoid(&e, &VertexSubset::new(n, hit.iter().copied()).unwrap(), &VertexSubset::empty(n), 1.0).unwrap();
        prop_assert!(small.mass >= -1e-12);
        let more: Vec<usize> = (0..n).filter(|&i| mask[i] || i == 0).collect();
        let big = mu_hit_avoid(&e, &VertexSubset::new(n, more).unwrap(), &VertexSubset::empty(n), 1.0).unwrap();
        if !hit.is_empty() {
            prop_assert!(big.mass <= small.mass + 1e-12);
        }
        prop_assert!(small.mass <= mu_nontrivial_total(&e).unwrap() + 1e-12);
    }

    #[test]
    fn laplace_first_derivative(e in random_form(), chi in proptest::collection::vec(0.0f64..1.0, 6), al in 0.2f64..3.0) {
        let n = e.len();
        let chi = DVector::from_fn(n, |i, _| chi[i]);
        let g = green(&e).unwrap().g;
        let h = 1e-6;
        let d = (occupation_laplace(&e, al, &(&chi * h)).unwrap().ln()
            - occupation_laplace(&e, al, &(&chi * -0.0)).unwrap().ln()) / h;
        let mean: f64 = (0..n).map(|x| chi[x] * occupation_moment(&e, al, &[x]).unwrap()).sum();
        prop_assert!((d + mean).abs() < 1e-4 * (1.0 + mean));
        prop_assert!((mean - al * (0..n).map(|x| chi[x] * g[(x, x)]).sum::<f64>()).abs() < 1e-12);
    }
}
