use graph_model::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn load(d: GraphDocument) -> EnergyForm {
    d.to_energy_form().unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn k4c1_lambda() {
    let e = load(fixtures::k4c1());
    assert!(e.lambda().iter().all(|&l| l == 4.0));
    assert!(e.is_transient());
}

#[test]
fn v1_single_vertex() {
    let e = load(fixtures::v1());
    assert_eq!(e.lambda()[0], 2.0);
    assert_eq!(e.transition()[(0, 0)], 0.0);
}

#[test]
fn rejects_asymmetric_document() {
    let json = r#"{"vertices":["a","b"],"edges":[["a","b",1],["b","a",2]],"killing":{"a":1}}"#;
    assert!(matches!(load_energy_form(json), Err(GraphError::Asymmetric(_, _))));
}

#[test]
fn rejects_bad_documents() {
    let dup = r#"{"vertices":["a","b"],"edges":[["a","b",1],["a","b",1]]}"#;
    assert!(matches!(load_energy_form(dup), Err(GraphError::DuplicateEdge(_, _))));
    let neg = r#"{"vertices":["a","b"],"edges":[["a","b",-1]]}"#;
    assert!(matches!(load_energy_form(neg), Err(GraphError::NegativeConductance(_, _))));
    let disc = r#"{"vertices":["a","b","c"],"edges":[["a","b",1]],"killing":{"c":1}}"#;
    assert!(matches!(load_energy_form(disc), Err(GraphError::Disconnected(_, _))));
    let zero = r#"{"vertices":["a"]}"#;
    assert!(matches!(load_energy_form(zero), Err(GraphError::ZeroLambda(_))));
    let unknown = r#"{"vertices":["a"],"killing":{"q":1}}"#;
    assert!(matches!(load_energy_form(unknown), Err(GraphError::UnknownVertex(_))));
    assert!(matches!(load_energy_form("{not json"), Err(GraphError::Malformed(_))));
    // the same weight restated in the reverse orientation is accepted
    let both = r#"{"vertices":["a","b"],"edges":[["a","b",1],["b","a",1]],"killing":{"a":1}}"#;
    assert_eq!(load_energy_form(both).unwrap().c(0, 1), 1.0);
}

#[test]
fn missing_killing_defaults_to_zero() {
    let e = load(fixtures::single_edge());
    assert!(!e.is_transient());
    assert_eq!(e.lambda().as_slice(), &[1.0, 1.0]);
}

#[test]
fn restrict_examples() {
    let p2 = load(fixtures::p2());
    let y = p2.subset(&["y"]).unwrap();
    let r = restrict(&p2, &y).unwrap();
    assert_eq!(r.len(), 1);
    assert_eq!(r.killing()[0], 2.0);
    assert_eq!(r.lambda()[0], 2.0);

    let k4 = load(fixtures::k4c1());
    let tri = restrict(&k4, &k4.subset(&["a", "b", "c"]).unwrap()).unwrap();
    assert!(tri.killing().iter().all(|&k| k == 2.0));
    assert_eq!(tri.edges().len(), 3);

    let same = restrict(&k4, &VertexSubset::full(4)).unwrap();
    assert_eq!(same.conductance(), k4.conductance());
    assert_eq!(same.killing(), k4.killing());
    assert!(restrict(&k4, &VertexSubset::empty(4)).is_err());
}

#[test]
fn restriction_keeps_lambda() {
    let e = load(fixtures::counterexample());
    let d = VertexSubset::new(e.len(), [0, 2, 5, 9, 12]).unwrap();
    let r = restrict(&e, &d).unwrap();
    for (a, &x) in d.members().iter().enumerate() {
        assert_eq!(r.lambda()[a], e.lambda()[x]);
    }
}

#[test]
fn recurrent_extension_examples() {
    let v1 = load(fixtures::v1());
    let ext = recurrent_extension(&v1).unwrap();
    assert_eq!(ext.len(), 2);
    assert_eq!(ext.c(0, 1), 2.0);
    assert!(!ext.is_transient());

    let p2 = load(fixtures::p2());
    let ext = recurrent_extension(&p2).unwrap();
    let d = ext.vertex(CEMETERY).unwrap();
    assert_eq!(ext.lambda()[d], 2.0);
    assert_eq!(ext.c(0, d), 1.0);
    assert_eq!(ext.c(1, d), 1.0);
    let p = ext.transition();
    for i in 0..ext.len() {
        assert!((p.row(i).sum() - 1.0).abs() < 1e-12);
    }
    assert!(matches!(recurrent_extension(&ext), Err(GraphError::Recurrent)));
}

#[test]
fn killing_the_extension_recovers_the_chain() {
    for doc in [fixtures::p2(), fixtures::k4c1(), fixtures::counterexample(), fixtures::v1()] {
        let e = load(doc);
        let ext = recurrent_extension(&e).unwrap();
        let back = kill_at(&ext, ext.vertex(CEMETERY).unwrap()).unwrap();
        assert_eq!(back.names(), e.names());
        assert_eq!(back.conductance(), e.conductance());
        assert_eq!(back.killing(), e.killing());
    }
}

#[test]
fn trace_examples() {
    let p2 = load(fixtures::p2());
    let t = trace_on(&p2, &p2.subset(&["x"]).unwrap()).unwrap();
    assert!(close(t.lambda()[0], 1.5, 1e-14));
    // one vertex: the Green function is 1/lambda
    assert!(close(1.0 / t.lambda()[0], 2.0 / 3.0, 1e-14));

    let same = trace_on(&p2, &VertexSubset::full(2)).unwrap();
    assert_eq!(same.conductance(), p2.conductance());

    let k4 = load(fixtures::k4c1());
    let f = k4.subset(&["a", "c"]).unwrap();
    let t = trace_on(&k4, &f).unwrap();
    assert!(t.c(0, 1) > k4.c(0, 2));
    // excursions from a through {b, d} that return to a shrink lambda
    assert!(t.lambda()[0] < k4.lambda()[0]);
}

#[test]
fn trace_of_recurrent_chain_stays_recurrent() {
    let e = load(fixtures::k4_rooted());
    let t = trace_on(&e, &e.subset(&["a", "b"]).unwrap()).unwrap();
    assert!(!t.is_transient());
}

#[test]
fn wreath_examples() {
    let k4 = load(fixtures::k4c1());
    let w = build_wreath(&k4, &[1, 1, 1, 1]).unwrap();
    assert_eq!(w.conductance(), k4.conductance());
    assert_eq!(w.lambda(), k4.lambda());

    let p2 = load(fixtures::p2());
    let w = build_wreath(&p2, &[2, 2]).unwrap();
    assert_eq!(w.len(), 8);
    assert!(w.lambda().iter().all(|&l| (l - 2.0).abs() < 1e-14));

    let k3 = load(fixtures::k3_wreath());
    let w = build_wreath(&k3, &[2, 2, 2]).unwrap();
    assert_eq!(w.len(), 24);
    assert!(w.lambda().iter().all(|&l| (l - 3.0).abs() < 1e-14));
    // the first coordinate jumps like the base chain
    let p = w.transition();
    let pb = k3.transition();
    let zs = 8;
    for s in 0..24 {
        for x2 in 0..3 {
            let mass: f64 = (0..zs).map(|z| p[(s, x2 * zs + z)]).sum();
            assert!(close(mass, pb[(s / zs, x2)], 1e-14));
        }
    }
    assert!(matches!(
        build_wreath_with_limit(&k3, &[4, 4, 4], 100),
        Err(GraphError::WreathTooLarge { states: 192, limit: 100 })
    ));
}

#[test]
fn fixtures_round_trip() {
    for (name, d) in fixtures::all() {
        let json = d.to_json_pretty();
        let back = GraphDocument::parse(&json).unwrap();
        assert_eq!(back, d, "{name}");
        let e = back.to_energy_form().unwrap();
        let again = e.to_document().to_energy_form().unwrap();
        assert_eq!(again.conductance(), e.conductance(), "{name}");
    }
}

#[test]
fn counterexample_shape() {
    let d = fixtures::counterexample();
    let e = load(d.clone());
    assert_eq!(e.len(), 16);
    assert_eq!(e.edges().len(), 20);
    assert!(e.edges().iter().all(|&(_, _, w)| w == 1.0));
    assert!(e.killing().iter().all(|&k| k == 1.0));
    let rho = d.involution_indices(&e).unwrap().unwrap();
    for i in 0..16 {
        assert_eq!(rho[rho[i]], i);
        assert_ne!(rho[i], i);
        for j in 0..16 {
            assert_eq!(e.c(i, j), e.c(rho[i], rho[j]));
        }
    }
}

#[test]
fn vertex_subset_algebra() {
    let a = VertexSubset::new(5, [3, 1, 1]).unwrap();
    assert_eq!(a.members(), &[1, 3]);
    assert_eq!(a.complement().members(), &[0, 2, 4]);
    let b = VertexSubset::new(5, [0, 3]).unwrap();
    assert_eq!(a.union(&b).members(), &[0, 1, 3]);
    assert_eq!(a.difference(&b).members(), &[1]);
    assert!(!a.is_disjoint(&b));
    assert!(VertexSubset::new(5, [7]).is_err());
}

fn random_form() -> impl Strategy<Value = EnergyForm> {
    (2usize..7)
        .prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(0.1f64..3.0, n - 1),
                proptest::collection::vec(proptest::option::of(0.1f64..3.0), n * (n - 1) / 2),
                proptest::collection::vec(proptest::option::of(0.05f64..2.0), n),
            )
        })
        .prop_map(|(n, path, extra, kill)| {
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
            let mut kappa: Vec<f64> = kill.iter().map(|o| o.unwrap_or(0.0)).collect();
            kappa[0] = kappa[0].max(0.5);
            let names = (0..n).map(|i| format!("v{i}")).collect();
            EnergyForm::new(names, c, nalgebra::DVector::from_vec(kappa)).unwrap()
        })
}

fn reversible(e: &EnergyForm) -> bool {
    let p = e.transition();
    let l = e.lambda();
    (0..e.len()).all(|i| (0..e.len()).all(|j| close(l[i] * p[(i, j)], l[j] * p[(j, i)], 1e-12)))
}

proptest! {
    #[test]
    fn derived_chains_are_reversible(e in random_form(), mask in proptest::collection::vec(any::<bool>(), 7)) {
        let n = e.len();
        let mut f: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        if f.is_empty() { f.push(0); }
        let f = VertexSubset::new(n, f).unwrap();
        prop_assert!(reversible(&e));
        prop_assert!(reversible(&restrict(&e, &f).unwrap()));
        prop_assert!(reversible(&trace_on(&e, &f).unwrap()));
        let ext = recurrent_extension(&e).unwrap();
        prop_assert!(reversible(&ext));
        let p = ext.transition();
        for i in 0..ext.len() {
            prop_assert!((p.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn row_sums_match_killing(e in random_form()) {
        let p = e.transition();
        for i in 0..e.len() {
            let expect = 1.0 - e.killing()[i] / e.lambda()[i];
            prop_assert!((p.row(i).sum() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_conserves_lambda_split(e in random_form(), pick in 0usize..7) {
        // lambda^{F} = kappa^{F} + sum of trace conductances
        let f = VertexSubset::singleton(e.len(), pick % e.len()).complement();
        let t = trace_on(&e, &f).unwrap();
        for a in 0..t.len() {
            prop_assert!(close(t.lambda()[a], t.killing()[a] + t.conductance().row(a).sum(), 1e-12));
            prop_assert!(t.killing()[a] >= 0.0);
        }
    }
}
