use torus_oblivious::eval::worst_case_load;
use torus_oblivious::lpexport::{
    export_opt_lp, export_reduced_oblivious_lp, injection_assignment, opt_assignment, opt_lp, reduced_oblivious_lp,
    Cmp, LpModel, ObliviousLpOptions,
};
use torus_oblivious::schemes::{build_ecmp, build_gllb, build_llb, build_vlb};
use torus_oblivious::traffic::{gen_hotspot, gen_split_diamond};
use torus_oblivious::{Node, TorusSpec};

const DEDUPE: ObliviousLpOptions = ObliviousLpOptions { dedupe_orbits: true };
const NO_DEDUPE: ObliviousLpOptions = ObliviousLpOptions { dedupe_orbits: false };

fn emit(spec: &TorusSpec, k: usize, opts: ObliviousLpOptions) -> (String, torus_oblivious::lpexport::LpCounts) {
    let mut buf = Vec::new();
    let counts = export_reduced_oblivious_lp(spec, k, opts, &mut buf).unwrap();
    (String::from_utf8(buf).unwrap(), counts)
}

#[test]
fn variable_counts_on_square_tori() {
    for n in [4usize, 6] {
        let spec = TorusSpec::square(n).unwrap();
        let nn = n * n;
        let (_, full) = emit(&spec, 2, NO_DEDUPE);
        assert_eq!(full.variables, 4 * nn * (nn - 1) + 2 * nn + 1 + 1);
        let (_, reduced) = emit(&spec, 2, DEDUPE);
        // each flow orbit of the diagonal and origin reflections has four members
        assert_eq!(reduced.variables, 4 * nn * (nn - 1) / 4 + 2 * nn + 1 + 1);
    }
}

#[test]
fn round_trip_is_exact() {
    for (spec, k) in [
        (TorusSpec::square(4).unwrap(), 2),
        (TorusSpec::unit(4, 6).unwrap(), 3),
        (TorusSpec::new(4, 5, 2.0, 0.5).unwrap(), 2),
    ] {
        for opts in [DEDUPE, NO_DEDUPE] {
            let model = reduced_oblivious_lp(&spec, k, opts).unwrap();
            let (text, counts) = emit(&spec, k, opts);
            let parsed = LpModel::parse_lp(&text).unwrap();
            assert_eq!(parsed.counts(), counts);
            assert_eq!(parsed, model);
            assert!(parsed.undeclared().is_empty());
            assert!(text.lines().all(|l| l.len() <= 255));
            assert!(text.is_ascii());
        }
    }
}

#[test]
fn golden_names() {
    let spec = TorusSpec::square(4).unwrap();
    let m = reduced_oblivious_lp(&spec, 2, NO_DEDUPE).unwrap();
    for name in [
        "th",
        "gam_pv",
        "a_s0_0_pv",
        "b_t3_2_pv",
        "g_t1_0_e0_0_ph",
        "g_t2_3_e3_1_nv",
    ] {
        assert!(m.variables.contains_key(name), "{name}");
    }
    assert!(m.constraints.iter().any(|c| c.name == "load_pv"));
    assert!(m.constraints.iter().any(|c| c.name.starts_with("sym_")));
    assert!(m.constraints.iter().any(|c| c.name == "dual_pv_s1_2_t3_0"));
    assert_eq!(m.objective, vec![("th".to_string(), 1.0)]);
    let deduped = reduced_oblivious_lp(&spec, 2, DEDUPE).unwrap();
    assert!(!deduped.constraints.iter().any(|c| c.name.starts_with("sym_")));
}

#[test]
fn asymmetric_specs_get_two_load_rows() {
    let spec = TorusSpec::new(4, 6, 2.0, 0.5).unwrap();
    let m = reduced_oblivious_lp(&spec, 3, DEDUPE).unwrap();
    let row = |name: &str| m.constraints.iter().find(|c| c.name == name).unwrap().clone();
    for (name, cap) in [("load_pv", 2.0), ("load_ph", 0.5)] {
        let c = row(name);
        assert_eq!(c.cmp, Cmp::Le);
        assert_eq!(c.rhs, 0.0);
        let th = c.terms.iter().find(|(v, _)| v == "th").unwrap().1;
        assert_eq!(th, -cap);
        let gam = c.terms.iter().find(|(v, _)| v.starts_with("gam_")).unwrap().1;
        assert_eq!(gam, 3.0);
    }
}

#[test]
fn policy_injection_is_feasible() {
    let sq = TorusSpec::square(6).unwrap();
    let rect = TorusSpec::unit(4, 10).unwrap();
    let cases = [
        (sq, build_llb(&sq, 1).unwrap(), 2),
        (sq, build_llb(&sq, 2).unwrap(), 8),
        (sq, build_ecmp(&sq).unwrap(), 3),
        (sq, build_vlb(&sq).unwrap(), 5),
        (rect, build_gllb(&rect, 2, 2).unwrap(), 8),
    ];
    for (spec, policy, k) in cases {
        for opts in [DEDUPE, NO_DEDUPE] {
            let model = reduced_oblivious_lp(&spec, k, opts).unwrap();
            let values = injection_assignment(&policy, k, opts).unwrap();
            let viol = model.max_violation(&values);
            assert!(
                viol <= 1e-7,
                "k={k}: violation {viol} at {:?}",
                model.worst_constraint(&values).map(|c| c.0.name.clone())
            );
            let wc = worst_case_load(&policy, k).unwrap().value;
            assert!((values["th"] - wc).abs() < 1e-9);
        }
    }
}

#[test]
fn lowering_theta_breaks_the_injection() {
    let spec = TorusSpec::square(6).unwrap();
    let model = reduced_oblivious_lp(&spec, 2, DEDUPE).unwrap();
    let mut values = injection_assignment(&build_llb(&spec, 1).unwrap(), 2, DEDUPE).unwrap();
    *values.get_mut("th").unwrap() -= 0.01;
    assert!(model.max_violation(&values) > 1e-3);
}

#[test]
fn opt_lp_structure() {
    let spec = TorusSpec::square(6).unwrap();
    let d = gen_hotspot(&spec, 4, Node::ORIGIN).unwrap();
    let m = opt_lp(&d).unwrap();
    assert_eq!(m.variables.len(), d.len() * spec.num_edges() + 1);
    assert_eq!(m.constraints.len(), d.len() * spec.num_nodes() + spec.num_edges());

    let mut buf = Vec::new();
    let counts = export_opt_lp(&d, &mut buf).unwrap();
    let parsed = LpModel::parse_lp(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(parsed.counts(), counts);
    assert_eq!(parsed, m);

    let ecmp = build_ecmp(&spec).unwrap();
    assert!(m.max_violation(&opt_assignment(&ecmp, &d).unwrap()) <= 1e-9);
}

#[test]
fn opt_lp_accepts_split_diamond_routing() {
    let spec = TorusSpec::square(10).unwrap();
    let d = gen_split_diamond(&spec, 3).unwrap();
    let m = opt_lp(&d).unwrap();
    let values = opt_assignment(&build_llb(&spec, 3).unwrap(), &d).unwrap();
    assert!(m.max_violation(&values) <= 1e-9);
    assert!((values["th"] - 1.5).abs() < 1e-9);
}
