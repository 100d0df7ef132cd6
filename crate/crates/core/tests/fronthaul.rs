mod common;

use std::path::Path;

use cellfree::fronthaul::{
    build_milp, half_load_limit, link_load_report, solve_problem, validate_solution, FronthaulGraph, FronthaulProblem,
    LoadWeights, SolverConfig, TrafficDemand,
};
use cellfree_milp::{read_lp, write_lp, SolveStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn solve(p: &FronthaulProblem) -> cellfree_milp::MilpSolution {
    let cfg = SolverConfig { node_limit: 10_000, ..SolverConfig::default() };
    solve_problem(p, &cfg, None, Path::new(".")).unwrap()
}

fn chain() -> FronthaulProblem {
    let g = FronthaulGraph::new(1, 1, 1, vec![(0, 0)], vec![], vec![(0, 0)]).unwrap();
    let d = TrafficDemand { ul_bits: vec![vec![(0, 2.0)]], dl_bits: vec![1.0], gamma_dl: 0.8 };
    build_milp(&g, &d, &half_load_limit(1, 1), LoadWeights::default()).unwrap()
}

#[test]
fn chain_instance() {
    let p = chain();
    let s = solve(&p);
    assert_eq!(s.status, SolveStatus::Optimal);
    assert!((s.objective - 2.4).abs() <= 1e-9, "{}", s.objective);
    let r = link_load_report(&p, &s.values);
    assert!((r.c_l - 1.2).abs() < 1e-9 && r.c_q.abs() < 1e-9 && (r.c_d - 1.2).abs() < 1e-9);
    assert!((r.objective - 2.4).abs() < 1e-9);
    assert!(validate_solution(&p, &s.values, s.objective, 1e-6).is_valid());
    assert_eq!(p.placement(&s.values), vec![Some(0)]);
}

fn two_router_graph() -> FronthaulGraph {
    FronthaulGraph::new(2, 2, 2, vec![(0, 0), (1, 1)], vec![(0, 1)], vec![(0, 0), (1, 1)]).unwrap()
}

#[test]
fn zero_demand_costs_nothing() {
    let d = TrafficDemand { ul_bits: vec![vec![(0, 0.0), (1, 0.0)]], dl_bits: vec![0.0], gamma_dl: 0.5 };
    let p = build_milp(&two_router_graph(), &d, &half_load_limit(1, 2), LoadWeights::default()).unwrap();
    let s = solve(&p);
    assert!(s.objective.abs() < 1e-9);
    assert!(validate_solution(&p, &s.values, s.objective, 1e-6).is_valid());
}

#[test]
fn unit_limits_give_a_perfect_matching() {
    let d = TrafficDemand {
        ul_bits: vec![vec![(0, 3.0), (1, 1.0)], vec![(0, 2.0)]],
        dl_bits: vec![1.0, 2.0],
        gamma_dl: 0.5,
    };
    let p = build_milp(&two_router_graph(), &d, &half_load_limit(2, 2), LoadWeights::default()).unwrap();
    assert_eq!(p.du_limits, vec![1.0, 1.0]);
    let s = solve(&p);
    let mut placed: Vec<usize> = p.placement(&s.values).into_iter().map(Option::unwrap).collect();
    placed.sort();
    assert_eq!(placed, vec![0, 1]);
    for b in &p.placement_vars {
        let sum: f64 = b.iter().map(|v| s.values[v.index()]).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}

#[test]
fn unreachable_demand_is_rejected_at_build_time() {
    let g = FronthaulGraph::new(1, 1, 1, vec![(0, 0)], vec![], vec![(0, 0)]).unwrap();
    let d = TrafficDemand { ul_bits: vec![vec![(3, 1.0)]], dl_bits: vec![1.0], gamma_dl: 0.5 };
    assert!(build_milp(&g, &d, &[1.0], LoadWeights::default()).is_err());
    let d = TrafficDemand { ul_bits: vec![vec![(0, 1.0)]; 3], dl_bits: vec![1.0; 3], gamma_dl: 0.5 };
    assert!(build_milp(&g, &d, &[2.0], LoadWeights::default()).is_err());
}

#[test]
fn matches_enumeration_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..50 {
        let p = common::random_instance(&mut rng);
        let s = solve(&p);
        let oracle = common::placement_oracle(&p).expect("tiny instances are feasible");
        assert_eq!(s.status, SolveStatus::Optimal, "instance {i}");
        assert!((s.objective - oracle).abs() <= 1e-6, "instance {i}: {} vs {oracle}", s.objective);
        assert!(validate_solution(&p, &s.values, s.objective, 1e-6).is_valid(), "instance {i}");
    }
}

#[test]
fn circulation_flags_only_the_router_link() {
    let d = TrafficDemand { ul_bits: vec![vec![(0, 2.0)]], dl_bits: vec![1.0], gamma_dl: 0.5 };
    let p = build_milp(&two_router_graph(), &d, &half_load_limit(1, 2), LoadWeights::default()).unwrap();
    let s = solve(&p);
    let mut x = s.values.clone();
    let cap_q = x[p.c_q.index()];
    for name in ["x_fh_k0_q0_q1", "x_fh_k0_q1_q0"] {
        x[p.model.var_id(name).unwrap().index()] += 0.5 + cap_q / 2.0;
    }
    let v = validate_solution(&p, &x, s.objective, 1e-6);
    let flagged: Vec<&str> = v.rows.violations.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(flagged, vec!["cap_rr_q0_q1"]);
    assert_eq!(v.load_mismatches.len(), 1);
    assert!(!v.is_valid());
}

#[test]
fn lp_file_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let p = common::random_instance(&mut rng);
        assert_eq!(read_lp(&write_lp(&p.model).unwrap()).unwrap(), p.model);
    }
    let p = chain();
    assert_eq!(read_lp(&write_lp(&p.model).unwrap()).unwrap(), p.model);
}

#[test]
fn smaller_demand_never_costs_more() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let p = common::random_instance(&mut rng);
        let s = solve(&p);
        let mut d = p.demand.clone();
        for c in &mut d.ul_bits {
            for e in c.iter_mut() {
                e.1 *= rng.gen_range(0.0..1.0);
            }
        }
        let q = build_milp(&p.graph, &d, &p.du_limits, p.weights).unwrap();
        let cfg = SolverConfig { node_limit: 10_000, ..SolverConfig::default() };
        let prev = p.placement(&s.values);
        let t = solve_problem(&q, &cfg, Some(&prev), Path::new(".")).unwrap();
        assert!(t.objective <= s.objective + 1e-6);
    }
}
