#![allow(dead_code)]

pub mod dense;

use cellfree::fronthaul::{build_milp, half_load_limit, FronthaulGraph, FronthaulProblem, LoadWeights, TrafficDemand};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Minimum objective over every placement of the served users that respects
/// the DU limits, each with its routing solved as an LP by the dense oracle.
pub fn placement_oracle(problem: &FronthaulProblem) -> Option<f64> {
    let users: Vec<usize> =
        (0..problem.placement_vars.len()).filter(|&k| !problem.placement_vars[k].is_empty()).collect();
    let n = problem.graph.num_dus;
    let mut best: Option<f64> = None;
    let mut choice = vec![0usize; users.len()];
    loop {
        let mut count = vec![0usize; n];
        for &c in &choice {
            count[c] += 1;
        }
        if count.iter().zip(&problem.du_limits).all(|(&c, &z)| c as f64 <= z) {
            let fix: Vec<(usize, f64, f64)> = users
                .iter()
                .zip(&choice)
                .flat_map(|(&k, &c)| {
                    problem.placement_vars[k].iter().enumerate().map(move |(i, v)| {
                        let x = if i == c { 1.0 } else { 0.0 };
                        (v.index(), x, x)
                    })
                })
                .collect();
            if let dense::Outcome::Optimal(v, _) = dense::solve_lp(&problem.model, &fix) {
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        // Next assignment in mixed-radix order.
        let mut i = 0;
        while i < choice.len() {
            choice[i] += 1;
            if choice[i] < n {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == choice.len() {
            return best;
        }
    }
}

/// Random feasible instance with K <= 3, L <= 3, Q <= 2, N <= 2.
pub fn random_instance(rng: &mut ChaCha8Rng) -> FronthaulProblem {
    loop {
        let (l, q, n, k) = (rng.gen_range(1..=3), rng.gen_range(1..=2), rng.gen_range(1..=2), rng.gen_range(1..=3));
        let mut ru_router = Vec::new();
        for el in 0..l {
            ru_router.push((el, rng.gen_range(0..q)));
            ru_router.push((el, rng.gen_range(0..q)));
        }
        let router_router = if q == 2 && rng.gen_bool(0.7) { vec![(0, 1)] } else { vec![] };
        let mut router_du = Vec::new();
        for dn in 0..n {
            router_du.push((rng.gen_range(0..q), dn));
            if rng.gen_bool(0.5) {
                router_du.push((rng.gen_range(0..q), dn));
            }
        }
        let Ok(g) = FronthaulGraph::new(l, q, n, ru_router, router_router, router_du) else { continue };
        let ul_bits = (0..k)
            .map(|_| {
                let mut c = Vec::new();
                for el in 0..l {
                    if rng.gen_bool(0.6) {
                        c.push((el, rng.gen_range(0.0..5.0)));
                    }
                }
                c
            })
            .collect();
        let dl_bits = (0..k).map(|_| rng.gen_range(0.0..3.0)).collect();
        let d = TrafficDemand { ul_bits, dl_bits, gamma_dl: rng.gen_range(0.1..0.9) };
        let limits = if n == 1 { vec![k as f64] } else { half_load_limit(k, n) };
        let w = LoadWeights {
            ru_router: rng.gen_range(0.5..2.0),
            router_router: rng.gen_range(0.5..2.0),
            router_du: rng.gen_range(0.5..2.0),
        };
        return build_milp(&g, &d, &limits, w).unwrap();
    }
}
