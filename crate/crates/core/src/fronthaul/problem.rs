//! Joint cluster-processor placement and fronthaul routing as a MILP.

use cellfree_milp::{Model, RowId, Sense, VarId, VarKind};
use serde::{Deserialize, Serialize};

use super::topology::FronthaulGraph;
use crate::clustering::ClusterGraph;
use crate::error::{Error, Result};
use crate::uplink::QuantizationPlan;

/// Per-user fronthaul demands in bits per channel use, before the TDD
/// weighting.
#[derive(Clone, Debug, PartialEq)]
pub struct TrafficDemand {
    /// `(l, B_lk)` over the surviving cluster of each user.
    pub ul_bits: Vec<Vec<(usize, f64)>>,
    /// DL rate of each user.
    pub dl_bits: Vec<f64>,
    pub gamma_dl: f64,
}

impl TrafficDemand {
    /// Demands from a quantization plan (edge ids of `clusters`, the unpruned
    /// graph) and DL rates.
    pub fn from_plan(plan: &QuantizationPlan, clusters: &ClusterGraph, dl_rates: &[f64], gamma_dl: f64) -> Self {
        let ul_bits = (0..clusters.num_ues())
            .map(|k| {
                clusters
                    .serving(k)
                    .iter()
                    .filter_map(|&l| {
                        let q = &plan.edges[clusters.edge(l, k).unwrap()];
                        (!q.pruned).then_some((l, q.bits))
                    })
                    .collect()
            })
            .collect();
        TrafficDemand { ul_bits, dl_bits: dl_rates.to_vec(), gamma_dl }
    }

    pub fn num_users(&self) -> usize {
        self.dl_bits.len()
    }

    /// Users with a non-empty cluster; only these get a cluster processor.
    pub fn is_served(&self, k: usize) -> bool {
        !self.ul_bits[k].is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadWeights {
    pub ru_router: f64,
    pub router_router: f64,
    pub router_du: f64,
}

impl Default for LoadWeights {
    fn default() -> Self {
        LoadWeights { ru_router: 1.0, router_router: 1.0, router_du: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkClass {
    RuRouter,
    RouterRouter,
    RouterDu,
}

/// A physical link and the load variables its capacity row sums.
#[derive(Clone, Debug)]
pub struct Link {
    pub class: LinkClass,
    pub name: String,
    pub row: RowId,
    pub vars: Vec<VarId>,
}

#[derive(Clone, Debug)]
pub struct FronthaulProblem {
    pub model: Model,
    pub graph: FronthaulGraph,
    pub demand: TrafficDemand,
    pub weights: LoadWeights,
    /// `b[k][n]`; empty for users without a cluster.
    pub placement_vars: Vec<Vec<VarId>>,
    pub c_l: VarId,
    pub c_q: VarId,
    pub c_d: VarId,
    pub links: Vec<Link>,
    pub du_limits: Vec<f64>,
}

impl FronthaulProblem {
    /// DU hosting each user in a solution vector.
    pub fn placement(&self, values: &[f64]) -> Vec<Option<usize>> {
        self.placement_vars.iter().map(|b| b.iter().position(|v| values[v.index()] > 0.5)).collect()
    }

    /// Complete fixing of the placement binaries.
    pub fn placement_hint(&self, placement: &[Option<usize>]) -> Vec<(VarId, f64)> {
        let mut hint = Vec::new();
        for (b, p) in self.placement_vars.iter().zip(placement) {
            if let Some(n) = *p {
                for (i, &v) in b.iter().enumerate() {
                    hint.push((v, if i == n { 1.0 } else { 0.0 }));
                }
            }
        }
        hint
    }
}

/// Per-DU limit `ceil(K/2)` for `K` hosted users.
pub fn half_load_limit(num_users: usize, num_dus: usize) -> Vec<f64> {
    vec![num_users.div_ceil(2) as f64; num_dus]
}

/// Builds the placement and routing model.
///
/// Per served user: UL unicast flow conservation at routers, per-RU source
/// rows, the `(1 - gamma)` source bounds, exactly one hosting DU, hosted-DU
/// sink rows and their per-link forcing; DL multicast rows (every single
/// router output bounded by the router's inflow), hosted-DU source rows and
/// forcing, per-RU DL delivery. Shared: DU hosting limits and one capacity row
/// per physical link summing UL and DL (both directions on router-router
/// links).
pub fn build_milp(
    graph: &FronthaulGraph,
    demand: &TrafficDemand,
    du_limits: &[f64],
    weights: LoadWeights,
) -> Result<FronthaulProblem> {
    let g = demand.gamma_dl;
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::Fronthaul(format!("gamma_dl {g} outside (0, 1)")));
    }
    if du_limits.len() != graph.num_dus {
        return Err(Error::Fronthaul("one hosting limit per DU is required".into()));
    }
    let served: Vec<usize> = (0..demand.num_users()).filter(|&k| demand.is_served(k)).collect();
    let capacity: f64 = du_limits.iter().map(|z| z.floor()).sum();
    if (served.len() as f64) > capacity {
        return Err(Error::Fronthaul(format!(
            "{} users need a cluster processor but the DUs host at most {capacity}",
            served.len()
        )));
    }
    let comp = graph.router_components();
    for &k in &served {
        for &(l, bits) in &demand.ul_bits[k] {
            if l >= graph.num_rus || !(bits >= 0.0) {
                return Err(Error::Fronthaul(format!("user {k}: invalid UL demand on RU {l}")));
            }
            if !(0..graph.num_dus).any(|n| graph.connected(l, n, &comp)) {
                return Err(Error::Fronthaul(format!("user {k}: RU {l} has no fronthaul path to any DU")));
            }
        }
    }

    let mut m = Model::new("fronthaul");
    let c_l = m.add_continuous("C_L", weights.ru_router)?;
    let c_q = m.add_continuous("C_Q", weights.router_router)?;
    let c_d = m.add_continuous("C_D", weights.router_du)?;

    let mut cap_ru: Vec<Vec<VarId>> = vec![Vec::new(); graph.ru_router.len()];
    let mut cap_rr: Vec<Vec<VarId>> = vec![Vec::new(); graph.router_router.len()];
    let mut cap_rd: Vec<Vec<VarId>> = vec![Vec::new(); graph.router_du.len()];
    let mut hosted: Vec<Vec<VarId>> = vec![Vec::new(); graph.num_dus];
    let mut placement_vars = vec![Vec::new(); demand.num_users()];
    let nq = graph.num_routers;

    for &k in &served {
        let cluster = &demand.ul_bits[k];
        let ul_total = (1.0 - g) * cluster.iter().map(|c| c.1).sum::<f64>();
        let dl = g * demand.dl_bits[k];

        let b: Vec<VarId> = (0..graph.num_dus)
            .map(|n| m.add_binary(format!("b_k{k}_n{n}"), 0.0))
            .collect::<cellfree_milp::Result<_>>()?;
        for (n, &v) in b.iter().enumerate() {
            hosted[n].push(v);
        }
        m.add_row(format!("place_k{k}"), b.iter().map(|&v| (v, 1.0)), Sense::Eq, 1.0)?;

        // (router, var) lists by direction, per user.
        let mut ul_in: Vec<Vec<VarId>> = vec![Vec::new(); nq];
        let mut ul_out: Vec<Vec<VarId>> = vec![Vec::new(); nq];
        let mut dl_in: Vec<Vec<VarId>> = vec![Vec::new(); nq];
        let mut dl_out: Vec<Vec<(VarId, String)>> = vec![Vec::new(); nq];

        for &(l, bits) in cluster {
            let mut src = Vec::new();
            let mut sink = Vec::new();
            for (e, &(el, q)) in graph.ru_router.iter().enumerate().filter(|(_, e)| e.0 == l) {
                let x = m.add_var(format!("x_ru_k{k}_l{el}_q{q}"), 0.0, (1.0 - g) * bits, VarKind::Continuous, 0.0)?;
                let y = m.add_continuous(format!("y_ru_k{k}_q{q}_l{el}"), 0.0)?;
                ul_in[q].push(x);
                dl_out[q].push((y, format!("l{el}")));
                cap_ru[e].extend([x, y]);
                src.push(x);
                sink.push(y);
            }
            m.add_row(format!("ul_src_k{k}_l{l}"), src.iter().map(|&v| (v, 1.0)), Sense::Ge, (1.0 - g) * bits)?;
            m.add_row(format!("dl_sink_k{k}_l{l}"), sink.iter().map(|&v| (v, 1.0)), Sense::Ge, dl)?;
        }
        for (e, &(a, c)) in graph.router_router.iter().enumerate() {
            for (from, to) in [(a, c), (c, a)] {
                let x = m.add_continuous(format!("x_fh_k{k}_q{from}_q{to}"), 0.0)?;
                let y = m.add_continuous(format!("y_fh_k{k}_q{from}_q{to}"), 0.0)?;
                ul_out[from].push(x);
                ul_in[to].push(x);
                dl_out[from].push((y, format!("q{to}")));
                dl_in[to].push(y);
                cap_rr[e].extend([x, y]);
            }
        }
        let mut x_du: Vec<Vec<VarId>> = vec![Vec::new(); graph.num_dus];
        let mut y_du: Vec<Vec<VarId>> = vec![Vec::new(); graph.num_dus];
        for (e, &(q, n)) in graph.router_du.iter().enumerate() {
            let x = m.add_continuous(format!("x_du_k{k}_q{q}_n{n}"), 0.0)?;
            let y = m.add_continuous(format!("y_du_k{k}_n{n}_q{q}"), 0.0)?;
            ul_out[q].push(x);
            dl_in[q].push(y);
            x_du[n].push(x);
            y_du[n].push(y);
            cap_rd[e].extend([x, y]);
            m.add_row(format!("ul_du_ub_k{k}_q{q}_n{n}"), [(x, 1.0), (b[n], -ul_total)], Sense::Le, 0.0)?;
            m.add_row(format!("dl_du_ub_k{k}_n{n}_q{q}"), [(y, 1.0), (b[n], -dl)], Sense::Le, 0.0)?;
        }
        for n in 0..graph.num_dus {
            let terms = x_du[n].iter().map(|&v| (v, 1.0)).chain([(b[n], -ul_total)]);
            m.add_row(format!("ul_sink_k{k}_n{n}"), terms, Sense::Ge, 0.0)?;
            let terms = y_du[n].iter().map(|&v| (v, 1.0)).chain([(b[n], -dl)]);
            m.add_row(format!("dl_src_k{k}_n{n}"), terms, Sense::Ge, 0.0)?;
        }
        for q in 0..nq {
            if !(ul_in[q].is_empty() && ul_out[q].is_empty()) {
                let terms = ul_in[q].iter().map(|&v| (v, 1.0)).chain(ul_out[q].iter().map(|&v| (v, -1.0)));
                m.add_row(format!("ul_conserve_k{k}_q{q}"), terms, Sense::Eq, 0.0)?;
            }
            for (out, target) in &dl_out[q] {
                let terms = dl_in[q].iter().map(|&v| (v, 1.0)).chain([(*out, -1.0)]);
                m.add_row(format!("dl_mc_k{k}_q{q}_{target}"), terms, Sense::Ge, 0.0)?;
            }
        }
        placement_vars[k] = b;
    }

    for (n, vars) in hosted.iter().enumerate() {
        m.add_row(format!("du_limit_n{n}"), vars.iter().map(|&v| (v, 1.0)), Sense::Le, du_limits[n])?;
    }

    let mut links = Vec::new();
    let classes = [
        (
            LinkClass::RuRouter,
            c_l,
            cap_ru,
            graph.ru_router.iter().map(|&(l, q)| format!("cap_ru_l{l}_q{q}")).collect::<Vec<_>>(),
        ),
        (
            LinkClass::RouterRouter,
            c_q,
            cap_rr,
            graph.router_router.iter().map(|&(a, b)| format!("cap_rr_q{a}_q{b}")).collect(),
        ),
        (LinkClass::RouterDu, c_d, cap_rd, graph.router_du.iter().map(|&(q, n)| format!("cap_du_q{q}_n{n}")).collect()),
    ];
    for (class, c, caps, names) in classes {
        for (vars, name) in caps.into_iter().zip(names) {
            let terms = vars.iter().map(|&v| (v, 1.0)).chain([(c, -1.0)]);
            let row = m.add_row(name.clone(), terms, Sense::Le, 0.0)?;
            links.push(Link { class, name, row, vars });
        }
    }

    Ok(FronthaulProblem {
        model: m,
        graph: graph.clone(),
        demand: demand.clone(),
        weights,
        placement_vars,
        c_l,
        c_q,
        c_d,
        links,
        du_limits: du_limits.to_vec(),
    })
}
