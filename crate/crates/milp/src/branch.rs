//! Best-first branch-and-bound over the binary variables of a [`Model`].
//!
//! Nodes carry their fixings and the parent's optimal basis so every child LP
//! is warm-started by the dual simplex. Incumbents come from caller hints,
//! from rounding the LP optimum, and from periodic dives that repeatedly fix
//! the largest fractional binary to one.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use crate::model::{Model, VarId, VarKind};
use crate::simplex::{Basis, LpOptions, LpSolver, LpStatus};
use crate::solution::{MilpSolution, SolveStatus};

#[derive(Clone, Debug)]
pub struct BranchOptions {
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub int_tol: f64,
    /// Maximum number of branch-and-bound nodes (deterministic budget).
    pub node_limit: Option<usize>,
    /// Wall-clock safety net; results depend on timing once it triggers.
    pub time_limit: Option<Duration>,
    /// Dive every this many processed nodes (0 disables periodic dives).
    pub dive_every: usize,
    pub lp: LpOptions,
}

impl Default for BranchOptions {
    fn default() -> Self {
        BranchOptions {
            abs_gap: 1e-6,
            rel_gap: 0.0,
            int_tol: 1e-6,
            node_limit: None,
            time_limit: None,
            dive_every: 50,
            lp: LpOptions::default(),
        }
    }
}

/// Partial assignment of binaries used to seed the incumbent.
pub type Hint = Vec<(VarId, f64)>;

/// Maps a fractional LP point to candidate fixings (for example a rounded
/// placement) that are then completed by one LP solve.
pub type Rounding<'r> = &'r dyn Fn(&[f64]) -> Option<Hint>;

struct Node {
    bound: f64,
    depth: usize,
    id: usize,
    fixings: Vec<(usize, f64)>,
    basis: Rc<Basis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: the "greatest" node is the one to explore next.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(self.depth.cmp(&other.depth)).then(other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    model: &'a Model,
    opts: &'a BranchOptions,
    lp: LpSolver,
    binaries: Vec<usize>,
    applied: Vec<usize>,
    incumbent: Option<(f64, Vec<f64>)>,
    nodes: usize,
    start: Instant,
    sign: f64,
    rounding: Option<Rounding<'a>>,
}

impl<'a> Search<'a> {
    /// Internal objective is always minimized; `sign` maps back.
    fn internal(&self, obj: f64) -> f64 {
        self.sign * obj
    }

    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            None => f64::INFINITY,
            Some((v, _)) => v - self.tolerance(*v),
        }
    }

    fn tolerance(&self, incumbent: f64) -> f64 {
        self.opts.abs_gap.max(self.opts.rel_gap * incumbent.abs())
    }

    fn out_of_time(&self) -> bool {
        self.opts.time_limit.is_some_and(|t| self.start.elapsed() >= t)
    }

    fn apply(&mut self, fixings: &[(usize, f64)]) {
        for &j in &self.applied {
            let v = &self.model.vars()[j];
            self.lp.set_bounds(j, v.lower, v.upper);
        }
        self.applied.clear();
        for &(j, val) in fixings {
            self.lp.set_bounds(j, val, val);
            self.applied.push(j);
        }
    }

    fn solve_lp(&mut self) -> Option<f64> {
        match self.lp.solve() {
            LpStatus::Optimal => Some(self.internal(self.lp.objective())),
            LpStatus::Infeasible => None,
            LpStatus::Unbounded => Some(f64::NEG_INFINITY),
            LpStatus::IterationLimit => {
                log::warn!("LP iteration limit reached; node dropped");
                None
            }
        }
    }

    fn fractional(&self, x: &[f64]) -> Vec<usize> {
        let tol = self.opts.int_tol;
        self.binaries.iter().copied().filter(|&j| x[j].min(1.0 - x[j]) > tol).collect()
    }

    fn offer(&mut self, obj: f64, x: &[f64]) -> bool {
        if obj < self.incumbent.as_ref().map_or(f64::INFINITY, |i| i.0) {
            let mut x = x.to_vec();
            for &j in &self.binaries {
                x[j] = x[j].round();
            }
            log::debug!("new incumbent {} after {} nodes", self.sign * obj, self.nodes);
            self.incumbent = Some((obj, x));
            true
        } else {
            false
        }
    }

    /// Solves the LP with the given fixings and offers the point if integral.
    fn try_fixings(&mut self, fixings: &[(usize, f64)], basis: &Basis) -> Option<f64> {
        self.apply(fixings);
        self.lp.set_basis(basis);
        let obj = self.solve_lp()?;
        let x = self.lp.values().to_vec();
        if self.fractional(&x).is_empty() {
            self.offer(obj, &x);
        }
        Some(obj)
    }

    fn round(&mut self, x: &[f64], basis: &Basis) {
        if let Some(f) = self.rounding {
            if let Some(hint) = f(x) {
                let fixings: Vec<(usize, f64)> = hint.iter().map(|&(v, val)| (v.0, val)).collect();
                self.try_fixings(&fixings, basis);
            }
        }
    }

    /// Repeatedly fixes the largest fractional binary to one (or zero after
    /// an infeasible attempt) until the LP optimum is integral.
    fn dive(&mut self, base: &[(usize, f64)], basis: &Basis) {
        let mut fixings = base.to_vec();
        self.apply(&fixings);
        self.lp.set_basis(basis);
        let Some(mut obj) = self.solve_lp() else { return };
        loop {
            if obj >= self.cutoff() || self.out_of_time() {
                return;
            }
            let x = self.lp.values().to_vec();
            let frac = self.fractional(&x);
            if frac.is_empty() {
                self.offer(obj, &x);
                return;
            }
            let &j = frac.iter().max_by(|&&a, &&b| x[a].total_cmp(&x[b]).then(b.cmp(&a))).expect("non-empty");
            let saved = self.lp.basis();
            fixings.push((j, 1.0));
            self.apply(&fixings);
            match self.solve_lp() {
                Some(v) => obj = v,
                None => {
                    fixings.last_mut().expect("just pushed").1 = 0.0;
                    self.apply(&fixings);
                    self.lp.set_basis(&saved);
                    match self.solve_lp() {
                        Some(v) => obj = v,
                        None => return,
                    }
                }
            }
        }
    }
}

/// Solves `model` by branch-and-bound. `hints` are partial binary assignments
/// (typically complete placements) tried before the search starts.
pub fn solve(model: &Model, opts: &BranchOptions, hints: &[Hint]) -> MilpSolution {
    solve_with_rounding(model, opts, hints, None)
}

/// Like [`solve`], additionally applying `rounding` to the root LP point and
/// to every node that triggers a dive.
pub fn solve_with_rounding(
    model: &Model,
    opts: &BranchOptions,
    hints: &[Hint],
    rounding: Option<Rounding<'_>>,
) -> MilpSolution {
    let sign = match model.sense {
        crate::model::ObjectiveSense::Minimize => 1.0,
        crate::model::ObjectiveSense::Maximize => -1.0,
    };
    let mut s = Search {
        model,
        opts,
        lp: LpSolver::new(model, opts.lp.clone()),
        binaries: model.vars().iter().enumerate().filter(|(_, v)| v.kind == VarKind::Binary).map(|(j, _)| j).collect(),
        applied: Vec::new(),
        incumbent: None,
        nodes: 0,
        start: Instant::now(),
        sign,
        rounding,
    };

    let finish = |s: Search, status: SolveStatus, bound: f64| -> MilpSolution {
        let iterations = s.lp.iterations();
        match s.incumbent {
            Some((obj, values)) => MilpSolution {
                status,
                objective: sign * obj,
                bound: sign * bound.min(obj),
                values,
                nodes: s.nodes,
                lp_iterations: iterations,
            },
            None => MilpSolution {
                status: if status == SolveStatus::Optimal { SolveStatus::Infeasible } else { status },
                objective: f64::NAN,
                bound: sign * bound,
                values: Vec::new(),
                nodes: s.nodes,
                lp_iterations: iterations,
            },
        }
    };

    let Some(root_obj) = s.solve_lp() else {
        return finish(s, SolveStatus::Infeasible, f64::INFINITY);
    };
    log::debug!("root LP {root_obj} after {} iterations, {:?}", s.lp.iterations(), s.start.elapsed());
    let root_basis = Rc::new(s.lp.basis());
    let root_x = s.lp.values().to_vec();
    if s.fractional(&root_x).is_empty() {
        s.offer(root_obj, &root_x);
        return finish(s, SolveStatus::Optimal, root_obj);
    }

    for hint in hints {
        let fixings: Vec<(usize, f64)> = hint.iter().map(|&(v, x)| (v.0, x)).collect();
        s.try_fixings(&fixings, &root_basis);
    }
    s.round(&root_x, &root_basis);
    log::debug!("hints and rounding done after {} iterations, {:?}", s.lp.iterations(), s.start.elapsed());
    if root_obj < s.cutoff() {
        s.dive(&[], &root_basis);
        log::debug!("root dive done after {} iterations, {:?}", s.lp.iterations(), s.start.elapsed());
    }

    let mut heap = BinaryHeap::new();
    let mut next_id = 0usize;
    heap.push(Node { bound: root_obj, depth: 0, id: next_id, fixings: Vec::new(), basis: root_basis });
    next_id += 1;

    let mut best_bound = root_obj;
    while let Some(node) = heap.peek() {
        best_bound = node.bound;
        if node.bound >= s.cutoff() {
            break;
        }
        if opts.node_limit.is_some_and(|lim| s.nodes >= lim) {
            let status = if s.incumbent.is_some() { SolveStatus::FeasibleWithGap } else { SolveStatus::NoSolution };
            return finish(s, status, best_bound);
        }
        if s.out_of_time() {
            return finish(s, SolveStatus::TimeLimit, best_bound);
        }
        let node = heap.pop().expect("peeked");
        s.nodes += 1;
        s.apply(&node.fixings);
        s.lp.set_basis(&node.basis);
        let Some(obj) = s.solve_lp() else { continue };
        if obj >= s.cutoff() {
            continue;
        }
        let x = s.lp.values().to_vec();
        let frac = s.fractional(&x);
        if frac.is_empty() {
            s.offer(obj, &x);
            continue;
        }
        let basis = Rc::new(s.lp.basis());
        let &j = frac
            .iter()
            .min_by(|&&a, &&b| (x[a] - 0.5).abs().total_cmp(&(x[b] - 0.5).abs()).then(a.cmp(&b)))
            .expect("non-empty");
        for val in [0.0, 1.0] {
            let mut fixings = node.fixings.clone();
            fixings.push((j, val));
            heap.push(Node { bound: obj, depth: node.depth + 1, id: next_id, fixings, basis: Rc::clone(&basis) });
            next_id += 1;
        }
        if opts.dive_every > 0 && s.nodes.is_multiple_of(opts.dive_every) {
            s.round(&x, &basis);
            s.dive(&node.fixings, &basis);
        }
    }
    if heap.is_empty() {
        best_bound = s.incumbent.as_ref().map_or(f64::INFINITY, |i| i.0);
    }
    finish(s, SolveStatus::Optimal, best_bound)
}
