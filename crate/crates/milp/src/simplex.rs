//! Bounded revised simplex on sparse matrices.
//!
//! Every row `i` of the model gets a logical variable `s_i` so the
//! computational form is `A x + s = 0` with bounds on both `x` and `s`
//! (`lo <= a_i x <= hi` becomes `-hi <= s_i <= -lo`). The all-logical basis is
//! the identity, and because every nonbasic variable sits at a finite bound the
//! dual simplex can start from it whenever the costs are sign-compatible.
//!
//! The driver runs the dual simplex (dual steepest-edge pricing, Harris ratio
//! test with cost shifting, random cost perturbation against dual
//! degeneracy), then removes the perturbation and finishes with primal simplex
//! iterations. The primal phase falls back to Bland's rule after a run of
//! degenerate pivots.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lu::LuFactors;
use crate::model::{Model, ObjectiveSense, Sense};

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

/// A simplex basis: which variable occupies each basis position, plus the
/// status of every structural and logical variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    pub head: Vec<usize>,
    pub status: Vec<VarStatus>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpOptions {
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub pivot_tol: f64,
    pub refactor_every: usize,
    pub max_iterations: usize,
    pub perturb: bool,
    pub seed: u64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            primal_tol: 1e-9,
            dual_tol: 1e-9,
            pivot_tol: 1e-9,
            refactor_every: 100,
            max_iterations: 5_000_000,
            perturb: true,
            seed: 0x5eed,
        }
    }
}

pub struct LpSolver {
    n: usize,
    m: usize,
    a_start: Vec<usize>,
    a_row: Vec<usize>,
    a_val: Vec<f64>,
    r_start: Vec<usize>,
    r_col: Vec<usize>,
    r_val: Vec<f64>,
    unit_idx: Vec<usize>,
    unit_val: Vec<f64>,
    sign: f64,
    cost: Vec<f64>,
    work_cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    d: Vec<f64>,
    head: Vec<usize>,
    pos: Vec<usize>,
    status: Vec<VarStatus>,
    lu: LuFactors,
    factor_valid: bool,
    dse: Vec<f64>,
    // scratch
    buf_row: Vec<f64>,
    buf_pos: Vec<f64>,
    rho: Vec<f64>,
    alpha_q: Vec<f64>,
    tau: Vec<f64>,
    alpha_row: Vec<f64>,
    row_touched: Vec<usize>,
    row_mark: Vec<bool>,
    rng: ChaCha8Rng,
    pub opts: LpOptions,
    iterations: usize,
    total_iterations: usize,
}

enum Step {
    Done,
    Infeasible,
    Unbounded,
    Continue,
}

impl LpSolver {
    pub fn new(model: &Model, opts: LpOptions) -> Self {
        let n = model.num_vars();
        let m = model.num_rows();
        let nt = n + m;
        let sign = match model.sense {
            ObjectiveSense::Minimize => 1.0,
            ObjectiveSense::Maximize => -1.0,
        };
        // CSR straight from the rows, CSC by transposition.
        let mut r_start = Vec::with_capacity(m + 1);
        let mut r_col = Vec::new();
        let mut r_val = Vec::new();
        r_start.push(0);
        let mut col_count = vec![0usize; n];
        for row in model.rows() {
            for &(v, a) in &row.terms {
                r_col.push(v.0);
                r_val.push(a);
                col_count[v.0] += 1;
            }
            r_start.push(r_col.len());
        }
        let mut a_start = vec![0usize; n + 1];
        for j in 0..n {
            a_start[j + 1] = a_start[j] + col_count[j];
        }
        let mut fill = a_start.clone();
        let mut a_row = vec![0usize; r_col.len()];
        let mut a_val = vec![0f64; r_col.len()];
        for i in 0..m {
            for t in r_start[i]..r_start[i + 1] {
                let j = r_col[t];
                a_row[fill[j]] = i;
                a_val[fill[j]] = r_val[t];
                fill[j] += 1;
            }
        }

        let mut cost = vec![0.0; nt];
        let mut lower = vec![0.0; nt];
        let mut upper = vec![0.0; nt];
        for (j, v) in model.vars().iter().enumerate() {
            cost[j] = sign * v.objective;
            lower[j] = v.lower;
            upper[j] = v.upper;
        }
        for (i, row) in model.rows().iter().enumerate() {
            let (lo, hi) = match row.sense {
                Sense::Le => (f64::NEG_INFINITY, row.rhs),
                Sense::Ge => (row.rhs, f64::INFINITY),
                Sense::Eq => (row.rhs, row.rhs),
            };
            lower[n + i] = -hi;
            upper[n + i] = -lo;
        }

        let mut solver = LpSolver {
            n,
            m,
            a_start,
            a_row,
            a_val,
            r_start,
            r_col,
            r_val,
            unit_idx: (0..m).collect(),
            unit_val: vec![1.0; m],
            sign,
            work_cost: cost.clone(),
            cost,
            lower,
            upper,
            x: vec![0.0; nt],
            d: vec![0.0; nt],
            head: (n..nt).collect(),
            pos: vec![NONE; nt],
            status: vec![VarStatus::AtLower; nt],
            lu: LuFactors::default(),
            factor_valid: false,
            dse: vec![1.0; m],
            buf_row: vec![0.0; m],
            buf_pos: vec![0.0; m],
            rho: vec![0.0; m],
            alpha_q: vec![0.0; m],
            tau: vec![0.0; m],
            alpha_row: vec![0.0; nt],
            row_touched: Vec::new(),
            row_mark: vec![false; nt],
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            opts,
            iterations: 0,
            total_iterations: 0,
        };
        for i in 0..m {
            solver.pos[n + i] = i;
            solver.status[n + i] = VarStatus::Basic;
        }
        for j in 0..n {
            solver.status[j] = solver.default_nonbasic_status(j);
        }
        solver
    }

    pub fn num_cols(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    #[allow(clippy::misnamed_getters)]
    pub fn iterations(&self) -> usize {
        self.total_iterations
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        assert!(j < self.n, "only structural bounds can change");
        self.lower[j] = lower;
        self.upper[j] = upper;
        if self.status[j] != VarStatus::Basic {
            self.status[j] = self.fit_status(j, self.status[j]);
        }
    }

    pub fn basis(&self) -> Basis {
        Basis { head: self.head.clone(), status: self.status.clone() }
    }

    pub fn set_basis(&mut self, basis: &Basis) {
        if basis.head == self.head && basis.status == self.status {
            return;
        }
        self.head.clone_from(&basis.head);
        self.status.clone_from(&basis.status);
        self.pos.iter_mut().for_each(|p| *p = NONE);
        for (i, &j) in self.head.iter().enumerate() {
            self.pos[j] = i;
        }
        for j in 0..self.n + self.m {
            if self.status[j] != VarStatus::Basic {
                self.status[j] = self.fit_status(j, self.status[j]);
            }
        }
        self.factor_valid = false;
        self.dse.iter_mut().for_each(|w| *w = 1.0);
    }

    /// Objective value of the current primal point in the model's own sense.
    pub fn objective(&self) -> f64 {
        self.sign * (0..self.n).map(|j| self.cost[j] * self.x[j]).sum::<f64>()
    }

    pub fn values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    fn default_nonbasic_status(&self, j: usize) -> VarStatus {
        if self.lower[j].is_finite() {
            VarStatus::AtLower
        } else if self.upper[j].is_finite() {
            VarStatus::AtUpper
        } else {
            VarStatus::Free
        }
    }

    fn fit_status(&self, j: usize, s: VarStatus) -> VarStatus {
        match s {
            VarStatus::AtLower if self.lower[j].is_finite() => VarStatus::AtLower,
            VarStatus::AtUpper if self.upper[j].is_finite() => VarStatus::AtUpper,
            _ => self.default_nonbasic_status(j),
        }
    }

    fn column(&self, j: usize) -> (&[usize], &[f64]) {
        if j < self.n {
            let (s, e) = (self.a_start[j], self.a_start[j + 1]);
            (&self.a_row[s..e], &self.a_val[s..e])
        } else {
            let i = j - self.n;
            (&self.unit_idx[i..i + 1], &self.unit_val[i..i + 1])
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    fn refactor(&mut self) {
        loop {
            let result = {
                let head = &self.head;
                let this = &*self;
                LuFactors::factorize(self.m, |p| this.column(head[p]))
            };
            match result {
                Ok(lu) => {
                    self.lu = lu;
                    self.factor_valid = true;
                    return;
                }
                Err(sing) => {
                    log::debug!("singular basis: replacing {} columns by logicals", sing.positions.len());
                    for (&p, &r) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.head[p];
                        let logical = self.n + r;
                        self.pos[out] = NONE;
                        let st = if self.x[out] - self.lower[out] <= self.upper[out] - self.x[out] {
                            VarStatus::AtLower
                        } else {
                            VarStatus::AtUpper
                        };
                        self.status[out] = self.fit_status(out, st);
                        self.head[p] = logical;
                        self.pos[logical] = p;
                        self.status[logical] = VarStatus::Basic;
                        self.dse[p] = 1.0;
                    }
                }
            }
        }
    }

    fn place_nonbasic(&mut self) {
        for j in 0..self.n + self.m {
            self.x[j] = match self.status[j] {
                VarStatus::Basic => continue,
                VarStatus::AtLower => self.lower[j],
                VarStatus::AtUpper => self.upper[j],
                VarStatus::Free => 0.0,
            };
        }
    }

    fn compute_primal(&mut self) {
        let mut rhs = std::mem::take(&mut self.buf_row);
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                let (idx, val) = self.column(j);
                for (&i, &a) in idx.iter().zip(val) {
                    rhs[i] -= a * xj;
                }
            }
        }
        let mut xb = std::mem::take(&mut self.buf_pos);
        self.lu.ftran(&mut rhs, &mut xb);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[p];
        }
        self.buf_row = rhs;
        self.buf_pos = xb;
    }

    fn compute_duals(&mut self) {
        let mut e = std::mem::take(&mut self.buf_pos);
        for (p, &j) in self.head.iter().enumerate() {
            e[p] = self.work_cost[j];
        }
        let mut y = std::mem::take(&mut self.buf_row);
        self.lu.btran(&mut e, &mut y);
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic {
                self.d[j] = 0.0;
                continue;
            }
            let (idx, val) = self.column(j);
            let dot: f64 = idx.iter().zip(val).map(|(&i, &a)| a * y[i]).sum();
            self.d[j] = self.work_cost[j] - dot;
        }
        self.buf_pos = e;
        self.buf_row = y;
    }

    /// Flips boxed variables and shifts costs of the rest so that every
    /// nonbasic reduced cost has the right sign. Returns whether a flip moved
    /// any primal value.
    fn make_dual_feasible(&mut self) -> bool {
        let tol = self.opts.dual_tol;
        let mut flipped = false;
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic || self.is_fixed(j) {
                continue;
            }
            let dj = self.d[j];
            match self.status[j] {
                VarStatus::AtLower if dj < -tol => {
                    if self.upper[j].is_finite() {
                        self.status[j] = VarStatus::AtUpper;
                        self.x[j] = self.upper[j];
                        flipped = true;
                    } else {
                        self.work_cost[j] -= dj;
                        self.d[j] = 0.0;
                    }
                }
                VarStatus::AtUpper if dj > tol => {
                    if self.lower[j].is_finite() {
                        self.status[j] = VarStatus::AtLower;
                        self.x[j] = self.lower[j];
                        flipped = true;
                    } else {
                        self.work_cost[j] -= dj;
                        self.d[j] = 0.0;
                    }
                }
                VarStatus::Free if dj.abs() > tol => {
                    self.work_cost[j] -= dj;
                    self.d[j] = 0.0;
                }
                _ => {}
            }
        }
        flipped
    }

    fn perturb_costs(&mut self) {
        let cmax = self.cost.iter().fold(0.0f64, |a, c| a.max(c.abs())).max(1.0);
        let base = 5e-7 * cmax;
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic || self.is_fixed(j) {
                continue;
            }
            let xi = base * (1.0 + self.cost[j].abs() / cmax) * (0.5 + self.rng.gen::<f64>());
            match self.status[j] {
                VarStatus::AtLower => {
                    self.work_cost[j] += xi;
                    self.d[j] += xi;
                }
                VarStatus::AtUpper => {
                    self.work_cost[j] -= xi;
                    self.d[j] -= xi;
                }
                _ => {}
            }
        }
    }

    fn primal_infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lower[j] - self.opts.primal_tol {
            v - self.lower[j]
        } else if v > self.upper[j] + self.opts.primal_tol {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn max_dual_infeasibility(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic || self.is_fixed(j) {
                continue;
            }
            let v = match self.status[j] {
                VarStatus::AtLower => -self.d[j],
                VarStatus::AtUpper => self.d[j],
                VarStatus::Free => self.d[j].abs(),
                VarStatus::Basic => 0.0,
            };
            worst = worst.max(v);
        }
        worst
    }

    fn max_primal_infeasibility(&self) -> f64 {
        self.head.iter().map(|&j| self.primal_infeasibility(j).abs()).fold(0.0, f64::max)
    }

    /// `rho = B^-T e_r`.
    fn compute_rho(&mut self, r: usize) {
        let mut e = std::mem::take(&mut self.buf_pos);
        e.iter_mut().for_each(|v| *v = 0.0);
        e[r] = 1.0;
        let mut rho = std::mem::take(&mut self.rho);
        self.lu.btran(&mut e, &mut rho);
        self.buf_pos = e;
        self.rho = rho;
    }

    /// `alpha_q = B^-1 a_q`.
    fn compute_alpha_q(&mut self, q: usize) {
        let mut b = std::mem::take(&mut self.buf_row);
        b.iter_mut().for_each(|v| *v = 0.0);
        {
            let (idx, val) = self.column(q);
            for (&i, &a) in idx.iter().zip(val) {
                b[i] = a;
            }
        }
        let mut out = std::mem::take(&mut self.alpha_q);
        self.lu.ftran(&mut b, &mut out);
        self.buf_row = b;
        self.alpha_q = out;
    }

    /// Pivot row `alpha_r = rho^T [A | I]` restricted to nonbasic columns.
    fn compute_pivot_row(&mut self) {
        for &j in &self.row_touched {
            self.alpha_row[j] = 0.0;
            self.row_mark[j] = false;
        }
        self.row_touched.clear();
        for i in 0..self.m {
            let ri = self.rho[i];
            if ri.abs() <= 1e-14 {
                continue;
            }
            for t in self.r_start[i]..self.r_start[i + 1] {
                let j = self.r_col[t];
                if self.status[j] == VarStatus::Basic {
                    continue;
                }
                if !self.row_mark[j] {
                    self.row_mark[j] = true;
                    self.row_touched.push(j);
                }
                self.alpha_row[j] += ri * self.r_val[t];
            }
            let lj = self.n + i;
            if self.status[lj] != VarStatus::Basic {
                if !self.row_mark[lj] {
                    self.row_mark[lj] = true;
                    self.row_touched.push(lj);
                }
                self.alpha_row[lj] += ri;
            }
        }
    }

    fn swap_basis(&mut self, r: usize, q: usize, leaving_status: VarStatus) {
        let p = self.head[r];
        self.head[r] = q;
        self.pos[q] = r;
        self.pos[p] = NONE;
        self.status[q] = VarStatus::Basic;
        self.status[p] = self.fit_status(p, leaving_status);
        self.lu.update(r, &self.alpha_q);
    }

    fn refresh(&mut self) {
        self.refactor();
        self.compute_primal();
        self.compute_duals();
    }

    fn dual_iteration(&mut self) -> Step {
        // Pricing: dual steepest edge.
        let mut r = NONE;
        let mut best = 0.0;
        for p in 0..self.m {
            let inf = self.primal_infeasibility(self.head[p]);
            if inf != 0.0 {
                let score = inf * inf / self.dse[p];
                if score > best {
                    best = score;
                    r = p;
                }
            }
        }
        if r == NONE {
            return Step::Done;
        }
        let p_var = self.head[r];
        let delta = self.primal_infeasibility(p_var);
        self.compute_rho(r);
        self.compute_pivot_row();

        // Harris two-pass ratio test.
        let sgn = if delta < 0.0 { -1.0 } else { 1.0 };
        let (ptol, dtol) = (self.opts.pivot_tol, self.opts.dual_tol);
        let mut tmax = f64::INFINITY;
        for &j in &self.row_touched {
            if self.is_fixed(j) {
                continue;
            }
            let a = sgn * self.alpha_row[j];
            let dj = self.d[j];
            let bound = match self.status[j] {
                VarStatus::AtLower if a > ptol => (dj + dtol) / a,
                VarStatus::AtUpper if a < -ptol => (dj - dtol) / a,
                VarStatus::Free if a.abs() > ptol => (dj.abs() + dtol) / a.abs(),
                _ => continue,
            };
            tmax = tmax.min(bound);
        }
        if tmax == f64::INFINITY {
            return Step::Infeasible;
        }
        let mut q = NONE;
        let mut qa = 0.0;
        for &j in &self.row_touched {
            if self.is_fixed(j) {
                continue;
            }
            let a = sgn * self.alpha_row[j];
            let dj = self.d[j];
            let ratio = match self.status[j] {
                VarStatus::AtLower if a > ptol => dj / a,
                VarStatus::AtUpper if a < -ptol => dj / a,
                VarStatus::Free if a.abs() > ptol => dj.abs() / a.abs(),
                _ => continue,
            };
            if ratio <= tmax && (a.abs() > qa || (a.abs() == qa && j < q)) {
                q = j;
                qa = a.abs();
            }
        }
        let aq = sgn * self.alpha_row[q];
        let mut t = match self.status[q] {
            VarStatus::Free => 0.0,
            _ => self.d[q] / aq,
        };
        if t < 0.0 {
            // Slightly infeasible candidate: shift its cost to zero the reduced cost.
            self.work_cost[q] -= self.d[q];
            self.d[q] = 0.0;
            t = 0.0;
        }

        self.compute_alpha_q(q);
        let arq = self.alpha_q[r];
        let arow = self.alpha_row[q];
        if arq.abs() < ptol || (arq - arow).abs() > 1e-7 * (1.0 + arq.abs()) {
            if self.lu.num_updates() > 0 {
                self.refresh();
                self.make_dual_feasible();
                self.compute_primal();
                return Step::Continue;
            }
            if arq.abs() < ptol {
                return Step::Infeasible;
            }
        }

        // DSE needs tau = B^-1 rho before the basis changes.
        {
            let mut b = std::mem::take(&mut self.buf_row);
            b.copy_from_slice(&self.rho);
            let mut tau = std::mem::take(&mut self.tau);
            self.lu.ftran(&mut b, &mut tau);
            self.buf_row = b;
            self.tau = tau;
        }
        let wr: f64 = self.rho.iter().map(|v| v * v).sum();

        // Dual update.
        let theta_d = sgn * t;
        if theta_d != 0.0 {
            for idx in 0..self.row_touched.len() {
                let j = self.row_touched[idx];
                self.d[j] -= theta_d * self.alpha_row[j];
                if self.is_fixed(j) {
                    continue;
                }
                let wrong = match self.status[j] {
                    VarStatus::AtLower => self.d[j] < 0.0,
                    VarStatus::AtUpper => self.d[j] > 0.0,
                    _ => false,
                };
                if wrong {
                    self.work_cost[j] -= self.d[j];
                    self.d[j] = 0.0;
                }
            }
        }
        self.d[q] = 0.0;
        self.d[p_var] = -theta_d;

        // Primal update.
        let theta_p = delta / arq;
        for i in 0..self.m {
            let a = self.alpha_q[i];
            if a != 0.0 {
                let j = self.head[i];
                self.x[j] -= theta_p * a;
            }
        }
        self.x[q] += theta_p;
        let leaving_status = if delta < 0.0 { VarStatus::AtLower } else { VarStatus::AtUpper };
        self.x[p_var] = if delta < 0.0 { self.lower[p_var] } else { self.upper[p_var] };

        // Dual steepest-edge weights.
        for i in 0..self.m {
            let a = self.alpha_q[i];
            if i == r || a == 0.0 {
                continue;
            }
            let k = a / arq;
            self.dse[i] = (self.dse[i] + k * (k * wr - 2.0 * self.tau[i])).max(1e-8);
        }
        self.dse[r] = (wr / (arq * arq)).max(1e-8);

        self.swap_basis(r, q, leaving_status);
        Step::Continue
    }

    fn dual_phase(&mut self) -> LpStatus {
        let mut retried_infeasible = false;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return LpStatus::IterationLimit;
            }
            if self.lu.num_updates() >= self.opts.refactor_every
                || self.lu.eta_nonzeros() > 4 * self.lu.factor_nonzeros() + 10 * self.m
            {
                self.refresh();
                if self.make_dual_feasible() {
                    self.compute_primal();
                }
            }
            match self.dual_iteration() {
                Step::Done => return LpStatus::Optimal,
                Step::Infeasible => {
                    if retried_infeasible && self.lu.num_updates() == 0 {
                        return LpStatus::Infeasible;
                    }
                    retried_infeasible = true;
                    self.refresh();
                    if self.make_dual_feasible() {
                        self.compute_primal();
                    }
                }
                Step::Unbounded => unreachable!(),
                Step::Continue => {
                    retried_infeasible = false;
                    self.iterations += 1;
                }
            }
        }
    }

    fn primal_iteration(&mut self, bland: bool) -> (Step, bool) {
        let dtol = self.opts.dual_tol;
        let mut q = NONE;
        let mut best = 0.0;
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic || self.is_fixed(j) {
                continue;
            }
            let inf = match self.status[j] {
                VarStatus::AtLower => -self.d[j],
                VarStatus::AtUpper => self.d[j],
                VarStatus::Free => self.d[j].abs(),
                VarStatus::Basic => 0.0,
            };
            if inf > dtol {
                if bland {
                    q = j;
                    break;
                }
                if inf > best {
                    best = inf;
                    q = j;
                }
            }
        }
        if q == NONE {
            return (Step::Done, false);
        }
        let dir = if self.d[q] < 0.0 { 1.0 } else { -1.0 };
        self.compute_alpha_q(q);

        let (ptol, pvt) = (self.opts.primal_tol, self.opts.pivot_tol);
        let tol = if bland { 0.0 } else { ptol };
        let mut tmax = f64::INFINITY;
        for i in 0..self.m {
            let rate = -dir * self.alpha_q[i];
            if rate.abs() <= pvt {
                continue;
            }
            let j = self.head[i];
            let lim = if rate < 0.0 {
                if self.lower[j].is_finite() {
                    ((self.x[j] - self.lower[j]).max(0.0) + tol) / -rate
                } else {
                    continue;
                }
            } else if self.upper[j].is_finite() {
                ((self.upper[j] - self.x[j]).max(0.0) + tol) / rate
            } else {
                continue;
            };
            tmax = tmax.min(lim);
        }
        let range = self.upper[q] - self.lower[q];
        if tmax == f64::INFINITY && !range.is_finite() {
            return (Step::Unbounded, false);
        }
        let mut r = NONE;
        let mut ra = 0.0;
        let mut rlim = 0.0;
        for i in 0..self.m {
            let rate = -dir * self.alpha_q[i];
            if rate.abs() <= pvt {
                continue;
            }
            let j = self.head[i];
            let lim = if rate < 0.0 {
                if self.lower[j].is_finite() {
                    (self.x[j] - self.lower[j]).max(0.0) / -rate
                } else {
                    continue;
                }
            } else if self.upper[j].is_finite() {
                (self.upper[j] - self.x[j]).max(0.0) / rate
            } else {
                continue;
            };
            if lim <= tmax {
                let better =
                    if bland { r == NONE || lim < rlim || (lim == rlim && j < self.head[r]) } else { rate.abs() > ra };
                if better {
                    r = i;
                    ra = rate.abs();
                    rlim = lim;
                }
            }
        }
        if range.is_finite() && (r == NONE || range <= rlim) {
            // Bound flip of the entering variable.
            let step = dir * range;
            for i in 0..self.m {
                let a = self.alpha_q[i];
                if a != 0.0 {
                    let j = self.head[i];
                    self.x[j] -= step * a;
                }
            }
            self.x[q] += step;
            self.status[q] = if dir > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower };
            return (Step::Continue, false);
        }
        let t = rlim;
        let p_var = self.head[r];
        let rate = -dir * self.alpha_q[r];
        for i in 0..self.m {
            let a = self.alpha_q[i];
            if a != 0.0 {
                let j = self.head[i];
                self.x[j] -= dir * t * a;
            }
        }
        self.x[q] += dir * t;
        let leaving_status = if rate < 0.0 {
            self.x[p_var] = self.lower[p_var];
            VarStatus::AtLower
        } else {
            self.x[p_var] = self.upper[p_var];
            VarStatus::AtUpper
        };

        self.compute_rho(r);
        self.compute_pivot_row();
        let arq = self.alpha_q[r];
        let theta_d = self.d[q] / arq;
        for idx in 0..self.row_touched.len() {
            let j = self.row_touched[idx];
            self.d[j] -= theta_d * self.alpha_row[j];
        }
        self.d[q] = 0.0;
        self.d[p_var] = -theta_d;
        self.swap_basis(r, q, leaving_status);
        // Entering reduced cost 0 for the new basic variable.
        (Step::Continue, t <= 1e-12)
    }

    fn primal_phase(&mut self) -> LpStatus {
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return LpStatus::IterationLimit;
            }
            if self.lu.num_updates() >= self.opts.refactor_every {
                self.refresh();
            }
            let bland = degenerate_run > 50;
            match self.primal_iteration(bland) {
                (Step::Done, _) => return LpStatus::Optimal,
                (Step::Unbounded, _) => return LpStatus::Unbounded,
                (Step::Infeasible, _) => unreachable!(),
                (Step::Continue, degenerate) => {
                    self.iterations += 1;
                    degenerate_run = if degenerate { degenerate_run + 1 } else { 0 };
                }
            }
        }
    }

    /// Solves the LP from the current basis.
    pub fn solve(&mut self) -> LpStatus {
        self.iterations = 0;
        let status = self.solve_inner();
        self.total_iterations += self.iterations;
        status
    }

    fn solve_inner(&mut self) -> LpStatus {
        if !self.factor_valid {
            self.refactor();
        }
        self.place_nonbasic();
        self.work_cost.clone_from(&self.cost);
        self.compute_primal();
        self.compute_duals();
        self.make_dual_feasible();
        let mut perturb = self.opts.perturb;
        for _round in 0..6 {
            if perturb {
                self.perturb_costs();
            }
            self.compute_primal();
            match self.dual_phase() {
                LpStatus::Optimal => {}
                other => return other,
            }
            // Remove perturbation and shifts, then clean up with primal simplex.
            self.work_cost.clone_from(&self.cost);
            self.refresh();
            if self.max_primal_infeasibility() > 0.0 {
                perturb = false;
                self.make_dual_feasible();
                continue;
            }
            if self.max_dual_infeasibility() > self.opts.dual_tol {
                match self.primal_phase() {
                    LpStatus::Optimal => {}
                    other => return other,
                }
                self.refresh();
            }
            let pinf = self.max_primal_infeasibility();
            let dinf = self.max_dual_infeasibility();
            if pinf == 0.0 && dinf <= self.opts.dual_tol {
                return LpStatus::Optimal;
            }
            perturb = false;
            if self.make_dual_feasible() {
                self.compute_primal();
            }
        }
        log::warn!("simplex did not settle after repeated cleanup rounds");
        LpStatus::Optimal
    }
}
