//! Sparse LU factorization of simplex basis matrices.
//!
//! The factorization is a right-looking Gaussian elimination with Markowitz
//! pivot selection (column search, threshold partial pivoting). Basis changes
//! between refactorizations are handled with a product-form eta file.
//!
//! Vectors come in two index spaces: *row space* (constraint rows) and
//! *position space* (basis positions, i.e. the columns of `B`). `ftran` maps
//! row space to position space (`x = B^-1 b`); `btran` maps position space to
//! row space (`y = B^-T e`).

const NONE: usize = usize::MAX;
const PIVOT_THRESHOLD: f64 = 0.1;
const DROP_TOL: f64 = 1e-14;
const SINGULAR_TOL: f64 = 1e-11;
const MARKOWITZ_SEARCH: usize = 4;

/// Returned when the basis matrix is (numerically) singular.
#[derive(Debug, Clone)]
pub(crate) struct Singular {
    /// Basis positions whose columns could not be pivoted.
    pub positions: Vec<usize>,
    /// Rows left without a pivot; as many as `positions`.
    pub rows: Vec<usize>,
}

/// Doubly linked lists of indices bucketed by count.
struct CountBuckets {
    head: Vec<usize>,
    next: Vec<usize>,
    prev: Vec<usize>,
    count: Vec<usize>,
}

impl CountBuckets {
    fn new(n: usize, max_count: usize) -> Self {
        CountBuckets { head: vec![NONE; max_count + 2], next: vec![NONE; n], prev: vec![NONE; n], count: vec![0; n] }
    }

    fn insert(&mut self, i: usize, c: usize) {
        let c = c.min(self.head.len() - 1);
        self.count[i] = c;
        self.prev[i] = NONE;
        self.next[i] = self.head[c];
        if self.head[c] != NONE {
            self.prev[self.head[c]] = i;
        }
        self.head[c] = i;
    }

    fn remove(&mut self, i: usize) {
        let c = self.count[i];
        if self.prev[i] != NONE {
            self.next[self.prev[i]] = self.next[i];
        } else {
            self.head[c] = self.next[i];
        }
        if self.next[i] != NONE {
            self.prev[self.next[i]] = self.prev[i];
        }
        self.next[i] = NONE;
        self.prev[i] = NONE;
    }

    fn update(&mut self, i: usize, c: usize) {
        self.remove(i);
        self.insert(i, c);
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct LuFactors {
    m: usize,
    prow: Vec<usize>,
    pcol: Vec<usize>,
    l_start: Vec<usize>,
    l_row: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_col: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
    // Transposed copies so both triangular solves can skip zero entries:
    // U by columns (per pivot step, the row-space targets above it) and L by
    // rows (per pivot step, the row-space targets of its multipliers).
    ut_start: Vec<usize>,
    ut_row: Vec<usize>,
    ut_val: Vec<f64>,
    lt_start: Vec<usize>,
    lt_row: Vec<usize>,
    lt_val: Vec<f64>,
    eta_pos: Vec<usize>,
    eta_pivot: Vec<f64>,
    eta_start: Vec<usize>,
    eta_idx: Vec<usize>,
    eta_val: Vec<f64>,
}

impl LuFactors {
    /// Factorizes the `m x m` matrix whose column `j` is `column(j)` given as
    /// `(row indices, values)`.
    pub fn factorize<'a, F>(m: usize, column: F) -> Result<LuFactors, Singular>
    where
        F: Fn(usize) -> (&'a [usize], &'a [f64]),
    {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        for j in 0..m {
            let (idx, val) = column(j);
            for (&i, &v) in idx.iter().zip(val) {
                if v.abs() > DROP_TOL {
                    rows[i].push((j, v));
                    cols[j].push(i);
                }
            }
        }

        let mut col_buckets = CountBuckets::new(m, m);
        let mut row_count = vec![0usize; m];
        for j in 0..m {
            col_buckets.insert(j, cols[j].len());
        }
        for i in 0..m {
            row_count[i] = rows[i].len();
        }
        let mut col_done = vec![false; m];
        let mut row_done = vec![false; m];
        let mut mark = vec![NONE; m];

        let mut f = LuFactors {
            m,
            prow: Vec::with_capacity(m),
            pcol: Vec::with_capacity(m),
            l_start: vec![0],
            u_start: vec![0],
            eta_start: vec![0],
            ..Default::default()
        };
        let mut singular_cols = Vec::new();

        let find =
            |row: &Vec<(usize, f64)>, c: usize| -> f64 { row.iter().find(|e| e.0 == c).map(|e| e.1).unwrap_or(0.0) };

        for _step in 0..m {
            // Columns that lost all entries are structurally dependent.
            while col_buckets.head[0] != NONE {
                let c = col_buckets.head[0];
                col_buckets.remove(c);
                col_done[c] = true;
                singular_cols.push(c);
            }
            // Markowitz search over the sparsest columns.
            let mut best: Option<(usize, usize, usize, f64)> = None; // (cost, row, col, |v|)
            let mut searched = 0usize;
            'search: for cnt in 1..col_buckets.head.len() {
                let mut c = col_buckets.head[cnt];
                while c != NONE {
                    let next = col_buckets.next[c];
                    let colmax = cols[c].iter().map(|&r| find(&rows[r], c).abs()).fold(0.0, f64::max);
                    if colmax < SINGULAR_TOL {
                        c = next;
                        continue;
                    }
                    for &r in &cols[c] {
                        let v = find(&rows[r], c).abs();
                        if v >= PIVOT_THRESHOLD * colmax {
                            let cost = (row_count[r] - 1) * (cnt - 1);
                            let better = match best {
                                None => true,
                                Some((bc, _, _, bv)) => cost < bc || (cost == bc && v > bv),
                            };
                            if better {
                                best = Some((cost, r, c, v));
                            }
                        }
                    }
                    searched += 1;
                    if let Some((bc, ..)) = best {
                        if bc == 0 || searched >= MARKOWITZ_SEARCH {
                            break 'search;
                        }
                    }
                    c = next;
                }
                if let Some((bc, ..)) = best {
                    if bc <= (cnt - 1) * (cnt - 1) {
                        break;
                    }
                }
            }
            let Some((_, p, c, _)) = best else {
                // Remaining active columns are numerically zero.
                for j in 0..m {
                    if !col_done[j] {
                        col_buckets.remove(j);
                        col_done[j] = true;
                        singular_cols.push(j);
                    }
                }
                break;
            };

            let pv = find(&rows[p], c);
            col_buckets.remove(c);
            col_done[c] = true;
            row_done[p] = true;

            // Pivot row becomes a row of U.
            let prow_entries = std::mem::take(&mut rows[p]);
            for &(j, v) in &prow_entries {
                if let Some(pos) = cols[j].iter().position(|&r| r == p) {
                    cols[j].swap_remove(pos);
                }
                if j != c {
                    f.u_col.push(j);
                    f.u_val.push(v);
                }
            }
            f.u_diag.push(pv);
            f.u_start.push(f.u_col.len());

            // Eliminate column c from the remaining rows.
            let elim_rows = std::mem::take(&mut cols[c]);
            for &r in &elim_rows {
                let row = &mut rows[r];
                let pos = row.iter().position(|e| e.0 == c).expect("pattern mismatch");
                let a = row.swap_remove(pos).1;
                let mult = a / pv;
                f.l_row.push(r);
                f.l_val.push(mult);
                for (k, e) in row.iter().enumerate() {
                    mark[e.0] = k;
                }
                for &(j, v) in &prow_entries {
                    if j == c {
                        continue;
                    }
                    if mark[j] != NONE {
                        row[mark[j]].1 -= mult * v;
                    } else {
                        mark[j] = row.len();
                        row.push((j, -mult * v));
                        cols[j].push(r);
                    }
                }
                for e in row.iter() {
                    mark[e.0] = NONE;
                }
                // Drop cancellations.
                let mut k = 0;
                while k < row.len() {
                    if row[k].1.abs() <= DROP_TOL {
                        let j = row[k].0;
                        if let Some(pos) = cols[j].iter().position(|&x| x == r) {
                            cols[j].swap_remove(pos);
                        }
                        row.swap_remove(k);
                    } else {
                        k += 1;
                    }
                }
                row_count[r] = row.len();
            }
            f.l_start.push(f.l_row.len());
            for &(j, _) in &prow_entries {
                if !col_done[j] {
                    col_buckets.update(j, cols[j].len());
                }
            }
            f.prow.push(p);
            f.pcol.push(c);
        }

        if !singular_cols.is_empty() {
            let rows_left: Vec<usize> = (0..m).filter(|&i| !row_done[i]).collect();
            return Err(Singular { positions: singular_cols, rows: rows_left });
        }
        f.build_transposes();
        Ok(f)
    }

    fn build_transposes(&mut self) {
        let m = self.m;
        let mut step_of_col = vec![0usize; m];
        let mut step_of_row = vec![0usize; m];
        for k in 0..m {
            step_of_col[self.pcol[k]] = k;
            step_of_row[self.prow[k]] = k;
        }
        let (ut_start, ut_row, ut_val) =
            transpose(m, (0..m).flat_map(|k| (self.u_start[k]..self.u_start[k + 1]).map(move |t| (k, t))), |(k, t)| {
                (step_of_col[self.u_col[t]], self.prow[k], self.u_val[t])
            });
        let (lt_start, lt_row, lt_val) =
            transpose(m, (0..m).flat_map(|k| (self.l_start[k]..self.l_start[k + 1]).map(move |t| (k, t))), |(k, t)| {
                (step_of_row[self.l_row[t]], self.prow[k], self.l_val[t])
            });
        self.ut_start = ut_start;
        self.ut_row = ut_row;
        self.ut_val = ut_val;
        self.lt_start = lt_start;
        self.lt_row = lt_row;
        self.lt_val = lt_val;
    }

    pub fn num_updates(&self) -> usize {
        self.eta_pos.len()
    }

    pub fn eta_nonzeros(&self) -> usize {
        self.eta_idx.len()
    }

    pub fn factor_nonzeros(&self) -> usize {
        self.l_row.len() + self.u_col.len() + self.m
    }

    /// Solves `B x = b`. `b` (row space) is destroyed; `x` (position space) is overwritten.
    pub fn ftran(&self, b: &mut [f64], x: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            let v = b[self.prow[k]];
            if v != 0.0 {
                for t in self.l_start[k]..self.l_start[k + 1] {
                    b[self.l_row[t]] -= self.l_val[t] * v;
                }
            }
        }
        for k in (0..m).rev() {
            let v = b[self.prow[k]] / self.u_diag[k];
            x[self.pcol[k]] = v;
            if v != 0.0 {
                let (s, e) = (self.ut_start[k], self.ut_start[k + 1]);
                for (&r, &u) in self.ut_row[s..e].iter().zip(&self.ut_val[s..e]) {
                    b[r] -= u * v;
                }
            }
        }
        for e in 0..self.eta_pos.len() {
            let r = self.eta_pos[e];
            let xr = x[r] / self.eta_pivot[e];
            x[r] = xr;
            if xr != 0.0 {
                for t in self.eta_start[e]..self.eta_start[e + 1] {
                    x[self.eta_idx[t]] -= self.eta_val[t] * xr;
                }
            }
        }
    }

    /// Solves `B^T y = e`. `e` (position space) is destroyed; `y` (row space) is overwritten.
    pub fn btran(&self, e: &mut [f64], y: &mut [f64]) {
        let m = self.m;
        for k in (0..self.eta_pos.len()).rev() {
            let r = self.eta_pos[k];
            let mut v = e[r];
            for t in self.eta_start[k]..self.eta_start[k + 1] {
                v -= self.eta_val[t] * e[self.eta_idx[t]];
            }
            e[r] = v / self.eta_pivot[k];
        }
        for k in 0..m {
            let z = e[self.pcol[k]] / self.u_diag[k];
            y[self.prow[k]] = z;
            if z != 0.0 {
                for t in self.u_start[k]..self.u_start[k + 1] {
                    e[self.u_col[t]] -= self.u_val[t] * z;
                }
            }
        }
        for k in (0..m).rev() {
            let v = y[self.prow[k]];
            if v != 0.0 {
                let (s, e) = (self.lt_start[k], self.lt_start[k + 1]);
                for (&r, &l) in self.lt_row[s..e].iter().zip(&self.lt_val[s..e]) {
                    y[r] -= l * v;
                }
            }
        }
    }

    /// Records the replacement of basis position `r` by a column whose
    /// FTRAN image is `alpha` (position space).
    pub fn update(&mut self, r: usize, alpha: &[f64]) {
        self.eta_pos.push(r);
        self.eta_pivot.push(alpha[r]);
        for (i, &a) in alpha.iter().enumerate() {
            if i != r && a.abs() > DROP_TOL {
                self.eta_idx.push(i);
                self.eta_val.push(a);
            }
        }
        self.eta_start.push(self.eta_idx.len());
    }
}

/// Buckets `(key, target, value)` triples by key into CSR arrays.
fn transpose<I, F>(m: usize, items: I, entry: F) -> (Vec<usize>, Vec<usize>, Vec<f64>)
where
    I: Iterator + Clone,
    F: Fn(I::Item) -> (usize, usize, f64),
{
    let mut start = vec![0usize; m + 1];
    for it in items.clone() {
        start[entry(it).0 + 1] += 1;
    }
    for k in 0..m {
        start[k + 1] += start[k];
    }
    let mut fill = start.clone();
    let mut row = vec![0usize; start[m]];
    let mut val = vec![0f64; start[m]];
    for it in items {
        let (k, r, v) = entry(it);
        row[fill[k]] = r;
        val[fill[k]] = v;
        fill[k] += 1;
    }
    (start, row, val)
}
