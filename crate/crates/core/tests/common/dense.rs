//! Dense two-phase tableau simplex with Bland's rule. Slow, simple, and
//! independent of the sparse solver; used only as a test oracle.
#![allow(dead_code)]

use cellfree_milp::{Model, ObjectiveSense, Sense};

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Optimal(f64, Vec<f64>),
    Infeasible,
    Unbounded,
}

const EPS: f64 = 1e-9;

/// Original variable j = offset + sum(coef * standard column).
struct Map {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

/// Solves the LP relaxation of `model`, with optional per-variable bound
/// overrides.
pub fn solve_lp(model: &Model, overrides: &[(usize, f64, f64)]) -> Outcome {
    let n = model.num_vars();
    let mut lower: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();
    for &(j, l, u) in overrides {
        lower[j] = l;
        upper[j] = u;
    }
    let sign = if model.sense == ObjectiveSense::Maximize { -1.0 } else { 1.0 };

    // Standard form columns.
    let mut maps = Vec::with_capacity(n);
    let mut ns = 0usize;
    let mut extra_rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for j in 0..n {
        if lower[j] > upper[j] {
            return Outcome::Infeasible;
        }
        if lower[j].is_finite() {
            maps.push(Map { offset: lower[j], cols: vec![(ns, 1.0)] });
            if upper[j].is_finite() {
                extra_rows.push((vec![(ns, 1.0)], upper[j] - lower[j]));
            }
            ns += 1;
        } else if upper[j].is_finite() {
            maps.push(Map { offset: upper[j], cols: vec![(ns, -1.0)] });
            ns += 1;
        } else {
            maps.push(Map { offset: 0.0, cols: vec![(ns, 1.0), (ns + 1, -1.0)] });
            ns += 2;
        }
    }
    // Rows as (dense coefs over standard columns, sense, rhs).
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    for r in model.rows() {
        let mut a = vec![0.0; ns];
        let mut rhs = r.rhs;
        for &(v, c) in &r.terms {
            rhs -= c * maps[v.0].offset;
            for &(s, k) in &maps[v.0].cols {
                a[s] += c * k;
            }
        }
        rows.push((a, r.sense, rhs));
    }
    for (terms, rhs) in extra_rows {
        let mut a = vec![0.0; ns];
        for (s, k) in terms {
            a[s] = k;
        }
        rows.push((a, Sense::Le, rhs));
    }
    let mut cost = vec![0.0; ns];
    let mut cost0 = 0.0;
    for (j, v) in model.vars().iter().enumerate() {
        cost0 += sign * v.objective * maps[j].offset;
        for &(s, k) in &maps[j].cols {
            cost[s] += sign * v.objective * k;
        }
    }

    // Slack/surplus columns, then artificials for every row.
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let width = ns + n_slack + m;
    let mut t = vec![vec![0.0; width + 1]; m];
    let mut basis = vec![0usize; m];
    let mut sc = ns;
    for (i, (a, sense, rhs)) in rows.iter().enumerate() {
        t[i][..ns].copy_from_slice(a);
        match sense {
            Sense::Le => {
                t[i][sc] = 1.0;
                sc += 1;
            }
            Sense::Ge => {
                t[i][sc] = -1.0;
                sc += 1;
            }
            Sense::Eq => {}
        }
        t[i][width] = *rhs;
        if *rhs < 0.0 {
            for v in t[i].iter_mut() {
                *v = -*v;
            }
        }
        t[i][ns + n_slack + i] = 1.0;
        basis[i] = ns + n_slack + i;
    }
    let art_start = ns + n_slack;

    let pivot = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, r: usize, c: usize| {
        let p = t[r][c];
        for v in t[r].iter_mut() {
            *v /= p;
        }
        for i in 0..t.len() {
            if i != r && t[i][c].abs() > 0.0 {
                let f = t[i][c];
                let (src, dst) = if i < r {
                    let (a, b) = t.split_at_mut(r);
                    (&b[0], &mut a[i])
                } else {
                    let (a, b) = t.split_at_mut(i);
                    (&a[r], &mut b[0])
                };
                for k in 0..dst.len() {
                    dst[k] -= f * src[k];
                }
            }
        }
        basis[r] = c;
    };

    // Runs Bland's rule on cost vector `c` over allowed columns [0, limit).
    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, c: &[f64], limit: usize| -> bool {
        loop {
            let mut entering = None;
            for j in 0..limit {
                if basis.contains(&j) {
                    continue;
                }
                let red = c[j] - (0..m).map(|i| c[basis[i]] * t[i][j]).sum::<f64>();
                if red < -EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(q) = entering else { return true };
            let mut leave: Option<(f64, usize, usize)> = None;
            for i in 0..m {
                if t[i][q] > EPS {
                    let ratio = t[i][width] / t[i][q];
                    let better = match leave {
                        None => true,
                        Some((br, bi, _)) => ratio < br - 1e-12 || (ratio <= br + 1e-12 && basis[i] < bi),
                    };
                    if better {
                        leave = Some((ratio, basis[i], i));
                    }
                }
            }
            let Some((_, _, r)) = leave else { return false };
            pivot(t, basis, r, q);
        }
    };

    let mut c1 = vec![0.0; width];
    for v in c1.iter_mut().skip(art_start) {
        *v = 1.0;
    }
    run(&mut t, &mut basis, &c1, width);
    let infeas: f64 = (0..m).filter(|&i| basis[i] >= art_start).map(|i| t[i][width]).sum();
    if infeas > 1e-7 {
        return Outcome::Infeasible;
    }
    // Drive zero-level artificials out where possible.
    for i in 0..m {
        if basis[i] >= art_start {
            if let Some(j) = (0..art_start).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }
    let mut c2 = vec![0.0; width];
    c2[..ns].copy_from_slice(&cost);
    if !run(&mut t, &mut basis, &c2, art_start) {
        return Outcome::Unbounded;
    }
    let mut xs = vec![0.0; width];
    for i in 0..m {
        xs[basis[i]] = t[i][width];
    }
    let obj = cost0 + (0..ns).map(|j| cost[j] * xs[j]).sum::<f64>();
    let x: Vec<f64> = maps.iter().map(|mp| mp.offset + mp.cols.iter().map(|&(s, k)| k * xs[s]).sum::<f64>()).collect();
    Outcome::Optimal(sign * obj, x)
}

/// Enumerates every 0/1 assignment of the binaries and solves the remaining
/// LP; returns the best objective in the model's sense, or None.
pub fn brute_force(model: &Model) -> Option<f64> {
    let bins: Vec<usize> = model.binaries().map(|v| v.0).collect();
    assert!(bins.len() <= 16, "enumeration too large");
    let mut best: Option<f64> = None;
    let max = model.sense == ObjectiveSense::Maximize;
    for mask in 0u32..(1 << bins.len()) {
        let fix: Vec<(usize, f64, f64)> = bins
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                let v = ((mask >> i) & 1) as f64;
                (j, v, v)
            })
            .collect();
        if fix.iter().any(|&(j, v, _)| v < model.vars()[j].lower || v > model.vars()[j].upper) {
            continue;
        }
        if let Outcome::Optimal(v, _) = solve_lp(model, &fix) {
            best = Some(match best {
                None => v,
                Some(b) if max => b.max(v),
                Some(b) => b.min(v),
            });
        }
    }
    best
}
