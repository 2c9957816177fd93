//! Dense two-phase simplex with Bland's rule and primal/dual certificates.
//!
//! Problems have the form `min cᵀx` subject to rows `aᵢᵀx {≤, ≥, =} bᵢ` and
//! `x ≥ 0`. Sizes here are a few hundred rows and columns, where a dense
//! tableau is simplest and exact enough.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub rows: Vec<(Vec<T>, Relation, T)>,
}

impl<T: Real> LinearProgram<T> {
    pub fn new(objective: Vec<T>) -> Self {
        Self { objective, rows: Vec::new() }
    }

    pub fn push(&mut self, coeffs: Vec<T>, rel: Relation, rhs: T) {
        assert_eq!(coeffs.len(), self.objective.len());
        self.rows.push((coeffs, rel, rhs));
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }
}

/// Optimal solution with its dual certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution<T> {
    pub x: Vec<T>,
    pub objective: T,
    /// One multiplier per row: `≤` rows get `y ≤ 0`, `≥` rows `y ≥ 0`.
    pub duals: Vec<T>,
    pub dual_objective: T,
    pub duality_gap: T,
    pub primal_infeasibility: T,
    pub dual_infeasibility: T,
    pub pivots: usize,
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    obj: Vec<T>,
    basis: Vec<usize>,
    width: usize,
    pivots: usize,
}

impl<T: Real> Tableau<T> {
    fn rhs(&self, i: usize) -> T {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != T::zero() {
                for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = T::zero();
            }
        }
        let f = self.obj[c];
        if f != T::zero() {
            for (v, &pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.obj[c] = T::zero();
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn price(&mut self, cost: &[T]) {
        let mut obj: Vec<T> = cost.to_vec();
        obj.push(T::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != T::zero() {
                for (o, &v) in obj.iter_mut().zip(&self.rows[i]) {
                    *o -= cb * v;
                }
            }
        }
        self.obj = obj;
    }

    /// Runs simplex iterations on the current objective; `allowed(j)` filters entering columns.
    fn optimize(&mut self, allowed: impl Fn(usize) -> bool, tol: T, max_pivots: usize) -> Result<()> {
        loop {
            if self.pivots >= max_pivots {
                return Err(LabError::LinearProgram("pivot limit reached"));
            }
            let Some(c) = (0..self.width).find(|&j| allowed(j) && self.obj[j] < -tol) else {
                return Ok(());
            };
            let mut best: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > tol {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - tol || ((ratio - br).abs() <= tol && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return Err(LabError::LinearProgram("unbounded")),
            }
        }
    }
}

/// Solves `lp` to optimality, or reports infeasibility/unboundedness.
pub fn solve<T: Real>(lp: &LinearProgram<T>, max_pivots: usize) -> Result<LpSolution<T>> {
    let n = lp.n_vars();
    let m = lp.rows.len();
    let tol = T::tol_floor(1e-11);
    // column layout: structural | one slack or surplus per inequality | one artificial per row
    let n_slack = lp.rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let art0 = n + n_slack;
    let width = art0 + m;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut sign = Vec::with_capacity(m);
    let mut init_col = Vec::with_capacity(m);
    let mut slack = n;
    for (i, (a, rel, b)) in lp.rows.iter().enumerate() {
        let s = if *b < T::zero() { -T::one() } else { T::one() };
        let mut row = vec![T::zero(); width + 1];
        for j in 0..n {
            row[j] = s * a[j];
        }
        row[width] = s * *b;
        let rel = match (rel, s < T::zero()) {
            (Relation::Le, true) => Relation::Ge,
            (Relation::Ge, true) => Relation::Le,
            (r, _) => *r,
        };
        match rel {
            Relation::Le => {
                row[slack] = T::one();
                basis.push(slack);
                init_col.push(slack);
            }
            Relation::Ge => {
                row[slack] = -T::one();
                row[art0 + i] = T::one();
                basis.push(art0 + i);
                init_col.push(art0 + i);
            }
            Relation::Eq => {
                row[art0 + i] = T::one();
                basis.push(art0 + i);
                init_col.push(art0 + i);
            }
        }
        if rel != Relation::Eq {
            slack += 1;
        }
        sign.push(s);
        rows.push(row);
    }
    let mut tab = Tableau { rows, obj: Vec::new(), basis, width, pivots: 0 };

    let phase1: Vec<T> = (0..width).map(|j| if j >= art0 { T::one() } else { T::zero() }).collect();
    tab.price(&phase1);
    tab.optimize(|_| true, tol, max_pivots)?;
    let infeasibility: T = (0..tab.rows.len()).filter(|&i| tab.basis[i] >= art0).map(|i| tab.rhs(i)).sum();
    let scale = lp.rows.iter().fold(T::one(), |s, r| s.max(r.2.abs()));
    if infeasibility > T::tol_floor(1e-9) * scale {
        return Err(LabError::LinearProgram("infeasible"));
    }
    // drive remaining artificials out of the basis; rows that cannot pivot are redundant
    let mut redundant = vec![false; m];
    for i in 0..m {
        if tab.basis[i] >= art0 {
            if let Some(c) = (0..art0).find(|&j| tab.rows[i][j].abs() > tol) {
                tab.pivot(i, c);
            } else {
                redundant[i] = true;
            }
        }
    }

    let mut cost = vec![T::zero(); width];
    cost[..n].copy_from_slice(&lp.objective);
    tab.price(&cost);
    // a redundant row keeps its zero-valued artificial basic; it never blocks a ratio test
    tab.optimize(|j| j < art0, tol, max_pivots)?;

    let mut x = vec![T::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs(i);
        }
    }
    let duals: Vec<T> = (0..m)
        .map(|i| if redundant[i] { T::zero() } else { -sign[i] * tab.obj[init_col[i]] })
        .collect();
    let objective: T = lp.objective.iter().zip(&x).map(|(&c, &v)| c * v).sum();
    let dual_objective: T = lp.rows.iter().zip(&duals).map(|(r, &y)| r.2 * y).sum();

    let mut primal_infeasibility = x.iter().fold(T::zero(), |w, &v| w.max(-v));
    for (a, rel, b) in &lp.rows {
        let ax: T = a.iter().zip(&x).map(|(&u, &v)| u * v).sum();
        let viol = match rel {
            Relation::Le => ax - *b,
            Relation::Ge => *b - ax,
            Relation::Eq => (ax - *b).abs(),
        };
        primal_infeasibility = primal_infeasibility.max(viol);
    }
    let mut dual_infeasibility = T::zero();
    for j in 0..n {
        let aty: T = lp.rows.iter().zip(&duals).map(|(r, &y)| r.0[j] * y).sum();
        dual_infeasibility = dual_infeasibility.max(aty - lp.objective[j]);
    }
    for ((_, rel, _), &y) in lp.rows.iter().zip(&duals) {
        let wrong_sign = match rel {
            Relation::Le => y,
            Relation::Ge => -y,
            Relation::Eq => T::zero(),
        };
        dual_infeasibility = dual_infeasibility.max(wrong_sign);
    }
    Ok(LpSolution {
        x,
        objective,
        duals,
        dual_objective,
        duality_gap: (objective - dual_objective).abs(),
        primal_infeasibility,
        dual_infeasibility,
        pivots: tab.pivots,
    })
}
