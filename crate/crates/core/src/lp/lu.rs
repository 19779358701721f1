//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Columns are factored left-looking in a fixed order (sparsest first) with
//! threshold partial pivoting. A factorization represents `B Q = L U` where
//! `Q` maps factor steps to basis positions.

use alloc::vec;
use alloc::vec::Vec;

const PIVOT_THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

pub(crate) struct SparseCol<'a> {
    pub rows: &'a [usize],
    pub vals: &'a [f64],
}

#[derive(Debug, Default)]
pub(crate) struct Factorization {
    m: usize,
    /// Row eliminated at step k.
    pivot_row: Vec<usize>,
    /// Basis position factored at step k.
    step_pos: Vec<usize>,
    /// Below-pivot multipliers of L at step k.
    lower: Vec<Vec<(usize, f64)>>,
    /// Strictly-upper part of U, column k, indexed by earlier steps.
    upper: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
    etas: Vec<Eta>,
}

#[derive(Debug)]
struct Eta {
    pos: usize,
    pivot: f64,
    others: Vec<(usize, f64)>,
}

/// Outcome of factorizing a candidate basis.
pub(crate) struct FactorOutcome {
    pub factor: Factorization,
    /// Basis positions whose column had to be replaced by a slack.
    pub rejected: Vec<usize>,
    /// Row whose slack replaced each rejected position, same order.
    pub replacement_rows: Vec<usize>,
}

impl Factorization {
    /// Factorizes the `m` columns given per basis position. Columns that turn
    /// out linearly dependent are swapped for unit columns of unpivoted rows;
    /// the caller learns which via [`FactorOutcome`].
    pub fn factorize(m: usize, cols: &[SparseCol<'_>]) -> FactorOutcome {
        debug_assert_eq!(cols.len(), m);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (cols[p].rows.len(), p));

        let mut f = Factorization {
            m,
            pivot_row: Vec::with_capacity(m),
            step_pos: Vec::with_capacity(m),
            lower: Vec::with_capacity(m),
            upper: Vec::with_capacity(m),
            diag: Vec::with_capacity(m),
            etas: Vec::new(),
        };
        let mut row_step = vec![usize::MAX; m];
        let mut work = vec![0.0f64; m];
        let mut touched: Vec<usize> = Vec::new();
        let mut in_touched = vec![false; m];
        let mut rejected = Vec::new();

        for &pos in &order {
            let col = &cols[pos];
            for (&r, &v) in col.rows.iter().zip(col.vals) {
                if !in_touched[r] {
                    in_touched[r] = true;
                    touched.push(r);
                }
                work[r] += v;
            }
            let mut ucol = Vec::new();
            for k in 0..f.pivot_row.len() {
                let xr = work[f.pivot_row[k]];
                if xr == 0.0 {
                    continue;
                }
                ucol.push((k, xr));
                for &(i, l) in &f.lower[k] {
                    if !in_touched[i] {
                        in_touched[i] = true;
                        touched.push(i);
                    }
                    work[i] -= xr * l;
                }
            }
            let mut best = 0.0f64;
            for &r in &touched {
                if row_step[r] == usize::MAX {
                    best = best.max(work[r].abs());
                }
            }
            if best <= SINGULAR_TOL {
                rejected.push(pos);
            } else {
                // Among rows passing the threshold pick the largest entry,
                // lowest row index on ties.
                let mut prow = usize::MAX;
                let mut pval = 0.0f64;
                for &r in &touched {
                    if row_step[r] != usize::MAX {
                        continue;
                    }
                    let a = work[r].abs();
                    if a >= PIVOT_THRESHOLD * best && (a > pval || (a == pval && r < prow)) {
                        prow = r;
                        pval = a;
                    }
                }
                let piv = work[prow];
                let mut lcol = Vec::new();
                for &r in &touched {
                    if row_step[r] == usize::MAX && r != prow {
                        let l = work[r] / piv;
                        if l.abs() > DROP_TOL {
                            lcol.push((r, l));
                        }
                    }
                }
                row_step[prow] = f.pivot_row.len();
                f.pivot_row.push(prow);
                f.step_pos.push(pos);
                f.lower.push(lcol);
                f.upper.push(ucol);
                f.diag.push(piv);
            }
            for &r in &touched {
                work[r] = 0.0;
                in_touched[r] = false;
            }
            touched.clear();
        }

        let mut replacement_rows = Vec::new();
        if !rejected.is_empty() {
            let free_rows: Vec<usize> = (0..m).filter(|&r| row_step[r] == usize::MAX).collect();
            for (&pos, &r) in rejected.iter().zip(&free_rows) {
                replacement_rows.push(r);
                // A unit column on an unpivoted row is untouched by earlier L
                // columns and pivots on itself.
                row_step[r] = f.pivot_row.len();
                f.pivot_row.push(r);
                f.step_pos.push(pos);
                f.lower.push(Vec::new());
                f.upper.push(Vec::new());
                f.diag.push(1.0);
            }
        }
        FactorOutcome {
            factor: f,
            rejected,
            replacement_rows,
        }
    }

    pub fn num_etas(&self) -> usize {
        self.etas.len()
    }

    /// Overwrites `rhs` (indexed by row) with `B⁻¹ rhs` (indexed by basis
    /// position).
    pub fn ftran(&self, rhs: &mut [f64], scratch: &mut [f64]) {
        let m = self.m;
        // L w = rhs, w indexed by step.
        for k in 0..m {
            let wk = rhs[self.pivot_row[k]];
            scratch[k] = wk;
            if wk != 0.0 {
                for &(i, l) in &self.lower[k] {
                    rhs[i] -= wk * l;
                }
            }
        }
        // U z = w, column oriented.
        for k in (0..m).rev() {
            let zk = scratch[k] / self.diag[k];
            scratch[k] = zk;
            if zk != 0.0 {
                for &(j, u) in &self.upper[k] {
                    scratch[j] -= u * zk;
                }
            }
        }
        for k in 0..m {
            rhs[self.step_pos[k]] = scratch[k];
        }
        for eta in &self.etas {
            let yp = rhs[eta.pos] / eta.pivot;
            rhs[eta.pos] = yp;
            if yp != 0.0 {
                for &(i, d) in &eta.others {
                    rhs[i] -= d * yp;
                }
            }
        }
    }

    /// Overwrites `rhs` (indexed by basis position) with `B⁻ᵀ rhs` (indexed
    /// by row).
    pub fn btran(&self, rhs: &mut [f64], scratch: &mut [f64]) {
        let m = self.m;
        for eta in self.etas.iter().rev() {
            let mut v = rhs[eta.pos];
            for &(i, d) in &eta.others {
                v -= d * rhs[i];
            }
            rhs[eta.pos] = v / eta.pivot;
        }
        // Uᵀ v = c (c by step).
        for k in 0..m {
            let mut v = rhs[self.step_pos[k]];
            for &(j, u) in &self.upper[k] {
                v -= u * scratch[j];
            }
            scratch[k] = v / self.diag[k];
        }
        // Lᵀ y = v, descending steps.
        for k in (0..m).rev() {
            let mut v = scratch[k];
            for &(i, l) in &self.lower[k] {
                v -= l * rhs[i];
            }
            rhs[self.pivot_row[k]] = v;
        }
        // Rows are all written exactly once in the loop above; entries read
        // from `rhs` inside it belong to rows pivoted at later steps.
    }

    /// Records the replacement of the column at basis position `pos` by a
    /// column whose FTRAN image is `alpha` (indexed by position).
    pub fn push_eta(&mut self, pos: usize, alpha: &[f64]) {
        let others = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != pos && a.abs() > DROP_TOL)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            others,
        });
    }
}
