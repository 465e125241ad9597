//! Incremental reduced row echelon form for coefficient vectors.

use crate::arith::numtheory::lcm;
use crate::arith::{CycloElem, Matrix};

/// Rows in reduced echelon form: each row has a 1 at its pivot and every
/// other row is 0 there. Rows are kept sorted by pivot.
#[derive(Clone, Debug)]
pub struct RowEchelon {
    len: usize,
    order: u64,
    rows: Vec<Vec<CycloElem>>,
    pivots: Vec<usize>,
}

impl RowEchelon {
    pub fn new(len: usize) -> RowEchelon {
        RowEchelon {
            len,
            order: 1,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn rows(&self) -> &[Vec<CycloElem>] {
        &self.rows
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    fn lift_order(&mut self, m: u64) {
        let n = lcm(self.order, m);
        if n != self.order {
            for r in self.rows.iter_mut() {
                for x in r.iter_mut() {
                    *x = x.promote(n);
                }
            }
            self.order = n;
        }
    }

    fn prepare(&mut self, v: &[CycloElem]) -> Vec<CycloElem> {
        assert_eq!(v.len(), self.len, "vector length must match the echelon width");
        let m = v.iter().fold(1, |acc, x| lcm(acc, x.order()));
        self.lift_order(m);
        v.iter().map(|x| x.promote(self.order)).collect()
    }

    /// Subtract the span from `v`; returns the coordinates used and the residual.
    pub fn reduce(&mut self, v: &[CycloElem]) -> (Vec<CycloElem>, Vec<CycloElem>) {
        let mut w = self.prepare(v);
        let mut coords = Vec::with_capacity(self.rows.len());
        for (r, &p) in self.rows.iter().zip(&self.pivots) {
            let c = w[p].clone();
            if !c.is_zero() {
                for (x, y) in w.iter_mut().zip(r).skip(p) {
                    if !y.is_zero() {
                        *x = x.sub(&y.mul(&c));
                    }
                }
            }
            coords.push(c);
        }
        (coords, w)
    }

    /// Add `v` to the span; false if it was already there.
    pub fn insert(&mut self, v: &[CycloElem]) -> bool {
        let (_, mut w) = self.reduce(v);
        let Some(p) = w.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = w[p].inv();
        for x in w.iter_mut().skip(p) {
            if !x.is_zero() {
                *x = x.mul(&inv);
            }
        }
        for r in self.rows.iter_mut() {
            let c = r[p].clone();
            if !c.is_zero() {
                for (x, y) in r.iter_mut().zip(&w).skip(p) {
                    if !y.is_zero() {
                        *x = x.sub(&y.mul(&c));
                    }
                }
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(at, p);
        self.rows.insert(at, w);
        true
    }
}

/// Basis of {c : Σ c_i rows[i] ∈ span(tri)}, where each row of `tri` starts
/// at its listed exponent and the exponents increase.
pub fn kernel_modulo(rows: &[Vec<CycloElem>], tri: &[(usize, Vec<CycloElem>)]) -> Vec<Vec<CycloElem>> {
    if rows.is_empty() {
        return Vec::new();
    }
    let residuals: Vec<Vec<CycloElem>> = rows
        .iter()
        .map(|r| {
            let mut w = r.clone();
            for (p, t) in tri {
                if w[*p].is_zero() {
                    continue;
                }
                let c = w[*p].div(&t[*p]);
                for (x, y) in w.iter_mut().zip(t).skip(*p) {
                    if !y.is_zero() {
                        *x = x.sub(&y.mul(&c));
                    }
                }
            }
            w
        })
        .collect();
    Matrix::from_rows(residuals).left_kernel().into_rows()
}
