//! Dense matrices over a [`Field`].
//!
//! Maps act on row vectors: the i-th row holds the image of the i-th basis
//! vector, and a vector `v` maps to `v·M`.

use std::fmt;

use super::{CycloElem, Field, Poly, Rational};

#[derive(Clone, PartialEq)]
pub struct Matrix<F> {
    rows: Vec<Vec<F>>,
    ncols: usize,
}

/// Result of a reduced row echelon computation.
#[derive(Clone, Debug)]
pub struct Echelon<F> {
    pub matrix: Matrix<F>,
    pub pivots: Vec<usize>,
}

impl<F: Field> Matrix<F> {
    pub fn zeros(nrows: usize, ncols: usize) -> Matrix<F> {
        Matrix {
            rows: vec![vec![F::zero(); ncols]; nrows],
            ncols,
        }
    }

    pub fn identity(n: usize) -> Matrix<F> {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.rows[i][i] = F::one();
        }
        m
    }

    pub fn scalar(n: usize, c: &F) -> Matrix<F> {
        Matrix::identity(n).scale(c)
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Matrix<F> {
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged matrix");
        Matrix { rows, ncols }
    }

    /// Empty-row matrix with a declared column count.
    pub fn with_cols(rows: Vec<Vec<F>>, ncols: usize) -> Matrix<F> {
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged matrix");
        Matrix { rows, ncols }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols
    }

    pub fn rows(&self) -> &[Vec<F>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.rows[i]
    }

    pub fn into_rows(self) -> Vec<Vec<F>> {
        self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.rows[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.rows[i][j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(F::is_zero))
    }

    pub fn transpose(&self) -> Matrix<F> {
        let rows = (0..self.ncols)
            .map(|j| self.rows.iter().map(|r| r[j].clone()).collect())
            .collect();
        Matrix::with_cols(rows, self.nrows())
    }

    pub fn add(&self, o: &Matrix<F>) -> Matrix<F> {
        assert_eq!((self.nrows(), self.ncols), (o.nrows(), o.ncols), "shape mismatch");
        let rows = self
            .rows
            .iter()
            .zip(&o.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.add(y)).collect())
            .collect();
        Matrix::with_cols(rows, self.ncols)
    }

    pub fn sub(&self, o: &Matrix<F>) -> Matrix<F> {
        self.add(&o.scale(&F::one().neg()))
    }

    pub fn scale(&self, c: &F) -> Matrix<F> {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|x| x.mul(c)).collect())
            .collect();
        Matrix::with_cols(rows, self.ncols)
    }

    pub fn mul(&self, o: &Matrix<F>) -> Matrix<F> {
        assert_eq!(self.ncols, o.nrows(), "shape mismatch in product");
        let rows = self.rows.iter().map(|r| o.vec_mul(r)).collect();
        Matrix::with_cols(rows, o.ncols)
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &[F]) -> Vec<F> {
        assert_eq!(v.len(), self.nrows(), "shape mismatch in vector product");
        let mut out = vec![F::zero(); self.ncols];
        for (x, row) in v.iter().zip(&self.rows) {
            if x.is_zero() {
                continue;
            }
            for (o, y) in out.iter_mut().zip(row) {
                o.add_mul_assign(x, y);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Matrix<F> {
        (0..e).fold(Matrix::identity(self.nrows()), |acc, _| acc.mul(self))
    }

    /// `f(M)` by Horner's rule.
    pub fn eval_poly(&self, f: &Poly<F>) -> Matrix<F> {
        let n = self.nrows();
        let mut acc = Matrix::zeros(n, n);
        for c in f.coeffs().iter().rev() {
            acc = acc.mul(self).add(&Matrix::scalar(n, c));
        }
        acc
    }

    pub fn commutes_with(&self, o: &Matrix<F>) -> bool {
        self.mul(o) == o.mul(self)
    }

    /// Reduced row echelon form.
    pub fn rref(&self) -> Echelon<F> {
        let mut rows = self.rows.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.ncols {
            if r == rows.len() {
                break;
            }
            let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
                continue;
            };
            rows.swap(r, p);
            let inv = rows[r][c].inv();
            for x in rows[r].iter_mut().skip(c) {
                *x = x.mul(&inv);
            }
            let pivot_row = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i == r || row[c].is_zero() {
                    continue;
                }
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pivot_row).skip(c) {
                    if !y.is_zero() {
                        *x = x.sub(&f.mul(y));
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        rows.truncate(pivots.len());
        Echelon {
            matrix: Matrix::with_cols(rows, self.ncols),
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().pivots.len()
    }

    /// Basis of `{v : v·M = 0}`, as the rows of the returned matrix.
    pub fn left_kernel(&self) -> Matrix<F> {
        self.transpose().right_kernel()
    }

    /// Basis of `{x : M·x = 0}` (column vectors), returned as rows.
    pub fn right_kernel(&self) -> Matrix<F> {
        let e = self.rref();
        let n = self.ncols;
        let free: Vec<usize> = (0..n).filter(|c| !e.pivots.contains(c)).collect();
        let rows = free
            .iter()
            .map(|&f| {
                let mut v = vec![F::zero(); n];
                v[f] = F::one();
                for (i, &pc) in e.pivots.iter().enumerate() {
                    v[pc] = e.matrix.rows[i][f].neg();
                }
                v
            })
            .collect();
        Matrix::with_cols(rows, n)
    }

    /// Some `x` with `x·M = b`, if one exists.
    pub fn solve_left(&self, b: &[F]) -> Option<Vec<F>> {
        assert_eq!(b.len(), self.ncols, "shape mismatch in solve");
        // Solve M^T x = b via the augmented system.
        let mt = self.transpose();
        let n = mt.ncols();
        let rows: Vec<Vec<F>> = mt
            .rows
            .iter()
            .zip(b)
            .map(|(r, bi)| {
                let mut r = r.clone();
                r.push(bi.clone());
                r
            })
            .collect();
        let e = Matrix::with_cols(rows, n + 1).rref();
        if e.pivots.last() == Some(&n) {
            return None;
        }
        let mut x = vec![F::zero(); n];
        for (i, &pc) in e.pivots.iter().enumerate() {
            x[pc] = e.matrix.rows[i][n].clone();
        }
        Some(x)
    }

    pub fn det(&self) -> F {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.nrows();
        let mut rows = self.rows.clone();
        let mut det = F::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !rows[i][c].is_zero()) else {
                return F::zero();
            };
            if p != c {
                rows.swap(p, c);
                det = det.neg();
            }
            det = det.mul(&rows[c][c]);
            let inv = rows[c][c].inv();
            let pivot_row = rows[c].clone();
            for row in rows.iter_mut().skip(c + 1) {
                if row[c].is_zero() {
                    continue;
                }
                let f = row[c].mul(&inv);
                for (x, y) in row.iter_mut().zip(&pivot_row).skip(c) {
                    *x = x.sub(&f.mul(y));
                }
            }
        }
        det
    }

    /// `det(T·I − M)` via reduction to upper Hessenberg form.
    pub fn charpoly(&self) -> Poly<F> {
        assert!(self.is_square(), "characteristic polynomial of a non-square matrix");
        let n = self.nrows();
        let mut h = self.rows.clone();
        // similarity transform to upper Hessenberg form
        for c in 0..n.saturating_sub(2) {
            let Some(p) = (c + 1..n).find(|&i| !h[i][c].is_zero()) else {
                continue;
            };
            if p != c + 1 {
                h.swap(p, c + 1);
                for row in h.iter_mut() {
                    row.swap(p, c + 1);
                }
            }
            let inv = h[c + 1][c].inv();
            for i in c + 2..n {
                if h[i][c].is_zero() {
                    continue;
                }
                let f = h[i][c].mul(&inv);
                // row_i -= f row_{c+1}; col_{c+1} += f col_i
                let src = h[c + 1].clone();
                for (x, y) in h[i].iter_mut().zip(&src) {
                    *x = x.sub(&f.mul(y));
                }
                for row in h.iter_mut() {
                    let t = row[i].mul(&f);
                    row[c + 1] = row[c + 1].add(&t);
                }
            }
        }
        // recurrence on leading principal minors
        let mut polys: Vec<Poly<F>> = vec![Poly::one()];
        for k in 0..n {
            let x_minus = Poly::new(vec![h[k][k].neg(), F::one()]);
            let mut pk = x_minus.mul(&polys[k]);
            let mut prod = F::one();
            for i in (0..k).rev() {
                prod = prod.mul(&h[i + 1][i]);
                if prod.is_zero() {
                    break;
                }
                let c = prod.mul(&h[i][k]);
                pk = pk.sub(&polys[i].scale(&c));
            }
            polys.push(pk);
        }
        polys.pop().unwrap()
    }

    /// `det(1 − M·T)`, constant term 1.
    pub fn fredholm(&self) -> Poly<F> {
        let cp = self.charpoly();
        let n = self.nrows();
        // reverse of det(T − M) padded to degree n
        let mut c: Vec<F> = (0..=n).map(|i| cp.coeff(i)).collect();
        c.reverse();
        Poly::new(c)
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Matrix<G> {
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(&f).collect())
            .collect();
        Matrix::with_cols(rows, self.ncols)
    }

    /// Rows `idx` of the matrix.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix<F> {
        Matrix::with_cols(idx.iter().map(|&i| self.rows[i].clone()).collect(), self.ncols)
    }
}

impl Matrix<CycloElem> {
    /// Largest cyclotomic order among the entries (lcm).
    pub fn field_order(&self) -> u64 {
        self.rows
            .iter()
            .flatten()
            .fold(1, |acc, x| super::numtheory::lcm(acc, x.order()))
    }

    /// The Q-linear map on an `n·φ(m)`-dimensional space obtained by viewing
    /// Q(ζ_m)^n as a Q-vector space.
    pub fn restrict_scalars(&self, m: u64) -> Matrix<Rational> {
        let phi = super::numtheory::euler_phi(m) as usize;
        let n = self.nrows();
        let nc = self.ncols();
        let mut out = Matrix::<Rational>::zeros(n * phi, nc * phi);
        for i in 0..n {
            for j in 0..nc {
                let block = self.rows[i][j].promote(m).mult_matrix();
                for (a, brow) in block.iter().enumerate() {
                    for (b, x) in brow.iter().enumerate() {
                        out.rows[i * phi + a][j * phi + b] = x.clone();
                    }
                }
            }
        }
        out
    }

    pub fn to_rational(&self) -> Option<Matrix<Rational>> {
        let rows: Option<Vec<Vec<Rational>>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(CycloElem::as_rational).collect())
            .collect();
        rows.map(|r| Matrix::with_cols(r, self.ncols))
    }
}

/// Characteristic polynomial over Q of a cyclotomic matrix viewed as a
/// Q-linear map. Computed as the norm of the charpoly over the field, which
/// agrees with the charpoly of [`Matrix::restrict_scalars`].
pub fn restrict_scalars_charpoly(m: &Matrix<CycloElem>) -> Poly<Rational> {
    let order = m.field_order();
    if let Some(r) = m.to_rational() {
        let cp = r.charpoly();
        let phi = super::numtheory::euler_phi(order) as u32;
        return cp.pow(phi);
    }
    m.charpoly().norm_to_q(order)
}

impl<F: fmt::Debug> fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}x{}]", self.rows.len(), self.ncols)?;
        for r in &self.rows {
            writeln!(f, "  {r:?}")?;
        }
        Ok(())
    }
}

impl<F: Field + serde::Serialize> serde::Serialize for Matrix<F> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rows.serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;
    use proptest::prelude::*;

    fn mq(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Rational::from_int(x)).collect())
                .collect(),
        )
    }

    #[test]
    fn restrict_scalars_examples() {
        let z4 = Matrix::from_rows(vec![vec![CycloElem::root_of_unity(4, 1)]]);
        assert_eq!(restrict_scalars_charpoly(&z4), Poly::from_ints(&[1, 0, 1]));
        assert_eq!(z4.restrict_scalars(4).charpoly(), Poly::from_ints(&[1, 0, 1]));
        let two = Matrix::from_rows(vec![vec![CycloElem::from_int(2).promote(4)]]);
        assert_eq!(restrict_scalars_charpoly(&two), Poly::from_ints(&[-2, 1]).pow(2));
        let zero = Matrix::from_rows(vec![vec![CycloElem::from_int(0).promote(3); 3]; 3]);
        assert_eq!(restrict_scalars_charpoly(&zero), Poly::from_ints(&[0, 0, 0, 0, 0, 0, 1]));
    }

    #[test]
    fn charpoly_and_fredholm() {
        let m = mq(&[&[2, 1], &[1, 2]]);
        assert_eq!(m.charpoly(), Poly::from_ints(&[3, -4, 1]));
        assert_eq!(m.fredholm(), Poly::from_ints(&[1, -4, 3]));
        assert_eq!(Matrix::<Rational>::identity(2).fredholm(), Poly::from_ints(&[1, -1]).pow(2));
        assert_eq!(Matrix::<Rational>::zeros(3, 3).fredholm(), Poly::one());
        assert_eq!(Matrix::<Rational>::zeros(0, 0).fredholm(), Poly::one());
    }

    #[test]
    fn kernels_and_solve() {
        let m = mq(&[&[1, 2], &[2, 4], &[0, 1]]);
        let k = m.left_kernel();
        assert_eq!(k.nrows(), 1);
        assert!(m.transpose().mul(&k.transpose()).is_zero());
        let x = m.solve_left(&[q(3, 1), q(7, 1)]).unwrap();
        assert_eq!(m.vec_mul(&x), vec![q(3, 1), q(7, 1)]);
        assert!(mq(&[&[1, 1]]).solve_left(&[q(1, 1), q(2, 1)]).is_none());
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = Matrix<Rational>> {
        prop::collection::vec(-5i64..5, n * n).prop_map(move |v| {
            Matrix::from_rows(v.chunks(n).map(|r| r.iter().map(|&x| Rational::from_int(x)).collect()).collect())
        })
    }

    proptest! {
        #[test]
        fn cayley_hamilton(m in (1usize..6).prop_flat_map(arb_matrix)) {
            let cp = m.charpoly();
            prop_assert!(m.eval_poly(&cp).is_zero());
            prop_assert_eq!(cp.coeff(0), if m.nrows() % 2 == 0 { m.det() } else { m.det().neg() });
        }

        #[test]
        fn diagonal_restriction_is_power(d in prop::collection::vec(-5i64..5, 1..4), mo in prop::sample::select(vec![3u64, 4, 5, 12])) {
            let n = d.len();
            let mut m = Matrix::<CycloElem>::zeros(n, n);
            let mut r = Matrix::<Rational>::zeros(n, n);
            for (i, x) in d.iter().enumerate() {
                m.set(i, i, CycloElem::from_int(*x).promote(mo));
                r.set(i, i, Rational::from_int(*x));
            }
            let phi = crate::arith::numtheory::euler_phi(mo) as u32;
            prop_assert_eq!(m.restrict_scalars(mo).charpoly(), r.charpoly().pow(phi));
            prop_assert_eq!(restrict_scalars_charpoly(&m), r.charpoly().pow(phi));
        }
    }
}
