//! Hecke operators as maps on q-expansions.

use crate::arith::numtheory::kronecker;
use crate::arith::{CycloElem, Rational};
use crate::dirichlet::DirichletChar;
use crate::qseries::QSeries;

fn int_pow(b: u64, e: u64) -> Rational {
    Rational::from_int(b as i64).pow(e as i64)
}

/// T_ℓ in weight k: a_n ↦ a_{ℓn} + ε(ℓ) ℓ^{k−1} a_{n/ℓ}.
pub fn t_ell(f: &QSeries, ell: u64, k: u64, eps: &DirichletChar) -> QSeries {
    let l = ell as usize;
    let prec = f.prec().div_ceil(l);
    let c = eps.eval(ell as i64).scale(&int_pow(ell, k - 1));
    let mut out = f.u_ell(l);
    if c.is_zero() {
        return out;
    }
    for (n, a) in f.nonzero() {
        if n * l >= prec {
            break;
        }
        let v = out.coeff(n * l).add(&a.mul(&c));
        out.set(n * l, v);
    }
    out
}

/// T_{ℓ²} in weight k2/2 = λ + 1/2 with character ε:
/// a_n ↦ a_{ℓ²n} + ε(ℓ)(−1/ℓ)^λ (n/ℓ) ℓ^{λ−1} a_n + ε(ℓ²) ℓ^{2λ−1} a_{n/ℓ²}.
pub fn t_ellsq_half(f: &QSeries, ell: u64, k2: u64, eps: &DirichletChar) -> QSeries {
    let lam = (k2 - 1) / 2;
    let l2 = (ell * ell) as usize;
    let prec = f.prec().div_ceil(l2);
    let sign = if lam % 2 == 1 { kronecker(-1, ell as i64) } else { 1 };
    let e1 = eps.eval(ell as i64);
    // ℓ^{λ−1} for λ ≥ 1; λ = 0 would need ℓ^{−1}
    let mid = e1.scale(&Rational::from_int(sign as i64).mul(&Rational::from_int(ell as i64).pow(lam as i64 - 1)));
    let last = e1.mul(&e1).scale(&Rational::from_int(ell as i64).pow(2 * lam as i64 - 1));
    let mut out = f.u_ell(l2);
    if mid.is_zero() && last.is_zero() {
        return out;
    }
    for n in 0..prec {
        let mut v = out.coeff(n);
        let a = f.coeff(n);
        if !a.is_zero() {
            let kr = kronecker(n as i64, ell as i64);
            if kr != 0 {
                v = v.add(&a.mul(&mid).scale(&Rational::from_int(kr as i64)));
            }
        }
        if n % l2 == 0 {
            let b = f.coeff(n / l2);
            if !b.is_zero() {
                v = v.add(&b.mul(&last));
            }
        }
        out.set(n, v);
    }
    out
}

/// U_m: a_n ↦ a_{mn}.
pub fn u_op(f: &QSeries, m: u64) -> QSeries {
    f.u_ell(m as usize)
}

/// Scalar by which a diamond operator acts on a space with fixed character.
pub fn diamond_scalar(eps: &DirichletChar, d: i64) -> CycloElem {
    eps.eval(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::quadratic;
    use crate::qseries::{eisenstein, theta_psi};

    #[test]
    fn theta_psi_is_an_eigenform() {
        let psi = quadratic(-3);
        let eps = psi.mul(&quadratic(-4)).extend(36).unwrap();
        let th = theta_psi(&psi, 200 * 169).unwrap();
        for ell in [5u64, 7, 11, 13] {
            let img = t_ellsq_half(&th, ell, 3, &eps);
            let want = psi.eval(ell as i64).scale(&Rational::from_int(ell as i64 + 1));
            assert_eq!(img.truncate(200), th.truncate(200).scale(&want), "ℓ = {ell}");
        }
        assert_eq!(u_op(&th, 4).truncate(200), th.truncate(200).scale(&CycloElem::from_int(-2)));
        assert!(u_op(&th, 9).truncate(200).is_zero());
        assert_eq!(u_op(&th, 25).truncate(200), th.truncate(200).scale(&CycloElem::from_int(-5)));
    }

    #[test]
    fn eisenstein_eigenvalues() {
        let psi = quadratic(-3);
        let e = eisenstein(&psi, &psi, 2, 500).unwrap();
        let eps = DirichletChar::trivial(9);
        let img = t_ell(&e, 5, 2, &eps);
        assert_eq!(img, e.truncate(100).scale(&CycloElem::from_int(-6)));
    }
}
