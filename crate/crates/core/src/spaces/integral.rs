//! Integral weight spaces from Eisenstein series and their products.

use std::collections::HashMap;

use crate::arith::numtheory::{divisors, is_prime, lcm};
use crate::arith::{CycloElem, Matrix, Rational};
use crate::dirichlet::DirichletChar;
use crate::error::{Error, Result};
use crate::hecke::ops::t_ell;
use crate::qseries::{eisenstein, sturm_bound_gamma0, QSeries};

use super::dims::{dimension_oracle, eisenstein_pairs};
use super::echelon::kernel_modulo;
use super::{check_oracle, ModularFormSpace, RowEchelon};

/// One member of the Eisenstein basis: E_k(χ, ψ)(q^t), or E_2(q) − t E_2(q^t)
/// for the trivial pair in weight 2.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EisensteinGen {
    Series {
        k: u32,
        chi: DirichletChar,
        psi: DirichletChar,
        t: u64,
    },
    E2Diff {
        t: u64,
    },
}

impl EisensteinGen {
    pub fn order(&self) -> u64 {
        match self {
            EisensteinGen::Series { chi, psi, .. } => lcm(chi.order(), psi.order()),
            EisensteinGen::E2Diff { .. } => 1,
        }
    }

    pub fn series(&self, prec: usize) -> QSeries {
        match self {
            EisensteinGen::Series { k, chi, psi, t } => {
                let inner = (prec as u64).div_ceil(*t) as usize;
                eisenstein(chi, psi, *k, inner)
                    .expect("basis pairs satisfy the parity condition")
                    .v_ell_to(*t as usize, prec)
            }
            EisensteinGen::E2Diff { t } => {
                let one = DirichletChar::trivial(1);
                let e2 = eisenstein(&one, &one, 2, prec).unwrap();
                let shifted = e2.v_ell_to(*t as usize, prec);
                e2.sub(&shifted.scale_rational(&Rational::from_int(*t as i64)))
            }
        }
    }

    /// Eigenvalue of T_ℓ (ℓ prime to the level).
    pub fn hecke_eigenvalue(&self, ell: u64) -> CycloElem {
        match self {
            EisensteinGen::Series { k, chi, psi, .. } => chi
                .eval(ell as i64)
                .add(&psi.eval(ell as i64).scale(&Rational::from_int(ell as i64).pow(*k as i64 - 1))),
            EisensteinGen::E2Diff { .. } => CycloElem::from_int(ell as i64 + 1),
        }
    }
}

/// The Eisenstein basis of M_k(level, ε).
pub fn eisenstein_basis(k: u32, level: u64, eps: &DirichletChar) -> Vec<EisensteinGen> {
    let mut out = Vec::new();
    if eps.is_even() != (k % 2 == 0) {
        return out;
    }
    let mut seen = std::collections::HashSet::new();
    for (chi, psi) in eisenstein_pairs(level, eps) {
        // E_1(χ, ψ) = E_1(ψ, χ)
        if k == 1 {
            let key = if chi.label() <= psi.label() {
                (chi.label(), psi.label())
            } else {
                (psi.label(), chi.label())
            };
            if !seen.insert(key) {
                continue;
            }
        }
        let uv = chi.modulus() * psi.modulus();
        for t in divisors(level / uv) {
            if k == 2 && chi.is_trivial() && psi.is_trivial() {
                if t > 1 {
                    out.push(EisensteinGen::E2Diff { t });
                }
            } else {
                out.push(EisensteinGen::Series {
                    k,
                    chi: chi.clone(),
                    psi: psi.clone(),
                    t,
                });
            }
        }
    }
    out
}

/// A pool member: a single Eisenstein series or a product of two.
#[derive(Clone, Debug)]
enum PoolGen {
    Single(usize),
    Product(usize, usize),
}

struct Pool {
    gens: Vec<EisensteinGen>,
    index: HashMap<EisensteinGen, usize>,
    members: Vec<(u64, PoolGen)>,
    cache: HashMap<(usize, usize), QSeries>,
}

impl Pool {
    fn intern(&mut self, g: EisensteinGen) -> usize {
        if let Some(&i) = self.index.get(&g) {
            return i;
        }
        self.gens.push(g.clone());
        self.index.insert(g, self.gens.len() - 1);
        self.gens.len() - 1
    }

    fn build(k: u64, level: u64, eps: &DirichletChar) -> Pool {
        let mut pool = Pool {
            gens: Vec::new(),
            index: HashMap::new(),
            members: Vec::new(),
            cache: HashMap::new(),
        };
        for g in eisenstein_basis(k as u32, level, eps) {
            let o = g.order();
            let i = pool.intern(g);
            pool.members.push((o, PoolGen::Single(i)));
        }
        let chars = DirichletChar::all(level);
        let mut products = Vec::new();
        for a in 1..=k / 2 {
            let b = k - a;
            for eta in &chars {
                if eta.is_even() != (a % 2 == 0) {
                    continue;
                }
                let other = eps.mul(&eta.conj());
                let left: Vec<usize> = eisenstein_basis(a as u32, level, eta)
                    .into_iter()
                    .map(|g| pool.intern(g))
                    .collect();
                let right: Vec<usize> = eisenstein_basis(b as u32, level, &other)
                    .into_iter()
                    .map(|g| pool.intern(g))
                    .collect();
                for &x in &left {
                    for &y in &right {
                        if a == b && y < x {
                            continue;
                        }
                        let o = lcm(pool.gens[x].order(), pool.gens[y].order());
                        products.push((o, PoolGen::Product(x, y)));
                    }
                }
            }
        }
        // smaller coefficient fields first; stable within a field
        products.sort_by_key(|(o, _)| *o);
        pool.members.extend(products);
        pool
    }

    fn eis(&mut self, i: usize, prec: usize) -> QSeries {
        if let Some(f) = self.cache.get(&(i, prec)) {
            return f.clone();
        }
        let f = self.gens[i].series(prec);
        self.cache.insert((i, prec), f.clone());
        f
    }

    fn series(&mut self, g: &PoolGen, prec: usize) -> QSeries {
        match g {
            PoolGen::Single(i) => self.eis(*i, prec),
            PoolGen::Product(x, y) => {
                let a = self.eis(*x, prec);
                let b = self.eis(*y, prec);
                a.mul(&b)
            }
        }
    }
}

fn normalize_char(eps: &DirichletChar, level: u64) -> Result<DirichletChar> {
    if eps.modulus() == level {
        Ok(eps.clone())
    } else {
        eps.extend(level)
    }
}

/// Smallest prime ℓ ∤ N with ℓ^{k−1} − 1 > 2ℓ^{(k−1)/2}, so that Eisenstein
/// T_ℓ-eigenvalues cannot coincide with cuspidal ones.
pub fn cusp_cut_prime(k: u64, level: u64) -> u64 {
    (2u64..)
        .filter(|&l| is_prime(l) && level % l != 0)
        .find(|&l| {
            let a = (l as f64).powi(k as i32 - 1) - 1.0;
            a * a > 4.0 * (l as f64).powi(k as i32 - 1)
        })
        .unwrap()
}

/// M_k(level, ε) or S_k(level, ε) to precision `prec`.
pub fn build_integral_space(k: u64, level: u64, eps: &DirichletChar, cuspidal: bool, prec: usize) -> Result<ModularFormSpace> {
    if k < 2 {
        return Err(Error::Invalid(format!("weight {k} target spaces are not supported")));
    }
    let eps = normalize_char(eps, level)?;
    if eps.is_even() != (k % 2 == 0) {
        return Err(Error::Parity(format!(
            "character {} has the wrong parity for weight {k}",
            eps.label()
        )));
    }
    let b_sel = sturm_bound_gamma0(2 * k, level);
    if prec < b_sel {
        return Err(Error::Precision { need: b_sel, have: prec });
    }
    let dim_m = dimension_oracle(2 * k, level, &eps, false)?;
    let dim_s = dimension_oracle(2 * k, level, &eps, true)?;
    let target = if cuspidal { dim_s } else { dim_m };
    if target == 0 {
        return Ok(ModularFormSpace::empty(2 * k, level, eps, cuspidal, prec));
    }
    let cut = (cuspidal && dim_m > dim_s).then(|| cusp_cut_prime(k, level));
    let work = prec.max(cut.map_or(0, |l| l as usize * b_sel));
    let name = format!(
        "{}_{}({}, {})",
        if cuspidal { "S" } else { "M" },
        k,
        level,
        eps.label()
    );

    let full = match product_span(k, level, &eps, dim_m, b_sel, work, &name) {
        Err(Error::SpanDeficiency { .. }) if k == 2 => weight_two_by_division(level, &eps, dim_m, work, &name)?,
        r => r?,
    };
    let m_space = ModularFormSpace::from_echelon(2 * k, level, eps.clone(), false, work, &full);
    let Some(ell) = cut else {
        let s = if cuspidal {
            ModularFormSpace::from_echelon(2 * k, level, eps, true, work, &full)
        } else {
            m_space
        };
        let s = truncate_space(s, prec);
        check_oracle(&s)?;
        return Ok(s);
    };

    // Kill the Eisenstein part with a polynomial in T_ℓ.
    let reach = work / ell as usize;
    let rows: Vec<Vec<CycloElem>> = m_space
        .basis()
        .iter()
        .map(|f| m_space.coordinates_to(&t_ell(f, ell, k, &eps), reach))
        .collect::<Result<_>>()?;
    let t = Matrix::from_rows(rows);
    let mut eigen: Vec<CycloElem> = Vec::new();
    for g in eisenstein_basis(k as u32, level, &eps) {
        let e = g.hecke_eigenvalue(ell);
        if !eigen.contains(&e) {
            eigen.push(e);
        }
    }
    let n = t.nrows();
    let mut proj = Matrix::<CycloElem>::identity(n);
    for e in &eigen {
        proj = proj.mul(&t.sub(&Matrix::scalar(n, e)));
    }
    let mut cusp = RowEchelon::new(work);
    for r in proj.rows() {
        let f = m_space.combination(r);
        cusp.insert(&f.dense(work)?);
    }
    if cusp.rank() != dim_s {
        return Err(Error::OracleMismatch {
            space: name,
            expected: dim_s,
            found: cusp.rank(),
        });
    }
    let s = ModularFormSpace::from_echelon(2 * k, level, eps, true, work, &cusp);
    let s = truncate_space(s, prec);
    check_oracle(&s)?;
    Ok(s)
}

/// Echelon basis of M_k to precision `work` from the Eisenstein product pool.
fn product_span(
    k: u64,
    level: u64,
    eps: &DirichletChar,
    dim_m: usize,
    b_sel: usize,
    work: usize,
    name: &str,
) -> Result<RowEchelon> {
    let mut pool = Pool::build(k, level, eps);
    let mut sel = RowEchelon::new(b_sel);
    let mut chosen = Vec::new();
    let members = pool.members.clone();
    for (_, g) in &members {
        let f = pool.series(g, b_sel);
        if sel.insert(&f.dense(b_sel)?) {
            chosen.push(g.clone());
            if sel.rank() == dim_m {
                break;
            }
        }
    }
    if sel.rank() < dim_m {
        return Err(Error::SpanDeficiency {
            space: name.to_string(),
            expected: dim_m,
            found: sel.rank(),
        });
    }
    pool.cache.clear();
    let mut full = RowEchelon::new(work);
    for g in &chosen {
        let f = pool.series(g, work);
        full.insert(&f.dense(work)?);
    }
    Ok(full)
}

/// Weight 2 products of weight 1 series miss forms with vanishing central
/// L-value, so go through weights 6 and 8: f ∈ M_2 iff fE_4 ∈ M_6 and
/// fE_6 ∈ M_8 (E_4 and E_6 have no common zero).
fn weight_two_by_division(level: u64, eps: &DirichletChar, dim_m: usize, work: usize, name: &str) -> Result<RowEchelon> {
    let check = sturm_bound_gamma0(24, level);
    let prec6 = work.max(check);
    let m6 = build_integral_space(6, level, eps, false, prec6)?;
    let m8 = build_integral_space(8, level, eps, false, check)?;
    let one = DirichletChar::trivial(1);
    let e4 = eisenstein(&one, &one, 4, prec6)?;
    let e6 = eisenstein(&one, &one, 6, check)?;
    let e4c = e4.truncate(check);
    let rows: Vec<Vec<CycloElem>> = m6
        .basis()
        .iter()
        .map(|g| g.truncate(check).mul(&e6).dense(check))
        .collect::<Result<_>>()?;
    let tri: Vec<(usize, Vec<CycloElem>)> = m8
        .basis()
        .iter()
        .zip(m8.pivots())
        .map(|(h, &p)| Ok((p, h.truncate(check).mul(&e4c).dense(check)?)))
        .collect::<Result<_>>()?;
    let mut full = RowEchelon::new(work);
    for c in kernel_modulo(&rows, &tri) {
        let g = m6.combination(&c);
        let f = g.div(&e4)?;
        full.insert(&f.dense(work)?);
    }
    if full.rank() != dim_m {
        return Err(Error::SpanDeficiency {
            space: name.to_string(),
            expected: dim_m,
            found: full.rank(),
        });
    }
    Ok(full)
}

pub(crate) fn truncate_space(s: ModularFormSpace, prec: usize) -> ModularFormSpace {
    if s.prec() == prec {
        return s;
    }
    let (k2, level, chi, cusp) = (s.weight_num(), s.level(), s.character().clone(), s.cuspidal());
    let (basis, pivots) = s.into_parts();
    debug_assert!(pivots.iter().all(|&p| p < prec));
    let basis = basis.into_iter().map(|f| f.truncate(prec)).collect();
    ModularFormSpace {
        weight_num: k2,
        level,
        character: chi,
        cuspidal: cusp,
        prec,
        basis,
        pivots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::quadratic;
    use crate::qseries::sturm_bound;

    #[test]
    fn level_36_weight_2() {
        let p = sturm_bound(4, 36);
        let s = build_integral_space(2, 36, &DirichletChar::trivial(36), true, p).unwrap();
        assert_eq!(s.dim(), 1);
        // the CM form attached to y² = x³ + 1: q − 4q⁷ + 2q¹³ + …
        let f = &s.basis()[0];
        assert_eq!(f.coeff(1), CycloElem::from_int(1));
        assert_eq!(f.coeff(7), CycloElem::from_int(-4));
        assert_eq!(f.coeff(13), CycloElem::from_int(2));
        assert_eq!(f.coeff(5), CycloElem::from_int(0));
    }

    #[test]
    fn small_examples() {
        let s = build_integral_space(2, 4, &DirichletChar::trivial(4), true, 40).unwrap();
        assert_eq!(s.dim(), 0);
        let m = build_integral_space(4, 1, &DirichletChar::trivial(1), false, 20).unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.basis()[0].coeff(0), CycloElem::from_int(1));
        assert_eq!(m.basis()[0].coeff(2), CycloElem::from_int(2160));
        let s4 = build_integral_space(4, 1, &DirichletChar::trivial(1), true, 20).unwrap();
        assert_eq!(s4.dim(), 0);
        let d = build_integral_space(6, 1, &DirichletChar::trivial(1), true, 30).unwrap();
        assert_eq!(d.dim(), 0);
        let s11 = build_integral_space(2, 11, &DirichletChar::trivial(11), true, 60).unwrap();
        // η(z)²η(11z)²
        let f = &s11.basis()[0];
        let want = [0, 1, -2, -1, 2, 1, 2, -2, 0, -2, -2];
        for (n, w) in want.iter().enumerate() {
            assert_eq!(f.coeff(n), CycloElem::from_int(*w));
        }
        assert!(matches!(
            build_integral_space(2, 12, &quadratic(-4).extend(12).unwrap(), true, 40),
            Err(Error::Parity(_))
        ));
    }

    #[test]
    fn rank_one_level_needs_division() {
        // 37a has rank one, so products of weight 1 series alone fall short
        let s = build_integral_space(2, 37, &DirichletChar::trivial(37), true, 80).unwrap();
        assert_eq!(s.dim(), 2);
        let m = build_integral_space(2, 37, &DirichletChar::trivial(37), false, 80).unwrap();
        assert_eq!(m.dim(), 3);
    }

    #[test]
    fn character_spaces() {
        let eps = quadratic(-7);
        let s = build_integral_space(3, 7, &eps, true, 40).unwrap();
        assert_eq!(s.dim(), 1);
        // q − 3q² + 5q⁴ − 7q⁷ …
        let f = &s.basis()[0];
        for (n, w) in [(1, 1), (2, -3), (3, 0), (4, 5), (7, -7), (8, -3)] {
            assert_eq!(f.coeff(n), CycloElem::from_int(w));
        }
        let chi12 = quadratic(12).extend(36).unwrap();
        let s = build_integral_space(2, 36, &chi12, true, 80).unwrap();
        assert_eq!(s.dim(), 2);
    }

    #[test]
    fn eisenstein_star_is_not_cuspidal() {
        let psi = quadratic(-3);
        let e = eisenstein(&psi, &psi, 2, 400).unwrap();
        let estar = e.sub(&e.v_ell_to(5, 400).scale(&psi.eval(5)));
        let s = build_integral_space(2, 45, &DirichletChar::trivial(45), true, 400).unwrap();
        assert!(matches!(s.coordinates(&estar), Err(Error::NotMember { .. })));
        let m = build_integral_space(2, 45, &DirichletChar::trivial(45), false, 400).unwrap();
        assert!(m.coordinates(&estar).is_ok());
    }

    #[test]
    fn self_membership() {
        let s = build_integral_space(2, 36, &quadratic(12).extend(36).unwrap(), false, 200).unwrap();
        for (i, b) in s.basis().iter().enumerate() {
            let c = s.coordinates(b).unwrap();
            for (j, x) in c.iter().enumerate() {
                assert_eq!(*x, CycloElem::from_int((i == j) as i64));
            }
        }
        let z = s.coordinates(&QSeries::zero(200)).unwrap();
        assert!(z.iter().all(CycloElem::is_zero));
    }
}
