//! The Shimura lift at classical weights.
//!
//! Two constructions: the divisor-sum formula applied to the coefficients of a
//! half-integral eigenform, and the multiplicative series assembled from its
//! Hecke eigenvalues. The second is the one used for lifting eigensystems; the
//! first cross-checks it.

use serde::Serialize;

use crate::arith::numtheory::{factorize, is_prime, lcm, primes_below};
use crate::arith::{CycloElem, Matrix, Rational};
use crate::dirichlet::{quadratic, DirichletChar};
use crate::error::{Error, Result};
use crate::hecke::eigen::SystemContext;
use crate::hecke::ops::{t_ellsq_half as t_ellsq_series, u_op};
use crate::hecke::{t_ell_integral, u_ell_integral, EigenSystem, HeckeMatrix, OpLabel, Side};
use crate::qseries::QSeries;
use crate::spaces::ModularFormSpace;

/// ψ = ε·χ_{−4}^λ made primitive and read modulo lcm(cond ψ, level/4), so that
/// ψ(2) survives when the level is 4·(odd).
pub fn lift_character(eps: &DirichletChar, lambda: u64, level: u64) -> Result<DirichletChar> {
    if level % 4 != 0 {
        return Err(Error::Invalid(format!("level {level} is not divisible by 4")));
    }
    let chi4 = quadratic(-4);
    let m = lcm(eps.modulus(), 4);
    let psi = eps.extend(m)?.mul(&chi4.extend(m)?.pow(lambda as i64)).primitive();
    let c = psi.conductor();
    psi.extend(lcm(c, level / 4))
}

fn ell_power(ell: u64, e: u64) -> Rational {
    Rational::from_int(ell as i64).pow(e as i64)
}

/// A_n = Σ_{d|n} ψ(d) d^{λ−1} a_{(n/d)²}, for n < prec.
pub fn lift_coefficients(f: &QSeries, lambda: u64, eps: &DirichletChar, level: u64, prec: usize) -> Result<QSeries> {
    lift_coefficients_t(f, 1, lambda, eps, level, prec)
}

/// The t-instance: A_n = Σ_{d|n} ψ(d)(t/d) d^{λ−1} a_{t(n/d)²}, t squarefree.
pub fn lift_coefficients_t(
    f: &QSeries,
    t: u64,
    lambda: u64,
    eps: &DirichletChar,
    level: u64,
    prec: usize,
) -> Result<QSeries> {
    if lambda == 0 {
        return Err(Error::Invalid("the lift needs weight at least 3/2".into()));
    }
    if t == 0 || factorize(t).iter().any(|&(_, e)| e > 1) {
        return Err(Error::Invalid(format!("t = {t} is not squarefree")));
    }
    let need = if prec == 0 { 0 } else { t as usize * (prec - 1) * (prec - 1) + 1 };
    if f.prec() < need {
        return Err(Error::Precision { need, have: f.prec() });
    }
    let psi = lift_character(eps, lambda, level)?;
    let twist = if t == 1 { None } else { Some(quadratic(t as i64)) };
    let chi = |d: u64| {
        let v = psi.eval(d as i64);
        match &twist {
            Some(q) => v.mul(&q.eval(d as i64)),
            None => v,
        }
    };
    let mut out = QSeries::zero(prec);
    for n in 1..prec {
        let mut acc = CycloElem::from_int(0);
        for d in 1..=n {
            if n % d != 0 {
                continue;
            }
            let m = n / d;
            let a = f.coeff(t as usize * m * m);
            if a.is_zero() {
                continue;
            }
            let c = chi(d as u64);
            if c.is_zero() {
                continue;
            }
            acc = acc.add(&c.mul(&a).scale(&ell_power(d as u64, lambda - 1)));
        }
        if !acc.is_zero() {
            out.set(n, acc);
        }
    }
    Ok(out)
}

/// The formula at the smallest squarefree t with a_t ≠ 0, divided by a_t.
pub fn normalized_lift(
    f: &QSeries,
    lambda: u64,
    eps: &DirichletChar,
    level: u64,
    prec: usize,
) -> Result<(u64, QSeries)> {
    let mut t = 1u64;
    while (t as usize) < f.prec() {
        let squarefree = factorize(t).iter().all(|&(_, e)| e == 1);
        if squarefree && !f.coeff(t as usize).is_zero() {
            let a = lift_coefficients_t(f, t, lambda, eps, level, prec)?;
            let lead = f.coeff(t as usize).inv();
            return Ok((t, a.scale(&lead)));
        }
        t += 1;
    }
    Err(Error::Invalid("a_t vanishes for every squarefree t in range; cannot normalize".into()))
}

/// A_{ℓ^r} for ℓ^r < prec from the first term and the two recursion constants:
/// A_{ℓ^{r+1}} = s·A_{ℓ^r} − q·A_{ℓ^{r−1}}.
fn prime_power_terms(ell: u64, a1: &CycloElem, s: &CycloElem, q: &CycloElem, prec: usize) -> Vec<(usize, CycloElem)> {
    let mut out = Vec::new();
    let mut prev = CycloElem::from_int(1);
    let mut cur = a1.clone();
    let mut n = ell as usize;
    while n < prec {
        out.push((n, cur.clone()));
        let next = s.mul(&cur).sub(&q.mul(&prev));
        prev = cur;
        cur = next;
        n = match n.checked_mul(ell as usize) {
            Some(x) => x,
            None => break,
        };
    }
    out
}

/// Fill in a multiplicative series from its prime-power coefficients.
fn multiplicative(prec: usize, powers: &[Vec<(usize, CycloElem)>]) -> QSeries {
    let mut table = vec![None; prec];
    for v in powers {
        for (n, c) in v {
            table[*n] = Some(c.clone());
        }
    }
    let mut out = QSeries::zero(prec);
    if prec > 1 {
        out.set(1, CycloElem::from_int(1));
    }
    for n in 2..prec {
        let mut acc = CycloElem::from_int(1);
        for (l, e) in factorize(n as u64) {
            let pe = (l as usize).pow(e);
            match &table[pe] {
                Some(c) => acc = acc.mul(c),
                None => {
                    acc = CycloElem::from_int(0);
                    break;
                }
            }
            if acc.is_zero() {
                break;
            }
        }
        if !acc.is_zero() {
            out.set(n, acc);
        }
    }
    out
}

/// Recursion constants (s, q) at a prime, from A_ℓ.
/// Good ℓ: s = A_ℓ, q = ψ²(ℓ)ℓ^{2λ−1}. ℓ | level: the roots are u = A_ℓ − c
/// and c = ψ(ℓ)ℓ^{λ−1}, so s = A_ℓ and q = u·c.
fn recursion_constants(ell: u64, a_ell: &CycloElem, psi: &DirichletChar, lambda: u64, level: u64) -> CycloElem {
    let v = psi.eval(ell as i64);
    if level % ell == 0 {
        let c = v.scale(&ell_power(ell, lambda - 1));
        a_ell.sub(&c).mul(&c)
    } else {
        v.mul(&v).scale(&ell_power(ell, 2 * lambda - 1))
    }
}

/// The normalized lift built from eigenvalues: A_ℓ = T(ℓ²) eigenvalue for ℓ
/// prime to the level, A_ℓ = U(ℓ²) eigenvalue + ψ(ℓ)ℓ^{λ−1} otherwise.
pub fn lift_series_from_eigenvalues(src: &EigenSystem, prec: usize) -> Result<QSeries> {
    if src.side != Side::HalfIntegral {
        return Err(Error::Invalid("the lift starts from a half-integral system".into()));
    }
    let eps = src.nebentypus()?;
    let psi = lift_character(&eps, src.lambda, src.level)?;
    let mut powers = Vec::new();
    for ell in primes_below(prec as u64) {
        let bad = src.level % ell == 0;
        let label = if bad { OpLabel::Usq(ell) } else { OpLabel::Tsq(ell) };
        let v = src
            .value(&label)
            .ok_or_else(|| Error::Invalid(format!("no rational eigenvalue for {label} (needed below {prec})")))?;
        let a_ell = if bad {
            v.add(&psi.eval(ell as i64).scale(&ell_power(ell, src.lambda - 1)))
        } else {
            v
        };
        let q = recursion_constants(ell, &a_ell, &psi, src.lambda, src.level);
        powers.push(prime_power_terms(ell, &a_ell, &a_ell, &q, prec));
    }
    Ok(multiplicative(prec, &powers))
}

/// First exponent where a normalized series breaks multiplicativity or the
/// prime-power recursion; None when both hold below its precision.
pub fn recursion_failure(a: &QSeries, eps: &DirichletChar, lambda: u64, level: u64) -> Result<Option<usize>> {
    let prec = a.prec();
    if prec <= 1 {
        return Ok(None);
    }
    if a.coeff(1) != CycloElem::from_int(1) {
        return Ok(Some(1));
    }
    let psi = lift_character(eps, lambda, level)?;
    let mut powers = Vec::new();
    for ell in primes_below(prec as u64) {
        let a_ell = a.coeff(ell as usize);
        let q = recursion_constants(ell, &a_ell, &psi, lambda, level);
        let terms = prime_power_terms(ell, &a_ell, &a_ell, &q, prec);
        for (n, c) in &terms {
            if a.coeff(*n) != *c {
                return Ok(Some(*n));
            }
        }
        powers.push(terms);
    }
    let m = multiplicative(prec, &powers);
    Ok(a.first_difference(&m))
}

pub fn recursion_holds(a: &QSeries, eps: &DirichletChar, lambda: u64, level: u64) -> Result<bool> {
    Ok(recursion_failure(a, eps, lambda, level)?.is_none())
}

/// Move a half-integral system at (λ, j) to the integral side at (2λ, 2j):
/// T(ℓ²) → T(ℓ), U(ℓ²) → U(ℓ), tame character squared, level halved.
/// Diamond labels are dropped; their values change under the map.
pub fn sh_on_points(src: &EigenSystem) -> Result<EigenSystem> {
    if src.side != Side::HalfIntegral {
        return Err(Error::Invalid("sh_on_points takes a half-integral system".into()));
    }
    let tame = src.tame_char.mul(&src.tame_char).primitive();
    let j = (2 * src.j) % (src.p - 1);
    let mut out = src.relabeled(Side::Integral, src.level / 2, 2 * src.lambda, j, tame, OpLabel::to_integral);
    out.eigenvalues.retain(|(l, _)| matches!(l, OpLabel::T(_) | OpLabel::U(_)));
    Ok(out)
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct LiftFlags {
    pub membership: bool,
    pub eigen_match: bool,
    pub recursion: bool,
}

impl LiftFlags {
    pub fn all(&self) -> bool {
        self.membership && self.eigen_match && self.recursion
    }
}

#[derive(Clone, Debug)]
pub struct LiftRecord {
    pub source: EigenSystem,
    pub target: EigenSystem,
    pub target_qexp: QSeries,
    pub target_space: String,
    pub cuspidal: bool,
    pub flags: LiftFlags,
    /// Operators whose matrices were applied for `eigen_match`.
    pub checked: Vec<OpLabel>,
    pub notes: Vec<String>,
}

impl LiftRecord {
    pub fn to_json(&self, terms: usize) -> serde_json::Value {
        let q: Vec<String> = (0..terms.min(self.target_qexp.prec()))
            .map(|n| self.target_qexp.coeff(n).to_string())
            .collect();
        serde_json::json!({
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "target_space": self.target_space,
            "cuspidal": self.cuspidal,
            "qexp": q,
            "flags": self.flags,
            "checked": self.checked.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            "notes": self.notes,
        })
    }
}

/// Eigenvalue of `op` on the vector v, if v is an eigenvector.
fn eigenvalue_on(v: &[CycloElem], op: &Matrix<CycloElem>) -> Option<CycloElem> {
    let w = op.vec_mul(v);
    let i = v.iter().position(|x| !x.is_zero())?;
    let c = w[i].div(&v[i]);
    v.iter().zip(&w).all(|(x, y)| x.mul(&c) == *y).then_some(c)
}

/// Lift a half-integral system into `target_space` and verify the result.
/// Fails with `NotMember` when the series leaves the target space.
pub fn lift_from_eigensystem(src: &EigenSystem, target_space: &ModularFormSpace, prec: usize) -> Result<LiftRecord> {
    let target = sh_on_points(src)?;
    if target_space.is_half_integral() || target_space.weight_num() != 2 * target.lambda {
        return Err(Error::Invalid(format!(
            "{} does not have weight {}",
            target_space.name(),
            2 * target.lambda
        )));
    }
    let want = src.nebentypus()?;
    let want = want.mul(&want).primitive();
    if target_space.character().primitive() != want {
        return Err(Error::Invalid(format!(
            "{} does not have character {}",
            target_space.name(),
            want.label()
        )));
    }
    let f = lift_series_from_eigenvalues(src, prec)?;
    let coords = target_space.coordinates_to(&f, f.prec())?;

    let eps = src.nebentypus()?;
    let psi = lift_character(&eps, src.lambda, src.level)?;
    let recursion = recursion_holds(&f, &eps, src.lambda, src.level)?;

    // T(ℓ) for ℓ prime to the target level, U(ℓ) where ψ(ℓ) = 0
    let mut checked = Vec::new();
    let mut eigen_match = true;
    let tl = target_space.level();
    for ell in primes_below(prec as u64) {
        let bad = tl % ell == 0;
        if bad && !psi.eval(ell as i64).is_zero() {
            continue;
        }
        let op = if bad { u_ell_integral(target_space, ell) } else { t_ell_integral(target_space, ell) };
        let op = match op {
            Ok(op) => op,
            Err(Error::Precision { .. }) => break,
            Err(e) => return Err(e),
        };
        let expected = f.coeff(ell as usize);
        match eigenvalue_on(&coords, &op.matrix) {
            Some(c) if c == expected => {}
            _ => eigen_match = false,
        }
        checked.push(op.label);
    }
    if checked.is_empty() {
        eigen_match = false;
    }
    let mut notes = Vec::new();
    if !target_space.cuspidal() {
        notes.push(format!("membership checked in the full space {}", target_space.name()));
    }
    Ok(LiftRecord {
        source: src.clone(),
        target,
        target_qexp: f,
        target_space: target_space.name(),
        cuspidal: target_space.cuspidal(),
        flags: LiftFlags {
            membership: true,
            eigen_match,
            recursion,
        },
        checked,
        notes,
    })
}

/// Try level 2Np first and 4Np if the series is not a member there.
pub fn lift_with_fallback(
    src: &EigenSystem,
    build: impl Fn(u64) -> Result<ModularFormSpace>,
    prec: usize,
) -> Result<LiftRecord> {
    let half = src.level / 2;
    match build(half).and_then(|s| lift_from_eigensystem(src, &s, prec)) {
        Ok(r) => Ok(r),
        Err(Error::NotMember { space, exponent }) => {
            let mut r = lift_from_eigensystem(src, &build(src.level)?, prec)?;
            r.notes.push(format!(
                "not a member of {space} (first failing exponent {exponent}); lifted at level {}",
                src.level
            ));
            Ok(r)
        }
        Err(e) => Err(e),
    }
}

/// A vector in the common eigenspace of a system whose eigenvalues are all
/// in the base field, together with the dimension of that eigenspace.
pub fn common_eigenvector(ops: &[HeckeMatrix], sys: &EigenSystem) -> Result<(Vec<CycloElem>, usize)> {
    let n = ops.first().map_or(0, |o| o.dim());
    let mut w: Matrix<CycloElem> = Matrix::identity(n);
    for op in ops {
        let v = sys
            .value(&op.label)
            .ok_or_else(|| Error::Invalid(format!("{} has no eigenvalue in the base field", op.label)))?;
        let m = op.matrix.map(|x| x.promote(lcm(x.order(), v.order())));
        let shifted = m.sub(&Matrix::scalar(n, &v.promote(lcm(v.order(), m.field_order()))));
        let c = w.mul(&shifted).left_kernel();
        w = c.mul(&w);
        if w.nrows() == 0 {
            return Err(Error::Invariant("system has no common eigenvector".into()));
        }
    }
    let dim = w.nrows();
    Ok((w.row(0).to_vec(), dim))
}

/// Eigensystem of a half-integral eigenform read off from its T(ℓ²)/U(ℓ²)
/// images for all primes ℓ < prec.
pub fn half_system_from_series(f: &QSeries, ctx: &SystemContext, prec: usize) -> Result<EigenSystem> {
    let level = ctx.level;
    let tau = DirichletChar::teichmuller(ctx.p)?.pow(ctx.j as i64);
    let eps = ctx.tame_char.extend(level)?.mul(&tau.extend(level)?);
    let k2 = 2 * ctx.lambda + 1;
    let images: Vec<(OpLabel, QSeries)> = primes_below(prec as u64)
        .into_iter()
        .map(|l| {
            if level % l == 0 {
                (OpLabel::Usq(l), u_op(f, l * l))
            } else {
                (OpLabel::Tsq(l), t_ellsq_series(f, l, k2, &eps))
            }
        })
        .collect();
    EigenSystem::from_eigenform(f, &images, OpLabel::Usq(ctx.p), ctx)
}

/// Lift a half-integral eigenform series to `prec` coefficients, trying the
/// target levels of `lift_with_fallback`.
pub fn lift_eigenform(
    f: &QSeries,
    ctx: &SystemContext,
    build: impl Fn(u64) -> Result<ModularFormSpace>,
    prec: usize,
) -> Result<LiftRecord> {
    let src = half_system_from_series(f, ctx, prec)?;
    lift_with_fallback(&src, build, prec)
}

/// ψ(ℓ)ℓ^{λ−1}: the second root at a prime dividing the level.
pub fn bad_prime_root(src: &EigenSystem, ell: u64) -> Result<CycloElem> {
    if !is_prime(ell) {
        return Err(Error::NotPrime(ell));
    }
    let psi = lift_character(&src.nebentypus()?, src.lambda, src.level)?;
    Ok(psi.eval(ell as i64).scale(&ell_power(ell, src.lambda - 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hecke::eigen::SystemContext;
    use crate::hecke::ops;
    use crate::qseries::theta_psi;

    fn e_psi(psi: &DirichletChar, prec: usize) -> QSeries {
        QSeries::from_fn(prec, |n| {
            if n == 0 {
                return CycloElem::from_int(0);
            }
            let s: i64 = (1..=n).filter(|d| n % d == 0).map(|d| d as i64).sum();
            psi.eval(n as i64).scale(&Rational::from_int(s))
        })
    }

    fn theta_psi_system(p: u64, prec: usize) -> EigenSystem {
        let psi = quadratic(-3);
        let level = 4 * 9 * p;
        let big = prec * prec + 1;
        let f = theta_psi(&psi, big).unwrap();
        let eps = quadratic(12).extend(level).unwrap();
        let mut images = Vec::new();
        for ell in primes_below(prec as u64) {
            if level % ell == 0 {
                images.push((OpLabel::Usq(ell), ops::u_op(&f, ell * ell)));
            } else {
                images.push((OpLabel::Tsq(ell), ops::t_ellsq_half(&f, ell, 3, &eps)));
            }
        }
        let ctx = SystemContext {
            side: Side::HalfIntegral,
            level,
            lambda: 1,
            j: 0,
            p,
            tame_char: quadratic(12),
        };
        EigenSystem::from_eigenform(&f, &images, OpLabel::Usq(p), &ctx).unwrap()
    }

    #[test]
    fn theta_psi_lifts_to_e_psi() {
        let psi = quadratic(-3);
        let f = theta_psi(&psi, 60 * 60).unwrap();
        let eps = quadratic(12).extend(36).unwrap();
        let a = lift_coefficients(&f, 1, &eps, 36, 60).unwrap();
        assert_eq!(a, e_psi(&psi, 60));
        assert!(recursion_holds(&a, &eps, 1, 36).unwrap());
    }

    #[test]
    fn stabilized_lift_coefficients() {
        let s = theta_psi_system(5, 30);
        let a = lift_series_from_eigenvalues(&s, 30).unwrap();
        let v: Vec<i64> = [1, 2, 3, 4, 5, 6, 25]
            .iter()
            .map(|&n| a.coeff(n).as_rational().unwrap().as_i64().unwrap())
            .collect();
        assert_eq!(v, vec![1, -3, 0, 7, -5, 0, 25]);
        // E_ψ − ψ(5)V_5E_ψ
        let psi = quadratic(-3);
        let e = e_psi(&psi, 30);
        let star = e.add(&e.v_ell_to(5, 30));
        assert_eq!(a, star);
    }

    #[test]
    fn sh_relabels() {
        let s = theta_psi_system(5, 12);
        let t = sh_on_points(&s).unwrap();
        assert_eq!(t.side, Side::Integral);
        assert_eq!((t.lambda, t.j, t.level), (2, 0, 90));
        assert_eq!(t.slope, Rational::one());
        assert_eq!(t.value(&OpLabel::U(5)), s.value(&OpLabel::Usq(5)));
        assert_eq!(t.value(&OpLabel::T(7)), Some(CycloElem::from_int(8)));
        assert!(t.tame_char.is_trivial());
    }

    #[test]
    fn bad_t_rejected() {
        let f = theta_psi(&quadratic(-3), 100).unwrap();
        let eps = quadratic(12).extend(36).unwrap();
        assert!(lift_coefficients_t(&f, 4, 1, &eps, 36, 5).is_err());
        assert!(matches!(
            lift_coefficients(&f, 1, &eps, 36, 20),
            Err(Error::Precision { .. })
        ));
    }
}

#[cfg(test)]
mod t_instances {
    use super::*;
    use crate::spaces::build_half_integral_space;

    // the t = 1 instance keeps ψ(2); (t/2) = 0 for t = 2, 3 changes the even terms
    #[test]
    fn instances_agree_at_odd_n() {
        let one = DirichletChar::trivial(4);
        let prec = 16;
        let s = build_half_integral_space(9, 4, &one, true, 3 * prec * prec).unwrap();
        let f = &s.basis()[0];
        let a1 = lift_coefficients_t(f, 1, 4, &one, 4, prec).unwrap();
        assert!(recursion_holds(&a1.scale(&a1.coeff(1).inv()), &one, 4, 4).unwrap());
        for t in [2u64, 3] {
            let at = lift_coefficients_t(f, t, 4, &one, 4, prec).unwrap();
            assert!(!at.coeff(1).is_zero());
            let r = at.coeff(1).div(&a1.coeff(1));
            for n in (1..prec).step_by(2) {
                assert_eq!(at.coeff(n), a1.coeff(n).mul(&r), "t = {t}, n = {n}");
            }
        }
        let (t, norm) = normalized_lift(f, 4, &one, 4, prec).unwrap();
        assert_eq!(t, 1);
        assert_eq!(norm.coeff(1), CycloElem::from_int(1));
    }
}
