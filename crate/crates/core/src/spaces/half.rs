//! Half-integral weight spaces cut out of θ⁻¹·(integral weight space).
//!
//! f has weight k/2 exactly when g = fθ and h = fΘ₂ are both forms of weight
//! (k+1)/2, where Θ₂(z) = θ(z) − θ(4z). θ and Θ₂ have no common zero, so the
//! linear condition gΘ₂ = hθ rules out poles. Θ₂ needs level 16, so h lives
//! at lcm(level, 16).

use crate::arith::numtheory::lcm;
use crate::arith::CycloElem;
use crate::dirichlet::{quadratic, DirichletChar};
use crate::error::{Error, Result};
use crate::qseries::{sturm_bound_gamma0, theta, QSeries};

use super::dims::dimension_oracle;
use super::integral::{build_integral_space, truncate_space};
use super::echelon::kernel_modulo;
use super::{check_oracle, ModularFormSpace, RowEchelon};

fn theta_pair(prec: usize) -> (QSeries, QSeries) {
    let th = theta(prec);
    let th2 = th.sub(&th.v_ell_to(4, prec));
    (th, th2)
}

/// Character of fθ for f of weight k2/2 and character ε.
pub fn integral_companion_char(k2: u64, eps: &DirichletChar) -> DirichletChar {
    let kint = (k2 + 1) / 2;
    let m = lcm(eps.modulus(), 4);
    let chi4 = quadratic(-4).extend(m).unwrap();
    eps.extend(m).unwrap().mul(&chi4.pow(kint as i64))
}

/// S_{k2/2}(level, ε) or M_{k2/2}(level, ε) with the θ multiplier, to precision `prec`.
pub fn build_half_integral_space(
    k2: u64,
    level: u64,
    eps: &DirichletChar,
    cuspidal: bool,
    prec: usize,
) -> Result<ModularFormSpace> {
    if k2 % 2 == 0 || k2 < 3 {
        return Err(Error::Invalid(format!(
            "half-integral weight {k2}/2 is not supported (need k2 odd, at least 3)"
        )));
    }
    if level % 4 != 0 {
        return Err(Error::Invalid(format!("level {level} is not divisible by 4")));
    }
    let eps = if eps.modulus() == level { eps.clone() } else { eps.extend(level)? };
    let need = sturm_bound_gamma0(k2 + 1, level);
    if prec < need {
        return Err(Error::Precision { need, have: prec });
    }
    if !eps.is_even() {
        return Ok(ModularFormSpace::empty(k2, level, eps, cuspidal, prec));
    }
    let target = dimension_oracle(k2, level, &eps, cuspidal)?;
    if target == 0 {
        return Ok(ModularFormSpace::empty(k2, level, eps, cuspidal, prec));
    }
    let kint = (k2 + 1) / 2;
    let big = lcm(level, 16);
    let eps_int = integral_companion_char(k2, &eps);
    let check = sturm_bound_gamma0(2 * kint + 2, big);
    let work = prec.max(check);

    let lower = build_integral_space(kint, level, &eps_int, cuspidal, work)?;
    let upper = if big == level {
        lower.clone()
    } else {
        build_integral_space(kint, big, &eps_int.extend(big)?, cuspidal, check)?
    };
    let (th, th2) = theta_pair(work);

    // {c : Σ c_i g_i Θ₂ ∈ θ·upper} over the first `check` coefficients;
    // h θ starts at the pivot of h since θ = 1 + O(q)
    let a = lower.dim();
    let rows: Vec<Vec<CycloElem>> = lower
        .basis()
        .iter()
        .map(|g| g.truncate(check).mul(&th2.truncate(check)).dense(check))
        .collect::<Result<_>>()?;
    let tri: Vec<(usize, Vec<CycloElem>)> = upper
        .basis()
        .iter()
        .zip(upper.pivots())
        .map(|(h, &p)| Ok((p, h.truncate(check).mul(&th.truncate(check)).dense(check)?)))
        .collect::<Result<_>>()?;
    let kernel = kernel_modulo(&rows, &tri);

    let mut ech = RowEchelon::new(work);
    for v in &kernel {
        let mut g = QSeries::zero(work);
        for (c, b) in v[..a].iter().zip(lower.basis()) {
            if !c.is_zero() {
                g = g.add(&b.scale(c));
            }
        }
        let f = g.div(&th)?;
        ech.insert(&f.dense(work)?);
    }
    if ech.rank() != target {
        return Err(Error::OracleMismatch {
            space: format!(
                "{}_{}/2({}, {})",
                if cuspidal { "S" } else { "M" },
                k2,
                level,
                eps.label()
            ),
            expected: target,
            found: ech.rank(),
        });
    }
    let s = ModularFormSpace::from_echelon(k2, level, eps, cuspidal, work, &ech);
    let s = truncate_space(s, prec);
    check_oracle(&s)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::theta_psi;

    #[test]
    fn level_four() {
        let one = DirichletChar::trivial(4);
        let s = build_half_integral_space(3, 4, &one, true, 20).unwrap();
        assert_eq!(s.dim(), 0);
        let m = build_half_integral_space(3, 4, &one, false, 20).unwrap();
        assert_eq!(m.dim(), 1);
        // θ³ spans M_{3/2}(4)
        let t3 = theta(20).pow(3);
        assert!(m.coordinates(&t3).is_ok());
        let m5 = build_half_integral_space(5, 4, &one, false, 20).unwrap();
        assert_eq!(m5.dim(), 2);
        assert!(m5.coordinates(&theta(20).pow(5)).is_ok());
        let s9 = build_half_integral_space(9, 4, &one, true, 20).unwrap();
        assert_eq!(s9.dim(), 1);
    }

    #[test]
    fn theta_psi_in_level_36() {
        let psi = quadratic(-3);
        let eps = quadratic(12).extend(36).unwrap();
        let s = build_half_integral_space(3, 36, &eps, true, 80).unwrap();
        assert_eq!(s.dim(), 1);
        let f = theta_psi(&psi, 80).unwrap();
        let c = s.coordinates(&f).unwrap();
        assert_eq!(c, vec![CycloElem::from_int(1)]);
        // θ itself is not a cusp form of this level
        assert!(s.coordinates(&theta(80)).is_err());
    }

    #[test]
    fn odd_character_is_empty_and_bad_level_rejected() {
        let chi = quadratic(-4).extend(12).unwrap();
        assert_eq!(build_half_integral_space(3, 12, &chi, true, 40).unwrap().dim(), 0);
        assert!(matches!(
            build_half_integral_space(3, 6, &DirichletChar::trivial(6), true, 40),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn theta_products_at_level_twelve() {
        let (th, _) = theta_pair(60);
        let th3 = theta(20).v_ell_to(3, 60);
        let m = build_half_integral_space(3, 12, &DirichletChar::trivial(12), false, 60).unwrap();
        assert!(m.coordinates(&th.mul(&th3).mul(&th3)).is_ok());
        assert!(m.coordinates(&th.pow(3)).is_ok());
        let chi12 = quadratic(12);
        let m12 = build_half_integral_space(3, 12, &chi12, false, 60).unwrap();
        assert!(m12.coordinates(&th.mul(&th).mul(&th3)).is_ok());
        assert!(m12.coordinates(&th.pow(3)).is_err());
    }
}
