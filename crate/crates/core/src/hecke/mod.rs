//! Hecke operators on spaces and their eigensystems.

pub mod eigen;
pub mod ops;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::arith::numtheory::{gcd, is_prime};
use crate::arith::{CycloElem, Matrix, Poly};
use crate::dirichlet::{quadratic, DirichletChar};
use crate::error::{Error, Result};
use crate::qseries::{sturm_bound_gamma0, QSeries};
use crate::spaces::ModularFormSpace;

pub use eigen::{eigensystems, factor_over_cyclotomic, EigenOptions, EigenSystem, Side};

/// Which operator a matrix represents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpLabel {
    T(u64),
    U(u64),
    /// T(ℓ²) on half-integral weight
    Tsq(u64),
    /// U(ℓ²) on half-integral weight
    Usq(u64),
    DiamondTame(i64),
    DiamondP(i64),
    UpHalf(u64),
}

impl OpLabel {
    /// T(ℓ²) → T(ℓ), U(ℓ²) → U(ℓ); others unchanged.
    pub fn to_integral(&self) -> OpLabel {
        match self {
            OpLabel::Tsq(l) => OpLabel::T(*l),
            OpLabel::Usq(l) => OpLabel::U(*l),
            o => o.clone(),
        }
    }
}

impl fmt::Display for OpLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpLabel::T(l) => write!(f, "T({l})"),
            OpLabel::U(l) => write!(f, "U({l})"),
            OpLabel::Tsq(l) => write!(f, "T({l}^2)"),
            OpLabel::Usq(l) => write!(f, "U({l}^2)"),
            OpLabel::DiamondTame(d) => write!(f, "<{d}>_tame"),
            OpLabel::DiamondP(d) => write!(f, "<{d}>_p"),
            OpLabel::UpHalf(p) => write!(f, "Up_half({p})"),
        }
    }
}

impl FromStr for OpLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<OpLabel> {
        let bad = || Error::Invalid(format!("unknown operator label {s:?}"));
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('<') {
            let (d, part) = rest.split_once('>').ok_or_else(bad)?;
            let d: i64 = d.parse().map_err(|_| bad())?;
            return match part {
                "_tame" => Ok(OpLabel::DiamondTame(d)),
                "_p" => Ok(OpLabel::DiamondP(d)),
                _ => Err(bad()),
            };
        }
        if let Some(inner) = s.strip_prefix("Up_half(").and_then(|r| r.strip_suffix(')')) {
            return Ok(OpLabel::UpHalf(inner.parse().map_err(|_| bad())?));
        }
        let (head, inner) = s.split_once('(').ok_or_else(bad)?;
        let inner = inner.strip_suffix(')').ok_or_else(bad)?;
        let (num, sq) = match inner.strip_suffix("^2") {
            Some(n) => (n, true),
            None => (inner, false),
        };
        let l: u64 = num.parse().map_err(|_| bad())?;
        match (head, sq) {
            ("T", false) => Ok(OpLabel::T(l)),
            ("U", false) => Ok(OpLabel::U(l)),
            ("T", true) => Ok(OpLabel::Tsq(l)),
            ("U", true) => Ok(OpLabel::Usq(l)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for OpLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// An operator as an exact matrix in echelon coordinates (row convention:
/// row i holds the coordinates of the image of basis element i).
#[derive(Clone, Debug, Serialize)]
pub struct HeckeMatrix {
    pub label: OpLabel,
    pub matrix: Matrix<CycloElem>,
    pub space_key: String,
    pub target_key: String,
}

impl HeckeMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_endomorphism(&self) -> bool {
        self.space_key == self.target_key
    }
}

/// Coefficient count that pins down a form in the space.
fn determining_length(space: &ModularFormSpace) -> usize {
    let k2 = space.weight_num();
    let k2 = if k2 % 2 == 1 { k2 + 1 } else { k2 };
    sturm_bound_gamma0(k2, space.level())
}

fn image_matrix(
    source: &ModularFormSpace,
    target: &ModularFormSpace,
    scale: u64,
    label: OpLabel,
    op: impl Fn(&QSeries) -> QSeries,
) -> Result<HeckeMatrix> {
    let reach = source.prec().div_ceil(scale as usize);
    if source.dim() > 0 {
        let need = determining_length(target);
        if reach < need {
            return Err(Error::Precision {
                need: need * scale as usize,
                have: source.prec(),
            });
        }
    }
    let rows = source
        .basis()
        .iter()
        .map(|b| target.coordinates_to(&op(b), reach))
        .collect::<Result<Vec<_>>>()?;
    Ok(HeckeMatrix {
        label,
        matrix: Matrix::with_cols(rows, target.dim()),
        space_key: source.key(),
        target_key: target.key(),
    })
}

fn require_prime(ell: u64) -> Result<()> {
    if is_prime(ell) {
        Ok(())
    } else {
        Err(Error::NotPrime(ell))
    }
}

fn require_integral(space: &ModularFormSpace) -> Result<u64> {
    if space.is_half_integral() {
        return Err(Error::Invalid(format!("{} has half-integral weight", space.name())));
    }
    Ok(space.weight_num() / 2)
}

fn require_half(space: &ModularFormSpace) -> Result<()> {
    if !space.is_half_integral() {
        return Err(Error::Invalid(format!("{} has integral weight", space.name())));
    }
    Ok(())
}

/// T_ℓ for ℓ ∤ level.
pub fn t_ell_integral(space: &ModularFormSpace, ell: u64) -> Result<HeckeMatrix> {
    let k = require_integral(space)?;
    require_prime(ell)?;
    if space.level() % ell == 0 {
        return Err(Error::Invalid(format!("{ell} divides the level {}; use U({ell})", space.level())));
    }
    let eps = space.character().clone();
    image_matrix(space, space, ell, OpLabel::T(ell), |f| ops::t_ell(f, ell, k, &eps))
}

/// U_ℓ for ℓ | level.
pub fn u_ell_integral(space: &ModularFormSpace, ell: u64) -> Result<HeckeMatrix> {
    require_integral(space)?;
    require_prime(ell)?;
    if space.level() % ell != 0 {
        return Err(Error::Invalid(format!("{ell} does not divide the level {}", space.level())));
    }
    image_matrix(space, space, ell, OpLabel::U(ell), |f| ops::u_op(f, ell))
}

/// T_{ℓ²} on half-integral weight, ℓ ∤ level.
pub fn t_ellsq_half(space: &ModularFormSpace, ell: u64) -> Result<HeckeMatrix> {
    require_half(space)?;
    require_prime(ell)?;
    if space.level() % ell == 0 {
        return Err(Error::Invalid(format!("{ell} divides the level {}; use U({ell}^2)", space.level())));
    }
    let (k2, eps) = (space.weight_num(), space.character().clone());
    image_matrix(space, space, ell * ell, OpLabel::Tsq(ell), |f| ops::t_ellsq_half(f, ell, k2, &eps))
}

/// U_{ℓ²} on half-integral weight, ℓ | level.
pub fn u_ellsq_half(space: &ModularFormSpace, ell: u64) -> Result<HeckeMatrix> {
    require_half(space)?;
    require_prime(ell)?;
    if space.level() % ell != 0 {
        return Err(Error::Invalid(format!("{ell} does not divide the level {}", space.level())));
    }
    image_matrix(space, space, ell * ell, OpLabel::Usq(ell), |f| ops::u_op(f, ell * ell))
}

/// Which part of a diamond operator to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiamondPart {
    Full,
    /// the part prime to p
    Tame(u64),
    /// the p-part
    P(u64),
}

/// Representative of d's requested part: d′ ≡ d on one CRT factor of the level
/// and ≡ 1 on the other.
pub fn diamond_representative(d: i64, level: u64, part: DiamondPart) -> Result<i64> {
    if gcd(d, level as i64) != 1 {
        return Err(Error::Invalid(format!("{d} is not coprime to the level {level}")));
    }
    let split = |p: u64| {
        let mut pp = 1u64;
        while level % (pp * p) == 0 {
            pp *= p;
        }
        (level / pp, pp)
    };
    let r = match part {
        DiamondPart::Full => d.rem_euclid(level as i64),
        DiamondPart::Tame(p) => {
            let (tame, pp) = split(p);
            crate::arith::numtheory::crt_pair(d.rem_euclid(tame as i64), tame as i64, 1, pp as i64)
        }
        DiamondPart::P(p) => {
            let (tame, pp) = split(p);
            crate::arith::numtheory::crt_pair(1, tame as i64, d.rem_euclid(pp as i64), pp as i64)
        }
    };
    Ok(r)
}

/// ⟨d⟩ on a space with fixed nebentypus: the scalar ε(d′).
pub fn diamond(space: &ModularFormSpace, d: i64, part: DiamondPart) -> Result<HeckeMatrix> {
    let r = diamond_representative(d, space.level(), part)?;
    let c = ops::diamond_scalar(space.character(), r);
    let label = match part {
        DiamondPart::P(_) => OpLabel::DiamondP(d),
        _ => OpLabel::DiamondTame(d),
    };
    Ok(HeckeMatrix {
        label,
        matrix: Matrix::scalar(space.dim(), &c),
        space_key: space.key(),
        target_key: space.key(),
    })
}

/// Character of the space that U_p maps a half-integral space into:
/// ε ↦ ε·(p/·).
pub fn up_twist(eps: &DirichletChar, p: u64) -> Result<DirichletChar> {
    let q = quadratic(p as i64);
    let m = crate::arith::numtheory::lcm(eps.modulus(), q.modulus());
    Ok(eps.extend(m)?.mul(&q.extend(m)?))
}

/// a_n ↦ a_{pn} from a half-integral space to its twisted partner.
pub fn up_half(source: &ModularFormSpace, target: &ModularFormSpace, p: u64) -> Result<HeckeMatrix> {
    require_half(source)?;
    require_half(target)?;
    require_prime(p)?;
    if p == 2 || source.level() % p != 0 {
        return Err(Error::Invalid(format!("U_{p} needs an odd prime dividing the level {}", source.level())));
    }
    if source.level() != target.level() || source.weight_num() != target.weight_num() {
        return Err(Error::Invalid("U_p source and target differ in weight or level".into()));
    }
    let want = up_twist(source.character(), p)?;
    let want = if want.modulus() == target.level() {
        want
    } else {
        want.primitive().extend(target.level())?
    };
    if &want != target.character() {
        return Err(Error::Invalid(format!(
            "target character {} is not the twist {} of the source",
            target.character().label(),
            want.label()
        )));
    }
    image_matrix(source, target, p, OpLabel::UpHalf(p), |f| ops::u_op(f, p))
}

/// det(T − M), or det(1 − M·T) when `fredholm` is set.
pub fn charpoly(op: &HeckeMatrix, fredholm: bool) -> Result<Poly<CycloElem>> {
    if !op.is_endomorphism() || !op.matrix.is_square() {
        return Err(Error::Invalid(format!("{} is not an endomorphism", op.label)));
    }
    Ok(if fredholm { op.matrix.fredholm() } else { op.matrix.charpoly() })
}

/// Every pair commutes exactly; the first offending pair otherwise.
pub fn check_commuting(ops: &[HeckeMatrix]) -> Result<()> {
    for (i, a) in ops.iter().enumerate() {
        for b in &ops[i + 1..] {
            if a.is_endomorphism() && b.is_endomorphism() && !a.matrix.commutes_with(&b.matrix) {
                return Err(Error::NonCommuting(format!("{} and {}", a.label, b.label)));
            }
        }
    }
    Ok(())
}

/// Compose two maps (first `a`, then `b`).
pub fn compose(a: &HeckeMatrix, b: &HeckeMatrix) -> Result<HeckeMatrix> {
    if a.target_key != b.space_key {
        return Err(Error::Invalid(format!("cannot compose {} with {}", a.label, b.label)));
    }
    Ok(HeckeMatrix {
        label: b.label.clone(),
        matrix: a.matrix.mul(&b.matrix),
        space_key: a.space_key.clone(),
        target_key: b.target_key.clone(),
    })
}

/// Exact JSON export of a matrix: entries as coordinate lists over Q(ζ_order).
pub fn matrix_json(op: &HeckeMatrix) -> serde_json::Value {
    serde_json::json!({
        "op": op.label.to_string(),
        "space": op.space_key,
        "target": op.target_key,
        "matrix": op.matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Rational;
    use crate::qseries::{sturm_bound, theta_psi};
    use crate::spaces::{build_half_integral_space, build_integral_space, space_precision};

    #[test]
    fn labels_round_trip() {
        for l in [
            OpLabel::T(5),
            OpLabel::U(3),
            OpLabel::Tsq(7),
            OpLabel::Usq(5),
            OpLabel::DiamondTame(-1),
            OpLabel::DiamondP(2),
            OpLabel::UpHalf(5),
        ] {
            assert_eq!(l.to_string().parse::<OpLabel>().unwrap(), l);
        }
        assert!("X(3)".parse::<OpLabel>().is_err());
    }

    #[test]
    fn level_36_integral() {
        let s = build_integral_space(2, 36, &DirichletChar::trivial(36), true, space_precision(4, 36, 5)).unwrap();
        let t5 = t_ell_integral(&s, 5).unwrap();
        assert_eq!(t5.matrix.get(0, 0), &s.basis()[0].coeff(5));
        let u2 = u_ell_integral(&s, 2).unwrap();
        assert_eq!(u2.matrix.get(0, 0), &s.basis()[0].coeff(2));
        assert!(t_ell_integral(&s, 3).is_err());
        assert!(u_ell_integral(&s, 5).is_err());
        let z = build_integral_space(2, 4, &DirichletChar::trivial(4), true, sturm_bound(4, 4) * 5).unwrap();
        assert_eq!(t_ell_integral(&z, 5).unwrap().dim(), 0);
    }

    #[test]
    fn theta_psi_line_operators() {
        let psi = quadratic(-3);
        let eps = quadratic(12).extend(36).unwrap();
        let s = build_half_integral_space(3, 36, &eps, true, space_precision(3, 36, 49)).unwrap();
        assert_eq!(s.dim(), 1);
        for ell in [5u64, 7] {
            let t = t_ellsq_half(&s, ell).unwrap();
            let want = psi.eval(ell as i64).scale(&Rational::from_int(ell as i64 + 1));
            assert_eq!(t.matrix.get(0, 0), &want);
        }
        assert_eq!(u_ellsq_half(&s, 2).unwrap().matrix.get(0, 0), &CycloElem::from_int(-2));
        assert!(u_ellsq_half(&s, 3).unwrap().matrix.is_zero());
        let d = diamond(&s, 5, DiamondPart::Tame(5)).unwrap();
        assert_eq!(d.matrix.get(0, 0), &CycloElem::from_int(-1));
        let one = diamond(&s, 1, DiamondPart::Full).unwrap();
        assert_eq!(one.matrix, Matrix::identity(1));
        // the line really is θ_ψ
        let th = theta_psi(&psi, s.prec()).unwrap();
        assert!(s.coordinates(&th).is_ok());
        let f = charpoly(&u_ellsq_half(&s, 2).unwrap(), true).unwrap();
        assert_eq!(f, Poly::from_ints(&[1, 2]));
    }

    #[test]
    fn diamond_parts_multiply() {
        let level = 4 * 3 * 5;
        for d in [7i64, 11, 13, 17, 19, 23, 29, 31] {
            let t = diamond_representative(d, level, DiamondPart::Tame(5)).unwrap();
            let p = diamond_representative(d, level, DiamondPart::P(5)).unwrap();
            assert_eq!((t * p).rem_euclid(level as i64), d.rem_euclid(level as i64));
        }
        assert!(diamond_representative(6, level, DiamondPart::Full).is_err());
    }

    #[test]
    fn fredholm_of_identity() {
        let m = HeckeMatrix {
            label: OpLabel::T(2),
            matrix: Matrix::identity(2),
            space_key: "a".into(),
            target_key: "a".into(),
        };
        assert_eq!(charpoly(&m, true).unwrap(), Poly::from_ints(&[1, -2, 1]));
        let z = HeckeMatrix {
            matrix: Matrix::zeros(3, 3),
            ..m.clone()
        };
        assert_eq!(charpoly(&z, true).unwrap(), Poly::one());
        let off = HeckeMatrix {
            target_key: "b".into(),
            ..m
        };
        assert!(charpoly(&off, true).is_err());
    }
}
