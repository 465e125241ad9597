//! Finite-dimensional q-expansion models of spaces of modular forms.

pub mod cache;
pub mod dims;
pub mod echelon;
pub mod half;
pub mod integral;

use std::fmt;

use crate::arith::CycloElem;
use crate::dirichlet::DirichletChar;
use crate::error::{Error, Result};
use crate::qseries::{sturm_bound, sturm_bound_gamma0, QSeries};

pub use cache::SpaceCache;
pub use dims::dimension_oracle;
pub use echelon::RowEchelon;
pub use half::build_half_integral_space;
pub use integral::build_integral_space;

/// A space of forms of weight k2/2, stored as a reduced echelon basis of
/// q-expansions: basis[i] has a 1 at exponent pivots[i] and 0 at the other pivots.
#[derive(Clone)]
pub struct ModularFormSpace {
    weight_num: u64,
    level: u64,
    character: DirichletChar,
    cuspidal: bool,
    prec: usize,
    basis: Vec<QSeries>,
    pivots: Vec<usize>,
}

impl ModularFormSpace {
    pub(crate) fn from_echelon(
        weight_num: u64,
        level: u64,
        character: DirichletChar,
        cuspidal: bool,
        prec: usize,
        ech: &RowEchelon,
    ) -> ModularFormSpace {
        let basis = ech
            .rows()
            .iter()
            .map(|r| QSeries::from_coeffs(r[..prec].to_vec()))
            .collect();
        ModularFormSpace {
            weight_num,
            level,
            character,
            cuspidal,
            prec,
            basis,
            pivots: ech.pivots().to_vec(),
        }
    }

    pub(crate) fn empty(weight_num: u64, level: u64, character: DirichletChar, cuspidal: bool, prec: usize) -> Self {
        ModularFormSpace {
            weight_num,
            level,
            character,
            cuspidal,
            prec,
            basis: Vec::new(),
            pivots: Vec::new(),
        }
    }

    /// Rebuild from stored basis series, re-deriving the pivots.
    pub fn from_basis(
        weight_num: u64,
        level: u64,
        character: DirichletChar,
        cuspidal: bool,
        prec: usize,
        basis: Vec<QSeries>,
    ) -> Result<ModularFormSpace> {
        let mut ech = RowEchelon::new(prec);
        for f in &basis {
            if !ech.insert(&f.dense(prec)?) {
                return Err(Error::Invariant("stored basis is linearly dependent".into()));
            }
        }
        let s = ModularFormSpace::from_echelon(weight_num, level, character, cuspidal, prec, &ech);
        if s.basis != basis {
            return Err(Error::Invariant("stored basis is not in reduced echelon form".into()));
        }
        Ok(s)
    }

    pub fn weight_num(&self) -> u64 {
        self.weight_num
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn character(&self) -> &DirichletChar {
        &self.character
    }

    pub fn cuspidal(&self) -> bool {
        self.cuspidal
    }

    pub fn prec(&self) -> usize {
        self.prec
    }

    pub fn basis(&self) -> &[QSeries] {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_half_integral(&self) -> bool {
        self.weight_num % 2 == 1
    }

    /// λ = (k − 1)/2 for weight k/2.
    pub fn lambda(&self) -> u64 {
        (self.weight_num - 1) / 2
    }

    /// Field order common to the basis.
    pub fn order(&self) -> u64 {
        self.basis
            .iter()
            .fold(self.character.order(), |acc, f| crate::arith::numtheory::lcm(acc, f.order()))
    }

    pub fn weight_label(&self) -> String {
        weight_label(self.weight_num)
    }

    pub fn name(&self) -> String {
        format!(
            "{}_{}({}, {})",
            if self.cuspidal { "S" } else { "M" },
            self.weight_label(),
            self.level,
            self.character.label()
        )
    }

    /// Cache key covering every defining parameter.
    pub fn key(&self) -> String {
        space_key(self.weight_num, self.level, &self.character, self.cuspidal, self.prec)
    }

    /// Coordinates of f in the echelon basis, or the first exponent where f
    /// leaves the span.
    pub fn coordinates(&self, f: &QSeries) -> Result<Vec<CycloElem>> {
        self.coordinates_to(f, self.prec)
    }

    /// Same as `coordinates`, comparing only the first `len` coefficients
    /// (at least past the last pivot).
    pub fn coordinates_to(&self, f: &QSeries, len: usize) -> Result<Vec<CycloElem>> {
        let len = len.min(self.prec);
        if f.prec() < len {
            return Err(Error::Precision {
                need: len,
                have: f.prec(),
            });
        }
        if let Some(&last) = self.pivots.last() {
            if last >= len {
                return Err(Error::Precision {
                    need: last + 1,
                    have: len,
                });
            }
        }
        let coords: Vec<CycloElem> = self.pivots.iter().map(|&p| f.coeff(p)).collect();
        let mut residual = f.truncate(len);
        for (c, b) in coords.iter().zip(&self.basis) {
            if !c.is_zero() {
                residual = residual.sub(&b.truncate(len).scale(c));
            }
        }
        match residual.valuation() {
            None => Ok(coords),
            Some(n) => Err(Error::NotMember {
                space: self.name(),
                exponent: n,
            }),
        }
    }

    pub fn contains(&self, f: &QSeries) -> bool {
        self.coordinates_to(f, f.prec()).is_ok()
    }

    /// Σ c_i basis[i].
    pub fn combination(&self, coords: &[CycloElem]) -> QSeries {
        let mut out = QSeries::zero(self.prec);
        for (c, b) in coords.iter().zip(&self.basis) {
            if !c.is_zero() {
                out = out.add(&b.scale(c));
            }
        }
        out
    }

    pub(crate) fn into_parts(self) -> (Vec<QSeries>, Vec<usize>) {
        (self.basis, self.pivots)
    }
}

impl fmt::Debug for ModularFormSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [dim {}, prec {}]", self.name(), self.dim(), self.prec)
    }
}

pub fn weight_label(k2: u64) -> String {
    if k2 % 2 == 0 {
        format!("{}", k2 / 2)
    } else {
        format!("{k2}/2")
    }
}

pub fn space_key(k2: u64, level: u64, chi: &DirichletChar, cuspidal: bool, prec: usize) -> String {
    format!(
        "v{}-w{}-N{}-c{}-{}-P{}",
        cache::CACHE_VERSION,
        k2,
        level,
        chi.label().replace([':', ','], "_"),
        if cuspidal { "S" } else { "M" },
        prec
    )
}

/// Precision for a space of weight k2/2 on which operators of index up to
/// `scale` (ℓ for T_ℓ, ℓ² for T_{ℓ²}) will be applied.
pub fn space_precision(k2: u64, level: u64, scale: u64) -> usize {
    let b0 = if k2 % 2 == 0 {
        sturm_bound_gamma0(k2, level)
    } else {
        sturm_bound_gamma0(k2 + 1, level)
    };
    sturm_bound(k2, level).max(scale.max(1) as usize * b0)
}

/// Build either kind of space from its weight numerator.
pub fn build_space(k2: u64, level: u64, chi: &DirichletChar, cuspidal: bool, prec: usize) -> Result<ModularFormSpace> {
    if k2 % 2 == 0 {
        build_integral_space(k2 / 2, level, chi, cuspidal, prec)
    } else {
        build_half_integral_space(k2, level, chi, cuspidal, prec)
    }
}

pub(crate) fn check_oracle(space: &ModularFormSpace) -> Result<()> {
    let want = dimension_oracle(space.weight_num, space.level, &space.character, space.cuspidal)?;
    if want != space.dim() {
        return Err(Error::OracleMismatch {
            space: space.name(),
            expected: want,
            found: space.dim(),
        });
    }
    Ok(())
}
