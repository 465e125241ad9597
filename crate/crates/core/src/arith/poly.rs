//! Dense univariate polynomials over a [`Field`], constant term first.

use std::fmt;

use super::{CycloElem, Field, Rational};

#[derive(Clone, PartialEq)]
pub struct Poly<F> {
    coeffs: Vec<F>,
}

impl<F: Field> Poly<F> {
    pub fn new(mut coeffs: Vec<F>) -> Poly<F> {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Poly<F> {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Poly<F> {
        Poly::constant(F::one())
    }

    pub fn constant(c: F) -> Poly<F> {
        Poly::new(vec![c])
    }

    /// The polynomial T.
    pub fn x() -> Poly<F> {
        Poly::new(vec![F::zero(), F::one()])
    }

    /// `1 - a T`
    pub fn fredholm_linear(a: &F) -> Poly<F> {
        Poly::new(vec![F::one(), a.neg()])
    }

    pub fn from_ints(c: &[i64]) -> Poly<F> {
        Poly::new(c.iter().map(|&x| F::from_int(x)).collect())
    }

    pub fn coeffs(&self) -> &[F] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> F {
        self.coeffs.get(i).cloned().unwrap_or_else(F::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> F {
        self.coeffs.last().cloned().unwrap_or_else(F::zero)
    }

    pub fn add(&self, o: &Poly<F>) -> Poly<F> {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i).add(&o.coeff(i))).collect())
    }

    pub fn neg(&self) -> Poly<F> {
        Poly {
            coeffs: self.coeffs.iter().map(F::neg).collect(),
        }
    }

    pub fn sub(&self, o: &Poly<F>) -> Poly<F> {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &F) -> Poly<F> {
        Poly::new(self.coeffs.iter().map(|x| x.mul(c)).collect())
    }

    pub fn mul(&self, o: &Poly<F>) -> Poly<F> {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![F::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j].add_mul_assign(a, b);
            }
        }
        Poly::new(out)
    }

    pub fn pow(&self, e: u32) -> Poly<F> {
        (0..e).fold(Poly::one(), |acc, _| acc.mul(self))
    }

    /// Quotient and remainder; panics on division by zero.
    pub fn div_rem(&self, d: &Poly<F>) -> (Poly<F>, Poly<F>) {
        let dd = d.degree().expect("division by the zero polynomial");
        let inv = d.lead().inv();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let mut quo = vec![F::zero(); rem.len() - dd];
        for i in (0..quo.len()).rev() {
            let c = rem[i + dd].mul(&inv);
            if c.is_zero() {
                continue;
            }
            for (j, x) in d.coeffs.iter().enumerate() {
                rem[i + j] = rem[i + j].sub(&c.mul(x));
            }
            quo[i] = c;
        }
        rem.truncate(dd);
        (Poly::new(quo), Poly::new(rem))
    }

    /// Exact quotient if `d` divides `self`.
    pub fn div_exact(&self, d: &Poly<F>) -> Option<Poly<F>> {
        let (q, r) = self.div_rem(d);
        r.is_zero().then_some(q)
    }

    pub fn divides(&self, f: &Poly<F>) -> bool {
        f.div_rem(self).1.is_zero()
    }

    pub fn monic(&self) -> Poly<F> {
        if self.is_zero() {
            return Poly::zero();
        }
        self.scale(&self.lead().inv())
    }

    /// Scale so the constant term is 1 when it is nonzero, else monic.
    pub fn normalize(&self) -> Poly<F> {
        match self.coeffs.first() {
            Some(c0) if !c0.is_zero() => self.scale(&c0.inv()),
            _ => self.monic(),
        }
    }

    pub fn gcd(&self, o: &Poly<F>) -> Poly<F> {
        let (mut a, mut b) = (self.monic(), o.monic());
        while !b.is_zero() {
            let r = a.div_rem(&b).1.monic();
            a = b;
            b = r;
        }
        a
    }

    pub fn derivative(&self) -> Poly<F> {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.mul(&F::from_int(i as i64)))
                .collect(),
        )
    }

    pub fn eval(&self, x: &F) -> F {
        self.coeffs
            .iter()
            .rev()
            .fold(F::zero(), |acc, c| acc.mul(x).add(c))
    }

    /// `T^d f(1/T)` with `d` the degree.
    pub fn reverse(&self) -> Poly<F> {
        let mut c = self.coeffs.clone();
        c.reverse();
        Poly::new(c)
    }

    /// `f(cT)`
    pub fn rescale_var(&self, c: &F) -> Poly<F> {
        let mut pw = F::one();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for a in &self.coeffs {
            out.push(a.mul(&pw));
            pw = pw.mul(c);
        }
        Poly::new(out)
    }

    /// Multiplicity of T as a factor.
    pub fn low_order(&self) -> usize {
        self.coeffs.iter().take_while(|c| c.is_zero()).count()
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Poly<G> {
        Poly::new(self.coeffs.iter().map(f).collect())
    }
}

impl Poly<CycloElem> {
    /// Coefficients as rationals, if all lie in Q.
    pub fn to_rational(&self) -> Option<Poly<Rational>> {
        let c: Option<Vec<Rational>> = self.coeffs.iter().map(CycloElem::as_rational).collect();
        c.map(Poly::new)
    }

    /// Product of the Galois conjugates over Q(ζ_m)/Q: a polynomial over Q.
    pub fn norm_to_q(&self, m: u64) -> Poly<Rational> {
        let units: Vec<i64> = (1..m.max(2) as i64)
            .filter(|a| super::numtheory::gcd(*a, m as i64) == 1)
            .collect();
        let units = if m <= 2 { vec![1] } else { units };
        let mut acc: Poly<CycloElem> = Poly::one();
        for a in units {
            let conj = Poly::new(self.coeffs.iter().map(|c| c.promote(m).galois(a)).collect());
            acc = acc.mul(&conj);
        }
        acc.to_rational().expect("norm polynomial has rational coefficients")
    }
}

impl Poly<Rational> {
    pub fn to_cyclo(&self) -> Poly<CycloElem> {
        self.map(|c| CycloElem::rational(c.clone()))
    }

    /// Coefficients cleared to integers with content removed and positive leading coefficient.
    pub fn primitive_integer(&self) -> Vec<num_bigint::BigInt> {
        use num_integer::Integer;
        use num_traits::{Signed, Zero};
        let mut den = num_bigint::BigInt::from(1);
        for c in &self.coeffs {
            den = den.lcm(&c.denom());
        }
        let mut ints: Vec<num_bigint::BigInt> = self
            .coeffs
            .iter()
            .map(|c| c.numer() * (&den / c.denom()))
            .collect();
        let mut g = num_bigint::BigInt::zero();
        for c in &ints {
            g = g.gcd(c);
        }
        if !g.is_zero() {
            for c in ints.iter_mut() {
                *c = &*c / &g;
            }
        }
        if ints.last().is_some_and(|l| l.is_negative()) {
            for c in ints.iter_mut() {
                *c = -&*c;
            }
        }
        ints
    }
}

/// Squarefree part `f / gcd(f, f')`, normalized to constant term 1 when
/// `f(0) = 1` and monic otherwise.
pub fn squarefree_part<F: Field>(f: &Poly<F>) -> Poly<F> {
    assert!(!f.is_zero(), "squarefree part of the zero polynomial");
    let g = f.gcd(&f.derivative());
    let (q, _) = f.div_rem(&g);
    if f.coeff(0).is_one() {
        q.normalize()
    } else {
        q.monic()
    }
}

impl<F: Field + fmt::Display> fmt::Display for Poly<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})*T")?,
                _ => write!(f, "({c})*T^{i}")?,
            }
        }
        Ok(())
    }
}

impl<F: Field> fmt::Debug for Poly<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coeffs.iter()).finish()
    }
}

impl<F: Field + serde::Serialize> serde::Serialize for Poly<F> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coeffs.serialize(s)
    }
}

impl<'de, F: Field + serde::Deserialize<'de>> serde::Deserialize<'de> for Poly<F> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Poly::new(Vec::<F>::deserialize(d)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;
    use proptest::prelude::*;

    fn p(c: &[i64]) -> Poly<Rational> {
        Poly::from_ints(c)
    }

    #[test]
    fn squarefree_examples() {
        let one_minus_t = p(&[1, -1]);
        assert_eq!(squarefree_part(&one_minus_t.pow(2)), one_minus_t);
        let f = p(&[1, -1]).mul(&p(&[1, -2]));
        assert_eq!(squarefree_part(&f), f);
        let g = p(&[0, 0, 1]).mul(&one_minus_t.pow(3));
        let expect = p(&[0, 1]).mul(&one_minus_t);
        let got = squarefree_part(&g);
        assert_eq!(got, expect.monic());
        assert!(got.divides(&expect) && expect.divides(&got));
    }

    #[test]
    fn division_and_gcd() {
        let a = p(&[1, 2, 1]);
        let b = p(&[1, 1]);
        assert_eq!(a.div_exact(&b), Some(b.clone()));
        assert_eq!(a.gcd(&p(&[-1, 0, 1])), p(&[1, 1]));
        assert_eq!(p(&[3, 0, 1]).eval(&q(2, 1)), q(7, 1));
    }

    #[test]
    fn norm_of_cyclotomic_linear() {
        // T - ζ_4 has norm T^2 + 1
        let f = Poly::new(vec![CycloElem::root_of_unity(4, 1).neg(), CycloElem::from_int(1)]);
        assert_eq!(f.norm_to_q(4), p(&[1, 0, 1]));
    }

    fn arb_poly() -> impl Strategy<Value = Poly<Rational>> {
        prop::collection::vec(-6i64..6, 1..6).prop_map(|mut v| {
            v[0] = 1;
            Poly::from_ints(&v)
        })
    }

    proptest! {
        #[test]
        fn squarefree_laws(f in arb_poly(), g in arb_poly()) {
            let sf = squarefree_part(&f);
            prop_assert_eq!(squarefree_part(&sf), sf.clone());
            let sfg = squarefree_part(&f.mul(&g));
            let prod = sf.mul(&squarefree_part(&g));
            prop_assert!(sfg.divides(&prod));
            if f.gcd(&g).degree() == Some(0) {
                prop_assert_eq!(sfg, prod.normalize());
            }
        }
    }
}
