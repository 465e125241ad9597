//! Elements of cyclotomic fields Q(ζ_m) in the power basis modulo Φ_m.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use once_cell::sync::Lazy;

use super::numtheory::{divisors, euler_phi, lcm};
use super::{Field, Rational};

/// Precomputed data for one cyclotomic order.
#[derive(Debug)]
pub struct CycloCtx {
    pub m: u64,
    pub phi: usize,
    /// Coefficients of Φ_m, constant term first (monic).
    pub cyclotomic: Vec<i64>,
    /// `table[e]` holds x^e mod Φ_m for 0 <= e < m.
    pub table: Vec<Vec<i64>>,
}

static CONTEXTS: Lazy<RwLock<HashMap<u64, Arc<CycloCtx>>>> = Lazy::new(|| RwLock::new(HashMap::new()));

thread_local! {
    static LAST: std::cell::RefCell<Option<Arc<CycloCtx>>> = const { std::cell::RefCell::new(None) };
}

fn poly_mul_i(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exact division of integer polynomials by a monic divisor.
fn poly_div_monic_i(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dl = den.len();
    let mut quo = vec![0i64; num.len() + 1 - dl];
    for i in (0..quo.len()).rev() {
        let c = rem[i + dl - 1];
        quo[i] = c;
        if c != 0 {
            for (j, d) in den.iter().enumerate() {
                rem[i + j] -= c * d;
            }
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0));
    quo
}

/// Φ_m with integer coefficients, constant term first.
pub fn cyclotomic_poly(m: u64) -> Vec<i64> {
    let mut num = vec![0i64; m as usize + 1];
    num[0] = -1;
    num[m as usize] = 1;
    let mut den = vec![1i64];
    for d in divisors(m) {
        if d < m {
            den = poly_mul_i(&den, &cyclotomic_poly(d));
        }
    }
    poly_div_monic_i(&num, &den)
}

fn build_ctx(m: u64) -> CycloCtx {
    let phi = euler_phi(m) as usize;
    let cyc = cyclotomic_poly(m);
    let mut table = Vec::with_capacity(m as usize);
    let mut cur = vec![0i64; phi];
    cur[0] = 1;
    for _ in 0..m {
        table.push(cur.clone());
        // multiply by x and reduce with the monic Φ_m
        let top = cur[phi - 1];
        for i in (1..phi).rev() {
            cur[i] = cur[i - 1];
        }
        cur[0] = 0;
        if top != 0 {
            for i in 0..phi {
                cur[i] -= top * cyc[i];
            }
        }
    }
    CycloCtx {
        m,
        phi,
        cyclotomic: cyc,
        table,
    }
}

/// Shared context for order `m`.
pub fn ctx(m: u64) -> Arc<CycloCtx> {
    if let Some(c) = LAST.with(|l| l.borrow().as_ref().filter(|c| c.m == m).cloned()) {
        return c;
    }
    let found = CONTEXTS.read().unwrap().get(&m).cloned();
    let c = match found {
        Some(c) => c,
        None => {
            let c = Arc::new(build_ctx(m));
            CONTEXTS.write().unwrap().entry(m).or_insert(c).clone()
        }
    };
    LAST.with(|l| *l.borrow_mut() = Some(c.clone()));
    c
}

/// An element of Q(ζ_m), coordinates in the basis 1, ζ_m, …, ζ_m^{φ(m)−1}.
#[derive(Clone)]
pub struct CycloElem {
    order: u64,
    coords: Vec<Rational>,
}

/// Embed a rational into Q(ζ_m).
pub fn cyclo_embed(x: &Rational, m: u64) -> CycloElem {
    assert!(m >= 1, "cyclotomic order must be positive");
    let phi = euler_phi(m) as usize;
    let mut coords = vec![Rational::zero(); phi];
    coords[0] = x.clone();
    CycloElem { order: m, coords }
}

impl CycloElem {
    pub fn from_coords(order: u64, coords: Vec<Rational>) -> CycloElem {
        assert_eq!(coords.len(), euler_phi(order) as usize, "coordinate length must be φ(m)");
        CycloElem { order, coords }
    }

    pub fn rational(x: Rational) -> CycloElem {
        CycloElem {
            order: 1,
            coords: vec![x],
        }
    }

    pub fn from_int(n: i64) -> CycloElem {
        CycloElem::rational(Rational::from_int(n))
    }

    /// ζ_m^e.
    pub fn root_of_unity(m: u64, e: i64) -> CycloElem {
        let c = ctx(m);
        let row = &c.table[e.rem_euclid(m as i64) as usize];
        CycloElem {
            order: m,
            coords: row.iter().map(|&x| Rational::from_int(x)).collect(),
        }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Rational::is_zero)
    }

    /// The element as a rational, if it lies in Q.
    pub fn as_rational(&self) -> Option<Rational> {
        if self.coords[1..].iter().all(Rational::is_zero) {
            Some(self.coords[0].clone())
        } else {
            None
        }
    }

    /// Rewrite in Q(ζ_n) for a multiple `n` of the current order.
    pub fn promote(&self, n: u64) -> CycloElem {
        if n == self.order {
            return self.clone();
        }
        assert!(n % self.order == 0, "cannot promote order {} to {}", self.order, n);
        let step = n / self.order;
        let c = ctx(n);
        let mut coords = vec![Rational::zero(); c.phi];
        for (i, x) in self.coords.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let row = &c.table[(i as u64 * step % n) as usize];
            for (k, &t) in row.iter().enumerate() {
                if t != 0 {
                    coords[k] = coords[k].add(&x.mul(&Rational::from_int(t)));
                }
            }
        }
        CycloElem { order: n, coords }
    }

    fn common(a: &CycloElem, b: &CycloElem) -> (CycloElem, CycloElem) {
        let n = lcm(a.order, b.order);
        (a.promote(n), b.promote(n))
    }

    pub fn add(&self, o: &CycloElem) -> CycloElem {
        if self.order == o.order {
            return CycloElem {
                order: self.order,
                coords: self.coords.iter().zip(&o.coords).map(|(x, y)| x.add(y)).collect(),
            };
        }
        if o.order == 1 {
            let mut out = self.clone();
            out.coords[0] = out.coords[0].add(&o.coords[0]);
            return out;
        }
        if self.order == 1 {
            return o.add(self);
        }
        let (a, b) = CycloElem::common(self, o);
        a.add(&b)
    }

    pub fn neg(&self) -> CycloElem {
        CycloElem {
            order: self.order,
            coords: self.coords.iter().map(Rational::neg).collect(),
        }
    }

    pub fn sub(&self, o: &CycloElem) -> CycloElem {
        self.add(&o.neg())
    }

    pub fn scale(&self, r: &Rational) -> CycloElem {
        CycloElem {
            order: self.order,
            coords: self.coords.iter().map(|x| x.mul(r)).collect(),
        }
    }

    pub fn mul(&self, o: &CycloElem) -> CycloElem {
        if o.coords.len() == 1 && o.order <= 2 {
            let r = o.promote_scalar();
            return self.scale(&r);
        }
        if self.coords.len() == 1 && self.order <= 2 {
            let r = self.promote_scalar();
            return o.scale(&r);
        }
        if self.order != o.order {
            let (a, b) = CycloElem::common(self, o);
            return a.mul(&b);
        }
        let c = ctx(self.order);
        let phi = c.phi;
        let mut prod = vec![Rational::zero(); 2 * phi - 1];
        for (i, x) in self.coords.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in o.coords.iter().enumerate() {
                if !y.is_zero() {
                    prod[i + j] = prod[i + j].add(&x.mul(y));
                }
            }
        }
        let mut coords: Vec<Rational> = prod[..phi].to_vec();
        for (e, x) in prod.iter().enumerate().skip(phi) {
            if x.is_zero() {
                continue;
            }
            let row = &c.table[e % c.m as usize];
            for (k, &t) in row.iter().enumerate() {
                if t != 0 {
                    coords[k] = coords[k].add(&x.mul(&Rational::from_int(t)));
                }
            }
        }
        CycloElem {
            order: self.order,
            coords,
        }
    }

    // Orders 1 and 2 both have φ = 1 and the single coordinate is the value.
    fn promote_scalar(&self) -> Rational {
        self.coords[0].clone()
    }

    /// Rational matrix of multiplication by `self` (row i = coords of ζ^i·self).
    pub fn mult_matrix(&self) -> Vec<Vec<Rational>> {
        let m = self.order;
        (0..self.coords.len())
            .map(|i| CycloElem::root_of_unity(m, i as i64).mul(self).promote(m).coords)
            .collect()
    }

    pub fn inv(&self) -> CycloElem {
        assert!(!self.is_zero(), "inverse of zero");
        if self.coords.len() == 1 {
            return CycloElem {
                order: self.order,
                coords: vec![self.coords[0].inv()],
            };
        }
        // Solve y·A = e_0 where A is the multiplication matrix.
        let a = super::Matrix::from_rows(self.mult_matrix());
        let mut rhs = vec![Rational::zero(); self.coords.len()];
        rhs[0] = Rational::one();
        let y = a.solve_left(&rhs).expect("nonzero field elements are invertible");
        CycloElem {
            order: self.order,
            coords: y,
        }
    }

    pub fn div(&self, o: &CycloElem) -> CycloElem {
        self.mul(&o.inv())
    }

    /// Field norm to Q.
    pub fn norm(&self) -> Rational {
        if self.coords.len() == 1 {
            return self.coords[0].clone();
        }
        super::Matrix::from_rows(self.mult_matrix()).det()
    }

    /// Field trace to Q.
    pub fn trace(&self) -> Rational {
        let mm = self.mult_matrix();
        (0..mm.len()).fold(Rational::zero(), |acc, i| acc.add(&mm[i][i]))
    }

    /// The Galois automorphism ζ ↦ ζ^a (a coprime to the order).
    pub fn galois(&self, a: i64) -> CycloElem {
        let m = self.order;
        let mut acc = CycloElem::rational(Rational::zero()).promote(m);
        for (i, x) in self.coords.iter().enumerate() {
            if !x.is_zero() {
                acc = acc.add(&CycloElem::root_of_unity(m, a * i as i64).scale(x));
            }
        }
        acc
    }

    /// Complex conjugate.
    pub fn conj(&self) -> CycloElem {
        self.galois(-1)
    }

    /// Lowest order over which the element is defined, among divisors of its order.
    pub fn minimal_order(&self) -> u64 {
        for d in divisors(self.order) {
            if d == self.order {
                break;
            }
            // an element lies in Q(ζ_d) iff it is fixed by Gal(Q(ζ_m)/Q(ζ_d))
            let fixed = (0..self.order as i64)
                .filter(|a| super::numtheory::gcd(*a, self.order as i64) == 1)
                .filter(|a| (a - 1).rem_euclid(d as i64) == 0)
                .all(|a| self.galois(a) == *self);
            if fixed {
                return d;
            }
        }
        self.order
    }
}

impl PartialEq for CycloElem {
    fn eq(&self, o: &Self) -> bool {
        if self.order == o.order {
            return self.coords == o.coords;
        }
        let (a, b) = CycloElem::common(self, o);
        a.coords == b.coords
    }
}

impl Eq for CycloElem {}

impl fmt::Display for CycloElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        for (i, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            terms.push(match i {
                0 => format!("{c}"),
                1 => format!("({c})*z{}", self.order),
                _ => format!("({c})*z{}^{i}", self.order),
            });
        }
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl fmt::Debug for CycloElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CycloRepr {
    order: u64,
    coords: Vec<Rational>,
}

impl serde::Serialize for CycloElem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CycloRepr {
            order: self.order,
            coords: self.coords.clone(),
        }
        .serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for CycloElem {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = CycloRepr::deserialize(d)?;
        if r.order == 0 || r.coords.len() != euler_phi(r.order) as usize {
            return Err(serde::de::Error::custom("coordinate length must be φ(order)"));
        }
        Ok(CycloElem {
            order: r.order,
            coords: r.coords,
        })
    }
}

impl Field for CycloElem {
    fn zero() -> Self {
        CycloElem::rational(Rational::zero())
    }
    fn one() -> Self {
        CycloElem::rational(Rational::one())
    }
    fn is_zero(&self) -> bool {
        CycloElem::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        CycloElem::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        CycloElem::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        CycloElem::mul(self, o)
    }
    fn neg(&self) -> Self {
        CycloElem::neg(self)
    }
    fn inv(&self) -> Self {
        CycloElem::inv(self)
    }
    fn from_rational(r: &Rational) -> Self {
        CycloElem::rational(r.clone())
    }
    fn is_one(&self) -> bool {
        self.coords[0].is_one() && self.coords[1..].iter().all(Rational::is_zero)
    }
}

impl std::ops::Add<&CycloElem> for &CycloElem {
    type Output = CycloElem;
    fn add(self, o: &CycloElem) -> CycloElem {
        CycloElem::add(self, o)
    }
}

impl std::ops::Sub<&CycloElem> for &CycloElem {
    type Output = CycloElem;
    fn sub(self, o: &CycloElem) -> CycloElem {
        CycloElem::sub(self, o)
    }
}

impl std::ops::Mul<&CycloElem> for &CycloElem {
    type Output = CycloElem;
    fn mul(self, o: &CycloElem) -> CycloElem {
        CycloElem::mul(self, o)
    }
}

impl std::ops::Neg for &CycloElem {
    type Output = CycloElem;
    fn neg(self) -> CycloElem {
        CycloElem::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::q;
    use proptest::prelude::*;

    #[test]
    fn cyclotomic_polys() {
        assert_eq!(cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn embed_examples() {
        let x = cyclo_embed(&q(3, 2), 4);
        assert_eq!(x.coords(), &[q(3, 2), q(0, 1)]);
        assert!(cyclo_embed(&q(0, 1), 12).is_zero());
        let one = cyclo_embed(&q(1, 1), 1);
        let z = CycloElem::root_of_unity(12, 5);
        assert_eq!(one.mul(&z), z);
    }

    #[test]
    fn roots_of_unity_multiply() {
        let i = CycloElem::root_of_unity(4, 1);
        assert_eq!(i.mul(&i), CycloElem::from_int(-1));
        let w = CycloElem::root_of_unity(3, 1);
        assert_eq!(w.mul(&i), CycloElem::root_of_unity(12, 7));
        assert_eq!(CycloElem::root_of_unity(6, 3), CycloElem::from_int(-1));
        assert_eq!(CycloElem::root_of_unity(2, 1), CycloElem::from_int(-1));
    }

    #[test]
    fn norm_and_minimal_order() {
        let i = CycloElem::root_of_unity(4, 1);
        let two_plus_i = CycloElem::from_int(2).add(&i);
        assert_eq!(two_plus_i.norm(), q(5, 1));
        assert_eq!(CycloElem::from_int(3).promote(12).minimal_order(), 1);
        assert_eq!(i.promote(12).minimal_order(), 4);
        // ζ_12 + ζ_12^{-1} = √3
        let s = CycloElem::root_of_unity(12, 1).add(&CycloElem::root_of_unity(12, -1));
        assert_eq!(s.mul(&s), CycloElem::from_int(3));
    }

    fn arb(m: u64) -> impl Strategy<Value = CycloElem> {
        let phi = euler_phi(m) as usize;
        prop::collection::vec((-20i64..20, 1i64..6), phi)
            .prop_map(move |v| CycloElem::from_coords(m, v.into_iter().map(|(n, d)| q(n, d)).collect()))
    }

    proptest! {
        #[test]
        fn field_laws((a, b, c) in prop::sample::select(vec![3u64, 4, 5, 8, 12])
            .prop_flat_map(|m| (arb(m), arb(m), arb(m))))
        {
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            if !a.is_zero() {
                prop_assert!(Field::is_one(&a.mul(&a.inv())));
            }
        }

        #[test]
        fn mixed_orders_promote(a in arb(4), b in arb(3)) {
            let ab = a.mul(&b);
            prop_assert_eq!(ab.order(), 12);
            prop_assert_eq!(ab.sub(&a.promote(12).mul(&b.promote(12))), CycloElem::from_int(0));
            prop_assert_eq!(a.add(&b).sub(&b), a);
        }
    }
}
