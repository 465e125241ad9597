//! Dirichlet characters on canonical generators of (Z/M)^×.
//!
//! Generators follow the CRT factorization of M: for 4 the class of −1, for
//! 2^e with e ≥ 3 the pair −1, 5, and for each odd prime power the smallest
//! positive primitive root. Each generator is lifted to be 1 modulo the other
//! prime-power components. A character is the vector of exponents e_i with
//! χ(g_i) = ζ_{n_i}^{e_i}, n_i the order of g_i.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::arith::numtheory::{
    crt_pair, divisors, factorize, gcd, kronecker, lcm, pow_mod, smallest_primitive_root,
};
use crate::arith::{CycloElem, Rational};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Generator {
    /// Residue mod M.
    pub value: u64,
    pub order: u64,
}

/// Canonical generators of (Z/M)^×.
pub fn generators(m: u64) -> Vec<Generator> {
    let fac = factorize(m);
    let mut local: Vec<(u64, u64, u64)> = Vec::new(); // (gen mod q, order, q)
    for &(p, e) in &fac {
        let q = p.pow(e);
        if p == 2 {
            if e == 2 {
                local.push((3, 2, q));
            } else if e >= 3 {
                local.push((q - 1, 2, q));
                local.push((5, q / 4, q));
            }
        } else {
            local.push((smallest_primitive_root(q), q / p * (p - 1), q));
        }
    }
    local
        .into_iter()
        .map(|(g, ord, q)| Generator {
            value: crt_pair(g as i64, q as i64, 1, (m / q) as i64) as u64,
            order: ord,
        })
        .collect()
}

/// Discrete logarithms of `a` on the canonical generators, if `a` is a unit.
fn dlog(m: u64, a: i64) -> Option<Vec<u64>> {
    let a = a.rem_euclid(m as i64) as u64;
    if gcd(a as i64, m as i64) != 1 {
        return None;
    }
    let mut out = Vec::new();
    for (p, e) in factorize(m) {
        let q = p.pow(e);
        let x = a % q;
        if p == 2 {
            if e == 2 {
                out.push(if x == 1 { 0 } else { 1 });
            } else if e >= 3 {
                let (sign, y) = if x % 4 == 1 { (0, x) } else { (1, q - x) };
                out.push(sign);
                let mut k = 0;
                let mut cur = 1u64;
                while cur != y {
                    cur = cur * 5 % q;
                    k += 1;
                }
                out.push(k);
            }
        } else {
            let g = smallest_primitive_root(q);
            let mut k = 0;
            let mut cur = 1u64;
            while cur != x {
                cur = cur * g % q;
                k += 1;
            }
            out.push(k);
        }
    }
    Some(out)
}

/// A Dirichlet character modulo `modulus`.
#[derive(Clone)]
pub struct DirichletChar {
    modulus: u64,
    exponents: Vec<u64>,
    gens: Arc<Vec<Generator>>,
    order: u64,
    /// χ(a) = ζ_order^table[a], or -1 when gcd(a, M) > 1.
    table: Arc<Vec<i64>>,
}

impl PartialEq for DirichletChar {
    fn eq(&self, o: &Self) -> bool {
        self.modulus == o.modulus && self.exponents == o.exponents
    }
}

impl Eq for DirichletChar {}

impl std::hash::Hash for DirichletChar {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.modulus.hash(h);
        self.exponents.hash(h);
    }
}

impl DirichletChar {
    pub fn new(modulus: u64, exponents: Vec<i64>) -> Result<DirichletChar> {
        if modulus == 0 {
            return Err(Error::Invalid("modulus must be positive".into()));
        }
        let gens = generators(modulus);
        if gens.len() != exponents.len() {
            return Err(Error::BadCharacter(
                format!("{modulus}:{exponents:?}"),
                format!("modulus {modulus} has {} canonical generators", gens.len()),
            ));
        }
        let exps: Vec<u64> = exponents
            .iter()
            .zip(gens.iter())
            .map(|(e, g)| e.rem_euclid(g.order as i64) as u64)
            .collect();
        let order = exps
            .iter()
            .zip(gens.iter())
            .fold(1, |acc, (e, g)| lcm(acc, g.order / gcd(*e as i64, g.order as i64) as u64));
        let table = (0..modulus as i64)
            .map(|a| match dlog(modulus, a) {
                None => -1,
                Some(ks) => {
                    let mut t = 0u64;
                    for ((k, e), g) in ks.iter().zip(&exps).zip(gens.iter()) {
                        // ζ_n^{e k} = ζ_order^{e k order / n}
                        t = (t + (e * k % g.order) * order / g.order) % order;
                    }
                    t as i64
                }
            })
            .collect();
        Ok(DirichletChar {
            modulus,
            exponents: exps,
            gens: Arc::new(gens),
            order,
            table: Arc::new(table),
        })
    }

    pub fn trivial(modulus: u64) -> DirichletChar {
        let n = generators(modulus).len();
        DirichletChar::new(modulus, vec![0; n]).unwrap()
    }

    /// Character determined by its values: `f(g)` returns (k, m) with χ(g) = ζ_m^k
    /// for each canonical generator g.
    fn from_generator_values(modulus: u64, f: impl Fn(u64) -> Option<(u64, u64)>) -> Result<DirichletChar> {
        let gens = generators(modulus);
        let mut exps = Vec::new();
        for g in gens.iter() {
            let (k, m) = f(g.value).ok_or_else(|| Error::Invalid(format!("character undefined at generator {}", g.value)))?;
            if (k * g.order) % m != 0 {
                return Err(Error::Invalid(format!("value at {} has order not dividing {}", g.value, g.order)));
            }
            exps.push((k * g.order / m) as i64);
        }
        DirichletChar::new(modulus, exps)
    }

    /// The character a ↦ (D/a) modulo `modulus`; errors if it is not periodic mod `modulus`.
    pub fn kronecker(d: i64, modulus: u64) -> Result<DirichletChar> {
        let chi = DirichletChar::from_generator_values(modulus, |g| match kronecker(d, g as i64) {
            1 => Some((0, 1)),
            -1 => Some((1, 2)),
            _ => None,
        })?;
        for a in 1..modulus as i64 * 2 {
            if gcd(a, modulus as i64) == 1 && chi.value_exp(a).map(|(k, _)| k != 0) != Some(kronecker(d, a) == -1) {
                return Err(Error::Invalid(format!("({d}/.) is not a character mod {modulus}")));
            }
        }
        Ok(chi)
    }

    /// The Teichmüller character mod an odd prime.
    pub fn teichmuller(p: u64) -> Result<DirichletChar> {
        if p == 2 || !crate::arith::numtheory::is_prime(p) {
            return Err(Error::Invalid(format!("Teichmüller character needs an odd prime, got {p}")));
        }
        DirichletChar::new(p, vec![1])
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    /// Order of the character; its values lie in Q(ζ_order).
    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn is_trivial(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    /// χ(a) = ζ_m^k as (k, m) with m the character order; `None` if gcd(a, M) > 1.
    pub fn value_exp(&self, a: i64) -> Option<(u64, u64)> {
        let t = self.table[a.rem_euclid(self.modulus as i64) as usize];
        (t >= 0).then_some((t as u64, self.order))
    }

    /// χ(a) as an element of Q(ζ_order), or 0.
    pub fn eval(&self, a: i64) -> CycloElem {
        match self.value_exp(a) {
            None => CycloElem::from_int(0),
            Some((0, _)) => CycloElem::from_int(1),
            Some((k, m)) if 2 * k == m => CycloElem::from_int(-1),
            Some((k, m)) => CycloElem::root_of_unity(m, k as i64),
        }
    }

    /// χ(a) when it is rational (±1 or 0).
    pub fn eval_rational(&self, a: i64) -> Option<Rational> {
        match self.value_exp(a) {
            None => Some(Rational::zero()),
            Some((0, _)) => Some(Rational::one()),
            Some((k, m)) if 2 * k == m => Some(Rational::from_int(-1)),
            _ => None,
        }
    }

    pub fn is_even(&self) -> bool {
        self.value_exp(-1) == Some((0, self.order))
    }

    pub fn parity(&self) -> i64 {
        if self.is_even() {
            1
        } else {
            -1
        }
    }

    pub fn mul(&self, o: &DirichletChar) -> DirichletChar {
        let m = lcm(self.modulus, o.modulus);
        DirichletChar::from_generator_values(m, |g| {
            let (k1, m1) = self.value_exp(g as i64)?;
            let (k2, m2) = o.value_exp(g as i64)?;
            let l = lcm(m1, m2);
            Some(((k1 * (l / m1) + k2 * (l / m2)) % l, l))
        })
        .expect("product of characters")
    }

    pub fn pow(&self, e: i64) -> DirichletChar {
        let exps = self
            .exponents
            .iter()
            .map(|&x| x as i64 * e)
            .collect();
        DirichletChar::new(self.modulus, exps).unwrap()
    }

    /// Complex conjugate (inverse) character.
    pub fn conj(&self) -> DirichletChar {
        self.pow(-1)
    }

    /// The induced character modulo a multiple of the modulus.
    pub fn extend(&self, modulus: u64) -> Result<DirichletChar> {
        if modulus % self.modulus != 0 {
            return Err(Error::Invalid(format!("{} does not divide {}", self.modulus, modulus)));
        }
        if modulus == self.modulus {
            return Ok(self.clone());
        }
        DirichletChar::from_generator_values(modulus, |g| self.value_exp(g as i64))
    }

    /// Smallest modulus d | M through which the character factors.
    pub fn conductor(&self) -> u64 {
        let m = self.modulus as i64;
        for d in divisors(self.modulus) {
            let ok = (1..m)
                .filter(|a| gcd(*a, m) == 1 && (a - 1) % d as i64 == 0)
                .all(|a| self.value_exp(a).map(|(k, _)| k) == Some(0));
            if ok {
                return d;
            }
        }
        self.modulus
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor() == self.modulus
    }

    /// The primitive character inducing this one.
    pub fn primitive(&self) -> DirichletChar {
        let f = self.conductor();
        self.restrict(f).expect("character factors through its conductor")
    }

    /// The character mod `d | M` inducing this one, if it exists.
    pub fn restrict(&self, d: u64) -> Result<DirichletChar> {
        if self.modulus % d != 0 {
            return Err(Error::Invalid(format!("{d} does not divide {}", self.modulus)));
        }
        let m = self.modulus as i64;
        let lift = |a: u64| -> i64 {
            let mut x = a as i64;
            while gcd(x, m) != 1 {
                x += d as i64;
            }
            x
        };
        let chi = DirichletChar::from_generator_values(d, |g| self.value_exp(lift(g)))?;
        if chi.extend(self.modulus)? != *self {
            return Err(Error::Invalid(format!("character does not factor through modulus {d}")));
        }
        Ok(chi)
    }

    /// Split into components on the prime-power factors of the modulus.
    pub fn prime_components(&self) -> Vec<(u64, DirichletChar)> {
        factorize(self.modulus)
            .into_iter()
            .map(|(p, e)| {
                let q = p.pow(e);
                let rest = self.modulus / q;
                let chi = DirichletChar::from_generator_values(q, |g| {
                    self.value_exp(crt_pair(g as i64, q as i64, 1, rest as i64))
                })
                .unwrap();
                (p, chi)
            })
            .collect()
    }

    /// Label "M:e1,e2,...".
    pub fn label(&self) -> String {
        let e: Vec<String> = self.exponents.iter().map(u64::to_string).collect();
        format!("{}:{}", self.modulus, e.join(","))
    }

    /// Conrey index n with χ = χ_n.
    pub fn conrey_index(&self) -> u64 {
        let mut idx = 1i64;
        let mut acc_mod = 1i64;
        let mut gi = 0;
        for (p, e) in factorize(self.modulus) {
            let q = p.pow(e);
            let local = if p == 2 {
                if e == 1 {
                    1
                } else if e == 2 {
                    let c = self.exponents[gi];
                    gi += 1;
                    if c == 0 {
                        1
                    } else {
                        3
                    }
                } else {
                    let c = self.exponents[gi];
                    let a = self.exponents[gi + 1];
                    gi += 2;
                    let v = pow_mod(5, a, q);
                    if c == 0 {
                        v
                    } else {
                        q - v
                    }
                }
            } else {
                let a = self.exponents[gi];
                gi += 1;
                pow_mod(smallest_primitive_root(q), a, q)
            };
            idx = crt_pair(idx, acc_mod, local as i64, q as i64);
            acc_mod *= q as i64;
        }
        idx as u64
    }

    /// χ_n in Conrey's numbering.
    pub fn from_conrey(modulus: u64, n: u64) -> Result<DirichletChar> {
        let ks = dlog(modulus, n as i64)
            .ok_or_else(|| Error::BadCharacter(format!("{modulus}.{n}"), "index must be a unit".into()))?;
        DirichletChar::new(modulus, ks.into_iter().map(|k| k as i64).collect())
    }

    /// All characters modulo M, ordered by exponent vector.
    pub fn all(modulus: u64) -> Vec<DirichletChar> {
        let gens = generators(modulus);
        let mut out = vec![vec![]];
        for g in gens.iter() {
            out = out
                .into_iter()
                .flat_map(|v: Vec<i64>| {
                    (0..g.order as i64).map(move |e| {
                        let mut w = v.clone();
                        w.push(e);
                        w
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|e| DirichletChar::new(modulus, e).unwrap())
            .collect()
    }
}

impl fmt::Display for DirichletChar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl fmt::Debug for DirichletChar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "χ[{}]", self.label())
    }
}

impl FromStr for DirichletChar {
    type Err = Error;

    /// Accepts "M:e1,e2,..." or the Conrey form "M.n".
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::BadCharacter(s.to_string(), why.to_string());
        let s = s.trim();
        if let Some((m, n)) = s.split_once('.') {
            let m: u64 = m.parse().map_err(|_| bad("modulus is not a positive integer"))?;
            let n: u64 = n.parse().map_err(|_| bad("Conrey index is not an integer"))?;
            if m == 0 {
                return Err(bad("modulus must be positive"));
            }
            return DirichletChar::from_conrey(m, n).map_err(|_| bad("Conrey index must be a unit"));
        }
        let (m, rest) = s.split_once(':').unwrap_or((s, ""));
        let m: u64 = m.parse().map_err(|_| bad("modulus is not a positive integer"))?;
        if m == 0 {
            return Err(bad("modulus must be positive"));
        }
        let exps: Vec<i64> = if rest.trim().is_empty() {
            vec![]
        } else {
            rest.split(',')
                .map(|x| x.trim().parse::<i64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("exponents must be integers"))?
        };
        let n = generators(m).len();
        if exps.len() != n {
            return Err(bad(&format!("modulus {m} needs {n} exponents")));
        }
        DirichletChar::new(m, exps)
    }
}

impl serde::Serialize for DirichletChar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> serde::Deserialize<'de> for DirichletChar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// χ_{-3}, χ_{-4} and friends: the quadratic character of a discriminant on its natural modulus.
pub fn quadratic(d: i64) -> DirichletChar {
    let m = match d.rem_euclid(4) {
        0 | 1 => d.unsigned_abs(),
        _ => 4 * d.unsigned_abs(),
    };
    DirichletChar::kronecker(d, m).expect("quadratic character")
}

pub fn char_eval(chi: &DirichletChar, a: i64) -> CycloElem {
    chi.eval(a)
}

pub fn char_product(a: &DirichletChar, b: &DirichletChar) -> DirichletChar {
    a.mul(b)
}

pub fn kronecker_symbol(d: i64, n: i64) -> i32 {
    kronecker(d, n)
}

pub fn teichmuller(p: u64) -> Result<DirichletChar> {
    DirichletChar::teichmuller(p)
}

/// (d mod p, d mod 4N) for d coprime to 4Np.
pub fn crt_split(d: i64, n: u64, p: u64) -> Result<(u64, u64)> {
    let m = 4 * n * p;
    if gcd(d, m as i64) != 1 {
        return Err(Error::Invalid(format!("{d} is not coprime to {m}")));
    }
    if gcd(p as i64, 4 * n as i64) != 1 {
        return Err(Error::Invalid(format!("p = {p} must be prime to 4N = {}", 4 * n)));
    }
    Ok((d.rem_euclid(p as i64) as u64, d.rem_euclid(4 * n as i64) as u64))
}

/// Index i of the weight-space component containing λτ^j: i ≡ λ + j mod (p − 1).
pub fn component_index(lambda: u64, j: i64, p: u64) -> u64 {
    (lambda as i64 + j).rem_euclid(p as i64 - 1) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn generator_choices() {
        let g: Vec<u64> = generators(12).iter().map(|g| g.value).collect();
        assert_eq!(g, vec![7, 5]);
        let g: Vec<(u64, u64)> = generators(16).iter().map(|g| (g.value, g.order)).collect();
        assert_eq!(g, vec![(15, 2), (5, 4)]);
        assert!(generators(1).is_empty());
        assert!(generators(2).is_empty());
    }

    #[test]
    fn eval_examples() {
        let chi3 = quadratic(-3);
        assert_eq!(chi3.label(), "3:1");
        assert_eq!(chi3.eval(2), CycloElem::from_int(-1));
        assert_eq!(chi3.eval(6), CycloElem::from_int(0));
        let one = DirichletChar::trivial(1);
        assert_eq!(one.eval(17), CycloElem::from_int(1));
        assert_eq!(quadratic(-4).label(), "4:1");
        assert_eq!(chi3.mul(&quadratic(-4)).label(), "12:1,1");
    }

    #[test]
    fn teichmuller_examples() {
        let t3 = teichmuller(3).unwrap();
        assert_eq!(t3, quadratic(-3));
        let t5 = teichmuller(5).unwrap();
        assert_eq!(t5.eval(2), CycloElem::root_of_unity(4, 1));
        assert_eq!(t5.mul(&t5), DirichletChar::kronecker(5, 5).unwrap());
        assert!(teichmuller(2).is_err() && teichmuller(9).is_err());
        assert!(t5.pow(4).is_trivial());
    }

    #[test]
    fn products_and_extension() {
        let c3 = quadratic(-3);
        assert!(c3.mul(&c3).is_trivial());
        let ext = quadratic(-4).mul(&DirichletChar::trivial(3));
        assert_eq!(ext.modulus(), 12);
        for a in 0..24 {
            if gcd(a, 12) == 1 {
                assert_eq!(ext.eval(a), quadratic(-4).eval(a));
            }
        }
        assert_eq!(ext.conductor(), 4);
        assert_eq!(ext.primitive(), quadratic(-4));
    }

    #[test]
    fn labels_round_trip() {
        for chi in DirichletChar::all(36) {
            assert_eq!(chi.label().parse::<DirichletChar>().unwrap(), chi);
            let n = chi.conrey_index();
            assert_eq!(DirichletChar::from_conrey(36, n).unwrap(), chi);
            assert_eq!(format!("36.{n}").parse::<DirichletChar>().unwrap(), chi);
        }
        assert!("12:1".parse::<DirichletChar>().is_err());
        assert!("x:1".parse::<DirichletChar>().is_err());
        assert_eq!("1:".parse::<DirichletChar>().unwrap(), DirichletChar::trivial(1));
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker_symbol(-1, 3), -1);
        assert_eq!(kronecker_symbol(-1, 5), 1);
        assert_eq!(kronecker_symbol(5, 11), 1);
        assert_eq!(crt_split(7, 1, 5).unwrap(), (2, 3));
        assert_eq!(crt_split(1, 7, 3).unwrap(), (1, 1));
        assert_eq!(crt_split(11, 3, 5).unwrap(), (1, 11));
        assert!(crt_split(10, 1, 5).is_err());
        assert_eq!(component_index(1, 0, 5), 1);
        assert_eq!(component_index(2, 3, 5), 1);
        assert_eq!(component_index(0, 0, 7), 0);
    }

    #[test]
    fn quadratic_symbol_factorization() {
        // (p/·) = (−1/·)^{(p−1)/2} τ^{(p−1)/2} on units mod 4p
        for p in [3u64, 5, 7, 11, 13] {
            let tau = teichmuller(p).unwrap();
            let lhs = DirichletChar::kronecker(p as i64, 4 * p).unwrap();
            let h = ((p - 1) / 2) as i64;
            let rhs = quadratic(-4).pow(h).mul(&tau.pow(h));
            assert_eq!(lhs, rhs.extend(4 * p).unwrap());
        }
    }

    proptest! {
        #[test]
        fn multiplicative_and_orthogonal(m in 1u64..80, seed in any::<u64>()) {
            let all = DirichletChar::all(m);
            let chi = &all[(seed % all.len() as u64) as usize];
            for a in 0..m as i64 {
                for b in 0..m as i64 {
                    prop_assert_eq!(chi.eval(a * b), chi.eval(a).mul(&chi.eval(b)));
                }
            }
            if !chi.is_trivial() {
                let s = (1..=m as i64).fold(CycloElem::from_int(0), |acc, a| acc.add(&chi.eval(a)));
                prop_assert!(s.is_zero());
            }
        }

        #[test]
        fn component_laws(p in prop::sample::select(vec![3u64, 5, 7, 11, 13]), lambda in 0u64..20, j in 0i64..12) {
            let h = (p - 1) / 2;
            prop_assert_eq!(component_index(2 * lambda, 2 * j, p), 2 * component_index(lambda, j, p) % (p - 1));
            prop_assert_eq!(component_index(lambda, j + h as i64, p), (component_index(lambda, j, p) + h) % (p - 1));
        }
    }
}
