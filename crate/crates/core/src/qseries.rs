//! Truncated q-expansions with cyclotomic coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::cyclo::ctx;
use crate::arith::numtheory::{gamma1_index_doubled, lcm};
use crate::arith::{CycloElem, Rational};
use crate::dirichlet::DirichletChar;
use crate::error::{Error, Result};

/// Σ a_n qⁿ known for n < prec. Nonzero coefficients only are stored, all
/// written in Q(ζ_order).
#[derive(Clone)]
pub struct QSeries {
    coeffs: BTreeMap<usize, CycloElem>,
    prec: usize,
    order: u64,
}

impl QSeries {
    pub fn zero(prec: usize) -> QSeries {
        QSeries {
            coeffs: BTreeMap::new(),
            prec,
            order: 1,
        }
    }

    pub fn one(prec: usize) -> QSeries {
        QSeries::monomial(0, CycloElem::from_int(1), prec)
    }

    pub fn monomial(n: usize, c: CycloElem, prec: usize) -> QSeries {
        let mut f = QSeries::zero(prec);
        f.set(n, c);
        f
    }

    /// Series with the given coefficients a_0, a_1, …; precision is their count.
    pub fn from_coeffs(coeffs: Vec<CycloElem>) -> QSeries {
        let prec = coeffs.len();
        let mut f = QSeries::zero(prec);
        for (n, c) in coeffs.into_iter().enumerate() {
            f.set(n, c);
        }
        f
    }

    pub fn from_ints(coeffs: &[i64]) -> QSeries {
        QSeries::from_coeffs(coeffs.iter().map(|&c| CycloElem::from_int(c)).collect())
    }

    pub fn from_rationals(coeffs: &[Rational]) -> QSeries {
        QSeries::from_coeffs(coeffs.iter().map(|c| CycloElem::rational(c.clone())).collect())
    }

    pub fn prec(&self) -> usize {
        self.prec
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// Store a coefficient; exponents at or beyond the precision are dropped.
    pub fn set(&mut self, n: usize, c: CycloElem) {
        if n >= self.prec {
            return;
        }
        if c.is_zero() {
            self.coeffs.remove(&n);
            return;
        }
        let m = lcm(self.order, c.order());
        if m != self.order {
            self.promote_in_place(m);
        }
        self.coeffs.insert(n, c.promote(m));
    }

    fn promote_in_place(&mut self, m: u64) {
        if m == self.order {
            return;
        }
        for v in self.coeffs.values_mut() {
            *v = v.promote(m);
        }
        self.order = m;
    }

    /// The series rewritten over Q(ζ_m) for a multiple m of its order.
    pub fn promote(&self, m: u64) -> QSeries {
        let mut f = self.clone();
        f.promote_in_place(m);
        f
    }

    /// a_n; panics when n is beyond the known precision.
    pub fn coeff(&self, n: usize) -> CycloElem {
        self.try_coeff(n).unwrap()
    }

    pub fn try_coeff(&self, n: usize) -> Result<CycloElem> {
        if n >= self.prec {
            return Err(Error::Precision {
                need: n + 1,
                have: self.prec,
            });
        }
        Ok(self
            .coeffs
            .get(&n)
            .cloned()
            .unwrap_or_else(|| CycloElem::from_int(0).promote(self.order)))
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (usize, &CycloElem)> {
        self.coeffs.iter().map(|(n, c)| (*n, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Smallest exponent with a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.keys().next().copied()
    }

    /// Coefficients a_0..a_{len−1}, all in Q(ζ_order).
    pub fn dense(&self, len: usize) -> Result<Vec<CycloElem>> {
        if len > self.prec {
            return Err(Error::Precision {
                need: len,
                have: self.prec,
            });
        }
        let z = CycloElem::from_int(0).promote(self.order);
        let mut out = vec![z; len];
        for (n, c) in self.coeffs.range(..len) {
            out[*n] = c.clone();
        }
        Ok(out)
    }

    pub fn truncate(&self, prec: usize) -> QSeries {
        let prec = prec.min(self.prec);
        QSeries {
            coeffs: self.coeffs.range(..prec).map(|(n, c)| (*n, c.clone())).collect(),
            prec,
            order: self.order,
        }
    }

    /// Equality of coefficients below the smaller precision.
    pub fn agrees_with(&self, o: &QSeries) -> bool {
        let b = self.prec.min(o.prec);
        let a: Vec<_> = self.coeffs.range(..b).collect();
        let c: Vec<_> = o.coeffs.range(..b).collect();
        a == c
    }

    /// First exponent below the common precision where the two differ.
    pub fn first_difference(&self, o: &QSeries) -> Option<usize> {
        let b = self.prec.min(o.prec);
        (0..b).find(|&n| self.coeffs.get(&n) != o.coeffs.get(&n))
    }

    pub fn add(&self, o: &QSeries) -> QSeries {
        let prec = self.prec.min(o.prec);
        let mut out = self.truncate(prec);
        for (n, c) in o.coeffs.range(..prec) {
            let v = match out.coeffs.get(n) {
                Some(x) => x.add(c),
                None => c.clone(),
            };
            out.set(*n, v);
        }
        out
    }

    pub fn neg(&self) -> QSeries {
        QSeries {
            coeffs: self.coeffs.iter().map(|(n, c)| (*n, c.neg())).collect(),
            prec: self.prec,
            order: self.order,
        }
    }

    pub fn sub(&self, o: &QSeries) -> QSeries {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &CycloElem) -> QSeries {
        let mut out = QSeries::zero(self.prec);
        out.order = lcm(self.order, c.order());
        for (n, x) in &self.coeffs {
            out.set(*n, x.mul(c));
        }
        out
    }

    pub fn scale_rational(&self, r: &Rational) -> QSeries {
        let mut out = QSeries::zero(self.prec);
        out.order = self.order;
        if r.is_zero() {
            return out;
        }
        out.coeffs = self.coeffs.iter().map(|(n, x)| (*n, x.scale(r))).collect();
        out
    }

    /// Truncated Cauchy product; precision is the smaller of the two.
    pub fn mul(&self, o: &QSeries) -> QSeries {
        let prec = self.prec.min(o.prec);
        let m = lcm(self.order, o.order);
        if let (Some(a), Some(b)) = (IntForm::of(self, m, prec), IntForm::of(o, m, prec)) {
            if let Some(p) = a.mul(&b, prec) {
                return p.to_series(m, prec);
            }
        }
        let a = self.promote(m);
        let b = o.promote(m);
        let mut acc: BTreeMap<usize, CycloElem> = BTreeMap::new();
        for (i, x) in a.coeffs.range(..prec) {
            for (j, y) in b.coeffs.range(..prec - i) {
                let v = x.mul(y);
                acc.entry(i + j).and_modify(|e| *e = e.add(&v)).or_insert(v);
            }
        }
        let mut out = QSeries::zero(prec);
        out.order = m;
        for (n, c) in acc {
            out.set(n, c);
        }
        out
    }

    pub fn pow(&self, e: u32) -> QSeries {
        let mut out = QSeries::one(self.prec);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// self / d for a divisor with nonzero constant term; sparse in d.
    pub fn div(&self, d: &QSeries) -> Result<QSeries> {
        let prec = self.prec.min(d.prec);
        let d0 = d.coeffs.get(&0).ok_or_else(|| Error::Invalid("divisor has zero constant term".into()))?;
        let inv0 = d0.inv();
        let m = lcm(self.order, d.order);
        let terms: Vec<(usize, CycloElem)> = d.coeffs.range(1..prec).map(|(n, c)| (*n, c.promote(m))).collect();
        let mut h: Vec<CycloElem> = Vec::with_capacity(prec);
        let zero = CycloElem::from_int(0).promote(m);
        for n in 0..prec {
            let mut acc = self.coeffs.get(&n).map(|c| c.promote(m)).unwrap_or_else(|| zero.clone());
            for (i, c) in &terms {
                if *i > n {
                    break;
                }
                let hv = &h[n - i];
                if !hv.is_zero() {
                    acc = acc.sub(&c.mul(hv));
                }
            }
            h.push(if acc.is_zero() { zero.clone() } else { acc.mul(&inv0) });
        }
        let mut out = QSeries::from_coeffs(h);
        out.promote_in_place(m);
        Ok(out)
    }

    pub fn inverse(&self) -> Result<QSeries> {
        QSeries::one(self.prec).div(self)
    }

    /// Σ a_{ℓn} qⁿ, precision ⌈prec/ℓ⌉.
    pub fn u_ell(&self, ell: usize) -> QSeries {
        assert!(ell >= 1);
        let prec = self.prec.div_ceil(ell);
        let mut out = QSeries::zero(prec);
        out.order = self.order;
        for (n, c) in &self.coeffs {
            if n % ell == 0 {
                out.coeffs.insert(n / ell, c.clone());
            }
        }
        out
    }

    /// Σ a_n q^{ℓn}, precision ℓ·prec; errors when that exceeds `ceiling`.
    pub fn v_ell(&self, ell: usize, ceiling: usize) -> Result<QSeries> {
        let prec = ell * self.prec;
        if prec > ceiling {
            return Err(Error::Precision {
                need: prec,
                have: ceiling,
            });
        }
        Ok(self.v_ell_to(ell, prec))
    }

    /// V_ℓ truncated to the requested precision (at most ℓ·prec).
    pub fn v_ell_to(&self, ell: usize, prec: usize) -> QSeries {
        assert!(ell >= 1);
        let prec = prec.min(ell * self.prec);
        QSeries {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(n, _)| **n * ell < prec)
                .map(|(n, c)| (n * ell, c.clone()))
                .collect(),
            prec,
            order: self.order,
        }
    }

    /// Apply a coefficient map a_n ↦ f(n) for n < prec.
    pub fn from_fn(prec: usize, f: impl Fn(usize) -> CycloElem) -> QSeries {
        let mut out = QSeries::zero(prec);
        for n in 0..prec {
            out.set(n, f(n));
        }
        out
    }

    /// True if every coefficient is rational.
    pub fn is_rational(&self) -> bool {
        self.coeffs.values().all(|c| c.as_rational().is_some())
    }
}

impl PartialEq for QSeries {
    fn eq(&self, o: &QSeries) -> bool {
        self.agrees_with(o)
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (n, c) in &self.coeffs {
            let s = c.to_string();
            let s = if s.contains(['+', ' ']) || (s.starts_with('-') && s[1..].contains('-')) {
                format!("({s})")
            } else {
                s
            };
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match n {
                0 => write!(f, "{s}")?,
                1 => write!(f, "{s}*q")?,
                _ => write!(f, "{s}*q^{n}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(q^{})", self.prec)
    }
}

impl fmt::Debug for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl serde::Serialize for QSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let coeffs: Vec<(usize, Vec<String>)> = self
            .coeffs
            .iter()
            .map(|(n, c)| (*n, c.coords().iter().map(|x| x.to_string()).collect()))
            .collect();
        let mut st = s.serialize_struct("QSeries", 3)?;
        st.serialize_field("prec", &self.prec)?;
        st.serialize_field("order", &self.order)?;
        st.serialize_field("coeffs", &coeffs)?;
        st.end()
    }
}

impl<'de> serde::Deserialize<'de> for QSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        struct Raw {
            prec: usize,
            order: u64,
            coeffs: Vec<(usize, Vec<String>)>,
        }
        let raw = Raw::deserialize(d)?;
        let phi = ctx(raw.order).phi;
        let mut out = QSeries::zero(raw.prec);
        out.order = raw.order;
        for (n, cs) in raw.coeffs {
            if cs.len() != phi {
                return Err(serde::de::Error::custom(format!("coefficient {n} has {} coordinates, expected {phi}", cs.len())));
            }
            let coords = cs
                .iter()
                .map(|x| x.parse::<Rational>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(serde::de::Error::custom)?;
            if n >= raw.prec {
                return Err(serde::de::Error::custom(format!("exponent {n} beyond precision {}", raw.prec)));
            }
            let c = CycloElem::from_coords(raw.order, coords);
            if !c.is_zero() {
                out.coeffs.insert(n, c);
            }
        }
        Ok(out)
    }
}

/// Dense integer form: coefficient n is coords[n] / den in the power basis of Q(ζ_m).
struct IntForm {
    den: BigInt,
    phi: usize,
    coords: Vec<i64>,
    max: f64,
}

impl IntForm {
    fn of(f: &QSeries, m: u64, prec: usize) -> Option<IntForm> {
        let f = f.promote(m);
        let phi = ctx(m).phi;
        let mut den = BigInt::one();
        for c in f.coeffs.range(..prec).map(|x| x.1) {
            for x in c.coords() {
                den = den.lcm(&x.denom());
            }
        }
        let mut coords = vec![0i64; prec * phi];
        let mut max = 0f64;
        for (n, c) in f.coeffs.range(..prec) {
            for (k, x) in c.coords().iter().enumerate() {
                let v = x.numer() * (&den / x.denom());
                let v = v.to_i64()?;
                max = max.max((v as f64).abs());
                coords[n * phi + k] = v;
            }
        }
        Some(IntForm { den, phi, coords, max })
    }

    fn mul(&self, o: &IntForm, prec: usize) -> Option<IntForm128> {
        let phi = self.phi;
        let width = 2 * phi - 1;
        // conservative overflow guard for the i128 accumulators
        if self.max * o.max * (prec as f64) * (phi as f64) > 1e36 {
            return None;
        }
        let mut acc = vec![0i128; prec * width];
        let nz_b: Vec<usize> = (0..prec).filter(|j| o.coords[j * phi..(j + 1) * phi].iter().any(|&x| x != 0)).collect();
        for i in 0..prec {
            let a = &self.coords[i * phi..(i + 1) * phi];
            if a.iter().all(|&x| x == 0) {
                continue;
            }
            for &j in &nz_b {
                if i + j >= prec {
                    break;
                }
                let b = &o.coords[j * phi..(j + 1) * phi];
                let out = &mut acc[(i + j) * width..(i + j + 1) * width];
                for (s, &x) in a.iter().enumerate() {
                    if x == 0 {
                        continue;
                    }
                    for (t, &y) in b.iter().enumerate() {
                        out[s + t] += x as i128 * y as i128;
                    }
                }
            }
        }
        Some(IntForm128 {
            den: &self.den * &o.den,
            phi,
            width,
            acc,
        })
    }
}

struct IntForm128 {
    den: BigInt,
    phi: usize,
    width: usize,
    acc: Vec<i128>,
}

impl IntForm128 {
    fn to_series(&self, m: u64, prec: usize) -> QSeries {
        let c = ctx(m);
        let mut out = QSeries::zero(prec);
        out.order = m;
        for n in 0..prec {
            let raw = &self.acc[n * self.width..(n + 1) * self.width];
            if raw.iter().all(|&x| x == 0) {
                continue;
            }
            let mut red: Vec<i128> = raw[..self.phi].to_vec();
            for (e, &x) in raw.iter().enumerate().skip(self.phi) {
                if x == 0 {
                    continue;
                }
                for (k, &t) in c.table[e % m as usize].iter().enumerate() {
                    red[k] += x * t as i128;
                }
            }
            if red.iter().all(|&x| x == 0) {
                continue;
            }
            let coords = red.into_iter().map(|x| ratio(x, &self.den)).collect();
            out.coeffs.insert(n, CycloElem::from_coords(m, coords));
        }
        out
    }
}

fn ratio(x: i128, den: &BigInt) -> Rational {
    if let (Some(d), true) = (den.to_i64(), x.abs() < i64::MAX as i128) {
        return Rational::new(x as i64, d);
    }
    Rational::from_bigs(BigInt::from(x), den.clone())
}

/// θ = Σ_{n∈Z} q^{n²}.
pub fn theta(prec: usize) -> QSeries {
    let mut f = QSeries::zero(prec);
    let mut n = 0usize;
    while n * n < prec {
        f.set(n * n, CycloElem::from_int(if n == 0 { 1 } else { 2 }));
        n += 1;
    }
    f
}

/// θ_ψ = ½ Σ_{n∈Z} ψ(n) n q^{n²} for odd ψ.
pub fn theta_psi(psi: &DirichletChar, prec: usize) -> Result<QSeries> {
    if psi.is_even() {
        return Err(Error::Parity(format!("θ_ψ needs an odd character, {} is even", psi.label())));
    }
    let mut f = QSeries::zero(prec);
    f.order = psi.order();
    let mut n = 1usize;
    while n * n < prec {
        let v = psi.eval(n as i64);
        if !v.is_zero() {
            f.set(n * n, v.scale(&Rational::from_int(n as i64)));
        }
        n += 1;
    }
    Ok(f)
}

/// Σ_{n∈Z} ψ(n) q^{tn²} for even ψ, the weight 1/2 theta series.
pub fn theta_even(psi: &DirichletChar, t: usize, prec: usize) -> Result<QSeries> {
    if !psi.is_even() {
        return Err(Error::Parity(format!("weight 1/2 theta needs an even character, {} is odd", psi.label())));
    }
    let mut f = QSeries::zero(prec);
    f.order = psi.order();
    f.set(0, psi.eval(0));
    let mut n = 1usize;
    while t * n * n < prec {
        f.set(t * n * n, psi.eval(n as i64).scale(&Rational::from_int(2)));
        n += 1;
    }
    Ok(f)
}

/// Bernoulli numbers B_0..B_n with B_1 = −1/2.
pub fn bernoulli_numbers(n: usize) -> Vec<Rational> {
    let mut b = vec![Rational::one()];
    for m in 1..=n {
        // Σ_{j=0}^{m} C(m+1, j) B_j = 0
        let mut s = Rational::zero();
        let mut binom = BigInt::one();
        for (j, bj) in b.iter().enumerate() {
            s = s.add(&bj.mul(&Rational::from_bigs(binom.clone(), BigInt::one())));
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        b.push(s.neg().div(&Rational::from_int(m as i64 + 1)));
    }
    b
}

/// B_k(x) evaluated at a rational.
fn bernoulli_poly(k: usize, x: &Rational, b: &[Rational]) -> Rational {
    let mut s = Rational::zero();
    let mut binom = BigInt::one();
    for j in 0..=k {
        s = s.add(&binom_r(&binom).mul(&b[j]).mul(&x.pow((k - j) as i64)));
        binom = binom * BigInt::from(k - j) / BigInt::from(j + 1);
    }
    s
}

fn binom_r(b: &BigInt) -> Rational {
    Rational::from_bigs(b.clone(), BigInt::one())
}

/// Generalized Bernoulli number B_{k,ψ} = f^{k−1} Σ_{a=1}^{f} ψ(a) B_k(a/f).
pub fn generalized_bernoulli(k: usize, psi: &DirichletChar) -> CycloElem {
    let f = psi.modulus();
    let b = bernoulli_numbers(k);
    let mut s = CycloElem::from_int(0);
    for a in 1..=f {
        let v = psi.eval(a as i64);
        if v.is_zero() {
            continue;
        }
        let bk = bernoulli_poly(k, &Rational::new(a as i64, f as i64), &b);
        s = s.add(&v.scale(&bk));
    }
    s.scale(&Rational::from_int(f as i64).pow(k as i64 - 1))
}

/// E_k(χ, ψ) = c_0 + Σ_{n≥1} (Σ_{d|n} ψ(d) χ(n/d) d^{k−1}) qⁿ for primitive χ, ψ.
pub fn eisenstein(chi: &DirichletChar, psi: &DirichletChar, k: u32, prec: usize) -> Result<QSeries> {
    if k == 0 {
        return Err(Error::Invalid("Eisenstein weight must be at least 1".into()));
    }
    let odd = !chi.mul(psi).is_even();
    if odd != (k % 2 == 1) {
        return Err(Error::Parity(format!(
            "(χψ)(−1) must be (−1)^{k} for χ = {}, ψ = {}",
            chi.label(),
            psi.label()
        )));
    }
    if !chi.is_primitive() || !psi.is_primitive() {
        return Err(Error::Invalid(format!(
            "Eisenstein characters must be primitive: {}, {}",
            chi.label(),
            psi.label()
        )));
    }
    let m = lcm(chi.order(), psi.order());
    let c = ctx(m);
    let phi = c.phi;
    let mut acc = vec![0i128; prec * phi];
    for d in 1..prec {
        let Some((a, oa)) = psi.value_exp(d as i64) else { continue };
        let w = (d as i128).pow(k - 1);
        let mut e = 1;
        while d * e < prec {
            if let Some((b, ob)) = chi.value_exp(e as i64) {
                let expo = (a * (m / oa) + b * (m / ob)) % m;
                let row = &c.table[expo as usize];
                let out = &mut acc[d * e * phi..(d * e + 1) * phi];
                for (s, &t) in row.iter().enumerate() {
                    out[s] += w * t as i128;
                }
            }
            e += 1;
        }
    }
    let one = BigInt::one();
    let mut f = QSeries::zero(prec);
    f.order = m;
    for n in 1..prec {
        let raw = &acc[n * phi..(n + 1) * phi];
        if raw.iter().any(|&x| x != 0) {
            f.coeffs
                .insert(n, CycloElem::from_coords(m, raw.iter().map(|&x| ratio(x, &one)).collect()));
        }
    }
    let c0 = if k == 1 {
        if chi.modulus() == 1 {
            generalized_bernoulli(1, psi).scale(&Rational::new(-1, 2))
        } else if psi.modulus() == 1 {
            generalized_bernoulli(1, chi).scale(&Rational::new(-1, 2))
        } else {
            CycloElem::from_int(0)
        }
    } else if chi.modulus() == 1 {
        generalized_bernoulli(k as usize, psi).scale(&Rational::new(-1, 2 * k as i64))
    } else {
        CycloElem::from_int(0)
    };
    f.set(0, c0);
    Ok(f)
}

/// Coefficient bound for forms of weight k2/2 on Γ1(M):
/// ⌈(k2/2)·I/12⌉ + 1 with I = M²∏(1 − 1/ℓ²).
pub fn sturm_bound(k2: u64, m: u64) -> usize {
    let index = gamma1_index_doubled(m);
    (k2 * index).div_ceil(24) as usize + 1
}

/// Bound for a fixed character: ⌈(k2/2)·[SL₂(Z) : Γ0(M)]/12⌉ + 1.
pub fn sturm_bound_gamma0(k2: u64, m: u64) -> usize {
    let index = crate::arith::numtheory::gamma0_index(m);
    (k2 * index).div_ceil(24) as usize + 1
}

/// Exact big-integer value of a rational coefficient, if integral.
pub fn integer_value(c: &CycloElem) -> Option<BigInt> {
    let r = c.as_rational()?;
    r.is_integer().then(|| r.numer())
}

/// Largest absolute numerator over all coordinates, a cheap size measure.
pub fn height(f: &QSeries) -> BigInt {
    f.nonzero()
        .flat_map(|(_, c)| c.coords().iter().map(|x| x.numer().abs()).collect::<Vec<_>>())
        .max()
        .unwrap_or_else(BigInt::zero)
}
