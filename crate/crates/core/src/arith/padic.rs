//! p-adic valuations, Newton polygons and slope factorization.
//!
//! Slope factors of a polynomial over Q are in general only defined over
//! Q_p. When every Q-irreducible factor has a single slope the factor is
//! returned exactly; otherwise it is computed by Hensel lifting in a totally
//! ramified extension Z_p[π], π^b = p, and returned as a rational
//! approximant together with the p-adic precision to which the product of
//! all slope factors reproduces the input.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;

use super::factor::factor;
use super::numtheory::is_prime;
use super::{Poly, Rational};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Valuation {
    Finite(Rational),
    Infinite,
}

impl Valuation {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Valuation::Finite(r) => Some(r),
            Valuation::Infinite => None,
        }
    }
}

pub fn padic_valuation(x: &Rational, p: u64) -> Result<Valuation> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    Ok(match x.valuation(p) {
        Some(v) => Valuation::Finite(Rational::from_int(v)),
        None => Valuation::Infinite,
    })
}

/// Lower convex hull of the points (i, v_p(c_i)).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NewtonPolygon {
    pub prime: u64,
    pub vertices: Vec<(usize, Rational)>,
    /// Distinct slopes, increasing, with multiplicities.
    pub slopes: Vec<(Rational, usize)>,
}

impl NewtonPolygon {
    /// Slopes repeated by multiplicity.
    pub fn slope_multiset(&self) -> Vec<Rational> {
        self.slopes
            .iter()
            .flat_map(|(s, m)| std::iter::repeat_n(s.clone(), *m))
            .collect()
    }

    pub fn is_pure(&self) -> bool {
        self.slopes.len() <= 1
    }

    pub fn multiplicity(&self, sigma: &Rational) -> usize {
        self.slopes
            .iter()
            .find(|(s, _)| s == sigma)
            .map_or(0, |(_, m)| *m)
    }
}

pub fn newton_polygon(f: &Poly<Rational>, p: u64) -> Result<NewtonPolygon> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if f.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let pts: Vec<(usize, Rational)> = f
        .coeffs()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.valuation(p).map(|v| (i, Rational::from_int(v))))
        .collect();
    let mut hull: Vec<(usize, Rational)> = Vec::new();
    for pt in pts {
        while hull.len() >= 2 {
            let (x1, y1) = &hull[hull.len() - 2];
            let (x2, y2) = &hull[hull.len() - 1];
            // keep only strict left turns
            let cross = Rational::from_int((x2 - x1) as i64)
                .mul(&pt.1.sub(y1))
                .sub(&y2.sub(y1).mul(&Rational::from_int((pt.0 - x1) as i64)));
            if cross.signum() <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let slopes = hull
        .windows(2)
        .map(|w| {
            let len = w[1].0 - w[0].0;
            (w[1].1.sub(&w[0].1).div(&Rational::from_int(len as i64)), len)
        })
        .collect();
    Ok(NewtonPolygon {
        prime: p,
        vertices: hull,
        slopes,
    })
}

/// The slope-σ factor of a Fredholm polynomial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeFactor {
    pub poly: Poly<Rational>,
    /// `None` when `poly` is the exact factor over Q. Otherwise `poly` is a
    /// rational approximant of a factor over Q_p and the product of all
    /// slope factors agrees with the input modulo p^precision.
    pub precision: Option<i64>,
}

impl SlopeFactor {
    pub fn is_exact(&self) -> bool {
        self.precision.is_none()
    }
}

fn check_fredholm(f: &Poly<Rational>) -> Result<()> {
    if !f.coeff(0).is_one() {
        return Err(Error::NotFredholm(f.coeff(0).to_string()));
    }
    Ok(())
}

/// Target p-adic precision for approximate slope factors.
pub const SLOPE_DIGITS: i64 = 24;

/// F^σ: the factor of `f` (with f(0) = 1) whose reciprocal roots all have valuation σ.
pub fn pure_slope_factor(f: &Poly<Rational>, p: u64, sigma: &Rational) -> Result<SlopeFactor> {
    let all = slope_factorization(f, p)?;
    Ok(all
        .into_iter()
        .find(|(s, _)| s == sigma)
        .map(|(_, g)| g)
        .unwrap_or(SlopeFactor {
            poly: Poly::one(),
            precision: None,
        }))
}

/// All slope factors of `f`, in increasing slope order.
pub fn slope_factorization(f: &Poly<Rational>, p: u64) -> Result<Vec<(Rational, SlopeFactor)>> {
    check_fredholm(f)?;
    let np = newton_polygon(f, p)?;
    if np.slopes.is_empty() {
        return Ok(vec![]);
    }
    if np.slopes.len() == 1 {
        let s = np.slopes[0].0.clone();
        return Ok(vec![(s, SlopeFactor { poly: f.clone(), precision: None })]);
    }
    // exact path: group Q-irreducible factors by their (single) slope
    let mut groups: Vec<(Rational, Poly<Rational>)> =
        np.slopes.iter().map(|(s, _)| (s.clone(), Poly::one())).collect();
    let mut mixed = false;
    for (g, m) in factor(f) {
        let g = g.normalize();
        let gp = newton_polygon(&g, p)?;
        if gp.slopes.len() != 1 {
            mixed = true;
            break;
        }
        let slot = groups.iter_mut().find(|(s, _)| *s == gp.slopes[0].0).expect("slope of a factor");
        slot.1 = slot.1.mul(&g.pow(m));
    }
    if !mixed {
        return Ok(groups
            .into_iter()
            .map(|(s, g)| (s, SlopeFactor { poly: g, precision: None }))
            .collect());
    }
    let mut work = SLOPE_DIGITS * 2 + 20;
    for _ in 0..4 {
        let parts = padic_slope_split(f, p, &np, work);
        let prod = parts.iter().fold(Poly::one(), |acc: Poly<Rational>, g| acc.mul(g));
        let diff = prod.sub(f);
        let prec = diff
            .coeffs()
            .iter()
            .filter_map(|c| c.valuation(p))
            .min()
            .unwrap_or(i64::MAX / 4);
        if prec >= SLOPE_DIGITS {
            return Ok(np
                .slopes
                .iter()
                .zip(parts)
                .map(|((s, _), g)| (s.clone(), SlopeFactor { poly: g, precision: Some(prec) }))
                .collect());
        }
        work *= 2;
    }
    Err(Error::Invariant("p-adic slope factorization did not converge".into()))
}

/// Split `f` at every vertex of its Newton polygon; factors returned in slope order.
fn padic_slope_split(f: &Poly<Rational>, p: u64, np: &NewtonPolygon, digits: i64) -> Vec<Poly<Rational>> {
    let mut out = Vec::new();
    let mut rest = f.clone();
    for k in 0..np.slopes.len() - 1 {
        let t = np.slopes[k].0.add(&np.slopes[k + 1].0).div(&Rational::from_int(2));
        let (left, right) = split_at_slope(&rest, p, &t, digits);
        out.push(left);
        rest = right;
    }
    out.push(rest);
    out
}

/// Arithmetic in Z_p[π]/(π^b − p) modulo p^n.
struct Ramified {
    p: BigInt,
    b: usize,
    pn: BigInt,
    n: i64,
}

type RElem = Vec<BigInt>;

impl Ramified {
    fn zero(&self) -> RElem {
        vec![BigInt::zero(); self.b]
    }

    fn reduce(&self, x: &mut RElem) {
        for c in x.iter_mut() {
            *c = c.mod_floor(&self.pn);
        }
    }

    fn is_zero(&self, x: &RElem) -> bool {
        x.iter().all(Zero::is_zero)
    }

    fn add(&self, x: &RElem, y: &RElem) -> RElem {
        let mut r: RElem = x.iter().zip(y).map(|(a, b)| a + b).collect();
        self.reduce(&mut r);
        r
    }

    fn sub(&self, x: &RElem, y: &RElem) -> RElem {
        let mut r: RElem = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.reduce(&mut r);
        r
    }

    fn mul(&self, x: &RElem, y: &RElem) -> RElem {
        let b = self.b;
        let mut acc = vec![BigInt::zero(); 2 * b];
        for (i, a) in x.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, c) in y.iter().enumerate() {
                acc[i + j] += a * c;
            }
        }
        let mut r = self.zero();
        for (k, c) in acc.into_iter().enumerate() {
            if k < b {
                r[k] += c;
            } else {
                r[k - b] += c * &self.p;
            }
        }
        self.reduce(&mut r);
        r
    }

    /// π^e for e >= 0.
    fn pi_pow(&self, e: i64) -> RElem {
        let mut r = self.zero();
        let q = e / self.b as i64;
        if q < self.n {
            r[(e % self.b as i64) as usize] = self.p.pow(q as u32);
        }
        r
    }

    fn scalar(&self, c: BigInt) -> RElem {
        let mut r = self.zero();
        r[0] = c.mod_floor(&self.pn);
        r
    }

    /// π-adic valuation; `None` for zero.
    fn val(&self, x: &RElem) -> Option<i64> {
        x.iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| {
                let mut v = 0i64;
                let mut c = c.clone();
                while (&c % &self.p).is_zero() {
                    c /= &self.p;
                    v += 1;
                }
                v * self.b as i64 + i as i64
            })
            .min()
    }

    /// x / π^k, assuming v(x) >= k (loses precision at the top).
    fn shift_down(&self, x: &RElem, k: i64) -> RElem {
        let mut r = x.clone();
        for _ in 0..k {
            let c0 = r[0].clone();
            for i in 0..self.b - 1 {
                r[i] = r[i + 1].clone();
            }
            r[self.b - 1] = c0 / &self.p;
        }
        r
    }

    fn inv_unit(&self, u: &RElem) -> RElem {
        let c0inv = u[0].modinv(&self.pn).expect("unit");
        let mut y = self.scalar(c0inv);
        let two = self.scalar(BigInt::from(2));
        for _ in 0..(2 + (self.n as usize * self.b).ilog2() as usize + 2) {
            y = self.mul(&y, &self.sub(&two, &self.mul(u, &y)));
        }
        y
    }

    fn from_rational(&self, x: &Rational) -> RElem {
        let num = x.numer().mod_floor(&self.pn);
        let den = x.denom().modinv(&self.pn).expect("denominator prime to p");
        self.scalar(num * den)
    }
}

fn rpoly_divrem_monic(r: &Ramified, f: &[RElem], g: &[RElem]) -> (Vec<RElem>, Vec<RElem>) {
    let dg = g.len() - 1;
    let mut rem = f.to_vec();
    if rem.len() <= dg {
        return (vec![], rem);
    }
    let mut quo = vec![r.zero(); rem.len() - dg];
    for i in (0..quo.len()).rev() {
        let c = rem[i + dg].clone();
        if !r.is_zero(&c) {
            for (j, y) in g.iter().enumerate() {
                rem[i + j] = r.sub(&rem[i + j], &r.mul(&c, y));
            }
        }
        quo[i] = c;
    }
    rem.truncate(dg);
    (quo, rem)
}

/// Factor f = L·R over Q_p where L collects reciprocal roots of valuation
/// below `t` and R those above; both normalized to constant term 1.
fn split_at_slope(f: &Poly<Rational>, p: u64, t: &Rational, digits: i64) -> (Poly<Rational>, Poly<Rational>) {
    let b = t.denom().to_string().parse::<usize>().expect("small denominator");
    let a = t.numer().to_string().parse::<i64>().expect("small numerator");
    let ring = Ramified {
        p: BigInt::from(p),
        b,
        pn: BigInt::from(p).pow(digits as u32),
        n: digits,
    };
    let n = f.degree().unwrap();
    // sheared valuations w_i = b·v(a_i) − a·i
    let w: Vec<Option<i64>> = (0..=n)
        .map(|i| f.coeff(i).valuation(p).map(|v| b as i64 * v - a * i as i64))
        .collect();
    let wmin = w.iter().flatten().copied().min().unwrap();
    let s = w.iter().position(|x| *x == Some(wmin)).unwrap();
    debug_assert_eq!(w.iter().filter(|x| **x == Some(wmin)).count(), 1);
    let pb = BigInt::from(p);
    let coeffs: Vec<RElem> = (0..=n)
        .map(|i| match w[i] {
            None => ring.zero(),
            Some(wi) => {
                let c = f.coeff(i);
                let v = c.valuation(p).unwrap();
                let unit = if v >= 0 {
                    Rational::from_bigs(c.numer() / pb.pow(v as u32), c.denom())
                } else {
                    Rational::from_bigs(c.numer(), c.denom() / pb.pow((-v) as u32))
                };
                let u = ring.from_rational(&unit);
                ring.mul(&u, &ring.pi_pow(wi - wmin))
            }
        })
        .collect();
    let inv_s = ring.inv_unit(&coeffs[s]);
    let ft: Vec<RElem> = coeffs.iter().map(|c| ring.mul(c, &inv_s)).collect();

    // linear Hensel iteration towards ft = P·V with P monic of degree s
    let mut pp: Vec<RElem> = (0..=s).map(|i| if i == s { ring.scalar(BigInt::one()) } else { ring.zero() }).collect();
    let max_iter = (digits as usize) * b + 10;
    let mut quo = Vec::new();
    for _ in 0..max_iter {
        let (q, r) = rpoly_divrem_monic(&ring, &ft, &pp);
        quo = q;
        if r.iter().all(|c| ring.is_zero(c)) {
            break;
        }
        let c0inv = ring.inv_unit(&quo[0]);
        for (i, ri) in r.iter().enumerate() {
            pp[i] = ring.add(&pp[i], &ring.mul(ri, &c0inv));
        }
    }
    let unshear = |poly: &[RElem]| -> Poly<Rational> {
        let v0 = ring.val(&poly[0]).expect("nonzero constant term");
        let u0 = ring.inv_unit(&ring.shift_down(&poly[0], v0));
        let limit = digits * b as i64 / 2;
        let out: Vec<Rational> = poly
            .iter()
            .enumerate()
            .map(|(i, c)| match ring.val(c) {
                Some(vc) if vc < limit + v0 => {
                    let e = vc + a * i as i64 - v0;
                    let unit = ring.mul(&ring.shift_down(c, vc), &u0);
                    if e.rem_euclid(b as i64) != 0 {
                        return Rational::zero();
                    }
                    let mut x = Rational::from(symmetric(&unit[0], &ring.pn));
                    let k = e / b as i64;
                    x = x.mul(&Rational::from_int(p as i64).pow(k));
                    x
                }
                _ => Rational::zero(),
            })
            .collect();
        Poly::new(out)
    };
    (unshear(&pp), unshear(&quo))
}

fn symmetric(x: &BigInt, m: &BigInt) -> BigInt {
    let r = x.mod_floor(m);
    if &r * 2 > *m {
        r - m
    } else {
        r
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
    fn valuation_examples() {
        assert_eq!(padic_valuation(&q(45, 1), 3).unwrap(), Valuation::Finite(q(2, 1)));
        assert_eq!(padic_valuation(&q(1, 5), 5).unwrap(), Valuation::Finite(q(-1, 1)));
        assert_eq!(padic_valuation(&q(0, 1), 7).unwrap(), Valuation::Infinite);
        assert_eq!(padic_valuation(&q(3, 1), 4), Err(Error::NotPrime(4)));
    }

    #[test]
    fn polygon_examples() {
        let np = newton_polygon(&p(&[1, -6, 9]), 3).unwrap();
        assert_eq!(np.slope_multiset(), vec![q(1, 1), q(1, 1)]);
        assert_eq!(newton_polygon(&p(&[1, 1]), 7).unwrap().slope_multiset(), vec![q(0, 1)]);
        assert_eq!(newton_polygon(&p(&[1, 5, 1]), 5).unwrap().slope_multiset(), vec![q(0, 1), q(0, 1)]);
        assert_eq!(newton_polygon(&Poly::zero(), 5), Err(Error::ZeroPolynomial));
    }

    #[test]
    fn slope_factor_examples() {
        let f = p(&[1, -1]).mul(&p(&[1, -9]));
        let g = pure_slope_factor(&f, 3, &q(2, 1)).unwrap();
        assert_eq!(g.poly, p(&[1, -9]));
        assert!(g.is_exact());
        let h = p(&[1, -6, 9]);
        assert_eq!(pure_slope_factor(&h, 3, &q(1, 1)).unwrap().poly, h);
        assert_eq!(pure_slope_factor(&p(&[1, -1]), 5, &q(1, 1)).unwrap().poly, Poly::one());
        assert!(matches!(pure_slope_factor(&p(&[2, 1]), 5, &q(0, 1)), Err(Error::NotFredholm(_))));
    }

    #[test]
    fn mixed_irreducible_splits_padically() {
        // irreducible over Q, slopes {0, 1} at p = 3
        let f = p(&[1, 1, 3]);
        let fs = slope_factorization(&f, 3).unwrap();
        assert_eq!(fs.len(), 2);
        let prod = fs.iter().fold(Poly::one(), |acc: Poly<Rational>, (_, g)| acc.mul(&g.poly));
        let prec = fs[0].1.precision.unwrap();
        assert!(prec >= SLOPE_DIGITS);
        for c in prod.sub(&f).coeffs() {
            assert!(c.valuation(3).is_none_or(|v| v >= prec));
        }
        assert_eq!(newton_polygon(&fs[1].1.poly, 3).unwrap().slope_multiset(), vec![q(1, 1)]);
    }

    #[test]
    fn fractional_slopes_split() {
        // slopes 1/2 (twice) and 3/2 (twice), irreducible pieces mixed
        let f = p(&[1, 1, 3, 0, 0]).add(&p(&[0, 0, 0, 9, 81]));
        let np = newton_polygon(&f, 3).unwrap();
        let fs = slope_factorization(&f, 3).unwrap();
        assert_eq!(fs.len(), np.slopes.len());
        for (s, g) in &fs {
            let gp = newton_polygon(&g.poly, 3).unwrap();
            assert_eq!(gp.slopes.len(), 1);
            assert_eq!(&gp.slopes[0].0, s);
        }
    }

    fn fredholm_poly() -> impl Strategy<Value = Poly<Rational>> {
        (prop::collection::vec(-30i64..30, 1..8), prop::collection::vec(0u32..4, 8)).prop_map(|(c, e)| {
            let mut v = vec![1i64];
            for (i, x) in c.iter().enumerate() {
                v.push(x * 3i64.pow(e[i]));
            }
            if *v.last().unwrap() == 0 {
                *v.last_mut().unwrap() = 3;
            }
            p(&v)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(30))]
        #[test]
        fn factors_multiply_back(f in fredholm_poly(), g in fredholm_poly()) {
            let fs = slope_factorization(&f, 3).unwrap();
            let prod = fs.iter().fold(Poly::one(), |acc: Poly<Rational>, (_, h)| acc.mul(&h.poly));
            match fs.first().and_then(|x| x.1.precision) {
                None => prop_assert_eq!(prod, f.clone()),
                Some(k) => for c in prod.sub(&f).coeffs() {
                    prop_assert!(c.valuation(3).is_none_or(|v| v >= k));
                },
            }
            let mut a = newton_polygon(&f, 3).unwrap().slope_multiset();
            a.extend(newton_polygon(&g, 3).unwrap().slope_multiset());
            a.sort();
            prop_assert_eq!(newton_polygon(&f.mul(&g), 3).unwrap().slope_multiset(), a);
        }
    }
}
