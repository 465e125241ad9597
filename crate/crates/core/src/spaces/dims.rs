//! Closed-form dimensions, independent of any basis construction.

use crate::arith::numtheory::{divisors, factorize, gamma0_index, gcd, sigma0};
use crate::arith::{CycloElem, Rational};
use crate::dirichlet::DirichletChar;
use crate::error::{Error, Result};

/// Dimension of M_{k2/2} or S_{k2/2} at level M with character ε.
///
/// Integral weight uses the Cohen–Oesterlé formula plus the Eisenstein count;
/// half-integral weight (θ-multiplier convention, 4 | M) uses Riemann–Roch on
/// X0(M) with the cusp parameters of the multiplier, corrected at weight 3/2
/// by the Serre–Stark count of weight 1/2 forms.
pub fn dimension_oracle(k2: u64, level: u64, eps: &DirichletChar, cuspidal: bool) -> Result<usize> {
    let eps = if eps.modulus() == level {
        eps.clone()
    } else {
        eps.extend(level)?
    };
    if k2 % 2 == 0 {
        let k = k2 / 2;
        if k < 2 {
            return Err(Error::Invalid("integral weight must be at least 2".into()));
        }
        if eps.is_even() != (k % 2 == 0) {
            return Ok(0);
        }
        let s = cusp_dim_integral(k, level, &eps);
        Ok(if cuspidal { s } else { s + eisenstein_dim(k, level, &eps) })
    } else {
        if k2 < 3 {
            return Err(Error::Invalid("half-integral weight must be at least 3/2".into()));
        }
        if level % 4 != 0 {
            return Err(Error::Invalid(format!("half-integral level {level} must be divisible by 4")));
        }
        if !eps.is_even() {
            return Ok(0);
        }
        Ok(half_dim(k2, level, &eps, cuspidal))
    }
}

fn cyclo_sum_to_rational(s: &CycloElem) -> Rational {
    s.as_rational().expect("character sums over ±x pairs are rational")
}

fn cusp_dim_integral(k: u64, n: u64, eps: &DirichletChar) -> usize {
    let idx = gamma0_index(n);
    let cond = eps.conductor();
    let mut prod = Rational::one();
    for (p, r) in factorize(n) {
        let s = factorize(cond).iter().find(|(q, _)| *q == p).map_or(0, |x| x.1);
        let lam = if 2 * s <= r {
            if r % 2 == 0 {
                p.pow(r / 2) + p.pow(r / 2 - 1)
            } else {
                2 * p.pow((r - 1) / 2)
            }
        } else {
            2 * p.pow(r - s)
        };
        prod = prod.mul(&Rational::from_int(lam as i64));
    }
    let gamma4 = match k % 4 {
        2 => Rational::new(-1, 4),
        0 => Rational::new(1, 4),
        _ => Rational::zero(),
    };
    let gamma3 = match k % 3 {
        2 => Rational::new(-1, 3),
        0 => Rational::new(1, 3),
        _ => Rational::zero(),
    };
    let mut s4 = CycloElem::from_int(0);
    let mut s3 = CycloElem::from_int(0);
    for x in 0..n.max(1) {
        let x = x as i64;
        let ni = n as i64;
        if (x * x + 1) % ni == 0 {
            s4 = s4.add(&eps.eval(x));
        }
        if (x * x + x + 1) % ni == 0 {
            s3 = s3.add(&eps.eval(x));
        }
    }
    let mut d = Rational::new(k as i64 - 1, 12)
        .mul(&Rational::from_int(idx as i64))
        .sub(&prod.mul(&Rational::new(1, 2)))
        .add(&gamma4.mul(&cyclo_sum_to_rational(&s4)))
        .add(&gamma3.mul(&cyclo_sum_to_rational(&s3)));
    if k == 2 && eps.is_trivial() {
        d = d.add(&Rational::one());
    }
    as_dim(&d)
}

fn as_dim(d: &Rational) -> usize {
    assert!(d.is_integer() && d.signum() >= 0, "dimension formula produced {d}");
    d.as_i64().unwrap() as usize
}

/// Primitive characters of every conductor dividing `n`.
pub fn primitive_characters(n: u64) -> Vec<DirichletChar> {
    divisors(n)
        .into_iter()
        .flat_map(|u| DirichletChar::all(u).into_iter().filter(|c| c.is_primitive()))
        .collect()
}

/// Pairs (χ, ψ) of primitive characters with cond(χ)·cond(ψ) | n and χψ = ε mod n.
pub fn eisenstein_pairs(n: u64, eps: &DirichletChar) -> Vec<(DirichletChar, DirichletChar)> {
    let mut out = Vec::new();
    for chi in DirichletChar::all(n) {
        let a = chi.primitive();
        let b = eps.mul(&chi.conj()).primitive();
        if n % (a.modulus() * b.modulus()) == 0 {
            out.push((a, b));
        }
    }
    out
}

fn eisenstein_dim(k: u64, n: u64, eps: &DirichletChar) -> usize {
    let mut d: usize = eisenstein_pairs(n, eps)
        .iter()
        .map(|(a, b)| sigma0(n / (a.modulus() * b.modulus())) as usize)
        .sum();
    if k == 2 && eps.is_trivial() {
        d -= 1;
    }
    d
}

/// Cusps of Γ0(n) as (denominator c | n, numerator class a, width).
pub fn cusps(n: u64) -> Vec<(u64, u64, u64)> {
    let mut out = Vec::new();
    for c in divisors(n) {
        let g = gcd(c as i64, (n / c) as i64) as u64;
        let w = n / gcd((c * c) as i64, n as i64) as u64;
        for a in 1..=g {
            if gcd(a as i64, g as i64) == 1 {
                out.push((c, a, w));
            }
        }
    }
    out
}

/// Fractional order at each cusp forced by the weight k2/2 multiplier times ε.
fn cusp_parameters(k2: u64, n: u64, eps: &DirichletChar) -> Vec<Rational> {
    cusps(n)
        .into_iter()
        .map(|(c, a, w)| {
            let g = gcd(c as i64, (n / c) as i64) as u64;
            let gen = 1 + a * (n / g);
            let (e, m) = eps.value_exp(gen as i64).expect("stabilizer entry is a unit");
            let mut r = Rational::new(e as i64, m as i64);
            if c % 4 == 2 {
                r = r.add(&Rational::new((k2 * w) as i64, 4));
            }
            r.sub(&Rational::from_bigs(r.floor(), 1.into()))
        })
        .collect()
}

fn half_dim(k2: u64, n: u64, eps: &DirichletChar, cuspidal: bool) -> usize {
    let mu = Rational::from_int(gamma0_index(n) as i64);
    let kappas = cusp_parameters(k2, n, eps);
    let h = kappas.len() as i64;
    let genus = Rational::one()
        .add(&mu.mul(&Rational::new(1, 12)))
        .sub(&Rational::new(h, 2));
    let mut deg = Rational::new(k2 as i64, 24).mul(&mu);
    for kap in &kappas {
        deg = deg.sub(kap);
    }
    if cuspidal {
        deg = deg.sub(&Rational::from_int(kappas.iter().filter(|k| k.is_zero()).count() as i64));
    }
    let mut d = deg.sub(&genus).add(&Rational::one());
    if k2 == 3 {
        let dual = weight_half_dim(n, &eps.conj(), !cuspidal);
        d = d.add(&Rational::from_int(dual as i64));
    }
    as_dim(&d)
}

/// Dimension of M_{1/2}(n, χ) or S_{1/2}(n, χ) by counting theta series
/// Σ ψ(m) q^{t m²} with ψ even primitive of conductor r, 4r²t | n, χ = ψ·(t/·).
pub fn weight_half_dim(n: u64, chi: &DirichletChar, cuspidal: bool) -> usize {
    let mut count = 0;
    for psi in primitive_characters(n) {
        if !psi.is_even() {
            continue;
        }
        let r = psi.modulus();
        if n % (4 * r * r) != 0 {
            continue;
        }
        if cuspidal && totally_even(&psi) {
            continue;
        }
        for t in divisors(n / (4 * r * r)) {
            let kron = DirichletChar::kronecker(t as i64, n).expect("(t/.) is periodic mod 4t");
            if psi.extend(n).unwrap().mul(&kron) == *chi {
                count += 1;
            }
        }
    }
    count
}

fn totally_even(psi: &DirichletChar) -> bool {
    psi.prime_components().iter().all(|(_, c)| c.is_even())
}
