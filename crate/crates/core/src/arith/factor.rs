//! Factorization of polynomials over Q (Zassenhaus: modular factorization,
//! Hensel lifting, subset recombination).

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::numtheory::is_prime;
use super::{Poly, Rational};

/// Irreducible monic factors with multiplicities, sorted by degree then coefficients.
pub fn factor(f: &Poly<Rational>) -> Vec<(Poly<Rational>, u32)> {
    assert!(!f.is_zero(), "cannot factor the zero polynomial");
    let mut out = Vec::new();
    for (g, mult) in squarefree_decomposition(&f.monic()) {
        for h in factor_squarefree(&g) {
            out.push((h, mult));
        }
    }
    out.sort_by(|a, b| {
        a.0.degree()
            .cmp(&b.0.degree())
            .then_with(|| a.0.coeffs().cmp(b.0.coeffs()))
    });
    out
}

/// Yun's algorithm: monic `f = ∏ g_i^i` with the `g_i` squarefree and coprime.
pub fn squarefree_decomposition(f: &Poly<Rational>) -> Vec<(Poly<Rational>, u32)> {
    let mut out = Vec::new();
    if f.degree().unwrap_or(0) == 0 {
        return out;
    }
    let df = f.derivative();
    let a0 = f.gcd(&df);
    let mut b = f.div_rem(&a0).0;
    let mut c = df.div_rem(&a0).0;
    let mut d = c.sub(&b.derivative());
    let mut i = 1;
    while b.degree().unwrap_or(0) > 0 {
        let a = b.gcd(&d);
        if a.degree().unwrap_or(0) > 0 {
            out.push((a.monic(), i));
        }
        b = b.div_rem(&a).0;
        c = d.div_rem(&a).0;
        d = c.sub(&b.derivative());
        i += 1;
    }
    out
}

fn to_monic_rational(f: &[BigInt]) -> Poly<Rational> {
    Poly::new(f.iter().map(|c| Rational::from(c.clone())).collect()).monic()
}

/// Irreducible factors of a squarefree polynomial over Q.
pub fn factor_squarefree(f: &Poly<Rational>) -> Vec<Poly<Rational>> {
    let deg = f.degree().expect("nonzero");
    if deg == 0 {
        return vec![];
    }
    if deg == 1 {
        return vec![f.monic()];
    }
    let mut out = Vec::new();
    let mut ints = f.primitive_integer();
    if ints[0].is_zero() {
        out.push(Poly::x());
        ints.remove(0);
    }
    for g in zassenhaus(&ints) {
        out.push(to_monic_rational(&g));
    }
    out
}

// ---------- polynomials over F_p (constant term first, trimmed) ----------

type Fp = Vec<u64>;

fn trim(mut a: Fp) -> Fp {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn inv_p(a: u64, p: u64) -> u64 {
    super::numtheory::pow_mod(a, p - 2, p)
}

fn fp_sub(a: &Fp, b: &Fp, p: u64) -> Fp {
    let n = a.len().max(b.len());
    trim(
        (0..n)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y) % p
            })
            .collect(),
    )
}

fn fp_mul(a: &Fp, b: &Fp, p: u64) -> Fp {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mulmod(x, y, p)) % p;
        }
    }
    trim(out)
}

fn fp_divrem(a: &Fp, b: &Fp, p: u64) -> (Fp, Fp) {
    let db = b.len() - 1;
    if a.len() <= db {
        return (vec![], a.clone());
    }
    let inv = inv_p(b[db], p);
    let mut r = a.clone();
    let mut q = vec![0u64; a.len() - db];
    for i in (0..q.len()).rev() {
        let c = mulmod(r[i + db], inv, p);
        q[i] = c;
        if c != 0 {
            for (j, &y) in b.iter().enumerate() {
                r[i + j] = (r[i + j] + p - mulmod(c, y, p)) % p;
            }
        }
    }
    r.truncate(db);
    (trim(q), trim(r))
}

fn fp_monic(a: &Fp, p: u64) -> Fp {
    let inv = inv_p(*a.last().unwrap(), p);
    a.iter().map(|&x| mulmod(x, inv, p)).collect()
}

fn fp_gcd(a: &Fp, b: &Fp, p: u64) -> Fp {
    let (mut a, mut b) = (a.clone(), b.clone());
    while !b.is_empty() {
        let r = fp_divrem(&a, &b, p).1;
        a = b;
        b = r;
    }
    if a.is_empty() {
        a
    } else {
        fp_monic(&a, p)
    }
}

/// Extended gcd for coprime inputs: returns (s, t) with s a + t b = 1.
fn fp_xgcd(a: &Fp, b: &Fp, p: u64) -> (Fp, Fp) {
    let (mut r0, mut r1) = (a.clone(), b.clone());
    let (mut s0, mut s1) = (vec![1u64], vec![]);
    let (mut t0, mut t1) = (vec![], vec![1u64]);
    while !r1.is_empty() {
        let (q, r) = fp_divrem(&r0, &r1, p);
        r0 = std::mem::replace(&mut r1, r);
        let s2 = fp_sub(&s0, &fp_mul(&q, &s1, p), p);
        s0 = std::mem::replace(&mut s1, s2);
        let t2 = fp_sub(&t0, &fp_mul(&q, &t1, p), p);
        t0 = std::mem::replace(&mut t1, t2);
    }
    assert_eq!(r0.len(), 1, "xgcd of non-coprime polynomials");
    let inv = inv_p(r0[0], p);
    let sc = |v: &Fp| trim(v.iter().map(|&x| mulmod(x, inv, p)).collect());
    (sc(&s0), sc(&t0))
}

fn fp_powmod(base: &Fp, e: &BigUint, m: &Fp, p: u64) -> Fp {
    let mut acc = vec![1u64];
    let base = fp_divrem(base, m, p).1;
    for i in (0..e.bits()).rev() {
        acc = fp_divrem(&fp_mul(&acc, &acc, p), m, p).1;
        if e.bit(i) {
            acc = fp_divrem(&fp_mul(&acc, &base, p), m, p).1;
        }
    }
    acc
}

fn fp_derivative(a: &Fp, p: u64) -> Fp {
    trim(a.iter().enumerate().skip(1).map(|(i, &c)| mulmod(c, i as u64 % p, p)).collect())
}

/// Distinct-degree then equal-degree factorization of a monic squarefree polynomial.
fn fp_factor(f: &Fp, p: u64, rng: &mut ChaCha8Rng) -> Vec<Fp> {
    let mut out = Vec::new();
    let mut rest = f.clone();
    let x: Fp = vec![0, 1];
    let mut h = x.clone();
    let mut d = 1;
    while rest.len() > 1 {
        if 2 * d > rest.len() - 1 {
            out.extend(fp_edf(&rest, rest.len() - 1, p, rng));
            break;
        }
        h = fp_powmod(&h, &BigUint::from(p), &rest, p);
        let g = fp_gcd(&fp_sub(&h, &x, p), &rest, p);
        if g.len() > 1 {
            out.extend(fp_edf(&g, d, p, rng));
            rest = fp_divrem(&rest, &g, p).0;
            h = fp_divrem(&h, &rest, p).1;
        }
        d += 1;
    }
    out
}

fn fp_edf(f: &Fp, d: usize, p: u64, rng: &mut ChaCha8Rng) -> Vec<Fp> {
    let n = f.len() - 1;
    if n == d {
        return vec![f.clone()];
    }
    let e = (BigUint::from(p).pow(d as u32) - 1u32) / 2u32;
    loop {
        let a: Fp = trim((0..n).map(|_| rng.gen_range(0..p)).collect());
        if a.len() < 2 {
            continue;
        }
        let b = fp_powmod(&a, &e, f, p);
        let g = fp_gcd(&fp_sub(&b, &vec![1], p), f, p);
        if g.len() > 1 && g.len() < f.len() {
            let h = fp_monic(&fp_divrem(f, &g, p).0, p);
            let mut out = fp_edf(&g, d, p, rng);
            out.extend(fp_edf(&h, d, p, rng));
            return out;
        }
    }
}

// ---------- integer polynomials modulo m ----------

type Zp = Vec<BigInt>;

fn zmod(a: &BigInt, m: &BigInt) -> BigInt {
    a.mod_floor(m)
}

fn z_trim(mut a: Zp) -> Zp {
    while a.last().is_some_and(Zero::is_zero) {
        a.pop();
    }
    a
}

fn z_reduce(a: &Zp, m: &BigInt) -> Zp {
    z_trim(a.iter().map(|c| zmod(c, m)).collect())
}

fn z_add(a: &Zp, b: &Zp) -> Zp {
    let n = a.len().max(b.len());
    z_trim(
        (0..n)
            .map(|i| a.get(i).cloned().unwrap_or_default() + b.get(i).cloned().unwrap_or_default())
            .collect(),
    )
}

fn z_sub(a: &Zp, b: &Zp) -> Zp {
    let n = a.len().max(b.len());
    z_trim(
        (0..n)
            .map(|i| a.get(i).cloned().unwrap_or_default() - b.get(i).cloned().unwrap_or_default())
            .collect(),
    )
}

fn z_mul(a: &Zp, b: &Zp) -> Zp {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    z_trim(out)
}

/// Division by a monic polynomial modulo m.
fn z_divrem_monic(a: &Zp, b: &Zp, m: &BigInt) -> (Zp, Zp) {
    let db = b.len() - 1;
    let mut r = z_reduce(a, m);
    if r.len() <= db {
        return (vec![], r);
    }
    let mut q = vec![BigInt::zero(); r.len() - db];
    for i in (0..q.len()).rev() {
        let c = zmod(&r[i + db], m);
        if !c.is_zero() {
            for (j, y) in b.iter().enumerate() {
                r[i + j] = zmod(&(&r[i + j] - &c * y), m);
            }
        }
        q[i] = c;
    }
    r.truncate(db);
    (z_trim(q), z_reduce(&r, m))
}

/// Exact division over Z, if the quotient exists.
fn z_divexact(a: &Zp, b: &Zp) -> Option<Zp> {
    let db = b.len() - 1;
    if a.len() <= db {
        return if a.is_empty() { Some(vec![]) } else { None };
    }
    let lb = b.last().unwrap();
    let mut r = a.clone();
    let mut q = vec![BigInt::zero(); a.len() - db];
    for i in (0..q.len()).rev() {
        let (c, rem) = r[i + db].div_rem(lb);
        if !rem.is_zero() {
            return None;
        }
        if !c.is_zero() {
            for (j, y) in b.iter().enumerate() {
                r[i + j] -= &c * y;
            }
        }
        q[i] = c;
    }
    r.iter().all(Zero::is_zero).then(|| z_trim(q))
}

fn symmetric(a: &BigInt, m: &BigInt) -> BigInt {
    let r = zmod(a, m);
    if &r * 2 > *m {
        r - m
    } else {
        r
    }
}

fn content(a: &Zp) -> BigInt {
    a.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
}

fn primitive(a: &Zp) -> Zp {
    let g = content(a);
    let mut out: Zp = a.iter().map(|c| c / &g).collect();
    if out.last().is_some_and(Signed::is_negative) {
        out = out.iter().map(|c| -c).collect();
    }
    out
}

fn fp_of(a: &Zp, p: u64) -> Fp {
    let pb = BigInt::from(p);
    trim(a.iter().map(|c| zmod(c, &pb).to_u64().unwrap()).collect())
}

fn z_of(a: &Fp) -> Zp {
    a.iter().map(|&c| BigInt::from(c)).collect()
}

/// One quadratic Hensel step for f ≡ g h, s g + t h ≡ 1 with g monic.
fn hensel_step(f: &Zp, g: &Zp, h: &Zp, s: &Zp, t: &Zp, m2: &BigInt) -> (Zp, Zp, Zp, Zp) {
    let e = z_reduce(&z_sub(f, &z_mul(g, h)), m2);
    let (q, r) = z_divrem_monic(&z_mul(t, &e), g, m2);
    let g1 = z_reduce(&z_add(g, &r), m2);
    let h1 = z_reduce(&z_add(h, &z_add(&z_mul(s, &e), &z_mul(&q, h))), m2);
    let b = z_reduce(&z_sub(&z_add(&z_mul(s, &g1), &z_mul(t, &h1)), &vec![BigInt::one()]), m2);
    let (c, d) = z_divrem_monic(&z_mul(t, &b), &g1, m2);
    let t1 = z_reduce(&z_sub(t, &d), m2);
    let s1 = z_reduce(&z_sub(&z_sub(s, &z_mul(s, &b)), &z_mul(&c, &h1)), m2);
    (g1, h1, s1, t1)
}

/// Lift the monic modular factors of `f` (f ≡ lc·∏ u_i mod p) to modulus p^k.
fn hensel_lift(f: &Zp, factors: &[Fp], p: u64, k: u32) -> Vec<Zp> {
    let pk = BigInt::from(p).pow(k);
    let lc = f.last().unwrap().clone();
    let mut cur = f.clone();
    let mut out = Vec::new();
    for (idx, u) in factors.iter().enumerate() {
        if idx == factors.len() - 1 {
            let inv = lc.modinv(&pk).expect("leading coefficient is a unit");
            let last = z_reduce(&cur.iter().map(|c| c * &inv).collect(), &pk);
            out.push(last);
            break;
        }
        let cur_p = fp_of(&cur, p);
        let w = fp_divrem(&cur_p, u, p).0;
        let (s, t) = fp_xgcd(u, &w, p);
        let (mut g, mut h, mut s, mut t) = (z_of(u), z_of(&w), z_of(&s), z_of(&t));
        let mut m = BigInt::from(p);
        while m < pk {
            m = (&m * &m).min(pk.clone());
            let step = hensel_step(&cur, &g, &h, &s, &t, &m);
            g = step.0;
            h = step.1;
            s = step.2;
            t = step.3;
        }
        out.push(z_reduce(&g, &pk));
        cur = z_reduce(&h, &pk);
        // keep the leading coefficient equal to lc (h carries it)
        cur = cur.iter().map(|c| symmetric(c, &pk)).collect();
    }
    out
}

/// Advance to the next k-subset of 0..n in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn norm2_bound(f: &Zp) -> BigInt {
    let s: BigInt = f.iter().map(|c| c * c).sum();
    s.sqrt() + 1
}

/// Irreducible factors over Z of a squarefree primitive polynomial with
/// nonzero constant term.
fn zassenhaus(f: &[BigInt]) -> Vec<Zp> {
    let f: Zp = f.to_vec();
    let n = f.len() - 1;
    if n <= 1 {
        return vec![f];
    }
    let lc = f.last().unwrap().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f00d);
    // choose the prime with the fewest modular factors among a few good ones
    let mut best: Option<(u64, Vec<Fp>)> = None;
    let mut tried = 0;
    let mut cand = 3u64;
    while tried < 6 && cand < 10_000 {
        if is_prime(cand) && !(&lc % BigInt::from(cand)).is_zero() {
            let fp = fp_monic(&fp_of(&f, cand), cand);
            if fp.len() == n + 1 && fp_gcd(&fp, &fp_derivative(&fp, cand), cand).len() == 1 {
                let facs = fp_factor(&fp, cand, &mut rng);
                tried += 1;
                if best.as_ref().is_none_or(|b| facs.len() < b.1.len()) {
                    best = Some((cand, facs));
                }
                if best.as_ref().unwrap().1.len() == 1 {
                    break;
                }
            }
        }
        cand += 2;
    }
    let (p, mut facs) = best.expect("a good prime exists for squarefree input");
    if facs.len() == 1 {
        return vec![primitive(&f)];
    }
    facs.sort();
    // Mignotte-type bound on coefficients of factors of lc·f
    let bound = BigInt::from(2).pow(n as u32) * norm2_bound(&f) * lc.abs() * 2;
    let mut k = 1u32;
    let pb = BigInt::from(p);
    while pb.pow(k) <= bound {
        k += 1;
    }
    let pk = pb.pow(k);
    let lifted = hensel_lift(&f, &facs, p, k);

    let mut remaining: Vec<Zp> = lifted;
    let mut cur = f.clone();
    let mut out = Vec::new();
    let mut size = 1;
    while 2 * size <= remaining.len() {
        let mut found = false;
        let r = remaining.len();
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let lcc = cur.last().unwrap().clone();
            // cheap constant-term test before the full product
            let c0 = combo
                .iter()
                .fold(lcc.clone(), |acc, &i| zmod(&(acc * &remaining[i][0]), &pk));
            let c0 = symmetric(&c0, &pk);
            let lc_c0 = &lcc * &cur[0];
            if !c0.is_zero() && (&lc_c0 % &c0).is_zero() {
                let prod = combo
                    .iter()
                    .fold(vec![lcc.clone()], |acc, &i| z_reduce(&z_mul(&acc, &remaining[i]), &pk));
                let cand: Zp = prod.iter().map(|c| symmetric(c, &pk)).collect();
                let g = primitive(&cand);
                if let Some(qt) = z_divexact(&cur, &g) {
                    out.push(g);
                    cur = qt;
                    let keep: Vec<Zp> = remaining
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| !combo.contains(i))
                        .map(|(_, v)| v.clone())
                        .collect();
                    remaining = keep;
                    found = true;
                }
            }
            if found {
                break;
            }
            if !next_combination(&mut combo, r) {
                break;
            }
        }
        if !found {
            size += 1;
        }
    }
    out.push(primitive(&cur));
    out
}

/// Roots in Q of a polynomial over Q, with multiplicity.
pub fn rational_roots(f: &Poly<Rational>) -> Vec<(Rational, u32)> {
    factor(f)
        .into_iter()
        .filter(|(g, _)| g.degree() == Some(1))
        .map(|(g, m)| (g.coeff(0).neg(), m))
        .collect()
}
