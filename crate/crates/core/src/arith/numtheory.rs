//! Elementary integer number theory on machine words.

use num_integer::Integer;

pub fn gcd(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / a.gcd(&b) * b
}

/// Nonnegative residue of `a` modulo `m`.
pub fn modulo(a: i64, m: i64) -> i64 {
    a.rem_euclid(m)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime factorization as (prime, exponent) pairs, primes increasing.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn prime_divisors(n: u64) -> Vec<u64> {
    factorize(n).into_iter().map(|(p, _)| p).collect()
}

/// All positive divisors, increasing.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factorize(n) {
        let len = out.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

pub fn primes_below(bound: u64) -> Vec<u64> {
    (2..bound).filter(|&n| is_prime(n)).collect()
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u128;
    let mut b = (base % m) as u128;
    let m128 = m as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    base = acc as u64;
    base
}

/// Multiplicative order of `a` modulo `m`; `a` must be a unit.
pub fn mult_order(a: u64, m: u64) -> u64 {
    let group = euler_phi(m);
    let mut order = group;
    for (p, _) in factorize(group) {
        while order % p == 0 && pow_mod(a, order / p, m) == 1 {
            order /= p;
        }
    }
    order
}

/// Smallest positive primitive root modulo an odd prime power.
pub fn smallest_primitive_root(q: u64) -> u64 {
    let group = euler_phi(q);
    (2..q)
        .find(|&g| gcd(g as i64, q as i64) == 1 && mult_order(g, q) == group)
        .expect("odd prime powers have primitive roots")
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: i64, m: i64) -> Option<i64> {
    let e = a.rem_euclid(m).extended_gcd(&m);
    if e.gcd != 1 {
        return None;
    }
    Some(e.x.rem_euclid(m))
}

/// Solve x = a1 mod m1, x = a2 mod m2 for coprime moduli.
pub fn crt_pair(a1: i64, m1: i64, a2: i64, m2: i64) -> i64 {
    let inv = inv_mod(m1, m2).expect("moduli must be coprime");
    let t = ((a2 - a1).rem_euclid(m2) as i128 * inv as i128).rem_euclid(m2 as i128) as i64;
    (a1 + m1 * t).rem_euclid(m1 * m2)
}

/// Index of Gamma_0(n) in SL_2(Z).
pub fn gamma0_index(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p + 1))
}

/// `n^2 * prod(1 - 1/l^2)` over primes `l | n`.
pub fn gamma1_index_doubled(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .fold(n * n, |acc, (p, _)| acc / (p * p) * (p * p - 1))
}

/// Number of divisors.
pub fn sigma0(n: u64) -> u64 {
    factorize(n).into_iter().map(|(_, e)| e as u64 + 1).product()
}

/// Kronecker symbol (a/n).
pub fn kronecker(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut result = 1i32;
    let mut n = n;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let mut twos = 0;
    while n % 2 == 0 {
        n /= 2;
        twos += 1;
    }
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if twos % 2 == 1 {
            let r = a.rem_euclid(8);
            if r == 3 || r == 5 {
                result = -result;
            }
        }
    }
    // Jacobi symbol (a/n) for odd positive n.
    let mut a = a.rem_euclid(n);
    let mut n = n;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_small_table() {
        assert_eq!(kronecker(-1, 3), -1);
        assert_eq!(kronecker(-1, 5), 1);
        assert_eq!(kronecker(5, 11), 1);
        assert_eq!(kronecker(2, 7), 1);
        assert_eq!(kronecker(2, 3), -1);
        assert_eq!(kronecker(-3, 2), -1);
        assert_eq!(kronecker(-4, 2), 0);
        assert_eq!(kronecker(-3, -1), -1);
        assert_eq!(kronecker(3, -1), 1);
        assert_eq!(kronecker(6, 9), 0);
    }

    #[test]
    fn kronecker_matches_euler_criterion() {
        for p in [3i64, 5, 7, 11, 13, 17] {
            for a in -20i64..20 {
                let e = pow_mod(a.rem_euclid(p) as u64, ((p - 1) / 2) as u64, p as u64);
                let expect = if a.rem_euclid(p) == 0 {
                    0
                } else if e == 1 {
                    1
                } else {
                    -1
                };
                assert_eq!(kronecker(a, p), expect, "({a}/{p})");
            }
        }
    }

    #[test]
    fn indices() {
        assert_eq!(gamma0_index(36), 72);
        assert_eq!(gamma1_index_doubled(36), 864);
        assert_eq!(gamma1_index_doubled(4), 12);
        assert_eq!(gamma1_index_doubled(1), 1);
    }

    #[test]
    fn primitive_roots() {
        assert_eq!(smallest_primitive_root(5), 2);
        assert_eq!(smallest_primitive_root(7), 3);
        assert_eq!(smallest_primitive_root(9), 2);
        assert_eq!(smallest_primitive_root(49), 3);
        assert_eq!(crt_pair(2, 5, 3, 4), 7);
    }
}
