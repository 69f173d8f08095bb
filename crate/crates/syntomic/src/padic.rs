//! Arithmetic in truncated Witt vectors W(F_q)/p^W.
//!
//! Elements are represented in the basis 1, x, ..., x^{f-1} where x is a
//! root of a fixed monic lift h of an irreducible degree-f polynomial over
//! F_p; coefficients live in Z/p^W.  For f = 1 this is plain Z/p^W.  The
//! Frobenius sigma is the unique ring lift of a |-> a^p, computed once by
//! Newton iteration from x^p mod (h, p).

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::rc::Rc;

use crate::{Error, Result};

/// Parameters describing the coefficient ring W(F_{p^f})/p^W.
#[derive(Debug, Clone)]
pub struct RingParams {
    pub p: u64,
    pub f: usize,
    /// Number of exact p-adic digits carried by every scalar.
    pub precision: u32,
    /// Lower coefficients h_0, ..., h_{f-1} of a monic lift of an
    /// irreducible polynomial over F_p.  `None` picks x - smallest
    /// generator; for f = 1 the lift is just x.
    pub h_lift: Option<Vec<u64>>,
}

/// A scalar in W(F_q)/p^W, stored as f residues modulo p^W.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WittScalar {
    pub coeffs: Vec<BigUint>,
}

/// The coefficient ring together with precomputed Frobenius data.
#[derive(Debug)]
pub struct WittRing {
    pub p: BigUint,
    pub p_u64: u64,
    pub f: usize,
    pub precision: u32,
    pub modulus: BigUint,
    /// Lower coefficients of the monic lift h (length f).
    h: Vec<BigUint>,
    /// Powers sigma(x)^d for d = 0, ..., f-1.
    sigma_pows: Vec<WittScalar>,
}

impl WittRing {
    pub fn new(params: &RingParams) -> Result<Rc<WittRing>> {
        if params.f == 0 {
            return Err(Error::InvalidArgument("f must be positive".into()));
        }
        if params.precision < 1 {
            return Err(Error::PrecisionTooSmall(params.precision));
        }
        if !is_prime_u64(params.p) {
            return Err(Error::NotPrime(params.p));
        }
        let p = BigUint::from(params.p);
        let modulus = p.pow(params.precision);
        let h: Vec<BigUint> = match &params.h_lift {
            Some(low) => {
                if low.len() != params.f {
                    return Err(Error::InvalidArgument(format!(
                        "h_lift must have {} lower coefficients",
                        params.f
                    )));
                }
                low.iter().map(|&c| BigUint::from(c) % &modulus).collect()
            }
            None => default_h(params.p, params.f)?,
        };
        check_irreducible(&p, &h)?;
        let mut ring = WittRing {
            p,
            p_u64: params.p,
            f: params.f,
            precision: params.precision,
            modulus,
            h,
            sigma_pows: Vec::new(),
        };
        let sigma_x = ring.lift_frobenius()?;
        let mut pows = Vec::with_capacity(ring.f);
        let mut acc = ring.one();
        for _ in 0..ring.f {
            pows.push(acc.clone());
            acc = ring.mul(&acc, &sigma_x);
        }
        ring.sigma_pows = pows;
        Ok(Rc::new(ring))
    }

    pub fn zero(&self) -> WittScalar {
        WittScalar {
            coeffs: vec![BigUint::zero(); self.f],
        }
    }

    pub fn one(&self) -> WittScalar {
        self.from_u64(1)
    }

    pub fn from_u64(&self, v: u64) -> WittScalar {
        let mut s = self.zero();
        s.coeffs[0] = BigUint::from(v) % &self.modulus;
        s
    }

    pub fn from_i64(&self, v: i64) -> WittScalar {
        if v >= 0 {
            self.from_u64(v as u64)
        } else {
            self.neg(&self.from_u64(v.unsigned_abs()))
        }
    }

    /// The image of the chosen generator x (zero when f = 1).
    pub fn gen(&self) -> WittScalar {
        if self.f == 1 {
            // h = x, so x = 0 in the quotient.
            return self.zero();
        }
        let mut s = self.zero();
        s.coeffs[1] = BigUint::one();
        s
    }

    pub fn is_zero(&self, a: &WittScalar) -> bool {
        a.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, a: &WittScalar, b: &WittScalar) -> WittScalar {
        WittScalar {
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| (x + y) % &self.modulus)
                .collect(),
        }
    }

    pub fn sub(&self, a: &WittScalar, b: &WittScalar) -> WittScalar {
        WittScalar {
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| (x + &self.modulus - (y % &self.modulus)) % &self.modulus)
                .collect(),
        }
    }

    pub fn neg(&self, a: &WittScalar) -> WittScalar {
        self.sub(&self.zero(), a)
    }

    pub fn mul(&self, a: &WittScalar, b: &WittScalar) -> WittScalar {
        if self.f == 1 {
            return WittScalar {
                coeffs: vec![(&a.coeffs[0] * &b.coeffs[0]) % &self.modulus],
            };
        }
        // Schoolbook product followed by reduction via x^f = -(h_0 + ... ).
        let mut prod = vec![BigUint::zero(); 2 * self.f - 1];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        for d in (self.f..2 * self.f - 1).rev() {
            let c = std::mem::replace(&mut prod[d], BigUint::zero()) % &self.modulus;
            if c.is_zero() {
                continue;
            }
            for t in 0..self.f {
                if !self.h[t].is_zero() {
                    // x^d = x^{d-f} * x^f = -sum h_t x^{d-f+t}
                    let sub = (&c * &self.h[t]) % &self.modulus;
                    prod[d - self.f + t] += &self.modulus - sub;
                }
            }
        }
        WittScalar {
            coeffs: prod
                .into_iter()
                .take(self.f)
                .map(|c| c % &self.modulus)
                .collect(),
        }
    }

    pub fn mul_u64(&self, a: &WittScalar, v: u64) -> WittScalar {
        let big = BigUint::from(v);
        WittScalar {
            coeffs: a.coeffs.iter().map(|c| (c * &big) % &self.modulus).collect(),
        }
    }

    pub fn pow_u64(&self, a: &WittScalar, mut e: u64) -> WittScalar {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// p-adic valuation: min over coefficients, capped at the precision.
    pub fn valuation(&self, a: &WittScalar) -> u32 {
        let mut best = self.precision;
        for c in &a.coeffs {
            if c.is_zero() {
                continue;
            }
            let mut v = 0u32;
            let mut rem = c.clone();
            while v < best {
                let (q, r) = rem.div_rem(&self.p);
                if !r.is_zero() {
                    break;
                }
                rem = q;
                v += 1;
            }
            best = best.min(v);
            if best == 0 {
                return 0;
            }
        }
        best
    }

    /// Inverse of a unit, via the residue field followed by Newton lifting.
    pub fn invert_unit(&self, a: &WittScalar) -> Result<WittScalar> {
        let v = self.valuation(a);
        if v > 0 {
            return Err(Error::NotAUnit(v));
        }
        let mut t = self.invert_mod_p(a)?;
        // t <- t(2 - a t) doubles the number of correct digits.
        let two = self.from_u64(2);
        let mut digits = 1u32;
        while digits < self.precision {
            let at = self.mul(a, &t);
            t = self.mul(&t, &self.sub(&two, &at));
            digits *= 2;
        }
        debug_assert!(self.is_zero(&self.sub(&self.mul(a, &t), &self.one())));
        Ok(t)
    }

    /// Divide by p exactly; the caller's precision ledger must account for
    /// the digit that can no longer be certified.
    pub fn exact_div_p(&self, a: &WittScalar) -> Result<WittScalar> {
        let mut out = Vec::with_capacity(self.f);
        for c in &a.coeffs {
            let (q, r) = c.div_rem(&self.p);
            if !r.is_zero() {
                return Err(Error::NotDivisibleByP);
            }
            out.push(q);
        }
        Ok(WittScalar { coeffs: out })
    }

    /// The Frobenius lift applied to a scalar.
    pub fn sigma(&self, a: &WittScalar) -> WittScalar {
        if self.f == 1 {
            return a.clone();
        }
        let mut acc = self.zero();
        for (d, c) in a.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let term = WittScalar {
                coeffs: self.sigma_pows[d]
                    .coeffs
                    .iter()
                    .map(|s| (s * c) % &self.modulus)
                    .collect(),
            };
            acc = self.add(&acc, &term);
        }
        acc
    }

    pub fn is_zero_mod_p(&self, a: &WittScalar) -> bool {
        a.coeffs.iter().all(|c| (c % &self.p).is_zero())
    }

    /// Reduce every coefficient modulo p^k (k <= precision).
    pub fn truncate_digits(&self, a: &WittScalar, k: u32) -> WittScalar {
        let m = self.p.pow(k);
        WittScalar {
            coeffs: a.coeffs.iter().map(|c| c % &m).collect(),
        }
    }

    fn h_at(&self, s: &WittScalar) -> WittScalar {
        // h(s) = s^f + sum h_t s^t
        let mut acc = self.pow_u64(s, self.f as u64);
        let mut pow = self.one();
        for t in 0..self.f {
            if !self.h[t].is_zero() {
                let coeff = WittScalar {
                    coeffs: {
                        let mut v = vec![BigUint::zero(); self.f];
                        v[0] = self.h[t].clone();
                        v
                    },
                };
                acc = self.add(&acc, &self.mul(&coeff, &pow));
            }
            pow = self.mul(&pow, s);
        }
        acc
    }

    fn h_deriv_at(&self, s: &WittScalar) -> WittScalar {
        let mut acc = self.mul_u64(&self.pow_u64(s, (self.f - 1) as u64), self.f as u64);
        let mut pow = self.one();
        for t in 1..self.f {
            if !self.h[t].is_zero() {
                let mut term = self.mul_u64(&pow, t as u64);
                term = WittScalar {
                    coeffs: term
                        .coeffs
                        .iter()
                        .map(|c| (c * &self.h[t]) % &self.modulus)
                        .collect(),
                };
                acc = self.add(&acc, &term);
            }
            pow = self.mul(&pow, s);
        }
        acc
    }

    /// Newton-lift x^p mod (h, p) to a root of h with full precision.
    fn lift_frobenius(&self) -> Result<WittScalar> {
        if self.f == 1 {
            return Ok(self.zero());
        }
        // Start from x^p reduced mod h (exact arithmetic already works since
        // multiplication reduces by h).
        let x = {
            let mut s = self.zero();
            s.coeffs[1] = BigUint::one();
            s
        };
        let mut s = self.pow_u64(&x, self.p_u64);
        let mut digits = 1u32;
        while digits < self.precision {
            let deriv = self.h_deriv_at(&s);
            if self.valuation(&deriv) > 0 {
                return Err(Error::NonSeparable);
            }
            let correction = self.mul(&self.h_at(&s), &self.invert_unit(&deriv)?);
            s = self.sub(&s, &correction);
            digits *= 2;
        }
        if !self.is_zero(&self.h_at(&s)) {
            return Err(Error::NonSeparable);
        }
        Ok(s)
    }

    fn invert_mod_p(&self, a: &WittScalar) -> Result<WittScalar> {
        if self.f == 1 {
            let inv = mod_inverse(&(&a.coeffs[0] % &self.p), &self.p)
                .ok_or(Error::NotAUnit(0))?;
            let mut s = self.zero();
            s.coeffs[0] = inv;
            return Ok(s);
        }
        // Extended Euclid over F_p[x] against h.
        let mut hp: Vec<BigUint> = self.h.iter().map(|c| c % &self.p).collect();
        hp.push(BigUint::one());
        let ap: Vec<BigUint> = a.coeffs.iter().map(|c| c % &self.p).collect();
        let inv = poly_inverse_mod(&ap, &hp, &self.p).ok_or(Error::NotAUnit(0))?;
        let mut coeffs = inv;
        coeffs.resize(self.f, BigUint::zero());
        Ok(WittScalar { coeffs })
    }
}

fn default_h(p: u64, f: usize) -> Result<Vec<BigUint>> {
    if f == 1 {
        return Ok(vec![BigUint::zero()]);
    }
    // Search monic polynomials x^f + c_{f-1} x^{f-1} + ... + c_0 in
    // lexicographic order of (c_0, ..., c_{f-1}) for an irreducible one.
    let p_big = BigUint::from(p);
    let total = (p as u128).checked_pow(f as u32).filter(|&t| t <= 1 << 24);
    let total = total.ok_or_else(|| {
        Error::InvalidArgument("no residue field lift supplied and search space too large".into())
    })?;
    for idx in 0..total {
        let mut rem = idx;
        let mut coeffs = Vec::with_capacity(f);
        for _ in 0..f {
            coeffs.push(BigUint::from((rem % p as u128) as u64));
            rem /= p as u128;
        }
        if check_irreducible(&p_big, &coeffs).is_ok() {
            return Ok(coeffs);
        }
    }
    Err(Error::NotIrreducible)
}

/// Rabin irreducibility test for the monic polynomial with the given lower
/// coefficients, over F_p.
fn check_irreducible(p: &BigUint, low: &[BigUint]) -> Result<()> {
    let f = low.len();
    let mut h: Vec<BigUint> = low.iter().map(|c| c % p).collect();
    h.push(BigUint::one());
    if f == 1 {
        return Ok(());
    }
    // x^(p^f) == x mod h
    let xq = poly_pow_x_qexp(&h, p, f as u32);
    let x = vec![BigUint::zero(), BigUint::one()];
    if poly_mod_normalize(&poly_sub(&xq, &x, p), p).iter().any(|c| !c.is_zero()) {
        return Err(Error::NotIrreducible);
    }
    // gcd(x^(p^(f/l)) - x, h) == 1 for every prime l | f
    for l in prime_divisors(f as u64) {
        let e = f as u32 / l as u32;
        let xe = poly_pow_x_qexp(&h, p, e);
        let diff = poly_mod_normalize(&poly_sub(&xe, &x, p), p);
        let g = poly_gcd(&diff, &h, p);
        if poly_degree(&g) != 0 {
            return Err(Error::NotIrreducible);
        }
    }
    Ok(())
}

// --- dense polynomial helpers over F_p (BigUint coefficients) ---

fn poly_degree(a: &[BigUint]) -> isize {
    for (i, c) in a.iter().enumerate().rev() {
        if !c.is_zero() {
            return i as isize;
        }
    }
    -1
}

fn poly_mod_normalize(a: &[BigUint], p: &BigUint) -> Vec<BigUint> {
    let mut out: Vec<BigUint> = a.iter().map(|c| c % p).collect();
    while out.len() > 1 && out.last().map(|c| c.is_zero()).unwrap_or(false) {
        out.pop();
    }
    out
}

fn poly_sub(a: &[BigUint], b: &[BigUint], p: &BigUint) -> Vec<BigUint> {
    let n = a.len().max(b.len());
    let mut out = vec![BigUint::zero(); n];
    for i in 0..n {
        let x = a.get(i).cloned().unwrap_or_default() % p;
        let y = b.get(i).cloned().unwrap_or_default() % p;
        out[i] = (x + p - y) % p;
    }
    out
}

fn poly_mul_mod(a: &[BigUint], b: &[BigUint], m: &[BigUint], p: &BigUint) -> Vec<BigUint> {
    let mut prod = vec![BigUint::zero(); a.len() + b.len()];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            prod[i + j] = (&prod[i + j] + x * y) % p;
        }
    }
    poly_rem(&prod, m, p)
}

/// Remainder of a by the monic polynomial m over F_p.
fn poly_rem(a: &[BigUint], m: &[BigUint], p: &BigUint) -> Vec<BigUint> {
    let dm = poly_degree(m);
    assert!(dm >= 0);
    let mut r = poly_mod_normalize(a, p);
    let lead_inv = mod_inverse(&(&m[dm as usize] % p), p).expect("monic-ish modulus");
    while poly_degree(&r) >= dm {
        let dr = poly_degree(&r) as usize;
        let c = (&r[dr] * &lead_inv) % p;
        let shift = dr - dm as usize;
        for t in 0..=dm as usize {
            let sub = (&c * &m[t]) % p;
            r[shift + t] = (&r[shift + t] + p - sub) % p;
        }
        r = poly_mod_normalize(&r, p);
    }
    r
}

/// x^(p^e) mod (m, p) by repeated p-th powering.
fn poly_pow_x_qexp(m: &[BigUint], p: &BigUint, e: u32) -> Vec<BigUint> {
    let mut cur = vec![BigUint::zero(), BigUint::one()];
    for _ in 0..e {
        cur = poly_pow_mod(&cur, p, m, p);
    }
    cur
}

fn poly_pow_mod(a: &[BigUint], exp: &BigUint, m: &[BigUint], p: &BigUint) -> Vec<BigUint> {
    let mut base = poly_rem(a, m, p);
    let mut acc = vec![BigUint::one()];
    let mut e = exp.clone();
    let two = BigUint::from(2u32);
    while !e.is_zero() {
        if (&e % &two).is_one() {
            acc = poly_mul_mod(&acc, &base, m, p);
        }
        base = poly_mul_mod(&base, &base, m, p);
        e >>= 1;
    }
    acc
}

fn poly_gcd(a: &[BigUint], b: &[BigUint], p: &BigUint) -> Vec<BigUint> {
    let mut x = poly_mod_normalize(a, p);
    let mut y = poly_mod_normalize(b, p);
    while poly_degree(&y) >= 0 {
        let r = poly_rem(&x, &y, p);
        x = y;
        y = r;
    }
    // Normalize to monic for a stable degree check.
    let d = poly_degree(&x);
    if d >= 0 {
        if let Some(inv) = mod_inverse(&x[d as usize], p) {
            for c in x.iter_mut() {
                *c = (&*c * &inv) % p;
            }
        }
    }
    x
}

/// Inverse of a modulo the monic polynomial m over F_p, if coprime.
fn poly_inverse_mod(a: &[BigUint], m: &[BigUint], p: &BigUint) -> Option<Vec<BigUint>> {
    let mut r0 = poly_mod_normalize(m, p);
    let mut r1 = poly_rem(a, m, p);
    let mut s0: Vec<BigUint> = vec![BigUint::zero()];
    let mut s1: Vec<BigUint> = vec![BigUint::one()];
    while poly_degree(&r1) > 0 {
        let (q, r) = poly_divmod(&r0, &r1, p);
        let s = poly_sub(&s0, &poly_mul(&q, &s1, p), p);
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = poly_mod_normalize(&s, p);
    }
    if poly_degree(&r1) < 0 {
        return None;
    }
    let inv = mod_inverse(&r1[0], p)?;
    Some(
        s1.iter()
            .map(|c| (c * &inv) % p)
            .collect(),
    )
}

fn poly_mul(a: &[BigUint], b: &[BigUint], p: &BigUint) -> Vec<BigUint> {
    let mut prod = vec![BigUint::zero(); a.len() + b.len()];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            prod[i + j] = (&prod[i + j] + x * y) % p;
        }
    }
    poly_mod_normalize(&prod, p)
}

fn poly_divmod(a: &[BigUint], b: &[BigUint], p: &BigUint) -> (Vec<BigUint>, Vec<BigUint>) {
    let db = poly_degree(b);
    assert!(db >= 0);
    let lead_inv = mod_inverse(&b[db as usize], p).expect("unit leading coefficient");
    let mut r = poly_mod_normalize(a, p);
    let mut q = vec![BigUint::zero(); r.len().max(1)];
    while poly_degree(&r) >= db {
        let dr = poly_degree(&r) as usize;
        let c = (&r[dr] * &lead_inv) % p;
        let shift = dr - db as usize;
        q[shift] = (&q[shift] + &c) % p;
        for t in 0..=db as usize {
            let sub = (&c * &b[t]) % p;
            r[shift + t] = (&r[shift + t] + p - sub) % p;
        }
        r = poly_mod_normalize(&r, p);
    }
    (poly_mod_normalize(&q, p), r)
}

fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    use num_bigint::BigInt;
    let a = BigInt::from(a.clone());
    let m_int = BigInt::from(m.clone());
    let e = a.extended_gcd(&m_int);
    if !e.gcd.is_one() {
        return None;
    }
    let mut x = e.x % &m_int;
    if x.sign() == num_bigint::Sign::Minus {
        x += &m_int;
    }
    Some(x.to_biguint().unwrap())
}

fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Deterministic Miller-Rabin for u64 inputs.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % q == 0 {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod_u64(acc, a, m);
        }
        a = mul_mod_u64(a, a, m);
        e >>= 1;
    }
    acc
}
