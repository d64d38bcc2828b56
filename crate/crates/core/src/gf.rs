//! Arithmetic in GF(p^n) for odd primes p.
//!
//! Elements are stored by their canonical integer encoding
//! `e = c0 + c1*p + ... + c_{n-1}*p^(n-1)`, where `c_i` are the coefficients of
//! the representing polynomial modulo the field's monic irreducible modulus.
//! Multiplication goes through discrete exp/log tables built once per field;
//! addition uses a lookup table for small fields and digit-wise arithmetic
//! otherwise.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Largest field order accepted by [`build_field`].
pub const MAX_FIELD_ORDER: u32 = 1 << 20;

/// Fields up to this order get a full addition table.
const ADD_TABLE_LIMIT: u32 = 1024;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("{0} is not prime")]
    NonPrime(u32),
    #[error("characteristic 2 is not supported")]
    EvenCharacteristic,
    #[error("modulus {0:?} is reducible over GF(p)")]
    ReducibleModulus(Vec<u32>),
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {0} exceeds the supported maximum")]
    FieldTooLarge(u64),
    #[error("division by zero")]
    DivisionByZero,
}

/// A field element, identified by its canonical integer encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
#[serde(transparent)]
pub struct Fe(pub u32);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn encoding(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The finite field GF(p^n).
#[derive(Clone)]
pub struct Field {
    p: u32,
    n: u32,
    q: u32,
    modulus: Vec<u32>,
    /// exp[i] = g^i for a fixed primitive element g, doubled to skip a modulo.
    exp: Vec<u32>,
    log: Vec<u32>,
    neg: Vec<u32>,
    add: Option<Vec<u32>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("p", &self.p)
            .field("n", &self.n)
            .field("modulus", &self.modulus)
            .finish()
    }
}

/// Field description as it appears in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldInfo {
    pub p: u32,
    pub n: u32,
    pub modulus: Vec<u32>,
}

pub fn is_prime(x: u32) -> bool {
    if x < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= x as u64 {
        if x % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Builds GF(p^n). Without an override the modulus is the lexicographically
/// smallest monic irreducible of degree n, comparing coefficients from the
/// constant term upwards.
pub fn build_field(p: u32, n: u32, modulus_override: Option<&[u32]>) -> Result<Field, GfError> {
    if p == 2 {
        return Err(GfError::EvenCharacteristic);
    }
    if !is_prime(p) {
        return Err(GfError::NonPrime(p));
    }
    if n == 0 {
        return Err(GfError::ZeroDegree);
    }
    let q = (p as u64).checked_pow(n).unwrap_or(u64::MAX);
    if q > MAX_FIELD_ORDER as u64 {
        return Err(GfError::FieldTooLarge(q));
    }
    let modulus = match modulus_override {
        Some(m) => {
            if m.len() != n as usize + 1 {
                return Err(GfError::InvalidModulus(format!(
                    "expected {} coefficients [c0..c{}], got {}",
                    n + 1,
                    n,
                    m.len()
                )));
            }
            if m[n as usize] != 1 {
                return Err(GfError::InvalidModulus("leading coefficient must be 1".into()));
            }
            if let Some(c) = m.iter().find(|&&c| c >= p) {
                return Err(GfError::InvalidModulus(format!("coefficient {c} is not reduced mod {p}")));
            }
            if !poly::is_irreducible(m, p) {
                return Err(GfError::ReducibleModulus(m.to_vec()));
            }
            m.to_vec()
        }
        None => smallest_irreducible(p, n),
    };
    Ok(Field::from_parts(p, n, q as u32, modulus))
}

/// Lexicographically smallest monic irreducible of degree `n`, with the
/// constant coefficient as the most significant comparison key.
pub fn smallest_irreducible(p: u32, n: u32) -> Vec<u32> {
    let count = (p as u64).pow(n);
    for idx in 0..count {
        // Constant term is the most significant digit of `idx`.
        let mut f = vec![0u32; n as usize + 1];
        let mut rest = idx;
        for i in (0..n as usize).rev() {
            f[i] = (rest % p as u64) as u32;
            rest /= p as u64;
        }
        f[n as usize] = 1;
        if poly::is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("irreducible polynomials of every degree exist over GF(p)")
}

impl Field {
    fn from_parts(p: u32, n: u32, q: u32, modulus: Vec<u32>) -> Field {
        let mut field = Field {
            p,
            n,
            q,
            modulus,
            exp: Vec::new(),
            log: vec![0; q as usize],
            neg: Vec::with_capacity(q as usize),
            add: None,
        };
        let neg = (0..q).map(|e| field.add_digits(0, e, true)).collect();
        field.neg = neg;
        if q <= ADD_TABLE_LIMIT {
            let mut table = vec![0u32; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    table[(a * q + b) as usize] = field.add_digits(a, b, false);
                }
            }
            field.add = Some(table);
        }
        field.build_log_tables();
        field
    }

    fn build_log_tables(&mut self) {
        let order = self.q - 1;
        if order == 0 {
            return;
        }
        for g in 1..self.q {
            let mut powers = Vec::with_capacity(order as usize);
            let mut x = 1u32;
            let mut ok = true;
            for i in 0..order {
                if i > 0 && x == 1 {
                    ok = false;
                    break;
                }
                powers.push(x);
                x = self.mul_slow(x, g);
            }
            if ok && x == 1 {
                for (i, &v) in powers.iter().enumerate() {
                    self.log[v as usize] = i as u32;
                }
                self.exp = powers.iter().chain(powers.iter()).copied().collect();
                return;
            }
        }
        unreachable!("the multiplicative group of a finite field is cyclic");
    }

    fn digits(&self, mut e: u32) -> Vec<u32> {
        let mut d = vec![0u32; self.n as usize];
        for slot in d.iter_mut() {
            *slot = e % self.p;
            e /= self.p;
        }
        d
    }

    fn undigits(&self, d: &[u32]) -> u32 {
        d.iter().rev().fold(0u32, |acc, &c| acc * self.p + c)
    }

    fn add_digits(&self, a: u32, b: u32, negate_b: bool) -> u32 {
        let (mut a, mut b) = (a, b);
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.n {
            let da = a % self.p;
            let mut db = b % self.p;
            if negate_b {
                db = (self.p - db) % self.p;
            }
            out += ((da + db) % self.p) * place;
            a /= self.p;
            b /= self.p;
            place = place.wrapping_mul(self.p);
        }
        out
    }

    fn mul_slow(&self, a: u32, b: u32) -> u32 {
        let prod = poly::mul_mod(&self.digits(a), &self.digits(b), &self.modulus, self.p);
        let mut d = prod;
        d.resize(self.n as usize, 0);
        self.undigits(&d)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn info(&self) -> FieldInfo {
        FieldInfo { p: self.p, n: self.n, modulus: self.modulus.clone() }
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> + '_ {
        (0..self.q).map(Fe)
    }

    /// Decodes a canonical encoding, rejecting values outside `[0, q)`.
    pub fn element(&self, encoding: u32) -> Option<Fe> {
        (encoding < self.q).then_some(Fe(encoding))
    }

    pub fn coeffs(&self, x: Fe) -> Vec<u32> {
        self.digits(x.0)
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Fe {
        let mut d: Vec<u32> = coeffs.iter().map(|c| c % self.p).collect();
        d.resize(self.n as usize, 0);
        Fe(self.undigits(&d))
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, x: i64) -> Fe {
        Fe(x.rem_euclid(self.p as i64) as u32)
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        match &self.add {
            Some(t) => Fe(t[(a.0 * self.q + b.0) as usize]),
            None => Fe(self.add_digits(a.0, b.0, false)),
        }
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        Fe(self.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a.0 == 0 || b.0 == 0 {
            return Fe::ZERO;
        }
        Fe(self.exp[(self.log[a.0 as usize] + self.log[b.0 as usize]) as usize])
    }

    pub fn invert(&self, a: Fe) -> Result<Fe, GfError> {
        if a.is_zero() {
            return Err(GfError::DivisionByZero);
        }
        let l = self.log[a.0 as usize];
        Ok(Fe(self.exp[((self.q - 1 - l) % (self.q - 1)) as usize]))
    }

    /// Inverse of a value already known to be nonzero.
    #[inline]
    pub(crate) fn inv_nonzero(&self, a: Fe) -> Fe {
        debug_assert!(!a.is_zero());
        let l = self.log[a.0 as usize];
        Fe(self.exp[((self.q - 1 - l) % (self.q - 1)) as usize])
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe, GfError> {
        Ok(self.mul(a, self.invert(b)?))
    }

    pub fn pow(&self, a: Fe, k: u64) -> Fe {
        if k == 0 {
            return Fe::ONE;
        }
        if a.is_zero() {
            return Fe::ZERO;
        }
        let l = self.log[a.0 as usize] as u64;
        Fe(self.exp[((l * (k % (self.q as u64 - 1))) % (self.q as u64 - 1)) as usize])
    }

    /// x ↦ x^(p^k).
    pub fn frobenius_map(&self, x: Fe, k: u32) -> Fe {
        let k = k % self.n;
        let e = (self.p as u64).pow(k);
        self.pow(x, e)
    }

    /// True if x is a nonzero square.
    pub fn is_nonzero_square(&self, x: Fe) -> bool {
        !x.is_zero() && self.log[x.0 as usize] % 2 == 0
    }
}

/// Dense polynomials over GF(p), little-endian coefficient vectors.
pub mod poly {
    fn trim(mut a: Vec<u32>) -> Vec<u32> {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    fn inv_mod_p(a: u32, p: u32) -> u32 {
        let mut result = 1u64;
        let mut base = a as u64 % p as u64;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base % p as u64;
            }
            base = base * base % p as u64;
            e >>= 1;
        }
        result as u32
    }

    pub fn rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        let m = trim(m.to_vec());
        let mut r = trim(a.to_vec());
        let dm = m.len() - 1;
        let lead_inv = inv_mod_p(m[dm], p) as u64;
        while r.len() > dm && !r.is_empty() {
            let shift = r.len() - 1 - dm;
            let coef = (*r.last().unwrap() as u64 * lead_inv % p as u64) as u32;
            for (i, &mc) in m.iter().enumerate() {
                let sub = (coef as u64 * mc as u64 % p as u64) as u32;
                let slot = &mut r[i + shift];
                *slot = (*slot + p - sub) % p;
            }
            r = trim(r);
        }
        r
    }

    pub fn mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x as u64 * y as u64) % p as u64;
            }
        }
        trim(out.into_iter().map(|c| c as u32).collect())
    }

    pub fn mul_mod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        rem(&mul(a, b, p), m, p)
    }

    pub fn sub(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let len = a.len().max(b.len());
        let out = (0..len)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y) % p
            })
            .collect();
        trim(out)
    }

    pub fn gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let mut a = trim(a.to_vec());
        let mut b = trim(b.to_vec());
        while !b.is_empty() {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        if let Some(&lead) = a.last() {
            let li = inv_mod_p(lead, p) as u64;
            a = a.into_iter().map(|c| (c as u64 * li % p as u64) as u32).collect();
        }
        a
    }

    /// base^e mod m, with e given as a u64.
    pub fn pow_mod(base: &[u32], mut e: u64, m: &[u32], p: u32) -> Vec<u32> {
        let mut result = vec![1u32];
        let mut b = rem(base, m, p);
        while e > 0 {
            if e & 1 == 1 {
                result = mul_mod(&result, &b, m, p);
            }
            b = mul_mod(&b, &b, m, p);
            e >>= 1;
        }
        rem(&result, m, p)
    }

    pub fn has_root(f: &[u32], p: u32) -> bool {
        (0..p).any(|x| {
            f.iter().rev().fold(0u64, |acc, &c| (acc * x as u64 + c as u64) % p as u64) == 0
        })
    }

    /// Ben-Or test: f of degree n is irreducible iff it has no roots and
    /// gcd(f, x^(p^k) - x) = 1 for every 1 <= k <= n/2.
    pub fn is_irreducible(f: &[u32], p: u32) -> bool {
        let f = trim(f.to_vec());
        if f.len() < 2 {
            return false;
        }
        let n = f.len() - 1;
        if n == 1 {
            return true;
        }
        if has_root(&f, p) {
            return false;
        }
        if n <= 3 {
            return true;
        }
        let x = vec![0u32, 1];
        let mut xp = x.clone();
        for _ in 1..=n / 2 {
            xp = pow_mod(&xp, p as u64, &f, p);
            let g = gcd(&f, &sub(&xp, &x, p), p);
            if g.len() > 1 {
                return false;
            }
        }
        true
    }
}
