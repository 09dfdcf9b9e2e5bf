//! Truncated local rings: Z/p^k and the Galois rings GR(p^k, tau).
//!
//! A [`RingSpec`] fixes a prime p, a precision k and a residue degree tau.
//! For tau = 1 the ring is Z/p^k; for tau > 1 it is the polynomial quotient
//! `(Z/p^k)[x] / (m(x))` for a monic degree-tau modulus m whose reduction
//! mod p is irreducible, so the residue ring mod p is the field F_{p^tau}.
//! Elements are coefficient vectors of length tau with entries in
//! {0, ..., p^k - 1}.
//!
//! Precision reduction Z/p^k -> Z/p^k' (k' <= k) is a ring homomorphism and
//! is exposed as [`reduce_precision`]; everything downstream (matrices,
//! orbits, Jacobians) commutes with it entrywise.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("p = {0} is not prime")]
    CompositeP(u64),
    #[error("no modulus given and no built-in default for (p, tau) = ({0}, {1})")]
    MissingModulus(u64, u32),
    #[error("modulus is reducible modulo p")]
    ReducibleModulus,
    #[error("modulus must be monic of degree tau (given as tau+1 coefficients, constant first)")]
    BadModulus,
    #[error("irreducibility testing is only supported for tau <= 4, got {0}")]
    UnsupportedDegree(u32),
    #[error("p^k does not fit in 64 bits")]
    PrecisionOverflow,
    #[error("invalid ring parameter: {0}")]
    BadParameter(&'static str),
    #[error("operands belong to different rings")]
    RingMismatch,
    #[error("element is not a unit (its reduction mod p vanishes)")]
    NotAUnit,
    #[error("cannot raise precision from {from} to {to}")]
    PrecisionIncrease { from: u32, to: u32 },
}

/// A truncated local ring Z/p^k (tau = 1) or GR(p^k, tau) (tau > 1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingSpec {
    p: u64,
    k: u32,
    tau: u32,
    /// Low coefficients m_0..m_{tau-1} of the monic modulus; empty for tau = 1.
    modulus: Vec<u64>,
    /// p^k, the modulus of each coefficient.
    pk: u64,
}

/// Shared handle to a ring; elements hold one of these.
pub type Ring = Arc<RingSpec>;

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.checked_mul(d).is_some_and(|sq| sq <= n) {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Built-in irreducible quadratics for small p, so GR(p^k, 2) works without
/// the caller supplying a modulus. Returned as tau+1 coefficients, constant
/// term first.
fn builtin_modulus(p: u64, tau: u32) -> Option<Vec<u64>> {
    if tau != 2 {
        return None;
    }
    match p {
        2 => Some(vec![1, 1, 1]), // x^2 + x + 1
        3 => Some(vec![1, 0, 1]), // x^2 + 1
        5 => Some(vec![2, 0, 1]), // x^2 + 2
        7 => Some(vec![1, 0, 1]), // x^2 + 1
        _ => None,
    }
}

fn poly_eval_mod_p(low: &[u64], p: u64, x: u64) -> u64 {
    // Horner for the monic polynomial x^tau + sum low[i] x^i.
    let mut acc = 1u128; // leading coefficient
    for &c in low.iter().rev() {
        acc = (acc * x as u128 + c as u128) % p as u128;
    }
    acc as u64
}

/// Remainder of the monic polynomial `low + x^tau` after division by the
/// monic quadratic x^2 + b x + c, all over F_p.
fn rem_by_monic_quadratic(low: &[u64], p: u64, b: u64, c: u64) -> (u64, u64) {
    let tau = low.len();
    let mut coeffs: Vec<u128> = low.iter().map(|&v| v as u128 % p as u128).collect();
    coeffs.push(1);
    let pp = p as u128;
    for d in (2..=tau).rev() {
        let t = coeffs[d] % pp;
        if t == 0 {
            continue;
        }
        coeffs[d] = 0;
        // subtract t * x^(d-2) * (x^2 + b x + c)
        coeffs[d - 1] = (coeffs[d - 1] + pp * pp - t * b as u128 % (pp * pp)) % pp;
        coeffs[d - 2] = (coeffs[d - 2] + pp * pp - t * c as u128 % (pp * pp)) % pp;
    }
    (coeffs[0] as u64, coeffs[1] as u64)
}

fn check_irreducible_mod_p(low: &[u64], p: u64, tau: u32) -> Result<(), RingError> {
    if tau > 4 {
        return Err(RingError::UnsupportedDegree(tau));
    }
    for x in 0..p {
        if poly_eval_mod_p(low, p, x) == 0 {
            return Err(RingError::ReducibleModulus);
        }
    }
    if tau == 4 {
        // A rootless quartic can still split into two irreducible quadratics.
        for b in 0..p {
            for c in 0..p {
                let mut has_root = false;
                for x in 0..p {
                    if (x as u128 * x as u128 + b as u128 * x as u128 + c as u128).is_multiple_of(p as u128)
                    {
                        has_root = true;
                        break;
                    }
                }
                if has_root {
                    continue;
                }
                if rem_by_monic_quadratic(low, p, b, c) == (0, 0) {
                    return Err(RingError::ReducibleModulus);
                }
            }
        }
    }
    Ok(())
}

impl RingSpec {
    /// Validate parameters and build a ring. `modulus`, when given, lists
    /// the tau+1 coefficients of the monic modulus, constant term first.
    pub fn new(p: u64, k: u32, tau: u32, modulus: Option<&[u64]>) -> Result<RingSpec, RingError> {
        if k == 0 {
            return Err(RingError::BadParameter("precision k must be >= 1"));
        }
        if tau == 0 {
            return Err(RingError::BadParameter("residue degree tau must be >= 1"));
        }
        if !is_prime(p) {
            return Err(RingError::CompositeP(p));
        }
        let pk = p.checked_pow(k).ok_or(RingError::PrecisionOverflow)?;
        let low = if tau == 1 {
            if modulus.is_some() {
                return Err(RingError::BadModulus);
            }
            Vec::new()
        } else {
            let full: Vec<u64> = match modulus {
                Some(m) => m.to_vec(),
                None => builtin_modulus(p, tau).ok_or(RingError::MissingModulus(p, tau))?,
            };
            if full.len() != tau as usize + 1 || full[tau as usize] != 1 {
                return Err(RingError::BadModulus);
            }
            let low: Vec<u64> = full[..tau as usize]
                .iter()
                .map(|&c| (c as u128 % pk as u128) as u64)
                .collect();
            let low_mod_p: Vec<u64> = low.iter().map(|&c| c % p).collect();
            check_irreducible_mod_p(&low_mod_p, p, tau)?;
            low
        };
        Ok(RingSpec {
            p,
            k,
            tau,
            modulus: low,
            pk,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Precision exponent k: coefficients live in Z/p^k.
    pub fn precision(&self) -> u32 {
        self.k
    }

    pub fn residue_degree(&self) -> u32 {
        self.tau
    }

    /// p^k, the modulus of each coefficient.
    pub fn coeff_modulus(&self) -> u64 {
        self.pk
    }

    /// Low coefficients of the monic modulus (empty when tau = 1).
    pub fn modulus_low(&self) -> &[u64] {
        &self.modulus
    }

    /// Number of elements, (p^k)^tau, if it fits in 128 bits.
    pub fn size(&self) -> Option<u128> {
        (self.pk as u128).checked_pow(self.tau)
    }

    /// The same ring truncated to precision `k2 <= k`.
    pub fn reduced(&self, k2: u32) -> Result<Ring, RingError> {
        if k2 == 0 {
            return Err(RingError::BadParameter("precision k must be >= 1"));
        }
        if k2 > self.k {
            return Err(RingError::PrecisionIncrease {
                from: self.k,
                to: k2,
            });
        }
        let pk2 = self.p.pow(k2);
        Ok(Arc::new(RingSpec {
            p: self.p,
            k: k2,
            tau: self.tau,
            modulus: self.modulus.iter().map(|&c| c % pk2).collect(),
            pk: pk2,
        }))
    }

    pub fn zero(self: &Ring) -> RingElem {
        RingElem {
            ring: self.clone(),
            coeffs: vec![0; self.tau as usize],
        }
    }

    pub fn one(self: &Ring) -> RingElem {
        self.from_u64(1)
    }

    pub fn from_u64(self: &Ring, x: u64) -> RingElem {
        let mut coeffs = vec![0; self.tau as usize];
        coeffs[0] = x % self.pk;
        RingElem {
            ring: self.clone(),
            coeffs,
        }
    }

    pub fn from_i64(self: &Ring, x: i64) -> RingElem {
        let m = self.pk as i128;
        let r = ((x as i128 % m) + m) % m;
        self.from_u64(r as u64)
    }

    pub fn from_bigint(self: &Ring, x: &BigInt) -> RingElem {
        let m = BigInt::from(self.pk);
        let mut r = x % &m;
        if r < BigInt::ZERO {
            r += &m;
        }
        self.from_u64(r.to_u64().expect("residue fits in u64"))
    }

    /// Element from an explicit coefficient vector (length tau, entries
    /// reduced mod p^k).
    pub fn elem(self: &Ring, coeffs: &[u64]) -> Result<RingElem, RingError> {
        if coeffs.len() != self.tau as usize {
            return Err(RingError::BadParameter(
                "coefficient vector length must equal tau",
            ));
        }
        Ok(RingElem {
            ring: self.clone(),
            coeffs: coeffs.iter().map(|&c| c % self.pk).collect(),
        })
    }

    /// Decode the element with the given index in the mixed-radix ordering
    /// (coefficient 0 least significant, radix p^k). Used by exhaustive
    /// searches.
    pub fn elem_from_index(self: &Ring, mut idx: u128) -> RingElem {
        let mut coeffs = vec![0u64; self.tau as usize];
        for c in coeffs.iter_mut() {
            *c = (idx % self.pk as u128) as u64;
            idx /= self.pk as u128;
        }
        RingElem {
            ring: self.clone(),
            coeffs,
        }
    }
}

impl fmt::Display for RingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.tau == 1 {
            if self.k == 1 {
                write!(f, "Z/{}", self.p)
            } else {
                write!(f, "Z/{}^{}", self.p, self.k)
            }
        } else {
            write!(f, "GR({}^{}, {})", self.p, self.k, self.tau)
        }
    }
}

/// Validated constructor for a [`Ring`].
pub fn make_ring(p: u64, k: u32, tau: u32, modulus: Option<&[u64]>) -> Result<Ring, RingError> {
    RingSpec::new(p, k, tau, modulus).map(Arc::new)
}

/// Z/p^k, the residue-degree-1 case.
pub fn make_zpk(p: u64, k: u32) -> Result<Ring, RingError> {
    make_ring(p, k, 1, None)
}

/// An element of a [`RingSpec`]: tau coefficients mod p^k.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingElem {
    ring: Ring,
    coeffs: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl RingElem {
    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Units are exactly the elements whose reduction mod p is nonzero in
    /// the residue field.
    pub fn is_unit(&self) -> bool {
        self.coeffs.iter().any(|&c| c % self.ring.p != 0)
    }

    pub fn same_ring(&self, other: &RingElem) -> bool {
        Arc::ptr_eq(&self.ring, &other.ring) || self.ring == other.ring
    }

    fn assert_same_ring(&self, other: &RingElem) {
        assert!(
            self.same_ring(other),
            "ring mismatch: {} vs {}",
            self.ring,
            other.ring
        );
    }

    pub fn add_elem(&self, other: &RingElem) -> RingElem {
        self.assert_same_ring(other);
        let pk = self.ring.pk as u128;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| ((a as u128 + b as u128) % pk) as u64)
            .collect();
        RingElem {
            ring: self.ring.clone(),
            coeffs,
        }
    }

    pub fn sub_elem(&self, other: &RingElem) -> RingElem {
        self.assert_same_ring(other);
        let pk = self.ring.pk as u128;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| ((a as u128 + pk - b as u128) % pk) as u64)
            .collect();
        RingElem {
            ring: self.ring.clone(),
            coeffs,
        }
    }

    pub fn neg_elem(&self) -> RingElem {
        let pk = self.ring.pk;
        let coeffs = self
            .coeffs
            .iter()
            .map(|&a| if a == 0 { 0 } else { pk - a })
            .collect();
        RingElem {
            ring: self.ring.clone(),
            coeffs,
        }
    }

    pub fn mul_elem(&self, other: &RingElem) -> RingElem {
        self.assert_same_ring(other);
        let tau = self.ring.tau as usize;
        let pk = self.ring.pk as u128;
        if tau == 1 {
            let v = (self.coeffs[0] as u128 * other.coeffs[0] as u128) % pk;
            return RingElem {
                ring: self.ring.clone(),
                coeffs: vec![v as u64],
            };
        }
        // Convolution, then reduction by the monic modulus.
        let mut conv = vec![0u128; 2 * tau - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                conv[i + j] = (conv[i + j] + a as u128 * b as u128) % pk;
            }
        }
        for d in (tau..2 * tau - 1).rev() {
            let t = conv[d];
            if t == 0 {
                continue;
            }
            conv[d] = 0;
            for j in 0..tau {
                let m = self.ring.modulus[j] as u128;
                if m == 0 {
                    continue;
                }
                // x^d = -m_j x^(d - tau + j) + ...
                let idx = d - tau + j;
                conv[idx] = (conv[idx] + pk - (t * m) % pk) % pk;
            }
        }
        RingElem {
            ring: self.ring.clone(),
            coeffs: conv[..tau].iter().map(|&c| c as u64).collect(),
        }
    }

    pub fn pow(&self, mut e: u128) -> RingElem {
        let mut base = self.clone();
        let mut acc = self.ring.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_elem(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_elem(&base);
            }
        }
        acc
    }

    /// Reinterpret the same coefficient vector in a compatible ring of lower
    /// precision (same p, tau, modulus).
    pub fn reduce_to(&self, target: &Ring) -> Result<RingElem, RingError> {
        if target.p != self.ring.p || target.tau != self.ring.tau {
            return Err(RingError::RingMismatch);
        }
        if target.k > self.ring.k {
            return Err(RingError::PrecisionIncrease {
                from: self.ring.k,
                to: target.k,
            });
        }
        let expected: Vec<u64> = self.ring.modulus.iter().map(|&c| c % target.pk).collect();
        if expected != target.modulus {
            return Err(RingError::RingMismatch);
        }
        Ok(RingElem {
            ring: target.clone(),
            coeffs: self.coeffs.iter().map(|&c| c % target.pk).collect(),
        })
    }

    /// Canonical machine form of the coefficients: "c0" or "c0,c1,...".
    pub fn coeff_string(&self) -> String {
        self.coeffs
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ring.tau == 1 {
            return write!(f, "{}", self.coeffs[0]);
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*x")?,
                _ => write!(f, "{c}*x^{i}")?,
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

macro_rules! impl_ref_op {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl std::ops::$trait<&RingElem> for &RingElem {
            type Output = RingElem;
            fn $method(self, rhs: &RingElem) -> RingElem {
                self.$inner(rhs)
            }
        }
    };
}

impl_ref_op!(Add, add, add_elem);
impl_ref_op!(Sub, sub, sub_elem);
impl_ref_op!(Mul, mul, mul_elem);

impl std::ops::Neg for &RingElem {
    type Output = RingElem;
    fn neg(self) -> RingElem {
        self.neg_elem()
    }
}

/// Checked arithmetic: errors (rather than panics) on a ring mismatch.
pub fn arith(a: &RingElem, b: &RingElem, op: ArithOp) -> Result<RingElem, RingError> {
    if !a.same_ring(b) {
        return Err(RingError::RingMismatch);
    }
    Ok(match op {
        ArithOp::Add => a.add_elem(b),
        ArithOp::Sub => a.sub_elem(b),
        ArithOp::Mul => a.mul_elem(b),
    })
}

/// Inverse of a unit: invert in the residue field (Fermat power), then
/// Newton-lift `x -> x(2 - a x)`, doubling the valid precision each pass.
pub fn unit_inverse(a: &RingElem) -> Result<RingElem, RingError> {
    if !a.is_unit() {
        return Err(RingError::NotAUnit);
    }
    let ring = a.ring.clone();
    let field = ring.reduced(1)?;
    let a1 = a.reduce_to(&field)?;
    let q = (field.p as u128).pow(field.tau);
    let inv1 = a1.pow(q - 2);
    // Lift the residue-field inverse into the full ring and refine.
    let mut x = ring.elem(inv1.coeffs())?;
    let two = ring.from_u64(2);
    let mut prec = 1u32;
    while prec < ring.k {
        let t = two.sub_elem(&a.mul_elem(&x));
        x = x.mul_elem(&t);
        prec *= 2;
    }
    debug_assert!(a.mul_elem(&x) == ring.one());
    Ok(x)
}

/// Coefficientwise reduction mod p^k2, a ring homomorphism.
pub fn reduce_precision(a: &RingElem, k2: u32) -> Result<RingElem, RingError> {
    let target = a.ring().reduced(k2)?;
    a.reduce_to(&target)
}
