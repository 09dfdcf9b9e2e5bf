//! Jacobians of iterated word maps and the congruences that lift periods
//! across precision levels.
//!
//! The coordinates of an iterated word map are polynomials in the 4k matrix
//! entries (adjugates keep inverses polynomial), so the first-order
//! expansion P(A + p^l Y) = P(A) + p^l (grad P(A) . Y) holds mod p^(l+1)
//! coordinatewise. Gradients are computed by forward-mode dual numbers
//! (value plus a 4k-vector of infinitesimal parts, epsilon^2 = 0) rather
//! than symbolically: iterated word maps explode as polynomials but stay
//! cheap to evaluate.
//!
//! The lifting chain: if X mod p is periodic with period l1 and some
//! iterate Phi^M (M = l1 * r, r the order of the Jacobian of Phi^l1) has
//! identity tangent action, then Phi^(M p^(k-1)) (X) = X mod p^k for every
//! k — verified, not assumed, by [`verify_recurrence`]. Word maps on
//! matrix tuples routinely have singular full Jacobians (their images lie
//! in proper subvarieties), so alongside the strict [`jacobian_order`]
//! there is [`jacobian_image_order`], the order of the Jacobian on its
//! eventual image, which is the invertible part that actually drives the
//! recurrence.

use num_bigint::BigInt;
use thiserror::Error;

use crate::dynamics::{detect_cycle, DynamicsError};
use crate::freegroup::Endo;
use crate::localring::{make_zpk, unit_inverse, Ring, RingElem, RingError};
use crate::matgroup::{phi_map, Entry, MatError, MatTuple};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LiftError {
    #[error("Jacobian is singular mod p (ramified point)")]
    SingularJacobian,
    #[error("no Jacobian order found within cap {cap}")]
    OrderCapExceeded { cap: u64 },
    #[error("coordinate {coord} of Phi^{exponent}(X) - X is not divisible by p^{level}")]
    CongruenceFailed {
        coord: usize,
        exponent: u64,
        level: u32,
    },
    #[error("working precision {have} is below the required {need}")]
    PrecisionTooLow { have: u32, need: u32 },
    #[error("exponent overflows u64")]
    ExponentOverflow,
    #[error(transparent)]
    Eval(#[from] MatError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// A ring element together with a 4k-vector of first-order infinitesimal
/// parts: (v + eps g) with eps^2 = 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualElem {
    pub value: RingElem,
    pub grad: Vec<RingElem>,
}

impl DualElem {
    pub fn constant(value: RingElem, dim: usize) -> DualElem {
        let zero = value.ring().zero();
        DualElem {
            value,
            grad: vec![zero; dim],
        }
    }

    /// A coordinate seed: value plus the unit infinitesimal in slot `slot`.
    pub fn seeded(value: RingElem, dim: usize, slot: usize) -> DualElem {
        let mut d = DualElem::constant(value, dim);
        d.grad[slot] = d.value.ring().one();
        d
    }
}

impl Entry for DualElem {
    fn add(&self, rhs: &Self) -> Self {
        DualElem {
            value: self.value.add_elem(&rhs.value),
            grad: self
                .grad
                .iter()
                .zip(&rhs.grad)
                .map(|(a, b)| a.add_elem(b))
                .collect(),
        }
    }
    fn sub(&self, rhs: &Self) -> Self {
        DualElem {
            value: self.value.sub_elem(&rhs.value),
            grad: self
                .grad
                .iter()
                .zip(&rhs.grad)
                .map(|(a, b)| a.sub_elem(b))
                .collect(),
        }
    }
    fn mul(&self, rhs: &Self) -> Self {
        // (v + eps g)(v' + eps g') = vv' + eps (v g' + g v')
        DualElem {
            value: self.value.mul_elem(&rhs.value),
            grad: self
                .grad
                .iter()
                .zip(&rhs.grad)
                .map(|(g, g2)| self.value.mul_elem(g2).add_elem(&g.mul_elem(&rhs.value)))
                .collect(),
        }
    }
    fn neg(&self) -> Self {
        DualElem {
            value: self.value.neg_elem(),
            grad: self.grad.iter().map(RingElem::neg_elem).collect(),
        }
    }
    fn zero_like(&self) -> Self {
        DualElem::constant(self.value.ring().zero(), self.grad.len())
    }
    fn one_like(&self) -> Self {
        DualElem::constant(self.value.ring().one(), self.grad.len())
    }
    fn try_inverse(&self) -> Option<Self> {
        // d(1/v) = -dv / v^2
        let vinv = unit_inverse(&self.value).ok()?;
        let neg_sq = vinv.mul_elem(&vinv).neg_elem();
        Some(DualElem {
            value: vinv,
            grad: self.grad.iter().map(|g| neg_sq.mul_elem(g)).collect(),
        })
    }
}

/// The 4k x 4k Jacobian of Phi^iterate at a base point; row i is the
/// gradient of output coordinate i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JacobianMat {
    pub ring: Ring,
    pub n: usize,
    pub rows: Vec<Vec<RingElem>>,
    pub base: MatTuple<RingElem>,
    pub endo: Endo,
    pub iterate: u64,
}

impl JacobianMat {
    pub fn identity(ring: &Ring, n: usize, base: MatTuple<RingElem>, endo: Endo) -> JacobianMat {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { ring.one() } else { ring.zero() })
                    .collect()
            })
            .collect();
        JacobianMat {
            ring: ring.clone(),
            n,
            rows,
            base,
            endo,
            iterate: 0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, row)| {
            row.iter()
                .enumerate()
                .all(|(j, e)| *e == if i == j { self.ring.one() } else { self.ring.zero() })
        })
    }

    pub fn matmul(&self, rhs: &JacobianMat) -> JacobianMat {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let rows = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        let mut acc = self.ring.zero();
                        for k in 0..self.n {
                            acc = acc.add_elem(&self.rows[i][k].mul_elem(&rhs.rows[k][j]));
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        JacobianMat {
            ring: self.ring.clone(),
            n: self.n,
            rows,
            base: rhs.base.clone(),
            endo: self.endo.clone(),
            iterate: self.iterate + rhs.iterate,
        }
    }

    /// Matrix-vector product J . y.
    pub fn apply(&self, y: &[RingElem]) -> Vec<RingElem> {
        assert_eq!(y.len(), self.n);
        self.rows
            .iter()
            .map(|row| {
                let mut acc = self.ring.zero();
                for (e, v) in row.iter().zip(y) {
                    acc = acc.add_elem(&e.mul_elem(v));
                }
                acc
            })
            .collect()
    }

    pub fn reduce_to(&self, target: &Ring) -> Result<JacobianMat, RingError> {
        Ok(JacobianMat {
            ring: target.clone(),
            n: self.n,
            rows: self
                .rows
                .iter()
                .map(|row| row.iter().map(|e| e.reduce_to(target)).collect())
                .collect::<Result<_, _>>()?,
            base: self.base.reduce_to(target)?,
            endo: self.endo.clone(),
            iterate: self.iterate,
        })
    }

    /// Rank over the residue field (entries must be at precision 1).
    pub fn rank_mod_p(&self) -> usize {
        assert_eq!(
            self.ring.precision(),
            1,
            "rank is computed over the residue field"
        );
        let mut rows = self.rows.clone();
        let mut rank = 0;
        for col in 0..self.n {
            let pivot = (rank..self.n).find(|&r| rows[r][col].is_unit());
            let Some(pivot) = pivot else { continue };
            rows.swap(rank, pivot);
            let inv = unit_inverse(&rows[rank][col]).expect("pivot is a unit");
            for e in rows[rank][col..].iter_mut() {
                *e = e.mul_elem(&inv);
            }
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && !row[col].is_zero() {
                    let f = row[col].clone();
                    for (e, pe) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                        *e = e.sub_elem(&pe.mul_elem(&f));
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Jacobian of Phi^iterate at x by forward-mode dual evaluation: one pass
/// with 4k-dimensional infinitesimal parts yields all 4k gradients.
pub fn jacobian(endo: &Endo, iterate: u64, x: &MatTuple<RingElem>) -> Result<JacobianMat, LiftError> {
    let n = 4 * x.rank();
    let coords = x.coords();
    let seeded: Vec<DualElem> = coords
        .iter()
        .enumerate()
        .map(|(slot, v)| DualElem::seeded(v.clone(), n, slot))
        .collect();
    let mut tuple: MatTuple<DualElem> = MatTuple::from_coords(&seeded);
    for _ in 0..iterate {
        tuple = phi_map(endo, &tuple)?;
    }
    let out = tuple.coords();
    let rows = out.iter().map(|d| d.grad.clone()).collect();
    Ok(JacobianMat {
        ring: x.ring().clone(),
        n,
        rows,
        base: x.clone(),
        endo: endo.clone(),
        iterate,
    })
}

/// Least r <= cap with J^r = identity; requires J over the residue field.
/// A singular J has no order and is reported as
/// [`LiftError::SingularJacobian`]; an order beyond the cap yields Ok(None).
pub fn jacobian_order(j: &JacobianMat, cap: u64) -> Result<Option<u64>, LiftError> {
    assert_eq!(
        j.ring.precision(),
        1,
        "jacobian_order expects a precision-1 Jacobian"
    );
    if j.rank_mod_p() < j.n {
        return Err(LiftError::SingularJacobian);
    }
    let mut power = j.clone();
    for r in 1..=cap {
        if power.is_identity() {
            return Ok(Some(r));
        }
        power = power.matmul(j);
    }
    Ok(None)
}

/// Least r <= cap with J^(n+r) = J^n (n the dimension), i.e. the
/// multiplicative order of J restricted to its eventual image. Agrees with
/// [`jacobian_order`] when J is invertible and stays defined when the full
/// Jacobian is singular, which is the generic situation for word maps whose
/// image lies in a proper subvariety.
pub fn jacobian_image_order(j: &JacobianMat, cap: u64) -> Result<Option<u64>, LiftError> {
    assert_eq!(
        j.ring.precision(),
        1,
        "jacobian_image_order expects a precision-1 Jacobian"
    );
    let mut stable = j.clone();
    for _ in 1..j.n {
        stable = stable.matmul(j);
    }
    // stable = J^n; the kernel and image have split by now.
    let mut power = stable.matmul(j);
    for r in 1..=cap {
        if power.rows == stable.rows {
            return Ok(Some(r));
        }
        power = power.matmul(j);
    }
    Ok(None)
}

/// The exponent M = l1 * r: Phi^M fixes x mod p and its tangent map at x is
/// the identity mod p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StableExponent {
    pub period_mod_p: u64,
    pub jacobian_order: u64,
    pub m: u64,
}

fn period_mod_p(endo: &Endo, x: &MatTuple<BigInt>, p: u64, cycle_cap: u64) -> Result<(u64, MatTuple<RingElem>), LiftError> {
    let ring = make_zpk(p, 1)?;
    let x1 = x.reduce_to_ring(&ring);
    let rec = detect_cycle(endo, &x1, cycle_cap)?;
    if rec.tail != 0 {
        return Err(LiftError::Dynamics(DynamicsError::NotPeriodicModP {
            level: 1,
            tail: rec.tail,
        }));
    }
    Ok((rec.period, x1))
}

/// Strict form: requires the full Jacobian of Phi^l1 at x mod p to be
/// invertible and takes r = its order.
pub fn stable_exponent(
    endo: &Endo,
    x: &MatTuple<BigInt>,
    p: u64,
    cycle_cap: u64,
    order_cap: u64,
) -> Result<StableExponent, LiftError> {
    let (l1, x1) = period_mod_p(endo, x, p, cycle_cap)?;
    let j = jacobian(endo, l1, &x1)?;
    let r = jacobian_order(&j, order_cap)?
        .ok_or(LiftError::OrderCapExceeded { cap: order_cap })?;
    Ok(StableExponent {
        period_mod_p: l1,
        jacobian_order: r,
        m: l1.checked_mul(r).ok_or(LiftError::ExponentOverflow)?,
    })
}

/// Invertible-part form: r is the order of the Jacobian on its eventual
/// image, defined even when the full Jacobian is singular.
pub fn stable_exponent_on_image(
    endo: &Endo,
    x: &MatTuple<BigInt>,
    p: u64,
    cycle_cap: u64,
    order_cap: u64,
) -> Result<StableExponent, LiftError> {
    let (l1, x1) = period_mod_p(endo, x, p, cycle_cap)?;
    let j = jacobian(endo, l1, &x1)?;
    let r = jacobian_image_order(&j, order_cap)?
        .ok_or(LiftError::OrderCapExceeded { cap: order_cap })?;
    Ok(StableExponent {
        period_mod_p: l1,
        jacobian_order: r,
        m: l1.checked_mul(r).ok_or(LiftError::ExponentOverflow)?,
    })
}

/// The divided difference alpha^(i) = (Phi^(M p^(i-1))(X) - X) / p^i mod p,
/// the obstruction to lifting periodicity from level i to i+1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DividedDiff {
    pub index: u32,
    pub p: u64,
    pub alpha: Vec<u64>,
}

impl DividedDiff {
    pub fn is_zero(&self) -> bool {
        self.alpha.iter().all(|&a| a == 0)
    }
}

pub fn divided_difference(
    endo: &Endo,
    x: &MatTuple<BigInt>,
    m: u64,
    index: u32,
    p: u64,
    precision: u32,
) -> Result<DividedDiff, LiftError> {
    if precision < index + 1 {
        return Err(LiftError::PrecisionTooLow {
            have: precision,
            need: index + 1,
        });
    }
    let ring = make_zpk(p, precision)?;
    let xk = x.reduce_to_ring(&ring);
    let exponent = m
        .checked_mul(p.checked_pow(index - 1).ok_or(LiftError::ExponentOverflow)?)
        .ok_or(LiftError::ExponentOverflow)?;
    let mut y = xk.clone();
    for _ in 0..exponent {
        y = phi_map(endo, &y)?;
    }
    let pi = p.pow(index);
    let mut alpha = Vec::with_capacity(4 * x.rank());
    for (coord, (yc, xc)) in y.coords().iter().zip(xk.coords()).enumerate() {
        let diff = yc.sub_elem(&xc).coeffs()[0];
        if diff % pi != 0 {
            return Err(LiftError::CongruenceFailed {
                coord,
                exponent,
                level: index,
            });
        }
        alpha.push((diff / pi) % p);
    }
    Ok(DividedDiff {
        index,
        p,
        alpha,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceCheck {
    pub k: u32,
    pub exponent: u64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceReport {
    pub p: u64,
    pub m: u64,
    pub per_k: Vec<RecurrenceCheck>,
}

impl RecurrenceReport {
    pub fn all_pass(&self) -> bool {
        self.per_k.iter().all(|c| c.pass)
    }
}

/// Check Phi^(M p^(k-1))(X) = X mod p^k for k = 1..levels. Failures are
/// data, not errors.
pub fn verify_recurrence(
    endo: &Endo,
    x: &MatTuple<BigInt>,
    m: u64,
    p: u64,
    levels: u32,
) -> Result<RecurrenceReport, LiftError> {
    let mut per_k = Vec::with_capacity(levels as usize);
    for k in 1..=levels {
        let ring = make_zpk(p, k)?;
        let xk = x.reduce_to_ring(&ring);
        let exponent = m
            .checked_mul(p.checked_pow(k - 1).ok_or(LiftError::ExponentOverflow)?)
            .ok_or(LiftError::ExponentOverflow)?;
        let mut y = xk.clone();
        for _ in 0..exponent {
            y = phi_map(endo, &y)?;
        }
        per_k.push(RecurrenceCheck {
            k,
            exponent,
            pass: y == xk,
        });
    }
    Ok(RecurrenceReport { p, m, per_k })
}

/// First-order expansion check: for every coordinate polynomial P of the
/// word map, P(A + p^l Y) = P(A) + p^l (grad P(A) . Y) mod p^(l+1).
/// An algebraic identity; any failure is an implementation bug.
pub fn gradient_congruence_check(
    endo: &Endo,
    a: &MatTuple<RingElem>,
    y: &MatTuple<RingElem>,
    l: u32,
) -> Result<bool, LiftError> {
    let ring = a.ring().clone();
    if ring.precision() < l + 1 {
        return Err(LiftError::PrecisionTooLow {
            have: ring.precision(),
            need: l + 1,
        });
    }
    let pl = ring.from_u64(ring.p().pow(l));
    // a + p^l y, coordinatewise
    let shifted_coords: Vec<RingElem> = a
        .coords()
        .iter()
        .zip(y.coords())
        .map(|(ac, yc)| ac.add_elem(&pl.mul_elem(&yc)))
        .collect();
    let shifted = MatTuple::from_coords(&shifted_coords);
    let lhs = phi_map(endo, &shifted)?;

    let j = jacobian(endo, 1, a)?;
    let jy = j.apply(&y.coords());
    let base = phi_map(endo, a)?;
    let rhs_coords: Vec<RingElem> = base
        .coords()
        .iter()
        .zip(&jy)
        .map(|(b, t)| b.add_elem(&pl.mul_elem(t)))
        .collect();
    let rhs = MatTuple::from_coords(&rhs_coords);

    let target = ring.reduced(l + 1)?;
    Ok(lhs.reduce_to(&target)? == rhs.reduce_to(&target)?)
}
