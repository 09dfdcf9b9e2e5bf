//! 2x2 matrices over a [`RingElem`] ring or over exact integers, and the
//! evaluation of free-group words at matrix tuples.
//!
//! Words may contain inverse letters. For a 2x2 matrix the adjugate
//! `adj([[a,b],[c,d]]) = [[d,-b],[-c,a]]` satisfies adj(M) M = det(M) I, so
//! M^-1 = adj(M) det(M)^-1 whenever det(M) is invertible in the entry ring.
//! Substituting adjugates for inverses is what makes iterated word maps
//! polynomial in the entries, which the `lifting` module relies on.
//!
//! Everything is generic over an [`Entry`] scalar so the same evaluation
//! code runs over exact integers, modular rings, and the dual numbers used
//! for Jacobians.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::freegroup::{Endo, Word};
use crate::localring::{unit_inverse, Ring, RingElem, RingError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatError {
    #[error("matrix entries belong to different rings")]
    RingMismatch,
    #[error("word rank {word} does not match tuple size {tuple}")]
    RankMismatch { word: usize, tuple: usize },
    #[error("an inverse letter needs a unit determinant")]
    NonUnitDeterminant,
    #[error("exact matrices must have determinant 1 or -1")]
    DetNotUnit,
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// Scalar operations needed to evaluate word maps. `zero_like`/`one_like`
/// take context (the ring, the gradient dimension) from an existing value.
/// `try_inverse` returns `None` when the value is not invertible.
pub trait Entry: Clone + PartialEq {
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn try_inverse(&self) -> Option<Self>;
}

impl Entry for BigInt {
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn zero_like(&self) -> Self {
        BigInt::zero()
    }
    fn one_like(&self) -> Self {
        BigInt::one()
    }
    fn try_inverse(&self) -> Option<Self> {
        // The only integer units are +-1, each its own inverse.
        if self.abs().is_one() {
            Some(self.clone())
        } else {
            None
        }
    }
}

impl Entry for RingElem {
    fn add(&self, rhs: &Self) -> Self {
        self.add_elem(rhs)
    }
    fn sub(&self, rhs: &Self) -> Self {
        self.sub_elem(rhs)
    }
    fn mul(&self, rhs: &Self) -> Self {
        self.mul_elem(rhs)
    }
    fn neg(&self) -> Self {
        self.neg_elem()
    }
    fn zero_like(&self) -> Self {
        self.ring().zero()
    }
    fn one_like(&self) -> Self {
        self.ring().one()
    }
    fn try_inverse(&self) -> Option<Self> {
        unit_inverse(self).ok()
    }
}

/// A 2x2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mat2<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Entry> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Mat2<T> {
        Mat2 { a, b, c, d }
    }

    /// Identity matrix with context taken from `sample`.
    pub fn identity_like(sample: &T) -> Mat2<T> {
        Mat2 {
            a: sample.one_like(),
            b: sample.zero_like(),
            c: sample.zero_like(),
            d: sample.one_like(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.a == self.a.one_like()
            && self.d == self.d.one_like()
            && self.b == self.b.zero_like()
            && self.c == self.c.zero_like()
    }

    pub fn mul(&self, rhs: &Mat2<T>) -> Mat2<T> {
        Mat2 {
            a: self.a.mul(&rhs.a).add(&self.b.mul(&rhs.c)),
            b: self.a.mul(&rhs.b).add(&self.b.mul(&rhs.d)),
            c: self.c.mul(&rhs.a).add(&self.d.mul(&rhs.c)),
            d: self.c.mul(&rhs.b).add(&self.d.mul(&rhs.d)),
        }
    }

    pub fn det(&self) -> T {
        self.a.mul(&self.d).sub(&self.b.mul(&self.c))
    }

    pub fn adj(&self) -> Mat2<T> {
        Mat2 {
            a: self.d.clone(),
            b: self.b.neg(),
            c: self.c.neg(),
            d: self.a.clone(),
        }
    }

    pub fn scale(&self, s: &T) -> Mat2<T> {
        Mat2 {
            a: self.a.mul(s),
            b: self.b.mul(s),
            c: self.c.mul(s),
            d: self.d.mul(s),
        }
    }

    /// adj(M) det(M)^-1; `None` when the determinant is not a unit.
    pub fn try_inverse(&self) -> Option<Mat2<T>> {
        let dinv = self.det().try_inverse()?;
        Some(self.adj().scale(&dinv))
    }

    pub fn entries(&self) -> [&T; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn map<U: Entry>(&self, mut f: impl FnMut(&T) -> U) -> Mat2<U> {
        Mat2 {
            a: f(&self.a),
            b: f(&self.b),
            c: f(&self.c),
            d: f(&self.d),
        }
    }
}

impl Mat2<BigInt> {
    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Mat2<BigInt> {
        Mat2 {
            a: a.into(),
            b: b.into(),
            c: c.into(),
            d: d.into(),
        }
    }
}

impl Mat2<RingElem> {
    pub fn ring(&self) -> &Ring {
        self.a.ring()
    }

    pub fn same_ring(&self, other: &Mat2<RingElem>) -> bool {
        self.a.same_ring(&other.a)
    }

    /// Ring-checked product, for callers that may mix rings.
    pub fn checked_mul(&self, rhs: &Mat2<RingElem>) -> Result<Mat2<RingElem>, MatError> {
        if !self.same_ring(rhs) {
            return Err(MatError::RingMismatch);
        }
        Ok(self.mul(rhs))
    }

    pub fn identity_in(ring: &Ring) -> Mat2<RingElem> {
        Mat2 {
            a: ring.one(),
            b: ring.zero(),
            c: ring.zero(),
            d: ring.one(),
        }
    }

    /// Entrywise precision reduction into `target`.
    pub fn reduce_to(&self, target: &Ring) -> Result<Mat2<RingElem>, RingError> {
        Ok(Mat2 {
            a: self.a.reduce_to(target)?,
            b: self.b.reduce_to(target)?,
            c: self.c.reduce_to(target)?,
            d: self.d.reduce_to(target)?,
        })
    }
}

impl<T: fmt::Display> fmt::Display for Mat2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// A point of M_2^k: one matrix per free-group generator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatTuple<T> {
    pub mats: Vec<Mat2<T>>,
}

impl<T: Entry> MatTuple<T> {
    pub fn new(mats: Vec<Mat2<T>>) -> MatTuple<T> {
        MatTuple { mats }
    }

    pub fn rank(&self) -> usize {
        self.mats.len()
    }

    /// Flatten to 4k coordinates, each matrix contributing (a, b, c, d).
    pub fn coords(&self) -> Vec<T> {
        self.mats
            .iter()
            .flat_map(|m| m.entries().map(T::clone))
            .collect()
    }

    pub fn from_coords(coords: &[T]) -> MatTuple<T> {
        assert!(coords.len().is_multiple_of(4), "coordinate count must be 4k");
        let mats = coords
            .chunks(4)
            .map(|ch| Mat2::new(ch[0].clone(), ch[1].clone(), ch[2].clone(), ch[3].clone()))
            .collect();
        MatTuple { mats }
    }
}

impl MatTuple<BigInt> {
    pub fn reduce_to_ring(&self, ring: &Ring) -> MatTuple<RingElem> {
        MatTuple {
            mats: self
                .mats
                .iter()
                .map(|m| m.map(|e| ring.from_bigint(e)))
                .collect(),
        }
    }
}

impl MatTuple<RingElem> {
    pub fn ring(&self) -> &Ring {
        self.mats[0].ring()
    }

    pub fn reduce_to(&self, target: &Ring) -> Result<MatTuple<RingElem>, RingError> {
        Ok(MatTuple {
            mats: self
                .mats
                .iter()
                .map(|m| m.reduce_to(target))
                .collect::<Result<_, _>>()?,
        })
    }

    /// All determinants are units: the tuple stays invertible in the ring.
    pub fn all_nonsingular(&self) -> bool {
        self.mats.iter().all(|m| m.det().is_unit())
    }

    /// Deterministic byte-order key (coefficient vectors flattened).
    pub fn encoding(&self) -> Vec<u64> {
        self.mats
            .iter()
            .flat_map(|m| m.entries().into_iter().flat_map(|e| e.coeffs().to_vec()))
            .collect()
    }
}

/// Evaluate a word at a matrix tuple, left to right. Inverse letters use
/// adj(M) det(M)^-1 and fail with [`MatError::NonUnitDeterminant`] only when
/// actually encountered on a non-invertible matrix.
pub fn eval_word<T: Entry>(w: &Word, mats: &[Mat2<T>]) -> Result<Mat2<T>, MatError> {
    if w.rank() != mats.len() || mats.is_empty() {
        return Err(MatError::RankMismatch {
            word: w.rank(),
            tuple: mats.len(),
        });
    }
    let mut inverses: Vec<Option<Mat2<T>>> = vec![None; mats.len()];
    let mut acc = Mat2::identity_like(&mats[0].a);
    for &l in w.letters() {
        let i = l.unsigned_abs() as usize - 1;
        if l > 0 {
            acc = acc.mul(&mats[i]);
        } else {
            if inverses[i].is_none() {
                inverses[i] =
                    Some(mats[i].try_inverse().ok_or(MatError::NonUnitDeterminant)?);
            }
            acc = acc.mul(inverses[i].as_ref().unwrap());
        }
    }
    Ok(acc)
}

/// The self-map of M_2^k induced by an endomorphism: component i is the
/// image word w_i evaluated at the tuple.
pub fn phi_map<T: Entry>(endo: &Endo, x: &MatTuple<T>) -> Result<MatTuple<T>, MatError> {
    let mats = endo
        .images()
        .iter()
        .map(|w| eval_word(w, &x.mats))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MatTuple { mats })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreenessReport {
    pub free: bool,
    pub max_len: usize,
    /// A shortest nonempty reduced word evaluating to the identity, if any.
    pub witness: Option<Word>,
}

/// Exhaustively check that no nonempty freely reduced word of length at
/// most `max_len` in the given exact matrices evaluates to the identity.
/// Inverses are exact, so every determinant must be +-1.
pub fn freeness_check(
    mats: &[Mat2<BigInt>],
    max_len: usize,
) -> Result<FreenessReport, MatError> {
    let k = mats.len();
    if k == 0 {
        return Err(MatError::RankMismatch { word: 0, tuple: 0 });
    }
    let mut letter_mats: Vec<Mat2<BigInt>> = Vec::with_capacity(2 * k);
    for m in mats {
        let det = m.det();
        if !det.abs().is_one() {
            return Err(MatError::DetNotUnit);
        }
        letter_mats.push(m.clone());
        // det = +-1, so M^-1 = adj(M) * det.
        letter_mats.push(m.adj().scale(&det));
    }
    let letter_of = |slot: usize| -> i32 {
        let gen = (slot / 2 + 1) as i32;
        if slot.is_multiple_of(2) {
            gen
        } else {
            -gen
        }
    };

    // Iterative deepening: witnesses are found in increasing length, so the
    // first hit is shortest (and lexicographically first in slot order).
    let identity = Mat2::identity_like(&mats[0].a);
    for target in 1..=max_len {
        let mut letters: Vec<usize> = Vec::with_capacity(target);
        if let Some(slots) =
            freeness_dfs(&letter_mats, &identity, &mut letters, &identity, target)
        {
            let word_letters: Vec<i32> = slots.iter().map(|&s| letter_of(s)).collect();
            let witness = Word::reduced(k, &word_letters).expect("valid letters");
            return Ok(FreenessReport {
                free: false,
                max_len,
                witness: Some(witness),
            });
        }
    }
    Ok(FreenessReport {
        free: true,
        max_len,
        witness: None,
    })
}

/// Depth-first over reduced words of exactly `target` letters; slot 2i is
/// generator i+1, slot 2i+1 its inverse. Shorter words were tested by the
/// earlier deepening rounds.
fn freeness_dfs(
    letter_mats: &[Mat2<BigInt>],
    identity: &Mat2<BigInt>,
    letters: &mut Vec<usize>,
    prod: &Mat2<BigInt>,
    target: usize,
) -> Option<Vec<usize>> {
    if letters.len() == target {
        return (prod == identity).then(|| letters.clone());
    }
    for slot in 0..letter_mats.len() {
        if let Some(&prev) = letters.last() {
            if slot == prev ^ 1 {
                continue;
            }
        }
        letters.push(slot);
        let next = prod.mul(&letter_mats[slot]);
        if let Some(wit) = freeness_dfs(letter_mats, identity, letters, &next, target) {
            return Some(wit);
        }
        letters.pop();
    }
    None
}
