//! Property tests for the ring layer and matrix word evaluation: ring
//! axioms, precision-reduction homomorphisms, and reduction equivariance of
//! everything built on top.

use proptest::prelude::*;
use torsep::localring::{make_ring, reduce_precision, unit_inverse, Ring};
use torsep::matgroup::eval_word;
use torsep::{Mat2, MatTuple, RingElem, Word};

fn ring_params() -> impl Strategy<Value = (u64, u32, u32)> {
    (
        prop_oneof![Just(2u64), Just(3), Just(5), Just(7)],
        1u32..=4,
        prop_oneof![Just(1u32), Just(2)],
    )
}

fn ring_and_elems(n: usize) -> impl Strategy<Value = (Ring, Vec<RingElem>)> {
    ring_params().prop_flat_map(move |(p, k, tau)| {
        let ring = make_ring(p, k, tau, None).unwrap();
        let size = ring.size().unwrap();
        prop::collection::vec(0..size, n).prop_map(move |idxs| {
            let elems = idxs.iter().map(|&i| ring.elem_from_index(i)).collect();
            (ring.clone(), elems)
        })
    })
}

proptest! {
    #[test]
    fn ring_axioms((_ring, es) in ring_and_elems(3)) {
        let (a, b, c) = (&es[0], &es[1], &es[2]);
        prop_assert_eq!(a.add_elem(b), b.add_elem(a));
        prop_assert_eq!(a.mul_elem(b), b.mul_elem(a));
        prop_assert_eq!(a.add_elem(b).add_elem(c), a.add_elem(&b.add_elem(c)));
        prop_assert_eq!(a.mul_elem(b).mul_elem(c), a.mul_elem(&b.mul_elem(c)));
        prop_assert_eq!(
            a.mul_elem(&b.add_elem(c)),
            a.mul_elem(b).add_elem(&a.mul_elem(c))
        );
        prop_assert_eq!(a.sub_elem(b), a.add_elem(&b.neg_elem()));
    }

    #[test]
    fn precision_reduction_is_a_homomorphism((ring, es) in ring_and_elems(2), k2 in 1u32..=4) {
        let k2 = k2.min(ring.precision());
        let (a, b) = (&es[0], &es[1]);
        let pa = reduce_precision(a, k2).unwrap();
        let pb = reduce_precision(b, k2).unwrap();
        prop_assert_eq!(reduce_precision(&a.add_elem(b), k2).unwrap(), pa.add_elem(&pb));
        prop_assert_eq!(reduce_precision(&a.mul_elem(b), k2).unwrap(), pa.mul_elem(&pb));
    }

    #[test]
    fn precision_reductions_compose((_, es) in ring_and_elems(1), k2 in 1u32..=4, k3 in 1u32..=4) {
        let a = &es[0];
        let k2 = k2.min(a.ring().precision());
        let k3 = k3.min(k2);
        let two_step = reduce_precision(&reduce_precision(a, k2).unwrap(), k3).unwrap();
        let one_step = reduce_precision(a, k3).unwrap();
        prop_assert_eq!(two_step, one_step);
    }

    #[test]
    fn unit_inverse_inverts_units((ring, es) in ring_and_elems(1)) {
        let a = &es[0];
        if a.is_unit() {
            let inv = unit_inverse(a).unwrap();
            prop_assert_eq!(a.mul_elem(&inv), ring.one());
        } else {
            prop_assert!(unit_inverse(a).is_err());
        }
    }

    /// For Z/p^k the Newton-lifted inverse must agree with plain extended
    /// Euclid on the integer representative.
    #[test]
    fn unit_inverse_matches_extended_euclid(p in prop_oneof![Just(3u64), Just(5), Just(7)], k in 1u32..=4, x in 1u64..10_000) {
        let ring = make_ring(p, k, 1, None).unwrap();
        let a = ring.from_u64(x);
        if a.is_unit() {
            let inv = unit_inverse(&a).unwrap();
            let expect = euclid_inverse(x % ring.coeff_modulus(), ring.coeff_modulus());
            prop_assert_eq!(inv.coeffs()[0], expect);
        }
    }

    #[test]
    fn det_is_multiplicative_and_adjugate_law_holds((ring, es) in ring_and_elems(8)) {
        let a = Mat2::new(es[0].clone(), es[1].clone(), es[2].clone(), es[3].clone());
        let b = Mat2::new(es[4].clone(), es[5].clone(), es[6].clone(), es[7].clone());
        prop_assert_eq!(a.mul(&b).det(), a.det().mul_elem(&b.det()));
        let prod = a.adj().mul(&a);
        prop_assert_eq!(prod, Mat2::identity_in(&ring).scale(&a.det()));
    }
}

fn euclid_inverse(a: u64, m: u64) -> u64 {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    assert_eq!(old_r, 1, "not a unit");
    (((old_s % m as i128) + m as i128) % m as i128) as u64
}

fn letter_strategy(rank: usize) -> impl Strategy<Value = i32> {
    let r = rank as i32;
    (1..=r).prop_flat_map(|i| prop_oneof![Just(i), Just(-i)])
}

fn word_strategy(rank: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(letter_strategy(rank), 0..=max_len)
        .prop_map(move |ls| Word::reduced(rank, &ls).unwrap())
}

fn invertible_tuple(ring: &Ring, idxs: &[u128]) -> Option<MatTuple<RingElem>> {
    let size = ring.size().unwrap();
    let mats: Vec<Mat2<RingElem>> = idxs
        .chunks(4)
        .map(|ch| {
            Mat2::new(
                ring.elem_from_index(ch[0] % size),
                ring.elem_from_index(ch[1] % size),
                ring.elem_from_index(ch[2] % size),
                ring.elem_from_index(ch[3] % size),
            )
        })
        .collect();
    let t = MatTuple::new(mats);
    t.all_nonsingular().then_some(t)
}

proptest! {
    /// Words with unit-determinant assignments evaluate homomorphically.
    #[test]
    fn eval_word_is_homomorphic(
        u in word_strategy(2, 6),
        v in word_strategy(2, 6),
        idxs in prop::collection::vec(0u128..10_000, 8),
        (p, k) in (prop_oneof![Just(3u64), Just(5)], 1u32..=2),
    ) {
        let ring = make_ring(p, k, 1, None).unwrap();
        if let Some(t) = invertible_tuple(&ring, &idxs) {
            let uv = u.mul(&v).unwrap();
            let lhs = eval_word(&uv, &t.mats).unwrap();
            let rhs = eval_word(&u, &t.mats).unwrap().mul(&eval_word(&v, &t.mats).unwrap());
            prop_assert_eq!(lhs, rhs);
        }
    }

    /// Precision reduction commutes with word evaluation entrywise.
    #[test]
    fn eval_word_commutes_with_reduction(
        w in word_strategy(2, 8),
        idxs in prop::collection::vec(0u128..100_000, 8),
        p in prop_oneof![Just(3u64), Just(5), Just(7)],
    ) {
        let high = make_ring(p, 3, 1, None).unwrap();
        let low = high.reduced(1).unwrap();
        if let Some(t) = invertible_tuple(&high, &idxs) {
            let down_then_eval = eval_word(&w, &t.reduce_to(&low).unwrap().mats).unwrap();
            let eval_then_down = eval_word(&w, &t.mats).unwrap().reduce_to(&low).unwrap();
            prop_assert_eq!(down_then_eval, eval_then_down);
        }
    }
}
