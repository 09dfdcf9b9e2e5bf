//! Property tests for words, endomorphisms, and subgroup membership.

use std::collections::HashSet;

use proptest::prelude::*;
use torsep::freegroup::{expand_expression, membership, SubgroupGraph};
use torsep::{Endo, Word};

fn letter_strategy(rank: usize) -> impl Strategy<Value = i32> {
    let r = rank as i32;
    (1..=r).prop_flat_map(|i| prop_oneof![Just(i), Just(-i)])
}

fn raw_letters(rank: usize, max_len: usize) -> impl Strategy<Value = Vec<i32>> {
    prop::collection::vec(letter_strategy(rank), 0..=max_len)
}

fn word_strategy(rank: usize, max_len: usize) -> impl Strategy<Value = Word> {
    raw_letters(rank, max_len).prop_map(move |ls| Word::reduced(rank, &ls).unwrap())
}

fn endo_strategy(rank: usize, max_image_len: usize) -> impl Strategy<Value = Endo> {
    prop::collection::vec(
        raw_letters(rank, max_image_len).prop_map(move |ls| Word::reduced(rank, &ls).unwrap()),
        rank,
    )
    .prop_map(Endo::new)
    .prop_map(Result::unwrap)
}

proptest! {
    #[test]
    fn reduce_is_idempotent_and_length_nonincreasing(raw in raw_letters(3, 16)) {
        let w = Word::reduced(3, &raw).unwrap();
        prop_assert!(w.len() <= raw.len());
        let again = Word::reduced(3, w.letters()).unwrap();
        prop_assert_eq!(again.letters(), w.letters());
    }

    #[test]
    fn reduction_is_local_to_factors(u in raw_letters(2, 10), v in raw_letters(2, 10)) {
        let mut cat = u.clone();
        cat.extend_from_slice(&v);
        let direct = Word::reduced(2, &cat).unwrap();
        let via_parts = Word::reduced(2, &u)
            .unwrap()
            .mul(&Word::reduced(2, &v).unwrap())
            .unwrap();
        prop_assert_eq!(direct, via_parts);
    }

    #[test]
    fn apply_respects_inverses(phi in endo_strategy(2, 4), w in word_strategy(2, 8)) {
        let lhs = phi.apply(&w.inverse()).unwrap();
        let rhs = phi.apply(&w).unwrap().inverse();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn apply_is_homomorphic(phi in endo_strategy(2, 4), u in word_strategy(2, 6), v in word_strategy(2, 6)) {
        let lhs = phi.apply(&u.mul(&v).unwrap()).unwrap();
        let rhs = phi.apply(&u).unwrap().mul(&phi.apply(&v).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    /// Row convention: the matrix of a composition is the product in the
    /// reverse order, M(phi . psi) = M(psi) M(phi).
    #[test]
    fn abelianization_reverses_composition(phi in endo_strategy(2, 4), psi in endo_strategy(2, 4)) {
        let comp = phi.compose(&psi).unwrap();
        let (m_comp, _) = comp.abelianization();
        let (m_phi, _) = phi.abelianization();
        let (m_psi, _) = psi.abelianization();
        let mut expect = vec![vec![0i64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    expect[i][j] += m_psi[i][k] * m_phi[k][j];
                }
            }
        }
        prop_assert_eq!(m_comp, expect);
    }

    #[test]
    fn power_is_additive(phi in endo_strategy(2, 3), m in 0u64..3, n in 0u64..3) {
        let lhs = phi.power(m + n);
        let rhs = phi.power(m).compose(&phi.power(n)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    /// Membership is sound: a returned expression expands to the word.
    #[test]
    fn membership_expressions_are_sound(
        g1 in word_strategy(2, 4),
        g2 in word_strategy(2, 4),
        w in word_strategy(2, 8),
    ) {
        let gens = vec![g1, g2];
        if let Some(expr) = membership(&gens, &w).unwrap() {
            let expanded = expand_expression(&gens, &expr).unwrap();
            prop_assert_eq!(expanded, w);
        }
    }

    /// Membership is complete on known members: any product of the
    /// generators is recognized, and the returned expression expands back
    /// to it. Three generators of mixed lengths force folding cascades.
    #[test]
    fn membership_finds_known_members(
        gens in prop::collection::vec(word_strategy(2, 6), 3),
        expr in prop::collection::vec((1i32..=3).prop_flat_map(|i| prop_oneof![Just(i), Just(-i)]), 0..6),
    ) {
        let target = expand_expression(&gens, &expr).unwrap();
        let found = membership(&gens, &target).unwrap();
        let found = found.expect("a generator product must be recognized");
        let expanded = expand_expression(&gens, &found).unwrap();
        prop_assert_eq!(expanded, target);
    }
}

/// All reduced words of length <= max over the given rank.
fn all_reduced_words(rank: usize, max: usize) -> Vec<Word> {
    let mut out = vec![Word::identity(rank)];
    let mut frontier: Vec<Vec<i32>> = vec![vec![]];
    for _ in 0..max {
        let mut next = Vec::new();
        for prefix in &frontier {
            for i in 1..=rank as i32 {
                for l in [i, -i] {
                    if prefix.last() == Some(&-l) {
                        continue;
                    }
                    let mut w = prefix.clone();
                    w.push(l);
                    out.push(Word::reduced(rank, &w).unwrap());
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    out
}

/// Reduced products of at most `max_factors` generators, keyed by letters.
fn subgroup_ball(gens: &[Word], max_factors: usize) -> HashSet<Vec<i32>> {
    let rank = gens[0].rank();
    let mut seen: HashSet<Vec<i32>> = HashSet::new();
    seen.insert(vec![]);
    let mut frontier = vec![Word::identity(rank)];
    for _ in 0..max_factors {
        let mut next = Vec::new();
        for w in &frontier {
            for g in gens {
                for factor in [g.clone(), g.inverse()] {
                    let prod = w.mul(&factor).unwrap();
                    if seen.insert(prod.letters().to_vec()) {
                        next.push(prod);
                    }
                }
            }
        }
        frontier = next;
    }
    seen
}

#[test]
fn membership_agrees_with_product_enumeration() {
    let gens = vec![
        Word::reduced(2, &[1, 2]).unwrap(),
        Word::reduced(2, &[2, 1]).unwrap(),
    ];
    let ball = subgroup_ball(&gens, 6);
    let graph = SubgroupGraph::new(&gens).unwrap();
    for w in all_reduced_words(2, 6) {
        match graph.membership(&w) {
            Some(expr) => {
                let expanded = expand_expression(&gens, &expr).unwrap();
                assert_eq!(expanded, w, "unsound expression for {w}");
                assert!(ball.contains(w.letters()), "oracle missed member {w}");
            }
            None => {
                assert!(!ball.contains(w.letters()), "missed member {w}");
            }
        }
    }
}

/// Independent certification that the image of a -> ab, b -> ba is free of
/// rank 2 on its generators: no nonempty reduced word in the two symbols
/// expands to the empty word.
#[test]
fn swap_endo_image_rank_oracle() {
    let gens = vec![
        Word::reduced(2, &[1, 2]).unwrap(),
        Word::reduced(2, &[2, 1]).unwrap(),
    ];
    for expr_word in all_reduced_words(2, 6) {
        if expr_word.is_identity() {
            continue;
        }
        let expanded = expand_expression(&gens, expr_word.letters()).unwrap();
        assert!(
            !expanded.is_identity(),
            "relation found: {:?}",
            expr_word.letters()
        );
    }
    let phi = Endo::new(gens).unwrap();
    assert_eq!(phi.image_rank(), 2);
    assert!(phi.is_injective());
}
