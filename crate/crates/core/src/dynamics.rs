//! Orbits of word maps on matrix tuples over finite rings.
//!
//! Every forward orbit in a finite state space is eventually periodic:
//! tail steps followed by a cycle. [`detect_cycle`] finds minimal tail and
//! period with Brent's algorithm (one map evaluation per step, no stored
//! orbit). [`period_tower`] reads the minimal periods of one exact integer
//! tuple reduced mod p, p^2, ..., p^K; reduction maps cycles to cycles, so
//! consecutive periods divide each other.

use num_bigint::BigInt;
use thiserror::Error;

use crate::freegroup::Endo;
use crate::localring::{make_ring, Ring, RingError};
use crate::matgroup::{phi_map, MatError, MatTuple};
use crate::RingElem;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("orbit exceeds the cap of {cap} iterations")]
    CapExceeded { cap: u64 },
    #[error("point is not periodic mod p^{level} (tail {tail} > 0)")]
    NotPeriodicModP { level: u32, tail: u64 },
    #[error("state space of size {size} exceeds the budget {budget}")]
    BudgetExceeded { size: u128, budget: u64 },
    #[error(transparent)]
    Eval(#[from] MatError),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// Tail and minimal period of a forward orbit, with the first point on the
/// cycle (phi^tail of the start).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitRecord {
    pub tail: u64,
    pub period: u64,
    pub cycle_entry: MatTuple<RingElem>,
}

/// Minimal periods of one point reduced mod p^1, ..., p^K.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodTower {
    pub p: u64,
    pub periods: Vec<u64>,
}

/// Brent cycle detection on the forward orbit of `x0`. Errors with
/// [`DynamicsError::CapExceeded`] when tail + period would exceed `cap`.
pub fn detect_cycle(
    endo: &Endo,
    x0: &MatTuple<RingElem>,
    cap: u64,
) -> Result<OrbitRecord, DynamicsError> {
    let step = |x: &MatTuple<RingElem>| phi_map(endo, x);

    // Phase 1: find the period. The hare walks forward; the tortoise
    // teleports to the hare at powers of two. They meet within 2(tail +
    // period) hare steps, so overrunning 4 cap + 8 proves cap excess.
    let mut power: u64 = 1;
    let mut lam: u64 = 1;
    let mut tortoise = x0.clone();
    let mut hare = step(x0)?;
    let mut hare_steps: u64 = 1;
    while tortoise != hare {
        if power == lam {
            tortoise = hare.clone();
            power = power.checked_mul(2).expect("power fits u64");
            lam = 0;
        }
        hare = step(&hare)?;
        hare_steps += 1;
        lam += 1;
        if hare_steps > cap.saturating_mul(4).saturating_add(8) {
            return Err(DynamicsError::CapExceeded { cap });
        }
    }

    // Phase 2: find the tail. Advance a second pointer lam steps ahead of
    // the start; the two meet at the cycle entry.
    let mut mu: u64 = 0;
    tortoise = x0.clone();
    hare = x0.clone();
    for _ in 0..lam {
        hare = step(&hare)?;
    }
    while tortoise != hare {
        tortoise = step(&tortoise)?;
        hare = step(&hare)?;
        mu += 1;
        if mu > cap {
            return Err(DynamicsError::CapExceeded { cap });
        }
    }

    if mu + lam > cap {
        return Err(DynamicsError::CapExceeded { cap });
    }
    Ok(OrbitRecord {
        tail: mu,
        period: lam,
        cycle_entry: tortoise,
    })
}

/// Advance a start point onto its cycle; returns the cycle entry and period.
pub fn advance_to_cycle(
    endo: &Endo,
    x0: &MatTuple<RingElem>,
    cap: u64,
) -> Result<(MatTuple<RingElem>, u64), DynamicsError> {
    let rec = detect_cycle(endo, x0, cap)?;
    Ok((rec.cycle_entry, rec.period))
}

/// Minimal periods of an exact integer tuple reduced mod p^k for
/// k = 1, ..., levels. The reduction must land on a cycle (tail 0) at every
/// level; a positive tail is reported as [`DynamicsError::NotPeriodicModP`].
pub fn period_tower(
    endo: &Endo,
    x: &MatTuple<BigInt>,
    p: u64,
    levels: u32,
    cap: u64,
) -> Result<PeriodTower, DynamicsError> {
    let mut periods = Vec::with_capacity(levels as usize);
    for k in 1..=levels {
        let ring = make_ring(p, k, 1, None)?;
        let xk = x.reduce_to_ring(&ring);
        periods.push(level_period(endo, &xk, k, cap)?);
    }
    Ok(PeriodTower { p, periods })
}

/// Period tower for a tuple already reduced at the highest precision; the
/// lower levels are obtained by precision reduction.
pub fn period_tower_modular(
    endo: &Endo,
    x: &MatTuple<RingElem>,
    cap: u64,
) -> Result<PeriodTower, DynamicsError> {
    let ring = x.ring().clone();
    let mut periods = Vec::with_capacity(ring.precision() as usize);
    for k in 1..=ring.precision() {
        let target = ring.reduced(k)?;
        let xk = x.reduce_to(&target)?;
        periods.push(level_period(endo, &xk, k, cap)?);
    }
    Ok(PeriodTower {
        p: ring.p(),
        periods,
    })
}

fn level_period(
    endo: &Endo,
    xk: &MatTuple<RingElem>,
    level: u32,
    cap: u64,
) -> Result<u64, DynamicsError> {
    let rec = detect_cycle(endo, xk, cap)?;
    if rec.tail != 0 {
        return Err(DynamicsError::NotPeriodicModP {
            level,
            tail: rec.tail,
        });
    }
    Ok(rec.period)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchStrategy {
    /// Visit every tuple of the state space; requires |ring|^(4k) <= budget.
    Exhaustive,
    /// Advance each given seed to its cycle.
    FromSeeds(Vec<MatTuple<RingElem>>),
}

/// Find periodic points of the word map over a finite ring: every start is
/// advanced to its cycle and the entries collected. With `nonsingular_only`
/// only tuples whose matrices all have unit determinant are kept. Results
/// are deduplicated and sorted by encoding, so the output is deterministic
/// regardless of worker partitioning.
pub fn search_periodic(
    endo: &Endo,
    ring: &Ring,
    strategy: SearchStrategy,
    nonsingular_only: bool,
    budget: u64,
) -> Result<Vec<(MatTuple<RingElem>, u64)>, DynamicsError> {
    let starts: Vec<MatTuple<RingElem>> = match strategy {
        SearchStrategy::Exhaustive => {
            let coords = 4 * endo.rank() as u32;
            let size = ring
                .size()
                .and_then(|s| s.checked_pow(coords))
                .unwrap_or(u128::MAX);
            if size > budget as u128 {
                return Err(DynamicsError::BudgetExceeded { size, budget });
            }
            let elem_count = ring.size().expect("ring size fits after budget check");
            (0..size)
                .map(|idx| {
                    let mut rem = idx;
                    let coords: Vec<RingElem> = (0..coords)
                        .map(|_| {
                            let e = ring.elem_from_index(rem % elem_count);
                            rem /= elem_count;
                            e
                        })
                        .collect();
                    MatTuple::from_coords(&coords)
                })
                .collect()
        }
        SearchStrategy::FromSeeds(seeds) => seeds,
    };

    let cap = budget;
    let chunk = starts.len().div_ceil(available_workers()).max(1);
    let mut found: Vec<(MatTuple<RingElem>, u64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = starts
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|x0| advance_to_cycle(endo, x0, cap))
                        .collect::<Result<Vec<_>, _>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("search worker panicked"))
            .collect::<Result<Vec<_>, _>>()
            .map(|parts| parts.into_iter().flatten().collect())
    })?;

    if nonsingular_only {
        found.retain(|(x, _)| x.all_nonsingular());
    }
    found.sort_by_key(|(x, _)| x.encoding());
    found.dedup_by(|a, b| a.0 == b.0);
    Ok(found)
}

fn available_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freegroup::Word;
    use crate::localring::make_zpk;
    use crate::matgroup::Mat2;

    fn swap_endo() -> Endo {
        Endo::new(vec![
            Word::reduced(2, &[1, 2]).unwrap(),
            Word::reduced(2, &[2, 1]).unwrap(),
        ])
        .unwrap()
    }

    fn example_tuple() -> MatTuple<BigInt> {
        MatTuple::new(vec![Mat2::from_i64(5, 2, 2, 1), Mat2::from_i64(1, 2, 2, 5)])
    }

    #[test]
    fn detect_cycle_examples() {
        let phi = swap_endo();
        let ring = make_zpk(5, 1).unwrap();
        let x = example_tuple().reduce_to_ring(&ring);

        let rec = detect_cycle(&phi, &x, 1000).unwrap();
        assert_eq!((rec.tail, rec.period), (0, 6));
        assert_eq!(rec.cycle_entry, x);

        let id = MatTuple::new(vec![Mat2::identity_in(&ring), Mat2::identity_in(&ring)]);
        let rec = detect_cycle(&phi, &id, 10).unwrap();
        assert_eq!((rec.tail, rec.period), (0, 1));

        assert_eq!(
            detect_cycle(&phi, &x, 3),
            Err(DynamicsError::CapExceeded { cap: 3 })
        );
    }

    #[test]
    fn period_tower_examples() {
        let phi = swap_endo();
        let x = example_tuple();

        let tower = period_tower(&phi, &x, 5, 2, 100_000).unwrap();
        assert_eq!(tower.periods, vec![6, 12]);

        let tower = period_tower(&phi, &x, 5, 4, 100_000).unwrap();
        assert_eq!(tower.periods, vec![6, 12, 60, 300]);

        let ring = make_zpk(5, 3).unwrap();
        let id = MatTuple::new(vec![Mat2::identity_in(&ring), Mat2::identity_in(&ring)]);
        let tower = period_tower_modular(&phi, &id, 100).unwrap();
        assert_eq!(tower.periods, vec![1, 1, 1]);
    }

    /// Store-every-state oracle for tail and period.
    fn naive_orbit(endo: &Endo, x0: &MatTuple<RingElem>) -> (u64, u64) {
        use std::collections::HashMap;
        let mut seen: HashMap<Vec<u64>, u64> = HashMap::new();
        let mut x = x0.clone();
        let mut step = 0u64;
        loop {
            if let Some(&first) = seen.get(&x.encoding()) {
                return (first, step - first);
            }
            seen.insert(x.encoding(), step);
            x = phi_map(endo, &x).unwrap();
            step += 1;
        }
    }

    #[test]
    fn brent_agrees_with_naive_oracle() {
        let phi = swap_endo();
        let ring = make_zpk(3, 2).unwrap();
        let total = ring.size().unwrap().pow(8);
        // A deterministic spread of starting points.
        for s in 0..40u128 {
            let idx = (s * 2_654_435_761u128 + 7) % total;
            let mut rem = idx;
            let coords: Vec<RingElem> = (0..8)
                .map(|_| {
                    let e = ring.elem_from_index(rem % ring.size().unwrap());
                    rem /= ring.size().unwrap();
                    e
                })
                .collect();
            let x0 = MatTuple::from_coords(&coords);
            let (tail, period) = naive_orbit(&phi, &x0);
            let rec = detect_cycle(&phi, &x0, 10_000).unwrap();
            assert_eq!((rec.tail, rec.period), (tail, period), "start {s}");
        }
    }

    #[test]
    fn search_periodic_census_mod2() {
        let phi = swap_endo();
        let ring = make_zpk(2, 1).unwrap();
        let found =
            search_periodic(&phi, &ring, SearchStrategy::Exhaustive, true, 10_000).unwrap();

        // Independent census: a tuple is periodic iff iterating the map from
        // it ever returns to it within the state count.
        let total = 256u128;
        let mut expected = 0u64;
        let mut contains_identity = false;
        for idx in 0..total {
            let mut rem = idx;
            let coords: Vec<RingElem> = (0..8)
                .map(|_| {
                    let e = ring.elem_from_index(rem % 2);
                    rem /= 2;
                    e
                })
                .collect();
            let x0 = MatTuple::from_coords(&coords);
            if !x0.all_nonsingular() {
                continue;
            }
            let mut x = phi_map(&phi, &x0).unwrap();
            let mut periodic = false;
            for _ in 0..total {
                if x == x0 {
                    periodic = true;
                    break;
                }
                x = phi_map(&phi, &x).unwrap();
            }
            if periodic {
                expected += 1;
                let id = MatTuple::new(vec![
                    Mat2::identity_in(&ring),
                    Mat2::identity_in(&ring),
                ]);
                if x0 == id {
                    contains_identity = true;
                }
            }
        }
        assert!(contains_identity);
        assert_eq!(found.len() as u64, expected);
        let id = MatTuple::new(vec![Mat2::identity_in(&ring), Mat2::identity_in(&ring)]);
        assert!(found.iter().any(|(x, p)| *x == id && *p == 1));
    }

    #[test]
    fn search_from_seeds_advances_to_cycles() {
        let phi = swap_endo();
        let ring = make_zpk(5, 1).unwrap();
        let x = example_tuple().reduce_to_ring(&ring);
        let found = search_periodic(
            &phi,
            &ring,
            SearchStrategy::FromSeeds(vec![x.clone()]),
            true,
            10_000,
        )
        .unwrap();
        assert_eq!(found, vec![(x, 6)]);
    }

    #[test]
    fn search_budget_is_enforced() {
        let phi = swap_endo();
        let ring = make_zpk(5, 1).unwrap();
        let err = search_periodic(&phi, &ring, SearchStrategy::Exhaustive, false, 10);
        assert_eq!(
            err,
            Err(DynamicsError::BudgetExceeded {
                size: 390_625,
                budget: 10
            })
        );
    }

    #[test]
    fn eval_errors_surface_from_detect_cycle() {
        // a -> a b^-1 needs B invertible; a singular B fails on the first
        // step.
        let phi = Endo::new(vec![
            Word::reduced(2, &[1, -2]).unwrap(),
            Word::reduced(2, &[1]).unwrap(),
        ])
        .unwrap();
        let ring = make_zpk(5, 1).unwrap();
        let singular = Mat2::new(ring.one(), ring.zero(), ring.zero(), ring.zero());
        let x = MatTuple::new(vec![Mat2::identity_in(&ring), singular]);
        assert!(matches!(
            detect_cycle(&phi, &x, 100),
            Err(DynamicsError::Eval(MatError::NonUnitDeterminant))
        ));
    }

    #[test]
    fn found_period_divides_repetitions() {
        let phi = swap_endo();
        let ring = make_zpk(5, 2).unwrap();
        let x = example_tuple().reduce_to_ring(&ring);
        let rec = detect_cycle(&phi, &x, 10_000).unwrap();
        let mut y = rec.cycle_entry.clone();
        for mult in 1..=3u64 {
            for _ in 0..rec.period {
                y = phi_map(&phi, &y).unwrap();
            }
            assert_eq!(y, rec.cycle_entry, "multiple {mult}");
        }
    }
}
