//! Group-testing reduction used to locate a single edge inside a bundle.
//!
//! Once a bundle is known to contain exactly one edge, finding that edge's k
//! vertices among the bundle's members is a classic group-testing problem:
//! the "defectives" are the edge vertices, and asking whether a pool of
//! members touches the edge is one group test. The twist is that our oracle
//! answers containment, not intersection, so each pool is asked through its
//! complement: the pool misses the edge exactly when the rest of the bundle
//! still contains it. Pools are random subsets at a rate that leaves each one
//! roughly a coin flip, and decoding is plain elimination.
//!
//! All pool bitsets here are member-local: bit `j` refers to `members[j]`,
//! not to vertex `j`. Only the final detection query is in vertex space.

use rand::Rng;

use crate::bitset::Bitset;
use crate::{Error, Result};

/// Pool inclusion rate `1 - 2^(-1/k)`.
///
/// A pool at this rate contains none of the k edge vertices with probability
/// exactly 1/2, so positive and negative group tests are equally likely and
/// each test carries about one bit.
pub fn pool_inclusion_rate(k: usize) -> f64 {
    1.0 - 2f64.powf(-1.0 / k as f64)
}

/// Draws `t_loc` member-local pools over a bundle of `size` members.
pub fn make_pools<R: Rng + ?Sized>(
    size: usize,
    t_loc: usize,
    rate: f64,
    rng: &mut R,
) -> Vec<Bitset> {
    (0..t_loc).map(|_| Bitset::bernoulli(size, rate, rng)).collect()
}

/// Builds the detection query that realizes a group test on `pool`: all
/// bundle members except the pooled ones, in vertex space. The pool touches
/// the bundle's edge iff this query comes back negative.
pub fn pool_to_detection_query(n: usize, members: &[u32], pool: &Bitset) -> Result<Bitset> {
    if pool.len() != members.len() {
        return Err(Error::Dimension(format!(
            "pool over {} positions paired with {} bundle members",
            pool.len(),
            members.len()
        )));
    }
    let mut query = Bitset::new(n);
    for (j, &v) in members.iter().enumerate() {
        if !pool.get(j) {
            query.set(v as usize);
        }
    }
    Ok(query)
}

/// Flips a detection answer into the group-test outcome for its pool.
pub fn group_outcome(detection_answer: bool) -> bool {
    !detection_answer
}

/// Elimination decoding over member-local pools.
///
/// Every negative pool clears its members; whatever survives is the
/// candidate vertex set. The decode is accepted only if exactly `k` members
/// survive and every positive pool touches at least one survivor, so an
/// inconsistent transcript returns `None` rather than a guess. Survivors
/// always include the true edge vertices when the one-edge assumption holds,
/// which makes an accepted answer correct.
pub fn gt_decode(size: usize, pools: &[Bitset], outcomes: &[bool], k: usize) -> Option<Vec<u32>> {
    if pools.is_empty() || pools.len() != outcomes.len() {
        return None;
    }
    let mut alive = Bitset::new(size);
    for j in 0..size {
        alive.set(j);
    }
    for (pool, &positive) in pools.iter().zip(outcomes) {
        debug_assert_eq!(pool.len(), size);
        if !positive {
            alive.subtract_with(pool);
        }
    }
    if alive.count_ones() != k {
        return None;
    }
    for (pool, &positive) in pools.iter().zip(outcomes) {
        if positive && !pool.intersects(&alive) {
            return None;
        }
    }
    Some(alive.iter_ones().map(|j| j as u32).collect())
}

/// Runs elimination and maps the surviving member positions back to vertex
/// ids. `members` must be sorted ascending, so the result is too.
pub fn locate(members: &[u32], pools: &[Bitset], outcomes: &[bool], k: usize) -> Option<Vec<u32>> {
    debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
    gt_decode(members.len(), pools, outcomes, k)
        .map(|local| local.into_iter().map(|j| members[j as usize]).collect())
}
