//! Deterministic sharded map/reduce over row ranges.
//!
//! Work is split into fixed-size shards whose boundaries depend only on the
//! row count, partials are collected in shard order, and the final fold is a
//! pairwise tree over that ordered list. The result is therefore identical
//! across runs, thread counts, and the `parallel` feature itself; the
//! feature only changes whether shards execute on the rayon pool.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Rows per shard. Fixed, so shard boundaries never depend on worker count.
pub(crate) const SHARD_ROWS: usize = 1024;

/// Inputs smaller than this run sequentially even with `parallel` enabled;
/// pool overhead dominates below it.
#[cfg(feature = "parallel")]
const MIN_PAR_ROWS: usize = 4096;

fn shard_ranges(n: usize) -> Vec<Range<usize>> {
    (0..n.div_ceil(SHARD_ROWS))
        .map(|s| s * SHARD_ROWS..((s + 1) * SHARD_ROWS).min(n))
        .collect()
}

/// Reduces an ordered list by combining adjacent pairs until one remains.
fn pairwise_fold<T>(mut items: Vec<T>, combine: impl Fn(T, T) -> T) -> Option<T> {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

/// Maps fixed shards of `0..n` and combines the partials pairwise.
/// Returns None when `n == 0`.
pub(crate) fn map_reduce<T, M, C>(n: usize, map: M, combine: C) -> Option<T>
where
    T: Send,
    M: Fn(Range<usize>) -> T + Sync,
    C: Fn(T, T) -> T,
{
    let partials = run_shards(shard_ranges(n), &map);
    pairwise_fold(partials, combine)
}

/// Same as [`map_reduce`] but shard work is fallible.
pub(crate) fn try_map_reduce<T, E, M, C>(n: usize, map: M, combine: C) -> Result<Option<T>, E>
where
    T: Send,
    E: Send,
    M: Fn(Range<usize>) -> Result<T, E> + Sync,
    C: Fn(T, T) -> Result<T, E>,
{
    let partials: Result<Vec<T>, E> = run_shards(shard_ranges(n), &map).into_iter().collect();
    let mut acc: Vec<T> = partials?;
    while acc.len() > 1 {
        let mut next = Vec::with_capacity(acc.len().div_ceil(2));
        let mut it = acc.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)?),
                None => next.push(a),
            }
        }
        acc = next;
    }
    Ok(acc.pop())
}

#[cfg(feature = "parallel")]
fn run_shards<T, M>(ranges: Vec<Range<usize>>, map: &M) -> Vec<T>
where
    T: Send,
    M: Fn(Range<usize>) -> T + Sync,
{
    let total: usize = ranges.iter().map(|r| r.len()).sum();
    if total < MIN_PAR_ROWS {
        ranges.into_iter().map(map).collect()
    } else {
        ranges.into_par_iter().map(map).collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn run_shards<T, M>(ranges: Vec<Range<usize>>, map: &M) -> Vec<T>
where
    M: Fn(Range<usize>) -> T,
{
    ranges.into_iter().map(map).collect()
}

/// Maps each index of `0..n` independently, collecting results in order.
pub(crate) fn map_indexed<T, M>(n: usize, map: M) -> Vec<T>
where
    T: Send,
    M: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n >= MIN_PAR_ROWS {
            return (0..n).into_par_iter().map(map).collect();
        }
    }
    (0..n).map(map).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shard_boundaries_are_fixed() {
        let r = shard_ranges(2 * SHARD_ROWS + 7);
        assert_eq!(r.len(), 3);
        assert_eq!(r[0], 0..SHARD_ROWS);
        assert_eq!(r[2], 2 * SHARD_ROWS..2 * SHARD_ROWS + 7);
        assert!(shard_ranges(0).is_empty());
    }

    #[test]
    fn pairwise_fold_preserves_prefix_association() {
        // Appending identity elements must not re-associate the prefix.
        let tree = |items: Vec<String>| {
            pairwise_fold(items, |a, b| format!("({a}+{b})")).unwrap_or_default()
        };
        let base = tree(vec!["a".into(), "b".into(), "c".into(), "d".into()]);
        assert_eq!(base, "((a+b)+(c+d))");
        let extended = tree(vec!["a".into(), "b".into(), "c".into(), "d".into(), "z".into()]);
        assert_eq!(extended, "(((a+b)+(c+d))+z)");
    }

    #[test]
    fn map_reduce_sums_every_index_once() {
        let n = 3 * SHARD_ROWS + 11;
        let total = map_reduce(n, |r| r.map(|i| i as u64).sum::<u64>(), |a, b| a + b).unwrap();
        assert_eq!(total, (n as u64 - 1) * n as u64 / 2);
        assert_eq!(map_reduce(0, |_| 0u64, |a, b| a + b), None);
    }

    #[test]
    fn try_map_reduce_propagates_errors() {
        let res: Result<Option<u64>, &str> = try_map_reduce(
            2 * SHARD_ROWS,
            |r| if r.start == 0 { Ok(1u64) } else { Err("boom") },
            |a, b| Ok(a + b),
        );
        assert_eq!(res, Err("boom"));
    }

    #[test]
    fn map_indexed_is_ordered() {
        let v = map_indexed(10_000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i * 2));
    }
}
