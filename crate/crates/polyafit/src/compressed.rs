//! Count datasets and their single-pass compression into survival tallies.
//!
//! A dataset of N count rows over K categories is collapsed into a K x M
//! tally matrix `U` and an M-vector `v`, where M is the largest row total:
//! `u[k][m]` counts the rows whose category-k count exceeds m, and `v[m]`
//! counts the rows whose total exceeds m. Every likelihood, gradient, and
//! Hessian the solvers need can be read off `(U, v)` in O(MK), independent
//! of N. Both tallies are additive, so shards of a dataset can be
//! compressed independently and merged.

use crate::error::{Error, Result};
use crate::parallel;

/// An N x K matrix of non-negative counts, one row per sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    k: usize,
    data: Vec<u64>,
}

impl CountMatrix {
    /// Creates an empty dataset over `k >= 1` categories.
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::TooFewCategories(0));
        }
        Ok(Self { k, data: Vec::new() })
    }

    /// Builds a dataset from rows, each of which must have length `k`.
    pub fn from_rows<R>(k: usize, rows: impl IntoIterator<Item = R>) -> Result<Self>
    where
        R: AsRef<[u64]>,
    {
        let mut m = Self::new(k)?;
        for row in rows {
            m.push_row(row.as_ref())?;
        }
        Ok(m)
    }

    pub(crate) fn from_flat(k: usize, data: Vec<u64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::TooFewCategories(0));
        }
        debug_assert_eq!(data.len() % k, 0);
        Ok(Self { k, data })
    }

    pub fn push_row(&mut self, row: &[u64]) -> Result<()> {
        if row.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: row.len() });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.k
    }

    pub fn row(&self, n: usize) -> &[u64] {
        &self.data[n * self.k..(n + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.data.chunks_exact(self.k)
    }

    /// Sum of all entries, or an overflow error.
    pub fn total_mass(&self) -> Result<u64> {
        self.data
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or(Error::TallyOverflow)
    }
}

/// Survival tallies `(U, v)` for a count dataset, plus provenance counters.
///
/// Invariants kept by construction: each `u` row and `v` are non-increasing,
/// `u[k][m] <= v[m]`, `v[0]` equals the number of rows with a positive
/// total, and the tallies sum to the dataset's total count mass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedStats {
    k: usize,
    /// K rows of M tallies each.
    u: Vec<Vec<u64>>,
    /// M tallies.
    v: Vec<u64>,
    /// Rows ingested, including all-zero rows.
    n_rows: u64,
    /// Rows with a positive total.
    n_effective: u64,
}

impl CompressedStats {
    /// Empty statistics (M = 0) over `k >= 1` categories.
    pub fn empty(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::TooFewCategories(0));
        }
        Ok(Self { k, u: vec![Vec::new(); k], v: Vec::new(), n_rows: 0, n_effective: 0 })
    }

    /// Compresses a dataset in one pass. With the `parallel` feature this
    /// shards rows across the rayon pool and merges; the result is
    /// identical to [`CompressedStats::from_counts_seq`].
    pub fn from_counts(data: &CountMatrix) -> Result<Self> {
        let k = data.k();
        let merged = parallel::try_map_reduce(
            data.n_rows(),
            |range| {
                let mut acc = Self::empty(k)?;
                for n in range {
                    acc.add_row(data.row(n))?;
                }
                Ok(acc)
            },
            |mut a, b| {
                a.merge_from(&b)?;
                Ok(a)
            },
        )?;
        match merged {
            Some(stats) => Ok(stats),
            None => Self::empty(k),
        }
    }

    /// Single-threaded reference path: folds [`CompressedStats::add_row`]
    /// over the rows in order.
    pub fn from_counts_seq(data: &CountMatrix) -> Result<Self> {
        let mut acc = Self::empty(data.k())?;
        for row in data.rows() {
            acc.add_row(row)?;
        }
        Ok(acc)
    }

    /// Folds one row into the tallies. All-zero rows only bump the row
    /// counter; they carry no information about the estimate.
    pub fn add_row(&mut self, row: &[u64]) -> Result<()> {
        if row.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: row.len() });
        }
        let total = row
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or(Error::TallyOverflow)?;
        self.n_rows = self.n_rows.checked_add(1).ok_or(Error::TallyOverflow)?;
        if total == 0 {
            return Ok(());
        }
        self.n_effective += 1;
        let total_idx: usize =
            total.try_into().map_err(|_| Error::RowTotalTooLarge { total })?;
        if total_idx > self.v.len() {
            self.v.resize(total_idx, 0);
            for u_row in &mut self.u {
                u_row.resize(total_idx, 0);
            }
        }
        // A count of c contributes to u[k][0..c]; c <= total, so no bounds
        // can be exceeded. Tallies are bounded by n_rows, which is checked.
        for (u_row, &c) in self.u.iter_mut().zip(row) {
            for slot in &mut u_row[..c as usize] {
                *slot += 1;
            }
        }
        for slot in &mut self.v[..total_idx] {
            *slot += 1;
        }
        Ok(())
    }

    /// Elementwise sum of two tally sets over the same categories; equals
    /// compressing the concatenated datasets.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    fn merge_from(&mut self, other: &Self) -> Result<()> {
        if other.k != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: other.k });
        }
        let m = self.v.len().max(other.v.len());
        self.v.resize(m, 0);
        for u_row in &mut self.u {
            u_row.resize(m, 0);
        }
        for (slot, &x) in self.v.iter_mut().zip(&other.v) {
            *slot = slot.checked_add(x).ok_or(Error::TallyOverflow)?;
        }
        for (u_row, other_row) in self.u.iter_mut().zip(&other.u) {
            for (slot, &x) in u_row.iter_mut().zip(other_row) {
                *slot = slot.checked_add(x).ok_or(Error::TallyOverflow)?;
            }
        }
        self.n_rows = self.n_rows.checked_add(other.n_rows).ok_or(Error::TallyOverflow)?;
        self.n_effective =
            self.n_effective.checked_add(other.n_effective).ok_or(Error::TallyOverflow)?;
        Ok(())
    }

    /// Reassembles statistics from raw parts, validating every structural
    /// invariant. Used when deserializing.
    pub fn from_raw_parts(
        k: usize,
        u: Vec<Vec<u64>>,
        v: Vec<u64>,
        n_rows: u64,
        n_effective: u64,
    ) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidConfig(format!("inconsistent statistics: {msg}"));
        if k == 0 {
            return Err(Error::TooFewCategories(0));
        }
        if u.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: u.len() });
        }
        let m = v.len();
        if u.iter().any(|row| row.len() != m) {
            return Err(bad("U rows must all have length M"));
        }
        if n_effective > n_rows {
            return Err(bad("effective rows exceed total rows"));
        }
        if m == 0 {
            if n_effective != 0 {
                return Err(bad("M = 0 requires zero effective rows"));
            }
        } else {
            if v[0] != n_effective {
                return Err(bad("v[0] must equal the effective row count"));
            }
            if v.windows(2).any(|w| w[0] < w[1]) {
                return Err(bad("v must be non-increasing"));
            }
            for row in &u {
                if row.windows(2).any(|w| w[0] < w[1]) {
                    return Err(bad("U rows must be non-increasing"));
                }
                if row.iter().zip(&v).any(|(&um, &vm)| um > vm) {
                    return Err(bad("U tallies cannot exceed v"));
                }
            }
            let v_mass = v.iter().try_fold(0u64, |a, &x| a.checked_add(x));
            let u_mass = u
                .iter()
                .flatten()
                .try_fold(0u64, |a, &x| a.checked_add(x));
            match (v_mass, u_mass) {
                (Some(vm), Some(um)) if vm == um => {}
                (Some(_), Some(_)) => return Err(bad("U and v tally different count masses")),
                _ => return Err(Error::TallyOverflow),
            }
        }
        Ok(Self { k, u, v, n_rows, n_effective })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The largest row total seen; the tally width.
    pub fn m(&self) -> usize {
        self.v.len()
    }

    pub fn n_rows(&self) -> u64 {
        self.n_rows
    }

    pub fn n_effective(&self) -> u64 {
        self.n_effective
    }

    pub fn u_row(&self, k: usize) -> &[u64] {
        &self.u[k]
    }

    pub fn v(&self) -> &[u64] {
        &self.v
    }

    /// Total observations of category `k` (`sum_m u[k][m]`).
    pub fn column_mass(&self, k: usize) -> u64 {
        self.u[k].iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Literal indicator-sum definitions, quadratic and obviously correct.
    fn brute_force(data: &CountMatrix) -> CompressedStats {
        let k = data.k();
        let totals: Vec<u64> = data.rows().map(|r| r.iter().sum()).collect();
        let m = totals.iter().copied().max().unwrap_or(0) as usize;
        let mut u = vec![vec![0u64; m]; k];
        let mut v = vec![0u64; m];
        for col in 0..m as u64 {
            for (n, row) in data.rows().enumerate() {
                for j in 0..k {
                    if row[j] > col {
                        u[j][col as usize] += 1;
                    }
                }
                if totals[n] > col {
                    v[col as usize] += 1;
                }
            }
        }
        let n_effective = totals.iter().filter(|&&t| t > 0).count() as u64;
        CompressedStats::from_raw_parts(k, u, v, data.n_rows() as u64, n_effective).unwrap()
    }

    #[test]
    fn worked_example() {
        let data = CountMatrix::from_rows(2, [[3u64, 1], [0, 2]]).unwrap();
        let stats = CompressedStats::from_counts(&data).unwrap();
        assert_eq!(stats.m(), 4);
        assert_eq!(stats.u_row(0), &[1, 1, 1, 0]);
        assert_eq!(stats.u_row(1), &[2, 1, 0, 0]);
        assert_eq!(stats.v(), &[2, 2, 1, 1]);
        assert_eq!(stats.n_rows(), 2);
        assert_eq!(stats.n_effective(), 2);
        assert_eq!(stats, brute_force(&data));
    }

    #[test]
    fn all_zero_row_only_counts() {
        let data = CountMatrix::from_rows(2, [[0u64, 0]]).unwrap();
        let stats = CompressedStats::from_counts(&data).unwrap();
        assert_eq!(stats.m(), 0);
        assert_eq!(stats.v(), &[] as &[u64]);
        assert_eq!(stats.u_row(0), &[] as &[u64]);
        assert_eq!(stats.n_rows(), 1);
        assert_eq!(stats.n_effective(), 0);
    }

    #[test]
    fn unit_total_rows() {
        let data = CountMatrix::from_rows(2, [[1u64, 0], [1, 0], [0, 1]]).unwrap();
        let stats = CompressedStats::from_counts(&data).unwrap();
        assert_eq!(stats.m(), 1);
        assert_eq!(stats.u_row(0), &[2]);
        assert_eq!(stats.u_row(1), &[1]);
        assert_eq!(stats.v(), &[3]);
        assert_eq!(stats, brute_force(&data));
    }

    #[test]
    fn add_row_matches_build() {
        let mut stats = CompressedStats::empty(2).unwrap();
        stats.add_row(&[3, 1]).unwrap();
        let built =
            CompressedStats::from_counts(&CountMatrix::from_rows(2, [[3u64, 1]]).unwrap())
                .unwrap();
        assert_eq!(stats, built);

        // Zero rows leave the tallies untouched.
        let before = stats.clone();
        stats.add_row(&[0, 0]).unwrap();
        assert_eq!(stats.u_row(0), before.u_row(0));
        assert_eq!(stats.v(), before.v());
        assert_eq!(stats.n_rows(), before.n_rows() + 1);
        assert_eq!(stats.n_effective(), before.n_effective());
    }

    #[test]
    fn add_row_dimension_check() {
        let mut stats = CompressedStats::empty(3).unwrap();
        assert_eq!(
            stats.add_row(&[1, 2]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn merge_identity_and_commutativity() {
        let a = CompressedStats::from_counts(
            &CountMatrix::from_rows(2, [[3u64, 1]]).unwrap(),
        )
        .unwrap();
        let b = CompressedStats::from_counts(
            &CountMatrix::from_rows(2, [[0u64, 2]]).unwrap(),
        )
        .unwrap();
        let empty = CompressedStats::empty(2).unwrap();

        assert_eq!(a.merge(&empty).unwrap(), a);
        assert_eq!(empty.merge(&a).unwrap(), a);
        assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());

        let combined = CompressedStats::from_counts(
            &CountMatrix::from_rows(2, [[3u64, 1], [0, 2]]).unwrap(),
        )
        .unwrap();
        assert_eq!(a.merge(&b).unwrap(), combined);

        let mismatched = CompressedStats::empty(3).unwrap();
        assert!(matches!(a.merge(&mismatched), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn merge_overflow_is_detected() {
        let mut a = CompressedStats::empty(1).unwrap();
        a.add_row(&[1]).unwrap();
        a.n_rows = u64::MAX;
        let mut b = CompressedStats::empty(1).unwrap();
        b.add_row(&[1]).unwrap();
        assert_eq!(a.merge(&b), Err(Error::TallyOverflow));
    }

    #[test]
    fn row_total_overflow_is_detected() {
        let mut stats = CompressedStats::empty(2).unwrap();
        assert_eq!(stats.add_row(&[u64::MAX, 1]), Err(Error::TallyOverflow));
    }

    #[test]
    fn survival_histogram_round_trip() {
        // U's decrements recover the multiset of per-column counts;
        // rebuilding from those counts is the identity.
        let data =
            CountMatrix::from_rows(3, [[5u64, 0, 2], [1, 1, 1], [0, 0, 4], [2, 3, 0]]).unwrap();
        let stats = CompressedStats::from_counts(&data).unwrap();
        let mut recovered: Vec<Vec<u64>> = Vec::new();
        for k in 0..3 {
            let u = stats.u_row(k);
            let mut counts = Vec::new();
            for m in 0..u.len() {
                let next = if m + 1 < u.len() { u[m + 1] } else { 0 };
                for _ in 0..(u[m] - next) {
                    counts.push(m as u64 + 1);
                }
            }
            counts.sort_unstable();
            recovered.push(counts);
        }
        for k in 0..3 {
            let mut expected: Vec<u64> =
                data.rows().map(|r| r[k]).filter(|&c| c > 0).collect();
            expected.sort_unstable();
            assert_eq!(recovered[k], expected);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn build_equals_fold_equals_merge_tree(
            (k, rows) in (1usize..=10).prop_flat_map(|k| {
                (Just(k), prop::collection::vec(
                    prop::collection::vec(0u64..=12, k), 0..200,
                ))
            }),
            split in 0usize..200,
        ) {
            // Row totals stay small so the brute-force oracle stays fast.
            let data = CountMatrix::from_rows(k, rows.iter()).unwrap();
            let built = CompressedStats::from_counts(&data).unwrap();
            let built_seq = CompressedStats::from_counts_seq(&data).unwrap();
            prop_assert_eq!(&built, &built_seq);
            prop_assert_eq!(&built, &brute_force(&data));

            let mut folded = CompressedStats::empty(k).unwrap();
            for row in &rows {
                folded.add_row(row).unwrap();
            }
            prop_assert_eq!(&built, &folded);

            let cut = split.min(rows.len());
            let left = CompressedStats::from_counts(
                &CountMatrix::from_rows(k, rows[..cut].iter()).unwrap()).unwrap();
            let right = CompressedStats::from_counts(
                &CountMatrix::from_rows(k, rows[cut..].iter()).unwrap()).unwrap();
            prop_assert_eq!(&built, &left.merge(&right).unwrap());
            prop_assert_eq!(&built, &right.merge(&left).unwrap());
        }

        #[test]
        fn invariants_hold_after_construction(
            (k, rows) in (1usize..=8).prop_flat_map(|k| {
                (Just(k), prop::collection::vec(
                    prop::collection::vec(0u64..=10, k), 0..60,
                ))
            }),
        ) {
            let data = CountMatrix::from_rows(k, rows.iter()).unwrap();
            let stats = CompressedStats::from_counts(&data).unwrap();
            // from_raw_parts re-checks every structural invariant.
            let cloned = CompressedStats::from_raw_parts(
                stats.k(),
                (0..k).map(|i| stats.u_row(i).to_vec()).collect(),
                stats.v().to_vec(),
                stats.n_rows(),
                stats.n_effective(),
            );
            prop_assert!(cloned.is_ok());
            let mass: u64 = stats.v().iter().sum();
            prop_assert_eq!(mass, data.total_mass().unwrap());
            for i in 0..k {
                let col: u64 = data.rows().map(|r| r[i]).sum();
                prop_assert_eq!(stats.column_mass(i), col);
            }
        }
    }
}
