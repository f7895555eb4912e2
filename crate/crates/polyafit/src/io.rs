//! Plain-text dataset and statistics formats.
//!
//! Three formats, all line-oriented and auditable:
//!
//! - dense: one row per line, K whitespace- or comma-separated
//!   non-negative integers. `#` lines are comments; blank lines are
//!   skipped.
//! - sparse: a header line `K <categories>`, then one row per line as
//!   `index:count` pairs. A blank line is an all-zero row (so comments use
//!   `#`, not blanks).
//! - stats: compressed tallies with a version magic, a `K M N N_effective`
//!   header, K tally lines for U, and one for v. Round-trips exactly.
//!
//! Probability datasets (for the pure Dirichlet fit) use the dense layout
//! with floating-point entries.

use std::fmt::Write as _;

use thiserror::Error;

use crate::compressed::{CompressedStats, CountMatrix};
use crate::dirichlet::ProbabilityMatrix;
use crate::error::Error as CoreError;

/// First line of every stats file; bumped on incompatible changes.
pub const STATS_MAGIC: &str = "polyafit-stats v1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported statistics format (expected {STATS_MAGIC:?}, found {found:?})")]
    UnsupportedVersion { found: String },

    #[error(transparent)]
    Core(#[from] CoreError),
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

/// The on-disk layout of a dataset file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Dense,
    Sparse,
    Stats,
}

/// Guesses the format from the first meaningful line: the stats magic, a
/// sparse `K <n>` header, or dense rows otherwise.
pub fn sniff_format(text: &str) -> DatasetFormat {
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        // Any version marker routes to the stats parser, which rejects
        // unknown versions loudly instead of misreading them as counts.
        if trimmed.starts_with("polyafit-stats") {
            return DatasetFormat::Stats;
        }
        let mut tokens = trimmed.split_whitespace();
        if tokens.next() == Some("K") {
            return DatasetFormat::Sparse;
        }
        return DatasetFormat::Dense;
    }
    DatasetFormat::Dense
}

fn split_fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty())
}

/// Parses a dense count dataset. The category count is taken from the
/// first row; later rows must match it.
pub fn parse_counts_dense(text: &str) -> Result<CountMatrix, FormatError> {
    let mut matrix: Option<CountMatrix> = None;
    let mut row = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        row.clear();
        for token in split_fields(trimmed) {
            let value: u64 = token
                .parse()
                .map_err(|_| parse_err(line_no, format!("invalid count {token:?}")))?;
            row.push(value);
        }
        if matrix.is_none() {
            matrix = Some(CountMatrix::new(row.len()).map_err(|_| {
                parse_err(line_no, "first row is empty; cannot infer category count")
            })?);
        }
        let matrix = matrix.as_mut().expect("just initialized");
        if row.len() != matrix.k() {
            return Err(parse_err(
                line_no,
                format!("expected {} columns, found {}", matrix.k(), row.len()),
            ));
        }
        matrix.push_row(&row).expect("length checked");
    }
    matrix.ok_or_else(|| parse_err(1, "no data rows"))
}

/// Parses a sparse count dataset: `K <n>` header, then `index:count` pairs
/// per line, blank line meaning an all-zero row.
pub fn parse_counts_sparse(text: &str) -> Result<CountMatrix, FormatError> {
    let mut lines = text.lines().enumerate();
    let k = loop {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing sparse header `K <categories>`"))?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        if tokens.next() != Some("K") {
            return Err(parse_err(line_no, "expected sparse header `K <categories>`"));
        }
        let k: usize = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(line_no, "header must name the category count"))?;
        if tokens.next().is_some() {
            return Err(parse_err(line_no, "trailing tokens after sparse header"));
        }
        break k;
    };
    let mut matrix = CountMatrix::new(k)
        .map_err(|_| parse_err(1, "category count must be at least 1"))?;
    let mut row = vec![0u64; k];
    for (idx, line) in lines {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.starts_with('#') {
            continue;
        }
        row.iter_mut().for_each(|c| *c = 0);
        for pair in trimmed.split_whitespace() {
            let (index, count) = pair
                .split_once(':')
                .ok_or_else(|| parse_err(line_no, format!("expected index:count, got {pair:?}")))?;
            let index: usize = index
                .parse()
                .map_err(|_| parse_err(line_no, format!("invalid index {index:?}")))?;
            if index >= k {
                return Err(parse_err(line_no, format!("index {index} out of range 0..{k}")));
            }
            let count: u64 = count
                .parse()
                .map_err(|_| parse_err(line_no, format!("invalid count {count:?}")))?;
            if row[index] != 0 {
                return Err(parse_err(line_no, format!("duplicate index {index}")));
            }
            row[index] = count;
        }
        matrix.push_row(&row).expect("length fixed by header");
    }
    Ok(matrix)
}

/// Parses a dense probability dataset (for the pure Dirichlet problem).
pub fn parse_probabilities_dense(text: &str) -> Result<ProbabilityMatrix, FormatError> {
    let mut k: Option<usize> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut line_of_row: Vec<usize> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut row = Vec::new();
        for token in split_fields(trimmed) {
            let value: f64 = token
                .parse()
                .map_err(|_| parse_err(line_no, format!("invalid probability {token:?}")))?;
            row.push(value);
        }
        let k = *k.get_or_insert(row.len());
        if row.len() != k {
            return Err(parse_err(
                line_no,
                format!("expected {k} columns, found {}", row.len()),
            ));
        }
        rows.push(row);
        line_of_row.push(line_no);
    }
    let k = k.ok_or_else(|| parse_err(1, "no data rows"))?;
    ProbabilityMatrix::from_rows(k, rows).map_err(|err| match err {
        CoreError::InvalidProbabilityRow { row, sum } => parse_err(
            line_of_row[row],
            format!("row is not a probability vector (entries in (0, 1], sum = {sum})"),
        ),
        other => FormatError::Core(other),
    })
}

/// Parses the versioned stats format and re-validates every structural
/// invariant of the tallies.
pub fn parse_stats(text: &str) -> Result<CompressedStats, FormatError> {
    let mut lines = text.lines().enumerate();
    let (_, magic) = lines.next().ok_or_else(|| parse_err(1, "empty statistics file"))?;
    if magic.trim() != STATS_MAGIC {
        return Err(FormatError::UnsupportedVersion { found: magic.trim().to_string() });
    }
    let (idx, header) =
        lines.next().ok_or_else(|| parse_err(2, "missing `K M N N_effective` header"))?;
    let fields: Vec<u64> = header
        .split_whitespace()
        .map(|t| t.parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|_| parse_err(idx + 1, "header must be four integers `K M N N_effective`"))?;
    let [k, m, n_rows, n_effective] = fields[..] else {
        return Err(parse_err(idx + 1, "header must be four integers `K M N N_effective`"));
    };
    let k = k as usize;
    let m = m as usize;
    let total_lines = text.lines().count();

    let mut tally_line = |expect_len: usize| -> Result<Vec<u64>, FormatError> {
        let (idx, line) = lines.next().ok_or_else(|| {
            parse_err(
                total_lines,
                format!("truncated statistics: expected {} tally lines", k + 1),
            )
        })?;
        let line_no = idx + 1;
        let values: Vec<u64> = line
            .split_whitespace()
            .map(|t| t.parse::<u64>())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(line_no, "tallies must be non-negative integers"))?;
        if values.len() != expect_len {
            return Err(parse_err(
                line_no,
                format!("expected {expect_len} tallies, found {}", values.len()),
            ));
        }
        Ok(values)
    };

    let mut u = Vec::with_capacity(k);
    let mut v = Vec::new();
    if m > 0 {
        for _ in 0..k {
            u.push(tally_line(m)?);
        }
        v = tally_line(m)?;
    } else {
        u = vec![Vec::new(); k];
    }
    if let Some((idx, line)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(parse_err(idx + 1, format!("unexpected trailing content {:?}", line.trim())));
    }
    Ok(CompressedStats::from_raw_parts(k, u, v, n_rows, n_effective)?)
}

fn push_tallies(out: &mut String, tallies: &[u64]) {
    let mut first = true;
    for t in tallies {
        if !first {
            out.push(' ');
        }
        let _ = write!(out, "{t}");
        first = false;
    }
    out.push('\n');
}

/// Dense text form of a count dataset.
pub fn format_counts_dense(data: &CountMatrix) -> String {
    let mut out = String::new();
    for row in data.rows() {
        push_tallies(&mut out, row);
    }
    out
}

/// Sparse text form of a count dataset: only nonzero entries are written;
/// all-zero rows become blank lines.
pub fn format_counts_sparse(data: &CountMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "K {}", data.k());
    for row in data.rows() {
        let mut first = true;
        for (index, &count) in row.iter().enumerate() {
            if count == 0 {
                continue;
            }
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{index}:{count}");
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Versioned text form of compressed statistics. `parse_stats` restores it
/// exactly.
pub fn format_stats(stats: &CompressedStats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{STATS_MAGIC}");
    let _ = writeln!(
        out,
        "{} {} {} {}",
        stats.k(),
        stats.m(),
        stats.n_rows(),
        stats.n_effective()
    );
    if stats.m() > 0 {
        for k in 0..stats.k() {
            push_tallies(&mut out, stats.u_row(k));
        }
        push_tallies(&mut out, stats.v());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dense_round_trip() {
        let data = CountMatrix::from_rows(3, [[3u64, 0, 2], [0, 0, 0], [1, 1, 1]]).unwrap();
        let text = format_counts_dense(&data);
        assert_eq!(text, "3 0 2\n0 0 0\n1 1 1\n");
        assert_eq!(parse_counts_dense(&text).unwrap(), data);
        // Commas work too.
        assert_eq!(parse_counts_dense("3,0,2\n0,0,0\n1,1,1\n").unwrap(), data);
    }

    #[test]
    fn dense_parse_errors_cite_lines() {
        let err = parse_counts_dense("1 2\n# fine\n3 4 5\n").unwrap_err();
        match err {
            FormatError::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("expected 2 columns"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
        let err = parse_counts_dense("1 x\n").unwrap_err();
        assert!(matches!(err, FormatError::Parse { line: 1, .. }));
        assert!(parse_counts_dense("# only comments\n").is_err());
    }

    #[test]
    fn sparse_round_trip_with_zero_rows() {
        let data = CountMatrix::from_rows(4, [[0u64, 5, 0, 1], [0, 0, 0, 0], [2, 0, 0, 0]])
            .unwrap();
        let text = format_counts_sparse(&data);
        assert_eq!(text, "K 4\n1:5 3:1\n\n0:2\n");
        assert_eq!(parse_counts_sparse(&text).unwrap(), data);
    }

    #[test]
    fn sparse_parse_errors() {
        assert!(matches!(
            parse_counts_sparse("1 2 3\n").unwrap_err(),
            FormatError::Parse { line: 1, .. }
        ));
        assert!(matches!(
            parse_counts_sparse("K 2\n5:1\n").unwrap_err(),
            FormatError::Parse { line: 2, .. }
        ));
        assert!(matches!(
            parse_counts_sparse("K 2\n0:1 0:2\n").unwrap_err(),
            FormatError::Parse { line: 2, .. }
        ));
        assert!(matches!(
            parse_counts_sparse("K 2\n0-1\n").unwrap_err(),
            FormatError::Parse { line: 2, .. }
        ));
    }

    #[test]
    fn probability_rows_round_trip_and_validate() {
        let text = "0.25 0.75\n0.5 0.5\n";
        let data = parse_probabilities_dense(text).unwrap();
        assert_eq!(data.n_rows(), 2);
        assert_eq!(data.row(1), &[0.5, 0.5]);

        let err = parse_probabilities_dense("0.25 0.75\n0.9 0.3\n").unwrap_err();
        match err {
            FormatError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn stats_round_trip_exactly() {
        let data = CountMatrix::from_rows(2, [[3u64, 1], [0, 2]]).unwrap();
        let stats = CompressedStats::from_counts(&data).unwrap();
        let text = format_stats(&stats);
        assert_eq!(text, "polyafit-stats v1\n2 4 2 2\n1 1 1 0\n2 1 0 0\n2 2 1 1\n");
        let parsed = parse_stats(&text).unwrap();
        assert_eq!(parsed, stats);
        assert_eq!(format_stats(&parsed), text);
    }

    #[test]
    fn stats_empty_round_trip() {
        let data = CountMatrix::from_rows(2, [[0u64, 0]]).unwrap();
        let stats = CompressedStats::from_counts(&data).unwrap();
        let text = format_stats(&stats);
        assert_eq!(text, "polyafit-stats v1\n2 0 1 0\n");
        assert_eq!(parse_stats(&text).unwrap(), stats);
    }

    #[test]
    fn stats_version_and_tamper_checks() {
        assert!(matches!(
            parse_stats("polyafit-stats v9\n1 0 0 0\n").unwrap_err(),
            FormatError::UnsupportedVersion { .. }
        ));
        // v[0] must equal N_effective.
        let bad = "polyafit-stats v1\n2 1 2 2\n1\n1\n1\n";
        assert!(matches!(parse_stats(bad).unwrap_err(), FormatError::Core(_)));
        // Truncated tallies.
        let bad = "polyafit-stats v1\n2 2 2 2\n2 1\n";
        assert!(parse_stats(bad).is_err());
        // Trailing junk.
        let good = "polyafit-stats v1\n2 1 1 1\n1\n0\n1\nleftover\n";
        assert!(matches!(parse_stats(good).unwrap_err(), FormatError::Parse { line: 6, .. }));
    }

    #[test]
    fn sniffing() {
        assert_eq!(sniff_format("# c\n1 2 3\n"), DatasetFormat::Dense);
        assert_eq!(sniff_format("K 5\n0:1\n"), DatasetFormat::Sparse);
        assert_eq!(sniff_format("polyafit-stats v1\n"), DatasetFormat::Stats);
        assert_eq!(sniff_format(""), DatasetFormat::Dense);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn dense_sparse_conversion_is_lossless(
            (k, rows) in (1usize..=6).prop_flat_map(|k| {
                (Just(k), prop::collection::vec(
                    prop::collection::vec(0u64..=30, k), 1..40,
                ))
            }),
        ) {
            let data = CountMatrix::from_rows(k, rows).unwrap();
            let via_dense = parse_counts_dense(&format_counts_dense(&data)).unwrap();
            prop_assert_eq!(&via_dense, &data);
            let via_sparse = parse_counts_sparse(&format_counts_sparse(&data)).unwrap();
            prop_assert_eq!(&via_sparse, &data);
        }

        #[test]
        fn stats_text_round_trip(
            (k, rows) in (1usize..=5).prop_flat_map(|k| {
                (Just(k), prop::collection::vec(
                    prop::collection::vec(0u64..=15, k), 0..50,
                ))
            }),
        ) {
            let data = CountMatrix::from_rows(k, rows).unwrap();
            let stats = CompressedStats::from_counts(&data).unwrap();
            let text = format_stats(&stats);
            let parsed = parse_stats(&text).unwrap();
            prop_assert_eq!(parsed, stats);
        }
    }
}
