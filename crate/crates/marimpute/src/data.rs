//! Core containers for complete data, missingness masks and completed
//! (imputed) datasets.
//!
//! A dataset is an `n x d` matrix of reals. Missingness is carried
//! separately as a `{0,1}` mask: entry 1 means masked, 0 means observed.
//! All types here are immutable after construction.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// NA sentinel used for masked cells of an [`IncompleteData`].
pub const NA: f64 = f64::NAN;

const NA_TOKEN: &str = "NA";

/// Dense `n x d` matrix of finite reals, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    pub column_names: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(values: Vec<f64>, n_rows: usize, n_cols: usize) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 || values.len() != n_rows * n_cols {
            return Err(Error::ShapeMismatch(format!(
                "expected {n_rows}x{n_cols} = {} values, got {}",
                n_rows * n_cols,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite entry in data matrix".into()));
        }
        Ok(Self { values, n_rows, n_cols, column_names: None })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            if r.len() != n_cols {
                return Err(Error::ShapeMismatch("ragged rows".into()));
            }
            values.extend_from_slice(r);
        }
        Self::new(values, n_rows, n_cols)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W, header: bool) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        if header {
            let names: Vec<String> = match &self.column_names {
                Some(n) => n.clone(),
                None => (0..self.n_cols).map(|j| format!("x{}", j + 1)).collect(),
            };
            wtr.write_record(&names)?;
        }
        for i in 0..self.n_rows {
            let rec: Vec<String> = self.row(i).iter().map(|v| format_cell(*v)).collect();
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P, header: bool) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(f, header)
    }

    pub fn read_csv<R: Read>(r: R, header: bool) -> Result<Self> {
        let (rows, names, mask_rows) = parse_csv(r, header)?;
        for (i, row) in mask_rows.iter().enumerate() {
            if row.iter().any(|&b| b == 1) {
                return Err(Error::DataError {
                    line: i + 1 + usize::from(header),
                    msg: "NA cell in complete data file".into(),
                });
            }
        }
        let mut m = Self::from_rows(&rows)?;
        m.column_names = names;
        Ok(m)
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P, header: bool) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(f, header)
    }
}

// `{:?}` prints enough digits to round-trip an f64 exactly.
fn format_cell(v: f64) -> String {
    if v.is_nan() {
        NA_TOKEN.to_string()
    } else {
        format!("{v:?}")
    }
}

type ParsedCsv = (Vec<Vec<f64>>, Option<Vec<String>>, Vec<Vec<u8>>);

fn parse_csv<R: Read>(r: R, header: bool) -> Result<ParsedCsv> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(r);
    let mut rows = Vec::new();
    let mut mask = Vec::new();
    let mut names = None;
    let mut width = None;
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = idx + 1;
        if idx == 0 && header {
            names = Some(rec.iter().map(|s| s.to_string()).collect());
            continue;
        }
        let mut row = Vec::with_capacity(rec.len());
        let mut mrow = Vec::with_capacity(rec.len());
        for cell in rec.iter() {
            let cell = cell.trim();
            if cell == NA_TOKEN {
                row.push(NA);
                mrow.push(1u8);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::DataError {
                    line,
                    msg: format!("non-numeric cell `{cell}`"),
                })?;
                row.push(v);
                mrow.push(0u8);
            }
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::DataError {
                    line,
                    msg: format!("expected {w} columns, got {}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
        mask.push(mrow);
    }
    if rows.is_empty() {
        return Err(Error::DataError { line: 0, msg: "empty file".into() });
    }
    Ok((rows, names, mask))
}

/// `{0,1}` missingness indicators; 1 marks a masked cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingMask {
    entries: Vec<u8>,
    n_rows: usize,
    n_cols: usize,
}

impl MissingMask {
    pub fn new(entries: Vec<u8>, n_rows: usize, n_cols: usize) -> Result<Self> {
        if entries.len() != n_rows * n_cols || entries.iter().any(|&e| e > 1) {
            return Err(Error::ShapeMismatch("bad mask".into()));
        }
        Ok(Self { entries, n_rows, n_cols })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut entries = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            if r.len() != n_cols {
                return Err(Error::ShapeMismatch("ragged mask rows".into()));
            }
            entries.extend_from_slice(r);
        }
        Self::new(entries, n_rows, n_cols)
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { entries: vec![0; n_rows * n_cols], n_rows, n_cols }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.entries[i * self.n_cols + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.entries[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// Fraction of masked cells.
    pub fn missing_rate(&self) -> f64 {
        self.entries.iter().map(|&e| e as usize).sum::<usize>() as f64
            / self.entries.len() as f64
    }
}

/// Data with NA at masked cells, paired with the mask that produced it.
#[derive(Debug, Clone)]
pub struct IncompleteData {
    values: Vec<f64>,
    pub mask: MissingMask,
}

impl IncompleteData {
    /// Builds from raw values containing NaN exactly where `mask` is 1.
    pub fn new(values: Vec<f64>, mask: MissingMask) -> Result<Self> {
        if values.len() != mask.n_rows * mask.n_cols {
            return Err(Error::ShapeMismatch("values/mask size".into()));
        }
        for (v, m) in values.iter().zip(mask.entries.iter()) {
            if v.is_nan() != (*m == 1) {
                return Err(Error::ShapeMismatch("NA cells inconsistent with mask".into()));
            }
        }
        Ok(Self { values, mask })
    }

    pub fn n_rows(&self) -> usize {
        self.mask.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.mask.n_cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.mask.n_cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn write_csv<W: Write>(&self, w: W, header: bool) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        if header {
            let names: Vec<String> =
                (0..self.n_cols()).map(|j| format!("x{}", j + 1)).collect();
            wtr.write_record(&names)?;
        }
        for i in 0..self.n_rows() {
            let rec: Vec<String> = (0..self.n_cols())
                .map(|j| format_cell(self.get(i, j)))
                .collect();
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P, header: bool) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(f, header)
    }

    pub fn read_csv<R: Read>(r: R, header: bool) -> Result<Self> {
        let (rows, _, mask_rows) = parse_csv(r, header)?;
        let mask = MissingMask::from_rows(&mask_rows)?;
        let mut values = Vec::with_capacity(mask.n_rows * mask.n_cols);
        for r in &rows {
            values.extend_from_slice(r);
        }
        Self::new(values, mask)
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P, header: bool) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(f, header)
    }
}

/// A distinct mask row together with its occurrence count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub bits: Vec<u8>,
    pub count: usize,
}

/// Fully imputed dataset; observed cells are bit-identical to the input.
#[derive(Debug, Clone)]
pub struct CompletedDataset {
    pub values: DataMatrix,
    pub source_mask: MissingMask,
}

impl CompletedDataset {
    pub fn new(values: DataMatrix, source_mask: MissingMask) -> Result<Self> {
        if values.n_rows() != source_mask.n_rows || values.n_cols() != source_mask.n_cols {
            return Err(Error::ShapeMismatch("completed/mask shapes".into()));
        }
        Ok(Self { values, source_mask })
    }
}

/// Masks `x` with `m`: NA exactly where the mask is 1.
pub fn apply_mask(x: &DataMatrix, m: &MissingMask) -> Result<IncompleteData> {
    if x.n_rows() != m.n_rows || x.n_cols() != m.n_cols {
        return Err(Error::ShapeMismatch(format!(
            "data {}x{} vs mask {}x{}",
            x.n_rows(),
            x.n_cols(),
            m.n_rows,
            m.n_cols
        )));
    }
    let values: Vec<f64> = x
        .values
        .iter()
        .zip(m.entries.iter())
        .map(|(&v, &b)| if b == 1 { NA } else { v })
        .collect();
    Ok(IncompleteData { values, mask: m.clone() })
}

/// Distinct mask rows with counts, in lexicographic bit order.
pub fn extract_patterns(m: &MissingMask) -> Vec<Pattern> {
    let mut map: std::collections::BTreeMap<Vec<u8>, usize> = std::collections::BTreeMap::new();
    for i in 0..m.n_rows {
        *map.entry(m.row(i).to_vec()).or_insert(0) += 1;
    }
    map.into_iter().map(|(bits, count)| Pattern { bits, count }).collect()
}

/// Partitions row indices of column `j` into (observed, missing).
pub fn observed_row_index(d: &IncompleteData, j: usize) -> (Vec<usize>, Vec<usize>) {
    let mut obs = Vec::new();
    let mut mis = Vec::new();
    for i in 0..d.n_rows() {
        if d.mask.get(i, j) == 0 {
            obs.push(i);
        } else {
            mis.push(i);
        }
    }
    (obs, mis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn figure2_case() -> (DataMatrix, MissingMask) {
        let x = DataMatrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 9.0],
        ])
        .unwrap();
        let m = MissingMask::from_rows(&[vec![0, 0, 0], vec![1, 0, 0], vec![1, 1, 0]]).unwrap();
        (x, m)
    }

    #[test]
    fn apply_mask_identity_under_zero_mask() {
        let (x, _) = figure2_case();
        let m = MissingMask::zeros(3, 3);
        let inc = apply_mask(&x, &m).unwrap();
        assert_eq!(inc.values(), x.values());
    }

    #[test]
    fn apply_mask_row_patterns() {
        let (x, m) = figure2_case();
        let inc = apply_mask(&x, &m).unwrap();
        assert_eq!(inc.row_na_flags(0), vec![false, false, false]);
        assert_eq!(inc.row_na_flags(1), vec![true, false, false]);
        assert_eq!(inc.row_na_flags(2), vec![true, true, false]);
        // observed entries unchanged
        assert_eq!(inc.get(1, 1), 5.0);
        assert_eq!(inc.get(2, 2), 9.0);
    }

    impl IncompleteData {
        fn row_na_flags(&self, i: usize) -> Vec<bool> {
            (0..self.n_cols()).map(|j| self.get(i, j).is_nan()).collect()
        }
    }

    #[test]
    fn apply_mask_all_one() {
        let (x, _) = figure2_case();
        let m = MissingMask::new(vec![1; 9], 3, 3).unwrap();
        let inc = apply_mask(&x, &m).unwrap();
        assert!(inc.values().iter().all(|v| v.is_nan()));
    }

    #[test]
    fn apply_mask_shape_mismatch() {
        let (x, _) = figure2_case();
        let m = MissingMask::zeros(2, 3);
        assert!(apply_mask(&x, &m).is_err());
    }

    #[test]
    fn patterns_of_figure2() {
        let (_, m) = figure2_case();
        let pats = extract_patterns(&m);
        assert_eq!(pats.len(), 3);
        assert_eq!(pats[0], Pattern { bits: vec![0, 0, 0], count: 1 });
        assert_eq!(pats[1], Pattern { bits: vec![1, 0, 0], count: 1 });
        assert_eq!(pats[2], Pattern { bits: vec![1, 1, 0], count: 1 });
    }

    #[test]
    fn patterns_single() {
        let m = MissingMask::from_rows(&[vec![1, 0], vec![1, 0], vec![1, 0]]).unwrap();
        let pats = extract_patterns(&m);
        assert_eq!(pats, vec![Pattern { bits: vec![1, 0], count: 3 }]);
    }

    #[test]
    fn patterns_two_by_two() {
        let m = MissingMask::from_rows(&[vec![0, 1], vec![1, 0], vec![0, 1], vec![1, 0]])
            .unwrap();
        let pats = extract_patterns(&m);
        assert_eq!(pats.len(), 2);
        assert!(pats.iter().all(|p| p.count == 2));
        let n: usize = pats.iter().map(|p| p.count).sum();
        assert_eq!(n, 4);
    }

    #[test]
    fn observed_rows_fully_observed_column() {
        let (x, m) = figure2_case();
        let inc = apply_mask(&x, &m).unwrap();
        let (obs, mis) = observed_row_index(&inc, 2);
        assert_eq!(obs, vec![0, 1, 2]);
        assert!(mis.is_empty());
    }

    #[test]
    fn observed_rows_figure2_first_column() {
        let (x, m) = figure2_case();
        let inc = apply_mask(&x, &m).unwrap();
        let (obs, mis) = observed_row_index(&inc, 0);
        assert_eq!(obs, vec![0]);
        assert_eq!(mis, vec![1, 2]);
    }

    #[test]
    fn observed_rows_random_mask_partition() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 40;
        let d = 4;
        let vals: Vec<f64> = (0..n * d).map(|_| rng.gen::<f64>()).collect();
        let x = DataMatrix::new(vals, n, d).unwrap();
        let bits: Vec<u8> = (0..n * d).map(|_| rng.gen_bool(0.3) as u8).collect();
        let m = MissingMask::new(bits, n, d).unwrap();
        let inc = apply_mask(&x, &m).unwrap();
        for j in 0..d {
            let (obs, mis) = observed_row_index(&inc, j);
            assert_eq!(obs.len() + mis.len(), n);
            for &i in &obs {
                assert_eq!(m.get(i, j), 0);
            }
            for &i in &mis {
                assert_eq!(m.get(i, j), 1);
            }
        }
    }

    #[test]
    fn pattern_counts_sum_to_n() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let n = 100;
        let d = 3;
        let bits: Vec<u8> = (0..n * d).map(|_| rng.gen_bool(0.5) as u8).collect();
        let m = MissingMask::new(bits, n, d).unwrap();
        let pats = extract_patterns(&m);
        assert_eq!(pats.iter().map(|p| p.count).sum::<usize>(), n);
        // lexicographic order
        for w in pats.windows(2) {
            assert!(w[0].bits < w[1].bits);
        }
    }

    #[test]
    fn completion_round_trip_bit_exact() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 25;
        let d = 3;
        let vals: Vec<f64> = (0..n * d).map(|_| rng.gen::<f64>() * 1e3).collect();
        let x = DataMatrix::new(vals, n, d).unwrap();
        let bits: Vec<u8> = (0..n * d).map(|_| rng.gen_bool(0.4) as u8).collect();
        let m = MissingMask::new(bits, n, d).unwrap();
        let inc = apply_mask(&x, &m).unwrap();
        // complete with the true values
        let completed: Vec<f64> = inc
            .values()
            .iter()
            .zip(x.values().iter())
            .map(|(&v, &t)| if v.is_nan() { t } else { v })
            .collect();
        assert_eq!(
            completed.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            x.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn csv_round_trip() {
        let (x, m) = figure2_case();
        let inc = apply_mask(&x, &m).unwrap();
        let mut buf = Vec::new();
        inc.write_csv(&mut buf, true).unwrap();
        let back = IncompleteData::read_csv(&buf[..], true).unwrap();
        assert_eq!(back.mask, inc.mask);
        for (a, b) in back.values().iter().zip(inc.values().iter()) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }

    #[test]
    fn csv_rejects_na_in_complete() {
        let text = "1.0,2.0\nNA,3.0\n";
        let err = DataMatrix::read_csv(text.as_bytes(), false).unwrap_err();
        match err {
            Error::DataError { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_malformed_row_names_line() {
        let text = "1.0,2.0\n3.0,oops\n";
        let err = DataMatrix::read_csv(text.as_bytes(), false).unwrap_err();
        match err {
            Error::DataError { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("oops"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
