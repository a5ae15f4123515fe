//! Min-max scaling to [0,1], fit on training rows only. The scaler
//! record is reapplied verbatim to test rows, which are clipped.

use super::matrix::FeatureMatrix;
use crate::error::{CoreError, Result};
use crate::numeric::Matrix;
use std::fmt::Write as _;

/// Per-column (min, max) record. Constant columns map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub columns: Vec<(f64, f64)>,
}

impl Scaler {
    pub fn fit(fm: &FeatureMatrix) -> Result<Scaler> {
        if fm.rows() == 0 {
            return Err(CoreError::InvalidArgument(
                "cannot fit a scaler on an empty matrix".into(),
            ));
        }
        let mut columns = Vec::with_capacity(fm.dim());
        for c in 0..fm.dim() {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for r in 0..fm.rows() {
                let v = fm.values.get(r, c);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            columns.push((lo, hi));
        }
        Ok(Scaler { columns })
    }

    pub fn apply(&self, fm: &FeatureMatrix) -> Result<FeatureMatrix> {
        if self.columns.len() != fm.dim() {
            return Err(CoreError::ShapeMismatch(format!(
                "scaler has {} columns, matrix has {}",
                self.columns.len(),
                fm.dim()
            )));
        }
        let mut out = Matrix::zeros(fm.rows(), fm.dim());
        for r in 0..fm.rows() {
            for c in 0..fm.dim() {
                let (lo, hi) = self.columns[c];
                let v = if hi > lo {
                    ((fm.values.get(r, c) - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                out.set(r, c, v)?;
            }
        }
        fm.with_values(fm.names.clone(), out)
    }

    /// `column,min,max` rows, one per column.
    pub fn to_text(&self) -> String {
        let mut s = String::from("column,min,max\n");
        for (i, (lo, hi)) in self.columns.iter().enumerate() {
            let _ = writeln!(s, "{i},{lo:?},{hi:?}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Scaler> {
        let mut lines = text.lines();
        if lines.next() != Some("column,min,max") {
            return Err(CoreError::Parse("bad scaler header".into()));
        }
        let mut columns = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(CoreError::Parse(format!("scaler row {i}: need 3 fields")));
            }
            let idx: usize = f[0]
                .parse()
                .map_err(|_| CoreError::Parse(format!("scaler row {i}: bad index")))?;
            if idx != i {
                return Err(CoreError::Parse(format!(
                    "scaler row {i}: out-of-order column {idx}"
                )));
            }
            let lo: f64 = f[1]
                .parse()
                .map_err(|_| CoreError::Parse(format!("scaler row {i}: bad min")))?;
            let hi: f64 = f[2]
                .parse()
                .map_err(|_| CoreError::Parse(format!("scaler row {i}: bad max")))?;
            columns.push((lo, hi));
        }
        Ok(Scaler { columns })
    }
}

/// Fits on `fm` and returns the scaled matrix plus the scaler record.
pub fn minmax_scale(fm: &FeatureMatrix) -> Result<(FeatureMatrix, Scaler)> {
    let scaler = Scaler::fit(fm)?;
    let scaled = scaler.apply(fm)?;
    Ok((scaled, scaler))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::matrix::RowMeta;

    fn fm(cols: Vec<Vec<f64>>) -> FeatureMatrix {
        let rows = cols[0].len();
        let mut data = Vec::new();
        for r in 0..rows {
            for col in &cols {
                data.push(col[r]);
            }
        }
        FeatureMatrix::new(
            (0..cols.len()).map(|i| format!("f{i}")).collect(),
            Matrix::from_vec(rows, cols.len(), data).unwrap(),
            vec![0.0; rows],
            (0..rows)
                .map(|i| RowMeta {
                    id: format!("r{i}"),
                    subject: "s".into(),
                    clip: 1,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn endpoints_map_to_unit_interval() {
        let data = fm(vec![vec![2.0, 5.0, 8.0]]);
        let (scaled, _) = minmax_scale(&data).unwrap();
        assert_eq!(scaled.values.get(0, 0), 0.0);
        assert_eq!(scaled.values.get(1, 0), 0.5);
        assert_eq!(scaled.values.get(2, 0), 1.0);
    }

    #[test]
    fn constant_column_scales_to_zero() {
        let data = fm(vec![vec![7.0, 7.0, 7.0]]);
        let (scaled, _) = minmax_scale(&data).unwrap();
        assert!(scaled.values.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn applying_twice_equals_once_on_training_data() {
        let data = fm(vec![vec![0.0, 0.5, 1.0], vec![1.0, 3.0, 5.0]]);
        let (once, scaler) = minmax_scale(&data).unwrap();
        // the saved scaler maps the already-scaled data identically
        // because its range is exactly [0,1] after the first pass
        let again = Scaler::fit(&once).unwrap().apply(&once).unwrap();
        assert_eq!(once, again);
        let _ = scaler;
    }

    #[test]
    fn test_rows_are_clipped() {
        let train = fm(vec![vec![0.0, 10.0]]);
        let (_, scaler) = minmax_scale(&train).unwrap();
        let test = fm(vec![vec![-5.0, 15.0]]);
        let scaled = scaler.apply(&test).unwrap();
        assert_eq!(scaled.values.get(0, 0), 0.0);
        assert_eq!(scaled.values.get(1, 0), 1.0);
    }

    #[test]
    fn text_roundtrip_byte_identical() {
        let train = fm(vec![vec![0.25, 10.5], vec![-3.0, 4.0]]);
        let (_, scaler) = minmax_scale(&train).unwrap();
        let once = scaler.to_text();
        let back = Scaler::from_text(&once).unwrap();
        assert_eq!(back, scaler);
        assert_eq!(back.to_text(), once);
    }
}
