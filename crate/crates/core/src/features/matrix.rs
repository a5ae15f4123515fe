use crate::error::{CoreError, Result};
use crate::numeric::Matrix;
use std::fmt::Write as _;

/// Per-row identifiers carried alongside the feature values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowMeta {
    pub id: String,
    pub subject: String,
    pub clip: u32,
}

/// Labeled table of per-sample feature vectors.
///
/// `labels` holds class indices for classification data and raw ratings
/// for DEAP-style data before binarization.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub values: Matrix,
    pub labels: Vec<f64>,
    pub meta: Vec<RowMeta>,
}

impl FeatureMatrix {
    pub fn new(
        names: Vec<String>,
        values: Matrix,
        labels: Vec<f64>,
        meta: Vec<RowMeta>,
    ) -> Result<Self> {
        if names.len() != values.cols() {
            return Err(CoreError::ShapeMismatch(format!(
                "{} feature names for {} columns",
                names.len(),
                values.cols()
            )));
        }
        if labels.len() != values.rows() || meta.len() != values.rows() {
            return Err(CoreError::ShapeMismatch(format!(
                "{} rows, {} labels, {} meta entries",
                values.rows(),
                labels.len(),
                meta.len()
            )));
        }
        if labels.iter().any(|l| !l.is_finite()) {
            return Err(CoreError::NonFinite("label".into()));
        }
        Ok(FeatureMatrix {
            names,
            values,
            labels,
            meta,
        })
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    /// Distinct class labels in ascending order (labels rounded to i64).
    pub fn classes(&self) -> Vec<i64> {
        let mut cs: Vec<i64> = self.labels.iter().map(|&l| l.round() as i64).collect();
        cs.sort_unstable();
        cs.dedup();
        cs
    }

    pub fn class_labels(&self) -> Vec<i64> {
        self.labels.iter().map(|&l| l.round() as i64).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: self.names.clone(),
            values: self.values.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            meta: idx.iter().map(|&i| self.meta[i].clone()).collect(),
        }
    }

    /// Same rows and metadata, new values (and optionally new names).
    pub fn with_values(&self, names: Vec<String>, values: Matrix) -> Result<FeatureMatrix> {
        FeatureMatrix::new(names, values, self.labels.clone(), self.meta.clone())
    }

    /// Column-wise join of two paired feature matrices. Rows must carry
    /// matching ids in the same order.
    pub fn hcat(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        for (a, b) in self.meta.iter().zip(&other.meta) {
            if a.id != b.id {
                return Err(CoreError::Data(format!(
                    "unpaired rows: id '{}' vs '{}'",
                    a.id, b.id
                )));
            }
        }
        if self.rows() != other.rows() {
            return Err(CoreError::Data(format!(
                "unpaired row counts: {} vs {}",
                self.rows(),
                other.rows()
            )));
        }
        let names = self.names.iter().chain(&other.names).cloned().collect();
        FeatureMatrix::new(
            names,
            self.values.hcat(&other.values)?,
            self.labels.clone(),
            self.meta.clone(),
        )
    }

    /// CSV with header `id,subject,clip,label,<feature names>`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,subject,clip,label");
        for n in &self.names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for r in 0..self.rows() {
            let m = &self.meta[r];
            let _ = write!(s, "{},{},{},{:?}", m.id, m.subject, m.clip, self.labels[r]);
            for v in self.values.row(r) {
                let _ = write!(s, ",{v:?}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<FeatureMatrix> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| CoreError::Parse("empty feature CSV".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 4 || cols[..4] != ["id", "subject", "clip", "label"] {
            return Err(CoreError::Parse(
                "feature CSV header must start with id,subject,clip,label".into(),
            ));
        }
        let names: Vec<String> = cols[4..].iter().map(|s| s.to_string()).collect();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut meta = Vec::new();
        for (lineno, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(CoreError::Parse(format!(
                    "row {}: {} fields, expected {}",
                    lineno + 1,
                    fields.len(),
                    cols.len()
                )));
            }
            let clip: u32 = fields[2].parse().map_err(|_| {
                CoreError::Parse(format!(
                    "row {} column clip: non-numeric cell '{}'",
                    lineno + 1,
                    fields[2]
                ))
            })?;
            let label: f64 = fields[3].parse().map_err(|_| {
                CoreError::Parse(format!(
                    "row {} column label: non-numeric cell '{}'",
                    lineno + 1,
                    fields[3]
                ))
            })?;
            let mut vals = Vec::with_capacity(names.len());
            for (ci, f) in fields[4..].iter().enumerate() {
                vals.push(f.parse::<f64>().map_err(|_| {
                    CoreError::Parse(format!(
                        "row {} column {}: non-numeric cell '{}'",
                        lineno + 1,
                        ci + 5,
                        f
                    ))
                })?);
            }
            meta.push(RowMeta {
                id: fields[0].to_string(),
                subject: fields[1].to_string(),
                clip,
            });
            labels.push(label);
            rows.push(vals);
        }
        let values = Matrix::from_rows(&rows)?;
        if values.rows() > 0 && values.cols() != names.len() {
            return Err(CoreError::Parse("column count mismatch".into()));
        }
        // empty files keep the declared width
        let values = if rows.is_empty() {
            Matrix::zeros(0, names.len())
        } else {
            values
        };
        FeatureMatrix::new(names, values, labels, meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureMatrix {
        FeatureMatrix::new(
            vec!["f1".into(), "f2".into()],
            Matrix::from_vec(2, 2, vec![0.25, 1.0, 0.5, 0.125]).unwrap(),
            vec![1.0, 2.0],
            vec![
                RowMeta {
                    id: "a".into(),
                    subject: "s1".into(),
                    clip: 1,
                },
                RowMeta {
                    id: "b".into(),
                    subject: "s1".into(),
                    clip: 2,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn csv_roundtrip_byte_identical() {
        let fm = sample();
        let once = fm.to_csv();
        let back = FeatureMatrix::from_csv(&once).unwrap();
        assert_eq!(back, fm);
        assert_eq!(back.to_csv(), once);
    }

    #[test]
    fn csv_reports_bad_cell_position() {
        let text = "id,subject,clip,label,f1\na,s,1,1,oops\n";
        let err = FeatureMatrix::from_csv(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2"), "{msg}");
        assert!(msg.contains("column 5"), "{msg}");
    }

    #[test]
    fn hcat_requires_pairing() {
        let a = sample();
        let mut b = sample();
        b.meta[1].id = "zzz".into();
        assert!(a.hcat(&b).is_err());
    }

    #[test]
    fn classes_sorted_unique() {
        let fm = sample();
        assert_eq!(fm.classes(), vec![1, 2]);
    }
}
