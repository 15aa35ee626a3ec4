use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `n` points in `d` dimensions, with optional
/// integer class labels. Row `i` is point id `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    n: usize,
    d: usize,
    data: Vec<f64>,
    labels: Option<Vec<i32>>,
}

impl PointCloud {
    /// Only the matrix shape is checked here; finiteness and label length are
    /// reported by [`PointCloud::validate`].
    pub fn new(n: usize, d: usize, data: Vec<f64>, labels: Option<Vec<i32>>) -> Result<Self> {
        if data.len() != n * d {
            return Err(Error::InvalidInput(format!(
                "matrix of {n}x{d} needs {} values, got {}",
                n * d,
                data.len()
            )));
        }
        Ok(Self { n, d, data, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<i32>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::InvalidInput(format!(
                "row {bad} has {} columns, expected {d}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), d, rows.concat(), labels)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on zero width
        let d = self.d.max(1);
        self.data.chunks_exact(d).take(if self.d == 0 { 0 } else { self.n })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn labels(&self) -> Option<&[i32]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> Option<i32> {
        self.labels.as_ref().and_then(|l| l.get(i).copied())
    }

    pub fn with_labels(mut self, labels: Option<Vec<i32>>) -> Self {
        self.labels = labels;
        self
    }

    /// Copies the given rows (and their labels) into a new cloud.
    pub fn select(&self, rows: &[usize]) -> PointCloud {
        let mut data = Vec::with_capacity(rows.len() * self.d);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| rows.iter().map(|&r| l[r]).collect());
        PointCloud {
            n: rows.len(),
            d: self.d,
            data,
            labels,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let nonfinite_rows = if self.d == 0 {
            Vec::new()
        } else {
            self.data
                .chunks_exact(self.d)
                .enumerate()
                .filter(|(_, r)| r.iter().any(|v| !v.is_finite()))
                .map(|(i, _)| i)
                .collect()
        };
        let label_mismatch = self
            .labels
            .as_ref()
            .filter(|l| l.len() != self.n)
            .map(|l| (self.n, l.len()));
        ValidationReport {
            n: self.n,
            d: self.d,
            nonfinite_rows,
            label_mismatch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n: usize,
    pub d: usize,
    /// Rows containing NaN or infinite coordinates.
    pub nonfinite_rows: Vec<usize>,
    /// `(expected, actual)` label counts when they differ.
    pub label_mismatch: Option<(usize, usize)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.n >= 1 && self.d >= 1 && self.nonfinite_rows.is_empty() && self.label_mismatch.is_none()
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n == 0 {
            out.push("point cloud is empty".to_owned());
        }
        if self.d == 0 {
            out.push("points have zero dimensions".to_owned());
        }
        if !self.nonfinite_rows.is_empty() {
            let shown: Vec<String> = self.nonfinite_rows.iter().take(10).map(|r| r.to_string()).collect();
            let more = self.nonfinite_rows.len().saturating_sub(10);
            let mut msg = format!("non-finite coordinates in rows {}", shown.join(", "));
            if more > 0 {
                msg.push_str(&format!(" (+{more} more)"));
            }
            out.push(msg);
        }
        if let Some((expected, actual)) = self.label_mismatch {
            out.push(format!("label count {actual} does not match point count {expected}"));
        }
        out
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidInput(self.problems().join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_matrix_passes() {
        let pc = PointCloud::new(3, 2, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], None).unwrap();
        assert!(pc.validate().is_valid());
    }

    #[test]
    fn nan_row_is_reported() {
        let pc = PointCloud::new(3, 2, vec![0.0, 1.0, f64::NAN, 3.0, 4.0, 5.0], None).unwrap();
        let report = pc.validate();
        assert!(!report.is_valid());
        assert_eq!(report.nonfinite_rows, vec![1]);
    }

    #[test]
    fn infinite_value_is_reported() {
        let pc = PointCloud::new(2, 1, vec![f64::INFINITY, 0.0], None).unwrap();
        assert_eq!(pc.validate().nonfinite_rows, vec![0]);
    }

    #[test]
    fn label_length_mismatch_is_reported() {
        let pc = PointCloud::new(3, 1, vec![0.0, 1.0, 2.0], Some(vec![1, 2])).unwrap();
        let report = pc.validate();
        assert_eq!(report.label_mismatch, Some((3, 2)));
        assert!(report.into_result().is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(PointCloud::new(2, 2, vec![0.0; 3], None).is_err());
    }

    #[test]
    fn select_keeps_labels() {
        let pc = PointCloud::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], Some(vec![5, 6, 7])).unwrap();
        let sub = pc.select(&[2, 0]);
        assert_eq!(sub.row(0), &[2.0]);
        assert_eq!(sub.labels(), Some(&[7, 5][..]));
    }
}
