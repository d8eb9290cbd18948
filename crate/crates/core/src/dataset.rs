use alloc::vec::Vec;

use crate::error::{param, Error, Result};

/// `n` regression records `(xᵢ ∈ ℝᵈ, yᵢ ∈ ℝ)`, stored row-major.
///
/// Always holds at least one record and only finite values.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Dataset {
    xs: Vec<f64>,
    ys: Vec<f64>,
    dim: usize,
}

#[allow(clippy::len_without_is_empty)]
impl Dataset {
    /// Builds a dataset from a row-major `n × dim` design and `n` responses.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(param("dataset dimension must be at least 1"));
        }
        if ys.is_empty() {
            return Err(param("dataset must contain at least one record"));
        }
        if xs.len() != ys.len() * dim {
            return Err(Error::Shape {
                expected: ys.len() * dim,
                found: xs.len(),
            });
        }
        if let Some(pos) = xs.iter().chain(&ys).position(|v| !v.is_finite()) {
            return Err(param(alloc::format!(
                "dataset contains a non-finite value at flat position {pos}"
            )));
        }
        Ok(Self { xs, ys, dim })
    }

    pub fn from_rows(rows: &[(Vec<f64>, f64)]) -> Result<Self> {
        let dim = rows.first().map(|r| r.0.len()).unwrap_or(0);
        let mut xs = Vec::with_capacity(rows.len() * dim);
        for (x, _) in rows {
            if x.len() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    found: x.len(),
                });
            }
            xs.extend_from_slice(x);
        }
        Self::new(xs, rows.iter().map(|r| r.1).collect(), dim)
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.ys[i]
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn records(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.xs.chunks_exact(self.dim).zip(self.ys.iter().copied())
    }

    /// `yᵢ − ⟨xᵢ, w⟩`.
    pub fn residual(&self, i: usize, w: &[f64]) -> f64 {
        self.ys[i] - dot(self.x(i), w)
    }

    /// Copy of the dataset with record `i` replaced.
    pub fn with_record(&self, i: usize, x: &[f64], y: f64) -> Result<Self> {
        if i >= self.len() {
            return Err(param(alloc::format!(
                "record index {i} out of range for {} records",
                self.len()
            )));
        }
        if x.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                found: x.len(),
            });
        }
        let mut out = self.clone();
        out.xs[i * self.dim..(i + 1) * self.dim].copy_from_slice(x);
        out.ys[i] = y;
        Self::new(out.xs, out.ys, out.dim)
    }

    /// Indices of records that differ bitwise, or `None` when the shapes differ.
    pub fn differing_records(&self, other: &Dataset) -> Option<Vec<usize>> {
        if self.len() != other.len() || self.dim != other.dim {
            return None;
        }
        Some(
            (0..self.len())
                .filter(|&i| {
                    self.ys[i].to_bits() != other.ys[i].to_bits()
                        || self
                            .x(i)
                            .iter()
                            .zip(other.x(i))
                            .any(|(a, b)| a.to_bits() != b.to_bits())
                })
                .collect(),
        )
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim != dim {
            return Err(Error::Shape {
                expected: self.dim,
                found: dim,
            });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Dataset::new(vec![], vec![], 1), Err(Error::Parameter(_))));
        assert!(matches!(
            Dataset::new(vec![1.0, 2.0], vec![1.0], 1),
            Err(Error::Shape { .. })
        ));
        assert!(Dataset::new(vec![f64::NAN], vec![1.0], 1).is_err());
        assert!(Dataset::new(vec![1.0], vec![f64::INFINITY], 1).is_err());
    }

    #[test]
    fn neighbors() {
        let d = Dataset::from_rows(&[(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 2.0)]).unwrap();
        let e = d.with_record(1, &[3.0, 3.0], 0.0).unwrap();
        assert_eq!(d.differing_records(&e), Some(vec![1]));
        assert_eq!(d.differing_records(&d), Some(vec![]));
        assert!((d.residual(0, &[0.5, 0.0]) - 0.5).abs() < 1e-15);
    }
}
