use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense design matrix with named columns and binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl Dataset {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Dataset> {
        if rows.len() != labels.len() {
            return Err(Error::Schema(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != names.len()) {
            return Err(Error::Schema(format!(
                "row {bad} has {} values, expected {}",
                rows[bad].len(),
                names.len()
            )));
        }
        Ok(Dataset {
            names,
            rows,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            names: self.names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Keeps only the named columns, in the order given.
    pub fn select(&self, names: &[String]) -> Result<Dataset> {
        let idx = self.column_indices(names)?;
        Ok(Dataset {
            names: names.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&j| r[j]).collect())
                .collect(),
            labels: self.labels.clone(),
        })
    }

    pub fn column_indices(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.names
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| Error::Schema(format!("no column named `{n}`")))
            })
            .collect()
    }

    /// Appends a column.
    pub fn with_column(&self, name: &str, values: &[f64]) -> Result<Dataset> {
        if values.len() != self.len() {
            return Err(Error::Schema(format!(
                "column `{name}` has {} values for {} rows",
                values.len(),
                self.len()
            )));
        }
        let mut out = self.clone();
        out.names.push(name.to_string());
        for (row, &v) in out.rows.iter_mut().zip(values) {
            row.push(v);
        }
        Ok(out)
    }

    pub fn check_finite(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(
                    "dataset",
                    format!("row {i}, column `{}` is not finite", self.names[j]),
                ));
            }
        }
        Ok(())
    }

    /// Errors unless both classes are present.
    pub fn check_two_classes(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        let pos = self.positives();
        if pos == 0 || pos == self.len() {
            return Err(Error::invalid("labels", "only one class present"));
        }
        Ok(())
    }
}
