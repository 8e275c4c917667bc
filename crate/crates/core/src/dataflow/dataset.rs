use std::path::Path;

use crate::error::{Error, Result};

use super::preprocess::pearson;

/// Row-major feature matrix with coarse class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_features: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let d = feature_names.len();
        if features.len() != labels.len() * d {
            return Err(Error::dims("dataset features", labels.len() * d, features.len()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::dims("class label", class_names.len(), bad));
        }
        Ok(Self { n_features: d, features, labels, feature_names, class_names })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.n_features.max(1)).take(self.len())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes()];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    /// Keeps only the feature columns in `keep`, in that order.
    pub fn project(&self, keep: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = keep.iter().find(|&&j| j >= self.n_features) {
            return Err(Error::dims("projected feature index", self.n_features, bad));
        }
        let mut features = Vec::with_capacity(self.len() * keep.len());
        for r in self.rows() {
            features.extend(keep.iter().map(|&j| r[j]));
        }
        Dataset::new(
            features,
            self.labels.clone(),
            keep.iter().map(|&j| self.feature_names[j].clone()).collect(),
            self.class_names.clone(),
        )
    }

    /// Rows `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Dataset {
        let d = self.n_features;
        Dataset {
            n_features: d,
            features: self.features[start * d..end * d].to_vec(),
            labels: self.labels[start..end].to_vec(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn take(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            n_features: self.n_features,
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Violations of the post-preprocessing invariants: constant columns,
    /// and column pairs with |rho| above `corr_threshold`.
    pub fn invariant_violations(&self, corr_threshold: f64) -> Vec<String> {
        let cols: Vec<Vec<f64>> = (0..self.n_features).map(|j| self.column(j)).collect();
        let mut out = Vec::new();
        for (j, c) in cols.iter().enumerate() {
            if c.iter().any(|v| !v.is_finite()) {
                out.push(format!("{}: non-finite value", self.feature_names[j]));
            }
            if c.windows(2).all(|w| w[0] == w[1]) {
                out.push(format!("{}: constant", self.feature_names[j]));
            }
        }
        for i in 0..cols.len() {
            for j in (i + 1)..cols.len() {
                let r = pearson(&cols[i], &cols[j]);
                if r.abs() > corr_threshold {
                    out.push(format!("{} ~ {}: rho={r:.4}", self.feature_names[i], self.feature_names[j]));
                }
            }
        }
        out
    }

    /// CSV with the feature columns followed by a `class` column holding the
    /// coarse class name.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = self.feature_names.clone();
        header.push("class".into());
        w.write_record(&header)?;
        for (r, &l) in self.rows().zip(&self.labels) {
            let mut rec: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
            rec.push(self.class_names[l].clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, class_names: &[String]) -> Result<Dataset> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let class_idx = header.iter().position(|h| h == "class").ok_or_else(|| Error::MissingColumn("class".into()))?;
        let names: Vec<String> = header.iter().enumerate().filter(|&(i, _)| i != class_idx).map(|(_, h)| h.clone()).collect();
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (row, rec) in reader.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::RaggedRow { row, expected: header.len(), found: rec.len() });
            }
            for (i, cell) in rec.iter().enumerate() {
                if i == class_idx {
                    let l = class_names
                        .iter()
                        .position(|c| c == cell)
                        .ok_or_else(|| Error::UnmappedLabel(cell.to_string()))?;
                    labels.push(l);
                } else {
                    features.push(cell.parse::<f64>().map_err(|e| Error::Parse(format!("row {row}: {e}")))?);
                }
            }
        }
        Dataset::new(features, labels, names, class_names.to_vec())
    }
}
