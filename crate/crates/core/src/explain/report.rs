use std::path::Path;

use super::kernel::Explanation;
use crate::error::{Error, Result};

/// Mean absolute attribution per feature with its importance ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionReport {
    pub feature_names: Vec<String>,
    /// Mean of |phi| over evaluated instances and classes.
    pub mean_abs: Vec<f64>,
    /// Feature indices by descending importance; ties go to the lower index.
    pub ranking: Vec<usize>,
}

fn rank(mean_abs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..mean_abs.len()).collect();
    order.sort_by(|&a, &b| mean_abs[b].total_cmp(&mean_abs[a]).then(a.cmp(&b)));
    order
}

impl AttributionReport {
    pub fn new(feature_names: Vec<String>, mean_abs: Vec<f64>) -> Result<Self> {
        if feature_names.len() != mean_abs.len() {
            return Err(Error::LengthMismatch(feature_names.len(), mean_abs.len()));
        }
        if let Some(v) = mean_abs.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::NonFinite(format!("mean |shap| value {v}")));
        }
        let ranking = rank(&mean_abs);
        Ok(Self { feature_names, mean_abs, ranking })
    }

    pub fn from_explanations(feature_names: Vec<String>, explanations: &[Explanation]) -> Result<Self> {
        if explanations.is_empty() {
            return Err(Error::Empty("explanations".into()));
        }
        let d = feature_names.len();
        let mut mean_abs = vec![0.0; d];
        let mut count = 0usize;
        for e in explanations {
            if e.phi.len() != d {
                return Err(Error::dims("attribution width", d, e.phi.len()));
            }
            for (acc, p) in mean_abs.iter_mut().zip(&e.phi) {
                *acc += p.iter().map(|v| v.abs()).sum::<f64>();
            }
            count += e.fx.len();
        }
        mean_abs.iter_mut().for_each(|v| *v /= count as f64);
        Self::new(feature_names, mean_abs)
    }

    pub fn len(&self) -> usize {
        self.mean_abs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_abs.is_empty()
    }

    /// Share of total importance held by the `k` top-ranked features.
    pub fn cumulative_share(&self, k: usize) -> f64 {
        let total: f64 = self.mean_abs.iter().sum();
        let k = k.min(self.len());
        if total == 0.0 {
            return if self.is_empty() { 1.0 } else { k as f64 / self.len() as f64 };
        }
        if k == self.len() {
            return 1.0;
        }
        self.ranking[..k].iter().map(|&i| self.mean_abs[i]).sum::<f64>() / total
    }

    /// Rows in rank order: `feature,mean_abs_shap,rank,cumulative_share`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["feature", "mean_abs_shap", "rank", "cumulative_share"])?;
        for (r, &i) in self.ranking.iter().enumerate() {
            w.write_record([
                self.feature_names[i].clone(),
                format!("{:e}", self.mean_abs[i]),
                (r + 1).to_string(),
                format!("{:.6}", self.cumulative_share(r + 1)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a report written by [`write_csv`](Self::write_csv); features
    /// are ordered as `feature_order` when given, else by rank.
    pub fn read_csv(path: &Path, feature_order: Option<&[String]>) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn(name.into()));
        let (fi, vi) = (col("feature")?, col("mean_abs_shap")?);
        let mut pairs = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let v: f64 = rec[vi].parse().map_err(|_| Error::Parse(format!("mean_abs_shap value {:?}", &rec[vi])))?;
            pairs.push((rec[fi].to_string(), v));
        }
        match feature_order {
            None => Self::new(pairs.iter().map(|p| p.0.clone()).collect(), pairs.iter().map(|p| p.1).collect()),
            Some(order) => {
                let mut values = Vec::with_capacity(order.len());
                for name in order {
                    let v = pairs.iter().find(|p| &p.0 == name).ok_or_else(|| Error::MissingColumn(name.clone()))?;
                    values.push(v.1);
                }
                Self::new(order.to_vec(), values)
            }
        }
    }
}

/// The `k` most important feature indices (descending) and their share.
pub fn select_topk(report: &AttributionReport, k: usize) -> Result<(Vec<usize>, f64)> {
    if k > report.len() {
        return Err(Error::TooManyFeatures { k, features: report.len() });
    }
    Ok((report.ranking[..k].to_vec(), report.cumulative_share(k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn ranking_ties_and_share() {
        let r = AttributionReport::new(names(4), vec![0.1, 0.4, 0.4, 0.1]).unwrap();
        assert_eq!(r.ranking, vec![1, 2, 0, 3]);
        let (idx, share) = select_topk(&r, 2).unwrap();
        assert_eq!(idx, vec![1, 2]);
        assert!((share - 0.8).abs() < 1e-12);
        assert_eq!(select_topk(&r, 4).unwrap().1, 1.0);
        assert!(matches!(select_topk(&r, 5), Err(Error::TooManyFeatures { k: 5, features: 4 })));
    }

    #[test]
    fn aggregates_over_instances_and_classes() {
        let e1 = Explanation { phi: vec![vec![1.0, -1.0], vec![0.0, 2.0]], base: vec![0.0; 2], fx: vec![0.0; 2] };
        let e2 = Explanation { phi: vec![vec![-3.0, 1.0], vec![0.0, 0.0]], base: vec![0.0; 2], fx: vec![0.0; 2] };
        let r = AttributionReport::from_explanations(names(2), &[e1, e2]).unwrap();
        assert_eq!(r.mean_abs, vec![1.5, 0.5]);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("shap.csv");
        let r = AttributionReport::new(names(5), vec![0.3, 1e-9, 2.5, 0.0, 0.3]).unwrap();
        r.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("feature,mean_abs_shap,rank,cumulative_share\nf2,"));
        assert_eq!(AttributionReport::read_csv(&p, Some(&names(5))).unwrap(), r);
    }

    proptest! {
        #[test]
        fn share_monotone_and_scale_invariant(v in prop::collection::vec(0.0f64..5.0, 1..40), c in 0.001f64..1000.0) {
            let r = AttributionReport::new(names(v.len()), v.clone()).unwrap();
            let mut prev = 0.0;
            for k in 0..=v.len() {
                let s = r.cumulative_share(k);
                prop_assert!((0.0..=1.0).contains(&s) && s >= prev - 1e-12);
                prev = s;
            }
            let scaled = AttributionReport::new(names(v.len()), v.iter().map(|x| x * c).collect()).unwrap();
            let k = v.len() / 2;
            prop_assert_eq!(select_topk(&scaled, k).unwrap().0, select_topk(&r, k).unwrap().0);
        }
    }
}
