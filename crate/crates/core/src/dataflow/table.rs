use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

/// One feature column. Missing cells are stored as NaN.
///
/// `text` keeps the raw cell strings for columns that contained any
/// non-numeric cell, so nominal columns can be label-encoded later.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
    pub text: Option<Vec<String>>,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values, text: None }
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    pub fn missing_fraction(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.missing_count() as f64 / self.values.len() as f64
    }
}

/// Flow records in chronological order with their detailed labels.
///
/// Stored column-major; `row` materialises a single record. After
/// `map_labels` the coarse class of every row is available in `classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTable {
    pub(crate) columns: Vec<Column>,
    pub(crate) raw_labels: Vec<String>,
    pub(crate) order_key: Vec<u64>,
    pub(crate) classes: Option<Vec<usize>>,
    pub(crate) class_names: Vec<String>,
}

impl FlowTable {
    pub fn new(columns: Vec<Column>, raw_labels: Vec<String>, order_key: Vec<u64>) -> Result<Self> {
        let n = raw_labels.len();
        let mut seen = BTreeSet::new();
        for c in &columns {
            if c.values.len() != n {
                return Err(Error::dims(format!("column `{}`", c.name), n, c.values.len()));
            }
            if let Some(text) = &c.text {
                if text.len() != n {
                    return Err(Error::dims(format!("text of column `{}`", c.name), n, text.len()));
                }
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
        }
        if order_key.len() != n {
            return Err(Error::dims("order_key", n, order_key.len()));
        }
        if order_key.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse("order_key must be strictly increasing".into()));
        }
        Ok(Self { columns, raw_labels, order_key, classes: None, class_names: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.raw_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw_labels.is_empty()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn raw_labels(&self) -> &[String] {
        &self.raw_labels
    }

    pub fn order_key(&self) -> &[u64] {
        &self.order_key
    }

    /// Coarse class per row, present once labels are mapped.
    pub fn classes(&self) -> Option<&[usize]> {
        self.classes.as_deref()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c.values[i]).collect()
    }

    /// Keeps only the named columns, in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<FlowTable> {
        let mut columns = Vec::with_capacity(names.len());
        for n in names {
            let c = self.column(n).ok_or_else(|| Error::MissingColumn(n.clone()))?;
            columns.push(c.clone());
        }
        Ok(FlowTable { columns, ..self.without_columns() })
    }

    /// Removes the named columns; unknown names are ignored.
    pub fn drop_columns(&self, names: &[String]) -> FlowTable {
        let drop: BTreeSet<&str> = names.iter().map(String::as_str).collect();
        let columns = self.columns.iter().filter(|c| !drop.contains(c.name.as_str())).cloned().collect();
        FlowTable { columns, ..self.without_columns() }
    }

    /// Keeps the rows at `indices` (in that order), reassigning nothing.
    pub fn take_rows(&self, indices: &[usize]) -> FlowTable {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                values: indices.iter().map(|&i| c.values[i]).collect(),
                text: c.text.as_ref().map(|t| indices.iter().map(|&i| t[i].clone()).collect()),
            })
            .collect();
        FlowTable {
            columns,
            raw_labels: indices.iter().map(|&i| self.raw_labels[i].clone()).collect(),
            order_key: indices.iter().map(|&i| self.order_key[i]).collect(),
            classes: self.classes.as_ref().map(|c| indices.iter().map(|&i| c[i]).collect()),
            class_names: self.class_names.clone(),
        }
    }

    fn without_columns(&self) -> FlowTable {
        FlowTable {
            columns: Vec::new(),
            raw_labels: self.raw_labels.clone(),
            order_key: self.order_key.clone(),
            classes: self.classes.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Writes the table back as CSV with the label in `label_column` (last).
    pub fn write_csv(&self, path: &Path, label_column: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        header.push(label_column);
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self
                .columns
                .iter()
                .map(|c| match &c.text {
                    Some(t) => t[i].clone(),
                    None if c.values[i].is_nan() => String::new(),
                    None => format!("{}", c.values[i]),
                })
                .collect();
            rec.push(self.raw_labels[i].clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn parse_cell(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    if cell.is_empty() {
        return None;
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a header-first CSV of flow records.
///
/// Cells that are empty or not finite numbers become missing (NaN); the raw
/// strings of any column that had a non-numeric cell are retained for
/// later label encoding. Rows get `order_key` = file row index.
pub fn load_csv(path: &Path, label_column: &str) -> Result<FlowTable> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingColumn(label_column.to_string()))?;

    let feature_idx: Vec<usize> = (0..header.len()).filter(|&i| i != label_idx).collect();
    let mut columns: Vec<Column> =
        feature_idx.iter().map(|&i| Column::numeric(header[i].clone(), Vec::new())).collect();
    let mut labels = Vec::new();

    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::RaggedRow { row, expected: header.len(), found: record.len() });
        }
        for (col, &src) in columns.iter_mut().zip(&feature_idx) {
            let cell = record[src].trim();
            let value = parse_cell(cell);
            if value.is_none() && !cell.is_empty() && col.text.is_none() {
                // first non-numeric cell: backfill earlier cells from their parsed values
                col.text = Some(
                    col.values
                        .iter()
                        .map(|v| if v.is_nan() { String::new() } else { format!("{v}") })
                        .collect(),
                );
            }
            if let Some(t) = col.text.as_mut() {
                t.push(cell.to_string());
            }
            col.values.push(value.unwrap_or(f64::NAN));
        }
        labels.push(record[label_idx].trim().to_string());
    }
    let order_key = (0..labels.len() as u64).collect();
    FlowTable::new(columns, labels, order_key)
}

/// Concatenates per-scenario tables and orders rows by `time_column`
/// (stable for equal times), then reassigns `order_key` sequentially.
pub fn merge_chronological(tables: &[FlowTable], time_column: &str) -> Result<FlowTable> {
    let first = tables.first().ok_or_else(|| Error::Empty("no tables to merge".into()))?;
    let names = first.column_names();
    let mut all_cols: Vec<Column> = names
        .iter()
        .map(|n| Column::numeric(n.clone(), Vec::new()))
        .collect();
    let mut labels = Vec::new();
    for t in tables {
        let t = t.select_columns(&names)?;
        for (dst, src) in all_cols.iter_mut().zip(&t.columns) {
            let before = dst.values.len();
            if src.text.is_some() || dst.text.is_some() {
                let dt = dst.text.get_or_insert_with(|| {
                    dst.values.iter().map(|v| if v.is_nan() { String::new() } else { format!("{v}") }).collect()
                });
                match &src.text {
                    Some(st) => dt.extend(st.iter().cloned()),
                    None => dt.extend(src.values.iter().map(|v| if v.is_nan() { String::new() } else { format!("{v}") })),
                }
            }
            dst.values.extend_from_slice(&src.values);
            debug_assert_eq!(dst.values.len(), before + t.len());
        }
        labels.extend(t.raw_labels.iter().cloned());
    }
    let n = labels.len();
    let merged = FlowTable::new(all_cols, labels, (0..n as u64).collect())?;
    let time = merged.column(time_column).ok_or_else(|| Error::MissingColumn(time_column.to_string()))?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| time.values[a].total_cmp(&time.values[b]));
    let mut sorted = merged.take_rows(&idx);
    sorted.order_key = (0..n as u64).collect();
    Ok(sorted)
}
