//! Typed columnar datasets with explicit missingness.
//!
//! Categorical cells are stored as the 0-based index of their category in
//! the declared category list; binary cells as `0.0` / `1.0`; numeric cells
//! as their value. Missing cells hold `NaN` and are flagged in the mask.

use std::collections::HashSet;
use std::io::{Read, Write};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Measurement scale of a column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VariableKind {
    BinarySymmetric,
    BinaryAsymmetric,
    Nominal(Vec<String>),
    /// Categories listed from lowest to highest.
    Ordinal(Vec<String>),
    /// Interval or ratio scale.
    Numeric,
}

impl VariableKind {
    pub fn categories(&self) -> Option<&[String]> {
        match self {
            VariableKind::Nominal(c) | VariableKind::Ordinal(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, VariableKind::BinarySymmetric | VariableKind::BinaryAsymmetric)
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, VariableKind::Numeric)
    }

    pub fn tag(&self) -> KindTag {
        match self {
            VariableKind::BinarySymmetric => KindTag::BinarySymmetric,
            VariableKind::BinaryAsymmetric => KindTag::BinaryAsymmetric,
            VariableKind::Nominal(_) => KindTag::Nominal,
            VariableKind::Ordinal(_) => KindTag::Ordinal,
            VariableKind::Numeric => KindTag::Numeric,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if let Some(cats) = self.categories() {
            if cats.len() < 2 {
                return Err(Error::InvalidColumn {
                    column: name.to_string(),
                    reason: "categorical columns need at least 2 declared categories".into(),
                });
            }
            let mut seen = HashSet::new();
            for c in cats {
                if !seen.insert(c.as_str()) {
                    return Err(Error::InvalidColumn {
                        column: name.to_string(),
                        reason: format!("category {c:?} declared twice"),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Column {
    name: String,
    kind: VariableKind,
    values: Vec<f64>,
    missing: Vec<bool>,
    missing_token: String,
}

impl Column {
    /// Builds a column from raw storage, validating every non-missing cell
    /// against `kind`.
    pub fn from_parts(
        name: impl Into<String>,
        kind: VariableKind,
        values: Vec<f64>,
        missing: Vec<bool>,
    ) -> Result<Self> {
        let name = name.into();
        kind.validate(&name)?;
        if values.len() != missing.len() {
            return Err(Error::InvalidColumn {
                column: name,
                reason: "values and missing mask differ in length".into(),
            });
        }
        let mut values = values;
        for (v, &m) in values.iter_mut().zip(&missing) {
            if m {
                *v = f64::NAN;
                continue;
            }
            let ok = match &kind {
                VariableKind::BinarySymmetric | VariableKind::BinaryAsymmetric => {
                    *v == 0.0 || *v == 1.0
                }
                VariableKind::Nominal(c) | VariableKind::Ordinal(c) => {
                    v.fract() == 0.0 && *v >= 0.0 && (*v as usize) < c.len()
                }
                VariableKind::Numeric => v.is_finite(),
            };
            if !ok {
                return Err(Error::InvalidColumn {
                    column: name,
                    reason: format!("cell value {v} does not conform to {:?}", kind.tag()),
                });
            }
        }
        Ok(Self {
            name,
            kind,
            values,
            missing,
            missing_token: String::new(),
        })
    }

    pub fn numeric(name: impl Into<String>, cells: &[Option<f64>]) -> Result<Self> {
        let values = cells.iter().map(|c| c.unwrap_or(f64::NAN)).collect();
        let missing = cells.iter().map(Option::is_none).collect();
        Self::from_parts(name, VariableKind::Numeric, values, missing)
    }

    pub fn binary(name: impl Into<String>, asymmetric: bool, cells: &[Option<u8>]) -> Result<Self> {
        let kind = if asymmetric {
            VariableKind::BinaryAsymmetric
        } else {
            VariableKind::BinarySymmetric
        };
        let values = cells.iter().map(|c| c.map_or(f64::NAN, f64::from)).collect();
        let missing = cells.iter().map(Option::is_none).collect();
        Self::from_parts(name, kind, values, missing)
    }

    /// Nominal column from category labels; `None` marks a missing cell.
    pub fn nominal<S: AsRef<str>>(
        name: impl Into<String>,
        categories: &[S],
        cells: &[Option<&str>],
    ) -> Result<Self> {
        let cats: Vec<String> = categories.iter().map(|c| c.as_ref().to_string()).collect();
        Self::categorical(name.into(), VariableKind::Nominal(cats), cells)
    }

    /// Ordinal column; `categories` is the declared order, lowest first.
    pub fn ordinal<S: AsRef<str>>(
        name: impl Into<String>,
        categories: &[S],
        cells: &[Option<&str>],
    ) -> Result<Self> {
        let cats: Vec<String> = categories.iter().map(|c| c.as_ref().to_string()).collect();
        Self::categorical(name.into(), VariableKind::Ordinal(cats), cells)
    }

    fn categorical(name: String, kind: VariableKind, cells: &[Option<&str>]) -> Result<Self> {
        kind.validate(&name)?;
        let cats = kind.categories().expect("categorical kind");
        let mut values = Vec::with_capacity(cells.len());
        let mut missing = Vec::with_capacity(cells.len());
        for (row, cell) in cells.iter().enumerate() {
            match cell {
                None => {
                    values.push(f64::NAN);
                    missing.push(true);
                }
                Some(label) => {
                    let idx = cats.iter().position(|c| c == label).ok_or_else(|| {
                        Error::UnknownCategory {
                            column: name.clone(),
                            value: label.to_string(),
                            row: row + 1,
                        }
                    })?;
                    values.push(idx as f64);
                    missing.push(false);
                }
            }
        }
        Self::from_parts(name, kind, values, missing)
    }

    pub fn with_missing_token(mut self, token: impl Into<String>) -> Self {
        self.missing_token = token.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &VariableKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn missing_token(&self) -> &str {
        &self.missing_token
    }

    /// Raw storage (`NaN` where missing).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn missing_mask(&self) -> &[bool] {
        &self.missing
    }

    pub fn is_missing(&self, row: usize) -> bool {
        self.missing[row]
    }

    pub fn get(&self, row: usize) -> Option<f64> {
        (!self.missing[row]).then(|| self.values[row])
    }

    /// Category index of a categorical cell.
    pub fn code(&self, row: usize) -> Option<usize> {
        self.get(row).map(|v| v as usize)
    }

    /// Non-missing values in row order.
    pub fn observed(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.missing)
            .filter(|(_, &m)| !m)
            .map(|(&v, _)| v)
    }

    pub fn n_observed(&self) -> usize {
        self.missing.iter().filter(|&&m| !m).count()
    }

    /// Textual form of a cell as it would be written to CSV.
    pub fn render(&self, row: usize) -> String {
        match self.get(row) {
            None => self.missing_token.clone(),
            Some(v) => match &self.kind {
                VariableKind::Nominal(c) | VariableKind::Ordinal(c) => c[v as usize].clone(),
                VariableKind::BinarySymmetric | VariableKind::BinaryAsymmetric => {
                    if v == 1.0 { "1".into() } else { "0".into() }
                }
                VariableKind::Numeric => format!("{v}"),
            },
        }
    }

    pub(crate) fn take_rows(&self, rows: &[usize]) -> Column {
        Column {
            name: self.name.clone(),
            kind: self.kind.clone(),
            values: rows.iter().map(|&r| self.values[r]).collect(),
            missing: rows.iter().map(|&r| self.missing[r]).collect(),
            missing_token: self.missing_token.clone(),
        }
    }

    pub(crate) fn set(&mut self, row: usize, value: Option<f64>) {
        match value {
            Some(v) => {
                self.values[row] = v;
                self.missing[row] = false;
            }
            None => {
                self.values[row] = f64::NAN;
                self.missing[row] = true;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    columns: Vec<Column>,
    n_rows: usize,
    row_ids: Vec<String>,
    id_column: Option<String>,
}

impl Dataset {
    /// Assembles a dataset. Rows are identified by their position unless
    /// [`Dataset::with_row_ids`] is used.
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Column::len);
        let mut names = HashSet::new();
        for c in &columns {
            if !names.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
            if c.len() != n_rows {
                return Err(Error::InvalidColumn {
                    column: c.name.clone(),
                    reason: format!("length {} differs from row count {n_rows}", c.len()),
                });
            }
        }
        if !columns.is_empty() {
            for row in 0..n_rows {
                if columns.iter().all(|c| c.missing[row]) {
                    return Err(Error::AllMissingRow { row: row + 1 });
                }
            }
        }
        Ok(Self {
            columns,
            n_rows,
            row_ids: (0..n_rows).map(|i| i.to_string()).collect(),
            id_column: None,
        })
    }

    /// Attaches stable row identifiers, used for output and for seeded
    /// tie-breaking.
    pub fn with_row_ids(mut self, id_column: impl Into<String>, ids: Vec<String>) -> Result<Self> {
        let id_column = id_column.into();
        if ids.len() != self.n_rows {
            return Err(Error::InvalidColumn {
                column: id_column,
                reason: "row id count differs from row count".into(),
            });
        }
        if self.columns.iter().any(|c| c.name == id_column) {
            return Err(Error::DuplicateColumn(id_column));
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidValue(format!("duplicate row id {id:?}")));
            }
        }
        self.row_ids = ids;
        self.id_column = Some(id_column);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn row_id(&self, row: usize) -> &str {
        &self.row_ids[row]
    }

    pub fn id_column(&self) -> Option<&str> {
        self.id_column.as_deref()
    }

    /// Subset of rows in the given order; row ids travel with the rows.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_rows) {
            return Err(Error::InvalidValue(format!("row {bad} out of range")));
        }
        Ok(Dataset {
            columns: self.columns.iter().map(|c| c.take_rows(rows)).collect(),
            n_rows: rows.len(),
            row_ids: rows.iter().map(|&r| self.row_ids[r].clone()).collect(),
            id_column: self.id_column.clone(),
        })
    }

    /// Replaces the column with the same name.
    pub(crate) fn replace_column(&mut self, column: Column) {
        let idx = self.column_index(column.name()).expect("column exists");
        self.columns[idx] = column;
    }

    pub(crate) fn column_mut(&mut self, idx: usize) -> &mut Column {
        &mut self.columns[idx]
    }

    /// Serializes to CSV (RFC 4180 quoting); the id column, when present,
    /// comes first.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = Vec::with_capacity(self.columns.len() + 1);
        if let Some(id) = &self.id_column {
            header.push(id);
        }
        header.extend(self.columns.iter().map(|c| c.name.as_str()));
        w.write_record(&header)?;
        for row in 0..self.n_rows {
            let mut record: Vec<String> = Vec::with_capacity(header.len());
            if self.id_column.is_some() {
                record.push(self.row_ids[row].clone());
            }
            record.extend(self.columns.iter().map(|c| c.render(row)));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Schema describing this dataset, suitable for reloading its CSV form.
    pub fn schema(&self) -> SchemaSpec {
        let mut columns = IndexMap::new();
        if let Some(id) = &self.id_column {
            columns.insert(
                id.clone(),
                ColumnSpec {
                    kind: KindTag::Id,
                    categories: Vec::new(),
                    missing_token: None,
                },
            );
        }
        for c in &self.columns {
            columns.insert(
                c.name.clone(),
                ColumnSpec {
                    kind: c.kind.tag(),
                    categories: c.kind.categories().map(<[String]>::to_vec).unwrap_or_default(),
                    missing_token: Some(c.missing_token.clone()),
                },
            );
        }
        SchemaSpec { columns }
    }
}

/// Kind names as they appear in schema files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindTag {
    BinarySymmetric,
    BinaryAsymmetric,
    Nominal,
    Ordinal,
    Numeric,
    /// Row identifier; carried through but never used in distances.
    Id,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub kind: KindTag,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing_token: Option<String>,
}

/// Schema file: a JSON object mapping column name to its spec.
///
/// ```json
/// { "sex": {"kind": "nominal", "categories": ["M", "F"]},
///   "age": {"kind": "numeric", "missing_token": "NA"} }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SchemaSpec {
    pub columns: IndexMap<String, ColumnSpec>,
}

impl SchemaSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let schema: SchemaSpec = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let schema: SchemaSpec = serde_json::from_reader(reader)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn validate(&self) -> Result<()> {
        let ids = self.columns.values().filter(|c| c.kind == KindTag::Id).count();
        if ids > 1 {
            return Err(Error::Schema("at most one id column is allowed".into()));
        }
        for (name, spec) in &self.columns {
            let wants_cats = matches!(spec.kind, KindTag::Nominal | KindTag::Ordinal);
            if wants_cats && spec.categories.len() < 2 {
                return Err(Error::Schema(format!(
                    "column {name:?} needs at least 2 categories"
                )));
            }
            if !wants_cats && !spec.categories.is_empty() {
                return Err(Error::Schema(format!(
                    "column {name:?} of kind {:?} cannot declare categories",
                    spec.kind
                )));
            }
        }
        Ok(())
    }

    fn kind_of(spec: &ColumnSpec) -> Option<VariableKind> {
        Some(match spec.kind {
            KindTag::BinarySymmetric => VariableKind::BinarySymmetric,
            KindTag::BinaryAsymmetric => VariableKind::BinaryAsymmetric,
            KindTag::Nominal => VariableKind::Nominal(spec.categories.clone()),
            KindTag::Ordinal => VariableKind::Ordinal(spec.categories.clone()),
            KindTag::Numeric => VariableKind::Numeric,
            KindTag::Id => return None,
        })
    }
}

/// Reads a headed CSV and validates it against `schema`.
pub fn load_dataset<R: Read>(csv_source: R, schema: &SchemaSpec) -> Result<Dataset> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(csv_source);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();

    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
        if !schema.columns.contains_key(h) {
            return Err(Error::Schema(format!("CSV column {h:?} is not in the schema")));
        }
    }
    for name in schema.columns.keys() {
        if !seen.contains(name.as_str()) {
            return Err(Error::Schema(format!("schema column {name:?} is absent from the CSV")));
        }
    }

    struct Builder {
        name: String,
        kind: VariableKind,
        token: String,
        values: Vec<f64>,
        missing: Vec<bool>,
    }

    let mut id_slot: Option<usize> = None;
    let mut builders: Vec<Option<Builder>> = Vec::with_capacity(header.len());
    for (pos, name) in header.iter().enumerate() {
        let spec = &schema.columns[name];
        match SchemaSpec::kind_of(spec) {
            None => {
                id_slot = Some(pos);
                builders.push(None);
            }
            Some(kind) => builders.push(Some(Builder {
                name: name.clone(),
                kind,
                token: spec.missing_token.clone().unwrap_or_default(),
                values: Vec::new(),
                missing: Vec::new(),
            })),
        }
    }

    let mut ids = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        for (pos, field) in record.iter().enumerate() {
            let Some(b) = builders[pos].as_mut() else {
                ids.push(field.to_string());
                continue;
            };
            if field == b.token {
                b.values.push(f64::NAN);
                b.missing.push(true);
                continue;
            }
            let value = match &b.kind {
                VariableKind::Numeric => match field.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => v,
                    _ => {
                        return Err(Error::NotNumeric {
                            column: b.name.clone(),
                            value: field.to_string(),
                            row,
                        })
                    }
                },
                VariableKind::BinarySymmetric | VariableKind::BinaryAsymmetric => {
                    match field.trim() {
                        "0" => 0.0,
                        "1" => 1.0,
                        _ => {
                            return Err(Error::UnknownCategory {
                                column: b.name.clone(),
                                value: field.to_string(),
                                row,
                            })
                        }
                    }
                }
                VariableKind::Nominal(c) | VariableKind::Ordinal(c) => {
                    match c.iter().position(|x| x == field) {
                        Some(i) => i as f64,
                        None => {
                            return Err(Error::UnknownCategory {
                                column: b.name.clone(),
                                value: field.to_string(),
                                row,
                            })
                        }
                    }
                }
            };
            b.values.push(value);
            b.missing.push(false);
        }
    }

    let columns = builders
        .into_iter()
        .flatten()
        .map(|b| {
            Column::from_parts(b.name, b.kind, b.values, b.missing)
                .map(|c| c.with_missing_token(b.token))
        })
        .collect::<Result<Vec<_>>>()?;
    let dataset = Dataset::new(columns)?;
    match id_slot {
        Some(pos) => dataset.with_row_ids(header[pos].clone(), ids),
        None => Ok(dataset),
    }
}

/// How the denominator of the ordinal position transform is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrdinalScale {
    /// `max(o)` is the number of declared categories.
    #[default]
    Declared,
    /// `max(o)` is the highest position observed in the column.
    Observed,
}

/// Maps ordinal positions `o` (1-based) to `(o - 1) / (max(o) - 1)`.
pub fn ordinal_to_ratio(col: &Column, scale: OrdinalScale) -> Result<Column> {
    let VariableKind::Ordinal(cats) = col.kind() else {
        return Err(Error::InvalidColumn {
            column: col.name.clone(),
            reason: "ordinal column required".into(),
        });
    };
    let max_pos = match scale {
        OrdinalScale::Declared => cats.len() as f64,
        OrdinalScale::Observed => {
            col.observed().fold(f64::NEG_INFINITY, f64::max) + 1.0
        }
    };
    if !max_pos.is_finite() {
        return Err(Error::EmptyColumn(col.name.clone()));
    }
    let denom = max_pos - 1.0;
    let values = col
        .values
        .iter()
        .zip(&col.missing)
        .map(|(&code, &m)| {
            if m {
                f64::NAN
            } else if denom > 0.0 {
                code / denom
            } else {
                0.0
            }
        })
        .collect();
    Ok(
        Column::from_parts(col.name.clone(), VariableKind::Numeric, values, col.missing.clone())?
            .with_missing_token(col.missing_token.clone()),
    )
}

/// Midrank of every category code present in `codes` (ties share the mean of
/// the ranks they occupy). Returned as `(midrank per category, counts)`;
/// categories absent from `codes` get the midrank of an empty tie block at
/// their position in the order.
pub(crate) fn category_midranks(codes: impl Iterator<Item = usize>, n_categories: usize) -> (Vec<f64>, Vec<usize>) {
    let mut counts = vec![0usize; n_categories];
    for c in codes {
        counts[c] += 1;
    }
    let mut below = 0usize;
    let mut ranks = Vec::with_capacity(n_categories);
    for &cnt in &counts {
        ranks.push(below as f64 + (cnt as f64 + 1.0) / 2.0);
        below += cnt;
    }
    (ranks, counts)
}

/// Replaces ordinal categories by their midranks among the non-missing cells.
pub fn ordinal_to_midrank(col: &Column) -> Result<Column> {
    let VariableKind::Ordinal(cats) = col.kind() else {
        return Err(Error::InvalidColumn {
            column: col.name.clone(),
            reason: "ordinal column required".into(),
        });
    };
    if col.n_observed() == 0 {
        return Err(Error::EmptyColumn(col.name.clone()));
    }
    let (ranks, _) = category_midranks(col.observed().map(|v| v as usize), cats.len());
    let values = col
        .values
        .iter()
        .zip(&col.missing)
        .map(|(&code, &m)| if m { f64::NAN } else { ranks[code as usize] })
        .collect();
    Ok(
        Column::from_parts(col.name.clone(), VariableKind::Numeric, values, col.missing.clone())?
            .with_missing_token(col.missing_token.clone()),
    )
}

/// One-hot encodes a categorical column into asymmetric binary columns named
/// `<column>_<category>`. Binary columns expand to two dummies (`_0`, `_1`).
pub fn dummy_encode(col: &Column) -> Result<Vec<Column>> {
    let labels: Vec<String> = match col.kind() {
        VariableKind::Nominal(c) | VariableKind::Ordinal(c) => c.clone(),
        VariableKind::BinarySymmetric | VariableKind::BinaryAsymmetric => {
            vec!["0".into(), "1".into()]
        }
        VariableKind::Numeric => {
            return Err(Error::InvalidColumn {
                column: col.name.clone(),
                reason: "cannot dummy-encode a numeric column".into(),
            })
        }
    };
    labels
        .iter()
        .enumerate()
        .map(|(k, label)| {
            let values = col
                .values
                .iter()
                .zip(&col.missing)
                .map(|(&v, &m)| {
                    if m {
                        f64::NAN
                    } else if v as usize == k {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            Column::from_parts(
                format!("{}_{}", col.name, label),
                VariableKind::BinaryAsymmetric,
                values,
                col.missing.clone(),
            )
        })
        .collect()
}
