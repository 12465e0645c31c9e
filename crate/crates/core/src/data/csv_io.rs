use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Dataset, Group, GroupLabels};
use crate::error::{Error, Result};

/// Column roles for [`load_csv`]. Every column not named here becomes a
/// numeric feature.
#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub outcome_column: String,
    pub group_column: Option<String>,
    /// Column holding opaque row identifiers. Without one, rows are numbered from 1.
    pub id_column: Option<String>,
}

impl LoadOptions {
    pub fn new(outcome_column: impl Into<String>) -> Self {
        LoadOptions {
            outcome_column: outcome_column.into(),
            group_column: None,
            id_column: None,
        }
    }

    pub fn group_column(mut self, name: impl Into<String>) -> Self {
        self.group_column = Some(name.into());
        self
    }

    pub fn id_column(mut self, name: impl Into<String>) -> Self {
        self.id_column = Some(name.into());
        self
    }
}

pub fn load_csv(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<(Dataset, Option<GroupLabels>)> {
    read_csv(File::open(path)?, opts)
}

pub fn read_csv<R: Read>(reader: R, opts: &LoadOptions) -> Result<(Dataset, Option<GroupLabels>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();

    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let outcome_idx = find(&opts.outcome_column)?;
    let group_idx = opts.group_column.as_deref().map(find).transpose()?;
    let id_idx = opts.id_column.as_deref().map(find).transpose()?;

    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|&i| i != outcome_idx && Some(i) != group_idx && Some(i) != id_idx)
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); feature_idx.len()];
    let mut outcome = Vec::new();
    let mut groups = Vec::new();
    let mut row_ids = Vec::new();

    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let cell = |i: usize| -> Result<&str> {
            let v = record.get(i).unwrap_or("");
            if v.is_empty() {
                return Err(Error::Cell {
                    row,
                    column: header[i].clone(),
                    message: "missing value".into(),
                });
            }
            Ok(v)
        };

        let y = cell(outcome_idx)?;
        outcome.push(match y.parse::<f64>() {
            Ok(v) if v == 0.0 => 0,
            Ok(v) if v == 1.0 => 1,
            _ => {
                return Err(Error::Cell {
                    row,
                    column: header[outcome_idx].clone(),
                    message: format!("outcome must be 0 or 1, found `{y}`"),
                })
            }
        });

        if let Some(gi) = group_idx {
            let g = cell(gi)?;
            groups.push(Group::parse(g).ok_or_else(|| Error::Cell {
                row,
                column: header[gi].clone(),
                message: format!("group must be `protected` or `control`, found `{g}`"),
            })?);
        }

        row_ids.push(match id_idx {
            Some(ii) => cell(ii)?.to_string(),
            None => row.to_string(),
        });

        for (col, &fi) in columns.iter_mut().zip(&feature_idx) {
            let v = cell(fi)?;
            let parsed = v.parse::<f64>().ok().filter(|x| x.is_finite());
            col.push(parsed.ok_or_else(|| Error::Cell {
                row,
                column: header[fi].clone(),
                message: format!("non-numeric feature value `{v}`"),
            })?);
        }
    }

    if outcome.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let names = feature_idx.iter().map(|&i| header[i].clone()).collect();
    let dataset = Dataset::new(names, columns, outcome, row_ids)?;
    let labels = match group_idx {
        Some(_) => Some(GroupLabels::for_dataset(&dataset, groups)?),
        None => None,
    };
    Ok((dataset, labels))
}

/// Writes `id_column, features..., outcome_column[, group_column]`.
///
/// Values use the shortest decimal form that parses back to the same `f64`,
/// so a reload reproduces the dataset exactly.
pub fn write_csv<W: Write>(
    writer: W,
    dataset: &Dataset,
    groups: Option<&GroupLabels>,
    opts: &LoadOptions,
) -> Result<()> {
    if let Some(g) = groups {
        g.check_linked(dataset)?;
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = Vec::new();
    if let Some(id) = &opts.id_column {
        header.push(id.as_str());
    }
    header.extend(dataset.feature_names().iter().map(String::as_str));
    header.push(&opts.outcome_column);
    if groups.is_some() {
        header.push(opts.group_column.as_deref().unwrap_or("group"));
    }
    w.write_record(&header)?;

    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for r in 0..dataset.n_rows() {
        record.clear();
        if opts.id_column.is_some() {
            record.push(dataset.row_ids()[r].clone());
        }
        for j in 0..dataset.n_features() {
            record.push(dataset.column_at(j)[r].to_string());
        }
        record.push(dataset.outcome()[r].to_string());
        if let Some(g) = groups {
            record.push(g.as_slice()[r].as_str().to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
