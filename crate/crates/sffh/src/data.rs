//! Survey data structures, CSV ingestion, and the outcome transform.
//!
//! The survey file fixes the area ordering; every other input (adjacency,
//! functional covariates) is reindexed to it so that columns can never be
//! silently misaligned. All types are immutable after construction.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Per-area direct estimates with known sampling variances.
#[derive(Debug, Clone)]
pub struct SurveyDataset {
    area_ids: Vec<String>,
    y: DVector<f64>,
    sigma2: DVector<f64>,
    scalar_names: Vec<String>,
    scalar_covariates: Option<DMatrix<f64>>,
}

impl SurveyDataset {
    /// Build a validated dataset. Requires n >= 2 areas, unique ids, and
    /// strictly positive finite sampling variances.
    pub fn new(
        area_ids: Vec<String>,
        y: DVector<f64>,
        sigma2: DVector<f64>,
        scalar: Option<(Vec<String>, DMatrix<f64>)>,
    ) -> Result<Self> {
        let n = area_ids.len();
        if n < 2 {
            return Err(Error::validation(format!("need at least 2 areas, got {n}")));
        }
        if y.len() != n || sigma2.len() != n {
            return Err(Error::validation(format!(
                "length mismatch: {n} areas, {} direct estimates, {} variances",
                y.len(),
                sigma2.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in &area_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::validation(format!("duplicate area id '{id}'")));
            }
        }
        for (i, &v) in sigma2.iter().enumerate() {
            if !crate::stats::is_positive(v) {
                return Err(Error::validation(format!(
                    "sampling variance for area '{}' must be positive and finite, got {v}",
                    area_ids[i]
                )));
            }
        }
        for (i, &v) in y.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::validation(format!(
                    "direct estimate for area '{}' is not finite",
                    area_ids[i]
                )));
            }
        }
        let (scalar_names, scalar_covariates) = match scalar {
            Some((names, x)) => {
                if x.nrows() != n || x.ncols() != names.len() {
                    return Err(Error::validation(format!(
                        "scalar covariate matrix is {}x{}, expected {}x{}",
                        x.nrows(),
                        x.ncols(),
                        n,
                        names.len()
                    )));
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::validation(
                        "scalar covariates contain a non-finite value".to_string(),
                    ));
                }
                (names, Some(x))
            }
            None => (Vec::new(), None),
        };
        Ok(SurveyDataset {
            area_ids,
            y,
            sigma2,
            scalar_names,
            scalar_covariates,
        })
    }

    pub fn n(&self) -> usize {
        self.area_ids.len()
    }

    pub fn area_ids(&self) -> &[String] {
        &self.area_ids
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn sigma2(&self) -> &DVector<f64> {
        &self.sigma2
    }

    pub fn scalar_names(&self) -> &[String] {
        &self.scalar_names
    }

    pub fn scalar_covariates(&self) -> Option<&DMatrix<f64>> {
        self.scalar_covariates.as_ref()
    }

    /// Same dataset with the direct estimates replaced (used by the outcome
    /// transform and by synthetic data generation).
    pub fn with_y(&self, y: DVector<f64>) -> Result<Self> {
        SurveyDataset::new(
            self.area_ids.clone(),
            y,
            self.sigma2.clone(),
            self.scalar_covariates
                .as_ref()
                .map(|x| (self.scalar_names.clone(), x.clone())),
        )
    }

    pub fn index_of(&self, area_id: &str) -> Option<usize> {
        self.area_ids.iter().position(|a| a == area_id)
    }
}

/// Outcome observed in two periods, before the relative-change transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawOutcomePair {
    pub value_start: f64,
    pub value_end: f64,
}

/// Relative change (end - start) / start.
///
/// Errors when `value_start` is not strictly positive (division guard).
pub fn relative_change(p: &RawOutcomePair) -> Result<f64> {
    if !crate::stats::is_positive(p.value_start) {
        return Err(Error::validation(format!(
            "relative change requires value_start > 0, got {}",
            p.value_start
        )));
    }
    Ok((p.value_end - p.value_start) / p.value_start)
}

/// A set of functional covariates observed on a common time grid.
///
/// Each series is a T x n matrix whose column i is the curve for area i,
/// in the survey file's area order.
#[derive(Debug, Clone)]
pub struct FunctionalCovariateSet {
    names: Vec<String>,
    series: Vec<DMatrix<f64>>,
    time_points: Vec<f64>,
}

impl FunctionalCovariateSet {
    pub fn new(
        names: Vec<String>,
        series: Vec<DMatrix<f64>>,
        time_points: Vec<f64>,
    ) -> Result<Self> {
        if names.is_empty() || names.len() != series.len() {
            return Err(Error::validation(format!(
                "{} covariate names for {} series",
                names.len(),
                series.len()
            )));
        }
        let t = time_points.len();
        if t < 2 {
            return Err(Error::validation(format!(
                "need at least 2 time points, got {t}"
            )));
        }
        if time_points
            .windows(2)
            .any(|w| w[1] <= w[0] || w[1].is_nan())
        {
            return Err(Error::validation(
                "time points must be strictly increasing".to_string(),
            ));
        }
        let n = series[0].ncols();
        for (name, z) in names.iter().zip(&series) {
            if z.nrows() != t || z.ncols() != n {
                return Err(Error::validation(format!(
                    "covariate '{name}' is {}x{}, expected {t}x{n}",
                    z.nrows(),
                    z.ncols()
                )));
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!(
                    "covariate '{name}' contains a non-finite value"
                )));
            }
        }
        Ok(FunctionalCovariateSet {
            names,
            series,
            time_points,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn series(&self, j: usize) -> &DMatrix<f64> {
        &self.series[j]
    }

    pub fn series_by_name(&self, name: &str) -> Option<&DMatrix<f64>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| &self.series[j])
    }

    pub fn time_points(&self) -> &[f64] {
        &self.time_points
    }

    pub fn n_covariates(&self) -> usize {
        self.names.len()
    }

    pub fn n_times(&self) -> usize {
        self.time_points.len()
    }

    pub fn n_areas(&self) -> usize {
        self.series[0].ncols()
    }
}

/// Standardize every curve to within-curve mean 0 and sample sd 1.
///
/// Returns a new set; the input is untouched. A constant curve has no
/// scale and is rejected, naming the offending area and covariate.
pub fn standardize_curves(
    set: &FunctionalCovariateSet,
    area_ids: &[String],
) -> Result<FunctionalCovariateSet> {
    let t = set.n_times();
    let mut out = Vec::with_capacity(set.names.len());
    for (name, z) in set.names.iter().zip(&set.series) {
        let mut zs = z.clone();
        for i in 0..zs.ncols() {
            let mut col = zs.column_mut(i);
            let m = col.iter().sum::<f64>() / t as f64;
            let var = col.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / (t as f64 - 1.0);
            if !crate::stats::is_positive(var) {
                let area = area_ids.get(i).map(String::as_str).unwrap_or("?");
                return Err(Error::validation(format!(
                    "curve for area '{area}' in covariate '{name}' is constant; cannot standardize"
                )));
            }
            let sd = var.sqrt();
            for v in col.iter_mut() {
                *v = (*v - m) / sd;
            }
        }
        out.push(zs);
    }
    FunctionalCovariateSet::new(set.names.clone(), out, set.time_points.clone())
}

fn parse_cell(raw: &str, what: &str, file: &Path, row: usize) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| {
        Error::validation(format!(
            "non-numeric value '{raw}' for {what} in {} row {row}",
            file.display()
        ))
    })
}

/// Load a survey file with header `area_id,y,sigma2[,x1,...,xq]`.
pub fn load_survey_csv(path: impl AsRef<Path>) -> Result<SurveyDataset> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() < 3
        || &headers[0] != "area_id"
        || &headers[1] != "y"
        || &headers[2] != "sigma2"
    {
        return Err(Error::validation(format!(
            "{}: expected header starting with area_id,y,sigma2",
            path.display()
        )));
    }
    let scalar_names: Vec<String> = headers.iter().skip(3).map(str::to_string).collect();
    let q = scalar_names.len();

    let mut ids = Vec::new();
    let mut y = Vec::new();
    let mut sigma2 = Vec::new();
    let mut x_rows: Vec<f64> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let row = idx + 2; // 1-based, after header
        if record.len() != 3 + q {
            return Err(Error::validation(format!(
                "{} row {row}: expected {} fields, got {}",
                path.display(),
                3 + q,
                record.len()
            )));
        }
        let id = record[0].trim().to_string();
        y.push(parse_cell(
            &record[1],
            &format!("area '{id}' column y"),
            path,
            row,
        )?);
        sigma2.push(parse_cell(
            &record[2],
            &format!("area '{id}' column sigma2"),
            path,
            row,
        )?);
        for (c, name) in scalar_names.iter().enumerate() {
            x_rows.push(parse_cell(
                &record[3 + c],
                &format!("area '{id}' column {name}"),
                path,
                row,
            )?);
        }
        ids.push(id);
    }
    if ids.is_empty() {
        return Err(Error::validation(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let n = ids.len();
    let scalar = if q > 0 {
        Some((scalar_names, DMatrix::from_row_slice(n, q, &x_rows)))
    } else {
        None
    };
    SurveyDataset::new(ids, DVector::from_vec(y), DVector::from_vec(sigma2), scalar)
}

/// Write a survey dataset in the `areas.csv` format.
pub fn save_survey_csv(path: impl AsRef<Path>, data: &SurveyDataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["area_id".to_string(), "y".to_string(), "sigma2".to_string()];
    header.extend(data.scalar_names().iter().cloned());
    wtr.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec = vec![
            data.area_ids()[i].clone(),
            format!("{}", data.y()[i]),
            format!("{}", data.sigma2()[i]),
        ];
        if let Some(x) = data.scalar_covariates() {
            for c in 0..x.ncols() {
                rec.push(format!("{}", x[(i, c)]));
            }
        }
        wtr.write_record(&rec)?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::validation(format!("csv flush: {e}")))?;
    crate::cli::atomic_write(path.as_ref(), &bytes)
}

/// Load functional covariate files with header `t,<area_id>,...`.
///
/// Column order per file may be any permutation of the survey's areas;
/// columns are reindexed to the survey order. The covariate name is the
/// file stem, minus a `covariate_` prefix when present.
pub fn load_functional_csv(
    paths: &[impl AsRef<Path>],
    area_ids: &[String],
) -> Result<FunctionalCovariateSet> {
    if paths.is_empty() {
        return Err(Error::validation("no covariate files given".to_string()));
    }
    let mut names = Vec::new();
    let mut series = Vec::new();
    let mut grid: Option<Vec<f64>> = None;
    for p in paths {
        let path = p.as_ref();
        let name = covariate_name_from_path(path);
        let (times, z) = load_one_functional(path, area_ids)?;
        match &grid {
            None => grid = Some(times),
            Some(g) => {
                if *g != times {
                    return Err(Error::validation(format!(
                        "{}: time grid differs from the first covariate file",
                        path.display()
                    )));
                }
            }
        }
        names.push(name);
        series.push(z);
    }
    FunctionalCovariateSet::new(names, series, grid.unwrap())
}

pub(crate) fn covariate_name_from_path(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "covariate".to_string());
    stem.strip_prefix("covariate_").unwrap_or(&stem).to_string()
}

fn load_one_functional(path: &Path, area_ids: &[String]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || &headers[0] != "t" {
        return Err(Error::validation(format!(
            "{}: expected header starting with t",
            path.display()
        )));
    }
    let file_areas: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut seen = HashSet::new();
    for id in &file_areas {
        if !seen.insert(id.as_str()) {
            return Err(Error::validation(format!(
                "{}: duplicate area id '{id}'",
                path.display()
            )));
        }
    }
    // column i of the output = survey area i; permutation from the file order
    let mut source_col = Vec::with_capacity(area_ids.len());
    for id in area_ids {
        match file_areas.iter().position(|a| a == id) {
            Some(c) => source_col.push(c),
            None => {
                return Err(Error::validation(format!(
                    "{}: missing area '{id}'",
                    path.display()
                )))
            }
        }
    }
    for id in &file_areas {
        if !area_ids.contains(id) {
            return Err(Error::validation(format!(
                "{}: unknown area '{id}' not present in the survey file",
                path.display()
            )));
        }
    }

    let mut times = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let row = idx + 2;
        if record.len() != 1 + file_areas.len() {
            return Err(Error::validation(format!(
                "{} row {row}: expected {} fields, got {}",
                path.display(),
                1 + file_areas.len(),
                record.len()
            )));
        }
        times.push(parse_cell(&record[0], "column t", path, row)?);
        let mut vals = Vec::with_capacity(file_areas.len());
        for (c, id) in file_areas.iter().enumerate() {
            vals.push(parse_cell(
                &record[1 + c],
                &format!("area '{id}'"),
                path,
                row,
            )?);
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::validation(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let t = rows.len();
    let n = area_ids.len();
    let z = DMatrix::from_fn(t, n, |r, i| rows[r][source_col[i]]);
    Ok((times, z))
}

/// Write one functional covariate in the `covariate_<name>.csv` format.
pub fn save_functional_csv(
    path: impl AsRef<Path>,
    set: &FunctionalCovariateSet,
    j: usize,
    area_ids: &[String],
) -> Result<()> {
    let z = set.series(j);
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend(area_ids.iter().cloned());
    wtr.write_record(&header)?;
    for (r, tp) in set.time_points().iter().enumerate() {
        let mut rec = vec![format!("{tp}")];
        for i in 0..z.ncols() {
            rec.push(format!("{}", z[(r, i)]));
        }
        wtr.write_record(&rec)?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::validation(format!("csv flush: {e}")))?;
    crate::cli::atomic_write(path.as_ref(), &bytes)
}

/// Load `raw_outcome.csv` (`area_id,value_start,value_end`).
pub fn load_raw_outcome_csv(path: impl AsRef<Path>) -> Result<Vec<(String, RawOutcomePair)>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() != 3
        || &headers[0] != "area_id"
        || &headers[1] != "value_start"
        || &headers[2] != "value_end"
    {
        return Err(Error::validation(format!(
            "{}: expected header area_id,value_start,value_end",
            path.display()
        )));
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let row = idx + 2;
        let id = record[0].trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::validation(format!(
                "{}: duplicate area id '{id}'",
                path.display()
            )));
        }
        let start = parse_cell(&record[1], &format!("area '{id}' value_start"), path, row)?;
        let end = parse_cell(&record[2], &format!("area '{id}' value_end"), path, row)?;
        for (what, v) in [("value_start", start), ("value_end", end)] {
            if !(0.0..=100.0).contains(&v) {
                return Err(Error::validation(format!(
                    "{}: {what} for area '{id}' must be a percent in [0, 100], got {v}",
                    path.display()
                )));
            }
        }
        out.push((
            id,
            RawOutcomePair {
                value_start: start,
                value_end: end,
            },
        ));
    }
    if out.is_empty() {
        return Err(Error::validation(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok(out)
}

/// Replace the survey outcomes by the relative change computed from raw
/// two-period values. Every survey area must appear exactly once.
pub fn apply_outcome_transform(
    data: &SurveyDataset,
    raw: &[(String, RawOutcomePair)],
) -> Result<SurveyDataset> {
    let mut y = DVector::zeros(data.n());
    for (id, pair) in raw {
        match data.index_of(id) {
            Some(i) => {
                y[i] = relative_change(pair)
                    .map_err(|e| Error::validation(format!("area '{id}': {e}")))?;
            }
            None => {
                return Err(Error::validation(format!(
                    "raw outcome area '{id}' not present in the survey file"
                )))
            }
        }
    }
    if raw.len() != data.n() {
        let have: HashSet<&str> = raw.iter().map(|(id, _)| id.as_str()).collect();
        let missing: Vec<&str> = data
            .area_ids()
            .iter()
            .map(String::as_str)
            .filter(|id| !have.contains(id))
            .collect();
        return Err(Error::validation(format!(
            "raw outcome file is missing areas: {}",
            missing.join(", ")
        )));
    }
    data.with_y(y)
}
