//! CSV file formats: data ingestion (compositional or raw), group-map side
//! files, and serialization of paths, plot data, and selection reports.
//!
//! All floating-point output goes through [`fmt_f64`] (17 significant
//! digits), so every file round-trips bit for bit and reruns are
//! byte-identical.

use std::path::Path;

use comlasso_core::path::{Kink, KinkEvent, SolutionPath};
use comlasso_core::select::{CvReport, StabilityReport};
use comlasso_core::GroupStructure;

use crate::CliError;

/// Shortest decimal form that parses back to exactly the same f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), source }
}

fn csv_err(path: &Path, source: csv::Error) -> CliError {
    CliError::Csv { path: path.display().to_string(), source }
}

fn data_err(path: &Path, row: usize, msg: String) -> CliError {
    // `row` is the 1-based data row (header excluded), matching what a
    // spreadsheet user sees minus the header line.
    CliError::Data { path: path.display().to_string(), row, msg }
}

// ---------------------------------------------------------------------------
// Data ingestion
// ---------------------------------------------------------------------------

/// Parsed but untransformed data file: header names plus numeric rows.
#[derive(Debug)]
pub struct RawData {
    /// Feature column names (the response column's name is not kept).
    pub names: Vec<String>,
    pub y: Vec<f64>,
    /// Feature rows, one inner vector per sample.
    pub rows: Vec<Vec<f64>>,
}

/// Read a data CSV: header row, first column the response, remaining
/// columns the components/features.
pub fn read_data_csv(path: &Path) -> Result<RawData, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if headers.len() < 3 {
        return Err(CliError::Input(format!(
            "{}: need a response column plus at least two components, found {} columns",
            path.display(),
            headers.len()
        )));
    }
    let names: Vec<String> = headers.iter().skip(1).map(String::from).collect();
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != headers.len() {
            return Err(data_err(
                path,
                r + 1,
                format!("{} fields, header has {}", record.len(), headers.len()),
            ));
        }
        let mut parsed = Vec::with_capacity(record.len());
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                data_err(path, r + 1, format!("column '{}': not a number: '{field}'", &headers[c]))
            })?;
            if !v.is_finite() {
                return Err(data_err(
                    path,
                    r + 1,
                    format!("column '{}': non-finite value", &headers[c]),
                ));
            }
            parsed.push(v);
        }
        y.push(parsed[0]);
        rows.push(parsed[1..].to_vec());
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok(RawData { names, y, rows })
}

/// How feature rows become a design matrix.
#[derive(Debug)]
pub struct IngestOptions {
    /// Skip all compositional handling and use the columns as-is.
    pub raw: bool,
    /// Rescale rows onto the simplex instead of rejecting row-sum errors.
    pub normalize: bool,
    /// Replace `u` with `(u + c) / (1 + p c)` before the log (handles zeros).
    pub pseudocount: Option<f64>,
}

/// Validate compositional rows (nonnegative, summing to one within 1e-6
/// unless normalizing) and apply the log transform; or, in raw mode, pass
/// the features through unchanged. Returns the row-major design matrix.
pub fn build_design(
    rows: &[Vec<f64>],
    opts: &IngestOptions,
    path: &Path,
) -> Result<Vec<f64>, CliError> {
    let p = rows[0].len();
    let mut x = Vec::with_capacity(rows.len() * p);
    if opts.raw {
        for row in rows {
            x.extend_from_slice(row);
        }
        return Ok(x);
    }
    if let Some(c) = opts.pseudocount {
        if !(c > 0.0 && c.is_finite()) {
            return Err(CliError::Input(format!("pseudocount must be positive, got {c}")));
        }
    }
    for (r, row) in rows.iter().enumerate() {
        let mut u = row.clone();
        if let Some(&bad) = u.iter().find(|v| **v < 0.0) {
            return Err(data_err(path, r + 1, format!("negative component {bad}")));
        }
        let sum: f64 = u.iter().sum();
        if sum <= 0.0 {
            return Err(data_err(path, r + 1, "all components are zero".into()));
        }
        if (sum - 1.0).abs() > 1e-6 {
            if !opts.normalize {
                return Err(data_err(
                    path,
                    r + 1,
                    format!("components sum to {sum}, not 1 (pass --normalize to rescale)"),
                ));
            }
            for v in u.iter_mut() {
                *v /= sum;
            }
        }
        if let Some(c) = opts.pseudocount {
            let denom = 1.0 + p as f64 * c;
            for v in u.iter_mut() {
                *v = (*v + c) / denom;
            }
        } else if u.contains(&0.0) {
            return Err(data_err(
                path,
                r + 1,
                "zero component has no logarithm (pass --pseudocount)".into(),
            ));
        }
        x.extend(u.iter().map(|v| v.ln()));
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Group map side file
// ---------------------------------------------------------------------------

/// Read a group map (`column_name,group_label,d_weight`). Rows must list the
/// data file's feature columns in order, and each group's rows must be
/// contiguous.
pub fn read_groups_csv(path: &Path, names: &[String]) -> Result<GroupStructure, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut sizes: Vec<usize> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut d = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != 3 {
            return Err(data_err(path, r + 1, format!("{} fields, need 3", record.len())));
        }
        if r >= names.len() {
            return Err(data_err(path, r + 1, "more rows than feature columns".into()));
        }
        if record[0] != *names[r] {
            return Err(data_err(
                path,
                r + 1,
                format!("column_name '{}' does not match data column '{}'", &record[0], names[r]),
            ));
        }
        let label = record[1].to_string();
        let weight: f64 = record[2]
            .parse()
            .map_err(|_| data_err(path, r + 1, format!("d_weight is not a number: '{}'", &record[2])))?;
        match labels.last() {
            Some(last) if *last == label => *sizes.last_mut().unwrap() += 1,
            _ => {
                if labels.contains(&label) {
                    return Err(data_err(
                        path,
                        r + 1,
                        format!("group '{label}' is not contiguous"),
                    ));
                }
                labels.push(label);
                sizes.push(1);
            }
        }
        d.push(weight);
    }
    if d.len() != names.len() {
        return Err(CliError::Input(format!(
            "{}: {} rows for {} feature columns",
            path.display(),
            d.len(),
            names.len()
        )));
    }
    Ok(GroupStructure::new(&sizes, d)?)
}

/// Write the group map `simulate` hands to `fit` (unit weights).
pub fn write_groups_csv(path: &Path, names: &[String], sizes: &[usize]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["column_name", "group_label", "d_weight"]).map_err(|e| csv_err(path, e))?;
    let mut at = 0;
    for (k, &size) in sizes.iter().enumerate() {
        for _ in 0..size {
            w.write_record([names[at].as_str(), &format!("g{}", k + 1), "1"])
                .map_err(|e| csv_err(path, e))?;
            at += 1;
        }
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Path serialization
// ---------------------------------------------------------------------------

/// Write a fitted path: one row per kink with
/// `kink_index,lambda,event,beta_1..beta_p,mu_1..mu_K` (mu cells are empty
/// for groups whose constraint is not engaged at that kink).
pub fn write_path_csv(path: &Path, sol: &SolutionPath, p: usize, k: usize) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec!["kink_index".to_string(), "lambda".into(), "event".into()];
    header.extend((1..=p).map(|j| format!("beta_{j}")));
    header.extend((1..=k).map(|g| format!("mu_{g}")));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (t, kink) in sol.kinks.iter().enumerate() {
        let mut rec = vec![t.to_string(), fmt_f64(kink.lambda), kink.event.label().to_string()];
        rec.extend(kink.beta.iter().map(|b| fmt_f64(*b)));
        rec.extend(kink.mu.iter().map(|m| m.map(fmt_f64).unwrap_or_default()));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// One row of a path file read back for verification.
#[derive(Debug)]
pub struct PathRow {
    pub index: usize,
    pub lambda: f64,
    pub event: String,
    pub beta: Vec<f64>,
    pub mu: Vec<Option<f64>>,
}

/// Read a path file written by [`write_path_csv`]; the beta/mu column counts
/// come from the header.
pub fn read_path_csv(path: &Path) -> Result<Vec<PathRow>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let p = headers.iter().filter(|h| h.starts_with("beta_")).count();
    let k = headers.iter().filter(|h| h.starts_with("mu_")).count();
    if p == 0 || headers.len() != 3 + p + k {
        return Err(CliError::Input(format!(
            "{}: not a path file (header must be kink_index,lambda,event,beta_*,mu_*)",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != headers.len() {
            return Err(data_err(path, r + 1, "field count does not match header".into()));
        }
        let num = |c: usize| -> Result<f64, CliError> {
            record[c]
                .parse()
                .map_err(|_| data_err(path, r + 1, format!("'{}': not a number", &record[c])))
        };
        let index: usize = record[0]
            .parse()
            .map_err(|_| data_err(path, r + 1, format!("bad kink_index '{}'", &record[0])))?;
        let lambda = num(1)?;
        let event = record[2].to_string();
        let beta = (0..p).map(|j| num(3 + j)).collect::<Result<Vec<f64>, _>>()?;
        let mu = (0..k)
            .map(|g| {
                let c = 3 + p + g;
                if record[c].is_empty() { Ok(None) } else { num(c).map(Some) }
            })
            .collect::<Result<Vec<Option<f64>>, CliError>>()?;
        rows.push(PathRow { index, lambda, event, beta, mu });
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: path file has no kinks", path.display())));
    }
    Ok(rows)
}

/// Rebuild an interpolatable path from file rows. Event payloads are not
/// serialized, so each kink gets a placeholder event; `beta_at` only looks
/// at lambdas and coefficients, which is all verification needs.
pub fn path_from_rows(rows: &[PathRow]) -> SolutionPath {
    SolutionPath {
        lambda_max: rows[0].lambda,
        kinks: rows
            .iter()
            .map(|r| Kink {
                lambda: r.lambda,
                beta: r.beta.clone(),
                mu: r.mu.clone(),
                event: KinkEvent::Init,
            })
            .collect(),
        status: comlasso_core::path::PathStatus::Completed,
        notes: Vec::new(),
    }
}

/// Write plot coordinates: for every kink and coefficient one row
/// `coefficient,l1_fraction,beta`, where l1_fraction is
/// `||beta(lambda)||_1 / ||beta(terminal)||_1` (0 when the terminal
/// solution is all zeros).
pub fn write_plot_csv(path: &Path, sol: &SolutionPath, names: &[String]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["coefficient", "l1_fraction", "beta"]).map_err(|e| csv_err(path, e))?;
    let denom: f64 = sol
        .terminal()
        .map(|k| k.beta.iter().map(|b| b.abs()).sum())
        .unwrap_or(0.0);
    for kink in &sol.kinks {
        let l1: f64 = kink.beta.iter().map(|b| b.abs()).sum();
        let frac = if denom > 0.0 { l1 / denom } else { 0.0 };
        for (name, b) in names.iter().zip(&kink.beta) {
            w.write_record([name.as_str(), &fmt_f64(frac), &fmt_f64(*b)])
                .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Reports and synthetic data
// ---------------------------------------------------------------------------

/// Cross-validation table: `lambda,score,chosen`.
pub fn write_cv_csv(path: &Path, report: &CvReport) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["lambda", "score", "chosen"]).map_err(|e| csv_err(path, e))?;
    for (t, (lam, score)) in report.lambdas.iter().zip(&report.scores).enumerate() {
        let mark = if t == report.chosen { "1" } else { "0" };
        w.write_record([&fmt_f64(*lam), &fmt_f64(*score), mark]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Stability table: `column_name,probability` in data-column order.
pub fn write_stability_csv(
    path: &Path,
    names: &[String],
    report: &StabilityReport,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["column_name", "probability"]).map_err(|e| csv_err(path, e))?;
    for (name, prob) in names.iter().zip(&report.probability) {
        w.write_record([name.as_str(), &fmt_f64(*prob)]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Synthetic data file in the same shape `read_data_csv` expects:
/// `response,<component names>` with simplex rows.
pub fn write_data_csv(
    path: &Path,
    names: &[String],
    y: &[f64],
    comps: &[f64],
) -> Result<(), CliError> {
    let p = names.len();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec!["response".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (i, yi) in y.iter().enumerate() {
        let mut rec = vec![fmt_f64(*yi)];
        rec.extend(comps[i * p..(i + 1) * p].iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// True-coefficient side file: `column_name,beta_true`.
pub fn write_truth_csv(path: &Path, names: &[String], beta: &[f64]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["column_name", "beta_true"]).map_err(|e| csv_err(path, e))?;
    for (name, b) in names.iter().zip(beta) {
        w.write_record([name.as_str(), &fmt_f64(*b)]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use comlasso_core::path::PathStatus;
    use std::io::Write as _;

    fn tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_simple_data_file() {
        let f = tmp("y,a,b,c\n1.5,0.2,0.3,0.5\n-0.5,0.25,0.25,0.5\n");
        let raw = read_data_csv(f.path()).unwrap();
        assert_eq!(raw.names, ["a", "b", "c"]);
        assert_eq!(raw.y, [1.5, -0.5]);
        assert_eq!(raw.rows[1], [0.25, 0.25, 0.5]);
    }

    #[test]
    fn rejects_bad_rows_with_diagnostics() {
        let f = tmp("y,a,b,c\n1,0.2,0.3,0.5\n2,0.2,oops,0.5\n");
        let err = read_data_csv(f.path()).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains('b'), "{err}");
    }

    #[test]
    fn compositional_checks_fire_in_order() {
        let no = IngestOptions { raw: false, normalize: false, pseudocount: None };
        // Row sum off by more than 1e-6 without --normalize.
        let rows = vec![vec![0.2, 0.3, 0.4]];
        let err = build_design(&rows, &no, Path::new("t")).unwrap_err().to_string();
        assert!(err.contains("sum"), "{err}");
        // Same row accepted with normalize, and the log matches by hand.
        let yes = IngestOptions { raw: false, normalize: true, pseudocount: None };
        let x = build_design(&rows, &yes, Path::new("t")).unwrap();
        assert!((x[0] - (0.2f64 / 0.9).ln()).abs() < 1e-15);
        // Zero component without a pseudocount.
        let rows = vec![vec![0.5, 0.5, 0.0]];
        let err = build_design(&rows, &no, Path::new("t")).unwrap_err().to_string();
        assert!(err.contains("pseudocount"), "{err}");
        // Negative component is rejected even with normalize.
        let rows = vec![vec![1.2, -0.2, 0.0]];
        let err = build_design(&rows, &yes, Path::new("t")).unwrap_err().to_string();
        assert!(err.contains("negative"), "{err}");
    }

    #[test]
    fn pseudocount_keeps_rows_on_the_simplex() {
        let opts = IngestOptions { raw: false, normalize: false, pseudocount: Some(0.01) };
        let rows = vec![vec![0.7, 0.3, 0.0]];
        let x = build_design(&rows, &opts, Path::new("t")).unwrap();
        let total: f64 = x.iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12, "exp rows should still sum to 1, got {total}");
    }

    #[test]
    fn log_transform_inverts_through_softmax() {
        let opts = IngestOptions { raw: false, normalize: false, pseudocount: None };
        let rows = vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.15, 0.25]];
        let x = build_design(&rows, &opts, Path::new("t")).unwrap();
        for (i, row) in rows.iter().enumerate() {
            let denom: f64 = x[i * 3..i * 3 + 3].iter().map(|v| v.exp()).sum();
            for j in 0..3 {
                assert!((x[i * 3 + j].exp() / denom - row[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn group_map_round_trips_and_rejects_gaps() {
        let names: Vec<String> = ["a", "b", "c", "d"].map(String::from).to_vec();
        let f = tmp("column_name,group_label,d_weight\na,g1,1\nb,g1,1\nc,g2,2\nd,g2,-1\n");
        let g = read_groups_csv(f.path(), &names).unwrap();
        assert_eq!(g.sizes(), [2, 2]);
        assert_eq!(g.d(), [1.0, 1.0, 2.0, -1.0]);

        let f = tmp("column_name,group_label,d_weight\na,g1,1\nb,g2,1\nc,g1,1\nd,g2,1\n");
        let err = read_groups_csv(f.path(), &names).unwrap_err().to_string();
        assert!(err.contains("contiguous"), "{err}");

        let f = tmp("column_name,group_label,d_weight\nWRONG,g1,1\nb,g1,1\nc,g1,1\nd,g1,1\n");
        let err = read_groups_csv(f.path(), &names).unwrap_err().to_string();
        assert!(err.contains("does not match"), "{err}");
    }

    #[test]
    fn path_file_round_trips_exactly() {
        let sol = SolutionPath {
            lambda_max: 1.5,
            kinks: vec![
                Kink {
                    lambda: 1.5,
                    beta: vec![0.0, 0.0, 0.0],
                    mu: vec![Some(0.5)],
                    event: KinkEvent::Init,
                },
                Kink {
                    lambda: 1.0 / 3.0,
                    beta: vec![2.0 / 3.0, 0.0, -2.0 / 3.0],
                    mu: vec![None],
                    event: KinkEvent::Terminate,
                },
            ],
            status: PathStatus::Completed,
            notes: vec![],
        };
        let f = tempfile::NamedTempFile::new().unwrap();
        write_path_csv(f.path(), &sol, 3, 1).unwrap();
        let rows = read_path_csv(f.path()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].event, "init");
        assert_eq!(rows[0].mu, [Some(0.5)]);
        assert_eq!(rows[1].lambda, 1.0 / 3.0, "17 digits must round-trip bit for bit");
        assert_eq!(rows[1].beta, [2.0 / 3.0, 0.0, -2.0 / 3.0]);
        assert_eq!(rows[1].mu, [None]);

        let back = path_from_rows(&rows);
        let mid = back.beta_at(0.5 * (1.5 + 1.0 / 3.0)).unwrap();
        assert!((mid[0] - 1.0 / 3.0).abs() < 1e-15, "interpolation midpoint");
    }

    #[test]
    fn plot_file_emits_one_row_per_kink_and_coefficient() {
        let sol = SolutionPath {
            lambda_max: 1.0,
            kinks: vec![
                Kink {
                    lambda: 1.0,
                    beta: vec![0.0, 0.0],
                    mu: vec![None],
                    event: KinkEvent::Init,
                },
                Kink {
                    lambda: 0.0,
                    beta: vec![1.0, -1.0],
                    mu: vec![None],
                    event: KinkEvent::Terminate,
                },
            ],
            status: PathStatus::Completed,
            notes: vec![],
        };
        let names: Vec<String> = ["a", "b"].map(String::from).to_vec();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_plot_csv(f.path(), &sol, &names).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 4, "header + 2 kinks x 2 coefficients");
        assert!(lines[1].starts_with("a,0"));
        assert!(lines[4].contains("1.0000000000000000e0,-1"));
    }
}
