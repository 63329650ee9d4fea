//! CSV input and output. Every file carries a header row; floats are written
//! with 17 significant digits so that doubles survive a round trip.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use distreg::measures::{make_discrete, DiscreteDistribution, Points};
use distreg::regressor::Dataset;

use crate::error::{CliError, CliResult};

/// Relative deviation from 1 above which input weights are rescaled.
const RESCALE_THRESHOLD: f64 = 1e-9;

/// Numeric table with the source line of every row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<(u64, Vec<f64>)>,
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::input(path, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(CliError::input(path, "missing header row"));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::data(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(CliError::data(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let values = record
            .iter()
            .zip(&header)
            .map(|(field, name)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::data(path, line, format!("column `{name}`: `{field}` is not a finite number"))),
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push((line, values));
    }
    if rows.is_empty() {
        return Err(CliError::input(path, "no data rows"));
    }
    Ok(Table { header, rows })
}

/// Number of leading columns named `{prefix}1, {prefix}2, ...`.
fn prefixed_run(header: &[String], prefix: char, start: usize) -> usize {
    header[start..]
        .iter()
        .enumerate()
        .take_while(|(i, h)| h.strip_prefix(prefix).and_then(|r| r.parse::<usize>().ok()) == Some(i + 1))
        .count()
}

fn expected_header(groups: &[(char, usize)], tail: Option<&str>) -> String {
    let mut cols: Vec<String> =
        groups.iter().flat_map(|&(c, n)| (1..=n).map(move |i| format!("{c}{i}"))).collect();
    cols.extend(tail.map(str::to_owned));
    cols.join(",")
}

/// Reads a distribution file with columns y1..yd,weight. Weights must be
/// nonnegative; a total that differs from 1 is rescaled.
pub fn read_distribution(path: &Path) -> CliResult<DiscreteDistribution> {
    let t = read_table(path)?;
    let d = prefixed_run(&t.header, 'y', 0);
    if d == 0 || d + 1 != t.header.len() || t.header[d] != "weight" {
        return Err(CliError::input(
            path,
            format!("header must be y1..yd,weight (e.g. {}), found {}", expected_header(&[('y', 1)], Some("weight")), t.header.join(",")),
        ));
    }
    let mut coords = Vec::with_capacity(t.rows.len() * d);
    let mut weights = Vec::with_capacity(t.rows.len());
    for (line, row) in &t.rows {
        let w = row[d];
        if w < 0.0 {
            return Err(CliError::data(path, *line, format!("column `weight`: negative weight {w}")));
        }
        coords.extend_from_slice(&row[..d]);
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(CliError::input(path, "weights sum to zero"));
    }
    if (total - 1.0).abs() > RESCALE_THRESHOLD {
        weights.iter_mut().for_each(|w| *w /= total);
    }
    let points = Points::new(coords, d).map_err(|e| CliError::input(path, e.to_string()))?;
    make_discrete(points, weights).map_err(|e| CliError::input(path, e.to_string()))
}

/// Reads a training file with columns x1..xk,y1..yd.
pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let t = read_table(path)?;
    let k = prefixed_run(&t.header, 'x', 0);
    let d = if k > 0 { prefixed_run(&t.header, 'y', k) } else { 0 };
    if k == 0 || d == 0 || k + d != t.header.len() {
        return Err(CliError::input(
            path,
            format!("header must be x1..xk,y1..yd (e.g. {}), found {}", expected_header(&[('x', 1), ('y', 1)], None), t.header.join(",")),
        ));
    }
    let mut cov = Vec::with_capacity(t.rows.len() * k);
    let mut resp = Vec::with_capacity(t.rows.len() * d);
    for (_, row) in &t.rows {
        cov.extend_from_slice(&row[..k]);
        resp.extend_from_slice(&row[k..]);
    }
    let err = |e: distreg::Error| CliError::input(path, e.to_string());
    Dataset::new(Points::new(cov, k).map_err(err)?, Points::new(resp, d).map_err(err)?).map_err(err)
}

/// Reads query points with columns x1..xk.
pub fn read_queries(path: &Path, k: usize) -> CliResult<Points> {
    let t = read_table(path)?;
    if prefixed_run(&t.header, 'x', 0) != k || t.header.len() != k {
        return Err(CliError::input(
            path,
            format!("query header must be {}, found {}", expected_header(&[('x', k)], None), t.header.join(",")),
        ));
    }
    let coords: Vec<f64> = t.rows.iter().flat_map(|(_, r)| r.iter().copied()).collect();
    Points::new(coords, k).map_err(|e| CliError::input(path, e.to_string()))
}

/// 17 significant digits; parses back to the same double.
pub fn fmt_exact(x: f64) -> String {
    format!("{x:.16e}")
}

/// `digits` significant digits in plain or scientific notation, trailing
/// zeros removed.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if (-5..15).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.prec$e}", prec = digits - 1)
    };
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    let (mantissa, exp) = match s.find('e') {
        Some(i) => (&s[..i], &s[i..]),
        None => (s, ""),
    };
    let mantissa =
        if mantissa.contains('.') { mantissa.trim_end_matches('0').trim_end_matches('.') } else { mantissa };
    format!("{mantissa}{exp}")
}

pub fn distribution_header(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("y{i}")).chain(std::iter::once("weight".to_owned())).collect()
}

/// Writes atoms in storage order with columns y1..yd,weight.
pub fn write_distribution<W: Write>(out: W, dist: &DiscreteDistribution) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(distribution_header(dist.dim())).map_err(csv_err)?;
    for (row, &weight) in dist.atoms().rows().zip(dist.weights()) {
        let fields: Vec<String> = row.iter().copied().chain(std::iter::once(weight)).map(fmt_exact).collect();
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(Path::new("<output>"), e))
}

pub fn csv_err(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(Path::new("<output>"), io),
        other => CliError::usage(format!("csv: {other:?}")),
    }
}

/// Opens `path` for writing, or standard output when absent.
pub fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) => Ok(Box::new(std::io::BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?))),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(1.0, 12), "1");
        assert_eq!(fmt_sig(0.5f64.sqrt(), 12), "0.707106781187");
        assert_eq!(fmt_sig(-2.5e-9, 12), "-2.5e-9");
        assert_eq!(fmt_sig(123456.0, 3), "123456");
        assert_eq!(fmt_exact(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
