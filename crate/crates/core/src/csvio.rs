//! Text interchange formats. Lattice files list every grouped-count tuple in
//! lexicographic order; floats print in shortest round-trip form so written
//! files re-ingest without loss. `#` comment lines carry provenance as
//! `key = value` pairs.

use crate::counts::BinnedCounts;
use crate::error::{Error, Result};
use crate::observables::{lattice_coords, GcpEstimate};
use crate::statistics::ComparisonReport;
use std::fmt::Write as _;

/// Ordered provenance header block.
#[derive(Debug, Clone, Default)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn write_comments(&self, out: &mut String) {
        for (k, v) in &self.entries {
            let _ = writeln!(out, "# {k} = {v}");
        }
    }

    /// The header block as `# key = value` lines.
    pub fn comment_block(&self) -> String {
        let mut out = String::new();
        self.write_comments(&mut out);
        out
    }

    fn parse_comment_line(line: &str) -> Option<(String, String)> {
        let body = line.strip_prefix('#')?.trim();
        let (k, v) = body.split_once('=')?;
        Some((k.trim().to_string(), v.trim().to_string()))
    }
}

fn axis_header(d: usize) -> String {
    (1..=d)
        .map(|i| format!("m{i}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn write_gcp_csv(gcp: &GcpEstimate, meta: &Metadata) -> String {
    let mut out = String::new();
    meta.write_comments(&mut out);
    let _ = writeln!(out, "# n_r = {}", gcp.n_r());
    let _ = writeln!(out, "# clamped = {}", gcp.clamped());
    let _ = writeln!(out, "{},value,error", axis_header(gcp.dims().len()));
    for idx in 0..gcp.len() {
        for c in gcp.coords_of(idx) {
            let _ = write!(out, "{c},");
        }
        let _ = writeln!(out, "{},{}", gcp.values()[idx], gcp.errors()[idx]);
    }
    out
}

struct Parsed {
    meta: Metadata,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn parse_csv(text: &str) -> Result<Parsed> {
    let mut meta = Metadata::new();
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some((k, v)) = Metadata::parse_comment_line(line) {
                meta.push(&k, v);
            }
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        match &header {
            None => header = Some(fields),
            Some(_) => rows.push(fields),
        }
    }
    Ok(Parsed {
        meta,
        header: header.ok_or_else(|| Error::CsvFormat("missing header line".into()))?,
        rows,
    })
}

/// Validates a complete lattice in lexicographic order and returns its dims.
fn lattice_dims(coord_rows: &[Vec<usize>]) -> Result<Vec<usize>> {
    if coord_rows.is_empty() {
        return Err(Error::CsvFormat("no lattice rows".into()));
    }
    let d = coord_rows[0].len();
    let dims: Vec<usize> = (0..d)
        .map(|axis| coord_rows.iter().map(|r| r[axis]).max().unwrap() + 1)
        .collect();
    let expected: usize = dims.iter().product();
    if coord_rows.len() != expected {
        return Err(Error::CsvFormat(format!(
            "expected {expected} lattice rows for dims {dims:?}, found {}",
            coord_rows.len()
        )));
    }
    for (idx, row) in coord_rows.iter().enumerate() {
        if *row != lattice_coords(&dims, idx) {
            return Err(Error::CsvFormat(format!(
                "row {idx} out of lexicographic order: {row:?}"
            )));
        }
    }
    Ok(dims)
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::CsvFormat(format!("bad {what}: {s:?}")))
}

pub fn read_gcp_csv(text: &str) -> Result<(GcpEstimate, Metadata)> {
    let parsed = parse_csv(text)?;
    let ncol = parsed.header.len();
    if ncol < 3 || parsed.header[ncol - 2] != "value" || parsed.header[ncol - 1] != "error" {
        return Err(Error::CsvFormat(
            "expected m1,...,md,value,error header".into(),
        ));
    }
    let d = ncol - 2;
    let mut coords = Vec::with_capacity(parsed.rows.len());
    let mut values = Vec::with_capacity(parsed.rows.len());
    let mut errors = Vec::with_capacity(parsed.rows.len());
    for row in &parsed.rows {
        if row.len() != ncol {
            return Err(Error::CsvFormat(format!(
                "row with {} fields, want {ncol}",
                row.len()
            )));
        }
        let cs: Result<Vec<usize>> = row[..d]
            .iter()
            .map(|s| parse_num::<usize>(s, "grouped count"))
            .collect();
        coords.push(cs?);
        values.push(parse_num::<f64>(&row[d], "value")?);
        errors.push(parse_num::<f64>(&row[d + 1], "error")?);
    }
    let dims = lattice_dims(&coords)?;
    let n_r = parsed
        .meta
        .get("n_r")
        .map(|s| parse_num::<usize>(s, "n_r"))
        .transpose()?;
    let clamped = parsed
        .meta
        .get("clamped")
        .map(|s| parse_num::<u64>(s, "clamped"))
        .transpose()?;
    Ok((
        GcpEstimate::new(dims, values, errors, n_r.unwrap_or(0), clamped.unwrap_or(0)),
        parsed.meta,
    ))
}

pub fn write_counts_csv(counts: &BinnedCounts, meta: &Metadata) -> String {
    let mut out = String::new();
    meta.write_comments(&mut out);
    let _ = writeln!(out, "# n_samples = {}", counts.n_samples);
    let _ = writeln!(out, "{},count", axis_header(counts.dims.len()));
    for (idx, &c) in counts.counts.iter().enumerate() {
        for coord in lattice_coords(&counts.dims, idx) {
            let _ = write!(out, "{coord},");
        }
        let _ = writeln!(out, "{c}");
    }
    out
}

pub fn read_counts_csv(text: &str) -> Result<(BinnedCounts, Metadata)> {
    let parsed = parse_csv(text)?;
    let ncol = parsed.header.len();
    if ncol < 2 || parsed.header[ncol - 1] != "count" {
        return Err(Error::CsvFormat("expected m1,...,md,count header".into()));
    }
    let d = ncol - 1;
    let mut coords = Vec::with_capacity(parsed.rows.len());
    let mut counts = Vec::with_capacity(parsed.rows.len());
    for row in &parsed.rows {
        if row.len() != ncol {
            return Err(Error::CsvFormat(format!(
                "row with {} fields, want {ncol}",
                row.len()
            )));
        }
        let cs: Result<Vec<usize>> = row[..d]
            .iter()
            .map(|s| parse_num::<usize>(s, "grouped count"))
            .collect();
        coords.push(cs?);
        counts.push(parse_num::<u64>(&row[d], "count")?);
    }
    let dims = lattice_dims(&coords)?;
    let n_samples = parsed
        .meta
        .get("n_samples")
        .ok_or_else(|| Error::CsvFormat("missing `# n_samples = N` header".into()))
        .and_then(|s| parse_num::<u64>(s, "n_samples"))?;
    Ok((
        BinnedCounts {
            dims,
            counts,
            n_samples,
        },
        parsed.meta,
    ))
}

/// Per-bin comparison rows plus a trailing summary block.
pub fn write_report_csv(report: &ComparisonReport, meta: &Metadata) -> String {
    let mut out = String::new();
    meta.write_comments(&mut out);
    let _ = writeln!(out, "bin,theory,experiment,sigma_T,sigma_E,norm_diff");
    for bin in &report.per_bin {
        let id = bin
            .coords
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(":");
        let _ = writeln!(
            out,
            "{id},{},{},{},{},{}",
            bin.theory,
            bin.experiment,
            bin.theory_error,
            bin.experiment_error,
            bin.normalized_difference
        );
    }
    let _ = writeln!(out, "chi2,k,chi2_over_k,Z");
    let _ = writeln!(
        out,
        "{},{},{},{}",
        report.chi2, report.k, report.chi2_over_k, report.z
    );
    out
}

pub fn write_permtest_csv(
    trials: &[(usize, &ComparisonReport)],
    mean_z: f64,
    meta: &Metadata,
) -> String {
    let mut out = String::new();
    meta.write_comments(&mut out);
    let _ = writeln!(out, "trial,chi2,k,chi2_over_k,Z");
    for (idx, report) in trials {
        let _ = writeln!(
            out,
            "{idx},{},{},{},{}",
            report.chi2, report.k, report.chi2_over_k, report.z
        );
    }
    let _ = writeln!(out, "# mean_z = {mean_z}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::GcpEstimate;

    #[test]
    fn gcp_round_trip_is_lossless() {
        let g = GcpEstimate::new(
            vec![2, 3],
            vec![0.1, 0.2, 0.05, 0.3, 1.0 / 3.0, 0.016666666666666666],
            vec![1e-3, 2e-3, 3e-3, 4e-3, 5e-3, 6e-3],
            16,
            2,
        );
        let mut meta = Metadata::new();
        meta.push("seed", 42u64);
        let text = write_gcp_csv(&g, &meta);
        let (back, meta2) = read_gcp_csv(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(meta2.get("seed"), Some("42"));
        // byte-identical re-serialization
        assert_eq!(write_gcp_csv(&back, &meta), text);
    }

    #[test]
    fn counts_round_trip() {
        let c = BinnedCounts {
            dims: vec![3],
            counts: vec![5, 7, 0],
            n_samples: 12,
        };
        let text = write_counts_csv(&c, &Metadata::new());
        let (back, _) = read_counts_csv(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_incomplete_or_disordered_lattices() {
        let text = "m1,count\n0,1\n2,1\n";
        assert!(read_counts_csv(text).is_err());
        let text = "# n_samples = 2\nm1,count\n1,1\n0,1\n";
        assert!(read_counts_csv(text).is_err());
        let text = "m1,value,error\n";
        assert!(read_gcp_csv(text).is_err());
    }
}
