//! CSV output. Every file is UTF-8, comma separated, LF terminated, with a
//! header row and values printed to 6 significant digits.

use std::fs::File;
use std::path::{Path, PathBuf};

use super::experiment::{ensure_writable, AggregateReport};
use crate::analytics::{
    expected_collection_time_estimate, expected_disruptions_limit, expected_location_limit,
    harmonic_bound, order_stat_table,
};
use crate::error::{Error, Result};
use crate::model::AttackModel;
use crate::policy::StoppingPolicy;

/// Formats `x` with 6 significant digits, dropping trailing zeros.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-5..6).contains(&exponent) {
        let decimals = (5 - exponent).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.5e}");
        let (mantissa, exp) = s.split_once('e').expect("exponent form");
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{exp}")
    }
}

struct CsvFile {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvFile {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = CsvFile {
            path,
            writer: csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(file),
        };
        out.row(header.iter().copied())?;
        Ok(out)
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let path = &self.path;
        self.writer
            .write_record(fields)
            .map_err(|e| Error::io(path, e.into()))
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

/// Writes table1-4, fig2, fig3, fig5 and summary CSVs into `output_dir`.
/// Returns the paths written, in that order.
pub fn emit_reports(report: &AggregateReport, output_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_writable(output_dir)?;
    let mut written = Vec::new();

    let mut t1 = CsvFile::create(
        output_dir,
        "table1.csv",
        &["policy", "mean_packets", "success_rate"],
    )?;
    for p in &report.policies {
        t1.row([
            p.label.clone(),
            format_sig6(p.mean_packets),
            format_sig6(p.success_rate),
        ])?;
    }
    written.push(t1.finish()?);

    let mut t2 = CsvFile::create(output_dir, "table2.csv", &["subpath_count", "probability"])?;
    for (count, prob) in &report.subpath_count_distribution {
        t2.row([count.to_string(), format_sig6(*prob)])?;
    }
    written.push(t2.finish()?);

    let mut t3 = CsvFile::create(
        output_dir,
        "table3.csv",
        &["policy", "full_path", "strict_full_subpath", "hole"],
    )?;
    for p in report
        .policies
        .iter()
        .filter(|p| matches!(p.policy, StoppingPolicy::FixedPackets { .. }))
    {
        let [full, strict, hole] = p.outcome_frequencies;
        t3.row([
            p.label.clone(),
            format_sig6(full),
            format_sig6(strict),
            format_sig6(hole),
        ])?;
    }
    written.push(t3.finish()?);

    let mut t4 = CsvFile::create(
        output_dir,
        "table4.csv",
        &["length", "prob_returned_basic", "prob_encountered"],
    )?;
    for s in &report.subpath_length_stats {
        t4.row([
            s.length.to_string(),
            format_sig6(s.prob_returned_by_basic),
            format_sig6(s.prob_encountered),
        ])?;
    }
    written.push(t4.finish()?);

    written.extend(write_order_curves(
        &report.model,
        report.location_means.as_deref(),
        report.disruption_means.as_deref(),
        output_dir,
    )?);

    let n = report.model.n();
    let mut f5 = CsvFile::create(
        output_dir,
        "fig5.csv",
        &["length", "prob_encountered", "ln_prob_encountered"],
    )?;
    for s in report.subpath_length_stats.iter().filter(|s| s.length < n) {
        f5.row([
            s.length.to_string(),
            format_sig6(s.prob_encountered),
            format_sig6(s.prob_encountered.ln()),
        ])?;
    }
    written.push(f5.finish()?);

    let mut summary = CsvFile::create(output_dir, "summary.csv", &["key", "value"])?;
    let estimate = expected_collection_time_estimate(&report.model)
        .map(format_sig6)
        .unwrap_or_default();
    let rows = [
        ("n", n.to_string()),
        ("p", format_sig6(report.model.p())),
        ("iterations", report.iterations.to_string()),
        ("seeds", report.base_seed.to_string()),
        (
            "mean_full_collection_time",
            format_sig6(report.mean_full_collection_time),
        ),
        ("theory_estimate", estimate),
        ("harmonic_bound", format_sig6(harmonic_bound(&report.model))),
    ];
    for (key, value) in rows {
        summary.row([key.to_string(), value])?;
    }
    written.push(summary.finish()?);

    Ok(written)
}

/// Writes fig2.csv and fig3.csv: simulated per-edge means beside the
/// asymptotic main terms `n * limit(i / n)`. Simulated columns stay empty
/// when no simulation was run.
pub fn write_order_curves(
    model: &AttackModel,
    locations: Option<&[f64]>,
    disruptions: Option<&[f64]>,
    output_dir: &Path,
) -> Result<Vec<PathBuf>> {
    ensure_writable(output_dir)?;
    let n = model.n();
    let nf = f64::from(n);
    let cell = |values: Option<&[f64]>, i: u32| {
        values
            .map(|v| format_sig6(v[i as usize - 1]))
            .unwrap_or_default()
    };

    let mut f2 = CsvFile::create(
        output_dir,
        "fig2.csv",
        &[
            "edge",
            "expected_location_simulated",
            "expected_location_formula",
        ],
    )?;
    let mut f3 = CsvFile::create(
        output_dir,
        "fig3.csv",
        &[
            "edge",
            "expected_disruptions_simulated",
            "expected_disruptions_formula",
        ],
    )?;
    for i in 1..=n {
        let beta = f64::from(i) / nf;
        f2.row([
            i.to_string(),
            cell(locations, i),
            format_sig6(nf * expected_location_limit(beta)),
        ])?;
        f3.row([
            i.to_string(),
            cell(disruptions, i),
            format_sig6(nf * expected_disruptions_limit(beta)),
        ])?;
    }
    Ok(vec![f2.finish()?, f3.finish()?])
}

/// Writes order_stats.csv: exact expectations and limiting curves per edge.
pub fn write_order_table(model: &AttackModel, output_dir: &Path) -> Result<PathBuf> {
    ensure_writable(output_dir)?;
    let nf = f64::from(model.n());
    let mut out = CsvFile::create(
        output_dir,
        "order_stats.csv",
        &[
            "edge",
            "expected_location_exact",
            "normalized_location",
            "location_limit",
            "expected_disruptions_exact",
            "normalized_disruptions",
            "disruptions_limit",
        ],
    )?;
    for row in order_stat_table(model) {
        let beta = f64::from(row.edge_index) / nf;
        out.row([
            row.edge_index.to_string(),
            format_sig6(row.expected_location),
            format_sig6(row.normalized_location),
            format_sig6(expected_location_limit(beta)),
            format_sig6(row.expected_disruptions),
            format_sig6(row.normalized_disruptions),
            format_sig6(expected_disruptions_limit(beta)),
        ])?;
    }
    out.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(214.0), "214");
        assert_eq!(format_sig6(167.123456), "167.123");
        assert_eq!(format_sig6(0.871234567), "0.871235");
        assert_eq!(format_sig6(6.6e-6), "6.6e-6");
        assert_eq!(format_sig6(1.0), "1");
        assert_eq!(format_sig6(-11.93), "-11.93");
        assert_eq!(format_sig6(1234567.0), "1.23457e6");
        assert_eq!(format_sig6(0.000123456789), "0.000123457");
        assert_eq!(format_sig6(f64::NEG_INFINITY), "-inf");
    }
}
