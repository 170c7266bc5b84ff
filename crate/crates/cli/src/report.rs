//! Report rows and their CSV / JSON-lines serialization.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

/// Column order of every report.
pub const COLUMNS: [&str; 14] = [
    "instance",
    "n",
    "subspace_size",
    "doubling_constant",
    "delta_covering",
    "lift_dimension",
    "a_n",
    "prop_bound",
    "norm_lower_bound",
    "dilation_estimate",
    "layer_worst_slack",
    "flags",
    "all_pass",
    "wall_time_ms",
];

/// One instance's summary. Floats are rounded to 12 significant digits on
/// construction through [`round12`]; missing quantities are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance: String,
    pub n: usize,
    pub subspace_size: usize,
    pub doubling_constant: f64,
    pub delta_covering: Option<f64>,
    pub lift_dimension: usize,
    pub a_n: f64,
    pub prop_bound: f64,
    pub norm_lower_bound: Option<f64>,
    pub dilation_estimate: Option<f64>,
    pub layer_worst_slack: Option<f64>,
    /// `;`-separated notes and failed check names.
    pub flags: String,
    pub all_pass: bool,
    pub wall_time_ms: Option<u64>,
}

/// Round to 12 significant digits. Non-finite values pass through.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

impl ReportRow {
    /// Apply [`round12`] to every float column.
    pub fn rounded(mut self) -> Self {
        self.doubling_constant = round12(self.doubling_constant);
        self.a_n = round12(self.a_n);
        self.prop_bound = round12(self.prop_bound);
        for v in [
            &mut self.delta_covering,
            &mut self.norm_lower_bound,
            &mut self.dilation_estimate,
            &mut self.layer_worst_slack,
        ] {
            *v = v.map(round12);
        }
        self
    }

    fn csv_record(&self) -> [String; 14] {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(T::to_string).unwrap_or_default()
        }
        [
            self.instance.clone(),
            self.n.to_string(),
            self.subspace_size.to_string(),
            self.doubling_constant.to_string(),
            opt(&self.delta_covering),
            self.lift_dimension.to_string(),
            self.a_n.to_string(),
            self.prop_bound.to_string(),
            opt(&self.norm_lower_bound),
            opt(&self.dilation_estimate),
            opt(&self.layer_worst_slack),
            self.flags.clone(),
            self.all_pass.to_string(),
            opt(&self.wall_time_ms),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Jsonl,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "jsonl" => Ok(ReportFormat::Jsonl),
            other => Err(HarnessError::ParamOutOfRange(format!("format {other:?}"))),
        }
    }
}

/// Serialize `rows` to a writer.
pub fn write_report<W: Write>(
    rows: &[ReportRow],
    out: W,
    format: ReportFormat,
) -> Result<(), HarnessError> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(COLUMNS)?;
            for row in rows {
                w.write_record(row.csv_record())?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
        ReportFormat::Jsonl => {
            let mut out = out;
            for row in rows {
                let line = serde_json::to_string(row).expect("row serializes");
                writeln!(out, "{line}").map_err(csv::Error::from)?;
            }
            out.flush().map_err(csv::Error::from)?;
        }
    }
    Ok(())
}

/// Write `rows` to `path`. CSV output always has a header line.
pub fn emit_report(rows: &[ReportRow], path: &Path, format: ReportFormat) -> Result<(), HarnessError> {
    let io_err = |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_report(rows, BufWriter::new(file), format).map_err(|e| match e {
        HarnessError::Report(c) if c.is_io_error() => match c.into_kind() {
            csv::ErrorKind::Io(source) => io_err(source),
            _ => unreachable!(),
        },
        other => other,
    })
}

/// Parse a JSON-lines report.
pub fn parse_jsonl(text: &str) -> Result<Vec<ReportRow>, HarnessError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| HarnessError::Schema(e.to_string())))
        .collect()
}
