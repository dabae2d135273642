//! Result and codebook files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ResultRow, ResultSet, TrialRecord};
use crate::array_model::ArrayGeometry;
use crate::codebook::{CodewordReport, DesignedCodebook, GsConfig, RisSynthesis, Side};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidArgument(format!("unknown format '{other}' (csv or json)"))),
        }
    }
}

const RESULT_HEADER: [&str; 9] = [
    "protocol",
    "sweep_variable",
    "sweep_value",
    "trials",
    "pilots",
    "success_rate",
    "success_ci95",
    "mean_rate",
    "rate_ci95",
];

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn json_to(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Writes the result set. Values are stored rounded to 10 significant
/// digits, so the shortest round-trip representation is written as is.
pub fn export_results(rs: &ResultSet, path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        OutputFormat::Json => json_to(path, rs),
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(create(path)?);
            w.write_record(RESULT_HEADER)?;
            for r in &rs.rows {
                w.serialize(r)?;
            }
            w.flush().map_err(|e| Error::io(path, e))
        }
    }
}

pub fn import_results_json(path: impl AsRef<Path>) -> Result<ResultSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn import_results_csv(path: impl AsRef<Path>) -> Result<ResultSet> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize::<ResultRow>().collect::<std::result::Result<_, _>>()?;
    Ok(ResultSet { rows })
}

/// Per-trial log as CSV.
pub fn export_trials(records: &[TrialRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub layer: usize,
    /// Coverage mask of `codeword_one` as a bit string over grid indices.
    pub mask: String,
    /// `(re, im)` pairs in element order.
    pub codeword_one: Vec<(f64, f64)>,
    pub codeword_zero: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideDocument {
    pub side: Side,
    pub layers: Vec<LayerEntry>,
    pub report: Vec<CodewordReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookDocument {
    pub geometry: ArrayGeometry,
    pub gs: GsConfig,
    pub ris_synthesis: RisSynthesis,
    pub bs: SideDocument,
    pub ris: SideDocument,
}

fn side_document(book: &DesignedCodebook) -> SideDocument {
    let pairs = |v: &nalgebra::DVector<crate::C64>| v.iter().map(|z| (z.re, z.im)).collect();
    SideDocument {
        side: book.side,
        layers: book
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| LayerEntry {
                layer: i,
                mask: l.mask.iter().map(|&m| if m { '1' } else { '0' }).collect(),
                codeword_one: pairs(&l.codeword_one),
                codeword_zero: pairs(&l.codeword_zero),
            })
            .collect(),
        report: book.design_report.clone(),
    }
}

pub fn codebook_document(
    geometry: &ArrayGeometry,
    gs: &GsConfig,
    synthesis: RisSynthesis,
    bs: &DesignedCodebook,
    ris: &DesignedCodebook,
) -> CodebookDocument {
    CodebookDocument {
        geometry: *geometry,
        gs: *gs,
        ris_synthesis: synthesis,
        bs: side_document(bs),
        ris: side_document(ris),
    }
}

pub fn export_codebooks(doc: &CodebookDocument, path: impl AsRef<Path>) -> Result<()> {
    json_to(path.as_ref(), doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultSet {
        ResultSet {
            rows: vec![ResultRow {
                protocol: "coded_one_bit".into(),
                sweep_variable: "snr_db".into(),
                sweep_value: -5.0,
                trials: 10,
                pilots: 56,
                success_rate: 0.3,
                success_ci95: 0.2840316883,
                mean_rate: 12.34567891,
                rate_ci95: 0.0,
            }],
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        export_results(&ResultSet::default(), &p, OutputFormat::Csv).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "protocol,sweep_variable,sweep_value,trials,pilots,success_rate,success_ci95,mean_rate,rate_ci95\n"
        );
    }

    #[test]
    fn json_and_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rs = sample();
        let pj = dir.path().join("r.json");
        export_results(&rs, &pj, OutputFormat::Json).unwrap();
        assert_eq!(import_results_json(&pj).unwrap(), rs);
        let pc = dir.path().join("r.csv");
        export_results(&rs, &pc, OutputFormat::Csv).unwrap();
        assert_eq!(import_results_csv(&pc).unwrap(), rs);
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = export_results(&sample(), "/nonexistent-dir/x.csv", OutputFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn format_parsing() {
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
