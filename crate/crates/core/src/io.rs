//! Line-delimited JSON datasets and JSON/CSV reports.
//!
//! Ground truth, one record per line:
//! `{"query_id": "q1", "start": 0.0, "end": 2.5, "duration": 30.0}`
//! (`duration` optional).
//!
//! Runs, one record per line:
//! `{"query_id": "q1", "moments": [{"start": 0.0, "end": 2.0, "score": 0.9}]}`
//! When scores are present the moments are ranked by descending score, ties
//! kept in file order; otherwise file order is the ranking.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{Annotation, GroundTruth, RankedList, Run};
use crate::error::{Error, Result};
use crate::interval::Interval;

#[derive(Deserialize)]
struct GroundTruthRecord {
    query_id: String,
    start: f64,
    end: f64,
    #[serde(default)]
    duration: Option<f64>,
}

#[derive(Serialize)]
struct GroundTruthOut<'a> {
    query_id: &'a str,
    start: f64,
    end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    duration: Option<f64>,
}

#[derive(Deserialize)]
struct MomentRecord {
    start: f64,
    end: f64,
    #[serde(default)]
    score: Option<f64>,
}

#[derive(Deserialize)]
struct RunRecord {
    query_id: String,
    moments: Vec<MomentRecord>,
}

#[derive(Serialize)]
struct RunOut<'a> {
    query_id: &'a str,
    moments: &'a [Interval],
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Non-blank lines with their 1-based line numbers.
fn records<'a, R: BufRead + 'a>(reader: R, path: &'a Path) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    reader
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| match line {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(Ok((i + 1, l))),
            Err(e) => Some(Err(Error::io(path, e))),
        })
}

fn parse_line<T: for<'de> Deserialize<'de>>(line: &str, path: &Path, lineno: usize) -> Result<T> {
    serde_json::from_str(line).map_err(|e| Error::Parse {
        path: path.to_owned(),
        line: lineno,
        message: e.to_string(),
    })
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    read_ground_truth(open(path)?, path)
}

pub fn read_ground_truth<R: BufRead>(reader: R, path: &Path) -> Result<GroundTruth> {
    let mut gt = GroundTruth::new();
    for rec in records(reader, path) {
        let (lineno, line) = rec?;
        let r: GroundTruthRecord = parse_line(&line, path, lineno)?;
        let interval = Interval::for_query(&r.query_id, r.start, r.end)?;
        gt.insert_annotation(
            r.query_id,
            Annotation {
                interval,
                duration: r.duration,
            },
        )?;
    }
    Ok(gt)
}

/// Loads a run; the system id is the file stem.
pub fn load_run(path: impl AsRef<Path>) -> Result<Run> {
    let path = path.as_ref();
    let system_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    read_run(open(path)?, path, system_id)
}

pub fn read_run<R: BufRead>(reader: R, path: &Path, system_id: impl Into<String>) -> Result<Run> {
    let mut run = Run::new(system_id);
    for rec in records(reader, path) {
        let (lineno, line) = rec?;
        let r: RunRecord = parse_line(&line, path, lineno)?;
        let scored = r.moments.iter().filter(|m| m.score.is_some()).count();
        if scored != 0 && scored != r.moments.len() {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: lineno,
                message: format!(
                    "query {:?}: either every moment or none must carry a score",
                    r.query_id
                ),
            });
        }
        let mut moments = r
            .moments
            .iter()
            .map(|m| Ok((Interval::for_query(&r.query_id, m.start, m.end)?, m.score)))
            .collect::<Result<Vec<_>>>()?;
        if scored > 0 {
            // stable: equal scores keep file order
            moments.sort_by(|a, b| b.1.unwrap().total_cmp(&a.1.unwrap()));
        }
        run.insert(RankedList::new(
            r.query_id,
            moments.into_iter().map(|(m, _)| m).collect(),
        ))?;
    }
    Ok(run)
}

fn write_lines<T: Serialize>(path: &Path, items: impl Iterator<Item = T>) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_ground_truth(gt: &GroundTruth, path: impl AsRef<Path>) -> Result<()> {
    write_lines(
        path.as_ref(),
        gt.iter().map(|(q, a)| GroundTruthOut {
            query_id: q,
            start: a.interval.start(),
            end: a.interval.end(),
            duration: a.duration,
        }),
    )
}

/// Writes moments in rank order without scores.
pub fn write_run(run: &Run, path: impl AsRef<Path>) -> Result<()> {
    write_lines(
        path.as_ref(),
        run.lists().map(|l| RunOut {
            query_id: &l.query_id,
            moments: &l.moments,
        }),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverageMode {
    /// Every run must cover exactly the ground-truth query set.
    Strict,
    /// Runs may cover a subset; evaluation uses the common queries.
    Lenient,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetBundle {
    pub gt: GroundTruth,
    pub runs: Vec<Run>,
    pub metadata: BTreeMap<String, String>,
}

impl DatasetBundle {
    pub fn new(gt: GroundTruth, runs: Vec<Run>, mode: CoverageMode) -> Result<Self> {
        let bundle = Self {
            gt,
            runs,
            metadata: BTreeMap::new(),
        };
        bundle.validate(mode)?;
        Ok(bundle)
    }

    pub fn validate(&self, mode: CoverageMode) -> Result<()> {
        let mut seen = BTreeSet::new();
        for run in &self.runs {
            if !seen.insert(run.system_id.as_str()) {
                return Err(Error::DuplicateKey(run.system_id.clone()));
            }
            if let Some(q) = run.query_ids().find(|q| !self.gt.contains(q)) {
                return Err(Error::UnknownQuery {
                    system_id: run.system_id.clone(),
                    query_id: q.to_owned(),
                });
            }
            if mode == CoverageMode::Strict {
                if let Some(q) = self.gt.query_ids().find(|q| run.get(q).is_none()) {
                    return Err(Error::MissingPrediction {
                        system_id: run.system_id.clone(),
                        query_id: q.to_owned(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Fraction of ground-truth queries each run answers.
    pub fn coverage(&self) -> Vec<(String, f64)> {
        self.runs
            .iter()
            .map(|r| (r.system_id.clone(), r.len() as f64 / self.gt.len().max(1) as f64))
            .collect()
    }

    /// Ground truth restricted to the queries every run answers.
    pub fn common_ground_truth(&self) -> GroundTruth {
        let common: Vec<&str> = self
            .gt
            .query_ids()
            .filter(|q| self.runs.iter().all(|r| r.get(q).is_some()))
            .collect();
        self.gt.restrict(common)
    }

    pub fn run(&self, system_id: &str) -> Option<&Run> {
        self.runs.iter().find(|r| r.system_id == system_id)
    }
}

pub const GROUND_TRUTH_FILE: &str = "ground_truth.jsonl";
pub const RUNS_DIR: &str = "runs";
pub const METADATA_FILE: &str = "metadata.json";

/// Writes `ground_truth.jsonl`, `runs/<system>.jsonl` and `metadata.json`.
pub fn write_bundle(bundle: &DatasetBundle, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    write_ground_truth(&bundle.gt, dir.join(GROUND_TRUTH_FILE))?;
    for run in &bundle.runs {
        write_run(run, dir.join(RUNS_DIR).join(format!("{}.jsonl", run.system_id)))?;
    }
    let path = dir.join(METADATA_FILE);
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &bundle.metadata)?;
    w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))
}

/// Reads a directory written by [`write_bundle`]. Runs load in file-name order.
pub fn load_bundle(dir: impl AsRef<Path>, mode: CoverageMode) -> Result<DatasetBundle> {
    let dir = dir.as_ref();
    let gt = load_ground_truth(dir.join(GROUND_TRUTH_FILE))?;
    let runs_dir = dir.join(RUNS_DIR);
    let mut paths: Vec<PathBuf> = fs::read_dir(&runs_dir)
        .map_err(|e| Error::io(&runs_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    paths.sort();
    let runs = paths.iter().map(load_run).collect::<Result<Vec<_>>>()?;
    let meta_path = dir.join(METADATA_FILE);
    let metadata = if meta_path.exists() {
        serde_json::from_reader(open(&meta_path)?)?
    } else {
        BTreeMap::new()
    };
    let mut bundle = DatasetBundle::new(gt, runs, mode)?;
    bundle.metadata = metadata;
    Ok(bundle)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    /// `.csv` selects CSV; anything else JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

/// A report that can be flattened into a CSV table.
pub trait Tabular {
    fn header(&self) -> Vec<String>;
    fn rows(&self) -> Vec<Vec<String>>;
}

/// Formats a float with 17 significant digits, `%.17g` style, which
/// round-trips every finite `f64` exactly.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let mantissa = trim_zeros(mantissa.to_owned());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

pub fn format_opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

pub fn write_report<R>(report: &R, path: impl AsRef<Path>, format: ReportFormat) -> Result<()>
where
    R: Serialize + Tabular + ?Sized,
{
    let path = path.as_ref();
    write_report_to(report, create(path)?, path, format)
}

/// Like [`write_report`], for an arbitrary writer; `path` labels errors.
pub fn write_report_to<R, W>(report: &R, writer: W, path: &Path, format: ReportFormat) -> Result<()>
where
    R: Serialize + Tabular + ?Sized,
    W: Write,
{
    match format {
        ReportFormat::Json => {
            let mut w = writer;
            serde_json::to_writer_pretty(&mut w, report)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
            w.flush().map_err(|e| Error::io(path, e))
        }
        ReportFormat::Csv => {
            let csv_err = |source| Error::Csv {
                path: path.to_owned(),
                source,
            };
            let mut w = csv::Writer::from_writer(writer);
            w.write_record(report.header()).map_err(csv_err)?;
            for row in report.rows() {
                w.write_record(row).map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::io(path, e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn gt_from(text: &str) -> Result<GroundTruth> {
        read_ground_truth(Cursor::new(text), Path::new("gt.jsonl"))
    }

    fn run_from(text: &str) -> Result<Run> {
        read_run(Cursor::new(text), Path::new("sys.jsonl"), "sys")
    }

    #[test]
    fn ground_truth_line() {
        let gt = gt_from("{\"query_id\":\"q1\",\"start\":0.0,\"end\":2.5}\n\n").unwrap();
        assert_eq!(gt.len(), 1);
        assert_eq!(gt.interval("q1").unwrap().length(), 2.5);
    }

    #[test]
    fn ground_truth_errors() {
        assert!(matches!(
            gt_from("{\"query_id\":\"q1\",\"start\":3,\"end\":2}"),
            Err(Error::InvalidInterval { query_id, .. }) if query_id == "q1"
        ));
        assert!(matches!(
            gt_from("{\"query_id\":\"q1\",\"start\":0,\"end\":2}\nnot json"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            gt_from("{\"query_id\":\"q1\",\"start\":0,\"end\":2}\n{\"query_id\":\"q1\",\"start\":0,\"end\":1}"),
            Err(Error::DuplicateKey(_))
        ));
    }

    #[test]
    fn scored_moments_are_reordered_stably() {
        let run = run_from(
            r#"{"query_id":"q","moments":[{"start":0,"end":1,"score":0.9},{"start":1,"end":2,"score":0.95},{"start":2,"end":3,"score":0.9}]}"#,
        )
        .unwrap();
        let starts: Vec<f64> = run.get("q").unwrap().moments.iter().map(|m| m.start()).collect();
        assert_eq!(starts, [1.0, 0.0, 2.0]);
    }

    #[test]
    fn unscored_moments_keep_file_order() {
        let run = run_from(r#"{"query_id":"q","moments":[{"start":2,"end":3},{"start":0,"end":1}]}"#).unwrap();
        let starts: Vec<f64> = run.get("q").unwrap().moments.iter().map(|m| m.start()).collect();
        assert_eq!(starts, [2.0, 0.0]);
    }

    #[test]
    fn run_errors() {
        assert!(matches!(
            run_from("{\"query_id\":\"q\",\"moments\":[]}\n{\"query_id\":\"q\",\"moments\":[]}"),
            Err(Error::DuplicateKey(_))
        ));
        assert!(matches!(
            run_from(r#"{"query_id":"q","moments":[{"start":2,"end":1}]}"#),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(matches!(
            run_from(r#"{"query_id":"q","moments":[{"start":0,"end":1,"score":1},{"start":0,"end":1}]}"#),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(0.5), "0.5");
        assert_eq!(format_float(1.0), "1");
        assert_eq!(format_float(-2.0), "-2");
        assert_eq!(format_float(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(format_float(1e-7), "9.9999999999999995e-08");
        assert_eq!(format_float(1.5e20), "1.5e+20");
        assert_eq!(format_float(123456.0), "123456");
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 6.02e23, -7.25e-6, f64::from_bits(0.7f64.to_bits() + 1)] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn strict_and_lenient_coverage() {
        let gt = gt_from(
            "{\"query_id\":\"a\",\"start\":0,\"end\":1}\n{\"query_id\":\"b\",\"start\":0,\"end\":1}",
        )
        .unwrap();
        let run = run_from(r#"{"query_id":"a","moments":[]}"#).unwrap();
        assert!(matches!(
            DatasetBundle::new(gt.clone(), vec![run.clone()], CoverageMode::Strict),
            Err(Error::MissingPrediction { .. })
        ));
        let bundle = DatasetBundle::new(gt.clone(), vec![run], CoverageMode::Lenient).unwrap();
        assert_eq!(bundle.coverage(), vec![("sys".to_owned(), 0.5)]);
        assert_eq!(bundle.common_ground_truth().len(), 1);
        let stray = run_from(r#"{"query_id":"zzz","moments":[]}"#).unwrap();
        assert!(matches!(
            DatasetBundle::new(gt, vec![stray], CoverageMode::Lenient),
            Err(Error::UnknownQuery { .. })
        ));
    }
}
