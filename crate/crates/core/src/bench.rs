//! Sequence-length sensitivity and architecture comparison studies.
//!
//! Reports are written twice: `<stem>.csv` for machines and `<stem>.txt` as
//! an aligned table. The CSV begins with `# key=value` metadata lines
//! (`kind`, `baseline`, `fingerprint`) followed by a header row
//! `label,seg_seconds,test_accuracy_pct,relative_time,mean_seconds,epochs`.
//! `seg_seconds` is empty for architecture rows.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{build_dataset, Dataset, DatasetConfig, Split};
use crate::error::{Error, Result};
use crate::nn::Network;
use crate::optim::{accuracy, prepare, seeded_network, train, Prepared, TrainConfig};
use crate::zoo::{parse_arch, ArchSpec, BASELINE_DESCRIPTOR};

pub const TABLE_HEADER: [&str; 3] = [
    "Network Descriptions",
    "Test Accuracy (%)",
    "Relative prediction time",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    SeqLen,
    Arch,
}

impl StudyKind {
    fn as_str(self) -> &'static str {
        match self {
            StudyKind::SeqLen => "seq-len",
            StudyKind::Arch => "arch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub label: String,
    pub seg_seconds: Option<f64>,
    /// Percent of the test split classified correctly.
    pub test_accuracy_pct: f64,
    /// Median prediction time over the test split divided by the baseline's.
    pub relative_time: f64,
    /// Median wall-clock seconds to predict the whole test split once.
    pub mean_seconds: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub kind: StudyKind,
    pub rows: Vec<BenchRow>,
    /// Label of the row every timing is normalized to.
    pub baseline: String,
    /// Dataset configuration hash (seed included).
    pub fingerprint: String,
}

impl BenchReport {
    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::Report("report has no rows".into()));
        }
        let base = self
            .rows
            .iter()
            .find(|r| r.label == self.baseline)
            .ok_or_else(|| Error::Report(format!("baseline {:?} is not a row", self.baseline)))?;
        if base.relative_time != 1.0 {
            return Err(Error::Report(format!(
                "baseline relative time is {}",
                base.relative_time
            )));
        }
        for r in &self.rows {
            if !(r.relative_time > 0.0) || !(0.0..=100.0).contains(&r.test_accuracy_pct) {
                return Err(Error::Report(format!("row {:?} out of range", r.label)));
            }
        }
        Ok(())
    }

    pub fn row(&self, label: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingConfig {
    /// Measured repetitions; one extra warm-up pass runs first.
    pub repetitions: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self { repetitions: 5 }
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median seconds to predict every item once, sequentially on the calling
/// thread, after one discarded warm-up pass.
pub fn time_predictions(
    net: &Network<f64>,
    items: &[Prepared<f64>],
    timing: &TimingConfig,
) -> Result<f64> {
    if items.is_empty() {
        return Err(Error::Empty("timing set"));
    }
    if timing.repetitions == 0 {
        return Err(Error::InvalidArgument(
            "timing needs at least one repetition".into(),
        ));
    }
    let mut samples = Vec::with_capacity(timing.repetitions);
    for rep in 0..=timing.repetitions {
        let start = Instant::now();
        for p in items {
            std::hint::black_box(net.predict(&p.seq)?);
        }
        if rep > 0 {
            samples.push(start.elapsed().as_secs_f64());
        }
    }
    Ok(median(samples))
}

/// Divides every `mean_seconds` by the baseline row's.
pub fn normalize(rows: &mut [BenchRow], baseline: &str) -> Result<()> {
    let base = rows
        .iter()
        .find(|r| r.label == baseline)
        .map(|r| r.mean_seconds)
        .ok_or_else(|| Error::Report(format!("baseline {baseline:?} is not among the rows")))?;
    if !(base > 0.0) {
        return Err(Error::Report(format!(
            "baseline time {base} is not positive"
        )));
    }
    for r in rows {
        r.relative_time = r.mean_seconds / base;
    }
    Ok(())
}

struct Run {
    accuracy: f64,
    seconds: f64,
    epochs: usize,
}

fn train_and_time(
    arch: &ArchSpec,
    data: &Dataset,
    train_cfg: &TrainConfig,
    timing: &TimingConfig,
) -> Result<Run> {
    let net = seeded_network::<f64>(arch, train_cfg.seed)?;
    let (net, report) = train(net, data, train_cfg)?;
    let test = prepare::<f64>(data, Split::Test);
    Ok(Run {
        accuracy: accuracy(&net, &test)?,
        seconds: time_predictions(&net, &test, timing)?,
        epochs: report.epochs.len(),
    })
}

/// Trains a fresh `arch` on a dataset cut at each segment length. Rows
/// follow `lengths` order; timings are relative to the first row.
pub fn sensitivity_study(
    lengths: &[f64],
    arch: &ArchSpec,
    data_cfg: &DatasetConfig,
    train_cfg: &TrainConfig,
    timing: &TimingConfig,
) -> Result<BenchReport> {
    if lengths.is_empty() {
        return Err(Error::Empty("segment lengths"));
    }
    let mut rows = Vec::with_capacity(lengths.len());
    for &seg in lengths {
        let cfg = DatasetConfig {
            seg_seconds: seg,
            ..data_cfg.clone()
        };
        let data = build_dataset(&cfg)?;
        log::info!("sensitivity: {seg} s segments, {} items", data.len());
        let run = train_and_time(arch, &data, train_cfg, timing)?;
        rows.push(BenchRow {
            label: format!("{arch} [{seg} s]"),
            seg_seconds: Some(seg),
            test_accuracy_pct: 100.0 * run.accuracy,
            relative_time: 0.0,
            mean_seconds: run.seconds,
            epochs: run.epochs,
        });
    }
    let baseline = rows[0].label.clone();
    normalize(&mut rows, &baseline)?;
    Ok(BenchReport {
        kind: StudyKind::SeqLen,
        rows,
        baseline,
        fingerprint: data_cfg.fingerprint(),
    })
}

/// Trains every descriptor on one shared dataset and normalizes timings to
/// `LSTM-128H-2ReLU`, which must be in the list. Every cell count is
/// divided by `hidden_divisor` (1 keeps full size), which shrinks runs while
/// keeping the relative widths.
pub fn architecture_study(
    descriptors: &[&str],
    hidden_divisor: usize,
    data_cfg: &DatasetConfig,
    train_cfg: &TrainConfig,
    timing: &TimingConfig,
) -> Result<BenchReport> {
    let archs = descriptors
        .iter()
        .map(|d| parse_arch(d))
        .collect::<Result<Vec<_>>>()?;
    if hidden_divisor == 0 {
        return Err(Error::InvalidArgument(
            "hidden divisor must be at least 1".into(),
        ));
    }
    let baseline_arch = parse_arch(BASELINE_DESCRIPTOR)?;
    if !archs.contains(&baseline_arch) {
        return Err(Error::Report(format!(
            "baseline {BASELINE_DESCRIPTOR} is missing from the study"
        )));
    }
    let data = build_dataset(data_cfg)?;
    let mut rows = Vec::with_capacity(archs.len());
    for arch in &archs {
        let sized = arch.with_hidden((arch.hidden_cells / hidden_divisor).max(1));
        log::info!("architecture study: {arch}");
        let run = train_and_time(&sized, &data, train_cfg, timing)?;
        rows.push(BenchRow {
            label: arch.to_string(),
            seg_seconds: None,
            test_accuracy_pct: 100.0 * run.accuracy,
            relative_time: 0.0,
            mean_seconds: run.seconds,
            epochs: run.epochs,
        });
    }
    normalize(&mut rows, BASELINE_DESCRIPTOR)?;
    Ok(BenchReport {
        kind: StudyKind::Arch,
        rows,
        baseline: BASELINE_DESCRIPTOR.to_string(),
        fingerprint: data_cfg.fingerprint(),
    })
}

pub fn format_table(report: &BenchReport) -> String {
    let cells: Vec<[String; 3]> = report
        .rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                format!("{:.1}", r.test_accuracy_pct),
                format!("{:.2}", r.relative_time),
            ]
        })
        .collect();
    let mut width = TABLE_HEADER.map(|h| h.chars().count());
    for row in &cells {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |c: [&str; 3]| {
        format!(
            "{:<w0$} | {:>w1$} | {:>w2$}\n",
            c[0],
            c[1],
            c[2],
            w0 = width[0],
            w1 = width[1],
            w2 = width[2]
        )
    };
    let mut out = line(TABLE_HEADER);
    out.push_str(&format!(
        "{}-+-{}-+-{}\n",
        "-".repeat(width[0]),
        "-".repeat(width[1]),
        "-".repeat(width[2])
    ));
    for c in &cells {
        out.push_str(&line([&c[0], &c[1], &c[2]]));
    }
    out.push_str(&format!(
        "\ndataset {}, baseline {}\n",
        report.fingerprint, report.baseline
    ));
    out
}

pub fn report_to_csv(report: &BenchReport) -> Result<String> {
    let mut buf = format!(
        "# kind={}\n# baseline={}\n# fingerprint={}\n",
        report.kind.as_str(),
        report.baseline,
        report.fingerprint
    )
    .into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in &report.rows {
            w.serialize(r).map_err(|e| Error::Report(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Report(e.to_string()))?;
    }
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub fn report_from_csv(text: &str) -> Result<BenchReport> {
    let (mut kind, mut baseline, mut fingerprint) = (None, None, None);
    for meta in text.lines().map_while(|l| l.strip_prefix("# ")) {
        match meta.split_once('=') {
            Some(("kind", "seq-len")) => kind = Some(StudyKind::SeqLen),
            Some(("kind", "arch")) => kind = Some(StudyKind::Arch),
            Some(("baseline", v)) => baseline = Some(v.to_string()),
            Some(("fingerprint", v)) => fingerprint = Some(v.to_string()),
            _ => {
                return Err(Error::Report(format!(
                    "unrecognized metadata line {meta:?}"
                )))
            }
        }
    }
    let missing = |k: &str| Error::Report(format!("report lacks {k} metadata"));
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<BenchRow>, _>>()
        .map_err(|e| Error::Report(e.to_string()))?;
    let report = BenchReport {
        kind: kind.ok_or_else(|| missing("kind"))?,
        rows,
        baseline: baseline.ok_or_else(|| missing("baseline"))?,
        fingerprint: fingerprint.ok_or_else(|| missing("fingerprint"))?,
    };
    report.validate()?;
    Ok(report)
}

/// Writes `<stem>.csv` and `<stem>.txt`, returning both paths.
pub fn emit_report(report: &BenchReport, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    report.validate()?;
    let csv_path = stem.with_extension("csv");
    let txt_path = stem.with_extension("txt");
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(&csv_path, report_to_csv(report)?).map_err(|e| Error::io(&csv_path, e))?;
    let mut f = fs::File::create(&txt_path).map_err(|e| Error::io(&txt_path, e))?;
    f.write_all(format_table(report).as_bytes())
        .map_err(|e| Error::io(&txt_path, e))?;
    Ok((csv_path, txt_path))
}

pub fn read_report(csv_path: &Path) -> Result<BenchReport> {
    let text = fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    report_from_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(label: &str, secs: f64, seg: Option<f64>) -> BenchRow {
        BenchRow {
            label: label.into(),
            seg_seconds: seg,
            test_accuracy_pct: 87.5,
            relative_time: 0.0,
            mean_seconds: secs,
            epochs: 7,
        }
    }

    fn report() -> BenchReport {
        let mut rows = vec![
            row("LSTM-128H-2ReLU", 0.013, None),
            row("3LSTM-128H-2ReLU", 0.041, None),
            row("(LSTM-128H-2ReLU)×2", 1.0 / 30.0, None),
        ];
        normalize(&mut rows, "LSTM-128H-2ReLU").unwrap();
        BenchReport {
            kind: StudyKind::Arch,
            rows,
            baseline: "LSTM-128H-2ReLU".into(),
            fingerprint: "00ff".into(),
        }
    }

    #[test]
    fn baseline_is_exactly_one_and_scale_free() {
        let r = report();
        assert_eq!(r.rows[0].relative_time, 1.0);
        let mut doubled: Vec<BenchRow> = r.rows.clone();
        doubled.iter_mut().for_each(|x| x.mean_seconds *= 2.0);
        normalize(&mut doubled, "LSTM-128H-2ReLU").unwrap();
        for (a, b) in doubled.iter().zip(&r.rows) {
            assert!((a.relative_time - b.relative_time).abs() < 1e-15);
        }
        assert!(normalize(&mut doubled, "nope").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let r = report();
        let text = report_to_csv(&r).unwrap();
        assert_eq!(
            text.lines().nth(3),
            Some("label,seg_seconds,test_accuracy_pct,relative_time,mean_seconds,epochs")
        );
        assert_eq!(report_from_csv(&text).unwrap(), r);
        let mut s = r.clone();
        s.kind = StudyKind::SeqLen;
        s.rows = vec![
            row("a [3 s]", 0.5, Some(3.0)),
            row("a [20 s]", 0.7, Some(20.0)),
        ];
        s.baseline = "a [3 s]".into();
        normalize(&mut s.rows, "a [3 s]").unwrap();
        assert_eq!(report_from_csv(&report_to_csv(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn text_table_header() {
        let t = format_table(&report());
        assert_eq!(
            t.lines()
                .next()
                .unwrap()
                .split(" | ")
                .map(str::trim)
                .collect::<Vec<_>>(),
            TABLE_HEADER
        );
        assert!(t.contains("1.00"));
    }

    #[test]
    fn empty_report_is_rejected() {
        let mut r = report();
        r.rows.clear();
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_report(&r, &dir.path().join("x")).is_err());
        let (c, t) = emit_report(&report(), &dir.path().join("sub/arch")).unwrap();
        assert!(c.exists() && t.exists());
        assert_eq!(read_report(&c).unwrap(), report());
    }

    #[test]
    fn missing_baseline_is_an_error() {
        let err = architecture_study(
            &["LSTM-256H-2ReLU"],
            64,
            &DatasetConfig::default(),
            &TrainConfig::default(),
            &TimingConfig::default(),
        );
        assert!(matches!(err, Err(Error::Report(_))));
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
