//! Text formats for signals, dataset manifests, and PDF/CPDF exports.
//!
//! Signal file:
//!
//! ```text
//! flowlstm-signal v1 sample_rate=100 label=Slug source_id=c0042/s03
//! 0.7312958410038571
//! ...
//! ```
//!
//! One sample per line, printed in the shortest form that parses back to
//! the same `f64`.
//!
//! Dataset directory: `manifest.tsv` plus `signals/NNNNNN.sig`. The manifest
//! starts with `# flowlstm-manifest v1` and `# key=value` lines, then a
//! tab-separated header `file label condition split source_id` and one row
//! per item.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::data::dataset::{Dataset, Item, Split};
use crate::data::regime::FlowRegime;
use crate::data::signal::Signal;
use crate::data::stats::{cumulative, Histogram};
use crate::error::{Error, Result};

const SIGNAL_MAGIC: &str = "flowlstm-signal v1";
const MANIFEST_MAGIC: &str = "# flowlstm-manifest v1";
pub const MANIFEST_FILE: &str = "manifest.tsv";
const MANIFEST_COLUMNS: &str = "file\tlabel\tcondition\tsplit\tsource_id";

fn format_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn signal_to_string(s: &Signal) -> String {
    let mut out = format!(
        "{SIGNAL_MAGIC} sample_rate={} label={} source_id={}\n",
        s.sample_rate(),
        s.label(),
        s.source_id()
    );
    for x in s.samples() {
        out.push_str(&x.to_string());
        out.push('\n');
    }
    out
}

pub fn write_signal(path: &Path, s: &Signal) -> Result<()> {
    fs::write(path, signal_to_string(s)).map_err(|e| Error::io(path, e))
}

pub fn parse_signal(path: &Path, text: &str) -> Result<Signal> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(path, 1, "empty file"))?;
    let fields = header.strip_prefix(SIGNAL_MAGIC).ok_or_else(|| {
        format_err(
            path,
            1,
            format!("expected header starting with {SIGNAL_MAGIC:?}"),
        )
    })?;
    let (mut rate, mut label, mut source) = (None, None, None);
    for kv in fields.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format_err(path, 1, format!("expected key=value, got {kv:?}")))?;
        match k {
            "sample_rate" => {
                rate = Some(
                    v.parse::<f64>()
                        .map_err(|_| format_err(path, 1, format!("bad sample_rate {v:?}")))?,
                )
            }
            "label" => {
                label = Some(
                    v.parse::<FlowRegime>()
                        .map_err(|e| format_err(path, 1, e.to_string()))?,
                )
            }
            "source_id" => source = Some(v.to_string()),
            _ => return Err(format_err(path, 1, format!("unknown header key {k:?}"))),
        }
    }
    let missing = |k: &str| format_err(path, 1, format!("header lacks {k}"));
    let rate = rate.ok_or_else(|| missing("sample_rate"))?;
    let label = label.ok_or_else(|| missing("label"))?;
    let source = source.ok_or_else(|| missing("source_id"))?;

    let mut samples = Vec::new();
    for (k, line) in lines {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let x: f64 = t
            .parse()
            .map_err(|_| format_err(path, k + 1, format!("not a number: {t:?}")))?;
        if !(0.0..=1.0).contains(&x) {
            return Err(format_err(
                path,
                k + 1,
                format!("sample {x} outside [0, 1]"),
            ));
        }
        samples.push(x);
    }
    Signal::new(samples, rate, label, source).map_err(|e| format_err(path, 1, e.to_string()))
}

pub fn read_signal(path: &Path) -> Result<Signal> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_signal(path, &text)
}

fn signal_file_name(k: usize) -> String {
    format!("signals/{k:06}.sig")
}

/// Writes every item as a signal file and the manifest listing them.
/// Returns the manifest path.
pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<PathBuf> {
    let sig_dir = dir.join("signals");
    fs::create_dir_all(&sig_dir).map_err(|e| Error::io(&sig_dir, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut m = create(&manifest_path)?;
    let io = |e| Error::io(&manifest_path, e);
    writeln!(m, "{MANIFEST_MAGIC}").map_err(io)?;
    writeln!(m, "# items={}", ds.len()).map_err(io)?;
    writeln!(m, "# seq_len={}", ds.seq_len()).map_err(io)?;
    writeln!(m, "# sample_rate={}", ds.sample_rate()).map_err(io)?;
    writeln!(m, "{MANIFEST_COLUMNS}").map_err(io)?;
    for (k, it) in ds.items().iter().enumerate() {
        let rel = signal_file_name(k);
        write_signal(&dir.join(&rel), &it.signal)?;
        writeln!(
            m,
            "{rel}\t{}\t{}\t{}\t{}",
            it.label(),
            it.condition,
            it.split.as_str(),
            it.signal.source_id()
        )
        .map_err(io)?;
    }
    m.flush().map_err(io)?;
    Ok(manifest_path)
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l == MANIFEST_MAGIC => {}
        _ => return Err(format_err(&path, 1, format!("expected {MANIFEST_MAGIC:?}"))),
    }
    let mut declared_items = None;
    let mut items = Vec::new();
    let mut seen_columns = false;
    for (k, line) in lines {
        let lineno = k + 1;
        if let Some(meta) = line.strip_prefix("# ") {
            if let Some(n) = meta.strip_prefix("items=") {
                declared_items = Some(
                    n.parse::<usize>()
                        .map_err(|_| format_err(&path, lineno, "bad items count"))?,
                );
            }
            continue;
        }
        if !seen_columns {
            if line != MANIFEST_COLUMNS {
                return Err(format_err(
                    &path,
                    lineno,
                    format!("expected column header {MANIFEST_COLUMNS:?}"),
                ));
            }
            seen_columns = true;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [file, label, condition, split, source] = cols[..] else {
            return Err(format_err(
                &path,
                lineno,
                format!("expected 5 columns, got {}", cols.len()),
            ));
        };
        let label: FlowRegime = label
            .parse()
            .map_err(|e: Error| format_err(&path, lineno, e.to_string()))?;
        let condition: usize = condition
            .parse()
            .map_err(|_| format_err(&path, lineno, format!("bad condition {condition:?}")))?;
        let split: Split = split
            .parse()
            .map_err(|e: Error| format_err(&path, lineno, e.to_string()))?;
        let signal = read_signal(&dir.join(file))?;
        if signal.label() != label || signal.source_id() != source {
            return Err(format_err(
                &path,
                lineno,
                format!(
                    "{file} holds {} / {}, manifest says {label} / {source}",
                    signal.label(),
                    signal.source_id()
                ),
            ));
        }
        items.push(Item {
            signal,
            condition,
            split,
        });
    }
    if let Some(n) = declared_items {
        if n != items.len() {
            return Err(format_err(
                &path,
                2,
                format!("declares {n} items, lists {}", items.len()),
            ));
        }
    }
    Dataset::new(items)
}

/// Three-column CSV: `bin_center,pdf,cpdf`.
pub fn pdf_to_csv(pdf: &Histogram) -> String {
    let mut out = String::from("bin_center,pdf,cpdf\n");
    for ((c, p), cum) in pdf.centers().iter().zip(&pdf.mass).zip(cumulative(pdf)) {
        out.push_str(&format!("{c},{p},{cum}\n"));
    }
    out
}

pub fn write_pdf_csv(path: &Path, pdf: &Histogram) -> Result<()> {
    fs::write(path, pdf_to_csv(pdf)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_dataset, DatasetConfig, GenConfig};

    #[test]
    fn signal_text_round_trips_bit_exactly() {
        let s = Signal::new(
            vec![0.1, 1.0 / 3.0, 0.0, 1.0, 5e-324],
            100.0,
            FlowRegime::ChurnTurbulent,
            "c1/s00/rev",
        )
        .unwrap();
        let back = parse_signal(Path::new("x"), &signal_to_string(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn malformed_signal_reports_line() {
        let text = "flowlstm-signal v1 sample_rate=10 label=Slug source_id=a\n0.5\nbogus\n";
        match parse_signal(Path::new("f.sig"), text) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_signal(Path::new("f"), "hello\n0.5\n").is_err());
        let out_of_range = "flowlstm-signal v1 sample_rate=10 label=Slug source_id=a\n1.5\n";
        assert!(matches!(
            parse_signal(Path::new("f"), out_of_range),
            Err(Error::Format { line: 2, .. })
        ));
    }

    #[test]
    fn dataset_round_trip() {
        let cfg = DatasetConfig {
            conditions_per_regime: 2,
            gen: GenConfig {
                duration: 4.0,
                ..GenConfig::default()
            },
            seg_seconds: 2.0,
            split_ratio: 0.5,
            ..DatasetConfig::default()
        };
        let ds = build_dataset(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &ds).unwrap();
        assert_eq!(read_dataset(dir.path()).unwrap(), ds);
    }

    #[test]
    fn pdf_export_has_three_columns() {
        let s = Signal::new(vec![0.1, 0.1, 0.9, 0.9], 1.0, FlowRegime::Slug, "a").unwrap();
        let csv = pdf_to_csv(&crate::data::compute_pdf(&s, 2).unwrap());
        assert_eq!(csv, "bin_center,pdf,cpdf\n0.25,0.5,0.5\n0.75,0.5,1\n");
    }
}
