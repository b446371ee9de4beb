use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use flowlstm::bench::{self, BenchReport, TimingConfig};
use flowlstm::data::io::{pdf_to_csv, read_dataset, read_signal, write_dataset};
use flowlstm::data::{build_dataset, compute_pdf, Dataset, DatasetConfig, FlowRegime, Split};
use flowlstm::optim::{
    accuracy, confusion, prepare, seeded_network, train, Checkpoint, Prepared, TrainConfig,
    TrainReport, Window,
};
use flowlstm::zoo::{BASELINE_DESCRIPTOR, TABLE2_DESCRIPTORS};
use flowlstm::{parse_arch, ArchSpec, Error};

use crate::config::FileConfig;
use crate::predict::classify;
use crate::{
    BenchArchArgs, BenchSeqlenArgs, Cli, CliError, Command, Common, DataFlags, EvalArgs,
    GenerateArgs, InspectArgs, PredictArgs, SplitChoice, TrainArgs, TrainFlags,
};

type CmdResult = Result<(), CliError>;

const GRAMMAR_HELP: &str =
    "descriptors look like `[n]LSTM-{H}H-{m}ReLU`, optionally wrapped as `(…)×k` \
(or `x`), e.g. LSTM-128H-2ReLU, 2LSTM-128H-2ReLU, (LSTM-128H-2ReLU)x3; n, H, k ≥ 1 and m ≥ 0";

pub fn run(cli: &Cli) -> CmdResult {
    let file = FileConfig::load(cli.common.config.as_deref())
        .map_err(|e| CliError::Usage(format!("{e:#}")))?;
    match &cli.command {
        Command::Generate(a) => generate(&cli.common, &file, a),
        Command::Train(a) => train_cmd(&cli.common, &file, a),
        Command::Eval(a) => eval(a),
        Command::Predict(a) => predict(a),
        Command::BenchSeqlen(a) => bench_seqlen(&cli.common, &file, a),
        Command::BenchArch(a) => bench_arch(&cli.common, &file, a),
        Command::Inspect(a) => inspect(&cli.common, a),
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Configuration problems are usage errors; everything else is a runtime failure.
fn classify_error(e: Error) -> CliError {
    match e {
        Error::InvalidArgument(_) | Error::Descriptor { .. } => usage(e),
        e => e.into(),
    }
}

fn descriptor(text: &str, feature_dim: Option<usize>) -> Result<ArchSpec, CliError> {
    let arch = parse_arch(text).map_err(|e| usage(format!("{e}\n{GRAMMAR_HELP}")))?;
    match feature_dim {
        Some(0) => Err(usage("--feature-dim must be at least 1")),
        Some(d) => Ok(arch.with_feature_dim(d)),
        None => Ok(arch),
    }
}

fn dataset_config(
    common: &Common,
    file: &FileConfig,
    flags: &DataFlags,
) -> Result<DatasetConfig, CliError> {
    let mut cfg = file.dataset();
    if let Some(n) = flags.conditions {
        cfg.conditions_per_regime = n;
    }
    if let Some(d) = flags.duration {
        cfg.gen.duration = d;
    }
    if let Some(s) = flags.seg {
        cfg.seg_seconds = s;
    }
    if flags.reverse {
        cfg.augment_reverse = true;
    }
    if let Some(r) = flags.sample_rate {
        cfg.gen.sample_rate = r;
    }
    if let Some(s) = flags.split {
        cfg.split_ratio = s;
    }
    if let Some(seed) = common.seed {
        cfg.gen.seed = seed;
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn train_config(
    common: &Common,
    file: &FileConfig,
    flags: &TrainFlags,
) -> Result<TrainConfig, CliError> {
    let mut cfg = file.training();
    if let Some(n) = flags.max_epochs {
        cfg.max_epochs = n;
    }
    if let Some(n) = flags.batch_size {
        cfg.batch_size = n;
    }
    if let Some(lr) = flags.lr {
        cfg.initial_lr = lr;
    }
    if let Some(lr) = flags.min_lr {
        cfg.min_lr = lr;
    }
    if let Some(p) = flags.lr_patience {
        cfg.lr_patience = p;
    }
    if let Some(p) = flags.patience {
        cfg.early_stop_patience = p;
    }
    if let Some(c) = flags.clip {
        cfg.clip_norm = (c != 0.0).then_some(c);
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn regime_table(data: &Dataset) -> String {
    let mut out = format!(
        "{:<16} {:>7} {:>7} {:>7}\n",
        "regime", "train", "test", "total"
    );
    for regime in FlowRegime::ALL {
        let count = |split| data.split(split).filter(|it| it.label() == regime).count();
        let (tr, te) = (count(Split::Train), count(Split::Test));
        let _ = writeln!(out, "{:<16} {tr:>7} {te:>7} {:>7}", regime.name(), tr + te);
    }
    let (tr, te) = (
        data.split(Split::Train).count(),
        data.split(Split::Test).count(),
    );
    let _ = writeln!(out, "{:<16} {tr:>7} {te:>7} {:>7}", "all", data.len());
    out
}

fn generate(common: &Common, file: &FileConfig, a: &GenerateArgs) -> CmdResult {
    let cfg = dataset_config(common, file, &a.data)?;
    let data = build_dataset(&cfg).map_err(classify_error)?;
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("data"));
    let manifest = write_dataset(&dir, &data)?;
    print!("{}", regime_table(&data));
    println!(
        "wrote {} segments of {} samples to {} (fingerprint {})",
        data.len(),
        data.seq_len(),
        manifest.display(),
        cfg.fingerprint()
    );
    Ok(())
}

fn report_table(report: &TrainReport) -> String {
    let mut out = format!(
        "{:>5} {:>10} {:>9} {:>9} {:>9}\n",
        "epoch", "loss", "train %", "test %", "lr"
    );
    for e in &report.epochs {
        let _ = writeln!(
            out,
            "{:>5} {:>10.5} {:>9.2} {:>9.2} {:>9.1e}",
            e.epoch,
            e.train_loss,
            100.0 * e.train_accuracy,
            100.0 * e.test_accuracy,
            e.lr
        );
    }
    out
}

fn train_cmd(common: &Common, file: &FileConfig, a: &TrainArgs) -> CmdResult {
    let arch = descriptor(&a.arch, a.feature_dim)?;
    let cfg = train_config(common, file, &a.train)?;
    let data = read_dataset(&a.data)?;
    let net = seeded_network(&arch, cfg.seed)?;
    log::info!(
        "training {arch} ({} parameters) on {} segments",
        net.param_count(),
        data.len()
    );
    let (net, report) = train(net, &data, &cfg)?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("model.json"));
    let window = Window {
        samples: data.seq_len(),
        sample_rate: data.sample_rate(),
    };
    Checkpoint::new(arch, net, cfg.seed, Some(window), Some(&report)).write(&out)?;
    print!("{}", report_table(&report));
    match (report.best_epoch, report.best_test_accuracy) {
        (Some(e), Some(acc)) => println!(
            "best test accuracy {:.2}% at epoch {e} ({:?}); checkpoint {}",
            100.0 * acc,
            report.stop_reason,
            out.display()
        ),
        _ => println!(
            "no epochs run; checkpoint {} holds the initialized network",
            out.display()
        ),
    }
    Ok(())
}

fn eval(a: &EvalArgs) -> CmdResult {
    let ck = Checkpoint::read(&a.model)?;
    let data = read_dataset(&a.data)?;
    if let Some(w) = ck.window {
        if w.samples != data.seq_len() {
            log::warn!(
                "model was trained on {}-sample segments, dataset has {}",
                w.samples,
                data.seq_len()
            );
        }
    }
    let items: Vec<Prepared<f64>> = match a.split {
        SplitChoice::Train => prepare(&data, Split::Train),
        SplitChoice::Test => prepare(&data, Split::Test),
        SplitChoice::All => {
            let mut v = prepare(&data, Split::Train);
            v.extend(prepare(&data, Split::Test));
            v
        }
    };
    let acc = accuracy(&ck.network, &items)?;
    let m = confusion(&ck.network, &items)?;
    println!(
        "{} on {} segments: accuracy {:.2}%",
        ck.descriptor,
        items.len(),
        100.0 * acc
    );
    print!("{:<16}", "true \\ predicted");
    for r in FlowRegime::ALL {
        print!(" {:>9}", short_name(r));
    }
    println!();
    for (r, row) in FlowRegime::ALL.iter().zip(&m) {
        print!("{:<16}", r.name());
        for n in row {
            print!(" {n:>9}");
        }
        println!();
    }
    Ok(())
}

fn short_name(r: FlowRegime) -> &'static str {
    match r {
        FlowRegime::Bubbly => "Bubbly",
        FlowRegime::CapBubbly => "CapBub",
        FlowRegime::Slug => "Slug",
        FlowRegime::ChurnTurbulent => "Churn",
        FlowRegime::Annular => "Annular",
    }
}

fn predict(a: &PredictArgs) -> CmdResult {
    let ck = Checkpoint::read(&a.model)?;
    let signal = read_signal(&a.signal)?;
    let vote = classify(&ck.network, &signal, ck.window)?;
    let regime = FlowRegime::from_code(vote.class).context("model predicted an unknown class")?;
    let windows: usize = vote.votes.iter().sum();
    println!(
        "{} (code {}), {} of {windows} window{}",
        regime.name(),
        regime.code(),
        vote.votes[vote.class],
        if windows == 1 { "" } else { "s" }
    );
    for (r, p) in FlowRegime::ALL.iter().zip(&vote.probs) {
        println!("  {:<16} {p:.4}", r.name());
    }
    Ok(())
}

fn emit(report: &BenchReport, stem: &Path) -> CmdResult {
    let (csv, txt) = bench::emit_report(report, stem)?;
    print!("{}", bench::format_table(report));
    println!("wrote {} and {}", csv.display(), txt.display());
    Ok(())
}

fn timing(file: &FileConfig, flag: Option<usize>) -> Result<TimingConfig, CliError> {
    let repetitions = flag
        .or(file.bench.repetitions)
        .unwrap_or(TimingConfig::default().repetitions);
    if repetitions == 0 {
        return Err(usage("--repetitions must be at least 1"));
    }
    Ok(TimingConfig { repetitions })
}

fn bench_seqlen(common: &Common, file: &FileConfig, a: &BenchSeqlenArgs) -> CmdResult {
    let text = a
        .arch
        .clone()
        .or_else(|| file.bench.arch.clone())
        .unwrap_or_else(|| BASELINE_DESCRIPTOR.to_string());
    let arch = descriptor(&text, None)?;
    let lengths = a
        .lengths
        .clone()
        .or_else(|| file.bench.lengths.clone())
        .unwrap_or_else(|| vec![20.0, 10.0, 5.0, 3.0]);
    if lengths.is_empty() || lengths.iter().any(|&l| !(l > 0.0)) {
        return Err(usage("--lengths needs positive values"));
    }
    let data = dataset_config(common, file, &a.data)?;
    let cfg = train_config(common, file, &a.train)?;
    let timing = timing(file, a.repetitions)?;
    let report =
        bench::sensitivity_study(&lengths, &arch, &data, &cfg, &timing).map_err(classify_error)?;
    emit(
        &report,
        &common
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("bench/seqlen")),
    )
}

fn bench_arch(common: &Common, file: &FileConfig, a: &BenchArchArgs) -> CmdResult {
    let archs: Vec<String> = a
        .archs
        .clone()
        .or_else(|| file.bench.archs.clone())
        .unwrap_or_else(|| TABLE2_DESCRIPTORS.iter().map(|d| d.to_string()).collect());
    let baseline = parse_arch(BASELINE_DESCRIPTOR)?;
    let mut has_baseline = false;
    for d in &archs {
        has_baseline |= descriptor(d, None)? == baseline;
    }
    if !has_baseline {
        return Err(usage(format!(
            "--archs must include the baseline {BASELINE_DESCRIPTOR}"
        )));
    }
    let divisor = a.hidden_divisor.or(file.bench.hidden_divisor).unwrap_or(1);
    if divisor == 0 {
        return Err(usage("--hidden-divisor must be at least 1"));
    }
    let data = dataset_config(common, file, &a.data)?;
    let cfg = train_config(common, file, &a.train)?;
    let timing = timing(file, a.repetitions)?;
    let refs: Vec<&str> = archs.iter().map(String::as_str).collect();
    let report =
        bench::architecture_study(&refs, divisor, &data, &cfg, &timing).map_err(classify_error)?;
    emit(
        &report,
        &common
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("bench/arch")),
    )
}

fn inspect(common: &Common, a: &InspectArgs) -> CmdResult {
    if a.bins == 0 {
        return Err(usage("--bins must be at least 1"));
    }
    let signal = read_signal(&a.signal)?;
    let pdf = compute_pdf(&signal, a.bins)?;
    let csv = pdf_to_csv(&pdf);
    log::info!(
        "{}: {} samples, mean {:.4}, std {:.4}",
        signal.label(),
        signal.len(),
        signal.mean(),
        signal.std_dev()
    );
    match &common.out {
        Some(path) => {
            std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{csv}"),
    }
    Ok(())
}
