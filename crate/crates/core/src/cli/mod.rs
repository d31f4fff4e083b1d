//! Command-line front end: `synth`, `prep`, `train`, `eval`, `cv`, `kappa`.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use crate::data::{read_archive, synth_dataset, synth_test_dataset, write_archive, Archive, ArchiveKind};
use crate::dsp::{CovarianceFeature, Preprocessor};
use crate::error::{Error, Result};
use crate::pipeline::{evaluate, kfold_cv, load_ensemble, save_ensemble, summary_of, Evaluation, Summary};
use crate::siamese::EpochRecord;

pub use config::{Paths, PrepSection, RunConfig, SchemeChoice};

#[derive(Debug, Parser)]
#[command(name = "siamese-bci", version, about = "Coding-matrix ensembles of contrastive twin networks for EEG")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Overrides applied on top of the config file.
#[derive(Debug, Default, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Forward-backward filtering instead of causal.
    #[arg(long, global = true)]
    pub zero_phase: bool,
    /// `ovr`, `ovo`, or a coding-matrix file.
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    /// Decode with plain L1, counting don't-care entries.
    #[arg(long, global = true)]
    pub literal_l1: bool,
    /// Same/different cut on the embedding distance.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic raw trials (training set and held-out set).
    Synth {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        test_out: Option<PathBuf>,
    },
    /// Filter, epoch and reduce a raw archive to covariance features.
    Prep {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train one classifier per coding-matrix column.
    Train {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Classify a feature archive with a trained ensemble.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Stratified k-fold cross-validation on a feature archive.
    Cv {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Recompute accuracy, kappa and confusion from an evaluation report.
    Kappa {
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

/// Config file (or defaults) with flag overrides applied, then validated.
pub fn resolve_config(global: &GlobalArgs) -> Result<RunConfig> {
    let mut c = match &global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = global.seed {
        c.seed = s;
    }
    if let Some(t) = global.threads {
        c.threads = t;
    }
    if global.zero_phase {
        c.prep.zero_phase = true;
    }
    if let Some(s) = &global.scheme {
        c.scheme = s.clone();
    }
    if global.literal_l1 {
        c.literal_l1 = true;
    }
    if let Some(t) = global.threshold {
        c.train.threshold = Some(t);
    }
    c.validate()?;
    Ok(c)
}

fn pick(flag: &Option<PathBuf>, config: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| config.clone())
        .ok_or_else(|| Error::config(format!("no {what} path: pass a flag or set it under [paths]")))
}

fn existing(path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::config(format!("{} does not exist", path.display())))
    }
}

fn load_archive(path: &Path) -> Result<Archive> {
    read_archive(&fs::read(path)?)
}

fn load_features(path: &Path) -> Result<(Vec<CovarianceFeature>, usize)> {
    let a = load_archive(path)?;
    if a.kind != ArchiveKind::Covariance {
        return Err(Error::Format(format!("{} holds raw trials; run prep first", path.display())));
    }
    Ok((a.features()?, a.classes))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(fs::write(path, bytes)?)
}

/// Human-readable summary block.
pub fn format_summary(s: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "trials {}  correct {}  accuracy {:.4}  kappa {:.4}", s.trials, s.correct, s.accuracy, s.kappa);
    let _ = writeln!(out, "confusion (rows true, columns predicted):");
    for (i, row) in s.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:4}")).collect();
        let _ = writeln!(out, "  {:>2} |{}", i + 1, cells.join(""));
    }
    out
}

fn training_log(lines: Vec<(usize, EpochRecord)>) -> String {
    let mut lines = lines;
    lines.sort_by_key(|(c, r)| (*c, r.epoch));
    lines.iter().map(|(c, r)| format!("column={c} {r}\n")).collect()
}

/// Runs one parsed command, returning what it prints on success.
pub fn run(cli: &Cli) -> Result<String> {
    let c = resolve_config(&cli.global)?;
    let p = &c.paths;
    match &cli.command {
        Command::Synth { out, test_out } => {
            let out = pick(out, &p.raw, "synth output")?;
            let synth = c.synth();
            let train = synth_dataset(&synth)?;
            write_file(&out, &write_archive(&Archive::from_trials(&train, synth.classes)?)?)?;
            let mut msg = format!("wrote {} trials to {}\n", train.len(), out.display());
            if let Some(test_out) = test_out.clone().or_else(|| p.test_raw.clone()) {
                let test = synth_test_dataset(&synth)?;
                write_file(&test_out, &write_archive(&Archive::from_trials(&test, synth.classes)?)?)?;
                let _ = writeln!(msg, "wrote {} trials to {}", test.len(), test_out.display());
            }
            Ok(msg)
        }
        Command::Prep { input, output } => {
            let input = existing(pick(input, &p.raw, "prep input")?)?;
            let output = pick(output, &p.features, "prep output")?;
            let raw = load_archive(&input)?;
            let prep = Preprocessor::new(c.prep.to_prep_config(), raw.fs)?;
            let features = raw.trials()?.iter().map(|t| prep.feature(t)).collect::<Result<Vec<_>>>()?;
            write_file(&output, &write_archive(&Archive::from_features(&features, raw.fs, raw.classes)?)?)?;
            Ok(format!("wrote {} features to {}\n", features.len(), output.display()))
        }
        Command::Train { input, checkpoint } => {
            let input = existing(pick(input, &p.features, "training features")?)?;
            let dir = pick(checkpoint, &p.checkpoint, "checkpoint")?;
            let (features, classes) = load_features(&input)?;
            let matrix = c.scheme_choice().matrix(classes)?;
            let log = Mutex::new(Vec::new());
            let progress = |column: usize, r: &EpochRecord| {
                eprintln!("column={column} {r}");
                log.lock().expect("log lock").push((column, *r));
            };
            let ensemble = crate::pipeline::train_ensemble(&features, &matrix, &c.ensemble(), &progress)?;
            save_ensemble(&ensemble, &dir)?;
            fs::write(dir.join("train.log"), training_log(log.into_inner().expect("log lock")))?;
            Ok(format!("trained {} classifiers into {}\n", ensemble.classifiers.len(), dir.display()))
        }
        Command::Eval { checkpoint, input, report } => {
            let dir = existing(pick(checkpoint, &p.checkpoint, "checkpoint")?)?;
            let input = existing(pick(input, &p.test_features, "test features")?)?;
            let ensemble = load_ensemble(&dir)?;
            let (test, _) = load_features(&input)?;
            let eval = evaluate(&ensemble, &test, c.decode_rule(), c.threads)?;
            if let Some(path) = report.clone().or_else(|| p.report.clone()) {
                write_file(&path, eval.to_jsonl().as_bytes())?;
            }
            Ok(match &eval.summary {
                Some(s) => format_summary(s),
                None => format!("classified {} unlabelled trials\n", eval.trials.len()),
            })
        }
        Command::Cv { input, report, folds } => {
            let input = existing(pick(input, &p.features, "features")?)?;
            let (features, classes) = load_features(&input)?;
            let matrix = c.scheme_choice().matrix(classes)?;
            let k = folds.unwrap_or(c.folds);
            let progress = |fold: usize, column: usize, r: &EpochRecord| eprintln!("fold={fold} column={column} {r}");
            let cv = kfold_cv(&features, k, &matrix, &c.ensemble(), c.decode_rule(), &progress)?;
            let mut text = String::new();
            for f in &cv.folds {
                let _ = writeln!(text, "fold {}: accuracy {:.4} kappa {:.4}", f.fold, f.summary.accuracy, f.summary.kappa);
            }
            let _ = writeln!(
                text,
                "mean accuracy {:.4} +- {:.4}  mean kappa {:.4} +- {:.4}",
                cv.mean_accuracy, cv.std_accuracy, cv.mean_kappa, cv.std_kappa
            );
            if let Some(path) = report.clone().or_else(|| p.cv_report.clone()) {
                let json = serde_json::to_string_pretty(&cv).map_err(|e| Error::Format(e.to_string()))?;
                write_file(&path, (json + "\n").as_bytes())?;
            }
            Ok(text)
        }
        Command::Kappa { report } => {
            let path = existing(pick(report, &p.report, "report")?)?;
            let eval = Evaluation::from_jsonl(&fs::read_to_string(&path)?)?;
            let classes = eval
                .summary
                .as_ref()
                .map(|s| s.classes)
                .or_else(|| eval.trials.first().map(|t| t.distances.len()))
                .ok_or_else(|| Error::Degenerate("report has no trials".into()))?;
            let s = summary_of(&eval.trials, classes)?
                .ok_or_else(|| Error::Degenerate("report trials are unlabelled".into()))?;
            if let Some(stored) = &eval.summary {
                if stored.correct != s.correct || stored.confusion != s.confusion {
                    return Err(Error::Format("report summary disagrees with its trial records".into()));
                }
            }
            Ok(format_summary(&s))
        }
    }
}

/// One machine-parsable line: `error kind=<tag> message=<json string>`.
pub fn error_line(e: &Error) -> String {
    format!("error kind={} message={}", e.kind(), serde_json::to_string(&e.to_string()).expect("string"))
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or_default().to_string();
            eprintln!("error kind=usage message={}", serde_json::to_string(&first).expect("string"));
            return 2;
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("{}", error_line(&e));
            if matches!(e, Error::Config(_)) {
                2
            } else {
                1
            }
        }
    }
}
