use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use warmth::corpus::{Corpus, MergeScheme, Warmth};
use warmth::eval::cv::CvReport;
use warmth::eval::Averaging;
use warmth::experiment::{self, AcousticChoice, Manifest, TextChoice};
use warmth::report;
use warmth::synth::{self, SynthConfig};

#[derive(Parser)]
#[command(name = "warmth", version, about = "Warmth classification from caregiver speech")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with a planted warmth signal.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// TOML file with SynthConfig fields; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n_interviews: Option<usize>,
        #[arg(long)]
        strength: Option<f64>,
        #[arg(long)]
        snr_db: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate a corpus directory and print a summary.
    Ingest {
        corpus: PathBuf,
        /// Six comma-separated classes, e.g. low,low,moderate,moderate,high,high.
        #[arg(long)]
        merge: Option<String>,
    },
    /// Compute a feature matrix over the whole corpus and write it as CSV.
    Features {
        #[arg(long)]
        corpus: PathBuf,
        /// lite | none | import:<csv>
        #[arg(long, default_value = "lite")]
        acoustic: String,
        /// tfidf | tfidf-pun | embedding:<file> | import:<csv> | none
        #[arg(long, default_value = "none")]
        text: String,
        #[arg(long)]
        standardize: bool,
        #[arg(long)]
        merge: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the experiment described by a manifest.
    Run { manifest: PathBuf },
    /// Paired t-tests between two reports' fold scores.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Welch's unpaired test instead of the paired test.
        #[arg(long)]
        welch: bool,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// weighted | macro | micro
        #[arg(long, default_value = "weighted")]
        averaging: String,
        /// Also write the table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Regenerate summary, CSV and SVG artifacts from a saved report.
    Report {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit 1: bad input. Exit 2: failure while computing.
enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<experiment::ExperimentError> for Failure {
    fn from(e: experiment::ExperimentError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn invalid(m: impl ToString) -> Failure {
    Failure::Validation(m.to_string())
}

fn runtime(m: impl ToString) -> Failure {
    Failure::Runtime(m.to_string())
}

fn parse_merge(s: Option<&str>) -> Result<MergeScheme, Failure> {
    let Some(s) = s else {
        return Ok(MergeScheme::default());
    };
    let classes: Vec<Warmth> = s
        .split(',')
        .map(|c| c.trim().parse::<Warmth>().map_err(invalid))
        .collect::<Result<_, _>>()?;
    let arr: [Warmth; 6] = classes
        .try_into()
        .map_err(|_| invalid("--merge needs exactly six classes"))?;
    MergeScheme::new(arr).map_err(invalid)
}

fn load_report(path: &Path) -> Result<CvReport, Failure> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    CvReport::from_json(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn synth_cmd(
    out: &Path,
    config: Option<&Path>,
    n: Option<usize>,
    strength: Option<f64>,
    snr: Option<f64>,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let mut cfg = match config {
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))?
        }
        None => SynthConfig::default(),
    };
    if let Some(v) = n {
        cfg.n_interviews = v;
    }
    if let Some(v) = strength {
        cfg.signal_strength = v;
    }
    if let Some(v) = snr {
        cfg.acoustic_noise_db = v;
    }
    if let Some(v) = seed {
        cfg.seed = v;
    }
    cfg.validate().map_err(invalid)?;
    synth::generate_corpus(&cfg, out).map_err(runtime)?;
    println!(
        "wrote {} interviews ({} samples) to {}",
        cfg.n_interviews,
        2 * cfg.n_interviews,
        out.display()
    );
    Ok(())
}

fn ingest_cmd(dir: &Path, merge: Option<&str>) -> Result<(), Failure> {
    let scheme = parse_merge(merge)?;
    let corpus = Corpus::load(dir).map_err(invalid)?;
    let samples = corpus.samples(&scheme).map_err(invalid)?;
    let mut counts = [0usize; 3];
    for s in &samples {
        counts[s.label3.index()] += 1;
    }
    let utterances: usize = corpus.interviews.iter().map(|iv| iv.utterances.len()).sum();
    let tags: BTreeSet<String> = corpus
        .interviews
        .iter()
        .flat_map(|iv| iv.utterances.iter().map(|u| u.tag.to_string()))
        .collect();
    let empty = samples
        .iter()
        .filter(|s| s.caregiver_utterances.is_empty())
        .count();
    let missing_audio: Vec<&Path> = corpus
        .interviews
        .iter()
        .map(|iv| iv.audio_path.as_path())
        .filter(|p| !p.is_file())
        .collect();
    println!("corpus: {}", dir.display());
    println!("interviews: {}", corpus.interviews.len());
    println!("utterances: {utterances} ({} distinct tags)", tags.len());
    println!(
        "samples: {} (low={} moderate={} high={})",
        samples.len(),
        counts[0],
        counts[1],
        counts[2]
    );
    println!("samples without caregiver speech: {empty}");
    println!("missing audio files: {}", missing_audio.len());
    for p in missing_audio {
        println!("  {}", p.display());
    }
    Ok(())
}

fn features_cmd(
    corpus: &Path,
    acoustic: &str,
    text: &str,
    standardize: bool,
    merge: Option<&str>,
    out: &Path,
) -> Result<(), Failure> {
    let acoustic: AcousticChoice = acoustic.parse().map_err(invalid)?;
    let text: TextChoice = text.parse().map_err(invalid)?;
    let mut m = Manifest::parse(
        "output_dir = \".\"\ncorpus = \".\"\n",
        Path::new("features.toml"),
    )?;
    m.corpus = corpus.to_owned();
    m.acoustic = acoustic;
    m.text = text;
    m.standardize = standardize;
    m.merge = parse_merge(merge)?;
    let matrix = experiment::export_features(&m)?;
    matrix.write_csv(out).map_err(runtime)?;
    println!(
        "wrote {} x {} features to {}",
        matrix.n_rows(),
        matrix.n_cols(),
        out.display()
    );
    Ok(())
}

fn run_cmd(path: &Path) -> Result<(), Failure> {
    let m = Manifest::load(path)?;
    let report = experiment::run_experiment(&m)?;
    print!("{}", report::summary_table(&report));
    println!("artifacts in {}", m.output_dir.display());
    Ok(())
}

fn compare_cmd(
    a: &Path,
    b: &Path,
    welch: bool,
    alpha: f64,
    averaging: &str,
    json: Option<&Path>,
) -> Result<(), Failure> {
    let averaging = Averaging::ALL
        .into_iter()
        .find(|x| x.name() == averaging)
        .ok_or_else(|| invalid(format!("unknown averaging {averaging:?}")))?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha {alpha} outside (0, 1)")));
    }
    let (ra, rb) = (load_report(a)?, load_report(b)?);
    let cmp = report::compare(&ra, &rb, averaging, !welch, alpha).map_err(invalid)?;
    print!("{}", cmp.to_table());
    if let Some(p) = json {
        let body = serde_json::to_string_pretty(&cmp).map_err(runtime)? + "\n";
        fs::write(p, body).map_err(|e| runtime(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn report_cmd(path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let r = load_report(path)?;
    print!("{}", report::summary_table(&r));
    if let Some(dir) = out {
        let mut written = Vec::new();
        report::write_derived(&r, dir, &mut written)
            .map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
        println!("wrote {} files to {}", written.len(), dir.display());
    }
    Ok(())
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Synth {
            out,
            config,
            n_interviews,
            strength,
            snr_db,
            seed,
        } => synth_cmd(&out, config.as_deref(), n_interviews, strength, snr_db, seed),
        Command::Ingest { corpus, merge } => ingest_cmd(&corpus, merge.as_deref()),
        Command::Features {
            corpus,
            acoustic,
            text,
            standardize,
            merge,
            out,
        } => features_cmd(&corpus, &acoustic, &text, standardize, merge.as_deref(), &out),
        Command::Run { manifest } => run_cmd(&manifest),
        Command::Compare {
            a,
            b,
            welch,
            alpha,
            averaging,
            json,
        } => compare_cmd(&a, &b, welch, alpha, &averaging, json.as_deref()),
        Command::Report { report, out } => report_cmd(&report, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
