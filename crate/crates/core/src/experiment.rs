//! Experiment manifests: one TOML file fully describes a run.
//!
//! ```toml
//! output_dir = "out/fused"
//! corpus = "data/synth"
//! acoustic = "lite"          # lite | none | import:<csv>
//! text = "tfidf-pun"         # tfidf | tfidf-pun | embedding:<file> | import:<csv> | none
//! standardize = false
//! threads = 0                # 0 = all cores
//!
//! [cv]
//! k = 5
//! runs = 5
//! base_seed = 0
//! grouping = "none"
//!
//! [[classifiers]]
//! kind = "linsvc"
//! c = 1.0
//! ```
//!
//! Relative paths are resolved against the manifest's directory.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acoustic::LiteConfig;
use crate::corpus::{Corpus, CorpusError, MergeScheme, TwinSample, Warmth};
use crate::eval::{run_cv, CvPlan, CvReport, Dataset, EvalError};
use crate::features::{self, FeatureError, FeatureSet, TextSource};
use crate::matrix::{self, FeatureMatrix};
use crate::models::{ClassifierKind, ClassifierSpec, ModelError};
use crate::report;
use crate::textfeat::{self, TokenVariant};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ExperimentError {
    /// Whether the failure is bad input (manifest, corpus files) rather than
    /// a fault during computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            ExperimentError::Manifest { .. }
                | ExperimentError::Invalid(_)
                | ExperimentError::Corpus(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AcousticChoice {
    Lite,
    None,
    Import(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TextChoice {
    Tfidf,
    TfidfPun,
    Embedding(PathBuf),
    Import(PathBuf),
    None,
}

impl FromStr for AcousticChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lite" => Ok(AcousticChoice::Lite),
            "none" => Ok(AcousticChoice::None),
            _ => match s.strip_prefix("import:") {
                Some(p) if !p.is_empty() => Ok(AcousticChoice::Import(p.into())),
                _ => Err(format!(
                    "unknown acoustic choice {s:?} (expected lite, none or import:<path>)"
                )),
            },
        }
    }
}

impl fmt::Display for AcousticChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AcousticChoice::Lite => f.write_str("lite"),
            AcousticChoice::None => f.write_str("none"),
            AcousticChoice::Import(p) => write!(f, "import:{}", p.display()),
        }
    }
}

impl FromStr for TextChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tfidf" => return Ok(TextChoice::Tfidf),
            "tfidf-pun" => return Ok(TextChoice::TfidfPun),
            "none" => return Ok(TextChoice::None),
            _ => {}
        }
        if let Some(p) = s.strip_prefix("embedding:").filter(|p| !p.is_empty()) {
            return Ok(TextChoice::Embedding(p.into()));
        }
        if let Some(p) = s.strip_prefix("import:").filter(|p| !p.is_empty()) {
            return Ok(TextChoice::Import(p.into()));
        }
        Err(format!(
            "unknown text choice {s:?} (expected tfidf, tfidf-pun, embedding:<path>, import:<path> or none)"
        ))
    }
}

impl fmt::Display for TextChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TextChoice::Tfidf => f.write_str("tfidf"),
            TextChoice::TfidfPun => f.write_str("tfidf-pun"),
            TextChoice::Embedding(p) => write!(f, "embedding:{}", p.display()),
            TextChoice::Import(p) => write!(f, "import:{}", p.display()),
            TextChoice::None => f.write_str("none"),
        }
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl TryFrom<String> for $t {
            type Error = String;
            fn try_from(s: String) -> Result<Self, String> {
                s.parse()
            }
        }
        impl From<$t> for String {
            fn from(v: $t) -> String {
                v.to_string()
            }
        }
    };
}
string_serde!(AcousticChoice);
string_serde!(TextChoice);

fn default_acoustic() -> AcousticChoice {
    AcousticChoice::Lite
}

fn default_text() -> TextChoice {
    TextChoice::Tfidf
}

fn default_classifiers() -> Vec<ClassifierSpec> {
    ClassifierKind::ALL
        .iter()
        .map(|&k| ClassifierSpec::new(k, 0))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub output_dir: PathBuf,
    pub corpus: PathBuf,
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub merge: MergeScheme,
    #[serde(default = "default_acoustic")]
    pub acoustic: AcousticChoice,
    #[serde(default = "default_text")]
    pub text: TextChoice,
    #[serde(default)]
    pub standardize: bool,
    #[serde(default)]
    pub lite: LiteConfig,
    #[serde(default)]
    pub cv: CvPlan,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<ClassifierSpec>,
}

impl Manifest {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ExperimentError> {
        let mut m: Manifest = toml::from_str(text).map_err(|e| ExperimentError::Manifest {
            path: path.to_owned(),
            reason: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        m.resolve_paths(base);
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::Manifest {
            path: path.to_owned(),
            reason: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.corpus);
        if let AcousticChoice::Import(p) = &mut self.acoustic {
            fix(p);
        }
        match &mut self.text {
            TextChoice::Embedding(p) | TextChoice::Import(p) => fix(p),
            _ => {}
        }
    }

    /// Checks everything that can be checked without loading data.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let invalid = |m: String| Err(ExperimentError::Invalid(m));
        if !self.corpus.is_dir() {
            return invalid(format!("corpus directory {} not found", self.corpus.display()));
        }
        if let AcousticChoice::Import(p) = &self.acoustic {
            if !p.is_file() {
                return invalid(format!("acoustic feature file {} not found", p.display()));
            }
        }
        match &self.text {
            TextChoice::Embedding(p) | TextChoice::Import(p) if !p.is_file() => {
                return invalid(format!("text feature file {} not found", p.display()));
            }
            _ => {}
        }
        if self.acoustic == AcousticChoice::None && self.text == TextChoice::None {
            return invalid("acoustic and text are both none".into());
        }
        if self.classifiers.is_empty() {
            return invalid("no classifiers".into());
        }
        for s in &self.classifiers {
            s.params
                .validate()
                .map_err(|e| ExperimentError::Invalid(e.to_string()))?;
        }
        self.cv
            .validate()
            .map_err(|e| ExperimentError::Invalid(e.to_string()))?;
        self.lite
            .frame
            .validate()
            .map_err(|e| ExperimentError::Invalid(e.to_string()))?;
        Ok(())
    }

    /// Fully resolved manifest, every default spelled out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn feature_label(&self) -> String {
        format!(
            "acoustic={} text={} standardize={}",
            self.acoustic, self.text, self.standardize
        )
    }
}

/// Fails with the first missing WAV path if the corpus lacks audio.
pub fn check_audio(corpus: &Corpus) -> Result<(), ExperimentError> {
    for iv in &corpus.interviews {
        if !iv.audio_path.is_file() {
            return Err(ExperimentError::Invalid(format!(
                "audio file {} for interview {} not found",
                iv.audio_path.display(),
                iv.id
            )));
        }
    }
    Ok(())
}

fn sample_ids(samples: &[TwinSample]) -> Vec<String> {
    samples.iter().map(|s| s.sample_id.clone()).collect()
}

fn imported(path: &Path, ids: &[String]) -> Result<FeatureMatrix, ExperimentError> {
    let m = matrix::import_features(path).map_err(FeatureError::from)?;
    Ok(m.reorder(ids).map_err(FeatureError::from)?)
}

/// Builds the per-fold feature recipe for `samples` as the manifest asks.
pub fn feature_set(
    m: &Manifest,
    corpus: &Corpus,
    samples: &[TwinSample],
) -> Result<FeatureSet, ExperimentError> {
    let ids = sample_ids(samples);
    let acoustic = match &m.acoustic {
        AcousticChoice::None => None,
        AcousticChoice::Lite => {
            check_audio(corpus)?;
            Some(features::lite_acoustic_features(corpus, samples, &m.lite)?)
        }
        AcousticChoice::Import(p) => Some(imported(p, &ids)?),
    };
    let text = match &m.text {
        TextChoice::None => TextSource::None,
        TextChoice::Tfidf => {
            TextSource::Tfidf(features::token_streams(samples, TokenVariant::Stripped))
        }
        TextChoice::TfidfPun => {
            TextSource::Tfidf(features::token_streams(samples, TokenVariant::WithPunctuation))
        }
        TextChoice::Embedding(p) => {
            let table = textfeat::load_embeddings(p).map_err(FeatureError::from)?;
            TextSource::Fixed(features::embedding_features(samples, &table)?)
        }
        TextChoice::Import(p) => TextSource::Fixed(imported(p, &ids)?),
    };
    Ok(FeatureSet {
        sample_ids: ids,
        acoustic,
        text,
        standardize: m.standardize,
    })
}

pub fn dataset(m: &Manifest, corpus: &Corpus) -> Result<Dataset, ExperimentError> {
    let samples = corpus.samples(&m.merge)?;
    let features = feature_set(m, corpus, &samples)?;
    Ok(Dataset {
        sample_ids: sample_ids(&samples),
        labels: samples.iter().map(|s| s.label3.index()).collect(),
        class_names: [Warmth::Low, Warmth::Moderate, Warmth::High]
            .iter()
            .map(|w| w.name().to_owned())
            .collect(),
        groups: samples.iter().map(|s| s.source_interview.clone()).collect(),
        features,
    })
}

/// Feature matrix over the whole corpus, for export. TF-IDF and
/// standardization are fitted on every sample, so this is not a substitute
/// for the per-fold matrices built during cross-validation.
pub fn export_features(m: &Manifest) -> Result<FeatureMatrix, ExperimentError> {
    m.validate()?;
    let pool = thread_pool(m.threads)?;
    pool.install(|| {
        let corpus = Corpus::load(&m.corpus)?;
        let samples = corpus.samples(&m.merge)?;
        let set = feature_set(m, &corpus, &samples)?;
        let all: Vec<usize> = (0..samples.len()).collect();
        Ok(set.materialize(&all)?)
    })
}

fn write_file(path: &Path, body: &str) -> Result<(), ExperimentError> {
    fs::write(path, body).map_err(|source| ExperimentError::Io {
        path: path.to_owned(),
        source,
    })
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, ExperimentError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ExperimentError::Invalid(format!("thread pool: {e}")))
}

/// Runs the whole pipeline without touching the output directory.
pub fn evaluate(m: &Manifest) -> Result<CvReport, ExperimentError> {
    m.validate()?;
    let pool = thread_pool(m.threads)?;
    pool.install(|| {
        let corpus = Corpus::load(&m.corpus)?;
        let ds = dataset(m, &corpus)?;
        let mut report = run_cv(&ds, &m.classifiers, &m.cv)?;
        report.features = m.feature_label();
        Ok(report)
    })
}

/// Runs the manifest and writes `report.json`, summaries, confusion/ROC
/// CSV and SVG files, `manifest.resolved.toml` and `run.log` into the
/// output directory.
pub fn run_experiment(m: &Manifest) -> Result<CvReport, ExperimentError> {
    let report = evaluate(m)?;
    let dir = &m.output_dir;
    report::write_artifacts(&report, dir).map_err(|source| ExperimentError::Io {
        path: dir.clone(),
        source,
    })?;
    let resolved = m.to_toml();
    write_file(&dir.join("manifest.resolved.toml"), &resolved)?;
    let threads = if m.threads == 0 {
        format!("0 (all cores: {})", rayon::current_num_threads())
    } else {
        m.threads.to_string()
    };
    let mut log = String::new();
    log.push_str("# resolved configuration\n");
    log.push_str(&format!("# threads = {threads}\n"));
    log.push_str(&resolved);
    log.push_str("\n# results\n");
    log.push_str(&report::summary_table(&report));
    write_file(&dir.join("run.log"), &log)?;
    for line in resolved.lines() {
        log::info!("{line}");
    }
    Ok(report)
}
