//! Sample-level featurization and per-fold feature assembly.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::acoustic::{self, LiteConfig};
use crate::corpus::{Corpus, TwinSample};
use crate::fusion::{self, FusionError, Standardizer};
use crate::matrix::{FeatureMatrix, MatrixError};
use crate::textfeat::{self, EmbeddingTable, TextError, TokenStream, TokenVariant};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("audio for interview {interview}: {source}")]
    Acoustic {
        interview: String,
        #[source]
        source: acoustic::AcousticError,
    },
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("no feature source configured")]
    Empty,
}

/// Lite acoustic functionals for every sample. Each interview's audio is
/// decoded and analysed once; its twin samples pool their own segments.
/// Samples with no pooled frames get a zero row and a warning.
pub fn lite_acoustic_features(
    corpus: &Corpus,
    samples: &[TwinSample],
    cfg: &LiteConfig,
) -> Result<FeatureMatrix, FeatureError> {
    let mut by_interview: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        by_interview.entry(&s.source_interview).or_default().push(i);
    }
    let jobs: Vec<(&str, Vec<usize>)> = by_interview.into_iter().collect();
    let rows: Vec<Vec<(usize, Vec<f64>)>> = jobs
        .par_iter()
        .map(|(id, idx)| {
            let iv = corpus
                .interviews
                .iter()
                .find(|iv| iv.id == *id)
                .expect("samples come from this corpus");
            let wrap = |source| FeatureError::Acoustic {
                interview: id.to_string(),
                source,
            };
            let sig = acoustic::read_wav(&iv.audio_path).map_err(wrap)?;
            let llds = acoustic::compute_llds_with(&sig, &cfg.frame, &cfg.pitch).map_err(wrap)?;
            Ok(idx
                .iter()
                .map(|&i| {
                    let f = acoustic::functionals(&llds, &samples[i].segments());
                    if f.empty {
                        log::warn!(
                            "sample {} has no frames inside caregiver segments; using zeros",
                            samples[i].sample_id
                        );
                    }
                    (i, f.values)
                })
                .collect())
        })
        .collect::<Result<_, FeatureError>>()?;
    let mut ordered = vec![Vec::new(); samples.len()];
    for (i, v) in rows.into_iter().flatten() {
        ordered[i] = v;
    }
    Ok(FeatureMatrix::from_rows(
        samples.iter().map(|s| s.sample_id.clone()).collect(),
        acoustic::lite_feature_names(),
        ordered,
    )?)
}

pub fn token_streams(samples: &[TwinSample], variant: TokenVariant) -> Vec<TokenStream> {
    samples
        .iter()
        .map(|s| textfeat::preprocess(&s.text(), variant))
        .collect()
}

pub fn embedding_features(
    samples: &[TwinSample],
    table: &EmbeddingTable,
) -> Result<FeatureMatrix, FeatureError> {
    let docs = token_streams(samples, TokenVariant::Stripped);
    let rows = docs
        .iter()
        .map(|d| textfeat::embed_document(d, table))
        .collect();
    let names = (0..table.dimension).map(|i| format!("emb{i}")).collect();
    Ok(FeatureMatrix::from_rows(
        samples.iter().map(|s| s.sample_id.clone()).collect(),
        names,
        rows,
    )?)
}

/// Text side of a feature set.
#[derive(Debug, Clone)]
pub enum TextSource {
    None,
    /// Precomputed rows (embeddings or imported vectors).
    Fixed(FeatureMatrix),
    /// Documents whose TF-IDF model is fitted on each training fold.
    Tfidf(Vec<TokenStream>),
}

/// Everything needed to produce a fold's design matrix.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub sample_ids: Vec<String>,
    pub acoustic: Option<FeatureMatrix>,
    pub text: TextSource,
    pub standardize: bool,
}

impl FeatureSet {
    /// Full design matrix (all rows, in `sample_ids` order) using only the
    /// `train` rows for anything fitted: TF-IDF vocabulary and idf, and
    /// standardization statistics.
    pub fn materialize(&self, train: &[usize]) -> Result<FeatureMatrix, FeatureError> {
        let text = match &self.text {
            TextSource::None => None,
            TextSource::Fixed(m) => Some(m.reorder(&self.sample_ids)?),
            TextSource::Tfidf(docs) => {
                let train_docs: Vec<TokenStream> = train.iter().map(|&i| docs[i].clone()).collect();
                let model = textfeat::fit_tfidf(&train_docs)?;
                let rows = docs
                    .iter()
                    .map(|d| textfeat::transform_tfidf(&model, d))
                    .collect();
                Some(FeatureMatrix::from_rows(
                    self.sample_ids.clone(),
                    model.feature_names("tfidf:"),
                    rows,
                )?)
            }
        };
        let acoustic = self
            .acoustic
            .as_ref()
            .map(|m| m.reorder(&self.sample_ids))
            .transpose()?;
        let mut m = match (acoustic, text) {
            (Some(a), Some(t)) => fusion::concat(&a, &t)?,
            (Some(a), None) => a,
            (None, Some(t)) => t,
            (None, None) => return Err(FeatureError::Empty),
        };
        if self.standardize {
            m = Standardizer::fit(&m, train)?.apply(&m);
        }
        Ok(m)
    }
}
