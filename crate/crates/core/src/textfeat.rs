//! Text features: tokenization, TF-IDF, mean word embeddings, and the
//! chunk/aggregation arithmetic for externally computed contextual vectors.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("cannot fit TF-IDF: {0}")]
    EmptyCorpus(&'static str),
    #[error("{path}:{line}: {reason}")]
    Format {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid chunk configuration: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = TextError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenVariant {
    Stripped,
    WithPunctuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<String>,
    pub variant: TokenVariant,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

const CLITICS: [&str; 6] = ["'s", "'re", "'ve", "'ll", "'d", "'m"];

fn is_punctuation(token: &str) -> bool {
    !token.chars().any(char::is_alphanumeric)
}

/// Splits a trailing English clitic off a word: `he's` → `he`, `'s`;
/// `don't` → `do`, `n't`.
fn split_clitic(word: &str) -> (String, Option<&'static str>) {
    let norm = word.replace('\u{2019}', "'");
    if norm.len() > 3 && norm.ends_with("n't") {
        return (norm[..norm.len() - 3].to_owned(), Some("n't"));
    }
    for c in CLITICS {
        if norm.len() > c.len() && norm.ends_with(c) {
            return (norm[..norm.len() - c.len()].to_owned(), Some(c));
        }
    }
    (norm, None)
}

/// Word tokenization on Unicode word boundaries (UAX #29), lowercased.
///
/// Apostrophe contractions are split into stem and clitic; hyphenated words
/// and runs of punctuation split into one token per boundary segment.
/// The stripped variant drops tokens with no alphanumeric character.
pub fn preprocess(text: &str, variant: TokenVariant) -> TokenStream {
    let mut tokens = Vec::new();
    for seg in text.split_word_bounds() {
        if seg.chars().all(char::is_whitespace) {
            continue;
        }
        let lower = seg.to_lowercase();
        if is_punctuation(&lower) {
            if variant == TokenVariant::WithPunctuation {
                tokens.push(lower);
            }
            continue;
        }
        let (stem, clitic) = split_clitic(&lower);
        tokens.push(stem);
        if let Some(c) = clitic {
            tokens.push(c.to_owned());
        }
    }
    TokenStream { tokens, variant }
}

/// Smoothed-idf TF-IDF with L2-normalized rows. Columns follow the sorted
/// term order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub fitted_on: usize,
}

pub fn fit_tfidf(train_docs: &[TokenStream]) -> Result<TfidfModel> {
    if train_docs.is_empty() {
        return Err(TextError::EmptyCorpus("no training documents"));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in train_docs {
        let mut uniq: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
        uniq.sort_unstable();
        uniq.dedup();
        for t in uniq {
            *df.entry(t).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(TextError::EmptyCorpus("all training documents are empty"));
    }
    let n = train_docs.len() as f64;
    let mut vocabulary = BTreeMap::new();
    let mut idf = Vec::with_capacity(df.len());
    for (i, (term, count)) in df.into_iter().enumerate() {
        vocabulary.insert(term.to_owned(), i);
        idf.push(((1.0 + n) / (1.0 + count as f64)).ln() + 1.0);
    }
    Ok(TfidfModel {
        vocabulary,
        idf,
        fitted_on: train_docs.len(),
    })
}

impl TfidfModel {
    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    pub fn feature_names(&self, prefix: &str) -> Vec<String> {
        self.vocabulary.keys().map(|t| format!("{prefix}{t}")).collect()
    }
}

pub fn transform_tfidf(model: &TfidfModel, doc: &TokenStream) -> Vec<f64> {
    let mut v = vec![0.0; model.dim()];
    for t in &doc.tokens {
        if let Some(&i) = model.vocabulary.get(t) {
            v[i] += 1.0;
        }
    }
    for (x, w) in v.iter_mut().zip(&model.idf) {
        *x *= w;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dimension: usize,
    pub vectors: HashMap<String, Vec<f64>>,
}

/// Loads word2vec/GloVe-style text embeddings. A first line of exactly two
/// integers is treated as a `count dim` header.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let text = fs::read_to_string(path).map_err(|source| TextError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_embeddings(&text, path)
}

pub fn parse_embeddings(text: &str, path: &Path) -> Result<EmbeddingTable> {
    let err = |line: usize, reason: String| TextError::Format {
        path: path.to_owned(),
        line,
        reason,
    };
    let mut dimension: Option<usize> = None;
    let mut vectors = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if line == 1 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
            dimension = Some(fields[1].parse().unwrap());
            continue;
        }
        let (term, rest) = fields.split_first().unwrap();
        let vec = rest
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(line, format!("malformed float {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        match dimension {
            None => dimension = Some(vec.len()),
            Some(d) if d != vec.len() => {
                return Err(err(
                    line,
                    format!("vector for {term:?} has {} values, expected {d}", vec.len()),
                ))
            }
            _ => {}
        }
        if vec.is_empty() {
            return Err(err(line, format!("no vector values for {term:?}")));
        }
        vectors.insert((*term).to_owned(), vec);
    }
    Ok(EmbeddingTable {
        dimension: dimension.unwrap_or(0),
        vectors,
    })
}

/// Mean of the vectors of known tokens; zero when no token is known.
pub fn embed_document(doc: &TokenStream, table: &EmbeddingTable) -> Vec<f64> {
    let mut sum = vec![0.0; table.dimension];
    let mut known = 0usize;
    for t in &doc.tokens {
        if let Some(v) = table.vectors.get(t) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            known += 1;
        }
    }
    if known > 0 {
        for s in &mut sum {
            *s /= known as f64;
        }
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChunkAggregationConfig {
    pub chunk_len: usize,
    pub overlap: f64,
    pub layer_count: usize,
}

impl Default for ChunkAggregationConfig {
    fn default() -> Self {
        ChunkAggregationConfig {
            chunk_len: 512,
            overlap: 0.5,
            layer_count: 3,
        }
    }
}

impl ChunkAggregationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chunk_len == 0 {
            return Err(TextError::Config("chunk_len must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(TextError::Config(format!(
                "overlap {} outside [0, 1)",
                self.overlap
            )));
        }
        if self.layer_count == 0 {
            return Err(TextError::Config("layer_count must be at least 1".into()));
        }
        Ok(())
    }

    /// Tokens shared by consecutive full windows.
    pub fn overlap_tokens(&self) -> usize {
        (self.chunk_len as f64 * self.overlap).ceil() as usize
    }

    pub fn step(&self) -> usize {
        self.chunk_len.saturating_sub(self.overlap_tokens()).max(1)
    }
}

/// Sliding windows `[start, end)` over `n_tokens`; the last window may be
/// shorter than `chunk_len`.
pub fn chunk_indices(n_tokens: usize, cfg: &ChunkAggregationConfig) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let step = cfg.step();
    let mut start = 0;
    while start < n_tokens {
        let end = (start + cfg.chunk_len).min(n_tokens);
        out.push((start, end));
        if end == n_tokens {
            break;
        }
        start += step;
    }
    out
}

/// Mean then population std over every (chunk, layer) vector, concatenated.
pub fn aggregate_chunks(
    per_chunk_layers: &[Vec<Vec<f64>>],
    cfg: &ChunkAggregationConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let vectors: Vec<&Vec<f64>> = per_chunk_layers.iter().flatten().collect();
    let Some(first) = vectors.first() else {
        return Err(TextError::Config("no chunk vectors to aggregate".into()));
    };
    let d = first.len();
    for chunk in per_chunk_layers {
        if chunk.len() != cfg.layer_count {
            return Err(TextError::Config(format!(
                "chunk has {} layers, expected {}",
                chunk.len(),
                cfg.layer_count
            )));
        }
        for v in chunk {
            if v.len() != d {
                return Err(TextError::Dimension {
                    expected: d,
                    found: v.len(),
                });
            }
        }
    }
    let n = vectors.len() as f64;
    let mut mean = vec![0.0; d];
    for v in &vectors {
        for (m, x) in mean.iter_mut().zip(v.iter()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for v in &vectors {
        for ((s, x), m) in var.iter_mut().zip(v.iter()).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt());
    Ok(mean.iter().copied().chain(std).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(tokens: &[&str]) -> TokenStream {
        TokenStream {
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            variant: TokenVariant::Stripped,
        }
    }

    #[test]
    fn tokenizer_contractions_and_punctuation() {
        let s = preprocess("He's lovely!", TokenVariant::Stripped);
        assert_eq!(s.tokens, ["he", "'s", "lovely"]);
        let p = preprocess("He's lovely!", TokenVariant::WithPunctuation);
        assert_eq!(p.tokens, ["he", "'s", "lovely", "!"]);
        assert!(preprocess("", TokenVariant::Stripped).is_empty());
        assert_eq!(
            preprocess("  She DOESN'T   sleep, ever. ", TokenVariant::Stripped).tokens,
            ["she", "does", "n't", "sleep", "ever"]
        );
        assert_eq!(
            preprocess("well-known", TokenVariant::WithPunctuation).tokens,
            ["well", "-", "known"]
        );
    }

    #[test]
    fn stripped_tokens_have_no_punctuation() {
        let s = preprocess("Oh... well?! (yes) \u{2014} \"fine\"", TokenVariant::Stripped);
        assert_eq!(s.tokens, ["oh", "well", "yes", "fine"]);
    }

    #[test]
    fn tfidf_fit_degenerate_cases() {
        let m = fit_tfidf(&[doc(&["a"])]).unwrap();
        assert_eq!(m.idf, [1.0]);
        let m = fit_tfidf(&[doc(&[]), doc(&["a"])]).unwrap();
        assert_eq!(m.fitted_on, 2);
        assert_eq!(m.vocabulary.keys().collect::<Vec<_>>(), ["a"]);
        assert!(fit_tfidf(&[doc(&[]), doc(&[])]).is_err());
        assert!(fit_tfidf(&[]).is_err());
    }

    #[test]
    fn tfidf_oov_and_singleton() {
        let m = fit_tfidf(&[doc(&["a", "b"]), doc(&["a"])]).unwrap();
        assert_eq!(transform_tfidf(&m, &doc(&["zzz", "qq"])), [0.0, 0.0]);
        let single = fit_tfidf(&[doc(&["a"])]).unwrap();
        assert_eq!(transform_tfidf(&single, &doc(&["a"])), [1.0]);
    }

    #[test]
    fn embeddings_loading() {
        let p = Path::new("e.txt");
        let t = parse_embeddings("a 1 0\nb 0 1\n", p).unwrap();
        assert_eq!(t.dimension, 2);
        assert_eq!(t.vectors.len(), 2);
        let h = parse_embeddings("2 2\na 1 0\nb 0 1\n", p).unwrap();
        assert_eq!(h, t);
        match parse_embeddings("a 1 0\nb 1\n", p) {
            Err(TextError::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_embeddings("a 1 x\n", p),
            Err(TextError::Format { line: 1, .. })
        ));
    }

    #[test]
    fn embedding_means() {
        let t = parse_embeddings("a 1 0\nb 0 1\n", Path::new("e")).unwrap();
        assert_eq!(embed_document(&doc(&["a"]), &t), [1.0, 0.0]);
        assert_eq!(embed_document(&doc(&["a", "b"]), &t), [0.5, 0.5]);
        assert_eq!(embed_document(&doc(&["a", "zzz"]), &t), [1.0, 0.0]);
        assert_eq!(embed_document(&doc(&["zzz"]), &t), [0.0, 0.0]);
    }

    #[test]
    fn chunk_windows() {
        let c = ChunkAggregationConfig::default();
        assert_eq!(chunk_indices(512, &c), [(0, 512)]);
        assert_eq!(chunk_indices(768, &c), [(0, 512), (256, 768)]);
        assert_eq!(
            chunk_indices(1300, &c),
            [(0, 512), (256, 768), (512, 1024), (768, 1280), (1024, 1300)]
        );
        assert!(chunk_indices(0, &c).is_empty());
        assert_eq!(chunk_indices(10, &c), [(0, 10)]);
    }

    #[test]
    fn chunk_aggregation() {
        let c = ChunkAggregationConfig::default();
        let out = aggregate_chunks(&[vec![vec![1.0, 1.0], vec![3.0, 3.0], vec![5.0, 5.0]]], &c)
            .unwrap();
        let sd = (8.0f64 / 3.0).sqrt();
        assert_eq!(&out[..2], &[3.0, 3.0]);
        assert!((out[2] - sd).abs() < 1e-12 && (out[3] - sd).abs() < 1e-12);
        assert!((sd - 1.633).abs() < 1e-3);

        let v = vec![0.25, -2.0];
        let same = aggregate_chunks(&[vec![v.clone(); 3], vec![v.clone(); 3]], &c).unwrap();
        assert_eq!(same, [0.25, -2.0, 0.0, 0.0]);

        let mismatch = aggregate_chunks(
            &[vec![vec![0.0; 2]; 3], vec![vec![0.0; 3]; 3]],
            &c,
        );
        assert!(matches!(mismatch, Err(TextError::Dimension { .. })));
    }
}
