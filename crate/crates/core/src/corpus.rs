//! Tagged-transcript ingestion.
//!
//! An interview is a JSON-lines transcript (one utterance per line) plus a
//! row pair in a shared label table. Every utterance carries a tag of the
//! form `<speaker>-<subject>-<topic>`, e.g. `mum-t1-away`. Splitting an
//! interview by twin yields two classification samples, each holding the
//! caregiver utterances that concern that twin (or both twins).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Topics used when no vocabulary file is given. Nineteen topics, which
/// with the two speakers gives the 38-tag schema.
pub const DEFAULT_TOPICS: [&str; 19] = [
    "general",
    "support",
    "pregnancy",
    "birth",
    "early",
    "away",
    "temperament",
    "behaviour",
    "health",
    "school",
    "friends",
    "siblings",
    "discipline",
    "play",
    "sleep",
    "feeding",
    "worry",
    "proud",
    "future",
];

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("tag schema error in {component} of {tag:?}: {reason}")]
    Schema {
        tag: String,
        component: &'static str,
        reason: String,
    },
    #[error("{path}:{line}: {reason}")]
    Ingest {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("no labels for interview {0:?} (need both t1 and t2)")]
    MissingLabels(String),
    #[error("warmth code {0} outside 0..=5")]
    LabelOutOfRange(i64),
    #[error("invalid merge scheme: {0}")]
    MergeScheme(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Speaker {
    Interviewer,
    Caregiver,
}

impl Speaker {
    pub fn code(self) -> &'static str {
        match self {
            Speaker::Interviewer => "int",
            Speaker::Caregiver => "mum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subject {
    Twin1,
    Twin2,
    Both,
}

impl Subject {
    pub fn code(self) -> &'static str {
        match self {
            Subject::Twin1 => "t1",
            Subject::Twin2 => "t2",
            Subject::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Twin {
    T1,
    T2,
}

impl Twin {
    pub const BOTH: [Twin; 2] = [Twin::T1, Twin::T2];

    pub fn code(self) -> &'static str {
        match self {
            Twin::T1 => "t1",
            Twin::T2 => "t2",
        }
    }

    pub fn subject(self) -> Subject {
        match self {
            Twin::T1 => Subject::Twin1,
            Twin::T2 => Subject::Twin2,
        }
    }
}

impl FromStr for Twin {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "t1" => Ok(Twin::T1),
            "t2" => Ok(Twin::T2),
            other => Err(format!("unknown twin {other:?}")),
        }
    }
}

/// The controlled topic vocabulary. Order is preserved from the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicVocabulary {
    topics: Vec<String>,
    index: HashSet<String>,
}

impl TopicVocabulary {
    pub fn new<I, S>(topics: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Vec::new();
        let mut index = HashSet::new();
        for t in topics {
            let t: String = t.into();
            if t.is_empty() || t.contains('-') || t.chars().any(char::is_whitespace) {
                return Err(CorpusError::Schema {
                    tag: t.clone(),
                    component: "topic",
                    reason: "topic identifiers must be non-empty, without '-' or whitespace".into(),
                });
            }
            if !index.insert(t.clone()) {
                return Err(CorpusError::Schema {
                    tag: t,
                    component: "topic",
                    reason: "duplicate topic in vocabulary".into(),
                });
            }
            out.push(t);
        }
        Ok(TopicVocabulary { topics: out, index })
    }

    /// Reads one topic per line; blank lines and `#` comments are skipped.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_owned),
        )
    }

    pub fn contains(&self, topic: &str) -> bool {
        self.index.contains(topic)
    }

    pub fn topics(&self) -> &[String] {
        &self.topics
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    /// Every tag the schema accepts for one speaker-subject cross product.
    pub fn tag_set(&self) -> Vec<UtteranceTag> {
        let mut tags = Vec::new();
        for speaker in [Speaker::Interviewer, Speaker::Caregiver] {
            for subject in [Subject::Twin1, Subject::Twin2, Subject::Both] {
                for topic in &self.topics {
                    tags.push(UtteranceTag {
                        speaker,
                        subject,
                        topic: topic.clone(),
                    });
                }
            }
        }
        tags
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.topics {
            s.push_str(t);
            s.push('\n');
        }
        s
    }
}

impl Default for TopicVocabulary {
    fn default() -> Self {
        TopicVocabulary::new(DEFAULT_TOPICS).expect("built-in topics are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UtteranceTag {
    pub speaker: Speaker,
    pub subject: Subject,
    pub topic: String,
}

impl fmt::Display for UtteranceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.speaker.code(), self.subject.code(), self.topic)
    }
}

pub fn parse_tag(s: &str, vocab: &TopicVocabulary) -> Result<UtteranceTag> {
    let schema = |component, reason: String| CorpusError::Schema {
        tag: s.to_owned(),
        component,
        reason,
    };
    let mut parts = s.splitn(3, '-');
    let (speaker, subject, topic) = match (parts.next(), parts.next(), parts.next()) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => {
            return Err(schema(
                "shape",
                "expected <speaker>-<subject>-<topic>".into(),
            ))
        }
    };
    let speaker = match speaker {
        "int" => Speaker::Interviewer,
        "mum" => Speaker::Caregiver,
        other => return Err(schema("speaker", format!("unknown speaker {other:?}"))),
    };
    let subject = match subject {
        "t1" => Subject::Twin1,
        "t2" => Subject::Twin2,
        "both" => Subject::Both,
        other => return Err(schema("subject", format!("unknown subject {other:?}"))),
    };
    if !vocab.contains(topic) {
        return Err(schema("topic", format!("{topic:?} not in topic vocabulary")));
    }
    Ok(UtteranceTag {
        speaker,
        subject,
        topic: topic.to_owned(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub start_s: f64,
    pub end_s: f64,
    pub tag: UtteranceTag,
    pub text: String,
}

/// Three-way warmth class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Warmth {
    Low,
    Moderate,
    High,
}

impl Warmth {
    pub const ALL: [Warmth; 3] = [Warmth::Low, Warmth::Moderate, Warmth::High];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Warmth> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Warmth::Low => "low",
            Warmth::Moderate => "moderate",
            Warmth::High => "high",
        }
    }
}

impl FromStr for Warmth {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "low" => Ok(Warmth::Low),
            "moderate" => Ok(Warmth::Moderate),
            "high" => Ok(Warmth::High),
            other => Err(format!("unknown warmth class {other:?}")),
        }
    }
}

/// Total, monotone map from the six-way code to the three-way class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[Warmth; 6]", into = "[Warmth; 6]")]
pub struct MergeScheme {
    mapping: [Warmth; 6],
}

impl MergeScheme {
    pub fn new(mapping: [Warmth; 6]) -> Result<Self> {
        if mapping.windows(2).any(|w| w[1] < w[0]) {
            return Err(CorpusError::MergeScheme(format!(
                "mapping {:?} is not monotone",
                mapping.map(Warmth::name)
            )));
        }
        Ok(MergeScheme { mapping })
    }

    pub fn mapping(&self) -> &[Warmth; 6] {
        &self.mapping
    }

    pub fn merge(&self, label6: i64) -> Result<Warmth> {
        usize::try_from(label6)
            .ok()
            .and_then(|i| self.mapping.get(i).copied())
            .ok_or(CorpusError::LabelOutOfRange(label6))
    }
}

impl Default for MergeScheme {
    /// {0,1} → low, {2,3} → moderate, {4,5} → high.
    fn default() -> Self {
        use Warmth::*;
        MergeScheme {
            mapping: [Low, Low, Moderate, Moderate, High, High],
        }
    }
}

impl TryFrom<[Warmth; 6]> for MergeScheme {
    type Error = CorpusError;

    fn try_from(m: [Warmth; 6]) -> Result<Self> {
        MergeScheme::new(m)
    }
}

impl From<MergeScheme> for [Warmth; 6] {
    fn from(m: MergeScheme) -> Self {
        m.mapping
    }
}

pub fn merge_labels(label6: i64, scheme: &MergeScheme) -> Result<Warmth> {
    scheme.merge(label6)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwinLabels {
    pub t1: u8,
    pub t2: u8,
}

impl TwinLabels {
    pub fn get(&self, twin: Twin) -> u8 {
        match twin {
            Twin::T1 => self.t1,
            Twin::T2 => self.t2,
        }
    }
}

/// Per-interview six-way warmth codes, as read from the label CSV.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelTable {
    rows: BTreeMap<String, TwinLabels>,
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    interview_id: String,
    twin: String,
    warmth6: i64,
}

impl LabelTable {
    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|source| CorpusError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_reader(file, path)
    }

    pub fn from_reader<R: std::io::Read>(reader: R, path: &Path) -> Result<Self> {
        let ingest = |line: usize, reason: String| CorpusError::Ingest {
            path: path.to_owned(),
            line,
            reason,
        };
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers().map_err(|e| ingest(1, e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["interview_id", "twin", "warmth6"] {
            return Err(ingest(
                1,
                format!("expected header interview_id,twin,warmth6, found {headers:?}"),
            ));
        }
        let mut partial: BTreeMap<String, [Option<u8>; 2]> = BTreeMap::new();
        for (i, rec) in rdr.deserialize::<LabelRow>().enumerate() {
            let line = i + 2;
            let row = rec.map_err(|e| ingest(line, e.to_string()))?;
            let twin: Twin = row.twin.parse().map_err(|e: String| ingest(line, e))?;
            if !(0..=5).contains(&row.warmth6) {
                return Err(ingest(
                    line,
                    format!("warmth code {} outside 0..=5", row.warmth6),
                ));
            }
            let slot = &mut partial.entry(row.interview_id.clone()).or_default()[twin as usize];
            if slot.is_some() {
                return Err(ingest(
                    line,
                    format!("duplicate label for {} {}", row.interview_id, twin.code()),
                ));
            }
            *slot = Some(row.warmth6 as u8);
        }
        let mut rows = BTreeMap::new();
        for (id, pair) in partial {
            match pair {
                [Some(t1), Some(t2)] => {
                    rows.insert(id, TwinLabels { t1, t2 });
                }
                _ => return Err(CorpusError::MissingLabels(id)),
            }
        }
        Ok(LabelTable { rows })
    }

    pub fn insert(&mut self, id: impl Into<String>, labels: TwinLabels) -> Result<()> {
        for code in [labels.t1, labels.t2] {
            if code > 5 {
                return Err(CorpusError::LabelOutOfRange(code as i64));
            }
        }
        self.rows.insert(id.into(), labels);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<TwinLabels> {
        self.rows.get(id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("interview_id,twin,warmth6\n");
        for (id, l) in &self.rows {
            s.push_str(&format!("{id},t1,{}\n{id},t2,{}\n", l.t1, l.t2));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interview {
    pub id: String,
    pub audio_path: PathBuf,
    pub utterances: Vec<Utterance>,
    pub labels6: TwinLabels,
}

#[derive(Debug, Deserialize)]
struct TranscriptLine {
    start_s: f64,
    end_s: f64,
    tag: String,
    text: String,
}

/// Parses `<dir>/<id>.jsonl`; the audio is expected at `<dir>/<id>.wav`.
pub fn parse_transcript(
    path: &Path,
    labels: &LabelTable,
    vocab: &TopicVocabulary,
) -> Result<Interview> {
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CorpusError::Ingest {
            path: path.to_owned(),
            line: 0,
            reason: "transcript file name is not valid UTF-8".into(),
        })?
        .to_owned();
    let labels6 = labels
        .get(&id)
        .ok_or_else(|| CorpusError::MissingLabels(id.clone()))?;
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })?;
    let utterances = parse_transcript_str(&text, path, vocab)?;
    Ok(Interview {
        audio_path: path.with_extension("wav"),
        id,
        utterances,
        labels6,
    })
}

pub fn parse_transcript_str(
    text: &str,
    path: &Path,
    vocab: &TopicVocabulary,
) -> Result<Vec<Utterance>> {
    let mut out: Vec<Utterance> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let ingest = |reason: String| CorpusError::Ingest {
            path: path.to_owned(),
            line,
            reason,
        };
        if raw.trim().is_empty() {
            continue;
        }
        let rec: TranscriptLine = serde_json::from_str(raw).map_err(|e| ingest(e.to_string()))?;
        if !(rec.start_s.is_finite() && rec.end_s.is_finite()) || rec.start_s < 0.0 {
            return Err(ingest(format!(
                "invalid timing start_s={} end_s={}",
                rec.start_s, rec.end_s
            )));
        }
        if rec.end_s <= rec.start_s {
            return Err(ingest(format!(
                "end_s {} is not after start_s {}",
                rec.end_s, rec.start_s
            )));
        }
        if let Some(prev) = out.last() {
            if rec.start_s < prev.start_s {
                return Err(ingest(format!(
                    "start_s {} precedes previous utterance start {}",
                    rec.start_s, prev.start_s
                )));
            }
        }
        let tag = parse_tag(&rec.tag, vocab).map_err(|e| ingest(e.to_string()))?;
        out.push(Utterance {
            start_s: rec.start_s,
            end_s: rec.end_s,
            tag,
            text: rec.text,
        });
    }
    Ok(out)
}

pub fn write_transcript(utterances: &[Utterance]) -> String {
    let mut s = String::new();
    for u in utterances {
        let line = serde_json::json!({
            "start_s": u.start_s,
            "end_s": u.end_s,
            "tag": u.tag.to_string(),
            "text": u.text,
        });
        s.push_str(&line.to_string());
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinSample {
    pub sample_id: String,
    pub source_interview: String,
    pub twin: Twin,
    pub caregiver_utterances: Vec<Utterance>,
    pub label6: u8,
    pub label3: Warmth,
}

impl TwinSample {
    /// Caregiver speech spans in seconds.
    pub fn segments(&self) -> Vec<(f64, f64)> {
        self.caregiver_utterances
            .iter()
            .map(|u| (u.start_s, u.end_s))
            .collect()
    }

    /// All utterance texts joined in transcript order.
    pub fn text(&self) -> String {
        self.caregiver_utterances
            .iter()
            .map(|u| u.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn split_by_twin(iv: &Interview, scheme: &MergeScheme) -> Result<(TwinSample, TwinSample)> {
    let make = |twin: Twin| -> Result<TwinSample> {
        let utts: Vec<Utterance> = iv
            .utterances
            .iter()
            .filter(|u| {
                u.tag.speaker == Speaker::Caregiver
                    && (u.tag.subject == twin.subject() || u.tag.subject == Subject::Both)
            })
            .cloned()
            .collect();
        if utts.is_empty() {
            log::warn!(
                "interview {} has no caregiver utterances for {}",
                iv.id,
                twin.code()
            );
        }
        let label6 = iv.labels6.get(twin);
        Ok(TwinSample {
            sample_id: format!("{}_{}", iv.id, twin.code()),
            source_interview: iv.id.clone(),
            twin,
            caregiver_utterances: utts,
            label6,
            label3: scheme.merge(label6 as i64)?,
        })
    };
    Ok((make(Twin::T1)?, make(Twin::T2)?))
}

/// A loaded corpus directory: `labels.csv`, optional `topics.txt`, and one
/// `<id>.jsonl` (+ `<id>.wav`) per interview listed in the label table.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub dir: PathBuf,
    pub vocabulary: TopicVocabulary,
    pub interviews: Vec<Interview>,
}

impl Corpus {
    pub fn load(dir: &Path) -> Result<Self> {
        let topics = dir.join("topics.txt");
        let vocabulary = if topics.exists() {
            TopicVocabulary::load(&topics)?
        } else {
            TopicVocabulary::default()
        };
        let labels = LabelTable::load(&dir.join("labels.csv"))?;
        Self::load_with(dir, &labels, vocabulary)
    }

    pub fn load_with(dir: &Path, labels: &LabelTable, vocabulary: TopicVocabulary) -> Result<Self> {
        let interviews = labels
            .ids()
            .map(|id| parse_transcript(&dir.join(format!("{id}.jsonl")), labels, &vocabulary))
            .collect::<Result<Vec<_>>>()?;
        Ok(Corpus {
            dir: dir.to_owned(),
            vocabulary,
            interviews,
        })
    }

    pub fn samples(&self, scheme: &MergeScheme) -> Result<Vec<TwinSample>> {
        let mut out = Vec::with_capacity(self.interviews.len() * 2);
        for iv in &self.interviews {
            let (a, b) = split_by_twin(iv, scheme)?;
            out.push(a);
            out.push(b);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> TopicVocabulary {
        TopicVocabulary::default()
    }

    fn utt(start: f64, tag: &str) -> Utterance {
        Utterance {
            start_s: start,
            end_s: start + 1.0,
            tag: parse_tag(tag, &vocab()).unwrap(),
            text: tag.to_owned(),
        }
    }

    #[test]
    fn parses_documented_tags() {
        let t = parse_tag("mum-t1-away", &vocab()).unwrap();
        assert_eq!(t.speaker, Speaker::Caregiver);
        assert_eq!(t.subject, Subject::Twin1);
        assert_eq!(t.topic, "away");
        let t = parse_tag("int-both-support", &vocab()).unwrap();
        assert_eq!(t.speaker, Speaker::Interviewer);
        assert_eq!(t.subject, Subject::Both);
        assert_eq!(t.topic, "support");
    }

    #[test]
    fn tag_errors_name_component() {
        let comp = |s: &str| match parse_tag(s, &vocab()) {
            Err(CorpusError::Schema { component, .. }) => component,
            other => panic!("expected schema error, got {other:?}"),
        };
        assert_eq!(comp("dad-t1-away"), "speaker");
        assert_eq!(comp("mum-t3-away"), "subject");
        assert_eq!(comp("mum-t1-holidays"), "topic");
        assert_eq!(comp("mum-t1"), "shape");
        assert_eq!(comp(""), "shape");
    }

    #[test]
    fn default_vocabulary_gives_38_speaker_topic_tags() {
        let v = vocab();
        assert_eq!(v.len(), 19);
        let per_subject = v
            .tag_set()
            .into_iter()
            .filter(|t| t.subject == Subject::Both)
            .count();
        assert_eq!(per_subject, 38);
    }

    #[test]
    fn merge_default_scheme() {
        let s = MergeScheme::default();
        assert_eq!(merge_labels(0, &s).unwrap(), Warmth::Low);
        assert_eq!(merge_labels(3, &s).unwrap(), Warmth::Moderate);
        assert_eq!(merge_labels(5, &s).unwrap(), Warmth::High);
        assert!(matches!(
            merge_labels(6, &s),
            Err(CorpusError::LabelOutOfRange(6))
        ));
        assert!(merge_labels(-1, &s).is_err());
    }

    #[test]
    fn non_monotone_scheme_rejected() {
        use Warmth::*;
        assert!(MergeScheme::new([Low, High, Moderate, Moderate, High, High]).is_err());
        assert!(MergeScheme::new([Low, Low, Low, Low, Low, High]).is_ok());
    }

    #[test]
    fn split_filters_caregiver_speech() {
        let iv = Interview {
            id: "iv".into(),
            audio_path: "iv.wav".into(),
            utterances: vec![
                utt(0.0, "mum-t1-away"),
                utt(1.0, "mum-t2-away"),
                utt(2.0, "mum-both-general"),
                utt(3.0, "int-both-support"),
            ],
            labels6: TwinLabels { t1: 4, t2: 1 },
        };
        let (a, b) = split_by_twin(&iv, &MergeScheme::default()).unwrap();
        let tags = |s: &TwinSample| {
            s.caregiver_utterances
                .iter()
                .map(|u| u.tag.to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(tags(&a), ["mum-t1-away", "mum-both-general"]);
        assert_eq!(tags(&b), ["mum-t2-away", "mum-both-general"]);
        assert_eq!(a.sample_id, "iv_t1");
        assert_eq!(a.label3, Warmth::High);
        assert_eq!(b.label3, Warmth::Low);
    }

    #[test]
    fn interviewer_only_interview_gives_empty_samples() {
        let iv = Interview {
            id: "x".into(),
            audio_path: "x.wav".into(),
            utterances: vec![utt(0.0, "int-both-support"), utt(1.0, "int-t1-away")],
            labels6: TwinLabels { t1: 0, t2: 0 },
        };
        let (a, b) = split_by_twin(&iv, &MergeScheme::default()).unwrap();
        assert!(a.caregiver_utterances.is_empty());
        assert!(b.caregiver_utterances.is_empty());
    }

    #[test]
    fn transcript_line_errors() {
        let p = Path::new("t.jsonl");
        let ok = r#"{"start_s":0.0,"end_s":1.0,"tag":"mum-t1-away","text":"hi"}"#;
        let bad_time = r#"{"start_s":3.0,"end_s":2.0,"tag":"mum-t1-away","text":"hi"}"#;
        let text = format!("{ok}\n{ok}\n{bad_time}\n");
        match parse_transcript_str(&text, p, &vocab()) {
            Err(CorpusError::Ingest { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let bad_tag = r#"{"start_s":0.0,"end_s":1.0,"tag":"dad-t1-away","text":"hi"}"#;
        match parse_transcript_str(bad_tag, p, &vocab()) {
            Err(CorpusError::Ingest { line, reason, .. }) => {
                assert_eq!(line, 1);
                assert!(reason.contains("speaker"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
        match parse_transcript_str("{not json", p, &vocab()) {
            Err(CorpusError::Ingest { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decreasing_start_rejected() {
        let a = r#"{"start_s":5.0,"end_s":6.0,"tag":"mum-t1-away","text":""}"#;
        let b = r#"{"start_s":4.0,"end_s":4.5,"tag":"mum-t1-away","text":""}"#;
        let err = parse_transcript_str(&format!("{a}\n{b}"), Path::new("x"), &vocab());
        assert!(matches!(err, Err(CorpusError::Ingest { line: 2, .. })));
    }

    #[test]
    fn label_table_validation() {
        let p = Path::new("labels.csv");
        let ok = "interview_id,twin,warmth6\na,t1,4\na,t2,1\n";
        let t = LabelTable::from_reader(ok.as_bytes(), p).unwrap();
        assert_eq!(t.get("a"), Some(TwinLabels { t1: 4, t2: 1 }));

        let out_of_range = "interview_id,twin,warmth6\na,t1,6\na,t2,1\n";
        assert!(matches!(
            LabelTable::from_reader(out_of_range.as_bytes(), p),
            Err(CorpusError::Ingest { line: 2, .. })
        ));
        let missing = "interview_id,twin,warmth6\na,t1,3\n";
        assert!(matches!(
            LabelTable::from_reader(missing.as_bytes(), p),
            Err(CorpusError::MissingLabels(_))
        ));
        let bad_header = "id,twin,warmth6\na,t1,3\n";
        assert!(LabelTable::from_reader(bad_header.as_bytes(), p).is_err());
    }
}
