//! Seeded synthetic interview corpus with a controllable warmth signal.
//!
//! Caregiver speech is a harmonic stack whose mean F0 is
//! `140 + speaker offset + 25·class·strength` Hz and whose
//! amplitude-modulation depth grows with class, so both pitch and energy
//! statistics carry the label. Each caregiver has their own pitch offset
//! (sd 12 Hz), which the label has to be read through. The transcript draws
//! each token from a class-specific keyword pool with probability
//! `KEYWORD_RATE·strength`, otherwise from a shared pool. With strength 0
//! neither modality depends on the label.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::acoustic::{self, Signal, ANALYSIS_RATE};
use crate::corpus::{
    self, LabelTable, MergeScheme, Speaker, Subject, TopicVocabulary, TwinLabels, Utterance,
    UtteranceTag, Warmth,
};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Audio(#[from] acoustic::AcousticError),
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
}

/// Six-way priors whose default three-way merge gives a 33/32/9 split over
/// 74 samples.
pub const DEFAULT_PRIORS: [f64; 6] = [0.223, 0.223, 0.216, 0.216, 0.061, 0.061];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_interviews: usize,
    pub signal_strength: f64,
    /// Speech-to-white-noise ratio in dB.
    pub acoustic_noise_db: f64,
    #[serde(default = "default_priors")]
    pub class_priors: [f64; 6],
    pub seed: u64,
    #[serde(default)]
    pub merge: MergeScheme,
}

/// Per-token probability of a class keyword at strength 1.
pub const KEYWORD_RATE: f64 = 0.2;
const SPEAKER_F0_SD: f64 = 12.0;
const UTTERANCE_F0_SD: f64 = 6.0;

fn default_priors() -> [f64; 6] {
    DEFAULT_PRIORS
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_interviews: 37,
            signal_strength: 1.0,
            acoustic_noise_db: 20.0,
            class_priors: DEFAULT_PRIORS,
            seed: 0,
            merge: MergeScheme::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        if self.n_interviews < 1 {
            return bad("n_interviews must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.signal_strength) {
            return bad(format!("signal_strength {} outside [0, 1]", self.signal_strength));
        }
        if !self.acoustic_noise_db.is_finite() {
            return bad("acoustic_noise_db must be finite".into());
        }
        if self.class_priors.iter().any(|p| !(*p >= 0.0)) {
            return bad("class priors must be non-negative".into());
        }
        let total: f64 = self.class_priors.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("class priors sum to {total}, not 1"));
        }
        Ok(())
    }
}

pub fn interview_id(index: usize) -> String {
    format!("iv{index:04}")
}

fn interview_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn draw_labels(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> TwinLabels {
    let dist = WeightedIndex::new(cfg.class_priors).expect("validated priors");
    TwinLabels {
        t1: dist.sample(rng) as u8,
        t2: dist.sample(rng) as u8,
    }
}

/// The six-way labels `generate_corpus` would assign, without rendering
/// audio or text.
pub fn sample_labels(cfg: &SynthConfig) -> Result<Vec<TwinLabels>, SynthError> {
    cfg.validate()?;
    Ok((0..cfg.n_interviews)
        .map(|i| draw_labels(cfg, &mut interview_rng(cfg.seed, i)))
        .collect())
}

const SHARED_WORDS: [&str; 40] = [
    "she", "he", "is", "was", "the", "a", "and", "when", "with", "at", "home", "school",
    "always", "sometimes", "we", "they", "day", "morning", "went", "goes", "likes", "got",
    "about", "then", "just", "really", "quite", "time", "little", "other", "one", "out",
    "bit", "say", "think", "know", "all", "very", "now", "there",
];

const CLASS_WORDS: [[&str; 12]; 3] = [
    [
        "difficult", "moody", "annoying", "stubborn", "tiring", "naughty", "whines",
        "trouble", "fussy", "demanding", "cries", "hard",
    ],
    [
        "fine", "okay", "normal", "usual", "alright", "average", "ordinary", "steady",
        "settled", "regular", "decent", "sensible",
    ],
    [
        "lovely", "adore", "wonderful", "cuddly", "sweet", "joy", "gorgeous", "proud",
        "darling", "precious", "delightful", "affectionate",
    ],
];

const QUESTIONS: [&str; 6] = [
    "Can you tell me about them?",
    "How do they get on?",
    "What are they like?",
    "And how was that for you?",
    "Could you say a bit more?",
    "How do you feel about that?",
];

/// Class position used for pitch/energy: the twin's class, or the mean of
/// both twins' classes for shared utterances.
fn class_level(subject: Subject, classes: [Warmth; 2]) -> f64 {
    match subject {
        Subject::Twin1 => classes[0].index() as f64,
        Subject::Twin2 => classes[1].index() as f64,
        Subject::Both => (classes[0].index() + classes[1].index()) as f64 / 2.0,
    }
}

fn caregiver_text(
    rng: &mut ChaCha8Rng,
    subject: Subject,
    classes: [Warmth; 2],
    strength: f64,
) -> String {
    let n = rng.gen_range(9..15);
    let mut words: Vec<&str> = Vec::with_capacity(n);
    for _ in 0..n {
        if rng.gen::<f64>() < KEYWORD_RATE * strength {
            let class = match subject {
                Subject::Twin1 => classes[0],
                Subject::Twin2 => classes[1],
                Subject::Both => classes[rng.gen_range(0..2)],
            };
            words.push(CLASS_WORDS[class.index()].choose(rng).unwrap());
        } else {
            words.push(SHARED_WORDS.choose(rng).unwrap());
        }
    }
    let mut s = String::new();
    for (i, w) in words.iter().enumerate() {
        if i == 0 {
            let mut c = w.chars();
            s.extend(c.next().map(|f| f.to_ascii_uppercase()));
            s.push_str(c.as_str());
        } else {
            s.push_str(if rng.gen::<f64>() < 0.08 { ", " } else { " " });
            s.push_str(w);
        }
    }
    s.push(if rng.gen::<f64>() < 0.15 { '!' } else { '.' });
    s
}

/// Harmonic stack with slow vibrato and amplitude modulation, added into
/// `out` starting at sample `start`.
fn render_voice(
    out: &mut [f64],
    start: usize,
    len: usize,
    f0: f64,
    am_depth: f64,
    rng: &mut ChaCha8Rng,
) {
    let sr = ANALYSIS_RATE as f64;
    let phases: Vec<f64> = (0..10).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let am_rate = rng.gen_range(3.0..5.0);
    let am_phase = rng.gen_range(0.0..2.0 * PI);
    let ramp = (0.02 * sr) as usize;
    let mut phase = 0.0;
    for i in 0..len {
        let t = i as f64 / sr;
        let f = f0 * (1.0 + 0.01 * (2.0 * PI * 5.0 * t).sin());
        phase += 2.0 * PI * f / sr;
        let mut v = 0.0;
        for (h, ph) in phases.iter().enumerate() {
            let k = (h + 1) as f64;
            if k * f < sr / 2.0 {
                v += (k * phase + ph).sin() / k;
            }
        }
        let env = 1.0 + am_depth * (2.0 * PI * am_rate * t + am_phase).sin();
        let edge = (i.min(len - 1 - i) as f64 / ramp as f64).min(1.0);
        out[start + i] += 0.2 * env * edge * v;
    }
}

struct RenderedInterview {
    labels: TwinLabels,
    utterances: Vec<Utterance>,
    audio: Vec<f64>,
}

fn render_interview(
    cfg: &SynthConfig,
    index: usize,
    vocab: &TopicVocabulary,
) -> Result<RenderedInterview, SynthError> {
    let mut rng = interview_rng(cfg.seed, index);
    let labels = draw_labels(cfg, &mut rng);
    let classes = [
        cfg.merge.merge(labels.t1 as i64)?,
        cfg.merge.merge(labels.t2 as i64)?,
    ];
    let s = cfg.signal_strength;
    let sr = ANALYSIS_RATE as f64;

    let mut subjects = vec![
        Subject::Twin1,
        Subject::Twin2,
        Subject::Twin1,
        Subject::Twin2,
        Subject::Twin1,
        Subject::Twin2,
        Subject::Both,
        Subject::Both,
    ];
    subjects.shuffle(&mut rng);

    struct Planned {
        start: usize,
        len: usize,
        f0: f64,
        am: f64,
    }
    let mut plan: Vec<Planned> = Vec::new();
    let mut utterances = Vec::new();
    let mut cursor = (0.3 * sr) as usize;
    let jitter = Normal::new(0.0, UTTERANCE_F0_SD).unwrap();
    let speaker_f0 = 140.0 + Normal::new(0.0, SPEAKER_F0_SD).unwrap().sample(&mut rng);
    let speaker_am = rng.gen_range(0.1..0.2);
    for (turn, &subject) in subjects.iter().enumerate() {
        let topic = vocab.topics()[rng.gen_range(0..vocab.len())].clone();
        if turn % 2 == 0 {
            let len = (rng.gen_range(0.6..0.9) * sr) as usize;
            utterances.push(Utterance {
                start_s: cursor as f64 / sr,
                end_s: (cursor + len) as f64 / sr,
                tag: UtteranceTag {
                    speaker: Speaker::Interviewer,
                    subject,
                    topic: topic.clone(),
                },
                text: QUESTIONS.choose(&mut rng).unwrap().to_string(),
            });
            plan.push(Planned {
                start: cursor,
                len,
                f0: 110.0 + jitter.sample(&mut rng),
                am: 0.2,
            });
            cursor += len + (0.2 * sr) as usize;
        }
        let level = class_level(subject, classes);
        let len = (rng.gen_range(1.2..1.8) * sr) as usize;
        let f0 = speaker_f0 + 25.0 * level * s + jitter.sample(&mut rng);
        let am = speaker_am + 0.25 * level * s;
        utterances.push(Utterance {
            start_s: cursor as f64 / sr,
            end_s: (cursor + len) as f64 / sr,
            tag: UtteranceTag {
                speaker: Speaker::Caregiver,
                subject,
                topic,
            },
            text: caregiver_text(&mut rng, subject, classes, s),
        });
        plan.push(Planned {
            start: cursor,
            len,
            f0,
            am,
        });
        cursor += len + (0.25 * sr) as usize;
    }
    let total = cursor + (0.3 * sr) as usize;
    let mut audio = vec![0.0; total];
    for p in &plan {
        render_voice(&mut audio, p.start, p.len, p.f0, p.am, &mut rng);
    }
    let speech: Vec<f64> = plan
        .iter()
        .flat_map(|p| audio[p.start..p.start + p.len].iter().copied())
        .collect();
    let power = speech.iter().map(|v| v * v).sum::<f64>() / speech.len() as f64;
    let noise_sd = (power / 10f64.powf(cfg.acoustic_noise_db / 10.0)).sqrt();
    let noise = Normal::new(0.0, noise_sd).unwrap();
    for v in &mut audio {
        *v += noise.sample(&mut rng);
    }
    let peak = audio.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.95 {
        audio.iter_mut().for_each(|v| *v *= 0.95 / peak);
    }
    Ok(RenderedInterview {
        labels,
        utterances,
        audio,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), SynthError> {
    fs::write(path, bytes).map_err(|source| SynthError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Writes `labels.csv`, `topics.txt`, `synth.toml` and one
/// `<id>.jsonl` + `<id>.wav` pair per interview into `out`.
pub fn generate_corpus(cfg: &SynthConfig, out: &Path) -> Result<(), SynthError> {
    use rayon::prelude::*;

    cfg.validate()?;
    fs::create_dir_all(out).map_err(|source| SynthError::Io {
        path: out.to_owned(),
        source,
    })?;
    let vocab = TopicVocabulary::default();
    write(&out.join("topics.txt"), vocab.to_text().as_bytes())?;
    write(
        &out.join("synth.toml"),
        toml::to_string(cfg).expect("config serializes").as_bytes(),
    )?;
    let labels = (0..cfg.n_interviews)
        .into_par_iter()
        .map(|i| {
            let iv = render_interview(cfg, i, &vocab)?;
            let id = interview_id(i);
            write(
                &out.join(format!("{id}.jsonl")),
                corpus::write_transcript(&iv.utterances).as_bytes(),
            )?;
            let sig = Signal::new(iv.audio, ANALYSIS_RATE)?;
            acoustic::write_wav(&out.join(format!("{id}.wav")), &sig)?;
            Ok((id, iv.labels))
        })
        .collect::<Result<Vec<_>, SynthError>>()?;
    let mut table = LabelTable::default();
    for (id, l) in labels {
        table.insert(id, l)?;
    }
    write(&out.join("labels.csv"), table.to_csv().as_bytes())
}
