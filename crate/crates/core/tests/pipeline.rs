use std::fs;
use std::path::Path;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use warmth::corpus::{Corpus, MergeScheme, Warmth};
use warmth::eval::cv::{CvPlan, CvReport, Grouping};
use warmth::eval::Averaging;
use warmth::experiment::{self, AcousticChoice, Manifest, TextChoice};
use warmth::report;
use warmth::synth::{generate_corpus, sample_labels, SynthConfig};

fn synth(dir: &Path, n: usize, strength: f64, priors: Option<[f64; 6]>, seed: u64) {
    let mut cfg = SynthConfig {
        n_interviews: n,
        signal_strength: strength,
        seed,
        ..SynthConfig::default()
    };
    if let Some(p) = priors {
        cfg.class_priors = p;
    }
    generate_corpus(&cfg, dir).unwrap();
}

fn manifest(corpus: &Path, acoustic: AcousticChoice, text: TextChoice) -> Manifest {
    let mut m = Manifest::parse("output_dir = \"unused\"\ncorpus = \".\"\n", Path::new("m.toml")).unwrap();
    m.corpus = corpus.to_owned();
    m.acoustic = acoustic;
    m.text = text;
    m.standardize = true;
    m
}

#[test]
fn same_seed_gives_byte_identical_corpora() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth(&a, 10, 0.7, None, 42);
    synth(&b, 10, 0.7, None, 42);
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 3 + 2 * 10);
    for name in names {
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap(),
            "{name:?}"
        );
    }
    let c = tmp.path().join("c");
    synth(&c, 10, 0.7, None, 43);
    assert_ne!(
        fs::read(a.join("iv0000.wav")).unwrap(),
        fs::read(c.join("iv0000.wav")).unwrap()
    );
}

#[test]
fn label_frequencies_follow_priors() {
    let cfg = SynthConfig {
        n_interviews: 500,
        ..SynthConfig::default()
    };
    let labels = sample_labels(&cfg).unwrap();
    let mut counts = [0.0f64; 6];
    for l in &labels {
        counts[l.t1 as usize] += 1.0;
        counts[l.t2 as usize] += 1.0;
    }
    let n: f64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(cfg.class_priors)
        .map(|(o, p)| (o - n * p).powi(2) / (n * p))
        .sum();
    let p = 1.0 - ChiSquared::new(5.0).unwrap().cdf(stat);
    assert!(p > 0.001, "chi-square {stat}, p = {p}");
}

#[test]
fn generated_corpus_passes_validation() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), 6, 1.0, None, 3);
    let corpus = Corpus::load(tmp.path()).unwrap();
    assert_eq!(corpus.interviews.len(), 6);
    experiment::check_audio(&corpus).unwrap();
    let samples = corpus.samples(&MergeScheme::default()).unwrap();
    assert_eq!(samples.len(), 12);
    assert!(samples.iter().all(|s| !s.caregiver_utterances.is_empty()));
}

/// Mean `f0_mean` feature per three-way class.
fn f0_by_class(corpus: &Path) -> [f64; 3] {
    let mut m = manifest(corpus, AcousticChoice::Lite, TextChoice::None);
    m.standardize = false;
    let x = experiment::export_features(&m).unwrap();
    let col = x
        .feature_names()
        .iter()
        .position(|n| n.ends_with("f0_mean"))
        .unwrap();
    let c = Corpus::load(corpus).unwrap();
    let samples = c.samples(&MergeScheme::default()).unwrap();
    let mut sum = [0.0; 3];
    let mut n = [0.0; 3];
    for s in &samples {
        let row = x.row_index(&s.sample_id).unwrap();
        sum[s.label3.index()] += x.get(row, col);
        n[s.label3.index()] += 1.0;
    }
    std::array::from_fn(|k| sum[k] / n[k])
}

#[test]
fn pitch_carries_class_only_with_signal() {
    let tmp = tempfile::tempdir().unwrap();
    let uniform = Some([1.0 / 6.0; 6]);
    let (flat, strong) = (tmp.path().join("flat"), tmp.path().join("strong"));
    synth(&flat, 30, 0.0, uniform, 8);
    synth(&strong, 30, 1.0, uniform, 8);
    let f = f0_by_class(&flat);
    let s = f0_by_class(&strong);
    let (lo, hi) = (Warmth::Low.index(), Warmth::High.index());
    // Only speaker and utterance jitter separate the flat classes.
    assert!((f[hi] - f[lo]).abs() < 15.0, "flat {f:?}");
    assert!(s[hi] - s[lo] > 30.0, "strong {s:?}");
    assert!(s[lo] < s[1] && s[1] < s[hi], "strong {s:?}");
}

#[test]
fn interview_grouping_keeps_twins_together() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), 40, 1.0, None, 5);
    let corpus = Corpus::load(tmp.path()).unwrap();
    let samples = corpus.samples(&MergeScheme::default()).unwrap();
    let y: Vec<usize> = samples.iter().map(|s| s.label3.index()).collect();
    let groups: Vec<String> = samples.iter().map(|s| s.source_interview.clone()).collect();
    let plan = CvPlan {
        grouping: Grouping::ByInterview,
        ..CvPlan::default()
    };
    for run in 0..plan.runs {
        let folds = plan.assign(&y, &groups, run).unwrap();
        for i in 0..samples.len() {
            for j in 0..samples.len() {
                if groups[i] == groups[j] {
                    assert_eq!(folds[i], folds[j], "run {run}: {} split", groups[i]);
                }
            }
        }
        for f in 0..plan.k {
            assert!(folds.contains(&f), "run {run}: fold {f} empty");
        }
    }
}

fn check_summary_recomputable(r: &CvReport) {
    let pstd = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
        (m, v.sqrt())
    };
    for c in &r.classifiers {
        for a in Averaging::ALL {
            let run_means: Vec<f64> = c
                .runs
                .iter()
                .map(|run| pstd(&run.folds.iter().map(|f| f.get(a)).collect::<Vec<_>>()).0)
                .collect();
            let (m, s) = pstd(&run_means);
            let (fm, fs) = pstd(&c.fold_scores(a));
            let agg = c.summary.get(a);
            for (got, want) in [(agg.mean, m), (agg.std, s), (agg.fold_mean, fm), (agg.fold_std, fs)] {
                assert!((got - want).abs() <= 1e-12, "{} {a:?}: {got} vs {want}", c.name);
            }
        }
    }
    // The table is printed from the same numbers.
    let table = report::summary_table(r);
    for c in &r.classifiers {
        let w = c.summary.get(Averaging::Weighted);
        assert!(table.contains(&format!("{:.1}({:.1})", 100.0 * w.mean, 100.0 * w.std)));
    }
}

#[test]
fn fusion_beats_text_alone_significantly() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), 100, 0.5, None, 7);
    let text = experiment::evaluate(&manifest(tmp.path(), AcousticChoice::None, TextChoice::TfidfPun)).unwrap();
    let fused = experiment::evaluate(&manifest(tmp.path(), AcousticChoice::Lite, TextChoice::TfidfPun)).unwrap();
    check_summary_recomputable(&text);
    check_summary_recomputable(&fused);
    let cmp = report::compare(&text, &fused, Averaging::Weighted, true, 0.05).unwrap();
    for name in ["logreg", "linsvc"] {
        let row = cmp.rows.iter().find(|r| r.classifier == name).unwrap();
        assert!(row.mean_b > row.mean_a, "{name}: {row:?}");
        assert!(row.p_value < 0.05, "{name}: {row:?}");
    }
}
