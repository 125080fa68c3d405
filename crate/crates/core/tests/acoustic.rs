use std::f64::consts::PI;
use std::path::Path;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use warmth::acoustic::{
    self, compute_llds, frame_count, functionals, FrameConfig, Signal, ANALYSIS_RATE, LLD_NAMES,
};

const SR: u32 = ANALYSIS_RATE;

const ONSET_SENSITIVE: [&str; 3] = ["spectral_flux", "jitter", "shimmer"];

fn tone(f0: f64, seconds: f64, amp: f64) -> Vec<f64> {
    let n = (seconds * SR as f64) as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / SR as f64;
            amp * (1..=5)
                .map(|h| (2.0 * PI * h as f64 * f0 * t).sin() / h as f64)
                .sum::<f64>()
        })
        .collect()
}

fn column(llds: &acoustic::LldMatrix, name: &str) -> Vec<f64> {
    llds.column(name).unwrap().to_vec()
}

#[test]
fn amplitude_scaling_leaves_shape_features_alone() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let base: Vec<f64> = tone(180.0, 0.5, 0.2)
        .into_iter()
        .map(|v| v + 0.01 * r.gen_range(-1.0..1.0))
        .collect();
    let cfg = FrameConfig::default();
    let a = compute_llds(&Signal::new(base.clone(), SR).unwrap(), &cfg).unwrap();
    for k in [0.25, 3.0] {
        let scaled: Vec<f64> = base.iter().map(|v| v * k).collect();
        let b = compute_llds(&Signal::new(scaled, SR).unwrap(), &cfg).unwrap();
        for name in ["zcr", "f0", "voicing_prob", "spectral_centroid", "spectral_rolloff"] {
            for (x, y) in column(&a, name).iter().zip(column(&b, name)) {
                assert!((x - y).abs() <= 1e-6, "{name} at k={k}: {x} vs {y}");
            }
        }
        let shift = 2.0 * f64::log10(k);
        for (x, y) in column(&a, "log_energy").iter().zip(column(&b, "log_energy")) {
            assert!((y - x - shift).abs() <= 1e-9, "log energy at k={k}");
        }
    }
}

#[test]
fn one_hop_of_leading_silence_barely_moves_pooled_means() {
    let cfg = FrameConfig::default();
    let hop = cfg.hop_len(SR);
    for f0 in [120.0, 200.0, 310.0] {
        let x = tone(f0, 1.0, 0.3);
        let mut shifted = vec![0.0; hop];
        shifted.extend(&x);
        let dur = x.len() as f64 / SR as f64;
        let lag = hop as f64 / SR as f64;
        let a = functionals(
            &compute_llds(&Signal::new(x, SR).unwrap(), &cfg).unwrap(),
            &[(0.0, dur)],
        );
        let b = functionals(
            &compute_llds(&Signal::new(shifted, SR).unwrap(), &cfg).unwrap(),
            &[(lag, dur + lag)],
        );
        for (i, name) in LLD_NAMES.iter().enumerate() {
            let (ma, mb) = (a.values[2 * i], b.values[2 * i]);
            if ONSET_SENSITIVE.contains(name) {
                // Near zero on a steady tone, so the one frame straddling the
                // onset dominates; only an absolute bound makes sense.
                assert!((ma - mb).abs() <= 0.01, "{f0} Hz {name}_mean: {ma} vs {mb}");
                continue;
            }
            // Cepstral coefficients live on an O(1) scale and some sit near
            // zero for a given pitch, where a relative bound is meaningless.
            let floor = if name.starts_with("mfcc") { 1.0 } else { 1e-3 };
            let tol = 0.02 * ma.abs().max(floor);
            assert!((ma - mb).abs() <= tol, "{f0} Hz {name}_mean: {ma} vs {mb}");
        }
    }
}

#[test]
fn pooling_ignores_segment_order() {
    let llds = compute_llds(
        &Signal::new(tone(150.0, 1.0, 0.3), SR).unwrap(),
        &FrameConfig::default(),
    )
    .unwrap();
    let segs = [(0.05, 0.2), (0.5, 0.61), (0.3, 0.35), (0.9, 0.99)];
    let base = functionals(&llds, &segs);
    let mut rev = segs;
    rev.reverse();
    assert_eq!(functionals(&llds, &rev), base);
    let rotated = [segs[2], segs[0], segs[3], segs[1]];
    assert_eq!(functionals(&llds, &rotated), base);
    // Overlapping copies pool the same frames once.
    let doubled = [segs[0], segs[1], segs[2], segs[3], segs[0]];
    assert_eq!(functionals(&llds, &doubled), base);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn frame_count_formula(n in 400usize..4000, seed in 0u64..1000) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-0.5..0.5)).collect();
        let cfg = FrameConfig::default();
        let llds = compute_llds(&Signal::new(x, SR).unwrap(), &cfg).unwrap();
        let (w, h) = (cfg.window_len(SR), cfg.hop_len(SR));
        prop_assert_eq!(llds.n_frames(), (n - w) / h + 1);
        prop_assert_eq!(frame_count(n, w, h), (n - w) / h + 1);
    }
}

#[test]
fn sawtooth_220_hz() {
    let n = SR as usize;
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let phase = (220.0 * i as f64 / SR as f64).fract();
            0.4 * (2.0 * phase - 1.0)
        })
        .collect();
    let llds = compute_llds(&Signal::new(x, SR).unwrap(), &FrameConfig::default()).unwrap();
    let f0 = column(&llds, "f0");
    let mut voiced: Vec<f64> = f0.iter().copied().filter(|&v| v > 0.0).collect();
    assert!(voiced.len() as f64 >= 0.9 * f0.len() as f64);
    voiced.sort_by(f64::total_cmp);
    let median = voiced[voiced.len() / 2];
    assert!((median - 220.0).abs() <= 3.0, "median {median}");
}

fn write_pcm(path: &Path, channels: u16, rate: u32, bits: u16, frames: &[Vec<f64>]) {
    let spec = hound::WavSpec {
        channels,
        sample_rate: rate,
        bits_per_sample: bits,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    let full = ((1i64 << (bits - 1)) - 1) as f64;
    for frame in frames {
        for &v in frame {
            let s = (v * full).round() as i32;
            if bits == 8 {
                w.write_sample(s as i8).unwrap();
            } else {
                w.write_sample(s as i16).unwrap();
            }
        }
    }
    w.finalize().unwrap();
}

#[test]
fn stereo_opposite_channels_cancel() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.wav");
    let frames: Vec<Vec<f64>> = tone(200.0, 0.1, 0.3).into_iter().map(|v| vec![v, -v]).collect();
    write_pcm(&p, 2, SR, 16, &frames);
    let sig = acoustic::read_wav(&p).unwrap();
    assert_eq!(sig.samples.len(), frames.len());
    assert!(sig.samples.iter().all(|&v| v.abs() < 1e-9));
}

#[test]
fn eight_khz_is_resampled_to_match_direct_synthesis() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("n.wav");
    let n8 = 8000;
    let sine = |rate: f64, i: usize| 0.5 * (2.0 * PI * 200.0 * i as f64 / rate).sin();
    let frames: Vec<Vec<f64>> = (0..n8).map(|i| vec![sine(8000.0, i)]).collect();
    write_pcm(&p, 1, 8000, 16, &frames);
    let sig = acoustic::read_wav(&p).unwrap();
    assert_eq!(sig.sample_rate, SR);
    assert!((sig.samples.len() as i64 - 2 * n8 as i64).abs() <= 2);
    let peak = sig.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((peak - 0.5).abs() <= 0.005, "peak {peak}");
    // The final interpolated sample has no right neighbour, so stop short.
    for (i, v) in sig.samples.iter().enumerate().take(2 * n8 - 2) {
        assert!((v - sine(16000.0, i)).abs() <= 0.01, "sample {i}");
    }

    let p8 = dir.path().join("b8.wav");
    write_pcm(&p8, 1, SR, 8, &[vec![0.5], vec![-0.5], vec![0.0]]);
    let s = acoustic::read_wav(&p8).unwrap();
    assert!((s.samples[0] - 0.5).abs() < 0.01 && (s.samples[1] + 0.5).abs() < 0.01);
}

#[test]
fn unsupported_and_truncated_files_are_errors() {
    let dir = tempfile::tempdir().unwrap();

    let float = dir.path().join("f.wav");
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: SR,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(&float, spec).unwrap();
    for _ in 0..100 {
        w.write_sample(0.25f32).unwrap();
    }
    w.finalize().unwrap();
    let e = acoustic::read_wav(&float).unwrap_err().to_string();
    assert!(e.contains("integer PCM") && e.contains("f.wav"), "{e}");

    let deep = dir.path().join("d.wav");
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: SR,
        bits_per_sample: 24,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(&deep, spec).unwrap();
    w.write_sample(1000i32).unwrap();
    w.finalize().unwrap();
    assert!(acoustic::read_wav(&deep).unwrap_err().to_string().contains("24"));

    let good = dir.path().join("g.wav");
    write_pcm(&good, 1, SR, 16, &vec![vec![0.1]; 1000]);
    let bytes = std::fs::read(&good).unwrap();
    let cut = dir.path().join("t.wav");
    std::fs::write(&cut, &bytes[..bytes.len() - 501]).unwrap();
    assert!(acoustic::read_wav(&cut).is_err());
    std::fs::write(&cut, &bytes[..20]).unwrap();
    assert!(acoustic::read_wav(&cut).is_err());

    assert!(acoustic::read_wav(&dir.path().join("absent.wav")).is_err());
}

#[test]
fn write_read_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.wav");
    let x = tone(250.0, 0.2, 0.3);
    acoustic::write_wav(&p, &Signal::new(x.clone(), SR).unwrap()).unwrap();
    let back = acoustic::read_wav(&p).unwrap();
    assert_eq!(back.samples.len(), x.len());
    for (a, b) in x.iter().zip(&back.samples) {
        assert!((a - b).abs() <= 1.0 / 32767.0);
    }
}
