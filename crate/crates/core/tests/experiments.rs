//! Ensemble experiments on phantom data. These check statistical behaviour
//! of the corruption models and of generated label distributions.

use ssimqa::corrupt::{
    apply_line_replacement, corrupt_random, motion_corrupt_composite, plan_line_events, CorruptConfig,
    CorruptionAlgorithm,
};
use ssimqa::dataset::{synthesize_many, GenConfig};
use ssimqa::motion::RigidMotion2D;
use ssimqa::phantom::{phantom_set, phantom_slice};
use ssimqa::ssim::{ssim_mean, SsimConfig};
use ssimqa::{Execution, SeedRng};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn severity_means(alg: CorruptionAlgorithm, size: usize) -> Vec<f64> {
    let cfg = SsimConfig::default();
    (1..=5u8)
        .map(|sev| {
            let c = CorruptConfig {
                algorithm: Some(alg),
                severity: Some(sev),
                ..CorruptConfig::default()
            };
            let labels: Vec<f64> = (0..50u64)
                .map(|d| {
                    let s = phantom_slice(size, size, 9000 + d);
                    let (out, _) = corrupt_random(&s, &mut SeedRng::derive(31 + sev as u64, d), &c).unwrap();
                    ssim_mean(&s, &out, &cfg).unwrap()
                })
                .collect();
            mean(&labels)
        })
        .collect()
}

#[test]
fn severity_lowers_mean_ssim_for_both_algorithms() {
    for alg in [CorruptionAlgorithm::Composite, CorruptionAlgorithm::LineReplace] {
        let m = severity_means(alg, 96);
        assert!(m.windows(2).all(|w| w[0] > w[1]), "{alg:?}: {m:?}");
    }
}

#[test]
fn more_replaced_lines_lower_mean_ssim() {
    let cfg = SsimConfig::default();
    let fixed = RigidMotion2D {
        rotation_deg: 4.0,
        translation_px: [3.0, -3.0],
        time_fraction: 0.5,
    };
    let run = |fraction: f64| -> f64 {
        let labels: Vec<f64> = (0..50u64)
            .map(|d| {
                let s = phantom_slice(96, 96, 500 + d);
                let (planned, spans) = plan_line_events(96, 2, fraction, 0.0, 0.0, &mut SeedRng::derive(8, d)).unwrap();
                // keep the drawn line positions and timing, fix the magnitude
                let motions: Vec<RigidMotion2D> = planned
                    .iter()
                    .map(|m| RigidMotion2D {
                        time_fraction: m.time_fraction,
                        ..fixed
                    })
                    .collect();
                let out = apply_line_replacement(&s, &motions, &spans).unwrap();
                ssim_mean(&s, &out, &cfg).unwrap()
            })
            .collect();
        mean(&labels)
    };
    let (few, many) = (run(0.05), run(0.40));
    assert!(few > many, "{few} vs {many}");
}

#[test]
fn composite_mean_intensity_roughly_preserved() {
    for d in 0..20u64 {
        let s = phantom_slice(96, 96, d);
        let m = RigidMotion2D {
            rotation_deg: 6.0,
            translation_px: [4.0, -5.0],
            time_fraction: 0.6,
        };
        let out = motion_corrupt_composite(&s, &[m]).unwrap();
        let (m0, m1) = (s.mean(), out.mean());
        assert!((m1 - m0).abs() <= 0.2 * m0, "draw {d}: {m1} vs {m0}");
    }
}

fn random_labels(n: u64) -> Vec<f64> {
    let cfg = SsimConfig::default();
    let mut v: Vec<f64> = (0..n)
        .map(|d| {
            let s = phantom_slice(96, 96, d % 50);
            let (out, _) = corrupt_random(&s, &mut SeedRng::derive(5, d), &CorruptConfig::default()).unwrap();
            ssim_mean(&s, &out, &cfg).unwrap()
        })
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn random_corruption_reaches_low_labels_and_spreads() {
    let v = random_labels(2000);
    let (lo, hi) = (v[0], v[v.len() - 1]);
    assert!(lo <= 0.2, "lowest label {lo}");
    assert!(hi - lo >= 0.7, "labels span only [{lo}, {hi}]");
}

#[test]
#[ignore = "even severity-1 motions shift by up to 2 px, so phantom labels top out near 0.94"]
fn random_corruption_reaches_near_perfect_labels() {
    let v = random_labels(2000);
    assert!(v[v.len() - 1] >= 0.999, "highest label {}", v[v.len() - 1]);
}

#[test]
fn generated_labels_cover_low_and_high_quality() {
    let volumes = phantom_set(3, 128, 2024);
    let cfg = GenConfig {
        target: 128,
        ..GenConfig::default()
    };
    let samples = synthesize_many(&volumes, 10_000, 2024, &cfg, Execution::default()).unwrap();
    let labels: Vec<f64> = samples.iter().map(|s| s.ssim_label).collect();
    let below = labels.iter().filter(|&&l| l < 0.6).count();
    let above = labels.iter().filter(|&&l| l > 0.8).count();
    // at least 5% of the mass on each side
    assert!(below >= 500, "only {below} labels below 0.6");
    assert!(above >= 500, "only {above} labels above 0.8");
    let mut hist = [0usize; 10];
    for l in &labels {
        hist[((l * 10.0) as usize).min(9)] += 1;
    }
    assert!(hist.iter().filter(|&&c| c > 0).count() >= 5, "{hist:?}");
}
