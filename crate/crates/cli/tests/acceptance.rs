//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use ndarray::{Array2, Array3};
use openh_core::eval::{
    aggregate_rollouts, clopper_pearson, fisher_exact, holm_bonferroni, rollout_episode_from_record, run_rollout,
    subtask_average, survival_curve, Category, ConstantGenerator, ReplayGenerator, RolloutConfig, StageOutcome,
    TrialOutcomeTable,
};
use openh_core::kinematics::{
    absolute_to_relative, integrate_relative, resample_stride, rotmat_to_sixd, sixd_to_rotmat, UnifiedActionChunk,
    ACTION_WIDTH,
};
use openh_core::mixture::{solve_mixture, MixtureSampler, MixtureSpec};
use openh_core::normstats::{compute_statistics, merge_statistics, zscore_denormalize, zscore_normalize};
use openh_core::schema::{CameraStream, ControlSpace, FrameSource, Split};
use openh_core::store::{
    convert_control_space, decode_episode, encode_episode, preset_configs, synthesize_episode, SynthScenario,
    TrajectoryFamily,
};
use openh_core::{EpisodeRecord, Normalizer, Pose};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let q = Quaternion::new(
        rng.sample::<f64, _>(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    );
    UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
}

fn ac1_kinematics() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_rot = 0.0f64;
    for _ in 0..10_000 {
        let r = random_rotation(&mut rng);
        let back = sixd_to_rotmat(&rotmat_to_sixd(&r)).map_err(|e| e.to_string())?;
        worst_rot = worst_rot.max((back - r).amax());
    }
    let mut worst_pose = 0.0f64;
    for _ in 0..1_000 {
        let pos = |rng: &mut ChaCha8Rng| Vector3::from_fn(|_, _| rng.random_range(-0.2..0.2));
        let state = Pose { position: pos(&mut rng), rotation: random_rotation(&mut rng) };
        let target = Pose { position: pos(&mut rng), rotation: random_rotation(&mut rng) };
        let action = absolute_to_relative(&state, &target, rng.random());
        let back = integrate_relative(&state, &action).map_err(|e| e.to_string())?;
        worst_pose =
            worst_pose.max((back.position - target.position).amax()).max((back.rotation - target.rotation).amax());
    }
    let elapsed = start.elapsed();
    ensure(worst_rot < 1e-12, || format!("6D round-trip error {worst_rot:e}"))?;
    ensure(worst_pose < 1e-10, || format!("pose reconstruction error {worst_pose:e}"))?;
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("6D max error {worst_rot:.2e}, pose max error {worst_pose:.2e}, {elapsed:.2?}"))
}

fn ac2_merge() -> Outcome {
    let start = Instant::now();
    let (n, h, d) = (100_000, 2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data = Array3::from_shape_fn((n, h, d), |(_, i, j)| {
        Normal::new(2.0 + (i * d + j) as f64, 0.5 + j as f64).unwrap().sample(&mut rng)
    });
    let pooled = compute_statistics(h, d, data.outer_iter()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let parts = rng.random_range(2..=8);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..parts)).collect();
        let stats = (0..parts)
            .map(|p| {
                let chunks = data.outer_iter().zip(&labels).filter(|(_, l)| **l == p).map(|(c, _)| c);
                compute_statistics(h, d, chunks)
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let refs: Vec<_> = stats.iter().collect();
        let weights: Vec<f64> = stats.iter().map(|s| s.count as f64).collect();
        let merged = merge_statistics(&refs, &weights).map_err(|e| e.to_string())?;
        ensure(merged.count == pooled.count, || format!("count {} vs {}", merged.count, pooled.count))?;
        for (a, b) in merged.mean.iter().zip(&pooled.mean).chain(merged.m2.iter().zip(&pooled.m2)) {
            worst = worst.max((a - b).abs() / b.abs());
        }
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-12, || format!("relative error {worst:e}"))?;
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("100 partitions of 1e5 samples, max relative error {worst:.2e}, {elapsed:.2?}"))
}

fn ac3_zscore() -> Outcome {
    let (h, d) = (4, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let chunk = |rng: &mut ChaCha8Rng| {
        Array2::from_shape_fn((h, d), |(i, j)| {
            if j == d - 1 {
                0.25
            } else {
                (i as f64 + 1.0) * rng.sample::<f64, _>(StandardNormal)
            }
        })
    };
    let train: Vec<Array2<f64>> = (0..2_000).map(|_| chunk(&mut rng)).collect();
    let stats = compute_statistics(h, d, train.iter().map(|c| c.view())).map_err(|e| e.to_string())?;
    let norm = Normalizer::temporal_zscore(std::sync::Arc::new(stats));
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    let mut clipped = 0usize;
    for k in 0..20_000 {
        let mut x = chunk(&mut rng) * if k % 4 == 0 { 20.0 } else { 1.0 };
        if k % 1000 == 0 {
            x[[0, 0]] = f64::INFINITY;
            x[[1, 1]] = -1e300;
        }
        let y = zscore_normalize(x.view(), &norm).map_err(|e| e.to_string())?;
        ensure(y.iter().all(|v| (-5.0..=5.0).contains(v)), || format!("output outside [-5, 5]: {y}"))?;
        let back = zscore_denormalize(y.view(), &norm).map_err(|e| e.to_string())?;
        for ((xv, yv), bv) in x.iter().zip(&y).zip(&back) {
            if yv.abs() < 5.0 {
                worst = worst.max((xv - bv).abs() / xv.abs().max(1.0));
                checked += 1;
            } else {
                clipped += 1;
            }
        }
    }
    ensure(worst < 1e-12, || format!("inverse error {worst:e}"))?;
    ensure(clipped > 0, || "no clipped values exercised".into())?;
    Ok(format!(
        "{checked} unclipped values, max inverse error {worst:.2e}; {clipped} clipped values all within [-5, 5]"
    ))
}

fn ac4_mixture() -> Outcome {
    let spec = MixtureSpec {
        entries: vec![("a".into(), 800.0), ("b".into(), 100.0), ("c".into(), 100.0)],
        caps: BTreeMap::from([("a".into(), 0.2)]),
        seed: 4,
    };
    let entries = solve_mixture(&spec).map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = entries.iter().map(|e| e.ratio).collect();
    ensure(ratios == [0.2, 0.4, 0.4], || format!("ratios {ratios:?}"))?;

    let n = 1_000_000;
    let sampler = MixtureSampler::new(&entries, 4).map_err(|e| e.to_string())?;
    let mut counts = [0u64; 3];
    sampler.stream(0).take(n).for_each(|i| counts[i] += 1);
    let mut worst_sigma = 0.0f64;
    for (c, p) in counts.iter().zip(&ratios) {
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        worst_sigma = worst_sigma.max((*c as f64 / n as f64 - p).abs() / sigma);
    }
    ensure(worst_sigma <= 3.0, || format!("frequencies {counts:?} deviate by {worst_sigma:.2} sigma"))?;

    // Capped entries never exceed their cap, over random specs.
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let mut worst_excess = f64::NEG_INFINITY;
    for trial in 0..2_000 {
        let k = rng.random_range(2..8);
        let entries: Vec<(String, f64)> =
            (0..k).map(|i| (format!("d{i}"), 10f64.powf(rng.random_range(-1.0..3.0)))).collect();
        let cap = rng.random_range(0.05..0.5);
        let capped = format!("d{}", trial % k);
        let spec = MixtureSpec { entries, caps: BTreeMap::from([(capped.clone(), cap)]), seed: 0 };
        let solved = solve_mixture(&spec).map_err(|e| e.to_string())?;
        let sum: f64 = solved.iter().map(|e| e.ratio).sum();
        ensure((sum - 1.0).abs() < 1e-12, || format!("ratios sum to {sum}"))?;
        let r = solved.iter().find(|e| e.dataset_id == capped).expect("capped entry").ratio;
        worst_excess = worst_excess.max(r - cap);
    }
    ensure(worst_excess <= 1e-12, || format!("capped ratio exceeds cap by {worst_excess:e}"))?;
    Ok(format!("(0.2, 0.4, 0.4) exact; 1e6 draws within {worst_sigma:.2} sigma; caps respected over 2000 random specs"))
}

/// Binomial pmf by recurrence from the lighter tail, reflected for p > 1/2.
fn pmf(n: u64, p: f64) -> Vec<f64> {
    let (q, flip) = if p > 0.5 { (1.0 - p, true) } else { (p, false) };
    let mut v = vec![0.0; n as usize + 1];
    v[0] = (1.0 - q).powi(n as i32);
    for i in 0..n as usize {
        v[i + 1] = v[i] * (n as f64 - i as f64) / (i as f64 + 1.0) * q / (1.0 - q);
    }
    if flip {
        v.reverse();
    }
    v
}

fn bisect(mut lo: f64, mut hi: f64, increasing: bool, f: impl Fn(f64) -> f64, target: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) < target) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn cp_oracle(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    let a = (1.0 - confidence) / 2.0;
    let ge = |p: f64| pmf(n, p)[k as usize..].iter().sum::<f64>();
    let le = |p: f64| pmf(n, p)[..=k as usize].iter().sum::<f64>();
    let lo = if k == 0 { 0.0 } else { bisect(0.0, 1.0, true, ge, a) };
    let hi = if k == n { 1.0 } else { bisect(0.0, 1.0, false, le, a) };
    (lo, hi)
}

fn choose(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn fisher_oracle(t: [[u64; 2]; 2]) -> f64 {
    let (r1, r2) = (t[0][0] + t[0][1], t[1][0] + t[1][1]);
    let c1 = t[0][0] + t[1][0];
    let weight = |x: u64| choose(r1, x) * choose(r2, c1 - x);
    let observed = weight(t[0][0]) as f64;
    let tail: u128 =
        (c1.saturating_sub(r2)..=c1.min(r1)).map(weight).filter(|w| *w as f64 <= observed * (1.0 + 1e-7)).sum();
    tail as f64 / choose(r1 + r2, c1) as f64
}

fn holm_oracle(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut out = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &i) in order.iter().enumerate() {
        running = running.max(((m - rank) as f64 * p[i]).min(1.0));
        out[i] = running;
    }
    out
}

fn ac5_statistics() -> Outcome {
    let mut worst_cp = 0.0f64;
    for n in 1..=50u64 {
        for k in 0..=n {
            let (lo, hi) = clopper_pearson(k, n, 0.95).map_err(|e| e.to_string())?;
            let (olo, ohi) = cp_oracle(k, n, 0.95);
            worst_cp = worst_cp.max((lo - olo).abs()).max((hi - ohi).abs());
        }
    }
    ensure(worst_cp <= 1e-6, || format!("Clopper-Pearson deviates by {worst_cp:e}"))?;
    let (lo, hi) = clopper_pearson(5, 20, 0.95).map_err(|e| e.to_string())?;
    ensure(lo < 0.25 && 0.25 < hi, || format!("(5, 20) interval ({lo}, {hi})"))?;

    let mut worst_fisher = 0.0f64;
    let mut tables = 0u64;
    for a in 0..=40u64 {
        for b in 0..=40 - a {
            for c in 0..=40 - a - b {
                for d in 0..=40 - a - b - c {
                    let t = [[a, b], [c, d]];
                    worst_fisher = worst_fisher.max((fisher_exact(t) - fisher_oracle(t)).abs());
                    tables += 1;
                }
            }
        }
    }
    ensure(worst_fisher <= 1e-12, || format!("Fisher deviates by {worst_fisher:e}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let m = rng.random_range(1..30);
        let p: Vec<f64> = (0..m).map(|_| rng.random::<f64>().powi(3)).collect();
        let got = holm_bonferroni(&p).map_err(|e| e.to_string())?;
        let want = holm_oracle(&p);
        ensure(got == want, || format!("Holm mismatch on {p:?}: {got:?} vs {want:?}"))?;
    }
    Ok(format!(
        "CP max deviation {worst_cp:.1e} (n <= 50), (5,20) -> ({lo:.4}, {hi:.4}); Fisher max deviation {worst_fisher:.1e} over {tables} tables; Holm exact on 20 vectors"
    ))
}

fn ac6_rollout() -> Outcome {
    let config = preset_configs().into_iter().find(|c| c.config_id == "dvrk_si").expect("preset");
    let scenario = SynthScenario::new("dvrk_si", TrajectoryFamily::Circle, 240, 6);
    let raw = synthesize_episode(&scenario, &config).map_err(|e| e.to_string())?.record;
    let resampled = resample_stride(&raw, config.native_rate_hz, 10.0).map_err(|e| e.to_string())?;
    let record = convert_control_space(&resampled, ControlSpace::RelativeEef, &config).map_err(|e| e.to_string())?;
    let episode = rollout_episode_from_record(&record, 0).map_err(|e| e.to_string())?;
    let rollout = RolloutConfig::default();

    let mut replay = ReplayGenerator::new();
    replay.insert(&episode);
    let identity = run_rollout(&episode, 0, rollout, &replay).map_err(|e| e.to_string())?;
    ensure(identity.l1.len() == 72, || format!("{} frames", identity.l1.len()))?;
    ensure(identity.l1.iter().all(|v| *v == 0.0), || format!("identity L1 {:?}", identity.l1))?;
    ensure(identity.ssim.iter().all(|v| *v == 1.0), || format!("identity SSIM {:?}", identity.ssim))?;

    // Mean absolute deviation of each reference frame from mid-gray, from the stored bytes.
    let gray = 0.5;
    let cam = &record.cameras[0];
    let mad: Vec<f64> = (1..=72)
        .map(|t| {
            let bytes = cam.frame(cam.frame_refs[t]).expect("inline frame");
            bytes.iter().map(|b| (*b as f64 / 255.0 - gray).abs()).sum::<f64>() / bytes.len() as f64
        })
        .collect();
    let constant = ConstantGenerator(gray);
    let series = (0..3)
        .map(|seed| run_rollout(&episode, seed, rollout, &constant))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let worst = series[0].l1.iter().zip(&mad).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-9, || format!("constant-gray L1 deviates from MAD by {worst:e}"))?;

    let categories = BTreeMap::from([(record.dataset_id.clone(), Category::Benchtop)]);
    let summary = aggregate_rollouts(&series, &categories).map_err(|e| e.to_string())?;
    ensure(summary.len() == 1 && summary[0].seeds == 3, || format!("{summary:?}"))?;
    let s = &summary[0];
    ensure(s.l1.std.iter().chain(&s.ssim.std).all(|v| *v == 0.0), || "nonzero std over duplicated seeds".into())?;
    Ok(format!("identity L1 = 0 and SSIM = 1 on 72 frames; gray L1 vs MAD max {worst:.1e}; duplicated-seed std = 0"))
}

fn ac7_trials() -> Outcome {
    let table = TrialOutcomeTable::new(
        vec!["pickup_handover".into(), "throw_extract".into(), "knot_tying".into()],
        vec!["policy".into()],
        vec![vec![(14, 20), (17, 40), (10, 20)]],
    )
    .map_err(|e| e.to_string())?;
    let avg = subtask_average(&table, 0.95).map_err(|e| e.to_string())?;
    let mean = avg[0].mean_rate;
    let hand = (0.70 + 0.425 + 0.50) / 3.0;
    ensure((mean - hand).abs() < 1e-12, || format!("mean {mean} vs {hand}"))?;
    ensure((mean - 0.542).abs() <= 0.005, || format!("average {mean}"))?;

    let stages: Vec<String> =
        ["pickup", "handover", "throw", "extraction", "knot_tying"].iter().map(|s| s.to_string()).collect();
    // 20 trials: 8 fail at throw, 5 at extraction, 2 at knot tying, 5 complete.
    let failing_at = |stage: usize| -> Vec<StageOutcome> {
        (0..=stage.min(4)).map(|s| StageOutcome { stage: stages[s].clone(), passed: s != stage }).collect()
    };
    let mut trials = Vec::new();
    trials.extend((0..8).map(|_| failing_at(2)));
    trials.extend((0..5).map(|_| failing_at(3)));
    trials.extend((0..2).map(|_| failing_at(4)));
    trials.extend((0..5).map(|_| failing_at(5)));
    let curve = survival_curve(&stages, &trials).map_err(|e| e.to_string())?;
    let s = &curve.surviving;
    ensure(curve.trials == 20 && s[0] == 20 && s[1] == 20 && s[2] == 12 && s[4] == 5, || format!("survival {s:?}"))?;
    ensure(s.windows(2).all(|w| w[0] >= w[1]), || format!("survival not monotone {s:?}"))?;
    Ok(format!("average {:.2}%; survival {s:?} of {}", 100.0 * mean, curve.trials))
}

fn random_record(rng: &mut ChaCha8Rng, i: usize) -> EpisodeRecord {
    let t = rng.random_range(1..40);
    let arms = rng.random_range(1..=4);
    let width = arms * 8;
    let cameras = (0..rng.random_range(0..3))
        .map(|c| {
            let (w, h) = (rng.random_range(1..9), rng.random_range(1..9));
            let channels = if rng.random() { 3 } else { 1 };
            let frames = rng.random_range(1..5u32);
            let len = (w * h * channels as u32 * frames) as usize;
            CameraStream {
                view_id: format!("cam{c}"),
                width: w,
                height: h,
                channels,
                frame_refs: (0..t).map(|_| rng.random_range(0..frames)).collect(),
                source: if rng.random() {
                    FrameSource::Raw { frame_count: frames, data: (0..len).map(|_| rng.random()).collect() }
                } else {
                    FrameSource::External { uri: format!("media/cam{c}.mp4"), frame_count: frames }
                },
            }
        })
        .collect();
    EpisodeRecord {
        episode_id: format!("episode_{i:06}"),
        dataset_id: "random".into(),
        config_id: format!("cfg{arms}"),
        task_prompt: "µ-scale prompt ✓".chars().take(rng.random_range(0..16)).collect(),
        split: if rng.random() { Split::Train } else { Split::Test },
        control_space: [ControlSpace::AbsoluteEef, ControlSpace::RelativeEef, ControlSpace::Joint]
            [rng.random_range(0..3)],
        state_width: width,
        kinematics: (0..t * width).map(|_| rng.random::<f32>() * 2.0 - 1.0).collect(),
        timestamps: (0..t).map(|k| k as f64 / 30.0 + rng.random::<f64>() * 1e-3).collect(),
        cameras,
        validity: rng.random::<bool>().then(|| (0..t).map(|_| rng.random()).collect()),
        actions: rng.random::<bool>().then(|| UnifiedActionChunk {
            actions: Array2::from_shape_fn((t - 1, ACTION_WIDTH), |_| rng.random::<f64>()),
            occupancy_mask: UnifiedActionChunk::arm_mask(arms),
        }),
    }
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_openh")
}

fn run_pipeline(dir: &Path) -> Result<(), String> {
    let log = r#"{"subtasks":["pickup_handover","throw_extract","knot_tying"],
        "outcomes":[{"policy":"ours","counts":[[14,20],[17,40],[10,20]]},{"policy":"base","counts":[[8,20],[2,40],[9,20]]}]}"#;
    fs::write(dir.join("trials.json"), log).map_err(|e| e.to_string())?;
    let steps: &[&[&str]] = &[
        &["synth", "--out", "raw", "--dataset", "bench", "--episodes", "40", "--noise", "0.0005"],
        &[
            "synth",
            "--out",
            "raw",
            "--dataset",
            "tissue",
            "--robot",
            "versius",
            "--family",
            "lissajous",
            "--episodes",
            "20",
            "--environment",
            "ex-vivo",
        ],
        &["validate", "raw/bench", "raw/tissue"],
        &["convert", "raw/bench", "--out", "conv/bench"],
        &["convert", "raw/tissue", "--out", "conv/tissue"],
        &["validate", "conv/bench", "conv/tissue"],
        &["stats", "conv/bench"],
        &["stats", "conv/tissue"],
        &["normalize", "conv/bench", "--out", "norm_bench.json"],
        &["normalize", "conv/tissue", "--kind", "quantile", "--out", "norm_tissue.json"],
        &[
            "mix",
            "conv/bench",
            "conv/tissue",
            "--size",
            "other=1",
            "--cap",
            "bench=0.2",
            "--steps",
            "1000",
            "--stream-out",
            "stream.txt",
            "--out",
            "mix.tsv",
        ],
        &["eval", "rollout", "conv/bench", "conv/tissue", "--out", "rollout"],
        &["eval", "rollout", "conv/bench", "--out", "rollout_gray", "--generator", "constant:0.5"],
        &["eval", "trials", "trials.json", "--out", "trials"],
    ];
    for args in steps {
        let out = Command::new(bin())
            .current_dir(dir)
            .args(["--seed", "8"])
            .args(*args)
            .env("OHE_LOG", "error")
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            format!("`openh {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
        })?;
    }
    Ok(())
}

fn snapshot(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out
}

fn ac8_store() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut flips = 0usize;
    for i in 0..200 {
        let record = random_record(&mut rng, i);
        let bytes = encode_episode(&record).map_err(|e| e.to_string())?;
        let back = decode_episode(&bytes).map_err(|e| format!("container {i}: {e}"))?;
        ensure(back == record, || format!("container {i} decodes to a different record"))?;
        let again = encode_episode(&back).map_err(|e| e.to_string())?;
        ensure(again == bytes, || format!("container {i} re-encodes differently"))?;
        // Every position for the first containers, a sample for the rest.
        let positions: Vec<usize> = if i < 5 {
            (0..bytes.len()).collect()
        } else {
            (0..16).map(|_| rng.random_range(0..bytes.len())).collect()
        };
        for at in positions {
            let mut bad = bytes.clone();
            bad[at] ^= rng.random_range(1..=255u8);
            ensure(decode_episode(&bad).is_err(), || format!("container {i}: flipped byte {at} went undetected"))?;
            flips += 1;
        }
    }

    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        fs::create_dir_all(d).map_err(|e| e.to_string())?;
        run_pipeline(d)?;
    }
    let elapsed = start.elapsed();
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    ensure(sa.len() == sb.len(), || format!("{} vs {} output files", sa.len(), sb.len()))?;
    for ((pa, da), (pb, db)) in sa.iter().zip(&sb) {
        ensure(pa == pb && da == db, || format!("{} differs between runs", pa.display()))?;
    }
    within(elapsed, Duration::from_secs(120))?;
    Ok(format!(
        "200 containers byte-identical, {flips} single-byte corruptions detected; pipeline x2 identical ({} files) in {elapsed:.2?}",
        sa.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("kinematics round-trips", ac1_kinematics),
        ("moment-matching merge", ac2_merge),
        ("z-score normalization", ac3_zscore),
        ("mixture solver and sampler", ac4_mixture),
        ("interval and test oracles", ac5_statistics),
        ("rollout harness", ac6_rollout),
        ("subtask averaging and survival", ac7_trials),
        ("store round-trip and pipeline determinism", ac8_store),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(message)
        });
        match outcome {
            Ok(detail) => println!("AC{} PASS {name}: {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("AC{} FAIL {name}: {reason}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
