use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use openh_bench::{action_chunks, episode, rotations, video};
use openh_core::eval::{fisher_exact, l1_per_frame, ssim_per_frame};
use openh_core::kinematics::{rotmat_to_sixd, sixd_to_rotmat};
use openh_core::normstats::compute_statistics;
use openh_core::store::{decode_episode, encode_episode};
use openh_core::ACTION_WIDTH;

fn kinematics(c: &mut Criterion) {
    let rots = rotations(1024, 1);
    c.bench_function("sixd_round_trip_1024", |b| {
        b.iter(|| {
            for r in &rots {
                black_box(rotmat_to_sixd(&sixd_to_rotmat(black_box(r)).unwrap()));
            }
        })
    });
}

fn statistics(c: &mut Criterion) {
    let chunks = action_chunks(2_000, 16, 2);
    c.bench_function("compute_statistics_2000x16x44", |b| {
        b.iter(|| compute_statistics(16, ACTION_WIDTH, chunks.iter().map(|a| a.view())).unwrap())
    });
}

fn metrics(c: &mut Criterion) {
    let a = video(12, 64, 80, 3, 3);
    let b = video(12, 64, 80, 3, 4);
    c.bench_function("ssim_12x64x80x3", |bench| bench.iter(|| ssim_per_frame(a.view(), b.view()).unwrap()));
    c.bench_function("l1_12x64x80x3", |bench| bench.iter(|| l1_per_frame(a.view(), b.view()).unwrap()));
    c.bench_function("fisher_exact_40", |bench| bench.iter(|| fisher_exact(black_box([[12, 8], [5, 15]]))));
}

fn container(c: &mut Criterion) {
    let record = episode(240, 5);
    let bytes = encode_episode(&record).unwrap();
    c.bench_function("container_encode", |b| b.iter(|| encode_episode(black_box(&record)).unwrap()));
    c.bench_function("container_decode", |b| b.iter(|| decode_episode(black_box(&bytes)).unwrap()));
}

criterion_group!(benches, kinematics, statistics, metrics, container);
criterion_main!(benches);
