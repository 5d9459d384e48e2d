use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use padforge::imageio::{center_crop_resize, GrayImage, IrisGeometry, PAD_INPUT_SIDE};
use padforge::matcher::{enroll_image, MatcherConfig};
use padforge::pad::extract_features;
use padforge::par;
use padforge::synthgen::{synthesize, AppearanceJitter, IdentitySeed};

fn images(n: u64) -> Vec<(GrayImage, IrisGeometry)> {
    (0..n)
        .map(|i| synthesize(IdentitySeed(i), 1000 + i, &AppearanceJitter::default(), None))
        .collect()
}

fn synthesis(c: &mut Criterion) {
    let seeds: Vec<u64> = (0..16).collect();
    let render = |i: &u64| synthesize(IdentitySeed(*i), 1000 + i, &AppearanceJitter::default(), None);
    let mut g = c.benchmark_group("synthesize_16");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("rayon", 16), |b| b.iter(|| black_box(par::map(&seeds, render))));
    g.bench_function(BenchmarkId::new("sequential", 16), |b| b.iter(|| black_box(par::map_sequential(&seeds, render))));
    g.finish();
}

fn enrollment(c: &mut Criterion) {
    let imgs = images(32);
    let cfg = MatcherConfig::default();
    let enroll = |(img, geom): &(GrayImage, IrisGeometry)| enroll_image(img, geom, &cfg).unwrap();
    let mut g = c.benchmark_group("enroll_32");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("rayon", 32), |b| b.iter(|| black_box(par::map(&imgs, enroll))));
    g.bench_function(BenchmarkId::new("sequential", 32), |b| b.iter(|| black_box(par::map_sequential(&imgs, enroll))));
    g.finish();
}

fn lbp_features(c: &mut Criterion) {
    let crops: Vec<GrayImage> = images(32).iter().map(|(img, geom)| center_crop_resize(img, geom, PAD_INPUT_SIDE).unwrap()).collect();
    let extract = |img: &GrayImage| extract_features(img).unwrap();
    let mut g = c.benchmark_group("lbp_features_32");
    g.sample_size(20);
    g.bench_function(BenchmarkId::new("rayon", 32), |b| b.iter(|| black_box(par::map(&crops, extract))));
    g.bench_function(BenchmarkId::new("sequential", 32), |b| b.iter(|| black_box(par::map_sequential(&crops, extract))));
    g.finish();
}

criterion_group!(benches, synthesis, enrollment, lbp_features);
criterion_main!(benches);
