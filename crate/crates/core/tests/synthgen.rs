use std::collections::HashSet;

use padforge::imageio::{center_crop_resize, overall_quality, read_manifest, IrisGeometry};
use padforge::matcher::{enroll_image, match_templates, MatcherConfig};
use padforge::pad::{extract_features, fit, TrainConfig};
use padforge::synthgen::*;
use padforge::{GrayImage, Label};
use statrs::distribution::{Binomial, DiscreteCDF};

fn jitter() -> AppearanceJitter {
    AppearanceJitter::default()
}

/// Annulus pixels as `(x, y, rho)`, rho being the rubber-sheet radius.
fn annulus(g: &IrisGeometry) -> Vec<(usize, usize, f64)> {
    let mut v = Vec::new();
    for y in 0..512 {
        for x in 0..512 {
            let (fx, fy) = (x as f64, y as f64);
            if g.iris.contains(fx, fy) && !g.pupil.contains(fx, fy) {
                v.push((x, y, g.to_rubber_sheet(fx, fy).0));
            }
        }
    }
    v
}

fn radial_profile(img: &GrayImage, g: &IrisGeometry, bins: usize) -> Vec<f64> {
    let mut sum = vec![0.0; bins];
    let mut n = vec![0usize; bins];
    for (x, y, rho) in annulus(g) {
        let b = ((rho * bins as f64) as usize).min(bins - 1);
        sum[b] += f64::from(img.get(x, y));
        n[b] += 1;
    }
    sum.iter().zip(&n).map(|(s, &c)| s / c.max(1) as f64).collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn synthesis_is_deterministic() {
    let a = synthesize_notcl(IdentitySeed(5), 77, &jitter());
    assert_eq!(a, synthesize_notcl(IdentitySeed(5), 77, &jitter()));
    for b in Brand::ALL {
        assert_eq!(synthesize_tcl(b, IdentitySeed(5), 77, &jitter()), synthesize_tcl(b, IdentitySeed(5), 77, &jitter()));
    }
    assert_ne!(a.0, synthesize_notcl(IdentitySeed(5), 78, &jitter()).0);
}

#[test]
fn genuine_and_impostor_pairs_separate() {
    let cfg = MatcherConfig::default();
    let enroll = |id: u64, app: u64| {
        let (img, g) = synthesize_notcl(IdentitySeed(id), app, &AppearanceJitter { glare_prob: 0.0, ..jitter() });
        enroll_image(&img, &g, &cfg).unwrap()
    };
    let mut genuine_below = 0;
    let mut impostor = Vec::new();
    for i in 0..100u64 {
        let a = enroll(i, 10_000 + i);
        let b = enroll(i, 20_000 + i);
        if match_templates(&a, &b, &cfg).unwrap().hd < cfg.match_threshold {
            genuine_below += 1;
        }
        for k in [1u64, 2] {
            let c = enroll(1_000 + 2 * i + k, 30_000 + 2 * i + k);
            impostor.push(match_templates(&a, &c, &cfg).unwrap().hd);
        }
    }
    assert!(genuine_below >= 95, "{genuine_below}/100 genuine pairs below threshold");
    let first100 = &impostor[..100];
    let mean = first100.iter().sum::<f64>() / 100.0;
    assert!((0.45..=0.55).contains(&mean), "impostor mean {mean}");
    let false_matches = impostor.iter().filter(|&&h| h < cfg.match_threshold).count();
    assert!(false_matches * 100 <= impostor.len(), "{false_matches} of {} impostors matched", impostor.len());
}

#[test]
fn lens_overlay_is_visible_and_covers_part_of_the_annulus() {
    for s in 0..4u64 {
        let (base, g) = synthesize_notcl(IdentitySeed(s), 500 + s, &jitter());
        let ring = annulus(&g);
        for b in Brand::ALL {
            let (tcl, g2) = synthesize_tcl(b, IdentitySeed(s), 500 + s, &jitter());
            assert_eq!(g, g2);
            let mad = ring
                .iter()
                .map(|&(x, y, _)| (f64::from(tcl.get(x, y)) - f64::from(base.get(x, y))).abs())
                .sum::<f64>()
                / ring.len() as f64;
            assert!(mad > 10.0, "{b:?}: mean abs diff {mad}");

            let lens = LensPattern::new(b, 500 + s);
            let covered = ring
                .iter()
                .filter(|&&(x, y, _)| {
                    let (dx, dy) = (x as f64 - g.iris.cx, y as f64 - g.iris.cy);
                    lens.sample((dx * dx + dy * dy).sqrt() / g.iris.r, dy.atan2(dx)).is_some()
                })
                .count() as f64
                / ring.len() as f64;
            assert!((0.4..=0.8).contains(&covered), "{b:?}: coverage {covered}");
        }
    }
}

#[test]
fn brand_radial_profiles_are_distinct() {
    for s in [3u64, 11, 19] {
        let profiles: Vec<(Brand, Vec<f64>)> = Brand::ALL
            .iter()
            .map(|&b| {
                let (img, g) = synthesize_tcl(b, IdentitySeed(s), 900 + s, &jitter());
                (b, radial_profile(&img, &g, 24))
            })
            .collect();
        for i in 0..7 {
            for k in i + 1..7 {
                let r = pearson(&profiles[i].1, &profiles[k].1);
                assert!(r < 0.9, "{:?} vs {:?}: r = {r}", profiles[i].0, profiles[k].0);
            }
        }
    }
}

#[test]
fn brands_are_learnable_from_texture_features() {
    let features = |range: std::ops::Range<u64>| {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for b in Brand::ALL {
            for i in range.clone() {
                let id = IdentitySeed(i * 7 + b.code() as u64);
                let (img, g) = synthesize_tcl(b, id, 40_000 + i * 7 + b.code() as u64, &jitter());
                let crop = center_crop_resize(&img, &g, 256).unwrap();
                xs.push(extract_features(&crop).unwrap().values);
                ys.push(b.code());
            }
        }
        (xs, ys)
    };
    let (tx, ty) = features(0..100);
    let (vx, vy) = features(100..200);
    let cfg = TrainConfig {
        max_epochs: 30,
        ..Default::default()
    };
    let (model, log) = fit(7, &[tx], &ty, &vx, &vy, &cfg).unwrap();
    let correct = vx.iter().zip(&vy).filter(|(x, &y)| model.predict_class(x) == y).count();
    let acc = correct as f64 / vx.len() as f64;
    assert_eq!(acc, log.best_val_acc());
    assert!(acc >= 0.9, "held-out brand accuracy {acc}");
}

#[test]
fn planned_batch_of_ten_thousand_is_all_bona_fide() {
    let plan = plan_batch(&SynthesisConfig::notcl(10_000, 1)).unwrap();
    assert_eq!(plan.len(), 10_000);
    assert!(plan.iter().all(|p| p.brand.is_none()));
    assert_eq!(plan.iter().map(|p| &p.id).collect::<HashSet<_>>().len(), 10_000);
}

#[test]
fn planted_leak_rate_follows_the_knob() {
    let gallery: Vec<IdentitySeed> = (0..50).map(|i| IdentitySeed(1_000_000 + i)).collect();
    let gallery_set: HashSet<_> = gallery.iter().copied().collect();
    let off = SynthesisConfig {
        gallery_reuse_prob: 0.0,
        gallery: gallery.clone(),
        ..SynthesisConfig::notcl(1000, 3)
    };
    assert!(plan_batch(&off).unwrap().iter().all(|p| !gallery_set.contains(&p.identity)));

    let bin = Binomial::new(0.1, 1000).unwrap();
    let (lo, hi) = (bin.inverse_cdf(0.005), bin.inverse_cdf(0.995));
    for seed in 0..5 {
        let on = SynthesisConfig {
            gallery_reuse_prob: 0.1,
            gallery: gallery.clone(),
            ..SynthesisConfig::notcl(1000, seed)
        };
        let plan = plan_batch(&on).unwrap();
        let planted = plan.iter().filter(|p| gallery_set.contains(&p.identity)).count() as u64;
        assert_eq!(planted, plan.iter().filter(|p| p.planted).count() as u64);
        assert!((lo..=hi).contains(&planted), "{planted} outside [{lo}, {hi}]");
    }
}

fn dir_digest(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn generated_directory_is_reproducible_and_labelled() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = SynthesisConfig::tcl([2, 1, 1, 1, 1, 1, 1], 21);
    let m = generate_batch(&cfg, tmp.path().join("a")).unwrap();
    assert_eq!(m.len(), 8);
    assert!(m.records.iter().all(|r| r.label == Label::PA && r.brand.is_some()));
    assert_eq!(m.records.iter().filter(|r| r.brand == Some(Brand::BauschLomb)).count(), 2);
    let reread = read_manifest(tmp.path().join("a/manifest.jsonl")).unwrap();
    assert_eq!(reread.records, m.records);

    generate_batch(&cfg, tmp.path().join("b")).unwrap();
    assert_eq!(dir_digest(&tmp.path().join("a")), dir_digest(&tmp.path().join("b")));

    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        pool.install(|| generate_batch(&cfg, tmp.path().join("c")).unwrap());
        assert_eq!(dir_digest(&tmp.path().join("a")), dir_digest(&tmp.path().join("c")));
    }
}

#[test]
fn quality_is_stable_across_a_batch_and_offset_invariant() {
    let j = jitter();
    let scored: Vec<(GrayImage, IrisGeometry, f64)> = (0..30u64)
        .map(|i| {
            let (img, g) = synthesize_notcl(IdentitySeed(i), 70_000 + i, &j);
            let q = overall_quality(&img, &g).unwrap();
            (img, g, q)
        })
        .collect();
    let mean = scored.iter().map(|s| s.2).sum::<f64>() / scored.len() as f64;
    for (img, g, q) in &scored {
        assert!((q - mean).abs() <= 15.0, "quality {q} vs batch mean {mean}");
        for delta in [-10, 10] {
            let shifted = overall_quality(&img.offset(delta), g).unwrap();
            assert!((shifted - q).abs() <= 2.0, "offset {delta}: {q} -> {shifted}");
        }
    }
}
