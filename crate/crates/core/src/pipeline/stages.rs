use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::workdir::{digest_dir, digest_file, fresh_dir, WorkDirLock};
use super::PipelineConfig;
use crate::error::{Error, Result};
use crate::imageio::{read_manifest, save_image, write_manifest, IrisGeometry, Label, Manifest, SampleRecord, PAD_INPUT_SIDE};
use crate::leakage::{filter_leakage, verify_manifest, write_audit_csv, Outcome};
use crate::matcher::{enroll_manifest, read_template, write_template, EnrolledSample};
use crate::metrics::{
    aggregate_runs, evaluate, paired_t_test, render_table, write_det_csv, EvalReport, ExperimentId, RunAggregate, ScoreRecord, ScoreSet, TTest,
    VariantColumn,
};
use crate::pad::{extract_features, load_pad_input, predict_features, stratified_split, train_on_split, PadModel, TrainConfig};
use crate::synthgen::{generate_batch, write_planned, Brand, IdentitySeed, PlannedSample, SynthesisConfig, SynthesisMode};
use crate::{par, seed};

/// Pipeline stages in execution order. The index feeds the per-stage seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Synth,
    Enroll,
    Filter,
    Curate,
    Train,
    Eval,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [Stage::Synth, Stage::Enroll, Stage::Filter, Stage::Curate, Stage::Train, Stage::Eval, Stage::Report];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Enroll => "enroll",
            Stage::Filter => "filter",
            Stage::Curate => "curate",
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Report => "report",
        }
    }

    pub fn index(self) -> u64 {
        Stage::ALL.iter().position(|&s| s == self).expect("listed") as u64 + 1
    }

    fn seed(self, cfg: &PipelineConfig) -> u64 {
        seed::stage_seed(cfg.master_seed, self.index())
    }
}

/// What a stage produced: its output directory digest and a short summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: &'static str,
    pub digest: String,
    pub summary: serde_json::Value,
}

/// Runs one stage under the work-directory lock.
pub fn run_stage(cfg: &PipelineConfig, stage: Stage) -> Result<StageReport> {
    let _lock = WorkDirLock::acquire(&cfg.work_dir())?;
    run_unlocked(cfg, stage)
}

/// Runs every stage in order under a single lock.
pub fn run_all(cfg: &PipelineConfig) -> Result<Vec<StageReport>> {
    let _lock = WorkDirLock::acquire(&cfg.work_dir())?;
    Stage::ALL.iter().map(|&s| run_unlocked(cfg, s)).collect()
}

fn run_unlocked(cfg: &PipelineConfig, stage: Stage) -> Result<StageReport> {
    cfg.validate()?;
    let dir = cfg.work_dir().join(stage.name());
    fresh_dir(&dir)?;
    let summary = match stage {
        Stage::Synth => synth(cfg, &dir)?,
        Stage::Enroll => enroll(cfg, &dir)?,
        Stage::Filter => filter(cfg, &dir)?,
        Stage::Curate => curate(cfg, &dir)?,
        Stage::Train => train(cfg, &dir)?,
        Stage::Eval => eval(cfg, &dir)?,
        Stage::Report => report(cfg, &dir)?,
    };
    let digest = digest_dir(&dir)?;
    let digests = cfg.work_dir().join("digests");
    fs::create_dir_all(&digests).map_err(|e| Error::io(&digests, e))?;
    let p = digests.join(format!("{}.sha256", stage.name()));
    fs::write(&p, format!("{digest}  {}\n", stage.name())).map_err(|e| Error::io(&p, e))?;
    Ok(StageReport {
        stage: stage.name(),
        digest,
        summary,
    })
}

fn stage_dir(cfg: &PipelineConfig, stage: Stage) -> PathBuf {
    cfg.work_dir().join(stage.name())
}

fn read_stage_manifest(cfg: &PipelineConfig, stage: Stage, rel: &str) -> Result<Manifest> {
    let p = stage_dir(cfg, stage).join(rel);
    if !p.exists() {
        return Err(Error::InsufficientData(format!(
            "{} is missing; run the `{}` stage first",
            p.display(),
            stage.name()
        )));
    }
    read_manifest(p)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvariantViolation(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// `⌊k/7⌋` per brand, with the first `k mod 7` brands in code order taking one
/// extra sample.
pub fn brand_allocation(k: usize) -> [usize; 7] {
    let mut out = [k / 7; 7];
    out.iter_mut().take(k % 7).for_each(|n| *n += 1);
    out
}

// ---------------------------------------------------------------- synth --

pub const CANDIDATE_SETS: [&str; 2] = ["notcl", "tcl"];

fn gallery_identities(cfg: &PipelineConfig) -> Vec<IdentitySeed> {
    let s = seed::derive_named(Stage::Synth.seed(cfg), "gallery-identity");
    (0..cfg.synthesis.gallery_count as u64).map(|i| IdentitySeed(seed::derive(s, i))).collect()
}

fn synth(cfg: &PipelineConfig, dir: &Path) -> Result<serde_json::Value> {
    let s = &cfg.synthesis;
    let stage_seed = Stage::Synth.seed(cfg);
    let gallery = gallery_identities(cfg);

    let app_seed = seed::derive_named(stage_seed, "gallery-appearance");
    let plan: Vec<PlannedSample> = gallery
        .iter()
        .enumerate()
        .map(|(i, &identity)| PlannedSample {
            index: i,
            id: format!("gallery_{i:06}"),
            identity,
            appearance_seed: seed::derive(app_seed, i as u64),
            brand: None,
            planted: false,
        })
        .collect();
    write_planned(&plan, &s.gallery_jitter, dir.join("gallery"))?;

    let notcl = SynthesisConfig {
        count: s.notcl_count,
        seed: seed::derive_named(stage_seed, "notcl"),
        mode: SynthesisMode::NoTcl,
        brand_mix: None,
        gallery_reuse_prob: s.gallery_reuse_prob,
        gallery: gallery.clone(),
        appearance_jitter: s.jitter,
        id_prefix: "notcl_".into(),
    };
    let tcl = SynthesisConfig {
        count: s.tcl_brand_mix.iter().sum(),
        seed: seed::derive_named(stage_seed, "tcl"),
        mode: SynthesisMode::Tcl,
        brand_mix: Some(s.tcl_brand_mix.to_vec()),
        id_prefix: "tcl_".into(),
        ..notcl.clone()
    };
    let test_notcl = SynthesisConfig {
        count: s.test_per_class,
        seed: seed::derive_named(stage_seed, "test_notcl"),
        gallery_reuse_prob: 0.0,
        gallery: Vec::new(),
        appearance_jitter: s.test_jitter,
        id_prefix: "test_notcl_".into(),
        ..notcl.clone()
    };
    let test_tcl = SynthesisConfig {
        count: s.test_per_class,
        seed: seed::derive_named(stage_seed, "test_tcl"),
        mode: SynthesisMode::Tcl,
        brand_mix: Some(brand_allocation(s.test_per_class).to_vec()),
        id_prefix: "test_tcl_".into(),
        ..test_notcl.clone()
    };

    let gallery_tags: HashSet<String> = gallery.iter().map(|g| g.0.to_string()).collect();
    let mut summary = serde_json::Map::new();
    summary.insert("gallery".into(), json!(gallery.len()));
    for (name, c) in [("notcl", &notcl), ("tcl", &tcl), ("test_notcl", &test_notcl), ("test_tcl", &test_tcl)] {
        let m = generate_batch(c, dir.join(name))?;
        let planted = m
            .records
            .iter()
            .filter(|r| r.identity_tag.as_ref().is_some_and(|t| gallery_tags.contains(t)))
            .count();
        summary.insert(name.into(), json!({ "count": m.len(), "planted_leaks": planted }));
    }
    Ok(summary.into())
}

// --------------------------------------------------------------- enroll --

fn enroll(cfg: &PipelineConfig, dir: &Path) -> Result<serde_json::Value> {
    let mut summary = serde_json::Map::new();
    for set in ["gallery", "notcl", "tcl"] {
        let m = read_stage_manifest(cfg, Stage::Synth, &format!("{set}/manifest.jsonl"))?;
        let out = dir.join(set);
        fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        let enrolled = enroll_manifest(&m, &cfg.matcher)?;
        par::try_map(&enrolled, |e| write_template(&e.template, out.join(format!("{}.irtpl", e.id))))?;
        let ok = enrolled.iter().filter(|e| e.template.enrolled()).count();
        summary.insert(set.into(), json!({ "samples": enrolled.len(), "enrolled": ok }));
    }
    Ok(summary.into())
}

fn load_templates(cfg: &PipelineConfig, set: &str, manifest: &Manifest) -> Result<Vec<EnrolledSample>> {
    let dir = stage_dir(cfg, Stage::Enroll).join(set);
    par::try_map(&manifest.records, |r| {
        let p = dir.join(format!("{}.irtpl", r.id));
        if !p.exists() {
            return Err(Error::InsufficientData(format!("template {} is missing; run `enroll` first", p.display())));
        }
        Ok(EnrolledSample {
            id: r.id.clone(),
            template: read_template(&p, &cfg.matcher)?,
        })
    })
}

// --------------------------------------------------------------- filter --

fn filter(cfg: &PipelineConfig, dir: &Path) -> Result<serde_json::Value> {
    let gallery_m = read_stage_manifest(cfg, Stage::Synth, "gallery/manifest.jsonl")?;
    let gallery_t = load_templates(cfg, "gallery", &gallery_m)?;
    let gallery_tags: HashSet<&str> = gallery_m.records.iter().filter_map(|r| r.identity_tag.as_deref()).collect();
    let mut summary = serde_json::Map::new();

    for set in CANDIDATE_SETS {
        let cands = read_stage_manifest(cfg, Stage::Synth, &format!("{set}/manifest.jsonl"))?;
        let filtering = set == "notcl" || cfg.leakage.filter_tcl;
        let retained = if filtering {
            let k_target = if set == "notcl" { cfg.leakage.notcl_k_target } else { None };
            let templates = load_templates(cfg, set, &cands)?;
            let res = filter_leakage(&templates, &gallery_t, k_target, &cfg.matcher)?;
            write_audit_csv(&res.audit, dir.join(format!("{set}_audit.csv")))?;

            let planted: Vec<usize> = (0..cands.len())
                .filter(|&i| cands.records[i].identity_tag.as_deref().is_some_and(|t| gallery_tags.contains(t)))
                .collect();
            let planted_by = |o: Outcome| planted.iter().filter(|&&i| res.audit[i].outcome == o).count();
            summary.insert(
                set.into(),
                json!({
                    "candidates": cands.len(),
                    "retained": res.count(Outcome::Retained),
                    "excluded_match": res.count(Outcome::ExcludedMatch),
                    "excluded_enroll_failure": res.count(Outcome::ExcludedEnrollFailure),
                    "excluded_overflow": res.count(Outcome::ExcludedOverflow),
                    "planted_leaks": planted.len(),
                    "planted_excluded_match": planted_by(Outcome::ExcludedMatch),
                    "planted_retained": planted_by(Outcome::Retained),
                }),
            );
            Manifest::new(res.retained.iter().map(|&i| cands.records[i].clone()).collect(), cands.base_dir.clone())
        } else {
            summary.insert(set.into(), json!({ "candidates": cands.len(), "retained": cands.len(), "filtered": false }));
            cands
        };
        let rebased = retained.rebased(dir);
        write_manifest(&rebased.records, dir.join(format!("{set}_retained.jsonl")))?;

        if filtering {
            // Independent check from the images, not the stored templates.
            let v = verify_manifest(&rebased, &gallery_m, cfg.matcher.match_threshold, &cfg.matcher)?;
            if !v.passed {
                write_json(&dir.join(format!("{set}_violations.json")), &v.violations)?;
                return Err(Error::VerificationFailed(v.violations.len()));
            }
        }
    }
    Ok(summary.into())
}

// --------------------------------------------------------------- curate --

fn take_brand_balanced(pool: &[SampleRecord], k: usize) -> Result<Vec<SampleRecord>> {
    let alloc = brand_allocation(k);
    let mut out = Vec::with_capacity(k);
    for b in Brand::ALL {
        let want = alloc[b.code()];
        let have: Vec<&SampleRecord> = pool.iter().filter(|r| r.brand == Some(b)).take(want).collect();
        if have.len() < want {
            return Err(Error::InsufficientData(format!("brand {b:?} has {} samples, {want} required", have.len())));
        }
        out.extend(have.into_iter().cloned());
    }
    Ok(out)
}

fn curate(cfg: &PipelineConfig, dir: &Path) -> Result<serde_json::Value> {
    let (bf_pool, pa_pool) = match &cfg.curation.authentic_manifest {
        Some(p) => {
            let m = read_manifest(cfg.resolve(p))?;
            let split = |l: Label| Manifest::new(m.records.iter().filter(|r| r.label == l).cloned().collect(), m.base_dir.clone());
            (split(Label::BF), split(Label::PA))
        }
        None => (
            read_stage_manifest(cfg, Stage::Filter, "notcl_retained.jsonl")?,
            read_stage_manifest(cfg, Stage::Filter, "tcl_retained.jsonl")?,
        ),
    };
    let k = cfg.curation.k.unwrap_or(bf_pool.len());
    if bf_pool.len() < k {
        return Err(Error::InsufficientData(format!("{} bona fide samples available, {k} required", bf_pool.len())));
    }
    let bf: Vec<SampleRecord> = bf_pool.records[..k].to_vec();
    let pa = take_brand_balanced(&pa_pool.records, k)?;

    let images = dir.join("images");
    fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let crop = |pool: &Manifest, recs: &[SampleRecord]| {
        par::try_map(recs, |r| {
            let img = load_pad_input(pool, r)?;
            let rel = format!("images/{}.png", r.id);
            save_image(&img, dir.join(&rel))?;
            Ok::<_, Error>(SampleRecord {
                path: rel,
                geometry: Some(IrisGeometry::full_frame(PAD_INPUT_SIDE)),
                ..r.clone()
            })
        })
    };
    let mut records = crop(&bf_pool, &bf)?;
    records.extend(crop(&pa_pool, &pa)?);

    let labels: Vec<usize> = records.iter().map(|r| usize::from(r.label == Label::PA)).collect();
    let (ti, vi) = stratified_split(&labels, cfg.curation.train_fraction, Stage::Curate.seed(cfg));
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect::<Vec<_>>();
    write_manifest(&pick(&ti), dir.join("train.jsonl"))?;
    write_manifest(&pick(&vi), dir.join("val.jsonl"))?;

    let per_brand: BTreeMap<String, usize> = Brand::ALL
        .iter()
        .map(|b| (format!("{b:?}"), pa.iter().filter(|r| r.brand == Some(*b)).count()))
        .collect();
    Ok(json!({ "k": k, "per_brand": per_brand, "train": ti.len(), "val": vi.len() }))
}

// ---------------------------------------------------------------- train --

pub fn model_file(k: usize) -> String {
    format!("model_seed{k}.txt")
}

fn train(cfg: &PipelineConfig, dir: &Path) -> Result<serde_json::Value> {
    let train_m = read_stage_manifest(cfg, Stage::Curate, "train.jsonl")?;
    let val_m = read_stage_manifest(cfg, Stage::Curate, "val.jsonl")?;
    let base = Stage::Train.seed(cfg);
    let mut log = String::from("seed_index,seed,epoch,train_loss,val_acc\n");
    let mut runs = Vec::new();
    for k in 0..cfg.train_seeds {
        let tc = TrainConfig {
            seed: seed::derive(base, k as u64),
            ..cfg.train.clone()
        };
        let (model, epochs) = train_on_split(&train_m, &val_m, &tc, &cfg.augmentation)?;
        let path = dir.join(model_file(k));
        model.save(&path)?;
        for e in &epochs.epochs {
            let _ = writeln!(log, "{k},{},{},{},{}", tc.seed, e.epoch, e.train_loss, e.val_acc);
        }
        runs.push(json!({
            "seed": tc.seed,
            "best_epoch": epochs.best_epoch,
            "best_val_acc": epochs.best_val_acc(),
            "final_val_acc": epochs.final_val_acc(),
            "sha256": digest_file(&path)?,
        }));
    }
    let p = dir.join("epochs.csv");
    fs::write(&p, log).map_err(|e| Error::io(&p, e))?;
    Ok(json!({ "runs": runs }))
}

// ----------------------------------------------------------------- eval --

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestAggregate {
    pub manifest: String,
    pub aggregate: RunAggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub name: String,
    pub experiment: ExperimentId,
    /// Pooled over all test manifests.
    pub aggregate: RunAggregate,
    /// Only manifests holding both labels get their own aggregate.
    pub per_manifest: Vec<ManifestAggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestEntry {
    pub a: String,
    pub b: String,
    pub metric: String,
    pub result: TTest,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub alpha: f64,
    pub bpcer_interpolation: String,
    pub variants: Vec<VariantResult>,
    pub t_tests: Vec<TTestEntry>,
}

fn test_manifests(cfg: &PipelineConfig) -> Result<Vec<(String, Manifest)>> {
    if cfg.eval.test_manifests.is_empty() {
        ["test_notcl", "test_tcl"]
            .iter()
            .map(|n| Ok((n.to_string(), read_stage_manifest(cfg, Stage::Synth, &format!("{n}/manifest.jsonl"))?)))
            .collect()
    } else {
        cfg.eval
            .test_manifests
            .iter()
            .map(|p| Ok((p.display().to_string(), read_manifest(cfg.resolve(p))?)))
            .collect()
    }
}

fn aggregate_or_single(reports: Vec<EvalReport>) -> Result<RunAggregate> {
    if reports.len() == 1 {
        // A single run still gets a well-formed aggregate (std undefined).
        let mut agg = aggregate_runs(&[reports[0].clone(), reports[0].clone()])?;
        agg.n_runs = 1;
        agg.runs.truncate(1);
        agg.auroc.std = f64::NAN;
        agg.d_prime.std = f64::NAN;
        agg.bpcer_at_apcer.iter_mut().for_each(|(_, m)| m.std = f64::NAN);
        return Ok(agg);
    }
    aggregate_runs(&reports)
}

fn eval(cfg: &PipelineConfig, dir: &Path) -> Result<serde_json::Value> {
    let tests = test_manifests(cfg)?;
    let scores_dir = dir.join("scores");
    let det_dir = dir.join("det");
    for d in [&scores_dir, &det_dir] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }

    // Features once per test image; every seed reuses them.
    let mut features = Vec::new();
    for (_, m) in &tests {
        features.push(par::try_map(&m.records, |r| extract_features(&load_pad_input(m, r)?))?);
    }

    let mut variants = Vec::new();
    let mut own_runs: Vec<(Vec<ScoreSet>, ScoreSet)> = Vec::new();
    for k in 0..cfg.train_seeds {
        let p = stage_dir(cfg, Stage::Train).join(model_file(k));
        if !p.exists() {
            return Err(Error::InsufficientData(format!("{} is missing; run `train` first", p.display())));
        }
        let model = PadModel::load(&p)?;
        let per: Vec<ScoreSet> = tests
            .iter()
            .zip(&features)
            .map(|((_, m), fs)| {
                ScoreSet::new(
                    m.records
                        .iter()
                        .zip(fs)
                        .map(|(r, f)| ScoreRecord {
                            sample_id: r.id.clone(),
                            label: r.label,
                            score: predict_features(&model, f),
                        })
                        .collect(),
                )
            })
            .collect::<Result<_>>()?;
        let pooled = ScoreSet::pooled(&per);
        own_runs.push((per, pooled));
    }
    variants.push(score_variant(&cfg.eval.variant_name, cfg.experiment, own_runs, &tests, &scores_dir, &det_dir)?);

    for ext in &cfg.eval.external {
        let runs = ext
            .score_csvs
            .iter()
            .map(|p| {
                let s = ScoreSet::read_csv(cfg.resolve(p))?;
                Ok((Vec::new(), s))
            })
            .collect::<Result<Vec<_>>>()?;
        if runs.is_empty() {
            return Err(Error::Config(format!("external variant `{}` lists no score files", ext.name)));
        }
        variants.push(score_variant(&ext.name, ext.experiment, runs, &[], &scores_dir, &det_dir)?);
    }

    let mut t_tests = Vec::new();
    for i in 0..variants.len() {
        for j in i + 1..variants.len() {
            let (a, b) = (&variants[i], &variants[j]);
            if a.aggregate.runs.len() == b.aggregate.runs.len() && a.aggregate.runs.len() >= 2 {
                let r = paired_t_test(&a.aggregate.aurocs(), &b.aggregate.aurocs())?;
                t_tests.push(TTestEntry {
                    a: a.name.clone(),
                    b: b.name.clone(),
                    metric: "auroc".into(),
                    significant: r.significant(cfg.eval.alpha),
                    result: r,
                });
            }
        }
    }

    let out = EvalOutput {
        alpha: cfg.eval.alpha,
        bpcer_interpolation: "linear between the DET points bracketing each APCER target".into(),
        variants,
        t_tests,
    };
    write_json(&dir.join("report.json"), &out)?;
    let table = render_table(&columns(&out.variants));
    let p = dir.join("table.txt");
    fs::write(&p, &table).map_err(|e| Error::io(&p, e))?;

    Ok(json!({
        "variants": out.variants.iter().map(|v| json!({
            "name": v.name,
            "experiment": v.experiment,
            "runs": v.aggregate.n_runs,
            "auroc_mean": v.aggregate.auroc.mean,
            "auroc_std": v.aggregate.auroc.std,
        })).collect::<Vec<_>>(),
        "t_tests": out.t_tests.len(),
    }))
}

fn score_variant(
    name: &str,
    experiment: ExperimentId,
    runs: Vec<(Vec<ScoreSet>, ScoreSet)>,
    tests: &[(String, Manifest)],
    scores_dir: &Path,
    det_dir: &Path,
) -> Result<VariantResult> {
    let mut pooled_reports = Vec::new();
    let mut per_manifest: Vec<Vec<EvalReport>> = vec![Vec::new(); tests.len()];
    for (k, (per, pooled)) in runs.iter().enumerate() {
        pooled.write_csv(scores_dir.join(format!("{name}_seed{k}.csv")))?;
        let r = evaluate(pooled)?;
        write_det_csv(&r.det, det_dir.join(format!("{name}_seed{k}.csv")))?;
        pooled_reports.push(r);
        for (i, s) in per.iter().enumerate() {
            if s.count(Label::BF) >= 2 && s.count(Label::PA) >= 2 {
                per_manifest[i].push(evaluate(s)?);
            }
        }
    }
    let per_manifest = tests
        .iter()
        .zip(per_manifest)
        .filter(|(_, reps)| !reps.is_empty())
        .map(|((n, _), reps)| {
            Ok(ManifestAggregate {
                manifest: n.clone(),
                aggregate: aggregate_or_single(reps)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VariantResult {
        name: name.to_string(),
        experiment,
        aggregate: aggregate_or_single(pooled_reports)?,
        per_manifest,
    })
}

fn columns(variants: &[VariantResult]) -> Vec<VariantColumn> {
    let mut cols: Vec<VariantColumn> = Vec::new();
    for v in variants {
        let idx = match cols.iter().position(|c| c.name == v.name) {
            Some(i) => i,
            None => {
                cols.push(VariantColumn {
                    name: v.name.clone(),
                    e1: None,
                    e2: None,
                });
                cols.len() - 1
            }
        };
        let slot = match v.experiment {
            ExperimentId::E1 => &mut cols[idx].e1,
            ExperimentId::E2 => &mut cols[idx].e2,
        };
        *slot = Some(v.aggregate.clone());
    }
    cols
}

// --------------------------------------------------------------- report --

fn report(cfg: &PipelineConfig, dir: &Path) -> Result<serde_json::Value> {
    let inputs: Vec<PathBuf> = if cfg.eval.report_inputs.is_empty() {
        vec![stage_dir(cfg, Stage::Eval).join("report.json")]
    } else {
        cfg.eval.report_inputs.iter().map(|p| cfg.resolve(p)).collect()
    };
    let mut variants = Vec::new();
    let mut t_tests = Vec::new();
    for p in &inputs {
        if !p.exists() {
            return Err(Error::InsufficientData(format!("{} is missing; run `eval` first", p.display())));
        }
        let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        let out: EvalOutput = serde_json::from_str(&text).map_err(|e| Error::Format {
            kind: "evaluation report",
            path: p.clone(),
            message: e.to_string(),
        })?;
        variants.extend(out.variants);
        t_tests.extend(out.t_tests);
    }
    let table = render_table(&columns(&variants));
    let p = dir.join("table.txt");
    fs::write(&p, &table).map_err(|e| Error::io(&p, e))?;
    write_json(&dir.join("t_tests.json"), &t_tests)?;
    Ok(json!({ "table": table, "t_tests": t_tests }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brand_allocation_spreads_remainder() {
        assert_eq!(brand_allocation(4167), [596, 596, 595, 595, 595, 595, 595]);
        assert_eq!(brand_allocation(7), [1; 7]);
        assert_eq!(brand_allocation(700), [100; 7]);
        for k in 0..100 {
            assert_eq!(brand_allocation(k).iter().sum::<usize>(), k);
        }
    }

    #[test]
    fn stage_seeds_differ() {
        let cfg = PipelineConfig::default();
        let seeds: HashSet<u64> = Stage::ALL.iter().map(|s| s.seed(&cfg)).collect();
        assert_eq!(seeds.len(), Stage::ALL.len());
    }
}
