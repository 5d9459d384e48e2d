//! Privacy-safe sample selection.
//!
//! A synthetic candidate is kept only if it enrolls and does not match any
//! entry of the generator's training gallery. Survivors are retained in
//! manifest order up to the requested count.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::Manifest;
use crate::matcher::{best_matches, enroll_manifest, EnrolledSample, MatcherConfig, RotationSet};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Retained,
    ExcludedMatch,
    ExcludedEnrollFailure,
    ExcludedOverflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageAuditRecord {
    pub probe_id: String,
    pub outcome: Outcome,
    pub best_gallery_id: Option<String>,
    pub best_hd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    /// Candidate indices kept, in candidate order.
    pub retained: Vec<usize>,
    /// One record per candidate, in candidate order.
    pub audit: Vec<LeakageAuditRecord>,
}

impl FilterResult {
    pub fn count(&self, outcome: Outcome) -> usize {
        self.audit.iter().filter(|a| a.outcome == outcome).count()
    }
}

/// Applies the exclusion rules to enrolled candidates.
///
/// With `k_target = Some(k)` exactly `k` survivors are kept (first come) and
/// later survivors become `ExcludedOverflow`; fewer than `k` survivors is an
/// [`Error::InsufficientSurvivors`]. With `None` every survivor is kept.
pub fn filter_leakage(
    candidates: &[EnrolledSample],
    gallery: &[EnrolledSample],
    k_target: Option<usize>,
    cfg: &MatcherConfig,
) -> Result<FilterResult> {
    let outcomes = best_matches(candidates, gallery, cfg);
    let mut retained = Vec::new();
    let mut audit = Vec::with_capacity(candidates.len());
    let mut survivors = 0usize;
    for (i, o) in outcomes.into_iter().enumerate() {
        let (best_gallery_id, best_hd) = match &o.best {
            Some(b) => (Some(b.gallery_id.clone()), Some(b.result.hd)),
            None => (None, None),
        };
        let outcome = if !o.enrolled {
            Outcome::ExcludedEnrollFailure
        } else if best_hd.is_some_and(|hd| hd < cfg.match_threshold) {
            Outcome::ExcludedMatch
        } else {
            survivors += 1;
            if k_target.is_some_and(|k| retained.len() >= k) {
                Outcome::ExcludedOverflow
            } else {
                retained.push(i);
                Outcome::Retained
            }
        };
        audit.push(LeakageAuditRecord {
            probe_id: o.probe_id,
            outcome,
            best_gallery_id,
            best_hd,
        });
    }
    if let Some(k) = k_target {
        if survivors < k {
            return Err(Error::InsufficientSurvivors {
                survivors,
                required: k,
            });
        }
    }
    Ok(FilterResult { retained, audit })
}

/// Manifest-level wrapper: enrolls both sets from disk and returns the
/// retained records (paths still relative to the candidate manifest).
pub fn filter_manifest(
    candidates: &Manifest,
    gallery: &Manifest,
    k_target: Option<usize>,
    cfg: &MatcherConfig,
) -> Result<(Manifest, FilterResult)> {
    let c = enroll_manifest(candidates, cfg)?;
    let g = enroll_manifest(gallery, cfg)?;
    let res = filter_leakage(&c, &g, k_target, cfg)?;
    let records = res.retained.iter().map(|&i| candidates.records[i].clone()).collect();
    Ok((Manifest::new(records, candidates.base_dir.clone()), res))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub probe_id: String,
    pub gallery_id: String,
    pub hd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

/// Independent post-hoc check: every retained/gallery pair (not just the best
/// one) is compared, and any pair with HD below `threshold` is reported.
/// Unenrolled templates and pairs without enough common bits cannot be
/// compared and are not violations.
pub fn verify_no_leakage(retained: &[EnrolledSample], gallery: &[EnrolledSample], threshold: f64, cfg: &MatcherConfig) -> Verification {
    let cfg = MatcherConfig {
        match_threshold: threshold,
        ..*cfg
    };
    let sets: Vec<(&str, RotationSet)> = gallery
        .iter()
        .filter(|g| g.template.enrolled())
        .map(|g| (g.id.as_str(), RotationSet::new(&g.template, cfg.max_shift)))
        .collect();
    let per_probe = par::map(retained, |p| {
        if !p.template.enrolled() {
            return Vec::new();
        }
        sets.iter()
            .filter_map(|(gid, set)| {
                let r = set.match_probe(&p.template, &cfg).ok()?;
                (r.hd < threshold).then(|| Violation {
                    probe_id: p.id.clone(),
                    gallery_id: (*gid).to_string(),
                    hd: r.hd,
                })
            })
            .collect::<Vec<_>>()
    });
    let violations: Vec<Violation> = per_probe.into_iter().flatten().collect();
    Verification {
        passed: violations.is_empty(),
        violations,
    }
}

pub fn verify_manifest(retained: &Manifest, gallery: &Manifest, threshold: f64, cfg: &MatcherConfig) -> Result<Verification> {
    let r = enroll_manifest(retained, cfg)?;
    let g = enroll_manifest(gallery, cfg)?;
    Ok(verify_no_leakage(&r, &g, threshold, cfg))
}

pub fn write_audit_csv(audit: &[LeakageAuditRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| Error::Format {
        kind: "audit",
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["probe_id", "outcome", "best_gallery_id", "best_hd"]).map_err(csv_err)?;
    for a in audit {
        let outcome = serde_json::to_value(a.outcome).expect("enum serializes");
        w.write_record([
            a.probe_id.as_str(),
            outcome.as_str().expect("string enum"),
            a.best_gallery_id.as_deref().unwrap_or(""),
            &a.best_hd.map(|h| h.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_audit_csv(path: impl AsRef<Path>) -> Result<Vec<LeakageAuditRecord>> {
    let path = path.as_ref();
    let err = |message: String| Error::Format {
        kind: "audit",
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| err(e.to_string()))?;
        let outcome: Outcome =
            serde_json::from_value(serde_json::Value::String(row[1].to_string())).map_err(|e| err(e.to_string()))?;
        let best_hd = if row[3].is_empty() {
            None
        } else {
            Some(row[3].parse::<f64>().map_err(|e| err(e.to_string()))?)
        };
        out.push(LeakageAuditRecord {
            probe_id: row[0].to_string(),
            outcome,
            best_gallery_id: (!row[2].is_empty()).then(|| row[2].to_string()),
            best_hd,
        });
    }
    Ok(out)
}

/// Tally of outcomes, keyed by outcome.
pub fn outcome_counts(audit: &[LeakageAuditRecord]) -> HashMap<Outcome, usize> {
    let mut m = HashMap::new();
    for a in audit {
        *m.entry(a.outcome).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::{IrisTemplate, TEMPLATE_BITS};
    use crate::seed;
    use rand::Rng;

    fn tpl(seed_v: u64) -> IrisTemplate {
        let mut rng = seed::rng(seed_v);
        let code: Vec<bool> = (0..TEMPLATE_BITS).map(|_| rng.random()).collect();
        IrisTemplate::from_bits(&code, &vec![true; TEMPLATE_BITS], 0.4)
    }

    fn unenrolled() -> IrisTemplate {
        IrisTemplate::from_bits(&vec![false; TEMPLATE_BITS], &vec![false; TEMPLATE_BITS], 0.4)
    }

    fn sample(id: &str, t: IrisTemplate) -> EnrolledSample {
        EnrolledSample { id: id.into(), template: t }
    }

    #[test]
    fn empty_gallery_excludes_only_enroll_failures() {
        let cands = vec![sample("a", tpl(1)), sample("b", unenrolled()), sample("c", tpl(3))];
        let r = filter_leakage(&cands, &[], None, &MatcherConfig::default()).unwrap();
        assert_eq!(r.retained, vec![0, 2]);
        assert_eq!(r.count(Outcome::ExcludedEnrollFailure), 1);
        assert_eq!(r.count(Outcome::ExcludedMatch), 0);
    }

    #[test]
    fn matches_overflow_and_audit_completeness() {
        let gallery = vec![sample("g0", tpl(100)), sample("g1", tpl(101))];
        let cands = vec![
            sample("c0", tpl(1)),
            sample("c1", tpl(100)), // copy of g0
            sample("c2", tpl(2)),
            sample("c3", unenrolled()),
            sample("c4", tpl(101).shifted(3)), // rotated g1
            sample("c5", tpl(5)),
        ];
        let cfg = MatcherConfig::default();
        let r = filter_leakage(&cands, &gallery, Some(2), &cfg).unwrap();
        assert_eq!(r.retained, vec![0, 2]);
        let outcomes: Vec<Outcome> = r.audit.iter().map(|a| a.outcome).collect();
        assert_eq!(
            outcomes,
            vec![
                Outcome::Retained,
                Outcome::ExcludedMatch,
                Outcome::Retained,
                Outcome::ExcludedEnrollFailure,
                Outcome::ExcludedMatch,
                Outcome::ExcludedOverflow
            ]
        );
        assert_eq!(r.audit[1].best_gallery_id.as_deref(), Some("g0"));
        assert_eq!(r.audit[4].best_hd, Some(0.0));
        assert_eq!(r.audit.len(), cands.len());

        let kept: Vec<_> = r.retained.iter().map(|&i| cands[i].clone()).collect();
        assert!(verify_no_leakage(&kept, &gallery, cfg.match_threshold, &cfg).passed);
    }

    #[test]
    fn insufficient_survivors_reports_count() {
        let gallery = vec![sample("g0", tpl(100))];
        let cands = vec![sample("c0", tpl(100)), sample("c1", tpl(7))];
        match filter_leakage(&cands, &gallery, Some(2), &MatcherConfig::default()) {
            Err(Error::InsufficientSurvivors { survivors, required }) => assert_eq!((survivors, required), (1, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn verification_flags_copied_gallery_image_and_zero_threshold_passes() {
        let gallery = vec![sample("g0", tpl(100)), sample("g1", tpl(101))];
        let retained = vec![sample("r0", tpl(1)), sample("r1", tpl(101))];
        let cfg = MatcherConfig::default();
        let v = verify_no_leakage(&retained, &gallery, cfg.match_threshold, &cfg);
        assert!(!v.passed);
        assert_eq!(v.violations.len(), 1);
        assert_eq!((v.violations[0].probe_id.as_str(), v.violations[0].gallery_id.as_str()), ("r1", "g1"));
        let disjoint = vec![sample("r0", tpl(1)), sample("r2", tpl(2))];
        assert!(verify_no_leakage(&disjoint, &gallery, 0.0, &cfg).passed);
    }

    #[test]
    fn raising_threshold_never_increases_retained() {
        let gallery: Vec<_> = (0..5).map(|i| sample(&format!("g{i}"), tpl(100 + i))).collect();
        let cands: Vec<_> = (0..30)
            .map(|i| sample(&format!("c{i}"), if i % 4 == 0 { tpl(100 + (i % 5)) } else { tpl(i) }))
            .collect();
        let mut last = usize::MAX;
        for thr in [0.0, 0.1, 0.32, 0.45, 0.49, 0.6] {
            let cfg = MatcherConfig {
                match_threshold: thr,
                ..Default::default()
            };
            let n = filter_leakage(&cands, &gallery, None, &cfg).unwrap().retained.len();
            assert!(n <= last);
            last = n;
        }
    }

    #[test]
    fn audit_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let audit = vec![
            LeakageAuditRecord {
                probe_id: "a".into(),
                outcome: Outcome::Retained,
                best_gallery_id: Some("g".into()),
                best_hd: Some(0.4711),
            },
            LeakageAuditRecord {
                probe_id: "b".into(),
                outcome: Outcome::ExcludedEnrollFailure,
                best_gallery_id: None,
                best_hd: None,
            },
        ];
        let p = dir.path().join("audit.csv");
        write_audit_csv(&audit, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("probe_id,outcome,best_gallery_id,best_hd\na,retained,g,0.4711\nb,excluded_enroll_failure,,\n"));
        assert_eq!(read_audit_csv(&p).unwrap(), audit);
    }
}
