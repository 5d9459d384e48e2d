use serde::{Deserialize, Serialize};

use super::ScoreSet;
use crate::error::{Error, Result};
use crate::imageio::Label;

/// APCER and BPCER at one threshold: PA scoring `>= threshold` are accepted
/// attacks, BF scoring below it are rejected bona fides.
pub fn apcer_bpcer(s: &ScoreSet, threshold: f64) -> Result<(f64, f64)> {
    if s.is_empty() {
        return Err(Error::InsufficientData("empty score set".into()));
    }
    s.require_both()?;
    let pa = s.scores(Label::PA);
    let bf = s.scores(Label::BF);
    let apcer = pa.iter().filter(|&&x| x >= threshold).count() as f64 / pa.len() as f64;
    let bpcer = bf.iter().filter(|&&x| x < threshold).count() as f64 / bf.len() as f64;
    Ok((apcer, bpcer))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetPoint {
    pub apcer: f64,
    pub bpcer: f64,
}

/// Error trade-off polyline, ordered by increasing APCER.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DetCurve {
    pub points: Vec<DetPoint>,
}

impl DetCurve {
    /// Checks the ordering and range invariants; useful for curves that come
    /// from outside [`det_curve`].
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvariantViolation("empty DET curve".into()));
        }
        for w in self.points.windows(2) {
            if w[1].apcer < w[0].apcer || w[1].bpcer > w[0].bpcer {
                return Err(Error::InvariantViolation(format!(
                    "DET curve not monotone between {:?} and {:?}",
                    w[0], w[1]
                )));
            }
        }
        if self
            .points
            .iter()
            .any(|p| !(0.0..=1.0).contains(&p.apcer) || !(0.0..=1.0).contains(&p.bpcer))
        {
            return Err(Error::InvariantViolation("DET rate outside [0, 1]".into()));
        }
        Ok(())
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Sweeps the threshold over every distinct score plus one value below the
/// minimum and one above the maximum. Each distinct APCER keeps its lowest
/// BPCER.
pub fn det_curve(s: &ScoreSet) -> Result<DetCurve> {
    s.require_both()?;
    let pa = sorted(s.scores(Label::PA));
    let bf = sorted(s.scores(Label::BF));
    let (n_pa, n_bf) = (pa.len() as f64, bf.len() as f64);

    let mut thresholds: Vec<f64> = pa.iter().chain(&bf).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    // (apcer count, bpcer count): below every score and above every score.
    let mut counts = vec![(pa.len(), 0usize), (0usize, bf.len())];
    for &t in &thresholds {
        let pa_ge = pa.len() - pa.partition_point(|&x| x < t);
        let bf_lt = bf.partition_point(|&x| x < t);
        counts.push((pa_ge, bf_lt));
    }
    counts.sort_unstable();
    counts.dedup_by_key(|c| c.0);

    Ok(DetCurve {
        points: counts
            .into_iter()
            .map(|(a, b)| DetPoint {
                apcer: a as f64 / n_pa,
                bpcer: b as f64 / n_bf,
            })
            .collect(),
    })
}

/// Area under the ROC curve with BF as the positive class; ties count half.
/// Computed from mid-ranks in doubled integer arithmetic so the result is the
/// exact ratio `(2·wins + ties) / (2·n_bf·n_pa)`.
pub fn auroc(s: &ScoreSet) -> Result<f64> {
    s.require_both()?;
    let mut all: Vec<(f64, bool)> = s.records.iter().map(|r| (r.score, r.label == Label::BF)).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // Ranks i+1..=j share the midrank (i+1+j)/2; doubled: i+1+j.
        let bf_in_group = all[i..j].iter().filter(|x| x.1).count() as u128;
        twice_rank_sum += bf_in_group * (i + 1 + j) as u128;
        i = j;
    }
    let n_bf = s.count(Label::BF) as u128;
    let n_pa = s.count(Label::PA) as u128;
    let twice_u = twice_rank_sum - n_bf * (n_bf + 1);
    Ok(twice_u as f64 / (2 * n_bf * n_pa) as f64)
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let ss = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    (m, ss / (n - 1.0))
}

/// Decidability index `|μ_BF − μ_PA| / sqrt((σ²_BF + σ²_PA) / 2)` using
/// sample variances. With zero pooled variance the result is 0 for equal
/// means and `+inf` otherwise.
pub fn decidability(s: &ScoreSet) -> Result<f64> {
    let bf = s.scores(Label::BF);
    let pa = s.scores(Label::PA);
    if bf.len() < 2 || pa.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "decidability needs at least 2 samples per label (BF {}, PA {})",
            bf.len(),
            pa.len()
        )));
    }
    let (mb, vb) = mean_var(&bf);
    let (mp, vp) = mean_var(&pa);
    let pooled = 0.5 * (vb + vp);
    let diff = (mb - mp).abs();
    if pooled <= 0.0 {
        return Ok(if diff == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(diff / pooled.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub apcer_target: f64,
    pub bpcer: f64,
    /// The target lies below the lowest APCER on the curve; `bpcer` is the
    /// boundary value rather than an interpolation.
    pub extrapolated: bool,
}

/// BPCER at each target APCER, linearly interpolated between the two curve
/// points that bracket the target.
pub fn bpcer_at_apcer(curve: &DetCurve, targets: &[f64]) -> Result<Vec<OperatingPoint>> {
    curve.validate()?;
    let pts = &curve.points;
    Ok(targets
        .iter()
        .map(|&t| {
            let hi = pts.partition_point(|p| p.apcer < t);
            let (bpcer, extrapolated) = if hi == pts.len() {
                (pts[pts.len() - 1].bpcer, true)
            } else if pts[hi].apcer == t {
                (pts[hi].bpcer, false)
            } else if hi == 0 {
                (pts[0].bpcer, true)
            } else {
                let (a, b) = (pts[hi - 1], pts[hi]);
                let f = (t - a.apcer) / (b.apcer - a.apcer);
                (a.bpcer + f * (b.bpcer - a.bpcer), false)
            };
            OperatingPoint {
                apcer_target: t,
                bpcer,
                extrapolated,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(bf: &[f64], pa: &[f64]) -> ScoreSet {
        ScoreSet::from_scores(bf, pa).unwrap()
    }

    fn pt(apcer: f64, bpcer: f64) -> DetPoint {
        DetPoint { apcer, bpcer }
    }

    #[test]
    fn apcer_bpcer_examples() {
        assert_eq!(apcer_bpcer(&set(&[90.0, 80.0], &[10.0, 20.0]), 50.0).unwrap(), (0.0, 0.0));
        let (a, _) = apcer_bpcer(&set(&[90.0], &[60.0, 40.0, 30.0]), 50.0).unwrap();
        assert_eq!(a, 1.0 / 3.0);
        assert_eq!(apcer_bpcer(&set(&[90.0, 3.0], &[60.0, 0.0]), 0.0).unwrap(), (1.0, 0.0));
        assert!(apcer_bpcer(&set(&[90.0], &[]), 50.0).is_err());
    }

    #[test]
    fn det_examples() {
        let c = det_curve(&set(&[90.0, 80.0], &[10.0, 20.0])).unwrap();
        assert!(c.points.contains(&pt(0.0, 0.0)));
        let c = det_curve(&set(&[42.0; 3], &[42.0; 4])).unwrap();
        assert_eq!(c.points, vec![pt(0.0, 1.0), pt(1.0, 0.0)]);
        assert!(det_curve(&set(&[1.0], &[])).is_err());
    }

    #[test]
    fn det_matches_operating_threshold() {
        let s = set(&[55.0, 80.0, 40.0], &[50.0, 10.0, 70.0, 45.0]);
        let (a, b) = apcer_bpcer(&s, 50.0).unwrap();
        assert!(det_curve(&s).unwrap().points.contains(&pt(a, b)));

        // A lower threshold with the same APCER dominates; the curve keeps it.
        let s = set(&[55.0, 50.0, 49.0, 80.0], &[50.0, 10.0, 70.0]);
        let (a, b) = apcer_bpcer(&s, 50.0).unwrap();
        let (a2, b2) = apcer_bpcer(&s, 49.0).unwrap();
        assert_eq!(a, a2);
        assert!(b2 < b);
        assert!(det_curve(&s).unwrap().points.contains(&pt(a2, b2)));
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&set(&[0.8, 0.4], &[0.6, 0.2])).unwrap(), 0.75);
        assert_eq!(auroc(&set(&[90.0, 91.0], &[1.0, 2.0])).unwrap(), 1.0);
        assert_eq!(auroc(&set(&[5.0; 3], &[5.0; 2])).unwrap(), 0.5);
    }

    fn raw(bf: &[f64], pa: &[f64]) -> ScoreSet {
        // Bypasses the [0, 100] check: decidability is scale-agnostic.
        let mut s = ScoreSet::default();
        for (label, v) in [(Label::BF, bf), (Label::PA, pa)] {
            for &score in v {
                s.records.push(crate::metrics::ScoreRecord {
                    sample_id: format!("r{}", s.records.len()),
                    label,
                    score,
                });
            }
        }
        s
    }

    #[test]
    fn decidability_examples() {
        // Two points at mean ± h have sample variance 2h²; h = 10/√2 gives σ = 10.
        let h = 10.0 / 2f64.sqrt();
        let d = decidability(&raw(&[100.0 - h, 100.0 + h], &[-h, h])).unwrap();
        assert!((d - 10.0).abs() < 1e-9, "{d}");
        assert_eq!(decidability(&set(&[3.0, 4.0, 5.0], &[3.0, 4.0, 5.0])).unwrap(), 0.0);
        assert_eq!(decidability(&set(&[7.0, 7.0], &[7.0, 7.0])).unwrap(), 0.0);
        assert_eq!(decidability(&set(&[9.0, 9.0], &[1.0, 1.0])).unwrap(), f64::INFINITY);
        assert!(decidability(&set(&[9.0], &[1.0, 2.0])).is_err());
    }

    #[test]
    fn bpcer_at_apcer_examples() {
        let c = DetCurve {
            points: vec![pt(0.0, 0.4), pt(0.05, 0.1), pt(1.0, 0.0)],
        };
        let r = bpcer_at_apcer(&c, &[0.05, 0.025]).unwrap();
        assert_eq!(r[0].bpcer, 0.1);
        assert!((r[1].bpcer - 0.25).abs() < 1e-12);
        assert!(!r[1].extrapolated);

        let perfect = det_curve(&set(&[90.0, 80.0], &[10.0, 20.0])).unwrap();
        for op in bpcer_at_apcer(&perfect, &super::super::APCER_TARGETS).unwrap() {
            assert_eq!(op.bpcer, 0.0);
        }

        let high = DetCurve {
            points: vec![pt(0.2, 0.3), pt(1.0, 0.0)],
        };
        let r = bpcer_at_apcer(&high, &[0.1]).unwrap();
        assert!(r[0].extrapolated);
        assert_eq!(r[0].bpcer, 0.3);
    }
}
