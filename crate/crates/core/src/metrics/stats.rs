use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::report::EvalReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
}

impl MeanStd {
    /// Shifted-data two-pass formula: identical inputs give exactly zero
    /// spread and their own value as the mean.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let k = values.first().copied().unwrap_or(f64::NAN);
        let dm = values.iter().map(|v| v - k).sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - k - dm) * (v - k - dm)).sum();
        Self {
            mean: k + dm,
            std: (ss / (n - 1.0)).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub n_runs: usize,
    pub auroc: MeanStd,
    pub d_prime: MeanStd,
    /// `(apcer_target, bpcer)` in the order of the reports' operating points.
    pub bpcer_at_apcer: Vec<(f64, MeanStd)>,
    pub runs: Vec<EvalReport>,
}

impl RunAggregate {
    pub fn bpcer_at(&self, target: f64) -> Option<MeanStd> {
        self.bpcer_at_apcer.iter().find(|(t, _)| *t == target).map(|(_, m)| *m)
    }

    pub fn aurocs(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.auroc).collect()
    }
}

/// Mean and sample standard deviation of every scalar metric across runs.
pub fn aggregate_runs(reports: &[EvalReport]) -> Result<RunAggregate> {
    if reports.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "aggregation needs at least 2 runs, got {}",
            reports.len()
        )));
    }
    let targets: Vec<f64> = reports[0].bpcer_at_apcer.iter().map(|o| o.apcer_target).collect();
    for r in &reports[1..] {
        let t: Vec<f64> = r.bpcer_at_apcer.iter().map(|o| o.apcer_target).collect();
        if t != targets {
            return Err(Error::InvariantViolation(format!(
                "operating points differ between runs: {targets:?} vs {t:?}"
            )));
        }
    }
    let col = |f: &dyn Fn(&EvalReport) -> f64| MeanStd::of(&reports.iter().map(f).collect::<Vec<_>>());
    Ok(RunAggregate {
        n_runs: reports.len(),
        auroc: col(&|r| r.auroc),
        d_prime: col(&|r| r.d_prime),
        bpcer_at_apcer: targets
            .iter()
            .enumerate()
            .map(|(i, &t)| (t, col(&|r| r.bpcer_at_apcer[i].bpcer)))
            .collect(),
        runs: reports.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    pub p_two_sided: f64,
    /// All paired differences were zero; `t = 0` and `p = 1` by convention.
    pub degenerate: bool,
}

impl TTest {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_two_sided < alpha
    }
}

/// Paired-samples t-test on `a[i] − b[i]`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::InvariantViolation(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData("paired t-test needs at least 2 pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let df = d.len() - 1;
    if d.iter().all(|&x| x == 0.0) {
        return Ok(TTest {
            t: 0.0,
            df,
            p_two_sided: 1.0,
            degenerate: true,
        });
    }
    let ms = MeanStd::of(&d);
    let t = ms.mean / (ms.std / (d.len() as f64).sqrt());
    let p = if t.is_infinite() {
        0.0
    } else {
        let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(TTest {
        t,
        df,
        p_two_sided: p,
        degenerate: false,
    })
}
