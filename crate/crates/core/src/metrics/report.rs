use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{auroc, bpcer_at_apcer, decidability, det_curve, DetCurve, OperatingPoint, RunAggregate, ScoreSet, APCER_TARGETS};
use crate::error::{Error, Result};
use crate::imageio::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auroc: f64,
    #[serde(with = "finite_or_inf")]
    pub d_prime: f64,
    pub det: DetCurve,
    pub bpcer_at_apcer: Vec<OperatingPoint>,
    pub n_bf: usize,
    pub n_pa: usize,
}

/// Computes every metric of one score set at the four table operating points.
pub fn evaluate(s: &ScoreSet) -> Result<EvalReport> {
    let det = det_curve(s)?;
    Ok(EvalReport {
        auroc: auroc(s)?,
        d_prime: decidability(s)?,
        bpcer_at_apcer: bpcer_at_apcer(&det, &APCER_TARGETS)?,
        det,
        n_bf: s.count(Label::BF),
        n_pa: s.count(Label::PA),
    })
}

/// JSON has no infinity; an unbounded d′ is written as the string `"inf"`.
mod finite_or_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExperimentId {
    /// Trained on synthetic data only.
    E1,
    /// Trained on an externally supplied authentic-analog manifest.
    E2,
}

/// One model variant: a pair of table columns, one per experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantColumn {
    pub name: String,
    pub e1: Option<RunAggregate>,
    pub e2: Option<RunAggregate>,
}

fn cell(m: Option<super::MeanStd>, scale: f64, digits: usize) -> String {
    match m {
        Some(m) => format!("{:.*}±{:.*}", digits, m.mean * scale, digits, m.std * scale),
        None => "n/a".to_string(),
    }
}

/// Aligned text table: one row per APCER target with BPCER (percent) as
/// mean±std across runs, then AUROC and d′ rows. Each variant contributes an
/// E1 and an E2 column; missing experiments print `n/a`.
pub fn render_table(variants: &[VariantColumn]) -> String {
    let mut header = vec!["APCER".to_string()];
    for v in variants {
        header.push(format!("{} E1", v.name));
        header.push(format!("{} E2", v.name));
    }
    let aggs = |v: &VariantColumn| [v.e1.clone(), v.e2.clone()];

    let mut rows: Vec<Vec<String>> = Vec::new();
    for &t in &APCER_TARGETS {
        let mut row = vec![format!("{:.1}%", t * 100.0)];
        for v in variants {
            for a in aggs(v) {
                row.push(cell(a.and_then(|a| a.bpcer_at(t)), 100.0, 2));
            }
        }
        rows.push(row);
    }
    let mut auroc_row = vec!["AUROC".to_string()];
    let mut d_row = vec!["d'".to_string()];
    for v in variants {
        for a in aggs(v) {
            auroc_row.push(cell(a.as_ref().map(|a| a.auroc), 1.0, 4));
            d_row.push(cell(a.as_ref().map(|a| a.d_prime), 1.0, 3));
        }
    }

    let runs = variants
        .iter()
        .flat_map(|v| [v.e1.as_ref(), v.e2.as_ref()])
        .flatten()
        .map(|a| a.n_runs)
        .max()
        .unwrap_or(0);
    let all: Vec<&Vec<String>> = std::iter::once(&header).chain(&rows).chain([&auroc_row, &d_row]).collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| all.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let line = |r: &Vec<String>| {
        r.iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (s, w))| if i == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
            .collect::<Vec<_>>()
            .join(" | ")
    };
    let rule = "-".repeat(widths.iter().sum::<usize>() + 3 * (widths.len() - 1));

    let mut out = String::new();
    let _ = writeln!(out, "BPCER (%) at fixed APCER, mean±std over {runs} runs");
    let _ = writeln!(out, "{}", line(&header));
    let _ = writeln!(out, "{rule}");
    for r in &rows {
        let _ = writeln!(out, "{}", line(r));
    }
    let _ = writeln!(out, "{rule}");
    let _ = writeln!(out, "{}", line(&auroc_row));
    let _ = writeln!(out, "{}", line(&d_row));
    out
}

/// DET polyline as `apcer,bpcer` rows for external plotting.
pub fn write_det_csv(curve: &DetCurve, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let mut body = String::from("apcer,bpcer\n");
    for p in &curve.points {
        let _ = writeln!(body, "{},{}", p.apcer, p.bpcer);
    }
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))
}
