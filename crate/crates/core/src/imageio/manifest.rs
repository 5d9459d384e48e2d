use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::IrisGeometry;
use crate::error::{Error, Result};
use crate::synthgen::Brand;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    /// Bona fide (no textured contact lens).
    BF,
    /// Presentation attack (textured contact lens).
    PA,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::BF => "BF",
            Label::PA => "PA",
        }
    }
}

impl std::str::FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "BF" => Ok(Label::BF),
            "PA" => Ok(Label::PA),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "synthetic")]
    Synthetic,
    #[serde(rename = "authentic-analog")]
    AuthenticAnalog,
}

/// One line of a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub path: String,
    pub label: Label,
    #[serde(default)]
    pub brand: Option<Brand>,
    pub source: Source,
    #[serde(default)]
    pub identity_tag: Option<String>,
    #[serde(default)]
    pub geometry: Option<IrisGeometry>,
}

impl SampleRecord {
    pub fn validate(&self) -> Result<()> {
        match (self.label, self.brand) {
            (Label::PA, None) => Err(Error::InvariantViolation(format!(
                "record `{}` is PA without a brand",
                self.id
            ))),
            (Label::BF, Some(b)) => Err(Error::InvariantViolation(format!(
                "record `{}` is BF but carries brand {b:?}",
                self.id
            ))),
            _ => Ok(()),
        }?;
        if self.id.is_empty() {
            return Err(Error::InvariantViolation("empty sample id".into()));
        }
        if let Some(g) = &self.geometry {
            g.validate()?;
        }
        Ok(())
    }
}

/// Ordered sample records plus the directory relative paths resolve against.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub records: Vec<SampleRecord>,
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn new(records: Vec<SampleRecord>, base_dir: impl Into<PathBuf>) -> Self {
        Self {
            records,
            base_dir: base_dir.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn resolve(&self, record: &SampleRecord) -> PathBuf {
        let p = Path::new(&record.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Re-expresses every path relative to `new_base`.
    pub fn rebased(&self, new_base: &Path) -> Manifest {
        let records = self
            .records
            .iter()
            .map(|r| {
                let mut r2 = r.clone();
                r2.path = relative_path(&self.resolve(r), new_base);
                r2
            })
            .collect();
        Manifest::new(records, new_base)
    }

    pub fn count(&self, label: Label) -> usize {
        self.records.iter().filter(|r| r.label == label).count()
    }
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id.to_string()));
        }
    }
    Ok(())
}

/// Reads a JSON Lines manifest. Blank lines are ignored; errors carry the
/// 1-based line number.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let at = |message: String| Error::Manifest {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let rec: SampleRecord = serde_json::from_str(&line).map_err(|e| at(e.to_string()))?;
        if let Err(e) = rec.validate() {
            return Err(match e {
                Error::InvariantViolation(m) => Error::InvariantViolation(format!("line {}: {m}", i + 1)),
                other => at(other.to_string()),
            });
        }
        if !seen.insert(rec.id.clone()) {
            return Err(Error::DuplicateId(rec.id));
        }
        records.push(rec);
    }
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Manifest { records, base_dir })
}

pub fn write_manifest(records: &[SampleRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    for r in records {
        r.validate()?;
    }
    check_unique(records.iter().map(|r| r.id.as_str()))?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn normalize(p: &Path) -> Vec<Component<'_>> {
    let mut out: Vec<Component<'_>> = Vec::new();
    for c in p.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir if matches!(out.last(), Some(Component::Normal(_))) => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    out
}

/// Lexical relative path from `base_dir` to `target`, with `/` separators.
/// Falls back to the target itself when the two share no root.
pub fn relative_path(target: &Path, base_dir: &Path) -> String {
    let t = normalize(target);
    let b = normalize(base_dir);
    if target.is_absolute() != base_dir.is_absolute() {
        return target.to_string_lossy().replace('\\', "/");
    }
    let common = t.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let mut parts: Vec<String> = std::iter::repeat_n("..".to_string(), b.len() - common).collect();
    parts.extend(t[common..].iter().map(|c| c.as_os_str().to_string_lossy().into_owned()));
    if parts.is_empty() {
        ".".into()
    } else {
        parts.join("/")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::Circle;
    use proptest::prelude::*;

    fn rec(id: &str, label: Label, brand: Option<Brand>) -> SampleRecord {
        SampleRecord {
            id: id.into(),
            path: format!("images/{id}.png"),
            label,
            brand,
            source: Source::Synthetic,
            identity_tag: Some("17".into()),
            geometry: Some(IrisGeometry {
                pupil: Circle::new(256.0, 256.0, 40.0),
                iris: Circle::new(256.5, 255.0, 110.25),
            }),
        }
    }

    #[test]
    fn thousand_records_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let recs: Vec<_> = (0..1000)
            .map(|i| {
                if i % 3 == 0 {
                    rec(&format!("s{i}"), Label::PA, Some(Brand::ALL[i % 7]))
                } else {
                    rec(&format!("s{i}"), Label::BF, None)
                }
            })
            .collect();
        let p = dir.path().join("m.jsonl");
        write_manifest(&recs, &p).unwrap();
        let back = read_manifest(&p).unwrap();
        assert_eq!(back.records, recs);
        assert_eq!(back.base_dir, dir.path());
    }

    #[test]
    fn field_names_are_exact() {
        let line = serde_json::to_string(&rec("a", Label::BF, None)).unwrap();
        assert!(line.starts_with(r#"{"id":"a","path":"images/a.png","label":"BF","brand":null,"source":"synthetic","identity_tag":"17","geometry":{"pupil":{"cx""#));
    }

    #[test]
    fn pa_without_brand_is_invariant_violation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        std::fs::write(&p, r#"{"id":"x","path":"x.png","label":"PA","brand":null,"source":"synthetic"}"#).unwrap();
        assert!(matches!(read_manifest(&p), Err(Error::InvariantViolation(_))));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        let good = serde_json::to_string(&rec("a", Label::BF, None)).unwrap();
        std::fs::write(&p, format!("{good}\n{{not json\n")).unwrap();
        match read_manifest(&p) {
            Err(Error::Manifest { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected_on_read_and_write() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        let r = rec("a", Label::BF, None);
        assert!(matches!(write_manifest(&[r.clone(), r.clone()], &p), Err(Error::DuplicateId(_))));
        let line = serde_json::to_string(&r).unwrap();
        std::fs::write(&p, format!("{line}\n{line}\n")).unwrap();
        assert!(matches!(read_manifest(&p), Err(Error::DuplicateId(_))));
    }

    #[test]
    fn empty_file_is_empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        std::fs::write(&p, "").unwrap();
        assert!(read_manifest(&p).unwrap().is_empty());
    }

    #[test]
    fn relative_paths() {
        assert_eq!(relative_path(Path::new("/w/synth/notcl/images/a.png"), Path::new("/w/filter")), "../synth/notcl/images/a.png");
        assert_eq!(relative_path(Path::new("/w/a/b.png"), Path::new("/w/a")), "b.png");
        assert_eq!(relative_path(Path::new("/w/./a/../b.png"), Path::new("/w")), "b.png");
    }

    fn arb_record() -> impl Strategy<Value = SampleRecord> {
        (
            "[a-z0-9_]{1,12}",
            any::<bool>(),
            0usize..7,
            prop::option::of("[0-9]{1,19}"),
            prop::option::of((1.0f64..600.0, 1.0f64..600.0, 5.0f64..40.0, 1.5f64..3.0)),
            any::<bool>(),
        )
            .prop_map(|(id, pa, b, tag, geom, authentic)| SampleRecord {
                path: format!("images/{id}.png"),
                id,
                label: if pa { Label::PA } else { Label::BF },
                brand: pa.then_some(Brand::ALL[b]),
                source: if authentic { Source::AuthenticAnalog } else { Source::Synthetic },
                identity_tag: tag,
                geometry: geom.map(|(cx, cy, rp, k)| IrisGeometry {
                    pupil: Circle::new(cx, cy, rp),
                    iris: Circle::new(cx + 0.5, cy - 0.25, rp * k),
                }),
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn manifest_round_trip(recs in prop::collection::vec(arb_record(), 0..40)) {
            let mut seen = HashSet::new();
            let recs: Vec<_> = recs.into_iter().filter(|r| seen.insert(r.id.clone())).collect();
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("m.jsonl");
            write_manifest(&recs, &p).unwrap();
            prop_assert_eq!(read_manifest(&p).unwrap().records, recs);
        }
    }
}
