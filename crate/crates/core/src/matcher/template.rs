use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MatcherConfig;
use crate::error::{Error, Result};

pub const CODE_ROWS: usize = 32;
pub const CODE_COLS: usize = 256;
/// Two phase bits per code cell.
pub const TEMPLATE_BITS: usize = 2 * CODE_ROWS * CODE_COLS;
pub(crate) const WORDS_PER_ROW: usize = 2 * CODE_COLS / 64;
const WORDS: usize = CODE_ROWS * WORDS_PER_ROW;
const MAGIC: &[u8; 6] = b"IRTPL1";

/// Binary iris code and validity mask.
///
/// Bit `2 * (row * CODE_COLS + col) + k` holds phase bit `k` (0 = real,
/// 1 = imaginary) of cell `(row, col)`; bits are packed LSB-first into
/// little-endian `u64` words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrisTemplate {
    code: Vec<u64>,
    mask: Vec<u64>,
    enrolled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// Fractional Hamming distance at `best_shift`.
    pub hd: f64,
    pub best_shift: i32,
    pub is_match: bool,
    /// Number of bits valid in both templates at `best_shift`.
    pub common_bits: usize,
}

impl IrisTemplate {
    pub fn from_words(code: Vec<u64>, mask: Vec<u64>, enroll_min_valid: f64) -> Self {
        assert_eq!(code.len(), WORDS);
        assert_eq!(mask.len(), WORDS);
        let mut t = Self {
            code,
            mask,
            enrolled: false,
        };
        t.enrolled = t.valid_fraction() >= enroll_min_valid;
        t
    }

    /// Builds a template from per-bit vectors of length [`TEMPLATE_BITS`].
    pub fn from_bits(code: &[bool], mask: &[bool], enroll_min_valid: f64) -> Self {
        assert_eq!(code.len(), TEMPLATE_BITS);
        assert_eq!(mask.len(), TEMPLATE_BITS);
        let pack = |bits: &[bool]| {
            let mut w = vec![0u64; WORDS];
            for (i, &b) in bits.iter().enumerate() {
                if b {
                    w[i / 64] |= 1 << (i % 64);
                }
            }
            w
        };
        Self::from_words(pack(code), pack(mask), enroll_min_valid)
    }

    pub fn enrolled(&self) -> bool {
        self.enrolled
    }

    pub fn code_bit(&self, i: usize) -> bool {
        self.code[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn mask_bit(&self, row: usize, col: usize, k: usize) -> bool {
        let i = 2 * (row * CODE_COLS + col) + k;
        self.mask[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn valid_bits(&self) -> usize {
        self.mask.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn valid_fraction(&self) -> f64 {
        self.valid_bits() as f64 / TEMPLATE_BITS as f64
    }

    /// Same mask, every code bit inverted.
    pub fn complement(&self) -> Self {
        Self {
            code: self.code.iter().map(|w| !w).collect(),
            mask: self.mask.clone(),
            enrolled: self.enrolled,
        }
    }

    /// Circular shift of every row by `cols` code columns
    /// (`out[c] = in[c - cols]`), applied to code and mask.
    pub fn shifted(&self, cols: i32) -> Self {
        Self {
            code: shift_rows(&self.code, cols),
            mask: shift_rows(&self.mask, cols),
            enrolled: self.enrolled,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(MAGIC.len() + 4 + 2 * TEMPLATE_BITS / 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(TEMPLATE_BITS as u32).to_le_bytes());
        for w in self.code.iter().chain(&self.mask) {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], enroll_min_valid: f64) -> std::result::Result<Self, String> {
        if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
            return Err("bad magic".into());
        }
        let len = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
        if len != TEMPLATE_BITS {
            return Err(format!("unsupported template length {len}"));
        }
        let body = &bytes[10..];
        if body.len() != 2 * TEMPLATE_BITS / 8 {
            return Err(format!("expected {} payload bytes, got {}", 2 * TEMPLATE_BITS / 8, body.len()));
        }
        let words: Vec<u64> = body
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let (code, mask) = words.split_at(WORDS);
        Ok(Self::from_words(code.to_vec(), mask.to_vec(), enroll_min_valid))
    }
}

fn shift_rows(words: &[u64], cols: i32) -> Vec<u64> {
    let row_bits = 2 * CODE_COLS;
    let s = (2 * cols as i64).rem_euclid(row_bits as i64) as usize;
    let mut out = vec![0u64; words.len()];
    for r in 0..CODE_ROWS {
        let src = &words[r * WORDS_PER_ROW..(r + 1) * WORDS_PER_ROW];
        let dst = &mut out[r * WORDS_PER_ROW..(r + 1) * WORDS_PER_ROW];
        let (ws, bs) = (s / 64, s % 64);
        for (i, d) in dst.iter_mut().enumerate() {
            // out bit j = in bit (j - s) mod row_bits.
            let lo = src[(i + WORDS_PER_ROW - ws) % WORDS_PER_ROW];
            if bs == 0 {
                *d = lo;
            } else {
                let prev = src[(i + 2 * WORDS_PER_ROW - ws - 1) % WORDS_PER_ROW];
                *d = (lo << bs) | (prev >> (64 - bs));
            }
        }
    }
    out
}

/// A reference template with every searched rotation precomputed, for
/// matching many probes against the same reference.
#[derive(Debug, Clone)]
pub struct RotationSet {
    enrolled: bool,
    /// `(shift, rotated template)` in search order: increasing `|shift|`,
    /// negative first.
    rotations: Vec<(i32, IrisTemplate)>,
}

impl RotationSet {
    pub fn new(t: &IrisTemplate, max_shift: i32) -> Self {
        let mut shifts: Vec<i32> = (-max_shift..=max_shift).collect();
        shifts.sort_by_key(|s| (s.abs(), *s));
        Self {
            enrolled: t.enrolled,
            rotations: shifts.into_iter().map(|s| (s, t.shifted(s))).collect(),
        }
    }

    pub fn enrolled(&self) -> bool {
        self.enrolled
    }

    /// As [`match_templates`] with this set as the reference.
    pub fn match_probe(&self, a: &IrisTemplate, cfg: &MatcherConfig) -> Result<MatchResult> {
        if !a.enrolled {
            return Err(Error::NotEnrolled("probe".into()));
        }
        if !self.enrolled {
            return Err(Error::NotEnrolled("reference".into()));
        }
        let mut best: Option<MatchResult> = None;
        let mut max_common = 0;
        for (s, b) in self.rotations.iter().filter(|(s, _)| s.abs() <= cfg.max_shift) {
            let mut diff = 0usize;
            let mut common = 0usize;
            for i in 0..WORDS {
                let m = a.mask[i] & b.mask[i];
                common += m.count_ones() as usize;
                diff += ((a.code[i] ^ b.code[i]) & m).count_ones() as usize;
            }
            max_common = max_common.max(common);
            if common < cfg.min_common_bits {
                continue;
            }
            let hd = diff as f64 / common as f64;
            if best.is_none_or(|b| hd < b.hd) {
                best = Some(MatchResult {
                    hd,
                    best_shift: *s,
                    is_match: hd < cfg.match_threshold,
                    common_bits: common,
                });
            }
        }
        best.ok_or(Error::InsufficientOverlap(max_common))
    }
}

/// Minimum masked fractional Hamming distance over column shifts of `b` in
/// `[-max_shift, max_shift]`. Shifts where the templates share fewer than
/// `min_common_bits` valid bits are skipped; ties keep the smallest
/// `|shift|`.
pub fn match_templates(a: &IrisTemplate, b: &IrisTemplate, cfg: &MatcherConfig) -> Result<MatchResult> {
    if !b.enrolled {
        return Err(Error::NotEnrolled("reference".into()));
    }
    RotationSet::new(b, cfg.max_shift).match_probe(a, cfg)
}

pub fn write_template(t: &IrisTemplate, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, t.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_template(path: impl AsRef<Path>, cfg: &MatcherConfig) -> Result<IrisTemplate> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    IrisTemplate::from_bytes(&bytes, cfg.enroll_min_valid).map_err(|message| Error::Format {
        kind: "template",
        path: path.to_path_buf(),
        message,
    })
}
