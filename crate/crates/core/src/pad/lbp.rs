use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::imageio::{GrayImage, PAD_INPUT_SIDE};

/// Histogram bins per cell: 58 uniform patterns plus one shared bin for all
/// non-uniform patterns.
pub const LBP_BINS: usize = 59;
pub const GRID: usize = 4;
pub const CELL_SIDE: usize = PAD_INPUT_SIDE / GRID;
pub const FEATURE_DIM: usize = LBP_BINS * GRID * GRID;

/// Neighbour offsets `(dx, dy)` in angular order starting east and turning
/// counter-clockwise (image y points down). Opposite neighbours are four
/// steps apart, so a 180° image rotation rotates every code by four bits.
const NEIGHBOURS: [(isize, isize); 8] = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)];

/// Cell-wise uniform LBP histograms, each L1-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn cell(&self, cx: usize, cy: usize) -> &[f64] {
        let start = (cy * GRID + cx) * LBP_BINS;
        &self.values[start..start + LBP_BINS]
    }
}

fn transitions(code: u8) -> u32 {
    (code ^ code.rotate_right(1)).count_ones()
}

/// Maps each 8-bit code to its bin: uniform codes (at most two circular 0/1
/// transitions) in increasing code order, then the non-uniform bin.
pub fn bin_table() -> &'static [u8; 256] {
    static TABLE: OnceLock<[u8; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0u8; 256];
        let mut next = 0u8;
        for code in 0..=255u8 {
            if transitions(code) <= 2 {
                t[code as usize] = next;
                next += 1;
            } else {
                t[code as usize] = (LBP_BINS - 1) as u8;
            }
        }
        debug_assert_eq!(next as usize, LBP_BINS - 1);
        t
    })
}

pub fn lbp_code(img: &GrayImage, x: usize, y: usize) -> u8 {
    let c = img.get(x, y);
    NEIGHBOURS.iter().enumerate().fold(0u8, |acc, (k, &(dx, dy))| {
        let n = img.get((x as isize + dx) as usize, (y as isize + dy) as usize);
        acc | (u8::from(n >= c) << k)
    })
}

/// Uniform LBP(8,1) histograms over a 4×4 grid of 64×64 cells of a 256×256
/// image. The one-pixel frame has no full neighbourhood and is skipped.
pub fn extract_features(img: &GrayImage) -> Result<FeatureVector> {
    if img.width() != PAD_INPUT_SIDE || img.height() != PAD_INPUT_SIDE {
        return Err(Error::WrongInputSize {
            expected: format!("{PAD_INPUT_SIDE}x{PAD_INPUT_SIDE}"),
            actual: format!("{}x{}", img.width(), img.height()),
        });
    }
    let table = bin_table();
    let mut counts = vec![0u32; FEATURE_DIM];
    for y in 1..PAD_INPUT_SIDE - 1 {
        let row_cell = (y / CELL_SIDE) * GRID;
        for x in 1..PAD_INPUT_SIDE - 1 {
            let cell = row_cell + x / CELL_SIDE;
            counts[cell * LBP_BINS + table[lbp_code(img, x, y) as usize] as usize] += 1;
        }
    }
    let mut values = vec![0.0; FEATURE_DIM];
    for (dst, src) in values.chunks_mut(LBP_BINS).zip(counts.chunks(LBP_BINS)) {
        let total: u32 = src.iter().sum();
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = f64::from(s) / f64::from(total);
        }
    }
    Ok(FeatureVector { values })
}
