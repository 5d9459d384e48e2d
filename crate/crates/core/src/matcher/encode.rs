use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::normalize::{PolarIris, ANGULAR_RES, RADIAL_RES};
use super::template::{IrisTemplate, CODE_COLS, CODE_ROWS, WORDS_PER_ROW};
use super::MatcherConfig;

/// Log-Gabor centre wavelength in code columns.
const WAVELENGTH: f64 = 18.0;
/// Bandwidth ratio sigma / f0.
const SIGMA_ON_F: f64 = 0.55;
/// Half-width of the spatial support a bit depends on, in code columns.
const SUPPORT_HALF: i64 = 9;

struct Filter {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    response: Vec<f64>,
}

fn filter() -> &'static Filter {
    static FILTER: OnceLock<Filter> = OnceLock::new();
    FILTER.get_or_init(|| {
        let mut planner = FftPlanner::new();
        let n = CODE_COLS;
        let f0 = 1.0 / WAVELENGTH;
        let denom = 2.0 * SIGMA_ON_F.ln().powi(2);
        // One-sided: only positive frequencies, so the output is the
        // analytic (complex) log-Gabor response.
        let response = (0..n)
            .map(|k| {
                if k == 0 || k >= n / 2 {
                    0.0
                } else {
                    let f = k as f64 / n as f64;
                    (-(f / f0).ln().powi(2) / denom).exp()
                }
            })
            .collect();
        Filter {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            response,
        }
    })
}

/// Encodes a polar iris into a 2-bit-per-cell phase code.
///
/// The polar image is averaged down to `CODE_ROWS` x `CODE_COLS` (a cell is
/// valid only if all four source samples are), each row is filtered
/// circularly with a 1-D log-Gabor, and each cell yields
/// `[re >= 0, im >= 0]`. A bit is unmasked when its cell and every cell
/// within the filter support (+-9 columns) are valid.
pub fn encode(p: &PolarIris, cfg: &MatcherConfig) -> IrisTemplate {
    debug_assert_eq!(RADIAL_RES, 2 * CODE_ROWS);
    debug_assert_eq!(ANGULAR_RES, 2 * CODE_COLS);
    let f = filter();
    let mut code = vec![0u64; CODE_ROWS * WORDS_PER_ROW];
    let mut mask = vec![0u64; CODE_ROWS * WORDS_PER_ROW];
    let mut row = vec![Complex::new(0.0, 0.0); CODE_COLS];
    let mut cell_valid = vec![false; CODE_COLS];

    for r in 0..CODE_ROWS {
        let mut sum = 0.0;
        let mut n_valid = 0usize;
        for c in 0..CODE_COLS {
            let mut acc = 0.0;
            let mut ok = true;
            for (dr, dc) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let (rr, cc) = (2 * r + dr, 2 * c + dc);
                acc += f64::from(p.value(rr, cc));
                ok &= p.is_valid(rr, cc);
            }
            let v = acc / 4.0;
            cell_valid[c] = ok;
            row[c] = Complex::new(v, 0.0);
            if ok {
                sum += v;
                n_valid += 1;
            }
        }
        let fill = if n_valid > 0 { sum / n_valid as f64 } else { 0.0 };
        for c in 0..CODE_COLS {
            if !cell_valid[c] {
                row[c] = Complex::new(fill, 0.0);
            }
        }

        f.forward.process(&mut row);
        for (v, h) in row.iter_mut().zip(&f.response) {
            *v *= *h;
        }
        f.inverse.process(&mut row);

        let n = CODE_COLS as i64;
        for c in 0..CODE_COLS {
            let bad = (c as i64 - SUPPORT_HALF..=c as i64 + SUPPORT_HALF)
                .any(|k| !cell_valid[k.rem_euclid(n) as usize]);
            let bit = 2 * c;
            let (w, b) = (r * WORDS_PER_ROW + bit / 64, bit % 64);
            if row[c].re >= 0.0 {
                code[w] |= 1 << b;
            }
            if row[c].im >= 0.0 {
                code[w] |= 1 << (b + 1);
            }
            if !bad {
                mask[w] |= 0b11 << b;
            }
        }
    }
    IrisTemplate::from_words(code, mask, cfg.enroll_min_valid)
}
