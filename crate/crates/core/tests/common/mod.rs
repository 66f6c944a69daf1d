#![allow(dead_code)]

use manyknot::SmoothCurve;

/// Quadratic centered B-spline, written out independently of the library.
pub fn omega2(x: f64) -> f64 {
    let a = x.abs();
    if a <= 0.5 {
        0.75 - a * a
    } else if a <= 1.5 {
        0.5 * (1.5 - a) * (1.5 - a)
    } else {
        0.0
    }
}

/// q_2(x) = 2Ω_2(x) − ½[Ω_2(x+½) + Ω_2(x−½)].
pub fn q2(x: f64) -> f64 {
    2.0 * omega2(x) - 0.5 * (omega2(x + 0.5) + omega2(x - 0.5))
}

/// Naive curve value: every knot, ghosts included, contributes through q_2
/// with no attempt to skip knots whose support misses `x`.
pub fn naive_curve_q2(curve: &SmoothCurve, x: f64) -> f64 {
    let grid = curve.grid();
    let h = grid.spacing();
    let n = grid.len();
    let values = curve.knot_values();
    let ghosts = 2i64;
    let mut sum = 0.0;
    for j in -ghosts..(n as i64 + ghosts) {
        let (p, v) = if j < 0 {
            (grid.start() + j as f64 * h, values[0])
        } else if j >= n as i64 {
            (grid.end() + (j - n as i64 + 1) as f64 * h, values[n - 1])
        } else {
            (grid.positions()[j as usize], values[j as usize])
        };
        sum += v * q2((x - p) / h);
    }
    sum
}

pub fn rms(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (ss / a.len() as f64).sqrt()
}

/// Small deterministic generator for test sample points (SplitMix64).
pub struct Points(u64);

impl Points {
    pub fn new(seed: u64) -> Self {
        Points(seed)
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
