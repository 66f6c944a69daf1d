//! Centered cardinal B-splines and the many-knot basis built from them.
//!
//! `Ω_k` is the centered cardinal B-spline of degree `k` on unit knots: the
//! `(k+1)`-fold convolution of the unit box, supported on
//! `[-(k+1)/2, (k+1)/2]`. A many-knot basis of order `k` combines `k`
//! symmetric shifted averages of `Ω_k`,
//!
//! ```text
//! q_k(x) = Σ_i t_i · ½[Ω_k(x + a_i) + Ω_k(x − a_i)]      (a_0 = 0 gives Ω_k itself)
//! ```
//!
//! with the coefficients `t_i` chosen so that `q_k` interpolates the Kronecker
//! delta on the integers. Curves assembled from a cardinal basis pass through
//! their knot values, so no linear system has to be solved to fit them.

use crate::error::{Error, Result};

/// Tolerance used when checking that a constructed basis is cardinal.
pub const CARDINALITY_TOLERANCE: f64 = 1e-10;

/// Degree of a centered cardinal B-spline. Only 1, 2 and 3 are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BSplineOrder(u32);

impl BSplineOrder {
    pub const LINEAR: BSplineOrder = BSplineOrder(1);
    pub const QUADRATIC: BSplineOrder = BSplineOrder(2);
    pub const CUBIC: BSplineOrder = BSplineOrder(3);

    pub fn new(k: u32) -> Result<Self> {
        match k {
            1..=3 => Ok(BSplineOrder(k)),
            _ => Err(Error::InvalidOrder(k)),
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Half-width of the support of `Ω_k`, `(k+1)/2`.
    pub fn half_width(self) -> f64 {
        f64::from(self.0 + 1) / 2.0
    }
}

impl Default for BSplineOrder {
    fn default() -> Self {
        BSplineOrder::QUADRATIC
    }
}

/// Closed support interval `[lo, hi]` of a basis function, in knot-spacing units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SupportInterval {
    pub fn symmetric(half_width: f64) -> Self {
        debug_assert!(half_width > 0.0);
        SupportInterval {
            lo: -half_width,
            hi: half_width,
        }
    }

    pub fn half_width(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

/// Evaluates `Ω_k(x)`. Returns exactly 0 outside the open support.
pub fn bspline_eval(order: BSplineOrder, x: f64) -> f64 {
    let ax = x.abs();
    match order.0 {
        1 => {
            if ax < 1.0 {
                1.0 - ax
            } else {
                0.0
            }
        }
        2 => {
            if ax <= 0.5 {
                0.75 - ax * ax
            } else if ax < 1.5 {
                let d = 1.5 - ax;
                0.5 * d * d
            } else {
                0.0
            }
        }
        3 => {
            if ax <= 1.0 {
                2.0 / 3.0 - ax * ax + 0.5 * ax * ax * ax
            } else if ax < 2.0 {
                let d = 2.0 - ax;
                d * d * d / 6.0
            } else {
                0.0
            }
        }
        _ => unreachable!("BSplineOrder is validated on construction"),
    }
}

/// `½[Ω_k(x + l) + Ω_k(x − l)]` for `l > 0`, and `Ω_k(x)` for `l = 0`.
pub fn symmetric_shift_pair(order: BSplineOrder, l: f64, x: f64) -> f64 {
    debug_assert!(l >= 0.0);
    let x = x.abs();
    if l == 0.0 {
        bspline_eval(order, x)
    } else {
        0.5 * (bspline_eval(order, x + l) + bspline_eval(order, x - l))
    }
}

fn validate_shifts(order: BSplineOrder, shifts: &[f64]) -> Result<()> {
    let k = order.get() as usize;
    if shifts.len() != k {
        return Err(Error::InvalidShifts(format!(
            "order {k} needs {k} shifts, got {}",
            shifts.len()
        )));
    }
    if let Some(bad) = shifts.iter().find(|a| !a.is_finite() || **a < 0.0) {
        return Err(Error::InvalidShifts(format!(
            "shifts must be finite and nonnegative, got {bad}"
        )));
    }
    if shifts[0] != 0.0 {
        return Err(Error::InvalidShifts(format!(
            "first shift must be 0, got {}",
            shifts[0]
        )));
    }
    if shifts.windows(2).any(|w| w[1] <= w[0]) {
        // A repeated shift makes two columns of the condition system equal.
        return Err(Error::DegenerateShifts);
    }
    Ok(())
}

/// Solves for the coefficients `t_i` that make `q_k(0) = 1` and `q_k(j) = 0`
/// for `j = 1..k-1`.
pub fn derive_coefficients(order: BSplineOrder, shifts: &[f64]) -> Result<Vec<f64>> {
    validate_shifts(order, shifts)?;
    let k = shifts.len();
    // Row j: q_k(j) = Σ_i t_i · pair(a_i, j).
    let mut system: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut row: Vec<f64> = shifts
                .iter()
                .map(|&a| symmetric_shift_pair(order, a, j as f64))
                .collect();
            row.push(if j == 0 { 1.0 } else { 0.0 });
            row
        })
        .collect();
    solve_small(&mut system).ok_or(Error::DegenerateShifts)
}

/// Gaussian elimination with partial pivoting on an augmented `n × (n+1)` system.
fn solve_small(a: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = a.len();
    let scale = a
        .iter()
        .flat_map(|r| r[..n].iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty range");
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for row in lower.iter_mut() {
            let f = row[col] / pivot_row[col];
            if f != 0.0 {
                for (r, p) in row[col..=n].iter_mut().zip(&pivot_row[col..=n]) {
                    *r -= f * p;
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (a[row][n] - tail) / a[row][row];
    }
    Some(x)
}

/// A cardinal many-knot spline basis `q_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyKnotBasis {
    order: BSplineOrder,
    shifts: Vec<f64>,
    coeffs: Vec<f64>,
    support: SupportInterval,
}

impl ManyKnotBasis {
    /// Builds a basis from explicit coefficients. Fails unless the result is
    /// cardinal at every integer inside its support.
    pub fn new(order: BSplineOrder, shifts: Vec<f64>, coeffs: Vec<f64>) -> Result<Self> {
        validate_shifts(order, &shifts)?;
        if coeffs.len() != shifts.len() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidShifts(format!(
                "expected {} finite coefficients, got {:?}",
                shifts.len(),
                coeffs
            )));
        }
        let max_shift = shifts.last().copied().unwrap_or(0.0);
        let support = SupportInterval::symmetric(order.half_width() + max_shift);
        let basis = ManyKnotBasis {
            order,
            shifts,
            coeffs,
            support,
        };
        basis.check_cardinal()?;
        Ok(basis)
    }

    /// Derives the coefficients from the shifts, then validates cardinality.
    pub fn from_shifts(order: BSplineOrder, shifts: Vec<f64>) -> Result<Self> {
        let coeffs = derive_coefficients(order, &shifts)?;
        Self::new(order, shifts, coeffs)
    }

    /// The quadric basis `q_2 = 2Ω_2(x) − ½[Ω_2(x+½) + Ω_2(x−½)]`.
    pub fn quadric() -> Self {
        Self::from_shifts(BSplineOrder::QUADRATIC, vec![0.0, 0.5])
            .expect("the quadric shifts are cardinal")
    }

    /// `q_1 = Ω_1`, the hat function.
    pub fn linear() -> Self {
        Self::from_shifts(BSplineOrder::LINEAR, vec![0.0]).expect("Ω_1 is cardinal")
    }

    fn check_cardinal(&self) -> Result<()> {
        let reach = self.support.half_width().floor() as i64;
        for j in 0..=reach {
            let value = self.eval(j as f64);
            let expected = if j == 0 { 1.0 } else { 0.0 };
            if (value - expected).abs() > CARDINALITY_TOLERANCE {
                return Err(Error::NotCardinal { at: j, value });
            }
        }
        Ok(())
    }

    pub fn order(&self) -> BSplineOrder {
        self.order
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn support(&self) -> SupportInterval {
        self.support
    }

    /// Evaluates `q_k(x)`; exactly 0 outside the support.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.abs();
        if x >= self.support.hi {
            return 0.0;
        }
        self.shifts
            .iter()
            .zip(&self.coeffs)
            .map(|(&a, &t)| t * symmetric_shift_pair(self.order, a, x))
            .sum()
    }
}

impl Default for ManyKnotBasis {
    fn default() -> Self {
        Self::quadric()
    }
}

/// Free-function form of [`ManyKnotBasis::eval`].
pub fn manyknot_eval(basis: &ManyKnotBasis, x: f64) -> f64 {
    basis.eval(x)
}

/// Free-function form of [`ManyKnotBasis::support`].
pub fn manyknot_support(basis: &ManyKnotBasis) -> SupportInterval {
    basis.support()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Ω_k by repeated convolution with the unit box: Ω_k(x) = ∫_{x-½}^{x+½} Ω_{k-1}(t) dt,
    /// each integral by composite trapezoid split at the half-integer breakpoints.
    fn convolution_oracle(k: u32, x: f64, panels: usize) -> f64 {
        if k == 0 {
            return if x.abs() < 0.5 {
                1.0
            } else if x.abs() == 0.5 {
                0.5
            } else {
                0.0
            };
        }
        let (a, b) = (x - 0.5, x + 0.5);
        let mut cuts = vec![a];
        let mut m = (a * 2.0).floor() / 2.0 + 0.5;
        while m < b {
            if m > a {
                cuts.push(m);
            }
            m += 0.5;
        }
        cuts.push(b);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi - lo < 1e-15 {
                continue;
            }
            // The integrand is piecewise linear or constant below k = 3, where one panel is exact.
            let panels = if k >= 3 { panels } else { 1 };
            let step = (hi - lo) / panels as f64;
            let inner = |t: f64| convolution_oracle(k - 1, t, panels);
            // One-sided limits at the breakpoints keep the box discontinuity out of the sum.
            let eps = 1e-13;
            let mut s = 0.5 * (inner(lo + eps) + inner(hi - eps));
            for i in 1..panels {
                s += inner(lo + i as f64 * step);
            }
            total += s * step;
        }
        total
    }

    #[test]
    fn order_range() {
        assert!(BSplineOrder::new(0).is_err());
        assert!(BSplineOrder::new(4).is_err());
        for k in 1..=3 {
            assert_eq!(BSplineOrder::new(k).unwrap().get(), k);
        }
    }

    #[test]
    fn closed_forms_match_convolution_oracle() {
        for k in 1..=3u32 {
            let order = BSplineOrder::new(k).unwrap();
            let panels = 1000;
            for i in -25..=25 {
                let x = i as f64 * 0.1 + 0.013;
                let oracle = convolution_oracle(k, x, panels);
                let got = bspline_eval(order, x);
                assert!(
                    (oracle - got).abs() < 1e-6,
                    "k={k} x={x}: oracle {oracle} closed {got}"
                );
            }
        }
    }

    #[test]
    fn bspline_examples() {
        let q = BSplineOrder::QUADRATIC;
        assert_eq!(bspline_eval(BSplineOrder::LINEAR, 0.0), 1.0);
        assert_eq!(bspline_eval(q, 1.5), 0.0);
        // Frozen from the convolution oracle.
        assert!((convolution_oracle(2, 0.0, 200) - 0.75).abs() < 1e-9);
        assert!((convolution_oracle(2, 0.5, 200) - 0.5).abs() < 1e-9);
        assert!((convolution_oracle(3, 0.0, 1000) - 2.0 / 3.0).abs() < 1e-6);
        assert_eq!(bspline_eval(q, 0.0), 0.75);
        assert_eq!(bspline_eval(q, 0.5), 0.5);
        assert_eq!(bspline_eval(BSplineOrder::CUBIC, 0.0), 2.0 / 3.0);
    }

    #[test]
    fn bspline_unit_integral() {
        for k in 1..=3 {
            let order = BSplineOrder::new(k).unwrap();
            let hw = order.half_width();
            let step = 1e-4;
            let n = (2.0 * hw / step).round() as usize;
            let mut s = 0.5 * (bspline_eval(order, -hw) + bspline_eval(order, hw));
            for i in 1..n {
                s += bspline_eval(order, -hw + i as f64 * step);
            }
            assert!((s * step - 1.0).abs() < 1e-8, "k={k}: {}", s * step);
        }
    }

    #[test]
    fn zero_outside_support() {
        for k in 1..=3 {
            let order = BSplineOrder::new(k).unwrap();
            let hw = order.half_width();
            for x in [hw, hw + 1e-9, hw + 3.0, -hw, -hw - 0.2] {
                assert_eq!(bspline_eval(order, x), 0.0);
            }
        }
    }

    #[test]
    fn shift_pair_examples() {
        let q = BSplineOrder::QUADRATIC;
        assert_eq!(symmetric_shift_pair(q, 0.0, 0.3), bspline_eval(q, 0.3));
        assert_eq!(symmetric_shift_pair(q, 0.5, 0.0), 0.5);
        assert_eq!(symmetric_shift_pair(q, 0.5, 2.5), 0.0);
        let oracle = 0.5 * (convolution_oracle(2, 0.5, 200) + convolution_oracle(2, -0.5, 200));
        assert!((oracle - 0.5).abs() < 1e-9);
        for i in 0..50 {
            let x = i as f64 * 0.07;
            assert_eq!(symmetric_shift_pair(q, 0.5, x), symmetric_shift_pair(q, 0.5, -x));
        }
    }

    #[test]
    fn quadric_coefficients() {
        let t = derive_coefficients(BSplineOrder::QUADRATIC, &[0.0, 0.5]).unwrap();
        assert!((t[0] - 2.0).abs() < 1e-12 && (t[1] + 1.0).abs() < 1e-12, "{t:?}");
        assert_eq!(derive_coefficients(BSplineOrder::LINEAR, &[0.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn degenerate_and_invalid_shifts() {
        assert!(matches!(
            derive_coefficients(BSplineOrder::QUADRATIC, &[0.0, 0.0]),
            Err(Error::DegenerateShifts)
        ));
        assert!(matches!(
            derive_coefficients(BSplineOrder::QUADRATIC, &[0.0]),
            Err(Error::InvalidShifts(_))
        ));
        assert!(matches!(
            derive_coefficients(BSplineOrder::QUADRATIC, &[0.1, 0.5]),
            Err(Error::InvalidShifts(_))
        ));
        assert!(matches!(
            derive_coefficients(BSplineOrder::QUADRATIC, &[0.0, -0.5]),
            Err(Error::InvalidShifts(_))
        ));
    }

    #[test]
    fn non_cardinal_coefficients_rejected() {
        let err = ManyKnotBasis::new(BSplineOrder::QUADRATIC, vec![0.0, 0.5], vec![1.0, 0.0]);
        assert!(matches!(err, Err(Error::NotCardinal { .. })));
    }

    /// Direct transcription of q_2 = 2Ω_2(x) − ½[Ω_2(x+½) + Ω_2(x−½)].
    fn q2_direct(x: f64) -> f64 {
        let o = |y: f64| bspline_eval(BSplineOrder::QUADRATIC, y);
        2.0 * o(x) - 0.5 * (o(x + 0.5) + o(x - 0.5))
    }

    #[test]
    fn quadric_values() {
        let q = ManyKnotBasis::quadric();
        assert!((q.eval(0.0) - 1.0).abs() < 1e-15);
        assert!(q.eval(1.0).abs() < 1e-15);
        assert!((q.eval(0.5) - 0.5625).abs() < 1e-15);
        assert_eq!(q.eval(2.2), 0.0);
        assert_eq!(q.eval(-2.0), 0.0);
        assert_eq!(q2_direct(0.5), 0.5625);
        for i in 0..=400 {
            let x = -2.0 + i as f64 * 0.01;
            assert!((q.eval(x) - q2_direct(x)).abs() < 1e-12);
            assert_eq!(q.eval(x), q.eval(-x));
        }
    }

    #[test]
    fn supports() {
        assert_eq!(ManyKnotBasis::quadric().support(), SupportInterval { lo: -2.0, hi: 2.0 });
        assert_eq!(ManyKnotBasis::linear().support(), SupportInterval { lo: -1.0, hi: 1.0 });
        let cubic = ManyKnotBasis::from_shifts(BSplineOrder::CUBIC, vec![0.0, 0.25, 0.75]).unwrap();
        assert_eq!(cubic.support(), SupportInterval { lo: -2.75, hi: 2.75 });
        assert!(cubic.support().contains(2.7));
        assert!(!cubic.support().contains(2.75));
    }

    #[test]
    fn cubic_basis_cardinal_everywhere() {
        let cubic = ManyKnotBasis::from_shifts(BSplineOrder::CUBIC, vec![0.0, 0.25, 0.75]).unwrap();
        for j in -5..=5 {
            let expected = if j == 0 { 1.0 } else { 0.0 };
            assert!((cubic.eval(j as f64) - expected).abs() < 1e-12, "j={j}");
        }
        let sum: f64 = cubic.coeffs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}
