//! Small numerical helpers shared by every module: compensated summation,
//! harmonic numbers, `e(t)` and least-squares line fits.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// Neumaier-compensated accumulator. Summation order is the call order.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated complex accumulator (real and imaginary parts separately).
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for x in items {
        acc.add(x);
    }
    acc.value()
}

/// `M_N = sum_{n <= N} 1/n`, summed in ascending order.
pub fn harmonic(n: u64) -> f64 {
    let mut acc = NeumaierSum::new();
    for k in 1..=n {
        acc.add(1.0 / k as f64);
    }
    acc.value()
}

/// `e(t) = exp(2 pi i t)`.
#[inline]
pub fn e(t: f64) -> Complex64 {
    let (s, c) = (TAU * t).sin_cos();
    Complex64::new(c, s)
}

/// Fractional part in `[0, 1)`.
#[inline]
pub fn frac(t: f64) -> f64 {
    let f = t - t.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Distance from `t` to the nearest integer.
#[inline]
pub fn circle_dist(s: f64, t: f64) -> f64 {
    let d = frac(s - t);
    d.min(1.0 - d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y ~ slope * x + intercept`.
///
/// Returns `None` for fewer than two points or a degenerate abscissa.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // A constant response is fitted perfectly.
    let r2 = if syy <= 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Some(LineFit {
        slope,
        intercept,
        r2,
    })
}

/// Leading coefficient of the least-squares parabola `y ~ a x^2 + b x + c`.
pub fn quadratic_coefficient(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 3 || n != ys.len() {
        return None;
    }
    // Normal equations on centred abscissae.
    let mx = xs.iter().sum::<f64>() / n as f64;
    let u: Vec<f64> = xs.iter().map(|x| x - mx).collect();
    let (mut s0, mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
    for (ui, yi) in u.iter().zip(ys) {
        let u2 = ui * ui;
        s0 += 1.0;
        s1 += ui;
        s2 += u2;
        s3 += u2 * ui;
        s4 += u2 * u2;
        t0 += yi;
        t1 += ui * yi;
        t2 += u2 * yi;
    }
    let m = [[s4, s3, s2], [s3, s2, s1], [s2, s1, s0]];
    let rhs = [t2, t1, t0];
    let det = det3(&m);
    if det.abs() < 1e-300 {
        return None;
    }
    let mut ma = m;
    for row in 0..3 {
        ma[row][0] = rhs[row];
    }
    Some(det3(&ma) / det)
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancellation() {
        let mut acc = NeumaierSum::new();
        for x in [1.0, 1e100, 1.0, -1e100] {
            acc.add(x);
        }
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn harmonic_small_values() {
        assert_eq!(harmonic(1), 1.0);
        assert!((harmonic(4) - 25.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn line_fit_exact() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let fit = fit_line(&xs, &ys).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_coefficient_of_parabola() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x * x - x + 2.0).collect();
        assert!((quadratic_coefficient(&xs, &ys).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn circle_distance_wraps() {
        assert!((circle_dist(0.95, 0.05) - 0.1).abs() < 1e-12);
        assert_eq!(circle_dist(0.3, 0.3), 0.0);
    }
}
