//! Least-squares fits of asymptotic laws along traces.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitModel {
    /// `log|v| = k log|s| + b`; values `[k, b]`.
    PowerExponent,
    /// `h − k₂s² = k₄s⁴` with `k₂` fixed; values `[k₄]`.
    QuadraticPlusQuartic,
    /// `h = k₂s² + k₃|s|³`; values `[k₂, k₃]`.
    QuadraticCoefficient,
}

impl FitModel {
    pub fn name(self) -> &'static str {
        match self {
            FitModel::PowerExponent => "power_exponent",
            FitModel::QuadraticPlusQuartic => "quadratic_plus_quartic",
            FitModel::QuadraticCoefficient => "quadratic_coefficient",
        }
    }
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Range of the independent variable actually used.
    pub window: (f64, f64),
    pub rms: f64,
    pub n: usize,
}

impl FitResult {
    /// Leading fitted value.
    pub fn value(&self) -> f64 {
        self.values[0]
    }

    pub fn error(&self) -> f64 {
        self.stderr[0]
    }
}

/// Linear least squares `A c ≈ b` with column scaling; returns
/// coefficients, standard errors and residual RMS.
pub(crate) fn lstsq(rows: &[Vec<f64>], rhs: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let n = rows.len();
    let k = rows.first().map_or(0, |r| r.len());
    if n <= k || k == 0 {
        return Err(Error::InsufficientSamples { found: n, needed: k + 1 });
    }
    let mut a = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let scale: Vec<f64> = (0..k)
        .map(|j| {
            let s = a.column(j).norm();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    for (j, s) in scale.iter().enumerate() {
        a.column_mut(j).unscale_mut(*s);
    }
    let b = DVector::from_column_slice(rhs);
    let svd = a.clone().svd(true, true);
    let sol = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::Integration(format!("least squares failed: {e}")))?;
    let resid = &b - &a * &sol;
    let rss = resid.norm_squared();
    let sigma2 = rss / (n - k) as f64;
    // (AᵀA)⁻¹ = V Σ⁻² Vᵀ
    let v_t = svd.v_t.as_ref().expect("requested");
    let mut se = vec![0.0; k];
    for (j, s) in se.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..k {
            let sv = svd.singular_values[i];
            if sv > 0.0 {
                acc += (v_t[(i, j)] / sv).powi(2);
            }
        }
        *s = (sigma2 * acc).sqrt() / scale[j];
    }
    let coef = (0..k).map(|j| sol[j] / scale[j]).collect();
    Ok((coef, se, (rss / n as f64).sqrt()))
}

fn window_of(s: &[f64]) -> (f64, f64) {
    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Slope of `log|v|` against `log|s|`.
pub fn fit_power_law(s: &[f64], v: &[f64]) -> Result<FitResult> {
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut used = Vec::new();
    for (&a, &b) in s.iter().zip(v) {
        if a != 0.0 && b != 0.0 && a.is_finite() && b.is_finite() {
            rows.push(vec![a.abs().ln(), 1.0]);
            rhs.push(b.abs().ln());
            used.push(a.abs());
        }
    }
    if rows.len() < 20 {
        return Err(Error::InsufficientSamples {
            found: rows.len(),
            needed: 20,
        });
    }
    let (values, stderr, rms) = lstsq(&rows, &rhs)?;
    Ok(FitResult {
        model: FitModel::PowerExponent,
        values,
        stderr,
        window: window_of(&used),
        rms,
        n: rows.len(),
    })
}

/// `h − k₂s² = k₄s⁴` for fixed `k₂`.
pub fn fit_quartic(s: &[f64], h: &[f64], k2: f64) -> Result<FitResult> {
    let rows: Vec<Vec<f64>> = s.iter().map(|v| vec![v.powi(4)]).collect();
    let rhs: Vec<f64> = s.iter().zip(h).map(|(a, b)| b - k2 * a * a).collect();
    let (values, stderr, rms) = lstsq(&rows, &rhs)?;
    Ok(FitResult {
        model: FitModel::QuadraticPlusQuartic,
        values,
        stderr,
        window: window_of(&s.iter().map(|v| v.abs()).collect::<Vec<_>>()),
        rms,
        n: s.len(),
    })
}

/// `h = k₂s² + k₃|s|³`.
pub fn fit_quadratic(s: &[f64], h: &[f64]) -> Result<FitResult> {
    let rows: Vec<Vec<f64>> = s.iter().map(|v| vec![v * v, v.abs().powi(3)]).collect();
    let (values, stderr, rms) = lstsq(&rows, h)?;
    Ok(FitResult {
        model: FitModel::QuadraticCoefficient,
        values,
        stderr,
        window: window_of(&s.iter().map(|v| v.abs()).collect::<Vec<_>>()),
        rms,
        n: s.len(),
    })
}

/// `n` log-spaced values on `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect();
    v[0] = lo;
    v[n - 1] = hi;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_square() {
        let s = log_space(0.01, 0.1, 50);
        let v: Vec<f64> = s.iter().map(|x| x * x).collect();
        let f = fit_power_law(&s, &v).unwrap();
        assert!((f.value() - 2.0).abs() < 1e-3);
        assert!(f.rms < 1e-12);
        assert_eq!(f.window, (0.01, 0.1));
    }

    #[test]
    fn too_few_samples() {
        let s = log_space(0.01, 0.1, 10);
        assert!(matches!(
            fit_power_law(&s, &s),
            Err(Error::InsufficientSamples { found: 10, .. })
        ));
    }

    #[test]
    fn quartic_of_sine_square() {
        let s = log_space(1e-3, 1e-2, 40);
        let h: Vec<f64> = s.iter().map(|x| (x / 2.0).sin().powi(2)).collect();
        let f = fit_quartic(&s, &h, 0.25).unwrap();
        assert!((f.value() + 1.0 / 48.0).abs() < 1e-5, "{f:?}");
    }

    #[test]
    fn quadratic_with_cubic_term() {
        let s: Vec<f64> = (1..=40).map(|k| k as f64 * 0.01 * if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let h: Vec<f64> = s.iter().map(|x| 0.3 * x * x - 0.7 * x.abs().powi(3)).collect();
        let f = fit_quadratic(&s, &h).unwrap();
        assert!((f.values[0] - 0.3).abs() < 1e-10 && (f.values[1] + 0.7).abs() < 1e-9);
    }

    #[test]
    fn standard_error_tracks_noise() {
        let s = log_space(0.1, 1.0, 200);
        let v: Vec<f64> = s
            .iter()
            .enumerate()
            .map(|(i, x)| x.powf(1.5) * (1.0 + 1e-3 * if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        let f = fit_power_law(&s, &v).unwrap();
        assert!((f.value() - 1.5).abs() < 3.0 * f.error() + 1e-6);
        assert!(f.error() > 0.0 && f.error() < 1e-3);
    }
}
