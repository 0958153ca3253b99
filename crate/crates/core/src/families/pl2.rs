//! Invariant surfaces of the linear model fields
//! `ξ̇ = (λ₁ξ₁, λ₂ξ₂, ξ₃)` and `ξ̇ = (aξ₁ + bξ₂, aξ₂ − bξ₁, ξ₃)`.

use rand::Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pl2Case {
    /// Surface `c₁|ξ₁|^{1/λ₁} + c₂|ξ₂|^{1/λ₂} + c₃ξ₃ = 0`.
    Real { lambda: [f64; 2], c: [f64; 3] },
    /// Surface `c₁(ξ₁² + ξ₂²)^{1/2a} + c₃ξ₃ = 0` of the rotating field with
    /// real part `a` and rotation `b`.
    Complex { a: f64, b: f64, c: [f64; 2] },
}

impl Pl2Case {
    pub fn field(&self, s: &[f64; 3]) -> [f64; 3] {
        match *self {
            Pl2Case::Real { lambda, .. } => [lambda[0] * s[0], lambda[1] * s[1], s[2]],
            Pl2Case::Complex { a, b, .. } => [a * s[0] + b * s[1], a * s[1] - b * s[0], s[2]],
        }
    }

    pub fn g(&self, s: &[f64; 3]) -> f64 {
        match *self {
            Pl2Case::Real { lambda, c } => {
                c[0] * s[0].abs().powf(1.0 / lambda[0]) + c[1] * s[1].abs().powf(1.0 / lambda[1]) + c[2] * s[2]
            }
            Pl2Case::Complex { a, c, .. } => c[0] * (s[0] * s[0] + s[1] * s[1]).powf(0.5 / a) + c[1] * s[2],
        }
    }

    pub fn grad(&self, s: &[f64; 3]) -> [f64; 3] {
        let dpow = |v: f64, e: f64| if v == 0.0 { 0.0 } else { e * v.abs().powf(e - 1.0) * v.signum() };
        match *self {
            Pl2Case::Real { lambda, c } => [
                c[0] * dpow(s[0], 1.0 / lambda[0]),
                c[1] * dpow(s[1], 1.0 / lambda[1]),
                c[2],
            ],
            Pl2Case::Complex { a, c, .. } => {
                let r2 = s[0] * s[0] + s[1] * s[1];
                let k = if r2 == 0.0 { 0.0 } else { c[0] * (0.5 / a) * r2.powf(0.5 / a - 1.0) * 2.0 };
                [k * s[0], k * s[1], c[1]]
            }
        }
    }

    /// Random points of the surface with `|ξ₁|, |ξ₂|` in `[0.05, 1]`.
    pub fn sample_surface(&self, n: usize, rng: &mut impl Rng) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let mut s = [
                rng.gen_range(0.05..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
                rng.gen_range(0.05..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
                0.0,
            ];
            let c3 = match *self {
                Pl2Case::Real { c, .. } => c[2],
                Pl2Case::Complex { c, .. } => c[1],
            };
            if c3 != 0.0 {
                s[2] = -(self.g(&s)) / c3;
            } else {
                match *self {
                    // c₁|ξ₁|^{1/λ₁} = −c₂|ξ₂|^{1/λ₂}
                    Pl2Case::Real { lambda, c } if c[0] != 0.0 => {
                        let t = -c[1] * s[1].abs().powf(1.0 / lambda[1]) / c[0];
                        if t < 0.0 {
                            continue;
                        }
                        s[0] = s[0].signum() * t.powf(lambda[0]);
                    }
                    Pl2Case::Real { c, .. } if c[1] != 0.0 => s[1] = 0.0,
                    _ => {}
                }
                s[2] = rng.gen_range(-1.0..1.0);
            }
            out.push(s);
        }
        out
    }
}

/// Largest `|∇G·V| / (‖∇G‖‖V‖)` over `samples`, which must lie on `G = 0`
/// to `1e-9` relative to `‖∇G‖`.
pub fn lemma_pl2_check(case: &Pl2Case, samples: &[[f64; 3]]) -> Result<f64> {
    let norm = |v: &[f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let mut worst: f64 = 0.0;
    for (i, s) in samples.iter().enumerate() {
        let g = case.grad(s);
        let v = case.field(s);
        let (ng, nv) = (norm(&g), norm(&v));
        let off = case.g(s).abs();
        if off > 1e-9 * ng.max(1.0) {
            return Err(Error::OffSurface { index: i, defect: off });
        }
        if ng == 0.0 || nv == 0.0 {
            continue;
        }
        let d = (g[0] * v[0] + g[1] * v[1] + g[2] * v[2]).abs() / (ng * nv);
        worst = worst.max(d);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn square_root_surface() {
        let case = Pl2Case::Real {
            lambda: [1.0, 2.0],
            c: [1.0, -1.0, 0.0],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = case.sample_surface(100, &mut rng);
        assert!(lemma_pl2_check(&case, &s).unwrap() <= 1e-10);
    }

    #[test]
    fn invariant_plane() {
        let case = Pl2Case::Real {
            lambda: [0.7, -1.3],
            c: [0.0, 0.0, 1.0],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = case.sample_surface(50, &mut rng);
        assert_eq!(lemma_pl2_check(&case, &s).unwrap(), 0.0);
    }

    #[test]
    fn focus_surface() {
        let case = Pl2Case::Complex {
            a: 0.25,
            b: 1.0,
            c: [1.0, -1.0],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = case.sample_surface(100, &mut rng);
        for p in &s {
            assert!(((p[0] * p[0] + p[1] * p[1]).powi(2) - p[2]).abs() < 1e-12);
        }
        assert!(lemma_pl2_check(&case, &s).unwrap() <= 1e-10);
    }

    #[test]
    fn wrong_field_is_detected() {
        // the same surface under λ₃ ≠ 1 is not invariant
        let case = Pl2Case::Real {
            lambda: [1.0, 2.0],
            c: [1.0, 1.0, -1.0],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = case.sample_surface(20, &mut rng);
        let d = s
            .iter()
            .map(|p| {
                let g = case.grad(p);
                let v = [p[0], 2.0 * p[1], 2.0 * p[2]];
                (g[0] * v[0] + g[1] * v[1] + g[2] * v[2]).abs()
            })
            .fold(0.0, f64::max);
        assert!(d > 1e-3);
    }

    #[test]
    fn off_surface_is_rejected() {
        let case = Pl2Case::Real {
            lambda: [1.0, 2.0],
            c: [1.0, -1.0, 1.0],
        };
        assert!(matches!(
            lemma_pl2_check(&case, &[[0.5, 0.5, 0.5]]),
            Err(Error::OffSurface { index: 0, .. })
        ));
    }
}
