//! Integer relations among eigenvalues.

use std::fmt;

use num_complex::Complex64;

use super::SpectrumPair;

/// Right-hand side of a relation `s₁ε₁ + s₂ε₂ + s₃ = target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Eps1,
    Eps2,
    One,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Eps1 => "eps1",
            Target::Eps2 => "eps2",
            Target::One => "1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relation {
    pub s: [u32; 3],
    pub target: Target,
    pub residual: f64,
    /// Only the real parts of both sides agree.
    pub real_part: bool,
}

impl Relation {
    pub fn order(&self) -> u32 {
        self.s.iter().sum()
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.s;
        let lhs = format!("{a}*eps1 + {b}*eps2 + {c}");
        if self.real_part {
            write!(f, "Re({lhs}) = Re({})", self.target)
        } else {
            write!(f, "{lhs} = {}", self.target)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceReport {
    pub relations: Vec<Relation>,
    pub order_bound: u32,
    pub tol: f64,
}

impl ResonanceReport {
    pub fn has(&self, s: [u32; 3], target: Target) -> bool {
        self.relations
            .iter()
            .any(|r| r.s == s && r.target == target && !r.real_part)
    }

    pub fn has_real_part(&self, s: [u32; 3], target: Target) -> bool {
        self.relations
            .iter()
            .any(|r| r.s == s && r.target == target && r.real_part)
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

fn trivial(s: [u32; 3], t: Target) -> bool {
    matches!(
        (s, t),
        ([1, 0, 0], Target::Eps1) | ([0, 1, 0], Target::Eps2) | ([0, 0, 1], Target::One)
    )
}

/// Scans `s₁ε₁ + s₂ε₂ + s₃ = target` over nonnegative triples with
/// `1 ≤ |s| ≤ order_bound`. For a complex pair the relations that hold only
/// in real part are reported too, flagged `real_part`.
pub fn resonance_scan(sp: &SpectrumPair, order_bound: u32, tol: f64) -> ResonanceReport {
    let (e1, e2) = (sp.eps1, sp.eps2);
    let complex = sp.is_complex();
    let one = Complex64::new(1.0, 0.0);
    let mut relations = Vec::new();
    for n in 1..=order_bound {
        for s1 in 0..=n {
            for s2 in 0..=(n - s1) {
                let s3 = n - s1 - s2;
                let s = [s1, s2, s3];
                let lhs = e1 * s1 as f64 + e2 * s2 as f64 + s3 as f64;
                for (target, rhs) in [(Target::Eps1, e1), (Target::Eps2, e2), (Target::One, one)] {
                    if trivial(s, target) {
                        continue;
                    }
                    let d = lhs - rhs;
                    if d.norm() <= tol {
                        relations.push(Relation {
                            s,
                            target,
                            residual: d.norm(),
                            real_part: false,
                        });
                    }
                    if complex && d.re.abs() <= tol {
                        relations.push(Relation {
                            s,
                            target,
                            residual: d.re.abs(),
                            real_part: true,
                        });
                    }
                }
            }
        }
    }
    ResonanceReport {
        relations,
        order_bound,
        tol,
    }
}

/// A relation `s₁λ₁ + s₂λ₂ = 0` (`target = None`) or `= λ_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LambdaRelation {
    pub s: [u32; 2],
    pub target: Option<usize>,
}

/// Nontrivial relations between the two nonzero eigenvalues of a field
/// with a curve of singular points, up to `|s| ≤ order_bound`.
pub fn lambda_resonances(l1: f64, l2: f64, order_bound: u32, tol: f64) -> Vec<LambdaRelation> {
    let mut out = Vec::new();
    for n in 1..=order_bound {
        for s1 in 0..=n {
            let s2 = n - s1;
            let lhs = s1 as f64 * l1 + s2 as f64 * l2;
            if lhs.abs() <= tol {
                out.push(LambdaRelation {
                    s: [s1, s2],
                    target: None,
                });
            }
            for (j, lj) in [(1usize, l1), (2, l2)] {
                let trivial = (j == 1 && s1 == 1 && s2 == 0) || (j == 2 && s2 == 1 && s1 == 0);
                if !trivial && (lhs - lj).abs() <= tol {
                    out.push(LambdaRelation {
                        s: [s1, s2],
                        target: Some(j),
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(a: f64, b: f64) -> SpectrumPair {
        SpectrumPair::new(Complex64::new(a, 0.0), Complex64::new(b, 0.0))
    }

    #[test]
    fn saddle_has_sum_resonance() {
        let r = 17f64.sqrt() / 4.0;
        let sp = real(0.25 + r, 0.25 - r);
        let rep = resonance_scan(&sp, 6, 1e-8);
        assert!(rep.has([2, 2, 0], Target::One));
        for rel in &rep.relations {
            assert!(rel.residual <= 1e-8);
        }
    }

    #[test]
    fn planted_double() {
        let rep = resonance_scan(&real(0.4, 0.2), 4, 1e-12);
        assert!(rep.has([0, 2, 0], Target::Eps1));
        assert!(!rep.has([1, 0, 0], Target::Eps1));
    }

    #[test]
    fn focus_real_part_relations() {
        let b = 15f64.sqrt() / 4.0;
        let sp = SpectrumPair::new(Complex64::new(0.25, b), Complex64::new(0.25, -b));
        let rep = resonance_scan(&sp, 4, 1e-10);
        for s1 in 0..=4 {
            assert!(rep.has_real_part([s1, 4 - s1, 0], Target::One), "{s1}");
        }
        assert!(rep.has([2, 2, 0], Target::One));
        assert!(!rep.has([4, 0, 0], Target::One));
    }

    #[test]
    fn lambda_pairs() {
        let rel = lambda_resonances(2.0, -2.0, 3, 1e-12);
        assert!(rel.contains(&LambdaRelation { s: [1, 1], target: None }));
        let rel = lambda_resonances(3.0, 1.0, 3, 1e-12);
        assert!(rel.contains(&LambdaRelation { s: [0, 3], target: Some(1) }));
        assert!(!rel.iter().any(|r| r.target.is_none()));
        assert!(lambda_resonances(2.0, 0.7, 4, 1e-12).is_empty());
    }
}
