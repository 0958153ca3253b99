//! Small dense helpers shared by the spectrum and fitting code.

use num_complex::Complex64;

pub(crate) fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Eigenvalues of a real 2×2 matrix, larger real part (or positive imaginary
/// part) first.
pub(crate) fn eig2(j: &[[f64; 2]; 2]) -> (Complex64, Complex64) {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let half = 0.5 * tr;
    let disc = half * half - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // stable pair: the larger-magnitude root first, the other from det
        let big = if half >= 0.0 { half + s } else { half - s };
        let small = if big != 0.0 { det / big } else { 0.0 };
        let (hi, lo) = if big >= small { (big, small) } else { (small, big) };
        (Complex64::new(hi, 0.0), Complex64::new(lo, 0.0))
    } else {
        let s = (-disc).sqrt();
        (Complex64::new(half, s), Complex64::new(half, -s))
    }
}

/// A (non-normalised) eigenvector of a real 2×2 matrix for a real eigenvalue.
pub(crate) fn eigvec2(j: &[[f64; 2]; 2], lambda: f64) -> [f64; 2] {
    let a = [j[0][0] - lambda, j[0][1]];
    let b = [j[1][0], j[1][1] - lambda];
    // null vector of the row with the larger norm
    let row = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
    if row[0] == 0.0 && row[1] == 0.0 {
        return [1.0, 0.0];
    }
    [-row[1], row[0]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig2_real_and_complex() {
        let (a, b) = eig2(&[[0.0, 1.0], [1.0, 0.5]]);
        assert!((a.re + b.re - 0.5).abs() < 1e-15);
        assert!((a.re * b.re + 1.0).abs() < 1e-14);
        let (c, d) = eig2(&[[0.0, 1.0], [-1.0, 0.5]]);
        assert!(c.im > 0.0 && (c.im + d.im).abs() < 1e-15);
        assert!((c.re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn eigvec2_is_null_vector() {
        let j = [[0.0, 1.0], [1.0, 0.5]];
        let (l, _) = eig2(&j);
        let v = eigvec2(&j, l.re);
        let r0 = j[0][0] * v[0] + j[0][1] * v[1] - l.re * v[0];
        let r1 = j[1][0] * v[0] + j[1][1] * v[1] - l.re * v[1];
        assert!(r0.abs() < 1e-14 && r1.abs() < 1e-14);
    }

    #[test]
    fn det3_identity() {
        let m = [[2.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 4.0]];
        assert_eq!(det3(&m), 24.0);
    }
}
