//! Plain-text report of classified discriminant samples.
//!
//! One header line, then one row per sample:
//!
//! ```text
//! x,y,K1,class,roots,eps1,eps2
//! ```
//!
//! `roots` lists the admissible directions separated by `;`, each as
//! `slope` or `inf`, with `xN` appended for multiplicity `N > 1`. `eps1`,
//! `eps2` are empty at transverse points and written `re+imi` when complex.

use std::fmt::Write;

use super::PointClassification;

pub const REPORT_HEADER: &str = "x,y,K1,class,roots,eps1,eps2";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow<'a>(pub &'a PointClassification);

fn num(v: f64) -> String {
    format!("{:.12e}", v + 0.0)
}

fn complex(c: num_complex::Complex64) -> String {
    if c.im == 0.0 {
        num(c.re)
    } else {
        format!("{}{:+.12e}i", num(c.re), c.im)
    }
}

impl std::fmt::Display for ReportRow<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = self.0;
        let roots: Vec<String> = c
            .directions
            .iter()
            .map(|(d, k)| {
                let base = match d.slope() {
                    Some(p) => num(p),
                    None => "inf".to_string(),
                };
                if *k > 1 {
                    format!("{base}x{k}")
                } else {
                    base
                }
            })
            .collect();
        let (e1, e2) = match c.epsilon {
            Some(sp) => (complex(sp.eps1), complex(sp.eps2)),
            None => (String::new(), String::new()),
        };
        write!(
            f,
            "{},{},{},{},{},{},{}",
            num(c.point.x),
            num(c.point.y),
            num(c.k1),
            c.class,
            roots.join(";"),
            e1,
            e2
        )
    }
}

/// Renders the report, header included.
pub fn report_csv(rows: &[PointClassification]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(REPORT_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", ReportRow(r));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{Metric, Point};
    use crate::singular::classify;

    #[test]
    fn row_count_and_columns() {
        let m = Metric::parse("-y", "0", "1").unwrap();
        let rows: Vec<_> = (0..5)
            .map(|k| classify(&m, Point::new(k as f64 * 0.1, 0.0)).unwrap())
            .collect();
        let text = report_csv(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], REPORT_HEADER);
        let cols: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cols.len(), 7);
        assert_eq!(cols[3], "Z");
        assert!(cols[4].ends_with("inf"));
        assert!(cols[4].contains("x2"));
    }
}
