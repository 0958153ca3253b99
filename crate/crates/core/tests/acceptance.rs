//! One line per acceptance criterion. Criteria 1–10 run the verification
//! checks, whose bounds are pinned here; criterion 11 runs the figure
//! scenarios twice and inspects the SVGs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sigflow::flow::MemberKind;
use sigflow::scenario::{self, Scenario, TaskKind};
use sigflow::verify::{self, Check};
use sigflow::{classify, families::launch_family, CausalType};

const SEED: u64 = 20;

/// Bound each named check must carry, so a loosened check fails here.
fn pinned() -> BTreeMap<(u8, &'static str), f64> {
    BTreeMap::from([
        ((1, "factorization residual, 50 metrics"), 1e-9),
        ((2, "|K1(0) - c(a_x c_x + a_y^2)/4|, 20 metrics"), 1e-9),
        ((3, "|K1 - 1/4|"), 1e-9),
        ((3, "max |y - sin^2(x/2)|, |y - sinh^2(x/2)| on |x| <= 1"), 1e-6),
        ((3, "quartic coefficient error"), 1e-3),
        ((3, "Q drift per unit parameter"), 1e-6),
        ((4, "epsilon spectrum error"), 1e-5),
        ((4, "misclassified points"), 0.0),
        ((5, "generic members vs eps1/2 (relative)"), 0.02),
        ((5, "separatrix vs eps2/2 (relative)"), 0.02),
        ((6, "node members vs eps1/2 (relative)"), 0.02),
        ((6, "exceptional member vs eps2/2 (relative)"), 0.02),
        ((6, "focus winding |turns| before radius 0.1"), 2.0),
        ((7, "max Delta beyond 2 delta"), 1e-6),
        ((7, "members escaping into Delta > 0"), 0.0),
        ((8, "admissible directions vs {-1, 0, 1}"), 1e-9),
        ((8, "two-sided admissible geodesics through q"), 2.0),
        ((8, "|exponent - 3/2| of the isotropic family"), 0.05),
        ((9, "|exponent - 1/3| of x(t)"), 1e-3),
        ((9, "forced |xdot| on y = 0"), 1e-12),
        ((10, "invariant-surface defect, 10 real + 5 complex"), 1e-10),
        ((10, "planted resonances missed of 20"), 0.0),
        ((10, "focus spectra without the |s| = 4 real-part relation"), 0.0),
    ])
}

fn criterion_line(n: u8, checks: &[Check]) -> (bool, String) {
    let pins = pinned();
    let mut ok = !checks.is_empty();
    let mut notes = Vec::new();
    for (key, bound) in pins.iter().filter(|((c, _), _)| *c == n) {
        match checks.iter().find(|c| c.name == key.1) {
            Some(c) if c.bound == *bound => {}
            Some(c) => {
                ok = false;
                notes.push(format!("`{}` bound {} differs from {}", c.name, c.bound, bound));
            }
            None => {
                ok = false;
                notes.push(format!("missing check `{}`", key.1));
            }
        }
    }
    for c in checks.iter().filter(|c| !c.pass()) {
        ok = false;
        notes.push(c.to_string());
    }
    let summary: Vec<String> = checks.iter().map(|c| format!("{}={:.3e}", c.name, c.measured)).collect();
    let line = format!(
        "criterion {n:>2}: {} | {}{}",
        if ok { "PASS" } else { "FAIL" },
        summary.join("; "),
        if notes.is_empty() { String::new() } else { format!(" | {}", notes.join("; ")) }
    );
    (ok, line)
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

/// Figure scenarios and the style their portraits must use.
const FIGURES: &[(&str, bool)] = &[
    ("z-family.toml", true),
    ("saddle-family.toml", true),
    ("normal-form-saddle.toml", false),
    ("normal-form-node.toml", false),
    ("normal-form-focus.toml", false),
];

fn attr<'a>(tag: &'a str, name: &str) -> Option<&'a str> {
    let key = format!(" {name}=\"");
    let start = tag.find(&key)? + key.len();
    tag[start..].split('"').next()
}

/// Checks one portrait against the family it draws.
fn inspect_svg(svg: &str, causal: bool, expected: &[(MemberKind, Option<CausalType>)]) -> Result<(), String> {
    let groups: Vec<&str> = svg.split("<g class=\"member\"").skip(1).collect();
    if groups.len() != expected.len() {
        return Err(format!("{} member groups, family has {}", groups.len(), expected.len()));
    }
    for (g, (kind, label)) in groups.iter().zip(expected) {
        let body = &g[..g.find("</g>").ok_or("unclosed group")?];
        let lines: Vec<&str> = body.split("<polyline").skip(1).collect();
        if lines.is_empty() {
            return Err("member without polyline".into());
        }
        for l in &lines {
            let class = attr(l, "class").ok_or("polyline without class")?;
            let dash = attr(l, "stroke-dasharray");
            let width: f64 = attr(l, "stroke-width").and_then(|w| w.parse().ok()).ok_or("no width")?;
            let styled = match class {
                "timelike" | "geodesic" => dash.is_none() && width == 1.0,
                "spacelike" => dash.is_some() && width == 1.0,
                "isotropic" | "isotropic double" => dash.is_none() && width > 2.0,
                "isotropic double-inner" => attr(l, "stroke") == Some("white"),
                other => return Err(format!("unexpected class {other}")),
            };
            if !styled || causal == (class == "geodesic") {
                return Err(format!("polyline of class {class} is mis-styled"));
            }
        }
        if causal {
            let want = match label {
                Some(CausalType::Timelike) => "timelike",
                Some(CausalType::Spacelike) => "spacelike",
                Some(CausalType::Isotropic) if *kind == MemberKind::Exceptional => "isotropic double",
                Some(CausalType::Isotropic) => "isotropic",
                None => return Err("member without label".into()),
            };
            let majority = lines
                .iter()
                .filter_map(|l| attr(l, "class"))
                .filter(|c| *c == want)
                .count();
            if majority == 0 {
                return Err(format!("no {want} polyline in a {want} member"));
            }
        }
    }
    let disc = svg.split("<g class=\"discriminant-curve\">").nth(1).ok_or("no discriminant")?;
    let disc = &disc[..disc.find("</g>").ok_or("unclosed discriminant")?];
    if attr(disc, "class") != Some("discriminant") || attr(disc, "stroke-dasharray") != Some("1 3") {
        return Err("discriminant is not dotted".into());
    }
    Ok(())
}

fn figure_regression() -> (bool, String) {
    let mut notes = Vec::new();
    let mut members = 0;
    for (file, causal) in FIGURES {
        let path = scenario_dir().join(file);
        let s = match Scenario::load(&path) {
            Ok(s) => s,
            Err(e) => {
                notes.push(format!("{file}: {e}"));
                continue;
            }
        };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (ra, rb) = (scenario::run(&s, a.path(), None), scenario::run(&s, b.path(), None));
        if ra.failed() || rb.failed() {
            notes.push(format!("{file}: {:?}", ra.tasks.iter().filter_map(|t| t.error.clone()).collect::<Vec<_>>()));
            continue;
        }
        for t in &s.tasks {
            let (x, y) = (fs::read(a.path().join(&t.file)).unwrap(), fs::read(b.path().join(&t.file)).unwrap());
            if x != y {
                notes.push(format!("{file}: {} differs between runs", t.file.display()));
            }
            let TaskKind::Portrait { family: Some(spec), .. } = &t.kind else {
                continue;
            };
            let pc = classify(&s.metric, spec.at).unwrap();
            let fam = launch_family(&s.metric, &pc, &spec.params).unwrap();
            let expected: Vec<_> = fam.iter().map(|g| (g.kind, g.majority_label(0.0))).collect();
            members += expected.len();
            if let Err(e) = inspect_svg(&String::from_utf8(x).unwrap(), *causal, &expected) {
                notes.push(format!("{file}: {e}"));
            }
        }
    }
    let ok = notes.is_empty();
    let line = format!(
        "criterion 11: {} | {} scenarios, {members} members drawn, byte-identical reruns{}",
        if ok { "PASS" } else { "FAIL" },
        FIGURES.len(),
        if ok { String::new() } else { format!(" | {}", notes.join("; ")) }
    );
    (ok, line)
}

#[test]
fn acceptance() {
    let mut all = true;
    for n in 1..=10u8 {
        let (ok, line) = match verify::criterion(n, SEED) {
            Ok(checks) => criterion_line(n, &checks),
            Err(e) => (false, format!("criterion {n:>2}: FAIL | {e}")),
        };
        println!("{line}");
        all &= ok;
    }
    let (ok, line) = figure_regression();
    println!("{line}");
    assert!(all && ok, "acceptance criteria failed");
}
