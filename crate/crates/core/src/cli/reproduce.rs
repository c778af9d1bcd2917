//! Reference data set: curve atlas, crossing curves, truncated figure fields and their zeros.

use std::path::Path;

use serde::Serialize;
use serde_json::json;

use super::commands::{curve_kind, field_report, truncated_field};
use super::output::{sha256_hex, to_json, Envelope, Table, SCHEMA, TOOLKIT, VERSION};
use super::{CliError, CliResult, RunConfig, EXIT_MISMATCH, EXIT_OK};
use crate::atlas::{classify_midrange, counts, crossing_bracket, curve_list, last_curve, Frac};
use crate::hessian::find_crossing;
use crate::parallel::par_map;
use crate::primary::solve_primary;
use crate::radial::RadialDiscretization;
use crate::vortex::{locate_field_zeros, polygon_orbit, synthesize_field, GridSpec, VortexConfiguration, ZeroSearch};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    bytes: usize,
    sha256: String,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<FileEntry>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, body: &str) -> CliResult<()> {
        let p = self.dir.join(name);
        std::fs::write(&p, body).map_err(|e| CliError::io(&p, e))?;
        self.files.push(FileEntry { name: name.into(), bytes: body.len(), sha256: sha256_hex(body.as_bytes()) });
        Ok(())
    }
}

fn envelope<R: Serialize>(cfg: &RunConfig, hash: &str, result: &R) -> String {
    to_json(&Envelope {
        schema: SCHEMA,
        toolkit: TOOLKIT,
        version: VERSION,
        command: "reproduce",
        config: cfg,
        config_hash: hash,
        result,
    })
}

fn check(name: impl Into<String>, expected: impl Into<String>, observed: impl Into<String>) -> Check {
    let (expected, observed) = (expected.into(), observed.into());
    Check { name: name.into(), pass: expected == observed, expected, observed }
}

fn curve_set(m0: u32) -> String {
    let mut v: Vec<String> = curve_list(m0).iter().map(|c| format!("{}/{}:{}", c.m, c.n, c.omega0)).collect();
    v.sort();
    v.join(" ")
}

fn list_checks() -> CliResult<(serde_json::Value, Vec<Check>)> {
    let mut checks = Vec::new();
    let mut atlas = Vec::new();
    for m0 in 1..=8u32 {
        let c = counts(m0)?;
        let mid = classify_midrange(m0)?;
        let curves: Vec<_> = curve_list(m0).iter().map(|c| json!({ "m": c.m, "n": c.n, "omega0": c.omega0 })).collect();
        let lc = last_curve(m0);
        atlas.push(json!({
            "m0": m0,
            "counts": c,
            "curves": curves,
            "last_curve": { "m": lc.m, "n": lc.n, "omega0": lc.omega0 },
            "r": mid.r,
            "r_modes": mid.r_modes,
        }));
    }
    for (m0, nzb) in [(1, (1, 1, 0)), (2, (3, 2, 1)), (3, (6, 3, 3)), (4, (10, 4, 6))] {
        let c = counts(m0)?;
        checks.push(check(format!("counts m0={m0}"), format!("{nzb:?}"), format!("{:?}", (c.n, c.z, c.b))));
    }
    let lists: [(u32, &[CurveKey]); 4] = [
        (1, &[]),
        (2, &[(5, 0, Frac::new(2, 3))]),
        (3, &[(7, 0, Frac::new(1, 1)), (8, 0, Frac::new(2, 5)), (6, 1, Frac::new(2, 3))]),
        (
            4,
            &[
                (9, 0, Frac::new(6, 5)),
                (10, 0, Frac::new(2, 3)),
                (11, 0, Frac::new(2, 7)),
                (7, 1, Frac::new(2, 3)),
                (8, 1, Frac::new(1, 1)),
                (9, 1, Frac::new(2, 5)),
            ],
        ),
    ];
    for (m0, list) in lists {
        let mut v: Vec<String> = list.iter().map(|(m, n, f)| format!("{m}/{n}:{f}")).collect();
        v.sort();
        checks.push(check(format!("curves m0={m0}"), v.join(" "), curve_set(m0)));
    }
    let r_table: [(u32, &[i32]); 5] = [(4, &[8]), (5, &[10]), (6, &[11, 12]), (7, &[12, 13, 14]), (8, &[14, 15, 16])];
    for (m0, modes) in r_table {
        let mid = classify_midrange(m0)?;
        checks.push(check(format!("R m0={m0}"), format!("{} {modes:?}", modes.len()), format!("{} {:?}", mid.r, mid.r_modes)));
    }
    Ok((json!({ "atlas": atlas }), checks))
}

/// (m, n, Ω0)
type CurveKey = (i32, u32, Frac);
/// (m0, m, n, a, Ω0, Ω*, last curve)
type CurveRow = (u32, i32, u32, f64, Frac, f64, bool);

const CURVE_AMPLITUDES: [f64; 5] = [0.02, 0.04, 0.06, 0.08, 0.1];

/// Detected crossing curves Ω*(a) in the (Ω, a) plane.
fn crossing_curves(cfg: &RunConfig) -> CliResult<(Table, Vec<Check>)> {
    let jobs: Vec<(u32, f64)> = [1u32, 2, 3].iter().flat_map(|&m0| CURVE_AMPLITUDES.map(|a| (m0, a))).collect();
    let rows = par_map(&jobs, |&(m0, a)| -> crate::Result<Vec<CurveRow>> {
        let disc = RadialDiscretization::new(cfg.n_r, 3 * m0)?;
        let branch = solve_primary(m0, a, &disc)?;
        let mut curves: Vec<(i32, u32, Frac, bool)> = curve_list(m0).iter().map(|c| (c.m, c.n, c.omega0, false)).collect();
        let lc = last_curve(m0);
        curves.push((lc.m, lc.n, lc.omega0, true));
        curves
            .into_iter()
            .map(|(m, n, om0, last)| {
                let c = find_crossing(m, n, &branch, crossing_bracket(m0, m, n, a), &disc)?;
                Ok((m0, m, n, a, om0, c.omega, last))
            })
            .collect()
    })
    .into_iter()
    .collect::<crate::Result<Vec<_>>>()?;
    let mut t = Table::new(&["m0", "m", "n", "a", "omega0_num", "omega0_den", "omega_star", "last"]);
    let mut checks = Vec::new();
    for &(m0, m, n, a, om0, om, last) in rows.iter().flatten() {
        t.push(vec![m0.into(), m.into(), n.into(), a.into(), om0.num.into(), om0.den.into(), om.into(), (last as i32).into()]);
        if a == CURVE_AMPLITUDES[0] {
            let ok = (om - om0.to_f64()).abs() < 0.02;
            checks.push(Check {
                name: format!("crossing m0={m0} ({m},{n}) a={a}"),
                expected: format!("within 0.02 of {om0}"),
                observed: format!("{om:.10}"),
                pass: ok,
            });
        }
    }
    Ok((t, checks))
}

struct FigureSpec {
    file: &'static str,
    m0: u32,
    m: i32,
    n: u32,
    a: f64,
    b: f64,
}

const FIGURES: [FigureSpec; 6] = [
    FigureSpec { file: "figure3_top", m0: 2, m: 5, n: 0, a: 0.1, b: 0.01 },
    FigureSpec { file: "figure3_middle", m0: 3, m: 7, n: 0, a: 0.1, b: 0.01 },
    FigureSpec { file: "figure3_bottom", m0: 3, m: 8, n: 0, a: 0.1, b: 0.01 },
    FigureSpec { file: "figure4_top", m0: 6, m: 12, n: 1, a: 0.1, b: 0.01 },
    FigureSpec { file: "figure4_center", m0: 1, m: 2, n: 0, a: 0.1, b: 0.1 },
    FigureSpec { file: "figure4_bottom", m0: 2, m: 3, n: 0, a: 0.1, b: 0.1 },
];

fn describe(c: &VortexConfiguration) -> String {
    let zs: Vec<String> = c.zeros.iter().map(|z| format!("{:+}@{:.4}", z.charge, z.radius)).collect();
    format!("total {} zeros [{}]", c.total_winding, zs.join(" "))
}

const CENTER_TOL: f64 = 1e-3;

fn figure_check(spec: &FigureSpec, last: bool, c: &VortexConfiguration) -> Check {
    let name = format!("{} zeros m0={} ({},{})", spec.file, spec.m0, spec.m, spec.n);
    let observed = describe(c);
    let total_ok = c.total_winding == spec.m0 as i32;
    let (expected, pass) = if last {
        let k = spec.m0 as usize;
        let ones = c.zeros.iter().all(|z| z.charge == 1) && c.zeros.len() == k;
        let distinct = c.zeros.windows(2).all(|w| (w[0].radius - w[1].radius).abs() > CENTER_TOL);
        let displaced = c.zeros.iter().any(|z| z.radius > CENTER_TOL);
        (format!("{k} charge-one zero(s) at distinct radii, one displaced, total {}", spec.m0), total_ok && ones && distinct && displaced)
    } else {
        let q = (spec.m - spec.m0 as i32) as u32;
        let d = 2 * spec.m0 as i32 - spec.m;
        let orbit = polygon_orbit(c, q, CENTER_TOL);
        let orbit_ok = orbit.as_ref().is_some_and(|o| o.charge == 1 && o.angle_error < 1e-6);
        let (center_ok, count) = if spec.n == 0 {
            (c.central(CENTER_TOL).is_some_and(|z| z.charge == d), q as usize + 1)
        } else {
            (c.central(CENTER_TOL).is_none(), q as usize)
        };
        let centre = if spec.n == 0 { format!("center {d:+}") } else { "no center".into() };
        (format!("{q}-gon of +1, {centre}, total {}", spec.m0), total_ok && orbit_ok && center_ok && c.zeros.len() == count)
    };
    Check { name, expected, observed, pass }
}

struct FigureOut {
    field_csv: String,
    zeros_json: String,
    check: Check,
}

fn figure(cfg: &RunConfig, hash: &str, spec: &FigureSpec) -> CliResult<FigureOut> {
    let last = curve_kind(spec.m0, spec.m, spec.n)?;
    let f = truncated_field(spec.m0, spec.m, spec.n, spec.a, spec.b)?;
    let grid = GridSpec::Cartesian { half_width: 3.0, points: 121 };
    let samples = synthesize_field(&f, &grid)?;
    let head = json!({ "m0": spec.m0, "m": spec.m, "n": spec.n, "a": spec.a, "b": spec.b });
    let field_csv = field_report(&samples, head.clone()).csv.expect("field table").render("reproduce", hash);
    let config = locate_field_zeros(&f, &ZeroSearch::default())?;
    let check = figure_check(spec, last, &config);
    let zeros_json = envelope(cfg, hash, &json!({ "figure": spec.file, "params": head, "configuration": config }));
    Ok(FigureOut { field_csv, zeros_json, check })
}

pub fn run(cfg: &RunConfig, hash: &str) -> CliResult<i32> {
    let dir = cfg.out.as_deref().ok_or_else(|| CliError::config("reproduce needs --out <directory>"))?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut w = Writer { dir, files: Vec::new() };
    let mut checks = Vec::new();

    let (lists, c) = list_checks()?;
    checks.extend(c);
    w.put("lists.json", &envelope(cfg, hash, &lists))?;

    let (curves, c) = crossing_curves(cfg)?;
    checks.extend(c);
    w.put("figure1_curves.csv", &curves.render("reproduce", hash))?;

    let figs = par_map(&FIGURES, |s| figure(cfg, hash, s));
    for (spec, out) in FIGURES.iter().zip(figs) {
        let out = out?;
        w.put(&format!("{}_field.csv", spec.file), &out.field_csv)?;
        w.put(&format!("{}_zeros.json", spec.file), &out.zeros_json)?;
        checks.push(out.check);
    }

    for entry in &w.files {
        let p = dir.join(&entry.name);
        let bytes = std::fs::read(&p).map_err(|e| CliError::io(&p, e))?;
        checks.push(Check {
            name: format!("manifest {}", entry.name),
            expected: entry.sha256.clone(),
            observed: sha256_hex(&bytes),
            pass: sha256_hex(&bytes) == entry.sha256,
        });
    }
    let all_passed = checks.iter().all(|c| c.pass);
    let manifest = json!({ "files": w.files, "checks": checks, "all_passed": all_passed });
    let p = dir.join("manifest.json");
    std::fs::write(&p, envelope(cfg, hash, &manifest)).map_err(|e| CliError::io(&p, e))?;

    for c in &checks {
        eprintln!("{} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.observed);
    }
    Ok(if all_passed { EXIT_OK } else { EXIT_MISMATCH })
}
