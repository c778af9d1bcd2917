use serde::Serialize;
use serde_json::json;

use super::output::Table;
use super::{CliError, CliResult, Command, GridKind, Report, RunConfig, Source, EXIT_NUMERICAL};
use crate::atlas::{build_atlas, crossing_bracket, curve_list, last_bifurcation, last_curve, leading_omega, Frac};
use crate::field::ModalField;
use crate::hessian::{assemble_h, find_crossing, track_eigenvalues, Crossing, HessianFamily, KreinData};
use crate::parallel::par_map;
use crate::primary::{continue_branch, omega_slope, solve_primary};
use crate::radial::RadialDiscretization;
use crate::secondary::{
    continue_secondary, continue_secondary_fast, last_curve_continue, pitchfork_fit, DihedralSector,
    SecondaryBranchPoint,
};
use crate::vortex::{
    asymmetric_pair, asymmetric_vortex, configuration, last_curve_truncation, locate_field_zeros, polygon_orbit,
    polygon_radius, synthesize_field, two_mode_field, GridSpec, ZeroSearch,
};

pub fn execute(cfg: &RunConfig) -> CliResult<Report> {
    match cfg.command.clone() {
        Command::Atlas { m0 } => atlas(m0),
        Command::Branch { m0, a } => branch(cfg, m0, &a),
        Command::Spectrum { m0, a, m, omega, count } => spectrum(cfg, m0, a, m, omega, count),
        Command::Crossings { m0, a, tracks, .. } => crossings(cfg, m0, a, tracks),
        Command::Secondary { m0, m, n, a, b, no_morse } => secondary(cfg, m0, m, n, a, &b, !no_morse),
        Command::Field { m0, m, n, a, b, source, grid, extent, points } => {
            let grid = match grid {
                GridKind::Cartesian => GridSpec::Cartesian { half_width: extent, points },
                GridKind::Polar => GridSpec::Polar { r_max: extent, radii: points, angles: points },
            };
            field(cfg, m0, m, n, a, b, source, grid)
        }
        Command::Zeros { m0, m, n, a, b, source, r_ref } => {
            zeros(cfg, m0, m, n, a, b, source, ZeroSearch { r_ref, ..ZeroSearch::default() })
        }
        Command::Reproduce => unreachable!("reproduce writes its own files"),
    }
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report serializes")
}

fn sign_of(x: f64) -> i32 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// True for the last curve (m0+1, 0); config error unless (m, n) is a bifurcation curve of m0.
pub(crate) fn curve_kind(m0: u32, m: i32, n: u32) -> CliResult<bool> {
    if m0 == 0 {
        return Err(CliError::config("m0 must be positive"));
    }
    if m == m0 as i32 + 1 && n == 0 {
        return Ok(true);
    }
    if curve_list(m0).iter().any(|c| c.m == m && c.n == n) {
        return Ok(false);
    }
    Err(CliError::config(format!("({m}, {n}) is not a bifurcation curve of m0 = {m0}")))
}

pub(crate) struct Converged {
    pub points: Vec<SecondaryBranchPoint>,
    pub crossing: Crossing,
}

/// Continuation from the crossing of curve (m, n) at amplitude a through b_grid.
pub(crate) fn converge(
    cfg: &RunConfig,
    m0: u32,
    m: i32,
    n: u32,
    a: f64,
    b_grid: &[f64],
    with_morse: bool,
) -> CliResult<Converged> {
    let last = curve_kind(m0, m, n)?;
    if !(a > 0.0) {
        return Err(CliError::config("secondary branches need a > 0"));
    }
    let sector = DihedralSector::new(m0, m, cfg.k_max, cfg.n_r)?;
    let disc = RadialDiscretization::new(cfg.n_r, sector.required_max_m())?;
    let branch = solve_primary(m0, a, &disc)?;
    let crossing = find_crossing(m, n, &branch, crossing_bracket(m0, m, n, a), &disc)?;
    let points = if last {
        last_curve_continue(&branch, &crossing, b_grid, cfg.k_max, &disc, with_morse)?
    } else if with_morse {
        continue_secondary(&sector, &branch, &crossing, b_grid, &disc)?
    } else {
        continue_secondary_fast(&sector, &branch, &crossing, b_grid, &disc)?
    };
    if let Some(p) = points.iter().find(|p| !(p.residual <= cfg.tol)) {
        return Err(CliError {
            code: EXIT_NUMERICAL,
            kind: "Tolerance".into(),
            message: format!("residual {:e} at b = {} exceeds tolerance {:e}", p.residual, p.b, cfg.tol),
        });
    }
    Ok(Converged { points, crossing })
}

/// Converged point at b, reached in four equal steps.
pub(crate) fn converged_point(cfg: &RunConfig, m0: u32, m: i32, n: u32, a: f64, b: f64) -> CliResult<SecondaryBranchPoint> {
    let grid: Vec<f64> = (1..=4).map(|i| b * i as f64 / 4.0).collect();
    let mut c = converge(cfg, m0, m, n, a, &grid, false)?;
    Ok(c.points.pop().expect("nonempty grid"))
}

pub(crate) fn truncated_field(m0: u32, m: i32, n: u32, a: f64, b: f64) -> CliResult<ModalField> {
    if curve_kind(m0, m, n)? {
        let [c_plus, c_minus] = last_bifurcation(m0)?.crossing_vector;
        Ok(last_curve_truncation(m0, a, b, c_plus, c_minus))
    } else {
        Ok(two_mode_field(m0, m, n, a, b)?)
    }
}

fn atlas(m0: u32) -> CliResult<Report> {
    let rep = build_atlas(m0)?;
    let mut t =
        Table::new(&["kind", "m", "n", "omega0_num", "omega0_den", "multiplicity", "cluster", "resonant", "dihedral_order"]);
    let rows = rep.curves.iter().map(|c| ("curve", c)).chain(std::iter::once(("last", &rep.last_curve)));
    for (kind, c) in rows {
        t.push(vec![
            kind.into(),
            c.m.into(),
            c.n.into(),
            c.omega0.num.into(),
            c.omega0.den.into(),
            c.multiplicity.into(),
            c.cluster.into(),
            (c.resonant as i32).into(),
            c.dihedral_order.into(),
        ]);
    }
    Ok(Report { json: to_value(&rep), csv: Some(t), text: None })
}

fn branch(cfg: &RunConfig, m0: u32, a: &[f64]) -> CliResult<Report> {
    let disc = RadialDiscretization::new(cfg.n_r, m0)?;
    let pts = continue_branch(m0, a, &disc)?;
    let lambda0 = 2.0 * (m0 + 1) as f64;
    let mut t = Table::new(&["a", "omega", "slope", "slope_leading", "residual", "positive"]);
    for p in &pts {
        let slope = if p.a > 0.0 { Some((p.omega - lambda0) / (p.a * p.a)) } else { None };
        t.push(vec![p.a.into(), p.omega.into(), slope.into(), omega_slope(m0).into(), p.residual.into(), (p.positive as i32).into()]);
    }
    Ok(Report { json: json!({ "m0": m0, "slope_leading": omega_slope(m0), "points": pts }), csv: Some(t), text: None })
}

/// Rounds away quadrature noise for the plain-text listing.
fn tidy(x: f64) -> String {
    let r = (x * 1e10).round() / 1e10;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn spectrum(cfg: &RunConfig, m0: u32, a: f64, m: i32, omega: f64, count: usize) -> CliResult<Report> {
    let need = (m.unsigned_abs()).max((m - 2 * m0 as i32).unsigned_abs()).max(m0);
    let disc = RadialDiscretization::new(cfg.n_r, need)?;
    let branch = solve_primary(m0, a, &disc)?;
    let block = assemble_h(m, &branch, omega, &disc)?;
    let mut vals = block.eigen.values.clone();
    vals.sort_by(f64::total_cmp);
    vals.truncate(count);
    let mut t = Table::new(&["index", "eigenvalue"]);
    for (i, v) in vals.iter().enumerate() {
        t.push(vec![i.into(), (*v).into()]);
    }
    let text = vals.iter().map(|&v| tidy(v)).collect::<Vec<_>>().join(",") + "\n";
    Ok(Report {
        json: json!({ "m0": m0, "a": a, "m": m, "omega_rot": omega, "omega": branch.omega, "eigenvalues": vals }),
        csv: Some(t),
        text: Some(text),
    })
}

#[derive(Serialize)]
struct DetectedPoint {
    m: i32,
    n: u32,
    omega0: Frac,
    omega_star: f64,
    shift: f64,
    eigenvalue: f64,
    krein: KreinData,
    krein_sign: i32,
    resonant: bool,
    last: bool,
}

fn crossings(cfg: &RunConfig, m0: u32, a: f64, tracks: usize) -> CliResult<Report> {
    if m0 == 0 {
        return Err(CliError::config("m0 must be positive"));
    }
    let disc = RadialDiscretization::new(cfg.n_r, 3 * m0)?;
    let branch = solve_primary(m0, a, &disc)?;
    let m_hi = (3 * m0 as i32 - 1).max(m0 as i32 + 1);
    let blocks: Vec<i32> = (m0 as i32 + 1..=m_hi).collect();
    let tracked = par_map(&blocks, |&m| {
        let fam = HessianFamily::new(m, &branch, &disc)?;
        track_eigenvalues(&fam, &cfg.omega_grid, tracks)
    })
    .into_iter()
    .collect::<crate::Result<Vec<_>>>()?;

    let mut curves: Vec<(i32, u32, bool)> = curve_list(m0).iter().map(|c| (c.m, c.n, false)).collect();
    let lc = last_curve(m0);
    curves.push((lc.m, lc.n, true));
    let detected = par_map(&curves, |&(m, n, last)| -> crate::Result<DetectedPoint> {
        let c = find_crossing(m, n, &branch, crossing_bracket(m0, m, n, a), &disc)?;
        let omega0 = leading_omega(m0, m, n);
        Ok(DetectedPoint {
            m,
            n,
            omega0,
            omega_star: c.omega,
            shift: c.omega - omega0.to_f64(),
            eigenvalue: c.eigenvalue,
            krein: c.krein,
            krein_sign: sign_of(c.krein.s),
            resonant: c.resonant,
            last,
        })
    })
    .into_iter()
    .collect::<crate::Result<Vec<_>>>()?;

    let mut t = Table::new(&["m", "n_track", "Omega", "eigenvalue", "krein_sign"]);
    for tr in tracked.iter().flatten() {
        for ((om, v), s) in tr.omegas.iter().zip(&tr.values).zip(&tr.krein) {
            t.push(vec![tr.m.into(), tr.index.into(), (*om).into(), (*v).into(), sign_of(*s).into()]);
        }
    }
    let flat: Vec<_> = tracked.into_iter().flatten().collect();
    Ok(Report {
        json: json!({ "m0": m0, "a": a, "omega": branch.omega, "tracks": flat, "crossings": detected }),
        csv: Some(t),
        text: None,
    })
}

fn secondary(cfg: &RunConfig, m0: u32, m: i32, n: u32, a: f64, b: &[f64], with_morse: bool) -> CliResult<Report> {
    let c = converge(cfg, m0, m, n, a, b, with_morse)?;
    let fit = pitchfork_fit(&c.points, c.crossing.omega).ok();
    let mut t = Table::new(&[
        "b",
        "Omega",
        "mu",
        "residual",
        "iterations",
        "morse",
        "primary_morse",
        "min_abs_eigenvalue",
        "norm",
    ]);
    for p in &c.points {
        t.push(vec![
            p.b.into(),
            p.omega_rot.into(),
            p.mu().into(),
            p.residual.into(),
            p.iterations.into(),
            p.morse.into(),
            p.primary_morse.into(),
            p.min_abs_eigenvalue.into(),
            p.norm().into(),
        ]);
    }
    let crossing = json!({
        "m": c.crossing.m,
        "n": c.crossing.n,
        "omega_star": c.crossing.omega,
        "krein": c.crossing.krein,
        "resonant": c.crossing.resonant,
    });
    Ok(Report {
        json: json!({ "m0": m0, "m": m, "n": n, "a": a, "crossing": crossing, "points": c.points, "fit": fit }),
        csv: Some(t),
        text: None,
    })
}

#[allow(clippy::too_many_arguments)]
fn field(cfg: &RunConfig, m0: u32, m: i32, n: u32, a: f64, b: f64, source: Source, grid: GridSpec) -> CliResult<Report> {
    let f = match source {
        Source::Truncated => truncated_field(m0, m, n, a, b)?,
        Source::Converged => converged_point(cfg, m0, m, n, a, b)?.field(),
    };
    let samples = synthesize_field(&f, &grid)?;
    Ok(field_report(&samples, json!({ "m0": m0, "m": m, "n": n, "a": a, "b": b, "source": source, "grid": grid })))
}

pub(crate) fn field_report(samples: &[crate::vortex::FieldSample], head: serde_json::Value) -> Report {
    let mut t = Table::new(&["x", "y", "re", "im", "abs", "phase"]);
    for s in samples {
        let (norm, phase) = (s.re.hypot(s.im), s.im.atan2(s.re));
        t.push(vec![s.x.into(), s.y.into(), s.re.into(), s.im.into(), norm.into(), phase.into()]);
    }
    let mut json = head;
    json["samples"] = to_value(&samples);
    Report { json, csv: Some(t), text: None }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn zeros(
    cfg: &RunConfig,
    m0: u32,
    m: i32,
    n: u32,
    a: f64,
    b: f64,
    source: Source,
    opts: ZeroSearch,
) -> CliResult<Report> {
    let last = curve_kind(m0, m, n)?;
    let (config, asym, point) = match source {
        Source::Truncated => (locate_field_zeros(&truncated_field(m0, m, n, a, b)?, &opts)?, None, None),
        Source::Converged => {
            let p = converged_point(cfg, m0, m, n, a, b)?;
            let asym = match (last, m0) {
                (true, 1) => Some(asymmetric_vortex(&p, &opts)?),
                (true, 2) => Some(asymmetric_pair(&p, &opts)?),
                _ => None,
            };
            let summary = json!({ "omega_rot": p.omega_rot, "mu": p.mu(), "residual": p.residual });
            (configuration(&p, &opts)?, asym, Some(summary))
        }
    };
    let q = (m - m0 as i32) as u32;
    let polygon = if last { None } else { polygon_orbit(&config, q, 1e-3) };
    let predicted = if last { None } else { polygon_radius(m0, m, n, a, b).ok() };
    let mut t = Table::new(&["x", "y", "radius", "angle", "charge", "loop_radius", "refined"]);
    for z in &config.zeros {
        t.push(vec![
            z.x.into(),
            z.y.into(),
            z.radius.into(),
            z.angle.into(),
            z.charge.into(),
            z.loop_radius.into(),
            (z.refined as i32).into(),
        ]);
    }
    let json = json!({
        "m0": m0, "m": m, "n": n, "a": a, "b": b,
        "source": source,
        "branch": point,
        "configuration": config,
        "charge_sum": config.charge_sum(),
        "polygon": polygon,
        "predicted_radius": predicted,
        "asymmetric": asym,
    });
    Ok(Report { json, csv: Some(t), text: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::Cli;
    use clap::Parser;

    fn cfg(args: &[&str]) -> RunConfig {
        let cli = Cli::try_parse_from(std::iter::once("gpvortex").chain(args.iter().copied())).unwrap();
        RunConfig::from_cli(&cli).unwrap()
    }

    #[test]
    fn spectrum_at_zero_amplitude() {
        let c = cfg(&["spectrum", "--m0", "2", "--a", "0", "--m", "4"]);
        let r = execute(&c).unwrap();
        assert_eq!(r.text.unwrap(), "-4,0,4,4,8,8\n");
    }

    #[test]
    fn tidy_strips_noise() {
        assert_eq!(tidy(3.9999999999999996), "4");
        assert_eq!(tidy(-1e-14), "0");
        assert_eq!(tidy(0.5), "0.5");
    }

    #[test]
    fn curve_validation() {
        assert!(curve_kind(2, 3, 0).unwrap());
        assert!(!curve_kind(2, 5, 0).unwrap());
        assert_eq!(curve_kind(2, 4, 0).unwrap_err().code, super::super::EXIT_CONFIG);
        assert!(curve_kind(0, 1, 0).is_err());
    }

    #[test]
    fn atlas_csv_lists_curves() {
        let c = cfg(&["atlas", "--m0", "3", "--format", "csv"]);
        let s = execute(&c).unwrap().render(&c, &c.hash()).unwrap();
        let rows: Vec<_> = s.lines().skip(2).collect();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().any(|r| r.starts_with("curve,8,0,2,5,")));
        assert!(rows.iter().any(|r| r.starts_with("last,4,0,2,1,")));
    }
}
