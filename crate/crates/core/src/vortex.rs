//! Vortex maps: field synthesis, zero location and winding charges.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ModalField;
use crate::hermite::{build_eigenfunction, ln_factorial, ModeIndex};
use crate::parallel::par_map;
use crate::secondary::SecondaryBranchPoint;

pub const DEFAULT_R_REF: f64 = 3.0;
/// Cells whose samples stay below this fraction of max|U| are reported, not searched.
pub const LOW_AMPLITUDE: f64 = 1e-8;
const NOISE: f64 = 1e-13;
/// Largest phase step accepted on cell boundaries.
const CELL_STEP: f64 = PI / 3.0;
/// Levels a flagged lattice cell is split before its windings are trusted. A +1/−1 pair
/// closer than about h/2^MIN_DEPTH (h the lattice spacing) can still cancel unseen.
const MIN_DEPTH: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    pub m0: u32,
    pub m: i32,
    pub n: u32,
    pub a: f64,
    pub b: f64,
}

/// a e_{m0,0} e^{i m0 θ} + b e_{|m−2m0|,n} e^{i(2m0−m)θ}.
pub fn two_mode_field(m0: u32, m: i32, n: u32, a: f64, b: f64) -> Result<ModalField> {
    if m <= m0 as i32 {
        return Err(Error::InvalidArgument(format!("m = {m} must exceed m0 = {m0}")));
    }
    let mut f = ModalField::new();
    f.add_real(m0 as i32, &[a]);
    let mut c = vec![0.0; n as usize + 1];
    c[n as usize] = b;
    f.add_real(2 * m0 as i32 - m, &c);
    Ok(f)
}

/// a [e_{m0,0} e^{i m0 θ} + b c₊ e_{m0+1,0} e^{i(m0+1)θ} + b c₋ e_{m0−1,0} e^{i(m0−1)θ}].
pub fn last_curve_truncation(m0: u32, a: f64, b: f64, c_plus: f64, c_minus: f64) -> ModalField {
    let mut f = ModalField::new();
    f.add_real(m0 as i32, &[a]);
    f.add_real(m0 as i32 + 1, &[a * b * c_plus]);
    f.add_real(m0 as i32 - 1, &[a * b * c_minus]);
    f
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum GridSpec {
    Cartesian { half_width: f64, points: usize },
    Polar { r_max: f64, radii: usize, angles: usize },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    pub re: f64,
    pub im: f64,
}

pub fn grid_points(grid: &GridSpec) -> Result<Vec<(f64, f64)>> {
    match *grid {
        GridSpec::Cartesian { half_width, points } => {
            if points < 2 || !(half_width > 0.0) {
                return Err(Error::InvalidArgument("Cartesian grid needs ≥ 2 points and positive width".into()));
            }
            let h = 2.0 * half_width / (points - 1) as f64;
            Ok((0..points)
                .flat_map(|i| (0..points).map(move |j| (-half_width + j as f64 * h, -half_width + i as f64 * h)))
                .collect())
        }
        GridSpec::Polar { r_max, radii, angles } => {
            if radii < 1 || angles < 1 || !(r_max > 0.0) {
                return Err(Error::InvalidArgument("polar grid needs radii, angles and positive r_max".into()));
            }
            Ok((1..=radii)
                .flat_map(|i| {
                    let r = r_max * i as f64 / radii as f64;
                    (0..angles).map(move |k| {
                        let t = 2.0 * PI * k as f64 / angles as f64;
                        (r * t.cos(), r * t.sin())
                    })
                })
                .collect())
        }
    }
}

pub fn synthesize_field(field: &ModalField, grid: &GridSpec) -> Result<Vec<FieldSample>> {
    let pts = grid_points(grid)?;
    Ok(par_map(&pts, |&(x, y)| {
        let u = field.eval(x, y);
        FieldSample { x, y, re: u.re, im: u.im }
    }))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PolygonRadius {
    pub r0: f64,
    /// z'(r0).
    pub derivative: f64,
    pub closed_form: Option<f64>,
}

/// (b/a · √(m0!)/√((m−2m0)!))^{1/(3m0−m)}, for n = 0 and 2m0 < m < 3m0.
pub fn polygon_radius_closed(m0: u32, m: i32, a: f64, b: f64) -> Option<f64> {
    let d = m - 2 * m0 as i32;
    if d < 0 || d >= m0 as i32 {
        return None;
    }
    let ln = (b / a).ln() + 0.5 * (ln_factorial(m0) - ln_factorial(d as u32));
    Some((ln / (m0 as i32 - d) as f64).exp())
}

/// Small-b/a limit for n = 1: (b/a · C (|m−2m0|+1))^{1/(m0−|m−2m0|)}, C = √(m0!)/√((|m−2m0|+1)!).
pub fn polygon_radius_leading_n1(m0: u32, m: i32, a: f64, b: f64) -> Option<f64> {
    let d = (m - 2 * m0 as i32).unsigned_abs();
    if d >= m0 {
        return None;
    }
    let c = (0.5 * (ln_factorial(m0) - ln_factorial(d + 1))).exp();
    Some((b / a * c * (d + 1) as f64).powf(1.0 / (m0 - d) as f64))
}

/// First positive root of z(r) = a p_{m0,0}(r) − b p_{|m−2m0|,n}(r).
pub fn polygon_radius(m0: u32, m: i32, n: u32, a: f64, b: f64) -> Result<PolygonRadius> {
    const R_MAX: f64 = 8.0;
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument(format!("need a, b > 0 (a = {a}, b = {b})")));
    }
    let d = (m - 2 * m0 as i32).unsigned_abs();
    if d >= m0 {
        return Err(Error::InvalidArgument(format!("|m − 2m0| = {d} must be below m0 = {m0}")));
    }
    let p0 = build_eigenfunction(ModeIndex::new(m0 as i32, 0));
    let p1 = build_eigenfunction(ModeIndex::new(d as i32, n));
    let z = |r: f64| a * p0.poly(r) - b * p1.poly(r);
    let dz = |r: f64| a * p0.poly_derivative(r) - b * p1.poly_derivative(r);
    // geometric scan resolves small roots
    let samples = 20000;
    let r_min: f64 = 1e-10;
    let ratio = (R_MAX / r_min).powf(1.0 / samples as f64);
    let mut lo = r_min;
    let mut z_lo = z(lo);
    let mut bracket = None;
    for _ in 0..samples {
        let hi = lo * ratio;
        let z_hi = z(hi);
        if z_lo == 0.0 || z_lo.signum() != z_hi.signum() {
            bracket = Some((lo, hi));
            break;
        }
        lo = hi;
        z_lo = z_hi;
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::NoRoot { rmax: R_MAX })?;
    let s_lo = z(lo).signum();
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let zr = z(r);
        if zr == 0.0 {
            break;
        }
        if zr.signum() == s_lo {
            lo = r;
        } else {
            hi = r;
        }
        let step = zr / dz(r);
        let next = r - step;
        if step.abs() <= 2.0 * f64::EPSILON * r {
            r = next;
            break;
        }
        r = if next > lo && next < hi && step.is_finite() { next } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let derivative = dz(r);
    let scale = (a * p0.poly_derivative(r)).abs().max((b * p1.poly_derivative(r)).abs()).max(f64::MIN_POSITIVE);
    if derivative.abs() <= 1e-8 * scale {
        return Err(Error::NonSimpleRoot(r));
    }
    let closed_form = if n == 0 { polygon_radius_closed(m0, m, a, b) } else { None };
    Ok(PolygonRadius { r0: r, derivative, closed_form })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Vortex {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub angle: f64,
    pub charge: i32,
    /// Radius of the loop the charge was measured on.
    pub loop_radius: f64,
    /// Position polished by Newton (simple zeros) rather than cell subdivision.
    pub refined: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VortexConfiguration {
    pub zeros: Vec<Vortex>,
    pub total_winding: i32,
    pub r_ref: f64,
    pub params: Option<FieldParams>,
    /// Grid cells skipped because |U| was below the low-amplitude floor.
    pub low_amplitude_cells: usize,
}

impl VortexConfiguration {
    pub fn charge_sum(&self) -> i32 {
        self.zeros.iter().map(|z| z.charge).sum()
    }

    pub fn central(&self, tol: f64) -> Option<&Vortex> {
        self.zeros.iter().find(|z| z.radius <= tol)
    }

    pub fn off_center(&self, tol: f64) -> Vec<&Vortex> {
        self.zeros.iter().filter(|z| z.radius > tol).collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroSearch {
    pub r_ref: f64,
    /// Coarse cells per side; odd so the origin is a cell center. The lattice spacing is
    /// 2·r_ref/cells, and zeros of opposite charge closer than about 1/8 of it may cancel unseen.
    pub cells: usize,
    pub max_depth: u32,
}

impl Default for ZeroSearch {
    fn default() -> Self {
        Self { r_ref: DEFAULT_R_REF, cells: 121, max_depth: 24 }
    }
}

fn unwrap_increment(a: Complex64, b: Complex64) -> f64 {
    (b / a).arg()
}

enum Loop {
    Winding(i32),
    /// |f| at or below the noise floor somewhere on the loop.
    Faint,
    /// A phase step too large to unwrap.
    Ambiguous,
}

fn classify_loop(vals: &[Complex64], floor: f64, max_step: f64) -> Loop {
    if vals.iter().any(|v| v.norm() <= floor || !v.re.is_finite() || !v.im.is_finite()) {
        return Loop::Faint;
    }
    let mut total = 0.0;
    for i in 0..vals.len() {
        let d = unwrap_increment(vals[i], vals[(i + 1) % vals.len()]);
        if d.abs() > max_step {
            return Loop::Ambiguous;
        }
        total += d;
    }
    Loop::Winding((total / (2.0 * PI)).round() as i32)
}

/// Winding of f along a closed polygon; None if f is tiny somewhere or a phase step is ambiguous.
fn loop_winding(vals: &[Complex64], floor: f64, max_step: f64) -> Option<i32> {
    match classify_loop(vals, floor, max_step) {
        Loop::Winding(w) => Some(w),
        _ => None,
    }
}

/// Winding on a circle, doubling samples until every phase step is below π/4.
pub fn circle_winding<F: Fn(f64, f64) -> Complex64>(f: &F, cx: f64, cy: f64, radius: f64, floor: f64) -> Option<i32> {
    let mut n = 64;
    while n <= 65536 {
        let vals: Vec<Complex64> = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                f(cx + radius * t.cos(), cy + radius * t.sin())
            })
            .collect();
        if vals.iter().any(|v| v.norm() <= floor) {
            return None;
        }
        if let Some(w) = loop_winding(&vals, floor, PI / 4.0) {
            return Some(w);
        }
        n *= 2;
    }
    None
}

#[derive(Clone, Copy)]
struct Cell {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Cell {
    fn square(cx: f64, cy: f64, size: f64) -> Self {
        let h = size / 2.0;
        Self { x0: cx - h, x1: cx + h, y0: cy - h, y1: cy + h }
    }

    fn center(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let pad = 1e-9 * self.size();
        x >= self.x0 - pad && x <= self.x1 + pad && y >= self.y0 - pad && y <= self.y1 + pad
    }

    fn size(&self) -> f64 {
        (self.x1 - self.x0).max(self.y1 - self.y0)
    }

    fn boundary(&self, per_edge: usize) -> Vec<(f64, f64)> {
        let (x0, y0, x1, y1) = (self.x0, self.y0, self.x1, self.y1);
        let mut pts = Vec::with_capacity(4 * per_edge);
        for k in 0..per_edge {
            let t = k as f64 / per_edge as f64;
            pts.push((x0 + t * (x1 - x0), y0));
        }
        for k in 0..per_edge {
            let t = k as f64 / per_edge as f64;
            pts.push((x1, y0 + t * (y1 - y0)));
        }
        for k in 0..per_edge {
            let t = k as f64 / per_edge as f64;
            pts.push((x1 - t * (x1 - x0), y1));
        }
        for k in 0..per_edge {
            let t = k as f64 / per_edge as f64;
            pts.push((x0, y1 - t * (y1 - y0)));
        }
        pts
    }

    /// Off-center split, so a zero at the parent's center is not on a child edge.
    fn children(&self) -> [Cell; 4] {
        let xm = self.x0 + 0.5377 * (self.x1 - self.x0);
        let ym = self.y0 + 0.4621 * (self.y1 - self.y0);
        [
            Cell { x0: self.x0, x1: xm, y0: self.y0, y1: ym },
            Cell { x0: xm, x1: self.x1, y0: self.y0, y1: ym },
            Cell { x0: xm, x1: self.x1, y0: ym, y1: self.y1 },
            Cell { x0: self.x0, x1: xm, y0: ym, y1: self.y1 },
        ]
    }
}

struct Candidate {
    x: f64,
    y: f64,
    size: f64,
    refined: bool,
}

fn newton_zero<F: Fn(f64, f64) -> Complex64>(f: &F, cell: &Cell, floor: f64) -> Option<(f64, f64)> {
    let (cx, cy) = cell.center();
    let size = cell.size();
    let (mut x, mut y) = (cx, cy);
    let eta = 1e-6 * size;
    for _ in 0..40 {
        let u = f(x, y);
        let ux = (f(x + eta, y) - f(x - eta, y)) / (2.0 * eta);
        let uy = (f(x, y + eta) - f(x, y - eta)) / (2.0 * eta);
        let det = ux.re * uy.im - uy.re * ux.im;
        // a simple zero has an invertible real Jacobian
        if !det.is_finite() || det.abs() <= 1e-8 * (ux.norm_sqr() + uy.norm_sqr()) || det == 0.0 {
            return None;
        }
        if u.norm() <= floor {
            return Some((x, y));
        }
        let dx = (u.re * uy.im - uy.re * u.im) / det;
        let dy = (ux.re * u.im - u.re * ux.im) / det;
        x -= dx;
        y -= dy;
        if (x - cx).abs() > size || (y - cy).abs() > size {
            return None;
        }
        if dx.hypot(dy) <= 1e-15 * (1.0 + x.hypot(y)) {
            return Some((x, y));
        }
    }
    let u = f(x, y);
    (u.norm() <= 1e3 * floor).then_some((x, y))
}

/// Cell winding, densifying the boundary while phase steps are too coarse to unwrap.
///
/// An anisotropic simple zero (singular values σ1 > σ2) concentrates the phase change, so
/// the sampling needed does not shrink with the cell.
fn cell_loop<F: Fn(f64, f64) -> Complex64>(f: &F, cell: &Cell, floor: f64) -> Loop {
    let mut per_edge = 4;
    loop {
        let vals: Vec<Complex64> = cell.boundary(per_edge).iter().map(|&(x, y)| f(x, y)).collect();
        match classify_loop(&vals, floor, CELL_STEP) {
            Loop::Ambiguous if per_edge < 256 => per_edge *= 4,
            w => return w,
        }
    }
}

fn resolve<F: Fn(f64, f64) -> Complex64>(f: &F, cell: Cell, depth: u32, max_depth: u32, floor: f64, out: &mut Vec<Candidate>) {
    let w = cell_loop(f, &cell, floor);
    let (cx, cy) = cell.center();
    let leaf = Candidate { x: cx, y: cy, size: cell.size(), refined: false };
    match w {
        // a +1/−1 pair inside a flagged cell nets zero; look a few levels deeper before dropping it
        Loop::Winding(0) if depth > 0 && depth < MIN_DEPTH => {
            cell.children().into_iter().for_each(|c| resolve(f, c, depth + 1, max_depth, floor, out))
        }
        Loop::Winding(0) => {}
        // a flat multiple zero: the floor limits its position to about this cell
        Loop::Faint => out.push(leaf),
        // the enclosed zero lies in the cell; a root outside belongs to a neighbour
        Loop::Winding(1) | Loop::Winding(-1) if depth < MIN_DEPTH => {
            cell.children().into_iter().for_each(|c| resolve(f, c, depth + 1, max_depth, floor, out))
        }
        Loop::Winding(1) | Loop::Winding(-1) => match newton_zero(f, &cell, floor).filter(|&(x, y)| cell.contains(x, y)) {
            Some((x, y)) => out.push(Candidate { x, y, size: cell.size(), refined: true }),
            None if depth < max_depth => cell.children().into_iter().for_each(|c| resolve(f, c, depth + 1, max_depth, floor, out)),
            None => out.push(leaf),
        },
        _ if depth < max_depth => cell.children().into_iter().for_each(|c| resolve(f, c, depth + 1, max_depth, floor, out)),
        _ => out.push(leaf),
    }
}

/// Zeros inside the disk of radius `opts.r_ref`, with charges from small-loop windings.
pub fn locate_zeros<F>(f: F, opts: &ZeroSearch) -> Result<VortexConfiguration>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    if opts.cells < 3 || !(opts.r_ref > 0.0) {
        return Err(Error::InvalidArgument("zero search needs ≥ 3 cells and positive R_ref".into()));
    }
    let cells = opts.cells | 1;
    let mut last_err = None;
    for attempt in 0..3 {
        let h = 2.0 * opts.r_ref / cells as f64;
        // retries shift the lattice off a zero that sat on a cell edge
        let shift = [0.0, 0.1234567 * h, -0.2718281 * h][attempt];
        match locate_once(&f, opts, cells, h, shift) {
            Ok(c) => return Ok(c),
            Err(e @ Error::WindingMismatch { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn locate_once<F>(f: &F, opts: &ZeroSearch, cells: usize, h: f64, shift: f64) -> Result<VortexConfiguration>
where
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    let half = (cells as f64 - 1.0) / 2.0;
    let lat = 2 * cells + 1;
    let coord = |i: usize| (i as f64 / 2.0 - half - 0.5) * h + shift;
    let rows: Vec<usize> = (0..lat).collect();
    let grid: Vec<Vec<Complex64>> = par_map(&rows, |&i| (0..lat).map(|j| f(coord(j), coord(i))).collect());
    let scale = grid.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::FieldVanishesOnLoop(opts.r_ref));
    }
    let floor = NOISE * scale;
    let total = circle_winding(f, 0.0, 0.0, opts.r_ref, 10.0 * floor).ok_or(Error::FieldVanishesOnLoop(opts.r_ref))?;

    let mut flagged = Vec::new();
    let mut low = 0;
    for k in 0..cells {
        for l in 0..cells {
            let (cx, cy) = (coord(2 * l + 1), coord(2 * k + 1));
            if cx.hypot(cy) > opts.r_ref + h {
                continue;
            }
            let idx = [
                (2 * k, 2 * l),
                (2 * k, 2 * l + 1),
                (2 * k, 2 * l + 2),
                (2 * k + 1, 2 * l + 2),
                (2 * k + 2, 2 * l + 2),
                (2 * k + 2, 2 * l + 1),
                (2 * k + 2, 2 * l),
                (2 * k + 1, 2 * l),
            ];
            let vals: Vec<Complex64> = idx.iter().map(|&(i, j)| grid[i][j]).collect();
            if vals.iter().all(|v| v.norm() < LOW_AMPLITUDE * scale) {
                low += 1;
                continue;
            }
            if loop_winding(&vals, floor, CELL_STEP) != Some(0) {
                flagged.push(Cell::square(cx, cy, h));
            }
        }
    }
    let found: Vec<Vec<Candidate>> = par_map(&flagged, |c| {
        let mut out = Vec::new();
        resolve(f, *c, 0, opts.max_depth, floor, &mut out);
        out
    });
    // merge leaves that describe the same zero
    let mut cands: Vec<Candidate> = Vec::new();
    for c in found.into_iter().flatten() {
        if c.x.hypot(c.y) >= opts.r_ref {
            continue;
        }
        let near = |d: &Candidate| {
            let dist = (d.x - c.x).hypot(d.y - c.y);
            if d.refined && c.refined {
                dist <= 1e-9 * (1.0 + c.x.hypot(c.y))
            } else {
                dist <= 2.0 * (d.size + c.size)
            }
        };
        match cands.iter_mut().find(|d| near(d)) {
            Some(d) => {
                if (c.refined && !d.refined) || (c.refined == d.refined && c.size < d.size) {
                    *d = c;
                }
            }
            None => cands.push(c),
        }
    }
    let mut zeros = Vec::with_capacity(cands.len());
    for (i, c) in cands.iter().enumerate() {
        let nearest = cands
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, d)| (d.x - c.x).hypot(d.y - c.y))
            .fold(h, f64::min);
        let mut radius = 0.3 * nearest;
        let mut charge = None;
        for _ in 0..6 {
            if let Some(w) = circle_winding(f, c.x, c.y, radius, 10.0 * floor) {
                charge = Some(w);
                break;
            }
            radius *= 0.5;
        }
        match charge {
            Some(0) => {}
            Some(d) => zeros.push(Vortex {
                x: c.x,
                y: c.y,
                radius: c.x.hypot(c.y),
                angle: c.y.atan2(c.x),
                charge: d,
                loop_radius: radius,
                refined: c.refined && d.abs() == 1,
            }),
            None => return Err(Error::FieldVanishesOnLoop(radius)),
        }
    }
    zeros.sort_by(|a, b| a.radius.total_cmp(&b.radius).then(a.angle.total_cmp(&b.angle)));
    let sum: i32 = zeros.iter().map(|z| z.charge).sum();
    if sum != total {
        return Err(Error::WindingMismatch { sum, total });
    }
    Ok(VortexConfiguration { zeros, total_winding: total, r_ref: opts.r_ref, params: None, low_amplitude_cells: low })
}

pub fn locate_field_zeros(field: &ModalField, opts: &ZeroSearch) -> Result<VortexConfiguration> {
    locate_zeros(|x, y| field.eval(x, y), opts)
}

/// Zeros of a converged secondary point.
pub fn configuration(point: &SecondaryBranchPoint, opts: &ZeroSearch) -> Result<VortexConfiguration> {
    let mut c = locate_field_zeros(&point.field(), opts)?;
    c.params = Some(FieldParams { m0: point.sector.m0, m: point.sector.m, n: 0, a: point.a, b: point.b });
    Ok(c)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolygonOrbit {
    pub q: u32,
    pub radius: f64,
    pub charge: i32,
    pub angles: Vec<f64>,
    /// Max deviation from equal spacing, rad.
    pub angle_error: f64,
    pub radius_spread: f64,
}

/// The off-center zeros, if they form a single D_q orbit of equal charges.
pub fn polygon_orbit(config: &VortexConfiguration, q: u32, center_tol: f64) -> Option<PolygonOrbit> {
    let ring = config.off_center(center_tol);
    if ring.len() != q as usize || q == 0 {
        return None;
    }
    let charge = ring[0].charge;
    if ring.iter().any(|z| z.charge != charge) {
        return None;
    }
    let rmin = ring.iter().map(|z| z.radius).fold(f64::INFINITY, f64::min);
    let rmax = ring.iter().map(|z| z.radius).fold(0.0, f64::max);
    let mut angles: Vec<f64> = ring.iter().map(|z| z.angle.rem_euclid(2.0 * PI)).collect();
    angles.sort_by(f64::total_cmp);
    let zeta = 2.0 * PI / q as f64;
    let angle_error = angles
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let d = (t - angles[0] - k as f64 * zeta).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d)
        })
        .fold(0.0, f64::max);
    Some(PolygonOrbit { q, radius: 0.5 * (rmin + rmax), charge, angles, angle_error, radius_spread: rmax - rmin })
}

/// Arrangement of two zeros near the origin of a reflection-symmetric field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairGeometry {
    /// Both on one half of the symmetry axis, at distinct radii.
    SameRay,
    /// One on each half of the axis.
    OppositeRays,
    /// Mirror images off the axis, at equal radii.
    ConjugatePair,
    Other,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymmetricReport {
    pub config: VortexConfiguration,
    /// Zeros within unit distance of the origin, by increasing radius.
    pub near_origin: Vec<Vortex>,
    pub geometry: Option<PairGeometry>,
}

pub fn pair_geometry(a: &Vortex, b: &Vortex, tol: f64) -> PairGeometry {
    let scale = a.radius.max(b.radius);
    let on_axis = |v: &Vortex| v.y.abs() <= tol * scale;
    match (on_axis(a), on_axis(b)) {
        (true, true) if a.x.signum() == b.x.signum() => PairGeometry::SameRay,
        (true, true) => PairGeometry::OppositeRays,
        (false, false) if (a.x - b.x).abs() <= tol * scale && (a.y + b.y).abs() <= tol * scale => PairGeometry::ConjugatePair,
        _ => PairGeometry::Other,
    }
}

fn asymmetric(point: &SecondaryBranchPoint, m0: u32, opts: &ZeroSearch) -> Result<AsymmetricReport> {
    if point.sector.m0 != m0 || point.sector.q != 1 {
        return Err(Error::InvalidArgument(format!(
            "expected a last-curve point with m0 = {m0} (got m0 = {}, q = {})",
            point.sector.m0, point.sector.q
        )));
    }
    let config = configuration(point, opts)?;
    let near = 1.0;
    let near_origin: Vec<Vortex> = config.zeros.iter().filter(|z| z.radius < near).copied().collect();
    let geometry = (near_origin.len() == 2).then(|| pair_geometry(&near_origin[0], &near_origin[1], 1e-6));
    Ok(AsymmetricReport { config, near_origin, geometry })
}

/// m0 = 1: the displaced single vortex.
pub fn asymmetric_vortex(point: &SecondaryBranchPoint, opts: &ZeroSearch) -> Result<AsymmetricReport> {
    asymmetric(point, 1, opts)
}

/// m0 = 2: the split pair.
pub fn asymmetric_pair(point: &SecondaryBranchPoint, opts: &ZeroSearch) -> Result<AsymmetricReport> {
    asymmetric(point, 2, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_radii() {
        let r = polygon_radius(2, 5, 0, 1.0, 0.1).unwrap();
        assert!((r.r0 - 0.1 * 2f64.sqrt()).abs() < 1e-14);
        assert!((r.closed_form.unwrap() - r.r0).abs() < 1e-14);
        // (0.1 √3!/√2!)^{1/1}
        let r = polygon_radius(3, 8, 0, 0.2, 0.02).unwrap();
        assert!((r.r0 - 0.1 * 3f64.sqrt()).abs() < 1e-14);
        assert!(r.derivative > 0.0);
        let r = polygon_radius(3, 7, 0, 1.0, 0.05).unwrap();
        assert!((r.r0 - (0.05 * 6f64.sqrt()).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn n1_radius_approaches_leading_order() {
        let mut prev = f64::INFINITY;
        for ratio in [1e-2, 1e-3, 1e-4] {
            let r = polygon_radius(3, 6, 1, 1.0, ratio).unwrap().r0;
            let lead = polygon_radius_leading_n1(3, 6, 1.0, ratio).unwrap();
            let rel = (r / lead - 1.0).abs();
            assert!(rel < prev);
            prev = rel;
        }
        assert!(prev < 1e-2);
        // direct: z = a √(2/6) r³ − b √2 (1 − r²)
        let r = polygon_radius(3, 6, 1, 1.0, 0.01).unwrap().r0;
        let z = (2.0f64 / 6.0).sqrt() * r.powi(3) - 0.01 * 2f64.sqrt() * (1.0 - r * r);
        assert!(z.abs() < 1e-15, "{z}");
    }

    #[test]
    fn radius_preconditions() {
        assert!(matches!(polygon_radius(2, 7, 0, 1.0, 0.1), Err(Error::InvalidArgument(_))));
        assert!(matches!(polygon_radius(2, 5, 0, 1.0, 0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn unperturbed_vortex_has_one_zero() {
        let f = two_mode_field(3, 8, 0, 0.1, 0.0).unwrap();
        let c = locate_field_zeros(&f, &ZeroSearch::default()).unwrap();
        assert_eq!(c.zeros.len(), 1);
        assert_eq!(c.zeros[0].charge, 3);
        // |U| ~ a r³ meets the 1e-13 floor near r ~ 1e-4
        assert!(c.zeros[0].radius < 1e-3);
        assert_eq!(c.total_winding, 3);
    }

    #[test]
    fn truncated_triangle() {
        let (a, b) = (0.1, 0.01);
        let f = two_mode_field(2, 5, 0, a, b).unwrap();
        let c = locate_field_zeros(&f, &ZeroSearch::default()).unwrap();
        assert_eq!(c.total_winding, 2);
        assert_eq!(c.central(1e-3).unwrap().charge, -1);
        let p = polygon_orbit(&c, 3, 1e-3).unwrap();
        assert_eq!(p.charge, 1);
        assert!(p.angle_error < 1e-6 && p.radius_spread < 1e-6);
        // on the rays ζ/2 + kζ at exactly the root of z
        assert!((p.radius - polygon_radius(2, 5, 0, a, b).unwrap().r0).abs() < 1e-9);
        assert!((p.angles[0] - PI / 3.0).abs() < 1e-6);
    }

    #[test]
    fn truncated_field_is_d_q_symmetric() {
        let f = two_mode_field(3, 8, 0, 0.1, 0.01).unwrap();
        let zeta = 2.0 * PI / 5.0;
        let phase = Complex64::from_polar(1.0, 3.0 * zeta);
        for &(r, t) in &[(0.2, 0.1), (1.0, 2.0), (1.7, -0.4)] {
            assert!((f.eval_polar(r, t + zeta) - phase * f.eval_polar(r, t)).norm() < 1e-15);
        }
    }

    #[test]
    fn winding_mismatch_is_an_error() {
        // a field whose phase jumps across the negative x-axis has a cut, not a zero
        let f = |x: f64, y: f64| Complex64::from_polar(1.0 + x * x + y * y, 0.5 * y.atan2(x));
        let r = locate_zeros(f, &ZeroSearch { cells: 31, ..ZeroSearch::default() });
        assert!(r.is_err());
    }

    #[test]
    fn synthesized_grid() {
        let f = two_mode_field(2, 5, 0, 0.1, 0.0).unwrap();
        let s = synthesize_field(&f, &GridSpec::Polar { r_max: 2.0, radii: 4, angles: 8 }).unwrap();
        assert_eq!(s.len(), 32);
        for ring in s.chunks(8) {
            let m = Complex64::new(ring[0].re, ring[0].im).norm();
            assert!(ring.iter().all(|p| (Complex64::new(p.re, p.im).norm() - m).abs() < 1e-15));
        }
    }
}
