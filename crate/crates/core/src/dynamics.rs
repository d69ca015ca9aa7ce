//! Orbits near superattracting fixed points: iteration, basin grids and the
//! rate-comparison diagnostics.
//!
//! When the fixed point is the origin and the map has a log-polar evaluator,
//! orbits are carried as `u_k = -log|f^k(x)|`. Double-exponential collapse
//! then stays inside f64 for hundreds of iterates.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::local_metrics::{self, SamplingConfig};
use crate::map_catalog::{DilatationProfile, MapSpec};
use crate::point::{LogPoint, Point};
use crate::report::fmt_f64;

/// Radial orbits stop at radius `1e-300` (`u > 690`) by default.
pub const RADIAL_EPS_CONV: f64 = 1e-300;
pub const SAMPLED_EPS_CONV: f64 = 1e-12;
pub const DEFAULT_R_ESC: f64 = 1e10;
const FIXED_POINT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    ConvergedToFixedPoint,
    EscapedDomain,
    MaxIter,
    HitPreimageOfFixedPoint,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::ConvergedToFixedPoint => "converged-to-fixed-point",
            Classification::EscapedDomain => "escaped-domain",
            Classification::MaxIter => "max-iter",
            Classification::HitPreimageOfFixedPoint => "hit-preimage-of-fixed-point",
        }
    }

    /// Grey level in basin images.
    pub fn level(&self) -> u8 {
        match self {
            Classification::EscapedDomain => 0,
            Classification::MaxIter => 128,
            Classification::ConvergedToFixedPoint | Classification::HitPreimageOfFixedPoint => 255,
        }
    }

    pub fn in_basin(&self) -> bool {
        matches!(self, Classification::ConvergedToFixedPoint | Classification::HitPreimageOfFixedPoint)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitParams {
    /// Convergence radius about the fixed point; 0 disables the test.
    pub eps_conv: f64,
    /// Escape radius about the fixed point.
    pub r_esc: f64,
    pub k_max: usize,
}

impl OrbitParams {
    pub fn radial(k_max: usize) -> Self {
        OrbitParams { eps_conv: RADIAL_EPS_CONV, r_esc: DEFAULT_R_ESC, k_max }
    }

    pub fn sampled(k_max: usize) -> Self {
        OrbitParams { eps_conv: SAMPLED_EPS_CONV, r_esc: DEFAULT_R_ESC, k_max }
    }

    /// Parameters for the rate diagnostics: run until `k_max` or f64 overflow in `u`.
    pub fn unbounded(k_max: usize) -> Self {
        OrbitParams { eps_conv: 0.0, r_esc: DEFAULT_R_ESC, k_max }
    }
}

#[derive(Clone, Debug)]
pub enum OrbitCoords {
    Cartesian(Vec<Point>),
    /// Log-polar iterates about the origin.
    Log(Vec<LogPoint>),
}

#[derive(Clone, Debug)]
pub struct OrbitTrace {
    pub start: Point,
    pub x0: Point,
    pub coords: OrbitCoords,
    pub classification: Classification,
    /// `u_k = -log|f^k(x) - x0|` for every stored iterate.
    pub u: Vec<f64>,
    /// `a_k = log u_k` where `|f^k(x) - x0| < 1/e`.
    pub rate_seq: Vec<Option<f64>>,
}

impl OrbitTrace {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Finite prefix of `u`.
    pub fn finite_u(&self) -> &[f64] {
        let n = self.u.iter().position(|v| !v.is_finite()).unwrap_or(self.u.len());
        &self.u[..n]
    }

    /// Recomputes `iterates[k+1]` from `iterates[k]` at the given indices.
    pub fn verify_recurrence(&self, map: &MapSpec, ks: &[usize]) -> Result<bool> {
        for &k in ks {
            let ok = match &self.coords {
                OrbitCoords::Cartesian(pts) => {
                    if k + 1 >= pts.len() {
                        continue;
                    }
                    let y = map.evaluate(&pts[k])?;
                    y.dist(&pts[k + 1]) <= 1e-12 * y.norm().max(1.0)
                }
                OrbitCoords::Log(pts) => {
                    if k + 1 >= pts.len() || !pts[k].log_r.is_finite() {
                        continue;
                    }
                    let y = map.evaluate_log(&pts[k])?;
                    let n = &pts[k + 1];
                    (y.log_r - n.log_r).abs() <= 1e-12 * y.log_r.abs().max(1.0) && y.dir.dist(&n.dir) <= 1e-12
                }
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn rate_of(u: f64) -> Option<f64> {
    (u > 1.0 && u.is_finite()).then(|| u.ln())
}

fn check_fixed(map: &MapSpec, x0: &Point) -> Result<()> {
    let fx0 = map.evaluate(x0)?;
    if fx0.dist(x0) >= FIXED_POINT_TOL {
        return Err(Error::Contract(format!("{:?} is not a fixed point of {}", x0, map.name())));
    }
    Ok(())
}

/// Whether orbits about `x0` can be carried in log-polar form.
pub fn uses_log_coords(map: &MapSpec, x0: &Point) -> bool {
    x0.is_origin() && map.supports_log()
}

/// Iterates `x` under `map` until it converges to `x0`, escapes, hits `x0`
/// exactly or reaches `k_max`.
pub fn iterate_orbit(map: &MapSpec, x: &Point, x0: &Point, params: &OrbitParams) -> Result<OrbitTrace> {
    check_fixed(map, x0)?;
    if !map.domain().contains_radius(x.norm()) {
        return Err(Error::Domain { map: map.name().to_string(), radius: x.norm() });
    }
    if uses_log_coords(map, x0) {
        let mut t = iterate_orbit_log(map, &LogPoint::from_point(x), params)?;
        t.start = *x;
        return Ok(t);
    }
    let conv_u = -params.eps_conv.ln();
    let esc_u = -params.r_esc.ln();
    let mut pts = vec![*x];
    let mut u = Vec::new();
    let mut rate = Vec::new();
    let mut cur = *x;
    let classification = loop {
        let uk = -cur.dist(x0).ln();
        u.push(uk);
        rate.push(rate_of(uk));
        if uk == f64::INFINITY {
            break Classification::HitPreimageOfFixedPoint;
        }
        if uk > conv_u {
            break Classification::ConvergedToFixedPoint;
        }
        if uk < esc_u || !map.domain().contains_radius(cur.norm()) {
            break Classification::EscapedDomain;
        }
        if pts.len() > params.k_max {
            break Classification::MaxIter;
        }
        cur = map.evaluate(&cur)?;
        if !cur.is_finite() {
            break Classification::EscapedDomain;
        }
        pts.push(cur);
    };
    Ok(OrbitTrace { start: *x, x0: *x0, coords: OrbitCoords::Cartesian(pts), classification, u, rate_seq: rate })
}

/// Log-polar orbit about the origin from a start given in log-polar form.
///
/// Only the start itself can be an exact hit of the origin; afterwards
/// `u = +inf` means the radius underflowed f64 and counts as convergence.
pub fn iterate_orbit_log(map: &MapSpec, start: &LogPoint, params: &OrbitParams) -> Result<OrbitTrace> {
    if !map.supports_log() {
        return Err(Error::Unsupported(format!("{} has no log-polar evaluator", map.name())));
    }
    let conv_u = -params.eps_conv.ln();
    let esc_u = -params.r_esc.ln();
    let mut pts = vec![*start];
    let mut u = Vec::new();
    let mut rate = Vec::new();
    let mut cur = *start;
    let classification = loop {
        let uk = -cur.log_r;
        u.push(uk);
        rate.push(rate_of(uk));
        if uk == f64::INFINITY {
            break if pts.len() == 1 {
                Classification::HitPreimageOfFixedPoint
            } else {
                Classification::ConvergedToFixedPoint
            };
        }
        if uk > conv_u {
            break Classification::ConvergedToFixedPoint;
        }
        if uk < esc_u || !map.domain().contains_log_radius(cur.log_r) {
            break Classification::EscapedDomain;
        }
        if pts.len() > params.k_max {
            break Classification::MaxIter;
        }
        cur = map.evaluate_log(&cur)?;
        if cur.log_r.is_nan() {
            break Classification::EscapedDomain;
        }
        pts.push(cur);
    };
    let x0 = Point::origin(map.dimension());
    Ok(OrbitTrace { start: start.to_point(), x0, coords: OrbitCoords::Log(pts), classification, u, rate_seq: rate })
}

/// Classification and step count without storing the orbit.
fn classify_log(
    step: impl Fn(&LogPoint) -> Result<LogPoint>,
    start: LogPoint,
    conv_u: f64,
    esc_u: f64,
    in_domain: impl Fn(f64) -> bool,
    k_max: usize,
) -> (Classification, u32) {
    let mut cur = start;
    for k in 0..=k_max {
        let uk = -cur.log_r;
        if uk == f64::INFINITY {
            let c = if k == 0 { Classification::HitPreimageOfFixedPoint } else { Classification::ConvergedToFixedPoint };
            return (c, k as u32);
        }
        if uk > conv_u {
            return (Classification::ConvergedToFixedPoint, k as u32);
        }
        if uk < esc_u || uk.is_nan() || !in_domain(cur.log_r) {
            return (Classification::EscapedDomain, k as u32);
        }
        if k == k_max {
            break;
        }
        cur = match step(&cur) {
            Ok(p) => p,
            Err(_) => return (Classification::EscapedDomain, k as u32 + 1),
        };
    }
    (Classification::MaxIter, k_max as u32)
}

fn classify_cartesian(map: &MapSpec, x: &Point, x0: &Point, params: &OrbitParams) -> (Classification, u32) {
    let conv_u = -params.eps_conv.ln();
    let esc_u = -params.r_esc.ln();
    let mut cur = *x;
    for k in 0..=params.k_max {
        let uk = -cur.dist(x0).ln();
        if uk == f64::INFINITY {
            return (Classification::HitPreimageOfFixedPoint, k as u32);
        }
        if uk > conv_u {
            return (Classification::ConvergedToFixedPoint, k as u32);
        }
        if uk < esc_u || !cur.is_finite() || !map.domain().contains_radius(cur.norm()) {
            return (Classification::EscapedDomain, k as u32);
        }
        if k == params.k_max {
            break;
        }
        cur = match map.evaluate(&cur) {
            Ok(p) => p,
            Err(_) => return (Classification::EscapedDomain, k as u32 + 1),
        };
    }
    (Classification::MaxIter, params.k_max as u32)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasinTarget {
    Point(Point),
    /// The point at infinity of a polynomial-type map, handled through the
    /// inversion conjugate `g . f . g`: `|(g f g)^k(g z)| = 1 / |f^k(z)|`.
    Infinity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn square(half: f64) -> Self {
        Window { x_min: -half, x_max: half, y_min: -half, y_max: half }
    }

    /// Centre of pixel `(i, j)`, row 0 at the top.
    pub fn pixel_center(&self, i: usize, j: usize, width: usize, height: usize) -> Point {
        let fx = (2 * i + 1) as f64 / (2 * width) as f64;
        let fy = (2 * j + 1) as f64 / (2 * height) as f64;
        Point::new2(self.x_min + (self.x_max - self.x_min) * fx, self.y_max - (self.y_max - self.y_min) * fy)
    }
}

#[derive(Clone, Debug)]
pub struct BasinGrid {
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub classes: Vec<Classification>,
    pub iterations: Vec<u32>,
}

impl BasinGrid {
    pub fn class_at(&self, i: usize, j: usize) -> Classification {
        self.classes[j * self.width + i]
    }

    pub fn count(&self, c: Classification) -> usize {
        self.classes.iter().filter(|&&k| k == c).count()
    }

    /// Binary PGM (P5, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.classes.iter().map(|c| c.level()));
        out
    }

    pub fn write_iterations_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["i", "j", "x", "y", "class", "iterations"])?;
        for j in 0..self.height {
            for i in 0..self.width {
                let p = self.window.pixel_center(i, j, self.width, self.height);
                let idx = j * self.width + i;
                wtr.write_record([
                    i.to_string(),
                    j.to_string(),
                    fmt_f64(p.x()),
                    fmt_f64(p.y()),
                    self.classes[idx].as_str().to_string(),
                    self.iterations[idx].to_string(),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Per-pixel classification of a planar window.
///
/// The target must be strongly superattracting (`mu > 1`) unless
/// `override_gate` is set.
pub fn classify_basin_grid(
    map: &MapSpec,
    target: BasinTarget,
    window: Window,
    (width, height): (usize, usize),
    params: &OrbitParams,
    override_gate: bool,
) -> Result<BasinGrid> {
    if map.dimension() != 2 {
        return Err(Error::Unsupported("basin grids are planar".into()));
    }
    if width == 0 || height == 0 {
        return Err(Error::Invalid("empty resolution".into()));
    }
    let gate = |p: Option<DilatationProfile>, what: &str| -> Result<()> {
        let p = p.ok_or_else(|| Error::Contract(format!("{what} is not a marked point of {}", map.name())))?;
        if !p.strongly_superattracting() && !override_gate {
            return Err(Error::Gate(format!(
                "{what} is not strongly superattracting for {} (mu = {})",
                map.name(),
                p.mu
            )));
        }
        Ok(())
    };
    let conv_u = -params.eps_conv.ln();
    let esc_u = -params.r_esc.ln();
    let pixel: Box<dyn Fn(&Point) -> (Classification, u32) + Sync> = match target {
        BasinTarget::Point(x0) => {
            gate(map.profile_at(&x0).copied(), "the target")?;
            check_fixed(map, &x0)?;
            if uses_log_coords(map, &x0) {
                Box::new(move |z: &Point| {
                    classify_log(
                        |p| map.evaluate_log(p),
                        LogPoint::from_point(z),
                        conv_u,
                        esc_u,
                        |lr| map.domain().contains_log_radius(lr),
                        params.k_max,
                    )
                })
            } else {
                let params = *params;
                Box::new(move |z: &Point| classify_cartesian(map, z, &x0, &params))
            }
        }
        BasinTarget::Infinity => {
            if !map.polynomial_type() || !map.supports_log() {
                return Err(Error::Unsupported(format!("{}: infinity target needs a polynomial-type map", map.name())));
            }
            gate(map.infinity_profile(), "infinity")?;
            // the conjugate's u-coordinate of g(z) is log|z|
            Box::new(move |z: &Point| {
                let s = LogPoint::from_point(z);
                let flip = |p: &LogPoint| LogPoint::new(-p.log_r, p.dir);
                classify_log(
                    |w| map.evaluate_log(&flip(w)).map(|p| flip(&p)),
                    flip(&s),
                    conv_u,
                    esc_u,
                    |_| true,
                    params.k_max,
                )
            })
        }
    };
    let rows: Vec<Vec<(Classification, u32)>> = (0..height)
        .into_par_iter()
        .map(|j| (0..width).map(|i| pixel(&window.pixel_center(i, j, width, height))).collect())
        .collect();
    let (classes, iterations) = rows.into_iter().flatten().unzip();
    Ok(BasinGrid { window, width, height, classes, iterations })
}

fn basin_orbit(map: &MapSpec, x: &Point, x0: &Point, k_max: usize) -> Result<OrbitTrace> {
    let t = iterate_orbit(map, x, x0, &OrbitParams::unbounded(k_max))?;
    match t.classification {
        Classification::EscapedDomain => {
            Err(Error::Classification(format!("orbit of {:?} escaped under {}", x, map.name())))
        }
        Classification::HitPreimageOfFixedPoint => {
            Err(Error::Classification(format!("{:?} is in the backward orbit of the fixed point", x)))
        }
        _ => Ok(t),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RateComparison {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Smallest lag with `|f^(k+N)(y) - x0| < |f^k(x) - x0|` for all checked `k >= j`.
    pub n_found: Option<usize>,
    /// Largest `max(u_x/u_y, u_y/u_x)` over the tail used.
    pub alpha_est: f64,
    pub j: usize,
    /// Last `k` compared for the lag found.
    pub k_checked: usize,
}

/// Smallest `N <= k_max` whose inequality holds on at least the second half
/// of the compared horizon, given two `u` sequences.
pub fn overtake_lag_from_u(ux: &[f64], uy: &[f64], k_max: usize) -> Option<(usize, usize, usize)> {
    for n in 0..=k_max {
        if uy.len() <= n || ux.is_empty() {
            break;
        }
        let k_end = (ux.len() - 1).min(uy.len() - 1 - n);
        // smallest j with the strict inequality on [j, k_end]
        let mut j = k_end + 1;
        while j > 0 && uy[j - 1 + n] > ux[j - 1] {
            j -= 1;
        }
        if j <= k_end && j <= k_end / 2 {
            return Some((n, j, k_end));
        }
    }
    None
}

fn alpha_over(ux: &[f64], uy: &[f64], from: usize, to: usize) -> f64 {
    let mut a = f64::NEG_INFINITY;
    for k in from..=to.min(ux.len().min(uy.len()).saturating_sub(1)) {
        let (p, q) = (ux[k], uy[k]);
        if p > 0.0 && q > 0.0 {
            a = a.max((p / q).max(q / p));
        }
    }
    a
}

pub fn find_overtake_lag(map: &MapSpec, x: &Point, y: &Point, x0: &Point, k_max: usize) -> Result<RateComparison> {
    let tx = basin_orbit(map, x, x0, 2 * k_max)?;
    let ty = basin_orbit(map, y, x0, 2 * k_max)?;
    Ok(rate_comparison_from_u(x, y, tx.finite_u(), ty.finite_u(), k_max))
}

pub(crate) fn rate_comparison_from_u(x: &Point, y: &Point, ux: &[f64], uy: &[f64], k_max: usize) -> RateComparison {
    let found = overtake_lag_from_u(ux, uy, k_max);
    let (n_found, j, k_checked) = match found {
        Some((n, j, k)) => (Some(n), j, k),
        None => (None, 0, ux.len().min(uy.len()).saturating_sub(1)),
    };
    RateComparison {
        x: x.coords().to_vec(),
        y: y.coords().to_vec(),
        n_found,
        alpha_est: alpha_over(ux, uy, j, k_checked),
        j,
        k_checked,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AlphaSummary {
    /// Sup of `max(r, 1/r)` with `r = log|f^k(x)-x0| / log|f^k(y)-x0|` over pairs and `k in [j, k_max]`.
    pub alpha_at_k_max: f64,
    /// The same over `k in [j, 2 k_max]` (or the representable part of it).
    pub alpha_est: f64,
    pub j: usize,
    pub k_used: usize,
    pub stabilized: bool,
    /// Underflow in `u` ended the orbits before `2 k_max`.
    pub partial: bool,
    /// Log-ratio sequence `k -> u_x(k) / u_y(k)` per ordered pair `(a, b)`, `a < b`.
    pub pair_ratios: Vec<(usize, usize, Vec<f64>)>,
}

pub fn alpha_from_u(us: &[Vec<f64>], k_max: usize) -> Result<AlphaSummary> {
    if us.len() < 2 {
        return Err(Error::Invalid("need at least two points".into()));
    }
    let avail = us.iter().map(|u| u.len()).min().unwrap_or(0);
    if avail == 0 {
        return Err(Error::Invalid("empty orbit".into()));
    }
    // from j on every orbit stays within distance 1 of x0
    let j = us
        .iter()
        .map(|u| u[..avail].iter().rposition(|&v| v <= 0.0).map_or(0, |p| p + 1))
        .max()
        .unwrap_or(0);
    let k_used = avail - 1;
    if j > k_used {
        return Err(Error::Classification("orbits never settle inside the unit ball about x0".into()));
    }
    let mut a1 = f64::NEG_INFINITY;
    let mut a2 = f64::NEG_INFINITY;
    let mut pair_ratios = Vec::new();
    for a in 0..us.len() {
        for b in a + 1..us.len() {
            a1 = a1.max(alpha_over(&us[a], &us[b], j, k_max.min(k_used)));
            a2 = a2.max(alpha_over(&us[a], &us[b], j, (2 * k_max).min(k_used)));
            let ratios = (j..=k_used).map(|k| us[a][k] / us[b][k]).collect();
            pair_ratios.push((a, b, ratios));
        }
    }
    Ok(AlphaSummary {
        alpha_at_k_max: a1,
        alpha_est: a2,
        j,
        k_used,
        stabilized: ((a2 - a1) / a1).abs() < 0.01,
        partial: k_used < 2 * k_max,
        pair_ratios,
    })
}

/// Uniform log-ratio bound for a finite set of basin points.
pub fn estimate_alpha(map: &MapSpec, points: &[Point], x0: &Point, k_max: usize) -> Result<AlphaSummary> {
    let us: Vec<Vec<f64>> = points
        .iter()
        .map(|p| basin_orbit(map, p, x0, 2 * k_max).map(|t| t.finite_u().to_vec()))
        .collect::<Result<_>>()?;
    alpha_from_u(&us, k_max)
}

#[derive(Clone, Debug)]
pub struct IteratedShellRow {
    pub t: f64,
    pub r: f64,
    pub k: usize,
    /// `log L^k(x0, T r)`
    pub log_lhs: f64,
    /// `log T + log l^k(x0, r)`
    pub log_rhs: f64,
}

#[derive(Clone, Debug)]
pub struct IteratedShellReport {
    pub implied_c: f64,
    pub t0: f64,
    pub rows: Vec<IteratedShellRow>,
    pub violations: usize,
    pub ok: bool,
    /// Smallest `log_rhs - log_lhs`.
    pub worst_log_margin: f64,
}

/// `k -> (log l^k(x0, r), log L^k(x0, r))` for `k = 0..=k_max`, where `l^k`
/// and `L^k` are composed as `L^(k+1)(r) = L(L^k(r))`.
pub fn iterated_log_extrema(map: &MapSpec, x0: &Point, r: f64, k_max: usize, cfg: &SamplingConfig) -> Result<Vec<(f64, f64)>> {
    let one = |log_rho: f64| -> Result<(f64, f64)> {
        if x0.is_origin() {
            local_metrics::log_extrema_at_origin(map, log_rho, cfg)
        } else {
            let s = local_metrics::sphere_extrema(map, x0, log_rho.exp(), cfg)?;
            Ok((s.l_est.ln(), s.big_l_est.ln()))
        }
    };
    let mut out = vec![(r.ln(), r.ln())];
    let (mut lo, mut hi) = (r.ln(), r.ln());
    for _ in 0..k_max {
        if lo == f64::NEG_INFINITY || hi == f64::NEG_INFINITY {
            break;
        }
        lo = one(lo)?.0;
        hi = one(hi)?.1;
        out.push((lo, hi));
    }
    Ok(out)
}

/// `L^k(x0, T r) < T l^k(x0, r)` on a grid, checked in log form.
pub fn check_iterated_shell_lemma(
    map: &MapSpec,
    x0: &Point,
    t_grid: &[f64],
    r_grid: &[f64],
    k_max: usize,
    cfg: &SamplingConfig,
) -> Result<IteratedShellReport> {
    let p = *map
        .profile_at(x0)
        .ok_or_else(|| Error::Contract(format!("{:?} is not a marked point of {}", x0, map.name())))?;
    if !(p.mu > 1.0) {
        return Err(Error::Gate(format!("{} is not strongly superattracting at {:?} (mu = {})", map.name(), x0, p.mu)));
    }
    let grid = local_metrics::shell_grid(map, x0, 8, &local_metrics::default_t_grid(), cfg)?;
    let c = grid.max_implied_c;
    let t0 = local_metrics::default_t_grid()
        .into_iter()
        .filter(|&t| t.powf(1.0 - p.mu) > c * c)
        .fold(f64::NAN, f64::max);
    if t0.is_nan() {
        return Err(Error::Gate(format!("no T in the grid has T^(1-mu) > C^2 = {}", c * c)));
    }
    if let Some(&t) = t_grid.iter().find(|&&t| !(t > 0.0 && t < t0)) {
        return Err(Error::Contract(format!("T = {t} is not below T0 = {t0}")));
    }
    let mut rows = Vec::new();
    for &r in r_grid {
        let base = iterated_log_extrema(map, x0, r, k_max, cfg)?;
        for &t in t_grid {
            let shrunk = iterated_log_extrema(map, x0, t * r, k_max, cfg)?;
            for k in 1..base.len().min(shrunk.len()) {
                rows.push(IteratedShellRow { t, r, k, log_lhs: shrunk[k].1, log_rhs: t.ln() + base[k].0 });
            }
        }
    }
    let violations = rows.iter().filter(|w| !(w.log_lhs < w.log_rhs)).count();
    let worst_log_margin = rows.iter().map(|w| w.log_rhs - w.log_lhs).fold(f64::INFINITY, f64::min);
    Ok(IteratedShellReport { implied_c: c, t0, ok: violations == 0, violations, rows, worst_log_margin })
}

/// `log l^k(x0, |x - x0|) <= log|f^k(x) - x0| <= log L^k(x0, |x - x0|)` along a trace.
#[derive(Clone, Debug)]
pub struct SandwichReport {
    pub ok: bool,
    pub checked: usize,
    /// Largest violation in log units (0 when none).
    pub worst_violation: f64,
}

pub fn check_sandwich(map: &MapSpec, trace: &OrbitTrace, tol: f64, cfg: &SamplingConfig) -> Result<SandwichReport> {
    let r = trace.start.dist(&trace.x0);
    let u = trace.finite_u();
    let ext = iterated_log_extrema(map, &trace.x0, r, u.len().saturating_sub(1), cfg)?;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (k, &(lo, hi)) in ext.iter().enumerate().take(u.len()) {
        let v = -u[k];
        if !v.is_finite() || !lo.is_finite() || !hi.is_finite() {
            continue;
        }
        let slack = tol * v.abs().max(1.0);
        worst = worst.max(lo - v - slack).max(v - hi - slack);
        checked += 1;
    }
    Ok(SandwichReport { ok: worst <= 0.0, checked, worst_violation: worst.max(0.0) })
}

/// `log mu - delta <= a_{k+1} - a_k <= log nu + delta` for all defined `k >= from`.
pub fn rate_steps_within(trace: &OrbitTrace, profile: &DilatationProfile, delta: f64, from: usize) -> bool {
    let (lo, hi) = (profile.mu.ln() - delta, profile.nu.ln() + delta);
    trace.rate_seq.windows(2).enumerate().skip(from).all(|(_, w)| match (w[0], w[1]) {
        (Some(a), Some(b)) => (lo..=hi).contains(&(b - a)),
        _ => true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_catalog::Branch;

    const LN2: f64 = std::f64::consts::LN_2;

    fn o() -> Point {
        Point::origin(2)
    }

    #[test]
    fn power_two_orbit_in_log_coordinates() {
        let f = MapSpec::power(2).unwrap();
        let t = iterate_orbit(&f, &Point::new2(0.5, 0.0), &o(), &OrbitParams::radial(100)).unwrap();
        assert_eq!(t.classification, Classification::ConvergedToFixedPoint);
        for (k, &u) in t.u.iter().enumerate() {
            let expect = 2f64.powi(k as i32) * LN2;
            assert!((u - expect).abs() <= 1e-15 * expect, "k={k}");
            if let Some(a) = t.rate_seq[k] {
                assert!((a - (k as f64 * LN2 + LN2.ln())).abs() < 1e-12);
            }
        }
        assert!(t.verify_recurrence(&f, &[0, 3, 7]).unwrap());
    }

    #[test]
    fn winding_orbit_never_converges() {
        let f = MapSpec::winding(2).unwrap();
        let t = iterate_orbit(&f, &Point::polar(0.5, 0.4), &o(), &OrbitParams::radial(50)).unwrap();
        assert_eq!(t.classification, Classification::MaxIter);
        assert!(t.u.iter().all(|&u| (u - LN2).abs() < 1e-15));
    }

    #[test]
    fn pure_annulus_orbit_matches_direct_evaluation() {
        let f = MapSpec::pure_annulus_power(1.5, Branch::Fast).unwrap();
        let x = Point::new2(0.5, 0.0);
        let t = iterate_orbit(&f, &x, &o(), &OrbitParams::unbounded(30)).unwrap();
        let mut z = x;
        for k in 0..=10 {
            let expect = 3f64.powi(k) * LN2;
            assert!((t.u[k as usize] - expect).abs() <= 1e-13 * expect);
            // direct evaluation before underflow
            if z.norm() > 0.0 {
                assert!((-z.norm().ln() - expect).abs() <= 1e-9 * expect);
            }
            z = f.evaluate(&z).unwrap();
        }
    }

    #[test]
    fn start_at_fixed_point_is_a_preimage_hit() {
        let f = MapSpec::power(2).unwrap();
        let t = iterate_orbit(&f, &o(), &o(), &OrbitParams::radial(5)).unwrap();
        assert_eq!(t.classification, Classification::HitPreimageOfFixedPoint);
    }

    #[test]
    fn non_fixed_point_is_a_contract_error() {
        let f = MapSpec::conformal_exp();
        assert!(matches!(
            iterate_orbit(&f, &Point::new2(0.1, 0.0), &o(), &OrbitParams::sampled(5)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn escapes_are_classified() {
        let f = MapSpec::power(2).unwrap();
        let t = iterate_orbit(&f, &Point::new2(1.5, 0.0), &o(), &OrbitParams::radial(100)).unwrap();
        assert_eq!(t.classification, Classification::EscapedDomain);
    }

    #[test]
    fn basin_of_power_two_is_the_disc() {
        let f = MapSpec::power(2).unwrap();
        let w = Window::square(1.5);
        let g = classify_basin_grid(&f, BasinTarget::Point(o()), w, (61, 61), &OrbitParams::radial(200), false).unwrap();
        let px = 3.0 / 61.0;
        for j in 0..61 {
            for i in 0..61 {
                let r = w.pixel_center(i, j, 61, 61).norm();
                let c = g.class_at(i, j);
                if r < 1.0 - px {
                    assert!(c.in_basin(), "({i},{j}) r={r}");
                } else if r > 1.0 + px {
                    assert_eq!(c, Classification::EscapedDomain);
                }
            }
        }
    }

    #[test]
    fn winding_basin_needs_override_and_is_empty() {
        let f = MapSpec::winding(3).unwrap();
        let w = Window::square(1.5);
        let p = OrbitParams::radial(100);
        assert!(matches!(classify_basin_grid(&f, BasinTarget::Point(o()), w, (9, 9), &p, false), Err(Error::Gate(_))));
        let g = classify_basin_grid(&f, BasinTarget::Point(o()), w, (9, 9), &p, true).unwrap();
        let hits: Vec<(usize, usize)> =
            (0..9).flat_map(|j| (0..9).map(move |i| (i, j))).filter(|&(i, j)| g.class_at(i, j).in_basin()).collect();
        assert_eq!(hits, vec![(4, 4)]);
    }

    #[test]
    fn stretch_square_escaping_complement_is_bounded() {
        let f = MapSpec::stretch_square(1.5).unwrap();
        let w = Window::square(3.0);
        let g = classify_basin_grid(&f, BasinTarget::Infinity, w, (48, 48), &OrbitParams::sampled(200), false).unwrap();
        for j in 0..48 {
            for i in 0..48 {
                let z = w.pixel_center(i, j, 48, 48);
                // |f(z)| >= |z|^2 so everything outside the unit disc escapes
                if z.norm() > 1.0 {
                    assert_eq!(g.class_at(i, j), Classification::ConvergedToFixedPoint, "{z:?}");
                }
            }
        }
        assert!(g.count(Classification::ConvergedToFixedPoint) < 48 * 48);
    }

    #[test]
    fn pgm_header_and_levels() {
        let f = MapSpec::power(2).unwrap();
        let g = classify_basin_grid(&f, BasinTarget::Point(o()), Window::square(1.5), (4, 3), &OrbitParams::radial(50), false)
            .unwrap();
        let pgm = g.to_pgm();
        let header = b"P5\n4 3\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        assert_eq!(pgm.len(), header.len() + 12);
        assert!(pgm[header.len()..].iter().all(|b| [0u8, 128, 255].contains(b)));
    }

    #[test]
    fn overtake_lag_examples() {
        let f = MapSpec::power(2).unwrap();
        let x = Point::new2(0.5, 0.0);
        let same = find_overtake_lag(&f, &x, &x, &o(), 40).unwrap();
        assert_eq!((same.n_found, same.j), (Some(1), 0));
        let y = Point::new2(0.4, 0.0);
        let c = find_overtake_lag(&f, &x, &y, &o(), 40).unwrap();
        assert_eq!((c.n_found, c.j), (Some(0), 0));

        let g = MapSpec::pure_annulus_power(1.5, Branch::Fast).unwrap();
        let c = find_overtake_lag(&g, &Point::new2(0.5, 0.0), &Point::new2(0.25, 0.0), &o(), 40).unwrap();
        assert_eq!(c.n_found, Some(0));
    }

    #[test]
    fn overtake_rejects_escaping_orbit() {
        let f = MapSpec::power(2).unwrap();
        let r = find_overtake_lag(&f, &Point::new2(2.0, 0.0), &Point::new2(0.5, 0.0), &o(), 10);
        assert!(matches!(r, Err(Error::Classification(_))));
    }

    #[test]
    fn alpha_for_power_two_is_exact() {
        let f = MapSpec::power(2).unwrap();
        let s = estimate_alpha(&f, &[Point::new2(0.5, 0.0), Point::new2(0.4, 0.0)], &o(), 40).unwrap();
        let ratio = 0.5f64.ln() / 0.4f64.ln();
        for r in &s.pair_ratios[0].2 {
            assert!((r - ratio).abs() < 1e-12);
        }
        assert!((s.alpha_est - 1.0 / ratio).abs() < 1e-12);
        assert!(s.stabilized && !s.partial);
    }

    #[test]
    fn iterated_shell_power_two_example() {
        // L^3(0.05) = 0.05^8 < 0.5 * 0.1^8
        let f = MapSpec::power(2).unwrap();
        let rep = check_iterated_shell_lemma(&f, &o(), &[0.5], &[0.1], 3, &SamplingConfig::default()).unwrap();
        let row = rep.rows.iter().find(|w| w.k == 3).unwrap();
        assert!((row.log_lhs - 3.90625e-11f64.ln()).abs() < 1e-12);
        assert!((row.log_rhs - 5e-9f64.ln()).abs() < 1e-12);
        assert!(rep.ok);
    }

    #[test]
    fn iterated_shell_gate_rejects_winding() {
        let f = MapSpec::winding(3).unwrap();
        let r = check_iterated_shell_lemma(&f, &o(), &[0.5], &[0.1], 3, &SamplingConfig::default());
        assert!(matches!(r, Err(Error::Gate(_))));
    }

    #[test]
    fn sandwich_for_sampled_stretch_square() {
        let f = MapSpec::stretch_square(1.5).unwrap();
        let cfg = SamplingConfig::default();
        for x in [Point::new2(0.3, 0.2), Point::new2(-0.1, 0.4), Point::new2(0.45, 0.0)] {
            let t = iterate_orbit(&f, &x, &o(), &OrbitParams::radial(40)).unwrap();
            let s = check_sandwich(&f, &t, 1e-9, &cfg).unwrap();
            assert!(s.ok && s.checked > 5, "{s:?}");
        }
    }

    #[test]
    fn stretch_square_rate_steps_within_mu_nu() {
        let f = MapSpec::stretch_square(1.5).unwrap();
        let p = *f.profile_at(&o()).unwrap();
        let t = iterate_orbit(&f, &Point::new2(0.3, 0.2), &o(), &OrbitParams::unbounded(200)).unwrap();
        assert!(rate_steps_within(&t, &p, 1e-6, 5));
    }
}
