//! Sphere extrema `l(x, r)`, `L(x, r)` and the distortion checks built on them.
//!
//! `l(x, r)` and `L(x, r)` are the minimum and maximum of `|f(y) - f(x)|` over
//! `|y - x| = r`. Modulus-radial maps centred at the origin use their closed
//! radial form; everything else is sampled on a deterministic grid that is
//! refined by doubling until both extrema stabilise.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::map_catalog::{DilatationProfile, Domain, MapSpec};
use crate::point::Point;

pub const DEFAULT_TOL: f64 = 1e-6;
pub const PLANAR_START_SAMPLES: usize = 1 << 10;
pub const SPATIAL_START_SAMPLES: usize = 20_000;
pub const MAX_SAMPLES: usize = 1 << 22;
pub const MONOTONE_TOL: f64 = 1e-9;

const PAR_THRESHOLD: usize = 1 << 13;
const PROBE_GRID: usize = 8;
const PROBE_LEVELS: i32 = 12;

/// Sphere sampling parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingConfig {
    /// Relative stabilisation tolerance for both extrema.
    pub tol: f64,
    /// Seed for the grid rotation; 0 means no rotation.
    pub seed: u64,
    /// Multiplier on the starting sample count.
    pub sample_scale: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { tol: DEFAULT_TOL, seed: 0, sample_scale: 1 }
    }
}

impl SamplingConfig {
    pub fn doubled(&self) -> Self {
        SamplingConfig { sample_scale: self.sample_scale * 2, ..*self }
    }
}

/// Refined estimates of `l(x, r)` and `L(x, r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereStats {
    pub center: Point,
    pub radius: f64,
    pub l_est: f64,
    pub big_l_est: f64,
    /// 0 when the closed radial form was used.
    pub samples: usize,
    /// Relative change of the extrema in the last refinement.
    pub refine_error: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Scale {
    Linear,
    Log,
}

fn change(a: f64, b: f64, scale: Scale) -> f64 {
    if a == b {
        return 0.0;
    }
    match scale {
        Scale::Linear => (a - b).abs() / a.abs().max(b.abs()),
        Scale::Log => (a - b).abs(),
    }
}

/// Deterministic low-discrepancy directions on the unit sphere of R^dim.
struct SphereGrid {
    dim: usize,
    start: usize,
    /// Rotation in [0, 1) of one starting cell; fixed under doubling so planar grids stay nested.
    phase: f64,
}

impl SphereGrid {
    fn new(dim: usize, cfg: &SamplingConfig) -> Self {
        let phase = if cfg.seed == 0 { 0.0 } else { ChaCha8Rng::seed_from_u64(cfg.seed).gen::<f64>() };
        let base = if dim == 2 { PLANAR_START_SAMPLES } else { SPATIAL_START_SAMPLES };
        SphereGrid { dim, start: base * cfg.sample_scale.max(1), phase }
    }

    /// Direction `i` of an `n`-point grid.
    fn direction(&self, i: usize, n: usize) -> Point {
        if self.dim == 2 {
            let theta = TAU * (i as f64 / n as f64 + self.phase / self.start as f64);
            Point::new2(theta.cos(), theta.sin())
        } else {
            // Fibonacci lattice
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64 + TAU * self.phase;
            Point::new3(rho * phi.cos(), rho * phi.sin(), z)
        }
    }
}

fn extrema_over<F>(indices: &[usize], eval: &F) -> Result<(f64, f64)>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    let fold = |(lo, hi): (f64, f64), v: f64| (lo.min(v), hi.max(v));
    if indices.len() >= PAR_THRESHOLD {
        indices
            .par_iter()
            .map(|&i| eval(i).map(|v| (v, v)))
            .try_reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| Ok((a.0.min(b.0), a.1.max(b.1))))
    } else {
        let mut acc = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in indices {
            acc = fold(acc, eval(i)?);
        }
        Ok(acc)
    }
}

/// Min and max of `value` over the sphere `|y - center| = r`, refined by doubling.
fn scan_sphere<V>(center: &Point, r: f64, cfg: &SamplingConfig, scale: Scale, value: V) -> Result<SphereStats>
where
    V: Fn(&Point) -> Result<f64> + Sync,
{
    let grid = SphereGrid::new(center.dim(), cfg);
    let mut n = grid.start;
    let at = |i: usize, n: usize| value(&center.add(&grid.direction(i, n).scale(r)));

    let all: Vec<usize> = (0..n).collect();
    let (mut lo, mut hi) = extrema_over(&all, &|i| at(i, n))?;
    loop {
        let n2 = 2 * n;
        let (lo2, hi2) = if grid.dim == 2 {
            // the even points of the doubled grid are the current grid
            let odd: Vec<usize> = (0..n).map(|j| 2 * j + 1).collect();
            let (a, b) = extrema_over(&odd, &|i| at(i, n2))?;
            (lo.min(a), hi.max(b))
        } else {
            let all: Vec<usize> = (0..n2).collect();
            extrema_over(&all, &|i| at(i, n2))?
        };
        let err = change(lo, lo2, scale).max(change(hi, hi2, scale));
        let stats = SphereStats {
            center: *center,
            radius: r,
            l_est: lo2,
            big_l_est: hi2,
            samples: n2,
            refine_error: err,
        };
        if err < cfg.tol {
            return Ok(stats);
        }
        if n2 >= MAX_SAMPLES {
            return Err(Error::Precision { stats });
        }
        lo = lo2;
        hi = hi2;
        n = n2;
    }
}

fn check_ball(map: &MapSpec, x: &Point, r: f64) -> Result<()> {
    if x.dim() != map.dimension() {
        return Err(Error::Invalid(format!("{}: centre has dimension {}", map.name(), x.dim())));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Invalid(format!("sphere radius must be positive, got {r}")));
    }
    if !map.domain().contains_closed_ball(x, r) {
        return Err(Error::Domain { map: map.name().to_string(), radius: x.norm() + r });
    }
    Ok(())
}

/// `l(x, r)` and `L(x, r)`.
pub fn sphere_extrema(map: &MapSpec, x: &Point, r: f64, cfg: &SamplingConfig) -> Result<SphereStats> {
    check_ball(map, x, r)?;
    if x.is_origin() {
        if let Some(v) = map.radial_form(r) {
            return Ok(SphereStats { center: *x, radius: r, l_est: v, big_l_est: v, samples: 0, refine_error: 0.0 });
        }
    }
    let fx = map.evaluate(x)?;
    scan_sphere(x, r, cfg, Scale::Linear, |y| Ok(map.evaluate(y)?.dist(&fx)))
}

/// Radius of a sphere about the origin inside the domain used to scale
/// homogeneous maps.
fn base_radius(map: &MapSpec) -> f64 {
    if let Domain::Exterior { radius } = map.domain() {
        return 2.0 * radius;
    }
    let o = Point::origin(map.dimension());
    let d = map.domain().distance_to_boundary(&o);
    if d > 1.0 {
        1.0
    } else {
        d / 2.0
    }
}

/// `(log l(0, r), log L(0, r))` for `r = exp(log_r)`, free of under/overflow
/// for modulus-radial and homogeneous maps.
pub fn log_extrema_at_origin(map: &MapSpec, log_r: f64, cfg: &SamplingConfig) -> Result<(f64, f64)> {
    let o = Point::origin(map.dimension());
    if !map.domain().contains_log_radius(log_r) {
        return Err(Error::Domain { map: map.name().to_string(), radius: log_r.exp() });
    }
    if let Some(u) = map.radial_log(-log_r) {
        return Ok((-u, -u));
    }
    if let Some(h) = map.homogeneity() {
        let b = base_radius(map);
        let s = sphere_extrema(map, &o, b, cfg)?;
        let shift = h * (log_r - b.ln());
        return Ok((s.l_est.ln() + shift, s.big_l_est.ln() + shift));
    }
    let s = sphere_extrema(map, &o, log_r.exp(), cfg)?;
    Ok((s.l_est.ln(), s.big_l_est.ln()))
}

/// `(log M(r, f), log m(r, f))`: extrema of the uncentred `log |f(y)|` over `|y| = r`.
pub fn log_modulus(map: &MapSpec, r: f64, cfg: &SamplingConfig) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::Invalid(format!("modulus radius must be positive, got {r}")));
    }
    log_modulus_log(map, r.ln(), cfg)
}

/// [`log_modulus`] with the radius given as `log r`.
pub fn log_modulus_log(map: &MapSpec, log_r: f64, cfg: &SamplingConfig) -> Result<(f64, f64)> {
    let o = Point::origin(map.dimension());
    if let Some(u) = map.radial_log(-log_r) {
        return Ok((-u, -u));
    }
    if let Some(h) = map.homogeneity() {
        let b = base_radius(map);
        let s = scan_sphere(&o, b, cfg, Scale::Log, |y| map.log_norm(y))?;
        let shift = h * (log_r - b.ln());
        return Ok((s.big_l_est + shift, s.l_est + shift));
    }
    let r = log_r.exp();
    if !map.domain().contains_radius(r) || !r.is_finite() {
        return Err(Error::Domain { map: map.name().to_string(), radius: r });
    }
    let s = scan_sphere(&o, r, cfg, Scale::Log, |y| map.log_norm(y))?;
    Ok((s.big_l_est, s.l_est))
}

fn profile_of<'a>(map: &'a MapSpec, x: &Point) -> Result<&'a DilatationProfile> {
    map.profile_at(x)
        .ok_or_else(|| Error::Contract(format!("{:?} is not a marked point of {}", x, map.name())))
}

fn monotone_values(map: &MapSpec, x: &Point, grid: &[f64], cfg: &SamplingConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let stats: Vec<SphereStats> = grid
        .par_iter()
        .map(|&r| sphere_extrema(map, x, r, cfg))
        .collect::<Result<_>>()?;
    Ok((stats.iter().map(|s| s.l_est).collect(), stats.iter().map(|s| s.big_l_est).collect()))
}

fn count_decreases(v: &[f64]) -> usize {
    v.windows(2).filter(|w| w[1] < w[0] * (1.0 - MONOTONE_TOL)).count()
}

/// Working radius below which the local checks are run: half the largest
/// probe radius on which `l` and `L` are monotone, capped at a quarter of the
/// distance to the domain boundary.
pub fn r0(map: &MapSpec, x: &Point, cfg: &SamplingConfig) -> Result<f64> {
    let dist = map.domain().distance_to_boundary(x);
    let cap = dist / 4.0;
    let ceiling = if dist.is_finite() { dist / 2.0 } else { 1.0 };
    for j in 0..PROBE_LEVELS {
        let rho = ceiling * 2f64.powi(-j);
        let grid: Vec<f64> = (1..=PROBE_GRID).map(|i| rho * i as f64 / PROBE_GRID as f64).collect();
        let (l, big_l) = monotone_values(map, x, &grid, cfg)?;
        if count_decreases(&l) == 0 && count_decreases(&big_l) == 0 {
            return Ok((rho / 2.0).min(cap));
        }
    }
    Err(Error::Contract(format!("{}: no monotone probe radius found at {:?}", map.name(), x)))
}

/// Both chains of the shell-distortion bounds at one `(r, T)`.
#[derive(Clone, Debug)]
pub struct ShellReport {
    pub profile: DilatationProfile,
    pub x: Point,
    pub r: f64,
    pub t: f64,
    pub l_r: f64,
    pub big_l_r: f64,
    pub l_tr: f64,
    pub big_l_tr: f64,
    /// `L(x, r) / l(x, T r)`
    pub ratio_max_min: f64,
    /// `l(x, r) / L(x, T r)`
    pub ratio_min_max: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// Smallest `C` with `L(r)/l(Tr) <= C^2 T^-nu` and `T^-mu / C^2 <= l(r)/L(Tr)`.
    pub implied_c: f64,
    /// `ratio_max_min / T^-mu`, the slack in the first lower bound.
    pub lower_margin: f64,
}

/// Ratios without the `r < r0` precondition.
pub fn shell_ratios(map: &MapSpec, x: &Point, r: f64, t: f64, cfg: &SamplingConfig) -> Result<ShellReport> {
    let profile = *profile_of(map, x)?;
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Invalid(format!("T must lie in (0, 1], got {t}")));
    }
    let at_r = sphere_extrema(map, x, r, cfg)?;
    let at_tr = sphere_extrema(map, x, t * r, cfg)?;
    let ratio_max_min = at_r.big_l_est / at_tr.l_est;
    let ratio_min_max = at_r.l_est / at_tr.big_l_est;
    let (mu, nu) = (profile.mu, profile.nu);
    let lower = t.powf(-mu);
    let upper_free = t.powf(-nu);
    let c2 = (ratio_max_min / upper_free).max(lower / ratio_min_max);
    let tol = cfg.tol;
    let lower_ok = ratio_max_min >= lower * (1.0 - tol) && ratio_min_max * c2 >= lower * (1.0 - tol);
    let upper_ok = ratio_min_max <= upper_free * (1.0 + tol) && ratio_max_min <= c2 * upper_free * (1.0 + tol);
    Ok(ShellReport {
        profile,
        x: *x,
        r,
        t,
        l_r: at_r.l_est,
        big_l_r: at_r.big_l_est,
        l_tr: at_tr.l_est,
        big_l_tr: at_tr.big_l_est,
        ratio_max_min,
        ratio_min_max,
        lower_ok,
        upper_ok,
        implied_c: c2.sqrt(),
        lower_margin: ratio_max_min / lower,
    })
}

/// The shell bounds `T^-mu <= L(x,r)/l(x,Tr) <= C^2 T^-nu` and
/// `T^-mu / C^2 <= l(x,r)/L(x,Tr) <= T^-nu` at one radius.
pub fn check_shell_bounds(map: &MapSpec, x: &Point, r: f64, t: f64, cfg: &SamplingConfig) -> Result<ShellReport> {
    profile_of(map, x)?;
    let r0 = r0(map, x, cfg)?;
    if !(r > 0.0 && r < r0) {
        return Err(Error::Range { r, r0 });
    }
    shell_ratios(map, x, r, t, cfg)
}

/// All shell reports for `r = r0 2^-j`, `j = 1..=j_max`, and the given `T`s.
#[derive(Clone, Debug)]
pub struct ShellGrid {
    pub r0: f64,
    pub rows: Vec<ShellReport>,
    pub max_implied_c: f64,
    pub all_lower_ok: bool,
    pub all_upper_ok: bool,
    pub worst_lower_margin: f64,
}

pub fn shell_grid(map: &MapSpec, x: &Point, j_max: u32, ts: &[f64], cfg: &SamplingConfig) -> Result<ShellGrid> {
    profile_of(map, x)?;
    let r0 = r0(map, x, cfg)?;
    let pairs: Vec<(f64, f64)> =
        (1..=j_max).flat_map(|j| ts.iter().map(move |&t| (r0 * 2f64.powi(-(j as i32)), t))).collect();
    let rows: Vec<ShellReport> =
        pairs.par_iter().map(|&(r, t)| shell_ratios(map, x, r, t, cfg)).collect::<Result<_>>()?;
    let max_implied_c = rows.iter().map(|s| s.implied_c).fold(f64::NEG_INFINITY, f64::max);
    let worst_lower_margin = rows.iter().map(|s| s.lower_margin).fold(f64::INFINITY, f64::min);
    Ok(ShellGrid {
        r0,
        all_lower_ok: rows.iter().all(|s| s.lower_ok),
        all_upper_ok: rows.iter().all(|s| s.upper_ok),
        rows,
        max_implied_c,
        worst_lower_margin,
    })
}

/// `T in {0.1, 0.2, ..., 0.9}`.
pub fn default_t_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// `max L(x, r) / l(x, r)` over the radii.
pub fn estimate_comparison_constant(map: &MapSpec, x: &Point, radii: &[f64], cfg: &SamplingConfig) -> Result<f64> {
    let r0 = r0(map, x, cfg)?;
    if let Some(&r) = radii.iter().find(|&&r| !(r > 0.0 && r < r0)) {
        return Err(Error::Range { r, r0 });
    }
    let (l, big_l) = monotone_values(map, x, radii, cfg)?;
    Ok(l.iter().zip(&big_l).map(|(a, b)| b / a).fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Clone, Debug)]
pub struct MonotonicityReport {
    pub ok: bool,
    pub violations: usize,
    pub radii: Vec<f64>,
    pub l: Vec<f64>,
    pub big_l: Vec<f64>,
}

/// Whether `l(x, .)` and `L(x, .)` are nondecreasing along an increasing grid.
pub fn check_monotonicity(map: &MapSpec, x: &Point, r_grid: &[f64], cfg: &SamplingConfig) -> Result<MonotonicityReport> {
    if r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("radius grid must be strictly increasing".into()));
    }
    let r0 = r0(map, x, cfg)?;
    if let Some(&r) = r_grid.iter().find(|&&r| !(r > 0.0 && r < r0)) {
        return Err(Error::Range { r, r0 });
    }
    let (l, big_l) = monotone_values(map, x, r_grid, cfg)?;
    let violations = count_decreases(&l) + count_decreases(&big_l);
    Ok(MonotonicityReport { ok: violations == 0, violations, radii: r_grid.to_vec(), l, big_l })
}

/// Fitted two-sided envelope `A |y-x|^nu <= |f(y) - f(x)| <= B |y-x|^mu`.
#[derive(Clone, Debug)]
pub struct HolderReport {
    pub mu: f64,
    pub nu: f64,
    /// Largest `A` valid over the samples.
    pub a: f64,
    /// Smallest `B` valid over the samples.
    pub b: f64,
    pub ok: bool,
    /// `(|y - x|, |f(y) - f(x)|)` per sample.
    pub pairs: Vec<(f64, f64)>,
}

impl HolderReport {
    /// Whether the envelope with the given constants holds on every sample.
    pub fn holds_with(&self, a: f64, b: f64, tol: f64) -> bool {
        self.pairs.iter().all(|&(d, v)| a * d.powf(self.nu) <= v * (1.0 + tol) && v <= b * d.powf(self.mu) * (1.0 + tol))
    }
}

pub fn check_holder_envelope(map: &MapSpec, x: &Point, samples: &[Point], cfg: &SamplingConfig) -> Result<HolderReport> {
    let p = *profile_of(map, x)?;
    let r0 = r0(map, x, cfg)?;
    let fx = map.evaluate(x)?;
    let mut pairs = Vec::with_capacity(samples.len());
    for y in samples {
        let d = y.dist(x);
        if d == 0.0 {
            continue;
        }
        if d >= r0 {
            return Err(Error::Range { r: d, r0 });
        }
        pairs.push((d, map.evaluate(y)?.dist(&fx)));
    }
    let a = pairs.iter().map(|&(d, v)| v / d.powf(p.nu)).fold(f64::INFINITY, f64::min);
    let b = pairs.iter().map(|&(d, v)| v / d.powf(p.mu)).fold(f64::NEG_INFINITY, f64::max);
    let ok = !pairs.is_empty() && a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite();
    Ok(HolderReport { mu: p.mu, nu: p.nu, a, b, ok, pairs })
}

/// `count` points uniformly distributed in the ball `B(x, radius)`.
pub fn ball_samples(x: &Point, radius: f64, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = x.dim();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut c = [0.0; crate::point::MAX_DIM];
        for v in c.iter_mut().take(dim) {
            *v = rng.gen_range(-1.0..1.0);
        }
        let p = Point::from_slice(&c[..dim]).expect("valid dimension");
        let n = p.norm();
        if n < 1.0 && n > 0.0 {
            out.push(x.add(&p.scale(radius)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_catalog::Branch;

    fn cfg() -> SamplingConfig {
        SamplingConfig::default()
    }

    fn o() -> Point {
        Point::origin(2)
    }

    #[test]
    fn radial_examples_exact() {
        let w = MapSpec::winding(3).unwrap();
        let s = sphere_extrema(&w, &o(), 0.3, &cfg()).unwrap();
        assert_eq!((s.l_est, s.big_l_est, s.samples), (0.3, 0.3, 0));
        let p = MapSpec::power(2).unwrap();
        let s = sphere_extrema(&p, &o(), 0.1, &cfg()).unwrap();
        assert!((s.l_est - 0.01).abs() < 1e-17 && (s.big_l_est - 0.01).abs() < 1e-17);
    }

    #[test]
    fn stretch_square_extrema_against_dense_scan() {
        let f = MapSpec::stretch_square(1.5).unwrap();
        let s = sphere_extrema(&f, &o(), 0.1, &cfg()).unwrap();
        // independent dense angular scan with 10^6 points
        let n = 1_000_000;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let th = TAU * i as f64 / n as f64;
            let (c, sn) = (th.cos(), th.sin());
            let v = 0.01 * (c * c + 2.25 * sn * sn);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!((s.l_est - lo).abs() < 1e-12 && (s.big_l_est - hi).abs() < 1e-12);
        assert!((s.l_est - 0.01).abs() < 1e-15 && (s.big_l_est - 0.0225).abs() < 1e-15);
        assert!(s.samples > 0 && s.refine_error < DEFAULT_TOL);
    }

    #[test]
    fn rotated_grid_still_converges() {
        let f = MapSpec::stretch_square(1.5).unwrap();
        let c = SamplingConfig { seed: 17, ..cfg() };
        let s = sphere_extrema(&f, &o(), 0.1, &c).unwrap();
        assert!((s.l_est - 0.01).abs() < 1e-7 && (s.big_l_est - 0.0225).abs() < 1e-7);
    }

    #[test]
    fn spatial_sampler_off_centre() {
        // |f(y) - f(x)| for radial_stretch in R^3 about a non-origin centre
        let f = MapSpec::radial_stretch(2.0, 3).unwrap();
        let x = Point::new3(0.5, 0.0, 0.0);
        let s = sphere_extrema(&f, &x, 0.1, &cfg()).unwrap();
        assert!(s.l_est <= s.big_l_est && s.samples >= SPATIAL_START_SAMPLES);
        // brute force on a lat-long grid
        let fx = f.evaluate(&x).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..=400 {
            let th = std::f64::consts::PI * i as f64 / 400.0;
            for j in 0..800 {
                let ph = TAU * j as f64 / 800.0;
                let y = x.add(&Point::new3(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()).scale(0.1));
                let v = f.evaluate(&y).unwrap().dist(&fx);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        assert!((s.l_est - lo).abs() < 1e-4 * lo, "{} vs {lo}", s.l_est);
        assert!((s.big_l_est - hi).abs() < 1e-4 * hi, "{} vs {hi}", s.big_l_est);
    }

    #[test]
    fn ball_outside_domain_is_rejected() {
        let s = std::sync::Arc::new(crate::g_example::build_schedule(1.5, &[(2, 2)], 0.5).unwrap());
        let g = MapSpec::g_example(s);
        assert!(matches!(sphere_extrema(&g, &o(), 1.5, &cfg()), Err(Error::Domain { .. })));
    }

    #[test]
    fn precision_error_carries_stats() {
        let f = MapSpec::stretch_square(1.5).unwrap();
        let c = SamplingConfig { tol: 0.0, seed: 3, sample_scale: 1 };
        match sphere_extrema(&f, &o(), 0.1, &c) {
            Err(Error::Precision { stats }) => assert_eq!(stats.samples, MAX_SAMPLES),
            other => panic!("expected precision error, got {other:?}"),
        }
    }

    #[test]
    fn r0_whole_plane_and_disc() {
        assert_eq!(r0(&MapSpec::power(2).unwrap(), &o(), &cfg()).unwrap(), 0.5);
        let s = std::sync::Arc::new(crate::g_example::build_schedule(1.5, &[(2, 2)], 0.5).unwrap());
        assert_eq!(r0(&MapSpec::g_example(s), &o(), &cfg()).unwrap(), 0.25);
    }

    #[test]
    fn shell_power_is_tight() {
        for d in [2, 3] {
            let f = MapSpec::power(d).unwrap();
            let rep = check_shell_bounds(&f, &o(), 0.1, 0.5, &cfg()).unwrap();
            let expect = 0.5f64.powi(-(d as i32));
            assert!((rep.ratio_max_min - expect).abs() < 1e-12 * expect);
            assert!((rep.implied_c - 1.0).abs() < 1e-12);
            assert!(rep.lower_ok && rep.upper_ok);
        }
    }

    #[test]
    fn shell_winding_ratio_is_inverse_t() {
        let f = MapSpec::winding(3).unwrap();
        let rep = check_shell_bounds(&f, &o(), 0.2, 0.25, &cfg()).unwrap();
        assert!((rep.ratio_max_min - 4.0).abs() < 1e-12);
        assert!((rep.lower_margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shell_stretch_square_example() {
        let f = MapSpec::stretch_square(1.5).unwrap();
        let rep = check_shell_bounds(&f, &o(), 0.05, 0.5, &cfg()).unwrap();
        assert!((rep.ratio_max_min - 9.0).abs() < 1e-12);
        assert!((0.5f64.powf(-rep.profile.mu) - 2f64.powf(4.0 / 3.0)).abs() < 1e-12);
        assert!(rep.implied_c >= (9.0f64 / 8.0).sqrt());
        assert!(rep.lower_ok && rep.upper_ok);
    }

    #[test]
    fn shell_range_and_marked_point_errors() {
        let f = MapSpec::power(2).unwrap();
        assert!(matches!(check_shell_bounds(&f, &o(), 0.6, 0.5, &cfg()), Err(Error::Range { .. })));
        assert!(matches!(
            check_shell_bounds(&f, &Point::new2(0.1, 0.0), 0.01, 0.5, &cfg()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn comparison_constants() {
        let radii = [0.01, 0.05, 0.1, 0.2];
        let c = |f: MapSpec| estimate_comparison_constant(&f, &o(), &radii, &cfg()).unwrap();
        assert_eq!(c(MapSpec::power(2).unwrap()), 1.0);
        assert_eq!(c(MapSpec::winding(4).unwrap()), 1.0);
        assert!((c(MapSpec::stretch_square(1.5).unwrap()) - 2.25).abs() < 1e-12);
        assert!((c(MapSpec::stretch_square(1.25).unwrap()) - 1.5625).abs() < 1e-12);
    }

    #[test]
    fn comparison_constant_matches_grid_sup() {
        let f = MapSpec::stretch_square(1.25).unwrap();
        let g = shell_grid(&f, &o(), 4, &[1.0], &cfg()).unwrap();
        let radii: Vec<f64> = g.rows.iter().map(|s| s.r).collect();
        let c = estimate_comparison_constant(&f, &o(), &radii, &cfg()).unwrap();
        let sup = g.rows.iter().map(|s| s.big_l_r / s.l_r).fold(0.0, f64::max);
        assert!((c - sup).abs() < 1e-15);
    }

    #[test]
    fn monotonicity_examples() {
        let p = MapSpec::power(2).unwrap();
        let rep = check_monotonicity(&p, &o(), &[0.1, 0.2, 0.3], &cfg()).unwrap();
        assert!(rep.ok);
        assert!((rep.l[2] - 0.09).abs() < 1e-15);
        let s = MapSpec::stretch_square(1.5).unwrap();
        let grid: Vec<f64> = (1..=64).map(|i| 0.5 * i as f64 / 65.0).collect();
        let rep = check_monotonicity(&s, &o(), &grid, &cfg()).unwrap();
        assert!(rep.ok);
        for (i, r) in grid.iter().enumerate() {
            assert!((rep.l[i] - r * r).abs() < 1e-15 && (rep.big_l[i] - 2.25 * r * r).abs() < 1e-15);
        }
        assert!(check_monotonicity(&p, &o(), &[0.2, 0.1], &cfg()).is_err());
    }

    #[test]
    fn holder_examples() {
        let p = MapSpec::power(2).unwrap();
        let ys = ball_samples(&o(), 0.4, 500, 1);
        let rep = check_holder_envelope(&p, &o(), &ys, &cfg()).unwrap();
        assert!((rep.a - 1.0).abs() < 1e-12 && (rep.b - 1.0).abs() < 1e-12 && rep.ok);

        let f = MapSpec::pure_annulus_power(1.5, Branch::Fast).unwrap();
        let rep = check_holder_envelope(&f, &o(), &ys, &cfg()).unwrap();
        assert!((rep.mu - 4.0 / 3.0).abs() < 1e-15 && (rep.nu - 3.0).abs() < 1e-15);
        assert!(rep.ok && rep.holds_with(1.0, 1.0, 1e-9));

        let w = MapSpec::winding(3).unwrap();
        let rep = check_holder_envelope(&w, &o(), &ys, &cfg()).unwrap();
        assert!(rep.ok && rep.holds_with(1.0, 1.0, 1e-9));
    }

    #[test]
    fn conformal_exp_shell_is_near_equality() {
        let f = MapSpec::conformal_exp();
        let g = shell_grid(&f, &o(), 8, &default_t_grid(), &cfg()).unwrap();
        assert!(g.all_lower_ok, "worst margin {}", g.worst_lower_margin);
        assert!(g.max_implied_c.is_finite() && g.max_implied_c < 1.5);
    }
}
