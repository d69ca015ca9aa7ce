//! Maximum and minimum modulus of polynomial-type maps, their iterates, and
//! the escaping and fast escaping sets.
//!
//! Iterated moduli are carried as `log M`, `log m`. A table of `log M` and
//! `log m` against `log r` is interpolated with a monotone cubic, so `M^k`
//! never has to be formed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{self, AlphaSummary, OrbitParams, RateComparison};
use crate::error::{Error, Result};
use crate::local_metrics::{self, SamplingConfig};
use crate::map_catalog::{self, Degree, MapSpec};
use crate::point::{LogPoint, Point};
use crate::report::fmt_f64;

/// Largest relative tolerance accepted between the two modulus routes.
pub const ROUTE_TOL: f64 = 1e-6;
const SEARCH_MARGIN: f64 = 1.1;
const ESCAPE_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Modulus {
    pub r: f64,
    pub log_big_m: f64,
    pub log_small_m: f64,
    /// The same pair from `M(r) = 1 / l(0, g f g, 1/r)`, `m(r) = 1 / L(0, g f g, 1/r)`.
    pub via_conjugate: Option<(f64, f64)>,
    pub transcendental: bool,
}

impl Modulus {
    pub fn big_m(&self) -> f64 {
        self.log_big_m.exp()
    }

    pub fn small_m(&self) -> f64 {
        self.log_small_m.exp()
    }

    pub fn routes_agree(&self, tol: f64) -> bool {
        self.via_conjugate
            .is_none_or(|(a, b)| ((a - self.log_big_m).exp() - 1.0).abs() <= tol && ((b - self.log_small_m).exp() - 1.0).abs() <= tol)
    }
}

/// `(log M(r), log m(r))` of `f` read off the conjugate at radius `1/r`.
pub fn log_modulus_via_conjugate(conj: &MapSpec, log_r: f64, cfg: &SamplingConfig) -> Result<(f64, f64)> {
    let (log_l, log_big_l) = local_metrics::log_extrema_at_origin(conj, -log_r, cfg)?;
    Ok((-log_l, -log_big_l))
}

/// `M(r, f)` and `m(r, f)`. Polynomial-type maps are also evaluated through
/// the inversion conjugate when `r` is beyond its cutoff.
pub fn modulus(map: &MapSpec, r: f64, cfg: &SamplingConfig) -> Result<Modulus> {
    let (log_big_m, log_small_m) = local_metrics::log_modulus(map, r, cfg)?;
    let mut via_conjugate = None;
    if map.polynomial_type() {
        let conj = map_catalog::conjugate_by_inversion(map)?;
        if conj.domain().contains_radius(1.0 / r) {
            via_conjugate = Some(log_modulus_via_conjugate(&conj, r.ln(), cfg)?);
        }
    }
    Ok(Modulus { r, log_big_m, log_small_m, via_conjugate, transcendental: !map.polynomial_type() })
}

/// Largest `|M(r) l(0, g f g, 1/r) - 1|` and `|m(r) L(0, g f g, 1/r) - 1|` over the grid.
pub fn conjugation_identity_defect(map: &MapSpec, r_grid: &[f64], cfg: &SamplingConfig) -> Result<f64> {
    let conj = map_catalog::conjugate_by_inversion(map)?;
    let defects: Vec<f64> = r_grid
        .par_iter()
        .map(|&r| {
            let (lm, ls) = local_metrics::log_modulus(map, r, cfg)?;
            let (log_l, log_big_l) = local_metrics::log_extrema_at_origin(&conj, -r.ln(), cfg)?;
            Ok(((lm + log_l).exp() - 1.0).abs().max(((ls + log_big_l).exp() - 1.0).abs()))
        })
        .collect::<Result<_>>()?;
    Ok(defects.into_iter().fold(0.0, f64::max))
}

/// Monotone piecewise-cubic Hermite interpolant with linear extension.
#[derive(Clone, Debug)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("interpolation nodes must be increasing, at least two".into()));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = vec![0.0; n];
        ds[0] = delta[0];
        ds[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (delta[i - 1], delta[i]);
            if a * b <= 0.0 {
                continue;
            }
            if a == b {
                ds[i] = a;
                continue;
            }
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            ds[i] = (w1 + w2) / (w1 / a + w2 / b);
        }
        Ok(Pchip { xs, ys, ds })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.ds[0] * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.ds[n - 1] * (x - self.xs[n - 1]);
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.ds[i] + h01 * self.ys[i + 1] + h11 * h * self.ds[i + 1]
    }
}

/// `log M` and `log m` tabulated against `log r` above the inversion cutoff.
#[derive(Clone, Debug)]
pub struct ModulusTable {
    pub map_name: String,
    pub cutoff: f64,
    pub log_r: Vec<f64>,
    pub log_big_m: Vec<f64>,
    pub log_small_m: Vec<f64>,
    big: Pchip,
    small: Pchip,
}

impl ModulusTable {
    /// Table on `n` points with `log r` evenly spaced in `[log t, log t + span]`.
    pub fn build(map: &MapSpec, span: f64, n: usize, cfg: &SamplingConfig) -> Result<Self> {
        if !map.polynomial_type() {
            return Err(Error::Unsupported(format!("{} is not of polynomial type", map.name())));
        }
        let cutoff = map_catalog::inversion_cutoff(map)?;
        let lo = cutoff.ln();
        let log_r: Vec<f64> = (0..n).map(|i| lo + span * i as f64 / (n - 1) as f64).collect();
        let rows: Vec<(f64, f64)> =
            log_r.par_iter().map(|&s| local_metrics::log_modulus_log(map, s, cfg)).collect::<Result<_>>()?;
        let log_big_m: Vec<f64> = rows.iter().map(|p| p.0).collect();
        let log_small_m: Vec<f64> = rows.iter().map(|p| p.1).collect();
        Ok(ModulusTable {
            map_name: map.name().to_string(),
            cutoff,
            big: Pchip::new(log_r.clone(), log_big_m.clone())?,
            small: Pchip::new(log_r.clone(), log_small_m.clone())?,
            log_r,
            log_big_m,
            log_small_m,
        })
    }

    pub fn log_big_m_at(&self, log_r: f64) -> f64 {
        self.big.eval(log_r)
    }

    pub fn log_small_m_at(&self, log_r: f64) -> f64 {
        self.small.eval(log_r)
    }

    /// `log M^k(r)` for `k = 0..=k_max`.
    pub fn iterated_big(&self, log_r: f64, k_max: usize) -> Vec<f64> {
        iterate_log(|s| self.log_big_m_at(s), log_r, k_max)
    }

    /// `log m^k(r)` for `k = 0..=k_max`.
    pub fn iterated_small(&self, log_r: f64, k_max: usize) -> Vec<f64> {
        iterate_log(|s| self.log_small_m_at(s), log_r, k_max)
    }

    /// Largest relative error of the interpolant against direct evaluation at
    /// `count` seeded points inside the table.
    pub fn cross_check(&self, map: &MapSpec, count: usize, seed: u64, cfg: &SamplingConfig) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (self.log_r[0], *self.log_r.last().unwrap());
        let mut worst = 0.0f64;
        for _ in 0..count {
            let s = rng.gen_range(a..b);
            let (lm, ls) = local_metrics::log_modulus_log(map, s, cfg)?;
            worst = worst
                .max(((self.log_big_m_at(s) - lm).exp() - 1.0).abs())
                .max(((self.log_small_m_at(s) - ls).exp() - 1.0).abs());
        }
        Ok(worst)
    }

    /// CSV rows `(r, M, m)`.
    pub fn rows(&self) -> Vec<Vec<String>> {
        (0..self.log_r.len())
            .map(|i| vec![fmt_f64(self.log_r[i].exp()), fmt_f64(self.log_big_m[i].exp()), fmt_f64(self.log_small_m[i].exp())])
            .collect()
    }

    /// CSV rows `(k, logM_k, logm_k)` starting from `M^0 = r_big`, `m^0 = r_small`.
    pub fn iterated_rows(&self, r_big: f64, r_small: f64, k_max: usize) -> Vec<Vec<String>> {
        let b = self.iterated_big(r_big.ln(), k_max);
        let s = self.iterated_small(r_small.ln(), k_max);
        (0..=k_max).map(|k| vec![k.to_string(), fmt_f64(b[k]), fmt_f64(s[k])]).collect()
    }
}

fn iterate_log(step: impl Fn(f64) -> f64, start: f64, k_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max + 1);
    let mut s = start;
    out.push(s);
    for _ in 0..k_max {
        s = step(s);
        out.push(s);
    }
    out
}

/// `M^k(r)` by plain composition of the sampled modulus, for comparison with
/// the log-table route where the values are representable.
pub fn iterated_modulus_direct(map: &MapSpec, r: f64, k: usize, cfg: &SamplingConfig) -> Result<Vec<f64>> {
    let mut out = vec![r];
    let mut v = r;
    for _ in 0..k {
        v = modulus(map, v, cfg)?.big_m();
        out.push(v);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct MRatioReport {
    pub s: f64,
    /// `(r, log(M(S r) / M(r)))`
    pub log_ratios: Vec<(f64, f64)>,
    pub sup_ratio: f64,
    pub last_decade_max: f64,
    pub earlier_max: f64,
    pub transcendental: bool,
    pub ok: bool,
}

/// `sup M(S r) / M(r)` over a grid spanning at least four decades.
///
/// For polynomial-type maps the ratio must show no upward trend in the last
/// decade. For transcendental maps (contrast mode) it must exceed `1e6`.
pub fn check_m_ratio_bounded(map: &MapSpec, s: f64, r_grid: &[f64], cfg: &SamplingConfig) -> Result<MRatioReport> {
    if !(s > 1.0) {
        return Err(Error::Invalid(format!("S must exceed 1, got {s}")));
    }
    let (lo, hi) = r_grid.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    if r_grid.is_empty() || !(hi / lo >= 1e4 * (1.0 - 1e-12)) {
        return Err(Error::Invalid("r grid must span at least four decades".into()));
    }
    let log_ratios: Vec<(f64, f64)> = r_grid
        .par_iter()
        .map(|&r| {
            let a = local_metrics::log_modulus(map, s * r, cfg)?.0;
            let b = local_metrics::log_modulus(map, r, cfg)?.0;
            Ok((r, a - b))
        })
        .collect::<Result<_>>()?;
    let last = hi / 10.0;
    let fold = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);
    let sup_ratio = fold(&mut log_ratios.iter().map(|p| p.1)).exp();
    let last_decade_max = fold(&mut log_ratios.iter().filter(|p| p.0 > last).map(|p| p.1)).exp();
    let earlier_max = fold(&mut log_ratios.iter().filter(|p| p.0 <= last).map(|p| p.1)).exp();
    let transcendental = !map.polynomial_type();
    let ok = if transcendental { sup_ratio > 1e6 } else { last_decade_max <= earlier_max * (1.0 + 1e-3) };
    Ok(MRatioReport { s, log_ratios, sup_ratio, last_decade_max, earlier_max, transcendental, ok })
}

/// `deg f > K_I(f)` for polynomial-type maps.
pub fn check_degree_gate(map: &MapSpec) -> Result<()> {
    let p = map
        .infinity_profile()
        .ok_or_else(|| Error::Inapplicable(format!("{} has no profile at infinity", map.name())))?;
    match map.degree() {
        Degree::Finite(d) if d as f64 > p.k_inner => Ok(()),
        _ => Err(Error::Inapplicable(format!(
            "{}: degree {:?} does not exceed K_I = {}",
            map.name(),
            map.degree(),
            p.k_inner
        ))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MinModulusRow {
    pub s: f64,
    pub r: f64,
    pub k: usize,
    /// `log S + log M^k(r)`
    pub lhs: f64,
    /// `log m^k(S r)`
    pub rhs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinModulusReport {
    pub s0: f64,
    pub r_min: f64,
    pub rows: Vec<MinModulusRow>,
    pub violations: usize,
    pub worst_log_margin: f64,
    pub table_cross_check: f64,
    pub ok: bool,
}

const TABLE_SPAN: f64 = 60.0;
const TABLE_POINTS: usize = 241;
const PROBE_DOUBLINGS: i32 = 30;

/// Smallest `(S0, R)` on search grids with `m(S r) >= 1.1 S M(r)` for every
/// probe radius `r >= R`.
pub fn search_s0_r(table: &ModulusTable) -> Option<(f64, f64)> {
    let probes: Vec<f64> = (0..=PROBE_DOUBLINGS).map(|i| table.cutoff.ln() + i as f64 * std::f64::consts::LN_2).collect();
    let margin = SEARCH_MARGIN.ln();
    (0..700).map(|j| 1.01f64.powi(j)).skip(1).find_map(|s| {
        let holds: Vec<bool> = probes
            .iter()
            .map(|&lr| table.log_small_m_at(lr + s.ln()) - s.ln() - table.log_big_m_at(lr) >= margin)
            .collect();
        let tail = holds.iter().rposition(|&h| !h).map_or(0, |p| p + 1);
        (tail < probes.len() - 1).then(|| (s, probes[tail].exp()))
    })
}

/// `S M^k(r) < m^k(S r)` for `S` in the grid, `k <= k_max`, in log form.
pub fn check_min_modulus_growth(
    map: &MapSpec,
    s_grid: &[f64],
    r: f64,
    k_max: usize,
    cfg: &SamplingConfig,
) -> Result<MinModulusReport> {
    check_degree_gate(map)?;
    let table = ModulusTable::build(map, TABLE_SPAN, TABLE_POINTS, cfg)?;
    let table_cross_check = table.cross_check(map, 5, cfg.seed, cfg)?;
    let (s0, r_min) =
        search_s0_r(&table).ok_or_else(|| Error::Inapplicable(format!("{}: no S0 found on the search grid", map.name())))?;
    if let Some(&s) = s_grid.iter().find(|&&s| !(s > s0)) {
        return Err(Error::Contract(format!("S = {s} is not above S0 = {s0}")));
    }
    if !(r >= r_min) {
        return Err(Error::Contract(format!("r = {r} is below R = {r_min}")));
    }
    let big = table.iterated_big(r.ln(), k_max);
    let mut rows = Vec::new();
    for &s in s_grid {
        let small = table.iterated_small((s * r).ln(), k_max);
        for k in 1..=k_max {
            rows.push(MinModulusRow { s, r, k, lhs: s.ln() + big[k], rhs: small[k] });
        }
    }
    let violations = rows.iter().filter(|w| !(w.lhs < w.rhs)).count();
    let worst_log_margin = rows.iter().map(|w| w.rhs - w.lhs).fold(f64::INFINITY, f64::min);
    Ok(MinModulusReport {
        s0,
        r_min,
        rows,
        violations,
        worst_log_margin,
        table_cross_check,
        ok: violations == 0 && table_cross_check <= ROUTE_TOL,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EscapeVerdict {
    pub x: Vec<f64>,
    pub in_i: bool,
    pub in_a: bool,
    pub l_witness: Option<usize>,
    /// `in_i != in_a`: a finite-horizon artefact, not a counterexample.
    pub horizon_artifact: bool,
}

/// `log|f^k(x)|` for `k = 0..=k_max` (`+inf` once it overflows).
pub fn log_orbit(map: &MapSpec, x: &Point, k_max: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(k_max + 1);
    let mut cur = LogPoint::from_point(x);
    out.push(cur.log_r);
    for _ in 0..k_max {
        if cur.log_r.is_infinite() {
            out.push(cur.log_r);
            continue;
        }
        cur = map.evaluate_log(&cur)?;
        out.push(cur.log_r);
    }
    Ok(out)
}

/// `log M^k(R)` for the escape tests, composed from the sampled modulus.
pub fn iterated_log_big_m(map: &MapSpec, big_r: f64, k_max: usize, cfg: &SamplingConfig) -> Result<Vec<f64>> {
    let mut out = vec![big_r.ln()];
    let mut s = big_r.ln();
    for _ in 0..k_max {
        s = if s.is_finite() { local_metrics::log_modulus_log(map, s, cfg)?.0 } else { s };
        out.push(s);
    }
    Ok(out)
}

/// `M(R) >= 2R` and `M^k(R)` increasing over three iterates.
pub fn check_escape_radius(map: &MapSpec, big_r: f64, cfg: &SamplingConfig) -> Result<Vec<f64>> {
    let m = iterated_log_big_m(map, big_r, 3, cfg)?;
    if !(m[1] >= (2.0 * big_r).ln()) || m.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config(format!("R = {big_r} is too small: M^k(R) does not grow ({:?})", m)));
    }
    Ok(m)
}

/// Escape and fast-escape verdict from `log|f^k(x)|` and `log M^k(R)`.
pub fn verdict_from_logs(x: &Point, orbit: &[f64], log_mk: &[f64], big_r: f64) -> EscapeVerdict {
    let k_max = orbit.len() - 1;
    let thresh = (ESCAPE_FACTOR * big_r).ln();
    // escapes: beyond 10 R from some k on, through the horizon
    let in_i = orbit.last().is_some_and(|&s| s > thresh)
        && orbit.iter().rposition(|&s| !(s > thresh)).is_none_or(|p| p < k_max);
    let l_witness = if in_i {
        // L is capped at half the horizon so the test covers k <= k_max / 2
        (0..=k_max / 2).find(|&l| {
            (0..=k_max - l).all(|k| {
                let (a, b) = (orbit[k + l], log_mk[k]);
                b == f64::INFINITY || a > b
            })
        })
    } else {
        None
    };
    let in_a = l_witness.is_some();
    EscapeVerdict { x: x.coords().to_vec(), in_i, in_a, l_witness, horizon_artifact: in_i != in_a }
}

pub fn escape_verdict(map: &MapSpec, x: &Point, big_r: f64, k_max: usize, cfg: &SamplingConfig) -> Result<EscapeVerdict> {
    check_escape_radius(map, big_r, cfg)?;
    let log_mk = iterated_log_big_m(map, big_r, k_max, cfg)?;
    let orbit = log_orbit(map, x, k_max)?;
    Ok(verdict_from_logs(x, &orbit, &log_mk, big_r))
}

/// Verdicts for many starts, sharing one `M^k(R)` sequence.
pub fn escape_verdicts(map: &MapSpec, xs: &[Point], big_r: f64, k_max: usize, cfg: &SamplingConfig) -> Result<Vec<EscapeVerdict>> {
    check_escape_radius(map, big_r, cfg)?;
    let log_mk = iterated_log_big_m(map, big_r, k_max, cfg)?;
    xs.par_iter()
        .map(|x| Ok(verdict_from_logs(x, &log_orbit(map, x, k_max)?, &log_mk, big_r)))
        .collect()
}

/// Orbits of the inversion conjugate started at `g(f^p(x))`, reported as
/// `u_k = log|f^(k+p)(x)|`.
#[derive(Clone, Debug, Serialize)]
pub struct ConjugateOrbits {
    pub shift: usize,
    pub cutoff: f64,
    pub us: Vec<Vec<f64>>,
}

/// Common forward shift `p`: from `p` on every orbit stays beyond the cutoff.
pub fn conjugate_orbits(map: &MapSpec, xs: &[Point], k_max: usize) -> Result<ConjugateOrbits> {
    let conj = map_catalog::conjugate_by_inversion(map)?;
    let cutoff = map_catalog::inversion_cutoff(map)?;
    let horizon = 2 * k_max;
    let mut starts = Vec::new();
    let mut shift = 0;
    for x in xs {
        let s = log_orbit(map, x, horizon)?;
        if !(s[horizon] > cutoff.ln()) {
            return Err(Error::Classification(format!("{:?} does not escape within {} iterates", x, horizon)));
        }
        let p = s.iter().rposition(|&v| !(v > cutoff.ln())).map_or(0, |q| q + 1);
        shift = shift.max(p);
        starts.push(*x);
    }
    if shift > k_max {
        return Err(Error::Classification(format!("orbits reach the cutoff only after {shift} iterates")));
    }
    let us = starts
        .iter()
        .map(|x| {
            let mut cur = LogPoint::from_point(x);
            for _ in 0..shift {
                cur = map.evaluate_log(&cur)?;
            }
            let w = LogPoint::new(-cur.log_r, cur.dir);
            let t = dynamics::iterate_orbit_log(&conj, &w, &OrbitParams::unbounded(horizon))?;
            if t.classification == dynamics::Classification::EscapedDomain {
                return Err(Error::Classification(format!("conjugate orbit of {:?} left the domain", x)));
            }
            Ok(t.finite_u().to_vec())
        })
        .collect::<Result<_>>()?;
    Ok(ConjugateOrbits { shift, cutoff, us })
}

/// Overtaking lag for two escaping points.
pub fn escape_rate_compare(map: &MapSpec, x: &Point, y: &Point, k_max: usize) -> Result<(RateComparison, usize)> {
    let c = conjugate_orbits(map, &[*x, *y], k_max)?;
    Ok((dynamics::rate_comparison_from_u(x, y, &c.us[0], &c.us[1], k_max), c.shift))
}

/// Uniform log-ratio bound on a finite set of escaping points.
pub fn escape_alpha(map: &MapSpec, points: &[Point], k_max: usize) -> Result<(AlphaSummary, usize)> {
    let c = conjugate_orbits(map, points, k_max)?;
    Ok((dynamics::alpha_from_u(&c.us, k_max)?, c.shift))
}

#[cfg(test)]
mod tests {
    use super::*;
    fn cfg() -> SamplingConfig {
        SamplingConfig::default()
    }

    fn decades(lo: f64, n: usize, per: usize) -> Vec<f64> {
        (0..=n * per).map(|i| lo * 10f64.powf(i as f64 / per as f64)).collect()
    }

    #[test]
    fn modulus_examples() {
        let m = modulus(&MapSpec::power(2).unwrap(), 3.0, &cfg()).unwrap();
        assert!((m.big_m() - 9.0).abs() < 1e-12 && (m.small_m() - 9.0).abs() < 1e-12);
        assert!(m.routes_agree(1e-12));
        let m = modulus(&MapSpec::winding(3).unwrap(), 5.0, &cfg()).unwrap();
        assert!((m.big_m() - 5.0).abs() < 1e-12 && (m.small_m() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn stretch_square_modulus_against_dense_scan() {
        let f = MapSpec::stretch_square(1.5).unwrap();
        let m = modulus(&f, 2.0, &cfg()).unwrap();
        let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
        for i in 0..200_000 {
            let z = Point::polar(2.0, std::f64::consts::TAU * i as f64 / 200_000.0);
            let v = f.evaluate(&z).unwrap().norm();
            hi = hi.max(v);
            lo = lo.min(v);
        }
        assert!((m.big_m() - hi).abs() < 1e-9 * hi && (m.big_m() - 9.0).abs() < 1e-9);
        assert!((m.small_m() - lo).abs() < 1e-9 * lo && (m.small_m() - 4.0).abs() < 1e-9);
        assert!(m.routes_agree(1e-9));
    }

    #[test]
    fn exp_modulus_is_flagged() {
        let m = modulus(&MapSpec::conformal_exp(), 2.0, &cfg()).unwrap();
        assert!(m.transcendental && m.via_conjugate.is_none());
        assert!((m.log_big_m - 2.0).abs() < 1e-12);
    }

    #[test]
    fn conjugation_identities_across_four_decades() {
        let grid = decades(2.0, 4, 4);
        for f in [MapSpec::power(2).unwrap(), MapSpec::power(3).unwrap(), MapSpec::stretch_square(1.5).unwrap()] {
            assert!(conjugation_identity_defect(&f, &grid, &cfg()).unwrap() <= 1e-6, "{}", f.name());
        }
    }

    #[test]
    fn pchip_reproduces_lines_and_stays_monotone() {
        let p = Pchip::new(vec![0.0, 1.0, 2.5, 4.0], vec![1.0, 3.0, 6.0, 9.0]).unwrap();
        for x in [-2.0, 0.3, 1.7, 3.9, 10.0] {
            assert!((p.eval(x) - (1.0 + 2.0 * x)).abs() < 1e-12);
        }
        let q = Pchip::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let vals: Vec<f64> = (0..=300).map(|i| q.eval(i as f64 / 100.0)).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        assert!(Pchip::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn m_ratio_examples() {
        let grid = decades(1.0, 4, 8);
        for f in [MapSpec::power(2).unwrap(), MapSpec::stretch_square(1.5).unwrap()] {
            let rep = check_m_ratio_bounded(&f, 2.0, &grid, &cfg()).unwrap();
            assert!(rep.ok);
            for (_, lr) in &rep.log_ratios {
                assert!((lr.exp() - 4.0).abs() < 1e-6);
            }
        }
        let rep = check_m_ratio_bounded(&MapSpec::conformal_exp(), 2.0, &decades(0.01, 4, 8), &cfg()).unwrap();
        assert!(rep.transcendental && rep.ok && rep.sup_ratio > 1e6);
        assert!(check_m_ratio_bounded(&MapSpec::power(2).unwrap(), 2.0, &[1.0, 10.0], &cfg()).is_err());
    }

    #[test]
    fn iterated_table_matches_direct_composition() {
        let f = MapSpec::stretch_square(1.5).unwrap();
        let t = ModulusTable::build(&f, TABLE_SPAN, TABLE_POINTS, &cfg()).unwrap();
        let direct = iterated_modulus_direct(&f, 1.5, 5, &cfg()).unwrap();
        let logs = t.iterated_big(1.5f64.ln(), 5);
        for k in 0..=5 {
            assert!((logs[k].exp() / direct[k] - 1.0).abs() < 1e-9, "k={k}");
        }
        assert!(t.cross_check(&f, 5, 7, &cfg()).unwrap() < 1e-9);
        // m nondecreasing above the cutoff
        assert!(t.log_small_m.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn min_modulus_examples() {
        let f = MapSpec::power(2).unwrap();
        let rep = check_min_modulus_growth(&f, &[2.0], 2.0, 2, &cfg()).unwrap();
        let row = rep.rows.iter().find(|w| w.k == 2).unwrap();
        assert!((row.rhs.exp() - 256.0).abs() < 1e-9 && (row.lhs.exp() - 32.0).abs() < 1e-9);
        assert!(rep.ok);

        let g = MapSpec::stretch_square(1.5).unwrap();
        let rep = check_min_modulus_growth(&g, &[4.0], 4.0, 10, &cfg()).unwrap();
        assert!(rep.ok && rep.s0 > 2.25 && rep.s0 < 2.25 * 1.1 * 1.02, "{}", rep.s0);

        let w = MapSpec::winding(2).unwrap();
        assert!(matches!(check_min_modulus_growth(&w, &[2.0], 2.0, 2, &cfg()), Err(Error::Inapplicable(_))));
    }

    #[test]
    fn escape_verdict_examples() {
        let f = MapSpec::power(2).unwrap();
        let v = escape_verdict(&f, &Point::new2(2.0, 0.0), 2.0, 40, &cfg()).unwrap();
        // |f^k(2)| = M^k(2): the strict inequality needs one extra iterate
        assert!(v.in_i && v.in_a);
        assert_eq!(v.l_witness, Some(1));
        let v = escape_verdict(&f, &Point::new2(0.5, 0.0), 2.0, 40, &cfg()).unwrap();
        assert!(!v.in_i && !v.in_a);

        let g = MapSpec::stretch_square(1.5).unwrap();
        let v = escape_verdict(&g, &Point::new2(3.0, 0.0), 1.0, 60, &cfg()).unwrap();
        assert!(v.in_i && v.in_a && v.l_witness.unwrap() <= 3);
        assert!(matches!(escape_verdict(&g, &Point::new2(3.0, 0.0), 0.5, 10, &cfg()), Err(Error::Config(_))));
    }

    #[test]
    fn escape_rate_examples() {
        let f = MapSpec::power(2).unwrap();
        let (c, _) = escape_rate_compare(&f, &Point::new2(2.0, 0.0), &Point::new2(4.0, 0.0), 30).unwrap();
        assert_eq!(c.n_found, Some(0));
        let (a, _) = escape_alpha(&f, &[Point::new2(2.0, 0.0), Point::new2(4.0, 0.0)], 30).unwrap();
        for r in &a.pair_ratios[0].2 {
            assert!((r - 0.5).abs() < 1e-12);
        }
        assert!((a.alpha_est - 2.0).abs() < 1e-12);

        let g = MapSpec::stretch_square(1.5).unwrap();
        let x = Point::new2(2.0, 0.0);
        assert_eq!(escape_rate_compare(&g, &x, &x, 30).unwrap().0.n_found, Some(1));
        let (a, _) = escape_alpha(&g, &[x, Point::new2(3.0, 0.0)], 40).unwrap();
        assert!(a.alpha_est.is_finite() && (a.alpha_at_k_max / a.alpha_est - 1.0).abs() < 0.01);
        let (b, _) = escape_alpha(&g, &[Point::new2(3.0, 0.0), x], 40).unwrap();
        assert_eq!(a.alpha_est, b.alpha_est);
    }

    #[test]
    fn non_escaping_points_are_rejected() {
        let f = MapSpec::power(2).unwrap();
        let r = escape_rate_compare(&f, &Point::new2(0.5, 0.0), &Point::new2(2.0, 0.0), 10);
        assert!(matches!(r, Err(Error::Classification(_))));
        assert!(escape_rate_compare(&MapSpec::conformal_exp(), &Point::new2(2.0, 0.0), &Point::new2(3.0, 0.0), 10).is_err());
    }
}
