//! Mean-radius brackets and the envelope of the rescaled maps
//! `F_r(x) = (f(x0 + r x) - f(x0)) / rho(x0, f, r)`.
//!
//! `rho` is never computed; only the bracket `l(x0, r) <= rho <= L(x0, r)` is used.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::local_metrics::{self, SamplingConfig};
use crate::map_catalog::{DilatationProfile, MapSpec};
use crate::point::Point;
use crate::report::fmt_f64;

pub const ENVELOPE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bracket {
    pub r: f64,
    pub log_l: f64,
    pub log_big_l: f64,
}

impl Bracket {
    pub fn l(&self) -> f64 {
        self.log_l.exp()
    }

    pub fn big_l(&self) -> f64 {
        self.log_big_l.exp()
    }

    /// Geometric-mean surrogate `sqrt(l L)`.
    pub fn rho_hat(&self) -> f64 {
        (0.5 * (self.log_l + self.log_big_l)).exp()
    }
}

/// `[l(x0, r), L(x0, r)]`, in log form so tiny radii stay representable.
pub fn mean_radius_bracket(map: &MapSpec, x0: &Point, r: f64, cfg: &SamplingConfig) -> Result<Bracket> {
    let (log_l, log_big_l) = if x0.is_origin() {
        if !map.domain().contains_closed_ball(x0, r) {
            return Err(Error::Domain { map: map.name().to_string(), radius: r });
        }
        local_metrics::log_extrema_at_origin(map, r.ln(), cfg)?
    } else {
        let s = local_metrics::sphere_extrema(map, x0, r, cfg)?;
        (s.l_est.ln(), s.big_l_est.ln())
    };
    Ok(Bracket { r, log_l, log_big_l })
}

/// One `(r, |x|)` cell: the interval for `|F_r(x)|` and its envelope.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RescaledSample {
    pub r: f64,
    pub modulus: f64,
    pub lo: f64,
    pub hi: f64,
    pub envelope_lo: f64,
    pub envelope_hi: f64,
    pub ok: bool,
    /// `min(log lo - log envelope_lo, log envelope_hi - log hi)`.
    pub log_margin: f64,
}

/// `log` of the interval `[l(r t) / L(r), L(r t) / l(r)]` containing `|F_r(x)|`, `|x| = t`.
pub fn log_interval(map: &MapSpec, x0: &Point, r: f64, t: f64, cfg: &SamplingConfig) -> Result<(f64, f64)> {
    let base = mean_radius_bracket(map, x0, r, cfg)?;
    let moved = mean_radius_bracket(map, x0, r * t, cfg)?;
    Ok((moved.log_l - base.log_big_l, moved.log_big_l - base.log_l))
}

/// `log` of `[t^nu / C^2, C^2 t^mu]` for `t <= 1` and `[t^mu / C^2, C^2 t^nu]` beyond.
pub fn log_envelope(p: &DilatationProfile, c: f64, t: f64) -> (f64, f64) {
    let (a, b) = if t <= 1.0 { (p.nu, p.mu) } else { (p.mu, p.nu) };
    let lc = 2.0 * c.ln();
    (a * t.ln() - lc, b * t.ln() + lc)
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeReport {
    pub profile: DilatationProfile,
    pub r0: f64,
    pub implied_c: f64,
    /// `sqrt(sup L / l)` over the radii used.
    pub bracket_slack: f64,
    pub c: f64,
    pub samples: Vec<RescaledSample>,
    pub violations: usize,
    pub worst_log_margin: f64,
    pub ok: bool,
}

impl EnvelopeReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        crate::report::write_csv(
            w,
            &["r", "|x|", "lo", "hi", "envelope_lo", "envelope_hi", "ok"],
            self.samples.iter().map(|s| {
                vec![
                    fmt_f64(s.r),
                    fmt_f64(s.modulus),
                    fmt_f64(s.lo),
                    fmt_f64(s.hi),
                    fmt_f64(s.envelope_lo),
                    fmt_f64(s.envelope_hi),
                    s.ok.to_string(),
                ]
            }),
        )
    }
}

/// `r0 2^-j` for `j = 1..=j_max`.
pub fn default_r_seq(r0: f64, j_max: i32) -> Vec<f64> {
    (1..=j_max).map(|j| r0 * 2f64.powi(-j)).collect()
}

/// `n` moduli spaced evenly in log between `1/8` and `8`.
pub fn default_moduli(n: usize) -> Vec<f64> {
    let (a, b) = (0.125f64.ln(), 8f64.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Checks every `|F_r(x)|` interval against the Holder envelope, with `C`
/// taken from the shell grid and raised to the bracket slack.
pub fn check_infinitesimal_envelope(
    map: &MapSpec,
    x0: &Point,
    r_seq: &[f64],
    moduli: &[f64],
    cfg: &SamplingConfig,
) -> Result<EnvelopeReport> {
    let profile = *map
        .profile_at(x0)
        .ok_or_else(|| Error::Contract(format!("{:?} is not a marked point of {}", x0, map.name())))?;
    let r0 = local_metrics::r0(map, x0, cfg)?;
    if let Some(&r) = r_seq.iter().find(|&&r| !(r > 0.0 && r < r0)) {
        return Err(Error::Range { r, r0 });
    }
    let grid = local_metrics::shell_grid(map, x0, 8, &local_metrics::default_t_grid(), cfg)?;
    let implied_c = grid.max_implied_c;
    let cells: Vec<(f64, f64)> = r_seq.iter().flat_map(|&r| moduli.iter().map(move |&t| (r, t))).collect();
    let logs: Vec<(f64, f64)> =
        cells.par_iter().map(|&(r, t)| log_interval(map, x0, r, t, cfg)).collect::<Result<_>>()?;
    let slack_log = r_seq
        .par_iter()
        .map(|&r| mean_radius_bracket(map, x0, r, cfg).map(|b| b.log_big_l - b.log_l))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let bracket_slack = (0.5 * slack_log).exp();
    let c = implied_c.max(bracket_slack);
    let tol = ENVELOPE_TOL.ln_1p();
    let samples: Vec<RescaledSample> = cells
        .iter()
        .zip(&logs)
        .map(|(&(r, t), &(lo, hi))| {
            let (elo, ehi) = log_envelope(&profile, c, t);
            let log_margin = (lo - elo).min(ehi - hi);
            RescaledSample {
                r,
                modulus: t,
                lo: lo.exp(),
                hi: hi.exp(),
                envelope_lo: elo.exp(),
                envelope_hi: ehi.exp(),
                ok: log_margin >= -tol,
                log_margin,
            }
        })
        .collect();
    let violations = samples.iter().filter(|s| !s.ok).count();
    let worst_log_margin = samples.iter().map(|s| s.log_margin).fold(f64::INFINITY, f64::min);
    Ok(EnvelopeReport {
        profile,
        r0,
        implied_c,
        bracket_slack,
        c,
        samples,
        violations,
        worst_log_margin,
        ok: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_catalog::Branch;

    fn o() -> Point {
        Point::origin(2)
    }

    #[test]
    fn bracket_examples() {
        let cfg = SamplingConfig::default();
        let b = mean_radius_bracket(&MapSpec::power(2).unwrap(), &o(), 0.3, &cfg).unwrap();
        assert!((b.l() - 0.09).abs() < 1e-15 && (b.big_l() - 0.09).abs() < 1e-15);
        let b = mean_radius_bracket(&MapSpec::stretch_square(1.5).unwrap(), &o(), 0.1, &cfg).unwrap();
        assert!((b.l() - 0.01).abs() < 1e-12 && (b.big_l() - 0.0225).abs() < 1e-12);
        assert!((b.rho_hat() - 0.015).abs() < 1e-12);
        assert!(b.l() <= b.rho_hat() && b.rho_hat() <= b.big_l());
        let b = mean_radius_bracket(&MapSpec::winding(3).unwrap(), &o(), 0.2, &cfg).unwrap();
        assert!((b.l() - 0.2).abs() < 1e-15 && (b.big_l() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn power_two_envelope_is_tight() {
        let f = MapSpec::power(2).unwrap();
        let cfg = SamplingConfig::default();
        let r0 = local_metrics::r0(&f, &o(), &cfg).unwrap();
        let rep = check_infinitesimal_envelope(&f, &o(), &default_r_seq(r0, 10), &default_moduli(64), &cfg).unwrap();
        assert!(rep.ok);
        assert!((rep.c - 1.0).abs() < 1e-9);
        for s in &rep.samples {
            let t2 = s.modulus * s.modulus;
            assert!((s.lo / t2 - 1.0).abs() < 1e-9 && (s.hi / t2 - 1.0).abs() < 1e-9);
            assert!(s.log_margin.abs() < 1e-9);
        }
    }

    #[test]
    fn fast_annulus_envelope_is_tight_below_one() {
        let f = MapSpec::pure_annulus_power(1.5, Branch::Fast).unwrap();
        let cfg = SamplingConfig::default();
        let rep = check_infinitesimal_envelope(&f, &o(), &[0.05, 0.01], &[0.2, 0.5, 2.0], &cfg).unwrap();
        assert!(rep.ok);
        for s in rep.samples.iter().filter(|s| s.modulus < 1.0) {
            // |F_r(x)| = |x|^3 = envelope_lo
            assert!((s.lo / s.modulus.powi(3) - 1.0).abs() < 1e-12);
            assert!((s.lo / s.envelope_lo - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn stretch_square_envelope_with_c_at_most_lambda() {
        let f = MapSpec::stretch_square(1.5).unwrap();
        let cfg = SamplingConfig::default();
        let rep = check_infinitesimal_envelope(&f, &o(), &[0.05, 0.0125], &default_moduli(16), &cfg).unwrap();
        assert!(rep.ok, "{}", rep.worst_log_margin);
        assert!(rep.c <= 1.5 * (1.0 + 1e-9));
        for s in &rep.samples {
            let t2 = s.modulus * s.modulus;
            assert!((s.lo * 2.25 / t2 - 1.0).abs() < 1e-9 && (s.hi / (2.25 * t2) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn scale_consistency_beyond_unit_modulus() {
        let f = MapSpec::stretch_square(1.25).unwrap();
        let cfg = SamplingConfig::default();
        for (r, t) in [(0.01, 3.0), (0.002, 8.0), (0.03, 1.5)] {
            let (lo, hi) = log_interval(&f, &o(), r, t, &cfg).unwrap();
            let (lo2, hi2) = log_interval(&f, &o(), r * t, 1.0 / t, &cfg).unwrap();
            assert!((lo + hi2).abs() < 1e-9 && (hi + lo2).abs() < 1e-9);
        }
    }

    #[test]
    fn radius_beyond_r0_is_rejected() {
        let f = MapSpec::power(2).unwrap();
        let r = check_infinitesimal_envelope(&f, &o(), &[10.0], &[0.5], &SamplingConfig::default());
        assert!(matches!(r, Err(Error::Range { .. })));
    }
}
