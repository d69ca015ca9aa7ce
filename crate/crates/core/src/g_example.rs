//! The oscillating-rate example: a piecewise power map on the unit disc
//! that alternates between `|z|^(2K)` and `|z|^(2/K)` on nested annuli.
//!
//! All bookkeeping is done in `u = -log|z|` and `log A_m`, `log B_m`; the
//! radii `r_m`, `s_m` collapse doubly exponentially and are stored only
//! through their `u` values.
//!
//! Annulus `m` (0-based here) is the fast piece `s_m <= |z| < r_m`, where
//! `|g(z)| = A_m |z|^(2K)`, followed by the slow piece `r_{m+1} <= |z| < s_m`,
//! where `|g(z)| = B_m |z|^(2/K)`. Inside the last `r` the fast law continues
//! with the final `A`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map_catalog::MapSpec;

/// Relative margin by which a boundary is placed beyond the last trapped iterate.
pub const BOUNDARY_MARGIN: f64 = 1e-3;

const COUNT_SIM_LIMIT: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub requested_pairs: usize,
    pub built_pairs: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSchedule {
    #[serde(rename = "K")]
    pub k: f64,
    pub start_u: f64,
    /// `-log r_m` for `m = 1..=M+1`; the first entry is 0.
    pub u_boundaries_r: Vec<f64>,
    /// `-log s_m` for `m = 1..=M`.
    pub u_boundaries_s: Vec<f64>,
    #[serde(rename = "logA")]
    pub log_a: Vec<f64>,
    #[serde(rename = "logB")]
    pub log_b: Vec<f64>,
    /// Iterates of the tracked orbit in each (fast, slow) pair.
    pub counts: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<Truncation>,
}

/// `log B_m` from continuity at `s_m`.
pub fn continuity_log_b(k: f64, log_a: f64, u_s: f64) -> f64 {
    log_a - (2.0 * k - 2.0 / k) * u_s
}

/// `log A_{m+1}` from continuity at `r_{m+1}`.
pub fn continuity_log_a_next(k: f64, log_b: f64, u_r_next: f64) -> f64 {
    log_b + (2.0 * k - 2.0 / k) * u_r_next
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Piece {
    Fast(usize),
    Slow(usize),
}

impl AnnulusSchedule {
    /// Single fast law `|g(z)| = |z|^(2K)` on the whole disc, no switching.
    pub fn pure_fast(k: f64, start_u: f64) -> Self {
        AnnulusSchedule {
            k,
            start_u,
            u_boundaries_r: vec![0.0],
            u_boundaries_s: Vec::new(),
            log_a: vec![0.0],
            log_b: Vec::new(),
            counts: Vec::new(),
            truncated: None,
        }
    }

    /// Schedule with prescribed boundaries; the constants are solved from
    /// continuity with `A_1 = 1` and the counts re-simulated from `start_u`.
    pub fn from_boundaries(k: f64, start_u: f64, u_r: &[f64], u_s: &[f64]) -> Result<Self> {
        validate_k(k)?;
        if u_r.len() != u_s.len() + 1 || u_r.first() != Some(&0.0) {
            return Err(Error::Invalid("need u_r = [0, ...] with one more entry than u_s".into()));
        }
        let mut s = AnnulusSchedule::pure_fast(k, start_u);
        for (m, &us) in u_s.iter().enumerate() {
            let ur_next = u_r[m + 1];
            if !(u_r[m] < us && us < ur_next) {
                return Err(Error::Invalid(format!("boundaries not interlaced at annulus {}", m + 1)));
            }
            let lb = continuity_log_b(k, s.log_a[m], us);
            s.u_boundaries_s.push(us);
            s.log_b.push(lb);
            s.u_boundaries_r.push(ur_next);
            s.log_a.push(continuity_log_a_next(k, lb, ur_next));
        }
        s.counts = s.simulate_counts(COUNT_SIM_LIMIT);
        Ok(s)
    }

    /// Number of (fast, slow) annulus pairs.
    pub fn pairs(&self) -> usize {
        self.u_boundaries_s.len()
    }

    /// Piece containing the circle `-log|z| = u`. Ties at `r_m` go to the
    /// smaller-radius piece; `|z| = 1` belongs to the first fast annulus.
    pub fn piece(&self, u: f64) -> Piece {
        let m_pairs = self.pairs();
        // Boundaries in increasing u: r_0, s_0, r_1, s_1, ..., r_M.
        let below = |b: f64| b < u;
        let mut lo = 0usize;
        let mut hi = 2 * m_pairs + 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            let b = if mid.is_multiple_of(2) { self.u_boundaries_r[mid / 2] } else { self.u_boundaries_s[mid / 2] };
            if below(b) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let p = lo.max(1) - 1;
        if p.is_multiple_of(2) {
            Piece::Fast(p / 2)
        } else {
            Piece::Slow(p / 2)
        }
    }

    /// One step of the radial recurrence: `-log|g(z)|` from `u = -log|z|`.
    pub fn step_u(&self, u: f64) -> f64 {
        let k = self.k;
        match self.piece(u) {
            Piece::Fast(m) => 2.0 * k * u - self.log_a[m],
            Piece::Slow(m) => (2.0 / k) * u - self.log_b[m],
        }
    }

    /// Radii of the piece boundaries that are representable as f64.
    pub fn seam_radii(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for m in 0..self.pairs() {
            for u in [self.u_boundaries_s[m], self.u_boundaries_r[m + 1]] {
                let r = (-u).exp();
                if r > 0.0 && r.is_normal() {
                    out.push(r);
                }
            }
        }
        out
    }

    /// Iterates of the tracked orbit per (fast, slow) pair, by re-simulation.
    pub fn simulate_counts(&self, limit: usize) -> Vec<(usize, usize)> {
        let mut counts = vec![(0usize, 0usize); self.pairs()];
        let mut u = self.start_u;
        for _ in 0..limit {
            if !u.is_finite() {
                break;
            }
            match self.piece(u) {
                Piece::Fast(m) if m < self.pairs() => counts[m].0 += 1,
                Piece::Slow(m) => counts[m].1 += 1,
                Piece::Fast(_) => break,
            }
            u = self.step_u(u);
        }
        counts
    }

    /// Worst relative continuity defect over both seams of every pair, in log form.
    pub fn continuity_defect(&self) -> f64 {
        let k = self.k;
        let mut worst = 0.0f64;
        for m in 0..self.pairs() {
            let us = self.u_boundaries_s[m];
            let fast = 2.0 * k * us - self.log_a[m];
            let slow = (2.0 / k) * us - self.log_b[m];
            worst = worst.max((fast - slow).abs() / fast.abs().max(1.0));
            let ur = self.u_boundaries_r[m + 1];
            let slow = (2.0 / k) * ur - self.log_b[m];
            let fast = 2.0 * k * ur - self.log_a[m + 1];
            worst = worst.max((fast - slow).abs() / fast.abs().max(1.0));
        }
        worst
    }

    /// `0 = u_{r_1} < u_{s_1} < u_{r_2} < ...`, i.e. `0 < r_{m+1} < s_m < r_m`.
    pub fn interlaced(&self) -> bool {
        (0..self.pairs()).all(|m| {
            self.u_boundaries_r[m] < self.u_boundaries_s[m] && self.u_boundaries_s[m] < self.u_boundaries_r[m + 1]
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sched: AnnulusSchedule = serde_json::from_str(s)?;
        validate_k(sched.k)?;
        let m = sched.u_boundaries_s.len();
        if sched.u_boundaries_r.len() != m + 1 || sched.log_a.len() != m + 1 || sched.log_b.len() != m {
            return Err(Error::Invalid("schedule arrays have inconsistent lengths".into()));
        }
        Ok(sched)
    }
}

fn validate_k(k: f64) -> Result<()> {
    if !(k > 1.0 && k < 2.0) {
        return Err(Error::Invalid(format!("K must lie in (1, 2), got {k}")));
    }
    Ok(())
}

/// `N_m = P_m = c m` for `m = 1..=pairs`.
pub fn linear_counts(c: usize, pairs: usize) -> Vec<(usize, usize)> {
    (1..=pairs).map(|m| (c * m, c * m)).collect()
}

/// Greedy construction: follow the orbit of `start_u`, closing each annulus
/// just past the last iterate it must contain.
///
/// Pairs whose iterates overflow f64 in `u` are dropped and recorded in
/// [`AnnulusSchedule::truncated`].
pub fn build_schedule(k: f64, counts: &[(usize, usize)], start_u: f64) -> Result<AnnulusSchedule> {
    validate_k(k)?;
    if counts.is_empty() {
        return Err(Error::Invalid("empty counts: schedule would have r = {1} and no annuli".into()));
    }
    if counts.iter().any(|&(n, p)| n == 0 || p == 0) {
        return Err(Error::Invalid("every annulus needs at least one iterate".into()));
    }
    if !(start_u > 0.0 && start_u.is_finite()) {
        return Err(Error::Invalid(format!("start_u must be positive, got {start_u}")));
    }
    let fast_exp = 2.0 * k;
    let slow_exp = 2.0 / k;
    let mut sched = AnnulusSchedule::pure_fast(k, start_u);
    let mut u = start_u;
    for (m, &(n_fast, n_slow)) in counts.iter().enumerate() {
        let log_a = sched.log_a[m];
        let overflow = |stage: &str| Truncation {
            requested_pairs: counts.len(),
            built_pairs: m,
            reason: format!("u overflowed f64 during the {stage} block of annulus {}", m + 1),
        };

        let mut v = u;
        for _ in 1..n_fast {
            v = fast_exp * v - log_a;
        }
        let u_s = v * (1.0 + BOUNDARY_MARGIN);
        let v_next = fast_exp * v - log_a;
        if !u_s.is_finite() || !v_next.is_finite() {
            sched.truncated = Some(overflow("fast"));
            break;
        }
        if v_next <= u_s {
            return Err(Error::Invalid(format!("fast block of annulus {} does not contract past s", m + 1)));
        }
        let log_b = continuity_log_b(k, log_a, u_s);

        let mut w = v_next;
        for _ in 1..n_slow {
            w = slow_exp * w - log_b;
        }
        let u_r = w * (1.0 + BOUNDARY_MARGIN);
        let w_next = slow_exp * w - log_b;
        let log_a_next = continuity_log_a_next(k, log_b, u_r);
        if !u_r.is_finite() || !w_next.is_finite() || !log_a_next.is_finite() {
            sched.truncated = Some(overflow("slow"));
            break;
        }
        if w_next <= u_r {
            return Err(Error::Invalid(format!("slow block of annulus {} does not contract past r", m + 1)));
        }

        sched.u_boundaries_s.push(u_s);
        sched.log_b.push(log_b);
        sched.u_boundaries_r.push(u_r);
        sched.log_a.push(log_a_next);
        sched.counts.push((n_fast, n_slow));
        u = w_next;
    }
    Ok(sched)
}

/// Running-average diagnostics of `v_k = log u_k` along the tracked orbit.
#[derive(Clone, Debug, Serialize)]
pub struct OscillationReport {
    pub k: f64,
    pub k_max: usize,
    /// Last index with finite `u_k`.
    pub k_reached: usize,
    pub truncated: bool,
    pub window: (usize, usize),
    pub window_min: f64,
    pub window_max: f64,
    pub target_lo: f64,
    pub target_hi: f64,
    pub dist_lo: f64,
    pub dist_hi: f64,
    /// Mean increment of `v_k` over each maximal run of iterates in one piece.
    pub block_rates: Vec<BlockRate>,
    /// `(k, v_k / k)` for `k >= 1`.
    pub averages: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockRate {
    pub fast: bool,
    pub start: usize,
    pub len: usize,
    pub rate: f64,
}

impl OscillationReport {
    pub fn within(&self, tol: f64) -> bool {
        self.dist_lo <= tol && self.dist_hi <= tol
    }
}

/// Tracks `(1/k) log u_k` for the schedule's orbit of `start_u`.
pub fn verify_oscillation(schedule: &AnnulusSchedule, k_max: usize) -> OscillationReport {
    oscillation_of(
        |u| schedule.step_u(u),
        |u| matches!(schedule.piece(u), Piece::Fast(_)),
        schedule.k,
        schedule.start_u,
        k_max,
    )
}

/// The same diagnostics for a modulus-radial map whose recurrence is a single power law.
pub fn oscillation_of_radial(map: &MapSpec, k: f64, start_u: f64, k_max: usize) -> Result<OscillationReport> {
    if !map.is_modulus_radial() {
        return Err(Error::Unsupported(format!("{} is not modulus-radial", map.name())));
    }
    let fast = map.radial_log(1.0).unwrap_or(0.0) > 2.0;
    Ok(oscillation_of(|u| map.radial_log(u).unwrap_or(f64::NAN), |_| fast, k, start_u, k_max))
}

fn oscillation_of(
    step: impl Fn(f64) -> f64,
    is_fast: impl Fn(f64) -> bool,
    k: f64,
    start_u: f64,
    k_max: usize,
) -> OscillationReport {
    let mut us = Vec::with_capacity(k_max + 1);
    let mut u = start_u;
    us.push(u);
    for _ in 0..k_max {
        let next = step(u);
        if !next.is_finite() {
            break;
        }
        u = next;
        us.push(u);
    }
    let k_reached = us.len() - 1;
    let averages: Vec<(usize, f64)> = (1..=k_reached).map(|i| (i, us[i].ln() / i as f64)).collect();

    let window = (k_reached / 2, k_reached);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(i, a) in &averages {
        if i >= window.0.max(1) && i <= window.1 {
            lo = lo.min(a);
            hi = hi.max(a);
        }
    }

    let mut block_rates = Vec::new();
    let mut start = 0usize;
    for i in 1..=us.len() {
        if i == us.len() || is_fast(us[i]) != is_fast(us[start]) {
            let len = i - start;
            if i < us.len() || len > 1 {
                let end = i.min(us.len() - 1);
                let steps = (end - start).max(1);
                block_rates.push(BlockRate {
                    fast: is_fast(us[start]),
                    start,
                    len,
                    rate: (us[end].ln() - us[start].ln()) / steps as f64,
                });
            }
            start = i;
        }
    }

    let target_lo = (2.0 / k).ln();
    let target_hi = (2.0 * k).ln();
    OscillationReport {
        k,
        k_max,
        k_reached,
        truncated: k_reached < k_max,
        window,
        window_min: lo,
        window_max: hi,
        target_lo,
        target_hi,
        dist_lo: (lo - target_lo).abs(),
        dist_hi: (hi - target_hi).abs(),
        block_rates,
        averages,
    }
}

pub fn as_map(schedule: AnnulusSchedule) -> MapSpec {
    MapSpec::g_example(Arc::new(schedule))
}
