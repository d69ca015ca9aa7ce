//! Evaluable quasiregular maps with certified dilatation data.
//!
//! Every family carries its inner and outer dilatation, degree and local
//! indices as stored constants. The planar families are written on pairs of
//! reals; `radial_stretch` works in R^2 and R^3.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::g_example::AnnulusSchedule;
use crate::local_metrics::{self, SamplingConfig};
use crate::point::{cpow, LogPoint, Point};

/// Dilatation data at a marked point together with the derived exponents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DilatationProfile {
    pub n: usize,
    pub k_inner: f64,
    pub k_outer: f64,
    pub local_index: u32,
    /// `(i / K_I)^(1/(n-1))`
    pub mu: f64,
    /// `(K_O * i)^(1/(n-1))`
    pub nu: f64,
}

impl DilatationProfile {
    pub fn new(n: usize, k_inner: f64, k_outer: f64, local_index: u32) -> Self {
        assert!(n >= 2, "dimension must be at least 2");
        assert!(k_inner >= 1.0 && k_outer >= 1.0, "dilatations are at least 1");
        assert!(local_index >= 1, "local index is at least 1");
        let e = 1.0 / (n as f64 - 1.0);
        let i = local_index as f64;
        DilatationProfile {
            n,
            k_inner,
            k_outer,
            local_index,
            mu: (i / k_inner).powf(e),
            nu: (k_outer * i).powf(e),
        }
    }

    /// `i(x, f) > K_I(f)`, equivalently `mu > 1`.
    pub fn strongly_superattracting(&self) -> bool {
        self.local_index as f64 > self.k_inner
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Degree {
    Finite(u32),
    Unbounded,
}

/// Which power law `pure_annulus_power` uses: `|f(z)| = |z|^(2K)` or `|z|^(2/K)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    Fast,
    Slow,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    Whole,
    /// `|x| < radius`, or `|x| <= radius` when `closed`.
    Ball { radius: f64, closed: bool },
    /// `|x| > radius`.
    Exterior { radius: f64 },
}

impl Domain {
    pub fn contains_radius(&self, r: f64) -> bool {
        match *self {
            Domain::Whole => r.is_finite(),
            Domain::Ball { radius, closed } => {
                if closed {
                    r <= radius
                } else {
                    r < radius
                }
            }
            Domain::Exterior { radius } => r > radius && r.is_finite(),
        }
    }

    /// Same test with the radius given as its logarithm.
    pub fn contains_log_radius(&self, log_r: f64) -> bool {
        match *self {
            Domain::Whole => log_r < f64::INFINITY,
            Domain::Ball { radius, closed } => {
                let lr = radius.ln();
                if closed {
                    log_r <= lr
                } else {
                    log_r < lr
                }
            }
            Domain::Exterior { radius } => log_r > radius.ln() && log_r < f64::INFINITY,
        }
    }

    /// Euclidean distance from `x` to the complement of the domain.
    pub fn distance_to_boundary(&self, x: &Point) -> f64 {
        let r = x.norm();
        match *self {
            Domain::Whole => f64::INFINITY,
            Domain::Ball { radius, .. } => (radius - r).max(0.0),
            Domain::Exterior { radius } => (r - radius).max(0.0),
        }
    }

    /// Whether the closed ball `B(x, r)` lies in the domain.
    pub fn contains_closed_ball(&self, x: &Point, r: f64) -> bool {
        let c = x.norm();
        match *self {
            Domain::Whole => r.is_finite(),
            Domain::Ball { radius, closed } => {
                if closed {
                    c + r <= radius
                } else {
                    c + r < radius
                }
            }
            Domain::Exterior { radius } => c - r > radius,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Family {
    Winding { k: u32 },
    Power { d: u32 },
    RadialStretch { alpha: f64 },
    StretchSquare { lambda: f64 },
    PureAnnulusPower { k: f64, branch: Branch },
    GExample(Arc<AnnulusSchedule>),
    ConformalExp,
    /// `g . f . g` with `g(x) = x / |x|^2`.
    Inverted(Arc<MapSpec>),
}

/// An evaluable map together with its certified constants.
#[derive(Clone, Debug)]
pub struct MapSpec {
    family: Family,
    name: String,
    dimension: usize,
    domain: Domain,
    profiles: Vec<(Point, DilatationProfile)>,
    infinity_profile: Option<DilatationProfile>,
    degree: Degree,
    polynomial_type: bool,
}

fn fmt_param(v: f64) -> String {
    format!("{v}")
}

impl MapSpec {
    /// Planar `(r, theta) -> (r, K theta)`.
    pub fn winding(k: u32) -> Result<Self> {
        if k < 1 {
            return Err(Error::Invalid("winding needs K >= 1".into()));
        }
        let kf = k as f64;
        let p = DilatationProfile::new(2, kf, kf, k);
        Ok(MapSpec {
            family: Family::Winding { k },
            name: format!("winding{{K={k}}}"),
            dimension: 2,
            domain: Domain::Whole,
            profiles: vec![(Point::origin(2), p)],
            infinity_profile: Some(p),
            degree: Degree::Finite(k),
            polynomial_type: true,
        })
    }

    /// Planar `z -> z^d`.
    pub fn power(d: u32) -> Result<Self> {
        if d < 1 {
            return Err(Error::Invalid("power needs d >= 1".into()));
        }
        let p = DilatationProfile::new(2, 1.0, 1.0, d);
        Ok(MapSpec {
            family: Family::Power { d },
            name: format!("power{{d={d}}}"),
            dimension: 2,
            domain: Domain::Whole,
            profiles: vec![(Point::origin(2), p)],
            infinity_profile: Some(p),
            degree: Degree::Finite(d),
            polynomial_type: true,
        })
    }

    /// `x -> x |x|^(alpha - 1)` in R^n.
    pub fn radial_stretch(alpha: f64, n: usize) -> Result<Self> {
        if !(alpha >= 1.0 && alpha.is_finite()) {
            return Err(Error::Invalid("radial_stretch needs alpha >= 1".into()));
        }
        if !(2..=crate::point::MAX_DIM).contains(&n) {
            return Err(Error::Invalid(format!("radial_stretch supports n = 2 or 3, got {n}")));
        }
        let p = DilatationProfile::new(n, alpha, alpha.powi(n as i32 - 1), 1);
        Ok(MapSpec {
            family: Family::RadialStretch { alpha },
            name: format!("radial_stretch{{alpha={},n={n}}}", fmt_param(alpha)),
            dimension: n,
            domain: Domain::Whole,
            profiles: vec![(Point::origin(n), p)],
            infinity_profile: Some(p),
            degree: Degree::Finite(1),
            polynomial_type: true,
        })
    }

    /// Planar `(x, y) -> (x + i lambda y)^2`.
    pub fn stretch_square(lambda: f64) -> Result<Self> {
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::Invalid("stretch_square needs lambda >= 1".into()));
        }
        let p = DilatationProfile::new(2, lambda, lambda, 2);
        Ok(MapSpec {
            family: Family::StretchSquare { lambda },
            name: format!("stretch_square{{lambda={}}}", fmt_param(lambda)),
            dimension: 2,
            domain: Domain::Whole,
            profiles: vec![(Point::origin(2), p)],
            infinity_profile: Some(p),
            degree: Degree::Finite(2),
            polynomial_type: true,
        })
    }

    /// Planar `z -> z^2 |z|^(2K-2)` (fast) or `z -> z^2 |z|^(2/K-2)` (slow).
    pub fn pure_annulus_power(k: f64, branch: Branch) -> Result<Self> {
        if !(k >= 1.0 && k.is_finite()) {
            return Err(Error::Invalid("pure_annulus_power needs K >= 1".into()));
        }
        let p = DilatationProfile::new(2, k, k, 2);
        let b = match branch {
            Branch::Fast => "fast",
            Branch::Slow => "slow",
        };
        Ok(MapSpec {
            family: Family::PureAnnulusPower { k, branch },
            name: format!("pure_annulus_power{{K={},branch={b}}}", fmt_param(k)),
            dimension: 2,
            domain: Domain::Whole,
            profiles: vec![(Point::origin(2), p)],
            infinity_profile: Some(p),
            degree: Degree::Finite(2),
            polynomial_type: true,
        })
    }

    /// The piecewise map on the closed unit disc assembled from a schedule.
    pub fn g_example(schedule: Arc<AnnulusSchedule>) -> Self {
        let k = schedule.k;
        MapSpec {
            name: format!("g_example{{K={},pairs={}}}", fmt_param(k), schedule.pairs()),
            family: Family::GExample(schedule),
            dimension: 2,
            domain: Domain::Ball { radius: 1.0, closed: true },
            profiles: vec![(Point::origin(2), DilatationProfile::new(2, k, k, 2))],
            infinity_profile: None,
            degree: Degree::Finite(2),
            polynomial_type: false,
        }
    }

    /// Planar `z -> e^z`; transcendental contrast case.
    pub fn conformal_exp() -> Self {
        MapSpec {
            family: Family::ConformalExp,
            name: "conformal_exp".into(),
            dimension: 2,
            domain: Domain::Whole,
            profiles: vec![(Point::origin(2), DilatationProfile::new(2, 1.0, 1.0, 1))],
            infinity_profile: None,
            degree: Degree::Unbounded,
            polynomial_type: false,
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn degree(&self) -> Degree {
        self.degree
    }

    pub fn polynomial_type(&self) -> bool {
        self.polynomial_type
    }

    pub fn profiles(&self) -> &[(Point, DilatationProfile)] {
        &self.profiles
    }

    /// Profile of the extension to infinity (`i(inf, f) = deg f`), polynomial type only.
    pub fn infinity_profile(&self) -> Option<DilatationProfile> {
        self.infinity_profile
    }

    pub fn profile_at(&self, x: &Point) -> Option<&DilatationProfile> {
        self.profiles.iter().find(|(p, _)| p == x).map(|(_, d)| d)
    }

    /// First marked point and its profile.
    pub fn marked_point(&self) -> Option<(Point, DilatationProfile)> {
        self.profiles.first().copied()
    }

    /// `h` with `f(t x) = t^h f(x)` for all `t > 0`, when the family has one.
    pub fn homogeneity(&self) -> Option<f64> {
        match &self.family {
            Family::Winding { .. } => Some(1.0),
            Family::Power { d } => Some(*d as f64),
            Family::RadialStretch { alpha } => Some(*alpha),
            Family::StretchSquare { .. } => Some(2.0),
            Family::PureAnnulusPower { k, branch } => Some(annulus_exponent(*k, *branch)),
            Family::GExample(_) | Family::ConformalExp => None,
            Family::Inverted(inner) => inner.homogeneity(),
        }
    }

    /// Modulus-radial maps: `|f(x)|` depends only on `|x|` (about the origin).
    pub fn is_modulus_radial(&self) -> bool {
        self.radial_log(1.0).is_some()
    }

    /// Radial recurrence in `u = -log|x|`: returns `-log|f(x)|`.
    pub fn radial_log(&self, u: f64) -> Option<f64> {
        match &self.family {
            Family::Winding { .. } => Some(u),
            Family::Power { d } => Some(*d as f64 * u),
            Family::RadialStretch { alpha } => Some(alpha * u),
            Family::PureAnnulusPower { k, branch } => Some(annulus_exponent(*k, *branch) * u),
            Family::GExample(s) => Some(s.step_u(u)),
            Family::Inverted(inner) => inner.radial_log(-u).map(|v| -v),
            Family::StretchSquare { .. } | Family::ConformalExp => None,
        }
    }

    /// Closed-form `r -> |f(x)|` for `|x| = r`, modulus-radial maps only.
    pub fn radial_form(&self, r: f64) -> Option<f64> {
        if r == 0.0 {
            return self.is_modulus_radial().then_some(0.0);
        }
        self.radial_log(-r.ln()).map(|u| (-u).exp())
    }

    fn check_domain(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dimension {
            return Err(Error::Invalid(format!(
                "{} expects points of dimension {}, got {}",
                self.name,
                self.dimension,
                x.dim()
            )));
        }
        let r = x.norm();
        if !self.domain.contains_radius(r) {
            return Err(Error::Domain { map: self.name.clone(), radius: r });
        }
        Ok(())
    }

    /// `f(x)`.
    pub fn evaluate(&self, x: &Point) -> Result<Point> {
        self.check_domain(x)?;
        self.eval_raw(x)
    }

    fn eval_raw(&self, x: &Point) -> Result<Point> {
        Ok(match &self.family {
            Family::Winding { k } => {
                let r = x.norm();
                if r == 0.0 {
                    return Ok(*x);
                }
                Point::polar(r, *k as f64 * x.arg())
            }
            Family::Power { d } => cpow(x, *d),
            Family::RadialStretch { alpha } => {
                let r = x.norm();
                if r == 0.0 {
                    return Ok(*x);
                }
                x.scale(r.powf(alpha - 1.0))
            }
            Family::StretchSquare { lambda } => {
                let (a, b) = (x.x(), lambda * x.y());
                Point::new2(a * a - b * b, 2.0 * a * b)
            }
            Family::PureAnnulusPower { k, branch } => {
                let r = x.norm();
                if r == 0.0 {
                    return Ok(*x);
                }
                let w = x.scale(1.0 / r);
                cpow(&w, 2).scale(r.powf(annulus_exponent(*k, *branch)))
            }
            Family::GExample(s) => {
                let r = x.norm();
                if r == 0.0 {
                    return Ok(*x);
                }
                let w = x.scale(1.0 / r);
                cpow(&w, 2).scale((-s.step_u(-r.ln())).exp())
            }
            Family::ConformalExp => {
                let m = x.x().exp();
                Point::new2(m * x.y().cos(), m * x.y().sin())
            }
            Family::Inverted(inner) => {
                if x.is_origin() {
                    return Ok(*x);
                }
                let fx = inner.eval_raw(&x.inverted())?;
                if fx.is_origin() {
                    return Err(Error::Domain { map: self.name.clone(), radius: x.norm() });
                }
                fx.inverted()
            }
        })
    }

    /// Whether [`MapSpec::evaluate_log`] is available for this map.
    pub fn supports_log(&self) -> bool {
        match &self.family {
            Family::ConformalExp => false,
            Family::Inverted(inner) => inner.supports_log(),
            _ => true,
        }
    }

    /// `f` in log-polar form, free of overflow for the homogeneous and
    /// modulus-radial families.
    pub fn evaluate_log(&self, x: &LogPoint) -> Result<LogPoint> {
        if x.dim() != self.dimension {
            return Err(Error::Invalid(format!("{}: dimension mismatch", self.name)));
        }
        if !self.domain.contains_log_radius(x.log_r) && !x.is_origin() {
            return Err(Error::Domain { map: self.name.clone(), radius: x.log_r.exp() });
        }
        self.eval_log_raw(x)
    }

    fn eval_log_raw(&self, x: &LogPoint) -> Result<LogPoint> {
        if x.is_origin() {
            return Ok(*x);
        }
        match &self.family {
            Family::GExample(s) => {
                let dir = cpow(&x.dir, 2).normalized().unwrap_or(x.dir);
                Ok(LogPoint::new(-s.step_u(-x.log_r), dir))
            }
            Family::ConformalExp => {
                let z = x.to_point();
                if !z.is_finite() {
                    return Err(Error::Unsupported(format!("{}: log evaluation overflow", self.name)));
                }
                Ok(LogPoint::new(z.x(), Point::polar(1.0, z.y())))
            }
            Family::Inverted(inner) => {
                let y = inner.eval_log_raw(&LogPoint::new(-x.log_r, x.dir))?;
                if y.log_r == f64::INFINITY {
                    return Ok(LogPoint::new(f64::NEG_INFINITY, y.dir));
                }
                Ok(LogPoint::new(-y.log_r, y.dir))
            }
            _ => {
                let h = self.homogeneity().expect("homogeneous family");
                let fo = self.eval_raw(&x.dir)?;
                let m = fo.norm();
                let dir = fo.scale(1.0 / m);
                Ok(LogPoint::new(h * x.log_r + m.ln(), dir))
            }
        }
    }

    /// `log |f(x)|`, evaluated without forming `|f(x)|` where possible.
    pub fn log_norm(&self, x: &Point) -> Result<f64> {
        self.check_domain(x)?;
        if let Family::ConformalExp = self.family {
            return Ok(x.x());
        }
        Ok(self.eval_log_raw(&LogPoint::from_point(x))?.log_r)
    }

    /// Piece boundaries of piecewise families, as radii.
    pub fn seams(&self) -> Vec<f64> {
        match &self.family {
            Family::GExample(s) => s.seam_radii(),
            _ => Vec::new(),
        }
    }

    pub(crate) fn inverted(inner: Arc<MapSpec>, domain: Domain, profiles: Vec<(Point, DilatationProfile)>) -> Self {
        let polynomial_type = false;
        MapSpec {
            name: format!("inverted({})", inner.name),
            dimension: inner.dimension,
            degree: inner.degree,
            family: Family::Inverted(inner),
            domain,
            profiles,
            infinity_profile: None,
            polynomial_type,
        }
    }
}

/// Exponent of `|z|` in `|f(z)|` for the pure annulus branches.
pub fn annulus_exponent(k: f64, branch: Branch) -> f64 {
    match branch {
        Branch::Fast => 2.0 * k,
        Branch::Slow => 2.0 / k,
    }
}

const CUTOFF_PROBES: usize = 16;
const CUTOFF_MAX_DOUBLINGS: usize = 40;

/// Smallest `t` of the form `2^j`, `j >= 0`, with `m(r, f) > 0` on sampled
/// spheres `r = t 2^i`, `i < 16`.
pub fn inversion_cutoff(map: &MapSpec) -> Result<f64> {
    let cfg = SamplingConfig::default();
    let mut t = 1.0_f64;
    'search: for _ in 0..CUTOFF_MAX_DOUBLINGS {
        for i in 0..CUTOFF_PROBES {
            let r = t * 2f64.powi(i as i32);
            let (_, log_m) = local_metrics::log_modulus(map, r, &cfg)?;
            if log_m == f64::NEG_INFINITY {
                t *= 2.0;
                continue 'search;
            }
        }
        return Ok(t);
    }
    Err(Error::Unsupported(format!("{}: no radius beyond which f is nonzero", map.name())))
}

/// `g . f . g` for the inversion `g(x) = x / |x|^2`.
///
/// For polynomial-type `f` the result lives on `B(0, 1/t)` with profile at 0
/// equal to `(K_I(f), K_O(f), deg f)`. Conjugating such a result again gives a
/// map on `|x| > t` that agrees with `f` there.
pub fn conjugate_by_inversion(map: &MapSpec) -> Result<MapSpec> {
    if map.polynomial_type() {
        let t = inversion_cutoff(map)?;
        let p = map
            .infinity_profile()
            .ok_or_else(|| Error::Unsupported(format!("{}: no profile at infinity", map.name())))?;
        let origin = Point::origin(map.dimension());
        return Ok(MapSpec::inverted(
            Arc::new(map.clone()),
            Domain::Ball { radius: 1.0 / t, closed: false },
            vec![(origin, p)],
        ));
    }
    if let (Family::Inverted(inner), Domain::Ball { radius, .. }) = (map.family(), map.domain()) {
        if inner.polynomial_type() {
            return Ok(MapSpec::inverted(
                Arc::new(map.clone()),
                Domain::Exterior { radius: 1.0 / radius },
                Vec::new(),
            ));
        }
    }
    Err(Error::Unsupported(format!(
        "{} is not of polynomial type; inversion conjugation needs f(x) -> inf",
        map.name()
    )))
}

/// Angle helper used by examples and tests.
pub fn polar_point(r: f64, theta_over_pi: f64) -> Point {
    Point::polar(r, theta_over_pi * PI)
}
