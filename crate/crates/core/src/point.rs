//! Points of R^n (n = 2 or 3) and their log-polar form.

use std::fmt;

/// Largest dimension supported by the evaluators.
pub const MAX_DIM: usize = 3;

/// A point in R^n stored inline, `n <= MAX_DIM`.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    c: [f64; MAX_DIM],
    dim: usize,
}

impl Point {
    pub fn new2(x: f64, y: f64) -> Self {
        Point { c: [x, y, 0.0], dim: 2 }
    }

    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        Point { c: [x, y, z], dim: 3 }
    }

    /// Planar point from polar coordinates.
    pub fn polar(r: f64, theta: f64) -> Self {
        Point::new2(r * theta.cos(), r * theta.sin())
    }

    pub fn origin(dim: usize) -> Self {
        assert!((2..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        Point { c: [0.0; MAX_DIM], dim }
    }

    /// `r * e_1` in dimension `dim`.
    pub fn on_axis(dim: usize, r: f64) -> Self {
        let mut p = Point::origin(dim);
        p.c[0] = r;
        p
    }

    pub fn from_slice(xs: &[f64]) -> Option<Self> {
        if !(2..=MAX_DIM).contains(&xs.len()) {
            return None;
        }
        let mut p = Point::origin(xs.len());
        p.c[..xs.len()].copy_from_slice(xs);
        Some(p)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.c[..self.dim]
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.c[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.c[1]
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        match self.dim {
            2 => self.c[0].hypot(self.c[1]),
            _ => self.c[0].hypot(self.c[1]).hypot(self.c[2]),
        }
    }

    #[inline]
    pub fn is_origin(&self) -> bool {
        self.coords().iter().all(|&v| v == 0.0)
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|v| v.is_finite())
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Self {
        let mut p = *self;
        for v in &mut p.c[..p.dim] {
            *v *= s;
        }
        p
    }

    #[inline]
    pub fn add(&self, o: &Point) -> Self {
        debug_assert_eq!(self.dim, o.dim);
        let mut p = *self;
        for i in 0..p.dim {
            p.c[i] += o.c[i];
        }
        p
    }

    #[inline]
    pub fn sub(&self, o: &Point) -> Self {
        debug_assert_eq!(self.dim, o.dim);
        let mut p = *self;
        for i in 0..p.dim {
            p.c[i] -= o.c[i];
        }
        p
    }

    #[inline]
    pub fn dist(&self, o: &Point) -> f64 {
        self.sub(o).norm()
    }

    /// Unit vector in the direction of `self`; `None` at the origin.
    pub fn normalized(&self) -> Option<Self> {
        let r = self.norm();
        if r == 0.0 || !r.is_finite() {
            None
        } else {
            Some(self.scale(1.0 / r))
        }
    }

    /// Inversion in the unit sphere, `x / |x|^2`.
    pub fn inverted(&self) -> Self {
        let r = self.norm();
        // Divide twice by r so |x|^2 never overflows or underflows on its own.
        self.scale(1.0 / r).scale(1.0 / r)
    }

    /// Polar angle of a planar point.
    #[inline]
    pub fn arg(&self) -> f64 {
        self.c[1].atan2(self.c[0])
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

impl fmt::Display for Point {
    /// Semicolon-separated coordinates with 17 significant digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.coords().iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{}", crate::report::fmt_f64(*v))?;
        }
        Ok(())
    }
}

/// A nonzero point written as `exp(log_r) * dir` with `|dir| = 1`.
///
/// Orbits that collapse to 0 or escape to infinity doubly exponentially are
/// tracked in this form; `log_r` stays representable long after `|x|` does not.
/// The origin is `log_r = -inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPoint {
    pub log_r: f64,
    pub dir: Point,
}

impl LogPoint {
    pub fn from_point(p: &Point) -> Self {
        match p.normalized() {
            Some(dir) => LogPoint { log_r: p.norm().ln(), dir },
            None => LogPoint { log_r: f64::NEG_INFINITY, dir: Point::on_axis(p.dim(), 1.0) },
        }
    }

    pub fn new(log_r: f64, dir: Point) -> Self {
        LogPoint { log_r, dir }
    }

    /// Back to Cartesian form; overflows to infinity or underflows to 0 as f64 does.
    pub fn to_point(&self) -> Point {
        self.dir.scale(self.log_r.exp())
    }

    pub fn dim(&self) -> usize {
        self.dir.dim()
    }

    #[inline]
    pub fn is_origin(&self) -> bool {
        self.log_r == f64::NEG_INFINITY
    }
}

/// Complex product of two planar points.
#[inline]
pub fn cmul(a: &Point, b: &Point) -> Point {
    Point::new2(a.x() * b.x() - a.y() * b.y(), a.x() * b.y() + a.y() * b.x())
}

/// Integer power of a planar point by repeated complex multiplication.
pub fn cpow(z: &Point, d: u32) -> Point {
    let mut acc = Point::new2(1.0, 0.0);
    let mut base = *z;
    let mut e = d;
    while e > 0 {
        if e & 1 == 1 {
            acc = cmul(&acc, &base);
        }
        e >>= 1;
        if e > 0 {
            base = cmul(&base, &base);
        }
    }
    acc
}
