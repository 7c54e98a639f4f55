use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::FisError;

/// A membership function given as `(x, degree)` breakpoints joined by
/// straight lines. Outside the first/last breakpoint the boundary degree
/// extends as a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearMF {
    points: Vec<(f64, f64)>,
}

impl PiecewiseLinearMF {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, FisError> {
        if points.len() < 2 {
            return Err(FisError::InvalidBreakpoints("at least two breakpoints are required"));
        }
        for &(x, d) in &points {
            if !x.is_finite() || !d.is_finite() {
                return Err(FisError::InvalidBreakpoints("breakpoints must be finite"));
            }
            if !(0.0..=1.0).contains(&d) {
                return Err(FisError::InvalidBreakpoints("degrees must lie in [0, 1]"));
            }
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(FisError::InvalidBreakpoints("breakpoint x values must be strictly increasing"));
        }
        Ok(Self { points })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// `[first.x, last.x]`; the region where the function is not constant.
    pub fn span(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    /// Degree of membership at `x`. Total: NaN maps to 0.
    pub fn evaluate(&self, x: f64) -> f64 {
        let pts = &self.points;
        if x.is_nan() {
            return 0.0;
        }
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if x <= first.0 {
            return first.1;
        }
        if x >= last.0 {
            return last.1;
        }
        // first index with px > x; 1 <= i <= len-1 here
        let i = pts.partition_point(|p| p.0 <= x);
        let (x0, y0) = pts[i - 1];
        if x == x0 {
            return y0;
        }
        let (x1, y1) = pts[i];
        let y = y0 + (y1 - y0) * ((x - x0) / (x1 - x0));
        y.clamp(0.0, 1.0)
    }

    /// Largest degree reached by the function.
    pub fn height(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(0.0, f64::max)
    }
}

/// The four term shapes the rulebank format can express.
///
/// Arguments must be non-decreasing. A zero-width edge (`a == b` in a
/// triangle, `c == d` in a trapezoid, ...) drops the corresponding zero
/// breakpoint, so the plateau degree extends past it like a shoulder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// 1 up to `a`, falling linearly to 0 at `b`.
    ShoulderDown { a: f64, b: f64 },
    /// 0 up to `a`, rising linearly to 1 at `b`.
    ShoulderUp { a: f64, b: f64 },
    Triangle { a: f64, b: f64, c: f64 },
    Trapezoid { a: f64, b: f64, c: f64, d: f64 },
}

impl Shape {
    pub fn shoulder_down(a: f64, b: f64) -> Self {
        Shape::ShoulderDown { a, b }
    }

    pub fn shoulder_up(a: f64, b: f64) -> Self {
        Shape::ShoulderUp { a, b }
    }

    pub fn triangle(a: f64, b: f64, c: f64) -> Self {
        Shape::Triangle { a, b, c }
    }

    pub fn trapezoid(a: f64, b: f64, c: f64, d: f64) -> Self {
        Shape::Trapezoid { a, b, c, d }
    }

    /// Constructor name as written in rulebanks.
    pub fn name(&self) -> &'static str {
        match self {
            Shape::ShoulderDown { .. } => "shoulder_down",
            Shape::ShoulderUp { .. } => "shoulder_up",
            Shape::Triangle { .. } => "triangle",
            Shape::Trapezoid { .. } => "trapezoid",
        }
    }

    pub fn args(&self) -> Vec<f64> {
        match *self {
            Shape::ShoulderDown { a, b } | Shape::ShoulderUp { a, b } => alloc::vec![a, b],
            Shape::Triangle { a, b, c } => alloc::vec![a, b, c],
            Shape::Trapezoid { a, b, c, d } => alloc::vec![a, b, c, d],
        }
    }

    /// Build from a constructor name and its arguments.
    pub fn from_parts(name: &str, args: &[f64]) -> Result<Self, FisError> {
        let shape = match (name, args) {
            ("shoulder_down", &[a, b]) => Shape::ShoulderDown { a, b },
            ("shoulder_up", &[a, b]) => Shape::ShoulderUp { a, b },
            ("triangle", &[a, b, c]) => Shape::Triangle { a, b, c },
            ("trapezoid", &[a, b, c, d]) => Shape::Trapezoid { a, b, c, d },
            ("shoulder_down" | "shoulder_up", _) => return Err(FisError::InvalidShape("expects 2 arguments")),
            ("triangle", _) => return Err(FisError::InvalidShape("expects 3 arguments")),
            ("trapezoid", _) => return Err(FisError::InvalidShape("expects 4 arguments")),
            _ => return Err(FisError::InvalidShape("unknown shape constructor")),
        };
        Ok(shape)
    }

    pub fn to_mf(&self) -> Result<PiecewiseLinearMF, FisError> {
        let args = self.args();
        if args.iter().any(|v| !v.is_finite()) {
            return Err(FisError::InvalidShape("arguments must be finite"));
        }
        if args.windows(2).any(|w| w[0] > w[1]) {
            return Err(FisError::InvalidShape("arguments must be non-decreasing"));
        }
        let pts = match *self {
            Shape::ShoulderDown { a, b } => {
                if a == b {
                    return Err(FisError::InvalidShape("shoulder needs a < b"));
                }
                alloc::vec![(a, 1.0), (b, 0.0)]
            }
            Shape::ShoulderUp { a, b } => {
                if a == b {
                    return Err(FisError::InvalidShape("shoulder needs a < b"));
                }
                alloc::vec![(a, 0.0), (b, 1.0)]
            }
            Shape::Triangle { a, b, c } => {
                if a == c {
                    return Err(FisError::InvalidShape("triangle needs a < c"));
                }
                let mut v = Vec::with_capacity(3);
                if a < b {
                    v.push((a, 0.0));
                }
                v.push((b, 1.0));
                if b < c {
                    v.push((c, 0.0));
                }
                v
            }
            Shape::Trapezoid { a, b, c, d } => {
                if a == d {
                    return Err(FisError::InvalidShape("trapezoid needs a < d"));
                }
                let mut v = Vec::with_capacity(4);
                if a < b {
                    v.push((a, 0.0));
                }
                v.push((b, 1.0));
                if b < c {
                    v.push((c, 1.0));
                }
                if c < d {
                    v.push((d, 0.0));
                }
                v
            }
        };
        PiecewiseLinearMF::new(pts)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name())?;
        for (i, a) in self.args().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}
