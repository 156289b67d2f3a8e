use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::worker_rng;
use crate::scalar::squared_distance;
use crate::{Point, Window};

pub(crate) const FD_STEP: f64 = 1e-4;
pub(crate) const FD_TOLERANCE: f64 = 1e-5;
const VALIDATION_POINTS: usize = 100;

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

pub(crate) fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|a| {
            y[a] = x[a] + FD_STEP;
            let up = f(&y);
            y[a] = x[a] - FD_STEP;
            let down = f(&y);
            y[a] = x[a];
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// A compactly supported `C¹` function on `R^d` with exact gradient and a declared Lipschitz
/// constant. Construction checks the gradient against central differences.
#[derive(Clone)]
pub struct SmoothTestFunction {
    name: String,
    value: ValueFn,
    gradient: GradFn,
    support: Window,
    lip: f64,
}

impl fmt::Debug for SmoothTestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothTestFunction")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("lip", &self.lip)
            .finish()
    }
}

impl SmoothTestFunction {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        support: Window,
        lip: f64,
    ) -> Result<Self> {
        let f = SmoothTestFunction {
            name: name.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            support,
            lip,
        };
        f.validate()?;
        Ok(f)
    }

    fn fail(&self, detail: String) -> Error {
        Error::GradientCheck { name: self.name.clone(), detail }
    }

    /// Seeded check on points of the support's bounding box and of a box twice as large.
    fn validate(&self) -> Result<()> {
        if !(self.lip >= 0.0) || !self.lip.is_finite() {
            return Err(self.fail(format!("invalid Lipschitz constant {}", self.lip)));
        }
        let (lo, hi) = self.support.bounding_box();
        let mut rng = worker_rng(0x6a7d, 0);
        let value = |x: &[f64]| (self.value)(x);
        for i in 0..VALIDATION_POINTS {
            let widen = if i % 4 == 3 { 1.0 } else { 0.0 };
            let x: Vec<f64> = lo
                .iter()
                .zip(&hi)
                .map(|(l, h)| {
                    let pad = widen * 0.5 * (h - l);
                    rng.random_range(l - pad..h + pad)
                })
                .collect();
            let g = (self.gradient)(&x);
            if g.len() != x.len() {
                return Err(self.fail(format!("gradient has {} components, expected {}", g.len(), x.len())));
            }
            let fd = fd_gradient(&value, &x);
            let err = g.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if !(err <= FD_TOLERANCE) {
                return Err(self.fail(format!("gradient differs from finite differences by {err} at {x:?}")));
            }
            if norm(&g) > self.lip + 1e-9 {
                return Err(self.fail(format!("|grad| = {} exceeds lip {} at {x:?}", norm(&g), self.lip)));
            }
            if !self.support.contains_coords(&x) && (value(&x) != 0.0 || g.iter().any(|c| *c != 0.0)) {
                return Err(self.fail(format!("nonzero outside the support at {x:?}")));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn support(&self) -> &Window {
        &self.support
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn value(&self, x: &Point) -> f64 {
        (self.value)(x.coords())
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &Point) -> Vec<f64> {
        (self.gradient)(x.coords())
    }

    pub fn gradient_at(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }

    /// `c · f`.
    pub fn scaled(&self, c: f64) -> Self {
        let (v, g) = (self.value.clone(), self.gradient.clone());
        SmoothTestFunction {
            name: format!("{c}*{}", self.name),
            value: Arc::new(move |x| c * v(x)),
            gradient: Arc::new(move |x| g(x).into_iter().map(|a| c * a).collect()),
            support: self.support.clone(),
            lip: c.abs() * self.lip,
        }
    }

    /// `a (1 − |x − c|²/R²)³` on the closed ball of radius `R`.
    pub fn poly_bump(center: Vec<f64>, radius: f64, amplitude: f64) -> Result<Self> {
        let support = Window::ball(Point::new(center.clone())?, radius)?;
        let r2 = radius * radius;
        let c2 = center.clone();
        let lip = amplitude.abs() / radius * 96.0 / (25.0 * 5f64.sqrt());
        Self::new(
            "poly_bump",
            move |x| {
                let s = 1.0 - squared_distance(x, &center) / r2;
                if s > 0.0 {
                    amplitude * s * s * s
                } else {
                    0.0
                }
            },
            move |x| {
                let s = 1.0 - squared_distance(x, &c2) / r2;
                if s > 0.0 {
                    let k = -6.0 * amplitude * s * s / r2;
                    x.iter().zip(&c2).map(|(a, b)| k * (a - b)).collect()
                } else {
                    vec![0.0; x.len()]
                }
            },
            support,
            lip,
        )
    }

    /// `a exp(−|x − c|²/(2σ²))` times the unit cubic cutoff of radius `R`.
    pub fn gaussian_bump(center: Vec<f64>, sigma: f64, radius: f64, amplitude: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter("sigma must be positive".into()));
        }
        let support = Window::ball(Point::new(center.clone())?, radius)?;
        let (r2, s2) = (radius * radius, sigma * sigma);
        let c2 = center.clone();
        let lip = amplitude.abs() * (1.0 / (sigma * std::f64::consts::E.sqrt()) + 96.0 / (25.0 * 5f64.sqrt() * radius));
        Self::new(
            "gaussian_bump",
            move |x| {
                let q = squared_distance(x, &center);
                let s = 1.0 - q / r2;
                if s > 0.0 {
                    amplitude * (-q / (2.0 * s2)).exp() * s * s * s
                } else {
                    0.0
                }
            },
            move |x| {
                let q = squared_distance(x, &c2);
                let s = 1.0 - q / r2;
                if s > 0.0 {
                    let e = (-q / (2.0 * s2)).exp();
                    // d/dx [e s³] = e s² (−s/σ² − 6/R²)(x − c)
                    let k = amplitude * e * s * s * (-s / s2 - 6.0 / r2);
                    x.iter().zip(&c2).map(|(a, b)| k * (a - b)).collect()
                } else {
                    vec![0.0; x.len()]
                }
            },
            support,
            lip,
        )
    }

    /// `(x_axis − c_axis) · χ(|x − c|)` with `χ = 1` inside `r_in` and a quintic smoothstep down
    /// to zero at `r_out`; unit gradient on the inner ball.
    pub fn coord_bump(center: Vec<f64>, axis: usize, r_in: f64, r_out: f64) -> Result<Self> {
        if axis >= center.len() {
            return Err(Error::InvalidParameter(format!("axis {axis} out of range")));
        }
        let cut = RadialCutoff::new(r_in, r_out)?;
        let support = Window::ball(Point::new(center.clone())?, r_out)?;
        let lip = 1.0 + r_out * 15.0 / 8.0 / (r_out - r_in);
        let c2 = center.clone();
        Self::new(
            "coord_bump",
            move |x| (x[axis] - center[axis]) * cut.value(squared_distance(x, &center).sqrt()),
            move |x| {
                let r = squared_distance(x, &c2).sqrt();
                let (chi, dchi) = (cut.value(r), cut.derivative(r));
                let t = x[axis] - c2[axis];
                x.iter()
                    .zip(&c2)
                    .enumerate()
                    .map(|(a, (xa, ca))| {
                        let radial = if r > 0.0 { t * dchi * (xa - ca) / r } else { 0.0 };
                        radial + if a == axis { chi } else { 0.0 }
                    })
                    .collect()
            },
            support,
            lip,
        )
    }

    /// `χ(|x − c|)`: one on the inner ball, quintic smoothstep to zero at `r_out`.
    pub fn plateau(center: Vec<f64>, r_in: f64, r_out: f64) -> Result<Self> {
        let cut = RadialCutoff::new(r_in, r_out)?;
        let support = Window::ball(Point::new(center.clone())?, r_out)?;
        let lip = 15.0 / 8.0 / (r_out - r_in);
        let c2 = center.clone();
        Self::new(
            "plateau",
            move |x| cut.value(squared_distance(x, &center).sqrt()),
            move |x| {
                let r = squared_distance(x, &c2).sqrt();
                let d = cut.derivative(r);
                if r == 0.0 || d == 0.0 {
                    return vec![0.0; x.len()];
                }
                x.iter().zip(&c2).map(|(a, b)| d * (a - b) / r).collect()
            },
            support,
            lip,
        )
    }

    /// The tent `max(0, 1 − ||x| − 1|)` on `R`, with each kink replaced by a quadratic blend of
    /// width `TENT_KINK_WIDTH` so that `f'` is continuous and `|f'| ≤ 1`.
    pub fn nonlip_tent() -> Result<Self> {
        let tent = MollifiedTent::standard();
        let t2 = tent.clone();
        Self::new(
            "nonlip_tent",
            move |x| tent.value(x[0]),
            move |x| vec![t2.derivative(x[0])],
            Window::interval(-3.0, 3.0)?,
            1.0,
        )
    }
}

pub const TENT_KINK_WIDTH: f64 = 1e-3;

/// Piecewise linear function with slopes changing by `jumps[k]` at `kinks[k]`, zero far left,
/// each kink smoothed over a window of width `w` centered on it.
#[derive(Clone, Debug)]
struct MollifiedTent {
    kinks: Vec<(f64, f64)>,
    w: f64,
}

impl MollifiedTent {
    fn standard() -> Self {
        MollifiedTent {
            kinks: vec![(-2.0, 1.0), (-1.0, -2.0), (0.0, 2.0), (1.0, -2.0), (2.0, 1.0)],
            w: TENT_KINK_WIDTH,
        }
    }

    fn value(&self, x: f64) -> f64 {
        let (first, last) = (self.kinks[0].0, self.kinks[self.kinks.len() - 1].0);
        if x <= first - 0.5 * self.w || x >= last + 0.5 * self.w {
            return 0.0;
        }
        self.kinks
            .iter()
            .map(|&(c, jump)| {
                let t = (x - c) / self.w;
                let r = if t <= -0.5 {
                    0.0
                } else if t < 0.5 {
                    0.5 * (t + 0.5) * (t + 0.5)
                } else {
                    t
                };
                jump * self.w * r
            })
            .sum::<f64>()
            .max(0.0)
    }

    fn derivative(&self, x: f64) -> f64 {
        self.kinks.iter().map(|&(c, jump)| jump * ((x - c) / self.w + 0.5).clamp(0.0, 1.0)).sum()
    }
}

/// `1 − S((r − r_in)/(r_out − r_in))` for the quintic smoothstep `S`.
#[derive(Clone, Copy, Debug)]
struct RadialCutoff {
    r_in: f64,
    r_out: f64,
}

impl RadialCutoff {
    fn new(r_in: f64, r_out: f64) -> Result<Self> {
        if !(r_in >= 0.0 && r_out > r_in) {
            return Err(Error::InvalidParameter("need 0 <= r_in < r_out".into()));
        }
        Ok(RadialCutoff { r_in, r_out })
    }

    fn value(&self, r: f64) -> f64 {
        let s = ((self.r_out - r) / (self.r_out - self.r_in)).clamp(0.0, 1.0);
        s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }

    fn derivative(&self, r: f64) -> f64 {
        let t = (r - self.r_in) / (self.r_out - self.r_in);
        if !(0.0..1.0).contains(&t) {
            return 0.0;
        }
        -30.0 * t * t * (1.0 - t) * (1.0 - t) / (self.r_out - self.r_in)
    }
}

/// Named constructors addressable from configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunctionSpec {
    PolyBump {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    GaussianBump {
        center: Vec<f64>,
        sigma: f64,
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    CoordBump {
        center: Vec<f64>,
        #[serde(default)]
        axis: usize,
        r_in: f64,
        r_out: f64,
    },
    Plateau {
        center: Vec<f64>,
        r_in: f64,
        r_out: f64,
    },
    NonlipTent,
    Scaled {
        factor: f64,
        of: Box<TestFunctionSpec>,
    },
}

fn one() -> f64 {
    1.0
}

impl TestFunctionSpec {
    pub fn build(&self) -> Result<SmoothTestFunction> {
        match self {
            TestFunctionSpec::PolyBump { center, radius, amplitude } => {
                SmoothTestFunction::poly_bump(center.clone(), *radius, *amplitude)
            }
            TestFunctionSpec::GaussianBump { center, sigma, radius, amplitude } => {
                SmoothTestFunction::gaussian_bump(center.clone(), *sigma, *radius, *amplitude)
            }
            TestFunctionSpec::CoordBump { center, axis, r_in, r_out } => {
                SmoothTestFunction::coord_bump(center.clone(), *axis, *r_in, *r_out)
            }
            TestFunctionSpec::Plateau { center, r_in, r_out } => SmoothTestFunction::plateau(center.clone(), *r_in, *r_out),
            TestFunctionSpec::NonlipTent => SmoothTestFunction::nonlip_tent(),
            TestFunctionSpec::Scaled { factor, of } => Ok(of.build()?.scaled(*factor)),
        }
    }
}

/// Names and one-line descriptions of the built-in test functions.
pub const BUILTIN_TEST_FUNCTIONS: &[(&str, &str)] = &[
    ("poly_bump", "a (1 - |x-c|^2/R^2)^3 on the ball of radius R"),
    ("gaussian_bump", "Gaussian of width sigma times the cubic cutoff of radius R"),
    ("coord_bump", "(x_axis - c_axis) on the ball r_in, smoothly cut off at r_out"),
    ("plateau", "1 on the ball r_in, quintic smoothstep to 0 at r_out"),
    ("nonlip_tent", "mollified tent max(0, 1 - ||x| - 1|) on [-3, 3], kinks blended over 1e-3"),
    ("scaled", "factor times another test function"),
];
