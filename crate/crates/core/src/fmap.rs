//! Location-isomorphism maps.
//!
//! An [`FMap`] is a strictly increasing map `f` under which complete ignorance
//! about a parameter becomes invariant under translations `f -> f + c`. The
//! quadratic error `[f(estimate) - f(theta)]^2` is then the natural figure of
//! merit. Supported kinds:
//!
//! | kind     | `f(z)`                        | domain     |
//! |----------|-------------------------------|------------|
//! | location | `z`                           | `R`        |
//! | scale    | `log(z / z0)`                 | `(0, inf)` |
//! | weight   | `2 artanh(2z - 1)`            | `(0, 1)`   |
//! | fisher   | `int_anchor^z sqrt(F(t)) dt`  | user given |
//! | custom   | user supplied                 | user given |

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;
use crate::special::artanh;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Real interval with possibly infinite endpoints. Membership is closed; maps
/// that diverge at an endpoint reject it when the image is not finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidParameter { name: "interval", reason: format!("[{lo}, {hi}] is empty") });
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && self.lo <= x && x <= self.hi
    }

    pub fn contains_strictly(&self, x: f64) -> bool {
        x.is_finite() && self.lo < x && x < self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `count` points strictly inside the interval.
    pub fn interior_samples(&self, count: usize) -> Vec<f64> {
        let n = count as f64;
        (0..count)
            .map(|i| {
                let t = (i as f64 + 1.0) / (n + 1.0);
                match (self.lo.is_finite(), self.hi.is_finite()) {
                    (true, true) => self.lo + t * self.width(),
                    (true, false) => self.lo + (-8.0 + 16.0 * t).exp(),
                    (false, true) => self.hi - (-8.0 + 16.0 * t).exp(),
                    (false, false) => -50.0 + 100.0 * t,
                }
            })
            .collect()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FMapKind {
    Location,
    Scale,
    Weight,
    Fisher,
    Custom,
}

/// Tabulated `f(z) = int_anchor^z sqrt(F(t)) dt` on a finite domain.
struct FisherTable {
    root_info: RealFn,
    grid: Vec<f64>,
    values: Vec<f64>,
}

const FISHER_GRID: usize = 256;
const FISHER_TOL: f64 = 1e-13;

impl FisherTable {
    fn build(info: RealFn, domain: Interval, anchor: f64) -> Result<Self> {
        if !domain.is_finite() {
            return Err(Error::InvalidParameter {
                name: "domain",
                reason: "fisher maps require a finite domain".into(),
            });
        }
        if !domain.contains(anchor) {
            return Err(Error::Domain { value: anchor, domain: domain.to_string() });
        }
        let grid: Vec<f64> =
            (0..=FISHER_GRID).map(|k| domain.lo + domain.width() * k as f64 / FISHER_GRID as f64).collect();
        let samples = domain.interior_samples(64).into_iter().chain(grid[1..FISHER_GRID].iter().copied());
        for t in samples {
            let v = info(t);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "fisher_information",
                    reason: format!("F({t}) = {v} is not strictly positive"),
                });
            }
        }
        let root_info: RealFn = Arc::new(move |t| info(t).sqrt());
        let mut values = Vec::with_capacity(grid.len());
        for &t in &grid {
            let f = root_info.clone();
            values.push(integrate_adaptive(move |x| f(x), anchor, t, FISHER_TOL, FISHER_TOL)?);
        }
        Ok(Self { root_info, grid, values })
    }

    fn forward(&self, z: f64) -> Result<f64> {
        let h = self.grid[1] - self.grid[0];
        let k = (((z - self.grid[0]) / h).round() as usize).min(FISHER_GRID);
        let f = self.root_info.clone();
        Ok(self.values[k] + integrate_adaptive(move |x| f(x), self.grid[k], z, FISHER_TOL, FISHER_TOL)?)
    }

    /// Bracketed Illinois (modified regula falsi) iteration on the cached table.
    fn inverse(&self, s: f64) -> Result<f64> {
        let last = self.values.len() - 1;
        if s < self.values[0] || s > self.values[last] {
            return Err(Error::Domain {
                value: s,
                domain: format!("[{}, {}]", self.values[0], self.values[last]),
            });
        }
        let k = match self.values.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(k) => return Ok(self.grid[k]),
            Err(k) => k,
        };
        let (mut lo, mut hi) = (self.grid[k - 1], self.grid[k]);
        let (mut flo, mut fhi) = (self.values[k - 1] - s, self.values[k] - s);
        let mut side = 0i8;
        for _ in 0..200 {
            let mut z = (lo * fhi - hi * flo) / (fhi - flo);
            if !(z > lo && z < hi) {
                z = 0.5 * (lo + hi);
            }
            let fz = self.forward(z)? - s;
            if fz == 0.0 || hi - lo < 1e-12 * (1.0 + z.abs()) {
                return Ok(z);
            }
            if (fz < 0.0) == (flo < 0.0) {
                lo = z;
                flo = fz;
                if side == -1 {
                    fhi *= 0.5;
                }
                side = -1;
            } else {
                hi = z;
                fhi = fz;
                if side == 1 {
                    flo *= 0.5;
                }
                side = 1;
            }
        }
        Err(Error::RootFinding { target: s })
    }
}

#[derive(Clone)]
enum Repr {
    Location,
    Scale { z0: f64 },
    Weight,
    Fisher(Arc<FisherTable>),
    Custom { forward: RealFn, inverse: RealFn, derivative: RealFn },
}

/// Strictly increasing map `f` with inverse and derivative.
#[derive(Clone)]
pub struct FMap {
    repr: Repr,
    domain: Interval,
    offset: f64,
}

impl fmt::Debug for FMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FMap")
            .field("kind", &self.kind())
            .field("domain", &self.domain)
            .field("offset", &self.offset)
            .finish()
    }
}

/// Construction parameters for [`make_fmap`].
#[derive(Clone)]
pub enum FMapSpec {
    Location,
    Scale { z0: f64 },
    Weight,
    Fisher { information: RealFn, domain: Interval, anchor: f64 },
    Custom { domain: Interval, forward: RealFn, inverse: RealFn, derivative: RealFn },
}

/// Builds and validates an f-map (monotonicity and round trip at 64 interior points).
pub fn make_fmap(spec: FMapSpec) -> Result<FMap> {
    let map = match spec {
        FMapSpec::Location => FMap::location(),
        FMapSpec::Scale { z0 } => FMap::scale(z0)?,
        FMapSpec::Weight => FMap::weight(),
        FMapSpec::Fisher { information, domain, anchor } => FMap::fisher(information, domain, anchor)?,
        FMapSpec::Custom { domain, forward, inverse, derivative } => {
            FMap { repr: Repr::Custom { forward, inverse, derivative }, domain, offset: 0.0 }
        }
    };
    map.validate()?;
    Ok(map)
}

impl FMap {
    pub fn location() -> Self {
        Self { repr: Repr::Location, domain: Interval::REAL_LINE, offset: 0.0 }
    }

    pub fn scale(z0: f64) -> Result<Self> {
        if !(z0 > 0.0) || !z0.is_finite() {
            return Err(Error::InvalidParameter { name: "z0", reason: format!("{z0} must be positive") });
        }
        Ok(Self { repr: Repr::Scale { z0 }, domain: Interval { lo: 0.0, hi: f64::INFINITY }, offset: 0.0 })
    }

    pub fn weight() -> Self {
        Self { repr: Repr::Weight, domain: Interval::UNIT, offset: 0.0 }
    }

    pub fn fisher(information: RealFn, domain: Interval, anchor: f64) -> Result<Self> {
        let table = FisherTable::build(information, domain, anchor)?;
        Ok(Self { repr: Repr::Fisher(Arc::new(table)), domain, offset: 0.0 })
    }

    /// The same map shifted by a constant, `f + c`.
    pub fn with_offset(mut self, c: f64) -> Self {
        self.offset += c;
        self
    }

    pub fn kind(&self) -> FMapKind {
        match self.repr {
            Repr::Location => FMapKind::Location,
            Repr::Scale { .. } => FMapKind::Scale,
            Repr::Weight => FMapKind::Weight,
            Repr::Fisher(_) => FMapKind::Fisher,
            Repr::Custom { .. } => FMapKind::Custom,
        }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    fn check_domain(&self, theta: f64) -> Result<()> {
        if self.domain.contains(theta) {
            Ok(())
        } else {
            Err(Error::Domain { value: theta, domain: self.domain.to_string() })
        }
    }

    fn finite(&self, theta: f64, value: f64) -> Result<f64> {
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::Domain { value: theta, domain: self.domain.to_string() })
        }
    }

    pub fn forward(&self, theta: f64) -> Result<f64> {
        self.check_domain(theta)?;
        let raw = match &self.repr {
            Repr::Location => theta,
            Repr::Scale { z0 } => (theta / z0).ln(),
            // 2 artanh(2z - 1) = ln(z / (1 - z)), which keeps precision near the endpoints
            Repr::Weight => (theta / (1.0 - theta)).ln(),
            Repr::Fisher(table) => table.forward(theta)?,
            Repr::Custom { forward, .. } => forward(theta),
        };
        self.finite(theta, raw + self.offset)
    }

    pub fn inverse(&self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(Error::Domain { value: s, domain: self.range().to_string() });
        }
        let u = s - self.offset;
        let theta = match &self.repr {
            Repr::Location => u,
            Repr::Scale { z0 } => z0 * u.exp(),
            Repr::Weight => 0.5 + 0.5 * (0.5 * u).tanh(),
            Repr::Fisher(table) => table.inverse(u)?,
            Repr::Custom { inverse, .. } => inverse(u),
        };
        if !theta.is_finite() {
            return Err(Error::Domain { value: s, domain: self.range().to_string() });
        }
        Ok(theta)
    }

    pub fn derivative(&self, theta: f64) -> Result<f64> {
        self.check_domain(theta)?;
        let d = match &self.repr {
            Repr::Location => 1.0,
            Repr::Scale { .. } => 1.0 / theta,
            Repr::Weight => 1.0 / (theta * (1.0 - theta)),
            Repr::Fisher(table) => (table.root_info)(theta),
            Repr::Custom { derivative, .. } => derivative(theta),
        };
        self.finite(theta, d)
    }

    /// Image of the domain under `f`.
    pub fn range(&self) -> Interval {
        let c = self.offset;
        match &self.repr {
            Repr::Location | Repr::Scale { .. } | Repr::Weight => Interval::REAL_LINE,
            Repr::Fisher(table) => Interval { lo: table.values[0] + c, hi: table.values[table.values.len() - 1] + c },
            Repr::Custom { forward, .. } => {
                let edge = |x: f64, fallback: f64| {
                    let v = forward(x);
                    if v.is_nan() {
                        fallback
                    } else {
                        v + c
                    }
                };
                Interval { lo: edge(self.domain.lo, f64::NEG_INFINITY), hi: edge(self.domain.hi, f64::INFINITY) }
            }
        }
    }

    /// Checks `f' > 0` and `f^{-1}(f(theta)) = theta` at 64 interior points.
    pub fn validate(&self) -> Result<()> {
        for theta in self.domain.interior_samples(64) {
            let d = self.derivative(theta)?;
            if !(d > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "fmap",
                    reason: format!("derivative {d} at {theta} is not positive"),
                });
            }
            let back = self.inverse(self.forward(theta)?)?;
            if (back - theta).abs() > 1e-10 * theta.abs().max(1.0) {
                return Err(Error::InvalidParameter {
                    name: "fmap",
                    reason: format!("inverse(forward({theta})) = {back}"),
                });
            }
        }
        Ok(())
    }
}

/// Odds rescaling `theta -> gamma theta / (1 - theta + gamma theta)` on `(0, 1)`.
pub fn mobius(theta: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter { name: "gamma", reason: format!("{gamma} must be positive") });
    }
    if !Interval::UNIT.contains_strictly(theta) {
        return Err(Error::Domain { value: theta, domain: "(0, 1)".into() });
    }
    Ok(gamma * theta / (1.0 - theta + gamma * theta))
}

/// `D(a, b) = |f(a) - f(b)|^k`.
#[derive(Debug, Clone)]
pub struct DistanceFunction {
    pub fmap: FMap,
    pub exponent: f64,
}

impl DistanceFunction {
    pub fn new(fmap: FMap, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0) || !exponent.is_finite() {
            return Err(Error::InvalidParameter { name: "exponent", reason: format!("{exponent} must be positive") });
        }
        Ok(Self { fmap, exponent })
    }

    /// Quadratic hyperbolic error for weights.
    pub fn hyperbolic() -> Self {
        Self { fmap: FMap::weight(), exponent: 2.0 }
    }

    pub fn evaluate(&self, estimate: f64, theta: f64) -> Result<f64> {
        evaluate_distance(self, estimate, theta)
    }
}

pub fn evaluate_distance(d: &DistanceFunction, estimate: f64, theta: f64) -> Result<f64> {
    let gap = d.fmap.forward(estimate)? - d.fmap.forward(theta)?;
    Ok(gap.abs().powf(d.exponent))
}

/// `|2 artanh((a - b) / (a + b - 2ab))|^k`, the weight distance written in
/// terms of the hypotheses directly.
pub fn hyperbolic_distance(estimate: f64, theta: f64, exponent: f64) -> Result<f64> {
    for x in [estimate, theta] {
        if !Interval::UNIT.contains_strictly(x) {
            return Err(Error::Domain { value: x, domain: "(0, 1)".into() });
        }
    }
    let ratio = (estimate - theta) / (estimate + theta - 2.0 * estimate * theta);
    Ok((2.0 * artanh(ratio)).abs().powf(exponent))
}
