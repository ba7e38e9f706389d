//! Catalog of the chaotic maps and orbit generation.
//!
//! Every map acts on an axis-aligned box of R^d with d = 1 or 2. One-dimensional
//! maps keep the second coordinate of [`Point`] at zero, so distances and noise
//! can be handled uniformly.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::StreamRng;

/// Default number of discarded transient iterates for the deterministic maps.
pub const DEFAULT_BURN_IN: usize = 1_000;

/// Default burn-in for the Cantor IFS: 3^-40 is far below double precision.
pub const IFS_BURN_IN: usize = 40;

/// Default intermittency exponent of the Pomeau-Manneville map.
pub const DEFAULT_PM_ALPHA: f64 = 0.3;

/// Attempts made by [`sample_initial_condition`] before giving up.
const MAX_INITIAL_ATTEMPTS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("{map}: point {point} lies outside the domain")]
    DomainViolation { map: MapKind, point: Point },
    #[error("{map}: no initial condition stayed in the domain after {attempts} attempts")]
    NonConvergent { map: MapKind, attempts: usize },
    #[error("{map}: random map iterated without a branch stream")]
    MissingBranchStream { map: MapKind },
    #[error("invalid map parameter: {0}")]
    InvalidParameter(String),
}

/// A point of the ambient space. One-dimensional systems use only the first
/// coordinate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point(pub [f64; 2]);

impl Point {
    pub const fn scalar(x: f64) -> Self {
        Point([x, 0.0])
    }

    pub const fn planar(x: f64, y: f64) -> Self {
        Point([x, y])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    /// Euclidean distance. Exact `|dx|` when the second coordinates agree.
    #[inline]
    pub fn distance(&self, other: &Point) -> f64 {
        let dx = self.0[0] - other.0[0];
        let dy = self.0[1] - other.0[1];
        if dy == 0.0 {
            dx.abs()
        } else {
            (dx * dx + dy * dy).sqrt()
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0[0].is_finite() && self.0[1].is_finite()
    }

    #[inline]
    pub fn add(&self, other: &Point) -> Point {
        Point([self.0[0] + other.0[0], self.0[1] + other.0[1]])
    }

    pub fn map_coords(&self, mut f: impl FnMut(f64) -> f64) -> Point {
        Point([f(self.0[0]), f(self.0[1])])
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0[0], self.0[1])
    }
}

/// Closed axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub lower: Point,
    pub upper: Point,
}

impl Domain {
    pub const fn interval(lo: f64, hi: f64) -> Self {
        Domain {
            lower: Point::scalar(lo),
            upper: Point::scalar(hi),
        }
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        (0..2).all(|i| p.0[i] >= self.lower.0[i] && p.0[i] <= self.upper.0[i])
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper.0[axis] - self.lower.0[axis]
    }

    /// Length of the longest diagonal.
    pub fn diameter(&self) -> f64 {
        self.lower.distance(&self.upper)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    TernaryShift,
    Hemmer,
    PomeauManneville,
    CantorIfs,
    Lozi,
}

impl MapKind {
    pub const ALL: [MapKind; 5] = [
        MapKind::TernaryShift,
        MapKind::Hemmer,
        MapKind::PomeauManneville,
        MapKind::CantorIfs,
        MapKind::Lozi,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MapKind::TernaryShift => "ternary_shift",
            MapKind::Hemmer => "hemmer",
            MapKind::PomeauManneville => "pomeau_manneville",
            MapKind::CantorIfs => "cantor_ifs",
            MapKind::Lozi => "lozi",
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            MapKind::Lozi => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MapKind {
    type Err = DynamicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MapKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| DynamicsError::InvalidParameter(format!("unknown map '{s}'")))
    }
}

/// Which contraction of the Cantor IFS to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    First,
    Second,
}

/// A map of the catalog together with its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MapSystem {
    /// x -> 3x mod 1 on [0, 1).
    TernaryShift,
    /// x -> 1 - 2 sqrt|x| on [-1, 1], invariant density (1 - x) / 2.
    Hemmer,
    /// Intermittent map with a neutral fixed point at 0.
    PomeauManneville { alpha: f64 },
    /// x -> x/3 with probability q1, x -> (x + 2)/3 otherwise.
    CantorIfs { q1: f64 },
    /// (x, y) -> (y + 1 - a|x|, b x).
    Lozi { a: f64, b: f64 },
}

const LOZI_BOX: Domain = Domain {
    lower: Point::planar(-1.5, -0.75),
    upper: Point::planar(1.5, 0.75),
};

impl MapSystem {
    pub fn pomeau_manneville(alpha: f64) -> Result<Self, DynamicsError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(DynamicsError::InvalidParameter(format!(
                "Pomeau-Manneville alpha must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(MapSystem::PomeauManneville { alpha })
    }

    pub fn cantor_ifs(q1: f64) -> Result<Self, DynamicsError> {
        if !(q1 > 0.0 && q1 < 1.0) {
            return Err(DynamicsError::InvalidParameter(format!(
                "IFS weight q1 must lie in (0, 1), got {q1}"
            )));
        }
        Ok(MapSystem::CantorIfs { q1 })
    }

    pub fn lozi(a: f64, b: f64) -> Result<Self, DynamicsError> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(DynamicsError::InvalidParameter(
                "Lozi parameters must be finite".into(),
            ));
        }
        Ok(MapSystem::Lozi { a, b })
    }

    /// The catalog map with its default parameters.
    pub fn default_for(kind: MapKind) -> Self {
        match kind {
            MapKind::TernaryShift => MapSystem::TernaryShift,
            MapKind::Hemmer => MapSystem::Hemmer,
            MapKind::PomeauManneville => MapSystem::PomeauManneville {
                alpha: DEFAULT_PM_ALPHA,
            },
            MapKind::CantorIfs => MapSystem::CantorIfs { q1: 0.5 },
            MapKind::Lozi => MapSystem::Lozi { a: 1.7, b: 0.5 },
        }
    }

    pub fn kind(&self) -> MapKind {
        match self {
            MapSystem::TernaryShift => MapKind::TernaryShift,
            MapSystem::Hemmer => MapKind::Hemmer,
            MapSystem::PomeauManneville { .. } => MapKind::PomeauManneville,
            MapSystem::CantorIfs { .. } => MapKind::CantorIfs,
            MapSystem::Lozi { .. } => MapKind::Lozi,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.kind().ambient_dim()
    }

    pub fn is_random(&self) -> bool {
        matches!(self, MapSystem::CantorIfs { .. })
    }

    pub fn domain(&self) -> Domain {
        match self {
            MapSystem::TernaryShift
            | MapSystem::PomeauManneville { .. }
            | MapSystem::CantorIfs { .. } => Domain::interval(0.0, 1.0),
            MapSystem::Hemmer => Domain::interval(-1.0, 1.0),
            MapSystem::Lozi { .. } => LOZI_BOX,
        }
    }

    pub fn default_burn_in(&self) -> usize {
        if self.is_random() {
            IFS_BURN_IN
        } else {
            DEFAULT_BURN_IN
        }
    }

    /// One application of the map. `branch_rng` must be supplied for the IFS,
    /// which consumes exactly one uniform draw per step.
    pub fn iterate<R: Rng + ?Sized>(
        &self,
        x: Point,
        branch_rng: Option<&mut R>,
    ) -> Result<Point, DynamicsError> {
        if !self.domain().contains(&x) {
            return Err(DynamicsError::DomainViolation {
                map: self.kind(),
                point: x,
            });
        }
        Ok(match *self {
            MapSystem::CantorIfs { q1 } => {
                let rng = branch_rng.ok_or(DynamicsError::MissingBranchStream {
                    map: self.kind(),
                })?;
                let branch = if rng.random::<f64>() < q1 {
                    Branch::First
                } else {
                    Branch::Second
                };
                ifs_branch(x, branch)
            }
            _ => self.step_deterministic(x),
        })
    }

    /// Applies one IFS contraction explicitly.
    pub fn apply_branch(&self, x: Point, branch: Branch) -> Result<Point, DynamicsError> {
        if !self.domain().contains(&x) {
            return Err(DynamicsError::DomainViolation {
                map: self.kind(),
                point: x,
            });
        }
        match self {
            MapSystem::CantorIfs { .. } => Ok(ifs_branch(x, branch)),
            _ => Err(DynamicsError::InvalidParameter(format!(
                "{} has no branches",
                self.kind()
            ))),
        }
    }

    #[inline]
    fn step_deterministic(&self, p: Point) -> Point {
        match *self {
            MapSystem::TernaryShift => {
                let y = 3.0 * p.0[0];
                let mut r = y - y.floor();
                if r >= 1.0 {
                    r -= 1.0;
                }
                Point::scalar(r)
            }
            MapSystem::Hemmer => {
                let x = p.0[0];
                if x == -1.0 {
                    Point::scalar(-1.0)
                } else {
                    Point::scalar(1.0 - 2.0 * x.abs().sqrt())
                }
            }
            MapSystem::PomeauManneville { alpha } => {
                let x = p.0[0];
                if x <= 0.5 {
                    Point::scalar(x + (2.0 * x).powf(alpha) * x)
                } else {
                    Point::scalar(2.0 * x - 1.0)
                }
            }
            MapSystem::Lozi { a, b } => {
                let [x, y] = p.0;
                Point::planar(y + 1.0 - a * x.abs(), b * x)
            }
            MapSystem::CantorIfs { .. } => unreachable!("IFS steps need a branch"),
        }
    }

    /// Streaming orbit starting at `x0` (the first yielded point is `x0`).
    pub fn orbit(&self, x0: Point, branch_rng: Option<StreamRng>) -> OrbitIter {
        OrbitIter {
            map: *self,
            state: x0,
            branch_rng,
        }
    }
}

#[inline]
fn ifs_branch(p: Point, branch: Branch) -> Point {
    let x = p.0[0];
    match branch {
        Branch::First => Point::scalar(x / 3.0),
        Branch::Second => Point::scalar((x + 2.0) / 3.0),
    }
}

/// Anything that yields a sequence of ambient points.
pub trait PointSource {
    fn next_point(&mut self) -> Result<Point, DynamicsError>;
}

/// Lazily iterated orbit. Every yielded point is checked against the domain.
pub struct OrbitIter {
    map: MapSystem,
    state: Point,
    branch_rng: Option<StreamRng>,
}

impl PointSource for OrbitIter {
    /// Returns the current point and advances the state.
    #[inline]
    fn next_point(&mut self) -> Result<Point, DynamicsError> {
        let current = self.state;
        if !self.map.domain().contains(&current) {
            return Err(DynamicsError::DomainViolation {
                map: self.map.kind(),
                point: current,
            });
        }
        self.state = match self.map {
            MapSystem::CantorIfs { q1 } => {
                let rng = self
                    .branch_rng
                    .as_mut()
                    .ok_or(DynamicsError::MissingBranchStream {
                        map: self.map.kind(),
                    })?;
                let branch = if rng.random::<f64>() < q1 {
                    Branch::First
                } else {
                    Branch::Second
                };
                ifs_branch(current, branch)
            }
            map => map.step_deterministic(current),
        };
        Ok(current)
    }
}

impl OrbitIter {
    /// Discards `n` points.
    pub fn skip_points(&mut self, n: usize) -> Result<(), DynamicsError> {
        for _ in 0..n {
            self.next_point()?;
        }
        Ok(())
    }

    pub fn state(&self) -> Point {
        self.state
    }
}

/// A finite orbit segment with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    pub points: Vec<Point>,
    pub map: MapKind,
    pub seed: Option<u64>,
    pub burn_in: usize,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Iterates `map` from `x0`, discards `burn_in` transients and keeps `length`
/// points. The IFS branch stream is seeded from `branch_seed`.
pub fn generate_orbit(
    map: &MapSystem,
    x0: Point,
    length: usize,
    burn_in: usize,
    branch_seed: Option<u64>,
) -> Result<Orbit, DynamicsError> {
    if length == 0 {
        return Err(DynamicsError::InvalidParameter(
            "orbit length must be at least 1".into(),
        ));
    }
    if map.is_random() && branch_seed.is_none() {
        return Err(DynamicsError::MissingBranchStream { map: map.kind() });
    }
    let rng = branch_seed.map(StreamRng::seed_from_u64);
    let mut it = map.orbit(x0, rng);
    it.skip_points(burn_in)?;
    let points = (0..length)
        .map(|_| it.next_point())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Orbit {
        points,
        map: map.kind(),
        seed: branch_seed,
        burn_in,
    })
}

/// Draws a uniform point of the domain and runs `burn_in` iterations so the
/// result is distributed (numerically) on the attractor. Starts whose transient
/// leaves the domain are redrawn; the same stream drives the IFS branches.
pub fn sample_initial_condition<R: Rng + ?Sized>(
    map: &MapSystem,
    rng: &mut R,
    burn_in: usize,
) -> Result<Point, DynamicsError> {
    let dom = map.domain();
    let dim = map.ambient_dim();
    'attempt: for _ in 0..MAX_INITIAL_ATTEMPTS {
        let mut x = Point::default();
        for axis in 0..dim {
            x.0[axis] = dom.lower.0[axis] + dom.width(axis) * rng.random::<f64>();
        }
        for _ in 0..burn_in {
            x = match map.iterate(x, Some(&mut *rng)) {
                Ok(next) => next,
                Err(DynamicsError::DomainViolation { .. }) => continue 'attempt,
                Err(e) => return Err(e),
            };
        }
        if dom.contains(&x) {
            return Ok(x);
        }
    }
    Err(DynamicsError::NonConvergent {
        map: map.kind(),
        attempts: MAX_INITIAL_ATTEMPTS,
    })
}
