//! The lifted space `M x R^N` with the l1-sum metric and the measure that
//! puts `mu ⊗ Lebesgue` on the subspace slice.
//!
//! Every lifted ball used here is centered at a point `(m, 0)`: distances to
//! the lifted subspace and lifted ball volumes do not depend on the `R^N`
//! coordinate, so the center is identified with a point index of `M`.
//!
//! Integrating over the `R^N` factor slice by slice gives the closed form
//!
//! ```text
//! vol(B_R(m)) = gamma_N * sum_{m' in M°, d(m,m') < R} mu(m') (R - d(m,m'))^N
//! ```
//!
//! with `gamma_N = 2^N / N!` the volume of the unit l1 ball. All volumes are
//! handled as natural logarithms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::measure::SubspaceMeasure;
use crate::metric::FiniteMetricSpace;
use crate::numeric::{log_factorial, LogSumExp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LiftError {
    #[error("doubling constant must be at least 1, got {0}")]
    DoublingBelowOne(f64),
    #[error("lift dimension must be at least 1")]
    ZeroDimension,
    #[error("dilation parameter must exceed 1, got {0}")]
    BadDilation(f64),
    #[error("no admissible radius for any center")]
    NoAdmissibleRadius,
    #[error("radius must be positive and finite, got {0}")]
    NonPositiveRadius(f64),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("center index {0} out of range")]
    CenterOutOfRange(usize),
}

/// `e^4`.
pub fn e4() -> f64 {
    std::f64::consts::E.powi(4)
}

/// Upper bound `(6/5) e^4` on the dilation function at `l = 1 + 1/N`, valid
/// once `N >= floor(3 log2 D) + 5`.
pub fn dilation_bound() -> f64 {
    1.2 * e4()
}

/// `floor(3 log2 D)`.
fn log_term(doubling: f64) -> usize {
    (3.0 * doubling.log2()).floor() as usize
}

/// Lift dimension `floor(3 log2 D) + 6`.
pub fn choose_lift_dimension(doubling: f64) -> Result<usize, LiftError> {
    if !(doubling.is_finite() && doubling >= 1.0) {
        return Err(LiftError::DoublingBelowOne(doubling));
    }
    Ok(log_term(doubling) + 6)
}

/// Lift dimension together with the constants derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftConfig {
    dimension: usize,
    log_gamma: f64,
    base_doubling: f64,
}

impl LiftConfig {
    /// Configuration with the dimension chosen from the doubling constant.
    pub fn for_doubling(doubling: f64) -> Result<Self, LiftError> {
        Self::with_dimension(choose_lift_dimension(doubling)?, doubling)
    }

    /// Configuration with an explicit dimension, which need not satisfy the
    /// dimension hypotheses (see [`LiftConfig::dilation_hypothesis_holds`]).
    pub fn with_dimension(dimension: usize, base_doubling: f64) -> Result<Self, LiftError> {
        if dimension == 0 {
            return Err(LiftError::ZeroDimension);
        }
        if !(base_doubling.is_finite() && base_doubling >= 1.0) {
            return Err(LiftError::DoublingBelowOne(base_doubling));
        }
        Ok(Self {
            dimension,
            log_gamma: log_l1_ball_volume(dimension, 0.0),
            base_doubling,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `log gamma_N`, the log-volume of the unit l1 ball in `R^N`.
    pub fn log_gamma(&self) -> f64 {
        self.log_gamma
    }

    pub fn base_doubling(&self) -> f64 {
        self.base_doubling
    }

    /// `l = 1 + 1/N`.
    pub fn dilation_parameter(&self) -> f64 {
        1.0 + 1.0 / self.dimension as f64
    }

    /// `N >= floor(3 log2 D) + 5`, under which the dilation bound holds.
    pub fn dilation_hypothesis_holds(&self) -> bool {
        self.dimension >= log_term(self.base_doubling) + 5
    }

    /// `N >= floor(3 log2 D) + 6`, under which the layer bound holds.
    pub fn layer_hypothesis_holds(&self) -> bool {
        self.dimension >= log_term(self.base_doubling) + 6
    }
}

/// `log(gamma_N R^N) = N log 2 - log N! + N log R`.
pub fn log_l1_ball_volume(dimension: usize, log_radius: f64) -> f64 {
    let n = dimension as f64;
    n * std::f64::consts::LN_2 - log_factorial(dimension) + n * log_radius
}

/// Log of the lifted measure of the open ball of radius `radius` around
/// `(center, 0)`; `-inf` when no subspace point is closer than `radius`.
pub fn lifted_ball_volume(
    space: &FiniteMetricSpace,
    mu: &SubspaceMeasure,
    cfg: &LiftConfig,
    center: usize,
    radius: f64,
) -> f64 {
    let n = cfg.dimension() as f64;
    let row = space.row(center);
    let mut acc = LogSumExp::new();
    for (&j, &log_mass) in mu.subspace().indices().iter().zip(mu.log_masses()) {
        let d = row[j];
        if d < radius {
            acc.push(log_mass + n * (radius - d).ln());
        }
    }
    let sum = acc.value();
    if sum == f64::NEG_INFINITY {
        sum
    } else {
        cfg.log_gamma() + sum
    }
}

/// Lower estimate of the dilation function `D_N(l)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilationEstimate {
    pub value: f64,
    pub center: usize,
    pub radius: f64,
    pub radii_evaluated: usize,
}

/// Subspace distances and masses seen from one center, sorted by distance.
struct CenterProfile {
    dist: Vec<f64>,
    mass: Vec<f64>,
}

impl CenterProfile {
    fn new(space: &FiniteMetricSpace, mu: &SubspaceMeasure, center: usize) -> Self {
        let row = space.row(center);
        let mut pairs: Vec<(f64, f64)> = mu
            .subspace()
            .indices()
            .iter()
            .zip(mu.masses())
            .map(|(&j, &m)| (row[j], m))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (dist, mass) = pairs.into_iter().unzip();
        Self { dist, mass }
    }

    fn nearest(&self) -> f64 {
        self.dist[0]
    }

    /// `vol(B_{l R}) / vol(B_R)` for `R > nearest`, with every power divided
    /// by `(R - nearest)^N` so the denominator's leading term is 1.
    fn ratio(&self, dimension: i32, l: f64, radius: f64) -> f64 {
        let scale = radius - self.nearest();
        let outer = l * radius;
        let mut num = 0.0;
        let mut den = 0.0;
        for (&d, &m) in self.dist.iter().zip(&self.mass) {
            if d >= outer {
                break;
            }
            num += m * ((outer - d) / scale).powi(dimension);
            if d < radius {
                den += m * ((radius - d) / scale).powi(dimension);
            }
        }
        num / den
    }
}

/// Lower estimate of
/// `D_N(l) = sup vol(B_{lR}(m)) / vol(B_R(m))` over centers `m` of `M` and
/// radii `R > 4 d(m, M°)`.
///
/// For each center the ratio is evaluated at every subspace distance, each of
/// those divided by `l`, the radius just above the admissibility boundary,
/// and `radii_per_center` stratified random radii on a geometric grid up to
/// four diameters. The result is deterministic in `seed`; ties keep the
/// smallest `(center, radius)`.
pub fn dilation_estimate(
    space: &FiniteMetricSpace,
    mu: &SubspaceMeasure,
    cfg: &LiftConfig,
    l: f64,
    radii_per_center: usize,
    seed: u64,
) -> Result<DilationEstimate, LiftError> {
    if !(l.is_finite() && l > 1.0) {
        return Err(LiftError::BadDilation(l));
    }
    let dimension = i32::try_from(cfg.dimension()).map_err(|_| LiftError::ZeroDimension)?;
    let top = 4.0 * if space.diameter() > 0.0 { space.diameter() } else { 1.0 };
    let mut best: Option<DilationEstimate> = None;
    let mut evaluated = 0usize;
    let mut radii: Vec<f64> = Vec::new();

    for center in 0..space.len() {
        let profile = CenterProfile::new(space, mu, center);
        let boundary = 4.0 * profile.nearest();

        radii.clear();
        for &d in &profile.dist {
            if d > 0.0 {
                radii.push(d);
                radii.push(d / l);
            }
        }
        let low = if boundary > 0.0 {
            radii.push(boundary * (1.0 + 1e-6));
            boundary
        } else {
            top * 1e-4
        };
        if radii_per_center > 0 && top > low {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(center as u64);
            let span = (top / low).ln();
            let cells = radii_per_center as f64;
            for k in 0..radii_per_center {
                let u: f64 = rng.random();
                radii.push(low * (span * (k as f64 + u) / cells).exp());
            }
        }
        radii.retain(|&r| r > boundary && r.is_finite());
        radii.sort_by(f64::total_cmp);
        radii.dedup();

        for &r in &radii {
            let mut ratio = profile.ratio(dimension, l, r);
            if !ratio.is_finite() {
                let outer = lifted_ball_volume(space, mu, cfg, center, l * r);
                let inner = lifted_ball_volume(space, mu, cfg, center, r);
                ratio = (outer - inner).exp();
            }
            evaluated += 1;
            if best.is_none_or(|b| ratio > b.value) {
                best = Some(DilationEstimate {
                    value: ratio,
                    center,
                    radius: r,
                    radii_evaluated: 0,
                });
            }
        }
    }

    best.map(|b| DilationEstimate {
        radii_evaluated: evaluated,
        ..b
    })
    .ok_or(LiftError::NoAdmissibleRadius)
}

/// Outcome of one layer inequality check. Volumes are reported relative to
/// the outer ball's volume `exp(log_outer_volume)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerCheck {
    pub log_outer_volume: f64,
    /// `(vol(B_R2) - vol(B_R1)) / vol(B_R2)`.
    pub lhs_relative: f64,
    /// `A_N (R2 - R1) / R2`.
    pub rhs_relative: f64,
    pub holds: bool,
}

impl LayerCheck {
    pub fn lhs(&self) -> f64 {
        self.lhs_relative * self.log_outer_volume.exp()
    }

    pub fn rhs(&self) -> f64 {
        self.rhs_relative * self.log_outer_volume.exp()
    }

    /// `(rhs - lhs) / rhs`; zero for an empty layer.
    pub fn slack(&self) -> f64 {
        if self.rhs_relative == 0.0 {
            if self.lhs_relative == 0.0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            (self.rhs_relative - self.lhs_relative) / self.rhs_relative
        }
    }
}

/// Relative tolerance applied to every lemma inequality.
pub const LEMMA_TOLERANCE: f64 = 1e-9;

/// Check `vol(B_R2 \ B_R1) <= A_N vol(B_R2) (R2 - R1) / R2` around `center`.
///
/// Requires `R2 >= max(R1, 8 d(center, M°))` and a lift dimension of at least
/// `floor(3 log2 D) + 6`.
pub fn layer_bound_check(
    space: &FiniteMetricSpace,
    mu: &SubspaceMeasure,
    cfg: &LiftConfig,
    center: usize,
    r1: f64,
    r2: f64,
) -> Result<LayerCheck, LiftError> {
    if center >= space.len() {
        return Err(LiftError::CenterOutOfRange(center));
    }
    for r in [r1, r2] {
        if !(r.is_finite() && r > 0.0) {
            return Err(LiftError::NonPositiveRadius(r));
        }
    }
    if r2 < r1 {
        return Err(LiftError::PreconditionViolated(format!(
            "outer radius {r2} is smaller than inner radius {r1}"
        )));
    }
    let dist = mu.subspace().nearest(space, center).1;
    if r2 < 8.0 * dist {
        return Err(LiftError::PreconditionViolated(format!(
            "outer radius {r2} is below 8 * dist = {}",
            8.0 * dist
        )));
    }
    if !cfg.layer_hypothesis_holds() {
        return Err(LiftError::PreconditionViolated(format!(
            "lift dimension {} is below floor(3 log2 D) + 6 for D = {}",
            cfg.dimension(),
            cfg.base_doubling()
        )));
    }

    let outer = lifted_ball_volume(space, mu, cfg, center, r2);
    let inner = lifted_ball_volume(space, mu, cfg, center, r1);
    let lhs_relative = if inner == f64::NEG_INFINITY {
        1.0
    } else {
        -(inner - outer).exp_m1()
    };
    let a_n = bound_constants(cfg).a_n;
    let rhs_relative = a_n * (r2 - r1) / r2;
    Ok(LayerCheck {
        log_outer_volume: outer,
        lhs_relative,
        rhs_relative,
        holds: lhs_relative <= rhs_relative * (1.0 + LEMMA_TOLERANCE),
    })
}

/// Explicit constants bounding the extension operator's norm for a given
/// lift dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    /// `A_N = (12/5) e^4 N`.
    pub a_n: f64,
    /// `l = 1 + 1/N`.
    pub l: f64,
    /// Bound used for `D_N(l)`: `(6/5) e^4`.
    pub dilation_bound: f64,
    /// `K_N(l) = A_N D_N(l) (4l + 1)`.
    pub k_n: f64,
    /// `(4l + 1) / (2(l - 1))`, the far-pair constant.
    pub far_pair: f64,
    /// `20 A_N + max(far_pair, K_N)`.
    pub prop_bound: f64,
    /// End-to-end norm bound for this dimension; equal to `prop_bound`.
    pub theorem_bound: f64,
}

pub fn bound_constants(cfg: &LiftConfig) -> BoundConstants {
    let n = cfg.dimension() as f64;
    let a_n = 2.4 * e4() * n;
    let l = 1.0 + 1.0 / n;
    let dilation_bound = dilation_bound();
    let k_n = a_n * dilation_bound * (4.0 * l + 1.0);
    let far_pair = (4.0 * l + 1.0) / (2.0 * (l - 1.0));
    let prop_bound = 20.0 * a_n + far_pair.max(k_n);
    BoundConstants {
        a_n,
        l,
        dilation_bound,
        k_n,
        far_pair,
        prop_bound,
        theorem_bound: prop_bound,
    }
}

/// A constant `C` with `prop_bound <= C (log2 D + 2)` whenever the lift
/// dimension is chosen by [`choose_lift_dimension`].
///
/// `prop_bound = a (20 N + 5 B N + 4 B)` with `a = (12/5) e^4` and
/// `B = (6/5) e^4`, and `N <= 3 (log2 D + 2)`, `1 <= (log2 D + 2) / 2`.
pub fn explicit_log_constant() -> f64 {
    let a = 2.4 * e4();
    let b = dilation_bound();
    a * (3.0 * (20.0 + 5.0 * b) + 2.0 * b)
}
