//! The linear extension operator.
//!
//! A point of the subspace keeps its value. Any other point `i` receives the
//! average of the lifted field over the lifted ball of radius
//! `R = 8 d(i, M°)`; after integrating out the `R^N` factor this is a finite
//! weighted mean with weights `mu(m') (R - d(i, m'))^N` over subspace points
//! closer than `R`.

use thiserror::Error;

use crate::lift::LiftConfig;
use crate::measure::SubspaceMeasure;
use crate::metric::{FieldError, FiniteMetricSpace, Subspace, VectorField};
use crate::numeric::LogSumExp;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtensionError {
    #[error("no subspace point lies within radius {radius} of point {point}")]
    EmptyBall { point: usize, radius: f64 },
    #[error("point index {0} out of range")]
    PointOutOfRange(usize),
    #[error("expected a scalar field, got dimension {0}")]
    NotScalar(usize),
    #[error("the subspace needs at least two points")]
    DegenerateSubspace,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Averaging weights for one evaluation point, kept in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionWeights {
    pub eval_point: usize,
    pub radius: f64,
    /// `(subspace position, log weight)` for every subspace point closer than
    /// `radius`.
    pub support: Vec<(usize, f64)>,
    /// Log of the sum of the weights.
    pub log_normalizer: f64,
}

impl ExtensionWeights {
    /// Weights divided by their sum, after shifting by the largest log weight.
    pub fn normalized(&self) -> Vec<(usize, f64)> {
        let max = self
            .support
            .iter()
            .map(|&(_, lw)| lw)
            .fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = self.support.iter().map(|&(_, lw)| (lw - max).exp()).collect();
        let total: f64 = raw.iter().sum();
        self.support
            .iter()
            .zip(raw)
            .map(|(&(pos, _), w)| (pos, w / total))
            .collect()
    }
}

/// What the operator does at one point of `M`.
#[derive(Debug, Clone, PartialEq)]
pub enum PointRule {
    /// The point is in the subspace at this position; its value is copied.
    InSubspace(usize),
    Average(ExtensionWeights),
}

/// Log weights `log mu(m') + N log(R - d(i, m'))` for `d(i, m') < R`.
pub fn weights_at_radius(
    space: &FiniteMetricSpace,
    mu: &SubspaceMeasure,
    cfg: &LiftConfig,
    i: usize,
    radius: f64,
) -> Result<ExtensionWeights, ExtensionError> {
    if i >= space.len() {
        return Err(ExtensionError::PointOutOfRange(i));
    }
    let n = cfg.dimension() as f64;
    let row = space.row(i);
    let mut acc = LogSumExp::new();
    let support: Vec<(usize, f64)> = mu
        .subspace()
        .indices()
        .iter()
        .zip(mu.log_masses())
        .enumerate()
        .filter(|(_, (&j, _))| row[j] < radius)
        .map(|(pos, (&j, &log_mass))| {
            let lw = log_mass + n * (radius - row[j]).ln();
            acc.push(lw);
            (pos, lw)
        })
        .collect();
    if support.is_empty() {
        return Err(ExtensionError::EmptyBall { point: i, radius });
    }
    Ok(ExtensionWeights {
        eval_point: i,
        radius,
        support,
        log_normalizer: acc.value(),
    })
}

/// The rule the operator applies at point `i`.
pub fn build_weights(
    space: &FiniteMetricSpace,
    mu: &SubspaceMeasure,
    cfg: &LiftConfig,
    i: usize,
) -> Result<PointRule, ExtensionError> {
    if i >= space.len() {
        return Err(ExtensionError::PointOutOfRange(i));
    }
    let sub = mu.subspace();
    if let Some(pos) = sub.position(i) {
        return Ok(PointRule::InSubspace(pos));
    }
    let dist = sub.nearest(space, i).1;
    weights_at_radius(space, mu, cfg, i, 8.0 * dist).map(PointRule::Average)
}

fn check_field(mu: &SubspaceMeasure, field: &VectorField) -> Result<(), ExtensionError> {
    if field.len() != mu.subspace().len() {
        return Err(FieldError::LengthMismatch {
            got: field.len(),
            expected: mu.subspace().len(),
        }
        .into());
    }
    Ok(())
}

fn weighted_mean(weights: &[(usize, f64)], field: &VectorField) -> Vec<f64> {
    let mut out = vec![0.0; field.dim()];
    for &(pos, w) in weights {
        for (o, v) in out.iter_mut().zip(field.value(pos)) {
            *o += w * v;
        }
    }
    out
}

/// Value of the extension of `field` (aligned with the subspace) at `i`.
pub fn evaluate_extension(
    space: &FiniteMetricSpace,
    mu: &SubspaceMeasure,
    cfg: &LiftConfig,
    field: &VectorField,
    i: usize,
) -> Result<Vec<f64>, ExtensionError> {
    check_field(mu, field)?;
    match build_weights(space, mu, cfg, i)? {
        PointRule::InSubspace(pos) => Ok(field.value(pos).to_vec()),
        PointRule::Average(w) => Ok(weighted_mean(&w.normalized(), field)),
    }
}

/// Weighted average of `field` over the lifted ball of radius `radius`
/// around `i`, whether or not `i` is in the subspace.
pub fn ave_at_radius(
    space: &FiniteMetricSpace,
    mu: &SubspaceMeasure,
    cfg: &LiftConfig,
    field: &VectorField,
    i: usize,
    radius: f64,
) -> Result<Vec<f64>, ExtensionError> {
    check_field(mu, field)?;
    let w = weights_at_radius(space, mu, cfg, i, radius)?;
    Ok(weighted_mean(&w.normalized(), field))
}

/// Extension of `field` to every point of `M`, in parent order.
pub fn apply_extension(
    space: &FiniteMetricSpace,
    mu: &SubspaceMeasure,
    cfg: &LiftConfig,
    field: &VectorField,
) -> Result<VectorField, ExtensionError> {
    ExtensionOperator::new(space, mu, cfg)?.apply(field)
}

#[derive(Debug, Clone)]
enum Rule {
    Copy(usize),
    Mix(Vec<(usize, f64)>),
}

/// The operator with all per-point weights precomputed, for applying to many
/// fields on the same instance.
#[derive(Debug, Clone)]
pub struct ExtensionOperator {
    rules: Vec<Rule>,
    subspace_len: usize,
}

impl ExtensionOperator {
    pub fn new(
        space: &FiniteMetricSpace,
        mu: &SubspaceMeasure,
        cfg: &LiftConfig,
    ) -> Result<Self, ExtensionError> {
        let rules = (0..space.len())
            .map(|i| {
                Ok(match build_weights(space, mu, cfg, i)? {
                    PointRule::InSubspace(pos) => Rule::Copy(pos),
                    PointRule::Average(w) => Rule::Mix(w.normalized()),
                })
            })
            .collect::<Result<_, ExtensionError>>()?;
        Ok(Self {
            rules,
            subspace_len: mu.subspace().len(),
        })
    }

    /// Number of points of `M`.
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Normalized weights used at `i`, or `None` on subspace points.
    pub fn weights(&self, i: usize) -> Option<&[(usize, f64)]> {
        match &self.rules[i] {
            Rule::Copy(_) => None,
            Rule::Mix(w) => Some(w),
        }
    }

    pub fn apply(&self, field: &VectorField) -> Result<VectorField, ExtensionError> {
        if field.len() != self.subspace_len {
            return Err(FieldError::LengthMismatch {
                got: field.len(),
                expected: self.subspace_len,
            }
            .into());
        }
        let mut values = Vec::with_capacity(self.rules.len() * field.dim());
        for rule in &self.rules {
            match rule {
                Rule::Copy(pos) => values.extend_from_slice(field.value(*pos)),
                Rule::Mix(w) => values.extend(weighted_mean(w, field)),
            }
        }
        Ok(VectorField::from_flat(field.dim(), values, field.norm())?)
    }
}

/// McShane extension `min_{m'} f(m') + L d(m, m')` of a scalar field on the
/// subspace, evaluated at `targets`. Subspace points among the targets keep
/// their value.
pub fn mcshane_extend(
    space: &FiniteMetricSpace,
    sources: &[usize],
    values: &[f64],
    lipschitz: f64,
    targets: &[usize],
) -> Vec<f64> {
    targets
        .iter()
        .map(|&m| {
            if let Some(p) = sources.iter().position(|&s| s == m) {
                return values[p];
            }
            let row = space.row(m);
            sources
                .iter()
                .zip(values)
                .map(|(&s, &v)| v + lipschitz * row[s])
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Nonlinear scalar baseline: McShane extension of `field` from `sub` to all
/// of `M` with constant `lipschitz`, which should be at least the field's
/// seminorm.
pub fn mcshane_baseline(
    space: &FiniteMetricSpace,
    sub: &Subspace,
    field: &VectorField,
    lipschitz: f64,
) -> Result<Vec<f64>, ExtensionError> {
    if field.dim() != 1 {
        return Err(ExtensionError::NotScalar(field.dim()));
    }
    if field.len() != sub.len() {
        return Err(FieldError::LengthMismatch {
            got: field.len(),
            expected: sub.len(),
        }
        .into());
    }
    let targets: Vec<usize> = (0..space.len()).collect();
    Ok(mcshane_extend(
        space,
        sub.indices(),
        field.as_flat(),
        lipschitz,
        &targets,
    ))
}
