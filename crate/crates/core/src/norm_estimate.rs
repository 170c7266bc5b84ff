//! Lower bounds on the operator norm `sup L(Ef) / L(f)`.
//!
//! The supremum runs over an infinite-dimensional class, so it is only
//! estimated from below by trying concrete fields; the explicit upper bound
//! comes from [`crate::lift::bound_constants`].

use crate::extension::{ExtensionError, ExtensionOperator};
use crate::fields::{bump_values, derive_seed, gen_lipschitz_field, FieldFamily};
use crate::lift::{bound_constants, LiftConfig};
use crate::measure::SubspaceMeasure;
use crate::metric::{lipschitz_seminorm, FiniteMetricSpace, Norm, VectorField};

/// `L(Ef) / L(f)` for one field, next to the explicit bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBoundReport {
    pub lipschitz_ratio: f64,
    pub bound: f64,
    /// Pair of points of `M` attaining `L(Ef)`.
    pub witness_pair: Option<(usize, usize)>,
}

/// Where the best field of an estimate came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldTag {
    /// Bump of radius `radius` centered at subspace point `center`.
    Basis { center: usize, radius: f64 },
    Random { family: FieldFamily, seed: u64 },
}

impl std::fmt::Display for FieldTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldTag::Basis { center, radius } => write!(f, "basis:bump@{center}/r={radius}"),
            FieldTag::Random { family, seed } => write!(f, "{family}:seed={seed}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNormEstimate {
    pub lower_bound: f64,
    pub trials: usize,
    pub basis_fields: usize,
    pub best_field: FieldTag,
    pub witness_pair: Option<(usize, usize)>,
    pub bound: f64,
}

/// Measure `L(Ef) / L(f)` with `L(f)` over the subspace and `L(Ef)` over all
/// of `M`. Returns `None` for a field that is constant up to rounding, whose
/// ratio would only measure rounding noise.
pub fn extension_ratio(
    space: &FiniteMetricSpace,
    mu: &SubspaceMeasure,
    op: &ExtensionOperator,
    field: &VectorField,
    bound: f64,
) -> Result<Option<NormBoundReport>, ExtensionError> {
    let inner = lipschitz_seminorm(space, mu.subspace().indices(), field)?;
    if inner.value == 0.0 || inner.is_negligible(space.diameter(), field) {
        return Ok(None);
    }
    let extended = op.apply(field)?;
    let all: Vec<usize> = (0..space.len()).collect();
    let outer = lipschitz_seminorm(space, &all, &extended)?;
    Ok(Some(NormBoundReport {
        lipschitz_ratio: outer.value / inner.value,
        bound,
        witness_pair: outer.witness,
    }))
}

/// Lower bound on the operator norm from `trials` random fields (cycling
/// through every [`FieldFamily`]) plus two bumps around every subspace point:
/// one spike of radius equal to the nearest-neighbour distance in the
/// subspace and one of twice that radius.
///
/// Trial `t` uses the seed `derive_seed(seed, t)`; ties keep the earliest
/// field, basis fields first.
pub fn operator_norm_lower_bound(
    space: &FiniteMetricSpace,
    mu: &SubspaceMeasure,
    cfg: &LiftConfig,
    trials: usize,
    k: usize,
    norm: Norm,
    seed: u64,
) -> Result<OperatorNormEstimate, ExtensionError> {
    let sub = mu.subspace();
    if sub.len() < 2 {
        return Err(ExtensionError::DegenerateSubspace);
    }
    let bound = bound_constants(cfg).prop_bound;
    let op = ExtensionOperator::new(space, mu, cfg)?;
    let points = sub.indices();
    let mut best: Option<(NormBoundReport, FieldTag)> = None;
    let mut consider = |report: Option<NormBoundReport>, tag: FieldTag| {
        if let Some(r) = report {
            if best.is_none_or(|(b, _)| r.lipschitz_ratio > b.lipschitz_ratio) {
                best = Some((r, tag));
            }
        }
    };

    let mut basis_fields = 0;
    for &p in points {
        let row = space.row(p);
        let nearest = points
            .iter()
            .filter(|&&q| q != p)
            .map(|&q| row[q])
            .fold(f64::INFINITY, f64::min);
        for radius in [nearest, 2.0 * nearest] {
            let bump = bump_values(space, points, p, radius);
            let mut values = vec![0.0; points.len() * k];
            for (pos, v) in bump.into_iter().enumerate() {
                values[pos * k] = v;
            }
            let field = VectorField::from_flat(k, values, norm)?;
            consider(
                extension_ratio(space, mu, &op, &field, bound)?,
                FieldTag::Basis { center: p, radius },
            );
            basis_fields += 1;
        }
    }

    for t in 0..trials {
        let family = FieldFamily::ALL[t % FieldFamily::ALL.len()];
        let trial_seed = derive_seed(seed, t as u64);
        let field = gen_lipschitz_field(space, sub, family, k, norm, trial_seed)?;
        consider(
            extension_ratio(space, mu, &op, &field, bound)?,
            FieldTag::Random {
                family,
                seed: trial_seed,
            },
        );
    }

    let (report, tag) = best.expect("basis bumps are never constant on two points");
    Ok(OperatorNormEstimate {
        lower_bound: report.lipschitz_ratio,
        trials,
        basis_fields,
        best_field: tag,
        witness_pair: report.witness_pair,
        bound,
    })
}
