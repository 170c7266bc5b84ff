//! The verification suite run by `verify` and `report`.

use std::fmt;
use std::time::Instant;

use lipext_core::fields::derive_seed;
use lipext_core::lemmas::pair_lemma_checks;
use lipext_core::lift::LEMMA_TOLERANCE;
use lipext_core::{
    bound_constants, choose_lift_dimension, delta_covering_constant, dilation_estimate,
    doubling_constant, gen_lipschitz_field, layer_bound_check, lipschitz_seminorm,
    operator_norm_lower_bound, CoverExactness, ExtensionError, ExtensionOperator, FieldFamily,
    LiftConfig, Norm, VectorField,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::HarnessError;
use crate::instance::Instance;
use crate::report::ReportRow;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    /// Random `(center, R1, R2)` layer triples.
    pub layer_samples: usize,
    /// Off-subspace point pairs for the pairwise lemma checks.
    pub lemma_pairs: usize,
    /// Random fields for the operator norm lower bound.
    pub norm_trials: usize,
    /// Fields per exactness / monotonicity / invariance check.
    pub property_fields: usize,
    pub linearity_trials: usize,
    pub dilation_radii: usize,
    /// Field dimension and norm for the vector-valued checks.
    pub k: usize,
    pub norm: Norm,
    /// The covering constant is skipped on subspaces larger than this.
    pub delta_limit: usize,
    pub record_timings: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            layer_samples: 1000,
            lemma_pairs: 200,
            norm_trials: 200,
            property_fields: 100,
            linearity_trials: 50,
            dilation_radii: 64,
            k: 2,
            norm: Norm::L2,
            delta_limit: 256,
            record_timings: false,
        }
    }
}

/// Result of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Number of individual comparisons made.
    pub cases: usize,
    /// Smallest relative slack seen, where meaningful.
    pub worst_slack: Option<f64>,
    /// Description of the first failure, or of the extremal case.
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} cases={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.cases
        )?;
        if let Some(s) = self.worst_slack {
            write!(f, " worst_slack={s:.6e}")?;
        }
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub row: ReportRow,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteOutcome {
    pub fn all_pass(&self) -> bool {
        self.row.all_pass
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Tracks a failing case count and the worst slack of a family of checks.
struct Tally {
    name: &'static str,
    cases: usize,
    failures: usize,
    worst: Option<f64>,
    detail: String,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            worst: None,
            detail: String::new(),
        }
    }

    /// Record one case. The detail of the first failure is kept; until a
    /// failure occurs the detail tracks the worst case.
    fn record(&mut self, ok: bool, slack: Option<f64>, detail: impl FnOnce() -> String) {
        self.cases += 1;
        let worse = match (slack, self.worst) {
            (Some(s), Some(w)) => s < w,
            (Some(_), None) => true,
            _ => false,
        };
        if worse {
            self.worst = slack;
        }
        if !ok {
            if self.failures == 0 {
                self.detail = detail();
            }
            self.failures += 1;
        } else if worse && self.failures == 0 {
            self.detail = detail();
        }
    }

    fn fail(&mut self, detail: String) {
        self.cases += 1;
        if self.failures == 0 {
            self.detail = detail;
        }
        self.failures += 1;
    }

    fn finish(self) -> CheckOutcome {
        let detail = if self.failures > 1 {
            format!("failures={} first: {}", self.failures, self.detail)
        } else {
            self.detail
        };
        CheckOutcome {
            name: self.name,
            passed: self.failures == 0,
            cases: self.cases,
            worst_slack: self.worst,
            detail,
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Run every check on `instance`, deterministically in `seed`.
///
/// Order: doubling constant, lift dimension, constants, covering constant,
/// dilation sweep, layer sweep, pairwise lemma checks, operator norm lower
/// bound, then exactness, linearity, monotonicity, scale, affine and
/// permutation properties of the extension.
pub fn run_verification_suite(
    instance: &Instance,
    cfg: &SuiteConfig,
    seed: u64,
) -> Result<SuiteOutcome, HarnessError> {
    let started = Instant::now();
    let space = &instance.space;
    let mu = &instance.measure;
    let sub = mu.subspace();
    let n = space.len();
    let mut flags: Vec<String> = Vec::new();
    let mut checks = Vec::new();

    let doubling = doubling_constant(space, mu);
    let chosen = choose_lift_dimension(doubling.value)?;
    let dimension = instance.lift_dimension.unwrap_or(chosen);
    let lift = LiftConfig::with_dimension(dimension, doubling.value)?;
    let consts = bound_constants(&lift);

    let mut hypothesis = Tally::new("lift_hypothesis");
    hypothesis.record(
        lift.dilation_hypothesis_holds() && lift.layer_hypothesis_holds(),
        None,
        || format!("N={dimension} chosen={chosen} D={}", doubling.value),
    );
    checks.push(hypothesis.finish());

    let delta = if sub.len() <= cfg.delta_limit {
        let cover = delta_covering_constant(&space.restrict(sub));
        if cover.exactness == CoverExactness::GreedyUpperBound {
            flags.push("DeltaGreedy".into());
        }
        if (cover.value as f64).log2() > 4.0 * doubling.value.log2() + 4.0 {
            flags.push("CoveringAboveDoublingBound".into());
        }
        Some(cover.value as f64)
    } else {
        flags.push("DeltaSkipped".into());
        None
    };

    // dilation sweep
    let mut dil = Tally::new("dilation");
    let dilation = dilation_estimate(space, mu, &lift, consts.l, cfg.dilation_radii, derive_seed(seed, 1))?;
    dil.cases = dilation.radii_evaluated.saturating_sub(1);
    dil.record(
        dilation.value <= consts.dilation_bound * (1.0 + LEMMA_TOLERANCE),
        Some((consts.dilation_bound - dilation.value) / consts.dilation_bound),
        || {
            format!(
                "value={:.9e} bound={:.9e} center={} radius={:.9e}",
                dilation.value, consts.dilation_bound, dilation.center, dilation.radius
            )
        },
    );
    checks.push(dil.finish());

    // layer sweep
    let mut layer = Tally::new("layer");
    if !lift.layer_hypothesis_holds() {
        layer.fail(format!(
            "lift dimension {dimension} is below the layer requirement for D={}",
            doubling.value
        ));
    } else {
        let mut rng = rng_for(seed, 2);
        let diameter = space.diameter();
        let scale = if diameter > 0.0 { diameter } else { 1.0 };
        for _ in 0..cfg.layer_samples {
            let center = rng.random_range(0..n);
            let dist = sub.nearest(space, center).1;
            let lo = if dist > 0.0 { 8.0 * dist } else { scale * 1e-3 };
            let hi = (16.0 * scale).max(2.0 * lo);
            let r2 = lo * (hi / lo).powf(rng.random::<f64>());
            // half the inner radii close to the outer one
            let t: f64 = rng.random();
            let r1 = if rng.random_bool(0.5) { r2 * (1.0 - 0.1 * t) } else { r2 * t.max(1e-12) };
            let check = layer_bound_check(space, mu, &lift, center, r1, r2)?;
            layer.record(check.holds, Some(check.slack()), || {
                format!(
                    "center={center} r1={r1:.9e} r2={r2:.9e} lhs_rel={:.9e} rhs_rel={:.9e}",
                    check.lhs_relative, check.rhs_relative
                )
            });
        }
    }
    let layer_worst = layer.worst;
    checks.push(layer.finish());

    let degenerate = sub.len() < 2;
    if degenerate {
        flags.push("DegenerateSubspace".into());
    }

    // pairwise lemma checks
    let outside = sub.complement();
    let mut pairs = Tally::new("pair_lemmas");
    if !degenerate && outside.len() >= 2 {
        let mut rng = rng_for(seed, 3);
        for t in 0..cfg.lemma_pairs {
            let a = outside[rng.random_range(0..outside.len())];
            let mut b = outside[rng.random_range(0..outside.len() - 1)];
            if b == a {
                b = *outside.last().expect("two outside points");
            }
            let family = FieldFamily::ALL[t % FieldFamily::ALL.len()];
            let field = gen_lipschitz_field(space, sub, family, cfg.k, cfg.norm, derive_seed(seed, 1000 + t as u64))?;
            let rep = pair_lemma_checks(space, mu, &lift, &field, a, b)?;
            for (name, c) in rep.checks() {
                pairs.record(c.holds, Some(c.slack()), || {
                    format!(
                        "{name} i1={} i2={} value={:.9e} bound={:.9e} regime={:?}",
                        rep.i1, rep.i2, c.value, c.bound, rep.regime
                    )
                });
            }
        }
    }
    checks.push(pairs.finish());

    // operator norm
    let mut norm_check = Tally::new("norm_bound");
    let norm_lower = if degenerate {
        None
    } else {
        let est = operator_norm_lower_bound(space, mu, &lift, cfg.norm_trials, cfg.k, cfg.norm, derive_seed(seed, 4))?;
        norm_check.cases = est.trials + est.basis_fields - 1;
        norm_check.record(
            est.lower_bound <= consts.prop_bound,
            Some((consts.prop_bound - est.lower_bound) / consts.prop_bound),
            || {
                format!(
                    "lower={:.9e} bound={:.9e} gap={:.3e} field={}",
                    est.lower_bound,
                    consts.prop_bound,
                    consts.prop_bound / est.lower_bound,
                    est.best_field
                )
            },
        );
        Some(est.lower_bound)
    };
    checks.push(norm_check.finish());

    checks.extend(property_checks(instance, &lift, cfg, seed)?);

    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    let all_pass = failed.is_empty();
    flags.extend(failed.iter().map(|f| format!("FAIL:{f}")));

    let row = ReportRow {
        instance: instance.name.clone(),
        n,
        subspace_size: sub.len(),
        doubling_constant: doubling.value,
        delta_covering: delta,
        lift_dimension: dimension,
        a_n: consts.a_n,
        prop_bound: consts.prop_bound,
        norm_lower_bound: norm_lower,
        dilation_estimate: Some(dilation.value),
        layer_worst_slack: layer_worst,
        flags: flags.join(";"),
        all_pass,
        wall_time_ms: cfg
            .record_timings
            .then(|| started.elapsed().as_millis() as u64),
    }
    .rounded();
    Ok(SuiteOutcome { row, checks })
}

/// Fields on the subspace for the property checks: the Lipschitz families
/// when the subspace has two points, uniform values otherwise.
fn property_field(
    instance: &Instance,
    k: usize,
    norm: Norm,
    seed: u64,
    t: usize,
) -> Result<VectorField, HarnessError> {
    let sub = instance.subspace();
    let s = derive_seed(seed, t as u64);
    if sub.len() >= 2 {
        let family = FieldFamily::ALL[t % FieldFamily::ALL.len()];
        Ok(gen_lipschitz_field(&instance.space, sub, family, k, norm, s)?)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let values = (0..sub.len() * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        Ok(VectorField::from_flat(k, values, norm).map_err(ExtensionError::from)?)
    }
}

fn max_abs(f: &VectorField) -> f64 {
    f.as_flat().iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_coord_gap(a: &VectorField, b: &VectorField) -> f64 {
    a.as_flat()
        .iter()
        .zip(b.as_flat())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

const PROPERTY_TOLERANCE: f64 = 1e-10;

fn property_checks(
    instance: &Instance,
    lift: &LiftConfig,
    cfg: &SuiteConfig,
    seed: u64,
) -> Result<Vec<CheckOutcome>, HarnessError> {
    let space = &instance.space;
    let mu = &instance.measure;
    let sub = mu.subspace();
    let op = ExtensionOperator::new(space, mu, lift)?;
    let field_seed = derive_seed(seed, 5);

    let mut exact = Tally::new("exactness");
    let mut affine = Tally::new("affine");
    let mut perm = Tally::new("permutation");
    let mut rng = rng_for(seed, 6);
    for t in 0..cfg.property_fields {
        let f = property_field(instance, cfg.k, cfg.norm, field_seed, t)?;
        let ef = op.apply(&f)?;
        let mut mismatch = None;
        for (pos, &p) in sub.indices().iter().enumerate() {
            if ef.value(p) != f.value(pos) {
                mismatch = Some(p);
                break;
            }
        }
        exact.record(mismatch.is_none(), None, || {
            format!("field={t} point={}", mismatch.unwrap_or_default())
        });

        let a = rng.random_range(-3.0..3.0);
        let shift: Vec<f64> = (0..cfg.k).map(|_| rng.random_range(-5.0..5.0)).collect();
        let g = f.scaled(a).and_then(|g| g.translated(&shift)).map_err(ExtensionError::from)?;
        let expected = ef.scaled(a).and_then(|e| e.translated(&shift)).map_err(ExtensionError::from)?;
        let gap = max_coord_gap(&op.apply(&g)?, &expected);
        let tol = PROPERTY_TOLERANCE * (a.abs() * max_abs(&f) + shift.iter().fold(0.0, |m: f64, x| m.max(x.abs())) + 1.0);
        affine.record(gap <= tol, None, || format!("field={t} gap={gap:.3e} tol={tol:.3e}"));

        let mut order: Vec<usize> = (0..cfg.k).collect();
        order.shuffle(&mut rng);
        let lhs = op.apply(&f.permuted(&order).map_err(ExtensionError::from)?)?;
        let rhs = ef.permuted(&order).map_err(ExtensionError::from)?;
        perm.record(lhs == rhs, None, || format!("field={t} permutation={order:?}"));
    }

    let mut lin = Tally::new("linearity");
    let diameter = space.diameter();
    for t in 0..cfg.linearity_trials {
        let f = property_field(instance, cfg.k, cfg.norm, derive_seed(seed, 7), 2 * t)?;
        let g = property_field(instance, cfg.k, cfg.norm, derive_seed(seed, 7), 2 * t + 1)?;
        let (alpha, beta) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let combo = f.linear_combination(alpha, &g, beta).map_err(ExtensionError::from)?;
        let lhs = op.apply(&combo)?;
        let rhs = op
            .apply(&f)?
            .linear_combination(alpha, &op.apply(&g)?, beta)
            .map_err(ExtensionError::from)?;
        let err = lhs
            .iter()
            .zip(rhs.iter())
            .map(|(x, y)| cfg.norm.distance(x, y))
            .fold(0.0, f64::max);
        let lf = lipschitz_seminorm(space, sub.indices(), &f).map_err(ExtensionError::from)?.value;
        let lg = lipschitz_seminorm(space, sub.indices(), &g).map_err(ExtensionError::from)?.value;
        let mut bound = 1e-9 * (alpha.abs() * lf + beta.abs() * lg) * diameter;
        if bound == 0.0 {
            // constant fields on a one-point subspace
            bound = 1e-9 * (alpha.abs() * max_abs(&f) + beta.abs() * max_abs(&g));
        }
        lin.record(err <= bound, (bound > 0.0).then(|| (bound - err) / bound), || {
            format!("trial={t} error={err:.3e} bound={bound:.3e}")
        });
    }

    let mut mono = Tally::new("monotonicity");
    let mut range = Tally::new("range");
    let mut scale = Tally::new("scale_invariance");
    let factor = 7.25;
    let scaled_space = space.scaled(factor)?;
    let scaled_mu = lipext_core::SubspaceMeasure::new(
        lipext_core::Subspace::new(&scaled_space, sub.indices().to_vec())?,
        mu.masses().to_vec(),
    )?;
    let scaled_op = ExtensionOperator::new(&scaled_space, &scaled_mu, lift)?;
    for t in 0..cfg.property_fields {
        let f = property_field(instance, 1, Norm::L1, derive_seed(seed, 8), t)?;
        let ef = op.apply(&f)?;
        let bump: Vec<f64> = (0..sub.len()).map(|_| rng.random_range(0.0..1.0)).collect();
        let g = VectorField::from_flat(
            1,
            f.as_flat().iter().zip(&bump).map(|(x, b)| x + b).collect(),
            Norm::L1,
        )
        .map_err(ExtensionError::from)?;
        let eg = op.apply(&g)?;
        let worst = ef
            .as_flat()
            .iter()
            .zip(eg.as_flat())
            .enumerate()
            .map(|(i, (x, y))| (i, x - y))
            .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        let tol = PROPERTY_TOLERANCE * (max_abs(&g) + 1.0);
        mono.record(worst.1 <= tol, None, || {
            format!("field={t} point={} excess={:.3e}", worst.0, worst.1)
        });

        let lo = f.as_flat().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = f.as_flat().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = PROPERTY_TOLERANCE * (max_abs(&f) + 1.0);
        let outside = ef
            .as_flat()
            .iter()
            .position(|&v| v < lo - tol || v > hi + tol);
        range.record(outside.is_none(), None, || {
            format!("field={t} point={} range=[{lo}, {hi}]", outside.unwrap_or_default())
        });

        let gap = max_coord_gap(&scaled_op.apply(&f)?, &ef);
        let tol = PROPERTY_TOLERANCE * (max_abs(&f) + f64::MIN_POSITIVE);
        scale.record(gap <= tol, None, || format!("field={t} gap={gap:.3e}"));
    }

    Ok(vec![
        exact.finish(),
        lin.finish(),
        mono.finish(),
        range.finish(),
        scale.finish(),
        affine.finish(),
        perm.finish(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_instance, Family, SubspaceRule};
    use crate::instance::{DistanceSpec, InstanceFile};

    fn small() -> SuiteConfig {
        SuiteConfig {
            layer_samples: 100,
            lemma_pairs: 20,
            norm_trials: 8,
            property_fields: 10,
            linearity_trials: 5,
            dilation_radii: 8,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn path_even_passes() {
        let f = generate_instance(Family::Path, &"n=16".parse().unwrap(), SubspaceRule::Even, 0)
            .unwrap();
        let out = run_verification_suite(&f.validate().unwrap(), &small(), 1).unwrap();
        for c in &out.checks {
            assert!(c.passed, "{c}");
        }
        assert!(out.all_pass());
        assert_eq!(out.row.flags, "");
        let lower = out.row.norm_lower_bound.unwrap();
        assert!(lower >= 1.0 && lower <= out.row.prop_bound);
    }

    #[test]
    fn singleton_is_degenerate_but_passes() {
        let f = InstanceFile {
            version: 1,
            name: "one".into(),
            points: vec!["p".into()],
            distance: DistanceSpec::Matrix { values: vec![vec![0.0]] },
            subspace: vec![0],
            measure: vec![1.0],
            lift_dimension: None,
        };
        let out = run_verification_suite(&f.validate().unwrap(), &small(), 0).unwrap();
        assert!(out.all_pass(), "{:?}", out.checks);
        assert!(out.row.flags.contains("DegenerateSubspace"));
        assert_eq!(out.row.norm_lower_bound, None);
    }

    #[test]
    fn tampered_dimension_fails() {
        let mut f = generate_instance(Family::Path, &"n=12".parse().unwrap(), SubspaceRule::Even, 0)
            .unwrap();
        let honest = run_verification_suite(&f.validate().unwrap(), &small(), 0).unwrap();
        f.lift_dimension = Some(honest.row.lift_dimension - 4);
        let out = run_verification_suite(&f.validate().unwrap(), &small(), 0).unwrap();
        assert!(!out.all_pass());
        assert!(out.row.flags.contains("FAIL:layer"));
        assert!(!out.check("lift_hypothesis").unwrap().passed);
    }

    #[test]
    fn deterministic_in_seed() {
        let f = generate_instance(Family::RandomBall, &"n=30,d=2".parse().unwrap(), SubspaceRule::RandomP, 4)
            .unwrap();
        let inst = f.validate().unwrap();
        let a = run_verification_suite(&inst, &small(), 9).unwrap();
        let b = run_verification_suite(&inst, &small(), 9).unwrap();
        assert_eq!(a.row, b.row);
        assert_eq!(a.checks, b.checks);
    }
}
