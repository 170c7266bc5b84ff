//! Pairwise inequalities behind the norm bound, checked on computable
//! quantities.
//!
//! For two points `i1, i2` outside the subspace with `R1 <= R2` their
//! distances to it, the difference `Ef(i1) - Ef(i2)` splits as
//!
//! ```text
//! D1 = Ave(g; i1, 8 R1) - Ave(g; i1, 8 R2)
//! D2 = Ave(g; i1, 8 R2) - Ave(g; i2, 8 R2)
//! ```
//!
//! with `g = f - f(m*)` for the subspace point `m*` nearest to `i1`. The
//! checks below compare `|D1|`, `|D2|`, the lifted measure of the symmetric
//! difference of the two radius-`8 R2` balls and the difference of their
//! volumes against the explicit constants, with the dilation function
//! replaced by its bound `(6/5) e^4` at `l = 1 + 1/N`.

use crate::extension::{ave_at_radius, ExtensionError};
use crate::lift::{bound_constants, lifted_ball_volume, LiftConfig, LEMMA_TOLERANCE};
use crate::measure::SubspaceMeasure;
use crate::metric::{lipschitz_seminorm, FiniteMetricSpace, VectorField};
use crate::numeric::{log_diff_exp, LogSumExp};

/// `value <= bound` with the shared relative tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

impl InequalityCheck {
    pub fn new(value: f64, bound: f64) -> Self {
        Self {
            value,
            bound,
            holds: value <= bound * (1.0 + LEMMA_TOLERANCE),
        }
    }

    /// `(bound - value) / bound`.
    pub fn slack(&self) -> f64 {
        if self.bound == 0.0 {
            if self.value == 0.0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            (self.bound - self.value) / self.bound
        }
    }
}

/// Which bound applies to `D2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRegime {
    /// `d(i1, i2) <= 8 (l - 1) R2`: bound `K_N(l) d L`.
    Near,
    /// Otherwise: bound `(4l + 1) / (2(l - 1)) d L`.
    Far,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairLemmaReport {
    /// Points ordered so that `r1 <= r2`.
    pub i1: usize,
    pub i2: usize,
    pub r1: f64,
    pub r2: f64,
    pub distance: f64,
    pub lipschitz: f64,
    pub regime: PairRegime,
    /// `|D1| <= 20 A_N d L`.
    pub d1: InequalityCheck,
    /// `|D2|` against the regime's bound.
    pub d2: InequalityCheck,
    /// Relative symmetric-difference measure `vol(B12 Δ B22) / max(v12, v22)`
    /// against `A_N D d / (4 R2)`; near regime only.
    pub symmetric_difference: Option<InequalityCheck>,
    /// `|v12 - v22| / max(v12, v22)` against the same bound; near regime only.
    pub volume_difference: Option<InequalityCheck>,
}

impl PairLemmaReport {
    pub fn checks(&self) -> impl Iterator<Item = (&'static str, InequalityCheck)> + '_ {
        [
            Some(("d1", self.d1)),
            Some(("d2", self.d2)),
            self.symmetric_difference.map(|c| ("symmetric_difference", c)),
            self.volume_difference.map(|c| ("volume_difference", c)),
        ]
        .into_iter()
        .flatten()
    }

    pub fn all_hold(&self) -> bool {
        self.checks().all(|(_, c)| c.holds)
    }
}

/// Run every pairwise check for the off-subspace points `a != b`.
pub fn pair_lemma_checks(
    space: &FiniteMetricSpace,
    mu: &SubspaceMeasure,
    cfg: &LiftConfig,
    field: &VectorField,
    a: usize,
    b: usize,
) -> Result<PairLemmaReport, ExtensionError> {
    let sub = mu.subspace();
    for p in [a, b] {
        if p >= space.len() || sub.contains(p) {
            return Err(ExtensionError::PointOutOfRange(p));
        }
    }
    if a == b {
        return Err(ExtensionError::PointOutOfRange(b));
    }
    let (ra, rb) = (sub.nearest(space, a), sub.nearest(space, b));
    let ((i1, (star, r1)), (i2, (_, r2))) = if ra.1 <= rb.1 {
        ((a, ra), (b, rb))
    } else {
        ((b, rb), (a, ra))
    };
    let distance = space.dist(i1, i2);
    let lipschitz = lipschitz_seminorm(space, sub.indices(), field)?.value;
    let consts = bound_constants(cfg);
    let l = consts.l;
    let norm = field.norm();

    let shift: Vec<f64> = field.value(star).iter().map(|x| -x).collect();
    let g = field.translated(&shift)?;

    let ave_11 = ave_at_radius(space, mu, cfg, &g, i1, 8.0 * r1)?;
    let ave_12 = ave_at_radius(space, mu, cfg, &g, i1, 8.0 * r2)?;
    let ave_22 = ave_at_radius(space, mu, cfg, &g, i2, 8.0 * r2)?;

    let d1 = InequalityCheck::new(
        norm.distance(&ave_11, &ave_12),
        20.0 * consts.a_n * distance * lipschitz,
    );
    let d2_value = norm.distance(&ave_12, &ave_22);

    let near = distance <= 8.0 * (l - 1.0) * r2;
    let (regime, d2, symmetric_difference, volume_difference) = if near {
        let bound = consts.a_n * consts.dilation_bound * distance / (4.0 * r2);
        let (sym, vol) = ball_differences(space, mu, cfg, i1, i2, 8.0 * r2);
        (
            PairRegime::Near,
            InequalityCheck::new(d2_value, consts.k_n * distance * lipschitz),
            Some(InequalityCheck::new(sym, bound)),
            Some(InequalityCheck::new(vol, bound)),
        )
    } else {
        (
            PairRegime::Far,
            InequalityCheck::new(d2_value, consts.far_pair * distance * lipschitz),
            None,
            None,
        )
    };

    Ok(PairLemmaReport {
        i1,
        i2,
        r1,
        r2,
        distance,
        lipschitz,
        regime,
        d1,
        d2,
        symmetric_difference,
        volume_difference,
    })
}

/// Symmetric-difference measure and volume difference of the radius-`radius`
/// lifted balls around `i1` and `i2`, both relative to the larger volume.
///
/// The slices of the two balls over a subspace point `m'` are concentric l1
/// balls of radii `(radius - d(i, m'))+`, so the symmetric difference of the
/// slices has volume `gamma_N |a^N - b^N|`.
pub fn ball_differences(
    space: &FiniteMetricSpace,
    mu: &SubspaceMeasure,
    cfg: &LiftConfig,
    i1: usize,
    i2: usize,
    radius: f64,
) -> (f64, f64) {
    let n = cfg.dimension() as f64;
    let (row1, row2) = (space.row(i1), space.row(i2));
    let log_power = |d: f64| {
        if d < radius {
            n * (radius - d).ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut acc = LogSumExp::new();
    for (&j, &log_mass) in mu.subspace().indices().iter().zip(mu.log_masses()) {
        let (x, y) = (log_power(row1[j]), log_power(row2[j]));
        acc.push(log_mass + log_diff_exp(x.max(y), x.min(y)));
    }
    let log_sym = cfg.log_gamma() + acc.value();
    let v1 = lifted_ball_volume(space, mu, cfg, i1, radius);
    let v2 = lifted_ball_volume(space, mu, cfg, i2, radius);
    let (hi, lo) = (v1.max(v2), v1.min(v2));
    let sym = (log_sym - hi).exp();
    let vol = if lo == f64::NEG_INFINITY {
        1.0
    } else {
        -(lo - hi).exp_m1()
    };
    (sym, vol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::doubling_constant;
    use crate::metric::{Norm, Subspace};

    fn line(n: usize) -> FiniteMetricSpace {
        let coords: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        FiniteMetricSpace::from_coordinates(&coords, Norm::L2).unwrap()
    }

    #[test]
    fn checks_hold_on_a_line() {
        let s = line(20);
        let sub = Subspace::new(&s, vec![0, 1, 2, 3, 12, 13]).unwrap();
        let mu = SubspaceMeasure::counting(sub);
        let cfg = LiftConfig::for_doubling(doubling_constant(&s, &mu).value).unwrap();
        let f = VectorField::scalar(vec![0.0, 1.0, 0.0, 1.0, 3.0, 2.0]).unwrap();
        let outside: Vec<usize> = mu.subspace().complement();
        let mut near_seen = false;
        for &a in &outside {
            for &b in &outside {
                if a == b {
                    continue;
                }
                let rep = pair_lemma_checks(&s, &mu, &cfg, &f, a, b).unwrap();
                assert!(rep.r1 <= rep.r2);
                assert!(rep.all_hold(), "{rep:?}");
                near_seen |= rep.regime == PairRegime::Near;
            }
        }
        assert!(near_seen);
    }

    #[test]
    fn symmetric_difference_dominates_volume_difference() {
        let s = line(12);
        let mu = SubspaceMeasure::new(
            Subspace::new(&s, vec![0, 4, 5, 9]).unwrap(),
            vec![1.0, 0.3, 2.0, 1.0],
        )
        .unwrap();
        let cfg = LiftConfig::with_dimension(9, 2.0).unwrap();
        for (a, b) in [(1, 2), (2, 7), (10, 11), (3, 6)] {
            let (sym, vol) = ball_differences(&s, &mu, &cfg, a, b, 8.0);
            assert!(vol <= sym + 1e-15, "{vol} > {sym}");
            assert!(sym >= 0.0);
        }
        let (sym, vol) = ball_differences(&s, &mu, &cfg, 3, 3, 8.0);
        assert_eq!((sym, vol), (0.0, 0.0));
    }

    #[test]
    fn subspace_points_rejected() {
        let s = line(5);
        let mu = SubspaceMeasure::counting(Subspace::new(&s, vec![0, 4]).unwrap());
        let cfg = LiftConfig::for_doubling(2.0).unwrap();
        let f = VectorField::scalar(vec![0.0, 1.0]).unwrap();
        assert!(pair_lemma_checks(&s, &mu, &cfg, &f, 0, 2).is_err());
        assert!(pair_lemma_checks(&s, &mu, &cfg, &f, 2, 2).is_err());
        assert!(pair_lemma_checks(&s, &mu, &cfg, &f, 1, 2).is_ok());
    }
}
