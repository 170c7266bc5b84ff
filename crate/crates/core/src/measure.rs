//! Point measures on subspaces and the two doubling constants: `D(mu)` of a
//! measure and the covering constant `delta(M)` of a space.

use thiserror::Error;

use crate::metric::{critical_radii_among, FiniteMetricSpace, Subspace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("measure has {got} masses but the subspace has {expected} points")]
    LengthMismatch { got: usize, expected: usize },
    #[error("mass at subspace position {position} must be positive and finite, got {value}")]
    NonPositiveMass { position: usize, value: f64 },
}

/// A strictly positive point mass on every point of a subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceMeasure {
    sub: Subspace,
    mass: Vec<f64>,
    log_mass: Vec<f64>,
}

impl SubspaceMeasure {
    pub fn new(sub: Subspace, mass: Vec<f64>) -> Result<Self, MeasureError> {
        if mass.len() != sub.len() {
            return Err(MeasureError::LengthMismatch {
                got: mass.len(),
                expected: sub.len(),
            });
        }
        if let Some((position, &value)) = mass
            .iter()
            .enumerate()
            .find(|(_, m)| !(**m > 0.0 && m.is_finite()))
        {
            return Err(MeasureError::NonPositiveMass { position, value });
        }
        let log_mass = mass.iter().map(|m| m.ln()).collect();
        Ok(Self {
            sub,
            mass,
            log_mass,
        })
    }

    /// Unit mass on every subspace point.
    pub fn counting(sub: Subspace) -> Self {
        let m = sub.len();
        Self {
            sub,
            mass: vec![1.0; m],
            log_mass: vec![0.0; m],
        }
    }

    pub fn subspace(&self) -> &Subspace {
        &self.sub
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn log_masses(&self) -> &[f64] {
        &self.log_mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Multiply every mass by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self, MeasureError> {
        Self::new(self.sub.clone(), self.mass.iter().map(|m| m * c).collect())
    }
}

/// `D(mu)` together with a center and radius attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingConstant {
    pub value: f64,
    /// Parent index of the witnessing center.
    pub center: usize,
    pub radius: f64,
}

/// Exact doubling constant `sup mu(B_2R(m)) / mu(B_R(m))` over subspace
/// centers and `R > 0`, with open balls in the subspace metric.
///
/// As a function of `R` the ratio is a left-continuous step function that
/// can only jump at subspace distances from the center or at their halves,
/// and it equals 1 beyond the largest of them. Evaluating at those candidate
/// radii therefore gives the supremum exactly.
pub fn doubling_constant(space: &FiniteMetricSpace, mu: &SubspaceMeasure) -> DoublingConstant {
    let sub = mu.subspace();
    let idx = sub.indices();
    let mut best = DoublingConstant {
        value: 1.0,
        center: idx[0],
        radius: 1.0,
    };
    let mut largest_radius = 0.0f64;
    let mut by_distance: Vec<(f64, f64)> = Vec::with_capacity(idx.len());
    let mut prefix: Vec<f64> = Vec::with_capacity(idx.len() + 1);

    for &c in idx {
        let row = space.row(c);
        by_distance.clear();
        by_distance.extend(idx.iter().zip(mu.masses()).map(|(&j, &m)| (row[j], m)));
        by_distance.sort_by(|a, b| a.0.total_cmp(&b.0));
        prefix.clear();
        prefix.push(0.0);
        let mut acc = 0.0;
        for &(_, m) in &by_distance {
            acc += m;
            prefix.push(acc);
        }
        // mass of the open ball of radius r: points with distance < r
        let ball = |r: f64| prefix[by_distance.partition_point(|&(d, _)| d < r)];

        for r in critical_radii_among(space, c, idx.iter().copied()) {
            largest_radius = largest_radius.max(r);
            let ratio = ball(2.0 * r) / ball(r);
            if ratio > best.value {
                best = DoublingConstant {
                    value: ratio,
                    center: c,
                    radius: r,
                };
            }
        }
    }
    if best.value == 1.0 && largest_radius > 0.0 {
        best.radius = 2.0 * largest_radius;
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverExactness {
    Exact,
    GreedyUpperBound,
}

impl CoverExactness {
    pub fn as_str(self) -> &'static str {
        match self {
            CoverExactness::Exact => "exact",
            CoverExactness::GreedyUpperBound => "greedy_upper_bound",
        }
    }
}

/// `delta(M)` with the ball that attains it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoveringConstant {
    pub value: usize,
    pub exactness: CoverExactness,
    pub center: usize,
    /// Index of the point whose distance from `center` is the ball radius.
    pub radius_point: usize,
}

/// Balls with at most this many points are covered exactly.
pub const EXACT_COVER_LIMIT: usize = 16;

/// Covering doubling constant: the largest number of closed balls of radius
/// `R/2`, centered at points of the space, needed to cover a closed ball of
/// radius `R`.
///
/// For a fixed point set the cover number only decreases as `R` grows, so it
/// suffices to take `R` equal to the distances from each center. Balls of at
/// most [`EXACT_COVER_LIMIT`] points are solved exactly; larger ones use
/// greedy set cover. The result is exact whenever no greedy count exceeds
/// the best exact count.
pub fn delta_covering_constant(space: &FiniteMetricSpace) -> CoveringConstant {
    let n = space.len();
    let mut exact_best = (1usize, 0usize, 0usize);
    let mut greedy_best: Option<(usize, usize, usize)> = None;
    let mut order: Vec<usize> = Vec::with_capacity(n);

    for c in 0..n {
        let row = space.row(c);
        order.clear();
        order.extend(0..n);
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        let mut end = 1;
        while end < n {
            let radius = row[order[end]];
            while end < n && row[order[end]] <= radius {
                end += 1;
            }
            let ball = &order[..end];
            let current = exact_best.0.max(greedy_best.map_or(0, |g| g.0));
            if ball.len() <= current {
                continue;
            }
            let witness = (c, ball[ball.len() - 1]);
            if ball.len() <= EXACT_COVER_LIMIT {
                let count = exact_cover(space, ball, radius / 2.0);
                if count > exact_best.0 {
                    exact_best = (count, witness.0, witness.1);
                }
            } else {
                let count = greedy_cover(space, ball, radius / 2.0);
                if greedy_best.is_none_or(|g| count > g.0) {
                    greedy_best = Some((count, witness.0, witness.1));
                }
            }
        }
    }

    match greedy_best {
        Some(g) if g.0 > exact_best.0 => CoveringConstant {
            value: g.0,
            exactness: CoverExactness::GreedyUpperBound,
            center: g.1,
            radius_point: g.2,
        },
        _ => CoveringConstant {
            value: exact_best.0,
            exactness: CoverExactness::Exact,
            center: exact_best.1,
            radius_point: exact_best.2,
        },
    }
}

/// Masks over `ball` of the closed `half`-balls around every point, with
/// empty and duplicate masks removed and larger masks first.
fn cover_masks(space: &FiniteMetricSpace, ball: &[usize], half: f64) -> Vec<u32> {
    let mut masks: Vec<u32> = (0..space.len())
        .map(|q| {
            let row = space.row(q);
            ball.iter()
                .enumerate()
                .filter(|&(_, &e)| row[e] <= half)
                .fold(0u32, |m, (bit, _)| m | (1 << bit))
        })
        .filter(|&m| m != 0)
        .collect();
    masks.sort_unstable_by(|a, b| b.count_ones().cmp(&a.count_ones()).then(a.cmp(b)));
    masks.dedup();
    // drop masks contained in another mask
    let mut kept: Vec<u32> = Vec::with_capacity(masks.len());
    for m in masks {
        if !kept.iter().any(|&k| k & m == m) {
            kept.push(m);
        }
    }
    kept
}

fn exact_cover(space: &FiniteMetricSpace, ball: &[usize], half: f64) -> usize {
    debug_assert!(ball.len() <= EXACT_COVER_LIMIT);
    let masks = cover_masks(space, ball, half);
    let full: u32 = if ball.len() == 32 {
        u32::MAX
    } else {
        (1u32 << ball.len()) - 1
    };

    fn search(masks: &[u32], full: u32, covered: u32, depth: usize, best: &mut usize) {
        if covered == full {
            *best = (*best).min(depth);
            return;
        }
        if depth + 1 >= *best {
            return;
        }
        let first = (!covered & full).trailing_zeros();
        for &m in masks {
            if m & (1 << first) != 0 {
                search(masks, full, covered | m, depth + 1, best);
            }
        }
    }

    let mut best = ball.len();
    search(&masks, full, 0, 0, &mut best);
    best
}

fn greedy_cover(space: &FiniteMetricSpace, ball: &[usize], half: f64) -> usize {
    let words = ball.len().div_ceil(64);
    let sets: Vec<Vec<u64>> = (0..space.len())
        .filter_map(|q| {
            let row = space.row(q);
            let mut bits = vec![0u64; words];
            let mut any = false;
            for (bit, &e) in ball.iter().enumerate() {
                if row[e] <= half {
                    bits[bit / 64] |= 1 << (bit % 64);
                    any = true;
                }
            }
            any.then_some(bits)
        })
        .collect();
    let mut uncovered = vec![u64::MAX; words];
    if !ball.len().is_multiple_of(64) {
        uncovered[words - 1] = (1u64 << (ball.len() % 64)) - 1;
    }
    let mut remaining = ball.len();
    let mut count = 0;
    while remaining > 0 {
        let (gain, pick) = sets
            .iter()
            .enumerate()
            .map(|(s, bits)| {
                let gain: u32 = bits
                    .iter()
                    .zip(&uncovered)
                    .map(|(b, u)| (b & u).count_ones())
                    .sum();
                (gain, s)
            })
            .fold((0, 0), |best, cur| if cur.0 > best.0 { cur } else { best });
        debug_assert!(gain > 0, "every point covers itself");
        for (u, b) in uncovered.iter_mut().zip(&sets[pick]) {
            *u &= !b;
        }
        remaining -= gain as usize;
        count += 1;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{validate_metric, Norm};

    fn line(n: usize) -> FiniteMetricSpace {
        let coords: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        FiniteMetricSpace::from_coordinates(&coords, Norm::L2).unwrap()
    }

    fn counting_all(space: &FiniteMetricSpace) -> SubspaceMeasure {
        SubspaceMeasure::counting(Subspace::full(space))
    }

    // Brute force over a dense radius grid: an independent lower bound on D
    // that must meet the candidate-radius value on these small instances.
    fn brute_doubling(space: &FiniteMetricSpace, mu: &SubspaceMeasure) -> f64 {
        let idx = mu.subspace().indices();
        let mut best = 1.0f64;
        for &c in idx {
            for step in 1..=4000 {
                let r = step as f64 * space.diameter().max(1.0) / 1000.0;
                let ball = |rad: f64| -> f64 {
                    idx.iter()
                        .zip(mu.masses())
                        .filter(|(&j, _)| space.dist(c, j) < rad)
                        .map(|(_, m)| m)
                        .sum()
                };
                best = best.max(ball(2.0 * r) / ball(r));
            }
        }
        best
    }

    #[test]
    fn measure_validation() {
        let s = line(2);
        let sub = Subspace::full(&s);
        assert!(matches!(
            SubspaceMeasure::new(sub.clone(), vec![1.0, 0.0]).unwrap_err(),
            MeasureError::NonPositiveMass { position: 1, .. }
        ));
        assert!(matches!(
            SubspaceMeasure::new(sub.clone(), vec![1.0]).unwrap_err(),
            MeasureError::LengthMismatch { .. }
        ));
        assert!(SubspaceMeasure::new(sub, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn doubling_singleton_is_one() {
        let s = validate_metric(&[vec![0.0]]).unwrap();
        let mu = SubspaceMeasure::new(Subspace::full(&s), vec![3.5]).unwrap();
        assert_eq!(doubling_constant(&s, &mu).value, 1.0);
    }

    #[test]
    fn doubling_two_points() {
        let s = line(2);
        let d = doubling_constant(&s, &counting_all(&s));
        assert_eq!(d.value, 2.0);
        assert_eq!(d.radius, 1.0);
    }

    #[test]
    fn doubling_line_of_three() {
        let s = line(3);
        let mu = counting_all(&s);
        let d = doubling_constant(&s, &mu);
        assert_eq!(d.value, 3.0);
        assert_eq!((d.center, d.radius), (1, 1.0));
        assert_eq!(brute_doubling(&s, &mu), 3.0);
    }

    #[test]
    fn doubling_matches_grid_brute_force() {
        let coords: Vec<Vec<f64>> = [0.0, 0.3, 1.1, 2.0, 4.5, 4.6]
            .iter()
            .map(|&x| vec![x])
            .collect();
        let s = FiniteMetricSpace::from_coordinates(&coords, Norm::L1).unwrap();
        let mu = SubspaceMeasure::new(
            Subspace::new(&s, vec![0, 1, 3, 4, 5]).unwrap(),
            vec![1.0, 2.0, 0.5, 1.5, 1.0],
        )
        .unwrap();
        let exact = doubling_constant(&s, &mu).value;
        let brute = brute_doubling(&s, &mu);
        assert!(brute <= exact + 1e-12);
        assert!((exact - brute).abs() < 1e-12, "exact {exact} brute {brute}");
    }

    #[test]
    fn doubling_scale_invariance() {
        let s = line(5);
        let mu = counting_all(&s);
        let d = doubling_constant(&s, &mu).value;
        assert_eq!(doubling_constant(&s, &mu.scaled(7.0).unwrap()).value, d);
        let scaled = s.scaled(0.3).unwrap();
        assert_eq!(doubling_constant(&scaled, &counting_all(&scaled)).value, d);
    }

    #[test]
    fn delta_examples() {
        let single = validate_metric(&[vec![0.0]]).unwrap();
        assert_eq!(delta_covering_constant(&single).value, 1);

        let two = line(2);
        let c = delta_covering_constant(&two);
        assert_eq!(c.value, 2);
        assert_eq!(c.exactness, CoverExactness::Exact);

        let eq4 = validate_metric(&[
            vec![0.0, 1.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 1.0],
            vec![1.0, 1.0, 1.0, 0.0],
        ])
        .unwrap();
        assert_eq!(delta_covering_constant(&eq4).value, 4);
    }

    #[test]
    fn delta_on_line() {
        // closed ball of radius 2 around the middle of 5 collinear points
        // needs 3 balls of radius 1 ({0,1,2} style triples cover 3 points)
        let s = line(5);
        let c = delta_covering_constant(&s);
        assert_eq!(c.exactness, CoverExactness::Exact);
        assert_eq!(c.value, 3);
    }

    #[test]
    fn greedy_path_flags_large_balls() {
        // 20 equidistant points: the full ball has 20 > 16 points
        let n = 20;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        let s = validate_metric(&rows).unwrap();
        let c = delta_covering_constant(&s);
        assert_eq!(c.value, 20);
        assert_eq!(c.exactness, CoverExactness::GreedyUpperBound);
    }

    #[test]
    fn greedy_agrees_with_exact_on_small_balls() {
        let s = line(9);
        let ball: Vec<usize> = (0..9).collect();
        for half in [0.5, 1.0, 1.5, 2.0, 4.0] {
            assert_eq!(
                exact_cover(&s, &ball, half),
                greedy_cover(&s, &ball, half),
                "half = {half}"
            );
        }
    }
}
