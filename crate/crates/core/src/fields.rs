//! Random Lipschitz fields on a subspace, used to probe the operator norm.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::extension::{mcshane_extend, ExtensionError};
use crate::metric::{lipschitz_seminorm, FiniteMetricSpace, Norm, Subspace, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldFamily {
    /// `max(0, r - d(., p))` per coordinate.
    Bump,
    /// Random signed sums of bumps per coordinate.
    RademacherBump,
    /// McShane extension of random values on a random part of the subspace.
    McShaneRandom,
    /// Distance to a random subset of the space.
    DistToSubset,
}

impl FieldFamily {
    pub const ALL: [FieldFamily; 4] = [
        FieldFamily::Bump,
        FieldFamily::RademacherBump,
        FieldFamily::McShaneRandom,
        FieldFamily::DistToSubset,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FieldFamily::Bump => "bump",
            FieldFamily::RademacherBump => "rademacher_bump",
            FieldFamily::McShaneRandom => "mcshane_random",
            FieldFamily::DistToSubset => "dist_to_subset",
        }
    }
}

impl fmt::Display for FieldFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown field family {0:?}")]
pub struct UnknownFamily(pub String);

impl FromStr for FieldFamily {
    type Err = UnknownFamily;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FieldFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| UnknownFamily(s.to_string()))
    }
}

/// Mix a base seed with a stream number (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `max(0, r - d(q, p))` at each `q` in `points`.
pub fn bump_values(space: &FiniteMetricSpace, points: &[usize], p: usize, r: f64) -> Vec<f64> {
    let row = space.row(p);
    points.iter().map(|&q| (r - row[q]).max(0.0)).collect()
}

const MAX_ATTEMPTS: u64 = 64;

/// A field on `sub` from `family` with a positive Lipschitz seminorm,
/// deterministic in `seed`. Draws that are constant up to rounding are
/// redrawn.
pub fn gen_lipschitz_field(
    space: &FiniteMetricSpace,
    sub: &Subspace,
    family: FieldFamily,
    k: usize,
    norm: Norm,
    seed: u64,
) -> Result<VectorField, ExtensionError> {
    if sub.len() < 2 {
        return Err(ExtensionError::DegenerateSubspace);
    }
    if k == 0 {
        return Err(crate::metric::FieldError::ZeroDimension.into());
    }
    let points = sub.indices();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt);
        let coords: Vec<Vec<f64>> = (0..k)
            .map(|_| draw_coordinate(space, points, family, &mut rng))
            .collect();
        let field = interleave(&coords, norm)?;
        if !lipschitz_seminorm(space, points, &field)?.is_negligible(space.diameter(), &field) {
            return Ok(field);
        }
    }
    // distance to the first subspace point is never constant on two points
    let mut coords = vec![vec![0.0; points.len()]; k];
    coords[0] = points.iter().map(|&q| space.dist(q, points[0])).collect();
    Ok(interleave(&coords, norm)?)
}

fn interleave(coords: &[Vec<f64>], norm: Norm) -> Result<VectorField, crate::metric::FieldError> {
    let k = coords.len();
    let m = coords[0].len();
    let values = (0..m)
        .flat_map(|p| (0..k).map(move |c| coords[c][p]))
        .collect();
    VectorField::from_flat(k, values, norm)
}

fn draw_coordinate(
    space: &FiniteMetricSpace,
    points: &[usize],
    family: FieldFamily,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let n = space.len();
    let diameter = space.diameter();
    match family {
        FieldFamily::Bump => {
            let p = rng.random_range(0..n);
            let r = diameter * rng.random_range(0.02..=1.0);
            bump_values(space, points, p, r)
        }
        FieldFamily::RademacherBump => {
            let mut acc = vec![0.0; points.len()];
            for _ in 0..4 {
                let p = rng.random_range(0..n);
                let r = diameter * rng.random_range(0.02..=1.0);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                for (a, b) in acc.iter_mut().zip(bump_values(space, points, p, r)) {
                    *a += sign * b;
                }
            }
            acc
        }
        FieldFamily::McShaneRandom => {
            let mut order = points.to_vec();
            order.shuffle(rng);
            let size = rng.random_range(2..=points.len());
            let mut sources = order[..size].to_vec();
            sources.sort_unstable();
            let values: Vec<f64> = (0..size)
                .map(|_| diameter * rng.random_range(0.0..1.0))
                .collect();
            let field = VectorField::scalar(values.clone()).expect("finite values");
            let lip = lipschitz_seminorm(space, &sources, &field)
                .expect("aligned")
                .value;
            mcshane_extend(space, &sources, &values, lip, points)
        }
        FieldFamily::DistToSubset => {
            let mut subset: Vec<usize> = (0..n).filter(|_| rng.random_bool(1.0 / 3.0)).collect();
            if subset.is_empty() {
                subset.push(rng.random_range(0..n));
            }
            points
                .iter()
                .map(|&q| {
                    let row = space.row(q);
                    subset.iter().map(|&s| row[s]).fold(f64::INFINITY, f64::min)
                })
                .collect()
        }
    }
}
