//! Deterministic instance generators.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::HarnessError;
use crate::instance::{DistanceSpec, InstanceFile, NormName, SCHEMA_VERSION};

/// Upper limit on generated instance size.
pub const MAX_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `{0..a-1}^k` with the l1 metric.
    Grid,
    /// `n` collinear points with unit gaps.
    Path,
    /// Endpoints of the level-`L` middle-thirds intervals in `[0, 1]`.
    Cantor,
    /// A hub and `s` spokes of length 1 (graph metric).
    Star,
    /// `n` uniform points in the unit l2 ball of `R^d`.
    RandomBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceRule {
    All,
    /// Each point independently with probability `p`.
    RandomP,
    /// Even indices.
    Even,
    /// Family-specific boundary: box faces of a grid, path endpoints, outer
    /// Cantor endpoints, star spokes, or ball points with norm at least 0.8.
    Boundary,
}

macro_rules! named_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $name),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
        impl FromStr for $ty {
            type Err = HarnessError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    other => Err(HarnessError::ParamOutOfRange(format!(
                        "unknown {} {other:?}", stringify!($ty)
                    ))),
                }
            }
        }
    };
}

named_enum!(Family {
    Grid => "grid",
    Path => "path",
    Cantor => "cantor",
    Star => "star",
    RandomBall => "random_ball",
});

named_enum!(SubspaceRule {
    All => "all",
    RandomP => "random_p",
    Even => "even",
    Boundary => "boundary",
});

/// `key=value` generator parameters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Params(BTreeMap<String, String>);

impl FromStr for Params {
    type Err = HarnessError;

    /// Parse `a=4,k=2`; the empty string gives no parameters.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut map = BTreeMap::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| {
                HarnessError::ParamOutOfRange(format!("expected key=value, got {part:?}"))
            })?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Params(map))
    }
}

impl Params {
    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, HarnessError> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| HarnessError::ParamOutOfRange(format!("{key}={v}"))),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), HarnessError> {
        match self.0.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(HarnessError::ParamOutOfRange(format!("unknown parameter {k:?}"))),
            None => Ok(()),
        }
    }
}

fn in_range<T: PartialOrd + fmt::Display>(
    name: &str,
    value: T,
    lo: T,
    hi: T,
) -> Result<T, HarnessError> {
    if value < lo || value > hi {
        return Err(HarnessError::ParamOutOfRange(format!(
            "{name}={value} (allowed {lo}..={hi})"
        )));
    }
    Ok(value)
}

struct Layout {
    distance: DistanceSpec,
    n: usize,
    boundary: Vec<usize>,
    tag: String,
}

/// Build an instance document. Common parameters: `p` (inclusion
/// probability for `random_p`, default 0.5), `measure` (`counting` or
/// `random`, masses uniform in `[0.5, 2]`) and `name`.
pub fn generate_instance(
    family: Family,
    params: &Params,
    rule: SubspaceRule,
    seed: u64,
) -> Result<InstanceFile, HarnessError> {
    const COMMON: [&str; 3] = ["p", "measure", "name"];
    let specific: &[&str] = match family {
        Family::Grid => &["a", "k"],
        Family::Path => &["n"],
        Family::Cantor => &["level"],
        Family::Star => &["s"],
        Family::RandomBall => &["n", "d"],
    };
    let allowed: Vec<&str> = COMMON.iter().chain(specific).copied().collect();
    params.check_keys(&allowed)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = match family {
        Family::Grid => grid(params)?,
        Family::Path => path(params)?,
        Family::Cantor => cantor(params)?,
        Family::Star => star(params)?,
        Family::RandomBall => random_ball(params, &mut rng)?,
    };
    let n = layout.n;

    rng.set_stream(1);
    let subspace: Vec<usize> = match rule {
        SubspaceRule::All => (0..n).collect(),
        SubspaceRule::Even => (0..n).step_by(2).collect(),
        SubspaceRule::Boundary => layout.boundary.clone(),
        SubspaceRule::RandomP => {
            let p = in_range("p", params.get("p", 0.5)?, 0.0, 1.0)?;
            let mut chosen: Vec<usize> = (0..n).filter(|_| rng.random_bool(p)).collect();
            if chosen.is_empty() {
                chosen.push(rng.random_range(0..n));
            }
            chosen
        }
    };

    rng.set_stream(2);
    let measure = match params.get("measure", String::from("counting"))?.as_str() {
        "counting" => vec![1.0; subspace.len()],
        "random" => (0..subspace.len())
            .map(|_| rng.random_range(0.5..=2.0))
            .collect(),
        other => {
            return Err(HarnessError::ParamOutOfRange(format!("measure={other}")));
        }
    };

    let name = params.get(
        "name",
        format!("{family}-{}-{rule}-s{seed}", layout.tag),
    )?;
    Ok(InstanceFile {
        version: SCHEMA_VERSION,
        name,
        points: (0..n).map(|i| format!("p{i}")).collect(),
        distance: layout.distance,
        subspace,
        measure,
        lift_dimension: None,
    })
}

fn grid(params: &Params) -> Result<Layout, HarnessError> {
    let a = in_range("a", params.get("a", 4usize)?, 1, MAX_POINTS)?;
    let k = in_range("k", params.get("k", 2usize)?, 1, 12)?;
    let n = a
        .checked_pow(k as u32)
        .filter(|&n| n <= MAX_POINTS)
        .ok_or_else(|| HarnessError::ParamOutOfRange(format!("grid a={a}, k={k} too large")))?;
    let coords: Vec<Vec<f64>> = (0..n)
        .map(|mut i| {
            (0..k)
                .map(|_| {
                    let c = i % a;
                    i /= a;
                    c as f64
                })
                .collect()
        })
        .collect();
    let boundary = coords
        .iter()
        .enumerate()
        .filter(|(_, c)| c.iter().any(|&x| x == 0.0 || x == (a - 1) as f64))
        .map(|(i, _)| i)
        .collect();
    Ok(Layout {
        distance: DistanceSpec::Coordinates {
            values: coords,
            norm: NormName::L1,
        },
        n,
        boundary,
        tag: format!("a{a}k{k}"),
    })
}

fn path(params: &Params) -> Result<Layout, HarnessError> {
    let n = in_range("n", params.get("n", 16usize)?, 1, MAX_POINTS)?;
    let mut boundary = vec![0];
    if n > 1 {
        boundary.push(n - 1);
    }
    Ok(Layout {
        distance: DistanceSpec::Coordinates {
            values: (0..n).map(|i| vec![i as f64]).collect(),
            norm: NormName::L2,
        },
        n,
        boundary,
        tag: format!("n{n}"),
    })
}

fn cantor(params: &Params) -> Result<Layout, HarnessError> {
    let level = in_range("level", params.get("level", 3u32)?, 0, 11)?;
    let mut intervals = vec![(0.0f64, 1.0f64)];
    for _ in 0..level {
        intervals = intervals
            .into_iter()
            .flat_map(|(lo, hi)| {
                let third = (hi - lo) / 3.0;
                [(lo, lo + third), (hi - third, hi)]
            })
            .collect();
    }
    let values: Vec<Vec<f64>> = intervals
        .iter()
        .flat_map(|&(lo, hi)| [vec![lo], vec![hi]])
        .collect();
    let n = values.len();
    Ok(Layout {
        distance: DistanceSpec::Coordinates {
            values,
            norm: NormName::L1,
        },
        n,
        boundary: vec![0, n - 1],
        tag: format!("l{level}"),
    })
}

fn star(params: &Params) -> Result<Layout, HarnessError> {
    let s = in_range("s", params.get("s", 5usize)?, 1, MAX_POINTS - 1)?;
    let n = s + 1;
    let values = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match (i, j) {
                    _ if i == j => 0.0,
                    (0, _) | (_, 0) => 1.0,
                    _ => 2.0,
                })
                .collect()
        })
        .collect();
    Ok(Layout {
        distance: DistanceSpec::Matrix { values },
        n,
        boundary: (1..n).collect(),
        tag: format!("s{s}"),
    })
}

fn random_ball(params: &Params, rng: &mut ChaCha8Rng) -> Result<Layout, HarnessError> {
    let n = in_range("n", params.get("n", 64usize)?, 1, MAX_POINTS)?;
    let d = in_range("d", params.get("d", 2usize)?, 1, 16)?;
    let values: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let len = dir.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
            let radius = rng.random::<f64>().powf(1.0 / d as f64);
            dir.into_iter().map(|x| x / len * radius).collect()
        })
        .collect();
    let norms: Vec<f64> = values
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut boundary: Vec<usize> = (0..n).filter(|&i| norms[i] >= 0.8).collect();
    if boundary.is_empty() {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
        boundary.push(order[0]);
    }
    Ok(Layout {
        distance: DistanceSpec::Coordinates {
            values,
            norm: NormName::L2,
        },
        n,
        boundary,
        tag: format!("n{n}d{d}"),
    })
}
