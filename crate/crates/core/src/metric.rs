//! Finite metric spaces, subspaces and vector-valued fields on them.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Relative tolerance for the triangle inequality, as a fraction of the
/// largest distance in the matrix.
pub const TRIANGLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("metric space must contain at least one point")]
    EmptySpace,
    #[error("row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("non-finite distance at ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("nonzero diagonal entry at {i}")]
    NonzeroDiagonal { i: usize },
    #[error("asymmetric distances: d({i},{j}) = {forward} but d({j},{i}) = {backward}")]
    AsymmetricMatrix {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },
    #[error("negative distance {value} at ({i}, {j})")]
    NegativeDistance { i: usize, j: usize, value: f64 },
    #[error("points {i} and {j} coincide (zero off-diagonal distance)")]
    ZeroOffDiagonal { i: usize, j: usize },
    #[error("triangle inequality fails on ({i}, {j}, {k}): d({i},{k}) exceeds d({i},{j}) + d({j},{k}) by {excess}")]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        excess: f64,
    },
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("coordinate vector {point} has dimension {got}, expected {expected}")]
    CoordinateDimension {
        point: usize,
        got: usize,
        expected: usize,
    },
    #[error("subspace must contain at least one point")]
    EmptySubspace,
    #[error("subspace index {index} out of range for a space of {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("subspace indices must be strictly increasing (saw {previous} then {next})")]
    UnsortedSubspace { previous: usize, next: usize },
    #[error("scale factor must be positive and finite, got {0}")]
    BadScale(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("field must have at least one value")]
    Empty,
    #[error("field vectors must have dimension at least 1")]
    ZeroDimension,
    #[error("value {point} has dimension {got}, expected {expected}")]
    DimensionMismatch {
        point: usize,
        got: usize,
        expected: usize,
    },
    #[error("non-finite entry at value {point}, coordinate {coord}")]
    NonFinite { point: usize, coord: usize },
    #[error("field has {got} values but the domain has {expected} points")]
    LengthMismatch { got: usize, expected: usize },
    #[error("fields are incompatible (dimension or norm differ)")]
    Incompatible,
    #[error("coordinate permutation is not a permutation of 0..{0}")]
    BadPermutation(usize),
}

/// Norm on a coordinate space, used both for generating distances from
/// coordinates and as the norm of the target space of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Norm {
    L1,
    #[default]
    L2,
    Linf,
}

impl Norm {
    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Norm::L1 => diffs.sum(),
            Norm::L2 => diffs.map(|x| x * x).sum::<f64>().sqrt(),
            Norm::Linf => diffs.fold(0.0, f64::max),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown norm {0:?} (expected l1, l2 or linf)")]
pub struct UnknownNorm(pub String);

impl FromStr for Norm {
    type Err = UnknownNorm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" => Ok(Norm::Linf),
            other => Err(UnknownNorm(other.to_string())),
        }
    }
}

/// A validated finite metric space stored as a dense distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<f64>,
    n: usize,
    diameter: f64,
}

/// Validate a square distance matrix and build a metric space from it.
///
/// Points get labels `p0, p1, ...`; use [`FiniteMetricSpace::with_labels`] to
/// replace them.
pub fn validate_metric(rows: &[Vec<f64>]) -> Result<FiniteMetricSpace, MetricError> {
    let n = rows.len();
    if n == 0 {
        return Err(MetricError::EmptySpace);
    }
    let mut dist = Vec::with_capacity(n * n);
    for (row, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(MetricError::NotSquare {
                row,
                len: r.len(),
                expected: n,
            });
        }
        dist.extend_from_slice(r);
    }
    FiniteMetricSpace::from_flat(n, dist)
}

impl FiniteMetricSpace {
    fn from_flat(n: usize, dist: Vec<f64>) -> Result<Self, MetricError> {
        for i in 0..n {
            for j in 0..n {
                if !dist[i * n + j].is_finite() {
                    return Err(MetricError::NonFinite { i, j });
                }
            }
        }
        let mut diameter = 0.0f64;
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(MetricError::NonzeroDiagonal { i });
            }
            for j in (i + 1)..n {
                let forward = dist[i * n + j];
                let backward = dist[j * n + i];
                if forward != backward {
                    return Err(MetricError::AsymmetricMatrix {
                        i,
                        j,
                        forward,
                        backward,
                    });
                }
                if forward < 0.0 {
                    return Err(MetricError::NegativeDistance {
                        i,
                        j,
                        value: forward,
                    });
                }
                if forward == 0.0 {
                    return Err(MetricError::ZeroOffDiagonal { i, j });
                }
                diameter = diameter.max(forward);
            }
        }

        // worst d(i,k) - d(i,j) - d(j,k) over all triples, scanning rows i and k
        let tolerance = TRIANGLE_TOLERANCE * diameter;
        let mut worst: Option<(usize, usize, usize, f64)> = None;
        for i in 0..n {
            let row_i = &dist[i * n..(i + 1) * n];
            for k in (i + 1)..n {
                let row_k = &dist[k * n..(k + 1) * n];
                let direct = row_i[k];
                for j in 0..n {
                    let excess = direct - row_i[j] - row_k[j];
                    if excess > tolerance && worst.is_none_or(|w| excess > w.3) {
                        worst = Some((i, j, k, excess));
                    }
                }
            }
        }
        if let Some((i, j, k, excess)) = worst {
            return Err(MetricError::TriangleViolation { i, j, k, excess });
        }

        Ok(Self {
            labels: (0..n).map(|i| format!("p{i}")).collect(),
            dist,
            n,
            diameter,
        })
    }

    /// Build the metric induced by a norm on coordinate vectors.
    pub fn from_coordinates(coords: &[Vec<f64>], norm: Norm) -> Result<Self, MetricError> {
        let n = coords.len();
        if n == 0 {
            return Err(MetricError::EmptySpace);
        }
        let dim = coords[0].len();
        for (point, c) in coords.iter().enumerate() {
            if c.len() != dim {
                return Err(MetricError::CoordinateDimension {
                    point,
                    got: c.len(),
                    expected: dim,
                });
            }
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = norm.distance(&coords[i], &coords[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self::from_flat(n, dist)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, MetricError> {
        if labels.len() != self.n {
            return Err(MetricError::LabelCount {
                expected: self.n,
                got: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    /// The same space with every distance multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<Self, MetricError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(MetricError::BadScale(alpha));
        }
        Ok(Self {
            labels: self.labels.clone(),
            dist: self.dist.iter().map(|d| d * alpha).collect(),
            n: self.n,
            diameter: self.diameter * alpha,
        })
    }

    /// The metric induced on the points of `sub`, in subspace order.
    pub fn restrict(&self, sub: &Subspace) -> Self {
        let idx = sub.indices();
        let m = idx.len();
        let mut dist = Vec::with_capacity(m * m);
        for &i in idx {
            dist.extend(idx.iter().map(|&j| self.dist(i, j)));
        }
        let diameter = dist.iter().copied().fold(0.0, f64::max);
        Self {
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
            dist,
            n: m,
            diameter,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Distances from `i` to every point.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Smallest positive distance, or `None` for a singleton.
    pub fn min_distance(&self) -> Option<f64> {
        (0..self.n)
            .flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.dist(i, j))
            .reduce(f64::min)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

/// An index subset of a parent space, strictly increasing and nonempty.
///
/// The subspace owns its indices and a reverse lookup table; callers pass the
/// parent space alongside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    indices: Vec<usize>,
    position: Vec<Option<usize>>,
}

impl Subspace {
    pub fn new(space: &FiniteMetricSpace, indices: Vec<usize>) -> Result<Self, MetricError> {
        if indices.is_empty() {
            return Err(MetricError::EmptySubspace);
        }
        let mut position = vec![None; space.len()];
        for (pos, &index) in indices.iter().enumerate() {
            if index >= space.len() {
                return Err(MetricError::IndexOutOfRange {
                    index,
                    len: space.len(),
                });
            }
            if pos > 0 && indices[pos - 1] >= index {
                return Err(MetricError::UnsortedSubspace {
                    previous: indices[pos - 1],
                    next: index,
                });
            }
            position[index] = Some(pos);
        }
        Ok(Self { indices, position })
    }

    pub fn full(space: &FiniteMetricSpace) -> Self {
        Self {
            indices: (0..space.len()).collect(),
            position: (0..space.len()).map(Some).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.position.get(i).is_some_and(Option::is_some)
    }

    /// Position of parent index `i` within the subspace ordering.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.position.get(i).copied().flatten()
    }

    /// Size of the parent space this subspace was built against.
    pub fn parent_len(&self) -> usize {
        self.position.len()
    }

    /// Parent indices not in the subspace.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.position.len())
            .filter(|&i| self.position[i].is_none())
            .collect()
    }

    /// Nearest subspace point to `i` as `(subspace position, distance)`;
    /// ties go to the smaller position.
    pub fn nearest(&self, space: &FiniteMetricSpace, i: usize) -> (usize, f64) {
        let row = space.row(i);
        let mut best = (0, row[self.indices[0]]);
        for (pos, &j) in self.indices.iter().enumerate().skip(1) {
            if row[j] < best.1 {
                best = (pos, row[j]);
            }
        }
        best
    }
}

/// `min_j d(i, j)` over the subspace; zero exactly on subspace points.
pub fn distance_to_subset(space: &FiniteMetricSpace, sub: &Subspace, i: usize) -> f64 {
    sub.nearest(space, i).1
}

/// Radii at which open-ball membership around `center` can change: every
/// positive distance from `center` and half of each, sorted and deduplicated.
pub fn critical_radii(space: &FiniteMetricSpace, center: usize) -> Vec<f64> {
    critical_radii_among(space, center, 0..space.len())
}

/// [`critical_radii`] restricted to distances towards `points`.
pub fn critical_radii_among(
    space: &FiniteMetricSpace,
    center: usize,
    points: impl IntoIterator<Item = usize>,
) -> Vec<f64> {
    let row = space.row(center);
    let mut radii: Vec<f64> = points
        .into_iter()
        .map(|j| row[j])
        .filter(|&d| d > 0.0)
        .flat_map(|d| [d, d / 2.0])
        .collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    radii
}

/// Values of a map into `R^k`, one vector per point of some domain, together
/// with the norm of the target space.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    dim: usize,
    values: Vec<f64>,
    norm: Norm,
}

impl VectorField {
    pub fn new(values: &[Vec<f64>], norm: Norm) -> Result<Self, FieldError> {
        let first = values.first().ok_or(FieldError::Empty)?;
        let dim = first.len();
        if dim == 0 {
            return Err(FieldError::ZeroDimension);
        }
        let mut flat = Vec::with_capacity(values.len() * dim);
        for (point, v) in values.iter().enumerate() {
            if v.len() != dim {
                return Err(FieldError::DimensionMismatch {
                    point,
                    got: v.len(),
                    expected: dim,
                });
            }
            flat.extend_from_slice(v);
        }
        Self::from_flat(dim, flat, norm)
    }

    pub fn from_flat(dim: usize, values: Vec<f64>, norm: Norm) -> Result<Self, FieldError> {
        if dim == 0 {
            return Err(FieldError::ZeroDimension);
        }
        if values.is_empty() {
            return Err(FieldError::Empty);
        }
        if !values.len().is_multiple_of(dim) {
            return Err(FieldError::DimensionMismatch {
                point: values.len() / dim,
                got: values.len() % dim,
                expected: dim,
            });
        }
        if let Some(p) = values.iter().position(|x| !x.is_finite()) {
            return Err(FieldError::NonFinite {
                point: p / dim,
                coord: p % dim,
            });
        }
        Ok(Self { dim, values, norm })
    }

    pub fn scalar(values: Vec<f64>) -> Result<Self, FieldError> {
        Self::from_flat(1, values, Norm::L2)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    #[inline]
    pub fn value(&self, p: usize) -> &[f64] {
        &self.values[p * self.dim..(p + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    /// Scalar field of coordinate `c`.
    pub fn coordinate(&self, c: usize) -> Vec<f64> {
        self.iter().map(|v| v[c]).collect()
    }

    /// `alpha * self + beta * other`.
    pub fn linear_combination(
        &self,
        alpha: f64,
        other: &VectorField,
        beta: f64,
    ) -> Result<VectorField, FieldError> {
        if self.dim != other.dim || self.len() != other.len() || self.norm != other.norm {
            return Err(FieldError::Incompatible);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        VectorField::from_flat(self.dim, values, self.norm)
    }

    /// Add the constant vector `shift` to every value.
    pub fn translated(&self, shift: &[f64]) -> Result<VectorField, FieldError> {
        if shift.len() != self.dim {
            return Err(FieldError::Incompatible);
        }
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(p, x)| x + shift[p % self.dim])
            .collect();
        VectorField::from_flat(self.dim, values, self.norm)
    }

    pub fn scaled(&self, alpha: f64) -> Result<VectorField, FieldError> {
        VectorField::from_flat(
            self.dim,
            self.values.iter().map(|x| alpha * x).collect(),
            self.norm,
        )
    }

    /// Output coordinate `c` takes input coordinate `perm[c]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<VectorField, FieldError> {
        let mut seen = vec![false; self.dim];
        if perm.len() != self.dim {
            return Err(FieldError::BadPermutation(self.dim));
        }
        for &p in perm {
            if p >= self.dim || std::mem::replace(&mut seen[p], true) {
                return Err(FieldError::BadPermutation(self.dim));
            }
        }
        let values = self
            .iter()
            .flat_map(|v| perm.iter().map(move |&p| v[p]))
            .collect();
        VectorField::from_flat(self.dim, values, self.norm)
    }
}

/// Relative variation below which a field counts as constant.
pub const CONSTANT_FIELD_TOLERANCE: f64 = 1e-9;

impl Seminorm {
    /// True when the field varies by less than [`CONSTANT_FIELD_TOLERANCE`]
    /// of its magnitude over a set of the given diameter, i.e. when the
    /// seminorm is zero up to rounding.
    pub fn is_negligible(&self, diameter: f64, field: &VectorField) -> bool {
        let scale = field.as_flat().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        self.value * diameter <= CONSTANT_FIELD_TOLERANCE * scale
    }
}

/// Result of a Lipschitz seminorm scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seminorm {
    pub value: f64,
    /// Parent indices of the pair attaining `value`; `None` when no pair has
    /// a positive ratio.
    pub witness: Option<(usize, usize)>,
}

/// `max ‖f(p) - f(q)‖ / d(p, q)` over distinct pairs of `points`.
///
/// `field` is aligned with `points`. Ties keep the first pair in
/// lexicographic order of positions.
pub fn lipschitz_seminorm(
    space: &FiniteMetricSpace,
    points: &[usize],
    field: &VectorField,
) -> Result<Seminorm, FieldError> {
    if field.len() != points.len() {
        return Err(FieldError::LengthMismatch {
            got: field.len(),
            expected: points.len(),
        });
    }
    let norm = field.norm();
    let mut best = Seminorm {
        value: 0.0,
        witness: None,
    };
    for (a, &p) in points.iter().enumerate() {
        let fa = field.value(a);
        let row = space.row(p);
        for (b, &q) in points.iter().enumerate().skip(a + 1) {
            let ratio = norm.distance(fa, field.value(b)) / row[q];
            if ratio > best.value {
                best = Seminorm {
                    value: ratio,
                    witness: Some((p, q)),
                };
            }
        }
    }
    Ok(best)
}
