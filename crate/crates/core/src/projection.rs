//! Euclidean projections onto geometric primitives.
//!
//! A [`ProjectionSet`] describes a closed set `C` together with a closed-form
//! (or finite, exact) rule for `argmin_{x in C} ||x - x0||_2`. Convex sets
//! have a unique projection; for the nonconvex ones (outside of a rectangle,
//! outside of a polytope, the lower shell of a quadric) one minimizer is
//! returned deterministically.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Default membership tolerance for [`ProjectionSet::contains`].
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

const STRUCTURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("dimension mismatch: set expects {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid set: {0}")]
    InvalidSet(String),
}

/// One row `a^T x <= bound` (inside) or `a^T x >= bound` (outside) of a polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceRow {
    pub normal: DVector<f64>,
    pub bound: f64,
}

impl HalfspaceRow {
    pub fn new(normal: DVector<f64>, bound: f64) -> Self {
        Self { normal, bound }
    }
}

/// Closed geometric set with an analytical Euclidean projection.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectionSet {
    /// `lower <= x <= upper` componentwise. Infinite entries mean unbounded.
    Bounds {
        lower: DVector<f64>,
        upper: DVector<f64>,
    },
    /// `lower <= a^T x <= upper`; `None` leaves that side unbounded.
    HyperplaneSlab {
        normal: DVector<f64>,
        lower: Option<f64>,
        upper: Option<f64>,
    },
    /// `lower <= 1/2 ||x - center||^2 <= upper`. `upper` may be `+inf`.
    QuadricAnnulus {
        center: DVector<f64>,
        lower: f64,
        upper: f64,
    },
    /// Unit second-order cone over `(z, t)` stored as `[z; t]`: `||z|| <= t`.
    SecondOrderCone { dim: usize },
    /// `||x||_inf <= halfwidth`.
    RectangleIn { halfwidth: f64, dim: usize },
    /// `||x||_inf >= halfwidth`.
    RectangleOut { halfwidth: f64, dim: usize },
    /// Intersection of `a_i^T x <= u_i`.
    PolytopeIn { rows: Vec<HalfspaceRow> },
    /// Union of `a_i^T x >= l_i` (the closed outside of a convex polytope).
    PolytopeOut { rows: Vec<HalfspaceRow> },
    /// `x in C'` iff `A (x - center) in inner`.
    Transformed {
        inner: Box<ProjectionSet>,
        matrix: DMatrix<f64>,
        center: DVector<f64>,
    },
    /// Singleton `{target}`.
    Point { target: DVector<f64> },
    /// Cartesian power: `count` consecutive chunks, each a member of `inner`.
    Repeated {
        inner: Box<ProjectionSet>,
        count: usize,
    },
}

/// Result of [`ProjectionSet::project_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct Projected {
    pub point: DVector<f64>,
    /// Set when the projection hit a point with no unique direction (the
    /// center of a quadric shell) and a fixed boundary point was returned.
    pub fallback: bool,
}

impl ProjectionSet {
    pub fn bounds(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self, ProjectionError> {
        let set = Self::Bounds { lower, upper };
        set.validate()?;
        Ok(set)
    }

    pub fn uniform_bounds(dim: usize, lower: f64, upper: f64) -> Result<Self, ProjectionError> {
        Self::bounds(
            DVector::from_element(dim, lower),
            DVector::from_element(dim, upper),
        )
    }

    /// The whole space, as bounds with infinite sentinels.
    pub fn unbounded(dim: usize) -> Self {
        Self::Bounds {
            lower: DVector::from_element(dim, f64::NEG_INFINITY),
            upper: DVector::from_element(dim, f64::INFINITY),
        }
    }

    pub fn slab(
        normal: DVector<f64>,
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> Result<Self, ProjectionError> {
        let set = Self::HyperplaneSlab {
            normal,
            lower,
            upper,
        };
        set.validate()?;
        Ok(set)
    }

    /// `a^T x <= b`.
    pub fn halfspace(normal: DVector<f64>, bound: f64) -> Result<Self, ProjectionError> {
        Self::slab(normal, None, Some(bound))
    }

    /// `lower <= 1/2||x-c||^2 <= upper` (levels, not radii).
    pub fn annulus(center: DVector<f64>, lower: f64, upper: f64) -> Result<Self, ProjectionError> {
        let set = Self::QuadricAnnulus {
            center,
            lower,
            upper,
        };
        set.validate()?;
        Ok(set)
    }

    /// Disk/ball of radius `r`, i.e. the convex upper shell `1/2||x-c||^2 <= r^2/2`.
    pub fn ball(center: DVector<f64>, radius: f64) -> Result<Self, ProjectionError> {
        Self::annulus(center, 0.0, 0.5 * radius * radius)
    }

    /// Closed outside of a ball of radius `r`.
    pub fn ball_outside(center: DVector<f64>, radius: f64) -> Result<Self, ProjectionError> {
        Self::annulus(center, 0.5 * radius * radius, f64::INFINITY)
    }

    /// Sphere (circle) of radius `r`.
    pub fn sphere(center: DVector<f64>, radius: f64) -> Result<Self, ProjectionError> {
        let level = 0.5 * radius * radius;
        Self::annulus(center, level, level)
    }

    pub fn point(target: DVector<f64>) -> Self {
        Self::Point { target }
    }

    pub fn transformed(
        inner: ProjectionSet,
        matrix: DMatrix<f64>,
        center: DVector<f64>,
    ) -> Result<Self, ProjectionError> {
        let set = Self::Transformed {
            inner: Box::new(inner),
            matrix,
            center,
        };
        set.validate()?;
        Ok(set)
    }

    /// Planar rectangle of side lengths `length` (along the rotated x axis)
    /// and `width`, rotated by `theta` and centered at `center`.
    ///
    /// Built on the unit-scale square `||w||_inf <= length/2` with
    /// `A = diag(1, length/width) R(theta)^T`.
    pub fn rectangle(
        center: DVector<f64>,
        length: f64,
        width: f64,
        theta: f64,
        outside: bool,
    ) -> Result<Self, ProjectionError> {
        if !(length > 0.0 && width > 0.0) {
            return Err(ProjectionError::InvalidSet(format!(
                "rectangle sides must be positive, got {length} x {width}"
            )));
        }
        let (s, c) = theta.sin_cos();
        let scale = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, length / width]));
        let rotation_t = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
        let half = 0.5 * length;
        let inner = if outside {
            Self::RectangleOut {
                halfwidth: half,
                dim: 2,
            }
        } else {
            Self::RectangleIn {
                halfwidth: half,
                dim: 2,
            }
        };
        Self::transformed(inner, scale * rotation_t, center)
    }

    pub fn repeated(inner: ProjectionSet, count: usize) -> Self {
        Self::Repeated {
            inner: Box::new(inner),
            count,
        }
    }

    /// Ambient dimension of the set.
    pub fn dim(&self) -> usize {
        match self {
            Self::Bounds { lower, .. } => lower.len(),
            Self::HyperplaneSlab { normal, .. } => normal.len(),
            Self::QuadricAnnulus { center, .. } => center.len(),
            Self::SecondOrderCone { dim } => *dim,
            Self::RectangleIn { dim, .. } | Self::RectangleOut { dim, .. } => *dim,
            Self::PolytopeIn { rows } | Self::PolytopeOut { rows } => {
                rows.first().map_or(0, |r| r.normal.len())
            }
            Self::Transformed { center, .. } => center.len(),
            Self::Point { target } => target.len(),
            Self::Repeated { inner, count } => inner.dim() * count,
        }
    }

    /// True for the variants whose projection is unique and nonexpansive.
    pub fn is_convex(&self) -> bool {
        match self {
            Self::Bounds { .. }
            | Self::HyperplaneSlab { .. }
            | Self::SecondOrderCone { .. }
            | Self::RectangleIn { .. }
            | Self::PolytopeIn { .. }
            | Self::Point { .. } => true,
            Self::QuadricAnnulus { lower, .. } => *lower == 0.0,
            Self::RectangleOut { .. } | Self::PolytopeOut { .. } => false,
            Self::Transformed { inner, .. } | Self::Repeated { inner, .. } => inner.is_convex(),
        }
    }

    /// Checks the structural invariants of the descriptor.
    pub fn validate(&self) -> Result<(), ProjectionError> {
        let invalid = |msg: String| Err(ProjectionError::InvalidSet(msg));
        match self {
            Self::Bounds { lower, upper } => {
                if lower.len() != upper.len() {
                    return invalid(format!(
                        "bounds lengths differ ({} vs {})",
                        lower.len(),
                        upper.len()
                    ));
                }
                if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] <= upper[i])) {
                    return invalid(format!("bounds violate lower <= upper at index {i}"));
                }
            }
            Self::HyperplaneSlab {
                normal,
                lower,
                upper,
            } => {
                if normal.norm() == 0.0 || !normal.iter().all(|v| v.is_finite()) {
                    return invalid("slab normal must be finite and nonzero".into());
                }
                if let (Some(l), Some(u)) = (lower, upper) {
                    if !(l <= u) {
                        return invalid(format!("slab needs lower <= upper, got {l} > {u}"));
                    }
                }
            }
            Self::QuadricAnnulus { lower, upper, .. } => {
                if !(0.0 <= *lower && lower <= upper) || !lower.is_finite() {
                    return invalid(format!(
                        "quadric needs 0 <= lower <= upper, got [{lower}, {upper}]"
                    ));
                }
            }
            Self::SecondOrderCone { dim } => {
                if *dim < 2 {
                    return invalid("second-order cone needs dimension >= 2".into());
                }
            }
            Self::RectangleIn { halfwidth, dim } | Self::RectangleOut { halfwidth, dim } => {
                if !(*halfwidth >= 0.0) || !halfwidth.is_finite() || *dim == 0 {
                    return invalid(format!("bad rectangle halfwidth {halfwidth}"));
                }
            }
            Self::PolytopeIn { rows } | Self::PolytopeOut { rows } => {
                let Some(first) = rows.first() else {
                    return invalid("polytope needs at least one row".into());
                };
                let n = first.normal.len();
                for (i, row) in rows.iter().enumerate() {
                    if row.normal.len() != n || row.normal.norm() == 0.0 || !row.bound.is_finite()
                    {
                        return invalid(format!("polytope row {i} is malformed"));
                    }
                }
            }
            Self::Transformed {
                inner,
                matrix,
                center,
            } => {
                inner.validate()?;
                let n = inner.dim();
                if matrix.nrows() != n || matrix.ncols() != n || center.len() != n {
                    return invalid(format!("transform must be {n}x{n} with a {n}-vector center"));
                }
                let gram = matrix * matrix.transpose();
                if inner.is_rectangle() {
                    // A = D Q with D positive diagonal: A A^T is diagonal.
                    for i in 0..n {
                        if !(gram[(i, i)] > 0.0) {
                            return invalid("transform is singular".into());
                        }
                        for j in 0..n {
                            if i != j
                                && gram[(i, j)].abs()
                                    > STRUCTURE_TOL * (gram[(i, i)] * gram[(j, j)]).sqrt()
                            {
                                return invalid(
                                    "rectangle transform must be diagonal * orthogonal".into(),
                                );
                            }
                        }
                    }
                } else {
                    let dev = (gram - DMatrix::identity(n, n)).amax();
                    if dev > STRUCTURE_TOL {
                        return invalid(format!(
                            "transform of a non-rectangle set must be orthogonal (|AA^T - I| = {dev:e})"
                        ));
                    }
                }
            }
            Self::Point { .. } => {}
            Self::Repeated { inner, count } => {
                inner.validate()?;
                if *count == 0 {
                    return invalid("repeated set needs count >= 1".into());
                }
            }
        }
        Ok(())
    }

    fn is_rectangle(&self) -> bool {
        matches!(self, Self::RectangleIn { .. } | Self::RectangleOut { .. })
    }

    fn check_dim(&self, got: usize) -> Result<(), ProjectionError> {
        let expected = self.dim();
        if expected != got {
            return Err(ProjectionError::DimensionMismatch { expected, got });
        }
        Ok(())
    }

    /// Euclidean projection of `x0` onto the set.
    pub fn project(&self, x0: &DVector<f64>) -> Result<DVector<f64>, ProjectionError> {
        self.project_detailed(x0).map(|p| p.point)
    }

    pub fn project_detailed(&self, x0: &DVector<f64>) -> Result<Projected, ProjectionError> {
        self.check_dim(x0.len())?;
        let mut point = x0.clone();
        let fallback = self.project_in_place(&mut point);
        Ok(Projected { point, fallback })
    }

    /// Projects `x` in place. Dimensions must already be checked.
    /// Returns true if a degenerate-input fallback was taken.
    pub(crate) fn project_in_place(&self, x: &mut DVector<f64>) -> bool {
        match self {
            Self::Bounds { lower, upper } => {
                for i in 0..x.len() {
                    x[i] = x[i].max(lower[i]).min(upper[i]);
                }
                false
            }
            Self::HyperplaneSlab {
                normal,
                lower,
                upper,
            } => {
                let ax = normal.dot(x);
                let target = match (lower, upper) {
                    (_, Some(u)) if ax > *u => Some(*u),
                    (Some(l), _) if ax < *l => Some(*l),
                    _ => None,
                };
                if let Some(b) = target {
                    x.axpy(-(ax - b) / normal.norm_squared(), normal, 1.0);
                }
                false
            }
            Self::QuadricAnnulus {
                center,
                lower,
                upper,
            } => project_annulus(x, center, *lower, *upper),
            Self::SecondOrderCone { .. } => {
                project_soc(x);
                false
            }
            Self::RectangleIn { halfwidth, .. } => {
                x.apply(|v| *v = v.clamp(-*halfwidth, *halfwidth));
                false
            }
            Self::RectangleOut { halfwidth, dim } => {
                let halfwidths = DVector::from_element(*dim, *halfwidth);
                project_box_outside(x, &halfwidths);
                false
            }
            Self::PolytopeIn { rows } => {
                let p = project_polytope_in(rows, x);
                x.copy_from(&p);
                false
            }
            Self::PolytopeOut { rows } => {
                let p = project_polytope_out(rows, x);
                x.copy_from(&p);
                false
            }
            Self::Transformed {
                inner,
                matrix,
                center,
            } => project_transformed(inner, matrix, center, x),
            Self::Point { target } => {
                x.copy_from(target);
                false
            }
            Self::Repeated { inner, count } => {
                let n = inner.dim();
                let mut chunk = DVector::zeros(n);
                let mut fallback = false;
                for k in 0..*count {
                    chunk.copy_from(&x.rows(k * n, n));
                    fallback |= inner.project_in_place(&mut chunk);
                    x.rows_mut(k * n, n).copy_from(&chunk);
                }
                fallback
            }
        }
    }

    /// Membership test with the default tolerance.
    pub fn contains(&self, x: &DVector<f64>) -> Result<bool, ProjectionError> {
        self.contains_tol(x, DEFAULT_MEMBERSHIP_TOL)
    }

    /// True iff `x` satisfies the defining inequalities within `tol`.
    ///
    /// Scalar level conditions are compared with a tolerance scaled by
    /// `1 + |level|`; linear rows are compared by signed distance.
    pub fn contains_tol(&self, x: &DVector<f64>, tol: f64) -> Result<bool, ProjectionError> {
        self.check_dim(x.len())?;
        Ok(self.violation(x) <= tol)
    }

    /// Nonnegative measure of how far `x` is from satisfying the set's
    /// inequalities (zero inside). Used for membership and diagnostics.
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        let rel = |excess: f64, level: f64| excess.max(0.0) / (1.0 + level.abs());
        match self {
            Self::Bounds { lower, upper } => (0..x.len())
                .map(|i| (lower[i] - x[i]).max(x[i] - upper[i]).max(0.0))
                .fold(0.0, f64::max),
            Self::HyperplaneSlab {
                normal,
                lower,
                upper,
            } => {
                let ax = normal.dot(x);
                let scale = normal.norm();
                let over = upper.map_or(0.0, |u| (ax - u) / scale);
                let under = lower.map_or(0.0, |l| (l - ax) / scale);
                over.max(under).max(0.0)
            }
            Self::QuadricAnnulus {
                center,
                lower,
                upper,
            } => {
                let q = 0.5 * (x - center).norm_squared();
                let over = if upper.is_finite() { rel(q - upper, *upper) } else { 0.0 };
                over.max(rel(lower - q, *lower))
            }
            Self::SecondOrderCone { dim } => {
                let t = x[dim - 1];
                let z = x.rows(0, dim - 1).norm();
                rel(z - t, t)
            }
            Self::RectangleIn { halfwidth, .. } => rel(x.amax() - halfwidth, *halfwidth),
            Self::RectangleOut { halfwidth, .. } => rel(halfwidth - x.amax(), *halfwidth),
            Self::PolytopeIn { rows } => rows
                .iter()
                .map(|r| ((r.normal.dot(x) - r.bound) / r.normal.norm()).max(0.0))
                .fold(0.0, f64::max),
            Self::PolytopeOut { rows } => rows
                .iter()
                .map(|r| ((r.bound - r.normal.dot(x)) / r.normal.norm()).max(0.0))
                .fold(f64::INFINITY, f64::min),
            Self::Transformed {
                inner,
                matrix,
                center,
            } => inner.violation(&(matrix * (x - center))),
            Self::Point { target } => (x - target).amax(),
            Self::Repeated { inner, count } => {
                let n = inner.dim();
                (0..*count)
                    .map(|k| inner.violation(&x.rows(k * n, n).into_owned()))
                    .fold(0.0, f64::max)
            }
        }
    }
}

fn project_annulus(x: &mut DVector<f64>, center: &DVector<f64>, lower: f64, upper: f64) -> bool {
    let mut offset = &*x - center;
    let q = 0.5 * offset.norm_squared();
    if q > upper {
        offset *= (2.0 * upper).sqrt() / offset.norm();
    } else if q < lower {
        let r = offset.norm();
        let radius = (2.0 * lower).sqrt();
        if r == 0.0 {
            offset.fill(0.0);
            offset[0] = radius;
            x.copy_from(&(center + offset));
            return true;
        }
        offset *= radius / r;
    } else {
        return false;
    }
    x.copy_from(&(center + offset));
    false
}

fn project_soc(x: &mut DVector<f64>) {
    let n = x.len();
    let t = x[n - 1];
    let z_norm = x.rows(0, n - 1).norm();
    if z_norm <= t {
        return;
    }
    if z_norm <= -t {
        x.fill(0.0);
        return;
    }
    let scale = 0.5 * (z_norm + t);
    let factor = scale / z_norm;
    for i in 0..n - 1 {
        x[i] *= factor;
    }
    x[n - 1] = scale;
}

/// Projection onto `{v : exists i, |v_i| >= h_i}`: the nearest face of the box.
/// Ties go to the lowest index; a zero coordinate is pushed to `+h_i`.
fn project_box_outside(v: &mut DVector<f64>, halfwidths: &DVector<f64>) {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..v.len() {
        let gap = halfwidths[i] - v[i].abs();
        if gap <= 0.0 {
            return;
        }
        if best.is_none_or(|(_, g)| gap < g) {
            best = Some((i, gap));
        }
    }
    if let Some((k, _)) = best {
        let sign = if v[k] < 0.0 { -1.0 } else { 1.0 };
        v[k] = sign * halfwidths[k];
    }
}

fn project_transformed(
    inner: &ProjectionSet,
    matrix: &DMatrix<f64>,
    center: &DVector<f64>,
    x: &mut DVector<f64>,
) -> bool {
    match inner {
        ProjectionSet::RectangleIn { halfwidth, .. }
        | ProjectionSet::RectangleOut { halfwidth, .. } => {
            // A = D Q: work in the rotated frame v = Q (x - c) with per-axis
            // halfwidths h / d_i, where the Euclidean projection is exact.
            let n = center.len();
            let scales = DVector::from_fn(n, |i, _| matrix.row(i).norm());
            let rotation = DMatrix::from_fn(n, n, |i, j| matrix[(i, j)] / scales[i]);
            let mut v = &rotation * (&*x - center);
            let halfwidths = scales.map(|d| halfwidth / d);
            if matches!(inner, ProjectionSet::RectangleIn { .. }) {
                for i in 0..n {
                    v[i] = v[i].clamp(-halfwidths[i], halfwidths[i]);
                }
            } else {
                project_box_outside(&mut v, &halfwidths);
            }
            x.copy_from(&(rotation.transpose() * v + center));
            false
        }
        _ => {
            // Orthogonal A: A^{-1} = A^T.
            let mut y = matrix * (&*x - center);
            let fallback = inner.project_in_place(&mut y);
            x.copy_from(&(matrix.transpose() * y + center));
            fallback
        }
    }
}

/// Projection onto the outside of a convex polytope `{x | exists i: a_i^T x >= l_i}`.
///
/// If `x0` is strictly inside, the nearest row boundary wins (ties go to the
/// lowest row index) and `x0` is moved onto that hyperplane. Points already
/// outside or on the boundary are returned unchanged.
pub fn project_polytope_out(rows: &[HalfspaceRow], x0: &DVector<f64>) -> DVector<f64> {
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in rows.iter().enumerate() {
        let gap = row.bound - row.normal.dot(x0);
        if gap <= 0.0 {
            return x0.clone();
        }
        let dist = gap / row.normal.norm();
        if best.is_none_or(|(_, d)| dist < d) {
            best = Some((i, dist));
        }
    }
    match best {
        Some((i, _)) => {
            let row = &rows[i];
            let gap = row.bound - row.normal.dot(x0);
            x0 + &row.normal * (gap / row.normal.norm_squared())
        }
        None => x0.clone(),
    }
}

/// Exact projection onto `{x | a_i^T x <= u_i for all i}`.
///
/// Solves the KKT system of `min ||x - x0||^2` by enumerating candidate
/// active sets of increasing size among the violated-or-tight rows; the
/// first candidate with nonnegative multipliers that is primal feasible is
/// the unique projection. Intended for the low-dimensional polytopes used as
/// task-space regions.
pub fn project_polytope_in(rows: &[HalfspaceRow], x0: &DVector<f64>) -> DVector<f64> {
    let feasible = |x: &DVector<f64>| {
        rows.iter()
            .all(|r| r.normal.dot(x) - r.bound <= 1e-12 * (1.0 + r.bound.abs()))
    };
    if feasible(x0) {
        return x0.clone();
    }
    let n = x0.len();
    let m = rows.len();
    let max_active = n.min(m);
    let mut subset: Vec<usize> = Vec::with_capacity(max_active);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for size in 1..=max_active {
        subset.clear();
        subset.extend(0..size);
        loop {
            if let Some(x) = active_set_candidate(rows, x0, &subset) {
                if feasible(&x) {
                    return x;
                }
                // Keep the least-violating candidate as a safety net for
                // numerically degenerate configurations.
                let viol = rows
                    .iter()
                    .map(|r| (r.normal.dot(&x) - r.bound).max(0.0))
                    .fold(0.0, f64::max);
                if best.as_ref().is_none_or(|(v, _)| viol < *v) {
                    best = Some((viol, x));
                }
            }
            if !next_combination(&mut subset, m) {
                break;
            }
        }
    }
    best.map_or_else(|| x0.clone(), |(_, x)| x)
}

fn active_set_candidate(
    rows: &[HalfspaceRow],
    x0: &DVector<f64>,
    active: &[usize],
) -> Option<DVector<f64>> {
    let k = active.len();
    let n = x0.len();
    let a = DMatrix::from_fn(k, n, |i, j| rows[active[i]].normal[j]);
    let rhs = DVector::from_fn(k, |i, _| rows[active[i]].normal.dot(x0) - rows[active[i]].bound);
    let gram = &a * a.transpose();
    let chol = gram.cholesky()?;
    let mu = chol.solve(&rhs);
    if mu.iter().any(|&m| m < -1e-12) {
        return None;
    }
    Some(x0 - a.transpose() * mu)
}

fn next_combination(subset: &mut [usize], m: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < m - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn unit_square_rows() -> Vec<HalfspaceRow> {
        vec![
            HalfspaceRow::new(dvector![1.0, 0.0], 1.0),
            HalfspaceRow::new(dvector![-1.0, 0.0], 1.0),
            HalfspaceRow::new(dvector![0.0, 1.0], 1.0),
            HalfspaceRow::new(dvector![0.0, -1.0], 1.0),
        ]
    }

    #[test]
    fn bounds_clip() {
        let set = ProjectionSet::uniform_bounds(1, 0.0, 1.0).unwrap();
        assert_eq!(set.project(&dvector![5.0]).unwrap(), dvector![1.0]);
        assert!(set.contains(&dvector![0.5]).unwrap());
    }

    #[test]
    fn circle_radial_scaling() {
        let set = ProjectionSet::sphere(dvector![0.0, 0.0], 1.0).unwrap();
        let p = set.project(&dvector![3.0, 4.0]).unwrap();
        assert!((p - dvector![0.6, 0.8]).amax() < 1e-15);
    }

    #[test]
    fn soc_branches() {
        let set = ProjectionSet::SecondOrderCone { dim: 3 };
        assert_eq!(
            set.project(&dvector![3.0, 0.0, -4.0]).unwrap(),
            dvector![0.0, 0.0, 0.0]
        );
        assert_eq!(
            set.project(&dvector![3.0, 0.0, 1.0]).unwrap(),
            dvector![2.0, 0.0, 2.0]
        );
        let inside = dvector![0.1, 0.2, 1.0];
        assert_eq!(set.project(&inside).unwrap(), inside);
    }

    #[test]
    fn rectangle_out_pushes_largest_coordinate() {
        let set = ProjectionSet::RectangleOut {
            halfwidth: 1.0,
            dim: 2,
        };
        assert_eq!(set.project(&dvector![0.5, 0.2]).unwrap(), dvector![1.0, 0.2]);
        assert_eq!(set.project(&dvector![0.0, 0.0]).unwrap(), dvector![1.0, 0.0]);
        assert_eq!(set.project(&dvector![0.1, -0.7]).unwrap(), dvector![0.1, -1.0]);
    }

    #[test]
    fn polytope_out_nearest_side() {
        let rows = unit_square_rows();
        assert_eq!(
            project_polytope_out(&rows, &dvector![0.4, 0.1]),
            dvector![1.0, 0.1]
        );
        assert_eq!(
            project_polytope_out(&rows, &dvector![1.0, 0.3]),
            dvector![1.0, 0.3]
        );
        // four-way tie: lowest row index
        assert_eq!(
            project_polytope_out(&rows, &dvector![0.0, 0.0]),
            dvector![1.0, 0.0]
        );
        let set = ProjectionSet::PolytopeOut { rows };
        assert!(!set.contains(&dvector![0.0, 0.0]).unwrap());
    }

    #[test]
    fn polytope_in_corner() {
        let rows = unit_square_rows();
        let p = project_polytope_in(&rows, &dvector![3.0, 2.0]);
        assert!((p - dvector![1.0, 1.0]).amax() < 1e-14);
        let p = project_polytope_in(&rows, &dvector![3.0, 0.5]);
        assert!((p - dvector![1.0, 0.5]).amax() < 1e-14);
    }

    #[test]
    fn annulus_center_fallback() {
        let set = ProjectionSet::ball_outside(dvector![1.0, 1.0], 2.0).unwrap();
        let out = set.project_detailed(&dvector![1.0, 1.0]).unwrap();
        assert!(out.fallback);
        assert!((out.point - dvector![3.0, 1.0]).amax() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let set = ProjectionSet::uniform_bounds(2, 0.0, 1.0).unwrap();
        assert_eq!(
            set.project(&dvector![1.0]),
            Err(ProjectionError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn invalid_sets_rejected() {
        assert!(ProjectionSet::uniform_bounds(2, 1.0, 0.0).is_err());
        assert!(ProjectionSet::annulus(dvector![0.0], 2.0, 1.0).is_err());
        assert!(ProjectionSet::slab(dvector![0.0, 0.0], Some(0.0), None).is_err());
        let shear = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(ProjectionSet::transformed(
            ProjectionSet::ball(dvector![0.0, 0.0], 1.0).unwrap(),
            shear.clone(),
            dvector![0.0, 0.0]
        )
        .is_err());
        assert!(ProjectionSet::transformed(
            ProjectionSet::RectangleIn {
                halfwidth: 1.0,
                dim: 2
            },
            shear,
            dvector![0.0, 0.0]
        )
        .is_err());
    }

    #[test]
    fn rotated_rectangle_membership() {
        let set = ProjectionSet::rectangle(
            dvector![1.0, 2.0],
            2.0,
            0.5,
            std::f64::consts::FRAC_PI_2,
            false,
        )
        .unwrap();
        // long side now along world y
        assert!(set.contains(&dvector![1.0, 2.9]).unwrap());
        assert!(!set.contains(&dvector![1.3, 2.0]).unwrap());
        let p = set.project(&dvector![2.0, 2.0]).unwrap();
        assert!((p - dvector![1.25, 2.0]).amax() < 1e-12);
    }
}
