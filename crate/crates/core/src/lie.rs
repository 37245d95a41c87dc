//! Group elements, algebra vectors, tangent vectors and metrics.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::groups::{self, Group};
use crate::scalar::Real;

/// Coordinates of a Lie algebra element in the canonical basis.
#[derive(Clone, PartialEq)]
pub struct AlgebraVector<T: Real>(DVector<T>);

impl<T: Real> AlgebraVector<T> {
    pub fn new(coords: DVector<T>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("algebra vector"));
        }
        Ok(Self(coords))
    }

    pub fn from_slice(xs: &[T]) -> Result<Self> {
        Self::new(DVector::from_column_slice(xs))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    pub(crate) fn from_raw(coords: DVector<T>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &DVector<T> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<T> {
        self.0
    }

    pub fn as_slice(&self) -> &[T] {
        self.0.as_slice()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Euclidean norm of the coordinates.
    pub fn norm(&self) -> T {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl<T: Real> fmt::Debug for AlgebraVector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl<T: Real> Add for &AlgebraVector<T> {
    type Output = AlgebraVector<T>;
    fn add(self, rhs: Self) -> AlgebraVector<T> {
        AlgebraVector(&self.0 + &rhs.0)
    }
}

impl<T: Real> Sub for &AlgebraVector<T> {
    type Output = AlgebraVector<T>;
    fn sub(self, rhs: Self) -> AlgebraVector<T> {
        AlgebraVector(&self.0 - &rhs.0)
    }
}

impl<T: Real> Neg for &AlgebraVector<T> {
    type Output = AlgebraVector<T>;
    fn neg(self) -> AlgebraVector<T> {
        AlgebraVector(-&self.0)
    }
}

impl<T: Real> Mul<T> for &AlgebraVector<T> {
    type Output = AlgebraVector<T>;
    fn mul(self, rhs: T) -> AlgebraVector<T> {
        AlgebraVector(&self.0 * rhs)
    }
}

/// A group element in its matrix representation.
///
/// Construction enforces membership: residuals up to [`Real::reproject_tol`]
/// are kept as is, residuals up to [`Real::membership_tol`] are silently
/// projected back onto the group, anything larger is an error.
#[derive(Clone, PartialEq)]
pub struct GroupElement<T: Real> {
    group: Group,
    matrix: DMatrix<T>,
}

impl<T: Real> fmt::Debug for GroupElement<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.group.name(), self.matrix)
    }
}

impl<T: Real> GroupElement<T> {
    pub fn new(group: Group, matrix: DMatrix<T>) -> Result<Self> {
        group.check_matrix(&matrix)?;
        if matrix.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("group element"));
        }
        let residual = groups::membership_residual(group, &matrix)?;
        if residual <= T::reproject_tol() {
            Ok(Self { group, matrix })
        } else if residual <= T::membership_tol() {
            Ok(Self {
                group,
                matrix: groups::project(group, &matrix)?,
            })
        } else {
            Err(Error::NotInGroup {
                group,
                residual: residual.to_f64_lossy(),
            })
        }
    }

    /// Projects an arbitrary matrix onto the group, whatever its residual.
    pub fn projected(group: Group, matrix: &DMatrix<T>) -> Result<Self> {
        Ok(Self {
            group,
            matrix: groups::project(group, matrix)?,
        })
    }

    pub fn identity(group: Group) -> Self {
        Self {
            group,
            matrix: group.identity_matrix(),
        }
    }

    pub fn exp(group: Group, v: &AlgebraVector<T>) -> Result<Self> {
        Ok(Self {
            group,
            matrix: groups::exp_matrix(group, v.coords())?,
        })
    }

    /// Builds an element from a slice of algebra coordinates.
    pub fn exp_coords(group: Group, coords: &[T]) -> Result<Self> {
        Self::exp(group, &AlgebraVector::from_slice(coords)?)
    }

    pub fn log(&self) -> Result<AlgebraVector<T>> {
        Ok(AlgebraVector(groups::log_matrix(self.group, &self.matrix)?))
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn residual(&self) -> T {
        groups::membership_residual(self.group, &self.matrix).expect("validated shape")
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.same_group(other)?;
        let product = &self.matrix * &other.matrix;
        if groups::membership_residual(self.group, &product)? > T::reproject_tol() {
            return Self::new(self.group, product);
        }
        Ok(Self {
            group: self.group,
            matrix: product,
        })
    }

    pub fn inverse(&self) -> Self {
        Self {
            group: self.group,
            matrix: groups::inverse_matrix(self.group, &self.matrix).expect("validated shape"),
        }
    }

    pub fn adjoint_matrix(&self) -> DMatrix<T> {
        groups::adjoint_matrix(self.group, &self.matrix).expect("validated shape")
    }

    pub fn adjoint(&self, v: &AlgebraVector<T>) -> Result<AlgebraVector<T>> {
        self.group.check_vector(v.coords())?;
        Ok(AlgebraVector(self.adjoint_matrix() * v.coords()))
    }

    /// `Ad_{X^{-1}} v` without forming the inverse separately.
    pub fn adjoint_inv(&self, v: &AlgebraVector<T>) -> Result<AlgebraVector<T>> {
        self.inverse().adjoint(v)
    }

    /// Reprojects onto the group unconditionally.
    pub fn reprojected(&self) -> Self {
        Self {
            group: self.group,
            matrix: groups::project(self.group, &self.matrix).expect("validated shape"),
        }
    }

    pub(crate) fn same_group(&self, other: &Self) -> Result<()> {
        if self.group != other.group {
            return Err(Error::GroupMismatch {
                left: self.group,
                right: other.group,
            });
        }
        Ok(())
    }

    /// Geodesic-chart distance `|log(self * other^{-1})|`.
    pub fn distance(&self, other: &Self) -> Result<T> {
        Ok(self.compose(&other.inverse())?.log()?.norm())
    }
}

pub fn compose<T: Real>(a: &GroupElement<T>, b: &GroupElement<T>) -> Result<GroupElement<T>> {
    a.compose(b)
}

pub fn invert<T: Real>(a: &GroupElement<T>) -> GroupElement<T> {
    a.inverse()
}

pub fn adjoint<T: Real>(x: &GroupElement<T>, v: &AlgebraVector<T>) -> Result<AlgebraVector<T>> {
    x.adjoint(v)
}

/// Which trivialisation of the tangent bundle a coordinate vector refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    /// Left-translated: ambient matrix `X hat(c)`.
    Body,
    /// Right-translated: ambient matrix `hat(c) X`.
    Spatial,
}

#[derive(Clone, PartialEq)]
pub struct TangentVector<T: Real> {
    pub base: GroupElement<T>,
    pub coords: AlgebraVector<T>,
    pub frame: Frame,
}

impl<T: Real> fmt::Debug for TangentVector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}", self.frame, self.coords)
    }
}

impl<T: Real> TangentVector<T> {
    pub fn new(base: GroupElement<T>, coords: AlgebraVector<T>, frame: Frame) -> Result<Self> {
        base.group.check_vector(coords.coords())?;
        Ok(Self { base, coords, frame })
    }

    pub fn body(base: GroupElement<T>, coords: AlgebraVector<T>) -> Result<Self> {
        Self::new(base, coords, Frame::Body)
    }

    pub fn spatial(base: GroupElement<T>, coords: AlgebraVector<T>) -> Result<Self> {
        Self::new(base, coords, Frame::Spatial)
    }

    pub fn zero(base: GroupElement<T>, frame: Frame) -> Self {
        let dim = base.group.dim();
        Self {
            base,
            coords: AlgebraVector::zeros(dim),
            frame,
        }
    }

    /// Reads an ambient matrix as a tangent vector at `base`, checking that it
    /// actually is one.
    pub fn from_ambient(base: GroupElement<T>, ambient: &DMatrix<T>, frame: Frame) -> Result<Self> {
        let g = base.group;
        g.check_matrix(ambient)?;
        let body_gen = base.inverse().matrix() * ambient;
        let body = groups::vee(g, &body_gen)?;
        let rebuilt = base.matrix() * groups::hat(g, &body)?;
        let residual = (rebuilt - ambient).norm();
        let scale = T::one() + ambient.norm();
        if !(residual <= T::tangency_tol() * scale) {
            return Err(Error::NotTangent {
                residual: residual.to_f64_lossy(),
            });
        }
        let tv = Self {
            base,
            coords: AlgebraVector::new(body)?,
            frame: Frame::Body,
        };
        Ok(tv.to_frame(frame))
    }

    pub fn to_frame(&self, target: Frame) -> Self {
        if target == self.frame {
            return self.clone();
        }
        let coords = match target {
            Frame::Spatial => self.base.adjoint_matrix() * self.coords.coords(),
            Frame::Body => self.base.inverse().adjoint_matrix() * self.coords.coords(),
        };
        Self {
            base: self.base.clone(),
            coords: AlgebraVector(coords),
            frame: target,
        }
    }

    pub fn body_coords(&self) -> AlgebraVector<T> {
        self.to_frame(Frame::Body).coords
    }

    pub fn spatial_coords(&self) -> AlgebraVector<T> {
        self.to_frame(Frame::Spatial).coords
    }

    /// The tangent vector as a matrix in the ambient space.
    pub fn ambient(&self) -> DMatrix<T> {
        let h = groups::hat(self.base.group, self.coords.coords()).expect("validated shape");
        match self.frame {
            Frame::Body => self.base.matrix() * h,
            Frame::Spatial => h * self.base.matrix(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            base: self.base.clone(),
            coords: &self.coords * s,
            frame: self.frame,
        }
    }

    /// Sum of two tangent vectors at the same base, in the frame of `self`.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.check_same_base(other)?;
        let o = other.to_frame(self.frame);
        Ok(Self {
            base: self.base.clone(),
            coords: &self.coords + &o.coords,
            frame: self.frame,
        })
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.plus(&other.scale(-T::one()))
    }

    fn check_same_base(&self, other: &Self) -> Result<()> {
        self.base.same_group(&other.base)?;
        let gap = (self.base.matrix() - other.base.matrix()).amax();
        if gap > T::tangency_tol() {
            return Err(Error::Usage(format!(
                "tangent vectors at different base points (gap {:e})",
                gap.to_f64_lossy()
            )));
        }
        Ok(())
    }
}

pub fn to_frame<T: Real>(t: &TangentVector<T>, target: Frame) -> TangentVector<T> {
    t.to_frame(target)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricInvariance {
    LeftInvariant,
    RightInvariant,
    BiInvariant,
}

/// An inner product on the algebra, transported over the group by left
/// translation (left-invariant), right translation (right-invariant), or
/// either (bi-invariant).
#[derive(Debug, Clone, PartialEq)]
pub struct Metric<T: Real> {
    group: Group,
    gram: DMatrix<T>,
    gram_inv: DMatrix<T>,
    invariance: MetricInvariance,
}

impl<T: Real> Metric<T> {
    pub fn new(group: Group, gram: DMatrix<T>, invariance: MetricInvariance) -> Result<Self> {
        let n = group.dim();
        if gram.nrows() != n || gram.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: gram.nrows(),
            });
        }
        if gram.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("gram matrix"));
        }
        let asym = (&gram - gram.transpose()).amax();
        if asym > T::reproject_tol() * (T::one() + gram.amax()) {
            return Err(Error::InvalidMetric(format!(
                "gram not symmetric (defect {:e})",
                asym.to_f64_lossy()
            )));
        }
        let chol = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidMetric("gram not positive definite".into()))?;
        let gram_inv = chol.inverse();
        let metric = Self {
            group,
            gram,
            gram_inv,
            invariance,
        };
        if invariance == MetricInvariance::BiInvariant {
            metric.check_ad_invariance()?;
        }
        Ok(metric)
    }

    /// Identity gram matrix.
    pub fn euclidean(group: Group, invariance: MetricInvariance) -> Result<Self> {
        Self::new(group, DMatrix::identity(group.dim(), group.dim()), invariance)
    }

    /// The trace form `tr(A^T B)` of the generators: `2 I` on so(3) and
    /// `tr(W1^T W2) + V1^T V2` on se(3).
    pub fn trace_form(group: Group, invariance: MetricInvariance) -> Result<Self> {
        let mut gram = DMatrix::identity(group.dim(), group.dim());
        for i in 0..3 {
            gram[(i, i)] = T::lit(2.0);
        }
        Self::new(group, gram, invariance)
    }

    fn check_ad_invariance(&self) -> Result<()> {
        let probes: [[f64; 6]; 3] = [
            [0.3, -1.1, 0.7, 0.5, 0.2, -0.9],
            [2.1, 0.4, -0.3, -1.0, 1.5, 0.1],
            [-0.6, 0.9, 2.4, 0.0, -0.7, 1.2],
        ];
        for p in probes {
            let x = GroupElement::exp_coords(
                self.group,
                &p[..self.group.dim()].iter().map(|&c| T::lit(c)).collect::<Vec<_>>(),
            )?;
            let ad = x.adjoint_matrix();
            let defect = (ad.transpose() * &self.gram * ad - &self.gram).amax();
            if defect > T::membership_tol() * (T::one() + self.gram.amax()) {
                return Err(Error::InvalidMetric(format!(
                    "declared bi-invariant but Ad-invariance defect is {:e}",
                    defect.to_f64_lossy()
                )));
            }
        }
        Ok(())
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn gram(&self) -> &DMatrix<T> {
        &self.gram
    }

    pub fn invariance(&self) -> MetricInvariance {
        self.invariance
    }

    /// The frame in which `gram` applies to tangent coordinates.
    pub fn frame(&self) -> Frame {
        match self.invariance {
            MetricInvariance::RightInvariant => Frame::Spatial,
            MetricInvariance::LeftInvariant | MetricInvariance::BiInvariant => Frame::Body,
        }
    }

    pub fn inner(&self, v: &AlgebraVector<T>, w: &AlgebraVector<T>) -> T {
        v.coords().dot(&(&self.gram * w.coords()))
    }

    /// Inner product of two tangent vectors at the same base.
    pub fn inner_tangent(&self, a: &TangentVector<T>, b: &TangentVector<T>) -> T {
        let f = self.frame();
        self.inner(&a.to_frame(f).coords, &b.to_frame(f).coords)
    }

    pub fn norm_sq_tangent(&self, a: &TangentVector<T>) -> T {
        self.inner_tangent(a, a)
    }

    /// Turns a covector (coordinates of a differential) into the vector it
    /// represents under this metric.
    pub fn raise(&self, covector: &DVector<T>) -> AlgebraVector<T> {
        AlgebraVector(&self.gram_inv * covector)
    }
}

pub fn metric_inner<T: Real>(m: &Metric<T>, v: &AlgebraVector<T>, w: &AlgebraVector<T>) -> T {
    m.inner(v, w)
}
