//! Concrete matrix groups: SO(3) and SE(3).
//!
//! Algebra coordinates are fixed: so(3) uses the basis `hat(e_i)` with
//! `hat(w) = [[0,-w3,w2],[w3,0,-w1],[-w2,w1,0]]`; se(3) coordinates are
//! ordered `(omega; v)` with the 4x4 generator `[[hat(omega), v],[0, 0]]`.
//! Elements are stored as plain 3x3 rotation matrices or 4x4 homogeneous
//! transforms.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    SO3,
    SE3,
}

impl Group {
    /// Dimension of the Lie algebra.
    pub fn dim(self) -> usize {
        match self {
            Group::SO3 => 3,
            Group::SE3 => 6,
        }
    }

    /// Side length of the matrix representation.
    pub fn matrix_size(self) -> usize {
        match self {
            Group::SO3 => 3,
            Group::SE3 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Group::SO3 => "SO3",
            Group::SE3 => "SE3",
        }
    }

    pub fn identity_matrix<T: Real>(self) -> DMatrix<T> {
        DMatrix::identity(self.matrix_size(), self.matrix_size())
    }

    pub(crate) fn check_vector<T: Real>(self, v: &DVector<T>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_matrix<T: Real>(self, m: &DMatrix<T>) -> Result<()> {
        let n = self.matrix_size();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if m.nrows() != n { m.nrows() } else { m.ncols() },
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// fixed-size helpers

pub(crate) fn skew<T: Real>(w: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -w[2], w[1], w[2], z, -w[0], -w[1], w[0], z)
}

pub(crate) fn unskew<T: Real>(m: &Matrix3<T>) -> Vector3<T> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

pub(crate) fn rotation_block<T: Real>(m: &DMatrix<T>) -> Matrix3<T> {
    Matrix3::from_fn(|i, j| m[(i, j)])
}

pub(crate) fn translation_block<T: Real>(m: &DMatrix<T>) -> Vector3<T> {
    Vector3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)])
}

pub(crate) fn se3_matrix<T: Real>(r: &Matrix3<T>, p: &Vector3<T>) -> DMatrix<T> {
    let mut m = DMatrix::identity(4, 4);
    m.view_mut((0, 0), (3, 3)).copy_from(r);
    m.view_mut((0, 3), (3, 1)).copy_from(p);
    m
}

fn so3_matrix<T: Real>(r: &Matrix3<T>) -> DMatrix<T> {
    DMatrix::from_fn(3, 3, |i, j| r[(i, j)])
}

fn split6<T: Real>(v: &DVector<T>) -> (Vector3<T>, Vector3<T>) {
    (
        Vector3::new(v[0], v[1], v[2]),
        Vector3::new(v[3], v[4], v[5]),
    )
}

fn join6<T: Real>(a: &Vector3<T>, b: &Vector3<T>) -> DVector<T> {
    DVector::from_column_slice(&[a[0], a[1], a[2], b[0], b[1], b[2]])
}

/// `sin(t)/t`, `(1-cos t)/t^2`, `(t - sin t)/t^3` for `t = |w|`.
fn rodrigues_coeffs<T: Real>(theta_sq: T) -> (T, T, T) {
    let theta = theta_sq.sqrt();
    if theta < T::small_angle() {
        let t2 = theta_sq;
        (
            T::one() - t2 / T::lit(6.0),
            T::lit(0.5) - t2 / T::lit(24.0),
            T::one() / T::lit(6.0) - t2 / T::lit(120.0),
        )
    } else {
        let half = theta / T::lit(2.0);
        let s = half.sin();
        (
            theta.sin() / theta,
            T::lit(2.0) * s * s / theta_sq,
            (theta - theta.sin()) / (theta_sq * theta),
        )
    }
}

pub(crate) fn so3_exp<T: Real>(w: &Vector3<T>) -> Matrix3<T> {
    let k = skew(w);
    let (a, b, _) = rodrigues_coeffs(w.norm_squared());
    Matrix3::identity() + k * a + k * k * b
}

/// Left Jacobian of SO(3).
pub(crate) fn so3_left_jacobian<T: Real>(w: &Vector3<T>) -> Matrix3<T> {
    let k = skew(w);
    let (_, b, c) = rodrigues_coeffs(w.norm_squared());
    Matrix3::identity() + k * b + k * k * c
}

fn so3_left_jacobian_inv<T: Real>(w: &Vector3<T>) -> Matrix3<T> {
    let k = skew(w);
    let theta_sq = w.norm_squared();
    let theta = theta_sq.sqrt();
    let d = if theta < T::small_angle() {
        T::one() / T::lit(12.0) + theta_sq / T::lit(720.0)
    } else {
        let half = theta / T::lit(2.0);
        (T::one() - half * half.cos() / half.sin()) / theta_sq
    };
    Matrix3::identity() - k * T::lit(0.5) + k * k * d
}

pub(crate) fn so3_log<T: Real>(r: &Matrix3<T>) -> Result<Vector3<T>> {
    let two = T::lit(2.0);
    let a = unskew(&(r - r.transpose()));
    let s = a.norm() / two;
    let c = (r.trace() - T::one()) / two;
    let theta = s.atan2(c);
    let pi = T::pi();
    if pi - theta <= T::log_cut() * pi {
        return Err(Error::LogSingularity {
            trace: r.trace().to_f64_lossy(),
        });
    }
    if theta < T::small_angle() {
        return Ok(a * ((T::one() + theta * theta / T::lit(6.0)) / two));
    }
    if theta < pi - T::lit(1e-2) {
        return Ok(a * (theta / (two * s)));
    }
    // Near pi the skew part vanishes; read the axis from the symmetric part
    // (R + R^T)/2 - cos(theta) I = (1 - cos(theta)) n n^T.
    let sym = (r + r.transpose()) / two - Matrix3::identity() * c;
    let one_minus_c = T::one() - c;
    let mut j = 0;
    for i in 1..3 {
        if sym[(i, i)] > sym[(j, j)] {
            j = i;
        }
    }
    let mut n: Vector3<T> = sym.column(j).into_owned() / (sym[(j, j)] * one_minus_c).sqrt();
    n /= n.norm();
    if n.dot(&a) < T::zero() {
        n = -n;
    }
    Ok(n * theta)
}

// ---------------------------------------------------------------------------
// public operations

/// Maps algebra coordinates to the matrix generator.
pub fn hat<T: Real>(g: Group, v: &DVector<T>) -> Result<DMatrix<T>> {
    g.check_vector(v)?;
    Ok(match g {
        Group::SO3 => so3_matrix(&skew(&Vector3::new(v[0], v[1], v[2]))),
        Group::SE3 => {
            let (w, u) = split6(v);
            let mut m = DMatrix::zeros(4, 4);
            m.view_mut((0, 0), (3, 3)).copy_from(&skew(&w));
            m.view_mut((0, 3), (3, 1)).copy_from(&u);
            m
        }
    })
}

/// Inverse of [`hat`]. Reads only the entries a generator can populate.
pub fn vee<T: Real>(g: Group, m: &DMatrix<T>) -> Result<DVector<T>> {
    g.check_matrix(m)?;
    let w = Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]);
    Ok(match g {
        Group::SO3 => DVector::from_column_slice(w.as_slice()),
        Group::SE3 => join6(&w, &translation_block(m)),
    })
}

/// Closed-form exponential (Rodrigues for SO(3), left Jacobian for SE(3)).
pub fn exp_matrix<T: Real>(g: Group, v: &DVector<T>) -> Result<DMatrix<T>> {
    g.check_vector(v)?;
    Ok(match g {
        Group::SO3 => so3_matrix(&so3_exp(&Vector3::new(v[0], v[1], v[2]))),
        Group::SE3 => {
            let (w, u) = split6(v);
            se3_matrix(&so3_exp(&w), &(so3_left_jacobian(&w) * u))
        }
    })
}

/// Principal logarithm. Refuses rotation angles within the cut at pi.
pub fn log_matrix<T: Real>(g: Group, m: &DMatrix<T>) -> Result<DVector<T>> {
    g.check_matrix(m)?;
    let w = so3_log(&rotation_block(m))?;
    Ok(match g {
        Group::SO3 => DVector::from_column_slice(w.as_slice()),
        Group::SE3 => join6(&w, &(so3_left_jacobian_inv(&w) * translation_block(m))),
    })
}

/// Matrix of `Ad_X` acting on algebra coordinates.
pub fn adjoint_matrix<T: Real>(g: Group, x: &DMatrix<T>) -> Result<DMatrix<T>> {
    g.check_matrix(x)?;
    let r = rotation_block(x);
    Ok(match g {
        Group::SO3 => so3_matrix(&r),
        Group::SE3 => {
            let p = translation_block(x);
            let mut ad = DMatrix::zeros(6, 6);
            ad.view_mut((0, 0), (3, 3)).copy_from(&r);
            ad.view_mut((3, 3), (3, 3)).copy_from(&r);
            ad.view_mut((3, 0), (3, 3)).copy_from(&(skew(&p) * r));
            ad
        }
    })
}

/// Lie bracket `[a, b]` in coordinates, i.e. `vee(hat(a) hat(b) - hat(b) hat(a))`.
pub fn bracket<T: Real>(g: Group, a: &DVector<T>, b: &DVector<T>) -> Result<DVector<T>> {
    g.check_vector(a)?;
    g.check_vector(b)?;
    Ok(match g {
        Group::SO3 => {
            let c = Vector3::new(a[0], a[1], a[2]).cross(&Vector3::new(b[0], b[1], b[2]));
            DVector::from_column_slice(c.as_slice())
        }
        Group::SE3 => {
            let (wa, va) = split6(a);
            let (wb, vb) = split6(b);
            join6(&wa.cross(&wb), &(wa.cross(&vb) - wb.cross(&va)))
        }
    })
}

/// Orthogonal projection onto skew-symmetric matrices, `(Z - Z^T)/2`.
pub fn skew_project<T: Real>(z: &DMatrix<T>) -> Result<DMatrix<T>> {
    if !z.is_square() {
        return Err(Error::DimensionMismatch {
            expected: z.nrows(),
            got: z.ncols(),
        });
    }
    Ok((z - z.transpose()) * T::lit(0.5))
}

pub(crate) fn skew_project3<T: Real>(z: &Matrix3<T>) -> Matrix3<T> {
    (z - z.transpose()) * T::lit(0.5)
}

fn so3_residual<T: Real>(r: &Matrix3<T>) -> T {
    (r.transpose() * r - Matrix3::identity()).norm() + (r.determinant() - T::one()).abs()
}

/// How far `m` is from the group. Zero exactly on group elements.
pub fn membership_residual<T: Real>(g: Group, m: &DMatrix<T>) -> Result<T> {
    g.check_matrix(m)?;
    let rot = so3_residual(&rotation_block(m));
    Ok(match g {
        Group::SO3 => rot,
        Group::SE3 => {
            let row = nalgebra::Vector4::new(m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)] - T::one());
            rot + row.norm()
        }
    })
}

/// Closest rotation in Frobenius norm (orthogonal polar factor).
pub(crate) fn project_rotation<T: Real>(m: &Matrix3<T>) -> Matrix3<T> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let d = (u * vt).determinant();
    let mut s = Matrix3::identity();
    s[(2, 2)] = d.signum();
    u * s * vt
}

/// Nearest group element to `m`.
pub fn project<T: Real>(g: Group, m: &DMatrix<T>) -> Result<DMatrix<T>> {
    g.check_matrix(m)?;
    let r = project_rotation(&rotation_block(m));
    Ok(match g {
        Group::SO3 => so3_matrix(&r),
        Group::SE3 => se3_matrix(&r, &translation_block(m)),
    })
}

/// Closed-form inverse of a group element matrix.
pub fn inverse_matrix<T: Real>(g: Group, m: &DMatrix<T>) -> Result<DMatrix<T>> {
    g.check_matrix(m)?;
    let rt = rotation_block(m).transpose();
    Ok(match g {
        Group::SO3 => so3_matrix(&rt),
        Group::SE3 => se3_matrix(&rt, &(-(rt * translation_block(m)))),
    })
}
