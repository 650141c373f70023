//! SO(n) with the bi-invariant metric induced by `<X, Y> = -tr(XY)/2`.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{DMatrix, Matrix3, Schur, SymmetricEigen};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Tolerance for orthogonality and determinant checks.
pub const ORTHO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SonElement {
    m: DMatrix<f64>,
}

impl SonElement {
    /// Checked constructor: `gᵀg = I` and `det g = 1` within [`ORTHO_TOL`].
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n < 2 || m.ncols() != n {
            return Err(Error::InvalidDimension {
                n,
                reason: "rotation matrices must be square with n >= 2",
            });
        }
        let dev = (m.transpose() * &m - DMatrix::identity(n, n)).amax();
        if dev.is_nan() || dev > ORTHO_TOL {
            return Err(Error::NotRotation(format!("|gᵀg - I| = {dev:e}")));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ORTHO_TOL {
            return Err(Error::NotRotation(format!("det = {det}")));
        }
        Ok(Self { m })
    }

    /// Row-major entries.
    pub fn from_row_slice(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for SO({n}), got {}",
                n * n,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        Self { m }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        self.m.transpose().as_slice().to_vec()
    }

    pub fn transpose(&self) -> Self {
        Self {
            m: self.m.transpose(),
        }
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn try_mul(&self, other: &SonElement) -> Result<SonElement> {
        check_same_n(self, other)?;
        Ok(Self {
            m: &self.m * &other.m,
        })
    }

    pub(crate) fn as_matrix3(&self) -> Option<Matrix3<f64>> {
        (self.n() == 3).then(|| Matrix3::from_iterator(self.m.iter().copied()))
    }
}

impl Mul for &SonElement {
    type Output = SonElement;

    /// Panics on dimension mismatch; see [`SonElement::try_mul`].
    fn mul(self, rhs: &SonElement) -> SonElement {
        self.try_mul(rhs).expect("SO(n) dimension mismatch")
    }
}

fn check_same_n(g: &SonElement, h: &SonElement) -> Result<()> {
    if g.n() != h.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            found: h.n(),
        });
    }
    Ok(())
}

/// Haar sample on SO(n): QR of a Gaussian matrix, columns of Q rescaled by
/// the signs of diag(R), then one column negated if the determinant is -1.
pub fn haar_son(n: usize, rng: &mut RngStream) -> Result<SonElement> {
    if n < 2 {
        return Err(Error::InvalidDimension {
            n,
            reason: "SO(n) requires n >= 2",
        });
    }
    loop {
        let z = DMatrix::from_fn(n, n, |_, _| rng.normal());
        let qr = z.qr();
        let r = qr.r();
        if (0..n).any(|i| r[(i, i)].abs() < 1e-12) {
            continue;
        }
        let mut q = qr.q();
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        if q.determinant() < 0.0 {
            q.column_mut(0).neg_mut();
        }
        return Ok(SonElement { m: q });
    }
}

/// Rotation angle of `g ∈ SO(3)`: `arccos((tr g - 1)/2)`.
pub fn rotation_angle_so3(g: &SonElement) -> Result<f64> {
    if g.n() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: g.n(),
        });
    }
    Ok(angle_from_trace3(g.trace()))
}

fn angle_from_trace3(tr: f64) -> f64 {
    ((tr - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

/// Principal rotation angles of an orthogonal matrix, one per invariant
/// plane, each in [0, π].
///
/// Read off the real Schur form: orthogonality makes the quasi-triangular
/// factor block diagonal with 2×2 rotation blocks and ±1 on the diagonal.
/// Pairs of -1 diagonal entries are one plane rotated by π.
pub fn principal_angles(g: &SonElement) -> Vec<f64> {
    let n = g.n();
    let t = match Schur::try_new(g.m.clone(), f64::EPSILON, 10_000) {
        Some(s) => s.unpack().1,
        None => return principal_angles_symmetric(g),
    };
    let mut angles = Vec::with_capacity(n / 2);
    let mut half_turns = 0usize;
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let c = 0.5 * (t[(i, i)] + t[(i + 1, i + 1)]);
            let s = 0.5 * (t[(i + 1, i)] - t[(i, i + 1)]);
            angles.push(s.atan2(c).abs());
            i += 2;
        } else {
            if t[(i, i)] < 0.0 {
                half_turns += 1;
            }
            i += 1;
        }
    }
    angles.extend(std::iter::repeat_n(PI, half_turns / 2));
    angles
}

// Fallback when the Schur iteration stalls: eigenvalues of the symmetric part
// are the cosines of the plane angles, each with multiplicity two.
fn principal_angles_symmetric(g: &SonElement) -> Vec<f64> {
    let sym = (&g.m + g.m.transpose()) * 0.5;
    let mut c: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    c.sort_by(|a, b| a.total_cmp(b));
    c.chunks_exact(2)
        .map(|p| (0.5 * (p[0] + p[1])).clamp(-1.0, 1.0).acos())
        .filter(|a| *a > 0.0)
        .collect()
}

/// Bi-invariant distance on SO(n): `scale · sqrt(Σ θ_k²)` over the principal
/// angles of `g hᵀ`.
pub fn dist_son(g: &SonElement, h: &SonElement, scale: f64) -> Result<f64> {
    check_same_n(g, h)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "metric scale must be positive, got {scale}"
        )));
    }
    let rel = SonElement {
        m: &g.m * h.m.transpose(),
    };
    let sq: f64 = principal_angles(&rel).iter().map(|a| a * a).sum();
    Ok(scale * sq.sqrt())
}

/// Block-diagonal embedding `diag(g, I_{n-3})` of SO(3) into SO(n).
pub fn embed_so3(g: &SonElement, n: usize) -> Result<SonElement> {
    if g.n() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: g.n(),
        });
    }
    if n <= 3 {
        return Err(Error::InvalidDimension {
            n,
            reason: "embedding target must have n > 3",
        });
    }
    let mut m = DMatrix::identity(n, n);
    m.view_mut((0, 0), (3, 3)).copy_from(&g.m);
    Ok(SonElement { m })
}

/// Orthonormal basis of so(3) for `<A, B> = -tr(AB)/2`.
pub fn so3_generator(k: usize) -> Result<Matrix3<f64>> {
    #[rustfmt::skip]
    let a = match k {
        1 => Matrix3::new(0.0, 0.0, 0.0,
                          0.0, 0.0, -1.0,
                          0.0, 1.0, 0.0),
        2 => Matrix3::new(0.0, 0.0, 1.0,
                          0.0, 0.0, 0.0,
                          -1.0, 0.0, 0.0),
        3 => Matrix3::new(0.0, -1.0, 0.0,
                          1.0, 0.0, 0.0,
                          0.0, 0.0, 0.0),
        _ => return Err(Error::InvalidArgument(format!("generator index {k} not in 1..=3"))),
    };
    Ok(a)
}

/// `exp(t A_k)` via Rodrigues: `I + sin t · A + (1 - cos t) · A²` (A is a unit
/// generator, so `A³ = -A`).
pub fn exp_so3(t: f64, k: usize) -> Result<SonElement> {
    let a = so3_generator(k)?;
    let (s, c) = t.sin_cos();
    let r = Matrix3::identity() + a * s + a * a * (1.0 - c);
    Ok(SonElement {
        m: DMatrix::from_iterator(3, 3, r.iter().copied()),
    })
}

/// The standard representative of rotation angle `t`:
///
/// ```text
/// [  cos t   sin t   0 ]
/// [ -sin t   cos t   0 ]
/// [    0       0     1 ]
/// ```
///
/// Equal to `exp(-t A_3)`, and conjugate to `exp(t A_1)`.
pub fn delta(t: f64) -> SonElement {
    let (s, c) = t.sin_cos();
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(3, 3, &[
        c, s, 0.0,
        -s, c, 0.0,
        0.0, 0.0, 1.0,
    ]);
    SonElement { m }
}

/// Block diagonal matrix of the given SO blocks.
pub fn block_diag(blocks: &[&SonElement]) -> SonElement {
    let n: usize = blocks.iter().map(|b| b.n()).sum();
    let mut m = DMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        m.view_mut((off, off), (b.n(), b.n())).copy_from(&b.m);
        off += b.n();
    }
    SonElement { m }
}

/// Planar rotation by `t`.
pub fn rotation2(t: f64) -> SonElement {
    let (s, c) = t.sin_cos();
    SonElement {
        m: DMatrix::from_row_slice(2, 2, &[c, -s, s, c]),
    }
}
