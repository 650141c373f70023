//! SU(2) as unit quaternions.
//!
//! The element with coordinates `(a1, a2, b1, b2)` is the complex matrix
//!
//! ```text
//!  [  a     b  ]      a = a1 + i a2
//!  [ -b̄    ā  ]      b = b1 + i b2
//! ```
//!
//! and the coordinate map to the unit sphere of R^4 is an isometry for the
//! bi-invariant metric induced by `<X, Y> = -tr(XY)/2`.

use std::f64::consts::{PI, TAU};
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Su2Element {
    a1: f64,
    a2: f64,
    b1: f64,
    b2: f64,
}

/// Polar coordinates on S^3:
/// `a1 = cos θ`, `a2 = sin θ cos φ`, `b1 = sin θ sin φ cos ψ`, `b2 = sin θ sin φ sin ψ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarCoords {
    pub theta: f64,
    pub phi: f64,
    pub psi: f64,
}

impl Su2Element {
    pub const IDENTITY: Su2Element = Su2Element {
        a1: 1.0,
        a2: 0.0,
        b1: 0.0,
        b2: 0.0,
    };

    pub const MINUS_IDENTITY: Su2Element = Su2Element {
        a1: -1.0,
        a2: 0.0,
        b1: 0.0,
        b2: 0.0,
    };

    /// Checked constructor; the coordinates must already have unit norm.
    pub fn new(a1: f64, a2: f64, b1: f64, b2: f64) -> Result<Self> {
        let n2 = a1 * a1 + a2 * a2 + b1 * b1 + b2 * b2;
        if !n2.is_finite() || (n2 - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit(n2));
        }
        Ok(Self { a1, a2, b1, b2 })
    }

    /// Projects a non-zero vector of R^4 onto the sphere.
    pub fn normalized(a1: f64, a2: f64, b1: f64, b2: f64) -> Result<Self> {
        let n = (a1 * a1 + a2 * a2 + b1 * b1 + b2 * b2).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotUnit(n * n));
        }
        Ok(Self {
            a1: a1 / n,
            a2: a2 / n,
            b1: b1 / n,
            b2: b2 / n,
        })
    }

    /// `cos ψ + i sin ψ` on the diagonal, `b = 0`.
    pub fn diagonal(psi: f64) -> Self {
        Self {
            a1: psi.cos(),
            a2: psi.sin(),
            b1: 0.0,
            b2: 0.0,
        }
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn a2(&self) -> f64 {
        self.a2
    }
    pub fn b1(&self) -> f64 {
        self.b1
    }
    pub fn b2(&self) -> f64 {
        self.b2
    }

    pub fn norm_sq(&self) -> f64 {
        self.a1 * self.a1 + self.a2 * self.a2 + self.b1 * self.b1 + self.b2 * self.b2
    }

    /// The coordinate homeomorphism onto S^3.
    pub fn to_sphere(&self) -> [f64; 4] {
        [self.a1, self.a2, self.b1, self.b2]
    }

    pub fn from_sphere(x: [f64; 4]) -> Result<Self> {
        Self::new(x[0], x[1], x[2], x[3])
    }

    /// Conjugate transpose, which is the group inverse.
    pub fn inverse(&self) -> Self {
        Self {
            a1: self.a1,
            a2: -self.a2,
            b1: -self.b1,
            b2: -self.b2,
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            a1: -self.a1,
            a2: -self.a2,
            b1: -self.b1,
            b2: -self.b2,
        }
    }

    /// Polar coordinates. At θ ∈ {0, π} the angles φ and ψ are reported as 0,
    /// and likewise ψ = 0 when φ ∈ {0, π}.
    pub fn polar(&self) -> PolarCoords {
        let r3 = (self.a2 * self.a2 + self.b1 * self.b1 + self.b2 * self.b2).sqrt();
        let theta = r3.atan2(self.a1);
        if r3 == 0.0 {
            return PolarCoords {
                theta,
                phi: 0.0,
                psi: 0.0,
            };
        }
        let r2 = (self.b1 * self.b1 + self.b2 * self.b2).sqrt();
        let phi = r2.atan2(self.a2);
        if r2 == 0.0 {
            return PolarCoords {
                theta,
                phi,
                psi: 0.0,
            };
        }
        let mut psi = self.b2.atan2(self.b1);
        if psi < 0.0 {
            psi += TAU;
        }
        if psi >= TAU {
            psi = 0.0;
        }
        PolarCoords { theta, phi, psi }
    }

    pub fn from_polar(p: PolarCoords) -> Self {
        let (st, ct) = p.theta.sin_cos();
        let (sp, cp) = p.phi.sin_cos();
        let (ss, cs) = p.psi.sin_cos();
        Self {
            a1: ct,
            a2: st * cp,
            b1: st * sp * cs,
            b2: st * sp * ss,
        }
    }

    /// Geodesic distance to the identity, `arccos(a1)` in [0, π].
    pub fn angle(&self) -> f64 {
        dist_su2(self, &Self::IDENTITY)
    }
}

impl Mul for Su2Element {
    type Output = Su2Element;

    /// Matrix product: `a'' = a a' - b b̄'`, `b'' = a b' + b ā'`.
    fn mul(self, h: Su2Element) -> Su2Element {
        let g = self;
        Su2Element {
            a1: g.a1 * h.a1 - g.a2 * h.a2 - g.b1 * h.b1 - g.b2 * h.b2,
            a2: g.a1 * h.a2 + g.a2 * h.a1 + g.b1 * h.b2 - g.b2 * h.b1,
            b1: g.a1 * h.b1 - g.a2 * h.b2 + g.b1 * h.a1 + g.b2 * h.a2,
            b2: g.a1 * h.b2 + g.a2 * h.b1 - g.b1 * h.a2 + g.b2 * h.a1,
        }
    }
}

/// Haar sample: four independent standard normals projected onto S^3.
pub fn haar_su2(rng: &mut RngStream) -> Su2Element {
    loop {
        let x = [rng.normal(), rng.normal(), rng.normal(), rng.normal()];
        if let Ok(g) = Su2Element::normalized(x[0], x[1], x[2], x[3]) {
            return g;
        }
    }
}

/// Bi-invariant distance: the S^3 geodesic angle, i.e. the angle of `g h⁻¹`.
pub fn dist_su2(g: &Su2Element, h: &Su2Element) -> f64 {
    // Re(a of g h⁻¹) = <x, y> for the sphere points x, y; the angle is taken
    // as 2·atan2(|x - y|, |x + y|), which equals arccos(<x, y>) but keeps full
    // precision near 0 and π.
    let (x, y) = (g.to_sphere(), h.to_sphere());
    let (mut dm, mut dp) = (0.0, 0.0);
    for k in 0..4 {
        dm += (x[k] - y[k]) * (x[k] - y[k]);
        dp += (x[k] + y[k]) * (x[k] + y[k]);
    }
    let d = 2.0 * dm.sqrt().atan2(dp.sqrt());
    debug_assert!((0.0..=PI).contains(&d));
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &Su2Element, b: &Su2Element, tol: f64) {
        for (x, y) in a.to_sphere().iter().zip(b.to_sphere()) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn product_matches_complex_matrices() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..50 {
            let g = haar_su2(&mut rng);
            let h = haar_su2(&mut rng);
            // explicit complex 2x2 product
            let (a, b) = ((g.a1, g.a2), (g.b1, g.b2));
            let (c, d) = ((h.a1, h.a2), (h.b1, h.b2));
            let cm = |x: (f64, f64), y: (f64, f64)| (x.0 * y.0 - x.1 * y.1, x.0 * y.1 + x.1 * y.0);
            let conj = |x: (f64, f64)| (x.0, -x.1);
            // [a b; -b̄ ā] [c d; -d̄ c̄], first row
            let ac = cm(a, c);
            let bdb = cm(b, conj(d));
            let ad = cm(a, d);
            let bcb = cm(b, conj(c));
            let p = g * h;
            assert!((p.a1 - (ac.0 - bdb.0)).abs() < 1e-14);
            assert!((p.a2 - (ac.1 - bdb.1)).abs() < 1e-14);
            assert!((p.b1 - (ad.0 + bcb.0)).abs() < 1e-14);
            assert!((p.b2 - (ad.1 + bcb.1)).abs() < 1e-14);
            assert!((p.norm_sq() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_and_identity() {
        let mut rng = RngStream::new(2, 0);
        let g = haar_su2(&mut rng);
        assert_close(&(g * g.inverse()), &Su2Element::IDENTITY, 1e-14);
        assert_close(&(Su2Element::IDENTITY * g), &g, 0.0);
    }

    #[test]
    fn haar_unit_norm() {
        let mut rng = RngStream::new(3, 0);
        for _ in 0..1000 {
            assert!((haar_su2(&mut rng).norm_sq() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_first_coordinate_centered() {
        let mut rng = RngStream::new(4, 0);
        let n = 100_000;
        let mean = (0..n).map(|_| haar_su2(&mut rng).a1()).sum::<f64>() / n as f64;
        // Var(a1) = 1/4 for the uniform law on S^3
        let sigma = (0.25 / n as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma, "mean = {mean}");
    }

    #[test]
    fn rejects_non_unit() {
        assert!(Su2Element::new(1.0, 1.0, 0.0, 0.0).is_err());
        assert!(Su2Element::normalized(0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn polar_special_points() {
        assert_eq!(Su2Element::IDENTITY.polar().theta, 0.0);
        let p = Su2Element::MINUS_IDENTITY.polar();
        assert!((p.theta - PI).abs() < 1e-15);
        assert_eq!((p.phi, p.psi), (0.0, 0.0));
    }

    #[test]
    fn polar_round_trip_and_ranges() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..1000 {
            let g = haar_su2(&mut rng);
            let p = g.polar();
            assert!((0.0..=PI).contains(&p.theta));
            assert!((0.0..=PI).contains(&p.phi));
            assert!((0.0..TAU).contains(&p.psi));
            assert_close(&Su2Element::from_polar(p), &g, 1e-10);
        }
    }

    #[test]
    fn sphere_round_trip() {
        let mut rng = RngStream::new(6, 0);
        let g = haar_su2(&mut rng);
        assert_eq!(Su2Element::from_sphere(g.to_sphere()).unwrap(), g);
    }

    #[test]
    fn distance_examples() {
        let e = Su2Element::IDENTITY;
        assert_eq!(dist_su2(&e, &e), 0.0);
        assert!((dist_su2(&e, &Su2Element::MINUS_IDENTITY) - PI).abs() < 1e-15);
        for k in 0..=20 {
            let psi = PI * k as f64 / 20.0;
            let g = Su2Element::diagonal(psi);
            assert!((dist_su2(&e, &g) - psi).abs() < 1e-14, "psi={psi}");
        }
    }
}
