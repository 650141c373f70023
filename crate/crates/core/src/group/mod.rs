//! Group elements, Haar sampling and bi-invariant distances.

mod cover;
mod son;
mod su2;

pub use cover::{ad_morphism, haar_so3_via_ad};
pub use son::{
    block_diag, delta, dist_son, embed_so3, exp_so3, haar_son, principal_angles, rotation2,
    rotation_angle_so3, so3_generator, SonElement, ORTHO_TOL,
};
pub use su2::{dist_su2, haar_su2, PolarCoords, Su2Element, UNIT_TOL};

use crate::error::Result;
use crate::rng::RngStream;

/// A compact matrix group with a fixed bi-invariant distance.
pub trait CompactGroup {
    type Element: Clone;

    fn name(&self) -> String;
    fn identity(&self) -> Self::Element;
    fn mul(&self, g: &Self::Element, h: &Self::Element) -> Self::Element;
    fn inverse(&self, g: &Self::Element) -> Self::Element;
    fn sample_haar(&self, rng: &mut RngStream) -> Self::Element;
    fn distance(&self, g: &Self::Element, h: &Self::Element) -> f64;

    fn sample_haar_n(&self, m: usize, rng: &mut RngStream) -> Vec<Self::Element> {
        (0..m).map(|_| self.sample_haar(rng)).collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Su2;

impl CompactGroup for Su2 {
    type Element = Su2Element;

    fn name(&self) -> String {
        "SU(2)".into()
    }
    fn identity(&self) -> Su2Element {
        Su2Element::IDENTITY
    }
    fn mul(&self, g: &Su2Element, h: &Su2Element) -> Su2Element {
        *g * *h
    }
    fn inverse(&self, g: &Su2Element) -> Su2Element {
        g.inverse()
    }
    fn sample_haar(&self, rng: &mut RngStream) -> Su2Element {
        haar_su2(rng)
    }
    fn distance(&self, g: &Su2Element, h: &Su2Element) -> f64 {
        dist_su2(g, h)
    }
}

/// SO(n) with distance `scale · sqrt(Σ θ_k²)`.
#[derive(Debug, Clone, Copy)]
pub struct SpecialOrthogonal {
    n: usize,
    scale: f64,
}

impl SpecialOrthogonal {
    pub fn new(n: usize, scale: f64) -> Result<Self> {
        if n < 2 {
            return Err(crate::Error::InvalidDimension {
                n,
                reason: "SO(n) requires n >= 2",
            });
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(crate::Error::InvalidArgument(format!(
                "metric scale must be positive, got {scale}"
            )));
        }
        Ok(Self { n, scale })
    }

    pub fn so3() -> Self {
        Self { n: 3, scale: 1.0 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl CompactGroup for SpecialOrthogonal {
    type Element = SonElement;

    fn name(&self) -> String {
        format!("SO({})", self.n)
    }
    fn identity(&self) -> SonElement {
        SonElement::identity(self.n)
    }
    fn mul(&self, g: &SonElement, h: &SonElement) -> SonElement {
        g * h
    }
    fn inverse(&self, g: &SonElement) -> SonElement {
        g.inverse()
    }
    fn sample_haar(&self, rng: &mut RngStream) -> SonElement {
        haar_son(self.n, rng).expect("n >= 2 checked at construction")
    }
    fn distance(&self, g: &SonElement, h: &SonElement) -> f64 {
        if self.n == 3 {
            // same value as the Schur route, at a fraction of the cost
            let rel = g.as_matrix3().unwrap() * h.as_matrix3().unwrap().transpose();
            self.scale * rotation_angle3(&rel)
        } else {
            dist_son(g, h, self.scale).expect("elements of the same SO(n)")
        }
    }
}

/// Rotation angle of a 3×3 rotation as `atan2(|axial(R)|, (tr R - 1)/2)`,
/// accurate near 0 where the arccos form loses half the digits.
pub(crate) fn rotation_angle3(r: &nalgebra::Matrix3<f64>) -> f64 {
    let c = 0.5 * (r.trace() - 1.0);
    let ax = nalgebra::Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    (0.5 * ax.norm()).atan2(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_metric<G: CompactGroup>(grp: &G, seed: u64) {
        let mut rng = RngStream::new(seed, 0);
        for _ in 0..100 {
            let g = grp.sample_haar(&mut rng);
            let h = grp.sample_haar(&mut rng);
            let k = grp.sample_haar(&mut rng);
            let d = |a: &G::Element, b: &G::Element| grp.distance(a, b);
            let dgk = d(&g, &k);
            // bi-invariance
            assert!((d(&grp.mul(&h, &g), &grp.mul(&h, &k)) - dgk).abs() < 1e-9);
            assert!((d(&grp.mul(&g, &h), &grp.mul(&k, &h)) - dgk).abs() < 1e-9);
            // class function
            let e = grp.identity();
            let conj = grp.mul(&grp.mul(&h, &g), &grp.inverse(&h));
            assert!((d(&conj, &e) - d(&g, &e)).abs() < 1e-9);
            // metric axioms
            assert!((d(&g, &h) - d(&h, &g)).abs() < 1e-12);
            assert!(d(&g, &g) < 1e-7);
            assert!(d(&g, &k) <= d(&g, &h) + d(&h, &k) + 1e-12);
        }
    }

    #[test]
    fn su2_metric_properties() {
        check_metric(&Su2, 31);
    }

    #[test]
    fn so3_metric_properties() {
        check_metric(&SpecialOrthogonal::so3(), 32);
    }

    #[test]
    fn son_metric_properties() {
        for n in [2, 4, 5, 7] {
            check_metric(&SpecialOrthogonal::new(n, 1.3).unwrap(), 33 + n as u64);
        }
    }

    #[test]
    fn so3_fast_path_matches_schur() {
        let mut rng = RngStream::new(40, 0);
        let grp = SpecialOrthogonal::so3();
        for _ in 0..200 {
            let g = grp.sample_haar(&mut rng);
            let h = grp.sample_haar(&mut rng);
            let fast = grp.distance(&g, &h);
            let schur = dist_son(&g, &h, 1.0).unwrap();
            let angle = rotation_angle_so3(&(&g * &h.transpose())).unwrap();
            assert!((fast - schur).abs() < 1e-10);
            assert!((angle - schur).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SpecialOrthogonal::new(1, 1.0).is_err());
        assert!(SpecialOrthogonal::new(3, -1.0).is_err());
        assert!(SpecialOrthogonal::new(3, f64::NAN).is_err());
    }
}
