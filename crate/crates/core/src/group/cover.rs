//! The adjoint double cover SU(2) → SO(3), kernel {±e}.

use nalgebra::DMatrix;

use super::son::SonElement;
use super::su2::{haar_su2, Su2Element};
use crate::rng::RngStream;

/// `Ad(g)` as an explicit 3×3 rotation matrix.
#[rustfmt::skip]
pub fn ad_morphism(g: &Su2Element) -> SonElement {
    let (a1, a2, b1, b2) = (g.a1(), g.a2(), g.b1(), g.b2());
    let m = DMatrix::from_row_slice(3, 3, &[
        a1 * a1 - a2 * a2 - (b1 * b1 - b2 * b2),
        -2.0 * a1 * a2 - 2.0 * b1 * b2,
        -2.0 * (a1 * b1 - a2 * b2),

        2.0 * a1 * a2 - 2.0 * b1 * b2,
        (a1 * a1 - a2 * a2) + (b1 * b1 - b2 * b2),
        -2.0 * (a1 * b2 + a2 * b1),

        2.0 * (a1 * b1 + a2 * b2),
        -2.0 * (-a1 * b2 + a2 * b1),
        a1 * a1 + a2 * a2 - b1 * b1 - b2 * b2,
    ]);
    SonElement::from_matrix_unchecked(m)
}

/// Haar sample on SO(3) as the image of a Haar sample on SU(2).
pub fn haar_so3_via_ad(rng: &mut RngStream) -> SonElement {
    ad_morphism(&haar_su2(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::son::{dist_son, rotation_angle_so3};
    use crate::group::su2::dist_su2;
    use std::f64::consts::PI;

    fn max_dev(a: &SonElement, b: &SonElement) -> f64 {
        (a.matrix() - b.matrix()).amax()
    }

    #[test]
    fn kernel_is_plus_minus_identity() {
        let id = SonElement::identity(3);
        assert!(max_dev(&ad_morphism(&Su2Element::IDENTITY), &id) == 0.0);
        assert!(max_dev(&ad_morphism(&Su2Element::MINUS_IDENTITY), &id) == 0.0);
    }

    #[test]
    fn diagonal_element_rotates_third_axis_by_double_angle() {
        for k in 0..16 {
            let psi = 2.0 * PI * k as f64 / 16.0;
            let (s, c) = (2.0 * psi).sin_cos();
            let want = SonElement::from_row_slice(3, &[c, -s, 0., s, c, 0., 0., 0., 1.]).unwrap();
            assert!(max_dev(&ad_morphism(&Su2Element::diagonal(psi)), &want) < 1e-14);
        }
    }

    #[test]
    fn homomorphism_and_rotation() {
        let mut rng = RngStream::new(21, 0);
        for _ in 0..200 {
            let g = haar_su2(&mut rng);
            let h = haar_su2(&mut rng);
            let ag = ad_morphism(&g);
            SonElement::new(ag.matrix().clone()).unwrap();
            assert!(max_dev(&ad_morphism(&(g * h)), &(&ag * &ad_morphism(&h))) < 1e-10);
            let inv = &ag * &ad_morphism(&g.inverse());
            assert!(max_dev(&inv, &SonElement::identity(3)) < 1e-10);
        }
    }

    #[test]
    fn double_cover_angle() {
        let mut rng = RngStream::new(22, 0);
        for _ in 0..500 {
            let g = haar_su2(&mut rng);
            let t = dist_su2(&g, &Su2Element::IDENTITY);
            let r = rotation_angle_so3(&ad_morphism(&g)).unwrap();
            assert!((r - (2.0 * t).min(2.0 * PI - 2.0 * t)).abs() < 1e-9, "t={t} r={r}");
            let d = dist_son(&ad_morphism(&g), &SonElement::identity(3), 1.0).unwrap();
            assert!((d - r).abs() < 1e-9);
        }
    }
}
