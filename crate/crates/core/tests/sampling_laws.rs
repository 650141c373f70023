//! Distributional checks on the Haar samplers.

use std::f64::consts::{PI, TAU};

use levy_groups::group::{haar_so3_via_ad, haar_son, haar_su2, rotation_angle_so3};
use levy_groups::harmonic::{angle_cdf, trace_cdf_so3, GroupTag};
use levy_groups::stats::{ks_one_sample, ks_two_sample};
use levy_groups::RngStream;

const N: usize = 100_000;

#[test]
fn su2_angle_law() {
    let mut rng = RngStream::new(100, 0);
    let theta: Vec<f64> = (0..N).map(|_| haar_su2(&mut rng).a1().acos()).collect();
    let ks = ks_one_sample(&theta, |t| angle_cdf(GroupTag::Su2, t));
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn son3_trace_and_angle_laws() {
    let mut rng = RngStream::new(101, 0);
    let gs: Vec<_> = (0..N).map(|_| haar_son(3, &mut rng).unwrap()).collect();
    let tr: Vec<f64> = gs.iter().map(|g| g.trace()).collect();
    let ks = ks_one_sample(&tr, trace_cdf_so3);
    assert!(ks.p_value > 0.01, "trace {ks:?}");
    let ang: Vec<f64> = gs.iter().map(|g| rotation_angle_so3(g).unwrap()).collect();
    let ks = ks_one_sample(&ang, |t| angle_cdf(GroupTag::So3, t));
    assert!(ks.p_value > 0.01, "angle {ks:?}");
}

#[test]
fn so2_angle_uniform() {
    let mut rng = RngStream::new(102, 0);
    let ang: Vec<f64> = (0..N)
        .map(|_| {
            let g = haar_son(2, &mut rng).unwrap();
            let m = g.matrix();
            m[(1, 0)].atan2(m[(0, 0)]).rem_euclid(TAU)
        })
        .collect();
    let ks = ks_one_sample(&ang, |t| (t / TAU).clamp(0.0, 1.0));
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn ad_sampler_matches_qr_sampler() {
    let mut rng = RngStream::new(103, 0);
    let via_ad: Vec<_> = (0..N).map(|_| haar_so3_via_ad(&mut rng)).collect();
    let ang: Vec<f64> = via_ad.iter().map(|g| rotation_angle_so3(g).unwrap()).collect();
    let ks = ks_one_sample(&ang, |t| angle_cdf(GroupTag::So3, t));
    assert!(ks.p_value > 0.01, "angle {ks:?}");

    let tr_ad: Vec<f64> = via_ad.iter().map(|g| g.trace()).collect();
    let tr_qr: Vec<f64> = (0..N).map(|_| haar_son(3, &mut rng).unwrap().trace()).collect();
    let ks = ks_two_sample(&tr_ad, &tr_qr);
    assert!(ks.p_value > 0.01, "two-sample {ks:?}");
}

#[test]
fn higher_dimensional_invariance() {
    // d(hg, hk) = d(g, k) for Haar g, k and fixed h
    use levy_groups::group::dist_son;
    let mut rng = RngStream::new(104, 0);
    for n in [4, 6] {
        let h = haar_son(n, &mut rng).unwrap();
        for _ in 0..50 {
            let g = haar_son(n, &mut rng).unwrap();
            let k = haar_son(n, &mut rng).unwrap();
            let a = dist_son(&g, &k, 1.0).unwrap();
            let b = dist_son(&(&h * &g), &(&h * &k), 1.0).unwrap();
            assert!((a - b).abs() < 1e-9);
            assert!(a <= PI * ((n / 2) as f64).sqrt() + 1e-12);
        }
    }
}
