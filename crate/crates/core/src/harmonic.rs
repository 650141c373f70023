//! Characters, angle laws and the character expansion of the distance to the
//! identity, `d(g, e) = Σ α_ℓ χ_ℓ(g)`.
//!
//! On both SU(2) and SO(3) every class function depends on a single angle
//! `t ∈ [0, π]` (geodesic angle on SU(2), rotation angle on SO(3)), so all
//! Haar integrals of class functions reduce to one-dimensional integrals
//! against the angle density. The coefficients are computed three ways:
//! closed form, adaptive quadrature, and a Monte Carlo estimate of the
//! double integral `∫∫ d(gh⁻¹) χ_ℓ(g) χ_ℓ(h) dg dh = α_ℓ / d_ℓ`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{dist_su2, haar_su2, Su2Element};
use crate::quadrature::{adaptive_simpson, integrate_panels};
use crate::rng::RngStream;
use crate::stats::Moments;

/// Default truncation order.
pub const DEFAULT_LMAX: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupTag {
    Su2,
    So3,
}

impl GroupTag {
    /// Dimension of the ℓ-th irreducible representation.
    pub fn dim(self, l: usize) -> usize {
        match self {
            GroupTag::Su2 => l + 1,
            GroupTag::So3 => 2 * l + 1,
        }
    }

    pub fn angle_law(self) -> AngleLaw {
        AngleLaw { group: self }
    }
}

impl fmt::Display for GroupTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupTag::Su2 => "su2",
            GroupTag::So3 => "so3",
        })
    }
}

impl FromStr for GroupTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "su2" => Ok(GroupTag::Su2),
            "so3" => Ok(GroupTag::So3),
            other => Err(Error::InvalidArgument(format!("unknown group '{other}'"))),
        }
    }
}

/// Character of the ℓ-th irreducible representation at angle `t`.
pub fn chi(group: GroupTag, l: usize, t: f64) -> f64 {
    match group {
        GroupTag::So3 => 1.0 + 2.0 * (1..=l).map(|m| (m as f64 * t).cos()).sum::<f64>(),
        GroupTag::Su2 => {
            let s = t.sin();
            if s.abs() < 1e-8 {
                let d = (l + 1) as f64;
                if t < FRAC_PI_2 || l.is_multiple_of(2) {
                    d
                } else {
                    -d
                }
            } else {
                (((l + 1) as f64) * t).sin() / s
            }
        }
    }
}

/// Density of the class angle under Haar measure.
pub fn angle_density(group: GroupTag, t: f64) -> f64 {
    if !(0.0..=PI).contains(&t) {
        return 0.0;
    }
    match group {
        GroupTag::So3 => (1.0 - t.cos()) / PI,
        GroupTag::Su2 => 2.0 / PI * t.sin().powi(2),
    }
}

/// Distribution function of the class angle.
pub fn angle_cdf(group: GroupTag, t: f64) -> f64 {
    let t = t.clamp(0.0, PI);
    match group {
        GroupTag::So3 => (t - t.sin()) / PI,
        GroupTag::Su2 => (t - t.sin() * t.cos()) / PI,
    }
}

/// Angle density viewed as a law on `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngleLaw {
    pub group: GroupTag,
}

impl AngleLaw {
    pub fn density(&self, t: f64) -> f64 {
        angle_density(self.group, t)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        angle_cdf(self.group, t)
    }

    /// Total mass by quadrature (should be 1).
    pub fn mass(&self, tol: f64) -> Result<f64> {
        adaptive_simpson(|t| self.density(t), 0.0, PI, tol)
    }
}

/// Density of `tr g` for Haar-distributed `g ∈ SO(3)`, supported on `[-1, 3]`.
pub fn trace_density_so3(y: f64) -> f64 {
    if y <= -1.0 || y > 3.0 {
        return 0.0;
    }
    (3.0 - y).sqrt() / (y + 1.0).sqrt() / (2.0 * PI)
}

/// Distribution function of `tr g` on SO(3); `tr g = 1 + 2 cos t`.
pub fn trace_cdf_so3(y: f64) -> f64 {
    if y <= -1.0 {
        return 0.0;
    }
    if y >= 3.0 {
        return 1.0;
    }
    1.0 - angle_cdf(GroupTag::So3, ((y - 1.0) / 2.0).clamp(-1.0, 1.0).acos())
}

/// `∫ f(y) dy` over `[-1, 3]` after `y = -1 + u²`, which removes the
/// endpoint singularity: the integrand becomes `√(4 - u²) / π` on `[0, 2]`.
pub fn trace_density_mass(tol: f64) -> Result<f64> {
    adaptive_simpson(
        |u| {
            if u == 0.0 {
                // limit of f(-1 + u²)·2u as u → 0
                2.0 / PI
            } else {
                trace_density_so3(-1.0 + u * u) * 2.0 * u
            }
        },
        0.0,
        2.0,
        tol,
    )
}

/// Closed-form coefficient `α_ℓ` of `d(·, e)`.
pub fn alpha_closed(group: GroupTag, l: usize) -> f64 {
    match (group, l) {
        (GroupTag::So3, 0) => FRAC_PI_2 + 2.0 / PI,
        (GroupTag::So3, _) => {
            let mut s = 1.0;
            for m in 1..=l {
                let mf = m as f64;
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                s += (sign - 1.0) / (mf * mf);
                if m >= 2 {
                    s += (mf * mf + 1.0) / (mf * mf - 1.0).powi(2) * (sign + 1.0);
                }
            }
            2.0 / PI * s
        }
        (GroupTag::Su2, 0) => FRAC_PI_2,
        (GroupTag::Su2, _) if l.is_multiple_of(2) => 0.0,
        (GroupTag::Su2, _) => {
            let lf = l as f64;
            -8.0 / PI * (lf + 1.0) / (lf * lf * (lf + 2.0).powi(2))
        }
    }
}

/// `α_ℓ = ∫₀^π t χ_ℓ(t) p(t) dt` by adaptive Simpson to absolute tolerance `tol`.
pub fn alpha_quadrature(group: GroupTag, l: usize, tol: f64) -> Result<f64> {
    // one panel per quarter oscillation of the highest harmonic
    let panels = 2 * l + 4;
    integrate_panels(
        |t| t * chi(group, l, t) * angle_density(group, t),
        0.0,
        PI,
        panels,
        tol,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// Minimum Monte Carlo sample size.
pub const MC_MIN_SAMPLES: usize = 1000;

/// Monte Carlo estimate of `α_ℓ` from the double integral identity, using
/// `d(gh⁻¹, e)` as the class function.
pub fn alpha_monte_carlo(
    group: GroupTag,
    l: usize,
    n: usize,
    rng: &mut RngStream,
) -> Result<McEstimate> {
    alpha_monte_carlo_with(group, l, n, rng, |t| t)
}

/// As [`alpha_monte_carlo`] with an arbitrary class function of the angle of
/// `gh⁻¹` in place of the distance.
pub fn alpha_monte_carlo_with<F: Fn(f64) -> f64>(
    group: GroupTag,
    l: usize,
    n: usize,
    rng: &mut RngStream,
    class_fn: F,
) -> Result<McEstimate> {
    check_mc_args(l, n)?;
    let m = mc_moments(group, l, n, rng, &class_fn);
    Ok(finish(m))
}

/// Splits the sample across `width` child streams `rng.fork(0..width)` and
/// evaluates them on scoped threads. The result depends on `width` but not
/// on scheduling.
pub fn alpha_monte_carlo_split(
    group: GroupTag,
    l: usize,
    n: usize,
    rng: &RngStream,
    width: usize,
) -> Result<McEstimate> {
    check_mc_args(l, n)?;
    let width = width.max(1);
    let parts: Vec<Moments> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..width)
            .map(|k| {
                let mut child = rng.fork(k as u64);
                let count = n / width + usize::from(k < n % width);
                s.spawn(move || mc_moments(group, l, count, &mut child, &|t| t))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut total = Moments::new();
    for p in &parts {
        total.merge(p);
    }
    Ok(finish(total))
}

fn check_mc_args(l: usize, n: usize) -> Result<()> {
    if l == 0 {
        return Err(Error::InvalidArgument(
            "Monte Carlo coefficients require l >= 1".into(),
        ));
    }
    if n < MC_MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "Monte Carlo needs at least {MC_MIN_SAMPLES} samples, got {n}"
        )));
    }
    Ok(())
}

fn finish(m: Moments) -> McEstimate {
    McEstimate {
        estimate: m.mean(),
        stderr: m.stderr(),
        samples: m.count(),
    }
}

// Ad(g) for the SO(3) sampler, on the stack.
fn ad3(g: &Su2Element) -> Matrix3<f64> {
    let (a1, a2, b1, b2) = (g.a1(), g.a2(), g.b1(), g.b2());
    Matrix3::new(
        a1 * a1 - a2 * a2 - (b1 * b1 - b2 * b2),
        -2.0 * a1 * a2 - 2.0 * b1 * b2,
        -2.0 * (a1 * b1 - a2 * b2),
        2.0 * a1 * a2 - 2.0 * b1 * b2,
        (a1 * a1 - a2 * a2) + (b1 * b1 - b2 * b2),
        -2.0 * (a1 * b2 + a2 * b1),
        2.0 * (a1 * b1 + a2 * b2),
        -2.0 * (-a1 * b2 + a2 * b1),
        a1 * a1 + a2 * a2 - b1 * b1 - b2 * b2,
    )
}

fn so3_angle(tr: f64) -> f64 {
    ((tr - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

fn mc_moments(
    group: GroupTag,
    l: usize,
    n: usize,
    rng: &mut RngStream,
    class_fn: &dyn Fn(f64) -> f64,
) -> Moments {
    let dl = group.dim(l) as f64;
    let mut m = Moments::new();
    for _ in 0..n {
        let g = haar_su2(rng);
        let h = haar_su2(rng);
        let (tg, th, tgh) = match group {
            GroupTag::Su2 => (g.angle(), h.angle(), dist_su2(&g, &h)),
            GroupTag::So3 => {
                let (rg, rh) = (ad3(&g), ad3(&h));
                // tr(g hᵀ) is the entrywise inner product
                let tgh = so3_angle(rg.component_mul(&rh).sum());
                (so3_angle(rg.trace()), so3_angle(rh.trace()), tgh)
            }
        };
        m.push(dl * class_fn(tgh) * chi(group, l, tg) * chi(group, l, th));
    }
    m
}

/// Truncated expansion `Σ_{ℓ ≤ lmax} α_ℓ χ_ℓ(t)`.
pub fn partial_sum(group: GroupTag, lmax: usize, t: f64) -> f64 {
    (0..=lmax).map(|l| alpha_closed(group, l) * chi(group, l, t)).sum()
}

/// Mean-square error of the truncated expansion against `t` under the angle law.
pub fn l2_residual(group: GroupTag, lmax: usize, tol: f64) -> Result<f64> {
    integrate_panels(
        |t| (partial_sum(group, lmax, t) - t).powi(2) * angle_density(group, t),
        0.0,
        PI,
        2 * lmax + 4,
        tol,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Closed,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub l: usize,
    pub alpha: f64,
    pub method: Method,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub group: GroupTag,
    pub entries: Vec<CoefficientEntry>,
}

/// Monte Carlo settings for [`coefficient_table`].
#[derive(Debug, Clone)]
pub struct McConfig {
    pub samples: usize,
    pub rng: RngStream,
    pub width: usize,
}

impl CoefficientTable {
    pub fn get(&self, l: usize, method: Method) -> Option<&CoefficientEntry> {
        self.entries.iter().find(|e| e.l == l && e.method == method)
    }

    /// Checks the cross-method agreement bands: closed vs quadrature within
    /// `1e-8`, Monte Carlo within three standard errors of the closed form.
    pub fn consistent(&self) -> bool {
        self.entries.iter().all(|e| {
            let Some(c) = self.get(e.l, Method::Closed) else {
                return true;
            };
            match e.method {
                Method::Closed => true,
                Method::Quadrature => (e.alpha - c.alpha).abs() <= 1e-8,
                Method::MonteCarlo => {
                    (e.alpha - c.alpha).abs() <= 3.0 * e.stderr.unwrap_or(0.0)
                }
            }
        })
    }
}

/// Coefficients for `ℓ = 0..=lmax`; Monte Carlo entries (ℓ ≥ 1) only when
/// `mc` is given. Each ℓ uses its own child stream `rng.fork(ℓ)`.
pub fn coefficient_table(
    group: GroupTag,
    lmax: usize,
    tol: f64,
    mc: Option<&McConfig>,
) -> Result<CoefficientTable> {
    let mut entries = Vec::new();
    for l in 0..=lmax {
        entries.push(CoefficientEntry {
            l,
            alpha: alpha_closed(group, l),
            method: Method::Closed,
            stderr: None,
        });
        entries.push(CoefficientEntry {
            l,
            alpha: alpha_quadrature(group, l, tol)?,
            method: Method::Quadrature,
            stderr: None,
        });
        if let (Some(cfg), true) = (mc, l >= 1) {
            let est = alpha_monte_carlo_split(group, l, cfg.samples, &cfg.rng.fork(l as u64), cfg.width)?;
            entries.push(CoefficientEntry {
                l,
                alpha: est.estimate,
                method: Method::MonteCarlo,
                stderr: Some(est.stderr),
            });
        }
    }
    Ok(CoefficientTable { group, entries })
}
