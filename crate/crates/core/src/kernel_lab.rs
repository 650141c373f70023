//! The Brownian kernel, finite-sample definiteness audits, and certificates
//! that a distance is not restricted negative definite.
//!
//! A symmetric kernel `d` is restricted negative definite when
//! `Σ ξ_i ξ_j d(x_i, x_j) ≤ 0` for every real weight vector with `Σ ξ_i = 0`.
//! On a finite configuration this is the sign of the top eigenvalue of `D`
//! compressed to the sum-zero subspace, and it is equivalent to positive
//! semidefiniteness of the Brownian kernel matrix when the base point
//! belongs to the configuration.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::to_canonical_json;
use crate::group::{embed_so3, CompactGroup, SonElement, SpecialOrthogonal, Su2};
use crate::harmonic::{chi, GroupTag};
use crate::rng::{RngStream, StreamId};

/// Relative eigenvalue band used for PSD / NSD decisions.
pub const EIG_REL_TOL: f64 = 1e-8;

/// Default positivity margin a witness must exceed.
pub const DEFAULT_MARGIN: f64 = 1e-6;

pub const CERTIFICATE_SCHEMA_VERSION: &str = "1";

/// `K(x, y) = (d(x, x0) + d(y, x0) - d(x, y)) / 2`.
pub fn brownian_kernel<E, D>(d: D, x: &E, y: &E, x0: &E) -> f64
where
    D: Fn(&E, &E) -> f64,
{
    0.5 * (d(x, x0) + d(y, x0) - d(x, y))
}

/// Orthonormal basis of `{ξ : Σ ξ_i = 0}` (Helmert contrasts), as the
/// columns of an `m × (m-1)` matrix.
pub fn sum_zero_basis(m: usize) -> DMatrix<f64> {
    let mut v = DMatrix::zeros(m, m.saturating_sub(1));
    for k in 1..m {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            v[(i, k - 1)] = 1.0 / norm;
        }
        v[(k, k - 1)] = -(k as f64) / norm;
    }
    v
}

/// `ξᵀ D ξ`.
pub fn quadratic_form(d: &DMatrix<f64>, w: &[f64]) -> f64 {
    let w = DVector::from_column_slice(w);
    w.dot(&(d * &w))
}

#[derive(Debug, Clone)]
pub struct GramAudit<E> {
    pub points: Vec<E>,
    /// Pairwise distances.
    pub distances: DMatrix<f64>,
    /// Brownian kernel matrix for the base point.
    pub kernel: DMatrix<f64>,
    /// Largest eigenvalue of the distance matrix on the sum-zero subspace.
    pub max_centered_eig: f64,
    /// A unit sum-zero vector attaining `max_centered_eig`.
    pub top_direction: DVector<f64>,
    pub min_k_eig: f64,
    /// Largest absolute eigenvalue of the distance matrix (scale for the
    /// relative tolerance band).
    pub d_scale: f64,
    /// Largest absolute eigenvalue of the kernel matrix.
    pub k_scale: f64,
}

impl<E> GramAudit<E> {
    /// `D` is restricted negative definite on this sample, up to the band.
    pub fn restricted_negative_definite(&self) -> bool {
        self.max_centered_eig <= EIG_REL_TOL * self.d_scale.max(f64::MIN_POSITIVE)
    }

    /// `K` is positive semidefinite on this sample, up to the band.
    pub fn kernel_psd(&self) -> bool {
        self.min_k_eig >= -EIG_REL_TOL * self.k_scale.max(f64::MIN_POSITIVE)
    }
}

fn symmetric_eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(m, f64::EPSILON, 0).ok_or(Error::EigenFailed)
}

/// Builds the distance and kernel matrices of a configuration and their
/// extremal eigenvalues.
pub fn gram_audit<E, D>(points: &[E], metric: D, x0: &E) -> Result<GramAudit<E>>
where
    E: Clone,
    D: Fn(&E, &E) -> f64,
{
    let m = points.len();
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "a Gram audit needs at least 2 points, got {m}"
        )));
    }
    let mut dist = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let v = metric(&points[i], &points[j]);
            if !v.is_finite() {
                return Err(Error::NonFiniteDistance(i, j));
            }
            dist[(i, j)] = v;
            dist[(j, i)] = v;
        }
    }
    let mut base = Vec::with_capacity(m);
    for (i, p) in points.iter().enumerate() {
        let v = metric(p, x0);
        if !v.is_finite() {
            return Err(Error::NonFiniteDistance(i, m));
        }
        base.push(v);
    }
    let kernel = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            base[i]
        } else {
            0.5 * (base[i] + base[j] - dist[(i, j)])
        }
    });

    let v = sum_zero_basis(m);
    let compressed = v.transpose() * &dist * &v;
    let ce = symmetric_eigen(compressed)?;
    let (k_top, &max_centered_eig) = ce
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("m >= 2");
    let mut top_direction = &v * ce.eigenvectors.column(k_top);
    let nrm = top_direction.norm();
    if nrm > 0.0 {
        top_direction /= nrm;
    }

    let d_scale = symmetric_eigen(dist.clone())?.eigenvalues.amax();
    let ke = symmetric_eigen(kernel.clone())?;
    let min_k_eig = ke.eigenvalues.min();
    let k_scale = ke.eigenvalues.amax();

    Ok(GramAudit {
        points: points.to_vec(),
        distances: dist,
        kernel,
        max_centered_eig,
        top_direction,
        min_k_eig,
        d_scale,
        k_scale,
    })
}

/// Runs both definiteness tests on the configuration augmented by `x0` and
/// reports whether they reach the same verdict.
pub fn lemma_equivalence_check<E, D>(points: &[E], metric: D, x0: &E) -> Result<bool>
where
    E: Clone,
    D: Fn(&E, &E) -> f64,
{
    if points.len() < 2 {
        return Err(Error::InvalidArgument(
            "equivalence check needs at least 2 points".into(),
        ));
    }
    let mut aug = Vec::with_capacity(points.len() + 1);
    aug.push(x0.clone());
    aug.extend_from_slice(points);
    let audit = gram_audit(&aug, metric, x0)?;
    Ok(audit.kernel_psd() == audit.restricted_negative_definite())
}

/// Groups on which a witness can be searched for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessGroup {
    Su2,
    So3,
    /// SO(n) for n > 3, searched on an embedded SO(3).
    Son(usize),
}

impl WitnessGroup {
    pub fn n(&self) -> usize {
        match self {
            WitnessGroup::Su2 => 2,
            WitnessGroup::So3 => 3,
            WitnessGroup::Son(n) => *n,
        }
    }
}

impl fmt::Display for WitnessGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WitnessGroup::Su2 => f.write_str("SU(2)"),
            WitnessGroup::So3 => f.write_str("SO(3)"),
            WitnessGroup::Son(n) => write!(f, "SO({n})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessMethod {
    /// Top eigenvector of the compressed distance matrix.
    Eigen,
    /// Centered second character, `ξ_i = χ₂(g_i) - mean`.
    Character,
}

/// A finite configuration with sum-zero weights on which the distance
/// quadratic form is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessCertificate {
    pub schema_version: String,
    pub tool_version: String,
    /// `"SU(2)"` or `"SO(n)"`.
    pub group: String,
    pub n: usize,
    /// Metric scale factor.
    pub scale: f64,
    pub seed: StreamId,
    /// Index of the successful trial.
    pub trial: usize,
    pub method: WitnessMethod,
    /// Row-major `n × n` matrices (quaternion coordinates for SU(2)).
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// `Σ ξ_i ξ_j d(g_i, g_j)`.
    pub value: f64,
}

impl WitnessCertificate {
    fn so_n_points(&self) -> Result<Vec<SonElement>> {
        self.points
            .iter()
            .map(|p| SonElement::from_row_slice(self.n, p))
            .collect()
    }

    /// Quadratic form recomputed from the stored points and weights.
    pub fn recompute_value(&self) -> Result<f64> {
        if self.points.len() != self.weights.len() {
            return Err(Error::InvalidCertificate(format!(
                "{} points but {} weights",
                self.points.len(),
                self.weights.len()
            )));
        }
        let dist = if self.group == "SU(2)" {
            let pts: Vec<_> = self
                .points
                .iter()
                .map(|p| {
                    if p.len() != 4 {
                        return Err(Error::InvalidCertificate("SU(2) points need 4 coordinates".into()));
                    }
                    crate::group::Su2Element::new(p[0], p[1], p[2], p[3])
                })
                .collect::<Result<_>>()?;
            distance_matrix(&pts, |a, b| Su2.distance(a, b))
        } else {
            let grp = SpecialOrthogonal::new(self.n, self.scale)?;
            if self.group != grp.name() {
                return Err(Error::InvalidCertificate(format!(
                    "group '{}' does not match n = {}",
                    self.group, self.n
                )));
            }
            distance_matrix(&self.so_n_points()?, |a, b| grp.distance(a, b))
        };
        Ok(quadratic_form(&dist, &self.weights))
    }

    /// Checks `Σ ξ = 0` within 1e-12, the stored value within 1e-10 of the
    /// recomputed one, and positivity.
    pub fn verify(&self) -> Result<()> {
        let s: f64 = self.weights.iter().sum();
        if s.abs() > 1e-12 {
            return Err(Error::InvalidCertificate(format!("weights sum to {s:e}")));
        }
        let v = self.recompute_value()?;
        if (v - self.value).abs() > 1e-10 {
            return Err(Error::InvalidCertificate(format!(
                "stored value {} but recomputed {}",
                self.value, v
            )));
        }
        if v.is_nan() || v <= 0.0 {
            return Err(Error::InvalidCertificate(format!("value {v} is not positive")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidCertificate(e.to_string()))
    }
}

fn distance_matrix<E, D: Fn(&E, &E) -> f64>(pts: &[E], d: D) -> DMatrix<f64> {
    let m = pts.len();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let v = d(&pts[i], &pts[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct WitnessOptions {
    pub margin: f64,
    pub scale: f64,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        Self {
            margin: DEFAULT_MARGIN,
            scale: 1.0,
        }
    }
}

struct Found<E> {
    points: Vec<E>,
    weights: Vec<f64>,
    value: f64,
    trial: usize,
    method: WitnessMethod,
}

fn centered_unit(mut w: Vec<f64>) -> Option<Vec<f64>> {
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    w.iter_mut().for_each(|x| *x -= mean);
    let nrm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm == 0.0 {
        return None;
    }
    w.iter_mut().for_each(|x| *x /= nrm);
    // second pass removes the rounding residue of the first
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    w.iter_mut().for_each(|x| *x -= mean);
    Some(w)
}

fn search<G, A>(
    grp: &G,
    angle_group: GroupTag,
    angle: A,
    m: usize,
    trials: usize,
    rng: &RngStream,
    margin: f64,
) -> Result<Option<Found<G::Element>>>
where
    G: CompactGroup,
    A: Fn(&G::Element) -> f64,
{
    let e = grp.identity();
    for trial in 0..trials {
        let mut r = rng.fork(trial as u64);
        let pts = grp.sample_haar_n(m, &mut r);
        let audit = gram_audit(&pts, |a, b| grp.distance(a, b), &e)?;
        if audit.max_centered_eig > margin {
            if let Some(w) = centered_unit(audit.top_direction.iter().copied().collect()) {
                let value = quadratic_form(&audit.distances, &w);
                if value > margin {
                    return Ok(Some(Found {
                        points: pts,
                        weights: w,
                        value,
                        trial,
                        method: WitnessMethod::Eigen,
                    }));
                }
            }
        }
        // Fallback: the second character is orthogonal to constants and
        // picks up the positive α₂ component of the distance.
        let raw: Vec<f64> = pts.iter().map(|p| chi(angle_group, 2, angle(p))).collect();
        if let Some(w) = centered_unit(raw) {
            let value = quadratic_form(&audit.distances, &w);
            if value > margin {
                return Ok(Some(Found {
                    points: pts,
                    weights: w,
                    value,
                    trial,
                    method: WitnessMethod::Character,
                }));
            }
        }
    }
    Ok(None)
}

/// Searches for a configuration of `m` Haar points and sum-zero weights with
/// positive distance quadratic form. Trial `k` draws from `rng.fork(k)`;
/// the lowest successful trial wins.
pub fn find_witness(
    group: WitnessGroup,
    m: usize,
    trials: usize,
    rng: &RngStream,
    opts: &WitnessOptions,
) -> Result<WitnessCertificate> {
    if m < 4 {
        return Err(Error::InvalidArgument(format!(
            "witness search needs at least 4 points, got {m}"
        )));
    }
    if !(opts.scale > 0.0 && opts.scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "metric scale must be positive, got {}",
            opts.scale
        )));
    }
    let not_found = Error::WitnessNotFound { trials, points: m };
    match group {
        WitnessGroup::Su2 => {
            // the SU(2) metric has no scale parameter in the certificate
            // format; the search is scale-invariant anyway
            let found = search(&Su2, GroupTag::Su2, |g| g.angle(), m, trials, rng, opts.margin)?
                .ok_or(not_found)?;
            Ok(WitnessCertificate {
                schema_version: CERTIFICATE_SCHEMA_VERSION.into(),
                tool_version: crate::TOOL_VERSION.into(),
                group: "SU(2)".into(),
                n: 2,
                scale: 1.0,
                seed: rng.id(),
                trial: found.trial,
                method: found.method,
                points: found.points.iter().map(|p| p.to_sphere().to_vec()).collect(),
                weights: found.weights,
                value: found.value,
            })
        }
        WitnessGroup::So3 | WitnessGroup::Son(_) => {
            let n = group.n();
            if n < 3 {
                return Err(Error::InvalidDimension {
                    n,
                    reason: "SO(n) witnesses exist only for n >= 3",
                });
            }
            let grp = SpecialOrthogonal::new(3, opts.scale)?;
            let found = search(
                &grp,
                GroupTag::So3,
                |g| crate::group::rotation_angle3(&g.as_matrix3().expect("SO(3)")),
                m,
                trials,
                rng,
                opts.margin,
            )?
            .ok_or(not_found)?;
            let cert = WitnessCertificate {
                schema_version: CERTIFICATE_SCHEMA_VERSION.into(),
                tool_version: crate::TOOL_VERSION.into(),
                group: grp.name(),
                n: 3,
                scale: opts.scale,
                seed: rng.id(),
                trial: found.trial,
                method: found.method,
                points: found.points.iter().map(|p| p.to_row_major()).collect(),
                weights: found.weights,
                value: found.value,
            };
            if n == 3 {
                Ok(cert)
            } else {
                transfer_witness(&cert, n, opts.scale)
            }
        }
    }
}

/// Embeds an SO(3) certificate into SO(n) via `g ↦ diag(g, I)`, keeping the
/// weights and recomputing the value with metric scale `scale`.
pub fn transfer_witness(
    cert: &WitnessCertificate,
    n: usize,
    scale: f64,
) -> Result<WitnessCertificate> {
    if cert.n != 3 || cert.group != "SO(3)" {
        return Err(Error::InvalidCertificate(format!(
            "transfer needs an SO(3) certificate, got {}",
            cert.group
        )));
    }
    if n <= 3 {
        return Err(Error::InvalidDimension {
            n,
            reason: "transfer target must have n > 3",
        });
    }
    let grp = SpecialOrthogonal::new(n, scale)?;
    let embedded: Vec<SonElement> = cert
        .so_n_points()?
        .iter()
        .map(|g| embed_so3(g, n))
        .collect::<Result<_>>()?;
    let value = quadratic_form(
        &distance_matrix(&embedded, |a, b| grp.distance(a, b)),
        &cert.weights,
    );
    Ok(WitnessCertificate {
        group: grp.name(),
        n,
        scale,
        points: embedded.iter().map(|p| p.to_row_major()).collect(),
        value,
        ..cert.clone()
    })
}
