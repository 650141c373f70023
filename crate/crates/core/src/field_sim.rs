//! Lévy's Brownian field indexed by SU(2).
//!
//! The field is the centered Gaussian process with covariance the Brownian
//! kernel of the geodesic distance, so `X_{x0} = 0` and
//! `E|X_x - X_y|² = d(x, y)`. Samples come from a Cholesky factor of the
//! kernel matrix on a finite point set whose first point is the base point.

use std::io::{self, Read, Write};

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::group::{dist_su2, Su2Element};
use crate::rng::RngStream;
use crate::stats::Moments;

pub const DEFAULT_JITTER: f64 = 1e-10;
/// Largest relative jitter tried before the kernel is declared indefinite.
pub const MAX_JITTER: f64 = 1e-7;
/// Magic header of the binary value format.
pub const BINARY_MAGIC: &[u8; 8] = b"LVYFLD01";
/// Column cap of the CSV value format.
pub const CSV_MAX_REALIZATIONS: usize = 100;

#[derive(Debug, Clone)]
pub struct FieldSample<E> {
    /// Index points; `points[0]` is the base point.
    pub points: Vec<E>,
    pub distances: DMatrix<f64>,
    pub kernel: DMatrix<f64>,
    /// Lower-triangular, with zero first row and column.
    pub chol: DMatrix<f64>,
    /// Relative jitter that made the factorization succeed.
    pub jitter: f64,
    /// `m × R`, one realization per column.
    pub values: Option<DMatrix<f64>>,
}

/// Field on SU(2) with the geodesic distance.
pub fn build_field(points: &[Su2Element], x0: &Su2Element, jitter: f64) -> Result<FieldSample<Su2Element>> {
    build_field_with(points, x0, jitter, dist_su2)
}

/// Same pipeline for any metric. Points at distance 0 from `x0` are merged
/// into the base point, which is placed first.
pub fn build_field_with<E, D>(points: &[E], x0: &E, jitter: f64, metric: D) -> Result<FieldSample<E>>
where
    E: Clone,
    D: Fn(&E, &E) -> f64,
{
    if !(jitter > 0.0 && jitter <= MAX_JITTER) {
        return Err(Error::InvalidArgument(format!(
            "jitter must lie in (0, {MAX_JITTER:e}], got {jitter:e}"
        )));
    }
    let mut pts = vec![x0.clone()];
    pts.extend(points.iter().filter(|p| metric(p, x0) != 0.0).cloned());
    let m = pts.len();

    let mut distances = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let v = metric(&pts[i], &pts[j]);
            if !v.is_finite() {
                return Err(Error::NonFiniteDistance(i, j));
            }
            distances[(i, j)] = v;
            distances[(j, i)] = v;
        }
    }
    let kernel = DMatrix::from_fn(m, m, |i, j| {
        0.5 * (distances[(i, 0)] + distances[(j, 0)] - distances[(i, j)])
    });

    let mut chol = DMatrix::zeros(m, m);
    let mut used = jitter;
    if m > 1 {
        // The base-point row and column vanish identically; factor the rest.
        let block = kernel.view((1, 1), (m - 1, m - 1)).into_owned();
        let max_diag = block.diagonal().max().max(f64::MIN_POSITIVE);
        let mut level = jitter;
        let factor = loop {
            let mut b = block.clone();
            for i in 0..m - 1 {
                b[(i, i)] += level * max_diag;
            }
            if let Some(c) = Cholesky::new(b) {
                break c.unpack();
            }
            level *= 10.0;
            if level > MAX_JITTER * (1.0 + 1e-9) {
                return Err(Error::KernelNotPsd {
                    max_jitter: level / 10.0,
                });
            }
        };
        used = level;
        chol.view_mut((1, 1), (m - 1, m - 1)).copy_from(&factor);
    }

    Ok(FieldSample {
        points: pts,
        distances,
        kernel,
        chol,
        jitter: used,
        values: None,
    })
}

impl<E> FieldSample<E> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn realizations(&self) -> usize {
        self.values.as_ref().map_or(0, |v| v.ncols())
    }
}

/// Draws `r` independent realizations `L z`. Realization `k` uses the
/// normals of `rng.fork(k)`, so any subset can be regenerated independently.
pub fn sample_field<E: Clone>(fs: &FieldSample<E>, r: usize, rng: &RngStream) -> FieldSample<E> {
    let m = fs.len();
    let mut z = DMatrix::zeros(m, r);
    for k in 0..r {
        let mut s = rng.fork(k as u64);
        for i in 1..m {
            z[(i, k)] = s.normal();
        }
    }
    let values = &fs.chol * z;
    FieldSample {
        values: Some(values),
        ..fs.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariogramEntry {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
    /// Mean of `(X_i - X_j)²` over realizations.
    pub estimate: f64,
    pub stderr: f64,
}

impl VariogramEntry {
    /// `|estimate - distance| ≤ k · stderr`.
    pub fn covers(&self, k: f64) -> bool {
        (self.estimate - self.distance).abs() <= k * self.stderr
    }
}

/// Minimum realizations for variogram estimation.
pub const VARIOGRAM_MIN_REALIZATIONS: usize = 100;

fn checked_values<E>(fs: &FieldSample<E>) -> Result<&DMatrix<f64>> {
    let v = fs
        .values
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("field has no sampled values".into()))?;
    if v.ncols() < VARIOGRAM_MIN_REALIZATIONS {
        return Err(Error::InvalidArgument(format!(
            "variogram needs at least {VARIOGRAM_MIN_REALIZATIONS} realizations, got {}",
            v.ncols()
        )));
    }
    Ok(v)
}

/// Second-moment estimate for one pair of point indices.
pub fn variogram_pair<E>(fs: &FieldSample<E>, i: usize, j: usize) -> Result<VariogramEntry> {
    let v = checked_values(fs)?;
    if i >= fs.len() || j >= fs.len() {
        return Err(Error::InvalidArgument(format!("pair ({i}, {j}) out of range")));
    }
    let m: Moments = (0..v.ncols()).map(|k| (v[(i, k)] - v[(j, k)]).powi(2)).collect();
    Ok(VariogramEntry {
        i,
        j,
        distance: fs.distances[(i, j)],
        estimate: m.mean(),
        stderr: m.stderr(),
    })
}

/// Estimates for every pair `i < j`.
pub fn empirical_variogram<E>(fs: &FieldSample<E>) -> Result<Vec<VariogramEntry>> {
    checked_values(fs)?;
    let m = fs.len();
    let mut out = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            out.push(variogram_pair(fs, i, j)?);
        }
    }
    Ok(out)
}

/// Fraction of entries whose `k`-sigma band covers the distance.
pub fn coverage(entries: &[VariogramEntry], k: f64) -> f64 {
    if entries.is_empty() {
        return 1.0;
    }
    entries.iter().filter(|e| e.covers(k)).count() as f64 / entries.len() as f64
}

pub fn write_variogram_csv<W: Write>(mut w: W, entries: &[VariogramEntry]) -> io::Result<()> {
    writeln!(w, "pair_i,pair_j,distance,estimate,stderr")?;
    for e in entries {
        writeln!(
            w,
            "{},{},{},{},{}",
            e.i,
            e.j,
            fmt_f64(e.distance),
            fmt_f64(e.estimate),
            fmt_f64(e.stderr)
        )?;
    }
    Ok(())
}

/// One row per point, one column per realization (at most
/// [`CSV_MAX_REALIZATIONS`]).
pub fn write_values_csv<W: Write>(mut w: W, values: &DMatrix<f64>) -> io::Result<()> {
    let cols = values.ncols().min(CSV_MAX_REALIZATIONS);
    let header: Vec<String> = std::iter::once("point".to_string())
        .chain((0..cols).map(|k| format!("r{k}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..values.nrows() {
        let mut row = vec![i.to_string()];
        row.extend((0..cols).map(|k| fmt_f64(values[(i, k)])));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// `LVYFLD01`, rows (u64 LE), cols (u64 LE), then column-major f64 LE.
pub fn write_values_binary<W: Write>(mut w: W, values: &DMatrix<f64>) -> io::Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(values.nrows() as u64).to_le_bytes())?;
    w.write_all(&(values.ncols() as u64).to_le_bytes())?;
    for x in values.iter() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_values_binary<R: Read>(mut r: R) -> Result<DMatrix<f64>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Io("bad magic header".into()));
    }
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let rows = u64::from_le_bytes(buf) as usize;
    r.read_exact(&mut buf)?;
    let cols = u64::from_le_bytes(buf) as usize;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Io("matrix size overflows".into()))?;
    let mut data = Vec::with_capacity(len.min(1 << 24));
    for _ in 0..len {
        r.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    Ok(DMatrix::from_vec(rows, cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{CompactGroup, SpecialOrthogonal, Su2};
    use std::f64::consts::PI;

    fn su2_points(m: usize, seed: u64) -> Vec<Su2Element> {
        Su2.sample_haar_n(m, &mut RngStream::new(seed, 0))
    }

    #[test]
    fn base_point_only() {
        let e = Su2Element::IDENTITY;
        let fs = build_field(&[], &e, DEFAULT_JITTER).unwrap();
        assert_eq!(fs.len(), 1);
        assert_eq!(fs.kernel, DMatrix::zeros(1, 1));
        assert_eq!(fs.chol, DMatrix::zeros(1, 1));
        // x0 passed among the points is merged
        let fs = build_field(&[e, e], &e, DEFAULT_JITTER).unwrap();
        assert_eq!(fs.len(), 1);
    }

    #[test]
    fn factorization_on_su2() {
        let pts = su2_points(50, 1);
        let fs = build_field(&pts, &Su2Element::IDENTITY, DEFAULT_JITTER).unwrap();
        assert_eq!(fs.len(), 51);
        let rec = &fs.chol * fs.chol.transpose();
        assert!((rec - &fs.kernel).amax() < 1e-8);
        assert!(fs.kernel.row(0).iter().all(|&x| x == 0.0));
        assert!(fs.kernel.column(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn so3_kernel_is_rejected() {
        let grp = SpecialOrthogonal::so3();
        let e = grp.identity();
        let failures = (0..10)
            .filter(|&seed| {
                let pts = grp.sample_haar_n(20, &mut RngStream::new(seed, 0));
                matches!(
                    build_field_with(&pts, &e, DEFAULT_JITTER, |a, b| grp.distance(a, b)),
                    Err(Error::KernelNotPsd { .. })
                )
            })
            .count();
        assert!(failures > 0);
    }

    #[test]
    fn bad_jitter() {
        let e = Su2Element::IDENTITY;
        assert!(build_field(&[], &e, 0.0).is_err());
        assert!(build_field(&[], &e, 1e-6).is_err());
    }

    #[test]
    fn base_value_is_exactly_zero_and_reproducible() {
        let pts = su2_points(10, 2);
        let fs = build_field(&pts, &Su2Element::IDENTITY, DEFAULT_JITTER).unwrap();
        let rng = RngStream::new(7, 0);
        let a = sample_field(&fs, 200, &rng);
        let b = sample_field(&fs, 200, &rng);
        let va = a.values.as_ref().unwrap();
        assert!(va.row(0).iter().all(|&x| x == 0.0));
        assert_eq!(va, b.values.as_ref().unwrap());
        assert_eq!(a.realizations(), 200);
    }

    #[test]
    fn moments_of_single_point() {
        let x = Su2Element::diagonal(1.1);
        let fs = build_field(&[x], &Su2Element::IDENTITY, DEFAULT_JITTER).unwrap();
        let r = 10_000;
        let fs = sample_field(&fs, r, &RngStream::new(8, 0));
        let v = fs.values.as_ref().unwrap();
        let m: Moments = v.row(1).iter().copied().collect();
        let d = 1.1;
        assert!(m.mean().abs() < 3.0 * (d / r as f64).sqrt());
        assert!((m.variance() - d).abs() < 3.0 * d * (2.0 / r as f64).sqrt());
    }

    #[test]
    fn antipodal_variogram() {
        let e = Su2Element::IDENTITY;
        let fs = build_field(&[Su2Element::MINUS_IDENTITY], &e, DEFAULT_JITTER).unwrap();
        let fs = sample_field(&fs, 10_000, &RngStream::new(9, 0));
        let v = variogram_pair(&fs, 0, 1).unwrap();
        assert!((v.distance - PI).abs() < 1e-15);
        assert!(v.covers(3.0), "{v:?}");
        let z = variogram_pair(&fs, 0, 0).unwrap();
        assert_eq!((z.estimate, z.stderr), (0.0, 0.0));
    }

    #[test]
    fn variogram_needs_values() {
        let fs = build_field(&su2_points(3, 3), &Su2Element::IDENTITY, DEFAULT_JITTER).unwrap();
        assert!(empirical_variogram(&fs).is_err());
        let few = sample_field(&fs, 50, &RngStream::new(0, 0));
        assert!(empirical_variogram(&few).is_err());
    }

    #[test]
    fn jitter_sensitivity() {
        let pts = su2_points(30, 4);
        let rng = RngStream::new(10, 0);
        let a = build_field(&pts, &Su2Element::IDENTITY, 1e-10).unwrap();
        let b = build_field(&pts, &Su2Element::IDENTITY, 1e-8).unwrap();
        let va = empirical_variogram(&sample_field(&a, 1000, &rng)).unwrap();
        let vb = empirical_variogram(&sample_field(&b, 1000, &rng)).unwrap();
        for (x, y) in va.iter().zip(&vb) {
            assert!((x.estimate - y.estimate).abs() < 1e-3);
        }
    }

    #[test]
    fn translation_invariance_in_law() {
        let pts = su2_points(12, 5);
        let mut rng = RngStream::new(11, 0);
        let h = crate::group::haar_su2(&mut rng);
        let e = Su2Element::IDENTITY;
        let moved: Vec<_> = pts.iter().map(|p| h * *p).collect();
        let r = 5000;
        let a = sample_field(&build_field(&pts, &e, DEFAULT_JITTER).unwrap(), r, &rng.fork(0));
        let b = sample_field(&build_field(&moved, &h, DEFAULT_JITTER).unwrap(), r, &rng.fork(1));
        let va = empirical_variogram(&a).unwrap();
        let vb = empirical_variogram(&b).unwrap();
        let agree = va
            .iter()
            .zip(&vb)
            .filter(|(x, y)| {
                let se = (x.stderr.powi(2) + y.stderr.powi(2)).sqrt();
                (x.estimate - y.estimate).abs() <= 3.0 * se
            })
            .count();
        assert!(agree as f64 >= 0.95 * va.len() as f64, "{agree}/{}", va.len());
    }

    #[test]
    fn csv_and_binary_formats() {
        let fs = build_field(&su2_points(3, 6), &Su2Element::IDENTITY, DEFAULT_JITTER).unwrap();
        let fs = sample_field(&fs, 150, &RngStream::new(12, 0));
        let values = fs.values.as_ref().unwrap();

        let mut buf = Vec::new();
        write_values_binary(&mut buf, values).unwrap();
        assert_eq!(&buf[..8], BINARY_MAGIC);
        assert_eq!(buf.len(), 8 + 16 + 8 * values.len());
        assert_eq!(&read_values_binary(&buf[..]).unwrap(), values);
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_values_binary(&bad[..]).is_err());

        let mut csv = Vec::new();
        write_values_csv(&mut csv, values).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0].split(',').count(), 1 + CSV_MAX_REALIZATIONS);
        let parsed: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(parsed, values[(1, 0)]);

        let mut csv = Vec::new();
        write_variogram_csv(&mut csv, &empirical_variogram(&fs).unwrap()).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("pair_i,pair_j,distance,estimate,stderr\n0,1,"));
        assert_eq!(text.lines().count(), 1 + 6);
    }
}
