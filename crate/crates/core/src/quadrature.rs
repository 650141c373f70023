//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

/// Upper bound on the number of subdivisions performed by one integration.
pub const MAX_SUBDIVISIONS: usize = 1 << 20;

struct Segment {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Each accepted segment gets the Richardson correction `(left + right - whole) / 15`.
/// Fails if more than [`MAX_SUBDIVISIONS`] splits would be needed or if the
/// integrand produces a non-finite value.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_panels(f, a, b, 1, tol)
}

/// Like [`adaptive_simpson`], but starts from `panels` equal panels (each
/// with an equal share of the tolerance). Oscillatory integrands need at
/// least one panel per half period so the first Simpson estimate cannot
/// agree with its refinement by accident.
pub fn integrate_panels<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    tol: f64,
) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 || panels == 0 || !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "bad quadrature request on [{a}, {b}] with {panels} panels, tol {tol}"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::InvalidArgument(format!("integrand not finite at {x}")))
        }
    };

    let h = (b - a) / panels as f64;
    let mut stack = Vec::with_capacity(64);
    for p in (0..panels).rev() {
        let lo = a + h * p as f64;
        let hi = if p + 1 == panels { b } else { lo + h };
        let m = 0.5 * (lo + hi);
        let (fa, fm, fb) = (eval(lo)?, eval(m)?, eval(hi)?);
        stack.push(Segment {
            a: lo,
            b: hi,
            fa,
            fm,
            fb,
            whole: simpson(lo, hi, fa, fm, fb),
            tol: tol / panels as f64,
            depth: 0,
        });
    }

    let mut total = 0.0;
    let mut comp = 0.0; // Kahan compensation
    let mut splits = 0usize;
    let mut worst = 0.0f64;
    while let Some(s) = stack.pop() {
        let m = 0.5 * (s.a + s.b);
        let lm = 0.5 * (s.a + m);
        let rm = 0.5 * (m + s.b);
        let (flm, frm) = (eval(lm)?, eval(rm)?);
        let left = simpson(s.a, m, s.fa, flm, s.fm);
        let right = simpson(m, s.b, s.fm, frm, s.fb);
        let delta = left + right - s.whole;
        // Segments shorter than a few ulps cannot be refined further.
        let exhausted = s.depth >= 60 || (lm <= s.a || rm >= s.b);
        if delta.abs() <= 15.0 * s.tol || exhausted {
            if exhausted {
                worst = worst.max(delta.abs());
            }
            let y = left + right + delta / 15.0 - comp;
            let t = total + y;
            comp = (t - total) - y;
            total = t;
            continue;
        }
        splits += 1;
        if splits > MAX_SUBDIVISIONS {
            return Err(Error::QuadratureDiverged {
                intervals: splits,
                error: delta.abs(),
            });
        }
        let half = 0.5 * s.tol;
        stack.push(Segment {
            a: m,
            b: s.b,
            fa: s.fm,
            fm: frm,
            fb: s.fb,
            whole: right,
            tol: half,
            depth: s.depth + 1,
        });
        stack.push(Segment {
            a: s.a,
            b: m,
            fa: s.fa,
            fm: flm,
            fb: s.fm,
            whole: left,
            tol: half,
            depth: s.depth + 1,
        });
    }
    if worst > 15.0 * tol {
        return Err(Error::QuadratureDiverged {
            intervals: splits,
            error: worst,
        });
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 0.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_integrals() {
        let v = adaptive_simpson(f64::sin, 0.0, PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
        let v = adaptive_simpson(|x| (-x * x).exp(), -6.0, 6.0, 1e-12).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn oscillatory_with_panels() {
        // ∫₀^π sin²(40x) dx = π/2; three-point Simpson sees only zeros.
        let f = |x: f64| (40.0 * x).sin().powi(2);
        let naive = adaptive_simpson(f, 0.0, PI, 1e-10).unwrap();
        assert!((naive - PI / 2.0).abs() > 0.1);
        let v = integrate_panels(f, 0.0, PI, 82, 1e-10).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn reversed_and_empty_interval() {
        assert_eq!(adaptive_simpson(|x| x, 1.0, 1.0, 1e-9).unwrap(), 0.0);
        let v = adaptive_simpson(|x| x, 1.0, 0.0, 1e-12).unwrap();
        assert!((v + 0.5).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(adaptive_simpson(|x| x, 0.0, 1.0, 0.0).is_err());
        assert!(adaptive_simpson(|x| 1.0 / x, 0.0, 1.0, 1e-9).is_err());
        // non-integrable singularity: refinement never settles
        assert!(adaptive_simpson(|x| 1.0 / (x - 0.3).abs().max(1e-300), 0.0, 1.0, 1e-9).is_err());
    }
}
