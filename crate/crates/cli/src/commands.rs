//! Subcommand implementations. Each returns the rendered output plus a
//! verdict; `main` maps verdicts to exit codes.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use levy_groups::field_sim::{
    build_field, build_field_with, coverage, empirical_variogram, sample_field, write_values_binary,
    write_values_csv, write_variogram_csv, DEFAULT_JITTER,
};
use levy_groups::format::{fmt_f64, to_canonical_json};
use levy_groups::group::{
    haar_son, haar_su2, rotation_angle_so3, CompactGroup, SpecialOrthogonal, Su2, Su2Element,
};
use levy_groups::harmonic::{
    angle_cdf, angle_density, coefficient_table, trace_cdf_so3, trace_density_so3, GroupTag,
    McConfig, Method,
};
use levy_groups::kernel_lab::{
    find_witness, gram_audit, lemma_equivalence_check, WitnessGroup, WitnessOptions,
};
use levy_groups::stats::{histogram, ks_one_sample};
use levy_groups::{Error, RngStream, StreamId, TOOL_VERSION};
use serde::Serialize;

use crate::config::{Format, Group, RunConfig, ValuesFormat};

pub const SCHEMA_VERSION: &str = "1";

pub enum Verdict {
    Ok,
    /// A positivity requirement failed; carries the diagnostic.
    Negative(String),
}

pub struct Outcome {
    pub output: String,
    pub verdict: Verdict,
}

impl Outcome {
    fn ok(output: String) -> Self {
        Self {
            output,
            verdict: Verdict::Ok,
        }
    }
}

#[derive(Serialize)]
struct Meta {
    tool_version: &'static str,
    generated_unix: u64,
}

fn meta(cfg: &RunConfig) -> Option<Meta> {
    (!cfg.no_meta).then(|| Meta {
        tool_version: TOOL_VERSION,
        generated_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    })
}

fn json<T: Serialize>(v: &T) -> Result<String, Error> {
    to_canonical_json(v).map_err(|e| Error::Io(e.to_string()))
}

fn rng(cfg: &RunConfig) -> RngStream {
    RngStream::new(cfg.seed, cfg.stream)
}

fn tag(group: Group) -> GroupTag {
    match group {
        Group::Su2 => GroupTag::Su2,
        _ => GroupTag::So3,
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, Error> {
    use crate::config::Command::*;
    match cfg.command {
        Coeffs => coeffs(cfg),
        Densities => densities(cfg),
        Check => check(cfg),
        Witness => witness(cfg),
        Simulate => simulate(cfg),
        Haar => haar(cfg),
    }
}

#[derive(Serialize)]
struct CoeffRow {
    l: usize,
    closed: f64,
    quadrature: f64,
    monte_carlo: Option<f64>,
    mc_stderr: Option<f64>,
}

#[derive(Serialize)]
struct CoeffsDoc {
    schema_version: &'static str,
    command: &'static str,
    group: String,
    lmax: usize,
    tol: f64,
    samples: usize,
    seed: StreamId,
    threads: usize,
    rows: Vec<CoeffRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<Meta>,
}

fn coeffs(cfg: &RunConfig) -> Result<Outcome, Error> {
    let mc = McConfig {
        samples: cfg.samples,
        rng: rng(cfg),
        width: cfg.threads,
    };
    let table = coefficient_table(tag(cfg.group), cfg.lmax, cfg.tol, Some(&mc))?;
    let rows: Vec<CoeffRow> = (0..=cfg.lmax)
        .map(|l| {
            let get = |m| table.get(l, m);
            CoeffRow {
                l,
                closed: get(Method::Closed).map(|e| e.alpha).unwrap_or(f64::NAN),
                quadrature: get(Method::Quadrature).map(|e| e.alpha).unwrap_or(f64::NAN),
                monte_carlo: get(Method::MonteCarlo).map(|e| e.alpha),
                mc_stderr: get(Method::MonteCarlo).and_then(|e| e.stderr),
            }
        })
        .collect();
    let out = match cfg.format {
        Format::Csv => {
            let mut s = String::from("l,closed,quadrature,monte_carlo,mc_stderr\n");
            for r in &rows {
                let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
                writeln!(
                    s,
                    "{},{},{},{},{}",
                    r.l,
                    fmt_f64(r.closed),
                    fmt_f64(r.quadrature),
                    opt(r.monte_carlo),
                    opt(r.mc_stderr)
                )
                .unwrap();
            }
            s
        }
        Format::Json => json(&CoeffsDoc {
            schema_version: SCHEMA_VERSION,
            command: "coeffs",
            group: cfg.group.name(),
            lmax: cfg.lmax,
            tol: cfg.tol,
            samples: cfg.samples,
            seed: rng(cfg).id(),
            threads: cfg.threads,
            rows,
            meta: meta(cfg),
        })?,
    };
    Ok(Outcome::ok(out))
}

#[derive(Serialize)]
struct DensityBin {
    x: f64,
    density: f64,
    empirical: f64,
}

#[derive(Serialize)]
struct DensityCurve {
    quantity: &'static str,
    ks_statistic: f64,
    ks_p_value: f64,
    bins: Vec<DensityBin>,
}

#[derive(Serialize)]
struct DensitiesDoc {
    schema_version: &'static str,
    command: &'static str,
    group: String,
    samples: usize,
    seed: StreamId,
    curves: Vec<DensityCurve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<Meta>,
}

fn curve<D: Fn(f64) -> f64, F: Fn(f64) -> f64>(
    quantity: &'static str,
    sample: &[f64],
    lo: f64,
    hi: f64,
    bins: usize,
    density: D,
    cdf: F,
) -> DensityCurve {
    let ks = ks_one_sample(sample, cdf);
    DensityCurve {
        quantity,
        ks_statistic: ks.statistic,
        ks_p_value: ks.p_value,
        bins: histogram(sample, lo, hi, bins)
            .into_iter()
            .map(|(x, empirical)| DensityBin {
                x,
                density: density(x),
                empirical,
            })
            .collect(),
    }
}

fn densities(cfg: &RunConfig) -> Result<Outcome, Error> {
    let mut r = rng(cfg);
    let pi = std::f64::consts::PI;
    let curves = match cfg.group {
        Group::Su2 => {
            let t: Vec<f64> = (0..cfg.samples).map(|_| haar_su2(&mut r).angle()).collect();
            vec![curve(
                "angle",
                &t,
                0.0,
                pi,
                cfg.points,
                |x| angle_density(GroupTag::Su2, x),
                |x| angle_cdf(GroupTag::Su2, x),
            )]
        }
        _ => {
            let gs: Vec<_> = (0..cfg.samples)
                .map(|_| haar_son(3, &mut r))
                .collect::<Result<_, _>>()?;
            let t: Vec<f64> = gs
                .iter()
                .map(rotation_angle_so3)
                .collect::<Result<_, _>>()?;
            let y: Vec<f64> = gs.iter().map(|g| g.trace()).collect();
            vec![
                curve(
                    "angle",
                    &t,
                    0.0,
                    pi,
                    cfg.points,
                    |x| angle_density(GroupTag::So3, x),
                    |x| angle_cdf(GroupTag::So3, x),
                ),
                curve("trace", &y, -1.0, 3.0, cfg.points, trace_density_so3, trace_cdf_so3),
            ]
        }
    };
    let out = match cfg.format {
        Format::Csv => {
            let mut s = String::from("quantity,x,density,empirical\n");
            for c in &curves {
                for b in &c.bins {
                    writeln!(s, "{},{},{},{}", c.quantity, fmt_f64(b.x), fmt_f64(b.density), fmt_f64(b.empirical))
                        .unwrap();
                }
            }
            s
        }
        Format::Json => json(&DensitiesDoc {
            schema_version: SCHEMA_VERSION,
            command: "densities",
            group: cfg.group.name(),
            samples: cfg.samples,
            seed: rng(cfg).id(),
            curves,
            meta: meta(cfg),
        })?,
    };
    Ok(Outcome::ok(out))
}

#[derive(Serialize)]
struct CheckDoc {
    schema_version: &'static str,
    command: &'static str,
    group: String,
    n: usize,
    scale: f64,
    points: usize,
    seed: StreamId,
    min_k_eig: f64,
    max_centered_eig: f64,
    kernel_psd: bool,
    restricted_negative_definite: bool,
    lemma_agrees: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<Meta>,
}

fn audit_group<G: CompactGroup>(grp: &G, m: usize, rng: &mut RngStream) -> Result<(f64, f64, bool, bool, bool), Error> {
    let pts = grp.sample_haar_n(m, rng);
    let e = grp.identity();
    let d = |a: &G::Element, b: &G::Element| grp.distance(a, b);
    let audit = gram_audit(&pts, d, &e)?;
    let agrees = lemma_equivalence_check(&pts, d, &e)?;
    Ok((
        audit.min_k_eig,
        audit.max_centered_eig,
        audit.kernel_psd(),
        audit.restricted_negative_definite(),
        agrees,
    ))
}

fn check(cfg: &RunConfig) -> Result<Outcome, Error> {
    let mut r = rng(cfg);
    let (min_k, max_c, psd, rnd, agrees) = match cfg.group {
        Group::Su2 => audit_group(&Su2, cfg.points, &mut r)?,
        g => audit_group(&SpecialOrthogonal::new(g.n(), cfg.scale)?, cfg.points, &mut r)?,
    };
    let doc = CheckDoc {
        schema_version: SCHEMA_VERSION,
        command: "check",
        group: cfg.group.name(),
        n: cfg.group.n(),
        scale: if cfg.group == Group::Su2 { 1.0 } else { cfg.scale },
        points: cfg.points,
        seed: rng(cfg).id(),
        min_k_eig: min_k,
        max_centered_eig: max_c,
        kernel_psd: psd,
        restricted_negative_definite: rnd,
        lemma_agrees: agrees,
        meta: meta(cfg),
    };
    let out = match cfg.format {
        Format::Json => json(&doc)?,
        Format::Csv => {
            let mut s = String::from("key,value\n");
            let rows: [(&str, String); 10] = [
                ("group", doc.group.clone()),
                ("n", doc.n.to_string()),
                ("scale", fmt_f64(doc.scale)),
                ("points", doc.points.to_string()),
                ("seed", doc.seed.seed.to_string()),
                ("stream", doc.seed.stream.to_string()),
                ("min_k_eig", fmt_f64(doc.min_k_eig)),
                ("max_centered_eig", fmt_f64(doc.max_centered_eig)),
                ("kernel_psd", doc.kernel_psd.to_string()),
                ("restricted_negative_definite", doc.restricted_negative_definite.to_string()),
            ];
            for (k, v) in rows {
                writeln!(s, "{k},{v}").unwrap();
            }
            writeln!(s, "lemma_agrees,{}", doc.lemma_agrees).unwrap();
            s
        }
    };
    let verdict = if psd && rnd {
        Verdict::Ok
    } else {
        Verdict::Negative(format!(
            "{}: kernel is not positive semidefinite on this sample (max_centered_eig = {}, min_k_eig = {})",
            cfg.group.name(),
            fmt_f64(max_c),
            fmt_f64(min_k)
        ))
    };
    Ok(Outcome { output: out, verdict })
}

fn witness(cfg: &RunConfig) -> Result<Outcome, Error> {
    let group = match cfg.group {
        Group::Su2 => WitnessGroup::Su2,
        Group::So3 => WitnessGroup::So3,
        Group::Son(n) => WitnessGroup::Son(n),
    };
    let opts = WitnessOptions {
        scale: cfg.scale,
        ..WitnessOptions::default()
    };
    match find_witness(group, cfg.points, cfg.trials, &rng(cfg), &opts) {
        Ok(cert) => {
            cert.verify()?;
            Ok(Outcome::ok(cert.to_json()?))
        }
        Err(e @ Error::WitnessNotFound { .. }) => Ok(Outcome {
            output: String::new(),
            verdict: Verdict::Negative(format!("{group}: {e}")),
        }),
        Err(e) => Err(e),
    }
}

#[derive(Serialize)]
struct VariogramRow {
    i: usize,
    j: usize,
    distance: f64,
    estimate: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct SimulateDoc {
    schema_version: &'static str,
    command: &'static str,
    group: String,
    points: usize,
    realizations: usize,
    seed: StreamId,
    jitter: f64,
    coverage_3sigma: f64,
    variogram: Vec<VariogramRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<Meta>,
}

fn simulate(cfg: &RunConfig) -> Result<Outcome, Error> {
    let base = rng(cfg);
    let mut point_rng = base.fork(0);
    let value_rng = base.fork(1);
    let fs = match cfg.group {
        Group::Su2 => {
            let pts = Su2.sample_haar_n(cfg.points, &mut point_rng);
            build_field(&pts, &Su2Element::IDENTITY, DEFAULT_JITTER)
        }
        _ => {
            // diagnostic mode: the same pipeline on SO(3), expected to fail
            let grp = SpecialOrthogonal::new(3, cfg.scale)?;
            let pts = grp.sample_haar_n(cfg.points, &mut point_rng);
            let e = grp.identity();
            match build_field_with(&pts, &e, DEFAULT_JITTER, |a, b| grp.distance(a, b)) {
                Ok(_) => {
                    return Ok(Outcome {
                        output: String::new(),
                        verdict: Verdict::Negative(
                            "so3: kernel factorized on this sample; SO(3) fields are diagnostic only".into(),
                        ),
                    })
                }
                Err(e) => Err(e),
            }
        }
    };
    let fs = match fs {
        Ok(fs) => fs,
        Err(e @ Error::KernelNotPsd { .. }) => {
            return Ok(Outcome {
                output: String::new(),
                verdict: Verdict::Negative(format!("{}: {e}", cfg.group.name())),
            })
        }
        Err(e) => return Err(e),
    };
    let fs = sample_field(&fs, cfg.realizations, &value_rng);
    let vario = empirical_variogram(&fs)?;

    if let Some(path) = &cfg.values_out {
        let values = fs.values.as_ref().expect("sampled");
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        match cfg.values_format {
            ValuesFormat::Csv => write_values_csv(file, values)?,
            ValuesFormat::Bin => write_values_binary(file, values)?,
        }
    }

    let out = match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_variogram_csv(&mut buf, &vario)?;
            String::from_utf8(buf).expect("ascii")
        }
        Format::Json => json(&SimulateDoc {
            schema_version: SCHEMA_VERSION,
            command: "simulate",
            group: cfg.group.name(),
            points: cfg.points,
            realizations: cfg.realizations,
            seed: base.id(),
            jitter: fs.jitter,
            coverage_3sigma: coverage(&vario, 3.0),
            variogram: vario
                .iter()
                .map(|e| VariogramRow {
                    i: e.i,
                    j: e.j,
                    distance: e.distance,
                    estimate: e.estimate,
                    stderr: e.stderr,
                })
                .collect(),
            meta: meta(cfg),
        })?,
    };
    Ok(Outcome::ok(out))
}

#[derive(Serialize)]
struct HaarDoc {
    schema_version: &'static str,
    command: &'static str,
    group: String,
    n: usize,
    seed: StreamId,
    /// Quaternion coordinates (SU(2)) or row-major matrices (SO(n)).
    samples: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<Meta>,
}

fn haar(cfg: &RunConfig) -> Result<Outcome, Error> {
    let mut r = rng(cfg);
    let (header, samples): (Vec<String>, Vec<Vec<f64>>) = match cfg.group {
        Group::Su2 => (
            ["a1", "a2", "b1", "b2"].map(String::from).to_vec(),
            (0..cfg.points).map(|_| haar_su2(&mut r).to_sphere().to_vec()).collect(),
        ),
        g => {
            let n = g.n();
            let header = (0..n).flat_map(|i| (0..n).map(move |j| format!("m{i}{j}"))).collect();
            let samples = (0..cfg.points)
                .map(|_| haar_son(n, &mut r).map(|e| e.to_row_major()))
                .collect::<Result<_, _>>()?;
            (header, samples)
        }
    };
    let out = match cfg.format {
        Format::Csv => {
            let mut s = header.join(",");
            s.push('\n');
            for row in &samples {
                let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s
        }
        Format::Json => json(&HaarDoc {
            schema_version: SCHEMA_VERSION,
            command: "haar",
            group: cfg.group.name(),
            n: cfg.group.n(),
            seed: rng(cfg).id(),
            samples,
            meta: meta(cfg),
        })?,
    };
    Ok(Outcome::ok(out))
}
