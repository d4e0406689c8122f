use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use thetasph::atlas::{self, ConcretePair, Klass, Query, SymmetricPairRecord, ThetaHint};
use thetasph::coeffs::{c_hc, c_theta_minus, c_theta_plus, delta_density, weyl_denominator_re, MultiplicityFunction};
use thetasph::hcseries::phi_hc;
use thetasph::paleywiener::{pw_check, ConvexBody, PWConfig};
use thetasph::rootsys::{build_root_system, RootSystem, ThetaSet};
use thetasph::thetasph::{e_theta, hypergeometric_ho, theta_spherical};
use thetasph::transform::{calibrate_kappa, reconstruct, roundtrip, CompactFunction, Grids, RadialGrid, Transformer};
use thetasph::Error;

use crate::output::{csv_string, envelope, fmt_f64, to_json};
use crate::spec::{parse_real, JobArgs, SpecError};

pub enum Failure {
    Spec(String),
    Core(Error),
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        Failure::Spec(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// Failures caused by the numbers rather than the request.
pub fn is_numeric(e: &Error) -> bool {
    e.is_numeric() || matches!(e, Error::HyperC | Error::HyperDomain(_) | Error::HyperConvergence)
}

/// The precondition a numeric failure violated.
pub fn condition(e: &Error) -> &'static str {
    match e {
        Error::Pole { .. } | Error::HyperC => "Gamma factors require arguments off the nonpositive integers",
        Error::NonGeneric { .. } => "recursion requires <mu, mu - 2 lambda> != 0 for every lattice point mu",
        Error::NotDominant { .. } => "H must lie in the open positive chamber (alpha(H) > 0)",
        Error::OutsideDomain { .. } => "H must lie in the admissible domain of the expansion",
        Error::Singular { .. } => "evaluation point must avoid the singular set",
        Error::HyperDomain(_) | Error::HyperConvergence => "hypergeometric series must converge at the argument",
        Error::Transform(_) => "transform grids must resolve the function and its spectrum",
        Error::PaleyWiener(_) => "diagnostic fit needs finite, nonzero samples",
        _ => "input validation",
    }
}

pub struct Output {
    pub text: String,
    pub path: Option<PathBuf>,
}

struct Ctx {
    rs: RootSystem<f64>,
    m: MultiplicityFunction<f64>,
    th: ThetaSet,
}

fn context(a: &JobArgs) -> Result<Ctx, Failure> {
    let rs = build_root_system::<f64>(a.family(), a.rank())?;
    let mvals = a
        .m
        .as_deref()
        .unwrap_or("2")
        .split(',')
        .map(parse_real)
        .collect::<Result<Vec<_>, _>>()?;
    let m = MultiplicityFunction::new(&rs, &mvals)?;
    let th = parse_theta(a.theta.as_deref().unwrap_or("full"), rs.rank)?;
    Ok(Ctx { rs, m, th })
}

fn parse_theta(s: &str, rank: usize) -> Result<ThetaSet, Failure> {
    match s.trim() {
        "full" | "Pi" | "pi" => Ok(ThetaSet::full(rank)),
        "empty" | "" => Ok(ThetaSet::empty()),
        list => {
            let idx = list
                .split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|_| SpecError(format!("bad theta index {x:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ThetaSet::from_indices(rank, &idx)?)
        }
    }
}

/// First error in input order, so failures are reproducible under the pool.
fn first_ok<T>(v: Vec<Result<T, Error>>) -> Result<Vec<T>, Error> {
    v.into_iter().collect()
}

fn method_name<M: Serialize>(m: &M) -> Option<String> {
    serde_json::to_value(m).ok().and_then(|v| v.as_str().map(String::from))
}

#[derive(Serialize)]
struct EvalRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<Vec<Complex64>>,
    #[serde(rename = "H", skip_serializing_if = "Option::is_none")]
    h: Option<Vec<f64>>,
    value: Complex64,
    #[serde(skip_serializing_if = "Option::is_none")]
    est_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pole: Option<bool>,
}

fn rows_csv(rows: &[EvalRow], rank: usize) -> Result<String, Failure> {
    let first = rows.first();
    let with_l = first.is_some_and(|r| r.lambda.is_some());
    let with_h = first.is_some_and(|r| r.h.is_some());
    let mut header = Vec::new();
    if with_l {
        for k in 0..rank {
            header.push(format!("lambda_re_{k}"));
            header.push(format!("lambda_im_{k}"));
        }
    }
    if with_h {
        header.extend((0..rank).map(|k| format!("H_{k}")));
    }
    header.extend(["value_re", "value_im", "est_error"].map(String::from));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row = Vec::new();
            for l in r.lambda.iter().flatten() {
                row.push(fmt_f64(l.re));
                row.push(fmt_f64(l.im));
            }
            row.extend(r.h.iter().flatten().map(|x| fmt_f64(*x)));
            row.push(fmt_f64(r.value.re));
            row.push(fmt_f64(r.value.im));
            row.push(r.est_error.map(fmt_f64).unwrap_or_default());
            row
        })
        .collect();
    csv_string(&header, &body).map_err(|e| Failure::Spec(format!("csv: {e}")))
}

fn finish<R: Serialize>(cmd: &str, a: &JobArgs, result: R, csv: Option<String>) -> Result<Output, Failure> {
    let text = match (a.csv_output()?, csv) {
        (true, Some(c)) => c,
        (true, None) => return Err(Failure::Spec(format!("`{cmd}` has no CSV form"))),
        (false, _) => to_json(&envelope(cmd, a, result)),
    };
    Ok(Output { text, path: a.output.clone() })
}

pub fn eval(a: &JobArgs) -> Result<Output, Failure> {
    let ctx = context(a)?;
    let q = a.quantity.as_deref().unwrap_or("phi");
    let known = ["phi", "ho", "e-theta", "Phi", "c", "c-plus", "c-minus", "delta", "Delta"];
    if !known.contains(&q) {
        return Err(Failure::Spec(format!("unknown quantity {q:?}; one of {known:?}")));
    }
    let needs_l = !matches!(q, "delta" | "Delta");
    let needs_h = !matches!(q, "c" | "c-plus" | "c-minus");
    let ls = if needs_l { a.lambdas()?.into_iter().map(Some).collect() } else { vec![None] };
    let hs = if needs_h { a.points()?.into_iter().map(Some).collect() } else { vec![None] };
    // validate the whole spec before any evaluation
    a.csv_output()?;
    let jobs: Vec<(Option<Vec<Complex64>>, Option<Vec<f64>>)> =
        ls.iter().flat_map(|l| hs.iter().map(move |h| (l.clone(), h.clone()))).collect();
    let (rs, m, th, n) = (&ctx.rs, &ctx.m, &ctx.th, a.order());
    let rows = first_ok(
        jobs.into_par_iter()
            .map(|(l, h)| -> Result<EvalRow, Error> {
                let lam = l.as_deref().unwrap_or(&[]);
                let x = h.as_deref().unwrap_or(&[]);
                let mut row = EvalRow { lambda: l.clone(), h: h.clone(), value: Complex64::new(0.0, 0.0), est_error: None, method: None, pole: None };
                match q {
                    "phi" | "ho" => {
                        let v = if q == "phi" { theta_spherical(rs, m, th, lam, x, n)? } else { hypergeometric_ho(rs, m, lam, x, n)? };
                        row.value = v.value;
                        row.est_error = Some(v.est_error);
                        row.method = method_name(&v.method);
                    }
                    "e-theta" => row.value = e_theta(rs, m, th, lam, x)?,
                    "Phi" => {
                        let v = phi_hc(rs, m, lam, x, n)?;
                        row.value = v.value;
                        row.est_error = Some(v.tail_bound);
                        row.method = Some("series".into());
                    }
                    "c" | "c-plus" | "c-minus" => {
                        let v = match q {
                            "c" => c_hc(rs, m, lam),
                            "c-plus" => c_theta_plus(rs, m, th, lam),
                            _ => c_theta_minus(rs, m, th, lam),
                        };
                        row.value = v.value;
                        row.pole = Some(v.is_pole);
                    }
                    "delta" => row.value = Complex64::new(delta_density(rs, m, x), 0.0),
                    _ => row.value = Complex64::new(weyl_denominator_re(rs, x), 0.0),
                }
                Ok(row)
            })
            .collect(),
    )?;
    let csv = rows_csv(&rows, rs.rank)?;
    #[derive(Serialize)]
    struct R<'a> {
        quantity: &'a str,
        rows: Vec<EvalRow>,
    }
    finish("eval", a, R { quantity: q, rows }, Some(csv))
}

fn bump_from(
    ctx: &Ctx,
    center: Option<&str>,
    radius: Option<f64>,
    sharpness: Option<f64>,
    symmetrize: bool,
) -> Result<CompactFunction<f64>, Failure> {
    let r = ctx.rs.rank;
    let c = match center {
        Some(s) => JobArgs::real_vector(s, r, "center")?,
        None => vec![0.0; r],
    };
    let radius = radius.unwrap_or(1.0);
    let sharp = sharpness.unwrap_or(4.0);
    if !(radius > 0.0) || !(sharp > 0.0) {
        return Err(Failure::Spec("bump radius and sharpness must be positive".into()));
    }
    if symmetrize {
        Ok(CompactFunction::symmetrized_bump(&ctx.rs, &ctx.th, &c, radius, sharp)?)
    } else {
        Ok(CompactFunction::bump(c, radius, sharp))
    }
}

fn test_function(a: &JobArgs, ctx: &Ctx) -> Result<CompactFunction<f64>, Failure> {
    if let Some(p) = &a.function_csv {
        let file = std::fs::File::open(p).map_err(|e| Failure::Spec(format!("{}: {e}", p.display())))?;
        return CompactFunction::from_csv(file, ctx.rs.rank).map_err(|e| Failure::Spec(e.to_string()));
    }
    bump_from(ctx, a.center.as_deref(), a.radius, a.sharpness, a.symmetrize.unwrap_or(true))
}

fn reference_function(a: &JobArgs, ctx: &Ctx) -> Result<CompactFunction<f64>, Failure> {
    bump_from(ctx, a.ref_center.as_deref(), a.ref_radius, a.ref_sharpness, true)
}

fn default_nodes(rank: usize) -> usize {
    if rank == 1 { 300 } else { 60 }
}

fn grids_for(a: &JobArgs, ctx: &Ctx, f: &CompactFunction<f64>) -> Result<Grids<f64>, Error> {
    let (pd, mr) = if ctx.rs.rank == 1 { (48, 400.0) } else { (24, 150.0) };
    Grids::adaptive(&ctx.rs, &ctx.m, &ctx.th, f, a.per_dim.unwrap_or(pd), a.max_radius.unwrap_or(mr))
}

#[derive(Serialize)]
struct ValueRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<Vec<Complex64>>,
    #[serde(rename = "H", skip_serializing_if = "Option::is_none")]
    h: Option<Vec<f64>>,
    value: Complex64,
    #[serde(skip_serializing_if = "Option::is_none")]
    function_value: Option<f64>,
}

fn value_rows_csv(rows: &[ValueRow], rank: usize) -> Result<String, Failure> {
    let as_eval: Vec<EvalRow> = rows
        .iter()
        .map(|r| EvalRow { lambda: r.lambda.clone(), h: r.h.clone(), value: r.value, est_error: None, method: None, pole: None })
        .collect();
    rows_csv(&as_eval, rank)
}

pub fn transform(a: &JobArgs) -> Result<Output, Failure> {
    let ctx = context(a)?;
    let f = test_function(a, &ctx)?;
    let lams = a.lambdas()?;
    a.csv_output()?;
    let grid = RadialGrid::for_function(&ctx.rs, &f, a.nodes.unwrap_or(default_nodes(ctx.rs.rank)))?;
    let tr = Transformer::with_order(&ctx.rs, &ctx.m, &ctx.th, &f, &grid, a.order())?;
    let values = first_ok(lams.par_iter().map(|l| tr.eval(l)).collect())?;
    let rows: Vec<ValueRow> = lams
        .into_iter()
        .zip(values)
        .map(|(l, v)| ValueRow { lambda: Some(l), h: None, value: v, function_value: None })
        .collect();
    let csv = value_rows_csv(&rows, ctx.rs.rank)?;
    #[derive(Serialize)]
    struct R {
        radial_nodes: usize,
        rows: Vec<ValueRow>,
    }
    finish("transform", a, R { radial_nodes: grid.nodes.len(), rows }, Some(csv))
}

fn cache_path(a: &JobArgs, ctx: &Ctx) -> Option<PathBuf> {
    let dir = std::env::var_os("THETASPH_CACHE_DIR")?;
    #[derive(Serialize)]
    struct Key<'a> {
        version: &'a str,
        family: &'a str,
        rank: usize,
        m: &'a [f64],
        theta: &'a [usize],
        ref_center: Option<&'a str>,
        ref_radius: Option<f64>,
        ref_sharpness: Option<f64>,
        per_dim: Option<usize>,
        max_radius: Option<f64>,
    }
    let key = Key {
        version: env!("CARGO_PKG_VERSION"),
        family: a.family(),
        rank: ctx.rs.rank,
        m: ctx.m.values(),
        theta: ctx.th.indices(),
        ref_center: a.ref_center.as_deref(),
        ref_radius: a.ref_radius,
        ref_sharpness: a.ref_sharpness,
        per_dim: a.per_dim,
        max_radius: a.max_radius,
    };
    let digest = Sha256::digest(serde_json::to_vec(&key).ok()?);
    let hex: String = digest.iter().take(12).map(|b| format!("{b:02x}")).collect();
    Some(PathBuf::from(dir).join(format!("kappa-{hex}.json")))
}

fn read_cached_kappa(path: &PathBuf) -> Option<f64> {
    let text = std::fs::read_to_string(path).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v.get("kappa")?.as_f64().filter(|k| k.is_finite() && *k > 0.0)
}

fn store_kappa(path: &PathBuf, kappa: f64) {
    if let Some(dir) = path.parent() {
        let _ = std::fs::create_dir_all(dir);
    }
    // a failed cache write only costs a recalibration next time
    let _ = std::fs::write(path, to_json(&serde_json::json!({ "kappa": kappa })));
}

fn kappa_for(a: &JobArgs, ctx: &Ctx) -> Result<(f64, &'static str), Failure> {
    if let Some(k) = a.kappa {
        if !(k.is_finite() && k > 0.0) {
            return Err(Failure::Spec("kappa must be positive".into()));
        }
        return Ok((k, "given"));
    }
    let cache = cache_path(a, ctx);
    if let Some(k) = cache.as_ref().and_then(read_cached_kappa) {
        return Ok((k, "cache"));
    }
    let reference = reference_function(a, ctx)?;
    let grids = grids_for(a, ctx, &reference)?;
    let k = calibrate_kappa(&ctx.rs, &ctx.m, &ctx.th, &grids, &reference)?;
    if let Some(p) = &cache {
        store_kappa(p, k);
    }
    Ok((k, "calibrated"))
}

pub fn invert(a: &JobArgs) -> Result<Output, Failure> {
    let ctx = context(a)?;
    let f = test_function(a, &ctx)?;
    let hs = a.points()?;
    a.csv_output()?;
    let (kappa, source) = kappa_for(a, &ctx)?;
    let grids = grids_for(a, &ctx, &f)?;
    let inv = reconstruct(&ctx.rs, &ctx.m, &ctx.th, &grids, &f, &hs)?;
    let rows: Vec<ValueRow> = hs
        .into_iter()
        .zip(inv.values)
        .map(|(h, v)| {
            let fv = f.eval(&h);
            ValueRow { lambda: None, h: Some(h), value: v * kappa, function_value: Some(fv) }
        })
        .collect();
    let csv = value_rows_csv(&rows, ctx.rs.rank)?;
    #[derive(Serialize)]
    struct R {
        kappa: f64,
        kappa_source: &'static str,
        spectral_nodes: usize,
        spectral_radius: f64,
        skipped_nodes: usize,
        rows: Vec<ValueRow>,
    }
    let result = R {
        kappa,
        kappa_source: source,
        spectral_nodes: grids.spectral.nodes.len(),
        spectral_radius: grids.spectral.radius,
        skipped_nodes: inv.skipped_nodes,
        rows,
    };
    finish("invert", a, result, Some(csv))
}

pub fn roundtrip_cmd(a: &JobArgs) -> Result<Output, Failure> {
    let ctx = context(a)?;
    let f1 = reference_function(a, &ctx)?;
    let f2 = test_function(a, &ctx)?;
    a.csv_output()?;
    let g1 = grids_for(a, &ctx, &f1)?;
    let g2 = grids_for(a, &ctx, &f2)?;
    let report = roundtrip(&ctx.rs, &ctx.m, &ctx.th, &g1, &f1, &g2, &f2)?;
    if let Some(p) = cache_path(a, &ctx) {
        store_kappa(&p, report.kappa);
    }
    finish("roundtrip", a, report, None)
}

pub fn pw_check_cmd(a: &JobArgs) -> Result<Output, Failure> {
    let ctx = context(a)?;
    let f = test_function(a, &ctx)?;
    a.csv_output()?;
    let reach = f
        .lo
        .iter()
        .zip(&f.hi)
        .map(|(l, h)| l.abs().max(h.abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    let body_r = match (a.body_radius, a.function_csv.is_some()) {
        (Some(r), _) => r,
        (None, true) => reach,
        (None, false) => {
            let c = match a.center.as_deref() {
                Some(s) => JobArgs::real_vector(s, ctx.rs.rank, "center")?,
                None => vec![0.0; ctx.rs.rank],
            };
            c.iter().map(|x| x * x).sum::<f64>().sqrt() + a.radius.unwrap_or(1.0)
        }
    };
    let body = ConvexBody::ball(body_r)?;
    let grid = RadialGrid::for_function(&ctx.rs, &f, a.nodes.unwrap_or(default_nodes(ctx.rs.rank)))?;
    let tr = Transformer::with_order(&ctx.rs, &ctx.m, &ctx.th, &f, &grid, a.order())?;
    let cfg = PWConfig::standard(&ctx.rs);
    let report = pw_check(&ctx.rs, &ctx.m, &ctx.th, |l| tr.eval(l), &body, &cfg)?;
    finish("pw-check", a, report, None)
}

#[derive(Serialize)]
struct AtlasHit<'a> {
    record: &'a SymmetricPairRecord,
    sigma: String,
    constraints: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    concrete: Option<ConcretePair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_hint: Option<ThetaHint>,
}

pub fn atlas_cmd(a: &JobArgs) -> Result<Output, Failure> {
    let data = atlas::load_atlas()?;
    if a.export.unwrap_or(false) {
        if a.csv_output()? {
            return Err(Failure::Spec("atlas export is JSON only".into()));
        }
        let text = to_json(&envelope("atlas", a, &data));
        return Ok(Output { text, path: a.output.clone() });
    }
    let klass = match a.class.as_deref() {
        None => None,
        Some(s) => Some(Klass::parse(s).ok_or_else(|| SpecError(format!("unknown class {s:?} (riemannian, ncc, keps_ii)")))?),
    };
    let multiplicity = match a.m.as_deref() {
        None => None,
        Some(s) => Some(s.trim().parse::<i64>().map_err(|_| SpecError(format!("atlas --m must be an integer, got {s:?}")))?),
    };
    let q = Query { klass, sigma_type: a.sigma.clone(), multiplicity, rank: a.rank.map(|r| r as i64), n: a.n };
    let hits: Vec<AtlasHit> = data
        .query(&q)
        .into_iter()
        .map(|r| {
            let concrete = if r.is_family() && a.n.is_none() || r.has_j() && a.j.is_none() {
                None
            } else {
                r.concretize(a.n, a.j).ok()
            };
            let theta_hint = concrete.as_ref().map(atlas::theta_hint);
            AtlasHit { record: r, sigma: r.sigma_label(), constraints: r.parameter_constraints(), concrete, theta_hint }
        })
        .collect();
    let header: Vec<String> = ["class", "g", "h", "fixed", "sigma", "multiplicity", "constraints"].map(String::from).to_vec();
    let body: Vec<Vec<String>> = hits
        .iter()
        .map(|h| {
            let r = h.record;
            let klass = serde_json::to_value(r.klass).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            vec![klass, r.g.clone(), r.h.clone(), r.fixed.clone(), h.sigma.clone(), r.multiplicity.to_string(), h.constraints.clone()]
        })
        .collect();
    let csv = csv_string(&header, &body).map_err(|e| Failure::Spec(format!("csv: {e}")))?;
    let isomorphisms: Vec<_> = data
        .isomorphisms
        .iter()
        .filter(|i| klass.is_none_or(|k| k == i.klass))
        .collect();
    #[derive(Serialize)]
    struct R<'a> {
        count: usize,
        records: Vec<AtlasHit<'a>>,
        isomorphisms: Vec<&'a atlas::IsomorphismRecord>,
    }
    finish("atlas", a, R { count: hits.len(), records: hits, isomorphisms }, Some(csv))
}
