//! Report-producing front-end over the majoconvex verifiers.
//!
//! Every invocation builds a deterministic report document: the command,
//! the fully echoed configuration (seed and sample count verbatim), the
//! library version, and the command payload. Re-running an identical
//! configuration reproduces the `report` subtree byte for byte; wall time
//! lives in a sibling `timing` field outside the deterministic part.
//!
//! Exit codes: 0 verified/true, 1 refuted/false, 2 inconclusive,
//! 3 usage or domain error.

use std::time::Instant;

use nalgebra::DMatrix;
use serde_json::{json, Map, Value};

use majoconvex::hulls::{in_extremal_set, in_hull, HullSpec};
use majoconvex::majorization::{
    birkhoff_decompose, schur_convexity_test, t_transform_chain, BistochasticMatrix,
};
use majoconvex::matrix_orders::{
    schur_horn_construct, spectral_data, symmetric_eigen_desc, SpectralData,
};
use majoconvex::potentials::{
    coefficients, rank_one_convexity_test, DerivativeMode, PotentialKind, PotentialSpec,
};
use majoconvex::quasiconvex::{
    lemma_exponential_product_check, lemma_weyl_domination_check, quasiconvexity_quadrature,
    standard_catalog, DeformationKind, QuadratureGrid, TestDeformation,
};
use majoconvex::rng::SeedStream;
use majoconvex::sampling::SamplingPlan;
use majoconvex::vectors::majorization_relation_with_margins;
use majoconvex::{Verdict, VerdictStatus};

pub const EXIT_VERIFIED: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

/// One fully-resolved invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    pub format: OutputFormat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Debug)]
pub enum Command {
    Majorize {
        x: String,
        y: String,
    },
    Chain {
        y: String,
        x: String,
    },
    Birkhoff {
        matrix: String,
    },
    SchurHorn {
        a: String,
        b: String,
    },
    SchurConvex {
        function: Option<String>,
        potential: Option<String>,
        dimension: usize,
    },
    Rank1 {
        potential: String,
        dimension: usize,
    },
    Coefficients {
        potential: String,
        y: String,
    },
    Quasiconvex {
        potential: String,
        f: String,
        deformation: String,
        grid_m: usize,
        levels: usize,
    },
    Lemmas {
        potential: String,
        dimension: usize,
    },
    Hull {
        a: String,
        matrix: String,
    },
    Sweep {
        potentials: Vec<String>,
        dimension: usize,
        grid_m: usize,
        levels: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Majorize { .. } => "majorize",
            Command::Chain { .. } => "chain",
            Command::Birkhoff { .. } => "birkhoff",
            Command::SchurHorn { .. } => "schur-horn",
            Command::SchurConvex { .. } => "schur-convex",
            Command::Rank1 { .. } => "rank1",
            Command::Coefficients { .. } => "coefficients",
            Command::Quasiconvex { .. } => "quasiconvex",
            Command::Lemmas { .. } => "lemmas",
            Command::Hull { .. } => "hull",
            Command::Sweep { .. } => "sweep",
        }
    }
}

/// A finished run: the full document and the process exit code.
#[derive(Clone, Debug)]
pub struct Report {
    pub document: Value,
    pub exit_code: i32,
    pub csv: Option<String>,
}

impl Report {
    /// The deterministic subtree (everything except timing).
    pub fn deterministic_json(&self) -> String {
        serde_json::to_string_pretty(&self.document["report"]).unwrap()
    }
}

// ---------------------------------------------------------------------------
// JSON input parsing
// ---------------------------------------------------------------------------

fn parse_vector(text: &str, field: &str) -> Result<Vec<f64>, String> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| format!("{field}: malformed JSON ({e})"))?;
    let arr = value
        .as_array()
        .ok_or_else(|| format!("{field}: expected a JSON array of numbers"))?;
    let entries: Vec<f64> = arr
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_f64()
                .ok_or_else(|| format!("{field}[{i}]: expected a number"))
        })
        .collect::<Result<_, _>>()?;
    Ok(majoconvex::vectors::RealVector::new(entries)
        .map_err(|e| format!("{field}: {e}"))?
        .into_inner())
}

fn parse_matrix(text: &str, field: &str) -> Result<DMatrix<f64>, String> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| format!("{field}: malformed JSON ({e})"))?;
    let rows = value
        .as_array()
        .ok_or_else(|| format!("{field}: expected a row-major array of arrays"))?;
    let n = rows.len();
    if n == 0 {
        return Err(format!("{field}: empty matrix"));
    }
    let mut entries = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| format!("{field}[{i}]: expected an array"))?;
        if row.len() != n {
            return Err(format!(
                "{field}[{i}]: expected {n} entries, found {}",
                row.len()
            ));
        }
        for (j, v) in row.iter().enumerate() {
            entries.push(
                v.as_f64()
                    .ok_or_else(|| format!("{field}[{i}][{j}]: expected a number"))?,
            );
        }
    }
    Ok(DMatrix::from_row_slice(n, n, &entries))
}

fn matrix_to_json(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| json!(m[(i, j)]))
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Spectral bundle with its fixed field names (R, U, V are the polar
/// factors, present when available).
pub fn spectral_to_json(sd: &SpectralData) -> Value {
    let mut doc = Map::new();
    doc.insert("singular_values".into(), json!(sd.singular_values));
    doc.insert("eigenvalue_moduli".into(), json!(sd.eigenvalue_moduli));
    doc.insert("determinant".into(), json!(sd.determinant));
    if let Some(p) = &sd.polar {
        doc.insert("R".into(), matrix_to_json(&p.rotation));
        doc.insert("U".into(), matrix_to_json(&p.right_stretch));
        doc.insert("V".into(), matrix_to_json(&p.left_stretch));
    }
    Value::Object(doc)
}

/// Parses the potential document {"kind": ..., "params": {...},
/// "derivative_mode": ...}.
pub fn parse_potential(text: &str) -> Result<PotentialSpec, String> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| format!("potential: malformed JSON ({e})"))?;
    let kind_name = value["kind"]
        .as_str()
        .ok_or_else(|| "potential.kind: expected a string".to_string())?;
    let params = &value["params"];
    let kind = match kind_name {
        "neg_log_det" => PotentialKind::NegLogDet,
        "log_trace_inv_u" => PotentialKind::LogTraceInvU,
        "modified_ogden" => PotentialKind::ModifiedOgden {
            alpha: params["alpha"]
                .as_f64()
                .ok_or_else(|| "potential.params.alpha: expected a number".to_string())?,
        },
        "power_sum" => PotentialKind::PowerSum {
            p: params["p"]
                .as_f64()
                .ok_or_else(|| "potential.params.p: expected a number".to_string())?,
        },
        "ogden_sum" => {
            let terms = params["terms"]
                .as_array()
                .ok_or_else(|| "potential.params.terms: expected an array".to_string())?;
            let mut parsed = Vec::new();
            for (i, t) in terms.iter().enumerate() {
                let pair = t.as_array().filter(|p| p.len() == 2).ok_or_else(|| {
                    format!("potential.params.terms[{i}]: expected [coefficient, exponent]")
                })?;
                parsed.push((
                    pair[0]
                        .as_f64()
                        .ok_or_else(|| format!("potential.params.terms[{i}][0]: number"))?,
                    pair[1]
                        .as_f64()
                        .ok_or_else(|| format!("potential.params.terms[{i}][1]: number"))?,
                ));
            }
            PotentialKind::OgdenSum { terms: parsed }
        }
        "custom" => {
            return Err("potential.kind: custom potentials are library-only".to_string())
        }
        other => return Err(format!("potential.kind: unknown kind {other:?}")),
    };
    let mode = match value.get("derivative_mode").and_then(|v| v.as_str()) {
        None | Some("analytic") => DerivativeMode::Analytic,
        Some("finite_difference") => DerivativeMode::FiniteDifference,
        Some(other) => {
            return Err(format!(
                "potential.derivative_mode: expected analytic or finite_difference, got {other:?}"
            ))
        }
    };
    PotentialSpec::new(kind, mode).map_err(|e| format!("potential: {e}"))
}

fn parse_deformation(text: &str, n: usize) -> Result<TestDeformation, String> {
    let kind: DeformationKind = serde_json::from_str(text)
        .map_err(|e| format!("deformation: malformed JSON ({e})"))?;
    majoconvex::quasiconvex::make_deformation(kind, n).map_err(|e| format!("deformation: {e}"))
}

/// The inverse of `parse_potential` for the CLI-expressible kinds.
pub fn potential_to_json(spec: &PotentialSpec) -> Result<Value, String> {
    let (kind, params) = match &spec.kind {
        PotentialKind::NegLogDet => ("neg_log_det", json!({})),
        PotentialKind::LogTraceInvU => ("log_trace_inv_u", json!({})),
        PotentialKind::ModifiedOgden { alpha } => ("modified_ogden", json!({ "alpha": alpha })),
        PotentialKind::PowerSum { p } => ("power_sum", json!({ "p": p })),
        PotentialKind::OgdenSum { terms } => (
            "ogden_sum",
            json!({ "terms": terms.iter().map(|&(c, e)| json!([c, e])).collect::<Vec<_>>() }),
        ),
        PotentialKind::Custom(_) => return Err("custom potentials are library-only".into()),
    };
    Ok(json!({
        "kind": kind,
        "params": params,
        "derivative_mode": match spec.derivative_mode {
            DerivativeMode::Analytic => "analytic",
            DerivativeMode::FiniteDifference => "finite_difference",
        },
    }))
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

fn verdict_exit(v: &Verdict) -> i32 {
    match v.status {
        VerdictStatus::Verified => EXIT_VERIFIED,
        VerdictStatus::Refuted => EXIT_REFUTED,
        VerdictStatus::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn verdict_json(v: &Verdict) -> Value {
    serde_json::to_value(v).unwrap()
}

fn thread_cap() -> (usize, Option<usize>) {
    let cap = std::env::var("MAJOCONVEX_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok());
    // Evaluation is sequential; one worker always respects the cap.
    (1, cap)
}

/// Runs a configuration and assembles the report document.
pub fn run(config: &RunConfig) -> Report {
    let start = Instant::now();
    let (payload, exit_code, csv) = match execute(config) {
        Ok((payload, exit, csv)) => (payload, exit, csv),
        Err(message) => (json!({ "error": message }), EXIT_USAGE, None),
    };
    let (threads, cap) = thread_cap();
    let mut report = Map::new();
    report.insert("command".into(), json!(config.command.name()));
    report.insert(
        "config".into(),
        json!({
            "seed": config.seed,
            "samples": config.samples,
            "tol": config.tol,
        }),
    );
    report.insert(
        "library_version".into(),
        json!(env!("CARGO_PKG_VERSION")),
    );
    report.insert("threads".into(), json!(threads));
    if let Some(cap) = cap {
        report.insert("thread_cap".into(), json!(cap));
    }
    report.insert("payload".into(), payload);
    report.insert("exit_code".into(), json!(exit_code));
    let document = json!({
        "report": Value::Object(report),
        "timing": { "wall_ms": start.elapsed().as_millis() as u64 },
    });
    Report {
        document,
        exit_code,
        csv,
    }
}

type ExecResult = Result<(Value, i32, Option<String>), String>;

fn execute(config: &RunConfig) -> ExecResult {
    match &config.command {
        Command::Majorize { x, y } => {
            let xv = parse_vector(x, "x")?;
            let yv = parse_vector(y, "y")?;
            let (rel, margins) = majorization_relation_with_margins(&xv, &yv, config.tol)
                .map_err(|e| e.to_string())?;
            let exit = if rel.majorized { EXIT_VERIFIED } else { EXIT_REFUTED };
            Ok((
                json!({
                    "componentwise_leq": rel.componentwise_leq,
                    "submajorized": rel.submajorized,
                    "majorized": rel.majorized,
                    "margins": {
                        "componentwise": margins.componentwise,
                        "partial_sums": margins.partial_sums,
                        "total_gap": margins.total_gap,
                    },
                }),
                exit,
                None,
            ))
        }
        Command::Chain { y, x } => {
            let yv = parse_vector(y, "y")?;
            let xv = parse_vector(x, "x")?;
            let chain = t_transform_chain(&yv, &xv).map_err(|e| e.to_string())?;
            let replayed = chain.replay(&yv).map_err(|e| e.to_string())?;
            let replay_error = replayed
                .iter()
                .zip(&xv)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            Ok((
                json!({
                    "steps": chain.steps.iter().map(|s| json!({
                        "i": s.i, "j": s.j, "t": s.t,
                    })).collect::<Vec<_>>(),
                    "permutation": chain.perm,
                    "replay_error": replay_error,
                }),
                EXIT_VERIFIED,
                None,
            ))
        }
        Command::Birkhoff { matrix } => {
            let m = parse_matrix(matrix, "matrix")?;
            let n = m.nrows();
            let a = BistochasticMatrix::with_tolerance(m.clone(), 1e-8)
                .map_err(|e| e.to_string())?;
            match birkhoff_decompose(&a) {
                Ok(d) => {
                    let rec_error = (d.reconstruct(n) - &m).abs().max();
                    Ok((
                        json!({
                            "terms": d.terms.iter().map(|(w, p)| json!({
                                "weight": w, "perm": p,
                            })).collect::<Vec<_>>(),
                            "weight_sum": d.weight_sum(),
                            "reconstruction_error": rec_error,
                        }),
                        EXIT_VERIFIED,
                        None,
                    ))
                }
                Err(majoconvex::Error::NoPerfectMatching { mass, residual }) => Ok((
                    json!({
                        "inconclusive": "no perfect matching on the positive support",
                        "residual_mass": mass,
                        "residual": matrix_to_json(&residual),
                    }),
                    EXIT_INCONCLUSIVE,
                    None,
                )),
                Err(e) => Err(e.to_string()),
            }
        }
        Command::SchurHorn { a, b } => {
            let av = parse_vector(a, "a")?;
            let bv = parse_vector(b, "b")?;
            let m = schur_horn_construct(&av, &bv).map_err(|e| e.to_string())?;
            let (spectrum, _) = symmetric_eigen_desc(&m);
            Ok((
                json!({
                    "matrix": matrix_to_json(&m),
                    "spectrum": spectrum,
                }),
                EXIT_VERIFIED,
                None,
            ))
        }
        Command::SchurConvex {
            function,
            potential,
            dimension,
        } => {
            let n = *dimension;
            let plan = SamplingPlan::cube(config.seed, config.samples, n, -2.0, 2.0)
                .map_err(|e| e.to_string())?;
            let verdict = match (function, potential) {
                (Some(name), None) => {
                    let f = named_function(name)?;
                    schur_convexity_test(f.as_ref(), &plan).map_err(|e| e.to_string())?
                }
                (None, Some(pot)) => {
                    let spec = parse_potential(pot)?;
                    let h = move |x: &[f64]| spec.h(x).unwrap_or(f64::NAN);
                    schur_convexity_test(&h, &plan).map_err(|e| e.to_string())?
                }
                _ => {
                    return Err(
                        "schur-convex needs exactly one of --function or --potential".to_string()
                    )
                }
            };
            let exit = verdict_exit(&verdict);
            Ok((verdict_json(&verdict), exit, None))
        }
        Command::Rank1 {
            potential,
            dimension,
        } => {
            let spec = parse_potential(potential)?;
            let plan = SamplingPlan::cube(config.seed, config.samples, *dimension, 0.1, 10.0)
                .map_err(|e| e.to_string())?;
            let verdict = rank_one_convexity_test(&spec, &plan).map_err(|e| e.to_string())?;
            let exit = verdict_exit(&verdict);
            Ok((
                json!({
                    "potential": spec.name(),
                    "verdict": verdict_json(&verdict),
                }),
                exit,
                None,
            ))
        }
        Command::Coefficients { potential, y } => {
            let spec = parse_potential(potential)?;
            let yv = parse_vector(y, "y")?;
            let b = coefficients(&spec, &yv).map_err(|e| e.to_string())?;
            Ok((
                json!({
                    "point": b.point,
                    "G": matrix_to_json(&b.g_matrix),
                    "H_bar": matrix_to_json(&b.h_bar),
                    "hessian": matrix_to_json(&b.hess_g),
                    "H": matrix_to_json(&b.h_matrix),
                    "Xi": matrix_to_json(&b.xi),
                    "Gamma": matrix_to_json(&b.gamma),
                }),
                EXIT_VERIFIED,
                None,
            ))
        }
        Command::Quasiconvex {
            potential,
            f,
            deformation,
            grid_m,
            levels,
        } => {
            let spec = parse_potential(potential)?;
            let fm = parse_matrix(f, "f")?;
            let d = parse_deformation(deformation, fm.nrows())?;
            let grid = QuadratureGrid::new(*grid_m, *levels).map_err(|e| e.to_string())?;
            let report =
                quasiconvexity_quadrature(&spec, &fm, &d, &grid).map_err(|e| e.to_string())?;
            let exit = if report.verified { EXIT_VERIFIED } else { EXIT_REFUTED };
            // Per-level estimates as CSV on request, for plotting.
            let csv = if config.format == OutputFormat::Csv {
                let mut out = String::from("level,points_per_axis,estimate\n");
                for (l, v) in report.level_values.iter().enumerate() {
                    out.push_str(&format!("{l},{},{v}\n", grid_m << l));
                }
                Some(out)
            } else {
                None
            };
            Ok((serde_json::to_value(&report).unwrap(), exit, csv))
        }
        Command::Lemmas {
            potential,
            dimension,
        } => {
            let spec = parse_potential(potential)?;
            let n = *dimension;
            let mut stream = SeedStream::new(config.seed);
            let mut worst_weyl = f64::INFINITY;
            let mut worst_product = f64::INFINITY;
            let mut status = VerdictStatus::Verified;
            let mut detail = None;
            let mut checked = 0u64;
            for _ in 0..config.samples {
                let m = stream.matrix_gaussian(n);
                let sd = majoconvex::matrix_orders::spectral_data(&m)
                    .map_err(|e| e.to_string())?;
                if sd.singular_values[n - 1] < 1e-3 || sd.eigenvalue_moduli[n - 1] < 1e-3 {
                    continue;
                }
                let v = lemma_weyl_domination_check(&spec, &m, config.tol)
                    .map_err(|e| e.to_string())?;
                match v.status {
                    VerdictStatus::Inconclusive => {
                        status = VerdictStatus::Inconclusive;
                        detail = v.detail;
                        break;
                    }
                    VerdictStatus::Refuted => status = VerdictStatus::Refuted,
                    VerdictStatus::Verified => {}
                }
                worst_weyl = worst_weyl.min(v.worst_margin);

                let sym = |m: &DMatrix<f64>| (m + m.transpose()) * 0.5;
                let a = sym(&stream.matrix_gaussian(n));
                let b = sym(&stream.matrix_gaussian(n));
                let v = lemma_exponential_product_check(&spec, &a, &b, config.tol)
                    .map_err(|e| e.to_string())?;
                if v.is_refuted() {
                    status = VerdictStatus::Refuted;
                }
                worst_product = worst_product.min(v.worst_margin);
                checked += 1;
            }
            let exit = match status {
                VerdictStatus::Verified => EXIT_VERIFIED,
                VerdictStatus::Refuted => EXIT_REFUTED,
                VerdictStatus::Inconclusive => EXIT_INCONCLUSIVE,
            };
            Ok((
                json!({
                    "potential": spec.name(),
                    "samples_checked": checked,
                    "status": match status {
                        VerdictStatus::Verified => "verified",
                        VerdictStatus::Refuted => "refuted",
                        VerdictStatus::Inconclusive => "inconclusive",
                    },
                    "detail": detail,
                    "worst_margin_weyl_domination": if worst_weyl.is_finite() { json!(worst_weyl) } else { Value::Null },
                    "worst_margin_exponential_product": if worst_product.is_finite() { json!(worst_product) } else { Value::Null },
                }),
                exit,
                None,
            ))
        }
        Command::Hull { a, matrix } => {
            let av = parse_vector(a, "a")?;
            let m = parse_matrix(matrix, "matrix")?;
            let spec = HullSpec::new(av).map_err(|e| e.to_string())?;
            let membership = in_hull(&m, &spec, config.tol).map_err(|e| e.to_string())?;
            let extremal = in_extremal_set(&m, &spec, config.tol).map_err(|e| e.to_string())?;
            let sd = spectral_data(&m).map_err(|e| e.to_string())?;
            let exit = if membership.inside { EXIT_VERIFIED } else { EXIT_REFUTED };
            Ok((
                json!({
                    "a": spec.a,
                    "inside_hull": membership.inside,
                    "inside_extremal_set": extremal,
                    "product_margins": membership.product_margins,
                    "det_mismatch": membership.det_mismatch,
                    "thompson_agrees": membership.thompson_agrees,
                    "spectral": spectral_to_json(&sd),
                }),
                exit,
                None,
            ))
        }
        Command::Sweep {
            potentials,
            dimension,
            grid_m,
            levels,
        } => {
            let n = *dimension;
            let grid = QuadratureGrid::new(*grid_m, *levels).map_err(|e| e.to_string())?;
            let specs: Vec<PotentialSpec> = potentials
                .iter()
                .map(|p| parse_potential(p))
                .collect::<Result<_, _>>()?;
            let f_set = standard_f_set(n);
            let deformations = standard_catalog(n).map_err(|e| e.to_string())?;
            let mut rows = Vec::new();
            let mut all_verified = true;
            for spec in &specs {
                for (f_label, f) in &f_set {
                    for d in &deformations {
                        let report = quasiconvexity_quadrature(spec, f, d, &grid)
                            .map_err(|e| e.to_string())?;
                        all_verified &= report.verified;
                        rows.push(json!({
                            "command": "quasiconvex",
                            "potential": spec.name(),
                            "deformation": deformation_label(&d.kind),
                            "f": f_label,
                            "lhs": report.lhs,
                            "rhs": report.rhs,
                            "margin": report.margin,
                            "error_estimate": report.discretization_error_estimate,
                            "verified": report.verified,
                        }));
                    }
                }
            }
            let csv = if config.format == OutputFormat::Csv {
                Some(emit_sweep_tables(&rows)?)
            } else {
                None
            };
            let exit = if all_verified { EXIT_VERIFIED } else { EXIT_REFUTED };
            Ok((json!({ "rows": rows }), exit, csv))
        }
    }
}

fn named_function(name: &str) -> Result<Box<dyn Fn(&[f64]) -> f64>, String> {
    Ok(match name {
        "max" => Box::new(|x: &[f64]| x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
        "sum" => Box::new(|x: &[f64]| x.iter().sum()),
        "sum_abs" => Box::new(|x: &[f64]| x.iter().map(|v| v.abs()).sum()),
        "log_sum_exp" => Box::new(|x: &[f64]| x.iter().map(|v| v.exp()).sum::<f64>().ln()),
        "e2" => Box::new(|x: &[f64]| {
            let mut total = 0.0;
            for i in 0..x.len() {
                for j in (i + 1)..x.len() {
                    total += x[i] * x[j];
                }
            }
            total
        }),
        "neg_sum" => Box::new(|x: &[f64]| -x.iter().sum::<f64>()),
        other => return Err(format!("unknown function {other:?} (try max, sum, sum_abs, log_sum_exp, e2, neg_sum)")),
    })
}

fn standard_f_set(n: usize) -> Vec<(String, DMatrix<f64>)> {
    // Labels stay comma-free so the CSV columns split cleanly.
    let mut out = vec![("identity".to_string(), DMatrix::identity(n, n))];
    let mut d = DMatrix::identity(n, n);
    d[(0, 0)] = 2.0;
    d[(1, 1)] = 0.5;
    out.push(("diag_2_half".to_string(), d));
    let th: f64 = std::f64::consts::PI / 6.0;
    let mut r = DMatrix::identity(n, n);
    r[(0, 0)] = th.cos();
    r[(0, 1)] = -th.sin();
    r[(1, 0)] = th.sin();
    r[(1, 1)] = th.cos();
    let mut d3 = DMatrix::identity(n, n);
    d3[(0, 0)] = 3.0;
    d3[(1, 1)] = 1.0 / 3.0;
    out.push(("rot30_diag_3_third".to_string(), r * d3));
    out
}

fn deformation_label(kind: &DeformationKind) -> String {
    match kind {
        DeformationKind::Identity => "identity".into(),
        DeformationKind::BumpShear {
            amplitude, exponent, ..
        } => format!("bump_shear_eps{amplitude}_p{exponent}"),
        DeformationKind::RadialTwist { amplitude } => format!("radial_twist_amp{amplitude}"),
        DeformationKind::LaminateZigzag { slope, periods, .. } => {
            format!("laminate_zigzag_s{slope}_k{periods}")
        }
    }
}

/// Converts a homogeneous set of quasiconvexity row reports into CSV.
/// Mixed kinds are rejected. Numbers print in shortest round-trip form,
/// so the CSV re-parses to identical values.
pub fn emit_sweep_tables(rows: &[Value]) -> Result<String, String> {
    let mut out = String::from("potential,deformation,f,lhs,rhs,margin,error_estimate,verified\n");
    for row in rows {
        let kind = row["command"].as_str().unwrap_or("?");
        if kind != "quasiconvex" {
            return Err(format!("mixed report kinds: expected quasiconvex, found {kind:?}"));
        }
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row["potential"].as_str().unwrap_or(""),
            row["deformation"].as_str().unwrap_or(""),
            row["f"].as_str().unwrap_or(""),
            row["lhs"].as_f64().unwrap_or(f64::NAN),
            row["rhs"].as_f64().unwrap_or(f64::NAN),
            row["margin"].as_f64().unwrap_or(f64::NAN),
            row["error_estimate"].as_f64().unwrap_or(f64::NAN),
            row["verified"].as_bool().unwrap_or(false),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_parsing() {
        assert!(parse_potential(r#"{"kind":"neg_log_det"}"#).is_ok());
        assert!(parse_potential(r#"{"kind":"modified_ogden","params":{"alpha":2.0}}"#).is_ok());
        assert!(parse_potential(r#"{"kind":"nope"}"#).is_err());
        assert!(parse_potential(r#"{"kind":"custom"}"#).is_err());
        let err = parse_potential(r#"{"kind":"power_sum","params":{}}"#).unwrap_err();
        assert!(err.contains("params.p"));
    }

    #[test]
    fn potential_schema_round_trips() {
        for text in [
            r#"{"kind":"neg_log_det"}"#,
            r#"{"kind":"modified_ogden","params":{"alpha":2.5},"derivative_mode":"finite_difference"}"#,
            r#"{"kind":"ogden_sum","params":{"terms":[[1.0,2.0],[-0.5,1.0]]}}"#,
        ] {
            let spec = parse_potential(text).unwrap();
            let doc = potential_to_json(&spec).unwrap();
            let back = parse_potential(&doc.to_string()).unwrap();
            assert_eq!(spec.name(), back.name());
            assert_eq!(spec.derivative_mode, back.derivative_mode);
        }
    }

    #[test]
    fn vector_and_matrix_parsing() {
        assert_eq!(parse_vector("[1, 2]", "x").unwrap(), vec![1.0, 2.0]);
        assert!(parse_vector("[1, \"a\"]", "x").unwrap_err().contains("x[1]"));
        assert!(parse_matrix("[[1,2],[3]]", "m").unwrap_err().contains("m[1]"));
    }

    #[test]
    fn sweep_csv_rejects_mixed_kinds() {
        let rows = vec![json!({"command": "quasiconvex", "potential": "p"}), json!({"command": "hull"})];
        assert!(emit_sweep_tables(&rows).is_err());
    }
}
