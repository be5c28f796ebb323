use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use polarflow::arrangement::{
    chamber_compact, flat_distribution, generate_closure, split_components, Ambient, Offsets,
    WallArrangement, WallFamily,
};
use polarflow::catalog::{self, FoliationModel};
use polarflow::geodesic_jacobi::{
    holonomy_basis, CurvatureSpectrum, FocalOptions, Interval, JacobiFamily, RiccatiOperator, SpectrumEntry,
};
use polarflow::mcf::{self, Direction, FlowOptions, FlowTrajectory, Termination};
use polarflow::riccati::{self, RiccatiProblem};
use polarflow::trig_reconstruct::{self, ReconstructError, TrigDensity, VanishingConstraint};
use serde_json::json;

use crate::error::CliError;
use crate::output::{csv_bytes, emit, json_bytes, read_json, write_file, write_sidecar, Table};
use crate::schema::*;

pub fn parse_model(id: &str) -> Result<FoliationModel, CliError> {
    Ok(id.parse::<FoliationModel>()?)
}

pub fn parse_point(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("not a number: `{s}`"))))
        .collect()
}

/// A generic interior point: 37% of the way along bounded coordinates.
pub fn default_point(model: &FoliationModel) -> Vec<f64> {
    model
        .chamber::<f64>()
        .into_iter()
        .map(|(lo, hi)| match (lo.is_finite(), hi.is_finite()) {
            (true, true) => lo + 0.37 * (hi - lo),
            (true, false) => lo + 1.0,
            _ => 0.0,
        })
        .collect()
}

fn point_or_default(model: &FoliationModel, theta: Option<&str>) -> Result<Vec<f64>, CliError> {
    match theta {
        Some(t) => parse_point(t),
        None => Ok(default_point(model)),
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(CliError::Input("matrix rows have different lengths".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn spectrum_dto(spectrum: &CurvatureSpectrum<f64>) -> Vec<LambdaEntry> {
    spectrum.entries().iter().map(|e| LambdaEntry { value: e.lambda, mult: e.multiplicity }).collect()
}

// ---------------------------------------------------------------- models

pub fn models_list() -> Result<(), CliError> {
    println!("{:<44} {:>5} {:>6}  chamber", "id", "dim", "leaf");
    for m in catalog::catalog() {
        let chamber: Vec<String> = m
            .chamber::<f64>()
            .iter()
            .map(|(lo, hi)| format!("({}, {})", bound(*lo), bound(*hi)))
            .collect();
        println!("{:<44} {:>5} {:>6}  {}", m.id(), m.chamber_dim(), m.leaf_dimension(), chamber.join(" x "));
    }
    Ok(())
}

fn bound(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn arrangement_dto(a: &WallArrangement<f64>) -> ArrangementDto {
    let (kind, dim) = match a.ambient() {
        Ambient::Flat(k) => ("flat", k),
        Ambient::Round(k) => ("round", k),
    };
    ArrangementDto {
        ambient: AmbientDto { kind: kind.into(), dim },
        families: a
            .families()
            .iter()
            .map(|f| FamilyDto {
                normal: f.normal.iter().copied().collect(),
                offsets: match &f.offsets {
                    Offsets::Finite(v) => OffsetsDto::Finite { values: v.clone() },
                    Offsets::Arith { base, gap } => OffsetsDto::Arith { base: *base, gap: *gap },
                },
                mult: f.multiplicity,
            })
            .collect(),
    }
}

pub fn models_show(id: &str, theta: Option<&str>, out: Option<&Path>) -> Result<(), CliError> {
    let model = parse_model(id)?;
    let point = point_or_default(&model, theta)?;
    let spectrum = catalog::curvature_spectrum::<f64>(&model)?;
    let shape = catalog::shape_operator(&model, &point, 0)?;
    let description = ModelDescription {
        schema: MODEL_SCHEMA,
        id: model.id(),
        leaf_dimension: model.leaf_dimension(),
        chamber: model
            .chamber::<f64>()
            .into_iter()
            .map(|(lo, hi)| [lo.is_finite().then_some(lo), hi.is_finite().then_some(hi)])
            .collect(),
        volume: catalog::leaf_volume_profile(&model, &point)?,
        mean_curvature: mcf::mean_curvature_component(&model, &point)?,
        point,
        spectrum: spectrum_dto(&spectrum),
        shape_operator: matrix_rows(shape.matrix()),
        walls: arrangement_dto(&catalog::wall_arrangement(&model)?),
    };
    emit(out, &json_bytes(&description)?)
}

// ---------------------------------------------------------------- jacobi

pub struct JacobiRequest<'a> {
    pub input: Option<&'a Path>,
    pub model: Option<&'a str>,
    pub theta: Option<&'a str>,
    pub coordinate: usize,
    pub t_max: f64,
    pub grid: usize,
    pub rows: usize,
    pub out: Option<&'a Path>,
    pub report: Option<&'a Path>,
}

fn family_from_request(req: &JacobiRequest<'_>) -> Result<JacobiFamily<f64>, CliError> {
    match (req.input, req.model) {
        (Some(path), None) => {
            let input: SpectrumInput = read_json(path)?;
            let entries = input
                .lambdas
                .iter()
                .map(|e| SpectrumEntry { lambda: e.value, multiplicity: e.mult })
                .collect();
            let spectrum = CurvatureSpectrum::new(entries)?;
            let s0 = match &input.s0 {
                Some(rows) => RiccatiOperator::new(matrix_from_rows(rows)?)?,
                None => RiccatiOperator::zeros(spectrum.dim()),
            };
            Ok(holonomy_basis(&spectrum, &s0)?)
        }
        (None, Some(id)) => {
            let model = parse_model(id)?;
            let point = point_or_default(&model, req.theta)?;
            let spectrum = catalog::curvature_spectrum::<f64>(&model)?;
            let s0 = catalog::shape_operator(&model, &point, req.coordinate)?;
            Ok(holonomy_basis(&spectrum, &s0)?)
        }
        _ => Err(CliError::Usage("give exactly one of --input or --model".into())),
    }
}

pub fn jacobi(req: JacobiRequest<'_>) -> Result<(), CliError> {
    if !(req.t_max > 0.0 && req.t_max.is_finite()) {
        return Err(CliError::Usage("--t-max must be positive".into()));
    }
    let family = family_from_request(&req)?;
    let options = FocalOptions { samples_per_period: req.grid, ..FocalOptions::default() };
    let interval = Interval::half_open(0.0, req.t_max);
    let focal = family.focal_data(interval, options)?;
    let mut table = Table::new(&["t", "f"]);
    let rows = req.rows.max(2);
    for i in 0..rows {
        let t = req.t_max * i as f64 / (rows - 1) as f64;
        table.push(vec![t, family.volume_density(t)]);
    }
    let isotropy = (0..=64)
        .map(|i| family.isotropy_defect(req.t_max * i as f64 / 64.0))
        .fold(0.0, f64::max);
    let summary = JacobiSummary {
        schema: JACOBI_SCHEMA,
        dim: family.dim(),
        interval: [0.0, req.t_max],
        index: focal.iter().map(|d| d.multiplicity).sum(),
        focal_data: focal.iter().map(|d| FocalDto { time: d.time, multiplicity: d.multiplicity }).collect(),
        lambda_mass: family.spectrum().lambda_mass(),
        isotropy_defect: isotropy,
    };
    finish_data("jacobi", req.out, &csv_bytes(&table)?, req.report, &json_bytes(&summary)?)
}

/// Writes the data file (or stdout) and the summary, plus the sidecar.
fn finish_data(
    command: &str,
    out: Option<&Path>,
    data: &[u8],
    report: Option<&Path>,
    summary: &[u8],
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            write_file(path, data)?;
            match report {
                Some(r) => {
                    write_file(r, summary)?;
                    write_sidecar(path, command, &[path, r])
                }
                None => {
                    emit(None, summary)?;
                    write_sidecar(path, command, &[path])
                }
            }
        }
        None => {
            emit(None, data)?;
            if let Some(r) = report {
                write_file(r, summary)?;
            }
            Ok(())
        }
    }
}

// ---------------------------------------------------------------- reconstruct

pub struct ReconstructRequest<'a> {
    pub input: Option<&'a Path>,
    pub model: Option<&'a str>,
    pub theta: Option<f64>,
    pub rows: usize,
    pub out: Option<&'a Path>,
    pub report: Option<&'a Path>,
}

pub fn reconstruct(req: ReconstructRequest<'_>) -> Result<(), CliError> {
    let (constraints, oracle): (Vec<VanishingConstraint<f64>>, Option<(FoliationModel, f64)>) =
        match (req.input, req.model) {
            (Some(path), None) => {
                let input: ConstraintsInput = read_json(path)?;
                let cs: Vec<_> =
                    input.constraints.iter().map(|c| VanishingConstraint { time: c.t, order: c.order }).collect();
                let actual = cs.iter().map(|c| c.order).sum();
                if let Some(declared) = input.m_half.filter(|&d| d != actual) {
                    return Err(ReconstructError::OrderMismatch { declared, actual }.into());
                }
                (cs, None)
            }
            (None, Some(id)) => {
                let model = parse_model(id)?;
                let theta = match req.theta {
                    Some(t) => t,
                    None => default_point(&model)[0],
                };
                (catalog::focal_data_of_model(&model, theta)?, Some((model, theta)))
            }
            _ => return Err(CliError::Usage("give exactly one of --input or --model".into())),
        };
    let density = trig_reconstruct::reconstruct_density(&constraints)?;
    let rows = req.rows.max(2);
    let mut table = Table::new(&["t", "f"]);
    for i in 0..rows {
        let t = 2.0 * PI * i as f64 / (rows - 1) as f64;
        table.push(vec![t, density.eval(t)]);
    }
    let mut summary = json!({
        "schema": "polarflow.reconstruct/1",
        "m_half": density.space().m_half(),
        "basis": density.space().basis().iter().map(|b| format!("{b:?}")).collect::<Vec<_>>(),
        "coefficients": density.coefficients(),
        "mean_curvature_component": trig_reconstruct::mean_curvature_component(&density),
    });
    if let Some((model, theta)) = &oracle {
        summary["model"] = json!(model.id());
        summary["theta"] = json!(theta);
        summary["density_sup_error"] = json!(density_sup_error(&density, model, *theta)?);
    }
    finish_data("reconstruct", req.out, &csv_bytes(&table)?, req.report, &json_bytes(&summary)?)
}

/// `sup_{[0,2π]} |f(t) − V(θ+t)/V(θ)|` on a 4096-point grid. Points where
/// `θ + t` sits on a wall use the continuous extension, which is 0 there.
pub fn density_sup_error(density: &TrigDensity<f64>, model: &FoliationModel, theta: f64) -> Result<f64, CliError> {
    let v0 = catalog::leaf_volume_profile(model, &[theta])?;
    let polarflow::catalog::ModelKind::Sphere { g, m1, m2 } = *model.kind() else {
        return Err(CliError::Usage(format!("{model} is not a sphere model")));
    };
    let profile = |x: f64| -> f64 {
        (0..g)
            .map(|k| {
                let m = if k % 2 == 0 { m1 } else { m2 };
                (x + k as f64 * PI / g as f64).sin().powi(m as i32)
            })
            .product()
    };
    Ok((0..=4096)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / 4096.0;
            (density.eval(t) - profile(theta + t) / v0).abs()
        })
        .fold(0.0, f64::max))
}

// ---------------------------------------------------------------- riccati

pub fn riccati(input: &Path, horizon: Option<f64>, out: Option<&Path>, report: Option<&Path>) -> Result<(), CliError> {
    let problem_in: RiccatiInput = read_json(input)?;
    let s0 = RiccatiOperator::new(matrix_from_rows(&problem_in.s0)?)?;
    let problem = match problem_in.step {
        Some(step) => RiccatiProblem::new(problem_in.r.clone(), s0, step)?,
        None => RiccatiProblem::with_default_step(problem_in.r.clone(), s0)?,
    };
    let n = problem.dim() as f64;
    let delta = problem_in.delta.unwrap_or(problem.curvature_trace() / n);
    let comparison = riccati::average_trace_comparison(&problem, delta)?;
    let t_end = horizon.or(problem_in.horizon).unwrap_or(comparison.model.blowup_time());
    let trajectory = riccati::integrate_riccati(&problem, t_end)?;
    let mut table = Table::new(&["t", "avg_trace", "model"]);
    for (t, a) in trajectory.average_trace() {
        let bar = if t < comparison.model.blowup_time() { comparison.model.value(t) } else { f64::INFINITY };
        table.push(vec![t, a, bar]);
    }
    let summary = RiccatiSummary {
        schema: RICCATI_SCHEMA,
        delta,
        comparison_holds: comparison.holds,
        max_violation: comparison.max_violation,
        model_blowup: comparison.model.blowup_time(),
        blowup: trajectory.blowup.map(|b| b.time),
        first_blowup_bound: riccati::first_blowup_bound(delta),
    };
    finish_data("riccati", out, &csv_bytes(&table)?, report, &json_bytes(&summary)?)
}

// ---------------------------------------------------------------- arrangement

pub fn arrangement_from_dto(dto: &ArrangementDto) -> Result<WallArrangement<f64>, CliError> {
    let ambient = match dto.ambient.kind.as_str() {
        "flat" => Ambient::Flat(dto.ambient.dim),
        "round" => Ambient::Round(dto.ambient.dim),
        other => return Err(CliError::Input(format!("unknown ambient kind `{other}`"))),
    };
    let mut families = Vec::with_capacity(dto.families.len());
    for (i, f) in dto.families.iter().enumerate() {
        let normal = nalgebra::DVector::from_column_slice(&f.normal);
        let norm = normal.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(CliError::Input(format!("family {i}: zero normal")));
        }
        let offsets = match &f.offsets {
            OffsetsDto::Finite { values } => Offsets::Finite(values.iter().map(|c| c / norm).collect()),
            OffsetsDto::Arith { base, gap } => Offsets::Arith { base: base / norm, gap: gap / norm },
        };
        families.push(WallFamily::new(normal / norm, offsets, f.mult));
    }
    Ok(WallArrangement::new(ambient, families)?)
}

pub fn arrangement(input: &Path, max_walls: usize, out: Option<&Path>) -> Result<(), CliError> {
    let dto: ArrangementDto = read_json(input)?;
    let a = arrangement_from_dto(&dto)?;
    let closed = generate_closure(&a, max_walls)?;
    let components = split_components(&closed)?
        .into_iter()
        .map(|c| ComponentDto {
            families: c.families,
            span: c.span.column_iter().map(|col| col.iter().copied().collect()).collect(),
        })
        .collect();
    let flat = closed.ambient().is_flat();
    let result = ArrangementResult {
        schema: ARRANGEMENT_RESULT_SCHEMA,
        closure: arrangement_dto(&closed),
        components,
        flat_distribution: if flat {
            Some(flat_distribution(&closed)?.column_iter().map(|c| c.iter().copied().collect()).collect())
        } else {
            None
        },
        chamber_compact: if flat { Some(chamber_compact(&closed)?) } else { None },
    };
    let bytes = json_bytes(&result)?;
    emit(out, &bytes)?;
    if let Some(path) = out {
        write_sidecar(path, "arrangement", &[path])?;
    }
    Ok(())
}

// ---------------------------------------------------------------- mcf

pub struct McfRun {
    pub model: String,
    pub start: Vec<f64>,
    pub direction: Direction,
    pub t_end: f64,
    pub out: Option<PathBuf>,
}

pub fn parse_direction(s: &str) -> Result<Direction, CliError> {
    s.parse().map_err(CliError::Usage)
}

pub fn trajectory_table(traj: &FlowTrajectory<f64>) -> Table {
    let k = traj.samples.first().map_or(1, |s| s.point.len());
    let names: Vec<String> = if k == 1 {
        vec!["t".into(), "theta".into(), "V".into(), "h".into()]
    } else {
        std::iter::once("t".to_string())
            .chain((0..k).map(|i| format!("theta_{i}")))
            .chain(std::iter::once("V".to_string()))
            .chain((0..k).map(|i| format!("h_{i}")))
            .collect()
    };
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut table = Table::new(&header);
    for s in &traj.samples {
        let mut row = vec![s.time];
        row.extend(&s.point);
        row.push(s.volume);
        row.extend(&s.h);
        table.push(row);
    }
    table
}

pub fn termination_json(traj: &FlowTrajectory<f64>) -> serde_json::Value {
    let mut v = json!({
        "model": traj.model_id,
        "direction": traj.direction.to_string(),
        "termination": traj.termination.label(),
        "samples": traj.samples.len(),
        "final_point": traj.samples.last().map(|s| s.point.clone()),
    });
    match &traj.termination {
        Termination::Blowup { time, wall } => {
            v["blowup_time"] = json!(time);
            v["wall"] = json!(wall.to_string());
        }
        Termination::Converged { point } => v["converged_point"] = json!(point),
        Termination::ReachedEnd => {}
    }
    v
}

pub fn run_flow(run: &McfRun, options: FlowOptions<f64>) -> Result<FlowTrajectory<f64>, CliError> {
    let model = parse_model(&run.model)?;
    if !(run.t_end > 0.0) {
        return Err(CliError::Usage("--t-end must be positive".into()));
    }
    Ok(mcf::flow(&model, &run.start, run.direction, run.t_end, options)?)
}

pub fn mcf_single(run: McfRun, options: FlowOptions<f64>) -> Result<(), CliError> {
    let traj = run_flow(&run, options)?;
    let data = csv_bytes(&trajectory_table(&traj))?;
    let summary = json_bytes(&termination_json(&traj))?;
    finish_data("mcf", run.out.as_deref(), &data, None, &summary)
}

/// Runs independent configs on up to `jobs` threads; outputs depend only on
/// each config, so results are identical for every `jobs`.
pub fn mcf_batch(config: &Path, jobs: usize, out_dir: Option<&Path>, options: FlowOptions<f64>) -> Result<(), CliError> {
    let batch: McfBatch = read_json(config)?;
    let configs = match batch {
        McfBatch::One(c) => vec![c],
        McfBatch::Many(v) => v,
    };
    let base = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.parent().map(Path::to_path_buf).unwrap_or_default());
    let runs: Vec<McfRun> = configs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            Ok(McfRun {
                model: c.model.clone(),
                start: c.theta0.to_vec(),
                direction: parse_direction(&c.direction)?,
                t_end: c.t_end,
                out: Some(match &c.out {
                    Some(name) => base.join(name),
                    None => base.join(format!("run-{i:03}.csv")),
                }),
            })
        })
        .collect::<Result<_, CliError>>()?;

    let jobs = jobs.max(1).min(runs.len().max(1));
    let mut results: Vec<Option<Result<serde_json::Value, CliError>>> = (0..runs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|worker| {
                let runs = &runs;
                scope.spawn(move || {
                    (worker..runs.len())
                        .step_by(jobs)
                        .map(|i| {
                            let r = run_flow(&runs[i], options).and_then(|traj| {
                                let path = runs[i].out.as_deref().expect("batch runs have outputs");
                                write_file(path, &csv_bytes(&trajectory_table(&traj))?)?;
                                let mut summary = termination_json(&traj);
                                summary["out"] = json!(path.file_name().map(|n| n.to_string_lossy().into_owned()));
                                Ok(summary)
                            });
                            (i, r)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker thread panicked") {
                results[i] = Some(r);
            }
        }
    });
    let mut summaries = Vec::new();
    for r in results.into_iter().flatten() {
        summaries.push(r?);
    }
    let index = base.join("batch-summary.json");
    write_file(&index, &json_bytes(&summaries)?)?;
    let outputs: Vec<&Path> = runs.iter().filter_map(|r| r.out.as_deref()).collect();
    write_sidecar(&index, "mcf", &outputs)
}
