//! `check` and `props`: versioned pass/fail reports.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use polarflow::arrangement::reflect_normal;
use polarflow::catalog::{self, FoliationModel};
use polarflow::geodesic_jacobi::{
    holonomy_basis, CurvatureSpectrum, FocalOptions, Interval, RiccatiOperator, SpectrumEntry,
};
use polarflow::mcf::{self, Direction, FlowOptions, Termination};
use polarflow::riccati::{self, RiccatiProblem};
use polarflow::trig_reconstruct;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::commands::density_sup_error;
use crate::error::CliError;
use crate::schema::{CheckResult, Report, REPORT_SCHEMA};

pub const DENSITY_TOLERANCE: f64 = 1e-8;
pub const MEAN_CURVATURE_TOLERANCE: f64 = 1e-8;
pub const CONCAVITY_TOLERANCE: f64 = 1e-6;
pub const LEAF_TOLERANCE: f64 = 1e-6;
pub const CONCAVITY_GRID: usize = 10_000;
pub const BACKWARD_HORIZON: f64 = 20.0;

fn measured(check: &str, value: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        check: check.into(),
        value: Some(json!(value)),
        expected: None,
        max_violation: None,
        tolerance: Some(tolerance),
        pass: value.abs() <= tolerance,
    }
}

/// Index over `[0, 2π)` against `2 · Σ λ_i`.
pub fn index_check(model: &FoliationModel, point: &[f64]) -> Result<CheckResult, CliError> {
    let spectrum = catalog::curvature_spectrum::<f64>(model)?;
    let s0 = catalog::shape_operator(model, point, 0)?;
    let family = holonomy_basis(&spectrum, &s0)?;
    let index = family.index_over_interval(Interval::half_open(0.0, 2.0 * PI), FocalOptions::default())?;
    let expected = (2.0 * spectrum.lambda_mass()).round() as usize;
    Ok(CheckResult {
        check: "index_2pi".into(),
        value: Some(json!(index)),
        expected: Some(json!(expected)),
        max_violation: None,
        tolerance: None,
        pass: index == expected,
    })
}

pub fn check(model: &FoliationModel, point: &[f64]) -> Result<Report, CliError> {
    model.check_point(point)?;
    let mut checks = vec![index_check(model, point)?];
    if model.is_sphere() {
        let theta = point[0];
        let constraints = catalog::focal_data_of_model(model, theta)?;
        let density = trig_reconstruct::reconstruct_density(&constraints)?;
        checks.push(measured("density_sup_error", density_sup_error(&density, model, theta)?, DENSITY_TOLERANCE));

        let h = mcf::mean_curvature_component(model, point)?[0];
        let reconstructed = trig_reconstruct::mean_curvature_component(&density);
        let mut mc = measured("mean_curvature", (reconstructed - h).abs(), MEAN_CURVATURE_TOLERANCE);
        mc.expected = Some(json!(h));
        checks.push(mc);

        let violation = mcf::concavity_check::<f64>(model, CONCAVITY_GRID)?;
        checks.push(CheckResult {
            check: "concavity".into(),
            value: None,
            expected: None,
            max_violation: Some(violation),
            tolerance: Some(CONCAVITY_TOLERANCE),
            pass: violation <= CONCAVITY_TOLERANCE,
        });

        let target = mcf::minimal_leaf::<f64>(model)?;
        let traj = mcf::flow(model, point, Direction::Backward, BACKWARD_HORIZON, FlowOptions::default())?;
        let end = match &traj.termination {
            Termination::Converged { point } => point.clone(),
            _ => traj.samples.last().map(|s| s.point.clone()).unwrap_or_default(),
        };
        let distance = end.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let mut leaf = measured("backward_limit", distance, LEAF_TOLERANCE);
        leaf.expected = Some(json!(target));
        checks.push(leaf);
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(Report { schema: REPORT_SCHEMA, subject: model.id(), seed: None, checks, pass })
}

// ---------------------------------------------------------------- props

fn props_result(check: &str, violation: f64, tolerance: f64, cases: usize) -> CheckResult {
    CheckResult {
        check: check.into(),
        value: Some(json!(cases)),
        expected: None,
        max_violation: Some(violation),
        tolerance: Some(tolerance),
        pass: violation <= tolerance,
    }
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-scale..scale));
    (&a + a.transpose()) * 0.5
}

/// Fourth-order integration of `M'' = −Λ² M` on `[0, 2π]`.
fn integrate_jacobi(lambdas: &[f64], m0: &DMatrix<f64>, v0: &DMatrix<f64>, steps: usize) -> Vec<DMatrix<f64>> {
    let l2 = DMatrix::from_diagonal(&DVector::from_iterator(lambdas.len(), lambdas.iter().map(|l| l * l)));
    let h = 2.0 * PI / steps as f64;
    let (mut m, mut v) = (m0.clone(), v0.clone());
    let mut out = vec![m.clone()];
    for _ in 0..steps {
        let acc = |x: &DMatrix<f64>| -(&l2 * x);
        let (k1m, k1v) = (v.clone(), acc(&m));
        let (k2m, k2v) = (&v + &k1v * (h / 2.0), acc(&(&m + &k1m * (h / 2.0))));
        let (k3m, k3v) = (&v + &k2v * (h / 2.0), acc(&(&m + &k2m * (h / 2.0))));
        let (k4m, k4v) = (&v + &k3v * h, acc(&(&m + &k3m * h)));
        m += (k1m + k2m * 2.0 + k3m * 2.0 + k4m) * (h / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        out.push(m.clone());
    }
    out
}

pub fn props(seed: u64, cases: usize) -> Result<Report, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let steps = 4096;
    let mut jacobi_error: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(1..=4);
        let lambdas: Vec<f64> = (0..n).map(|_| rng.random_range(1..=3) as f64).collect();
        let entries = lambdas.iter().map(|&l| SpectrumEntry { lambda: l, multiplicity: 1 }).collect();
        let spectrum = CurvatureSpectrum::new(entries)?;
        let axes = spectrum.axis_lambdas();
        let s0 = random_symmetric(&mut rng, n, 1.0);
        let family = holonomy_basis(&spectrum, &RiccatiOperator::new(s0.clone())?)?;
        let numeric = integrate_jacobi(&axes, &DMatrix::identity(n, n), &s0, steps);
        for (i, m) in numeric.iter().enumerate() {
            let t = 2.0 * PI * i as f64 / steps as f64;
            jacobi_error = jacobi_error.max((family.matrix_at(t) - m).amax());
        }
    }
    checks.push(props_result("jacobi_closed_form", jacobi_error, 1e-8, cases));

    let mut comparison: f64 = f64::MIN;
    for _ in 0..cases {
        let n = rng.random_range(1..=4);
        let delta = rng.random_range(0.2..2.0);
        let mut r: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..4.0)).collect();
        let deficit = n as f64 * (delta + 0.1) - r.iter().sum::<f64>();
        if deficit > 0.0 {
            r.iter_mut().for_each(|x| *x += deficit / n as f64);
        }
        let s0 = RiccatiOperator::new(random_symmetric(&mut rng, n, 1.0))?;
        let problem = RiccatiProblem::with_default_step(r, s0)?;
        let report = riccati::average_trace_comparison(&problem, delta)?;
        comparison = comparison.max(report.max_violation);
    }
    checks.push(props_result("riccati_comparison", comparison.max(0.0), riccati::COMPARISON_TOLERANCE, cases));

    let mut involution: f64 = 0.0;
    for _ in 0..cases {
        let k = rng.random_range(2..=5);
        let mut unit = || {
            let v = DVector::from_fn(k, |_, _| rng.random_range(-1.0..1.0));
            v.normalize()
        };
        let (v, w) = (unit(), unit());
        involution = involution.max((reflect_normal(&v, &reflect_normal(&v, &w)) - &w).amax());
    }
    checks.push(props_result("reflection_involution", involution, 1e-12, cases));

    let spheres = catalog::sphere_catalog();
    let mut density: f64 = 0.0;
    for _ in 0..cases {
        let model = &spheres[rng.random_range(0..spheres.len())];
        let (lo, hi) = model.chamber::<f64>()[0];
        let theta = lo + (hi - lo) * rng.random_range(0.05..0.95);
        let constraints = catalog::focal_data_of_model(model, theta)?;
        let f = trig_reconstruct::reconstruct_density(&constraints)?;
        density = density.max(density_sup_error(&f, model, theta)?);
    }
    checks.push(props_result("reconstruction_fidelity", density, DENSITY_TOLERANCE, cases));

    let pass = checks.iter().all(|c| c.pass);
    Ok(Report { schema: REPORT_SCHEMA, subject: "props".into(), seed: Some(seed), checks, pass })
}
