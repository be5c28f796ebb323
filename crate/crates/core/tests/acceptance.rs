//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use polarflow::arrangement::{
    chamber_compact, generate_closure, split_components, Ambient, Offsets, WallArrangement, WallFamily,
};
use polarflow::catalog::{self, FoliationModel, ModelKind};
use polarflow::geodesic_jacobi::{holonomy_basis, CurvatureSpectrum, FocalOptions, Interval, RiccatiOperator, SpectrumEntry};
use polarflow::mcf::{self, Direction, FlowOptions, Termination};
use polarflow::riccati::{self, RiccatiProblem};
use polarflow::trig_reconstruct::{mean_curvature_component, reconstruct_density};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- oracles

fn sphere_params(model: &FoliationModel) -> (usize, usize, usize) {
    match *model.kind() {
        ModelKind::Sphere { g, m1, m2 } => (g, m1, m2),
        _ => unreachable!("sphere catalog"),
    }
}

fn mult(m1: usize, m2: usize, k: usize) -> f64 {
    if k % 2 == 0 { m1 as f64 } else { m2 as f64 }
}

/// `∏_k sin^{m_k}(x + kπ/g)`, signed.
fn profile(model: &FoliationModel, x: f64) -> f64 {
    let (g, m1, m2) = sphere_params(model);
    (0..g).map(|k| (x + k as f64 * PI / g as f64).sin().powi(mult(m1, m2, k) as i32)).product()
}

/// `(log V)'` and `(log V)''`.
fn log_derivatives(model: &FoliationModel, x: f64) -> (f64, f64) {
    let (g, m1, m2) = sphere_params(model);
    (0..g).fold((0.0, 0.0), |(d1, d2), k| {
        let y = x + k as f64 * PI / g as f64;
        let m = mult(m1, m2, k);
        (d1 + m * y.cos() / y.sin(), d2 - m / (y.sin() * y.sin()))
    })
}

fn chamber_points(model: &FoliationModel, count: usize) -> Vec<f64> {
    let (lo, hi) = model.chamber::<f64>()[0];
    (1..=count).map(|i| lo + (hi - lo) * i as f64 / (count + 1) as f64).collect()
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-scale..scale));
    (&a + a.transpose()) * 0.5
}

/// Classical RK4 for `M'' = −Λ² M`, `M(0) = I`, `M'(0) = v0`, sampled at
/// every step on `[0, 2π]`.
fn rk4_jacobi(lambdas: &[f64], v0: &DMatrix<f64>, steps: usize) -> Vec<(f64, DMatrix<f64>)> {
    let n = lambdas.len();
    let l2 = DMatrix::from_diagonal(&DVector::from_iterator(n, lambdas.iter().map(|l| l * l)));
    let h = 2.0 * PI / steps as f64;
    let (mut m, mut v) = (DMatrix::identity(n, n), v0.clone());
    let mut out = vec![(0.0, m.clone())];
    for i in 1..=steps {
        let a = |x: &DMatrix<f64>| -(&l2 * x);
        let (k1m, k1v) = (v.clone(), a(&m));
        let (k2m, k2v) = (&v + &k1v * (h / 2.0), a(&(&m + &k1m * (h / 2.0))));
        let (k3m, k3v) = (&v + &k2v * (h / 2.0), a(&(&m + &k2m * (h / 2.0))));
        let (k4m, k4v) = (&v + &k3v * h, a(&(&m + &k3m * h)));
        m += (k1m + k2m * 2.0 + k3m * 2.0 + k4m) * (h / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        out.push((i as f64 * h, m.clone()));
    }
    out
}

// ---------------------------------------------------------------- criteria

fn jacobi_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=6);
        let mut entries = Vec::new();
        let mut left = n;
        while left > 0 {
            let m = rng.random_range(1..=left);
            let lambda = if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.05..3.0) };
            entries.push(SpectrumEntry { lambda, multiplicity: m });
            left -= m;
        }
        let spectrum = CurvatureSpectrum::new(entries).expect("distinct eigenvalues");
        let s0 = random_symmetric(&mut rng, n, 2.0);
        let family = holonomy_basis(&spectrum, &RiccatiOperator::new(s0.clone()).unwrap()).unwrap();
        for (t, m) in rk4_jacobi(&spectrum.axis_lambdas(), &s0, 8192) {
            worst = worst.max((family.matrix_at(t) - m).amax());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-8 && elapsed < 5.0,
        format!("100 families, sup error {worst:.2e} (tol 1e-8), {elapsed:.2}s (limit 5s)"),
    )
}

fn index_identity() -> Outcome {
    let mut cases = 0;
    let mut failures = Vec::new();
    for model in catalog::sphere_catalog() {
        let (g, m1, m2) = sphere_params(&model);
        if g > 3 || m1 > 3 || m2 > 3 {
            continue;
        }
        let spectrum = catalog::curvature_spectrum::<f64>(&model).unwrap();
        let expected = 2.0 * spectrum.lambda_mass();
        for theta in chamber_points(&model, 5) {
            let s0 = catalog::shape_operator(&model, &[theta], 0).unwrap();
            let family = holonomy_basis(&spectrum, &s0).unwrap();
            let index = family
                .index_over_interval(Interval::half_open(0.0, 2.0 * PI), FocalOptions::default())
                .unwrap();
            cases += 1;
            if index as f64 != expected || index != 2 * model.leaf_dimension() {
                failures.push(format!("{model}@{theta:.4}: {index} vs {expected}"));
            }
        }
    }
    outcome(failures.is_empty(), format!("{cases} cases, mismatches: {failures:?}"))
}

fn reconstruction_and_mean_curvature() -> (Outcome, Outcome) {
    let (mut sup, mut mc) = (0.0f64, 0.0f64);
    let mut cases = 0;
    for model in catalog::sphere_catalog() {
        for theta in chamber_points(&model, 5) {
            let constraints = catalog::focal_data_of_model(&model, theta).unwrap();
            let density = reconstruct_density(&constraints).unwrap();
            let v0 = profile(&model, theta);
            for i in 0..=4096 {
                let t = 2.0 * PI * i as f64 / 4096.0;
                sup = sup.max((density.eval(t) - profile(&model, theta + t) / v0).abs());
            }
            let (dlog, _) = log_derivatives(&model, theta);
            mc = mc.max((mean_curvature_component(&density) + dlog).abs());
            cases += 1;
        }
    }
    (
        outcome(sup <= 1e-8, format!("{cases} cases, sup error {sup:.2e} (tol 1e-8)")),
        outcome(mc <= 1e-8, format!("{cases} cases, max |−f'(0) + (log V)'| {mc:.2e} (tol 1e-8)")),
    )
}

fn riccati_comparison() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_value, mut worst_gap) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut gaps = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let delta = rng.random_range(0.1..2.0);
        let mut r: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..4.0)).collect();
        let required = n as f64 * (delta + 0.1);
        let sum: f64 = r.iter().sum();
        if sum < required {
            let extra = rng.random_range(0.0..1.0);
            r.iter_mut().for_each(|x| *x += (required - sum) / n as f64 + extra);
        }
        let s0 = RiccatiOperator::new(random_symmetric(&mut rng, n, 2.0)).unwrap();
        let problem = RiccatiProblem::with_default_step(r, s0).unwrap();
        let report = riccati::average_trace_comparison(&problem, delta).unwrap();
        for s in &report.samples {
            worst_value = worst_value.max(s.average_trace - s.model);
        }
        let bound = riccati::first_blowup_bound(delta);
        for gap in riccati::measured_blowup_gaps(&problem, 3.0 * bound).unwrap() {
            gaps += 1;
            worst_gap = worst_gap.max(gap - bound);
        }
    }
    outcome(
        worst_value <= 1e-6 && worst_gap <= 1e-3,
        format!(
            "200 problems, max a − ā {worst_value:.2e} (tol 1e-6), {gaps} gaps, max gap − π/√δ {worst_gap:.2e} (tol 1e-3)"
        ),
    )
}

fn concavity() -> Outcome {
    let grid = 10_000;
    let (mut worst, mut library_worst, mut equality) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0f64);
    for model in catalog::sphere_catalog() {
        let (g, _, _) = sphere_params(&model);
        let n = model.leaf_dimension() as f64;
        let width = PI / g as f64;
        for i in 1..=grid {
            let x = width * i as f64 / (grid + 1) as f64;
            let w = catalog::leaf_volume_profile(&model, &[x]).unwrap().powf(1.0 / n);
            let (d1, d2) = log_derivatives(&model, x);
            let value = w * (1.0 + d2 / n + d1 * d1 / (n * n));
            worst = worst.max(value);
            if g == 1 {
                equality = equality.max(value.abs());
            }
        }
        let lib = mcf::concavity_check::<f64>(&model, grid).unwrap();
        library_worst = library_worst.max(lib);
        if g == 1 {
            equality = equality.max(lib.abs());
        }
    }
    outcome(
        worst <= 1e-6 && library_worst <= 1e-6 && equality <= 1e-9,
        format!(
            "max (W''+W) {worst:.2e} oracle / {library_worst:.2e} library (tol 1e-6), distance spheres |W''+W| {equality:.2e} (tol 1e-9)"
        ),
    )
}

fn ancient_convergence() -> Outcome {
    let models = catalog::sphere_catalog();
    let results: Vec<(String, f64, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = models
            .iter()
            .enumerate()
            .map(|(i, model)| {
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(700 + i as u64);
                    let target = mcf::minimal_leaf::<f64>(model).unwrap();
                    let (root_residual, _) = log_derivatives(model, target[0]);
                    let (lo, hi) = model.chamber::<f64>()[0];
                    let mut worst: f64 = 0.0;
                    for _ in 0..20 {
                        let start = lo + (hi - lo) * rng.random_range(1e-4..1.0 - 1e-4);
                        let traj = mcf::flow(model, &[start], Direction::Backward, 20.0, FlowOptions::default()).unwrap();
                        let end = match &traj.termination {
                            Termination::Converged { point } => point[0],
                            _ => traj.samples.last().unwrap().point[0],
                        };
                        worst = worst.max((end - target[0]).abs());
                    }
                    (model.id(), worst, root_residual.abs())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let residual = results.iter().map(|r| r.2).fold(0.0, f64::max);

    let sphere = catalog::sphere_isoparametric(1, 2, 2).unwrap();
    let fwd = mcf::flow(&sphere, &[PI / 3.0], Direction::Forward, 10.0, FlowOptions::default()).unwrap();
    let blowup_error = match fwd.termination {
        Termination::Blowup { time, .. } => (time - 0.5 * 2f64.ln()).abs(),
        _ => f64::INFINITY,
    };
    outcome(
        worst <= 1e-6 && residual <= 1e-9 && blowup_error <= 1e-4,
        format!(
            "{} models x 20 starts, max distance to minimal leaf {worst:.2e} (tol 1e-6), \
             |(log V)'| at leaf {residual:.2e}; spheres:2 blow-up error {blowup_error:.2e} (tol 1e-4)",
            results.len()
        ),
    )
}

fn type_one() -> Outcome {
    let runs = [("spheres:2", PI / 3.0), ("clifford:1,1", 0.5)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (id, start) in runs {
        let model: FoliationModel = id.parse().unwrap();
        let report = mcf::type1_check(&model, &[start]).unwrap();
        let at = report.probes.iter().find(|p| p.0 == 1e-5).map(|p| p.1);
        let ok = at.is_some_and(|v| (v - report.expected).abs() <= 1e-2);
        pass &= ok;
        parts.push(format!("{id}: (T−t)h² = {:.6} vs {} at T−t=1e-5", at.unwrap_or(f64::NAN), report.expected));
    }
    outcome(pass, parts.join("; "))
}

fn unit(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v).normalize()
}

fn embed(v: &DVector<f64>, offset: usize, k: usize) -> DVector<f64> {
    let mut out = DVector::zeros(k);
    out.rows_mut(offset, v.len()).copy_from(v);
    out
}

/// The closure splits into components whose spans are exactly the blocks.
fn splits_into_blocks(summands: &[WallArrangement<f64>]) -> bool {
    let mut sum = summands[0].clone();
    for s in &summands[1..] {
        sum = sum.direct_sum(s).unwrap();
    }
    let closed = generate_closure(&sum, 500).unwrap();
    let comps = split_components(&closed).unwrap();
    if comps.len() != summands.len() {
        return false;
    }
    let k = closed.ambient().dim();
    let mut offset = 0;
    let mut ok = true;
    for s in summands {
        let d = s.ambient().dim();
        let block: Vec<DVector<f64>> = (0..d)
            .map(|i| {
                let mut e = DVector::zeros(d);
                e[i] = 1.0;
                embed(&e, offset, k)
            })
            .collect();
        let matching = comps.iter().filter(|c| {
            c.span.ncols() == d
                && c.span.column_iter().all(|col| {
                    let projected: f64 = block.iter().map(|b| b.dot(&col).powi(2)).sum();
                    (projected - 1.0).abs() < 1e-9
                })
        });
        ok &= matching.count() == 1;
        offset += d;
    }
    ok
}

fn crossings(a: &WallArrangement<f64>, x0: &DVector<f64>, d: &DVector<f64>, len: f64) -> usize {
    a.families()
        .iter()
        .map(|f| {
            let (p, q) = (f.normal.dot(x0), f.normal.dot(x0) + len * f.normal.dot(d));
            f.offsets.in_range(p.min(q), p.max(q)).len()
        })
        .sum()
}

fn integer_directions(k: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::new();
    let total = 5usize.pow(k as u32);
    for code in 0..total {
        let v: Vec<f64> = (0..k).map(|i| ((code / 5usize.pow(i as u32)) % 5) as f64 - 2.0).collect();
        if v.iter().any(|&x| x != 0.0) {
            out.push(DVector::from_vec(v));
        }
    }
    out
}

fn splitting_and_compactness() -> Outcome {
    let angle = |t: f64| unit(&[t.cos(), t.sin()]);
    let arith = |v: DVector<f64>, gap: f64| WallFamily::new(v, Offsets::Arith { base: 0.0, gap }, 1);
    let fin = |v: DVector<f64>| WallFamily::new(v, Offsets::Finite(vec![0.0]), 1);
    let sqrt3 = 3f64.sqrt();

    let affine_a2 = WallArrangement::new(
        Ambient::Flat(2),
        [0.0, PI / 3.0, 2.0 * PI / 3.0].iter().map(|&t| arith(angle(t), sqrt3 / 2.0)).collect(),
    )
    .unwrap();
    let affine_a1 = WallArrangement::new(Ambient::Flat(1), vec![arith(unit(&[1.0]), 1.0)]).unwrap();
    let flat_b2 = WallArrangement::new(Ambient::Flat(2), vec![fin(angle(0.0)), fin(angle(PI / 4.0))]).unwrap();
    let round_a2 = WallArrangement::new(Ambient::Round(2), vec![fin(angle(0.0)), fin(angle(PI / 3.0))]).unwrap();
    let round_a1 = WallArrangement::new(Ambient::Round(1), vec![fin(unit(&[1.0]))]).unwrap();
    let round_i5 = WallArrangement::new(Ambient::Round(2), vec![fin(angle(0.0)), fin(angle(PI / 5.0))]).unwrap();
    let i5_components = split_components(&generate_closure(&round_i5, 500).unwrap()).unwrap().len();

    let flat_split = splits_into_blocks(&[affine_a2, affine_a1, flat_b2]);
    let round_split = splits_into_blocks(&[round_a2.clone(), round_a1]);
    let a2_components = split_components(&generate_closure(&round_a2, 500).unwrap()).unwrap().len();

    let mut catalog_split = true;
    for id in ["product(clifford:1,1,clifford:1,1)", "product(clifford:1,1,euclid-spheres:2)", "product(spheres:2,cartan:3,1,1)"] {
        let model: FoliationModel = id.parse().unwrap();
        let closed = generate_closure(&catalog::wall_arrangement::<f64>(&model).unwrap(), 500).unwrap();
        catalog_split &= split_components(&closed).unwrap().len() == model.factors().len();
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut checked, mut agree, mut compact_seen, mut skipped) = (0, 0, 0, 0);
    while checked < 20 {
        let k = rng.random_range(2..=3);
        let mut roots: Vec<DVector<f64>> = (0..k)
            .map(|i| {
                let mut e = DVector::zeros(k);
                e[i] = 1.0;
                e
            })
            .collect();
        for i in 0..k {
            for j in i + 1..k {
                for s in [1.0, -1.0] {
                    let mut v = DVector::zeros(k);
                    v[i] = 1.0;
                    v[j] = s;
                    roots.push(v);
                }
            }
        }
        let count = rng.random_range(1..=k + 1);
        let mut families = Vec::new();
        for _ in 0..count {
            let root = roots.swap_remove(rng.random_range(0..roots.len()));
            let norm = root.norm();
            let offsets = if rng.random_bool(0.7) {
                Offsets::Arith { base: 0.0, gap: 1.0 / norm }
            } else {
                Offsets::Finite(vec![0.0])
            };
            families.push(WallFamily::new(root / norm, offsets, 1));
        }
        let arrangement = WallArrangement::new(Ambient::Flat(k), families).unwrap();
        let Ok(closed) = generate_closure(&arrangement, 500) else {
            skipped += 1;
            continue;
        };
        let x0 = DVector::from_fn(k, |_, _| rng.random_range(-0.5..0.5));
        // A chamber is unbounded exactly when some ray from its interior
        // stops meeting new walls.
        let unbounded = integer_directions(k)
            .iter()
            .any(|d| crossings(&closed, &x0, d, 200.0) == crossings(&closed, &x0, d, 400.0));
        let compact = chamber_compact(&closed).unwrap();
        checked += 1;
        compact_seen += compact as usize;
        agree += (compact != unbounded) as usize;
    }

    let pass = flat_split && round_split && a2_components == 1 && i5_components == 1 && catalog_split && agree == 20 && compact_seen > 0 && compact_seen < 20;
    outcome(
        pass,
        format!(
            "flat/round direct sums split {flat_split}/{round_split}, A2/I2(5) round components {a2_components}/{i5_components}, \
             catalog products split {catalog_split}, compactness agrees on {agree}/20 \
             ({compact_seen} compact, {skipped} draws exceeded the closure limit)"
        ),
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |label: &str, name: &str, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(|| run()))
            .unwrap_or_else(|_| outcome(false, "panicked".into()));
        if !o.pass {
            failed += 1;
        }
        println!(
            "{label} {} {name}: {} [{:.2}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    };
    report("AC1", "jacobi closed form vs integration", &mut jacobi_oracle);
    report("AC2", "index identity", &mut index_identity);
    let mut pair = None;
    report("AC3", "reconstruction fidelity", &mut || {
        let (a, b) = reconstruction_and_mean_curvature();
        pair = Some(b);
        a
    });
    report("AC4", "basic mean curvature", &mut || pair.take().unwrap_or_else(|| outcome(false, "not run".into())));
    report("AC5", "riccati comparison", &mut riccati_comparison);
    report("AC6", "concavity", &mut concavity);
    report("AC7", "ancient convergence", &mut ancient_convergence);
    report("AC8", "type-I limit", &mut type_one);
    report("AC9", "splitting and compactness", &mut splitting_and_compactness);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
