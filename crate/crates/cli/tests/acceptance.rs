//! Acceptance criteria 1-10, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_RED` are implemented at full strength and are
//! expected to print FAIL; the process exits non-zero on any other failure or
//! if a known-red criterion starts passing.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scaledel::convergence::{del_convergence_sweep, kernel_bound_check, operator_consistency_sweep};
use scaledel::leibniz::{leibniz_residual, Companion, LeibnizCoefficients};
use scaledel::oscillator::{oscillator_char_poly, unit_modulus_roots};
use scaledel::{
    del_residual_quadratic, solve_bvp, Complex64, Direction, Grid, Path, QuadraticLagrangian, Samples, Stencil,
    TestFunction,
};

const KNOWN_RED: &[u32] = &[6, 9];

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_complex(rng: &mut ChaCha8Rng, scale: f64) -> C {
    c(rng.random_range(-scale..=scale), rng.random_range(-scale..=scale))
}

fn random_real_path(rng: &mut ChaCha8Rng, grid: Grid) -> Path {
    let xs: Vec<C> = (0..grid.len()).map(|_| c(rng.random_range(-1.0..=1.0), 0.0)).collect();
    Path::from_scalars(grid, &xs).unwrap()
}

fn sup_diff(a: &DVector<C>, b: &DVector<C>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Affine projection onto `sum gamma = 0`, `sum l gamma = 1` through the two
/// weights at offsets 0 and 1.
fn project_consistent(gamma: &mut [C], n: usize) {
    let rest_sum: C = gamma
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != n && *i != n + 1)
        .map(|(_, g)| g)
        .sum();
    let rest_moment: C = gamma
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != n && *i != n + 1)
        .map(|(i, g)| g * (i as f64 - n as f64))
        .sum();
    gamma[n + 1] = c(1.0, 0.0) - rest_moment;
    gamma[n] = -rest_sum - gamma[n + 1];
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut all = true;
    for key in ["forward", "backward", "symmetric", "cresson"] {
        let s = Stencil::named(key, 0.1).unwrap();
        let cl = s.classify(1e-12);
        let defect = cl.defect.0.norm().max(cl.defect.1.norm());
        worst = worst.max(defect);
        all &= cl.in_o_tilde && defect <= 1e-12;
    }
    outcome(all, format!("max defect {worst:.1e}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let grid = Grid::unit(64).unwrap();
    let eps = grid.step();
    let pairs = [(c(0.5, -0.5), c(0.5, 0.5)), (c(1.0, 1.0), c(1.0, -2.0))];
    let mut worst: f64 = 0.0;
    for (r, s) in pairs {
        for _ in 0..100 {
            let f = random_real_path(&mut rng, grid);
            let g = random_real_path(&mut rng, grid);
            worst = worst.max(leibniz_residual(r, s, Companion::Conjugate, &f, &g).unwrap().relative());
        }
    }
    let (r, s) = pairs[0];
    let co = LeibnizCoefficients::new(r, s, r.conj(), s.conj(), eps).unwrap();
    let target = c(0.0, -0.5 * eps);
    let closed = -co.d1 == target && co.d2 == target && co.d3 == target && co.d4 == target;
    outcome(
        worst <= 1e-12 && closed,
        format!("max residual/scale {worst:.1e}, Cresson closed form exact: {closed}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (r, s, rp, sp) = (
            random_complex(&mut rng, 2.0),
            random_complex(&mut rng, 2.0),
            random_complex(&mut rng, 2.0),
            random_complex(&mut rng, 2.0),
        );
        let co = LeibnizCoefficients::new(r, s, rp, sp, 0.1).unwrap();
        // numeric determinant of the assembled system, not the closed form
        let det = co.system_matrix().determinant();
        let minor4 = (r * sp - s * rp).powi(4);
        worst = worst.max((det + minor4).norm() / minor4.norm());
    }
    outcome(worst <= 1e-9, format!("max |det + m^4| / |m^4| {worst:.1e}"))
}

/// Windowed operator by direct summation.
fn windowed(s: &Stencil, xs: &[DVector<C>], direction: Direction) -> Samples {
    let m = xs.len() as isize - 1;
    let n = s.half_width() as isize;
    (0..=m)
        .map(|k| {
            let mut acc = DVector::zeros(xs[0].len());
            for ell in -n..=n {
                let j = match direction {
                    Direction::Plus => k + ell,
                    Direction::Minus => k - ell,
                };
                if (0..=m).contains(&j) {
                    acc += &xs[j as usize] * s.coefficient(ell);
                }
            }
            acc
        })
        .collect()
}

fn cplx(m: &DMatrix<f64>) -> DMatrix<C> {
    m.map(|v| c(v, 0.0))
}

fn random_symmetric(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..=1.0));
    (&a + a.transpose()) * 0.5
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let d = rng.random_range(1..=3);
        let n = rng.random_range(1..=2usize);
        let m = rng.random_range(4 * n..=64);
        let grid = Grid::new(-0.5, 1.5, m).unwrap();
        let gamma = (0..2 * n + 1).map(|_| random_complex(&mut rng, 1.0)).collect();
        let s = Stencil::new(gamma, grid.step()).unwrap();

        let (p0, p1) = (random_symmetric(&mut rng, d), random_symmetric(&mut rng, d));
        let q0 = random_symmetric(&mut rng, d);
        let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..=1.0));
        let r0 = &a - a.transpose();
        let j1 = DVector::from_fn(d, |_, _| rng.random_range(-1.0..=1.0));
        let j2 = DVector::from_fn(d, |_, _| rng.random_range(-1.0..=1.0));
        let l = QuadraticLagrangian::zero(d)
            .with_p(move |t| &p0 + &p1 * t.sin())
            .with_constant_q(q0)
            .with_r(move |t| &r0 * (1.0 + t))
            .with_j1(move |t| &j1 * t.cos())
            .with_constant_j2(j2);

        let xs: Samples = (0..grid.len())
            .map(|_| DVector::from_fn(d, |_, _| random_complex(&mut rng, 1.0)))
            .collect();
        let x = Path::new(grid, xs.clone()).unwrap();
        let theta = del_residual_quadratic(&l, &s, &x).unwrap();

        // composition: dL/dx(x, Box x) + Box_-eps dL/dv(x, Box x)
        let co: Vec<_> = grid.nodes().map(|t| l.coefficients(t).unwrap()).collect();
        let bx = windowed(&s, &xs, Direction::Plus);
        let dv: Samples = (0..grid.len())
            .map(|k| cplx(&co[k].p) * &bx[k] - cplx(&co[k].r) * &xs[k] + co[k].j1.map(|v| c(v, 0.0)))
            .collect();
        let back = windowed(&s, &dv, Direction::Minus);
        let oracle: Samples = (0..grid.len())
            .map(|k| cplx(&co[k].q) * &xs[k] + cplx(&co[k].r) * &bx[k] + co[k].j2.map(|v| c(v, 0.0)) + &back[k])
            .collect();

        let scale = oracle.iter().map(|v| v.norm()).fold(1.0, f64::max);
        for k in 0..grid.len() {
            worst = worst.max(sup_diff(&theta[k], &oracle[k]) / scale);
        }
    }
    outcome(worst <= 1e-12, format!("max relative gap {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_on: f64 = 0.0;
    for _ in 0..50 {
        let k: f64 = rng.random_range(-3.0..=3.0);
        let p: f64 = rng.random_range(0.2..=5.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let q = -p.signum() * rng.random_range(0.2..=5.0);
        let omega = (-q / p).sqrt();
        let eps = 0.9 / (omega * (1.0 + 4.0 * k * k).sqrt());
        let s = Stencil::unit_circle_family(k, eps).unwrap();
        let rep = unit_modulus_roots(&oscillator_char_poly(&s, p, q).unwrap(), 1e-9).unwrap();
        for m in &rep.moduli {
            worst_on = worst_on.max((m - 1.0).abs());
        }
    }

    let mut off_ok = 0;
    let mut weakest: f64 = f64::INFINITY;
    for _ in 0..50 {
        let mut re = rng.random_range(-1.0..=2.0);
        while (re - 0.5f64).abs() < 0.05 {
            re = rng.random_range(-1.0..=2.0);
        }
        let r = c(re, rng.random_range(-2.0..=2.0));
        let mut best: f64 = 0.0;
        for eps in [0.01, 0.05, 0.1, 0.3, 0.6, 0.9] {
            let s = Stencil::two_point(r, c(1.0, 0.0) - r, eps).unwrap();
            let rep = unit_modulus_roots(&oscillator_char_poly(&s, 1.0, -1.0).unwrap(), 1e-9).unwrap();
            for m in &rep.moduli {
                best = best.max((m - 1.0).abs());
            }
        }
        weakest = weakest.min(best);
        if best > 1e-6 {
            off_ok += 1;
        }
    }
    outcome(
        worst_on <= 1e-9 && off_ok == 50,
        format!("family max |mod-1| {worst_on:.1e}; off-family {off_ok}/50 deviate, weakest {weakest:.1e}"),
    )
}

fn criterion_6() -> Outcome {
    let l = QuadraticLagrangian::harmonic(1.0, -1.0);
    let exact = |t: f64| t.sin() / 1.0f64.sin();
    let mut errors = Vec::new();
    let mut even_errors = Vec::new();
    for m in [50, 100, 200] {
        let grid = Grid::unit(m).unwrap();
        let s = Stencil::symmetric(grid.step()).unwrap();
        let sol = solve_bvp(
            &l,
            &s,
            grid,
            DVector::from_element(1, c(0.0, 0.0)),
            DVector::from_element(1, c(1.0, 0.0)),
        )
        .unwrap();
        let err_at = |k: usize| (sol.path.node(k)[0] - exact(grid.node(k))).norm();
        errors.push((0..=m).map(err_at).fold(0.0, f64::max));
        even_errors.push((0..=m).step_by(2).map(err_at).fold(0.0, f64::max));
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let even: Vec<f64> = even_errors.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    outcome(
        pass,
        format!(
            "errors {:.3e} {:.3e} {:.3e}, ratios {:.3} {:.3}; even nodes only: ratios {:.3} {:.3}",
            errors[0], errors[1], errors[2], ratios[0], ratios[1], even[0], even[1]
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = TestFunction::sin();
    let mut coherent = 0;
    let mut members = 0;
    for i in 0..100 {
        let n = rng.random_range(1..=2usize);
        let mut gamma: Vec<C> = (0..2 * n + 1).map(|_| random_complex(&mut rng, 1.0)).collect();
        match i % 3 {
            0 => project_consistent(&mut gamma, n),
            1 => {
                // annihilates constants but misses the first moment
                project_consistent(&mut gamma, n);
                gamma[n + 1] += c(0.3, -0.2);
                gamma[n] -= c(0.3, -0.2);
            }
            _ => {}
        }
        let s = Stencil::new(gamma, 1.0).unwrap();
        let member = s.classify(1e-9).in_o_tilde;
        members += member as usize;
        let sweep =
            operator_consistency_sweep(&s, &f, "sin", 0.0, 1.0, &[40, 80, 160, 320], 0.15, Direction::Plus).unwrap();
        let exact_decomposition = s.decompose(1e-9).residual <= 1e-9;
        if sweep.verdict.converges() == member && exact_decomposition == member {
            coherent += 1;
        }
    }
    outcome(coherent == 100, format!("{coherent}/100 coherent ({members} members)"))
}

fn criterion_8() -> Outcome {
    let l = QuadraticLagrangian::zero(1)
        .with_p(|t| DMatrix::from_element(1, 1, 2.0 + t.sin()))
        .with_p_rate(|t| DMatrix::from_element(1, 1, t.cos()))
        .with_q(|t| DMatrix::from_element(1, 1, t.cos()));
    let s = Stencil::cresson(1.0).unwrap();
    let x = TestFunction::sin();
    let rep = del_convergence_sweep(&l, &s, &x, "sin", 0.0, 1.0, &[40, 80, 160, 320], 0.1).unwrap();
    let monotone = rep.errors.windows(2).all(|w| w[1] < w[0]);
    let order = rep.order.unwrap_or(f64::NAN);
    let errs: Vec<String> = rep.errors.iter().map(|e| format!("{e:.3e}")).collect();
    outcome(
        monotone && order > 0.0,
        format!("errors {}, order {order:.3}", errs.join(" ")),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut stencils: Vec<(String, Stencil, bool)> = ["forward", "backward", "symmetric", "cresson"]
        .iter()
        .map(|k| (k.to_string(), Stencil::named(k, 1.0).unwrap(), true))
        .collect();
    for i in 0..6 {
        let n = 1 + i % 2;
        let mut gamma: Vec<C> = (0..2 * n + 1).map(|_| random_complex(&mut rng, 1.0)).collect();
        let member = i < 4;
        if member {
            project_consistent(&mut gamma, n);
        }
        stencils.push((format!("random{i}"), Stencil::new(gamma, 1.0).unwrap(), member));
    }
    let ms = [40, 80, 160, 320];
    let mut bound_holds = true;
    let mut shrinks = true;
    let mut detail = String::new();
    for (name, s, member) in &stencils {
        let reports: Vec<_> = ms
            .iter()
            .map(|&m| {
                let grid = Grid::unit(m).unwrap();
                kernel_bound_check(&s.with_step(grid.step()).unwrap(), grid, 0.1).unwrap()
            })
            .collect();
        bound_holds &= reports.iter().all(|r| r.holds);
        if *member {
            let sup_shrinks = reports.windows(2).all(|w| w[1].sup_g < 0.75 * w[0].sup_g);
            let bound_shrinks = reports.windows(2).all(|w| w[1].bound < 0.75 * w[0].bound);
            shrinks &= sup_shrinks && bound_shrinks;
            if name == "cresson" {
                let (first, last) = (&reports[0], &reports[ms.len() - 1]);
                detail = format!(
                    "cresson M=40..320: sup|G| {:.3} -> {:.3}, bound {:.3} -> {:.3}, integrated {:.2e} -> {:.2e}",
                    first.sup_g, last.sup_g, first.bound, last.bound, first.integrated, last.integrated
                );
            }
        }
    }
    outcome(
        bound_holds && shrinks,
        format!("bound holds: {bound_holds}; sup and bound -> 0: {shrinks}; {detail}"),
    )
}

fn criterion_10() -> Outcome {
    let runs: [&[&str]; 4] = [
        &["leibniz", "check", "--r", "1,1", "--s", "1,-2", "--seed", "42"],
        &[
            "del",
            "solve",
            "--lagrangian",
            "lq2d",
            "--stencil",
            "cresson",
            "--alpha",
            "0,1",
            "--beta",
            "1,0",
        ],
        &[
            "converge",
            "sweep",
            "--stencil",
            "cresson",
            "--lagrangian",
            "harmonic",
            "--fn",
            "sin",
        ],
        &["oscillator", "roots", "--k", "0.7", "--eps", "0.2"],
    ];
    let mut identical = 0;
    for args in runs {
        let once = || {
            let dir = tempfile::tempdir().unwrap();
            let out = Command::new(env!("CARGO_BIN_EXE_scaledel"))
                .args(args)
                .arg("--out-dir")
                .arg(dir.path())
                .env_remove("SCALEDEL_OUT_DIR")
                .output()
                .unwrap();
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        std::fs::read(e.path()).unwrap(),
                    )
                })
                .collect();
            files.sort();
            (out.status.code(), out.stdout, files)
        };
        let (a, b) = (once(), once());
        if a == b && a.0 == Some(0) && !a.2.is_empty() {
            identical += 1;
        }
    }
    outcome(
        identical == runs.len(),
        format!("{identical}/{} configs byte-identical", runs.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Option<f64>, fn() -> Outcome); 10] = [
        (1, "named-operator classification", Some(1.0), criterion_1),
        (2, "leibniz identity", Some(5.0), criterion_2),
        (3, "determinant identity", Some(1.0), criterion_3),
        (4, "theta formulation equivalence", Some(10.0), criterion_4),
        (5, "oscillator roots", Some(10.0), criterion_5),
        (6, "bvp solver order", Some(5.0), criterion_6),
        (7, "consistency coherence suite", Some(30.0), criterion_7),
        (8, "del to cel convergence", Some(10.0), criterion_8),
        (9, "kernel bound", Some(5.0), criterion_9),
        (10, "cli determinism", None, criterion_10),
    ];
    let mut unexpected = Vec::new();
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed < Duration::from_secs_f64(l));
        let pass = out.pass && in_time;
        let known_red = KNOWN_RED.contains(&id);
        let tag = if pass { "PASS" } else { "FAIL" };
        let note = if known_red && !pass { " [known red]" } else { "" };
        println!(
            "{tag} {id:>2} {name}: {} ({:.2}s{}){note}",
            out.detail,
            elapsed.as_secs_f64(),
            if in_time {
                String::new()
            } else {
                format!(", over {}s limit", limit.unwrap())
            }
        );
        if pass == known_red {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
