//! Thin wrappers mapping each subcommand onto library calls.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use scaledel::convergence::{del_convergence_sweep, kernel_bound_check, operator_consistency_sweep};
use scaledel::leibniz::{leibniz_residual, Companion, LeibnizCoefficients};
use scaledel::oscillator::{oscillation_inequalities, oscillator_char_poly, unit_modulus_roots};
use scaledel::{
    del_residual_quadratic, lagrangian, solve_bvp, Complex64, ConstantLagrangianSpec, Grid, Path, QuadraticLagrangian,
    Stencil, TestFunction, Trajectory,
};

use crate::config::*;
use crate::output::{Cell, CliError, Output, Table};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InlineStencil {
    gamma: Vec<[f64; 2]>,
    #[serde(rename = "N", default)]
    n: Option<usize>,
}

/// Key or inline JSON weights, scaled to `eps`.
pub fn parse_stencil(spec: &str, eps: f64) -> Result<Stencil, CliError> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        let inline: InlineStencil =
            serde_json::from_str(spec).map_err(|e| CliError::Config(format!("stencil JSON: {e}")))?;
        if let Some(n) = inline.n {
            if inline.gamma.len() != 2 * n + 1 {
                return Err(CliError::Config(format!(
                    "stencil JSON: N = {n} needs {} weights, got {}",
                    2 * n + 1,
                    inline.gamma.len()
                )));
            }
        }
        let gamma = inline.gamma.iter().map(|g| Complex64::new(g[0], g[1])).collect();
        Ok(Stencil::new(gamma, eps)?)
    } else {
        Ok(Stencil::named(spec, eps)?)
    }
}

pub fn parse_lagrangian(spec: &str, p: f64, q: f64) -> Result<QuadraticLagrangian, CliError> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        let parsed: ConstantLagrangianSpec =
            serde_json::from_str(spec).map_err(|e| CliError::Config(format!("lagrangian JSON: {e}")))?;
        Ok(parsed.build()?)
    } else {
        Ok(lagrangian::preset(spec, p, q)?)
    }
}

/// `re,im` or a bare real.
pub fn parse_complex(text: &str) -> Result<Complex64, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::Config(format!("cannot parse '{text}' as re,im")))
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(CliError::Config(format!("cannot parse '{text}' as re,im"))),
    }
}

fn parse_vector(text: &str) -> Result<DVector<Complex64>, CliError> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map(|v| Complex64::new(v, 0.0))
                .map_err(|_| CliError::Config(format!("cannot parse '{text}' as a real vector")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DVector::from_vec(values))
}

fn grid(g: &GridArgs) -> Result<Grid, CliError> {
    Ok(Grid::new(g.a, g.b, g.m)?)
}

fn complex_json(z: Complex64) -> Value {
    // adding zero turns -0.0 into 0.0
    json!([z.re + 0.0, z.im + 0.0])
}

fn stencil_json(s: &Stencil) -> Value {
    Value::Array(s.gammas().iter().map(|g| complex_json(*g)).collect())
}

/// Test function lifted to `dim` components.
fn trajectory(key: &str, dim: usize) -> Result<Box<dyn Trajectory>, CliError> {
    let f = TestFunction::named(key)?;
    Ok(if dim == 1 {
        Box::new(f)
    } else {
        Box::new(f.replicated(dim))
    })
}

pub fn run(command: &Command, seed: u64) -> Result<Output, CliError> {
    match command {
        Command::Op { op } => match op {
            OpCommand::Classify(args) => classify(args),
            OpCommand::Apply(args) => apply(args),
            OpCommand::Decompose(args) => decompose(args),
        },
        Command::Leibniz {
            op: LeibnizCommand::Check(args),
        } => leibniz(args, seed),
        Command::Del { op } => match op {
            DelCommand::Residual(args) => del_residual(args),
            DelCommand::Solve(args) => del_solve(args),
        },
        Command::Oscillator {
            op: OscillatorCommand::Roots(args),
        } => roots(args),
        Command::Converge { op } => match op {
            ConvergeCommand::Sweep(args) => sweep(args),
            ConvergeCommand::Kernel(args) => kernel(args),
        },
    }
}

fn classify(args: &ClassifyArgs) -> Result<Output, CliError> {
    let s = parse_stencil(&args.stencil.stencil, args.eps)?;
    let c = s.classify(args.tol);
    Ok(Output::summary(
        "op_classify",
        json!({
            "stencil": stencil_json(&s),
            "in_O_tilde": c.in_o_tilde,
            "defect": [complex_json(c.defect.0), complex_json(c.defect.1)],
        }),
    ))
}

fn decompose(args: &ClassifyArgs) -> Result<Output, CliError> {
    let s = parse_stencil(&args.stencil.stencil, args.eps)?;
    let d = s.decompose(args.tol);
    Ok(Output::summary(
        "op_decompose",
        json!({
            "stencil": stencil_json(&s),
            "k": d.k.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
            "residual": d.residual,
            "exact": d.is_exact(args.tol),
        }),
    ))
}

fn apply(args: &ApplyArgs) -> Result<Output, CliError> {
    let g = grid(&args.grid)?;
    let s = parse_stencil(&args.stencil.stencil, g.step())?;
    let f = TestFunction::named(&args.function)?;
    let x = f.sample(g);
    let bx = s.apply(&x, args.direction.into())?;
    let rows = g
        .nodes()
        .enumerate()
        .map(|(k, t)| {
            vec![
                Cell::Float(t),
                Cell::Float(f.value(t)),
                Cell::Float(bx[k][0].re),
                Cell::Float(bx[k][0].im),
                Cell::Float(f.derivative(t)),
            ]
        })
        .collect();
    Ok(Output {
        stem: "op_apply",
        summary: json!({
            "stencil": stencil_json(&s),
            "fn": f.name(),
            "M": g.subdivisions(),
            "direction": args.direction,
        }),
        table: Some(Table::new(&["t", "x", "box_re", "box_im", "dx"], rows)),
    })
}

/// Real random node values in `[-1, 1]`.
fn random_path(rng: &mut ChaCha8Rng, g: Grid) -> Path {
    let xs: Vec<Complex64> = (0..g.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..=1.0), 0.0))
        .collect();
    Path::from_scalars(g, &xs).expect("one value per node")
}

fn leibniz(args: &LeibnizArgs, seed: u64) -> Result<Output, CliError> {
    let r = parse_complex(&args.r)?;
    let s = parse_complex(&args.s)?;
    let g = Grid::unit(args.m)?;
    let companion = match (&args.rp, &args.sp) {
        (Some(rp), Some(sp)) => Companion::Explicit {
            rp: parse_complex(rp)?,
            sp: parse_complex(sp)?,
        },
        _ => Companion::Conjugate,
    };
    let (rp, sp) = match companion {
        Companion::Explicit { rp, sp } => (rp, sp),
        Companion::Conjugate => (r.conj(), s.conj()),
    };
    let coeffs = LeibnizCoefficients::new(r, s, rp, sp, g.step())?;
    let d: Vec<Value> = [coeffs.d1, coeffs.d2, coeffs.d3, coeffs.d4]
        .into_iter()
        .map(complex_json)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(args.trials);
    let mut worst: f64 = 0.0;
    for trial in 0..args.trials {
        let f = random_path(&mut rng, g);
        let h = random_path(&mut rng, g);
        let res = leibniz_residual(r, s, companion, &f, &h)?;
        worst = worst.max(res.relative());
        rows.push(vec![
            Cell::Int(trial as i64),
            Cell::Float(res.max_abs),
            Cell::Float(res.scale),
            Cell::Float(res.relative()),
        ]);
    }
    Ok(Output {
        stem: "leibniz_check",
        summary: json!({
            "r": complex_json(r),
            "s": complex_json(s),
            "rp": complex_json(rp),
            "sp": complex_json(sp),
            "eps": g.step(),
            "coefficients": { "d": d, "det": complex_json(coeffs.det()) },
            "trials": args.trials,
            "residual": worst,
            "pass": worst <= args.tol,
        }),
        table: Some(Table::new(&["trial", "max_abs", "scale", "relative"], rows)),
    })
}

fn component_header(dim: usize, fields: &[&str]) -> Vec<String> {
    (0..dim)
        .flat_map(|j| fields.iter().map(move |f| format!("{f}{j}")))
        .collect()
}

fn del_residual(args: &DelResidualArgs) -> Result<Output, CliError> {
    let g = grid(&args.grid)?;
    let s = parse_stencil(&args.stencil.stencil, g.step())?;
    let l = parse_lagrangian(&args.lagrangian.lagrangian, args.lagrangian.p, args.lagrangian.q)?;
    let d = l.dim();
    let x = trajectory(&args.function, d)?;
    let path = x.sample(g);
    let theta = del_residual_quadratic(&l, &s, &path)?;
    let mut header = vec!["t".to_string()];
    header.extend(component_header(d, &["x", "theta_re", "theta_im"]));
    let rows = g
        .nodes()
        .enumerate()
        .map(|(k, t)| {
            let mut row = vec![Cell::Float(t)];
            for j in 0..d {
                row.push(Cell::Float(path.node(k)[j].re));
                row.push(Cell::Float(theta[k][j].re));
                row.push(Cell::Float(theta[k][j].im));
            }
            row
        })
        .collect();
    // outside the safety interval the window truncates the stencil
    let safe = g.require_safety_interval(s.half_width())?;
    let safety_max = theta[safe]
        .iter()
        .flat_map(|v| v.iter().map(|z| z.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    Ok(Output {
        stem: "del_residual",
        summary: json!({
            "stencil": stencil_json(&s),
            "fn": args.function,
            "M": g.subdivisions(),
            "dim": d,
            "max_safety_residual": safety_max,
        }),
        table: Some(Table::from_header(header, rows)),
    })
}

fn del_solve(args: &DelSolveArgs) -> Result<Output, CliError> {
    let g = grid(&args.grid)?;
    let s = parse_stencil(&args.stencil.stencil, g.step())?;
    let l = parse_lagrangian(&args.lagrangian.lagrangian, args.lagrangian.p, args.lagrangian.q)?;
    let d = l.dim();
    let sol = solve_bvp(&l, &s, g, parse_vector(&args.alpha)?, parse_vector(&args.beta)?)?;
    let mut header = vec!["t".to_string()];
    header.extend(component_header(d, &["x_re", "x_im", "theta_re", "theta_im"]));
    let rows = g
        .nodes()
        .enumerate()
        .map(|(k, t)| {
            let mut row = vec![Cell::Float(t)];
            for j in 0..d {
                let x = sol.path.node(k)[j];
                row.extend([Cell::Float(x.re), Cell::Float(x.im)]);
                row.extend([Cell::Float(sol.theta[k][j].re), Cell::Float(sol.theta[k][j].im)]);
            }
            row
        })
        .collect();
    Ok(Output {
        stem: "del_solve",
        summary: json!({
            "stencil": stencil_json(&s),
            "M": g.subdivisions(),
            "dim": d,
            "residual": sol.residual,
            "scale": sol.scale,
            "condition": sol.condition,
        }),
        table: Some(Table::from_header(header, rows)),
    })
}

fn roots(args: &RootsArgs) -> Result<Output, CliError> {
    let s = match args.k {
        Some(k) => Stencil::unit_circle_family(k, args.eps)?,
        None => parse_stencil(&args.stencil.stencil, args.eps)?,
    };
    let cp = oscillator_char_poly(&s, args.p, args.q)?;
    let rep = unit_modulus_roots(&cp, args.tol)?;
    let [gm, g0, g1] = cp.gamma;
    let test = oscillation_inequalities(gm, g0, g1);
    // infinite moduli (roots lost with a vanishing leading term) print as null
    Ok(Output::summary(
        "oscillator_roots",
        json!({
            "stencil": stencil_json(&s),
            "p": args.p,
            "q": args.q,
            "eps": args.eps,
            "quartic": cp.quartic.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
            "reduced": cp.reduced.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
            "roots": rep.roots.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
            "moduli": rep.moduli,
            "all_unit": rep.all_unit,
            "degenerate": rep.degenerate,
            "inequalities": test,
        }),
    ))
}

fn sweep(args: &SweepArgs) -> Result<Output, CliError> {
    let delta = args.delta.unwrap_or((args.b - args.a) / 10.0);
    let s = parse_stencil(&args.stencil.stencil, 1.0)?;
    let report = match &args.lagrangian {
        Some(spec) => {
            let l = parse_lagrangian(spec, args.p, args.q)?;
            let x = trajectory(&args.function, l.dim())?;
            del_convergence_sweep(&l, &s, x.as_ref(), &args.function, args.a, args.b, &args.m, delta)?
        }
        None => {
            let f = TestFunction::named(&args.function)?;
            operator_consistency_sweep(
                &s,
                &f,
                &args.function,
                args.a,
                args.b,
                &args.m,
                delta,
                args.direction.into(),
            )?
        }
    };
    let rows = report
        .m
        .iter()
        .zip(&report.eps)
        .zip(&report.errors)
        .map(|((&m, &eps), &err)| vec![Cell::Int(m as i64), Cell::Float(eps), Cell::Float(err)])
        .collect();
    Ok(Output {
        stem: "converge_sweep",
        summary: serde_json::to_value(&report).expect("report serializes"),
        table: Some(Table::new(&["M", "eps", "error"], rows)),
    })
}

fn kernel(args: &KernelArgs) -> Result<Output, CliError> {
    let g = grid(&args.grid)?;
    let s = parse_stencil(&args.stencil.stencil, g.step())?;
    let delta = args.delta.unwrap_or((g.b() - g.a()) / 10.0);
    let rep = kernel_bound_check(&s, g, delta)?;
    Ok(Output::summary(
        "converge_kernel",
        json!({
            "stencil": stencil_json(&s),
            "M": g.subdivisions(),
            "delta": delta,
            "report": rep,
        }),
    ))
}
