//! wasm-bindgen entry points for the static demo page. Every function
//! returns a JSON string; errors come back as the library's message.

use nalgebra::DVector;
use serde_json::json;
use wasm_bindgen::prelude::*;

use scaledel::convergence::operator_consistency_sweep;
use scaledel::oscillator::{oscillator_char_poly, unit_circle_threshold, unit_modulus_roots};
use scaledel::{lagrangian, solve_bvp, Complex64, Direction, Grid, Stencil, TestFunction};

fn msg(e: scaledel::Error) -> String {
    e.to_string()
}

/// Root moduli of the oscillator recurrence for family member `k`, sampled
/// at `samples` steps in `(0, eps_max]`.
#[wasm_bindgen]
pub fn root_moduli(k: f64, p: f64, q: f64, eps_max: f64, samples: usize) -> Result<String, String> {
    if !(eps_max > 0.0) || samples == 0 {
        return Err("need eps_max > 0 and at least one sample".into());
    }
    let mut eps = Vec::with_capacity(samples);
    let mut moduli = Vec::with_capacity(samples);
    for i in 1..=samples {
        let e = eps_max * i as f64 / samples as f64;
        let s = Stencil::unit_circle_family(k, e).map_err(msg)?;
        let rep = unit_modulus_roots(&oscillator_char_poly(&s, p, q).map_err(msg)?, 1e-9).map_err(msg)?;
        eps.push(e);
        moduli.push(rep.moduli);
    }
    let threshold = (p * q < 0.0).then(|| unit_circle_threshold(k, p, q));
    Ok(json!({ "eps": eps, "moduli": moduli, "threshold": threshold }).to_string())
}

/// Solution of the harmonic boundary-value problem `x(a) = alpha`, `x(b) = beta`
/// on `[0, 1]`, real part per node.
#[wasm_bindgen]
pub fn bvp_curve(stencil: &str, p: f64, q: f64, m: usize, alpha: f64, beta: f64) -> Result<String, String> {
    let grid = Grid::unit(m).map_err(msg)?;
    let s = Stencil::named(stencil, grid.step()).map_err(msg)?;
    let l = lagrangian::preset("harmonic", p, q).map_err(msg)?;
    let boundary = |v: f64| DVector::from_element(1, Complex64::new(v, 0.0));
    let sol = solve_bvp(&l, &s, grid, boundary(alpha), boundary(beta)).map_err(msg)?;
    let t: Vec<f64> = grid.nodes().collect();
    let x: Vec<f64> = (0..grid.len()).map(|k| sol.path.node(k)[0].re).collect();
    Ok(json!({ "t": t, "x": x, "residual": sol.residual, "condition": sol.condition }).to_string())
}

/// Operator consistency sweep `max |Box x - x'|` over `[0.2, 0.8]` for `M = m0, 2 m0, ...`.
#[wasm_bindgen]
pub fn consistency_sweep(stencil: &str, function: &str, m0: usize, levels: usize) -> Result<String, String> {
    if m0 == 0 || levels < 2 {
        return Err("need M0 > 0 and at least two levels".into());
    }
    let s = Stencil::named(stencil, 1.0).map_err(msg)?;
    let f = TestFunction::named(function).map_err(msg)?;
    let ms: Vec<usize> = (0..levels).map(|i| m0 << i).collect();
    let rep = operator_consistency_sweep(&s, &f, function, 0.0, 1.0, &ms, 0.2, Direction::Plus).map_err(msg)?;
    serde_json::to_string(&rep).map_err(|e| e.to_string())
}
