#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (v, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return v;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss–Kronrod integral of `f` over [a, b] to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    adapt(&f, a, b, tol, 50)
}

/// Brute-force convolution of the Lorentzian γ/(Δ − iγ) with a unit-area
/// Gaussian of standard deviation σ, returned as (re, im).
pub fn voigt_by_convolution(delta: f64, gamma: f64, sigma: f64) -> (f64, f64) {
    // Integrate in units of σ; the Gaussian weight is below 1e-300 beyond 38σ.
    let weight = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let lorentz = |u: f64| {
        let d = delta - sigma * u;
        let den = d * d + gamma * gamma;
        (gamma * d / den, gamma * gamma / den)
    };
    // Split at the Lorentzian centre so its peak sits on a panel edge.
    let centre = (delta / sigma).clamp(-38.0, 38.0);
    let tol = 1e-15;
    let re = integrate(|u| weight(u) * lorentz(u).0, -38.0, centre, tol)
        + integrate(|u| weight(u) * lorentz(u).0, centre, 38.0, tol);
    let im = integrate(|u| weight(u) * lorentz(u).1, -38.0, centre, tol)
        + integrate(|u| weight(u) * lorentz(u).1, centre, 38.0, tol);
    (re, im)
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_xpmsim")
}

/// Runs the CLI with `XPMSIM_THREADS` set when `threads` is given.
pub fn xpmsim(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("XPMSIM_THREADS", n.to_string()),
        None => cmd.env_remove("XPMSIM_THREADS"),
    };
    cmd.output().expect("xpmsim runs")
}

pub fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
