//! Adaptive 1-D quadrature (Gauss–Kronrod 7/15) used for all geometry
//! integrals. The geometry layer is required to be far more accurate than
//! the PDE discretization, so the default relative tolerance is 1e-12.

/// Abscissae of the 15-point Kronrod rule on [-1, 1] (nonnegative half).
#[allow(clippy::excessive_precision)] // verbatim reference table
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_17,
    0.207_784_955_007_898_47,
    0.0,
];

/// Weights of the 15-point Kronrod rule.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Weights of the embedded 7-point Gauss rule (for XGK[1], XGK[3], XGK[5], XGK[7]).
#[allow(clippy::excessive_precision)] // verbatim reference table
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_67,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let (fl, fr) = if x == 0.0 {
            let v = f(c);
            (v, 0.0)
        } else {
            (f(c - h * x), f(c + h * x))
        };
        let s = fl + fr;
        kronrod += wk * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (h * kronrod, h * (kronrod - gauss).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol || depth >= 48 {
        return val;
    }
    let c = 0.5 * (a + b);
    adapt(f, a, c, 0.5 * tol, depth + 1) + adapt(f, c, b, 0.5 * tol, depth + 1)
}

/// Integrate `f` over `[a, b]` with target relative accuracy `rel_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (coarse, _) = gk15(&f, a, b);
    let scale = coarse.abs().max(1e-300);
    adapt(&f, a, b, rel_tol * scale, 0)
}

/// Integrate with the default geometry tolerance (1e-12 relative).
pub fn integrate_default<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    integrate(f, a, b, 1e-12)
}
