//! Numerical quadrature: adaptive Gauss–Kronrod, tanh-sinh and fixed
//! Gauss–Legendre rules.

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
}

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

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    let rk = rk * h;
    let rg = rg * h;
    (rk, (rk - rg).abs())
}

/// Adaptive 15-point Gauss–Kronrod on `[a, b]`. Stops when the summed error
/// estimate falls below `max(abs_tol, rel_tol * |I|)` or after `max_intervals`
/// bisections.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Quad {
    integrate_with_limit(&f, a, b, abs_tol, rel_tol, 4000)
}

pub fn integrate_with_limit<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Quad {
    if a == b {
        return Quad { value: 0.0, error: 0.0 };
    }
    let (v, e) = gk15(f, a, b);
    let mut pieces: Vec<(f64, f64, f64, f64)> = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) && pieces.len() < max_intervals {
        // bisect the worst piece
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0usize, -1.0f64), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (pa, pb, pv, pe) = pieces.swap_remove(worst);
        let m = 0.5 * (pa + pb);
        if m <= pa.min(pb) || m >= pa.max(pb) {
            pieces.push((pa, pb, pv, 0.0));
            continue;
        }
        let (v1, e1) = gk15(f, pa, m);
        let (v2, e2) = gk15(f, m, pb);
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        pieces.push((pa, m, v1, e1));
        pieces.push((m, pb, v2, e2));
    }
    // re-sum to shed accumulated rounding in the running totals
    let value = pieces.iter().map(|p| p.2).sum();
    let error = pieces.iter().map(|p| p.3).sum();
    Quad { value, error }
}

/// Integrates over consecutive breakpoints, summing the pieces.
pub fn integrate_breaks<F: Fn(f64) -> f64>(f: F, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> Quad {
    let mut out = Quad { value: 0.0, error: 0.0 };
    for w in breaks.windows(2) {
        let q = integrate_with_limit(&f, w[0], w[1], abs_tol, rel_tol, 4000);
        out.value += q.value;
        out.error += q.error;
    }
    out
}

/// Tanh-sinh (double exponential) quadrature on `[a, b]`, robust to
/// integrable endpoint singularities. `f` receives `(x, distance_to_a,
/// distance_to_b)` so that singular factors can be formed without cancellation.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Quad {
    let half = 0.5 * (b - a);
    let eval = |t: f64| -> f64 {
        let s = std::f64::consts::FRAC_PI_2 * t.sinh();
        let ch = s.cosh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (ch * ch);
        // 1 - tanh(s) and 1 + tanh(s) formed stably
        let e = (-2.0 * s.abs()).exp();
        let small = 2.0 * e / (1.0 + e);
        let (da, db) = if s >= 0.0 { (half * (2.0 - small), half * small) } else { (half * small, half * (2.0 - small)) };
        if da <= 0.0 || db <= 0.0 {
            return 0.0;
        }
        let x = if s >= 0.0 { b - db } else { a + da };
        let v = f(x, da, db);
        if v.is_finite() {
            v * w * half
        } else {
            0.0
        }
    };
    let tmax = 6.5;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= tmax {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut prev = sum * h;
    let mut error = f64::INFINITY;
    for _level in 0..12 {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1;
        while (k as f64) * h <= tmax {
            let t = k as f64 * h;
            add += eval(t) + eval(-t);
            k += 2;
        }
        sum += add;
        let cur = sum * h;
        error = (cur - prev).abs();
        prev = cur;
        if error <= tol * cur.abs().max(1e-300) || error < 1e-300 {
            break;
        }
    }
    Quad { value: prev, error }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` via Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
