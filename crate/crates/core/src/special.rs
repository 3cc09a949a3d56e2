//! Special functions used across the crate: real and complex gamma,
//! digamma, Hurwitz zeta, Bessel functions of the first and second kind and
//! the sine integral.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// B_{2k} / (2k (2k-1)) for k = 1..=10
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

// B_{2k} for k = 1..=12
const BERNOULLI: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174_611.0 / 330.0,
    854_513.0 / 138.0,
    -236_364_091.0 / 2730.0,
];

fn stirling_tail_c(z: Complex64) -> Complex64 {
    let iz = z.inv();
    let iz2 = iz * iz;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut p = iz;
    for c in STIRLING.iter() {
        acc += p * *c;
        p *= iz2;
    }
    acc
}

/// A logarithm of Γ(z) for Re z > 0 (branch chosen by continuity from the
/// real axis up to multiples of 2πi in the imaginary part, which is all the
/// callers rely on: they exponentiate or take the real part).
pub fn ln_gamma_c(z: Complex64) -> Complex64 {
    assert!(z.re > 0.0, "ln_gamma_c needs Re z > 0");
    let mut z = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while z.norm() < 15.0 {
        shift += z.ln();
        z += 1.0;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + stirling_tail_c(z) - shift
}

/// Γ(z) for complex z, reflection for Re z < 1/2.
pub fn gamma_c(z: Complex64) -> Complex64 {
    if z.re >= 0.5 {
        ln_gamma_c(z).exp()
    } else {
        let s = (z * PI).sin();
        Complex64::new(PI, 0.0) / (s * ln_gamma_c(1.0 - z).exp())
    }
}

/// 1/Γ(z), an entire function: exactly zero at the non-positive integers.
pub fn rgamma_c(z: Complex64) -> Complex64 {
    if z.re >= 0.5 {
        (-ln_gamma_c(z)).exp()
    } else {
        if z.im == 0.0 && z.re == z.re.round() {
            return Complex64::new(0.0, 0.0);
        }
        (z * PI).sin() * ln_gamma_c(1.0 - z).exp() / PI
    }
}

/// ln Γ(x) for real x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma needs x > 0");
    libm::lgamma(x)
}

/// Γ(x) for real x, infinite at the poles.
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::INFINITY;
    }
    libm::tgamma(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Digamma ψ(x) for real x > 0.
pub fn digamma(x: f64) -> f64 {
    assert!(x > 0.0, "digamma needs x > 0");
    let mut x = x;
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let ix2 = 1.0 / (x * x);
    let mut p = ix2;
    let mut s = 0.0;
    for (k, b) in BERNOULLI.iter().take(8).enumerate() {
        s += b / (2.0 * (k as f64 + 1.0)) * p;
        p *= ix2;
    }
    acc + x.ln() - 0.5 / x - s
}

/// Hurwitz zeta ζ(s, a) for real s > 1 and a > 0, by Euler–Maclaurin.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1, a > 0");
    let n = 24usize;
    let mut sum = 0.0;
    for k in 0..n {
        sum += (k as f64 + a).powf(-s);
    }
    let x = n as f64 + a;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // Σ B_{2j}/(2j)! · s(s+1)…(s+2j−2) · x^{−s−2j+1}
    let mut poch = s; // s(s+1)…(s+2j−2)
    let mut fact = 2.0; // (2j)!
    let mut xp = x.powf(-s - 1.0);
    for (j, b) in BERNOULLI.iter().enumerate() {
        let term = b / fact * poch * xp;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        let j2 = 2.0 * (j as f64 + 1.0);
        poch *= (s + j2 - 1.0) * (s + j2);
        fact *= (j2 + 1.0) * (j2 + 2.0);
        xp /= x * x;
    }
    sum
}

/// Riemann zeta for real s > 1.
pub fn zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}

pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

pub fn bessel_j1(x: f64) -> f64 {
    libm::j1(x)
}

pub fn bessel_jn(n: u32, x: f64) -> f64 {
    libm::jn(n as i32, x)
}

/// Y₀(x) for x > 0.
pub fn bessel_y0(x: f64) -> f64 {
    assert!(x > 0.0, "bessel_y0 needs x > 0");
    libm::y0(x)
}

/// Sine integral Si(x) = ∫₀^x sin t / t dt.
pub fn si(x: f64) -> f64 {
    if x < 0.0 {
        return -si(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x <= 40.0 {
        let sinc = |t: f64| if t == 0.0 { 1.0 } else { t.sin() / t };
        let mut breaks = vec![0.0];
        let mut b = PI;
        while b < x {
            breaks.push(b);
            b += PI;
        }
        breaks.push(x);
        return crate::quad::integrate_breaks(sinc, &breaks, 1e-16, 1e-15).value;
    }
    // auxiliary functions f, g via their asymptotic series
    let ix2 = 1.0 / (x * x);
    let mut f = 0.0;
    let mut g = 0.0;
    let mut tf = 1.0;
    let mut tg = 1.0;
    for k in 0..30 {
        f += tf;
        g += tg;
        let k2 = 2.0 * k as f64;
        tf *= -(k2 + 1.0) * (k2 + 2.0) * ix2;
        tg *= -(k2 + 2.0) * (k2 + 3.0) * ix2;
        if tf.abs() < 1e-18 && tg.abs() < 1e-18 {
            break;
        }
    }
    let f = f / x;
    let g = g * ix2;
    0.5 * PI - f * x.cos() - g * x.sin()
}

/// cosh a − cosh b as 2 sinh((a+b)/2) sinh((a−b)/2), which keeps relative
/// accuracy when a ≈ b.
pub fn cosh_diff(a: f64, b: f64) -> f64 {
    2.0 * (0.5 * (a + b)).sinh() * (0.5 * (a - b)).sinh()
}
