//! Legendre polynomials, conical functions and the Selberg–Harish-Chandra
//! transforms of normalized annulus indicators on S² and H, with their Hilb
//! approximations, asymptotic main terms, the convolution-product law and the
//! smooth test function h = h₁h₂h₃.

use crate::error::{domain, Result};
use crate::fmt::f17;
use crate::quad::{integrate, integrate_breaks, Quad};
use crate::special::{bessel_j0, gamma_c, ln_gamma_c, rgamma_c};
use crate::sphere::{angle, annulus_volume, sample_sphere_point, RandomSource, Space};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

/// Legendre polynomial P_m(x) on [−1, 1].
pub fn legendre_p(m: u32, x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return domain(format!("legendre_p needs |x| <= 1, got {x}"));
    }
    Ok(legendre_triple(m, x).1)
}

/// (P_{m−1}(x), P_m(x), P_{m+1}(x)) with P_{−1} = 0.
fn legendre_triple(m: u32, x: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..m {
        let k = k as f64;
        let next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    let m = m as f64;
    (prev, cur, ((2.0 * m + 1.0) * x * cur - m * prev) / (m + 1.0))
}

fn legendre_unchecked(m: u32, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..m {
        let k = k as f64;
        let next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Largest |t| accepted by [`conical_p`].
pub const CONICAL_T_CAP: f64 = 1e3;

fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

/// Breakpoints in v ∈ [0, 1] for u = ρ(1 − v²) at the zeros spacing π/ω of
/// cos(ωu), so each piece holds at most half an oscillation.
fn phase_breaks(omega_rho: f64) -> Vec<f64> {
    let k = (omega_rho.abs() / PI).floor().min(200_000.0) as usize;
    let scale = if k == 0 { 1.0 } else { PI / omega_rho.abs() };
    let mut b: Vec<f64> = (0..=k).map(|i| (i as f64 * scale).sqrt().min(1.0)).collect();
    if *b.last().unwrap() < 1.0 {
        b.push(1.0);
    }
    b.dedup();
    b
}

/// P_{−1/2+it}(y) for y ≥ 1.
pub fn conical_p(t: f64, y: f64) -> Result<f64> {
    if !(y >= 1.0) {
        return domain(format!("conical_p needs y >= 1, got {y}"));
    }
    if !(t.abs() <= CONICAL_T_CAP) {
        return domain(format!("conical_p needs |t| <= {CONICAL_T_CAP}, got {t}"));
    }
    Ok(conical_p_rho(t, y.acosh()).value)
}

/// P_{−1/2+it}(cosh ρ) by the Mehler–Dirichlet integral
/// (√2/π) ∫₀^ρ cos(tu) / √(cosh ρ − cosh u) du, substituted u = ρ(1 − v²)
/// so the integrand is smooth.
pub fn conical_p_rho(t: f64, rho: f64) -> Quad {
    if rho == 0.0 {
        return Quad { value: 1.0, error: 0.0 };
    }
    let g = |v: f64| {
        let x = 0.5 * rho * v * v;
        let u = rho - rho * v * v;
        2.0 * rho * (t * u).cos() / (rho * (0.5 * (rho + u)).sinh() * sinhc(x)).sqrt()
    };
    let q = integrate_breaks(g, &phase_breaks(t * rho), 1e-14, 1e-14);
    Quad { value: SQRT_2 / PI * q.value, error: SQRT_2 / PI * q.error }
}

/// Pointwise Hilb approximation √(θ/sin θ) J₀(θ(m + 1/2)) to P_m(cos θ).
pub fn hilb_legendre(m: u32, theta: f64) -> f64 {
    let s = if theta == 0.0 { 1.0 } else { theta / theta.sin() };
    s.sqrt() * bessel_j0(theta * (m as f64 + 0.5))
}

/// Pointwise Hilb approximation √(ρ/sinh ρ) J₀(ρt) to P_{−1/2+it}(cosh ρ).
pub fn hilb_conical(t: f64, rho: f64) -> f64 {
    let s = if rho == 0.0 { 1.0 } else { rho / rho.sinh() };
    s.sqrt() * bessel_j0(rho * t)
}

/// Largest |P_m(cos θ) − hilb_legendre(m, θ)| / θ² over the grid points
/// θ ∈ `thetas`, 0 ≤ m ≤ min(m_max, 1/θ).
pub fn hilb_constant_sphere(thetas: &[f64], m_max: u32) -> f64 {
    thetas
        .par_iter()
        .map(|&th| {
            let top = m_max.min((1.0 / th).floor() as u32);
            (0..=top)
                .map(|m| (legendre_unchecked(m, th.cos()) - hilb_legendre(m, th)).abs() / (th * th))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

fn check_annulus(space: Space, r: f64, big_r: f64) -> Result<f64> {
    annulus_volume(space, r, big_r)
}

/// h̃_{r,R}(m) = (2π/σ(A)) ∫_r^R P_m(cos θ) sin θ dθ in closed form.
pub fn shc_sphere(r: f64, big_r: f64, m: u32) -> Result<f64> {
    let sigma = check_annulus(Space::Sphere, r, big_r)?;
    let (a, b) = (big_r.cos(), r.cos());
    let integral = if m == 0 {
        b - a
    } else {
        let anti = |x: f64| {
            let (pm1, _, pp1) = legendre_triple(m, x);
            (pp1 - pm1) / (2.0 * m as f64 + 1.0)
        };
        anti(b) - anti(a)
    };
    Ok(2.0 * PI * integral / sigma)
}

/// h̃_{r,R}(m) for m = 0..=lmax in one recurrence pass per endpoint.
pub fn shc_sphere_all(r: f64, big_r: f64, lmax: u32) -> Result<Vec<f64>> {
    let sigma = check_annulus(Space::Sphere, r, big_r)?;
    let c = 2.0 * PI / sigma;
    let (a, b) = (big_r.cos(), r.cos());
    let mut out = Vec::with_capacity(lmax as usize + 1);
    out.push(c * (b - a));
    // P_{m−1}, P_m at both endpoints
    let (mut pa0, mut pa1, mut pb0, mut pb1) = (1.0, a, 1.0, b);
    for m in 1..=lmax {
        let k = m as f64;
        let pa2 = ((2.0 * k + 1.0) * a * pa1 - k * pa0) / (k + 1.0);
        let pb2 = ((2.0 * k + 1.0) * b * pb1 - k * pb0) / (k + 1.0);
        out.push(c * ((pb2 - pb0) - (pa2 - pa0)) / (2.0 * k + 1.0));
        (pa0, pa1, pb0, pb1) = (pa1, pa2, pb1, pb2);
    }
    Ok(out)
}

/// h̃_{r,R}(m) by adaptive quadrature in θ; the oracle for [`shc_sphere`].
pub fn shc_sphere_quadrature(r: f64, big_r: f64, m: u32) -> Result<Quad> {
    let sigma = check_annulus(Space::Sphere, r, big_r)?;
    let pieces = ((m as f64 + 0.5) * (big_r - r) / PI).ceil().max(1.0) as usize;
    let breaks: Vec<f64> = (0..=pieces).map(|i| r + (big_r - r) * i as f64 / pieces as f64).collect();
    let q = integrate_breaks(|th| legendre_unchecked(m, th.cos()) * th.sin(), &breaks, 1e-15, 1e-14);
    Ok(Quad { value: 2.0 * PI * q.value / sigma, error: 2.0 * PI * q.error / sigma })
}

/// Spectral parameter of the hyperbolic transform: real t, or t = is with
/// |s| ≤ 1/2 (the exceptional segment, containing the normalization point i/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spectral {
    Real(f64),
    Imaginary(f64),
}

impl Spectral {
    pub const HALF_I: Spectral = Spectral::Imaginary(0.5);

    fn cos_tu(&self, u: f64) -> f64 {
        match *self {
            Spectral::Real(t) => (t * u).cos(),
            Spectral::Imaginary(s) => (s * u).cosh(),
        }
    }

    fn frequency(&self) -> f64 {
        match *self {
            Spectral::Real(t) => t,
            Spectral::Imaginary(_) => 0.0,
        }
    }
}

/// ∫₀^ρ P_{−1/2+it}(cosh s) sinh s ds = (2√2/π) ∫₀^ρ cos(tu) √(cosh ρ − cosh u) du.
fn conical_antiderivative(t: Spectral, rho: f64) -> Quad {
    if rho == 0.0 {
        return Quad { value: 0.0, error: 0.0 };
    }
    let g = |v: f64| {
        let x = 0.5 * rho * v * v;
        let u = rho - rho * v * v;
        let root = v * (rho * (0.5 * (rho + u)).sinh() * sinhc(x)).sqrt();
        t.cos_tu(u) * root * 2.0 * rho * v
    };
    let scale = rho.cosh();
    let q = integrate_breaks(g, &phase_breaks(t.frequency() * rho), 1e-15 * scale, 1e-14);
    let c = 2.0 * SQRT_2 / PI;
    Quad { value: c * q.value, error: c * q.error }
}

/// h_{r,R}(t) with its quadrature error estimate.
pub fn shc_hyperbolic_quad(r: f64, big_r: f64, t: Spectral) -> Result<Quad> {
    let mu = check_annulus(Space::Hyperbolic, r, big_r)?;
    match t {
        Spectral::Real(x) if !x.is_finite() => return domain("t must be finite"),
        Spectral::Imaginary(s) if !(s.abs() <= 0.5) => {
            return domain(format!("only t = is with |s| <= 1/2 is supported, got s = {s}"))
        }
        _ => {}
    }
    let a = conical_antiderivative(t, r);
    let b = conical_antiderivative(t, big_r);
    let c = 2.0 * PI / mu;
    Ok(Quad { value: c * (b.value - a.value), error: c * (a.error + b.error) })
}

/// h_{r,R}(t) = (2π/μ(A)) ∫_r^R P_{−1/2+it}(cosh ρ) sinh ρ dρ.
pub fn shc_hyperbolic(r: f64, big_r: f64, t: Spectral) -> Result<f64> {
    Ok(shc_hyperbolic_quad(r, big_r, t)?.value)
}

/// h_{r,R}(t) by nested quadrature over [`conical_p_rho`]; the oracle for
/// [`shc_hyperbolic`].
pub fn shc_hyperbolic_nested(r: f64, big_r: f64, t: f64, tol: f64) -> Result<f64> {
    let mu = check_annulus(Space::Hyperbolic, r, big_r)?;
    let q = integrate(|rho| conical_p_rho(t, rho).value * rho.sinh(), r, big_r, tol, tol);
    Ok(2.0 * PI * q.value / mu)
}

/// Hilb approximation of the transform: the Legendre or conical function
/// replaced by its Bessel main term inside the annulus integral.
pub fn shc_hilb(space: Space, r: f64, big_r: f64, freq: f64) -> Result<Quad> {
    let vol = check_annulus(space, r, big_r)?;
    let (f, omega): (Box<dyn Fn(f64) -> f64 + Sync>, f64) = match space {
        Space::Sphere => (Box::new(move |th: f64| (th * th.sin()).sqrt() * bessel_j0(th * (freq + 0.5))), freq + 0.5),
        Space::Hyperbolic => (Box::new(move |rho: f64| (rho * rho.sinh()).sqrt() * bessel_j0(rho * freq)), freq),
    };
    let pieces = (omega.abs() * (big_r - r) / PI).ceil().max(1.0) as usize;
    let breaks: Vec<f64> = (0..=pieces).map(|i| r + (big_r - r) * i as f64 / pieces as f64).collect();
    let q = integrate_breaks(f, &breaks, 1e-15, 1e-13);
    Ok(Quad { value: 2.0 * PI * q.value / vol, error: 2.0 * PI * q.error / vol })
}

/// Hilb error envelope of the transform with unit constant:
/// (2π/vol) ∫_r^R e(θ) J(θ) dθ, e = θ² when freq ≤ 1/θ and √θ/freq^{3/2}
/// beyond, J the area density.
pub fn hilb_envelope(space: Space, r: f64, big_r: f64, freq: f64) -> Result<f64> {
    let vol = check_annulus(space, r, big_r)?;
    let jac = move |th: f64| match space {
        Space::Sphere => th.sin(),
        Space::Hyperbolic => th.sinh(),
    };
    let f = freq.abs();
    let e = move |th: f64| if f * th <= 1.0 { th * th } else { th.sqrt() / f.powf(1.5) };
    let mut breaks = vec![r];
    if f > 0.0 && 1.0 / f > r && 1.0 / f < big_r {
        breaks.push(1.0 / f);
    }
    breaks.push(big_r);
    let q = integrate_breaks(|th| e(th) * jac(th), &breaks, 1e-16, 1e-12);
    Ok(2.0 * PI * q.value / vol)
}

/// Main term of the square of the transform with its error scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticMain {
    pub value: f64,
    /// displayed error scale for the regime of `freq`
    pub error_scale: f64,
    /// 1/(r³F³) in both regimes
    pub uniform_scale: f64,
    /// F > 1/(R − r)
    pub far: bool,
    pub in_regime: bool,
}

/// Main term of h_{r,R}(t)² or h̃_{r,R}(m)²:
/// 8 / (s((R − r)/2) vol) · f⁻³ sin²((R − r)f/2) cos²((R + r)f/2 − π/4),
/// with s = sin, f = m + 1/2 on the sphere and s = sinh, f = |t| on H.
/// The π/4 phase is the one carried by the Bessel asymptotic of J₀.
/// The error scale is 1/(r³F³) for F ≤ 1/(R − r) and 1/(r³(R − r)²F⁵)
/// beyond, F = m or |t|. Out-of-regime parameters are flagged, not rejected.
pub fn shc_asymptotic_main(space: Space, r: f64, big_r: f64, freq: f64) -> Result<AsymptoticMain> {
    let vol = check_annulus(space, r, big_r)?;
    if r <= 0.0 {
        return domain("asymptotic main term needs r > 0");
    }
    let w = big_r - r;
    let (s, f) = match space {
        Space::Sphere => ((0.5 * w).sin(), freq + 0.5),
        Space::Hyperbolic => ((0.5 * w).sinh(), freq.abs()),
    };
    let value = 8.0 / (s * vol) / f.powi(3) * (0.5 * w * f).sin().powi(2) * (0.5 * (big_r + r) * f - 0.25 * PI).cos().powi(2);
    let big_f = freq.abs();
    let uniform_scale = 1.0 / (r.powi(3) * big_f.powi(3));
    let far = big_f * w > 1.0;
    let error_scale = if far { uniform_scale / (w * w * big_f * big_f) } else { uniform_scale };
    let in_regime = w <= 0.5 * r && big_f * r >= 1.0 && (space == Space::Hyperbolic || big_r <= PI - 0.1);
    Ok(AsymptoticMain { value, error_scale, uniform_scale, far, in_regime })
}

/// Decay regime of the transform and its bound: 1 for F ≤ 1/r, 1/√(rF) up to
/// 1/(R − r), then 1/(√r (R − r) F^{3/2}).
pub fn decay_bound(r: f64, big_r: f64, freq: f64) -> (usize, f64) {
    let f = freq.abs();
    let w = big_r - r;
    if f * r <= 1.0 {
        (0, 1.0)
    } else if f * w <= 1.0 {
        (1, 1.0 / (r * f).sqrt())
    } else {
        (2, 1.0 / (r.sqrt() * w * f.powf(1.5)))
    }
}

/// Tabulated transform of one annulus over a frequency grid.
#[derive(Debug, Clone, Serialize)]
pub struct ShcProfile {
    pub space: Space,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub grid: Vec<f64>,
    pub exact: Vec<f64>,
    pub hilb: Vec<f64>,
    pub asymptotic: Vec<f64>,
    pub quadrature_error: Vec<f64>,
    /// max |exact − hilb| / hilb_envelope over the grid
    pub hilb_constant: f64,
    /// max |exact| / decay_bound in each of the three regimes
    pub decay_constants: [Option<f64>; 3],
    /// max |exact² − main| / error_scale over in-regime grid points, split
    /// into F ≤ 1/(R − r) and F > 1/(R − r)
    pub asymptotic_constants: [Option<f64>; 2],
    /// max |exact² − main| · r³F³ over in-regime grid points
    pub asymptotic_constant_uniform: Option<f64>,
}

struct Row {
    exact: f64,
    hilb: f64,
    asym: AsymptoticMain,
    qerr: f64,
    env: f64,
}

/// Builds the profile; grid points are evaluated in parallel and assembled in
/// grid order. Sphere grids must hold nonnegative integers.
pub fn shc_profile(space: Space, r: f64, big_r: f64, grid: &[f64]) -> Result<ShcProfile> {
    check_annulus(space, r, big_r)?;
    if space == Space::Sphere && grid.iter().any(|&m| !(m >= 0.0 && m == m.floor() && m <= u32::MAX as f64)) {
        return domain("sphere frequencies must be nonnegative integers");
    }
    if space == Space::Hyperbolic && grid.iter().any(|&t| !(t.is_finite() && t.abs() <= CONICAL_T_CAP)) {
        return domain(format!("hyperbolic frequencies must satisfy |t| <= {CONICAL_T_CAP}"));
    }
    if r <= 0.0 {
        return domain("profile needs r > 0");
    }
    let rows: Vec<Result<Row>> = grid
        .par_iter()
        .map(|&f| {
            let (exact, qerr) = match space {
                Space::Sphere => {
                    let e = shc_sphere(r, big_r, f as u32)?;
                    let q = shc_sphere_quadrature(r, big_r, f as u32)?;
                    (e, (e - q.value).abs())
                }
                Space::Hyperbolic => {
                    let q = shc_hyperbolic_quad(r, big_r, Spectral::Real(f))?;
                    (q.value, q.error)
                }
            };
            let hilb = shc_hilb(space, r, big_r, f)?.value;
            let asym = shc_asymptotic_main(space, r, big_r, f)?;
            let env = hilb_envelope(space, r, big_r, f)?;
            Ok(Row { exact, hilb, asym, qerr, env })
        })
        .collect();
    let rows: Vec<Row> = rows.into_iter().collect::<Result<_>>()?;
    let mut decay = [None::<f64>; 3];
    let mut asym_c = [None::<f64>; 2];
    let mut asym_u = None::<f64>;
    let mut hilb_c = 0.0f64;
    for (row, &f) in rows.iter().zip(grid) {
        let (k, bound) = decay_bound(r, big_r, f);
        let ratio = row.exact.abs() / bound;
        decay[k] = Some(decay[k].map_or(ratio, |c| c.max(ratio)));
        if row.asym.in_regime {
            let diff = (row.exact * row.exact - row.asym.value).abs();
            let k = row.asym.far as usize;
            asym_c[k] = Some(asym_c[k].map_or(diff / row.asym.error_scale, |c| c.max(diff / row.asym.error_scale)));
            asym_u = Some(asym_u.map_or(diff / row.asym.uniform_scale, |c| c.max(diff / row.asym.uniform_scale)));
        }
        if row.env > 0.0 {
            hilb_c = hilb_c.max((row.exact - row.hilb).abs() / row.env);
        }
    }
    Ok(ShcProfile {
        space,
        r,
        big_r,
        grid: grid.to_vec(),
        exact: rows.iter().map(|x| x.exact).collect(),
        hilb: rows.iter().map(|x| x.hilb).collect(),
        asymptotic: rows.iter().map(|x| x.asym.value).collect(),
        quadrature_error: rows.iter().map(|x| x.qerr).collect(),
        hilb_constant: hilb_c,
        decay_constants: decay,
        asymptotic_constants: asym_c,
        asymptotic_constant_uniform: asym_u,
    })
}

impl ShcProfile {
    /// CSV with columns space,r,R,freq,exact,hilb,asym_main_sq,quad_err.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "space,r,R,freq,exact,hilb,asym_main_sq,quad_err")?;
        let tag = match self.space {
            Space::Sphere => "sphere",
            Space::Hyperbolic => "hyperbolic",
        };
        for i in 0..self.grid.len() {
            writeln!(
                w,
                "{tag},{},{},{},{},{},{},{}",
                f17(self.r),
                f17(self.big_r),
                f17(self.grid[i]),
                f17(self.exact[i]),
                f17(self.hilb[i]),
                f17(self.asymptotic[i]),
                f17(self.quadrature_error[i])
            )?;
        }
        Ok(())
    }
}

/// Radial profile of k̃_{r,R} ∗ k̃_{0,ρ} at angular separation θ:
/// (1/(σ(A)σ(B_ρ))) ∫₀^ρ sin φ · |{ψ : r ≤ dist ≤ R}| dφ.
pub fn convolved_kernel(r: f64, big_r: f64, rho: f64, theta: f64) -> Result<f64> {
    let sa = annulus_volume(Space::Sphere, r, big_r)?;
    let sb = annulus_volume(Space::Sphere, 0.0, rho)?;
    Ok(convolved_raw(r, big_r, rho, theta) / (sa * sb))
}

fn convolved_raw(r: f64, big_r: f64, rho: f64, theta: f64) -> f64 {
    let (st, ct) = theta.sin_cos();
    // measure of ψ ∈ [0, 2π) with dist(z, ξ(φ, ψ)) ≤ α
    let within = |alpha: f64, phi: f64| -> f64 {
        let (sp, cp) = phi.sin_cos();
        let den = st * sp;
        if den <= 1e-300 {
            let d = (theta - phi).abs();
            return if d <= alpha { 2.0 * PI } else { 0.0 };
        }
        let x = ((alpha.cos() - ct * cp) / den).clamp(-1.0, 1.0);
        2.0 * x.acos()
    };
    let g = |phi: f64| phi.sin() * (within(big_r, phi) - if r > 0.0 { within(r, phi) } else { 0.0 });
    let mut breaks = vec![0.0, rho];
    for a in [r, big_r] {
        for c in [(theta - a).abs(), theta + a, 2.0 * PI - theta - a] {
            if c > 0.0 && c < rho {
                breaks.push(c);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    integrate_breaks(g, &breaks, 1e-14, 1e-13).value
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvolutionCheck {
    /// transform of the numerically convolved kernel
    pub lhs: f64,
    /// h̃_{r,R}(m) · h̃_{0,ρ}(m)
    pub rhs: f64,
    pub diff: f64,
    pub sandwich_checked: u32,
    pub sandwich_violations: u32,
}

const SANDWICH_DRAWS: u32 = 100;

/// Convolution-product law on S² and the pointwise sandwich bounds between
/// the annulus kernel and its ρ-smoothings, checked at 100 random pairs
/// (z, ζ) drawn from a fixed stream.
pub fn convolution_check(r: f64, big_r: f64, rho: f64, m: u32) -> Result<ConvolutionCheck> {
    if !(rho > 0.0 && rho < big_r) {
        return domain(format!("convolution_check needs 0 < rho < R, got rho={rho}, R={big_r}"));
    }
    if big_r + rho > PI {
        return domain("convolution_check needs R + rho <= pi");
    }
    let sa = annulus_volume(Space::Sphere, r, big_r)?;
    let sb = annulus_volume(Space::Sphere, 0.0, rho)?;
    let lo = (r - rho).max(0.0);
    let hi = big_r + rho;
    let mut breaks = vec![lo];
    for c in [r + rho, big_r - rho] {
        if c > lo && c < hi {
            breaks.push(c);
        }
    }
    if r > 0.0 && r - rho > 0.0 {
        breaks.push(r - rho);
    }
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let q = integrate_breaks(
        |th| legendre_unchecked(m, th.cos()) * convolved_raw(r, big_r, rho, th) * th.sin(),
        &breaks,
        1e-13,
        1e-11,
    );
    let lhs = 2.0 * PI * q.value / (sa * sb);
    let rhs = shc_sphere(r, big_r, m)? * shc_sphere(0.0, rho, m)?;

    let mut rng = RandomSource::new(0, 0x5a4d).rng();
    let mut violations = 0;
    let kernel = |a: f64, b: f64, th: f64| -> Result<f64> {
        let v = annulus_volume(Space::Sphere, a, b)?;
        Ok(if th >= a && th <= b { 1.0 / v } else { 0.0 })
    };
    let conv = |a: f64, b: f64, th: f64| -> Result<(f64, f64)> {
        let v = annulus_volume(Space::Sphere, a, b)?;
        Ok((v, convolved_kernel(a, b, rho, th)?))
    };
    let tol = 1e-9;
    for _ in 0..SANDWICH_DRAWS {
        let z = sample_sphere_point(&mut rng);
        let zeta = sample_sphere_point(&mut rng);
        let th = angle(&z, &zeta);
        let mut ok = true;
        let ball = kernel(0.0, big_r, th)?;
        let vb = annulus_volume(Space::Sphere, 0.0, big_r)?;
        if big_r - rho > rho {
            let (v, c) = conv(0.0, big_r - rho, th)?;
            ok &= v / vb * c <= ball * (1.0 + tol) + tol;
        }
        let (v, c) = conv(0.0, big_r + rho, th)?;
        ok &= ball <= v / vb * c * (1.0 + tol) + tol;
        let ann = kernel(r, big_r, th)?;
        if r + rho < big_r - rho {
            let (v, c) = conv(r + rho, big_r - rho, th)?;
            ok &= ann * (1.0 + tol) + tol >= v / sa * c;
        }
        let (v, c) = conv(lo, big_r + rho, th)?;
        ok &= ann <= v / sa * c * (1.0 + tol) + tol;
        if !ok {
            violations += 1;
        }
    }
    Ok(ConvolutionCheck { lhs, rhs, diff: lhs - rhs, sandwich_checked: SANDWICH_DRAWS, sandwich_violations: violations })
}

/// Parameters of the test function h = h₁h₂h₃.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFunctionParams {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    #[serde(rename = "M")]
    pub m: u32,
}

impl TestFunctionParams {
    pub fn new(r: f64, big_r: f64, t1: f64, t2: f64, m: u32) -> Result<Self> {
        if !(0.0 <= r && r < big_r) {
            return domain(format!("test function needs 0 <= r < R, got r={r}, R={big_r}"));
        }
        if !(0.0 < t1 && t1 < t2) {
            return domain(format!("test function needs 0 < T1 < T2, got T1={t1}, T2={t2}"));
        }
        if m < 20 {
            return domain(format!("test function needs M >= 20, got {m}"));
        }
        Ok(TestFunctionParams { r, big_r, t1, t2, m })
    }

    /// T₁ = (R − r)^{−1+α}, T₂ = (R − r)^{−1−α}.
    pub fn from_alpha(r: f64, big_r: f64, alpha: f64, m: u32) -> Result<Self> {
        if !(alpha > 0.0) || !(big_r - r < 1.0) {
            return domain("from_alpha needs alpha > 0 and R - r < 1");
        }
        let w = big_r - r;
        Self::new(r, big_r, w.powf(-1.0 + alpha), w.powf(-1.0 - alpha), m)
    }
}

/// h₁(t) = e^{−(t/T₂)^{2M}} (1 − e^{−(t/T₁)^{2M}}).
pub fn test_h1(t: f64, p: &TestFunctionParams) -> f64 {
    let k = 2 * p.m as i32;
    (-(t / p.t2).powi(k)).exp() * -(-(t / p.t1).powi(k)).exp_m1()
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// h₂(t) for real t, in logarithms:
/// (2π)^{−4M−2} (4M+3)^{−3} |Γ(a + it/N)|^{2N} cosh(πt)/π, N = 4M+3, a = 2M/N.
pub fn test_h2(t: f64, m: u32) -> f64 {
    let n = 4.0 * m as f64 + 3.0;
    let a = 2.0 * m as f64 / n;
    let lg = ln_gamma_c(Complex64::new(a, t / n)).re;
    let ln = -(4.0 * m as f64 + 2.0) * (2.0 * PI).ln() - 3.0 * n.ln() + 2.0 * n * lg + ln_cosh(PI * t) - PI.ln();
    ln.exp()
}

/// h₂ continued to complex t in the strip |Im t| < 2M.
pub fn test_h2_complex(t: Complex64, m: u32) -> Complex64 {
    let n = 4.0 * m as f64 + 3.0;
    let a = 2.0 * m as f64 / n;
    let i = Complex64::i();
    let g1 = gamma_c(a + i * t / n);
    let g2 = gamma_c(a - i * t / n);
    let c = (-(4.0 * m as f64 + 2.0) * (2.0 * PI).ln() - 3.0 * n.ln()).exp();
    let pow = (g1 * g2).powu(n as u32);
    c * pow * rgamma_c(0.5 + i * t) * rgamma_c(0.5 - i * t)
}

/// h₃(t) = sin²((R − r)t/2) sin²((R + r)t/2).
pub fn test_h3(t: f64, p: &TestFunctionParams) -> f64 {
    (0.5 * (p.big_r - p.r) * t).sin().powi(2) * (0.5 * (p.big_r + p.r) * t).sin().powi(2)
}

/// h(t) = h₁(t) h₂(t) h₃(t).
pub fn test_function_h(t: f64, p: &TestFunctionParams) -> f64 {
    test_h1(t, p) * test_h2(t, p.m) * test_h3(t, p)
}

/// Error envelope (unit constant) for h(t) − h₃(t)/|t|³ on T₁ ≤ |t| ≤ T₂;
/// `None` outside that window.
pub fn test_function_envelope(t: f64, p: &TestFunctionParams) -> Option<f64> {
    let a = t.abs();
    if a < p.t1 || a > p.t2 {
        return None;
    }
    let w = p.big_r - p.r;
    let k = 2 * p.m as i32;
    if a * w <= 1.0 {
        Some(w * w / (a * a) + w * w * a.powi(k - 1) / p.t2.powi(k) + w * w * (-(a / p.t1).powi(k)).exp() / a)
    } else {
        Some(1.0 / a.powi(4) + a.powi(k - 3) / p.t2.powi(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre_p(0, 0.7).unwrap(), 1.0);
        assert_eq!(legendre_p(1, 0.3).unwrap(), 0.3);
        assert!((legendre_p(2, 0.5).unwrap() + 0.125).abs() < 1e-16);
        assert!(legendre_p(3, 1.5).is_err());
        // P_5(0.3) = (63x⁵ − 70x³ + 15x)/8
        let x: f64 = 0.3;
        let p5 = (63.0 * x.powi(5) - 70.0 * x.powi(3) + 15.0 * x) / 8.0;
        assert!((legendre_p(5, x).unwrap() - p5).abs() < 1e-15);
        let (a, b, c) = legendre_triple(5, x);
        assert!((a - legendre_unchecked(4, x)).abs() < 1e-15);
        assert!((b - p5).abs() < 1e-15);
        assert!((c - legendre_unchecked(6, x)).abs() < 1e-15);
        assert_eq!(legendre_triple(1, x).0, 1.0);
        assert_eq!(legendre_triple(0, x), (0.0, 1.0, x));
    }

    fn conical_series(t: f64, y: f64) -> f64 {
        // ₂F₁(1/2 − it, 1/2 + it; 1; (1 − y)/2)
        let z = 0.5 * (1.0 - y);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 0..400 {
            let k = k as f64;
            term *= ((k + 0.5) * (k + 0.5) + t * t) / ((k + 1.0) * (k + 1.0)) * z;
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        sum
    }

    fn conical_outer(t: f64, y: f64) -> f64 {
        // (√2/π) cosh(πt) ∫₀^∞ cos(tu)/√(cosh u + y) du
        let f = |u: f64| (t * u).cos() / (u.cosh() + y).sqrt();
        let mut breaks = vec![0.0];
        while *breaks.last().unwrap() < 80.0 {
            breaks.push(breaks.last().unwrap() + 1.0);
        }
        SQRT_2 / PI * (PI * t).cosh() * integrate_breaks(f, &breaks, 1e-16, 1e-14).value
    }

    #[test]
    fn conical_against_oracles() {
        assert_eq!(conical_p(3.0, 1.0).unwrap(), 1.0);
        assert!(conical_p(1.0, 0.9).is_err());
        assert!(conical_p(2e3, 2.0).is_err());
        let y = 0.5f64.cosh();
        let s = conical_series(0.0, y);
        assert!((conical_p(0.0, y).unwrap() - s).abs() < 1e-8);
        for &(t, rho) in &[(0.0, 0.5), (0.7, 1.2), (2.0, 0.3), (1.3, 1.7)] {
            let y = f64::cosh(rho);
            let v = conical_p(t, y).unwrap();
            assert!((v - conical_series(t, y)).abs() < 1e-10, "series t={t} rho={rho}");
            assert!((v - conical_outer(t, y)).abs() < 1e-9, "outer t={t} rho={rho}");
        }
        // P_{-1/2}(cosh 1) from mpmath
        assert!((conical_p(0.0, 1f64.cosh()).unwrap() - 0.940_862_159_249_349_8).abs() < 1e-13);
    }

    #[test]
    fn conical_hilb_example() {
        let rho: f64 = 0.3;
        let t = 5.0;
        let err = (conical_p(t, rho.cosh()).unwrap() - hilb_conical(t, rho)).abs();
        assert!(err <= rho.sqrt() / t.powf(1.5), "err {err}");
    }

    #[test]
    fn conical_large_t_stays_bounded() {
        for &t in &[50.0, 300.0, 1000.0] {
            for &rho in &[0.05, 0.5, 2.0] {
                let v = conical_p_rho(t, rho).value;
                let h = hilb_conical(t, rho);
                assert!(v.abs() <= 1.0 + 1e-12);
                assert!((v - h).abs() < 0.1 * rho.sqrt() / (t as f64).powf(1.5) + 1e-3, "t={t} rho={rho}");
            }
        }
    }

    #[test]
    fn sphere_transform_examples() {
        for &(r, big_r) in &[(0.0, 0.3), (0.2, 1.0), (1.0, 3.0)] {
            assert!((shc_sphere(r, big_r, 0).unwrap() - 1.0).abs() < 1e-14);
        }
        for m in 1..20 {
            assert!(shc_sphere(0.0, PI, m).unwrap().abs() < 1e-14);
        }
        let all = shc_sphere_all(0.5, 0.6, 60).unwrap();
        for m in [0u32, 1, 2, 17, 60] {
            assert!((all[m as usize] - shc_sphere(0.5, 0.6, m).unwrap()).abs() < 1e-12);
        }
        let e = shc_sphere(0.5, 0.6, 40).unwrap();
        let q = shc_sphere_quadrature(0.5, 0.6, 40).unwrap();
        assert!((e - q.value).abs() < 1e-10);
        assert!(shc_sphere(0.6, 0.5, 1).is_err());
        assert!(shc_sphere(0.5, 3.5, 1).is_err());
    }

    #[test]
    fn hyperbolic_transform_examples() {
        for &(r, big_r) in &[(0.0, 0.3), (0.1, 0.2), (0.5, 0.505), (1.0, 4.0)] {
            let h = shc_hyperbolic(r, big_r, Spectral::HALF_I).unwrap();
            assert!((h - 1.0).abs() < 1e-12, "{r} {big_r} {h}");
        }
        let h = shc_hyperbolic(0.1, 0.2, Spectral::Real(0.0)).unwrap();
        let o = shc_hyperbolic_nested(0.1, 0.2, 0.0, 1e-13).unwrap();
        assert!((h - o).abs() < 1e-8);
        for &t in &[1.0, 7.5, 40.0] {
            let h = shc_hyperbolic(0.3, 0.9, Spectral::Real(t)).unwrap();
            let o = shc_hyperbolic_nested(0.3, 0.9, t, 1e-12).unwrap();
            assert!((h - o).abs() < 1e-8, "t={t}");
        }
        assert!(shc_hyperbolic(0.1, 0.2, Spectral::Imaginary(0.7)).is_err());
        // t ↦ h is even
        let a = shc_hyperbolic(0.2, 0.5, Spectral::Real(3.0)).unwrap();
        let b = shc_hyperbolic(0.2, 0.5, Spectral::Real(-3.0)).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn hilb_constant_at_most_one() {
        let thetas: Vec<f64> = (0..=200).map(|i| 0.01 * 100f64.powf(i as f64 / 200.0)).collect();
        let c = hilb_constant_sphere(&thetas, 100);
        assert!(c <= 1.0, "C = {c}");
        assert!(c > 0.0);
    }

    #[test]
    fn asymptotic_main_sphere_example() {
        let (r, big_r, m) = (0.5, 0.505, 300u32);
        let h = shc_sphere(r, big_r, m).unwrap();
        let a = shc_asymptotic_main(Space::Sphere, r, big_r, m as f64).unwrap();
        assert!(a.in_regime);
        let ratio = (h * h - a.value).abs() / a.error_scale;
        assert!(ratio < 10.0, "ratio {ratio}");
    }

    #[test]
    fn asymptotic_main_hyperbolic_example() {
        let (r, big_r, t) = (0.5, 0.505, 300.0);
        let h = shc_hyperbolic(r, big_r, Spectral::Real(t)).unwrap();
        let a = shc_asymptotic_main(Space::Hyperbolic, r, big_r, t).unwrap();
        assert!(a.in_regime);
        let ratio = (h * h - a.value).abs() / a.error_scale;
        assert!(ratio < 10.0, "ratio {ratio}");
    }

    #[test]
    fn asymptotic_main_decays_cubically() {
        let a = shc_asymptotic_main(Space::Sphere, 0.5, 0.6, 1000.0).unwrap();
        let env = 8.0 / ((0.05f64).sin() * annulus_volume(Space::Sphere, 0.5, 0.6).unwrap()) / 1000.5f64.powi(3);
        assert!(a.value <= env);
        let far = shc_asymptotic_main(Space::Hyperbolic, 0.5, 0.6, 1e6).unwrap();
        assert!(far.value < 1e-14);
        let flagged = shc_asymptotic_main(Space::Sphere, 0.1, 1.0, 50.0).unwrap();
        assert!(!flagged.in_regime);
    }

    #[test]
    fn profile_sphere_and_csv() {
        let grid: Vec<f64> = (0..60).map(|m| (m * 7) as f64).collect();
        let p = shc_profile(Space::Sphere, 0.5, 0.52, &grid).unwrap();
        assert!((p.exact[0] - 1.0).abs() < 1e-13);
        assert!(p.quadrature_error.iter().all(|&e| e < 1e-10));
        assert!(p.hilb_constant < 1.0, "{}", p.hilb_constant);
        assert!(p.decay_constants.iter().all(|c| c.map_or(true, |c| c < 2.0)));
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next().unwrap(), "space,r,R,freq,exact,hilb,asym_main_sq,quad_err");
        assert_eq!(s.lines().count(), 61);
        assert!(s.lines().nth(1).unwrap().starts_with("sphere,5.0000000000000000e-1,5.2000000000000002e-1,0.0000000000000000e0,"));
        assert!(shc_profile(Space::Sphere, 0.5, 0.52, &[1.5]).is_err());
    }

    #[test]
    fn profile_hyperbolic() {
        let grid: Vec<f64> = (0..25).map(|k| 2.0 + 12.0 * k as f64).collect();
        let p = shc_profile(Space::Hyperbolic, 0.4, 0.44, &grid).unwrap();
        assert!(p.quadrature_error.iter().all(|&e| e < 1e-9));
        assert!(p.hilb_constant < 1.0, "{}", p.hilb_constant);
        let near = p.asymptotic_constants[0].unwrap();
        assert!(near < 10.0, "{near}");
        assert!(p.asymptotic_constants[1].unwrap().is_finite());
        assert!(p.asymptotic_constant_uniform.unwrap() < 10.0);
    }

    #[test]
    fn convolution_examples() {
        let c = convolution_check(0.3, 0.5, 0.05, 0).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-9 && (c.rhs - 1.0).abs() < 1e-13);
        let c = convolution_check(0.3, 0.5, 0.05, 10).unwrap();
        assert!(c.diff.abs() <= 1e-6, "diff {}", c.diff);
        assert_eq!(c.sandwich_violations, 0);
        assert!(convolution_check(0.3, 0.5, 0.6, 1).is_err());
    }

    #[test]
    fn convolved_kernel_plateau_and_support() {
        let (r, big_r, rho) = (0.3, 0.6, 0.05);
        let sa = annulus_volume(Space::Sphere, r, big_r).unwrap();
        // full plateau on [r + ρ, R − ρ]
        let v = convolved_kernel(r, big_r, rho, 0.45).unwrap();
        assert!((v * sa - 1.0).abs() < 1e-10);
        assert_eq!(convolved_kernel(r, big_r, rho, 0.2).unwrap(), 0.0);
        assert_eq!(convolved_kernel(r, big_r, rho, 0.7).unwrap(), 0.0);
        let edge = convolved_kernel(r, big_r, rho, 0.31).unwrap() * sa;
        assert!(edge > 0.0 && edge < 1.0);
    }

    #[test]
    fn test_function_pieces() {
        let p = TestFunctionParams::from_alpha(0.1, 0.11, 0.2, 20).unwrap();
        assert!(TestFunctionParams::new(0.1, 0.11, 5.0, 3.0, 20).is_err());
        assert!(TestFunctionParams::new(0.1, 0.11, 3.0, 5.0, 10).is_err());
        for k in 0..400 {
            let t = -300.0 + 1.5 * k as f64;
            assert!(test_function_h(t, &p) >= 0.0);
        }
        // h₂ matches the complex continuation on the real line
        for &t in &[0.0, 3.0, 40.0] {
            let a = test_h2(t, p.m);
            let b = test_h2_complex(Complex64::new(t, 0.0), p.m);
            assert!((a - b.re).abs() <= 1e-10 * a && b.im.abs() <= 1e-10 * a, "t={t}");
        }
        // Stirling: h₂(t) ~ (t² + 4M²)^{−3/2}
        let t: f64 = 2000.0;
        let rel = test_h2(t, 20) * (t * t + 1600.0).powf(1.5) - 1.0;
        assert!(rel.abs() < 1e-3, "{rel}");
    }

    #[test]
    fn test_function_zero_at_half_i() {
        let m = 20;
        let z = test_h2_complex(Complex64::new(0.0, 0.5), m);
        assert!(z.norm() < 1e-300);
        let scale = test_h2(0.0, m);
        let mut prev = f64::INFINITY;
        for &eps in &[1e-2, 1e-3, 1e-4] {
            let v = test_h2_complex(Complex64::new(0.0, 0.5 - eps), m).norm() / scale;
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn test_function_refined_window() {
        let p = TestFunctionParams::from_alpha(0.1, 0.11, 0.2, 20).unwrap();
        let mut worst = 0.0f64;
        let n = 2000;
        for k in 0..=n {
            let t = p.t1 + (p.t2 - p.t1) * k as f64 / n as f64;
            let diff = test_function_h(t, &p) - test_h3(t, &p) / t.powi(3);
            let env = test_function_envelope(t, &p).unwrap();
            worst = worst.max(diff.abs() / env);
        }
        // the implied constant carries the M-dependence of h₂ − t⁻³ ≈ −6M²/t⁵
        assert!(worst.is_finite() && worst < 20.0 * (p.m as f64).powi(2), "{worst}");
        assert!(test_function_envelope(p.t1 * 0.5, &p).is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn closed_form_matches_quadrature(r in 0.0f64..2.5, w in 0.001f64..0.6, m in 0u32..1000) {
            let big_r = (r + w).min(PI);
            let e = shc_sphere(r, big_r, m).unwrap();
            let q = shc_sphere_quadrature(r, big_r, m).unwrap();
            prop_assert!((e - q.value).abs() < 1e-10);
        }

        #[test]
        fn legendre_bounded(m in 0u32..500, x in -1.0f64..1.0) {
            prop_assert!(legendre_p(m, x).unwrap().abs() <= 1.0 + 1e-12);
        }

    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn convolution_law(r in 0.0f64..1.0, w in 0.1f64..1.0, frac in 0.05f64..0.9, m in 0u32..30) {
            let big_r = r + w;
            let rho = frac * big_r.min(0.3);
            let c = convolution_check(r, big_r, rho, m).unwrap();
            prop_assert!(c.diff.abs() <= 1e-6, "diff {}", c.diff);
            prop_assert!(c.sandwich_violations == 0);
        }
    }
}
