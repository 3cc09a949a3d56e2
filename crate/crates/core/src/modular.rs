//! Binary quadratic forms, Heegner points, closed geodesics and distances on
//! the modular surface Γ\H with Γ = PSL₂(Z).

use crate::arith::{divisors, gcd, gcd_i64, isqrt, mod_inv, Discriminant};
use crate::error::{domain, Error, Result};
use crate::fmt::f17;
use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;

/// Largest |D| accepted by [`reduced_forms`].
pub const DISCRIMINANT_CAP: u64 = 100_000_000;

/// An element of SL₂(Z), acting on H by Möbius transformations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Mat2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1, b: 0, c: 0, d: 1 };
    pub const S: Mat2 = Mat2 { a: 0, b: -1, c: 1, d: 0 };

    pub fn t(k: i64) -> Mat2 {
        Mat2 { a: 1, b: k, c: 0, d: 1 }
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inv(&self) -> Mat2 {
        Mat2 { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (z * self.a as f64 + self.b as f64) / (z * self.c as f64 + self.d as f64)
    }

    pub fn apply_real(&self, x: f64) -> f64 {
        (self.a as f64 * x + self.b as f64) / (self.c as f64 * x + self.d as f64)
    }
}

/// Q(x, y) = ax² + bxy + cy².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BinaryForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl BinaryForm {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        BinaryForm { a, b, c }
    }

    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn eval(&self, x: i64, y: i64) -> i128 {
        let (x, y) = (x as i128, y as i128);
        self.a as i128 * x * x + self.b as i128 * x * y + self.c as i128 * y * y
    }

    /// Q∘g, i.e. (x, y) ↦ Q(g₁₁x + g₁₂y, g₂₁x + g₂₂y).
    pub fn compose(&self, g: &Mat2) -> BinaryForm {
        let (a, b, c) = (self.a as i128, self.b as i128, self.c as i128);
        let (p, q, r, s) = (g.a as i128, g.b as i128, g.c as i128, g.d as i128);
        let na = a * p * p + b * p * r + c * r * r;
        let nb = 2 * a * p * q + b * (p * s + q * r) + 2 * c * r * s;
        let nc = a * q * q + b * q * s + c * s * s;
        BinaryForm { a: na as i64, b: nb as i64, c: nc as i64 }
    }

    /// The two roots (−b ∓ √D)/2a for D > 0, "minus" root first.
    pub fn real_roots(&self) -> (f64, f64) {
        let sd = (self.discriminant() as f64).sqrt();
        let a2 = 2.0 * self.a as f64;
        // stable quadratic roots
        let b = self.b as f64;
        let qp = -0.5 * (b + b.signum() * sd);
        let (r1, r2) = if b == 0.0 { (-sd / a2, sd / a2) } else { (qp / self.a as f64, self.c as f64 / qp) };
        let minus = (-b - sd) / a2;
        if (r1 - minus).abs() <= (r2 - minus).abs() {
            (r1, r2)
        } else {
            (r2, r1)
        }
    }

    pub fn is_primitive(&self) -> bool {
        gcd(gcd_i64(self.a, self.b), self.c.unsigned_abs()) == 1
    }
}

fn check_cap(d: Discriminant) -> Result<()> {
    if d.modulus() > DISCRIMINANT_CAP {
        return Err(Error::Resource(format!("|D| = {} exceeds the cap {DISCRIMINANT_CAP}", d.modulus())));
    }
    Ok(())
}

/// Reduced positive definite forms of discriminant D < 0, one per class.
fn reduced_definite(d: i64) -> Vec<BinaryForm> {
    let n = d.unsigned_abs();
    let mut out = Vec::new();
    let mut a = 1i64;
    while (3 * a * a) as u64 <= n {
        for b in -a + 1..=a {
            if (b - d).rem_euclid(2) != 0 {
                continue;
            }
            let num = b * b - d;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a || (b < 0 && c == a) {
                continue;
            }
            let f = BinaryForm::new(a, b, c);
            if f.is_primitive() {
                out.push(f);
            }
        }
        a += 1;
    }
    out.sort_by(|x, y| (x.a, x.b.abs(), -x.b).cmp(&(y.a, y.b.abs(), -y.b)));
    out
}

fn is_reduced_indefinite(f: &BinaryForm, d: i64) -> bool {
    // 0 < b < √D and √D − b < 2|a| < √D + b, decided in integers
    let a2 = 2 * f.a.abs();
    let b = f.b;
    b > 0 && (b * b) < d && (a2 + b) * (a2 + b) > d && (a2 - b <= 0 || (a2 - b) * (a2 - b) < d)
}

fn reduced_indefinite(d: i64) -> Vec<BinaryForm> {
    let sd = isqrt(d as u64) as i64;
    let mut out = Vec::new();
    for b in 1..=sd {
        if (b - d).rem_euclid(2) != 0 || b * b >= d {
            continue;
        }
        let n = (d - b * b) / 4;
        for a1 in divisors(n as u64) {
            let a1 = a1 as i64;
            for a in [a1, -a1] {
                let f = BinaryForm::new(a, b, -n / a);
                if is_reduced_indefinite(&f, d) && f.is_primitive() {
                    out.push(f);
                }
            }
        }
    }
    out.sort();
    out
}

/// Reduction operator on reduced indefinite forms: (a,b,c) ↦ (c, b', a')
/// with b' ≡ −b (mod 2c) and √D − 2|c| < b' < √D. The step is Q ↦ Q∘g with
/// g = [[0, −1], [1, s]] for the integer s = (b + b')/(2c).
pub fn rho_step(f: &BinaryForm, d: i64) -> (BinaryForm, Mat2) {
    let c2 = 2 * f.c.abs();
    let sd = isqrt(d as u64) as i64;
    // largest b' < √D with b' ≡ −b (mod 2|c|)
    let bp = sd - (sd + f.b).rem_euclid(c2);
    let s = (f.b + bp) / (2 * f.c);
    let g = Mat2 { a: 0, b: -1, c: 1, d: s };
    let next = f.compose(&g);
    debug_assert_eq!(next.b, bp);
    (next, g)
}

/// One representative per class: reduced forms for D < 0, one reduced form
/// per reduction cycle (narrow class) for D > 0.
pub fn reduced_forms(d: Discriminant) -> Result<Vec<BinaryForm>> {
    check_cap(d)?;
    let dv = d.value();
    if dv < 0 {
        return Ok(reduced_definite(dv));
    }
    Ok(reduction_cycles(dv).into_iter().map(|c| c[0]).collect())
}

/// Partition of the reduced indefinite forms into reduction cycles, each
/// cycle starting at its smallest form.
pub fn reduction_cycles(d: i64) -> Vec<Vec<BinaryForm>> {
    let all = reduced_indefinite(d);
    let mut seen = std::collections::HashSet::new();
    let mut cycles = Vec::new();
    for f in &all {
        if seen.contains(f) {
            continue;
        }
        let mut cyc = vec![*f];
        seen.insert(*f);
        let mut g = rho_step(f, d).0;
        while g != *f {
            seen.insert(g);
            cyc.push(g);
            g = rho_step(&g, d).0;
        }
        cycles.push(cyc);
    }
    cycles
}

/// h(D) for D < 0, narrow class number h⁺(D) for D > 0.
pub fn class_number(d: Discriminant) -> Result<u64> {
    Ok(reduced_forms(d)?.len() as u64)
}

/// Heegner points (−b + i√|D|)/2a of the reduced forms.
pub fn heegner_points(d: Discriminant) -> Result<Vec<Complex64>> {
    if d.value() > 0 {
        return domain("Heegner points need D < 0");
    }
    let sd = (d.modulus() as f64).sqrt();
    Ok(reduced_forms(d)?.iter().map(|f| Complex64::new(-f.b as f64 / (2.0 * f.a as f64), sd / (2.0 * f.a as f64))).collect())
}

/// log ε₀ of the fundamental unit of the order of discriminant D > 0 and
/// its norm, from the continued fraction of (b₀ + √D)/2 with b₀ ≡ D (mod 2).
pub fn fundamental_unit(d: i64) -> (f64, i32) {
    let sd_f = (d as f64).sqrt();
    let sd = isqrt(d as u64) as i64;
    let (mut p, mut q) = (d.rem_euclid(2), 2i64);
    let floor_x = |p: i64, q: i64| -> i64 {
        // floor((p + √D)/q) for q > 0
        (p + sd).div_euclid(q)
    };
    // one step to land on the purely periodic part
    let a0 = floor_x(p, q);
    p = a0 * q - p;
    q = (d - p * p) / q;
    let (p1, q1) = (p, q);
    let mut log_eps = 0.0;
    let mut k = 0;
    loop {
        log_eps += ((p as f64 + sd_f) / q as f64).ln();
        k += 1;
        let a = floor_x(p, q);
        p = a * q - p;
        q = (d - p * p) / q;
        if p == p1 && q == q1 {
            break;
        }
    }
    (log_eps, if k % 2 == 0 { 1 } else { -1 })
}

/// log ε⁺, the totally positive fundamental unit (t + u√D)/2 with
/// t² − Du² = 4.
pub fn log_eps_plus(d: i64) -> f64 {
    let (l, norm) = fundamental_unit(d);
    if norm == 1 {
        l
    } else {
        2.0 * l
    }
}

/// Fundamental solution (t, u) of t² − Du² = 4 when it fits in 64 bits.
pub fn pell(d: i64) -> Option<(u64, u64)> {
    let l = log_eps_plus(d);
    if l > 27.0 {
        return None;
    }
    let e = l.exp();
    let t = (e + 1.0 / e).round() as i128;
    let u = ((e - 1.0 / e) / (d as f64).sqrt()).round() as i128;
    (t * t - d as i128 * u * u == 4).then_some((t as u64, u as u64))
}

/// A primitive closed geodesic on Γ\H.
#[derive(Debug, Clone, Serialize)]
pub struct Geodesic {
    pub discriminant: i64,
    pub form: BinaryForm,
    /// (−b − √D)/2a and (−b + √D)/2a.
    pub endpoints: (f64, f64),
    pub length: f64,
    pub pell: Option<(u64, u64)>,
    pub sample_path: Vec<Complex64>,
}

/// Default spacing of [`Geodesic::sample_path`].
pub const PATH_STEP: f64 = 0.1;

/// One geodesic per narrow class, length 2 log ε⁺.
pub fn closed_geodesics(d: Discriminant) -> Result<Vec<Geodesic>> {
    let dv = d.value();
    if dv < 0 {
        return domain("closed geodesics need D > 0");
    }
    check_cap(d)?;
    let length = 2.0 * log_eps_plus(dv);
    let pell = pell(dv);
    reduced_forms(d)?
        .into_iter()
        .map(|form| {
            let mut g = Geodesic { discriminant: dv, form, endpoints: form.real_roots(), length, pell, sample_path: Vec::new() };
            g.sample_path = walk(&g, PATH_STEP).iter().map(|p| p.start).collect();
            Ok(g)
        })
        .collect()
}

fn check_h(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return domain(format!("{z} is not in the upper half-plane"));
    }
    Ok(())
}

/// u(z, w) = |z − w|² / (4 Im z Im w).
pub fn point_pair_u(z: Complex64, w: Complex64) -> f64 {
    (z - w).norm_sqr() / (4.0 * z.im * w.im)
}

fn rho_unchecked(z: Complex64, w: Complex64) -> f64 {
    2.0 * point_pair_u(z, w).sqrt().asinh()
}

/// Hyperbolic distance ρ(z, w) = 2 asinh √u(z, w).
pub fn hyperbolic_distance(z: Complex64, w: Complex64) -> Result<f64> {
    check_h(z)?;
    check_h(w)?;
    Ok(rho_unchecked(z, w))
}

const FD_EPS: f64 = 1e-13;

/// Reduces z into the fundamental domain −1/2 ≤ Re z < 1/2, |z| ≥ 1, with
/// boundary points |z| = 1, Re z > 0 sent to Re z < 0. Returns (γz, γ).
pub fn reduce_point(z: Complex64) -> (Complex64, Mat2) {
    let mut z = z;
    let mut g = Mat2::IDENTITY;
    for _ in 0..10_000 {
        let k = z.re.round() as i64;
        if k != 0 {
            z -= k as f64;
            g = Mat2::t(-k).mul(&g);
        }
        if z.norm_sqr() < 1.0 - FD_EPS {
            z = -z.inv();
            g = Mat2::S.mul(&g);
        } else {
            break;
        }
    }
    if z.re >= 0.5 - FD_EPS {
        z -= 1.0;
        g = Mat2::t(-1).mul(&g);
    }
    if (z.norm_sqr() - 1.0).abs() < FD_EPS && z.re > FD_EPS {
        z = -z.inv();
        g = Mat2::S.mul(&g);
    }
    (z, g)
}

/// Whether z lies in the closed standard fundamental domain.
pub fn in_fundamental_domain(z: Complex64) -> bool {
    z.re.abs() <= 0.5 + FD_EPS && z.norm_sqr() >= 1.0 - FD_EPS
}

/// Every γz (γ ∈ PSL₂(Z), each γ once) with ρ(γz, w) ≤ radius.
pub fn translates_within(z: Complex64, w: Complex64, radius: f64) -> Vec<(Mat2, Complex64)> {
    let mut out = Vec::new();
    // Im γz ≥ Im w · e^{−radius} and |Re γz − Re w| ≤ Im w · sinh(radius)
    let bound = z.im * radius.exp() / w.im;
    let xlo = w.re - w.im * radius.sinh();
    let xhi = w.re + w.im * radius.sinh();
    let push_row = |g0: Mat2, out: &mut Vec<(Mat2, Complex64)>| {
        let p = g0.apply(z);
        let k0 = (xlo - p.re).ceil() as i64;
        let k1 = (xhi - p.re).floor() as i64;
        for k in k0..=k1 {
            let q = p + k as f64;
            if rho_unchecked(q, w) <= radius {
                out.push((Mat2::t(k).mul(&g0), q));
            }
        }
    };
    push_row(Mat2::IDENTITY, &mut out);
    let cmax = (bound.sqrt() / z.im).floor() as i64;
    for c in 1..=cmax {
        let cf = c as f64;
        let rem = bound - cf * cf * z.im * z.im;
        if rem < 0.0 {
            continue;
        }
        let half = rem.sqrt();
        let d0 = (-cf * z.re - half).ceil() as i64;
        let d1 = (-cf * z.re + half).floor() as i64;
        for d in d0..=d1 {
            if gcd_i64(c, d) != 1 {
                continue;
            }
            let a = mod_inv(d, c as u64).unwrap() as i64;
            let b = (a * d - 1) / c;
            push_row(Mat2 { a, b, c, d }, &mut out);
        }
    }
    out
}

/// min over γ ∈ Γ of ρ(γz, w). Both points are reduced first; the distance
/// of the reduced pair bounds the search radius, so the minimum is exact.
pub fn quotient_distance(z: Complex64, w: Complex64) -> Result<f64> {
    check_h(z)?;
    check_h(w)?;
    let (zr, _) = reduce_point(z);
    let (wr, _) = reduce_point(w);
    let r0 = rho_unchecked(zr, wr);
    let best = translates_within(zr, wr, r0 * (1.0 + 1e-12) + 1e-12)
        .iter()
        .map(|(_, p)| rho_unchecked(*p, wr))
        .fold(r0, f64::min);
    Ok(best)
}

/// Σ over points z and γ ∈ PSL₂(Z) of 1[r ≤ ρ(γz, w) ≤ R]: the count that
/// the automorphic kernel sees, with stabilizer multiplicity.
pub fn kernel_count(points: &[Complex64], w: Complex64, r: f64, big_r: f64) -> u64 {
    let (wr, _) = reduce_point(w);
    points
        .iter()
        .map(|z| translates_within(*z, wr, big_r).iter().filter(|(_, p)| rho_unchecked(*p, wr) >= r).count() as u64)
        .sum()
}

/// How points on Γ\H are counted in an annulus around w.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    /// Every translate γz in the annulus counts (automorphic kernel).
    Kernel,
    /// A point counts once if r ≤ quotient distance ≤ R.
    Quotient,
}

/// A piece of the walk along a closed geodesic: the parameter interval
/// [s0, s1] on the lift with endpoints (α → β), starting in F.
#[derive(Debug, Clone, Copy)]
struct Piece {
    alpha: f64,
    beta: f64,
    s0: f64,
    s1: f64,
    start: Complex64,
}

// Isometry sending α ↦ 0, β ↦ ∞, so the lift becomes the imaginary axis
// and arclength is log|M(z)|.
fn to_frame(alpha: f64, beta: f64, z: Complex64) -> Complex64 {
    if alpha < beta {
        (z - alpha) / (beta - z)
    } else {
        (z - alpha) / (z - beta)
    }
}

fn from_frame(alpha: f64, beta: f64, m: Complex64) -> Complex64 {
    if alpha < beta {
        (m * beta + alpha) / (m + 1.0)
    } else {
        (m * beta - alpha) / (m - 1.0)
    }
}

/// Walks one period of the closed geodesic in steps of at most `step`,
/// re-reducing into F at the start of every piece. The lift is carried by
/// an integral form so no drift accumulates.
fn walk(g: &Geodesic, step: f64) -> Vec<Piece> {
    let d = g.discriminant;
    let mut form = g.form;
    let (mut alpha, mut beta) = form.real_roots();
    let mut s: f64 = 0.0;
    let mut remaining = g.length;
    let mut pieces = Vec::new();
    while remaining > 1e-12 {
        let p = from_frame(alpha, beta, Complex64::new(0.0, s.exp()));
        let (pr, eta) = reduce_point(p);
        if eta != Mat2::IDENTITY {
            let ea = eta.apply_real(alpha);
            form = form.compose(&eta.inv());
            debug_assert_eq!(form.discriminant(), d);
            let (r1, r2) = form.real_roots();
            if (r1 - ea).abs() <= (r2 - ea).abs() {
                (alpha, beta) = (r1, r2);
            } else {
                (alpha, beta) = (r2, r1);
            }
            s = to_frame(alpha, beta, pr).norm().ln();
        }
        let len = step.min(remaining);
        pieces.push(Piece { alpha, beta, s0: s, s1: s + len, start: pr });
        s += len;
        remaining -= len;
    }
    pieces
}

/// Arc length of a closed geodesic inside an annulus, with an error bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ArcLength {
    pub length: f64,
    pub error_bound: f64,
    pub pieces: usize,
}

const WALK_STEP: f64 = 0.25;

fn interval_union_len(mut iv: Vec<(f64, f64)>, minus: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    iv.retain(|x| x.1 > x.0);
    iv.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in iv {
        let (a, b) = (a.max(lo), b.min(hi));
        if b <= a {
            continue;
        }
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    let mut total: f64 = merged.iter().map(|x| x.1 - x.0).sum();
    if !minus.is_empty() {
        // subtract the part of ∪minus lying inside ∪merged
        let mut m2: Vec<(f64, f64)> = minus.to_vec();
        m2.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut mm: Vec<(f64, f64)> = Vec::new();
        for (a, b) in m2 {
            match mm.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => mm.push((a, b)),
            }
        }
        for (a, b) in &merged {
            for (c, d) in &mm {
                let o = b.min(*d) - a.max(*c);
                if o > 0.0 {
                    total -= o;
                }
            }
        }
    }
    total
}

/// ℓ(C ∩ A_{r,R}(w)). Chords are exact: a ball of radius R about a point at
/// distance δ from the geodesic cuts a chord of half-length
/// acosh(cosh R / cosh δ).
pub fn geodesic_annulus_length(g: &Geodesic, center: Complex64, r: f64, big_r: f64, mode: Membership) -> Result<ArcLength> {
    check_h(center)?;
    if !(r >= 0.0 && big_r > r) {
        return domain(format!("annulus needs 0 <= r < R, got r={r}, R={big_r}"));
    }
    let (w, _) = reduce_point(center);
    let pieces = walk(g, WALK_STEP);
    let mut total = 0.0;
    for pc in &pieces {
        let mid = from_frame(pc.alpha, pc.beta, Complex64::new(0.0, (0.5 * (pc.s0 + pc.s1)).exp()));
        let reach = big_r + 0.5 * (pc.s1 - pc.s0) + 1e-9;
        let mut outer = Vec::new();
        let mut inner = Vec::new();
        let mut kernel = 0.0;
        for (_, wp) in translates_within(w, mid, reach) {
            let m = to_frame(pc.alpha, pc.beta, wp);
            let delta = (m.re.abs() / m.im).asinh();
            if delta > big_r {
                continue;
            }
            let sf = m.norm().ln();
            let ar = (big_r.cosh() / delta.cosh()).acosh();
            let o = (sf - ar, sf + ar);
            let i = if delta < r {
                let a = (r.cosh() / delta.cosh()).acosh();
                Some((sf - a, sf + a))
            } else {
                None
            };
            match mode {
                Membership::Kernel => {
                    let mut l = (o.1.min(pc.s1) - o.0.max(pc.s0)).max(0.0);
                    if let Some(i) = i {
                        l -= (i.1.min(pc.s1) - i.0.max(pc.s0)).max(0.0);
                    }
                    kernel += l;
                }
                Membership::Quotient => {
                    outer.push(o);
                    if let Some(i) = i {
                        inner.push(i);
                    }
                }
            }
        }
        total += match mode {
            Membership::Kernel => kernel,
            Membership::Quotient => interval_union_len(outer, &inner, pc.s0, pc.s1),
        };
    }
    Ok(ArcLength { length: total, error_bound: 1e-12 * pieces.len() as f64 * (1.0 + g.length), pieces: pieces.len() })
}

/// Reduced forms with their Heegner points (D < 0) or closed geodesics (D > 0).
#[derive(Debug, Clone, Serialize)]
pub struct FormClassEnsemble {
    pub discriminant: i64,
    pub forms: Vec<BinaryForm>,
    pub heegner_points: Vec<Complex64>,
    pub geodesics: Vec<Geodesic>,
}

impl FormClassEnsemble {
    pub fn new(d: Discriminant) -> Result<Self> {
        let forms = reduced_forms(d)?;
        let (heegner_points, geodesics) = if d.value() < 0 { (heegner_points(d)?, Vec::new()) } else { (Vec::new(), closed_geodesics(d)?) };
        Ok(FormClassEnsemble { discriminant: d.value(), forms, heegner_points, geodesics })
    }

    /// CSV with columns D,a,b,c.
    pub fn write_forms_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "D,a,b,c")?;
        for f in &self.forms {
            writeln!(w, "{},{},{},{}", self.discriminant, f.a, f.b, f.c)?;
        }
        Ok(())
    }

    /// CSV with columns D,re,im.
    pub fn write_heegner_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "D,re,im")?;
        for z in &self.heegner_points {
            writeln!(w, "{},{},{}", self.discriminant, f17(z.re), f17(z.im))?;
        }
        Ok(())
    }

    /// CSV with columns D,e1,e2,length.
    pub fn write_geodesics_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "D,e1,e2,length")?;
        for g in &self.geodesics {
            writeln!(w, "{},{},{},{}", self.discriminant, f17(g.endpoints.0), f17(g.endpoints.1), f17(g.length))?;
        }
        Ok(())
    }
}
