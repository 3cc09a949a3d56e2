//! Variance of lattice points, Heegner points and closed geodesics in
//! annuli: Monte Carlo over centers, the exact spectral pair sum on S², and
//! the random-point prediction.

use crate::error::{domain, Result};
use crate::fmt::f17;
use crate::lattice::{enumerate, representable, LatticePointSet};
use crate::modular::{closed_geodesics, geodesic_annulus_length, heegner_points, kernel_count, quotient_distance, Geodesic, Membership};
use crate::sphere::{
    annulus_volume, dot, sample_fundamental_domain, sample_rotation, sample_sphere_point, RandomSource, Space, SphereIndex, Vec3,
    FD_VOLUME,
};
use crate::transforms::shc_sphere_all;
use crate::arith::Discriminant;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

/// Histogram of the integer dot products x·y over ordered pairs of E(n).
#[derive(Debug, Clone)]
pub struct PairHistogram {
    pub n: u64,
    pub points: u64,
    /// dot product k ↦ number of ordered pairs (x, y) with x·y = k
    pub counts: BTreeMap<i64, u64>,
}

impl PairHistogram {
    /// Built over unordered pairs i < j, then doubled, plus the diagonal.
    pub fn new(pts: &LatticePointSet) -> Self {
        let p = &pts.points;
        let mut counts: BTreeMap<i64, u64> = p
            .par_iter()
            .enumerate()
            .fold(BTreeMap::new, |mut acc: BTreeMap<i64, u64>, (i, x)| {
                for y in &p[i + 1..] {
                    *acc.entry(x[0] * y[0] + x[1] * y[1] + x[2] * y[2]).or_default() += 2;
                }
                acc
            })
            .reduce(BTreeMap::new, |mut a, b| {
                for (k, v) in b {
                    *a.entry(k).or_default() += v;
                }
                a
            });
        if !p.is_empty() {
            *counts.entry(pts.n as i64).or_default() += p.len() as u64;
        }
        PairHistogram { n: pts.n, points: p.len() as u64, counts }
    }

    /// S_l = Σ_{x,y} P_l(x̂·ŷ) for l = 0..=lmax. E(n) is closed under x ↦ −x,
    /// so the ±k bins are paired and odd l vanish exactly.
    pub fn legendre_sums(&self, lmax: u32) -> Vec<f64> {
        let mut s = vec![0.0; lmax as usize + 1];
        let nf = self.n as f64;
        for (&k, &c) in self.counts.range(0..) {
            debug_assert_eq!(self.counts.get(&-k).copied().unwrap_or(0), c);
            let x = k as f64 / nf;
            let (mut p0, mut p1) = (0.0, 1.0);
            for (l, sl) in s.iter_mut().enumerate() {
                if l > 0 {
                    let lf = (l - 1) as f64;
                    let p2 = ((2.0 * lf + 1.0) * x * p1 - lf * p0) / (lf + 1.0);
                    p0 = p1;
                    p1 = p2;
                }
                if k == 0 {
                    *sl += c as f64 * p1;
                } else if l % 2 == 0 {
                    *sl += 2.0 * c as f64 * p1;
                }
            }
        }
        s
    }
}

/// S_l = Σ over ordered pairs x, y ∈ Ê(n) of P_l(x̂ · ŷ).
pub fn pair_legendre_sum(pts: &LatticePointSet, l: u32) -> f64 {
    PairHistogram::new(pts).legendre_sums(l)[l as usize]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralEstimate {
    pub estimate: f64,
    pub tail_bound: f64,
    pub lmax: u32,
}

/// Σ_{1≤l≤Lmax} h̃_{r,R}(l)² (2l+1) S_l / N². The tail bound uses
/// |S_l| ≤ N² and the Parseval identity Σ_{l≥0} h̃(l)²(2l+1) = 4π/σ(A), so
/// it equals 4π/σ(A) − Σ_{l≤Lmax} h̃(l)²(2l+1) plus a rounding allowance.
pub fn spectral_variance(pts: &LatticePointSet, r: f64, big_r: f64, lmax: u32) -> Result<SpectralEstimate> {
    if pts.is_empty() {
        return domain("empty point set");
    }
    spectral_from_histogram(&PairHistogram::new(pts), r, big_r, lmax)
}

pub fn spectral_from_histogram(hist: &PairHistogram, r: f64, big_r: f64, lmax: u32) -> Result<SpectralEstimate> {
    if lmax < 1 {
        return domain("Lmax must be at least 1");
    }
    let sigma = annulus_volume(Space::Sphere, r, big_r)?;
    let h = shc_sphere_all(r, big_r, lmax)?;
    let s = hist.legendre_sums(lmax);
    let n2 = (hist.points as f64).powi(2);
    for l in (1..=lmax as usize).step_by(2) {
        assert_eq!(s[l], 0.0, "odd pair sum must vanish");
    }
    let mut estimate = 0.0;
    let mut parseval = 0.0;
    for l in 0..=lmax as usize {
        let w = h[l] * h[l] * (2 * l + 1) as f64;
        parseval += w;
        if l >= 1 {
            estimate += w * s[l] / n2;
        }
    }
    let total = 4.0 * PI / sigma;
    let tail_bound = (total - parseval).max(0.0) + 1e-12 * total * (lmax as f64 + 1.0);
    Ok(SpectralEstimate { estimate, tail_bound, lmax })
}

/// Spectral estimate for Ê(n).
pub fn variance_spectral_sphere(n: u64, r: f64, big_r: f64, lmax: u32) -> Result<SpectralEstimate> {
    spectral_variance(&lattice_set(n)?, r, big_r, lmax)
}

fn lattice_set(n: u64) -> Result<LatticePointSet> {
    if n == 0 || !representable(n) {
        return domain(format!("empty point set: E({n}) has no points"));
    }
    enumerate(n)
}

/// The object sets whose variance is measured.
#[derive(Debug, Clone, Copy)]
pub enum Objects<'a> {
    Sphere(&'a SphereIndex),
    Heegner(&'a [Complex64]),
    Geodesics(&'a [Geodesic]),
}

/// Monte Carlo moments of f(w) = (vol/vol(A))·(local)/(global) − 1 over
/// uniform centers w.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    /// mean of f²
    pub estimate: f64,
    pub stderr: f64,
    /// mean of f + 1, which the unfolding identity puts at 1
    pub first_moment: f64,
    pub first_moment_stderr: f64,
    pub samples: u64,
}

const BLOCK: u64 = 1024;

#[derive(Default, Clone, Copy)]
struct Acc {
    n: u64,
    s1: f64,
    s2: f64,
    s4: f64,
    err: f64,
}

impl Acc {
    fn push(&mut self, f: f64, err: f64) {
        self.n += 1;
        self.s1 += f;
        self.s2 += f * f;
        self.s4 += f * f * f * f;
        self.err += err;
    }

    fn merge(mut self, o: Acc) -> Acc {
        self.n += o.n;
        self.s1 += o.s1;
        self.s2 += o.s2;
        self.s4 += o.s4;
        self.err += o.err;
        self
    }

    fn finish(self) -> McEstimate {
        let n = self.n as f64;
        let m1 = self.s1 / n;
        let m2 = self.s2 / n;
        let var_f2 = (self.s4 / n - m2 * m2).max(0.0);
        let var_f = (m2 - m1 * m1).max(0.0);
        McEstimate {
            estimate: m2,
            stderr: (var_f2 / (n - 1.0).max(1.0)).sqrt() + self.err / n,
            first_moment: 1.0 + m1,
            first_moment_stderr: (var_f / (n - 1.0).max(1.0)).sqrt(),
            samples: self.n,
        }
    }
}

/// Runs `draw` over blocks with per-block streams and sums the blocks in
/// order, so the result does not depend on the thread count.
fn run_blocks<F>(samples: u64, src: RandomSource, draw: F) -> McEstimate
where
    F: Fn(&mut rand_chacha::ChaCha20Rng) -> (f64, f64) + Sync,
{
    let blocks = samples.div_ceil(BLOCK);
    let accs: Vec<Acc> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = src.chunk_rng(b);
            let mut acc = Acc::default();
            for _ in 0..BLOCK.min(samples - b * BLOCK) {
                let (f, e) = draw(&mut rng);
                acc.push(f, e);
            }
            acc
        })
        .collect();
    accs.into_iter().fold(Acc::default(), Acc::merge).finish()
}

/// Monte Carlo variance with kernel membership on Γ\H.
pub fn variance_montecarlo(objects: Objects<'_>, r: f64, big_r: f64, samples: u64, src: RandomSource) -> Result<McEstimate> {
    variance_montecarlo_with(objects, r, big_r, samples, src, Membership::Kernel)
}

pub fn variance_montecarlo_with(
    objects: Objects<'_>,
    r: f64,
    big_r: f64,
    samples: u64,
    src: RandomSource,
    membership: Membership,
) -> Result<McEstimate> {
    if samples < 100 {
        return domain(format!("samples must be at least 100, got {samples}"));
    }
    match objects {
        Objects::Sphere(index) => {
            if index.is_empty() {
                return domain("empty point set");
            }
            let scale = 4.0 * PI / annulus_volume(Space::Sphere, r, big_r)? / index.len() as f64;
            Ok(run_blocks(samples, src, |rng| {
                let w = sample_sphere_point(rng);
                (scale * index.count(&w, r, big_r) as f64 - 1.0, 0.0)
            }))
        }
        Objects::Heegner(points) => {
            if points.is_empty() {
                return domain("empty point set");
            }
            let scale = FD_VOLUME / annulus_volume(Space::Hyperbolic, r, big_r)? / points.len() as f64;
            Ok(run_blocks(samples, src, |rng| {
                let (w, _) = sample_fundamental_domain(rng);
                let c = match membership {
                    Membership::Kernel => kernel_count(points, w, r, big_r),
                    Membership::Quotient => points
                        .iter()
                        .filter(|z| {
                            let d = quotient_distance(**z, w).expect("points lie in H");
                            d >= r && d <= big_r
                        })
                        .count() as u64,
                };
                (scale * c as f64 - 1.0, 0.0)
            }))
        }
        Objects::Geodesics(geos) => {
            if geos.is_empty() {
                return domain("empty geodesic set");
            }
            let total: f64 = geos.iter().map(|g| g.length).sum();
            let scale = FD_VOLUME / annulus_volume(Space::Hyperbolic, r, big_r)? / total;
            Ok(run_blocks(samples, src, |rng| {
                let (w, _) = sample_fundamental_domain(rng);
                let mut len = 0.0;
                let mut err = 0.0;
                for g in geos {
                    let a = geodesic_annulus_length(g, w, r, big_r, membership).expect("valid annulus");
                    len += a.length;
                    err += a.error_bound;
                }
                let f = scale * len - 1.0;
                // widen by the first-order effect of the length error on f²
                let df = scale * err;
                (f, 2.0 * f.abs() * df + df * df)
            }))
        }
    }
}

/// Same statistic with the annulus moved by Haar-random rotations g of a
/// fixed annulus about (0, 0, 1), as in the SO(3) form of the conjecture.
pub fn variance_montecarlo_so3(index: &SphereIndex, r: f64, big_r: f64, samples: u64, src: RandomSource) -> Result<McEstimate> {
    if samples < 100 {
        return domain(format!("samples must be at least 100, got {samples}"));
    }
    if index.is_empty() {
        return domain("empty point set");
    }
    let scale = 4.0 * PI / annulus_volume(Space::Sphere, r, big_r)? / index.len() as f64;
    let pole: Vec3 = [0.0, 0.0, 1.0];
    Ok(run_blocks(samples, src, |rng| {
        let g = sample_rotation(rng);
        let w = g.apply(&pole);
        (scale * index.count(&w, r, big_r) as f64 - 1.0, 0.0)
    }))
}

/// Monte Carlo over fresh i.i.d. uniform point sets of size `points`, one
/// set per center, so each count is exactly Binomial(points, σ(A)/4π).
pub fn variance_random_points(points: u64, r: f64, big_r: f64, samples: u64, src: RandomSource) -> Result<McEstimate> {
    if samples < 100 {
        return domain(format!("samples must be at least 100, got {samples}"));
    }
    if points == 0 {
        return domain("empty point set");
    }
    let scale = 4.0 * PI / annulus_volume(Space::Sphere, r, big_r)? / points as f64;
    let (hi, lo) = (r.cos(), big_r.cos());
    Ok(run_blocks(samples, src, |rng| {
        let w = sample_sphere_point(rng);
        let mut c = 0u64;
        for _ in 0..points {
            let u = dot(&w, &sample_sphere_point(rng));
            if u >= lo && u <= hi {
                c += 1;
            }
        }
        (scale * c as f64 - 1.0, 0.0)
    }))
}

/// Exact variance of the normalized count for i.i.d. uniform points:
/// (1 − p)/(Np) with p = σ(A)/4π.
pub fn random_model_variance(points: u64, r: f64, big_r: f64) -> Result<f64> {
    let p = annulus_volume(Space::Sphere, r, big_r)? / (4.0 * PI);
    Ok((1.0 - p) / (points as f64 * p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    Lattice,
    Heegner,
    Geodesic,
    Random,
}

/// Assembled variance record for one object set and annulus.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceReport {
    pub kind: ObjectKind,
    /// n, D, or the size of the random point set
    pub id: i64,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    /// #points or total geodesic length
    pub size: f64,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    pub first_moment: f64,
    pub first_moment_stderr: f64,
    pub spectral_estimate: Option<f64>,
    pub spectral_tail_bound: Option<f64>,
    /// vol(space)/(vol(A)·size)
    pub prediction: f64,
    /// exact i.i.d. value (1 − p)/(Np), random and lattice kinds only
    pub random_model: Option<f64>,
    pub ratio_mc: f64,
    pub ratio_spectral: Option<f64>,
    pub samples: u64,
    pub seed: u64,
    pub stream: u64,
    #[serde(rename = "Lmax")]
    pub lmax: Option<u32>,
}

impl VarianceReport {
    /// |mc − spectral| ≤ 3·stderr + tail, when both are present.
    pub fn consistent(&self) -> Option<bool> {
        let s = self.spectral_estimate?;
        let t = self.spectral_tail_bound?;
        Some((self.mc_estimate - s).abs() <= 3.0 * self.mc_stderr + t)
    }
}

/// Report for Ê(n): Monte Carlo, spectral route and prediction.
pub fn brs_report(n: u64, r: f64, big_r: f64, samples: u64, lmax: u32, src: RandomSource) -> Result<VarianceReport> {
    let pts = lattice_set(n)?;
    if pts.is_empty() {
        return domain("empty point set");
    }
    let mc = variance_montecarlo(Objects::Sphere(&pts.index), r, big_r, samples, src)?;
    let spec = spectral_variance(&pts, r, big_r, lmax)?;
    let size = pts.len() as f64;
    let prediction = 4.0 * PI / (annulus_volume(Space::Sphere, r, big_r)? * size);
    Ok(VarianceReport {
        kind: ObjectKind::Lattice,
        id: n as i64,
        r,
        big_r,
        size,
        mc_estimate: mc.estimate,
        mc_stderr: mc.stderr,
        first_moment: mc.first_moment,
        first_moment_stderr: mc.first_moment_stderr,
        spectral_estimate: Some(spec.estimate),
        spectral_tail_bound: Some(spec.tail_bound),
        prediction,
        random_model: Some(random_model_variance(pts.len() as u64, r, big_r)?),
        ratio_mc: mc.estimate / prediction,
        ratio_spectral: Some(spec.estimate / prediction),
        samples,
        seed: src.seed,
        stream: src.stream,
        lmax: Some(lmax),
    })
}

/// Report for Λ_D: Heegner points for D < 0, closed geodesics for D > 0.
pub fn brs_report_discriminant(d: i64, r: f64, big_r: f64, samples: u64, src: RandomSource, membership: Membership) -> Result<VarianceReport> {
    let disc = Discriminant::new(d)?;
    let mu = annulus_volume(Space::Hyperbolic, r, big_r)?;
    let (kind, size, mc) = if d < 0 {
        let pts = heegner_points(disc)?;
        let mc = variance_montecarlo_with(Objects::Heegner(&pts), r, big_r, samples, src, membership)?;
        (ObjectKind::Heegner, pts.len() as f64, mc)
    } else {
        let geos = closed_geodesics(disc)?;
        let mc = variance_montecarlo_with(Objects::Geodesics(&geos), r, big_r, samples, src, membership)?;
        (ObjectKind::Geodesic, geos.iter().map(|g| g.length).sum(), mc)
    };
    let prediction = FD_VOLUME / (mu * size);
    Ok(VarianceReport {
        kind,
        id: d,
        r,
        big_r,
        size,
        mc_estimate: mc.estimate,
        mc_stderr: mc.stderr,
        first_moment: mc.first_moment,
        first_moment_stderr: mc.first_moment_stderr,
        spectral_estimate: None,
        spectral_tail_bound: None,
        prediction,
        random_model: None,
        ratio_mc: mc.estimate / prediction,
        ratio_spectral: None,
        samples,
        seed: src.seed,
        stream: src.stream,
        lmax: None,
    })
}

/// Report for `points` i.i.d. uniform points on S².
pub fn brs_report_random(points: u64, r: f64, big_r: f64, samples: u64, src: RandomSource) -> Result<VarianceReport> {
    let mc = variance_random_points(points, r, big_r, samples, src)?;
    let size = points as f64;
    let prediction = 4.0 * PI / (annulus_volume(Space::Sphere, r, big_r)? * size);
    Ok(VarianceReport {
        kind: ObjectKind::Random,
        id: points as i64,
        r,
        big_r,
        size,
        mc_estimate: mc.estimate,
        mc_stderr: mc.stderr,
        first_moment: mc.first_moment,
        first_moment_stderr: mc.first_moment_stderr,
        spectral_estimate: None,
        spectral_tail_bound: None,
        prediction,
        random_model: Some(random_model_variance(points, r, big_r)?),
        ratio_mc: mc.estimate / prediction,
        ratio_spectral: None,
        samples,
        seed: src.seed,
        stream: src.stream,
        lmax: None,
    })
}

/// The thirty (n, r, R) configurations of the Parseval regression grid.
pub fn regression_grid() -> Vec<(u64, f64, f64)> {
    const NS: [u64; 6] = [11, 19, 35, 59, 83, 107];
    const ANNULI: [(f64, f64); 5] = [(0.0, 0.5), (0.3, 0.6), (0.5, 0.7), (0.8, 0.9), (1.0, 1.4)];
    NS.iter().flat_map(|&n| ANNULI.iter().map(move |&(r, big_r)| (n, r, big_r))).collect()
}

/// Aggregate CSV with columns id,r,R,mc,mc_se,spec,tail,pred,ratio_mc,ratio_spec.
pub fn write_reports_csv<W: Write>(reports: &[VarianceReport], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "id,r,R,mc,mc_se,spec,tail,pred,ratio_mc,ratio_spec")?;
    let opt = |x: Option<f64>| x.map(f17).unwrap_or_default();
    for rep in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            rep.id,
            f17(rep.r),
            f17(rep.big_r),
            f17(rep.mc_estimate),
            f17(rep.mc_stderr),
            opt(rep.spectral_estimate),
            opt(rep.spectral_tail_bound),
            f17(rep.prediction),
            f17(rep.ratio_mc),
            opt(rep.ratio_spectral)
        )?;
    }
    Ok(())
}
