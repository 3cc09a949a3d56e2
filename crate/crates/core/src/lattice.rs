//! Integer points on the sphere x₁² + x₂² + x₃² = n, the class-number count
//! identity, Linnik-type minimal coordinates and the covering radius.

use crate::arith::{factorize, is_squarefree, isqrt, l1_chi, Discriminant};
use crate::error::{domain, Error, Result};
use crate::fmt::f17;
use crate::sphere::{angle, dot, normalize, sample_sphere_point, RandomSource, SphereIndex, Vec3};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

/// Largest n accepted by [`enumerate`].
pub const ENUMERATE_CAP: u64 = 1_000_000_000;

/// E(n) with its unit vectors Ê(n) and a spatial index over them.
#[derive(Debug, Clone)]
pub struct LatticePointSet {
    pub n: u64,
    pub points: Vec<[i64; 3]>,
    pub unit_points: Vec<Vec3>,
    pub index: SphereIndex,
}

/// n is a sum of three squares unless n = 4^a(8b + 7).
pub fn representable(mut n: u64) -> bool {
    if n == 0 {
        return true;
    }
    while n % 4 == 0 {
        n /= 4;
    }
    n % 8 != 7
}

/// Ordered triples x₁ ≥ x₂ ≥ x₃ ≥ 0 with x₁² + x₂² + x₃² = n.
fn ordered_triples(n: u64) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    let mut x3 = 0u64;
    while 3 * x3 * x3 <= n {
        let rest = n - x3 * x3;
        let mut x2 = x3;
        while 2 * x2 * x2 <= rest {
            let m = rest - x2 * x2;
            let x1 = isqrt(m);
            if x1 * x1 == m {
                out.push([x1 as i64, x2 as i64, x3 as i64]);
            }
            x2 += 1;
        }
        x3 += 1;
    }
    out
}

/// Number of distinct signed permutations of a triple.
fn orbit_size(t: &[i64; 3]) -> u64 {
    let nonzero = t.iter().filter(|&&x| x != 0).count() as u32;
    let perms = if t[0] == t[1] && t[1] == t[2] {
        1
    } else if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
        3
    } else {
        6
    };
    perms * (1u64 << nonzero)
}

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// All 48 signed coordinate permutations of a triple (with repeats).
pub fn signed_permutations(t: &[i64; 3]) -> impl Iterator<Item = [i64; 3]> + '_ {
    PERMS.iter().flat_map(move |p| {
        (0..8).map(move |s| {
            let sg = |k: usize| if s >> k & 1 == 1 { -1 } else { 1 };
            [sg(0) * t[p[0]], sg(1) * t[p[1]], sg(2) * t[p[2]]]
        })
    })
}

/// #E(n) without materializing the points.
pub fn count_points(n: u64) -> u64 {
    ordered_triples(n).iter().map(orbit_size).sum()
}

/// Complete solution set of x₁² + x₂² + x₃² = n in lexicographic order.
pub fn enumerate(n: u64) -> Result<LatticePointSet> {
    if n == 0 {
        return domain("n must be positive");
    }
    if n > ENUMERATE_CAP {
        return Err(Error::Resource(format!("n = {n} exceeds the enumeration cap {ENUMERATE_CAP}")));
    }
    let mut points: Vec<[i64; 3]> = ordered_triples(n).iter().flat_map(|t| signed_permutations(t).collect::<Vec<_>>()).collect();
    points.sort_unstable();
    points.dedup();
    let s = (n as f64).sqrt();
    let unit_points: Vec<Vec3> = points.iter().map(|p| [p[0] as f64 / s, p[1] as f64 / s, p[2] as f64 / s]).collect();
    let index = SphereIndex::new(unit_points.clone());
    Ok(LatticePointSet { n, points, unit_points, index })
}

impl LatticePointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV with columns n,x1,x2,x3,ux,uy,uz.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "n,x1,x2,x3,ux,uy,uz")?;
        for (p, u) in self.points.iter().zip(&self.unit_points) {
            writeln!(w, "{},{},{},{},{},{},{}", self.n, p[0], p[1], p[2], f17(u[0]), f17(u[1]), f17(u[2]))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CountCheck {
    pub n: u64,
    pub count: u64,
    pub h: u64,
    pub w: u32,
    pub formula_value: f64,
    pub rel_err: f64,
    pub agree: bool,
}

/// For squarefree n ≡ 3 (mod 8): #E(n) = 48 h(−n)/w₋ₙ exactly and
/// #E(n) = 24√n L(1, χ₋ₙ)/π within 1e−6 relative.
pub fn count_check(n: u64) -> Result<CountCheck> {
    if n % 8 != 3 {
        return domain(format!("count_check needs n = 3 mod 8, got n = {n} = {} mod 8", n % 8));
    }
    if !is_squarefree(n) {
        return domain(format!("count_check needs squarefree n, got {n}"));
    }
    let d = Discriminant::new(-(n as i64))?;
    let h = crate::modular::class_number(d)?;
    let w = d.units().expect("negative discriminant");
    let count = count_points(n);
    let formula_value = 24.0 * (n as f64).sqrt() * l1_chi(d) / PI;
    let rel_err = (count as f64 - formula_value).abs() / count as f64;
    let agree = count * w as u64 == 48 * h && rel_err <= 1e-6;
    Ok(CountCheck { n, count, h, w, formula_value, rel_err, agree })
}

/// m is a sum of two squares iff every prime ≡ 3 (mod 4) divides it to an
/// even power.
pub fn is_sum_of_two_squares(m: u64) -> bool {
    if m == 0 {
        return true;
    }
    factorize(m).iter().all(|&(p, e)| p % 4 != 3 || e % 2 == 0)
}

/// min over x ∈ E(n) of |x · w|; `None` means the default axis (0,0,1).
pub fn linnik_min(n: u64, w: Option<Vec3>) -> Result<f64> {
    if n == 0 || !representable(n) {
        return domain(format!("E({n}) is empty"));
    }
    match w {
        None => {
            let mut x3 = 0u64;
            loop {
                if is_sum_of_two_squares(n - x3 * x3) {
                    return Ok(x3 as f64);
                }
                x3 += 1;
            }
        }
        Some(w) => {
            let w = normalize(&w);
            let set = enumerate(n)?;
            Ok(min_abs_dot(&set.points, &w))
        }
    }
}

fn min_abs_dot(points: &[[i64; 3]], w: &Vec3) -> f64 {
    points.iter().map(|p| dot(&[p[0] as f64, p[1] as f64, p[2] as f64], w).abs()).fold(f64::INFINITY, f64::min)
}

/// Monte Carlo estimate of a probability with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
}

/// Fraction of Haar-random directions w with min_x |x·w| ≤ ψ.
pub fn rotated_linnik_measure(n: u64, psi: f64, samples: u64, src: RandomSource) -> Result<Estimate> {
    if samples == 0 {
        return domain("samples must be positive");
    }
    let set = enumerate(n)?;
    if set.is_empty() {
        return domain(format!("E({n}) is empty"));
    }
    let mut rng = src.rng();
    let mut hits = 0u64;
    for _ in 0..samples {
        let w = sample_sphere_point(&mut rng);
        if min_abs_dot(&set.points, &w) <= psi {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(Estimate { value: p, stderr: (p * (1.0 - p) / samples as f64).sqrt(), samples })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoveringRadius {
    pub n: u64,
    pub grid_resolution: u32,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Angle from w to the nearest point of the index.
pub fn nearest_angle(index: &SphereIndex, w: &Vec3) -> f64 {
    let n = index.len().max(1) as f64;
    let mut rad = (2.0 * (4.0 * PI / n).sqrt()).min(PI);
    loop {
        let mut best = f64::INFINITY;
        index.for_each_in(w, 0.0, rad, |i| best = best.min(angle(w, &index.points()[i])));
        if best.is_finite() || rad >= PI {
            return best;
        }
        rad = (2.0 * rad).min(PI);
    }
}

/// Covering radius of Ê(n) on a latitude–longitude grid with
/// Δθ = Δφ = π/N. Every direction lies within (Δθ + Δφ)/2 of a node and the
/// distance to Ê(n) is 1-Lipschitz, giving the bracket [lower, lower + π/N].
pub fn covering_radius(n: u64, grid_resolution: u32) -> Result<CoveringRadius> {
    if grid_resolution < 2 {
        return domain("grid_resolution must be at least 2");
    }
    let set = enumerate(n)?;
    if set.is_empty() {
        return domain(format!("E({n}) is empty"));
    }
    let nr = grid_resolution;
    let step = PI / nr as f64;
    let lower = (0..=nr)
        .into_par_iter()
        .map(|i| {
            let th = i as f64 * step;
            let (st, ct) = th.sin_cos();
            let nphi = if i == 0 || i == nr { 1 } else { 2 * nr };
            (0..nphi)
                .map(|j| {
                    let ph = j as f64 * step;
                    let w = [st * ph.cos(), st * ph.sin(), ct];
                    nearest_angle(&set.index, &w)
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(CoveringRadius { n, grid_resolution, estimate: lower, lower, upper: lower + step })
}

#[derive(Debug, Clone, Serialize)]
pub struct LinnikViolation {
    pub n: u64,
    pub min_x3: u64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinnikScan {
    pub lo: u64,
    pub hi: u64,
    pub exponent: f64,
    pub checked: u64,
    pub max_ratio: f64,
    pub violations: Vec<LinnikViolation>,
}

/// Checks min|x₃| ≤ n^exponent for every squarefree n ≡ 3 (mod 8) in
/// [lo, hi] and reports the violations.
pub fn linnik_scan(lo: u64, hi: u64, exponent: f64) -> Result<LinnikScan> {
    let ns: Vec<u64> = (lo..=hi).filter(|&n| n % 8 == 3 && is_squarefree(n)).collect();
    let results: Vec<(u64, u64)> = ns.par_iter().map(|&n| (n, linnik_min(n, None).map(|v| v as u64))).map(|(n, r)| r.map(|v| (n, v))).collect::<Result<_>>()?;
    let mut violations = Vec::new();
    let mut max_ratio = 0.0f64;
    for &(n, m) in &results {
        let bound = (n as f64).powf(exponent);
        max_ratio = max_ratio.max(m as f64 / bound);
        if m as f64 > bound {
            violations.push(LinnikViolation { n, min_x3: m, bound });
        }
    }
    Ok(LinnikScan { lo, hi, exponent, checked: results.len() as u64, max_ratio, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(n: u64) -> Vec<[i64; 3]> {
        let s = isqrt(n) as i64;
        let mut v = Vec::new();
        for a in -s..=s {
            for b in -s..=s {
                for c in -s..=s {
                    if (a * a + b * b + c * c) as u64 == n {
                        v.push([a, b, c]);
                    }
                }
            }
        }
        v
    }

    #[test]
    fn enumerate_examples() {
        let e3 = enumerate(3).unwrap();
        assert_eq!(e3.len(), 8);
        assert!(e3.points.iter().all(|p| p.iter().all(|x| x.abs() == 1)));
        assert!(enumerate(7).unwrap().is_empty());
        let e11 = enumerate(11).unwrap();
        assert_eq!(e11.len(), 24);
        assert!(e11.points.iter().all(|p| {
            let mut a = p.map(|x| x.abs());
            a.sort();
            a == [1, 1, 3]
        }));
        assert!(enumerate(0).is_err());
        assert!(matches!(enumerate(ENUMERATE_CAP + 1), Err(Error::Resource(_))));
    }

    #[test]
    fn enumerate_matches_brute_force() {
        for n in 1..=300 {
            let e = enumerate(n).unwrap();
            assert_eq!(e.points, brute(n), "n={n}");
            assert_eq!(count_points(n), e.len() as u64);
            assert_eq!(e.is_empty(), !representable(n));
        }
    }

    #[test]
    fn closure_parity_and_norms() {
        for n in 1..=10_000u64 {
            let e = enumerate(n).unwrap();
            assert_eq!(e.len() % 2, 0);
            for p in &e.points {
                assert_eq!((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) as u64, n);
                for q in signed_permutations(p) {
                    assert!(e.points.binary_search(&q).is_ok(), "n={n}");
                }
            }
            for u in &e.unit_points {
                assert!((dot(u, u).sqrt() - 1.0).abs() < 1e-12);
            }
            if !e.is_empty() {
                assert!(linnik_min(n, None).unwrap() <= (n as f64).sqrt());
            }
        }
    }

    #[test]
    fn count_check_examples() {
        let c = count_check(3).unwrap();
        assert_eq!((c.count, c.h, c.w), (8, 1, 6));
        assert!(c.agree);
        let c = count_check(11).unwrap();
        assert_eq!((c.count, c.h), (24, 1));
        assert!(c.agree);
        let c = count_check(19).unwrap();
        assert_eq!((c.count, c.h), (24, 1));
        assert!(count_check(7).is_err());
        assert!(count_check(75).is_err());
        for n in (3..5000).step_by(8).filter(|&n| is_squarefree(n)) {
            assert!(count_check(n).unwrap().agree, "n={n}");
        }
    }

    #[test]
    fn linnik_examples() {
        assert_eq!(linnik_min(3, None).unwrap(), 1.0);
        assert_eq!(linnik_min(11, None).unwrap(), 1.0);
        assert_eq!(linnik_min(67, None).unwrap(), 3.0);
        assert!(linnik_min(7, None).is_err());
        // the explicit axis agrees with the fast path
        for n in [3u64, 11, 19, 67, 101, 1003] {
            let a = linnik_min(n, Some([0.0, 0.0, 1.0])).unwrap();
            assert_eq!(a, linnik_min(n, None).unwrap());
            let set = enumerate(n).unwrap();
            let brute = set.points.iter().map(|p| p[2].abs()).min().unwrap() as f64;
            assert_eq!(a, brute);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn linnik_fast_path_matches_enumeration(n in 1u64..20_000) {
            prop_assume!(representable(n));
            let set = enumerate(n).unwrap();
            let brute = set.points.iter().map(|p| p[2].abs()).min().unwrap() as f64;
            prop_assert_eq!(linnik_min(n, None).unwrap(), brute);
        }
    }

    #[test]
    fn rotated_measure_trivial_cases() {
        let src = RandomSource::new(1, 0);
        assert_eq!(rotated_linnik_measure(11, 11f64.sqrt(), 1000, src).unwrap().value, 1.0);
        assert_eq!(rotated_linnik_measure(11, 0.0, 1000, src).unwrap().value, 0.0);
        // the twelve bands |x·w| ≤ 1 already cover S² for n = 11
        assert_eq!(rotated_linnik_measure(11, 1.0, 10_000, src).unwrap().value, 1.0);
    }

    #[test]
    fn rotated_measure_against_grid_quadrature() {
        let n = 11;
        let psi = 0.5;
        let src = RandomSource::new(42, 0);
        let est = rotated_linnik_measure(n, psi, 100_000, src).unwrap();
        assert_eq!(est.value, rotated_linnik_measure(n, psi, 100_000, src).unwrap().value);
        assert!(est.value > 0.0 && est.value < 1.0);
        // midpoint rule in (cos θ, φ), which is area-uniform
        let set = enumerate(n).unwrap();
        let m = 1500;
        let mut inside = 0u64;
        for i in 0..m {
            let z = -1.0 + (2.0 * i as f64 + 1.0) / m as f64;
            let s = (1.0 - z * z).sqrt();
            for j in 0..2 * m {
                let ph = PI * (2.0 * j as f64 + 1.0) / (2 * m) as f64;
                if min_abs_dot(&set.points, &[s * ph.cos(), s * ph.sin(), z]) <= psi {
                    inside += 1;
                }
            }
        }
        let quad = inside as f64 / (2 * m * m) as f64;
        assert!((est.value - quad).abs() < 3.0 * est.stderr + 1e-3, "{} vs {}", est.value, quad);
    }

    #[test]
    fn covering_radius_examples() {
        let target = (1.0 / 3f64.sqrt()).acos();
        for n in [1u64, 3] {
            let c = covering_radius(n, 400).unwrap();
            assert!(c.lower <= target + 1e-12 && target <= c.upper, "{c:?}");
            assert!(c.upper - c.lower < 1e-2);
        }
        let a = covering_radius(3, 100).unwrap();
        let b = covering_radius(3, 200).unwrap();
        assert!(((a.upper - a.lower) / (b.upper - b.lower) - 2.0).abs() < 1e-12);
        assert!(covering_radius(7, 10).is_err());
    }

    #[test]
    fn csv_export() {
        let mut buf = Vec::new();
        enumerate(3).unwrap().write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "n,x1,x2,x3,ux,uy,uz");
        assert_eq!(lines.len(), 9);
        assert!(lines[1].starts_with("3,-1,-1,-1,-5.7735026918962584e-1"));
    }

    #[test]
    fn linnik_scan_small() {
        let s = linnik_scan(1000, 5000, 0.5 - 1.0 / 18.0).unwrap();
        assert!(s.checked > 0);
        assert!(s.violations.iter().all(|v| v.min_x3 as f64 > v.bound));
    }
}
