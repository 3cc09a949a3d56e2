//! Spherical and hyperbolic annuli, Haar sampling and annulus counting.

use crate::error::{domain, Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};
use serde::Serialize;
use std::f64::consts::PI;

pub type Vec3 = [f64; 3];

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

fn check_unit(v: &Vec3) -> Result<()> {
    if (norm(v) - 1.0).abs() > 1e-9 {
        return domain(format!("vector {v:?} is not a unit vector"));
    }
    Ok(())
}

/// Great-circle angle between two unit vectors, in [0, π].
pub fn spherical_theta(z: &Vec3, zeta: &Vec3) -> Result<f64> {
    check_unit(z)?;
    check_unit(zeta)?;
    Ok(angle(z, zeta))
}

/// Angle between two vectors without the unit check; atan2 keeps full
/// accuracy near 0 and π where arccos does not.
pub fn angle(a: &Vec3, b: &Vec3) -> f64 {
    norm(&cross(a, b)).atan2(dot(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Sphere,
    Hyperbolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Center {
    Sphere(Vec3),
    Hyperbolic { re: f64, im: f64 },
}

/// Normalized volume of {r ≤ dist ≤ R}: 4π(sin²(R/2) − sin²(r/2)) on S²,
/// 4π(sinh²(R/2) − sinh²(r/2)) on H.
pub fn annulus_volume(space: Space, r: f64, big_r: f64) -> Result<f64> {
    if !(r >= 0.0 && big_r > r) {
        return domain(format!("annulus needs 0 <= r < R, got r={r}, R={big_r}"));
    }
    let h = 0.5 * (big_r - r);
    let s = 0.5 * (big_r + r);
    match space {
        Space::Sphere => {
            if big_r > PI {
                return domain(format!("spherical annulus needs R <= pi, got {big_r}"));
            }
            Ok(4.0 * PI * h.sin() * s.sin())
        }
        Space::Hyperbolic => Ok(4.0 * PI * h.sinh() * s.sinh()),
    }
}

/// An annulus {r ≤ dist(·, center) ≤ R} with its measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnulusSpec {
    pub space: Space,
    pub center: Center,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub measure: f64,
}

impl AnnulusSpec {
    pub fn sphere(center: Vec3, r: f64, big_r: f64) -> Result<Self> {
        check_unit(&center)?;
        let measure = annulus_volume(Space::Sphere, r, big_r)?;
        Ok(AnnulusSpec { space: Space::Sphere, center: Center::Sphere(center), r, big_r, measure })
    }

    pub fn hyperbolic(center: Complex64, r: f64, big_r: f64) -> Result<Self> {
        if !(center.im > 0.0) {
            return domain(format!("center {center} is not in the upper half-plane"));
        }
        let measure = annulus_volume(Space::Hyperbolic, r, big_r)?;
        Ok(AnnulusSpec {
            space: Space::Hyperbolic,
            center: Center::Hyperbolic { re: center.re, im: center.im },
            r,
            big_r,
            measure,
        })
    }
}

/// Seed plus stream id for a counter-based ChaCha generator. Identical pairs
/// reproduce identical draws on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        RandomSource { seed, stream }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        self.chunk_rng(0)
    }

    /// Generator positioned at a disjoint block of the keystream, so that
    /// parallel chunks draw the same numbers whatever the thread count.
    pub fn chunk_rng(&self, chunk: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos((chunk as u128) << 40);
        rng
    }
}

/// Haar-uniform point on S².
pub fn sample_sphere_point<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    UnitSphere.sample(rng)
}

/// A rotation of R³ stored as an orthogonal matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(pub [[f64; 3]; 3]);

impl Rotation {
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
        Rotation([
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ])
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        let m = &self.0;
        [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
    }
}

/// Haar-uniform rotation: a normalized quaternion of four standard Gaussians.
pub fn sample_rotation<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
    Rotation::from_quaternion(q)
}

/// Proposal mass ∫_{-1/2}^{1/2} ∫_{√3/2}^∞ y⁻² dy dx of the fundamental-domain sampler.
pub const FD_PROPOSAL_MASS: f64 = 1.154_700_538_379_251_5;

/// μ(Γ\H) = π/3.
pub const FD_VOLUME: f64 = PI / 3.0;

/// μ-uniform point of the standard fundamental domain by rejection: x uniform
/// on [−1/2, 1/2], y with density ∝ y⁻² on [√3/2, ∞), accepted when |z| ≥ 1.
/// Returns the point and the number of proposals used.
pub fn sample_fundamental_domain<R: Rng + ?Sized>(rng: &mut R) -> (Complex64, u32) {
    let mut tries = 0;
    loop {
        tries += 1;
        let x: f64 = rng.random::<f64>() - 0.5;
        let u: f64 = 1.0 - rng.random::<f64>();
        let y = 0.5 * 3f64.sqrt() / u;
        if x * x + y * y >= 1.0 {
            return (Complex64::new(x, y), tries);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    SpherePoint,
    Rotation,
    FundamentalDomainPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sample {
    SpherePoint(Vec3),
    Rotation(Rotation),
    FundamentalDomainPoint(Complex64),
}

pub fn sample<R: Rng + ?Sized>(kind: SampleKind, rng: &mut R) -> Sample {
    match kind {
        SampleKind::SpherePoint => Sample::SpherePoint(sample_sphere_point(rng)),
        SampleKind::Rotation => Sample::Rotation(sample_rotation(rng)),
        SampleKind::FundamentalDomainPoint => Sample::FundamentalDomainPoint(sample_fundamental_domain(rng).0),
    }
}

/// Below this size the index scans linearly.
pub const LINEAR_FALLBACK: usize = 100;

#[derive(Debug, Clone)]
struct Band {
    // (longitude, point index) sorted by longitude
    entries: Vec<(f64, u32)>,
}

/// Latitude-band index over unit vectors. Each band is sorted by longitude so
/// a cap query touches only the bands and longitude window the cap can reach.
#[derive(Debug, Clone)]
pub struct SphereIndex {
    points: Vec<Vec3>,
    bands: Vec<Band>,
    band_width: f64,
}

fn polar(v: &Vec3) -> (f64, f64) {
    let theta = (v[0].hypot(v[1])).atan2(v[2]);
    let phi = v[1].atan2(v[0]);
    (theta, phi)
}

impl SphereIndex {
    pub fn new(points: Vec<Vec3>) -> Self {
        let nb = ((points.len() as f64).sqrt() * 0.5).clamp(1.0, 2048.0) as usize;
        Self::with_bands(points, nb)
    }

    pub fn with_bands(points: Vec<Vec3>, nbands: usize) -> Self {
        let nbands = nbands.max(1);
        let band_width = PI / nbands as f64;
        let mut bands = vec![Band { entries: Vec::new() }; nbands];
        if points.len() >= LINEAR_FALLBACK {
            for (i, p) in points.iter().enumerate() {
                let (t, f) = polar(p);
                let b = ((t / band_width) as usize).min(nbands - 1);
                bands[b].entries.push((f, i as u32));
            }
            for b in &mut bands {
                b.entries.sort_by(|x, y| x.0.total_cmp(&y.0));
            }
        }
        SphereIndex { points, bands, band_width }
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Calls `f` with the index of every point within angle `big_r` of the
    /// center (a superset filter followed by the exact test is left to `f`).
    fn candidates(&self, center: &Vec3, big_r: f64, mut f: impl FnMut(usize)) {
        if self.points.len() < LINEAR_FALLBACK || big_r >= 0.5 * PI {
            (0..self.points.len()).for_each(f);
            return;
        }
        let (tc, pc) = polar(center);
        let pad = 1e-9;
        let lo = (tc - big_r - pad).max(0.0);
        let hi = (tc + big_r + pad).min(PI);
        let b0 = (lo / self.band_width) as usize;
        let b1 = ((hi / self.band_width) as usize).min(self.bands.len() - 1);
        let through_pole = tc - big_r <= pad || tc + big_r >= PI - pad;
        let half = if through_pole {
            PI
        } else {
            let s = big_r.sin() / tc.sin();
            if s >= 1.0 {
                PI
            } else {
                s.asin() + pad
            }
        };
        for band in &self.bands[b0..=b1] {
            let e = &band.entries;
            if half >= PI {
                e.iter().for_each(|&(_, i)| f(i as usize));
                continue;
            }
            let mut window = |a: f64, b: f64| {
                let s = e.partition_point(|x| x.0 < a);
                let t = e.partition_point(|x| x.0 <= b);
                e[s..t].iter().for_each(|&(_, i)| f(i as usize));
            };
            let (a, b) = (pc - half, pc + half);
            if a < -PI {
                window(a + 2.0 * PI, PI);
                window(-PI, b);
            } else if b > PI {
                window(a, PI);
                window(-PI, b - 2.0 * PI);
            } else {
                window(a, b);
            }
        }
    }

    /// Number of points with r ≤ angle ≤ R, closed on both ends.
    pub fn count(&self, center: &Vec3, r: f64, big_r: f64) -> u64 {
        let mut n = 0;
        self.for_each_in(center, r, big_r, |_| n += 1);
        n
    }

    pub fn for_each_in(&self, center: &Vec3, r: f64, big_r: f64, mut f: impl FnMut(usize)) {
        self.candidates(center, big_r, |i| {
            let t = angle(center, &self.points[i]);
            if t >= r && t <= big_r {
                f(i);
            }
        });
    }
}

/// Point data for [`count_in_annulus`].
#[derive(Debug, Clone, Copy)]
pub enum PointCloud<'a> {
    Sphere(&'a SphereIndex),
    Hyperbolic(&'a [Complex64]),
}

/// Closed-annulus membership count. Hyperbolic points are counted on the
/// modular surface, i.e. by quotient distance.
pub fn count_in_annulus(points: PointCloud<'_>, a: &AnnulusSpec) -> Result<u64> {
    match (points, a.center) {
        (PointCloud::Sphere(idx), Center::Sphere(c)) => Ok(idx.count(&c, a.r, a.big_r)),
        (PointCloud::Hyperbolic(pts), Center::Hyperbolic { re, im }) => {
            let w = Complex64::new(re, im);
            let mut n = 0;
            for z in pts {
                let d = crate::modular::quotient_distance(*z, w)?;
                if d >= a.r && d <= a.big_r {
                    n += 1;
                }
            }
            Ok(n)
        }
        _ => Err(Error::Domain("point space does not match annulus space".into())),
    }
}
