//! Independent reference computations shared by the integration suites.
//!
//! Nothing here calls the routine it is used to check; each oracle
//! recomputes its quantity from first principles.

#![allow(dead_code)]

use catpose::fusion::FeatureMap;
use catpose::metrics::OrientedBox3D;
use catpose::{Mat3, Vec3};
use nalgebra::{Rotation3, UnitQuaternion, Vector2};
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

pub fn random_rotation(rng: &mut impl Rng) -> Mat3 {
    // Uniform on SO(3) via a normalized Gaussian-free quaternion rejection.
    loop {
        let q = nalgebra::Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 1e-3 && n <= 1.0 {
            return UnitQuaternion::from_quaternion(q)
                .to_rotation_matrix()
                .into_inner();
        }
    }
}

pub fn random_unit(rng: &mut impl Rng) -> Vec3 {
    let r = random_rotation(rng);
    r.column(0).into_owned()
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box–Muller.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Geodesic angle in degrees from the chord length
/// `‖A − B‖_F = 2√2·sin(θ/2)`.
pub fn rotation_error_deg(a: &Mat3, b: &Mat3) -> f64 {
    let chord = (a - b).norm() / (2.0 * 2f64.sqrt());
    (2.0 * chord.min(1.0).asin()).to_degrees()
}

// ---------------------------------------------------------------- IoU

/// Monte-Carlo estimate of `vol(a ∩ b)` from `per_axis³` jittered samples:
/// one uniform point per cell of a regular grid laid over box `a` in its
/// own frame, each tested against `b`.
///
/// A cell lying wholly inside or wholly outside `b` classifies its sample
/// the same way wherever the jitter puts it, so only cells straddling `b`'s
/// boundary draw a random point. The estimate is identical in distribution
/// to drawing every sample.
pub struct VolumeEstimate {
    pub intersection: f64,
    /// Simple-random-sampling standard error of `intersection` at the
    /// supplied true volume; jittered sampling has variance at most this.
    pub standard_error: f64,
    pub samples: usize,
    /// Samples that needed a random draw.
    pub drawn: usize,
    pub hits: u64,
    /// `n·p` at the supplied true volume.
    pub expected_hits: f64,
    /// `√(n·p·(1 − p))`.
    pub hit_sigma: f64,
}

/// Integer range of `k` (as floats) with `|a + b·k| ≤ t`.
fn band(a: f64, b: f64, t: f64) -> (f64, f64) {
    if t < 0.0 {
        return (f64::INFINITY, f64::NEG_INFINITY);
    }
    if b == 0.0 {
        return if a.abs() <= t {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (f64::INFINITY, f64::NEG_INFINITY)
        };
    }
    let (p, q) = ((-t - a) / b, (t - a) / b);
    (p.min(q), p.max(q))
}

pub fn monte_carlo_intersection(
    a: &OrientedBox3D,
    b: &OrientedBox3D,
    exact_hint: f64,
    per_axis: usize,
    seed: u64,
) -> VolumeEstimate {
    // a-local point x maps to b-local m·x + o.
    let rb_t = b.pose.rotation.transpose();
    let m = rb_t * a.pose.rotation;
    let o = rb_t * (a.pose.translation - b.pose.translation);
    let hb = b.pose.size / 2.0;
    let lo = -a.pose.size / 2.0;
    let cell = a.pose.size / per_axis as f64;
    // Cell (i, j, k) maps to corner(i, j) + step·k + span·f, f ∈ [0, 1]³.
    let step = m.column(2) * cell.z;
    let span = Mat3::from_fn(|r, c| m[(r, c)] * cell[c]);
    let half =
        Vec3::from_fn(|r, _| 0.5 * (span[(r, 0)].abs() + span[(r, 1)].abs() + span[(r, 2)].abs()));
    let mid = Vec3::from_fn(|r, _| 0.5 * (span[(r, 0)] + span[(r, 1)] + span[(r, 2)]));
    let last = (per_axis - 1) as f64;

    let mut rng = SmallRng::seed_from_u64(seed);
    const SCALE: f64 = 1.0 / (1u64 << 21) as f64;
    let mut hits: u64 = 0;
    let mut drawn = 0usize;
    for i in 0..per_axis {
        for j in 0..per_axis {
            let x0 = lo.x + i as f64 * cell.x;
            let y0 = lo.y + j as f64 * cell.y;
            let corner = m * Vec3::new(x0, y0, lo.z) + o;
            let center = corner + mid;
            // Cells that may touch b, widened by one; cells surely inside,
            // narrowed by one.
            let (mut maybe_lo, mut maybe_hi) = (0.0f64, last);
            let (mut sure_lo, mut sure_hi) = (0.0f64, last);
            for r in 0..3 {
                let (p, q) = band(center[r], step[r], hb[r] + half[r]);
                maybe_lo = maybe_lo.max(p.floor() - 1.0);
                maybe_hi = maybe_hi.min(q.ceil() + 1.0);
                let (p, q) = band(center[r], step[r], hb[r] - half[r]);
                sure_lo = sure_lo.max(p.ceil() + 1.0);
                sure_hi = sure_hi.min(q.floor() - 1.0);
            }
            if maybe_lo > maybe_hi {
                continue;
            }
            let (k0, k1) = (maybe_lo as usize, maybe_hi as usize);
            for k in k0..=k1 {
                let kf = k as f64;
                if kf >= sure_lo && kf <= sure_hi {
                    hits += 1;
                    continue;
                }
                drawn += 1;
                let bits: u64 = rng.random();
                let fx = (bits & 0x1F_FFFF) as f64 * SCALE;
                let fy = ((bits >> 21) & 0x1F_FFFF) as f64 * SCALE;
                let fz = ((bits >> 42) & 0x1F_FFFF) as f64 * SCALE;
                let x = x0 + fx * cell.x;
                let y = y0 + fy * cell.y;
                let z = lo.z + (kf + fz) * cell.z;
                let l0 = m[(0, 0)] * x + m[(0, 1)] * y + m[(0, 2)] * z + o.x;
                let l1 = m[(1, 0)] * x + m[(1, 1)] * y + m[(1, 2)] * z + o.y;
                let l2 = m[(2, 0)] * x + m[(2, 1)] * y + m[(2, 2)] * z + o.z;
                hits += ((l0.abs() <= hb.x) & (l1.abs() <= hb.y) & (l2.abs() <= hb.z)) as u64;
            }
        }
    }
    let n = per_axis.pow(3);
    let va = a.volume();
    let p = (exact_hint / va).clamp(0.0, 1.0);
    VolumeEstimate {
        intersection: va * hits as f64 / n as f64,
        standard_error: va * (p * (1.0 - p) / n as f64).sqrt(),
        samples: n,
        drawn,
        hits,
        expected_hits: n as f64 * p,
        hit_sigma: (n as f64 * p * (1.0 - p)).sqrt(),
    }
}

/// Random box pair: uniform rotations, extents in `[0.05, 0.5]` m, center
/// offset of length in `[0, 0.6]` m.
pub fn random_box_pair(rng: &mut impl Rng) -> (OrientedBox3D, OrientedBox3D) {
    let mk = |rng: &mut dyn rand::RngCore, center: Vec3| {
        let mut rng = rng;
        let size = Vec3::from_fn(|_, _| rng.random_range(0.05..0.5));
        OrientedBox3D::new(catpose::Pose9DoF::new(random_rotation(&mut rng), center, size).unwrap())
    };
    let base = Vec3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let offset = random_unit(rng) * rng.random_range(0.0..0.6);
    let a = mk(rng, base);
    let b = mk(rng, base + offset);
    (a, b)
}

// ---------------------------------------------------------------- PnP

/// Pinhole projection, written out longhand.
pub fn project_scalar(
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    r: &Mat3,
    t: &Vec3,
    x: &Vec3,
) -> (f64, f64) {
    let px = r[(0, 0)] * x.x + r[(0, 1)] * x.y + r[(0, 2)] * x.z + t.x;
    let py = r[(1, 0)] * x.x + r[(1, 1)] * x.y + r[(1, 2)] * x.z + t.y;
    let pz = r[(2, 0)] * x.x + r[(2, 1)] * x.y + r[(2, 2)] * x.z + t.z;
    (fx * px / pz + cx, fy * py / pz + cy)
}

/// Box corners by explicit enumeration of the sign pattern.
pub fn corners_scalar(d: &Vec3) -> Vec<Vec3> {
    let mut out = Vec::new();
    for i in 0..8 {
        let sx = if i & 1 != 0 { 0.5 } else { -0.5 };
        let sy = if i & 2 != 0 { 0.5 } else { -0.5 };
        let sz = if i & 4 != 0 { 0.5 } else { -0.5 };
        out.push(Vec3::new(sx * d.x, sy * d.y, sz * d.z));
    }
    out
}

/// Multi-start Levenberg–Marquardt over (rotation vector, translation) with
/// a forward-difference Jacobian. Returns the best rotation and its cost.
pub fn multistart_pnp(
    kps: &[Vector2<f64>],
    dims: &Vec3,
    k: &catpose::CameraIntrinsics,
    starts: usize,
    seed: u64,
) -> (Mat3, Vec3, f64) {
    let model = corners_scalar(dims);
    let residuals = |p: &[f64; 6]| -> Option<[f64; 16]> {
        let r = Rotation3::new(Vec3::new(p[0], p[1], p[2])).into_inner();
        let t = Vec3::new(p[3], p[4], p[5]);
        let mut out = [0.0; 16];
        for (i, x) in model.iter().enumerate() {
            if (r * x + t).z <= 1e-6 {
                return None;
            }
            let (u, v) = project_scalar(k.fx, k.fy, k.cx, k.cy, &r, &t, x);
            out[2 * i] = u - kps[i].x;
            out[2 * i + 1] = v - kps[i].y;
        }
        Some(out)
    };
    let cost = |p: &[f64; 6]| residuals(p).map(|r| r.iter().map(|v| v * v).sum::<f64>());

    // Depth guess from apparent size, direction from the keypoint centroid.
    let cen = kps.iter().sum::<Vector2<f64>>() / kps.len() as f64;
    let spread = kps.iter().map(|p| (p - cen).norm()).sum::<f64>() / kps.len() as f64;
    let z0 = k.fx * dims.norm() / 2.0 / spread.max(1e-9) * 0.8;
    let t0 = Vec3::new((cen.x - k.cx) / k.fx * z0, (cen.y - k.cy) / k.fy * z0, z0);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<([f64; 6], f64)> = None;
    for _ in 0..starts {
        let w = Rotation3::from_matrix_unchecked(random_rotation(&mut rng)).scaled_axis();
        let mut p = [w.x, w.y, w.z, t0.x, t0.y, t0.z];
        let Some(mut c) = cost(&p) else { continue };
        let mut lambda = 1e-3;
        for _ in 0..300 {
            let r0 = residuals(&p).unwrap();
            let mut jac = nalgebra::SMatrix::<f64, 16, 6>::zeros();
            for j in 0..6 {
                let h = 1e-7 * p[j].abs().max(1.0);
                let mut q = p;
                q[j] += h;
                let Some(rq) = residuals(&q) else { continue };
                for i in 0..16 {
                    jac[(i, j)] = (rq[i] - r0[i]) / h;
                }
            }
            let rv = nalgebra::SVector::<f64, 16>::from_column_slice(&r0);
            let jtj = jac.transpose() * jac;
            let g = jac.transpose() * rv;
            let mut improved = false;
            for _ in 0..20 {
                let mut a = jtj;
                for d in 0..6 {
                    a[(d, d)] *= 1.0 + lambda;
                }
                let Some(step) = a.lu().solve(&(-g)) else {
                    break;
                };
                let mut q = p;
                for d in 0..6 {
                    q[d] += step[d];
                }
                match cost(&q) {
                    Some(cq) if cq < c => {
                        p = q;
                        let rel = (c - cq) / c;
                        c = cq;
                        lambda = (lambda * 0.3).max(1e-12);
                        improved = rel > 1e-15;
                        break;
                    }
                    _ => lambda *= 10.0,
                }
            }
            if !improved {
                break;
            }
        }
        if best.as_ref().is_none_or(|(_, bc)| c < *bc) {
            best = Some((p, c));
        }
    }
    let (p, c) = best.expect("at least one start in front of the camera");
    (
        Rotation3::new(Vec3::new(p[0], p[1], p[2])).into_inner(),
        Vec3::new(p[3], p[4], p[5]),
        c,
    )
}

// ---------------------------------------------------------------- fusion

/// Bilinear lookup from the four clamped neighbors, spelled out per point.
pub fn bilinear_brute(fmap: &FeatureMap, u: f64, v: f64) -> Vec<f64> {
    let w = fmap.width() as f64;
    let h = fmap.height() as f64;
    let uc = if u < 0.0 {
        0.0
    } else if u > w - 1.0 {
        w - 1.0
    } else {
        u
    };
    let vc = if v < 0.0 {
        0.0
    } else if v > h - 1.0 {
        h - 1.0
    } else {
        v
    };
    let x0 = uc.floor();
    let y0 = vc.floor();
    let x1 = if x0 + 1.0 > w - 1.0 {
        w - 1.0
    } else {
        x0 + 1.0
    };
    let y1 = if y0 + 1.0 > h - 1.0 {
        h - 1.0
    } else {
        y0 + 1.0
    };
    let ax = uc - x0;
    let ay = vc - y0;
    let f = |yy: f64, xx: f64| fmap.at(yy as usize, xx as usize).to_vec();
    let (f00, f10, f01, f11) = (f(y0, x0), f(y0, x1), f(y1, x0), f(y1, x1));
    (0..fmap.channels())
        .map(|c| {
            f00[c] * (1.0 - ax) * (1.0 - ay)
                + f10[c] * ax * (1.0 - ay)
                + f01[c] * (1.0 - ax) * ay
                + f11[c] * ax * ay
        })
        .collect()
}

// ---------------------------------------------------------------- mesh / MPL

/// Scalar-loop mesh-point loss.
pub fn mpl_scalar(gt: &[Vec3], pred: &[Vec3], r: &Mat3) -> f64 {
    let mut total = 0.0;
    for i in 0..gt.len() {
        let mut sq = 0.0;
        for row in 0..3 {
            let rg = r[(row, 0)] * gt[i].x + r[(row, 1)] * gt[i].y + r[(row, 2)] * gt[i].z;
            let d = rg - pred[i][row];
            sq += d * d;
        }
        total += sq;
    }
    total / gt.len() as f64
}

/// Distance from `p` to triangle `(a, b, c)`.
pub fn point_triangle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let n = (b - a).cross(&(c - a));
    let nn = n.norm_squared();
    // Inside the prism: distance to the plane.
    let bary = |q: &Vec3| {
        let v0 = b - a;
        let v1 = c - a;
        let v2 = q - a;
        let d00 = v0.dot(&v0);
        let d01 = v0.dot(&v1);
        let d11 = v1.dot(&v1);
        let d20 = v2.dot(&v0);
        let d21 = v2.dot(&v1);
        let den = d00 * d11 - d01 * d01;
        let v = (d11 * d20 - d01 * d21) / den;
        let w = (d00 * d21 - d01 * d20) / den;
        (1.0 - v - w, v, w)
    };
    let proj = p - n * (n.dot(&(p - a)) / nn);
    let (x, y, z) = bary(&proj);
    if x >= 0.0 && y >= 0.0 && z >= 0.0 {
        return (p - proj).norm();
    }
    let seg = |s: &Vec3, e: &Vec3| {
        let d = e - s;
        let t = ((p - s).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
        (p - (s + d * t)).norm()
    };
    seg(a, b).min(seg(b, c)).min(seg(c, a))
}

/// Replays greedy elimination by recomputing every weight from scratch at
/// each step. Returns the elimination order.
pub fn greedy_replay(points: &[Vec3], target: usize, r_max: f64) -> Vec<usize> {
    let n = points.len();
    let mut alive = vec![true; n];
    let mut order = Vec::new();
    while order.len() + target < n {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            let mut w = 0.0;
            for j in 0..n {
                if j == i || !alive[j] {
                    continue;
                }
                let d = (points[i] - points[j]).norm();
                if d < 2.0 * r_max {
                    w += (1.0 - d / (2.0 * r_max)).powi(8);
                }
            }
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((i, w));
            }
        }
        let (i, _) = best.unwrap();
        alive[i] = false;
        order.push(i);
    }
    order
}

pub fn min_pairwise_distance(points: &[Vec3]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.min((points[i] - points[j]).norm());
        }
    }
    best
}
