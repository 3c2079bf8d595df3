use crate::geometry::Pose9DoF;
use crate::symmetry::SymmetryClass;
use crate::{Mat3, Vec3};

/// Points within this distance of a clipping plane count as on the plane.
const PLANE_EPS: f64 = 1e-12;

/// Corner quads of each box face, counter-clockwise seen from outside
/// (canonical corner order of `cuboid_corners`).
const FACES: [[usize; 4]; 6] = [
    [0, 4, 6, 2],
    [1, 3, 7, 5],
    [0, 1, 5, 4],
    [2, 6, 7, 3],
    [0, 2, 3, 1],
    [4, 5, 7, 6],
];

/// Box with extents `pose.size`, rotated by `pose.rotation` and centered at
/// `pose.translation`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedBox3D {
    pub pose: Pose9DoF,
}

impl OrientedBox3D {
    pub fn new(pose: Pose9DoF) -> Self {
        Self { pose }
    }

    pub fn volume(&self) -> f64 {
        self.pose.size.product()
    }

    /// The six bounding half-spaces `n·x ≤ d` with outward unit normals.
    pub fn half_spaces(&self) -> [(Vec3, f64); 6] {
        let r = &self.pose.rotation;
        let t = &self.pose.translation;
        let h = self.pose.size / 2.0;
        std::array::from_fn(|i| {
            let axis = i / 2;
            let n: Vec3 = r.column(axis).into_owned() * if i % 2 == 0 { 1.0 } else { -1.0 };
            (n, n.dot(t) + h[axis])
        })
    }

    /// Whether `p` lies inside or on the box.
    pub fn contains(&self, p: &Vec3) -> bool {
        let local = self.pose.rotation.transpose() * (p - self.pose.translation);
        let h = self.pose.size / 2.0;
        (0..3).all(|k| local[k].abs() <= h[k])
    }

    fn polytope(&self) -> Polytope {
        let c = self.pose.corners();
        Polytope {
            faces: FACES
                .iter()
                .map(|f| f.iter().map(|&i| c[i]).collect())
                .collect(),
        }
    }
}

/// Convex polytope as outward-oriented polygonal faces.
struct Polytope {
    faces: Vec<Vec<Vec3>>,
}

impl Polytope {
    /// Keeps the part with `n·x ≤ d`, closing the cut with a new face.
    fn clip(self, n: &Vec3, d: f64) -> Polytope {
        let outside = self
            .faces
            .iter()
            .flatten()
            .any(|p| n.dot(p) - d > PLANE_EPS);
        if !outside {
            return self;
        }
        let mut cap: Vec<Vec3> = Vec::new();
        let mut faces = Vec::with_capacity(self.faces.len() + 1);
        for face in &self.faces {
            let mut out = Vec::with_capacity(face.len() + 1);
            for (i, p) in face.iter().enumerate() {
                let q = &face[(i + 1) % face.len()];
                let (dp, dq) = (n.dot(p) - d, n.dot(q) - d);
                let (p_in, q_in) = (dp <= PLANE_EPS, dq <= PLANE_EPS);
                if p_in {
                    out.push(*p);
                    if dp.abs() <= PLANE_EPS {
                        cap.push(*p);
                    }
                }
                if p_in != q_in {
                    let t = (dp / (dp - dq)).clamp(0.0, 1.0);
                    let x = p + (q - p) * t;
                    out.push(x);
                    cap.push(x);
                }
            }
            if out.len() >= 3 {
                faces.push(out);
            }
        }
        if let Some(cap) = order_cap(cap, n) {
            faces.push(cap);
        }
        Polytope { faces }
    }

    /// Divergence-theorem volume: signed tetrahedra from a reference point
    /// to a fan triangulation of every face.
    fn volume(&self) -> f64 {
        let count = self.faces.iter().map(Vec::len).sum::<usize>();
        if count == 0 {
            return 0.0;
        }
        let reference = self.faces.iter().flatten().sum::<Vec3>() / count as f64;
        let mut six_v = 0.0;
        for face in &self.faces {
            let a = face[0] - reference;
            for w in face[1..].windows(2) {
                let (b, c) = (w[0] - reference, w[1] - reference);
                six_v += a.dot(&b.cross(&c));
            }
        }
        six_v / 6.0
    }
}

/// Dedupes the cut points and orders them counter-clockwise about `n`.
fn order_cap(mut pts: Vec<Vec3>, n: &Vec3) -> Option<Vec<Vec3>> {
    let mut unique: Vec<Vec3> = Vec::with_capacity(pts.len());
    for p in pts.drain(..) {
        if !unique
            .iter()
            .any(|q| (q - p).norm_squared() <= PLANE_EPS * PLANE_EPS)
        {
            unique.push(p);
        }
    }
    if unique.len() < 3 {
        return None;
    }
    let centroid = unique.iter().sum::<Vec3>() / unique.len() as f64;
    let helper = if n.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let e1 = n.cross(&helper).normalize();
    let e2 = n.cross(&e1);
    let mut keyed: Vec<(f64, Vec3)> = unique
        .into_iter()
        .map(|p| {
            let d = p - centroid;
            (d.dot(&e2).atan2(d.dot(&e1)), p)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    Some(keyed.into_iter().map(|(_, p)| p).collect())
}

/// Exact volume of `a ∩ b` in m³. Contact without overlap gives 0.
pub fn intersection_volume(a: &OrientedBox3D, b: &OrientedBox3D) -> f64 {
    let mut poly = a.polytope();
    for (n, d) in b.half_spaces() {
        poly = poly.clip(&n, d);
        if poly.faces.is_empty() {
            return 0.0;
        }
    }
    let v = poly.volume();
    if v <= PLANE_EPS * a.volume().min(b.volume()) {
        0.0
    } else {
        v
    }
}

/// Intersection over union of two oriented boxes, computed exactly by
/// clipping `a` against the six faces of `b`.
pub fn box_iou_3d(a: &OrientedBox3D, b: &OrientedBox3D) -> f64 {
    let inter = intersection_volume(a, b);
    let union = a.volume() + b.volume() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Best IoU over rotations of `a` about `b`'s symmetry axis.
///
/// For each symmetry rotation `S` (object frame of `b`), `a` keeps its
/// center and is re-oriented to `R_b·S·R_bᵀ·R_a`. `steps` discretizes
/// continuous symmetries; discrete ones use their cyclic group.
pub fn symmetric_box_iou(
    a: &OrientedBox3D,
    b: &OrientedBox3D,
    sym: &SymmetryClass,
    steps: usize,
) -> f64 {
    if *sym == SymmetryClass::None {
        return box_iou_3d(a, b);
    }
    let rb = &b.pose.rotation;
    let to_a: Mat3 = rb.transpose() * a.pose.rotation;
    sym.rotations(steps)
        .iter()
        .map(|s| {
            let mut rotated = a.clone();
            rotated.pose.rotation = rb * s * to_a;
            box_iou_3d(&rotated, b)
        })
        .fold(0.0, f64::max)
}
