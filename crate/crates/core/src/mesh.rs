//! Triangle meshes and Poisson-disk vertex sampling by sample elimination.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::Vec3;

/// Faces with area at or below this (m²) are dropped at construction.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Candidates drawn per requested sample.
pub const CANDIDATE_FACTOR: usize = 4;

/// Exponent of the elimination weight `(1 − d / 2r)^α`.
pub const WEIGHT_EXPONENT: i32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Validates indices and drops degenerate faces.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if !vertices.iter().all(|v| v.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidMesh(
                "vertex coordinates must be finite".into(),
            ));
        }
        for (i, f) in faces.iter().enumerate() {
            if let Some(bad) = f.iter().find(|&&j| j >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "face {i} references vertex {bad} of {}",
                    vertices.len()
                )));
            }
        }
        let mut mesh = Self { vertices, faces };
        mesh.faces = (0..mesh.faces.len())
            .filter(|&i| mesh.face_area(i) > DEGENERATE_AREA)
            .map(|i| mesh.faces[i])
            .collect();
        Ok(mesh)
    }

    /// Origin-centered box with outward-facing triangles.
    pub fn cuboid(size: &Vec3) -> Result<Self> {
        let corners = crate::geometry::cuboid_corners(size)?;
        // Two triangles per face, counter-clockwise seen from outside.
        let faces = vec![
            [0, 4, 6],
            [0, 6, 2], // −x
            [1, 3, 7],
            [1, 7, 5], // +x
            [0, 1, 5],
            [0, 5, 4], // −y
            [2, 6, 7],
            [2, 7, 3], // +y
            [0, 2, 3],
            [0, 3, 1], // −z
            [4, 5, 7],
            [4, 7, 6], // +z
        ];
        Self::new(corners.to_vec(), faces)
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        self.faces[face].map(|i| self.vertices[i])
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        (b - a).cross(&(c - a)).norm() / 2.0
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Parses an ASCII OBJ file: `v` and triangular `f` records only; other
    /// records are ignored.
    pub fn parse_obj(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let mut tokens = line.split_whitespace();
            match tokens.next() {
                Some("v") => {
                    let coords = tokens
                        .take(3)
                        .map(|t| t.parse::<f64>().map_err(|e| parse_err(format!("{t}: {e}"))))
                        .collect::<Result<Vec<_>>>()?;
                    if coords.len() != 3 {
                        return Err(parse_err("vertex needs 3 coordinates".into()));
                    }
                    vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
                }
                Some("f") => {
                    let idx = tokens
                        .map(|t| {
                            let first = t.split('/').next().unwrap_or("");
                            let i: i64 =
                                first.parse().map_err(|e| parse_err(format!("{t}: {e}")))?;
                            // 1-based, negative counts back from the last vertex.
                            let resolved = if i > 0 {
                                i - 1
                            } else if i < 0 {
                                vertices.len() as i64 + i
                            } else {
                                -1
                            };
                            if resolved < 0 {
                                return Err(parse_err(format!("bad vertex index {i}")));
                            }
                            Ok(resolved as usize)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if idx.len() != 3 {
                        return Err(Error::InvalidMesh(format!(
                            "line {line_no}: face has {} vertices, only triangles are supported",
                            idx.len()
                        )));
                    }
                    faces.push([idx[0], idx[1], idx[2]]);
                }
                _ => {}
            }
        }
        Self::new(vertices, faces)
    }

    pub fn load_obj(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_obj(&crate::error::read_text(path.as_ref())?)
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        s
    }
}

/// Points sampled on a mesh surface, with the face each one came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledVertexSet {
    pub points: Vec<Vec3>,
    pub faces: Vec<usize>,
    pub source: String,
}

impl SampledVertexSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Whitespace-separated `x y z face` rows under a `# source:` header.
    pub fn to_table(&self) -> String {
        let mut s = format!("# source: {}\n# x y z face\n", self.source);
        for (p, f) in self.points.iter().zip(&self.faces) {
            let _ = writeln!(s, "{} {} {} {}", p.x, p.y, p.z, f);
        }
        s
    }

    pub fn from_table(text: &str) -> Result<Self> {
        let mut out = SampledVertexSet {
            points: Vec::new(),
            faces: Vec::new(),
            source: String::new(),
        };
        for (n, line) in text.lines().enumerate() {
            if let Some(src) = line.strip_prefix("# source:") {
                out.source = src.trim().to_string();
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: n + 1,
                message,
            };
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 4 {
                return Err(err(format!("expected 4 columns, got {}", cols.len())));
            }
            let num = |t: &str| t.parse::<f64>().map_err(|e| err(format!("{t}: {e}")));
            out.points
                .push(Vec3::new(num(cols[0])?, num(cols[1])?, num(cols[2])?));
            out.faces.push(
                cols[3]
                    .parse()
                    .map_err(|e| err(format!("{}: {e}", cols[3])))?,
            );
        }
        Ok(out)
    }
}

/// Maximum Poisson-disk radius for `count` samples on a surface of `area`.
pub fn max_radius(area: f64, count: usize) -> f64 {
    (area / (2.0 * 3f64.sqrt() * count as f64)).sqrt()
}

/// Elimination weight between two samples at distance `d`.
pub fn elimination_weight(d: f64, r_max: f64) -> f64 {
    let reach = 2.0 * r_max;
    if d < reach {
        (1.0 - d / reach).powi(WEIGHT_EXPONENT)
    } else {
        0.0
    }
}

/// `count` area-weighted uniform surface samples and their faces.
pub fn surface_candidates(
    mesh: &TriangleMesh,
    count: usize,
    rng: &mut impl Rng,
) -> Result<(Vec<Vec3>, Vec<usize>)> {
    if mesh.faces.is_empty() {
        return Err(Error::InvalidMesh(
            "mesh has no non-degenerate faces".into(),
        ));
    }
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    let mut points = Vec::with_capacity(count);
    let mut faces = Vec::with_capacity(count);
    for _ in 0..count {
        let x = rng.random::<f64>() * total;
        let f = cumulative
            .partition_point(|&c| c <= x)
            .min(mesh.faces.len() - 1);
        let [a, b, c] = mesh.triangle(f);
        let s = rng.random::<f64>().sqrt();
        let r2 = rng.random::<f64>();
        points.push(a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2));
        faces.push(f);
    }
    Ok((points, faces))
}

/// Outcome of greedy sample elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct Elimination {
    /// Surviving candidate indices, ascending.
    pub kept: Vec<usize>,
    /// Eliminated candidate indices, in elimination order.
    pub removed: Vec<usize>,
}

/// Repeatedly removes the candidate with the largest summed weight
/// [`elimination_weight`] to the remaining candidates (ties go to the lowest
/// index) until `target` remain.
///
/// Each weight is summed over neighbors in ascending index order and
/// recomputed from scratch when a neighbor disappears, so the result does
/// not depend on the update history.
pub fn eliminate(points: &[Vec3], target: usize, r_max: f64) -> Result<Elimination> {
    if target == 0 {
        return Err(Error::invalid("target sample count must be at least 1"));
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::invalid(format!(
            "radius must be positive, got {r_max}"
        )));
    }
    let n = points.len();
    if target >= n {
        return Ok(Elimination {
            kept: (0..n).collect(),
            removed: Vec::new(),
        });
    }
    let neighbors = neighbor_lists(points, 2.0 * r_max);
    let mut alive = vec![true; n];
    let weight_of = |i: usize, alive: &[bool]| -> f64 {
        neighbors[i]
            .iter()
            .filter(|(j, _)| alive[*j])
            .map(|(_, w)| *w)
            .sum()
    };
    let mut weights: Vec<f64> = (0..n).map(|i| weight_of(i, &alive)).collect();
    let mut heap: BinaryHeap<(HeapWeight, Reverse<usize>)> = (0..n)
        .map(|i| (HeapWeight(weights[i]), Reverse(i)))
        .collect();

    let mut removed = Vec::with_capacity(n - target);
    while removed.len() < n - target {
        let (HeapWeight(w), Reverse(i)) = heap.pop().expect("heap holds every live sample");
        if !alive[i] || w.to_bits() != weights[i].to_bits() {
            continue;
        }
        alive[i] = false;
        removed.push(i);
        for &(j, _) in &neighbors[i] {
            if alive[j] {
                weights[j] = weight_of(j, &alive);
                heap.push((HeapWeight(weights[j]), Reverse(j)));
            }
        }
    }
    Ok(Elimination {
        kept: (0..n).filter(|&i| alive[i]).collect(),
        removed,
    })
}

/// Poisson-disk sampling by sample elimination: `4·v` area-weighted
/// candidates reduced to `v` with [`eliminate`] at
/// `r_max = √(A / (2√3·v))`.
pub fn poisson_disk_sample(mesh: &TriangleMesh, v: usize, seed: u64) -> Result<SampledVertexSet> {
    if v == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (points, faces) = surface_candidates(mesh, CANDIDATE_FACTOR * v, &mut rng)?;
    let r_max = max_radius(mesh.area(), v);
    let elim = eliminate(&points, v, r_max)?;
    Ok(SampledVertexSet {
        points: elim.kept.iter().map(|&i| points[i]).collect(),
        faces: elim.kept.iter().map(|&i| faces[i]).collect(),
        source: format!("poisson-disk(v={v}, seed={seed})"),
    })
}

/// Per point, `(neighbor, weight)` pairs within `reach`, ascending neighbor
/// index.
fn neighbor_lists(points: &[Vec3], reach: f64) -> Vec<Vec<(usize, f64)>> {
    let cell = |p: &Vec3| -> [i64; 3] {
        [
            (p.x / reach).floor() as i64,
            (p.y / reach).floor() as i64,
            (p.z / reach).floor() as i64,
        ]
    };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }
    let r_max = reach / 2.0;
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let c = cell(p);
            let mut out = Vec::new();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let Some(bucket) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else {
                            continue;
                        };
                        for &j in bucket {
                            if j == i {
                                continue;
                            }
                            let d = (p - points[j]).norm();
                            if d < reach {
                                out.push((j, elimination_weight(d, r_max)));
                            }
                        }
                    }
                }
            }
            out.sort_by_key(|&(j, _)| j);
            out
        })
        .collect()
}

/// Total order on weights for the heap.
#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapWeight(f64);

impl Eq for HeapWeight {}

impl PartialOrd for HeapWeight {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapWeight {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
