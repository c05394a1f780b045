//! Structured test surfaces with known topology.
//!
//! The "flat torus" is a torus of revolution sampled on a conformal grid, so
//! its conformal module is known in closed form: with tube radius `r` and
//! centre radius `R`, the meridian cylinder has module
//! `r / sqrt(R^2 - r^2)`.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::mesh::{double_cover, norm, split_fans, CurvePath, MeshError, TriMesh, Vec3};

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// A generated surface with its admissible curves.
#[derive(Debug, Clone)]
pub struct Generated {
    pub mesh: TriMesh,
    pub curves: Vec<CurvePath>,
    /// Analytic circumference/height ratio of the single cylinder, when known.
    pub module: Option<f64>,
}

fn positive(name: &str, v: f64) -> Result<(), GenerateError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(GenerateError::BadParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Torus of revolution conformally equivalent to the flat torus with a
/// meridian of circumference `circumference` and a cross direction of length
/// `height`. The grid is uniform in conformal coordinates, `res` by `res`.
/// The returned curve is the meridian at angle zero.
pub fn flat_torus(circumference: f64, height: f64, res: usize) -> Result<Generated, GenerateError> {
    positive("circumference", circumference)?;
    positive("height", height)?;
    if res < 3 {
        return Err(GenerateError::BadParameter(format!("res must be at least 3, got {res}")));
    }
    let module = circumference / height;
    let tube = 1.0_f64;
    let centre = tube * (1.0 + 1.0 / (module * module)).sqrt();
    let c = (centre * centre - tube * tube).sqrt();
    let stretch = ((centre + tube) / (centre - tube)).sqrt();

    let n = res;
    let mut positions = Vec::with_capacity(n * n);
    for i in 0..n {
        let theta = 2.0 * PI * i as f64 / n as f64;
        for j in 0..n {
            // Conformal coordinate psi in [0, 2 pi module), mapped back to the tube angle.
            let psi = 2.0 * PI * module * j as f64 / n as f64;
            let a = psi * c / (2.0 * tube);
            let phi = 2.0 * (stretch * a.sin()).atan2(a.cos());
            let ring = centre + tube * phi.cos();
            positions.push([ring * theta.cos(), ring * theta.sin(), tube * phi.sin()]);
        }
    }
    let idx = |i: usize, j: usize| (i % n) * n + (j % n);
    let mut triangles = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mesh = TriMesh::new(positions, triangles)?;
    let meridian = CurvePath::closed((0..n).map(|j| idx(0, j)).collect());
    Ok(Generated { mesh, curves: vec![meridian], module: Some(module) })
}

/// Icosahedron vertices; subdivision keeps these as indices `0..12`.
fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let positions = raw.iter().map(|&p| normalize(p)).collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (positions, faces)
}

fn normalize(p: Vec3) -> Vec3 {
    let l = norm(p);
    [p[0] / l, p[1] / l, p[2] / l]
}

/// Unit icosphere after `subdivisions` rounds of 1-to-4 splitting, scaled to `radius`.
pub fn icosphere(radius: f64, subdivisions: usize) -> Result<TriMesh, GenerateError> {
    positive("radius", radius)?;
    let (mut positions, mut faces) = icosahedron();
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, positions: &mut Vec<Vec3>| -> usize {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (positions[a], positions[b]);
                positions.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                positions.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut positions);
            let bc = mid(b, c, &mut positions);
            let ca = mid(c, a, &mut positions);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let positions = positions.iter().map(|p| [p[0] * radius, p[1] * radius, p[2] * radius]).collect();
    Ok(TriMesh::new(positions, faces)?)
}

fn angle_between(a: Vec3, b: Vec3) -> f64 {
    let d = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (norm(a) * norm(b));
    d.clamp(-1.0, 1.0).acos()
}

/// Angular radius of punched holes.
const HOLE_RADIUS: f64 = 0.2;

/// Icosphere with `holes` disjoint disks removed around well-separated
/// icosahedron vertices (at most 12).
pub fn holed_sphere(holes: usize, subdivisions: usize) -> Result<Generated, GenerateError> {
    if holes == 0 || holes > 12 {
        return Err(GenerateError::BadParameter(format!("holes must be in 1..=12, got {holes}")));
    }
    if subdivisions < 2 {
        return Err(GenerateError::BadParameter("holed sphere needs at least 2 subdivisions".into()));
    }
    let sphere = icosphere(1.0, subdivisions)?;
    let p = sphere.positions();
    // Farthest-point order over the 12 icosahedron vertices, starting at 0.
    let mut centres = vec![0usize];
    while centres.len() < holes {
        let next = (0..12)
            .filter(|v| !centres.contains(v))
            .max_by(|&a, &b| {
                let da = centres.iter().map(|&c| angle_between(p[a], p[c])).fold(f64::INFINITY, f64::min);
                let db = centres.iter().map(|&c| angle_between(p[b], p[c])).fold(f64::INFINITY, f64::min);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("12 candidates");
        centres.push(next);
    }
    let inside = |v: usize| centres.iter().any(|&c| angle_between(p[v], p[c]) < HOLE_RADIUS);
    let kept: Vec<[usize; 3]> =
        sphere.triangles().iter().copied().filter(|t| !t.iter().any(|&v| inside(v))).collect();
    let (positions, triangles, _) = split_fans(p, &kept, |_, _| false);
    let mesh = TriMesh::new(positions, triangles)?;
    Ok(Generated { mesh, curves: Vec::new(), module: None })
}

/// Closed surface built by doubling a bordered mesh; its curves are the seams.
pub fn doubled(mesh: &TriMesh) -> Result<Generated, GenerateError> {
    let cover = double_cover(mesh)?;
    let curves = cover.seams.iter().cloned().map(CurvePath::closed).collect();
    Ok(Generated { mesh: cover.mesh, curves, module: None })
}

/// Genus-2 surface: the double of a three-holed sphere, with its three seams
/// as a full pants decomposition.
pub fn genus2(subdivisions: usize) -> Result<Generated, GenerateError> {
    doubled(&holed_sphere(3, subdivisions)?.mesh)
}

/// Open right circular cylinder (intrinsically flat), `around` by `rings`
/// quads. Vertex `(i, j)` is `j * around + i`, ring `j` at height
/// `height * j / rings`.
pub fn flat_cylinder(around: usize, rings: usize, radius: f64, height: f64) -> Result<TriMesh, GenerateError> {
    positive("radius", radius)?;
    positive("height", height)?;
    if around < 3 || rings < 1 {
        return Err(GenerateError::BadParameter("cylinder needs around >= 3 and rings >= 1".into()));
    }
    let mut positions = Vec::new();
    for j in 0..=rings {
        for i in 0..around {
            let a = 2.0 * PI * i as f64 / around as f64;
            positions.push([radius * a.cos(), radius * a.sin(), height * j as f64 / rings as f64]);
        }
    }
    let idx = |i: usize, j: usize| j * around + (i % around);
    let mut triangles = Vec::new();
    for j in 0..rings {
        for i in 0..around {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    Ok(TriMesh::new(positions, triangles)?)
}

/// Planar `n` by `n` grid on the unit square.
pub fn plane_patch(n: usize) -> Result<TriMesh, GenerateError> {
    if n < 2 {
        return Err(GenerateError::BadParameter("plane patch needs n >= 2".into()));
    }
    let mut positions = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            positions.push([i as f64 / n as f64, j as f64 / n as f64, 0.0]);
        }
    }
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    Ok(TriMesh::new(positions, triangles)?)
}

/// Unit cube, two triangles per face.
pub fn unit_cube() -> TriMesh {
    let positions = (0..8)
        .map(|i| [(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64])
        .collect();
    let quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
    let triangles = quads.iter().flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]).collect();
    TriMesh::new(positions, triangles).expect("cube is a valid mesh")
}

/// Gaussian perturbation of every vertex, `sigma` relative to the mean edge length.
pub fn jitter(mesh: &TriMesh, sigma: f64, seed: u64) -> TriMesh {
    if sigma == 0.0 {
        return mesh.clone();
    }
    let mean_edge = mesh
        .edges()
        .iter()
        .map(|e| mesh.edge_length(e.vertices[0], e.vertices[1]))
        .sum::<f64>()
        / mesh.num_edges() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma * mean_edge).expect("finite sigma");
    let positions = mesh
        .positions()
        .iter()
        .map(|p| [p[0] + normal.sample(&mut rng), p[1] + normal.sample(&mut rng), p[2] + normal.sample(&mut rng)])
        .collect();
    mesh.with_positions(positions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::surface_area;

    #[test]
    fn flat_torus_topology() {
        let g = flat_torus(3.0, 1.0, 16).unwrap();
        let t = g.mesh.topology();
        assert_eq!((t.euler, t.genus, t.boundary_loops.len()), (0, 1, 0));
        assert_eq!(g.curves[0].vertices.len(), 16);
        g.curves[0].check_embedded(&g.mesh).unwrap();
    }

    #[test]
    fn holed_sphere_topology() {
        for holes in [1, 2, 3, 6] {
            let g = holed_sphere(holes, 3).unwrap();
            let t = g.mesh.topology();
            assert_eq!(t.genus, 0);
            assert_eq!(t.boundary_loops.len(), holes);
            assert_eq!(t.euler, 2 - holes as i64);
        }
    }

    #[test]
    fn genus2_topology() {
        let g = genus2(2).unwrap();
        let t = g.mesh.topology();
        assert_eq!((t.euler, t.genus, t.boundary_loops.len()), (-2, 2, 0));
        assert_eq!(g.curves.len(), 3);
    }

    #[test]
    fn cube_area() {
        assert!((surface_area(&unit_cube()) - 6.0).abs() < 1e-12);
        assert!(unit_cube().is_closed());
    }

    #[test]
    fn bad_parameters() {
        assert!(matches!(flat_torus(-1.0, 1.0, 8), Err(GenerateError::BadParameter(_))));
        assert!(matches!(holed_sphere(13, 3), Err(GenerateError::BadParameter(_))));
        assert!(matches!(flat_cylinder(2, 1, 1.0, 1.0), Err(GenerateError::BadParameter(_))));
    }

    #[test]
    fn jitter_is_deterministic() {
        let m = icosphere(1.0, 1).unwrap();
        assert_eq!(jitter(&m, 0.1, 7).positions(), jitter(&m, 0.1, 7).positions());
        assert_ne!(jitter(&m, 0.1, 7).positions(), jitter(&m, 0.1, 8).positions());
    }
}
