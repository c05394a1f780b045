use super::{cross, dot, norm, sub, MeshError, TriMesh, Vec3};

/// Relative area below which a triangle counts as degenerate.
const DEGENERATE_RELATIVE_AREA: f64 = 1e-12;

/// Cotangent weight per mesh edge, indexed like [`TriMesh::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct CotanWeights {
    pub weights: Vec<f64>,
    /// Edges whose weight came out negative (obtuse opposite angles).
    pub negative_count: usize,
}

impl CotanWeights {
    pub fn get(&self, edge: usize) -> f64 {
        self.weights[edge]
    }
    pub fn negative_fraction(&self) -> f64 {
        if self.weights.is_empty() {
            0.0
        } else {
            self.negative_count as f64 / self.weights.len() as f64
        }
    }
}

pub fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * norm(cross(sub(b, a), sub(c, a)))
}

fn face_area(mesh: &TriMesh, f: usize) -> f64 {
    let [a, b, c] = mesh.triangles()[f];
    triangle_area(mesh.position(a), mesh.position(b), mesh.position(c))
}

/// Cotangent of the angle at `apex` between rays to `p` and `q`.
fn cot_at(apex: Vec3, p: Vec3, q: Vec3) -> f64 {
    let u = sub(p, apex);
    let v = sub(q, apex);
    dot(u, v) / norm(cross(u, v))
}

pub fn surface_area(mesh: &TriMesh) -> f64 {
    (0..mesh.num_faces()).map(|f| face_area(mesh, f)).sum()
}

fn check_degenerate(mesh: &TriMesh) -> Result<(), MeshError> {
    let areas: Vec<f64> = (0..mesh.num_faces()).map(|f| face_area(mesh, f)).collect();
    let mean = areas.iter().sum::<f64>() / areas.len() as f64;
    let threshold = DEGENERATE_RELATIVE_AREA * mean;
    match areas.iter().position(|&a| !(a > threshold)) {
        Some(face) => Err(MeshError::DegenerateTriangle { face, area: areas[face], threshold }),
        None => Ok(()),
    }
}

/// `w_ij = (cot a + cot b) / 2` over the angles opposite edge `ij`; a boundary
/// edge keeps its single term. Negative weights are kept as they are.
pub fn cotangent_weights(mesh: &TriMesh) -> Result<CotanWeights, MeshError> {
    check_degenerate(mesh)?;
    let tris = mesh.triangles();
    let weights: Vec<f64> = mesh
        .edges()
        .iter()
        .map(|e| {
            e.halfedges
                .iter()
                .flatten()
                .map(|&h| {
                    let t = tris[h / 3];
                    let k = h % 3;
                    let (a, b, apex) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
                    0.5 * cot_at(mesh.position(apex), mesh.position(a), mesh.position(b))
                })
                .sum()
        })
        .collect();
    let negative_count = weights.iter().filter(|&&w| w < 0.0).count();
    Ok(CotanWeights { weights, negative_count })
}

/// Cotangent Dirichlet energy `sum_ij w_ij (u_i - u_j)^2` of a per-vertex
/// function, evaluated triangle by triangle as `|grad u|^2 * area`. Triangles
/// with zero area contribute nothing.
pub fn dirichlet_energy(mesh: &TriMesh, values: &[f64]) -> f64 {
    mesh.triangles()
        .iter()
        .map(|&[a, b, c]| {
            let (pa, pb, pc) = (mesh.position(a), mesh.position(b), mesh.position(c));
            let n = cross(sub(pb, pa), sub(pc, pa));
            let twice_area = norm(n);
            if twice_area <= f64::MIN_POSITIVE {
                return 0.0;
            }
            // grad u * 2A = sum_i u_i (n_hat x e_i), e_i the edge opposite vertex i.
            let nh = [n[0] / twice_area, n[1] / twice_area, n[2] / twice_area];
            let ea = cross(nh, sub(pc, pb));
            let eb = cross(nh, sub(pa, pc));
            let ec = cross(nh, sub(pb, pa));
            let g = [
                values[a] * ea[0] + values[b] * eb[0] + values[c] * ec[0],
                values[a] * ea[1] + values[b] * eb[1] + values[c] * ec[1],
                values[a] * ea[2] + values[b] * eb[2] + values[c] * ec[2],
            ];
            dot(g, g) / (2.0 * twice_area)
        })
        .sum()
}

/// Mixed (Voronoi / obtuse-safe) area per vertex.
fn mixed_areas(mesh: &TriMesh) -> Vec<f64> {
    let mut area = vec![0.0; mesh.num_vertices()];
    for &[a, b, c] in mesh.triangles() {
        let p = [mesh.position(a), mesh.position(b), mesh.position(c)];
        let idx = [a, b, c];
        let total = triangle_area(p[0], p[1], p[2]);
        let angle_obtuse = |k: usize| dot(sub(p[(k + 1) % 3], p[k]), sub(p[(k + 2) % 3], p[k])) < 0.0;
        let obtuse = (0..3).find(|&k| angle_obtuse(k));
        for k in 0..3 {
            area[idx[k]] += match obtuse {
                Some(o) if o == k => total / 2.0,
                Some(_) => total / 4.0,
                None => {
                    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                    // Voronoi part: (|e_ki|^2 cot(angle at j) + |e_kj|^2 cot(angle at i)) / 8
                    let eki = sub(p[i], p[k]);
                    let ekj = sub(p[j], p[k]);
                    (dot(eki, eki) * cot_at(p[j], p[k], p[i]) + dot(ekj, ekj) * cot_at(p[i], p[k], p[j]))
                        / 8.0
                }
            };
        }
    }
    area
}

/// Area-weighted mean over interior vertices of `|sum_j w_ij (p_j - p_i)| / (2 A_i)`
/// with `A_i` the mixed area.
pub fn mean_curvature_feature(mesh: &TriMesh) -> Result<f64, MeshError> {
    let w = cotangent_weights(mesh)?;
    let mut lap = vec![[0.0; 3]; mesh.num_vertices()];
    for (e, edge) in mesh.edges().iter().enumerate() {
        let [i, j] = edge.vertices;
        let d = sub(mesh.position(j), mesh.position(i));
        for k in 0..3 {
            lap[i][k] += w.get(e) * d[k];
            lap[j][k] -= w.get(e) * d[k];
        }
    }
    let areas = mixed_areas(mesh);
    let (mut num, mut den) = (0.0, 0.0);
    for v in 0..mesh.num_vertices() {
        if mesh.is_boundary_vertex(v) {
            continue;
        }
        let h = norm(lap[v]) / (2.0 * areas[v]);
        num += areas[v] * h;
        den += areas[v];
    }
    if den > 0.0 {
        Ok(num / den)
    } else {
        Ok(0.0)
    }
}
