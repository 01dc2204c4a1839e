//! Structured generators for high-order reference meshes: the swimmer
//! channel with two half-disks, and rectangles for verification problems.
//!
//! Every block of a generated mesh is the image of a logical grid under a
//! smooth block map; high-order nodes are placed by mapping the logical
//! lattice of each triangle, so curved boundaries and interfaces are
//! followed exactly at the nodes.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::mapping::SwimmerGeometry;
use crate::mesh::{triangle_lattice, FaceTag, ReferenceMesh};
use crate::{Error, Result};

/// Incremental builder deduplicating nodes by position.
struct MeshBuilder {
    k: usize,
    lattice: Vec<[f64; 2]>,
    nodes: Vec<[f64; 2]>,
    lookup: HashMap<(i64, i64), Vec<usize>>,
    elements: Vec<Vec<usize>>,
}

const MERGE_TOL: f64 = 1e-10;
const CELL: f64 = 1e-7;

impl MeshBuilder {
    fn new(k: usize) -> Self {
        MeshBuilder {
            k,
            lattice: triangle_lattice(k),
            nodes: Vec::new(),
            lookup: HashMap::new(),
            elements: Vec::new(),
        }
    }

    fn node(&mut self, p: [f64; 2]) -> usize {
        let key = ((p[0] / CELL).floor() as i64, (p[1] / CELL).floor() as i64);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.lookup.get(&(key.0 + dx, key.1 + dy)) {
                    for &i in ids {
                        let q = self.nodes[i];
                        if (q[0] - p[0]).abs() < MERGE_TOL && (q[1] - p[1]).abs() < MERGE_TOL {
                            return i;
                        }
                    }
                }
            }
        }
        self.nodes.push(p);
        let id = self.nodes.len() - 1;
        self.lookup.entry(key).or_default().push(id);
        id
    }

    /// Adds the triangle with logical vertices `v` under `map`, reordering the
    /// vertices so that the physical element is counter-clockwise.
    fn triangle(&mut self, v: [[f64; 2]; 3], map: &dyn Fn([f64; 2]) -> [f64; 2]) {
        let p: Vec<[f64; 2]> = v.iter().map(|&q| map(q)).collect();
        let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
        let v = if area2 > 0.0 { v } else { [v[0], v[2], v[1]] };
        let lattice = self.lattice.clone();
        let ids = lattice
            .iter()
            .map(|l| {
                let q = [
                    v[0][0] + l[0] * (v[1][0] - v[0][0]) + l[1] * (v[2][0] - v[0][0]),
                    v[0][1] + l[0] * (v[1][1] - v[0][1]) + l[1] * (v[2][1] - v[0][1]),
                ];
                self.node(map(q))
            })
            .collect();
        self.elements.push(ids);
    }

    /// Adds a logical quad `[s0, s1] × [t0, t1]` as two triangles.
    fn quad(&mut self, s: (f64, f64), t: (f64, f64), flip: bool, map: &dyn Fn([f64; 2]) -> [f64; 2]) {
        let (a, b, c, d) = ([s.0, t.0], [s.1, t.0], [s.1, t.1], [s.0, t.1]);
        if flip {
            self.triangle([a, b, d], map);
            self.triangle([b, c, d], map);
        } else {
            self.triangle([a, b, c], map);
            self.triangle([a, c, d], map);
        }
    }

    /// Tags boundary faces with `tagger(a, b)` (end vertices) and builds the
    /// mesh.
    fn finish(self, tagger: impl Fn([f64; 2], [f64; 2]) -> Option<FaceTag>) -> Result<ReferenceMesh> {
        let mut count: HashMap<(usize, usize), (usize, usize, usize)> = HashMap::new();
        for (e, el) in self.elements.iter().enumerate() {
            for lf in 0..3 {
                let (a, b) = (el[lf], el[(lf + 1) % 3]);
                let entry = count.entry((a.min(b), a.max(b))).or_insert((0, e, lf));
                entry.0 += 1;
            }
        }
        let mut boundary = Vec::new();
        let mut keys: Vec<_> = count.iter().filter(|(_, v)| v.0 == 1).map(|(k, v)| (*k, *v)).collect();
        keys.sort_unstable();
        for ((a, b), (_, e, lf)) in keys {
            let tag = tagger(self.nodes[a], self.nodes[b]).ok_or_else(|| {
                Error::Invalid(format!(
                    "generated boundary face {:?}-{:?} matches no boundary",
                    self.nodes[a], self.nodes[b]
                ))
            })?;
            boundary.push((e, lf, tag));
        }
        ReferenceMesh::new(self.k, self.nodes, self.elements, &boundary)
    }
}

/// Resolution of the swimmer mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SwimmerMeshSpec {
    /// Element degree.
    pub k: usize,
    /// Divisions of every vertical block side (`0 <= y <= H`).
    pub n_y: usize,
    /// Divisions of the top side of each sphere block.
    pub n_top: usize,
    /// Radial layers between the sphere and the `r_out` circle.
    pub n_r: usize,
    /// Layers between the `r_out` circle and the sphere block boundary.
    pub n_ring: usize,
    /// Columns of each outer rectangular block.
    pub n_x_outer: usize,
    /// Columns of the middle rectangular block.
    pub n_x_middle: usize,
}

impl Default for SwimmerMeshSpec {
    fn default() -> Self {
        SwimmerMeshSpec {
            k: 3,
            n_y: 5,
            n_top: 2,
            n_r: 3,
            n_ring: 2,
            n_x_outer: 6,
            n_x_middle: 4,
        }
    }
}

impl SwimmerMeshSpec {
    /// Multiplies every division count by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        let f = factor.max(1);
        SwimmerMeshSpec {
            k: self.k,
            n_y: self.n_y * f,
            n_top: self.n_top * f,
            n_r: self.n_r * f,
            n_ring: self.n_ring * f,
            n_x_outer: self.n_x_outer * f,
            n_x_middle: self.n_x_middle * f,
        }
    }

    /// Number of triangles the generator produces.
    pub fn element_count(&self) -> usize {
        let n_theta = 2 * self.n_y + self.n_top;
        2 * (2 * n_theta * (self.n_r + self.n_ring) + self.n_y * (2 * self.n_x_outer + self.n_x_middle))
    }
}

/// Generates the swimmer reference mesh: conforming with the `r_out`
/// circles and the `r_int` strip lines, boundary faces tagged (inlet
/// Dirichlet at `x = -L`, outlet Neumann at `x = L`, no-slip Dirichlet on
/// the spheres, slip on the top wall and the symmetry axis) and interface
/// faces flagged.
pub fn swimmer_mesh(geom: &SwimmerGeometry, spec: &SwimmerMeshSpec) -> Result<ReferenceMesh> {
    geom.validate()?;
    if spec.n_y == 0 || spec.n_top == 0 || spec.n_r == 0 || spec.n_ring == 0 || spec.n_x_outer == 0 || spec.n_x_middle == 0 {
        return Err(Error::Invalid("all mesh division counts must be positive".into()));
    }
    let g = *geom;
    let mut b = MeshBuilder::new(spec.k);
    let breaks = g.strip_breaks();
    let h = g.h;

    // Rectangular blocks: [-L, b0], [b1, b2], [b3, L].
    for &(xa, xb, nx) in &[
        (-g.l, breaks[0], spec.n_x_outer),
        (breaks[1], breaks[2], spec.n_x_middle),
        (breaks[3], g.l, spec.n_x_outer),
    ] {
        let map = move |q: [f64; 2]| [xa + q[0] * (xb - xa), q[1] * h];
        for i in 0..nx {
            for j in 0..spec.n_y {
                let s = (i as f64 / nx as f64, (i + 1) as f64 / nx as f64);
                let t = (j as f64 / spec.n_y as f64, (j + 1) as f64 / spec.n_y as f64);
                b.quad(s, t, (i + j) % 2 == 1, &map);
            }
        }
    }

    // Sphere blocks.
    let n_theta = 2 * spec.n_y + spec.n_top;
    for c in g.centres() {
        let w = g.r_int;
        let corner = h.atan2(w);
        // Angle of perimeter parameter s ∈ [0, n_theta] on the inner circle.
        let ny = spec.n_y as f64;
        let nt = spec.n_top as f64;
        let theta = move |s: f64| {
            if s <= ny {
                corner * s / ny
            } else if s <= ny + nt {
                corner + (PI - 2.0 * corner) * (s - ny) / nt
            } else {
                PI - corner + corner * (s - ny - nt) / ny
            }
        };
        // Point of the block boundary (right side up, top leftwards, left side down).
        let outer = move |s: f64| {
            if s <= ny {
                [c[0] + w, h * s / ny]
            } else if s <= ny + nt {
                [c[0] + w - 2.0 * w * (s - ny) / nt, h]
            } else {
                [c[0] - w, h * (1.0 - (s - ny - nt) / ny)]
            }
        };
        // Annulus in (r, s) coordinates with geometric radial grading.
        let ratio = g.r_out / g.r_ref;
        let radii: Vec<f64> = (0..=spec.n_r)
            .map(|i| {
                if i == spec.n_r {
                    g.r_out
                } else {
                    g.r_ref * ratio.powf(i as f64 / spec.n_r as f64)
                }
            })
            .collect();
        let polar = move |q: [f64; 2]| {
            let t = theta(q[1]);
            [c[0] + q[0] * t.cos(), c[1] + q[0] * t.sin()]
        };
        for i in 0..spec.n_r {
            for j in 0..n_theta {
                b.quad((radii[i], radii[i + 1]), (j as f64, (j + 1) as f64), (i + j) % 2 == 1, &polar);
            }
        }
        // Ring between the r_out circle and the block boundary (linear blend).
        let r_out = g.r_out;
        let blend = move |q: [f64; 2]| {
            let t = theta(q[1]);
            let inner = [c[0] + r_out * t.cos(), c[1] + r_out * t.sin()];
            let o = outer(q[1]);
            [
                (1.0 - q[0]) * inner[0] + q[0] * o[0],
                (1.0 - q[0]) * inner[1] + q[0] * o[1],
            ]
        };
        for i in 0..spec.n_ring {
            let l = (i as f64 / spec.n_ring as f64, (i + 1) as f64 / spec.n_ring as f64);
            for j in 0..n_theta {
                b.quad(l, (j as f64, (j + 1) as f64), (i + j) % 2 == 0, &blend);
            }
        }
    }

    let tol = 1e-9;
    let mut mesh = b.finish(|a, p| {
        let on = |v: f64, x: f64| (v - x).abs() < tol;
        if on(a[0], -g.l) && on(p[0], -g.l) {
            Some(FaceTag::Dirichlet)
        } else if on(a[0], g.l) && on(p[0], g.l) {
            Some(FaceTag::Neumann)
        } else if on(a[1], h) && on(p[1], h) {
            Some(FaceTag::Slip)
        } else if g.centres().iter().any(|c| {
            on((a[0] - c[0]).hypot(a[1] - c[1]), g.r_ref) && on((p[0] - c[0]).hypot(p[1] - c[1]), g.r_ref)
        }) {
            Some(FaceTag::Dirichlet)
        } else if on(a[1], 0.0) && on(p[1], 0.0) {
            Some(FaceTag::Slip)
        } else {
            None
        }
    })?;
    mesh.tag_interfaces(|a, p| g.is_interface(a, p));
    Ok(mesh)
}

/// Boundary tags of the four sides of a rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RectangleTags {
    pub left: FaceTag,
    pub right: FaceTag,
    pub bottom: FaceTag,
    pub top: FaceTag,
}

impl RectangleTags {
    pub fn all(tag: FaceTag) -> Self {
        RectangleTags {
            left: tag,
            right: tag,
            bottom: tag,
            top: tag,
        }
    }
}

/// Structured triangulation of `[x0, x1] × [y0, y1]` with `nx × ny` quads,
/// each split into two straight-sided triangles.
pub fn rectangle_mesh(
    k: usize,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    nx: usize,
    ny: usize,
    tags: RectangleTags,
) -> Result<ReferenceMesh> {
    if nx == 0 || ny == 0 || x1 <= x0 || y1 <= y0 {
        return Err(Error::Invalid("invalid rectangle mesh request".into()));
    }
    let mut b = MeshBuilder::new(k);
    let map = move |q: [f64; 2]| [x0 + q[0] * (x1 - x0), y0 + q[1] * (y1 - y0)];
    for i in 0..nx {
        for j in 0..ny {
            let s = (i as f64 / nx as f64, (i + 1) as f64 / nx as f64);
            let t = (j as f64 / ny as f64, (j + 1) as f64 / ny as f64);
            b.quad(s, t, (i + j) % 2 == 1, &map);
        }
    }
    let tol = 1e-12 * (x1 - x0).abs().max((y1 - y0).abs());
    b.finish(|a, p| {
        let on = |v: f64, x: f64| (v - x).abs() < tol;
        if on(a[0], x0) && on(p[0], x0) {
            Some(tags.left)
        } else if on(a[0], x1) && on(p[0], x1) {
            Some(tags.right)
        } else if on(a[1], y0) && on(p[1], y0) {
            Some(tags.bottom)
        } else if on(a[1], y1) && on(p[1], y1) {
            Some(tags.top)
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::{check_conforming, radius_mapping, distance_mapping};

    #[test]
    fn swimmer_mesh_counts_and_tags() {
        let g = SwimmerGeometry::default();
        let spec = SwimmerMeshSpec::default();
        let m = swimmer_mesh(&g, &spec).unwrap();
        assert_eq!(m.n_elements(), spec.element_count());
        assert!(m.n_elements() >= 400);
        assert!(m.has_neumann());
        // Two r_out half-circles and four strip lines carry interface faces.
        let n_theta = 2 * spec.n_y + spec.n_top;
        assert_eq!(m.interface_faces().len(), 2 * n_theta + 4 * spec.n_y);
        check_conforming(&m, &radius_mapping(&g, (-1.0, 1.0)).unwrap()).unwrap();
        check_conforming(&m, &distance_mapping(&g, (-3.0, 2.0)).unwrap()).unwrap();
    }

    #[test]
    fn rectangle_area() {
        let m = rectangle_mesh(2, (0.0, 2.0), (0.0, 1.0), 3, 2, RectangleTags::all(FaceTag::Dirichlet)).unwrap();
        assert_eq!(m.n_elements(), 12);
        assert_eq!(m.nodes().len(), (2 * 3 + 1) * (2 * 2 + 1));
    }
}
