//! Fixed high-order triangular reference mesh, nodal bases, quadrature and
//! one-dimensional parametric grids.

pub mod basis;
pub mod io;
pub mod param_grid;
pub mod quadrature;

use std::collections::HashMap;

pub use basis::{edge_local_nodes, edge_point, triangle_lattice, LineBasis, TriangleBasis};
pub use io::{load_mesh, mesh_to_string, parse_mesh, write_mesh};
pub use param_grid::{ParamQuadPoint, ParametricGrid};
pub use quadrature::{fekete_nodes_1d, gauss_quadrature_1d, triangle_quadrature, TriangleRule};

use crate::{Error, Result};

/// Boundary-condition class of a face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FaceTag {
    Interior,
    Dirichlet,
    Neumann,
    Slip,
}

impl FaceTag {
    /// Mesh-file code of a boundary tag (1, 2, 3).
    pub fn code(self) -> Option<u32> {
        match self {
            FaceTag::Interior => None,
            FaceTag::Dirichlet => Some(1),
            FaceTag::Neumann => Some(2),
            FaceTag::Slip => Some(3),
        }
    }

    /// Inverse of [`FaceTag::code`].
    pub fn from_code(c: u32) -> Option<Self> {
        match c {
            1 => Some(FaceTag::Dirichlet),
            2 => Some(FaceTag::Neumann),
            3 => Some(FaceTag::Slip),
            _ => None,
        }
    }
}

/// A unique mesh face (edge). Its orientation is that of the `left` element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Face {
    /// `(element, local face)` owning the face orientation.
    pub left: (usize, usize),
    /// Neighbour across the face, `None` on the boundary.
    pub right: Option<(usize, usize)>,
    /// Vertex node ids in the orientation of `left`.
    pub vertices: [usize; 2],
    pub tag: FaceTag,
}

/// Reference-domain triangulation of degree `k`.
#[derive(Clone, Debug)]
pub struct ReferenceMesh {
    k: usize,
    nodes: Vec<[f64; 2]>,
    elements: Vec<usize>,
    faces: Vec<Face>,
    elem_faces: Vec<[usize; 3]>,
    interface: Vec<bool>,
}

impl ReferenceMesh {
    /// Builds a mesh from nodes, element connectivity (mesh-file ordering) and
    /// boundary tag records `(element, local face, tag)`.
    pub fn new(
        k: usize,
        nodes: Vec<[f64; 2]>,
        elements: Vec<Vec<usize>>,
        boundary: &[(usize, usize, FaceTag)],
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("element degree must be at least 1".into()));
        }
        let npe = basis::triangle_node_count(k);
        let mut flat = Vec::with_capacity(elements.len() * npe);
        for (e, el) in elements.iter().enumerate() {
            if el.len() != npe {
                return Err(Error::Invalid(format!(
                    "element {e} has {} nodes, expected {npe}",
                    el.len()
                )));
            }
            if let Some(&bad) = el.iter().find(|&&n| n >= nodes.len()) {
                return Err(Error::Invalid(format!("element {e} references missing node {bad}")));
            }
            let [a, b, c] = [nodes[el[0]], nodes[el[1]], nodes[el[2]]];
            let area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            if area2 <= 0.0 {
                return Err(Error::Invalid(format!("element {e} is not counter-clockwise")));
            }
            flat.extend_from_slice(el);
        }
        let (mut faces, elem_faces) = build_faces(k, &flat)?;
        for &(e, lf, tag) in boundary {
            if e >= elements.len() || lf > 2 {
                return Err(Error::Invalid(format!("boundary record ({e}, {lf}) out of range")));
            }
            if tag == FaceTag::Interior {
                return Err(Error::Invalid("boundary record with interior tag".into()));
            }
            let f = &mut faces[elem_faces[e][lf]];
            if f.right.is_some() {
                return Err(Error::Invalid(format!(
                    "boundary record ({e}, {lf}) names an interior face"
                )));
            }
            f.tag = tag;
        }
        if let Some(f) = faces
            .iter()
            .find(|f| f.right.is_none() && f.tag == FaceTag::Interior)
        {
            return Err(Error::Invalid(format!(
                "boundary face of element {} (local face {}) has no tag",
                f.left.0, f.left.1
            )));
        }
        let nf = faces.len();
        Ok(ReferenceMesh {
            k,
            nodes,
            elements: flat,
            faces,
            elem_faces,
            interface: vec![false; nf],
        })
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn n_elements(&self) -> usize {
        self.elem_faces.len()
    }

    pub fn nodes_per_element(&self) -> usize {
        basis::triangle_node_count(self.k)
    }

    /// Node ids of element `e` in mesh-file order.
    pub fn element(&self, e: usize) -> &[usize] {
        let n = self.nodes_per_element();
        &self.elements[e * n..(e + 1) * n]
    }

    /// Coordinates of the nodes of element `e`.
    pub fn element_coords(&self, e: usize) -> Vec<[f64; 2]> {
        self.element(e).iter().map(|&n| self.nodes[n]).collect()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    /// Global face index of local face `lf` of element `e`.
    pub fn face_of(&self, e: usize, lf: usize) -> usize {
        self.elem_faces[e][lf]
    }

    /// Whether element `e` walks its local face `lf` in the face orientation.
    pub fn same_orientation(&self, e: usize, lf: usize) -> bool {
        self.faces[self.elem_faces[e][lf]].left == (e, lf)
    }

    /// Tag of local face `lf` of element `e`.
    pub fn face_tag(&self, e: usize, lf: usize) -> FaceTag {
        self.faces[self.elem_faces[e][lf]].tag
    }

    /// True if any face carries a Neumann tag.
    pub fn has_neumann(&self) -> bool {
        self.faces.iter().any(|f| f.tag == FaceTag::Neumann)
    }

    /// `(element, local face, tag)` for every boundary face, in face order.
    pub fn boundary_records(&self) -> Vec<(usize, usize, FaceTag)> {
        self.faces
            .iter()
            .filter(|f| f.right.is_none())
            .map(|f| (f.left.0, f.left.1, f.tag))
            .collect()
    }

    /// Marks as interface faces those whose two end vertices satisfy `pred`.
    pub fn tag_interfaces(&mut self, pred: impl Fn([f64; 2], [f64; 2]) -> bool) {
        for (i, f) in self.faces.iter().enumerate() {
            self.interface[i] = pred(self.nodes[f.vertices[0]], self.nodes[f.vertices[1]]);
        }
    }

    /// Indices of faces flagged by [`ReferenceMesh::tag_interfaces`].
    pub fn interface_faces(&self) -> Vec<usize> {
        (0..self.faces.len()).filter(|&i| self.interface[i]).collect()
    }

    /// Rebuilds the untagged face list from the connectivity alone.
    pub fn rebuild_faces(&self) -> Result<Vec<Face>> {
        Ok(build_faces(self.k, &self.elements)?.0)
    }
}

/// Isoparametric map of an element at a reference point: physical point and
/// Jacobian `∂x_a/∂ξ_b`, from nodal coordinates and basis values/gradients.
pub fn isoparametric(coords: &[[f64; 2]], values: &[f64], grads: &[[f64; 2]]) -> ([f64; 2], [[f64; 2]; 2]) {
    let mut x = [0.0; 2];
    let mut j = [[0.0; 2]; 2];
    for ((c, &v), g) in coords.iter().zip(values).zip(grads) {
        for a in 0..2 {
            x[a] += c[a] * v;
            for b in 0..2 {
                j[a][b] += c[a] * g[b];
            }
        }
    }
    (x, j)
}

/// Image of the reference-triangle centroid under the isoparametric map of
/// element `e` (always strictly inside the, possibly curved, element).
pub fn element_centroid(mesh: &ReferenceMesh, basis: &TriangleBasis, e: usize) -> [f64; 2] {
    let p = [1.0 / 3.0, 1.0 / 3.0];
    let coords = mesh.element_coords(e);
    isoparametric(&coords, &basis.eval(p), &basis.grad(p)).0
}

fn build_faces(k: usize, elements: &[usize]) -> Result<(Vec<Face>, Vec<[usize; 3]>)> {
    let npe = basis::triangle_node_count(k);
    let n_el = elements.len() / npe;
    let edges: Vec<Vec<usize>> = (0..3).map(|f| edge_local_nodes(k, f)).collect();
    let mut faces: Vec<Face> = Vec::new();
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
    let mut elem_faces = vec![[0usize; 3]; n_el];
    for e in 0..n_el {
        let el = &elements[e * npe..(e + 1) * npe];
        for lf in 0..3 {
            let a = el[lf];
            let b = el[(lf + 1) % 3];
            let key = (a.min(b), a.max(b));
            match lookup.get(&key) {
                None => {
                    lookup.insert(key, faces.len());
                    elem_faces[e][lf] = faces.len();
                    faces.push(Face {
                        left: (e, lf),
                        right: None,
                        vertices: [a, b],
                        tag: FaceTag::Interior,
                    });
                }
                Some(&fi) => {
                    let face = &mut faces[fi];
                    if face.right.is_some() {
                        return Err(Error::Invalid(format!(
                            "face ({a}, {b}) shared by more than two elements"
                        )));
                    }
                    if face.vertices != [b, a] {
                        return Err(Error::Invalid(format!(
                            "elements {} and {e} traverse face ({a}, {b}) in the same direction",
                            face.left.0
                        )));
                    }
                    let (le, llf) = face.left;
                    let lnodes: Vec<usize> =
                        edges[llf].iter().map(|&i| elements[le * npe + i]).collect();
                    let rnodes: Vec<usize> = edges[lf].iter().rev().map(|&i| el[i]).collect();
                    if lnodes != rnodes {
                        return Err(Error::Invalid(format!(
                            "elements {le} and {e} disagree on the edge nodes of face ({a}, {b})"
                        )));
                    }
                    face.right = Some((e, lf));
                    elem_faces[e][lf] = fi;
                }
            }
        }
    }
    Ok((faces, elem_faces))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> ReferenceMesh {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let elements = vec![vec![0, 1, 2], vec![0, 2, 3]];
        let bnd = [
            (0, 0, FaceTag::Dirichlet),
            (0, 1, FaceTag::Neumann),
            (1, 1, FaceTag::Slip),
            (1, 2, FaceTag::Dirichlet),
        ];
        ReferenceMesh::new(1, nodes, elements, &bnd).unwrap()
    }

    #[test]
    fn adjacency() {
        let m = two_triangles();
        assert_eq!(m.faces().len(), 5);
        let interior: Vec<_> = m.faces().iter().filter(|f| f.right.is_some()).collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(interior[0].tag, FaceTag::Interior);
        assert!(m.same_orientation(0, 2));
        assert!(!m.same_orientation(1, 0));
        assert!(m.has_neumann());
    }

    #[test]
    fn face_rebuild_is_involutive() {
        let m = two_triangles();
        let a = m.rebuild_faces().unwrap();
        let b = m.rebuild_faces().unwrap();
        assert_eq!(a, b);
        let untagged: Vec<_> = m
            .faces()
            .iter()
            .map(|f| (f.left, f.right, f.vertices))
            .collect();
        let rebuilt: Vec<_> = a.iter().map(|f| (f.left, f.right, f.vertices)).collect();
        assert_eq!(untagged, rebuilt);
    }

    #[test]
    fn missing_tag_and_bad_orientation_rejected() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let r = ReferenceMesh::new(1, nodes.clone(), vec![vec![0, 1, 2]], &[]);
        assert!(r.is_err());
        let r = ReferenceMesh::new(
            1,
            nodes,
            vec![vec![0, 2, 1]],
            &[(0, 0, FaceTag::Slip), (0, 1, FaceTag::Slip), (0, 2, FaceTag::Slip)],
        );
        assert!(r.is_err());
    }
}
