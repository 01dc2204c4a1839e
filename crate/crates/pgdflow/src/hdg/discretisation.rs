//! Degree-of-freedom layouts and precomputed element geometry of the HDG
//! discretisation on the reference mesh.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::mapping::{det2, Mat2};
use crate::mesh::{
    edge_point, element_centroid, fekete_nodes_1d, gauss_quadrature_1d, isoparametric,
    triangle_quadrature, FaceTag, LineBasis, ReferenceMesh, TriangleBasis,
};
use crate::{Error, Result};

/// Index layout of one element's dense system.
///
/// Columns: `L` (4 components), `u` (2), `p`, then the hybrid velocity of
/// the three local faces (2 components each) and the mean pressure `ρ`.
/// Rows: the `L`, `u`, `p` equations in the same order, the mean-pressure
/// equation, the transmission (trace) equations of the three faces and the
/// element's incompressibility closure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ElementLayout {
    /// Nodes per element.
    pub n: usize,
    /// Nodes per face.
    pub nf: usize,
}

impl ElementLayout {
    pub fn new(k: usize) -> Self {
        ElementLayout {
            n: (k + 1) * (k + 2) / 2,
            nf: k + 1,
        }
    }
    /// Column/row of `L_ij` at node `r`.
    #[inline]
    pub fn l(&self, i: usize, j: usize, r: usize) -> usize {
        (2 * i + j) * self.n + r
    }
    /// Column/row of `u_i` at node `r`.
    #[inline]
    pub fn u(&self, i: usize, r: usize) -> usize {
        4 * self.n + i * self.n + r
    }
    /// Column/row of `p` at node `r`.
    #[inline]
    pub fn p(&self, r: usize) -> usize {
        6 * self.n + r
    }
    /// Number of element-interior unknowns (`L`, `u`, `p`).
    #[inline]
    pub fn n_interior(&self) -> usize {
        7 * self.n
    }
    /// Column of the hybrid velocity `û_i` at face node `a` of local face `f`.
    #[inline]
    pub fn hat(&self, f: usize, i: usize, a: usize) -> usize {
        7 * self.n + f * 2 * self.nf + i * self.nf + a
    }
    #[inline]
    pub fn rho_col(&self) -> usize {
        7 * self.n + 6 * self.nf
    }
    #[inline]
    pub fn n_cols(&self) -> usize {
        7 * self.n + 6 * self.nf + 1
    }
    #[inline]
    pub fn mean_row(&self) -> usize {
        7 * self.n
    }
    /// Row of the transmission equation for `û_i` at face node `a`.
    #[inline]
    pub fn trace_row(&self, f: usize, i: usize, a: usize) -> usize {
        7 * self.n + 1 + f * 2 * self.nf + i * self.nf + a
    }
    #[inline]
    pub fn closure_row(&self) -> usize {
        7 * self.n + 1 + 6 * self.nf
    }
    #[inline]
    pub fn n_rows(&self) -> usize {
        7 * self.n + 2 + 6 * self.nf
    }
    /// Rows of the element-local equations kept in the row space
    /// (`L`, `u`, `p` and mean rows).
    #[inline]
    pub fn n_local_rows(&self) -> usize {
        7 * self.n + 1
    }
}

/// Global numbering of the stacked state `[û, ρ, u, p, L]` and of the
/// equation (row) space `[element rows, trace rows, closure rows,
/// constraint]`.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub layout: ElementLayout,
    pub n_el: usize,
    /// First hybrid dof of every face (`None` on Dirichlet faces).
    pub face_base: Vec<Option<usize>>,
    /// Number of hybrid velocity dofs.
    pub n_hat: usize,
    /// Whether the zero-mean pressure constraint is active (no Neumann
    /// boundary).
    pub constraint: bool,
    /// Per element, per local face: global hybrid base and orientation flag.
    elem_faces: Vec<[(Option<usize>, bool); 3]>,
}

impl DofMap {
    pub fn new(mesh: &ReferenceMesh) -> Self {
        let layout = ElementLayout::new(mesh.degree());
        let mut face_base = Vec::with_capacity(mesh.faces().len());
        let mut n_hat = 0;
        for f in mesh.faces() {
            if f.tag == FaceTag::Dirichlet {
                face_base.push(None);
            } else {
                face_base.push(Some(n_hat));
                n_hat += 2 * layout.nf;
            }
        }
        let elem_faces = (0..mesh.n_elements())
            .map(|e| {
                let mut out = [(None, true); 3];
                for (lf, o) in out.iter_mut().enumerate() {
                    *o = (face_base[mesh.face_of(e, lf)], mesh.same_orientation(e, lf));
                }
                out
            })
            .collect();
        DofMap {
            layout,
            n_el: mesh.n_elements(),
            face_base,
            n_hat,
            constraint: !mesh.has_neumann(),
            elem_faces,
        }
    }

    /// Global hybrid dof of element-local `(f, i, a)`, if the face carries one.
    #[inline]
    pub fn hat_dof(&self, e: usize, f: usize, i: usize, a: usize) -> Option<usize> {
        let (base, same) = self.elem_faces[e][f];
        base.map(|b| b + i * self.layout.nf + if same { a } else { self.layout.nf - 1 - a })
    }

    // ---- state layout ----
    pub fn rho_offset(&self) -> usize {
        self.n_hat
    }
    pub fn u_offset(&self) -> usize {
        self.n_hat + self.n_el
    }
    pub fn p_offset(&self) -> usize {
        self.u_offset() + 2 * self.layout.n * self.n_el
    }
    pub fn l_offset(&self) -> usize {
        self.p_offset() + self.layout.n * self.n_el
    }
    /// Length of the stacked state vector.
    pub fn n_state(&self) -> usize {
        self.l_offset() + 4 * self.layout.n * self.n_el
    }
    /// State index of `u_i` at node `r` of element `e`.
    #[inline]
    pub fn u_index(&self, e: usize, i: usize, r: usize) -> usize {
        self.u_offset() + e * 2 * self.layout.n + i * self.layout.n + r
    }
    #[inline]
    pub fn p_index(&self, e: usize, r: usize) -> usize {
        self.p_offset() + e * self.layout.n + r
    }
    #[inline]
    pub fn l_index(&self, e: usize, i: usize, j: usize, r: usize) -> usize {
        self.l_offset() + e * 4 * self.layout.n + (2 * i + j) * self.layout.n + r
    }
    /// State ranges of the five variables `[û, ρ, u, p, L]`.
    pub fn variable_ranges(&self) -> [std::ops::Range<usize>; 5] {
        [
            0..self.n_hat,
            self.rho_offset()..self.u_offset(),
            self.u_offset()..self.p_offset(),
            self.p_offset()..self.l_offset(),
            self.l_offset()..self.n_state(),
        ]
    }

    // ---- row-space layout ----
    pub fn trace_row_offset(&self) -> usize {
        self.n_el * self.layout.n_local_rows()
    }
    pub fn closure_row_offset(&self) -> usize {
        self.trace_row_offset() + self.n_hat
    }
    pub fn constraint_row(&self) -> Option<usize> {
        self.constraint.then(|| self.closure_row_offset() + self.n_el)
    }
    pub fn n_rows(&self) -> usize {
        self.closure_row_offset() + self.n_el + usize::from(self.constraint)
    }

    /// Gathers the element vector (in [`ElementLayout`] column order).
    pub fn gather(&self, e: usize, state: &[f64], out: &mut [f64]) {
        let ly = self.layout;
        let n = ly.n;
        let lo = self.l_offset() + e * 4 * n;
        out[..4 * n].copy_from_slice(&state[lo..lo + 4 * n]);
        let uo = self.u_offset() + e * 2 * n;
        out[4 * n..6 * n].copy_from_slice(&state[uo..uo + 2 * n]);
        let po = self.p_offset() + e * n;
        out[6 * n..7 * n].copy_from_slice(&state[po..po + n]);
        for f in 0..3 {
            for i in 0..2 {
                for a in 0..ly.nf {
                    out[ly.hat(f, i, a)] = self.hat_dof(e, f, i, a).map_or(0.0, |d| state[d]);
                }
            }
        }
        out[ly.rho_col()] = state[self.rho_offset() + e];
    }

    /// Adds the element vector `v` (transposed role: indexed like columns)
    /// into a state-shaped vector.
    pub fn scatter_cols(&self, e: usize, v: &[f64], state: &mut [f64]) {
        let ly = self.layout;
        let n = ly.n;
        let lo = self.l_offset() + e * 4 * n;
        for (s, x) in state[lo..lo + 4 * n].iter_mut().zip(&v[..4 * n]) {
            *s += x;
        }
        let uo = self.u_offset() + e * 2 * n;
        for (s, x) in state[uo..uo + 2 * n].iter_mut().zip(&v[4 * n..6 * n]) {
            *s += x;
        }
        let po = self.p_offset() + e * n;
        for (s, x) in state[po..po + n].iter_mut().zip(&v[6 * n..7 * n]) {
            *s += x;
        }
        for f in 0..3 {
            for i in 0..2 {
                for a in 0..ly.nf {
                    if let Some(d) = self.hat_dof(e, f, i, a) {
                        state[d] += v[ly.hat(f, i, a)];
                    }
                }
            }
        }
        state[self.rho_offset() + e] += v[ly.rho_col()];
    }

    /// Global row of element row `r`, if it exists (trace rows of Dirichlet
    /// faces have none).
    #[inline]
    pub fn global_row(&self, e: usize, r: usize) -> Option<usize> {
        let ly = self.layout;
        if r < ly.n_local_rows() {
            Some(e * ly.n_local_rows() + r)
        } else if r == ly.closure_row() {
            Some(self.closure_row_offset() + e)
        } else {
            let t = r - ly.n_local_rows();
            let f = t / (2 * ly.nf);
            let i = (t % (2 * ly.nf)) / ly.nf;
            let a = t % ly.nf;
            self.hat_dof(e, f, i, a).map(|d| self.trace_row_offset() + d)
        }
    }

    /// Gathers element rows from a row-space vector (missing rows read 0).
    pub fn gather_rows(&self, e: usize, rows: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.global_row(e, r).map_or(0.0, |g| rows[g]);
        }
    }

    /// Adds element rows into a row-space vector.
    pub fn scatter_rows(&self, e: usize, v: &[f64], rows: &mut [f64]) {
        for (r, x) in v.iter().enumerate() {
            if *x != 0.0 {
                if let Some(g) = self.global_row(e, r) {
                    rows[g] += x;
                }
            }
        }
    }
}

/// Quadrature data of one local face of an element.
#[derive(Clone, Debug)]
pub struct FaceGeometry {
    pub tag: FaceTag,
    /// Points on the reference mesh.
    pub x: Vec<[f64; 2]>,
    /// Weights including the reference-mesh line element.
    pub w: Vec<f64>,
    /// Outward unit normals on the reference mesh.
    pub normal: Vec<[f64; 2]>,
}

/// Precomputed volume and face data of one element.
#[derive(Clone, Debug)]
pub struct ElementGeometry {
    /// Volume quadrature points on the reference mesh.
    pub x: Vec<[f64; 2]>,
    /// Volume weights including `|det J_iso|`.
    pub w: Vec<f64>,
    /// Reference-mesh gradients of the basis functions at each point.
    pub grad: Vec<Vec<[f64; 2]>>,
    pub faces: [FaceGeometry; 3],
    /// Element area on the reference mesh.
    pub area: f64,
    /// Reference mass matrix `∫ N_r N_s`.
    pub mass: DMatrix<f64>,
    /// Mapping regions of the element (see `SpatialField::region`), filled
    /// in by the operator assembly.
    pub centroid: [f64; 2],
}

/// Basis tables on the reference triangle shared by all elements.
#[derive(Clone, Debug)]
pub struct ReferenceTables {
    pub basis: TriangleBasis,
    pub vol_points: Vec<[f64; 2]>,
    pub vol_weights: Vec<f64>,
    /// `N_r` at each volume point.
    pub vol_values: Vec<Vec<f64>>,
    /// Face parameters in `[0, 1]` and weights.
    pub face_s: Vec<f64>,
    pub face_w: Vec<f64>,
    /// `N_r` at each face point, per local face.
    pub face_values: [Vec<Vec<f64>>; 3],
    /// Hybrid basis `φ̂_a` at each face point (element-local orientation).
    pub hat_values: Vec<Vec<f64>>,
    /// Nodes of the hybrid basis on `[0, 1]`.
    pub hat_basis: LineBasis,
}

impl ReferenceTables {
    pub fn new(k: usize, volume_degree: usize) -> Result<Self> {
        let basis = TriangleBasis::new(k)?;
        let rule = triangle_quadrature(volume_degree)?;
        let vol_values = rule.points.iter().map(|&p| basis.eval(p)).collect();
        let n_face = volume_degree / 2 + 1;
        let (gp, gw) = gauss_quadrature_1d(n_face);
        let face_s: Vec<f64> = gp.iter().map(|t| 0.5 * (t + 1.0)).collect();
        let face_w: Vec<f64> = gw.iter().map(|w| 0.5 * w).collect();
        let face_values = [0, 1, 2].map(|f| face_s.iter().map(|&s| basis.eval(edge_point(f, s))).collect());
        let hat_nodes: Vec<f64> = fekete_nodes_1d(k)?.iter().map(|t| 0.5 * (t + 1.0)).collect();
        let hat_basis = LineBasis::new(hat_nodes);
        let hat_values = face_s.iter().map(|&s| hat_basis.eval(s)).collect();
        Ok(ReferenceTables {
            basis,
            vol_points: rule.points,
            vol_weights: rule.weights,
            vol_values,
            face_s,
            face_w,
            face_values,
            hat_values,
            hat_basis,
        })
    }
}

/// Everything about the discretisation that does not depend on the
/// mapping or the data: mesh, layouts, basis tables and element geometry.
#[derive(Clone, Debug)]
pub struct Discretisation {
    pub mesh: Arc<ReferenceMesh>,
    pub dofs: DofMap,
    pub tables: ReferenceTables,
    pub elements: Vec<ElementGeometry>,
}

impl Discretisation {
    /// Builds the discretisation with volume quadrature of `volume_degree`
    /// (default `2k + 2` when `None`).
    pub fn new(mesh: Arc<ReferenceMesh>, volume_degree: Option<usize>) -> Result<Self> {
        let k = mesh.degree();
        let tables = ReferenceTables::new(k, volume_degree.unwrap_or(2 * k + 2))?;
        let dofs = DofMap::new(&mesh);
        let n = dofs.layout.n;
        let mut elements = Vec::with_capacity(mesh.n_elements());
        for e in 0..mesh.n_elements() {
            let coords = mesh.element_coords(e);
            let mut x = Vec::new();
            let mut w = Vec::new();
            let mut grad = Vec::new();
            let mut mass = DMatrix::zeros(n, n);
            for (q, (&p, &wq)) in tables.vol_points.iter().zip(&tables.vol_weights).enumerate() {
                let vals = &tables.vol_values[q];
                let g_ref = tables.basis.grad(p);
                let (xq, j) = isoparametric(&coords, vals, &g_ref);
                let d = det2(&j);
                if d <= 0.0 {
                    return Err(Error::InvertedElement { element: e, det: d });
                }
                // ∇_x N = J^{-T} ∇_ξ N.
                let inv: Mat2 = [[j[1][1] / d, -j[0][1] / d], [-j[1][0] / d, j[0][0] / d]];
                let g: Vec<[f64; 2]> = g_ref
                    .iter()
                    .map(|gr| {
                        [
                            inv[0][0] * gr[0] + inv[1][0] * gr[1],
                            inv[0][1] * gr[0] + inv[1][1] * gr[1],
                        ]
                    })
                    .collect();
                let wd = wq * d;
                for r in 0..n {
                    for s in 0..n {
                        mass[(r, s)] += wd * vals[r] * vals[s];
                    }
                }
                x.push(xq);
                w.push(wd);
                grad.push(g);
            }
            let area = w.iter().sum();
            let faces = [0, 1, 2].map(|lf| {
                let mut fx = Vec::new();
                let mut fw = Vec::new();
                let mut normal = Vec::new();
                for (&s, &ws) in tables.face_s.iter().zip(&tables.face_w) {
                    let p = edge_point(lf, s);
                    let (xq, j) = isoparametric(&coords, &tables.basis.eval(p), &tables.basis.grad(p));
                    let dir = match lf {
                        0 => [1.0, 0.0],
                        1 => [-1.0, 1.0],
                        _ => [0.0, -1.0],
                    };
                    let t = [j[0][0] * dir[0] + j[0][1] * dir[1], j[1][0] * dir[0] + j[1][1] * dir[1]];
                    let len = t[0].hypot(t[1]);
                    fx.push(xq);
                    fw.push(ws * len);
                    normal.push([t[1] / len, -t[0] / len]);
                }
                FaceGeometry {
                    tag: mesh.face_tag(e, lf),
                    x: fx,
                    w: fw,
                    normal,
                }
            });
            elements.push(ElementGeometry {
                x,
                w,
                grad,
                faces,
                area,
                mass,
                centroid: element_centroid(&mesh, &tables.basis, e),
            });
        }
        Ok(Discretisation {
            mesh,
            dofs,
            tables,
            elements,
        })
    }

    pub fn layout(&self) -> ElementLayout {
        self.dofs.layout
    }
}
