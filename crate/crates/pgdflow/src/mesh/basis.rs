//! Nodal Lagrange bases on the reference triangle and on line segments.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Highest triangle degree supported by [`TriangleBasis`].
pub const MAX_TRIANGLE_BASIS_DEGREE: usize = 6;

/// Number of nodes of a degree-`k` triangle.
pub fn triangle_node_count(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Equispaced nodes of the reference triangle in mesh-file order: the three
/// vertices `(0,0), (1,0), (0,1)`, then the interior nodes of edges
/// `v0→v1`, `v1→v2`, `v2→v0` (each walked from its first vertex), then the
/// element-interior nodes row by row (`j = 1..k-2`, `i = 1..k-1-j`, at
/// `(i/k, j/k)`).
pub fn triangle_lattice(k: usize) -> Vec<[f64; 2]> {
    let kf = k as f64;
    let mut pts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    if k == 0 {
        return vec![[1.0 / 3.0, 1.0 / 3.0]];
    }
    for i in 1..k {
        pts.push([i as f64 / kf, 0.0]);
    }
    for i in 1..k {
        pts.push([1.0 - i as f64 / kf, i as f64 / kf]);
    }
    for i in 1..k {
        pts.push([0.0, 1.0 - i as f64 / kf]);
    }
    for j in 1..k.saturating_sub(1) {
        for i in 1..(k - j) {
            pts.push([i as f64 / kf, j as f64 / kf]);
        }
    }
    pts
}

/// Local node indices along edge `f` of a degree-`k` triangle, walked from
/// vertex `f` to vertex `(f + 1) % 3`; `k + 1` entries.
pub fn edge_local_nodes(k: usize, f: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(f);
    for i in 0..k.saturating_sub(1) {
        out.push(3 + f * (k - 1) + i);
    }
    out.push((f + 1) % 3);
    out
}

/// Reference coordinates of the point at parameter `s ∈ [0, 1]` on edge `f`.
pub fn edge_point(f: usize, s: f64) -> [f64; 2] {
    match f {
        0 => [s, 0.0],
        1 => [1.0 - s, s],
        _ => [0.0, 1.0 - s],
    }
}

/// Lagrange basis of complete degree `k` on the reference triangle, nodal at
/// [`triangle_lattice`].
#[derive(Clone, Debug)]
pub struct TriangleBasis {
    k: usize,
    nodes: Vec<[f64; 2]>,
    exps: Vec<(i32, i32)>,
    /// Inverse Vandermonde: `N_j = Σ_m mono_m · coeff[(m, j)]`.
    coeff: DMatrix<f64>,
}

impl TriangleBasis {
    /// Builds the basis; `1 <= k <= MAX_TRIANGLE_BASIS_DEGREE`.
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k > MAX_TRIANGLE_BASIS_DEGREE {
            return Err(Error::Invalid(format!(
                "triangle degree {k} outside 1..={MAX_TRIANGLE_BASIS_DEGREE}"
            )));
        }
        let nodes = triangle_lattice(k);
        let mut exps = Vec::new();
        for total in 0..=k as i32 {
            for b in 0..=total {
                exps.push((total - b, b));
            }
        }
        let n = nodes.len();
        let vander = DMatrix::from_fn(n, n, |i, m| mono(nodes[i], exps[m]));
        let coeff = vander
            .try_inverse()
            .ok_or_else(|| Error::Singular("triangle Vandermonde".into()))?;
        Ok(TriangleBasis {
            k,
            nodes,
            exps,
            coeff,
        })
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Shape-function values at reference point `p`.
    pub fn eval(&self, p: [f64; 2]) -> Vec<f64> {
        let m: Vec<f64> = self.exps.iter().map(|&e| mono(p, e)).collect();
        (0..self.len())
            .map(|j| (0..m.len()).map(|i| m[i] * self.coeff[(i, j)]).sum())
            .collect()
    }

    /// Shape-function reference gradients at `p`.
    pub fn grad(&self, p: [f64; 2]) -> Vec<[f64; 2]> {
        let dm: Vec<[f64; 2]> = self
            .exps
            .iter()
            .map(|&(a, b)| {
                let dx = if a > 0 {
                    a as f64 * p[0].powi(a - 1) * p[1].powi(b)
                } else {
                    0.0
                };
                let dy = if b > 0 {
                    b as f64 * p[0].powi(a) * p[1].powi(b - 1)
                } else {
                    0.0
                };
                [dx, dy]
            })
            .collect();
        (0..self.len())
            .map(|j| {
                let mut g = [0.0; 2];
                for (i, d) in dm.iter().enumerate() {
                    g[0] += d[0] * self.coeff[(i, j)];
                    g[1] += d[1] * self.coeff[(i, j)];
                }
                g
            })
            .collect()
    }
}

fn mono(p: [f64; 2], (a, b): (i32, i32)) -> f64 {
    p[0].powi(a) * p[1].powi(b)
}

/// Lagrange basis on arbitrary distinct nodes of a line.
#[derive(Clone, Debug)]
pub struct LineBasis {
    nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl LineBasis {
    pub fn new(nodes: Vec<f64>) -> Self {
        let bary = (0..nodes.len())
            .map(|j| {
                1.0 / (0..nodes.len())
                    .filter(|&m| m != j)
                    .map(|m| nodes[j] - nodes[m])
                    .product::<f64>()
            })
            .collect();
        LineBasis { nodes, bary }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Values of all basis functions at `x`.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let n = self.nodes.len();
        (0..n)
            .map(|j| {
                self.bary[j]
                    * (0..n)
                        .filter(|&m| m != j)
                        .map(|m| x - self.nodes[m])
                        .product::<f64>()
            })
            .collect()
    }

    /// Derivatives of all basis functions at `x`.
    pub fn deriv(&self, x: f64) -> Vec<f64> {
        let n = self.nodes.len();
        (0..n)
            .map(|j| {
                let mut s = 0.0;
                for l in (0..n).filter(|&l| l != j) {
                    s += (0..n)
                        .filter(|&m| m != j && m != l)
                        .map(|m| x - self.nodes[m])
                        .product::<f64>();
                }
                self.bary[j] * s
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn lattice_counts_and_edges() {
        for k in 1..=5 {
            let l = triangle_lattice(k);
            assert_eq!(l.len(), triangle_node_count(k));
            for f in 0..3 {
                let e = edge_local_nodes(k, f);
                assert_eq!(e.len(), k + 1);
                for (i, &n) in e.iter().enumerate() {
                    let p = edge_point(f, i as f64 / k as f64);
                    assert!((l[n][0] - p[0]).abs() < 1e-15 && (l[n][1] - p[1]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_and_delta() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for k in 1..=4 {
            let b = TriangleBasis::new(k).unwrap();
            for (i, &p) in b.nodes().iter().enumerate() {
                let v = b.eval(p);
                for (j, vj) in v.iter().enumerate() {
                    let d = if i == j { 1.0 } else { 0.0 };
                    assert!((vj - d).abs() < 1e-12);
                }
            }
            for _ in 0..100 {
                let (mut x, mut y): (f64, f64) = (rng.gen(), rng.gen());
                if x + y > 1.0 {
                    x = 1.0 - x;
                    y = 1.0 - y;
                }
                let s: f64 = b.eval([x, y]).iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
                let g = b.grad([x, y]);
                let gx: f64 = g.iter().map(|g| g[0]).sum();
                let gy: f64 = g.iter().map(|g| g[1]).sum();
                assert!(gx.abs() < 1e-10 && gy.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let b = TriangleBasis::new(3).unwrap();
        let p = [0.21, 0.33];
        let h = 1e-6;
        let g = b.grad(p);
        let (xp, xm) = (b.eval([p[0] + h, p[1]]), b.eval([p[0] - h, p[1]]));
        for j in 0..b.len() {
            assert!((g[j][0] - (xp[j] - xm[j]) / (2.0 * h)).abs() < 1e-7);
        }
    }

    #[test]
    fn line_basis() {
        let b = LineBasis::new(vec![0.0, 0.3, 1.0]);
        let v = b.eval(0.3);
        assert!((v[1] - 1.0).abs() < 1e-15 && v[0].abs() < 1e-15);
        let x = 0.77;
        let s: f64 = b.eval(x).iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
        // Interpolates quadratics exactly, derivative included.
        let f = |x: f64| 2.0 * x * x - x + 0.5;
        let vals: Vec<f64> = b.nodes().iter().map(|&n| f(n)).collect();
        let ip: f64 = b.eval(x).iter().zip(&vals).map(|(a, b)| a * b).sum();
        let dp: f64 = b.deriv(x).iter().zip(&vals).map(|(a, b)| a * b).sum();
        assert!((ip - f(x)).abs() < 1e-14);
        assert!((dp - (4.0 * x - 1.0)).abs() < 1e-13);
    }
}
