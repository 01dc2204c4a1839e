//! Snapshot plans and dense snapshot tensors.

use std::fmt::Write as _;
use std::path::Path;

use crate::hdg::HdgSolver;
use crate::mesh::ParametricGrid;
use crate::par::Parallelism;
use crate::{Error, Result};

/// Nested subsampling levels of a parametric grid of degree `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanLevel {
    /// Element vertices only.
    Vertices,
    /// Vertices and element midpoints (requires even `k`).
    HalfNodes,
    /// Every node of the grid.
    AllNodes,
}

impl PlanLevel {
    pub fn name(self) -> &'static str {
        match self {
            PlanLevel::Vertices => "vertices",
            PlanLevel::HalfNodes => "half",
            PlanLevel::AllNodes => "all",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "vertices" => Some(PlanLevel::Vertices),
            "half" => Some(PlanLevel::HalfNodes),
            "all" => Some(PlanLevel::AllNodes),
            _ => None,
        }
    }
}

/// Snapshot locations: a tensor grid of nodes of the parametric grids.
#[derive(Clone, Debug)]
pub struct SnapshotPlan {
    /// Grid of each parameter whose nodes are the snapshot locations.
    pub grids: Vec<ParametricGrid>,
    /// Indices of those nodes in the full grid of each parameter.
    pub indices: Vec<Vec<usize>>,
}

impl SnapshotPlan {
    /// The plan of a given level on the full grids.
    pub fn new(base: &[ParametricGrid], level: PlanLevel) -> Result<Self> {
        let mut grids = Vec::with_capacity(base.len());
        let mut indices = Vec::with_capacity(base.len());
        for g in base {
            let sub_k = match level {
                PlanLevel::Vertices => 1,
                PlanLevel::HalfNodes => 2,
                PlanLevel::AllNodes => g.degree(),
            };
            let (s, i) = g.subgrid(sub_k)?;
            grids.push(s);
            indices.push(i);
        }
        Ok(SnapshotPlan { grids, indices })
    }

    /// Node counts per parameter.
    pub fn shape(&self) -> Vec<usize> {
        self.grids.iter().map(ParametricGrid::n_nodes).collect()
    }

    /// Number of snapshots `n_s`.
    pub fn n_snapshots(&self) -> usize {
        self.shape().iter().product()
    }

    /// Parameter values of every snapshot, in row-major order (last
    /// parameter fastest).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let coords: Vec<Vec<f64>> = self.grids.iter().map(ParametricGrid::nodes).collect();
        let shape = self.shape();
        (0..self.n_snapshots())
            .map(|p| multi_index(p, &shape).iter().zip(&coords).map(|(&i, c)| c[i]).collect())
            .collect()
    }
}

/// Row-major multi-index of a flat position (last axis fastest).
pub fn multi_index(mut p: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for j in (0..shape.len()).rev() {
        idx[j] = p % shape[j];
        p /= shape[j];
    }
    idx
}

/// Flat position of a row-major multi-index.
pub fn flat_index(idx: &[usize], shape: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &n)| acc * n + i)
}

/// Dense order-`(n_pa + 1)` tensor of stacked spatial states over a grid of
/// parametric nodes, stored snapshot by snapshot.
#[derive(Clone, Debug)]
pub struct SnapshotTensor {
    /// Grid of each parametric axis (its nodes are the axis coordinates).
    pub grids: Vec<ParametricGrid>,
    /// Block sizes `[û, ρ, u, p, L]` of the spatial axis.
    pub blocks: [usize; 5],
    /// Full-order solves used to fill the tensor.
    pub solves: usize,
    /// Entry `(d, p)` at `data[p * n_dof + d]`, `p` the row-major
    /// parametric position.
    pub data: Vec<f64>,
}

impl SnapshotTensor {
    /// Tensor from snapshot columns (row-major parametric order).
    pub fn from_columns(grids: Vec<ParametricGrid>, blocks: [usize; 5], columns: Vec<Vec<f64>>) -> Result<Self> {
        let n_dof: usize = blocks.iter().sum();
        let n_s: usize = grids.iter().map(ParametricGrid::n_nodes).product();
        if columns.len() != n_s || columns.iter().any(|c| c.len() != n_dof) {
            return Err(Error::Invalid(format!(
                "expected {n_s} snapshots of length {n_dof}, got {} columns",
                columns.len()
            )));
        }
        Ok(SnapshotTensor {
            grids,
            blocks,
            solves: 0,
            data: columns.concat(),
        })
    }

    pub fn n_dof(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.grids.iter().map(ParametricGrid::n_nodes).collect()
    }

    pub fn n_snapshots(&self) -> usize {
        self.shape().iter().product()
    }

    /// Snapshot at flat parametric position `p`.
    pub fn column(&self, p: usize) -> &[f64] {
        let n = self.n_dof();
        &self.data[p * n..(p + 1) * n]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Text format:
    ///
    /// ```text
    /// pgdflow-snapshot-tensor 1
    /// solves <count>
    /// blocks <n_û> <n_ρ> <n_u> <n_p> <n_L>
    /// parameters <n_pa>
    /// grid <a> <b> <n_elements> <degree> <n_gauss>    (n_pa lines)
    /// shape <n_1> … <n_npa>
    /// coords <nodes of axis j>                        (n_pa lines)
    /// snapshot <values>                               (n_s lines, row-major
    ///                                                  parametric order)
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "pgdflow-snapshot-tensor 1");
        let _ = writeln!(s, "solves {}", self.solves);
        let b = self.blocks;
        let _ = writeln!(s, "blocks {} {} {} {} {}", b[0], b[1], b[2], b[3], b[4]);
        let _ = writeln!(s, "parameters {}", self.grids.len());
        for g in &self.grids {
            let (a, b) = g.interval();
            let _ = writeln!(s, "grid {a:e} {b:e} {} {} {}", g.n_elements(), g.degree(), g.n_gauss());
        }
        s.push_str("shape");
        for n in self.shape() {
            let _ = write!(s, " {n}");
        }
        s.push('\n');
        for g in &self.grids {
            s.push_str("coords");
            for v in g.nodes() {
                let _ = write!(s, " {v:e}");
            }
            s.push('\n');
        }
        for p in 0..self.n_snapshots() {
            s.push_str("snapshot");
            for v in self.column(p) {
                let _ = write!(s, " {v:e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut next = |key: &str| -> Result<(usize, Vec<&str>)> {
            let (n, l) = lines
                .next()
                .ok_or_else(|| perr(0, format!("unexpected end of file, expected '{key}'")))?;
            let mut it = l.split_whitespace();
            let k = it.next().unwrap_or("");
            if k != key {
                return Err(perr(n + 1, format!("expected '{key}', found '{k}'")));
            }
            Ok((n + 1, it.collect()))
        };
        fn nums<T: std::str::FromStr>(v: &[&str], line: usize, path: &Path) -> Result<Vec<T>> {
            v.iter()
                .map(|s| {
                    s.parse::<T>().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        message: format!("invalid number '{s}'"),
                    })
                })
                .collect()
        }
        let (l, v) = next("pgdflow-snapshot-tensor")?;
        if v != ["1"] {
            return Err(perr(l, "unsupported format version".into()));
        }
        let (l, v) = next("solves")?;
        let solves = *nums::<usize>(&v, l, path)?.first().ok_or_else(|| perr(l, "missing count".into()))?;
        let (l, v) = next("blocks")?;
        let b = nums::<usize>(&v, l, path)?;
        if b.len() != 5 {
            return Err(perr(l, "blocks needs five sizes".into()));
        }
        let blocks = [b[0], b[1], b[2], b[3], b[4]];
        let (l, v) = next("parameters")?;
        let n_pa = *nums::<usize>(&v, l, path)?.first().ok_or_else(|| perr(l, "missing count".into()))?;
        let mut grids = Vec::with_capacity(n_pa);
        for _ in 0..n_pa {
            let (l, v) = next("grid")?;
            if v.len() != 5 {
                return Err(perr(l, "grid needs a b n_elements degree n_gauss".into()));
            }
            let ab = nums::<f64>(&v[..2], l, path)?;
            let ints = nums::<usize>(&v[2..], l, path)?;
            grids.push(
                ParametricGrid::with_gauss(ab[0], ab[1], ints[0], ints[1], ints[2])
                    .map_err(|e| perr(l, e.to_string()))?,
            );
        }
        let (l, v) = next("shape")?;
        let shape = nums::<usize>(&v, l, path)?;
        if shape != grids.iter().map(ParametricGrid::n_nodes).collect::<Vec<_>>() {
            return Err(perr(l, "shape does not match the grids".into()));
        }
        for g in &grids {
            let (l, v) = next("coords")?;
            let c = nums::<f64>(&v, l, path)?;
            let expect = g.nodes();
            if c.len() != expect.len() || c.iter().zip(&expect).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs())) {
                return Err(perr(l, "coordinates do not match the grid nodes".into()));
            }
        }
        let n_dof: usize = blocks.iter().sum();
        let n_s: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n_dof * n_s);
        for _ in 0..n_s {
            let (l, v) = next("snapshot")?;
            if v.len() != n_dof {
                return Err(perr(l, format!("snapshot has {} values, expected {n_dof}", v.len())));
            }
            data.extend(nums::<f64>(&v, l, path)?);
        }
        Ok(SnapshotTensor {
            grids,
            blocks,
            solves,
            data,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

/// Block sizes `[û, ρ, u, p, L]` of a solver's state.
pub fn state_blocks(solver: &HdgSolver) -> [usize; 5] {
    let r = solver.disc().dofs.variable_ranges();
    [r[0].len(), r[1].len(), r[2].len(), r[3].len(), r[4].len()]
}

/// One full-order solve per plan point; the tensor records the solves.
pub fn compute_snapshots(plan: &SnapshotPlan, solver: &HdgSolver, par: Parallelism) -> Result<SnapshotTensor> {
    let points = plan.points();
    let sols = solver.solve_many(&points, par)?;
    let columns = sols.into_iter().map(|s| s.state).collect();
    let mut t = SnapshotTensor::from_columns(plan.grids.clone(), state_blocks(solver), columns)?;
    t.solves = points.len();
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_round_trip() {
        let shape = [3, 4, 2];
        for p in 0..24 {
            assert_eq!(flat_index(&multi_index(p, &shape), &shape), p);
        }
        assert_eq!(multi_index(5, &shape), vec![0, 2, 1]);
    }

    #[test]
    fn plan_sizes() {
        let g = vec![
            ParametricGrid::new(-1.0, 1.0, 10, 4).unwrap(),
            ParametricGrid::new(-2.0, -1.0, 20, 4).unwrap(),
        ];
        let p = SnapshotPlan::new(&g, PlanLevel::Vertices).unwrap();
        assert_eq!(p.n_snapshots(), 11 * 21);
        let p = SnapshotPlan::new(&g, PlanLevel::HalfNodes).unwrap();
        assert_eq!(p.n_snapshots(), 21 * 41);
        assert_eq!(p.points()[1], vec![-1.0, -1.975]);
    }

    #[test]
    fn text_round_trip() {
        let g = vec![ParametricGrid::new(0.0, 1.0, 2, 1).unwrap()];
        let cols = vec![vec![1.0, 2.0], vec![0.5, -1.0 / 3.0], vec![0.0, 1e-300]];
        let mut t = SnapshotTensor::from_columns(g, [2, 0, 0, 0, 0], cols).unwrap();
        t.solves = 3;
        let r = SnapshotTensor::parse(&t.to_text(), Path::new("t")).unwrap();
        assert_eq!(r.data, t.data);
        assert_eq!(r.solves, 3);
        assert!(SnapshotTensor::parse(&t.to_text().replace("shape 3", "shape 4"), Path::new("t")).is_err());
    }
}
