//! Plain-text mesh file format.
//!
//! ```text
//! nsd k n_nodes n_elements n_boundary_faces
//! x y                      (n_nodes lines)
//! id id id ...             (n_elements lines, (k+1)(k+2)/2 ids each)
//! elem localface tag       (n_boundary_faces lines)
//! ```
//!
//! Ids are 0-based. Element nodes are listed counter-clockwise: vertices,
//! then the interior nodes of edges `v0→v1`, `v1→v2`, `v2→v0`, then the
//! element-interior nodes (see [`super::triangle_lattice`]). Tags are
//! `1 = Dirichlet`, `2 = Neumann`, `3 = Slip`. Blank lines and lines starting
//! with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::{basis::triangle_node_count, FaceTag, ReferenceMesh};
use crate::{Error, Result};

/// Reads a mesh file.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<ReferenceMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text, path)
}

/// Parses mesh text; `path` is only used in error messages.
pub fn parse_mesh(text: &str, path: &Path) -> Result<ReferenceMesh> {
    let perr = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let mut next = |what: &str| -> Result<(usize, Vec<&str>)> {
        lines
            .next()
            .map(|(n, l)| (n, l.split_whitespace().collect()))
            .ok_or_else(|| perr(text.lines().count(), format!("unexpected end of file, expected {what}")))
    };
    fn num<T: std::str::FromStr>(tok: &str, line: usize, path: &Path) -> Result<T> {
        tok.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("cannot parse '{tok}'"),
        })
    }

    let (ln, h) = next("header")?;
    if h.len() != 5 {
        return Err(perr(ln, "header must be 'nsd k n_nodes n_elements n_boundary_faces'".into()));
    }
    let nsd: usize = num(h[0], ln, path)?;
    if nsd != 2 {
        return Err(perr(ln, format!("only nsd = 2 is supported, got {nsd}")));
    }
    let k: usize = num(h[1], ln, path)?;
    if k == 0 {
        return Err(perr(ln, "degree k must be at least 1".into()));
    }
    let (nn, ne, nb): (usize, usize, usize) =
        (num(h[2], ln, path)?, num(h[3], ln, path)?, num(h[4], ln, path)?);
    let npe = triangle_node_count(k);

    let mut nodes = Vec::with_capacity(nn);
    for _ in 0..nn {
        let (ln, t) = next("node line")?;
        if t.len() != 2 {
            return Err(perr(ln, "node line must be 'x y'".into()));
        }
        nodes.push([num(t[0], ln, path)?, num(t[1], ln, path)?]);
    }
    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, t) = next("element line")?;
        if t.len() != npe {
            return Err(perr(ln, format!("element line needs {npe} node ids, got {}", t.len())));
        }
        let ids = t
            .iter()
            .map(|s| num::<usize>(s, ln, path))
            .collect::<Result<Vec<_>>>()?;
        if let Some(bad) = ids.iter().find(|&&i| i >= nn) {
            return Err(perr(ln, format!("node id {bad} out of range")));
        }
        elements.push(ids);
    }
    let mut bnd = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, t) = next("boundary-face line")?;
        if t.len() != 3 {
            return Err(perr(ln, "boundary-face line must be 'elem localface tag'".into()));
        }
        let e: usize = num(t[0], ln, path)?;
        let lf: usize = num(t[1], ln, path)?;
        let code: u32 = num(t[2], ln, path)?;
        let tag = FaceTag::from_code(code).ok_or_else(|| perr(ln, format!("unknown tag {code}")))?;
        if e >= ne || lf > 2 {
            return Err(perr(ln, format!("boundary face ({e}, {lf}) out of range")));
        }
        bnd.push((e, lf, tag));
    }
    if let Some((ln, _)) = lines.next() {
        return Err(perr(ln, "trailing data after the last boundary-face line".into()));
    }
    ReferenceMesh::new(k, nodes, elements, &bnd)
}

/// Serialises a mesh in the file format (round-trips through [`parse_mesh`]).
pub fn mesh_to_string(mesh: &ReferenceMesh) -> String {
    let bnd = mesh.boundary_records();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "2 {} {} {} {}",
        mesh.degree(),
        mesh.nodes().len(),
        mesh.n_elements(),
        bnd.len()
    );
    for p in mesh.nodes() {
        let _ = writeln!(s, "{:.17e} {:.17e}", p[0], p[1]);
    }
    for e in 0..mesh.n_elements() {
        let ids: Vec<String> = mesh.element(e).iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "{}", ids.join(" "));
    }
    for (e, lf, tag) in bnd {
        let _ = writeln!(s, "{e} {lf} {}", tag.code().unwrap_or(0));
    }
    s
}

/// Writes a mesh file.
pub fn write_mesh(mesh: &ReferenceMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mesh_to_string(mesh)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test.msh")
    }

    #[test]
    fn single_triangle() {
        let txt = "2 1 3 1 3\n0 0\n1 0\n0 1\n0 1 2\n0 0 1\n0 1 2\n0 2 3\n";
        let m = parse_mesh(txt, p()).unwrap();
        assert_eq!(m.n_elements(), 1);
        assert_eq!(m.faces().len(), 3);
        assert!(m.faces().iter().all(|f| f.right.is_none()));
    }

    #[test]
    fn two_triangles_round_trip() {
        let txt = "# square\n2 1 4 2 4\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n0 0 1\n0 1 2\n1 1 3\n1 2 1\n";
        let m = parse_mesh(txt, p()).unwrap();
        assert_eq!(m.faces().iter().filter(|f| f.right.is_some()).count(), 1);
        assert_eq!(m.faces().iter().filter(|f| f.right.is_none()).count(), 4);
        let again = parse_mesh(&mesh_to_string(&m), p()).unwrap();
        assert_eq!(again.faces(), m.faces());
        assert_eq!(again.nodes(), m.nodes());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let txt = "2 1 3 1 3\n0 0\n1 x\n0 1\n0 1 2\n0 0 1\n0 1 2\n0 2 3\n";
        match parse_mesh(txt, p()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let txt = "2 1 3 1 3\n0 0\n1 0\n0 1\n0 1 2\n0 0 1\n0 1 2\n0 2 7\n";
        match parse_mesh(txt, p()) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 8);
                assert!(message.contains("unknown tag"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonconforming_connectivity_rejected() {
        // Three triangles on one edge.
        let txt = "2 1 5 3 0\n0 0\n1 0\n0 1\n0 -1\n1 1\n0 1 2\n1 0 3\n0 1 4\n";
        assert!(matches!(parse_mesh(txt, p()), Err(Error::Invalid(_))));
    }
}
