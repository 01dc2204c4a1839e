//! Gauss and Gauss–Lobatto rules on lines, collapsed Gauss rules on the
//! reference triangle.

use crate::{Error, Result};

/// Evaluates the Legendre polynomial `P_n` and its derivative at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    // P'_n from the standard recurrence; valid away from x = ±1, where the
    // Newton iterations below never land.
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss–Legendre rule with `n` points on `[-1, 1]`, exact for polynomials of
/// degree `2n - 1`. Points are sorted ascending.
pub fn gauss_quadrature_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "a Gauss rule needs at least one point");
    let mut pts = vec![0.0; n];
    let mut wts = vec![0.0; n];
    for i in 0..n {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        pts[i] = x;
        wts[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    if n % 2 == 1 {
        pts[n / 2] = 0.0;
    }
    (pts, wts)
}

/// The `k + 1` one-dimensional Fekete nodes on `[-1, 1]`, which coincide with
/// the Gauss–Lobatto points: the endpoints plus the roots of `P'_k`.
pub fn fekete_nodes_1d(k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::Invalid("Fekete nodes need degree k >= 1".into()));
    }
    let mut nodes = vec![-1.0; k + 1];
    nodes[k] = 1.0;
    for i in 1..k {
        // Chebyshev–Gauss–Lobatto guess, refined by Newton on P'_k using
        // (1 - x^2) P''_k = 2x P'_k - k(k+1) P_k.
        let mut x = -(std::f64::consts::PI * i as f64 / k as f64).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(k, x);
            let d2p = (2.0 * x * dp - (k * (k + 1)) as f64 * p) / (1.0 - x * x);
            let dx = dp / d2p;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
    }
    if k.is_multiple_of(2) {
        nodes[k / 2] = 0.0;
    }
    // Enforce exact symmetry.
    for i in 0..=k / 2 {
        let s = 0.5 * (nodes[k - i] - nodes[i]);
        nodes[i] = -s;
        nodes[k - i] = s;
    }
    Ok(nodes)
}

/// Largest polynomial degree accepted by [`triangle_quadrature`].
pub const MAX_TRIANGLE_DEGREE: usize = 40;

/// Quadrature rule on the reference triangle `{x, y >= 0, x + y <= 1}`.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Collapsed (Duffy) tensor Gauss rule exact for polynomials of total degree
/// `degree`. Weights are positive and sum to the triangle area 1/2.
pub fn triangle_quadrature(degree: usize) -> Result<TriangleRule> {
    if degree > MAX_TRIANGLE_DEGREE {
        return Err(Error::Invalid(format!(
            "triangle quadrature degree {degree} above supported maximum {MAX_TRIANGLE_DEGREE}"
        )));
    }
    // In collapsed coordinates a degree-d polynomial times the Jacobian (1 - v)
    // has degree d + 1 in v, so n Gauss points with 2n - 1 >= d + 1 suffice.
    let n = (degree + 3) / 2;
    let (g, w) = gauss_quadrature_1d(n.max(1));
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (a, wa) in g.iter().zip(&w) {
        let u = 0.5 * (1.0 + a);
        for (b, wb) in g.iter().zip(&w) {
            let v = 0.5 * (1.0 + b);
            points.push([u * (1.0 - v), v]);
            weights.push(0.25 * wa * wb * (1.0 - v));
        }
    }
    Ok(TriangleRule { points, weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_small_rules() {
        let (p, w) = gauss_quadrature_1d(1);
        assert_eq!(p, vec![0.0]);
        assert!((w[0] - 2.0).abs() < 1e-15);
        let (p, w) = gauss_quadrature_1d(2);
        assert!((p[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((p[0] + p[1]).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_exactness() {
        for n in 1..=12 {
            let (p, w) = gauss_quadrature_1d(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for d in 0..2 * n {
                let q: f64 = p.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} d={d}");
            }
        }
        let (p, w) = gauss_quadrature_1d(5);
        let q: f64 = p.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((q - 0.4).abs() < 1e-14);
    }

    #[test]
    fn fekete_nodes() {
        assert!(fekete_nodes_1d(0).is_err());
        assert_eq!(fekete_nodes_1d(1).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(fekete_nodes_1d(2).unwrap(), vec![-1.0, 0.0, 1.0]);
        // P4'(x) = (140 x^3 - 60 x) / 8 vanishes at sqrt(3/7).
        let n4 = fekete_nodes_1d(4).unwrap();
        let r = (3.0f64 / 7.0).sqrt();
        let expect = [-1.0, -r, 0.0, r, 1.0];
        for (a, b) in n4.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        // k = 3: roots of P3' = (15 x^2 - 3)/2, i.e. ±1/sqrt(5).
        let n3 = fekete_nodes_1d(3).unwrap();
        assert!((n3[2] - 1.0 / 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn triangle_rules() {
        let r = triangle_quadrature(4).unwrap();
        assert!(r.weights.iter().all(|w| *w > 0.0));
        assert!((r.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        let xy: f64 = r
            .points
            .iter()
            .zip(&r.weights)
            .map(|(p, w)| w * p[0] * p[1])
            .sum();
        assert!((xy - 1.0 / 24.0).abs() < 1e-15);
        assert!(triangle_quadrature(MAX_TRIANGLE_DEGREE + 1).is_err());
    }

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn triangle_degree_eight_monomials() {
        // Analytic moments: int x^a y^b = a! b! / (a + b + 2)!.
        let r = triangle_quadrature(8).unwrap();
        for a in 0..=8u32 {
            for b in 0..=(8 - a) {
                let q: f64 = r
                    .points
                    .iter()
                    .zip(&r.weights)
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                    .sum();
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                assert!((q - exact).abs() < 1e-13, "a={a} b={b}");
            }
        }
    }
}
