//! Geometry of the two-sphere microswimmer and its radius and distance
//! mappings.

use std::sync::Arc;

use super::{
    compose_mappings, Factor1D, IdentityField, MapTerm, Mat2, ParamFactor, SeparatedMapping,
    SpatialField, IDENTITY2,
};
use crate::{Error, Result};

/// Reference layout of the swimmer: channel `[-L, L] × [0, H]` (the
/// symmetry axis is `y = 0`) with half-disks of radius `r_ref` at `±x0`.
/// `r_out` bounds the region deformed by the radius mapping and `r_int` the
/// strip translated rigidly by the distance mapping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwimmerGeometry {
    pub l: f64,
    pub h: f64,
    pub x0: f64,
    pub r_ref: f64,
    pub r_out: f64,
    pub r_int: f64,
}

impl Default for SwimmerGeometry {
    fn default() -> Self {
        SwimmerGeometry {
            l: 6.0,
            h: 2.0,
            x0: 1.5,
            r_ref: 0.116,
            r_out: 0.45,
            r_int: 0.47,
        }
    }
}

/// Total volume constant: `(R⁺)³ + (R⁻)³ = 1/32`.
pub const VOLUME_CONSTANT: f64 = 1.0 / 32.0;

impl SwimmerGeometry {
    /// Checks the nesting `r_ref < r_out < r_int` and that the deformable
    /// strips fit in the channel without overlapping.
    pub fn validate(&self) -> Result<()> {
        let ok = self.r_ref > 0.0
            && self.r_ref < self.r_out
            && self.r_out < self.r_int
            && self.r_int < self.x0
            && self.x0 + self.r_int < self.l
            && self.r_int < self.h;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("inconsistent swimmer geometry {self:?}")))
        }
    }

    /// Radius of the sphere centred at `+x0`.
    pub fn r_plus(&self, mu1: f64) -> f64 {
        -0.0372 * mu1 * mu1 + 0.0968 * mu1 + 0.25
    }

    /// Radius of the sphere centred at `-x0`, from the volume constraint.
    pub fn r_minus(&self, mu1: f64) -> f64 {
        (VOLUME_CONSTANT - self.r_plus(mu1).powi(3)).cbrt()
    }

    /// Sphere centres in the reference domain, `[-x0, +x0]`.
    pub fn centres(&self) -> [[f64; 2]; 2] {
        [[-self.x0, 0.0], [self.x0, 0.0]]
    }

    /// True if the segment `a`–`b` lies on one of the mapping interfaces
    /// (the `r_out` circles or the vertical lines bounding the `r_int`
    /// strips).
    pub fn is_interface(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        let tol = 1e-9;
        for c in self.centres() {
            let ra = ((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2)).sqrt();
            let rb = ((b[0] - c[0]).powi(2) + (b[1] - c[1]).powi(2)).sqrt();
            if (ra - self.r_out).abs() < tol && (rb - self.r_out).abs() < tol {
                return true;
            }
        }
        for xl in self.strip_breaks() {
            if (a[0] - xl).abs() < tol && (b[0] - xl).abs() < tol {
                return true;
            }
        }
        false
    }

    /// x-coordinates where the distance function changes formula.
    pub fn strip_breaks(&self) -> [f64; 4] {
        [
            -self.x0 - self.r_int,
            -self.x0 + self.r_int,
            self.x0 - self.r_int,
            self.x0 + self.r_int,
        ]
    }

    /// Piecewise-linear distance function `d(x)` (value and derivative) using
    /// the formula of strip `region` (0..5 from left to right).
    pub fn distance_fn(&self, region: u32, x: f64) -> (f64, f64) {
        let (l, x0, ri) = (self.l, self.x0, self.r_int);
        match region {
            0 => {
                let s = 1.0 / (x0 + ri - l);
                ((x + l) * s, s)
            }
            1 => (-1.0, 0.0),
            2 => {
                let s = 1.0 / (x0 - ri);
                (x * s, s)
            }
            3 => (1.0, 0.0),
            _ => {
                let s = 1.0 / (x0 + ri - l);
                ((x - l) * s, s)
            }
        }
    }

    /// Strip containing `x` (breaks belong to the left strip).
    pub fn distance_region(&self, x: f64) -> u32 {
        self.strip_breaks().iter().filter(|&&b| x > b).count() as u32
    }

    /// Deterministic sample points of the reference fluid domain used to
    /// check that mapping compositions stay separable.
    pub fn sample_points(&self) -> Vec<[f64; 2]> {
        let mut pts = Vec::new();
        let nx = 61;
        let ny = 9;
        for i in 0..nx {
            let x = -self.l + 2.0 * self.l * i as f64 / (nx - 1) as f64;
            for j in 0..ny {
                let y = self.h * j as f64 / (ny - 1) as f64;
                pts.push([x, y]);
            }
        }
        for c in self.centres() {
            for i in 0..8 {
                let t = std::f64::consts::PI * (i as f64 + 0.5) / 8.0;
                for r in [self.r_ref, 0.5 * (self.r_ref + self.r_out), self.r_out] {
                    pts.push([c[0] + r * t.cos(), c[1] + r * t.sin()]);
                }
            }
        }
        pts.retain(|p| {
            self.centres()
                .iter()
                .all(|c| (p[0] - c[0]).hypot(p[1] - c[1]) >= self.r_ref - 1e-12)
        });
        pts
    }
}

fn in_disk(x: [f64; 2], c: [f64; 2], r: f64) -> bool {
    (x[0] - c[0]).hypot(x[1] - c[1]) <= r * (1.0 + 1e-12)
}

/// `(x - c)/|x - c|` inside the disk of radius `r_out` around `c`, else 0.
/// The direction is undefined at `c` itself (inside the solid sphere, never
/// part of the fluid mesh); it is taken as 0 there so that the centre maps
/// to the moved centre.
struct RadialUnitField {
    c: [f64; 2],
    r_out: f64,
}

impl SpatialField for RadialUnitField {
    fn region(&self, x: [f64; 2]) -> u32 {
        in_disk(x, self.c, self.r_out) as u32
    }
    fn value_in(&self, r: u32, x: [f64; 2]) -> [f64; 2] {
        if r == 0 {
            return [0.0; 2];
        }
        let v = [x[0] - self.c[0], x[1] - self.c[1]];
        let n = v[0].hypot(v[1]);
        if n == 0.0 {
            return [0.0; 2];
        }
        [v[0] / n, v[1] / n]
    }
    fn jacobian_in(&self, r: u32, x: [f64; 2]) -> Mat2 {
        if r == 0 {
            return [[0.0; 2]; 2];
        }
        let v = [x[0] - self.c[0], x[1] - self.c[1]];
        let n = v[0].hypot(v[1]);
        if n == 0.0 {
            return [[0.0; 2]; 2];
        }
        let n3 = n * n * n;
        [
            [1.0 / n - v[0] * v[0] / n3, -v[0] * v[1] / n3],
            [-v[1] * v[0] / n3, 1.0 / n - v[1] * v[1] / n3],
        ]
    }
    fn describe(&self) -> String {
        format!("(x-c)/r in disk c={:?}", self.c)
    }
}

/// `x - c` inside the disk, else 0.
struct RelativeField {
    c: [f64; 2],
    r_out: f64,
}

impl SpatialField for RelativeField {
    fn region(&self, x: [f64; 2]) -> u32 {
        in_disk(x, self.c, self.r_out) as u32
    }
    fn value_in(&self, r: u32, x: [f64; 2]) -> [f64; 2] {
        if r == 0 {
            [0.0; 2]
        } else {
            [x[0] - self.c[0], x[1] - self.c[1]]
        }
    }
    fn jacobian_in(&self, r: u32, _: [f64; 2]) -> Mat2 {
        if r == 0 {
            [[0.0; 2]; 2]
        } else {
            IDENTITY2
        }
    }
    fn describe(&self) -> String {
        format!("x-c in disk c={:?}", self.c)
    }
}

/// Constant `c` inside the disk around `c`, else 0; optionally the identity
/// outside both disks (`outside_identity`), which carries the fixed part of
/// the domain.
struct CentreField {
    c: [f64; 2],
    other: [f64; 2],
    r_out: f64,
    outside_identity: bool,
}

impl SpatialField for CentreField {
    fn region(&self, x: [f64; 2]) -> u32 {
        if in_disk(x, self.c, self.r_out) {
            1
        } else if in_disk(x, self.other, self.r_out) {
            2
        } else {
            0
        }
    }
    fn value_in(&self, r: u32, x: [f64; 2]) -> [f64; 2] {
        match r {
            1 => self.c,
            0 if self.outside_identity => x,
            _ => [0.0; 2],
        }
    }
    fn jacobian_in(&self, r: u32, _: [f64; 2]) -> Mat2 {
        if r == 0 && self.outside_identity {
            IDENTITY2
        } else {
            [[0.0; 2]; 2]
        }
    }
    fn describe(&self) -> String {
        if self.outside_identity {
            format!("c={:?} in disk, x outside both disks", self.c)
        } else {
            format!("c={:?} in disk", self.c)
        }
    }
}

/// `(d(x_1), 0)` with the piecewise distance function.
struct DistanceField {
    geom: SwimmerGeometry,
}

impl SpatialField for DistanceField {
    fn region(&self, x: [f64; 2]) -> u32 {
        self.geom.distance_region(x[0])
    }
    fn value_in(&self, r: u32, x: [f64; 2]) -> [f64; 2] {
        [self.geom.distance_fn(r, x[0]).0, 0.0]
    }
    fn jacobian_in(&self, r: u32, x: [f64; 2]) -> Mat2 {
        [[self.geom.distance_fn(r, x[0]).1, 0.0], [0.0, 0.0]]
    }
    fn describe(&self) -> String {
        "(d(x), 0)".into()
    }
}

/// Radius mapping over `interval` for μ₁: six terms, three per sphere. The
/// sphere at `+x0` takes radius `R⁺(μ₁)`, the one at `-x0` takes `R⁻(μ₁)`;
/// points beyond `r_out` from both centres are fixed.
pub fn radius_mapping(geom: &SwimmerGeometry, interval: (f64, f64)) -> Result<SeparatedMapping> {
    geom.validate()?;
    let g = *geom;
    let [cm, cp] = g.centres();
    let span = g.r_out - g.r_ref;
    let f1 = Factor1D::func("R_out(R+ - R_ref)/(R_out - R_ref)", move |m| {
        g.r_out * (g.r_plus(m) - g.r_ref) / span
    });
    let f2 = Factor1D::func("(R_out - R+)/(R_out - R_ref)", move |m| (g.r_out - g.r_plus(m)) / span);
    let f4 = Factor1D::func("R_out(R- - R_ref)/(R_out - R_ref)", move |m| {
        g.r_out * (g.r_minus(m) - g.r_ref) / span
    });
    let f5 = Factor1D::func("(R_out - R-)/(R_out - R_ref)", move |m| (g.r_out - g.r_minus(m)) / span);
    let terms = vec![
        MapTerm {
            field: Arc::new(RadialUnitField { c: cp, r_out: g.r_out }),
            factor: ParamFactor::single(1, 0, f1),
        },
        MapTerm {
            field: Arc::new(RelativeField { c: cp, r_out: g.r_out }),
            factor: ParamFactor::single(1, 0, f2),
        },
        MapTerm {
            field: Arc::new(CentreField {
                c: cp,
                other: cm,
                r_out: g.r_out,
                outside_identity: true,
            }),
            factor: ParamFactor::one(1),
        },
        MapTerm {
            field: Arc::new(RadialUnitField { c: cm, r_out: g.r_out }),
            factor: ParamFactor::single(1, 0, f4),
        },
        MapTerm {
            field: Arc::new(RelativeField { c: cm, r_out: g.r_out }),
            factor: ParamFactor::single(1, 0, f5),
        },
        MapTerm {
            field: Arc::new(CentreField {
                c: cm,
                other: cp,
                r_out: g.r_out,
                outside_identity: false,
            }),
            factor: ParamFactor::one(1),
        },
    ];
    check_interval(interval)?;
    Ok(SeparatedMapping {
        terms,
        intervals: vec![interval],
    })
}

/// Distance mapping over `interval` for μ₂: `x + (d(x), 0)·φ(μ₂)` with
/// `φ = -x0 μ₂ / 3`, which moves the sphere centres to `±(x0 - x0 μ₂/3)`.
pub fn distance_mapping(geom: &SwimmerGeometry, interval: (f64, f64)) -> Result<SeparatedMapping> {
    geom.validate()?;
    check_interval(interval)?;
    let x0 = geom.x0;
    Ok(SeparatedMapping {
        terms: vec![
            MapTerm {
                field: Arc::new(DistanceField { geom: *geom }),
                factor: ParamFactor::single(1, 0, Factor1D::func("-x0 mu/3", move |m| -x0 * m / 3.0)),
            },
            MapTerm {
                field: Arc::new(IdentityField),
                factor: ParamFactor::one(1),
            },
        ],
        intervals: vec![interval],
    })
}

fn check_interval((a, b): (f64, f64)) -> Result<()> {
    if a.is_finite() && b.is_finite() && a < b {
        Ok(())
    } else {
        Err(Error::Invalid(format!("invalid parametric interval [{a}, {b}]")))
    }
}

/// Which geometric parameters a swimmer study varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwimmerStudy {
    /// μ₁ only.
    Radius,
    /// μ₂ only, with equal spheres (μ₁ frozen at `frozen_mu1`).
    Distance,
    /// (μ₁, μ₂).
    Both,
}

/// Mapping for a swimmer study: the radius mapping, the distance mapping
/// composed after a frozen radius mapping, or the full composition
/// (radius first, then distance).
pub fn swimmer_mapping(
    geom: &SwimmerGeometry,
    study: SwimmerStudy,
    i1: (f64, f64),
    i2: (f64, f64),
    frozen_mu1: f64,
) -> Result<SeparatedMapping> {
    let samples = geom.sample_points();
    match study {
        SwimmerStudy::Radius => radius_mapping(geom, i1),
        SwimmerStudy::Distance => {
            let r = radius_mapping(geom, i1)?.freeze(0, frozen_mu1)?;
            compose_mappings(&r, &distance_mapping(geom, i2)?, &samples)
        }
        SwimmerStudy::Both => compose_mappings(&radius_mapping(geom, i1)?, &distance_mapping(geom, i2)?, &samples),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_at_interval_ends() {
        let g = SwimmerGeometry::default();
        assert!((g.r_plus(-1.0) - 0.116).abs() < 1e-12);
        assert!((g.r_plus(1.0) - 0.3096).abs() < 1e-12);
        assert!((g.r_minus(1.0) - 0.116).abs() < 5e-4);
        assert!((g.r_minus(-1.0) - 0.3096).abs() < 5e-4);
        assert!((g.r_minus(0.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn sphere_surfaces_map_to_new_radii() {
        let g = SwimmerGeometry::default();
        let m = radius_mapping(&g, (-1.0, 1.0)).unwrap();
        for mu in [-1.0, -0.3, 0.4, 1.0] {
            for (c, r) in [(g.x0, g.r_plus(mu)), (-g.x0, g.r_minus(mu))] {
                for t in [0.1f64, 1.0, 2.5] {
                    let x = [c + g.r_ref * t.cos(), g.r_ref * t.sin()];
                    let y = m.evaluate(x, &[mu]).unwrap();
                    assert!(((y[0] - c).hypot(y[1]) - r).abs() < 1e-12);
                    let x = [c + g.r_out * t.cos(), g.r_out * t.sin()];
                    let y = m.evaluate(x, &[mu]).unwrap();
                    assert!((y[0] - x[0]).abs() < 1e-12 && (y[1] - x[1]).abs() < 1e-12);
                }
            }
            let far = [4.0, 1.3];
            assert_eq!(m.evaluate(far, &[mu]).unwrap(), far);
        }
    }

    #[test]
    fn distance_moves_centres() {
        let g = SwimmerGeometry::default();
        let m = distance_mapping(&g, (-3.0, 2.0)).unwrap();
        for mu in [-3.0, -2.0, 0.0, 2.0] {
            let a = m.evaluate([-g.x0, 0.0], &[mu]).unwrap();
            let b = m.evaluate([g.x0, 0.0], &[mu]).unwrap();
            assert!((b[0] - a[0] - (3.0 - mu)).abs() < 1e-12);
        }
        assert!(m.evaluate([0.0, 0.0], &[2.5]).is_err());
        // Ends of the channel are fixed and d is continuous at the breaks.
        assert_eq!(m.evaluate([-6.0, 1.0], &[1.0]).unwrap(), [-6.0, 1.0]);
        for b in g.strip_breaks() {
            let r = g.distance_region(b);
            assert!((g.distance_fn(r, b).0 - g.distance_fn(r + 1, b).0).abs() < 1e-14);
        }
    }

    #[test]
    fn composition_has_expected_term_count() {
        let g = SwimmerGeometry::default();
        let m = swimmer_mapping(&g, SwimmerStudy::Both, (-1.0, 1.0), (-2.0, -1.0), 0.0).unwrap();
        assert_eq!(m.n_terms(), 7);
        assert_eq!(m.n_pa(), 2);
        let d = swimmer_mapping(&g, SwimmerStudy::Distance, (-1.0, 1.0), (-2.0, -1.0), 0.0).unwrap();
        assert_eq!(d.n_pa(), 1);
        let x = [g.x0 + 0.3, 0.1];
        let y = m.evaluate(x, &[0.5, -1.5]).unwrap();
        let r = radius_mapping(&g, (-1.0, 1.0)).unwrap().evaluate(x, &[0.5]).unwrap();
        let z = distance_mapping(&g, (-2.0, -1.0)).unwrap().evaluate(r, &[-1.5]).unwrap();
        assert!((y[0] - z[0]).abs() < 1e-13 && (y[1] - z[1]).abs() < 1e-13);
    }
}
