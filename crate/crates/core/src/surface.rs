//! Smooth parametric workpiece surfaces `S(u, v)`.
//!
//! Every kind has analytic first partials. Planes, paraboloids and sinusoids
//! also provide analytic second partials; Bézier patches differentiate their
//! unit normal numerically.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent when std is in the build graph
use num_traits::Float;
use nalgebra::{Isometry3, Matrix2, Point3, Vector2, Vector3};

use crate::{Error, Result};

/// Step used for central differences of the Bézier normal.
const NORMAL_FD_STEP: f64 = 1e-6;

/// Rectangular parameter domain, closed on all sides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Domain {
    pub fn new(u_min: f64, u_max: f64, v_min: f64, v_max: f64) -> Result<Self> {
        if !(u_min < u_max && v_min < v_max) {
            return Err(Error::InvalidModel("surface domain is not a proper rectangle".into()));
        }
        Ok(Self {
            u_min,
            u_max,
            v_min,
            v_max,
        })
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        self.u_min <= u && u <= self.u_max && self.v_min <= v && v <= self.v_max
    }

    pub fn clamp(&self, u: f64, v: f64) -> (f64, f64) {
        (u.clamp(self.u_min, self.u_max), v.clamp(self.v_min, self.v_max))
    }

    pub fn width(&self) -> f64 {
        self.u_max - self.u_min
    }

    pub fn height(&self) -> f64 {
        self.v_max - self.v_min
    }

    /// `n` equally spaced values per side, endpoints included.
    fn lattice(&self, n: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let step = move |lo: f64, span: f64, k: usize| lo + span * k as f64 / (n - 1) as f64;
        (0..n).flat_map(move |i| {
            (0..n).map(move |j| {
                (
                    step(self.u_min, self.width(), i),
                    step(self.v_min, self.height(), j),
                )
            })
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceKind {
    /// `origin + u·span_u + v·span_v`
    Plane {
        origin: Vector3<f64>,
        span_u: Vector3<f64>,
        span_v: Vector3<f64>,
    },
    /// `(u, v, a·u² + b·v²)`
    Paraboloid { a: f64, b: f64 },
    /// `(u, v, A·sin(f·u)·cos(f·v))`
    Sinusoid { amplitude: f64, frequency: f64 },
    /// Tensor-product Bézier patch; `control[i][j]` with `i` along `u`.
    BezierPatch { control: Vec<Vec<Vector3<f64>>> },
}

/// A surface kind placed in the world by a rigid transform.
#[derive(Clone, Debug, PartialEq)]
pub struct Surface {
    kind: SurfaceKind,
    domain: Domain,
    placement: Isometry3<f64>,
}

/// Partial derivatives at a parameter point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Partials {
    pub du: Vector3<f64>,
    pub dv: Vector3<f64>,
}

/// Surface normal: the raw cross product and its normalization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normal {
    pub raw: Vector3<f64>,
    pub unit: Vector3<f64>,
}

#[derive(Clone, Copy, Debug)]
struct SecondPartials {
    uu: Vector3<f64>,
    uv: Vector3<f64>,
    vv: Vector3<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Bernstein basis values of degree `n` at `t` and their derivatives.
fn bernstein(n: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let value = |deg: usize, i: isize| -> f64 {
        if i < 0 || i as usize > deg {
            0.0
        } else {
            let i = i as usize;
            binomial(deg, i) * t.powi(i as i32) * (1.0 - t).powi((deg - i) as i32)
        }
    };
    let b = (0..=n).map(|i| value(n, i as isize)).collect();
    let db = (0..=n)
        .map(|i| {
            if n == 0 {
                0.0
            } else {
                n as f64 * (value(n - 1, i as isize - 1) - value(n - 1, i as isize))
            }
        })
        .collect();
    (b, db)
}

impl Surface {
    pub fn new(kind: SurfaceKind, domain: Domain) -> Result<Self> {
        Self::placed(kind, domain, Isometry3::identity())
    }

    /// Validates the kind and checks the parametrization is regular on a
    /// dense probe grid.
    pub fn placed(kind: SurfaceKind, domain: Domain, placement: Isometry3<f64>) -> Result<Self> {
        if let SurfaceKind::BezierPatch { control } = &kind {
            let cols = control.first().map_or(0, Vec::len);
            if control.len() < 2 || cols < 2 || control.iter().any(|row| row.len() != cols) {
                return Err(Error::InvalidModel(
                    "bezier patch needs a rectangular grid of at least 2x2 control points".into(),
                ));
            }
        }
        let surface = Self {
            kind,
            domain,
            placement,
        };
        for (u, v) in domain.lattice(33) {
            let p = surface.partials(u, v);
            if p.du.cross(&p.dv).norm() <= 1e-9 {
                return Err(Error::DegenerateSurface { u, v });
            }
        }
        Ok(surface)
    }

    pub fn kind(&self) -> &SurfaceKind {
        &self.kind
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn placement(&self) -> &Isometry3<f64> {
        &self.placement
    }

    fn local_eval(&self, u: f64, v: f64) -> Vector3<f64> {
        match &self.kind {
            SurfaceKind::Plane {
                origin,
                span_u,
                span_v,
            } => origin + span_u * u + span_v * v,
            SurfaceKind::Paraboloid { a, b } => Vector3::new(u, v, a * u * u + b * v * v),
            SurfaceKind::Sinusoid {
                amplitude,
                frequency,
            } => Vector3::new(
                u,
                v,
                amplitude * (frequency * u).sin() * (frequency * v).cos(),
            ),
            SurfaceKind::BezierPatch { control } => {
                let (bu, _) = bernstein(control.len() - 1, u);
                let (bv, _) = bernstein(control[0].len() - 1, v);
                let mut p = Vector3::zeros();
                for (i, row) in control.iter().enumerate() {
                    for (j, c) in row.iter().enumerate() {
                        p += c * (bu[i] * bv[j]);
                    }
                }
                p
            }
        }
    }

    fn local_partials(&self, u: f64, v: f64) -> Partials {
        match &self.kind {
            SurfaceKind::Plane { span_u, span_v, .. } => Partials {
                du: *span_u,
                dv: *span_v,
            },
            SurfaceKind::Paraboloid { a, b } => Partials {
                du: Vector3::new(1.0, 0.0, 2.0 * a * u),
                dv: Vector3::new(0.0, 1.0, 2.0 * b * v),
            },
            SurfaceKind::Sinusoid {
                amplitude,
                frequency,
            } => {
                let (f, a) = (*frequency, *amplitude);
                Partials {
                    du: Vector3::new(1.0, 0.0, a * f * (f * u).cos() * (f * v).cos()),
                    dv: Vector3::new(0.0, 1.0, -a * f * (f * u).sin() * (f * v).sin()),
                }
            }
            SurfaceKind::BezierPatch { control } => {
                let (bu, dbu) = bernstein(control.len() - 1, u);
                let (bv, dbv) = bernstein(control[0].len() - 1, v);
                let mut du = Vector3::zeros();
                let mut dv = Vector3::zeros();
                for (i, row) in control.iter().enumerate() {
                    for (j, c) in row.iter().enumerate() {
                        du += c * (dbu[i] * bv[j]);
                        dv += c * (bu[i] * dbv[j]);
                    }
                }
                Partials { du, dv }
            }
        }
    }

    fn local_second_partials(&self, u: f64, v: f64) -> Option<SecondPartials> {
        match &self.kind {
            SurfaceKind::Plane { .. } => Some(SecondPartials {
                uu: Vector3::zeros(),
                uv: Vector3::zeros(),
                vv: Vector3::zeros(),
            }),
            SurfaceKind::Paraboloid { a, b } => Some(SecondPartials {
                uu: Vector3::new(0.0, 0.0, 2.0 * a),
                uv: Vector3::zeros(),
                vv: Vector3::new(0.0, 0.0, 2.0 * b),
            }),
            SurfaceKind::Sinusoid {
                amplitude,
                frequency,
            } => {
                let (f, a) = (*frequency, *amplitude);
                let (su, cu) = ((f * u).sin(), (f * u).cos());
                let (sv, cv) = ((f * v).sin(), (f * v).cos());
                Some(SecondPartials {
                    uu: Vector3::new(0.0, 0.0, -a * f * f * su * cv),
                    uv: Vector3::new(0.0, 0.0, -a * f * f * cu * sv),
                    vv: Vector3::new(0.0, 0.0, -a * f * f * su * cv),
                })
            }
            SurfaceKind::BezierPatch { .. } => None,
        }
    }

    /// Surface point; defined outside the domain as well.
    pub fn eval(&self, u: f64, v: f64) -> Vector3<f64> {
        (self.placement * Point3::from(self.local_eval(u, v))).coords
    }

    pub fn partials(&self, u: f64, v: f64) -> Partials {
        let p = self.local_partials(u, v);
        Partials {
            du: self.placement.rotation * p.du,
            dv: self.placement.rotation * p.dv,
        }
    }

    pub fn normal(&self, u: f64, v: f64) -> Result<Normal> {
        let p = self.partials(u, v);
        let raw = p.du.cross(&p.dv);
        let norm = raw.norm();
        if norm <= 1e-12 {
            return Err(Error::DegenerateSurface { u, v });
        }
        Ok(Normal {
            raw,
            unit: raw / norm,
        })
    }

    /// Partial derivatives of the unit normal with respect to `u` and `v`.
    pub fn unit_normal_partials(&self, u: f64, v: f64) -> Result<(Vector3<f64>, Vector3<f64>)> {
        match self.local_second_partials(u, v) {
            Some(second) => {
                let p = self.local_partials(u, v);
                let raw = p.du.cross(&p.dv);
                let norm = raw.norm();
                if norm <= 1e-12 {
                    return Err(Error::DegenerateSurface { u, v });
                }
                let unit = raw / norm;
                let raw_u = second.uu.cross(&p.dv) + p.du.cross(&second.uv);
                let raw_v = second.uv.cross(&p.dv) + p.du.cross(&second.vv);
                let tangential = |d: Vector3<f64>| (d - unit * unit.dot(&d)) / norm;
                let rot = self.placement.rotation;
                Ok((rot * tangential(raw_u), rot * tangential(raw_v)))
            }
            None => {
                let h = NORMAL_FD_STEP;
                let nu = (self.normal(u + h, v)?.unit - self.normal(u - h, v)?.unit) / (2.0 * h);
                let nv = (self.normal(u, v + h)?.unit - self.normal(u, v - h)?.unit) / (2.0 * h);
                Ok((nu, nv))
            }
        }
    }

    pub fn in_domain(&self, u: f64, v: f64) -> bool {
        self.domain.contains(u, v)
    }

    /// Domain point closest to `p`: best seeds of a 64×64 lattice (corners
    /// included) refined by damped, domain-clamped Gauss-Newton. Never worse
    /// than the best lattice point.
    pub fn closest_point(&self, p: &Vector3<f64>) -> (f64, f64) {
        const SEEDS: usize = 64;
        const REFINED: usize = 8;
        let dist2 = |u: f64, v: f64| (self.eval(u, v) - p).norm_squared();

        let mut seeds: Vec<(f64, f64, f64)> = self
            .domain
            .lattice(SEEDS)
            .map(|(u, v)| (dist2(u, v), u, v))
            .collect();
        seeds.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut best = seeds[0];
        for &(d0, u0, v0) in seeds.iter().take(REFINED) {
            let (u, v, d) = self.refine_closest(p, u0, v0, d0);
            if d < best.0 {
                best = (d, u, v);
            }
        }
        (best.1, best.2)
    }

    fn refine_closest(&self, p: &Vector3<f64>, mut u: f64, mut v: f64, mut d: f64) -> (f64, f64, f64) {
        let dist2 = |u: f64, v: f64| (self.eval(u, v) - p).norm_squared();
        for _ in 0..50 {
            let r = self.eval(u, v) - p;
            let Partials { du, dv } = self.partials(u, v);
            let grad = Vector2::new(du.dot(&r), dv.dot(&r));
            let normal_eq = Matrix2::new(du.dot(&du), du.dot(&dv), du.dot(&dv), dv.dot(&dv));
            let step = normal_eq
                .try_inverse()
                .map(|inv| -(inv * grad))
                .unwrap_or(-grad);

            // the clamped Gauss-Newton step can point into a boundary; the
            // projected gradient step then still slides along it
            let gradient_step = -grad / normal_eq.norm().max(1e-12);
            let mut accepted = None;
            'search: for dir in [step, gradient_step] {
                let mut alpha = 1.0;
                for _ in 0..30 {
                    let (nu, nv) = self.domain.clamp(u + alpha * dir.x, v + alpha * dir.y);
                    let nd = dist2(nu, nv);
                    if nd < d {
                        accepted = Some((nu, nv, nd));
                        break 'search;
                    }
                    alpha *= 0.5;
                }
            }
            let Some((nu, nv, nd)) = accepted else { break };
            let moved = (nu - u).abs().max((nv - v).abs());
            u = nu;
            v = nv;
            d = nd;
            if moved < 1e-10 {
                break;
            }
        }
        (u, v, d)
    }
}
