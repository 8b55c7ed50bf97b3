//! Synthetic depth-camera stand-in: samples every visible scene surface on a
//! regular grid and perturbs positions, colours and normals with fresh
//! Gaussian noise on every frame.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::cloud::{PointCloud, PointSample, SurfaceTag};
use super::geom::{add, norm, normalize, scale, Vec3};
use crate::error::{Error, Result};
use crate::simworld::{Lab, Scene, Shape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    /// Per-axis positional standard deviation, metres.
    pub depth: f64,
    /// Per-channel CIELab standard deviation.
    pub color: f64,
    /// Per-component standard deviation added to unit normals before renormalizing.
    pub normal: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            depth: 0.001,
            color: 0.5,
            normal: 0.02,
        }
    }
}

impl NoiseParams {
    pub fn noiseless() -> Self {
        Self {
            depth: 0.0,
            color: 0.0,
            normal: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderParams {
    /// Points per square metre of surface.
    pub density: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        Self { density: 25_000.0 }
    }
}

struct Sampler {
    spacing: f64,
    cloud: PointCloud,
}

impl Sampler {
    fn emit(&mut self, position: Vec3, normal: Vec3, color: Lab, tag: SurfaceTag) {
        self.cloud.push(PointSample { position, color, normal }, tag);
    }

    fn cells(&self, length: f64) -> usize {
        ((length / self.spacing).round() as usize).max(1)
    }

    /// Parallelogram spanned by the edge vectors `u` and `v` from `origin`.
    #[allow(clippy::too_many_arguments)]
    fn rect(&mut self, origin: Vec3, u: Vec3, v: Vec3, normal: Vec3, color: Lab, tag: SurfaceTag, keep: impl Fn(Vec3) -> bool) {
        let (nu, nv) = (self.cells(norm(u)), self.cells(norm(v)));
        for j in 0..nv {
            for i in 0..nu {
                let fu = (i as f64 + 0.5) / nu as f64;
                let fv = (j as f64 + 0.5) / nv as f64;
                let p = add(origin, add(scale(u, fu), scale(v, fv)));
                if keep(p) {
                    self.emit(p, normal, color, tag);
                }
            }
        }
    }

    /// Disc of `radius` around `center` in the plane of the unit axes `e1`, `e2`.
    #[allow(clippy::too_many_arguments)]
    fn disc(&mut self, center: Vec3, e1: Vec3, e2: Vec3, radius: f64, normal: Vec3, color: Lab, tag: SurfaceTag) {
        let origin = add(center, add(scale(e1, -radius), scale(e2, -radius)));
        let (u, v) = (scale(e1, 2.0 * radius), scale(e2, 2.0 * radius));
        let n = self.cells(2.0 * radius);
        for j in 0..n {
            for i in 0..n {
                let fu = (i as f64 + 0.5) / n as f64;
                let fv = (j as f64 + 0.5) / n as f64;
                let (du, dv) = ((fu - 0.5) * 2.0 * radius, (fv - 0.5) * 2.0 * radius);
                if du.hypot(dv) <= radius {
                    let p = add(origin, add(scale(u, fu), scale(v, fv)));
                    self.emit(p, normal, color, tag);
                }
            }
        }
    }

    /// Lateral surface of a cylinder with axis `axis` (unit) starting at `base`.
    #[allow(clippy::too_many_arguments)]
    fn tube(&mut self, base: Vec3, axis: Vec3, e1: Vec3, e2: Vec3, radius: f64, length: f64, color: Lab, tag: SurfaceTag) {
        let around = self.cells(2.0 * PI * radius).max(3);
        let along = self.cells(length);
        for j in 0..along {
            let t = (j as f64 + 0.5) / along as f64 * length;
            for i in 0..around {
                let angle = (i as f64 + 0.5) / around as f64 * 2.0 * PI;
                let radial = add(scale(e1, angle.cos()), scale(e2, angle.sin()));
                let p = add(base, add(scale(axis, t), scale(radial, radius)));
                self.emit(p, radial, color, tag);
            }
        }
    }
}

const X: Vec3 = [1.0, 0.0, 0.0];
const Y: Vec3 = [0.0, 1.0, 0.0];
const Z: Vec3 = [0.0, 0.0, 1.0];

fn neg(v: Vec3) -> Vec3 {
    scale(v, -1.0)
}

/// Noise-free surface samples of `scene`.
pub fn sample_surfaces(scene: &Scene, params: &RenderParams) -> PointCloud {
    let mut s = Sampler {
        spacing: 1.0 / params.density.sqrt(),
        cloud: PointCloud::default(),
    };
    let t = &scene.table;
    let (w, d) = (t.max[0] - t.min[0], t.max[1] - t.min[1]);
    s.rect(
        [t.min[0], t.min[1], 0.0],
        scale(X, w),
        scale(Y, d),
        Z,
        t.color,
        SurfaceTag::Table,
        |p| !scene.objects.iter().any(|o| o.footprint_contains([p[0], p[1]], 0.0)),
    );

    let wall_y = scene.wall_y();
    if let Some(wall) = &scene.wall {
        s.rect(
            [t.min[0], wall_y, 0.0],
            scale(X, w),
            scale(Z, wall.height),
            neg(Y),
            wall.color,
            SurfaceTag::Wall,
            |p| !scene.buttons.iter().any(|b| b.housing_footprint_contains([p[0], p[2]])),
        );
    }

    for (k, o) in scene.objects.iter().enumerate() {
        let tag = SurfaceTag::Object(k);
        let [cx, cy] = o.position;
        match o.shape {
            Shape::Box { size: [sx, sy, sz] } => {
                let (x0, y0) = (cx - 0.5 * sx, cy - 0.5 * sy);
                let all = |_: Vec3| true;
                s.rect([x0, y0, sz], scale(X, sx), scale(Y, sy), Z, o.color, tag, all);
                s.rect([x0, y0, 0.0], scale(X, sx), scale(Z, sz), neg(Y), o.color, tag, all);
                s.rect([x0, y0 + sy, 0.0], scale(X, sx), scale(Z, sz), Y, o.color, tag, all);
                s.rect([x0, y0, 0.0], scale(Y, sy), scale(Z, sz), neg(X), o.color, tag, all);
                s.rect([x0 + sx, y0, 0.0], scale(Y, sy), scale(Z, sz), X, o.color, tag, all);
            }
            Shape::Cylinder { radius, height } => {
                s.disc([cx, cy, height], X, Y, radius, Z, o.color, tag);
                s.tube([cx, cy, 0.0], Z, X, Y, radius, height, o.color, tag);
            }
        }
    }

    for (k, b) in scene.buttons.iter().enumerate() {
        let housing = SurfaceTag::ButtonHousing(k);
        let [hw, hh] = b.half_extents();
        let (x0, z0) = (b.center[0] - hw, b.center[1] - hh);
        let front = wall_y - b.depth;
        let (bw, bh) = (2.0 * hw, 2.0 * hh);
        let c = b.housing_color;
        s.rect([x0, front, z0], scale(X, bw), scale(Z, bh), neg(Y), c, housing, |p| {
            (p[0] - b.center[0]).hypot(p[2] - b.center[1]) > b.disc_radius
        });
        let all = |_: Vec3| true;
        s.rect([x0, front, z0 + bh], scale(X, bw), scale(Y, b.depth), Z, c, housing, all);
        s.rect([x0, front, z0], scale(X, bw), scale(Y, b.depth), neg(Z), c, housing, all);
        s.rect([x0, front, z0], scale(Y, b.depth), scale(Z, bh), neg(X), c, housing, all);
        s.rect([x0 + bw, front, z0], scale(Y, b.depth), scale(Z, bh), X, c, housing, all);

        let disc = SurfaceTag::ButtonDisc(k);
        let face = front - b.disc_height;
        s.disc(
            [b.center[0], face, b.center[1]],
            X,
            Z,
            b.disc_radius,
            neg(Y),
            b.disc_color,
            disc,
        );
        s.tube(
            [b.center[0], face, b.center[1]],
            Y,
            X,
            Z,
            b.disc_radius,
            b.disc_height,
            b.disc_color,
            disc,
        );
    }
    s.cloud
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma > 0.0 {
        sigma * rng.sample::<f64, _>(StandardNormal)
    } else {
        0.0
    }
}

/// Adds sensor noise to a clean cloud, in place.
pub fn apply_noise<R: Rng + ?Sized>(cloud: &mut PointCloud, noise: &NoiseParams, rng: &mut R) {
    for p in &mut cloud.points {
        for v in &mut p.position {
            *v += gaussian(rng, noise.depth);
        }
        if noise.color > 0.0 {
            p.color[0] = (p.color[0] + gaussian(rng, noise.color)).clamp(0.0, 100.0);
            p.color[1] = (p.color[1] + gaussian(rng, noise.color)).clamp(-128.0, 127.0);
            p.color[2] = (p.color[2] + gaussian(rng, noise.color)).clamp(-128.0, 127.0);
        }
        if noise.normal > 0.0 {
            let jittered = [
                p.normal[0] + gaussian(rng, noise.normal),
                p.normal[1] + gaussian(rng, noise.normal),
                p.normal[2] + gaussian(rng, noise.normal),
            ];
            p.normal = normalize(jittered).unwrap_or(p.normal);
        }
    }
}

/// Renders one noisy frame of `scene`.
pub fn render<R: Rng + ?Sized>(scene: &Scene, params: &RenderParams, noise: &NoiseParams, rng: &mut R) -> Result<PointCloud> {
    let mut cloud = sample_surfaces(scene, params);
    if cloud.is_empty() {
        return Err(Error::Empty("scene renders no points"));
    }
    apply_noise(&mut cloud, noise, rng);
    Ok(cloud)
}
