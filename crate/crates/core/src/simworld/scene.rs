use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::percept::geom::Vec3;

/// CIELab colour: `L` in [0, 100], `a` and `b` in [-128, 127].
pub type Lab = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Axis-aligned box, `size = [x, y, z]` in metres.
    Box { size: [f64; 3] },
    /// Upright cylinder.
    Cylinder { radius: f64, height: f64 },
}

impl Shape {
    pub fn height(&self) -> f64 {
        match *self {
            Shape::Box { size } => size[2],
            Shape::Cylinder { height, .. } => height,
        }
    }

    /// Radius of the smallest vertical cylinder enclosing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Box { size } => 0.5 * size[0].hypot(size[1]),
            Shape::Cylinder { radius, .. } => radius,
        }
    }

    /// Width the gripper closes on, taken as the smaller horizontal extent.
    pub fn grasp_width(&self) -> f64 {
        match *self {
            Shape::Box { size } => size[0].min(size[1]),
            Shape::Cylinder { radius, .. } => 2.0 * radius,
        }
    }
}

/// An object resting on the table. `position` is the centre of its footprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub name: String,
    pub shape: Shape,
    pub position: [f64; 2],
    pub color: Lab,
    #[serde(default)]
    pub pushable: bool,
    #[serde(default)]
    pub liftable: bool,
}

impl SceneObject {
    /// Whether `xy` lies inside the footprint grown by `margin`.
    pub fn footprint_contains(&self, xy: [f64; 2], margin: f64) -> bool {
        let dx = xy[0] - self.position[0];
        let dy = xy[1] - self.position[1];
        match self.shape {
            Shape::Box { size } => dx.abs() <= 0.5 * size[0] + margin && dy.abs() <= 0.5 * size[1] + margin,
            Shape::Cylinder { radius, .. } => dx.hypot(dy) <= radius + margin,
        }
    }

    /// Whether `p` lies in the object's volume grown by `tolerance`.
    pub fn contains(&self, p: Vec3, tolerance: f64) -> bool {
        p[2] >= -tolerance && p[2] <= self.shape.height() + tolerance && self.footprint_contains([p[0], p[1]], tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub color: Lab,
}

/// Vertical back plane standing on the far (`max[1]`) edge of the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wall {
    pub height: f64,
    pub color: Lab,
}

/// A push button mounted on the wall: a box housing protruding towards the
/// viewer with a raised disc on its front face. Only the disc activates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Button {
    pub name: String,
    /// Centre of the housing front face, `(x, z)` on the wall.
    pub center: [f64; 2],
    /// Housing width (x) and height (z).
    pub housing: [f64; 2],
    /// Housing protrusion from the wall.
    pub depth: f64,
    pub disc_radius: f64,
    pub disc_height: f64,
    pub housing_color: Lab,
    pub disc_color: Lab,
    #[serde(default = "default_true")]
    pub activable: bool,
}

fn default_true() -> bool {
    true
}

impl Button {
    pub fn half_extents(&self) -> [f64; 2] {
        [0.5 * self.housing[0], 0.5 * self.housing[1]]
    }

    pub fn housing_footprint_contains(&self, xz: [f64; 2]) -> bool {
        let h = self.half_extents();
        (xz[0] - self.center[0]).abs() <= h[0] && (xz[1] - self.center[1]).abs() <= h[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub table: Table,
    #[serde(default)]
    pub wall: Option<Wall>,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub buttons: Vec<Button>,
    /// Button interface indicator: lit when a button has been pressed.
    #[serde(default)]
    pub interface_on: bool,
}

impl Scene {
    /// `y` coordinate of the wall plane.
    pub fn wall_y(&self) -> f64 {
        self.table.max[1]
    }

    pub fn object_at(&self, p: Vec3, tolerance: f64) -> Option<usize> {
        self.objects.iter().position(|o| o.contains(p, tolerance))
    }

    /// Index of the activable-or-not button whose disc face `p` touches.
    pub fn button_disc_at(&self, p: Vec3, tolerance: f64) -> Option<usize> {
        let wall_y = self.wall_y();
        self.buttons.iter().position(|b| {
            let face = wall_y - b.depth - b.disc_height;
            let radial = (p[0] - b.center[0]).hypot(p[2] - b.center[1]);
            radial <= b.disc_radius && p[1] >= face - tolerance && p[1] <= wall_y - b.depth + tolerance
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let t = &self.table;
        if !(t.max[0] > t.min[0] && t.max[1] > t.min[1]) {
            return bad("table extent is empty".into());
        }
        for o in &self.objects {
            let r = match o.shape {
                Shape::Box { size } => {
                    if size.iter().any(|v| !(*v > 0.0)) {
                        return bad(format!("object {} has a degenerate size", o.name));
                    }
                    [0.5 * size[0], 0.5 * size[1]]
                }
                Shape::Cylinder { radius, height } => {
                    if !(radius > 0.0 && height > 0.0) {
                        return bad(format!("object {} has a degenerate size", o.name));
                    }
                    [radius, radius]
                }
            };
            if o.position[0] - r[0] < t.min[0]
                || o.position[0] + r[0] > t.max[0]
                || o.position[1] - r[1] < t.min[1]
                || o.position[1] + r[1] > t.max[1]
            {
                return bad(format!("object {} does not rest on the table", o.name));
            }
            if o.liftable && !o.pushable {
                return bad(format!("object {} is liftable but not pushable", o.name));
            }
        }
        if !self.buttons.is_empty() && self.wall.is_none() {
            return bad("buttons need a wall".into());
        }
        for b in &self.buttons {
            let h = b.half_extents();
            let wall = self.wall.as_ref().expect("checked above");
            if b.disc_radius > h[0].min(h[1]) {
                return bad(format!("button {} disc exceeds its housing", b.name));
            }
            if b.center[0] - h[0] < t.min[0]
                || b.center[0] + h[0] > t.max[0]
                || b.center[1] - h[1] < 0.0
                || b.center[1] + h[1] > wall.height
            {
                return bad(format!("button {} is not on the wall", b.name));
            }
        }
        Ok(())
    }
}
