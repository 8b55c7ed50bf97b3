use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scene::Scene;
use crate::error::{Error, Result};
use crate::percept::geom::Vec3;
use crate::percept::grid::VoxelGrid;
use crate::percept::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Push,
    Button,
    Lift,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Push, Action::Button, Action::Lift];

    pub fn name(self) -> &'static str {
        match self {
            Action::Push => "push",
            Action::Button => "button",
            Action::Lift => "lift",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Action::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown affordance {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrimitiveParams {
    /// Distance a successful push moves the object, metres.
    pub push_offset: f64,
    /// Probability that a push or lift silently fails.
    pub fail_prob: f64,
    /// How far from a surface a target still counts as touching it.
    pub contact_tolerance: f64,
    pub gripper_max_opening: f64,
    /// Change detector distance. `None` derives it from the depth noise.
    pub change_threshold: Option<f64>,
    /// Minimum clearance between objects after a push.
    pub clearance: f64,
}

impl Default for PrimitiveParams {
    fn default() -> Self {
        Self {
            push_offset: 0.15,
            fail_prob: 0.0,
            contact_tolerance: 0.004,
            gripper_max_opening: 0.09,
            change_threshold: None,
            clearance: 0.01,
        }
    }
}

impl PrimitiveParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fail_prob) {
            return Err(Error::InvalidConfig(format!(
                "fail_prob {} is not a probability",
                self.fail_prob
            )));
        }
        if !(self.push_offset > 0.0 && self.gripper_max_opening > 0.0 && self.contact_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("primitive distances must be positive".into()));
        }
        Ok(())
    }

    /// Three standard deviations of the distance between two independent
    /// noisy observations of the same point, floored at a millimetre.
    pub fn change_threshold_for(&self, depth_sigma: f64) -> f64 {
        self.change_threshold
            .unwrap_or_else(|| (3.0 * depth_sigma * 6.0_f64.sqrt()).max(1e-3))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveOutcome {
    pub executed: bool,
    pub scene_after: Scene,
    /// Lift only: 0 is fully closed.
    pub gripper_aperture: f64,
    /// Button only.
    pub interface_flag: bool,
}

impl PrimitiveOutcome {
    fn unchanged(scene: &Scene, executed: bool) -> Self {
        Self {
            executed,
            scene_after: scene.clone(),
            gripper_aperture: 0.0,
            interface_flag: false,
        }
    }
}

fn in_workspace(scene: &Scene, p: Vec3, tol: f64) -> bool {
    let t = &scene.table;
    p[0] >= t.min[0] - tol && p[0] <= t.max[0] + tol && p[1] >= t.min[1] - tol && p[1] <= t.max[1] + tol && p[2] >= -tol
}

fn fails<R: Rng + ?Sized>(rng: &mut R, fail_prob: f64) -> bool {
    rng.random::<f64>() < fail_prob
}

fn placement_ok(scene: &Scene, moved: usize, xy: [f64; 2], clearance: f64) -> bool {
    let o = &scene.objects[moved];
    let r = o.shape.bounding_radius();
    let t = &scene.table;
    if xy[0] - r < t.min[0] || xy[0] + r > t.max[0] || xy[1] - r < t.min[1] || xy[1] + r > t.max[1] {
        return false;
    }
    scene.objects.iter().enumerate().all(|(k, other)| {
        k == moved || {
            let d = (xy[0] - other.position[0]).hypot(xy[1] - other.position[1]);
            d > r + other.shape.bounding_radius() + clearance
        }
    })
}

/// Pushes whatever pushable object lies at `target` by a fixed offset along a
/// random horizontal direction, turning by quarter turns until the object
/// stays on the table without touching another one.
pub fn apply_push<R: Rng + ?Sized>(scene: &Scene, target: Vec3, rng: &mut R, params: &PrimitiveParams) -> PrimitiveOutcome {
    if !in_workspace(scene, target, params.contact_tolerance) {
        return PrimitiveOutcome::unchanged(scene, false);
    }
    let Some(k) = scene.object_at(target, params.contact_tolerance) else {
        return PrimitiveOutcome::unchanged(scene, true);
    };
    if !scene.objects[k].pushable {
        return PrimitiveOutcome::unchanged(scene, true);
    }
    if fails(rng, params.fail_prob) {
        return PrimitiveOutcome::unchanged(scene, false);
    }
    let heading = rng.random::<f64>() * 4.0 * FRAC_PI_2;
    let from = scene.objects[k].position;
    for turn in 0..4 {
        let a = heading + turn as f64 * FRAC_PI_2;
        let xy = [from[0] + params.push_offset * a.cos(), from[1] + params.push_offset * a.sin()];
        if placement_ok(scene, k, xy, params.clearance) {
            let mut after = scene.clone();
            after.objects[k].position = xy;
            return PrimitiveOutcome {
                executed: true,
                scene_after: after,
                gripper_aperture: 0.0,
                interface_flag: false,
            };
        }
    }
    PrimitiveOutcome::unchanged(scene, false)
}

/// Whether any point of `target` (indices into `before`) lost every
/// neighbour within `threshold` in `after`.
pub fn detect_change(before: &PointCloud, after: &PointCloud, target: &[usize], threshold: f64) -> bool {
    let positions: Vec<Vec3> = after.points.iter().map(|p| p.position).collect();
    let Some(origin) = positions.first().copied() else {
        return !target.is_empty();
    };
    let grid = VoxelGrid::build(&positions, threshold, origin);
    target
        .iter()
        .any(|&i| !grid.any_within(&positions, before.points[i].position, threshold))
}

/// Presses at `target`; the interface lights up iff an activable disc is hit.
pub fn apply_button(scene: &Scene, target: Vec3, params: &PrimitiveParams) -> PrimitiveOutcome {
    let flag = scene
        .button_disc_at(target, params.contact_tolerance)
        .is_some_and(|b| scene.buttons[b].activable);
    let mut after = scene.clone();
    after.interface_on = flag;
    PrimitiveOutcome {
        executed: true,
        scene_after: after,
        gripper_aperture: 0.0,
        interface_flag: flag,
    }
}

pub fn detect_button_effect(outcome: &PrimitiveOutcome) -> bool {
    outcome.interface_flag
}

/// Grasps at `target` and lifts. The gripper stays open by the object's
/// width when a liftable object is held; the object is put back in place.
pub fn apply_lift<R: Rng + ?Sized>(scene: &Scene, target: Vec3, rng: &mut R, params: &PrimitiveParams) -> PrimitiveOutcome {
    let Some(k) = scene.object_at(target, params.contact_tolerance) else {
        return PrimitiveOutcome::unchanged(scene, true);
    };
    let o = &scene.objects[k];
    if !o.liftable {
        return PrimitiveOutcome::unchanged(scene, true);
    }
    if fails(rng, params.fail_prob) {
        return PrimitiveOutcome::unchanged(scene, false);
    }
    PrimitiveOutcome {
        executed: true,
        scene_after: scene.clone(),
        gripper_aperture: (o.shape.grasp_width() / params.gripper_max_opening).min(1.0),
        interface_flag: false,
    }
}

pub fn detect_lift(outcome: &PrimitiveOutcome) -> bool {
    outcome.gripper_aperture > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simworld::Scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scene() -> Scene {
        Scenario::standard().scene
    }

    fn top_of(scene: &Scene, k: usize) -> Vec3 {
        let o = &scene.objects[k];
        [o.position[0], o.position[1], o.shape.height()]
    }

    #[test]
    fn push_on_background_changes_nothing() {
        let s = scene();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = apply_push(
            &s,
            [s.table.min[0] + 0.01, s.table.min[1] + 0.01, 0.0],
            &mut rng,
            &PrimitiveParams::default(),
        );
        assert!(out.executed);
        assert_eq!(out.scene_after, s);
    }

    #[test]
    fn push_moves_by_exact_offset() {
        let s = scene();
        let p = PrimitiveParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = s.objects.iter().position(|o| o.pushable).unwrap();
        for _ in 0..20 {
            let out = apply_push(&s, top_of(&s, k), &mut rng, &p);
            assert!(out.executed);
            let [a, b] = [s.objects[k].position, out.scene_after.objects[k].position];
            assert!(((a[0] - b[0]).hypot(a[1] - b[1]) - p.push_offset).abs() < 1e-12);
            out.scene_after.validate().unwrap();
        }
    }

    #[test]
    fn fixed_object_does_not_move() {
        let s = scene();
        let k = s.objects.iter().position(|o| !o.pushable).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = apply_push(&s, top_of(&s, k), &mut rng, &PrimitiveParams::default());
        assert_eq!(out.scene_after, s);
    }

    #[test]
    fn outside_workspace_is_not_executed() {
        let s = scene();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = apply_push(&s, [10.0, 10.0, 0.0], &mut rng, &PrimitiveParams::default());
        assert!(!out.executed);
        assert_eq!(out.scene_after, s);
    }

    #[test]
    fn button_disc_centre_lights_interface() {
        let s = scene();
        let p = PrimitiveParams::default();
        let b = &s.buttons[0];
        let face = s.wall_y() - b.depth - b.disc_height;
        assert!(detect_button_effect(&apply_button(&s, [b.center[0], face, b.center[1]], &p)));
        // housing front, outside the disc
        let off = [
            b.center[0] + 0.5 * (b.disc_radius + 0.5 * b.housing[0]),
            s.wall_y() - b.depth,
            b.center[1],
        ];
        assert!(!detect_button_effect(&apply_button(&s, off, &p)));
        assert!(!detect_button_effect(&apply_button(
            &s,
            [b.center[0], s.table.min[1] + 0.05, 0.0],
            &p
        )));
    }

    #[test]
    fn lift_reports_aperture_only_for_liftable_objects() {
        let s = scene();
        let p = PrimitiveParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (k, o) in s.objects.iter().enumerate() {
            let out = apply_lift(&s, top_of(&s, k), &mut rng, &p);
            assert_eq!(detect_lift(&out), o.liftable, "{}", o.name);
            if o.liftable {
                assert!(out.gripper_aperture > 0.0 && out.gripper_aperture <= 1.0);
            }
        }
        let out = apply_lift(&s, [s.table.min[0] + 0.01, s.table.min[1] + 0.01, 0.0], &mut rng, &p);
        assert_eq!(out.gripper_aperture, 0.0);
    }

    #[test]
    fn action_names_round_trip() {
        for a in Action::ALL {
            assert_eq!(a.name().parse::<Action>().unwrap(), a);
        }
        assert!("jump".parse::<Action>().is_err());
    }
}
