//! Simulated world: scene description, action primitives with their effect
//! detectors, and scenario files.

pub mod primitives;
pub mod scenario;
pub mod scene;
pub mod world;

pub use primitives::{
    apply_button, apply_lift, apply_push, detect_button_effect, detect_change, detect_lift, Action, PrimitiveOutcome,
    PrimitiveParams,
};
pub use scenario::Scenario;
pub use scene::{Button, Lab, Scene, SceneObject, Shape, Table, Wall};
pub use world::SimWorld;

use crate::metrics::GroundTruth;
use crate::percept::{Frame, SurfaceTag};

/// Whether points from `tag` afford `action` in `scene`.
pub fn tag_affords(scene: &Scene, tag: SurfaceTag, action: Action) -> bool {
    match (action, tag) {
        (Action::Push, SurfaceTag::Object(k)) => scene.objects[k].pushable,
        (Action::Lift, SurfaceTag::Object(k)) => scene.objects[k].liftable,
        (Action::Button, SurfaceTag::ButtonDisc(k)) => scene.buttons[k].activable,
        _ => false,
    }
}

/// Per-segment ground truth from each segment's dominant surface, with the
/// background flag set for segments that do not afford `action`.
pub fn ground_truth(scene: &Scene, frame: &Frame, action: Action) -> GroundTruth {
    GroundTruth {
        background: (0..frame.segments.len())
            .map(|i| !tag_affords(scene, frame.dominant_tag(i), action))
            .collect(),
    }
}
