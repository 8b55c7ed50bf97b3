use rand_chacha::ChaCha8Rng;

use super::primitives::{
    apply_button, apply_lift, apply_push, detect_button_effect, detect_change, detect_lift, Action, PrimitiveParams,
};
use super::scenario::Scenario;
use super::scene::Scene;
use crate::error::Result;
use crate::exploration::{Environment, Interaction};
use crate::percept::{perceive, render, Frame, PerceptParams};

/// The simulated robot: renders noisy frames of a mutable scene and runs
/// primitives on segment centroids.
#[derive(Debug, Clone)]
pub struct SimWorld {
    pub scene: Scene,
    percept: PerceptParams,
    primitives: PrimitiveParams,
    change_threshold: f64,
    sensor_rng: ChaCha8Rng,
    action_rng: ChaCha8Rng,
}

impl SimWorld {
    pub fn new(scenario: &Scenario, sensor_rng: ChaCha8Rng, action_rng: ChaCha8Rng) -> Self {
        Self {
            scene: scenario.scene.clone(),
            percept: scenario.percept(),
            primitives: scenario.primitives.clone(),
            change_threshold: scenario.change_threshold(),
            sensor_rng,
            action_rng,
        }
    }

    pub fn percept_params(&self) -> &PerceptParams {
        &self.percept
    }
}

impl Environment for SimWorld {
    fn perceive(&mut self) -> Result<Frame> {
        // the interface light only reports the latest press
        self.scene.interface_on = false;
        perceive(&self.scene, &self.percept, &mut self.sensor_rng)
    }

    fn interact(&mut self, action: Action, frame: &Frame, segment: usize) -> Result<Interaction> {
        let target = frame.segments[segment].centroid.position;
        let p = &self.primitives;
        let (outcome, effect) = match action {
            Action::Push => {
                let out = apply_push(&self.scene, target, &mut self.action_rng, p);
                let effect = if out.executed {
                    let after = render(
                        &out.scene_after,
                        &self.percept.render,
                        &self.percept.noise,
                        &mut self.sensor_rng,
                    )?;
                    detect_change(&frame.cloud, &after, &frame.segments[segment].indices, self.change_threshold)
                } else {
                    false
                };
                (out, effect)
            }
            Action::Button => {
                let out = apply_button(&self.scene, target, p);
                let effect = detect_button_effect(&out);
                (out, effect)
            }
            Action::Lift => {
                let out = apply_lift(&self.scene, target, &mut self.action_rng, p);
                let effect = detect_lift(&out);
                (out, effect)
            }
        };
        let executed = outcome.executed;
        self.scene = outcome.scene_after;
        Ok(Interaction { executed, effect })
    }
}
