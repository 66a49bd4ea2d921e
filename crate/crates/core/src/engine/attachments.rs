//! The built-in semantic attachment: `belief_update`, which replays the
//! tick's nominal motion through the filter (predict, then one correction
//! per visible landmark) and exposes the covariance trace as a fluent.

use std::sync::Arc;

use crate::belief::{
    predict, predict_measurement, simulate_observation, trace_of, update, GaussianBelief,
    ObservationMode,
};
use crate::pddlplus::{AttachmentCall, AttachmentFn, AttachmentOutcome, AttachmentRegistry};
use crate::world::{visible_landmarks, wrap_angle, Control};

/// Name the bundled domains bind their filter event to.
pub const BELIEF_UPDATE: &str = "belief_update";

/// Literal prefix marking an edge traversal in progress.
const MOVING_PREDICATE: &str = "moving";
/// Fluent prefix of the remaining distance along an edge.
const REMAINING_FLUENT: &str = "d";

/// Find the one `moving from to` literal that is true, if any.
fn active_motion(call: &AttachmentCall<'_>) -> Result<Option<(String, String)>, String> {
    let mut active = None;
    for (lit, name) in call.model.literal_names.iter().enumerate() {
        if !(call.literal_true)(lit) {
            continue;
        }
        let mut parts = name.split_whitespace();
        if parts.next() != Some(MOVING_PREDICATE) {
            continue;
        }
        let (Some(from), Some(to), None) = (parts.next(), parts.next(), parts.next()) else {
            continue;
        };
        if active.is_some() {
            return Err("multiple motions active in the same tick".into());
        }
        active = Some((from.to_string(), to.to_string()));
    }
    Ok(active)
}

/// Covariance propagation for one tick of edge traversal.
///
/// The motion the filter sees is reconstructed from the planning state: the
/// tick's nominal translation is `delta * d_factor`, shortened when the
/// remaining edge distance ran out mid-tick, aimed from the current mean
/// straight at the target waypoint. Prediction is followed by one filter
/// correction per landmark visible from the predicted mean; in the nominal
/// observation mode those corrections use the expected measurement, leaving
/// the mean in place while the covariance contracts.
pub fn belief_update_attachment() -> AttachmentFn {
    Arc::new(|call: &AttachmentCall<'_>| -> Result<AttachmentOutcome, String> {
        let delta_trans = call.delta * call.d_factor;
        let Some((from, to)) = active_motion(call)? else {
            return Err("fired with no active motion".into());
        };
        let d_slot = call
            .model
            .fluent_id(&format!("{REMAINING_FLUENT} {from} {to}"))
            .ok_or_else(|| format!("no remaining-distance fluent for edge {from} -> {to}"))?;
        // fluents are post-integration; adding back this tick's drop gives
        // the distance that was left when the tick began
        let remaining_before = call.fluents[d_slot] + delta_trans;
        let translation = remaining_before.clamp(0.0, delta_trans);

        let &wp = call
            .model
            .waypoint_of_object
            .get(&to)
            .ok_or_else(|| format!("object '{to}' is not a waypoint"))?;
        let (tx, ty) = call.model.waypoint_xy[wp];
        let mean = call.belief.mean;
        let aim = if translation > 1e-12 {
            wrap_angle((ty - mean.y).atan2(tx - mean.x) - mean.theta)
        } else {
            0.0
        };

        let control = Control::new(aim, translation, 0.0);
        let mut belief: GaussianBelief =
            predict(call.belief, &control, &call.belief_cfg.motion_noise);
        for lm in visible_landmarks(
            call.map,
            &belief.mean,
            call.landmarks,
            call.belief_cfg.sensor_range,
        ) {
            let z = match call.belief_cfg.mode {
                ObservationMode::Nominal => {
                    predict_measurement(&belief.mean, &lm).map_err(|e| e.to_string())?
                }
                ObservationMode::Sampled => {
                    let seed = call
                        .belief_cfg
                        .rng_seed
                        .wrapping_add(call.tick_index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
                        .wrapping_add((lm.id as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
                    simulate_observation(&belief, &lm, &call.belief_cfg.measurement_noise, seed)
                        .map_err(|e| e.to_string())?
                }
            };
            belief = update(&belief, &z, &lm, &call.belief_cfg.measurement_noise)
                .map_err(|e| e.to_string())?;
        }
        let values = vec![trace_of(&belief)];
        Ok(AttachmentOutcome { belief, values })
    })
}

/// Registry with every attachment the bundled domains need.
pub fn standard_registry() -> AttachmentRegistry {
    let mut reg = AttachmentRegistry::new();
    reg.register(BELIEF_UPDATE, belief_update_attachment())
        .expect("fresh registry cannot have duplicates");
    reg
}
