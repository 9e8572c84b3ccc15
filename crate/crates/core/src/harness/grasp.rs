use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, stream, ticks_for, FingerRig};
use crate::config::Config;
use crate::control::Supervisor;
use crate::error::{Error, Result};
use crate::estimation::InternalForceModel;
use crate::plant::{shake_test, FingerPlant, ObjectModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraspOutcome {
    pub dropped: bool,
    pub deformed: bool,
    pub broken: bool,
}

impl GraspOutcome {
    pub fn success(&self) -> bool {
        !(self.dropped || self.deformed || self.broken)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspTrial {
    pub trial: usize,
    pub targets: [f64; 3],
    pub outcome: GraspOutcome,
    pub success: bool,
    /// Largest true contact force on any finger during the trial, N.
    pub peak_force: f64,
    /// Sum of the final true contact forces, N.
    pub total_grip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub target_force: f64,
    pub dropped_pct: f64,
    pub deformed_pct: f64,
    pub broken_pct: f64,
    pub success_pct: f64,
    pub trials: Vec<GraspTrial>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSweep {
    pub object: String,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub seed: u64,
    pub n_trials: usize,
    pub objects: Vec<ObjectSweep>,
}

impl SweepTable {
    pub fn object(&self, name: &str) -> Option<&ObjectSweep> {
        self.objects.iter().find(|o| o.object == name)
    }
}

impl ObjectSweep {
    pub fn row(&self, target_force: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.target_force == target_force)
    }
}

/// Per-finger targets for a grasp at `force`: the opposable finger takes the
/// full force, the paired fingers half each.
pub fn grasp_targets(force: f64) -> [f64; 3] {
    [force / 2.0, force / 2.0, force]
}

/// One grasp, lift and shake. `plant_seed` drives the sensors; `object_seed`
/// draws the object's thresholds.
pub fn run_grasp_trial(
    cfg: &Config,
    models: &[InternalForceModel],
    obj: &ObjectModel,
    force: f64,
    trial: usize,
    plant_seed: u64,
    object_seed: u64,
) -> Result<GraspTrial> {
    let dt = cfg.controller.period;
    let targets = grasp_targets(force);
    let mut fingers: Vec<_> = (0..3)
        .map(|f| {
            let plant = FingerPlant::new(
                cfg.plant,
                cfg.finger_model(f),
                derive_seed(plant_seed, &[f as u64]),
            );
            (
                FingerRig::new(plant, models[f].clone()),
                cfg.controller.pi(),
                Supervisor::new(targets[f], cfg.controller.approach_rate, cfg.controller.detector()),
            )
        })
        .collect();

    let mut peak: f64 = 0.0;
    for _ in 0..ticks_for(cfg.experiments.grasp.duration, dt) {
        for (rig, ctrl, sup) in fingers.iter_mut() {
            let tick = rig.tick(Some(obj), sup.duty(), dt)?;
            peak = peak.max(tick.true_force);
            sup.step(ctrl, &tick.estimate, dt)?;
        }
    }
    let total_grip: f64 = fingers.iter().map(|(rig, _, _)| rig.plant.contact_force()).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(object_seed);
    let deform_at = obj.sample_deform_threshold(&mut rng);
    let held = shake_test(total_grip, obj, &mut rng);
    let outcome = GraspOutcome {
        dropped: !held,
        deformed: deform_at.is_some_and(|t| peak > t),
        broken: obj.break_threshold.is_some_and(|t| peak > t),
    };
    Ok(GraspTrial {
        trial,
        targets,
        outcome,
        success: outcome.success(),
        peak_force: peak,
        total_grip,
    })
}

fn pct(count: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        count as f64 * 100.0 / n as f64
    }
}

/// Grasp every configured object at every set-point, `n_trials` times each.
/// Trial `i` of an object sees the same object draw at every set-point.
pub fn run_grasp_sweep(cfg: &Config, seed: u64) -> Result<SweepTable> {
    let exp = &cfg.experiments.grasp;
    let models: Vec<InternalForceModel> = super::calibrate_hand(cfg, seed)?
        .iter()
        .map(|run| run.internal_model(cfg))
        .collect();
    if models.len() < 3 {
        return Err(Error::Experiment(format!(
            "grasping needs three fingers, {} configured",
            models.len()
        )));
    }

    let jobs: Vec<(usize, usize, usize)> = (0..exp.objects.len())
        .flat_map(|o| {
            (0..exp.set_points.len()).flat_map(move |s| (0..exp.n_trials).map(move |t| (o, s, t)))
        })
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(o, s, t)| {
            let name = &exp.objects[o];
            let obj = cfg
                .object(name)
                .ok_or_else(|| Error::UnknownObject(name.clone()))?;
            run_grasp_trial(
                cfg,
                &models,
                obj,
                exp.set_points[s],
                t,
                derive_seed(seed, &[stream::GRASP, o as u64, s as u64, t as u64]),
                derive_seed(seed, &[stream::GRASP_OBJECT, o as u64, t as u64]),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let mut it = trials.into_iter();
    let objects = exp
        .objects
        .iter()
        .map(|name| ObjectSweep {
            object: name.clone(),
            rows: exp
                .set_points
                .iter()
                .map(|&force| {
                    let trials: Vec<GraspTrial> = it.by_ref().take(exp.n_trials).collect();
                    let count = |f: fn(&GraspTrial) -> bool| trials.iter().filter(|t| f(t)).count();
                    let n = trials.len();
                    SweepRow {
                        target_force: force,
                        dropped_pct: pct(count(|t| t.outcome.dropped), n),
                        deformed_pct: pct(count(|t| t.outcome.deformed), n),
                        broken_pct: pct(count(|t| t.outcome.broken), n),
                        success_pct: pct(count(|t| t.success), n),
                        trials,
                    }
                })
                .collect(),
        })
        .collect();
    Ok(SweepTable {
        seed,
        n_trials: exp.n_trials,
        objects,
    })
}
