// SPDX-License-Identifier: Apache-2.0

//! Simulated world: box-shaped objects with linear-spring contact, a noisy
//! force sensor, peel progress, and the state detector standing in for vision.

mod scenario;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use scenario::{EnvScenario, ScenarioObjectSpec};

use crate::geometry::{Aabb, Vec3};
use crate::trace::{ObjectDatabase, ObjectId};

pub const UNPEELED: &str = "unpeeled";
pub const PEELED: &str = "peeled";

/// Number of cells the peelable strip is discretized into along the object length.
pub const PEEL_CELLS: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("unknown object {0}")]
    UnknownObject(ObjectId),
    #[error("unknown object class {0:?}")]
    UnknownClass(String),
    #[error("scenario: {0}")]
    Scenario(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentParams {
    /// Half-width of the uniform force-sensor noise, N.
    pub noise_amplitude: f64,
    /// Peeled surface fraction at which an object reads as peeled.
    pub peel_state_fraction: f64,
}

impl Default for EnvironmentParams {
    fn default() -> Self {
        crate::config::PipelineConfig::default().environment
    }
}

impl EnvironmentParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.noise_amplitude >= 0.0 && self.noise_amplitude.is_finite()) {
            return Err("environment.noise_amplitude must be finite and >= 0".into());
        }
        if !(self.peel_state_fraction > 0.0 && self.peel_state_fraction <= 1.0) {
            return Err("environment.peel_state_fraction must lie in (0, 1]".into());
        }
        Ok(())
    }
}

/// A simulated object. The peel threshold is ground truth hidden from the learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimObject {
    pub id: ObjectId,
    pub class: String,
    pub center: Vec3,
    pub extent: Vec3,
    /// N/m.
    pub stiffness: f64,
    /// N.
    pub peel_threshold: f64,
    /// Surface fraction a full-length strip covers.
    pub strip_fraction: f64,
    peeled_cells: Vec<bool>,
}

impl SimObject {
    pub fn new(
        id: ObjectId,
        class: impl Into<String>,
        center: Vec3,
        extent: Vec3,
        stiffness: f64,
        peel_threshold: f64,
        strip_fraction: f64,
    ) -> Self {
        Self {
            id,
            class: class.into(),
            center,
            extent,
            stiffness,
            peel_threshold,
            strip_fraction,
            peeled_cells: vec![false; PEEL_CELLS],
        }
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_center_extent(&self.center, &self.extent)
    }

    pub fn top(&self) -> f64 {
        self.center.z + self.extent.z / 2.0
    }

    /// Fraction of the surface peeled so far.
    pub fn peel_map(&self) -> f64 {
        let n = self.peeled_cells.iter().filter(|&&c| c).count();
        self.strip_fraction * n as f64 / PEEL_CELLS as f64
    }

    /// Depth of `p` below the top face, if `p` lies over the footprint and inside the body.
    pub fn penetration(&self, p: &Vec3) -> f64 {
        let b = self.bounds();
        let over = p.x >= b.min[0] && p.x <= b.max[0] && p.y >= b.min[1] && p.y <= b.max[1];
        if over && p.z < b.max[2] && p.z >= b.min[2] {
            b.max[2] - p.z
        } else {
            0.0
        }
    }

    fn cell_of(&self, x: f64) -> usize {
        let lo = self.center.x - self.extent.x / 2.0;
        let u = ((x - lo) / self.extent.x).clamp(0.0, 1.0);
        ((u * PEEL_CELLS as f64) as usize).min(PEEL_CELLS - 1)
    }
}

/// Hand–object contact at the last force query.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ContactRecord {
    pub object: Option<ObjectId>,
    pub penetration: f64,
    /// True (noiseless) normal force, N.
    pub normal_force: f64,
}

#[derive(Debug, Clone)]
pub struct Environment {
    objects: BTreeMap<ObjectId, SimObject>,
    params: EnvironmentParams,
    noise: bool,
    rng: ChaCha8Rng,
    contact: ContactRecord,
}

impl Environment {
    pub fn new(objects: Vec<SimObject>, params: EnvironmentParams, noise: bool, seed: u64) -> Self {
        Self {
            objects: objects.into_iter().map(|o| (o.id, o)).collect(),
            params,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
            contact: ContactRecord::default(),
        }
    }

    /// Builds the world of a scenario, filling per-object physics from the database.
    pub fn from_scenario(
        scenario: &EnvScenario,
        db: &ObjectDatabase,
        params: &EnvironmentParams,
    ) -> Result<Self, EnvError> {
        let mut objects = Vec::with_capacity(scenario.objects.len());
        for o in &scenario.objects {
            let class = db.get(&o.class).ok_or_else(|| EnvError::UnknownClass(o.class.clone()))?;
            objects.push(SimObject::new(
                o.id,
                o.class.clone(),
                Vec3::from(o.center),
                class.extent(),
                o.stiffness.unwrap_or(class.stiffness),
                o.peel_threshold.unwrap_or(class.peel_force_threshold),
                class.strip_fraction,
            ));
        }
        Ok(Self::new(objects, params.clone(), scenario.noise, scenario.seed))
    }

    pub fn object(&self, id: ObjectId) -> Result<&SimObject, EnvError> {
        self.objects.get(&id).ok_or(EnvError::UnknownObject(id))
    }

    pub fn objects(&self) -> impl Iterator<Item = &SimObject> {
        self.objects.values()
    }

    pub fn noise_enabled(&self) -> bool {
        self.noise
    }

    pub fn last_contact(&self) -> ContactRecord {
        self.contact
    }

    /// Noiseless spring force at `p`; contacts the deepest penetrated object.
    pub fn true_force(&mut self, p: &Vec3) -> f64 {
        let mut rec = ContactRecord::default();
        for o in self.objects.values() {
            let d = o.penetration(p);
            if d > rec.penetration {
                rec = ContactRecord { object: Some(o.id), penetration: d, normal_force: o.stiffness * d };
            }
        }
        self.contact = rec;
        rec.normal_force
    }

    /// Sensed normal force: the spring force plus uniform noise when enabled.
    pub fn contact_force(&mut self, p: &Vec3) -> f64 {
        let f = self.true_force(p);
        if self.noise && self.params.noise_amplitude > 0.0 {
            let a = self.params.noise_amplitude;
            f + self.rng.random_range(-a..=a)
        } else {
            f
        }
    }

    /// Peels the strip cells swept by `path` iff every force sample reaches the
    /// object's threshold. Cells already peeled stay peeled.
    pub fn apply_peel(&mut self, id: ObjectId, path: &[Vec3], forces: &[f64]) -> Result<(), EnvError> {
        let o = self.objects.get_mut(&id).ok_or(EnvError::UnknownObject(id))?;
        if path.is_empty() || forces.is_empty() || forces.iter().any(|&f| !(f >= o.peel_threshold)) {
            return Ok(());
        }
        let lo = path.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let hi = path.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        let (a, b) = (o.cell_of(lo), o.cell_of(hi));
        for c in &mut o.peeled_cells[a..=b] {
            *c = true;
        }
        Ok(())
    }

    pub fn detect_state(&self, id: ObjectId) -> Result<&'static str, EnvError> {
        Ok(peel_state(self.object(id)?.peel_map(), self.params.peel_state_fraction))
    }

    /// Sets an object's peel map directly (whole cells); for inspection tools and tests.
    pub fn set_peel_cells(&mut self, id: ObjectId, cells: usize) -> Result<(), EnvError> {
        let o = self.objects.get_mut(&id).ok_or(EnvError::UnknownObject(id))?;
        for (i, c) in o.peeled_cells.iter_mut().enumerate() {
            *c = i < cells;
        }
        Ok(())
    }
}

/// The vision-equivalent detector: peeled iff at least `fraction` of the surface is peeled.
pub fn peel_state(peel_map: f64, fraction: f64) -> &'static str {
    if peel_map >= fraction {
        PEELED
    } else {
        UNPEELED
    }
}
