// SPDX-License-Identifier: Apache-2.0

//! Scripted demonstration generator used in place of recorded video.
//!
//! A scenario places objects on a table and scripts the hand tip as a list of
//! phases: free `Move`s and `Stroke`s along the top face of an object. Strokes
//! start and end abruptly (the tip lands on the surface on the stroke's first
//! frame and leaves on the frame after its last), so the declared contact
//! intervals are exactly the ground-truth keypoints.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DemonstrationTrace, Frame, ObjectDatabase, ObjectId, ObjectRecord, StateLabel, TraceError};
use crate::geometry::{Aabb, Vec3};
use crate::inference::SkillClass;

pub const PEEL_FRACTION_ATTR: &str = "peel_fraction";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioObject {
    pub id: ObjectId,
    pub class: String,
    pub centroid: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phase {
    /// Linear free-space motion of the tip; the last frame lands on `to`.
    Move { to: Vec3, frames: usize },
    /// Tip drags along the top face of `object` from `from` to `to`
    /// (x/y offsets from the centroid). `peel_to` raises the object's peel
    /// fraction linearly to the given value over the stroke.
    Stroke {
        object: ObjectId,
        from: [f64; 2],
        to: [f64; 2],
        frames: usize,
        #[serde(default)]
        peel_to: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub objects: Vec<ScenarioObject>,
    pub start_tip: Vec3,
    pub phases: Vec<Phase>,
    /// Uniform per-coordinate position noise amplitude, meters.
    pub noise: f64,
    pub frame_rate: f64,
    pub hand_height: f64,
    pub wrist_height: f64,
    pub workspace: Aabb,
    pub peel_state_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthKeypoint {
    pub frame: usize,
    pub make: bool,
    pub object_id: ObjectId,
}

/// Generator-side ground truth written next to a synthesized trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub scenario: String,
    pub seed: u64,
    pub keypoints: Vec<TruthKeypoint>,
    pub segment_skills: Vec<SkillClass>,
}

impl GroundTruth {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ground truth serializes") + "\n"
    }
}

const TRAVEL_CLEARANCE: f64 = 0.15;
const HOVER: f64 = 0.03;

fn default_workspace() -> Aabb {
    Aabb::new([-0.2, -0.6, 0.0], [1.2, 0.9, 0.8])
}

impl ScenarioSpec {
    fn base(name: &str, objects: Vec<ScenarioObject>, start_tip: Vec3, phases: Vec<Phase>) -> Self {
        Self {
            name: name.to_string(),
            objects,
            start_tip,
            phases,
            noise: 0.001,
            frame_rate: 30.0,
            hand_height: 0.05,
            wrist_height: 0.10,
            workspace: default_workspace(),
            peel_state_fraction: 0.10,
        }
    }

    fn peel_objects() -> Vec<ScenarioObject> {
        vec![
            ScenarioObject { id: 1, class: "cucumber".into(), centroid: Vec3::new(0.45, 0.0, 0.02) },
            ScenarioObject { id: 2, class: "potato".into(), centroid: Vec3::new(0.45, 0.35, 0.03) },
        ]
    }

    /// Approach the cucumber, peel one strip along its top, retract.
    pub fn peel() -> Self {
        let mut s = Self::peel_demo();
        s.name = "peel".into();
        s.phases.push(Phase::Move { to: Vec3::new(0.53, 0.0, 0.04 + HOVER), frames: 1 });
        s.phases.push(Phase::Move { to: Vec3::new(0.62, 0.0, 0.30), frames: 40 });
        s
    }

    /// The peel demonstration as recorded: it ends when the stroke ends.
    pub fn peel_demo() -> Self {
        Self::base(
            "peel-demo",
            Self::peel_objects(),
            Vec3::new(0.15, 0.0, 0.30),
            vec![
                Phase::Move { to: Vec3::new(0.37, 0.0, 0.04 + HOVER), frames: 45 },
                Phase::Stroke { object: 1, from: [-0.08, 0.0], to: [0.08, 0.0], frames: 60, peel_to: Some(0.12) },
            ],
        )
    }

    /// Hand wanders above the table without touching anything.
    pub fn no_contact() -> Self {
        Self::base(
            "no-contact",
            Self::peel_objects(),
            Vec3::new(0.15, 0.0, 0.30),
            vec![
                Phase::Move { to: Vec3::new(0.40, 0.05, 0.20), frames: 40 },
                Phase::Move { to: Vec3::new(0.25, 0.15, 0.32), frames: 40 },
            ],
        )
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "peel" => Some(Self::peel()),
            "peel-demo" => Some(Self::peel_demo()),
            "no-contact" => Some(Self::no_contact()),
            _ => None,
        }
    }

    /// Random table scene (1 to 5 separated objects) with 0 to 3 strokes on
    /// distinct consecutive objects; at most 500 frames.
    pub fn random(seed: u64, db: &ObjectDatabase) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_7ace);
        let classes: Vec<(&str, f64, [f64; 3])> =
            db.classes().map(|(n, c)| (n, c.stiffness, c.extent)).collect();
        let n_obj = rng.random_range(1..=5usize);
        let mut objects: Vec<ScenarioObject> = Vec::new();
        let mut attempts = 0;
        while objects.len() < n_obj && attempts < 10_000 {
            attempts += 1;
            let (class, _, extent) = classes[rng.random_range(0..classes.len())];
            let c = Vec3::new(rng.random_range(0.2..0.95), rng.random_range(-0.4..0.65), extent[2] / 2.0);
            if objects.iter().all(|o| (o.centroid - c).xy().norm() >= 0.32) {
                objects.push(ScenarioObject { id: objects.len() as ObjectId + 1, class: class.into(), centroid: c });
            }
        }
        let top_of = |o: &ScenarioObject| o.centroid.z + db.get(&o.class).unwrap().extent[2] / 2.0;
        let travel = objects.iter().map(top_of).fold(0.0, f64::max) + TRAVEL_CLEARANCE;
        let start = Vec3::new(rng.random_range(0.1..0.9), rng.random_range(-0.4..0.6), travel);

        let n_strokes = rng.random_range(0..=3usize.min(objects.len()));
        let mut order: Vec<usize> = (0..objects.len()).collect();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let mut phases = Vec::new();
        for &k in order.iter().take(n_strokes) {
            let o = &objects[k];
            let e = db.get(&o.class).unwrap().extent;
            let (hx, hy) = (0.4 * e[0], 0.4 * e[1]);
            let from = [rng.random_range(-hx..hx), rng.random_range(-hy..hy)];
            let to = [rng.random_range(-hx..hx), rng.random_range(-hy..hy)];
            let top = top_of(o);
            let above = |xy: [f64; 2], z: f64| Vec3::new(o.centroid.x + xy[0], o.centroid.y + xy[1], z);
            phases.push(Phase::Move { to: above(from, travel), frames: rng.random_range(15..=40) });
            phases.push(Phase::Move { to: above(from, top + HOVER), frames: rng.random_range(10..=20) });
            let peel_to = if rng.random_bool(0.5) { Some(rng.random_range(0.05..0.2)) } else { None };
            phases.push(Phase::Stroke { object: o.id, from, to, frames: rng.random_range(10..=60), peel_to });
            phases.push(Phase::Move { to: above(to, top + HOVER), frames: 1 });
            phases.push(Phase::Move { to: above(to, travel), frames: rng.random_range(10..=20) });
        }
        phases.push(Phase::Move {
            to: Vec3::new(rng.random_range(0.1..0.9), rng.random_range(-0.4..0.6), travel),
            frames: rng.random_range(10..=40),
        });
        let mut s = Self::base("random", objects, start, phases);
        s.noise = rng.random_range(0.0..0.002);
        s
    }

    fn validate(&self, db: &ObjectDatabase) -> Result<BTreeMap<ObjectId, Aabb>, TraceError> {
        let bad = |m: String| Err(TraceError::Scenario(m));
        if self.objects.is_empty() {
            return bad("no objects".into());
        }
        if !(self.frame_rate > 0.0) || !(self.noise >= 0.0) {
            return bad("frame_rate must be > 0 and noise >= 0".into());
        }
        let mut boxes = BTreeMap::new();
        for o in &self.objects {
            let class = db.get(&o.class).ok_or_else(|| TraceError::UnknownClass(o.class.clone()))?;
            let b = Aabb::from_center_extent(&o.centroid, &class.extent());
            for (&other, ob) in &boxes {
                if b.overlaps(ob) {
                    return Err(TraceError::OverlappingObjects(other, o.id));
                }
            }
            if boxes.insert(o.id, b).is_some() {
                return bad(format!("duplicate object id {}", o.id));
            }
        }
        for p in &self.phases {
            match p {
                Phase::Move { frames, .. } if *frames == 0 => return bad("move phase with 0 frames".into()),
                Phase::Stroke { object, from, to, frames, .. } => {
                    let Some(b) = boxes.get(object) else {
                        return bad(format!("stroke on unknown object {object}"));
                    };
                    if *frames < 2 {
                        return bad("stroke needs at least 2 frames".into());
                    }
                    let h = b.half_extent();
                    for xy in [from, to] {
                        if xy[0].abs() > h.x || xy[1].abs() > h.y {
                            return bad(format!("stroke leaves the top face of object {object}"));
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(boxes)
    }
}

struct ScriptedFrame {
    tip: Vec3,
    contact: Option<ObjectId>,
    peel: Option<(ObjectId, f64)>,
}

fn script(spec: &ScenarioSpec, boxes: &BTreeMap<ObjectId, Aabb>) -> Vec<ScriptedFrame> {
    let mut out = vec![ScriptedFrame { tip: spec.start_tip, contact: None, peel: None }];
    let mut cur = spec.start_tip;
    let mut fractions: BTreeMap<ObjectId, f64> = BTreeMap::new();
    for phase in &spec.phases {
        match phase {
            Phase::Move { to, frames } => {
                let from = cur;
                for i in 1..=*frames {
                    let s = i as f64 / *frames as f64;
                    out.push(ScriptedFrame { tip: from + (to - from) * s, contact: None, peel: None });
                }
                cur = *to;
            }
            Phase::Stroke { object, from, to, frames, peel_to } => {
                let b = &boxes[object];
                let c = b.center();
                let start_frac = fractions.get(object).copied().unwrap_or(0.0);
                for i in 0..*frames {
                    let s = i as f64 / (*frames - 1) as f64;
                    let x = from[0] + (to[0] - from[0]) * s;
                    let y = from[1] + (to[1] - from[1]) * s;
                    let tip = Vec3::new(c.x + x, c.y + y, b.max[2]);
                    let peel = peel_to.map(|target| {
                        let f = start_frac + (target.max(start_frac) - start_frac) * s;
                        (*object, f)
                    });
                    out.push(ScriptedFrame { tip, contact: Some(*object), peel });
                    cur = tip;
                }
                if let Some(target) = peel_to {
                    fractions.insert(*object, target.max(start_frac));
                }
            }
        }
    }
    out
}

/// Builds a trace from `spec`; a pure function of `(spec, seed)`.
pub fn synthesize_trace(
    spec: &ScenarioSpec,
    seed: u64,
    db: &ObjectDatabase,
) -> Result<(DemonstrationTrace, GroundTruth), TraceError> {
    let boxes = spec.validate(db)?;
    let scripted = script(spec, &boxes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = |p: Vec3| -> Vec3 {
        if spec.noise > 0.0 {
            let a = spec.noise;
            p + Vec3::new(rng.random_range(-a..=a), rng.random_range(-a..=a), rng.random_range(-a..=a))
        } else {
            p
        }
    };

    let mut fractions: BTreeMap<ObjectId, f64> = spec.objects.iter().map(|o| (o.id, 0.0)).collect();
    let mut frames = Vec::with_capacity(scripted.len());
    for (index, sf) in scripted.iter().enumerate() {
        if let Some((id, f)) = sf.peel {
            fractions.insert(id, f);
        }
        let tip = jitter(sf.tip);
        let hand = jitter(sf.tip + Vec3::new(0.0, 0.0, spec.hand_height));
        let wrist = jitter(sf.tip + Vec3::new(0.0, 0.0, spec.wrist_height));
        let objects = spec
            .objects
            .iter()
            .map(|o| {
                let states = &db.get(&o.class).expect("validated").states;
                let frac = fractions[&o.id];
                let name = if states.len() > 1 && frac >= spec.peel_state_fraction { &states[1] } else { &states[0] };
                ObjectRecord {
                    object_id: o.id,
                    centroid: o.centroid,
                    state: StateLabel::new(name.clone()).with_attribute(PEEL_FRACTION_ATTR, frac),
                }
            })
            .collect();
        frames.push(Frame { index, time: index as f64 / spec.frame_rate, hand, wrist, hand_tip: tip, objects });
    }

    let mut keypoints = Vec::new();
    let mut skills = Vec::new();
    let mut seen_contact = false;
    for (k, w) in scripted.windows(2).enumerate() {
        let frame = k + 1;
        match (w[0].contact, w[1].contact) {
            (None, Some(id)) => keypoints.push(TruthKeypoint { frame, make: true, object_id: id }),
            (Some(id), None) => keypoints.push(TruthKeypoint { frame, make: false, object_id: id }),
            (Some(a), Some(b)) if a != b => {
                keypoints.push(TruthKeypoint { frame, make: false, object_id: a });
                keypoints.push(TruthKeypoint { frame, make: true, object_id: b });
            }
            _ => {}
        }
    }
    // One label per contact/no-contact run, in order.
    let mut runs: Vec<bool> = Vec::new();
    for sf in &scripted {
        let c = sf.contact.is_some();
        if runs.last() != Some(&c) {
            runs.push(c);
        }
    }
    let later_contact: Vec<bool> = (0..runs.len()).map(|i| runs[i + 1..].iter().any(|&c| c)).collect();
    for (i, &c) in runs.iter().enumerate() {
        let label = if c {
            seen_contact = true;
            SkillClass::MoveWithContact
        } else if seen_contact && !later_contact[i] {
            SkillClass::Retract
        } else {
            SkillClass::Approach
        };
        skills.push(label);
    }

    let classes = spec.objects.iter().map(|o| (o.id, o.class.clone())).collect();
    let trace = DemonstrationTrace::new(frames, spec.workspace, classes, db)?;
    Ok((trace, GroundTruth { scenario: spec.name.clone(), seed, keypoints, segment_skills: skills }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peel_ground_truth() {
        let db = ObjectDatabase::builtin();
        let (trace, truth) = synthesize_trace(&ScenarioSpec::peel(), 7, &db).unwrap();
        assert_eq!(trace.len(), 1 + 45 + 60 + 1 + 40);
        let frames: Vec<(usize, bool)> = truth.keypoints.iter().map(|k| (k.frame, k.make)).collect();
        assert_eq!(frames, vec![(46, true), (106, false)]);
        assert_eq!(
            truth.segment_skills,
            vec![SkillClass::Approach, SkillClass::MoveWithContact, SkillClass::Retract]
        );
        let last = trace.frames().last().unwrap();
        assert_eq!(last.object(1).unwrap().state.name, "peeled");
        assert_eq!(trace.frames()[46].object(1).unwrap().state.name, "unpeeled");
    }

    #[test]
    fn zero_noise_is_exact() {
        let db = ObjectDatabase::builtin();
        let mut spec = ScenarioSpec::peel();
        spec.noise = 0.0;
        let (trace, _) = synthesize_trace(&spec, 7, &db).unwrap();
        let f = &trace.frames()[45];
        assert_eq!(f.hand_tip, Vec3::new(0.37, 0.0, 0.07));
        assert_eq!(trace.frames()[46].hand_tip, Vec3::new(0.37, 0.0, 0.04));
        assert_eq!(f.hand, f.hand_tip + Vec3::new(0.0, 0.0, 0.05));
    }

    #[test]
    fn deterministic_per_seed() {
        let db = ObjectDatabase::builtin();
        let spec = ScenarioSpec::peel();
        let (a, ta) = synthesize_trace(&spec, 7, &db).unwrap();
        let (b, _) = synthesize_trace(&spec, 7, &db).unwrap();
        let (c, tc) = synthesize_trace(&spec, 8, &db).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(ta.keypoints.len(), tc.keypoints.len());
    }

    #[test]
    fn overlapping_objects_rejected() {
        let db = ObjectDatabase::builtin();
        let mut spec = ScenarioSpec::peel();
        spec.objects[1].centroid = Vec3::new(0.46, 0.01, 0.03);
        assert!(matches!(synthesize_trace(&spec, 1, &db), Err(TraceError::OverlappingObjects(1, 2))));
    }

    #[test]
    fn random_scenarios_are_valid() {
        let db = ObjectDatabase::builtin();
        for seed in 0..50 {
            let spec = ScenarioSpec::random(seed, &db);
            let (trace, _) = synthesize_trace(&spec, seed, &db).unwrap();
            assert!(trace.len() <= 500, "seed {seed}: {} frames", trace.len());
        }
    }
}
