// SPDX-License-Identifier: Apache-2.0

//! Decision tree over segment feature vectors, grown top-down by information gain.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{InferenceError, SkillClass};
use crate::trace::ObjectId;

/// Classification features of a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SegmentFeatureVector {
    pub phi: bool,
    pub psi: bool,
    pub ux: bool,
    pub prev_class: Option<SkillClass>,
    pub object_id: ObjectId,
}

pub const FEATURE_NAMES: [&str; 5] = ["phi", "psi", "ux", "prev_class", "object_id"];
const PREV: usize = 3;

impl SegmentFeatureVector {
    /// Numeric encoding in feature-index order; `prev_class` is 0 for none, else 1 + class index.
    pub fn encode(&self) -> [u32; 5] {
        [
            self.phi as u32,
            self.psi as u32,
            self.ux as u32,
            self.prev_class.map_or(0, |c| c.index() as u32 + 1),
            self.object_id,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SplitTest {
    /// feature value <= threshold goes left.
    LessEq { feature: usize, threshold: f64 },
    /// feature value == category goes left (categorical `prev_class`).
    Equals { feature: usize, category: u32 },
}

impl SplitTest {
    fn goes_left(&self, x: &[u32; 5]) -> bool {
        match *self {
            SplitTest::LessEq { feature, threshold } => (x[feature] as f64) <= threshold,
            SplitTest::Equals { feature, category } => x[feature] == category,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf(SkillClass),
    Split { test: SplitTest, left: Box<Node>, right: Box<Node> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    root: Node,
    pub training_accuracy: f64,
    pub training_size: usize,
}

fn entropy(labels: &[SkillClass]) -> f64 {
    let mut counts = [0usize; 10];
    for l in labels {
        counts[l.index()] += 1;
    }
    let n = labels.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn candidates(rows: &[([u32; 5], SkillClass)]) -> Vec<SplitTest> {
    let mut out = Vec::new();
    for feature in 0..5 {
        let mut values: Vec<u32> = rows.iter().map(|(x, _)| x[feature]).collect();
        values.sort_unstable();
        values.dedup();
        if values.len() < 2 {
            continue;
        }
        if feature == PREV {
            out.extend(values.iter().map(|&category| SplitTest::Equals { feature, category }));
        } else {
            out.extend(
                values
                    .windows(2)
                    .map(|w| SplitTest::LessEq { feature, threshold: (w[0] as f64 + w[1] as f64) / 2.0 }),
            );
        }
    }
    out
}

fn grow(rows: Vec<([u32; 5], SkillClass)>) -> Node {
    let first = rows[0].1;
    if rows.iter().all(|(_, c)| *c == first) {
        return Node::Leaf(first);
    }
    let labels: Vec<SkillClass> = rows.iter().map(|(_, c)| *c).collect();
    let parent = entropy(&labels);
    let n = rows.len() as f64;

    // Highest gain wins; equal gains keep the earlier candidate (lower feature index).
    let mut best: Option<(SplitTest, f64)> = None;
    let mut first_separating = None;
    for test in candidates(&rows) {
        let (l, r): (Vec<_>, Vec<_>) = rows.iter().partition(|(x, _)| test.goes_left(x));
        if l.is_empty() || r.is_empty() {
            continue;
        }
        first_separating.get_or_insert(test);
        let ll: Vec<SkillClass> = l.iter().map(|(_, c)| *c).collect();
        let rl: Vec<SkillClass> = r.iter().map(|(_, c)| *c).collect();
        let gain = parent - (ll.len() as f64 / n) * entropy(&ll) - (rl.len() as f64 / n) * entropy(&rl);
        if best.is_none_or(|(_, g)| gain > g + 1e-12) {
            best = Some((test, gain));
        }
    }
    // Zero-gain splits can still be necessary (xor-like labelings).
    let test = match best {
        Some((t, g)) if g > 1e-12 => t,
        _ => first_separating.expect("impure node without contradictions has a separating split"),
    };
    let (l, r): (Vec<_>, Vec<_>) = rows.into_iter().partition(|(x, _)| test.goes_left(x));
    Node::Split { test, left: Box::new(grow(l)), right: Box::new(grow(r)) }
}

impl DecisionTree {
    /// Trains on `dataset`. Deterministic given the dataset order.
    pub fn train(dataset: &[(SegmentFeatureVector, SkillClass)]) -> Result<Self, InferenceError> {
        if dataset.is_empty() {
            return Err(InferenceError::EmptyDataset);
        }
        let mut seen: BTreeMap<[u32; 5], SkillClass> = BTreeMap::new();
        for (x, c) in dataset {
            if let Some(&other) = seen.get(&x.encode()) {
                if other != *c {
                    return Err(InferenceError::ContradictoryLabels { features: *x, first: other, second: *c });
                }
            }
            seen.insert(x.encode(), *c);
        }
        let rows: Vec<([u32; 5], SkillClass)> = dataset.iter().map(|(x, c)| (x.encode(), *c)).collect();
        let root = grow(rows);
        let mut tree = Self { root, training_accuracy: 0.0, training_size: dataset.len() };
        let correct = dataset.iter().filter(|(x, c)| tree.classify(x) == *c).count();
        tree.training_accuracy = correct as f64 / dataset.len() as f64;
        Ok(tree)
    }

    pub fn classify(&self, features: &SegmentFeatureVector) -> SkillClass {
        let x = features.encode();
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(c) => return *c,
                Node::Split { test, left, right } => node = if test.goes_left(&x) { left } else { right },
            }
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn leaf_count(&self) -> usize {
        fn count(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 1,
                Node::Split { left, right, .. } => count(left) + count(right),
            }
        }
        count(&self.root)
    }
}

/// Convenience wrapper around [`DecisionTree::train`].
pub fn train_tree(dataset: &[(SegmentFeatureVector, SkillClass)]) -> Result<DecisionTree, InferenceError> {
    DecisionTree::train(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(phi: bool, psi: bool, ux: bool, prev: Option<SkillClass>, id: ObjectId) -> SegmentFeatureVector {
        SegmentFeatureVector { phi, psi, ux, prev_class: prev, object_id: id }
    }

    #[test]
    fn single_class_is_one_leaf() {
        let data = vec![
            (fv(false, false, false, None, 1), SkillClass::Approach),
            (fv(true, true, false, None, 2), SkillClass::Approach),
        ];
        let t = DecisionTree::train(&data).unwrap();
        assert_eq!(t.leaf_count(), 1);
        assert_eq!(t.classify(&fv(true, false, true, Some(SkillClass::Grasp), 9)), SkillClass::Approach);
    }

    #[test]
    fn contradiction_is_reported() {
        let x = fv(false, true, false, None, 1);
        let err = DecisionTree::train(&[(x, SkillClass::Grasp), (x, SkillClass::Scoop)]).unwrap_err();
        assert!(matches!(err, InferenceError::ContradictoryLabels { .. }));
        assert!(err.to_string().contains("Grasp") && err.to_string().contains("Scoop"));
    }

    #[test]
    fn empty_dataset() {
        assert!(matches!(DecisionTree::train(&[]), Err(InferenceError::EmptyDataset)));
    }

    #[test]
    fn xor_labels_fit_exactly() {
        let data: Vec<_> = [(false, false, SkillClass::Approach), (true, true, SkillClass::Approach),
            (false, true, SkillClass::Retract), (true, false, SkillClass::Retract)]
            .into_iter()
            .map(|(a, b, c)| (fv(a, b, false, None, 0), c))
            .collect();
        let t = DecisionTree::train(&data).unwrap();
        assert_eq!(t.training_accuracy, 1.0);
    }

    #[test]
    fn prediction_is_total() {
        let data = vec![
            (fv(false, false, false, Some(SkillClass::Grasp), 1), SkillClass::Approach),
            (fv(false, false, false, Some(SkillClass::Scoop), 1), SkillClass::Retract),
        ];
        let t = DecisionTree::train(&data).unwrap();
        // Unseen category falls through the equality split.
        let _ = t.classify(&fv(true, true, true, Some(SkillClass::Transport), 40));
    }
}
