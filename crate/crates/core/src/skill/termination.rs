use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ocsvm::InitiationClassifier;

/// Ball around a goal point in unnormalized coordinates. `features` pick the
/// observation components, which are multiplied by `scale` before the
/// distance test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalDisk {
    pub center: Vec<f64>,
    pub radius: f64,
    pub features: Vec<usize>,
    pub scale: f64,
}

impl GoalDisk {
    pub fn contains(&self, s: &[f64]) -> bool {
        let mut d2 = 0.0;
        for (c, &i) in self.center.iter().zip(&self.features) {
            let Some(v) = s.get(i) else { return false };
            d2 += (v * self.scale - c).powi(2);
        }
        d2 <= self.radius * self.radius
    }
}

/// Where an option stops: the task goal, or the initiation region of the
/// option that follows it in a chain (shared, not copied).
#[derive(Debug, Clone)]
pub enum TerminationSet {
    Goal(GoalDisk),
    Classifier(Arc<InitiationClassifier>),
}

impl TerminationSet {
    pub fn contains(&self, s: &[f64]) -> bool {
        match self {
            Self::Goal(g) => g.contains(s),
            Self::Classifier(c) => c.contains(s),
        }
    }

    pub fn classifier(&self) -> Option<&Arc<InitiationClassifier>> {
        match self {
            Self::Classifier(c) => Some(c),
            Self::Goal(_) => None,
        }
    }
}

impl PartialEq for TerminationSet {
    /// Classifier-backed sets compare by content; identity is checked
    /// separately with `Arc::ptr_eq` where it matters.
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Goal(a), Self::Goal(b)) => a == b,
            (Self::Classifier(a), Self::Classifier(b)) => a == b,
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goal_disk_membership() {
        let g = GoalDisk { center: vec![-25.0, 1.75], radius: 3.0, features: vec![0, 1], scale: 60.0 };
        assert!(g.contains(&[-25.0 / 60.0, 1.75 / 60.0, 0.3]));
        assert!(!g.contains(&[-21.0 / 60.0, 1.75 / 60.0, 0.3]));
    }

    #[test]
    fn classifier_variant_follows_the_decision_sign() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let pts: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
        let c = Arc::new(InitiationClassifier::fit(&pts, 0.1, &[]).unwrap());
        let t = TerminationSet::Classifier(Arc::clone(&c));
        for _ in 0..100 {
            let q = [rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0)];
            assert_eq!(t.contains(&q), c.decision(&q) >= 0.0);
        }
    }
}
