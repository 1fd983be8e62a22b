//! The motion-primitive library: storage, applicability queries, growth and persistence.

mod persist;
mod primitive;

use serde::{Deserialize, Serialize};

pub use persist::{LoadedLibrary, MANIFEST_FILE, LIBRARY_FORMAT_VERSION};
pub use primitive::{MotionPrimitive, PrimitiveMeta};

use crate::error::{Error, Result};

/// One entry of the creation log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreationRecord {
    pub revision: u64,
    pub phase: String,
    pub subtask: String,
    pub ids: Vec<usize>,
}

/// Ordered primitives whose ids equal their positions.
#[derive(Debug, Clone, Default)]
pub struct Library {
    primitives: Vec<MotionPrimitive>,
    revision: u64,
    log: Vec<CreationRecord>,
}

impl Library {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    pub fn primitives(&self) -> &[MotionPrimitive] {
        &self.primitives
    }

    /// Mutable access for fine-tuning policies; ids and regions stay fixed.
    pub fn policy_mut(&mut self, id: usize) -> Option<&mut crate::execution::DdpgAgent> {
        self.primitives.get_mut(id).map(|p| &mut p.policy)
    }

    pub fn get(&self, id: usize) -> Option<&MotionPrimitive> {
        self.primitives.get(id)
    }

    /// Increases with every append.
    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn log(&self) -> &[CreationRecord] {
        &self.log
    }

    /// Distinct subtask tags in creation order.
    pub fn subtasks(&self) -> Vec<String> {
        let mut tags: Vec<String> = Vec::new();
        for p in &self.primitives {
            if !tags.contains(&p.meta.subtask) {
                tags.push(p.meta.subtask.clone());
            }
        }
        tags
    }

    /// Ids, ascending, of every primitive whose initiation region holds `s`.
    pub fn available_options(&self, s: &[f64]) -> Vec<usize> {
        self.primitives.iter().filter(|p| p.can_start(s)).map(|p| p.id).collect()
    }

    /// The primitive whose initiation region comes closest to accepting `s`
    /// (highest offset-relative decision value).
    pub fn nearest_option(&self, s: &[f64]) -> Option<usize> {
        self.primitives
            .iter()
            .map(|p| (p.id, p.initiation.relative_decision(s)))
            .fold(None, |best: Option<(usize, f64)>, (id, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((id, d)),
            })
            .map(|(id, _)| id)
    }

    /// Appends primitives (e.g. one chain) in order, renumbering them after
    /// the existing ones. Existing primitives are not touched. Returns the new ids.
    pub fn append(&mut self, primitives: Vec<MotionPrimitive>, phase: &str) -> Vec<usize> {
        let start = self.primitives.len();
        let ids: Vec<usize> = (start..start + primitives.len()).collect();
        let subtask = primitives.first().map(|p| p.meta.subtask.clone()).unwrap_or_default();
        for (mut p, id) in primitives.into_iter().zip(start..) {
            p.id = id;
            self.primitives.push(p);
        }
        self.revision += 1;
        self.log.push(CreationRecord { revision: self.revision, phase: phase.to_string(), subtask, ids: ids.clone() });
        ids
    }

    /// If some stored primitive may start in `s`, returns the lowest such id
    /// (the decision layer makes the final choice). Otherwise builds new
    /// primitives with `factory`, appends them, calls `on_new` once per new
    /// id, and returns the id of the new primitive that covers `s` (else the
    /// last one). A failing factory leaves the library untouched.
    pub fn match_or_create<F, G>(&mut self, s: &[f64], phase: &str, factory: F, mut on_new: G) -> Result<(usize, bool)>
    where
        F: FnOnce(&Library) -> Result<Vec<MotionPrimitive>>,
        G: FnMut(usize),
    {
        if let Some(&id) = self.available_options(s).first() {
            return Ok((id, false));
        }
        let built = factory(self)?;
        if built.is_empty() {
            return Err(Error::Contract("primitive factory returned nothing".into()));
        }
        let ids = self.append(built, phase);
        for &id in &ids {
            on_new(id);
        }
        let chosen = ids
            .iter()
            .rev()
            .copied()
            .find(|&id| self.primitives[id].can_start(s))
            .unwrap_or(*ids.last().expect("non-empty"));
        Ok((chosen, true))
    }

    fn from_parts(primitives: Vec<MotionPrimitive>, revision: u64, log: Vec<CreationRecord>) -> Result<Self> {
        if primitives.iter().enumerate().any(|(i, p)| p.id != i) {
            return Err(Error::Contract("primitive ids must equal their positions".into()));
        }
        Ok(Self { primitives, revision, log })
    }
}

impl PartialEq for Library {
    fn eq(&self, other: &Self) -> bool {
        self.revision == other.revision && self.log == other.log && self.primitives == other.primitives
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use std::sync::Arc;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::env::ActionSpace;
    use crate::execution::{DdpgAgent, DdpgConfig};
    use crate::skill::{GoalDisk, InitiationClassifier, TerminationSet};

    /// Primitive accepting a small cloud around `center` (2-D observations).
    pub(crate) fn primitive_at(center: [f64; 2], termination: TerminationSet, seed: u64) -> MotionPrimitive {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|_| vec![center[0] + rng.gen_range(-0.1..0.1), center[1] + rng.gen_range(-0.1..0.1)])
            .collect();
        let config = DdpgConfig { actor_hidden: vec![4], critic_hidden: vec![4], batch_size: 2, warmup: 2, replay_capacity: 10, ..DdpgConfig::default() };
        let mut policy = DdpgAgent::new(config, 2, ActionSpace::symmetric(1), &mut rng).unwrap();
        policy.actor_target.layers_mut()[0].weights[0] += 0.5;
        MotionPrimitive {
            id: 0,
            initiation: Arc::new(InitiationClassifier::fit(&pts, 0.1, &[]).unwrap()),
            policy,
            termination,
            meta: PrimitiveMeta { subtask: "demo".into(), phase: "p".into(), link: 0, training_episodes: 3 },
        }
    }

    fn goal() -> TerminationSet {
        TerminationSet::Goal(GoalDisk { center: vec![0.0, 0.0], radius: 0.5, features: vec![0, 1], scale: 1.0 })
    }

    /// Three primitives at x = 0, 1, 2; links 1 and 2 chain into their predecessor.
    pub(crate) fn three() -> Library {
        let a = primitive_at([0.0, 0.0], goal(), 1);
        let b = primitive_at([1.0, 0.0], TerminationSet::Classifier(Arc::clone(&a.initiation)), 2);
        let c = primitive_at([2.0, 0.0], TerminationSet::Classifier(Arc::clone(&b.initiation)), 3);
        let mut lib = Library::new();
        lib.append(vec![a, b, c], "p");
        lib
    }

    #[test]
    fn available_options_match_a_scan() {
        let lib = three();
        assert_eq!(lib.available_options(&[2.0, 0.0]), vec![2]);
        assert!(lib.available_options(&[10.0, 10.0]).is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let s = [rng.gen_range(-0.5..2.5), rng.gen_range(-0.3..0.3)];
            let scan: Vec<usize> = (0..lib.len()).filter(|&i| lib.get(i).unwrap().initiation.decision(&s) >= 0.0).collect();
            assert_eq!(lib.available_options(&s), scan);
            assert_eq!(lib.available_options(&s), lib.available_options(&s));
        }
        assert_eq!(lib.nearest_option(&[2.4, 0.0]), Some(2));
    }

    #[test]
    fn matching_state_creates_nothing() {
        let mut lib = three();
        let (id, created) = lib.match_or_create(&[1.0, 0.0], "q", |_| unreachable!(), |_| unreachable!()).unwrap();
        assert_eq!((id, created), (1, false));
        assert_eq!(lib.len(), 3);
    }

    #[test]
    fn empty_library_grows_once_per_new_primitive() {
        let mut lib = Library::new();
        let mut grown = Vec::new();
        let (id, created) = lib
            .match_or_create(&[0.0, 0.0], "q", |_| Ok(vec![primitive_at([0.0, 0.0], goal(), 7)]), |i| grown.push(i))
            .unwrap();
        assert!(created);
        assert_eq!((id, lib.len(), grown), (0, 1, vec![0]));
    }

    #[test]
    fn failed_factory_leaves_library_untouched() {
        let mut lib = three();
        let before = lib.clone();
        let r = lib.match_or_create(&[9.0, 9.0], "q", |_| Err(Error::NoAvailableOption), |_| panic!("no growth"));
        assert!(r.is_err());
        assert_eq!(lib, before);
    }

    #[test]
    fn appending_does_not_touch_existing_primitives() {
        let mut lib = three();
        let before: Vec<MotionPrimitive> = lib.primitives().to_vec();
        lib.append(vec![primitive_at([5.0, 5.0], goal(), 9)], "r");
        assert_eq!(&lib.primitives()[..3], &before[..]);
        assert_eq!(lib.get(3).unwrap().id, 3);
        assert_eq!(lib.revision(), 2);
    }

    fn bits(net: &crate::approximator::Mlp) -> Vec<u64> {
        net.tensors().into_iter().flatten().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let lib = three();
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let decision = crate::approximator::Mlp::new(
            crate::approximator::MlpSpec::new(2, &[3], 3, crate::approximator::OutputActivation::Linear, false),
            Default::default(),
            &mut rng,
        )
        .unwrap();
        lib.save(dir.path(), Some(&decision)).unwrap();
        let loaded = Library::load_with_decision(dir.path()).unwrap();
        assert_eq!(loaded.library, lib);
        assert_eq!(bits(loaded.decision.as_ref().unwrap()), bits(&decision));
        for (a, b) in lib.primitives().iter().zip(loaded.library.primitives()) {
            assert_eq!(bits(&a.policy.actor), bits(&b.policy.actor));
            assert_eq!(bits(&a.policy.critic_target), bits(&b.policy.critic_target));
            let (ca, cb) = (a.initiation.to_values(), b.initiation.to_values());
            assert!(ca.iter().zip(&cb).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        // Chain links keep sharing one classifier after loading.
        let l = &loaded.library;
        assert!(Arc::ptr_eq(l.get(2).unwrap().termination.classifier().unwrap(), &l.get(1).unwrap().initiation));
    }

    #[test]
    fn wrong_manifest_version_is_rejected() {
        let lib = three();
        let dir = tempfile::tempdir().unwrap();
        lib.save(dir.path(), None).unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).unwrap().replacen("\"format_version\": 1", "\"format_version\": 7", 1);
        std::fs::write(&path, text).unwrap();
        assert!(matches!(Library::load(dir.path()), Err(Error::FormatVersion { found: 7, expected: 1 })));
    }

    #[test]
    fn truncated_weights_name_the_file() {
        let lib = three();
        let dir = tempfile::tempdir().unwrap();
        lib.save(dir.path(), None).unwrap();
        let victim = dir.path().join("mp_001").join("critic.bin");
        let bytes = std::fs::read(&victim).unwrap();
        std::fs::write(&victim, &bytes[..bytes.len() - 8]).unwrap();
        match Library::load(dir.path()) {
            Err(Error::Corruption { path, .. }) => assert_eq!(path, victim),
            other => panic!("expected corruption, got {other:?}"),
        }
    }

    #[test]
    fn decision_width_must_match() {
        let lib = three();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let narrow = crate::approximator::Mlp::new(
            crate::approximator::MlpSpec::new(2, &[3], 2, crate::approximator::OutputActivation::Linear, false),
            Default::default(),
            &mut rng,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(lib.save(dir.path(), Some(&narrow)).is_err());
    }
}
