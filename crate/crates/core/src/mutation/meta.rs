use std::collections::{BTreeMap, BTreeSet};

use crate::lang::{LocId, Lts, MutId, Selector, Transition};

use super::{apply, Mutant, MutationError};

/// Original program plus every mutant behind the selector `mutId`. At a
/// mutation point the original transitions are enabled for every selector
/// value except the location's mutants, and each mutant's transitions are
/// enabled only for its own ID, in ascending ID order.
#[derive(Clone, Debug)]
pub struct MetaMutant {
    pub lts: Lts,
    pub original: Lts,
    pub mutants: BTreeMap<MutId, Mutant>,
    pub points: BTreeMap<LocId, Vec<MutId>>,
}

impl MetaMutant {
    pub fn mutant(&self, id: MutId) -> Option<&Mutant> {
        self.mutants.get(&id)
    }

    pub fn ids(&self) -> Vec<MutId> {
        self.mutants.keys().copied().collect()
    }

    /// Mutants whose replaced transitions leave `loc`.
    pub fn points_at(&self, loc: LocId) -> &[MutId] {
        self.points.get(&loc).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Standalone program of mutant `id`, or the original for 0.
    pub fn standalone(&self, id: MutId) -> Option<Lts> {
        if id == 0 {
            return Some(self.original.clone());
        }
        self.mutants.get(&id).map(|m| apply(&self.original, m))
    }
}

pub fn build_meta_mutant(lts: &Lts, mutants: &[Mutant]) -> Result<MetaMutant, MutationError> {
    let mut index = BTreeMap::new();
    let mut points: BTreeMap<LocId, Vec<MutId>> = BTreeMap::new();
    for m in mutants {
        m.validate(lts)?;
        if index.insert(m.id, m.clone()).is_some() {
            return Err(MutationError::IdCollision(m.id));
        }
        points.entry(m.location).or_default().push(m.id);
    }
    for ids in points.values_mut() {
        ids.sort_unstable();
    }
    let mut transitions = Vec::new();
    let mut done = BTreeSet::new();
    for t in &lts.transitions {
        match points.get(&t.src) {
            None => transitions.push(t.clone()),
            Some(ids) => {
                if !done.insert(t.src) {
                    continue;
                }
                for orig in lts.outgoing(t.src) {
                    transitions.push(Transition { selector: Selector::Except(ids.clone()), ..orig.clone() });
                }
                for id in ids {
                    for mt in index[id].view(lts) {
                        transitions.push(Transition { selector: Selector::Only(*id), ..mt });
                    }
                }
            }
        }
    }
    let mut meta = lts.clone();
    meta.transitions = transitions;
    meta.reindex();
    Ok(MetaMutant { lts: meta, original: lts.clone(), mutants: index, points })
}
