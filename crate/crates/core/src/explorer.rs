//! Exhaustive search over every labeled run from a starting configuration.
//!
//! Firing depends only on chip values, never on ids, so states are stored as
//! the sorted value list of each site. The search is breadth first with a
//! visited set and parent links; witness runs are rebuilt from the parent
//! links only when asked for.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::rc::Rc;

use itertools::Itertools;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::analysis::values_weakly_sorted;
use crate::engine::{
    apply_move, standard_initial, ChipId, EngineError, LabeledConfiguration, Move, Preset, Runner,
    Site, Strategy, Trace, Value, Variant,
};

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("state cap {cap} reached after visiting {states_visited} states")]
    CapExceeded { cap: usize, states_visited: usize },
    #[error("site or value {0} does not fit the compact state encoding")]
    OutOfRange(i64),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Sorted chip values per occupied site, ids forgotten.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct CanonicalState(pub BTreeMap<Site, Vec<Value>>);

impl CanonicalState {
    pub fn from_config(config: &LabeledConfiguration) -> Self {
        Self(config.values())
    }

    pub fn total(&self) -> usize {
        self.0.values().map(Vec::len).sum()
    }

    pub fn unlabeled(&self) -> BTreeMap<Site, usize> {
        self.0.iter().map(|(&s, v)| (s, v.len())).collect()
    }

    pub fn is_weakly_sorted(&self) -> bool {
        values_weakly_sorted(&self.0)
    }

    pub fn enabled_sites(&self, variant: &Variant) -> Vec<Site> {
        self.0
            .iter()
            .filter(|(&s, v)| v.len() as u64 >= variant.threshold(s))
            .map(|(&s, _)| s)
            .collect()
    }

    /// State after firing `site` with chips of the given values.
    pub fn fire(&self, variant: &Variant, site: Site, chosen: &[Value]) -> Option<Self> {
        let mut sites = self.0.clone();
        let here = sites.get_mut(&site)?;
        if chosen.len() as u64 != variant.threshold(site) {
            return None;
        }
        for v in chosen {
            let at = here.iter().position(|x| x == v)?;
            here.remove(at);
        }
        if here.is_empty() {
            sites.remove(&site);
        }
        let mut picked = chosen.to_vec();
        picked.sort_unstable();
        let left = variant.left_mult(site) as usize;
        let right = variant.right_mult(site) as usize;
        let stay_end = picked.len() - right;
        for (i, v) in picked.into_iter().enumerate() {
            let dest = if i < left {
                site - 1
            } else if i < stay_end {
                site
            } else {
                site + 1
            };
            let slot = sites.entry(dest).or_default();
            let at = slot.partition_point(|&x| x < v);
            slot.insert(at, v);
        }
        Some(Self(sites))
    }

    fn encode(&self) -> Result<Rc<[i16]>, ExploreError> {
        let narrow = |x: i64| i16::try_from(x).map_err(|_| ExploreError::OutOfRange(x));
        let mut out = Vec::with_capacity(self.total() + 2 * self.0.len());
        for (&site, values) in &self.0 {
            out.push(narrow(site)?);
            out.push(narrow(values.len() as i64)?);
            for &v in values {
                out.push(narrow(v)?);
            }
        }
        Ok(out.into())
    }

    fn decode(raw: &[i16]) -> Self {
        let mut sites = BTreeMap::new();
        let mut i = 0;
        while i < raw.len() {
            let site = i64::from(raw[i]);
            let len = raw[i + 1] as usize;
            sites.insert(
                site,
                raw[i + 2..i + 2 + len]
                    .iter()
                    .map(|&v| i64::from(v))
                    .collect(),
            );
            i += 2 + len;
        }
        Self(sites)
    }
}

/// One way to leave a state: the site, the values fired, and the result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub site: Site,
    pub chosen: Vec<Value>,
    pub next: CanonicalState,
}

/// Every distinct move from `state`: each enabled site with each distinct
/// value multiset of threshold size.
pub fn successor_moves(state: &CanonicalState, variant: &Variant) -> Vec<Outcome> {
    let mut out = Vec::new();
    for site in state.enabled_sites(variant) {
        let values = &state.0[&site];
        let k = variant.threshold(site) as usize;
        let mut seen = HashSet::new();
        for chosen in values.iter().copied().combinations(k) {
            if seen.insert(chosen.clone()) {
                let next = state
                    .fire(variant, site, &chosen)
                    .expect("chosen from the site");
                out.push(Outcome { site, chosen, next });
            }
        }
    }
    out
}

/// Distinct states one move away.
pub fn successor_outcomes(state: &CanonicalState, variant: &Variant) -> BTreeSet<CanonicalState> {
    successor_moves(state, variant)
        .into_iter()
        .map(|o| o.next)
        .collect()
}

/// Summary of an exhaustive search.
#[derive(Clone, Debug)]
pub struct ExplorationReport {
    pub states_visited: usize,
    pub terminals: Vec<CanonicalState>,
    pub confluent: bool,
    pub sorted_terminals: usize,
    /// A run ending in an unsorted terminal, if there is one.
    pub witness: Option<Trace>,
}

impl ExplorationReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "states_visited": self.states_visited,
            "terminal_count": self.terminals.len(),
            "confluent": self.confluent,
            "sorted_terminal_count": self.sorted_terminals,
            "terminals": self.terminals,
            "witness": self.witness.as_ref().map(Trace::to_jsonl),
        })
    }
}

struct Search {
    keys: Vec<Rc<[i16]>>,
    parent: Vec<u32>,
    terminals: Vec<u32>,
}

const ROOT: u32 = u32::MAX;

/// Breadth-first search. With `stop_at_unsorted`, returns as soon as an
/// unsorted terminal is found.
fn search(
    initial: &CanonicalState,
    variant: &Variant,
    state_cap: usize,
    stop_at_unsorted: bool,
) -> Result<(Search, Option<u32>), ExploreError> {
    let start = initial.encode()?;
    let mut index: HashMap<Rc<[i16]>, u32> = HashMap::new();
    let mut s = Search {
        keys: vec![start.clone()],
        parent: vec![ROOT],
        terminals: Vec::new(),
    };
    index.insert(start, 0);
    let mut queue = VecDeque::from([0u32]);
    while let Some(at) = queue.pop_front() {
        let state = CanonicalState::decode(&s.keys[at as usize]);
        let moves = successor_moves(&state, variant);
        if moves.is_empty() {
            s.terminals.push(at);
            if stop_at_unsorted && !state.is_weakly_sorted() {
                return Ok((s, Some(at)));
            }
            continue;
        }
        for outcome in moves {
            let key = outcome.next.encode()?;
            if index.contains_key(&key) {
                continue;
            }
            if s.keys.len() >= state_cap {
                return Err(ExploreError::CapExceeded {
                    cap: state_cap,
                    states_visited: s.keys.len(),
                });
            }
            let id = s.keys.len() as u32;
            index.insert(key.clone(), id);
            s.keys.push(key);
            s.parent.push(at);
            queue.push_back(id);
        }
    }
    Ok((s, None))
}

/// Rebuilds a labeled run from the start to stored state `target`.
fn witness(
    s: &Search,
    target: u32,
    initial: &LabeledConfiguration,
    variant: &Variant,
) -> Result<Trace, ExploreError> {
    let mut path = vec![target];
    while let Some(&p) = path.last().map(|&i| &s.parent[i as usize]) {
        if p == ROOT {
            break;
        }
        path.push(p);
    }
    path.reverse();
    let mut config = initial.clone();
    let mut moves: Vec<(Site, Vec<ChipId>)> = Vec::new();
    for pair in path.windows(2) {
        let here = CanonicalState::decode(&s.keys[pair[0] as usize]);
        let want = CanonicalState::decode(&s.keys[pair[1] as usize]);
        let step = successor_moves(&here, variant)
            .into_iter()
            .find(|o| o.next == want)
            .expect("child was generated from its parent");
        let mut ids = Vec::new();
        for v in &step.chosen {
            let chip = config
                .chips_at(step.site)
                .iter()
                .find(|c| c.value == *v && !ids.contains(&c.id))
                .expect("value present at the site");
            ids.push(chip.id);
        }
        config = apply_move(
            &config,
            variant,
            &Move {
                site: step.site,
                chosen: ids.clone(),
                step_index: moves.len(),
            },
        )?;
        moves.push((step.site, ids));
    }
    Ok(Trace::from_moves(
        *variant,
        Preset::infer(initial),
        "explorer",
        0,
        initial.clone(),
        &moves,
    )?)
}

/// Visits every reachable state and collects the terminals.
pub fn explore(
    initial: &LabeledConfiguration,
    variant: &Variant,
    state_cap: usize,
) -> Result<ExplorationReport, ExploreError> {
    let (s, _) = search(
        &CanonicalState::from_config(initial),
        variant,
        state_cap,
        false,
    )?;
    let mut terminals: Vec<(CanonicalState, u32)> = s
        .terminals
        .iter()
        .map(|&i| (CanonicalState::decode(&s.keys[i as usize]), i))
        .collect();
    terminals.sort();
    let sorted_terminals = terminals
        .iter()
        .filter(|(t, _)| t.is_weakly_sorted())
        .count();
    let witness = match terminals.iter().find(|(t, _)| !t.is_weakly_sorted()) {
        Some(&(_, i)) => Some(witness(&s, i, initial, variant)?),
        None => None,
    };
    Ok(ExplorationReport {
        states_visited: s.keys.len(),
        confluent: terminals.len() == 1,
        terminals: terminals.into_iter().map(|(t, _)| t).collect(),
        sorted_terminals,
        witness,
    })
}

/// A run ending in a terminal that is not weakly sorted, or `None` when the
/// whole reachable space has none. Hitting the cap is an error, never `None`.
pub fn find_unsorted_terminal(
    initial: &LabeledConfiguration,
    variant: &Variant,
    state_cap: usize,
) -> Result<Option<Trace>, ExploreError> {
    let (s, found) = search(
        &CanonicalState::from_config(initial),
        variant,
        state_cap,
        true,
    )?;
    found.map(|i| witness(&s, i, initial, variant)).transpose()
}

/// Starts `4m + 1` chips at the origin of the self-loop line and keeps both
/// chips valued `-m` at the origin for as long as any other choice exists.
pub fn adversarial_1mod4(m: u64, seed: u64) -> Result<Trace, EngineError> {
    let variant = Variant::LoopsEverywhere;
    let initial = standard_initial(&variant, (4 * m + 1) as usize, Preset::Origin)?;
    let held = initial
        .iter()
        .filter(|(_, c)| c.value == -(m as Value))
        .map(|(_, c)| c.id)
        .collect();
    Runner::new(variant, &Strategy::Hold(held))
        .seed(seed)
        .run(&initial)
}
