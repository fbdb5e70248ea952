use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Chip, ChipId, EngineError, LabeledConfiguration, Site, Variant};

/// One explicit firing move for [`Strategy::Scripted`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedMove {
    pub site: Site,
    pub chosen: Vec<ChipId>,
}

/// How the next move is picked.
///
/// Randomised strategies draw from the run's seeded generator: first a site
/// uniformly among the candidates, then a chip subset uniformly among the
/// legal subsets at that site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Smallest enabled site, lowest `(value, id)` chips.
    Leftmost,
    /// Uniform site, then uniform chip subset.
    Random,
    /// Replays an explicit move list; the run fails if the list ends while
    /// some site is still enabled.
    Scripted(Vec<ScriptedMove>),
    /// Keeps the given chips where they are for as long as possible: sites
    /// offering a subset disjoint from the held set are fired first, and a
    /// held chip is only chosen when every legal subset at the fired site
    /// contains one.
    Hold(BTreeSet<ChipId>),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Leftmost => "leftmost",
            Strategy::Random => "random",
            Strategy::Scripted(_) => "scripted",
            Strategy::Hold(_) => "hold",
        }
    }
}

pub(crate) struct Chooser<'a> {
    strategy: &'a Strategy,
    cursor: usize,
}

impl<'a> Chooser<'a> {
    pub(crate) fn new(strategy: &'a Strategy) -> Self {
        Self {
            strategy,
            cursor: 0,
        }
    }

    /// Next move, or `None` once no site is enabled.
    pub(crate) fn next_move<R: Rng>(
        &mut self,
        config: &LabeledConfiguration,
        variant: &Variant,
        rng: &mut R,
    ) -> Result<Option<(Site, Vec<ChipId>)>, EngineError> {
        if let Strategy::Scripted(script) = self.strategy {
            if let Some(mv) = script.get(self.cursor) {
                self.cursor += 1;
                return Ok(Some((mv.site, mv.chosen.clone())));
            }
            return if super::enabled_sites(config, variant).is_empty() {
                Ok(None)
            } else {
                Err(EngineError::ScriptExhausted { step: self.cursor })
            };
        }

        let enabled = super::enabled_sites(config, variant);
        if enabled.is_empty() {
            return Ok(None);
        }
        let choice = match self.strategy {
            Strategy::Leftmost => {
                let site = enabled[0];
                let k = variant.threshold(site) as usize;
                (
                    site,
                    config.chips_at(site)[..k].iter().map(|c| c.id).collect(),
                )
            }
            Strategy::Random => {
                let site = enabled[rng.random_range(0..enabled.len())];
                let k = variant.threshold(site) as usize;
                (site, sample_ids(config.chips_at(site), k, rng))
            }
            Strategy::Hold(held) => {
                let free = |site: Site| -> Vec<Chip> {
                    config
                        .chips_at(site)
                        .iter()
                        .filter(|c| !held.contains(&c.id))
                        .copied()
                        .collect()
                };
                let preferred: Vec<Site> = enabled
                    .iter()
                    .copied()
                    .filter(|&s| free(s).len() as u64 >= variant.threshold(s))
                    .collect();
                if preferred.is_empty() {
                    let site = enabled[rng.random_range(0..enabled.len())];
                    let k = variant.threshold(site) as usize;
                    let free_chips = free(site);
                    let held_chips: Vec<Chip> = config
                        .chips_at(site)
                        .iter()
                        .filter(|c| held.contains(&c.id))
                        .copied()
                        .collect();
                    let mut ids: Vec<ChipId> = free_chips.iter().map(|c| c.id).collect();
                    ids.extend(sample_ids(&held_chips, k - free_chips.len(), rng));
                    (site, ids)
                } else {
                    let site = preferred[rng.random_range(0..preferred.len())];
                    let k = variant.threshold(site) as usize;
                    (site, sample_ids(&free(site), k, rng))
                }
            }
            Strategy::Scripted(_) => unreachable!("handled above"),
        };
        Ok(Some(choice))
    }
}

fn sample_ids<R: Rng>(chips: &[Chip], amount: usize, rng: &mut R) -> Vec<ChipId> {
    let mut picked: Vec<usize> = index::sample(rng, chips.len(), amount).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| chips[i].id).collect()
}
