//! Lattice variants, labeled configurations, firing moves and the run loop.

mod config;
mod strategy;
mod trace;
mod variant;

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closedform::{self, OracleError};

pub use config::LabeledConfiguration;
pub use strategy::{ScriptedMove, Strategy};
pub use trace::{MoveRecord, Preset, Trace};
pub use variant::{Variant, MAX_EXPONENT};

/// A point of the integer line.
pub type Site = i64;
/// A chip label. Labels may repeat.
pub type Value = i64;

/// Move cap used when no closed-form total is known for the run.
pub const DEFAULT_MOVE_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChipId(pub u32);

impl fmt::Display for ChipId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chip {
    pub id: ChipId,
    pub value: Value,
}

impl Chip {
    pub fn new(id: u32, value: Value) -> Self {
        Self {
            id: ChipId(id),
            value,
        }
    }

    /// Firing order key: equal values are broken by the lower id.
    pub fn key(&self) -> (Value, ChipId) {
        (self.value, self.id)
    }
}

/// Why a requested move cannot be applied.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum IllegalMove {
    #[error("site {site} holds {present} chips, needs {threshold}")]
    SiteNotEnabled {
        site: Site,
        present: usize,
        threshold: u64,
    },
    #[error("chip {id} is not at site {site}")]
    ChipAbsent { site: Site, id: ChipId },
    #[error("chose {got} chips, site needs exactly {expected}")]
    WrongCardinality { expected: u64, got: usize },
    #[error("chip {id} chosen twice")]
    DuplicateChoice { id: ChipId },
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid variant: {0}")]
    InvalidVariant(String),
    #[error("duplicate chip id {0}")]
    DuplicateChipId(ChipId),
    #[error("illegal move at step {step}: {reason}")]
    IllegalMove { step: usize, reason: IllegalMove },
    #[error("run exceeded the move cap of {cap}")]
    MoveCapExceeded { cap: u64 },
    #[error("scripted moves ran out after {step} moves with sites still enabled")]
    ScriptExhausted { step: usize },
    #[error("final configuration still has an enabled site")]
    NotTerminal,
    #[error("replay diverged at step {step}: {detail}")]
    ReplayMismatch { step: usize, detail: String },
    #[error("trace line {line}: {detail}")]
    TraceFormat { line: usize, detail: String },
    #[error("preset {preset:?} is not available for {variant}")]
    UnsupportedPreset { variant: Variant, preset: Preset },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Callback invoked after every executed move with the new configuration.
pub trait StepObserver {
    fn on_step(&mut self, state: &LabeledConfiguration, record: &MoveRecord);
}

impl<F> StepObserver for F
where
    F: FnMut(&LabeledConfiguration, &MoveRecord),
{
    fn on_step(&mut self, state: &LabeledConfiguration, record: &MoveRecord) {
        self(state, record)
    }
}

/// Number of chips `site` needs to fire.
pub fn threshold(variant: &Variant, site: Site) -> u64 {
    variant.threshold(site)
}

/// Sites holding at least their threshold, ascending.
///
/// Enabling depends on chip counts only, never on labels.
pub fn enabled_sites(config: &LabeledConfiguration, variant: &Variant) -> Vec<Site> {
    config
        .occupied_sites()
        .filter(|&s| config.is_enabled(variant, s))
        .collect()
}

/// A requested firing move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Move {
    pub site: Site,
    pub chosen: Vec<ChipId>,
    pub step_index: usize,
}

/// Applies `mv`, returning the new configuration.
pub fn apply_move(
    config: &LabeledConfiguration,
    variant: &Variant,
    mv: &Move,
) -> Result<LabeledConfiguration, EngineError> {
    let mut next = config.clone();
    next.fire(variant, mv.site, &mv.chosen)
        .map_err(|reason| EngineError::IllegalMove {
            step: mv.step_index,
            reason,
        })?;
    Ok(next)
}

/// Starting configuration for `variant` with `n` chips (origin preset) or
/// staircase parameter `n` (`-n..=-1` at site -1, `1..=n+1` at the origin).
pub fn standard_initial(
    variant: &Variant,
    n: usize,
    preset: Preset,
) -> Result<LabeledConfiguration, EngineError> {
    variant.validate()?;
    match preset {
        Preset::Origin => {
            let labels = closedform::canonical_labels(variant, n)?;
            Ok(LabeledConfiguration::from_values([(0, labels)]))
        }
        Preset::Staircase if *variant == Variant::Base => {
            let n = n as Value;
            Ok(LabeledConfiguration::from_values([
                (-1, (-n..=-1).collect::<Vec<_>>()),
                (0, (1..=n + 1).collect()),
            ]))
        }
        _ => Err(EngineError::UnsupportedPreset {
            variant: *variant,
            preset,
        }),
    }
}

impl Preset {
    /// Recognises the two standard placements; everything else is custom.
    pub fn infer(config: &LabeledConfiguration) -> Preset {
        let sites: Vec<Site> = config.occupied_sites().collect();
        if sites.is_empty() || sites == [0] {
            return Preset::Origin;
        }
        if sites == [-1, 0] {
            let values = config.values();
            let n = values[&-1].len() as Value;
            let expect_left: Vec<Value> = (-n..=-1).collect();
            let expect_origin: Vec<Value> = (1..=n + 1).collect();
            if values[&-1] == expect_left && values[&0] == expect_origin {
                return Preset::Staircase;
            }
        }
        Preset::Custom
    }
}

/// Drives one run from an initial configuration to a terminal one.
///
/// Randomness comes from a ChaCha8 generator seeded with
/// `ChaCha8Rng::seed_from_u64(seed)`, so a seed reproduces a run exactly on
/// any platform.
pub struct Runner<'a> {
    variant: Variant,
    strategy: &'a Strategy,
    seed: u64,
    move_cap: Option<u64>,
    observers: Vec<&'a mut dyn StepObserver>,
}

impl<'a> Runner<'a> {
    pub fn new(variant: Variant, strategy: &'a Strategy) -> Self {
        Self {
            variant,
            strategy,
            seed: 0,
            move_cap: None,
            observers: Vec::new(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Overrides the default cap of ten times the known total move count
    /// (or [`DEFAULT_MOVE_CAP`] when none is known).
    pub fn move_cap(mut self, cap: u64) -> Self {
        self.move_cap = Some(cap);
        self
    }

    pub fn observe(mut self, observer: &'a mut dyn StepObserver) -> Self {
        self.observers.push(observer);
        self
    }

    pub fn run(mut self, initial: &LabeledConfiguration) -> Result<Trace, EngineError> {
        self.variant.validate()?;
        let preset = Preset::infer(initial);
        let cap = self.move_cap.unwrap_or_else(|| {
            closedform::expected_total_moves(&self.variant, initial)
                .map_or(DEFAULT_MOVE_CAP, |total| total.saturating_mul(10).max(10))
        });

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut chooser = strategy::Chooser::new(self.strategy);
        let mut config = initial.clone();
        let mut fired: BTreeMap<Site, u64> = BTreeMap::new();
        let mut moves = Vec::new();

        while let Some((site, chosen)) = chooser.next_move(&config, &self.variant, &mut rng)? {
            let step = moves.len();
            if step as u64 >= cap {
                return Err(EngineError::MoveCapExceeded { cap });
            }
            let record = record_move(&config, &self.variant, site, &chosen, step, &fired)
                .map_err(|reason| EngineError::IllegalMove { step, reason })?;
            config
                .fire(&self.variant, site, &chosen)
                .map_err(|reason| EngineError::IllegalMove { step, reason })?;
            *fired.entry(site).or_insert(0) += 1;
            for obs in self.observers.iter_mut() {
                obs.on_step(&config, &record);
            }
            moves.push(record);
        }

        Ok(Trace::from_parts(
            self.variant,
            preset,
            self.strategy.name().to_string(),
            self.seed,
            initial.clone(),
            moves,
            config,
        ))
    }
}

/// Runs `initial` to completion with the default move cap.
pub fn run_to_completion(
    initial: &LabeledConfiguration,
    variant: &Variant,
    strategy: &Strategy,
    seed: u64,
    observers: &mut [&mut dyn StepObserver],
) -> Result<Trace, EngineError> {
    let mut runner = Runner::new(*variant, strategy).seed(seed);
    for obs in observers.iter_mut() {
        runner = runner.observe(&mut **obs);
    }
    runner.run(initial)
}

/// Builds the record for a move about to be applied, validating it first.
pub(crate) fn record_move(
    config: &LabeledConfiguration,
    variant: &Variant,
    site: Site,
    chosen: &[ChipId],
    step: usize,
    fired: &BTreeMap<Site, u64>,
) -> Result<MoveRecord, IllegalMove> {
    let present = config.chips_at(site);
    let threshold = variant.threshold(site);
    if (present.len() as u64) < threshold {
        return Err(IllegalMove::SiteNotEnabled {
            site,
            present: present.len(),
            threshold,
        });
    }
    let mut picked = Vec::with_capacity(chosen.len());
    for &id in chosen {
        let chip = present
            .iter()
            .find(|c| c.id == id)
            .ok_or(IllegalMove::ChipAbsent { site, id })?;
        picked.push(*chip);
    }
    picked.sort_unstable_by_key(Chip::key);
    Ok(MoveRecord {
        step,
        site,
        chosen: picked,
        present_before: present.len(),
        fire_index_at_site: fired.get(&site).copied().unwrap_or(0) + 1,
    })
}
