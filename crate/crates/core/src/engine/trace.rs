//! Recorded runs and their JSON-lines form.
//!
//! A trace file starts with one header object
//!
//! ```text
//! {"variant": {"kind": "base"}, "n": 4, "preset": "origin", "strategy": "random",
//!  "seed": 7, "initial": {"0": [-2, -1, 1, 2]}, "initial_ids": {"0": [0, 1, 2, 3]}}
//! ```
//!
//! followed by one object per move:
//!
//! ```text
//! {"step": 0, "site": 0, "chosen_values": [-1, 2], "chosen_ids": [1, 3],
//!  "present_before": 4, "fire_index_at_site": 1}
//! ```
//!
//! `chosen_*` are listed in `(value, id)` order, `fire_index_at_site` counts
//! fires at that site including this one. When `initial_ids` is missing, ids
//! are assigned in `(site, value)` order starting from 0.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Chip, ChipId, EngineError, LabeledConfiguration, Site, Value, Variant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// All chips start at the origin.
    Origin,
    /// Chips `-n..=-1` at site -1 and `1..=n+1` at the origin.
    Staircase,
    /// Any other starting placement.
    Custom,
}

/// One executed move plus the bookkeeping recorded alongside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoveRecord {
    pub step: usize,
    pub site: Site,
    /// Fired chips in `(value, id)` order.
    pub chosen: Vec<Chip>,
    /// Chips present at `site` just before the move.
    pub present_before: usize,
    /// Number of fires at `site` so far, this one included.
    pub fire_index_at_site: u64,
}

/// A complete run: starting configuration and every move taken.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub variant: Variant,
    pub preset: Preset,
    /// Chip count for the origin preset, the staircase parameter otherwise.
    pub n: usize,
    pub strategy: String,
    pub seed: u64,
    pub initial: LabeledConfiguration,
    pub moves: Vec<MoveRecord>,
    terminal: LabeledConfiguration,
}

impl Trace {
    pub(crate) fn from_parts(
        variant: Variant,
        preset: Preset,
        strategy: String,
        seed: u64,
        initial: LabeledConfiguration,
        moves: Vec<MoveRecord>,
        terminal: LabeledConfiguration,
    ) -> Self {
        let n = preset_parameter(preset, initial.total());
        Self {
            variant,
            preset,
            n,
            strategy,
            seed,
            initial,
            moves,
            terminal,
        }
    }

    /// Configuration after the last move.
    pub fn terminal(&self) -> &LabeledConfiguration {
        &self.terminal
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Total fires per site over the whole run.
    pub fn fire_counts(&self) -> BTreeMap<Site, u64> {
        let mut counts = BTreeMap::new();
        for mv in &self.moves {
            *counts.entry(mv.site).or_insert(0) += 1;
        }
        counts
    }

    /// The sequence of configurations: the initial one, then one after
    /// every move.
    pub fn states(&self) -> Result<Vec<LabeledConfiguration>, EngineError> {
        let mut out = Vec::with_capacity(self.moves.len() + 1);
        let mut config = self.initial.clone();
        out.push(config.clone());
        for mv in &self.moves {
            let ids: Vec<ChipId> = mv.chosen.iter().map(|c| c.id).collect();
            config
                .fire(&self.variant, mv.site, &ids)
                .map_err(|reason| EngineError::IllegalMove {
                    step: mv.step,
                    reason,
                })?;
            out.push(config.clone());
        }
        Ok(out)
    }

    /// Re-executes every move from the initial configuration and checks all
    /// recorded metadata, returning the final configuration.
    pub fn replay(&self) -> Result<LabeledConfiguration, EngineError> {
        let mut config = self.initial.clone();
        let mut fired: BTreeMap<Site, u64> = BTreeMap::new();
        for (i, mv) in self.moves.iter().enumerate() {
            let mismatch = |what: &str| EngineError::ReplayMismatch {
                step: i,
                detail: what.to_string(),
            };
            if mv.step != i {
                return Err(mismatch("step index"));
            }
            if mv.present_before != config.count_at(mv.site) {
                return Err(mismatch("present_before"));
            }
            for chip in &mv.chosen {
                let here = config.chips_at(mv.site).iter().find(|c| c.id == chip.id);
                if here.map(|c| c.value) != Some(chip.value) {
                    return Err(mismatch("chosen chip value"));
                }
            }
            let ids: Vec<ChipId> = mv.chosen.iter().map(|c| c.id).collect();
            config
                .fire(&self.variant, mv.site, &ids)
                .map_err(|reason| EngineError::IllegalMove { step: i, reason })?;
            let counter = fired.entry(mv.site).or_insert(0);
            *counter += 1;
            if *counter != mv.fire_index_at_site {
                return Err(mismatch("fire_index_at_site"));
            }
        }
        if !super::enabled_sites(&config, &self.variant).is_empty() {
            return Err(EngineError::NotTerminal);
        }
        if config != self.terminal {
            return Err(EngineError::ReplayMismatch {
                step: self.moves.len(),
                detail: "terminal configuration".into(),
            });
        }
        Ok(config)
    }

    /// Rebuilds a trace from its initial configuration and moves, replaying
    /// to fill in the metadata.
    pub fn from_moves(
        variant: Variant,
        preset: Preset,
        strategy: impl Into<String>,
        seed: u64,
        initial: LabeledConfiguration,
        moves: &[(Site, Vec<ChipId>)],
    ) -> Result<Self, EngineError> {
        let mut config = initial.clone();
        let mut fired: BTreeMap<Site, u64> = BTreeMap::new();
        let mut records = Vec::with_capacity(moves.len());
        for (step, (site, ids)) in moves.iter().enumerate() {
            let record = super::record_move(&config, &variant, *site, ids, step, &fired)
                .map_err(|reason| EngineError::IllegalMove { step, reason })?;
            config
                .fire(&variant, *site, ids)
                .map_err(|reason| EngineError::IllegalMove { step, reason })?;
            *fired.entry(*site).or_insert(0) += 1;
            records.push(record);
        }
        Ok(Self::from_parts(
            variant,
            preset,
            strategy.into(),
            seed,
            initial,
            records,
            config,
        ))
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header = Header {
            variant: self.variant,
            n: self.n,
            preset: self.preset,
            strategy: self.strategy.clone(),
            seed: self.seed,
            initial: self.initial.values(),
            initial_ids: Some(
                self.initial
                    .occupied_sites()
                    .map(|s| (s, self.initial.chips_at(s).iter().map(|c| c.id.0).collect()))
                    .collect(),
            ),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for mv in &self.moves {
            let line = MoveLine {
                step: mv.step,
                site: mv.site,
                chosen_values: mv.chosen.iter().map(|c| c.value).collect(),
                chosen_ids: mv.chosen.iter().map(|c| c.id.0).collect(),
                present_before: mv.present_before,
                fire_index_at_site: mv.fire_index_at_site,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Parses a JSON-lines trace and verifies it by replay.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, EngineError> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
            Ok(l) => !l.trim().is_empty(),
            Err(_) => true,
        });
        let parse_err = |line: usize, e: String| EngineError::TraceFormat {
            line: line + 1,
            detail: e,
        };
        let (hline, header) = lines
            .next()
            .ok_or_else(|| parse_err(0, "missing header".into()))?;
        let header = header.map_err(|e| parse_err(hline, e.to_string()))?;
        let header: Header =
            serde_json::from_str(&header).map_err(|e| parse_err(hline, e.to_string()))?;
        header.variant.validate()?;

        let initial = match &header.initial_ids {
            None => LabeledConfiguration::from_values(header.initial.clone()),
            Some(ids) => {
                let mut chips = Vec::new();
                for (site, values) in &header.initial {
                    let site_ids = ids
                        .get(site)
                        .filter(|v| v.len() == values.len())
                        .ok_or_else(|| {
                            parse_err(
                                hline,
                                format!("initial_ids do not match initial at site {site}"),
                            )
                        })?;
                    chips.extend(
                        values
                            .iter()
                            .zip(site_ids)
                            .map(|(&v, &id)| (*site, Chip::new(id, v))),
                    );
                }
                LabeledConfiguration::from_chips(chips)?
            }
        };

        let mut moves = Vec::new();
        for (lineno, line) in lines {
            let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
            let mv: MoveLine =
                serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
            if mv.chosen_values.len() != mv.chosen_ids.len() {
                return Err(parse_err(
                    lineno,
                    "chosen_values and chosen_ids differ in length".into(),
                ));
            }
            moves.push(MoveRecord {
                step: mv.step,
                site: mv.site,
                chosen: mv
                    .chosen_ids
                    .iter()
                    .zip(&mv.chosen_values)
                    .map(|(&id, &v)| Chip::new(id, v))
                    .collect(),
                present_before: mv.present_before,
                fire_index_at_site: mv.fire_index_at_site,
            });
        }

        let mut trace = Self {
            variant: header.variant,
            preset: header.preset,
            n: header.n,
            strategy: header.strategy,
            seed: header.seed,
            initial,
            moves,
            terminal: LabeledConfiguration::new(),
        };
        let states = trace.states()?;
        trace.terminal = states.last().cloned().unwrap_or_default();
        trace.replay()?;
        Ok(trace)
    }
}

fn preset_parameter(preset: Preset, total: usize) -> usize {
    match preset {
        Preset::Staircase => total.saturating_sub(1) / 2,
        Preset::Origin | Preset::Custom => total,
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    variant: Variant,
    n: usize,
    preset: Preset,
    strategy: String,
    seed: u64,
    initial: BTreeMap<Site, Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial_ids: Option<BTreeMap<Site, Vec<u32>>>,
}

#[derive(Serialize, Deserialize)]
struct MoveLine {
    step: usize,
    site: Site,
    chosen_values: Vec<Value>,
    chosen_ids: Vec<u32>,
    present_before: usize,
    fire_index_at_site: u64,
}
