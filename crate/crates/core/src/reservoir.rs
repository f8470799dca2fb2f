//! The n-reservoir system: one hose feeding one of several leaking tanks.
//!
//! A configuration is the hose plus a set of reservoirs keyed by id. The hose
//! may move onto any tank at or below its lower threshold, provided the tank
//! it sits on is at or above its own. Time elapses only while no tank other
//! than the one under the hose needs a refill.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::num::{monus, Rat, Time};
use crate::system::{ModelError, Prop, TimedSystem};

pub const ONE_DOWN: &str = "one-down";
pub const MACONDO: &str = "macondo";
pub const MOVE_HOSE: &str = "move-hose";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Hose {
    pub rate: Rat,
    pub position: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Reservoir {
    pub id: u64,
    pub lower: Rat,
    pub upper: Rat,
    pub level: Rat,
    pub leak: Rat,
}

impl Reservoir {
    pub fn needs_refill(&self) -> bool {
        self.level <= self.lower
    }
}

impl fmt::Display for Reservoir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "< {} | thr:({},{}), hth: {}, rte: {} >",
            self.id, self.lower, self.upper, self.level, self.leak
        )
    }
}

/// Hose plus reservoirs. The map gives the canonical (by id) order, so two
/// configurations that differ only in listing order are the same value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NResState {
    pub hose: Hose,
    pub reservoirs: BTreeMap<u64, Reservoir>,
}

impl NResState {
    pub fn new(hose: Hose, reservoirs: Vec<Reservoir>) -> Result<Self, ModelError> {
        if reservoirs.is_empty() {
            return Err(ModelError::Invalid("at least one reservoir".into()));
        }
        if hose.rate.is_negative() {
            return Err(ModelError::Invalid("hose: rate must be >= 0".into()));
        }
        let mut map = BTreeMap::new();
        for r in reservoirs {
            for (field, v) in [("lower", &r.lower), ("upper", &r.upper), ("level", &r.level), ("leak", &r.leak)] {
                if v.is_negative() {
                    return Err(ModelError::Invalid(format!("reservoir {}: {field} must be >= 0", r.id)));
                }
            }
            if r.lower > r.upper {
                return Err(ModelError::Invalid(format!("reservoir {}: lower > upper", r.id)));
            }
            let id = r.id;
            if map.insert(id, r).is_some() {
                return Err(ModelError::Invalid(format!("reservoir {id}: duplicate id")));
            }
        }
        if !map.contains_key(&hose.position) {
            return Err(ModelError::Invalid(format!(
                "hose: position {} is not a reservoir id",
                hose.position
            )));
        }
        Ok(NResState { hose, reservoirs: map })
    }

    pub fn level(&self, id: u64) -> Option<&Rat> {
        self.reservoirs.get(&id).map(|r| &r.level)
    }

    /// Reservoirs other than the one under the hose.
    fn others(&self) -> impl Iterator<Item = &Reservoir> {
        let pos = self.hose.position;
        self.reservoirs.values().filter(move |r| r.id != pos)
    }

    /// `Some(warning)` unless the hose intake equals the total leak.
    pub fn well_formedness_warning(&self) -> Option<String> {
        let total: Rat = self.reservoirs.values().map(|r| r.leak.clone()).sum();
        if total == self.hose.rate {
            None
        } else {
            Some(format!(
                "system is not well-formed: total leak {total} differs from hose rate {}",
                self.hose.rate
            ))
        }
    }

    /// Ids of reservoirs whose level exceeds their upper threshold.
    pub fn above_upper(&self) -> Vec<u64> {
        self.reservoirs.values().filter(|r| r.level > r.upper).map(|r| r.id).collect()
    }
}

impl fmt::Display for NResState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "hose({},{})", self.hose.rate, self.hose.position)?;
        for r in self.reservoirs.values() {
            write!(f, " {r}")?;
        }
        Ok(())
    }
}

/// Level after `t` time units under a hose of intake `w`.
pub fn fill(r: &Reservoir, w: &Rat, t: &Time) -> Result<Reservoir, ModelError> {
    if w < &r.leak {
        return Err(ModelError::HoseSlowerThanLeak {
            id: r.id,
            rate: w.to_string(),
            leak: r.leak.to_string(),
        });
    }
    let mut out = r.clone();
    out.level = &r.level + &((w - &r.leak) * t.value());
    Ok(out)
}

/// Leaks every reservoir for `t` time units, saturating at zero.
pub fn drain<'a>(rs: impl IntoIterator<Item = &'a Reservoir>, t: &Time) -> Vec<Reservoir> {
    rs.into_iter()
        .map(|r| {
            let mut out = r.clone();
            out.level = monus(&r.level, &(&r.leak * t.value()));
            out
        })
        .collect()
}

pub fn needs_refill<'a>(rs: impl IntoIterator<Item = &'a Reservoir>) -> bool {
    rs.into_iter().any(Reservoir::needs_refill)
}

/// One successor per other tank at or below its lower threshold, provided
/// the hose's current tank is at or above its own. Ordered by target id.
pub fn move_hose_successors(s: &NResState) -> Vec<(String, NResState)> {
    let Some(current) = s.reservoirs.get(&s.hose.position) else {
        return Vec::new();
    };
    if current.level < current.lower {
        return Vec::new();
    }
    s.others()
        .filter(|r| r.needs_refill())
        .map(|target| {
            let mut next = s.clone();
            next.hose.position = target.id;
            (MOVE_HOSE.to_string(), next)
        })
        .collect()
}

/// Lets `t` elapse: the hose's tank fills, every other tank drains. Blocked
/// (`None`) when some other tank needs a refill.
pub fn tick(s: &NResState, t: &Time) -> Result<Option<NResState>, ModelError> {
    if t.is_zero() {
        return Ok(Some(s.clone()));
    }
    if needs_refill(s.others()) {
        return Ok(None);
    }
    let pos = s.hose.position;
    let current = s
        .reservoirs
        .get(&pos)
        .ok_or_else(|| ModelError::Invalid(format!("hose: position {pos} is not a reservoir id")))?;
    let mut next = s.clone();
    next.reservoirs.insert(pos, fill(current, &s.hose.rate, t)?);
    for r in drain(s.others(), t) {
        next.reservoirs.insert(r.id, r);
    }
    Ok(Some(next))
}

pub fn valuation(s: &NResState, prop: &Prop) -> Result<bool, ModelError> {
    match prop.as_str() {
        ONE_DOWN => Ok(s.reservoirs.values().any(Reservoir::needs_refill)),
        MACONDO => Ok(s.reservoirs.values().all(Reservoir::needs_refill)),
        _ => Err(ModelError::UnknownProposition(prop.to_string())),
    }
}

/// The n-reservoir system from a given initial configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NResModel {
    pub initial: NResState,
}

impl NResModel {
    pub fn new(initial: NResState) -> Self {
        NResModel { initial }
    }
}

impl TimedSystem for NResModel {
    type State = NResState;

    fn initial(&self) -> NResState {
        self.initial.clone()
    }

    fn discrete_successors(&self, state: &NResState) -> Result<Vec<(String, NResState)>, ModelError> {
        Ok(move_hose_successors(state))
    }

    fn timed_successors(&self, state: &NResState, delta: &Time) -> Result<Vec<NResState>, ModelError> {
        Ok(tick(state, delta)?.into_iter().collect())
    }

    fn holds(&self, state: &NResState, prop: &Prop) -> Result<bool, ModelError> {
        valuation(state, prop)
    }

    fn props(&self) -> Vec<Prop> {
        vec![Prop::new(MACONDO).unwrap(), Prop::new(ONE_DOWN).unwrap()]
    }

    fn serialize(&self, state: &NResState) -> String {
        state.to_string()
    }
}
