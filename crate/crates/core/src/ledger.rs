//! Backup-capacity reservation bookkeeping for one NF instance.
//!
//! Dedicated mode gives each flow its own slot. Shared mode packs mutually
//! independent flows into sharing groups that reserve only the largest
//! member rate.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::ReserveError;
use crate::model::FlowId;

/// Slack for floating-point capacity comparisons.
pub const CAPACITY_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReservationMode {
    #[default]
    Dedicated,
    Shared,
}

/// Pairwise flow independence predicate.
pub trait Independence {
    fn independent(&self, a: FlowId, b: FlowId) -> bool;
}

impl<F: Fn(FlowId, FlowId) -> bool> Independence for F {
    fn independent(&self, a: FlowId, b: FlowId) -> bool {
        self(a, b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub flow: FlowId,
    pub rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SharingGroup {
    pub members: Vec<Member>,
}

impl SharingGroup {
    pub fn rate(&self) -> f64 {
        self.members.iter().map(|m| m.rate).fold(0.0, f64::max)
    }

    fn admits(&self, flow: FlowId, indep: &impl Independence) -> bool {
        self.members.iter().all(|m| indep.independent(flow, m.flow))
    }
}

/// Where a flow would land if reserved now.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    Join(usize),
    New,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReservationLedger {
    pub mode: ReservationMode,
    pub capacity: f64,
    pub groups: Vec<SharingGroup>,
}

impl ReservationLedger {
    pub fn new(mode: ReservationMode, capacity: f64) -> Self {
        Self {
            mode,
            capacity,
            groups: Vec::new(),
        }
    }

    pub fn reserved(&self) -> f64 {
        self.groups.iter().map(SharingGroup::rate).fold(0.0, |a, r| a + r)
    }

    pub fn free(&self) -> f64 {
        self.capacity - self.reserved()
    }

    /// Current utilization, reserved / capacity.
    pub fn utilization(&self) -> f64 {
        self.reserved() / self.capacity
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn contains(&self, flow: FlowId) -> bool {
        self.groups
            .iter()
            .any(|g| g.members.iter().any(|m| m.flow == flow))
    }

    pub fn flows(&self) -> impl Iterator<Item = &Member> + '_ {
        self.groups.iter().flat_map(|g| g.members.iter())
    }

    pub fn flow_count(&self) -> usize {
        self.groups.iter().map(|g| g.members.len()).sum()
    }

    /// First existing group (creation order) the flow could join in shared
    /// mode: independent of every member and the rate increase fits.
    pub fn shareable_group(&self, flow: FlowId, rate: f64, indep: &impl Independence) -> Option<usize> {
        if self.mode != ReservationMode::Shared {
            return None;
        }
        let free = self.free();
        self.groups.iter().position(|g| {
            let increase = (rate - g.rate()).max(0.0);
            g.admits(flow, indep) && increase <= free + CAPACITY_EPS
        })
    }

    pub fn admissible(&self, flow: FlowId, rate: f64, indep: &impl Independence) -> Result<Slot, ReserveError> {
        if self.contains(flow) {
            return Err(ReserveError::AlreadyReserved);
        }
        if let Some(g) = self.shareable_group(flow, rate, indep) {
            return Ok(Slot::Join(g));
        }
        if rate <= self.free() + CAPACITY_EPS {
            Ok(Slot::New)
        } else {
            Err(ReserveError::CapacityExceeded)
        }
    }

    pub fn reserve(&mut self, flow: FlowId, rate: f64, indep: &impl Independence) -> Result<Slot, ReserveError> {
        let slot = self.admissible(flow, rate, indep)?;
        let member = Member { flow, rate };
        match slot {
            Slot::Join(g) => self.groups[g].members.push(member),
            Slot::New => self.groups.push(SharingGroup {
                members: alloc::vec![member],
            }),
        }
        Ok(slot)
    }

    /// Drops the flow's reservation; empty groups disappear.
    pub fn release(&mut self, flow: FlowId) -> bool {
        let mut found = false;
        for g in &mut self.groups {
            let before = g.members.len();
            g.members.retain(|m| m.flow != flow);
            found |= g.members.len() != before;
        }
        self.groups.retain(|g| !g.members.is_empty());
        found
    }

    /// Every sharing group is pairwise independent and capacity holds.
    pub fn is_consistent(&self, indep: &impl Independence) -> bool {
        let pairwise = self.groups.iter().all(|g| {
            g.members.iter().enumerate().all(|(k, a)| {
                g.members[k + 1..]
                    .iter()
                    .all(|b| indep.independent(a.flow, b.flow))
            })
        });
        let dedicated = self.mode == ReservationMode::Shared || self.groups.iter().all(|g| g.members.len() == 1);
        pairwise && dedicated && self.reserved() <= self.capacity + CAPACITY_EPS
    }
}
