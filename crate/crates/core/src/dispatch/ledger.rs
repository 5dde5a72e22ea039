use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

/// Unit weight of each primitive the interrupt and delay paths perform.
///
/// The defaults are abstractions, not calibrated cycle counts: one unit per
/// tick increment, comparison, element inspection, sorted-insert traversal
/// step, append, slot write and ready-list insert, two per list removal and
/// ten for entering and leaving an interrupt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub tick_increment: u64,
    pub comparison: u64,
    pub inspection: u64,
    pub removal: u64,
    pub sorted_insert_step: u64,
    pub append: u64,
    pub slot_write: u64,
    pub ready_insert: u64,
    pub interrupt_entry: u64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            tick_increment: 1,
            comparison: 1,
            inspection: 1,
            removal: 2,
            sorted_insert_step: 1,
            append: 1,
            slot_write: 1,
            ready_insert: 1,
            interrupt_entry: 10,
        }
    }
}

/// Counts of primitive operations charged by the dispatcher.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCostLedger {
    pub tick_increments: u64,
    pub comparisons: u64,
    /// Timer-list elements or harmonic slots examined.
    pub inspections: u64,
    pub removals: u64,
    pub sorted_insert_steps: u64,
    pub appends: u64,
    pub slot_writes: u64,
    pub ready_inserts: u64,
    /// Interrupt entries, each paired with an exit.
    pub interrupts: u64,
}

impl OpCostLedger {
    pub fn total(&self, w: &CostWeights) -> u64 {
        self.tick_increments * w.tick_increment
            + self.comparisons * w.comparison
            + self.inspections * w.inspection
            + self.removals * w.removal
            + self.sorted_insert_steps * w.sorted_insert_step
            + self.appends * w.append
            + self.slot_writes * w.slot_write
            + self.ready_inserts * w.ready_insert
            + self.interrupts * w.interrupt_entry
    }

    /// Element-wise difference; `self` must dominate `earlier`.
    pub fn since(&self, earlier: &OpCostLedger) -> OpCostLedger {
        OpCostLedger {
            tick_increments: self.tick_increments - earlier.tick_increments,
            comparisons: self.comparisons - earlier.comparisons,
            inspections: self.inspections - earlier.inspections,
            removals: self.removals - earlier.removals,
            sorted_insert_steps: self.sorted_insert_steps - earlier.sorted_insert_steps,
            appends: self.appends - earlier.appends,
            slot_writes: self.slot_writes - earlier.slot_writes,
            ready_inserts: self.ready_inserts - earlier.ready_inserts,
            interrupts: self.interrupts - earlier.interrupts,
        }
    }
}

impl AddAssign for OpCostLedger {
    fn add_assign(&mut self, o: Self) {
        self.tick_increments += o.tick_increments;
        self.comparisons += o.comparisons;
        self.inspections += o.inspections;
        self.removals += o.removals;
        self.sorted_insert_steps += o.sorted_insert_steps;
        self.appends += o.appends;
        self.slot_writes += o.slot_writes;
        self.ready_inserts += o.ready_inserts;
        self.interrupts += o.interrupts;
    }
}
