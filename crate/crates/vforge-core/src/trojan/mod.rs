//! Net-level CPU model with injectable Trojans: per-cycle traces of 120
//! named microarchitectural nets, static-probability analysis, rare-trigger
//! enumeration, Trigger Avoidance Rate, and a scenario builder for
//! detection/tolerance experiments.
//!
//! Nets derive from architectural per-instruction activity (decode fields,
//! ALU datapath, control enables, program counter) rather than gate-level
//! structure, so trigger and TAR results are trend-level stand-ins for RTL
//! measurements, not absolute counts.

mod machine;
pub mod sweep;
mod nets;
pub mod scenario;
mod tar;
mod trace;
mod trigger;

pub use machine::{run_traced, trace_nets, AluOp, Firing, TraceError, TracedRun};
pub use nets::{NetId, NetKind, NET_COUNT};
pub use tar::{tar, tar_from_refires, TarEntry};
pub use trace::{static_probabilities, NetTraceMatrix, StaticProbabilityTable};
pub use trigger::{
    enumerate_triggers, fires, fires_at_all, NetCondition, PayloadKind, TriggerEnumeration,
    TriggerError, TriggerSpec, TriggerState, TriggerStep, TrojanSpec,
};
