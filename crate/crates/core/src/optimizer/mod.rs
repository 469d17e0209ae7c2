//! Alternating optimization of offloading, receivers and resources.

pub mod algorithm;
pub mod beamforming;
pub mod bnb;
pub mod offload;
pub mod power;
pub mod resource;

pub use offload::{
    build_options, map_to_binary, OptionCompute, repair_capacity, select_offloading, selection_cost, solve_offload_relaxed, OffloadProblem, OptionCost,
    RelaxedDecision, Selection,
};
pub use power::{gue_power_closed_form, sue_power_closed_form, power_fixed_point, required_power};
pub use resource::{aux_to_power, compute_only, joint_resource_step, NodeProgram, power_to_aux, solve_node, sue_power_and_compute, FlexAlloc, FlexUser};
pub use beamforming::{node_parts, sca_beamforming, sca_link, zero_forcing_receiver, BeamDiagnostics, LinkSca, ReceiverKind, ScaSettings, ScaState};
pub use bnb::{bnb_offload, exhaustive_offload, BnbResult};
pub use algorithm::{apply_selection, initial_plan, run_algorithm1, run_from, AoSettings, Freeze, IterationRecord, IterationTrace, StepStatus};
