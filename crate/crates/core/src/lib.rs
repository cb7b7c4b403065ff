//! Link-level simulation and analysis of a network-centric countermeasure
//! against jammers that also sense the spectrum.
//!
//! Alice's jammed bits reach Bob through a helper band: the helper spends most
//! of its energy on its own PSK symbols, Alice pours the rest as on-off keying,
//! and the helper re-embeds its decision on Alice's bit in the next half
//! frame. Pairs of mimic users reproduce the helper band's statistics so an
//! adversary watching every band cannot single it out.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod analysis;
pub mod decoders;
pub mod error;
pub mod harness;
pub mod keystream;
pub mod network;
pub mod optimizer;
pub mod relay;
pub mod sampling;
pub mod special;
pub mod waveforms;

pub use adversary::{simulate_attack, AttackReport, CpdfModel, EntropyReport};
pub use analysis::bound::{bound_terms, pe_nh_th, pe_th_components, pe_th_total, BoundTerms};
pub use analysis::montecarlo::{simulate_pe, ErrorStats, EventWeighting, PeOptions};
pub use decoders::CbDecision;
pub use error::{ConfigErrors, NcmsError, Result};
pub use keystream::{derive_bits, key_rate_overhead, KeyMaterial};
pub use network::{snr_to_noise_power, NetworkConfig};
pub use optimizer::{min_even_lc, minimize_alpha_bound, solve_problem1, solve_problem2, OptimizationSolution};
pub use relay::CrossoverProfile;
pub use sampling::{Domain, SimRng, Substreams};
pub use waveforms::{BandKind, Constellation, FrameObservation, PskSymbol};
