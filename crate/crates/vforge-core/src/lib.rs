//! Core library for the `vforge` software-diversity toolchain.
//!
//! Everything here is pure computation over the VR32 toy ISA: parsing and
//! printing assembly, deterministic interpretation, semantics-preserving
//! transformation passes, bigram-based variant similarity, hardened-bundle
//! construction with compare/vote glue, and a net-level trace model with
//! injectable Trojan triggers and payloads.
//!
//! The crate is `no_std`-compatible (with `alloc`); all IO, file formats and
//! the command-line front end live in the companion `vforge` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod harness;
pub mod isa;
pub mod passes;
pub mod sample;
pub mod similarity;
pub mod trojan;
