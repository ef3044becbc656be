// SPDX-License-Identifier: Apache-2.0

//! Core data model and algorithms for turning ROS 2 launch logs into
//! categorized, budgeted evidence for language-model interrogation.
//!
//! Everything in this crate is pure: no IO, no clocks, no threads. It only
//! needs [`alloc`], so it builds for `no_std` targets. File handling, the
//! HTTP gateway and the command line live in the `xarlog` crate.
//!
//! The pipeline, in order:
//!
//! 1. [`log`] parses raw launch output into [`log::LogRecord`]s.
//! 2. [`classify`] tags each record with a [`classify::LogCategory`] and
//!    groups runs into [`classify::Segment`]s.
//! 3. [`extract`] reassembles PDDL text dumped by the executor node, and
//!    [`pddl`] parses it, validates plans and searches for reference plans.
//! 4. [`chunk`] packs segments into token-budgeted [`chunk::Chunk`]s.
//! 5. [`interrogate`] binds a catalog question and a chunk into a prompt.
//! 6. [`grounding`] flags answer terms absent from the evidence, and
//!    [`assessment`] stores the human verdicts.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod assessment;
pub mod chunk;
pub mod classify;
pub mod extract;
pub mod grounding;
pub mod interrogate;
pub mod log;
pub mod pddl;
