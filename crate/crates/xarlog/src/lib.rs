// SPDX-License-Identifier: Apache-2.0

//! Std companion to `xarlog-core`: configuration, LLM gateway, transcript
//! storage and the `xarlog` command line.

pub mod cli;
pub mod config;
pub mod gateway;
pub mod transcript;

pub use cli::run;
