//! Audit sessions over `residua-core`: persistence, reports, the HTTP API and
//! the one-shot commands behind the `residua` binary.

pub mod commands;
pub mod http;
pub mod report;
pub mod session;
