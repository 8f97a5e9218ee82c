//! Session-oriented network interface for the ranking study.
//!
//! Clients create a session, start trials, receive the precomputed frames of
//! each trial (pushed over a WebSocket on a 10 Hz ticker, or fetched as a
//! batch), and submit rankings that the server scores.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::*;
pub use server::{bind_and_serve, router, serve, ServerConfig};
pub use session::{ServiceError, SessionManager, SessionPhase, StudyContext, StudySettings};
