//! Interactive play: the v1 message protocol and the session loop that runs
//! the same pipeline as a headless run, one client message per tick.

pub mod protocol;
pub mod session;

pub use protocol::{
    ClientCommand, ClientMessage, CrowdPose, ProtocolError, QuestInfo, ServerBody, ServerMessage, VisitorPose,
    PROTOCOL_VERSION,
};
pub use session::{
    default_run_dir, serve_session, ChannelTransport, ScriptedTransport, Session, SessionError, SessionOptions,
    SessionSummary, Transport, TransportClosed, RUN_DIR_ENV,
};
