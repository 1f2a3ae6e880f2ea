//! Agent-to-Lightroom (A2L) protocol: frame codec, script translation, job
//! model, server, client and transports.
//!
//! A session runs through five stages: handshake (`HELLO`/`WELCOME`), file
//! verification (`FILE`/`FILEOK`), sandboxed execution (`EXEC`), asynchronous
//! processing (`STATUS`) and result return (`RESULT`), closed by `BYE`.

pub mod client;
pub mod frame;
pub mod job;
pub mod script;
pub mod server;
pub mod transport;

pub use client::{Client, ClientError, Download, JobReport};
pub use frame::{decode_frame, encode_frame, Frame, FrameError, SessionId, Verb};
pub use job::{ExecErrorCode, JobHandle, JobState, JobStatus};
pub use script::{translate_roc_to_script, ScriptError};
pub use server::{Server, ServerConfig};
pub use transport::{duplex, pipe, sha256_hex, Endpoint};
