//! Blocking A2L client with optional transcript recording.

use std::io::{BufReader, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::frame::{encode_frame, Frame, SessionId, Verb};
use super::job::JobStatus;
use super::transport::{read_blob, read_frame, sha256_hex, write_blob, write_frame, Endpoint, PipeReader, PipeWriter, WireError};

/// Largest result blob the client accepts.
pub const MAX_DOWNLOAD: u64 = 1 << 32;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("server error {code}: {}", detail.join(": "))]
    Server { code: String, detail: Vec<String> },
    #[error("unexpected reply {0:?}")]
    Unexpected(Frame),
    #[error("no session; call hello first")]
    NoSession,
    #[error("downloaded content does not match its digest")]
    DigestMismatch,
    #[error("timed out waiting for job `{0}`")]
    WaitTimeout(String),
}

impl ClientError {
    /// The `ERR` code, when the server rejected the request.
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Server { code, .. } => Some(code),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobReport {
    pub job_id: String,
    pub status: JobStatus,
    pub progress: u8,
    pub error: Option<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Download {
    pub name: String,
    pub digest: String,
    pub bytes: Vec<u8>,
}

pub struct Client<R: Read, W: Write> {
    reader: BufReader<R>,
    writer: W,
    session: Option<SessionId>,
    transcript: Option<Vec<String>>,
}

impl Client<TcpStream, TcpStream> {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, ClientError> {
        let stream = TcpStream::connect(addr).map_err(WireError::from)?;
        stream.set_nodelay(true).map_err(WireError::from)?;
        let reader = stream.try_clone().map_err(WireError::from)?;
        Ok(Self::new(reader, stream))
    }
}

impl Client<PipeReader, PipeWriter> {
    pub fn from_endpoint(endpoint: Endpoint) -> Self {
        Self::new(endpoint.reader, endpoint.writer)
    }
}

fn blob_line(bytes: &[u8]) -> String {
    format!("<blob {} bytes sha256={}>", bytes.len(), sha256_hex(bytes))
}

impl<R: Read, W: Write> Client<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        Self {
            reader: BufReader::new(reader),
            writer,
            session: None,
            transcript: None,
        }
    }

    /// Starts recording every frame and blob exchanged, one line each,
    /// prefixed `C:` or `S:`.
    pub fn record(mut self) -> Self {
        self.transcript = Some(Vec::new());
        self
    }

    pub fn transcript(&self) -> Option<&[String]> {
        self.transcript.as_deref()
    }

    pub fn session(&self) -> Option<&SessionId> {
        self.session.as_ref()
    }

    fn log(&mut self, who: &str, line: String) {
        if let Some(t) = &mut self.transcript {
            t.push(format!("{who}: {line}"));
        }
    }

    fn log_frame(&mut self, who: &str, frame: &Frame) {
        if self.transcript.is_some() {
            let wire = encode_frame(frame);
            self.log(who, wire.trim_end_matches('\n').to_owned());
        }
    }

    pub fn send(&mut self, frame: &Frame) -> Result<(), ClientError> {
        self.log_frame("C", frame);
        write_frame(&mut self.writer, frame)?;
        Ok(())
    }

    pub fn send_blob(&mut self, bytes: &[u8]) -> Result<(), ClientError> {
        self.log("C", blob_line(bytes));
        write_blob(&mut self.writer, bytes)?;
        Ok(())
    }

    pub fn recv(&mut self) -> Result<Frame, ClientError> {
        let frame = read_frame(&mut self.reader)?.ok_or(WireError::Closed)?;
        self.log_frame("S", &frame);
        Ok(frame)
    }

    fn recv_blob(&mut self) -> Result<Vec<u8>, ClientError> {
        let bytes = read_blob(&mut self.reader, MAX_DOWNLOAD)?;
        self.log("S", blob_line(&bytes));
        Ok(bytes)
    }

    /// Receives a reply, turning `ERR` frames into [`ClientError::Server`].
    fn reply(&mut self, expected: Verb) -> Result<Frame, ClientError> {
        let frame = self.recv()?;
        match frame.verb {
            v if v == expected => Ok(frame),
            Verb::Err => {
                let mut fields = frame.fields.into_iter();
                Err(ClientError::Server {
                    code: fields.next().unwrap_or_default(),
                    detail: fields.collect(),
                })
            }
            _ => Err(ClientError::Unexpected(frame)),
        }
    }

    fn sid(&self) -> Result<SessionId, ClientError> {
        self.session.clone().ok_or(ClientError::NoSession)
    }

    pub fn hello(&mut self, client_id: &str) -> Result<SessionId, ClientError> {
        self.send(&Frame::with(Verb::Hello, None, [client_id]))?;
        let frame = self.reply(Verb::Welcome)?;
        let sid = frame.session.clone().ok_or(ClientError::Unexpected(frame))?;
        self.session = Some(sid.clone());
        Ok(sid)
    }

    /// Uploads `bytes` under `name` with its true digest and size.
    pub fn upload(&mut self, name: &str, bytes: &[u8]) -> Result<String, ClientError> {
        let digest = sha256_hex(bytes);
        self.upload_declared(name, &digest, bytes.len() as u64, bytes)?;
        Ok(digest)
    }

    /// Uploads `bytes` announcing an arbitrary digest and size.
    pub fn upload_declared(&mut self, name: &str, digest: &str, size: u64, bytes: &[u8]) -> Result<Frame, ClientError> {
        let sid = self.sid()?;
        let size = size.to_string();
        self.send(&Frame::with(Verb::File, Some(&sid), [name, digest, size.as_str()]))?;
        self.send_blob(bytes)?;
        self.reply(Verb::FileOk)
    }

    pub fn exec(&mut self, job: &str, roc: &str, image: &str, segmentation: Option<&str>) -> Result<JobReport, ClientError> {
        let sid = self.sid()?;
        let mut fields = vec![job, roc, image];
        fields.extend(segmentation);
        self.send(&Frame::with(Verb::Exec, Some(&sid), fields))?;
        let frame = self.reply(Verb::Status)?;
        parse_status(frame)
    }

    pub fn status(&mut self, job: &str) -> Result<JobReport, ClientError> {
        let sid = self.sid()?;
        self.send(&Frame::with(Verb::Status, Some(&sid), [job]))?;
        let frame = self.reply(Verb::Status)?;
        parse_status(frame)
    }

    /// Polls `STATUS` every `interval` until the job is terminal.
    pub fn wait(&mut self, job: &str, interval: Duration, limit: Duration) -> Result<JobReport, ClientError> {
        let start = Instant::now();
        loop {
            let report = self.status(job)?;
            if report.status.is_terminal() {
                return Ok(report);
            }
            if start.elapsed() > limit {
                return Err(ClientError::WaitTimeout(job.to_owned()));
            }
            thread::sleep(interval);
        }
    }

    fn download(&mut self, job: &str, selector: Option<&str>) -> Result<Download, ClientError> {
        let sid = self.sid()?;
        let mut fields = vec![job];
        fields.extend(selector);
        self.send(&Frame::with(Verb::Result, Some(&sid), fields))?;
        let frame = self.reply(Verb::Result)?;
        let [_, name, digest, size] = frame.fields.as_slice() else {
            return Err(ClientError::Unexpected(frame));
        };
        let (name, digest, size) = (name.clone(), digest.clone(), size.clone());
        let bytes = self.recv_blob()?;
        if size.parse::<usize>().ok() != Some(bytes.len()) || sha256_hex(&bytes) != digest {
            return Err(ClientError::DigestMismatch);
        }
        Ok(Download { name, digest, bytes })
    }

    /// Fetches the rendered PNG of a finished job.
    pub fn result(&mut self, job: &str) -> Result<Download, ClientError> {
        self.download(job, None)
    }

    /// Fetches the translated script of a job.
    pub fn script(&mut self, job: &str) -> Result<Download, ClientError> {
        self.download(job, Some("script"))
    }

    pub fn bye(&mut self) -> Result<(), ClientError> {
        let sid = self.sid()?;
        self.send(&Frame::with::<String>(Verb::Bye, Some(&sid), []))?;
        self.reply(Verb::Bye)?;
        self.session = None;
        Ok(())
    }
}

fn parse_status(frame: Frame) -> Result<JobReport, ClientError> {
    let f = &frame.fields;
    let parsed = (|| {
        let status: JobStatus = f.get(1)?.parse().ok()?;
        let progress: u8 = f.get(2)?.parse().ok()?;
        let error = match (f.get(3), f.get(4)) {
            (Some(c), Some(m)) => Some((c.clone(), m.clone())),
            _ => None,
        };
        Some(JobReport {
            job_id: f.first()?.clone(),
            status,
            progress,
            error,
        })
    })();
    parsed.ok_or(ClientError::Unexpected(frame))
}
