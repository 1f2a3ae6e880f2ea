//! A2L server: per-connection sessions and a shared render worker pool.
//!
//! Each connection owns at most one session, opened by `HELLO`. Files and
//! jobs belong to that session and disappear with it. Control frames on a
//! connection are handled one at a time; jobs run on the worker pool and
//! report progress through their [`JobHandle`].
//!
//! | request | reply |
//! |---|---|
//! | `HELLO\|-\|client` | `WELCOME\|sid` |
//! | `FILE\|sid\|name\|sha256\|size` + blob | `FILEOK\|sid\|name\|sha256` |
//! | `EXEC\|sid\|job\|roc\|image[\|segmentation]` | `STATUS\|sid\|job\|PENDING\|0` |
//! | `STATUS\|sid\|job` | `STATUS\|sid\|job\|state\|progress[\|code\|message]` |
//! | `RESULT\|sid\|job[\|image\|script]` | `RESULT\|sid\|job\|file\|sha256\|size` + blob |
//! | `BYE\|sid` | `BYE\|sid`, then the server closes the connection |
//!
//! Failures are answered with `ERR|sid|CODE|message`, or
//! `ERR|sid|EXEC|subcode|message` for a failed job.

use std::collections::HashMap;
use std::io::{self, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, Receiver, Sender};

use crate::render::{apply_roc_with, png_dimensions, read_png, read_segmentation_png, write_png, RenderError};
use crate::roc::{parse_roc, ToolCatalog};

use super::frame::{decode_frame, Frame, SessionId, Verb};
use super::job::{ExecErrorCode, JobHandle, JobOutput, JobStatus};
use super::script::translate_roc_to_script;
use super::transport::{read_blob, read_frame_line, sha256_hex, write_blob, write_frame, Endpoint, WireError};

/// Protocol error codes carried by `ERR` frames.
pub mod codes {
    pub const NOSESSION: &str = "NOSESSION";
    pub const PROTO: &str = "PROTO";
    pub const DIGEST: &str = "DIGEST";
    pub const SIZE: &str = "SIZE";
    pub const IO: &str = "IO";
    pub const UNVERIFIED: &str = "UNVERIFIED";
    pub const DUPJOB: &str = "DUPJOB";
    pub const NOJOB: &str = "NOJOB";
    pub const NOTREADY: &str = "NOTREADY";
    pub const EXEC: &str = "EXEC";
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerConfig {
    pub workers: usize,
    /// Wall-clock budget per job, measured from the moment it starts running.
    pub timeout: Duration,
    /// Upper bound on the estimated working set of one render, in bytes.
    pub memory_cap: u64,
    /// Largest accepted upload, in bytes.
    pub max_file_size: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            workers: 4,
            timeout: Duration::from_secs(30),
            memory_cap: 1 << 30,
            max_file_size: 256 << 20,
        }
    }
}

/// Estimated peak bytes held while rendering a `width × height` image.
pub fn render_footprint(width: usize, height: usize) -> u64 {
    // Source, working and adjusted RGB f32 buffers plus one f32 mask.
    (width as u64) * (height as u64) * (3 * 4 * 3 + 4)
}

struct Task {
    job: Arc<JobHandle>,
    roc: Arc<Vec<u8>>,
    image: Arc<Vec<u8>>,
    segmentation: Option<Arc<Vec<u8>>>,
}

#[derive(Default)]
struct Outstanding {
    count: Mutex<usize>,
    idle: Condvar,
}

impl Outstanding {
    fn add(&self) {
        *self.count.lock().expect("counter poisoned") += 1;
    }

    fn done(&self) {
        let mut n = self.count.lock().expect("counter poisoned");
        *n -= 1;
        if *n == 0 {
            self.idle.notify_all();
        }
    }
}

struct Shared {
    catalog: Arc<ToolCatalog>,
    config: ServerConfig,
    next_session: AtomicU64,
    tasks: Sender<Task>,
    outstanding: Arc<Outstanding>,
}

/// A cheaply cloneable server handle.
#[derive(Clone)]
pub struct Server {
    shared: Arc<Shared>,
}

#[derive(Debug, Clone)]
struct StoredFile {
    bytes: Arc<Vec<u8>>,
}

struct Session {
    id: SessionId,
    #[allow(dead_code)]
    client_id: String,
    files: HashMap<String, StoredFile>,
    jobs: HashMap<String, Arc<JobHandle>>,
}

impl Server {
    pub fn new(catalog: ToolCatalog, config: ServerConfig) -> Self {
        let (tx, rx) = unbounded::<Task>();
        let catalog = Arc::new(catalog);
        let outstanding = Arc::new(Outstanding::default());
        for i in 0..config.workers.max(1) {
            let rx: Receiver<Task> = rx.clone();
            let catalog = Arc::clone(&catalog);
            let outstanding = Arc::clone(&outstanding);
            let config = config.clone();
            thread::Builder::new()
                .name(format!("a2l-worker-{i}"))
                .spawn(move || {
                    for task in rx {
                        run_task(&task, &catalog, &config);
                        outstanding.done();
                    }
                })
                .expect("spawn worker thread");
        }
        Self {
            shared: Arc::new(Shared {
                catalog,
                config,
                next_session: AtomicU64::new(1),
                tasks: tx,
                outstanding,
            }),
        }
    }

    pub fn catalog(&self) -> &ToolCatalog {
        &self.shared.catalog
    }

    pub fn config(&self) -> &ServerConfig {
        &self.shared.config
    }

    /// Blocks until no accepted job is pending or running.
    pub fn wait_idle(&self) {
        let o = &self.shared.outstanding;
        let mut n = o.count.lock().expect("counter poisoned");
        while *n > 0 {
            n = o.idle.wait(n).expect("counter poisoned");
        }
    }

    fn fresh_session(&self) -> SessionId {
        let n = self.shared.next_session.fetch_add(1, Ordering::Relaxed);
        SessionId::new(format!("s{n:08x}")).expect("generated session ids are valid")
    }

    /// Serves one connection until `BYE` or end of stream.
    pub fn handle<R: Read, W: Write>(&self, reader: R, mut writer: W) -> Result<(), WireError> {
        let mut reader = BufReader::new(reader);
        let mut session: Option<Session> = None;
        loop {
            let line = match read_frame_line(&mut reader) {
                Ok(Some(line)) => line,
                Ok(None) | Err(WireError::Closed) => return Ok(()),
                Err(WireError::FrameTooLong) => {
                    let sid = session.as_ref().map(|s| &s.id);
                    write_frame(&mut writer, &err(sid, codes::PROTO, "frame too long"))?;
                    return Ok(());
                }
                Err(e) => return Err(e),
            };
            let sid = session.as_ref().map(|s| s.id.clone());
            let frame = match decode_frame(&line) {
                Ok(f) => f,
                Err(e) => {
                    if line.starts_with(b"A2L|1|FILE|") {
                        let _ = read_blob(&mut reader, self.shared.config.max_file_size);
                    }
                    write_frame(&mut writer, &err(sid.as_ref(), codes::PROTO, &e.to_string()))?;
                    continue;
                }
            };
            // Drain the upload before replying to anything.
            let upload = if frame.verb == Verb::File {
                match read_blob(&mut reader, self.shared.config.max_file_size) {
                    Ok(bytes) => Some(Ok(bytes)),
                    Err(WireError::BlobTooLarge { len, max }) => {
                        io::copy(&mut (&mut reader).take(len), &mut io::sink())?;
                        Some(Err(err(sid.as_ref(), codes::SIZE, &format!("{len} bytes exceeds the {max}-byte limit"))))
                    }
                    Err(WireError::Io(e)) => {
                        let _ = write_frame(&mut writer, &err(sid.as_ref(), codes::IO, &e.to_string()));
                        return Ok(());
                    }
                    Err(e) => return Err(e),
                }
            } else {
                None
            };

            let Some(s) = session.as_mut() else {
                let reply = match frame.verb {
                    Verb::Hello => match self.open(&frame) {
                        Ok(new) => {
                            let reply = Frame::with::<String>(Verb::Welcome, Some(&new.id), []);
                            session = Some(new);
                            reply
                        }
                        Err(reply) => reply,
                    },
                    _ => err(None, codes::NOSESSION, "handshake required"),
                };
                write_frame(&mut writer, &reply)?;
                continue;
            };

            if frame.verb == Verb::Hello {
                write_frame(&mut writer, &err(Some(&s.id), codes::PROTO, "session already open"))?;
                continue;
            }
            if frame.session.as_ref() != Some(&s.id) {
                write_frame(&mut writer, &err(Some(&s.id), codes::NOSESSION, "unknown session"))?;
                continue;
            }
            match frame.verb {
                Verb::File => {
                    let reply = match upload.expect("FILE frames carry an upload") {
                        Ok(bytes) => register_file(s, &frame, bytes),
                        Err(reply) => reply,
                    };
                    write_frame(&mut writer, &reply)?;
                }
                Verb::Exec => {
                    let reply = self.exec(s, &frame);
                    write_frame(&mut writer, &reply)?;
                }
                Verb::Status => write_frame(&mut writer, &status(s, &frame))?,
                Verb::Result => result(s, &frame, &mut writer)?,
                Verb::Bye => {
                    write_frame(&mut writer, &Frame::with::<String>(Verb::Bye, Some(&s.id), []))?;
                    return Ok(());
                }
                Verb::Hello | Verb::Welcome | Verb::FileOk | Verb::Err => {
                    let msg = format!("{} is not a request", frame.verb);
                    write_frame(&mut writer, &err(Some(&s.id), codes::PROTO, &msg))?;
                }
            }
        }
    }

    fn open(&self, frame: &Frame) -> Result<Session, Frame> {
        if frame.session.is_some() {
            return Err(err(None, codes::PROTO, "HELLO must not carry a session"));
        }
        let client_id = match frame.fields.as_slice() {
            [id] if !id.is_empty() => id.clone(),
            _ => return Err(err(None, codes::PROTO, "HELLO takes exactly one non-empty client id")),
        };
        Ok(Session {
            id: self.fresh_session(),
            client_id,
            files: HashMap::new(),
            jobs: HashMap::new(),
        })
    }

    fn exec(&self, s: &mut Session, frame: &Frame) -> Frame {
        let (job_id, roc, image, seg) = match frame.fields.as_slice() {
            [j, r, i] => (j, r, i, None),
            [j, r, i, g] => (j, r, i, Some(g)),
            _ => return err(Some(&s.id), codes::PROTO, "EXEC takes job, roc, image[, segmentation]"),
        };
        if job_id.is_empty() {
            return err(Some(&s.id), codes::PROTO, "empty job id");
        }
        let mut inputs = Vec::with_capacity(3);
        for name in [Some(roc), Some(image), seg].into_iter().flatten() {
            match s.files.get(name) {
                Some(f) => inputs.push(Arc::clone(&f.bytes)),
                None => return err(Some(&s.id), codes::UNVERIFIED, &format!("file `{name}` is not verified")),
            }
        }
        if s.jobs.contains_key(job_id) {
            return err(Some(&s.id), codes::DUPJOB, &format!("job `{job_id}` already exists"));
        }
        let job = JobHandle::new(job_id.clone());
        let mut inputs = inputs.into_iter();
        let task = Task {
            job: Arc::clone(&job),
            roc: inputs.next().expect("roc input"),
            image: inputs.next().expect("image input"),
            segmentation: inputs.next(),
        };
        self.shared.outstanding.add();
        if self.shared.tasks.send(task).is_err() {
            self.shared.outstanding.done();
            return exec_err(&s.id, ExecErrorCode::Resource, "worker pool unavailable");
        }
        s.jobs.insert(job_id.clone(), job);
        Frame::with(Verb::Status, Some(&s.id), [job_id.as_str(), JobStatus::Pending.as_str(), "0"])
    }

    /// Handles connections in the calling thread's loop, one thread each.
    pub fn serve_tcp(&self, listener: TcpListener) -> io::Result<()> {
        for stream in listener.incoming() {
            let stream = stream?;
            let server = self.clone();
            thread::spawn(move || {
                let _ = server.handle_tcp(stream);
            });
        }
        Ok(())
    }

    pub fn handle_tcp(&self, stream: TcpStream) -> Result<(), WireError> {
        stream.set_nodelay(true)?;
        let reader = stream.try_clone()?;
        self.handle(reader, stream)
    }

    /// Binds a listener and serves it on a background thread, returning the
    /// bound address.
    pub fn spawn_tcp(&self, addr: impl ToSocketAddrs) -> io::Result<std::net::SocketAddr> {
        let listener = TcpListener::bind(addr)?;
        let local = listener.local_addr()?;
        let server = self.clone();
        thread::spawn(move || {
            let _ = server.serve_tcp(listener);
        });
        Ok(local)
    }

    /// Serves an in-memory endpoint on a background thread.
    pub fn spawn_endpoint(&self, endpoint: Endpoint) -> thread::JoinHandle<Result<(), WireError>> {
        let server = self.clone();
        thread::spawn(move || server.handle(endpoint.reader, endpoint.writer))
    }
}

fn err(sid: Option<&SessionId>, code: &str, message: &str) -> Frame {
    Frame::with(Verb::Err, sid, [code, message])
}

fn exec_err(sid: &SessionId, code: ExecErrorCode, message: &str) -> Frame {
    Frame::with(Verb::Err, Some(sid), [codes::EXEC, code.as_str(), message])
}

fn is_sha256_hex(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

fn register_file(s: &mut Session, frame: &Frame, bytes: Vec<u8>) -> Frame {
    let [name, digest, size] = frame.fields.as_slice() else {
        return err(Some(&s.id), codes::PROTO, "FILE takes name, sha256, size");
    };
    if name.is_empty() {
        return err(Some(&s.id), codes::PROTO, "empty file name");
    }
    let Ok(size) = size.parse::<u64>() else {
        return err(Some(&s.id), codes::PROTO, &format!("invalid size `{size}`"));
    };
    if size != bytes.len() as u64 {
        return err(
            Some(&s.id),
            codes::SIZE,
            &format!("`{name}` declared {size} bytes, received {}", bytes.len()),
        );
    }
    let digest = digest.to_ascii_lowercase();
    if !is_sha256_hex(&digest) {
        return err(Some(&s.id), codes::DIGEST, &format!("`{digest}` is not a SHA-256 hex digest"));
    }
    let actual = sha256_hex(&bytes);
    if actual != digest {
        return err(Some(&s.id), codes::DIGEST, &format!("`{name}` digest mismatch"));
    }
    s.files.insert(
        name.clone(),
        StoredFile {
            bytes: Arc::new(bytes),
        },
    );
    Frame::with(Verb::FileOk, Some(&s.id), [name.as_str(), actual.as_str()])
}

fn job_of<'a>(s: &'a Session, frame: &Frame) -> Result<(&'a String, &'a Arc<JobHandle>), Frame> {
    let Some(job_id) = frame.field(0) else {
        return Err(err(Some(&s.id), codes::PROTO, "missing job id"));
    };
    s.jobs
        .get_key_value(job_id)
        .ok_or_else(|| err(Some(&s.id), codes::NOJOB, &format!("no job `{job_id}`")))
}

fn status(s: &Session, frame: &Frame) -> Frame {
    if frame.fields.len() != 1 {
        return err(Some(&s.id), codes::PROTO, "STATUS takes a job id");
    }
    let (job_id, job) = match job_of(s, frame) {
        Ok(j) => j,
        Err(reply) => return reply,
    };
    let st = job.snapshot();
    let mut fields = vec![job_id.clone(), st.status.as_str().to_owned(), st.progress.to_string()];
    if let Some((code, message)) = st.error {
        fields.push(code.as_str().to_owned());
        fields.push(message);
    }
    Frame::new(Verb::Status, Some(s.id.clone()), fields)
}

fn result<W: Write>(s: &Session, frame: &Frame, writer: &mut W) -> Result<(), WireError> {
    let selector = match frame.fields.as_slice() {
        [_] => "image",
        [_, sel] if sel == "image" || sel == "script" => sel.as_str(),
        _ => return write_frame(writer, &err(Some(&s.id), codes::PROTO, "RESULT takes job[, image|script]")),
    };
    let (job_id, job) = match job_of(s, frame) {
        Ok(j) => j,
        Err(reply) => return write_frame(writer, &reply),
    };
    let st = job.snapshot();
    let (name, digest, bytes): (String, String, Arc<Vec<u8>>) = match (selector, &st.status) {
        ("script", _) if st.script.is_some() => {
            let script = st.script.as_ref().expect("checked");
            let bytes = Arc::new(script.as_bytes().to_vec());
            (format!("{job_id}.lua"), sha256_hex(&bytes), bytes)
        }
        (_, JobStatus::Error) => {
            let (code, message) = st.error.clone().expect("failed jobs carry an error");
            return write_frame(writer, &exec_err(&s.id, code, &message));
        }
        ("image", JobStatus::Done) => {
            let out = st.result.as_ref().expect("finished jobs carry a result");
            (format!("{job_id}.png"), out.digest.clone(), Arc::clone(&out.png))
        }
        _ => {
            let msg = format!("job `{job_id}` is {}", st.status);
            return write_frame(writer, &err(Some(&s.id), codes::NOTREADY, &msg));
        }
    };
    let size = bytes.len().to_string();
    let head = Frame::with(
        Verb::Result,
        Some(&s.id),
        [job_id.as_str(), name.as_str(), digest.as_str(), size.as_str()],
    );
    write_frame(writer, &head)?;
    write_blob(writer, &bytes)
}

fn run_task(task: &Task, catalog: &ToolCatalog, config: &ServerConfig) {
    if !task.job.start() {
        return;
    }
    let outcome = catch_unwind(AssertUnwindSafe(|| execute(task, catalog, config)));
    match outcome {
        Ok(Ok(output)) => task.job.finish(output),
        Ok(Err((code, message))) => task.job.fail(code, message),
        Err(_) => task.job.fail(ExecErrorCode::Render, "renderer panicked".into()),
    }
}

/// Stage boundaries on the 0–100 progress scale.
const PARSED: u8 = 20;
const TRANSLATED: u8 = 30;
const RENDERED: u8 = 90;
const ENCODED: u8 = 95;

fn execute(task: &Task, catalog: &ToolCatalog, config: &ServerConfig) -> Result<JobOutput, (ExecErrorCode, String)> {
    let deadline = Instant::now() + config.timeout;
    let timed_out = || (ExecErrorCode::Timeout, format!("exceeded {:?}", config.timeout));
    let job = &task.job;

    let text = std::str::from_utf8(&task.roc).map_err(|_| (ExecErrorCode::Parse, "ROC file is not UTF-8".to_owned()))?;
    let doc = parse_roc(text, catalog).map_err(|e| (ExecErrorCode::Parse, format!("{}: {e}", e.code())))?;
    job.advance(PARSED);

    let script = translate_roc_to_script(&doc, catalog).map_err(|e| (ExecErrorCode::Translate, e.to_string()))?;
    job.set_script(Arc::new(script));
    job.advance(TRANSLATED);

    let (w, h) = png_dimensions(&task.image).map_err(|e| (ExecErrorCode::Image, e.to_string()))?;
    let need = render_footprint(w, h);
    if need > config.memory_cap {
        return Err((
            ExecErrorCode::Resource,
            format!("{w}x{h} image needs ~{need} bytes, cap is {}", config.memory_cap),
        ));
    }
    let (img, depth) = read_png(&task.image).map_err(|e| (ExecErrorCode::Image, e.to_string()))?;
    let seg = task
        .segmentation
        .as_ref()
        .map(|bytes| read_segmentation_png(bytes))
        .transpose()
        .map_err(|e| (ExecErrorCode::Image, e.to_string()))?;
    if Instant::now() > deadline {
        return Err(timed_out());
    }

    let span = RENDERED - TRANSLATED;
    let edit = apply_roc_with(&img, &doc, catalog, seg.as_ref(), &mut |done, total| {
        if Instant::now() > deadline {
            return Err(RenderError::Cancelled("timeout".into()));
        }
        if let Some(step) = (usize::from(span) * done).checked_div(total) {
            job.advance(TRANSLATED + step as u8);
        }
        Ok(())
    })
    .map_err(|e| match e {
        RenderError::Cancelled(_) => timed_out(),
        other => (ExecErrorCode::Render, other.to_string()),
    })?;
    job.advance(RENDERED);

    let png = write_png(&edit, depth).map_err(|e| (ExecErrorCode::Encode, e.to_string()))?;
    job.advance(ENCODED);
    let digest = sha256_hex(&png);
    Ok(JobOutput {
        png: Arc::new(png),
        digest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn footprint_scales_with_area() {
        assert_eq!(render_footprint(2, 3), 6 * 40);
    }

    #[test]
    fn digest_shape() {
        assert!(is_sha256_hex(&sha256_hex(b"")));
        assert!(!is_sha256_hex("abc"));
    }
}
