//! Scripted A2L sessions shared by the protocol tests.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use retouch_core::a2l::transport::{PipeReader, PipeWriter};
use retouch_core::a2l::{duplex, sha256_hex, Client, JobStatus, Server, ServerConfig};
use retouch_core::render::{apply_roc, read_png, write_png, BitDepth};
use retouch_core::roc::{serialize_roc, RocDocument, ToolCatalog, ToolInvocation};

pub type PipeClient = Client<PipeReader, PipeWriter>;

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/golden")
}

pub fn server(config: ServerConfig) -> Server {
    Server::new(ToolCatalog::default_catalog(), config)
}

pub fn connect(server: &Server) -> PipeClient {
    let (a, b) = duplex();
    server.spawn_endpoint(b);
    Client::from_endpoint(a)
}

/// The happy-path session on the golden fixture, as a recorded transcript.
pub fn golden_session() -> String {
    let dir = golden_dir();
    let srv = server(ServerConfig::default());
    let mut c = connect(&srv).record();
    c.hello("golden").unwrap();
    c.upload("edit.roc.json", &fs::read(dir.join("edit.roc.json")).unwrap()).unwrap();
    c.upload("input.png", &fs::read(dir.join("input.png")).unwrap()).unwrap();
    let queued = c.exec("job-1", "edit.roc.json", "input.png", None).unwrap();
    assert_eq!((queued.status, queued.progress), (JobStatus::Pending, 0));
    srv.wait_idle();
    let done = c.status("job-1").unwrap();
    assert_eq!((done.status, done.progress), (JobStatus::Done, 100));
    c.result("job-1").unwrap();
    c.script("job-1").unwrap();
    c.bye().unwrap();
    let mut text = c.transcript().unwrap().join("\n");
    text.push('\n');
    text
}

pub fn load_edit(ev: f64) -> RocDocument {
    RocDocument::new(vec![
        ToolInvocation::new("Exposure").with_param("value", ev),
        ToolInvocation::new("Saturation").with_param("value", 15.0),
    ])
}

pub struct JobOutcome {
    pub index: usize,
    pub status: JobStatus,
    pub digest: Option<String>,
    pub direct: String,
}

/// Runs `clients × per_client` jobs concurrently, each on its own exposure,
/// and pairs every RESULT digest with the digest of a direct render.
pub fn concurrent_jobs(clients: usize, per_client: usize, workers: usize) -> Vec<JobOutcome> {
    let catalog = ToolCatalog::default_catalog();
    let srv = server(ServerConfig {
        workers,
        ..ServerConfig::default()
    });
    let src_png = write_png(&super::gradient(24, 16), BitDepth::Eight).unwrap();
    let src = read_png(&src_png).unwrap().0;
    let exposure = move |i: usize| i as f64 / 50.0 - 1.0;
    let handles: Vec<_> = (0..clients)
        .map(|k| {
            let mut c = connect(&srv);
            let png = src_png.clone();
            thread::spawn(move || {
                c.hello(&format!("load-{k}")).unwrap();
                c.upload("src.png", &png).unwrap();
                for j in 0..per_client {
                    let name = format!("roc-{j}");
                    c.upload(&name, serialize_roc(&load_edit(exposure(k * per_client + j))).as_bytes())
                        .unwrap();
                    c.exec(&format!("job-{j}"), &name, "src.png", None).unwrap();
                }
                let mut out = Vec::new();
                for j in 0..per_client {
                    let job = format!("job-{j}");
                    let r = c.wait(&job, Duration::from_millis(2), Duration::from_secs(120)).unwrap();
                    let digest = (r.status == JobStatus::Done).then(|| c.result(&job).unwrap().digest);
                    out.push((k * per_client + j, r.status, digest));
                }
                c.bye().unwrap();
                out
            })
        })
        .collect();
    let mut outcomes = Vec::new();
    for h in handles {
        for (index, status, digest) in h.join().unwrap() {
            let rendered = apply_roc(&src, &load_edit(exposure(index)), &catalog, None).unwrap();
            let direct = sha256_hex(&write_png(&rendered, BitDepth::Eight).unwrap());
            outcomes.push(JobOutcome {
                index,
                status,
                digest,
                direct,
            });
        }
    }
    outcomes
}
