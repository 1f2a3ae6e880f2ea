//! Job lifecycle: `PENDING → RUNNING → {DONE, ERROR}` with monotone progress.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Condvar, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JobStatus {
    Pending,
    Running,
    Done,
    Error,
}

impl JobStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            JobStatus::Pending => "PENDING",
            JobStatus::Running => "RUNNING",
            JobStatus::Done => "DONE",
            JobStatus::Error => "ERROR",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Error)
    }

    fn rank(self) -> u8 {
        match self {
            JobStatus::Pending => 0,
            JobStatus::Running => 1,
            JobStatus::Done | JobStatus::Error => 2,
        }
    }

    /// Whether `self → next` is an allowed transition.
    pub fn can_become(self, next: JobStatus) -> bool {
        matches!(
            (self, next),
            (JobStatus::Pending, JobStatus::Running)
                | (JobStatus::Running, JobStatus::Done)
                | (JobStatus::Running, JobStatus::Error)
        )
    }

    /// True when an observer may see `next` after `self`.
    pub fn follows(self, next: JobStatus) -> bool {
        self == next || (self.rank() < next.rank() && !self.is_terminal())
    }
}

impl fmt::Display for JobStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for JobStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "PENDING" => JobStatus::Pending,
            "RUNNING" => JobStatus::Running,
            "DONE" => JobStatus::Done,
            "ERROR" => JobStatus::Error,
            _ => return Err(format!("unknown job state `{s}`")),
        })
    }
}

/// Failure classes reported under `ERR|EXEC`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecErrorCode {
    Parse,
    Translate,
    Image,
    Resource,
    Timeout,
    Render,
    Encode,
}

impl ExecErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ExecErrorCode::Parse => "PARSE",
            ExecErrorCode::Translate => "TRANSLATE",
            ExecErrorCode::Image => "IMAGE",
            ExecErrorCode::Resource => "RESOURCE",
            ExecErrorCode::Timeout => "TIMEOUT",
            ExecErrorCode::Render => "RENDER",
            ExecErrorCode::Encode => "ENCODE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobOutput {
    pub png: Arc<Vec<u8>>,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobState {
    pub job_id: String,
    pub status: JobStatus,
    pub progress: u8,
    /// Translated script, retained once translation succeeds.
    pub script: Option<Arc<String>>,
    pub result: Option<JobOutput>,
    pub error: Option<(ExecErrorCode, String)>,
}

impl JobState {
    pub fn new(job_id: impl Into<String>) -> Self {
        Self {
            job_id: job_id.into(),
            status: JobStatus::Pending,
            progress: 0,
            script: None,
            result: None,
            error: None,
        }
    }
}

/// Shared, synchronized job record.
#[derive(Debug)]
pub struct JobHandle {
    state: Mutex<JobState>,
    changed: Condvar,
}

impl JobHandle {
    pub fn new(job_id: impl Into<String>) -> Arc<Self> {
        Arc::new(Self {
            state: Mutex::new(JobState::new(job_id)),
            changed: Condvar::new(),
        })
    }

    pub fn snapshot(&self) -> JobState {
        self.state.lock().expect("job state poisoned").clone()
    }

    fn update(&self, f: impl FnOnce(&mut JobState)) {
        let mut s = self.state.lock().expect("job state poisoned");
        f(&mut s);
        drop(s);
        self.changed.notify_all();
    }

    pub(crate) fn start(&self) -> bool {
        let mut started = false;
        self.update(|s| {
            if s.status.can_become(JobStatus::Running) {
                s.status = JobStatus::Running;
                started = true;
            }
        });
        started
    }

    /// Raises progress; lower values are ignored.
    pub(crate) fn advance(&self, progress: u8) {
        self.update(|s| {
            if s.status == JobStatus::Running {
                s.progress = s.progress.max(progress.min(99));
            }
        });
    }

    pub(crate) fn set_script(&self, script: Arc<String>) {
        self.update(|s| s.script = Some(script));
    }

    pub(crate) fn finish(&self, output: JobOutput) {
        self.update(|s| {
            if s.status.can_become(JobStatus::Done) {
                s.status = JobStatus::Done;
                s.progress = 100;
                s.result = Some(output);
            }
        });
    }

    pub(crate) fn fail(&self, code: ExecErrorCode, message: String) {
        self.update(|s| {
            if s.status.can_become(JobStatus::Error) {
                s.status = JobStatus::Error;
                s.error = Some((code, message));
            }
        });
    }

    /// Blocks until the job is terminal.
    pub fn wait(&self) -> JobState {
        let mut s = self.state.lock().expect("job state poisoned");
        while !s.status.is_terminal() {
            s = self.changed.wait(s).expect("job state poisoned");
        }
        s.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transitions() {
        use JobStatus::*;
        assert!(Pending.can_become(Running));
        assert!(Running.can_become(Done));
        assert!(Running.can_become(Error));
        assert!(!Done.can_become(Running));
        assert!(!Error.can_become(Done));
        assert!(!Pending.can_become(Done));
        assert!(!Pending.can_become(Error));
        assert!(Pending.follows(Done));
        assert!(!Done.follows(Running));
        assert!(!Done.follows(Error));
    }

    #[test]
    fn handle_lifecycle() {
        let h = JobHandle::new("j");
        assert!(h.start());
        assert!(!h.start());
        h.advance(40);
        h.advance(20);
        assert_eq!(h.snapshot().progress, 40);
        h.finish(JobOutput {
            png: Arc::new(vec![1]),
            digest: "d".into(),
        });
        h.fail(ExecErrorCode::Render, "late".into());
        let s = h.wait();
        assert_eq!((s.status, s.progress), (JobStatus::Done, 100));
        assert!(s.error.is_none() && s.result.is_some());
    }
}
