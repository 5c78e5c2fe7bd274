//! Long-term result log and short-term session store.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use powerkit_core::session::SessionState;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::Value;

/// Seconds since the Unix epoch.
pub trait Clock: Send + Sync {
    fn now(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
    }
}

/// Clock driven by hand, for expiry tests.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(now: u64) -> Self {
        Self(AtomicU64::new(now))
    }

    pub fn set(&self, now: u64) {
        self.0.store(now, Ordering::SeqCst);
    }

    pub fn advance(&self, secs: u64) {
        self.0.fetch_add(secs, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

/// One line of the result log. `request` and `response` keep their original bytes.
#[derive(Debug, Serialize, Deserialize)]
pub struct StoredResult {
    pub id: String,
    pub timestamp: u64,
    pub endpoint: String,
    pub session_id: Option<String>,
    pub request: Box<RawValue>,
    pub response: Box<RawValue>,
}

pub const RESULTS_FILE: &str = "results.ndjson";

struct Job {
    timestamp: u64,
    endpoint: String,
    session_id: Option<String>,
    request: Box<RawValue>,
    response: Box<RawValue>,
    done: tokio::sync::oneshot::Sender<io::Result<String>>,
}

type Index = Arc<RwLock<HashMap<String, Arc<str>>>>;

/// Append-only newline-delimited log with an in-memory index. One writer
/// thread owns the file; readers only touch the index.
pub struct ResultStore {
    path: PathBuf,
    index: Index,
    jobs: mpsc::Sender<Job>,
}

fn id_number(id: &str) -> Option<u64> {
    id.strip_prefix("r-")?.parse().ok()
}

impl ResultStore {
    /// Opens or creates `dir/results.ndjson`. A torn final line left by a
    /// crash is cut off; any other unreadable line is an error.
    pub fn open(dir: &Path) -> io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(RESULTS_FILE);
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(&path)?;
        let mut text = String::new();
        file.read_to_string(&mut text)?;
        let mut index = HashMap::new();
        let mut next = 1;
        let mut offset = 0usize;
        for (i, line) in text.split_inclusive('\n').enumerate() {
            let Some(body) = line.strip_suffix('\n') else {
                file.set_len(offset as u64)?;
                file.seek(SeekFrom::End(0))?;
                break;
            };
            let record: StoredResult = serde_json::from_str(body).map_err(|e| {
                io::Error::new(io::ErrorKind::InvalidData, format!("{}: line {}: {e}", path.display(), i + 1))
            })?;
            next = next.max(id_number(&record.id).map_or(next, |n| n + 1));
            index.insert(record.id, Arc::<str>::from(body));
            offset += line.len();
        }
        let index: Index = Arc::new(RwLock::new(index));
        let (jobs, rx) = mpsc::channel();
        let writer_index = Arc::clone(&index);
        std::thread::Builder::new()
            .name("result-log".into())
            .spawn(move || write_loop(file, next, writer_index, rx))?;
        Ok(Self { path, index, jobs })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one record and returns its id once it is on disk.
    pub async fn append(
        &self,
        timestamp: u64,
        endpoint: &str,
        session_id: Option<&str>,
        request: &Value,
        response: &str,
    ) -> io::Result<String> {
        let invalid = |e: serde_json::Error| io::Error::new(io::ErrorKind::InvalidInput, e);
        let (done, wait) = tokio::sync::oneshot::channel();
        let job = Job {
            timestamp,
            endpoint: endpoint.to_owned(),
            session_id: session_id.map(str::to_owned),
            request: serde_json::value::to_raw_value(request).map_err(invalid)?,
            response: RawValue::from_string(response.to_owned()).map_err(invalid)?,
            done,
        };
        self.jobs.send(job).map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "result writer stopped"))?;
        wait.await.map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "result writer stopped"))?
    }

    /// The stored line for `id`, byte for byte.
    pub fn get(&self, id: &str) -> Option<Arc<str>> {
        self.index.read().expect("index lock").get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("index lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn write_loop(mut file: File, mut next: u64, index: Index, jobs: mpsc::Receiver<Job>) {
    for job in jobs {
        let id = format!("r-{next:08}");
        let record = StoredResult {
            id: id.clone(),
            timestamp: job.timestamp,
            endpoint: job.endpoint,
            session_id: job.session_id,
            request: job.request,
            response: job.response,
        };
        let mut line = serde_json::to_string(&record).expect("records serialize");
        line.push('\n');
        let written = file.write_all(line.as_bytes()).and_then(|()| file.sync_data());
        let outcome = written.map(|()| {
            next += 1;
            line.pop();
            index.write().expect("index lock").insert(id.clone(), Arc::from(line));
            id
        });
        let _ = job.done.send(outcome);
    }
}

/// Shared handle to one live session; holding its lock serializes commands.
pub type SessionHandle = Arc<tokio::sync::Mutex<SessionState>>;

enum Slot {
    Live(SessionHandle),
    Expired(u64),
}

pub enum Lookup {
    Live(SessionHandle),
    Expired { at: u64 },
    Missing,
}

/// In-memory sessions that expire `ttl` seconds after their last update.
pub struct SessionStore {
    ttl: u64,
    clock: Arc<dyn Clock>,
    slots: Mutex<HashMap<String, Slot>>,
    seq: AtomicU64,
    salt: u64,
}

impl SessionStore {
    pub fn new(ttl: u64, clock: Arc<dyn Clock>) -> Self {
        let salt = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0);
        Self { ttl, clock, slots: Mutex::new(HashMap::new()), seq: AtomicU64::new(1), salt }
    }

    pub fn now(&self) -> u64 {
        self.clock.now()
    }

    pub fn ttl(&self) -> u64 {
        self.ttl
    }

    pub fn expires_at(&self, state: &SessionState) -> u64 {
        state.updated.saturating_add(self.ttl)
    }

    pub fn is_expired(&self, state: &SessionState) -> bool {
        self.now() >= self.expires_at(state)
    }

    /// Starts a session; expired sessions are swept to tombstones on the way.
    pub fn create(&self) -> SessionState {
        let now = self.now();
        let n = self.seq.fetch_add(1, Ordering::SeqCst);
        let id = format!("s-{:012x}-{n}", self.salt & 0xffff_ffff_ffff);
        let state = SessionState::new(id.clone(), now);
        let mut slots = self.slots.lock().expect("session map lock");
        let stale: Vec<(String, u64)> = slots
            .iter()
            .filter_map(|(id, slot)| match slot {
                Slot::Live(h) => {
                    let at = self.expires_at(&*h.try_lock().ok()?);
                    (now >= at).then(|| (id.clone(), at))
                }
                Slot::Expired(_) => None,
            })
            .collect();
        for (id, at) in stale {
            slots.insert(id, Slot::Expired(at));
        }
        slots.insert(id, Slot::Live(Arc::new(tokio::sync::Mutex::new(state.clone()))));
        state
    }

    pub fn lookup(&self, id: &str) -> Lookup {
        match self.slots.lock().expect("session map lock").get(id) {
            Some(Slot::Live(h)) => Lookup::Live(Arc::clone(h)),
            Some(Slot::Expired(at)) => Lookup::Expired { at: *at },
            None => Lookup::Missing,
        }
    }

    /// Drops the state of an expired session, keeping when it expired.
    pub fn retire(&self, id: &str, at: u64) {
        self.slots.lock().expect("session map lock").insert(id.to_owned(), Slot::Expired(at));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sessions_expire_after_ttl() {
        let clock = Arc::new(ManualClock::new(1_000));
        let store = SessionStore::new(60, clock.clone());
        let s = store.create();
        assert_eq!(store.expires_at(&s), 1_060);
        let Lookup::Live(h) = store.lookup(&s.id) else { panic!() };
        clock.advance(59);
        assert!(!store.is_expired(&h.try_lock().unwrap()));
        clock.advance(1);
        assert!(store.is_expired(&h.try_lock().unwrap()));
        store.create();
        assert!(matches!(store.lookup(&s.id), Lookup::Expired { at: 1_060 }));
        assert!(matches!(store.lookup("s-nope"), Lookup::Missing));
    }
}
