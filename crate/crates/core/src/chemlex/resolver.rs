//! Name to structure resolution: a local TSV cache, optionally backed by a
//! remote HTTP lookup service.

use std::collections::{HashMap, HashSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex, RwLock};
use std::time::Duration;

use serde::Serialize;

use crate::error::{Error, Result};

/// Environment variable holding the remote lookup URL template. `{name}` is
/// replaced by the percent-encoded chemical name.
pub const RESOLVER_URL_ENV: &str = "CHEMVEC_RESOLVER_URL";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Resolved {
    pub canonical_name: String,
    pub smiles: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("not found")]
    NotFound,
    #[error("transport failure: {0}")]
    Transport(String),
}

/// A remote name lookup.
pub trait ResolverBackend: Send + Sync {
    fn lookup(&self, name: &str) -> std::result::Result<String, BackendError>;
}

/// HTTP GET against a URL template; the response body's first line is the SMILES.
pub struct HttpBackend {
    template: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(template: impl Into<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpBackend {
            template: template.into(),
            agent,
        }
    }

    pub fn from_env(timeout: Duration) -> Option<Self> {
        std::env::var(RESOLVER_URL_ENV)
            .ok()
            .filter(|s| !s.trim().is_empty())
            .map(|t| Self::new(t, timeout))
    }

    fn url(&self, name: &str) -> String {
        let encoded = percent_encode(name);
        if self.template.contains("{name}") {
            self.template.replace("{name}", &encoded)
        } else {
            format!("{}{}", self.template, encoded)
        }
    }
}

fn percent_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || b"-._~".contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

impl ResolverBackend for HttpBackend {
    fn lookup(&self, name: &str) -> std::result::Result<String, BackendError> {
        let mut resp = self
            .agent
            .get(&self.url(name))
            .call()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if status >= 500 || status == 429 {
            return Err(BackendError::Transport(format!("http status {status}")));
        }
        if status >= 400 {
            return Err(BackendError::NotFound);
        }
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        body.lines()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .map(str::to_owned)
            .ok_or(BackendError::NotFound)
    }
}

/// Counting semaphore bounding concurrent remote calls.
struct InFlight {
    limit: usize,
    count: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn acquire(&self) -> InFlightGuard<'_> {
        let mut n = self.count.lock().expect("semaphore poisoned");
        while *n >= self.limit {
            n = self.freed.wait(n).expect("semaphore poisoned");
        }
        *n += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.0.count.lock().expect("semaphore poisoned") -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(250),
        }
    }
}

/// Cache-first resolver. Reads share the cache; new remote hits are written
/// one at a time and appended to the cache file when one is configured.
pub struct Resolver {
    cache: RwLock<HashMap<String, Resolved>>,
    misses: RwLock<HashSet<String>>,
    cache_path: Option<PathBuf>,
    write_lock: Mutex<()>,
    backend: Option<Box<dyn ResolverBackend>>,
    retry: RetryPolicy,
    in_flight: InFlight,
}

fn cache_key(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl Resolver {
    /// Offline resolver over an in-memory cache.
    pub fn offline(entries: impl IntoIterator<Item = (String, String)>) -> Self {
        let mut r = Self::empty();
        let cache = r.cache.get_mut().expect("fresh lock");
        for (name, smiles) in entries {
            cache.insert(
                cache_key(&name),
                Resolved {
                    canonical_name: name,
                    smiles,
                },
            );
        }
        r
    }

    fn empty() -> Self {
        Resolver {
            cache: RwLock::new(HashMap::new()),
            misses: RwLock::new(HashSet::new()),
            cache_path: None,
            write_lock: Mutex::new(()),
            backend: None,
            retry: RetryPolicy::default(),
            in_flight: InFlight {
                limit: 4,
                count: Mutex::new(0),
                freed: Condvar::new(),
            },
        }
    }

    /// Loads a `name<TAB>smiles` cache file. A missing file starts an empty
    /// cache that remote hits will create.
    pub fn with_cache_file(path: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        if path.exists() {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            for (n, line) in text.lines().enumerate() {
                if line.trim().is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((name, smiles)) = line.split_once('\t') else {
                    return Err(Error::Format {
                        what: "resolver cache",
                        line: n + 1,
                        message: "expected name<TAB>smiles".into(),
                    });
                };
                entries.push((name.trim().to_owned(), smiles.trim().to_owned()));
            }
        }
        let mut r = Self::offline(entries);
        r.cache_path = Some(path.to_owned());
        Ok(r)
    }

    pub fn with_backend(mut self, backend: Box<dyn ResolverBackend>) -> Self {
        self.backend = Some(backend);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_in_flight_limit(mut self, limit: usize) -> Self {
        self.in_flight.limit = limit.max(1);
        self
    }

    pub fn is_online(&self) -> bool {
        self.backend.is_some()
    }

    pub fn cached(&self, name: &str) -> Option<Resolved> {
        self.cache.read().expect("cache poisoned").get(&cache_key(name)).cloned()
    }

    /// Cache first, then the remote backend if configured. `Ok(None)` is a
    /// miss; an unreachable backend is an error.
    pub fn resolve_name(&self, name: &str) -> Result<Option<Resolved>> {
        let key = cache_key(name);
        if key.is_empty() {
            return Ok(None);
        }
        if let Some(hit) = self.cache.read().expect("cache poisoned").get(&key) {
            return Ok(Some(hit.clone()));
        }
        let Some(backend) = &self.backend else {
            return Ok(None);
        };
        if self.misses.read().expect("cache poisoned").contains(&key) {
            return Ok(None);
        }
        let mut last_error = String::new();
        for attempt in 0..self.retry.attempts {
            if attempt > 0 {
                std::thread::sleep(self.retry.base_delay * 2u32.pow(attempt - 1));
            }
            let outcome = {
                let _slot = self.in_flight.acquire();
                backend.lookup(name.trim())
            };
            match outcome {
                Ok(smiles) => {
                    let rec = Resolved {
                        canonical_name: name.trim().to_owned(),
                        smiles,
                    };
                    self.store(&key, &rec)?;
                    return Ok(Some(rec));
                }
                Err(BackendError::NotFound) => {
                    self.misses.write().expect("cache poisoned").insert(key);
                    return Ok(None);
                }
                Err(BackendError::Transport(e)) => last_error = e,
            }
        }
        Err(Error::ResolverUnavailable {
            attempts: self.retry.attempts,
            last_error,
        })
    }

    fn store(&self, key: &str, rec: &Resolved) -> Result<()> {
        let _w = self.write_lock.lock().expect("writer poisoned");
        if let Some(path) = &self.cache_path {
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            writeln!(f, "{}\t{}", rec.canonical_name, rec.smiles).map_err(|e| Error::io(path, e))?;
        }
        self.cache
            .write()
            .expect("cache poisoned")
            .insert(key.to_owned(), rec.clone());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    const TNT: &str = "Cc1c(cc(cc1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]";

    struct Fake {
        calls: Arc<AtomicUsize>,
        reply: std::result::Result<String, BackendError>,
    }

    impl ResolverBackend for Fake {
        fn lookup(&self, _: &str) -> std::result::Result<String, BackendError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.reply.clone()
        }
    }

    fn fake(reply: std::result::Result<String, BackendError>) -> (Box<Fake>, Arc<AtomicUsize>) {
        let calls = Arc::new(AtomicUsize::new(0));
        (
            Box::new(Fake {
                calls: Arc::clone(&calls),
                reply,
            }),
            calls,
        )
    }

    fn fast() -> RetryPolicy {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(1),
        }
    }

    #[test]
    fn cache_hit_and_miss_offline() {
        let r = Resolver::offline([("TNT".to_string(), TNT.to_string())]);
        assert_eq!(r.resolve_name("tnt").unwrap().unwrap().smiles, TNT);
        assert_eq!(r.resolve_name("notachemicalxyz").unwrap(), None);
    }

    #[test]
    fn cache_hit_skips_backend() {
        let (b, calls) = fake(Ok("C".into()));
        let r = Resolver::offline([("TNT".to_string(), TNT.to_string())]).with_backend(b);
        r.resolve_name("TNT").unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 0);
        r.resolve_name("methane").unwrap();
        r.resolve_name("Methane").unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn outage_is_distinct_from_miss() {
        let (b, calls) = fake(Err(BackendError::Transport("down".into())));
        let r = Resolver::offline([]).with_backend(b).with_retry(fast());
        assert!(matches!(
            r.resolve_name("RDX"),
            Err(Error::ResolverUnavailable { attempts: 3, .. })
        ));
        assert_eq!(calls.load(Ordering::SeqCst), 3);

        let (b, _) = fake(Err(BackendError::NotFound));
        let r = Resolver::offline([]).with_backend(b).with_retry(fast());
        assert_eq!(r.resolve_name("RDX").unwrap(), None);
    }

    #[test]
    fn remote_hits_persist() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.tsv");
        let (b, _) = fake(Ok("CCO".into()));
        let r = Resolver::with_cache_file(&path).unwrap().with_backend(b);
        r.resolve_name("ethanol").unwrap();
        let reloaded = Resolver::with_cache_file(&path).unwrap();
        assert_eq!(reloaded.resolve_name("ethanol").unwrap().unwrap().smiles, "CCO");
    }

    #[test]
    fn url_template() {
        let b = HttpBackend::new("http://x/name/{name}/smiles", Duration::from_secs(1));
        assert_eq!(b.url("ammonium nitrate"), "http://x/name/ammonium%20nitrate/smiles");
    }
}
