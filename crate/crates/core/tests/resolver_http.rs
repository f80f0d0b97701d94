use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use chemvec::chemlex::resolver::{HttpBackend, RetryPolicy};
use chemvec::chemlex::Resolver;
use chemvec::Error;

const TNT: &str = "Cc1c(cc(cc1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]";

/// Serves `/lookup/<name>`: TNT resolves, `flaky` answers 503, anything else 404.
fn serve(requests: Arc<AtomicUsize>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            requests.fetch_add(1, Ordering::SeqCst);
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            loop {
                let mut header = String::new();
                if reader.read_line(&mut header).unwrap() == 0 || header == "\r\n" {
                    break;
                }
            }
            let path = request_line.split_whitespace().nth(1).unwrap_or("");
            let (status, body) = match path {
                "/lookup/TNT" | "/lookup/2%2C4%2C6-trinitrotoluene" => ("200 OK", format!("{TNT}\n")),
                "/lookup/flaky" => ("503 Service Unavailable", String::new()),
                _ => ("404 Not Found", String::new()),
            };
            let _ = write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    format!("http://{addr}/lookup/{{name}}")
}

fn quick_retry() -> RetryPolicy {
    RetryPolicy {
        attempts: 2,
        base_delay: Duration::from_millis(1),
    }
}

#[test]
fn remote_hits_are_cached_and_persisted() {
    let requests = Arc::new(AtomicUsize::new(0));
    let template = serve(Arc::clone(&requests));
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.tsv");

    let resolver = Resolver::with_cache_file(&cache)
        .unwrap()
        .with_backend(Box::new(HttpBackend::new(&template, Duration::from_secs(5))))
        .with_retry(quick_retry());
    let hit = resolver.resolve_name("TNT").unwrap().unwrap();
    assert_eq!(hit.smiles, TNT);
    assert_eq!(resolver.resolve_name("  tnt ").unwrap().unwrap().smiles, TNT);
    assert_eq!(requests.load(Ordering::SeqCst), 1);

    let comma = resolver.resolve_name("2,4,6-trinitrotoluene").unwrap().unwrap();
    assert_eq!(comma.smiles, TNT);

    let reloaded = Resolver::with_cache_file(&cache).unwrap();
    assert!(!reloaded.is_online());
    assert_eq!(reloaded.resolve_name("tnt").unwrap().unwrap().smiles, TNT);
}

#[test]
fn misses_are_remembered() {
    let requests = Arc::new(AtomicUsize::new(0));
    let template = serve(Arc::clone(&requests));
    let resolver = Resolver::offline([])
        .with_backend(Box::new(HttpBackend::new(&template, Duration::from_secs(5))))
        .with_retry(quick_retry());
    assert_eq!(resolver.resolve_name("unobtainium").unwrap(), None);
    assert_eq!(resolver.resolve_name("unobtainium").unwrap(), None);
    assert_eq!(requests.load(Ordering::SeqCst), 1);
}

#[test]
fn server_errors_exhaust_retries() {
    let requests = Arc::new(AtomicUsize::new(0));
    let template = serve(Arc::clone(&requests));
    let resolver = Resolver::offline([])
        .with_backend(Box::new(HttpBackend::new(&template, Duration::from_secs(5))))
        .with_retry(quick_retry());
    let err = resolver.resolve_name("flaky").unwrap_err();
    assert!(matches!(err, Error::ResolverUnavailable { attempts: 2, .. }), "{err}");
    assert_eq!(requests.load(Ordering::SeqCst), 2);
}

#[test]
fn unreachable_backend_is_an_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let resolver = Resolver::offline([])
        .with_backend(Box::new(HttpBackend::new(
            format!("http://127.0.0.1:{port}/x/"),
            Duration::from_millis(500),
        )))
        .with_retry(quick_retry());
    assert!(resolver.resolve_name("anything").is_err());
}

#[test]
fn offline_resolver_only_answers_from_cache() {
    let resolver = Resolver::offline([("RDX".to_string(), "C1N(CN(CN1[N+](=O)[O-])[N+](=O)[O-])[N+](=O)[O-]".to_string())]);
    assert!(resolver.resolve_name("rdx").unwrap().is_some());
    assert_eq!(resolver.resolve_name("hmx").unwrap(), None);
    assert_eq!(resolver.resolve_name("   ").unwrap(), None);
}
