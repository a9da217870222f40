use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use flate2::write::GzEncoder;
use flate2::Compression;

use evopipe::data::PmlbClient;
use evopipe::harness::{resolve_dataset, ExperimentConfig, RunOptions};
use evopipe::Error;

fn gz(text: &str) -> Vec<u8> {
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(text.as_bytes()).unwrap();
    enc.finish().unwrap()
}

/// Serves `/toy/toy.tsv.gz` and answers 404 for anything else.
fn serve(body: Vec<u8>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let mut stream = match stream {
                Ok(s) => s,
                Err(_) => continue,
            };
            counter.fetch_add(1, Ordering::SeqCst);
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request = String::new();
            reader.read_line(&mut request).unwrap();
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
            }
            let path = request.split_whitespace().nth(1).unwrap_or("");
            let (status, payload): (&str, &[u8]) = if path == "/toy/toy.tsv.gz" {
                ("200 OK", &body)
            } else {
                ("404 Not Found", b"missing")
            };
            let head = format!(
                "HTTP/1.1 {status}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                payload.len()
            );
            let _ = stream.write_all(head.as_bytes());
            let _ = stream.write_all(payload);
        }
    });
    (format!("http://{addr}"), hits)
}

const TOY: &str = "a\tb\ttarget\n1.0\t2.0\t1\n3.0\t4.0\t0\n5.0\t6.0\t1\n";

#[test]
fn downloads_then_serves_from_cache() {
    let (url, hits) = serve(gz(TOY));
    let dir = tempfile::tempdir().unwrap();
    let client = PmlbClient::new(dir.path()).with_base_url(&url);
    let ds = client.fetch("toy").unwrap();
    assert_eq!((ds.n_rows(), ds.n_features(), ds.n_classes()), (3, 2, 2));
    assert!(client.cache_path("toy").is_file());
    assert_eq!(hits.load(Ordering::SeqCst), 1);

    let again = client.fetch("toy").unwrap();
    assert_eq!(again.labels(), ds.labels());
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn missing_dataset_is_an_http_error() {
    let (url, _) = serve(gz(TOY));
    let dir = tempfile::tempdir().unwrap();
    let client = PmlbClient::new(dir.path()).with_base_url(&url);
    match client.fetch("absent") {
        Err(Error::Http { status, .. }) => assert_eq!(status, 404),
        other => panic!("expected HTTP 404, got {other:?}"),
    }
    assert!(!client.cache_path("absent").exists());
}

#[test]
fn corrupt_download_is_not_cached() {
    let (url, _) = serve(b"not gzip".to_vec());
    let dir = tempfile::tempdir().unwrap();
    let client = PmlbClient::new(dir.path()).with_base_url(&url);
    assert!(matches!(client.fetch("toy"), Err(Error::Dataset(_))));
    assert!(!client.cache_path("toy").exists());
}

#[test]
fn unreachable_host_is_a_network_error() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let dir = tempfile::tempdir().unwrap();
    let client = PmlbClient::new(dir.path()).with_base_url(format!("http://127.0.0.1:{port}"));
    assert!(matches!(client.fetch("toy"), Err(Error::Network { .. })));
}

#[test]
fn experiment_datasets_resolve_through_the_client() {
    let (url, _) = serve(gz(TOY));
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        dataset: "toy".into(),
        ..ExperimentConfig::default()
    };
    let opts = RunOptions {
        cache_dir: Some(dir.path().to_path_buf()),
        pmlb_base_url: Some(url),
        ..RunOptions::default()
    };
    assert_eq!(resolve_dataset(&cfg, &opts).unwrap().n_rows(), 3);
    assert!(matches!(
        resolve_dataset(&cfg, &RunOptions::default()),
        Err(Error::Dataset(_))
    ));
}
