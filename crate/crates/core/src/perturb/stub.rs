//! A tiny in-process replacement server for tests and demos.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use tiny_http::{Header, Response, Server};

#[derive(Debug, Clone)]
pub enum StubMode {
    /// Answers every request with the same weighted list.
    Fixed(Vec<(String, f64)>),
    Empty,
    /// Sleeps before answering like `Fixed`.
    Slow(Duration, Vec<(String, f64)>),
    Malformed,
    Status(u16),
}

pub struct StubServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    hits: Arc<AtomicUsize>,
    handle: Option<JoinHandle<()>>,
}

fn body_for(list: &[(String, f64)]) -> String {
    let candidates: Vec<_> = list
        .iter()
        .map(|(w, p)| serde_json::json!({ "word": w, "weight": p }))
        .collect();
    serde_json::json!({ "candidates": candidates }).to_string()
}

impl StubServer {
    pub fn start(mode: StubMode) -> std::io::Result<Self> {
        let server = Server::http("127.0.0.1:0").map_err(std::io::Error::other)?;
        let addr = server.server_addr().to_ip().expect("tcp listener");
        let stop = Arc::new(AtomicBool::new(false));
        let hits = Arc::new(AtomicUsize::new(0));
        let (stop2, hits2) = (stop.clone(), hits.clone());
        let handle = std::thread::spawn(move || {
            while !stop2.load(Ordering::SeqCst) {
                let Ok(Some(mut req)) = server.recv_timeout(Duration::from_millis(20)) else {
                    continue;
                };
                hits2.fetch_add(1, Ordering::SeqCst);
                let mut sink = String::new();
                let _ = req.as_reader().read_to_string(&mut sink);
                let mode = mode.clone();
                std::thread::spawn(move || {
                    let json = Header::from_bytes("Content-Type", "application/json").expect("header");
                    let (status, body) = match &mode {
                        StubMode::Fixed(list) => (200, body_for(list)),
                        StubMode::Empty => (200, body_for(&[])),
                        StubMode::Slow(delay, list) => {
                            std::thread::sleep(*delay);
                            (200, body_for(list))
                        }
                        StubMode::Malformed => (200, "{\"candidates\": [ {\"word\": 3".to_string()),
                        StubMode::Status(code) => (*code, "{\"error\": \"stub failure\"}".to_string()),
                    };
                    let _ = req.respond(Response::from_string(body).with_status_code(status).with_header(json));
                });
            }
        });
        Ok(Self {
            addr,
            stop,
            hits,
            handle: Some(handle),
        })
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Requests received so far.
    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
