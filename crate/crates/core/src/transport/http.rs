//! HTTP transport.
//!
//! Wire protocol: each envelope is one `POST /msg` request whose body is the
//! canonical payload encoding (UTF-8). The `X-Sender` header names the
//! sending location and is required; `X-Receiver`, when present, must name
//! the receiving endpoint. A 200 response acknowledges that the envelope was
//! enqueued in the receiver's inbox for that sender. Malformed requests get a
//! 4xx status and are not enqueued.
//!
//! Senders wait for the acknowledgment before sending again, so envelopes
//! between a fixed pair of locations are enqueued in send order.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use crossbeam_channel::{unbounded, Receiver, RecvTimeoutError, Sender};
use tiny_http::{Request, Response, Server};

use super::{RetryPolicy, Transport, TransportConfig};
use crate::error::{ChoreoError, Result};
use crate::location::{Location, LocationSet};

pub const MESSAGE_PATH: &str = "/msg";
const SENDER_HEADER: &str = "X-Sender";
const RECEIVER_HEADER: &str = "X-Receiver";

type Inboxes = BTreeMap<Location, (Sender<Vec<u8>>, Receiver<Vec<u8>>)>;

/// A bound but not yet serving HTTP endpoint.
///
/// Binding first and configuring peers afterwards lets tests and benchmarks
/// bind ephemeral ports and exchange the resulting addresses.
pub struct HttpListener {
    location: Location,
    server: Server,
    local_addr: SocketAddr,
}

impl HttpListener {
    pub fn bind(location: Location, listen: &str) -> Result<Self> {
        let server = Server::http(listen).map_err(|e| {
            ChoreoError::Configuration(format!("`{location}` cannot listen on {listen}: {e}"))
        })?;
        let local_addr = server.server_addr().to_ip().ok_or_else(|| {
            ChoreoError::Configuration(format!("`{location}` is not listening on an IP socket"))
        })?;
        Ok(Self {
            location,
            server,
            local_addr,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Starts serving with the given peer addresses and timeouts from `config`
    /// (its `location` and `listen` fields are ignored).
    pub fn into_transport(
        self,
        peers: BTreeMap<Location, String>,
        config: &TransportConfig,
    ) -> Result<HttpTransport> {
        if peers.contains_key(&self.location) {
            return Err(ChoreoError::Configuration(format!(
                "`{}` lists itself as a peer",
                self.location
            )));
        }
        let inboxes: Arc<Inboxes> = Arc::new(peers.keys().map(|p| (*p, unbounded())).collect());
        let server = Arc::new(self.server);
        let shutdown = Arc::new(AtomicBool::new(false));
        let worker = {
            let (server, inboxes, shutdown) = (server.clone(), inboxes.clone(), shutdown.clone());
            let location = self.location;
            std::thread::Builder::new()
                .name(format!("http-inbox-{location}"))
                .spawn(move || serve(location, &server, &inboxes, &shutdown))
                .map_err(|e| ChoreoError::Configuration(format!("cannot spawn listener: {e}")))?
        };
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(config.timeout)
            .timeout_read(config.timeout)
            .timeout_write(config.timeout)
            .build();
        Ok(HttpTransport {
            location: self.location,
            local_addr: self.local_addr,
            peers,
            inboxes,
            agent,
            retry: config.retry,
            receive_timeout: config.receive_timeout,
            server,
            shutdown,
            worker: Some(worker),
        })
    }
}

fn serve(location: Location, server: &Server, inboxes: &Inboxes, shutdown: &AtomicBool) {
    loop {
        match server.recv() {
            Ok(request) => handle(location, request, inboxes),
            Err(_) if shutdown.load(Ordering::Acquire) => break,
            Err(_) => continue,
        }
    }
}

fn header<'r>(request: &'r Request, name: &'static str) -> Option<&'r str> {
    request
        .headers()
        .iter()
        .find(|h| h.field.equiv(name))
        .map(|h| h.value.as_str())
}

fn handle(location: Location, mut request: Request, inboxes: &Inboxes) {
    let outcome = accept(location, &mut request, inboxes);
    let response = match outcome {
        Ok(()) => Response::from_string("").with_status_code(200),
        Err((status, reason)) => Response::from_string(reason).with_status_code(status),
    };
    // The sender observes a failed response as a delivery error and retries.
    let _ = request.respond(response);
}

fn accept(
    location: Location,
    request: &mut Request,
    inboxes: &Inboxes,
) -> std::result::Result<(), (u16, String)> {
    if request.method() != &tiny_http::Method::Post {
        return Err((405, "only POST is accepted".into()));
    }
    if request.url() != MESSAGE_PATH {
        return Err((404, format!("unknown path {}", request.url())));
    }
    let sender = header(request, SENDER_HEADER)
        .filter(|s| !s.is_empty())
        .ok_or((400, format!("missing {SENDER_HEADER} header")))?
        .to_owned();
    if let Some(receiver) = header(request, RECEIVER_HEADER) {
        if receiver != location.name() {
            return Err((400, format!("message for `{receiver}` delivered to `{location}`")));
        }
    }
    let sender = Location::new(&sender).map_err(|e| (400, e.to_string()))?;
    let (queue, _) = inboxes
        .get(&sender)
        .ok_or((400, format!("`{sender}` is not a peer of `{location}`")))?;
    let mut body = Vec::new();
    request
        .as_reader()
        .read_to_end(&mut body)
        .map_err(|e| (400, format!("unreadable body: {e}")))?;
    if std::str::from_utf8(&body).is_err() {
        return Err((400, "body is not UTF-8".into()));
    }
    queue
        .send(body)
        .map_err(|_| (503, "inbox closed".to_owned()))
}

/// A serving HTTP endpoint. Dropping it stops the listener.
pub struct HttpTransport {
    location: Location,
    local_addr: SocketAddr,
    peers: BTreeMap<Location, String>,
    inboxes: Arc<Inboxes>,
    agent: ureq::Agent,
    retry: RetryPolicy,
    receive_timeout: Duration,
    server: Arc<Server>,
    shutdown: Arc<AtomicBool>,
    worker: Option<JoinHandle<()>>,
}

impl HttpTransport {
    pub fn start(config: &TransportConfig) -> Result<Self> {
        HttpListener::bind(config.location, &config.listen)?
            .into_transport(config.peers.clone(), config)
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    fn post(&self, to: Location, address: &str, payload: &[u8]) -> Result<()> {
        let url = format!("http://{address}{MESSAGE_PATH}");
        let mut last_error = String::new();
        for attempt in 0..self.retry.attempts {
            if attempt > 0 {
                std::thread::sleep(self.retry.backoff(attempt - 1));
            }
            let result = self
                .agent
                .post(&url)
                .set(SENDER_HEADER, self.location.name())
                .set(RECEIVER_HEADER, to.name())
                .set("Content-Type", "application/json; charset=utf-8")
                .send_bytes(payload);
            match result {
                Ok(response) => {
                    // Drain the body so the connection returns to the pool.
                    let _ = response.into_string();
                    return Ok(());
                }
                Err(ureq::Error::Status(status, response)) if status < 500 => {
                    let reason = response.into_string().unwrap_or_default();
                    return Err(ChoreoError::communication(
                        to,
                        format!("rejected with status {status}: {reason}"),
                    ));
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(ChoreoError::communication(
            to,
            format!(
                "delivery failed after {} attempts: {last_error}",
                self.retry.attempts
            ),
        ))
    }
}

impl Transport for HttpTransport {
    fn location(&self) -> Location {
        self.location
    }

    fn has_peer(&self, peer: Location) -> bool {
        self.peers.contains_key(&peer)
    }

    fn send(&self, to: Location, payload: &[u8]) -> Result<()> {
        let address = self.peers.get(&to).ok_or_else(|| {
            ChoreoError::Configuration(format!("`{}` has no address for `{to}`", self.location))
        })?;
        self.post(to, address, payload)
    }

    fn receive(&self, from: Location) -> Result<Vec<u8>> {
        let (_, inbox) = self.inboxes.get(&from).ok_or_else(|| {
            ChoreoError::Configuration(format!("`{}` has no peer named `{from}`", self.location))
        })?;
        inbox
            .recv_timeout(self.receive_timeout)
            .map_err(|e| match e {
                RecvTimeoutError::Timeout => ChoreoError::ReceiveTimeout {
                    receiver: self.location,
                    sender: from,
                    after: self.receive_timeout,
                },
                RecvTimeoutError::Disconnected => {
                    ChoreoError::communication(from, "inbox closed")
                }
            })
    }
}

impl Drop for HttpTransport {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::Release);
        self.server.unblock();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

/// Binds one loopback endpoint per location on ephemeral ports and wires
/// them into a full mesh.
pub fn http_loopback_mesh(
    locations: &LocationSet,
    config: impl Fn(Location) -> TransportConfig,
) -> Result<BTreeMap<Location, HttpTransport>> {
    let listeners = locations
        .iter()
        .map(|l| HttpListener::bind(*l, "127.0.0.1:0").map(|h| (*l, h)))
        .collect::<Result<Vec<_>>>()?;
    let addresses: BTreeMap<Location, String> = listeners
        .iter()
        .map(|(l, h)| (*l, h.local_addr().to_string()))
        .collect();
    listeners
        .into_iter()
        .map(|(l, listener)| {
            let peers = addresses
                .iter()
                .filter(|(peer, _)| **peer != l)
                .map(|(p, a)| (*p, a.clone()))
                .collect();
            listener.into_transport(peers, &config(l)).map(|t| (l, t))
        })
        .collect()
}
