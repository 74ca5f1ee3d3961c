//! Remote denoiser adapter: a JSON-over-HTTP client implementing
//! [`Denoiser`], so a real diffusion backend can replace the analytic
//! mixture without touching the samplers, plus a loopback stub server for
//! tests and demos.
//!
//! Wire protocol (bodies ≤ 64 MiB, content-type `application/json`):
//!
//! ```text
//! request:  {"t": int, "condition": string|null, "shape": [ints],
//!            "data": base64 of little-endian float32, row-major}
//! response: {"eps": base64, "x0": base64 (optional)}
//! ```
//!
//! When the response omits `x0`, the client derives it from `eps` via the
//! posterior-mean identity, keeping the two representations consistent.

use std::io::Read;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::denoise::{Denoiser, Prediction};
use crate::diffusion::tweedie_x0;
use crate::error::{Error, Result};

/// Hard cap on request and response body sizes.
pub const MAX_BODY_BYTES: usize = 64 << 20;

#[derive(Debug, Serialize, Deserialize)]
struct WireRequest {
    t: u32,
    condition: Option<String>,
    shape: Vec<usize>,
    data: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct WireResponse {
    eps: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    x0: Option<String>,
}

/// Base64 little-endian float32 encoding of a value vector.
pub fn encode_f32(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 4);
    for &v in values {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    B64.encode(bytes)
}

/// Decode base64 little-endian float32 into f64 values.
pub fn decode_f32(text: &str) -> Result<Vec<f64>> {
    let bytes = B64
        .decode(text)
        .map_err(|e| Error::Remote(format!("protocol error: bad base64 payload: {e}")))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Remote(
            "protocol error: payload length is not a multiple of 4".into(),
        ));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

/// HTTP noise-predictor client. `dim` is the flattened sample length the
/// endpoint expects; `condition` forwards the conditioning label.
pub struct RemoteDenoiser {
    endpoint: String,
    dim: usize,
    condition: Option<String>,
    agent: ureq::Agent,
}

impl RemoteDenoiser {
    pub fn new(endpoint: &str, dim: usize, condition: Option<String>) -> RemoteDenoiser {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(std::time::Duration::from_secs(5))
            .timeout(std::time::Duration::from_secs(120))
            .build();
        RemoteDenoiser { endpoint: endpoint.to_string(), dim, condition, agent }
    }

    fn roundtrip(&self, body: &str) -> Result<WireResponse> {
        if body.len() > MAX_BODY_BYTES {
            return Err(Error::Remote(format!(
                "request body {} bytes exceeds the {} byte limit",
                body.len(),
                MAX_BODY_BYTES
            )));
        }
        let resp = self
            .agent
            .post(&self.endpoint)
            .set("Content-Type", "application/json")
            .send_string(body)
            .map_err(|e| match e {
                ureq::Error::Status(code, _) => {
                    Error::Remote(format!("remote error: status {code}"))
                }
                ureq::Error::Transport(t) => {
                    Error::Remote(format!("transport error: {t}"))
                }
            })?;
        let mut text = String::new();
        resp.into_reader()
            .take(MAX_BODY_BYTES as u64 + 1)
            .read_to_string(&mut text)
            .map_err(|e| Error::Remote(format!("transport error: {e}")))?;
        if text.len() > MAX_BODY_BYTES {
            return Err(Error::Remote("response exceeds the 64 MiB limit".into()));
        }
        serde_json::from_str(&text)
            .map_err(|e| Error::Remote(format!("protocol error: bad response JSON: {e}")))
    }
}

impl Denoiser for RemoteDenoiser {
    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, x: &[f64], t: u32, alpha_bar: f64) -> Result<Prediction> {
        let req = WireRequest {
            t,
            condition: self.condition.clone(),
            shape: vec![x.len()],
            data: encode_f32(x),
        };
        let resp = self.roundtrip(&serde_json::to_string(&req)?)?;
        let eps = decode_f32(&resp.eps)?;
        if eps.len() != x.len() {
            return Err(Error::Remote(format!(
                "protocol error: expected {} eps values, got {}",
                x.len(),
                eps.len()
            )));
        }
        let x0 = match &resp.x0 {
            Some(enc) => {
                let x0 = decode_f32(enc)?;
                if x0.len() != x.len() {
                    return Err(Error::Remote(format!(
                        "protocol error: expected {} x0 values, got {}",
                        x.len(),
                        x0.len()
                    )));
                }
                x0
            }
            None => tweedie_x0(alpha_bar, x, &eps),
        };
        Ok(Prediction { x0, eps })
    }
}

/// A minimal loopback HTTP/1.1 server speaking the denoiser protocol,
/// suitable for tests and the remote-denoiser example. One request per
/// connection (`Connection: close`).
pub mod stub {
    use std::io::{Read, Write};
    use std::net::{SocketAddr, TcpListener, TcpStream};
    use std::sync::atomic::{AtomicBool, Ordering};
    use std::sync::Arc;
    use std::thread::JoinHandle;

    use super::{encode_f32, WireRequest, WireResponse, MAX_BODY_BYTES};
    use crate::denoise::{Denoiser, Gmm};
    use crate::diffusion::Schedule;
    use crate::error::Result;

    /// What the stub returns for each query.
    pub enum StubBehavior {
        /// Serve a Gaussian-mixture denoiser (honors the condition label).
        Gmm { gmm: Gmm, sched: Schedule },
        /// Always return a zero noise estimate of the requested shape.
        Zeros,
        /// Return an eps vector one element too long (protocol-error tests).
        WrongLength,
    }

    pub struct StubServer {
        endpoint: String,
        addr: SocketAddr,
        stop: Arc<AtomicBool>,
        handle: Option<JoinHandle<()>>,
    }

    impl StubServer {
        pub fn start(behavior: StubBehavior) -> Result<StubServer> {
            let listener = TcpListener::bind(("127.0.0.1", 0))?;
            let addr = listener.local_addr()?;
            let stop = Arc::new(AtomicBool::new(false));
            let stop2 = stop.clone();
            let handle = std::thread::spawn(move || serve_loop(listener, behavior, stop2));
            Ok(StubServer {
                endpoint: format!("http://{addr}"),
                addr,
                stop,
                handle: Some(handle),
            })
        }

        pub fn endpoint(&self) -> &str {
            &self.endpoint
        }
    }

    impl Drop for StubServer {
        fn drop(&mut self) {
            self.stop.store(true, Ordering::SeqCst);
            // Wake the accept loop so it observes the stop flag.
            let _ = TcpStream::connect(self.addr);
            if let Some(h) = self.handle.take() {
                let _ = h.join();
            }
        }
    }

    fn serve_loop(listener: TcpListener, behavior: StubBehavior, stop: Arc<AtomicBool>) {
        for conn in listener.incoming() {
            if stop.load(Ordering::SeqCst) {
                break;
            }
            if let Ok(mut stream) = conn {
                let _ = handle_conn(&mut stream, &behavior);
            }
        }
    }

    fn respond(stream: &mut TcpStream, status: &str, body: &str) {
        let msg = format!(
            "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        );
        let _ = stream.write_all(msg.as_bytes());
        let _ = stream.flush();
    }

    fn handle_conn(stream: &mut TcpStream, behavior: &StubBehavior) -> std::io::Result<()> {
        // Read headers byte-by-byte until the blank line (bounded).
        let mut head = Vec::with_capacity(512);
        let mut byte = [0u8; 1];
        while !head.ends_with(b"\r\n\r\n") {
            if head.len() > 16 * 1024 {
                respond(stream, "431 Request Header Fields Too Large", "{}");
                return Ok(());
            }
            if stream.read(&mut byte)? == 0 {
                return Ok(()); // wake-up connection from Drop
            }
            head.push(byte[0]);
        }
        let head_text = String::from_utf8_lossy(&head);
        let content_length = head_text
            .lines()
            .find_map(|l| {
                let (k, v) = l.split_once(':')?;
                k.trim().eq_ignore_ascii_case("content-length").then(|| v.trim().parse::<usize>().ok())?
            })
            .unwrap_or(0);
        if content_length > MAX_BODY_BYTES {
            respond(stream, "413 Payload Too Large", "{}");
            return Ok(());
        }
        let mut body = vec![0u8; content_length];
        stream.read_exact(&mut body)?;

        let req: WireRequest = match serde_json::from_slice(&body) {
            Ok(r) => r,
            Err(_) => {
                respond(stream, "400 Bad Request", "{\"error\":\"bad json\"}");
                return Ok(());
            }
        };
        let n: usize = req.shape.iter().product();
        let x = match super::decode_f32(&req.data) {
            Ok(x) if x.len() == n => x,
            _ => {
                respond(stream, "400 Bad Request", "{\"error\":\"shape/data mismatch\"}");
                return Ok(());
            }
        };

        let reply = match behavior {
            StubBehavior::Zeros => WireResponse { eps: encode_f32(&vec![0.0; n]), x0: None },
            StubBehavior::WrongLength => {
                WireResponse { eps: encode_f32(&vec![0.0; n + 1]), x0: None }
            }
            StubBehavior::Gmm { gmm, sched } => {
                let model = match &req.condition {
                    Some(label) => match gmm.conditioned(label) {
                        Ok(m) => m,
                        Err(_) => {
                            respond(stream, "400 Bad Request", "{\"error\":\"unknown label\"}");
                            return Ok(());
                        }
                    },
                    None => gmm.clone(),
                };
                if req.t < 1 || req.t > sched.t_max() {
                    respond(stream, "400 Bad Request", "{\"error\":\"t out of range\"}");
                    return Ok(());
                }
                match model.predict(&x, req.t, sched.alpha_bar(req.t)) {
                    Ok(p) => WireResponse {
                        eps: encode_f32(&p.eps),
                        x0: Some(encode_f32(&p.x0)),
                    },
                    Err(_) => {
                        respond(stream, "500 Internal Server Error", "{\"error\":\"predict\"}");
                        return Ok(());
                    }
                }
            }
        };
        match serde_json::to_string(&reply) {
            Ok(body) => respond(stream, "200 OK", &body),
            Err(_) => respond(stream, "500 Internal Server Error", "{}"),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::stub::{StubBehavior, StubServer};
    use super::*;
    use crate::denoise::Gmm;
    use crate::diffusion::Schedule;
    use crate::rng::{Purpose, RngTree};

    #[test]
    fn f32_wire_round_trip() {
        let vals = vec![0.5, -1.25, 3.0e-5, 1234.5];
        let dec = decode_f32(&encode_f32(&vals)).unwrap();
        for (a, b) in vals.iter().zip(&dec) {
            assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()));
        }
        assert!(decode_f32("!!notbase64!!").is_err());
    }

    #[test]
    fn zeros_stub_returns_zero_eps() {
        let server = StubServer::start(StubBehavior::Zeros).unwrap();
        let den = RemoteDenoiser::new(server.endpoint(), 3, None);
        let p = den.predict(&[0.3, 0.6, 0.9], 500, 0.25).unwrap();
        assert_eq!(p.eps, vec![0.0, 0.0, 0.0]);
        // x0 derived from eps=0: x/√ᾱ.
        for (a, b) in p.x0.iter().zip(&[0.6, 1.2, 1.8]) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn wrong_length_is_protocol_error() {
        let server = StubServer::start(StubBehavior::WrongLength).unwrap();
        let den = RemoteDenoiser::new(server.endpoint(), 2, None);
        let err = den.predict(&[0.0, 0.0], 100, 0.5).unwrap_err();
        match &err {
            Error::Remote(msg) => assert!(msg.contains("protocol error"), "{msg}"),
            other => panic!("unexpected error {other:?}"),
        }
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn unreachable_endpoint_is_transport_error() {
        // Bind a port and drop it so nothing listens there.
        let port = {
            let l = std::net::TcpListener::bind(("127.0.0.1", 0)).unwrap();
            l.local_addr().unwrap().port()
        };
        let den = RemoteDenoiser::new(&format!("http://127.0.0.1:{port}"), 2, None);
        let err = den.predict(&[0.0, 0.0], 100, 0.5).unwrap_err();
        match &err {
            Error::Remote(msg) => assert!(msg.contains("transport error"), "{msg}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn gmm_stub_matches_local_within_f32_quantization() {
        let gmm = Gmm::bistable(4, 1.0, 0.25);
        let sched = Schedule::linear(1000);
        let server = StubServer::start(StubBehavior::Gmm {
            gmm: gmm.clone(),
            sched: sched.clone(),
        })
        .unwrap();
        let den = RemoteDenoiser::new(server.endpoint(), 4, None);
        let tree = RngTree::new(3);
        for t in [1u32, 77, 500, 1000] {
            let x = tree.normal(Purpose::Aux, t, 0, 4);
            let ab = sched.alpha_bar(t);
            let local = gmm.predict(&x, t, ab).unwrap();
            let remote = den.predict(&x, t, ab).unwrap();
            for (a, b) in local.eps.iter().zip(&remote.eps) {
                assert!((a - b).abs() <= 1e-5 * (1.0 + a.abs()), "t={t}: {a} vs {b}");
            }
            for (a, b) in local.x0.iter().zip(&remote.x0) {
                assert!((a - b).abs() <= 1e-5 * (1.0 + a.abs()), "t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn conditioned_stub_filters_labels() {
        let gmm = Gmm::bistable(2, 2.0, 0.09);
        let sched = Schedule::linear(1000);
        let server = StubServer::start(StubBehavior::Gmm {
            gmm: gmm.clone(),
            sched: sched.clone(),
        })
        .unwrap();
        let den = RemoteDenoiser::new(server.endpoint(), 2, Some("pos".into()));
        // At large t the prior dominates: conditioned on "pos", even a
        // negative query predicts near +level (unconditioned would be ~0).
        let p = den.predict(&[-0.5, -0.5], 1000, sched.alpha_bar(1000)).unwrap();
        assert!(p.x0.iter().all(|&v| v > 1.5), "{:?}", p.x0);
        // And the wire round-trip matches the locally conditioned mixture.
        let local = gmm.conditioned("pos").unwrap();
        let x = [0.3, -1.1];
        let (a, b) = (
            local.predict(&x, 500, sched.alpha_bar(500)).unwrap(),
            den.predict(&x, 500, sched.alpha_bar(500)).unwrap(),
        );
        for (u, v) in a.x0.iter().zip(&b.x0) {
            assert!((u - v).abs() <= 1e-5 * (1.0 + u.abs()), "{u} vs {v}");
        }
        // Unknown label → remote 400 → status error.
        let bad = RemoteDenoiser::new(server.endpoint(), 2, Some("nope".into()));
        let err = bad.predict(&[0.0, 0.0], 10, sched.alpha_bar(10)).unwrap_err();
        match &err {
            Error::Remote(msg) => assert!(msg.contains("status 400"), "{msg}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn concurrent_requests_all_succeed() {
        let gmm = Gmm::bistable(3, 1.0, 0.25);
        let sched = Schedule::linear(1000);
        let server = StubServer::start(StubBehavior::Gmm {
            gmm: gmm.clone(),
            sched: sched.clone(),
        })
        .unwrap();
        let endpoint = server.endpoint().to_string();
        let mut handles = Vec::new();
        for k in 0..4u32 {
            let ep = endpoint.clone();
            handles.push(std::thread::spawn(move || {
                let den = RemoteDenoiser::new(&ep, 3, None);
                let x = vec![0.1 * k as f64; 3];
                den.predict(&x, 200, 0.5).unwrap()
            }));
        }
        for h in handles {
            let p = h.join().unwrap();
            assert_eq!(p.eps.len(), 3);
        }
    }
}
