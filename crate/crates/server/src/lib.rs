//! HTTP server for a ytwin platform.
//!
//! Every endpoint is `POST /<name>` with a JSON body (`GET` also works for the
//! read-only `/current_slot`). The platform sits behind one mutex, so all
//! requests against a store are serialized through a single writer.

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::Mutex;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use ytwin_core::api::{self, ErrorBody};
use ytwin_core::Platform;

pub type SharedPlatform = Arc<Mutex<Platform>>;

fn respond(platform: &SharedPlatform, endpoint: &str, body: &[u8]) -> Response {
    let result = tokio::task::block_in_place(|| {
        let mut p = platform.lock();
        api::dispatch(&mut p, endpoint, body)
    });
    match result {
        Ok(value) => Json(value).into_response(),
        Err(e) => {
            let status = StatusCode::from_u16(api::status_for(&e)).unwrap_or(StatusCode::BAD_REQUEST);
            if status.is_server_error() {
                tracing::error!(endpoint, error = %e, "request failed");
            } else {
                tracing::debug!(endpoint, error = %e, "request rejected");
            }
            (status, Json(ErrorBody::from(&e))).into_response()
        }
    }
}

async fn dispatch(State(p): State<SharedPlatform>, Path(endpoint): Path<String>, body: Bytes) -> Response {
    respond(&p, &endpoint, &body)
}

async fn current_slot(State(p): State<SharedPlatform>) -> Response {
    respond(&p, "current_slot", b"{}")
}

pub fn router(platform: SharedPlatform) -> Router {
    Router::new()
        .route("/current_slot", get(current_slot).post(current_slot))
        .route("/{endpoint}", post(dispatch))
        .with_state(platform)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    platform: SharedPlatform,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(platform))
        .with_graceful_shutdown(shutdown)
        .await
}

/// A server running on its own thread and runtime; stops when dropped.
pub struct BackgroundServer {
    addr: SocketAddr,
    platform: SharedPlatform,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<thread::JoinHandle<()>>,
}

impl BackgroundServer {
    /// Binds `127.0.0.1` on an ephemeral port.
    pub fn start(platform: Platform) -> std::io::Result<Self> {
        Self::start_on("127.0.0.1:0".parse().expect("literal address"), platform)
    }

    pub fn start_on(addr: SocketAddr, platform: Platform) -> std::io::Result<Self> {
        let platform = Arc::new(Mutex::new(platform));
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(4)
            .enable_all()
            .build()?;
        let listener = runtime.block_on(TcpListener::bind(addr))?;
        let addr = listener.local_addr()?;
        let (stop, stopped) = oneshot::channel::<()>();
        let shared = platform.clone();
        let thread = thread::Builder::new().name("ytwin-server".into()).spawn(move || {
            let result = runtime.block_on(serve(listener, shared, async {
                stopped.await.ok();
            }));
            if let Err(e) = result {
                tracing::error!(error = %e, "server stopped");
            }
        })?;
        Ok(Self {
            addr,
            platform,
            stop: Some(stop),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Direct access to the engine, e.g. for audits after a run.
    pub fn platform(&self) -> &SharedPlatform {
        &self.platform
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        if let Some(stop) = self.stop.take() {
            stop.send(()).ok();
        }
        if let Some(t) = self.thread.take() {
            t.join().ok();
        }
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}
