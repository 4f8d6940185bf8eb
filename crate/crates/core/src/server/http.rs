use std::net::{SocketAddr, TcpListener};
use std::path::PathBuf;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use tokio::sync::oneshot;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;
use tower_http::set_header::SetResponseHeaderLayer;

use super::config::ServerConfig;
use super::pool::PoolServer;
use crate::error::{Error, Result};
use crate::wire::{self, ErrorBody, RandomMigrant, ResetAck};

pub fn router(pool: Arc<PoolServer>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route(wire::PUT_POOL, put(put_chromosome))
        .route(wire::GET_RANDOM, get(get_random))
        .route(wire::GET_STATS, get(get_stats))
        .route(wire::POST_RESET, post(reset_experiment))
        .with_state(pool);
    let app = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.layer(CorsLayer::permissive()).layer(SetResponseHeaderLayer::if_not_present(
        header::ACCESS_CONTROL_ALLOW_ORIGIN,
        HeaderValue::from_static("*"),
    ))
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: msg.into() })).into_response()
}

async fn put_chromosome(State(pool): State<Arc<PoolServer>>, body: Bytes) -> Response {
    match pool.put_json(&body) {
        Ok(ack) => Json(ack).into_response(),
        Err(msg) => error(StatusCode::BAD_REQUEST, msg),
    }
}

async fn get_random(State(pool): State<Arc<PoolServer>>) -> Response {
    match pool.get_random() {
        Some(entry) => Json(RandomMigrant { genome: entry.genome, fitness: entry.fitness }).into_response(),
        None => error(StatusCode::NOT_FOUND, wire::EMPTY_POOL),
    }
}

async fn get_stats(State(pool): State<Arc<PoolServer>>) -> Response {
    Json(pool.stats()).into_response()
}

async fn reset_experiment(State(pool): State<Arc<PoolServer>>) -> Response {
    Json(ResetAck { experiment_id: pool.reset() }).into_response()
}

/// A pool server running on its own thread and runtime.
pub struct ServerHandle {
    addr: SocketAddr,
    pool: Arc<PoolServer>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn pool(&self) -> &Arc<PoolServer> {
        &self.pool
    }

    /// Stops accepting connections and drops open ones without draining.
    pub fn shutdown(mut self) {
        self.stop();
    }

    /// Blocks until the server thread exits.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    fn stop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Binds `config.bind` (port 0 picks a free port) and serves in the background.
pub fn spawn_server(config: &ServerConfig) -> Result<ServerHandle> {
    let pool = Arc::new(config.build_pool()?);
    spawn_with_pool(pool, &config.bind, config.static_dir.clone())
}

pub fn spawn_with_pool(pool: Arc<PoolServer>, bind: &str, static_dir: Option<PathBuf>) -> Result<ServerHandle> {
    let listener = TcpListener::bind(bind)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let app = router(pool.clone(), static_dir);
    let (tx, rx) = oneshot::channel::<()>();

    let thread = std::thread::Builder::new()
        .name(format!("pool-server-{}", addr.port()))
        .spawn(move || {
            runtime.block_on(async move {
                let listener = match tokio::net::TcpListener::from_std(listener) {
                    Ok(l) => l,
                    Err(e) => {
                        tracing::error!(error = %e, "cannot adopt listener");
                        return;
                    }
                };
                tokio::select! {
                    res = axum::serve(listener, app) => {
                        if let Err(e) = res {
                            tracing::error!(error = %e, "server stopped");
                        }
                    }
                    _ = rx => tracing::info!("server shutting down"),
                }
            });
            runtime.shutdown_timeout(Duration::from_millis(200));
        })
        .map_err(Error::Io)?;

    tracing::info!(%addr, "pool server listening");
    Ok(ServerHandle { addr, pool, shutdown: Some(tx), thread: Some(thread) })
}
