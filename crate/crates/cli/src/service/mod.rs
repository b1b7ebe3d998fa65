//! HTTP service: workflow storage, a single FIFO job worker and artifact
//! retrieval, persisted under one data directory.

pub mod api;
pub mod corpora;
pub mod jobs;
pub mod store;

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::thread::JoinHandle;
use std::time::Duration;

use anyhow::Context;
use chrono::{SecondsFormat, Utc};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tower_http::services::ServeDir;
use tracing::info;

pub use api::{router, AppState};
pub use jobs::{Job, JobState};
pub use store::Store;

pub(crate) fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Static files served for paths outside `/api`.
    pub ui_dir: Option<PathBuf>,
}

/// Serves on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    config: ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> anyhow::Result<()> {
    let store = Store::open(&config.data_dir)
        .with_context(|| format!("data directory {} is not writable", config.data_dir.display()))?;
    let (state, rx) = AppState::load(store).context("cannot load stored state")?;
    let worker = tokio::spawn(api::worker(state.clone(), rx));
    let mut app = router(state);
    if let Some(ui) = &config.ui_dir {
        app = app.fallback_service(ServeDir::new(ui).append_index_html_on_directories(true));
    }
    info!(addr = %listener.local_addr()?, data_dir = %config.data_dir.display(), "listening");
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    worker.abort();
    Ok(())
}

/// A service running on its own thread and runtime.
pub struct ServiceHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<anyhow::Result<()>>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    /// Stops accepting requests and waits for the thread. A job still
    /// running is abandoned and reported as failed on the next start.
    pub fn stop(mut self) -> anyhow::Result<()> {
        self.shutdown_inner()
    }

    fn shutdown_inner(&mut self) -> anyhow::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().map_err(|_| anyhow::anyhow!("service thread panicked"))?,
            None => Ok(()),
        }
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        let _ = self.shutdown_inner();
    }
}

/// Starts the service in the background. Bind to port 0 for an ephemeral port.
pub fn spawn(config: ServiceConfig, addr: SocketAddr) -> anyhow::Result<ServiceHandle> {
    Store::open(&config.data_dir)
        .with_context(|| format!("data directory {} is not writable", config.data_dir.display()))?;
    let (ready_tx, ready_rx) = std::sync::mpsc::channel::<anyhow::Result<SocketAddr>>();
    let (stop_tx, stop_rx) = oneshot::channel::<()>();
    let thread = std::thread::spawn(move || -> anyhow::Result<()> {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
        let result = rt.block_on(async {
            let listener = match TcpListener::bind(addr).await {
                Ok(l) => l,
                Err(e) => {
                    let _ = ready_tx.send(Err(anyhow::anyhow!("cannot bind {addr}: {e}")));
                    return Ok(());
                }
            };
            let _ = ready_tx.send(Ok(listener.local_addr()?));
            serve(listener, config, async {
                let _ = stop_rx.await;
            })
            .await
        });
        rt.shutdown_timeout(Duration::from_secs(5));
        result
    });
    let addr = ready_rx
        .recv()
        .map_err(|_| anyhow::anyhow!("service thread exited during startup"))??;
    Ok(ServiceHandle {
        addr,
        shutdown: Some(stop_tx),
        thread: Some(thread),
    })
}
