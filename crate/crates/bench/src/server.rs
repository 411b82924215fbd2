//! Websocket transport for the playground: `GET /ws` opens one session,
//! `GET /health` answers `ok`.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpListener;

use crate::playground::{PlaygroundModel, PlaygroundSession};

pub fn router(model: PlaygroundModel) -> Router {
    Router::new()
        .route("/ws", get(upgrade))
        .route("/health", get(|| async { "ok" }))
        .with_state(Arc::new(model))
}

async fn upgrade(ws: WebSocketUpgrade, State(model): State<Arc<PlaygroundModel>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| session(socket, model))
}

/// Processes one connection's messages strictly in order; solves run on the
/// blocking pool so other connections keep being served.
async fn session(socket: WebSocket, model: Arc<PlaygroundModel>) {
    let Ok(mut state) = PlaygroundSession::new(&model) else {
        return;
    };
    let (mut tx, mut rx) = socket.split();
    let hello = serde_json::to_string(&state.ready(None)).expect("reply serializes");
    if tx.send(Message::Text(hello.into())).await.is_err() {
        return;
    }
    while let Some(Ok(frame)) = rx.next().await {
        let text = match frame {
            Message::Text(t) => t.to_string(),
            Message::Binary(b) => String::from_utf8_lossy(&b).into_owned(),
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => continue,
        };
        let Ok((returned, reply)) = tokio::task::spawn_blocking(move || {
            let reply = state.handle_text(&text);
            (state, reply)
        })
        .await
        else {
            break;
        };
        state = returned;
        if tx.send(Message::Text(reply.into())).await.is_err() {
            break;
        }
    }
}

/// Binds `addr` and serves until the process stops. Returns the bound
/// address through `on_bound` (useful with port 0).
pub async fn serve(addr: SocketAddr, model: PlaygroundModel, on_bound: impl FnOnce(SocketAddr)) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, router(model)).await
}
