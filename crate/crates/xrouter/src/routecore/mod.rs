//! Streaming reverse-proxy gateway and round-robin balancer.
//!
//! One request per connection. The gateway classifies the prompt, forwards
//! the request to the routed backend and relays the token stream back
//! frame-by-frame without extra buffering. The balancer fans incoming
//! connections out over gateway instances at the byte level.

pub mod balancer;
pub mod gateway;
pub mod net;
pub mod proto;
pub mod routes;

pub use balancer::{spawn_balancer, BalancerState};
pub use gateway::{spawn_gateway, GatewayConfig, RoutingStats};
pub use net::ServerHandle;
pub use proto::{Frame, ProtoError};
pub use routes::RouteTable;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RouteError {
    #[error("cluster {0} has no route entry")]
    UnknownCluster(usize),
    #[error("balancer has no upstreams")]
    NoUpstreams,
    #[error("invalid route table: {0}")]
    InvalidRoutes(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
