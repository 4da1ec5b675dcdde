//! Interactive games over a local HTTP JSON protocol. The human plays AIS;
//! ISO answers with its strategy unless the session is in manual mode.

pub mod http;
pub mod presets;
pub mod store;

pub use http::{bind, router, serve};
pub use store::{ApiError, CreateRequest, MoveRequest, SessionStore, StateQuery};
