//! Key-value messaging between parties.
//!
//! Every message send is a synchronous request/response: the receiver's
//! registered handler for the message type produces the reply. Payloads are
//! string-keyed maps so parties can exchange arbitrary fields.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParamVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PartyId {
    Server,
    Client(usize),
}

impl std::fmt::Display for PartyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PartyId::Server => write!(f, "server"),
            PartyId::Client(k) => write!(f, "client {k}"),
        }
    }
}

/// A payload value: scalars, counters, text, or parameter vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Scalar(f64),
    Int(i64),
    Text(String),
    Params(ParamVector),
}

impl Value {
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Value::Scalar(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_params(&self) -> Option<&ParamVector> {
        match self {
            Value::Params(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub mtype: String,
    pub payload: BTreeMap<String, Value>,
}

impl Message {
    pub fn new(mtype: impl Into<String>) -> Self {
        Self { mtype: mtype.into(), payload: BTreeMap::new() }
    }

    pub fn with(mut self, key: impl Into<String>, value: Value) -> Self {
        self.payload.insert(key.into(), value);
        self
    }

    pub fn require(&self, key: &str) -> Result<&Value> {
        self.payload
            .get(key)
            .ok_or_else(|| Error::Dispatch(format!("message '{}' missing key '{key}'", self.mtype)))
    }

    pub fn require_params(&self, key: &str) -> Result<&ParamVector> {
        self.require(key)?.as_params().ok_or_else(|| {
            Error::Dispatch(format!("message '{}' key '{key}' is not params", self.mtype))
        })
    }

    pub fn require_int(&self, key: &str) -> Result<i64> {
        self.require(key)?.as_int().ok_or_else(|| {
            Error::Dispatch(format!("message '{}' key '{key}' is not an int", self.mtype))
        })
    }
}

pub type Handler = Box<dyn FnMut(&Message) -> Result<Message>>;

/// Routes messages to per-party handlers registered by message type.
#[derive(Default)]
pub struct Router {
    parties: BTreeMap<PartyId, BTreeMap<String, Handler>>,
}

impl Router {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `handler` as the action for `mtype` at `party`.
    pub fn register_action(&mut self, party: PartyId, mtype: impl Into<String>, handler: Handler) {
        self.parties.entry(party).or_default().insert(mtype.into(), handler);
    }

    /// Sends `message` to `receiver` and returns the handler's response.
    pub fn communicate(
        &mut self,
        _sender: PartyId,
        receiver: PartyId,
        message: &Message,
    ) -> Result<Message> {
        let actions = self
            .parties
            .get_mut(&receiver)
            .ok_or_else(|| Error::Dispatch(format!("no party registered as {receiver}")))?;
        let handler = actions.get_mut(&message.mtype).ok_or_else(|| {
            Error::Dispatch(format!(
                "{receiver} has no action registered for message type '{}'",
                message.mtype
            ))
        })?;
        handler(message)
    }
}
