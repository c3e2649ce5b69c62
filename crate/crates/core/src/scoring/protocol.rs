//! JSON-lines wire protocol between the engine and an out-of-process scorer.
//!
//! Each message is one JSON object on one line (UTF-8, `\n` terminated). The
//! engine sends requests; the scorer answers each with exactly one response
//! carrying the same `id`. Ids strictly increase within a session.
//!
//! ```text
//! > {"id":1,"kind":"hello","proto_version":1}
//! < {"id":1,"status":"ok","proto_version":1,"supports_gradient":true,"vocab_size":64,"flops_per_token":2000.0}
//! > {"id":2,"kind":"loss_batch","prompt":[3,7],"target":[1],"suffixes":[[5,5],[5,2]]}
//! < {"id":2,"status":"ok","losses":[1.25,0.5]}
//! > {"id":3,"kind":"gradient_topk","prompt":[3,7],"suffix":[5,5],"target":[1],"k":2}
//! < {"id":3,"status":"ok","topk":[[4,1],[0,2]]}
//! > {"id":4,"kind":"shutdown"}
//! < {"id":4,"status":"ok"}
//! ```
//!
//! Errors come back as `{"id":N,"status":"error","message":"...","index":I}`,
//! `index` naming the failing candidate when there is one. A malformed request
//! gets an error response with `id` 0 and the session continues.

use serde::{Deserialize, Serialize};

use crate::tokens::TokenId;

pub const PROTO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    #[serde(flatten)]
    pub body: RequestBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RequestBody {
    Hello {
        proto_version: u32,
    },
    LossBatch {
        prompt: Vec<TokenId>,
        target: Vec<TokenId>,
        suffixes: Vec<Vec<TokenId>>,
    },
    GradientTopk {
        prompt: Vec<TokenId>,
        suffix: Vec<TokenId>,
        target: Vec<TokenId>,
        k: usize,
    },
    Shutdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proto_version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supports_gradient: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flops_per_token: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub losses: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topk: Option<Vec<Vec<TokenId>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
}

impl Response {
    pub fn ok(id: u64) -> Self {
        Self {
            id,
            status: Status::Ok,
            proto_version: None,
            supports_gradient: None,
            vocab_size: None,
            flops_per_token: None,
            losses: None,
            topk: None,
            message: None,
            index: None,
        }
    }

    pub fn error(id: u64, message: impl Into<String>, index: Option<usize>) -> Self {
        Self {
            status: Status::Error,
            message: Some(message.into()),
            index,
            ..Self::ok(id)
        }
    }
}

/// One line of wire text for `msg`, without the trailing newline.
pub fn encode<T: Serialize>(msg: &T) -> String {
    serde_json::to_string(msg).expect("protocol messages serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_shape() {
        let r = Request {
            id: 2,
            body: RequestBody::LossBatch {
                prompt: vec![3, 7],
                target: vec![1],
                suffixes: vec![vec![5, 5]],
            },
        };
        assert_eq!(
            encode(&r),
            r#"{"id":2,"kind":"loss_batch","prompt":[3,7],"target":[1],"suffixes":[[5,5]]}"#
        );
        let back: Request = serde_json::from_str(&encode(&r)).unwrap();
        assert_eq!(back, r);
        assert_eq!(
            encode(&Request { id: 9, body: RequestBody::Shutdown }),
            r#"{"id":9,"kind":"shutdown"}"#
        );
    }

    #[test]
    fn response_omits_absent_fields() {
        assert_eq!(encode(&Response::ok(4)), r#"{"id":4,"status":"ok"}"#);
        let e = Response::error(5, "boom", Some(3));
        assert_eq!(
            encode(&e),
            r#"{"id":5,"status":"error","message":"boom","index":3}"#
        );
    }
}
