//! Runtime bytecode retrieval over a node's JSON-RPC endpoint
//! (`eth_getCode` at the `latest` block).

use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use super::CorpusError;
use crate::address::{decode_hex, Address};

/// Environment variable overriding the configured endpoint.
pub const RPC_URL_ENV: &str = "EVMCLONE_RPC_URL";
pub const DEFAULT_RPC_URL: &str = "http://127.0.0.1:8545";

#[derive(Clone, Debug)]
pub struct RpcConfig {
    pub endpoint: String,
    pub timeout: Duration,
    /// Extra attempts after the first failure.
    pub retries: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff: Duration,
}

impl Default for RpcConfig {
    fn default() -> Self {
        RpcConfig {
            endpoint: DEFAULT_RPC_URL.to_string(),
            timeout: Duration::from_secs(10),
            retries: 3,
            backoff: Duration::from_millis(250),
        }
    }
}

impl RpcConfig {
    /// Applies [`RPC_URL_ENV`] when set.
    pub fn with_env_override(mut self) -> Self {
        if let Ok(url) = std::env::var(RPC_URL_ENV) {
            if !url.trim().is_empty() {
                self.endpoint = url.trim().to_string();
            }
        }
        self
    }
}

/// Result of a code lookup.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FetchedCode {
    Deployed(Vec<u8>),
    /// `0x`: an externally owned account or a self-destructed contract.
    Empty,
}

impl FetchedCode {
    pub fn bytes(&self) -> &[u8] {
        match self {
            FetchedCode::Deployed(b) => b,
            FetchedCode::Empty => &[],
        }
    }
}

enum Attempt {
    Retry(String),
    Fatal(CorpusError),
}

fn request_body(address: &Address) -> Value {
    json!({
        "jsonrpc": "2.0",
        "id": 1,
        "method": "eth_getCode",
        "params": [address.to_string(), "latest"],
    })
}

/// Interprets a JSON-RPC response body.
pub fn parse_get_code_response(body: &str) -> Result<FetchedCode, CorpusError> {
    let v: Value = serde_json::from_str(body).map_err(|e| CorpusError::Protocol(format!("invalid JSON: {e}")))?;
    if let Some(err) = v.get("error") {
        return Err(CorpusError::Rpc(format!("node returned error: {err}")));
    }
    let result = v
        .get("result")
        .and_then(Value::as_str)
        .ok_or_else(|| CorpusError::Protocol("missing string `result`".to_string()))?;
    if !result.starts_with("0x") {
        return Err(CorpusError::Protocol(format!("result is not 0x-prefixed hex: {result}")));
    }
    let bytes = decode_hex(result).map_err(|e| CorpusError::Protocol(format!("result: {e}")))?;
    Ok(if bytes.is_empty() {
        FetchedCode::Empty
    } else {
        FetchedCode::Deployed(bytes)
    })
}

fn attempt(agent: &ureq::Agent, config: &RpcConfig, address: &Address) -> Result<FetchedCode, Attempt> {
    let response = agent
        .post(&config.endpoint)
        .set("Content-Type", "application/json")
        .send_json(request_body(address));
    match response {
        Ok(resp) => {
            let body = resp.into_string().map_err(|e| Attempt::Retry(e.to_string()))?;
            parse_get_code_response(&body).map_err(Attempt::Fatal)
        }
        Err(ureq::Error::Status(code, _)) if code >= 500 || code == 429 => Err(Attempt::Retry(format!("HTTP {code}"))),
        Err(ureq::Error::Status(code, _)) => Err(Attempt::Fatal(CorpusError::Rpc(format!("HTTP {code}")))),
        Err(ureq::Error::Transport(t)) => Err(Attempt::Retry(t.to_string())),
    }
}

/// Fetches deployed runtime code, retrying transport failures with
/// exponential backoff.
pub fn fetch_code(config: &RpcConfig, address: &Address) -> Result<FetchedCode, CorpusError> {
    let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
    let mut delay = config.backoff;
    let mut last = String::new();
    for n in 0..=config.retries {
        if n > 0 {
            log::debug!("retrying eth_getCode for {address} after: {last}");
            thread::sleep(delay);
            delay = delay.saturating_mul(2);
        }
        match attempt(&agent, config, address) {
            Ok(code) => return Ok(code),
            Err(Attempt::Fatal(e)) => return Err(e),
            Err(Attempt::Retry(msg)) => last = msg,
        }
    }
    Err(CorpusError::Rpc(format!(
        "{} unreachable after {} attempts: {last}",
        config.endpoint,
        config.retries + 1
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_responses() {
        assert_eq!(
            parse_get_code_response(r#"{"jsonrpc":"2.0","id":1,"result":"0x6001"}"#).unwrap(),
            FetchedCode::Deployed(vec![0x60, 0x01])
        );
        assert_eq!(
            parse_get_code_response(r#"{"jsonrpc":"2.0","id":1,"result":"0x"}"#).unwrap(),
            FetchedCode::Empty
        );
        assert!(matches!(parse_get_code_response("<html>"), Err(CorpusError::Protocol(_))));
        assert!(matches!(parse_get_code_response(r#"{"result":5}"#), Err(CorpusError::Protocol(_))));
        assert!(matches!(parse_get_code_response(r#"{"result":"0xzz"}"#), Err(CorpusError::Protocol(_))));
        assert!(matches!(
            parse_get_code_response(r#"{"error":{"code":-32602,"message":"invalid"}}"#),
            Err(CorpusError::Rpc(_))
        ));
    }

    #[test]
    fn request_shape() {
        let body = request_body(&Address::from_low_u64(1));
        assert_eq!(body["method"], "eth_getCode");
        assert_eq!(body["params"][0], "0x0000000000000000000000000000000000000001");
        assert_eq!(body["params"][1], "latest");
    }
}
