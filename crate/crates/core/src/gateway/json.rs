use serde_json::Value;

use super::{ChatBackend, ChatMessage, CompletionParams, GatewayError};

/// The first JSON object in `text`. The span from the first `{` to the last
/// `}` is tried first; failing that, each `{` is tried as the start of an
/// object, so prose with stray braces still yields the embedded payload.
pub fn extract_json_object(text: &str) -> Option<Value> {
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    if end > start {
        if let Ok(v @ Value::Object(_)) = serde_json::from_str(&text[start..=end]) {
            return Some(v);
        }
    }
    text.char_indices()
        .filter(|&(_, c)| c == '{')
        .find_map(|(i, _)| {
            let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
            match stream.next() {
                Some(Ok(v @ Value::Object(_))) => Some(v),
                _ => None,
            }
        })
}

const CORRECTION: &str = "Your previous reply could not be used";

/// Calls the backend until the reply holds a JSON object accepted by
/// `validate`, re-asking up to `max_retries` times. Each retry repeats the
/// conversation with the bad reply and a correction appended, under the same
/// key with `attempt` incremented. Transport errors are returned at once.
pub fn complete_json<T>(
    backend: &dyn ChatBackend,
    messages: &[ChatMessage],
    params: &CompletionParams,
    max_retries: u32,
    validate: impl Fn(&Value) -> Result<T, String>,
) -> Result<T, GatewayError> {
    let mut convo = messages.to_vec();
    let mut params = params.clone();
    let mut last = (String::new(), String::new());
    for attempt in 0..=max_retries {
        params.key.attempt = attempt;
        let raw = backend.complete(&convo, &params)?;
        let reason = match extract_json_object(&raw) {
            None => "no JSON object found".to_string(),
            Some(v) => match validate(&v) {
                Ok(t) => return Ok(t),
                Err(e) => e,
            },
        };
        tracing::debug!(key = %params.key, %reason, "retrying malformed output");
        convo.push(ChatMessage::assistant(if raw.trim().is_empty() {
            "(empty)".to_string()
        } else {
            raw.clone()
        }));
        convo.push(ChatMessage::user(format!(
            "{CORRECTION} ({reason}). Reply again with only the JSON object in the required output format."
        )));
        last = (raw, reason);
    }
    Err(GatewayError::Malformed {
        raw: last.0,
        reason: last.1,
    })
}
