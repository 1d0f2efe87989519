//! Request traces as JSON Lines: one `{"id","src","dst","t"}` object per line,
//! LF-terminated, sorted by `(t, id)`. Ids increase strictly along the file.

use thiserror::Error;

use crate::model::{Request, RequestError};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: RequestError,
    },
    #[error("line {line}: request {id} is out of (t, id) order")]
    Order { line: usize, id: u64 },
    #[error("line {line}: duplicate id {id}")]
    Duplicate { line: usize, id: u64 },
}

/// Parses a trace and checks its ordering. Node ranges are checked by
/// [`validate_trace`], since the line length is not known here.
pub fn parse_trace(text: &str) -> Result<Vec<Request>, TraceError> {
    let mut out: Vec<Request> = Vec::new();
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Ok(out);
    }
    for (i, raw) in body.split('\n').enumerate() {
        let line = i + 1;
        if raw.contains('\r') {
            return Err(TraceError::Parse { line, msg: "CR in line ending".into() });
        }
        let r: Request = serde_json::from_str(raw).map_err(|e| TraceError::Parse { line, msg: e.to_string() })?;
        if let Some(prev) = out.last() {
            if r.id == prev.id {
                return Err(TraceError::Duplicate { line, id: r.id });
            }
            if r.t < prev.t || r.id < prev.id {
                return Err(TraceError::Order { line, id: r.id });
            }
        }
        out.push(r);
    }
    Ok(out)
}

pub fn validate_trace(reqs: &[Request], n: usize) -> Result<(), TraceError> {
    for (i, r) in reqs.iter().enumerate() {
        r.validate(n).map_err(|source| TraceError::Invalid { line: i + 1, source })?;
    }
    Ok(())
}

/// Canonical encoding; `parse_trace(&write_trace(x)) == x` for sorted traces.
pub fn write_trace(reqs: &[Request]) -> String {
    let mut s = String::new();
    for r in reqs {
        s.push_str(&serde_json::to_string(r).expect("requests serialize"));
        s.push('\n');
    }
    s
}
