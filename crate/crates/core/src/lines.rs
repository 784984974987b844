use std::io::Read;

use crate::error::{Error, Result};

/// Reads `input` fully and rewrites CRLF line endings as LF. The csv
/// reader miscounts record line numbers on CRLF input.
pub(crate) fn read_lf(mut input: impl Read, what: &str) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    input.read_to_end(&mut raw).map_err(|e| Error::io(what, e))?;
    let mut out = Vec::with_capacity(raw.len());
    let mut bytes = raw.iter().peekable();
    while let Some(&b) = bytes.next() {
        if b == b'\r' && bytes.peek() == Some(&&b'\n') {
            continue;
        }
        out.push(b);
    }
    Ok(out)
}
