//! SIP message parsing and INVITE identity-field extraction.
//!
//! Only what the signaling classifier needs: start line, headers (long and
//! compact names), the body, and the "m=audio" line that advertises the
//! media port. No transaction or dialog state.

use std::net::Ipv4Addr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SipKind {
    Request { method: String, uri: String },
    Response { status: u16, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SipMessage {
    pub kind: SipKind,
    pub headers: Vec<Header>,
    pub body: Vec<u8>,
}

/// Expand a compact header name to its long form; other names pass through.
pub fn canonical_header_name(name: &str) -> &str {
    if name.len() == 1 {
        match name.as_bytes()[0].to_ascii_lowercase() {
            b'i' => return "Call-ID",
            b'f' => return "From",
            b't' => return "To",
            b'v' => return "Via",
            b'c' => return "Content-Type",
            b's' => return "Subject",
            _ => {}
        }
    }
    name
}

impl SipMessage {
    pub fn is_request(&self, method: &str) -> bool {
        matches!(&self.kind, SipKind::Request { method: m, .. } if m.eq_ignore_ascii_case(method))
    }

    /// First header value matching `name` (case-insensitive, compact-aware).
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers_named(name).next()
    }

    /// Every header value matching `name`, in message order.
    pub fn headers_named<'a>(&'a self, name: &str) -> impl Iterator<Item = &'a str> {
        let wanted = canonical_header_name(name).to_string();
        self.headers.iter().filter_map(move |h| {
            if canonical_header_name(&h.name).eq_ignore_ascii_case(&wanted) {
                Some(h.value.as_str())
            } else {
                None
            }
        })
    }

    pub fn render(&self) -> Vec<u8> {
        let start = match &self.kind {
            SipKind::Request { method, uri } => format!("{method} {uri} SIP/2.0"),
            SipKind::Response { status, reason } => format!("SIP/2.0 {status} {reason}"),
        };
        let mut out = Vec::new();
        out.extend_from_slice(start.as_bytes());
        out.extend_from_slice(b"\r\n");
        for h in &self.headers {
            out.extend_from_slice(h.name.as_bytes());
            out.extend_from_slice(b": ");
            out.extend_from_slice(h.value.as_bytes());
            out.extend_from_slice(b"\r\n");
        }
        out.extend_from_slice(b"\r\n");
        out.extend_from_slice(&self.body);
        out
    }
}

/// Split CRLF- or LF-terminated lines until the blank line; body is the rest.
fn split_head_body(bytes: &[u8]) -> (Vec<&[u8]>, &[u8]) {
    let mut lines = Vec::new();
    let mut start = 0;
    while start < bytes.len() {
        let nl = bytes[start..].iter().position(|&b| b == b'\n');
        let (mut end, next) = match nl {
            Some(i) => (start + i, start + i + 1),
            None => (bytes.len(), bytes.len()),
        };
        if end > start && bytes[end - 1] == b'\r' {
            end -= 1;
        }
        if end == start {
            // blank line terminates the head
            return (lines, &bytes[next..]);
        }
        lines.push(&bytes[start..end]);
        start = next;
    }
    (lines, &[])
}

pub fn parse_message(bytes: &[u8]) -> Result<SipMessage> {
    let (lines, body) = split_head_body(bytes);
    let start_line = *lines.first().ok_or(Error::NoStartLine)?;
    let start = std::str::from_utf8(start_line).map_err(|_| Error::NonTextStartLine)?;

    let kind = if let Some(rest) = start.strip_prefix("SIP/") {
        let mut parts = rest.splitn(3, ' ');
        let _version = parts.next();
        let code = parts
            .next()
            .and_then(|c| c.parse::<u16>().ok())
            .ok_or_else(|| Error::BadStartLine {
                line: start.to_string(),
            })?;
        if !(100..=699).contains(&code) {
            return Err(Error::BadStartLine {
                line: start.to_string(),
            });
        }
        SipKind::Response {
            status: code,
            reason: parts.next().unwrap_or("").to_string(),
        }
    } else {
        let mut parts = start.splitn(3, ' ');
        let method = parts.next().unwrap_or("");
        let uri = parts.next().unwrap_or("");
        let version = parts.next().unwrap_or("");
        if method.is_empty() || uri.is_empty() || !version.starts_with("SIP/") {
            return Err(Error::NoStartLine);
        }
        SipKind::Request {
            method: method.to_string(),
            uri: uri.to_string(),
        }
    };

    let mut headers = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(1) {
        let text = String::from_utf8_lossy(line);
        let colon = text.find(':').ok_or_else(|| Error::MalformedHeader {
            line: i + 1,
            text: text.to_string(),
        })?;
        let name = text[..colon].trim();
        if name.is_empty() {
            return Err(Error::MalformedHeader {
                line: i + 1,
                text: text.to_string(),
            });
        }
        headers.push(Header {
            name: name.to_string(),
            value: text[colon + 1..].trim().to_string(),
        });
    }

    Ok(SipMessage {
        kind,
        headers,
        body: body.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SipUri {
    pub scheme: String,
    pub user: String,
    pub host: String,
}

impl SipUri {
    pub fn render(&self) -> String {
        if self.user.is_empty() {
            format!("{}:{}", self.scheme, self.host)
        } else {
            format!("{}:{}@{}", self.scheme, self.user, self.host)
        }
    }

    /// "user@host", or just the host when there is no user part.
    pub fn address(&self) -> String {
        if self.user.is_empty() {
            self.host.clone()
        } else {
            format!("{}@{}", self.user, self.host)
        }
    }
}

/// Parse a SIP URI, stripping angle brackets and ";" parameters.
pub fn parse_uri(text: &str) -> Result<SipUri> {
    let mut t = text.trim();
    if let Some(stripped) = t.strip_prefix('<') {
        t = stripped.strip_suffix('>').unwrap_or(stripped);
    }
    let t = t.split(';').next().unwrap_or("").trim();
    let colon = t.find(':').ok_or_else(|| Error::UriMissingScheme {
        uri: text.to_string(),
    })?;
    let scheme = &t[..colon];
    if scheme.is_empty() {
        return Err(Error::UriMissingScheme {
            uri: text.to_string(),
        });
    }
    let rest = &t[colon + 1..];
    let (user, host) = match rest.rfind('@') {
        Some(at) => (&rest[..at], &rest[at + 1..]),
        None => ("", rest),
    };
    if host.is_empty() {
        return Err(Error::UriEmptyHost {
            uri: text.to_string(),
        });
    }
    Ok(SipUri {
        scheme: scheme.to_string(),
        user: user.to_string(),
        host: host.to_string(),
    })
}

/// Split a From/Contact value into display name and URI text.
fn parse_name_addr(value: &str) -> (String, &str) {
    if let Some(lt) = value.find('<') {
        let display = value[..lt].trim();
        let display = display
            .strip_prefix('"')
            .and_then(|d| d.strip_suffix('"'))
            .unwrap_or(display);
        let end = value[lt..].find('>').map(|i| lt + i + 1).unwrap_or(value.len());
        (display.to_string(), &value[lt..end])
    } else {
        (String::new(), value.split(';').next().unwrap_or(""))
    }
}

/// The INVITE fields the signaling classifier looks at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalingRecord {
    pub call_id: String,
    pub from_display: String,
    pub from_uri: SipUri,
    pub contact: Option<SipUri>,
    pub via: Vec<String>,
    pub subject: Option<String>,
    pub content_type: Option<String>,
    pub source_ip: String,
    pub media_port: Option<u16>,
}

/// Find the advertised audio port in a session body ("m=audio <port> ...").
pub fn media_port_from_body(body: &[u8]) -> Option<u16> {
    let text = String::from_utf8_lossy(body);
    for line in text.lines() {
        if let Some(rest) = line.trim().strip_prefix("m=audio") {
            if let Some(port) = rest.split_whitespace().next() {
                if let Ok(p) = port.parse() {
                    return Some(p);
                }
            }
        }
    }
    None
}

pub fn extract_invite(message: &SipMessage, source_ip: Ipv4Addr) -> Result<SignalingRecord> {
    if !message.is_request("INVITE") {
        let got = match &message.kind {
            SipKind::Request { method, .. } => format!("{method} request"),
            SipKind::Response { status, .. } => format!("{status} response"),
        };
        return Err(Error::NotInvite { got });
    }
    let from = message
        .header("From")
        .ok_or(Error::MissingHeader { header: "From" })?;
    let (from_display, from_uri_text) = parse_name_addr(from);
    let from_uri = parse_uri(from_uri_text)?;
    let call_id = message
        .header("Call-ID")
        .filter(|v| !v.is_empty())
        .ok_or(Error::MissingHeader { header: "Call-ID" })?
        .to_string();
    let contact = match message.header("Contact") {
        Some(value) => {
            let (_, uri_text) = parse_name_addr(value);
            Some(parse_uri(uri_text)?)
        }
        None => None,
    };
    Ok(SignalingRecord {
        call_id,
        from_display,
        from_uri,
        contact,
        via: message.headers_named("Via").map(str::to_string).collect(),
        subject: message.header("Subject").map(str::to_string),
        content_type: message.header("Content-Type").map(str::to_string),
        source_ip: source_ip.to_string(),
        media_port: media_port_from_body(&message.body),
    })
}
