//! Wire codec for A2L control frames.
//!
//! ```text
//! A2L|1|<VERB>|<session>|<field>|...\n
//! ```
//!
//! Inside the session and payload fields a bar is written `\|`, a backslash
//! `\\`, a newline `\n` and a carriage return `\r`; nothing else may follow
//! a backslash. A session of `-` stands for "no session".

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub const MAGIC: &str = "A2L";
pub const VERSION: &str = "1";
const NO_SESSION: &str = "-";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verb {
    Hello,
    Welcome,
    File,
    FileOk,
    Exec,
    Status,
    Result,
    Err,
    Bye,
}

impl Verb {
    pub const ALL: [Verb; 9] = [
        Verb::Hello,
        Verb::Welcome,
        Verb::File,
        Verb::FileOk,
        Verb::Exec,
        Verb::Status,
        Verb::Result,
        Verb::Err,
        Verb::Bye,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verb::Hello => "HELLO",
            Verb::Welcome => "WELCOME",
            Verb::File => "FILE",
            Verb::FileOk => "FILEOK",
            Verb::Exec => "EXEC",
            Verb::Status => "STATUS",
            Verb::Result => "RESULT",
            Verb::Err => "ERR",
            Verb::Bye => "BYE",
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verb {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, FrameError> {
        Verb::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| FrameError::UnknownVerb(s.to_owned()))
    }
}

/// Non-empty session token other than `-`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionId(String);

impl SessionId {
    pub fn new(token: impl Into<String>) -> Result<Self, FrameError> {
        let token = token.into();
        if token.is_empty() || token == NO_SESSION {
            return Err(FrameError::BadSession(token));
        }
        Ok(Self(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub verb: Verb,
    pub session: Option<SessionId>,
    pub fields: Vec<String>,
}

impl Frame {
    pub fn new(verb: Verb, session: Option<SessionId>, fields: Vec<String>) -> Self {
        Self { verb, session, fields }
    }

    /// Convenience constructor taking anything string-like.
    pub fn with<S: Into<String>>(verb: Verb, session: Option<&SessionId>, fields: impl IntoIterator<Item = S>) -> Self {
        Self {
            verb,
            session: session.cloned(),
            fields: fields.into_iter().map(Into::into).collect(),
        }
    }

    pub fn field(&self, i: usize) -> Option<&str> {
        self.fields.get(i).map(String::as_str)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame does not start with `{MAGIC}`")]
    BadMagic,
    #[error("unsupported protocol version `{0}`")]
    BadVersion(String),
    #[error("unknown verb `{0}`")]
    UnknownVerb(String),
    #[error("invalid escape sequence at byte {0}")]
    BadEscape(usize),
    #[error("frame is not newline-terminated")]
    Unterminated,
    #[error("frame is missing its {0}")]
    Truncated(&'static str),
    #[error("invalid session token `{0}`")]
    BadSession(String),
    #[error("frame is not valid UTF-8")]
    Utf8,
}

fn escape_into(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '|' => out.push_str("\\|"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
}

/// Serializes a frame, including the trailing newline.
pub fn encode_frame(frame: &Frame) -> String {
    let mut out = String::with_capacity(32 + frame.fields.iter().map(String::len).sum::<usize>());
    out.push_str(MAGIC);
    out.push('|');
    out.push_str(VERSION);
    out.push('|');
    out.push_str(frame.verb.as_str());
    out.push('|');
    match &frame.session {
        Some(s) => escape_into(&mut out, s.as_str()),
        None => out.push_str(NO_SESSION),
    }
    for field in &frame.fields {
        out.push('|');
        escape_into(&mut out, field);
    }
    out.push('\n');
    out
}

/// Splits an unterminated line on unescaped bars, resolving escapes.
fn split_fields(line: &str) -> Result<Vec<String>, FrameError> {
    let mut fields = vec![String::new()];
    let mut chars = line.char_indices();
    while let Some((i, c)) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some((_, '|')) => fields.last_mut().unwrap().push('|'),
                Some((_, '\\')) => fields.last_mut().unwrap().push('\\'),
                Some((_, 'n')) => fields.last_mut().unwrap().push('\n'),
                Some((_, 'r')) => fields.last_mut().unwrap().push('\r'),
                _ => return Err(FrameError::BadEscape(i)),
            },
            '|' => fields.push(String::new()),
            '\n' | '\r' => return Err(FrameError::BadEscape(i)),
            _ => fields.last_mut().unwrap().push(c),
        }
    }
    Ok(fields)
}

/// Parses one newline-terminated frame.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame, FrameError> {
    let text = std::str::from_utf8(bytes).map_err(|_| FrameError::Utf8)?;
    let line = text.strip_suffix('\n').ok_or(FrameError::Unterminated)?;
    if !line.starts_with(MAGIC) || !matches!(line.as_bytes().get(MAGIC.len()), Some(b'|') | None) {
        return Err(FrameError::BadMagic);
    }
    let mut parts = split_fields(line)?.into_iter();
    parts.next();
    let version = parts.next().ok_or(FrameError::Truncated("version"))?;
    if version != VERSION {
        return Err(FrameError::BadVersion(version));
    }
    let verb: Verb = parts.next().ok_or(FrameError::Truncated("verb"))?.parse()?;
    let session = parts.next().ok_or(FrameError::Truncated("session"))?;
    let session = if session == NO_SESSION {
        None
    } else {
        Some(SessionId::new(session)?)
    };
    Ok(Frame {
        verb,
        session,
        fields: parts.collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sid(s: &str) -> SessionId {
        SessionId::new(s).unwrap()
    }

    #[test]
    fn hello_and_bye() {
        let hello = Frame::with(Verb::Hello, None, ["c1"]);
        assert_eq!(encode_frame(&hello), "A2L|1|HELLO|-|c1\n");
        let bye = Frame::with::<String>(Verb::Bye, Some(&sid("s00000001")), []);
        assert_eq!(encode_frame(&bye), "A2L|1|BYE|s00000001\n");
        for f in [hello, bye] {
            assert_eq!(decode_frame(encode_frame(&f).as_bytes()).unwrap(), f);
        }
    }

    #[test]
    fn escaping() {
        let f = Frame::with(Verb::Err, Some(&sid("s|1")), ["a|b", "back\\slash", "two\nlines", ""]);
        let wire = encode_frame(&f);
        assert_eq!(wire, "A2L|1|ERR|s\\|1|a\\|b|back\\\\slash|two\\nlines|\n");
        assert_eq!(decode_frame(wire.as_bytes()).unwrap(), f);
    }

    #[test]
    fn rejects() {
        assert_eq!(decode_frame(b"X2L|1|HELLO|-\n"), Err(FrameError::BadMagic));
        assert_eq!(decode_frame(b"A2LX|1|HELLO|-\n"), Err(FrameError::BadMagic));
        assert_eq!(decode_frame(b"A2L|2|HELLO|-\n"), Err(FrameError::BadVersion("2".into())));
        assert_eq!(decode_frame(b"A2L|1|FROB|s\n"), Err(FrameError::UnknownVerb("FROB".into())));
        assert_eq!(decode_frame(b"A2L|1|HELLO|-|a\\x\n"), Err(FrameError::BadEscape(15)));
        assert_eq!(decode_frame(b"A2L|1|HELLO|-|a\\\n"), Err(FrameError::BadEscape(15)));
        assert_eq!(decode_frame(b"A2L|1|HELLO|-"), Err(FrameError::Unterminated));
        assert_eq!(decode_frame(b"A2L|1|HELLO\n"), Err(FrameError::Truncated("session")));
        assert_eq!(decode_frame(b"A2L|1|HELLO||\n"), Err(FrameError::BadSession(String::new())));
    }
}
