//! Byte transports and the wire helpers shared by client and server.
//!
//! A connection carries newline-terminated control frames; a frame that
//! announces file content (`FILE`, `RESULT`) is followed on the same stream
//! by a blob: an 8-byte big-endian length and then that many bytes.

use std::io::{self, BufRead, Read, Write};

use crossbeam_channel::{unbounded, Receiver, Sender};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::frame::{decode_frame, encode_frame, Frame, FrameError};

/// Longest accepted control frame, in bytes.
pub const MAX_FRAME_LEN: usize = 64 * 1024;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("malformed frame: {0}")]
    Frame(#[from] FrameError),
    #[error("frame exceeds {MAX_FRAME_LEN} bytes")]
    FrameTooLong,
    #[error("blob of {len} bytes exceeds the {max}-byte limit")]
    BlobTooLarge { len: u64, max: u64 },
    #[error("connection closed")]
    Closed,
}

/// Reads one frame; `Ok(None)` on a clean end of stream.
pub fn read_frame<R: BufRead>(reader: &mut R) -> Result<Option<Frame>, WireError> {
    read_frame_line(reader)?
        .map(|line| decode_frame(&line).map_err(WireError::from))
        .transpose()
}

/// Reads one raw newline-terminated line, bounded by [`MAX_FRAME_LEN`].
pub fn read_frame_line<R: BufRead>(reader: &mut R) -> Result<Option<Vec<u8>>, WireError> {
    let mut line = Vec::new();
    let n = reader.take(MAX_FRAME_LEN as u64 + 1).read_until(b'\n', &mut line)?;
    if n == 0 {
        return Ok(None);
    }
    if line.last() != Some(&b'\n') {
        return Err(if line.len() > MAX_FRAME_LEN {
            WireError::FrameTooLong
        } else {
            WireError::Closed
        });
    }
    Ok(Some(line))
}

pub fn write_frame<W: Write>(writer: &mut W, frame: &Frame) -> Result<(), WireError> {
    writer.write_all(encode_frame(frame).as_bytes())?;
    writer.flush()?;
    Ok(())
}

pub fn write_blob<W: Write>(writer: &mut W, bytes: &[u8]) -> Result<(), WireError> {
    writer.write_all(&(bytes.len() as u64).to_be_bytes())?;
    writer.write_all(bytes)?;
    writer.flush()?;
    Ok(())
}

/// Reads a length-prefixed blob of at most `max` bytes. An oversized blob is
/// reported without consuming its body.
pub fn read_blob<R: Read>(reader: &mut R, max: u64) -> Result<Vec<u8>, WireError> {
    let mut len = [0u8; 8];
    reader.read_exact(&mut len)?;
    let len = u64::from_be_bytes(len);
    if len > max {
        return Err(WireError::BlobTooLarge { len, max });
    }
    let mut buf = vec![0u8; len as usize];
    reader.read_exact(&mut buf)?;
    Ok(buf)
}

/// Lower-case hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Receiving half of an in-memory pipe.
#[derive(Debug)]
pub struct PipeReader {
    rx: Receiver<Vec<u8>>,
    buf: Vec<u8>,
    pos: usize,
}

/// Sending half of an in-memory pipe; dropping it signals end of stream.
#[derive(Debug, Clone)]
pub struct PipeWriter {
    tx: Sender<Vec<u8>>,
}

pub fn pipe() -> (PipeWriter, PipeReader) {
    let (tx, rx) = unbounded();
    (
        PipeWriter { tx },
        PipeReader {
            rx,
            buf: Vec::new(),
            pos: 0,
        },
    )
}

impl Read for PipeReader {
    fn read(&mut self, out: &mut [u8]) -> io::Result<usize> {
        while self.pos == self.buf.len() {
            match self.rx.recv() {
                Ok(chunk) => {
                    self.buf = chunk;
                    self.pos = 0;
                }
                Err(_) => return Ok(0),
            }
        }
        let n = out.len().min(self.buf.len() - self.pos);
        out[..n].copy_from_slice(&self.buf[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

impl Write for PipeWriter {
    fn write(&mut self, data: &[u8]) -> io::Result<usize> {
        if data.is_empty() {
            return Ok(0);
        }
        self.tx
            .send(data.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "pipe reader dropped"))?;
        Ok(data.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// One end of an in-memory duplex connection.
#[derive(Debug)]
pub struct Endpoint {
    pub reader: PipeReader,
    pub writer: PipeWriter,
}

/// A connected pair of endpoints.
pub fn duplex() -> (Endpoint, Endpoint) {
    let (aw, br) = pipe();
    let (bw, ar) = pipe();
    (
        Endpoint { reader: ar, writer: aw },
        Endpoint { reader: br, writer: bw },
    )
}
