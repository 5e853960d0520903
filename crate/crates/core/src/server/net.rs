//! Length-prefixed request channel over a Unix stream socket.
//!
//! Each frame is a 4-byte big-endian length followed by that many body bytes.
//! A connection may carry any number of request/response pairs.

use std::io::{self, Read, Write};
use std::os::unix::net::{UnixListener, UnixStream};
use std::path::Path;
use std::sync::Arc;
use std::thread;

use super::SharedServer;
use crate::error::{Error, Result};

/// Upper bound on a single frame body.
pub const MAX_FRAME_LEN: u32 = 1 << 20;

pub fn write_frame(w: &mut impl Write, body: &[u8]) -> Result<()> {
    let len = u32::try_from(body.len())
        .ok()
        .filter(|&n| n <= MAX_FRAME_LEN)
        .ok_or_else(|| Error::usage(format!("frame of {} bytes exceeds limit", body.len())))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(body)?;
    w.flush()?;
    Ok(())
}

/// Reads one frame; `None` on a clean end of stream before the header.
pub fn read_frame(r: &mut impl Read) -> Result<Option<Vec<u8>>> {
    let mut header = [0u8; 4];
    let mut filled = 0;
    while filled < header.len() {
        match r.read(&mut header[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(io::Error::from(io::ErrorKind::UnexpectedEof).into()),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(header);
    if len > MAX_FRAME_LEN {
        return Err(Error::usage(format!("frame of {len} bytes exceeds limit")));
    }
    let mut body = vec![0u8; len as usize];
    r.read_exact(&mut body)?;
    Ok(Some(body))
}

fn handle_connection(mut stream: UnixStream, server: &SharedServer) -> Result<()> {
    while let Some(body) = read_frame(&mut stream)? {
        let response = server.respond(&body);
        write_frame(&mut stream, &response)?;
    }
    Ok(())
}

/// Accepts connections forever, one thread per connection.
pub fn serve(listener: UnixListener, server: Arc<SharedServer>) -> Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let server = Arc::clone(&server);
        thread::spawn(move || {
            if let Err(e) = handle_connection(stream, &server) {
                eprintln!("cosmos: connection closed: {e}");
            }
        });
    }
    Ok(())
}

/// Sends one request and waits for its response.
pub fn request(socket: &Path, body: &[u8]) -> Result<Vec<u8>> {
    let mut stream = UnixStream::connect(socket)?;
    write_frame(&mut stream, body)?;
    read_frame(&mut stream)?.ok_or_else(|| io::Error::from(io::ErrorKind::UnexpectedEof).into())
}
