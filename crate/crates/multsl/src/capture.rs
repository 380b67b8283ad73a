use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use multsl_core::protocol::{Direction, InProcessLink, Link};

/// A lossless link that also writes every frame it carries to
/// `<dir>/<seq>-<fp|bp>.bin`.
#[derive(Debug)]
pub struct CaptureLink {
    inner: InProcessLink,
    dir: PathBuf,
    seq: u64,
    error: Option<(PathBuf, io::Error)>,
}

impl CaptureLink {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(CaptureLink { inner: InProcessLink::default(), dir: dir.to_path_buf(), seq: 0, error: None })
    }

    pub fn frames_written(&self) -> u64 {
        self.seq
    }

    /// First write failure, if any. Frames are still delivered after one.
    pub fn take_error(&mut self) -> Option<(PathBuf, io::Error)> {
        self.error.take()
    }
}

impl Link for CaptureLink {
    fn carry(&mut self, direction: Direction, frame: Vec<u8>) -> Vec<u8> {
        let tag = match direction {
            Direction::Uplink => "fp",
            Direction::Downlink => "bp",
        };
        let path = self.dir.join(format!("{:08}-{tag}.bin", self.seq));
        self.seq += 1;
        if let Err(e) = fs::write(&path, &frame) {
            self.error.get_or_insert((path, e));
        }
        self.inner.carry(direction, frame)
    }
}
