use alloc::collections::VecDeque;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// UE → BS (FP messages).
    Uplink,
    /// BS → UE (BP messages).
    Downlink,
}

/// Carries one serialized message across the cut and hands back what
/// arrived. Implementations may record, delay or corrupt frames.
pub trait Link {
    fn carry(&mut self, direction: Direction, frame: Vec<u8>) -> Vec<u8>;
}

/// Lossless FIFO between the two endpoints.
#[derive(Debug, Default)]
pub struct InProcessLink {
    queue: VecDeque<Vec<u8>>,
    pub frames_carried: u64,
    pub bytes_carried: u64,
}

impl Link for InProcessLink {
    fn carry(&mut self, _direction: Direction, frame: Vec<u8>) -> Vec<u8> {
        self.frames_carried += 1;
        self.bytes_carried += frame.len() as u64;
        self.queue.push_back(frame);
        self.queue.pop_front().unwrap_or_default()
    }
}

impl<L: Link + ?Sized> Link for &mut L {
    fn carry(&mut self, direction: Direction, frame: Vec<u8>) -> Vec<u8> {
        (**self).carry(direction, frame)
    }
}
