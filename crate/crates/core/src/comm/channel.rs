use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::packet::CommPacket;
use crate::error::{contract, Result};

/// One directed link with a fixed delay.
///
/// Packets are delivered in send order at `send_time + latency_ms`. With
/// jitter enabled each packet gets an extra `U[0, jitter_ms]`, clamped so
/// that delivery order never changes.
#[derive(Debug)]
pub struct Channel {
    latency_ms: u64,
    jitter: Option<(u64, ChaCha8Rng)>,
    clock_ms: u64,
    last_deliver_at: u64,
    in_flight: VecDeque<(u64, CommPacket)>,
}

impl Channel {
    pub fn new(latency_ms: u64) -> Self {
        Self {
            latency_ms,
            jitter: None,
            clock_ms: 0,
            last_deliver_at: 0,
            in_flight: VecDeque::new(),
        }
    }

    pub fn with_jitter(latency_ms: u64, jitter_ms: u64, rng: ChaCha8Rng) -> Self {
        Self {
            jitter: Some((jitter_ms, rng)),
            ..Self::new(latency_ms)
        }
    }

    pub fn latency_ms(&self) -> u64 {
        self.latency_ms
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }

    fn advance(&mut self, now_ms: u64) -> Result<()> {
        if now_ms < self.clock_ms {
            return Err(contract(format!(
                "channel clock moved backwards: {now_ms} ms after {} ms",
                self.clock_ms
            )));
        }
        self.clock_ms = now_ms;
        Ok(())
    }

    pub fn send(&mut self, packet: CommPacket, now_ms: u64) -> Result<()> {
        self.advance(now_ms)?;
        let mut deliver_at = now_ms + self.latency_ms;
        if let Some((jitter, rng)) = &mut self.jitter {
            deliver_at += rng.gen_range(0..=*jitter);
        }
        deliver_at = deliver_at.max(self.last_deliver_at);
        self.last_deliver_at = deliver_at;
        self.in_flight.push_back((deliver_at, packet));
        Ok(())
    }

    /// Removes and returns every packet due at or before `now_ms`.
    pub fn poll(&mut self, now_ms: u64) -> Result<Vec<CommPacket>> {
        self.advance(now_ms)?;
        let mut out = Vec::new();
        while self.in_flight.front().is_some_and(|(t, _)| *t <= now_ms) {
            out.push(self.in_flight.pop_front().unwrap().1);
        }
        Ok(out)
    }
}
