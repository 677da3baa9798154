//! Little-endian SemDB packet codec.
//!
//! Wire layout:
//!
//! ```text
//! [sender: u32][timestamp_ms: u64][count: u32]
//! count x [idx_row: f32][idx_col: f32][feature: f32 x C][confidence: f32]
//! ```

use crate::error::{contract, Error, Result};
use crate::extractor::SemDb;
use crate::AgentId;

pub const HEADER_BYTES: usize = 4 + 8 + 4;
const F32_BYTES: usize = 4;

/// Bytes one SemDB record occupies on the wire: index (2) + feature (C) +
/// confidence (1), all float32.
pub const fn record_bytes(channels: usize) -> usize {
    (channels + 3) * F32_BYTES
}

/// One agent's SemDBs for one timestamp, already encoded.
///
/// `payload` holds only the entry records; the header fields live beside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommPacket {
    sender: AgentId,
    timestamp_ms: u64,
    channels: usize,
    count: usize,
    payload: Vec<u8>,
}

impl CommPacket {
    pub fn sender(&self) -> AgentId {
        self.sender
    }

    pub fn timestamp_ms(&self) -> u64 {
        self.timestamp_ms
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Length of the encoded entry section: `count * (C + 3) * 4`.
    pub fn payload_bytes(&self) -> usize {
        self.payload.len()
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    /// Header followed by the payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES + self.payload.len());
        out.extend_from_slice(&self.sender.0.to_le_bytes());
        out.extend_from_slice(&self.timestamp_ms.to_le_bytes());
        out.extend_from_slice(&(self.count as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses a full wire image. `channels` is the feature width agreed by
    /// all agents.
    pub fn from_bytes(bytes: &[u8], channels: usize) -> Result<Self> {
        if bytes.len() < HEADER_BYTES {
            return Err(Error::Decode {
                offset: bytes.len(),
                reason: format!("header needs {HEADER_BYTES} bytes, got {}", bytes.len()),
            });
        }
        let sender = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
        let timestamp_ms = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
        let count = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let rec = record_bytes(channels);
        let body = &bytes[HEADER_BYTES..];
        let want = count.checked_mul(rec).ok_or_else(|| Error::Decode {
            offset: 12,
            reason: "entry count overflows".into(),
        })?;
        if body.len() < want {
            let complete = body.len() / rec;
            return Err(Error::Decode {
                offset: HEADER_BYTES + complete * rec,
                reason: format!("truncated: {count} records declared, {complete} complete"),
            });
        }
        if body.len() > want {
            return Err(Error::Decode {
                offset: HEADER_BYTES + want,
                reason: format!("{} trailing bytes", body.len() - want),
            });
        }
        for (i, chunk) in body.chunks_exact(F32_BYTES).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::Decode {
                    offset: HEADER_BYTES + i * F32_BYTES,
                    reason: "non-finite value".into(),
                });
            }
        }
        Ok(Self {
            sender: AgentId(sender),
            timestamp_ms,
            channels,
            count,
            payload: body.to_vec(),
        })
    }
}

/// Encodes SemDBs as float32 records. All SemDBs must share one feature
/// width (`channels`) and hold float32-representable finite values.
pub fn serialize(semdbs: &[SemDb], channels: usize, sender: AgentId, timestamp_ms: u64) -> Result<CommPacket> {
    let mut payload = Vec::with_capacity(semdbs.len() * record_bytes(channels));
    for (i, s) in semdbs.iter().enumerate() {
        if s.feature.len() != channels {
            return Err(contract(format!(
                "SemDB {i} has {} channels, packet carries {channels}",
                s.feature.len()
            )));
        }
        let values = [s.position.0, s.position.1]
            .into_iter()
            .chain(s.feature.iter().copied())
            .chain([s.confidence]);
        for v in values {
            let f = v as f32;
            if !f.is_finite() {
                return Err(contract(format!("SemDB {i} has a value not representable as f32")));
            }
            payload.extend_from_slice(&f.to_le_bytes());
        }
    }
    let packet = CommPacket {
        sender,
        timestamp_ms,
        channels,
        count: semdbs.len(),
        payload,
    };
    debug_assert_eq!(packet.payload_bytes(), semdbs.len() * record_bytes(channels));
    Ok(packet)
}

/// Decodes a packet back into SemDBs tagged with the packet's sender and
/// timestamp.
pub fn deserialize(packet: &CommPacket) -> Vec<SemDb> {
    let c = packet.channels;
    let floats: Vec<f64> = packet
        .payload
        .chunks_exact(F32_BYTES)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    floats
        .chunks_exact(c + 3)
        .map(|r| SemDb {
            position: (r[0], r[1]),
            feature: r[2..2 + c].to_vec(),
            confidence: r[2 + c],
            source_agent: packet.sender,
            timestamp_ms: packet.timestamp_ms,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn semdbs(n: usize, c: usize) -> Vec<SemDb> {
        (0..n)
            .map(|i| SemDb {
                position: (i as f64 + 0.25, 2.5 * i as f64),
                confidence: 0.5,
                feature: (0..c).map(|k| (k as f64) * 0.125 - i as f64).collect(),
                source_agent: AgentId(7),
                timestamp_ms: 300,
            })
            .collect()
    }

    #[test]
    fn empty_packet_has_no_payload() {
        let p = serialize(&[], 32, AgentId(1), 0).unwrap();
        assert_eq!(p.payload_bytes(), 0);
        assert_eq!(p.to_bytes().len(), HEADER_BYTES);
    }

    #[test]
    fn ten_records_of_32_channels_take_1400_bytes() {
        let p = serialize(&semdbs(10, 32), 32, AgentId(7), 300).unwrap();
        assert_eq!(p.payload_bytes(), 1400);
    }

    #[test]
    fn round_trip_is_exact_for_f32_values() {
        let input = semdbs(3, 4);
        let p = serialize(&input, 4, AgentId(7), 300).unwrap();
        let wire = p.to_bytes();
        let back = CommPacket::from_bytes(&wire, 4).unwrap();
        assert_eq!(back, p);
        assert_eq!(deserialize(&back), input);
    }

    #[test]
    fn header_layout_is_little_endian() {
        let p = serialize(&semdbs(1, 1), 1, AgentId(0x01020304), 0x0A0B).unwrap();
        let b = p.to_bytes();
        assert_eq!(&b[0..4], &[4, 3, 2, 1]);
        assert_eq!(&b[4..12], &[0x0B, 0x0A, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&b[12..16], &[1, 0, 0, 0]);
        assert_eq!(&b[16..20], &0.25f32.to_le_bytes());
    }

    #[test]
    fn truncated_and_trailing_input_report_offsets() {
        let wire = serialize(&semdbs(2, 4), 4, AgentId(1), 5).unwrap().to_bytes();
        match CommPacket::from_bytes(&wire[..10], 4) {
            Err(Error::Decode { offset, .. }) => assert_eq!(offset, 10),
            other => panic!("unexpected {other:?}"),
        }
        match CommPacket::from_bytes(&wire[..wire.len() - 3], 4) {
            Err(Error::Decode { offset, .. }) => assert_eq!(offset, HEADER_BYTES + record_bytes(4)),
            other => panic!("unexpected {other:?}"),
        }
        let mut long = wire.clone();
        long.push(0);
        match CommPacket::from_bytes(&long, 4) {
            Err(Error::Decode { offset, .. }) => assert_eq!(offset, wire.len()),
            other => panic!("unexpected {other:?}"),
        }
        let mut nan = wire.clone();
        nan[HEADER_BYTES + 4..HEADER_BYTES + 8].copy_from_slice(&f32::NAN.to_le_bytes());
        match CommPacket::from_bytes(&nan, 4) {
            Err(Error::Decode { offset, .. }) => assert_eq!(offset, HEADER_BYTES + 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn width_mismatch_rejected() {
        assert!(serialize(&semdbs(1, 3), 4, AgentId(1), 0).is_err());
        let mut big = semdbs(1, 1);
        big[0].feature[0] = 1e300;
        assert!(serialize(&big, 1, AgentId(1), 0).is_err());
    }
}
