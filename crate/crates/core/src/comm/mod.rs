//! Inter-agent transmission: frame alignment, packet encoding, byte
//! accounting and the delayed link.

mod channel;
mod cost;
mod packet;
mod pose;

pub use channel::Channel;
pub use cost::{
    ab_from_bytes, collaborator_bytes, transmission_cost, AbAccumulator, AbSummary, FrameCost, INDEX_DIMS,
};
pub use packet::{deserialize, record_bytes, serialize, CommPacket, HEADER_BYTES};
pub use pose::{transform_to_ego, Pose};
