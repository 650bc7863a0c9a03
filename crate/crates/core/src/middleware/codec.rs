//! Binary frame layout, little-endian throughout:
//!
//! ```text
//! magic "QSIM" | version u8 | topic_id u8 | seq u64 | stamp_ns i64 | payload_len u16 | payload
//! ```
//!
//! Payloads are packed f64 fields in declaration order.

use thiserror::Error;

use super::{Payload, Topic, TopicMessage};

pub const MAGIC: [u8; 4] = *b"QSIM";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 4 + 1 + 1 + 8 + 8 + 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("payload for {payload} published on {topic}")]
    TopicMismatch { topic: Topic, payload: Topic },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown topic id {0}")]
    UnknownTopic(u8),
    #[error("payload length {got} does not match {expected} for {topic}")]
    LengthMismatch {
        topic: Topic,
        expected: usize,
        got: usize,
    },
    #[error("truncated frame: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("{0} trailing bytes after frame")]
    TrailingBytes(usize),
}

pub fn encode_frame(msg: &TopicMessage) -> Result<Vec<u8>, EncodeError> {
    let payload_topic = msg.payload.topic();
    if payload_topic != msg.topic {
        return Err(EncodeError::TopicMismatch {
            topic: msg.topic,
            payload: payload_topic,
        });
    }
    let len = msg.topic.payload_len();
    let mut out = Vec::with_capacity(HEADER_LEN + len);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(msg.topic.id());
    out.extend_from_slice(&msg.seq.to_le_bytes());
    out.extend_from_slice(&msg.stamp_ns.to_le_bytes());
    out.extend_from_slice(&(len as u16).to_le_bytes());
    for v in msg.payload.fields() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_frame(bytes: &[u8]) -> Result<TopicMessage, DecodeError> {
    if bytes.len() < HEADER_LEN {
        // Report the most specific error the available prefix allows.
        if bytes.len() >= 4 && bytes[..4] != MAGIC {
            return Err(DecodeError::BadMagic(bytes[..4].try_into().unwrap()));
        }
        return Err(DecodeError::Truncated {
            needed: HEADER_LEN,
            available: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(DecodeError::BadMagic(magic));
    }
    if bytes[4] != VERSION {
        return Err(DecodeError::UnsupportedVersion(bytes[4]));
    }
    let topic = Topic::from_id(bytes[5]).ok_or(DecodeError::UnknownTopic(bytes[5]))?;
    let seq = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
    let stamp_ns = i64::from_le_bytes(bytes[14..22].try_into().unwrap());
    let len = u16::from_le_bytes(bytes[22..24].try_into().unwrap()) as usize;
    let expected = topic.payload_len();
    if len != expected {
        return Err(DecodeError::LengthMismatch {
            topic,
            expected,
            got: len,
        });
    }
    let end = HEADER_LEN + len;
    if bytes.len() < end {
        return Err(DecodeError::Truncated {
            needed: end,
            available: bytes.len(),
        });
    }
    if bytes.len() > end {
        return Err(DecodeError::TrailingBytes(bytes.len() - end));
    }
    let fields: Vec<f64> = bytes[HEADER_LEN..end]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(TopicMessage {
        topic,
        seq,
        stamp_ns,
        payload: Payload::from_fields(topic, &fields),
    })
}
