use std::sync::{Arc, Mutex};

use thiserror::Error;

use super::{encode_frame, EncodeError, Payload, Topic, TopicMessage};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BusError {
    #[error("topic {0} is not registered on this bus")]
    Unregistered(Topic),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// A message as seen by a subscriber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivered {
    pub message: TopicMessage,
    /// Receiver clock at delivery, ns.
    pub received_ns: i64,
}

/// Keep-last-1 mailbox. Replacement and reads take the whole message under
/// one lock, so readers never see a partially updated message.
#[derive(Debug, Default)]
pub struct Slot {
    latest: Mutex<Option<Delivered>>,
}

impl Slot {
    /// Stores `msg` unless the slot already holds an equal or newer
    /// sequence number. Returns whether the message was kept.
    pub fn offer(&self, msg: TopicMessage, received_ns: i64) -> bool {
        let mut latest = self.latest.lock().unwrap();
        if latest.is_some_and(|d| d.message.seq >= msg.seq) {
            return false;
        }
        *latest = Some(Delivered {
            message: msg,
            received_ns,
        });
        true
    }

    pub fn latest(&self) -> Option<Delivered> {
        *self.latest.lock().unwrap()
    }
}

/// Read handle onto a topic's slot.
#[derive(Debug, Clone)]
pub struct Subscription {
    topic: Topic,
    slot: Arc<Slot>,
}

impl Subscription {
    pub fn new(topic: Topic) -> Self {
        Self {
            topic,
            slot: Arc::new(Slot::default()),
        }
    }

    pub fn topic(&self) -> Topic {
        self.topic
    }

    /// `None` until the first message arrives.
    pub fn latest(&self) -> Option<Delivered> {
        self.slot.latest()
    }

    pub fn slot(&self) -> &Arc<Slot> {
        &self.slot
    }
}

/// Assigns consecutive sequence numbers for one topic.
#[derive(Debug, Clone)]
pub struct Publisher {
    topic: Topic,
    next_seq: u64,
}

impl Publisher {
    pub fn new(topic: Topic) -> Self {
        Self { topic, next_seq: 0 }
    }

    pub fn topic(&self) -> Topic {
        self.topic
    }

    pub fn message(&mut self, payload: Payload, stamp_ns: i64) -> TopicMessage {
        let seq = self.next_seq;
        self.next_seq += 1;
        TopicMessage {
            topic: self.topic,
            seq,
            stamp_ns,
            payload,
        }
    }
}

/// In-process transport: one slot per registered topic, shared by all
/// subscribers of that topic, plus a log of every published frame.
#[derive(Debug, Default)]
pub struct Bus {
    slots: [Option<Subscription>; 4],
    log: Vec<(i64, Vec<u8>)>,
}

impl Bus {
    pub fn new() -> Self {
        Self::default()
    }

    /// A bus with all four drone topics registered.
    pub fn with_drone_topics() -> Self {
        let mut bus = Self::new();
        for t in Topic::ALL {
            bus.register(t);
        }
        bus
    }

    pub fn register(&mut self, topic: Topic) {
        self.slots[topic.index()].get_or_insert_with(|| Subscription::new(topic));
    }

    pub fn subscribe(&self, topic: Topic) -> Result<Subscription, BusError> {
        self.slots[topic.index()]
            .clone()
            .ok_or(BusError::Unregistered(topic))
    }

    /// Encodes, logs and delivers `msg` with receive time `now_ns`.
    pub fn publish(&mut self, msg: TopicMessage, now_ns: i64) -> Result<(), BusError> {
        let sub = self.slots[msg.topic.index()]
            .as_ref()
            .ok_or(BusError::Unregistered(msg.topic))?;
        let frame = encode_frame(&msg)?;
        sub.slot.offer(msg, now_ns);
        self.log.push((now_ns, frame));
        Ok(())
    }

    /// Every published frame with its publication time, in order.
    pub fn log(&self) -> &[(i64, Vec<u8>)] {
        &self.log
    }

    pub fn take_log(&mut self) -> Vec<(i64, Vec<u8>)> {
        std::mem::take(&mut self.log)
    }
}
