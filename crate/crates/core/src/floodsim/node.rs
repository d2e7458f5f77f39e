//! Per-node slot state machines for the three flooding protocols.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Initiator,
    Forwarder,
}

/// Slot-aligned input to a state machine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Event {
    /// Packet decoded in the slot that started at `at` (s), carrying the
    /// sender's relay counter.
    RxSuccess { relay_counter: u32, at: f64 },
    RxFail,
    TxDone,
}

/// What the radio does in the next slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Rx,
    Tx,
    Off,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeState {
    pub role: Role,
    pub relay_counter: u32,
    pub remaining_tx: usize,
    /// Local time reference used to schedule transmissions, s.
    pub sync_reference: f64,
    pub rx_channel_index: usize,
    pub radio_on_time: f64,
    pub tx_on_time: f64,
    pub rx_on_time: f64,
    /// Slot of the first successful reception.
    pub first_rx_slot: Option<usize>,
    pub next: Action,
}

impl NodeState {
    /// Initiators start with a transmission; forwarders listen.
    pub fn new(role: Role, tx_n: usize, t0: f64) -> Self {
        Self {
            role,
            relay_counter: 0,
            remaining_tx: tx_n,
            sync_reference: t0,
            rx_channel_index: 0,
            radio_on_time: 0.0,
            tx_on_time: 0.0,
            rx_on_time: 0.0,
            first_rx_slot: None,
            next: if role == Role::Initiator && tx_n > 0 { Action::Tx } else { Action::Rx },
        }
    }

    pub fn has_received(&self) -> bool {
        self.first_rx_slot.is_some() || self.role == Role::Initiator
    }

    pub(crate) fn charge(&mut self, action: Action, slot_duration: f64) {
        match action {
            Action::Tx => self.tx_on_time += slot_duration,
            Action::Rx => self.rx_on_time += slot_duration,
            Action::Off => return,
        }
        self.radio_on_time += slot_duration;
    }
}

/// Reception-triggered single transmissions; Rx and Tx slots alternate until
/// `tx_n` transmissions are done. Every reception resynchronises.
pub fn step_glossy(node: &mut NodeState, event: Event) -> Action {
    node.next = match event {
        Event::RxSuccess { relay_counter, at } => {
            node.sync_reference = at;
            node.relay_counter = relay_counter + 1;
            if node.remaining_tx > 0 {
                Action::Tx
            } else {
                Action::Off
            }
        }
        Event::RxFail => {
            if node.remaining_tx > 0 {
                Action::Rx
            } else {
                Action::Off
            }
        }
        Event::TxDone => {
            node.remaining_tx = node.remaining_tx.saturating_sub(1);
            node.relay_counter += 1;
            if node.remaining_tx == 0 {
                Action::Off
            } else {
                Action::Rx
            }
        }
    };
    node.next
}

/// First transmission reception-triggered, the rest back to back without
/// listening. Only the first reception synchronises.
pub fn step_rof(node: &mut NodeState, event: Event) -> Action {
    node.next = match event {
        Event::RxSuccess { relay_counter, at } => {
            if node.remaining_tx == 0 {
                Action::Off
            } else {
                node.sync_reference = at;
                node.relay_counter = relay_counter + 1;
                Action::Tx
            }
        }
        Event::RxFail => Action::Rx,
        Event::TxDone => {
            node.remaining_tx = node.remaining_tx.saturating_sub(1);
            node.relay_counter += 1;
            if node.remaining_tx == 0 {
                Action::Off
            } else {
                Action::Tx
            }
        }
    };
    node.next
}
