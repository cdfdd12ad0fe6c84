//! Simulator for contactless motor monitoring: on-off keyed data over an
//! inductive link, a PIC-style USART, and a motor telemetry protocol.

pub mod channel;
pub mod harness;
pub mod modem;
pub mod telemetry;
pub mod usart;
