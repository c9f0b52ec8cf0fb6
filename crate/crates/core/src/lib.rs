//! Passive analysis of wireless metadata from three sniffers: who is in the
//! home, which devices they use and when, and roughly where.
//!
//! The pipeline reads frame-level captures (`capture`), names devices from
//! OUIs and plaintext leaks (`identify`), turns per-second traffic into
//! off/idle/active timelines (`states`), points a direction vector at each
//! device from relative RSSI (`locate`) and infers presence, sleep, guests
//! and routines (`har`). `simulate` produces captures with ground truth to
//! check all of it against.

pub mod capture;
pub mod cli;
pub mod har;
pub mod identify;
pub mod locate;
pub mod mac;
pub mod pipeline;
pub mod report;
pub mod simulate;
pub mod states;
pub mod time;
