//! Threshold private set intersection over hashed vulnerability identifiers.

pub mod bits;
pub mod circuit;
pub mod compiler;
pub mod ledger;
pub mod mpc;
pub mod oracle;
pub mod session;
pub mod vulnid;
