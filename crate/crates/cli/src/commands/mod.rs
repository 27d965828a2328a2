pub mod analyze;
pub mod charts;
pub mod fluid;
pub mod packets;
