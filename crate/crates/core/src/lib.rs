//! Branch-price-and-cut for the electric vehicle routing problem with time
//! windows and charging time slots.

pub mod clock;
pub mod cuts;
pub mod graph;
pub mod instance;
pub mod labeling;
pub mod lp;
pub mod master;
pub mod nodeset;
pub mod oracle;
pub mod pfih;
pub mod search;
