//! Task and motion planning for forceful manipulation: wrench stability of
//! kinematic chains, Monte-Carlo robustness costs and a stream-based planner
//! with bottle-opening and nut-twisting domains.

pub mod domains;
pub mod robot;
pub mod planner;
pub mod robustness;
pub mod spatial;
pub mod stability;
pub mod study;
