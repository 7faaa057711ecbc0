//! Consistency checks for amplitude-assignment theories over multi-slit setups.
//!
//! A theory assigns a complex amplitude φ to every configuration of open
//! slits. The toolkit asks whether φ of a joined setup is a function S of the
//! parts, whether S is associative, and whether some ξ turns S into plain
//! addition. The quadratic theory φ(a ∨ a') = (α + α')² fails the first test,
//! and the only ξ compatible with it is ξ = 0.

pub mod analysis;
pub mod fixtures;
pub mod pipeline;
pub mod regrad;
pub mod report;
pub mod sampling;
pub mod scenario;
pub mod setup;
pub mod theory;
pub mod verify;
