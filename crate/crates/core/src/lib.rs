//! Third-person adversarial imitation learning.
//!
//! * [`numkit`]: tensors, layers with explicit backward passes, gradient
//!   reversal and ADAM.
//! * [`worlds`]: point-mass, reacher and cart-pole environments with a
//!   software rasterizer producing 50x50 RGB observations per domain.
//! * [`judge`]: the discriminator (shared conv features, class head over
//!   frame pairs, domain head behind gradient reversal).
//! * [`trpo`]: diagonal-Gaussian policies and trust-region policy updates.
//! * [`orchestrator`]: memory bank, the alternating training loop, baselines
//!   and sweeps.

pub mod numkit;
pub mod worlds;
pub mod judge;
pub mod trpo;
pub mod orchestrator;
