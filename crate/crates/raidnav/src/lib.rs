//! Navigation and control stack for skid-steer wheeled mobile robots.
//!
//! The crate has two halves that meet in the scenario harness:
//!
//! * **Perception math** — [`geometry`] and [`lidar`] implement the scan
//!   matching toolchain: smoothness-based feature extraction, voxel feature
//!   maps over a sliding keyframe window, point-to-line / point-to-plane
//!   residuals, Gauss-Newton alignment, and radius-search loop-closure
//!   candidate detection. Everything runs on synthetic clouds; no sensor
//!   drivers.
//! * **Control** — [`pursuit`] turns a waypoint path into body velocity
//!   commands, [`kinematics`] converts them into per-side wheel velocity
//!   references, and [`raid`] tracks those references with a funnel-bounded
//!   adaptive barrier law under hard actuator saturation. [`plant`] supplies
//!   a deterministic simulated drivetrain with wheel-slip injection, and
//!   [`harness`] closes the loop, records every sample, and computes the
//!   stability metrics (settling time, overshoot, steady-state error,
//!   funnel/saturation compliance, Lyapunov envelope) plus a PID baseline.
//!
//! Scenario runs are fully deterministic: the only randomness is the seeded
//! draw of RBF centers, and the simulation loop is single threaded. Rayon
//! (enabled by the default `parallel` feature) is used only where results
//! are order-independent: correspondence search inside scan matching and
//! fan-out across independent runs.

pub mod config;
pub mod geometry;
pub mod harness;
pub mod kinematics;
pub mod lidar;
pub mod plant;
pub mod pursuit;
pub mod raid;
pub mod rbfn;

pub use config::RunConfig;
pub use geometry::{Pose2D, PointCloud, Transform3D};
