//! Closed-loop scenario runner and metric computation.
//!
//! The loop runs planner -> inverse kinematics -> per-side controller ->
//! plant, single threaded and deterministic. Parallelism is reserved for
//! fan-out across independent runs (see [`run_pair`]).

mod circle;
mod lyapunov;
mod metrics;
mod pid;
mod record;

pub use circle::{fit_circle, trajectory_radius, RadiusFit};
pub use lyapunov::{fit_envelope, lyapunov_trace, lyapunov_value, EnvelopeFit, LyapunovTrace};
pub use metrics::{compute_metrics, compute_metrics_with, MetricsReport, StabilityMetrics};
pub use pid::{PidController, PidGains};
pub use record::{RunRecord, StepRow};

use crate::config::RunConfig;
use crate::geometry::Pose2D;
use crate::kinematics::{cap_speed, wheel_speeds, DerivativeFilter};
use crate::plant::{body_step, plant_step, PlantState};
use crate::pursuit::{PursuitState, WaypointPath};
use crate::raid::{control_step, ControlOutput, ControllerState, PerformanceFunnel};
use crate::rbfn::RbfNetwork;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("record is empty")]
    EmptyRecord,
    #[error("funnel breach inside trace at t = {0:.3}")]
    BreachInTrace(f64),
    #[error("degenerate circle fit (collinear or too-short trajectory)")]
    DegenerateFit,
}

/// Which control law closes the wheel-velocity loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlLaw {
    Raid,
    Pid,
}

impl ControlLaw {
    pub fn name(&self) -> &'static str {
        match self {
            ControlLaw::Raid => "raid",
            ControlLaw::Pid => "pid",
        }
    }
}

enum SideController {
    Raid(ControllerState),
    Pid {
        pid: PidController,
        funnel: PerformanceFunnel,
    },
}

impl SideController {
    fn step(&mut self, v: f64, v_bar: f64, v_bar_dot: f64, t: f64, dt: f64) -> ControlOutput {
        match self {
            SideController::Raid(state) => control_step(state, v, v_bar, v_bar_dot, t, dt),
            SideController::Pid { pid, funnel } => {
                let u_raw = pid.step(v_bar - v, dt);
                let sat = crate::raid::saturate(&pid.limits, u_raw);
                let (o, _) = funnel.value(t);
                ControlOutput {
                    u: u_raw, // the PID has no feedforward split
                    u_raw,
                    u_safe: sat.u_safe,
                    lambda: sat.lambda,
                    lambda_bar: sat.lambda_bar,
                    e: v - v_bar,
                    o,
                    phi_hat: 0.0,
                    estop: false,
                }
            }
        }
    }

    fn clamp_events(&self) -> u64 {
        match self {
            SideController::Raid(state) => state.clamp_events,
            SideController::Pid { .. } => 0,
        }
    }
}

fn make_side(config: &RunConfig, law: ControlLaw, net: RbfNetwork) -> SideController {
    match law {
        ControlLaw::Raid => SideController::Raid(ControllerState {
            phi_hat: config.controller.phi_hat_init,
            beta: config.controller.beta,
            kappa: config.controller.kappa,
            funnel: config.controller.funnel,
            limits: config.controller.limits,
            pump: config.pump_model(),
            net,
            epsilon_guard: config.controller.epsilon_guard(),
            estopped: false,
            feedforward_mode: config.controller.feedforward_mode,
            phi_hat_max: config.controller.phi_hat_max,
            clamp_events: 0,
        }),
        ControlLaw::Pid => SideController::Pid {
            pid: PidController::new(
                PidGains {
                    kp: config.pid.kp,
                    ki: config.pid.ki,
                    kd: config.pid.kd,
                },
                config.controller.limits,
            ),
            funnel: config.controller.funnel,
        },
    }
}

fn slew_toward(current: f64, target: f64, slew: Option<f64>, dt: f64) -> f64 {
    match slew {
        None => target,
        Some(rate) => current + (target - current).clamp(-rate * dt, rate * dt),
    }
}

/// Run one scenario to completion (or to the breach that stops it).
///
/// The config must already be validated; the waypoint path comes resolved
/// from [`RunConfig::load_path`].
pub fn run_scenario(config: &RunConfig, path: &WaypointPath, law: ControlLaw) -> RunRecord {
    let dt = config.control_dt_s;
    let steps = (config.duration_s / dt).round() as usize;
    let planner_every = (config.planner_dt_s / dt).round().max(1.0) as usize;
    let geom = config.robot;
    let plant_params = config.plant_params();
    let slew = config.controller.reference_slew_mps2;

    let rbf_seed = config.rbfn_seed();
    let net_right = RbfNetwork::init_stochastic(config.rbfn.neurons, rbf_seed, config.rbfn.width);
    let net_left =
        RbfNetwork::init_stochastic(config.rbfn.neurons, rbf_seed.wrapping_add(1), config.rbfn.width);
    let rbf_centers_right = net_right.centers().to_vec();
    let rbf_centers_left = net_left.centers().to_vec();

    let mut right = make_side(config, law, net_right);
    let mut left = make_side(config, law, net_left);

    let mut plant = PlantState::at_rest(Pose2D::new(
        config.start_pose.x,
        config.start_pose.y,
        config.start_pose.theta,
    ));
    let mut pursuit_state = PursuitState::default();
    let mut v_bar_target = (0.0f64, 0.0f64);
    let mut v_bar = (plant.v_right, plant.v_left);
    let mut filter_right = DerivativeFilter::new(config.controller.derivative_filter_tau_s);
    let mut filter_left = DerivativeFilter::new(config.controller.derivative_filter_tau_s);

    let mut rows = Vec::with_capacity(steps);
    let mut estopped = false;

    for i in 0..steps {
        let t = i as f64 * dt;
        if i % planner_every == 0 && !pursuit_state.finished {
            let (cmd, next) = crate::pursuit::step(&plant.pose, path, &pursuit_state, |v, d, dist| {
                cap_speed(v, d, dist, &geom)
            });
            pursuit_state = next;
            let refs = wheel_speeds(cmd.v, cmd.omega, &geom);
            v_bar_target = (refs.right, refs.left);
        }

        v_bar.0 = slew_toward(v_bar.0, v_bar_target.0, slew, dt);
        v_bar.1 = slew_toward(v_bar.1, v_bar_target.1, slew, dt);
        let v_bar_dot = (
            filter_right.update(v_bar.0, dt),
            filter_left.update(v_bar.1, dt),
        );

        let out_right = right.step(plant.v_right, v_bar.0, v_bar_dot.0, t, dt);
        let out_left = left.step(plant.v_left, v_bar.1, v_bar_dot.1, t, dt);

        rows.push(StepRow {
            t,
            pose: plant.pose,
            v_right: plant.v_right,
            v_left: plant.v_left,
            v_bar_right: v_bar.0,
            v_bar_left: v_bar.1,
            v_bar_target_right: v_bar_target.0,
            v_bar_target_left: v_bar_target.1,
            right: out_right,
            left: out_left,
        });

        if out_right.estop || out_left.estop {
            estopped = true;
            break;
        }

        plant = body_step(&plant, &geom, dt);
        plant = plant_step(&plant, &plant_params, out_right.u_safe, out_left.u_safe, dt);
    }

    RunRecord {
        scenario_id: config.hash(),
        law: law.name(),
        seed: config.seed,
        config_hash: config.hash(),
        control_dt: dt,
        epsilon_guard: config.controller.epsilon_guard(),
        limit_lower: config.controller.limits.lower,
        limit_upper: config.controller.limits.upper,
        rows,
        estopped,
        clamp_events: right.clamp_events() + left.clamp_events(),
        finished_path: pursuit_state.finished,
        rbf_centers_right,
        rbf_centers_left,
    }
}

/// Run the barrier law and the PID baseline on the identical scenario and
/// seed. With the `parallel` feature the two runs execute concurrently
/// (each run itself stays single threaded and deterministic).
pub fn run_pair(config: &RunConfig, path: &WaypointPath) -> (RunRecord, RunRecord) {
    #[cfg(feature = "parallel")]
    {
        rayon::join(
            || run_scenario(config, path, ControlLaw::Raid),
            || run_scenario(config, path, ControlLaw::Pid),
        )
    }
    #[cfg(not(feature = "parallel"))]
    {
        (
            run_scenario(config, path, ControlLaw::Raid),
            run_scenario(config, path, ControlLaw::Pid),
        )
    }
}
