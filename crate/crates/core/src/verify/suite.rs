//! Verifier suite for one configuration: closed-form windows for round
//! shapes, temporal and spatial refinement studies otherwise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

use super::*;
use crate::flow::{cfl_dt, FlowConfig, ShapeName};
use crate::geometry::compute_geometry;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    pub ceilings: Ceilings,
    /// Time spacing of closed-form windows.
    pub round_dt: f64,
    /// Number of step sizes in temporal studies (each halving the last).
    pub levels: usize,
    /// Steps of the fixed-step run used for the volume check.
    pub volume_steps: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            ceilings: Ceilings::default(),
            round_dt: 1e-5,
            levels: 4,
            volume_steps: 20,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Task {
    Round(Equation),
    RoundVolume,
    Temporal(Equation),
    FixedVolume,
    SimonsStatic,
    SimonsStudy,
}

fn is_flat(config: &FlowConfig) -> bool {
    matches!(config.model, ModelSpace::Flat { .. })
}

fn tasks(config: &FlowConfig) -> Vec<Task> {
    let round = matches!(
        config.shape.name,
        ShapeName::Circle | ShapeName::Sphere | ShapeName::GeodesicCircle
    );
    let mut eqs = vec![Equation::Metric, Equation::MeanCurvature];
    if is_flat(config) {
        eqs.push(Equation::ANorm);
    }
    let mut out: Vec<Task> = if round {
        eqs.into_iter().map(Task::Round).chain([Task::RoundVolume]).collect()
    } else {
        eqs.into_iter()
            .chain([Equation::AreaElement])
            .map(Task::Temporal)
            .chain([Task::FixedVolume])
            .collect()
    };
    match config.shape.name {
        ShapeName::Sphere => out.push(Task::SimonsStatic),
        ShapeName::Ellipsoid => out.push(Task::SimonsStudy),
        _ => {}
    }
    out
}

fn run_task(config: &FlowConfig, opts: &SuiteOptions, task: Task) -> Result<ResidualReport, VerifyError> {
    let c = &opts.ceilings;
    let dt0 = || -> Result<(DiscreteHypersurface, f64), VerifyError> {
        let s = config.build_surface()?;
        let f = compute_geometry(&s)?;
        let dt = cfl_dt(&s, &f, config.cfl)?;
        Ok((s, dt))
    };
    match task {
        Task::Round(eq) => {
            let w = closed_form_window(config, 2.0 * opts.round_dt, opts.round_dt)?;
            let ceiling = c.round_for(eq);
            match eq {
                Equation::Metric => verify_metric_evolution(&w, Window::all(), ceiling),
                Equation::MeanCurvature => verify_h_evolution(&w, Window::all(), &config.model, ceiling),
                _ => verify_a_norm_evolution(&w, Window::all(), ceiling),
            }
        }
        Task::RoundVolume => {
            let w = closed_form_window(config, 2.0 * opts.round_dt, opts.round_dt)?;
            verify_volume_evolution(&w, c.volume)
        }
        Task::Temporal(eq) => {
            let (s, dt) = dt0()?;
            temporal_refinement_study(eq, &s, dt, opts.levels, c.window)
        }
        Task::FixedVolume => {
            let (s, dt) = dt0()?;
            let traj = integrate_fixed(&s, dt, opts.volume_steps, 1)?;
            verify_volume_evolution(&traj, c.volume)
        }
        Task::SimonsStatic => verify_simons(&config.build_surface()?, c.simons_round),
        Task::SimonsStudy => {
            let (nt, np) = match config.resolution.as_slice() {
                [a, b] => (*a, *b),
                _ => return Err(VerifyError::UnsupportedModel("grid resolution expected".into())),
            };
            let levels = [(nt / 2, np / 2), (nt, np), (2 * nt, 2 * np)]
                .iter()
                .map(|&(a, b)| {
                    let mut c = config.clone();
                    c.resolution = vec![a, b];
                    c.build_surface()
                })
                .collect::<Result<Vec<_>, _>>()?;
            simons_refinement_study(&levels, (FRAC_PI_4, 3.0 * FRAC_PI_4), c.simons)
        }
    }
}

/// Every verifier check that applies to `config`, in a fixed order.
pub fn verify_suite(config: &FlowConfig, opts: &SuiteOptions) -> Result<Vec<ResidualReport>, VerifyError> {
    tasks(config)
        .into_par_iter()
        .map(|t| run_task(config, opts, t))
        .collect()
}
