//! Quantitative diagnostics built on the solvers: `S_h`, level bounds, sweeps,
//! `ε_ν`, spectral counts and bubbles.

mod bubble;
mod counting;
mod ground;
mod sobolev;
mod starts;

pub use bubble::{bubble, BubbleReport};
pub use counting::{
    aniso_bounds, count_m_tilde, count_m_tilde_aniso, AnisoBounds, AnisoConstants, AnisoLevel, MTilde,
};
pub use ground::{
    bound_states, continuity_of_ground_states, estimate_eps_nu, ground_state, ground_state_with,
    lambda_sweep, ContinuityEntry, ContinuityReport, EpsNuResult, EpsOptions, EpsProbe,
    GroundStateOptions, GroundStateResult, LipschitzCheck, SweepOptions, SweepPoint, SweepResult,
    Verdict, WindowReport,
};
pub use starts::axis_bumps;
pub use sobolev::{
    compute_s, compute_s_from, critical_gap, energy_bounds, EnergyBounds, SobolevEstimate,
    SobolevOptions,
};
