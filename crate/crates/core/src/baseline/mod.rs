//! Reference solvers and run reporting: value iteration on a discretized
//! benchmark game, exact solutions of toy games, CSV and SVG output.

mod discretize;
mod report;
mod solve;

pub use discretize::{discretize_case_study, normal_cdf, DiscretizedGame};
pub use report::{
    export_reports, parse_reports, plot_error_curves, render_svg, write_reports, PlotFrame, REPORT_COLUMNS,
};
pub use solve::{brute_force_solve, reference_boltzmann, value_iteration, ExactSolution, ViSolution};
