//! Jets of metric evaluators and their Wirtinger derivatives.

mod complex;
mod fd;
mod point;
mod taylor;

pub use complex::{inner, norm_sqr, CJet};
pub use fd::{default_step, fd_oracle, fd_wirtinger, fd_real_partial};
pub use point::{complex_partial, evaluate_jet, evaluate_jet_vars, wirtinger, PointJet, Vars, WirtingerIndex};
pub use taylor::{Jet, Layout, MAX_ORDER};

