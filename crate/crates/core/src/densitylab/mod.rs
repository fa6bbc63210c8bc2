//! Measurements on the random graphs: densities `D_{ι(E)}(G_k)`, the
//! threshold schedule, Hoeffding bounds, suprema over isometry nets,
//! intersection lengths and Monte Carlo tail experiments.

mod density;
mod experiments;
mod hoeffding;
mod params;

pub use density::{
    density, dyadic_partition, intersection_length, string_fill, string_stats, sup_density_net,
    sup_over_net, trivial_density_bound, DyadicPartition, GenView, NetSearch, StringStat,
    StringStats, TrivialBound,
};
pub use experiments::{
    continuity_experiment, density_tail_experiment, intersection_tail_experiment,
    ContinuityOptions, DyadicClassRow, MeasuredConstants, ParamsEcho, TailOptions, TailReport,
    TrialRecord, E_BOX_HI, E_BOX_LO,
};
pub use hoeffding::hoeffding_bound;
pub use params::{make_params, r_schedule, DensityParams, RSchedule};
