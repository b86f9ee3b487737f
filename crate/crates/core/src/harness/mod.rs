//! Scenarios, simulation loop and output.

pub mod emit;
mod plot;
pub mod presets;
pub mod scenario;
pub mod sim;

pub use emit::{emit, Format, Manifest, ManifestEntry};
pub use presets::{preset, preset_names};
pub use scenario::{load_scenario, parse_scenario, Scenario};
pub use sim::{footprint_max_water, run, RunLog, SampleRecord};
