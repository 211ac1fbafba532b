pub mod ablate;
pub mod detect;
pub mod featurize;
pub mod importance;
pub mod prepare;

use telemine_core::synth::{generate, write_dataset, SynthLog};

use crate::config::Config;
use crate::error::Result;
use crate::io::reset_dir;

pub use ablate::{ablate, AblationRun};
pub use detect::{evaluate, train};
pub use featurize::{featurize, SplitFeatures};
pub use importance::{importance, ImportanceReport};
pub use prepare::prepare;

/// Generates the synthetic dataset into `<out>/dataset`.
pub fn synth(cfg: &Config) -> Result<Vec<SynthLog>> {
    let dir = cfg.dataset_dir();
    reset_dir(&dir.join("raw"))?;
    reset_dir(&dir.join("truth"))?;
    let logs = generate(&cfg.synth)?;
    write_dataset(&cfg.synth, &logs, &dir)?;
    Ok(logs)
}
