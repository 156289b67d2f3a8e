//! Run configurations, one schema per subcommand.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use upsilon::cylinder::{CylinderSpec, TestFunctionSpec};
use upsilon::diffusion::LipschitzSpec;
use upsilon::samplers::DEFAULT_STRATA_PER_AXIS;
use upsilon::{Configuration, Window};

use crate::specs::{DynamicsSpec, EventSpec, ModelSpec};
use crate::CliError;

/// Value of the mandatory `schema` field.
pub const SCHEMA: &str = "upsilon-run/1";

fn one() -> usize {
    1
}

fn three() -> f64 {
    3.0
}

fn strata() -> usize {
    DEFAULT_STRATA_PER_AXIS
}

/// Fields shared by every run configuration.
pub trait RunConfig: Serialize + DeserializeOwned {
    fn schema(&self) -> &str;
    fn seed_mut(&mut self) -> &mut u64;
    fn workers_mut(&mut self) -> &mut usize;
}

macro_rules! run_config {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            pub schema: String,
            $($(#[$fmeta])* pub $field: $ty,)*
            #[serde(default)]
            pub seed: u64,
            #[serde(default = "one")]
            pub workers: usize,
        }

        impl RunConfig for $name {
            fn schema(&self) -> &str {
                &self.schema
            }
            fn seed_mut(&mut self) -> &mut u64 {
                &mut self.seed
            }
            fn workers_mut(&mut self) -> &mut usize {
                &mut self.workers
            }
        }
    };
}

run_config!(SampleConfig { model: ModelSpec, n_samples: usize });

run_config!(DistanceConfig { gamma: Configuration, eta: Configuration });

/// Functionals `u(γ, x)` for the Mecke identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeckeFunctional {
    /// `1_E(x)`.
    Indicator { window: Window },
    /// `1_E(x) 1{γE = n}`.
    CountIndicator { window: Window, n: usize },
    /// `f(x)`.
    TestFunction { f: TestFunctionSpec },
    /// `f(x) / (1 + γX)`.
    MassDamped { f: TestFunctionSpec },
    /// Distance from `x` to the nearest other atom position, capped.
    NearestNeighbor { cap: f64 },
}

run_config!(MeckeConfig {
    model: ModelSpec,
    functionals: Vec<MeckeFunctional>,
    n_samples: usize,
    #[serde(default = "strata")]
    strata_per_axis: usize,
    #[serde(default = "three")]
    sigmas: f64,
});

/// Nonnegative functions `f` for the Laplace functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LaplaceFunction {
    Zero,
    /// `c 1_E`.
    ConstantOn { window: Window, c: f64 },
    TestFunction { f: TestFunctionSpec },
}

fn two_percent() -> f64 {
    0.02
}

run_config!(LaplaceConfig {
    model: ModelSpec,
    functions: Vec<LaplaceFunction>,
    n_samples: usize,
    #[serde(default = "two_percent")]
    tolerance: f64,
});

run_config!(TightnessConfig {
    model: ModelSpec,
    window: Window,
    n_max: usize,
    n_samples: usize,
    #[serde(default = "three")]
    sigmas: f64,
});

run_config!(EnergyConfig {
    model: ModelSpec,
    u: CylinderSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v: Option<CylinderSpec>,
    n_samples: usize,
    #[serde(default = "three")]
    sigmas: f64,
});

run_config!(SemigroupConfig {
    dynamics: DynamicsSpec,
    xi: EventSpec,
    lambda: EventSpec,
    times: Vec<f64>,
    n_paths: usize,
    /// Also estimate with `Ξ` and `Λ` swapped and require agreement within 3σ.
    #[serde(default)]
    check_symmetry: bool,
});

fn ten_percent() -> f64 {
    0.1
}

run_config!(VaradhanConfig {
    dynamics: DynamicsSpec,
    xi: EventSpec,
    lambda: EventSpec,
    t_grid: Vec<f64>,
    n_paths: usize,
    /// Expected limit; without it the sampled transport reference is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference: Option<f64>,
    #[serde(default = "ten_percent")]
    tolerance: f64,
});

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventPair {
    pub name: String,
    pub lambda_1: EventSpec,
    pub lambda_2: EventSpec,
    /// Times for this pair; the config-wide grid otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
}

run_config!(GaussianBoundConfig {
    dynamics: DynamicsSpec,
    pairs: Vec<EventPair>,
    t_grid: Vec<f64>,
    n_paths: usize,
});

run_config!(RademacherConfig {
    dynamics: DynamicsSpec,
    u: LipschitzSpec,
    n_pairs: usize,
    n_configs: usize,
    t_grid: Vec<f64>,
    paths_per_config: usize,
});

run_config!(StationarityConfig {
    dynamics: DynamicsSpec,
    horizon: f64,
    windows: Vec<Window>,
    n_chains: usize,
});

/// Parse `text` as a `C`, apply overrides and check the schema tag.
pub fn parse<C: RunConfig>(text: &str, seed: Option<u64>, workers: Option<usize>) -> Result<C, CliError> {
    let mut config: C = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
    if config.schema() != SCHEMA {
        return Err(CliError::Schema(format!("unsupported schema `{}`, expected `{SCHEMA}`", config.schema())));
    }
    if let Some(s) = seed {
        *config.seed_mut() = s;
    }
    if let Some(w) = workers {
        *config.workers_mut() = w;
    }
    if *config.workers_mut() == 0 {
        return Err(CliError::Schema("workers must be positive".into()));
    }
    Ok(config)
}
