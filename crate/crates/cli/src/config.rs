//! Run configuration. Every key is required and unknown keys are rejected, so
//! a dumped configuration fully determines a run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sfw_core::kernels::{
    Astigmatism, Detector, DiscreteLaplace, DoubleHelix, Gaussian1D, KernelSpec, MaTirf, Optics, PenetrationModel,
};
use sfw_core::measures::Domain;
use sfw_core::simulation::{NoiseConfig, FILAMENT_RADIUS};
use sfw_core::sfw::SfwConfig;
use sfw_core::solvers::{ArgmaxConfig, DescentConfig, LassoConfig, SignMode};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub kernel: KernelConfig,
    pub solver: SolverConfig,
    pub noise: NoiseSection,
    pub simulation: SimulationSection,
    pub evaluation: EvaluationSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum KernelConfig {
    Astigmatism(MicroscopyConfig),
    DoubleHelix(MicroscopyConfig),
    MaTirf(MicroscopyConfig),
    Gaussian1d(GaussianConfig),
    Laplace(LaplaceConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroscopyConfig {
    /// Number of focal planes or TIRF angles.
    pub planes: usize,
    /// Box size in microns.
    pub extent: [f64; 3],
    pub pixels: [usize; 2],
    pub numerical_aperture: f64,
    pub n_incident: f64,
    pub n_transmitted: f64,
    /// Emission wavelength in microns.
    pub wavelength: f64,
    /// Only used by MA-TIRF.
    pub penetration: Penetration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Penetration {
    Verbatim,
    SquareRoot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianConfig {
    pub sigma: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceConfig {
    pub samples: usize,
    pub s_max: f64,
    pub normalized: bool,
    pub domain: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaRule {
    /// `lambda` is used as is.
    Absolute,
    /// `lambda` is multiplied by `|Phi^* y|_inf` of each frame.
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub lambda: f64,
    pub lambda_rule: LambdaRule,
    pub positive: bool,
    pub max_outer: usize,
    pub stop_tol: f64,
    pub prune_rel: f64,
    pub lasso_max_iter: usize,
    pub lasso_rel_tol: f64,
    pub descent_max_iter: usize,
    pub descent_grad_tol: f64,
    pub descent_memory: usize,
    pub argmax_max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub enabled: bool,
    pub n_photon: f64,
    /// Variance of the additive Gaussian noise (counts squared).
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n_total: usize,
    pub molecules_per_frame: usize,
    /// Filament radius in microns.
    pub jitter_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSection {
    pub jaccard_radius: f64,
    pub rmse_radius: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let det = Detector::table1();
        let optics = Optics::table1();
        let sfw = SfwConfig::default();
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            kernel: KernelConfig::Astigmatism(MicroscopyConfig {
                planes: 2,
                extent: det.extent,
                pixels: det.pixels,
                numerical_aperture: optics.numerical_aperture,
                n_incident: optics.n_incident,
                n_transmitted: optics.n_transmitted,
                wavelength: optics.wavelength,
                penetration: Penetration::Verbatim,
            }),
            solver: SolverConfig {
                lambda: 0.05,
                lambda_rule: LambdaRule::Relative,
                positive: true,
                max_outer: sfw.max_outer,
                stop_tol: sfw.stop_tol,
                prune_rel: sfw.prune_rel,
                lasso_max_iter: sfw.lasso.max_iter,
                lasso_rel_tol: sfw.lasso.rel_tol,
                descent_max_iter: sfw.descent.max_iter,
                descent_grad_tol: sfw.descent.grad_tol,
                descent_memory: sfw.descent.memory,
                argmax_max_iter: sfw.argmax.max_iter,
            },
            noise: NoiseSection { enabled: true, n_photon: 1000.0, variance: 1e-4 },
            simulation: SimulationSection { n_total: 1000, molecules_per_frame: 5, jitter_radius: FILAMENT_RADIUS },
            evaluation: EvaluationSection { jaccard_radius: 0.02, rmse_radius: 0.1 },
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        self.kernel_spec()?;
        let s = &self.solver;
        if !(s.lambda > 0.0) {
            return bad("solver.lambda must be positive");
        }
        if s.max_outer == 0 {
            return bad("solver.max_outer must be at least 1");
        }
        self.sfw_config().lasso.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.noise.enabled {
            self.noise_config(0).validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if self.simulation.n_total == 0 || self.simulation.molecules_per_frame == 0 {
            return bad("simulation counts must be positive");
        }
        if !(self.simulation.jitter_radius >= 0.0) {
            return bad("simulation.jitter_radius must be nonnegative");
        }
        if !(self.evaluation.jaccard_radius > 0.0 && self.evaluation.rmse_radius > 0.0) {
            return bad("evaluation radii must be positive");
        }
        Ok(())
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec, CliError> {
        let cfg_err = |e: sfw_core::Error| CliError::Config(e.to_string());
        Ok(match &self.kernel {
            KernelConfig::Astigmatism(m) => {
                KernelSpec::Astigmatism(Astigmatism::from_optics(m.detector(), &m.optics(), m.planes).map_err(cfg_err)?)
            }
            KernelConfig::DoubleHelix(m) => {
                KernelSpec::DoubleHelix(DoubleHelix::from_optics(m.detector(), &m.optics(), m.planes).map_err(cfg_err)?)
            }
            KernelConfig::MaTirf(m) => KernelSpec::MaTirf(
                MaTirf::from_optics(m.detector(), &m.optics(), m.planes, m.penetration.into()).map_err(cfg_err)?,
            ),
            KernelConfig::Gaussian1d(g) => KernelSpec::Gaussian1D(Gaussian1D::new(g.sigma, g.samples).map_err(cfg_err)?),
            KernelConfig::Laplace(l) => {
                let domain = Domain::new(&[l.domain[0]], &[l.domain[1]]).map_err(cfg_err)?;
                KernelSpec::Laplace(DiscreteLaplace::uniform(l.samples, l.s_max, l.normalized, domain).map_err(cfg_err)?)
            }
        })
    }

    /// Number of planes of the observation layout (1 for 1-D kernels).
    pub fn planes(&self) -> usize {
        match &self.kernel {
            KernelConfig::Astigmatism(m) | KernelConfig::DoubleHelix(m) | KernelConfig::MaTirf(m) => m.planes,
            _ => 1,
        }
    }

    pub fn microscopy(&self) -> Option<&MicroscopyConfig> {
        match &self.kernel {
            KernelConfig::Astigmatism(m) | KernelConfig::DoubleHelix(m) | KernelConfig::MaTirf(m) => Some(m),
            _ => None,
        }
    }

    pub fn sfw_config(&self) -> SfwConfig {
        let s = &self.solver;
        SfwConfig {
            max_outer: s.max_outer,
            lasso: LassoConfig {
                max_iter: s.lasso_max_iter,
                rel_tol: s.lasso_rel_tol,
                sign_mode: if s.positive { SignMode::Nonnegative } else { SignMode::Free },
            },
            descent: DescentConfig { max_iter: s.descent_max_iter, grad_tol: s.descent_grad_tol, memory: s.descent_memory },
            argmax: ArgmaxConfig { max_iter: s.argmax_max_iter, ..ArgmaxConfig::default() },
            stop_tol: s.stop_tol,
            prune_rel: s.prune_rel,
            grid: None,
        }
    }

    /// Noise parameters on the stream of frame `f`.
    pub fn noise_config(&self, f: usize) -> NoiseConfig {
        NoiseConfig { n_photon: self.noise.n_photon, variance: self.noise.variance, seed: self.seed, stream: 0 }
            .for_frame(f)
    }
}

impl KernelConfig {
    pub fn model_name(&self) -> &'static str {
        match self {
            KernelConfig::Astigmatism(_) => "astigmatism",
            KernelConfig::DoubleHelix(_) => "double-helix",
            KernelConfig::MaTirf(_) => "ma-tirf",
            KernelConfig::Gaussian1d(_) => "gaussian1d",
            KernelConfig::Laplace(_) => "laplace",
        }
    }
}

impl MicroscopyConfig {
    pub fn detector(&self) -> Detector {
        Detector { extent: self.extent, pixels: self.pixels }
    }

    pub fn optics(&self) -> Optics {
        Optics {
            numerical_aperture: self.numerical_aperture,
            n_incident: self.n_incident,
            n_transmitted: self.n_transmitted,
            wavelength: self.wavelength,
        }
    }
}

impl From<Penetration> for PenetrationModel {
    fn from(p: Penetration) -> Self {
        match p {
            Penetration::Verbatim => PenetrationModel::Verbatim,
            Penetration::SquareRoot => PenetrationModel::SquareRoot,
        }
    }
}
