use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use locepi::genome::Coding;
use locepi::kernel::{Bandwidth, KernelFunction};
use locepi::sim::SimConfig;
use locepi::spmm::{Method, Structure};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub data: DataConfig,
    pub kernel: KernelConfig,
    pub partition: PartitionConfig,
    pub fit: FitConfig,
    pub scan: ScanConfig,
    pub test: TestConfig,
    pub combine: CombineConfig,
    pub predict: PredictConfig,
    pub select: SelectConfig,
    pub cross: CrossConfig,
    pub simulate: SimConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            out: PathBuf::from("run"),
            threads: 1,
            data: DataConfig::default(),
            kernel: KernelConfig::default(),
            partition: PartitionConfig::default(),
            fit: FitConfig::default(),
            scan: ScanConfig::default(),
            test: TestConfig::default(),
            combine: CombineConfig::default(),
            predict: PredictConfig::default(),
            select: SelectConfig::default(),
            cross: CrossConfig::default(),
            simulate: SimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub markers: PathBuf,
    pub map: PathBuf,
    pub phenotype: PathBuf,
    pub coding: Coding,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            markers: PathBuf::from("markers.csv"),
            map: PathBuf::from("map.csv"),
            phenotype: PathBuf::from("phenotype.csv"),
            coding: Coding::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionName {
    Linear,
    Polynomial,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub function: FunctionName,
    /// Polynomial offset.
    pub c: f64,
    pub degree: u32,
    /// Gaussian bandwidth; the median squared distance when absent.
    pub bandwidth: Option<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            function: FunctionName::Linear,
            c: 1.0,
            degree: 2,
            bandwidth: None,
        }
    }
}

impl KernelConfig {
    pub fn function(&self) -> KernelFunction {
        match self.function {
            FunctionName::Linear => KernelFunction::Linear,
            FunctionName::Polynomial => KernelFunction::Polynomial {
                c: self.c,
                degree: self.degree,
            },
            FunctionName::Gaussian => KernelFunction::Gaussian {
                bandwidth: match self.bandwidth {
                    Some(h) => Bandwidth::Fixed(h),
                    None => Bandwidth::Median,
                },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    pub levels: usize,
    pub splits: usize,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig { levels: 2, splits: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub method: Method,
    pub structure: Structure,
    pub pc_count: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            method: Method::Reml,
            structure: Structure::Marginal,
            pc_count: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    /// Every `stride`-th mapped marker is a scan center.
    pub stride: usize,
    /// Locality bandwidth in cM^2: weights are `exp(-d^2 / bandwidth)`.
    pub bandwidth: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            stride: 1,
            bandwidth: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcedureName {
    Meinshausen,
    Threshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestConfig {
    pub alpha: f64,
    pub procedure: ProcedureName,
    pub h2_floor: f64,
    /// Fit nodes below the root against the remaining markers.
    pub marginal: bool,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            alpha: 0.05,
            procedure: ProcedureName::Meinshausen,
            h2_floor: 0.01,
            marginal: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CombineConfig {
    pub n_lambda: usize,
    pub folds: usize,
    pub lambda2: f64,
    /// Use only regions rejected by the hierarchical test.
    pub significant_only: bool,
    /// Fixed `lambda1` instead of cross-validation.
    pub lambda1: Option<f64>,
}

impl Default for CombineConfig {
    fn default() -> Self {
        CombineConfig {
            n_lambda: 50,
            folds: 5,
            lambda2: 0.0,
            significant_only: false,
            lambda1: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictConfig {
    /// Marker file of the lines to predict, with the training marker ids.
    pub markers: Option<PathBuf>,
    /// A saved combined model; refitted from the training data when absent.
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectConfig {
    pub h1: f64,
    pub h2: f64,
    /// Tree level whose regions enter the indices; the deepest when absent.
    pub level: Option<usize>,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig {
            h1: 1.0,
            h2: 1.0,
            level: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossConfig {
    /// Explicit parent pairs by line id.
    pub pairs: Vec<(String, String)>,
    /// Without explicit pairs, cross all pairs among this many lines with
    /// the highest total EBLUP.
    pub top: usize,
    pub n_samples: usize,
    pub dump_samples: bool,
    pub level: Option<usize>,
}

impl Default for CrossConfig {
    fn default() -> Self {
        CrossConfig {
            pairs: Vec::new(),
            top: 5,
            n_samples: 10_000,
            dump_samples: false,
            level: None,
        }
    }
}

impl RunConfig {
    /// Parse a config file; relative data paths are resolved against its
    /// directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {}", path.display(), e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.data.markers);
        fix(&mut cfg.data.map);
        fix(&mut cfg.data.phenotype);
        if let Some(p) = cfg.predict.markers.as_mut() {
            fix(p);
        }
        if let Some(p) = cfg.predict.model.as_mut() {
            fix(p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.partition.levels == 0 || self.partition.splits < 2 {
            bail!("partition needs levels >= 1 and splits >= 2");
        }
        if !(self.test.alpha > 0.0 && self.test.alpha < 1.0) {
            bail!("test.alpha must lie in (0, 1), got {}", self.test.alpha);
        }
        if !(0.0..=1.0).contains(&self.test.h2_floor) {
            bail!("test.h2_floor must lie in [0, 1], got {}", self.test.h2_floor);
        }
        if self.scan.stride == 0 || !(self.scan.bandwidth > 0.0) {
            bail!("scan needs stride >= 1 and bandwidth > 0");
        }
        if self.combine.n_lambda < 2 || self.combine.folds < 2 || !(self.combine.lambda2 >= 0.0) {
            bail!("combine needs n_lambda >= 2, folds >= 2 and lambda2 >= 0");
        }
        if !(self.select.h1 > 0.0 && self.select.h2 > 0.0) {
            bail!("select.h1 and select.h2 must be positive");
        }
        if self.cross.n_samples == 0 {
            bail!("cross.n_samples must be positive");
        }
        if self.kernel.function == FunctionName::Polynomial && self.kernel.degree == 0 {
            bail!("polynomial degree must be at least 1");
        }
        Ok(())
    }

    /// Fail early on missing input files.
    pub fn require_inputs(&self, with_phenotype: bool) -> Result<()> {
        let mut need = vec![&self.data.markers, &self.data.map];
        if with_phenotype {
            need.push(&self.data.phenotype);
        }
        for p in need {
            if !p.is_file() {
                bail!("input file {} does not exist", p.display());
            }
        }
        Ok(())
    }
}
