//! `sfw simulate`: phantom, activation frames and noisy acquisitions.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sfw_core::kernels::Kernel;
use sfw_core::simulation::{
    apply_noise, default_curves, generate_phantom, partition_activations, render_noiseless, NOISE_STREAM_BASE,
    PARTITION_STREAM, PHANTOM_STREAM,
};

use crate::config::RunConfig;
use crate::io::{write_frames, write_json, write_localizations};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub rng: String,
    pub phantom_stream: u64,
    pub partition_stream: u64,
    pub noise_stream_base: u64,
    pub frames: usize,
    pub observation_length: usize,
    pub planes: usize,
    pub dropped_molecules: usize,
    /// Photon scale factor applied to each noiseless frame (1 without noise).
    pub scale_factors: Vec<f64>,
    pub frame_files: Vec<String>,
    pub ground_truth: String,
}

pub fn frame_file_name(f: usize) -> String {
    format!("frame_{f:05}.bin")
}

/// Removes frame files left by an earlier run in `dir`.
fn clear_frames(dir: &Path) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("frame_") && name.ends_with(".bin") {
            fs::remove_file(&path)?;
        }
    }
    Ok(())
}

pub fn run(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<Manifest, CliError> {
    let Some(micro) = cfg.microscopy() else {
        return Err(CliError::Config("simulate needs a microscopy kernel (astigmatism, double-helix or ma-tirf)".into()));
    };
    let kernel = cfg.kernel_spec()?;
    let domain = micro.detector().validate()?;
    let sim = &cfg.simulation;
    let phantom =
        generate_phantom(&default_curves(micro.extent), &domain, sim.n_total, sim.jitter_radius, cfg.seed)?;
    let partition = partition_activations(&phantom, sim.molecules_per_frame, cfg.seed)?;
    if partition.dropped > 0 {
        eprintln!(
            "warning: {} molecules dropped ({} is not a multiple of {})",
            partition.dropped, sim.n_total, sim.molecules_per_frame
        );
    }
    let planes = cfg.planes();
    let rendered: Vec<Result<(Vec<f64>, f64), sfw_core::Error>> = pool.install(|| {
        partition
            .frames
            .par_iter()
            .map(|set| {
                let y0 = render_noiseless(&kernel, &set.measure)?;
                if cfg.noise.enabled {
                    let noisy = apply_noise(&y0, planes, &cfg.noise_config(set.frame))?;
                    Ok((noisy.y, noisy.scale))
                } else {
                    Ok((y0, 1.0))
                }
            })
            .collect()
    });
    let frames_dir: PathBuf = cfg.out_dir.join("frames");
    fs::create_dir_all(&frames_dir)?;
    clear_frames(&frames_dir)?;
    let m = kernel.obs_dim();
    let mut scale_factors = Vec::with_capacity(rendered.len());
    let mut frame_files = Vec::with_capacity(rendered.len());
    for (set, r) in partition.frames.iter().zip(rendered) {
        let (y, scale) = r?;
        let name = frame_file_name(set.frame);
        write_frames(&frames_dir.join(&name), m, &[y])?;
        scale_factors.push(scale);
        frame_files.push(format!("frames/{name}"));
    }
    let truth: Vec<_> = partition.frames.iter().map(|s| (s.frame, s.measure.clone())).collect();
    write_localizations(&cfg.out_dir.join("ground_truth.csv"), &truth)?;
    let manifest = Manifest {
        config: cfg.clone(),
        rng: "ChaCha20 (rand_chacha), seed_from_u64(seed) then set_stream(stream)".into(),
        phantom_stream: PHANTOM_STREAM,
        partition_stream: PARTITION_STREAM,
        noise_stream_base: NOISE_STREAM_BASE,
        frames: partition.frames.len(),
        observation_length: m,
        planes,
        dropped_molecules: partition.dropped,
        scale_factors,
        frame_files,
        ground_truth: "ground_truth.csv".into(),
    };
    write_json(&cfg.out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
