//! Simulation, solver dispatch and artifact emission.

use std::io::Write;
use std::path::{Path, PathBuf};

use cqnpm::operators::{forward, make_radial_trajectory, make_spiral_trajectory};
use cqnpm::{ComplexImage, ForwardModel, IterationRecord, KSpaceData, Method, SolveOutput, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{ExperimentConfig, TrajectoryKind};
use crate::image_io::save_image;
use crate::phantom::{make_phantom, make_sensitivities};
use crate::BenchError;

pub const CSV_HEADER: [&str; 5] = ["iter", "time_s", "cost", "psnr", "inner_iters"];

pub struct Simulation {
    pub truth: ComplexImage,
    pub model: ForwardModel,
    pub data: KSpaceData,
}

/// Adds complex Gaussian noise whose real and imaginary parts are each
/// `N(0, variance/2)`.
pub fn add_noise(samples: &mut [C64], variance: f64, seed: u64) {
    if variance == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, (variance / 2.0).sqrt()).expect("finite nonnegative deviation");
    for s in samples.iter_mut() {
        let re = normal.sample(&mut rng);
        let im = normal.sample(&mut rng);
        *s += C64::new(re, im);
    }
}

pub fn simulate(config: &ExperimentConfig) -> Result<Simulation, BenchError> {
    config.validate()?;
    let truth = make_phantom(config.size)?;
    let trajectory = match config.trajectory {
        TrajectoryKind::Radial => make_radial_trajectory(config.spokes, config.readout),
        TrajectoryKind::Spiral => make_spiral_trajectory(config.interleaves, config.readout),
    }
    .map_err(BenchError::from_config)?;
    let maps = make_sensitivities(config.size, config.coils)?;
    let model = ForwardModel::new(trajectory, maps)?;
    let mut data = forward(&model, &truth)?;
    add_noise(&mut data.samples, config.noise_var, config.seed);
    Ok(Simulation { truth, model, data })
}

pub struct MethodRun {
    pub method: Method,
    pub outcome: Result<SolveOutput, cqnpm::Error>,
}

pub struct RunArtifact {
    pub config: ExperimentConfig,
    pub runs: Vec<MethodRun>,
}

impl RunArtifact {
    pub fn all_succeeded(&self) -> bool {
        self.runs.iter().all(|r| r.outcome.is_ok())
    }

    pub fn records(&self, method: Method) -> Option<&[IterationRecord]> {
        self.runs
            .iter()
            .find(|r| r.method == method)
            .and_then(|r| r.outcome.as_ref().ok())
            .map(|o| o.records.as_slice())
    }
}

/// Runs every configured method, sequentially, on the same simulated data.
/// A failing method is recorded and does not stop the others.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifact, BenchError> {
    let sim = simulate(config)?;
    let runs = config
        .methods
        .iter()
        .map(|&method| MethodRun {
            method,
            outcome: cqnpm::solvers::solve(&sim.model, &sim.data, &config.solver_config(method), Some(&sim.truth)),
        })
        .collect();
    let artifact = RunArtifact { config: config.clone(), runs };
    if let Some(dir) = &config.out {
        write_artifact(dir, &artifact, &sim.truth)?;
    }
    Ok(artifact)
}

pub fn write_records<W: Write>(w: W, records: &[IterationRecord]) -> Result<(), BenchError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(CSV_HEADER)?;
    for r in records {
        csv.write_record([
            r.iter.to_string(),
            format!("{:?}", r.time_s),
            format!("{:?}", r.cost),
            format!("{:?}", r.psnr),
            r.inner_iters.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn csv_path(dir: &Path, method: Method) -> PathBuf {
    dir.join(format!("{}.csv", method.name()))
}

/// Writes `<method>.csv`, `<method>.img`, `truth.img` and `manifest.txt`.
pub fn write_artifact(dir: &Path, artifact: &RunArtifact, truth: &ComplexImage) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir)?;
    save_image(&dir.join("truth.img"), truth)?;
    let mut manifest = String::from("# experiment configuration\n");
    manifest.push_str(&artifact.config.emit());
    manifest.push_str("\n# results\n");
    for run in &artifact.runs {
        match &run.outcome {
            Ok(out) => {
                write_records(std::fs::File::create(csv_path(dir, run.method))?, &out.records)?;
                save_image(&dir.join(format!("{}.img", run.method.name())), &out.image)?;
                let last = out.records.last().expect("records always include iteration 0");
                manifest.push_str(&format!(
                    "# {}: ok, {} iterations, final cost {:?}, final psnr {:?}\n",
                    run.method,
                    last.iter,
                    last.cost,
                    last.psnr
                ));
            }
            Err(e) => manifest.push_str(&format!("# {}: failed: {e}\n", run.method)),
        }
    }
    std::fs::write(dir.join("manifest.txt"), manifest)?;
    Ok(())
}
