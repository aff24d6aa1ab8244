//! Subcommands. Each one loads its inputs, makes the matching library call
//! and writes the result; exit code 1 is a usage error, 2 a data error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use memread::diagnostics::{self, GridSpec, DEFAULT_RESOLUTION};
use memread::io::{self, Column, Tensor};
use memread::membank::{simulate_costs, Architecture, SchedulePolicy};
use memread::readout::{self, AffinityMatrix, Temperature, DEFAULT_TOPK};
use memread::similarity::{self, ScoreMatrix, SimilarityMeasure};
use memread::synth::{self, DriftSpec, SceneSpec};
use memread::{costmodel, KeySet, Matrix, ShapeSpec, ValueSet};

pub const USAGE_ERROR: u8 = 1;
pub const DATA_ERROR: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "memread", version, about = "Affinity memory-readout kernels and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Measure {
    Dot,
    Cos,
    L2,
    L2fast,
}

impl From<Measure> for SimilarityMeasure {
    fn from(m: Measure) -> Self {
        match m {
            Measure::Dot => SimilarityMeasure::DotProduct,
            Measure::Cos => SimilarityMeasure::Cosine,
            Measure::L2 => SimilarityMeasure::L2Naive,
            Measure::L2fast => SimilarityMeasure::L2Decomposed,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Arch {
    Stm,
    Stcn,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scene {
    Outlier,
    Mixture,
    Drift,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pairwise similarity of memory keys (C×THW) against query keys (C×HW).
    Scores {
        #[arg(long, value_enum, default_value = "l2fast")]
        measure: Measure,
        #[arg(long)]
        mem: PathBuf,
        #[arg(long)]
        query: PathBuf,
        /// Divide by √C^k.
        #[arg(long)]
        scale: bool,
        /// Keep the ‖k^Q‖² term on the l2fast path.
        #[arg(long)]
        include_query_norm: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate memory values through an affinity, given or computed from keys.
    Readout(ReadoutArgs),
    /// FLOP and key-storage table for the similarity measures.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "64,128")]
        ck: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        t: usize,
        #[arg(long, default_value_t = 30)]
        h: usize,
        #[arg(long, default_value_t = 54)]
        w: usize,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "dot,cos,l2fast")]
        measures: Vec<Measure>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encoder and affinity invocation counts for a whole video.
    Schedule {
        #[arg(long)]
        frames: usize,
        #[arg(long, default_value_t = 1)]
        objects: usize,
        #[arg(long, default_value_t = 5)]
        every: usize,
        /// Also read from the previous frame as temporary memory.
        #[arg(long)]
        temporary: bool,
        #[arg(long, value_enum, default_value = "stcn")]
        arch: Arch,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Most similar memory point per grid cell, as x,y,label rows.
    Voronoi(GridArgs),
    /// Softmax weight of each memory point per grid cell, as x,y,node,weight rows.
    Field {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        temperature: Option<f64>,
    },
    /// Gini coefficient of a nonnegative tensor, flattened.
    Gini {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Count of lifetime maxima above each threshold.
    Curve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        thresholds: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate seeded synthetic data.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct ReadoutArgs {
    /// Precomputed affinity (THW×HW, columns summing to 1).
    #[arg(long, conflicts_with_all = ["measure", "mem", "query", "topk", "no_topk", "temperature", "no_scale"])]
    affinity: Option<PathBuf>,
    #[arg(long, value_enum)]
    measure: Option<Measure>,
    #[arg(long)]
    mem: Option<PathBuf>,
    #[arg(long)]
    query: Option<PathBuf>,
    #[arg(long)]
    topk: Option<usize>,
    #[arg(long)]
    no_topk: bool,
    /// Defaults to 0.01 for cos and 1 otherwise.
    #[arg(long)]
    temperature: Option<f64>,
    /// Skip √C^k scaling of dot and L2 scores.
    #[arg(long)]
    no_scale: bool,
    /// One value file (C^v×THW) per object.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<PathBuf>,
    /// One output file per value file.
    #[arg(long, value_delimiter = ',', required = true)]
    out: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// N×2 matrix of points, one per row.
    #[arg(long)]
    points: PathBuf,
    /// x0,x1,y0,y1[,resolution]
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    #[arg(long, value_enum, default_value = "l2fast")]
    measure: Measure,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    scene: Scene,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    clusters: usize,
    #[arg(long, default_value_t = 30)]
    per_cluster: usize,
    #[arg(long, default_value_t = 0.15)]
    spread: f64,
    #[arg(long, default_value_t = 0.0)]
    outlier: f64,
    #[arg(long, default_value_t = 10)]
    frames: usize,
    #[arg(long, default_value_t = 64)]
    ck: usize,
    #[arg(long, default_value_t = 30)]
    h: usize,
    #[arg(long, default_value_t = 54)]
    w: usize,
    #[arg(long, default_value_t = 0.1)]
    drift: f64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

enum Failure {
    Usage(String),
    Data(memread::Error),
}

impl From<memread::Error> for Failure {
    fn from(e: memread::Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome = std::result::Result<String, Failure>;

/// Run one invocation; returns the exit code and the stdout/stderr text.
pub fn run(args: &[String]) -> (u8, String, String) {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    (0, text, String::new())
                }
                _ => (USAGE_ERROR, String::new(), text),
            };
        }
    };
    match dispatch(cli.command) {
        Ok(out) => (0, out, String::new()),
        Err(Failure::Usage(msg)) => (USAGE_ERROR, String::new(), format!("usage error: {msg}\n")),
        Err(Failure::Data(e)) => (DATA_ERROR, String::new(), format!("error: {e}\n")),
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Scores { measure, mem, query, scale, include_query_norm, out } => {
            let mem = KeySet::new(io::read_matrix(&mem)?);
            let query = KeySet::new(io::read_matrix(&query)?);
            let measure = SimilarityMeasure::from(measure);
            let mut s = match measure {
                SimilarityMeasure::L2Decomposed => similarity::l2_scores_fast(&mem, &query, include_query_norm)?,
                m => similarity::pairwise_scores(&mem, &query, m)?,
            };
            if scale {
                s = similarity::scale_scores(&s, mem.channels())?;
            }
            io::write_matrix(&out, &s.matrix)?;
            Ok(String::new())
        }
        Command::Readout(args) => readout_command(args),
        Command::Bench { ck, t, h, w, measures, out } => {
            let mut rows = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for &c in &ck {
                let shape = ShapeSpec::new(c, 512, t, h, w)?;
                for &m in &measures {
                    let m = SimilarityMeasure::from(m);
                    rows.0.push(m.name().to_string());
                    rows.1.push(c as i64);
                    rows.2.push(t as i64);
                    rows.3.push(h as i64);
                    rows.4.push(w as i64);
                    rows.5.push(costmodel::similarity_flops(m, c, &shape) as i64);
                    rows.6.push(costmodel::key_storage_bytes(c, &shape) as i64);
                }
            }
            emit_csv(
                out,
                &[
                    Column::text("measure", rows.0),
                    Column::int("ck", rows.1),
                    Column::int("T", rows.2),
                    Column::int("H", rows.3),
                    Column::int("W", rows.4),
                    Column::int("flops", rows.5),
                    Column::int("key_bytes", rows.6),
                ],
            )
        }
        Command::Schedule { frames, objects, every, temporary, arch, out } => {
            let policy = SchedulePolicy::new(every, temporary).map_err(|e| Failure::Usage(e.to_string()))?;
            let architecture = match arch {
                Arch::Stm => Architecture::Stm,
                Arch::Stcn => Architecture::Stcn,
            };
            let r =
                simulate_costs(frames, objects, &policy, architecture).map_err(|e| Failure::Usage(e.to_string()))?;
            emit_csv(
                out,
                &[
                    Column::text("architecture", vec![r.architecture.name().into()]),
                    Column::int("frames", vec![frames as i64]),
                    Column::int("objects", vec![objects as i64]),
                    Column::int("every", vec![every as i64]),
                    Column::int("temporary", vec![temporary as i64]),
                    Column::int("key_encoder_calls", vec![r.key_encoder_calls as i64]),
                    Column::int("value_encoder_calls", vec![r.value_encoder_calls as i64]),
                    Column::int("affinity_computations", vec![r.affinity_computations as i64]),
                ],
            )
        }
        Command::Voronoi(args) => {
            let (points, grid) = load_grid_inputs(&args)?;
            let labels = diagnostics::argmax_labels(&points, &grid, args.measure.into())?;
            let centers = grid.centers();
            emit_csv(
                args.out,
                &[
                    Column::float("x", centers.iter().map(|c| c[0]).collect()),
                    Column::float("y", centers.iter().map(|c| c[1]).collect()),
                    Column::int("label", labels.labels.iter().map(|&l| l as i64).collect()),
                ],
            )
        }
        Command::Field { grid: args, temperature } => {
            let (points, grid) = load_grid_inputs(&args)?;
            let measure = SimilarityMeasure::from(args.measure);
            let tau = temperature_or_default(temperature, measure)?;
            let field = diagnostics::contribution_field(&points, &grid, measure, tau)?;
            let n = field.node_count;
            let centers = grid.centers();
            let cells = centers.len() * n;
            emit_csv(
                args.out,
                &[
                    Column::float("x", (0..cells).map(|k| centers[k / n][0]).collect()),
                    Column::float("y", (0..cells).map(|k| centers[k / n][1]).collect()),
                    Column::int("node", (0..cells).map(|k| (k % n) as i64).collect()),
                    Column::float("weight", field.weights),
                ],
            )
        }
        Command::Gini { input } => {
            let values: Vec<f64> = io::read_tensor(&input)?.data().iter().map(|&x| x as f64).collect();
            let g = diagnostics::gini(&values)?;
            Ok(format!("{}\n", io::format_float(g)))
        }
        Command::Curve { input, thresholds, out } => {
            let maxima = io::read_tensor(&input)?.data().iter().map(|&x| x as f64).collect();
            let record = diagnostics::ContributionRecord { lifetime_max: maxima };
            let counts = diagnostics::coverage_curve(&record, &thresholds)?;
            emit_csv(
                out,
                &[
                    Column::float("threshold", thresholds),
                    Column::int("count", counts.iter().map(|&c| c as i64).collect()),
                ],
            )
        }
        Command::Synth(args) => synth_command(args),
    }
}

fn readout_command(args: ReadoutArgs) -> Outcome {
    if args.values.len() != args.out.len() {
        return Err(Failure::Usage(format!("{} value files but {} output paths", args.values.len(), args.out.len())));
    }
    let weights = match (&args.affinity, &args.mem, &args.query) {
        (Some(path), _, _) => AffinityMatrix::from_weights(io::read_matrix(path)?, 1e-5)?,
        (None, Some(mem), Some(query)) => {
            let mem = KeySet::new(io::read_matrix(mem)?);
            let query = KeySet::new(io::read_matrix(query)?);
            let measure = args.measure.map_or(SimilarityMeasure::L2Decomposed, SimilarityMeasure::from);
            let mut scores: ScoreMatrix<f32> = similarity::readout_scores(&mem, &query, measure)?;
            if !args.no_scale && measure != SimilarityMeasure::Cosine {
                scores = similarity::scale_scores(&scores, mem.channels())?;
            }
            let topk = if args.no_topk { None } else { Some(args.topk.unwrap_or(DEFAULT_TOPK)) };
            if topk == Some(0) {
                return Err(Failure::Usage("--topk must be at least 1".into()));
            }
            readout::affinity(&scores, topk, temperature_or_default(args.temperature, measure)?)?
        }
        _ => return Err(Failure::Usage("give --affinity, or both --mem and --query".into())),
    };
    let values =
        args.values.iter().map(|p| io::read_matrix(p).map(ValueSet::new)).collect::<memread::Result<Vec<_>>>()?;
    let outs = readout::readout_multi(&values, &weights, None)?;
    for (path, v) in args.out.iter().zip(&outs) {
        io::write_matrix(path, v.matrix())?;
    }
    Ok(String::new())
}

fn synth_command(args: SynthArgs) -> Outcome {
    let tensor = match args.scene {
        Scene::Outlier => points_tensor(&synth::outlier_scene::<f32>(args.seed))?,
        Scene::Mixture => {
            let spec = SceneSpec {
                cluster_count: args.clusters,
                points_per_cluster: args.per_cluster,
                cluster_spread: args.spread,
                outlier_magnitude: args.outlier,
                seed: args.seed,
            };
            points_tensor(&synth::gaussian_mixture::<f32>(&spec)?)?
        }
        Scene::Drift => {
            let spec = DriftSpec {
                length: args.frames,
                shape: ShapeSpec::new(args.ck, 1, 1, args.h, args.w)?,
                drift_rate: args.drift,
                noise_scale: args.noise,
                seed: args.seed,
            };
            let frames = synth::drifting_key_sequence::<f32>(&spec)?;
            Tensor::stack(&frames.iter().map(|k| k.matrix()).collect::<Vec<_>>())?
        }
    };
    io::write_tensor(&args.out, &tensor)?;
    Ok(String::new())
}

fn points_tensor(points: &[[f32; 2]]) -> memread::Result<Tensor> {
    Ok(Tensor::from_matrix(&Matrix::from_fn(points.len(), 2, |i, c| points[i][c])?))
}

fn load_grid_inputs(args: &GridArgs) -> std::result::Result<(Vec<[f32; 2]>, GridSpec), Failure> {
    let grid = parse_grid(&args.grid)?;
    let m = io::read_matrix(&args.points)?;
    if m.cols() != 2 {
        return Err(Failure::Data(memread::Error::Dimension(format!(
            "points file must be N×2, got {}×{}",
            m.rows(),
            m.cols()
        ))));
    }
    let points = (0..m.rows()).map(|i| [m.get(i, 0), m.get(i, 1)]).collect();
    Ok((points, grid))
}

fn parse_grid(text: &str) -> std::result::Result<GridSpec, Failure> {
    let usage = |why: &str| Failure::Usage(format!("--grid {text:?}: {why} (expected x0,x1,y0,y1[,resolution])"));
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 && parts.len() != 5 {
        return Err(usage("wrong number of fields"));
    }
    let bounds = parts[..4]
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| usage("bounds must be numbers")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let resolution = match parts.get(4) {
        Some(r) => r.parse::<usize>().map_err(|_| usage("resolution must be an integer"))?,
        None => DEFAULT_RESOLUTION,
    };
    GridSpec::new((bounds[0], bounds[1]), (bounds[2], bounds[3]), resolution).map_err(|e| usage(&e.to_string()))
}

fn temperature_or_default(value: Option<f64>, measure: SimilarityMeasure) -> std::result::Result<Temperature, Failure> {
    match value {
        Some(v) => Temperature::new(v).map_err(|e| Failure::Usage(e.to_string())),
        None => Ok(Temperature::default_for(measure)),
    }
}

fn emit_csv(out: Option<PathBuf>, columns: &[Column]) -> Outcome {
    match out {
        Some(path) => {
            io::write_csv(path, columns)?;
            Ok(String::new())
        }
        None => Ok(io::csv_string(columns)?),
    }
}
