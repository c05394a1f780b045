use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use foliate::features::{feature_names, radar_svg, read_features_csv, write_features_csv, FeatureError, FeatureVector, HeightPolicy};
use foliate::generate::{doubled, flat_torus, genus2, holed_sphere, jitter, Generated};
use foliate::mesh::io::{load_mesh_auto, save_mesh, write_curves};
use foliate::pipeline::{run_features, RunConfig, SurfaceSpec};
use foliate::svm::{baseline_features, cross_validate, results_csv, Baseline, Dataset, DEFAULT_FOLD_SEED};
use foliate::Error;

#[derive(Parser)]
#[command(name = "foliate", version, about = "Conformal cylinder features of triangulated surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Heights {
    CurveLength,
    Uniform,
}

#[derive(Subcommand)]
enum Command {
    /// Print genus, boundary count and Euler characteristic.
    Inspect {
        mesh: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run the pipeline and write features.csv, baseline CSVs and diagnostics.json.
    Features {
        /// JSON run config; other flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Mesh files (used when no config is given).
        #[arg(long = "mesh")]
        meshes: Vec<PathBuf>,
        /// Curve files, one per mesh, in the same order.
        #[arg(long = "curves")]
        curves: Vec<PathBuf>,
        /// Class label per mesh, in the same order.
        #[arg(long = "label")]
        labels: Vec<String>,
        /// Subject id per mesh, in the same order; defaults to the file stem.
        #[arg(long = "subject")]
        subjects: Vec<String>,
        #[arg(long, value_enum)]
        heights: Option<Heights>,
        /// Explicit comma-separated heights, overriding --heights.
        #[arg(long, value_delimiter = ',')]
        height_list: Option<Vec<f64>>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_sweeps: Option<usize>,
        #[arg(long, short)]
        output_dir: Option<PathBuf>,
    },
    /// Cross-validated linear SVM accuracy, as a method,accuracy table.
    Classify {
        features: PathBuf,
        /// Extra single-method feature CSVs (e.g. baseline_area.csv) to score alongside.
        #[arg(long = "baseline")]
        baselines: Vec<PathBuf>,
        #[arg(long, short, default_value_t = 10)]
        k: usize,
        #[arg(long, short, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = DEFAULT_FOLD_SEED)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Radar chart of two subjects from a feature CSV.
    Radar {
        features: PathBuf,
        a: String,
        b: String,
        #[arg(long, short, default_value = "radar.svg")]
        out: PathBuf,
    },
    /// Write a synthetic surface (mesh.off) and its curves (curves.txt).
    Generate {
        #[command(subcommand)]
        kind: Kind,
        #[arg(long, short, default_value = ".", global = true)]
        out: PathBuf,
        /// Vertex noise relative to the mean edge length.
        #[arg(long, default_value_t = 0.0, global = true)]
        jitter: f64,
        #[arg(long, default_value_t = 0, global = true)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum Kind {
    FlatTorus {
        #[arg(default_value_t = 3.0)]
        circumference: f64,
        #[arg(default_value_t = 1.0)]
        height: f64,
        #[arg(default_value_t = 64)]
        res: usize,
    },
    Genus2 {
        #[arg(default_value_t = 2)]
        res: usize,
    },
    HoledSphere {
        #[arg(default_value_t = 6)]
        holes: usize,
        #[arg(default_value_t = 3)]
        res: usize,
    },
    Doubled {
        mesh: PathBuf,
    },
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn inspect(mesh: &Path, json: bool) -> Result<(), Error> {
    let m = load_mesh_auto(mesh)?;
    let t = m.topology();
    if json {
        let report = serde_json::json!({ "genus": t.genus, "boundaries": t.boundary_loops.len(), "chi": t.euler });
        println!("{report}");
    } else {
        println!("genus={} boundaries={} chi={}", t.genus, t.boundary_loops.len(), t.euler);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn features(
    config: Option<PathBuf>,
    meshes: Vec<PathBuf>,
    curves: Vec<PathBuf>,
    labels: Vec<String>,
    subjects: Vec<String>,
    heights: Option<Heights>,
    height_list: Option<Vec<f64>>,
    tol: Option<f64>,
    max_sweeps: Option<usize>,
    output_dir: Option<PathBuf>,
) -> Result<(), Error> {
    let mut config = match config {
        Some(p) => RunConfig::load(&p)?,
        None => {
            if !curves.is_empty() && curves.len() != meshes.len() {
                return Err(Error::Config(format!("{} meshes but {} curve files", meshes.len(), curves.len())));
            }
            let surfaces = meshes
                .iter()
                .enumerate()
                .map(|(i, m)| SurfaceSpec {
                    mesh: m.clone(),
                    curves: curves.get(i).cloned(),
                    subject: subjects.get(i).cloned(),
                    label: labels.get(i).cloned().unwrap_or_default(),
                })
                .collect();
            RunConfig::from_json(r#"{"surfaces": []}"#).map(|c| RunConfig { surfaces, ..c })?
        }
    };
    match (height_list, heights) {
        (Some(h), _) => config.pipeline.heights = HeightPolicy::Explicit(h),
        (None, Some(Heights::Uniform)) => config.pipeline.heights = HeightPolicy::Uniform,
        (None, Some(Heights::CurveLength)) => config.pipeline.heights = HeightPolicy::CurveLength,
        (None, None) => {}
    }
    config.pipeline.tol = tol.unwrap_or(config.pipeline.tol);
    config.pipeline.max_sweeps = max_sweeps.unwrap_or(config.pipeline.max_sweeps);
    if let Some(d) = output_dir {
        config.output_dir = d;
    }
    let (csv, diagnostics) = run_features(&config)?;
    let out = &config.output_dir;
    write(&out.join("features.csv"), &csv)?;
    write(&out.join("diagnostics.json"), &serde_json::to_string_pretty(&diagnostics).expect("serializable"))?;
    let meshes = config
        .surfaces
        .par_iter()
        .map(|s| load_mesh_auto(&s.mesh))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<_> = meshes.iter().collect();
    for kind in [Baseline::Area, Baseline::MeanCurvature] {
        let values = baseline_features(&refs, kind)?;
        let rows: Vec<FeatureVector> = config
            .surfaces
            .iter()
            .zip(values)
            .map(|(s, v)| FeatureVector { subject: s.subject_id(), label: s.label.clone(), features: vec![v] })
            .collect();
        write(&out.join(format!("baseline_{}.csv", kind.name())), &write_features_csv(&rows)?)?;
    }
    print!("{csv}");
    Ok(())
}

fn method_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().trim_start_matches("baseline_").to_string()).unwrap_or_default()
}

fn classify(features: &Path, baselines: &[PathBuf], k: usize, c: f64, seed: u64, out: Option<PathBuf>) -> Result<(), Error> {
    let mut results = Vec::new();
    let main = Dataset::from_features(&read_features_csv(&read(features)?)?)?;
    results.push(("foliation".to_string(), cross_validate(&main, k, c, seed)?.accuracy));
    for b in baselines {
        let data = Dataset::from_features(&read_features_csv(&read(b)?)?)?;
        results.push((method_name(b), cross_validate(&data, k, c, seed)?.accuracy));
    }
    let table = results_csv(&results);
    if let Some(p) = out {
        write(&p, &table)?;
    }
    print!("{table}");
    Ok(())
}

fn radar(features: &Path, a: &str, b: &str, out: &Path) -> Result<(), Error> {
    let rows = read_features_csv(&read(features)?)?;
    let find = |id: &str| {
        rows.iter().find(|r| r.subject == id).cloned().ok_or_else(|| FeatureError::UnknownSubject(id.to_string()))
    };
    let (ra, rb) = (find(a)?, find(b)?);
    let svg = radar_svg(&ra, &rb, &feature_names(ra.dim()))?;
    write(out, &svg)
}

fn generate(kind: Kind, out: &Path, sigma: f64, seed: u64) -> Result<(), Error> {
    let g: Generated = match kind {
        Kind::FlatTorus { circumference, height, res } => flat_torus(circumference, height, res)?,
        Kind::Genus2 { res } => genus2(res)?,
        Kind::HoledSphere { holes, res } => holed_sphere(holes, res)?,
        Kind::Doubled { mesh } => doubled(&load_mesh_auto(&mesh)?)?,
    };
    let mesh = jitter(&g.mesh, sigma, seed);
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    save_mesh(&mesh, &out.join("mesh.off"))?;
    write(&out.join("curves.txt"), &write_curves(&g.curves))?;
    let t = mesh.topology();
    let mut info = serde_json::json!({
        "genus": t.genus,
        "boundaries": t.boundary_loops.len(),
        "chi": t.euler,
        "curves": g.curves.len(),
    });
    if let Some(m) = g.module {
        info["module"] = m.into();
    }
    println!("{info}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Inspect { mesh, json } => inspect(&mesh, json),
        Command::Features { config, meshes, curves, labels, subjects, heights, height_list, tol, max_sweeps, output_dir } => {
            features(config, meshes, curves, labels, subjects, heights, height_list, tol, max_sweeps, output_dir)
        }
        Command::Classify { features, baselines, k, c, seed, out } => classify(&features, &baselines, k, c, seed, out),
        Command::Radar { features, a, b, out } => radar(&features, &a, &b, &out),
        Command::Generate { kind, out, jitter, seed } => generate(kind, &out, jitter, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = serde_json::json!({ "error": e.to_string().trim(), "kind": "Usage", "module": "cli_pipeline", "exit_code": 2 });
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
