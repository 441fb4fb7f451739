//! Command-line interface: generate test fields, inspect them, and run the
//! seeding + tracing pipeline into SVG / polydata figures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nemvis::pipeline::{generate, run_pipeline, seed_stage, trace_stage, GenCase, GenParams,
    PipelineParams};
use nemvis::render::io::{read_field, read_template, write_field, write_template};
use nemvis::render::polydata::write_polydata;
use nemvis::render::svg::write_svg;
use nemvis::tensor::westin_of;
use nemvis::topology::detect_defects;

#[derive(Parser)]
#[command(name = "nemvis", version, about = "Hyperstreamline visualization of nematic alignment tensor fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    UniformCircle,
    TwoDefectCircle,
    ManyDefectSquare,
}

impl From<CaseArg> for GenCase {
    fn from(c: CaseArg) -> GenCase {
        match c {
            CaseArg::UniformCircle => GenCase::UniformCircle,
            CaseArg::TwoDefectCircle => GenCase::TwoDefectCircle,
            CaseArg::ManyDefectSquare => GenCase::ManyDefectSquare,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a test field and write it as .qtf
    Gen {
        /// scenario to generate
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long)]
        nx: usize,
        #[arg(long)]
        ny: usize,
        /// nematic coherence length (default per scenario)
        #[arg(long)]
        ln: Option<f64>,
        /// relaxation step count (default per scenario)
        #[arg(long)]
        steps: Option<usize>,
        /// PRNG seed for the random scenario
        #[arg(long)]
        seed_prng: Option<u64>,
        /// output field path
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print grid stats, Westin metric histograms, and the defect list
    Info {
        field: PathBuf,
        /// planar-anisotropy detection threshold
        #[arg(long)]
        cp_threshold: Option<f64>,
    },
    /// Build the topological template and seed points
    Seed {
        field: PathBuf,
        #[command(flatten)]
        params: SeedArgs,
        /// output template path
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Trace hyperstreamlines from a template and render them
    Trace {
        field: PathBuf,
        #[arg(long)]
        template: PathBuf,
        /// integration step (default: half a grid cell)
        #[arg(long)]
        step: Option<f64>,
        /// degeneracy stop on the linear-anisotropy metric
        #[arg(long)]
        stop_cl: Option<f64>,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        polydata: Option<PathBuf>,
    },
    /// Full pipeline: seed + trace in one invocation
    Run {
        field: PathBuf,
        #[command(flatten)]
        params: SeedArgs,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        stop_cl: Option<f64>,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        polydata: Option<PathBuf>,
        /// also write the template + seeds
        #[arg(long)]
        template_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SeedArgs {
    /// target hyperstreamline spacing l_s (recommended: 2 coherence lengths)
    #[arg(long)]
    ls: f64,
    /// vertex circle radius (default: 1.25 * ls, i.e. 2.5 coherence lengths
    /// at the recommended spacing)
    #[arg(long)]
    vertex_radius: Option<f64>,
    /// circle-to-edge spacing ratio
    #[arg(long, default_value_t = 2.0)]
    ratio: f64,
    /// planar-anisotropy detection threshold
    #[arg(long)]
    cp_threshold: Option<f64>,
}

impl SeedArgs {
    fn to_params(&self) -> PipelineParams {
        let mut p = PipelineParams::new(self.ls);
        p.vertex_radius = self.vertex_radius;
        p.ratio = Some(self.ratio);
        p.cp_threshold = self.cp_threshold;
        p
    }
}

fn main() -> ExitCode {
    nemvis::threading::init_from_env();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are successful exits; bad usage is exit 1
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> nemvis::Result<()> {
    match cli.command {
        Command::Gen {
            case,
            nx,
            ny,
            ln,
            steps,
            seed_prng,
            output,
        } => {
            let (field, report) = generate(&GenParams {
                case: case.into(),
                nx,
                ny,
                ln,
                steps,
                prng_seed: seed_prng,
            })?;
            write_field(&field, &output)?;
            if let Some(r) = report {
                eprintln!(
                    "relax: steps={} dt={:.6e} energy {:.6e} -> {:.6e}",
                    r.steps,
                    r.dt,
                    r.energies.first().copied().unwrap_or(f64::NAN),
                    r.energies.last().copied().unwrap_or(f64::NAN),
                );
            }
            eprintln!("wrote {}", output.display());
            Ok(())
        }
        Command::Info {
            field,
            cp_threshold,
        } => {
            let f = read_field(&field)?;
            info(&f, cp_threshold)
        }
        Command::Seed {
            field,
            params,
            output,
        } => {
            let f = read_field(&field)?;
            let (template, seeds) = seed_stage(&f, &params.to_params())?;
            for w in &template.graph.warnings {
                eprintln!("warning: {w}");
            }
            write_template(&template, &seeds, &output)?;
            eprintln!(
                "template: {} vertices, {} edges, {} curves, {} seeds",
                template.graph.vertices.len(),
                template.graph.edges.len(),
                template.curves.len(),
                seeds.len()
            );
            eprintln!("wrote {}", output.display());
            Ok(())
        }
        Command::Trace {
            field,
            template,
            step,
            stop_cl,
            svg,
            polydata,
        } => {
            let f = read_field(&field)?;
            let (t, seeds) = read_template(&template)?;
            let ls = t.params.ls.ok_or_else(|| {
                nemvis::Error::InvalidParams("template does not record ls".into())
            })?;
            let mut p = PipelineParams::new(ls);
            p.step = step;
            p.stop_cl = stop_cl;
            let scene = trace_stage(&f, &t, &seeds, &p)?;
            emit(&scene, svg.as_deref(), polydata.as_deref())
        }
        Command::Run {
            field,
            params,
            step,
            stop_cl,
            svg,
            polydata,
            template_out,
        } => {
            let f = read_field(&field)?;
            let mut p = params.to_params();
            p.step = step;
            p.stop_cl = stop_cl;
            if let Some(tpath) = &template_out {
                let (template, seeds) = seed_stage(&f, &p)?;
                write_template(&template, &seeds, tpath)?;
                eprintln!("wrote {}", tpath.display());
                let scene = trace_stage(&f, &template, &seeds, &p)?;
                emit(&scene, svg.as_deref(), polydata.as_deref())
            } else {
                let scene = run_pipeline(&f, &p)?;
                emit(&scene, svg.as_deref(), polydata.as_deref())
            }
        }
    }
}

fn emit(
    scene: &nemvis::render::Scene,
    svg: Option<&std::path::Path>,
    polydata: Option<&std::path::Path>,
) -> nemvis::Result<()> {
    eprintln!(
        "traced {} hyperstreamlines from {} seeds",
        scene.streamlines.len(),
        scene.seeds.len()
    );
    if let Some(path) = svg {
        write_svg(scene, path)?;
        eprintln!("wrote {}", path.display());
    }
    if let Some(path) = polydata {
        write_polydata(scene, path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn info(f: &nemvis::field::TensorField, cp_threshold: Option<f64>) -> nemvis::Result<()> {
    let g = f.grid;
    println!(
        "grid {}x{} spacing {:.6e} {:.6e} origin {:.6e} {:.6e}",
        g.nx, g.ny, g.dx, g.dy, g.ox, g.oy
    );
    let in_domain = f.mask().iter().filter(|&&m| m).count();
    println!(
        "nodes {} in-domain ({:.1}%)",
        in_domain,
        100.0 * in_domain as f64 / (g.nx * g.ny) as f64
    );

    // Westin metric histograms over in-domain nodes, 10 bins on [0, 1]
    // with out-of-range values clamped into the end bins.
    let mut hist = [[0usize; 10]; 3];
    let mut count = 0usize;
    for (q, &m) in f.tensors().iter().zip(f.mask()) {
        if !m {
            continue;
        }
        let w = westin_of(q)?;
        for (h, v) in hist.iter_mut().zip([w.c_l, w.c_p, w.c_s]) {
            let bin = ((v * 10.0).floor() as isize).clamp(0, 9) as usize;
            h[bin] += 1;
        }
        count += 1;
    }
    for (name, h) in ["c_l", "c_p", "c_s"].iter().zip(&hist) {
        let cells: Vec<String> = h
            .iter()
            .map(|&n| format!("{:.3}", n as f64 / count.max(1) as f64))
            .collect();
        println!("{name} histogram [0,1] x10: {}", cells.join(" "));
    }

    let threshold =
        cp_threshold.unwrap_or(nemvis::topology::DEFAULT_CP_THRESHOLD);
    let defects = detect_defects(f, threshold)?;
    println!("defects: {}", serde_json::to_string(&defects)?);
    Ok(())
}
