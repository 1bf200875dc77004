use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use motiv::api::{self, ApiError, ErrorCode, GamRequest};
use motiv::archive::{read_archive, write_archive};
use motiv::http::{self, AppState, Settings};
use motiv::report;
use motiv_core::analytics::{HeightScale, TimelineConfig};
use motiv_core::corpus::{ingest, InputPaths};
use motiv_core::glyph::{GlyphScales, LayoutConfig, SizeScaling};
use motiv_core::sentiment::{Lexicon, ScoringRules};
use motiv_core::Dataset;

#[derive(Parser)]
#[command(name = "motiv", version, about = "Moral-frame analytics for geotagged tweet corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, score and geo-assign the inputs into a dataset archive.
    Ingest(IngestArgs),
    /// Serve the HTTP/JSON API for a dataset archive.
    Serve(ServeArgs),
    /// Fit an additive model and write its report.
    Fit(FitArgs),
    /// Write the map or timeline payload the server would return.
    Export(ExportArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    tweets: PathBuf,
    #[arg(long)]
    counties: PathBuf,
    #[arg(long)]
    demographics: PathBuf,
    #[arg(long)]
    covid: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    overlap_threshold: f64,
    #[arg(long, default_value = "topic")]
    topic: String,
    /// Directory with lexicon.tsv, boosters.tsv and negators.txt.
    #[arg(long)]
    lexicon_dir: Option<PathBuf>,
}

#[derive(Args)]
struct DataArg {
    /// Dataset archive written by `ingest`.
    #[arg(long, env = "MOTIV_DATA")]
    data: PathBuf,
}

#[derive(Args, Clone)]
struct ScaleArgs {
    #[arg(long, default_value_t = 4.0)]
    w_min: f64,
    #[arg(long, default_value_t = 40.0)]
    w_max: f64,
    #[arg(long, default_value_t = 30.0)]
    r_max: f64,
    #[arg(long, value_enum, default_value_t = Scaling::Sqrt)]
    size_scaling: Scaling,
    #[arg(long, default_value_t = 2.0)]
    h_min: f64,
    #[arg(long, default_value_t = 2.0)]
    h_unit: f64,
    #[arg(long, value_enum, default_value_t = HeightMode::Log2)]
    height_scale: HeightMode,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scaling {
    Sqrt,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeightMode {
    Log2,
    Linear,
}

impl ScaleArgs {
    fn settings(&self) -> Result<Settings, Failure> {
        if !(self.w_min > 0.0 && self.w_max >= self.w_min && self.r_max > 0.0 && self.h_min >= 0.0 && self.h_unit > 0.0) {
            return Err(Failure::input("scale flags must be positive with --w-max >= --w-min"));
        }
        Ok(Settings {
            timeline: TimelineConfig {
                h_min: self.h_min,
                h_unit: self.h_unit,
                height_scale: match self.height_scale {
                    HeightMode::Log2 => HeightScale::Log2,
                    HeightMode::Linear => HeightScale::Linear,
                },
            },
            scales: GlyphScales {
                w_min: self.w_min,
                w_max: self.w_max,
                r_max: self.r_max,
                scaling: match self.size_scaling {
                    Scaling::Sqrt => SizeScaling::Sqrt,
                    Scaling::Linear => SizeScaling::Linear,
                },
                ..GlyphScales::default()
            },
            layout: LayoutConfig::default(),
        })
    }
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Allowed CORS origin; any origin when omitted.
    #[arg(long)]
    cors_origin: Option<String>,
    #[command(flatten)]
    scales: ScaleArgs,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArg,
    /// Model spec JSON, the same body POST /api/gam accepts.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated smoothing values replacing the spec's grid.
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Panel {
    Map,
    Timeline,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long, value_enum)]
    panel: Panel,
    #[arg(long)]
    frame: Option<String>,
    #[arg(long)]
    color: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    scales: ScaleArgs,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }

    fn model(message: impl Into<String>) -> Failure {
        Failure { code: 3, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Failure {
        Failure { code: 1, message: message.into() }
    }
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Failure {
        let message = match &e.detail {
            Some(d) => format!("{}: {d}", e.message),
            None => e.message.clone(),
        };
        match e.code {
            ErrorCode::BadRequest | ErrorCode::NotFound => Failure::input(message),
            ErrorCode::DegenerateModel => Failure::model(message),
            ErrorCode::Internal => Failure::internal(message),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::internal(format!("cannot write {}: {e}", path.display())))
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn load(data: &DataArg) -> Result<Dataset, Failure> {
    read_archive(&data.data).map_err(|e| Failure::input(e.to_string()))
}

fn run_ingest(a: IngestArgs) -> Result<(), Failure> {
    if !(a.overlap_threshold > 0.0 && a.overlap_threshold <= 1.0) {
        return Err(Failure::input(format!("--overlap-threshold must be in (0, 1], got {}", a.overlap_threshold)));
    }
    for p in [&a.tweets, &a.counties, &a.demographics, &a.covid] {
        if !p.is_file() {
            return Err(Failure::input(format!("input file not found: {}", p.display())));
        }
    }
    let lexicon = match &a.lexicon_dir {
        Some(dir) => Lexicon::load_dir(dir).map_err(|e| Failure::input(e.to_string()))?,
        None => Lexicon::builtin(),
    };
    let paths = InputPaths {
        tweets: a.tweets,
        counties: a.counties,
        demographics: a.demographics,
        covid: a.covid,
    };
    let (dataset, ingest_report) = ingest(&paths, &a.topic, &lexicon, &ScoringRules::default(), a.overlap_threshold)
        .map_err(|e| Failure::input(e.to_string()))?;
    write_archive(&a.out, &dataset).map_err(|e| Failure::internal(e.to_string()))?;
    let text = report::ingest_report(&dataset, &ingest_report);
    let report_path = sibling(&a.out, ".report.txt");
    write_file(&report_path, text.as_bytes())?;
    eprintln!(
        "{} of {} tweet rows retained; archive {}, report {}",
        ingest_report.build.retained,
        ingest_report.rows_in,
        a.out.display(),
        report_path.display()
    );
    Ok(())
}

fn run_serve(a: ServeArgs) -> Result<(), Failure> {
    let settings = a.scales.settings()?;
    let dataset = load(&a.data)?;
    let cors = http::cors(a.cors_origin.as_deref()).map_err(Failure::input)?;
    let state = Arc::new(AppState { dataset, settings });
    let app = http::router(state, cors);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::internal(e.to_string()))?;
    let addr = SocketAddr::new(a.host, a.port);
    runtime
        .block_on(http::serve(app, addr, |bound| {
            println!("listening on http://{bound}");
            let _ = std::io::stdout().flush();
        }))
        .map_err(|e| Failure::internal(format!("cannot serve on {addr}: {e}")))
}

fn run_fit(a: FitArgs) -> Result<(), Failure> {
    let dataset = load(&a.data)?;
    let body = fs::read(&a.spec).map_err(|e| Failure::input(format!("cannot read {}: {e}", a.spec.display())))?;
    let mut request = GamRequest::parse(&body).map_err(|e| Failure::input(format!("{}: {}", a.spec.display(), e.message)))?;
    if let Some(grid) = a.lambda_grid {
        request.spec.lambda_grid = grid;
    }
    let report = api::gam_report(&dataset, &request).map_err(|e| Failure::model(e.to_string()))?;
    write_file(&a.out, &api::to_body(&report)?)?;
    write_file(&a.out.with_extension("txt"), report::gam_table(&report).as_bytes())?;
    Ok(())
}

fn run_export(a: ExportArgs) -> Result<(), Failure> {
    let settings = a.scales.settings()?;
    let dataset = load(&a.data)?;
    match a.panel {
        Panel::Timeline => {
            let body = api::timeline_payload(&dataset, a.frame.as_deref(), a.color.as_deref(), &settings.timeline)?;
            write_file(&a.out, &body)
        }
        Panel::Map => {
            let view = api::map_view(&dataset, a.frame.as_deref(), a.color.as_deref(), &settings.scales, &settings.layout)?;
            write_file(&a.out, &api::to_body(&view)?)?;
            write_file(&a.out.with_extension("svg"), report::map_svg(&view).as_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => run_ingest(a),
        Command::Serve(a) => run_serve(a),
        Command::Fit(a) => run_fit(a),
        Command::Export(a) => run_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("motiv: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
