use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sbe_core::bench::{export_series, multi_start_table, run_campaign, write_manifest, CampaignConfig, TableConfig};
use sbe_core::instance::{generate_instance, Instance, InstanceError, MIN_SIDE};
use sbe_core::oracle::write_trace_csv;
use sbe_core::oracle::SearchSpace;
use sbe_core::search::{run_search, Algorithm, Params, StretchPolicy};
use sbe_core::seed::stream_rng;
use sbe_core::template::{
    generate_synthetic, load_pgm, make_template_oracle, speedup_report, SyntheticConfig, TemplateSet, TemplateSpace,
};
use sbe_core::tuner::{ea_tune, EaConfig};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "sbe", version, about = "Search based on evidence on 2D grids")]
struct Cli {
    /// Master seed; drawn from system entropy and printed when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for campaigns and tuning.
    #[arg(long, global = true, env = "SBE_WORKERS")]
    workers: Option<usize>,
    /// Print extra detail to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write random instances in the text format.
    Gen(GenArgs),
    /// Run one searcher on one instance.
    Search(SearchArgs),
    /// Tune and benchmark several searchers; prints a comparison table.
    Bench(BenchArgs),
    /// Tune one searcher's parameters.
    Tune(TuneArgs),
    /// Template matching on images; prints a speedup table.
    Match(MatchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Grid side.
    #[arg(long)]
    s: u32,
    #[arg(long, default_value_t = 1)]
    count: u32,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Default, Clone)]
struct ParamFlags {
    /// Number of probes or triangles (ILS: requested number of squares).
    #[arg(short = 't', long = "t")]
    t: Option<u32>,
    /// Distance between consecutive anchors.
    #[arg(short = 'd', long = "d")]
    d: Option<u32>,
    /// FTS growth iterations without evidence.
    #[arg(short = 'c', long = "c")]
    c: Option<u32>,
    /// VNS1 window radius.
    #[arg(short = 'm', long = "m")]
    m: Option<u32>,
    /// VNS3 ring growths without evidence.
    #[arg(short = 'g', long = "g")]
    g: Option<u32>,
    /// ILS samples per square.
    #[arg(short = 'a', long = "a")]
    a: Option<u32>,
    /// Parameters as one list, e.g. t=40,d=97,c=4.
    #[arg(long)]
    params: Option<String>,
    /// How FTS treats evidence inside a triangle.
    #[arg(long, value_enum, default_value_t = Stretch::Complete)]
    stretch: Stretch,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Stretch {
    #[default]
    Complete,
    Stop,
}

impl ParamFlags {
    fn resolve(&self, algorithm: Algorithm) -> Result<Params> {
        let mut pairs: Vec<String> = self.params.iter().cloned().collect();
        for (name, v) in [("t", self.t), ("d", self.d), ("c", self.c), ("m", self.m), ("g", self.g), ("a", self.a)] {
            if let Some(v) = v {
                pairs.push(format!("{name}={v}"));
            }
        }
        let params = Params::parse(algorithm, &pairs.join(","))?;
        Ok(match (params, self.stretch) {
            (Params::Fts(p), Stretch::Stop) => Params::Fts(p.with_stretch(StretchPolicy::StopAtEvidence)),
            (p, _) => p,
        })
    }
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long = "algo")]
    algorithm: String,
    /// Instance file in the text format.
    #[arg(long, conflicts_with = "random")]
    instance: Option<PathBuf>,
    /// Generate a random instance of this side instead.
    #[arg(long)]
    random: Option<u32>,
    #[command(flatten)]
    params: ParamFlags,
    /// Write the visit trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct EaFlags {
    /// Runs averaged into one fitness value.
    #[arg(long, default_value_t = 40)]
    fitness_runs: u32,
    /// Steps without improvement before tuning may stop.
    #[arg(long, default_value_t = 100)]
    stall: u32,
    /// Hard cap on evolution steps.
    #[arg(long, default_value_t = 5000)]
    budget: u32,
    #[arg(long, default_value_t = 50)]
    kappa: usize,
}

impl EaFlags {
    fn config(&self) -> EaConfig {
        EaConfig {
            kappa: self.kappa,
            runs_per_fitness: self.fitness_runs,
            stall_limit: self.stall,
            max_steps: self.budget,
            ..EaConfig::default()
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated algorithm names.
    #[arg(long, value_delimiter = ',', default_value = "fts,exhaustive")]
    algos: Vec<String>,
    #[arg(long)]
    s: u32,
    /// Runs per campaign.
    #[arg(long, default_value_t = 1000)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    restarts: u32,
    #[command(flatten)]
    ea: EaFlags,
    /// Table CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for one JSON campaign manifest per cell.
    #[arg(long)]
    manifests: Option<PathBuf>,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long = "algo")]
    algorithm: String,
    #[arg(long)]
    s: u32,
    #[command(flatten)]
    ea: EaFlags,
    /// Write the per-generation log as CSV.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Run a campaign of this many runs with the tuned parameters and write
    /// its series as CSV to `--series`.
    #[arg(long, requires = "series")]
    check: Option<u64>,
    #[arg(long)]
    series: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    /// Grayscale P5 image.
    #[arg(long, requires = "templates", conflicts_with = "synthetic")]
    image: Option<PathBuf>,
    /// Template manifest (target=, evidenceN=path@dx,dy, tau_target=, tau_evidence=).
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Use this many generated benchmark images instead of files.
    #[arg(long)]
    synthetic: Option<u32>,
    /// Side of generated images.
    #[arg(long, default_value_t = 512)]
    size: u32,
    /// Searchers as NAME or NAME:t=..,d=..; parameters are tuned when omitted.
    #[arg(long = "use", default_value = "fts")]
    uses: Vec<String>,
    /// Runs per image per repetition.
    #[arg(long, default_value_t = 1)]
    runs: u32,
    #[arg(long, default_value_t = 1)]
    repetitions: u32,
    #[command(flatten)]
    ea: EaFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> std::process::ExitCode {
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or_else(rand::random);
    eprintln!("seed={seed}");
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    match &cli.command {
        Command::Gen(a) => cmd_gen(a, seed),
        Command::Search(a) => cmd_search(a, seed),
        Command::Bench(a) => cmd_bench(a, seed, cli.workers),
        Command::Tune(a) => cmd_tune(a, seed, cli.verbose),
        Command::Match(a) => cmd_match(a, seed, cli.verbose),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_gen(a: &GenArgs, seed: u64) -> Result<()> {
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let width = a.count.saturating_sub(1).to_string().len().max(3);
    for i in 0..a.count {
        let inst = generate_instance(a.s, &mut stream_rng(seed, i as u64))?;
        let path = a.out.join(format!("instance_{i:0width$}.txt"));
        std::fs::write(&path, inst.to_text()).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_search(a: &SearchArgs, seed: u64) -> Result<()> {
    let algorithm: Algorithm = a.algorithm.parse()?;
    let params = a.params.resolve(algorithm)?;
    let mut rng = stream_rng(seed, 0);
    let inst: Instance = match (&a.instance, a.random) {
        (Some(path), _) => std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?
            .parse()
            .with_context(|| format!("parsing {}", path.display()))?,
        (None, Some(s)) => generate_instance(s, &mut rng)?,
        (None, None) => bail!("give either --instance FILE or --random SIDE"),
    };
    let out = run_search(&inst, &params, &mut rng, a.trace.is_some());
    println!("algorithm={algorithm} params={params}");
    println!("found={}", out.found);
    println!("total_visits={}", out.total_visits);
    println!("unique_visits={}", out.unique_visits);
    println!("evidence_hits={}", out.evidence_hits);
    println!("steps={}", out.steps);
    println!("fallback={}", out.fallback_used);
    if let (Some(path), Some(trace)) = (&a.trace, &out.trace) {
        let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = std::io::BufWriter::new(f);
        write_trace_csv(trace, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn check_side(s: u32) -> Result<()> {
    if s < MIN_SIDE {
        return Err(InstanceError::SideTooSmall(s).into());
    }
    Ok(())
}

fn parse_algorithms(names: &[String]) -> Result<Vec<Algorithm>> {
    names.iter().map(|n| Ok(n.parse::<Algorithm>()?)).collect()
}

fn cmd_bench(a: &BenchArgs, seed: u64, workers: Option<usize>) -> Result<()> {
    let config = TableConfig {
        algorithms: parse_algorithms(&a.algos)?,
        s: a.s,
        restarts: a.restarts,
        runs: a.n,
        seed,
        ea: a.ea.config(),
        workers,
    };
    check_side(a.s)?;
    let table = multi_start_table(&config)?;
    if let Some(dir) = &a.manifests {
        std::fs::create_dir_all(dir)?;
        for (r, row) in table.rows.iter().enumerate() {
            for cell in row {
                let name = format!("restart{}_{}.json", r + 1, cell.campaign.params.algorithm());
                write_manifest(&cell.campaign, &dir.join(name))?;
            }
        }
    }
    emit(a.out.as_deref(), &table.to_csv())
}

fn cmd_tune(a: &TuneArgs, seed: u64, verbose: u8) -> Result<()> {
    let algorithm: Algorithm = a.algorithm.parse()?;
    check_side(a.s)?;
    let out = ea_tune(algorithm, a.s, &a.ea.config(), seed);
    if verbose > 0 {
        eprintln!("evaluations={} generations={}", out.evaluations, out.history.len() - 1);
    }
    println!("algorithm={algorithm}");
    print!("{}", out.params_listing());
    println!("fitness={:.1}", out.fitness);
    println!("converged={}", out.converged);
    if let Some(path) = &a.log {
        std::fs::write(path, out.log_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    if let (Some(n), Some(path)) = (a.check, &a.series) {
        let stats = run_campaign(&CampaignConfig { params: out.params, s: a.s, runs: n, seed, workers: None })?;
        println!("check_mean={:.1}", stats.mean);
        export_series(&stats, path)?;
    }
    Ok(())
}

fn cmd_match(a: &MatchArgs, seed: u64, verbose: u8) -> Result<()> {
    let (spaces, label): (Vec<TemplateSpace>, &str) = match (&a.image, &a.synthetic) {
        (Some(image), _) => {
            let manifest = a.templates.as_ref().context("--image needs --templates")?;
            let templates = TemplateSet::load_manifest(manifest)?;
            let image = load_pgm(image).with_context(|| format!("reading {}", image.display()))?;
            (vec![make_template_oracle(image, templates)?], "image")
        }
        (None, Some(n)) => {
            let config = SyntheticConfig::with_size(a.size)
                .with_context(|| format!("--size must be at least {}", SyntheticConfig::MIN_SIZE))?;
            let spaces = (0..*n)
                .map(|i| {
                    let syn = generate_synthetic(&config, &mut stream_rng(seed, i as u64));
                    make_template_oracle(syn.image, syn.templates)
                })
                .collect::<Result<Vec<_>, _>>()?;
            (spaces, "synthetic benchmark images")
        }
        (None, None) => bail!("give either --image with --templates, or --synthetic COUNT"),
    };
    let dims = spaces[0].dims();
    let side = dims.width.max(dims.height);
    let mut params = Vec::new();
    for (k, u) in a.uses.iter().enumerate() {
        let (name, list) = u.split_once(':').unwrap_or((u, ""));
        let algorithm: Algorithm = name.parse()?;
        let p = if list.is_empty() && algorithm != Algorithm::Exhaustive {
            let tuned = ea_tune(algorithm, side, &a.ea.config(), seed ^ (k as u64 + 1));
            if verbose > 0 {
                eprintln!("tuned {algorithm}: {} (converged={})", tuned.params, tuned.converged);
            }
            tuned.params
        } else {
            Params::parse(algorithm, list)?
        };
        params.push(p);
    }
    let report = speedup_report(&params, &spaces, a.runs, a.repetitions, seed);
    let mut text = format!("# data: {label}, {} image(s)\n", spaces.len());
    for p in &params {
        text.push_str(&format!("# {}: {}\n", p.algorithm(), p));
    }
    text.push_str(&report.to_csv());
    emit(a.out.as_deref(), &text)
}
