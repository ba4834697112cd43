use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use nermine::pipeline::{self, PipelineConfig};
use nermine::review::{self, AssignmentPolicy, ReviewConfig};
use nermine::Error;

#[derive(Parser)]
#[command(
    name = "nermine",
    version,
    about = "Project English entity annotations onto a parallel corpus"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train both alignment directions and write the tables.
    AlignTrain(PipelineArgs),
    /// Write forward, backward and intersected alignments plus pair scores.
    Align(PipelineArgs),
    /// Project English entities onto the target side.
    Project(PipelineArgs),
    /// Filter the projected corpus and split it into train/dev/test.
    FilterSplit(PipelineArgs),
    /// Print entity statistics for CoNLL files.
    Stats { files: Vec<PathBuf> },
    /// Score predicted spans against gold spans.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Print key=value lines instead of a table.
        #[arg(long)]
        kv: bool,
    },
    /// Serve a corpus for human review over HTTP.
    ServeReview(ServeArgs),
}

/// Each flag overrides the config key of the same name.
#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    workdir: Option<String>,
    #[arg(long)]
    bitext: Option<String>,
    #[arg(long)]
    src: Option<String>,
    #[arg(long)]
    tgt: Option<String>,
    #[arg(long)]
    english_conll: Option<String>,
    #[arg(long)]
    tagger_command: Option<String>,
    #[arg(long)]
    tagger_batch: Option<String>,
    /// "builtin" or a Pharaoh file.
    #[arg(long)]
    forward_alignment: Option<String>,
    /// "builtin" or a Pharaoh file in source-target orientation.
    #[arg(long)]
    backward_alignment: Option<String>,
    #[arg(long)]
    em_iterations: Option<String>,
    #[arg(long)]
    prob_floor: Option<String>,
    #[arg(long)]
    use_null: Option<String>,
    #[arg(long)]
    keep_fraction: Option<String>,
    #[arg(long)]
    no_entity_rate: Option<String>,
    /// forward_only or intersected.
    #[arg(long)]
    mode: Option<String>,
    /// train,dev,test ratios.
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
}

impl PipelineArgs {
    fn load(self) -> nermine::Result<PipelineConfig> {
        let flags = [
            ("workdir", self.workdir),
            ("bitext", self.bitext),
            ("src", self.src),
            ("tgt", self.tgt),
            ("english_conll", self.english_conll),
            ("tagger_command", self.tagger_command),
            ("tagger_batch", self.tagger_batch),
            ("forward_alignment", self.forward_alignment),
            ("backward_alignment", self.backward_alignment),
            ("em_iterations", self.em_iterations),
            ("prob_floor", self.prob_floor),
            ("use_null", self.use_null),
            ("keep_fraction", self.keep_fraction),
            ("no_entity_rate", self.no_entity_rate),
            ("mode", self.mode),
            ("split", self.split),
            ("seed", self.seed),
            ("jobs", self.jobs),
        ];
        let overrides: Vec<(String, String)> = flags
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect();
        PipelineConfig::load(self.config.as_deref(), &overrides)
    }
}

#[derive(Args)]
struct ServeArgs {
    /// CoNLL file to review.
    #[arg(long)]
    corpus: PathBuf,
    /// Comma-separated annotator ids, in adjudication priority order.
    #[arg(long, value_delimiter = ',', required = true)]
    annotators: Vec<String>,
    #[arg(long)]
    adjudicator: Option<String>,
    /// Directory for the review log.
    #[arg(long, default_value = ".")]
    workdir: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// 0 picks a free port.
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Static files for the review interface.
    #[arg(long)]
    ui_dir: Option<PathBuf>,
    /// Deal sentences round-robin, sharing every Nth with all annotators.
    #[arg(long)]
    shared_every: Option<usize>,
}

fn serve(args: ServeArgs) -> nermine::Result<()> {
    std::fs::create_dir_all(&args.workdir).map_err(|e| Error::Io {
        path: args.workdir.clone(),
        source: e,
    })?;
    let config = ReviewConfig {
        annotators: args.annotators,
        adjudicator: args.adjudicator,
        log_path: args.workdir.join("reviews.jsonl"),
        assignment: match args.shared_every {
            Some(shared_every) => AssignmentPolicy::Partial { shared_every },
            None => AssignmentPolicy::Full,
        },
    };
    let service = Arc::new(review::open_from_files(&args.corpus, config)?);
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::Review(e.to_string()))?;
    runtime
        .block_on(review::http::serve(addr, service, args.ui_dir, |bound| {
            println!("listening on http://{bound}");
        }))
        .map_err(|e| Error::Review(format!("{addr}: {e}")))
}

fn run(cli: Cli) -> nermine::Result<()> {
    match cli.command {
        Cmd::AlignTrain(args) => {
            let s = pipeline::align_train(&args.load()?)?;
            println!("pairs={}", s.pairs);
            println!("forward.log_likelihood={}", s.forward_log_likelihood);
            println!("backward.log_likelihood={}", s.backward_log_likelihood);
        }
        Cmd::Align(args) => {
            let s = pipeline::align(&args.load()?)?;
            println!("pairs={}", s.pairs);
            println!("forward.links={}", s.forward_links);
            println!("backward.links={}", s.backward_links);
            println!("intersected.links={}", s.intersected_links);
        }
        Cmd::Project(args) => {
            let s = pipeline::project(&args.load()?)?;
            println!("source_spans={}", s.source_spans);
            println!("projected_spans={}", s.projected_spans);
            println!("dropped.unaligned={}", s.unaligned);
            println!("dropped.overlap={}", s.overlap);
        }
        Cmd::FilterSplit(args) => {
            let s = pipeline::filter_split(&args.load()?)?;
            println!("input={}", s.input);
            println!("after_downsample={}", s.after_downsample);
            println!("after_top_fraction={}", s.after_top_fraction);
            println!("train={}\ndev={}\ntest={}", s.train, s.dev, s.test);
        }
        Cmd::Stats { files } => {
            if files.is_empty() {
                return Err(Error::Config("stats needs at least one CoNLL file".into()));
            }
            print!("{}", pipeline::stats(&files)?);
        }
        Cmd::Eval { gold, pred, kv } => {
            let report = pipeline::eval(&gold, &pred)?;
            if kv {
                print!("{}", report.to_key_values());
            } else {
                print!("{report}");
            }
        }
        Cmd::ServeReview(args) => serve(args)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}
