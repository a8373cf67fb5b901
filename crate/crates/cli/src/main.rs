use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use parking_lot::Mutex;
use ytwin_client::feeds::{ingest_catalog, FeedSource};
use ytwin_client::{run_simulation, PlatformClient, Recipe, RunOptions};
use ytwin_core::{export, ClientRole, Platform};
use ytwin_llm::{HttpGateway, LlmEndpoint, LlmGateway, MockLlm, ModelRouter};

#[derive(Parser)]
#[command(name = "ytwin", version, about = "Social-media digital twin driven by LLM agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve a platform store over HTTP.
    Server {
        #[arg(long)]
        db: PathBuf,
        #[arg(long, default_value_t = 5000)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Run a simulation client.
    Run(RunArgs),
    /// Write the analysis datasets of a store.
    Export {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// News feed management.
    Feeds {
        #[command(subcommand)]
        command: FeedsCommand,
    },
}

#[derive(Subcommand)]
enum FeedsCommand {
    /// Ingest every outlet of a catalog.
    Ingest {
        #[arg(long)]
        catalog: PathBuf,
        /// Read documents from this directory instead of fetching them.
        #[arg(long)]
        from_dir: Option<PathBuf>,
        /// Write straight into a store instead of going through a server.
        #[arg(long, conflicts_with = "api")]
        db: Option<PathBuf>,
        #[arg(long)]
        api: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Role {
    Orchestrator,
    Worker,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    recipe: PathBuf,
    #[arg(long)]
    resume: bool,
    /// Answer every prompt with the seeded offline model.
    #[arg(long)]
    mock_llm: bool,
    #[arg(long, default_value = "client-0")]
    client_id: String,
    #[arg(long, value_enum, default_value = "orchestrator")]
    role: Role,
    /// Number of client processes sharing the simulation.
    #[arg(long, default_value_t = 1)]
    clients: u64,
    /// This client's index among them (the orchestrator is usually 0).
    #[arg(long, default_value_t = 0)]
    shard: u64,
    /// Platform URL; defaults to the recipe's `servers.api`.
    #[arg(long, conflicts_with = "db")]
    api: Option<String>,
    /// Run against a local store in this process, without a server.
    #[arg(long)]
    db: Option<PathBuf>,
    /// Write one JSON line per slot.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Also write the run manifest here.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Seconds to wait at a barrier before giving up.
    #[arg(long, default_value_t = 600)]
    barrier_timeout: u64,
}

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("YTWIN_LOG").unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    if let Err(e) = dispatch(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Server { db, port, host } => server(&db, &host, port),
        Command::Run(args) => run(args),
        Command::Export { db, out } => {
            let p = Platform::load_snapshot(&db).with_context(|| format!("opening {}", db.display()))?;
            for f in export::export_all(&p, &out)? {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Feeds {
            command:
                FeedsCommand::Ingest {
                    catalog,
                    from_dir,
                    db,
                    api,
                },
        } => {
            let client = match (db, api) {
                (Some(db), _) => PlatformClient::local(Arc::new(Mutex::new(Platform::open(&db)?))),
                (None, Some(url)) => PlatformClient::http(&url)?,
                (None, None) => bail!("pass --db or --api"),
            };
            let source = match from_dir {
                Some(d) => FeedSource::Directory(d),
                None => FeedSource::http()?,
            };
            let report = ingest_catalog(&client, &catalog, &source)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn server(db: &Path, host: &str, port: u16) -> Result<()> {
    let platform = Platform::open(db).with_context(|| format!("opening {}", db.display()))?;
    let addr: SocketAddr = format!("{host}:{port}").parse().context("listen address")?;
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        // tests and scripts read the bound address from the first line
        println!("listening on http://{}", listener.local_addr()?);
        std::io::stdout().flush()?;
        let shared = Arc::new(Mutex::new(platform));
        ytwin_server::serve(listener, shared, async {
            tokio::signal::ctrl_c().await.ok();
        })
        .await?;
        Ok(())
    })
}

fn gateway(recipe: &Recipe, mock: bool) -> Result<Arc<dyn LlmGateway>> {
    if mock {
        return Ok(Arc::new(MockLlm::new()));
    }
    let s = &recipe.servers;
    let mut endpoint = LlmEndpoint::new(&s.llm, "").with_recipe_key(&s.llm_api_key);
    if let Some(t) = s.llm_timeout {
        endpoint.timeout = t;
    }
    if let Some(r) = s.llm_max_retries {
        endpoint.max_retries = r;
    }
    if let Some(c) = s.llm_max_concurrency {
        endpoint.max_concurrency = c;
    }
    // one endpoint serves every model name; the request carries the model
    let http: Arc<dyn LlmGateway> = Arc::new(HttpGateway::new(endpoint)?);
    Ok(Arc::new(ModelRouter::new().fallback(http)))
}

fn run(args: RunArgs) -> Result<()> {
    let loaded = Recipe::load(&args.recipe).with_context(|| format!("loading {}", args.recipe.display()))?;
    let client = match (&args.db, &args.api) {
        (Some(db), _) => PlatformClient::local(Arc::new(Mutex::new(Platform::open(db)?))),
        (None, Some(url)) => PlatformClient::http(url)?,
        (None, None) => PlatformClient::http(&loaded.recipe.servers.api)?,
    };
    let opts = RunOptions {
        client_id: args.client_id,
        role: match args.role {
            Role::Orchestrator => ClientRole::Orchestrator,
            Role::Worker => ClientRole::Worker,
        },
        clients: args.clients,
        shard: args.shard,
        resume: args.resume,
        poll: Duration::from_millis(if args.db.is_some() { 1 } else { 5 }),
        barrier_timeout: Duration::from_secs(args.barrier_timeout),
    };
    let llm = gateway(&loaded.recipe, args.mock_llm)?;
    let report = run_simulation(&client, llm, &loaded, &opts)?;

    if let Some(path) = &args.trace {
        let mut out = String::new();
        for t in &report.trace {
            out.push_str(&serde_json::to_string(t)?);
            out.push('\n');
        }
        std::fs::write(path, out)?;
    }
    let manifest = serde_json::to_string_pretty(&report.manifest)? + "\n";
    if let Some(path) = &args.manifest {
        std::fs::write(path, &manifest)?;
    }
    print!("{manifest}");
    Ok(())
}
