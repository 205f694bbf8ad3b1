//! Runs the bundled protocols.
//!
//! Without `--role`, every location runs in this process over the in-process
//! transport and the message ledger is printed. With `--role`, only that
//! location runs, over HTTP, talking to the peers given with `--peer`.

use std::fmt::Debug;
use std::io::BufRead;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use choreo_core::harness::{run_all, RunOptions};
use choreo_core::transport::{HttpTransport, TransportConfig};
use choreo_core::{
    ChoreoError, Choreography, Location, LocationSet, Placement, Projector, Result,
};
use choreo_protocols::bookseller::{self, BooksellerInputs};
use choreo_protocols::kvs::{self, KvRequest, Kvs};
use choreo_protocols::password::{self, PasswordAuth};
use choreo_protocols::tictactoe::{self, BrainKind, TicTacToe};
use choreo_protocols::two_buyer::{self, TwoBuyerInputs, Variant};
use choreo_protocols::Catalog;

#[derive(Parser)]
#[command(name = "choreo-demo", about = "Run a bundled choreography")]
struct Cli {
    #[command(subcommand)]
    protocol: Protocol,
    #[command(flatten)]
    net: Net,
}

#[derive(Args)]
struct Net {
    /// Run only this location, over HTTP.
    #[arg(long, global = true)]
    role: Option<String>,
    /// Address to listen on in role mode.
    #[arg(long, global = true, default_value = "127.0.0.1:0")]
    listen: String,
    /// Peer address as NAME=HOST:PORT; repeat for every other location.
    #[arg(long = "peer", global = true, value_parser = parse_peer)]
    peers: Vec<(String, String)>,
    /// TOML transport configuration (flags override its peers and listen).
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,
    /// Receive timeout in seconds.
    #[arg(long, global = true, default_value_t = 30)]
    timeout: u64,
}

#[derive(Subcommand)]
enum Protocol {
    /// Buyer asks seller for a book; `--title -` reads it from stdin.
    Bookseller {
        #[arg(long, default_value_t = 100)]
        budget: u32,
        #[arg(long, default_value = "TAPL")]
        title: String,
    },
    /// Two buyers share the cost of a book.
    TwoBuyer {
        #[arg(long, default_value = "HoTT")]
        title: String,
        #[arg(long, default_value_t = 60)]
        budget1: u32,
        #[arg(long, default_value_t = 60)]
        budget2: u32,
        #[arg(long, value_enum, default_value_t = VariantArg::Enclave)]
        variant: VariantArg,
    },
    /// Client checks a password against the server's.
    Password {
        #[arg(long)]
        attempt: Option<String>,
        #[arg(long)]
        correct: Option<String>,
    },
    /// Replicated key-value store; requests as `get:KEY` or `put:KEY=VALUE`.
    Kvs {
        #[arg(long = "request", value_parser = parse_request)]
        requests: Vec<KvRequest>,
        /// Session length for primary and backup in role mode.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Two brains play tic-tac-toe.
    Tictactoe {
        #[arg(long, value_enum, default_value_t = BrainKind::Minimax)]
        x: BrainKind,
        #[arg(long, value_enum, default_value_t = BrainKind::Tactician)]
        o: BrainKind,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum VariantArg {
    Naive,
    Enclave,
}

fn parse_peer(text: &str) -> std::result::Result<(String, String), String> {
    let (name, address) = text
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=ADDRESS, got `{text}`"))?;
    Ok((name.to_owned(), address.to_owned()))
}

fn parse_request(text: &str) -> std::result::Result<KvRequest, String> {
    match text.split_once(':') {
        Some(("get", key)) => Ok(KvRequest::get(key)),
        Some(("put", kv)) => {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| format!("expected put:KEY=VALUE, got `{text}`"))?;
            Ok(KvRequest::put(key, value))
        }
        _ => Err(format!("expected get:KEY or put:KEY=VALUE, got `{text}`")),
    }
}

/// A protocol with its inputs, ready to be placed at any location.
trait Demo: Sync {
    type Output: Debug + Send;
    type Choreo: Choreography<Self::Output>;

    fn locations(&self) -> LocationSet;

    fn build(&self, p: &impl Placement) -> Self::Choreo;

    /// Inputs this location must have been given.
    fn check_inputs(&self, _at: Option<Location>) -> Result<()> {
        Ok(())
    }
}

struct BooksellerDemo(BooksellerInputs);

impl Demo for BooksellerDemo {
    type Output = choreo_core::Located<choreo_protocols::Purchase>;
    type Choreo = bookseller::Bookseller;

    fn locations(&self) -> LocationSet {
        bookseller::locations()
    }

    fn build(&self, p: &impl Placement) -> Self::Choreo {
        self.0.place(p)
    }
}

struct TwoBuyerDemo(TwoBuyerInputs, Variant);

impl Demo for TwoBuyerDemo {
    type Output = choreo_core::Located<choreo_protocols::Purchase>;
    type Choreo = two_buyer::TwoBuyer;

    fn locations(&self) -> LocationSet {
        two_buyer::locations()
    }

    fn build(&self, p: &impl Placement) -> Self::Choreo {
        self.0.place(self.1, p)
    }
}

struct PasswordDemo {
    attempt: Option<String>,
    correct: Option<String>,
}

fn require(value: &Option<String>, flag: &str, at: Location) -> Result<()> {
    match value {
        Some(_) => Ok(()),
        None => Err(ChoreoError::Configuration(format!("`{at}` needs {flag}"))),
    }
}

impl Demo for PasswordDemo {
    type Output = choreo_core::Located<bool>;
    type Choreo = PasswordAuth;

    fn locations(&self) -> LocationSet {
        password::locations()
    }

    fn build(&self, p: &impl Placement) -> Self::Choreo {
        PasswordAuth {
            attempt: p.place(password::client(), || self.attempt.clone().unwrap_or_default()),
            correct: p.place(password::server(), || self.correct.clone().unwrap_or_default()),
        }
    }

    fn check_inputs(&self, at: Option<Location>) -> Result<()> {
        if at.is_none_or(|l| l == password::client()) {
            require(&self.attempt, "--attempt", password::client())?;
        }
        if at.is_none_or(|l| l == password::server()) {
            require(&self.correct, "--correct", password::server())?;
        }
        Ok(())
    }
}

struct KvsDemo {
    requests: Vec<KvRequest>,
    count: usize,
}

impl Demo for KvsDemo {
    type Output = kvs::KvsOutcome;
    type Choreo = Kvs;

    fn locations(&self) -> LocationSet {
        kvs::locations()
    }

    fn build(&self, p: &impl Placement) -> Self::Choreo {
        Kvs {
            requests: p.place(kvs::client(), || self.requests.clone()),
            request_count: self.count,
            primary_store: p.place(kvs::primary(), kvs::Store::new),
            backup_store: p.place(kvs::backup(), kvs::Store::new),
        }
    }
}

struct TicTacToeDemo(BrainKind, BrainKind);

impl Demo for TicTacToeDemo {
    type Output = tictactoe::GameRecord;
    type Choreo = TicTacToe<BrainKind, BrainKind>;

    fn locations(&self) -> LocationSet {
        tictactoe::locations()
    }

    fn build(&self, p: &impl Placement) -> Self::Choreo {
        TicTacToe::place(p, || self.0, || self.1)
    }
}

fn execute<D: Demo>(demo: D, net: &Net) -> Result<()> {
    let locations = demo.locations();
    let timeout = Duration::from_secs(net.timeout);
    let Some(role) = &net.role else {
        demo.check_inputs(None)?;
        let report = run_all(&locations, |p| demo.build(p), RunOptions::with_timeout(timeout));
        for (location, outcome) in &report.outcomes {
            println!("{location}: {outcome:?}");
        }
        println!("messages:");
        for (pair, payloads) in report.trace.ledger() {
            println!("  {pair}: {}", payloads.join(" "));
        }
        return report.into_results().map(drop);
    };

    let role = Location::new(role)?;
    demo.check_inputs(Some(role))?;
    let mut config = match &net.config {
        Some(path) => TransportConfig::from_file(path)?,
        None => TransportConfig::new(role, net.listen.clone()),
    };
    config.location = role;
    if net.config.is_none() || net.listen != "127.0.0.1:0" {
        config.listen = net.listen.clone();
    }
    config.receive_timeout = timeout;
    for (name, address) in &net.peers {
        config.peers.insert(Location::new(name)?, address.clone());
    }
    config.validate_for(&locations)?;
    let transport = HttpTransport::start(&config)?;
    eprintln!("{role} listening on {}", transport.local_addr());
    let projector = Projector::new(role, locations, transport)?;
    let result = projector.epp_and_run(demo.build(&projector))?;
    println!("{role}: {result:?}");
    Ok(())
}

fn read_title(title: String) -> Result<String> {
    if title != "-" {
        return Ok(title);
    }
    let mut line = String::new();
    std::io::stdin()
        .lock()
        .read_line(&mut line)
        .map_err(|e| ChoreoError::Configuration(format!("cannot read title: {e}")))?;
    Ok(line.trim().to_owned())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let net = &cli.net;
    let outcome = match cli.protocol {
        Protocol::Bookseller { budget, title } => read_title(title).and_then(|title| {
            execute(
                BooksellerDemo(BooksellerInputs {
                    budget,
                    title,
                    catalog: Catalog::sample(),
                }),
                net,
            )
        }),
        Protocol::TwoBuyer {
            title,
            budget1,
            budget2,
            variant,
        } => {
            let variant = match variant {
                VariantArg::Naive => Variant::Naive,
                VariantArg::Enclave => Variant::Enclave,
            };
            let inputs = TwoBuyerInputs {
                title,
                budget1,
                budget2,
                catalog: Catalog::sample(),
            };
            execute(TwoBuyerDemo(inputs, variant), net)
        }
        Protocol::Password { attempt, correct } => execute(PasswordDemo { attempt, correct }, net),
        Protocol::Kvs { requests, count } => {
            let count = count.unwrap_or(requests.len());
            execute(KvsDemo { requests, count }, net)
        }
        Protocol::Tictactoe { x, o } => execute(TicTacToeDemo(x, o), net),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({:?}): {e}", e.kind());
            ExitCode::FAILURE
        }
    }
}
