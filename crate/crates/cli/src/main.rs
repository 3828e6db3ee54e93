//! `sten`: store data on untrusted servers and audit that they keep it.
//!
//! Exit codes: 0 success or audit passed, 1 audit failed, 2 usage or
//! runtime error, 3 no unconsumed audits, 4 a required endpoint is
//! unreachable.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sten::codes::{choose_params, hamming, CodeParams, CodeScheme, HashCode, Message, ReedSolomon};
use sten::field::{PrimeField, DEFAULT_MODULUS};
use sten::net::{Client, Server, DEFAULT_TIMEOUT_MS};
use sten::protocol::{
    prepare, verify, AuditVerdict, ChallengeRng, ParityBudget, ProtocolScheme, Reply, StorePlan,
    TokenBundle, DEFAULT_AUDITS,
};
use sten::security::{
    extract_list, kolmogorov_upper_estimate, storage_bound_for, ExtractionParams, FnResponder,
};
use sten::simulate::{
    exhaustive_pass_probability, run_audit_trials, storage_tradeoff_sweep, ReportRow, Scenario,
    ServerModel, CSV_HEADER,
};
use sten::{Error, Result};

const EXIT_FAIL: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_EXHAUSTED: u8 = 3;
const EXIT_UNREACHABLE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "sten",
    version,
    about = "Storage-enforcing audits over list-decodable hash codes"
)]
struct Cli {
    /// Print machine-readable key=value lines.
    #[arg(long, global = true)]
    porcelain: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Code parameters for message length k and slack epsilon.
    Params {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        epsilon: f64,
        /// rs or crt
        #[arg(long, default_value = "rs")]
        scheme: String,
    },
    /// Shard a file, push the shards and write a token bundle.
    Store(StoreArgs),
    /// Spend one token record and challenge every server.
    Audit(AuditArgs),
    /// Run an honest storage server.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7070")]
        listen: String,
        #[arg(long)]
        dir: PathBuf,
    },
    /// Pass probabilities of simulated servers.
    Simulate(SimulateArgs),
    /// List-decode a corrupted answer vector at desk scale.
    Extract(ExtractArgs),
    /// Storage lower bound for a file.
    Bound(BoundArgs),
    /// Store a random string on one server and audit it.
    EnforceDemo(DemoArgs),
}

#[derive(Args)]
struct Net {
    /// Comma-separated server addresses, one per shard.
    #[arg(long, value_delimiter = ',', required = true)]
    servers: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_MS)]
    timeout_ms: u64,
}

#[derive(Args)]
struct StoreArgs {
    #[arg(long)]
    file: PathBuf,
    #[arg(long)]
    scheme: ProtocolScheme,
    /// Hash code: rs or crt.
    #[arg(long, default_value = "rs")]
    code: String,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    r: usize,
    #[arg(long, default_value_t = 0)]
    e: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_AUDITS)]
    audits: usize,
    #[arg(long)]
    token: PathBuf,
    #[command(flatten)]
    net: Net,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    token: PathBuf,
    /// Expected scheme; must match the token when given.
    #[arg(long)]
    scheme: Option<ProtocolScheme>,
    #[command(flatten)]
    net: Net,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scheme: ProtocolScheme,
    #[arg(long, default_value_t = 17)]
    q: u64,
    /// Message length in symbols.
    #[arg(long, default_value_t = 8)]
    k: usize,
    /// Block length; defaults to q.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    r: usize,
    #[arg(long, default_value_t = 0)]
    e: usize,
    /// One model per server: honest, amnesiac[:C], partial:F, offset:D,
    /// silent[:P], collude:G:F.
    #[arg(long, value_delimiter = ',', default_value = "honest")]
    models: Vec<ServerModel>,
    /// Monte-Carlo trials; 0 sweeps every challenge.
    #[arg(long, default_value_t = 0)]
    trials: u64,
    /// Storage fractions for a PARTIAL trade-off sweep instead.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the rows as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long, default_value_t = 17)]
    q: u64,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Enumerate messages over {0..alphabet-1}; defaults to q.
    #[arg(long)]
    alphabet: Option<u64>,
    /// Wrong answers in the responder's vector.
    #[arg(long, default_value_t = 0)]
    errors: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    scheme: ProtocolScheme,
    /// Hash code: rs or crt.
    #[arg(long, default_value = "rs")]
    code: String,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    epsilon: f64,
    #[arg(long = "server-count", default_value_t = 1)]
    servers: u64,
    /// Estimate C(x) from this file.
    #[arg(long, conflicts_with = "c_bits")]
    file: Option<PathBuf>,
    /// Use this many bits for C(x) instead.
    #[arg(long)]
    c_bits: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    c0: f64,
}

#[derive(Args)]
struct DemoArgs {
    /// Bytes of random data.
    #[arg(long, default_value_t = 4096)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long)]
    token: Option<PathBuf>,
    #[command(flatten)]
    net: Net,
}

/// Collected output, printed as `key=value` or `key: value`.
struct Report {
    porcelain: bool,
    lines: Vec<(String, String)>,
}

impl Report {
    fn new(porcelain: bool) -> Self {
        Report {
            porcelain,
            lines: Vec::new(),
        }
    }

    fn put(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    fn print(&self) {
        let width = self.lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.lines {
            if self.porcelain {
                println!("{k}={v}");
            } else {
                println!("{k:<width$}  {v}");
            }
        }
    }
}

/// Why a command did not succeed.
enum Failure {
    Error(Error),
    Exit(u8),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::TokensExhausted => Failure::Exit(EXIT_EXHAUSTED),
            e => Failure::Error(e),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn code_scheme(s: &str) -> Result<CodeScheme> {
    match s {
        "rs" => Ok(CodeScheme::ReedSolomon),
        "crt" => Ok(CodeScheme::Crt),
        other => Err(Error::Usage(format!(
            "unknown code {other:?}; expected rs or crt"
        ))),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn put_code(out: &mut Report, code: &CodeParams) {
    out.put("code", code.scheme);
    out.put("k", code.k);
    out.put("n", code.n);
    match code.scheme {
        CodeScheme::ReedSolomon => out.put("q", code.max_alphabet()),
        CodeScheme::Crt => out.put("p_n", code.max_alphabet()),
    }
    out.put("distance", code.distance);
    out.put("rho", code.rho);
    out.put("radius", code.radius());
    out.put("L", code.list_size);
}

fn params(out: &mut Report, k: usize, epsilon: f64, scheme: &str) -> Outcome {
    let code = choose_params(k, epsilon, code_scheme(scheme)?)?;
    put_code(out, &code);
    Ok(())
}

fn store(out: &mut Report, a: &StoreArgs) -> Outcome {
    let data = fs::read(&a.file).map_err(Error::from)?;
    let plan = StorePlan {
        scheme: a.scheme,
        code: code_scheme(&a.code)?,
        epsilon: a.epsilon,
        servers: a.net.servers.len(),
        budget: ParityBudget { r: a.r, e: a.e },
        modulus: DEFAULT_MODULUS,
        seed: a.seed,
        audits: a.audits,
    };
    let (msg, bundle) = prepare(&data, &plan)?;
    bundle.save(&a.token)?;
    Client::new(a.net.timeout_ms).push_shards(&bundle, &msg, &a.net.servers)?;
    out.put("scheme", bundle.header.scheme);
    put_code(out, &bundle.header.code);
    out.put("servers", bundle.header.servers);
    out.put("bytes", data.len());
    out.put("audits", bundle.records.len());
    out.put("object", format!("{:016x}", bundle.object_id()));
    out.put("token", a.token.display());
    Ok(())
}

/// Runs one audit; the record is marked consumed on disk before any
/// challenge goes out.
fn audit_once(
    out: &mut Report,
    token_path: &Path,
    expect: Option<ProtocolScheme>,
    net: &Net,
) -> Outcome {
    let mut bundle = TokenBundle::load(token_path)?;
    if let Some(s) = expect {
        if s != bundle.header.scheme {
            return Err(
                Error::Usage(format!("token is for {}, not {s}", bundle.header.scheme)).into(),
            );
        }
    }
    let token = bundle.take_next()?;
    bundle.save(token_path)?;
    let results = Client::new(net.timeout_ms).audit(&token, bundle.object_id(), &net.servers)?;
    let unreachable: Vec<usize> = results
        .iter()
        .enumerate()
        .filter_map(|(i, r)| matches!(r, Err(Error::Io(_))).then_some(i))
        .collect();
    out.put("scheme", token.scheme());
    out.put("beta", token.beta());
    out.put("remaining", bundle.remaining());
    out.put("unreachable", join(&unreachable));
    let tolerates_silence = matches!(
        token.scheme(),
        ProtocolScheme::Trivial | ProtocolScheme::RsParity
    );
    if !unreachable.is_empty() && !tolerates_silence {
        out.put("verdict", "UNREACHABLE");
        return Err(Failure::Exit(EXIT_UNREACHABLE));
    }
    let replies: Vec<Reply> = results
        .into_iter()
        .map(|r| r.unwrap_or(Reply::NoResponse))
        .collect();
    let verdict = verify(&token, &replies).map_err(|e| match e {
        Error::Protocol(_) => Failure::Exit(EXIT_UNREACHABLE),
        e => e.into(),
    })?;
    match &verdict {
        AuditVerdict::Bit { pass, failed } => {
            out.put("verdict", if *pass { "PASS" } else { "FAIL" });
            out.put("failed", join(failed));
        }
        AuditVerdict::Located { cheaters, erased } => {
            out.put("verdict", if cheaters.is_empty() { "PASS" } else { "FAIL" });
            out.put("cheaters", join(cheaters));
            out.put("erased", join(erased));
        }
        AuditVerdict::DecodingFailure { erased } => {
            out.put("verdict", "DECODING_FAILURE");
            out.put("erased", join(erased));
        }
    }
    if verdict.passed() {
        Ok(())
    } else {
        Err(Failure::Exit(EXIT_FAIL))
    }
}

fn simulate(out: &mut Report, a: &SimulateArgs) -> Outcome {
    let field = PrimeField::new(a.q)?;
    let s = if a.scheme == ProtocolScheme::Single {
        1
    } else {
        a.models.len().max(1)
    };
    let mut gen = ChallengeRng::new(a.seed);
    let symbols = (0..a.k).map(|_| field.element(gen.index(a.q))).collect();
    let msg = Message::from_symbols(symbols, s)?;
    let n = a.n.unwrap_or(a.q as usize);
    let k = if a.scheme == ProtocolScheme::Trivial {
        msg.layout().shard_len
    } else {
        msg.len()
    };
    let code = CodeParams::reed_solomon(k, n, a.q)?;
    let header =
        sten::protocol::TokenHeader::new(a.scheme, code, s, ParityBudget { r: a.r, e: a.e }, 0)?;
    let mut rows = Vec::new();
    if !a.sweep.is_empty() {
        let table = storage_tradeoff_sweep(&msg, &header, &a.sweep, a.seed)?;
        for row in &table.rows {
            let models = vec![
                ServerModel::Partial {
                    fraction: row.fraction
                };
                s
            ];
            let sc = Scenario::new(&msg, header.clone(), models, a.seed)?;
            rows.push(ReportRow::new(&sc, row.pass.probability(), row.pass.n));
        }
        out.put("monotone", table.monotone());
    } else {
        let models = if a.scheme == ProtocolScheme::Single {
            a.models[..1].to_vec()
        } else {
            a.models.clone()
        };
        let sc = Scenario::new(&msg, header, models, a.seed)?;
        if a.trials == 0 {
            let p = exhaustive_pass_probability(&sc)?;
            rows.push(ReportRow::new(&sc, p.probability(), p.n));
            out.put("passes", format!("{}/{}", p.passes, p.n));
        } else {
            let rep = run_audit_trials(&sc, a.trials, a.seed)?;
            rows.push(ReportRow::new(&sc, rep.pass_rate(), rep.trials));
            out.put("std_error", rep.std_error());
            out.put("flag_rates", join(&rep.flag_rates()));
            for (label, count) in &rep.histogram {
                out.put(&format!("verdict_{label}"), count);
            }
        }
    }
    for row in &rows {
        out.put("row", row.to_kv());
    }
    if let Some(path) = &a.csv {
        let mut text = format!("{CSV_HEADER}\n");
        for row in &rows {
            text.push_str(&row.to_csv());
            text.push('\n');
        }
        fs::write(path, text).map_err(Error::from)?;
    }
    Ok(())
}

fn extract(out: &mut Report, a: &ExtractArgs) -> Outcome {
    let field = PrimeField::new(a.q)?;
    let code = ReedSolomon::new(a.k, a.n, field)?;
    let params = CodeParams::reed_solomon(a.k, a.n, a.q)?;
    let mut ep = ExtractionParams::from_params(&params)?;
    if let Some(alpha) = a.alphabet {
        ep = ep.with_alphabet(alpha);
    }
    if a.errors > a.n {
        return Err(Error::Usage("more errors than positions".into()).into());
    }
    let mut gen = ChallengeRng::new(a.seed);
    let x: Vec<_> = (0..a.k)
        .map(|_| field.element(gen.index(ep.alphabet)))
        .collect();
    let mut answers = code.codeword(&x);
    let mut positions: Vec<usize> = (0..a.n).collect();
    for i in 0..a.errors {
        let j = i + gen.index((a.n - i) as u64) as usize;
        positions.swap(i, j);
        let p = positions[i];
        answers[p] = answers[p] + field.element(1 + gen.index(a.q - 1));
    }
    let wrong = hamming(&answers, &code.codeword(&x));
    let responder = FnResponder::new(0, |b| answers[b]);
    let res = extract_list(&responder, &code, ep, Some(&x))?;
    out.put("radius", res.radius);
    out.put("L", res.list_bound);
    out.put("wrong_answers", wrong);
    out.put("list_size", res.list.len());
    out.put("within_bound", res.within_bound());
    out.put(
        "advice",
        res.advice.map_or("none".to_string(), |v| v.to_string()),
    );
    out.put("advice_bits", res.advice_bits());
    Ok(())
}

fn bound(out: &mut Report, a: &BoundArgs) -> Outcome {
    let code = choose_params(a.k, a.epsilon, code_scheme(&a.code)?)?;
    let c = match (&a.file, a.c_bits) {
        (Some(p), _) => kolmogorov_upper_estimate(&fs::read(p).map_err(Error::from)?) as f64,
        (None, Some(c)) => c,
        (None, None) => return Err(Error::Usage("give --file or --c-bits".into()).into()),
    };
    let b = storage_bound_for(a.scheme, &code, a.servers, c, a.c0)?;
    out.put("scheme", b.scheme);
    out.put("q", code.max_alphabet());
    out.put("L", code.list_size);
    out.put("n", code.n);
    out.put("s", a.servers);
    out.put("c_upper_estimate", b.c_estimate);
    for t in &b.terms {
        out.put(&format!("term_{}", t.label), t.bits);
    }
    out.put("c0", b.c0);
    out.put("slack", b.slack);
    out.put("f_value", b.f_value);
    Ok(())
}

fn demo(out: &mut Report, a: &DemoArgs) -> Outcome {
    if a.net.servers.len() != 1 {
        return Err(Error::Usage("the demo uses exactly one endpoint".into()).into());
    }
    let mut gen = ChallengeRng::new(a.seed);
    let mut data = Vec::with_capacity(a.size + 8);
    while data.len() < a.size {
        data.extend(gen.next_u64().to_le_bytes());
    }
    data.truncate(a.size);
    let plan = StorePlan {
        scheme: ProtocolScheme::Single,
        epsilon: a.epsilon,
        seed: a.seed,
        audits: 1,
        ..StorePlan::default()
    };
    let (msg, bundle) = prepare(&data, &plan)?;
    let c = kolmogorov_upper_estimate(&data);
    let b = storage_bound_for(
        ProtocolScheme::Single,
        &bundle.header.code,
        1,
        c as f64,
        0.0,
    )?;
    out.put("bytes", data.len());
    out.put("c_upper_estimate", c);
    out.put("f_value", b.f_value);
    let path = a.token.clone().unwrap_or_else(|| {
        std::env::temp_dir().join(format!("sten-demo-{}.tok", std::process::id()))
    });
    bundle.save(&path)?;
    let client = Client::new(a.net.timeout_ms);
    if let Err(e) = client.push_shards(&bundle, &msg, &a.net.servers) {
        out.put("verdict", "UNREACHABLE");
        out.put("error", e);
        return Err(Failure::Exit(EXIT_UNREACHABLE));
    }
    let res = audit_once(out, &path, None, &a.net);
    if a.token.is_none() {
        let _ = fs::remove_file(&path);
    }
    res
}

fn run(cli: &Cli, out: &mut Report) -> Outcome {
    match &cli.command {
        Command::Params { k, epsilon, scheme } => params(out, *k, *epsilon, scheme),
        Command::Store(a) => store(out, a),
        Command::Audit(a) => audit_once(out, &a.token, a.scheme, &a.net),
        Command::Serve { listen, dir } => {
            let server = Server::bind(listen.as_str(), dir)?;
            eprintln!("listening on {}", server.local_addr()?);
            server.run()?;
            Ok(())
        }
        Command::Simulate(a) => simulate(out, a),
        Command::Extract(a) => extract(out, a),
        Command::Bound(a) => bound(out, a),
        Command::EnforceDemo(a) => demo(out, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = Report::new(cli.porcelain);
    let result = run(&cli, &mut out);
    out.print();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Exit(EXIT_EXHAUSTED)) => {
            eprintln!("no unconsumed audits");
            ExitCode::from(EXIT_EXHAUSTED)
        }
        Err(Failure::Exit(code)) => ExitCode::from(code),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
