use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use knockout::generators::{gen_bigsmall, gen_hard, gen_threetier, gen_unbalanced, uniform_perturbation};
use knockout::robustness::{drop_estimate, worst_perturbation_witness};
use knockout::solvers::HeuristicConfig;
use knockout::{
    count_draws, crucial_matches, crucial_matches_oracle, enumerate_draws, exact_worst_drop_oracle,
    sensitivity, solve, win_probabilities, wp_by_outcome_enumeration, Draw, DrawFile, Matrix, MatrixFile,
    PlayerId, Problem, SearchMode, SolveRequest,
};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(name = "knockout", version, about = "Knockout tournament analysis")]
struct Cli {
    /// Indent JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print a generated comparison matrix.
    Gen {
        #[command(subcommand)]
        family: Family,
    },
    /// Winning probabilities under a draw.
    Winprob {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        player: Option<usize>,
    },
    /// Replace every 0/1 entry by eps/1-eps and print the matrix.
    Perturb {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        eps: f64,
    },
    /// Sensitivity report and first-order drop.
    Drop {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        player: usize,
        #[arg(long)]
        eps: Option<f64>,
        /// Also build the worst-direction perturbation (needs --eps).
        #[arg(long, requires = "eps")]
        witness: bool,
    },
    /// Crucial matches of a deterministic tournament.
    Crucial {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        player: usize,
        /// Cross-check against the replay oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Search for a draw.
    Solve {
        problem: ProblemArg,
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        player: usize,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        c: Option<u64>,
        #[arg(long)]
        s: Option<f64>,
        /// Seeded local search instead of the exact scan.
        #[arg(long)]
        heuristic: bool,
        #[arg(long, default_value_t = 20)]
        restarts: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        max_steps: u32,
        #[arg(long, env = "KNOCKOUT_JOBS", default_value_t = 1)]
        jobs: usize,
    },
    /// Brute-force reference values.
    Oracle {
        what: OracleArg,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        player: usize,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        allow_large: bool,
    },
    /// Count or list canonical draws.
    Draws {
        #[command(subcommand)]
        action: DrawsAction,
    },
}

#[derive(Args, Debug)]
struct Input {
    /// Matrix file, or - for stdin.
    #[arg(long)]
    matrix: String,
    /// Draw file, or - for stdin.
    #[arg(long)]
    draw: String,
}

#[derive(Subcommand, Debug)]
enum Family {
    Hard { n: u32 },
    Unbalanced { n: u32 },
    Bigsmall {
        n: u32,
        #[arg(long)]
        p: f64,
    },
    Threetier {
        n: u32,
        #[arg(long)]
        eps: f64,
    },
}

#[derive(Subcommand, Debug)]
enum DrawsAction {
    Count { n: u32 },
    List {
        n: u32,
        #[arg(long)]
        allow_large: bool,
    },
    /// Print the draw file for (1, ..., 2^n).
    Identity { n: u32 },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ProblemArg {
    Tfp,
    Ptfp,
    Rtfp,
    Rptfp,
}

impl From<ProblemArg> for Problem {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::Tfp => Problem::Tfp,
            ProblemArg::Ptfp => Problem::Ptfp,
            ProblemArg::Rtfp => Problem::Rtfp,
            ProblemArg::Rptfp => Problem::Rptfp,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum OracleArg {
    Wp,
    Drop,
}

#[derive(Debug)]
enum Failure {
    Core(knockout::Error),
    Io(String),
    Parse(String),
    Usage(String),
    OracleMismatch(String),
}

impl Failure {
    fn kind(&self) -> &'static str {
        match self {
            Failure::Core(e) => e.kind(),
            Failure::Io(_) => "IoError",
            Failure::Parse(_) => "ParseError",
            Failure::Usage(_) => "UsageError",
            Failure::OracleMismatch(_) => "OracleMismatch",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::Io(m) | Failure::Parse(m) | Failure::Usage(m) | Failure::OracleMismatch(m) => m.clone(),
        }
    }
}

impl From<knockout::Error> for Failure {
    fn from(e: knockout::Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(Value, u8), Failure>;

/// Collects input digests and warnings while a command runs.
#[derive(Default)]
struct Session {
    inputs: BTreeMap<String, Value>,
    warnings: Vec<String>,
    stdin_used: bool,
}

impl Session {
    fn read(&mut self, role: &str, path: &str) -> Result<Vec<u8>, Failure> {
        let bytes = if path == "-" {
            if self.stdin_used {
                return Err(Failure::Usage("stdin can only be read once".into()));
            }
            self.stdin_used = true;
            let mut buf = Vec::new();
            io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| Failure::Io(format!("stdin: {e}")))?;
            buf
        } else {
            fs::read(path).map_err(|e| Failure::Io(format!("{path}: {e}")))?
        };
        self.inputs.insert(
            role.to_string(),
            json!({ "path": path, "sha256": hex::encode(Sha256::digest(&bytes)) }),
        );
        Ok(bytes)
    }

    fn matrix(&mut self, path: &str) -> Result<Matrix, Failure> {
        let bytes = self.read("matrix", path)?;
        let file: MatrixFile =
            serde_json::from_slice(&bytes).map_err(|e| Failure::Parse(format!("matrix file {path}: {e}")))?;
        Ok(Matrix::from_file(&file)?)
    }

    fn draw(&mut self, path: &str) -> Result<Draw, Failure> {
        let bytes = self.read("draw", path)?;
        let file: DrawFile =
            serde_json::from_slice(&bytes).map_err(|e| Failure::Parse(format!("draw file {path}: {e}")))?;
        let draw = Draw::new(file.leaves)?;
        if !draw.is_canonical() {
            let canonical = draw.canonicalize();
            self.warnings
                .push(format!("draw {draw} is not canonical; using the equivalent {canonical}"));
            return Ok(canonical);
        }
        Ok(draw)
    }

    fn inputs(&mut self, input: &Input) -> Result<(Matrix, Draw), Failure> {
        let matrix = self.matrix(&input.matrix)?;
        let draw = self.draw(&input.draw)?;
        Ok((matrix, draw))
    }

    fn eps_warning(&mut self, eps: f64, matrix: &Matrix) {
        let xi = matrix.xi();
        if eps > xi {
            self.warnings.push(format!(
                "eps = {eps} exceeds xi(P) = {xi}; the first-order estimate is not claimed to hold"
            ));
        }
    }
}

fn player(index: usize, size: usize) -> Result<PlayerId, Failure> {
    PlayerId::new(index)
        .filter(|p| p.index() <= size)
        .ok_or(Failure::Core(knockout::Error::InvalidPlayer { player: index, size }))
}

fn to_value<S: Serialize>(v: &S) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Commands whose output is a bare file payload rather than a report.
fn raw(cmd: &Command) -> bool {
    matches!(
        cmd,
        Command::Gen { .. } | Command::Perturb { .. } | Command::Draws { action: DrawsAction::Identity { .. } }
    )
}

fn execute(cmd: &Command, s: &mut Session) -> Outcome {
    match cmd {
        Command::Gen { family } => {
            let m: Matrix = match *family {
                Family::Hard { n } => gen_hard(n)?,
                Family::Unbalanced { n } => gen_unbalanced(n)?,
                Family::Bigsmall { n, p } => gen_bigsmall(n, p)?.matrix,
                Family::Threetier { n, eps } => gen_threetier(n, eps)?,
            };
            Ok((to_value(&m), 0))
        }
        Command::Perturb { matrix, eps } => {
            let m = s.matrix(matrix)?;
            Ok((to_value(&uniform_perturbation(&m, *eps)?), 0))
        }
        Command::Winprob { input, player: who } => {
            let (m, d) = s.inputs(input)?;
            let wp = win_probabilities(&m, &d)?;
            let result = match who {
                Some(i) => {
                    let p = player(*i, m.size())?;
                    json!({ "draw": d, "player": p, "wp": wp[p.index() - 1] })
                }
                None => json!({ "draw": d, "wp": wp }),
            };
            Ok((result, 0))
        }
        Command::Drop {
            input,
            player: who,
            eps,
            witness,
        } => {
            let (m, d) = s.inputs(input)?;
            let p = player(*who, m.size())?;
            let report = sensitivity(&m, &d, p)?;
            let mut result = json!({ "draw": d, "sensitivity": report });
            if let Some(eps) = *eps {
                s.eps_warning(eps, &m);
                result["estimate"] = to_value(&drop_estimate(&report, eps)?);
                if *witness {
                    result["witness"] = to_value(&worst_perturbation_witness(&report, &m, eps)?);
                }
            }
            Ok((result, 0))
        }
        Command::Crucial {
            input,
            player: who,
            oracle,
        } => {
            let (m, d) = s.inputs(input)?;
            let p = player(*who, m.size())?;
            let report = crucial_matches(&m, &d, p)?;
            let mut result = json!({ "draw": d, "crucial": report });
            if *oracle {
                let slow = crucial_matches_oracle(&m, &d, p)?;
                if slow != report {
                    return Err(Failure::OracleMismatch(format!(
                        "fast count {} but replay oracle found {}",
                        report.count, slow.count
                    )));
                }
                result["oracle_agrees"] = Value::Bool(true);
            }
            Ok((result, 0))
        }
        Command::Solve {
            problem,
            matrix,
            player: who,
            q,
            c,
            s: bound,
            heuristic,
            restarts,
            seed,
            max_steps,
            jobs,
        } => {
            let m = s.matrix(matrix)?;
            let p = player(*who, m.size())?;
            let mut req = SolveRequest::new((*problem).into(), &m, p);
            req.q = *q;
            req.c = *c;
            req.s = *bound;
            req.jobs = *jobs;
            if *heuristic {
                req.mode = SearchMode::Heuristic(HeuristicConfig {
                    restarts: *restarts,
                    seed: *seed,
                    max_steps: *max_steps,
                });
                s.warnings
                    .push("heuristic search: a negative answer is not a proof".into());
            }
            let res = solve(&req)?;
            let code = if res.answer.is_positive() { 0 } else { 1 };
            Ok((to_value(&res), code))
        }
        Command::Oracle {
            what,
            input,
            player: who,
            eps,
            allow_large,
        } => {
            let (m, d) = s.inputs(input)?;
            let p = player(*who, m.size())?;
            let result = match what {
                OracleArg::Wp => {
                    json!({ "draw": d, "player": p, "wp": wp_by_outcome_enumeration(&m, &d, p)? })
                }
                OracleArg::Drop => {
                    let eps = eps.ok_or_else(|| Failure::Usage("oracle drop needs --eps".into()))?;
                    s.eps_warning(eps, &m);
                    let exact = exact_worst_drop_oracle(&m, &d, p, eps, *allow_large)?;
                    json!({ "draw": d, "player": p, "epsilon": eps, "exact": exact })
                }
            };
            Ok((result, 0))
        }
        Command::Draws { action } => match *action {
            DrawsAction::Count { n } => Ok((json!({ "n": n, "count": count_draws(n)?.to_string() }), 0)),
            DrawsAction::List { n, allow_large } => {
                let draws: Vec<Vec<usize>> = enumerate_draws(n, allow_large)?.map(|d| d.to_vec()).collect();
                Ok((json!({ "n": n, "count": draws.len(), "draws": draws }), 0))
            }
            DrawsAction::Identity { n } => {
                if n == 0 || n > 6 {
                    return Err(Failure::Usage(format!("n = {n} must lie in 1..=6")));
                }
                Ok((to_value(&Draw::identity(n)), 0))
            }
        },
    }
}

fn emit(value: &Value, pretty: bool) {
    let text = if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .expect("json values serialize");
    let mut out = io::stdout().lock();
    // a closed pipe is not worth a panic
    let _ = writeln!(out, "{text}");
}

fn error_json(f: &Failure) -> Value {
    json!({ "error": { "kind": f.kind(), "message": f.message() } })
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let pretty = argv.iter().any(|a| a == "--pretty");
            let message = e.render().to_string();
            emit(&error_json(&Failure::Usage(message.trim().to_string())), pretty);
            return ExitCode::from(2);
        }
    };
    let mut session = Session::default();
    match execute(&cli.command, &mut session) {
        Ok((result, code)) => {
            if raw(&cli.command) {
                for w in &session.warnings {
                    eprintln!("warning: {w}");
                }
                emit(&result, cli.pretty);
            } else {
                let report = json!({
                    "command": &argv[1..],
                    "inputs": session.inputs,
                    "result": result,
                    "warnings": session.warnings,
                });
                emit(&report, cli.pretty);
            }
            ExitCode::from(code)
        }
        Err(f) => {
            emit(&error_json(&f), cli.pretty);
            ExitCode::from(2)
        }
    }
}
