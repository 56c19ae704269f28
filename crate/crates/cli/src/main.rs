use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use halasz_core::bounds::{self, AtomGeneralOptions, BoundParams, SbpGeneralOptions, VectorSystem};
use halasz_core::exact::{self, ExactMatrix};
use halasz_core::hadamard::{self, CensusOptions, PartitionOutcome, PipelineOptions};
use halasz_core::normal::{self, SolverOptions};
use halasz_core::numeric::ratio_string;
use halasz_core::oracle::{self, CenterPolicy, Method};
use halasz_core::verify::{self, SweepConfig};

const VERSION: &str = concat!("halasz-cli ", env!("CARGO_PKG_VERSION"));

#[derive(Parser)]
#[command(name = "halasz", version, about = "Exact anti-concentration bounds, oracles and censuses")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form bounds.
    #[command(subcommand)]
    Bound(BoundCmd),
    /// Exact enumeration oracles.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Greedy (r, ell)-rank partition of a matrix's columns.
    RankPartition(RankPartitionArgs),
    #[command(subcommand)]
    Hadamard(HadamardCmd),
    #[command(subcommand)]
    Normal(NormalCmd),
    /// Seeded verification sweeps.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Args)]
struct SystemArg {
    /// Vector system JSON file, or `-` for stdin.
    #[arg(long)]
    system: PathBuf,
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long = "M", default_value_t = 1.0)]
    m: f64,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
}

impl ParamArgs {
    fn params(&self) -> BoundParams {
        BoundParams {
            m: self.m,
            eps: self.eps,
            delta: self.delta,
            lambda: self.lambda,
            c: self.c,
        }
    }
}

#[derive(Subcommand)]
enum BoundCmd {
    /// 2^d.
    Odlyzko {
        #[arg(long)]
        d: u64,
    },
    /// binom(n, n/2) / 2^n.
    Elo {
        #[arg(long)]
        n: u64,
    },
    /// Atom bound from block ranks, checked against the oracle when a system is given.
    HalaszAtom {
        #[arg(long, value_delimiter = ',')]
        ranks: Option<Vec<usize>>,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long, conflicts_with = "ranks")]
        system: Option<PathBuf>,
        /// Replace the system's partition with the best greedy one.
        #[arg(long, requires = "system")]
        auto_partition: bool,
        #[arg(long, default_value_t = oracle::DEFAULT_ATOM_CAP)]
        cap: usize,
    },
    HalaszSbp {
        #[command(flatten)]
        system: SystemArg,
        #[command(flatten)]
        params: ParamArgs,
    },
    AtomGeneral {
        #[command(flatten)]
        system: SystemArg,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 4)]
        divisor: u64,
        #[arg(long)]
        per_block_denominator: bool,
        #[arg(long, default_value_t = bounds::DEFAULT_TUPLE_CAP)]
        tuple_cap: usize,
    },
    SbpGeneral {
        #[command(flatten)]
        system: SystemArg,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 4)]
        divisor: u64,
        /// Multiply by 2^d.
        #[arg(long)]
        prefactor: bool,
        #[arg(long, default_value_t = bounds::DEFAULT_TUPLE_CAP)]
        tuple_cap: usize,
    },
    Rogozin {
        /// Values 1 - L(X_i, 1), comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        complements: Vec<f64>,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
    },
    /// Both the classical and the improved constant bound.
    Howard {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        m: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Naive,
    Mitm,
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Exact distribution of the signed sum.
    Atoms {
        #[command(flatten)]
        system: SystemArg,
        #[arg(long, default_value_t = oracle::DEFAULT_ATOM_CAP)]
        cap: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        /// Include every atom in the result.
        #[arg(long)]
        table: bool,
    },
    /// Number of x in {-1,1}^n with Ax = b.
    Count {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        rhs: Vec<i64>,
        #[arg(long, default_value_t = oracle::DEFAULT_SOLUTION_CAP)]
        cap: usize,
    },
    /// Hypercube points in the row space.
    Combdim {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = oracle::DEFAULT_COMBDIM_CAP)]
        cap: usize,
    },
    /// Lower bound on the concentration function.
    Levy {
        #[command(flatten)]
        system: SystemArg,
        #[arg(long)]
        radius: f64,
        /// Also try midpoints of pairs of atoms as centers.
        #[arg(long)]
        midpoints: bool,
    },
}

#[derive(Args)]
struct RankPartitionArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    ell: usize,
}

#[derive(Subcommand)]
enum HadamardCmd {
    /// Count k x n sign matrices with orthogonal rows.
    Census {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        /// Fix the first row to all ones and scale by 2^n.
        #[arg(long)]
        normalize: bool,
        #[arg(long, default_value_t = hadamard::DEFAULT_NODE_BUDGET)]
        budget: u64,
        /// Also emit matrices in the shared text format.
        #[arg(long)]
        emit_matrices: bool,
        #[arg(long, default_value_t = 1000)]
        limit: usize,
    },
    /// Run the counting pipeline checks on every census matrix.
    Verify {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        /// Check every matrix instead of one per column-negation class.
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = hadamard::DEFAULT_NODE_BUDGET)]
        budget: u64,
    },
    /// Exponent of the final counting bound.
    Exponent {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        c1: f64,
        #[arg(long)]
        c2: f64,
        #[arg(long = "C")]
        c: f64,
    },
}

#[derive(Subcommand)]
enum NormalCmd {
    /// Test M M^T - M^T M = N.
    Check {
        #[arg(long)]
        matrix: PathBuf,
        /// Target N (default: zero).
        #[arg(long)]
        target: Option<PathBuf>,
    },
    /// The six case restrictions on beta and the improved split.
    Constants {
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 1.0 / 1024.0)]
        beta_small: f64,
    },
    /// Exhaustive census of N-normal sign matrices.
    Census {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long, default_value_t = normal::DEFAULT_CENSUS_BUDGET)]
        budget: u64,
        #[arg(long)]
        emit_matrices: bool,
    },
    /// Frequency of low rank among random sign matrices.
    RankExperiment {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    Replication {
        #[arg(long, default_value_t = 1000)]
        instances: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    HalaszSweep {
        #[arg(long, default_value_t = 500)]
        instances: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        max_d: usize,
        #[arg(long, default_value_t = 20)]
        max_n: usize,
        #[arg(long, default_value_t = 2)]
        entry: i64,
    },
    Erdos {
        #[arg(long, default_value_t = 500)]
        instances: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        max_n: usize,
    },
    Odlyzko {
        #[arg(long, default_value_t = 200)]
        instances: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        max_n: usize,
        #[arg(long, default_value_t = 10)]
        max_rank: usize,
    },
    CauchyBinet {
        #[arg(long, default_value_t = 200)]
        instances: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        max_rows: usize,
        #[arg(long, default_value_t = 10)]
        max_cols: usize,
    },
}

struct Outcome {
    command: &'static str,
    seed: Option<u64>,
    params: Value,
    result: Value,
    passed: bool,
    headline: String,
    /// Matrices streamed after the report in text mode.
    matrices: Vec<String>,
}

impl Outcome {
    fn new(command: &'static str, params: Value, result: Value, headline: String) -> Self {
        Outcome {
            command,
            seed: None,
            params,
            result,
            passed: true,
            headline,
            matrices: Vec::new(),
        }
    }

    fn passed(mut self, passed: bool) -> Self {
        self.passed = passed;
        self
    }

    fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    fn report(&self) -> Value {
        json!({
            "command": self.command,
            "version": VERSION,
            "seed": self.seed,
            "params": self.params,
            "result": self.result,
            "passed": self.passed,
        })
    }
}

fn read_input(path: &Path) -> anyhow::Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn load_system(path: &Path) -> anyhow::Result<VectorSystem> {
    Ok(VectorSystem::from_json(&read_input(path)?)?)
}

fn load_matrix(path: &Path) -> anyhow::Result<ExactMatrix> {
    Ok(exact::parse_matrix(&read_input(path)?)?)
}

fn load_target(path: Option<&Path>, n: usize) -> anyhow::Result<ExactMatrix> {
    match path {
        Some(p) => load_matrix(p),
        None => Ok(ExactMatrix::zeros(n, n)),
    }
}

fn run_bound(cmd: BoundCmd) -> anyhow::Result<Outcome> {
    Ok(match cmd {
        BoundCmd::Odlyzko { d } => {
            let v = bounds::odlyzko_bound(d).to_string();
            Outcome::new("bound odlyzko", json!({"d": d}), json!({"value": v}), v)
        }
        BoundCmd::Elo { n } => {
            let (num, den) = bounds::erdos_lo_parts(n)?;
            let reduced = ratio_string(&bounds::erdos_lo_bound(n)?);
            let unreduced = format!("{num}/{den}");
            Outcome::new(
                "bound elo",
                json!({"n": n}),
                json!({"value": reduced, "unreduced": unreduced}),
                unreduced,
            )
        }
        BoundCmd::HalaszAtom {
            ranks,
            ell,
            system,
            auto_partition,
            cap,
        } => match (ranks, system) {
            (Some(ranks), None) => {
                let ell = ell.unwrap_or(ranks.len());
                let b = bounds::halasz_atom_bound(&ranks, ell)?;
                let head = b.upper_f64().to_string();
                Outcome::new(
                    "bound halasz-atom",
                    json!({"ranks": ranks, "ell": ell}),
                    json!({"bound": b.to_json()}),
                    head,
                )
            }
            (None, Some(path)) => {
                let mut sys = load_system(&path)?;
                if auto_partition {
                    sys = match verify::best_halasz_partition(&sys)? {
                        Some((s, _)) => s,
                        None => bail!("no even rank partition found for this system"),
                    };
                }
                let ranks = sys.block_ranks();
                let b = bounds::halasz_atom_bound(&ranks, sys.ell())?;
                let atom = oracle::atom_distribution(&sys, cap, Method::Auto)?.max_atom();
                let ok = b.dominates(&atom);
                Outcome::new(
                    "bound halasz-atom",
                    json!({"system": sys.to_json(), "auto_partition": auto_partition, "cap": cap}),
                    json!({
                        "ranks": ranks,
                        "ell": sys.ell(),
                        "bound": b.to_json(),
                        "atom_max": ratio_string(&atom),
                    }),
                    format!("{} <= {}", ratio_string(&atom), b.upper_f64()),
                )
                .passed(ok)
            }
            _ => bail!("give either --ranks or --system"),
        },
        BoundCmd::HalaszSbp { system, params } => {
            let sys = load_system(&system.system)?;
            let p = params.params();
            let v = bounds::halasz_sbp_bound(&sys, &p)?;
            Outcome::new(
                "bound halasz-sbp",
                json!({"system": sys.to_json(), "params": p}),
                json!({"value": v}),
                v.to_string(),
            )
        }
        BoundCmd::AtomGeneral {
            system,
            lambda,
            c,
            divisor,
            per_block_denominator,
            tuple_cap,
        } => {
            let sys = load_system(&system.system)?;
            let opts = AtomGeneralOptions {
                divisor,
                cap: tuple_cap,
                per_block_denominator,
            };
            let r = bounds::atom_general_bound(&sys, lambda, c, &opts)?;
            Outcome::new(
                "bound atom-general",
                json!({
                    "system": sys.to_json(),
                    "lambda": lambda,
                    "C": c,
                    "divisor": divisor,
                    "per_block_denominator": per_block_denominator,
                    "tuple_cap": tuple_cap,
                }),
                r.to_json(),
                r.value.to_string(),
            )
        }
        BoundCmd::SbpGeneral {
            system,
            params,
            divisor,
            prefactor,
            tuple_cap,
        } => {
            let sys = load_system(&system.system)?;
            let p = params.params();
            let opts = SbpGeneralOptions {
                divisor,
                cap: tuple_cap,
                include_2d_prefactor: prefactor,
            };
            let r = bounds::sbp_general_bound(&sys, &p, &opts)?;
            Outcome::new(
                "bound sbp-general",
                json!({
                    "system": sys.to_json(),
                    "params": p,
                    "divisor": divisor,
                    "prefactor": prefactor,
                    "tuple_cap": tuple_cap,
                }),
                r.to_json(),
                r.value.to_string(),
            )
        }
        BoundCmd::Rogozin { complements, c } => {
            let v = bounds::rogozin_bound(&complements, c)?;
            Outcome::new(
                "bound rogozin",
                json!({"complements": complements, "C": c}),
                json!({"value": v}),
                v.to_string(),
            )
        }
        BoundCmd::Howard { d, m } => {
            let h = bounds::howard_oskolkov_bound(d, m)?;
            let i = bounds::improved_constant_bound(d, m)?;
            Outcome::new(
                "bound howard",
                json!({"d": d, "m": m}),
                json!({"howard": h, "improved": i}),
                format!("howard {h} improved {i}"),
            )
            .passed(i <= h)
        }
    })
}

fn run_oracle(cmd: OracleCmd) -> anyhow::Result<Outcome> {
    Ok(match cmd {
        OracleCmd::Atoms {
            system,
            cap,
            method,
            table,
        } => {
            let sys = load_system(&system.system)?;
            let m = match method {
                MethodArg::Auto => Method::Auto,
                MethodArg::Naive => Method::Naive,
                MethodArg::Mitm => Method::MeetInMiddle,
            };
            let t = oracle::atom_distribution(&sys, cap, m)?;
            let max = t.max_count();
            let argmax: Vec<&Vec<i64>> = t.counts.iter().filter(|(_, &c)| c == max).map(|(p, _)| p).collect();
            let mut result = json!({
                "n": t.n,
                "d": t.d,
                "denominator": t.denominator().to_string(),
                "support_size": t.support_size(),
                "max_atom": ratio_string(&t.max_atom()),
                "argmax": argmax,
            });
            if table {
                let atoms: Vec<Value> = t
                    .counts
                    .iter()
                    .map(|(p, &c)| json!({"point": p, "count": c}))
                    .collect();
                result["atoms"] = Value::Array(atoms);
            }
            Outcome::new(
                "oracle atoms",
                json!({"system": sys.to_json(), "cap": cap, "method": format!("{m:?}")}),
                result,
                ratio_string(&t.max_atom()),
            )
        }
        OracleCmd::Count { matrix, rhs, cap } => {
            let a = load_matrix(&matrix)?;
            let count = oracle::count_sign_solutions(&a, &rhs, cap)?;
            let rank = exact::rank(&a);
            let bound = bounds::odlyzko_bound((a.cols() - rank) as u64);
            let ok = bound >= count.into();
            Outcome::new(
                "oracle count",
                json!({"matrix": exact::matrix_to_json(&a), "rhs": rhs, "cap": cap}),
                json!({"count": count, "rank": rank, "bound": bound.to_string()}),
                count.to_string(),
            )
            .passed(ok)
        }
        OracleCmd::Combdim { matrix, cap } => {
            let a = load_matrix(&matrix)?;
            let r = oracle::combinatorial_dimension(&a, cap)?;
            let ok = r.count <= bounds::odlyzko_bound(r.rank as u64);
            Outcome::new(
                "oracle combdim",
                json!({"matrix": exact::matrix_to_json(&a), "cap": cap}),
                json!({"count": r.count.to_string(), "d_pm": r.d_pm, "rank": r.rank}),
                r.count.to_string(),
            )
            .passed(ok)
        }
        OracleCmd::Levy {
            system,
            radius,
            midpoints,
        } => {
            let sys = load_system(&system.system)?;
            let policy = if midpoints {
                CenterPolicy::AtomsAndMidpoints
            } else {
                CenterPolicy::Atoms
            };
            let v = oracle::levy_lower_bound(&sys, radius, policy)?;
            Outcome::new(
                "oracle levy",
                json!({"system": sys.to_json(), "radius": radius, "midpoints": midpoints}),
                json!({"lower_bound": ratio_string(&v)}),
                ratio_string(&v),
            )
        }
    })
}

fn run_rank_partition(args: RankPartitionArgs) -> anyhow::Result<Outcome> {
    let m = load_matrix(&args.matrix)?;
    let params = json!({"matrix": exact::matrix_to_json(&m), "r": args.r, "ell": args.ell});
    Ok(match hadamard::greedy_rank_partition(&m, args.r, args.ell)? {
        PartitionOutcome::Found(p) => {
            let ok = p.verify(&m);
            Outcome::new(
                "rank-partition",
                params,
                json!({"found": true, "partition": p.to_json(), "covering": p.covering(m.cols())}),
                format!("{:?}", p.blocks),
            )
            .passed(ok)
        }
        PartitionOutcome::Failed { round, reached } => Outcome::new(
            "rank-partition",
            params,
            json!({"found": false, "round": round, "reached": reached}),
            format!("no partition: block {round} reached rank {reached}"),
        ),
    })
}

fn run_hadamard(cmd: HadamardCmd) -> anyhow::Result<Outcome> {
    Ok(match cmd {
        HadamardCmd::Census {
            k,
            n,
            normalize,
            budget,
            emit_matrices,
            limit,
        } => {
            let opts = CensusOptions {
                normalize_first_row: normalize,
                budget,
            };
            let c = hadamard::enumerate_partial_hadamard(k, n, &opts)?;
            let mut out = Outcome::new(
                "hadamard census",
                json!({"k": k, "n": n, "normalize": normalize, "budget": budget}),
                c.to_json(),
                c.count.to_string(),
            );
            if emit_matrices {
                let ms = hadamard::collect_partial_hadamard(k, n, &opts, limit)?;
                out.matrices = ms.iter().map(|m| m.to_sign_text()).collect();
                out.result["matrices"] = json!(out.matrices);
                out.params["limit"] = json!(limit);
            }
            out
        }
        HadamardCmd::Verify { k, n, all, budget } => {
            let opts = PipelineOptions {
                budget,
                representatives: !all,
            };
            let r = hadamard::pipeline_bound_check(k, n, &opts)?;
            let ok = r.passed();
            Outcome::new(
                "hadamard verify",
                json!({"k": k, "n": n, "all": all, "budget": budget}),
                r.to_json(),
                format!("{} matrices checked", r.matrices_checked),
            )
            .passed(ok)
        }
        HadamardCmd::Exponent { n, c1, c2, c } => {
            let v = hadamard::hadamard_upper_bound_exponent(n, c1, c2, c)?;
            Outcome::new(
                "hadamard exponent",
                json!({"n": n, "c1": c1, "c2": c2, "C": c}),
                json!({"exponent": v}),
                v.to_string(),
            )
        }
    })
}

fn run_normal(cmd: NormalCmd) -> anyhow::Result<Outcome> {
    Ok(match cmd {
        NormalCmd::Check { matrix, target } => {
            let m = exact::parse_sign_matrix(&read_input(&matrix)?)?;
            let t = load_target(target.as_deref(), m.rows())?;
            let c = normal::normal_check(&m, &t)?;
            Outcome::new(
                "normal check",
                json!({"matrix": exact::matrix_to_json(&m.to_exact()), "target": exact::matrix_to_json(&t)}),
                json!({
                    "normal": c.matrix_form && c.entrywise_form,
                    "matrix_form": c.matrix_form,
                    "entrywise_form": c.entrywise_form,
                }),
                (c.matrix_form && c.entrywise_form).to_string(),
            )
            .passed(c.matrix_form == c.entrywise_form)
        }
        NormalCmd::Constants { eps, beta_small } => {
            let opts = SolverOptions {
                eps,
                ..SolverOptions::default()
            };
            let base = normal::solve_case_constants(&opts)?;
            let improved = normal::improved_case_constants(beta_small, &base, &opts)?;
            let mut result = base.to_json();
            result["improved"] = improved.to_json();
            let head = base
                .cases
                .iter()
                .map(|c| format!("{}:{:.4}", c.id, c.beta))
                .collect::<Vec<_>>()
                .join(" ");
            Outcome::new(
                "normal constants",
                json!({"eps": eps, "beta_small": beta_small}),
                result,
                format!("{head} c_dv={:.6}", base.c_dv),
            )
        }
        NormalCmd::Census {
            n,
            target,
            budget,
            emit_matrices,
        } => {
            let t = load_target(target.as_deref(), n)?;
            let c = normal::partial_census(n, &t, budget)?;
            let mut out = Outcome::new(
                "normal census",
                json!({"n": n, "target": exact::matrix_to_json(&t), "budget": budget}),
                c.to_json(),
                c.normal_count.to_string(),
            )
            .passed(c.passed());
            if emit_matrices {
                out.matrices = c.normal.iter().map(|m| m.to_sign_text()).collect();
                out.result["matrices"] = json!(out.matrices);
            }
            out
        }
        NormalCmd::RankExperiment {
            m,
            gamma,
            trials,
            seed,
        } => {
            let r = normal::random_rank_experiment(m, gamma, trials, seed)?;
            Outcome::new(
                "normal rank-experiment",
                json!({"m": m, "gamma": gamma, "trials": trials}),
                json!({
                    "hits": r.hits,
                    "empirical": r.empirical,
                    "bound": r.bound,
                }),
                format!("{}/{}", r.hits, r.trials),
            )
            .seed(seed)
        }
    })
}

fn run_verify(cmd: VerifyCmd) -> anyhow::Result<Outcome> {
    Ok(match cmd {
        VerifyCmd::Replication { instances, seed } => {
            let r = verify::replication_sweep(instances, seed)?;
            Outcome::new(
                "verify replication",
                json!({"instances": instances}),
                r.to_json(),
                format!("passed={}", r.passed()),
            )
            .passed(r.passed())
            .seed(seed)
        }
        VerifyCmd::HalaszSweep {
            instances,
            seed,
            max_d,
            max_n,
            entry,
        } => {
            let cfg = SweepConfig {
                instances,
                max_d,
                max_n,
                entry,
                seed,
            };
            let r = verify::halasz_sweep(&cfg)?;
            Outcome::new(
                "verify halasz-sweep",
                cfg.to_json(),
                r.to_json(),
                format!("passed={}", r.passed()),
            )
            .passed(r.passed())
            .seed(seed)
        }
        VerifyCmd::Erdos {
            instances,
            seed,
            max_n,
        } => {
            let r = verify::erdos_sweep(instances, max_n, seed)?;
            Outcome::new(
                "verify erdos",
                json!({"instances": instances, "max_n": max_n}),
                r.to_json(),
                format!("passed={}", r.passed()),
            )
            .passed(r.passed())
            .seed(seed)
        }
        VerifyCmd::Odlyzko {
            instances,
            seed,
            max_n,
            max_rank,
        } => {
            let r = verify::odlyzko_sweep(instances, max_n, max_rank, seed)?;
            Outcome::new(
                "verify odlyzko",
                json!({"instances": instances, "max_n": max_n, "max_rank": max_rank}),
                r.to_json(),
                format!("passed={}", r.passed()),
            )
            .passed(r.passed())
            .seed(seed)
        }
        VerifyCmd::CauchyBinet {
            instances,
            seed,
            max_rows,
            max_cols,
        } => {
            let r = verify::cauchy_binet_sweep(instances, max_rows, max_cols, seed)?;
            Outcome::new(
                "verify cauchy-binet",
                json!({"instances": instances, "max_rows": max_rows, "max_cols": max_cols}),
                json!({"instances": r.instances, "mismatches": r.mismatches}),
                format!("passed={}", r.passed()),
            )
            .passed(r.passed())
            .seed(seed)
        }
    })
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render(out: &Outcome, format: Format) -> anyhow::Result<String> {
    let report = out.report();
    Ok(match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut rows = Vec::new();
            flatten("", &report, &mut rows);
            let mut s = String::from("key,value\n");
            for (k, v) in rows {
                s.push_str(&format!("{},{}\n", csv_field(&k), csv_field(&v)));
            }
            s
        }
        Format::Text => {
            let mut s = format!("{}\n", out.headline);
            let mut rows = Vec::new();
            flatten("", &report["result"], &mut rows);
            for (k, v) in rows {
                if !k.starts_with("matrices") {
                    s.push_str(&format!("{k}: {v}\n"));
                }
            }
            if let Some(seed) = out.seed {
                s.push_str(&format!("seed: {seed}\n"));
            }
            s.push_str(&format!("passed: {}\n", out.passed));
            for m in &out.matrices {
                s.push_str(m);
            }
            s
        }
    })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<halasz_core::Error>() {
        Some(e) if e.is_resource_error() => 3,
        _ => 2,
    }
}

fn configure_threads(threads: Option<usize>) -> anyhow::Result<()> {
    let Some(t) = threads else { return Ok(()) };
    if t == 0 {
        return Err(anyhow!("--threads must be at least 1"));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(t)
        .build_global()
        .context("building thread pool")?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Bound(c) => run_bound(c),
        Command::Oracle(c) => run_oracle(c),
        Command::RankPartition(a) => run_rank_partition(a),
        Command::Hadamard(c) => run_hadamard(c),
        Command::Normal(c) => run_normal(c),
        Command::Verify(c) => run_verify(c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let format = cli.format;
    let outcome = run(cli).and_then(|o| Ok((render(&o, format)?, o.passed)));
    match outcome {
        Ok((text, passed)) => {
            print!("{text}");
            if passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
