use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use qform_core::arithmetic::euler::{h_fq, h_q};
use qform_core::arithmetic::rho::{rho, rho_ab};
use qform_core::arithmetic::sieve::SieveTables;
use qform_core::bqf::{enumerate_reduced_forms, properly_equivalent, reduce, Form};
use qform_core::composition::{compose_classes, dirichlet_compose, CompositionContext};
use qform_core::harness::{
    amn_crosscheck, bilinear_experiment, corollary2_experiment, fi_crosscheck, level_experiment,
    theorem1_experiment, ExperimentConfig, ExperimentReport, LambdaSpec, RunOptions,
};
use qform_core::{Error, Result};

#[derive(Parser)]
#[command(name = "qform", version, about = "Binary quadratic forms, composition and sieve experiments")]
struct Cli {
    /// Worker threads for parallel sums (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a form and print the reducing map.
    Reduce {
        #[arg(long)]
        form: Form,
    },
    /// Decide proper equivalence of two forms.
    Equivalent {
        #[arg(long)]
        form: Form,
        #[arg(long)]
        other: Form,
    },
    /// Reduced forms of a discriminant and their composition table.
    Classgroup {
        #[arg(long, allow_negative_numbers = true, required_unless_present = "form")]
        disc: Option<i64>,
        #[arg(long)]
        form: Option<Form>,
    },
    /// Dirichlet composition; with --b the raw composite, otherwise the reduced class.
    Compose {
        #[arg(long)]
        form: Form,
        #[arg(long)]
        with: Form,
        #[arg(long, allow_negative_numbers = true)]
        b: Option<i64>,
    },
    /// Composition contexts.
    Ctx {
        #[command(subcommand)]
        action: CtxCommand,
    },
    /// Sieve tables.
    Sieve {
        #[command(subcommand)]
        action: SieveCommand,
    },
    /// Root count ρ(d), or ρ(d; a, b) when --a and --b are given.
    Rho {
        #[arg(long)]
        form: Form,
        #[arg(long)]
        d: u64,
        #[arg(long, allow_negative_numbers = true, requires = "b")]
        a: Option<i64>,
        #[arg(long, allow_negative_numbers = true, requires = "a")]
        b: Option<i64>,
    },
    /// Truncated singular series H_{F,q} (or H_q with --plain).
    Hfq {
        #[arg(long)]
        form: Form,
        #[arg(long, default_value_t = 1)]
        q: u64,
        #[arg(long, default_value_t = 1_000_000)]
        p_max: u64,
        /// Load the composition context instead of building it.
        #[arg(long)]
        ctx: Option<PathBuf>,
        /// Use the p | q exceptional set only.
        #[arg(long)]
        plain: bool,
    },
    /// Compare the decomposition route for a_{mn} with the direct sum.
    AmnCheck {
        #[arg(long)]
        form: Form,
        #[arg(long, default_value_t = 100)]
        bound: u64,
        #[arg(long, value_enum, default_values_t = [LambdaArg::One, LambdaArg::VonMangoldt])]
        lambda: Vec<LambdaArg>,
        /// Also check a seeded random weight table.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Split a representation F(X, Y) = mn into (f; u, v, w, z) tuples.
    Decompose {
        #[arg(long)]
        form: Form,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, allow_negative_numbers = true)]
        x: i64,
        #[arg(long, allow_negative_numbers = true)]
        y: i64,
        #[arg(long)]
        ctx: Option<PathBuf>,
    },
    /// Run an experiment and write its report.
    Experiment(ExperimentArgs),
}

#[derive(Subcommand)]
enum CtxCommand {
    Build {
        #[arg(long)]
        form: Form,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SieveCommand {
    Build {
        #[arg(long)]
        limit: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LambdaArg {
    One,
    VonMangoldt,
    PrimeIndicator,
}

impl LambdaArg {
    fn spec(self) -> LambdaSpec {
        match self {
            LambdaArg::One => LambdaSpec::constant_one(),
            LambdaArg::VonMangoldt => LambdaSpec::von_mangoldt(),
            LambdaArg::PrimeIndicator => LambdaSpec::prime_indicator(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ExperimentKind {
    Theorem1,
    Corollary2,
    Level,
    Bilinear,
    FiCheck,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: ExperimentKind,
    /// JSON config; its fields take precedence over the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit CSV instead of JSON.
    #[arg(long)]
    csv: bool,
    /// Sieve tables to reuse when they cover X.
    #[arg(long, env = "QFORM_TABLES")]
    tables: Option<PathBuf>,
    /// Record wall-clock times in the report.
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    form: Option<Form>,
    #[arg(long)]
    x: Option<u64>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    a: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    b: Option<i64>,
    #[arg(long)]
    d: Option<u64>,
    #[arg(long)]
    y: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long, value_enum)]
    lambda: Option<LambdaArg>,
    #[arg(long)]
    character: Option<usize>,
    #[arg(long)]
    p_max: Option<u64>,
    /// Composition context to use instead of building one.
    #[arg(long)]
    ctx: Option<PathBuf>,
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_ctx(path: Option<&PathBuf>, form: &Form) -> Result<CompositionContext> {
    let ctx = match path {
        Some(p) => {
            let ctx: CompositionContext = serde_json::from_str(&fs::read_to_string(p)?)?;
            ctx.verify()?;
            ctx
        }
        None => CompositionContext::build(form)?,
    };
    if ctx.form != *form {
        return Err(Error::Precondition(format!("context is for {:?}, not {:?}", ctx.form, form)));
    }
    Ok(ctx)
}

fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut merged = Map::new();
    let mut put = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            merged.insert(k.to_string(), v);
        }
    };
    put("form", args.form.map(serde_json::to_value).transpose()?);
    put("x", args.x.map(Value::from));
    put("q", args.q.map(Value::from));
    put("a", args.a.map(Value::from));
    put("b", args.b.map(Value::from));
    put("d", args.d.map(Value::from));
    put("y", args.y.map(Value::from));
    put("z", args.z.map(Value::from));
    put("lambda", args.lambda.map(|l| serde_json::to_value(l.spec())).transpose()?);
    put("character", args.character.map(Value::from));
    put("p_max", args.p_max.map(Value::from));
    if let Some(path) = &args.ctx {
        let ctx: Value = serde_json::from_str(&fs::read_to_string(path)?)?;
        merged.insert("ctx".into(), ctx);
    }
    if let Some(path) = &args.config {
        match serde_json::from_str::<Value>(&fs::read_to_string(path)?)? {
            Value::Object(file) => merged.extend(file),
            _ => return Err(Error::Parse(format!("{}: config must be a JSON object", path.display()))),
        }
    }
    for key in ["form", "x"] {
        if !merged.contains_key(key) {
            return Err(Error::Precondition(format!("missing `{key}`: pass --{key} or set it in the config")));
        }
    }
    let config: ExperimentConfig = serde_json::from_value(Value::Object(merged))?;
    config.validate()?;
    Ok(config)
}

fn run_experiment(args: &ExperimentArgs) -> Result<()> {
    let config = experiment_config(args)?;
    let tables = match &args.tables {
        Some(p) => Some(SieveTables::read_from(p)?),
        None => None,
    };
    let opts = RunOptions { tables: tables.as_ref(), timings: args.timings };
    let report: ExperimentReport = match args.kind {
        ExperimentKind::Theorem1 => theorem1_experiment(&config, &opts)?,
        ExperimentKind::Corollary2 => corollary2_experiment(&config, &opts)?,
        ExperimentKind::Level => level_experiment(&config, &opts)?,
        ExperimentKind::Bilinear => bilinear_experiment(&config, &opts)?,
        ExperimentKind::FiCheck => {
            if config.form != Form::new(1, 0, 1)? {
                return Err(Error::Precondition("fi-check is defined for the form 1,0,1 only".into()));
            }
            fi_crosscheck(config.x, &config.lambda)?
        }
    };
    let text = if args.csv { report.to_csv() } else { report.to_json()? + "\n" };
    emit(&text, args.out.as_deref())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Reduce { form } => {
            form.require_primitive_definite()?;
            let (r, map) = reduce(&form)?;
            println!("{r}");
            println!("witness {map}");
        }
        Command::Equivalent { form, other } => match properly_equivalent(&form, &other)? {
            Some(map) => println!("true\nwitness {map}"),
            None => println!("false"),
        },
        Command::Classgroup { disc, form } => {
            let disc = match (disc, form) {
                (Some(d), _) => d as i128,
                (None, Some(f)) => f.discriminant(),
                (None, None) => unreachable!("clap requires one of them"),
            };
            let forms = enumerate_reduced_forms(disc)?;
            println!("discriminant {disc}, class number {}", forms.len());
            for f in &forms {
                println!("{f}");
            }
            println!("composition table:");
            for f in &forms {
                let row = forms
                    .iter()
                    .map(|g| compose_classes(f, g).map(|h| h.to_string()))
                    .collect::<Result<Vec<_>>>()?;
                println!("{}", row.join(" | "));
            }
        }
        Command::Compose { form, with, b } => {
            let h = match b {
                Some(b) => dirichlet_compose(&form, &with, b)?,
                None => compose_classes(&form, &with)?,
            };
            println!("{h}");
        }
        Command::Ctx { action: CtxCommand::Build { form, out } } => {
            let ctx = CompositionContext::build(&form)?;
            emit(&(serde_json::to_string_pretty(&ctx)? + "\n"), out.as_deref())?;
        }
        Command::Sieve { action: SieveCommand::Build { limit, out } } => {
            let tables = SieveTables::build(limit)?;
            tables.write_to(&out)?;
            eprintln!("wrote tables up to {limit} to {}", out.display());
        }
        Command::Rho { form, d, a, b } => {
            form.require_primitive_definite()?;
            if d == 0 {
                return Err(Error::Precondition("d must be at least 1".into()));
            }
            let v = match (a, b) {
                (Some(a), Some(b)) => rho_ab(d, a, b, &form),
                _ => rho(d, &form),
            };
            println!("{v}");
        }
        Command::Hfq { form, q, p_max, ctx, plain } => {
            let h = if plain {
                form.require_primitive_definite()?;
                h_q(&form, q, p_max)?
            } else {
                h_fq(&load_ctx(ctx.as_ref(), &form)?, q, p_max)?
            };
            println!("{}", serde_json::to_string_pretty(&h)?);
        }
        Command::AmnCheck { form, bound, lambda, seed } => {
            let ctx = CompositionContext::build(&form)?;
            let mut specs: Vec<LambdaSpec> = lambda.iter().map(|l| l.spec()).collect();
            if let Some(seed) = seed {
                let len = (bound * bound + 2) as usize;
                specs.push(LambdaSpec::random_table(len, seed));
            }
            let check = amn_crosscheck(&ctx, bound, &specs)?;
            println!("{} coprime pairs checked, {} mismatches", check.pairs, check.mismatches.len());
            if let Some((m, n)) = check.mismatches.first() {
                return Err(Error::Verification(format!("a_mn mismatch at m = {m}, n = {n}")));
            }
        }
        Command::Decompose { form, m, n, x, y, ctx } => {
            let ctx = load_ctx(ctx.as_ref(), &form)?;
            let tuples = ctx.decompose_representation(m, n, (x, y))?;
            println!("{}", serde_json::to_string_pretty(&tuples)?);
        }
        Command::Experiment(args) => run_experiment(&args)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 2 } else { 1 })
        }
    }
}
