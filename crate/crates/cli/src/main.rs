//! `r1cs-paradigm`: normalize, compare, validate and benchmark R1CS files.
//!
//! Exit codes: 0 ok, 1 semantic mismatch, 2 bad input, 3 I/O failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use r1cs_equiv_bench::corpus::{variant_file_name, write_corpus};
use r1cs_equiv_bench::{run_benchmark, transform, Category, TransformSpec};
use r1cs_paradigm::canon::normalize_traced;
use r1cs_paradigm::r1cs::validate_paradigm;
use r1cs_paradigm::tiler::tiles_to_json;
use r1cs_paradigm::{parse_r1cs, parse_witness, serialize_r1cs, R1cs};

#[derive(Parser)]
#[command(name = "r1cs-paradigm", version, about = "Canonical normal form for rank-1 constraint systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite a system into its canonical paradigm form.
    Normalize {
        input: PathBuf,
        /// Output file (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the input-to-output variable map here.
        #[arg(long)]
        map: Option<PathBuf>,
        /// Write the expression DAG (Graphviz) here.
        #[arg(long)]
        dump_dfg: Option<PathBuf>,
        /// Write the selected tiles (JSON) here.
        #[arg(long)]
        dump_tiles: Option<PathBuf>,
        /// Write the abstract graph (Graphviz) here.
        #[arg(long)]
        dump_abstract: Option<PathBuf>,
        /// Write per-iteration PageRank scores (CSV) here.
        #[arg(long)]
        trace_pagerank: Option<PathBuf>,
    },
    /// Exit 0 iff both systems have byte-identical canonical forms.
    CheckEqual { a: PathBuf, b: PathBuf },
    /// Write seeded equivalent variants of a base system, or the whole shipped corpus.
    GenBench {
        /// Base system; omit together with --category to write the full corpus.
        base: Option<PathBuf>,
        /// Benchmark category, 1 to 5.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        category: Option<u8>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Output directory.
        #[arg(short, long, default_value = ".")]
        output: PathBuf,
    },
    /// Run the benchmark over a corpus directory; exit 1 if any group fails.
    Bench {
        corpus: PathBuf,
        /// Also write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Check a witness against a system and/or that a system is in paradigm form.
    Validate {
        input: PathBuf,
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long)]
        paradigm: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Mismatch(String),
    Input(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Mismatch(_) => 1,
            Failure::Input(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Mismatch(m) | Failure::Input(m) | Failure::Io(m) => m,
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<R1cs, Failure> {
    parse_r1cs(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn canonical(path: &Path) -> Result<(R1cs, String), Failure> {
    let sys = load(path)?;
    let (n, _) = normalize_traced(&sys).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok((sys, serialize_r1cs(&n.r1cs)))
}

fn normalize_cmd(
    input: &Path,
    output: Option<&Path>,
    map: Option<&Path>,
    dumps: [Option<&Path>; 4],
) -> Outcome {
    let sys = load(input)?;
    let (n, trace) = normalize_traced(&sys).map_err(|e| Failure::Input(format!("{}: {e}", input.display())))?;
    let [dfg, tiles, abs, pr] = dumps;
    if let Some(p) = dfg {
        write(p, &trace.graph.to_dot())?;
    }
    if let Some(p) = tiles {
        write(p, &tiles_to_json(&trace.graph, &trace.tiles))?;
    }
    if let Some(p) = abs {
        write(p, &trace.abstract_graph.to_dot(&trace.graph))?;
    }
    if let Some(p) = pr {
        write(p, &trace.scores.trace_csv())?;
    }
    if let Some(p) = map {
        write(p, &n.map.to_json())?;
    }
    let text = serialize_r1cs(&n.r1cs);
    match output {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_equal(a: &Path, b: &Path) -> Outcome {
    let (sa, ca) = canonical(a)?;
    let (sb, cb) = canonical(b)?;
    if sa.prime != sb.prime {
        return Err(Failure::Input(format!("systems use different primes ({} vs {})", sa.prime, sb.prime)));
    }
    if ca == cb {
        println!("equal");
        return Ok(());
    }
    let (la, lb): (Vec<&str>, Vec<&str>) = (ca.lines().collect(), cb.lines().collect());
    let i = (0..la.len().max(lb.len())).find(|&i| la.get(i) != lb.get(i)).expect("texts differ");
    Err(Failure::Mismatch(format!(
        "canonical forms differ at line {}:\n  {}: {}\n  {}: {}",
        i + 1,
        a.display(),
        la.get(i).map_or("<end>", |l| l.trim()),
        b.display(),
        lb.get(i).map_or("<end>", |l| l.trim())
    )))
}

fn gen_bench(base: Option<&Path>, category: Option<u8>, seed: u64, count: u64, out: &Path) -> Outcome {
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", out.display()));
    let (base, category) = match (base, category) {
        (None, None) => {
            return write_corpus(out).map_err(|e| Failure::Io(e.to_string()));
        }
        (Some(b), Some(c)) => (b, Category::from_number(c).expect("range-checked")),
        _ => return Err(Failure::Input("give both a base file and --category, or neither".into())),
    };
    let sys = load(base)?;
    let vdir = out.join("variants");
    fs::create_dir_all(&vdir).map_err(io)?;
    write(&out.join("base.json"), &serialize_r1cs(&sys))?;
    for s in seed..seed + count {
        let v = transform(&sys, &TransformSpec::new(category, s)).map_err(|e| Failure::Input(e.to_string()))?;
        let path = vdir.join(variant_file_name(category, s));
        write(&path, &serialize_r1cs(&v.system))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn bench(corpus: &Path, json: Option<&Path>) -> Outcome {
    let report = run_benchmark(corpus).map_err(|e| match e {
        r1cs_equiv_bench::BenchError::Io { .. } => Failure::Io(e.to_string()),
        r1cs_equiv_bench::BenchError::BadBase { .. } => Failure::Input(e.to_string()),
    })?;
    print!("{}", report.table());
    if let Some(p) = json {
        write(p, &report.to_json())?;
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Mismatch(format!("{} group(s) failed", report.failures().count())))
    }
}

fn validate(input: &Path, witness: Option<&Path>, paradigm: bool) -> Outcome {
    let sys = load(input)?;
    let mut problems = Vec::new();
    if let Some(w) = witness {
        let wit = parse_witness(&read(w)?, &sys.prime).map_err(|e| Failure::Input(format!("{}: {e}", w.display())))?;
        let report = sys.check_witness(&wit).map_err(|e| Failure::Input(format!("{}: {e}", w.display())))?;
        if !report.satisfied() {
            problems.push(format!("witness violates constraints {:?}", report.failing));
        }
    }
    if paradigm {
        for v in validate_paradigm(&sys).violations {
            problems.push(format!("not in paradigm form: {v:?}"));
        }
    }
    if problems.is_empty() {
        println!("ok");
        Ok(())
    } else {
        Err(Failure::Mismatch(problems.join("\n")))
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Normalize { input, output, map, dump_dfg, dump_tiles, dump_abstract, trace_pagerank } => normalize_cmd(
            &input,
            output.as_deref(),
            map.as_deref(),
            [dump_dfg.as_deref(), dump_tiles.as_deref(), dump_abstract.as_deref(), trace_pagerank.as_deref()],
        ),
        Command::CheckEqual { a, b } => check_equal(&a, &b),
        Command::GenBench { base, category, seed, count, output } => {
            gen_bench(base.as_deref(), category, seed, count, &output)
        }
        Command::Bench { corpus, json } => bench(&corpus, json.as_deref()),
        Command::Validate { input, witness, paradigm } => validate(&input, witness.as_deref(), paradigm),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
