use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use lgraph::certificates::{
    certificate_graph_of, check_associativity, find_subgraph_embedding, find_undirected_embedding,
    minimal_certificates, witness_elements, ColoredInput, Problem, MAX_ASSOCIATIVITY_N, MAX_SUBGRAPH_N,
};
use lgraph::cost::total_exponent;
use lgraph::graph::{AnyGraph, GraphFile};
use lgraph::learning_graph::{
    build_triangle_lg, graph_complexity, lemma_simple_cost_check, stage_complexity, triangle_flow, verify_flow,
    vertex_ratio_estimate, LemmaCheck, DEFAULT_SEED, MIN_SAMPLES,
};
use lgraph::optimizer::{optimize_graph, optimize_schedule, optimize_schedules, OptimizationResult};
use lgraph::schedule::enumerate_schedules;
use lgraph::{presets, LoadingSchedule, StageCost};

#[derive(Parser)]
#[command(name = "lgraph", version, about = "Learning-graph cost analysis for small certificate graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Md,
    Tsv,
    Plain,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Triangle,
    Associativity,
}

#[derive(Clone, Copy, ValueEnum)]
enum CertProblem {
    Subgraph,
    Assoc,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the cost exponent of a certificate graph.
    Optimize {
        #[arg(long)]
        graph: PathBuf,
        /// Fix the loading schedule, e.g. `1,2,e(1,2),3,e(2,3),e(1,3)`.
        #[arg(long, conflicts_with = "all_schedules")]
        schedule: Option<String>,
        /// Solve every schedule separately instead of the pruned search.
        #[arg(long)]
        all_schedules: bool,
        #[arg(long, value_enum, default_value = "plain")]
        format: Format,
    },
    /// List the loading schedules of a graph.
    Schedules {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        count_only: bool,
    },
    /// Stage tables at the reference parameters.
    Table {
        #[arg(long, value_enum)]
        preset: Preset,
        #[arg(long, value_enum, default_value = "plain")]
        format: Format,
    },
    /// Build the triangle learning graph and check flows and stage costs.
    VerifyLg {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r1: usize,
        #[arg(long)]
        r2: usize,
        #[arg(long)]
        lam: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = MIN_SAMPLES)]
        samples: usize,
    },
    /// Extract minimal certificates from an input table.
    Certify {
        #[arg(long, value_enum)]
        problem: CertProblem,
        #[arg(long)]
        input: PathBuf,
        /// Pattern graph for `--problem subgraph`.
        #[arg(long, required_if_eq("problem", "subgraph"))]
        graph: Option<PathBuf>,
    },
}

/// Outcome of a command that ran to completion: the report and whether all checks held.
struct Report {
    text: String,
    ok: bool,
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
    match run(cli.command) {
        Ok(r) => {
            print!("{}", r.text);
            if r.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<Report> {
    match cmd {
        Command::Optimize { graph, schedule, all_schedules, format } => {
            optimize(&graph, schedule, all_schedules, format)
        }
        Command::Schedules { graph, count_only } => schedules(&graph, count_only),
        Command::Table { preset, format } => table(preset, format),
        Command::VerifyLg { n, r1, r2, lam, seed, samples } => verify_lg(n, r1, r2, lam, seed, samples),
        Command::Certify { problem, input, graph } => certify(problem, &input, graph.as_deref()),
    }
}

fn read_graph(path: &Path) -> Result<AnyGraph> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    GraphFile::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn render(format: Format, header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    match format {
        Format::Tsv => {
            for line in std::iter::once(header).chain(rows.iter().map(|r| r.as_slice())) {
                let _ = writeln!(out, "{}", line.join("\t"));
            }
        }
        Format::Md => {
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let _ = writeln!(out, "|{}|", vec!["---"; header.len()].join("|"));
            for r in rows {
                let _ = writeln!(out, "| {} |", r.join(" | "));
            }
        }
        Format::Plain => {
            let width = |c: usize| {
                std::iter::once(&header[c])
                    .chain(rows.iter().map(|r| &r[c]))
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
            };
            let widths: Vec<usize> = (0..header.len()).map(width).collect();
            for line in std::iter::once(header).chain(rows.iter().map(|r| r.as_slice())) {
                let cells: Vec<String> = line
                    .iter()
                    .zip(&widths)
                    .map(|(s, &w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
                    .collect();
                let _ = writeln!(out, "{}", cells.join("  ").trim_end());
            }
        }
    }
    out
}

/// Columns per stage; rows Global (propagated factor of this stage), Local,
/// Cost (earlier prefactor plus local) and Value.
fn stage_table(format: Format, names: &[String], stages: &[StageCost]) -> String {
    let mut header = vec!["Stage".to_string()];
    header.extend(names.iter().cloned());
    let dash = || "-".to_string();
    let row = |label: &str, f: &dyn Fn(&StageCost) -> String| {
        let mut r = vec![label.to_string()];
        r.extend(stages.iter().map(f));
        r
    };
    let rows = vec![
        row("Global", &|s| s.contribution.to_string()),
        row("Local", &|s| s.local.as_ref().map_or_else(dash, |l| l.to_string())),
        row("Cost", &|s| s.local.as_ref().map_or_else(dash, |l| format!("{} + {l}", s.global))),
        row("Value", &|s| s.total.as_ref().map_or_else(dash, |t| t.to_string())),
    ];
    render(format, &header, &rows)
}

fn default_names(stages: &[StageCost]) -> Vec<String> {
    stages
        .iter()
        .map(|s| match s.item {
            None => "setup".to_string(),
            Some(item) => format!("load {item}"),
        })
        .collect()
}

fn describe(r: &OptimizationResult, format: Format) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "exponent: {}", r.exponent);
    let _ = writeln!(out, "schedule: {}", r.schedule);
    let _ = writeln!(out, "branch: {}", r.branch);
    let _ = writeln!(out, "{}", r.assignment);
    out.push_str(&stage_table(format, &default_names(&r.stages), &r.stages));
    out
}

fn optimize(graph: &Path, schedule: Option<String>, all: bool, format: Format) -> Result<Report> {
    let h = read_graph(graph)?.to_undirected();
    let r = match (schedule, all) {
        (Some(s), _) => {
            let s: LoadingSchedule = s.parse()?;
            optimize_schedule(&h, &s)?
        }
        (None, true) => optimize_schedules(&h, enumerate_schedules(&h)?)?,
        (None, false) => optimize_graph(&h)?,
    };
    Ok(Report { text: describe(&r, format), ok: true })
}

fn schedules(graph: &Path, count_only: bool) -> Result<Report> {
    let h = read_graph(graph)?.to_undirected();
    let mut text = String::new();
    let mut count = 0u64;
    for s in enumerate_schedules(&h)? {
        count += 1;
        if !count_only {
            let _ = writeln!(text, "{s}");
        }
    }
    let _ = writeln!(text, "count: {count}");
    Ok(Report { text, ok: true })
}

fn table(preset: Preset, format: Format) -> Result<Report> {
    let (h, s, a, names): (_, _, _, Vec<&str>) = match preset {
        Preset::Triangle => (
            presets::triangle(),
            presets::triangle_schedule(),
            presets::triangle_assignment(),
            presets::triangle_stage_names(),
        ),
        Preset::Associativity => (
            presets::associativity_path(),
            presets::associativity_schedule(),
            presets::associativity_assignment(),
            presets::associativity_stage_names(),
        ),
    };
    let (total, stages) = total_exponent(&h, &s, &a)?;
    let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let mut text = String::new();
    let _ = writeln!(text, "{a}");
    match preset {
        Preset::Triangle => text.push_str(&stage_table(format, &names, &stages)),
        Preset::Associativity => {
            let _ = writeln!(text, "setup: {}", stages[0].total.as_ref().expect("setup has a cost"));
            for (n, range) in [1..5, 5..8, 8..10].into_iter().enumerate() {
                if n > 0 {
                    text.push('\n');
                }
                text.push_str(&stage_table(format, &names[range.clone()], &stages[range]));
            }
        }
    }
    let _ = writeln!(text, "exponent: {total}");
    Ok(Report { text, ok: true })
}

fn verify_lg(n: usize, r1: usize, r2: usize, lam: usize, seed: u64, samples: usize) -> Result<Report> {
    let g = build_triangle_lg(n, r1, r2, lam)?;
    let mut text = String::new();
    let mut ok = true;
    let sizes: Vec<String> = (1..=g.num_levels()).map(|t| g.level(t).len().to_string()).collect();
    let _ = writeln!(text, "levels: {}", sizes.join(" "));
    let _ = writeln!(text, "edges: {}", g.edges().len());
    let mut placements = 0;
    for a in 1..=n {
        for b in 1..=n {
            for c in 1..=n {
                if a == b || b == c || a == c {
                    continue;
                }
                placements += 1;
                let f = triangle_flow(&g, (a, b, c))?;
                if let Err(v) = verify_flow(&g, &f) {
                    ok = false;
                    let _ = writeln!(text, "flow ({a},{b},{c}): {v}");
                }
            }
        }
    }
    let _ = writeln!(text, "flows verified: {placements} placements, {}", if ok { "ok" } else { "FAILED" });
    let f = triangle_flow(&g, (1, 2, 3))?;
    let (_, total) = graph_complexity(&g, &f)?;
    for t in 1..g.num_levels() {
        let s = stage_complexity(&g, &f, t)?;
        let lemma = match lemma_simple_cost_check(&g, &f, t)? {
            LemmaCheck::Equal { ell, d, v, g, w, .. } => format!("lemma equal (l={ell} d={d} |V|={v} g={g} |W|={w})"),
            LemmaCheck::Mismatch { predicted, actual } => {
                ok = false;
                format!("lemma MISMATCH: predicted {predicted}, got {actual}")
            }
            LemmaCheck::Hypothesis(m) => format!("lemma hypotheses fail: {m}"),
        };
        let _ = writeln!(text, "stage {t}: C0={} C1={} C^2={} C={:.6} {lemma}", s.c0, s.c1, s.c_squared, s.c);
    }
    let _ = writeln!(text, "sum of stage complexities: {total:.6}");
    for level in 1..=g.num_levels() {
        let r = vertex_ratio_estimate(&g, &f, level, samples, seed)?;
        let agree = r.within_three_se() && r.above_bound();
        ok &= agree;
        let _ = writeln!(
            text,
            "level {level}: ratio {} estimate {:.5} (se {:.5}) bound {} {}",
            r.exact,
            r.estimate,
            r.std_error,
            r.bound,
            if agree { "ok" } else { "FAILED" }
        );
    }
    Ok(Report { text, ok })
}

fn certify(problem: CertProblem, input: &Path, graph: Option<&Path>) -> Result<Report> {
    let text_in = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let mut text = String::new();
    let (x, problem) = match problem {
        CertProblem::Assoc => {
            let x = ColoredInput::parse(&text_in, None)?;
            match check_associativity(&x)? {
                None => {
                    let _ = writeln!(text, "associative");
                }
                Some(w) => {
                    let _ = writeln!(text, "witness: ({},{},{})", w.0, w.1, w.2);
                    let e = witness_elements(&x, w);
                    let _ = writeln!(text, "elements a1..a5: {}", e.map(|v| v.to_string()).join(" "));
                }
            }
            if x.n() > MAX_ASSOCIATIVITY_N {
                let _ = writeln!(text, "certificates: skipped for n > {MAX_ASSOCIATIVITY_N}");
                return Ok(Report { text, ok: true });
            }
            (x, Problem::Associativity)
        }
        CertProblem::Subgraph => {
            let Some(path) = graph else { bail!("--graph is required for --problem subgraph") };
            let x = ColoredInput::parse(&text_in, Some(2))?;
            let problem = match read_graph(path)? {
                AnyGraph::Undirected(h) => {
                    let e = find_undirected_embedding(&x, &h);
                    let _ = writeln!(text, "embedding: {}", fmt_embedding(e.as_deref()));
                    Problem::Subgraph(h)
                }
                AnyGraph::Directed(h) => {
                    let e = find_subgraph_embedding(&x, &h);
                    let _ = writeln!(text, "embedding: {}", fmt_embedding(e.as_deref()));
                    Problem::DirectedSubgraph(h)
                }
            };
            if x.n() > MAX_SUBGRAPH_N {
                let _ = writeln!(text, "certificates: skipped for n > {MAX_SUBGRAPH_N}");
                return Ok(Report { text, ok: true });
            }
            (x, problem)
        }
    };
    let certs = minimal_certificates(&x, &problem)?;
    let _ = writeln!(text, "minimal certificates: {}", certs.len());
    for c in &certs {
        let (g, mapping) = certificate_graph_of(c)?;
        let arcs: Vec<String> = g.edges().map(|(i, j)| format!("({i},{j})")).collect();
        let map: Vec<String> = mapping.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(text, "{c} graph k={} arcs=[{}] indices=[{}]", g.k(), arcs.join(","), map.join(","));
    }
    Ok(Report { text, ok: true })
}

fn fmt_embedding(e: Option<&[usize]>) -> String {
    match e {
        None => "none".to_string(),
        Some(a) => format!("({})", a.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")),
    }
}
