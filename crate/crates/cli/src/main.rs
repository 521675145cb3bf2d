use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use validhier::conditions::{check_rule, CheckConfig};
use validhier::io::{
    dendrogram_to_newick, hierarchy_to_newick, read_matrix, read_tree, trace_to_newick, Header,
    TreeDocument,
};
use validhier::oracle::{finest_valid_hierarchy_capped, search_counterexample, SearchConfig, DEFAULT_CAP};
use validhier::ultrametric::{dendrogram_from_ultrametric_within, ultrametric_violation_within};
use validhier::validity::{strong_gap, validate_hierarchy, vertex_gaps};

/// The cluster, gap and witness of a failing vertex.
type Failing = (Cluster, f64, Option<(usize, usize, usize)>);
use validhier::{run_linkage, trim, Cluster, LinkageRule, Orientation, PairMatrix};

#[derive(Parser)]
#[command(name = "validhier", version, about = "Finest valid hierarchies of pairwise score tables")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Whether scores are similarities (larger is tighter) or dissimilarities.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Validity margin: a cluster is valid when its gap exceeds this.
    #[arg(long, global = true, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Newick)]
    format: Format,
    /// The first CSV row holds item labels (detected automatically otherwise).
    #[arg(long, global = true)]
    labels: bool,
    /// Worker threads for `hunt` and `check-rule`.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Largest item count for exhaustive enumeration.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP)]
    cap: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Similarity,
    Dissimilarity,
}

impl From<Mode> for Orientation {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Similarity => Orientation::Similarity,
            Mode::Dissimilarity => Orientation::Dissimilarity,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Newick,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaustive finest valid hierarchy.
    Finest { matrix: PathBuf },
    /// Agglomerative linkage, trimmed to its valid clusters.
    Linkage {
        matrix: PathBuf,
        #[arg(long)]
        rule: LinkageRule,
        /// Print the full binary merge tree instead.
        #[arg(long)]
        no_trim: bool,
    },
    /// Check whether a tree is a valid hierarchy.
    Validate {
        matrix: PathBuf,
        /// Newick or JSON laminar tree.
        tree: PathBuf,
        /// Use strong validity instead.
        #[arg(long)]
        strong: bool,
    },
    /// Randomized conformance checks of an update rule.
    CheckRule {
        #[arg(long, conflicts_with = "lw", required_unless_present = "lw")]
        rule: Option<LinkageRule>,
        /// Lance-Williams coefficients η1,η2,β,γ.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lw: Option<Vec<f64>>,
        #[arg(long, value_enum)]
        orientation: Option<Mode>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cluster sizes are drawn from 1..=BOUND.
        #[arg(long, default_value_t = 16)]
        size_bound: usize,
    },
    /// Search random matrices for a case where trimmed linkage misses a
    /// valid cluster.
    Hunt {
        #[arg(long)]
        rule: LinkageRule,
        #[arg(long, default_value_t = 5000)]
        trials: usize,
        /// Item-count range, e.g. 4..8 (inclusive).
        #[arg(long, default_value = "4..8", value_parser = parse_range)]
        k: (usize, usize),
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Ultrametric test; prints the dendrogram when it passes.
    Ultra {
        matrix: PathBuf,
        /// Scores within this distance count as one level.
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
    },
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected MIN..MAX, got {s:?}"))?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let lo = a.trim().parse().map_err(|_| format!("bad lower bound {a:?}"))?;
    let hi = b.trim().parse().map_err(|_| format!("bad upper bound {b:?}"))?;
    Ok((lo, hi))
}

/// Successful run with a negative verdict.
struct Negative;

fn load(common: &Common, path: &Path) -> Result<PairMatrix> {
    let header = if common.labels { Header::Present } else { Header::Detect };
    let orientation = common.mode.map(Orientation::from);
    read_matrix(path, orientation, header).with_context(|| format!("reading {}", path.display()))
}

fn show(c: &Cluster, labels: &[String]) -> String {
    let names: Vec<&str> = c.iter().map(|i| labels[i].as_str()).collect();
    format!("{{{}}}", names.join(","))
}

fn gap_json(g: f64) -> serde_json::Value {
    if g.is_finite() {
        json!(g)
    } else {
        serde_json::Value::Null
    }
}

fn run(cli: Cli) -> Result<Result<(), Negative>> {
    let common = &cli.common;
    match cli.command {
        Command::Finest { matrix } => {
            let m = load(common, &matrix)?;
            let h = finest_valid_hierarchy_capped(&m, common.epsilon, common.cap)?;
            let labels = m.all_labels();
            match common.format {
                Format::Newick => println!("{}", hierarchy_to_newick(&h, &labels)),
                Format::Json => {
                    let doc = TreeDocument::from_hierarchy(&h, Some(&labels)).with_gaps(&vertex_gaps(&m, &h)?);
                    println!("{}", doc.to_json_pretty());
                }
            }
        }
        Command::Linkage { matrix, rule, no_trim } => {
            let m = load(common, &matrix)?;
            let labels = m.all_labels();
            let trace = run_linkage(&m, &rule)?;
            if no_trim {
                match common.format {
                    Format::Newick => println!("{}", trace_to_newick(&trace, &labels)),
                    Format::Json => println!("{}", TreeDocument::from_trace(&trace, Some(&labels)).to_json_pretty()),
                }
            } else {
                let h = trim(&m, &trace, common.epsilon)?;
                match common.format {
                    Format::Newick => println!("{}", hierarchy_to_newick(&h, &labels)),
                    Format::Json => {
                        let doc = TreeDocument::from_hierarchy(&h, Some(&labels)).with_gaps(&vertex_gaps(&m, &h)?);
                        println!("{}", doc.to_json_pretty());
                    }
                }
            }
        }
        Command::Validate { matrix, tree, strong } => {
            let m = load(common, &matrix)?;
            let labels = m.all_labels();
            let text = std::fs::read_to_string(&tree).with_context(|| format!("reading {}", tree.display()))?;
            let h = read_tree(&text, &labels).with_context(|| format!("parsing {}", tree.display()))?;
            let eps = common.epsilon;
            let (valid, failing): (bool, Vec<Failing>) = if strong {
                let failing: Vec<_> = h
                    .clusters()
                    .iter()
                    .map(|c| (c.clone(), strong_gap(&m, c), None))
                    .filter(|(_, g, _)| *g <= eps)
                    .collect();
                (failing.is_empty(), failing)
            } else {
                let report = validate_hierarchy(&m, &h, eps)?;
                let failing = report
                    .failing()
                    .map(|r| (r.cluster.clone(), r.gap, r.witness))
                    .collect();
                (report.valid, failing)
            };
            match common.format {
                Format::Json => {
                    let rows: Vec<_> = failing
                        .iter()
                        .map(|(c, g, w)| {
                            json!({
                                "cluster": c.to_vec(),
                                "labels": c.iter().map(|i| &labels[i]).collect::<Vec<_>>(),
                                "gap": gap_json(*g),
                                "witness": w,
                            })
                        })
                        .collect();
                    let doc = json!({
                        "valid": valid,
                        "strong": strong,
                        "epsilon": eps,
                        "failing": rows,
                    });
                    println!("{}", serde_json::to_string_pretty(&doc)?);
                }
                Format::Newick => {
                    println!("{}", if valid { "valid" } else { "invalid" });
                    for (c, g, w) in &failing {
                        match w {
                            Some((x, y, z)) => println!(
                                "{}\tgap {g}\twitness ({}, {}, {})",
                                show(c, &labels),
                                labels[*x],
                                labels[*y],
                                labels[*z]
                            ),
                            None => println!("{}\tgap {g}", show(c, &labels)),
                        }
                    }
                }
            }
            if !valid {
                return Ok(Err(Negative));
            }
        }
        Command::CheckRule {
            rule,
            lw,
            orientation,
            samples,
            seed,
            size_bound,
        } => {
            let rule = match (rule, lw) {
                (Some(r), _) => r,
                (None, Some(c)) if c.len() == 4 => LinkageRule::lance_williams(c[0], c[1], c[2], c[3]),
                (None, Some(c)) => bail!("--lw takes four coefficients, got {}", c.len()),
                (None, None) => bail!("one of --rule or --lw is required"),
            };
            let orientations: Vec<Orientation> = match orientation.or(common.mode) {
                Some(o) => vec![o.into()],
                None => match rule.required_orientation() {
                    Some(o) => vec![o],
                    None => vec![Orientation::Similarity, Orientation::Dissimilarity],
                },
            };
            let cfg = CheckConfig {
                samples,
                seed,
                size_bound,
                jobs: common.jobs,
            };
            let mut any = false;
            for o in orientations {
                let report = check_rule(&rule, o, &cfg)?;
                any |= !report.conforms();
                match common.format {
                    Format::Json => {
                        for v in &report.violations {
                            println!("{}", serde_json::to_string(v)?);
                        }
                        println!("{}", serde_json::to_string(&report)?);
                    }
                    Format::Newick => {
                        for s in &report.summaries {
                            println!(
                                "{} {o} {} {:?}: {} violations in {} samples",
                                report.rule,
                                s.condition,
                                s.sampler,
                                s.violations,
                                s.samples
                            );
                        }
                        let mut shown = Vec::new();
                        for v in &report.violations {
                            if !shown.contains(&(v.condition, v.sampler)) {
                                shown.push((v.condition, v.sampler));
                                println!("{}", serde_json::to_string(v)?);
                            }
                        }
                    }
                }
            }
            if any {
                return Ok(Err(Negative));
            }
        }
        Command::Hunt { rule, trials, k, seed } => {
            let orientation = match (common.mode, rule.required_orientation()) {
                (Some(m), _) => m.into(),
                (None, Some(o)) => o,
                (None, None) => bail!("--mode is required for rule {}", rule.name()),
            };
            let mut cfg = SearchConfig::new(rule, orientation);
            cfg.k_min = k.0;
            cfg.k_max = k.1;
            cfg.trials = trials;
            cfg.seed = seed;
            cfg.epsilon = common.epsilon;
            cfg.jobs = common.jobs;
            match search_counterexample(&cfg)? {
                Some(report) => {
                    println!("{}", serde_json::to_string_pretty(&report.to_json())?);
                    return Ok(Err(Negative));
                }
                None => match common.format {
                    Format::Json => println!("{}", json!({ "found": false, "trials": trials, "seed": seed })),
                    Format::Newick => println!("no counterexample in {trials} trials (seed {seed})"),
                },
            }
        }
        Command::Ultra { matrix, tolerance } => {
            let m = load(common, &matrix)?;
            let labels = m.all_labels();
            if let Some((x, y, z)) = ultrametric_violation_within(&m, tolerance) {
                match common.format {
                    Format::Json => println!(
                        "{}",
                        json!({ "ultrametric": false, "triple": [x, y, z],
                                "labels": [&labels[x], &labels[y], &labels[z]] })
                    ),
                    Format::Newick => {
                        println!("not ultrametric: ({}, {}, {})", labels[x], labels[y], labels[z])
                    }
                }
                return Ok(Err(Negative));
            }
            let d = dendrogram_from_ultrametric_within(&m, tolerance)?;
            match common.format {
                Format::Newick => println!("{}", dendrogram_to_newick(&d, &labels)),
                Format::Json => println!("{}", TreeDocument::from_dendrogram(&d, Some(&labels)).to_json_pretty()),
            }
        }
    }
    Ok(Ok(()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Negative)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
