use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use splitlab::exact::CocycleMatrix;
use splitlab::iet::{cylinder, expand, Combinatorics, Side, SplittingSequence, WidthVector};
use splitlab::measure::{self, Layout};
use splitlab::polytope::Polytope;
use splitlab::rational::{format_rational, parse_rational, Rat};
use splitlab::surface::{self, Phi0};
use splitlab::torus::{self, Word};
use splitlab::walk::{self, Estimate, Target, Walk};
use splitlab::{rauzy, Error, Result};

#[derive(Parser)]
#[command(
    name = "splitlab",
    version,
    about = "Exact Rauzy induction, surface splitting loops and harmonic-measure experiments"
)]
struct Cli {
    /// Base seed for Monte Carlo commands.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Number of Monte Carlo trials.
    #[arg(long, global = true, default_value_t = 1000)]
    trials: u64,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Also write a CSV table here (commands with tabular output).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    /// Write the main artifact here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for Monte Carlo commands; output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Continued fractions, cylinders and the sets X(m,n).
    #[command(subcommand)]
    Torus(TorusCmd),
    /// Random walks on 2×2 matrices.
    #[command(subcommand)]
    Walk(WalkCmd),
    /// Rauzy induction on a single exchange.
    #[command(subcommand)]
    Iet(IetCmd),
    /// The Rauzy diagram.
    #[command(subcommand)]
    Rauzy(RauzyCmd),
    /// φ₀ constructions and twist experiments.
    #[command(subcommand)]
    Surface(SurfaceCmd),
    /// Distortion and Borel–Cantelli diagnostics.
    #[command(subcommand)]
    Measure(MeasureCmd),
}

#[derive(Subcommand)]
enum TorusCmd {
    /// Cylinder interval of an R/L word.
    Cylinder {
        #[arg(long)]
        word: String,
    },
    /// Certified bounds on the Lebesgue measure of X(m,n).
    Xmn {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 30)]
        budget: u64,
    },
    /// Lebesgue and harmonic partial sums over odd n.
    Demo {
        #[arg(long)]
        nmax: u64,
        #[arg(long, default_value_t = 12)]
        budget: u64,
    },
    /// Continued-fraction word of a rational slope.
    Expand {
        #[arg(long)]
        x: String,
    },
}

#[derive(Args)]
struct MuArg {
    /// A JSON file `[{matrix, p}]`, or one of `tree`, `uniform2`, `uniform4`.
    #[arg(long, default_value = "uniform4")]
    mu: String,
}

#[derive(Subcommand)]
enum WalkCmd {
    /// One sample path and its boundary arc.
    Simulate {
        #[command(flatten)]
        mu: MuArg,
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
    /// Harmonic measure estimates of boundary sets.
    Estimate {
        #[command(flatten)]
        mu: MuArg,
        /// `X(m,n)`, `[a,b]` or a word; repeatable.
        #[arg(long)]
        target: Vec<String>,
        /// Shorthand for the targets X(n,n), n = lo..=hi, written `lo:hi`.
        #[arg(long)]
        diagonal: Option<String>,
        #[arg(long, default_value_t = 500)]
        steps: usize,
    },
    /// Log-linear decay fit of a CSV written by `walk estimate`.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Args)]
struct CombArg {
    /// An `.iex` file.
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Subcommand)]
enum IetCmd {
    /// Expands the widths stored in the `.iex` file.
    Expand {
        #[command(flatten)]
        comb: CombArg,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Cylinder polytope of a path given as winner sides, e.g. `tbbt`.
    Cylinder {
        #[command(flatten)]
        comb: CombArg,
        #[arg(long)]
        path: String,
    },
}

#[derive(Subcommand)]
enum RauzyCmd {
    /// Explores the diagram from the combinatorics in the file.
    Explore {
        #[command(flatten)]
        comb: CombArg,
        #[arg(long, default_value_t = 10_000)]
        limit: usize,
        /// Print GraphViz instead of a summary.
        #[arg(long)]
        dot: bool,
    },
    /// Attractors of the explored diagram.
    Attractors {
        #[command(flatten)]
        comb: CombArg,
        #[arg(long, default_value_t = 10_000)]
        limit: usize,
    },
    /// GraphViz text of the explored diagram.
    Dot {
        #[command(flatten)]
        comb: CombArg,
        #[arg(long, default_value_t = 10_000)]
        limit: usize,
    },
}

/// A φ₀ given either as a file or by its surface type.
#[derive(Args)]
struct SurfaceArg {
    #[arg(long = "in", conflicts_with_all = ["g", "m"])]
    input: Option<PathBuf>,
    /// Genus.
    #[arg(long, requires = "m")]
    g: Option<u32>,
    /// Number of punctures.
    #[arg(long, requires = "g")]
    m: Option<u32>,
}

#[derive(Subcommand)]
enum SurfaceCmd {
    /// Builds φ₀ for genus g with m punctures.
    Build {
        #[arg(long)]
        g: u32,
        #[arg(long)]
        m: u32,
    },
    /// Complementary regions of a track.
    Regions {
        #[command(flatten)]
        surface: SurfaceArg,
    },
    /// Volume ratio of the n-fold twist cylinder.
    Twist {
        #[command(flatten)]
        surface: SurfaceArg,
        #[arg(long)]
        n: u64,
        /// Compute from the transported triangulation and check the closed form.
        #[arg(long)]
        exact: bool,
    },
    /// Hitting times of C-distributed returns to φ₀.
    Cdist {
        #[command(flatten)]
        surface: SurfaceArg,
        #[arg(long = "C", default_value = "100")]
        c: String,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
    },
    /// Fraction of W₀ continuing with n twist loops after the stage-th return.
    Ymn {
        #[command(flatten)]
        surface: SurfaceArg,
        #[arg(long, default_value_t = 0)]
        stage: u64,
        #[arg(long)]
        n: u64,
        #[arg(long = "C", default_value = "100")]
        c: String,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
    },
}

#[derive(Subcommand)]
enum MeasureCmd {
    /// Jacobian distortion of a matrix over a configuration polytope.
    Distortion {
        /// Rows as JSON, e.g. `[[1,0],[3,1]]`.
        #[arg(long)]
        matrix: String,
        /// Uses this configuration polytope; the standard simplex otherwise.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long = "C", default_value = "2")]
        c: String,
    },
    /// Borel–Cantelli assembly on the torus tables over odd n.
    Bc {
        #[arg(long, default_value_t = 101)]
        nmax: u64,
        /// Pairwise independence constant for the limsup bound.
        #[arg(long, default_value = "4")]
        pairwise: String,
        /// Use certified bounds on ℓ(X(n,n)) with this budget instead of 1/(n+1).
        #[arg(long)]
        certified: Option<u64>,
    },
}

struct Ctx {
    seed: u64,
    trials: u64,
    json: bool,
    csv: Option<PathBuf>,
    out: Option<PathBuf>,
}

impl Ctx {
    /// JSON goes to `--out` when given; otherwise JSON or text goes to stdout.
    fn emit(&self, value: Value, text: String) -> Result<()> {
        let encoded = serde_json::to_string(&value).map_err(|e| Error::Internal(e.to_string()))?;
        match &self.out {
            Some(path) => write_file(path, &(encoded + "\n"))?,
            None if self.json => stdout(&(encoded + "\n")),
            None => stdout(&text),
        }
        Ok(())
    }
}

/// Writes to stdout; a closed pipe ends output quietly.
fn stdout(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn read_comb(path: &Path) -> Result<(Combinatorics, Option<WidthVector>)> {
    Combinatorics::parse_iex(&read_file(path)?)
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Internal(e.to_string()))
}

fn r(x: &Rat) -> Value {
    Value::String(format_rational(x))
}

fn parse_c(s: &str) -> Result<Rat> {
    let c = parse_rational(s)?;
    if c <= Rat::from_integer(1.into()) {
        return Err(Error::InvalidInput("C must exceed 1".into()));
    }
    Ok(c)
}

fn load_surface(arg: &SurfaceArg) -> Result<Combinatorics> {
    match (&arg.input, arg.g, arg.m) {
        (Some(p), _, _) => Ok(read_comb(p)?.0),
        (None, Some(g), Some(m)) => Ok(surface::build_phi0(g, m)?.comb),
        _ => Err(Error::InvalidInput("give --in FILE or --g G --m M".into())),
    }
}

fn load_walk(mu: &str) -> Result<Walk> {
    if let Some(w) = Walk::named(mu) {
        return Ok(w);
    }
    Ok(Walk::new(walk::Distribution::from_json(&read_file(Path::new(mu))?)?))
}

fn sequence_json(seq: &SplittingSequence) -> Result<Value> {
    let comb = &seq.start;
    let steps: Vec<Value> = seq
        .steps
        .iter()
        .map(|s| json!({"winner": comb.label(s.winner), "loser": comb.label(s.loser), "side": s.winner_side}))
        .collect();
    Ok(json!({
        "start": comb,
        "end": seq.end,
        "steps": steps,
        "halt": seq.halt,
        "cumulative": to_value(&seq.cumulative)?,
        "end_widths": seq.end_widths.as_ref().map(|w| w.0.iter().map(r).collect::<Vec<_>>()),
    }))
}

fn torus_cmd(ctx: &Ctx, cmd: TorusCmd) -> Result<()> {
    match cmd {
        TorusCmd::Cylinder { word } => {
            let w = Word::parse(&word)?;
            let i = torus::cylinder_interval(&w);
            let m = torus::word_mat2(&w);
            let text = format!("{w}: [{}, {}], length {}\nmatrix {m}\n", i.lo, i.hi, i.length());
            ctx.emit(
                json!({"word": w.to_string(), "lo": r(&i.lo), "hi": r(&i.hi), "length": r(&i.length()),
                       "matrix": [[m.a.to_string(), m.b.to_string()], [m.c.to_string(), m.d.to_string()]]}),
                text,
            )
        }
        TorusCmd::Xmn { m, n, budget } => {
            let b = torus::measure_x(m, n, budget)?;
            let text = format!("l(X({m},{n})) in [{}, {}]\n", b.lower, b.upper);
            ctx.emit(to_value(&b)?, text)
        }
        TorusCmd::Demo { nmax, budget } => {
            let rep = torus::singularity_demo(nmax, budget)?;
            let mut text = String::from("n\tlebesgue_lower\tlebesgue_upper\tharmonic\n");
            for (l, h) in rep.lebesgue_partial.iter().zip(&rep.harmonic_partial) {
                text += &format!(
                    "{}\t{:.6}\t{:.6}\t{:.6}\n",
                    l.n,
                    splitlab::rational::to_f64(&l.lower),
                    splitlab::rational::to_f64(&l.upper),
                    splitlab::rational::to_f64(&h.exact)
                );
            }
            ctx.emit(to_value(&rep)?, text)
        }
        TorusCmd::Expand { x } => {
            let w = torus::cf_expand(&parse_rational(&x)?)?;
            ctx.emit(json!({"x": x, "word": w.to_string(), "runs": w.runs}), format!("{w}\n"))
        }
    }
}

fn estimate_row(label: &str, e: &Estimate) -> String {
    format!(
        "{label},{},{},{},{}\n",
        e.point,
        e.ci_lo,
        e.ci_hi,
        e.indeterminate_frac()
    )
}

fn walk_cmd(ctx: &Ctx, cmd: WalkCmd) -> Result<()> {
    match cmd {
        WalkCmd::Simulate { mu, steps } => {
            let w = load_walk(&mu.mu)?;
            let trace = walk::sample_walk(&w, steps, ctx.seed)?;
            let last = trace.last().expect("steps ≥ 1");
            let arc = walk::boundary_point(&trace)?;
            let text = format!(
                "ω_{steps} = {last}\narc {:?} .. {:?} resolved={}\n",
                arc.lo, arc.hi, arc.resolved
            );
            ctx.emit(
                json!({"seed": ctx.seed, "steps": steps, "final": last.to_string(), "arc": to_value(&arc)?}),
                text,
            )
        }
        WalkCmd::Estimate {
            mu,
            target,
            diagonal,
            steps,
        } => {
            let w = load_walk(&mu.mu)?;
            let mut targets: Vec<Target> = target.iter().map(|t| Target::parse(t)).collect::<Result<_>>()?;
            if let Some(d) = diagonal {
                let (lo, hi) = d
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidInput("expected lo:hi".into()))?;
                let bad = |_| Error::InvalidInput(format!("bad range {d:?}"));
                let (lo, hi): (u64, u64) = (lo.parse().map_err(bad)?, hi.parse().map_err(bad)?);
                targets.extend((lo.max(1)..=hi).map(|n| Target::X { m: n as usize, n }));
            }
            if targets.is_empty() {
                return Err(Error::InvalidInput("give at least one --target or --diagonal".into()));
            }
            let est = walk::harmonic_estimates(&w, &targets, steps, ctx.trials, ctx.seed)?;
            let mut csv = String::from("n,estimate,ci_lo,ci_hi,indeterminate_frac\n");
            let mut text = String::new();
            let mut rows = Vec::new();
            for (t, e) in targets.iter().zip(&est) {
                let label = match t {
                    Target::X { m, n } if *m as u64 == *n => n.to_string(),
                    other => other.to_string(),
                };
                csv += &estimate_row(&label, e);
                text += &format!(
                    "{t}: {:.6} [{:.6}, {:.6}] indeterminate {:.4}\n",
                    e.point,
                    e.ci_lo,
                    e.ci_hi,
                    e.indeterminate_frac()
                );
                rows.push(json!({"target": t.to_string(), "estimate": to_value(e)?}));
            }
            if let Some(p) = &ctx.csv {
                write_file(p, &csv)?;
            }
            ctx.emit(
                json!({"seed": ctx.seed, "trials": ctx.trials, "steps": steps, "results": rows}),
                text,
            )
        }
        WalkCmd::Fit { input } => {
            let text = read_file(&input)?;
            let mut pts = Vec::new();
            for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
                let cols: Vec<&str> = line.split(',').collect();
                let parse = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidInput(format!("bad CSV line {line:?}")))
                };
                if cols.len() < 2 {
                    return Err(Error::InvalidInput(format!("bad CSV line {line:?}")));
                }
                pts.push((parse(cols[0])?, parse(cols[1])?));
            }
            let fit = walk::decay_fit(&pts)?;
            let text = format!(
                "rate {:.6}, r² {:.6}, curvature {:.3e}, points {}\n",
                fit.rate, fit.r_squared, fit.curvature, fit.points_used
            );
            ctx.emit(to_value(&fit)?, text)
        }
    }
}

fn iet_cmd(ctx: &Ctx, cmd: IetCmd) -> Result<()> {
    match cmd {
        IetCmd::Expand { comb, steps } => {
            let (c, w) = read_comb(&comb.input)?;
            let w = w.ok_or_else(|| Error::InvalidInput("the .iex file has no widths line".into()))?;
            let seq = expand(&c, &w, steps)?;
            let mut text = format!("{} steps from {}\n", seq.len(), c);
            for s in &seq.steps {
                text += &format!(
                    "  {} beats {} ({})\n",
                    c.label(s.winner),
                    c.label(s.loser),
                    s.winner_side
                );
            }
            text += &format!("end {}\n", seq.end);
            if let Some(h) = seq.halt {
                text += &format!("halted: {h}\n");
            }
            ctx.emit(sequence_json(&seq)?, text)
        }
        IetCmd::Cylinder { comb, path } => {
            let (c, _) = read_comb(&comb.input)?;
            let sides: Vec<Side> = path
                .chars()
                .filter(|ch| !ch.is_whitespace())
                .map(|ch| match ch {
                    't' | 'T' => Ok(Side::Top),
                    'b' | 'B' => Ok(Side::Bottom),
                    _ => Err(Error::InvalidInput(format!("path letters are t and b, got {ch:?}"))),
                })
                .collect::<Result<_>>()?;
            let seq = SplittingSequence::from_sides(&c, &sides)?;
            let cyl = cylinder(&seq)?;
            let base = splitlab::iet::configuration_polytope(&c);
            let ratio = cyl.volume() / base.volume();
            let vertices: Vec<Value> = cyl.vertices().iter().map(|v| v.0.iter().map(r).collect()).collect();
            let text = format!(
                "{} vertices, dimension {}, relative volume {}\n",
                vertices.len(),
                cyl.dim(),
                ratio
            );
            ctx.emit(
                json!({"end": seq.end, "vertices": vertices, "dim": cyl.dim(), "relative_volume": r(&ratio)}),
                text,
            )
        }
    }
}

fn rauzy_cmd(ctx: &Ctx, cmd: RauzyCmd) -> Result<()> {
    let dot_out = |g: &rauzy::RauzyGraph| -> Result<()> {
        let s = rauzy::export_dot(g);
        match &ctx.out {
            Some(p) => write_file(p, &s),
            None => {
                stdout(&s);
                Ok(())
            }
        }
    };
    match cmd {
        RauzyCmd::Explore { comb, limit, dot } => {
            let g = rauzy::explore(&read_comb(&comb.input)?.0, limit);
            if dot {
                return dot_out(&g);
            }
            let text = format!(
                "{} nodes, {} edges, {} unlabeled types{}\n",
                g.nodes.len(),
                g.edges.len(),
                g.unlabeled_count(),
                if g.truncated { " (truncated)" } else { "" }
            );
            ctx.emit(rauzy::export_json(&g), text)
        }
        RauzyCmd::Attractors { comb, limit } => {
            let g = rauzy::explore(&read_comb(&comb.input)?.0, limit);
            let a = rauzy::attractors(&g)?;
            let named: Vec<Vec<String>> = a
                .iter()
                .map(|c| c.iter().map(|&i| g.nodes[i].canonical_string()).collect())
                .collect();
            let text = named
                .iter()
                .enumerate()
                .map(|(i, c)| format!("attractor {i}: {} nodes\n", c.len()))
                .collect();
            ctx.emit(json!({"attractors": named}), text)
        }
        RauzyCmd::Dot { comb, limit } => dot_out(&rauzy::explore(&read_comb(&comb.input)?.0, limit)),
    }
}

fn surface_cmd(ctx: &Ctx, cmd: SurfaceCmd) -> Result<()> {
    match cmd {
        SurfaceCmd::Build { g, m } => {
            let p: Phi0 = surface::build_phi0(g, m)?;
            let iex = p.comb.to_iex(None);
            let mut v = to_value(&p)?;
            v["d"] = json!(p.comb.d());
            match &ctx.out {
                Some(path) => write_file(path, &iex),
                None if ctx.json => {
                    stdout(&format!("{v}\n"));
                    Ok(())
                }
                None => {
                    stdout(&iex);
                    Ok(())
                }
            }
        }
        SurfaceCmd::Regions { surface: s } => {
            let comb = load_surface(&s)?;
            let prof = surface::analyze_regions(&comb)?;
            let mut text = format!(
                "genus {}, {} punctures, {} regions\n",
                prof.genus,
                prof.punctures,
                prof.regions.len()
            );
            for ((cusps, punctured), k) in prof.counts() {
                text += &format!("  {k} × {cusps} cusps{}\n", if punctured { ", punctured" } else { "" });
            }
            ctx.emit(to_value(&prof)?, text)
        }
        SurfaceCmd::Twist { surface: s, n, exact } => {
            let comb = load_surface(&s)?;
            let closed = surface::twist_closed_form(&comb, n);
            let ratio = match closed {
                Some(c) if !exact => {
                    surface::dehn_twist_sequence(&comb)?;
                    c
                }
                closed => {
                    let x = surface::twist_volume_ratio(&comb, n)?;
                    if let Some(c) = closed.filter(|c| c != &x) {
                        return Err(Error::Internal(format!("exact ratio {x} differs from closed form {c}")));
                    }
                    x
                }
            };
            ctx.emit(json!({"ratio": r(&ratio)}), format!("{}\n", format_rational(&ratio)))
        }
        SurfaceCmd::Cdist {
            surface: s,
            c,
            max_steps,
        } => {
            let comb = load_surface(&s)?;
            let rep = surface::cdist_experiment(&comb, &parse_c(&c)?, ctx.trials, max_steps, ctx.seed)?;
            let text = format!(
                "hits {}/{} ({:.4}), halted {}, misses {}\n",
                rep.hits, rep.trials, rep.hit_fraction, rep.halted, rep.misses
            );
            if let Some(p) = &ctx.csv {
                let mut csv = String::from("lo,hi,count\n");
                for b in &rep.histogram {
                    csv += &format!("{},{},{}\n", b.lo, b.hi, b.count);
                }
                write_file(p, &csv)?;
            }
            ctx.emit(to_value(&rep)?, text)
        }
        SurfaceCmd::Ymn {
            surface: s,
            stage,
            n,
            c,
            max_steps,
        } => {
            let comb = load_surface(&s)?;
            let rep = surface::ymn_lebesgue(&comb, stage, n, &parse_c(&c)?, ctx.trials, max_steps, ctx.seed)?;
            let e = &rep.estimate;
            let mut text = format!(
                "{:.6} [{:.6}, {:.6}], indeterminate {:.4}\n",
                e.point,
                e.ci_lo,
                e.ci_hi,
                e.indeterminate_frac()
            );
            if let Some(x) = &rep.exact {
                text += &format!("exact {x}\n");
            }
            ctx.emit(to_value(&rep)?, text)
        }
    }
}

fn measure_cmd(ctx: &Ctx, cmd: MeasureCmd) -> Result<()> {
    match cmd {
        MeasureCmd::Distortion { matrix, input, c } => {
            let rows: Vec<Vec<i64>> =
                serde_json::from_str(&matrix).map_err(|e| Error::InvalidInput(format!("bad matrix: {e}")))?;
            let q = CocycleMatrix::from_rows(&rows)?;
            let w = match input {
                Some(p) => splitlab::iet::configuration_polytope(&read_comb(&p)?.0),
                None => Polytope::new(
                    (0..q.dim())
                        .map(|i| splitlab::exact::RationalVector::basis(q.dim(), i))
                        .collect(),
                )?,
            };
            let c = parse_c(&c)?;
            let dist = measure::distortion(&q, &w)?;
            let ok = measure::is_uniformly_distorted(&q, &w, &c)?;
            ctx.emit(
                json!({"distortion": r(&dist), "C": r(&c), "uniformly_distorted": ok}),
                format!("distortion {dist}, C-uniformly distorted: {ok}\n"),
            )
        }
        MeasureCmd::Bc {
            nmax,
            pairwise,
            certified,
        } => {
            let ns: Vec<u64> = (1..=nmax).step_by(2).collect();
            let (mut l, v) = measure::torus_surrogate_tables(&ns)?;
            if let Some(budget) = certified {
                for &n in &ns {
                    let b = torus::measure_x(n as usize, n, budget)?;
                    l.insert((n, n), (b.lower, b.upper));
                }
            }
            let rep = measure::bc_assemble(&l, &v, Layout::Diagonal, &ns);
            let ls: Vec<(u64, Rat)> = rep.rows.iter().map(|row| (row.n, row.l_lower.clone())).collect();
            let vs: Vec<(u64, Rat)> = rep.rows.iter().map(|row| (row.n, row.nu_upper.clone())).collect();
            let verdict = measure::bc_verdict(&ls, &vs, &parse_rational(&pairwise)?)?;
            let text = format!(
                "Σℓ ≥ {:.4} ({:?}), Σν ≤ {:.6} ({:?}), singular pattern: {}\n",
                splitlab::rational::to_f64(&verdict.lebesgue.partial_sum),
                verdict.lebesgue.status,
                splitlab::rational::to_f64(&verdict.harmonic.partial_sum),
                verdict.harmonic.status,
                verdict.singular_pattern
            );
            ctx.emit(
                json!({"assembly": to_value(&rep)?, "verdict": to_value(&verdict)?}),
                text,
            )
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    }
    let ctx = Ctx {
        seed: cli.seed,
        trials: cli.trials,
        json: cli.json,
        csv: cli.csv,
        out: cli.out,
    };
    match cli.command {
        Command::Torus(c) => torus_cmd(&ctx, c),
        Command::Walk(c) => walk_cmd(&ctx, c),
        Command::Iet(c) => iet_cmd(&ctx, c),
        Command::Rauzy(c) => rauzy_cmd(&ctx, c),
        Command::Surface(c) => surface_cmd(&ctx, c),
        Command::Measure(c) => measure_cmd(&ctx, c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 2 } else { 1 })
        }
    }
}
