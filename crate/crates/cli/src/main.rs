use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blowzoom::blowup::{blowup, weighted_duplication, WeightVector};
use blowzoom::limsup::{bc_lower_bound, cube_event_system, doubling_scan, periodic_limsup_prob, EventFile};
use blowzoom::measure::sample_s;
use blowzoom::metric::{d_metric, f_a, DEFAULT_A_MAX};
use blowzoom::sharpness::{find_non_tangent_point, LineMeasure, SharpnessConfig};
use blowzoom::tree::{
    construct_tree_approximant, empirical_distribution, format_word, parse_word, pi_metric, state_distance, TreeMeasure,
};
use blowzoom::triadic::standard_box;
use blowzoom::typical::{certify_r_membership, construct_mu_k, convergence_probe, Membership};
use blowzoom::{AtomicMeasure, Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "blowzoom", version, about = "Blow-ups, tangent measures and micromeasures at desk scale")]
struct Cli {
    /// Worker threads; overrides BLOWZOOM_WORKERS.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// F_a distance between two measures.
    Metric {
        #[arg(long, allow_hyphen_values = true)]
        a: i32,
        #[arg(long)]
        lhs: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
    },
    /// The summed metric d with its truncation error.
    MetricD {
        #[arg(long)]
        lhs: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long, default_value_t = DEFAULT_A_MAX)]
        a_max: u32,
    },
    /// c T_{x,r#} mu.
    Blowup {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Weighted duplication of nu restricted to I_a.
    Dup {
        #[arg(long)]
        nu: PathBuf,
        #[arg(long)]
        a: i32,
        /// Comma-separated weights; all ones when absent.
        #[arg(long, value_delimiter = ',')]
        w: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// The approximant mu_k.
    Construct {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, allow_hyphen_values = true)]
        k: i32,
        /// Cubes of generation k inside I_B are used; defaults to a.
        #[arg(long, allow_hyphen_values = true)]
        window_level: Option<i32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Search generations n..=k_max for a certificate of membership.
    Certify {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, allow_hyphen_values = true)]
        n: i32,
        #[arg(long, allow_hyphen_values = true)]
        k_max: i32,
        /// Defaults to a + 1.
        #[arg(long, allow_hyphen_values = true)]
        window_level: Option<i32>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// F_b(mu_k, mu ⌞ I_b) against its bound for several k.
    Probe {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        k_list: Vec<i32>,
        #[arg(long, allow_hyphen_values = true)]
        b: i32,
        /// Defaults to b + 1.
        #[arg(long, allow_hyphen_values = true)]
        window_level: Option<i32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a measure from the random rational family on I_n.
    Sample {
        #[arg(long)]
        n: u32,
        #[arg(long, allow_hyphen_values = true)]
        window_level: i32,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Borel–Cantelli lower bound for an event file.
    Bc {
        #[arg(long)]
        events: PathBuf,
        /// Number of leading events; all when absent.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Central-cube events of certified generations.
    CubeEvents {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, allow_hyphen_values = true)]
        b: i32,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        k_list: Vec<i32>,
        /// Defaults to a + 1.
        #[arg(long, allow_hyphen_values = true)]
        window_level: Option<i32>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ratios mu(B(x, 2r)) / mu(B(x, r)).
    Doubling {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        #[arg(long)]
        r0: f64,
        #[arg(long, default_value_t = 2.0)]
        factor: f64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find a point of a line measure where L^+ (or L) is not tangent.
    Sharpness {
        /// Measure file; a `segments` list of densities is accepted.
        #[arg(long)]
        mu: PathBuf,
        #[arg(long, default_value_t = 0.04)]
        eps: f64,
        #[arg(long, default_value_t = 12)]
        imax: u32,
        #[arg(long, allow_hyphen_values = true)]
        y0: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
        #[arg(long, default_value_t = 50)]
        cert_scales: usize,
        #[arg(long, default_value_t = 5)]
        grid: usize,
        /// Smallest support gap considered.
        #[arg(long, default_value_t = 1e-3)]
        resolution: f64,
        /// JSON report; the certificate table goes next to it as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measures on symbolic trees.
    #[command(subcommand)]
    Tree(TreeCommand),
}

#[derive(Args)]
struct Pair {
    #[arg(long)]
    mu: PathBuf,
    #[arg(long)]
    nu: PathBuf,
    #[arg(long)]
    a: u32,
}

#[derive(Subcommand)]
enum TreeCommand {
    /// The metric pi.
    Pi {
        #[arg(long)]
        lhs: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
    },
    /// Apply ZOOM N times.
    Zoom {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long = "N", alias = "n")]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// sum_y mu[y] nu^y over words of length k.
    Construct {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Zoom states 1..=N and their pairwise distances.
    Microdist {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long = "N", alias = "n")]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Twelve significant digits without trailing zeros.
fn num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let fixed = format!("{:.*}", (11 - exp).max(0) as usize, x);
        trim(&fixed).to_string()
    } else {
        format!("{}e{}", trim(mantissa), exp)
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn load(path: &Path) -> Result<AtomicMeasure> {
    AtomicMeasure::load(path)
}

fn write(path: &Path, text: &str) -> Result<()> {
    Ok(std::fs::write(path, text)?)
}

fn json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn line_extent(mu: &LineMeasure) -> (f64, f64) {
    let points = mu
        .atoms()
        .iter()
        .map(|a| (a.0, a.0))
        .chain(mu.segments().iter().map(|s| (s.lo, s.hi)));
    points.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
}

fn run(cli: Cli) -> Result<String> {
    Ok(match cli.command {
        Command::Metric { a, lhs, rhs } => num(f_a(&load(&lhs)?, &load(&rhs)?, a)?),
        Command::MetricD { lhs, rhs, a_max } => {
            let r = d_metric(&load(&lhs)?, &load(&rhs)?, a_max)?;
            format!("{} (error <= {})", num(r.value), num(r.certified_error))
        }
        Command::Blowup { mu, x, r, c, out } => {
            let b = blowup(&load(&mu)?, &x, r, c)?;
            b.save(&out)?;
            format!("{} atoms, mass {}", b.len(), num(b.total_mass()))
        }
        Command::Dup { nu, a, w, out } => {
            let nu = load(&nu)?;
            let w = if w.is_empty() {
                WeightVector::ones(nu.dim())
            } else {
                WeightVector::new(nu.dim(), w)?
            };
            let d = weighted_duplication(&nu, a, &w)?;
            d.save(&out)?;
            format!("{} atoms, mass {}", d.len(), num(d.total_mass()))
        }
        Command::Construct { pair, k, window_level, out } => {
            let (mu, nu) = (load(&pair.mu)?, load(&pair.nu)?);
            let window = standard_box(window_level.unwrap_or(pair.a as i32), mu.dim());
            let m = construct_mu_k(&mu, &nu, pair.a, k, &window)?;
            m.save(&out)?;
            format!("{} atoms, mass {}", m.len(), num(m.total_mass()))
        }
        Command::Certify { pair, n, k_max, window_level, beta, out } => {
            let (mu, nu) = (load(&pair.mu)?, load(&pair.nu)?);
            let window = standard_box(window_level.unwrap_or(pair.a as i32 + 1), mu.dim());
            let m = certify_r_membership(&mu, &nu, pair.a, n, k_max, &window, beta)?;
            if let Some(out) = out {
                write(&out, &json(&m)?)?;
            }
            match m {
                Membership::Certified { k, certificates, .. } => {
                    format!("certified at k = {k} ({} cubes)", certificates.len())
                }
                Membership::NotCertified { tried } => {
                    format!("not certified for k in {n}..={k_max} ({} generations tried)", tried.len())
                }
            }
        }
        Command::Probe { pair, k_list, b, window_level, out } => {
            let (mu, nu) = (load(&pair.mu)?, load(&pair.nu)?);
            let window = standard_box(window_level.unwrap_or(b + 1), mu.dim());
            let rows = convergence_probe(&mu, &nu, pair.a, &k_list, b, &window)?;
            let mut csv = String::from("k,distance,bound,within\n");
            for r in &rows {
                writeln!(csv, "{},{},{},{}", r.k, num(r.distance), num(r.bound), r.within_bound()).unwrap();
            }
            if let Some(out) = out {
                write(&out, &csv)?;
            }
            let inside = rows.iter().filter(|r| r.within_bound()).count();
            format!("{inside}/{} generations within bound", rows.len())
        }
        Command::Sample { n, window_level, dim, h, seed, out } => {
            let s = sample_s(n, &standard_box(window_level, dim), h, seed)?;
            s.measure.save(&out)?;
            format!("seed {seed}: {} atoms, mass {}", s.measure.len(), num(s.measure.total_mass()))
        }
        Command::Bc { events, n } => {
            let file: EventFile = serde_json::from_str(&std::fs::read_to_string(events)?)?;
            let (space, seq) = file.into_system()?;
            let n = n.unwrap_or(seq.len());
            let bound = bc_lower_bound(&space, &seq, n)?;
            format!("bound {} union {}", num(bound), num(periodic_limsup_prob(&space, &seq)))
        }
        Command::CubeEvents { pair, b, k_list, window_level, beta, out } => {
            let (mu, nu) = (load(&pair.mu)?, load(&pair.nu)?);
            let window = standard_box(window_level.unwrap_or(pair.a as i32 + 1), mu.dim());
            let sys = cube_event_system(&mu, &nu, pair.a, b, &k_list, &window, beta)?;
            if let Some(out) = out {
                write(&out, &json(&sys)?)?;
            }
            let ok = sys.events.iter().all(|e| e.within_exact) && sys.pairs.iter().all(|p| p.within_exact);
            format!(
                "p {} rho {} bound {} target {} exact checks {}",
                num(sys.p),
                num(sys.rho),
                num(sys.bc_bound),
                num(sys.finite_n_target),
                if ok { "pass" } else { "fail" }
            )
        }
        Command::Doubling { mu, x, r0, factor, count, out } => {
            let rows = doubling_scan(&load(&mu)?, &x, r0, factor, count)?;
            let mut csv = String::from("r,inner,outer,ratio,infinite_candidate\n");
            for r in &rows {
                let ratio = r.ratio.map_or_else(|| "inf".to_string(), num);
                writeln!(csv, "{},{},{},{},{}", num(r.r), num(r.inner), num(r.outer), ratio, r.infinite_candidate).unwrap();
            }
            if let Some(out) = out {
                write(&out, &csv)?;
            }
            let worst = rows.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
            let infinite = rows.iter().filter(|r| r.infinite_candidate).count();
            format!("max ratio {} over {} scales, {infinite} infinite", num(worst), rows.len())
        }
        Command::Sharpness { mu, eps, imax, y0, h, cert_scales, grid, resolution, out } => {
            let mu = LineMeasure::load(&mu)?;
            if mu.is_zero() {
                return Err(Error::ZeroMass("empty measure".into()));
            }
            let mut cfg = SharpnessConfig::new(eps, line_extent(&mu))?;
            cfg.i_max = imax;
            cfg.y0 = y0;
            cfg.h = h;
            cfg.cert_scales = cert_scales;
            cfg.y_grid_points = grid;
            cfg.s_grid_points = grid;
            let res = find_non_tangent_point(&mu, &cfg, resolution)?;
            if let Some(out) = out {
                write(&out, &json(&res)?)?;
                write(&out.with_extension("csv"), &res.certificate_csv())?;
            }
            format!(
                "{:?}: x = {}, certificate {} ({} rows, threshold {})",
                res.case,
                num(res.x),
                if res.passed() { "passes" } else { "fails" },
                res.certificate.len(),
                num(res.threshold)
            )
        }
        Command::Tree(t) => run_tree(t)?,
    })
}

fn run_tree(cmd: TreeCommand) -> Result<String> {
    Ok(match cmd {
        TreeCommand::Pi { lhs, rhs } => num(pi_metric(&TreeMeasure::load(lhs)?, &TreeMeasure::load(rhs)?)?),
        TreeCommand::Zoom { mu, x, n, out } => {
            let mu = TreeMeasure::load(mu)?;
            let x = parse_word(&x, mu.alphabet())?;
            let states = empirical_distribution(&mu, &x, n)?;
            let last = &states[n - 1].0;
            if let Some(out) = out {
                last.measure.save(out)?;
            }
            format!(
                "depth {} measure, remaining word {}",
                last.measure.depth(),
                format_word(&last.word, mu.alphabet())
            )
        }
        TreeCommand::Construct { mu, nu, k, out } => {
            let approx = construct_tree_approximant(&TreeMeasure::load(mu)?, &TreeMeasure::load(nu)?, k)?;
            approx.measure.save(out)?;
            format!(
                "depth {}, {} zero cylinders",
                approx.measure.depth(),
                approx.zero_cylinders.len()
            )
        }
        TreeCommand::Microdist { mu, x, n, out } => {
            let mu = TreeMeasure::load(mu)?;
            let x = parse_word(&x, mu.alphabet())?;
            let states = empirical_distribution(&mu, &x, n)?;
            let mut csv = String::from("state,word,weight");
            for j in 1..=n {
                write!(csv, ",d{j}").unwrap();
            }
            csv.push('\n');
            let mut max = 0.0f64;
            for (i, (s, w)) in states.iter().enumerate() {
                write!(csv, "{},{},{}", i + 1, format_word(&s.word, mu.alphabet()), num(*w)).unwrap();
                for (t, _) in &states {
                    let d = state_distance(s, t)?;
                    max = max.max(d);
                    write!(csv, ",{}", num(d)).unwrap();
                }
                csv.push('\n');
            }
            if let Some(out) = out {
                write(&out, &csv)?;
            }
            format!("{n} states, largest pairwise distance {}", num(max))
        }
    })
}

fn workers(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| std::env::var("BLOWZOOM_WORKERS").ok()?.parse().ok())
        .filter(|&n| n > 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = workers(cli.workers) {
        // Fails only when a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn twelve_digits() {
        assert_eq!(num(1.5), "1.5");
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(2.0 / 3.0), "0.666666666667");
        assert_eq!(num(1e-7), "1e-7");
        assert_eq!(num(123456.0), "123456");
        assert_eq!(num(-0.25), "-0.25");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(3.0e15), "3e15");
    }
}
