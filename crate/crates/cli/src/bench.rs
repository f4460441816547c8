//! Strategy x instance benchmark matrix with Table-1 style aggregation.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use evcts::search::{solve, PfihStrategy, RunReport, SolverConfig, CSV_HEADER};

use crate::{load_instance, write, BenchArgs, Failure};

pub const AGGREGATE_HEADER: &str = "Scope,Strategy,Instances,Gap[%],Diff[%],PFIH[s]";

#[derive(Clone, Debug)]
pub struct Cell {
    pub instance: usize,
    pub strategy: PfihStrategy,
    pub rep: usize,
    pub seed: u64,
    pub outcome: Result<Outcome, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub csv: String,
    pub status: String,
    pub root_gap: Option<f64>,
    pub gap: Option<f64>,
    pub time_pfih: f64,
}

impl Outcome {
    fn from_report(r: &RunReport) -> Self {
        Outcome {
            csv: r.csv_row(),
            status: serde_json::to_value(r.status)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
            root_gap: r.root.gap.filter(|g| g.is_finite()),
            gap: r.gap.filter(|g| g.is_finite()),
            time_pfih: r.time_pfih.unwrap_or(0.0),
        }
    }
}

pub fn run(args: &BenchArgs, cfg: &SolverConfig) -> Result<(), Failure> {
    if args.reps == 0 || args.threads == 0 || args.strategies.is_empty() {
        return Err(Failure::Usage("reps, threads and strategies must be non-empty".into()));
    }
    let mut jobs = Vec::new();
    for i in 0..args.instances.len() {
        for &s in &args.strategies {
            for rep in 0..args.reps {
                jobs.push((i, s, rep));
            }
        }
    }
    let next = AtomicUsize::new(0);
    let done: Mutex<Vec<Option<Cell>>> = Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..args.threads.min(jobs.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(i, strategy, rep)) = jobs.get(k) else {
                    break;
                };
                let seed = cfg.seed + rep as u64;
                let path = &args.instances[i];
                let outcome = load_instance(path)
                    .map_err(|f| match f {
                        Failure::Usage(m) | Failure::Domain(m) => m,
                    })
                    .and_then(|inst| {
                        let c = SolverConfig {
                            pfih: strategy,
                            seed,
                            ..cfg.clone()
                        };
                        if matches!(strategy, PfihStrategy::BeforeCuts | PfihStrategy::AfterCuts) && !c.cuts {
                            return Err(format!("strategy {} needs cuts", strategy.name()));
                        }
                        Ok(Outcome::from_report(&solve(&inst, &inst.name, &c)))
                    });
                match &outcome {
                    Ok(o) => eprintln!("{} {} rep {rep}: {}", path.display(), strategy.name(), o.status),
                    Err(e) => eprintln!("{} {} rep {rep}: failed: {e}", path.display(), strategy.name()),
                }
                done.lock().unwrap()[k] = Some(Cell {
                    instance: i,
                    strategy,
                    rep,
                    seed,
                    outcome,
                });
            });
        }
    });
    let cells: Vec<Cell> = done
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|c| c.expect("every job ran"))
        .collect();
    let names: Vec<String> = args
        .instances
        .iter()
        .map(|p| p.file_stem().and_then(|s| s.to_str()).unwrap_or("?").to_string())
        .collect();
    write(&args.out, &render(&cells, &names, &args.strategies))?;
    eprintln!("wrote {}", args.out.display());
    let failed = cells.iter().filter(|c| c.outcome.is_err()).count();
    if failed > 0 {
        return Err(Failure::Domain(format!("{failed} of {} runs failed", cells.len())));
    }
    Ok(())
}

fn baseline(strategies: &[PfihStrategy]) -> PfihStrategy {
    if strategies.contains(&PfihStrategy::Off) {
        PfihStrategy::Off
    } else {
        strategies[0]
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Mean of `pick` over the repetitions of one matrix entry; `None` if any
/// repetition failed or has no value.
fn rep_mean(cells: &[Cell], i: usize, s: PfihStrategy, pick: impl Fn(&Outcome) -> Option<f64>) -> Option<f64> {
    let vals: Option<Vec<f64>> = cells
        .iter()
        .filter(|c| c.instance == i && c.strategy == s)
        .map(|c| c.outcome.as_ref().ok().and_then(&pick))
        .collect();
    vals.and_then(|v| mean(&v))
}

fn fmt2(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.2}"))
}

/// Per-strategy means over the instances where both the strategy and the
/// baseline have a value. Diff is the mean of per-instance relative changes;
/// instances with a zero baseline gap are excluded from it.
fn aggregate(
    cells: &[Cell],
    count: usize,
    strategies: &[PfihStrategy],
    scope: &str,
    pick: impl Fn(&Outcome) -> Option<f64> + Copy,
    out: &mut String,
) {
    let base = baseline(strategies);
    for &s in strategies {
        let mut gaps = Vec::new();
        let mut diffs = Vec::new();
        let mut pfih = Vec::new();
        for i in 0..count {
            let (Some(g), Some(b)) = (rep_mean(cells, i, s, pick), rep_mean(cells, i, base, pick)) else {
                continue;
            };
            gaps.push(g);
            if b.abs() > 1e-12 {
                diffs.push(100.0 * (g - b) / b);
            }
            pfih.push(rep_mean(cells, i, s, |o| Some(o.time_pfih)).unwrap_or(0.0));
        }
        let diff = if s == base {
            String::new()
        } else if diffs.is_empty() {
            "n/a".to_string()
        } else {
            fmt2(mean(&diffs))
        };
        let pfih = if s == PfihStrategy::Off || scope != "root" {
            String::new()
        } else {
            fmt2(mean(&pfih))
        };
        writeln!(
            out,
            "{scope},{},{},{},{diff},{pfih}",
            s.name(),
            gaps.len(),
            fmt2(mean(&gaps))
        )
        .unwrap();
    }
}

/// Rows in canonical (instance, strategy, rep) order, a blank line, then the
/// aggregate block for the root gap and the final gap.
pub fn render(cells: &[Cell], names: &[String], strategies: &[PfihStrategy]) -> String {
    let mut sorted: Vec<&Cell> = cells.iter().collect();
    let order = |s: PfihStrategy| strategies.iter().position(|&t| t == s).unwrap_or(usize::MAX);
    sorted.sort_by_key(|c| (c.instance, order(c.strategy), c.rep));
    let mut out = format!("Strategy,Rep,Seed,Status,{CSV_HEADER}\n");
    for c in sorted {
        let (status, row) = match &c.outcome {
            Ok(o) => (o.status.clone(), o.csv.clone()),
            Err(_) => ("failed".to_string(), format!("{},,,,,,,,,,", names[c.instance])),
        };
        writeln!(out, "{},{},{},{status},{row}", c.strategy.name(), c.rep, c.seed).unwrap();
    }
    out.push('\n');
    out.push_str(AGGREGATE_HEADER);
    out.push('\n');
    aggregate(cells, names.len(), strategies, "root", |o| o.root_gap, &mut out);
    aggregate(cells, names.len(), strategies, "final", |o| o.gap, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(instance: usize, strategy: PfihStrategy, root_gap: f64, pfih: f64) -> Cell {
        Cell {
            instance,
            strategy,
            rep: 0,
            seed: 0,
            outcome: Ok(Outcome {
                csv: format!("i{instance},,,,0.00,,,,0.00,1,"),
                status: "optimal".into(),
                root_gap: Some(root_gap),
                gap: Some(0.0),
                time_pfih: pfih,
            }),
        }
    }

    #[test]
    fn two_by_two_matrix() {
        use PfihStrategy::*;
        let cells = vec![
            cell(1, AfterCuts, 1.0, 3.0),
            cell(0, Off, 4.0, 0.0),
            cell(0, AfterCuts, 3.0, 1.0),
            cell(1, Off, 0.0, 0.0),
        ];
        let names = vec!["a".to_string(), "b".to_string()];
        let text = render(&cells, &names, &[Off, AfterCuts]);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("Strategy,Rep,Seed,Status,Instance"));
        assert!(lines[1].starts_with("off,0,0,optimal,i0"));
        assert!(lines[2].starts_with("after,0,0,optimal,i0"));
        assert!(lines[3].starts_with("off,0,0,optimal,i1"));
        assert_eq!(lines[5], "");
        assert_eq!(lines[6], AGGREGATE_HEADER);
        assert_eq!(lines[7], "root,off,2,2.00,,");
        // instance b has baseline gap 0 and only enters the gap mean
        assert_eq!(lines[8], "root,after,2,2.00,-25.00,2.00");
        assert_eq!(lines[10], "final,after,2,0.00,n/a,");
    }

    #[test]
    fn failed_cells_are_kept_and_excluded() {
        use PfihStrategy::*;
        let mut bad = cell(0, AfterCuts, 0.0, 0.0);
        bad.outcome = Err("boom".into());
        let cells = vec![cell(0, Off, 4.0, 0.0), bad];
        let text = render(&cells, &["a".to_string()], &[Off, AfterCuts]);
        assert!(text.contains("after,0,0,failed,a,,,,,,,,,,"));
        assert!(text.contains("root,after,0,,n/a,"));
    }
}
