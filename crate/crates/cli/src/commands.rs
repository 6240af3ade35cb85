use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use pushdob::data::{load_trajectory, save_trajectory};
use pushdob::force_recon::reconstruct as reconstruct_wrench;
use pushdob::identify::Identifier;
use pushdob::metrics::{improvement_ratio, ErrorStats, ImprovementRatio, PhaseReport};
use pushdob::observer::{self, DisturbanceObserver};
use pushdob::predict::{identify_segment, run_pipeline, Algorithm, PipelineOutput};
use pushdob::synth::{generate, write_truth, NoiseLevels};
use pushdob::{LinearModel, PredictionReport, PushTrajectory, SynthScenario};
use serde::{Deserialize, Serialize};

use crate::{Context, Preset, SynthArgs};

type Row = Vec<String>;

fn num(v: f64) -> String {
    v.to_string()
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Row>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)?;
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}

/// Runs `job` on every input in parallel. Outputs are keyed by the input's
/// file stem, so two inputs sharing a stem are refused.
fn for_each_input<F>(inputs: &[PathBuf], job: F) -> anyhow::Result<()>
where
    F: Fn(&Path) -> anyhow::Result<()> + Sync,
{
    let mut seen = BTreeMap::new();
    for p in inputs {
        if let Some(prev) = seen.insert(stem(p), p) {
            bail!("{} and {} would write the same outputs", prev.display(), p.display());
        }
    }
    let results: Vec<anyhow::Result<()>> = std::thread::scope(|s| {
        let handles: Vec<_> = inputs
            .iter()
            .map(|p| {
                let job = &job;
                s.spawn(move || job(p).with_context(|| p.display().to_string()))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow::anyhow!("worker panicked"))))
            .collect()
    });
    results.into_iter().collect()
}

fn load(ctx: &Context, path: &Path) -> anyhow::Result<PushTrajectory> {
    Ok(load_trajectory(path, ctx.params)?)
}

pub fn synth(ctx: &Context, args: &SynthArgs) -> anyhow::Result<()> {
    let mut scenario = match &args.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
            serde_json::from_str(&text).with_context(|| path.display().to_string())?
        }
        None => match args.preset {
            Preset::Default => SynthScenario::default(),
            Preset::Friction => SynthScenario::friction_dominated(),
        },
    };
    if ctx.seed_given {
        scenario.seed = ctx.config.seed;
    }
    if let Some(d) = args.duration {
        scenario.duration = d;
    }
    if args.noise_free {
        scenario.noise = NoiseLevels::none();
    }
    if let Some(id) = &args.case_id {
        scenario.case_id = id.clone();
    }
    let out = generate(&scenario, &ctx.params)?;
    let base = ctx.out.join(&scenario.case_id);
    let csv_path = base.with_extension("csv");
    save_trajectory(&out.trajectory, &csv_path)?;
    let truth_path = ctx.out.join(format!("{}_truth.csv", scenario.case_id));
    write_truth(&out.truth, File::create(&truth_path)?)?;
    write_json(&ctx.out.join(format!("{}_scenario.json", scenario.case_id)), &scenario)?;
    println!("{}", csv_path.display());
    println!("{}", truth_path.display());
    Ok(())
}

pub fn reconstruct(ctx: &Context, inputs: &[PathBuf]) -> anyhow::Result<()> {
    for_each_input(inputs, |path| {
        let traj = load(ctx, path)?;
        let r = reconstruct_wrench(&traj, &ctx.config.gains)?;
        let rows = (0..r.t.len()).map(|k| {
            vec![
                num(r.t[k]),
                num(r.f_total[k].x),
                num(r.f_total[k].y),
                num(r.t_total[k]),
                num(r.f_frt[k].x),
                num(r.f_frt[k].y),
                num(r.t_frt[k]),
            ]
        });
        let out = ctx.out.join(format!("{}_recon.csv", stem(path)));
        write_csv(
            &out,
            &["t", "ftot_x", "ftot_y", "ttot", "ffrt_x", "ffrt_y", "tfrt"],
            rows,
        )?;
        println!(
            "{} (tracking rmse {:.3} mm, {:.3} deg)",
            out.display(),
            r.tracking_rmse_pos * 1e3,
            r.tracking_rmse_theta.to_degrees()
        );
        Ok(())
    })
}

pub fn observe(ctx: &Context, inputs: &[PathBuf]) -> anyhow::Result<()> {
    for_each_input(inputs, |path| {
        let traj = load(ctx, path)?;
        let est = observer::run(&traj.reference_samples(), &ctx.config.q, &traj.params, traj.dt())?;
        let rows = est
            .iter()
            .map(|e| vec![num(e.t), num(e.d_fx), num(e.d_fy), num(e.d_tau)]);
        let out = ctx.out.join(format!("{}_dhat.csv", stem(path)));
        write_csv(&out, &["t", "dhat_fx", "dhat_fy", "dhat_tau"], rows)?;
        println!("{}", out.display());
        Ok(())
    })
}

#[derive(Serialize)]
struct FittedLaw {
    beta: f64,
    eps: f64,
    samples: usize,
    degenerate: bool,
}

impl From<&LinearModel> for FittedLaw {
    fn from(m: &LinearModel) -> Self {
        Self {
            beta: m.beta,
            eps: m.epsilon,
            samples: m.n_samples,
            degenerate: m.degenerate,
        }
    }
}

#[derive(Serialize)]
struct ChannelLaws {
    fx: FittedLaw,
    fy: FittedLaw,
    tau: FittedLaw,
}

pub fn identify(ctx: &Context, inputs: &[PathBuf]) -> anyhow::Result<()> {
    let pipeline = ctx.config.pipeline();
    for_each_input(inputs, |path| {
        let traj = load(ctx, path)?;
        if traj.len() < 2 {
            bail!("identification needs at least 2 samples");
        }
        let refs = traj.reference_samples();
        let mut observer = DisturbanceObserver::new(&pipeline.q, &traj.params, traj.dt())?;
        let mut identifier = Identifier::new();
        let pairs = identify_segment(&mut observer, &mut identifier, &refs, 0..=refs.len() - 1, &pipeline)?;
        let models = identifier.models().context("no samples left after the settling time")?;
        let name = stem(path);
        let json = ctx.out.join(format!("{name}_models.json"));
        write_json(
            &json,
            &ChannelLaws {
                fx: (&models.fx).into(),
                fy: (&models.fy).into(),
                tau: (&models.tau).into(),
            },
        )?;
        let rows = pairs.iter().map(|(u, d)| {
            let (u, d) = (u.channels(), d.channels());
            vec![num(u[0]), num(d[0]), num(u[1]), num(d[1]), num(u[2]), num(d[2])]
        });
        let scatter = ctx.out.join(format!("{name}_scatter.csv"));
        write_csv(
            &scatter,
            &["u_fx", "dhat_fx", "u_fy", "dhat_fy", "u_tau", "dhat_tau"],
            rows,
        )?;
        println!("{}", json.display());
        println!("{}", scatter.display());
        Ok(())
    })
}

/// Per-phase statistics as stored in a report file.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct PhaseRow {
    case_id: String,
    phase_index: usize,
    algorithm: Algorithm,
    horizon_length: f64,
    samples: usize,
    #[serde(flatten)]
    stats: Stats,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct Stats {
    mean_abs_err_x: f64,
    mean_abs_err_y: f64,
    mean_abs_err_theta: f64,
    std_err_x: f64,
    std_err_y: f64,
    std_err_theta: f64,
}

impl From<ErrorStats<f64>> for Stats {
    fn from(s: ErrorStats<f64>) -> Self {
        Self {
            mean_abs_err_x: s.mean_abs_err_x,
            mean_abs_err_y: s.mean_abs_err_y,
            mean_abs_err_theta: s.mean_abs_err_theta,
            std_err_x: s.std_err_x,
            std_err_y: s.std_err_y,
            std_err_theta: s.std_err_theta,
        }
    }
}

impl From<Stats> for ErrorStats<f64> {
    fn from(s: Stats) -> Self {
        Self {
            mean_abs_err_x: s.mean_abs_err_x,
            mean_abs_err_y: s.mean_abs_err_y,
            mean_abs_err_theta: s.mean_abs_err_theta,
            std_err_x: s.std_err_x,
            std_err_y: s.std_err_y,
            std_err_theta: s.std_err_theta,
        }
    }
}

#[derive(Serialize)]
struct PhaseLaws {
    phase_index: usize,
    models: ChannelLaws,
}

#[derive(Serialize)]
struct ReportFile {
    case_id: String,
    samples: usize,
    sample_rate: f64,
    phase_boundaries: Vec<f64>,
    phases: Vec<PhaseRow>,
    /// Pooled over all prediction samples, per algorithm.
    aggregate: BTreeMap<String, Stats>,
    /// Laws in force at the start of each prediction phase.
    models: Vec<PhaseLaws>,
}

/// The part of a report file that `compare` reads back.
#[derive(Deserialize)]
struct StoredReport {
    phases: Vec<PhaseRow>,
}

fn report_file(traj: &PushTrajectory, run: &PipelineOutput<f64>) -> ReportFile {
    let phases = run
        .report
        .phases
        .iter()
        .map(|p| PhaseRow {
            case_id: p.case_id.clone(),
            phase_index: p.phase_index,
            algorithm: p.algorithm,
            horizon_length: p.horizon_length,
            samples: p.samples,
            stats: p.stats.into(),
        })
        .collect();
    let aggregate = [Algorithm::Proposed, Algorithm::Simple]
        .into_iter()
        .filter_map(|a| Some((a.name().to_string(), run.report.aggregate(a)?.into())))
        .collect();
    let models = run
        .models
        .iter()
        .map(|m| PhaseLaws {
            phase_index: m.phase_index,
            models: ChannelLaws {
                fx: (&m.models.fx).into(),
                fy: (&m.models.fy).into(),
                tau: (&m.models.tau).into(),
            },
        })
        .collect();
    ReportFile {
        case_id: traj.case_id.clone(),
        samples: traj.len(),
        sample_rate: traj.sample_rate(),
        phase_boundaries: run.schedule.boundaries.clone(),
        phases,
        aggregate,
        models,
    }
}

pub fn predict(ctx: &Context, inputs: &[PathBuf]) -> anyhow::Result<()> {
    let pipeline = ctx.config.pipeline();
    for_each_input(inputs, |path| {
        let traj = load(ctx, path)?;
        let run = run_pipeline(&traj, &pipeline)?;
        let name = stem(path);
        let header = [
            "t",
            "pred_x",
            "pred_y",
            "pred_theta",
            "meas_x",
            "meas_y",
            "meas_theta",
            "err_x",
            "err_y",
            "err_theta",
            "algo",
        ];
        for phase in run.report.phase_indices() {
            let rows = run
                .report
                .phases
                .iter()
                .filter(|p| p.phase_index == phase)
                .flat_map(|p| {
                    p.series.iter().map(|s| {
                        let mut row: Row = [s.t]
                            .iter()
                            .chain(&s.predicted)
                            .chain(&s.measured)
                            .chain(&s.error)
                            .map(|v| num(*v))
                            .collect();
                        row.push(p.algorithm.name().into());
                        row
                    })
                })
                .collect::<Vec<_>>();
            write_csv(&ctx.out.join(format!("{name}_phase{phase}.csv")), &header, rows)?;
        }
        let json = ctx.out.join(format!("{name}_report.json"));
        write_json(&json, &report_file(&traj, &run))?;
        println!("{}", json.display());
        Ok(())
    })
}

fn report_from_rows(rows: &[PhaseRow]) -> PredictionReport {
    PredictionReport {
        phases: rows
            .iter()
            .map(|r| PhaseReport {
                case_id: r.case_id.clone(),
                phase_index: r.phase_index,
                algorithm: r.algorithm,
                horizon_length: r.horizon_length,
                samples: r.samples,
                stats: r.stats.into(),
                series: Vec::new(),
            })
            .collect(),
    }
}

#[derive(Serialize)]
struct CaseComparison {
    case_id: String,
    /// Baseline over proposed mean error per phase; null when the proposed error is zero.
    ratios: Vec<ImprovementRatio<f64>>,
    mean_of_phase_means: BTreeMap<String, [f64; 3]>,
}

#[derive(Serialize)]
struct Comparison {
    cases: Vec<CaseComparison>,
    /// Per-phase ratios over all cases: smallest and mean per axis.
    min_ratio: [f64; 3],
    mean_ratio: [f64; 3],
}

fn case_rows(ctx: &Context, path: &Path) -> anyhow::Result<Vec<PhaseRow>> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path)?;
        let report: StoredReport = serde_json::from_str(&text)?;
        return Ok(report.phases);
    }
    let traj = load(ctx, path)?;
    let run = run_pipeline(&traj, &ctx.config.pipeline())?;
    Ok(report_file(&traj, &run).phases)
}

pub fn compare(ctx: &Context, inputs: &[PathBuf]) -> anyhow::Result<()> {
    let slots: Vec<std::sync::Mutex<Vec<PhaseRow>>> = inputs.iter().map(|_| Default::default()).collect();
    for_each_input(inputs, |path| {
        let i = inputs
            .iter()
            .position(|p| p == path)
            .expect("input comes from the list");
        *slots[i].lock().expect("slot lock") = case_rows(ctx, path)?;
        Ok(())
    })?;

    let mut cases = Vec::new();
    let mut csv_rows = Vec::new();
    for slot in slots {
        let rows = slot.into_inner().expect("slot lock");
        let report = report_from_rows(&rows);
        let ratios = improvement_ratio(&report)?;
        let case_id = rows.first().map(|r| r.case_id.clone()).unwrap_or_default();
        for r in &ratios {
            let p = report
                .phase(r.phase_index, Algorithm::Proposed)
                .expect("ratio implies phase");
            let s = report
                .phase(r.phase_index, Algorithm::Simple)
                .expect("ratio implies phase");
            let mut row = vec![
                case_id.clone(),
                r.phase_index.to_string(),
                num(p.horizon_length),
                p.samples.to_string(),
            ];
            for stats in [&p.stats, &s.stats] {
                row.extend(stats.means().map(num));
                row.extend([stats.std_err_x, stats.std_err_y, stats.std_err_theta].map(num));
            }
            row.extend([r.x, r.y, r.theta].map(num));
            csv_rows.push(row);
        }
        let mean_of_phase_means = [Algorithm::Proposed, Algorithm::Simple]
            .into_iter()
            .filter_map(|a| Some((a.name().to_string(), report.mean_of_phase_means(a)?)))
            .collect();
        cases.push(CaseComparison {
            case_id,
            ratios,
            mean_of_phase_means,
        });
    }

    let all: Vec<[f64; 3]> = cases
        .iter()
        .flat_map(|c| c.ratios.iter().map(|r| [r.x, r.y, r.theta]))
        .collect();
    if all.is_empty() {
        bail!("no prediction phases to compare");
    }
    let mut min_ratio = [f64::INFINITY; 3];
    let mut mean_ratio = [0.0; 3];
    for r in &all {
        for c in 0..3 {
            min_ratio[c] = min_ratio[c].min(r[c]);
            mean_ratio[c] += r[c] / all.len() as f64;
        }
    }

    let header = [
        "case_id",
        "phase",
        "horizon",
        "samples",
        "proposed_mean_x",
        "proposed_mean_y",
        "proposed_mean_theta",
        "proposed_std_x",
        "proposed_std_y",
        "proposed_std_theta",
        "simple_mean_x",
        "simple_mean_y",
        "simple_mean_theta",
        "simple_std_x",
        "simple_std_y",
        "simple_std_theta",
        "ratio_x",
        "ratio_y",
        "ratio_theta",
    ];
    let csv_path = ctx.out.join("compare_phases.csv");
    write_csv(&csv_path, &header, csv_rows)?;
    let json = ctx.out.join("compare_summary.json");
    write_json(
        &json,
        &Comparison {
            cases,
            min_ratio,
            mean_ratio,
        },
    )?;
    println!("{}", json.display());
    println!("{}", csv_path.display());
    println!(
        "smallest improvement ratio: x {:.2}, y {:.2}, theta {:.2}",
        min_ratio[0], min_ratio[1], min_ratio[2]
    );
    Ok(())
}
