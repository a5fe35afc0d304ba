use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hyptree_core::scene::{gen_scene, SyntheticSceneSpec};

use crate::config::{self, BenchConfig, Method, RecallConfig, SceneConfig, TrainConfig};
use crate::error::{CliError, Result};
use crate::formats::forest;
use crate::{bench, bundle, pipeline, reports};

#[derive(Debug, Parser)]
#[command(
    name = "hyptree",
    version,
    about = "Hierarchy supervision and hyperbolic grouping on synthetic scenes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON configuration; omitted fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene bundle.
    GenScene {
        #[command(flatten)]
        common: Common,
    },
    /// Build the supervision forest of every view of a scene.
    BuildForest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Train per-pixel hyperbolic features against the scene's forests.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// View-wise and level-wise completeness of a trained run.
    EvalCompleteness {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scene: PathBuf,
        /// Directory written by `train`.
        #[arg(long)]
        run: PathBuf,
    },
    /// Budgeted group recall of generated candidates, per view.
    EvalRecall {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        run: PathBuf,
    },
    /// Dasgupta cost and timing of both tree builders on random graphs.
    BenchDasgupta {
        #[command(flatten)]
        common: Common,
    },
    /// Three-component PCA of one view's features.
    ExportPca {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scene: PathBuf,
        /// Trained run; raw descriptors are used when omitted.
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        view: usize,
    },
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn scene_name(b: &bundle::Bundle) -> &str {
    &b.manifest.name
}

fn load_matching_run(
    b: &bundle::Bundle,
    run: &Path,
) -> Result<hyptree_core::trainer::TrainableEmbedding> {
    let (emb, _) = pipeline::load_run(run)?;
    let want = b.scene.pixels_per_view() * b.scene.views.len();
    if emb.rays() != want {
        return Err(CliError::config(format!(
            "run has {} rays, scene needs {want}",
            emb.rays()
        )));
    }
    Ok(emb)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenScene { common } => {
            let mut cfg: SceneConfig = config::load(common.config.as_deref())?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let scene = gen_scene(&SyntheticSceneSpec::from(cfg))?;
            bundle::write(&common.out, &scene)?;
            log::info!(
                "scene with {} leaves written to {}",
                scene.n_leaves(),
                common.out.display()
            );
        }
        Command::BuildForest {
            common,
            scene,
            method,
        } => {
            let b = bundle::load(&scene)?;
            let mut cfg: TrainConfig = config::load(common.config.as_deref())?;
            if let Some(m) = method {
                cfg.method = m;
            }
            create_out(&common.out)?;
            for (k, vf) in b
                .scene
                .view_forests(&cfg.forest_config())?
                .iter()
                .enumerate()
            {
                forest::write(&common.out.join(format!("forest_view{k}.json")), &vf.forest)?;
                log::info!(
                    "view {k}: {} trees, {} leaves",
                    vf.forest.trees().len(),
                    vf.forest.n_leaves()
                );
            }
        }
        Command::Train {
            common,
            scene,
            method,
        } => {
            let b = bundle::load(&scene)?;
            let mut cfg: TrainConfig = config::load(common.config.as_deref())?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            if let Some(m) = method {
                cfg.method = m;
            }
            create_out(&common.out)?;
            let (emb, history) = pipeline::train_scene(&b.scene, &cfg)?;
            reports::write(
                &common.out.join("loss.csv"),
                &reports::loss_history(&history)?,
            )?;
            pipeline::save_run(&common.out, &emb, &cfg)?;
            if let Some(last) = history.last() {
                log::info!(
                    "final loss {:.6} after {} steps",
                    last.loss.total,
                    history.len()
                );
            }
        }
        Command::EvalCompleteness { common, scene, run } => {
            let b = bundle::load(&scene)?;
            let emb = load_matching_run(&b, &run)?;
            let c = pipeline::completeness(&b.scene, &emb)?;
            create_out(&common.out)?;
            reports::write(
                &common.out.join("completeness.csv"),
                &reports::completeness(scene_name(&b), &c)?,
            )?;
        }
        Command::EvalRecall { common, scene, run } => {
            let b = bundle::load(&scene)?;
            let emb = load_matching_run(&b, &run)?;
            let mut cfg: RecallConfig = config::load(common.config.as_deref())?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            create_out(&common.out)?;
            for view in 0..b.scene.views.len() {
                let (pool, report) = pipeline::recall(&b.scene, &emb, view, &cfg)?;
                log::info!("view {view}: {pool} candidates");
                reports::write(
                    &common.out.join(format!("recall_view{view}.csv")),
                    &reports::recall(&report)?,
                )?;
            }
        }
        Command::BenchDasgupta { common } => {
            let mut cfg: BenchConfig = config::load(common.config.as_deref())?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let r = bench::run(&cfg)?;
            create_out(&common.out)?;
            reports::write(
                &common.out.join("bench_costs.csv"),
                &reports::bench_costs(&r.records)?,
            )?;
            reports::write(
                &common.out.join("bench_gaps.csv"),
                &reports::bench_gaps(&r.gaps)?,
            )?;
            reports::write(
                &common.out.join("bench_timing.csv"),
                &reports::bench_timing(&r.timing)?,
            )?;
        }
        Command::ExportPca {
            common,
            scene,
            run,
            view,
        } => {
            let b = bundle::load(&scene)?;
            let emb = run
                .as_deref()
                .map(|r| load_matching_run(&b, r))
                .transpose()?;
            let (p, rows) = pipeline::view_pca(&b.scene, emb.as_ref(), view)?;
            create_out(&common.out)?;
            let width = b.scene.spec.width;
            reports::write(
                &common.out.join(format!("pca_view{view}.csv")),
                &reports::pca_projection(&p, &rows, width)?,
            )?;
            reports::write(
                &common.out.join(format!("pca_variance_view{view}.csv")),
                &reports::pca_variance(&p)?,
            )?;
        }
    }
    Ok(())
}
