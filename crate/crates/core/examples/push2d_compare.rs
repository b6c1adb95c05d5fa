//! HER against HER with cluster sampling on PointPush2D, written to disk.
//!
//! ```text
//! cargo run --release --example push2d_compare -- 50 1,2,3,4,5 out/push2d
//! ```
//! Arguments: epochs (default 10), seeds (default 1,2), output directory
//! (default `push2d_compare`). The full 50-epoch, 5-seed comparison takes
//! roughly twenty minutes on one core.

use std::path::PathBuf;

use hercs::harness::{run_all, write_outputs, ExperimentConfig};

fn main() -> hercs::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = ExperimentConfig::default();
    cfg.apply_text(include_str!("../../../configs/push2d.conf"))?;
    if let Some(epochs) = args.next() {
        cfg.set("epochs", &epochs)?;
    } else {
        cfg.epochs = 10;
    }
    cfg.set("seeds", &args.next().unwrap_or_else(|| "1,2".into()))?;
    let out = PathBuf::from(args.next().unwrap_or_else(|| "push2d_compare".into()));

    let summary = run_all(&cfg)?;
    let files = write_outputs(&cfg, &summary, &out)?;
    for s in &summary.algos {
        let curve: Vec<String> = s.epochs.iter().map(|e| format!("{:.2}", e.mean)).collect();
        println!(
            "{:<7} auc {:.3}  final {:.2}  [{}]",
            s.algo,
            s.auc,
            s.final_mean(),
            curve.join(" ")
        );
    }
    println!("{} files under {}", files.len(), out.display());
    Ok(())
}
