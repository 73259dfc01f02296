"""Run the full pipeline on the bundled fixture and write every report to a directory."""
import argparse
from pathlib import Path

from covcrawl.pipeline import PipelineConfig, emit_reports, run_pipeline


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("fixture-out"))
    ap.add_argument("--early-stop", action="store_true")
    args = ap.parse_args()
    cfg = PipelineConfig(early_stop=args.early_stop)
    result = run_pipeline(cfg, output_dir=args.out)
    paths = emit_reports(args.out, runs=[result], config=cfg)
    for r in result.reports:
        c_hat = f"{r.estimate.c_hat:.3f}" if r.estimate else "n/a"
        print(f"iter {r.iteration}: pages {r.pages_fetched} entities {r.cumulative_entities} "
              f"C_hat {c_hat} stop {r.stop}")
    print("\n".join(str(p) for p in paths.values()))


if __name__ == "__main__":
    main()
