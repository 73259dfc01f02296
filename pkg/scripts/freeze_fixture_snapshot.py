"""Record per-iteration counts of the bundled-fixture WKW run as the regression snapshot.

Run once after an intentional behaviour change, review the diff, then commit.
"""
import argparse
import json
from pathlib import Path

from covcrawl.pipeline import PipelineConfig, run_pipeline

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "fixture_wkw_snapshot.json"


def snapshot_counts(result) -> list[dict]:
    return [{"iter": r.iteration, "pages": r.pages_fetched, "entities": r.cumulative_entities,
             "companies": r.cumulative_companies, "relations": r.cumulative_relations}
            for r in result.reports]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = ap.parse_args()
    result = run_pipeline(PipelineConfig(early_stop=False))
    rows = snapshot_counts(result)
    args.out.write_text(json.dumps({"config": "PipelineConfig(early_stop=False)", "iterations": rows},
                                   indent=1) + "\n")
    for r in rows:
        print(r)


if __name__ == "__main__":
    main()
