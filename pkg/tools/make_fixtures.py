"""Regenerate fixtures/*.json from lwrjunction.cases.

    python3 tools/make_fixtures.py [OUTDIR]

tests/test_fixtures.py checks that the committed files match this output.
"""
from __future__ import annotations

import sys
from pathlib import Path

from lwrjunction import cases
from lwrjunction.ctm import riemann_network
from lwrjunction.io import JunctionCase, ScenarioFile, dumps

# CTM layout shared by the network fixtures: 32 cells of width 1/4 per link,
# dt = dx, long enough for every wave to leave the links
CELLS, DX, HORIZON = 32, 0.25, 24.0


def fixtures() -> dict[str, ScenarioFile]:
    out = {}
    for name, make in cases.RIEMANN_CASES.items():
        out[f"riemann_{name}"] = ScenarioFile("riemann", make())
    out["linear"] = ScenarioFile("riemann", cases.linear_congested())
    for name in ("merge", "diverge"):
        inp = cases.RIEMANN_CASES[name]()
        out[name] = ScenarioFile("network", riemann_network(inp, CELLS, DX, HORIZON, snapshot_every=8))
        out[f"{name}_stationary"] = ScenarioFile(
            "network", riemann_network(inp, CELLS, DX, HORIZON, init="stationary", snapshot_every=8))
    j, d, s = cases.order_counterexample()
    out["junction_order_counterexample"] = ScenarioFile("junction", JunctionCase(j, d, s))
    merge = cases.merge()
    out["junction_merge"] = ScenarioFile(
        "junction", JunctionCase(merge.junction, [0.6, 0.8], [1.0]))
    return out


def main(argv: list[str]) -> int:
    outdir = Path(argv[1]) if len(argv) > 1 else Path(__file__).resolve().parent.parent / "fixtures"
    outdir.mkdir(parents=True, exist_ok=True)
    for name, sc in fixtures().items():
        (outdir / f"{name}.json").write_text(dumps(sc), encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
