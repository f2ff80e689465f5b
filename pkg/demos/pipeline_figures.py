"""End-to-end pipeline: configs -> CSV artifacts -> rendered figures.

Three packaged experiment configs are evaluated through the runner into
a scratch directory, producing one CSV table plus a manifest apiece.
If the plotting frontend has been built (frontend/dist), its `all`
command is invoked on the scratch directory and the per-figure summary
lines are echoed; otherwise the demo stops after the CSV stage with a
note on how to build it.
"""

import json
import shutil
import subprocess
import tempfile
from pathlib import Path

from gaplab.runner import fixtures_root, load_config, run_experiment

ROOT = Path(__file__).resolve().parents[1]
scratch = Path(tempfile.mkdtemp(prefix="gaplab_demo_"))

print(f"scratch directory: {scratch}\n")
for name in ("lps_spectrum", "escape_rotation", "expand_interval"):
    cfg = load_config(fixtures_root() / name / "config.toml")
    manifest = run_experiment(cfg, str(scratch / name))
    files = ", ".join(f"{o['file']} ({o['rows']} rows)"
                      for o in manifest["outputs"])
    print(f"{name:16s} kind={manifest['experiment']:9s} "
          f"{manifest['wall_time_s']:6.2f} s   {files}")

cli = ROOT / "frontend" / "dist" / "cli.js"
node = shutil.which("node")
if not cli.exists() or node is None:
    print("\nplotting frontend not built; run `npm install && npm run build`")
    print("in frontend/ and re-run this demo to render the figures.")
else:
    print("\nrendering figures with the plots CLI:")
    proc = subprocess.run(
        [node, str(cli), "all", str(scratch), "--out", str(scratch / "figures")],
        capture_output=True, text=True)
    for line in proc.stdout.splitlines():
        if not line.startswith("{"):
            continue
        rec = json.loads(line)
        extras = {k: v for k, v in rec.items()
                  if k not in ("figure", "kind", "csv")
                  and isinstance(v, (int, float))}
        tail = "  ".join(f"{k}={v:g}" for k, v in sorted(extras.items()))
        print(f"  {rec['figure']:34s} {tail}")
    if proc.returncode != 0:
        print(f"  CLI exited with {proc.returncode}: {proc.stderr.strip()}")
    else:
        svgs = sorted(p.name for p in (scratch / "figures").glob("*.svg"))
        print(f"\n{len(svgs)} SVG figure(s) under {scratch / 'figures'}")
