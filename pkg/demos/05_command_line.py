"""
Reproducible runs from the command line
=======================================

The ``bcshaping`` command wraps the library: ``region`` writes frontier CSVs,
``gain`` writes per-sample gains with a summary line and ``mi`` prints
informations. Named presets hold the channel settings of the reference
tables; a YAML file or flags override any field. The calls below are the
same as, for example::

    bcshaping region --preset table2-m4-row1 --theta-points 11 --out demo_output/cli
"""

from pathlib import Path

from bcshaping.cli import PRESETS, main

print("presets:", ", ".join(sorted(PRESETS)[:6]), "...")

out = Path("demo_output/cli")
out.mkdir(parents=True, exist_ok=True)
cfg = out / "fast.yaml"
cfg.write_text("optimizer:\n  restarts: 2\nmi:\n  constellation: [-1.0, 1.0]\n  snr_db: 3.0\n")

main(["region", "--preset", "table2-m4-row1", "--config", str(cfg), "--theta-points", "11", "--out", str(out)])
main(["gain", "--preset", "table3-m4-row1", "--config", str(cfg), "--theta-points", "11",
      "--strategy", "sm-uniform", "--strategy", "ts", "--out", str(out)])
main(["mi", "--config", str(cfg), "--mc"])
