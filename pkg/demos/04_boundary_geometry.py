"""Emit plot data for the two-parameter system and, if matplotlib is
available, render the classic picture: feasible region, largest inscribed
covariance ellipse, and the optimized hyperbox.

The CSV comes from the same code path as the command line's
``flexkit boundary``; this script just drives it and draws.
"""

from pathlib import Path

from flexkit.cli import main

HERE = Path(__file__).resolve().parent
MODELS = HERE.parent / "models"
OUT = HERE / "out"
OUT.mkdir(exist_ok=True)

for beta in (-1, 0, 1):
    csv_path = OUT / f"boundary_beta{beta}.csv"
    main(["boundary", str(MODELS / f"simple_beta{beta}.json"),
          "--resolution", "240", "--out", str(csv_path)])

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; CSV files are in", OUT)
    raise SystemExit(0)


def read_blocks(path):
    blocks, current = {}, None
    for line in path.read_text().splitlines()[1:]:
        if line.startswith("# block: "):
            current = line.split(": ")[1]
            blocks[current] = []
        elif line:
            blocks[current].append([float(v) for v in line.split(",")])
    return {k: list(zip(*v)) for k, v in blocks.items()}


fig, axes = plt.subplots(1, 3, figsize=(13, 4.2), sharex=True, sharey=True)
for ax, beta in zip(axes, (-1, 0, 1)):
    blocks = read_blocks(OUT / f"boundary_beta{beta}.csv")
    ax.plot(*blocks["feasible_boundary"], "k-", lw=1.5, label="feasible boundary")
    ax.plot(*blocks["ellipse"], "b-", lw=1.2, label="optimal ellipsoid")
    bx, by = blocks["hyperbox_corners"]
    ax.plot(list(bx) + [bx[0]], list(by) + [by[0]], "r--", lw=1.0, label="optimal hyperbox")
    ax.plot([4.0], [5.0], "k+", ms=10)
    ax.set_title(f"covariance beta = {beta}")
    ax.set_xlabel("theta1")
axes[0].set_ylabel("theta2")
axes[0].legend(loc="upper right", fontsize=8)
fig.tight_layout()
fig.savefig(OUT / "boundary_geometry.png", dpi=150)
print("wrote", OUT / "boundary_geometry.png")
