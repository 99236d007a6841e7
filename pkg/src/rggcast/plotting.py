"""Figure rendering for report outputs.

Figures are saved next to the delimited data they visualize. PNG metadata
that varies run-to-run (creation date, software version) is stripped so the
image bytes are as deterministic as the data.
"""

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_SAVE_OPTS = dict(dpi=120, metadata={"Software": None, "Creation Time": None})


def save_theta_figure(table, path) -> None:
    """Percolation-probability curve with a standard-error band."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(table.lambda_grid, table.theta_hat, lw=1.5)
    ax.fill_between(
        table.lambda_grid,
        table.theta_hat - 2 * table.std_err,
        table.theta_hat + 2 * table.std_err,
        alpha=0.3,
        lw=0,
    )
    ax.set_xlabel("intensity")
    ax.set_ylabel("largest-component fraction")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def save_sweep_figures(rows, stem) -> list:
    """Minimum forwarding probability and transmission cost vs packet count.

    Returns the paths written (``<stem>_pmin.png`` and ``<stem>_tau.png``).
    Rows with NaN (unreachable target) are skipped.
    """
    ok = [r for r in rows if not math.isnan(r.p_min)]
    n = [r.n for r in ok]
    paths = []

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(n, [r.p_min for r in ok], marker="o", ms=3)
    ax.set_xlabel("coded packets n")
    ax.set_ylabel("minimum forwarding probability")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    p = f"{stem}_pmin.png"
    fig.savefig(p, **_SAVE_OPTS)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(n, [r.tau_per_node for r in ok], marker="o", ms=3)
    ax.set_xlabel("coded packets n")
    ax.set_ylabel("expected transmissions per point")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    p = f"{stem}_tau.png"
    fig.savefig(p, **_SAVE_OPTS)
    plt.close(fig)
    paths.append(p)
    return paths
