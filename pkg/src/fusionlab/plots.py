"""Figure rendering for run reports: one PNG per report, written to a file."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .verification import MERMIN_WORDS, RunReport


def render_report(report: RunReport, path) -> None:
    """Render the figure matching the report's experiment and save it."""
    renderer = _RENDERERS.get(report.experiment, _render_distribution)
    fig = renderer(report)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def _render_distribution(report: RunReport):
    fig, ax = plt.subplots(figsize=(7, 4))
    items = sorted(report.probabilities.items())
    names = [k for k, _ in items]
    probs = [v for _, v in items]
    ax.bar(range(len(names)), probs, color="#3465a4")
    if report.counts:
        shots = report.settings.get("shots", 0)
        if shots:
            freq = [report.counts.get(k, 0) / shots for k in names]
            ax.plot(range(len(names)), freq, "k_", markersize=18,
                    label="sampled frequency")
            ax.legend()
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45 if len(names) > 4 else 0)
    ax.set_ylabel("probability")
    ax.set_title(report.experiment)
    ax.grid(axis="y", alpha=0.3)
    return fig


def _render_hom_scan(report: RunReport):
    fig, ax = plt.subplots(figsize=(7, 4))
    delays = [float(d) for d in report.settings["delays_fs"]]
    keys = [str(d) for d in report.settings["delays_fs"]]
    p_plus = [report.probabilities[k]["H+H"] for k in keys]
    p_minus = [report.probabilities[k]["H-H"] for k in keys]
    ax.plot(delays, p_plus, "o-", color="#3465a4", label="H+H")
    ax.plot(delays, p_minus, "s-", color="#cc0000", label="H-H")
    vis = report.statistics["zero_delay_visibility"]
    ax.set_xlabel("delay (fs)")
    ax.set_ylabel("coincidence probability")
    ax.set_title(f"interference scan (zero-delay visibility {vis:.3f})")
    ax.legend()
    ax.grid(alpha=0.3)
    return fig


def _render_mermin(report: RunReport):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    exact = report.statistics["exact_expectations"]
    vals = [exact[w] for w in MERMIN_WORDS]
    ax1.bar(range(4), vals, color="#3465a4")
    sampled = report.statistics.get("sampled_expectations")
    if sampled:
        ax1.plot(range(4), [sampled[w] for w in MERMIN_WORDS], "k_",
                 markersize=20, label="sampled")
        ax1.legend()
    ax1.set_xticks(range(4))
    ax1.set_xticklabels(MERMIN_WORDS)
    ax1.set_ylabel("expectation value")
    ax1.axhline(0, color="k", linewidth=0.8)
    ax1.grid(axis="y", alpha=0.3)
    abs_a = report.statistics["abs_a"]
    ax2.bar([0], [abs_a], color="#73d216", width=0.4)
    ax2.axhline(report.statistics["local_realism_bound"], color="#cc0000",
                linestyle="--", label="local realism (2)")
    ax2.axhline(report.statistics["hybrid_bound"], color="#f57900",
                linestyle="--", label="hybrid models (2√2)")
    ax2.set_xticks([0])
    ax2.set_xticklabels(["|⟨A⟩|"])
    ax2.set_ylim(0, 4.3)
    ax2.legend(loc="lower right", fontsize=8)
    ax2.set_title(f"verdict: {report.statistics['verdict']}")
    fig.tight_layout()
    return fig


def _render_correlations(report: RunReport):
    fig, ax = plt.subplots(figsize=(7, 4))
    angles = [float(a) for a in report.settings["swept_angles_deg"]]
    keys = [str(a) for a in report.settings["swept_angles_deg"]]
    curve = [report.probabilities[k]["tt"] for k in keys]
    ax.plot(angles, curve, "o-", color="#3465a4", label="exact")
    if report.counts:
        shots = report.settings["shots"]
        freq = [report.counts[k].get("tt", 0) / shots for k in keys]
        ax.plot(angles, freq, "k.", label="sampled")
        ax.legend()
    fixed = report.settings["fixed_angle_deg"]
    vis = report.statistics["visibility"]
    vis_text = f", visibility {vis:.3f}" if vis is not None else ""
    ax.set_xlabel("swept polarizer angle (deg)")
    ax.set_ylabel("coincidence probability")
    ax.set_title(f"fixed polarizer {fixed:g}°{vis_text}")
    ax.grid(alpha=0.3)
    return fig


def _render_resources(report: RunReport):
    fig, ax = plt.subplots(figsize=(7, 4))
    costs = sorted(int(k) for k in report.probabilities)
    freq = [report.probabilities[str(c)] for c in costs]
    ax.bar(costs, freq, color="#3465a4")
    mean = report.statistics["mean_cost"]
    ax.axvline(mean, color="#cc0000", linestyle="--",
               label=f"mean {mean:.2f} pairs")
    ax.set_xlabel("Bell pairs consumed")
    ax.set_ylabel("frequency")
    ax.set_title(f"cost to reach length {report.settings['target_length']} "
                 f"({report.settings['strategy']})")
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    return fig


def _render_graph(report: RunReport):
    fig, ax = plt.subplots(figsize=(7, 2.5))
    lines = report.statistics.get("adjacency", "").splitlines()
    vertices: list[str] = []
    edges = []
    for line in lines:
        if "--" in line:
            left, right = (tok.strip() for tok in line.split("--"))
            for tok in (left, right):
                if tok not in vertices:
                    vertices.append(tok)
            edges.append((left, right))
        elif line.strip() and line.strip() not in vertices:
            vertices.append(line.strip())
    xs = {v: i for i, v in enumerate(vertices)}
    for u, v in edges:
        ax.plot([xs[u], xs[v]], [0, 0], "-", color="#888888", zorder=1)
    ax.scatter([xs[v] for v in vertices], [0] * len(vertices), s=900,
               color="#3465a4", zorder=2)
    for v in vertices:
        ax.annotate(v, (xs[v], 0), ha="center", va="center", color="white",
                    fontsize=8, zorder=3)
    ax.set_ylim(-1, 1)
    ax.set_xlim(-0.8, len(vertices) - 0.2)
    ax.axis("off")
    ax.set_title("cluster graph")
    return fig


_RENDERERS = {
    "hom_scan": _render_hom_scan,
    "mermin": _render_mermin,
    "correlations": _render_correlations,
    "resources": _render_resources,
    "graph": _render_graph,
}
