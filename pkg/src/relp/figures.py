"""Figures rendered from emitted data files.

Each renderer takes the path of a file a CLI command wrote and draws from
its parsed content alone, so the figures stay reproducible from the
artifacts. Rendering uses the Agg backend; nothing here opens a window.
"""

from __future__ import annotations

import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _load_table(path: str) -> dict[str, np.ndarray]:
    """Columns of a CSV or JSON table emitted by the CLI, as float arrays."""
    if path.endswith(".json"):
        with open(path, encoding="ascii") as f:
            payload = json.load(f)
        cols = payload["columns"]
        rows = np.array([[float(v) for v in row] for row in payload["rows"]])
    else:
        with open(path, encoding="ascii") as f:
            lines = [ln for ln in f if not ln.startswith("#")]
        cols = lines[0].strip().split(",")
        rows = np.array([[float(v) for v in ln.strip().split(",")]
                         for ln in lines[1:]])
    if rows.size == 0:
        rows = rows.reshape(0, len(cols))
    return {name: rows[:, i] for i, name in enumerate(cols)}


def _save(fig, path: str) -> None:
    fig.savefig(path, dpi=150)
    plt.close(fig)


def arch_figure(data_path: str, out_path: str) -> None:
    t = _load_table(data_path)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6),
                                   constrained_layout=True)
    d = np.sort(t["duration"])
    ax1.loglog(d, 1.0 - np.arange(d.size) / d.size, lw=1.2)
    ax1.set_xlabel("duration t")
    ax1.set_ylabel("P(duration > t)")
    ax1.set_title("arch duration tail")
    ax2.hist(t["log_step"], bins=60, density=True, color="tab:gray")
    ax2.set_xlabel("log step s")
    ax2.set_title("log-velocity step")
    _save(fig, out_path)


def skeleton_figure(data_path: str, out_path: str) -> None:
    t = _load_table(data_path)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6),
                                   constrained_layout=True)
    finite = np.isfinite(t["zeta"]) & (t["zeta"] > 0)
    ax1.semilogy(t["n"][finite], t["zeta"][finite], lw=1.0)
    ax1.set_xlabel("bounce index n")
    ax1.set_ylabel("bounce time")
    ax1.set_title("accumulation profile")
    ax2.plot(t["n"], t["s"], lw=1.0)
    ax2.set_xlabel("bounce index n")
    ax2.set_ylabel("log speed S_n")
    ax2.set_title("log-velocity walk")
    _save(fig, out_path)


def sde_figure(data_path: str, out_path: str) -> None:
    t = _load_table(data_path)
    fig, ax = plt.subplots(figsize=(6.5, 3.6), constrained_layout=True)
    ax.semilogy(t["time"], np.abs(t["v_in"]), ".", ms=3)
    ax.set_xlabel("bounce time")
    ax.set_ylabel("|incoming velocity|")
    ax.set_title("Euler path bounce speeds")
    _save(fig, out_path)


def renewal_figure(data_path: str, out_path: str) -> None:
    if data_path.endswith(".json"):
        with open(data_path, encoding="ascii") as f:
            payload = json.load(f)
        if "ks_stat" in payload:
            fig, ax = plt.subplots(figsize=(4.2, 3.4), constrained_layout=True)
            ax.bar(["KS", "crit 99%"],
                   [payload["ks_stat"], payload["ks_crit_99"]],
                   color=["tab:blue", "tab:red"])
            ax.set_title("ladder duality check")
            _save(fig, out_path)
            return
    t = _load_table(data_path)
    fig, ax = plt.subplots(figsize=(6.0, 3.8), constrained_layout=True)
    if "h" in t:
        ax.plot(t["x"], t["h"], lw=1.4)
        ax.fill_between(t["x"], t["h"] - 2 * t["se"], t["h"] + 2 * t["se"],
                        alpha=0.3)
        ax.set_xlabel("x")
        ax.set_ylabel("h(x)")
        ax.set_title("renewal function (band: 2 se)")
    else:
        ax.hist(t["overshoot"], bins=60, density=True, color="tab:gray")
        ax.set_xlabel("overshoot")
        ax.set_title("stationary overshoot law")
    _save(fig, out_path)


def entrance_figure(data_path: str, out_path: str) -> None:
    t = _load_table(data_path)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6),
                                   constrained_layout=True)
    ax1.hist(t["y"], bins=60, density=True, color="tab:gray")
    ax1.set_xlabel("entrance height y")
    ax1.set_title("entrance law")
    pos = t["tau_v"][t["tau_v"] > 0]
    if pos.size:
        ax2.hist(np.log10(pos), bins=60, density=True, color="tab:gray")
    ax2.set_xlabel("log10 age below the threshold")
    ax2.set_title("truncated age")
    _save(fig, out_path)


def report_figure(data_path: str, out_path: str) -> None:
    with open(data_path, encoding="ascii") as f:
        payload = json.load(f)
    checks = payload["checks"]
    names = [c["check"] for c in checks]
    # margin of each check: statistic over threshold, clipped for display
    ratios = [min(c["statistic"] / c["threshold"], 2.0)
              if c["threshold"] > 0 else (0.0 if c["pass"] else 2.0)
              for c in checks]
    colors = ["tab:green" if c["pass"] else "tab:red" for c in checks]
    fig, ax = plt.subplots(figsize=(7, 0.35 * len(checks) + 1.2),
                           constrained_layout=True)
    ax.barh(np.arange(len(checks)), ratios, color=colors)
    ax.axvline(1.0, color="k", lw=1, ls="--")
    ax.set_yticks(np.arange(len(checks)), names)
    ax.invert_yaxis()
    ax.set_xlabel("statistic / threshold")
    ax.set_title(f"checks at seed {payload['seed']} ({payload['profile']})")
    _save(fig, out_path)


_RENDERERS = {
    "arch": arch_figure,
    "skeleton": skeleton_figure,
    "sde": sde_figure,
    "renewal": renewal_figure,
    "entrance": entrance_figure,
    "verify": report_figure,
}


def render(command: str, data_path: str) -> str:
    """Render the figure for a command's emitted file; returns the PNG path."""
    out = os.path.splitext(data_path)[0] + ".png"
    _RENDERERS[command](data_path, out)
    return out
