"""Figure and CSV rendering for result envelopes.

Keeps all plotting out of the computational path: commands emit JSON
envelopes, and this module turns an envelope into matplotlib figures plus a
delimited projection suitable for external tools.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .config import ConfigError

GATE_NAMES = {0: "random", 1: "U1 (I)", 2: "U2 (H)", 3: "U3 (Rx90)"}


def _mask_label(mask: int, n: int) -> str:
    qubits = [str(i + 1) for i in range(n) if mask >> i & 1]
    return "{" + ",".join(qubits) + "}" if qubits else "{}"


# ----------------------------------------------------------------------
# CSV projections
# ----------------------------------------------------------------------


def _rows_exact(payload: dict):
    header = ["qubits", "influence", "e1", "e2", "e3", "il", "iu", "il_three", "iu_three"]
    rows = []
    for b in payload["subsets"]:
        rows.append(
            ["|".join(map(str, b["qubits"]))] + [b["influence"]] + list(b["samplers"])
            + [b["il"], b["iu"], b["il_three"], b["iu_three"]]
        )
    return header, rows


def _rows_sample(payload: dict):
    dists = payload["distributions"]
    if dists[0]["mode"] == "marginal":
        header = ["gate", "qubit", "flips", "total", "rate"]
        rows = []
        for d in dists:
            for i, f in enumerate(d["flips"]):
                rows.append([d["gate"], i + 1, f, d["total"], f / d["total"]])
        return header, rows
    header = ["gate", "mask", "qubits", "count", "fraction"]
    rows = []
    for d in dists:
        for mask, count in d["counts"]:
            rows.append([d["gate"], mask, _mask_label(mask, d["n"]), count, count / d["total"]])
    return header, rows


def _rows_hiqi(payload: dict):
    per_qubit = payload["per_qubit"]
    three = "iu_three" in per_qubit[0]
    header = ["qubit", "e1", "se1", "e2", "se2"]
    if three:
        header += ["e3", "se3"]
    header += ["il", "iu", "iu_stderr", "in_t"]
    if three:
        header += ["il_three", "iu_three", "iu_three_stderr"]
    t = set(payload["t"])
    rows = []
    for b in per_qubit:
        q = b["qubits"][0]
        row = [q]
        for e, se in zip(b["estimates"], b["stderrs"]):
            row += [e, se]
        row += [b["il"], b["iu"], b["iu_stderr"], int(q in t)]
        if three:
            row += [b["il_three"], b["iu_three"], b["iu_three_stderr"]]
        rows.append(row)
    return header, rows


def _rows_junta_test(payload: dict):
    header = ["verdict", "k", "t_size", "t", "epsilon", "epsilon_stderr", "iu_tc"]
    h = payload["hiqi"]
    return header, [[
        payload["verdict"], payload["k"], payload["t_size"], "|".join(map(str, h["t"])),
        payload["epsilon"], payload["epsilon_stderr"], h["iu_tc"],
    ]]


def _rows_junta_learn(payload: dict):
    header = ["t", "epsilon", "epsilon_r", "total_bound", "fidelity", "iterations"]
    rec = payload.get("reconstruction")
    return header, [[
        "|".join(map(str, payload["t"])), payload["epsilon"], payload["epsilon_r"],
        payload["total_bound"],
        None if rec is None else rec["fidelity"],
        None if rec is None else rec["iterations"],
    ]]


def _rows_sweep(payload: dict):
    sampled = "sampled" in payload["points"][0] if payload["points"] else False
    header = ["kind", "theta", "e1", "e2", "e3", "influence", "il", "iu", "il_three", "iu_three"]
    if sampled:
        header += ["s_e1", "s_e2", "s_e3", "s_il", "s_iu"]
    rows = []
    for p in payload["points"]:
        ex = p["exact"]
        row = [p["kind"], p["theta"], *ex["samplers"], ex["influence"],
               ex["il"], ex["iu"], ex["il_three"], ex["iu_three"]]
        if sampled:
            sp = p["sampled"]
            est = list(sp["estimates"]) + [None] * (3 - len(sp["estimates"]))
            row += est + [sp["il"], sp["iu"]]
        rows.append(row)
    return header, rows


_CSV_BUILDERS = {
    "exact": _rows_exact,
    "sample": _rows_sample,
    "hiqi": _rows_hiqi,
    "junta-test": _rows_junta_test,
    "junta-learn": _rows_junta_learn,
    "sweep": _rows_sweep,
}


def write_csv(envelope: dict, path: Path) -> Path:
    command = envelope.get("command")
    if command not in _CSV_BUILDERS:
        raise ConfigError(f"no CSV projection for command {command!r}")
    header, rows = _CSV_BUILDERS[command](envelope["payload"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


# ----------------------------------------------------------------------
# Figures
# ----------------------------------------------------------------------


def _fig_exact(payload: dict, out_dir: Path) -> list[Path]:
    blocks = payload["subsets"]
    labels = ["{" + ",".join(map(str, b["qubits"])) + "}" for b in blocks]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.7 * len(blocks)), 3.2))
    ax.bar(labels, [b["influence"] for b in blocks], color="#4878cf")
    ax.set_ylabel("influence")
    ax.set_xlabel("qubit set")
    ax.set_ylim(0, 1.05)
    fig.tight_layout()
    path = out_dir / "exact_influence.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def _fig_sample(payload: dict, out_dir: Path) -> list[Path]:
    paths = []
    for d in payload["distributions"]:
        fig, ax = plt.subplots(figsize=(6.0, 3.2))
        if d["mode"] == "marginal":
            rates = [f / d["total"] for f in d["flips"]]
            ax.bar(range(1, d["n"] + 1), rates, color="#4878cf")
            ax.set_xlabel("qubit")
            ax.set_ylabel("flip rate")
        else:
            items = sorted(d["counts"], key=lambda mc: -mc[1])[:16]
            labels = [_mask_label(m, d["n"]) for m, _ in items]
            ax.bar(labels, [c / d["total"] for _, c in items], color="#4878cf")
            ax.set_ylabel("probability")
            ax.tick_params(axis="x", rotation=60)
        ax.set_title(f"flip sets under {GATE_NAMES.get(d['gate'], d['gate'])}")
        fig.tight_layout()
        path = out_dir / f"sample_gate{d['gate']}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths


def _fig_hiqi(payload: dict, out_dir: Path, name: str = "hiqi") -> list[Path]:
    per_qubit = payload["per_qubit"]
    t = set(payload["t"])
    three = "iu_three" in per_qubit[0]
    key, err_key = ("iu_three", "iu_three_stderr") if three else ("iu", "iu_stderr")
    qubits = [b["qubits"][0] for b in per_qubit]
    values = [b[key] for b in per_qubit]
    errors = [b[err_key] for b in per_qubit]
    colors = ["#d65f5f" if q in t else "#4878cf" for q in qubits]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.35 * len(qubits) + 2), 3.2))
    ax.bar(qubits, values, yerr=errors, color=colors, capsize=2)
    ax.axhline(payload["delta"], color="k", linestyle="--", linewidth=1, label=f"threshold {payload['delta']}")
    ax.set_yscale("log")
    floor = max(min((v for v in values if v > 0), default=1e-4) / 5, 1e-6)
    ax.set_ylim(bottom=floor)
    ax.set_xlabel("qubit")
    ax.set_ylabel("IU" + (" (three-gate)" if three else ""))
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    path = out_dir / f"{name}_per_qubit.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def _fig_junta_test(payload: dict, out_dir: Path) -> list[Path]:
    paths = _fig_hiqi(payload["hiqi"], out_dir, name="junta_test")
    return paths


def _fig_junta_learn(payload: dict, out_dir: Path) -> list[Path]:
    paths = _fig_hiqi(payload["hiqi"], out_dir, name="junta_learn")
    rec = payload.get("reconstruction")
    if rec is None:
        return paths
    for part in ("real", "imag"):
        mat = rec[f"choi_{part}"]
        fig, ax = plt.subplots(figsize=(4.2, 3.6))
        im = ax.imshow(mat, cmap="RdBu_r", vmin=-1, vmax=1)
        ax.set_title(f"reconstructed Choi ({part})")
        fig.colorbar(im, ax=ax, shrink=0.85)
        fig.tight_layout()
        path = out_dir / f"junta_learn_choi_{part}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths


def _fig_sweep(payload: dict, out_dir: Path) -> list[Path]:
    by_kind: dict[str, list[dict]] = {}
    for p in payload["points"]:
        by_kind.setdefault(p["kind"], []).append(p)
    paths = []
    for kind, pts in by_kind.items():
        pts = sorted(pts, key=lambda p: p["theta"])
        thetas = [p["theta"] for p in pts]
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for l in range(3):
            ax.plot(thetas, [p["exact"]["samplers"][l] for p in pts], label=f"E{l + 1}")
        ax.plot(thetas, [p["exact"]["influence"] for p in pts], "k--", label="influence")
        if "sampled" in pts[0]:
            for l in range(len(pts[0]["sampled"]["estimates"])):
                ax.plot(thetas, [p["sampled"]["estimates"][l] for p in pts], ".", markersize=4)
        ax.set_xlabel("theta (rad)")
        ax.set_ylabel("sampler expectation")
        ax.set_title(kind)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out_dir / f"sweep_{kind}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths


_FIG_BUILDERS = {
    "exact": _fig_exact,
    "sample": _fig_sample,
    "hiqi": lambda payload, out_dir: _fig_hiqi(payload, out_dir),
    "junta-test": _fig_junta_test,
    "junta-learn": _fig_junta_learn,
    "sweep": _fig_sweep,
}


def render_report(envelope: dict, out_dir: Path) -> list[Path]:
    """Write figures and the CSV projection for an envelope; returns the paths."""
    command = envelope.get("command")
    if command not in _FIG_BUILDERS:
        raise ConfigError(f"cannot render a report for command {command!r}")
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = _FIG_BUILDERS[command](envelope["payload"], out_dir)
    paths.append(write_csv(envelope, out_dir / f"{command.replace('-', '_')}.csv"))
    return paths
