"""Figure renderers, one per documented output kind.

Output is deterministic given the inputs: the Agg backend, a pinned SVG hash
salt (element ids), and no creation-date metadata make vector output
byte-stable run to run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .schema import KINDS, SchemaError, floats, read_sidecar, read_table

plt.rcParams["svg.hashsalt"] = "heavyspin-plotkit"


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    csv_path: str
    out_path: str
    json_path: str | None = None
    style: dict = field(default_factory=dict)


def _save(fig, out_path: str):
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    kwargs = {}
    if out.suffix.lower() == ".svg":
        kwargs["metadata"] = {"Date": None}
    fig.savefig(out, **kwargs)
    plt.close(fig)


def _summary(spec: FigureSpec) -> dict:
    if spec.json_path is None:
        return {}
    return read_sidecar(spec.json_path).get("summary", {})


def _fig(spec, default=(6.4, 4.2)):
    size = spec.style.get("figsize", default)
    return plt.subplots(figsize=size, dpi=spec.style.get("dpi", 100))


def render_thresholds(spec: FigureSpec):
    cols = read_table(spec.csv_path, "thresholds")
    p = floats(cols["p"])
    fig, ax = _fig(spec)
    ax.semilogy(p, floats(cols["h_star"]), "o-", label="$H_p^*$")
    ax.semilogy(p, floats(cols["h_min"]), "s--", color="gray",
                label=r"lower bound $p^{p-1}/(2(p-2)^{(p-2)/2})$")
    ax.set_xlabel("interaction order $p$")
    ax.set_ylabel("coupling threshold")
    ax.set_title("Phase boundary per order")
    ax.legend()
    _save(fig, spec.out_path)


def render_fp_curves(spec: FigureSpec):
    cols = read_table(spec.csv_path, "fp-curves")
    p = np.array(floats(cols["p"]), dtype=int)
    x = np.array(floats(cols["H_over_hstar"]))
    f = np.array(floats(cols["f"]))
    fig, ax = _fig(spec)
    for order in sorted(set(p.tolist())):
        m = p == order
        ax.plot(x[m], f[m], label=f"$p={order}$")
    ax.set_xlabel("$H / H_p^*$")
    ax.set_ylabel("$f_p(H)$")
    ax.set_title("Free-energy density above threshold")
    ax.legend()
    _save(fig, spec.out_path)


def render_series_profile(spec: FigureSpec):
    cols = read_table(spec.csv_path, "series-profile")
    ell = np.array(floats(cols["ell"]))
    lt = np.array(floats(cols["log_term"]))
    s = _summary(spec)
    fig, ax = _fig(spec)
    ax.plot(ell, lt, lw=0.9)
    if s.get("argmax_ell") is not None:
        ax.axvline(s["argmax_ell"], color="k", lw=0.8, ls=":",
                   label=f"argmax $\\ell$ = {s['argmax_ell']}")
    lam = s.get("lambda_pred")
    if lam is not None and len(ell) > 1:
        eps = s.get("eps", 0.1)
        n_val = s.get("n")
        if n_val is None and spec.json_path is not None:
            n_val = read_sidecar(spec.json_path).get("config", {}).get("n")
        if n_val:
            center = lam * n_val
            ax.axvspan(center * (1 - eps), center * (1 + eps), color="orange",
                       alpha=0.25, label=f"window $\\lambda n (1\\pm{eps})$")
    ax.set_xlabel("$\\ell$")
    ax.set_ylabel("log term")
    ax.set_title("Partition-series term profile")
    ax.legend(loc="lower right")
    _save(fig, spec.out_path)


def render_overlap(spec: FigureSpec):
    cols = read_table(spec.csv_path, "overlap")
    r = np.array(floats(cols["overlap"]))
    rr = np.array(floats(cols["restricted_overlap"]))
    s = _summary(spec)
    fig, ax = _fig(spec)
    bins = spec.style.get("bins", 80)
    ax.hist(r, bins=bins, density=True, alpha=0.6, label="$R_{1,2}$")
    ax.hist(rr, bins=bins, density=True, alpha=0.6, label="restricted $R_{1,2,p}$")
    for i, v in enumerate(s.get("overlap_support", []) or []):
        ax.axvline(v, color="k", ls="--", lw=1.0,
                   label="predicted support" if i == 0 else None)
    ax.set_xlabel("overlap")
    ax.set_ylabel("density")
    ax.set_title("Replica overlaps vs predicted support")
    ax.legend()
    _save(fig, spec.out_path)


def render_occupancy(spec: FigureSpec):
    cols = read_table(spec.csv_path, "occupancy")
    pats = cols["pattern"]
    freq = floats(cols["frequency"])
    sign = [int(float(x)) for x in cols["product_sign"]]
    s = _summary(spec)
    fig, ax = _fig(spec)
    colors = ["tab:blue" if x > 0 else "tab:red" for x in sign]
    ax.bar(range(len(pats)), freq, color=colors)
    ax.set_xticks(range(len(pats)))
    ax.set_xticklabels(pats, rotation=45 if len(pats) > 8 else 0)
    count = s.get("component_count_predicted")
    if count is None:
        count = sum(1 for x in sign if x > 0) or len(pats)
    ax.axhline(1.0 / count, color="k", ls="--", lw=1.0,
               label=f"$2^{{1-p}}$ = 1/{count}")
    ax.set_ylabel("occupancy frequency")
    ax.set_title("Component occupancy (blue: positive product)")
    ax.legend()
    _save(fig, spec.out_path)


def render_ultrametric(spec: FigureSpec):
    cols = read_table(spec.csv_path, "ultrametric")
    m = np.array(floats(cols["margin"]))
    v = np.array(floats(cols["violation_frequency"]))
    s = _summary(spec)
    fig, ax = _fig(spec)
    ax.plot(m, v, "o-")
    if s.get("floor_quarter_power") is not None:
        ax.axhline(s["floor_quarter_power"], color="k", ls="--", lw=1.0,
                   label="lower-bound floor $\\frac{1}{2}(2^{1-p})^2$")
    if s.get("margin") is not None:
        ax.axvline(s["margin"], color="gray", ls=":", lw=1.0,
                   label="headline margin $t/2$")
    ax.set_xlabel("margin")
    ax.set_ylabel("violation frequency")
    ax.set_title("Ultrametricity violations $R_{1,3} < \\min(R_{1,2}, R_{2,3}) - m$")
    ax.legend()
    _save(fig, spec.out_path)


def render_frechet_qq(spec: FigureSpec):
    cols = read_table(spec.csv_path, "frechet-qq")
    x = np.sort(np.array(floats(cols["max_rescaled"])))
    s = _summary(spec)
    alpha = s.get("alpha")
    if alpha is None:
        alpha = spec.style.get("alpha")
    if alpha is None:
        raise SchemaError("frechet-qq needs the tail exponent (results.json "
                          "summary.alpha or style.alpha)")
    n = len(x)
    q = (np.arange(1, n + 1) - 0.5) / n
    theo = (-np.log(q)) ** (-1.0 / alpha)
    fig, ax = _fig(spec)
    ax.loglog(theo, x, ".", ms=3)
    lo, hi = min(theo.min(), x.min()), max(theo.max(), x.max())
    ax.loglog([lo, hi], [lo, hi], "k--", lw=1.0)
    ax.set_xlabel(f"Frechet($\\alpha$={alpha}) quantiles")
    ax.set_ylabel("rescaled maxima $|H_{1,p}|$")
    ax.set_title("QQ plot of rescaled maxima")
    _save(fig, spec.out_path)


def render_gse(spec: FigureSpec):
    cols = read_table(spec.csv_path, "gse")
    ana = np.array(floats(cols["gse_analytic"]))
    num = np.array(floats(cols["gse_numeric"]))
    p_dom = [x for x in cols["p_dom"]]
    fig, ax = _fig(spec)
    for order in sorted(set(p_dom)):
        m = np.array([x == order for x in p_dom])
        ax.plot(ana[m], num[m], "o", label=f"$p={order}$")
    lo = min(ana.min(), num.min()) * 0.95
    hi = max(ana.max(), num.max()) * 1.05
    ax.plot([lo, hi], [lo, hi], "k--", lw=1.0)
    ax.set_xlabel("analytic $\\max |\\alpha(p) H| p^{-p/2}$")
    ax.set_ylabel("optimizer (1/n) GSE")
    ax.set_title("Ground-state energy: analytic vs numeric")
    ax.legend()
    _save(fig, spec.out_path)


RENDERERS = {
    "thresholds": render_thresholds,
    "fp-curves": render_fp_curves,
    "series-profile": render_series_profile,
    "overlap": render_overlap,
    "occupancy": render_occupancy,
    "ultrametric": render_ultrametric,
    "frechet-qq": render_frechet_qq,
    "gse": render_gse,
}

assert set(RENDERERS) == set(KINDS)


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path."""
    if spec.kind not in RENDERERS:
        raise SchemaError(f"unknown figure kind {spec.kind!r}; know {sorted(RENDERERS)}")
    RENDERERS[spec.kind](spec)
    return spec.out_path
