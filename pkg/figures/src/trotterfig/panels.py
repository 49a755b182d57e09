"""Panel definitions: what each figure needs and how it is drawn.

Every panel has a prepare step that pulls arrays out of the loaded runs and
raises a DataError before any file is touched, and a draw step that only
takes prepared arrays.  Tests assert on prepare outputs directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataError, RunDir

TIME_LABEL = "$J t$"
TAU_LABEL = r"Trotter step $\tau$"


def _by_experiment(runs):
    out: dict[str, list[RunDir]] = {}
    for run in runs:
        out.setdefault(run.experiment, []).append(run)
    return out


def _expect(runs, wanted: dict):
    """Validate the experiment mix; wanted maps experiment -> (min, max)."""
    groups = _by_experiment(runs)
    extra = set(groups) - set(wanted)
    if extra:
        raise DataError(f"unexpected manifest kinds: {', '.join(sorted(extra))}")
    for exp, (lo, hi) in wanted.items():
        n = len(groups.get(exp, []))
        if not lo <= n <= hi:
            raise DataError(f"need {lo}..{hi} {exp} manifests, got {n}")
    return groups


def _coefficients(run: RunDir) -> dict:
    res = run.ok_jobs()[0]["results"]
    missing = [k for k in ("q_e", "m_signed", "m_diagonal_ensemble") if k not in res]
    if missing:
        raise DataError(f"run {run.path}: coefficient results lack {', '.join(missing)}")
    return res


def _tau_label(tau: float) -> str:
    return rf"$\tau={tau:g}$"


# -- Fig 1: magnetization dynamics and error collapse --------------------------


def prepare_fig1b(runs):
    run = _expect(runs, {"collapse": (1, 1)})["collapse"][0]
    run.require_labels(["m_trotter", "m_exact"])
    jobs = run.ok_jobs()
    curves = [(j["params"]["tau"], *run.series(j, "m_trotter")) for j in jobs]
    exact = run.series(jobs[0], "m_exact")
    return {"curves": curves, "exact": exact}


def draw_fig1b(data, ax):
    t, m = data["exact"]
    ax.plot(t, m, "k--", lw=1.2, label="exact")
    for tau, times, values in data["curves"]:
        ax.plot(times, values, lw=1.0, label=_tau_label(tau))
    ax.set_xlabel(TIME_LABEL)
    ax.set_ylabel(r"$\mathcal{M}$")
    ax.legend(fontsize=8)


def prepare_fig1c(runs):
    run = _expect(runs, {"collapse": (1, 1)})["collapse"][0]
    run.require_labels(["delta_m_normalized"])
    curves = [
        (j["params"]["tau"], *run.series(j, "delta_m_normalized")) for j in run.ok_jobs()
    ]
    return {"curves": curves}


def draw_fig1c(data, ax):
    for tau, times, values in data["curves"]:
        ax.plot(times, values, lw=1.0, label=_tau_label(tau))
    ax.set_xlabel(TIME_LABEL)
    ax.set_ylabel(r"$\Delta\mathcal{M}/(h\tau)^2$")
    ax.legend(fontsize=8)


# -- Fig 2: delocalization and scrambling vs Trotter step ----------------------


def prepare_fig2a(runs):
    groups = _expect(runs, {"qe-sweep": (0, 8), "ipr-sweep": (0, 8)})
    sweeps = sorted(
        groups.get("qe-sweep", []) + groups.get("ipr-sweep", []), key=lambda r: r.n_sites
    )
    if not sweeps:
        raise DataError("need at least one qe-sweep or ipr-sweep manifest")
    series = [(r.n_sites, r.taus(), r.results_column("lambda_ratio")) for r in sweeps]
    return {"series": series}


def draw_fig2a(data, ax):
    for n_sites, taus, ratio in data["series"]:
        ax.plot(taus, ratio, "o-", ms=3.5, lw=1.0, label=f"$N={n_sites}$")
    ax.axhline(1.0, color="0.5", ls=":", lw=1.0)
    ax.set_xscale("log")
    ax.set_xlabel(TAU_LABEL)
    ax.set_ylabel(r"$\lambda_\mathrm{IPR}/\lambda_\mathcal{D}$")
    ax.legend(fontsize=8)


def prepare_fig2b(runs):
    sweeps = _expect(runs, {"otoc-sweep": (1, 8)})["otoc-sweep"]
    series = [
        (r.n_sites, r.taus(), r.results_column("re_f_over_f0"))
        for r in sorted(sweeps, key=lambda r: r.n_sites)
    ]
    return {"series": series}


def draw_fig2b(data, ax):
    for n_sites, taus, f in data["series"]:
        ax.plot(taus, f, "o-", ms=3.5, lw=1.0, label=f"$N={n_sites}$")
    ax.axhline(0.0, color="0.5", ls=":", lw=1.0)
    ax.set_xscale("log")
    ax.set_xlabel(TAU_LABEL)
    ax.set_ylabel(r"$\mathrm{Re}\,F/F_0$")
    ax.legend(fontsize=8)


# -- Fig 3: long-time observables with perturbative overlays -------------------


def _sweeps_and_coefficients(runs):
    groups = _expect(runs, {"qe-sweep": (1, 8), "coeffs": (1, 1)})
    sweeps = sorted(groups["qe-sweep"], key=lambda r: r.n_sites)
    return sweeps, _coefficients(groups["coeffs"][0])


def prepare_fig3a(runs):
    sweeps, coeff = _sweeps_and_coefficients(runs)
    series = [(r.n_sites, r.taus(), r.results_column("m_avg")) for r in sweeps]
    return {"series": series, "m_de": coeff["m_diagonal_ensemble"]}


def draw_fig3a(data, ax):
    for n_sites, taus, m in data["series"]:
        ax.plot(taus, m, "o-", ms=3.5, lw=1.0, label=f"$N={n_sites}$")
    ax.axhline(data["m_de"], color="k", ls="--", lw=1.0, label=r"$\mathcal{M}_{\tau=0}$")
    ax.set_xscale("log")
    ax.set_xlabel(TAU_LABEL)
    ax.set_ylabel(r"$\mathcal{M}$")
    ax.legend(fontsize=8)


def prepare_fig3b(runs):
    sweeps, coeff = _sweeps_and_coefficients(runs)
    m_de, m = coeff["m_diagonal_ensemble"], coeff["m_signed"]
    series = []
    for r in sweeps:
        taus = r.taus()
        dm = np.abs(r.results_column("m_avg") - m_de)
        overlay = np.abs(m) * (r.h * taus) ** 2
        series.append((r.n_sites, taus, dm, overlay))
    return {"series": series, "m_abs": abs(m)}


def draw_fig3b(data, ax):
    for n_sites, taus, dm, overlay in data["series"]:
        ax.plot(taus, dm, "o", ms=3.5, label=f"$N={n_sites}$")
        ax.plot(taus, overlay, "-", lw=1.2, color="0.3")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(TAU_LABEL)
    ax.set_ylabel(r"$|\Delta\mathcal{M}|$")
    ax.legend(fontsize=8, title=rf"line: $|m|(h\tau)^2$, $|m|={data['m_abs']:.3f}$", title_fontsize=8)


def prepare_fig3c(runs):
    groups = _expect(runs, {"qe-sweep": (1, 8), "coeffs": (0, 1)})
    sweeps = sorted(groups["qe-sweep"], key=lambda r: r.n_sites)
    series = [(r.n_sites, r.taus(), r.results_column("qe_avg")) for r in sweeps]
    return {"series": series}


def draw_fig3c(data, ax):
    for n_sites, taus, qe in data["series"]:
        ax.plot(taus, qe, "o-", ms=3.5, lw=1.0, label=f"$N={n_sites}$")
    ax.set_xscale("log")
    ax.set_xlabel(TAU_LABEL)
    ax.set_ylabel(r"$Q_E$")
    ax.legend(fontsize=8)


def prepare_fig3d(runs):
    sweeps, coeff = _sweeps_and_coefficients(runs)
    q_e = coeff["q_e"]
    series = []
    for r in sweeps:
        taus = r.taus()
        qe = r.results_column("qe_avg")
        overlay = q_e * (r.h * taus) ** 2
        series.append((r.n_sites, taus, qe, overlay))
    return {"series": series, "q_e": q_e}


def draw_fig3d(data, ax):
    for n_sites, taus, qe, overlay in data["series"]:
        ax.plot(taus, qe, "o", ms=3.5, label=f"$N={n_sites}$")
        ax.plot(taus, overlay, "-", lw=1.2, color="0.3")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(TAU_LABEL)
    ax.set_ylabel(r"$Q_E$")
    ax.legend(fontsize=8, title=rf"line: $q_E(h\tau)^2$, $q_E={data['q_e']:.3f}$", title_fontsize=8)


# -- Fig S1: noise-induced heating in rescaled time ----------------------------


def prepare_figS1(runs):
    run = _expect(runs, {"noise": (1, 1)})["noise"][0]
    curves = []
    for job in run.ok_jobs():
        eta = job["results"]["eta"]
        if eta == 0.0:
            continue
        times, mean = run.series(job, "q_energy")
        _, err = run.series(job, "q_energy_stderr")
        curves.append((eta, eta**2 * times, mean, err))
    if not curves:
        raise DataError(f"run {run.path}: no nonzero-noise jobs to plot")
    curves.sort(key=lambda c: c[0])
    return {"curves": curves}


def draw_figS1(data, ax):
    for eta, x, mean, err in data["curves"]:
        (line,) = ax.plot(x, mean, lw=1.0, label=rf"$\eta={eta:g}$")
        ax.fill_between(x, mean - err, mean + err, color=line.get_color(), alpha=0.25, lw=0)
    ax.set_xlabel(r"$\eta^2 t$")
    ax.set_ylabel(r"mean $Q_E$")
    ax.legend(fontsize=8)


@dataclass(frozen=True)
class PanelDef:
    prepare: callable
    draw: callable


PANELS = {
    "fig1b": PanelDef(prepare_fig1b, draw_fig1b),
    "fig1c": PanelDef(prepare_fig1c, draw_fig1c),
    "fig2a": PanelDef(prepare_fig2a, draw_fig2a),
    "fig2b": PanelDef(prepare_fig2b, draw_fig2b),
    "fig3a": PanelDef(prepare_fig3a, draw_fig3a),
    "fig3b": PanelDef(prepare_fig3b, draw_fig3b),
    "fig3c": PanelDef(prepare_fig3c, draw_fig3c),
    "fig3d": PanelDef(prepare_fig3d, draw_fig3d),
    "figS1": PanelDef(prepare_figS1, draw_figS1),
}
