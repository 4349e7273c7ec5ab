"""BIC selection among candidate spline templates."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import EnrollmentPanel
from .pg import FitError
from .tpg import ProfileLikelihood, SplineTemplate, TpgFit, tpg_fit

DEFAULT_TEMPLATES = (
    SplineTemplate(2, 0),
    SplineTemplate(3, 0),
    SplineTemplate(2, 1),
    SplineTemplate(3, 1),
)


def bic(loglik: float, p: int, n_obs: int) -> float:
    if n_obs < 1:
        raise ValueError("n_obs must be >= 1")
    return p * np.log(n_obs) - 2.0 * loglik


@dataclass
class CandidateSet:
    templates: tuple[SplineTemplate, ...]
    fits: list[TpgFit | None] = field(default_factory=list)
    bic: list[float] = field(default_factory=list)
    errors: list[Exception | None] = field(default_factory=list)

    @property
    def best_index(self) -> int:
        ok = [i for i, f in enumerate(self.fits) if f is not None]
        if not ok:
            raise self.errors[0]
        return min(ok, key=lambda i: (self.bic[i], self.templates[i].n_params,
                                      self.templates[i].degree, i))

    @property
    def best(self) -> TpgFit:
        return self.fits[self.best_index]

    def to_csv(self, path: str | Path) -> None:
        sel = self.best_index
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("degree", "knots", "t_p", "alpha", "loglik", "p", "bic", "selected"))
            for i, (tmpl, fit) in enumerate(zip(self.templates, self.fits)):
                if fit is None:
                    w.writerow((tmpl.degree, tmpl.n_knots, "", "", "", tmpl.n_params, "", 0))
                    continue
                w.writerow((tmpl.degree, tmpl.n_knots, fit.t_p, repr(fit.alpha), repr(fit.loglik),
                            tmpl.n_params, repr(self.bic[i]), int(i == sel)))


def fit_candidates(panel: EnrollmentPanel, templates: Sequence[SplineTemplate] = DEFAULT_TEMPLATES,
                   seed: int = 0, **fit_kwargs) -> CandidateSet:
    """Fit every template; failures are kept as ``None`` entries with their error."""
    cands = CandidateSet(tuple(templates))
    prof = ProfileLikelihood(panel)
    for tmpl in cands.templates:
        try:
            fit = tpg_fit(panel, tmpl, seed=seed, prof=prof, **fit_kwargs)
        except FitError as exc:
            cands.fits.append(None)
            cands.bic.append(np.inf)
            cands.errors.append(exc)
            continue
        cands.fits.append(fit)
        cands.bic.append(bic(fit.loglik, tmpl.n_params, fit.n_obs))
        cands.errors.append(None)
    return cands


def select_model(panel: EnrollmentPanel, templates: Sequence[SplineTemplate] = DEFAULT_TEMPLATES,
                 seed: int = 0, **fit_kwargs) -> TpgFit:
    """Fit each candidate and return the one with the lowest BIC.

    Ties go to fewer parameters, then the lower degree.
    """
    return fit_candidates(panel, templates, seed, **fit_kwargs).best
