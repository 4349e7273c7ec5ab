"""Poisson-Gamma and time-dependent Poisson-Gamma recruitment forecasting."""

from .data import CenterRecord, EnrollmentPanel, PanelError, PanelSummary, ingest_csv, summarize
from .forecast import Forecast, TimeToTarget, time_to_target
from .pg import FitError, PgFit, PgPosterior, pg_fit, pg_forecast, pg_loglik, pg_posterior
from .selection import DEFAULT_TEMPLATES, CandidateSet, bic, fit_candidates, select_model
from .spline import MeanFunction, SplineSpec, basis_eval, beta_eval, mean_eval
from .tpg import SplineTemplate, TpgFit, tpg_fit, tpg_forecast, tpg_loglik

__all__ = [
    "CandidateSet", "CenterRecord", "DEFAULT_TEMPLATES", "EnrollmentPanel", "FitError",
    "Forecast", "MeanFunction", "PanelError", "PanelSummary", "PgFit", "PgPosterior",
    "SplineSpec", "SplineTemplate", "TimeToTarget", "TpgFit", "basis_eval", "beta_eval", "bic",
    "fit_candidates", "ingest_csv", "mean_eval", "pg_fit", "pg_forecast", "pg_loglik",
    "pg_posterior", "select_model", "summarize", "time_to_target", "tpg_fit", "tpg_forecast",
    "tpg_loglik",
]
