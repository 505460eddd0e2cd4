"""Threshold econometrics of transaction friction and on-chain velocity."""

import json

from ._frictionbreak import (
    DegenerateError,
    FrictionbreakError,
    InputError,
    ParseError,
    adf_test,
    analyze_json,
    bca_net_damage,
    estimate_threshold,
    gen_ar1,
    gen_threshold_dgp,
    granger_test,
    hansen_critical_value,
    sup_wald_test,
    two_sls_beta,
    welch_t,
    write_report_bundle,
    write_source_fixture,
)

__version__ = "0.1.0"


def analyze(config, seed=20240101, n_boot=999, workers=1):
    """Runs every stage on the sources named in `config` and returns the report as a dict."""
    return json.loads(analyze_json(str(config), seed=seed, n_boot=n_boot, workers=workers))


__all__ = [
    "DegenerateError",
    "FrictionbreakError",
    "InputError",
    "ParseError",
    "adf_test",
    "analyze",
    "analyze_json",
    "bca_net_damage",
    "estimate_threshold",
    "gen_ar1",
    "gen_threshold_dgp",
    "granger_test",
    "hansen_critical_value",
    "sup_wald_test",
    "two_sls_beta",
    "welch_t",
    "write_report_bundle",
    "write_source_fixture",
]
