# src/metrics.py
# Centralized Prometheus metrics

from prometheus_client import REGISTRY, Counter, Gauge, Histogram, write_to_textfile

# Quadrature work (labeled by kind: family | triple | dual)
INTEGRALS_TOTAL = Counter('dm_lab_integrals_total', 'Piecewise quadrature evaluations', ['kind'])

# Report rows by pipeline and verdict (pass/fail)
ROWS_TOTAL = Counter('dm_lab_report_rows_total', 'Report rows emitted', ['pipeline', 'verdict'])

ENVELOPE_STARTS = Counter('dm_lab_envelope_starts_total', 'Envelope multistart minimizations')

SCENARIO_SECONDS = Histogram(
    'dm_lab_scenario_seconds',
    'Wall time per scenario in seconds',
    ['pipeline'],
    buckets=[0.05, 0.1, 0.25, 0.5, 1, 2, 5, 10, 30, 60, 120]
)

LAST_EXIT_CODE = Gauge('dm_lab_last_exit_code', 'Exit code of the last run')


def dump_metrics(path: str) -> None:
    """Write the default registry in text exposition format (batch runs have no HTTP endpoint)."""
    write_to_textfile(path, REGISTRY)
