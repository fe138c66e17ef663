"""Static secrecy analysis of cryptographic protocols with witness functions."""

from .analyzer import AnalysisReport, Metric, Overall, Verdict, analyze, check_rule, compare_metrics
from .context import VerificationContext
from .dsl import parse_dsl, parse_file
from .errors import ProtosecError
from .oracle import bounded_attack_search, derives, probe_full_invariance
from .roles import GeneralizedRole, ProtocolSpec, encryption_patterns, extract_generalized_roles

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "GeneralizedRole",
    "Metric",
    "Overall",
    "ProtocolSpec",
    "ProtosecError",
    "Verdict",
    "VerificationContext",
    "analyze",
    "bounded_attack_search",
    "check_rule",
    "compare_metrics",
    "derives",
    "encryption_patterns",
    "extract_generalized_roles",
    "parse_dsl",
    "parse_file",
    "probe_full_invariance",
]
