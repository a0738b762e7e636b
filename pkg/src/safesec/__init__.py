"""Safety and security pattern reasoning for automotive architectures."""

from .catalog import (BadPlacement, Candidate, MissingIntent, PatternTemplate, UnknownTarget,
                      builtin_catalog, catalog_for, instantiate_safety, instantiate_security, lookup)
from .cli import load_corpus
from .codesign import (ConsequenceReport, analyze_consequences, cascading_failures,
                       safety_to_security, security_to_safety)
from .dsl import ArityError, FactSyntaxError, parse, parse_file, render
from .kb import IdCollision, IntentTuple, KnowledgeBase, ThreatRecord, ToleranceLevel, merge, validate
from .reach import compute_reachable, derive_bus_io
from .safety import (candidate_safety_patterns, check_goals, derive_avoidance, hazard_asil,
                     min_intent, tolerance_leq)
from .security import (candidate_security_patterns, derive_mitigated, derive_pthreats,
                       derive_threats)
from .solutions import CandidateExplosion, Options, Solution, enumerate_solutions, report

__version__ = "0.1.0"
