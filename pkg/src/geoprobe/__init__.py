"""Deterministic probe evaluation and intent handoff for generative engines.

The package splits into three layers:

* measurement — a confidence-decay model (``decay``), knowledge graphs
  with exact and approximate edit distance (``graphs``), and a seeded
  simulated engine (``oracle``);
* evaluation — the probe routing state machine with its append-only
  ledger and human arbitration queue (``routing``, ``ledger``,
  ``campaign``), plus the penalized attribution regression
  (``attribution``);
* execution — structured intent handoff through tokenized permissions to
  deterministic specialist agents (``handoff``, ``finquant``).

``cli`` and ``service`` wrap the layers for operators; ``config`` and
``report`` handle campaign files and emitted artifacts.
"""

from .attribution import IarModel, LabeledObservation, Severity, calibrate_gamma, fit, predict
from .decay import DecayParams, EntropyTrajectory, confidence_at, fit_decay_rate
from .graphs import (
    EditCosts,
    Entity,
    KnowledgeGraph,
    Relation,
    VerifierReport,
    ged_approx,
    ged_exact,
    iso_score,
    parse_verifier_report,
    report_to_graph,
)
from .handoff import Broker, IntentStateTensor, authorize, parse_tensor, sign_tensor
from .oracle import CorpusState, SimulatedEngine, advance_clock, generate, logprob_entropy
from .routing import (
    ArbitrationDecision,
    ArbitrationQueue,
    EvaluationResult,
    IntentPacket,
    RouteDecision,
    Thresholds,
    execute_probe,
    route,
)

__version__ = "0.1.0"
