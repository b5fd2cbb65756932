"""Reference specialist agent: deterministic portfolio rebalancing.

The agent owns a market model (asset names, expected returns, covariance)
and a fixture supply-chain graph, and executes exactly two scoped
actions per handoff: reading portfolio state and running the
mean-variance solve. The solve minimizes w' Sigma w subject to the
target-yield and full-investment equality constraints via the linear
stationarity (KKT) system, so the weights are an exact linear-algebra
result — nothing is sampled or generated.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import InfeasibleTargetError, ModelError, SchemaError
from .graphs import Entity, KnowledgeGraph, Relation
from .handoff import (
    AgentOutput,
    Computation,
    IntentStateTensor,
    PermissionGate,
)

__all__ = [
    "MarketModel",
    "load_market_model",
    "mvo_solve",
    "FinQuantAgent",
    "SCOPE_READ_PORTFOLIO",
    "SCOPE_EXECUTE_MVO",
    "FINQUANT_VECTOR",
    "tier2_supply_chain_fixture",
]

SCOPE_READ_PORTFOLIO = "READ_PORTFOLIO_STATE"
SCOPE_EXECUTE_MVO = "EXECUTE_MVO_SIMULATION"

# Execution vector this agent serves; brokers register it under this key.
FINQUANT_VECTOR = "tier_2_semiconductor_tariff_exposure"

_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class MarketModel:
    assets: tuple[str, ...]
    expected_returns: np.ndarray
    covariance: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.assets)
        if self.expected_returns.shape != (n,):
            raise ModelError(
                f"expected_returns has shape {self.expected_returns.shape}, "
                f"need ({n},)"
            )
        if self.covariance.shape != (n, n):
            raise ModelError(
                f"covariance has shape {self.covariance.shape}, need ({n}, {n})"
            )
        if not np.allclose(self.covariance, self.covariance.T, atol=_SYMMETRY_TOL, rtol=0.0):
            raise ModelError("covariance matrix is not symmetric within 1e-12")
        try:
            np.linalg.cholesky(self.covariance)
        except np.linalg.LinAlgError:
            raise ModelError("covariance matrix is not positive definite") from None

    def digest(self) -> str:
        blob = json.dumps(
            {
                "assets": list(self.assets),
                "mu": self.expected_returns.tolist(),
                "sigma": self.covariance.tolist(),
            },
            sort_keys=True,
            separators=(",", ":"),
        ).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_market_model(source: Path | str | Mapping) -> MarketModel:
    """Load a market model from a JSON file or an already-decoded mapping."""
    if isinstance(source, (str, Path)):
        data = json.loads(Path(source).read_text())
    else:
        data = source
    for key in ("assets", "expected_returns", "covariance"):
        if key not in data:
            raise SchemaError(f"market model missing required key: {key!r}")
    return MarketModel(
        assets=tuple(str(a) for a in data["assets"]),
        expected_returns=np.asarray(data["expected_returns"], dtype=float),
        covariance=np.asarray(data["covariance"], dtype=float),
    )


def mvo_solve(market: MarketModel, target_yield: float, budget: float = 1.0) -> np.ndarray:
    """Minimum-variance weights meeting the yield and budget equalities.

    Solves the stationarity system

        [2*Sigma  mu  1] [w ]   [0     ]
        [mu'      0   0] [l1] = [target]
        [1'       0   0] [l2]   [budget]

    The target must be attainable: min(mu) <= target <= max(mu). When
    all expected returns are identical the yield constraint is redundant
    and the system falls back to the budget-only solve.
    """
    mu = market.expected_returns
    n = len(mu)
    if not (np.min(mu) <= target_yield <= np.max(mu)):
        raise InfeasibleTargetError(
            f"target yield {target_yield} outside attainable range "
            f"[{np.min(mu)}, {np.max(mu)}]"
        )
    sigma = market.covariance
    ones = np.ones(n)
    if np.ptp(mu) == 0.0:
        # Degenerate: every asset yields the same; only the budget binds.
        kkt = np.zeros((n + 1, n + 1))
        kkt[:n, :n] = 2.0 * sigma
        kkt[:n, n] = ones
        kkt[n, :n] = ones
        rhs = np.zeros(n + 1)
        rhs[n] = budget
        solution = np.linalg.solve(kkt, rhs)
        return solution[:n]
    kkt = np.zeros((n + 2, n + 2))
    kkt[:n, :n] = 2.0 * sigma
    kkt[:n, n] = mu
    kkt[:n, n + 1] = ones
    kkt[n, :n] = mu
    kkt[n + 1, :n] = ones
    rhs = np.zeros(n + 2)
    rhs[n] = target_yield
    rhs[n + 1] = budget
    solution = np.linalg.solve(kkt, rhs)
    return solution[:n]


def tier2_supply_chain_fixture() -> KnowledgeGraph:
    """Stand-in topology for the agent's proprietary supplier data."""
    entities = [
        Entity("automotive company x", "Organization"),
        Entity("tier1 electronics co", "Organization"),
        Entity("tier2 fab ltd", "Organization"),
        Entity("tier2 packaging inc", "Organization"),
        Entity("semiconductor tariffs", "RiskFactor"),
    ]
    relations = [
        Relation("automotive company x", "tier1 electronics co", "sources_from"),
        Relation("tier1 electronics co", "tier2 fab ltd", "sources_from"),
        Relation("tier1 electronics co", "tier2 packaging inc", "sources_from"),
        Relation("tier2 fab ltd", "semiconductor tariffs", "exposed_to"),
        Relation("tier2 packaging inc", "semiconductor tariffs", "exposed_to"),
    ]
    return KnowledgeGraph(entities, relations)


def _graph_ref(graph: KnowledgeGraph) -> str:
    triples = sorted(graph.triples())
    blob = json.dumps(triples, sort_keys=True, separators=(",", ":")).encode()
    return f"supply-chain:{len(graph.entities)}n{len(graph.relations)}e:{hashlib.sha256(blob).hexdigest()[:12]}"


class FinQuantAgent:
    """Deterministic quantitative agent behind the permission gate.

    Declares two scopes and performs exactly one gated action per scope:
    a portfolio/market read and the mean-variance solve. Every number it
    reports is logged as a computation output first.
    """

    required_scopes = (SCOPE_READ_PORTFOLIO, SCOPE_EXECUTE_MVO)

    def __init__(self, market: MarketModel, supply_chain: KnowledgeGraph | None = None):
        self.market = market
        self.supply_chain = supply_chain or tier2_supply_chain_fixture()

    def execute(self, tensor: IntentStateTensor, gate: PermissionGate) -> AgentOutput:
        constraints = tensor.p_params.strict_constraints

        gate.require(SCOPE_READ_PORTFOLIO)
        chain_ref = _graph_ref(self.supply_chain)
        read = Computation(
            computation_id="c1",
            operation="read_portfolio_state",
            inputs={
                "portfolio_value_usd": constraints.portfolio_value_usd,
                "market_digest": self.market.digest(),
            },
            outputs={
                "assets": list(self.market.assets),
                "expected_returns": self.market.expected_returns.tolist(),
                "supply_chain_ref": chain_ref,
            },
        )

        gate.require(SCOPE_EXECUTE_MVO)
        weights = mvo_solve(self.market, constraints.target_annualized_yield)
        achieved_yield = float(self.market.expected_returns @ weights)
        variance = float(weights @ self.market.covariance @ weights)
        solve = Computation(
            computation_id="c2",
            operation="mvo_solve",
            inputs={
                "target_yield": constraints.target_annualized_yield,
                "market_digest": self.market.digest(),
            },
            outputs={
                "weights": weights.tolist(),
                "achieved_yield": achieved_yield,
                "variance": variance,
            },
        )

        return AgentOutput(
            computations=(read, solve),
            weights=tuple(float(w) for w in weights),
            achieved_yield=achieved_yield,
            variance=variance,
            supply_chain_ref=chain_ref,
            traces={
                "weights": "c2",
                "achieved_yield": "c2",
                "variance": "c2",
                "supply_chain_ref": "c1",
            },
        )
