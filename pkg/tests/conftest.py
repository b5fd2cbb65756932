import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent.parent / "fixtures"
BROKER_KEY = b"local-dev-broker-key"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def broker_key() -> bytes:
    return BROKER_KEY


@pytest.fixture
def tensor_doc() -> dict:
    return json.loads((FIXTURES / "tensor_rebalance.json").read_text())


@pytest.fixture
def market_doc() -> dict:
    return json.loads((FIXTURES / "market_2asset.json").read_text())


def make_campaign_config(
    tmp_path: Path,
    *,
    prompts=("probe one", "probe two"),
    t_grid=(0, 5, 40),
    reps=5,
    master_seed=42,
    gamma=3.0,
    eta=0.1,
    replay_file=None,
    fit_iterations=200,
    render_figures=False,
    out_name="out",
    **extra,
) -> Path:
    """Write a small campaign config into tmp_path and return its path."""
    data = {
        "decay": {
            "c0": 1.0,
            "decay_rate": 0.05,
            "entropy_sensitivity": 0.9,
            "vocab_size": 50000,
        },
        "entropy": {"h_max": 3.25, "rise_rate": 0.03},
        "thresholds": {"delta": 0.4, "epsilon": 0.8},
        "edit_costs": {"node_substitute": 2.0, "edge_substitute": 2.0},
        "gamma": gamma,
        "eta": eta,
        "prompts": list(prompts),
        "t_grid": list(t_grid),
        "reps_per_cell": reps,
        "master_seed": master_seed,
        "corpus_file": str(FIXTURES / "corpus.json"),
        "output_dir": str(tmp_path / out_name),
        "fit": {"max_iterations": fit_iterations},
        "render_figures": render_figures,
    }
    if replay_file is not None:
        data["replay_file"] = str(replay_file)
    data.update(extra)
    path = tmp_path / "campaign.json"
    path.write_text(json.dumps(data, indent=2))
    return path


@pytest.fixture
def campaign_config_path(tmp_path) -> Path:
    return make_campaign_config(tmp_path)


@pytest.fixture(autouse=True)
def _no_service_token(monkeypatch):
    monkeypatch.delenv("GEOPROBE_SERVICE_TOKEN", raising=False)
