import json
from pathlib import Path
from types import SimpleNamespace

import pytest
from hypothesis import HealthCheck, settings

from assemblage_shapley import (
    AssignmentScenario,
    evaluate_plan,
    generate_assignment,
    ingest_csv,
    load_plan,
)

settings.register_profile(
    "suite",
    max_examples=500,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("suite")

DATA_DIR = Path(__file__).resolve().parent.parent / "data" / "mini-world"


@pytest.fixture(scope="session")
def miniworld():
    """The bundled mini-world dataset, assigned and assembled once per session."""
    schema = json.loads((DATA_DIR / "schema.json").read_text())
    tables = ingest_csv(
        [DATA_DIR / "customers.csv", DATA_DIR / "orders.csv", DATA_DIR / "items.csv"],
        schema,
    )
    scenario = AssignmentScenario.load(DATA_DIR / "scenario.json")
    assignment = generate_assignment(tables, scenario)
    plan = load_plan(DATA_DIR / "plan.json")
    coalition = evaluate_plan(plan, assignment.tables, n_owners=assignment.n_owners)
    return SimpleNamespace(
        dir=DATA_DIR,
        schema=schema,
        tables=tables,
        scenario=scenario,
        assignment=assignment,
        plan=plan,
        coalition=coalition,
    )
