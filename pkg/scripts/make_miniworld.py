"""Regenerate the bundled mini-world dataset under data/mini-world/.

Three small tables (customers, orders, items) with skewed order activity, a
coalition plan that joins them and projects customer/category pairs, a typed
schema config, and a default owner-assignment scenario. Deterministic: rerun
produces byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from random import Random

from assemblage_shapley.plans import NaturalJoin, Project, Scan, plan_to_dict

OUT = Path(__file__).resolve().parent.parent / "data" / "mini-world"

N_CUSTOMERS = 120
N_ITEMS = 40
N_ORDERS = 180
SEGMENTS = ["consumer", "corporate", "public", "reseller"]
CATEGORIES = ["tools", "garden", "office", "kitchen", "outdoor"]


def zipf_pick(rng: Random, n: int, exponent: float) -> int:
    weights = [(i + 1) ** -exponent for i in range(n)]
    total = sum(weights)
    x = rng.random() * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if x < acc:
            return i
    return n - 1


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    rng = Random("mini-world-v1")

    customers = [
        (f"c{i:03d}", SEGMENTS[zipf_pick(rng, len(SEGMENTS), 0.8)])
        for i in range(1, N_CUSTOMERS + 1)
    ]
    items = [
        (
            f"i{j:03d}",
            CATEGORIES[(j - 1) % len(CATEGORIES)],
            f"{rng.randrange(1, 400) / 10:.1f}",
        )
        for j in range(1, N_ITEMS + 1)
    ]
    orders = []
    for oid in range(1, N_ORDERS + 1):
        cust = customers[zipf_pick(rng, N_CUSTOMERS, 1.1)][0]
        item = items[zipf_pick(rng, N_ITEMS, 1.2)][0]
        orders.append((oid, cust, item))

    def write(name: str, header: list[str], rows) -> None:
        with open(OUT / f"{name}.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)

    write("customers", ["cust_id", "segment"], customers)
    write("items", ["item_id", "category", "weight"], items)
    write("orders", ["order_id", "cust_id", "item_id"], orders)

    plan = Project(
        NaturalJoin(NaturalJoin(Scan("customers"), Scan("orders")), Scan("items")),
        ("cust_id", "category"),
    )
    with open(OUT / "plan.json", "w", encoding="utf-8") as fh:
        json.dump(plan_to_dict(plan), fh, indent=1)
        fh.write("\n")

    schema = {
        "customers": {"types": {"cust_id": "string", "segment": "string"}},
        "orders": {
            "types": {"order_id": "integer", "cust_id": "string", "item_id": "string"}
        },
        "items": {
            "types": {"item_id": "string", "category": "string", "weight": "decimal"}
        },
    }
    with open(OUT / "schema.json", "w", encoding="utf-8") as fh:
        json.dump(schema, fh, indent=1)
        fh.write("\n")

    scenario = {
        "owner_mode": "EO",
        "assign_mode": "EA",
        "k": 5,
        "alpha": 4.0,
        "max_copies": 3,
        "beta": 3.0,
        "small_table_threshold": 100,
        "seed": 7,
    }
    with open(OUT / "scenario.json", "w", encoding="utf-8") as fh:
        json.dump(scenario, fh, indent=1)
        fh.write("\n")

    print(f"wrote mini-world to {OUT}")


if __name__ == "__main__":
    main()
