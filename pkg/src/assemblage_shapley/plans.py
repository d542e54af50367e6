"""Coalition plan expression trees.

A plan is positive relational algebra over logical tables: scans (optionally
filtered on constant equality), projections (optionally renaming output
columns), natural joins, equi-joins on explicit attribute pairs, and set
unions. Plans serialize to/from a JSON expression tree; the schema is
documented in ``docs/plan_schema.md``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

from .errors import PlanError


class PlanNode:
    """Base class for plan tree nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Scan(PlanNode):
    """Read a logical table, optionally filtering rows on constant equality."""

    table: str
    where: tuple[tuple[str, Any], ...] = ()


@dataclass(frozen=True)
class Project(PlanNode):
    """Keep ``columns`` of the input, optionally renaming them to ``rename``."""

    child: PlanNode
    columns: tuple[str, ...]
    rename: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.columns:
            raise PlanError("projection must keep at least one column")
        if self.rename is not None and len(self.rename) != len(self.columns):
            raise PlanError(
                f"rename list has {len(self.rename)} names for {len(self.columns)} columns"
            )


@dataclass(frozen=True)
class NaturalJoin(PlanNode):
    """Join two inputs on all attributes they share by name."""

    left: PlanNode
    right: PlanNode


@dataclass(frozen=True)
class EquiJoin(PlanNode):
    """Join two inputs on explicit ``(left_attr, right_attr)`` equality pairs.

    The output keeps all left attributes, drops the right join attributes
    (their values duplicate the left side), and suffixes any remaining right
    attribute whose name collides with a left attribute with ``_r``.
    """

    left: PlanNode
    right: PlanNode
    on: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if not self.on:
            raise PlanError("equi-join needs at least one attribute pair")


@dataclass(frozen=True)
class Union(PlanNode):
    """Set union of two or more inputs sharing one schema."""

    children: tuple[PlanNode, ...] = field(default=())

    def __post_init__(self):
        if len(self.children) < 2:
            raise PlanError("union needs at least two inputs")


def output_schema(node: PlanNode, catalog: Mapping[str, tuple[str, ...]]) -> tuple[str, ...]:
    """Compute the output attribute names of ``node``.

    ``catalog`` maps logical table names to their schemas. Raises
    :class:`PlanError` on unknown tables, missing attributes, joins with no
    join attributes, irresolvable name collisions, or union schema mismatches.
    """
    if isinstance(node, Scan):
        if node.table not in catalog:
            raise PlanError(f"unknown table {node.table!r}")
        schema = catalog[node.table]
        for attr, _ in node.where:
            if attr not in schema:
                raise PlanError(f"filter attribute {attr!r} not in table {node.table!r} {schema}")
        return schema
    if isinstance(node, Project):
        child = output_schema(node.child, catalog)
        for c in node.columns:
            if c not in child:
                raise PlanError(f"projected attribute {c!r} not in input schema {child}")
        out = node.rename if node.rename is not None else node.columns
        if len(set(out)) != len(out):
            raise PlanError(f"duplicate attribute names in projection output {out}")
        return tuple(out)
    if isinstance(node, NaturalJoin):
        left = output_schema(node.left, catalog)
        right = output_schema(node.right, catalog)
        shared = [a for a in left if a in right]
        if not shared:
            raise PlanError(
                f"natural join inputs share no attributes: {left} vs {right}"
            )
        return left + tuple(a for a in right if a not in left)
    if isinstance(node, EquiJoin):
        left = output_schema(node.left, catalog)
        right = output_schema(node.right, catalog)
        for la, ra in node.on:
            if la not in left:
                raise PlanError(f"join attribute {la!r} not in left schema {left}")
            if ra not in right:
                raise PlanError(f"join attribute {ra!r} not in right schema {right}")
        dropped = {ra for _, ra in node.on}
        out = list(left)
        for a in right:
            if a in dropped:
                continue
            name = a if a not in left else f"{a}_r"
            if name in out:
                raise PlanError(f"attribute name collision on {name!r} in equi-join output")
            out.append(name)
        return tuple(out)
    if isinstance(node, Union):
        schemas = [output_schema(c, catalog) for c in node.children]
        first = schemas[0]
        for s in schemas[1:]:
            if s != first:
                raise PlanError(f"union inputs have different schemas: {first} vs {s}")
        return first
    raise PlanError(f"unknown plan node type {type(node).__name__}")


# --- JSON wire format -------------------------------------------------------

def _value_to_json(v: Any) -> Any:
    if isinstance(v, Fraction):
        return {"fraction": f"{v.numerator}/{v.denominator}"}
    return v


def _value_from_json(v: Any) -> Any:
    if isinstance(v, dict) and set(v) == {"fraction"}:
        return Fraction(v["fraction"])
    if isinstance(v, float):
        return Fraction(str(v))
    return v


def plan_to_dict(node: PlanNode) -> dict:
    if isinstance(node, Scan):
        out: dict[str, Any] = {"op": "scan", "table": node.table}
        if node.where:
            out["where"] = {attr: _value_to_json(v) for attr, v in node.where}
        return out
    if isinstance(node, Project):
        out = {"op": "project", "columns": list(node.columns), "input": plan_to_dict(node.child)}
        if node.rename is not None:
            out["rename"] = list(node.rename)
        return out
    if isinstance(node, NaturalJoin):
        return {
            "op": "natural_join",
            "left": plan_to_dict(node.left),
            "right": plan_to_dict(node.right),
        }
    if isinstance(node, EquiJoin):
        return {
            "op": "equi_join",
            "left": plan_to_dict(node.left),
            "right": plan_to_dict(node.right),
            "on": [list(pair) for pair in node.on],
        }
    if isinstance(node, Union):
        return {"op": "union", "inputs": [plan_to_dict(c) for c in node.children]}
    raise PlanError(f"cannot serialize plan node {type(node).__name__}")


def plan_from_dict(data: Mapping[str, Any]) -> PlanNode:
    try:
        op = data["op"]
    except (TypeError, KeyError):
        raise PlanError(f"plan node must be an object with an 'op' field, got {data!r}") from None
    if op == "scan":
        where = tuple(sorted((a, _value_from_json(v)) for a, v in data.get("where", {}).items()))
        return Scan(table=data["table"], where=where)
    if op == "project":
        rename = data.get("rename")
        return Project(
            child=plan_from_dict(data["input"]),
            columns=tuple(data["columns"]),
            rename=tuple(rename) if rename is not None else None,
        )
    if op == "natural_join":
        return NaturalJoin(left=plan_from_dict(data["left"]), right=plan_from_dict(data["right"]))
    if op == "equi_join":
        return EquiJoin(
            left=plan_from_dict(data["left"]),
            right=plan_from_dict(data["right"]),
            on=tuple((la, ra) for la, ra in data["on"]),
        )
    if op == "union":
        return Union(children=tuple(plan_from_dict(c) for c in data["inputs"]))
    raise PlanError(f"unknown plan op {op!r}")


def plan_to_json(node: PlanNode, **dumps_kwargs) -> str:
    return json.dumps(plan_to_dict(node), **dumps_kwargs)


def plan_from_json(text: str) -> PlanNode:
    return plan_from_dict(json.loads(text))


def load_plan(path) -> PlanNode:
    with open(path, "r", encoding="utf-8") as fh:
        return plan_from_dict(json.load(fh))
