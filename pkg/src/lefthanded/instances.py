"""Named applications: build an event family from an app name and a JSON-style parameter dict."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .colorings import ListAssignment, lacunary_family, random_lists, thue_family, uniform_lists
from .core import EventFamily, InstanceError
from .games import game_alon_family, game_beck_family, make_oracle
from .sequences import alon_family, beck_family
from .toys import NAMED as TOY_FAMILIES

APPS = ("beck", "alon", "beck-game", "alon-game", "lacunary", "thue")
GAME_APPS = ("beck-game", "alon-game")
TOY_APPS = tuple(TOY_FAMILIES)

DEFAULT_EPSILON = {
    "beck": Fraction(1, 2),
    "alon": Fraction(1, 8),
    "beck-game": Fraction(1, 2),
    "alon-game": Fraction(1, 8),
    "lacunary": Fraction(1),
}


def parse_fraction(value) -> Fraction:
    try:
        return Fraction(str(value)) if not isinstance(value, Fraction) else value
    except (ValueError, ZeroDivisionError) as exc:
        raise InstanceError(f"not a rational number: {value!r}") from exc


@dataclass
class Instance:
    app: str
    params: dict[str, Any]
    family: EventFamily
    details: Any = None
    extras: dict[str, Any] = field(default_factory=dict)


def _optional_int(params, key):
    value = params.get(key)
    return None if value is None else int(value)


def list_assignment(spec) -> ListAssignment:
    """Lists from {"kind": "uniform"|"random"|"explicit", ...}."""
    spec = spec or {"kind": "uniform"}
    kind = spec.get("kind", "uniform")
    if kind == "uniform":
        return uniform_lists(spec.get("colors", list(range(6))))
    if kind == "random":
        return random_lists(int(spec.get("seed", 0)), int(spec.get("universe", 10)),
                            int(spec.get("size", 6)))
    if kind == "explicit":
        return ListAssignment(spec["rows"])
    raise InstanceError(f"unknown list kind {kind!r}")


def build_instance(app: str, params: dict | None = None) -> Instance:
    params = dict(params or {})
    if app in TOY_FAMILIES:
        kwargs = {}
        if "alpha" in params:
            kwargs["alpha"] = parse_fraction(params["alpha"])
        if "count" in params and app != "single-bit":
            kwargs["count"] = int(params["count"])
        return Instance(app, params, TOY_FAMILIES[app](**kwargs))
    if app not in APPS:
        raise InstanceError(f"unknown app {app!r}")
    threshold = _optional_int(params, "threshold")
    num_variables = _optional_int(params, "num_variables")
    if app in DEFAULT_EPSILON:
        params["epsilon"] = str(parse_fraction(params.get("epsilon", DEFAULT_EPSILON[app])))
        eps = Fraction(params["epsilon"])
    if app == "beck":
        family, details = beck_family(eps, threshold, num_variables)
    elif app == "alon":
        family, details = alon_family(eps, threshold, num_variables)
    elif app in GAME_APPS:
        params.setdefault("oracle", "copycat")
        oracle = make_oracle(params["oracle"], int(params.get("oracle_seed", 0)))
        build = game_beck_family if app == "beck-game" else game_alon_family
        family, details = build(eps, oracle, threshold, num_variables)
        return Instance(app, params, family, details, {"oracle": oracle})
    elif app == "lacunary":
        params.setdefault("sequence", "powers:2")
        family, details = lacunary_family(params["sequence"], eps)
    else:
        params.setdefault("lists", {"kind": "uniform", "colors": list(range(6))})
        lists = list_assignment(params["lists"])
        family = thue_family(lists, num_variables)
        details = lists
    if "alpha" in params:
        family.alpha = parse_fraction(params["alpha"])
    return Instance(app, params, family, details)
