"""Run configuration: a small key=value text format plus CLI overrides.

Example config file:

    model = z2
    n = 128
    k = cross1
    delta = 1/5
    # eps = 1/8
    # ladder = 32          (comma-separated folner indices forcing the ladder)

Rationals are written p/q and parsed exactly. The seed only feeds test
instance generators; the pipeline itself is deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from fractions import Fraction

from .errors import InvalidInput
from .groups import GroupModel, Heisenberg, Shape, Zd, get_model


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidInput(f"bad rational {text!r}: {exc}") from None


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass
class RunConfig:
    model: str = "z2"
    n: int = 64
    k: str = "cross1"
    delta: str = "1/5"
    beta: str = "1/4"
    eps: str | None = None
    ladder: list[int] | None = None
    folner_cap: int = 64
    u_cap: int = 64
    out: str | None = None
    seed: int = 0

    def delta_value(self) -> Fraction:
        return parse_rational(self.delta)

    def beta_value(self) -> Fraction:
        return parse_rational(self.beta)

    def eps_value(self) -> Fraction | None:
        return parse_rational(self.eps) if self.eps else None

    def validate(self) -> None:
        get_model(self.model)
        if self.n < 2:
            raise InvalidInput(f"window size n must be >= 2, got {self.n}")
        d = self.delta_value()
        if not 0 < d < 1:
            raise InvalidInput(f"delta must lie in (0,1), got {d}")
        b = self.beta_value()
        if not 0 < b < Fraction(1, 2):
            raise InvalidInput(f"beta must lie in (0,1/2), got {b}")
        e = self.eps_value()
        if e is not None and not 0 < e < Fraction(1, 2):
            raise InvalidInput(f"eps must lie in (0,1/2), got {e}")
        parse_k(get_model(self.model), self.k)

    @staticmethod
    def from_file(path: str) -> "RunConfig":
        cfg = RunConfig()
        names = {f.name for f in fields(RunConfig)}
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise InvalidInput(f"{path}:{lineno}: expected key = value")
                key, _, value = line.partition("=")
                key = key.strip().replace("-", "_")
                value = value.strip()
                if key not in names:
                    raise InvalidInput(f"{path}:{lineno}: unknown key {key!r}")
                cfg._set(key, value)
        cfg.validate()
        return cfg

    def _set(self, key: str, value: str) -> None:
        if key in ("n", "folner_cap", "u_cap", "seed"):
            try:
                setattr(self, key, int(value))
            except ValueError:
                raise InvalidInput(f"field {key} wants an integer, got {value!r}")
        elif key == "ladder":
            try:
                setattr(self, key, [int(v) for v in value.split(",") if v.strip()])
            except ValueError:
                raise InvalidInput(f"field ladder wants comma-separated integers")
        else:
            setattr(self, key, value)


def parse_k(model: GroupModel, spec: str) -> Shape:
    """K presets by name or an explicit JSON list of coordinate tuples."""
    spec = spec.strip()
    if spec == "cross1":
        return model.generators()
    if spec == "box1":
        if isinstance(model, Zd):
            return model.box(*([3] * model.d))
        if isinstance(model, Heisenberg):
            return model.box(3, 3, 3)
        raise InvalidInput("box1 preset needs a Z^d or Heisenberg model")
    if spec == "zcross":
        if not isinstance(model, Heisenberg):
            raise InvalidInput("zcross preset is Heisenberg-only")
        return model.shape([(0, 0, 0), (0, 0, 1), (0, 0, -1)])
    if spec.startswith("["):
        try:
            data = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"bad K element list: {exc}") from None
        if isinstance(model, (Zd, Heisenberg)):
            elems = [tuple(int(v) for v in row) for row in data]
            want = model.d
            if any(len(el) != want for el in elems):
                raise InvalidInput(f"K elements must have {want} coordinates")
        else:
            elems = [(tuple(int(v) for v in row[0]), int(row[1])) for row in data]
        return model.shape(elems)
    raise InvalidInput(f"unknown K spec {spec!r}; use cross1, box1, zcross, "
                       "or a JSON element list")
