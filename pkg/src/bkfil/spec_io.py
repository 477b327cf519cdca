"""JSON interchange for module descriptions.

A module file is a JSON object::

    {"p": 3, "n_p": 6, "n_u": 12, "E": [-3, 1], "d": 1, "A": [[[0, 0, 1]]],
     "weights": [2], "crystalline": true, "flavor": "crys", "label": "..."}

``A[r][c]`` is the u-coefficient list of row r, column c of the Frobenius
matrix; column c is phi(e_c).  Coefficients are stored as residues in
[0, p^n_p).  Optional keys: weights, crystalline, flavor, sen_operator, label.
A file may also hold a list of such objects or {"modules": [...]}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .bk import BKModule
from .errors import UsageError
from .ring import EisensteinPoly, Prec, is_prime

_KNOWN = {"p", "n_p", "n_u", "E", "d", "A", "weights", "crystalline", "flavor", "sen_operator", "label"}


@dataclass(frozen=True)
class ModuleSpec:
    p: int
    n_p: int
    n_u: int
    E: tuple
    A: tuple
    weights: Optional[tuple] = None
    crystalline: bool = False
    flavor: str = "crys"
    sen_operator: Optional[tuple] = None
    label: str = ""

    @property
    def d(self) -> int:
        return len(self.A)

    @property
    def modulus(self) -> int:
        return self.p ** self.n_p

    # ------------------------------------------------------------ conversion

    def to_dict(self) -> dict:
        out = {"p": self.p, "n_p": self.n_p, "n_u": self.n_u, "E": list(self.E), "d": self.d,
               "A": [[list(x) for x in row] for row in self.A], "crystalline": self.crystalline,
               "flavor": self.flavor, "label": self.label}
        if self.weights is not None:
            out["weights"] = list(self.weights)
        if self.sen_operator is not None:
            out["sen_operator"] = [list(r) for r in self.sen_operator]
        return out

    def with_precision(self, n_p: Optional[int] = None, n_u: Optional[int] = None) -> "ModuleSpec":
        """Change working precision.

        Stored residues are treated as exact integers and coefficients beyond
        n_u as zero, so raising precision is only meaningful for exact data.
        """
        n_p = self.n_p if n_p is None else n_p
        n_u = self.n_u if n_u is None else n_u
        q = self.p ** n_p
        old = self.modulus
        lift = lambda c: (c if c <= old // 2 else c - old) % q
        A = tuple(tuple(tuple(lift(c) for c in x[:n_u]) for x in row) for row in self.A)
        E = tuple(lift(c) for c in self.E)
        sen = None if self.sen_operator is None else tuple(tuple(lift(c) for c in r) for r in self.sen_operator)
        return replace(self, n_p=n_p, n_u=n_u, A=A, E=E, sen_operator=sen)

    def build(self, **kw) -> BKModule:
        """Build the module; keyword arguments override the stored flags."""
        E = EisensteinPoly(self.E, self.p, self.n_p)
        prec = Prec(self.p, self.n_p, self.n_u)
        opts = dict(crystalline=self.crystalline, weights=self.weights, flavor=self.flavor,
                    label=self.label, sen_operator=self.sen_operator)
        opts.update(kw)
        return BKModule([[list(x) for x in row] for row in self.A], E, prec, **opts)


def _int(x, what: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise UsageError(f"{what} must be an integer")
    return x


def from_dict(obj) -> ModuleSpec:
    if not isinstance(obj, dict):
        raise UsageError("module record must be a JSON object")
    extra = set(obj) - _KNOWN
    if extra:
        raise UsageError(f"unknown keys: {sorted(extra)}")
    for k in ("p", "n_p", "n_u", "E", "A"):
        if k not in obj:
            raise UsageError(f"missing key {k!r}")
    p, n_p, n_u = (_int(obj[k], k) for k in ("p", "n_p", "n_u"))
    if not is_prime(p) or n_p < 1 or n_u < 1:
        raise UsageError("need prime p and positive precisions")
    q = p ** n_p
    if not isinstance(obj["E"], list):
        raise UsageError("E must be a coefficient list")
    E = tuple(_int(c, "E coefficient") % q for c in obj["E"])
    A = obj["A"]
    if not isinstance(A, list) or not A:
        raise UsageError("A must be a nonempty d x d array")
    d = len(A)
    if "d" in obj and _int(obj["d"], "d") != d:
        raise UsageError("d disagrees with the shape of A")
    rows = []
    for row in A:
        if not isinstance(row, list) or len(row) != d:
            raise UsageError("A must be square")
        cells = []
        for x in row:
            if not isinstance(x, list):
                raise UsageError("each entry of A is a coefficient list")
            cs = [_int(c, "A coefficient") % q for c in x[:n_u]]
            cells.append(tuple(cs + [0] * (n_u - len(cs))))
        rows.append(tuple(cells))
    weights = obj.get("weights")
    if weights is not None:
        if not isinstance(weights, list) or len(weights) != d:
            raise UsageError("weights must be a list of length d")
        weights = tuple(sorted(_int(w, "weight") for w in weights))
    cryst = obj.get("crystalline", False)
    if not isinstance(cryst, bool):
        raise UsageError("crystalline must be a boolean")
    flavor = obj.get("flavor", "crys")
    if flavor not in ("crys", "log"):
        raise UsageError("flavor must be 'crys' or 'log'")
    sen = obj.get("sen_operator")
    if sen is not None:
        if not isinstance(sen, list) or len(sen) != d or any(not isinstance(r, list) or len(r) != d for r in sen):
            raise UsageError("sen_operator must be d x d")
        sen = tuple(tuple(_int(c, "sen entry") % q for c in r) for r in sen)
    label = obj.get("label", "")
    if not isinstance(label, str):
        raise UsageError("label must be a string")
    return ModuleSpec(p, n_p, n_u, E, tuple(rows), weights, cryst, flavor, sen, label)


def dumps(obj) -> str:
    """Canonical text: sorted keys, fixed separators, trailing newline."""
    return json.dumps(obj, sort_keys=True, separators=(", ", ": "), ensure_ascii=False) + "\n"


def emit(spec: ModuleSpec) -> str:
    return dumps(spec.to_dict())


def emit_many(specs) -> str:
    return dumps([s.to_dict() for s in specs])


def parse(text: str) -> ModuleSpec:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON: {exc}") from None
    return from_dict(obj)


def parse_records(text: str) -> list:
    """Raw records from a file holding one object, a list, or {"modules": [...]}."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON: {exc}") from None
    if isinstance(obj, dict) and "modules" in obj and "A" not in obj:
        obj = obj["modules"]
    if isinstance(obj, dict):
        return [obj]
    if isinstance(obj, list):
        return obj
    raise UsageError("expected a module object or a list of them")


def load(path) -> list:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse_records(text)
