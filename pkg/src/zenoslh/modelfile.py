"""Declarative model files.

A model file is a JSON document with up to six sections::

    {
      "name": "kerr_qubit",
      "spaces": {"mode": {"kind": "fock", "n_max": 6}},
      "parameters": {"chi0": 1.0, "alpha": [0.2, 0.0]},
      "operators": {"a": "annihilator(mode)", "num": "adjoint(a)*a"},
      "family": {
        "channels": 2,
        "S": [["1", "0"], ["0", "1"]],
        "L1": ["0", "0"],
        "L0": ["sqrt(kappa1)*a", "sqrt(kappa2)*a"],
        "H2": "chi0*adjoint(a)*adjoint(a)*a*a",
        "H1": "0",
        "H0": "Delta*num - i*sqrt(kappa1)*(alpha*adjoint(a) - conj(alpha)*a)"
      },
      "subspace": {"basis": [[0], [1]]}
    }

Spaces declare named tensor factors in order: kind ``qubit`` or ``spin``
(dimension 2), ``level`` with ``dim``, ``fock`` with ``n_max``.
Parameters are named scalars; complex values are written as [re, im]
pairs.

Operator expressions form a restricted declarative language with no
loops and no user functions.  Primitives: ``annihilator(factor)``,
``pauli(factor, axis)``, ``ketbra(factor, i, j)``, ``identity(factor)``,
``tensor(A, B)``, ``adjoint(A)``, plus the scalar helpers ``sqrt(x)``
and ``conj(x)`` and the imaginary unit ``i``.  ``*`` multiplies scalars
and operators (operator products align factor coverage automatically),
``/`` divides by scalars, ``+``/``-`` combine operators.  Operators
named earlier in the section may be referenced later.  Family slots take
the same expressions; a bare scalar c is coerced to c * identity on the
full space.

The ``subspace`` section is either ``"auto"`` (compute the split from
the kernel of the k^2 drift coefficient), or a ``basis`` list whose
entries are flat indices or per-factor index tuples.  Omitting the
section means ``"auto"``.
"""

from __future__ import annotations

import cmath
import hashlib
import json
import re
from dataclasses import dataclass

import numpy as np

from .elimination import ScaledSLHFamily, find_zeno_subspace
from .operators import HilbertSpace, Operator, ZenoSplit

__all__ = [
    "ModelParseError",
    "ModelDocument",
    "parse_model",
    "load_model",
    "canonical_text",
    "model_digest",
]

_RESERVED = {
    "annihilator",
    "pauli",
    "ketbra",
    "identity",
    "tensor",
    "adjoint",
    "sqrt",
    "conj",
    "i",
}

_SPACE_KINDS = ("qubit", "spin", "level", "fock")


class ModelParseError(ValueError):
    """Model file rejected, with a location when one is available."""


# ---------------------------------------------------------------------------
# expression language
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<sym>[()+\-*/,])"
    r")"
)


def _tokenize(text: str, where: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            col = len(text) - len(stripped) + 1
            raise ModelParseError(f"{where}: column {col}: unexpected character {stripped[0]!r}")
        if m.lastgroup == "num":
            out.append(("num", float(m.group("num")), m.start("num") + 1))
        elif m.lastgroup == "name":
            out.append(("name", m.group("name"), m.start("name") + 1))
        else:
            out.append(("sym", m.group("sym"), m.start("sym") + 1))
        pos = m.end()
    out.append(("end", None, len(text) + 1))
    return out


class _Parser:
    """Recursive-descent parser producing a small tuple AST."""

    def __init__(self, text: str, where: str):
        self.tokens = _tokenize(text, where)
        self.idx = 0
        self.where = where

    def peek(self):
        return self.tokens[self.idx]

    def advance(self):
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ModelParseError(f"{self.where}: column {tok[2]}: {msg}")

    def expect_sym(self, sym):
        kind, val, _ = self.peek()
        if kind != "sym" or val != sym:
            self.fail(f"expected {sym!r}")
        return self.advance()

    def parse(self):
        node = self.parse_sum()
        if self.peek()[0] != "end":
            self.fail("unexpected trailing input")
        return node

    def parse_sum(self):
        node = self.parse_product()
        while self.peek()[0] == "sym" and self.peek()[1] in "+-":
            _, op, pos = self.advance()
            rhs = self.parse_product()
            node = ("bin", op, node, rhs, pos)
        return node

    def parse_product(self):
        node = self.parse_unary()
        while self.peek()[0] == "sym" and self.peek()[1] in "*/":
            _, op, pos = self.advance()
            rhs = self.parse_unary()
            node = ("bin", op, node, rhs, pos)
        return node

    def parse_unary(self):
        kind, val, pos = self.peek()
        if kind == "sym" and val == "-":
            self.advance()
            return ("neg", self.parse_unary(), pos)
        return self.parse_atom()

    def parse_atom(self):
        kind, val, pos = self.advance()
        if kind == "num":
            return ("num", val, pos)
        if kind == "name":
            if self.peek()[0] == "sym" and self.peek()[1] == "(":
                self.advance()
                args = []
                if not (self.peek()[0] == "sym" and self.peek()[1] == ")"):
                    args.append(self.parse_sum())
                    while self.peek()[0] == "sym" and self.peek()[1] == ",":
                        self.advance()
                        args.append(self.parse_sum())
                self.expect_sym(")")
                return ("call", val, tuple(args), pos)
            return ("name", val, pos)
        if kind == "sym" and val == "(":
            node = self.parse_sum()
            self.expect_sym(")")
            return node
        self.fail("expected a value", ("", "", pos))


@dataclass(frozen=True)
class _Tagged:
    """Matrix covering an ordered subset of the declared factors."""

    mat: np.ndarray
    factors: tuple


class _Evaluator:
    def __init__(self, factor_order, factor_dims, factor_kinds, params, where):
        self.order = tuple(factor_order)
        self.dims = dict(factor_dims)
        self.kinds = dict(factor_kinds)
        self.params = params
        self.named = {}
        self.where = where

    def fail(self, pos, msg):
        raise ModelParseError(f"{self.where}: column {pos}: {msg}")

    # -- alignment ---------------------------------------------------------

    def embed(self, val: _Tagged, target) -> _Tagged:
        target = tuple(target)
        if val.factors == target:
            return val
        missing = [f for f in target if f not in val.factors]
        pad = 1
        for f in missing:
            pad *= self.dims[f]
        mat = np.kron(val.mat, np.eye(pad, dtype=complex))
        legs = list(val.factors) + missing
        dims_legs = [self.dims[f] for f in legs]
        perm = [legs.index(f) for f in target]
        nl = len(legs)
        t = mat.reshape(dims_legs + dims_legs)
        t = t.transpose([*perm, *[nl + p for p in perm]])
        d = int(np.prod([self.dims[f] for f in target]))
        return _Tagged(t.reshape(d, d), target)

    def align(self, a: _Tagged, b: _Tagged):
        union = tuple(f for f in self.order if f in a.factors or f in b.factors)
        return self.embed(a, union), self.embed(b, union)

    def to_full_operator(self, val, pos) -> Operator:
        space = HilbertSpace(tuple(self.dims[f] for f in self.order))
        if isinstance(val, _Tagged):
            full = self.embed(val, self.order)
            return Operator(space, full.mat)
        return Operator(space, complex(val) * np.eye(space.dim, dtype=complex))

    # -- evaluation --------------------------------------------------------

    def eval(self, node):
        tag = node[0]
        if tag == "num":
            return complex(node[1])
        if tag == "name":
            return self.lookup(node[1], node[2])
        if tag == "neg":
            v = self.eval(node[1])
            return _Tagged(-v.mat, v.factors) if isinstance(v, _Tagged) else -v
        if tag == "bin":
            return self.eval_bin(node)
        if tag == "call":
            return self.eval_call(node)
        raise AssertionError(f"unknown node {tag}")

    def lookup(self, name, pos):
        if name == "i":
            return 1j
        if name in self.params:
            return self.params[name]
        if name in self.named:
            return self.named[name]
        if name in self.dims:
            self.fail(pos, f"factor name {name!r} used as a value")
        self.fail(pos, f"unresolved reference {name!r}")

    def eval_bin(self, node):
        _, op, lhs_n, rhs_n, pos = node
        lhs = self.eval(lhs_n)
        rhs = self.eval(rhs_n)
        l_op = isinstance(lhs, _Tagged)
        r_op = isinstance(rhs, _Tagged)
        if op in "+-":
            if l_op != r_op:
                self.fail(pos, "cannot add a scalar and an operator")
            if not l_op:
                return lhs + rhs if op == "+" else lhs - rhs
            a, b = self.align(lhs, rhs)
            m = a.mat + b.mat if op == "+" else a.mat - b.mat
            return _Tagged(m, a.factors)
        if op == "*":
            if l_op and r_op:
                a, b = self.align(lhs, rhs)
                return _Tagged(a.mat @ b.mat, a.factors)
            if l_op:
                return _Tagged(lhs.mat * rhs, lhs.factors)
            if r_op:
                return _Tagged(rhs.mat * lhs, rhs.factors)
            return lhs * rhs
        if op == "/":
            if r_op:
                self.fail(pos, "cannot divide by an operator")
            if rhs == 0:
                self.fail(pos, "division by zero")
            if l_op:
                return _Tagged(lhs.mat / rhs, lhs.factors)
            return lhs / rhs
        raise AssertionError(op)

    def factor_arg(self, args, idx, fname, pos):
        if len(args) <= idx or args[idx][0] != "name" or args[idx][1] not in self.dims:
            self.fail(pos, f"{fname} expects a declared factor name as argument {idx + 1}")
        return args[idx][1]

    def int_arg(self, args, idx, fname, pos):
        if len(args) <= idx or args[idx][0] != "num" or args[idx][1] != int(args[idx][1]):
            self.fail(pos, f"{fname} expects an integer as argument {idx + 1}")
        return int(args[idx][1])

    def eval_call(self, node):
        _, fname, args, pos = node

        def arity(n):
            if len(args) != n:
                self.fail(pos, f"{fname} takes {n} argument(s), got {len(args)}")

        if fname == "annihilator":
            arity(1)
            f = self.factor_arg(args, 0, fname, pos)
            if self.kinds[f] != "fock":
                self.fail(pos, f"annihilator expects a fock factor, {f!r} is {self.kinds[f]!r}")
            d = self.dims[f]
            m = np.zeros((d, d), dtype=complex)
            for n in range(1, d):
                m[n - 1, n] = np.sqrt(n)
            return _Tagged(m, (f,))
        if fname == "pauli":
            arity(2)
            f = self.factor_arg(args, 0, fname, pos)
            if self.dims[f] != 2:
                self.fail(pos, f"pauli needs a dimension-2 factor, {f!r} has dim {self.dims[f]}")
            if args[1][0] != "name" or args[1][1] not in ("x", "y", "z"):
                self.fail(pos, "pauli axis must be x, y or z")
            from .operators import pauli as _pauli

            return _Tagged(_pauli(args[1][1]).mat, (f,))
        if fname == "ketbra":
            arity(3)
            f = self.factor_arg(args, 0, fname, pos)
            d = self.dims[f]
            ii = self.int_arg(args, 1, fname, pos)
            jj = self.int_arg(args, 2, fname, pos)
            if not (0 <= ii < d and 0 <= jj < d):
                self.fail(pos, f"ketbra indices ({ii}, {jj}) out of range for dim {d}")
            m = np.zeros((d, d), dtype=complex)
            m[ii, jj] = 1.0
            return _Tagged(m, (f,))
        if fname == "identity":
            arity(1)
            f = self.factor_arg(args, 0, fname, pos)
            return _Tagged(np.eye(self.dims[f], dtype=complex), (f,))
        if fname == "tensor":
            arity(2)
            a = self.eval(args[0])
            b = self.eval(args[1])
            if not (isinstance(a, _Tagged) and isinstance(b, _Tagged)):
                self.fail(pos, "tensor expects two operators")
            if set(a.factors) & set(b.factors):
                self.fail(pos, "tensor factors overlap")
            return _Tagged(np.kron(a.mat, b.mat), a.factors + b.factors)
        if fname == "adjoint":
            arity(1)
            a = self.eval(args[0])
            if not isinstance(a, _Tagged):
                self.fail(pos, "adjoint expects an operator; use conj for scalars")
            return _Tagged(a.mat.conj().T, a.factors)
        if fname == "sqrt":
            arity(1)
            a = self.eval(args[0])
            if isinstance(a, _Tagged):
                self.fail(pos, "sqrt expects a scalar")
            return cmath.sqrt(a)
        if fname == "conj":
            arity(1)
            a = self.eval(args[0])
            if isinstance(a, _Tagged):
                self.fail(pos, "conj expects a scalar")
            return complex(a).conjugate()
        self.fail(pos, f"unknown primitive {fname!r}")


# ---------------------------------------------------------------------------
# document assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelDocument:
    """Parsed, validated model: resolved operators plus the scaled family."""

    name: str
    space: HilbertSpace
    factor_names: tuple
    parameters: dict
    operators: dict
    family: ScaledSLHFamily
    zeno_indices: tuple | None
    raw: dict

    @property
    def auto_subspace(self) -> bool:
        return self.zeno_indices is None

    def split(self) -> ZenoSplit:
        """The declared split, or the kernel-derived one for "auto"."""
        if self.zeno_indices is not None:
            return ZenoSplit.from_indices(self.space, self.zeno_indices)
        return find_zeno_subspace(self.family)


def _require(cond, msg):
    if not cond:
        raise ModelParseError(msg)


def _parse_scalar(name, value):
    if isinstance(value, (int, float)):
        return complex(value)
    if (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(x, (int, float)) for x in value)
    ):
        return complex(value[0], value[1])
    raise ModelParseError(f"parameters.{name}: expected a number or [re, im] pair")


def _parse_spaces(spaces):
    _require(isinstance(spaces, dict) and spaces, "spaces: need at least one named factor")
    names, dims, kinds = [], {}, {}
    for name, decl in spaces.items():
        _require(
            isinstance(name, str) and re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", name),
            f"spaces: invalid factor name {name!r}",
        )
        _require(name not in _RESERVED, f"spaces: factor name {name!r} is reserved")
        _require(isinstance(decl, dict) and "kind" in decl, f"spaces.{name}: need a kind")
        kind = decl["kind"]
        _require(kind in _SPACE_KINDS, f"spaces.{name}: unknown kind {kind!r}")
        extra = set(decl) - {"kind", "dim", "n_max"}
        _require(not extra, f"spaces.{name}: unknown keys {sorted(extra)}")
        if kind in ("qubit", "spin"):
            dim = 2
        elif kind == "level":
            dim = decl.get("dim")
            _require(isinstance(dim, int) and dim >= 2, f"spaces.{name}: level needs dim >= 2")
        else:
            dim = decl.get("n_max")
            _require(isinstance(dim, int) and dim >= 2, f"spaces.{name}: fock needs n_max >= 2")
        names.append(name)
        dims[name] = dim
        kinds[name] = kind
    return tuple(names), dims, kinds


def _eval_slot(ev: _Evaluator, text, where) -> Operator:
    _require(isinstance(text, str), f"{where}: expected an expression string")
    node = _Parser(text, where).parse()
    ev.where = where
    val = ev.eval(node)
    return ev.to_full_operator(val, 1)


def parse_model(text: str) -> ModelDocument:
    """Parse and validate a model document; raises ModelParseError."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelParseError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    _require(isinstance(raw, dict), "model document must be a JSON object")
    known = {"name", "spaces", "parameters", "operators", "family", "subspace"}
    extra = set(raw) - known
    _require(not extra, f"unknown top-level sections {sorted(extra)}")
    _require("spaces" in raw, "missing required section: spaces")
    _require("family" in raw, "missing required section: family")

    name = raw.get("name", "model")
    _require(isinstance(name, str), "name must be a string")
    factor_names, dims, kinds = _parse_spaces(raw["spaces"])

    params = {}
    for pname, pval in (raw.get("parameters") or {}).items():
        _require(pname not in _RESERVED, f"parameters: name {pname!r} is reserved")
        _require(pname not in dims, f"parameters: name {pname!r} collides with a factor")
        params[pname] = _parse_scalar(pname, pval)

    ev = _Evaluator(factor_names, dims, kinds, params, "operators")
    operators = {}
    for oname, expr in (raw.get("operators") or {}).items():
        _require(oname not in _RESERVED, f"operators: name {oname!r} is reserved")
        _require(oname not in dims, f"operators: name {oname!r} collides with a factor")
        _require(oname not in params, f"operators: name {oname!r} collides with a parameter")
        _require(isinstance(expr, str), f"operators.{oname}: expected an expression string")
        node = _Parser(expr, f"operators.{oname}").parse()
        ev.where = f"operators.{oname}"
        val = ev.eval(node)
        if not isinstance(val, _Tagged):
            raise ModelParseError(f"operators.{oname}: expression is a scalar, not an operator")
        ev.named[oname] = val
        operators[oname] = ev.to_full_operator(val, 1)

    fam_raw = raw["family"]
    _require(isinstance(fam_raw, dict), "family: expected an object")
    missing = [k for k in ("channels", "S", "L1", "L0", "H2", "H1", "H0") if k not in fam_raw]
    _require(not missing, f"family: missing slots {missing}")
    extra = set(fam_raw) - {"channels", "S", "L1", "L0", "H2", "H1", "H0"}
    _require(not extra, f"family: unknown slots {sorted(extra)}")
    n = fam_raw["channels"]
    _require(isinstance(n, int) and n >= 1, "family.channels must be a positive integer")

    s_rows = fam_raw["S"]
    _require(
        isinstance(s_rows, list) and len(s_rows) == n and all(
            isinstance(r, list) and len(r) == n for r in s_rows
        ),
        f"family.S must be an {n} x {n} array of expressions",
    )
    s = tuple(
        tuple(_eval_slot(ev, s_rows[j][k], f"family.S[{j}][{k}]") for k in range(n))
        for j in range(n)
    )
    for slot in ("L1", "L0"):
        _require(
            isinstance(fam_raw[slot], list) and len(fam_raw[slot]) == n,
            f"family.{slot} must list {n} expressions",
        )
    l1 = tuple(_eval_slot(ev, fam_raw["L1"][j], f"family.L1[{j}]") for j in range(n))
    l0 = tuple(_eval_slot(ev, fam_raw["L0"][j], f"family.L0[{j}]") for j in range(n))
    h2 = _eval_slot(ev, fam_raw["H2"], "family.H2")
    h1 = _eval_slot(ev, fam_raw["H1"], "family.H1")
    h0 = _eval_slot(ev, fam_raw["H0"], "family.H0")
    try:
        family = ScaledSLHFamily(s, l1, l0, h2, h1, h0)
    except ValueError as e:
        raise ModelParseError(f"family: {e}") from None

    space = HilbertSpace(tuple(dims[f] for f in factor_names))
    zeno_indices = _parse_subspace(raw.get("subspace"), factor_names, dims, space)

    return ModelDocument(
        name=name,
        space=space,
        factor_names=factor_names,
        parameters=params,
        operators=operators,
        family=family,
        zeno_indices=zeno_indices,
        raw=raw,
    )


def _parse_subspace(sub, factor_names, dims, space):
    if sub is None or sub == "auto":
        return None
    _require(
        isinstance(sub, dict) and set(sub) == {"basis"},
        'subspace: expected "auto" or {"basis": [...]}',
    )
    basis = sub["basis"]
    _require(isinstance(basis, list) and basis, "subspace.basis: need at least one vector")
    shape = tuple(dims[f] for f in factor_names)
    out = []
    for entry in basis:
        if isinstance(entry, int):
            _require(0 <= entry < space.dim, f"subspace.basis: index {entry} out of range")
            out.append(entry)
        elif isinstance(entry, list) and all(isinstance(x, int) for x in entry):
            _require(
                len(entry) == len(factor_names),
                f"subspace.basis: need one index per factor ({len(factor_names)})",
            )
            for x, d in zip(entry, shape):
                _require(0 <= x < d, f"subspace.basis: factor index {x} out of range")
            out.append(int(np.ravel_multi_index(tuple(entry), shape)))
        else:
            raise ModelParseError("subspace.basis: entries must be ints or index tuples")
    _require(len(set(out)) == len(out), "subspace.basis: duplicate basis vectors")
    return tuple(out)


def load_model(path) -> ModelDocument:
    with open(path, "r", encoding="utf-8") as f:
        return parse_model(f.read())


def canonical_text(doc: ModelDocument) -> str:
    """Canonical serialization of the source document (sorted keys)."""
    return json.dumps(doc.raw, sort_keys=True, separators=(",", ":"))


def model_digest(doc: ModelDocument) -> str:
    return "sha256:" + hashlib.sha256(canonical_text(doc).encode("utf-8")).hexdigest()
