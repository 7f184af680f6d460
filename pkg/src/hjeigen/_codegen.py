"""Compile a HamiltonianSpec to a scalar numba function ``H(x1, x2, p1, p2)``.

Used by the time-marching oracle, where per-step numpy overhead dominates.
Unused coordinates are ignored in 1D.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numba

from . import expression as ex
from .hamiltonian import CatalogSource, ExpressionSource, HamiltonianSpec, SumSource


@numba.njit(cache=False)
def _r_tanh_inv(r):
    if r > 0.0:
        return r * math.tanh(1.0 / r)
    return 0.0


def _norm_src(dim: int, shift: str = "") -> str:
    if dim == 1:
        return f"abs(p0{shift.format(0)})"
    return f"math.sqrt((p0{shift.format(0)})**2 + (p1{shift.format(1)})**2)"


def _sinprod_src(dim: int) -> str:
    return " * ".join(f"math.sin(TWO_PI * x{i})" for i in range(dim))


def _catalog_src(src: CatalogSource, dim: int) -> str:
    k = dict(src.params)
    r = lambda v: repr(float(v))  # noqa: E731
    name = src.name
    if name == "quadratic+potential":
        return f"({_norm_src(dim)})**2 + {r(k['amp'])} * {_sinprod_src(dim)}"
    if name == "tanh":
        sigma = f"({r(k['sigma'])} + {r(k['sigma_osc'])} * math.sin(TWO_PI * x0 / {r(k['eps'])}))"
        return f"{sigma} * _r_tanh_inv({_norm_src(dim)} / {r(k['ps'])})"
    if name == "double-well":
        return f"(({_norm_src(dim)})**2 - 1.0)**2 - {r(k['amp'])} * ({_sinprod_src(dim)})**2"
    shift = " - " + r(k["b"]) + " * math.sin(TWO_PI * x{})"
    shifted = _norm_src(dim, shift)
    if name == "transport":
        return shifted
    if name == "saturated-transport":
        return f"min({shifted}, {r(k['cap'])})"
    if name == "capped-potential":
        return f"min({_norm_src(dim)}, {r(k['cap'])}) + {r(k['amp'])} * {_sinprod_src(dim)}"
    raise KeyError(name)


_FUNC_SRC = {"abs": "abs", "sqrt": "math.sqrt", "sin": "math.sin", "cos": "math.cos", "tanh": "math.tanh", "exp": "_exp"}


@numba.njit(cache=False)
def _exp(v):
    if v > 709.0:
        return math.inf
    return math.exp(v)


def _expr_src(node: ex.Node) -> str:
    if isinstance(node, ex.Const):
        return repr(float(node.value))
    if isinstance(node, ex.Var):
        return f"{node.kind}{node.index}"
    if isinstance(node, ex.Neg):
        return f"(-{_expr_src(node.operand)})"
    if isinstance(node, ex.BinOp):
        op = "**" if node.op == "^" else node.op
        if op == "/":
            return f"_div({_expr_src(node.left)}, {_expr_src(node.right)})"
        if op == "**":
            return f"_pow({_expr_src(node.left)}, {_expr_src(node.right)})"
        return f"({_expr_src(node.left)} {op} {_expr_src(node.right)})"
    args = ", ".join(_expr_src(a) for a in node.args)
    if node.func in ("min", "max"):
        return f"{node.func}({args})"
    if node.func == "sqrt":
        return f"_sqrt({args})"
    return f"{_FUNC_SRC[node.func]}({args})"


@numba.njit(cache=False)
def _div(a, b):
    if b == 0.0:
        return math.nan
    return a / b


@numba.njit(cache=False)
def _pow(a, b):
    if a < 0.0 and b != math.floor(b):
        return math.nan
    if a == 0.0 and b < 0.0:
        return math.nan
    return a**b


@numba.njit(cache=False)
def _sqrt(a):
    if a < 0.0:
        return math.nan
    return math.sqrt(a)


def source(h: HamiltonianSpec) -> str:
    src = h.source
    if isinstance(src, CatalogSource):
        return _catalog_src(src, h.dimension)
    if isinstance(src, ExpressionSource):
        return _expr_src(src.tree)
    assert isinstance(src, SumSource)
    return f"({source(src.base)}) + ({_expr_src(src.term)})"


@lru_cache(maxsize=64)
def _compile(body: str):
    namespace = {
        "math": math,
        "TWO_PI": 2.0 * math.pi,
        "_r_tanh_inv": _r_tanh_inv,
        "_exp": _exp,
        "_div": _div,
        "_pow": _pow,
        "_sqrt": _sqrt,
    }
    code = f"def H(x0, x1, p0, p1):\n    return {body}\n"
    exec(code, namespace)
    return numba.njit(cache=False)(namespace["H"])


def compile_scalar(h: HamiltonianSpec):
    return _compile(source(h))
