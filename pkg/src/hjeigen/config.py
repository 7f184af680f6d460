"""Run configuration: ``key = value`` files with '#' comments.

Every field except the Hamiltonian source has a default.  ``format_config``
echoes a fully explicit config that ``parse_config`` reads back unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import InputError
from .hamiltonian import CATALOG, DEFAULT_P_MAX, HamiltonianSpec, catalog, check_quasiconvexity, parse_hamiltonian

CATALOG_PARAMS = ("sigma", "sigma_osc", "ps", "eps", "amp", "b", "cap")
METHODS = ("auto", "lipschitz", "smooth")
CLAIMS = ("auto", "yes", "no")


def _pow2(v: int) -> int:
    if v < 8 or v & (v - 1):
        raise InputError(f"m must be >= 8 and a power of two, got {v}")
    return v


def _positive(v: float) -> float:
    if not v > 0:
        raise InputError(f"expected a positive number, got {v!r}")
    return v


@dataclass(frozen=True)
class RunConfig:
    ham: str | None = None
    catalog: str | None = None
    params: tuple[tuple[str, float], ...] = ()
    dim: int = 1
    m: int = 256
    tol: float = 1e-6
    method: str = "auto"
    seed: int = 0
    out: str | None = None
    pmax: float = DEFAULT_P_MAX
    T: float = 50.0
    theta: float | None = None
    trials: int = 10_000
    n_schedule: tuple[int, ...] = (5, 10, 20, 40, 80)
    quasiconvex: str = "auto"
    coercive: str = "auto"
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def validate(self, need_hamiltonian: bool = True) -> "RunConfig":
        if need_hamiltonian and (self.ham is None) == (self.catalog is None):
            if self.ham is None:
                raise InputError("missing Hamiltonian: give exactly one of 'ham' or 'catalog'")
            raise InputError("give only one of 'ham' or 'catalog'")
        if self.catalog is not None and self.catalog not in CATALOG:
            raise InputError(f"unknown catalog entry {self.catalog!r}; choose from {sorted(CATALOG)}")
        if self.params and self.catalog is None:
            raise InputError("catalog parameters given without 'catalog'")
        if self.dim not in (1, 2):
            raise InputError(f"dim must be 1 or 2, got {self.dim}")
        _pow2(self.m)
        _positive(self.tol)
        _positive(self.pmax)
        _positive(self.T)
        if self.theta is not None:
            _positive(self.theta)
        if self.trials < 1:
            raise InputError("trials must be >= 1")
        if self.method not in METHODS:
            raise InputError(f"method must be one of {METHODS}")
        for key in ("quasiconvex", "coercive"):
            if getattr(self, key) not in CLAIMS:
                raise InputError(f"{key} must be one of {CLAIMS}")
        if len(self.n_schedule) < 3 or list(self.n_schedule) != sorted(set(self.n_schedule)) or self.n_schedule[0] < 1:
            raise InputError("n_schedule needs >= 3 strictly increasing positive integers")
        return self

    def hamiltonian(self) -> HamiltonianSpec:
        """Build the HamiltonianSpec; 'auto' claims are decided by sampling (expressions only)."""
        self.validate()
        claims = {"yes": True, "no": False, "auto": None}
        if self.catalog is not None:
            h = catalog(self.catalog, self.dim, self.pmax, **dict(self.params))
            if claims[self.quasiconvex] is not None:
                h = replace(h, claims_quasiconvex=claims[self.quasiconvex])
            if claims[self.coercive] is not None:
                h = replace(h, claims_coercive=claims[self.coercive])
            return h
        h = parse_hamiltonian(self.ham, self.dim, p_max=self.pmax, quasiconvex=False, coercive=claims[self.coercive])
        qc = claims[self.quasiconvex]
        if qc is None:
            qc = check_quasiconvexity(h, self.trials, self.seed).passed
        return replace(h, claims_quasiconvex=qc)


# ---------------------------------------------------------------------------
# Parsing and echo
# ---------------------------------------------------------------------------

def _opt_float(s: str) -> float | None:
    return None if s.lower() == "none" else float(s)


def _opt_str(s: str) -> str | None:
    return None if s.lower() == "none" else s


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(t) for t in s.split(",") if t.strip())


_PARSERS = {
    "ham": _opt_str,
    "catalog": _opt_str,
    "dim": int,
    "m": int,
    "tol": float,
    "method": str,
    "seed": int,
    "out": _opt_str,
    "pmax": float,
    "T": float,
    "theta": _opt_float,
    "trials": int,
    "n_schedule": _ints,
    "quasiconvex": str,
    "coercive": str,
}


def parse_config(text: str, *, need_hamiltonian: bool = True) -> RunConfig:
    values: dict = {}
    params: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in CATALOG_PARAMS:
            parser = float
        elif key in _PARSERS:
            parser = _PARSERS[key]
        else:
            raise InputError(f"line {lineno}: unknown key {key!r}")
        if not value:
            raise InputError(f"line {lineno}: empty value for {key!r}")
        try:
            parsed = parser(value)
        except ValueError:
            raise InputError(f"line {lineno}: malformed value for {key!r}: {value!r}") from None
        if key in CATALOG_PARAMS:
            params[key] = parsed
        else:
            values[key] = parsed
    cfg = RunConfig(**values, params=tuple(sorted(params.items())))
    return cfg.validate(need_hamiltonian)


def load_config(path: str | Path, *, need_hamiltonian: bool = True) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, need_hamiltonian=need_hamiltonian)


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ",".join(str(t) for t in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_config(cfg: RunConfig) -> str:
    """Fully explicit echo; ``parse_config(format_config(c)) == c``."""
    lines = []
    for f in fields(cfg):
        if f.name in ("params", "extra"):
            continue
        lines.append(f"{f.name} = {_fmt(getattr(cfg, f.name))}")
    lines += [f"{k} = {v!r}" for k, v in cfg.params]
    return "\n".join(lines) + "\n"


def config_dict(cfg: RunConfig) -> dict:
    d = {f.name: getattr(cfg, f.name) for f in fields(cfg) if f.name not in ("params", "extra")}
    d["n_schedule"] = list(cfg.n_schedule)
    d["params"] = dict(cfg.params)
    return d


def merge(cfg: RunConfig, overrides: dict) -> RunConfig:
    """Apply argv overrides (None means 'not given')."""
    params = dict(cfg.params)
    plain = {}
    for k, v in overrides.items():
        if v is None:
            continue
        if k in CATALOG_PARAMS:
            params[k] = float(v)
        else:
            plain[k] = v
    if "ham" in plain and cfg.catalog is not None and "catalog" not in plain:
        plain["catalog"] = None
        params = {}
    if "catalog" in plain and cfg.ham is not None and "ham" not in plain:
        plain["ham"] = None
    return replace(cfg, **plain, params=tuple(sorted(params.items())))
