"""Exception hierarchy.

Everything a caller can trigger with bad input derives from ``InputError`` so
the CLI can map it to exit code 2.
"""

from __future__ import annotations


class InputError(ValueError):
    """Invalid user input (expressions, configs, preconditions)."""


class ExpressionSyntaxError(InputError):
    def __init__(self, message: str, position: int):
        super().__init__(f"syntax error at position {position}: {message}")
        self.position = position


class UnknownIdentifierError(InputError):
    def __init__(self, name: str, position: int, message: str | None = None):
        super().__init__(message or f"unknown identifier {name!r} at position {position}")
        self.name = name
        self.position = position


class EvaluationDomainError(ArithmeticError):
    """A Hamiltonian evaluated to a non-finite value."""

    def __init__(self, node: str):
        super().__init__(f"non-finite value produced by node {node}")
        self.node = node


class PreconditionError(InputError):
    pass


class InfeasibleError(RuntimeError):
    """Minimax bisection found its upper level infeasible."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DivergenceError(RuntimeError):
    def __init__(self, message: str, trace: list[float] | None = None):
        super().__init__(message)
        self.trace = trace or []


class BlowUpError(RuntimeError):
    def __init__(self, step: int):
        super().__init__(f"non-finite state at time step {step}")
        self.step = step
