"""Single-trial associative memory over a modular sparse distributed code.

:class:`MemoryModel` composes the selection pipeline into three verbs:

``store``          select a code for the input (soft draw), embed the
                   mapping at full strength in one trial, optionally record
                   the (label, input, code) triple in the ledger
``retrieve``       same pipeline, no weight update; ``soft`` draws from the
                   win distributions, ``hard`` takes the per-CM argmax for a
                   deterministic best-match readout
``belief_update``  retrieve a code for the input, then report, for every
                   ledger item, the fraction of its code that is active —
                   a simultaneous likelihood readout over all stored items

The ledger is evaluation plumbing only: the selection pipeline never reads
it, so storage and retrieval cost is independent of how many items are
held.  Only the belief report's final loop walks the ledger.

Concurrency contract: a model is single-writer.  ``store`` mutates weights
and the model RNG and must be externally serialized; ``retrieve`` and
``belief_update`` with a caller-supplied RNG are read-only on model state
and may run concurrently with other readers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    CsaParams,
    CsaTrace,
    InputPattern,
    ModelGeometry,
    OpCounter,
    W_MAX_DEFAULT,
    WeightMatrix,
    apply_learning,
    code_intersection,
    compute_u,
    draw_winners,
    eta_for_familiarity,
    familiarity,
    hard_max_winners,
    mu_from_u,
    normalize_u,
    rho_from_mu,
)
from .errors import LedgerUnavailableError

RETRIEVAL_MODES = ("soft", "hard")


@dataclass(frozen=True)
class LedgerEntry:
    label: str
    pattern: InputPattern
    code: tuple[int, ...]


@dataclass(frozen=True)
class BeliefEntry:
    """Readout for one stored item against the current input."""

    label: str
    input_similarity: float
    code_intersection: int
    likelihood: float


@dataclass(frozen=True)
class BeliefReport:
    """Likelihoods of all stored items, read out from code intersections."""

    entries: tuple[BeliefEntry, ...]
    code: np.ndarray
    familiarity: float
    mode: str
    trace: CsaTrace = field(repr=False)

    def best(self) -> BeliefEntry:
        return max(self.entries, key=lambda e: e.likelihood)


class MemoryModel:
    """A coding field plus its weights, parameters, and seeded RNG."""

    def __init__(
        self,
        geometry: ModelGeometry,
        params: CsaParams | None = None,
        w_max: int = W_MAX_DEFAULT,
        seed: int = 0,
        enable_ledger: bool = False,
    ):
        self.geometry = geometry
        self.params = params if params is not None else CsaParams()
        self.weights = WeightMatrix(geometry.num_pixels, geometry.num_units, w_max)
        self.rng = np.random.default_rng(seed)
        self.ledger: list[LedgerEntry] | None = [] if enable_ledger else None
        self.op_counter = OpCounter()
        self.num_stored = 0

    @property
    def w_max(self) -> int:
        return self.weights.w_max

    def reseed(self, seed: int) -> None:
        self.rng = np.random.default_rng(seed)

    def _select(
        self, pattern: InputPattern, mode: str, rng: np.random.Generator
    ) -> tuple[np.ndarray, CsaTrace]:
        counter = self.op_counter
        u = compute_u(pattern, self.weights, self.geometry, counter)
        u_norm = normalize_u(u, self.geometry.num_active, self.w_max, counter)
        g = familiarity(u_norm, counter)
        eta = eta_for_familiarity(g, self.params, counter)
        mu = mu_from_u(u_norm, eta, self.params, counter)
        rho = rho_from_mu(mu, counter)
        if mode == "soft":
            code = draw_winners(rho, rng, counter)
        elif mode == "hard":
            code = hard_max_winners(u_norm, rng, counter)
        else:
            raise ValueError(f"unknown retrieval mode {mode!r}")
        trace = CsaTrace(u=u, u_norm=u_norm, mu=mu, rho=rho, familiarity=g, eta=eta)
        return code, trace

    def store(
        self, pattern: InputPattern, label: str | None = None
    ) -> tuple[np.ndarray, CsaTrace]:
        """Select a code for the input and learn the mapping in one trial.

        Rejects a pattern with the wrong active count before touching any
        state, so a failed store leaves the model unchanged.
        """
        self.geometry.validate_pattern(pattern)
        code, trace = self._select(pattern, "soft", self.rng)
        apply_learning(pattern, code, self.weights, self.geometry, self.op_counter)
        self.num_stored += 1
        if self.ledger is not None:
            name = label if label is not None else f"item-{self.num_stored}"
            self.ledger.append(LedgerEntry(name, pattern, tuple(int(c) for c in code)))
        return code, trace

    def retrieve(
        self,
        pattern: InputPattern,
        mode: str = "soft",
        rng: np.random.Generator | None = None,
    ) -> tuple[np.ndarray, CsaTrace]:
        """Run the selection pipeline without learning.

        Weights and ledger are untouched.  Pass ``rng`` to leave the model's
        own RNG state untouched as well (required for concurrent readers).
        """
        self.geometry.validate_pattern(pattern)
        if mode not in RETRIEVAL_MODES:
            raise ValueError(f"unknown retrieval mode {mode!r}")
        return self._select(pattern, mode, rng if rng is not None else self.rng)

    def belief_update(
        self,
        pattern: InputPattern,
        mode: str = "soft",
        rng: np.random.Generator | None = None,
    ) -> BeliefReport:
        """Retrieve a code, then read out every stored item's likelihood.

        Likelihood of item Y is |code(X) ∩ code(Y)| / Q; input similarity is
        reported alongside as |X ∩ Y| / S.  Requires the ledger (the report
        loop is the only part of the system that iterates stored items).
        """
        if self.ledger is None:
            raise LedgerUnavailableError(
                "belief_update requires a model built with enable_ledger=True"
            )
        if not self.ledger:
            raise LedgerUnavailableError("belief_update requires at least one stored item")
        code, trace = self.retrieve(pattern, mode=mode, rng=rng)
        q = self.geometry.num_cms
        s = self.geometry.num_active
        entries = []
        for entry in self.ledger:
            inter = code_intersection(code, np.asarray(entry.code))
            entries.append(
                BeliefEntry(
                    label=entry.label,
                    input_similarity=pattern.overlap(entry.pattern) / s,
                    code_intersection=inter,
                    likelihood=inter / q,
                )
            )
        return BeliefReport(
            entries=tuple(entries),
            code=code,
            familiarity=trace.familiarity,
            mode=mode,
            trace=trace,
        )

    def clone(self) -> "MemoryModel":
        """Deep copy: weights, RNG state, ledger, and counters."""
        other = MemoryModel.__new__(MemoryModel)
        other.geometry = self.geometry
        other.params = self.params
        other.weights = self.weights.copy()
        other.rng = np.random.default_rng()
        other.rng.bit_generator.state = self.rng.bit_generator.state
        other.ledger = list(self.ledger) if self.ledger is not None else None
        other.op_counter = self.op_counter.copy()
        other.num_stored = self.num_stored
        return other
