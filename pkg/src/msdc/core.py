"""Domain types and the fixed-time code selection pipeline.

A coding field is ``Q`` winner-take-all competitive modules (CMs) of ``K``
binary units each, fully connected to a binary pixel grid through a binary
weight matrix (weight quantum ``w_max``, 127 by convention, so a set weight
reads as 127 and an unset one as 0).  A code names exactly one winning unit
per CM.  Unit ``k`` of CM ``q`` occupies flat column ``q * K + k`` of the
weight matrix.

Code selection runs a fixed sequence of array steps:

``u``     raw input summation per unit (total weight from active pixels)
``U``     ``u`` normalized into [0, 1] by ``S * w_max``
``G``     familiarity: the mean over CMs of the per-CM max of ``U``
``eta``   noise control: the ceiling of the win-weight transform; 0 for a
          totally novel input, rising toward ``eta_max`` with familiarity
``mu``    per-unit relative win weight, a sigmoid of ``U`` with floor 1 and
          ceiling ``1 + eta`` (flat when ``eta`` is 0)
``rho``   per-CM win probabilities (``mu`` normalized within each CM)
draw      one winner per CM: a categorical draw from ``rho`` (soft) or the
          argmax of ``U`` with uniform random tie-break (hard)

Low familiarity therefore flattens the win distributions (novel inputs get
nearly random codes) and high familiarity sharpens them (familiar inputs
reactivate the units that already hold them), which is what makes more
similar inputs land on more highly intersecting codes.

No step iterates over previously stored items, so the work per trial is a
pure function of the geometry; thread an :class:`OpCounter` through the
pipeline to measure that.  Randomness is consumed in a fixed, documented
order: exactly one uniform draw per CM, CM 0 first.  Identical (weights,
input, RNG state) reproduces the code and trace bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterable

import numpy as np

from .errors import GeometryError, PatternError

W_MAX_DEFAULT = 127

# np.exp overflows float64 just above 709; clipping the argument keeps the
# sigmoid exact in float64 wherever it is distinguishable from its limits.
_EXP_CLIP = 700.0


@dataclass(frozen=True)
class ModelGeometry:
    """Fixed shape of one model instance.

    ``num_active`` (S) is the number of active pixels every input pattern
    must carry; ``num_cms`` (Q) and ``units_per_cm`` (K) shape the coding
    field.
    """

    input_width: int
    input_height: int
    num_active: int
    num_cms: int
    units_per_cm: int

    def __post_init__(self):
        for f in fields(self):
            v = int(getattr(self, f.name))
            if v < 1:
                raise GeometryError(f"{f.name} must be a positive integer, got {v}")
            object.__setattr__(self, f.name, v)
        if self.num_active > self.num_pixels:
            raise GeometryError(
                f"num_active={self.num_active} exceeds the "
                f"{self.num_pixels}-pixel input grid"
            )

    @property
    def num_pixels(self) -> int:
        return self.input_width * self.input_height

    @property
    def num_units(self) -> int:
        return self.num_cms * self.units_per_cm

    def validate_pattern(self, pattern: "InputPattern") -> None:
        """Reject patterns whose active count or indices do not fit."""
        if len(pattern.active) != self.num_active:
            raise PatternError(
                f"pattern has {len(pattern.active)} active pixels, "
                f"expected exactly {self.num_active}"
            )
        if pattern.active and pattern.active[-1] >= self.num_pixels:
            raise PatternError(
                f"pixel index {pattern.active[-1]} outside "
                f"{self.input_width}x{self.input_height} grid"
            )


@dataclass(frozen=True)
class InputPattern:
    """A binary input: the set of active pixel indices, row-major."""

    active: tuple[int, ...]

    def __post_init__(self):
        cells = tuple(sorted(int(p) for p in self.active))
        if len(set(cells)) != len(cells):
            raise PatternError("duplicate pixel indices in pattern")
        if cells and cells[0] < 0:
            raise PatternError("negative pixel index in pattern")
        object.__setattr__(self, "active", cells)

    @classmethod
    def from_indices(cls, indices: Iterable[int]) -> "InputPattern":
        return cls(tuple(indices))

    @classmethod
    def from_grid(cls, text: str) -> "InputPattern":
        """Parse a grid of '0'/'1' characters, one row per line."""
        rows = [line.strip() for line in text.splitlines() if line.strip()]
        if not rows:
            raise PatternError("empty pattern grid")
        width = len(rows[0])
        active = []
        for r, row in enumerate(rows):
            if len(row) != width:
                raise PatternError(f"row {r} has length {len(row)}, expected {width}")
            for c, ch in enumerate(row):
                if ch == "1":
                    active.append(r * width + c)
                elif ch != "0":
                    raise PatternError(f"invalid character {ch!r} in pattern grid")
        return cls(tuple(active))

    def to_grid(self, width: int, height: int) -> str:
        on = set(self.active)
        return "\n".join(
            "".join("1" if r * width + c in on else "0" for c in range(width))
            for r in range(height)
        )

    def overlap(self, other: "InputPattern") -> int:
        """Number of active pixels shared with ``other``."""
        return len(set(self.active) & set(other.active))


class WeightMatrix:
    """Binary weights from input pixels to coding units.

    Stored as a 0/1 bit plane of shape (num_pixels, num_units); a set bit
    reads as ``w_max``.  Bits only ever go 0 -> 1 (learning never clears a
    weight), so the matrix is monotone over a model's lifetime.
    """

    __slots__ = ("bits", "w_max")

    def __init__(
        self,
        num_pixels: int,
        num_units: int,
        w_max: int = W_MAX_DEFAULT,
        bits: np.ndarray | None = None,
    ):
        if int(w_max) < 1:
            raise GeometryError(f"w_max must be a positive integer, got {w_max}")
        if bits is None:
            bits = np.zeros((num_pixels, num_units), dtype=np.uint8)
        else:
            bits = np.ascontiguousarray(bits, dtype=np.uint8)
            if bits.shape != (num_pixels, num_units):
                raise GeometryError(
                    f"weight bits shape {bits.shape} != ({num_pixels}, {num_units})"
                )
            if bits.max(initial=0) > 1:
                raise GeometryError("weight bits must be 0 or 1")
        self.bits = bits
        self.w_max = int(w_max)

    @property
    def num_pixels(self) -> int:
        return self.bits.shape[0]

    @property
    def num_units(self) -> int:
        return self.bits.shape[1]

    def values(self) -> np.ndarray:
        """The weights as integers in {0, w_max}."""
        return self.bits.astype(np.int64) * self.w_max

    def set_count(self) -> int:
        return int(self.bits.sum())

    def copy(self) -> "WeightMatrix":
        return WeightMatrix(
            self.num_pixels, self.num_units, self.w_max, bits=self.bits.copy()
        )


@dataclass(frozen=True)
class CsaParams:
    """Parameters of the familiarity-controlled win-weight transform.

    ``eta_max``     ceiling of the noise-control value at familiarity 1; the
                    win-weight range is then [1, 1 + eta_max]
    ``steepness``   slope of the sigmoid from normalized summation to win
                    weight
    ``midpoint``    normalized summation at the sigmoid's half rise
    ``g_floor``     familiarity at or below which the transform stays flat
                    (noise control pinned to 0)
    ``g_exponent``  curvature of the noise-control ramp between ``g_floor``
                    and 1
    """

    eta_max: float = 299.0
    steepness: float = 28.0
    midpoint: float = 0.5
    g_floor: float = 0.0
    g_exponent: float = 1.0

    def __post_init__(self):
        if not self.eta_max > 0:
            raise GeometryError(f"eta_max must be positive, got {self.eta_max}")
        if not self.steepness > 0:
            raise GeometryError(f"steepness must be positive, got {self.steepness}")
        if not 0.0 <= self.midpoint <= 1.0:
            raise GeometryError(f"midpoint must lie in [0, 1], got {self.midpoint}")
        if not 0.0 <= self.g_floor < 1.0:
            raise GeometryError(f"g_floor must lie in [0, 1), got {self.g_floor}")
        if not self.g_exponent > 0:
            raise GeometryError(f"g_exponent must be positive, got {self.g_exponent}")


@dataclass
class OpCounter:
    """Tally of the elementary work done by the selection pipeline.

    Every pipeline step adds the size of the arrays it actually touched, so
    the totals measure work performed, not a formula.  For a fixed geometry
    the totals are identical for every trial regardless of how many items
    the model already stores; the scaling benchmark asserts exactly that.
    """

    weight_reads: int = 0
    element_ops: int = 0
    sigmoid_evals: int = 0
    rng_draws: int = 0
    weight_writes: int = 0

    def total(self) -> int:
        return (
            self.weight_reads
            + self.element_ops
            + self.sigmoid_evals
            + self.rng_draws
            + self.weight_writes
        )

    def as_dict(self) -> dict[str, int]:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["total"] = self.total()
        return d

    def reset(self) -> None:
        for f in fields(self):
            setattr(self, f.name, 0)

    def copy(self) -> "OpCounter":
        return OpCounter(**{f.name: getattr(self, f.name) for f in fields(self)})


@dataclass(frozen=True)
class CsaTrace:
    """Per-trial diagnostics: the (Q, K) charts of one selection pass."""

    u: np.ndarray
    u_norm: np.ndarray
    mu: np.ndarray
    rho: np.ndarray
    familiarity: float
    eta: float

    def to_json_dict(self) -> dict:
        return {
            "familiarity": self.familiarity,
            "eta": self.eta,
            "u": self.u.tolist(),
            "u_norm": self.u_norm.tolist(),
            "mu": self.mu.tolist(),
            "rho": self.rho.tolist(),
        }


def validate_code(code: np.ndarray, geometry: ModelGeometry) -> np.ndarray:
    """Check a winner vector: length Q, each entry in [0, K)."""
    code = np.asarray(code, dtype=np.int64)
    if code.shape != (geometry.num_cms,):
        raise GeometryError(
            f"code has shape {code.shape}, expected ({geometry.num_cms},)"
        )
    if code.size and (code.min() < 0 or code.max() >= geometry.units_per_cm):
        raise GeometryError("code entry outside [0, units_per_cm)")
    return code


def code_intersection(a: np.ndarray, b: np.ndarray) -> int:
    """Number of CMs in which two codes picked the same winner."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise GeometryError(f"code shapes differ: {a.shape} vs {b.shape}")
    return int((a == b).sum())


def compute_u(
    pattern: InputPattern,
    weights: WeightMatrix,
    geometry: ModelGeometry,
    counter: OpCounter | None = None,
) -> np.ndarray:
    """Raw input summation: per unit, the total weight from active pixels.

    Returns an integer array of shape (Q, K); entries lie in
    [0, S * w_max].
    """
    geometry.validate_pattern(pattern)
    if (weights.num_pixels, weights.num_units) != (
        geometry.num_pixels,
        geometry.num_units,
    ):
        raise GeometryError(
            f"weight matrix {weights.bits.shape} does not match geometry "
            f"({geometry.num_pixels}, {geometry.num_units})"
        )
    rows = weights.bits[np.asarray(pattern.active, dtype=np.intp)]
    if counter is not None:
        counter.weight_reads += rows.size
    u = rows.sum(axis=0, dtype=np.int64) * weights.w_max
    return u.reshape(geometry.num_cms, geometry.units_per_cm)


def normalize_u(
    u: np.ndarray,
    num_active: int,
    w_max: int,
    counter: OpCounter | None = None,
) -> np.ndarray:
    """Scale raw summations into [0, 1] by the maximum possible S * w_max."""
    u = np.asarray(u)
    ceiling = num_active * w_max
    if u.size and (u.min() < 0 or u.max() > ceiling):
        raise ValueError(f"raw summation outside [0, {ceiling}]")
    if counter is not None:
        counter.element_ops += u.size
    return u / float(ceiling)


def familiarity(u_norm: np.ndarray, counter: OpCounter | None = None) -> float:
    """Mean over CMs of the per-CM max normalized summation, in [0, 1].

    Invariant under permutation of units within a CM and of whole CMs.
    """
    u_norm = np.asarray(u_norm)
    per_cm_max = u_norm.max(axis=1)
    if counter is not None:
        counter.element_ops += u_norm.size + per_cm_max.size
    return float(per_cm_max.mean())


def eta_for_familiarity(
    g: float, params: CsaParams, counter: OpCounter | None = None
) -> float:
    """Noise-control value: 0 at or below ``g_floor``, ``eta_max`` at g=1.

    Monotone non-decreasing in g; exactly 0 for a fully novel input, which
    makes every unit equally likely to win.
    """
    if not -1e-12 <= g <= 1.0 + 1e-12:
        raise ValueError(f"familiarity {g} outside [0, 1]")
    if counter is not None:
        counter.element_ops += 1
    lifted = max(0.0, (g - params.g_floor) / (1.0 - params.g_floor))
    return params.eta_max * lifted**params.g_exponent


def mu_from_u(
    u_norm: np.ndarray,
    eta: float,
    params: CsaParams,
    counter: OpCounter | None = None,
) -> np.ndarray:
    """Sigmoidal win weights: floor 1, ceiling 1 + eta, rising in U.

    With eta 0 every unit receives the same weight, so the subsequent
    normalization yields uniform win probabilities.
    """
    u_norm = np.asarray(u_norm, dtype=np.float64)
    if eta < 0:
        raise ValueError(f"eta must be non-negative, got {eta}")
    if counter is not None:
        counter.sigmoid_evals += u_norm.size
    z = params.steepness * (u_norm - params.midpoint)
    return 1.0 + eta / (1.0 + np.exp(np.clip(-z, None, _EXP_CLIP)))


def rho_from_mu(mu: np.ndarray, counter: OpCounter | None = None) -> np.ndarray:
    """Normalize win weights into one probability distribution per CM.

    A CM whose weights are all zero (impossible via ``mu_from_u``, which
    floors at 1, but allowed for direct callers) falls back to uniform.
    """
    mu = np.asarray(mu, dtype=np.float64)
    if mu.size and mu.min() < 0:
        raise ValueError("win weights must be non-negative")
    if counter is not None:
        counter.element_ops += mu.size
    sums = mu.sum(axis=1, keepdims=True)
    zero = sums[:, 0] == 0.0
    rho = np.empty_like(mu)
    rho[~zero] = mu[~zero] / sums[~zero]
    rho[zero] = 1.0 / mu.shape[1]
    return rho


def draw_winners(
    rho: np.ndarray,
    rng: np.random.Generator,
    counter: OpCounter | None = None,
) -> np.ndarray:
    """One categorical draw per CM, independent across CMs.

    Consumes exactly one uniform per CM in CM order, so a fixed RNG state
    reproduces the same code.
    """
    rho = np.asarray(rho, dtype=np.float64)
    q, k = rho.shape
    sums = rho.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-9):
        raise ValueError("each CM's win probabilities must sum to 1")
    cum = np.cumsum(rho, axis=1)
    r = rng.random(q)
    if counter is not None:
        counter.rng_draws += q
        counter.element_ops += rho.size
    winners = (cum <= r[:, None]).sum(axis=1)
    return np.minimum(winners, k - 1).astype(np.int64)


def hard_max_winners(
    u_norm: np.ndarray,
    rng: np.random.Generator,
    counter: OpCounter | None = None,
) -> np.ndarray:
    """Per CM, the unit with the largest normalized summation.

    Ties are broken uniformly at random.  One uniform is consumed per CM
    whether or not that CM is tied, keeping the work and the RNG stream a
    pure function of geometry.
    """
    u_norm = np.asarray(u_norm)
    q, k = u_norm.shape
    tied = u_norm == u_norm.max(axis=1, keepdims=True)
    r = rng.random(q)
    if counter is not None:
        counter.rng_draws += q
        counter.element_ops += u_norm.size
    winners = np.empty(q, dtype=np.int64)
    for i in range(q):
        idx = np.flatnonzero(tied[i])
        winners[i] = idx[min(int(r[i] * idx.size), idx.size - 1)]
    return winners


def apply_learning(
    pattern: InputPattern,
    code: np.ndarray,
    weights: WeightMatrix,
    geometry: ModelGeometry,
    counter: OpCounter | None = None,
) -> WeightMatrix:
    """Set the weight from every active pixel to every winner (in place).

    Idempotent: re-applying the same (pattern, code) changes nothing.
    Weights are only ever raised, never cleared.
    """
    geometry.validate_pattern(pattern)
    code = validate_code(code, geometry)
    rows = np.asarray(pattern.active, dtype=np.intp)
    cols = np.arange(geometry.num_cms, dtype=np.intp) * geometry.units_per_cm + code
    weights.bits[np.ix_(rows, cols)] = 1
    if counter is not None:
        counter.weight_writes += rows.size * cols.size
    return weights


def random_pattern(geometry: ModelGeometry, rng: np.random.Generator) -> InputPattern:
    """A pattern with exactly S active pixels drawn without replacement."""
    idx = rng.choice(geometry.num_pixels, size=geometry.num_active, replace=False)
    return InputPattern.from_indices(int(i) for i in idx)
