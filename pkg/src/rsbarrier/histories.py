"""Truncated history space, shift map, and the transition-rate table.

Histories are tuples (h0, h-1, ..., h-N) of regime labels in {1..m} with
consecutive entries distinct, so there are m*(m-1)**N of them.  The dense
integer code is mixed-radix: h0 in base m, every later entry in base m-1
(skip the previous label).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InfeasibleHistoryError,
    InvalidTransitionError,
    ResourceLimitError,
)

__all__ = [
    "HistoryIndex",
    "MemoryChain",
    "enumerate_histories",
    "shift",
    "encode",
    "decode",
    "space_size",
    "q_of_history",
    "q_uniform",
]

MAX_HISTORIES = 100_000


@dataclass(frozen=True)
class HistoryIndex:
    labels: tuple[int, ...]

    def __post_init__(self):
        if len(self.labels) == 0:
            raise ValueError("history must hold at least the current state")
        for a, b in zip(self.labels, self.labels[1:]):
            if a == b:
                raise ValueError(f"consecutive history entries equal: {self.labels}")

    @property
    def head(self) -> int:
        return self.labels[0]

    @property
    def depth(self) -> int:
        return len(self.labels) - 1


def space_size(m: int, n_memory: int) -> int:
    return m * (m - 1) ** n_memory


def _validate_mn(m: int, n_memory: int) -> None:
    if m < 1:
        raise ValueError("m must be >= 1")
    if n_memory < 0:
        raise ValueError("N must be >= 0")
    if m == 1 and n_memory > 0:
        raise InfeasibleHistoryError(
            "m=1 admits no history with distinct consecutive entries; need N=0"
        )


def encode(m: int, h: HistoryIndex) -> int:
    """Dense code in {0, ..., m*(m-1)**N - 1}."""
    labels = h.labels
    if any(not 1 <= s <= m for s in labels):
        raise ValueError(f"labels must lie in 1..{m}: {labels}")
    code = labels[0] - 1
    prev = labels[0]
    for s in labels[1:]:
        digit = s - 1 if s < prev else s - 2
        code = code * (m - 1) + digit
        prev = s
    return code


def decode(m: int, n_memory: int, code: int) -> HistoryIndex:
    _validate_mn(m, n_memory)
    if not 0 <= code < space_size(m, n_memory):
        raise ValueError(f"code {code} out of range for (m={m}, N={n_memory})")
    digits = []
    for _ in range(n_memory):
        digits.append(code % (m - 1))
        code //= m - 1
    head = code + 1
    labels = [head]
    prev = head
    for digit in reversed(digits):
        s = digit + 1 if digit + 1 < prev else digit + 2
        labels.append(s)
        prev = s
    return HistoryIndex(tuple(labels))


def enumerate_histories(m: int, n_memory: int) -> list[HistoryIndex]:
    """All histories in canonical code order."""
    _validate_mn(m, n_memory)
    size = space_size(m, n_memory)
    if size > MAX_HISTORIES:
        raise ResourceLimitError(
            f"history space of size {size} exceeds the cap {MAX_HISTORIES}"
        )
    return [decode(m, n_memory, code) for code in range(size)]


def shift(h: HistoryIndex, s: int) -> HistoryIndex:
    """New history after a switch to regime s: (s, h0, ..., h_{-N+1})."""
    if s == h.head:
        raise InvalidTransitionError(f"transition into the current state {s}")
    return HistoryIndex((s,) + h.labels[:-1] if h.depth > 0 else (s,))


def _targets(m: int, head: int) -> list[int]:
    return [s for s in range(1, m + 1) if s != head]


@dataclass
class MemoryChain:
    """Dense rate table over the canonical enumeration.

    ``rates[i, j]`` is the rate from the history with code ``i`` into its
    j-th admissible target state (targets sorted ascending, skipping h0).
    ``lambda0`` defaults to max_h Lambda_h; an override must dominate it.
    """

    m: int
    n_memory: int
    rates: np.ndarray
    lambda0_override: float | None = None

    histories: list[HistoryIndex] = field(init=False, repr=False)
    codes_after_shift: np.ndarray = field(init=False, repr=False)
    lam_total: np.ndarray = field(init=False, repr=False)
    lambda0: float = field(init=False)

    def __post_init__(self):
        _validate_mn(self.m, self.n_memory)
        self.histories = enumerate_histories(self.m, self.n_memory)
        size = len(self.histories)
        self.rates = np.asarray(self.rates, dtype=float)
        if self.rates.shape != (size, self.m - 1):
            raise ValueError(
                f"rate table must have shape ({size}, {self.m - 1}), "
                f"got {self.rates.shape}"
            )
        if np.any(self.rates < 0.0):
            raise ValueError("transition rates must be >= 0")
        self.codes_after_shift = np.empty((size, self.m - 1), dtype=np.intp)
        for i, h in enumerate(self.histories):
            for j, s in enumerate(_targets(self.m, h.head)):
                self.codes_after_shift[i, j] = encode(self.m, shift(h, s))
        self.lam_total = self.rates.sum(axis=1) if self.m > 1 else np.zeros(size)
        lam_max = float(self.lam_total.max()) if size else 0.0
        if self.lambda0_override is None:
            self.lambda0 = lam_max
        else:
            if self.lambda0_override < lam_max:
                raise ValueError(
                    f"lambda0 override {self.lambda0_override} below max "
                    f"Lambda_h = {lam_max}"
                )
            self.lambda0 = float(self.lambda0_override)

    @property
    def size(self) -> int:
        return len(self.histories)

    def rate(self, s: int, h: HistoryIndex) -> float:
        if s == h.head:
            return 0.0
        j = _targets(self.m, h.head).index(s)
        return float(self.rates[encode(self.m, h), j])

    def targets_of(self, head: int) -> list[int]:
        return _targets(self.m, head)

    def heads(self) -> np.ndarray:
        return np.array([h.head for h in self.histories], dtype=np.intp)

    @classmethod
    def from_constant(cls, m, n_memory, rate, lambda0=None):
        size = space_size(m, n_memory)
        table = np.full((size, max(m - 1, 0)), float(rate))
        return cls(m, n_memory, table, lambda0)

    @classmethod
    def from_rules(cls, m, n_memory, default, rules, lambda0=None):
        """Materialize the dense table from (s, history-prefix) -> rate rules.

        A rule history shorter than N+1 matches every history extending it;
        the most specific (longest) match wins.
        """
        histories = enumerate_histories(m, n_memory)
        table = np.full((len(histories), max(m - 1, 0)), float(default))
        parsed = []
        for rule in rules:
            s = int(rule["s"])
            hist = tuple(int(v) for v in rule["history"])
            if len(hist) > n_memory + 1:
                raise ValueError(f"rule history longer than N+1: {hist}")
            parsed.append((s, hist, float(rule["rate"])))
        parsed.sort(key=lambda r: len(r[1]))  # longer (more specific) last
        for s, hist, rate in parsed:
            for i, h in enumerate(histories):
                if h.labels[: len(hist)] == hist and s != h.head:
                    table[i, _targets(m, h.head).index(s)] = rate
        return cls(m, n_memory, table, lambda0)


def q_of_history(chain: MemoryChain, r: np.ndarray, h, q):
    """Q_h(q) = q + Lambda_h + r_{h0}."""
    code = h if isinstance(h, (int, np.integer)) else encode(chain.m, h)
    head = chain.histories[code].head
    return q + chain.lam_total[code] + r[head - 1]


def q_uniform(chain: MemoryChain, r: np.ndarray, s: int, q):
    """Q(s; q) = q + Lambda_0 + r_s  (uniformized rate)."""
    return q + chain.lambda0 + r[s - 1]
