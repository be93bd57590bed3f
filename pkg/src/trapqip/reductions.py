"""Synthetic locally-quantum reductions for the XOR-shift language family.

The language is the `bit`-th bit (most significant bit first) of x XOR s, and
the hiding permutation is f(x) = x XOR s.  The query generator prepares
sum_q sqrt(d_q) |q, 0>_(query, answer) |q XOR x>_work, so an honest inverse
answer f^{-1}(q) XORed with the work value recovers x XOR s on every branch.
The decider copies the language bit of that recovery to a fresh output qubit
and leaves everything else untouched.  Noise is a fixed rotation on the output
qubit; amplification runs independent copies through a coherent majority vote.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import core
from .core import StateVector, UnitaryOperator, basis_state, layout
from .oracles import Permutation, inversion_table

DIST_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DistributionTable:
    """Query distribution d_q over m-bit strings with a smoothness certificate.

    The certificate constant c bounds 2^m * d_q into [1/c, c].  When not given
    it defaults to the tightest value the table admits; a table with an empty
    slot (d_q = 0) has no finite certificate and is not smooth.
    """

    m: int
    probs: np.ndarray
    c: float | None = None

    def __post_init__(self) -> None:
        arr = np.array(np.asarray(self.probs, dtype=float).reshape(-1), copy=True)
        if arr.size != (1 << self.m):
            raise ValueError(f"need {1 << self.m} probabilities, got {arr.size}")
        if arr.min() < -DIST_SUM_TOL:
            raise ValueError("negative probability entry")
        total = float(arr.sum())
        if abs(total - 1.0) > DIST_SUM_TOL:
            raise ValueError(f"probabilities sum to {total}, not 1 within {DIST_SUM_TOL}")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)
        if self.c is None:
            scaled_min = (1 << self.m) * self.d_min
            scaled_max = (1 << self.m) * self.d_max
            cert = math.inf if scaled_min <= 0 else max(scaled_max, 1.0 / scaled_min)
            object.__setattr__(self, "c", float(cert))

    @classmethod
    def uniform(cls, m: int) -> "DistributionTable":
        size = 1 << m
        return cls(m, np.full(size, 1.0 / size), c=1.0)

    @property
    def d_min(self) -> float:
        return float(self.probs.min())

    @property
    def d_max(self) -> float:
        return float(self.probs.max())

    @property
    def is_smooth(self) -> bool:
        size = 1 << self.m
        if self.d_min <= 0 or not math.isfinite(self.c):
            return False
        return size * self.d_min >= 1.0 / self.c - DIST_SUM_TOL and size * self.d_max <= self.c + DIST_SUM_TOL

    @property
    def is_uniform(self) -> bool:
        size = 1 << self.m
        return bool(np.allclose(self.probs, 1.0 / size, atol=DIST_SUM_TOL))


def save_distribution(table: DistributionTable, path) -> None:
    """Text format: one 'q d_q' line per entry, q in binary."""
    lines = [f"{q:0{table.m}b} {float(table.probs[q])!r}" for q in range(1 << table.m)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_distribution(path, c: float | None = None) -> DistributionTable:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty distribution file")
    m = len(lines[0].split()[0])
    size = 1 << m
    if len(lines) != size:
        raise ValueError(f"{path}: expected {size} lines for m={m}, found {len(lines)}")
    probs = np.zeros(size)
    seen = set()
    for i, ln in enumerate(lines, start=1):
        parts = ln.split()
        if len(parts) != 2 or len(parts[0]) != m:
            raise ValueError(f"{path}: line {i}: expected '<{m}-bit q> <prob>'")
        try:
            q = int(parts[0], 2)
            d = float(parts[1])
        except ValueError:
            raise ValueError(f"{path}: line {i}: malformed entry {ln!r}") from None
        if q in seen:
            raise ValueError(f"{path}: line {i}: duplicate entry for q={parts[0]}")
        seen.add(q)
        probs[q] = d
    return DistributionTable(m, probs, c=c)


# ---------------------------------------------------------------------------
# circuit pieces


def _prep_unitary(probs: np.ndarray) -> np.ndarray:
    """Real orthogonal matrix whose first column is sqrt(probs)."""
    target = np.sqrt(np.asarray(probs, dtype=float))
    dim = target.size
    e0 = np.zeros(dim)
    e0[0] = 1.0
    v = target - e0
    nv = v @ v
    if nv < 1e-30:
        return np.eye(dim)
    return np.eye(dim) - 2.0 * np.outer(v, v) / nv


@lru_cache(maxsize=64)
def register_xor_table(m: int) -> np.ndarray:
    """Basis map of register_xor_unitary on the packed (src, dst) index."""
    idx = np.arange(1 << (2 * m))
    table = idx ^ (idx >> m)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=64)
def register_xor_unitary(m: int) -> UnitaryOperator:
    """|a, b> -> |a, b XOR a> on two m-qubit registers; its own inverse."""
    size = 1 << m
    dim = size * size
    idx = np.arange(dim)
    a = idx >> m
    b = idx & (size - 1)
    rows = (a << m) | (b ^ a)
    mat = np.zeros((dim, dim))
    mat[rows, idx] = 1.0
    return UnitaryOperator(layout(("src", m), ("dst", m)), mat)


def _generator_unitary(table: DistributionTable) -> UnitaryOperator:
    """G on (x, query, work): |x,0,0> -> sum_q sqrt(d_q) |x, q, q XOR x>."""
    m = table.m
    size = 1 << m
    dim = size**3
    prep = np.kron(np.eye(size), np.kron(_prep_unitary(table.probs), np.eye(size)))
    idx = np.arange(dim)
    w = idx & (size - 1)
    q = (idx >> m) & (size - 1)
    x = idx >> (2 * m)
    rows = (x << (2 * m)) | (q << m) | (w ^ q ^ x)
    cnots = np.zeros((dim, dim))
    cnots[rows, idx] = 1.0
    return UnitaryOperator(layout(("x", m), ("query", m), ("work", m)), cnots @ prep)


def _decider_unitary(m: int, bit: int) -> UnitaryOperator:
    """R on (answer, work, out): XOR the language bit of answer^work into out.

    Equal to compute(answer into work), copy bit to out, uncompute, collapsed
    into a single basis permutation.
    """
    if not 0 <= bit < m:
        raise ValueError(f"bit {bit} out of range for m={m}")
    size = 1 << m
    dim = (size**2) * 2
    idx = np.arange(dim)
    w = (idx >> 1) & (size - 1)
    a = idx >> (m + 1)
    lang = ((a ^ w) >> (m - 1 - bit)) & 1
    rows = idx ^ lang
    mat = np.zeros((dim, dim))
    mat[rows, idx] = 1.0
    return UnitaryOperator(layout(("answer", m), ("work", m), ("out", 1)), mat)


def majority_error(eps: float, t: int) -> float:
    """Probability that more than t/2 independent eps-noisy copies are wrong."""
    if t < 1 or t % 2 == 0:
        raise ValueError(f"copy count must be odd and positive, got {t}")
    return float(sum(math.comb(t, u) * eps**u * (1 - eps) ** (t - u) for u in range(t // 2 + 1, t + 1)))


@lru_cache(maxsize=16)
def majority_vote_unitary(t: int) -> UnitaryOperator:
    """|o_1..o_t, b> -> |o_1..o_t, b XOR majority(o)> on t vote bits plus a target."""
    if t < 1 or t % 2 == 0:
        raise ValueError(f"vote arity must be odd, got {t}")
    dim = 1 << (t + 1)
    idx = np.arange(dim)
    votes = idx >> 1
    ones = np.zeros(dim, dtype=int)
    for b in range(t):
        ones += (votes >> b) & 1
    maj = (ones > t // 2).astype(int)
    rows = idx ^ maj
    mat = np.zeros((dim, dim))
    mat[rows, idx] = 1.0
    return UnitaryOperator(layout(("votes", t), ("target", 1)), mat)


# ---------------------------------------------------------------------------
# the reduction container


@dataclass(frozen=True, eq=False)
class Reduction:
    """One worst-case-to-average-case reduction instance.

    k is the total query count; copies is the majority-vote arity (equal to k
    for this family, where every query group is one copy).  generators holds
    the per-query G, decider the per-copy R; epsilon is the closed-form error
    of the whole reduction on honest runs.
    """

    family: str
    m: int
    k: int
    copies: int
    epsilon: float
    base_epsilon: float
    s: int
    bit: int
    distributions: tuple[DistributionTable, ...]
    generators: tuple[UnitaryOperator, ...]
    decider: UnitaryOperator

    def __post_init__(self) -> None:
        if len(self.distributions) != self.k or len(self.generators) != self.k:
            raise ValueError("need one distribution and one generator per query")
        if self.copies != self.k:
            raise ValueError("this family uses one query group per copy")

    @property
    def G(self) -> UnitaryOperator:
        """Per-query generator (all equal unless distributions differ per query)."""
        return self.generators[0]

    @property
    def R(self) -> UnitaryOperator:
        """Per-copy decider."""
        return self.decider

    def language(self, x: int) -> int:
        if not 0 <= x < (1 << self.m):
            raise ValueError(f"input {x} does not fit {self.m} bits")
        return ((x ^ self.s) >> (self.m - 1 - self.bit)) & 1

    @property
    def is_smooth(self) -> bool:
        return all(t.is_smooth for t in self.distributions)


def _check_copy_width(m: int) -> None:
    # the per-copy layout spans (query, answer, work, copy); refuse before
    # any dense operator gets allocated
    if 4 * m > core.qubit_cap():
        raise core.CapacityError(
            f"one copy needs {4 * m} qubits, cap is {core.qubit_cap()}"
        )


def build_xor_reduction(m: int, s: int, bit: int) -> Reduction:
    """Exact reduction with uniform queries."""
    _check_copy_width(m)
    table = DistributionTable.uniform(m)
    return Reduction(
        family="xor-shift",
        m=m,
        k=1,
        copies=1,
        epsilon=0.0,
        base_epsilon=0.0,
        s=s,
        bit=bit,
        distributions=(table,),
        generators=(_generator_unitary(table),),
        decider=_decider_unitary(m, bit),
    )


def build_smooth_xor_reduction(m: int, s: int, bit: int, table: DistributionTable) -> Reduction:
    """Exact reduction querying from a smooth non-uniform distribution."""
    _check_copy_width(m)
    if table.m != m:
        raise ValueError("distribution width does not match m")
    if not table.is_smooth:
        raise ValueError("distribution is not smooth (zero entry or certificate violated)")
    return Reduction(
        family="xor-shift-smooth",
        m=m,
        k=1,
        copies=1,
        epsilon=0.0,
        base_epsilon=0.0,
        s=s,
        bit=bit,
        distributions=(table,),
        generators=(_generator_unitary(table),),
        decider=_decider_unitary(m, bit),
    )


def build_known_smooth_reduction(m: int, s: int, bit: int, tables) -> Reduction:
    """Multi-query reduction whose queries draw from per-query smooth tables.

    The tables may all differ; answers recombine through a majority vote, so
    the table count must be odd.
    """
    tables = tuple(tables)
    if len(tables) % 2 == 0 or not tables:
        raise ValueError("need an odd number of per-query tables")
    for t in tables:
        if t.m != m:
            raise ValueError("distribution width does not match m")
        if not t.is_smooth:
            raise ValueError("every per-query distribution must be smooth")
    return Reduction(
        family="xor-shift-known-smooth",
        m=m,
        k=len(tables),
        copies=len(tables),
        epsilon=0.0,
        base_epsilon=0.0,
        s=s,
        bit=bit,
        distributions=tables,
        generators=tuple(_generator_unitary(t) for t in tables),
        decider=_decider_unitary(m, bit),
    )


def add_noise(r: Reduction, eps: float) -> Reduction:
    """Compose a fixed rotation on the output qubit so honest runs err with probability eps.

    Valid because the pre-noise decider writes a deterministic basis bit on
    honest inputs; rotation angles on the same axis add.
    """
    if not 0 <= eps < 1:
        raise ValueError(f"noise level {eps} outside [0, 1)")
    if r.copies != 1:
        raise ValueError("add noise before amplifying")
    angle = math.asin(math.sqrt(r.epsilon)) + math.asin(math.sqrt(eps))
    c, s_ = math.cos(math.asin(math.sqrt(eps))), math.sqrt(eps)
    rot = np.array([[c, -s_], [s_, c]])
    noisy = np.kron(np.eye(r.decider.dim // 2), rot) @ r.decider.matrix
    combined = float(math.sin(angle) ** 2)
    return replace(
        r,
        epsilon=combined,
        base_epsilon=combined,
        decider=UnitaryOperator(r.decider.layout, noisy),
    )


def amplify(r: Reduction, t: int) -> Reduction:
    """t independent copies recombined by a coherent majority vote."""
    if t < 1 or t % 2 == 0:
        raise ValueError(f"copy count must be odd and positive, got {t}")
    if r.copies != 1:
        raise ValueError("amplify an unamplified base (nested votes break the error formula)")
    if t == 1:
        return r
    return replace(
        r,
        k=t,
        copies=t,
        epsilon=majority_error(r.epsilon, t),
        distributions=r.distributions * t,
        generators=r.generators * t,
    )


# ---------------------------------------------------------------------------
# states

QUERY_REGISTER_KINDS = ("query", "answer", "work", "copy")


def copy_register_names(k: int) -> list[dict[str, str]]:
    """Register names of each copy; unsuffixed when there is a single copy."""
    if k == 1:
        return [{kind: kind for kind in QUERY_REGISTER_KINDS}]
    return [{kind: f"{kind}{i}" for kind in QUERY_REGISTER_KINDS} for i in range(k)]


def grouped_register_order(k: int) -> list[str]:
    """All query registers, then answers, then work, then copies."""
    names = copy_register_names(k)
    return [names[i][kind] for kind in QUERY_REGISTER_KINDS for i in range(k)]


def _relabel(state: StateVector, mapping: dict[str, str]) -> StateVector:
    new = tuple((mapping.get(n, n), w) for n, w in state.layout.registers)
    return StateVector(core.RegisterLayout(new), state.amplitudes)


def _single_query_state(r: Reduction, x: int, which: int) -> StateVector:
    m = r.m
    lay = layout(("x", m), ("query", m), ("answer", m), ("work", m), ("copy", m))
    state = basis_state(lay, {"x": x})
    state = core.apply_on_registers(state, r.generators[which], ["x", "query", "work"])
    state = core.apply_basis_permutation(state, register_xor_table(m), ["query", "copy"])
    prob, state = core.condition_on(state, {"x": x})
    if abs(prob - 1.0) > core.ATOL:
        raise core.InvariantError("generator failed to leave the input register intact")
    return state


def generate_query_state(r: Reduction, x: int) -> StateVector:
    """The verifier's pre-send state: generator output plus a basis copy of q.

    For several copies the per-copy registers are grouped by kind (all query
    registers first, then answers, work, copies) via an explicit qubit
    permutation, and register names carry the copy index.
    """
    if not 0 <= x < (1 << r.m):
        raise ValueError(f"input {x} does not fit {r.m} bits")
    names = copy_register_names(r.k)
    parts = [_relabel(_single_query_state(r, x, i), names[i]) for i in range(r.k)]
    state = parts[0]
    for part in parts[1:]:
        state = core.tensor_product(state, part)
    if r.k > 1:
        state = core.reorder_registers(state, grouped_register_order(r.k))
    return state


def honest_answer_state(r: Reduction, f: Permutation, x: int) -> StateVector:
    """Query state after an honest inverse oracle filled the answer registers."""
    state = generate_query_state(r, x)
    table = inversion_table(f)
    for regs in copy_register_names(r.k):
        state = core.apply_basis_permutation(state, table, [regs["query"], regs["answer"]])
    return state


# ---------------------------------------------------------------------------
# descriptors


def reduction_descriptor(r: Reduction, distribution_ref: str | None = None) -> dict[str, str]:
    """Flat text-config form: family, m, s, bit, eps, t, distribution reference."""
    desc = {
        "family": r.family,
        "m": str(r.m),
        "s": format(r.s, f"0{r.m}b"),
        "bit": str(r.bit),
        "t": str(r.copies),
        "eps": repr(float(r.base_epsilon)),
    }
    if distribution_ref is not None:
        desc["distribution"] = distribution_ref
    return desc


def reduction_from_descriptor(desc, base_dir=None) -> Reduction:
    """Rebuild a reduction from its descriptor; eps/t reapply noise and copies."""
    try:
        m = int(desc["m"])
        s = int(desc["s"], 2)
        bit = int(desc["bit"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"bad reduction descriptor: {exc}") from exc
    ref = desc.get("distribution")
    if ref in (None, "", "uniform"):
        r = build_xor_reduction(m, s, bit)
    else:
        path = Path(base_dir) / ref if base_dir is not None else Path(ref)
        r = build_smooth_xor_reduction(m, s, bit, load_distribution(path))
    eps = float(desc.get("eps", "0") or 0)
    if eps:
        r = add_noise(r, eps)
    t = int(desc.get("t", "1") or 1)
    if t != 1:
        r = amplify(r, t)
    return r
