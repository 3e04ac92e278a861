"""Sparse multi-photon state algebra over path-labelled OAM modes.

States are complex amplitude maps keyed by basis kets, one OAM value per
photon path. Local dimensions stay tiny (at most a handful of mode values
per photon, at most four photons), so everything is kept exact in the
sparse map and dense matrices are built on demand for eigen-problems.

Photons are path-distinguished: a ket assigns one OAM value to each
participating path, with the canonical path order A < B < C < D. Bosonic
exchange effects live entirely inside the beam-splitter model in
:mod:`oam332.optics`; this module is plain linear algebra.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

PATH_ORDER = ("A", "B", "C", "D")

#: squared-norm / trace agreement required of normalized objects
NORM_TOL = 1e-12
#: relative eigenvalue cutoff used when counting ranks
DEFAULT_RANK_TOL = 1e-9

_PSD_TOL = 1e-10


def _path_index(path: str) -> int:
    try:
        return PATH_ORDER.index(path)
    except ValueError:
        raise ValueError(f"unknown path {path!r}; expected one of {PATH_ORDER}") from None


@dataclass(frozen=True, order=True)
class PhotonMode:
    """One photon slot: a propagation path and an OAM quantum number.

    The OAM alphabet is configurable per experiment (default {-1, 0, 1});
    alphabet membership is enforced where alphabets are known, not here.
    """

    path: str
    oam: int

    def __post_init__(self):
        _path_index(self.path)


@dataclass(frozen=True, order=True)
class BasisKet:
    """Product basis ket: an ordered ``path -> OAM`` assignment.

    ``modes`` is sorted by path and each participating path appears exactly
    once. Ordering (used for canonical phases and stable bases) compares
    the sorted mode tuples lexicographically.
    """

    modes: tuple[tuple[str, int], ...]

    def __post_init__(self):
        paths = [p for p, _ in self.modes]
        for p in paths:
            _path_index(p)
        if sorted(paths, key=_path_index) != paths:
            raise ValueError(f"modes must be sorted by path, got {paths}")
        if len(set(paths)) != len(paths):
            raise ValueError(f"duplicate path in ket: {paths}")
        if not paths:
            raise ValueError("empty basis ket")

    @classmethod
    def of(cls, **assignment: int) -> "BasisKet":
        """Build a ket from keyword arguments, e.g. ``BasisKet.of(A=0, B=-1)``."""
        return cls.from_mapping(assignment)

    @classmethod
    def from_mapping(cls, assignment: Mapping[str, int]) -> "BasisKet":
        items = sorted(assignment.items(), key=lambda kv: _path_index(kv[0]))
        return cls(tuple((p, int(l)) for p, l in items))

    @property
    def paths(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.modes)

    def __getitem__(self, path: str) -> int:
        for p, l in self.modes:
            if p == path:
                return l
        raise KeyError(path)

    def restrict(self, keep: Sequence[str]) -> "BasisKet":
        """Sub-ket over the given paths."""
        keep_set = set(keep)
        return BasisKet(tuple((p, l) for p, l in self.modes if p in keep_set))

    def merge(self, other: "BasisKet") -> "BasisKet":
        """Union of two kets over disjoint path sets."""
        return BasisKet.from_mapping({**dict(self.modes), **dict(other.modes)})

    def label(self) -> str:
        return ",".join(f"{p}:{l}" for p, l in self.modes)


class PureState:
    """Superposition of basis kets sharing one path set.

    The amplitude map is treated as immutable after construction; all
    operations return new states. Exact zeros are dropped on construction,
    nothing else is pruned.
    """

    __slots__ = ("terms", "paths")

    def __init__(self, terms: Mapping[BasisKet, complex]):
        cleaned = {k: complex(a) for k, a in terms.items() if a != 0}
        if not cleaned:
            raise ValueError("state has no nonzero amplitude")
        path_sets = {k.paths for k in cleaned}
        if len(path_sets) != 1:
            raise ValueError(f"kets span different path sets: {sorted(path_sets)}")
        self.terms: dict[BasisKet, complex] = cleaned
        self.paths: tuple[str, ...] = next(iter(path_sets))

    @classmethod
    def ket(cls, **assignment: int) -> "PureState":
        return cls({BasisKet.from_mapping(assignment): 1.0})

    @classmethod
    def single(cls, path: str, amplitudes: Mapping[int, complex]) -> "PureState":
        """One-photon state on ``path`` from an ``oam -> amplitude`` map."""
        return cls({BasisKet.from_mapping({path: l}): a for l, a in amplitudes.items()})

    def amplitude(self, ket: BasisKet) -> complex:
        return self.terms.get(ket, 0.0 + 0.0j)

    def kets(self) -> list[BasisKet]:
        return sorted(self.terms)

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(a) ** 2 for a in self.terms.values())))

    def inner(self, other: "PureState") -> complex:
        """<self|other> over the common kets."""
        if self.paths != other.paths:
            raise ValueError(f"path sets differ: {self.paths} vs {other.paths}")
        small, large = (self, other) if len(self.terms) <= len(other.terms) else (other, self)
        acc = 0.0 + 0.0j
        for k in small.terms:
            acc += np.conj(self.terms.get(k, 0.0)) * other.terms.get(k, 0.0)
        return complex(acc)

    def scaled(self, factor: complex) -> "PureState":
        return PureState({k: a * factor for k, a in self.terms.items()})

    def single_oam_map(self) -> dict[int, complex]:
        """For one-photon states: the ``oam -> amplitude`` map."""
        if len(self.paths) != 1:
            raise ValueError("not a single-photon state")
        return {k.modes[0][1]: a for k, a in self.terms.items()}

    def allclose(self, other: "PureState", tol: float = 1e-10) -> bool:
        if self.paths != other.paths:
            return False
        kets = set(self.terms) | set(other.terms)
        return all(abs(self.amplitude(k) - other.amplitude(k)) <= tol for k in kets)

    def __repr__(self) -> str:
        parts = ", ".join(f"{k.label()}: {a:.4g}" for k, a in sorted(self.terms.items()))
        return f"PureState({parts})"


@dataclass(frozen=True)
class MixedState:
    """Weighted ensemble of pure states over a common path set."""

    ensemble: tuple[tuple[float, PureState], ...]

    def __post_init__(self):
        if not self.ensemble:
            raise ValueError("empty ensemble")
        total = 0.0
        paths = self.ensemble[0][1].paths
        for w, s in self.ensemble:
            if not 0.0 < w <= 1.0 + NORM_TOL:
                raise ValueError(f"ensemble weight {w} outside (0, 1]")
            if s.paths != paths:
                raise ValueError("ensemble members span different path sets")
            total += w
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"ensemble weights sum to {total}, not 1")

    @classmethod
    def pure(cls, state: PureState) -> "MixedState":
        return cls(((1.0, state),))

    @property
    def paths(self) -> tuple[str, ...]:
        return self.ensemble[0][1].paths

    def support(self) -> list[BasisKet]:
        kets: set[BasisKet] = set()
        for _, s in self.ensemble:
            kets.update(s.terms)
        return sorted(kets)

    def as_pure(self) -> PureState:
        """The single member of a trivial ensemble."""
        if len(self.ensemble) != 1:
            raise ValueError("ensemble has more than one member")
        return self.ensemble[0][1]

    def diagonal_probabilities(self) -> dict[BasisKet, float]:
        """Computational-basis outcome distribution (Born rule)."""
        probs: dict[BasisKet, float] = {}
        for w, s in self.ensemble:
            for k, a in s.terms.items():
                probs[k] = probs.get(k, 0.0) + w * abs(a) ** 2
        return probs


@dataclass(frozen=True)
class DensityMatrix:
    """Dense Hermitian matrix over an explicit ordered ket basis."""

    basis: tuple[BasisKet, ...]
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = len(self.basis)
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match basis size {n}")
        if np.max(np.abs(m - m.conj().T)) > NORM_TOL:
            raise ValueError("matrix is not Hermitian")
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > NORM_TOL:
            raise ValueError(f"trace is {tr}, not 1")
        if float(np.linalg.eigvalsh(m)[0]) < -_PSD_TOL:
            raise ValueError("matrix is not positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @property
    def paths(self) -> tuple[str, ...]:
        return self.basis[0].paths

    def eigenvalues(self) -> np.ndarray:
        """Ascending real eigenvalues."""
        return np.linalg.eigvalsh(self.matrix)

    def index(self, ket: BasisKet) -> int:
        return self.basis.index(ket)

    def entry(self, bra: BasisKet, ket: BasisKet) -> complex:
        return complex(self.matrix[self.index(bra), self.index(ket)])


def tensor(s1: PureState, s2: PureState) -> PureState:
    """Tensor product of states on disjoint path sets."""
    overlap = set(s1.paths) & set(s2.paths)
    if overlap:
        raise ValueError(f"path sets overlap: {sorted(overlap)}")
    terms = {}
    for k1, a1 in s1.terms.items():
        for k2, a2 in s2.terms.items():
            terms[k1.merge(k2)] = a1 * a2
    return PureState(terms)


def normalize(s: PureState) -> PureState:
    """Unit norm plus canonical global phase.

    The phase is fixed so the amplitude of the lexicographically first
    nonzero ket is real and nonnegative, making state equality testable.
    """
    n = s.norm()
    if n == 0.0:
        raise ValueError("cannot normalize the zero state")
    terms = {k: a / n for k, a in s.terms.items()}
    peak = max(abs(a) for a in terms.values())
    lead = next(a for _, a in sorted(terms.items()) if abs(a) > 1e-12 * peak)
    phase = lead / abs(lead)
    return PureState({k: a * np.conj(phase) for k, a in terms.items()})


def _group_amplitudes(s: PureState, keep: Sequence[str]):
    """Amplitude matrix M[keep-part, rest-part] of a pure state."""
    keep = tuple(sorted(keep, key=_path_index))
    rest = tuple(p for p in s.paths if p not in keep)
    keep_parts: dict[BasisKet, int] = {}
    rest_parts: dict[tuple, int] = {}
    entries = []
    for ket, amp in s.terms.items():
        kp = ket.restrict(keep)
        rp = tuple((p, ket[p]) for p in rest)
        i = keep_parts.setdefault(kp, len(keep_parts))
        j = rest_parts.setdefault(rp, len(rest_parts))
        entries.append((i, j, amp))
    m = np.zeros((len(keep_parts), max(len(rest_parts), 1)), dtype=complex)
    for i, j, amp in entries:
        m[i, j] = amp
    basis = sorted(keep_parts, key=lambda k: k.modes)
    order = [keep_parts[k] for k in basis]
    return tuple(basis), m[order, :]


def reduce(s: PureState | MixedState, keep: Iterable[str]) -> DensityMatrix:
    """Partial trace onto the ``keep`` paths.

    The result is expressed over the sorted support basis of the kept
    subsystem; trace is preserved.
    """
    keep = tuple(sorted(set(keep), key=_path_index))
    paths = s.paths
    if not keep:
        raise ValueError("keep set is empty")
    if not set(keep) <= set(paths):
        raise ValueError(f"keep paths {keep} not a subset of {paths}")

    members = s.ensemble if isinstance(s, MixedState) else ((1.0, s),)
    blocks: dict[BasisKet, dict[BasisKet, complex]] = {}
    for w, psi in members:
        basis, m = _group_amplitudes(psi, keep)
        rho = m @ m.conj().T
        for i, ki in enumerate(basis):
            row = blocks.setdefault(ki, {})
            for j, kj in enumerate(basis):
                row[kj] = row.get(kj, 0.0) + w * rho[i, j]
    basis = tuple(sorted(blocks))
    n = len(basis)
    out = np.zeros((n, n), dtype=complex)
    for i, ki in enumerate(basis):
        for j, kj in enumerate(basis):
            out[i, j] = blocks[ki].get(kj, 0.0)
    return DensityMatrix(basis, out)


def schmidt_coefficients(s: PureState, cut: Iterable[str]) -> list[float]:
    """Descending Schmidt coefficients across ``cut | rest``.

    Computed from the eigenvalues of the smaller single-side reduction,
    which is numerically cheaper than an SVD of the amplitude tensor and
    symmetric between the two sides.
    """
    cut = tuple(sorted(set(cut), key=_path_index))
    rest = tuple(p for p in s.paths if p not in cut)
    if not cut or not rest:
        raise ValueError("cut must split the paths into two nonempty parts")
    if not set(cut) <= set(s.paths):
        raise ValueError(f"cut paths {cut} not a subset of {s.paths}")
    side = cut if len(cut) <= len(rest) else rest
    _, m = _group_amplitudes(s, side)
    evals = np.linalg.eigvalsh(m @ m.conj().T)
    coeffs = np.sqrt(np.clip(evals, 0.0, None))[::-1]
    return [float(c) for c in coeffs]


def rank_vector(s: PureState, tol: float = DEFAULT_RANK_TOL) -> tuple[int, ...]:
    """Ranks of the single-photon reductions of a tripartite pure state.

    An eigenvalue counts toward the rank when it exceeds ``tol`` times the
    largest eigenvalue of its reduction.
    """
    if len(s.paths) != 3:
        raise ValueError(f"rank vector needs a tripartite state, got paths {s.paths}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    ranks = []
    for p in s.paths:
        evals = reduce(s, (p,)).eigenvalues()
        ranks.append(int(np.sum(evals > tol * evals[-1])))
    return tuple(ranks)


def fidelity(rho: DensityMatrix | MixedState | PureState, target: PureState) -> float:
    """Overlap ``<target| rho |target>``; equals |<target|psi>|^2 for pure input."""
    if isinstance(rho, PureState):
        rho = MixedState.pure(rho)
    if isinstance(rho, MixedState):
        if set(rho.paths) != set(target.paths):
            raise ValueError(f"path sets differ: {rho.paths} vs {target.paths}")
        value = sum(w * abs(target.inner(psi)) ** 2 for w, psi in rho.ensemble)
    else:
        if set(rho.paths) != set(target.paths):
            raise ValueError(f"path sets differ: {rho.paths} vs {target.paths}")
        v = np.array([target.amplitude(k) for k in rho.basis], dtype=complex)
        value = float(np.real(np.vdot(v, rho.matrix @ v)))
    if not -1e-10 <= value <= 1.0 + 1e-10:
        raise ValueError(f"fidelity {value} outside [0, 1]")
    return float(min(max(value, 0.0), 1.0))


def project(
    s: PureState, path: str, ket: PureState
) -> tuple[PureState | None, float]:
    """Project one photon onto a single-photon state.

    Returns the normalized residual state over the remaining paths and the
    projection probability. The residual is ``None`` when the probability
    is zero (orthogonal projection). ``ket`` must be a normalized
    one-photon state; its own path label is ignored, only the OAM
    amplitude map is used.
    """
    if path not in s.paths:
        raise ValueError(f"path {path!r} absent from state over {s.paths}")
    amp_map = ket.single_oam_map()
    norm = np.sqrt(sum(abs(a) ** 2 for a in amp_map.values()))
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"projection ket norm {norm} too far from 1")
    residual: dict[BasisKet, complex] = {}
    rest = tuple(p for p in s.paths if p != path)
    for k, a in s.terms.items():
        c = amp_map.get(k[path])
        if c is None:
            continue
        rk = k.restrict(rest)
        residual[rk] = residual.get(rk, 0.0) + np.conj(c) * a
    prob = float(sum(abs(a) ** 2 for a in residual.values()))
    if prob == 0.0:
        return None, 0.0
    return normalize(PureState(residual)), prob


def enumerate_kets(alphabets: Mapping[str, Sequence[int]]) -> list[BasisKet]:
    """All product kets over per-path alphabets, in canonical order."""
    paths = sorted(alphabets, key=_path_index)
    kets = []
    for combo in itertools.product(*(sorted(alphabets[p]) for p in paths)):
        kets.append(BasisKet.from_mapping(dict(zip(paths, combo))))
    return sorted(kets)


def target_state() -> PureState:
    """The canonical 3x3x2 three-photon target.

    ``(|0,0,0> + |1,-1,1> + |-1,1,1>) / sqrt(3)`` over paths A, B, C: the
    first two photons span three OAM values, the third spans two.
    """
    amp = 1.0 / np.sqrt(3.0)
    return PureState(
        {
            BasisKet.of(A=0, B=0, C=0): amp,
            BasisKet.of(A=1, B=-1, C=1): amp,
            BasisKet.of(A=-1, B=1, C=1): amp,
        }
    )


# --- text fixture format -------------------------------------------------
#
# One line per ket: whitespace-separated ``path:oam`` tokens followed by the
# amplitude as ``re,im``. Mixed states are a sequence of blocks, each opened
# by a ``weight: <w>`` line. A file without weight lines is a pure state.
# Lines starting with '#' and blank lines are ignored.


def state_to_text(state: PureState | MixedState) -> str:
    lines = ["# oam332 state fixture"]

    def emit(s: PureState):
        for k in s.kets():
            a = s.terms[k]
            toks = " ".join(f"{p}:{l}" for p, l in k.modes)
            lines.append(f"{toks} {a.real!r},{a.imag!r}")

    if isinstance(state, PureState):
        emit(state)
    else:
        for w, s in state.ensemble:
            lines.append(f"weight: {w!r}")
            emit(s)
    return "\n".join(lines) + "\n"


def state_from_text(text: str) -> PureState | MixedState:
    blocks: list[tuple[float, dict[BasisKet, complex]]] = []
    current: dict[BasisKet, complex] = {}
    weight: float | None = None
    explicit = False

    def close():
        nonlocal current, weight
        if current:
            blocks.append((1.0 if weight is None else weight, current))
        current = {}
        weight = None

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("weight:"):
            close()
            explicit = True
            try:
                weight = float(line.split(":", 1)[1])
            except ValueError:
                raise ValueError(f"line {ln}: bad weight in {line!r}") from None
            continue
        toks = line.split()
        if len(toks) < 2:
            raise ValueError(f"line {ln}: expected 'path:oam ... re,im', got {line!r}")
        try:
            assignment = {}
            for tok in toks[:-1]:
                p, l = tok.split(":")
                assignment[p] = int(l)
            re_s, im_s = toks[-1].split(",")
            amp = complex(float(re_s), float(im_s))
        except ValueError:
            raise ValueError(f"line {ln}: cannot parse {line!r}") from None
        ket = BasisKet.from_mapping(assignment)
        if ket in current:
            raise ValueError(f"line {ln}: duplicate ket {ket.label()}")
        current[ket] = amp
    close()
    if not blocks:
        raise ValueError("no state terms found")
    if len(blocks) == 1 and not explicit:
        return PureState(blocks[0][1])
    return MixedState(tuple((w, PureState(t)) for w, t in blocks))
