"""Projective measurement plans, count simulation, and density-matrix
element reconstruction.

Every measurement is a single-outcome projection (one hologram setting per
photon), mirroring what a spatial light modulator plus single-mode fiber
can realize. Off-diagonal elements are therefore assembled from
superposition-basis projector counts via Pauli-style sigma_x / sigma_y
combinations; diagonal elements come from direct basis projections
normalized by the total diagonal rate.
"""

from __future__ import annotations

import csv
import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import IncompleteDataError
from .hilbert import (
    BasisKet,
    DensityMatrix,
    MixedState,
    PureState,
    enumerate_kets,
    normalize,
    tensor,
)
from .optics import HeraldSpec

#: default per-setting integration time: 27 minutes, the published
#: diagonal-element duration (off-diagonal durations were not stated)
DEFAULT_DURATION_S = 27.0 * 60.0

#: computational alphabets of the heralded three-photon state
DEFAULT_ALPHABETS: dict[str, tuple[int, ...]] = {
    "A": (-1, 0, 1),
    "B": (-1, 0, 1),
    "C": (0, 1),
}

_SUPERPOSITION_KINDS = ("plus", "minus", "plus_i", "minus_i")
_KIND_LABEL = {"plus": "P", "minus": "M", "plus_i": "Pi", "minus_i": "Mi"}
_KIND_FLIP_I = {"plus_i": "minus_i", "minus_i": "plus_i"}


@dataclass(frozen=True)
class ProjectorSpec:
    """One hologram setting for one photon.

    ``basis`` projects onto |a>; the four superposition kinds project onto
    (|a> + e^{i phi} |b>)/sqrt(2) with phase 0, pi, pi/2, -pi/2 for plus,
    minus, plus_i, minus_i respectively.
    """

    path: str
    kind: str
    a: int
    b: int | None = None

    def __post_init__(self):
        if self.kind == "basis":
            if self.b is not None:
                raise ValueError("basis projector takes a single OAM value")
        elif self.kind in _SUPERPOSITION_KINDS:
            if self.b is None:
                raise ValueError(f"{self.kind} projector needs two OAM values")
            if self.a == self.b:
                raise ValueError("superposition projector needs two distinct OAM values")
        else:
            raise ValueError(f"unknown projector kind {self.kind!r}")

    def canonical(self) -> "ProjectorSpec":
        """Equivalent spec with (a, b) ordered ascending.

        plus/minus are symmetric under swapping; the circular kinds swap
        into each other (the swapped ket differs only by a global phase),
        so canonical labels make transposed elements hit the same rows.
        """
        if self.kind == "basis" or self.a < self.b:
            return self
        kind = _KIND_FLIP_I.get(self.kind, self.kind)
        return ProjectorSpec(self.path, kind, self.b, self.a)

    def label(self) -> str:
        if self.kind == "basis":
            return str(self.a)
        return f"{_KIND_LABEL[self.kind]}({self.a},{self.b})"


def projector_state(p: ProjectorSpec) -> PureState:
    """The normalized single-photon ket the projector selects."""
    if p.kind == "basis":
        return PureState.single(p.path, {p.a: 1.0})
    phase = {"plus": 1.0, "minus": -1.0, "plus_i": 1.0j, "minus_i": -1.0j}[p.kind]
    return normalize(PureState.single(p.path, {p.a: 1.0, p.b: phase}))


@dataclass(frozen=True)
class SigmaDecomposition:
    """sigma_x / sigma_y on a two-value OAM block as signed projector sums.

    With normalized projectors Pi_k onto the four superposition kets,
    ``sigma_x = Pi_plus - Pi_minus`` reconstructs |a><b| + |b><a| and
    ``sigma_y = Pi_plus_i - Pi_minus_i`` reconstructs the Pauli-Y block
    [[0, -i], [i, 0]] in the (a, b) ordering.
    """

    a: int
    b: int
    x_terms: tuple[tuple[float, str], ...] = ((1.0, "plus"), (-1.0, "minus"))
    y_terms: tuple[tuple[float, str], ...] = ((1.0, "plus_i"), (-1.0, "minus_i"))

    def _block(self, terms) -> np.ndarray:
        out = np.zeros((2, 2), dtype=complex)
        index = {self.a: 0, self.b: 1}
        for coef, kind in terms:
            ket = projector_state(ProjectorSpec("A", kind, self.a, self.b))
            v = np.zeros(2, dtype=complex)
            for l, amp in ket.single_oam_map().items():
                v[index[l]] = amp
            out += coef * np.outer(v, v.conj())
        return out

    def block_x(self) -> np.ndarray:
        return self._block(self.x_terms)

    def block_y(self) -> np.ndarray:
        return self._block(self.y_terms)


def sigma_decomposition(a: int, b: int) -> SigmaDecomposition:
    """Projector decomposition of sigma_x and sigma_y on the (a, b) block."""
    if a == b:
        raise ValueError("sigma block needs two distinct OAM values")
    return SigmaDecomposition(a, b)


@dataclass(frozen=True)
class MeasurementSetting:
    """One projector per signal photon, plus the herald context."""

    projectors: tuple[tuple[str, ProjectorSpec], ...]
    herald: HeraldSpec = field(default_factory=HeraldSpec.paper_values)

    def __post_init__(self):
        paths = [p for p, _ in self.projectors]
        if sorted(paths) != list(paths) or len(set(paths)) != len(paths):
            raise ValueError("projectors must be keyed by distinct sorted paths")
        for p, spec in self.projectors:
            if spec.path != p:
                raise ValueError(f"projector path {spec.path!r} under key {p!r}")

    @classmethod
    def of(cls, specs: Mapping[str, ProjectorSpec], herald: HeraldSpec | None = None) -> "MeasurementSetting":
        items = tuple(sorted(specs.items()))
        if herald is None:
            return cls(items)
        return cls(items, herald)

    @property
    def label(self) -> str:
        return setting_label(dict(self.projectors))

    def joint_ket(self) -> PureState:
        return _joint_ket_cached(self.projectors)


@lru_cache(maxsize=4096)
def _joint_ket_cached(projectors: tuple[tuple[str, ProjectorSpec], ...]) -> PureState:
    out = None
    for _, spec in projectors:
        ket = projector_state(spec)
        out = ket if out is None else tensor(out, ket)
    return out


def setting_label(specs: Mapping[str, ProjectorSpec]) -> str:
    """Canonical setting string, projector labels in path order."""
    return "⟨" + "|".join(specs[p].label() for p in sorted(specs)) + "⟩"


def diagonal_label(ket: BasisKet) -> str:
    return setting_label({p: ProjectorSpec(p, "basis", l) for p, l in ket.modes})


# --- off-diagonal assembly -------------------------------------------------
#
# For an element E = <bra| rho |ket> differing on n photons, expectation
# values of all n-fold sigma_x/sigma_y patterns of equal y-parity combine
# into 2^n Re(E) (even number of y's) or 2^n Im(E) (odd number). The
# pattern signs below follow from expanding each sigma into |bra_p><ket_p|
# ladder terms with the Pauli-Y convention of `sigma_decomposition`; cross
# terms cancel within each parity class.

_X_OPTIONS = (("plus", 1.0), ("minus", -1.0))
_Y_OPTIONS = (("plus_i", 1.0), ("minus_i", -1.0))


def _pattern_sign(y_count: int) -> float:
    if y_count % 2 == 0:
        return 1.0 if y_count % 4 == 0 else -1.0
    return -1.0 if y_count % 4 == 1 else 1.0


def element_weights(
    bra: BasisKet, ket: BasisKet
) -> tuple[dict[str, float], dict[str, float]]:
    """Setting-label weights assembling Re(E) and Im(E) of ``<bra|rho|ket>``.

    Each weight multiplies the setting's probability estimate; summing
    gives the real (imaginary) part exactly when the probabilities are
    exact. Raises on diagonal elements, which have their own path.
    """
    if bra.paths != ket.paths:
        raise ValueError("bra and ket must share a path set")
    paths = list(bra.paths)
    sup = [p for p in paths if bra[p] != ket[p]]
    fixed = [p for p in paths if bra[p] == ket[p]]
    if not sup:
        raise ValueError("element is diagonal; use reconstruct_diagonals")
    n = len(sup)
    scale = 0.5**n
    re_w: dict[str, float] = defaultdict(float)
    im_w: dict[str, float] = defaultdict(float)
    fixed_specs = {p: ProjectorSpec(p, "basis", bra[p]) for p in fixed}
    for pattern in itertools.product("xy", repeat=n):
        y_count = pattern.count("y")
        sign = _pattern_sign(y_count)
        dest = re_w if y_count % 2 == 0 else im_w
        options = [_X_OPTIONS if c == "x" else _Y_OPTIONS for c in pattern]
        for combo in itertools.product(*options):
            specs = dict(fixed_specs)
            weight = sign * scale
            for p, (kind, sgn) in zip(sup, combo):
                specs[p] = ProjectorSpec(p, kind, bra[p], ket[p]).canonical()
                weight *= sgn
            dest[setting_label(specs)] += weight
    return dict(re_w), dict(im_w)


def element_settings(
    bra: BasisKet, ket: BasisKet, herald: HeraldSpec | None = None
) -> list[MeasurementSetting]:
    """All projective settings the element's decomposition touches.

    4^n settings for an element differing on n photons (the remaining
    photons stay in their basis ket).
    """
    paths = list(bra.paths)
    options: list[list[ProjectorSpec]] = []
    for p in sorted(paths):
        if bra[p] == ket[p]:
            options.append([ProjectorSpec(p, "basis", bra[p])])
        else:
            options.append(
                [
                    ProjectorSpec(p, kind, bra[p], ket[p]).canonical()
                    for kind in _SUPERPOSITION_KINDS
                ]
            )
    settings = []
    for combo in itertools.product(*options):
        settings.append(MeasurementSetting.of({s.path: s for s in combo}, herald))
    return settings


def witness_plan(
    target: PureState, herald: HeraldSpec | None = None
) -> list[MeasurementSetting]:
    """Measurement plan for the fidelity witness of a three-term target.

    Emits every diagonal basis setting over the target's per-photon
    alphabets, then the superposition settings for each distinct pair of
    target kets (ordered so the largest blocks come first). For the
    canonical 3x3x2 target this is 18 + 64 + 64 + 16 = 162 settings, all
    single-outcome projections.
    """
    kets = target.kets()
    if len(target.paths) != 3 or len(kets) != 3:
        raise ValueError(
            f"witness plan needs a three-term tripartite target, got "
            f"{len(kets)} terms over paths {target.paths}"
        )
    alphabets = target_alphabets(target)
    settings = [
        MeasurementSetting.of(
            {p: ProjectorSpec(p, "basis", l) for p, l in ket.modes}, herald
        )
        for ket in enumerate_kets(alphabets)
    ]
    pairs = list(itertools.combinations(kets, 2))
    pairs.sort(key=lambda pair: -sum(1 for p in pair[0].paths if pair[0][p] != pair[1][p]))
    for bra, ket in pairs:
        settings.extend(element_settings(bra, ket, herald))
    labels = [s.label for s in settings]
    assert len(set(labels)) == len(labels), "plan labels collide"
    return settings


def target_alphabets(target: PureState) -> dict[str, tuple[int, ...]]:
    """Per-path OAM alphabets spanned by a target's kets."""
    alphabets: dict[str, set[int]] = {p: set() for p in target.paths}
    for ket in target.terms:
        for p, l in ket.modes:
            alphabets[p].add(l)
    return {p: tuple(sorted(v)) for p, v in alphabets.items()}


# --- Born-rule evaluation --------------------------------------------------


def expected_probability(
    rho: MixedState | DensityMatrix | PureState,
    m: MeasurementSetting,
    efficiencies: Mapping[int, float] | None = None,
) -> float:
    """Probability of the joint projection ``Tr(rho Pi_A x Pi_B x Pi_C)``.

    ``efficiencies`` optionally scales the outcome by a per-OAM coupling
    efficiency, applied per photon as the projector's weight on each OAM
    value (models unequal fiber-coupling of the hologram modes); detection
    probabilities then no longer sum to one over a complete basis.
    """
    pi = m.joint_ket()
    if isinstance(rho, PureState):
        rho = MixedState.pure(rho)
    if isinstance(rho, MixedState):
        if set(rho.paths) != set(pi.paths):
            raise ValueError(f"setting paths {pi.paths} do not match state {rho.paths}")
        p = sum(w * abs(pi.inner(psi)) ** 2 for w, psi in rho.ensemble)
    else:
        if set(rho.paths) != set(pi.paths):
            raise ValueError(f"setting paths {pi.paths} do not match state {rho.paths}")
        v = np.array([pi.amplitude(k) for k in rho.basis], dtype=complex)
        p = float(np.real(np.vdot(v, rho.matrix @ v)))
    p = float(min(max(p, 0.0), 1.0))
    if efficiencies:
        for _, spec in m.projectors:
            ket = projector_state(spec)
            p *= sum(
                abs(a) ** 2 * efficiencies.get(l, 1.0)
                for l, a in ket.single_oam_map().items()
            )
    return p


# --- count tables ----------------------------------------------------------


@dataclass(frozen=True)
class CountRow:
    label: str
    counts: float
    duration: float

    def __post_init__(self):
        if self.counts < 0:
            raise ValueError(f"negative counts in row {self.label!r}")
        if self.duration <= 0:
            raise ValueError(f"non-positive duration in row {self.label!r}")

    @property
    def rate(self) -> float:
        return self.counts / self.duration


@dataclass(frozen=True)
class CountTable:
    """Recorded or simulated coincidence counts, one row per setting.

    ``counts`` is a float so noiseless tables can carry probabilities in
    place of integer clicks; simulated and ingested tables hold whole
    numbers. Normalization convention: the total rate ``C_T`` is the sum
    of the 18 diagonal-setting rates and divides every probability
    estimate.
    """

    rows: tuple[CountRow, ...]

    def __post_init__(self):
        labels = [r.label for r in self.rows]
        dupes = {l for l in labels if labels.count(l) > 1}
        if dupes:
            raise ValueError(f"duplicate setting labels: {sorted(dupes)}")

    def __len__(self) -> int:
        return len(self.rows)

    def rates(self) -> dict[str, float]:
        return {r.label: r.rate for r in self.rows}

    def counts(self) -> dict[str, float]:
        return {r.label: r.counts for r in self.rows}

    def require(self, labels: Iterable[str]) -> None:
        have = {r.label for r in self.rows}
        missing = [l for l in labels if l not in have]
        if missing:
            raise IncompleteDataError(missing)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["label", "counts", "duration_s"])
            for r in self.rows:
                counts = int(r.counts) if float(r.counts).is_integer() else r.counts
                writer.writerow([r.label, repr(counts) if isinstance(counts, float) else counts, repr(r.duration)])


def ingest_counts(path) -> CountTable:
    """Read a ``label,counts,duration_s`` CSV into a validated table."""
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if [h.strip() for h in header] != ["label", "counts", "duration_s"]:
            raise ValueError(f"{path}:1: expected header 'label,counts,duration_s', got {header}")
        for ln, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != 3:
                raise ValueError(f"{path}:{ln}: expected 3 fields, got {len(record)}")
            label, counts_s, duration_s = record
            try:
                counts = float(counts_s)
                duration = float(duration_s)
            except ValueError:
                raise ValueError(f"{path}:{ln}: cannot parse numbers in {record}") from None
            if counts < 0:
                raise ValueError(f"{path}:{ln}: negative counts for {label!r}")
            rows.append(CountRow(label, counts, duration))
    try:
        return CountTable(tuple(rows))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def simulate_counts(
    rho,
    plan: Sequence[MeasurementSetting],
    pair_rate: float,
    duration: float = DEFAULT_DURATION_S,
    seed: int = 0,
    efficiencies: Mapping[int, float] | None = None,
) -> CountTable:
    """Poisson-sample clicks for every setting in the plan.

    Each row draws from an independent stream derived from ``(seed, row)``
    so the table is reproducible regardless of evaluation order.
    """
    if pair_rate <= 0 or duration <= 0:
        raise ValueError("pair_rate and duration must be positive")
    rows = []
    for i, setting in enumerate(plan):
        p = expected_probability(rho, setting, efficiencies)
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        n = int(rng.poisson(pair_rate * duration * p))
        rows.append(CountRow(setting.label, float(n), float(duration)))
    return CountTable(tuple(rows))


def probability_table(rho, plan: Sequence[MeasurementSetting]) -> CountTable:
    """Noiseless table: exact Born probabilities in place of counts."""
    rows = [
        CountRow(setting.label, expected_probability(rho, setting), 1.0)
        for setting in plan
    ]
    return CountTable(tuple(rows))


# --- reconstruction --------------------------------------------------------


@dataclass(frozen=True)
class ElementEstimate:
    """One reconstructed density-matrix element with its Poisson error."""

    element: tuple[BasisKet, BasisKet]
    value: complex
    stderr: float

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")


def total_rate(
    ct: CountTable, alphabets: Mapping[str, Sequence[int]] | None = None
) -> float:
    """Normalization constant C_T: summed rate of all diagonal settings."""
    alphabets = dict(alphabets or DEFAULT_ALPHABETS)
    labels = [diagonal_label(k) for k in enumerate_kets(alphabets)]
    ct.require(labels)
    rates = ct.rates()
    return float(sum(rates[l] for l in labels))


def reconstruct_diagonals(
    ct: CountTable, alphabets: Mapping[str, Sequence[int]] | None = None
) -> dict[BasisKet, float]:
    """Diagonal probabilities ``C(ijk) / C_T`` over the full alphabet.

    Nonnegative and summing to one by construction.
    """
    alphabets = dict(alphabets or DEFAULT_ALPHABETS)
    kets = enumerate_kets(alphabets)
    c_t = total_rate(ct, alphabets)
    rates = ct.rates()
    return {k: rates[diagonal_label(k)] / c_t for k in kets}


def reconstruct_offdiagonal(
    ct: CountTable,
    element: tuple[BasisKet, BasisKet],
    alphabets: Mapping[str, Sequence[int]] | None = None,
) -> ElementEstimate:
    """Assemble ``<bra| rho |ket>`` from superposition-projector counts.

    Real and imaginary parts come from the signed sigma-pattern sums of
    `element_weights`, each setting probability estimated as its rate over
    C_T. The standard error propagates the per-row Poisson variance
    through the linear assembly (C_T treated as fixed).
    """
    bra, ket = element
    re_w, im_w = element_weights(bra, ket)
    c_t = total_rate(ct, alphabets)
    ct.require(sorted(set(re_w) | set(im_w)))
    rates = ct.rates()
    counts = ct.counts()
    durations = {r.label: r.duration for r in ct.rows}

    def assemble(weights: Mapping[str, float]) -> tuple[float, float]:
        value = sum(w * rates[l] for l, w in weights.items()) / c_t
        var = sum(
            (w / (durations[l] * c_t)) ** 2 * counts[l] for l, w in weights.items()
        )
        return value, var

    re_val, re_var = assemble(re_w)
    im_val, im_var = assemble(im_w)
    return ElementEstimate(
        element=(bra, ket),
        value=complex(re_val, im_val),
        stderr=float(np.sqrt(re_var + im_var)),
    )
