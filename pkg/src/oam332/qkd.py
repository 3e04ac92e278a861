"""Layered three-party key protocol on the asymmetric 3x3x2 state.

Every round, the three parties measure their photon in the computational
OAM basis. All rounds where the two-valued photon (Carol) reads 1 leave
Alice and Bob correlated in a second two-level subspace, so on top of the
key shared by all three parties, Alice and Bob distill an extra layer
unknown to Carol roughly two thirds of the time. A randomly sacrificed
subset of rounds is measured with the witness settings instead; security
holds while the witness still certifies the full dimensionality
structure.

Basis reconciliation is deliberately trivial here: key rounds use only
the computational basis, superposition measurements appear only inside
the sacrificed witness subset, and eavesdropping is modelled purely as
source-state degradation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IncompleteDataError
from .hilbert import BasisKet, MixedState, PureState, target_state
from .measurement import (
    CountRow,
    CountTable,
    MeasurementSetting,
    expected_probability,
    witness_plan,
)
from .witness import RankClass, WitnessResult, certify, fexp_estimate, fmax_bound

DEFAULT_BOUND = 2.0 / 3.0


@dataclass(frozen=True)
class RoundOutcome:
    """One protocol round: per-party symbols plus the sacrifice flag.

    Alice and Bob read a trit, Carol a bit; noise may decorrelate the
    three values.
    """

    alice: int
    bob: int
    carol: int
    sacrificed: bool = False

    def __post_init__(self):
        if self.alice not in (0, 1, 2) or self.bob not in (0, 1, 2):
            raise ValueError("alice/bob symbols must be in {0, 1, 2}")
        if self.carol not in (0, 1):
            raise ValueError("carol bit must be 0 or 1")


@dataclass(frozen=True)
class LayeredKeys:
    """Sifted key material and error rates for both layers."""

    layer1: str
    layer2: str
    qber1: float
    qber2: float
    layer2_fraction: float


def symbol_maps(target: PureState | None = None) -> dict[str, dict[int, int]]:
    """Per-party maps from OAM value to logical symbol.

    Symbol k is the party's OAM value in the k-th target term (terms in
    canonical diagonal order: the all-zeros term first); for the
    three-level parties this is a bijection, for the two-level party the
    two shared-value terms collapse onto bit 1.
    """
    target = target or target_state()
    kets = target.kets()
    zero = min(kets, key=lambda k: sum(abs(l) for _, l in k.modes))
    ordered = [zero] + sorted(k for k in kets if k != zero)
    maps: dict[str, dict[int, int]] = {p: {} for p in target.paths}
    for sym, ket in enumerate(ordered):
        for p, l in ket.modes:
            maps[p].setdefault(l, sym)
    return maps


def sift(rounds: Sequence[RoundOutcome]) -> LayeredKeys:
    """Distill both key layers from the kept rounds.

    Layer 1 is one bit per kept round, 0 when Alice reads symbol 0 and 1
    otherwise, checked against Carol's bit. Layer 2 exists for rounds
    where Carol reads 1 and Alice's symbol is in {1, 2}; its bit is
    ``alice - 1``, checked against Bob's symbol likewise (a Bob symbol of
    0 in such a round counts as an error).
    """
    kept = [r for r in rounds if not r.sacrificed]
    if not kept:
        raise ValueError("no kept rounds to sift")
    layer1 = []
    layer2 = []
    err1 = 0
    err2 = 0
    for r in kept:
        bit1 = 0 if r.alice == 0 else 1
        layer1.append(str(bit1))
        if bit1 != r.carol:
            err1 += 1
        if r.carol == 1 and r.alice in (1, 2):
            bit2 = r.alice - 1
            layer2.append(str(bit2))
            if r.bob not in (1, 2) or (r.bob - 1) != bit2:
                err2 += 1
    n1, n2 = len(layer1), len(layer2)
    return LayeredKeys(
        layer1="".join(layer1),
        layer2="".join(layer2),
        qber1=err1 / n1,
        qber2=err2 / n2 if n2 else 0.0,
        layer2_fraction=n2 / n1,
    )


def run_protocol(
    n_rounds: int,
    source: MixedState | PureState,
    sacrifice_fraction: float,
    seed: int = 0,
    plan: Sequence[MeasurementSetting] | None = None,
    target: PureState | None = None,
) -> tuple[LayeredKeys, CountTable]:
    """Sample rounds from the source, sift keys, accumulate witness counts.

    Each round draws a computational-basis outcome from the source via the
    Born rule. Sacrificed rounds (a Bernoulli fraction) are assigned
    witness settings round-robin in plan order and record a single
    projective yes/no click each; the returned table holds clicks and
    trial counts (as the row duration) per setting. Draw order is fixed
    (outcomes, then sacrifice flags, then clicks), so a seed pins the
    whole run.
    """
    if n_rounds <= 0:
        raise ValueError("n_rounds must be positive")
    if not 0.0 <= sacrifice_fraction < 1.0:
        raise ValueError("sacrifice_fraction must be in [0, 1)")
    source_ms = MixedState.pure(source) if isinstance(source, PureState) else source
    target = target or target_state()
    if set(source_ms.paths) != set(target.paths):
        raise ValueError(
            f"source paths {source_ms.paths} do not match target {target.paths}"
        )
    maps = symbol_maps(target)
    probs = source_ms.diagonal_probabilities()
    kets = sorted(probs)
    for ket in kets:
        for p, l in ket.modes:
            if l not in maps[p]:
                raise ValueError(f"source emits OAM {l} outside party {p}'s alphabet")
    pvals = np.array([probs[k] for k in kets])
    pvals = pvals / pvals.sum()
    cum = np.cumsum(pvals)

    rng = np.random.default_rng(seed)
    draws = rng.random(n_rounds)
    outcome_idx = np.searchsorted(cum, draws, side="right")
    outcome_idx = np.minimum(outcome_idx, len(kets) - 1)
    sacrificed = rng.random(n_rounds) < sacrifice_fraction

    paths = sorted(target.paths)
    pa, pb, pc = paths
    rounds = []
    for i in range(n_rounds):
        ket = kets[outcome_idx[i]]
        rounds.append(
            RoundOutcome(
                alice=maps[pa][ket[pa]],
                bob=maps[pb][ket[pb]],
                carol=maps[pc][ket[pc]],
                sacrificed=bool(sacrificed[i]),
            )
        )

    plan = list(plan) if plan is not None else witness_plan(target)
    n_sac = int(np.sum(sacrificed))
    clicks = np.zeros(len(plan))
    trials = np.zeros(len(plan))
    if n_sac:
        setting_probs = np.array(
            [expected_probability(source_ms, s) for s in plan]
        )
        assignment = np.arange(n_sac) % len(plan)
        u = rng.random(n_sac)
        for j, s_idx in enumerate(assignment):
            trials[s_idx] += 1
            if u[j] < setting_probs[s_idx]:
                clicks[s_idx] += 1
    table_rows = [
        CountRow(plan[i].label, float(clicks[i]), float(trials[i]))
        for i in range(len(plan))
        if trials[i] > 0
    ]
    keys = sift(rounds)
    return keys, CountTable(tuple(table_rows))


def security_check(
    sacrificed: CountTable,
    threshold: float = DEFAULT_BOUND,
    target: PureState | None = None,
    mc_runs: int = 1000,
    seed: int = 0,
) -> tuple[str, WitnessResult]:
    """Witness the sacrificed subset against the dimensionality bound.

    Delegates to the fidelity estimator and certification; the verdict is
    ``"accept"`` when the witness certifies, ``"abort"`` otherwise.
    """
    target = target or target_state()
    value, stderr = fexp_estimate(sacrificed, target, mc_runs=mc_runs, seed=seed)
    result = certify((value, stderr), threshold)
    return ("accept" if result.verdict == "certified" else "abort"), result
