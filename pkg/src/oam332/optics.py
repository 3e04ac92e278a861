"""Photon-pair sources, the parity-sorting beam splitter, heralding, and
closed-form visibility/dip predictions.

The source model emits anti-correlated OAM pairs; two such pairs feed a
two-input interferometric sorter that transmits even OAM values and
reflects odd ones. Coincidence post-selection between the two outputs
keeps only terms where both input photons share a mode parity, and a
trigger projection on photon D heralds the surviving three-photon state.

Partial photon indistinguishability is reduced to a single scalar
``lambda`` in [0, 1] mixing the coherent post-selected amplitude with the
fully dephased mixture over surviving terms; the spectral-filter model
below (``visibility_theory`` and friends) predicts the observable
visibility from physical filter widths and timing jitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .hilbert import (
    BasisKet,
    MixedState,
    PureState,
    normalize,
    project,
    tensor,
)

SPEED_OF_LIGHT = 299792458.0  # m/s


@dataclass(frozen=True)
class PairSpec:
    """Anti-correlated OAM pair emitted by one down-conversion source.

    The emitted state is ``sum_l a_l |l>_signal |-l>_idler``. Amplitudes
    are real, keyed by the signal OAM value, and renormalized on
    construction; the OAM alphabet must be symmetric about zero so the
    anti-correlation closes on itself.
    """

    signal: str
    idler: str
    amplitudes: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if self.signal == self.idler:
            raise ValueError("signal and idler paths must differ")
        amps = dict(self.amplitudes)
        if not amps:
            raise ValueError("pair spec needs at least one OAM amplitude")
        for l in amps:
            if -l not in amps:
                raise ValueError(f"OAM alphabet not symmetric about 0: missing {-l}")
        norm = math.sqrt(sum(a * a for a in amps.values()))
        if norm == 0.0:
            raise ValueError("pair amplitudes are all zero")
        object.__setattr__(
            self,
            "amplitudes",
            tuple(sorted((l, a / norm) for l, a in amps.items())),
        )

    @classmethod
    def flat(cls, signal: str, idler: str, alphabet=(-1, 0, 1)) -> "PairSpec":
        return cls(signal, idler, tuple((l, 1.0) for l in alphabet))

    @classmethod
    def from_mapping(cls, signal: str, idler: str, amps: Mapping[int, float]) -> "PairSpec":
        return cls(signal, idler, tuple(amps.items()))

    def amplitude(self, l: int) -> float:
        return dict(self.amplitudes).get(l, 0.0)


@dataclass(frozen=True)
class SpectralParams:
    """Gaussian spectral widths and timing jitter driving the visibility model.

    Widths are plain frequency standard deviations in Hz (pump, signal
    filter, trigger filter), the jitter is in seconds, and the two
    efficiencies (mode-sorting and spatial overlap) are dimensionless.
    """

    sigma_p: float
    sigma_s: float
    sigma_t: float
    tau_j: float
    eta_oam: float = 1.0
    eta_sp: float = 1.0

    def __post_init__(self):
        for name in ("sigma_p", "sigma_s", "sigma_t"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.tau_j < 0:
            raise ValueError("tau_j must be nonnegative")
        for name in ("eta_oam", "eta_sp"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1]")

    @classmethod
    def paper_values(cls) -> "SpectralParams":
        """The operating point quoted with the published interference data."""
        return cls(
            sigma_p=3.67e12,
            sigma_s=184e9,
            sigma_t=588e9,
            tau_j=1e-12,
            eta_oam=0.99,
            eta_sp=0.9,
        )


@dataclass(frozen=True)
class SplitterConfig:
    """Two-input parity sorter wiring.

    Routing rule (fixed physics): a photon entering ``inputs[0]`` with even
    OAM exits port 1 and with odd OAM exits port 2; a photon entering
    ``inputs[1]`` does the opposite. ``output_relabel`` names the detector
    path watching each port. The default assignment (port 1 -> detector C,
    port 2 -> detector B) is the convention under which the post-selected
    state keeps its source mode labels; it is pinned by the heralded-state
    acceptance tests rather than by a physical argument.

    ``oam_relabel`` optionally re-maps OAM values at one detector (default
    C); identity by default, recorded here so the two-valued alphabet seen
    by detector C is an explicit configuration choice.
    """

    inputs: tuple[str, str] = ("B", "C")
    output_relabel: tuple[tuple[str, str], ...] = (("port1", "C"), ("port2", "B"))
    oam_relabel: tuple[tuple[int, int], ...] = ()
    oam_relabel_path: str = "C"

    def __post_init__(self):
        relabel = dict(self.output_relabel)
        if set(relabel) != {"port1", "port2"}:
            raise ValueError("output_relabel must assign exactly port1 and port2")
        if len(set(relabel.values())) != 2:
            raise ValueError("output_relabel must be a bijection onto two detector paths")
        remap = dict(self.oam_relabel)
        if len(set(remap.values())) != len(remap):
            raise ValueError("oam_relabel must be a bijection")

    def detector(self, port: str) -> str:
        return dict(self.output_relabel)[port]


@dataclass(frozen=True)
class HeraldSpec:
    """Trigger projection applied to photon D.

    Real amplitudes over the trigger OAM alphabet, renormalized on
    construction (published values are rounded, so the stored ket is
    normalized exactly, well inside the 1e-6 requirement).
    """

    path: str = "D"
    amplitudes: tuple[tuple[int, float], ...] = ((0, 1.0), (-1, 1.0))

    def __post_init__(self):
        amps = dict(self.amplitudes)
        if not amps:
            raise ValueError("herald needs at least one amplitude")
        norm = math.sqrt(sum(a * a for a in amps.values()))
        if norm == 0.0:
            raise ValueError("herald amplitudes are all zero")
        object.__setattr__(
            self,
            "amplitudes",
            tuple(sorted((l, a / norm) for l, a in amps.items())),
        )

    @classmethod
    def balanced(cls, values=(0, -1), path: str = "D") -> "HeraldSpec":
        return cls(path, tuple((l, 1.0) for l in values))

    @classmethod
    def paper_values(cls, path: str = "D") -> "HeraldSpec":
        """Unbalanced trigger compensating the stronger l=0 emission."""
        return cls(path, ((0, 0.51), (-1, 0.86)))

    def ket(self) -> PureState:
        return normalize(PureState.single(self.path, dict(self.amplitudes)))


def spdc_pair(spec: PairSpec) -> PureState:
    """Two-photon state ``sum_l a_l |l>_signal |-l>_idler``."""
    terms = {}
    for l, a in spec.amplitudes:
        ket = BasisKet.from_mapping({spec.signal: l, spec.idler: -l})
        terms[ket] = terms.get(ket, 0.0) + a
    return normalize(PureState(terms))


def four_photon_state(pair1: PairSpec, pair2: PairSpec) -> PureState:
    """Tensor product of two independent pair states."""
    paths1 = {pair1.signal, pair1.idler}
    paths2 = {pair2.signal, pair2.idler}
    if paths1 & paths2:
        raise ValueError(f"pair paths collide: {sorted(paths1 & paths2)}")
    return tensor(spdc_pair(pair1), spdc_pair(pair2))


def parity_split_coincidence(
    s: PureState, cfg: SplitterConfig, lam: float
) -> tuple[MixedState, float]:
    """Route the two splitter inputs by OAM parity and post-select coincidences.

    Every ket routes each input photon deterministically (even keeps its
    transmit port, odd swaps); kets sending both photons to one port are
    discarded by the coincidence condition, the rest are relabelled to
    detector paths. ``lam`` interpolates between the fully coherent
    superposition of the surviving amplitudes (lam=1) and the incoherent,
    distinguishable-photon mixture over the surviving routed kets (lam=0):
    the returned ensemble is ``lam * coherent + (1-lam) * mixture``,
    renormalized, and the success probability interpolates accordingly.

    Returns the conditioned state and the coincidence probability.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda {lam} outside [0, 1]")
    in0, in1 = cfg.inputs
    for p in (in0, in1):
        if p not in s.paths:
            raise ValueError(f"splitter input {p!r} absent from state over {s.paths}")
    det_port1 = cfg.detector("port1")
    det_port2 = cfg.detector("port2")
    remap = dict(cfg.oam_relabel)

    coherent: dict[BasisKet, complex] = {}
    routed: list[tuple[BasisKet, float]] = []
    for ket, amp in s.terms.items():
        l0, l1 = ket[in0], ket[in1]
        if (l0 % 2) != (l1 % 2):
            continue  # both photons exit the same port: no coincidence
        if l0 % 2 == 0:
            # both transmit: input0 -> port1, input1 -> port2
            assignment = {det_port1: l0, det_port2: l1}
        else:
            # both reflect: input0 -> port2, input1 -> port1
            assignment = {det_port2: l0, det_port1: l1}
        if remap:
            tgt = cfg.oam_relabel_path
            if tgt in assignment:
                assignment[tgt] = remap.get(assignment[tgt], assignment[tgt])
        full = {p: ket[p] for p in s.paths if p not in (in0, in1)}
        full.update(assignment)
        out = BasisKet.from_mapping(full)
        coherent[out] = coherent.get(out, 0.0) + amp
        routed.append((out, abs(amp) ** 2))

    if not coherent:
        raise ValueError("no coincidence support: every term left by one port")

    p_coherent = float(sum(abs(a) ** 2 for a in coherent.values()))
    p_incoherent = float(sum(w for _, w in routed))
    p_total = lam * p_coherent + (1.0 - lam) * p_incoherent
    members: list[tuple[float, PureState]] = []
    if lam > 0.0:
        members.append((lam * p_coherent / p_total, normalize(PureState(coherent))))
    if lam < 1.0:
        weights: dict[BasisKet, float] = {}
        for out, w in routed:
            weights[out] = weights.get(out, 0.0) + w
        for out in sorted(weights):
            members.append(
                ((1.0 - lam) * weights[out] / p_total, PureState({out: 1.0}))
            )
    return MixedState(tuple(members)), p_total


def herald(
    s: MixedState | PureState, h: HeraldSpec
) -> tuple[MixedState | None, float]:
    """Project the trigger photon onto the herald state.

    Returns the conditioned ensemble over the remaining photons and the
    herald probability; ``(None, 0.0)`` when the herald never fires.
    """
    ms = MixedState.pure(s) if isinstance(s, PureState) else s
    if h.path not in ms.paths:
        raise ValueError(f"herald path {h.path!r} absent from state over {ms.paths}")
    ket = h.ket()
    members = []
    total = 0.0
    for w, psi in ms.ensemble:
        residual, p = project(psi, h.path, ket)
        if p > 0.0:
            members.append((w * p, residual))
            total += w * p
    if not members:
        return None, 0.0
    return MixedState(tuple((w / total, psi) for w, psi in members)), float(total)


def simulate_heralded(
    pair1: PairSpec,
    pair2: PairSpec,
    splitter: SplitterConfig,
    herald_spec: HeraldSpec,
    lam: float,
) -> tuple[MixedState | None, float]:
    """Full source -> sorter -> trigger chain.

    Returns the heralded three-photon ensemble and the four-fold
    probability (coincidence probability times herald probability).
    """
    four = four_photon_state(pair1, pair2)
    conditioned, p_coinc = parity_split_coincidence(four, splitter, lam)
    heralded, p_herald = herald(conditioned, herald_spec)
    return heralded, p_coinc * p_herald


def visibility_theory(p: SpectralParams) -> float:
    """Spectral-model visibility of two-photon interference between
    independently heralded photons.

    Evaluates the closed-form expression in terms of the pump, signal and
    trigger Gaussian widths and the inter-source timing jitter.
    """
    sp2, ss2, st2 = p.sigma_p**2, p.sigma_s**2, p.sigma_t**2
    num = 2.0 * math.sqrt(st2 + sp2) * math.sqrt(ss2 + sp2 + ss2 * sp2 * p.tau_j**2)
    den = p.sigma_p * math.sqrt(ss2 + st2 + sp2)
    return 1.0 / (num / den - 1.0)


def visibility_effective(v_prime: float, eta_oam: float, eta_sp: float) -> float:
    """Fold sorting efficiency and spatial overlap into the raw visibility:
    ``V = eta^2 V' / (1 + V' (1 - eta^2))`` with ``eta = eta_oam * eta_sp``.
    """
    for name, v in (("v_prime", v_prime), ("eta_oam", eta_oam), ("eta_sp", eta_sp)):
        if not 0.0 < v <= 1.0:
            raise ValueError(f"{name} must be in (0, 1], got {v}")
    eta2 = (eta_oam * eta_sp) ** 2
    return eta2 * v_prime / (1.0 + v_prime * (1.0 - eta2))


def dip_fwhm(p: SpectralParams) -> float:
    """Full width at half maximum of the interference dip, in meters.

    ``L = (c/pi) * sqrt(2 ln2 * (sigma_p^-2 + sigma_s^-2 + tau_j^2))``.
    The jitter and inverse widths add in quadrature under the square root;
    this is the dimensionally consistent form of the published expression
    (which typesets the sum in a denominator).
    """
    acc = p.sigma_p**-2 + p.sigma_s**-2 + p.tau_j**2
    return (SPEED_OF_LIGHT / math.pi) * math.sqrt(2.0 * math.log(2.0) * acc)


def dip_curve(delays, v0: float, fwhm: float, base_rate: float):
    """Gaussian coincidence-dip profile over a delay grid (meters).

    ``R(d) = base_rate * (1 - v0 * exp(-4 ln2 d^2 / fwhm^2))``; the minimum
    sits at zero delay with depth ``v0``.
    """
    if not 0.0 <= v0 <= 1.0:
        raise ValueError(f"v0 {v0} outside [0, 1]")
    if fwhm <= 0.0:
        raise ValueError("fwhm must be positive")
    d = np.asarray(delays, dtype=float)
    return base_rate * (1.0 - v0 * np.exp(-4.0 * math.log(2.0) * d**2 / fwhm**2))


def lambda_of_delay(delay: float, lambda0: float, fwhm: float):
    """Indistinguishability schedule tying the scalar mixing parameter to
    the trombone delay: a Gaussian of the same FWHM as the dip.
    """
    if not 0.0 <= lambda0 <= 1.0:
        raise ValueError(f"lambda0 {lambda0} outside [0, 1]")
    if fwhm <= 0.0:
        raise ValueError("fwhm must be positive")
    d = np.asarray(delay, dtype=float)
    out = lambda0 * np.exp(-4.0 * math.log(2.0) * d**2 / fwhm**2)
    return float(out) if np.isscalar(delay) else out
