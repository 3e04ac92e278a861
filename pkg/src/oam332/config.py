"""Experiment configuration: JSON schema, defaults, and state building.

All physical quantities carry explicit unit suffixes in the file
(`_hz`, `_s`, `_m`) so the frequency/time conventions of the visibility
model never leak ambiguously to users.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .hilbert import MixedState
from .optics import (
    HeraldSpec,
    PairSpec,
    SpectralParams,
    SplitterConfig,
    simulate_heralded,
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to run the source -> sorter -> trigger chain."""

    pair1: PairSpec
    pair2: PairSpec
    spectral: SpectralParams
    splitter: SplitterConfig
    herald: HeraldSpec
    lambda0: float = 1.0
    seed: int = 0

    def heralded_state(self, lambda0: float | None = None) -> tuple[MixedState, float]:
        """Heralded three-photon ensemble and the four-fold probability."""
        lam = self.lambda0 if lambda0 is None else lambda0
        state, p = simulate_heralded(self.pair1, self.pair2, self.splitter, self.herald, lam)
        if state is None:
            raise ConfigError("herald never fires for this configuration")
        return state, p


def default_config() -> ExperimentConfig:
    """Idealized defaults: flat triplet pairs, balanced trigger, the
    published spectral operating point, full indistinguishability."""
    return ExperimentConfig(
        pair1=PairSpec.flat("A", "B"),
        pair2=PairSpec.flat("C", "D"),
        spectral=SpectralParams.paper_values(),
        splitter=SplitterConfig(),
        herald=HeraldSpec.balanced(),
        lambda0=1.0,
        seed=0,
    )


def _amplitude_map(raw: dict, where: str) -> dict[int, float]:
    try:
        return {int(k): float(v) for k, v in raw.items()}
    except (TypeError, ValueError):
        raise ConfigError("amplitude maps need integer OAM keys and numeric values", where) from None


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate a JSON experiment configuration."""
    path = Path(path)
    if not path.exists():
        raise ConfigError("configuration file not found", str(path))
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}") from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a JSON object", str(path))
    return config_from_dict(raw, where=str(path))


def config_from_dict(raw: dict, where: str = "<config>") -> ExperimentConfig:
    base = default_config()
    try:
        pairs = raw.get("pairs", {})
        if not isinstance(pairs, dict):
            raise ConfigError("'pairs' must be an object", where)
        pair_paths1 = tuple(pairs.get("pair1_paths", ["A", "B"]))
        pair_paths2 = tuple(pairs.get("pair2_paths", ["C", "D"]))
        if "amplitudes" in pairs:
            amps = _amplitude_map(pairs["amplitudes"], f"{where}: pairs.amplitudes")
            pair1 = PairSpec.from_mapping(*pair_paths1, amps)
            pair2 = PairSpec.from_mapping(*pair_paths2, amps)
        else:
            alphabet = tuple(pairs.get("alphabet", (-1, 0, 1)))
            pair1 = PairSpec.flat(*pair_paths1, alphabet)
            pair2 = PairSpec.flat(*pair_paths2, alphabet)

        sp = raw.get("spectral", {})
        if not isinstance(sp, dict):
            raise ConfigError("'spectral' must be an object", where)
        spectral = SpectralParams(
            sigma_p=float(sp.get("sigma_p_hz", base.spectral.sigma_p)),
            sigma_s=float(sp.get("sigma_s_hz", base.spectral.sigma_s)),
            sigma_t=float(sp.get("sigma_t_hz", base.spectral.sigma_t)),
            tau_j=float(sp.get("tau_j_s", base.spectral.tau_j)),
            eta_oam=float(sp.get("eta_oam", base.spectral.eta_oam)),
            eta_sp=float(sp.get("eta_sp", base.spectral.eta_sp)),
        )

        spl = raw.get("splitter", {})
        if not isinstance(spl, dict):
            raise ConfigError("'splitter' must be an object", where)
        relabel_raw = spl.get("output_relabel", {"port1": "C", "port2": "B"})
        splitter = SplitterConfig(
            inputs=tuple(spl.get("inputs", ["B", "C"])),
            output_relabel=tuple(sorted(relabel_raw.items())),
            oam_relabel=tuple(
                sorted((int(k), int(v)) for k, v in spl.get("oam_relabel", {}).items())
            ),
            oam_relabel_path=spl.get("oam_relabel_path", "C"),
        )

        her = raw.get("herald", {})
        if not isinstance(her, dict):
            raise ConfigError("'herald' must be an object", where)
        if "amplitudes" in her:
            hamps = _amplitude_map(her["amplitudes"], f"{where}: herald.amplitudes")
            herald_spec = HeraldSpec(her.get("path", "D"), tuple(hamps.items()))
        else:
            herald_spec = base.herald

        lambda0 = float(raw.get("lambda0", 1.0))
        if not 0.0 <= lambda0 <= 1.0:
            raise ConfigError(f"lambda0 {lambda0} outside [0, 1]", where)
        seed = int(raw.get("seed", 0))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), where) from None

    return ExperimentConfig(
        pair1=pair1,
        pair2=pair2,
        spectral=spectral,
        splitter=splitter,
        herald=herald_spec,
        lambda0=lambda0,
        seed=seed,
    )


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "pairs": {
            "pair1_paths": [cfg.pair1.signal, cfg.pair1.idler],
            "pair2_paths": [cfg.pair2.signal, cfg.pair2.idler],
            "amplitudes": {str(l): a for l, a in cfg.pair1.amplitudes},
        },
        "spectral": {
            "sigma_p_hz": cfg.spectral.sigma_p,
            "sigma_s_hz": cfg.spectral.sigma_s,
            "sigma_t_hz": cfg.spectral.sigma_t,
            "tau_j_s": cfg.spectral.tau_j,
            "eta_oam": cfg.spectral.eta_oam,
            "eta_sp": cfg.spectral.eta_sp,
        },
        "splitter": {
            "inputs": list(cfg.splitter.inputs),
            "output_relabel": dict(cfg.splitter.output_relabel),
            "oam_relabel": {str(k): v for k, v in cfg.splitter.oam_relabel},
            "oam_relabel_path": cfg.splitter.oam_relabel_path,
        },
        "herald": {
            "path": cfg.herald.path,
            "amplitudes": {str(l): a for l, a in cfg.herald.amplitudes},
        },
        "lambda0": cfg.lambda0,
        "seed": cfg.seed,
    }
