"""Text-based instance bundles.

A bundle directory holds ``config.txt`` (flat key-value metadata),
``scene.txt`` (one target per line: ``beta,tau,f,re,im``), and
``measurements.txt`` (one ``re,im`` pair per line). Signals are stored as a
seed + family by default; ``signals.txt`` materializes the raw arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import DopplerMode, GridIndex, RadarConfig
from .signals import SignalFamily, SignalSet, generate_signals
from .supports import SupportSet, TargetScene

CONFIG_FILE = "config.txt"
SCENE_FILE = "scene.txt"
MEASUREMENTS_FILE = "measurements.txt"
SIGNALS_FILE = "signals.txt"
RESULT_FILE = "result.txt"
CURVES_FILE = "curves.csv"


def write_complex_array(path, values: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in np.asarray(values, dtype=np.complex128).ravel():
            fh.write(f"{float(v.real)!r},{float(v.imag)!r}\n")


def read_complex_array(path) -> np.ndarray:
    values = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        re_s, _, im_s = line.partition(",")
        try:
            values.append(complex(float(re_s), float(im_s)))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: malformed complex entry") from exc
    return np.asarray(values, dtype=np.complex128)


def write_key_values(path, mapping: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in mapping.items():
            fh.write(f"{key} = {value}\n")


def read_key_values(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def write_scene(path, scene: TargetScene) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for theta, coeff in zip(scene.support.indices, scene.coefficients):
            fh.write(
                f"{theta.beta},{theta.tau},{theta.f},"
                f"{float(coeff.real)!r},{float(coeff.imag)!r}\n"
            )


def read_scene(path) -> TargetScene:
    thetas, coeffs = [], []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ValueError(f"{path}:{lineno}: expected beta,tau,f,re,im")
        beta, tau, f = (int(p) for p in parts[:3])
        thetas.append(GridIndex(beta, tau, f))
        coeffs.append(complex(float(parts[3]), float(parts[4])))
    return TargetScene(
        support=SupportSet(tuple(thetas)),
        coefficients=np.asarray(coeffs, dtype=np.complex128),
    )


@dataclass(frozen=True)
class InstanceBundle:
    cfg: RadarConfig
    signals: SignalSet
    scene: TargetScene
    measurements: np.ndarray
    sigma: float


def write_bundle(
    out_dir,
    cfg: RadarConfig,
    signals: SignalSet,
    scene: TargetScene,
    measurements: np.ndarray,
    sigma: float,
    materialize: bool = False,
) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_key_values(
        out / CONFIG_FILE,
        {
            "n_transmit": cfg.n_transmit,
            "n_receive": cfg.n_receive,
            "n_samples": cfg.n_samples,
            "doppler_mode": cfg.doppler_mode.value,
            "family": signals.family.value,
            "signal_seed": signals.seed,
            "sigma": repr(sigma),
        },
    )
    write_scene(out / SCENE_FILE, scene)
    write_complex_array(out / MEASUREMENTS_FILE, measurements)
    if materialize:
        write_complex_array(out / SIGNALS_FILE, signals.signals)


def read_bundle(bundle_dir) -> InstanceBundle:
    base = Path(bundle_dir)
    for name in (CONFIG_FILE, SCENE_FILE, MEASUREMENTS_FILE):
        if not (base / name).is_file():
            raise FileNotFoundError(f"bundle is missing {base / name}")
    meta = read_key_values(base / CONFIG_FILE)
    cfg = RadarConfig(
        n_transmit=int(meta["n_transmit"]),
        n_receive=int(meta["n_receive"]),
        n_samples=int(meta["n_samples"]),
        doppler_mode=DopplerMode(meta["doppler_mode"]),
    )
    signals = generate_signals(
        cfg, SignalFamily(meta["family"]), int(meta["signal_seed"])
    )
    if (base / SIGNALS_FILE).is_file():
        stored = read_complex_array(base / SIGNALS_FILE).reshape(
            cfg.n_transmit, cfg.n_samples
        )
        if not np.array_equal(stored, signals.signals):
            raise ValueError(
                f"{base / SIGNALS_FILE} disagrees with the regenerated signals"
            )
    scene = read_scene(base / SCENE_FILE)
    scene.support.validate(cfg)
    measurements = read_complex_array(base / MEASUREMENTS_FILE)
    if measurements.shape != (cfg.n_measurements,):
        raise ValueError(
            f"expected {cfg.n_measurements} measurements, found {measurements.shape[0]}"
        )
    return InstanceBundle(
        cfg=cfg,
        signals=signals,
        scene=scene,
        measurements=measurements,
        sigma=float(meta.get("sigma", "1.0")),
    )
