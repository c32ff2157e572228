"""Experiment configuration files.

Frequencies are multiples of a reference bandwidth and times multiples of
its inverse; ports are 1-based.  Example::

    {
      "network": "tritter_fig2a",
      "input_ports": [1, 2, 3],
      "output_ports": [1, 2, 3],
      "photons": [
        {"omega0_rel": 0.0, "bandwidth_rel": 1.0, "t0_rel": 0.0, "polarization": "H"},
        {"omega0_rel": 8.0, "polarization": "H"},
        {"omega0_rel": 12.7, "polarization": "linear:90"}
      ],
      "delta_t_rel": 0.0
    }
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from mbcs.core import JonesVector, PortSample, Tolerances, linear_polarization, make_port_sample
from mbcs.correlation import Experiment
from mbcs.errors import ParseError, ValidationError
from mbcs.network import InterferometerUnitary, build_network
from mbcs.photonics import SpectralAmplitude, gaussian_photon, sampled_photon

_NAMED_POLS = {
    "H": (1, 0),
    "V": (0, 1),
    "D": (1 / math.sqrt(2), 1 / math.sqrt(2)),
    "A": (1 / math.sqrt(2), -1 / math.sqrt(2)),
    "R": (1 / math.sqrt(2), 1j / math.sqrt(2)),
    "L": (1 / math.sqrt(2), -1j / math.sqrt(2)),
}

_KNOWN_KEYS = {"description", "network", "input_ports", "output_ports", "photons",
               "delta_t_rel", "tolerances", "basis"}


def parse_polarization(value, where: str = "polarization") -> JonesVector:
    """"H", "V", "D", "A", "R", "L", "linear:<degrees>" or a pair of [re, im] components."""
    if isinstance(value, str):
        if value in _NAMED_POLS:
            return JonesVector(*_NAMED_POLS[value])
        if value.startswith("linear:"):
            try:
                return linear_polarization(math.radians(float(value[7:])))
            except ValueError:
                pass
        raise ValidationError(f"{where}: unknown polarization {value!r}")
    if isinstance(value, (list, tuple)) and len(value) == 2:
        try:
            comps = [complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c) for c in value]
            return JonesVector(*comps).normalized()
        except (TypeError, ValueError, IndexError):
            pass
    raise ValidationError(f"{where}: cannot interpret polarization {value!r}")


def bundled_config(name: str) -> Path:
    return Path(str(resources.files("mbcs") / "data" / name))


def resolve_config_path(path) -> Path:
    """Return ``path`` if it exists, else the bundled config of that name."""
    p = Path(path)
    if p.exists():
        return p
    b = bundled_config(p.name)
    if b.exists():
        return b
    raise ValidationError(f"config file {path} not found")


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    network: InterferometerUnitary
    network_spec: str
    input_ports: tuple[int, ...]            # 0-based
    output_ports: tuple[int, ...] | None    # 0-based
    photons: tuple[SpectralAmplitude, ...]
    delta_t: float
    tolerances: Tolerances
    basis: tuple[JonesVector, JonesVector] | None
    config_hash: str
    source: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    def experiment(self) -> Experiment:
        return Experiment.build(self.network, self.input_ports, self.photons, self.delta_t)

    def output_sample(self, override=None) -> PortSample:
        ports = override if override is not None else self.output_ports
        if ports is None:
            if self.network.M == len(self.input_ports):
                ports = tuple(range(self.network.M))
            else:
                raise ValidationError("output_ports required when N < M")
        return make_port_sample(ports, self.network.M)


def config_hash(doc) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _ports(doc, key, M, required=True):
    if key not in doc:
        if required:
            raise ValidationError(f"missing field {key!r}")
        return None
    val = doc[key]
    if not isinstance(val, list) or not all(isinstance(i, int) for i in val):
        raise ValidationError(f"{key}: expected a list of 1-based integers")
    zero = [i - 1 for i in val]
    sample = make_port_sample(zero, M)
    if key == "input_ports" and list(sample.ports) != zero:
        raise ValidationError("input_ports must be strictly increasing (photons are listed in port order)")
    return tuple(sample.ports)


def _photon(entry, i, tol) -> SpectralAmplitude:
    where = f"photons[{i}]"
    if not isinstance(entry, dict):
        raise ValidationError(f"{where}: expected an object")
    pol = parse_polarization(entry.get("polarization", "H"), f"{where}.polarization")
    if "sampled" in entry:
        s = entry["sampled"]
        try:
            grid = [float(w) for w in s["omega_rel"]]
            vals = [complex(v[0], v[1]) if isinstance(v, list) else complex(v) for v in s["amplitude"]]
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ValidationError(f"{where}.sampled: {exc}") from None
        return sampled_photon(grid, vals, pol, tol.normalization_tol)
    try:
        omega0 = float(entry.get("omega0_rel", 0.0))
        bw = float(entry.get("bandwidth_rel", 1.0))
        t0 = float(entry.get("t0_rel", 0.0))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{where}: {exc}") from None
    try:
        return gaussian_photon(omega0, bw, t0, pol)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def load_config_document(doc: dict, source: str = "<memory>", base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise ValidationError(f"unknown config fields: {sorted(unknown)}")
    try:
        tol = Tolerances(**doc.get("tolerances", {}))
    except TypeError as exc:
        raise ValidationError(f"tolerances: {exc}") from None
    if "network" not in doc or not isinstance(doc["network"], str):
        raise ValidationError("missing field 'network' (builder name or file:path)")
    network = build_network(doc["network"], base_dir, tol.unitarity_tol)
    M = network.M
    inputs = _ports(doc, "input_ports", M)
    outputs = _ports(doc, "output_ports", M, required=False)
    photons_doc = doc.get("photons")
    if not isinstance(photons_doc, list):
        raise ValidationError("missing field 'photons' (list)")
    if len(photons_doc) != len(inputs):
        raise ValidationError(f"{len(photons_doc)} photons for {len(inputs)} input ports")
    if outputs is not None and len(outputs) != len(inputs):
        raise ValidationError("output_ports must have one port per photon")
    photons = tuple(_photon(p, i, tol) for i, p in enumerate(photons_doc))
    try:
        delta_t = float(doc.get("delta_t_rel", 0.0))
    except (TypeError, ValueError):
        raise ValidationError("delta_t_rel must be a number") from None
    basis = None
    if "basis" in doc:
        b = doc["basis"]
        if not isinstance(b, list) or len(b) != 2:
            raise ValidationError("basis must list two polarizations")
        basis = (parse_polarization(b[0], "basis[0]"), parse_polarization(b[1], "basis[1]"))
    return ExperimentConfig(network, doc["network"], inputs, outputs, photons, delta_t, tol, basis,
                            config_hash(doc), source, doc)


def parse_config(path) -> ExperimentConfig:
    """Read and validate an experiment config (bundled names such as ``fig2b.json`` resolve too)."""
    p = resolve_config_path(path)
    text = p.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{p}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return load_config_document(doc, str(p), p.parent)
