"""Plain-text model configuration: key = value sections for the parameters
and the two potentials.  The same text appears as the commented header of
corpus fixture files, so one parser serves both."""

import configparser
import io

import numpy as np

from .model import ModelParams, widom_rowlinson_preset
from .potentials import PairPotential

PRESETS = {"wr": widom_rowlinson_preset}


def _floats(text):
    text = text.strip()
    if not text:
        return []
    return [float(t) for t in text.replace(",", " ").split()]


def _fmt(values):
    return ", ".join(repr(float(v)) for v in values)


def potential_to_section(p):
    return {
        "kind": p.kind,
        "breaks": _fmt(p.breaks),
        "values": _fmt(p.values),
        "superstable": str(bool(p.superstable)).lower(),
    }


def potential_from_section(sec):
    kind = sec.get("kind", "zero")
    breaks = _floats(sec.get("breaks", ""))
    values = _floats(sec.get("values", ""))
    superstable = sec.get("superstable", "false").strip().lower() in ("1", "true", "yes")
    return PairPotential(kind, breaks, values, superstable)


def params_to_ini(params):
    cp = configparser.ConfigParser()
    cp["model"] = {
        "dimension": str(params.dimension),
        "activity": repr(float(params.activity)),
        "colors": str(params.q),
        "alpha": _fmt(params.alpha),
        "u": repr(float(params.u)),
        "r1": repr(float(params.r1)),
        "r2": repr(float(params.r2)),
        "r3": repr(float(params.r3)),
        "r4": repr(float(params.r4)),
        "pstar": repr(float(params.pstar)),
        "nstar": str(params.nstar),
    }
    cp["phi"] = potential_to_section(params.phi)
    cp["psi"] = potential_to_section(params.psi)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def params_from_ini(text):
    """Build ModelParams from INI text; nstar = auto derives the cell
    threshold from the decoupled edge probability."""
    cp = configparser.ConfigParser()
    cp.read_string(text)
    m = cp["model"]
    phi = potential_from_section(cp["phi"]) if cp.has_section("phi") else PairPotential.zero()
    psi = potential_from_section(cp["psi"]) if cp.has_section("psi") else PairPotential.zero()
    nstar_raw = m.get("nstar", "auto").strip().lower()
    params = ModelParams(
        dimension=int(m["dimension"]),
        activity=float(m.get("activity", "1.0")),
        q=int(m["colors"]),
        alpha=np.array(_floats(m["alpha"])),
        u=float(m["u"]),
        r1=float(m.get("r1", "0.0")),
        r2=float(m.get("r2", "0.0")),
        r3=float(m["r3"]),
        r4=float(m["r4"]),
        phi=phi,
        psi=psi,
        pstar=float(m.get("pstar", "0.9")),
        nstar=1 if nstar_raw == "auto" else int(nstar_raw),
    )
    if nstar_raw == "auto":
        from .lattice import compute_nstar
        params = params.replace(nstar=compute_nstar(params))
    return params


def load_params(path):
    with open(path) as fh:
        return params_from_ini(fh.read())


def save_params(path, params):
    with open(path, "w") as fh:
        fh.write(params_to_ini(params))


def resolve_params(preset=None, config_path=None, **overrides):
    """Preset name or config file, with keyword overrides applied on top."""
    if preset is not None and config_path is not None:
        raise ValueError("give either a preset or a config file, not both")
    if preset is not None:
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
        params = PRESETS[preset]()
    elif config_path is not None:
        params = load_params(config_path)
    else:
        raise ValueError("a preset or a config file is required")
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        params = params.replace(**overrides)
    return params
