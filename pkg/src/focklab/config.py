"""Sweep configuration files: an INI dialect with dotted section names.

A configuration has one ``[sweep]`` section and, per instance ``ID``, the
sections ``[instance.ID]``, ``[instance.ID.measure]``,
``[instance.ID.weight]``, ``[instance.ID.params]``, ``[instance.ID.grid]``
and ``[instance.ID.families]``.  Lists are comma separated and point lists
separate points with ``;``.  Floats are written in shortest round-trip form,
so ``parse_config(emit_config(c)) == c`` and emission is canonical.

>>> cfg = parse_config(MINIMAL_EXAMPLE)
>>> cfg.instances[0].measure
{'kind': 'dirac', 'location': [0.0, 0.0], 'mass': 1.0}
>>> emit_config(parse_config(emit_config(cfg))) == emit_config(cfg)
True
"""

import configparser
from dataclasses import fields
import math

from focklab.errors import ConfigError
from focklab.harness import THEOREMS, DEFAULT_BAND, DEFAULT_C_SUFF, Families, GridPolicy, Instance, SweepConfig

__all__ = ["MINIMAL_EXAMPLE", "emit_config", "load_config", "parse_config"]

_REQ = object()

MEASURE_SCHEMA = {
    "zero": {},
    "dirac": {"location": ("floats", _REQ), "mass": ("float", None)},
    "atoms": {"atoms": ("points", _REQ), "masses": ("floats", _REQ)},
    "cloud": {"count": ("int", _REQ), "radius": ("float", _REQ), "seed": ("int", None), "mass_range": ("floats", None)},
    "lattice": {"profile": ("str", _REQ), "rate": ("float", _REQ), "radius": ("float", None),
                "spacing": ("float", None), "scale": ("float", None)},
    "lebesgue": {"c": ("float", None)},
    "gauss-density": {"sigma": ("float", _REQ), "c": ("float", None)},
    "disk-density": {"radius": ("float", _REQ), "c": ("float", None)},
}
WEIGHT_SCHEMA = {
    "constant": {"c": ("float", None)},
    "exp-linear": {"a": ("floats", _REQ)},
    "radial-power-gauss": {"s": ("float", _REQ), "eps": ("float", None)},
}
INSTANCE_KEYS = {"kind": ("str", _REQ), "n": ("int", None), "seed": ("int", None)}
PARAM_KEYS = {k: ("float", _REQ) for k in ("p", "q", "t", "alpha", "beta")}
SWEEP_KEYS = {"seed": ("int", None), "theorem": ("str", None), "band_low": ("float", None),
              "band_high": ("float", None)}
SUBSECTIONS = ("measure", "weight", "params", "grid", "families")

MINIMAL_EXAMPLE = """\
[sweep]
seed = 0

[instance.delta]
kind = G

[instance.delta.measure]
kind = dirac
location = 0, 0
mass = 1

[instance.delta.weight]
kind = constant
c = 1

[instance.delta.params]
p = 1
q = 1
t = 1
alpha = 1
beta = 1
"""


def _fmt_float(x):
    return repr(float(x))


def _fmt(kind, v):
    if kind == "float":
        return _fmt_float(v)
    if kind == "int":
        return str(int(v))
    if kind == "floats":
        return ", ".join(_fmt_float(x) for x in v)
    if kind == "points":
        return "; ".join(" ".join(_fmt_float(x) for x in pt) for pt in v)
    return str(v)


def _parse(kind, text):
    text = text.strip()
    if kind == "float":
        return float(text)
    if kind == "int":
        v = float(text)
        if v != int(v):
            raise ValueError("not an integer")
        return int(v)
    if kind == "floats":
        return [float(x) for x in text.replace(",", " ").split()]
    if kind == "points":
        return [[float(x) for x in pt.replace(",", " ").split()] for pt in text.split(";") if pt.strip()]
    if not text:
        raise ValueError("empty value")
    return text


def _read_section(cp, section, schema, errors, label=None):
    """Typed values of ``section`` according to ``schema``; problems go to ``errors``."""
    label = label or section
    out = {}
    if not cp.has_section(section):
        return out
    items = dict(cp.items(section))
    for key, raw in items.items():
        if key not in schema:
            errors.append(f"[{section}] unknown key '{key}'")
            continue
        kind, _ = schema[key]
        try:
            out[key] = _parse(kind, raw)
        except ValueError:
            errors.append(f"[{section}] key '{key}' expects {kind}, got {raw!r}")
    for key, (_, default) in schema.items():
        if default is _REQ and key not in items:
            errors.append(f"[{section}] missing required key '{key}' ({label})")
    return out


def _dataclass_schema(cls):
    return {f.name: ("int" if f.type in (int, "int") else "float", None) for f in fields(cls)}


def _kind_section(cp, section, schemas, errors, what):
    if not cp.has_section(section):
        errors.append(f"missing section [{section}]")
        return None
    kind = cp.get(section, "kind", fallback=None)
    if kind is None:
        errors.append(f"[{section}] missing required key 'kind'")
        return None
    if kind not in schemas:
        errors.append(f"[{section}] unknown {what} kind '{kind}' (expected one of {sorted(schemas)})")
        return None
    schema = dict(schemas[kind])
    schema["kind"] = ("str", _REQ)
    return _read_section(cp, section, schema, errors)


def parse_config(text):
    """Parse and validate a sweep configuration.

    Every problem found is collected; a :class:`ConfigError` lists them all.
    """
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=None, empty_lines_in_values=False)
    cp.optionxform = str
    errors = []
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax error: {exc}"]) from None

    ids = []
    for sec in cp.sections():
        if sec == "sweep":
            continue
        parts = sec.split(".")
        if parts[0] != "instance" or len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] not in SUBSECTIONS):
            errors.append(f"unknown section [{sec}]")
            continue
        if len(parts) == 2:
            ids.append(parts[1])
        elif f"instance.{parts[1]}" not in cp.sections():
            errors.append(f"section [{sec}] has no parent [instance.{parts[1]}]")

    sweep = _read_section(cp, "sweep", dict(SWEEP_KEYS, **{f"c_suff_n{k}": ("float", None) for k in (1, 2)}),
                          errors)
    theorem = sweep.get("theorem", "all")
    if theorem not in THEOREMS + ("all",):
        errors.append(f"[sweep] theorem '{theorem}' is not one of {THEOREMS + ('all',)}")
    c_suff = dict(DEFAULT_C_SUFF)
    for k in (1, 2):
        if f"c_suff_n{k}" in sweep:
            c_suff[k] = sweep[f"c_suff_n{k}"]
    band = (sweep.get("band_low", DEFAULT_BAND[0]), sweep.get("band_high", DEFAULT_BAND[1]))
    if not 0 <= band[0] <= band[1]:
        errors.append(f"[sweep] band must satisfy 0 <= band_low <= band_high, got {band}")

    instances = []
    for iid in ids:
        base = f"instance.{iid}"
        head = _read_section(cp, base, INSTANCE_KEYS, errors)
        measure = _kind_section(cp, base + ".measure", MEASURE_SCHEMA, errors, "measure")
        weight = _kind_section(cp, base + ".weight", WEIGHT_SCHEMA, errors, "weight")
        if not cp.has_section(base + ".params"):
            errors.append(f"missing section [{base}.params]")
        params = _read_section(cp, base + ".params", PARAM_KEYS, errors)
        grid = _read_section(cp, base + ".grid", _dataclass_schema(GridPolicy), errors)
        fam = _read_section(cp, base + ".families", _dataclass_schema(Families), errors)
        kind = head.get("kind")
        if kind is not None and kind not in ("G", "H", "CM"):
            errors.append(f"[{base}] kind must be G, H or CM, got '{kind}'")
        for name in ("t", "alpha", "beta"):
            v = params.get(name)
            if v is not None and not (v > 0 and math.isfinite(v)):
                errors.append(f"[{base}.params] BerezinParams.{name} must be a positive real, got {_fmt_float(v)}")
        for name in ("p", "q"):
            v = params.get(name)
            if v is not None and not (v > 0 and math.isfinite(v)):
                errors.append(f"[{base}.params] {name} must be a positive real, got {_fmt_float(v)}")
        for name, v in list(grid.items()) + list(fam.items()):
            if name == "draws" and v >= 0 or name != "draws" and v > 0:
                continue
            errors.append(f"[{base}] grid/families value '{name}' must be positive, got {v}")
        n = head.get("n", 1)
        if n not in (1, 2):
            errors.append(f"[{base}] n must be 1 or 2, got {n}")
        if weight is not None and weight.get("kind") == "exp-linear" and len(weight.get("a", [])) != 2 * n:
            errors.append(f"[{base}.weight] exp-linear 'a' needs {2 * n} entries")
        if None in (measure, weight, kind) or len(params) < len(PARAM_KEYS):
            continue
        inst = Instance(iid, kind, measure, weight, params["p"], params["q"], params["t"], params["alpha"],
                        params["beta"], n, GridPolicy(**grid), Families(**fam), head.get("seed", 0))
        if theorem != "all" and inst.theorem != theorem and not any(e.startswith(f"[{base}") for e in errors):
            errors.append(f"[{base}] regime mismatch: p={_fmt_float(inst.p)}, q={_fmt_float(inst.q)}, "
                          f"kind {kind} belongs to {inst.theorem}, not theorem={theorem}")
        instances.append(inst)
    if errors:
        raise ConfigError(errors)
    return SweepConfig(instances, sweep.get("seed", 0), c_suff, band, theorem)


def _emit_spec(lines, spec, schemas):
    schema = schemas[spec["kind"]]
    lines.append(f"kind = {spec['kind']}")
    for key, (kind, _) in schema.items():
        if key in spec:
            lines.append(f"{key} = {_fmt(kind, spec[key])}")


def emit_config(cfg):
    """Canonical text of a :class:`SweepConfig`."""
    lines = ["[sweep]", f"seed = {int(cfg.seed)}", f"theorem = {cfg.theorem}",
             f"band_low = {_fmt_float(cfg.band[0])}", f"band_high = {_fmt_float(cfg.band[1])}"]
    for k in sorted(cfg.c_suff):
        lines.append(f"c_suff_n{k} = {_fmt_float(cfg.c_suff[k])}")
    for inst in cfg.instances:
        base = f"instance.{inst.instance_id}"
        lines += ["", f"[{base}]", f"kind = {inst.kind}", f"n = {inst.n}", f"seed = {inst.seed}"]
        lines += ["", f"[{base}.measure]"]
        _emit_spec(lines, inst.measure, MEASURE_SCHEMA)
        lines += ["", f"[{base}.weight]"]
        _emit_spec(lines, inst.weight, WEIGHT_SCHEMA)
        lines += ["", f"[{base}.params]"] + [f"{k} = {_fmt_float(getattr(inst, k))}" for k in PARAM_KEYS]
        lines += ["", f"[{base}.grid]"]
        for f in fields(GridPolicy):
            lines.append(f"{f.name} = {_fmt_float(getattr(inst.grid, f.name))}")
        lines += ["", f"[{base}.families]"]
        for f in fields(Families):
            v = getattr(inst.families, f.name)
            lines.append(f"{f.name} = {int(v) if isinstance(v, int) else _fmt_float(v)}")
    return "\n".join(lines) + "\n"


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
