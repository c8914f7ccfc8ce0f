"""File formats: images, photon counts, kernels and experiment configs.

Latent images are read from 8/16-bit grayscale PNG or ASCII PGM and scaled to
[0, 1] by the container maximum. Photon counts are stored unscaled as 16-bit
PNG or PGM; counts above 65535 are rejected there and need the plain-text
matrix format (``.txt``), which holds any nonnegative value. Kernels are text:
the side ``M`` on the first line, then ``M`` rows of ``M`` numbers.
"""

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .blind import BlindConfig
from .denoise import DenoiseConfig
from .fields import as_field, check_kernel
from .solver import SolverConfig

MAX_COUNT = 65535
_FLOAT_FMT = ".17g"


class FormatError(ValueError):
    """Malformed or unsupported file content."""


def _suffix(path):
    return Path(path).suffix.lower()


# --- PGM (ASCII, P2) ---------------------------------------------------------

def _read_pgm(path):
    tokens = []
    for line in Path(path).read_text(encoding="ascii").splitlines():
        tokens.extend(line.split("#", 1)[0].split())
    if not tokens or tokens[0] != "P2":
        raise FormatError(f"{path}: only ASCII PGM (P2) is supported")
    try:
        w, h, maxval = (int(t) for t in tokens[1:4])
        data = np.array([int(t) for t in tokens[4:]], dtype=np.int64)
    except ValueError as exc:
        raise FormatError(f"{path}: bad PGM token ({exc})") from None
    if data.size != w * h or not 0 < maxval <= MAX_COUNT:
        raise FormatError(f"{path}: PGM header does not match its data")
    return data.reshape(h, w).astype(np.float64), maxval


def _write_pgm(path, arr, maxval):
    h, w = arr.shape
    rows = "\n".join(" ".join(str(int(v)) for v in row) for row in arr)
    Path(path).write_text(f"P2\n{w} {h}\n{maxval}\n{rows}\n", encoding="ascii")


# --- PNG -----------------------------------------------------------------------

def _read_png(path):
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I;16L", "I"):
            arr, maxval = np.asarray(im, dtype=np.float64), MAX_COUNT
        else:
            arr, maxval = np.asarray(im.convert("L"), dtype=np.float64), 255
    if arr.ndim != 2:
        raise FormatError(f"{path}: expected a single-channel image")
    return arr, maxval


def _write_png16(path, arr):
    Image.fromarray(arr.astype(np.uint16)).save(path, format="PNG")


# --- text matrix ---------------------------------------------------------------

def read_matrix(path):
    """Whitespace-separated numbers, one row per line."""
    try:
        arr = np.loadtxt(path, dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return arr


def write_matrix(path, arr):
    lines = [" ".join(format(float(v), _FLOAT_FMT) for v in row) for row in np.atleast_2d(arr)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


# --- public image API ------------------------------------------------------------

def _read_raw(path):
    ext = _suffix(path)
    if ext == ".png":
        return _read_png(path)
    if ext in (".pgm", ".pnm"):
        return _read_pgm(path)
    if ext == ".txt":
        return read_matrix(path), None
    raise FormatError(f"{path}: unsupported image type {ext!r} (use .png, .pgm or .txt)")


def read_image(path):
    """Latent image scaled to [0, 1] by its container maximum.

    Text matrices are taken as already scaled and must lie in [0, 1].
    """
    arr, maxval = _read_raw(path)
    if maxval is not None:
        return arr / maxval
    if arr.min() < 0 or arr.max() > 1:
        raise FormatError(f"{path}: text image values must lie in [0, 1]")
    return arr


def write_image(path, x):
    """Write a [0, 1] image; PNG and PGM are quantized to 16 bits."""
    x = np.clip(as_field(x, "image"), 0.0, 1.0)
    ext = _suffix(path)
    if ext == ".txt":
        write_matrix(path, x)
        return
    q = np.rint(x * MAX_COUNT)
    if ext == ".png":
        _write_png16(path, q)
    elif ext in (".pgm", ".pnm"):
        _write_pgm(path, q, MAX_COUNT)
    else:
        raise FormatError(f"{path}: unsupported image type {ext!r}")


def read_counts(path):
    """Photon counts as floats, without scaling."""
    arr, _ = _read_raw(path)
    if arr.min() < 0:
        raise FormatError(f"{path}: counts must be nonnegative")
    return arr


def write_counts(path, y):
    """Write integer counts losslessly.

    Raises
    ------
    FormatError
        For non-integer counts, or counts above 65535 in PNG/PGM.
    """
    y = as_field(y, "counts")
    if y.min() < 0 or np.any(y != np.rint(y)):
        raise FormatError("counts must be nonnegative integers")
    ext = _suffix(path)
    if ext == ".txt":
        write_matrix(path, y)
        return
    if y.max() > MAX_COUNT:
        raise FormatError(f"count {int(y.max())} exceeds {MAX_COUNT}; "
                          "a 16-bit container cannot hold it, write a .txt matrix instead")
    if ext == ".png":
        _write_png16(path, y)
    elif ext in (".pgm", ".pnm"):
        _write_pgm(path, y, MAX_COUNT)
    else:
        raise FormatError(f"{path}: unsupported image type {ext!r}")


# --- kernels ---------------------------------------------------------------------

def write_kernel(path, h):
    h = check_kernel(h)
    rows = [" ".join(format(float(v), _FLOAT_FMT) for v in row) for row in h]
    Path(path).write_text(f"{h.shape[0]}\n" + "\n".join(rows) + "\n", encoding="ascii")


def read_kernel(path):
    lines = [ln for ln in Path(path).read_text(encoding="ascii").splitlines() if ln.strip()]
    try:
        m = int(lines[0])
        rows = [[float(v) for v in ln.split()] for ln in lines[1:]]
    except (IndexError, ValueError) as exc:
        raise FormatError(f"{path}: bad kernel file ({exc})") from None
    if len(rows) != m or any(len(r) != m for r in rows):
        raise FormatError(f"{path}: header says {m}x{m} but the body differs")
    return check_kernel(np.array(rows, dtype=np.float64))


# --- experiment config -----------------------------------------------------------

_SECTIONS = {"solver": SolverConfig, "denoise": DenoiseConfig}


def blind_config_keys():
    """Flat keys of every :class:`BlindConfig` setting, with their types.

    Nested settings appear as ``solver.<name>`` and ``denoise.<name>``.
    """
    keys = {}
    for f in dataclasses.fields(BlindConfig):
        if f.name in _SECTIONS:
            for sub in dataclasses.fields(_SECTIONS[f.name]):
                keys[f"{f.name}.{sub.name}"] = type(getattr(_SECTIONS[f.name](), sub.name))
        else:
            keys[f.name] = type(getattr(BlindConfig(), f.name))
    return keys


def parse_value(text, kind):
    text = text.strip()
    if kind is bool:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    return kind(text)


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def flatten_blind(cfg):
    out = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if f.name in _SECTIONS:
            for sub in dataclasses.fields(v):
                out[f"{f.name}.{sub.name}"] = getattr(v, sub.name)
        else:
            out[f.name] = v
    return out


def blind_from_flat(values, base=None):
    """Apply flat ``key -> value`` settings on top of ``base``."""
    base = base or BlindConfig()
    known = blind_config_keys()
    top, nested = {}, {name: {} for name in _SECTIONS}
    for key, v in values.items():
        if key not in known:
            raise KeyError(f"unknown setting {key!r}")
        if "." in key:
            sec, name = key.split(".", 1)
            nested[sec][name] = v
        else:
            top[key] = v
    for sec, kw in nested.items():
        if kw:
            top[sec] = dataclasses.replace(getattr(base, sec), **kw)
    return dataclasses.replace(base, **top)


@dataclass
class ExperimentConfig:
    """Everything needed to rerun a simulation, deblur or benchmark sweep.

    Lists are stored comma-separated, so paths must not contain commas.
    Kernel specs carry their own commas, which are written as ``;`` on disk.
    """

    inputs: list = field(default_factory=list)
    alphas: list = field(default_factory=lambda: [10.0, 20.0, 40.0])
    kernels: list = field(default_factory=lambda: ["gauss:3,1,30"])
    variants: list = field(default_factory=lambda: ["full"])
    seed: int = 0
    out_dir: str = "out"
    emit_images: bool = True
    emit_kernels: bool = True
    emit_csv: bool = True
    emit_curves: bool = True
    blind: BlindConfig = field(default_factory=BlindConfig)

    _LISTS = {"inputs": str, "alphas": float, "kernels": str, "variants": str}
    _SCALARS = {"seed": int, "out_dir": str, "emit_images": bool, "emit_kernels": bool,
                "emit_csv": bool, "emit_curves": bool}

    def to_text(self):
        lines = []
        for key, kind in self._LISTS.items():
            vals = getattr(self, key)
            if key == "kernels":
                vals = [v.replace(",", ";") for v in vals]
            lines.append(f"{key}=" + ",".join(_format_value(kind(v)) for v in vals))
        for key in self._SCALARS:
            lines.append(f"{key}={_format_value(getattr(self, key))}")
        for key, v in flatten_blind(self.blind).items():
            lines.append(f"{key}={_format_value(v)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        pairs = parse_key_values(text)
        kw, blind = {}, {}
        known = blind_config_keys()
        for key, raw in pairs.items():
            if key in cls._LISTS:
                kind = cls._LISTS[key]
                items = [s.strip() for s in raw.split(",") if s.strip()]
                if key == "kernels":
                    items = [s.replace(";", ",") for s in items]
                kw[key] = [kind(s) for s in items]
            elif key in cls._SCALARS:
                kw[key] = parse_value(raw, cls._SCALARS[key])
            elif key in known:
                blind[key] = parse_value(raw, known[key])
            else:
                raise KeyError(f"unknown config key {key!r}")
        return cls(blind=blind_from_flat(blind), **kw)

    def save(self, path):
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def parse_key_values(text):
    """``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"line {n}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
