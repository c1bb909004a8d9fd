"""Chain description files (schema ``opgauge/1``).

A chain file is a JSON document::

    {
      "schema": "opgauge/1",
      "label": "blur then sample",
      "grid": {"dims": [256], "spacing": [1.0], "periodic": true},
      "thresholds": {
        "epsilon": 0.03,                      # or {"kappa": 3, "sigma_n": 0.01, "amplitude": 1}
        "delta": {"policy": "relative", "value": 2.220446049250313e-16},
        "paper_capacity": false
      },
      "stages": [
        {"kind": "gaussian_blur", "label": "optics", "width": 1.5},
        {"kind": "sampling", "label": "detector", "mask": {"uniform": 64}}
      ]
    }

Stage kinds and their fields:

``attenuation``         ``mu`` (number or per-sample list), ``d``
``gaussian_blur``       ``width``
``kernel_convolution``  ``kernel`` (per-sample list, index 0 at the origin)
``sampling``            ``mask``: list of 0/1, or ``{"uniform": M}``
``matrix``              ``data`` (list of rows) or ``path`` to the "N M" text format
``mtf``                 ``curve`` (list of [frequency, magnitude]) or ``path`` to a
                        ``frequency,magnitude`` CSV; optional ``extrapolation``
                        (``"hold"`` or ``"zero"``)
``nonlinear``           ``map`` (registered name), ``params``, ``operating_point``,
                        optional ``fd_step``

Every stage also takes an optional ``label``. Relative paths are resolved
against the chain file's directory. Unknown keys are rejected.
"""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError, OpgaugeError
from .grid import GridSpec
from .measures import DerivedEpsilon, ThresholdPolicy
from .operators import compose, load_matrix_text, load_mtf_csv, realize
from .spectral import NumericalTolerance
from .stages import (
    Attenuation,
    GaussianBlur,
    KernelConvolution,
    MatrixStage,
    MTFStage,
    NonlinearStage,
    Sampling,
    uniform_mask,
)

SCHEMA = "opgauge/1"


@dataclass(eq=False)
class ChainSpec:
    """Ordered stages (source first) on a grid, with a threshold policy."""

    grid: GridSpec
    stages: tuple
    thresholds: ThresholdPolicy
    label: str = "chain"

    def __post_init__(self):
        self.stages = tuple(self.stages)
        if not self.stages:
            raise InputError("a chain needs at least one stage", "stages")
        for i, st in enumerate(self.stages):
            try:
                st.check_grid(self.grid)
            except InputError as exc:
                raise exc.nested(f"stages[{i}]") from None

    def __eq__(self, other):
        if not isinstance(other, ChainSpec):
            return NotImplemented
        return (
            self.grid == other.grid
            and self.stages == other.stages
            and self.thresholds == other.thresholds
            and self.label == other.label
        )

    __hash__ = None

    def realize_stages(self):
        return [realize(st, self.grid) for st in self.stages]

    def operator(self):
        return compose(self.realize_stages())

    def spectrum(self):
        """Spectrum of the composed chain: closed form for one stage, dense otherwise."""
        return self.operator().spectrum("auto")

    def validate(self):
        """Realize every stage and check that epsilon >= delta for this chain.

        The exact spectrum is only computed when a cheap upper bound on the
        chain norm cannot settle the threshold check.
        """
        ops = []
        for i, st in enumerate(self.stages):
            try:
                ops.append(realize(st, self.grid))
            except InputError as exc:
                raise exc.nested(f"stages[{i}]") from None
            except OpgaugeError as exc:
                raise type(exc)(f"stages[{i}]: {exc}") from None
        op = compose(ops)
        tol, eps = self.thresholds.delta, self.thresholds.epsilon_value
        if tol.policy == "absolute":
            delta_hi = tol.value
        else:
            delta_hi = tol.value * op.n_object * float(np.prod([o.norm() for o in ops]))
        if eps < delta_hi:
            self.thresholds.resolve(op.spectrum("auto"))
        return op


def digest(text):
    return "sha256:" + hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------- parsing


def _take(obj, path, required, optional=()):
    if not isinstance(obj, dict):
        raise InputError(f"expected an object, got {type(obj).__name__}", path)
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise InputError(f"unknown field(s) {', '.join(unknown)}", path)
    for key in required:
        if key not in obj:
            raise InputError(f"missing field '{key}'", path)
    return obj


def _number(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InputError(f"expected a number, got {v!r}", path)
    return float(v)


def _numbers(v, path):
    if isinstance(v, list):
        for i, x in enumerate(v):
            if isinstance(x, list):
                _numbers(x, f"{path}[{i}]")
            else:
                _number(x, f"{path}[{i}]")
        return np.array(v, dtype=float)
    return _number(v, path)


def _parse_grid(obj):
    _take(obj, "grid", ["dims"], ["spacing", "periodic"])
    dims = obj["dims"]
    if isinstance(dims, int):
        dims = [dims]
    if not isinstance(dims, list) or not all(isinstance(d, int) and not isinstance(d, bool) for d in dims):
        raise InputError("dims must be a list of integers", "grid.dims")
    spacing = obj.get("spacing")
    if spacing is not None:
        spacing = [_number(h, f"grid.spacing[{i}]") for i, h in enumerate(np.atleast_1d(spacing).tolist())]
    periodic = obj.get("periodic", True)
    if not isinstance(periodic, bool):
        raise InputError("periodic must be true or false", "grid.periodic")
    return GridSpec(tuple(dims), None if spacing is None else tuple(spacing), periodic)


def _parse_thresholds(obj):
    _take(obj, "thresholds", ["epsilon"], ["delta", "paper_capacity"])
    eps = obj["epsilon"]
    if isinstance(eps, dict):
        _take(eps, "thresholds.epsilon", ["kappa", "sigma_n"], ["amplitude"])
        try:
            eps = DerivedEpsilon(
                _number(eps["kappa"], "thresholds.epsilon.kappa"),
                _number(eps["sigma_n"], "thresholds.epsilon.sigma_n"),
                _number(eps.get("amplitude", 1.0), "thresholds.epsilon.amplitude"),
            )
        except InputError as exc:
            if exc.path and exc.path.startswith("thresholds"):
                raise
            raise exc.nested("thresholds") from None
    else:
        eps = _number(eps, "thresholds.epsilon")
    delta = NumericalTolerance()
    if "delta" in obj:
        d = obj["delta"]
        if isinstance(d, dict):
            _take(d, "thresholds.delta", ["value"], ["policy"])
            delta = NumericalTolerance(_number(d["value"], "thresholds.delta.value"), d.get("policy", "absolute"))
        else:
            delta = NumericalTolerance.absolute(_number(d, "thresholds.delta"))
    paper = obj.get("paper_capacity", False)
    if not isinstance(paper, bool):
        raise InputError("paper_capacity must be true or false", "thresholds.paper_capacity")
    try:
        return ThresholdPolicy(eps, delta, paper)
    except InputError as exc:
        raise exc.nested("thresholds") from None


def _resolve_path(p, base_dir, path):
    if not isinstance(p, str):
        raise InputError("path must be a string", path)
    full = Path(p) if base_dir is None else Path(base_dir) / p
    if not full.is_file():
        raise InputError(f"file not found: {full}", path)
    return full


def _parse_stage(obj, n, base_dir, path):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InputError("stage needs a 'kind'", path)
    kind = obj["kind"]
    common = ["kind"]
    opt = ["label"]
    extra = {"label": obj["label"]} if "label" in obj else {}
    if "label" in obj and not isinstance(obj["label"], str):
        raise InputError("label must be a string", f"{path}.label")

    if kind == "attenuation":
        _take(obj, path, common + ["mu"], opt + ["d"])
        return Attenuation(_numbers(obj["mu"], f"{path}.mu"), _number(obj.get("d", 1.0), f"{path}.d"), **extra)
    if kind == "gaussian_blur":
        _take(obj, path, common + ["width"], opt)
        return GaussianBlur(_number(obj["width"], f"{path}.width"), **extra)
    if kind == "kernel_convolution":
        _take(obj, path, common + ["kernel"], opt)
        return KernelConvolution(_numbers(obj["kernel"], f"{path}.kernel"), **extra)
    if kind == "sampling":
        _take(obj, path, common + ["mask"], opt)
        mask = obj["mask"]
        if isinstance(mask, dict):
            _take(mask, f"{path}.mask", ["uniform"])
            m = mask["uniform"]
            if not isinstance(m, int) or isinstance(m, bool):
                raise InputError("uniform sample count must be an integer", f"{path}.mask.uniform")
            mask = uniform_mask(n, m)
        elif isinstance(mask, list) and all(v in (0, 1) and not isinstance(v, float) for v in mask):
            mask = np.array(mask, dtype=bool)
        else:
            raise InputError("mask must be a list of 0/1 or {\"uniform\": M}", f"{path}.mask")
        return Sampling(mask, **extra)
    if kind == "matrix":
        _take(obj, path, common, opt + ["data", "path"])
        if ("data" in obj) == ("path" in obj):
            raise InputError("matrix stage needs exactly one of 'data' or 'path'", path)
        if "path" in obj:
            full = _resolve_path(obj["path"], base_dir, f"{path}.path")
            return MatrixStage(load_matrix_text(full), path=obj["path"], **extra)
        return MatrixStage(_numbers(obj["data"], f"{path}.data"), **extra)
    if kind == "mtf":
        _take(obj, path, common, opt + ["curve", "path", "extrapolation"])
        if ("curve" in obj) == ("path" in obj):
            raise InputError("mtf stage needs exactly one of 'curve' or 'path'", path)
        rule = obj.get("extrapolation")
        if "path" in obj:
            full = _resolve_path(obj["path"], base_dir, f"{path}.path")
            return MTFStage(load_mtf_csv(full), extrapolation=rule, path=obj["path"], **extra)
        return MTFStage(_numbers(obj["curve"], f"{path}.curve"), extrapolation=rule, **extra)
    if kind == "nonlinear":
        _take(obj, path, common + ["map", "operating_point"], opt + ["params", "fd_step"])
        params = obj.get("params", {})
        if not isinstance(params, dict):
            raise InputError("params must be an object", f"{path}.params")
        fd = obj.get("fd_step")
        return NonlinearStage(
            obj["map"],
            _numbers(obj["operating_point"], f"{path}.operating_point"),
            None if fd is None else _number(fd, f"{path}.fd_step"),
            {k: _number(v, f"{path}.params.{k}") for k, v in params.items()},
            **extra,
        )
    raise InputError(f"unknown stage kind {kind!r}", f"{path}.kind")


def chain_from_dict(doc, base_dir=None, validate=True):
    _take(doc, "<root>", ["schema", "grid", "stages", "thresholds"], ["label"])
    if doc["schema"] != SCHEMA:
        raise InputError(f"unsupported schema {doc['schema']!r}, expected {SCHEMA!r}", "schema")
    grid = _parse_grid(doc["grid"])
    stages_doc = doc["stages"]
    if not isinstance(stages_doc, list) or not stages_doc:
        raise InputError("stages must be a non-empty list", "stages")
    stages = []
    for i, s in enumerate(stages_doc):
        path = f"stages[{i}]"
        try:
            stages.append(_parse_stage(s, grid.n, base_dir, path))
        except InputError as exc:
            if exc.path and exc.path.startswith(path):
                raise
            raise exc.nested(path) from None
    label = doc.get("label", "chain")
    if not isinstance(label, str):
        raise InputError("label must be a string", "label")
    spec = ChainSpec(grid, stages, _parse_thresholds(doc["thresholds"]), label)
    if validate:
        spec.validate()
    return spec


def parse_chain_file(text, base_dir=None, validate=True):
    """Parse and validate a chain document.

    Raises :class:`InputError` (or a subclass) whose message starts with the
    offending field path, e.g. ``stages[1].mask: ...``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}", "<json>") from None
    return chain_from_dict(doc, base_dir, validate)


def load_chain(path, validate=True):
    path = Path(path)
    return parse_chain_file(path.read_text(), path.parent, validate)


# ---------------------------------------------------------- serialisation


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def stage_to_dict(stage):
    d = {"kind": stage.kind, "label": stage.label}
    if isinstance(stage, Attenuation):
        d.update(mu=_plain(stage.mu), d=stage.d)
    elif isinstance(stage, GaussianBlur):
        d.update(width=stage.width)
    elif isinstance(stage, KernelConvolution):
        d.update(kernel=stage.kernel.tolist())
    elif isinstance(stage, Sampling):
        n, m = stage.mask.size, stage.keep
        if np.array_equal(stage.mask, uniform_mask(n, m)):
            d.update(mask={"uniform": m})
        else:
            d.update(mask=stage.mask.astype(int).tolist())
    elif isinstance(stage, MatrixStage):
        if stage.path is not None:
            d.update(path=stage.path)
        else:
            d.update(data=stage.matrix.tolist())
    elif isinstance(stage, MTFStage):
        if stage.path is not None:
            d.update(path=stage.path)
        else:
            d.update(curve=stage.curve.tolist())
        if stage.extrapolation is not None:
            d.update(extrapolation=stage.extrapolation)
    elif isinstance(stage, NonlinearStage):
        if not isinstance(stage.map, str):
            raise InputError("only registered nonlinear maps can be serialised", "map")
        d.update(map=stage.map, params=dict(stage.params), operating_point=_plain(stage.operating_point))
        if stage.fd_step is not None:
            d.update(fd_step=stage.fd_step)
    return d


def thresholds_to_dict(policy):
    eps = policy.epsilon
    if isinstance(eps, DerivedEpsilon):
        eps = {"kappa": eps.kappa, "sigma_n": eps.sigma_n, "amplitude": eps.amplitude}
    return {
        "epsilon": eps,
        "delta": {"policy": policy.delta.policy, "value": policy.delta.value},
        "paper_capacity": policy.paper_capacity,
    }


def chain_to_dict(spec):
    return {
        "schema": SCHEMA,
        "label": spec.label,
        "grid": {"dims": list(spec.grid.dims), "spacing": list(spec.grid.spacing), "periodic": spec.grid.periodic},
        "thresholds": thresholds_to_dict(spec.thresholds),
        "stages": [stage_to_dict(s) for s in spec.stages],
    }


def serialize_chain(spec):
    return json.dumps(chain_to_dict(spec), indent=2) + "\n"
