"""
scenario_manager.py

Scenario data model and sampling.
- Loads scenario JSON documents (bundled fixtures or arbitrary paths).
- Synthesizes the Lagrangian 1/2 g_ij u^i u^j in riemannian mode.
- Holds tensor fields as arrays of sympy expressions with compiled evaluators.
- Draws reproducible sample points with a splitmix64 generator.
"""

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

import config
from expr_engine import DomainError, Evaluator, Expr, ExprParseError, Point, chart_symbols, parse

logger = logging.getLogger(__name__)

MODES = ("riemannian", "lagrangian")

SIGNATURE_RANK = {
    "scalar": 0,
    "vector": 1,
    "1-form": 1,
    "(1,1)": 2,
    "(0,2)": 2,
    "2-form": 2,
    "(1,2)": 3,
    "3-form": 3,
    "(1,3)": 4,
}


class ScenarioError(ValueError):
    """Schema, dimension or expression problem in a scenario document."""

    def __init__(self, message: str, path: str = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class SamplingExhaustedError(RuntimeError):
    pass


def object_array(nested: Any) -> np.ndarray:
    """Array of sympy expressions; nested lists give the shape."""
    return np.array(nested, dtype=object)


def zeros(*shape: int) -> np.ndarray:
    return np.full(shape, sympy.S.Zero, dtype=object)


def map_array(fn: Callable[[Expr], Expr], array: np.ndarray) -> np.ndarray:
    array = np.asarray(array, dtype=object)
    result = np.empty(array.shape, dtype=object)
    for index in np.ndindex(array.shape):
        result[index] = fn(array[index])
    return result


@dataclass(frozen=True, eq=False)
class TensorField:
    """
    Component array of expressions with a declared space and variance.

    space: "Q" (base chart, coefficients in q), "TQ" (total space, indices over (q,u)),
    or "tau" (indices over the base, coefficients in (q,u)).
    Components of a (1,1) field are stored [upper][lower].
    """

    space: str
    signature: str
    components: np.ndarray
    n: int

    def __post_init__(self):
        if self.space not in ("Q", "TQ", "tau"):
            raise ValueError(f"Unknown space '{self.space}'")
        rank = SIGNATURE_RANK.get(self.signature)
        if rank is None:
            raise ValueError(f"Unknown signature '{self.signature}'")
        components = np.asarray(self.components, dtype=object)
        expected = (self.index_dim,) * rank
        if components.shape != expected:
            raise ValueError(
                f"{self.signature} field on {self.space} needs shape {expected}, got {components.shape}"
            )
        object.__setattr__(self, "components", components)

    @property
    def index_dim(self) -> int:
        return 2 * self.n if self.space == "TQ" else self.n

    @property
    def coordinates(self) -> Tuple[sympy.Symbol, ...]:
        q, u = chart_symbols(self.n)
        return q if self.space == "Q" else q + u

    @cached_property
    def _evaluator(self) -> Evaluator:
        return Evaluator(self.components, self.n)

    @cached_property
    def symbolic_gradient(self) -> np.ndarray:
        """d/dx^c of every component, indexed [c][...]."""
        coords = self.coordinates
        gradient = np.empty((len(coords),) + self.components.shape, dtype=object)
        for c, x in enumerate(coords):
            gradient[c] = map_array(lambda e: sympy.diff(e, x), self.components)
        return gradient

    @cached_property
    def _gradient_evaluator(self) -> Evaluator:
        return Evaluator(self.symbolic_gradient, self.n)

    def at(self, point: Point) -> np.ndarray:
        return self._evaluator(point)

    def gradient(self, point: Point) -> np.ndarray:
        return self._gradient_evaluator(point)

    def __getitem__(self, index) -> Expr:
        return self.components[index]


@dataclass(frozen=True)
class SamplingConfig:
    count: int
    seed: int
    q_box: Tuple[Tuple[float, float], ...]
    u_box: Tuple[Tuple[float, float], ...]
    tolerance: float


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    n: int
    mode: str
    lagrangian: Expr
    J: np.ndarray
    sampling: SamplingConfig
    metric: Optional[np.ndarray] = None
    f: Optional[Expr] = None
    expect_negative: Tuple[str, ...] = ()
    description: str = ""
    source: Optional[str] = None
    texts: Dict[str, str] = field(default_factory=dict)

    @property
    def riemannian(self) -> bool:
        return self.mode == "riemannian"

    @property
    def trace_J(self) -> Expr:
        return sympy.Add(*[self.J[i, i] for i in range(self.n)])

    @property
    def f_or_trace(self) -> Expr:
        return self.f if self.f is not None else self.trace_J

    def expressions(self) -> List[Expr]:
        """Every scalar expression declared by the document."""
        exprs = [self.lagrangian] + list(self.J.reshape(-1))
        if self.metric is not None:
            exprs += list(self.metric.reshape(-1))
        if self.f is not None:
            exprs.append(self.f)
        return exprs


@dataclass(frozen=True)
class SampleSet:
    points: Tuple[Point, ...]
    seed: int
    rejected: int = 0

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


class SplitMix64:
    """64-bit splitmix generator; doubles use the top 53 bits."""

    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def next_double(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


# --- Loading ---

def _parse_expr(text: Any, n: int, path: str, base_only: bool = False) -> Expr:
    if not isinstance(text, str):
        raise ScenarioError(f"expected an expression string, got {type(text).__name__}", path)
    try:
        e = parse(text, n)
    except ExprParseError as err:
        raise ScenarioError(str(err), path) from err
    if base_only:
        q, _ = chart_symbols(n)
        extra = e.free_symbols - set(q)
        if extra:
            names = ", ".join(sorted(s.name for s in extra))
            raise ScenarioError(f"must depend on base coordinates only (found {names})", path)
    return e


def _parse_matrix(rows: Any, n: int, path: str, base_only: bool = True) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != n or any(not isinstance(r, list) or len(r) != n for r in rows):
        shape = f"{len(rows)}x{len(rows[0]) if rows and isinstance(rows[0], list) else '?'}" if isinstance(rows, list) else "?"
        raise ScenarioError(f"dimension mismatch: expected {n}x{n}, got {shape}", path)
    return object_array(
        [[_parse_expr(rows[i][j], n, f"{path}[{i}][{j}]", base_only) for j in range(n)] for i in range(n)]
    )


def _parse_box(value: Any, n: int, default: Tuple[float, float], path: str) -> Tuple[Tuple[float, float], ...]:
    if value is None:
        return tuple(default for _ in range(n))
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        value = [value] * n
    if not isinstance(value, list) or len(value) != n:
        raise ScenarioError(f"expected {n} [lo, hi] intervals", path)
    box = []
    for i, interval in enumerate(value):
        if not (isinstance(interval, list) and len(interval) == 2) or not interval[0] < interval[1]:
            raise ScenarioError("interval must be [lo, hi] with lo < hi", f"{path}[{i}]")
        box.append((float(interval[0]), float(interval[1])))
    return tuple(box)


def _parse_sampling(doc: Dict[str, Any], n: int) -> SamplingConfig:
    sampling = doc.get("sampling", {}) or {}
    if not isinstance(sampling, dict):
        raise ScenarioError("expected an object", "sampling")
    count = sampling.get("count", config.DEFAULT_POINTS)
    seed = sampling.get("seed", config.DEFAULT_SEED)
    tolerance = sampling.get("tolerance", config.DEFAULT_TOLERANCE)
    if not isinstance(count, int) or count < 1:
        raise ScenarioError("must be a positive integer", "sampling.count")
    if not isinstance(seed, int) or seed < 0:
        raise ScenarioError("must be a non-negative integer", "sampling.seed")
    if not isinstance(tolerance, (int, float)) or tolerance <= 0:
        raise ScenarioError("must be a positive number", "sampling.tolerance")
    return SamplingConfig(
        count=count,
        seed=seed,
        q_box=_parse_box(sampling.get("q_box"), n, config.DEFAULT_Q_BOX, "sampling.q_box"),
        u_box=_parse_box(sampling.get("u_box"), n, config.DEFAULT_U_BOX, "sampling.u_box"),
        tolerance=float(tolerance),
    )


def load_scenario(document: Union[str, Dict[str, Any]], source: str = None) -> Scenario:
    """Builds a Scenario from a JSON document (text or already-decoded object)."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise ScenarioError(f"invalid JSON: {e}") from e
    if not isinstance(document, dict):
        raise ScenarioError("scenario document must be a JSON object")

    name = document.get("name")
    if not isinstance(name, str) or not name:
        raise ScenarioError("missing or empty", "name")
    n = document.get("dim")
    if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= config.MAX_DIMENSION:
        raise ScenarioError(f"must be an integer between 1 and {config.MAX_DIMENSION}", "dim")
    mode = document.get("mode")
    if mode not in MODES:
        raise ScenarioError(f"must be one of {', '.join(MODES)}", "mode")
    if "J" not in document:
        raise ScenarioError("missing", "J")

    J = _parse_matrix(document["J"], n, "J")
    q, u = chart_symbols(n)
    metric = None
    texts = {}
    if mode == "riemannian":
        if "metric" not in document:
            raise ScenarioError("required in riemannian mode", "metric")
        if "lagrangian" in document:
            raise ScenarioError("riemannian mode derives the Lagrangian from the metric", "lagrangian")
        metric = _parse_matrix(document["metric"], n, "metric")
        for i in range(n):
            for j in range(i + 1, n):
                if sympy.expand(metric[i, j] - metric[j, i]) != 0:
                    raise ScenarioError("metric must be symmetric", f"metric[{i}][{j}]")
        lagrangian = sympy.Rational(1, 2) * sympy.Add(
            *[metric[i, j] * u[i] * u[j] for i in range(n) for j in range(n)]
        )
    else:
        if "lagrangian" not in document:
            raise ScenarioError("required in lagrangian mode", "lagrangian")
        lagrangian = _parse_expr(document["lagrangian"], n, "lagrangian")
        texts["lagrangian"] = document["lagrangian"]

    f = None
    if document.get("f") is not None:
        f = _parse_expr(document["f"], n, "f", base_only=True)
        texts["f"] = document["f"]

    expect = document.get("expect", {}) or {}
    negative = expect.get("negative", []) if isinstance(expect, dict) else None
    if not isinstance(negative, list) or not all(isinstance(x, str) for x in negative):
        raise ScenarioError("expected a list of check identifiers", "expect.negative")

    scenario = Scenario(
        name=name,
        n=n,
        mode=mode,
        lagrangian=lagrangian,
        J=J,
        sampling=_parse_sampling(document, n),
        metric=metric,
        f=f,
        expect_negative=tuple(negative),
        description=str(document.get("description", "")),
        source=source,
        texts=texts,
    )
    logger.debug(f"[{name}] Loaded scenario: n={n}, mode={mode}")
    return scenario


class ScenarioManager:
    """Locates and loads scenario documents; bundled fixtures live in data/scenarios."""

    def __init__(self, scenarios_dir: Path = None):
        self.logger = logging.getLogger(__name__)
        self.scenarios_dir = Path(scenarios_dir) if scenarios_dir else config.SCENARIOS_DIR

    def list_bundled(self) -> List[Dict[str, Any]]:
        entries = []
        for path in sorted(self.scenarios_dir.glob("*.json")):
            try:
                with open(path, "r", encoding="utf-8") as f:
                    doc = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                self.logger.warning(f"Skipping unreadable fixture {path.name}: {e}")
                continue
            entries.append({
                "file": path.name,
                "name": doc.get("name", path.stem),
                "dim": doc.get("dim"),
                "mode": doc.get("mode"),
                "description": doc.get("description", ""),
            })
        return entries

    def resolve(self, name_or_path: Union[str, Path]) -> Path:
        candidate = Path(name_or_path)
        if candidate.is_file():
            return candidate
        bundled = self.scenarios_dir / candidate.name
        if bundled.is_file():
            return bundled
        bundled = self.scenarios_dir / f"{candidate.stem}.json"
        if bundled.is_file():
            return bundled
        raise ScenarioError(f"scenario '{name_or_path}' not found (looked in {self.scenarios_dir})")

    def load(self, name_or_path: Union[str, Path]) -> Scenario:
        path = self.resolve(name_or_path)
        self.logger.info(f"Loading scenario from {path}")
        try:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            self.logger.error(f"Failed to read {path}. Error: {e}")
            raise ScenarioError(f"cannot read {path}") from e
        return load_scenario(text, source=str(path))


# --- Derived data ---

def hessian_metric(s: Scenario) -> TensorField:
    """g_ij = d2L / du^i du^j as a (0,2) field along the projection."""
    _, u = chart_symbols(s.n)
    components = object_array(
        [[sympy.diff(s.lagrangian, u[i], u[j]) for j in range(s.n)] for i in range(s.n)]
    )
    return TensorField("tau", "(0,2)", components, s.n)


def probe_point(n: int) -> Point:
    return Point(tuple(config.PROBE_Q[:n]), tuple(config.PROBE_U[:n]))


def sample(
    s: Scenario,
    count: int = None,
    seed: int = None,
    q_box: Sequence[Tuple[float, float]] = None,
    u_box: Sequence[Tuple[float, float]] = None,
) -> SampleSet:
    """
    Draws `count` points uniformly from the boxes: per point the q components first, then u.
    Points where |det g| <= DET_REJECT (or g cannot be evaluated) are rejected and redrawn.
    """
    count = s.sampling.count if count is None else count
    seed = s.sampling.seed if seed is None else seed
    q_box = tuple(q_box) if q_box is not None else s.sampling.q_box
    u_box = tuple(u_box) if u_box is not None else s.sampling.u_box

    g = hessian_metric(s)
    det_g = Evaluator([sympy.Matrix(g.components.tolist()).det()], s.n)
    rng = SplitMix64(seed)
    cap = config.MAX_ATTEMPTS_FACTOR * count
    points: List[Point] = []
    attempts = 0
    while len(points) < count:
        if attempts >= cap:
            raise SamplingExhaustedError(
                f"[{s.name}] Accepted only {len(points)} of {count} points after {attempts} attempts"
            )
        attempts += 1
        q = tuple(lo + (hi - lo) * rng.next_double() for lo, hi in q_box)
        u = tuple(lo + (hi - lo) * rng.next_double() for lo, hi in u_box)
        point = Point(q, u)
        try:
            value = det_g(point)[0]
        except DomainError:
            logger.debug(f"[{s.name}] Rejected point {point}: metric not evaluable")
            continue
        if abs(value) <= config.DET_REJECT:
            logger.debug(f"[{s.name}] Rejected point {point}: |det g| = {abs(value):.3e}")
            continue
        points.append(point)

    rejected = attempts - len(points)
    if rejected:
        logger.warning(f"[{s.name}] Sampling rejected {rejected} of {attempts} candidate points")
    return SampleSet(points=tuple(points), seed=seed, rejected=rejected)
