"""Seeded samplers for mixture distributions with optional zero inflation.

Components are multivariate Gaussians or Gaussian-copula distributions with
Gamma or Exponential margins. Specs are plain dataclasses that round-trip
through JSON (see :func:`spec_to_dict` / :func:`spec_from_dict`).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import InvalidSpec, NotPositiveDefinite, UnknownExperiment

__all__ = [
    "CovSpec",
    "Component",
    "MixtureSpec",
    "Experiment",
    "random_spd",
    "tapering_corr",
    "sample_mixture",
    "experiment_spec",
    "EXPERIMENTS",
    "spec_to_dict",
    "spec_from_dict",
    "save_specs",
    "load_specs",
]

FAMILIES = ("gaussian", "gamma", "exponential")


def _matvec_rows(mat, z):
    # z @ mat.T without BLAS, for run-to-run bit-identity
    return np.einsum("ij,kj->ki", mat, z, optimize=False)


def random_spd(d: int, eig_lo: float, eig_hi: float, seed=None) -> np.ndarray:
    """Random symmetric positive definite matrix with eigenvalues ~ U[eig_lo, eig_hi].

    The eigenvectors come from the QR factorisation of a standard Gaussian
    matrix, with column signs fixed so that R has a positive diagonal.
    """
    if not 0 < eig_lo <= eig_hi:
        raise ValueError("need 0 < eig_lo <= eig_hi")
    rng = np.random.default_rng(seed)
    eig = rng.uniform(eig_lo, eig_hi, size=d)
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    a = np.einsum("ik,k,jk->ij", q, eig, q, optimize=False)
    return 0.5 * (a + a.T)


def tapering_corr(d: int, base: float, sign: int = 1) -> np.ndarray:
    """AR(1)-type correlation matrix with entries ``(sign * base) ** |i - j|``."""
    if not abs(base) < 1:
        raise ValueError("tapering base must satisfy |base| < 1")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    lag = np.abs(np.subtract.outer(np.arange(d), np.arange(d)))
    out = (sign * base) ** lag
    try:
        np.linalg.cholesky(out)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"taper matrix (base={base}, sign={sign}) is not PD") from exc
    return out


@dataclass(frozen=True)
class CovSpec:
    """Declarative covariance (Gaussian) or latent correlation (copula) matrix.

    ``kind`` is one of ``identity``, ``random-spd``, ``taper`` or ``matrix``;
    the resolved matrix is multiplied by ``scale``.
    """

    kind: str = "identity"
    scale: float = 1.0
    eig_lo: float | None = None
    eig_hi: float | None = None
    seed: int | list | None = None
    base: float | None = None
    sign: int = 1
    matrix: list | None = None

    def resolve(self, d: int) -> np.ndarray:
        if self.kind == "identity":
            out = np.eye(d)
        elif self.kind == "random-spd":
            out = random_spd(d, self.eig_lo, self.eig_hi, self.seed)
        elif self.kind == "taper":
            out = tapering_corr(d, self.base, self.sign)
        elif self.kind == "matrix":
            out = np.asarray(self.matrix, dtype=float)
            if out.shape != (d, d):
                raise InvalidSpec(f"matrix has shape {out.shape}, expected {(d, d)}")
        else:
            raise InvalidSpec(f"unknown covariance kind {self.kind!r}")
        return self.scale * out

    def to_dict(self) -> dict:
        keep = {"kind": self.kind}
        if self.scale != 1.0:
            keep["scale"] = self.scale
        if self.kind == "random-spd":
            keep.update(eig_lo=self.eig_lo, eig_hi=self.eig_hi, seed=self.seed)
        elif self.kind == "taper":
            keep.update(base=self.base, sign=self.sign)
        elif self.kind == "matrix":
            keep["matrix"] = [list(map(float, r)) for r in np.asarray(self.matrix)]
        return keep


@dataclass(frozen=True)
class Component:
    """One mixture component.

    ``gaussian`` uses ``loc`` and treats ``cov`` as its covariance.
    ``gamma`` (``shape``, ``rate``) and ``exponential`` (``rate``) use ``cov``
    as the latent normal matrix of a Gaussian copula; it is used as given,
    without rescaling to unit diagonal. Per-coordinate parameters may be
    scalars (broadcast) or length-d lists.
    """

    family: str
    cov: CovSpec = field(default_factory=CovSpec)
    loc: float | list = 0.0
    shape: float | list = 1.0
    rate: float | list = 1.0

    def to_dict(self) -> dict:
        out = {"family": self.family, "cov": self.cov.to_dict()}
        if self.family == "gaussian":
            out["loc"] = self.loc
        if self.family == "gamma":
            out["shape"] = self.shape
        if self.family in ("gamma", "exponential"):
            out["rate"] = self.rate
        return out


@dataclass(frozen=True)
class MixtureSpec:
    d: int
    components: tuple
    weights: tuple
    zero_inflation: tuple | None = None

    def validate(self) -> None:
        if self.d < 1:
            raise InvalidSpec("d: must be >= 1")
        if len(self.components) == 0:
            raise InvalidSpec("components: at least one component required")
        if len(self.weights) != len(self.components):
            raise InvalidSpec("weights: one weight per component required")
        w = np.asarray(self.weights, dtype=float)
        if np.any(w <= 0) or np.any(w > 1) or abs(w.sum() - 1) > 1e-12:
            raise InvalidSpec(f"weights: must lie in (0, 1] and sum to 1, got {list(w)}")
        for i, comp in enumerate(self.components):
            where = f"components[{i}]"
            if comp.family not in FAMILIES:
                raise InvalidSpec(f"{where}.family: must be one of {FAMILIES}")
            try:
                cov = comp.cov.resolve(self.d)
            except (ValueError, TypeError) as exc:
                raise InvalidSpec(f"{where}.cov: {exc}") from exc
            if not np.allclose(cov, cov.T):
                raise InvalidSpec(f"{where}.cov: not symmetric")
            try:
                np.linalg.cholesky(cov)
            except np.linalg.LinAlgError as exc:
                raise NotPositiveDefinite(f"{where}.cov: not positive definite") from exc
            for name in ("loc", "shape", "rate"):
                v = np.broadcast_to(np.asarray(getattr(comp, name), dtype=float), (self.d,)) \
                    if np.ndim(getattr(comp, name)) == 0 else np.asarray(getattr(comp, name), dtype=float)
                if v.shape != (self.d,):
                    raise InvalidSpec(f"{where}.{name}: expected a scalar or {self.d} values")
                if not np.all(np.isfinite(v)):
                    raise InvalidSpec(f"{where}.{name}: must be finite")
                if name != "loc" and comp.family != "gaussian" and np.any(v <= 0):
                    raise InvalidSpec(f"{where}.{name}: must be positive")
        if self.zero_inflation is not None:
            p = np.asarray(self.zero_inflation, dtype=float)
            if p.shape != (self.d,) or np.any(p < 0) or np.any(p > 1):
                raise InvalidSpec(f"zero_inflation: need {self.d} probabilities in [0, 1]")


def _vec(v, d):
    return np.broadcast_to(np.asarray(v, dtype=float), (d,))


def _copula_margin(z, comp: Component, d: int):
    # split at 0 so neither tail of the latent normal is rounded to u = 0 or 1
    lower = stats.norm.cdf(z)
    upper = stats.norm.sf(z)
    rate = _vec(comp.rate, d)
    if comp.family == "exponential":
        dist = stats.expon(scale=1.0 / rate)
    else:
        dist = stats.gamma(_vec(comp.shape, d), scale=1.0 / rate)
    return np.where(z <= 0, dist.ppf(lower), dist.isf(upper))


def sample_mixture(spec: MixtureSpec, count: int, seed=None) -> np.ndarray:
    """Draw ``count`` rows from ``spec``; identical output for identical seeds."""
    spec.validate()
    if count < 1:
        raise InvalidSpec("count: must be >= 1")
    d = spec.d
    rng = np.random.default_rng(seed)
    which = rng.choice(len(spec.components), size=count, p=np.asarray(spec.weights, dtype=float))
    out = np.empty((count, d))
    for a, comp in enumerate(spec.components):
        rows = np.flatnonzero(which == a)
        if len(rows) == 0:
            continue
        chol = np.linalg.cholesky(comp.cov.resolve(d))
        z = _matvec_rows(chol, rng.standard_normal((len(rows), d)))
        if comp.family == "gaussian":
            out[rows] = _vec(comp.loc, d) + z
        else:
            out[rows] = _copula_margin(z, comp, d)
    if spec.zero_inflation is not None:
        p = np.asarray(spec.zero_inflation, dtype=float)
        out[rng.random((count, d)) < p] = 0.0
    return out


# --------------------------------------------------------------------------
# serialisation

def spec_to_dict(spec: MixtureSpec) -> dict:
    out = {
        "d": spec.d,
        "weights": [float(w) for w in spec.weights],
        "components": [c.to_dict() for c in spec.components],
    }
    if spec.zero_inflation is not None:
        out["zero_inflation"] = [float(p) for p in spec.zero_inflation]
    return out


def spec_from_dict(data: dict) -> MixtureSpec:
    try:
        comps = []
        for i, c in enumerate(data["components"]):
            c = dict(c)
            cov = CovSpec(**c.pop("cov", {"kind": "identity"}))
            comps.append(Component(cov=cov, **c))
        zi = data.get("zero_inflation")
        spec = MixtureSpec(int(data["d"]), tuple(comps), tuple(float(w) for w in data["weights"]),
                           None if zi is None else tuple(float(p) for p in zi))
    except KeyError as exc:
        raise InvalidSpec(f"missing field {exc.args[0]!r}") from exc
    except TypeError as exc:
        raise InvalidSpec(f"bad field: {exc}") from exc
    spec.validate()
    return spec


def save_specs(path, x: MixtureSpec, y: MixtureSpec, **extra) -> None:
    """Write an ``{"x": ..., "y": ...}`` spec file (JSON)."""
    doc = dict(extra)
    doc.update(x=spec_to_dict(x), y=spec_to_dict(y))
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_specs(path) -> tuple[MixtureSpec, MixtureSpec, dict]:
    """Read a spec file; returns (x_spec, y_spec, remaining top-level keys)."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{path}: not valid JSON ({exc})") from exc
    if "x" not in doc or "y" not in doc:
        raise InvalidSpec(f"{path}: expected top-level 'x' and 'y' mixture specs")
    x = spec_from_dict(doc.pop("x"))
    y = spec_from_dict(doc.pop("y"))
    if x.d != y.d:
        raise InvalidSpec(f"{path}: x has d={x.d} but y has d={y.d}")
    return x, y, doc


# --------------------------------------------------------------------------
# experiment catalogue

@dataclass
class Experiment:
    name: str
    fx: MixtureSpec
    fy: MixtureSpec
    n: int
    m: int
    d: int
    grid: tuple
    # True when part of the distribution (zero-inflation vector) is redrawn
    # for every replication
    per_replication: bool = False

    def __iter__(self):
        return iter((self.fx, self.fy, self.n, self.m, self.d))


_D_GRID = (5, 15, 30)


def _grid(*nm):
    return tuple((n, m, d) for n, m in nm for d in _D_GRID)


def _gauss(loc, cov=None):
    return Component("gaussian", cov or CovSpec(), loc=loc)


def _exp1(d, seed, scenario):
    covs = [CovSpec("random-spd", eig_lo=1.0, eig_hi=10.0, seed=[int(seed), k]) for k in (1, 2, 3)]
    mus = [0.0, -3.0, 3.0]
    fx = MixtureSpec(d, tuple(_gauss(mu, c) for mu, c in zip(mus, covs)), (0.3, 0.3, 0.4))
    third = covs[2]
    if scenario == 2:
        third = CovSpec("random-spd", scale=0.25, eig_lo=1.0, eig_hi=10.0, seed=[int(seed), 3])
    fy = MixtureSpec(d, (_gauss(mus[0], covs[0]), _gauss(mus[1], covs[1]), _gauss(mus[2], third)),
                     (0.1, 0.1, 0.8))
    return fx, fy


_S1 = CovSpec("taper", base=0.7, sign=1)
_S2 = CovSpec("taper", base=0.9, sign=-1)


def _gam(rate=1.0, cov=_S1):
    return Component("gamma", cov, shape=5.0, rate=rate)


def _expo(rate=1.0, cov=_S2):
    return Component("exponential", cov, rate=rate)


def _exp2(d, seed, scenario):
    fx = MixtureSpec(d, (_gam(), _expo()), (0.5, 0.5))
    if scenario == 1:
        fy = MixtureSpec(d, (_gam(), _expo()), (0.05, 0.95))
    else:
        s3 = CovSpec("taper", scale=0.25, base=0.9, sign=1)
        fy = MixtureSpec(d, (_gam(), _expo(1.5, s3)), (0.8, 0.2))
    return fx, fy


def _inflated(d):
    return int(round(0.8 * d))


def _exp3(d, seed, scenario):
    k = _inflated(d)
    rng = np.random.default_rng([int(seed), 3])
    p = np.zeros(d)
    p[:k] = rng.uniform(0.5, 0.6, size=k)
    p = tuple(p)
    fx = MixtureSpec(d, (_gam(), _expo()), (0.5, 0.5), p)
    if scenario == 1:
        fy = MixtureSpec(d, (_gam(), _expo()), (0.2, 0.8), p)
    else:
        q = np.zeros(d)
        q[:k] = 0.3
        fy = MixtureSpec(d, (_gam(1.5), _expo()), (0.5, 0.5), tuple(q))
    return fx, fy


_FIG1_MU = [(10.0, 10.0), (20.0, 10.0), (20.0, 20.0), (10.0, 20.0)]
_FIG2_MU = [(0.0, 0.0, 0.0), (0.0, -4.0, -4.0), (4.0, -2.0, -3.0)]


def _fig1(d, seed, case):
    fx = MixtureSpec(2, tuple(_gauss(list(mu)) for mu in _FIG1_MU), (0.25,) * 4)
    if case == 1:
        fy = fx
    elif case == 2:
        fy = MixtureSpec(2, tuple(_gauss(list(mu)) for mu in _FIG1_MU[:3]), (0.1, 0.8, 0.1))
    else:
        fy = MixtureSpec(2, (_gauss([25.0, 5.0]),), (1.0,))
    return fx, fy


def _fig2(d, seed, case):
    fx = MixtureSpec(3, tuple(_gauss(list(mu)) for mu in _FIG2_MU), (0.3, 0.3, 0.4))
    if case == 1:
        fy = fx
    else:
        cov = CovSpec("identity", scale=0.1) if case == 3 else CovSpec()
        fy = MixtureSpec(3, tuple(_gauss(list(mu), cov) for mu in _FIG2_MU), (0.8, 0.1, 0.1))
    return fx, fy


# name -> (builder, scenario/case, grid of (n, m, d), redraw per replication)
EXPERIMENTS = {
    "exp1-s1": (_exp1, 1, _grid((500, 50), (2000, 200)), False),
    "exp1-s2": (_exp1, 2, _grid((500, 50), (2000, 200)), False),
    "exp2-s1": (_exp2, 1, _grid((500, 50), (2000, 200)), False),
    "exp2-s2": (_exp2, 2, _grid((500, 25), (2000, 100)), False),
    "exp3-s1": (_exp3, 1, _grid((500, 50), (2000, 200)), True),
    "exp3-s2": (_exp3, 2, _grid((500, 10), (2000, 40)), True),
    "fig1-case1": (_fig1, 1, ((2000, 200, 2),), False),
    "fig1-case2": (_fig1, 2, ((2000, 200, 2),), False),
    "fig1-case3": (_fig1, 3, ((2000, 200, 2),), False),
    "fig2-case1": (_fig2, 1, ((2000, 200, 3),), False),
    "fig2-case2": (_fig2, 2, ((2000, 200, 3),), False),
    "fig2-case3": (_fig2, 3, ((2000, 200, 3),), False),
}


def experiment_spec(name: str, d: int | None = None, n: int | None = None, m: int | None = None,
                    seed: int = 0) -> Experiment:
    """Distributions and sizes for one of the named simulation settings.

    ``d``, ``n`` and ``m`` default to the first cell of the experiment's grid.
    ``seed`` fixes the random parts of the distribution itself (random
    covariance matrices, zero-inflation probabilities), not the samples.
    """
    try:
        builder, case, grid, per_rep = EXPERIMENTS[name]
    except KeyError:
        raise UnknownExperiment(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}") from None
    n0, m0, d0 = grid[0]
    d = d0 if d is None else int(d)
    if name.startswith("fig") and d != d0:
        raise InvalidSpec(f"{name} is defined for d={d0} only")
    fx, fy = builder(d, seed, case)
    fx.validate()
    fy.validate()
    return Experiment(name, fx, fy, n0 if n is None else int(n), m0 if m is None else int(m), d,
                      grid, per_rep)
