"""Norm calculus for the supported sparsity-inducing norms.

Five kinds are supported:

* ``l1``, ``linf`` : value and closed-form dual only (nonsmooth, so no
  derivatives);
* ``l2`` : value, gradient, Hessian, closed-form dual;
* ``group_l2`` : ``sum_g sqrt(w_g) ||x_g||_2`` over a partition of the
  coordinates, closed-form dual ``max_g ||x_g||_2 / sqrt(w_g)``;
* ``overlap_group_l2`` : ``sum_g ||c_g * x_g||_2`` where groups may share
  coordinates and ``c_g`` holds the coordinate weights
  ``1 / (number of groups containing the coordinate)``. No closed-form dual.

Group structures use 0-based coordinates internally; the JSON format read
by :func:`load_norm_spec` uses 1-based coordinates.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import kernels
from .exceptions import (
    DimensionMismatch,
    InvalidGroupStructure,
    NoClosedForm,
    NonDifferentiablePoint,
    UnsupportedNorm,
)


class NormKind(str, enum.Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"
    GROUP_L2 = "group_l2"
    OVERLAP_GROUP_L2 = "overlap_group_l2"

    @property
    def is_group(self):
        return self in (NormKind.GROUP_L2, NormKind.OVERLAP_GROUP_L2)

    @property
    def is_smooth(self):
        return self in (NormKind.L2, NormKind.GROUP_L2, NormKind.OVERLAP_GROUP_L2)


@dataclass(frozen=True, eq=False)
class GroupStructure:
    """Groups of coordinates over ``R^p``.

    Parameters
    ----------
    p : int
        Ambient dimension.
    groups : sequence of sequences of int
        0-based coordinate indices, one sequence per group.
    group_weights : sequence of float, optional
        ``w_g`` for the group lasso; defaults to the group sizes.
    coordinate_weights : sequence of float, optional
        Overrides the overlap weights, which otherwise are recomputed as
        ``1 / membership count``. Only restrictions of a larger structure
        need this.

    Construction only checks types; use :func:`validate_groups` for the
    coverage/overlap report. :class:`NormSpec` enforces validity.
    """

    p: int
    groups: tuple
    group_weights: tuple | None = None
    coordinate_weights: tuple | None = None

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise InvalidGroupStructure(f"p must be a positive integer, got {self.p!r}")
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "groups", groups)
        if self.group_weights is not None:
            w = tuple(float(v) for v in self.group_weights)
            if len(w) != len(groups):
                raise InvalidGroupStructure(f"{len(w)} group weights for {len(groups)} groups")
            if not all(np.isfinite(v) and v > 0 for v in w):
                raise InvalidGroupStructure("group weights must be positive and finite")
            object.__setattr__(self, "group_weights", w)
        if self.coordinate_weights is not None:
            cw = tuple(float(v) for v in self.coordinate_weights)
            if len(cw) != self.p:
                raise InvalidGroupStructure(f"{len(cw)} coordinate weights for p={self.p}")
            if not all(np.isfinite(v) and v > 0 for v in cw):
                raise InvalidGroupStructure("coordinate weights must be positive and finite")
            object.__setattr__(self, "coordinate_weights", cw)

    @property
    def n_groups(self):
        return len(self.groups)

    @cached_property
    def sizes(self):
        return np.array([len(g) for g in self.groups], dtype=np.int64)

    @cached_property
    def membership_counts(self):
        counts = np.zeros(self.p, dtype=np.int64)
        for g in self.groups:
            for i in g:
                if 0 <= i < self.p:
                    counts[i] += 1
        return counts

    @cached_property
    def weights(self):
        """Group weights ``w_g`` (explicit or group sizes)."""
        if self.group_weights is not None:
            return np.array(self.group_weights)
        return self.sizes.astype(float)

    @cached_property
    def recomputed_coordinate_weights(self):
        counts = self.membership_counts
        out = np.full(self.p, np.inf)
        np.divide(1.0, counts, out=out, where=counts > 0)
        return out

    @cached_property
    def tilde_weights(self):
        """Per-coordinate overlap weights ``w~``."""
        if self.coordinate_weights is not None:
            return np.array(self.coordinate_weights)
        return self.recomputed_coordinate_weights

    @cached_property
    def members(self):
        if not self.groups:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([np.asarray(g, dtype=np.int64) for g in self.groups])

    @cached_property
    def offsets(self):
        return np.concatenate([[0], np.cumsum(self.sizes)]).astype(np.int64)

    def group_vectors(self):
        """The weight vectors ``c_g`` (overlap weights restricted to each group)."""
        w = self.tilde_weights
        return [w[list(g)] for g in self.groups]

    def selection_matrix(self):
        """``G x p`` 0/1 matrix whose rows select the groups."""
        S = np.zeros((self.n_groups, self.p))
        for r, g in enumerate(self.groups):
            S[r, list(g)] = 1.0
        return S


@dataclass(frozen=True)
class GroupReport:
    """Outcome of :func:`validate_groups`; coordinates are 0-based."""

    uncovered: tuple
    empty_groups: tuple
    out_of_range: tuple
    duplicated: tuple
    shared: tuple
    weights_consistent: bool

    @property
    def valid_for_overlap(self):
        return not (self.uncovered or self.empty_groups or self.out_of_range or self.duplicated)

    @property
    def valid_for_partition(self):
        return self.valid_for_overlap and not self.shared

    def valid_for(self, kind):
        kind = NormKind(kind)
        if kind is NormKind.GROUP_L2:
            return self.valid_for_partition
        if kind is NormKind.OVERLAP_GROUP_L2:
            return self.valid_for_overlap
        return True

    def problems(self, kind=None):
        msgs = []
        if self.uncovered:
            msgs.append(f"coordinates not in any group: {list(self.uncovered)}")
        if self.empty_groups:
            msgs.append(f"empty groups: {list(self.empty_groups)}")
        if self.out_of_range:
            msgs.append(f"indices out of range: {list(self.out_of_range)}")
        if self.duplicated:
            msgs.append(f"groups listing a coordinate twice: {list(self.duplicated)}")
        if self.shared and (kind is None or NormKind(kind) is NormKind.GROUP_L2):
            msgs.append(f"coordinates shared by several groups: {list(self.shared)}")
        return msgs


def validate_groups(structure):
    """Check coverage, emptiness, index range and overlap of a group structure."""
    p = structure.p
    out_of_range = sorted({i for g in structure.groups for i in g if not 0 <= i < p})
    empty = tuple(k for k, g in enumerate(structure.groups) if len(g) == 0)
    dup = tuple(k for k, g in enumerate(structure.groups) if len(set(g)) != len(g))
    counts = structure.membership_counts
    uncovered = tuple(int(i) for i in np.flatnonzero(counts == 0))
    shared = tuple(int(i) for i in np.flatnonzero(counts > 1))
    recomputed = structure.recomputed_coordinate_weights
    consistent = structure.coordinate_weights is None or bool(
        np.array_equal(np.asarray(structure.coordinate_weights), recomputed)
    )
    return GroupReport(
        uncovered=uncovered,
        empty_groups=empty,
        out_of_range=tuple(out_of_range),
        duplicated=dup,
        shared=shared,
        weights_consistent=consistent,
    )


@dataclass(frozen=True, eq=False)
class NormSpec:
    """Which norm is in play, plus its group structure for the group kinds."""

    kind: NormKind
    p: int
    structure: GroupStructure | None = None
    _kernel_args: tuple = field(init=False, repr=False, default=None)

    def __post_init__(self):
        kind = NormKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if int(self.p) != self.p or self.p < 1:
            raise DimensionMismatch(f"p must be a positive integer, got {self.p!r}")
        if kind.is_group:
            if self.structure is None:
                raise InvalidGroupStructure(f"{kind.value} needs a group structure")
            if self.structure.p != self.p:
                raise InvalidGroupStructure(f"structure has p={self.structure.p}, spec has p={self.p}")
            report = validate_groups(self.structure)
            if not report.valid_for(kind):
                raise InvalidGroupStructure("; ".join(report.problems(kind)))
            s = self.structure
            if kind is NormKind.GROUP_L2:
                coef = np.repeat(np.sqrt(s.weights), s.sizes)
            else:
                coef = s.tilde_weights[s.members]
            object.__setattr__(self, "_kernel_args", (s.members, s.offsets, np.ascontiguousarray(coef)))
        elif self.structure is not None:
            raise InvalidGroupStructure(f"{kind.value} takes no group structure")

    @classmethod
    def l1(cls, p):
        return cls(NormKind.L1, p)

    @classmethod
    def l2(cls, p):
        return cls(NormKind.L2, p)

    @classmethod
    def linf(cls, p):
        return cls(NormKind.LINF, p)

    @classmethod
    def group_l2(cls, p, groups, weights=None):
        return cls(NormKind.GROUP_L2, p, GroupStructure(p, groups, group_weights=weights))

    @classmethod
    def overlap_group_l2(cls, p, groups, coordinate_weights=None):
        return cls(
            NormKind.OVERLAP_GROUP_L2,
            p,
            GroupStructure(p, groups, coordinate_weights=coordinate_weights),
        )

    def to_dict(self):
        """JSON-ready form (1-based coordinates)."""
        d = {"kind": self.kind.value, "p": self.p}
        if self.structure is not None:
            d["groups"] = [[i + 1 for i in g] for g in self.structure.groups]
            if self.structure.group_weights is not None:
                d["weights"] = list(self.structure.group_weights)
            if self.structure.coordinate_weights is not None:
                d["coordinate_weights"] = list(self.structure.coordinate_weights)
        return d


def norm_spec_from_dict(doc):
    """Build a :class:`NormSpec` from the JSON document form.

    Schema: ``{"kind": str, "p": int, "groups": [[int, ...], ...],
    "weights": [float, ...]}`` with 1-based indices; ``groups`` is required
    for the group kinds, ``weights`` (group lasso only) is optional.
    ``coordinate_weights`` may override the overlap weights.

    Without ``kind`` the norm is l2 when there are no groups, overlap group
    l2 when some coordinate sits in two groups or ``coordinate_weights`` is
    given, and group l2 otherwise.
    """
    if not isinstance(doc, dict):
        raise InvalidGroupStructure("norm spec must be a JSON object")
    unknown = set(doc) - {"kind", "p", "groups", "weights", "coordinate_weights"}
    if unknown:
        raise InvalidGroupStructure(f"unknown keys in norm spec: {sorted(unknown)}")
    try:
        kind = NormKind(doc["kind"]) if "kind" in doc else _infer_kind(doc)
    except ValueError:
        raise InvalidGroupStructure(f"unknown norm kind {doc.get('kind')!r}") from None
    p = doc.get("p")
    if not isinstance(p, int) or isinstance(p, bool) or p < 1:
        raise InvalidGroupStructure(f"'p' must be a positive integer, got {p!r}")
    if not kind.is_group:
        if "groups" in doc or "weights" in doc or "coordinate_weights" in doc:
            raise InvalidGroupStructure(f"{kind.value} takes no groups or weights")
        return NormSpec(kind, p)
    groups = doc.get("groups")
    if not isinstance(groups, list) or not all(isinstance(g, list) for g in groups):
        raise InvalidGroupStructure("'groups' must be a list of lists of 1-based indices")
    for g in groups:
        for i in g:
            if not isinstance(i, int) or isinstance(i, bool):
                raise InvalidGroupStructure(f"group index {i!r} is not an integer")
    zero_based = [[i - 1 for i in g] for g in groups]
    if kind is NormKind.GROUP_L2:
        if "coordinate_weights" in doc:
            raise InvalidGroupStructure("group_l2 takes 'weights', not 'coordinate_weights'")
        return NormSpec.group_l2(p, zero_based, doc.get("weights"))
    if "weights" in doc:
        raise InvalidGroupStructure("overlap_group_l2 weights are derived from the groups")
    return NormSpec.overlap_group_l2(p, zero_based, doc.get("coordinate_weights"))


def _infer_kind(doc):
    groups = doc.get("groups")
    if groups is None:
        return NormKind.L2
    if "coordinate_weights" in doc:
        return NormKind.OVERLAP_GROUP_L2
    seen = set()
    for g in groups if isinstance(groups, list) else []:
        for i in g if isinstance(g, list) else []:
            if i in seen:
                return NormKind.OVERLAP_GROUP_L2
            seen.add(i)
    return NormKind.GROUP_L2


def load_norm_spec(path):
    with open(Path(path)) as fh:
        return norm_spec_from_dict(json.load(fh))


def restrict_spec(spec, coords):
    """Norm of ``spec`` seen on the sub-vector ``x[coords]``.

    Groups are intersected with ``coords`` (empty intersections dropped)
    and re-indexed. Group weights and overlap coordinate weights are taken
    from the parent structure, not recomputed.
    """
    coords = [int(c) for c in coords]
    q = len(coords)
    if q == 0:
        raise DimensionMismatch("cannot restrict a norm to zero coordinates")
    if not spec.kind.is_group:
        return NormSpec(spec.kind, q)
    pos = {c: k for k, c in enumerate(coords)}
    s = spec.structure
    groups, weights = [], []
    for g, w in zip(s.groups, s.weights):
        sub = [pos[i] for i in g if i in pos]
        if sub:
            groups.append(sub)
            weights.append(w)
    if spec.kind is NormKind.GROUP_L2:
        return NormSpec.group_l2(q, groups, weights)
    return NormSpec.overlap_group_l2(q, groups, s.tilde_weights[coords])


# --------------------------------------------------------------------------
# evaluation


def _check_dim(spec, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.p,):
        raise DimensionMismatch(f"expected a vector of length {spec.p}, got shape {x.shape}")
    return x


def _require_smooth(spec):
    if not spec.kind.is_smooth:
        raise UnsupportedNorm(f"{spec.kind.value} is not twice differentiable; no gradient or Hessian")


_SAFE_LOW, _SAFE_HIGH = 1e-150, 1e150


def norm_value(spec, x):
    x = _check_dim(spec, x)
    kind = spec.kind
    if kind is NormKind.L1:
        return float(np.abs(x).sum())
    if kind is NormKind.LINF:
        return float(np.abs(x).max())
    # squares under- or overflow far from unit scale; rescale there
    scale = float(np.abs(x).max())
    if scale == 0.0:
        return 0.0
    if not _SAFE_LOW <= scale <= _SAFE_HIGH:
        return scale * norm_value(spec, x / scale)
    if kind is NormKind.L2:
        return float(np.linalg.norm(x))
    return float(kernels.group_norms(x, *spec._kernel_args).sum())


def _group_norms_nonzero(spec, x):
    norms = kernels.group_norms(x, *spec._kernel_args)
    if np.any(norms == 0.0):
        bad = np.flatnonzero(norms == 0.0).tolist()
        raise NonDifferentiablePoint(f"groups {bad} are identically zero at this point")
    return norms


def norm_gradient(spec, x):
    """Gradient of the norm at ``x``.

    Raises
    ------
    UnsupportedNorm
        For ``l1`` and ``linf``.
    NonDifferentiablePoint
        At ``x = 0`` (``l2``) or when some group sub-vector vanishes.
    """
    _require_smooth(spec)
    x = _check_dim(spec, x)
    if spec.kind is NormKind.L2:
        nrm = np.linalg.norm(x)
        if nrm == 0.0:
            raise NonDifferentiablePoint("the l2 norm is not differentiable at 0")
        return x / nrm
    norms = _group_norms_nonzero(spec, x)
    return kernels.group_gradient(x, *spec._kernel_args, norms)


def norm_hessian(spec, x):
    _require_smooth(spec)
    x = _check_dim(spec, x)
    if spec.kind is NormKind.L2:
        nrm = np.linalg.norm(x)
        if nrm == 0.0:
            raise NonDifferentiablePoint("the l2 norm is not differentiable at 0")
        H = -np.outer(x, x) / nrm**3
        H[np.diag_indices(x.size)] += 1.0 / nrm
        return H
    norms = _group_norms_nonzero(spec, x)
    H = kernels.group_hessian(x, *spec._kernel_args, norms)
    return 0.5 * (H + H.T)


def norm_majorizer(spec, x):
    """Curvature of the quadratic majorizer of the norm at ``x``.

    Each group term obeys ``||D z|| <= ||D z||^2 / (2 ||D x||) + ||D x|| / 2``
    with equality at ``z = x``; summing the curvatures gives the diagonal
    matrix ``sum_g D_g^2 / ||D_g x||``, which dominates :func:`norm_hessian`
    and, unlike it, is nonsingular along each group's own direction.
    """
    _require_smooth(spec)
    x = _check_dim(spec, x)
    if spec.kind is NormKind.L2:
        nrm = np.linalg.norm(x)
        if nrm == 0.0:
            raise NonDifferentiablePoint("the l2 norm is not differentiable at 0")
        return np.eye(x.size) / nrm
    members, offsets, coef = spec._kernel_args
    norms = _group_norms_nonzero(spec, x)
    per_member = coef**2 / np.repeat(norms, np.diff(offsets))
    return np.diag(np.bincount(members, weights=per_member, minlength=x.size))


def analytic_dual(spec, x):
    """Closed-form dual norm where one exists.

    ``l1 -> ||x||_inf``, ``linf -> ||x||_1``, ``l2 -> ||x||_2`` and
    ``group_l2 -> max_g ||x_g||_2 / sqrt(w_g)``.
    """
    x = _check_dim(spec, x)
    kind = spec.kind
    if kind is NormKind.L1:
        return float(np.abs(x).max())
    if kind is NormKind.LINF:
        return float(np.abs(x).sum())
    if kind is NormKind.L2:
        return float(np.linalg.norm(x))
    if kind is NormKind.GROUP_L2:
        s = spec.structure
        return float(max(np.linalg.norm(x[list(g)]) / np.sqrt(w) for g, w in zip(s.groups, s.weights)))
    raise NoClosedForm("the overlap group l2 norm has no closed-form dual")
