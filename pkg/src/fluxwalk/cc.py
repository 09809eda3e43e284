"""Chalker--Coddington networks: scattering cells, dual paths, and flux.

The model lives on l^2(Z^2) and is assembled from 2x2 scattering matrices
S = q [[r, -t], [conj(t), conj(r)]] indexed by cells z in Z x 2Z.  Each cell
carries a two-dimensional incoming subspace and a two-dimensional outgoing
subspace; the unitary maps one onto the other cell by cell, so the flux of a
region projection is block diagonal over cells.

A separating curve is given on the dual lattice (vertices at face centers).
Each dual step bisects exactly one primal edge; the crossed edge carries the
r- or t-entry of its cell, which classifies path segments.  The region to the
left of the oriented curve defines the projection whose flux is analyzed.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import ValidationError
from .fields import Ray, SiteMap
from .flux import FluxField, analyze, assemble_field, index_by_odd_trace, selfcheck_against_operator
from .lattice import LatticeState, Site
from .operators import LocalUnitary


# ---------------------------------------------------------------------------
# cell geometry


def in_cell(site: Site) -> tuple[Site, int]:
    """Cell label and incoming slot owning a lattice point."""
    m, n = site
    m_even, n_even = m % 2 == 0, n % 2 == 0
    if m_even and n_even:
        return (m, n), 0
    if not m_even and not n_even:
        return (m - 1, n + 1), 1
    if not m_even and n_even:
        return (m, n), 0
    return (m - 1, n - 1), 1


def out_cell(site: Site) -> tuple[Site, int]:
    """Cell label and outgoing slot owning a lattice point."""
    m, n = site
    m_even, n_even = m % 2 == 0, n % 2 == 0
    if m_even and not n_even:
        return (m, n + 1), 0
    if not m_even and n_even:
        return (m - 1, n), 1
    if m_even and n_even:
        return (m - 1, n), 0
    return (m, n - 1), 1


def cell_in_basis(z: Site) -> tuple[Site, Site]:
    a, b = z
    if a % 2 == 0:
        return (a, b), (a + 1, b - 1)
    return (a, b), (a + 1, b + 1)


def cell_out_basis(z: Site) -> tuple[Site, Site]:
    a, b = z
    if a % 2 == 0:
        return (a, b - 1), (a + 1, b)
    return (a + 1, b), (a, b + 1)


# ---------------------------------------------------------------------------
# scattering data


@dataclass(frozen=True)
class ScatteringParams:
    """Parameters (q, r, t) of one scattering matrix."""

    q: complex
    r: complex
    t: complex

    def validate(self, tol: float = 1e-12) -> None:
        if abs(abs(self.q) - 1.0) > tol:
            raise ValidationError(f"|q| = {abs(self.q):.6g} is not unimodular")
        if abs(abs(self.r) ** 2 + abs(self.t) ** 2 - 1.0) > tol:
            raise ValidationError("|r|^2 + |t|^2 must equal 1")

    def matrix(self) -> np.ndarray:
        return self.q * np.array(
            [[self.r, -self.t], [np.conj(self.t), np.conj(self.r)]], dtype=complex
        )


CRITICAL = ScatteringParams(1.0, 1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0))
FULL_REFLECTION = ScatteringParams(1.0, 1.0, 0.0)   # identity matrix
FULL_TRANSMISSION = ScatteringParams(1.0, 0.0, 1.0)  # antidiagonal [[0,-1],[1,0]]


class ScatteringField:
    """Total assignment z -> scattering parameters (window, rays, background)."""

    def __init__(self, sitemap: SiteMap):
        self.map = sitemap
        for desc, params in sitemap.template_values():
            if not isinstance(params, ScatteringParams):
                raise ValidationError(f"{desc} is not a ScatteringParams")
            params.validate()

    @classmethod
    def constant(cls, params: ScatteringParams) -> "ScatteringField":
        return cls(SiteMap(2, background=params))

    @classmethod
    def with_window(cls, window: dict, background: ScatteringParams) -> "ScatteringField":
        for z in window:
            if z[1] % 2 != 0:
                raise ValidationError(f"cell label {z} has odd second coordinate")
        return cls(SiteMap(2, window=window, background=background))

    def value(self, z: Site) -> ScatteringParams:
        return self.map.value(z)

    def matrix(self, z: Site) -> np.ndarray:
        return self.value(z).matrix()

    def bounds(self):
        return self.map.bounds()

    def periods(self):
        return self.map.periods()

    def overridden(self, window: dict | None = None, rays=()) -> "ScatteringField":
        """New field with extra overrides taking precedence."""
        merged = dict(self.map.window)
        merged.update({tuple(k): v for k, v in (window or {}).items()})
        return ScatteringField(
            SiteMap(
                2,
                window=merged,
                rays=list(rays) + list(self.map.rays),
                planes=self.map.planes,
                halfspaces=self.map.halfspaces,
                background=self.map.background,
            )
        )


def random_phase_window(
    rng: np.random.Generator,
    r_abs: float,
    a_range: range,
    b_range: range,
) -> dict:
    """Window of cells with fixed |r| and independent uniform phases."""
    t_abs = math.sqrt(max(0.0, 1.0 - r_abs**2))
    window = {}
    for a in a_range:
        for b in b_range:
            if b % 2 != 0:
                continue
            q = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
            r = r_abs * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
            t = t_abs * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi))
            window[(a, b)] = ScatteringParams(q, r, t)
    return window


class CCUnitary(LocalUnitary):
    """The network unitary: each cell's incoming pair scatters to its
    outgoing pair through the cell's matrix."""

    kind = "cc-model"
    n_internal = 1

    def __init__(self, scattering: ScatteringField):
        self.scattering = scattering

    def apply(self, psi: LatticeState) -> LatticeState:
        self._check(psi)
        out: dict[Site, np.ndarray] = {}
        for site, vec in psi.items():
            z, j = in_cell(site)
            s = self.scattering.matrix(z)
            outs = cell_out_basis(z)
            for b in (0, 1):
                amp = s[j, b] * vec[0]
                if amp == 0:
                    continue
                buf = out.get(outs[b])
                if buf is None:
                    buf = np.zeros(1, dtype=complex)
                    out[outs[b]] = buf
                buf[0] += amp
        return LatticeState(1, out, _take=True)

    def apply_adjoint(self, psi: LatticeState) -> LatticeState:
        self._check(psi)
        out: dict[Site, np.ndarray] = {}
        for site, vec in psi.items():
            z, b = out_cell(site)
            s = self.scattering.matrix(z)
            ins = cell_in_basis(z)
            for j in (0, 1):
                amp = np.conj(s[j, b]) * vec[0]
                if amp == 0:
                    continue
                buf = out.get(ins[j])
                if buf is None:
                    buf = np.zeros(1, dtype=complex)
                    out[ins[j]] = buf
                buf[0] += amp
        return LatticeState(1, out, _take=True)


def build_cc(scattering: ScatteringField) -> CCUnitary:
    return CCUnitary(scattering)


# ---------------------------------------------------------------------------
# dual paths


@dataclass(frozen=True)
class CrossedEdge:
    """One primal edge bisected by a dual step, with its cell bookkeeping."""

    t: int
    source: Site
    target: Site
    cell: Site
    slot_in: int
    slot_out: int
    tag: str


def crossed_points(v: Site, w: Site) -> tuple[Site, Site]:
    """Endpoints of the primal edge bisected by the dual step v -> w,
    returned as (left of the step, right of the step).  Dual label u sits at
    real position u + (1/2, -1/2); all arithmetic stays integral."""
    d = (w[0] - v[0], w[1] - v[1])
    if abs(d[0]) + abs(d[1]) != 1:
        raise ValidationError(f"dual step {v} -> {w} is not a unit step")
    mid2 = (v[0] + w[0] + 1, v[1] + w[1] - 1)
    perp = (-d[1], d[0])
    left = ((mid2[0] + perp[0]) // 2, (mid2[1] + perp[1]) // 2)
    right = ((mid2[0] - perp[0]) // 2, (mid2[1] - perp[1]) // 2)
    return left, right


def edge_between(p: Site, q: Site) -> tuple[Site, Site, Site, int, int]:
    """Orient the primal edge {p, q}: returns (source, target, cell, slot_in,
    slot_out).  Exactly one orientation is carried by the network."""
    z_p, j_p = in_cell(p)
    z_q, b_q = out_cell(q)
    if z_p == z_q:
        return p, q, z_p, j_p, b_q
    z_q2, j_q = in_cell(q)
    z_p2, b_p = out_cell(p)
    if z_q2 == z_p2:
        return q, p, z_q2, j_q, b_p
    raise ValidationError(f"points {p}, {q} do not share a scattering cell")


def classify_step(t: int, v: Site, w: Site) -> CrossedEdge:
    """Crossed edge of one dual step with its r/t weight tag.

    The tag comes from which matrix entry carries the amplitude (diagonal
    entries are r, off-diagonal are t); the geometric parity rule is
    re-checked as an independent consistency test.
    """
    left, right = crossed_points(v, w)
    source, target, cell, slot_in, slot_out = edge_between(left, right)
    tag = "r" if slot_in == slot_out else "t"
    # parity rule: vertical edges are r iff their lower row is odd,
    # horizontal edges are r iff their left column is odd
    if source[0] == target[0]:
        expected = "r" if min(source[1], target[1]) % 2 != 0 else "t"
    else:
        expected = "r" if min(source[0], target[0]) % 2 != 0 else "t"
    if tag != expected:
        raise ValidationError(
            f"edge {source}->{target}: amplitude tag {tag} contradicts parity rule"
        )
    return CrossedEdge(t, source, target, cell, slot_in, slot_out, tag)


class DualPath:
    """A bi-infinite simple dual-lattice curve: explicit middle vertices plus
    two straight rays.  vertex(t) = middle[0] - t*pre_dir for t <= 0, the
    middle for 0 <= t <= m, and middle[m] + (t-m)*post_dir beyond."""

    def __init__(self, middle, pre_dir: Site, post_dir: Site):
        self.middle = tuple(tuple(v) for v in middle)
        self.pre_dir = tuple(pre_dir)
        self.post_dir = tuple(post_dir)
        if not self.middle:
            raise ValidationError("path needs at least one explicit vertex")
        for d in (self.pre_dir, self.post_dir):
            if abs(d[0]) + abs(d[1]) != 1:
                raise ValidationError("ray directions must be unit steps")
        for a, b in zip(self.middle, self.middle[1:]):
            if abs(b[0] - a[0]) + abs(b[1] - a[1]) != 1:
                raise ValidationError(f"middle step {a} -> {b} is not a unit step")
        if len(set(self.middle)) != len(self.middle):
            raise ValidationError("path revisits a dual vertex")
        pre_ray = Ray(self._pre_base(), self.pre_dir)
        post_ray = Ray(self._post_base(), self.post_dir)
        for v in self.middle:
            if pre_ray.locate(v) is not None or post_ray.locate(v) is not None:
                raise ValidationError("path ray re-enters the explicit middle")
        # the two rays must not meet
        if self.pre_dir == self.post_dir or self.pre_dir == tuple(-c for c in self.post_dir):
            b0, b1 = pre_ray.base, post_ray.base
            offset = (b1[0] - b0[0], b1[1] - b0[1])
            m = None
            ok = True
            for o, s in zip(offset, self.pre_dir):
                if s != 0:
                    m = o // s if o % s == 0 else None
                    if m is None:
                        ok = False
                elif o != 0:
                    ok = False
            if ok and m is not None:
                if self.pre_dir == self.post_dir or m >= 0:
                    raise ValidationError("path rays intersect")
        else:
            # perpendicular rays meet in at most one lattice point
            b0, b1 = pre_ray.base, post_ray.base
            k = sum((b1[i] - b0[i]) * self.pre_dir[i] for i in (0, 1))
            kp = sum((b0[i] - b1[i]) * self.post_dir[i] for i in (0, 1))
            if k >= 0 and kp >= 0 and pre_ray.site_at(k) == post_ray.site_at(kp):
                raise ValidationError("path rays intersect")

    def _pre_base(self) -> Site:
        return (self.middle[0][0] + self.pre_dir[0], self.middle[0][1] + self.pre_dir[1])

    def _post_base(self) -> Site:
        last = self.middle[-1]
        return (last[0] + self.post_dir[0], last[1] + self.post_dir[1])

    @property
    def m_last(self) -> int:
        return len(self.middle) - 1

    def vertex(self, t: int) -> Site:
        if t < 0:
            v0 = self.middle[0]
            return (v0[0] - t * self.pre_dir[0], v0[1] - t * self.pre_dir[1])
        if t <= self.m_last:
            return self.middle[t]
        vm = self.middle[-1]
        k = t - self.m_last
        return (vm[0] + k * self.post_dir[0], vm[1] + k * self.post_dir[1])

    def step(self, t: int) -> CrossedEdge:
        """Crossed edge of the dual step t -> t+1."""
        return classify_step(t, self.vertex(t), self.vertex(t + 1))

    def steps(self, t0: int, t1: int) -> list[CrossedEdge]:
        return [self.step(t) for t in range(t0, t1)]

    def cells(self, t0: int, t1: int) -> list[Site]:
        seen = []
        for e in self.steps(t0, t1):
            if e.cell not in seen:
                seen.append(e.cell)
        return seen

    def is_pure(self, t0: int, t1: int, tag: str) -> bool:
        return all(e.tag == tag for e in self.steps(t0, t1))

    def switch_window(self, probe: int = 40) -> tuple[int, int]:
        """Smallest [t0, t1] outside of which the step tags are constant."""
        pre_tag = self.step(-probe).tag
        post_tag = self.step(probe).tag
        t0 = 0
        for t in range(-probe, self.m_last + probe):
            if self.step(t).tag != pre_tag:
                t0 = t
                break
        t1 = t0
        for t in range(probe + self.m_last, t0 - 1, -1):
            if self.step(t).tag != post_tag:
                t1 = t + 1
                break
        return t0, t1

    def bounds(self):
        xs = [v[0] for v in self.middle]
        ys = [v[1] for v in self.middle]
        return (min(xs), min(ys)), (max(xs), max(ys))

    def extended(self, pre_steps: int, post_steps: int) -> "DualPath":
        """Same curve with ray vertices materialized into the middle."""
        if pre_steps < 0 or post_steps < 0:
            raise ValidationError("extension step counts must be nonnegative")
        middle = [self.vertex(t) for t in range(-pre_steps, self.m_last + post_steps + 1)]
        return DualPath(middle, self.pre_dir, self.post_dir)


# ---------------------------------------------------------------------------
# region to the left of the curve


class RegionSplit:
    """Membership in the subgraph left of an oriented dual curve.

    Every dual step bisects one primal edge and labels its two endpoints
    (left point inside, right point outside).  Labels propagate by flood fill
    over uncut lattice edges inside a finite box; beyond the box the labels
    are constant along outward directions, so clamping is exact.
    """

    def __init__(self, path: DualPath, lo: Site, hi: Site):
        (mx0, my0), (mx1, my1) = path.bounds()
        self.lo = (min(lo[0], mx0 - 2), min(lo[1], my0 - 2))
        self.hi = (max(hi[0], mx1 + 2), max(hi[1], my1 + 2))
        self.path = path
        span = (
            (self.hi[0] - self.lo[0])
            + (self.hi[1] - self.lo[1])
            + len(path.middle)
            + abs(mx0) + abs(mx1) + abs(my0) + abs(my1)
            + 8
        )
        cut: set[frozenset] = set()
        seeds: dict[Site, int] = {}
        for t in range(-span, path.m_last + span):
            v, w = path.vertex(t), path.vertex(t + 1)
            if not (self._near_box(v) or self._near_box(w)):
                continue
            left, right = crossed_points(v, w)
            cut.add(frozenset((left, right)))
            for point, side in ((left, 1), (right, 0)):
                if self._in_box(point):
                    prev = seeds.get(point)
                    if prev is not None and prev != side:
                        raise ValidationError(f"conflicting side labels at {point}")
                    seeds[point] = side
        if not seeds:
            raise ValidationError("path does not meet the labeling box")
        labels = dict(seeds)
        queue = deque(seeds)
        while queue:
            p = queue.popleft()
            side = labels[p]
            for d in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                q = (p[0] + d[0], p[1] + d[1])
                if not self._in_box(q) or frozenset((p, q)) in cut:
                    continue
                prev = labels.get(q)
                if prev is None:
                    labels[q] = side
                    queue.append(q)
                elif prev != side:
                    raise ValidationError(f"inconsistent region labels at {q}")
        expected = (self.hi[0] - self.lo[0] + 1) * (self.hi[1] - self.lo[1] + 1)
        if len(labels) != expected:
            raise ValidationError("region labeling did not cover the box")
        self._labels = labels

    def _in_box(self, p: Site) -> bool:
        return self.lo[0] <= p[0] <= self.hi[0] and self.lo[1] <= p[1] <= self.hi[1]

    def _near_box(self, v: Site) -> bool:
        return (
            self.lo[0] - 2 <= v[0] <= self.hi[0] + 2
            and self.lo[1] - 2 <= v[1] <= self.hi[1] + 2
        )

    def side(self, point: Site) -> int:
        p = (
            min(max(point[0], self.lo[0]), self.hi[0]),
            min(max(point[1], self.lo[1]), self.hi[1]),
        )
        return self._labels[p]

    def project(self, psi: LatticeState) -> LatticeState:
        data = {}
        for site, vec in psi.items():
            if self.side(site):
                data[site] = vec
        return LatticeState(psi.n_internal, data)

    def region_points(self) -> set[Site]:
        return {p for p, s in self._labels.items() if s == 1}


# ---------------------------------------------------------------------------
# flux over cells


class CCGeometry:
    """Adapter between cell-labelled flux blocks and lattice states."""

    kind = "cc"
    state_dim = 1

    def __init__(self, scattering: ScatteringField, split: RegionSplit, lo, hi):
        self.scattering = scattering
        self.split = split
        self.lo = list(lo)
        self.hi = list(hi)

    def touched_labels(self, psi: LatticeState):
        return {in_cell(site)[0] for site, _ in psi.items()}

    def gather(self, psi: LatticeState, label) -> np.ndarray:
        s1, s2 = cell_in_basis(label)
        return np.array([psi.vector_at(s1)[0], psi.vector_at(s2)[0]], dtype=complex)

    def make_state(self, label, coords) -> LatticeState:
        s1, s2 = cell_in_basis(label)
        return LatticeState(
            1, {s1: np.array([coords[0]]), s2: np.array([coords[1]])}
        )

    def project(self, psi: LatticeState) -> LatticeState:
        return self.split.project(psi)

    def probe_sites(self, rng: np.random.Generator):
        sites = set()
        for _ in range(8):
            sites.add(
                (
                    int(rng.integers(self.lo[0], self.hi[0] + 1)),
                    int(rng.integers(self.lo[1], self.hi[1] + 1)),
                )
            )
        return sites

    def kitaev(self, labels) -> float:
        total = 0.0
        for z in labels:
            a2 = np.abs(self.scattering.matrix(z)) ** 2
            ins = cell_in_basis(z)
            outs = cell_out_basis(z)
            d = np.array([self.split.side(p) for p in ins], dtype=float)
            dh = np.array([self.split.side(p) for p in outs], dtype=float)
            if not d.any() and not dh.any():
                continue
            term1 = float(((1.0 - d) @ a2) @ dh)
            term2 = float((d @ a2) @ (1.0 - dh))
            total += term1 - term2
        return total


def cc_flux(
    scattering: ScatteringField,
    path: DualPath,
    tol: Tolerances = DEFAULT,
    selfcheck: bool = True,
    pad: int = 4,
) -> FluxField:
    """Blockwise flux of the left-region projection of a dual path.

    Block at cell z in the incoming basis: conj(S) D_out S^T - D_in with the
    0/1 region memberships of the outgoing and incoming points on the
    diagonals.
    """
    (plo, phi_) = path.bounds()
    s_lo, s_hi = scattering.bounds()
    lo = [min(s_lo[0], plo[0]) - pad, min(s_lo[1], plo[1]) - pad]
    hi = [max(s_hi[0], phi_[0]) + pad, max(s_hi[1], phi_[1]) + pad]
    lo[1] -= lo[1] % 2
    hi[1] += hi[1] % 2
    per = scattering.periods()
    bands = [math.lcm(2, per[0]), math.lcm(2, per[1])]
    steps = [1, 2]

    point_lo = (lo[0] - 2 * bands[0] - 3, lo[1] - 2 * bands[1] - 3)
    point_hi = (hi[0] + 2 * bands[0] + 4, hi[1] + 2 * bands[1] + 4)
    split = RegionSplit(path, point_lo, point_hi)

    def block_fn(z):
        s = scattering.matrix(z)
        ins = cell_in_basis(z)
        outs = cell_out_basis(z)
        d = np.array([split.side(p) for p in ins], dtype=float)
        dh = np.array([split.side(p) for p in outs], dtype=float)
        # conj(S) diag(dh) S^T - diag(d), in the incoming basis of the cell
        m = (s.conj() * dh) @ s.T - np.diag(d).astype(complex)
        rank_diff = int(round(dh.sum() - d.sum()))
        return m, d, rank_diff

    geometry = CCGeometry(scattering, split, lo, hi)
    flux = assemble_field(geometry, block_fn, lo, hi, bands, steps, tol)
    if selfcheck:
        selfcheck_against_operator(flux, CCUnitary(scattering))
    return flux


def cc_index(scattering: ScatteringField, path: DualPath, tol: Tolerances = DEFAULT):
    """Index report with the geometric rank formula cross-checked against
    kernel counting."""
    flux = cc_flux(scattering, path, tol)
    report = analyze(flux)
    if report.index != flux.rank_difference:
        raise ValidationError(
            f"kernel count {report.index} disagrees with the cell rank formula "
            f"{flux.rank_difference}"
        )
    return report, flux


# ---------------------------------------------------------------------------
# canonical paths


def straight_r_path(height_cells: int = 0) -> DualPath:
    """Horizontal dual line at an even height: every crossed edge carries r."""
    y = 2 * height_cells
    return DualPath([(0, y)], pre_dir=(-1, 0), post_dir=(1, 0))


def crossover_path(west_first: bool = True) -> DualPath:
    """Path that is r-type on one side and t-type on the other, switching at
    a single dual vertex.  ``west_first`` runs the r-ray westward."""
    if west_first:
        return DualPath([(0, 0), (0, 1)], pre_dir=(-1, 0), post_dir=(1, 0))
    return DualPath([(0, 0), (0, 1)], pre_dir=(1, 0), post_dir=(-1, 0))


def wiggled_r_path() -> DualPath:
    """A pure-r path with a local detour (stays on r-carrying links)."""
    middle = [
        (-5, 0),
        (-4, 0),
        (-3, 0),
        (-3, 1),
        (-3, 2),
        (-2, 2),
        (-1, 2),
        (-1, 1),
        (-1, 0),
        (0, 0),
    ]
    return DualPath(middle, pre_dir=(-1, 0), post_dir=(1, 0))


# ---------------------------------------------------------------------------
# path surgery


def path_surgery(
    path: DualPath,
    t_from: int,
    t_to: int,
    replacement,
    require_tag: str | None = None,
) -> DualPath:
    """Replace the part of the path between two of its middle vertices.

    ``replacement`` must start at vertex(t_from) and end at vertex(t_to).
    When ``require_tag`` is given, every replaced link must carry that weight
    tag; a wrong endpoint parity surfaces here as a tag violation.
    """
    if not 0 <= t_from < t_to <= path.m_last:
        raise ValidationError("surgery endpoints must lie in the explicit middle")
    replacement = [tuple(v) for v in replacement]
    if replacement[0] != path.vertex(t_from) or replacement[-1] != path.vertex(t_to):
        raise ValidationError("replacement does not match the surgery endpoints")
    if require_tag is not None:
        for t, (v, w) in enumerate(zip(replacement, replacement[1:])):
            edge = classify_step(t, v, w)
            if edge.tag != require_tag:
                raise ValidationError(
                    f"replacement step {v} -> {w} carries tag {edge.tag}, "
                    f"needs {require_tag}"
                )
    middle = list(path.middle[: t_from]) + replacement + list(path.middle[t_to + 1 :])
    return DualPath(middle, path.pre_dir, path.post_dir)


def region_difference_rank(path_a: DualPath, path_b: DualPath, box: int = 30) -> int:
    """Rank of the difference of the two region projections: the size of the
    symmetric difference of the left regions."""
    lo = (-box, -box)
    hi = (box, box)
    split_a = RegionSplit(path_a, lo, hi)
    split_b = RegionSplit(path_b, lo, hi)
    diff = split_a.region_points() ^ split_b.region_points()
    for p in diff:
        if abs(p[0]) >= box - 2 or abs(p[1]) >= box - 2:
            raise ValidationError("region difference reaches the box boundary")
    return len(diff)


# ---------------------------------------------------------------------------
# anomalous transport family


def _deep_cell_ray(path: DualPath, ts: list[int]) -> tuple[Site, Site]:
    """Arithmetic progression of cells along a ray, from deep step samples."""
    cells = []
    for t in ts:
        c = path.step(t).cell
        if not cells or cells[-1] != c:
            cells.append(c)
    if len(cells) < 3:
        raise ValidationError("not enough distinct deep cells to fit a ray")
    step = (cells[1][0] - cells[0][0], cells[1][1] - cells[0][1])
    for a, b in zip(cells, cells[1:]):
        if (b[0] - a[0], b[1] - a[1]) != step:
            raise ValidationError("deep cells are not an arithmetic progression")
    return cells[0], step


def anomalous_transport(
    scattering: ScatteringField,
    path: DualPath,
    epsilons,
    tol: Tolerances = DEFAULT,
) -> dict:
    """Trace of the flux after capping both rays: full transmission far on
    the r side, full reflection far on the t side.

    Each capped flux has finitely many nonzero blocks, so its plain trace is
    defined, and it must equal the integer index of the uncapped flux.
    """
    report, flux = cc_index(scattering, path, tol)
    t0, t1 = path.switch_window()
    results = []
    for eps in epsilons:
        if not 0.0 < eps <= 1.0:
            raise ValidationError(f"epsilon {eps} out of range")
        cut = math.ceil(1.0 / eps)
        if not path.is_pure(-cut - 40, t0, "r") or not path.is_pure(t1, cut + 40, "t"):
            raise ValidationError(
                f"path is not r-pure left and t-pure right of the 1/eps={cut} cutoffs"
            )
        deep = max(abs(flux.lo[0]), abs(flux.hi[0]), abs(flux.lo[1]), abs(flux.hi[1]))
        reach = max(cut, deep) + 4 * max(flux.bands) + 12
        window = {}
        for e in path.steps(-reach, -cut):
            window[e.cell] = FULL_TRANSMISSION
        for e in path.steps(cut, reach):
            window[e.cell] = FULL_REFLECTION
        # seamless continuation: the cell rays start at the outermost window
        # cells and run outward
        r_base, r_inward = _deep_cell_ray(path, list(range(-reach, -reach + 9)))
        t_base, t_inward = _deep_cell_ray(path, list(range(reach - 1, reach - 10, -1)))
        rays = [
            (Ray(r_base, tuple(-c for c in r_inward)), [FULL_TRANSMISSION]),
            (Ray(t_base, tuple(-c for c in t_inward)), [FULL_REFLECTION]),
        ]
        capped = scattering.overridden(window=window, rays=rays)
        flux_eps = cc_flux(capped, path, tol)
        if not flux_eps.tail_zero:
            raise ValidationError("capped flux still has nonzero tail blocks")
        trace = index_by_odd_trace(flux_eps, 0)
        results.append((float(eps), complex(trace)))
    return {"index": report.index, "traces": results}
