"""Coined walks with engineered transport: half-lines, leads, bulk boundaries.

A lead is an unbounded self-avoiding lattice path together with its tangent
sequence; its quantum projection opens exactly the tangent direction at each
path site.  Coins that carry each tangent to the next with a unimodular
amplitude conduct perfectly along the lead, and the resulting flux index
counts outgoing minus incoming leads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import ValidationError
from .fields import AdaptedProjection, HalfSpace, MatrixField, Plane, Ray, SiteMap
from .flux import FluxField, analyze, assemble_field, selfcheck_against_operator
from .lattice import (
    LatticeState,
    Site,
    add,
    all_direction_vectors,
    direction_index,
    haar_unitary,
    index_of_vector,
    is_unitary,
    random_state,
    sub,
)
from .operators import CoinedWalk


def build_walk(coin: MatrixField, tol: Tolerances = DEFAULT) -> CoinedWalk:
    """Walk from a coin field; every template matrix must be unitary."""
    for desc, m in coin.map.template_values():
        if not is_unitary(np.asarray(m, dtype=complex), tol.unitary):
            raise ValidationError(f"coin matrix at {desc} is not unitary")
    return CoinedWalk(coin)


# ---------------------------------------------------------------------------
# flux geometry for walks


class WalkGeometry:
    """Adapter between site-labelled flux blocks and lattice states."""

    kind = "walk"

    def __init__(self, walk: CoinedWalk, proj: AdaptedProjection, lo, hi):
        self.walk = walk
        self.proj = proj
        self.phat = proj.shift_conjugate()
        self.state_dim = walk.n_internal
        self.lo = list(lo)
        self.hi = list(hi)

    def touched_labels(self, psi: LatticeState):
        return {site for site, _ in psi.items()}

    def gather(self, psi: LatticeState, label) -> np.ndarray:
        return psi.vector_at(label)

    def make_state(self, label, coords: np.ndarray) -> LatticeState:
        return LatticeState(self.state_dim, {tuple(label): np.asarray(coords, dtype=complex)})

    def project(self, psi: LatticeState) -> LatticeState:
        return self.proj.apply(psi)

    def probe_sites(self, rng: np.random.Generator):
        sites = []
        for _ in range(6):
            sites.append(tuple(int(rng.integers(l, h + 1)) for l, h in zip(self.lo, self.hi)))
        return set(sites)

    def kitaev(self, labels) -> float:
        """Sum over coin sites of |U|^2-weighted membership differences."""
        total = 0.0
        coin = self.walk.coin
        for x in labels:
            p = self.proj.diagonal(x)
            ph = self.phat.diagonal(x)
            if not p.any() and not ph.any():
                continue
            a2 = np.abs(coin.value(x)) ** 2
            total += float(ph @ a2.sum(axis=1) - a2.sum(axis=0) @ p)
        return total


def build_walk_flux(
    walk: CoinedWalk | MatrixField,
    proj: AdaptedProjection,
    tol: Tolerances = DEFAULT,
    selfcheck: bool = True,
    pad: int = 3,
) -> FluxField:
    """Assemble the blockwise flux of an adapted projection under a walk.

    Block at x: coin(x)^* phat(x) coin(x) - p(x) with phat the projection
    conjugated by the conditional shift.  Exact for every site; the window
    covers all features plus a margin, and the shell certifies the tail.
    """
    if isinstance(walk, MatrixField):
        walk = build_walk(walk, tol)
    if proj.d != walk.d:
        raise ValidationError("projection and walk dimensions differ")
    coin = walk.coin
    phat = proj.shift_conjugate()

    lo_c, hi_c = coin.bounds()
    lo_p, hi_p = proj.bounds()
    lo = [min(a, b - 1) - pad for a, b in zip(lo_c, lo_p)]
    hi = [max(a, b + 1) + pad for a, b in zip(hi_c, hi_p)]
    bands = [
        math.lcm(a, b) for a, b in zip(coin.periods(), proj.periods())
    ]
    steps = [1] * walk.d

    def block_fn(label):
        c = coin.value(label)
        p = proj.diagonal(label)
        ph = phat.diagonal(label)
        m = (c.conj().T * ph) @ c - np.diag(p).astype(complex)
        return m, p, int(round(ph.sum() - p.sum()))

    geometry = WalkGeometry(walk, proj, lo, hi)
    flux = assemble_field(geometry, block_fn, lo, hi, bands, steps, tol)
    if selfcheck:
        selfcheck_against_operator(flux, walk)
    return flux


def walk_index(coin: MatrixField, proj: AdaptedProjection, tol: Tolerances = DEFAULT):
    """Full index report; the geometric rank-difference formula must agree
    with the kernel count exactly."""
    flux = build_walk_flux(coin, proj, tol)
    report = analyze(flux)
    if report.index != flux.rank_difference:
        raise ValidationError(
            f"kernel count {report.index} disagrees with rank-difference "
            f"formula {flux.rank_difference}"
        )
    return report, flux


# ---------------------------------------------------------------------------
# standard projections


def halfline_projection(d: int, sign: int = 1) -> AdaptedProjection:
    """Characteristic function of {1, 2, ...} x {0}^(d-1) times the rank-one
    projection on the direction +e_1 (sign=+1) or -e_1 (sign=-1)."""
    slot = direction_index(1, sign)
    base = tuple([1] + [0] * (d - 1))
    step = tuple([1] + [0] * (d - 1))
    return AdaptedProjection.from_layers(d, rays=[(Ray(base, step), [{slot}])])


def basic_halfspace_projection(n_cut: int, interior: dict | None = None) -> AdaptedProjection:
    """d=1 projection: empty for x <= -n_cut, +e_1 open for x >= n_cut.

    The strip (-n_cut, n_cut) defaults to closed; pass ``interior`` to choose
    open slots there.
    """
    slot = direction_index(1, 1)
    window = {}
    if interior:
        for site, slots in interior.items():
            site = tuple(site)
            if not -n_cut < site[0] < n_cut:
                raise ValidationError("interior choice must stay inside the strip")
            window[site] = frozenset(slots)
    return AdaptedProjection.from_layers(
        1,
        window=window,
        halfspaces=[(HalfSpace(0, 1, n_cut), {slot})],
    )


def alternating_halfline_projection() -> AdaptedProjection:
    """d=1, open direction alternating with the parity of x on {1, 2, ...}."""
    slot_plus = direction_index(1, 1)
    slot_minus = direction_index(1, -1)
    # x = 1 + t: odd x first
    return AdaptedProjection.from_layers(
        1, rays=[(Ray((1,), (1,)), [{slot_minus}, {slot_plus}])]
    )


# ---------------------------------------------------------------------------
# leads and networks


@dataclass(frozen=True)
class LeadSpec:
    """An unbounded regular injective path with an eventually straight ray.

    ``prefix`` lists the explicit sites in chronological order: gamma(1..m)
    for outgoing leads, gamma(-m..-1) for incoming ones.  The ray continues
    from the far end of the prefix in direction ``ray_dir`` (pointing toward
    infinity).
    """

    kind: str
    prefix: tuple
    ray_dir: Site

    def __post_init__(self):
        if self.kind not in ("outgoing", "incoming"):
            raise ValidationError(f"unknown lead kind {self.kind!r}")
        if not self.prefix:
            raise ValidationError("lead prefix must be nonempty")
        object.__setattr__(self, "prefix", tuple(tuple(s) for s in self.prefix))
        object.__setattr__(self, "ray_dir", tuple(self.ray_dir))
        try:
            index_of_vector(self.ray_dir)
        except ValueError:
            raise ValidationError("ray direction must be a unit lattice step") from None
        steps = [sub(b, a) for a, b in zip(self.prefix, self.prefix[1:])]
        for s in steps:
            if sum(abs(c) for c in s) != 1:
                raise ValidationError("lead prefix must take unit steps")
        if len(set(self.prefix)) != len(self.prefix):
            raise ValidationError("lead prefix revisits a site")
        ray = Ray(self._ray_base(), self.ray_dir)
        for p in self.prefix:
            if ray.locate(p) is not None:
                raise ValidationError("lead ray re-enters its own prefix")

    # -- parametrization ---------------------------------------------------

    def _ray_base(self) -> Site:
        """First pure-ray site (one step beyond the prefix end)."""
        if self.kind == "outgoing":
            return add(self.prefix[-1], self.ray_dir)
        return add(self.prefix[0], self.ray_dir)

    def site(self, t: int) -> Site:
        m = len(self.prefix)
        if self.kind == "outgoing":
            if t < 1:
                raise ValidationError(f"outgoing lead has no site at t={t}")
            if t <= m:
                return self.prefix[t - 1]
            return add(self.prefix[-1], tuple(c * (t - m) for c in self.ray_dir))
        if t > -1:
            raise ValidationError(f"incoming lead has no site at t={t}")
        if t >= -m:
            return self.prefix[m + t]
        return add(self.prefix[0], tuple(c * (-t - m) for c in self.ray_dir))

    def tangent(self, t: int) -> Site:
        if self.kind == "outgoing":
            if t == 1:
                t = 2
            return sub(self.site(t), self.site(t - 1))
        return sub(self.site(t), self.site(t - 1))

    def head_pair(self) -> tuple[Site, Site]:
        """(site, tangent) at the finite end of the lead."""
        if self.kind == "outgoing":
            return self.site(1), self.tangent(1)
        return self.site(-1), self.tangent(-1)

    def window_range(self) -> range:
        m = len(self.prefix)
        if self.kind == "outgoing":
            return range(1, m + 1)
        return range(-m, 0)

    def pairs_window(self) -> list[tuple[Site, Site]]:
        return [(self.site(t), self.tangent(t)) for t in self.window_range()]

    def ray_pair_family(self) -> tuple[Site, Site, Site]:
        """(first site, step, constant tangent) of the infinite tail."""
        if self.kind == "outgoing":
            return self._ray_base(), self.ray_dir, self.ray_dir
        return self._ray_base(), self.ray_dir, tuple(-c for c in self.ray_dir)

    def constraint_items(self):
        """(site, in_slot, out_slot) for the explicit part of the conduction
        condition; the constant ray constraint is reported separately."""
        out = []
        if self.kind == "outgoing":
            ts = range(1, len(self.prefix) + 1)
        else:
            ts = range(-len(self.prefix) - 1, -1)  # t <= -2, plus first ray junction
        for t in ts:
            out.append(
                (
                    self.site(t),
                    index_of_vector(self.tangent(t)),
                    index_of_vector(self.tangent(t + 1)),
                )
            )
        return out

    def ray_constraint(self) -> tuple[Site, Site, int]:
        """(base, step, slot): on the ray tail the coin must fix ``slot``."""
        base, step, tangent = self.ray_pair_family()
        slot = index_of_vector(tangent)
        return base, step, slot


@dataclass(frozen=True)
class BoundarySpec:
    """The hyperplane x_last = 0 with normal direction +-e_last."""

    d_total: int

    @property
    def axis(self) -> int:
        return self.d_total - 1

    def normal_slots(self) -> tuple[int, int]:
        up = direction_index(self.d_total, 1)
        down = direction_index(self.d_total, -1)
        return up, down

    def tangent_slots(self) -> tuple[int, ...]:
        up, down = self.normal_slots()
        return tuple(k for k in range(2 * self.d_total) if k not in (up, down))

    def contains(self, site: Site) -> bool:
        return site[self.axis] == 0


@dataclass
class NetworkSpec:
    incoming: tuple = ()
    outgoing: tuple = ()
    boundary: BoundarySpec | None = None

    def __post_init__(self):
        self.incoming = tuple(self.incoming)
        self.outgoing = tuple(self.outgoing)

    def leads(self):
        return list(self.incoming) + list(self.outgoing)


def _ray_hits_pair(lead: LeadSpec, site: Site, tangent: Site) -> bool:
    base, step, ray_tangent = lead.ray_pair_family()
    if tangent != ray_tangent:
        return False
    return Ray(base, step).locate(site) is not None


def validate_network(network: NetworkSpec) -> None:
    """Reject tangential crossings and off-boundary leads."""
    leads = network.leads()
    if network.boundary is not None:
        b = network.boundary
        for lead in leads:
            for site, tangent in lead.pairs_window():
                if not b.contains(site):
                    raise ValidationError(f"lead site {site} is off the boundary plane")
                if tangent[b.axis] != 0:
                    raise ValidationError(f"lead tangent {tangent} leaves the boundary plane")
            base, step, tangent = lead.ray_pair_family()
            if step[b.axis] != 0 or not b.contains(base):
                raise ValidationError("lead ray leaves the boundary plane")
    seen: dict[tuple[Site, Site], int] = {}
    for i, lead in enumerate(leads):
        pairs = lead.pairs_window()
        for site, tangent in pairs:
            key = (site, tangent)
            if key in seen and seen[key] != i:
                raise ValidationError(
                    f"tangential crossing at site {site} with tangent {tangent}"
                )
            seen[key] = i
    # explicit pairs against other leads' rays
    for i, lead in enumerate(leads):
        for j, other in enumerate(leads):
            if i == j:
                continue
            for site, tangent in lead.pairs_window():
                if _ray_hits_pair(other, site, tangent):
                    raise ValidationError(
                        f"tangential crossing at site {site} with tangent {tangent}"
                    )
    # ray against ray: same constant tangent on one overlapping line
    for i, lead in enumerate(leads):
        base_i, step_i, tan_i = lead.ray_pair_family()
        for j in range(i + 1, len(leads)):
            base_j, step_j, tan_j = leads[j].ray_pair_family()
            if tan_i != tan_j:
                continue
            offset = sub(base_j, base_i)
            m = None
            for o, s in zip(offset, step_i):
                if s != 0:
                    if o % s != 0 or (m is not None and o // s != m):
                        m = None
                        break
                    m = o // s
                elif o != 0:
                    m = None
                    break
            if m is None:
                continue  # rays on different lines
            if step_i == step_j or m >= 0:
                raise ValidationError(
                    f"lead rays overlap tangentially along tangent {tan_i}"
                )


def network_projection(network: NetworkSpec, include_bulk: bool = True) -> AdaptedProjection:
    """Total quantum projection of the network: one open tangent slot per
    lead site, plus the half-space bulk symbol when a boundary is present."""
    validate_network(network)
    leads = network.leads()
    if not leads and network.boundary is None:
        raise ValidationError("empty network")
    d = len(leads[0].prefix[0]) if leads else network.boundary.d_total
    window: dict[Site, set] = {}
    rays = []
    for lead in leads:
        for site, tangent in lead.pairs_window():
            window.setdefault(site, set()).add(index_of_vector(tangent))
        base, step, slot = lead.ray_constraint()
        rays.append((Ray(base, step), [{slot}]))
    planes = []
    halfspaces = []
    if network.boundary is not None and include_bulk:
        b = network.boundary
        up, down = b.normal_slots()
        planes.append((Plane(b.axis, 0), {down}))
        halfspaces.append((HalfSpace(b.axis, 1, 1), set(range(2 * d))))
    return AdaptedProjection.from_layers(
        d,
        window={k: frozenset(v) for k, v in window.items()},
        rays=rays,
        planes=planes,
        halfspaces=halfspaces,
    )


# ---------------------------------------------------------------------------
# coin synthesis


def _complete_unitary(n: int, pairs: dict[int, int]) -> np.ndarray:
    """Partial slot permutation completed deterministically.

    Prescribed transitions get amplitude +1; remaining input slots map to the
    remaining output slots in increasing order (Gram-Schmidt over the slot
    basis collapses to exactly this permutation).
    """
    outs = list(pairs.values())
    if len(set(outs)) != len(outs):
        raise ValidationError(f"conflicting coin constraints: outputs {outs}")
    free_in = [k for k in range(n) if k not in pairs]
    free_out = [k for k in range(n) if k not in set(outs)]
    m = np.zeros((n, n), dtype=complex)
    for i, o in pairs.items():
        m[o, i] = 1.0
    for i, o in zip(free_in, free_out):
        m[o, i] = 1.0
    return m


def _ray_meetings(base_i: Site, step_i: Site, base_j: Site, step_j: Site):
    """How two constraint rays meet: nothing, finitely many shared sites, or
    a shared infinite tail (same direction, same line)."""
    if step_i == step_j or step_i == tuple(-c for c in step_j):
        offset = sub(base_j, base_i)
        m = None
        for o, s in zip(offset, step_i):
            if s != 0:
                if o % s != 0:
                    return "none", None
                m = o // s
            elif o != 0:
                return "none", None
        if step_i == step_j:
            start = base_j if m >= 0 else base_i
            return "tail", (start, step_i)
        if m < 0:
            return "none", None
        return "segment", [add(base_i, tuple(c * k for c in step_i)) for k in range(m + 1)]
    # perpendicular rays meet in at most one site
    k = sum((bj - bi) * s for bi, bj, s in zip(base_i, base_j, step_i))
    kp = sum((bi - bj) * s for bi, bj, s in zip(base_i, base_j, step_j))
    if k >= 0 and kp >= 0:
        site = add(base_i, tuple(c * k for c in step_i))
        if site == add(base_j, tuple(c * kp for c in step_j)):
            return "segment", [site]
    return "none", None


def synthesize_lead_coin(
    network: NetworkSpec,
    background: MatrixField,
    tol: Tolerances = DEFAULT,
) -> MatrixField:
    """Coin equal to the background off the leads, conducting along each lead
    and reflecting the normal on the boundary plane."""
    validate_network(network)
    leads = network.leads()
    d = background.d
    n = 2 * d
    boundary = network.boundary

    constraints: dict[Site, dict[int, int]] = {}

    def add_constraint(site, slot_in, slot_out):
        entry = constraints.setdefault(tuple(site), {})
        if slot_in in entry and entry[slot_in] != slot_out:
            raise ValidationError(
                f"conflicting coin constraints at {site}: slot {slot_in} must map to "
                f"both {entry[slot_in]} and {slot_out}"
            )
        entry[slot_in] = slot_out

    for lead in leads:
        for site, slot_in, slot_out in lead.constraint_items():
            add_constraint(site, slot_in, slot_out)

    # wherever two lead rays share sites, or a ray meets an explicit
    # constraint site, the joint constraint must live in the window or in a
    # merged ray layer so that layer precedence cannot shadow it
    ray_rules = [lead.ray_constraint() for lead in leads]
    merged_tails: list[tuple[Ray, dict[int, int]]] = []
    for i, (base_i, step_i, slot_i) in enumerate(ray_rules):
        for j in range(i + 1, len(ray_rules)):
            base_j, step_j, slot_j = ray_rules[j]
            how, where = _ray_meetings(base_i, step_i, base_j, step_j)
            if how == "segment":
                for site in where:
                    add_constraint(site, slot_i, slot_i)
                    add_constraint(site, slot_j, slot_j)
            elif how == "tail":
                start, step = where
                merged_tails.append((Ray(start, step), {slot_i: slot_i, slot_j: slot_j}))
    for base, step, slot in ray_rules:
        ray = Ray(base, step)
        for site in list(constraints):
            if ray.locate(site) is not None:
                add_constraint(site, slot, slot)

    ray_layers = []
    bg_lo, bg_hi = background.bounds()

    def reflect_pairs(pairs: dict[int, int]) -> dict[int, int]:
        if boundary is not None:
            up, down = boundary.normal_slots()
            pairs = dict(pairs)
            pairs[up] = down
            pairs[down] = up
        return pairs

    for ray, pairs in merged_tails:
        ray_layers.append((ray, [_complete_unitary(n, reflect_pairs(pairs))]))
    for lead in leads:
        base, step, slot = lead.ray_constraint()
        pairs = reflect_pairs({slot: slot})
        ray_layers.append((Ray(base, step), [_complete_unitary(n, pairs)]))
        # explicit entries where the ray passes through the background window,
        # so window precedence cannot shadow the conduction constraint
        k = 0
        while True:
            site = add(base, tuple(c * k for c in step))
            if any(x < l - 2 or x > h + 2 for x, l, h in zip(site, bg_lo, bg_hi)):
                break
            add_constraint(site, slot, slot)
            k += 1

    if boundary is not None:
        up, down = boundary.normal_slots()
        for site in list(constraints):
            if boundary.contains(site):
                add_constraint(site, up, down)
                add_constraint(site, down, up)

    window = {}
    for site, pairs in constraints.items():
        window[site] = _complete_unitary(n, pairs)
    for site, m in background.map.window.items():
        if site not in window:
            window[site] = np.asarray(m, dtype=complex)

    sitemap = SiteMap(
        d,
        window=window,
        rays=ray_layers + list(background.map.rays),
        planes=list(background.map.planes),
        halfspaces=list(background.map.halfspaces),
        background=background.map.background,
    )
    coin = MatrixField(d, n, sitemap, tag="unitary")
    verify_lead_condition(coin, network, tol)
    return coin


def verify_lead_condition(coin: MatrixField, network: NetworkSpec, tol: Tolerances = DEFAULT) -> None:
    """Re-check perfect conduction on every lead and reflection on the
    boundary, including one period of every ray template."""
    for lead in network.leads():
        checks = list(lead.constraint_items())
        base, step, slot = lead.ray_constraint()
        for k in range(0, 3):
            site = add(base, tuple(c * k for c in step))
            checks.append((site, slot, slot))
        for site, slot_in, slot_out in checks:
            amp = coin.value(site)[slot_out, slot_in]
            if abs(abs(amp) - 1.0) > tol.unitary:
                raise ValidationError(
                    f"conduction violated at site {site}: |amplitude| = {abs(amp):.3e} "
                    f"for slots {slot_in}->{slot_out}"
                )
    if network.boundary is not None:
        up, down = network.boundary.normal_slots()
        probes = set()
        for lead in network.leads():
            probes.update(site for site, _ in lead.pairs_window())
        axis = network.boundary.axis
        probes.add(tuple(0 if j != axis else 0 for j in range(network.boundary.d_total)))
        for site in probes:
            c = coin.value(site)
            if abs(abs(c[down, up]) - 1.0) > tol.unitary or abs(abs(c[up, down]) - 1.0) > tol.unitary:
                raise ValidationError(f"boundary reflection violated at {site}")


def lead_flux_index(network: NetworkSpec, coin: MatrixField, tol: Tolerances = DEFAULT):
    """Index of the total lead projection (plus bulk symbol if bounded)."""
    verify_lead_condition(coin, network, tol)
    proj = network_projection(network)
    report, flux = walk_index(coin, proj, tol)
    expected = len(network.outgoing) - len(network.incoming)
    if report.index != expected:
        raise ValidationError(
            f"lead network index {report.index} differs from "
            f"n_out - n_in = {expected}"
        )
    return report, flux


# ---------------------------------------------------------------------------
# wandering verification


@dataclass
class WanderingReport:
    ok: bool
    max_overlap: float
    worst_step: int | None
    transport_ok: bool | None = None
    transport_defect: float | None = None
    overlaps: list = field(default_factory=list)


def verify_wandering(
    unitary,
    seed: LatticeState,
    k_max: int,
    lead: LeadSpec | None = None,
    adjoint: bool = False,
    tol: Tolerances = DEFAULT,
) -> WanderingReport:
    """Check <seed, U^k seed> = 0 for k = 1..k_max, and when a lead is given,
    that the head state is transported along it up to a phase."""
    if k_max < 1:
        raise ValidationError("k_max must be >= 1")
    step = unitary.apply_adjoint if adjoint else unitary.apply
    current = seed
    worst = 0.0
    worst_k = None
    overlaps = []
    for k in range(1, k_max + 1):
        current = step(current)
        ov = abs(seed.inner(current))
        overlaps.append(ov)
        if ov > worst:
            worst, worst_k = ov, k
    ok = worst <= tol.wandering
    report = WanderingReport(ok, worst, worst_k, overlaps=overlaps)
    if lead is not None:
        n_int = seed.n_internal
        if lead.kind == "outgoing":
            head, tangent = lead.head_pair()
            state = LatticeState.basis(head, index_of_vector(tangent), n_int)
            evolve = unitary.apply
            target = lambda k: (lead.site(1 + k), lead.tangent(1 + k))
        else:
            head, tangent = lead.head_pair()
            state = LatticeState.basis(head, index_of_vector(tangent), n_int)
            evolve = unitary.apply_adjoint
            target = lambda k: (lead.site(-1 - k), lead.tangent(-1 - k))
        defect = 0.0
        for k in range(1, k_max + 1):
            state = evolve(state)
            site, tangent = target(k)
            ref = LatticeState.basis(site, index_of_vector(tangent), n_int)
            defect = max(defect, abs(abs(ref.inner(state)) - 1.0))
        report.transport_defect = defect
        report.transport_ok = defect <= tol.wandering
        report.ok = report.ok and report.transport_ok
    return report


# ---------------------------------------------------------------------------
# bulk boundaries


def boundary_projection_full(d_total: int) -> AdaptedProjection:
    """Half-space symbol that is homogeneous across the reflecting plane:
    everything open above, nothing below, all but the outward normal on it."""
    b = BoundarySpec(d_total)
    up, _ = b.normal_slots()
    on_plane = frozenset(k for k in range(2 * d_total) if k != up)
    return AdaptedProjection.from_layers(
        d_total,
        planes=[(Plane(b.axis, 0), on_plane)],
        halfspaces=[(HalfSpace(b.axis, 1, 1), frozenset(range(2 * d_total)))],
    )


def reflecting_coin(
    d_total: int,
    rng: np.random.Generator,
    box: int = 4,
    bulk_random: bool = True,
) -> MatrixField:
    """Coin that reflects the normal on the plane x_last = 0 and is otherwise
    arbitrary: random tangent blocks on the plane, random bulk coins inside a
    finite box, identity far away."""
    b = BoundarySpec(d_total)
    n = 2 * d_total
    up, down = b.normal_slots()
    tangents = b.tangent_slots()

    def reflecting(tangent_block: np.ndarray) -> np.ndarray:
        m = np.zeros((n, n), dtype=complex)
        m[down, up] = 1.0
        m[up, down] = 1.0
        for a, sa in enumerate(tangents):
            for c, sc in enumerate(tangents):
                m[sc, sa] = tangent_block[c, a]
        return m

    window = {}
    axes = [range(-box, box + 1)] * d_total
    import itertools as _it

    for site in _it.product(*axes):
        if site[b.axis] == 0:
            window[site] = reflecting(haar_unitary(rng, len(tangents)))
        elif bulk_random:
            window[site] = haar_unitary(rng, n)
    plane_matrix = reflecting(haar_unitary(rng, len(tangents)))
    sitemap = SiteMap(
        d_total,
        window=window,
        planes=[(Plane(b.axis, 0), plane_matrix)],
        background=np.eye(n, dtype=complex),
    )
    return MatrixField(d_total, n, sitemap, tag="unitary")


def bulk_boundary_flux(coin: MatrixField, tol: Tolerances = DEFAULT) -> FluxField:
    """Flux of the homogeneous half-space symbol under a reflecting coin;
    every block must vanish."""
    d_total = coin.d
    proj = boundary_projection_full(d_total)
    flux = build_walk_flux(coin, proj, tol)
    worst = 0.0
    for blk in flux.blocks.values():
        worst = max(worst, blk.norm())
    for blk in flux.shell.values():
        worst = max(worst, blk.norm())
    if worst > 1e-12:
        raise ValidationError(
            f"reflecting configuration has a nonzero flux block (norm {worst:g})"
        )
    return flux


def verify_confinement(
    walk: CoinedWalk,
    rng: np.random.Generator,
    steps: int = 30,
    box: int = 3,
    tol: Tolerances = DEFAULT,
) -> float:
    """Evolve a random state supported strictly above the plane and measure
    the worst leakage below it."""
    d_total = walk.d
    axis = d_total - 1
    import itertools as _it

    sites = [
        s
        for s in _it.product(*([range(-box, box + 1)] * (d_total - 1) + [range(1, box + 2)]))
    ]
    psi = random_state(rng, sites, walk.n_internal)
    worst = 0.0
    for _ in range(steps):
        psi = walk.apply(psi)
        leak = 0.0
        for site, vec in psi.items():
            if site[axis] < 0:
                leak += float(np.vdot(vec, vec).real)
        worst = max(worst, np.sqrt(leak))
    return worst


# ---------------------------------------------------------------------------
# randomized networks


def random_network(
    rng: np.random.Generator,
    n_incoming: int,
    n_outgoing: int,
    box: int = 10,
    prefix_range: tuple[int, int] = (2, 6),
    max_attempts: int = 200,
) -> NetworkSpec:
    """Sample admissible leads with no tangential crossings inside a box."""
    d = 2
    dirs = all_direction_vectors(d)

    def sample_lead(kind: str) -> LeadSpec:
        length = int(rng.integers(prefix_range[0], prefix_range[1] + 1))
        start = tuple(int(rng.integers(-box, box + 1)) for _ in range(d))
        sites = [start]
        for _ in range(length - 1):
            options = [add(sites[-1], v) for v in dirs]
            options = [s for s in options if s not in sites]
            if not options:
                break
            sites.append(options[int(rng.integers(len(options)))])
        chrono = sites if kind == "outgoing" else sites[::-1]
        # ray continues away from the finite end without re-entering the prefix
        far_end = chrono[-1] if kind == "outgoing" else chrono[0]
        ray_options = []
        for v in dirs:
            probe_ok = all(
                add(far_end, tuple(c * k for c in v)) not in chrono for k in range(1, length + 2)
            )
            if probe_ok:
                ray_options.append(v)
        if not ray_options:
            raise ValidationError("no ray direction available")
        ray = ray_options[int(rng.integers(len(ray_options)))]
        return LeadSpec(kind, tuple(chrono), ray)

    for _ in range(max_attempts):
        try:
            incoming = tuple(sample_lead("incoming") for _ in range(n_incoming))
            outgoing = tuple(sample_lead("outgoing") for _ in range(n_outgoing))
            network = NetworkSpec(incoming=incoming, outgoing=outgoing)
            validate_network(network)
            return network
        except ValidationError:
            continue
    raise ValidationError("could not sample an admissible network")


def perturb_coin_window(
    coin: MatrixField, rng: np.random.Generator, strength: float
) -> MatrixField:
    """Multiply every window coin by a small random unitary, leaving all tail
    layers untouched.  The result differs from the input by a summable
    (finite-window) perturbation of size ``strength``."""
    window = {}
    n = coin.n
    for site, m in coin.map.window.items():
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a = (a - a.conj().T) / 2.0
        a *= strength / max(np.linalg.norm(a, 2), 1e-12)
        evals, evecs = np.linalg.eigh(1j * a)
        rot = (evecs * np.exp(-1j * evals)) @ evecs.conj().T
        window[site] = np.asarray(m, dtype=complex) @ rot
    sitemap = SiteMap(
        coin.d,
        window=window,
        rays=coin.map.rays,
        planes=coin.map.planes,
        halfspaces=coin.map.halfspaces,
        background=coin.map.background,
    )
    return MatrixField(coin.d, n, sitemap, tag=coin.tag)


def random_background(
    rng: np.random.Generator, d: int, box: int = 6, identity_tail: bool = True
) -> MatrixField:
    """Random unitary coins inside a box, identity outside."""
    import itertools as _it

    n = 2 * d
    window = {
        site: haar_unitary(rng, n)
        for site in _it.product(*([range(-box, box + 1)] * d))
    }
    sitemap = SiteMap(d, window=window, background=np.eye(n, dtype=complex))
    return MatrixField(d, n, sitemap, tag="unitary")
