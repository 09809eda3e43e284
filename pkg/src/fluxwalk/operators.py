"""Strictly local unitaries applied lazily and exactly to finite states.

All operators couple nearest neighbours only, so evolving a finitely
supported state is exact: the support grows by at most one site per step and
no truncation ever happens.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, ValidationError
from .fields import MatrixField
from .lattice import LatticeState, Site, all_direction_vectors, add, sub


class LocalUnitary:
    """Base class: a unitary with band width one in lattice distance."""

    kind = "abstract"
    n_internal: int

    def apply(self, psi: LatticeState) -> LatticeState:
        raise NotImplementedError

    def apply_adjoint(self, psi: LatticeState) -> LatticeState:
        raise NotImplementedError

    def _check(self, psi: LatticeState) -> None:
        if psi.n_internal != self.n_internal:
            raise DimensionMismatchError(
                f"state has internal dimension {psi.n_internal}, operator needs {self.n_internal}"
            )


class CoinedWalk(LocalUnitary):
    """One step of a coined walk: site-dependent coin, then conditional shift.

    Acting on a state, the coin reshuffles the internal slots at each site and
    the slot-k component then moves one site along direction k.
    """

    kind = "coined-walk"

    def __init__(self, coin: MatrixField):
        if coin.n != 2 * coin.d:
            raise ValidationError(
                f"coin has block size {coin.n}, expected {2 * coin.d} for d={coin.d}"
            )
        self.coin = coin
        self.d = coin.d
        self.n_internal = coin.n
        self._dirs = all_direction_vectors(coin.d)

    def apply(self, psi: LatticeState) -> LatticeState:
        self._check(psi)
        out: dict[Site, np.ndarray] = {}
        for site, vec in psi.items():
            w = self.coin.value(site) @ vec
            for k, amp in enumerate(w):
                if amp == 0:
                    continue
                target = add(site, self._dirs[k])
                buf = out.get(target)
                if buf is None:
                    buf = np.zeros(self.n_internal, dtype=complex)
                    out[target] = buf
                buf[k] += amp
        return LatticeState(self.n_internal, out, _take=True)

    def apply_adjoint(self, psi: LatticeState) -> LatticeState:
        self._check(psi)
        gathered: dict[Site, np.ndarray] = {}
        for site, vec in psi.items():
            for k, amp in enumerate(vec):
                if amp == 0:
                    continue
                source = sub(site, self._dirs[k])
                buf = gathered.get(source)
                if buf is None:
                    buf = np.zeros(self.n_internal, dtype=complex)
                    gathered[source] = buf
                buf[k] += amp
        out = {s: self.coin.value(s).conj().T @ v for s, v in gathered.items()}
        return LatticeState(self.n_internal, out, _take=True)


def identity_coin(d: int) -> MatrixField:
    return MatrixField.constant(d, np.eye(2 * d, dtype=complex), tag="unitary")


def conditional_shift(d: int) -> CoinedWalk:
    """The bare conditional shift (identity coin)."""
    return CoinedWalk(identity_coin(d))


class BandUnitary(LocalUnitary):
    """Explicit band-width-1 operator given by its nonzero couplings.

    ``entries`` maps (target_site, source_site) to an internal block; sites
    not mentioned as a source act as the identity.  Meant for small test
    constructions; unitarity is the caller's responsibility and can be probed
    with :func:`isometry_defect`.
    """

    kind = "explicit-band"

    def __init__(self, n_internal: int, entries: dict):
        self.n_internal = n_internal
        self._by_source: dict[Site, list[tuple[Site, np.ndarray]]] = {}
        self._by_target: dict[Site, list[tuple[Site, np.ndarray]]] = {}
        for (target, source), block in entries.items():
            target, source = tuple(target), tuple(source)
            if max(abs(a - b) for a, b in zip(target, source)) > 1:
                raise ValidationError(f"coupling {source}->{target} exceeds band width 1")
            m = np.asarray(block, dtype=complex)
            self._by_source.setdefault(source, []).append((target, m))
            self._by_target.setdefault(target, []).append((source, m))

    def apply(self, psi: LatticeState) -> LatticeState:
        self._check(psi)
        out: dict[Site, np.ndarray] = {}
        for site, vec in psi.items():
            couplings = self._by_source.get(site)
            if couplings is None:
                out.setdefault(site, np.zeros(self.n_internal, dtype=complex))
                out[site] += vec
                continue
            for target, block in couplings:
                out.setdefault(target, np.zeros(self.n_internal, dtype=complex))
                out[target] += block @ vec
        return LatticeState(self.n_internal, out, _take=True)

    def apply_adjoint(self, psi: LatticeState) -> LatticeState:
        self._check(psi)
        out: dict[Site, np.ndarray] = {}
        for site, vec in psi.items():
            couplings = self._by_target.get(site)
            if couplings is None:
                out.setdefault(site, np.zeros(self.n_internal, dtype=complex))
                out[site] += vec
                continue
            for source, block in couplings:
                out.setdefault(source, np.zeros(self.n_internal, dtype=complex))
                out[source] += block.conj().T @ vec
        return LatticeState(self.n_internal, out, _take=True)


def matrix_on_window(u: LocalUnitary, sites) -> np.ndarray:
    """Compression of ``u`` to a finite site set as a dense matrix.

    Basis order is lexicographic in the site tuple, then internal slot.  The
    compression of a unitary is generally not unitary: couplings leaving the
    window are simply dropped.
    """
    sites = sorted(tuple(s) for s in sites)
    if not sites:
        raise ValidationError("window must be nonempty")
    n = u.n_internal
    dim = len(sites) * n
    index = {site: i for i, site in enumerate(sites)}
    m = np.zeros((dim, dim), dtype=complex)
    for j_site, site in enumerate(sites):
        for slot in range(n):
            image = u.apply(LatticeState.basis(site, slot, n))
            for target, vec in image.items():
                i_site = index.get(target)
                if i_site is not None:
                    m[i_site * n : (i_site + 1) * n, j_site * n + slot] = vec
    return m


def isometry_defect(u: LocalUnitary, psi: LatticeState) -> float:
    return abs(u.apply(psi).norm() - psi.norm())
