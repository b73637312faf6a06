"""Finite frequency set that truncates the coupled-mode problem."""

from __future__ import annotations

from dataclasses import dataclass, field

SAME_FREQ_TOL = 1.0  # Hz
PUMP_EXCLUSION = 1e6  # Hz


@dataclass(frozen=True)
class ModeSet:
    """Ordered mode frequencies (index 0 is the signal) and their couplings.

    ``sq_partners[i]`` maps an ordered pump pair ``(p, q)`` (0-based) to the
    index ``j`` with ``ω_j = Ω_p + Ω_q - ω_i``; ``fc_partners[i]`` maps
    ``(p, q)`` with ``p != q`` to ``j`` with ``ω_j = ω_i + Ω_p - Ω_q``. Pairs
    whose partner is not in the set are absent.
    """

    freqs: tuple
    pumps: tuple
    depth: int
    levels: tuple = ()
    sq_partners: tuple = field(default=(), repr=False)
    fc_partners: tuple = field(default=(), repr=False)

    @property
    def n(self) -> int:
        return len(self.freqs)

    def index_of(self, f):
        for i, g in enumerate(self.freqs):
            if abs(g - f) <= SAME_FREQ_TOL:
                return i
        return None

    def to_dict(self):
        return {
            "freqs_ghz": [f / 1e9 for f in self.freqs],
            "pumps_ghz": [f / 1e9 for f in self.pumps],
            "depth": self.depth,
            "levels_ghz": [[f / 1e9 for f in lvl] for lvl in self.levels],
            "sq_partners": [{f"{p + 1}{q + 1}": j for (p, q), j in d.items()} for d in self.sq_partners],
            "fc_partners": [{f"{p + 1}{q + 1}": j for (p, q), j in d.items()} for d in self.fc_partners],
        }


def _contains(freqs, f):
    return any(abs(g - f) <= SAME_FREQ_TOL for g in freqs)


def _allowed(f, pumps):
    return f > 0 and all(abs(f - p) >= PUMP_EXCLUSION for p in pumps)


def _generate(f, pumps):
    o1, o2 = pumps
    return [2 * o1 - f, o1 + o2 - f, 2 * o2 - f, f - (o2 - o1), f + (o2 - o1)]


def build_modes(omega0, pumps, depth=0) -> ModeSet:
    """Mode ladder around signal ``omega0`` (Hz) for pumps ``(Ω1, Ω2)``.

    Level 0 is ``{ω0, Ω1 + Ω2 - ω0}``; each further level adds the sum and
    difference partners of the previous one, dropping non-positive
    frequencies, frequencies within 1 MHz of a pump and repeats.
    """
    o1, o2 = (float(p) for p in pumps)
    if not o1 < o2:
        raise ValueError("pump frequencies must satisfy Ω1 < Ω2")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if not _allowed(omega0, (o1, o2)):
        raise ValueError("signal frequency must be positive and away from the pumps")

    seen = [float(omega0)]
    level = [float(omega0)]
    idler = o1 + o2 - omega0
    if _allowed(idler, (o1, o2)) and not _contains(seen, idler):
        seen.append(idler)
        level.append(idler)
    levels = [tuple(level)]
    for _ in range(depth):
        nxt = []
        for f in level:
            for g in _generate(f, (o1, o2)):
                if _allowed(g, (o1, o2)) and not _contains(seen, g):
                    seen.append(g)
                    nxt.append(g)
        levels.append(tuple(nxt))
        level = nxt

    freqs = tuple(seen)
    sq, fc = [], []
    pumps_t = (o1, o2)
    for f in freqs:
        sq_i, fc_i = {}, {}
        for p in (0, 1):
            for q in (0, 1):
                j = _index(freqs, pumps_t[p] + pumps_t[q] - f)
                if j is not None:
                    sq_i[(p, q)] = j
                if p != q:
                    j = _index(freqs, f + pumps_t[p] - pumps_t[q])
                    if j is not None:
                        fc_i[(p, q)] = j
        sq.append(sq_i)
        fc.append(fc_i)
    return ModeSet(freqs, pumps_t, depth, tuple(levels), tuple(sq), tuple(fc))


def _index(freqs, f):
    for i, g in enumerate(freqs):
        if abs(g - f) <= SAME_FREQ_TOL:
            return i
    return None
