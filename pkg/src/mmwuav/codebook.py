"""Hierarchical constant-amplitude beamforming codebooks for half-wavelength ULAs.

Two generators build the same tree shape (layer k holds M^k codewords, the
codeword at 0-based (k, n) covering the angle slice
[-1 + 2n/M^k, -1 + 2(n+1)/M^k)) but widen beams differently:

* DEACT keeps only the first M^k antennas active and steers them at the
  slice center; fewer active antennas means a wider beam but less radiated
  power under the per-antenna amplitude constraint.
* BMW-SS keeps every antenna active and widens by steering contiguous
  sub-arrays at adjacent sub-directions inside the slice, with the
  inter-sub-array phases tuned to flatten the composite pattern.

All weights obey the constant-amplitude constraint: active entries have
magnitude exactly 1/sqrt(N), inactive entries are exactly 0.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Codeword",
    "HierCodebook",
    "BeamPattern",
    "LayerCoverage",
    "CoverageReport",
    "slice_bounds",
    "slice_center",
    "build_deact",
    "build_bmw_ss",
    "beam_pattern",
    "coverage_union_check",
    "codebook_to_json",
    "codebook_from_json",
    "write_pattern_csv",
]


@dataclass(frozen=True)
class Codeword:
    """One beamforming weight vector in the tree, with its layer/index position."""

    weights: np.ndarray
    active_mask: np.ndarray
    layer: int
    index_in_layer: int

    @property
    def n_antennas(self) -> int:
        return self.weights.shape[0]

    @property
    def n_active(self) -> int:
        return int(self.active_mask.sum())


@dataclass(frozen=True)
class HierCodebook:
    """Full hierarchy of codewords, layers 0..S with M^k codewords in layer k."""

    n_antennas: int
    branching: int
    layers: tuple[tuple[Codeword, ...], ...]

    @property
    def depth(self) -> int:
        """Index S of the bottom (pencil-beam) layer."""
        return len(self.layers) - 1

    def codeword(self, layer: int, index: int) -> Codeword:
        return self.layers[layer][index]

    def children(self, layer: int, index: int) -> tuple[Codeword, ...]:
        m = self.branching
        return tuple(self.layers[layer + 1][index * m + j] for j in range(m))


@dataclass(frozen=True)
class BeamPattern:
    """Beam gain |sqrt(N) a(N, omega)^H w|^2 in dB over a uniform angle grid."""

    angle_grid: np.ndarray
    gain_db: np.ndarray


def _tree_depth(n_antennas: int, branching: int) -> int:
    """Depth S with branching**S == n_antennas, or ValueError."""
    if n_antennas < 1:
        raise ValueError("n_antennas must be >= 1")
    if branching < 2:
        raise ValueError("branching must be >= 2")
    s, x = 0, n_antennas
    while x % branching == 0:
        x //= branching
        s += 1
    if x != 1:
        raise ValueError(
            f"n_antennas {n_antennas} is not a power of branching {branching}"
        )
    return s


def slice_bounds(layer: int, index: int, branching: int) -> tuple[float, float]:
    """Half-open coverage slice [lo, hi) of codeword (layer, index)."""
    width = 2.0 / branching**layer
    lo = -1.0 + index * width
    return lo, lo + width


def slice_center(layer: int, index: int, branching: int) -> float:
    lo, hi = slice_bounds(layer, index, branching)
    return 0.5 * (lo + hi)


def _steered_weights(n_antennas: int, omega: float, n_active: int) -> np.ndarray:
    """Weights of amplitude 1/sqrt(N) steering the first n_active antennas at omega."""
    w = np.zeros(n_antennas, dtype=complex)
    idx = np.arange(n_active)
    w[:n_active] = np.exp(1j * np.pi * idx * omega) / math.sqrt(n_antennas)
    return w


def _response(weights: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """sqrt(N) a(N, omega)^H w for each omega."""
    n = np.arange(weights.shape[0])
    return np.exp(-1j * np.pi * np.outer(omega, n)) @ weights


def _gain(weights: np.ndarray, omega: np.ndarray) -> np.ndarray:
    return np.abs(_response(weights, omega)) ** 2


@functools.lru_cache(maxsize=16)
def build_deact(n_antennas: int, branching: int) -> HierCodebook:
    """Codebook hierarchy by antenna deactivation.

    Codeword (k, n) activates the first M^k antennas, steered at its slice
    center; its squared norm is M^k / N.
    """
    s_depth = _tree_depth(n_antennas, branching)
    layers = []
    for k in range(s_depth + 1):
        words = []
        n_active = branching**k
        for n in range(branching**k):
            center = slice_center(k, n, branching)
            w = _steered_weights(n_antennas, center, n_active)
            mask = np.zeros(n_antennas, dtype=bool)
            mask[:n_active] = True
            words.append(
                Codeword(weights=w, active_mask=mask, layer=k, index_in_layer=n)
            )
        layers.append(tuple(words))
    return HierCodebook(
        n_antennas=n_antennas, branching=branching, layers=tuple(layers)
    )


def _pattern_scores(gain: np.ndarray, cells: int, n_slices: int) -> tuple[float, float]:
    """(min-to-peak ratio in dB, sibling margin in dB) of a slice-0 pattern.

    ``gain`` lives on a grid of n_slices*cells points tiling [-1, 1); slice 0
    occupies the first ``cells`` points and sibling codewords are exact
    circular shifts by multiples of ``cells``. The ratio compares the worst
    in-slice gain (slice edge included) to the global peak. The margin is the
    worst in-slice excess over the strongest sibling, measured off the slice
    edges where symmetric patterns tie by construction.
    """
    own = gain[:cells]
    ratio_db = 10.0 * math.log10(max(float(own.min()), 1e-300) / float(gain.max()))
    if n_slices > 1:
        sib = np.max(
            [np.roll(gain, t * cells)[:cells] for t in range(1, n_slices)], axis=0
        )
        floor = 1e-300
        diff_db = 10.0 * np.log10(np.maximum(own, floor)) - 10.0 * np.log10(
            np.maximum(sib, floor)
        )
        margin = float(diff_db[1:].min())
    else:
        margin = math.inf
    return ratio_db, margin


def _ascend_phases(
    resp: np.ndarray, phi0: np.ndarray, cells: int, max_rounds: int = 10
) -> np.ndarray:
    """Coordinate ascent on per-sub-array phases maximizing min-in-slice/peak.

    ``resp`` holds the fixed complex response of each sub-array on the
    evaluation grid; the composite field is resp @ exp(1j*phi). The peak is
    tracked on a decimated copy of the grid for speed. Deterministic.
    """
    n_sub = resp.shape[1]
    offsets = 2.0 * np.pi * np.arange(64) / 64.0
    rot = np.exp(1j * offsets)
    dec = 4 if resp.shape[0] >= 4 * cells else 1
    resp_pk = resp[::dec]
    phi = phi0.copy()
    field_in = resp[:cells] @ np.exp(1j * phi)
    field_pk = resp_pk @ np.exp(1j * phi)

    def ratio(gain_in: np.ndarray, gain_pk: np.ndarray) -> np.ndarray:
        return gain_in.min(axis=0) / np.maximum(gain_pk.max(axis=0), gain_in.max(axis=0))

    best = float(
        ratio(np.abs(field_in[:, None]) ** 2, np.abs(field_pk[:, None]) ** 2)[0]
    )
    for _ in range(max_rounds):
        improved = False
        for s in range(n_sub):
            cur = np.exp(1j * phi[s])
            part_in = field_in - resp[:cells, s] * cur
            part_pk = field_pk - resp_pk[:, s] * cur
            cand_in = np.abs(part_in[:, None] + np.outer(resp[:cells, s], rot)) ** 2
            cand_pk = np.abs(part_pk[:, None] + np.outer(resp_pk[:, s], rot)) ** 2
            scores = ratio(cand_in, cand_pk)
            pick = int(np.argmax(scores))
            if scores[pick] > best * (1.0 + 1e-9):
                phi[s] = offsets[pick]
                rot_new = np.exp(1j * phi[s])
                field_in = part_in + resp[:cells, s] * rot_new
                field_pk = part_pk + resp_pk[:, s] * rot_new
                best = float(scores[pick])
                improved = True
        if not improved:
            break
    return phi


def _flat_target_phases(
    basis: np.ndarray, cells: int, n_slices: int, n_antennas: int, iters: int = 80
) -> np.ndarray:
    """Constant-modulus weights approximating a flat-top slice-0 beam.

    Masked alternating projection between the constant-amplitude weight set
    and responses matching a flat in-slice target, with a one-pencil-width
    don't-care band past each slice edge. Used as a warm start for the
    single-antenna sub-array (free phase) search.
    """
    g_full = basis.shape[0]
    target = np.zeros(g_full)
    target[:cells] = math.sqrt(n_slices)
    care = np.ones(g_full, dtype=bool)
    if n_slices > 1:
        band = max(1, (g_full // n_slices) // n_antennas)
        care[cells : cells + band] = False
        care[-band:] = False
    idx = np.arange(n_antennas)
    w = np.exp(1j * np.pi * idx * idx / n_antennas) / math.sqrt(n_antennas)
    for _ in range(iters):
        r = basis @ w
        u = np.where(care, target * np.exp(1j * np.angle(r)), r)
        w = np.exp(1j * np.angle(basis.conj().T @ u)) / math.sqrt(n_antennas)
    return w


def _bmw_base_weights(
    n_antennas: int, branching: int, layer: int
) -> tuple[np.ndarray, np.ndarray]:
    """Phase-optimized all-active prototypes (even and odd slice) for a layer.

    Candidate constructions, each refined by a deterministic coordinate
    ascent over the inter-sub-array phases:

    * widening factor 1: the plain steering vector (pencil beam);
    * widening factor 2: two half-arrays steered at the two sub-slice
      centers (a same-center pair always has an in-slice null), with odd
      slices taking the mirror image;
    * otherwise: N/M^k sub-arrays of M^k antennas, all steered at the slice
      center, with chirped inter-sub-array phases sweeping the super-array
      factor across the slice; at layer 0 the sub-arrays degenerate to
      single antennas and a flat-target alternating-projection warm start
      joins the candidate set; even widening powers add an exact-tiling
      fan-out alternative.

    The best candidate by (targets met, min-to-peak ratio, sibling margin)
    wins, where the targets are a ratio above -9 dB and a positive margin.
    """
    m = branching
    widen = n_antennas // m**layer
    if widen == 1:
        w = _steered_weights(n_antennas, slice_center(layer, 0, m), n_antennas)
        return w, w
    n_slices = m**layer
    lo, hi = slice_bounds(layer, 0, m)
    width = hi - lo
    center0 = 0.5 * (lo + hi)
    idx = np.arange(n_antennas)
    cells = max(48, max(16 * n_antennas, 2048) // n_slices)
    g_full = cells * n_slices
    grid = -1.0 + 2.0 * np.arange(g_full) / g_full
    basis = np.exp(-1j * np.pi * np.outer(grid, idx))

    if widen == 2:
        return _bmw_pair_weights(
            n_antennas, basis, cells, n_slices, center0, width, idx
        )

    candidates: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    s_count = widen
    n_s = n_antennas // s_count
    sub_of = idx // n_s
    base = np.exp(1j * np.pi * idx * center0) / math.sqrt(n_antennas)
    s_arr = np.arange(s_count)
    for u in (1, 2, 3, 5, 7, 9, 11):
        if u >= s_count:
            break
        candidates.append((base, np.pi * u * s_arr * s_arr / s_count, sub_of))
    if n_s == 1:
        w_ap = _flat_target_phases(basis, cells, n_slices, n_antennas)
        phi_ap = np.angle(w_ap * base.conj() * n_antennas)
        candidates.append((base, phi_ap, sub_of))
    j = _tree_depth(widen, m)
    if j % 2 == 0:
        # Exact-tiling fan-out alternative: sqrt(widen) sub-arrays steered at
        # adjacent sub-slice centers, each sub-beam matching its sub-slice.
        s_fan = m ** (j // 2)
        n_fan = n_antennas // s_fan
        fan_of = idx // n_fan
        sub_width = width / s_fan
        centers = center0 + (fan_of + 0.5 - s_fan / 2.0) * sub_width
        base_fan = np.exp(1j * np.pi * idx * centers) / math.sqrt(n_antennas)
        for beta in (0.0, np.pi / 2, np.pi, 3 * np.pi / 2):
            candidates.append((base_fan, beta * np.arange(s_fan), fan_of))

    best_key, best_weights = None, None
    for base, phi0, sub_of in candidates:
        s_count = int(sub_of[-1]) + 1
        resp = np.zeros((g_full, s_count), dtype=complex)
        for s in range(s_count):
            cols = sub_of == s
            resp[:, s] = basis[:, cols] @ base[cols]
        phi = _ascend_phases(resp, np.asarray(phi0, dtype=float), cells)
        gain = np.abs(resp @ np.exp(1j * phi)) ** 2
        ratio_db, margin = _pattern_scores(gain, cells, n_slices)
        ok = ratio_db >= -9.0 and (margin > 1e-3 or n_slices == 1)
        key = (ok, round(ratio_db, 2), margin)
        if best_key is None or key > best_key:
            best_key = key
            best_weights = base * np.exp(1j * phi[sub_of])
    return best_weights, best_weights


def _bmw_pair_weights(
    n_antennas: int,
    basis: np.ndarray,
    cells: int,
    n_slices: int,
    center0: float,
    width: float,
    idx: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Widening-factor-2 prototypes from two unequal same-center sub-arrays.

    Equal halves at the slice center always null inside the slice (their
    relative phase sweeps a full turn across it), so the array splits
    unevenly (around a quarter/three-quarter split); the narrow sub-array is
    intrinsically wide and the relative phase sweeps only half a turn, which
    a dense scan places where the amplitudes are most unbalanced. Sub-arrays
    steered at fanned centers join as fallback candidates. The scan requires
    the codeword to strictly outgain every sibling inside its slice, then
    minimizes ripple; odd slices get the mirror-image prototype, pinning the
    crossovers of adjacent codewords exactly onto the slice boundaries.
    """
    g_full = basis.shape[0]
    rows = np.arange(cells)
    # Sibling gain lookups on the circular grid: even siblings are
    # translates, odd siblings are mirror translates.
    sib_idx = np.stack(
        [
            ((n + 1) * cells - rows) % g_full if n % 2 else (rows - n * cells) % g_full
            for n in range(1, n_slices)
        ]
    )
    phases = 2.0 * np.pi * np.arange(1024) / 1024.0
    best_key, best_pick = None, None
    for a_frac in (0.25, 0.3, 0.375, 0.45):
        a = max(1, round(n_antennas * a_frac))
        first = idx < a
        for fan in (0.0, 0.15, 0.3):
            w_left = center0 - fan * width / 2.0
            w_right = center0 + fan * width / 2.0
            base = np.where(
                first,
                np.exp(1j * np.pi * idx * w_left),
                np.exp(1j * np.pi * idx * w_right),
            ) / math.sqrt(n_antennas)
            r0 = basis[:, first] @ base[first]
            r1 = basis[:, ~first] @ base[~first]
            gain = (
                np.abs(r0[:, None] + r1[:, None] * np.exp(1j * phases)[None, :]) ** 2
            )
            own = gain[:cells]
            peak = gain.max(axis=0)
            ratio = own.min(axis=0) / peak
            sib = gain[sib_idx].max(axis=0)
            feasible = ((own - sib)[1:] > 0.0).all(axis=0)
            score = np.where(feasible, ratio, ratio - 10.0)
            pick = int(np.argmax(score))
            key = (bool(feasible[pick]), float(ratio[pick]))
            if best_key is None or key > best_key:
                best_key = key
                best_pick = base * np.where(first, 1.0, np.exp(1j * phases[pick]))
    mirrored = np.conj(best_pick) * np.exp(1j * np.pi * idx * (2.0 * center0))
    return best_pick, mirrored


@functools.lru_cache(maxsize=16)
def build_bmw_ss(n_antennas: int, branching: int) -> HierCodebook:
    """Codebook hierarchy by single-RF sub-array beam widening.

    Every codeword keeps all N antennas active (squared norm 1). Within a
    layer, codewords are angle-translates of a phase-optimized prototype
    (alternating with its mirror image on the widening-factor-2 layer), so
    patterns are identical up to shift and reflection.
    """
    s_depth = _tree_depth(n_antennas, branching)
    idx = np.arange(n_antennas)
    layers = []
    for k in range(s_depth + 1):
        protos = _bmw_base_weights(n_antennas, branching, k)
        width = 2.0 / branching**k
        words = []
        for n in range(branching**k):
            w = protos[n % 2] * np.exp(1j * np.pi * idx * (n * width))
            words.append(
                Codeword(
                    weights=w,
                    active_mask=np.ones(n_antennas, dtype=bool),
                    layer=k,
                    index_in_layer=n,
                )
            )
        layers.append(tuple(words))
    return HierCodebook(
        n_antennas=n_antennas, branching=branching, layers=tuple(layers)
    )


def beam_pattern(w: Codeword, grid_size: int) -> BeamPattern:
    """Evaluate |sqrt(N) a(N, omega)^H w|^2 in dB on a uniform grid of [-1, 1)."""
    if grid_size < 2 * w.n_antennas:
        raise ValueError("grid_size must be at least 2N")
    omega = -1.0 + 2.0 * np.arange(grid_size) / grid_size
    power = _gain(w.weights, omega)
    with np.errstate(divide="ignore"):
        gain_db = 10.0 * np.log10(power)
    return BeamPattern(angle_grid=omega, gain_db=gain_db)


@dataclass(frozen=True)
class LayerCoverage:
    """Worst parent-coverage margin within one layer."""

    layer: int
    worst_index: int
    worst_margin_db: float


@dataclass(frozen=True)
class CoverageReport:
    """Union-coverage check result: parent gain vs its children's envelope."""

    ripple_db: float
    layers: tuple[LayerCoverage, ...]
    passed: bool

    @property
    def worst_margin_db(self) -> float:
        if not self.layers:
            return math.inf
        return min(entry.worst_margin_db for entry in self.layers)


def coverage_union_check(
    cb: HierCodebook, ripple_db: float, grid_size: int = 1024
) -> CoverageReport:
    """Check every parent covers its slice within ripple_db of the child envelope.

    For each parent, the threshold is the slice-average (in dB) of the
    pointwise best-child gain minus ripple_db; the margin is the worst
    in-slice excess of the parent gain over that threshold. The bottom
    layer has no children and passes vacuously.
    """
    omega = -1.0 + 2.0 * np.arange(grid_size) / grid_size
    entries = []
    for k in range(cb.depth):
        worst_margin = math.inf
        worst_index = 0
        for parent in cb.layers[k]:
            lo, hi = slice_bounds(k, parent.index_in_layer, cb.branching)
            mask = (omega >= lo) & (omega < hi)
            pts = omega[mask]
            parent_db = 10.0 * np.log10(_gain(parent.weights, pts))
            child_gain = np.max(
                [
                    _gain(c.weights, pts)
                    for c in cb.children(k, parent.index_in_layer)
                ],
                axis=0,
            )
            envelope_db = 10.0 * np.log10(child_gain)
            threshold = float(envelope_db.mean()) - ripple_db
            margin = float((parent_db - threshold).min())
            if margin < worst_margin:
                worst_margin = margin
                worst_index = parent.index_in_layer
        entries.append(
            LayerCoverage(layer=k, worst_index=worst_index, worst_margin_db=worst_margin)
        )
    passed = all(e.worst_margin_db >= 0.0 for e in entries)
    return CoverageReport(ripple_db=ripple_db, layers=tuple(entries), passed=passed)


def codebook_to_json(cb: HierCodebook) -> str:
    """Serialize as {n_antennas, branching, layers:[[{layer,index,weights:[[re,im],..]}]]}."""
    payload = {
        "n_antennas": cb.n_antennas,
        "branching": cb.branching,
        "layers": [
            [
                {
                    "layer": w.layer,
                    "index": w.index_in_layer,
                    "weights": [[float(x.real), float(x.imag)] for x in w.weights],
                }
                for w in layer
            ]
            for layer in cb.layers
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def codebook_from_json(text: str) -> HierCodebook:
    payload = json.loads(text)
    layers = []
    for layer in payload["layers"]:
        words = []
        for entry in layer:
            w = np.array([complex(re, im) for re, im in entry["weights"]])
            words.append(
                Codeword(
                    weights=w,
                    active_mask=np.abs(w) > 0,
                    layer=int(entry["layer"]),
                    index_in_layer=int(entry["index"]),
                )
            )
        layers.append(tuple(words))
    return HierCodebook(
        n_antennas=int(payload["n_antennas"]),
        branching=int(payload["branching"]),
        layers=tuple(layers),
    )


def write_pattern_csv(bp: BeamPattern, path) -> None:
    """Beam pattern CSV with header omega,gain_db."""
    lines = ["omega,gain_db"]
    for omega, gain in zip(bp.angle_grid, bp.gain_db):
        lines.append(f"{omega:.12g},{gain:.12g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
