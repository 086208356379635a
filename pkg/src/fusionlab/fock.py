"""Sparse second-quantized engine over polarization-resolved optical paths.

Mode bookkeeping conventions (fixed once, used by everything downstream):

* Every spatial path owns four bosonic modes: (H, matched), (H, orthogonal),
  (V, matched), (V, orthogonal).  The ``matched``/``orthogonal`` slot is an
  internal wavepacket label used to model partial distinguishability; no
  detector resolves it.
* Occupation vectors are laid out path-by-path in ascending path order, with
  H before V and matched before orthogonal inside each path.
* The polarizing beam splitter is a real mode swap (transmit H, cross V,
  all coefficients +1).  Any physical reflection phase differs from this by
  local phases that only relabel which detector outcome is called "+"; this
  convention is canonical for the package.
* Downstream qubit mapping: H -> |0>, V -> |1>.

States are value-semantic; every operation returns a new ``FockState``.
Amplitudes below the pruning threshold are dropped after each operation, and
states with more than ``MAX_PHOTONS`` photons are rejected outright (this is
a desk-scale engine, not a general bosonic simulator).
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import ContractViolationError, RegistryConflictError
from .qubits import AnalyzerSetting, QubitState

H, V = "H", "V"
MATCHED, ORTHOGONAL = "matched", "orthogonal"
_POLS = (H, V)
_TEMPORALS = (MATCHED, ORTHOGONAL)

PRUNE_DEFAULT = 1e-14
MAX_PHOTONS = 8

_FACT = [math.factorial(k) for k in range(MAX_PHOTONS + 1)]


class ModeId(NamedTuple):
    spatial: int
    pol: str
    temporal: str


def registry_for(paths) -> tuple[ModeId, ...]:
    """Canonical mode registry for a set of spatial paths."""
    return tuple(ModeId(p, pol, t)
                 for p in sorted(set(paths))
                 for pol in _POLS
                 for t in _TEMPORALS)


class FockState:
    """Sparse map from occupation vectors to complex amplitudes.

    ``record_paths`` marks spatial paths whose photon has already been
    polarization-analyzed: only the wavepacket label of that photon is still
    carried (as a which-path record) and gets traced out by
    :func:`to_qubit_state` instead of becoming a qubit.
    """

    __slots__ = ("registry", "terms", "record_paths", "prune", "_pos")

    def __init__(self, registry, terms, record_paths=frozenset(), prune=PRUNE_DEFAULT):
        self.registry = tuple(registry)
        self.record_paths = frozenset(record_paths)
        self.prune = float(prune)
        self._pos = {m: i for i, m in enumerate(self.registry)}
        clean = {}
        for occ, amp in terms.items():
            amp = complex(amp)
            if abs(amp) <= self.prune:
                continue
            if len(occ) != len(self.registry):
                raise ValueError("occupation length does not match registry")
            if sum(occ) > MAX_PHOTONS:
                raise ValueError(f"photon budget exceeded (> {MAX_PHOTONS})")
            clean[tuple(occ)] = amp
        self.terms = clean

    # -- structure ----------------------------------------------------------

    @property
    def paths(self) -> tuple[int, ...]:
        return tuple(sorted({m.spatial for m in self.registry}))

    @property
    def qubit_paths(self) -> tuple[int, ...]:
        return tuple(p for p in self.paths if p not in self.record_paths)

    @property
    def is_null(self) -> bool:
        return not self.terms

    def mode_index(self, path: int, pol: str, temporal: str = MATCHED) -> int:
        mode = ModeId(path, pol, temporal)
        if mode not in self._pos:
            raise ValueError(f"unknown mode {mode}")
        return self._pos[mode]

    def path_indices(self, path: int) -> tuple[int, ...]:
        idx = tuple(i for i, m in enumerate(self.registry) if m.spatial == path)
        if not idx:
            raise ValueError(f"unknown spatial path {path}")
        return idx

    # -- linear structure -----------------------------------------------------

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.terms.values()))

    def normalize(self) -> "FockState":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a null state")
        return self.scaled(1.0 / n)

    def scaled(self, factor: complex) -> "FockState":
        return FockState(self.registry,
                         {occ: a * factor for occ, a in self.terms.items()},
                         self.record_paths, self.prune)

    def __mul__(self, factor):
        return self.scaled(factor)

    __rmul__ = __mul__

    def __add__(self, other: "FockState") -> "FockState":
        if self.registry != other.registry or self.record_paths != other.record_paths:
            raise ValueError("cannot add states with different registries")
        terms = dict(self.terms)
        for occ, a in other.terms.items():
            terms[occ] = terms.get(occ, 0j) + a
        return FockState(self.registry, terms, self.record_paths, self.prune)

    def photon_number_distribution(self) -> dict[int, float]:
        """Probability mass per total photon number."""
        dist: dict[int, float] = {}
        for occ, a in self.terms.items():
            n = sum(occ)
            dist[n] = dist.get(n, 0.0) + abs(a) ** 2
        return dist

    def __repr__(self):
        return (f"FockState(paths={self.paths}, terms={len(self.terms)}, "
                f"norm={self.norm():.6f})")


def photons(*entries, prune=PRUNE_DEFAULT) -> FockState:
    """Basis state with one photon per (path, pol[, temporal]) entry.

    Example: ``photons((1, "H"), (2, "V"))`` puts one H photon on path 1 and
    one V photon on path 2, both in the matched wavepacket.
    """
    normalized = []
    for entry in entries:
        if len(entry) == 2:
            path, pol = entry
            temporal = MATCHED
        else:
            path, pol, temporal = entry
        if pol not in _POLS or temporal not in _TEMPORALS:
            raise ValueError(f"bad photon entry {entry!r}")
        normalized.append(ModeId(int(path), pol, temporal))
    registry = registry_for(m.spatial for m in normalized)
    occ = [0] * len(registry)
    pos = {m: i for i, m in enumerate(registry)}
    for m in normalized:
        occ[pos[m]] += 1
    return FockState(registry, {tuple(occ): 1.0 + 0j}, prune=prune)


def tensor(a: FockState, b: FockState) -> FockState:
    """Combine states living on disjoint spatial paths; amplitudes multiply."""
    overlap = set(a.paths) & set(b.paths)
    if overlap:
        raise RegistryConflictError(f"spatial paths claimed twice: {sorted(overlap)}")
    registry = registry_for(list(a.paths) + list(b.paths))
    pos = {m: i for i, m in enumerate(registry)}
    map_a = [pos[m] for m in a.registry]
    map_b = [pos[m] for m in b.registry]
    terms = {}
    for occ_a, amp_a in a.terms.items():
        for occ_b, amp_b in b.terms.items():
            occ = [0] * len(registry)
            for i, v in zip(map_a, occ_a):
                occ[i] = v
            for i, v in zip(map_b, occ_b):
                occ[i] = v
            terms[tuple(occ)] = amp_a * amp_b
    return FockState(registry, terms, a.record_paths | b.record_paths, a.prune)


# -- generic creation-operator substitution -----------------------------------


def _substitute(state: FockState, columns, new_registry, record_paths=None) -> FockState:
    """Rewrite creation operators: mode i -> sum_j coeff * mode j.

    ``columns`` maps old registry indices to lists of (new index, coeff);
    old modes absent from ``columns`` pass through unchanged and must exist
    in ``new_registry`` under the same ModeId.  Target modes of ``columns``
    must not also receive pass-through photons.  Bosonic normalization
    (the sqrt(n!) bookkeeping) is handled here once for all operations.
    """
    new_pos = {m: i for i, m in enumerate(new_registry)}
    identity_map = {}
    for i, m in enumerate(state.registry):
        if i not in columns:
            identity_map[i] = new_pos[m]
    target_idx = sorted({j for outs in columns.values() for j, _ in outs})
    new_terms: dict[tuple, complex] = {}
    for occ, amp in state.terms.items():
        base = [0] * len(new_registry)
        for i, j in identity_map.items():
            base[j] = occ[i]
        norm_in = 1.0
        for i in columns:
            norm_in *= _FACT[occ[i]]
        poly = {tuple(base): amp / math.sqrt(norm_in)}
        for i, outs in columns.items():
            for _ in range(occ[i]):
                step: dict[tuple, complex] = {}
                for partial, coeff in poly.items():
                    for j, c in outs:
                        if c == 0:
                            continue
                        nxt = list(partial)
                        nxt[j] += 1
                        key = tuple(nxt)
                        step[key] = step.get(key, 0j) + coeff * c
                poly = step
        for partial, coeff in poly.items():
            norm_out = 1.0
            for j in target_idx:
                norm_out *= _FACT[partial[j]]
            new_terms[partial] = new_terms.get(partial, 0j) + coeff * math.sqrt(norm_out)
    if record_paths is None:
        record_paths = state.record_paths
    return FockState(new_registry, new_terms, record_paths, state.prune)


# -- optical elements -----------------------------------------------------------


def apply_pbs(state: FockState, in_a: int, in_b: int, out_a: int, out_b: int) -> FockState:
    """Polarizing beam splitter between two paths.

    H of ``in_a`` exits on ``out_a`` and H of ``in_b`` on ``out_b`` (transmission);
    V of ``in_a`` exits on ``out_b`` and V of ``in_b`` on ``out_a`` (reflection).
    Wavepacket labels ride along unchanged.  Output labels may be fresh or
    reuse the input labels.
    """
    paths = set(state.paths)
    for p in (in_a, in_b):
        if p not in paths:
            raise ValueError(f"unknown spatial path {p}")
        if p in state.record_paths:
            raise ContractViolationError(f"path {p} was already analyzed")
    if out_a == out_b:
        raise ValueError("output paths must be distinct")
    for p in (out_a, out_b):
        if p in paths - {in_a, in_b}:
            raise RegistryConflictError(f"output path {p} already occupied")
    new_paths = (paths - {in_a, in_b}) | {out_a, out_b}
    new_registry = registry_for(new_paths)
    new_pos = {m: i for i, m in enumerate(new_registry)}
    columns = {}
    routing = {(in_a, H): out_a, (in_b, H): out_b, (in_a, V): out_b, (in_b, V): out_a}
    for (src, pol), dst in routing.items():
        for t in _TEMPORALS:
            columns[state.mode_index(src, pol, t)] = [(new_pos[ModeId(dst, pol, t)], 1.0)]
    # fresh output paths start empty; nothing else to route
    return _substitute(state, columns, new_registry)


def hwp_jones(angle: float) -> np.ndarray:
    """Half-wave plate at fast-axis ``angle``: [[cos2a, sin2a], [sin2a, -cos2a]].

    At angle pi/8 this is the Hadamard: H -> |+>, V -> |->; at angle 0 it is
    diag(1, -1), so V picks up a sign.
    """
    c, s = math.cos(2 * angle), math.sin(2 * angle)
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp_jones(angle: float) -> np.ndarray:
    """Quarter-wave plate at fast-axis ``angle`` (global phase dropped).

    At angle pi/4 it maps circular L/R onto H/V, which is how circular
    (sigma_y) analysis is realized with a plate plus polarizer.
    """
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c * c + 1j * s * s, (1 - 1j) * s * c],
                     [(1 - 1j) * s * c, s * s + 1j * c * c]], dtype=complex)


def apply_waveplate(state: FockState, path: int, kind: str, angle: float) -> FockState:
    """Apply the Jones unitary of a half or quarter wave plate on one path."""
    if kind == "half":
        j = hwp_jones(angle)
    elif kind == "quarter":
        j = qwp_jones(angle)
    else:
        raise ValueError(f"unknown waveplate kind {kind!r}")
    if path not in state.paths:
        raise ValueError(f"unknown spatial path {path}")
    columns = {}
    for t in _TEMPORALS:
        ih = state.mode_index(path, H, t)
        iv = state.mode_index(path, V, t)
        columns[ih] = [(ih, j[0, 0]), (iv, j[1, 0])]
        columns[iv] = [(ih, j[0, 1]), (iv, j[1, 1])]
    return _substitute(state, columns, state.registry)


def split_temporal(state: FockState, path: int, overlap: float) -> FockState:
    """Split each wavepacket on ``path`` into sqrt(o) matched + sqrt(1-o) orthogonal.

    Requires the path to carry matched labels only (one split per path).
    """
    if not 0.0 <= overlap <= 1.0:
        raise ValueError("overlap must lie in [0, 1]")
    if path not in state.paths:
        raise ValueError(f"unknown spatial path {path}")
    for pol in _POLS:
        io = state.mode_index(path, pol, ORTHOGONAL)
        if any(occ[io] for occ in state.terms):
            raise ContractViolationError(
                f"path {path} already carries orthogonal wavepacket components")
    cm, co = math.sqrt(overlap), math.sqrt(1.0 - overlap)
    columns = {}
    for pol in _POLS:
        im = state.mode_index(path, pol, MATCHED)
        io = state.mode_index(path, pol, ORTHOGONAL)
        columns[im] = [(im, cm), (io, co)]
        columns[io] = [(io, 1.0)]
    return _substitute(state, columns, state.registry)


# -- post-selection and detection ---------------------------------------------


def project_photon_count(state: FockState, path: int, n: int):
    """Post-select exactly ``n`` photons (any polarization/wavepacket) on a path.

    Returns (probability, renormalized state); a zero-probability projection
    returns (0.0, null state).  The input is assumed normalized.
    """
    idx = state.path_indices(path)
    kept = {occ: amp for occ, amp in state.terms.items()
            if sum(occ[i] for i in idx) == n}
    prob = sum(abs(a) ** 2 for a in kept.values())
    if prob < 1e-30:
        return 0.0, FockState(state.registry, {}, state.record_paths, state.prune)
    scale = 1.0 / math.sqrt(prob)
    kept = {occ: amp * scale for occ, amp in kept.items()}
    return float(prob), FockState(state.registry, kept, state.record_paths, state.prune)


def _single_photon_mode(state: FockState, occ, path: int) -> ModeId:
    found = None
    for i in state.path_indices(path):
        c = occ[i]
        if c == 0:
            continue
        if c > 1 or found is not None:
            raise ContractViolationError(
                f"path {path} does not carry exactly one photon in every branch")
        found = state.registry[i]
    if found is None:
        raise ContractViolationError(
            f"path {path} does not carry exactly one photon in every branch")
    return found


def _drop_path_if_factored(registry, terms, path):
    """Drop a path whose single photon sits in the H slot and factors out.

    The photon may be in a superposition of matched/orthogonal wavepackets;
    it factors out when the conditional rest-states for the two labels are
    proportional.  Returns (registry, terms) without the path, or None.
    """
    idx_set = {i for i, m in enumerate(registry) if m.spatial == path}
    pos = {m: i for i, m in enumerate(registry)}
    im = pos[ModeId(path, H, MATCHED)]
    io = pos[ModeId(path, H, ORTHOGONAL)]
    rest_m: dict[tuple, complex] = {}
    rest_o: dict[tuple, complex] = {}
    for occ, amp in terms.items():
        rest = tuple(v for i, v in enumerate(occ) if i not in idx_set)
        if occ[im] == 1:
            rest_m[rest] = rest_m.get(rest, 0j) + amp
        elif occ[io] == 1:
            rest_o[rest] = rest_o.get(rest, 0j) + amp
        else:
            return None
    if not rest_o:
        chosen = rest_m
    elif not rest_m:
        chosen = rest_o
    else:
        lam = None
        for key in set(rest_m) | set(rest_o):
            am, ao = rest_m.get(key, 0j), rest_o.get(key, 0j)
            if abs(am) < 1e-13 and abs(ao) < 1e-13:
                continue
            if abs(am) < 1e-13 or abs(ao) < 1e-13:
                return None
            ratio = ao / am
            if lam is None:
                lam = ratio
            elif abs(ratio - lam) > 1e-10:
                return None
        scale = math.sqrt(1.0 + abs(lam) ** 2)
        chosen = {k: a * scale for k, a in rest_m.items()}
    new_registry = tuple(m for m in registry if m.spatial != path)
    return new_registry, chosen


def detect_polarization(state: FockState, path: int, setting: AnalyzerSetting):
    """Analyze the single photon on ``path`` in the given basis.

    Returns both outcome branches as (outcome, probability, state) with
    probabilities summing to the input norm.  The measured polarization
    degree of freedom leaves the registry; when the detected photon's
    wavepacket label stays entangled with the remaining photons the path is
    retained as a record path (traced out later by :func:`to_qubit_state`),
    otherwise the path is removed entirely.
    """
    for occ in state.terms:
        _single_photon_mode(state, occ, path)
    e_plus, e_minus = setting.eigenstates()
    labels = setting.outcome_labels()
    pos_h = {t: state.mode_index(path, H, t) for t in _TEMPORALS}
    pos_v = {t: state.mode_index(path, V, t) for t in _TEMPORALS}
    branches = []
    for name, e in zip(labels, (e_plus, e_minus)):
        comp = {H: complex(e[0]).conjugate(), V: complex(e[1]).conjugate()}
        new_terms: dict[tuple, complex] = {}
        for occ, amp in state.terms.items():
            mode = _single_photon_mode(state, occ, path)
            # project the polarization on |e> and park the photon in the H slot
            new_amp = amp * comp[mode.pol]
            if abs(new_amp) <= state.prune:
                continue
            occ2 = list(occ)
            occ2[pos_v[mode.temporal] if mode.pol == V else pos_h[mode.temporal]] -= 1
            occ2[pos_h[mode.temporal]] += 1
            key = tuple(occ2)
            new_terms[key] = new_terms.get(key, 0j) + new_amp
        prob = sum(abs(a) ** 2 for a in new_terms.values())
        if prob < 1e-30:
            branches.append((name, 0.0,
                             FockState(state.registry, {}, state.record_paths, state.prune)))
            continue
        scale = 1.0 / math.sqrt(prob)
        new_terms = {occ: a * scale for occ, a in new_terms.items()}
        factored = _drop_path_if_factored(state.registry, new_terms, path)
        if factored is not None:
            reg, terms = factored
            out = FockState(reg, terms, state.record_paths - {path}, state.prune)
            out = out.normalize()
        else:
            out = FockState(state.registry, new_terms,
                            state.record_paths | {path}, state.prune)
        branches.append((name, float(prob), out))
    return branches


# -- bridge to the logical layer ---------------------------------------------


def to_qubit_state(state: FockState) -> QubitState:
    """Map one photon per path to one polarization qubit; trace wavepacket labels.

    Record paths contribute only their which-path record (they are traced,
    not mapped).  The result is a pure state when a single wavepacket
    configuration carries all amplitude, and a density matrix otherwise.
    """
    q_paths = state.qubit_paths
    r_paths = tuple(sorted(state.record_paths))
    if state.is_null:
        raise ContractViolationError("cannot convert a null state")
    dim = 2 ** len(q_paths)
    env_vecs: dict[tuple, np.ndarray] = {}
    for occ, amp in state.terms.items():
        index = 0
        env = []
        for p in q_paths:
            mode = _single_photon_mode(state, occ, p)
            index = (index << 1) | (0 if mode.pol == H else 1)
            env.append(mode.temporal)
        for p in r_paths:
            mode = _single_photon_mode(state, occ, p)
            env.append((mode.pol, mode.temporal))
        key = tuple(env)
        if key not in env_vecs:
            env_vecs[key] = np.zeros(dim, dtype=complex)
        env_vecs[key][index] += amp
    if len(env_vecs) == 1:
        (vec,) = env_vecs.values()
        return QubitState(q_paths, vector=vec)
    rho = np.zeros((dim, dim), dtype=complex)
    for vec in env_vecs.values():
        rho += np.outer(vec, vec.conj())
    return QubitState(q_paths, density=rho)
