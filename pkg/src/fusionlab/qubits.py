"""Post-selected logical layer: n polarization qubits as vectors or density matrices.

Basis conventions used throughout the package: qubit |0> is horizontal (H),
|1> is vertical (V), and |+/-> = (|H> +/- |V>)/sqrt(2).  Qubits are addressed
by integer photon labels; the tensor order is the order of ``labels`` (first
label = leftmost kron factor).

States are value-semantic: every operation returns a new ``QubitState``.
Pure states stay vectors until a channel with white noise p > 0 or branch
overlap o < 1 forces a density matrix (lazy densification keeps the ideal
paths exact).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SQRT2 = math.sqrt(2.0)

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2

_SINGLE_KETS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / SQRT2,
    "-": np.array([1, -1], dtype=complex) / SQRT2,
    "L": np.array([1, 1j], dtype=complex) / SQRT2,
    "R": np.array([1, -1j], dtype=complex) / SQRT2,
}


def ket(chars: str) -> np.ndarray:
    """Product state vector from per-photon symbols, e.g. ``ket("+H+")``."""
    vec = np.array([1.0 + 0j])
    for c in chars:
        vec = np.kron(vec, _SINGLE_KETS[c])
    return vec


def gaussian_overlap(delay_fs: float, coherence_time_fs: float) -> float:
    """Wavepacket overlap o = exp(-(tau/tau_c)^2) for a relative delay tau."""
    if coherence_time_fs <= 0:
        raise ValueError("coherence_time_fs must be positive")
    return float(np.exp(-((delay_fs / coherence_time_fs) ** 2)))


@dataclass(frozen=True)
class NoiseModel:
    """Noise knobs for the fusion pipeline.

    ``overlap`` is the wavepacket overlap o in [0, 1] between the two photons
    interfering at the beam splitter; ``white_noise`` the admixed fraction p of
    the maximally mixed state.  If ``overlap`` is None and ``delay_fs`` is set,
    o is derived as exp(-(delay/coherence_time)^2); an explicit overlap always
    wins over the delay.
    """

    overlap: float | None = None
    white_noise: float = 0.0
    delay_fs: float | None = None
    coherence_time_fs: float = 740.0

    def __post_init__(self):
        if self.overlap is not None and not 0.0 <= self.overlap <= 1.0:
            raise ValueError("overlap must lie in [0, 1]")
        if not 0.0 <= self.white_noise <= 1.0:
            raise ValueError("white_noise must lie in [0, 1]")
        if self.coherence_time_fs <= 0:
            raise ValueError("coherence_time_fs must be positive")

    def effective_overlap(self) -> float:
        if self.overlap is not None:
            return float(self.overlap)
        if self.delay_fs is not None:
            return gaussian_overlap(self.delay_fs, self.coherence_time_fs)
        return 1.0


@dataclass(frozen=True)
class AnalyzerSetting:
    """A polarization analyzer: an orthogonal projector pair on the Bloch sphere.

    ``linear(theta)`` passes cos(theta)|H> + sin(theta)|V>;  pauli_z == linear(0),
    pauli_x == linear(pi/4).  ``general(theta, phi)`` adds a relative phase and
    covers circular analysis (pauli_y == general(pi/4, pi/2)).
    """

    kind: str
    theta: float = 0.0
    phi: float = 0.0

    _KINDS = ("pauli_x", "pauli_y", "pauli_z", "linear", "general")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown analyzer kind: {self.kind!r}")

    @classmethod
    def x(cls):
        return cls("pauli_x")

    @classmethod
    def y(cls):
        return cls("pauli_y")

    @classmethod
    def z(cls):
        return cls("pauli_z")

    @classmethod
    def linear(cls, theta: float):
        return cls("linear", theta=theta)

    @classmethod
    def general(cls, theta: float, phi: float):
        return cls("general", theta=theta, phi=phi)

    @classmethod
    def from_token(cls, token: str) -> "AnalyzerSetting":
        """Parse a one-letter basis token ('x', 'y' or 'z')."""
        try:
            return {"x": cls.x, "y": cls.y, "z": cls.z}[token.lower()]()
        except KeyError:
            raise ValueError(f"unknown basis token: {token!r}") from None

    def eigenstates(self) -> tuple[np.ndarray, np.ndarray]:
        """The (+1, -1) eigenstate pair as 2-vectors in the H/V basis."""
        if self.kind == "pauli_z":
            return _SINGLE_KETS["H"].copy(), _SINGLE_KETS["V"].copy()
        if self.kind == "pauli_x":
            return _SINGLE_KETS["+"].copy(), _SINGLE_KETS["-"].copy()
        if self.kind == "pauli_y":
            return _SINGLE_KETS["L"].copy(), _SINGLE_KETS["R"].copy()
        c, s = math.cos(self.theta), math.sin(self.theta)
        if self.kind == "linear":
            return (np.array([c, s], dtype=complex),
                    np.array([-s, c], dtype=complex))
        ph = np.exp(1j * self.phi)
        return (np.array([c, ph * s], dtype=complex),
                np.array([-s / ph, c], dtype=complex))

    def outcome_labels(self) -> tuple[str, str]:
        return {
            "pauli_z": ("H", "V"),
            "pauli_x": ("+", "-"),
            "pauli_y": ("L", "R"),
            "linear": ("t", "r"),
            "general": ("t", "r"),
        }[self.kind]


class QubitState:
    """Pure vector or density matrix over labeled polarization qubits."""

    def __init__(self, labels, vector=None, density=None):
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate qubit labels")
        if (vector is None) == (density is None):
            raise ValueError("provide exactly one of vector/density")
        self._labels = labels
        dim = 2 ** len(labels)
        if vector is not None:
            vec = np.asarray(vector, dtype=complex).reshape(-1)
            if vec.shape != (dim,):
                raise ValueError(f"vector has wrong length for {len(labels)} qubits")
            self._vec = vec.copy()
            self._rho = None
        else:
            rho = np.asarray(density, dtype=complex)
            if rho.shape != (dim, dim):
                raise ValueError(f"density has wrong shape for {len(labels)} qubits")
            self._vec = None
            self._rho = rho.copy()

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_vector(cls, labels, vector):
        return cls(labels, vector=vector)

    @classmethod
    def from_density(cls, labels, density):
        return cls(labels, density=density)

    @classmethod
    def pure(cls, labels, chars: str):
        """Product state from per-photon symbols, e.g. ``pure((1,3,4), "+H+")``."""
        if len(chars) != len(tuple(labels)):
            raise ValueError("one symbol per label required")
        return cls(labels, vector=ket(chars))

    # -- basic accessors --------------------------------------------------

    @property
    def labels(self) -> tuple:
        return self._labels

    @property
    def n(self) -> int:
        return len(self._labels)

    @property
    def is_pure(self) -> bool:
        return self._vec is not None

    def index(self, label) -> int:
        try:
            return self._labels.index(label)
        except ValueError:
            raise ValueError(f"label {label!r} not in state {self._labels}") from None

    def vector(self) -> np.ndarray:
        if self._vec is None:
            raise ValueError("state is mixed; no vector representation")
        return self._vec.copy()

    def density(self) -> np.ndarray:
        if self._rho is not None:
            return self._rho.copy()
        return np.outer(self._vec, self._vec.conj())

    def purity(self) -> float:
        if self.is_pure:
            return 1.0
        rho = self._rho
        return float(np.real(np.trace(rho @ rho)))

    def validate(self):
        """Check the representation invariants; raise ValidationError on drift."""
        if self.is_pure:
            norm = float(np.linalg.norm(self._vec))
            if abs(norm - 1.0) > 1e-12:
                raise ValidationError(f"pure-state norm drifted to {norm!r}")
        else:
            rho = self._rho
            if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
                raise ValidationError("density matrix is not Hermitian")
            tr = complex(np.trace(rho))
            if abs(tr - 1.0) > 1e-12:
                raise ValidationError(f"density trace drifted to {tr!r}")
            if float(np.min(np.linalg.eigvalsh(rho))) < -1e-10:
                raise ValidationError("density matrix has a negative eigenvalue")
        return self

    def __repr__(self):
        kind = "pure" if self.is_pure else "mixed"
        return f"QubitState(labels={self._labels}, {kind})"


# -- helpers ---------------------------------------------------------------


def _embed(op: np.ndarray, pos: int, n: int) -> np.ndarray:
    """Single-qubit operator embedded at tensor slot ``pos`` of ``n``."""
    return np.kron(np.kron(np.eye(2 ** pos), op), np.eye(2 ** (n - pos - 1)))


def _bra_matrix(e: np.ndarray, pos: int, n: int) -> np.ndarray:
    """Contraction matrix <e| at slot pos: maps 2^n -> 2^(n-1)."""
    return np.kron(np.kron(np.eye(2 ** pos), e.conj().reshape(1, 2)),
                   np.eye(2 ** (n - pos - 1)))


def canonical_vector(vec: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Fix the global phase: first amplitude above ``tol`` made real positive."""
    for a in vec:
        if abs(a) > tol:
            return vec * (a.conjugate() / abs(a))
    return vec.copy()


def state_distance(a: QubitState, b: QubitState) -> float:
    """Max absolute amplitude difference, phase-normalized for pure pairs."""
    if a.n != b.n:
        raise ValueError("qubit counts differ")
    if a.is_pure and b.is_pure:
        return float(np.max(np.abs(canonical_vector(a.vector())
                                   - canonical_vector(b.vector()))))
    return float(np.max(np.abs(a.density() - b.density())))


# -- operations -------------------------------------------------------------


def tensor(a: QubitState, b: QubitState) -> QubitState:
    """Tensor product; label sets must be disjoint."""
    if set(a.labels) & set(b.labels):
        raise ValueError("overlapping qubit labels")
    labels = a.labels + b.labels
    if a.is_pure and b.is_pure:
        return QubitState(labels, vector=np.kron(a.vector(), b.vector()))
    return QubitState(labels, density=np.kron(a.density(), b.density()))


def apply_unitary(state: QubitState, label, u: np.ndarray) -> QubitState:
    """Act with a 2x2 unitary on one labeled qubit."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or np.max(np.abs(u.conj().T @ u - np.eye(2))) > 1e-10:
        raise ValueError("u is not a 2x2 unitary")
    pos = state.index(label)
    full = _embed(u, pos, state.n)
    if state.is_pure:
        return QubitState(state.labels, vector=full @ state.vector())
    return QubitState(state.labels, density=full @ state.density() @ full.conj().T)


def measure(state: QubitState, label, setting: AnalyzerSetting):
    """Project one qubit onto the analyzer eigenstates and remove it.

    Returns the two branches as (outcome, probability, remaining state);
    probabilities sum to 1 and each remaining state is renormalized.  A
    zero-probability branch carries ``None`` in place of a state.
    """
    pos = state.index(label)
    n = state.n
    rest = tuple(l for l in state.labels if l != label)
    branches = []
    total = 0.0
    for name, e in zip(setting.outcome_labels(), setting.eigenstates()):
        m = _bra_matrix(e, pos, n)
        if state.is_pure:
            sub = m @ state.vector()
            p = float(np.sum(np.abs(sub) ** 2))
            out = QubitState(rest, vector=sub / math.sqrt(p)) if p > 1e-15 else None
        else:
            sub = m @ state.density() @ m.conj().T
            p = float(np.real(np.trace(sub)))
            out = QubitState(rest, density=sub / p) if p > 1e-15 else None
        branches.append((name, p, out))
        total += p
    if abs(total - 1.0) > 1e-10:
        raise ValidationError(f"measurement branch probabilities sum to {total!r}")
    return branches


def expectation(state: QubitState, word: str) -> float:
    """Expectation value of a Pauli word such as "XYY" (letters I, X, Y, Z)."""
    if len(word) != state.n:
        raise ValueError(f"Pauli word length {len(word)} != qubit count {state.n}")
    op = np.array([[1.0 + 0j]])
    for c in word:
        if c not in PAULI:
            raise ValueError(f"unknown Pauli letter {c!r}")
        op = np.kron(op, PAULI[c])
    if state.is_pure:
        v = state.vector()
        val = complex(np.vdot(v, op @ v))
    else:
        val = complex(np.trace(state.density() @ op))
    if abs(val.imag) > 1e-10:
        raise ValidationError(f"Pauli expectation came out complex: {val!r}")
    return float(val.real)


def apply_white_noise(state: QubitState, p: float) -> QubitState:
    """Admix a fraction p of the maximally mixed state: rho -> (1-p) rho + p I/2^n."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("white-noise fraction must lie in [0, 1]")
    if p == 0.0:
        return state
    dim = 2 ** state.n
    rho = (1.0 - p) * state.density() + p * np.eye(dim) / dim
    return QubitState(state.labels, density=rho)


def dephase_coherence(state: QubitState, o: float) -> QubitState:
    """Scale the coherence between the |+H+> and |-V-> fusion branches by o.

    Implemented as the channel rho -> (1+o)/2 rho + (1-o)/2 U rho U with the
    reflection U = I - 2|b><b|, b = |-V->.  On the two-branch fusion family
    this equals scaling the a/b off-diagonal blocks by o, it is trace
    preserving and completely positive, and it commutes with white noise.
    """
    if not 0.0 <= o <= 1.0:
        raise ValueError("overlap must lie in [0, 1]")
    if state.n != 3:
        raise ValueError("branch dephasing is defined on the 3-qubit fusion family")
    if o == 1.0:
        return state
    b = ket("-V-")
    refl = np.eye(8) - 2.0 * np.outer(b, b.conj())
    rho = state.density()
    rho = 0.5 * (1.0 + o) * rho + 0.5 * (1.0 - o) * (refl @ rho @ refl.conj().T)
    return QubitState(state.labels, density=rho)


def _sqrtm_psd(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(a: QubitState, b: QubitState) -> float:
    """Uhlmann fidelity in [0, 1]; |<a|b>|^2 for pure pairs.

    Compares positionally: states must have the same qubit count but label
    values are not required to match.
    """
    if a.n != b.n:
        raise ValueError("qubit counts differ")
    if a.is_pure and b.is_pure:
        f = abs(np.vdot(a.vector(), b.vector())) ** 2
    elif a.is_pure:
        v = a.vector()
        f = float(np.real(np.vdot(v, b.density() @ v)))
    elif b.is_pure:
        v = b.vector()
        f = float(np.real(np.vdot(v, a.density() @ v)))
    else:
        s = _sqrtm_psd(a.density())
        w = np.linalg.eigvalsh(s @ b.density() @ s)
        f = float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)
    return float(min(max(f, 0.0), 1.0))


# -- qubit-level fusion -------------------------------------------------------


def fusion_kraus_operators(outcome: str = "+") -> np.ndarray:
    """The success Kraus operator K_+- = (|H><HH| +- |V><VV|)/sqrt(2) as a 2x4 matrix."""
    sign = {"+": 1.0, "-": -1.0}[outcome]
    k = np.zeros((2, 4), dtype=complex)
    k[0, 0] = 1.0 / SQRT2
    k[1, 3] = sign / SQRT2
    return k


def fusion_failure_operators() -> tuple[np.ndarray, np.ndarray]:
    """Failure operators completing the fusion instrument: map HV/VH out.

    Output kets are an arbitrary (documented) choice; only the completeness
    relation sum_k K^dag K = I on the two-qubit space is meaningful.
    """
    f1 = np.zeros((2, 4), dtype=complex)
    f2 = np.zeros((2, 4), dtype=complex)
    f1[0, 1] = 1.0  # |H><HV|
    f2[1, 2] = 1.0  # |V><VH|
    return f1, f2


def _fusion_matrix(n: int, ia: int, ib: int, outcome: str) -> np.ndarray:
    sign = {"+": 1.0, "-": -1.0}[outcome]
    m = np.zeros((2 ** (n - 1), 2 ** n), dtype=complex)
    for idx in range(2 ** n):
        bits = [(idx >> (n - 1 - k)) & 1 for k in range(n)]
        if bits[ia] != bits[ib]:
            continue
        out_bits = [bit for k, bit in enumerate(bits) if k != ia]
        oidx = 0
        for bit in out_bits:
            oidx = (oidx << 1) | bit
        m[oidx, idx] = (1.0 if bits[ia] == 0 else sign) / SQRT2
    return m


def fusion_kraus(state: QubitState, label_a, label_b, outcome: str = "+"):
    """Fuse two labeled qubits into one with K_+-; the fused qubit keeps label_b.

    Returns (branch probability, renormalized state); the state is ``None``
    when the branch has zero probability.
    """
    if label_a == label_b:
        raise ValueError("fusion labels must be distinct")
    ia, ib = state.index(label_a), state.index(label_b)
    m = _fusion_matrix(state.n, ia, ib, outcome)
    rest = tuple(l for l in state.labels if l != label_a)
    if state.is_pure:
        sub = m @ state.vector()
        p = float(np.sum(np.abs(sub) ** 2))
        out = QubitState(rest, vector=sub / math.sqrt(p)) if p > 1e-15 else None
    else:
        sub = m @ state.density() @ m.conj().T
        p = float(np.real(np.trace(sub)))
        out = QubitState(rest, density=sub / p) if p > 1e-15 else None
    return p, out
