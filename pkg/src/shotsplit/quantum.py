"""Dense statevector simulation of the reset-based reservoir circuit.

Qubit ``i`` is tensor axis ``i`` of the ``(2,)*Q`` reshaped statevector, so
qubit 0 is the most significant bit of the basis index. Per time step the
circuit is

    prod_layers [ U_ent * prod_i Rz(tz) Ry(ty) Rx(tx) ] * prod_i Ry(w_i u) |0...0>

and it is sampled in the Z basis and, after Hadamards, in the X basis.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _rng

MAX_QUBITS = 14

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


class Entangler(str, Enum):
    RING_CNOT = "RingCnot"
    LINE_CNOT = "LineCnot"
    ALL_TO_ALL_CZ = "AllToAllCz"


class Basis(str, Enum):
    Z = "Z"
    X = "X"


@dataclass(frozen=True)
class ReservoirParams:
    """Fixed reservoir instance.

    ``angles[l, i]`` holds the (x, y, z) rotation angles of qubit ``i`` in
    layer ``l``.
    """

    n_qubits: int
    depth: int
    entangler: Entangler
    input_weights: np.ndarray
    angles: np.ndarray
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "entangler", Entangler(self.entangler))
        w = np.asarray(self.input_weights, dtype=float)
        a = np.asarray(self.angles, dtype=float)
        if w.shape != (self.n_qubits,):
            raise ValueError(f"input_weights must have shape ({self.n_qubits},), got {w.shape}")
        if a.shape != (self.depth, self.n_qubits, 3):
            raise ValueError(f"angles must have shape ({self.depth}, {self.n_qubits}, 3), got {a.shape}")
        object.__setattr__(self, "input_weights", w)
        object.__setattr__(self, "angles", a)


@dataclass
class ShotRecord:
    """Finite-shot measurement record.

    ``outcomes`` has shape ``(T, n_shots, 2Q)`` with entries in {-1, +1};
    the first Q columns are Z-basis outcomes and the last Q are X-basis
    outcomes. Shot ``n`` pairs the n-th Z sample with the n-th X sample of
    the same time step.
    """

    outcomes: np.ndarray
    n_qubits: int
    n_shots: int
    reservoir_seed: int = 0
    sampling_seed: int = 0
    task: str | None = None
    executions: int = 0
    extra: dict | None = None

    def __post_init__(self):
        o = np.asarray(self.outcomes)
        if o.ndim != 3 or o.shape[1] != self.n_shots or o.shape[2] != 2 * self.n_qubits:
            raise ValueError(f"outcomes shape {o.shape} inconsistent with Q={self.n_qubits}, N_shots={self.n_shots}")
        if not np.all((o == 1) | (o == -1)):
            raise ValueError("shot outcomes must be +1 or -1")
        self.outcomes = o.astype(np.int8, copy=False)

    @property
    def n_steps(self):
        return self.outcomes.shape[0]

    def digest(self):
        """SHA-256 of the outcome tensor; equal digests mean the same shots."""
        h = hashlib.sha256()
        h.update(np.asarray(self.outcomes.shape, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.outcomes).tobytes())
        return h.hexdigest()


def build_reservoir(seed, n_qubits=4, depth=1, entangler=Entangler.RING_CNOT):
    """Draw input weights in [-pi, pi] and rotation angles in [0, 2pi] from ``seed``."""
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    rng = _rng.substream(seed, _rng.RESERVOIR)
    weights = rng.uniform(-np.pi, np.pi, size=n_qubits)
    angles = rng.uniform(0.0, 2 * np.pi, size=(depth, n_qubits, 3))
    return ReservoirParams(n_qubits, depth, Entangler(entangler), weights, angles, seed)


# ---------------------------------------------------------------------------
# Gates on a batch of states, shape (B, 2**Q)


def rx(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(t):
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(t):
    return np.array([[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]])


def apply_1q(psi, gate, qubit, n_qubits):
    """Apply a 2x2 ``gate`` to ``qubit`` of every state in the batch ``psi``."""
    b = psi.shape[0]
    view = psi.reshape(b, 2**qubit, 2, 2 ** (n_qubits - qubit - 1))
    return np.einsum("ab,nibj->niaj", gate, view).reshape(b, -1)


def apply_cnot(psi, control, target, n_qubits):
    b = psi.shape[0]
    view = psi.reshape((b,) + (2,) * n_qubits).copy()
    sel = [slice(None)] * (n_qubits + 1)
    sel[1 + control] = 1
    sel = tuple(sel)
    axis = target if target < control else target - 1
    view[sel] = np.flip(view[sel], axis=1 + axis).copy()
    return view.reshape(b, -1)


def apply_cz(psi, q1, q2, n_qubits):
    b = psi.shape[0]
    view = psi.reshape((b,) + (2,) * n_qubits).copy()
    sel = [slice(None)] * (n_qubits + 1)
    sel[1 + q1] = 1
    sel[1 + q2] = 1
    view[tuple(sel)] *= -1
    return view.reshape(b, -1)


def entangler_pairs(kind, n_qubits):
    """Ordered (control, target) pairs of one entangling layer."""
    kind = Entangler(kind)
    if kind is Entangler.RING_CNOT:
        pairs = [(i, (i + 1) % n_qubits) for i in range(n_qubits)]
        return [(c, t) for c, t in pairs if c != t]
    if kind is Entangler.LINE_CNOT:
        return [(i, i + 1) for i in range(n_qubits - 1)]
    return [(i, j) for i in range(n_qubits) for j in range(i + 1, n_qubits)]


def apply_entangler(psi, kind, n_qubits):
    kind = Entangler(kind)
    for a, b in entangler_pairs(kind, n_qubits):
        if kind is Entangler.ALL_TO_ALL_CZ:
            psi = apply_cz(psi, a, b, n_qubits)
        else:
            psi = apply_cnot(psi, a, b, n_qubits)
    return psi


def entangler_unitary(kind, n_qubits):
    """Dense matrix of one entangling layer (columns are images of basis states)."""
    eye = np.eye(2**n_qubits, dtype=complex)
    return apply_entangler(eye, kind, n_qubits).T


def evolve(params, inputs):
    """Statevectors for a batch of scalar inputs; returns shape ``(len(inputs), 2**Q)``."""
    u = np.atleast_1d(np.asarray(inputs, dtype=float))
    q = params.n_qubits
    theta = np.outer(u, params.input_weights)  # (B, Q)
    psi = np.ones((len(u), 1), dtype=complex)
    for i in range(q):
        amp = np.stack([np.cos(theta[:, i] / 2), np.sin(theta[:, i] / 2)], axis=1)
        psi = (psi[:, :, None] * amp[:, None, :]).reshape(len(u), -1)
    for layer in params.angles:
        for i, (tx, ty, tz) in enumerate(layer):
            psi = apply_1q(psi, rz(tz) @ ry(ty) @ rx(tx), i, q)
        psi = apply_entangler(psi, params.entangler, q)
    return psi


def apply_circuit(params, u):
    """Statevector (2**Q complex amplitudes) after encoding ``u`` in [0, 1]."""
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"input must lie in [0, 1], got {u}")
    return evolve(params, [u])[0]


def to_x_basis(psi, n_qubits):
    """Apply a Hadamard to every qubit (batched)."""
    psi = np.atleast_2d(psi)
    for i in range(n_qubits):
        psi = apply_1q(psi, _H, i, n_qubits)
    return psi


def _bits_to_spins(indices, n_qubits):
    shifts = np.arange(n_qubits - 1, -1, -1)
    bits = (indices[:, None] >> shifts[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def _sample_indices(probs, n, rng):
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    return np.minimum(idx, len(probs) - 1)


def sample_bitstrings(state, basis, n, rng):
    """Draw ``n`` measurement outcomes of ``state``; returns an ``(n, Q)`` array of +-1.

    Bit 0 maps to +1 and bit 1 to -1.
    """
    if n < 1:
        raise ValueError("need at least one shot")
    state = np.asarray(state)
    q = int(round(np.log2(state.size)))
    if Basis(basis) is Basis.X:
        state = to_x_basis(state[None, :], q)[0]
    return _bits_to_spins(_sample_indices(np.abs(state) ** 2, n, rng), q)


def run_sequence(params, inputs, n_shots, sampling_seed, step_keys=None, task=None, chunk=256):
    """Simulate one circuit per input and sample ``n_shots`` in each basis.

    The random stream for step ``t`` and basis ``b`` is keyed by
    ``(sampling_seed, step_keys[t], b)`` so that records are reproducible
    and independent of evaluation order. ``step_keys`` defaults to
    ``range(T)``.
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.size == 0:
        raise ValueError("inputs must be non-empty")
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    if np.any(inputs < 0) or np.any(inputs > 1):
        raise ValueError("inputs must lie in [0, 1]")
    keys = np.arange(len(inputs)) if step_keys is None else np.asarray(step_keys)
    q = params.n_qubits
    out = np.empty((len(inputs), n_shots, 2 * q), dtype=np.int8)
    executions = 0
    for start in range(0, len(inputs), chunk):
        psi_z = evolve(params, inputs[start : start + chunk])
        psi_x = to_x_basis(psi_z, q)
        pz = np.abs(psi_z) ** 2
        px = np.abs(psi_x) ** 2
        for j in range(psi_z.shape[0]):
            t = start + j
            rng_z = _rng.substream(sampling_seed, keys[t], 0)
            rng_x = _rng.substream(sampling_seed, keys[t], 1)
            out[t, :, :q] = _bits_to_spins(_sample_indices(pz[j], n_shots, rng_z), q)
            out[t, :, q:] = _bits_to_spins(_sample_indices(px[j], n_shots, rng_x), q)
            executions += 2 * n_shots
    return ShotRecord(
        outcomes=out,
        n_qubits=q,
        n_shots=n_shots,
        reservoir_seed=params.seed,
        sampling_seed=sampling_seed,
        task=task,
        executions=executions,
    )
