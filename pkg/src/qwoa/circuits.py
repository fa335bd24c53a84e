"""Gate-level circuits for equal-superposition preparation and the complete-graph mixer.

Qubit j corresponds to bit j of a basis-state index (little-endian). Controls
carry a polarity: True fires on |1>, False on |0>.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

_SQ2 = 1 / math.sqrt(2)


@dataclass(frozen=True)
class Gate:
    kind: str  # X, H, RY, P
    target: int
    params: tuple = ()
    controls: tuple = ()  # ((qubit, polarity), ...)

    def __post_init__(self):
        if self.kind not in ("X", "H", "RY", "P"):
            raise ValueError(f"unsupported gate {self.kind!r}")
        if self.target in [q for q, _ in self.controls]:
            raise ValueError("control qubit equals target")
        if len({q for q, _ in self.controls}) != len(self.controls):
            raise ValueError("repeated control qubit")
        if not all(math.isfinite(p) for p in self.params):
            raise ValueError("gate parameters must be finite")

    def matrix(self) -> np.ndarray:
        if self.kind == "X":
            return np.array([[0, 1], [1, 0]], dtype=complex)
        if self.kind == "H":
            return np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)
        if self.kind == "RY":
            c, s = math.cos(self.params[0] / 2), math.sin(self.params[0] / 2)
            return np.array([[c, -s], [s, c]], dtype=complex)
        return np.array([[1, 0], [0, np.exp(1j * self.params[0])]], dtype=complex)

    def inverse(self) -> "Gate":
        if self.kind in ("RY", "P"):
            return Gate(self.kind, self.target, (-self.params[0],), self.controls)
        return self

    def qubits(self):
        return [self.target] + [q for q, _ in self.controls]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "target": self.target, "params": list(self.params),
                "controls": [{"qubit": q, "polarity": int(p)} for q, p in self.controls]}


def X(q, controls=()):
    return Gate("X", q, (), tuple(controls))


def H(q, controls=()):
    return Gate("H", q, (), tuple(controls))


def RY(q, theta, controls=()):
    return Gate("RY", q, (float(theta),), tuple(controls))


def P(q, phi, controls=()):
    return Gate("P", q, (float(phi),), tuple(controls))


def CNOT(control, target):
    return X(target, ((control, True),))


@dataclass
class Circuit:
    qubits: int
    gates: list = field(default_factory=list)

    def add(self, *gates):
        for g in gates:
            if max(g.qubits()) >= self.qubits or min(g.qubits()) < 0:
                raise ValueError(f"gate {g} touches a qubit outside [0, {self.qubits})")
            self.gates.append(g)
        return self

    def extend(self, other: "Circuit", offset: int = 0):
        for g in other.gates:
            self.add(Gate(g.kind, g.target + offset, g.params,
                          tuple((q + offset, pol) for q, pol in g.controls)))
        return self

    def inverse(self) -> "Circuit":
        return Circuit(self.qubits, [g.inverse() for g in reversed(self.gates)])

    def count(self, kind: str, controlled: bool | None = None) -> int:
        return sum(1 for g in self.gates if g.kind == kind
                   and (controlled is None or bool(g.controls) == controlled))

    def to_dict(self) -> dict:
        return {"qubits": self.qubits, "gates": [g.to_dict() for g in self.gates]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def zero_state(q: int) -> np.ndarray:
    psi = np.zeros(1 << q, dtype=complex)
    psi[0] = 1
    return psi


def _apply_gate(psi, g: Gate, idx):
    bit = 1 << g.target
    sel = (idx & bit) == 0
    for q, pol in g.controls:
        cb = (idx >> q) & 1
        sel &= cb == (1 if pol else 0)
    i0 = idx[sel]
    i1 = i0 | bit
    m = g.matrix()
    a, b = psi[i0], psi[i1]
    psi[i0] = m[0, 0] * a + m[0, 1] * b
    psi[i1] = m[1, 0] * a + m[1, 1] * b


def simulate_circuit(c: Circuit, init: np.ndarray | None = None) -> np.ndarray:
    if c.qubits > 24:
        raise ValueError("simulation limited to 24 qubits")
    psi = zero_state(c.qubits) if init is None else np.array(init, dtype=complex)
    if psi.shape != (1 << c.qubits,):
        raise ValueError(f"state length {psi.shape} does not match {c.qubits} qubits")
    idx = np.arange(1 << c.qubits)
    for g in c.gates:
        _apply_gate(psi, g, idx)
    return psi


def circuit_unitary(c: Circuit) -> np.ndarray:
    dim = 1 << c.qubits
    return np.column_stack([simulate_circuit(c, np.eye(dim, dtype=complex)[:, j]) for j in range(dim)])


def phase_aligned_difference(U: np.ndarray, V: np.ndarray) -> float:
    """Max |U - e^{ia} V| with a fixed by the largest-magnitude entry of V."""
    j = np.unravel_index(np.argmax(np.abs(V)), V.shape)
    ph = U[j] / V[j]
    ph = ph / abs(ph) if abs(ph) > 0 else 1.0
    return float(np.max(np.abs(U - ph * V)))


def build_uk_binary(k: int) -> Circuit:
    """Equal superposition over |0>..|k-1> on ceil(log2 k) qubits.

    The top qubit first splits off the largest power-of-two block; the remainder
    is split recursively by controlled rotations, and Hadamards (conditioned on
    the block-selecting qubits) fill each power-of-two block.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    m = math.ceil(math.log2(k))
    c = Circuit(m)
    if k == 1 << m:
        return c.add(*[H(q) for q in range(m)])
    r = m - 1
    c.add(RY(r, 2 * math.acos(math.sqrt((1 << r) / k))))
    R = k - (1 << r)
    # exact integer log2: R is a power of two iff it has one set bit
    while R & (R - 1):
        j = R.bit_length() - 1
        c.add(RY(j, 2 * math.acos(math.sqrt((1 << j) / R)), ((r, True),)))
        R -= 1 << j
        r = j
    j = R.bit_length() - 1
    c.add(*[H(i) for i in range(j)])
    while j != m - 1:
        r = j + 1
        while (k >> r) % 2 != 1:
            r += 1
        c.add(*[H(i, ((r, False),)) for i in range(j, r)])
        j = r
    return c


def build_uk_onehot(k: int) -> Circuit:
    """Equal superposition over the k one-hot states of k qubits.

    The excitation starts on the last qubit and is handed down the chain: qubit i
    takes it with probability 1/(k-i) of what is left.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    last = k - 1
    c = Circuit(k)
    c.add(X(last))
    for i in range(k - 1):
        phi = 2 * math.asin(1 / math.sqrt(k - i))
        c.add(RY(i, phi, () if i == 0 else ((last, True),)))
        c.add(CNOT(i, last))
    return c


def build_uk(k: int, encoding: str) -> Circuit:
    if encoding == "binary":
        return build_uk_binary(k)
    if encoding == "onehot":
        return build_uk_onehot(k)
    raise ValueError(f"unknown encoding {encoding!r}")


def encoded_index(value: int, k: int, encoding: str) -> int:
    return (1 << value) if encoding == "onehot" else value


def build_hamming_mixer_circuit(k: int, t: float, encoding: str = "binary") -> Circuit:
    """Complete-graph walk e^{-itK} on one register, up to a global phase.

    Un-prepares the equal superposition, applies phase e^{-ikt} to |0...0>, and
    prepares it again, which rotates only the uniform direction.
    """
    uk = build_uk(k, encoding)
    q = uk.qubits
    c = Circuit(q).extend(uk.inverse())
    c.add(*[X(i) for i in range(q)])
    c.add(P(q - 1, -k * t, tuple((i, True) for i in range(q - 1))))
    c.add(*[X(i) for i in range(q)])
    return c.extend(uk)


def complete_graph_walk(k: int, t: float) -> np.ndarray:
    """Dense e^{-itK} with K = k|s><s| - I (the complete graph's adjacency)."""
    s = np.full(k, 1 / math.sqrt(k))
    proj = np.outer(s, s)
    return np.exp(1j * t) * (np.eye(k) + (np.exp(-1j * k * t) - 1) * proj)


def restricted_unitary(c: Circuit, k: int, encoding: str) -> np.ndarray:
    cols = []
    for v in range(k):
        psi = np.zeros(1 << c.qubits, dtype=complex)
        psi[encoded_index(v, k, encoding)] = 1
        out = simulate_circuit(c, psi)
        cols.append([out[encoded_index(w, k, encoding)] for w in range(k)])
    return np.array(cols).T


def build_permutation_superposition(n: int) -> Circuit:
    """Equal superposition over all one-hot encoded permutations of n (n^2 qubits).

    Register r occupies qubits r*n .. r*n+n-1. Registers are added one at a
    time: the new register m is put into an equal superposition over 0..m, then
    every earlier register holding a value >= the new one is incremented.
    """
    if not 2 <= n <= 4:
        raise ValueError("permutation preparation supports 2 <= n <= 4")
    c = Circuit(n * n)

    def q(reg, val):
        return reg * n + val

    c.add(X(q(0, 0)))
    for m in range(1, n):
        c.extend(build_uk_onehot(m + 1), offset=q(m, 0))
        for r in range(m):
            # walk values downward so each shift lands on an empty slot
            for v in range(m - 1, -1, -1):
                # new value w <= v  <=>  none of the new register's qubits above v is set
                cond = tuple((q(m, w), False) for w in range(v + 1, m + 1))
                c.add(X(q(r, v + 1), ((q(r, v), True),) + cond))
                c.add(X(q(r, v), ((q(r, v + 1), True),) + cond))
    return c


def permutation_state_indices(n: int) -> np.ndarray:
    return np.array([sum(1 << (r * n + x) for r, x in enumerate(perm))
                     for perm in itertools.permutations(range(n))])


def embed_integer_state(state: np.ndarray, n: int, k: int, encoding: str = "binary") -> tuple[np.ndarray, int]:
    """Map a logical Integer(n, k) amplitude vector onto per-variable qubit registers."""
    width = math.ceil(math.log2(k)) if encoding == "binary" else k
    q = n * width
    out = np.zeros(1 << q, dtype=complex)
    for idx in range(k**n):
        rem, pos = idx, 0
        for j in range(n):
            rem, v = divmod(rem, k)
            pos |= encoded_index(v, k, encoding) << (j * width)
        out[pos] = state[idx]
    return out, width
