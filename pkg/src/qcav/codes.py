"""
Concrete codes for pairwise-collective noise: the four-qubit code, the 2L+2
parity code and the two-qubit correlated-swap code, with QND syndrome
extraction, CNOT recovery and end-to-end simulation.

Qubit layout for the pair codes is 1, 1', 2, 2', ...: pair l is qubits
2l-1 (first) and 2l (primed). Logical states keep every pair in the
{|01>, |10>} sector, so ``sigma_z + sigma_z'`` reads 0 on each pair; a raising
error drives a pair to |11> (reads +2), a lowering error to |00> (reads -2).
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from qcav.errors import (DecodeError, IncompleteFamilyError, InvalidArgumentError, NumericalError,
                         UncorrectablePatternError)
from qcav.hilbert import Subspace, basis_state, check_qubits, n_qubits_of, normalize
from qcav.noise import COMPLETE_TOL, KrausFamily

__all__ = [
    "Gate",
    "Circuit",
    "Syndrome",
    "RoundTripReport",
    "MonteCarloReport",
    "cnot",
    "apply_circuit",
    "encoder4_circuit",
    "encode4",
    "decode4",
    "encode_general",
    "decode_general",
    "parity_code_space",
    "four_qubit_code",
    "encode_correlated",
    "correlated_code",
    "measure_syndrome",
    "syndrome_projector",
    "recovery_circuit",
    "inject_error",
    "roundtrip",
    "monte_carlo",
    "exact_recovery_fidelity",
]


@dataclass(frozen=True)
class Gate:
    kind: str  # "cnot" or "x"
    target: int
    control: Optional[int] = None

    def __str__(self):
        if self.kind == "cnot":
            return f"CNOT({self.control}->{self.target})"
        return f"X({self.target})"


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: Tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            qubits = [g.target] + ([g.control] if g.kind == "cnot" else [])
            if g.kind not in ("cnot", "x"):
                raise InvalidArgumentError(f"unknown gate kind {g.kind!r}")
            if any(not 1 <= q <= self.n_qubits for q in qubits):
                raise InvalidArgumentError(f"gate {g} out of range for {self.n_qubits} qubits")
            if g.kind == "cnot" and g.control == g.target:
                raise InvalidArgumentError("CNOT control and target must differ")

    def __len__(self):
        return len(self.gates)

    def describe(self) -> List[str]:
        return [str(g) for g in self.gates]


def _bit(q, n):
    return 1 << (n - q)


def _gate_permutation(gate: Gate, n: int) -> np.ndarray:
    idx = np.arange(2**n)
    tmask = _bit(gate.target, n)
    if gate.kind == "x":
        return idx ^ tmask
    cmask = _bit(gate.control, n)
    return np.where(idx & cmask, idx ^ tmask, idx)


def cnot(control: int, target: int, n_qubits: int) -> np.ndarray:
    """CNOT as a permutation matrix; flips ``target`` when ``control`` is 1."""
    check_qubits(n_qubits)
    circ = Circuit(n_qubits, (Gate("cnot", target, control),))
    perm = _gate_permutation(circ.gates[0], n_qubits)
    mat = np.zeros((2**n_qubits, 2**n_qubits), dtype=complex)
    mat[perm, np.arange(2**n_qubits)] = 1.0
    return mat


def apply_circuit(circuit: Circuit, state) -> np.ndarray:
    """Run the gates in order (first gate acts first)."""
    state = np.asarray(state, dtype=complex)
    if state.shape != (2**circuit.n_qubits,):
        raise InvalidArgumentError("state does not match circuit width")
    for gate in circuit.gates:
        perm = _gate_permutation(gate, circuit.n_qubits)
        out = np.empty_like(state)
        out[perm] = state
        state = out
    return state


def _logical(c0, c1):
    amps = np.array([c0, c1], dtype=complex)
    if abs(np.linalg.norm(amps) - 1) > 1e-10:
        raise InvalidArgumentError(f"|c0|^2 + |c1|^2 = {np.linalg.norm(amps) ** 2:.12g}, expected 1")
    return amps


def encoder4_circuit() -> Circuit:
    # C_{11'} C_{12} C_{12'}: rightmost acts first
    return Circuit(4, (Gate("cnot", 4, 1), Gate("cnot", 3, 1), Gate("cnot", 2, 1)))


def encode4(c0: complex, c1: complex) -> np.ndarray:
    """Encode c0|0> + c1|1> on qubit 1 with ancillas |101> on 1', 2, 2'."""
    amps = _logical(c0, c1)
    ancilla = np.zeros(8, dtype=complex)
    ancilla[0b101] = 1.0
    return apply_circuit(encoder4_circuit(), np.kron(amps, ancilla))


def decode4(state) -> np.ndarray:
    """Undo the encoder circuit and read qubit 1; ancillas must return to |101>."""
    state = np.asarray(state, dtype=complex)
    if state.shape != (16,):
        raise InvalidArgumentError("decode4 needs a four-qubit state")
    undone = apply_circuit(Circuit(4, tuple(reversed(encoder4_circuit().gates))), state)
    amps = np.array([undone[0b0101], undone[0b1101]])
    rest = undone.copy()
    rest[[0b0101, 0b1101]] = 0
    residual = float(np.linalg.norm(rest))
    if residual > 1e-8:
        raise DecodeError(f"state leaves the code space (residual {residual:.3e})", residual=residual)
    return amps


def _encode_index(x: int, L: int) -> int:
    bits = [(x >> (L - 1 - l)) & 1 for l in range(L)]
    bits.append(sum(bits) % 2)
    out = 0
    for b in bits:
        out = (out << 2) | (b << 1) | (1 - b)
    return out


def parity_code_space(L: int) -> Subspace:
    """Code basis of the 2L+2 parity code, logical |x> in lexicographic order."""
    n = check_qubits(2 * L + 2)
    cols = np.zeros((2**n, 2**L), dtype=complex)
    for x in range(2**L):
        cols[_encode_index(x, L), x] = 1.0
    return Subspace(n, cols)


def four_qubit_code() -> Subspace:
    return parity_code_space(1)


def encode_general(psi) -> np.ndarray:
    """Map L logical qubits to L+1 pairs: |i_l> -> |i_l, 1 - i_l>, the last
    pair carrying the parity of all i_l."""
    psi = np.asarray(psi, dtype=complex)
    L = n_qubits_of(psi.shape[0])
    n = check_qubits(2 * L + 2)
    out = np.zeros(2**n, dtype=complex)
    for x in range(2**L):
        out[_encode_index(x, L)] = psi[x]
    return out


def decode_general(state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    n = n_qubits_of(state.shape[0])
    if n % 2 or n < 4:
        raise InvalidArgumentError("parity code states have an even number >= 4 of qubits")
    L = (n - 2) // 2
    index = [_encode_index(x, L) for x in range(2**L)]
    amps = state[index]
    rest = state.copy()
    rest[index] = 0
    residual = float(np.linalg.norm(rest))
    if residual > 1e-8:
        raise DecodeError(f"state leaves the code space (residual {residual:.3e})", residual=residual)
    return amps


def encode_correlated(c0: complex, c1: complex) -> np.ndarray:
    amps = _logical(c0, c1)
    out = np.zeros(4, dtype=complex)
    out[0b00], out[0b11] = amps
    return out


def correlated_code() -> Subspace:
    return Subspace.from_kets(["00", "11"])


@dataclass(frozen=True, eq=False)
class Syndrome:
    outcomes: Tuple[int, ...]
    post_state: np.ndarray
    probability: float = 1.0


def _pair_values(n_pairs: int) -> np.ndarray:
    # eigenvalue of sigma_z + sigma_z' per basis index and pair: +2 on |11>, -2 on |00>
    n = 2 * n_pairs
    idx = np.arange(2**n)
    vals = np.empty((n_pairs, 2**n), dtype=int)
    for l in range(1, n_pairs + 1):
        a = (idx >> (n - (2 * l - 1))) & 1
        b = (idx >> (n - 2 * l)) & 1
        vals[l - 1] = 2 * (a + b) - 2
    return vals


def syndrome_projector(outcomes: Sequence[int]) -> np.ndarray:
    """Diagonal of the projector onto a joint syndrome pattern."""
    vals = _pair_values(len(outcomes))
    mask = np.all(vals == np.asarray(outcomes)[:, None], axis=0)
    return mask.astype(float)


def measure_syndrome(state, n_pairs: int, seed=None) -> Syndrome:
    """Projective QND measurement of ``sigma_z + sigma_z'`` on every pair.

    Pairs are measured in order; each outcome is drawn from the Born rule with
    ``seed`` (an int or a numpy Generator).
    """
    state = np.asarray(state, dtype=complex)
    if state.shape != (4**n_pairs,):
        raise InvalidArgumentError(f"state is not on {n_pairs} pairs")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    vals = _pair_values(n_pairs)
    norm = np.linalg.norm(state)
    if norm == 0:
        raise InvalidArgumentError("cannot measure the zero vector")
    state = state / norm
    outcomes = []
    prob_total = 1.0
    for l in range(n_pairs):
        weights = np.abs(state) ** 2
        probs = np.array([weights[vals[l] == v].sum() for v in (-2, 0, 2)])
        probs = probs / probs.sum()
        pick = (-2, 0, 2)[int(rng.choice(3, p=probs))]
        state = np.where(vals[l] == pick, state, 0)
        kept = np.linalg.norm(state)
        if kept == 0:
            raise NumericalError("projection onto sampled outcome vanished")
        state = state / kept
        outcomes.append(pick)
        prob_total *= float(probs[(-2, 0, 2).index(pick)])
    return Syndrome(tuple(outcomes), state, prob_total)


def recovery_circuit(outcomes: Sequence[int], n_pairs: Optional[int] = None,
                     scheme: str = "general-parity") -> Circuit:
    """CNOT recovery for a single-pair error.

    ``four-qubit``: +2 on pair 1 -> CNOT(2'->1), CNOT(2->1'); -2 on pair 1 ->
    CNOT(2->1), CNOT(2'->1'); pair 2 mirrors with the pairs swapped.

    ``general-parity``: the erased bit i_l of the hit pair equals the XOR of
    the first qubits of all other pairs. Reset qubit l to 0 (X if it reads 1),
    CNOT every other pair's first qubit into it, then make l' = NOT l with
    CNOT(l->l'), preceded by X on l' when the pair collapsed to |00>.
    """
    outcomes = tuple(int(o) for o in outcomes)
    n_pairs = len(outcomes) if n_pairs is None else n_pairs
    if len(outcomes) != n_pairs:
        raise InvalidArgumentError("one outcome per pair")
    if any(o not in (-2, 0, 2) for o in outcomes):
        raise InvalidArgumentError(f"outcomes must be -2, 0 or +2: {outcomes}")
    n = 2 * n_pairs
    hit = [l for l, o in enumerate(outcomes, start=1) if o != 0]
    if len(hit) > 1:
        raise UncorrectablePatternError(f"errors on pairs {hit}; only single-pair errors are correctable")
    if not hit:
        return Circuit(n)
    l = hit[0]
    sign = outcomes[l - 1]
    first, primed = 2 * l - 1, 2 * l

    if scheme == "four-qubit":
        if n_pairs != 2:
            raise InvalidArgumentError("the four-qubit scheme needs exactly two pairs")
        o_first, o_primed = (3, 4) if l == 1 else (1, 2)
        if sign > 0:
            gates = (Gate("cnot", first, o_primed), Gate("cnot", primed, o_first))
        else:
            gates = (Gate("cnot", first, o_first), Gate("cnot", primed, o_primed))
        return Circuit(n, gates)
    if scheme != "general-parity":
        raise InvalidArgumentError(f"unknown recovery scheme {scheme!r}")

    gates = []
    if sign > 0:
        gates.append(Gate("x", first))
    for m in range(1, n_pairs + 1):
        if m != l:
            gates.append(Gate("cnot", first, 2 * m - 1))
    if sign < 0:
        gates.append(Gate("x", primed))
    gates.append(Gate("cnot", primed, first))
    return Circuit(n, tuple(gates))


@dataclass(frozen=True, eq=False)
class RoundTripReport:
    injected_error: str
    syndrome: Syndrome
    recovery: Circuit
    logical_fidelity: float
    success: bool
    note: str = ""


def _code_info(code: str, n_logical: int):
    if code == "four-qubit":
        if n_logical != 1:
            raise InvalidArgumentError("the four-qubit code carries one logical qubit")
        return 2, encode4_state, decode4, "four-qubit"
    if code == "general-parity":
        return n_logical + 1, encode_general, decode_general, "general-parity"
    raise InvalidArgumentError(f"unknown code {code!r}; expected four-qubit or general-parity")


def encode4_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return encode4(psi[0], psi[1])


def inject_error(encoded, operator) -> Tuple[Optional[np.ndarray], float]:
    """Normalized ``A psi`` and its norm; ``None`` when the error has no amplitude."""
    image = np.asarray(operator, dtype=complex) @ encoded
    amp = float(np.linalg.norm(image))
    if amp <= 1e-12:
        return None, amp
    return image / amp, amp


def roundtrip(psi, family: KrausFamily, label: Optional[str] = None, code: str = "general-parity",
              seed=None) -> RoundTripReport:
    """Encode, inject one named error, measure, recover, decode.

    ``label=None`` injects nothing. Errors with zero amplitude on the encoded
    state are avoided outright and reported as such.
    """
    psi = normalize(psi)
    L = n_qubits_of(psi.shape[0])
    n_pairs, enc, dec, scheme = _code_info(code, L)
    encoded = enc(psi)
    if family.n_qubits != 2 * n_pairs:
        raise InvalidArgumentError(f"family acts on {family.n_qubits} qubits, code on {2 * n_pairs}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    note = ""
    state = encoded
    name = label or "none"
    if label is not None:
        state, amp = inject_error(encoded, family[label])
        if state is None:
            note = "error has zero amplitude on code"
            state = encoded
    syn = measure_syndrome(state, n_pairs, rng)
    circ = recovery_circuit(syn.outcomes, n_pairs, scheme)
    recovered = apply_circuit(circ, syn.post_state)
    decoded = dec(recovered)
    fid = min(1.0 + 1e-12, float(abs(np.vdot(psi, decoded)) ** 2))
    return RoundTripReport(name, syn, circ, fid, fid >= 1 - 1e-10, note)


@dataclass
class MonteCarloReport:
    trials: int
    seed: int
    mean_fidelity: float
    std_error: float
    syndrome_counts: Dict[Tuple[int, ...], int]
    outcome_counts: Dict[str, int]
    outcome_mean_fidelity: Dict[str, float]
    uncorrectable: int
    recoveries: Dict[Tuple[int, ...], List[str]] = field(default_factory=dict)
    fidelities: Optional[np.ndarray] = None


def monte_carlo(psi, family: KrausFamily, trials: int, seed: int = 0,
                code: str = "general-parity") -> MonteCarloReport:
    """Sample one Kraus branch per trial, then syndrome, recover and score.

    Trial t uses its own generator ``default_rng([seed, t])``. The score is
    the overlap ``|<enc(psi)|phi>|^2`` of the recovered state with the ideal
    encoding, which equals the decoded logical fidelity inside the code space
    and stays defined when the completed no-error branch deforms the state.
    Multi-pair syndromes are counted as uncorrectable and left unrecovered.
    """
    if family.completeness_residual > COMPLETE_TOL:
        raise IncompleteFamilyError(
            f"Monte Carlo needs a complete family (residual {family.completeness_residual:.3e})",
            family.completeness_residual)
    if trials < 1:
        raise InvalidArgumentError("need at least one trial")
    psi = normalize(psi)
    L = n_qubits_of(psi.shape[0])
    n_pairs, enc, _, scheme = _code_info(code, L)
    if family.n_qubits != 2 * n_pairs:
        raise InvalidArgumentError(f"family acts on {family.n_qubits} qubits, code on {2 * n_pairs}")
    encoded = enc(psi)
    branches = family.stacked() @ encoded
    probs = np.sum(np.abs(branches) ** 2, axis=1)
    probs = probs / probs.sum()

    fids = np.empty(trials)
    syndrome_counts: Dict[Tuple[int, ...], int] = {}
    outcome_counts = {lab: 0 for lab in family.labels}
    outcome_sum = {lab: 0.0 for lab in family.labels}
    recoveries: Dict[Tuple[int, ...], List[str]] = {}
    uncorrectable = 0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        a = int(rng.choice(len(family), p=probs))
        state = branches[a] / np.linalg.norm(branches[a])
        syn = measure_syndrome(state, n_pairs, rng)
        try:
            circ = recovery_circuit(syn.outcomes, n_pairs, scheme)
            recovered = apply_circuit(circ, syn.post_state)
            recoveries.setdefault(syn.outcomes, circ.describe())
        except UncorrectablePatternError:
            uncorrectable += 1
            recovered = syn.post_state
        fid = float(abs(np.vdot(encoded, recovered)) ** 2)
        fids[t] = fid
        syndrome_counts[syn.outcomes] = syndrome_counts.get(syn.outcomes, 0) + 1
        lab = family.labels[a]
        outcome_counts[lab] += 1
        outcome_sum[lab] += fid
    mean = float(fids.mean())
    se = float(fids.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    per = {lab: outcome_sum[lab] / c for lab, c in outcome_counts.items() if c}
    return MonteCarloReport(trials, seed, mean, se, syndrome_counts, outcome_counts, per,
                            uncorrectable, recoveries, fids)


def exact_recovery_fidelity(psi, family: KrausFamily, code: str = "general-parity") -> float:
    """Expected post-recovery overlap from explicit channel composition:
    ``sum_a sum_s |<enc|R_s P_s A_a|enc>|^2`` over Kraus operators a and
    syndrome patterns s (uncorrectable patterns get the identity)."""
    psi = normalize(psi)
    L = n_qubits_of(psi.shape[0])
    n_pairs, enc, _, scheme = _code_info(code, L)
    encoded = enc(psi)
    rho = np.outer(encoded, encoded.conj())
    ops = family.stacked()
    rho = np.einsum("aij,jk,alk->il", ops, rho, ops.conj())
    total = 0.0
    vals = _pair_values(n_pairs)
    patterns = {tuple(col) for col in vals.T}
    for pattern in sorted(patterns):
        proj = syndrome_projector(pattern)
        block = rho * np.outer(proj, proj)
        try:
            circ = recovery_circuit(pattern, n_pairs, scheme)
            perm = np.arange(len(encoded))
            for gate in circ.gates:
                perm = _gate_permutation(gate, 2 * n_pairs)[perm]
            r = np.zeros((len(encoded), len(encoded)))
            r[perm, np.arange(len(encoded))] = 1.0
        except UncorrectablePatternError:
            r = np.eye(len(encoded))
        out = r @ block @ r.T
        total += float(np.real(np.vdot(encoded, out @ encoded)))
    return total
