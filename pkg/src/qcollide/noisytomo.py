"""NISQ-style noise injection, shot-based Pauli tomography, readout-error
mitigation, and state reconstruction.

Noise model (per native gate):
* a depolarizing channel on the gate's qubits (``depol_1q`` / ``depol_2q``),
* thermal relaxation on each touched qubit for the gate duration: amplitude
  damping with gamma = 1 - exp(-d/T1) plus extra pure dephasing so the
  off-diagonal decay is exp(-d/T2) overall,
* RZ is virtual: zero duration and noiseless.

Readout: per-qubit confusion flips (p01 = P(read 1 | true 0), p10 = P(read 0 |
true 1)) applied to the outcome distribution before multinomial sampling.
When a noise model is active, the measured qubits additionally relax for the
measurement duration before readout.

Sampling is deterministic given (job, seed); each setting draws from its own
sub-seeded generator so the results are order-independent.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from . import circuit as circ
from .channel import (
    ChoiState,
    KrausChannel,
    amplitude_damping_channel,
    channel_of_choi,
    depolarizing_channel,
    embed_operator,
    phase_damping_channel,
)
from .qmat import DensityMatrix, PAULIS, QubitRegister, nkron, partial_trace

__all__ = [
    "NoiseConfig",
    "TomographyJob",
    "ShotCounts",
    "noisy_channel_of_circuit",
    "apply_noisy_circuit",
    "sample",
    "calibration_jobs",
    "mitigate_readout",
    "reconstruct",
    "ReconstructionResult",
    "counts_to_csv",
    "counts_from_csv",
    "all_settings",
]

DEFAULT_DURATIONS_NS = {"SX": 57.0, "X": 57.0, "ECR": 533.0, "RZ": 0.0, "MEASURE": 1216.0}


@dataclass(frozen=True)
class NoiseConfig:
    """Per-gate error parameters, relaxation times, and readout flips."""

    t1_us: float = 280.0
    t2_us: float = 180.0
    gate_duration_ns: dict = field(default_factory=lambda: dict(DEFAULT_DURATIONS_NS))
    depol_1q: float = 2e-4
    depol_2q: float = 7e-3
    readout: dict = field(default_factory=lambda: {"default": (0.01, 0.01)})
    seed: int = 0

    def __post_init__(self):
        if self.t2_us > 2 * self.t1_us + 1e-12:
            raise ValueError("t2 must not exceed 2*t1")
        for p in (self.depol_1q, self.depol_2q):
            if not 0.0 <= p <= 1.0:
                raise ValueError("depolarizing probabilities must be in [0, 1]")
        for v in self.readout.values():
            if not (0.0 <= v[0] <= 1.0 and 0.0 <= v[1] <= 1.0):
                raise ValueError("readout probabilities must be in [0, 1]")
        for d in self.gate_duration_ns.values():
            if d < 0:
                raise ValueError("durations must be nonnegative")

    def readout_probs(self, label: str) -> tuple[float, float]:
        return tuple(self.readout.get(label, self.readout.get("default", (0.0, 0.0))))

    def duration(self, kind: str) -> float:
        return float(self.gate_duration_ns.get(kind, 0.0))

    def to_text(self) -> str:
        lines = [
            f"t1_us = {self.t1_us!r}",
            f"t2_us = {self.t2_us!r}",
            f"depol_1q = {self.depol_1q!r}",
            f"depol_2q = {self.depol_2q!r}",
            f"seed = {self.seed}",
        ]
        for k, v in sorted(self.gate_duration_ns.items()):
            lines.append(f"duration.{k} = {v!r}")
        for k, v in sorted(self.readout.items()):
            lines.append(f"readout.{k} = {v[0]!r},{v[1]!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "NoiseConfig":
        kwargs: dict = {"gate_duration_ns": dict(DEFAULT_DURATIONS_NS), "readout": {}}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key in ("t1_us", "t2_us", "depol_1q", "depol_2q"):
                kwargs[key] = float(val)
            elif key == "seed":
                kwargs[key] = int(val)
            elif key.startswith("duration."):
                kwargs["gate_duration_ns"][key.split(".", 1)[1]] = float(val)
            elif key.startswith("readout."):
                a, b = val.split(",")
                kwargs["readout"][key.split(".", 1)[1]] = (float(a), float(b))
            else:
                raise ValueError(f"unknown noise config key {key!r}")
        if not kwargs["readout"]:
            kwargs["readout"] = {"default": (0.01, 0.01)}
        return cls(**kwargs)


def _thermal_kraus(noise: NoiseConfig, duration_ns: float):
    """Amplitude damping + extra dephasing for one qubit over a duration."""
    if duration_ns <= 0:
        return None
    t1 = noise.t1_us * 1000.0
    t2 = noise.t2_us * 1000.0
    gamma = 1.0 - np.exp(-duration_ns / t1)
    rate_phi = 1.0 / t2 - 1.0 / (2.0 * t1)
    lam = 1.0 - np.exp(-2.0 * duration_ns * max(rate_phi, 0.0))
    ch = amplitude_damping_channel(gamma)
    if lam > 0:
        pd = phase_damping_channel(lam)
        ch = KrausChannel(
            [kp @ ka for kp in pd.kraus_ops for ka in ch.kraus_ops], validate=False
        )
    return ch


def _compress_kraus(ops, d: int):
    """Reduce a redundant Kraus set to at most d^2 operators via the Choi
    eigendecomposition (exact up to numerical rank)."""
    if len(ops) <= d * d:
        return ops
    choi = np.zeros((d * d, d * d), dtype=complex)
    for k in ops:
        v = k.reshape(-1)
        choi += np.outer(v, v.conj())
    ev, vecs = np.linalg.eigh(choi)
    out = []
    for lam, v in zip(ev, vecs.T):
        if lam > 1e-14:
            out.append(np.sqrt(lam) * v.reshape(d, d))
    return out


def _gate_kraus(gate: circ.Gate, noise: NoiseConfig | None):
    """Kraus operators (on the gate's own qubits) for the noisy gate."""
    u = gate.unitary()
    if noise is None or gate.kind == "RZ":
        return [u]
    if gate.kind not in circ.NATIVE_KINDS:
        raise ValueError(f"noise model requires native gates, got {gate.kind!r}")
    cache = getattr(noise, "_kraus_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(noise, "_kraus_cache", cache)
    if gate.kind in cache:
        return cache[gate.kind]
    nq = len(gate.qubits)
    p = noise.depol_1q if nq == 1 else noise.depol_2q
    ops = [k @ u for k in depolarizing_channel(p, nq).kraus_ops]
    thermal = _thermal_kraus(noise, noise.duration(gate.kind))
    if thermal is not None:
        for pos in range(nq):
            embedded = [embed_operator(k, [pos], nq) for k in thermal.kraus_ops]
            ops = [ke @ k for ke in embedded for k in ops]
    ops = _compress_kraus(ops, 2**nq)
    cache[gate.kind] = ops
    return ops


def _apply_circuit_to_matrix(c: circ.Circuit, mat: np.ndarray,
                             noise: NoiseConfig | None) -> np.ndarray:
    """Propagate an arbitrary matrix through the (noisy) circuit channel."""
    n = c.register.n
    out = np.asarray(mat, dtype=complex)
    for g in c.gates:
        positions = c.register.indices(g.qubits)
        acc = np.zeros_like(out)
        for k in _gate_kraus(g, noise):
            ke = embed_operator(k, positions, n)
            acc += ke @ out @ ke.conj().T
        out = acc
    return out


def apply_noisy_circuit(c: circ.Circuit, rho: DensityMatrix | None = None,
                        noise: NoiseConfig | None = None) -> DensityMatrix:
    """Run the circuit channel on rho (default |0...0>) and return the state."""
    if rho is None:
        mat = np.zeros((c.register.dim, c.register.dim), dtype=complex)
        mat[0, 0] = 1.0
        rho = DensityMatrix(c.register, mat, validate=False)
    if rho.register.labels != c.register.labels:
        raise ValueError("state register does not match circuit register")
    out = _apply_circuit_to_matrix(c, rho.mat, noise)
    return DensityMatrix(c.register, out, validate=False)


def noisy_channel_of_circuit(c: circ.Circuit, noise: NoiseConfig | None) -> KrausChannel:
    """The circuit's CPT map as a Kraus channel (at most 3 qubits)."""
    n = c.register.n
    if n > 3:
        raise ValueError("noisy_channel_of_circuit supports at most 3 qubits")
    d = c.register.dim
    choi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            eij = np.zeros((d, d), dtype=complex)
            eij[i, j] = 1.0
            out = _apply_circuit_to_matrix(c, eij, noise)
            choi += np.kron(out, eij)
    choi /= d
    labels = [f"out{k}" for k in range(n)] + [f"ref{k}" for k in range(n)]
    return channel_of_choi(ChoiState(DensityMatrix(labels, choi, validate=False)))


# --------------------------------------------------------------------------
# Tomography
# --------------------------------------------------------------------------

_SDG = np.diag([1.0, -1.0j]).astype(complex)
_BASIS_ROTATION = {
    "X": circ.H_MATRIX,
    "Y": circ.H_MATRIX @ _SDG,
    "Z": np.eye(2, dtype=complex),
}


def all_settings(k: int) -> tuple[str, ...]:
    """All 3^k Pauli settings in canonical order (X < Y < Z per qubit)."""
    return tuple("".join(s) for s in itertools.product("XYZ", repeat=k))


@dataclass(frozen=True)
class TomographyJob:
    """A complete Pauli tomography job over the measured labels."""

    circuit: circ.Circuit
    measured: tuple[str, ...]
    shots: int = 4096
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "measured", tuple(str(q) for q in self.measured))
        for q in self.measured:
            if q not in self.circuit.register:
                raise ValueError(f"measured label {q!r} not in circuit register")
        if self.shots <= 0:
            raise ValueError("shots must be positive")

    @property
    def settings(self) -> tuple[str, ...]:
        return all_settings(len(self.measured))


@dataclass(frozen=True)
class ShotCounts:
    """Measured (or mitigated, real-valued) counts per setting and bitstring."""

    measured: tuple[str, ...]
    shots: int
    counts: dict  # setting -> {bitstring: count}

    def frequencies(self, setting: str) -> np.ndarray:
        k = len(self.measured)
        vec = np.zeros(2**k)
        for bits, cnt in self.counts[setting].items():
            vec[int(bits, 2)] = cnt
        total = vec.sum()
        return vec / total if total > 0 else vec


def _measurement_probs(rho: DensityMatrix, measured, setting: str,
                       noise: NoiseConfig | None) -> np.ndarray:
    """Outcome distribution for one setting, including readout noise."""
    reg = rho.register
    mat = rho.mat
    n = reg.n
    for q, pauli in zip(measured, setting):
        rot = embed_operator(_BASIS_ROTATION[pauli], [reg.index(q)], n)
        mat = rot @ mat @ rot.conj().T
    rho_rot = DensityMatrix(reg, mat, validate=False)
    if noise is not None:
        thermal = _thermal_kraus(noise, noise.duration("MEASURE"))
        if thermal is not None:
            for q in measured:
                acc = np.zeros_like(rho_rot.mat)
                for k in thermal.kraus_ops:
                    ke = embed_operator(k, [reg.index(q)], n)
                    acc += ke @ rho_rot.mat @ ke.conj().T
                rho_rot = DensityMatrix(reg, acc, validate=False)
    marg = partial_trace(rho_rot, list(measured))
    probs = np.clip(np.diag(marg.mat).real, 0.0, None)
    probs = probs / probs.sum()
    if noise is not None:
        k = len(measured)
        probs = probs.reshape([2] * k)
        for axis, q in enumerate(measured):
            p01, p10 = noise.readout_probs(q)
            conf = np.array([[1 - p01, p10], [p01, 1 - p10]])
            probs = np.moveaxis(
                np.tensordot(conf, np.moveaxis(probs, axis, 0), axes=(1, 0)), 0, axis
            )
        probs = probs.reshape(-1)
    return probs


def sample(job: TomographyJob, noise: NoiseConfig | None = None,
           settings=None) -> ShotCounts:
    """Simulate the tomography job; deterministic given (job, seed)."""
    c = job.circuit
    if noise is not None and any(g.kind not in circ.NATIVE_KINDS for g in c.gates):
        c = circ.transpile(c)
    rho = apply_noisy_circuit(c, noise=noise)
    settings = job.settings if settings is None else tuple(settings)
    k = len(job.measured)
    counts: dict = {}
    for idx, setting in enumerate(settings):
        probs = _measurement_probs(rho, job.measured, setting, noise)
        rng = np.random.default_rng([job.seed, idx])
        draw = rng.multinomial(job.shots, probs)
        counts[setting] = {
            format(b, f"0{k}b"): int(n) for b, n in enumerate(draw) if n > 0
        }
    return ShotCounts(job.measured, job.shots, counts)


def calibration_jobs(register, measured, shots: int = 4096, seed: int = 0):
    """The two 'empty' readout-calibration circuits: all-|0> and all-|1>."""
    reg = register if isinstance(register, QubitRegister) else QubitRegister(register)
    zero = circ.Circuit(reg, [])
    one = circ.Circuit(reg, [circ.Gate("X", (q,)) for q in measured])
    return (
        TomographyJob(zero, measured, shots, seed),
        TomographyJob(one, measured, shots, seed + 1),
    )


def sample_calibration(job: TomographyJob, noise: NoiseConfig | None = None) -> ShotCounts:
    """Sample a calibration circuit in the Z basis only."""
    return sample(job, noise=noise, settings=("Z" * len(job.measured),))


def mitigate_readout(counts: ShotCounts, calib0: ShotCounts, calib1: ShotCounts) -> ShotCounts:
    """Invert per-qubit confusion matrices estimated from the two calibration
    runs; negative entries are clipped and frequencies renormalized."""
    if calib0.measured != counts.measured or calib1.measured != counts.measured:
        raise ValueError("calibration runs must measure the same qubits")
    k = len(counts.measured)
    zkey = "Z" * k
    f0 = calib0.frequencies(zkey).reshape([2] * k)
    f1 = calib1.frequencies(zkey).reshape([2] * k)
    invs = []
    for axis in range(k):
        other = tuple(a for a in range(k) if a != axis)
        m0 = f0.sum(axis=other)  # P(read b | prepared 0)
        m1 = f1.sum(axis=other)  # P(read b | prepared 1)
        conf = np.column_stack([m0, m1])
        if abs(np.linalg.det(conf)) < 1e-9:
            raise ValueError("singular confusion matrix (flip probability >= 0.5)")
        invs.append(np.linalg.inv(conf))
    out: dict = {}
    for setting in counts.counts:
        vec = counts.frequencies(setting).reshape([2] * k)
        for axis, inv in enumerate(invs):
            vec = np.moveaxis(
                np.tensordot(inv, np.moveaxis(vec, axis, 0), axes=(1, 0)), 0, axis
            )
        vec = np.clip(vec.reshape(-1), 0.0, None)
        vec = vec / vec.sum()
        out[setting] = {
            format(b, f"0{k}b"): float(v * counts.shots)
            for b, v in enumerate(vec)
            if v > 0
        }
    return ShotCounts(counts.measured, counts.shots, out)


@dataclass(frozen=True)
class ReconstructionResult:
    state: DensityMatrix
    projection_distance: float


def reconstruct(counts: ShotCounts) -> ReconstructionResult:
    """Linear-inversion tomography followed by PSD/trace-1 projection."""
    k = len(counts.measured)
    settings = all_settings(k)
    missing = [s for s in settings if s not in counts.counts]
    if missing:
        raise ValueError(f"incomplete settings, missing {missing[:3]}...")
    dim = 2**k
    # Pauli-string expectation values, averaged over all compatible settings.
    expectations: dict[str, float] = {"I" * k: 1.0}
    for pstring in itertools.product("IXYZ", repeat=k):
        pstring = "".join(pstring)
        if pstring == "I" * k:
            continue
        vals = []
        for setting in settings:
            if all(p == "I" or p == s for p, s in zip(pstring, setting)):
                freqs = counts.frequencies(setting)
                signs = np.ones(dim)
                for pos, p in enumerate(pstring):
                    if p == "I":
                        continue
                    bit = (np.arange(dim) >> (k - 1 - pos)) & 1
                    signs *= 1.0 - 2.0 * bit
                vals.append(float(freqs @ signs))
        expectations[pstring] = float(np.mean(vals))
    est = np.zeros((dim, dim), dtype=complex)
    for pstring, val in expectations.items():
        est += val * nkron(*(PAULIS[c] for c in pstring))
    est /= dim
    est = (est + est.conj().T) / 2
    ev, vecs = np.linalg.eigh(est)
    projected = _project_simplex(ev)
    mat = (vecs * projected) @ vecs.conj().T
    dist = float(np.abs(projected - ev).sum())
    return ReconstructionResult(
        DensityMatrix(QubitRegister(counts.measured), mat, validate=False), dist
    )


def _project_simplex(ev: np.ndarray) -> np.ndarray:
    """Euclidean projection of eigenvalues onto {x >= 0, sum x = 1}."""
    u = np.sort(ev)[::-1]
    css = np.cumsum(u)
    rho_idx = np.nonzero(u + (1.0 - css) / np.arange(1, len(u) + 1) > 0)[0][-1]
    theta = (1.0 - css[rho_idx]) / (rho_idx + 1)
    return np.clip(ev + theta, 0.0, None)


def counts_to_csv(counts: ShotCounts) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["setting", "bitstring", "count"])
    for setting in sorted(counts.counts):
        for bits in sorted(counts.counts[setting]):
            w.writerow([setting, bits, repr(counts.counts[setting][bits])])
    return buf.getvalue()


def counts_from_csv(text: str, measured, shots: int) -> ShotCounts:
    rows = list(csv.reader(io.StringIO(text)))
    out: dict = {}
    for setting, bits, cnt in rows[1:]:
        out.setdefault(setting, {})[bits] = float(cnt)
    return ShotCounts(tuple(measured), shots, out)
