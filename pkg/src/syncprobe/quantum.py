"""Dissipative dynamics of a probed qubit pair.

A qubit q (frequency omega_q = 1, the unit of all frequencies) dissipates
into a zero-temperature bosonic bath with power-law spectral density
J(w) = gamma0 * w**s and is coupled via sigma_q^x sigma_p^x to a
non-dissipating probe qubit p.  Because the inter-qubit coupling is strong
compared with the dissipation, the Lindblad generator is built globally,
from eigenoperators of the full two-qubit Hamiltonian

    H = (omega_q/2) sz_q + (omega_p/2) sz_p + lam * sx_q sx_p.

Everything observable here lives in closed form as well: the module exposes
both the exact 16x16 generator (the trajectory oracle) and the analytic
energies, mixing angles and effective decay rates used to cross-check it.

Conventions
-----------
* hbar = 1, omega_q = 1; times in 1/omega_q, frequencies in omega_q.
* Jump rates use the golden-rule prefactor: rate(w) = 2*pi*J(w).  The bare
  spectral density J is what `spectral_density` returns.
* Density matrices are 4x4 complex arrays in the product basis
  {|up,up>, |up,down>, |down,up>, |down,down>} (q first), vectorized
  row-major.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from .errors import DegeneracyError, NumericalError, ValidationError

OMEGA_Q = 1.0
#: golden-rule prefactor turning the bath spectral density into a jump rate
RATE_PREFACTOR = 2.0 * math.pi

#: tolerance for grouping degenerate transition frequencies, units of omega_q
FREQ_GROUP_TOL = 1e-9

_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_I2 = np.eye(2, dtype=complex)
_I4 = np.eye(4, dtype=complex)

#: sigma^x of the dissipating qubit / of the probe, product basis
SIGMA_X_Q = np.kron(_SX, _I2)
SIGMA_X_P = np.kron(_I2, _SX)


@dataclass(frozen=True)
class ProbeSetup:
    """Physical parameters of one probing configuration (units of omega_q)."""

    omega_p: float
    lam: float
    gamma0: float
    s: float

    def __post_init__(self):
        for name in ("omega_p", "lam", "gamma0", "s"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be finite and > 0, got {v!r}")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on [0, t_final]."""

    t_final: float = 100.0
    n: int = 101

    def __post_init__(self):
        if self.n < 2 or self.t_final <= 0:
            raise ValidationError(f"bad time grid ({self.t_final}, {self.n})")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_final, self.n)

    @property
    def dt(self) -> float:
        return self.t_final / (self.n - 1)


#: canonical 101-point grid used for spectral features
GRID_FEATURES = TimeGrid(100.0, 101)
#: dense diagnostic grid used for Pearson analysis
GRID_DENSE = TimeGrid(100.0, 1001)


def spectral_density(omega: float, gamma0: float, s: float) -> float:
    """Bath spectral density J(w) = gamma0 * w**s; only w > 0 is physical."""
    if omega <= 0:
        raise ValidationError(f"spectral density requested at omega={omega} <= 0")
    return gamma0 * omega**s


@dataclass(frozen=True)
class Eigensystem:
    """Spectrum of the two-qubit Hamiltonian plus closed-form descriptors.

    e1, e2 are the (negative) normal-mode energies; |e1| > |e2| > 0 and the
    four Hamiltonian eigenvalues are {+-e1/2 +- e2/2}.  theta_plus and
    theta_minus are the block mixing angles; gamma1, gamma2 the effective
    decay rates of the |e1|- and |e2|-frequency coherences.
    """

    energies: np.ndarray
    eigenvectors: np.ndarray
    e1: float
    e2: float
    theta_plus: float
    theta_minus: float
    gamma1: float
    gamma2: float


def hamiltonian(setup: ProbeSetup) -> np.ndarray:
    return (
        0.5 * OMEGA_Q * np.kron(_SZ, _I2)
        + 0.5 * setup.omega_p * np.kron(_I2, _SZ)
        + setup.lam * np.kron(_SX, _SX)
    )


def _mode_params(omega_p: float, lam: float):
    """Closed-form (e1, e2, theta_plus, theta_minus).

    The angles are the rotations diagonalizing the even/odd parity blocks
    [[w/2, lam], [lam, -w/2]]; arctan2 keeps them continuous through
    omega_p = omega_q, where the printed arcsin form is branch-ambiguous.
    """
    w_minus = OMEGA_Q - omega_p
    w_plus = OMEGA_Q + omega_p
    a_minus = math.hypot(2.0 * lam, w_minus)
    a_plus = math.hypot(2.0 * lam, w_plus)
    e1 = -(a_minus + a_plus) / 2.0
    e2 = (a_minus - a_plus) / 2.0
    theta_plus = 0.5 * math.atan2(2.0 * lam, w_plus)
    theta_minus = 0.5 * math.atan2(2.0 * lam, w_minus)
    return e1, e2, theta_plus, theta_minus


def eigensystem(setup: ProbeSetup) -> Eigensystem:
    """Diagonalize H and attach the closed-form mode data."""
    energies, vectors = np.linalg.eigh(hamiltonian(setup))
    e1, e2, theta_plus, theta_minus = _mode_params(setup.omega_p, setup.lam)
    tsum = theta_plus + theta_minus
    gamma1 = math.cos(tsum) ** 2 * RATE_PREFACTOR * spectral_density(
        abs(e1), setup.gamma0, setup.s
    )
    gamma2 = math.sin(tsum) ** 2 * RATE_PREFACTOR * spectral_density(
        abs(e2), setup.gamma0, setup.s
    )
    return Eigensystem(
        energies=energies,
        eigenvectors=vectors,
        e1=e1,
        e2=e2,
        theta_plus=theta_plus,
        theta_minus=theta_minus,
        gamma1=gamma1,
        gamma2=gamma2,
    )


@dataclass(frozen=True)
class JumpChannel:
    """One secular jump channel: A(w) lowering by transition frequency w."""

    frequency: float
    operator: np.ndarray
    rate: float


@dataclass(frozen=True)
class Liouvillian:
    """Lindblad generator acting on row-major vectorized 4x4 matrices."""

    generator: np.ndarray
    channels: tuple[JumpChannel, ...]
    setup: ProbeSetup
    eigen: Eigensystem = field(repr=False)


def build_liouvillian(setup: ProbeSetup) -> Liouvillian:
    """Assemble the global secular generator for the given setup.

    Jump operators A(w) = sum_{E_j - E_i = w} <i|sx_q|j> |i><j| collect all
    transitions within FREQ_GROUP_TOL of each other; parity-forbidden
    channels (vanishing matrix elements) are dropped.  Channel rates are
    2*pi*J(w).
    """
    eig = eigensystem(setup)
    if abs(abs(eig.e1) - abs(eig.e2)) <= FREQ_GROUP_TOL:
        raise DegeneracyError(
            f"|E1| = |E2| = {abs(eig.e1)} within tolerance; secular grouping breaks"
        )
    energies, vectors = eig.energies, eig.eigenvectors
    x_elems = vectors.conj().T @ SIGMA_X_Q @ vectors

    groups: list[tuple[float, np.ndarray]] = []
    for i in range(4):
        for j in range(4):
            w = energies[j] - energies[i]
            if w <= FREQ_GROUP_TOL or abs(x_elems[i, j]) < 1e-14:
                continue
            term = x_elems[i, j] * np.outer(vectors[:, i], vectors[:, j].conj())
            for k, (freq, op) in enumerate(groups):
                if abs(freq - w) <= FREQ_GROUP_TOL:
                    groups[k] = (freq, op + term)
                    break
            else:
                groups.append((w, term))

    h = hamiltonian(setup)
    gen = -1j * (np.kron(h, _I4) - np.kron(_I4, h.T))
    channels = []
    for freq, op in sorted(groups):
        rate = RATE_PREFACTOR * spectral_density(freq, setup.gamma0, setup.s)
        ada = op.conj().T @ op
        gen = gen + rate * (
            np.kron(op, op.conj())
            - 0.5 * np.kron(ada, _I4)
            - 0.5 * np.kron(_I4, ada.T)
        )
        channels.append(JumpChannel(frequency=freq, operator=op, rate=rate))
    return Liouvillian(generator=gen, channels=tuple(channels), setup=setup, eigen=eig)


def plus_plus_state() -> np.ndarray:
    """|+>|+> projector, the default initial state."""
    plus = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    psi = np.kron(plus, plus)
    return np.outer(psi, psi.conj())


def validate_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> None:
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise ValidationError(f"density matrix must be 4x4, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValidationError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol or abs(np.trace(rho).imag) > tol:
        raise ValidationError("density matrix trace is not 1")
    if np.min(np.linalg.eigvalsh(rho)) < -tol:
        raise ValidationError("density matrix has negative eigenvalues")


@dataclass(frozen=True)
class Trajectory:
    """Sampled expectation values <sigma^x(t)> of one qubit."""

    observable: str  # "probe_x" or "system_x"
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.observable not in ("probe_x", "system_x"):
            raise ValidationError(f"unknown observable tag {self.observable!r}")
        if self.times.shape != self.values.shape:
            raise ValidationError("times/values length mismatch")


def _eig_propagator(liou: Liouvillian):
    """Eigendecomposition of the generator, or None if too ill-conditioned."""
    evals, right = np.linalg.eig(liou.generator)
    if np.linalg.cond(right) > 1e10:
        return None
    return evals, right


def _rho_of_t(liou: Liouvillian, rho0: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Stack of rho(t), shape (n_times, 4, 4)."""
    dec = _eig_propagator(liou)
    v0 = rho0.reshape(16)
    if dec is not None:
        evals, right = dec
        coeffs = np.linalg.solve(right, v0)
        phases = np.exp(np.outer(evals, times))  # (16, T)
        return (right @ (coeffs[:, None] * phases)).T.reshape(-1, 4, 4)
    # fall back to scaling-and-squaring steps on a uniform grid
    dt = times[1] - times[0]
    step = expm(liou.generator * dt)
    out = np.empty((len(times), 16), dtype=complex)
    v = v0
    out[0] = v
    for k in range(1, len(times)):
        v = step @ v
        out[k] = v
    return out.reshape(-1, 4, 4)


def propagate(
    liou: Liouvillian,
    rho0: np.ndarray,
    grid: TimeGrid = GRID_FEATURES,
    drift_tol: float = 1e-8,
) -> tuple[Trajectory, Trajectory]:
    """Evolve rho0 and sample <sx_q(t)>, <sx_p(t)> on the grid.

    Raises NumericalError if trace, Hermiticity or positivity drift beyond
    drift_tol anywhere along the trajectory.
    """
    validate_density_matrix(rho0)
    times = grid.times
    rhos = _rho_of_t(liou, rho0, times)

    traces = np.einsum("tii->t", rhos)
    if np.max(np.abs(traces - 1.0)) > drift_tol:
        raise NumericalError("trace drift beyond tolerance during propagation")
    herm = np.max(np.abs(rhos - rhos.conj().transpose(0, 2, 1)))
    if herm > drift_tol:
        raise NumericalError("Hermiticity drift beyond tolerance during propagation")
    eigmin = np.min(np.linalg.eigvalsh(0.5 * (rhos + rhos.conj().transpose(0, 2, 1))))
    if eigmin < -drift_tol:
        raise NumericalError("positivity lost during propagation")

    vals_q = np.einsum("tij,ji->t", rhos, SIGMA_X_Q).real
    vals_p = np.einsum("tij,ji->t", rhos, SIGMA_X_P).real
    return (
        Trajectory("system_x", times, vals_q),
        Trajectory("probe_x", times, vals_p),
    )


@dataclass(frozen=True)
class SpectralMode:
    """One generator eigenmode contributing c * exp(eigenvalue * t)."""

    eigenvalue: complex
    amplitude_q: complex
    amplitude_p: complex

    @property
    def rate(self) -> float:
        return -self.eigenvalue.real

    @property
    def frequency(self) -> float:
        return abs(self.eigenvalue.imag)


def spectral_decomposition(liou: Liouvillian, rho0: np.ndarray) -> list[SpectralMode]:
    """Expand both observables over generator eigenmodes.

    <sigma_a^x(t)> = sum_k amplitude_a[k] * exp(eigenvalue[k] * t).  Modes
    are sorted by decay rate, slowest first.
    """
    validate_density_matrix(rho0)
    dec = _eig_propagator(liou)
    if dec is None:
        raise NumericalError("generator numerically defective; use propagate() and fit")
    evals, right = dec
    coeffs = np.linalg.solve(right, rho0.reshape(16))
    w_q = right.T @ SIGMA_X_Q.T.reshape(16)
    w_p = right.T @ SIGMA_X_P.T.reshape(16)
    modes = [
        SpectralMode(eigenvalue=complex(ev), amplitude_q=complex(aq), amplitude_p=complex(ap))
        for ev, aq, ap in zip(evals, w_q * coeffs, w_p * coeffs)
    ]
    modes.sort(key=lambda m: m.rate)
    return modes


@dataclass(frozen=True)
class AsymptoticMode:
    """Slowest surviving oscillation at one transition frequency."""

    frequency: float
    rate: float
    amplitude_q: complex
    amplitude_p: complex


def _slowest_oscillatory_pair(modes: list[SpectralMode], freq_tol: float = 1e-6):
    """Two slowest positive-frequency modes with distinct frequencies."""
    picked: list[SpectralMode] = []
    for m in modes:  # already rate-sorted
        if m.eigenvalue.imag <= 1e-10:
            continue
        if any(abs(m.frequency - p.frequency) <= freq_tol for p in picked):
            continue
        picked.append(m)
        if len(picked) == 2:
            return picked
    raise NumericalError("fewer than two distinct oscillatory mode pairs")


def asymptotic_params(
    setup: ProbeSetup, rho0: np.ndarray
) -> tuple[AsymptoticMode, AsymptoticMode]:
    """Post-transient mode data, ordered as (|E1|-mode, |E2|-mode)."""
    liou = build_liouvillian(setup)
    modes = spectral_decomposition(liou, rho0)
    pair = _slowest_oscillatory_pair(modes)
    out = [
        AsymptoticMode(
            frequency=m.frequency,
            rate=m.rate,
            amplitude_q=m.amplitude_q,
            amplitude_p=m.amplitude_p,
        )
        for m in pair
    ]
    out.sort(key=lambda m: -m.frequency)  # |E1| > |E2|
    return out[0], out[1]


def sync_boundary_s(omega_p: float, lam: float) -> float:
    """Ohmicity index on the no-synchronization line at this probe frequency.

    Solves gamma1(s) = gamma2(s):  s* = log_{|E1|/|E2|} tan^2(th+ + th-).
    """
    if omega_p <= 0 or lam <= 0:
        raise ValidationError("omega_p and lam must be positive")
    e1, e2, theta_plus, theta_minus = _mode_params(omega_p, lam)
    ratio = abs(e1) / abs(e2)
    if abs(ratio - 1.0) < 1e-12:
        raise DegeneracyError("|E1| = |E2|; boundary undefined")
    return math.log(math.tan(theta_plus + theta_minus) ** 2) / math.log(ratio)


def sync_boundary_omega_p(
    s: float, lam: float, bracket: tuple[float, float] = (0.5, 1.6)
) -> float:
    """Probe frequency at which the boundary crosses the given s (by bisection)."""
    f = lambda w: sync_boundary_s(w, lam) - s
    lo, hi = bracket
    if f(lo) * f(hi) > 0:
        raise NumericalError(f"boundary for s={s} not bracketed by {bracket}")
    return brentq(f, lo, hi, xtol=1e-12)


@dataclass(frozen=True)
class DominantMode:
    """Surviving oscillation and the locked phase offset between the qubits."""

    omega_sync: float
    phase_difference: float
    in_phase: bool


def dominant_mode(
    setup: ProbeSetup, rho0: np.ndarray, rate_tol: float = 1e-6
) -> DominantMode:
    """Pick the slower-decaying asymptotic mode; |dphi| < pi/2 means in-phase."""
    mode_a, mode_b = asymptotic_params(setup, rho0)
    if abs(mode_a.rate - mode_b.rate) <= rate_tol * max(mode_a.rate, mode_b.rate):
        raise NumericalError(
            "decay rates equal within tolerance: no dominant mode at the boundary"
        )
    dom = mode_a if mode_a.rate < mode_b.rate else mode_b
    dphi = np.angle(dom.amplitude_q) - np.angle(dom.amplitude_p)
    dphi = float((dphi + math.pi) % (2.0 * math.pi) - math.pi)
    if dphi == -math.pi:  # wrap to (-pi, pi]
        dphi = math.pi
    return DominantMode(
        omega_sync=dom.frequency,
        phase_difference=dphi,
        in_phase=abs(dphi) < math.pi / 2.0,
    )
