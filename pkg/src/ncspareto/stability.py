"""Switched closed-loop assembly and Lyapunov LMI certification.

The closed loop under bounded packet dropouts is a switched linear system
Gamma(k+1) = Phi_sigma(k) Gamma(k) with one mode per buffer read depth.
Stability under arbitrary switching is certified by finding positive
definite P_1..P_M with Phi_i^T P_j Phi_i - P_i <= -eps*I for every mode
pair.  The feasibility search is a projection-splitting method; its output
is never trusted directly -- ``verify_certificate`` (plain symmetric
eigenvalue checks) is the sole arbiter of validity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .numerics import spectral_radius, sym_eig
from .plant import DiscretePlant

DEFAULT_MARGIN = 1e-6
DEFAULT_BUDGET = 5000
DEFAULT_SCALE_CAP = 1e6
# Internal cone shift targeted by the solver; certificates are rescaled
# towards the cap before verification, so this only sets solver geometry.
_SOLVER_SHIFT = 1e-3
_CHECK_EVERY = 25
# Relative slack on the margin checks so a certificate is not rejected for
# last-bit rounding.
_VERIFY_SLACK = 1e-6


@dataclass(frozen=True, eq=False)
class GainSchedule:
    """Feedback gain rows K_1..K_M; row q is applied at buffer depth q."""

    gains: np.ndarray  # (M_drop, m, n)

    def __post_init__(self):
        K = np.asarray(self.gains, dtype=float)
        if K.ndim == 2:  # rows of single-input gains
            K = K[:, None, :]
        if K.ndim != 3 or K.shape[0] < 1:
            raise ConfigError(f"gains must have shape (M, m, n), got {K.shape}")
        if not np.all(np.isfinite(K)):
            raise ConfigError("gain entries must be finite")
        object.__setattr__(self, "gains", K)

    @property
    def M_drop(self) -> int:
        return self.gains.shape[0]

    @property
    def m(self) -> int:
        return self.gains.shape[1]

    @property
    def n(self) -> int:
        return self.gains.shape[2]

    @property
    def flat(self) -> np.ndarray:
        return self.gains.ravel().copy()

    @classmethod
    def from_flat(cls, genes, M_drop: int, n: int, m: int = 1) -> "GainSchedule":
        genes = np.asarray(genes, dtype=float).ravel()
        if genes.size != M_drop * m * n:
            raise ConfigError(
                f"expected {M_drop * m * n} gains for M={M_drop}, m={m}, n={n}, "
                f"got {genes.size}"
            )
        return cls(genes.reshape(M_drop, m, n))


@dataclass(frozen=True, eq=False)
class SwitchedClosedLoop:
    phis: list  # M_drop matrices of size (n*M_drop, n*M_drop)
    n: int
    M_drop: int


@dataclass(frozen=True, eq=False)
class LyapunovCertificate:
    Ps: list  # M_drop symmetric positive definite matrices
    margin: float
    iterations: int

    def to_json_dict(self) -> dict:
        return {
            "margin": self.margin,
            "P": [P.tolist() for P in self.Ps],
            "iterations": self.iterations,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "LyapunovCertificate":
        return cls(
            Ps=[np.asarray(P, float) for P in d["P"]],
            margin=float(d["margin"]),
            iterations=int(d["iterations"]),
        )


def build_switched(p: DiscretePlant, gains: GainSchedule) -> SwitchedClosedLoop:
    """Assemble the switched matrices Phi_1..Phi_M of the augmented loop.

    Mode z has F (plus G K_1 for z = 1) in the top-left block, G K_z in
    block column z for z >= 2, and a shifted identity below.
    """
    if gains.n != p.n or gains.m != p.m:
        raise ConfigError(
            f"gain dimensions ({gains.m}x{gains.n}) do not match plant "
            f"({p.m} inputs, order {p.n})"
        )
    n, M = p.n, gains.M_drop
    phis = []
    for z in range(1, M + 1):
        Phi = np.zeros((n * M, n * M))
        Phi[:n, :n] = p.F
        if z == 1:
            Phi[:n, :n] += p.G @ gains.gains[0]
        else:
            Phi[:n, (z - 1) * n : z * n] = p.G @ gains.gains[z - 1]
        if M > 1:
            Phi[n:, : n * (M - 1)] = np.eye(n * (M - 1))
        phis.append(Phi)
    return SwitchedClosedLoop(phis, n, M)


def schur_precheck(s: SwitchedClosedLoop) -> bool:
    """Cheap necessary condition: every mode matrix must be Schur stable."""
    return all(spectral_radius(Phi) < 1.0 for Phi in s.phis)


def _constraint_blocks(s: SwitchedClosedLoop, Ps: list) -> list:
    out = []
    for i, Phi in enumerate(s.phis):
        for Pj in Ps:
            S = Phi.T @ Pj @ Phi - Ps[i]
            out.append(0.5 * (S + S.T))
    return out


def verify_certificate(s: SwitchedClosedLoop, c: LyapunovCertificate) -> bool:
    """Check a certificate by direct eigenvalue computation.

    True iff every P_i has lambda_min >= margin and every mode pair satisfies
    lambda_max(Phi_i^T P_j Phi_i - P_i) <= -margin (both with a tiny relative
    slack).  This is the trusted side of the dual route; the solver is not.
    """
    if len(c.Ps) != s.M_drop:
        return False
    eps = c.margin * (1.0 - _VERIFY_SLACK)
    for P in c.Ps:
        if P.shape != s.phis[0].shape:
            return False
        w, _ = sym_eig(P, tol=1e-9)
        if w[0] < eps:
            return False
    for S in _constraint_blocks(s, c.Ps):
        w, _ = sym_eig(S, tol=1e-9)
        if w[-1] > -eps:
            return False
    return True


def _clamp_stack(mats: np.ndarray, lo, hi) -> np.ndarray:
    """Eigenvalue clamp of a stack of symmetric matrices."""
    S = 0.5 * (mats + np.transpose(mats, (0, 2, 1)))
    w, V = np.linalg.eigh(S)
    w = np.clip(w, lo, hi)
    return np.einsum("kij,kj,klj->kil", V, w, V)


class _FeasibilityProblem:
    """Stacked-variable geometry for the coupled LMIs.

    Variable: (P_1..P_M, Q_11..Q_MM) with the affine coupling set
    Q_ij = P_i - Phi_i^T P_j Phi_i and the cone product
    {shift*I <= P_i <= cap*I} x {Q_ij >= shift*I}.  Projection onto the
    coupling set is a prefactored linear least-squares solve.
    """

    def __init__(self, s: SwitchedClosedLoop, cap: float):
        self.M = s.M_drop
        self.N = s.phis[0].shape[0]
        self.cap = cap
        M, N = self.M, self.N
        NN = N * N
        B = np.zeros((M * M * NN, M * NN))
        for i, Phi in enumerate(s.phis):
            # row-major flatten: flat(Phi^T P Phi) = kron(Phi^T, Phi^T) flat(P)
            Ki = np.kron(Phi.T, Phi.T)
            for j in range(M):
                r = (i * M + j) * NN
                B[r : r + NN, i * NN : (i + 1) * NN] += np.eye(NN)
                B[r : r + NN, j * NN : (j + 1) * NN] -= Ki
        self.B = B
        self.cho = np.linalg.cholesky(np.eye(M * NN) + B.T @ B)

    def proj_cone(self, p, q):
        M, N = self.M, self.N
        P = _clamp_stack(p.reshape(M, N, N), _SOLVER_SHIFT, self.cap)
        Q = _clamp_stack(q.reshape(M * M, N, N), _SOLVER_SHIFT, None)
        return P.ravel(), Q.ravel()

    def proj_affine(self, p, q):
        rhs = p + self.B.T @ q
        y = np.linalg.solve(self.cho, rhs)
        pn = np.linalg.solve(self.cho.T, y)
        return pn, self.B @ pn

    def unstack(self, p) -> list:
        N = self.N
        return [
            0.5 * (blk + blk.T)
            for blk in p.reshape(self.M, N, N)
        ]


def certify(
    s: SwitchedClosedLoop,
    eps: float = DEFAULT_MARGIN,
    budget: int = DEFAULT_BUDGET,
    cap: float = DEFAULT_SCALE_CAP,
) -> LyapunovCertificate | None:
    """Search for a Lyapunov certificate; None means not certified in budget.

    Projection splitting (Douglas-Rachford over the cone product and the
    coupling affine set; plain alternation stalls on near-marginal spectra)
    with a consistency projection and an eigenvalue verification of each
    candidate.  A returned certificate always passes verify_certificate.
    """
    if not (eps > 0):
        raise ConfigError("certification margin must be positive")
    if budget < 1:
        raise ConfigError("iteration budget must be >= 1")
    prob = _FeasibilityProblem(s, cap)
    N = prob.N
    zp = np.tile(np.eye(N).ravel(), prob.M)
    zq = prob.B @ zp
    for it in range(1, budget + 1):
        cp_, cq_ = prob.proj_cone(zp, zq)
        ap_, aq_ = prob.proj_affine(2 * cp_ - zp, 2 * cq_ - zq)
        zp = zp + ap_ - cp_
        zq = zq + aq_ - cq_
        if it % _CHECK_EVERY == 0 or it == budget:
            cand, _ = prob.proj_affine(cp_, cq_)
            Ps = prob.unstack(cand)
            cert = _finish(s, Ps, eps, cap, it)
            if cert is not None:
                return cert
    return None


def _finish(s, Ps, eps, cap, iterations) -> LyapunovCertificate | None:
    """Rescale a consistent candidate towards the cap and verify it."""
    mP = min(np.linalg.eigvalsh(P)[0] for P in Ps)
    if mP <= 0:
        return None
    top = max(np.linalg.eigvalsh(P)[-1] for P in Ps)
    mQ = min(-np.linalg.eigvalsh(S)[-1] for S in _constraint_blocks(s, Ps))
    if mQ <= 0:
        return None
    # The constraints are homogeneous in P, so scaling lifts both margins.
    c = cap / top
    if min(mP, mQ) * c < eps:
        return None
    cert = LyapunovCertificate([c * P for P in Ps], eps, iterations)
    return cert if verify_certificate(s, cert) else None


def lyapunov_sequence(
    s: SwitchedClosedLoop, c: LyapunovCertificate, modes, x0
) -> np.ndarray:
    """V(k) = Gamma(k)^T P_sigma(k) Gamma(k) along the switched iteration.

    ``modes`` is the 1-based mode sequence (buffer read depth per step);
    Gamma(0) stacks x0 over zero pre-history.
    """
    modes = np.asarray(modes, dtype=int)
    N = s.phis[0].shape[0]
    gamma = np.zeros(N)
    gamma[: s.n] = np.asarray(x0, float).ravel()
    V = np.empty(len(modes) + 1)
    for k, mode in enumerate(modes):
        V[k] = gamma @ c.Ps[mode - 1] @ gamma
        gamma = s.phis[mode - 1] @ gamma
    # closing sample uses the mode that would read the buffer next; the
    # decrease property only needs consecutive pairs, and the last recorded
    # transition i->j is (modes[-1], modes[-1]) by this convention.
    V[-1] = gamma @ c.Ps[modes[-1] - 1] @ gamma
    return V
