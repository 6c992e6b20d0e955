"""Moment relaxation hierarchy for polynomial optimization.

Q_r relaxes min f over K = {g_j >= 0} to min L_y(f) over pseudo-moments y
with M_r(y) >= 0 and M_{r-r_j}(g_j y) >= 0, r_j = ceil(deg g_j / 2). Its
dual searches Putinar representations f - lambda = sigma_0 + sum sigma_j g_j.
The simplified relaxation Q-hat keeps a single moment matrix at the minimal
order d and replaces each localizing block by the scalar row L_y(g_j) >= 0;
its dual multipliers are nonnegative scalars. Q-hat is exact for SOS-convex
data, which solve_hierarchy detects and reports as a single-shot stop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._compile import (
    MomentSdp,
    MomentSolution,
    MomentStatus,
    localizing_tensor,
    moment_tensor,
    objective_vector,
    scalar_row_tensor,
    y0_row,
    BlockSpec,
)
from .moments import MomentVector, flatness, mean_point, moment_matrix
from .poly import (
    Polynomial,
    PreconditionFailure,
    SemialgebraicSet,
    monomial_basis,
)
from .sdp import SolverOptions, min_eigenvalue
from .sos import SosWitness, is_sos_convex


@dataclass(frozen=True)
class PolyOptProblem:
    """min f(x) over x in K."""

    objective: Polynomial
    feasible_set: SemialgebraicSet

    def __post_init__(self):
        if self.objective.n != self.feasible_set.n:
            raise PreconditionFailure(
                "variable counts agree",
                f"f has {self.objective.n}, K has {self.feasible_set.n}",
            )

    @property
    def n(self) -> int:
        return self.objective.n

    def min_order(self) -> int:
        """Smallest admissible relaxation order."""
        r_obj = (self.objective.degree() + 1) // 2
        half = self.feasible_set.half_degrees()
        return max([r_obj, 1] + list(half))


class CertificateRejected(RuntimeError):
    """Dual certificate reconstruction missed the residual tolerance."""

    def __init__(self, residual: float, detail: str = ""):
        self.residual = residual
        msg = f"certificate rejected: residual {residual:.3e}"
        super().__init__(msg if not detail else f"{msg} ({detail})")


@dataclass
class PutinarCertificate:
    """f - lambda_star = sigma_0 + sum_j sigma_j g_j with SOS sigma_j.

    For a Q-hat dual the sigma_j, j >= 1, degenerate to nonnegative scalars
    (constant witnesses over the basis {1}).
    """

    lambda_star: float
    sigmas: List[SosWitness]  # sigma_0, ..., sigma_m
    residual: float

    def scalar_multipliers(self) -> Optional[List[float]]:
        """The lambda_j when every sigma_j (j >= 1) is a constant; else None."""
        out = []
        for w in self.sigmas[1:]:
            if w.gram.shape != (1, 1) or any(sum(a) != 0 for a in w.basis):
                return None
            out.append(float(w.gram[0, 0]))
        return out

    def multiplier_polynomials(self, n: int) -> List[Polynomial]:
        return [w.reconstruct(n) for w in self.sigmas]

    def defect(self, problem: PolyOptProblem) -> Polynomial:
        polys = self.multiplier_polynomials(problem.n)
        acc = problem.objective - Polynomial.constant(problem.n, self.lambda_star)
        acc = acc - polys[0]
        for w, g in zip(polys[1:], problem.feasible_set.constraints):
            acc = acc - w * g
        return acc

    def qc_form_report(self) -> Dict[str, bool]:
        """A posteriori check whether the certificate lands in the convex
        Putinar cone: scalar multipliers and an SOS-convex sigma_0."""
        scalars = self.scalar_multipliers()
        report = {"scalar_multipliers": scalars is not None}
        # sigma_0 as a polynomial; SOS-convexity decided on its own merits
        n = len(self.sigmas[0].basis[0]) if self.sigmas[0].basis else 1
        sigma0 = self.sigmas[0].reconstruct(n)
        report["sigma0_sos_convex"] = bool(is_sos_convex(sigma0).is_sos_convex)
        return report


@dataclass
class RelaxationResult:
    order: int
    lower_bound: float
    moments: Optional[MomentVector]
    dual_certificate: Optional[PutinarCertificate] = None
    exactness: str = "none"  # flat_rank | convex_mean_point | sos_convex_single_shot
    minimizer: Optional[np.ndarray] = None
    kind: str = "qr"  # "qhat" | "qr"
    status: str = "optimal"
    note: str = ""


def ball_augment(K: SemialgebraicSet, M: float) -> SemialgebraicSet:
    """Append the redundant ball constraint M^2 - ||X||^2 >= 0."""
    if not M > 0:
        raise PreconditionFailure("M > 0", str(M))
    terms = {tuple([0] * K.n): M * M}
    for i in range(K.n):
        a = [0] * K.n
        a[i] = 2
        terms[tuple(a)] = -1.0
    g = Polynomial.make(K.n, terms)
    return SemialgebraicSet(K.n, K.constraints + (g,), ball_bound=float(M))


def build_qr(problem: PolyOptProblem, r: int) -> MomentSdp:
    """Order-r moment relaxation: min L_y(f), M_r(y) >= 0,
    M_{r-r_j}(g_j y) >= 0, y_0 = 1."""
    f, K = problem.objective, problem.feasible_set
    n = K.n
    half = list(K.half_degrees())
    if 2 * r < max([f.degree()] + [2 * rj for rj in half]):
        raise PreconditionFailure(
            "2r >= max(deg f, max_j 2 r_j)",
            f"r = {r}, deg f = {f.degree()}, r_j = {half}",
        )
    blocks = [BlockSpec("moment", moment_tensor(n, r, r))]
    for j, (g, rj) in enumerate(zip(K.constraints, half), start=1):
        blocks.append(
            BlockSpec(f"localizing[{j}]", localizing_tensor(n, r, r - rj, g))
        )
    c, c0 = objective_vector(n, r, f)
    row, rhs = y0_row(n, r)
    return MomentSdp(
        n=n,
        order=r,
        objective=c,
        const_term=c0,
        blocks=blocks,
        eq_rows=row[None, :],
        eq_rhs=np.array([rhs]),
    )


def build_qhat(problem: PolyOptProblem) -> MomentSdp:
    """Simplified convex relaxation: min L_y(f), M_d(y) >= 0,
    L_y(g_j) >= 0 as scalar rows, y_0 = 1; d is the minimal order."""
    f, K = problem.objective, problem.feasible_set
    n = K.n
    d = problem.min_order()
    blocks = [BlockSpec("moment", moment_tensor(n, d, d))]
    for j, g in enumerate(K.constraints, start=1):
        blocks.append(BlockSpec(f"scalar[{j}]", scalar_row_tensor(n, d, g)))
    c, c0 = objective_vector(n, d, f)
    row, rhs = y0_row(n, d)
    return MomentSdp(
        n=n,
        order=d,
        objective=c,
        const_term=c0,
        blocks=blocks,
        eq_rows=row[None, :],
        eq_rhs=np.array([rhs]),
    )


def recover_dual_certificate(
    problem: PolyOptProblem,
    solution: MomentSolution,
    r: int,
    kind: str = "qr",
) -> PutinarCertificate:
    """Assemble the Putinar certificate from the Gram blocks of a solved
    relaxation and verify the reconstruction identity.

    lambda_star is the multiplier of the y_0 = 1 row; each localizing Gram
    becomes an SOS witness for sigma_j (scalar lambda_j for Q-hat rows).
    """
    if not solution.is_optimal:
        raise PreconditionFailure("solution optimal", solution.status.value)
    f, K = problem.objective, problem.feasible_set
    n = K.n
    lam_star = float(solution.eq_multipliers[0])
    half = list(K.half_degrees())

    sigmas: List[SosWitness] = []
    for j, G in enumerate(solution.gram_blocks):
        if j == 0:
            basis = monomial_basis(n, r)
        elif kind == "qhat":
            basis = monomial_basis(n, 0)
        else:
            basis = monomial_basis(n, r - half[j - 1])
        scale = 1.0 + float(np.max(np.abs(G)))
        if min_eigenvalue(G) < -1e-7 * scale:
            raise CertificateRejected(
                float(min_eigenvalue(G)), f"Gram block {j} not PSD"
            )
        sigmas.append(SosWitness(basis, np.asarray(G, dtype=float), 0.0))

    cert = PutinarCertificate(lam_star, sigmas, residual=0.0)
    cert.residual = cert.defect(problem).l1_norm()
    if cert.residual > 1e-6 * (1.0 + f.l1_norm()):
        raise CertificateRejected(cert.residual)
    return cert


def lagrangian(
    f: Polynomial, lam: Sequence[float], fstar: float, K: SemialgebraicSet
) -> Polynomial:
    """L_f = f - fstar - sum_j lam_j g_j."""
    lam = [float(v) for v in lam]
    if len(lam) != len(K.constraints):
        raise PreconditionFailure(
            "dim(lambda) = m", f"{len(lam)} != {len(K.constraints)}"
        )
    if any(v < 0 for v in lam):
        raise PreconditionFailure("lambda >= 0", str(lam))
    acc = f - Polynomial.constant(f.n, fstar)
    for v, g in zip(lam, K.constraints):
        if v != 0.0:
            acc = acc - v * g
    return acc


def kkt_residuals(
    f: Polynomial,
    lam: Sequence[float],
    fstar: float,
    K: SemialgebraicSet,
    x_star: Sequence[float],
) -> Dict[str, object]:
    """Stationarity and complementarity of the Lagrangian at a candidate."""
    L = lagrangian(f, lam, fstar, K)
    x = np.asarray(x_star, dtype=float)
    grad = np.array([p.eval(x) for p in L.gradient()])
    comp = [float(v * g.eval(x)) for v, g in zip(lam, K.constraints)]
    return {
        "gradient_norm": float(np.linalg.norm(grad)),
        "complementarity": comp,
        "lagrangian_value": float(L.eval(x)),
    }


@dataclass
class HierarchyOptions:
    tol: float = 1e-6
    rank_tau: float = 1e-6
    archimedean_waiver: bool = False
    convexity_samples: int = 500
    seed: int = 0
    solver: SolverOptions = field(default_factory=SolverOptions)


def _feasible_within(K: SemialgebraicSet, x: np.ndarray, tol: float) -> bool:
    return all(g.eval(x) >= -tol * (1.0 + g.l1_norm()) for g in K.constraints)


def _sampled_convexity(
    polys: Sequence[Polynomial], n: int, box: float, samples: int, seed: int
) -> bool:
    """Min-eigenvalue spot check of every Hessian over a box; a failed point
    disproves convexity, success is only sampled evidence."""
    rng = np.random.default_rng(seed)
    hessians = [p.hessian() for p in polys]
    pts = rng.uniform(-box, box, size=(samples, n))
    for x in pts:
        for H in hessians:
            Hx = np.array([[h.eval(x) for h in row] for row in H])
            scale = 1.0 + float(np.max(np.abs(Hx)))
            if min_eigenvalue(0.5 * (Hx + Hx.T)) < -1e-7 * scale:
                return False
    return True


def strict_convexity_probe(
    problem: PolyOptProblem, samples: int = 500, seed: int = 0
) -> Dict[str, float]:
    """Diagnostic delta estimate: min over sampled K of min eig Hess f."""
    K = problem.feasible_set
    box = K.ball_bound if K.ball_bound is not None else 2.0
    rng = np.random.default_rng(seed)
    hess = problem.objective.hessian()
    delta = np.inf
    kept = 0
    for x in rng.uniform(-box, box, size=(samples, K.n)):
        if not K.contains(x):
            continue
        kept += 1
        Hx = np.array([[h.eval(x) for h in row] for row in hess])
        delta = min(delta, min_eigenvalue(0.5 * (Hx + Hx.T)))
    return {"delta_estimate": float(delta), "samples_in_set": float(kept)}


def _attach_minimizer(
    result: RelaxationResult,
    problem: PolyOptProblem,
    x: np.ndarray,
    tag: str,
    tol: float,
) -> bool:
    """Mean-point candidate gatekeeping: the exactness tag is only granted
    when the candidate is feasible and matches the bound."""
    f = problem.objective
    if not _feasible_within(problem.feasible_set, x, 10.0 * tol):
        result.note = (result.note + " mean point infeasible;").strip()
        return False
    fx = f.eval(x)
    if fx > result.lower_bound + tol * (1.0 + abs(result.lower_bound)):
        result.note = (
            result.note + f" mean point value {fx:.6g} above bound;"
        ).strip()
        return False
    result.exactness = tag
    result.minimizer = x
    return True


def solve_hierarchy(
    problem: PolyOptProblem,
    r_max: int = 5,
    options: Optional[HierarchyOptions] = None,
) -> List[RelaxationResult]:
    """Q-hat first, then Q_r for r = r_min..r_max.

    Stops at Q-hat with exactness = sos_convex_single_shot when f and every
    -g_j carry SOS-convexity certificates (single-shot exactness; the
    minimizer is the mean point). Otherwise ascends r, applying in order the
    flatness test and the sampled-convexity mean-point test, stopping when
    one fires. Solver failures are recorded per order and the loop continues.
    """
    opts = options if options is not None else HierarchyOptions()
    K = problem.feasible_set
    if K.ball_bound is None and not opts.archimedean_waiver:
        raise PreconditionFailure(
            "Archimedean ball bound recorded or waiver set",
            "pass a SemialgebraicSet with ball_bound, apply ball_augment, "
            "or set archimedean_waiver",
        )
    results: List[RelaxationResult] = []

    qhat = build_qhat(problem)
    sol = qhat.solve(opts.solver)
    res = RelaxationResult(
        order=qhat.order,
        lower_bound=sol.value,
        moments=qhat.moment_vector(sol) if sol.is_optimal else None,
        kind="qhat",
        status=sol.status.value,
    )
    results.append(res)
    if sol.is_optimal:
        try:
            res.dual_certificate = recover_dual_certificate(
                problem, sol, qhat.order, kind="qhat"
            )
        except CertificateRejected as exc:
            res.note = (res.note + f" {exc};").strip()
        conv_all = is_sos_convex(problem.objective).is_sos_convex and all(
            is_sos_convex(-1.0 * g).is_sos_convex for g in K.constraints
        )
        if conv_all and _attach_minimizer(
            res, problem, mean_point(res.moments), "sos_convex_single_shot",
            opts.tol,
        ):
            return results

    box = K.ball_bound if K.ball_bound is not None else 2.0
    convex_by_sampling = _sampled_convexity(
        [problem.objective] + [-1.0 * g for g in K.constraints],
        K.n,
        box,
        opts.convexity_samples,
        opts.seed,
    )

    prev_bound = None
    for r in range(problem.min_order(), r_max + 1):
        qr = build_qr(problem, r)
        sol = qr.solve(opts.solver)
        res = RelaxationResult(
            order=r,
            lower_bound=sol.value,
            moments=qr.moment_vector(sol) if sol.is_optimal else None,
            kind="qr",
            status=sol.status.value,
        )
        results.append(res)
        if not sol.is_optimal:
            continue
        if prev_bound is not None and res.lower_bound < prev_bound - 1e-7:
            res.note = (
                res.note
                + f" monotonicity violation vs previous bound {prev_bound!r};"
            ).strip()
        prev_bound = (
            res.lower_bound
            if prev_bound is None
            else max(prev_bound, res.lower_bound)
        )
        try:
            res.dual_certificate = recover_dual_certificate(problem, sol, r)
        except CertificateRejected as exc:
            res.note = (res.note + f" {exc};").strip()

        x_candidate = mean_point(res.moments)
        flat = flatness(res.moments, r, opts.rank_tau)
        if flat.flat:
            if _attach_minimizer(res, problem, x_candidate, "flat_rank", opts.tol):
                break
        elif flat.caveat:
            res.note = (
                res.note
                + f" flatness inconclusive (interior-point ranks "
                + f"{flat.rank_dm1}/{flat.rank_d});"
            ).strip()
        if res.exactness == "none" and convex_by_sampling:
            if _attach_minimizer(
                res, problem, x_candidate, "convex_mean_point", opts.tol
            ):
                break
    return results
