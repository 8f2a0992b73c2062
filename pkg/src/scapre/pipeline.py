"""One complete edit, end to end.

Fixed stage order: context statistics, gated concept energy, stabilizer
assembly, channel decoupler (scored on the unedited weights), right-hand
side, closed-form solve, geometry refinement, probe scoring. Every run
returns the edited weights plus a self-describing report.
"""

import time
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import geometry, solver
from .geometry import RefinementResult, bures_distance, refine_weights
from .informax import DecouplerAlpha, build_decoupler
from .matkernel import as_matrix
from .metrics import ProbeScores, probe_scores
from .solver import EraseSpec, assemble_m, sylvester_solve_spectral
from .stabilizer import StabilizerA, assemble_a, build_r, build_s, relative_lambda

__all__ = [
    "EditConfig",
    "EditIntermediates",
    "EditReport",
    "PipelineStageError",
    "ZeroTargetWarning",
    "run_edit",
]


class PipelineStageError(RuntimeError):
    """A stage failed; the stage name rides along for diagnostics."""

    def __init__(self, stage: str, error: BaseException):
        super().__init__(f"stage '{stage}': {error}")
        self.stage = stage


class ZeroTargetWarning(UserWarning):
    """The right-hand side vanished, so the closed-form solution is zero."""


@contextmanager
def _stage(name: str):
    try:
        yield
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(name, exc) from exc


@dataclass(frozen=True)
class EditConfig:
    """Run settings echoed into every report.

    ``lam`` is the absolute ridge weight; leave it ``None`` to use the
    relative rule ``lam_scale * mean diag(S)``. ``beta`` steers the geometry
    refinement (0 disables it).
    """

    lam: float | None = None
    lam_scale: float = 0.1
    beta: float = 0.5
    interpolation_mode: str = geometry.SQRT_BLEND
    target_mode: str = solver.SUBSTITUTE_TARGET
    kron_budget: int = 2**24

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0.0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.lam_scale > 0.0:
            raise ValueError(f"lam_scale must be positive, got {self.lam_scale}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")
        if self.interpolation_mode not in geometry.INTERPOLATION_MODES:
            raise ValueError(
                f"interpolation_mode must be one of {geometry.INTERPOLATION_MODES}, "
                f"got {self.interpolation_mode!r}"
            )
        if self.target_mode not in (solver.ZERO_TARGET, solver.SUBSTITUTE_TARGET):
            raise ValueError(f"unknown target_mode {self.target_mode!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda": self.lam if self.lam is not None else {"relative": self.lam_scale},
            "beta": self.beta,
            "interpolation_mode": self.interpolation_mode,
            "target_mode": self.target_mode,
            "kron_budget": self.kron_budget,
        }


@dataclass(frozen=True)
class EditIntermediates:
    """Stage outputs kept for verification; not part of the serialized report."""

    stabilizer: StabilizerA
    decoupler: DecouplerAlpha
    m_rhs: np.ndarray
    w_star: np.ndarray
    refinement: RefinementResult


@dataclass
class EditReport:
    """Everything one run produced, numbers only (weights travel separately)."""

    m: int
    d_in: int
    d_out: int
    lam: float
    lam_rule: str
    beta: float
    interpolation_mode: str
    target_mode: str
    solver_path: str
    sylvester_residual: float
    zero_target: bool
    alpha_degenerate: bool
    bures_before: float
    bures_after: float
    refinement_rank: int
    refinement_rank_deficient: bool
    refinement_degenerate: bool
    realization_gap: float
    erasure_errors: list[float]
    preservation_errors: list[float] | None
    excluded_targets: list[int]
    excluded_probes: list[int]
    max_erasure_err: float
    median_preserve_err: float
    wall_ms: float
    config: dict[str, Any]
    intermediates: EditIntermediates | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict[str, Any]:
        out = {k: v for k, v in self.__dict__.items() if k != "intermediates"}
        return out


def run_edit(
    w0,
    spec: EraseSpec,
    contexts,
    features,
    labels,
    cfg: EditConfig = EditConfig(),
    preserved=None,
) -> tuple[np.ndarray, EditReport]:
    """Run one edit of ``w0`` and report on it.

    ``contexts`` holds one token array per target concept, ``features`` and
    ``labels`` the activation samples for the decoupler (label 0 = neutral,
    k = concept k), and ``preserved`` optional probe directions scored for
    preservation. Deterministic: identical inputs give bit-identical weights.
    """
    t0 = time.perf_counter()
    w0_ = as_matrix(w0, "w0")
    if spec.mode != cfg.target_mode:
        raise PipelineStageError(
            "config",
            ValueError(
                f"erase spec mode {spec.mode!r} does not match configured "
                f"target_mode {cfg.target_mode!r}"
            ),
        )
    if spec.n_concepts < 1:
        raise PipelineStageError("config", ValueError("no target concepts to erase"))

    with _stage("stabilizer"):
        contexts = list(contexts)
        if len(contexts) != spec.n_concepts:
            raise ValueError(
                f"{len(contexts)} context groups for {spec.n_concepts} concepts"
            )
        s = build_s(contexts)
        r = build_r(spec.concepts)
        lam = cfg.lam if cfg.lam is not None else relative_lambda(s, cfg.lam_scale)
        stab = assemble_a(lam, s, r)

    with _stage("informax"):
        dec = build_decoupler(w0_, features, labels)

    with _stage("solver"):
        m_rhs = assemble_m(w0_, spec)
        zero_target = not m_rhs.any()
        if zero_target:
            warnings.warn(
                "right-hand side is zero: the closed-form solution is the zero "
                "matrix and preservation rests entirely on the refinement stage",
                ZeroTargetWarning,
                stacklevel=2,
            )
        sol = sylvester_solve_spectral(dec.alpha, stab, m_rhs)

    with _stage("geometry"):
        sigma_zero = w0_ @ w0_.T
        sigma_zero = (sigma_zero + sigma_zero.T) / 2.0
        sigma_star = sol.w_star @ sol.w_star.T
        bures_before = bures_distance((sigma_star + sigma_star.T) / 2.0, sigma_zero)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", geometry.RankDeficiencyWarning)
            ref = refine_weights(sol.w_star, w0_, cfg.beta, cfg.interpolation_mode)
        sigma_after = ref.w @ ref.w.T
        bures_after = bures_distance((sigma_after + sigma_after.T) / 2.0, sigma_zero)

    with _stage("metrics"):
        probes: ProbeScores = probe_scores(ref.w, w0_, spec, preserved)
        max_erasure = float(np.nanmax(probes.erasure)) if probes.erasure.size else float("nan")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            median_preserve = (
                float(np.nanmedian(probes.preservation))
                if probes.preservation.size
                else float("nan")
            )

    report = EditReport(
        m=spec.n_concepts,
        d_in=w0_.shape[1],
        d_out=w0_.shape[0],
        lam=float(lam),
        lam_rule="absolute" if cfg.lam is not None else "relative",
        beta=cfg.beta,
        interpolation_mode=cfg.interpolation_mode,
        target_mode=cfg.target_mode,
        solver_path=sol.path,
        sylvester_residual=sol.residual,
        zero_target=zero_target,
        alpha_degenerate=dec.degenerate,
        bures_before=bures_before,
        bures_after=bures_after,
        refinement_rank=ref.rank,
        refinement_rank_deficient=ref.rank_deficient,
        refinement_degenerate=ref.degenerate,
        realization_gap=ref.realization_gap,
        erasure_errors=[float(x) for x in probes.erasure],
        preservation_errors=(
            [float(x) for x in probes.preservation] if preserved is not None else None
        ),
        excluded_targets=list(probes.excluded_targets),
        excluded_probes=list(probes.excluded_probes),
        max_erasure_err=max_erasure,
        median_preserve_err=median_preserve,
        wall_ms=(time.perf_counter() - t0) * 1e3,
        config=cfg.to_dict(),
        intermediates=EditIntermediates(stab, dec, m_rhs, sol.w_star, ref),
    )
    return ref.w, report
