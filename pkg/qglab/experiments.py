"""
Experiments behind the CLI subcommands.

An experiment expands a configuration into sweep points, measures one
point at a time in a worker thread, and reduces the records (sorted by
parameters) into an ExperimentReport with rate fits and pass/fail criteria.
"""
import asyncio
import functools
import logging
import re
from collections import OrderedDict
from datetime import datetime, timezone
from importlib import metadata
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar

from . import __version__
from .config import ExperimentConfig, config_hash, default_fine_h
from .continuum import ContinuumGrid, ReferenceSpectrum, continuum_eigenvalues
from .discrete import assemble_h2, laplacian_norm, laplacian_resolvent_check
from .errors import ConsistencyFailureError, EstimationFailureError, InvalidParameterError, PreconditionError
from .lattice import build_lattice
from .norms import lanczos_norm, power_iteration
from .plotting import convergence_svg, plot_data, spectra_svg
from .potentials import assumption_report, zero_potential
from .probes import SUITES, mixture_probe, probe_suite, random_vertex_function
from .quantum_graph import (
    GraphResolvent,
    eigenfunction_mapping,
    fem_distance,
    metric_graph_fem_resolvent,
    resolvent_params,
    secular_eigenvalues,
    validity_cap,
)
from .rates import MIN_POINTS, decreasing_within, fit_slope
from .spaces import (
    VertexFunction,
    adjoint_Istar,
    adjoint_trace_check,
    embed_I,
    h1_inner,
    h1_norm,
    interpolation_adjoint_ratio,
    interpolation_trace_check,
)
from .spectral import (
    SpectrumSlice,
    eigenpairs,
    ensure_window_clear,
    inverse_shift_spectra_compare,
    multiplet_projection_distance,
    spectral_projection_distance,
    spectra_table,
)
from .storage import BaseStorage
from .sweep import SweepPoint, SweepRunner, default_runner
from .types import AssumptionReport, ExperimentReport, InequalityCheck, Provenance, SlopeFit, SweepRecord

logger = logging.getLogger(__name__)

NONVACUITY_FRACTION = 0.3
SCALAR_BOUND_MATCH = 0.05
VERTEX_CONDITION_TOLERANCE = 1e-8
ASSUMPTION_DENSITY = 20
FEM_SUBDIVISIONS = 16
FEM_SIZE_LIMIT = 200_000
MAX_ARTIFACTS = 3


def package_versions() -> Dict[str, str]:
    """Versions of qglab and its numerical stack."""
    versions = {"qglab": __version__}
    for name in ("numpy", "scipy", "pandas", "pydantic", "matplotlib"):
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def inequality(name: str, lhs: float, bound: float, band: float = 0.0) -> InequalityCheck:
    """An inequality check lhs <= bound (+ band)."""
    return InequalityCheck(name=name, lhs=float(lhs), bound=float(bound), passed=bool(lhs <= bound + band))


def scalar_resolvent_bound(z: complex, upper: float) -> float:
    """sup of lambda / |lambda - z| over the spectral interval [0, upper]."""
    res = minimize_scalar(lambda lam: -lam / abs(lam - z), bounds=(0.0, upper), method="bounded")
    return float(max(-res.fun, upper / abs(upper - z)))


def z_label(z: complex) -> str:
    """Compact text of a spectral parameter."""
    return f"{z.real:g}{z.imag:+g}j"


def _finite(measures: Dict[str, float]) -> Dict[str, float]:
    return {k: float(v) for k, v in measures.items() if v is not None and np.isfinite(v)}


def check_criteria(records: Sequence[SweepRecord]) -> Dict[str, bool]:
    """One criterion per check name: every record's check of that name passed."""
    criteria: Dict[str, bool] = OrderedDict()
    for record in records:
        for check in record.checks:
            criteria[check.name] = criteria.get(check.name, True) and check.passed
    return dict(criteria)


def series(records: Sequence[SweepRecord], measure: str) -> Tuple[List[float], List[float]]:
    """(ells, values) of a measure over records that carry it."""
    pairs = [(r.ell, r.measures[measure]) for r in records if measure in r.measures]
    return [p[0] for p in pairs], [p[1] for p in pairs]


def resolvent_box_radius(config: ExperimentConfig, ell: float, radius: float) -> float:
    """
    Vertex radius of the lattice for the Laplacian-resolvent norms.

    The Dirichlet box is shrunk to a whole number of cells when it would
    hold more than probes.resolvent_max_vertices vertices.
    """
    per_axis = int(np.floor(config.probes.resolvent_max_vertices ** (1.0 / config.nu) + 1e-9))
    half_cells = max((per_axis - 1) // 2, 1)
    return min(config.lattice_radius(ell, radius), half_cells * ell)


class Experiment:
    """
    Base class for experiments.

    Attributes:
        command (str): CLI subcommand
        config (ExperimentConfig): The configuration
        potential (Potential): The configured potential
        notes (List[str]): Warnings for the report
        tables (Dict[str, pd.DataFrame]): Extra CSV tables by name
        assumptions (Optional[AssumptionReport]): Sampled potential diagnostics
    """

    command = ""

    def __init__(self, config: ExperimentConfig):
        """
        Initialize the experiment.

        Args:
            config (ExperimentConfig): The configuration
        """
        self.config = config
        self.potential = config.build_potential()
        self.notes: List[str] = []
        self.tables: Dict[str, pd.DataFrame] = {}
        self.assumptions: Optional[AssumptionReport] = None

    def prepare(self) -> None:
        """Work shared by all points, run once before the sweep."""

    def points(self) -> List[SweepPoint]:
        """The sweep points."""
        raise NotImplementedError

    def handle(self, point: SweepPoint) -> SweepRecord:
        """Measure one sweep point."""
        raise NotImplementedError

    def reduce(self, records: List[SweepRecord]) -> Tuple[List[SlopeFit], Dict[str, bool]]:
        """Fits and criteria from the sorted records."""
        raise NotImplementedError

    def sample_assumptions(self) -> None:
        """Sample V + M over the Dirichlet box."""
        cfg = self.config
        radius = max(cfg.radii)
        self.assumptions = assumption_report(
            self.potential, cfg.m_shift, [(-radius, radius)] * cfg.nu, ASSUMPTION_DENSITY
        )
        if not self.assumptions.bounded_below_ok:
            self.notes.append(f"potential {self.potential.label!r} has no certified lower bound on the box")

    def record(self, point: SweepPoint, **fields) -> SweepRecord:
        """A record keyed by the point."""
        measures = _finite(fields.pop("measures", {}))
        return SweepRecord(
            key=point.key, ell=point.ell, radius=point.radius, z=(point.z.real, point.z.imag),
            measures=measures, **fields,
        )


class LemmaCheck(Experiment):
    """
    Probe-based checks of the identification operators and the discrete resolvent bounds.
    """

    command = "lemma-check"

    def prepare(self) -> None:
        z = self.config.z[0]
        if z.imag == 0:
            raise PreconditionError(f"lemma-check needs a non-real z, got {z}")
        self.sample_assumptions()

    def points(self) -> List[SweepPoint]:
        cfg = self.config
        return [
            SweepPoint(self.command, i, ell, cfg.radius, cfg.z[0], cfg.seed)
            for i, ell in enumerate(cfg.ell_list)
        ]

    def handle(self, point: SweepPoint) -> SweepRecord:
        cfg, spec, tol = self.config, self.config.probes, self.config.tolerances
        rng = point.rng()
        ell = point.ell
        g = build_lattice(cfg.nu, ell, max(spec.radius, 2 * ell))
        bounds = {"interp_trace": ell, "adjoint_trace": ell / np.sqrt(5.0)}

        worst: Dict[str, Dict[str, float]] = {name: {} for name in ("interp_trace", "adjoint_trace", "interp_adjoint")}
        artifacts: Dict[str, str] = {}
        probes = probe_suite(g, rng, spec.random, spec.bubbles, spec.mixtures, spec.bubble_modes, spec.samples_per_edge)
        for suite, i, phi in probes:
            ratios = {
                "interp_trace": interpolation_trace_check(phi)[0],
                "adjoint_trace": adjoint_trace_check(phi)[0],
                "interp_adjoint": interpolation_adjoint_ratio(phi),
            }
            for name, ratio in ratios.items():
                worst[name][suite] = max(worst[name].get(suite, 0.0), ratio)
                if name in bounds and ratio > bounds[name] and len(artifacts) < MAX_ARTIFACTS:
                    logger.error("%s probe %s-%d violates %s: %.6g > %.6g", point.label, suite, i, name, ratio, bounds[name])
                    artifacts[f"ell{point.index}-{name}-{suite}{i}"] = phi.to_text()

        measures: Dict[str, float] = {}
        for name, by_suite in worst.items():
            measures[f"{name}_ratio"] = max(by_suite.values())
            for suite in SUITES:
                if suite in by_suite:
                    measures[f"{name}_ratio.{suite}"] = by_suite[suite]
        checks = [
            inequality("interp_trace", measures["interp_trace_ratio"], bounds["interp_trace"]),
            inequality("adjoint_trace", measures["adjoint_trace_ratio"], bounds["adjoint_trace"]),
            inequality(
                "bubble_nonvacuity",
                NONVACUITY_FRACTION * bounds["adjoint_trace"],
                measures["adjoint_trace_ratio.bubbles"],
            ),
        ]
        measures["bubble_nonvacuity"] = measures["adjoint_trace_ratio.bubbles"] / bounds["adjoint_trace"]

        defect = 0.0
        for _ in range(spec.adjoint_pairs):
            u = random_vertex_function(g, rng)
            phi = mixture_probe(g, rng, spec.samples_per_edge, spec.bubble_modes)
            iu = embed_I(u)
            gap = abs(h1_inner(iu, phi) - u.inner(adjoint_Istar(phi)))
            defect = max(defect, gap / (h1_norm(iu) * h1_norm(phi)))
        measures["adjointness_defect"] = defect
        checks.append(inequality("adjointness", defect, tol.adjoint_tol))

        free_norm = 4.0 * cfg.nu / ell ** 2
        lap = laplacian_norm(g, rng)
        measures["laplacian_norm_ratio"] = lap / free_norm
        measures["laplacian_norm_diagonal_ratio"] = lap / (2.0 * cfg.nu / ell ** 2)
        checks.append(inequality("laplacian_norm", lap, free_norm * (1.0 + 1e-9)))

        box = build_lattice(cfg.nu, ell, resolvent_box_radius(cfg, ell, point.radius))
        measures["laplacian_resolvent_box"] = box.radius
        norm_dl, norm_v, _ =laplacian_resolvent_check(box, self.potential, point.z, rng, tol.power_tol, tol.power_max_iter)
        free_dl, _, _ = laplacian_resolvent_check(box, zero_potential(), point.z, rng, tol.power_tol, tol.power_max_iter)
        scalar = scalar_resolvent_bound(point.z, free_norm)
        measures.update(
            {
                "laplacian_resolvent_norm": norm_dl,
                "laplacian_resolvent_norm_x_ell": norm_dl * ell,
                "potential_resolvent_norm": norm_v,
                "free_laplacian_resolvent_norm": free_dl,
                "free_scalar_bound": scalar,
            }
        )
        checks.append(inequality("free_scalar_bound_match", abs(free_dl / scalar - 1.0), SCALAR_BOUND_MATCH))
        return self.record(point, measures=measures, checks=checks, artifacts=artifacts)

    def reduce(self, records: List[SweepRecord]) -> Tuple[List[SlopeFit], Dict[str, bool]]:
        criteria = check_criteria(records)
        band = [r.measures["laplacian_resolvent_norm_x_ell"] for r in records]
        criteria["laplacian_resolvent_band"] = bool(max(band) <= self.config.tolerances.band_factor * band[0])

        fits: List[SlopeFit] = []
        if len(records) < MIN_POINTS:
            self.notes.append(f"{len(records)} ell values: slopes omitted (need {MIN_POINTS})")
            return fits, criteria
        for measure in ("interp_trace_ratio", "adjoint_trace_ratio", "interp_adjoint_ratio", "laplacian_resolvent_norm_x_ell"):
            ells, values = series(records, measure)
            fits.append(fit_slope(measure, ells, values, threshold=None))
        return fits, criteria


class ResolventCompare(Experiment):
    """
    Operator-norm distance between the discrete resolvent and the sandwiched quantum graph resolvent.
    """

    command = "resolvent-compare"
    RATE_MEASURES = ("resolvent_difference_K", "resolvent_difference_Istar", "m1_relative", "m2_relative")

    def prepare(self) -> None:
        for z in self.config.z:
            if z.imag == 0:
                raise PreconditionError(f"resolvent-compare needs non-real z, got {z}")

    def points(self) -> List[SweepPoint]:
        cfg = self.config
        pairs = [(z, ell) for z in cfg.z for ell in cfg.ell_list]
        return [SweepPoint(self.command, i, ell, cfg.radius, z, cfg.seed) for i, (z, ell) in enumerate(pairs)]

    def auxiliary_norm(self, point: SweepPoint, apply, apply_adjoint, size: int, rng, label: str) -> float:
        """
        Norm of a correction term by Lanczos; NaN (dropped from the record) if it fails.

        A failed estimate is logged and the measure left out of the record.
        """
        tol = self.config.tolerances
        try:
            return lanczos_norm(apply, apply_adjoint, size, rng, tol.power_tol, tol.power_max_iter, label).value
        except EstimationFailureError as e:
            logger.warning("%s: %s norm unavailable (last estimate %.6g)", point.label, label, e.last_estimate)
            return float("nan")

    def handle(self, point: SweepPoint) -> SweepRecord:
        cfg, tol = self.config, self.config.tolerances
        rng = point.rng()
        g = build_lattice(cfg.nu, point.ell, cfg.lattice_radius(point.ell, point.radius))
        p = resolvent_params(point.z, point.ell, cfg.nu)
        graph = GraphResolvent(g, self.potential, p)
        mirror = GraphResolvent(g, self.potential, p.conjugate, h2=graph.h2)
        discrete = graph.h2.resolvent(p.z)
        estimate = functools.partial(
            power_iteration, size=g.num_vertices, rng=rng, tol=tol.power_tol, max_iter=tol.power_max_iter
        )
        m1 = graph.corrections.m1.entries
        m2 = graph.corrections.m2.entries

        k_form = estimate(
            lambda x: discrete.solve(x) - graph.sandwich(x),
            lambda y: discrete.solve(y, adjoint=True) - graph.sandwich_adjoint(y),
            label="R2 - K R1 I",
        )
        istar_form = estimate(
            lambda x: discrete.solve(x) - graph.istar_form(x),
            lambda y: discrete.solve(y, adjoint=True) - mirror.istar_form(y),
            label="R2 - I* R1 I",
        )
        m1_rel = self.auxiliary_norm(
            point,
            lambda x: discrete.solve(m1 @ x),
            lambda y: m1.conj().T @ discrete.solve(y, adjoint=True),
            g.num_vertices, rng, "R2 M1",
        )
        m2_rel = self.auxiliary_norm(
            point,
            lambda x: discrete.solve(m2 @ x),
            lambda y: m2.conj().T @ discrete.solve(y, adjoint=True),
            g.num_vertices, rng, "R2 M2",
        )

        graph_form, residual, fem = 0.0, 0.0, None
        for i in range(cfg.probes.resolvent_probes):
            u = random_vertex_function(g, rng)
            w, psi = graph.reconstruct(u.values, check=False)
            try:
                residual = max(residual, graph.check_vertex_condition(w, u.values))
            except ConsistencyFailureError as e:
                residual = max(residual, e.residual)
            iu = embed_I(u)
            istar_iu = adjoint_Istar(iu).values + g.missing * u.values / (3.0 * g.nu)
            approx = embed_I(VertexFunction(g, discrete.solve(istar_iu)))
            graph_form = max(graph_form, h1_norm(psi - approx) / h1_norm(iu))
            if i == 0 and (g.num_edges + int(np.sum(g.missing))) * FEM_SUBDIVISIONS <= FEM_SIZE_LIMIT:
                solution = metric_graph_fem_resolvent(g, self.potential, p.z, u, FEM_SUBDIVISIONS)
                fem = fem_distance(solution, psi) / h1_norm(psi)

        measures = {
            "resolvent_difference_K": k_form.value,
            "resolvent_difference_Istar": istar_form.value,
            "graph_form_difference": graph_form,
            "m1_relative": m1_rel,
            "m2_relative": m2_rel,
            "vertex_condition_residual": residual,
            "power_iterations_K": k_form.iterations,
            "fem_oracle_distance": fem,
        }
        checks = [inequality("vertex_condition", residual, VERTEX_CONDITION_TOLERANCE)]
        return self.record(point, measures=measures, checks=checks)

    def reduce(self, records: List[SweepRecord]) -> Tuple[List[SlopeFit], Dict[str, bool]]:
        tol = self.config.tolerances
        criteria = check_criteria(records)
        by_z: Dict[Tuple[float, float], List[SweepRecord]] = OrderedDict()
        for record in records:
            by_z.setdefault(tuple(record.z), []).append(record)

        fits: List[SlopeFit] = []
        for z, group in sorted(by_z.items()):
            group = sorted(group, key=lambda r: -r.ell)
            suffix = f"[z={z_label(complex(*z))}]"
            for measure in self.RATE_MEASURES + ("graph_form_difference",):
                ells, values = series(group, measure)
                rated = measure in self.RATE_MEASURES
                fit = fit_slope(
                    measure + suffix, ells, values,
                    threshold=tol.slope_threshold if rated else None,
                    max_stderr=tol.slope_max_stderr if measure == "resolvent_difference_K" else None,
                )
                fits.append(fit)
                if fit.slope is None:
                    self.notes.append(f"slope of {fit.name} unavailable: {fit.points} points (need {MIN_POINTS})")
                elif fit.passed is not None:
                    criteria[f"slope:{fit.name}"] = fit.passed
        return fits, criteria


class SpectrumConverge(Experiment):
    """
    Windowed spectra of the quantum graph, the discrete operator and the continuum reference.
    """

    command = "spectrum-converge"

    def __init__(self, config: ExperimentConfig):
        super().__init__(config)
        self.references: Dict[float, ReferenceSpectrum] = {}

    def prepare(self) -> None:
        cfg = self.config
        self.sample_assumptions()
        for radius in cfg.radii:
            try:
                grid = ContinuumGrid(cfg.nu, cfg.fine_h, radius)
            except InvalidParameterError:
                h = default_fine_h(radius, min(cfg.ell_list))
                self.notes.append(f"fine_h does not divide the box at R={radius:g}; using h={h:.6g}")
                grid = ContinuumGrid(cfg.nu, h, radius)
            self.references[radius] = continuum_eigenvalues(
                grid, self.potential, cfg.window, tol=cfg.tolerances.richardson_tol
            )
            frame = self.references[radius].to_frame()
            frame.insert(0, "radius", radius)
            self.tables["reference"] = pd.concat([self.tables.get("reference"), frame], ignore_index=True)

    def points(self) -> List[SweepPoint]:
        cfg = self.config
        pairs = [(radius, ell) for radius in cfg.radii for ell in cfg.ell_list]
        return [SweepPoint(self.command, i, ell, radius, 0j, cfg.seed) for i, (radius, ell) in enumerate(pairs)]

    def _secular_slice(self, g, window: Tuple[float, float]) -> SpectrumSlice:
        """Secular eigenpairs in the open window, after checking both window ends."""
        a, b = window
        cap = validity_cap(g)
        delta = 1e-6 * max(1.0, abs(a), abs(b))
        search = (a - delta, b + delta if b + delta < cap else b)
        pairs = secular_eigenvalues(g, self.potential, search, self.config.tolerances.secular_tol)
        values = np.array([lam for lam, _ in pairs])
        ensure_window_clear(values, window)
        inside = [(lam, w) for lam, w in pairs if a < lam < b]
        vectors = np.zeros((g.num_vertices, 0))
        if inside:
            vectors = np.array([w.values for _, w in inside]).T * np.sqrt(g.cell_volume)
        return SpectrumSlice(np.array([lam for lam, _ in inside]), vectors, window, "nuH1")

    def handle(self, point: SweepPoint) -> SweepRecord:
        cfg = self.config
        window = tuple(cfg.window)
        g = build_lattice(cfg.nu, point.ell, cfg.lattice_radius(point.ell, point.radius))
        reference = self.references[point.radius].eigenvalues

        graph_slice = self._secular_slice(g, window)
        h2_slice = eigenpairs(assemble_h2(g, self.potential), window)
        measures: Dict[str, float] = {
            "count.nuH1": len(graph_slice),
            "count.H2": len(h2_slice),
            "count.reference": len(reference),
        }
        for label, values in (("nuH1", graph_slice.eigenvalues), ("H2", h2_slice.eigenvalues)):
            for k in range(min(len(values), len(reference))):
                measures[f"error.{label}.{k}"] = abs(values[k] - reference[k])
            if len(values) and len(reference):
                measures[f"hausdorff.{label}"] = inverse_shift_spectra_compare(values, reference, cfg.m_shift)
        if len(graph_slice) or len(h2_slice):
            mapping = eigenfunction_mapping(g, graph_slice.eigenvalues)
            measures["projection_distance"] = spectral_projection_distance(graph_slice, h2_slice, mapping)
            measures["multiplet_distance"] = multiplet_projection_distance(graph_slice, h2_slice, mapping)
        spectra = {
            "nuH1": graph_slice.eigenvalues.tolist(),
            "H2": h2_slice.eigenvalues.tolist(),
        }
        return self.record(point, measures=measures, spectra=spectra)

    def reduce(self, records: List[SweepRecord]) -> Tuple[List[SlopeFit], Dict[str, bool]]:
        cfg = self.config
        band = cfg.tolerances.noise_band
        criteria: Dict[str, bool] = {}
        fits: List[SlopeFit] = []

        frames = []
        for record in records:
            frame = spectra_table(sorted(record.spectra.items()))
            frame.insert(0, "radius", record.radius)
            frame.insert(0, "ell", record.ell)
            frames.append(frame)
        self.tables["spectra"] = pd.concat(frames, ignore_index=True) if frames else spectra_table([])

        if all(not r.spectra.get("nuH1") for r in records) and all(not len(ref) for ref in self.references.values()):
            self.notes.append(f"window {tuple(cfg.window)} contains no eigenvalues; comparison is empty")
            return fits, criteria

        for radius in cfg.radii:
            group = sorted((r for r in records if r.radius == radius), key=lambda r: -r.ell)
            suffix = f"[R={radius:g}]"
            modes = min(int(r.measures.get("count.nuH1", 0)) for r in group)
            modes = min(modes, len(self.references[radius]))
            for k in range(modes):
                measure = f"error.nuH1.{k}"
                ells, values = series(group, measure)
                criteria[f"eigenvalue_{k}_monotone{suffix}"] = decreasing_within(values, band)
                fits.append(fit_slope(measure + suffix, ells, values, threshold=None))
            ells, values = series(group, "hausdorff.nuH1")
            if len(values) > 1:
                criteria[f"hausdorff_monotone{suffix}"] = decreasing_within(values, band)
                fits.append(fit_slope("hausdorff.nuH1" + suffix, ells, values, threshold=None))
            if modes == 0:
                self.notes.append(f"no common eigenvalues to compare at R={radius:g}")

        if len(cfg.radii) > 1:
            finest = min(cfg.ell_list)
            rows = [
                {"radius": r.radius, "index": k, "eigenvalue": lam}
                for r in records if r.ell == finest
                for k, lam in enumerate(r.spectra.get("nuH1", []))
            ]
            self.tables["truncation"] = pd.DataFrame(rows, columns=["radius", "index", "eigenvalue"])
        return fits, criteria


EXPERIMENTS = {cls.command: cls for cls in (LemmaCheck, ResolventCompare, SpectrumConverge)}


# -- tables ---------------------------------------------------------------------


def measures_frame(records: Sequence[SweepRecord]) -> pd.DataFrame:
    """Long-format measures: ell, radius, z_real, z_imag, measure, value."""
    rows = [
        {"ell": r.ell, "radius": r.radius, "z_real": r.z[0], "z_imag": r.z[1], "measure": name, "value": value}
        for r in records
        for name, value in r.measures.items()
    ]
    return pd.DataFrame(rows, columns=["ell", "radius", "z_real", "z_imag", "measure", "value"])


def checks_frame(records: Sequence[SweepRecord]) -> pd.DataFrame:
    """Every inequality check with both sides."""
    rows = [
        {"ell": r.ell, "radius": r.radius, "z_real": r.z[0], "z_imag": r.z[1],
         "check": c.name, "lhs": c.lhs, "bound": c.bound, "passed": c.passed}
        for r in records
        for c in r.checks
    ]
    return pd.DataFrame(rows, columns=["ell", "radius", "z_real", "z_imag", "check", "lhs", "bound", "passed"])


def fits_frame(fits: Sequence[SlopeFit]) -> pd.DataFrame:
    """One row per slope fit."""
    columns = ["series", "slope", "stderr", "ci_low", "ci_high", "constant", "points", "threshold", "passed"]
    rows = [
        {"series": f.name, "slope": f.slope, "stderr": f.stderr, "ci_low": f.ci_low, "ci_high": f.ci_high,
         "constant": f.constant, "points": f.points, "threshold": f.threshold, "passed": f.passed}
        for f in fits
    ]
    return pd.DataFrame(rows, columns=columns)


async def save_outputs(storage: BaseStorage, report: ExperimentReport, tables: Dict[str, pd.DataFrame]) -> List[str]:
    """
    Write the report, its CSV tables and any serialized offending probes.

    Returns:
        List[str]: Written locations
    """
    digest = report.provenance.config_hash
    command = report.command
    paths = [await storage.save_report(report)]
    paths.append(await storage.save_table(f"{command}-measures", measures_frame(report.records), digest))
    paths.append(await storage.save_table(f"{command}-checks", checks_frame(report.records), digest))
    paths.append(await storage.save_table(f"{command}-fits", fits_frame(report.fits), digest))
    for name in sorted(tables):
        paths.append(await storage.save_table(f"{command}-{name}", tables[name], digest))
    for record in report.records:
        for key in sorted(record.artifacts):
            paths.append(await storage.save_text(f"{command}-{key}.txt", record.artifacts[key]))
    return paths


# -- commands -------------------------------------------------------------------


async def run_experiment(
    experiment: Experiment,
    storage: Optional[BaseStorage] = None,
    runner: Optional[SweepRunner] = None,
) -> ExperimentReport:
    """
    Prepare, sweep and reduce an experiment.

    Args:
        experiment (Experiment): The experiment
        storage (Optional[BaseStorage]): Where to write outputs, if anywhere
        runner (Optional[SweepRunner]): Sweep runner, a default one with config.workers otherwise

    Returns:
        ExperimentReport: The report
    """
    config = experiment.config
    started = datetime.now(timezone.utc)
    loop = asyncio.get_running_loop()
    await loop.run_in_executor(None, experiment.prepare)

    runner = runner or default_runner(config.workers)
    runner.register_handler(experiment.command, experiment.handle)
    records = await runner.run(experiment.points())
    fits, criteria = experiment.reduce(records)

    report = ExperimentReport(
        command=experiment.command,
        config=config.model_dump(mode="json"),
        records=records,
        fits=fits,
        criteria=criteria,
        notes=experiment.notes,
        assumptions=experiment.assumptions,
        provenance=Provenance(
            config_hash=config_hash(config),
            versions=package_versions(),
            started=started,
            finished=datetime.now(timezone.utc),
            timings=runner.timings,
        ),
    )
    for note in report.notes:
        logger.warning(note)
    failed = [name for name, ok in report.criteria.items() if not ok]
    if failed:
        logger.error("%s failed: %s", experiment.command, ", ".join(failed))
    else:
        logger.info("%s passed %d criteria", experiment.command, len(report.criteria))
    if storage is not None:
        await save_outputs(storage, report, experiment.tables)
    return report


async def cmd_lemma_check(config: ExperimentConfig, storage: Optional[BaseStorage] = None) -> ExperimentReport:
    """Run the probe suites of the identification operators and the discrete bounds."""
    return await run_experiment(LemmaCheck(config), storage)


async def cmd_resolvent_compare(config: ExperimentConfig, storage: Optional[BaseStorage] = None) -> ExperimentReport:
    """
    Compare the discrete and quantum graph resolvents over the ell sweep.

    Raises:
        PreconditionError: If a configured z is real
    """
    return await run_experiment(ResolventCompare(config), storage)


async def cmd_spectrum_converge(config: ExperimentConfig, storage: Optional[BaseStorage] = None) -> ExperimentReport:
    """
    Compare windowed spectra against the continuum reference.

    Raises:
        BoundaryCollisionError: If a window end is too close to an eigenvalue
    """
    return await run_experiment(SpectrumConverge(config), storage)


# -- report ---------------------------------------------------------------------


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.=+-]+", "_", text).strip("_")


def _fmt(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.6g}"


def render_summary(reports: Sequence[Tuple[str, ExperimentReport]]) -> str:
    """
    Human-readable summary of several reports.

    Args:
        reports (Sequence[Tuple[str, ExperimentReport]]): (source, report) pairs in input order
    """
    lines = ["qglab summary", "=============", ""]
    for source, report in reports:
        status = "PASSED" if report.passed else "FAILED"
        lines.append(f"[{report.command}] {source}")
        lines.append(f"  config {report.provenance.config_hash[:12]}  {status}")
        lines.append(f"  points: {len(report.records)}")
        if report.criteria:
            lines.append("  criteria:")
            for name, ok in report.criteria.items():
                lines.append(f"    {'pass' if ok else 'FAIL'}  {name}")
        if report.fits:
            lines.append("  fits:")
            for fit in report.fits:
                if fit.slope is None:
                    lines.append(f"    {fit.name}: slope unavailable ({fit.points} points)")
                    continue
                lines.append(
                    f"    {fit.name}: slope {fit.slope:.4f} +/- {fit.stderr:.4f} "
                    f"[{fit.ci_low:.4f}, {fit.ci_high:.4f}] C={_fmt(fit.constant)} n={fit.points}"
                    + ("" if fit.threshold is None else f" threshold {fit.threshold:g}")
                )
        if report.notes:
            lines.append("  notes:")
            lines.extend(f"    - {note}" for note in report.notes)
        lines.append("")
    merged = all(report.passed for _, report in reports)
    lines.append(f"overall: {'PASSED' if merged else 'FAILED'} ({len(reports)} reports)")
    return "\n".join(lines) + "\n"


async def cmd_report(report_paths: Sequence[str], storage: BaseStorage) -> str:
    """
    Merge reports into a summary, plot-data CSVs and SVG figures.

    Args:
        report_paths (Sequence[str]): Report files, in the order they are summarized
        storage (BaseStorage): Where the reports are read and the outputs written

    Returns:
        str: The summary text

    Raises:
        InvalidParameterError: If no report is given
        ReportIOError: If a report is missing or corrupt
    """
    if not report_paths:
        raise InvalidParameterError("report needs at least one report file")
    reports = [(path, await storage.load_report(path)) for path in report_paths]

    for i, (_, report) in enumerate(reports):
        name = f"plot{i}-{report.command}"
        digest = report.provenance.config_hash
        frames = []
        for fit in report.fits:
            if not fit.x:
                continue
            frame = plot_data(fit)
            frames.append(frame)
            await storage.save_table(f"{name}-{_slug(fit.name)}", frame, digest)
        if frames:
            figure = convergence_svg(frames, {f.name: f for f in report.fits}, title=report.command)
            await storage.save_text(f"{name}.svg", figure)
        spectra = [
            spectra_table(sorted(r.spectra.items())).assign(ell=r.ell)
            for r in report.records if r.spectra
        ]
        if spectra:
            await storage.save_text(f"{name}-spectra.svg", spectra_svg(pd.concat(spectra, ignore_index=True), report.command))

    summary = render_summary(reports)
    await storage.save_text("summary.txt", summary)
    return summary
