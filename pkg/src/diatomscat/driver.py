"""Full scattering runs: energy scans, state-resolved tables and CSV output.

A run fixes one basis of combined molecular states.  The energy zero is the
lowest CMS threshold of that basis; collision energies are always relative to
the initial CMS.  For every (J, parity) block all (initial, energy) pairs are
propagated together, blocks run on a thread pool and are reduced in a fixed
order, so output does not depend on the number of threads.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .basis import CMS, Symmetry, enumerate_pairs, exchange_phase, parse_cms, truncate_dv
from .diatom import DiatomCurve, GridSpec, LevelSet, preset_curve
from .observables import (AccuracyError, CrossSectionTable, MatchingBreakdown, SMatrixBlock,
                          cross_sections, match_and_extract, rate_constant)
from .potential import ConfigurationError, CoupledBlock, PotentialExpansion, build_block, default_model_pes
from .propagator import NumericalBreakdown, RadialGrid, propagate
from .units import CM_TO_K, H2_MASS, H_ATOM_MASS, K_TO_CM

logger = logging.getLogger(__name__)

__all__ = [
    "RunConfig",
    "ScanResult",
    "ScanPoint",
    "load_config",
    "run_scan",
    "final_state_distribution",
    "distinguishable_decomposition",
    "initial_cms_scan",
    "write_scan_csv",
]

CSV_COLUMNS = ["E_K", "initial_cms", "final_cms", "sigma_A2", "rate_cm3s",
               "J_max_contribution", "unitarity_defect"]


def _labels(items) -> tuple:
    return tuple(parse_cms(x) if isinstance(x, str) else tuple(x) for x in items)


@dataclass(frozen=True)
class RunConfig:
    """Everything that defines a run.  Energies are collision energies in K."""

    energies: tuple[float, ...]
    initial: tuple[tuple[int, int, int, int], ...]
    diatom: str = "h2-like"                 # preset name or two-column curve file
    diatom_mass: float = H_ATOM_MASS / 2
    diatom_grid: tuple[float, float, int] = (0.2, 3.5, 3301)
    pes: str = "h2h2-model-calibrated"
    pes_b: float | None = None
    isotropic_only: bool = False
    species: str = "para"
    v_max: int = 1
    j_max: int = 2
    e_max: float | None = None              # K above the lowest CMS of the full set
    e_margin: float | None = None           # K above the highest initial CMS
    dv_max: int | None = None
    reference: tuple[tuple[int, int, int, int], ...] = ()
    r_min: float = 1.3
    r_max: float = 100.0
    step: float = 0.008
    scheme: str = "manolopoulos"
    growth: float = 0.02
    r_grow: float = 10.0
    step_max: float = 1.0
    wavelength_fraction: float = 0.03
    J_max: int = 10
    J_limit: int | None = None              # extend unconverged points up to this J
    symmetry: Symmetry = Symmetry.SYMMETRIC
    reduced_mass: float = H2_MASS / 2
    pw_tol: float = 1e-3
    output_dir: str = "."
    threads: int = 1

    def __post_init__(self):
        errs = []
        if not self.energies:
            errs.append("energies: list is empty")
        elif any(not (e > 0) for e in self.energies):
            errs.append("energies: every collision energy must be positive")
        if not self.initial:
            errs.append("run.initial: at least one initial CMS is required")
        for name in ("v_max", "j_max", "J_max"):
            if getattr(self, name) < 0:
                errs.append(f"{name}: must be >= 0")
        if self.J_limit is not None and self.J_limit < self.J_max:
            errs.append("J_limit: must be >= J_max")
        if not self.pw_tol > 0:
            errs.append("pw_tol: must be positive")
        if self.dv_max is not None and self.dv_max < 0:
            errs.append("dv_max: must be >= 0")
        for name in ("e_max", "e_margin"):
            v = getattr(self, name)
            if v is not None and v < 0:
                errs.append(f"{name}: must be >= 0")
        if self.threads < 1:
            errs.append("threads: must be >= 1")
        if self.species not in ("para", "ortho", "hetero"):
            errs.append(f"species: {self.species!r} is not para, ortho or hetero")
        if not isinstance(self.symmetry, Symmetry):
            errs.append("symmetry: must be symmetric, antisymmetric or distinguishable")
        try:
            self.grid
        except ValueError as exc:
            errs.append(f"grid: {exc}")
        if errs:
            raise ConfigurationError("; ".join(errs))

    @property
    def grid(self) -> RadialGrid:
        return RadialGrid(self.r_min, self.r_max, self.step, self.scheme, self.growth,
                          self.r_grow, self.step_max, self.wavelength_fraction)

    def replace(self, **kw) -> "RunConfig":
        if "grid" in kw:
            g = kw.pop("grid")
            kw.update(r_min=g.r_min, r_max=g.r_max, step=g.step, scheme=g.scheme, growth=g.growth,
                      r_grow=g.r_grow, step_max=g.step_max, wavelength_fraction=g.wavelength_fraction)
        return dataclasses.replace(self, **kw)

    def canonical(self) -> dict:
        """Physics-defining fields (no output directory or thread count)."""
        d = dataclasses.asdict(self)
        d.pop("output_dir")
        d.pop("threads")
        d["symmetry"] = self.symmetry.value
        return d

    @property
    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, default=list)
        return hashlib.sha256(text.encode()).hexdigest()


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _cms_list(text: str) -> tuple:
    return tuple(parse_cms(x) for x in text.replace(" ", "").split(",") if x) if "," in text \
        else tuple(parse_cms(x) for x in text.split())


def load_config(path_or_text, is_text: bool = False) -> RunConfig:
    """Parse an INI run file (sections diatom, pes, basis, grid, energies, run)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if is_text:
        cp.read_string(path_or_text)
        base = Path(".")
    else:
        path = Path(path_or_text)
        if not path.exists():
            raise ConfigurationError(f"config file {path} not found")
        cp.read(path)
        base = path.parent
    known = {"diatom", "pes", "basis", "grid", "energies", "run"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
    kw: dict = {}

    def get(section, key, conv, dest=None):
        if cp.has_option(section, key):
            raw = cp.get(section, key).strip()
            try:
                kw[dest or key] = conv(raw)
            except (ValueError, KeyError) as exc:
                raise ConfigurationError(f"[{section}] {key} = {raw!r}: {exc}") from None

    opt_float = lambda s: None if s.lower() in ("", "none") else float(s)
    opt_int = lambda s: None if s.lower() in ("", "none") else int(s)
    if cp.has_option("diatom", "curve_file"):
        kw["diatom"] = str((base / cp.get("diatom", "curve_file").strip()).resolve())
    else:
        get("diatom", "preset", str, "diatom")
    get("diatom", "reduced_mass", float, "diatom_mass")
    if cp.has_section("diatom") and any(cp.has_option("diatom", k) for k in ("r_min", "r_max", "n_points")):
        g = RunConfig.diatom_grid
        kw["diatom_grid"] = (cp.getfloat("diatom", "r_min", fallback=g[0]),
                             cp.getfloat("diatom", "r_max", fallback=g[1]),
                             cp.getint("diatom", "n_points", fallback=g[2]))
    get("pes", "preset", str, "pes")
    get("pes", "b", opt_float, "pes_b")
    if cp.has_option("pes", "isotropic_only"):
        kw["isotropic_only"] = cp.getboolean("pes", "isotropic_only")
    for key in ("species",):
        get("basis", key, str)
    for key in ("v_max", "j_max"):
        get("basis", key, int)
    get("basis", "dv_max", opt_int)
    get("basis", "e_max", opt_float)
    get("basis", "e_margin", opt_float)
    get("basis", "reference", _cms_list)
    for key in ("r_min", "r_max", "step", "growth", "r_grow", "step_max", "wavelength_fraction"):
        get("grid", key, float)
    get("grid", "scheme", str)
    if cp.has_option("energies", "values"):
        get("energies", "values", lambda s: tuple(_floats(s)), "energies")
    elif cp.has_section("energies"):
        try:
            lo = cp.getfloat("energies", "log_min")
            hi = cp.getfloat("energies", "log_max")
            n = cp.getint("energies", "per_decade", fallback=4)
        except (configparser.NoOptionError, ValueError) as exc:
            raise ConfigurationError(f"[energies] needs values or log_min/log_max: {exc}") from None
        count = max(int(round((hi - lo) * n)) + 1, 1)
        kw["energies"] = tuple(float(x) for x in np.logspace(lo, hi, count))
    get("run", "J_max", int)
    get("run", "J_limit", opt_int)
    get("run", "symmetry", Symmetry)
    get("run", "initial", _cms_list)
    get("run", "reduced_mass", float)
    get("run", "pw_tol", float)
    get("run", "output_dir", str)
    get("run", "threads", int)
    for required in ("energies", "initial"):
        if required not in kw:
            raise ConfigurationError(f"missing required setting: {required}")
    return RunConfig(**kw)


@dataclass
class ScanPoint:
    """One (initial CMS, collision energy) result."""

    energy: float                          # collision energy, K
    initial: CMS
    table: CrossSectionTable | None
    rates: dict = field(default_factory=dict)
    j_max_contribution: float = 0.0
    j_max_used: int = 0
    unitarity_defect: float = 0.0
    symmetry_defect: float = 0.0
    s_blocks: list[SMatrixBlock] = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class ScanResult:
    config: RunConfig
    energy_zero: float                     # cm^-1 above the monomer (0,0) pair energy
    cms: list[CMS]
    points: list[ScanPoint]
    warnings: list[str] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return any(not p.ok for p in self.points) or bool(self.warnings)

    def point(self, initial, energy: float) -> ScanPoint:
        key = initial.labels if isinstance(initial, CMS) else tuple(initial)
        for p in self.points:
            if p.initial.labels == key and np.isclose(p.energy, energy, rtol=1e-12):
                return p
        raise KeyError(f"no result for {key} at {energy} K")

    def series(self, initial, what: str = "inelastic") -> tuple[np.ndarray, np.ndarray]:
        """(energies, values) for one initial CMS; what = 'inelastic', 'elastic' or a final label."""
        key = initial.labels if isinstance(initial, CMS) else tuple(initial)
        es, vs = [], []
        for p in self.points:
            if p.initial.labels != key or not p.ok:
                continue
            es.append(p.energy)
            if what == "inelastic":
                vs.append(p.table.total_inelastic)
            elif what == "elastic":
                vs.append(p.table.elastic)
            else:
                vs.append(p.table[parse_cms(what) if isinstance(what, str) else what])
        return np.array(es), np.array(vs)


class _Setup:
    """Levels, basis and blocks shared by all energies of a run."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        curve = self._curve(cfg)
        self.levels = LevelSet(curve, GridSpec(*cfg.diatom_grid))
        js = {"para": range(0, cfg.j_max + 1, 2), "ortho": range(1, cfg.j_max + 1, 2),
              "hetero": range(0, cfg.j_max + 1)}[cfg.species]
        energies = {(v, j): self.levels.energy(v, j) for v in range(cfg.v_max + 1) for j in js}
        ordered = not cfg.symmetry.identical
        full = enumerate_pairs(energies, cfg.v_max, cfg.j_max, None, cfg.species, ordered)
        base = full[0].energy
        cms = full
        if cfg.e_max is not None:
            cms = [c for c in cms if (c.energy - base) * CM_TO_K <= cfg.e_max + 1e-9]
        by_label = {c.labels: c for c in full}
        self.initial = []
        for lab in cfg.initial:
            if lab not in by_label:
                raise ConfigurationError(f"initial CMS {lab} is not in the basis "
                                         f"(species {cfg.species}, v_max {cfg.v_max}, j_max {cfg.j_max}"
                                         f"{', ordered pairs' if ordered else ', well-ordered pairs'})")
            self.initial.append(by_label[lab])
        if cfg.e_margin is not None:
            top = max(c.energy for c in self.initial)
            cms = [c for c in cms if (c.energy - top) * CM_TO_K <= cfg.e_margin + 1e-9]
        if cfg.dv_max is not None:
            refs = _labels(cfg.reference) or tuple(c.labels for c in self.initial)
            keep = set()
            for r in refs:
                keep.update(c.labels for c in truncate_dv(cms, cfg.dv_max, r, ordered))
            cms = [c for c in cms if c.labels in keep]
        for c in self.initial:
            if c.labels not in {x.labels for x in cms}:
                raise ConfigurationError(f"initial CMS {c} removed by the basis caps")
        self.cms = cms
        self.energy_zero = cms[0].energy
        self.pes = self._pes(cfg)

    @staticmethod
    def _curve(cfg: RunConfig) -> DiatomCurve:
        if Path(cfg.diatom).suffix or Path(cfg.diatom).exists():
            return DiatomCurve.from_file(cfg.diatom, cfg.diatom_mass)
        return preset_curve(cfg.diatom)

    @staticmethod
    def _pes(cfg: RunConfig) -> PotentialExpansion:
        pes = default_model_pes(cfg.pes)
        if cfg.isotropic_only:
            pes = pes.isotropic_only()
        if cfg.pes_b is not None:
            pes = pes.with_b(cfg.pes_b)
        return pes

    def blocks(self) -> list[tuple[int, int]]:
        return [(J, p) for J in range(self.cfg.J_max + 1) for p in (1, -1)]

    def build(self, J: int, parity: int) -> CoupledBlock:
        return build_block(self.cms, J, parity, self.cfg.symmetry, self.pes, self.levels,
                           self.cfg.reduced_mass, self.energy_zero)


_NUMERICAL = (AccuracyError, MatchingBreakdown, NumericalBreakdown, np.linalg.LinAlgError)


def exchange_operator(blk: CoupledBlock) -> tuple[np.ndarray, np.ndarray]:
    """Swap of the two molecules as a signed permutation: channel i -> perm[i] with sign[i]."""
    index = {(c.cms.labels, c.j12, c.l): i for i, c in enumerate(blk.channels)}
    perm = np.array([index[(c.cms.swapped.labels, c.j12, c.l)] for c in blk.channels], dtype=int)
    sign = np.array([exchange_phase(c.cms, c.j12, c.l) for c in blk.channels], dtype=float)
    return perm, sign


def _solve_block(blk: CoupledBlock, totals: np.ndarray, grid: RadialGrid, swap: bool = False):
    """S blocks (or error strings) for every total energy of the batch.

    With *swap* (distinguishable molecules, swap-symmetric PES) the final Y is
    averaged with its exchange image P Y P^T, so round-off cannot break the
    relabeling symmetry of S.  Entries that vanish by symmetry stay exactly zero.
    """
    out: list = [None] * totals.size
    if blk.size == 0:
        return out
    try:
        states = [propagate(blk, totals, grid)]
        batches = [np.arange(totals.size)]
    except NumericalBreakdown:
        # isolate the offending energies
        states, batches = [], []
        for i in range(totals.size):
            try:
                states.append(propagate(blk, totals[i:i + 1], grid))
                batches.append(np.array([i]))
            except NumericalBreakdown as exc:
                out[i] = str(exc)
    if swap:
        perm, sign = exchange_operator(blk)
        ss = sign[:, None] * sign[None, :]
    for st, idx in zip(states, batches):
        for row, i in enumerate(idx):
            Y = st.Y[row]
            if swap:
                Y = 0.5 * (Y + ss * Y[np.ix_(perm, perm)])
            try:
                out[i] = match_and_extract(Y, blk, totals[i], st.R)
            except _NUMERICAL as exc:
                out[i] = f"{type(exc).__name__}: {exc}"
    return out


def run_scan(cfg: RunConfig, keep_smatrix: bool = False, setup: _Setup | None = None) -> ScanResult:
    """Cross sections for every initial CMS and collision energy of *cfg*.

    Blocks J = 0..J_max are solved for all points.  With ``J_limit`` set,
    points whose J_max share of some cross section is still >= pw_tol get
    further J blocks, one J at a time, until they converge or J_limit is hit.
    """
    setup = setup or _Setup(cfg)
    ez = setup.energy_zero
    energies = sorted(set(float(e) for e in cfg.energies))
    pairs = [(i, e) for i in setup.initial for e in energies]
    totals = np.array([i.energy - ez + e * K_TO_CM for i, e in pairs])
    grid = cfg.grid
    swap = cfg.symmetry is Symmetry.DISTINGUISHABLE and setup.pes.is_exchange_symmetric()
    collected: list[list] = [[] for _ in pairs]
    errors: list[list] = [[] for _ in pairs]

    def solve(keys, active):
        blocks = [setup.build(J, p) for J, p in keys]
        work = lambda b: _solve_block(b, totals[active], grid, swap)
        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                results = list(pool.map(work, blocks))
        else:
            results = [work(b) for b in blocks]
        for (J, p), res in zip(keys, results):
            for row, n in enumerate(active):
                r = res[row]
                if isinstance(r, str):
                    errors[n].append(f"J={J} p={p:+d}: {r}")
                elif r is not None:
                    collected[n].append(r)

    def table(n):
        initial, e = pairs[n]
        try:
            return cross_sections(collected[n], initial, e, cfg.symmetry), None
        except ValueError as exc:
            return None, str(exc)

    solve(setup.blocks(), np.arange(len(pairs)))
    used = [cfg.J_max] * len(pairs)
    if cfg.J_limit is not None:
        for J in range(cfg.J_max + 1, cfg.J_limit + 1):
            active = []
            for n in range(len(pairs)):
                if errors[n]:
                    continue
                tab, err = table(n)
                if tab is not None and max(tab.last_j_fraction().values(), default=0.0) >= cfg.pw_tol:
                    active.append(n)
            if not active:
                break
            solve([(J, 1), (J, -1)], np.array(active))
            for n in active:
                used[n] = J

    points = []
    warnings = []
    for n, (initial, e) in enumerate(pairs):
        pt = ScanPoint(e, initial, None, j_max_used=used[n])
        if errors[n]:
            pt.error = "; ".join(errors[n])
            points.append(pt)
            continue
        tab, err = table(n)
        if err:
            pt.error = err
            points.append(pt)
            continue
        sbs = collected[n]
        pt.table = tab
        pt.rates = {k: rate_constant(v, e, cfg.reduced_mass) for k, v in tab.sigma.items()}
        frac = tab.last_j_fraction()
        pt.j_max_contribution = max(frac.values()) if frac else 0.0
        pt.unitarity_defect = max((s.unitarity_defect for s in sbs), default=0.0)
        pt.symmetry_defect = max((s.symmetry_defect for s in sbs), default=0.0)
        if keep_smatrix:
            pt.s_blocks = sbs
        if pt.j_max_contribution >= cfg.pw_tol:
            warnings.append(f"{initial.name(not cfg.symmetry.identical)} at {e:g} K: J={used[n]} "
                            f"contributes {pt.j_max_contribution:.3e} of a cross section")
        points.append(pt)
    return ScanResult(cfg, ez, setup.cms, points, warnings)


def _fmt(x: float) -> str:
    return f"{x:.10e}"


def write_scan_csv(result: ScanResult, stream=None, finals: str = "all") -> str:
    """CSV text of a scan (also written to *stream* if given).

    Rows are ordered by energy, initial CMS, then final CMS internal energy.
    Failed points and partial-wave warnings appear as rows whose final_cms is
    ERROR or WARNING.
    """
    cfg = result.config
    dist = not cfg.symmetry.identical
    buf = io.StringIO()
    buf.write("# diatomscat scan\n")
    buf.write(f"# config_sha256 = {cfg.digest}\n")
    buf.write(f"# config = {json.dumps(cfg.canonical(), sort_keys=True, default=list)}\n")
    buf.write("# units: E_K kelvin; sigma_A2 angstrom^2; rate_cm3s cm^3 s^-1\n")
    buf.write("# E_K is the collision energy relative to the initial CMS\n")
    buf.write(f"# energy zero: lowest CMS of the basis, {result.cms[0].name(dist)}, "
              f"{result.energy_zero:.10e} cm^-1 above the monomer minima\n")
    buf.write("# J_max_contribution: largest fraction of any cross section from the highest J "
              f"included (J_max = {cfg.J_max}"
              + (f", extended up to {cfg.J_limit} where needed" if cfg.J_limit is not None else "") + ")\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    order = {c.labels: n for n, c in enumerate(result.cms)}
    pts = sorted(result.points, key=lambda p: (p.energy, order[p.initial.labels]))
    for p in pts:
        name = p.initial.name(dist)
        if not p.ok:
            w.writerow([_fmt(p.energy), name, "ERROR", "", "", "", ""])
            continue
        tab = p.table
        keys = sorted(tab.sigma, key=lambda k: order.get(k, len(order)))
        if finals == "inelastic":
            keys = [k for k in keys if k != p.initial.labels]
        for k in keys:
            w.writerow([_fmt(p.energy), name, tab.finals[k].name(dist), _fmt(tab.sigma[k]),
                        _fmt(p.rates[k]), _fmt(p.j_max_contribution), _fmt(p.unitarity_defect)])
        w.writerow([_fmt(p.energy), name, "inelastic_total", _fmt(tab.total_inelastic),
                    _fmt(rate_constant(tab.total_inelastic, p.energy, cfg.reduced_mass)),
                    _fmt(p.j_max_contribution), _fmt(p.unitarity_defect)])
        if p.j_max_contribution >= cfg.pw_tol:
            w.writerow([_fmt(p.energy), name, "WARNING", "", "", _fmt(p.j_max_contribution),
                        _fmt(p.unitarity_defect)])
    for p in pts:
        if not p.ok:
            buf.write(f"# error {p.initial.name(dist)} at {p.energy:g} K: {p.error}\n")
    for msg in result.warnings:
        buf.write(f"# warning: {msg}\n")
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def final_state_distribution(cfg: RunConfig, initial, energy: float) -> list[tuple[CMS, float]]:
    """(final CMS, sigma) rows ordered by increasing final internal energy."""
    lab = parse_cms(initial) if isinstance(initial, str) else tuple(getattr(initial, "labels", initial))
    res = run_scan(cfg.replace(initial=(lab,), energies=(float(energy),)))
    pt = res.points[0]
    if not pt.ok:
        raise RuntimeError(f"{pt.initial} at {energy} K failed: {pt.error}")
    return [(c, pt.table[c]) for c in pt.table.ordered_finals()]


def pathway_finals(initial: Sequence[int]) -> tuple[tuple, tuple]:
    """(rotational, vibrational) pathway finals of an ordered pair [v1 j1; v2 j2].

    Rotational: the molecules exchange rotational quanta, [v1 j2; v2 j1].
    Vibrational: they exchange vibrational quanta, [v2 j1; v1 j2].
    """
    v1, j1, v2, j2 = initial
    return (v1, j2, v2, j1), (v2, j1, v1, j2)


def distinguishable_decomposition(cfg: RunConfig, initial, energy: float) -> dict:
    """Rotational and vibrational energy-transfer pathways for distinguishable molecules."""
    if cfg.symmetry is not Symmetry.DISTINGUISHABLE:
        raise ConfigurationError("distinguishable_decomposition needs symmetry = distinguishable")
    lab = parse_cms(initial) if isinstance(initial, str) else tuple(initial)
    res = run_scan(cfg.replace(initial=(lab,), energies=(float(energy),)))
    pt = res.points[0]
    if not pt.ok:
        raise RuntimeError(f"{pt.initial} at {energy} K failed: {pt.error}")
    rot, vib = pathway_finals(lab)
    return {"initial": lab, "energy": float(energy), "rotational": (rot, pt.table[rot]),
            "vibrational": (vib, pt.table[vib]), "table": pt.table}


def family(labels: Sequence[int]) -> str:
    v1, j1, v2, j2 = labels
    return f"(v{j1}v'{j2})"


def initial_cms_scan(cfg: RunConfig, initials: Sequence, energy: float) -> list[dict]:
    """Total inelastic cross section per initial CMS, each run in its own basis.

    Basis caps relative to the initial state (dv_max, e_margin) are applied
    per initial CMS.
    """
    rows = []
    for item in initials:
        lab = parse_cms(item) if isinstance(item, str) else tuple(item)
        res = run_scan(cfg.replace(initial=(lab,), energies=(float(energy),), reference=()))
        pt = res.points[0]
        rows.append({"initial": lab, "family": family(lab), "energy": float(energy),
                     "sigma_inelastic": pt.table.total_inelastic if pt.ok else float("nan"),
                     "error": pt.error})
    return rows
