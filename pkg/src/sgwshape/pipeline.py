"""Batch orchestration: manifest in, per-stratum comparison report out.

A manifest CSV (header ``path,subject,group,bone,side``) lists one mesh
per row. Rows sharing a (bone, side) pair form a stratum; each stratum is
analyzed independently: load meshes, solve eigenpairs, build signatures,
aggregate global descriptors, then run the PCA + MANOVA + permutation
chain. Failures stay local to their stratum and are recorded in the
report instead of aborting the run.

Descriptors and eigensystems are cached under a content-addressed scheme
(mesh geometry hash plus the parameters that shape the result), with
atomic write-then-rename updates. A rerun against a warm cache performs
no eigensolves and produces byte-identical reports.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import stats
from .eigen import EigenBasis, solve_eigen
from .errors import (
    NUMERICAL_ERRORS,
    InvalidParam,
    SgwError,
    ValidationError,
)
from .gsgw import GsgwVector, aggregate
from .laplacian import laplacian_matrices
from .mesh_io import TriangleMesh, load_mesh, make_synthetic, write_mesh
from .sgws import KernelConfig, mexican_hat, signature_matrix

__all__ = [
    "ManifestEntry",
    "DatasetManifest",
    "RunConfig",
    "StratumResult",
    "RunResult",
    "SweepCell",
    "SweepResult",
    "RunDiagnostics",
    "run_group_comparison",
    "parameter_sweep",
    "gsgw_for_mesh",
    "make_two_class_manifest",
    "make_null_manifest",
]

SIDES = ("left", "right")

MANIFEST_HEADER = ["path", "subject", "group", "bone", "side"]

KERNELS = {"mexhat": mexican_hat}

SIGNIFICANCE_LEVEL = 0.05

_CACHE_MAGIC = b"SGWCACHE1\n"


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    subject: str
    group: str
    bone: str
    side: str


@dataclass(frozen=True)
class DatasetManifest:
    """Validated dataset listing; every path resolves at load time."""

    entries: tuple
    root: str

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        p = Path(path)
        if not p.is_file():
            raise ValidationError(f"{p}: no such manifest file")
        root = p.parent
        with p.open(newline="") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise ValidationError(f"{p}: empty manifest") from None
            if [h.strip() for h in header] != MANIFEST_HEADER:
                raise ValidationError(
                    f"{p}: header must be {','.join(MANIFEST_HEADER)}, got {','.join(header)}"
                )
            entries = []
            for lineno, row in enumerate(reader, 2):
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) != 5:
                    raise ValidationError(f"{p}:{lineno}: expected 5 fields, got {len(row)}")
                mesh_path, subject, group, bone, side = (cell.strip() for cell in row)
                if side not in SIDES:
                    raise ValidationError(
                        f"{p}:{lineno}: side must be one of {SIDES}, got {side!r}"
                    )
                resolved = Path(mesh_path)
                if not resolved.is_absolute():
                    resolved = root / resolved
                if not resolved.is_file():
                    raise ValidationError(f"{p}:{lineno}: mesh file {resolved} does not exist")
                entries.append(ManifestEntry(str(resolved), subject, group, bone, side))
        if not entries:
            raise ValidationError(f"{p}: manifest has no data rows")
        seen = {}
        for entry in entries:
            key = (entry.subject, entry.bone, entry.side)
            if key in seen:
                raise ValidationError(f"{p}: duplicate (subject, bone, side) triple {key}")
            seen[key] = entry
        return cls(entries=tuple(entries), root=str(root))

    def strata(self) -> dict:
        """Entries grouped by (bone, side), keys sorted, manifest order kept."""
        grouped: dict = {}
        for entry in self.entries:
            grouped.setdefault((entry.bone, entry.side), []).append(entry)
        return {key: grouped[key] for key in sorted(grouped)}


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one batch run. Defaults follow the reference setup."""

    k: int = 31
    R: int = 30
    pca_dims: int = 18
    n_perm: int = 1000
    seed: int = 0
    kernel_id: str = "mexhat"
    lumping: str = "mixed"
    area_factor: bool = True
    normalize: bool = False
    method: str = "auto"
    cache_dir: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.k < 2:
            raise InvalidParam(f"k must be >= 2, got {self.k}")
        if self.R < 1:
            raise InvalidParam(f"R must be >= 1, got {self.R}")
        if self.pca_dims < 1:
            raise InvalidParam(f"pca_dims must be >= 1, got {self.pca_dims}")
        if self.n_perm < 1:
            raise InvalidParam(f"n_perm must be >= 1, got {self.n_perm}")
        if self.jobs < 1:
            raise InvalidParam(f"jobs must be >= 1, got {self.jobs}")
        if self.kernel_id not in KERNELS:
            raise InvalidParam(
                f"unknown kernel {self.kernel_id!r}; expected one of {sorted(KERNELS)}"
            )

    def science_dict(self) -> dict:
        """The parameters that determine results (reported verbatim)."""
        return {
            "k": self.k,
            "R": self.R,
            "pca_dims": self.pca_dims,
            "n_perm": self.n_perm,
            "seed": self.seed,
            "kernel_id": self.kernel_id,
            "lumping": self.lumping,
            "area_factor": self.area_factor,
            "normalize": self.normalize,
            "method": self.method,
        }


@dataclass
class RunDiagnostics:
    """In-memory counters; never written into reports."""

    eigensolves: int = 0
    eigen_cache_hits: int = 0
    gsgw_cache_hits: int = 0

    def absorb(self, other: "RunDiagnostics") -> None:
        self.eigensolves += other.eigensolves
        self.eigen_cache_hits += other.eigen_cache_hits
        self.gsgw_cache_hits += other.gsgw_cache_hits


@dataclass(frozen=True)
class StratumResult:
    bone: str
    side: str
    n_shapes: int
    groups: tuple
    comparison: stats.GroupComparison | None = None
    error: str | None = None
    error_kind: str | None = None  # "usage" or "numerical" when error is set

    def row(self) -> dict:
        c = self.comparison
        return {
            "bone": self.bone,
            "side": self.side,
            "n_shapes": self.n_shapes,
            "groups": list(self.groups),
            "wilks_lambda": None if c is None else c.statistic,
            "manova_p": None if c is None else c.manova_p,
            "permutation_p": None if c is None else c.permutation_p,
            "manova_significant": None if c is None else c.manova_p < SIGNIFICANCE_LEVEL,
            "permutation_significant": None
            if c is None
            else c.permutation_p < SIGNIFICANCE_LEVEL,
            "n_permutations": None if c is None else c.n_permutations,
            "error": self.error,
        }


_REPORT_COLUMNS = [
    "bone",
    "side",
    "n_shapes",
    "groups",
    "wilks_lambda",
    "manova_p",
    "permutation_p",
    "manova_significant",
    "permutation_significant",
    "n_permutations",
    "error",
]


@dataclass(frozen=True)
class RunResult:
    strata: tuple
    config: RunConfig
    diagnostics: RunDiagnostics = field(compare=False, default_factory=RunDiagnostics)

    def report_dict(self) -> dict:
        return {
            "config": self.config.science_dict(),
            "strata": [s.row() for s in self.strata],
        }

    def write_json(self, path) -> None:
        text = json.dumps(self.report_dict(), sort_keys=True, indent=2)
        _atomic_write_bytes(Path(path), (text + "\n").encode())

    def write_csv(self, path) -> None:
        lines = [",".join(_REPORT_COLUMNS)]
        for stratum in self.strata:
            row = stratum.row()
            cells = []
            for col in _REPORT_COLUMNS:
                value = row[col]
                if value is None:
                    cells.append("")
                elif col == "groups":
                    cells.append("|".join(value))
                elif isinstance(value, bool):
                    cells.append(str(value).lower())
                elif isinstance(value, float):
                    cells.append(repr(value))
                elif col == "error":
                    cells.append('"' + str(value).replace('"', "'") + '"')
                else:
                    cells.append(str(value))
            lines.append(",".join(cells))
        _atomic_write_bytes(Path(path), ("\n".join(lines) + "\n").encode())

    def summary_table(self) -> str:
        """Human-readable table; * marks p below the significance level."""
        header = f"{'bone':<14}{'side':<7}{'n':>3}  {'wilks':>12}  {'manova_p':>12}  {'perm_p':>12}"
        lines = [header, "-" * len(header)]
        for stratum in self.strata:
            c = stratum.comparison
            if c is None:
                lines.append(
                    f"{stratum.bone:<14}{stratum.side:<7}{stratum.n_shapes:>3}  "
                    f"skipped: {stratum.error}"
                )
                continue
            mark_m = "*" if c.manova_p < SIGNIFICANCE_LEVEL else " "
            mark_p = "*" if c.permutation_p < SIGNIFICANCE_LEVEL else " "
            lines.append(
                f"{stratum.bone:<14}{stratum.side:<7}{stratum.n_shapes:>3}  "
                f"{c.statistic:>12.6g}  {c.manova_p:>11.4g}{mark_m}  "
                f"{c.permutation_p:>11.4g}{mark_p}"
            )
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# content-addressed cache


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.tmp{os.getpid()}")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def _write_blob(path: Path, kind: str, meta: dict, arrays: dict) -> None:
    """Versioned binary blob: magic, JSON header line, raw array bytes."""
    header = {
        "kind": kind,
        "meta": meta,
        "arrays": [
            {"name": name, "dtype": str(arr.dtype), "shape": list(arr.shape)}
            for name, arr in arrays.items()
        ],
    }
    payload = _CACHE_MAGIC + (json.dumps(header, sort_keys=True) + "\n").encode()
    payload += b"".join(np.ascontiguousarray(arr).tobytes() for arr in arrays.values())
    _atomic_write_bytes(path, payload)


def _read_blob(path: Path, kind: str):
    """Return (meta, arrays) or None when missing/corrupt/mismatched."""
    try:
        data = path.read_bytes()
    except OSError:
        return None
    if not data.startswith(_CACHE_MAGIC):
        return None
    try:
        end = data.index(b"\n", len(_CACHE_MAGIC))
        header = json.loads(data[len(_CACHE_MAGIC) : end])
        if header["kind"] != kind:
            return None
        arrays = {}
        offset = end + 1
        for spec in header["arrays"]:
            dtype = np.dtype(spec["dtype"])
            shape = tuple(spec["shape"])
            count = int(np.prod(shape, dtype=np.int64)) if shape else 1
            arr = np.frombuffer(data, dtype=dtype, count=count, offset=offset).reshape(shape)
            offset += arr.nbytes
            arrays[spec["name"]] = arr
        return header["meta"], arrays
    except (KeyError, ValueError, TypeError, json.JSONDecodeError):
        return None


def _gsgw_cache_key(cfg: RunConfig) -> str:
    return (
        f"{cfg.lumping}-k{cfg.k}-R{cfg.R}-{cfg.kernel_id}"
        f"-af{int(cfg.area_factor)}-n{int(cfg.normalize)}"
    )


def _load_or_solve_eigen(
    mesh: TriangleMesh, cfg: RunConfig, diagnostics: RunDiagnostics, k: int | None = None
) -> EigenBasis:
    """Eigen cache lookup keyed by mesh hash and lumping; k may exceed cfg.k."""
    want_k = cfg.k if k is None else k
    cache_path = None
    if cfg.cache_dir is not None:
        name = f"eigen-{mesh.content_hash}-{cfg.lumping}.sgwc"
        cache_path = Path(cfg.cache_dir) / name
        hit = _read_blob(cache_path, "eigen")
        if hit is not None:
            meta, arrays = hit
            if (
                meta.get("mesh_hash") == mesh.content_hash
                and meta.get("lumping") == cfg.lumping
                and meta.get("k", 0) >= want_k
            ):
                diagnostics.eigen_cache_hits += 1
                basis = EigenBasis(
                    arrays["eigenvalues"],
                    arrays["eigenvectors"],
                    arrays["vertex_areas"],
                    method=meta.get("method", "dense"),
                )
                return basis.truncate(want_k)

    stiffness, mass = laplacian_matrices(mesh, lumping=cfg.lumping)
    basis = solve_eigen(stiffness, mass, want_k, method=cfg.method)
    diagnostics.eigensolves += 1
    if cache_path is not None:
        _write_blob(
            cache_path,
            "eigen",
            {
                "mesh_hash": mesh.content_hash,
                "lumping": cfg.lumping,
                "k": basis.k,
                "m": basis.m,
                "method": basis.method,
            },
            {
                "eigenvalues": basis.eigenvalues,
                "eigenvectors": basis.eigenvectors,
                "vertex_areas": basis.vertex_areas,
            },
        )
    return basis


def gsgw_for_mesh(
    mesh: TriangleMesh, cfg: RunConfig, diagnostics: RunDiagnostics | None = None
) -> GsgwVector:
    """Global descriptor of one mesh under cfg, using the cache when set."""
    if diagnostics is None:
        diagnostics = RunDiagnostics()
    cache_path = None
    if cfg.cache_dir is not None:
        name = f"gsgw-{mesh.content_hash}-{_gsgw_cache_key(cfg)}.sgwc"
        cache_path = Path(cfg.cache_dir) / name
        hit = _read_blob(cache_path, "gsgw")
        if hit is not None:
            meta, arrays = hit
            if meta.get("mesh_hash") == mesh.content_hash and meta.get(
                "key"
            ) == _gsgw_cache_key(cfg):
                diagnostics.gsgw_cache_hits += 1
                return GsgwVector(arrays["g"], R=cfg.R, mesh_hash=mesh.content_hash)

    basis = _load_or_solve_eigen(mesh, cfg, diagnostics)
    kernel_cfg = KernelConfig.from_eigen(
        basis,
        cfg.R,
        kernel=KERNELS[cfg.kernel_id],
        area_factor=cfg.area_factor,
        kernel_id=cfg.kernel_id,
    )
    sig = signature_matrix(basis, kernel_cfg)
    vector = aggregate(
        sig, basis.vertex_areas, mesh_hash=mesh.content_hash, normalize=cfg.normalize
    )
    if cache_path is not None:
        _write_blob(
            cache_path,
            "gsgw",
            {"mesh_hash": mesh.content_hash, "key": _gsgw_cache_key(cfg)},
            {"g": vector.values},
        )
    return vector


# ---------------------------------------------------------------------------
# batch runs


def _stratum_seed(seed: int, bone: str, side: str) -> int:
    """Independent permutation seed per stratum, stable across runs."""
    digest = hashlib.sha256(f"{seed}|{bone}|{side}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _descriptor_rows(entries, cfg: RunConfig):
    """GSGW vectors for the stratum's entries, preserving order.

    Returns (matrix rows, per-shape diagnostics). Raises the first shape
    error annotated with subject and stage.
    """

    def one(entry: ManifestEntry):
        local = RunDiagnostics()
        stage = "load"
        try:
            mesh = load_mesh(entry.path)
            stage = "descriptor"
            vector = gsgw_for_mesh(mesh, cfg, local)
        except SgwError as exc:
            kind = "numerical" if isinstance(exc, NUMERICAL_ERRORS) else "usage"
            raise _StratumFailure(f"{entry.subject} [{stage}]: {exc}", kind) from exc
        return vector.values, local

    if cfg.jobs > 1 and len(entries) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(one, entries))
    else:
        outcomes = [one(entry) for entry in entries]
    rows = [vec for vec, _ in outcomes]
    diag = RunDiagnostics()
    for _, local in outcomes:
        diag.absorb(local)
    return rows, diag


class _StratumFailure(Exception):
    def __init__(self, message: str, kind: str):
        super().__init__(message)
        self.kind = kind


def run_group_comparison(manifest: DatasetManifest, cfg: RunConfig) -> RunResult:
    """Full pipeline over every (bone, side) stratum of the manifest.

    Strata are processed independently; a failure (missing group, corrupt
    mesh, numerical breakdown) is recorded on its stratum and does not
    abort the others.
    """
    diagnostics = RunDiagnostics()
    results = []
    for (bone, side), entries in manifest.strata().items():
        groups = tuple(dict.fromkeys(entry.group for entry in entries))
        base = {
            "bone": bone,
            "side": side,
            "n_shapes": len(entries),
            "groups": groups,
        }
        if len(groups) != 2:
            results.append(
                StratumResult(
                    **base,
                    error=f"need exactly 2 groups, found {len(groups)}: {list(groups)}",
                    error_kind="usage",
                )
            )
            continue
        try:
            rows, stratum_diag = _descriptor_rows(entries, cfg)
            diagnostics.absorb(stratum_diag)
            data = stats.DataMatrix(
                np.vstack(rows),
                labels=tuple(entry.group for entry in entries),
                ids=tuple(entry.subject for entry in entries),
            )
            comparison = stats.compare_groups(
                data, cfg.pca_dims, cfg.n_perm, _stratum_seed(cfg.seed, bone, side)
            )
        except _StratumFailure as exc:
            results.append(StratumResult(**base, error=str(exc), error_kind=exc.kind))
            continue
        except SgwError as exc:
            kind = "numerical" if isinstance(exc, NUMERICAL_ERRORS) else "usage"
            results.append(
                StratumResult(**base, error=f"[stats] {exc}", error_kind=kind)
            )
            continue
        results.append(StratumResult(**base, comparison=comparison))
    return RunResult(strata=tuple(results), config=cfg, diagnostics=diagnostics)


@dataclass(frozen=True)
class SweepCell:
    R: int
    k: int
    stratum: StratumResult


@dataclass(frozen=True)
class SweepResult:
    cells: tuple
    diagnostics: RunDiagnostics = field(compare=False, default_factory=RunDiagnostics)

    def write_csv(self, path) -> None:
        lines = ["R,k," + ",".join(_REPORT_COLUMNS)]
        for cell in self.cells:
            row = cell.stratum.row()
            cells = [str(cell.R), str(cell.k)]
            for col in _REPORT_COLUMNS:
                value = row[col]
                if value is None:
                    cells.append("")
                elif col == "groups":
                    cells.append("|".join(value))
                elif isinstance(value, bool):
                    cells.append(str(value).lower())
                elif isinstance(value, float):
                    cells.append(repr(value))
                elif col == "error":
                    cells.append('"' + str(value).replace('"', "'") + '"')
                else:
                    cells.append(str(value))
            lines.append(",".join(cells))
        _atomic_write_bytes(Path(path), ("\n".join(lines) + "\n").encode())


def parameter_sweep(manifest: DatasetManifest, cfg: RunConfig, Rs, ks) -> SweepResult:
    """run_group_comparison over an (R, k) grid, reusing cached spectra.

    When a cache directory is set, each mesh is eigensolved once at the
    largest k of the grid and every grid cell truncates from that cache.
    """
    Rs = [int(r) for r in Rs]
    ks = [int(k) for k in ks]
    if not Rs or not ks:
        raise InvalidParam("sweep needs at least one R and one k")
    for r in Rs:
        if r < 1:
            raise InvalidParam(f"R must be >= 1, got {r}")
    for k in ks:
        if k < 2:
            raise InvalidParam(f"k must be >= 2, got {k}")

    diagnostics = RunDiagnostics()
    if cfg.cache_dir is not None:
        k_top = max(ks)
        for path in dict.fromkeys(entry.path for entry in manifest.entries):
            _load_or_solve_eigen(load_mesh(path), cfg, diagnostics, k=k_top)

    cells = []
    for r in Rs:
        for k in ks:
            run = run_group_comparison(manifest, replace(cfg, R=r, k=k))
            diagnostics.absorb(run.diagnostics)
            cells.extend(SweepCell(R=r, k=k, stratum=s) for s in run.strata)
    return SweepResult(cells=tuple(cells), diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# synthetic populations


def _write_manifest_csv(path: Path, rows) -> None:
    lines = [",".join(MANIFEST_HEADER)]
    lines += [",".join(row) for row in rows]
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def make_two_class_manifest(
    out_dir,
    n_per_group: int = 10,
    subdivisions: int = 3,
    axes=(1.3, 1.0, 1.0),
    amplitude: float = 0.05,
    seed: int = 0,
    bone: str = "synthetic",
    side: str = "left",
) -> Path:
    """Write a two-class population (bumpy spheres vs bumpy ellipsoids).

    Class "sphere" uses unit axes; class "ellipsoid" uses `axes`. Each shape
    carries its own bump-field seed, so within-class variation comes from
    the seeded perturbations alone. Returns the manifest path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(n_per_group):
        mesh = make_synthetic(
            "bumpy_sphere", subdivisions, axes=(1.0, 1.0, 1.0),
            amplitude=amplitude, seed=seed + i,
        )
        name = f"sphere_{i:03d}.off"
        write_mesh(mesh, out / name)
        rows.append([name, f"s{i:03d}", "sphere", bone, side])
    for i in range(n_per_group):
        mesh = make_synthetic(
            "bumpy_sphere", subdivisions, axes=axes,
            amplitude=amplitude, seed=seed + n_per_group + i,
        )
        name = f"ellipsoid_{i:03d}.off"
        write_mesh(mesh, out / name)
        rows.append([name, f"e{i:03d}", "ellipsoid", bone, side])
    manifest_path = out / "manifest.csv"
    _write_manifest_csv(manifest_path, rows)
    return manifest_path


def make_null_manifest(
    out_dir,
    n: int = 20,
    subdivisions: int = 3,
    amplitude: float = 0.05,
    mesh_seed: int = 0,
    split_seed: int = 0,
    bone: str = "synthetic",
    side: str = "left",
) -> Path:
    """Write one population of bumpy spheres under a random balanced split.

    The meshes depend only on `mesh_seed`, so reruns with different
    `split_seed` values reuse identical mesh files (and their caches); only
    the group assignment changes. Returns the manifest path, which carries
    the split seed in its name.
    """
    if n < 4 or n % 2:
        raise InvalidParam(f"need an even population of at least 4, got {n}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for i in range(n):
        name = f"pop_{i:03d}.off"
        mesh = make_synthetic(
            "bumpy_sphere", subdivisions, amplitude=amplitude, seed=mesh_seed + i
        )
        write_mesh(mesh, out / name)
        names.append(name)
    order = np.random.default_rng(split_seed).permutation(n)
    rows = []
    for rank, i in enumerate(order):
        group = "a" if rank < n // 2 else "b"
        rows.append([names[i], f"p{i:03d}", group, bone, side])
    rows.sort(key=lambda row: row[0])
    manifest_path = out / f"manifest_split{split_seed}.csv"
    _write_manifest_csv(manifest_path, rows)
    return manifest_path
